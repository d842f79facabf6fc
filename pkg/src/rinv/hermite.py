"""
Orthonormal tensor Hermite basis for L2(R^n, exp(-|x|^2) dx).

Basis functions are physicists' Hermite polynomials normalized to unit norm
under the Gaussian weight,

    h_k(x) = H_k(x) / sqrt(sqrt(pi) 2^k k!),

and h_alpha(x) = prod_j h_{alpha_j}(x_j) in n dimensions.  With this choice the
weighted L2 norm of a series is the 2-norm of its coefficient vector.

Multi-indices are plain tuples of non-negative ints.  Within a truncation they
are kept in graded lexicographic order, so the basis of degree <= d is always a
prefix of the basis of degree <= d' for d' > d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .exceptions import ConvergenceError

MultiIndex = tuple  # tuple[int, ...]


def _compositions(total: int, parts: int) -> Iterator[tuple]:
    # first entry descending: (2,0), (1,1), (0,2)
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _basis(dim: int, max_degree: int) -> tuple:
    return tuple(
        idx for d in range(max_degree + 1) for idx in _compositions(d, dim)
    )


@dataclass(frozen=True)
class TruncationConfig:
    """Total-degree truncation of the tensor Hermite basis in ``dim`` variables."""

    dim: int
    max_degree: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if int(self.max_degree) != self.max_degree or self.max_degree < 0:
            raise ValueError(
                f"max_degree must be a non-negative integer, got {self.max_degree!r}"
            )

    @property
    def size(self) -> int:
        return math.comb(self.dim + self.max_degree, self.dim)

    @property
    def basis(self) -> tuple:
        return _basis(self.dim, self.max_degree)

    @cached_property
    def index_map(self) -> dict:
        return {idx: pos for pos, idx in enumerate(self.basis)}

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([sum(idx) for idx in self.basis], dtype=int)

    def with_degree(self, max_degree: int) -> "TruncationConfig":
        return TruncationConfig(self.dim, max(int(max_degree), 0))

    def validate_index(self, idx) -> tuple:
        idx = tuple(int(k) for k in idx)
        if len(idx) != self.dim:
            raise ValueError(f"index {idx} has length {len(idx)}, expected {self.dim}")
        if any(k < 0 for k in idx):
            raise ValueError(f"index {idx} has a negative entry")
        if sum(idx) > self.max_degree:
            raise ValueError(
                f"index {idx} has degree {sum(idx)} > max_degree {self.max_degree}"
            )
        return idx


def enumerate_basis(config: TruncationConfig) -> list:
    """All multi-indices of total degree <= ``config.max_degree``, graded lex order."""
    return list(config.basis)


@dataclass(frozen=True)
class WeightSpec:
    """Gaussian weight exp(-lam |x - center|^2); the default is exp(-|x|^2).

    ``center=None`` means the origin in whatever dimension the weight is used.
    """

    lam: float = 1.0
    center: tuple | None = None

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise ValueError(f"weight lambda must be positive, got {self.lam!r}")
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def is_unit(self) -> bool:
        return self.lam == 1.0 and (
            self.center is None or all(c == 0.0 for c in self.center)
        )

    def center_array(self, dim: int) -> np.ndarray:
        if self.center is None:
            return np.zeros(dim)
        if len(self.center) != dim:
            raise ValueError(
                f"weight center has length {len(self.center)}, expected {dim}"
            )
        return np.asarray(self.center, dtype=float)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        """Map x to y = sqrt(lam) (x - center)."""
        x = np.asarray(x, dtype=float)
        return np.sqrt(self.lam) * (x - self.center_array(x.shape[-1]))

    def from_unit(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return y / np.sqrt(self.lam) + self.center_array(y.shape[-1])

    def basis_scale(self, dim: int) -> float:
        # lam^(n/4) h_alpha(y) is orthonormal under exp(-lam |x - x0|^2)
        return self.lam ** (dim / 4.0)


UNIT_WEIGHT = WeightSpec()


@dataclass(frozen=True)
class QuadratureRule:
    """One-dimensional Gauss-Hermite rule for the weight exp(-x^2)."""

    nodes: np.ndarray
    weights: np.ndarray
    exactness: int

    @property
    def points_per_axis(self) -> int:
        return len(self.nodes)

    def tensor(self, dim: int) -> tuple:
        """Tensor-product nodes of shape (Q**dim, dim) and matching weights."""
        grids = np.meshgrid(*([self.nodes] * dim), indexing="ij")
        points = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*([self.weights] * dim), indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
        return points, weights


def gauss_hermite_rule(points_per_axis: int) -> QuadratureRule:
    """
    Golub-Welsch Gauss-Hermite rule.

    The Jacobi matrix of the Hermite recurrence has zero diagonal and
    off-diagonal sqrt(k/2); its eigenvalues are the nodes.  Weights are the
    Christoffel numbers 1 / sum_k h_k(x_i)^2 rather than squared eigenvector
    components, which lose all relative accuracy (and underflow to zero) at
    the outermost nodes once Q reaches a few dozen.

    Raises
    ------
    ConvergenceError
        If the tridiagonal eigen-solve does not converge.
    """
    q = int(points_per_axis)
    if q < 1:
        raise ValueError(f"points_per_axis must be >= 1, got {points_per_axis!r}")
    off = np.sqrt(np.arange(1, q) / 2.0)
    try:
        nodes = eigh_tridiagonal(np.zeros(q), off, eigvals_only=True)
    except LinAlgError as exc:
        raise ConvergenceError(
            f"Jacobi eigen-solve failed for {q} Gauss-Hermite points: {exc}"
        ) from exc
    weights = 1.0 / np.sum(hermite_table(nodes, q - 1) ** 2, axis=-1)
    # exact symmetry about the origin
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule(nodes=nodes, weights=weights, exactness=2 * q - 1)


def hermite_table(x, max_degree: int) -> np.ndarray:
    """Values h_0(x) .. h_D(x), stacked along a new last axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (max_degree + 1,))
    out[..., 0] = np.pi ** -0.25
    if max_degree >= 1:
        out[..., 1] = np.sqrt(2.0) * x * out[..., 0]
    for k in range(1, max_degree):
        out[..., k + 1] = (
            np.sqrt(2.0 / (k + 1)) * x * out[..., k]
            - np.sqrt(k / (k + 1.0)) * out[..., k - 1]
        )
    return out


def eval_basis(idx, x) -> float:
    """Value of the orthonormal tensor basis function h_idx at the point x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    idx = tuple(idx)
    if len(idx) != len(x):
        raise ValueError(f"index length {len(idx)} does not match point length {len(x)}")
    value = 1.0
    for k, xj in zip(idx, x):
        value *= hermite_table(xj, k)[k]
    return float(value)


def basis_matrix(config: TruncationConfig, points) -> np.ndarray:
    """Matrix B[i, a] = h_a(points[i]) for the unit weight; points has shape (P, n)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != config.dim:
        raise ValueError(f"points have dimension {points.shape[1]}, expected {config.dim}")
    tables = [hermite_table(points[:, j], config.max_degree) for j in range(config.dim)]
    idx = np.array(config.basis, dtype=int)
    out = np.ones((points.shape[0], config.size))
    for j in range(config.dim):
        out *= tables[j][:, idx[:, j]]
    return out


@dataclass
class HermiteSeries:
    """Complex coefficients over the orthonormal basis of ``config``.

    When ``weight`` is not the unit weight the basis functions are
    lam^(n/4) h_alpha(sqrt(lam) (x - x0)), orthonormal under that weight.
    """

    config: TruncationConfig
    coeffs: np.ndarray
    weight: WeightSpec = field(default=UNIT_WEIGHT)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if coeffs.shape[0] != self.config.size:
            raise ValueError(
                f"expected {self.config.size} coefficients for {self.config}, "
                f"got {coeffs.shape[0]}"
            )
        self.coeffs = coeffs
        self.weight.center_array(self.config.dim)

    @classmethod
    def zeros(cls, config: TruncationConfig, weight: WeightSpec = UNIT_WEIGHT):
        return cls(config, np.zeros(config.size, dtype=complex), weight)

    @classmethod
    def basis_element(cls, config: TruncationConfig, idx, value=1.0,
                      weight: WeightSpec = UNIT_WEIGHT):
        out = cls.zeros(config, weight)
        out.coeffs[config.index_map[config.validate_index(idx)]] = value
        return out

    @classmethod
    def from_dict(cls, config: TruncationConfig, coeffs: Mapping,
                  weight: WeightSpec = UNIT_WEIGHT):
        out = cls.zeros(config, weight)
        for idx, value in coeffs.items():
            out.coeffs[config.index_map[config.validate_index(idx)]] += value
        return out

    def to_dict(self, drop_zeros: bool = True) -> dict:
        return {
            idx: complex(c)
            for idx, c in zip(self.config.basis, self.coeffs)
            if not (drop_zeros and c == 0)
        }

    @property
    def degree(self) -> int:
        """Highest total degree carrying a nonzero coefficient (-1 for the zero series)."""
        nz = np.flatnonzero(self.coeffs)
        return int(self.config.degrees[nz].max()) if nz.size else -1

    def norm2(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def resize(self, config: TruncationConfig, truncate: bool = False) -> "HermiteSeries":
        """Same series in another truncation (zero padding, or dropping high modes)."""
        if config.dim != self.config.dim:
            raise ValueError("cannot resize across dimensions")
        if config.size >= self.config.size:
            coeffs = np.zeros(config.size, dtype=complex)
            coeffs[: self.config.size] = self.coeffs
        else:
            if not truncate and np.any(self.coeffs[config.size:] != 0):
                raise ValueError(
                    f"series of degree {self.degree} does not fit max_degree "
                    f"{config.max_degree}; pass truncate=True to project"
                )
            coeffs = self.coeffs[: config.size].copy()
        return HermiteSeries(config, coeffs, self.weight)

    def _check_compatible(self, other):
        if not isinstance(other, HermiteSeries):
            return NotImplemented
        if other.config != self.config or other.weight != self.weight:
            raise ValueError("series live in different spaces")
        return other

    def __add__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return HermiteSeries(self.config, self.coeffs + other.coeffs, self.weight)

    def __sub__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return HermiteSeries(self.config, self.coeffs - other.coeffs, self.weight)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return HermiteSeries(self.config, self.coeffs * scalar, self.weight)

    __rmul__ = __mul__

    def __neg__(self):
        return HermiteSeries(self.config, -self.coeffs, self.weight)

    def __call__(self, points) -> np.ndarray:
        """Evaluate at points of shape (P, n) (or a single point)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        y = self.weight.to_unit(points)
        scale = self.weight.basis_scale(self.config.dim)
        return scale * (basis_matrix(self.config, y) @ self.coeffs)


def inner_product(a: HermiteSeries, b: HermiteSeries) -> complex:
    """Weighted inner product <a, b> = int conj(a) b w dx, conjugate-linear in ``a``."""
    if a.config != b.config:
        raise ValueError(f"config mismatch: {a.config} vs {b.config}")
    if a.weight != b.weight:
        raise ValueError("series use different weights")
    return complex(np.vdot(a.coeffs, b.coeffs))


def project_samples(
    fn: Callable[[np.ndarray], np.ndarray],
    config: TruncationConfig,
    rule: QuadratureRule | None = None,
    weight: WeightSpec = UNIT_WEIGHT,
) -> HermiteSeries:
    """
    Project a pointwise function onto the truncated basis by tensor quadrature.

    ``fn`` receives an array of shape (P, n) of physical points and returns P
    values.  The default rule has ``max_degree + 1`` points per axis, which is
    exact for polynomial ``fn`` of degree <= ``max_degree + 1``.  Non-polynomial
    functions are aliased; nothing tries to detect that.
    """
    if rule is None:
        rule = gauss_hermite_rule(config.max_degree + 1)
    y, w = rule.tensor(config.dim)
    x = weight.from_unit(y)
    values = np.asarray(fn(x), dtype=complex).reshape(-1)
    if values.shape[0] != y.shape[0]:
        raise ValueError(f"fn returned {values.shape[0]} values for {y.shape[0]} points")
    # int f e_a w(x) dx = lam^(-n/4) sum_i w_i f(x(y_i)) h_a(y_i)
    coeffs = basis_matrix(config, y).T @ (w * values)
    coeffs /= weight.basis_scale(config.dim)
    return HermiteSeries(config, coeffs, weight)


def random_series(config: TruncationConfig, rng: np.random.Generator,
                  degree: int | None = None, complex_valued: bool = True,
                  weight: WeightSpec = UNIT_WEIGHT) -> HermiteSeries:
    """Standard-normal coefficients up to ``degree`` (default: the whole truncation)."""
    degree = config.max_degree if degree is None else min(degree, config.max_degree)
    coeffs = np.zeros(config.size, dtype=complex)
    k = config.with_degree(degree).size
    coeffs[:k] = rng.standard_normal(k)
    if complex_valued:
        coeffs[:k] += 1j * rng.standard_normal(k)
    return HermiteSeries(config, coeffs, weight)


def as_points(points: Sequence, dim: int) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1 and dim == 1:
        points = points[:, None]
    points = np.atleast_2d(points)
    if points.shape[-1] != dim:
        raise ValueError(f"points have dimension {points.shape[-1]}, expected {dim}")
    return points
