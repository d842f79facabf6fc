"""
Coefficient-space matrices of differential and multiplication operators.

Three primitive recurrences act on the orthonormal Hermite basis along one axis:

    d/dx   h_k = sqrt(2k) h_{k-1}
    x      h_k = sqrt((k+1)/2) h_{k+1} + sqrt(k/2) h_{k-1}
    d2/dx2 h_k = 2 sqrt(k(k-1)) h_{k-2}

Every other operator here (x.grad, the weighted adjoint of the Laplacian, the
commutator) is assembled from those by sums and products.  Products are always
formed through intermediate spaces large enough to hold the exact result; a
builder that would drop a nonzero entry raises unless ``truncate=True`` is
requested explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .hermite import HermiteSeries, TruncationConfig, inner_product


@dataclass(frozen=True)
class OperatorMatrix:
    """Sparse matrix between two truncated coefficient spaces.

    Rows follow ``codomain.basis``, columns ``domain.basis``.
    """

    domain: TruncationConfig
    codomain: TruncationConfig
    matrix: sp.csr_array

    def __post_init__(self):
        if self.domain.dim != self.codomain.dim:
            raise ValueError("domain and codomain dimensions differ")
        if self.matrix.shape != (self.codomain.size, self.domain.size):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match "
                f"({self.codomain.size}, {self.domain.size})"
            )

    @property
    def dim(self) -> int:
        return self.domain.dim

    def entries(self) -> dict:
        """Nonzero entries as {(row index, col index): value}."""
        coo = self.matrix.tocoo()
        rows, cols = self.codomain.basis, self.domain.basis
        return {
            (rows[i], cols[j]): v for i, j, v in zip(coo.row, coo.col, coo.data) if v != 0
        }

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return compose(self, other)
        if isinstance(other, HermiteSeries):
            return self.apply(other)
        return NotImplemented

    def apply(self, series: HermiteSeries) -> HermiteSeries:
        if series.config != self.domain:
            series = series.resize(self.domain)
        return HermiteSeries(self.codomain, self.matrix @ series.coeffs, series.weight)

    def __add__(self, other):
        self._check_same_spaces(other)
        return OperatorMatrix(self.domain, self.codomain, (self.matrix + other.matrix).tocsr())

    def __sub__(self, other):
        self._check_same_spaces(other)
        return OperatorMatrix(self.domain, self.codomain, (self.matrix - other.matrix).tocsr())

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return OperatorMatrix(self.domain, self.codomain, (self.matrix * scalar).tocsr())

    __rmul__ = __mul__

    def __neg__(self):
        return -1 * self

    @property
    def H(self) -> "OperatorMatrix":
        """Conjugate transpose, mapping codomain back to domain."""
        return OperatorMatrix(self.codomain, self.domain, self.matrix.conj().T.tocsr())

    def _check_same_spaces(self, other):
        if not isinstance(other, OperatorMatrix):
            raise TypeError(f"cannot combine OperatorMatrix with {type(other).__name__}")
        if (self.domain, self.codomain) != (other.domain, other.codomain):
            raise ValueError(
                f"space mismatch: {self.domain}->{self.codomain} vs "
                f"{other.domain}->{other.codomain}"
            )


def compose(outer: OperatorMatrix, inner: OperatorMatrix) -> OperatorMatrix:
    """outer @ inner; the intermediate spaces must agree exactly."""
    if outer.domain != inner.codomain:
        raise ValueError(
            f"cannot compose: inner maps into {inner.codomain}, outer expects {outer.domain}"
        )
    return OperatorMatrix(inner.domain, outer.codomain, (outer.matrix @ inner.matrix).tocsr())


def change_codomain(op: OperatorMatrix, codomain: TruncationConfig,
                    truncate: bool = False) -> OperatorMatrix:
    """Re-home ``op`` in another codomain by padding or dropping trailing rows.

    Valid because a lower-degree basis is a prefix of a higher-degree one.
    Dropping nonzero rows raises unless ``truncate`` is set.
    """
    if codomain.dim != op.dim:
        raise ValueError("codomain dimension differs from operator dimension")
    mat = op.matrix
    k = codomain.size
    if k >= mat.shape[0]:
        mat = sp.vstack([mat, sp.csr_array((k - mat.shape[0], mat.shape[1]))])
    else:
        if not truncate and _max_abs(mat[k:, :]) != 0.0:
            raise ValueError(f"operator image does not fit in {codomain}")
        mat = mat[:k, :]
    return OperatorMatrix(op.domain, codomain, sp.csr_array(mat))


def _codomain(domain, codomain, shift):
    if codomain is None:
        return domain.with_degree(domain.max_degree + shift)
    if codomain.dim != domain.dim:
        raise ValueError("codomain dimension differs from domain dimension")
    return codomain


def _axis_terms(domain, codomain, axis, terms, truncate):
    """Assemble sum of c(k) h_{k+s} along one axis, for (s, c) in ``terms``."""
    if not 0 <= axis < domain.dim:
        raise ValueError(f"axis {axis} out of range for dimension {domain.dim}")
    index_map = codomain.index_map
    rows, cols, vals = [], [], []
    for col, idx in enumerate(domain.basis):
        k = idx[axis]
        for shift, coef in terms:
            if k + shift < 0:
                continue
            value = coef(k)
            if value == 0:
                continue
            target = idx[:axis] + (k + shift,) + idx[axis + 1:]
            row = index_map.get(target)
            if row is None:
                if truncate:
                    continue
                raise ValueError(
                    f"image of {idx} needs {target}, outside codomain {codomain}; "
                    "enlarge the codomain or pass truncate=True"
                )
            rows.append(row)
            cols.append(col)
            vals.append(value)
    mat = sp.coo_array(
        (np.asarray(vals, dtype=float), (np.asarray(rows, dtype=int), np.asarray(cols, dtype=int))),
        shape=(codomain.size, domain.size),
    )
    return OperatorMatrix(domain, codomain, mat.tocsr())


_DERIV = ((-1, lambda k: np.sqrt(2.0 * k)),)
_COORD = ((1, lambda k: np.sqrt((k + 1) / 2.0)), (-1, lambda k: np.sqrt(k / 2.0)))
_SECOND = ((-2, lambda k: 2.0 * np.sqrt(k * (k - 1.0))),)


@lru_cache(maxsize=512)
def matrix_derivative(axis: int, domain: TruncationConfig,
                      codomain: TruncationConfig | None = None,
                      truncate: bool = False) -> OperatorMatrix:
    """d/dx_axis; default codomain has degree one lower."""
    return _axis_terms(domain, _codomain(domain, codomain, -1), axis, _DERIV, truncate)


@lru_cache(maxsize=512)
def matrix_coordinate(axis: int, domain: TruncationConfig,
                      codomain: TruncationConfig | None = None,
                      truncate: bool = False) -> OperatorMatrix:
    """Multiplication by x_axis; default codomain has degree one higher."""
    return _axis_terms(domain, _codomain(domain, codomain, 1), axis, _COORD, truncate)


@lru_cache(maxsize=512)
def matrix_identity(domain: TruncationConfig,
                    codomain: TruncationConfig | None = None,
                    truncate: bool = False) -> OperatorMatrix:
    codomain = _codomain(domain, codomain, 0)
    return _axis_terms(domain, codomain, 0, ((0, lambda k: 1.0),), truncate)


@lru_cache(maxsize=512)
def matrix_laplacian(domain: TruncationConfig,
                     codomain: TruncationConfig | None = None,
                     truncate: bool = False) -> OperatorMatrix:
    """Laplacian, summed over axes; lowers total degree by exactly two."""
    codomain = _codomain(domain, codomain, -2)
    out = _axis_terms(domain, codomain, 0, _SECOND, truncate)
    for axis in range(1, domain.dim):
        out = out + _axis_terms(domain, codomain, axis, _SECOND, truncate)
    return out


@lru_cache(maxsize=512)
def matrix_x_dot_grad(domain: TruncationConfig,
                      codomain: TruncationConfig | None = None) -> OperatorMatrix:
    """Euler operator sum_j x_j d/dx_j (degree-preserving)."""
    codomain = _codomain(domain, codomain, 0)
    mid = domain.with_degree(domain.max_degree + 1)
    out = None
    for j in range(domain.dim):
        d = matrix_derivative(j, domain, domain)
        term = compose(matrix_coordinate(j, domain, mid), d)
        out = term if out is None else out + term
    return change_codomain(out, codomain)


@lru_cache(maxsize=512)
def matrix_weighted_adjoint(domain: TruncationConfig,
                            codomain: TruncationConfig | None = None) -> OperatorMatrix:
    """
    Formal adjoint of the Laplacian under the weight exp(-|x|^2).

    Expanding conj(e^phi Lap(conj(psi) e^-phi)) at phi = |x|^2 gives

        Lap psi + 4|x|^2 psi - 2n psi - 4 x.grad psi,

    assembled here from the primitive recurrences.  Raises total degree by two.
    """
    n = domain.dim
    codomain = _codomain(domain, codomain, 2)
    if codomain.max_degree < domain.max_degree + 2:
        raise ValueError("weighted adjoint needs a codomain of degree >= domain + 2")
    mid = domain.with_degree(domain.max_degree + 1)
    sq_norm = None
    for j in range(n):
        term = compose(matrix_coordinate(j, mid, codomain), matrix_coordinate(j, domain, mid))
        sq_norm = term if sq_norm is None else sq_norm + term
    return (
        matrix_laplacian(domain, codomain)
        + 4.0 * sq_norm
        - (2.0 * n) * matrix_identity(domain, codomain)
        - 4.0 * matrix_x_dot_grad(domain, codomain)
    )


def matrix_shifted_laplacian(xi: complex, domain: TruncationConfig,
                             codomain: TruncationConfig | None = None,
                             truncate: bool = False) -> OperatorMatrix:
    """Lap + xi."""
    codomain = _codomain(domain, codomain, 0)
    return (matrix_laplacian(domain, codomain, truncate)
            + complex(xi) * matrix_identity(domain, codomain, truncate))


def matrix_shifted_adjoint(xi: complex, domain: TruncationConfig,
                           codomain: TruncationConfig | None = None) -> OperatorMatrix:
    """Weighted adjoint of Lap + xi, i.e. Lap* + conj(xi)."""
    codomain = _codomain(domain, codomain, 2)
    return (matrix_weighted_adjoint(domain, codomain)
            + np.conj(complex(xi)) * matrix_identity(domain, codomain))


# identity checks ----------------------------------------------------------


@dataclass(frozen=True)
class IdentityResidual:
    """Both sides of a scalar identity; ``relative`` scales by max(1, |lhs|, |rhs|)."""

    lhs: complex
    rhs: complex

    @property
    def residual(self) -> float:
        return float(abs(self.lhs - self.rhs))

    @property
    def relative(self) -> float:
        return self.residual / max(1.0, abs(self.lhs), abs(self.rhs))


def _max_abs(mat) -> float:
    mat = sp.csr_array(mat)
    return float(abs(mat).max()) if mat.nnz else 0.0


def check_adjointness(config: TruncationConfig) -> float:
    """max |M(Lap*: N -> N+2) - M(Lap: N+2 -> N)^H|."""
    big = config.with_degree(config.max_degree + 2)
    adj = matrix_weighted_adjoint(config, big)
    lap = matrix_laplacian(big, config)
    return _max_abs(adj.matrix - lap.H.matrix)


def commutator_matrix(config: TruncationConfig) -> OperatorMatrix:
    """Lap Lap* - Lap* Lap on degree <= N, composed through degree N + 2."""
    big = config.with_degree(config.max_degree + 2)
    lap_adj = compose(matrix_laplacian(big, big), matrix_weighted_adjoint(config, big))
    adj_lap = compose(matrix_weighted_adjoint(config, big), matrix_laplacian(config, config))
    return lap_adj - adj_lap


def check_commutator_identity(config: TruncationConfig) -> float:
    """max |[Lap, Lap*] - (8n I + 16 x.grad - 8 Lap)| over the enlarged codomain."""
    n = config.dim
    big = config.with_degree(config.max_degree + 2)
    rhs = (
        (8.0 * n) * matrix_identity(config, big)
        + 16.0 * matrix_x_dot_grad(config, big)
        - 8.0 * matrix_laplacian(config, big)
    )
    return _max_abs(commutator_matrix(config).matrix - rhs.matrix)


def _norm2(series: HermiteSeries) -> float:
    return series.norm2()


def check_norm_identity(xi: complex, phi: HermiteSeries) -> IdentityResidual:
    """
    ||H* phi||^2 against ||H phi||^2 + <phi, [Lap, Lap*] phi> for H = Lap + xi.

    The commutator term is computed by composing Lap and Lap*, not from its
    closed form, so the two sides are independent assemblies.
    """
    cfg = phi.config
    big = cfg.with_degree(cfg.max_degree + 2)
    h_adj_phi = matrix_shifted_adjoint(xi, cfg, big).apply(phi)
    h_phi = matrix_shifted_laplacian(xi, cfg).apply(phi)
    comm_phi = commutator_matrix(cfg).apply(phi)
    lhs = _norm2(h_adj_phi)
    rhs = _norm2(h_phi) + inner_product(phi.resize(big), comm_phi)
    return IdentityResidual(lhs, rhs)


def check_key_step(phi: HermiteSeries) -> IdentityResidual:
    """<phi, 2 x.grad phi - Lap phi> against sum_j ||d_j phi||^2."""
    cfg = phi.config
    lhs_vec = 2.0 * matrix_x_dot_grad(cfg).apply(phi) - matrix_laplacian(cfg, cfg).apply(phi)
    lhs = inner_product(phi, lhs_vec)
    rhs = sum(_norm2(matrix_derivative(j, cfg).apply(phi)) for j in range(cfg.dim))
    return IdentityResidual(lhs, rhs)


def check_coercivity(xi: complex, phi: HermiteSeries) -> float:
    """||(Lap + xi)* phi||^2 - 8n ||phi||^2; never negative beyond roundoff."""
    cfg = phi.config
    h_adj_phi = matrix_shifted_adjoint(xi, cfg).apply(phi)
    return _norm2(h_adj_phi) - 8.0 * cfg.dim * _norm2(phi)


def clear_operator_cache() -> None:
    """Drop memoized primitive matrices (used for cold-start timing)."""
    for fn in (matrix_derivative, matrix_coordinate, matrix_identity,
               matrix_laplacian, matrix_x_dot_grad, matrix_weighted_adjoint):
        fn.cache_clear()
