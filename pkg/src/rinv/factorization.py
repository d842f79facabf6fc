"""Factor a monic polynomial in the Laplacian into linear factors (Lap + xi_j)."""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from .exceptions import ConvergenceError

MAX_ITER = 500
ROOT_TOL = 1e-10
_EPS = np.finfo(float).eps
_POLISH_DPS = 40


@dataclass(frozen=True)
class PolynomialSpec:
    """z^m + a_{m-1} z^{m-1} + ... + a_0, stored as (a_0, ..., a_{m-1})."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(complex(a) for a in self.coefficients)
        if len(coeffs) < 1:
            raise ValueError("polynomial degree m must be >= 1")
        if not all(np.isfinite(a.real) and np.isfinite(a.imag) for a in coeffs):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    def ascending(self) -> np.ndarray:
        """All m + 1 coefficients, constant term first, leading 1 last."""
        return np.array(self.coefficients + (1.0,), dtype=complex)

    def __call__(self, z):
        # Horner on the ascending coefficients
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for a in reversed(self.coefficients):
            out = out * z + a
        return out

    def scaled(self, lam: float) -> "PolynomialSpec":
        """Coefficients a_j / lam^(m-j): the polynomial of Lap_y when x = y/sqrt(lam) + x0."""
        m = self.degree
        return PolynomialSpec(tuple(a / lam ** (m - j) for j, a in enumerate(self.coefficients)))


@dataclass(frozen=True)
class FactoredOperator:
    shifts: tuple
    source: PolynomialSpec

    @property
    def degree(self) -> int:
        return len(self.shifts)


def _horner_with_derivative(coeffs_desc, z):
    p = np.full_like(z, coeffs_desc[0])
    dp = np.zeros_like(z)
    bound = np.abs(p)
    az = np.abs(z)
    for a in coeffs_desc[1:]:
        dp = dp * z + p
        p = p * z + a
        bound = bound * az + abs(a)
    return p, dp, bound


def _initial_guesses(coeffs_desc):
    m = len(coeffs_desc) - 1
    # Fujiwara-type radius; rotation offset avoids symmetric stalls
    mags = [abs(coeffs_desc[k]) ** (1.0 / k) for k in range(1, m + 1)]
    mags[-1] = (abs(coeffs_desc[-1]) / 2.0) ** (1.0 / m)
    radius = 2.0 * max(mags) if max(mags) > 0 else 1.0
    centroid = -coeffs_desc[1] / m
    angles = 2 * np.pi * np.arange(m) / m + 0.4
    return centroid + 0.5 * radius * np.exp(1j * angles)


def find_roots(spec: PolynomialSpec, max_iter: int = MAX_ITER) -> np.ndarray:
    """
    All m roots of the monic polynomial, with multiplicity, by Aberth-Ehrlich
    simultaneous iteration from a perturbed circle.

    A root is accepted once |P(z)| is within a small multiple of the Horner
    rounding bound.  Returns the roots in canonical order.

    Raises
    ------
    ConvergenceError
        If some root is still moving after ``max_iter`` sweeps; ``best`` holds
        the last iterate.
    """
    desc = spec.ascending()[::-1]
    m = spec.degree
    if m == 1:
        return canonical_order(np.array([-desc[1]]))
    z = _initial_guesses(desc)
    done = np.zeros(m, dtype=bool)
    for _ in range(max_iter):
        p, dp, bound = _horner_with_derivative(desc, z)
        done |= np.abs(p) <= 8 * m * _EPS * bound
        if done.all():
            break
        active = ~done
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        repulsion = (1.0 / diff).sum(axis=1) - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = p / dp
            step = newton / (1.0 - newton * repulsion)
        bad = ~np.isfinite(step)
        step[bad] = 1e-8 * (1.0 + np.abs(z[bad]))
        z = np.where(active, z - step, z)
    else:
        raise ConvergenceError(
            f"root iteration did not converge in {max_iter} sweeps", best=z
        )
    return canonical_order(_polish(spec, z))


def _polish(spec, z):
    """Newton steps in extended precision until each root is correctly rounded.

    Double-precision Horner cannot resolve |P(z)| below eps * sum |a_j||z|^j, so
    the simultaneous iteration stops early for large roots.  A step is rejected
    if it would carry a root halfway towards a neighbour.
    """
    out = z.copy()
    with mpmath.workdps(_POLISH_DPS):
        coeffs = [mpmath.mpc(c) for c in spec.ascending()[::-1]]
        for k, zk in enumerate(z):
            others = np.delete(z, k)
            reach = 0.5 * np.abs(others - zk).min() if others.size else np.inf
            w = mpmath.mpc(zk)
            for _ in range(12):
                p, dp = mpmath.polyval(coeffs, w, derivative=True)
                if dp == 0:
                    break
                step = p / dp
                w -= step
                if abs(step) <= 1e-18 * max(1.0, abs(w)):
                    break
            if abs(complex(w) - zk) < reach:
                out[k] = complex(w)
    return out


def canonical_order(values) -> np.ndarray:
    """Sort by real then imaginary part, ignoring sub-1e-9 jitter; snap roundoff zeros."""
    values = np.asarray(values, dtype=complex)
    scale = np.maximum(1.0, np.abs(values))
    re = np.where(np.abs(values.real) <= 1e-14 * scale, 0.0, values.real) + 0.0
    im = np.where(np.abs(values.imag) <= 1e-14 * scale, 0.0, values.imag) + 0.0
    values = re + 1j * im
    keys = sorted(range(len(values)),
                  key=lambda i: (round(values[i].real, 9), round(values[i].imag, 9)))
    return values[keys]


def factor_operator(spec: PolynomialSpec) -> FactoredOperator:
    """P(Lap) = prod_j (Lap + xi_j) with xi_j = -root_j."""
    roots = find_roots(spec)
    shifts = canonical_order(-roots)
    return FactoredOperator(tuple(complex(s) for s in shifts), spec)


def reconstruct(fo) -> PolynomialSpec:
    """Expand prod_j (z + xi_j) back into a monic coefficient list."""
    shifts = fo.shifts if isinstance(fo, FactoredOperator) else tuple(fo)
    poly = np.array([1.0 + 0j])  # ascending
    for xi in shifts:
        poly = np.concatenate([[0.0], poly]) + xi * np.concatenate([poly, [0.0]])
    return PolynomialSpec(tuple(poly[:-1]))


def root_residuals(spec: PolynomialSpec, roots) -> np.ndarray:
    """|P(r)| for each root, evaluated in extended precision at the double-valued r."""
    with mpmath.workdps(_POLISH_DPS):
        coeffs = [mpmath.mpc(c) for c in spec.ascending()[::-1]]
        return np.array([float(abs(mpmath.polyval(coeffs, mpmath.mpc(complex(r)))))
                         for r in np.atleast_1d(roots)])
