"""
Unweighted counterexample: f in L2(R) whose solutions of u'' = f are not.

    f(x) = 1/x on x >= 1,  x on 0 < x < 1,  0 on x <= 0
    u(x) = -x/2 + x ln x + 2/3          (x >= 1, both free constants set to 0)

u grows like x ln x, so int_1^R u^2 dx diverges, while int |f|^2 = 4/3.  The
same f lies in the Gaussian-weighted space, where the minimal-norm solve obeys
the 1/8 bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.integrate import quad, simpson

from .hermite import TruncationConfig, gauss_hermite_rule, project_samples
from .solver import ChainSolver, SolveConfig, certify_bound

FD_STEP = 1e-4
FD_RTOL = 1e-5
PANELS_PER_DECADE = 10_000
RHS_ENERGY = 4.0 / 3.0


def rhs(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inner = (x > 0) & (x < 1)
    outer = x >= 1
    out[inner] = x[inner]
    out[outer] = 1.0 / x[outer]
    return out


def closed_form_u(x, c1: float = 0.0, c2: float = 0.0):
    """Closed-form solution on x >= 1."""
    x = np.asarray(x, dtype=float)
    return -x / 2 + x * np.log(x) + 2.0 / 3.0 + c1 * x + c2


def second_derivative_errors(points, h: float = FD_STEP) -> np.ndarray:
    """
    Relative error of the central difference u'' against 1/x at each point.

    Evaluated at 40 digits: in doubles the cancellation error grows like
    |u| eps / h^2 and swamps the 1e-5 tolerance once x reaches a few dozen.
    """
    errs = []
    with mpmath.workdps(40):
        def u(t):
            return -t / 2 + t * mpmath.log(t) + mpmath.mpf(2) / 3
        hh = mpmath.mpf(h)
        for p in points:
            t = mpmath.mpf(float(p))
            fd = (u(t + hh) - 2 * u(t) + u(t - hh)) / hh ** 2
            errs.append(float(abs(fd - 1 / t) * t))
    return np.array(errs)


def unweighted_energy(R: float, panels_per_decade: int = PANELS_PER_DECADE) -> float:
    """int_1^R u(x)^2 dx by composite Simpson."""
    if R <= 1:
        return 0.0
    panels = max(2, int(math.ceil(panels_per_decade * math.log10(R))))
    panels += panels % 2
    x = np.linspace(1.0, R, panels + 1)
    return float(simpson(closed_form_u(x) ** 2, x=x))


def rhs_energy() -> float:
    """int_R |f|^2 dx by adaptive quadrature (exact value 4/3)."""
    inner, _ = quad(lambda t: t * t, 0.0, 1.0)
    outer, _ = quad(lambda t: t ** -2, 1.0, np.inf)
    return inner + outer


@dataclass
class CounterexampleResult:
    energies: list                   # (R, T(R)) rows
    fd_max_error: float
    rhs_energy: float
    weighted_ratio: float
    weighted_bound: float
    weighted_passed: bool
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def weighted_solve(test_degree: int = 20, tolerance: float = 0.05):
    """Minimal-norm solve of u'' = f in L2(exp(-x^2)), f projected by quadrature."""
    cfg = SolveConfig(1, test_degree)
    solver = ChainSolver((0.0,), cfg)
    trial = solver.trial
    rule = gauss_hermite_rule(2 * trial.max_degree)
    f = project_samples(lambda p: rhs(p[:, 0]), trial, rule)
    report = solver.solve(f)
    return report, certify_bound(report, tolerance)


def run_counterexample(rmax: float = 1000.0, grid: int = 25,
                       test_degree: int = 20) -> CounterexampleResult:
    if not rmax > 1:
        raise ValueError(f"rmax must exceed 1, got {rmax!r}")
    radii = sorted({10.0, 100.0, float(rmax)})
    energies = [(R, unweighted_energy(R)) for R in radii]
    points = np.geomspace(1.0, max(rmax, 1.0 + 1e-3), max(int(grid), 2))
    fd_err = float(second_derivative_errors(points).max())
    f_energy = rhs_energy()
    report, cert = weighted_solve(test_degree)
    values = dict(energies)
    checks = {
        "u'' = 1/x (finite differences)": fd_err <= FD_RTOL,
        "int |f|^2 = 4/3": abs(f_energy - RHS_ENERGY) <= 1e-6,
        "T(R) strictly increasing": all(a[1] < b[1] for a, b in zip(energies, energies[1:])),
        "T(100)/T(10) > 10": values[100.0] / values[10.0] > 10,
        "weighted ratio <= 1/8 * 1.05": cert.passed,
    }
    return CounterexampleResult(
        energies=energies, fd_max_error=fd_err, rhs_energy=f_energy,
        weighted_ratio=report.ratio, weighted_bound=report.bound,
        weighted_passed=cert.passed, checks=checks,
    )
