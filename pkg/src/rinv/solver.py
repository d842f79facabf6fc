"""
Minimal-norm right inverse of P(Lap) on the Gaussian-weighted space.

A single factor (Lap + xi) u = f is solved in Petrov-Galerkin form: the weak
equation is imposed against test functions of degree <= M while u ranges over
trial functions of degree <= N.  Among all such u the one of least weighted
norm is returned; it lies in the range of the adjoint of the constraint map.

For polynomial test functions the constraint Gram matrix is exactly the Gram
matrix of (Lap + xi)* phi, which is bounded below by 8n, so every stage obeys
||u||^2 <= ||f||^2 / (8n) without truncation slack as long as N >= M + 2.

A chain of m factors tests stage j against degree M + 2(j - 1).  The earlier
factors lower degree by two when they are applied back, so this is what makes
the composed residual P(Lap) u - f vanish on all of degree <= M.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .exceptions import InfeasibleSolveError
from .factorization import FactoredOperator, PolynomialSpec, factor_operator
from .hermite import UNIT_WEIGHT, HermiteSeries, TruncationConfig, WeightSpec
from .operators import OperatorMatrix, matrix_identity, matrix_laplacian

DEFAULT_RANK_TOL = 1e-12
DEFAULT_CERT_TOL = 0.05
STRICT_CERT_TOL = 1e-8


@dataclass(frozen=True)
class SolveConfig:
    dim: int
    test_degree: int = 8
    trial_degree: int | None = None
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        TruncationConfig(self.dim, self.test_degree)
        if self.trial_degree is not None and self.trial_degree < self.test_degree:
            raise ValueError("trial_degree must be >= test_degree")
        if not 0 < self.rank_tol < 1:
            raise ValueError(f"rank_tol must lie in (0, 1), got {self.rank_tol!r}")

    def trial_for(self, m: int) -> int:
        """Trial degree for an m-factor chain (default M + 2m + 4)."""
        n_trial = self.test_degree + 2 * m + 4 if self.trial_degree is None else self.trial_degree
        if n_trial < self.test_degree + 2 * m:
            raise ValueError(
                f"trial_degree {n_trial} too small for {m} stage(s) at test degree "
                f"{self.test_degree}; need >= {self.test_degree + 2 * m}"
            )
        return n_trial

    def stage_test_degree(self, stage: int) -> int:
        """Test degree of the 0-based ``stage`` in a chain."""
        return self.test_degree + 2 * stage


@dataclass(frozen=True)
class StageReport:
    shift: complex
    input_norm2: float
    output_norm2: float
    ratio: float
    bound: float
    constraint_residual: float
    test_degree: int
    rank: int


@dataclass
class SolveReport:
    stages: list
    ratio: float
    bound: float
    solution: HermiteSeries
    residual: float
    input_norm2: float
    weight: WeightSpec = field(default=UNIT_WEIGHT)

    @property
    def stage_ratio_product(self) -> float:
        return float(np.prod([s.ratio for s in self.stages]))


@dataclass(frozen=True)
class Certificate:
    passed: bool
    margin: float
    stage_margins: tuple
    tolerance: float


class MinimalNormSolver:
    """
    Least-norm solutions of A c = b from a thresholded SVD of A.

    A is split into the connected components of its sparsity graph (for
    Lap + xi these are the per-axis parity classes) and each block is
    factored separately; the singular values are the union over blocks and
    the threshold is taken relative to the largest of them.
    """

    def __init__(self, A, rank_tol: float = DEFAULT_RANK_TOL):
        mat = A.matrix if isinstance(A, OperatorMatrix) else A
        mat = sp.csr_array(mat, dtype=complex)
        mat.eliminate_zeros()
        self.shape = mat.shape
        self.rank_tol = rank_tol
        n_rows, n_cols = mat.shape
        pattern = sp.csr_array((np.ones(mat.nnz), mat.indices, mat.indptr), shape=mat.shape)
        graph = sp.block_array([[None, pattern], [pattern.T, None]], format="csr")
        _, labels = connected_components(graph, directed=False)
        row_lab, col_lab = labels[:n_rows], labels[n_rows:]
        self._blocks = []
        s_max = 0.0
        for lab in np.unique(labels):
            rows = np.flatnonzero(row_lab == lab)
            cols = np.flatnonzero(col_lab == lab)
            if rows.size == 0 or cols.size == 0:
                continue
            block = mat[rows][:, cols].toarray()
            u, s, vh = sla.svd(block, full_matrices=False, lapack_driver="gesdd")
            self._blocks.append((rows, cols, u, s, vh))
            if s.size:
                s_max = max(s_max, s[0])
        self.s_max = s_max
        cut = rank_tol * s_max
        self._blocks = [
            (rows, cols, u[:, s > cut], s[s > cut], vh[s > cut]) for rows, cols, u, s, vh in self._blocks
        ]

    @property
    def rank(self) -> int:
        return sum(len(s) for *_, s, _ in self._blocks)

    @property
    def singular_values(self) -> np.ndarray:
        return np.sort(np.concatenate([s for *_, s, _ in self._blocks] or [np.zeros(0)]))[::-1]

    def out_of_range(self, b) -> np.ndarray:
        """Norm of the part of each column of b outside range(A)."""
        b = np.asarray(b, dtype=complex)
        b2 = b.reshape(b.shape[0], -1)
        resid = b2.copy()
        for rows, _, u, _, _ in self._blocks:
            resid[rows] -= u @ (u.conj().T @ b2[rows])
        return np.linalg.norm(resid, axis=0)

    def solve(self, b, check: bool = True) -> np.ndarray:
        """Least-norm c with A c = b; b may be a vector or a (rows, k) batch."""
        b = np.asarray(b, dtype=complex)
        if b.shape[0] != self.shape[0]:
            raise ValueError(f"rhs has {b.shape[0]} rows, matrix has {self.shape[0]}")
        b2 = b.reshape(b.shape[0], -1)
        if check:
            outside = self.out_of_range(b2)
            limit = self.rank_tol * np.maximum(1.0, np.linalg.norm(b2, axis=0))
            if np.any(outside > limit):
                worst = float(outside.max())
                raise InfeasibleSolveError(
                    f"right-hand side has a component of norm {worst:.3e} outside the "
                    "range of the constraint map",
                    residual=worst,
                )
        c = np.zeros((self.shape[1], b2.shape[1]), dtype=complex)
        for rows, cols, u, s, vh in self._blocks:
            c[cols] = vh.conj().T @ ((u.conj().T @ b2[rows]) / s[:, None])
        return c.reshape((self.shape[1],) + b.shape[1:])

    def row_space_residual(self, c) -> float:
        """||c - P c|| with P the projector onto range(A^H)."""
        c = np.asarray(c, dtype=complex).reshape(self.shape[1], -1)
        resid = c.copy()
        for _, cols, _, _, vh in self._blocks:
            resid[cols] -= vh.conj().T @ (vh @ c[cols])
        return float(np.linalg.norm(resid))


def minimal_norm_solve(A, b, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Least-coefficient-norm solution of A c = b (raises InfeasibleSolveError)."""
    return MinimalNormSolver(A, rank_tol).solve(b)


def assemble_factor_matrix(xi: complex, cfg: SolveConfig, test_degree: int | None = None,
                           trial_degree: int | None = None) -> OperatorMatrix:
    """Entries <h_row, (Lap + xi) h_col>, rows of degree <= M, columns of degree <= N."""
    m_deg = cfg.test_degree if test_degree is None else test_degree
    n_deg = cfg.trial_for(1) if trial_degree is None else trial_degree
    if n_deg < m_deg:
        raise ValueError("trial degree must be >= test degree")
    trial = TruncationConfig(cfg.dim, n_deg)
    test = TruncationConfig(cfg.dim, m_deg)
    return (matrix_laplacian(trial, test, truncate=True)
            + complex(xi) * matrix_identity(trial, test, truncate=True))


class _Stage:
    def __init__(self, shift, cfg, test_degree, trial_degree):
        self.shift = complex(shift)
        self.test = TruncationConfig(cfg.dim, test_degree)
        self.matrix = assemble_factor_matrix(shift, cfg, test_degree, trial_degree)
        self.solver = MinimalNormSolver(self.matrix, cfg.rank_tol)


class ChainSolver:
    """
    Prepared right inverse for prod_j (Lap + xi_j) under the unit weight.

    Each stage factors its constraint matrix once; ``apply`` then maps any
    number of right-hand sides at the cost of a few dense products.
    """

    def __init__(self, shifts, cfg: SolveConfig):
        shifts = tuple(complex(s) for s in shifts)
        if not shifts:
            raise ValueError("need at least one factor")
        self.shifts = shifts
        self.cfg = cfg
        self.trial = TruncationConfig(cfg.dim, cfg.trial_for(len(shifts)))
        self.stages = [
            _Stage(xi, cfg, cfg.stage_test_degree(j), self.trial.max_degree)
            for j, xi in enumerate(shifts)
        ]
        self._lap = matrix_laplacian(self.trial, self.trial)

    @property
    def stage_bound(self) -> float:
        return 1.0 / (8.0 * self.cfg.dim)

    @property
    def bound(self) -> float:
        return self.stage_bound ** len(self.shifts)

    def apply(self, coeffs, check: bool = True) -> np.ndarray:
        """Solution coefficients for a (trial_size,) or (trial_size, k) batch."""
        u = np.asarray(coeffs, dtype=complex)
        for stage in self.stages:
            u = stage.solver.solve(u[: stage.test.size], check=check)
        return u

    def forward(self, coeffs) -> np.ndarray:
        """P(Lap) applied in the trial space (exact: Lap only lowers degree)."""
        u = np.asarray(coeffs, dtype=complex)
        for xi in self.shifts:
            u = self._lap.matrix @ u + xi * u
        return u

    def solve(self, f: HermiteSeries) -> SolveReport:
        f_trial = _fit_to(f, self.trial)
        current = f_trial.coeffs
        reports = []
        for stage in self.stages:
            b = current[: stage.test.size]
            nxt = stage.solver.solve(b)
            in2 = float(np.vdot(current, current).real)
            out2 = float(np.vdot(nxt, nxt).real)
            resid = float(np.linalg.norm(stage.matrix.matrix @ nxt - b))
            reports.append(StageReport(
                shift=stage.shift, input_norm2=in2, output_norm2=out2,
                ratio=out2 / in2 if in2 > 0 else 0.0, bound=self.stage_bound,
                constraint_residual=resid, test_degree=stage.test.max_degree,
                rank=stage.solver.rank,
            ))
            current = nxt
        f2 = f_trial.norm2()
        u2 = float(np.vdot(current, current).real)
        k = TruncationConfig(self.cfg.dim, self.cfg.test_degree).size
        composite = float(np.linalg.norm(self.forward(current)[:k] - f_trial.coeffs[:k]))
        return SolveReport(
            stages=reports,
            ratio=u2 / f2 if f2 > 0 else 0.0,
            bound=self.bound,
            solution=HermiteSeries(self.trial, current),
            residual=composite,
            input_norm2=f2,
        )


def _fit_to(f: HermiteSeries, trial: TruncationConfig) -> HermiteSeries:
    if f.config.dim != trial.dim:
        raise ValueError(f"rhs has dimension {f.config.dim}, solver expects {trial.dim}")
    try:
        return f.resize(trial)
    except ValueError as exc:
        raise ValueError(
            f"rhs degree {f.degree} exceeds the trial degree {trial.max_degree}"
        ) from exc


def solve_single_factor(f: HermiteSeries, xi: complex, cfg: SolveConfig):
    """Least-norm u with (Lap + xi) u = f tested to degree M; returns (u, StageReport)."""
    report = ChainSolver((xi,), cfg).solve(f)
    return report.solution, report.stages[0]


def solve_chain(f: HermiteSeries, fo: FactoredOperator, cfg: SolveConfig) -> SolveReport:
    """Solve H_1 u_1 = f, H_2 u_2 = u_1, ... and report every stage."""
    return ChainSolver(fo.shifts, cfg).solve(f)


def certify_bound(report: SolveReport, tolerance: float = DEFAULT_CERT_TOL,
                  strict: bool = False) -> Certificate:
    """
    Pass iff the overall ratio is <= bound * (1 + tol) and every stage ratio is
    <= its stage bound * (1 + tol).  Margins are bound - ratio.
    """
    if strict:
        tolerance = STRICT_CERT_TOL
    stage_margins = tuple(s.bound - s.ratio for s in report.stages)
    passed = report.ratio <= report.bound * (1 + tolerance) and all(
        s.ratio <= s.bound * (1 + tolerance) for s in report.stages
    )
    return Certificate(bool(passed), report.bound - report.ratio, stage_margins, tolerance)


def _rescale_report(report: SolveReport, lam: float, weight: WeightSpec) -> SolveReport:
    # stage j in x: (Lap_x + lam xi_j) u_j = u_{j-1} with u_j = lam^-j v_j
    stages = []
    for j, s in enumerate(report.stages):
        stages.append(replace(
            s,
            shift=lam * s.shift,
            input_norm2=s.input_norm2 * lam ** (-2 * j),
            output_norm2=s.output_norm2 * lam ** (-2 * (j + 1)),
            ratio=s.ratio / lam ** 2,
            bound=s.bound / lam ** 2,
            constraint_residual=s.constraint_residual * lam ** (-j),
        ))
    m = len(stages)
    sol = report.solution
    return SolveReport(
        stages=stages,
        ratio=report.ratio * lam ** (-2 * m),
        bound=report.bound * lam ** (-2 * m),
        solution=HermiteSeries(sol.config, sol.coeffs * lam ** (-m), weight),
        residual=report.residual,
        input_norm2=report.input_norm2,
        weight=weight,
    )


def scaled_solve(f: HermiteSeries, spec: PolynomialSpec, cfg: SolveConfig) -> SolveReport:
    """
    Solve P(Lap) u = f under the weight exp(-lam |x - x0|^2) carried by ``f``.

    With y = sqrt(lam) (x - x0) the problem becomes P~(Lap_y) v = g for the
    polynomial with coefficients a_j / lam^(m-j), and u(x) = lam^-m v(y).  In the
    orthonormal bases of the two weights f and g share coefficients, so only
    the solution and the norms pick up powers of lam.
    """
    weight = f.weight
    lam = float(weight.lam)
    if not lam > 0:
        raise ValueError(f"weight lambda must be positive, got {lam!r}")
    fo_unit = factor_operator(spec.scaled(lam))
    unit_f = HermiteSeries(f.config, f.coeffs, UNIT_WEIGHT)
    report = ChainSolver(fo_unit.shifts, cfg).solve(unit_f)
    return _rescale_report(report, lam, weight)
