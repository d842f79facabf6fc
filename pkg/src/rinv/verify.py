"""Randomized batch checks of the weighted identities, coercivity and the solve bound."""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .hermite import HermiteSeries, TruncationConfig, random_series
from .operators import (
    check_adjointness,
    check_coercivity,
    check_commutator_identity,
    check_key_step,
    check_norm_identity,
)
from .solver import ChainSolver, SolveConfig

KINDS = ("identities", "coercivity", "bound")
MATRIX_TOL = 1e-12
IDENTITY_RTOL = 1e-10
COERCIVITY_TOL = 1e-10
BOUND_SLACK = 0.05
SHARP_TOL = 1e-8
MAX_SHIFT = 5.0


@dataclass(frozen=True)
class Row:
    trial: int
    quantity: str
    lhs: float
    rhs: float
    residual: float
    tolerance: float
    passed: bool
    note: str = ""


def worker_count() -> int:
    """RINV_THREADS if set, else the number of usable CPUs."""
    env = os.environ.get("RINV_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"RINV_THREADS must be a positive integer, got {env!r}") from None
        if value < 1:
            raise ValueError(f"RINV_THREADS must be a positive integer, got {env!r}")
        return value
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def random_shift(rng: np.random.Generator, radius: float = MAX_SHIFT) -> complex:
    r = radius * np.sqrt(rng.random())
    return complex(r * np.exp(2j * np.pi * rng.random()))


def _identity_rows(trial, rng, config):
    rows = []
    if trial == 0:
        dev = check_adjointness(config)
        rows.append(Row(trial, "adjointness", dev, 0.0, dev, MATRIX_TOL, dev < MATRIX_TOL))
        dev = check_commutator_identity(config)
        rows.append(Row(trial, "commutator", dev, 0.0, dev, MATRIX_TOL, dev < MATRIX_TOL))
    phi = random_series(config, rng)
    xi = random_shift(rng)
    norm = check_norm_identity(xi, phi)
    rows.append(Row(trial, "norm_identity", float(np.real(norm.lhs)), float(np.real(norm.rhs)),
                    norm.relative, IDENTITY_RTOL, norm.relative < IDENTITY_RTOL))
    key = check_key_step(phi)
    rows.append(Row(trial, "key_step", float(np.real(key.lhs)), float(np.real(key.rhs)),
                    key.relative, IDENTITY_RTOL, key.relative < IDENTITY_RTOL))
    return rows


def _coercivity_rows(trial, rng, config):
    n = config.dim
    if trial == 0:
        phi = HermiteSeries.basis_element(config, (0,) * n)
        xi = 0j
    else:
        phi = random_series(config, rng)
        xi = random_shift(rng)
    margin = check_coercivity(xi, phi)
    lower = 8.0 * n * phi.norm2()
    tight = abs(margin) <= COERCIVITY_TOL
    return [Row(trial, "coercivity", margin + lower, lower, margin, COERCIVITY_TOL,
                margin >= -COERCIVITY_TOL, "tight" if tight else "")]


def _bound_rows(trial, rng, config, solvers):
    n = config.dim
    if trial == 0:
        f = HermiteSeries.basis_element(config, (0,) * n)
        xi = 0j
    else:
        f = random_series(config, rng)
        xi = random_shift(rng)
    report = solvers(xi).solve(f)
    bound = 1.0 / (8 * n)
    if trial == 0:
        resid = abs(report.ratio - bound)
        return [Row(trial, "sharp_ratio", report.ratio, bound, resid, SHARP_TOL,
                    resid <= SHARP_TOL, "tight")]
    return [Row(trial, "stage_ratio", report.ratio, bound, bound - report.ratio,
                bound * BOUND_SLACK, report.ratio <= bound * (1 + BOUND_SLACK))]


def run_verify(kind: str, dim: int, degree: int, trials: int, seed: int,
               workers: int | None = None) -> list:
    """Rows for every trial, in trial order; trial t draws from the stream (seed, t)."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")
    config = TruncationConfig(dim, degree)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = SolveConfig(dim, degree)

    def solver_for(xi):
        return ChainSolver((xi,), cfg)

    def one(trial):
        rng = trial_rng(seed, trial)
        if kind == "identities":
            return _identity_rows(trial, rng, config)
        if kind == "coercivity":
            return _coercivity_rows(trial, rng, config)
        return _bound_rows(trial, rng, config, solver_for)

    workers = worker_count() if workers is None else workers
    if workers <= 1:
        chunks = [one(t) for t in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(one, range(trials)))
    return [row for chunk in chunks for row in chunk]


def write_rows(path, rows) -> None:
    fields = list(Row.__dataclass_fields__)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            d = asdict(row)
            for key in ("lhs", "rhs", "residual", "tolerance"):
                d[key] = repr(float(d[key]))
            writer.writerow(d)
