"""
Problem files (JSON in), reports (JSON out) and solution tables (CSV out).

A problem file looks like::

    {
      "dim": 1,
      "polynomial": [{"re": 0, "im": 0}, {"re": 0, "im": 0}],
      "weight": {"lambda": 1.0, "center": [0.0]},
      "rhs": {"coefficients": [{"index": [0], "re": 1.0, "im": 0.0}]},
      "truncation": {"test_degree": 8, "trial_degree": null},
      "tolerances": {"certificate": 0.05, "rank": 1e-12}
    }

``polynomial`` lists a_0 .. a_{m-1} of the monic P.  Complex numbers may be
given as {"re", "im"} objects, [re, im] pairs or plain reals.  ``rhs`` is
either explicit coefficients or {"builtin": "constant" | "gaussian-bump" |
"random", "seed": int, "degree": int}.
"""
from __future__ import annotations

import csv
import json
import numbers
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ProblemFileError
from .hermite import (
    HermiteSeries,
    TruncationConfig,
    WeightSpec,
    gauss_hermite_rule,
    project_samples,
    random_series,
)
from .solver import DEFAULT_CERT_TOL, DEFAULT_RANK_TOL

BUILTINS = ("constant", "gaussian-bump", "random")


def format_complex(z) -> str:
    """'a+bi' with 9 significant digits; negative zeros print as 0."""
    z = complex(z)
    return f"{z.real + 0.0:.9g}{z.imag + 0.0:+.9g}i"


def complex_to_json(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(value, where: str = "value") -> complex:
    if isinstance(value, bool):
        raise ValueError(f"{where}: expected a number, got a boolean")
    if isinstance(value, numbers.Real):
        return complex(float(value), 0.0)
    if isinstance(value, dict) and set(value) <= {"re", "im"} and "re" in value:
        return complex(_real(value["re"], where + ".re"), _real(value.get("im", 0.0), where + ".im"))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_real(value[0], where + "[0]"), _real(value[1], where + "[1]"))
    raise ValueError(f"{where}: expected a complex number as {{re, im}} or [re, im]")


def _real(value, where):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ValueError(f"{where}: expected a real number, got {value!r}")
    if not np.isfinite(value):
        raise ValueError(f"{where}: must be finite")
    return float(value)


def _int(value, where, minimum=0):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{where}: expected an integer >= {minimum}, got {value!r}")
    return int(value)


@dataclass
class Problem:
    dim: int
    polynomial: tuple
    weight: WeightSpec
    rhs: dict
    test_degree: int = 8
    trial_degree: int | None = None
    cert_tol: float = DEFAULT_CERT_TOL
    rank_tol: float = DEFAULT_RANK_TOL
    extra: dict = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return len(self.polynomial)

    def to_dict(self) -> dict:
        """Canonical JSON form; parsing it back yields an identical problem."""
        rhs = dict(self.rhs)
        if "coefficients" in rhs:
            rhs["coefficients"] = [
                {"index": list(idx), "re": complex(v).real, "im": complex(v).imag}
                for idx, v in rhs["coefficients"]
            ]
        return {
            "dim": self.dim,
            "polynomial": [complex_to_json(a) for a in self.polynomial],
            "weight": {"lambda": self.weight.lam,
                       "center": list(self.weight.center_array(self.dim))},
            "rhs": rhs,
            "truncation": {"test_degree": self.test_degree, "trial_degree": self.trial_degree},
            "tolerances": {"certificate": self.cert_tol, "rank": self.rank_tol},
        }


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def parse_problem(text: str) -> Problem:
    """Parse and validate a problem file; errors carry the offending line."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"invalid JSON: {exc.msg} (column {exc.colno})",
                               line=exc.lineno) from None
    if not isinstance(data, dict):
        raise ProblemFileError("top level must be a JSON object", line=1)
    known = {"dim", "polynomial", "weight", "rhs", "truncation", "tolerances"}
    for key in data:
        if key not in known:
            raise ProblemFileError(f"unknown key {key!r}", line=_line_of(text, key))

    def section(key):
        def fail(msg):
            raise ProblemFileError(msg, line=_line_of(text, key))
        return fail

    fail = section("dim")
    if "dim" not in data:
        raise ProblemFileError("missing required key 'dim'", line=1)
    try:
        dim = _int(data["dim"], "dim", minimum=1)
    except ValueError as exc:
        fail(str(exc))

    fail = section("polynomial")
    poly = data.get("polynomial")
    if not isinstance(poly, list) or not poly:
        fail("'polynomial' must be a non-empty list of coefficients a_0 .. a_{m-1}")
    try:
        polynomial = tuple(complex_from_json(a, f"polynomial[{k}]") for k, a in enumerate(poly))
    except ValueError as exc:
        fail(str(exc))

    fail = section("weight")
    wdata = data.get("weight", {})
    if not isinstance(wdata, dict) or set(wdata) - {"lambda", "center"}:
        fail("'weight' must be an object with keys 'lambda' and 'center'")
    try:
        lam = _real(wdata.get("lambda", 1.0), "weight.lambda")
        if lam <= 0:
            raise ValueError("weight.lambda must be positive")
        center = wdata.get("center")
        if center is not None:
            if not isinstance(center, list) or len(center) != dim:
                raise ValueError(f"weight.center must be a list of {dim} reals")
            center = tuple(_real(c, "weight.center") for c in center)
        weight = WeightSpec(lam, center)
    except ValueError as exc:
        fail(str(exc))

    fail = section("truncation")
    tdata = data.get("truncation", {})
    if not isinstance(tdata, dict) or set(tdata) - {"test_degree", "trial_degree"}:
        fail("'truncation' must be an object with keys 'test_degree', 'trial_degree'")
    try:
        test_degree = _int(tdata.get("test_degree", 8), "truncation.test_degree")
        trial_degree = tdata.get("trial_degree")
        if trial_degree is not None:
            trial_degree = _int(trial_degree, "truncation.trial_degree")
            if trial_degree < test_degree + 2 * len(polynomial):
                raise ValueError(
                    f"truncation.trial_degree must be >= test_degree + 2m = "
                    f"{test_degree + 2 * len(polynomial)}"
                )
    except ValueError as exc:
        fail(str(exc))
    n_trial = test_degree + 2 * len(polynomial) + 4 if trial_degree is None else trial_degree

    fail = section("tolerances")
    tol = data.get("tolerances", {})
    if not isinstance(tol, dict) or set(tol) - {"certificate", "rank"}:
        fail("'tolerances' must be an object with keys 'certificate', 'rank'")
    try:
        cert_tol = _real(tol.get("certificate", DEFAULT_CERT_TOL), "tolerances.certificate")
        rank_tol = _real(tol.get("rank", DEFAULT_RANK_TOL), "tolerances.rank")
        if cert_tol < 0 or not 0 < rank_tol < 1:
            raise ValueError("tolerances out of range")
    except ValueError as exc:
        fail(str(exc))

    fail = section("rhs")
    rdata = data.get("rhs")
    if not isinstance(rdata, dict):
        fail("'rhs' must be an object with 'builtin' or 'coefficients'")
    try:
        rhs = _parse_rhs(rdata, dim, n_trial, text)
    except ValueError as exc:
        fail(str(exc))

    return Problem(dim, polynomial, weight, rhs, test_degree, trial_degree, cert_tol, rank_tol)


def _parse_rhs(rdata, dim, n_trial, text):
    if ("builtin" in rdata) == ("coefficients" in rdata):
        raise ValueError("rhs needs exactly one of 'builtin' or 'coefficients'")
    if "builtin" in rdata:
        name = rdata["builtin"]
        if name not in BUILTINS:
            raise ValueError(f"unknown builtin rhs {name!r}; choose from {', '.join(BUILTINS)}")
        allowed = {"builtin", "seed", "degree"} if name == "random" else {"builtin"}
        if set(rdata) - allowed:
            raise ValueError(f"unexpected keys for builtin {name!r}: {sorted(set(rdata) - allowed)}")
        out = {"builtin": name}
        if name == "random":
            if "seed" not in rdata:
                raise ValueError("builtin 'random' requires an integer 'seed'")
            out["seed"] = _int(rdata["seed"], "rhs.seed")
            if "degree" in rdata:
                out["degree"] = _int(rdata["degree"], "rhs.degree")
        return out
    if set(rdata) != {"coefficients"}:
        raise ValueError("explicit rhs takes only 'coefficients'")
    entries = rdata["coefficients"]
    if not isinstance(entries, list):
        raise ValueError("rhs.coefficients must be a list")
    parsed = []
    for k, item in enumerate(entries):
        where = f"rhs.coefficients[{k}]"
        if not isinstance(item, dict) or "index" not in item or set(item) - {"index", "re", "im"}:
            raise ValueError(f"{where}: expected {{index, re, im}}")
        idx = item["index"]
        if not isinstance(idx, list) or len(idx) != dim:
            raise ValueError(f"{where}.index must be a list of {dim} integers")
        idx = tuple(_int(i, f"{where}.index") for i in idx)
        if sum(idx) > n_trial:
            raise ValueError(f"{where}.index has degree {sum(idx)} > trial degree {n_trial}")
        value = complex(_real(item.get("re", 0.0), where + ".re"),
                        _real(item.get("im", 0.0), where + ".im"))
        parsed.append((idx, value))
    return {"coefficients": parsed}


def load_problem(path) -> Problem:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def build_rhs(problem: Problem, config: TruncationConfig) -> HermiteSeries:
    """Materialize the right-hand side in ``config`` under the problem's weight."""
    rhs, weight, n = problem.rhs, problem.weight, problem.dim
    if "coefficients" in rhs:
        out = HermiteSeries.zeros(config, weight)
        for idx, value in rhs["coefficients"]:
            out.coeffs[config.index_map[idx]] += value
        return out
    name = rhs["builtin"]
    if name == "constant":
        # 1 = (pi/lam)^(n/4) e_0 for the normalized constant basis function
        return HermiteSeries.basis_element(config, (0,) * n, (np.pi / weight.lam) ** (n / 4),
                                           weight)
    if name == "gaussian-bump":
        rule = gauss_hermite_rule(2 * config.max_degree)
        return project_samples(lambda x: np.exp(-np.sum(x * x, axis=1)), config, rule, weight)
    rng = np.random.default_rng(rhs["seed"])
    return random_series(config, rng, rhs.get("degree", problem.test_degree), weight=weight)


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_solution_csv(path, series: HermiteSeries) -> None:
    """One row per basis function: per-axis index columns i1..in, then re, im."""
    n = series.config.dim
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"i{j + 1}" for j in range(n)] + ["re", "im"])
        for idx, c in zip(series.config.basis, series.coeffs):
            writer.writerow(list(idx) + [repr(float(c.real)), repr(float(c.imag))])


def read_solution_csv(path, weight: WeightSpec | None = None) -> HermiteSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = len(header) - 2
    entries = {tuple(int(v) for v in r[:n]): complex(float(r[n]), float(r[n + 1])) for r in body}
    degree = max((sum(k) for k in entries), default=0)
    config = TruncationConfig(n, degree)
    return HermiteSeries.from_dict(config, entries, weight or WeightSpec())
