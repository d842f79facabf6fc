import json
import math

import numpy as np
import pytest

from rinv import cli
from rinv.exceptions import ConvergenceError, ProblemFileError
from rinv.hermite import HermiteSeries, TruncationConfig, WeightSpec
from rinv.problem import (
    build_rhs,
    complex_from_json,
    format_complex,
    parse_problem,
    read_solution_csv,
    write_solution_csv,
)


def problem_text(**overrides):
    data = {
        "dim": 1,
        "polynomial": [{"re": 0, "im": 0}, {"re": 0, "im": 0}],
        "rhs": {"coefficients": [{"index": [0], "re": 1.0, "im": 0.0}]},
        "truncation": {"test_degree": 6, "trial_degree": None},
    }
    data.update(overrides)
    return json.dumps(data, indent=2)


def run_solve(tmp_path, text, *extra):
    path = tmp_path / "p.json"
    path.write_text(text)
    out = tmp_path / "r.json"
    code = cli.main(["solve", "--problem", str(path), "--out", str(out), *extra])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


class TestComplexFormat:
    def test_format(self):
        assert format_complex(-1j) == "0-1i"
        assert format_complex(1j) == "0+1i"
        assert format_complex(-0.0 + 2.5j) == "0+2.5i"
        assert format_complex(1 / 3) == "0.333333333+0i"

    @pytest.mark.parametrize("value,want", [(2, 2), ({"re": 1, "im": -2}, 1 - 2j),
                                            ([0.5, 3], 0.5 + 3j), ({"re": 4}, 4)])
    def test_parse(self, value, want):
        assert complex_from_json(value) == want

    @pytest.mark.parametrize("value", [True, "1", {"im": 1}, [1, 2, 3], {"re": float("nan")}])
    def test_parse_errors(self, value):
        with pytest.raises(ValueError):
            complex_from_json(value)


class TestParse:
    def test_defaults_and_round_trip(self):
        p = parse_problem(problem_text())
        assert p.dim == 1 and p.polynomial == (0, 0) and p.weight == WeightSpec(1.0, None)
        again = parse_problem(json.dumps(p.to_dict()))
        assert again.to_dict() == p.to_dict()

    def test_builtins(self):
        for rhs in ({"builtin": "constant"}, {"builtin": "gaussian-bump"},
                    {"builtin": "random", "seed": 3, "degree": 2}):
            p = parse_problem(problem_text(rhs=rhs))
            assert p.rhs == rhs

    @pytest.mark.parametrize("mutation,key", [
        (dict(dim=0), "dim"),
        (dict(polynomial=[]), "polynomial"),
        (dict(polynomial=["x"]), "polynomial"),
        (dict(weight={"lambda": -1}), "weight"),
        (dict(weight={"lambda": 1, "center": [0, 0]}), "weight"),
        (dict(rhs={"builtin": "sine"}), "rhs"),
        (dict(rhs={"builtin": "random"}), "rhs"),
        (dict(rhs={"coefficients": [{"index": [0, 1], "re": 1}]}), "rhs"),
        (dict(rhs={"coefficients": [{"index": [40], "re": 1}]}), "rhs"),
        (dict(truncation={"test_degree": 6, "trial_degree": 7}), "truncation"),
        (dict(tolerances={"rank": 2.0}), "tolerances"),
        (dict(colour="red"), "colour"),
    ])
    def test_errors_name_the_line(self, mutation, key):
        text = problem_text(**mutation)
        with pytest.raises(ProblemFileError) as info:
            parse_problem(text)
        want = next(i for i, line in enumerate(text.splitlines(), 1) if f'"{key}"' in line)
        assert info.value.line == want
        assert str(info.value).startswith(f"line {want}: ")

    def test_bad_json(self):
        with pytest.raises(ProblemFileError) as info:
            parse_problem('{\n  "dim": 1,\n  oops\n}')
        assert info.value.line == 3

    def test_missing_dim_and_non_object(self):
        with pytest.raises(ProblemFileError):
            parse_problem('{"polynomial": [0]}')
        with pytest.raises(ProblemFileError):
            parse_problem("[1, 2]")


class TestBuildRhs:
    def test_constant_is_one_everywhere(self):
        for lam, center in ((1.0, None), (4.0, [1.0, -1.0])):
            p = parse_problem(problem_text(dim=2, weight={"lambda": lam, "center": center},
                                           rhs={"builtin": "constant"}))
            f = build_rhs(p, TruncationConfig(2, 4))
            assert f(np.array([[0.3, 2.0], [-1.0, 5.0]])) == pytest.approx([1.0, 1.0])

    def test_gaussian_bump_values(self):
        p = parse_problem(problem_text(rhs={"builtin": "gaussian-bump"}))
        f = build_rhs(p, TruncationConfig(1, 30))
        # e^{-x^2} = pi^{1/4} sum over even k of its Hermite coefficients; check h_0 term
        assert f.coeffs[0].real == pytest.approx(math.sqrt(math.pi / 2) * np.pi ** -0.25, rel=1e-10)

    def test_random_is_seeded(self):
        p = parse_problem(problem_text(rhs={"builtin": "random", "seed": 7}))
        cfg = TruncationConfig(1, 14)
        np.testing.assert_array_equal(build_rhs(p, cfg).coeffs, build_rhs(p, cfg).coeffs)
        assert build_rhs(p, cfg).degree <= 6


class TestSolveCommand:
    def test_bilaplacian_h0(self, tmp_path, capsys):
        code, rep = run_solve(tmp_path, problem_text())
        assert code == cli.EXIT_OK
        assert rep["ratio"] == pytest.approx(1 / 384, rel=1e-10)
        assert rep["bound"] == pytest.approx(1 / 64)
        assert rep["certificate"]["passed"] is True
        assert len(rep["stages"]) == 2 and "wall_time" in rep
        assert rep["ratio"] == pytest.approx(np.prod([s["ratio"] for s in rep["stages"]]))
        assert "pass" in capsys.readouterr().out

    def test_zero_rhs(self, tmp_path):
        code, rep = run_solve(tmp_path, problem_text(rhs={"coefficients": []}))
        assert code == cli.EXIT_OK and rep["ratio"] == 0

    def test_lambda_four_bound(self, tmp_path):
        text = problem_text(polynomial=[[1.0, 2.0]], weight={"lambda": 4.0, "center": [0.5]},
                            rhs={"builtin": "random", "seed": 1})
        code, rep = run_solve(tmp_path, text)
        assert code == cli.EXIT_OK
        assert rep["bound"] == pytest.approx(1 / (16 * 8))
        assert rep["shifts"][0]["re"] == pytest.approx(1.0) and rep["shifts"][0]["im"] == pytest.approx(2.0)

    def test_strict_sharp_case(self, tmp_path):
        code, rep = run_solve(tmp_path, problem_text(polynomial=[0]), "--strict")
        assert code == cli.EXIT_OK and rep["certificate"]["tolerance"] == 1e-8
        assert rep["ratio"] == pytest.approx(0.125, abs=1e-8)

    def test_round_trip_is_bit_identical(self, tmp_path):
        text = problem_text(dim=2, polynomial=[[1, -1], 2.5],
                            rhs={"builtin": "random", "seed": 11})
        _, first = run_solve(tmp_path, text)
        _, second = run_solve(tmp_path, json.dumps(first["problem"]))
        assert second["problem"] == first["problem"]
        assert second["ratio"] == first["ratio"]
        assert [s["ratio"] for s in second["stages"]] == [s["ratio"] for s in first["stages"]]

    def test_solution_csv(self, tmp_path):
        csv_path = tmp_path / "u.csv"
        text = problem_text(dim=2, rhs={"coefficients": [{"index": [0, 1], "re": 1, "im": 2}]})
        code, rep = run_solve(tmp_path, text, "--solution-csv", str(csv_path))
        assert code == cli.EXIT_OK
        header = csv_path.read_text().splitlines()[0]
        assert header == "i1,i2,re,im"
        u = read_solution_csv(csv_path)
        assert u.norm2() == pytest.approx(rep["solution_norm2"], rel=1e-15)

    def test_input_errors(self, tmp_path, capsys):
        code, _ = run_solve(tmp_path, problem_text(dim=-1))
        assert code == cli.EXIT_INPUT
        assert "line 2" in capsys.readouterr().err
        assert cli.main(["solve", "--problem", str(tmp_path / "nope.json"),
                         "--out", str(tmp_path / "r.json")]) == cli.EXIT_INPUT

    def test_infeasible(self, tmp_path, capsys):
        # keeping only the top singular direction leaves h_0 outside the range
        text = problem_text(polynomial=[0.0], tolerances={"rank": 0.99})
        code, _ = run_solve(tmp_path, text)
        assert code == cli.EXIT_INFEASIBLE
        assert "outside the range" in capsys.readouterr().err

    def test_failed_certificate(self, tmp_path, monkeypatch):
        real = cli.certify_bound

        def harsh(report, tolerance, strict=False):
            cert = real(report, tolerance, strict)
            return type(cert)(False, cert.margin, cert.stage_margins, cert.tolerance)

        monkeypatch.setattr(cli, "certify_bound", harsh)
        code, rep = run_solve(tmp_path, problem_text())
        assert code == cli.EXIT_VIOLATION and rep["certificate"]["passed"] is False


class TestCsv:
    def test_round_trip(self, tmp_path, rng):
        cfg = TruncationConfig(3, 4)
        s = HermiteSeries(cfg, rng.standard_normal(cfg.size) + 1j * rng.standard_normal(cfg.size))
        write_solution_csv(tmp_path / "s.csv", s)
        back = read_solution_csv(tmp_path / "s.csv")
        np.testing.assert_array_equal(back.coeffs, s.coeffs)


class TestOtherCommands:
    def test_roots_examples(self, capsys):
        assert cli.main(["roots", "--coeffs", "1,0"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[1].split("\t")[1] == "0-1i" and lines[2].split("\t")[1] == "0+1i"
        assert cli.main(["roots", "--coeffs", "0"]) == cli.EXIT_OK
        assert capsys.readouterr().out.splitlines()[1].split("\t")[1] == "0+0i"
        assert cli.main(["roots", "--coeffs=-1,0"]) == cli.EXIT_OK
        shifts = [ln.split("\t")[1] for ln in capsys.readouterr().out.splitlines()[1:3]]
        assert shifts == ["-1+0i", "1+0i"]

    def test_roots_complex_and_errors(self, capsys, monkeypatch):
        assert cli.main(["roots", "--coeffs", "1+2i, -3i"]) == cli.EXIT_OK
        assert cli.main(["roots", "--coeffs", "one"]) == cli.EXIT_INPUT

        def stuck(spec):
            raise ConvergenceError("no convergence", best=np.array([1 + 1j]))

        monkeypatch.setattr(cli, "factor_operator", stuck)
        capsys.readouterr()
        assert cli.main(["roots", "--coeffs", "1,2"]) == cli.EXIT_VIOLATION
        assert "best iterate: 1+1i" in capsys.readouterr().err

    def test_verify_passes_and_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "v.csv"
        code = cli.main(["verify", "--kind", "coercivity", "--dim", "1", "--degree", "4",
                         "--trials", "5", "--seed", "3", "--out", str(out)])
        assert code == cli.EXIT_OK
        assert out.read_text().startswith("trial,quantity,lhs,rhs,residual,tolerance,passed,note")
        assert "tight" in capsys.readouterr().out

    def test_verify_violation(self, tmp_path, capsys, monkeypatch):
        from rinv import verify

        monkeypatch.setattr(verify, "IDENTITY_RTOL", 0.0)
        code = cli.main(["verify", "--kind", "identities", "--dim", "1", "--degree", "3",
                         "--trials", "2", "--seed", "9", "--out", str(tmp_path / "v.csv")])
        assert code == cli.EXIT_VIOLATION
        assert "seed 9 trial" in capsys.readouterr().err

    def test_verify_bad_input(self, tmp_path):
        assert cli.main(["verify", "--kind", "bound", "--trials", "0",
                         "--out", str(tmp_path / "v.csv")]) == cli.EXIT_INPUT

    def test_counterexample(self, capsys):
        assert cli.main(["counterexample", "--rmax", "200", "--grid", "5"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "[FAIL]" not in out and "T(R)" in out
        assert cli.main(["counterexample", "--rmax", "1"]) == cli.EXIT_INPUT

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["solve"])
        assert info.value.code == 2
