import json

import numpy as np
import pytest

from conftest import PROBLEMS, ex45
from tiltstab.analysis import EXIT_INCONSISTENT, AnalysisConfig, analyze, with_overrides
from tiltstab.cli import main
from tiltstab.problemfile import ProblemFileError, format_problem, load_problem, parse_problem
from tiltstab.serialize import canonical_dumps
from tiltstab.stability import Status, Verdict

LINE = """# comment line
vars x1 x2
minimize x2^2 + x1*x2 - x1   # trailing comment
st -x1 <= 0
st x1 <= 0
st x1*x2^2 <= 0
point 0 0
"""


class TestProblemFile:
    def test_parse(self):
        pf = parse_problem(LINE)
        assert pf.names == ("x1", "x2")
        assert len(pf.constraints) == 3
        assert pf.point == (0.0, 0.0)

    def test_normalizes_right_side(self):
        pf = parse_problem("vars x\nminimize x^2\nst x^2 <= 1 + x\npoint 0\n")
        P = pf.to_problem()
        assert P.constraint_values(np.array([2.0]))[0] == pytest.approx(4 - 3)

    def test_round_trip(self):
        for path in sorted(PROBLEMS.glob("*.nlp")):
            pf = load_problem(path)
            again = parse_problem(format_problem(pf))
            assert again == pf

    def test_directive_order_free(self):
        text = "point 1 2\nst x1 <= 5\nminimize x1\nvars x1 x2\n"
        assert parse_problem(text).point == (1.0, 2.0)

    @pytest.mark.parametrize("text,line", [
        ("vars x\nminimize x\npoint 0\nfoo 1\n", 4),
        ("vars x\nvars y\nminimize x\npoint 0\n", 2),
        ("vars x\nminimize x\npoint 0 1\n", 3),
        ("vars x\nminimize x + y\npoint 0\n", 2),
        ("vars x\nminimize x\nst x < 0\npoint 0\n", 3),
        ("vars x\nminimize x\npoint zero\n", 3),
        ("vars 1x\nminimize x\npoint 0\n", 1),
    ])
    def test_errors_carry_line(self, text, line):
        with pytest.raises(ProblemFileError) as info:
            parse_problem(text)
        assert info.value.line == line

    def test_missing_directive(self):
        with pytest.raises(ProblemFileError):
            parse_problem("vars x\npoint 0\n")


class TestSerialize:
    def test_canonical(self):
        obj = {"b": 1.0, "a": [float("inf"), -0.0, 0.1], "c": Status.HOLDS, "d": np.array([1, 2])}
        text = canonical_dumps(obj)
        assert text.index('"a"') < text.index('"b"')
        assert '"inf"' in text and "-0" not in text
        assert "0.10000000000000001" in text
        back = json.loads(text)
        assert back["c"] == "Holds" and back["d"] == [1, 2]

    def test_dataclass(self):
        text = canonical_dumps(Verdict(Status.FAILS, witness={"w": np.array([1.0, 0.0])}))
        assert json.loads(text)["witness"]["w"] == [1.0, 0.0]

    def test_rejects_unknown(self):
        with pytest.raises(TypeError):
            canonical_dumps({"x": object()})


class TestAnalyze:
    def test_not_stationary(self):
        from tiltstab.nlpmodel import Problem
        P = Problem.from_text(["x1"], "x1", [], [0])
        code, rep = analyze(P)
        assert code == 2 and rep["stationarity"]["residual"] == 1.0
        assert "cq" not in rep

    def test_infeasible_candidate(self):
        from tiltstab.nlpmodel import Problem
        P = Problem.from_text(["x1"], "x1^2", ["1 - x1"], [0])
        code, rep = analyze(P)
        assert code == 2 and "error" in rep["stationarity"]

    def test_consistency_failure_detected(self, monkeypatch):
        # a broken bound must be caught by the empirical modulus comparison
        import tiltstab.analysis as an
        real = an.tilt_bound
        monkeypatch.setattr(an, "tilt_bound", lambda *a, **k: 0.1 * real(*a, **k))
        cfg = with_overrides(AnalysisConfig(), mscq_samples=200, rusosc_budget=20, bepp_samples=20)
        code, rep = analyze(ex45(), cfg)
        assert code == EXIT_INCONSISTENT
        assert not rep["consistency"]["passed"]


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


class TestCLI:
    def test_analyze_diagonal(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, cap = run(capsys, "analyze", str(PROBLEMS / "ex4_5.nlp"), "--json", str(out))
        assert code == 0
        rep = json.loads(out.read_text())
        assert rep["cq"]["mfcq"]["status"] == "Fails"
        assert rep["cq"]["crcq"]["status"] == "HoldsOnSamples"
        assert rep["second_order"]["ssosc"]["status"] == "Holds"
        assert rep["tilt_bound"] == pytest.approx(0.5)
        assert rep["oracle"]["single_valued"] is True
        assert rep["problem"]["source"] == "ex4_5.nlp"
        assert "tilt bound: 0.5" in cap.out

    def test_analyze_line_with_gamma(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, _ = run(capsys, "analyze", str(PROBLEMS / "ex4_11.nlp"), "--gamma", "2", "--json", str(out))
        assert code == 0
        rep = json.loads(out.read_text())
        assert 0.95 <= rep["cq"]["mscq"]["kappa"] <= 1.05
        assert rep["cq"]["bepp"]["status"] == "FailsWithWitness"
        assert rep["second_order"]["ssosc"]["status"] == "Holds"
        assert rep["tilt_bound"] == pytest.approx(0.5)
        assert rep["gamma"] == {"value": 2.0, "mscq_estimate": rep["cq"]["mscq"]["kappa"],
                                "exceeds_estimate": True, "source": "flag"}
        assert rep["config"]["gamma"] == 2.0

    def test_analyze_axes(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, _ = run(capsys, "analyze", str(PROBLEMS / "ex3_5.nlp"), "--json", str(out))
        assert code == 0
        rep = json.loads(out.read_text())
        assert rep["cq"]["mscq"]["diverging"] is True
        for k in ("ssosc", "pointbased", "kappa_free", "extreme_point", "rusosc"):
            assert rep["second_order"][k]["status"] == "NotApplicable"
            assert rep["second_order"][k]["reason"] == "mscq"
        assert rep["oracle"]["single_valued"] is False

    def test_analyze_no_oracle(self, capsys):
        code, cap = run(capsys, "analyze", str(PROBLEMS / "halfplane.nlp"), "--no-oracle")
        assert code == 0 and "oracle: skipped" in cap.out

    def test_analyze_not_stationary(self, capsys, tmp_path):
        f = tmp_path / "p.nlp"
        f.write_text("vars x\nminimize x\npoint 0\n")
        code, cap = run(capsys, "analyze", str(f))
        assert code == 2 and "stationarity residual: 1" in cap.out

    def test_parse_error(self, capsys, tmp_path):
        f = tmp_path / "p.nlp"
        f.write_text("vars x\nminimize x +\npoint 0\n")
        code, cap = run(capsys, "analyze", str(f))
        assert code == 1 and "line 2" in cap.err

    def test_missing_file(self, capsys, tmp_path):
        code, _ = run(capsys, "oracle", str(tmp_path / "nope.nlp"))
        assert code == 1

    def test_oracle_axes(self, capsys):
        code, cap = run(capsys, "oracle", str(PROBLEMS / "ex3_5.nlp"), "--tilt-radius", "0.1")
        assert code == 4 and "v=(0.1, 0.1)" in cap.out

    def test_oracle_line(self, capsys, tmp_path):
        out = tmp_path / "o.json"
        code, _ = run(capsys, "oracle", str(PROBLEMS / "ex4_11.nlp"), "--json", str(out))
        assert code == 0
        assert json.loads(out.read_text())["oracle"]["lipschitz"] <= 0.55

    def test_oracle_quadratic(self, capsys, tmp_path):
        out = tmp_path / "o.json"
        code, _ = run(capsys, "oracle", str(PROBLEMS / "quadratic.nlp"), "--json", str(out))
        assert code == 0
        assert json.loads(out.read_text())["oracle"]["lipschitz"] == pytest.approx(0.5, rel=1e-3)

    def test_check_line(self, capsys):
        code, cap = run(capsys, "check", str(PROBLEMS / "ex4_11.nlp"), "--cq", "mscq,bepp")
        assert code == 0
        assert "x=(0, 0.5) vertex norm 4" in cap.out
        assert "x=(0, 0.25) vertex norm 16" in cap.out

    def test_check_diagonal(self, capsys, tmp_path):
        out = tmp_path / "c.json"
        code, _ = run(capsys, "check", str(PROBLEMS / "ex4_5.nlp"), "--cq", "licq,mfcq,crcq", "--json", str(out))
        cq = json.loads(out.read_text())["cq"]
        assert code == 0
        assert [cq[k]["status"] for k in ("licq", "mfcq", "crcq")] == ["Fails", "Fails", "HoldsOnSamples"]

    def test_check_single_constraint(self, capsys):
        code, cap = run(capsys, "check", str(PROBLEMS / "halfplane.nlp"), "--cq", "licq")
        assert code == 0 and "licq           Holds" in cap.out

    def test_check_unknown_name(self, capsys):
        code, cap = run(capsys, "check", str(PROBLEMS / "ex4_5.nlp"), "--cq", "slater")
        assert code == 1 and "slater" in cap.err

    def test_usage_error(self, capsys):
        code, _ = run(capsys, "frobnicate")
        assert code == 1
