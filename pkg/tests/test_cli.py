import json

import pytest

from tswitch import fixture_path
from tswitch.cli import main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_baseline_two_bus(capsys):
    code, out, _ = run(["solve", fixture_path("two_bus"), "--regime", "baseline"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["regimes"][0]["total_switches"] == 0
    assert doc["regimes"][0]["switch_events"] == {}


def test_compare_all_congestion(capsys):
    code, out, _ = run(["solve", fixture_path("congestion"), "--regime", "compare-all"], capsys)
    assert code == 0
    doc = json.loads(out)
    z = {e["regime"]: e["objective"] for e in doc["regimes"]}
    assert list(z) == ["baseline", "classic", "constrained", "reduced"]
    tol = 1e-4 * max(z.values())
    assert z["baseline"] >= z["constrained"] - tol
    assert z["constrained"] >= z["classic"] - tol
    assert z["reduced"] >= z["constrained"] - tol
    assert len(doc["comparisons"]) == 6


def test_reduced_with_empty_mll_matches_constrained(capsys):
    _, out, _ = run(["solve", fixture_path("triangle"), "--regime", "compare-all"], capsys)
    doc = json.loads(out)
    by = {e["regime"]: e for e in doc["regimes"]}
    red = by["reduced"]
    assert all(h["MLL"] == 0 for h in red["per_hour"])
    assert all(h["SLL_u"] == red["SLL_o"] for h in red["per_hour"])
    assert red["objective"] == pytest.approx(by["constrained"]["objective"], rel=1e-9)


def test_table_format_and_out_file(tmp_path, capsys):
    target = tmp_path / "r.txt"
    code, out, _ = run(
        ["solve", fixture_path("congestion"), "--regime", "reduced", "--format", "table", "--out", target], capsys
    )
    assert code == 0 and out == ""
    text = target.read_text()
    assert text.startswith("regime") and "|SLL_u| per t" in text


def test_overrides_and_env_time_limit(capsys, monkeypatch):
    monkeypatch.setenv("TSWITCH_TIME_LIMIT", "30")
    code, out, _ = run(
        ["solve", fixture_path("congestion"), "--regime", "constrained", "--T", "2", "--H2", "0", "--open-only"],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["planning"]["T"] == 2
    assert doc["regimes"][0]["total_switches"] == 0


@pytest.mark.parametrize(
    "extra",
    [["--T", "9"], ["--alpha", "0"], ["--H1", "x"], ["--backend", "cplex"], ["--regime", "magic"]],
)
def test_bad_overrides_are_usage_errors(extra, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", str(fixture_path("congestion"))] + extra)
    assert exc.value.code == 2


def test_bad_env_time_limit(capsys, monkeypatch):
    monkeypatch.setenv("TSWITCH_TIME_LIMIT", "soon")
    with pytest.raises(SystemExit) as exc:
        main(["solve", str(fixture_path("two_bus"))])
    assert exc.value.code == 2


def test_infeasible_solve_exits_one(capsys, monkeypatch):
    import tswitch.cli as cli
    from tswitch.milp.backend import SolveStatus
    from tswitch.milp.model import SolveResult

    real = cli.run_regime

    def broken(case, name, cfg):
        rr = real(case, name, cfg)
        rr.result = SolveResult(SolveStatus.INFEASIBLE, float("nan"), None, [], float("nan"), 0.0)
        return rr

    monkeypatch.setattr(cli, "run_regime", broken)
    code, out, err = run(["solve", fixture_path("two_bus"), "--regime", "constrained"], capsys)
    assert code == 1 and out == ""
    assert "Infeasible" in err


def test_negative_budget_in_case_is_invalid(tmp_path, capsys):
    doc = json.loads(fixture_path("congestion").read_text())
    doc["planning"]["H2"] = -1
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, _, err = run(["solve", p, "--regime", "constrained"], capsys)
    assert code == 3 and "planning" in err


def test_sensitivity_triangle(capsys):
    code, out, _ = run(["sensitivity", fixture_path("triangle")], capsys)
    assert code == 0
    doc = json.loads(out)
    assert all(c["ptdf_self"] == pytest.approx(2 / 3, abs=1e-10) for c in doc["candidates"])
    vals = [v for row in doc["lodf"] for v in row if v is not None]
    assert len(vals) == 6
    assert all(abs(abs(v) - 1.0) <= 1e-10 for v in vals)


def test_sensitivity_radial_flags_bridges(capsys):
    _, out, _ = run(["sensitivity", fixture_path("radial")], capsys)
    doc = json.loads(out)
    assert all(c["bridge"] for c in doc["candidates"])
    assert all(v is None for row in doc["lodf"] for v in row)


def test_sensitivity_self_only(capsys):
    _, out, _ = run(["sensitivity", fixture_path("triangle"), "--monitored", ""], capsys)
    doc = json.loads(out)
    assert "lodf" not in doc and len(doc["candidates"]) == 3


def test_sensitivity_singular_partition(capsys):
    code, _, err = run(["sensitivity", fixture_path("triangle"), "--open", "1,3"], capsys)
    assert code == 4
    assert "1 | 2,3" in err


def test_gen_refuses_overwrite(tmp_path, capsys):
    p = tmp_path / "c.json"
    args = ["gen", "--seed", "3", "--buses", "6", "--lines", "8", "--T", "2", "--out", p]
    assert run(args, capsys)[0] == 0
    first = p.read_bytes()
    with pytest.raises(SystemExit) as exc:
        main([str(a) for a in args])
    assert exc.value.code == 2
    assert run(args + ["--force"], capsys)[0] == 0
    assert p.read_bytes() == first


def test_gen_thirteen_bus_scale(tmp_path, capsys):
    p = tmp_path / "c.json"
    run(["gen", "--seed", "0", "--buses", "13", "--lines", "34", "--T", "5", "--congestion", "0.1", "--out", p], capsys)
    doc = json.loads(p.read_text())
    assert len(doc["buses"]) == 13 and len(doc["lines"]) == 34 and doc["T"] == 5


def test_gen_too_few_lines(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--seed", "1", "--buses", "5", "--lines", "3", "--T", "2"])
    assert exc.value.code == 2


def test_validate(tmp_path, capsys):
    code, out, _ = run(["validate", fixture_path("congestion")], capsys)
    assert code == 0 and out.startswith("ok:")
    doc = json.loads(fixture_path("triangle").read_text())
    doc["buses"][1]["id"] = 1
    p = tmp_path / "dup.json"
    p.write_text(json.dumps(doc))
    assert run(["validate", p], capsys)[0] == 3
    p.write_text("{")
    assert run(["validate", p], capsys)[0] == 3
