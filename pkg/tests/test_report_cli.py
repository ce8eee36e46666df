import csv
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patholab import checks
from patholab.cli import build_parser, config_from_args, main
from patholab.report import (
    STATUSES,
    CheckReport,
    RunConfig,
    atomic_write,
    emit_report,
    exit_code,
    to_json,
)


def test_to_json_full_precision_and_nonfinite():
    text = to_json({"a": 0.1, "b": math.inf, "c": -math.inf, "d": math.nan, "e": [1, 2.5], "f": None, "g": True})
    data = json.loads(text)
    assert data == {"a": 0.1, "b": "inf", "c": "-inf", "d": "nan", "e": [1, 2.5], "f": None, "g": True}
    assert "0.10000000000000001" in text


@settings(max_examples=100, deadline=None)
@given(x=st.floats(allow_nan=False, allow_infinity=False))
def test_to_json_float_round_trip(x):
    assert json.loads(to_json([x]))[0] == x


def test_empty_report_is_valid(tmp_path):
    emit_report(RunConfig("families"), [], tmp_path)
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["checks"] == []
    assert set(data) == {"version", "seed", "family", "n", "params", "checks"}


config_strategy = st.builds(
    RunConfig,
    command=st.sampled_from(list(checks.COMMANDS)),
    family=st.none() | st.sampled_from(["power", "w11", "lipschitz-log", "bmo-logsq"]),
    n=st.integers(2, 6),
    beta=st.none() | st.floats(1.01, 5.0),
    a=st.none() | st.floats(-1.0, 2.0),
    r0=st.just("auto") | st.floats(2.0, 1e4).map(repr),
    margin=st.floats(0.01, 0.99),
    samples=st.integers(10, 10**5),
    J=st.integers(40, 200),
    p_grid=st.lists(st.floats(1.0, 20.0), min_size=1, max_size=6).map(tuple),
    c_grid=st.lists(st.floats(0.01, 20.0), min_size=1, max_size=4).map(tuple),
    rho_min=st.floats(1e-12, 2.0**-5),
    seed=st.integers(0, 2**31),
    out=st.text("abc/_-", min_size=1, max_size=10),
    strict=st.booleans(),
    functional=st.none() | st.sampled_from(["llogl", "lp:1.5", "exp:2"]),
)


@settings(max_examples=100, deadline=None)
@given(cfg=config_strategy)
def test_config_round_trip(cfg):
    assert RunConfig.from_dict(json.loads(to_json(cfg.to_dict()))) == cfg


@settings(max_examples=200, deadline=None)
@given(statuses=st.lists(st.sampled_from(STATUSES), max_size=8), strict=st.booleans())
def test_exit_code_contract(statuses, strict):
    rows = [CheckReport(f"c{i}", s) for i, s in enumerate(statuses)]
    bad = "FAIL" in statuses or (strict and "INCONCLUSIVE" in statuses)
    assert exit_code(rows, strict) == (1 if bad else 0)


def test_forced_failure_fixture(monkeypatch, tmp_path, capsys):
    from patholab.checks import Section

    def fake(cfg):
        return Section([CheckReport("forced", "FAIL", paper_anchor="x")]), {}

    monkeypatch.setattr(checks, "run_command", fake)
    assert main(["families", "--out", str(tmp_path)]) == 1

    def inconclusive(cfg):
        return Section([CheckReport("maybe", "INCONCLUSIVE", paper_anchor="x")]), {}

    monkeypatch.setattr(checks, "run_command", inconclusive)
    assert main(["families", "--out", str(tmp_path)]) == 0
    assert main(["families", "--out", str(tmp_path), "--strict"]) == 1
    assert "INCONCLUSIVE" in capsys.readouterr().out


def test_check_report_rejects_unknown_status():
    with pytest.raises(ValueError):
        CheckReport("x", "MAYBE")


@pytest.mark.parametrize("argv", [[], ["bogus"], ["norms", "--functional", "lp:0.5"], ["norms", "--r0", "big"],
                                  ["families", "--family", "w12"], ["families", "--p-grid", "1,x"]])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["families", "--family", "w11", "--beta", "0.5"],
    ["families", "--n", "1"],
    ["weak-form", "--rho-min", "0.5"],
    ["families", "--functional", "llogl"],
    ["families", "--margin", "1.5"],
    ["families", "--family", "lipschitz-log", "--r0", "2.0"],
])
def test_domain_errors_exit_2(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == 2
    assert "patholab: error:" in capsys.readouterr().err


def test_parser_defaults_match_run_config():
    cfg = config_from_args(build_parser().parse_args(["families"]))
    assert cfg == RunConfig("families")


def test_verify_identity_example(tmp_path, capsys):
    assert main(["verify-identity", "--family", "lipschitz-log", "--n", "3", "--samples", "200",
                 "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["n"] == 3 and data["family"] == "lipschitz-log"
    assert all(c["status"] in ("PASS", "INFO") for c in data["checks"])
    assert "PASS" in capsys.readouterr().out


def test_norms_single_functional(tmp_path, capsys):
    assert main(["norms", "--family", "w11", "--beta", "1.5", "--functional", "llogl", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert [c["status"] for c in data["checks"]] == ["DIVERGES"]
    tables = list((tmp_path / "tables").glob("*.csv"))
    assert len(tables) == 1
    with tables[0].open() as fh:
        header = next(csv.reader(fh))
    assert header[:4] == ["j", "inner", "outer", "partial"]
    assert (tmp_path / "schema.md").read_text().startswith("# Output schema")
    cfg = RunConfig.from_dict(json.loads((tmp_path / "config.json").read_text()))
    assert cfg.functional == "llogl" and cfg.beta == 1.5


def test_atomic_write_reports_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="cannot write"):
        atomic_write(blocker / "sub" / "report.json", "{}")
    atomic_write(tmp_path / "ok.json", "{}")
    assert (tmp_path / "ok.json").read_text() == "{}"
    assert not list(tmp_path.glob(".*.tmp"))


def test_unwritable_output_exit_2(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["families", "--family", "lipschitz-log", "--out", str(blocker / "out")]) == 2


def test_cheap_command_is_deterministic(tmp_path):
    argv = ["asymptotics", "--family", "w11", "--samples", "50", "--seed", "3"]
    main(argv + ["--out", str(tmp_path / "a")])
    main(argv + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_every_claim_check_has_anchor():
    cfg = RunConfig("full-suite", n=2, samples=50, J=48)
    section, _ = checks.run_command(cfg)
    names = [c.name for c in section.checks]
    assert len(names) == len(set(names))
    assert all(c.paper_anchor for c in section.checks if c.status != "INFO")
    assert not [c.name for c in section.checks if c.status in ("FAIL", "INCONCLUSIVE")]
