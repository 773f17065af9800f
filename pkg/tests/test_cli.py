# file: tests/test_cli.py
import json
import logging

import pandas as pd
import pytest

from aacord.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, build_parser, collect_overrides, main
from aacord.utils.errors import SpecError
from aacord.utils.logger import set_level, setup_logger

BROKEN_PAIR = """
[system]
name = broken-pair
n = 2

[integrals]
H1 = q1
H2 = p1*q1

[reference]
point = 1, 0, 0.5, 0
"""


def test_catalog_lists_every_system(capsys):
    assert main(["catalog"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("harmonic1d", "free1d", "so3-momentum"):
        assert name in out


def test_log_level_flag_applies_to_package_loggers():
    try:
        assert main(["--log-level", "warning", "catalog"]) == EXIT_OK
        assert not setup_logger("aacord.agents.chart_agent").isEnabledFor(logging.INFO)
    finally:
        set_level("INFO")


def test_validate_writes_report(tmp_path, capsys):
    code = main(["validate", "harmonic1d", "--out", str(tmp_path), "--seed", "7"])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is True
    assert report["command"] == "validate"
    assert report["seed"] == 7
    assert report["schema"] == 1
    assert json.loads((tmp_path / "report.json").read_text()) == report


def test_failing_certificate_exits_one(tmp_path, capsys):
    spec = tmp_path / "broken.spec"
    spec.write_text(BROKEN_PAIR, encoding="utf-8")
    assert main(["validate", str(spec), "--out", str(tmp_path / "out")]) == EXIT_FAILED
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is False
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    assert "fiber_constancy" in failed


@pytest.mark.parametrize("argv", [
    ["validate", "no-such-system"],
    ["validate", "harmonic1d", "--set", "bogus=1"],
    ["validate", "harmonic1d", "--set", "tol_rank"],
    ["topology", "harmonic1d", "--point", "1,0,0"],
])
def test_usage_errors_exit_two(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_argparse_rejects_missing_system():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["validate"])
    assert info.value.code == 2


def test_overrides_from_flags():
    args = build_parser().parse_args(["chart", "harmonic1d", "--tol-blocks", "1e-6", "--grid-size", "9",
                                      "--set", "search.half_width=20"])
    assert collect_overrides(args) == {"tol_blocks": 1e-6, "grid_size": 9, "search.half_width": 20}
    bad = build_parser().parse_args(["chart", "harmonic1d", "--set", "tol_rank=abc"])
    with pytest.raises(SpecError):
        collect_overrides(bad)


def test_chart_artifacts(tmp_path, capsys):
    assert main(["chart", "harmonic1d", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["checks"][-1]["name"] == "chart_roundtrip"
    chart = json.loads((tmp_path / "chart.json").read_text())
    assert chart["coordinates"] == ["I1", "phi1"]
    samples = pd.read_csv(tmp_path / "chart_samples.csv")
    assert list(samples.columns) == ["q1", "p1", "I1", "phi1"]
    assert len(samples) == 16


def test_trace_columns(tmp_path, capsys):
    code = main(["trace", "free1d", "--t-max", "1", "--dt", "0.5", "--out", str(tmp_path)])
    assert code == EXIT_OK
    capsys.readouterr()
    trace = pd.read_csv(tmp_path / "trace.csv")
    assert list(trace.columns) == ["t", "q1", "p1", "I1", "t1"]
    assert trace["t"].tolist() == [0.0, 0.5, 1.0]
    assert trace["t1"].tolist() == pytest.approx([0.0, 0.5, 1.0], abs=1e-9)
# end file
