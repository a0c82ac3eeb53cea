import json
from fractions import Fraction
from pathlib import Path

import pytest

from fusions import cli
from fusions.render import svg
from fusions.scenario import ScenarioError, load, parse

ROOT = Path(__file__).resolve().parents[1]
SCN = ROOT / "scenarios"
GOLDEN = Path(__file__).parent / "fixtures" / "example1.svg"


def run(tmp_path, *args):
    out = tmp_path / "report.json"
    code = cli.main([*map(str, args), "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def strip_timing(r):
    return {k: v for k, v in r.items() if k != "timing"}


def test_schema_error_names_line_and_field():
    text = (SCN / "example1.json").read_text().replace('"grid": [40, 20]', '"grid": "40x20"')
    with pytest.raises(ScenarioError) as e:
        parse(text)
    line = text[:text.index('"grid"')].count("\n") + 1
    assert f"line {line}, field grid" in str(e.value)


def test_malformed_json_reports_line():
    with pytest.raises(ScenarioError, match="line 2"):
        parse('{\n  "box": ,\n}')


def test_grid_axes_must_match_box():
    with pytest.raises(ScenarioError, match="axes"):
        load(SCN / "example1.json", grid=(40,))


def test_overrides_change_hash():
    a, b = load(SCN / "example1.json"), load(SCN / "example1.json", grid=(8, 4))
    assert b.res == (8, 4) and a.text_hash != b.text_hash


def test_exit_code_error_on_bad_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": 1}')
    assert cli.main(["check-order", str(bad)]) == cli.ERROR
    assert "field" in capsys.readouterr().err
    assert cli.main(["check-order", str(tmp_path / "missing.json")]) == cli.ERROR


def test_exit_code_error_on_missing_section(tmp_path):
    code, rep = run(tmp_path, "categorize", SCN / "example1.json", "--grid", "8x4")
    assert code == cli.ERROR and rep is None


def test_check_order_example1(tmp_path):
    code, rep = run(tmp_path, "check-order", SCN / "example1.json", "--grid", "8x4", "--mode", "rational")
    assert code == cli.OK and rep["verdict"] == "Dominated"
    k = rep["result"]["kernel"]
    assert len(k["matrix"]) == len(k["sources"])


def test_certify_extreme_example2(tmp_path):
    code, rep = run(tmp_path, "certify-extreme", SCN / "example2.json", "--grid", "8x4")
    assert code == cli.OK and rep["verdict"] == "CertifiedExtreme"
    assert rep["result"]["flow_optimum"] == "0"
    res = rep["result"]["resolutions"]
    assert [r["grid"] for r in res] == [[8, 4], [4, 2], [2, 1]] and rep["result"]["resolutions_agree"]


def test_certify_exposed_verdicts(tmp_path):
    code, rep = run(tmp_path, "certify-exposed", SCN / "example1.json", "--grid", "8x4")
    assert code == cli.OK and rep["verdict"] == "Exposed"
    assert rep["result"]["primal"] == "1/4" and rep["result"]["diagram_source"] == "scenario"
    code, rep = run(tmp_path, "certify-exposed", SCN / "example2.json", "--grid", "8x4")
    assert code == cli.OK and rep["verdict"] == "NotUnique" and rep["result"]["counterexample"]


def test_inconclusive_exit_code(tmp_path, monkeypatch):
    def fake(sc):
        return cli.INCONCLUSIVE, {}, {"box": [[0, 0], [1, 1]]}, cli.UNDECIDED
    monkeypatch.setitem(cli.HANDLERS, "certify-extreme", fake)
    code, rep = run(tmp_path, "certify-extreme", SCN / "example2.json")
    assert code == cli.UNDECIDED and rep["verdict"] == cli.INCONCLUSIVE


@pytest.mark.parametrize("command,scenario", [("categorize", "split_1d"), ("threshold", "threshold"),
                                              ("coarsen", "example1"), ("solve-persuasion", "split_1d"),
                                              ("decompose", "example1")])
def test_commands_run_and_are_deterministic(tmp_path, command, scenario):
    args = [command, SCN / f"{scenario}.json"]
    if scenario == "example1":
        args += ["--grid", "8x4"]
    code, a = run(tmp_path, *args)
    _, b = run(tmp_path, *args)
    assert code == cli.OK
    assert strip_timing(a) == strip_timing(b)
    assert a["format"] == "fusions-report" and a["command"] == command


def test_expected_verdicts(tmp_path):
    _, rep = run(tmp_path, "categorize", SCN / "split_1d.json")
    protos = sorted(float(Fraction(p["point"][0])) for p in rep["result"]["prototypes"])
    assert protos == pytest.approx([0.25, 0.75], abs=1 / 40)
    _, rep = run(tmp_path, "threshold", SCN / "threshold.json")
    assert rep["verdict"] == "SinglePrototype" and rep["result"]["kappa_bar"] == "1/2"


def test_report_records_inputs(tmp_path):
    _, rep = run(tmp_path, "check-order", SCN / "example1.json", "--grid", "4x2", "--seed", "7", "--mode", "float")
    assert rep["resolution"] == [4, 2] and rep["seed"] == 7 and rep["mode"] == "float"
    assert rep["input_hash"] == load(SCN / "example1.json", grid=(4, 2), seed=7, mode="float").text_hash


def test_render_golden_svg(tmp_path):
    fig = tmp_path / "fig.svg"
    code, rep = run(tmp_path, "render", SCN / "example1.json", "--svg", fig)
    assert code == cli.OK and rep["result"] == {"atoms": 5, "cells": 3, "cells_from": "partition"}
    assert fig.read_text() == GOLDEN.read_text()
    # a pure function of the report geometry
    assert svg(rep["geometry"]) == GOLDEN.read_text()


def test_svg_is_2d_only(tmp_path):
    code, rep = run(tmp_path, "render", SCN / "split_1d.json", "--svg", tmp_path / "x.svg")
    assert code == cli.ERROR
    with pytest.raises(ValueError):
        svg({"box": [[0], [1]]})


def test_float_report_values_are_rounded():
    assert cli.ser(0.1 + 0.2) == 0.3


def test_nonpositive_tolerance_rejected(capsys):
    assert cli.main(["check-order", str(SCN / "example1.json"), "--tol-feas", "-1"]) == cli.ERROR
    assert "positive" in capsys.readouterr().err
