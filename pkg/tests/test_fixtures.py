"""Frozen oracle reports: every one agreed when frozen, and the cheap ones still
reproduce bit for bit from the current code."""
import json
from pathlib import Path

import pytest

from derivations import ALL, CHEAP, report

FROZEN = json.loads((Path(__file__).parent / "fixtures" / "oracle_reports.json").read_text())


def test_every_derivation_is_frozen():
    assert set(FROZEN) == set(ALL)


@pytest.mark.parametrize("name", sorted(FROZEN))
def test_frozen_report_agrees(name):
    r = FROZEN[name]
    assert r["agree"], f"{name}: oracle {r['oracle_value']} vs main {r['main_value']}"


@pytest.mark.parametrize("name", CHEAP)
def test_cheap_recomputation_matches(name):
    assert report(name).to_json() == FROZEN[name]
