"""Freeze oracle reports for the derived examples into tests/fixtures.

Run from the repository root: python3 scripts/make_fixtures.py
"""
import json
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from derivations import ALL, report  # noqa: E402


def main():
    out = {}
    for name in ALL:
        t = time.perf_counter()
        r = report(name)
        out[name] = r.to_json()
        print(f"{name:36s} agree={r.agree} ({time.perf_counter() - t:.1f}s)")
    path = ROOT / "tests" / "fixtures" / "oracle_reports.json"
    path.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    bad = [k for k, v in out.items() if not v["agree"]]
    if bad:
        print("disagreements:", ", ".join(bad))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
