"""Every acceptance criterion at its stated size and tolerance (the full tier).

Each test records one ``criterion N: PASS|FAIL`` line, printed in the
session summary. A failing criterion stays red; see the README for the
criteria that are not attainable as stated.
"""
import os
import subprocess
import sys
import time

import pytest

from merw.verify import Suite

from conftest import ACCEPTANCE_LINES

SEED = 42
WORKERS = os.cpu_count() or 1
# stated wall-time limits in seconds
LIMITS = {1: 60, 2: 60, 4: 600}
NAMES = {i: name for i, name, _ in Suite.CRITERIA}


def record(cid, ok, note=""):
    line = f"criterion {cid:>2}: {'PASS' if ok else 'FAIL'}  {NAMES.get(cid, 'reproducibility')}"
    ACCEPTANCE_LINES.append((cid, line + (f"  ({note})" if note else "")))


@pytest.fixture(scope="module")
def suite():
    return Suite("full", SEED, WORKERS)


@pytest.mark.slow
@pytest.mark.parametrize("cid", [i for i, _, _ in Suite.CRITERIA if i != 11])
def test_criterion(suite, cid):
    t0 = time.perf_counter()
    res = suite.run_one(cid)
    elapsed = time.perf_counter() - t0
    ok = res["status"] == "pass"
    note = ""
    if cid in LIMITS:
        ok = ok and elapsed < LIMITS[cid]
        note = f"{elapsed:.1f} s, limit {LIMITS[cid]} s"
    record(cid, ok, note)
    assert res["status"] == "pass", res["details"]
    if cid in LIMITS:
        assert elapsed < LIMITS[cid]


@pytest.mark.slow
def test_criterion_11_worker_independence(tmp_path):
    reports = []
    for w in (1, 4, 16):
        out = tmp_path / f"report_{w}.json"
        subprocess.run([sys.executable, "-m", "merw", "verify", "--tier", "fast", "--seed", str(SEED),
                        "--workers", str(w), "--out", str(out)], capture_output=True)
        reports.append(out.read_bytes() if out.exists() else None)
    ok = reports[0] is not None and reports.count(reports[0]) == 3
    record(11, ok, "fast tier, workers 1/4/16")
    assert ok
