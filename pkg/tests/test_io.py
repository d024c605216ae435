import json
import math

import numpy as np

from merw import io as mio
from merw.closedform import exact_second_moment
from merw.engines import simulate
from merw.model import WalkConfig


def test_fmt_cells():
    assert mio.fmt(3) == "3"
    assert mio.fmt(np.int64(-2)) == "-2"
    assert mio.fmt(0.1) == "0.10000000000000001"
    assert float(mio.fmt(math.pi)) == math.pi
    assert mio.fmt(float("nan")) == ""
    assert mio.fmt(True) == "1"


def test_dumps_round_trip():
    obj = {"a": np.array([[1.0, 1 / 3], [0.0, np.nan]]), "b": [1, 2], "c": None, "d": "x"}
    text = mio.dumps(obj)
    assert text.endswith("\n")
    back = json.loads(text)
    assert back["a"][0][1] == 1 / 3
    assert back["a"][1][1] is None
    assert back["b"] == [1, 2] and back["c"] is None


def test_write_text_uses_lf(tmp_path):
    path = tmp_path / "x.csv"
    mio.write_text(path, "a\nb\n")
    assert path.read_bytes() == b"a\nb\n"


def test_trajectory_csv():
    traj = simulate(WalkConfig(2, 0.5, 5, seed=1), record="positions")
    lines = mio.trajectory_csv(traj).splitlines()
    assert lines[0] == "step,s1,s2"
    assert len(lines) == 6
    assert [int(x) for x in lines[-1].split(",")] == [5, *traj.positions[-1]]


def test_moment_csv():
    table = exact_second_moment(3, 2, 0.7)
    text = mio.moment_csv(table, {"extra": [1.0, 2.0, 3.0]})
    lines = text.splitlines()
    assert lines[0] == "n,e_s1,e_s2,cov1_1,cov1_2,cov2_1,cov2_2,extra"
    assert lines[1] == "1,0,0,0.5,0,0,0.5,1"


def test_series_csv():
    text = mio.series_csv([3, 4], [float("nan"), 0.25])
    assert text == "n,value\n3,\n4,0.25\n"
    mat = mio.series_csv([2], np.eye(2)[None])
    assert mat.splitlines()[0] == "n,value1,value2,value3,value4"


def test_manifest_fields():
    man = mio.manifest("simulate", {"dim": 2}, ["a.csv"], "0.1.0", engine="reduced", seed=7)
    assert man["schema_version"] == mio.MANIFEST_SCHEMA
    assert man["config"] == {"dim": 2} and man["outputs"] == ["a.csv"]
    assert {"timestamp", "version", "engine", "seed", "subcommand"} <= set(man)
