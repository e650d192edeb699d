import json
import math

import numpy as np
import pytest

from radmax.report import ExperimentReport


def _report():
    rep = ExperimentReport("demo", ["name", "value", "flag"], parameters={"a": 1.5},
                           provenance={"seed": 0})
    rep.add("x", 0.1, True)
    rep.add("y", np.float64(math.inf), False)
    rep.add("z", math.nan, None)
    return rep


def test_row_width_checked():
    with pytest.raises(ValueError):
        _report().add(1, 2)


def test_csv_format():
    lines = _report().to_csv().split("\n")
    assert lines[0] == "name,value,flag"
    assert lines[1] == "x,0.10000000000000001,true"
    assert lines[2] == "y,inf,false" and lines[3] == "z,nan,"


def test_csv_floats_round_trip():
    rep = ExperimentReport("demo", ["v"])
    vals = [1 / 3, 2 ** -60, 1e300]
    for v in vals:
        rep.add(v)
    parsed = [float(x) for x in rep.to_csv().split("\n")[1:-1]]
    assert parsed == vals


def test_json_round_trip(tmp_path):
    rep = _report()
    rep.passed = True
    csv_path, json_path = rep.write(tmp_path, "t0")
    assert csv_path.name == "demo-t0.csv" and json_path.name == "demo-t0.json"
    d = json.loads(json_path.read_text())
    assert d["rows"][1][1] == "inf" and "version" in d["provenance"]
    back = ExperimentReport.from_dict(d)
    assert back.columns == rep.columns and back.passed is True and back.parameters == {"a": 1.5}


def test_schema_version_checked():
    d = _report().to_dict()
    d["schema_version"] = 99
    with pytest.raises(ValueError):
        ExperimentReport.from_dict(d)
