import io
import json

import pytest

from wqfinsler.acceptance import conformal_config
from wqfinsler.cli import run
from wqfinsler.metric import minkowski_config

FIELDS = {"command", "inputs", "outputs", "residuals", "verdict", "wall_time"}


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, out, _ = call(*argv)
    doc = json.loads(out)
    assert set(doc) == FIELDS
    return code, doc


@pytest.fixture
def mink(tmp_path):
    p = tmp_path / "mink.json"
    p.write_text(json.dumps(minkowski_config("square", c=(0.3, 0.0)).to_dict()))
    return str(p)


@pytest.fixture
def conf(tmp_path):
    p = tmp_path / "conf.json"
    p.write_text(json.dumps(conformal_config("quad_s2_2s_2").to_dict()))
    return str(p)


def test_catalog():
    code, doc = report("catalog")
    assert code == 0 and doc["verdict"] == "n.a."
    entries = doc["outputs"]["entries"]
    assert len(entries) == 10
    exp = next(e for e in entries if e["name"] == "exp_s_1")
    assert exp["epsilon"] == "NotDecomposable"
    assert exp["b0"] == pytest.approx(1.27846, abs=1e-5)


def test_validate_phi_pass_and_fail():
    code, doc = report("validate-phi", "--phi", "square_shift2", "--b0", "1.9", "--grid", "256")
    assert code == 0 and doc["outputs"]["admissible"]
    code, doc = report("validate-phi", "--phi", "square_shift2", "--b0", "2.2")
    assert code == 1 and doc["verdict"] == "fail"
    code, doc = report("validate-phi", "--phi", "cos_as", "--param", "a=0.0")
    assert code == 0 and doc["inputs"]["param"] == [["a", 0.0]]


def test_distance_weight_triangle(mink, tmp_path):
    code, doc = report("distance", "--config", mink, "--from", "0,0", "--to", "1,0")
    assert code == 0 and doc["outputs"]["value"] == pytest.approx(1.69)
    code, doc = report("distance", "--config", mink, "--from", "0,0", "--to", "1,0", "--method", "relax")
    assert code == 0 and doc["outputs"]["value"] == pytest.approx(1.69, rel=1e-6)
    pts = tmp_path / "pts.csv"
    pts.write_text("1,0\n0,0\n")
    code, doc = report("weight", "--config", mink, "--base", "0,0", "--points", str(pts))
    assert code == 0 and doc["outputs"]["omega"] == pytest.approx([1.2, 0.0])
    code, doc = report("triangle", "--config", mink, "--pts", "0,0;1,0;0,1")
    assert code == 0 and doc["outputs"]["forward"] == pytest.approx(3.5677, abs=1e-3)


def test_distance_certificate_csv(mink):
    code, out, err = call("distance", "--config", mink, "--from", "0,0", "--to", "1,0", "--method", "shoot", "--out", "csv")
    assert code == 0
    assert out.startswith("t,x1,x2,y1,y2,F\n")
    assert json.loads(err)["verdict"] == "pass"


def test_geodesic_json_and_csv(conf):
    args = ("geodesic", "--config", conf, "--start", "0.6,0,0.1", "--velocity", "0,3,0.8", "--steps", "2000", "--reverse-check")
    code, doc = report(*args)
    assert code == 0
    names = [r["name"] for r in doc["residuals"]]
    assert names == ["energy_drift", "reversibility"]
    code, out, err = call(*args, "--out", "csv")
    assert out.splitlines()[0] == "t,x1,x2,x3,y1,y2,y3,F"
    assert len(out.splitlines()) == 2002
    assert json.loads(err)["command"] == "geodesic"


def test_geodesic_reverse_check_fails_for_exp(tmp_path):
    p = tmp_path / "exp.json"
    p.write_text(json.dumps(conformal_config("exp_s_1").to_dict()))
    code, doc = report("geodesic", "--config", str(p), "--start", "0.6,0,0.1", "--velocity", "0,3,0.8", "--steps", "2000", "--reverse-check")
    assert code == 1 and doc["verdict"] == "fail"


def test_qspace(tmp_path):
    two = tmp_path / "two.json"
    two.write_text(json.dumps({"labels": ["a", "b"], "d": [[0, 3], [1, 0]]}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"labels": [0, 1, 2], "d": [[0, 1, 1], [1, 0, 1], [2, 1, 0]]}))
    assert report("qspace", "check", "--input", str(two))[0] == 0
    code, doc = report("qspace", "weigh", "--input", str(two))
    assert code == 0 and doc["outputs"]["omega"] == [0.0, 2.0]
    code, doc = report("qspace", "weigh", "--input", str(bad))
    assert code == 1 and "witness" in doc["outputs"]
    code, doc = report("qspace", "embed", "--input", str(two), "--lambda", "2")
    assert code == 0 and doc["outputs"]["psi"] == [[0, 0.0], [1, 0.5]]
    code, doc = report("qspace", "graph", "--input", str(two))
    assert code == 0 and doc["outputs"]["f"] == [0.0, 1.0]
    mp = tmp_path / "map.json"
    mp.write_text(json.dumps({"map": [0, 1], "target": {"d": [[0, 1.5], [0.5, 0]], "omega": [0, 1]}}))
    assert report("qspace", "morphism", "--input", str(two), "--map", str(mp))[0] == 0
    code, doc = report("qspace", "morphism", "--input", str(two), "--map", str(mp), "--kind", "isometric")
    assert code == 1 and doc["outputs"]["failures"]


def test_qspace_graph_lipschitz_witness(tmp_path):
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"d": [[0, 2], [2, 0]], "f": [0, 3]}))
    code, doc = report("qspace", "graph", "--input", str(g))
    assert code == 1 and "1-Lipschitz" in doc["outputs"]["error"]


def test_usage_errors(mink, tmp_path):
    code, doc = report("--bogus")
    assert code == 2 and doc["verdict"] == "fail"
    assert report()[0] == 2
    assert report("distance", "--from", "0,0", "--to", "1,0")[0] == 2
    code, doc = report("distance", "--config", mink, "--from", "0,x", "--to", "1,0")
    assert code == 2 and doc["outputs"]["field"] == "from"
    assert report("qspace", "embed", "--input", "missing.json")[0] == 2
    assert report("suite", "--criteria", "99")[0] == 2
    assert report("catalog", "--seed", "-1")[0] == 2


def test_malformed_config_points_to_field(tmp_path):
    doc = minkowski_config().to_dict()
    del doc["phi"]["name"]
    p = tmp_path / "broken.json"
    p.write_text(json.dumps(doc))
    code, rep = report("distance", "--config", str(p), "--from", "0,0", "--to", "1,0")
    assert code == 2 and rep["outputs"]["field"] == "phi.name"
    p.write_text("{not json")
    assert report("distance", "--config", str(p), "--from", "0,0", "--to", "1,0")[0] == 2


def test_domain_error_is_failure(mink):
    code, doc = report("distance", "--config", mink, "--from", "0,0", "--to", "3,0")
    assert code == 1 and doc["outputs"]["type"] == "DomainError"


def test_byte_identical_reports(mink):
    argv = ("--no-wall-time", "--seed", "7", "suite", "--criteria", "11,12")
    a = call(*argv)
    b = call(*argv)
    assert a[1] == b[1] and a[0] == 0
    assert json.loads(a[1])["wall_time"] == 0.0
    argv = ("triangle", "--config", mink, "--pts", "0,0;1,0;0,1", "--no-wall-time")
    assert call(*argv)[1] == call(*argv)[1]


def test_seed_changes_samples():
    a = json.loads(call("--no-wall-time", "--seed", "1", "suite", "--criteria", "11")[1])
    b = json.loads(call("--no-wall-time", "--seed", "2", "suite", "--criteria", "11")[1])
    assert a["inputs"]["seed"] == 1 and b["inputs"]["seed"] == 2
    assert a["verdict"] == b["verdict"] == "pass"


def test_suite_quick():
    code, doc = report("suite", "--quick")
    assert code == 0 and doc["verdict"] == "pass"
    assert [c["criterion"] for c in doc["outputs"]["criteria"]] == [2, 3, 4, 5, 6]
