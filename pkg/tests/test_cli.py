import json

import numpy as np
import pytest

import divlab.suite
from divlab.cli import dumps, main, parse_diversity, parse_ground


def run(tmp_path, capsys, doc, *args):
    path = tmp_path / "in.json"
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    code = main([*args, "--in", str(path)])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def table(labels, f):
    import itertools
    rows = []
    for r in range(2, len(labels) + 1):
        for sub in itertools.combinations(labels, r):
            rows.append({"subset": list(sub), "value": f(sub)})
    return {"ground": labels, "diversity": rows}


def entries(report_rows):
    return {tuple(r["subset"]): r["value"] for r in report_rows}


TRIANGLE = {"ground": ["a", "b", "c"],
            "hypergraph": {"edges": [{"members": p, "weight": 1} for p in (["a", "b"], ["a", "c"], ["b", "c"])]},
            "demands": [{"subset": ["a", "b", "c"], "value": 1}]}
PATH = {"ground": ["a", "b", "c"],
        "hypergraph": {"edges": [{"members": ["a", "b"], "weight": 1}, {"members": ["b", "c"], "weight": 1}]},
        "demands": [{"subset": ["a", "c"], "value": 1}]}


def test_validate(tmp_path, capsys):
    code, rep = run(tmp_path, capsys, table(["a", "b", "c"], lambda s: len(s) - 1), "validate")
    assert code == 0 and rep == {"valid": True, "violations": []}
    bad = table(["a", "b", "c"], lambda s: 3 - len(s) + 1)   # pairs 2, whole set 1
    code, rep = run(tmp_path, capsys, bad, "validate")
    assert code == 1 and not rep["valid"] and rep["violations"]


def test_parse_errors(tmp_path, capsys):
    assert run(tmp_path, capsys, "{not json", "validate")[0] == 2
    assert run(tmp_path, capsys, [1, 2], "validate")[0] == 2
    partial = {"ground": ["a", "b", "c"], "diversity": [{"subset": ["a", "b"], "value": 1}]}
    assert run(tmp_path, capsys, partial, "validate")[0] == 2
    unknown = {"ground": ["a", "b"], "diversity": [{"subset": ["a", "z"], "value": 1}]}
    assert run(tmp_path, capsys, unknown, "validate")[0] == 2
    assert run(tmp_path, capsys, TRIANGLE, "build")[0] == 2
    assert run(tmp_path, capsys, TRIANGLE, "flowcut")[0] == 2
    assert main(["nonsense"]) == 2
    capsys.readouterr()


def test_build_hsteiner(tmp_path, capsys):
    doc = {"ground": list("abcd"),
           "hypergraph": {"edges": [{"members": list("abc"), "weight": 1},
                                    {"members": list("cd"), "weight": 1}]}}
    code, rep = run(tmp_path, capsys, doc, "build", "--kind", "hsteiner")
    assert code == 0 and len(rep["diversity"]) == 16
    vals = entries(rep["diversity"])
    assert vals[("a", "d")] == 2 and vals[("a", "b")] == 1 and vals[()] == 0


def test_build_cut_and_constructor_error(tmp_path, capsys):
    code, rep = run(tmp_path, capsys, {"ground": list("abc"), "cut": ["a"]}, "build", "--kind", "cut")
    vals = entries(rep["diversity"])
    assert code == 0 and vals[("a", "b")] == 1 and vals[("b", "c")] == 0 and vals[("a", "b", "c")] == 1
    bad_metric = {"ground": ["a", "b", "c"], "metric": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}
    assert run(tmp_path, capsys, bad_metric, "build", "--kind", "diameter")[0] == 1


def test_build_meanwidth_reproducible(tmp_path, capsys):
    doc = {"ground": ["a", "b"], "points": {"dim": 2, "coords": [[0, 0], [3, 4]]},
           "samples": 20000, "seed": 5}
    first = run(tmp_path, capsys, doc, "build", "--kind", "meanwidth")[1]
    second = run(tmp_path, capsys, doc, "build", "--kind", "meanwidth")[1]
    assert first == second
    assert entries(first["diversity"])[("a", "b")] == pytest.approx(5, rel=0.05)
    other = run(tmp_path, capsys, doc, "build", "--kind", "meanwidth", "--seed", "6")[1]
    assert other != first


@pytest.mark.parametrize("kind,extra", [
    ("diameter", {"metric": [0, 1, 2, 1, 0, 1, 2, 1, 0]}),
    ("tsp", {"metric": [[0, 1, 2], [1, 0, 1], [2, 1, 0]]}),
    ("l1", {"points": {"dim": 1, "coords": [[0], [1], [3]]}}),
    ("steiner", {"hypergraph": {"edges": [{"members": ["a", "b"], "weight": 1},
                                          {"members": ["b", "c"], "weight": 2}]}}),
    ("phylo", {"tree": {"nodes": ["r", "a", "b", "c"],
                        "edges": [{"parent": "r", "child": x, "weight": 1} for x in "abc"]}}),
    ("measure", {"measure": {"atoms": ["p", "q"], "mass": [1, 2],
                             "sets": {"a": ["p"], "b": ["q"], "c": ["p", "q"]}}}),
    ("sdiv", {"random_family": {"outcomes": [{"probability": 0.5, "states": [0, 1, 1]},
                                             {"probability": 0.5, "states": {"a": 1, "b": 1, "c": 0}}]}}),
])
def test_build_kinds_are_valid_diversities(tmp_path, capsys, kind, extra):
    code, rep = run(tmp_path, capsys, {"ground": ["a", "b", "c"], **extra}, "build", "--kind", kind)
    assert code == 0
    assert run(tmp_path, capsys, rep, "validate")[0] == 0


def test_round_trip_is_bitwise(tmp_path, capsys):
    rng = np.random.default_rng(0)
    coords = rng.normal(size=(4, 3)).tolist()
    doc = {"ground": list("abcd"), "points": {"dim": 3, "coords": coords}}
    code, rep = run(tmp_path, capsys, doc, "build", "--kind", "l1")
    from divlab.core import GroundSet
    from divlab.zoo import PointCloud, l1_diversity
    direct = l1_diversity(PointCloud(GroundSet(tuple("abcd")), np.array(coords)))
    again = parse_diversity(json.loads(dumps(rep)), parse_ground(rep))
    assert np.array_equal(again.values, direct.values)


def test_embed(tmp_path, capsys):
    code, rep = run(tmp_path, capsys, table(["a", "b", "c"], lambda s: len(s) - 1), "embed")
    assert code == 0 and rep["k1"] == pytest.approx(4 / 3)
    # split system: k1 = 1 and the coordinates reproduce it in l1
    doc = {"ground": list("abcd"), "cut": ["a", "b"]}
    split = run(tmp_path, capsys, doc, "build", "--kind", "cut")[1]
    code, rep = run(tmp_path, capsys, split, "embed")
    assert rep["k1"] == pytest.approx(1)
    xs = {k: np.array(v) for k, v in rep["embedding"]["coords"].items()}
    for row in split["diversity"]:
        if len(row["subset"]) == 2:
            x, y = row["subset"]
            assert np.abs(xs[x] - xs[y]).sum() == pytest.approx(row["value"])
    code, rep = run(tmp_path, capsys, table(["a", "b", "c"], lambda s: 0), "embed")
    assert code == 0 and rep["k1"] == 1 and rep["witness"] == []


def test_flowcut_modes(tmp_path, capsys):
    code, rep = run(tmp_path, capsys, TRIANGLE, "flowcut", "--mode", "gamma")
    assert code == 0 and rep["gamma"] == pytest.approx(4 / 3)
    assert run(tmp_path, capsys, PATH, "flowcut", "--mode", "gamma")[1]["gamma"] == pytest.approx(1)
    code, rep = run(tmp_path, capsys, TRIANGLE, "flowcut", "--mode", "verify")
    assert code == 0 and rep["ok"]
    assert (rep["maxhsp"], rep["mincut"], rep["k1"]) == (pytest.approx(1.5), pytest.approx(2), pytest.approx(4 / 3))
    code, rep = run(tmp_path, capsys, TRIANGLE, "flowcut", "--mode", "maxhsp")
    assert rep["maxhsp"] == pytest.approx(1.5) == rep["dual_value"]
    code, rep = run(tmp_path, capsys, TRIANGLE, "flowcut", "--mode", "mincut")
    assert rep["mincut"] == 2 and len(rep["cuts"]) == 3
    code, rep = run(tmp_path, capsys, TRIANGLE, "flowcut", "--mode", "tight")
    assert rep["gamma"] == pytest.approx(4 / 3) == rep["k1"]


def test_flowcut_capacities_field(tmp_path, capsys):
    doc = {"ground": ["a", "b", "c"],
           "capacities": [{"subset": ["a", "b"], "value": 2}, {"subset": ["b", "c"], "value": 1}],
           "demands": [{"subset": ["a", "c"], "value": 1}]}
    assert run(tmp_path, capsys, doc, "flowcut", "--mode", "mincut")[1]["mincut"] == 1
    doc["demands"] = [{"subset": ["a"], "value": 1}]
    assert run(tmp_path, capsys, doc, "flowcut", "--mode", "gamma")[0] == 1


def test_out_file(tmp_path, capsys):
    src = tmp_path / "t.json"
    src.write_text(json.dumps(TRIANGLE))
    out = tmp_path / "r.json"
    assert main(["flowcut", "--mode", "gamma", "--in", str(src), "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["gamma"] == pytest.approx(4 / 3)


def test_verify_suite(capsys):
    assert main(["verify-suite", "--n", "3", "--count", "5"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["cases"] == 5 and rep["failures"] == []
    assert main(["verify-suite", "--count", "0"]) == 0
    assert json.loads(capsys.readouterr().out)["checks"] == 0
    assert main(["verify-suite", "--n", "9"]) == 2


def test_verify_suite_default_run(capsys):
    assert main(["verify-suite"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert (rep["n"], rep["cases"], rep["seed"]) == (4, 50, 0)


def test_verify_suite_threads_are_deterministic(capsys, monkeypatch):
    main(["verify-suite", "--n", "3", "--count", "6", "--seed", "4"])
    serial = capsys.readouterr().out
    monkeypatch.setenv("DIVLAB_THREADS", "3")
    main(["verify-suite", "--n", "3", "--count", "6", "--seed", "4"])
    assert capsys.readouterr().out == serial


def test_verify_suite_catches_injected_bug(capsys, monkeypatch):
    real = divlab.suite.alternating_sums
    monkeypatch.setattr(divlab.suite, "alternating_sums", lambda t: real(t) * 1.001)
    assert main(["verify-suite", "--n", "3", "--count", "3"]) == 1
    rep = json.loads(capsys.readouterr().out)
    assert {f["check"] for f in rep["failures"]} == {"cut_cone"}


def test_infinite_values_become_null():
    assert json.loads(dumps({"x": float("inf"), "y": np.float64(2.5)})) == {"x": None, "y": 2.5}
