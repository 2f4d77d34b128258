"""Command line front end: JSON instance documents in, JSON reports out.

Exit codes: 0 success, 1 domain failure (invalid diversity, failed check,
constructor or solver error), 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any

import numpy as np

from .core import (EPS_DIV, DiversityError, GroundSet, SubsetVector, TabulatedDiversity,
                   TabulatedMetric, popcounts, validate_diversity)
from .embed import min_distortion_l1
from .flowcut import (extract_tight_instance, gamma, max_hsp_dual, max_hsp_primal, min_hyp_cut,
                      verify_sandwich)
from .l1cone import chain_embedding
from .linprog import EPS_LP, LpError
from .suite import run_suite
from .zoo import (DiscreteRandomFamily, FiniteMeasureSpace, PhyloTree, PointCloud,
                  WeightedGraph, WeightedHypergraph, cut_diversity, diameter_diversity,
                  hypergraph_steiner_diversity, l1_diversity, mean_width_diversity,
                  measure_diversity, phylogenetic_diversity, s_diversity, steiner_diversity,
                  tsp_diversity)

BUILD_KINDS = ("diameter", "l1", "steiner", "hsteiner", "phylo", "tsp", "measure", "sdiv",
               "meanwidth", "cut")
FLOW_MODES = ("maxhsp", "mincut", "gamma", "verify", "tight")


class ParseError(ValueError):
    """The document is malformed or lacks a field the command needs."""


# ---------------------------------------------------------------------------
# reading documents
# ---------------------------------------------------------------------------

def load_document(path: str | None) -> dict:
    try:
        if path is None or path == "-":
            doc = json.load(sys.stdin)
        else:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    return doc


def _need(doc: dict, key: str):
    if key not in doc:
        raise ParseError(f"document lacks field {key!r}")
    return doc[key]


def _number(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{what} must be a number, got {x!r}")
    return float(x)


def parse_ground(doc: dict) -> GroundSet:
    labels = _need(doc, "ground")
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise ParseError("'ground' must be an array of strings")
    try:
        return GroundSet(tuple(labels))
    except DiversityError as exc:
        raise ParseError(str(exc)) from exc


def _mask(ground: GroundSet, members, what: str) -> int:
    if not isinstance(members, list):
        raise ParseError(f"{what} must be an array of labels")
    try:
        return ground.mask(members)
    except (KeyError, ValueError, DiversityError) as exc:
        raise ParseError(f"{what}: {exc}") from exc


def _entries(ground: GroundSet, items, what: str) -> dict[int, float]:
    if not isinstance(items, list):
        raise ParseError(f"'{what}' must be an array of {{subset, value}} objects")
    out: dict[int, float] = {}
    for k, item in enumerate(items):
        if not isinstance(item, dict) or "subset" not in item or "value" not in item:
            raise ParseError(f"{what}[{k}] needs 'subset' and 'value'")
        m = _mask(ground, item["subset"], f"{what}[{k}].subset")
        if m in out:
            raise ParseError(f"{what}[{k}]: subset listed twice")
        out[m] = _number(item["value"], f"{what}[{k}].value")
    return out


def parse_diversity(doc: dict, ground: GroundSet) -> TabulatedDiversity:
    """Every subset of size >= 2 must be listed; smaller ones default to 0."""
    entries = _entries(ground, _need(doc, "diversity"), "diversity")
    values = np.zeros(ground.size)
    sizes = popcounts(ground.n)
    missing = [m for m in range(ground.size) if sizes[m] >= 2 and m not in entries]
    if missing:
        raise ParseError(f"diversity table is not total: {len(missing)} subsets missing, "
                         f"e.g. {list(ground.members(missing[0]))}")
    for m, v in entries.items():
        values[m] = v
    return TabulatedDiversity(ground, values)


def parse_vector(doc: dict, ground: GroundSet, key: str) -> SubsetVector:
    try:
        return SubsetVector(ground, _entries(ground, _need(doc, key), key))
    except DiversityError as exc:
        raise ParseError(f"{key}: {exc}") from exc


def parse_hypergraph(doc: dict, ground: GroundSet, graph: bool = False) -> WeightedHypergraph:
    h = _need(doc, "hypergraph")
    if not isinstance(h, dict) or not isinstance(h.get("edges"), list):
        raise ParseError("'hypergraph' must be {\"edges\": [...]}")
    edges = []
    for k, e in enumerate(h["edges"]):
        if not isinstance(e, dict) or "members" not in e or "weight" not in e:
            raise ParseError(f"hypergraph.edges[{k}] needs 'members' and 'weight'")
        edges.append((_mask(ground, e["members"], f"hypergraph.edges[{k}].members"),
                      _number(e["weight"], f"hypergraph.edges[{k}].weight")))
    cls = WeightedGraph if graph else WeightedHypergraph
    return cls(ground, tuple(edges))


def parse_metric(doc: dict, ground: GroundSet) -> TabulatedMetric:
    raw = _need(doc, "metric")
    try:
        d = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"'metric' must be numeric: {exc}") from exc
    n = ground.n
    if d.ndim == 1 and d.size == n * n:
        d = d.reshape(n, n)
    if d.shape != (n, n):
        raise ParseError(f"'metric' must be {n} x {n} (row-major), got shape {d.shape}")
    return TabulatedMetric(ground, d)


def parse_points(doc: dict, ground: GroundSet) -> PointCloud:
    pts = _need(doc, "points")
    if not isinstance(pts, dict) or "coords" not in pts:
        raise ParseError("'points' must be {\"dim\": k, \"coords\": [[...], ...]}")
    try:
        coords = np.array(pts["coords"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"points.coords must be numeric: {exc}") from exc
    if coords.ndim == 1:
        coords = coords[:, None]
    if "dim" in pts and (coords.ndim != 2 or coords.shape[1] != pts["dim"]):
        raise ParseError(f"points.coords do not have dimension {pts['dim']}")
    if coords.shape[0] != ground.n:
        raise ParseError(f"need {ground.n} points, got {coords.shape[0]}")
    return PointCloud(ground, coords)


def parse_measure(doc: dict, ground: GroundSet):
    raw = _need(doc, "measure")
    if not isinstance(raw, dict) or not {"atoms", "sets"} <= raw.keys():
        raise ParseError("'measure' must be {\"atoms\": [...], \"mass\": [...], \"sets\": {...}}")
    atoms = [str(a) for a in raw["atoms"]]
    mass = [_number(m, "measure.mass") for m in raw.get("mass", [1.0] * len(atoms))]
    sets = raw["sets"]
    if not isinstance(sets, dict) or set(sets) != set(ground.labels):
        raise ParseError("measure.sets must map every ground label to an atom list")
    return FiniteMeasureSpace(tuple(atoms), tuple(mass)), [[str(a) for a in sets[x]] for x in ground.labels]


def parse_random_family(doc: dict, ground: GroundSet) -> DiscreteRandomFamily:
    raw = _need(doc, "random_family")
    if not isinstance(raw, dict) or not isinstance(raw.get("outcomes"), list):
        raise ParseError("'random_family' must be {\"outcomes\": [...]}")
    outcomes = []
    for k, o in enumerate(raw["outcomes"]):
        if not isinstance(o, dict) or "probability" not in o or "states" not in o:
            raise ParseError(f"random_family.outcomes[{k}] needs 'probability' and 'states'")
        states = o["states"]
        if isinstance(states, dict):
            if set(states) != set(ground.labels):
                raise ParseError(f"random_family.outcomes[{k}].states must cover the ground set")
            states = [states[x] for x in ground.labels]
        outcomes.append((_number(o["probability"], "probability"), tuple(states)))
    return DiscreteRandomFamily(ground, tuple(outcomes))


def parse_tree(doc: dict, ground: GroundSet) -> PhyloTree:
    raw = _need(doc, "tree")
    if not isinstance(raw, dict) or not {"nodes", "edges"} <= raw.keys():
        raise ParseError("'tree' must be {\"nodes\", \"edges\", \"labels\"}")
    edges = []
    for k, e in enumerate(raw["edges"]):
        if not isinstance(e, dict) or not {"parent", "child", "weight"} <= e.keys():
            raise ParseError(f"tree.edges[{k}] needs 'parent', 'child' and 'weight'")
        edges.append((str(e["parent"]), str(e["child"]), _number(e["weight"], "tree weight")))
    labels = raw.get("labels", {x: x for x in ground.labels})
    return PhyloTree(ground, tuple(str(v) for v in raw["nodes"]), tuple(edges), dict(labels))


# ---------------------------------------------------------------------------
# writing documents
# ---------------------------------------------------------------------------

def _clean(x: Any):
    """JSON-ready copy; non-finite floats become null."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(doc: dict) -> str:
    # float repr is the shortest string that round-trips to the same double
    return json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"


def _vector_doc(ground: GroundSet, v: SubsetVector) -> list:
    return [{"subset": list(ground.members(m)), "value": float(x)}
            for m, x in sorted(v.values.items(), key=lambda kv: (popcounts(ground.n)[kv[0]], kv[0]))]


def diversity_doc(t: TabulatedDiversity) -> dict:
    g = t.ground
    order = sorted(range(g.size), key=lambda m: (popcounts(g.n)[m], m))
    return {"ground": list(g.labels),
            "diversity": [{"subset": list(g.members(m)), "value": float(t.values[m])} for m in order]}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _tol(args, doc: dict, default: float) -> float:
    if args.tol is not None:
        return args.tol
    if "tolerance" in doc:
        return _number(doc["tolerance"], "tolerance")
    return default


def _seed(args, doc: dict) -> int:
    if args.seed is not None:
        return args.seed
    s = doc.get("seed", 0)
    if isinstance(s, bool) or not isinstance(s, int):
        raise ParseError("'seed' must be an integer")
    return s


def cmd_validate(args) -> tuple[int, dict]:
    doc = load_document(args.inp)
    ground = parse_ground(doc)
    t = parse_diversity(doc, ground)
    rep = validate_diversity(t, _tol(args, doc, EPS_DIV))
    return (0 if rep.ok else 1), {"valid": rep.ok,
                                  "violations": [v.describe(ground) for v in rep.violations]}


def build_table(kind: str, doc: dict, args) -> TabulatedDiversity:
    ground = parse_ground(doc)
    if kind in ("diameter", "tsp"):
        m = parse_metric(doc, ground)
        bad = m.violations(_tol(args, doc, EPS_DIV))
        if bad:
            raise DiversityError(f"metric is invalid: {bad[0]}")
        return diameter_diversity(m) if kind == "diameter" else tsp_diversity(m)
    if kind == "l1":
        return l1_diversity(parse_points(doc, ground))
    if kind == "steiner":
        return steiner_diversity(parse_hypergraph(doc, ground, graph=True))
    if kind == "hsteiner":
        return hypergraph_steiner_diversity(parse_hypergraph(doc, ground))
    if kind == "phylo":
        return phylogenetic_diversity(parse_tree(doc, ground))
    if kind == "measure":
        space, sets = parse_measure(doc, ground)
        return measure_diversity(space, ground, sets)
    if kind == "sdiv":
        return s_diversity(parse_random_family(doc, ground))
    if kind == "meanwidth":
        samples = doc.get("samples", 100_000)
        if isinstance(samples, bool) or not isinstance(samples, int):
            raise ParseError("'samples' must be an integer")
        return mean_width_diversity(parse_points(doc, ground), samples, _seed(args, doc))
    if kind == "cut":
        return cut_diversity(ground, _mask(ground, _need(doc, "cut"), "cut"))
    raise ParseError(f"unknown kind {kind!r}")


def cmd_build(args) -> tuple[int, dict]:
    if args.kind is None:
        raise ParseError(f"build needs --kind, one of {', '.join(BUILD_KINDS)}")
    doc = load_document(args.inp)
    return 0, diversity_doc(build_table(args.kind, doc, args))


def cmd_embed(args) -> tuple[int, dict]:
    doc = load_document(args.inp)
    ground = parse_ground(doc)
    t = parse_diversity(doc, ground)
    res = min_distortion_l1(t, _tol(args, doc, EPS_LP))
    emb = chain_embedding(res.witness)
    return 0, {
        "k1": res.k1,
        "witness": [{"side": list(ground.members(u)), "weight": w}
                    for u, w in sorted(res.witness.split_weights().items())],
        "embedding": {"dim": emb.m,
                      "coords": {x: emb.coords[i].tolist() for i, x in enumerate(ground.labels)}},
        "capacities": _vector_doc(ground, res.capacities),
        "demands": _vector_doc(ground, res.demands),
    }


def _capacities(doc: dict, ground: GroundSet) -> SubsetVector:
    if "capacities" in doc:
        return parse_vector(doc, ground, "capacities")
    h = parse_hypergraph(doc, ground)
    return SubsetVector(ground, dict(h.edges))


def cmd_flowcut(args) -> tuple[int, dict]:
    if args.mode not in FLOW_MODES:
        raise ParseError(f"flowcut needs --mode, one of {', '.join(FLOW_MODES)}")
    doc = load_document(args.inp)
    ground = parse_ground(doc)
    eps = _tol(args, doc, EPS_LP)
    members = ground.members
    if args.mode == "tight":
        h = parse_hypergraph(doc, ground)
        t = parse_diversity(doc, ground) if "diversity" in doc else hypergraph_steiner_diversity(h)
        inst = extract_tight_instance(t, h, eps)
        g = gamma(inst.capacities, inst.demands, eps)
        return 0, {"k1": inst.k1, "gamma": g.gamma,
                   "capacities": _vector_doc(ground, inst.capacities),
                   "demands": _vector_doc(ground, inst.demands)}
    c = _capacities(doc, ground)
    d = parse_vector(doc, ground, "demands")
    if args.mode == "maxhsp":
        sol = max_hsp_primal(c, d, eps)
        dual = max_hsp_dual(c, d, eps)
        return 0, {"maxhsp": sol.f, "dual_value": dual.value,
                   "packing": [{"cover": [list(members(e)) for e in cover],
                                "demand": list(members(s)), "weight": z}
                               for (cover, s), z in sol.z.items()],
                   "edge_load": [{"subset": list(members(e)), "value": v}
                                 for e, v in sol.edge_load.items()],
                   "dual_diversity": diversity_doc(dual.diversity)["diversity"]}
    if args.mode == "mincut":
        rep = min_hyp_cut(c, d)
        return 0, {"mincut": rep.value, "best_cut": list(members(rep.best_u)),
                   "cuts": [{"side": list(members(u)), "capacity": cc, "demand": dd}
                            for u, cc, dd in rep.per_cut]}
    if args.mode == "gamma":
        g = gamma(c, d, eps)
        return 0, {"gamma": g.gamma, "maxhsp": g.packing.f, "mincut": g.cut.value,
                   "best_cut": list(members(g.cut.best_u))}
    rep = verify_sandwich(c, d, eps)
    return (0 if rep.ok else 1), {"maxhsp": rep.maxhsp, "mincut": rep.mincut, "k1": rep.k1,
                                  "lower_slack": rep.lower_slack,
                                  "upper_slack": rep.upper_slack, "ok": rep.ok}


def cmd_verify_suite(args) -> tuple[int, dict]:
    n = 4 if args.n is None else args.n
    count = 50 if args.count is None else args.count
    seed = 0 if args.seed is None else args.seed
    if not 1 <= n <= 6:
        raise ParseError("--n must be between 1 and 6")
    if count < 0:
        raise ParseError("--count must be >= 0")
    cases = run_suite(seed, n, count)
    failures = [{"case": c.index, "check": ch.name, "detail": ch.detail}
                for c in cases for ch in c.checks if not ch.ok]
    checks = sum(len(c.checks) for c in cases)
    return (1 if failures else 0), {"seed": seed, "n": n, "cases": count, "checks": checks,
                                    "failures": failures}


COMMANDS = {"validate": cmd_validate, "build": cmd_build, "embed": cmd_embed,
            "flowcut": cmd_flowcut, "verify-suite": cmd_verify_suite}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="divlab", description="Compute with finite diversities.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--in", dest="inp", metavar="FILE", help="input JSON document (default stdin)")
    p.add_argument("--out", metavar="FILE", help="write the report here (default stdout)")
    p.add_argument("--mode", choices=FLOW_MODES, help="flowcut computation")
    p.add_argument("--kind", choices=BUILD_KINDS, help="diversity family for build")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--n", type=int, help="ground set size for verify-suite")
    p.add_argument("--count", type=int, help="number of verify-suite cases")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        code, report = COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"divlab: {exc}", file=sys.stderr)
        return 2
    except (TypeError, KeyError, AttributeError) as exc:
        print(f"divlab: malformed document ({type(exc).__name__}: {exc})", file=sys.stderr)
        return 2
    except (DiversityError, LpError) as exc:
        print(f"divlab: {exc}", file=sys.stderr)
        return 1
    text = dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
