"""ensemble-formation: Lie-algebraic checks, span checks, simulation and tracking.

Usage:
  ensemble-formation lie verify --config graph.json
  ensemble-formation lie ad --config ad.json --out results/
  ensemble-formation lie basis --config basis.json
  ensemble-formation span check [--config span.json] --seed 42
  ensemble-formation sim run --config sim.json --out results/
  ensemble-formation track run --config track.json --out results/ --jobs 2

Exit codes: 0 pass, 1 criterion fail, 2 hypothesis fail, 3 resource cap,
64 configuration or usage error.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import configuration as conf
from . import stochastic_lie as sl
from .digraph import Digraph, GraphError, GraphSchedule, diameter, is_strongly_connected
from .ensemble import (
    EdgeControl,
    IntegrationError,
    OriginalDynamics,
    ParameterizationSet,
    SigmaGrid,
    Trajectory,
    expm_series,
    integrate,
    snapped_switch_steps,
)
from .synthesis import HypothesisError, SynthesisError, TrackConfig, make_target, track

EXIT_OK, EXIT_FAIL, EXIT_HYPOTHESIS, EXIT_CAP, EXIT_CONFIG = 0, 1, 2, 3, 64


class ConfigError(ValueError):
    pass


# --- schemas -----------------------------------------------------------------

_GRAPH = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "edges"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "edges": {"type": "array", "items": {"type": "array", "items": {"type": "integer"},
                                             "minItems": 2, "maxItems": 2}},
    },
}
_SCHEDULE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["segments"],
    "properties": {
        "segments": {"type": "array", "minItems": 1, "items": {
            "type": "object", "additionalProperties": False, "required": ["t", "graph"],
            "properties": {"t": {"type": "number"}, "graph": _GRAPH}}},
    },
}
_CAPS = {
    "max_n": {"type": "integer", "minimum": 1},
    "max_depth": {"type": "integer", "minimum": 0},
    "max_elements": {"type": "integer", "minimum": 1},
}
_GRID = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lower", "upper", "counts"],
    "properties": {
        "lower": {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2},
        "upper": {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2},
        "counts": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1, "maxItems": 2},
    },
}
_RHO = {
    "type": "object",
    "additionalProperties": False,
    "required": ["functions"],
    "properties": {
        "functions": {"type": "array", "minItems": 1, "items": {
            "type": "object", "additionalProperties": False, "required": ["name"],
            "properties": {"name": {"type": "string"}, "params": {"type": "object"}}}},
        "nonzero_index": {"type": "integer", "minimum": 0},
    },
}
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}


def _obj(props, required=()):
    return {"type": "object", "additionalProperties": False, "required": list(required), "properties": props}


SCHEMAS = {
    "lie verify": _obj({"graph": _GRAPH, "levi": {"type": "boolean"}, **_CAPS}, ["graph"]),
    "lie ad": _obj({"graph": _GRAPH, "depth": {"type": "integer", "minimum": 0},
                    "matrices": {"type": "boolean"}, **_CAPS}, ["graph", "depth"]),
    "lie basis": _obj({"graph": _GRAPH, "depth": {"type": "integer", "minimum": 1}, **_CAPS}, ["graph"]),
    "span check": _obj({
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "max_agents": {"type": "integer", "minimum": 2},
        "trials": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "include_boundary": {"type": "boolean"},
        "seed": {"type": "integer", "minimum": 0},
    }),
    "sim run": _obj({
        "graph": _GRAPH, "schedule": _SCHEDULE, "grid": _GRID, "parameterizations": _RHO,
        "dt": {"type": "number", "exclusiveMinimum": 0}, "T": {"type": "number", "exclusiveMinimum": 0},
        "initial": _obj({"positions": _MATRIX, "random_dim": {"type": "integer", "minimum": 1}}),
        "control": _obj({
            "kind": {"enum": ["zero", "frozen", "table"]},
            "edges": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
            "values": {"type": "array"},
            "times": {"type": "array", "items": {"type": "number"}},
        }, ["kind"]),
        "seed": {"type": "integer", "minimum": 0},
    }, ["grid", "parameterizations", "dt", "T"]),
    "track run": _obj({
        "graph": _GRAPH, "schedule": _SCHEDULE, "grid": _GRID, "validation_grid": _GRID,
        "parameterizations": _RHO,
        "target": _obj({"name": {"type": "string"}, "params": {"type": "object"}}, ["name"]),
        "degree_cap": {"type": "integer", "minimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0}, "T": {"type": "number", "exclusiveMinimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "blend_time": {"type": "number", "exclusiveMinimum": 0},
        "epsilon": {"type": "number", "minimum": 0},
        "feedback": {"type": "boolean"},
        "initial_offset": _MATRIX,
    }, ["grid", "parameterizations", "target"]),
}

DEFAULTS = {
    "lie verify": {"levi": True, "max_n": sl.DEFAULT_MAX_N, "max_depth": sl.DEFAULT_MAX_DEPTH,
                   "max_elements": sl.DEFAULT_MAX_ELEMENTS},
    "lie ad": {"matrices": False, "max_n": sl.DEFAULT_MAX_N, "max_depth": sl.DEFAULT_MAX_DEPTH,
               "max_elements": sl.DEFAULT_MAX_ELEMENTS},
    "lie basis": {"max_n": sl.DEFAULT_MAX_N, "max_depth": sl.DEFAULT_MAX_DEPTH,
                  "max_elements": sl.DEFAULT_MAX_ELEMENTS},
    "span check": {"dims": [2, 3], "max_agents": 6, "trials": 100, "tol": 1e-10,
                   "include_boundary": True, "seed": 42},
    "sim run": {"control": {"kind": "zero"}, "seed": 0},
    "track run": {"degree_cap": 8, "dt": 1e-3, "T": 1.0, "tol": 1e-8, "blend_time": 0.1,
                  "epsilon": 1e-6, "feedback": False},
}


def load_config(command: str, path: str | None, seed: int | None) -> dict:
    if path is None:
        cfg = {}
    else:
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message} at {list(exc.absolute_path)}") from exc
    resolved = copy.deepcopy(DEFAULTS[command])
    resolved.update(cfg)
    if seed is not None:
        resolved["seed"] = seed
    return resolved


def _caps(cfg):
    return {k: cfg[k] for k in ("max_n", "max_depth", "max_elements")}


def _graph(cfg) -> Digraph:
    try:
        return Digraph.from_dict(cfg["graph"])
    except GraphError as exc:
        raise ConfigError(str(exc)) from exc


def _schedule(cfg, T) -> GraphSchedule:
    if ("graph" in cfg) == ("schedule" in cfg):
        raise ConfigError("give exactly one of 'graph' and 'schedule'")
    if "graph" in cfg:
        segs = ((0.0, _graph(cfg)),)
    else:
        try:
            segs = tuple((s["t"], Digraph.from_dict(s["graph"])) for s in cfg["schedule"]["segments"])
        except GraphError as exc:
            raise ConfigError(str(exc)) from exc
    for t, g in segs:
        if not is_strongly_connected(g):
            raise HypothesisError([f"graph at t={t} is not strongly connected"])
    try:
        return GraphSchedule(segs, T)
    except GraphError as exc:
        raise ConfigError(str(exc)) from exc


def _grid(d) -> SigmaGrid:
    if not len(d["lower"]) == len(d["upper"]) == len(d["counts"]):
        raise ConfigError("grid lower/upper/counts lengths differ")
    return SigmaGrid.box(d["lower"], d["upper"], d["counts"])


def _rho(d) -> ParameterizationSet:
    try:
        return ParameterizationSet.from_dict(d)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


# --- commands ----------------------------------------------------------------

def cmd_lie_verify(cfg, args):
    g = _graph(cfg)
    if not is_strongly_connected(g):
        raise HypothesisError(["graph is not strongly connected"])
    if g.n < 3:
        raise HypothesisError(["need at least three vertices"])
    caps = _caps(cfg)
    if g.n > caps["max_n"]:
        raise sl.EnumerationCapError(f"N={g.n} exceeds the enumeration cap N<={caps['max_n']}")
    d = diameter(g)
    star = sl.s_star_g(g)
    levels = sl.ad_levels(g, d + 2, **caps)
    containment = []
    for m in (d, d + 1, d + 2):
        res = sl.contains_set(sl.MatrixSet._from_unique(levels[m].elements), star)
        containment.append({"depth": m, "size": len(levels[m].elements), "contains": res.ok,
                            "missing": len(res.missing)})
    try:
        codist = sl.verify_semi_codistinguished(g)
    except sl.LieCheckError as exc:
        codist = exc.report
    report = {
        "graph": g.to_dict(),
        "diameter": d,
        "gamma": sl.gamma(g.n),
        "s_star_size": len(star),
        "rank_span": sl.rank_span(star),
        "ad_sizes": [len(lv.elements) for lv in levels],
        "containment": containment,
        "semi_codistinguished": codist,
    }
    ok = report["rank_span"] == report["gamma"] and all(c["contains"] for c in containment) and codist["ok"]
    if cfg["levi"]:
        try:
            report["levi"] = sl.levi_check(g.n)
        except sl.LieCheckError as exc:
            report["levi"] = exc.report
        ok = ok and report["levi"]["ok"]
    report["ok"] = ok
    return (EXIT_OK if ok else EXIT_FAIL), report, None


def cmd_lie_ad(cfg, args):
    g = _graph(cfg)
    levels = sl.ad_levels(g, cfg["depth"], **_caps(cfg))
    report = {
        "graph": g.to_dict(),
        "levels": [{"depth": lv.depth, "size": len(lv.elements), "raw_products": lv.raw_count,
                    "zero_products": lv.zero_count} for lv in levels],
        "symmetric": [sl.MatrixSet._from_unique(lv.elements).negated()
                      == sl.MatrixSet._from_unique(lv.elements) for lv in levels[1:]],
    }
    if cfg["matrices"]:
        report["matrices"] = sl.MatrixSet._from_unique(levels[-1].elements).to_list()
    return EXIT_OK, report, None


def cmd_lie_basis(cfg, args):
    g = _graph(cfg)
    if not is_strongly_connected(g):
        raise HypothesisError(["graph is not strongly connected"])
    m = cfg.get("depth", diameter(g))
    words = sl.codist_basis(g, m, **_caps(cfg))
    report = {
        "graph": g.to_dict(), "depth": m, "diameter": diameter(g),
        "words": [{"word": str(w.word), "json": sl.word_to_json(w.word), "element": w.label(),
                   "matrix": w.matrix.tolist(), "natural_depth": w.natural_depth, "method": w.method}
                  for w in words],
    }
    return EXIT_OK, report, None


def cmd_span_check(cfg, args):
    rng = np.random.default_rng(cfg["seed"])
    rows, ok = [], True
    for n in cfg["dims"]:
        lo = n + 1 if cfg["include_boundary"] else n + 2
        for N in range(lo, cfg["max_agents"] + 1):
            basis = sl.astar_basis(N)
            ranks, built = [], 0
            for _ in range(cfg["trials"]):
                x = rng.standard_normal((N, n))
                ranks.append(conf.span_rank_Lstar(x, basis, cfg["tol"]).rank)
                if N > n + 1:
                    try:
                        conf.constructive_basis(x, cfg["tol"])
                        built += 1
                    except conf.DegenerateConfigurationError:
                        pass
            if N > n + 1:
                passed = all(r == N * n for r in ranks) and built == cfg["trials"]
                expect = f"rank == {N * n}"
            else:
                passed = all(r <= n * (n + 1) - 1 for r in ranks)
                expect = f"rank <= {n * (n + 1) - 1} (boundary case, deficit expected)"
            ok = ok and passed
            rows.append({"n": n, "N": N, "expected": expect, "min_rank": min(ranks), "max_rank": max(ranks),
                         "constructive_ok": built if N > n + 1 else None, "pass": passed})
    return (EXIT_OK if ok else EXIT_FAIL), {"cases": rows, "ok": ok}, None


def _edge_control(ctrl, schedule, r) -> EdgeControl:
    edges = ctrl.get("edges")
    if edges is None:
        edges = sorted(set().union(*(g.edges for _, g in schedule.segments)))
    edges = [tuple(e) for e in edges]
    kind = ctrl["kind"]
    if kind == "zero":
        return EdgeControl.constant(edges, np.zeros((len(edges), r)))
    vals = np.asarray(ctrl.get("values"), dtype=float)
    try:
        if kind == "frozen":
            return EdgeControl.constant(edges, vals.reshape(len(edges), r))
        return EdgeControl(tuple(edges), np.asarray(ctrl["times"], dtype=float), vals)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad control specification: {exc}") from exc


def _frozen_oracle(X0, schedule, control, p, grid, dt):
    """Product of matrix exponentials over the (snapped) segments."""
    rho = p.values(grid.samples)
    u = control.at(0.0)
    steps = snapped_switch_steps(schedule, dt) + [int(round(schedule.T / dt))]
    out = []
    for m, x in enumerate(X0):
        for (_, g), a, b in zip(schedule.segments, steps, steps[1:]):
            G = np.zeros((g.n, g.n))
            for (i, j), ue in zip(control.edges, u):
                if g.has_edge(i, j):
                    w = float(rho[m] @ ue)
                    G[i - 1, j - 1] += w
                    G[i - 1, i - 1] -= w
            x = expm_series((b - a) * dt * G) @ x
        out.append(x)
    return np.array(out)


def cmd_sim_run(cfg, args):
    T, dt = float(cfg["T"]), float(cfg["dt"])
    schedule = _schedule(cfg, T)
    grid = _grid(cfg["grid"])
    p = _rho(cfg["parameterizations"])
    N = schedule.segments[0][1].n
    init = cfg.get("initial", {})
    rng = np.random.default_rng(cfg["seed"])
    if "positions" in init:
        x0 = np.asarray(init["positions"], dtype=float)
        if x0.shape[0] != N:
            raise ConfigError("initial positions do not match the graph size")
    else:
        x0 = rng.standard_normal((N, init.get("random_dim", 2)))
    X0 = np.broadcast_to(x0, (grid.M,) + x0.shape).copy()
    control = _edge_control(cfg["control"], schedule, p.r)
    dyn = OriginalDynamics(p, grid, control)

    traj = integrate(X0, dyn, schedule, dt, jobs=args.jobs)
    c = rng.standard_normal(x0.shape[1])
    ones = np.ones((N, 1)) * c[None, :]
    cons = integrate(np.broadcast_to(ones, X0.shape).copy(), dyn, schedule, dt, jobs=args.jobs)
    shifted = integrate(X0 + ones, dyn, schedule, dt, jobs=args.jobs)
    doubled = integrate(2 * X0, dyn, schedule, dt, jobs=args.jobs)
    checks = {
        "consensus_drift": float(np.abs(cons.states - ones).max()),
        "translation_defect": float(np.abs(shifted.states - traj.states - ones).max()),
        "linearity_defect": float(np.abs(doubled.states - 2 * traj.states).max()),
    }
    checks["ok"] = (checks["consensus_drift"] < 1e-12 and checks["translation_defect"] < 1e-10
                    and checks["linearity_defect"] < 1e-10)
    if cfg["control"]["kind"] in ("zero", "frozen"):
        oracle = _frozen_oracle(X0, schedule, control, p, grid, dt)
        checks["oracle_error"] = float(np.abs(traj.final - oracle).max())
    report = {
        "invariants": checks,
        "switches": [{"t": k * dt, "step": k, "requested_t": t, "graph": g.to_dict()}
                     for k, (t, g) in zip(traj.switch_steps, schedule.segments)],
        "n_steps": int(len(traj.times) - 1),
        "final_state": traj.final.tolist(),
        "ok": checks["ok"],
    }
    return (EXIT_OK if checks["ok"] else EXIT_FAIL), report, traj


def cmd_track_run(cfg, args):
    T = float(cfg["T"])
    schedule = _schedule(cfg, T)
    grid = _grid(cfg["grid"])
    p = _rho(cfg["parameterizations"])
    try:
        target = make_target(cfg["target"]["name"], cfg["target"].get("params", {}), T)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    tc = TrackConfig(degree_cap=cfg["degree_cap"], dt=cfg["dt"], T=T, tol=cfg["tol"],
                     blend_time=cfg["blend_time"], jobs=args.jobs, feedback=cfg["feedback"])
    X0 = None
    if "initial_offset" in cfg:
        X0 = target(0.0, grid.samples) + np.asarray(cfg["initial_offset"], dtype=float)[None]
    vgrid = _grid(cfg["validation_grid"]) if "validation_grid" in cfg else None
    times, states, rep = track(target, schedule, p, grid, tc, X0=X0, validation_grid=vgrid)
    report = rep.to_dict()
    report["parameters"]["config"]["jobs"] = None  # output must not depend on worker count
    report["epsilon"] = cfg["epsilon"]
    report["ok"] = rep.sup_error <= cfg["epsilon"]
    traj = Trajectory(times, states, [])
    return (EXIT_OK if report["ok"] else EXIT_FAIL), report, traj


COMMANDS = {
    ("lie", "verify"): cmd_lie_verify,
    ("lie", "ad"): cmd_lie_ad,
    ("lie", "basis"): cmd_lie_basis,
    ("span", "check"): cmd_span_check,
    ("sim", "run"): cmd_sim_run,
    ("track", "run"): cmd_track_run,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ensemble-formation", description=__doc__.splitlines()[0])
    groups = ap.add_subparsers(dest="group", required=True, parser_class=_Parser)
    subs = {}
    for group, action in COMMANDS:
        if group not in subs:
            subs[group] = groups.add_parser(group).add_subparsers(dest="action", required=True,
                                                                   parser_class=_Parser)
        sp = subs[group].add_parser(action)
        sp.add_argument("--config", help="JSON config path")
        sp.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
        sp.add_argument("--out", help="output directory for report.json (and trajectory.csv)")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads for integration")
    return ap


def _dump(obj) -> str:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(type(o))

    return json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = f"{args.group} {args.action}"
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(command, args.config, args.seed)
        code, report, traj = COMMANDS[(args.group, args.action)](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisError as exc:
        code, report, traj = EXIT_HYPOTHESIS, {"ok": False, "hypothesis_failures": exc.failures}, None
    except sl.EnumerationCapError as exc:
        code, report, traj = EXIT_CAP, {"ok": False, "resource_cap": str(exc)}, None
    except (SynthesisError, IntegrationError, sl.LieCheckError, GraphError, ValueError) as exc:
        code, report, traj = EXIT_FAIL, {"ok": False, "error": str(exc)}, None
    report = {"command": command, "config": cfg, "exit_code": code, "result": report}
    text = _dump(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text)
        if traj is not None:
            traj.write_csv(out / "trajectory.csv")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
