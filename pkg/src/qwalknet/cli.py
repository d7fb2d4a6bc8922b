"""Command line runner: ``qwalknet run|list|gen-topology``.

Exit codes: 0 success, 2 config error, 3 topology error, 4 protocol error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from .entdist import multipath_ghz, tree_ghz
from .exceptions import ConfigError, OperatorError, ProtocolError, StateError, TopologyError
from .netgraph import (
    NetworkGraph,
    PathSpec,
    TreeSpec,
    augment_self_loops,
    chain_topology,
    dump_topology,
    grid_topology,
    load_topology,
    spanning_tree,
    star_topology,
)
from .protocols import (
    ProtocolResult,
    create_bell_pair,
    distributed_controlled_gate,
    multi_pair_control,
    multi_target_control,
    random_su2,
)
from .statevec import DenseLayout, dump_state
from .stategraph import (
    M_CAP,
    generate_epr_all_edges,
    ghz_fidelity,
    is_vertex_localized,
    run_ghz_grid,
    run_multipath_bsm,
    walk_to_qubits,
)
from .walkops import H, X, Z

SEED_ENV = "QWALKNET_SEED"
DUMP_CAP = 1 << 12

EXIT_OK, EXIT_CONFIG, EXIT_TOPOLOGY, EXIT_PROTOCOL = 0, 2, 3, 4

NAMED_GATES = {
    "I": np.eye(2, dtype=complex),
    "X": X,
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": Z,
    "H": H,
}


# -- serialization -----------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite float in output")
    s = format(x, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def to_json(obj: Any, indent: int = 1, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(to_json(obj) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt_float(x) if isinstance(x, float) else x for x in row])


# -- config access -----------------------------------------------------------


class Config:
    """Dict wrapper whose errors name the file and field."""

    def __init__(self, data: Mapping, source: str, base: Path):
        if not isinstance(data, Mapping):
            raise ConfigError(f"{source}: top level must be an object")
        self.data = dict(data)
        self.source = source
        self.base = base

    def error(self, field: str, msg: str) -> ConfigError:
        return ConfigError(f"{self.source}: field '{field}': {msg}")

    def get(self, field: str, default: Any = ..., kind: type | tuple | None = None) -> Any:
        if field not in self.data:
            if default is ...:
                raise self.error(field, "missing")
            return default
        value = self.data[field]
        if kind is not None and not (isinstance(value, kind) and not (kind is int and isinstance(value, bool))):
            raise self.error(field, f"expected {getattr(kind, '__name__', kind)}, got {value!r}")
        return value

    def number(self, field: str, default: Any = ..., lo: float | None = None, hi: float | None = None) -> float:
        value = self.get(field, default, (int, float))
        if isinstance(value, bool):
            raise self.error(field, "expected a number")
        if (lo is not None and value < lo) or (hi is not None and value > hi):
            raise self.error(field, f"must lie in [{lo}, {hi}], got {value}")
        return float(value)

    def count(self, field: str, default: Any = ..., lo: int = 0) -> int:
        value = self.get(field, default, int)
        if value < lo:
            raise self.error(field, f"must be >= {lo}, got {value}")
        return value


def load_config(path: str | Path) -> Config:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse failure: {exc}") from exc
    return Config(data, str(path), path.parent)


def build_topology(cfg: Config) -> NetworkGraph:
    spec = cfg.data.get("topology")
    if spec is None and "grid" in cfg.data:
        grid = cfg.get("grid", kind=list)
        if len(grid) != 2:
            raise cfg.error("grid", "expected [rows, cols]")
        spec = {"kind": "grid", "rows": grid[0], "cols": grid[1]}
    if spec is None:
        raise cfg.error("topology", "missing")
    if isinstance(spec, str):
        path = Path(spec)
        return load_topology(path if path.is_absolute() else cfg.base / path)
    if not isinstance(spec, Mapping):
        raise cfg.error("topology", "expected a file path or an object with 'kind'")
    return generate_topology(spec, cfg)


def generate_topology(spec: Mapping, cfg: Config | None = None) -> NetworkGraph:
    kind = spec.get("kind")
    try:
        if kind == "grid":
            return grid_topology(int(spec["rows"]), int(spec["cols"]), int(spec.get("qubits_per_node", 1)))
        if kind == "chain":
            return chain_topology(int(spec["n"]), int(spec.get("qubits_per_node", 2)))
        if kind == "star":
            return star_topology(int(spec["n"]), int(spec.get("qubits_per_node", 1)))
    except KeyError as exc:
        msg = f"topology of kind {kind!r} needs {exc.args[0]!r}"
        raise (cfg.error("topology", msg) if cfg else ConfigError(msg)) from None
    msg = f"unknown topology kind {kind!r}"
    raise cfg.error("topology", msg) if cfg else ConfigError(msg)


def _unitary(cfg: Config, field: str, value: Any, rng: np.random.Generator) -> np.ndarray:
    if isinstance(value, str):
        if value == "random":
            return random_su2(rng)
        if value in NAMED_GATES:
            return NAMED_GATES[value]
        raise cfg.error(field, f"unknown gate {value!r}")
    if isinstance(value, Mapping) and "re" in value:
        m = np.asarray(value["re"], dtype=float) + 1j * np.asarray(value.get("im", 0), dtype=float)
        if m.shape != (2, 2):
            raise cfg.error(field, "matrix must be 2x2")
        return m
    raise cfg.error(field, "expected a gate name, 'random' or {re, im}")


def _qubit_state(cfg: Config, field: str, value: Any, rng: np.random.Generator) -> tuple[complex, complex]:
    if value == "random":
        z = rng.normal(size=4)
        v = np.array([complex(z[0], z[1]), complex(z[2], z[3])])
        v /= np.linalg.norm(v)
        return complex(v[0]), complex(v[1])
    if isinstance(value, (list, tuple)) and len(value) == 2:
        out = []
        for x in value:
            if isinstance(x, (list, tuple)) and len(x) == 2:
                out.append(complex(x[0], x[1]))
            elif isinstance(x, (int, float)) and not isinstance(x, bool):
                out.append(complex(x))
            else:
                raise cfg.error(field, f"bad amplitude {x!r}")
        if abs(out[0]) + abs(out[1]) == 0:
            raise cfg.error(field, "state cannot be zero")
        return out[0], out[1]
    raise cfg.error(field, "expected [alpha, beta] or 'random'")


def _node(cfg: Config, g: NetworkGraph, field: str) -> int:
    v = cfg.get(field, kind=int)
    if not g.has_node(v):
        raise TopologyError(f"{cfg.source}: field '{field}': node {v} not in topology")
    return v


def _qubit(cfg: Config, g: NetworkGraph, field: str, value: Any, node: int) -> str:
    if value is None:
        if not g.data_qubits[node]:
            raise cfg.error(field, f"node {node} has no data qubits")
        return g.data_qubits[node][0]
    if not isinstance(value, str) or value not in g.qubit_owner:
        raise cfg.error(field, f"unknown qubit {value!r}")
    return value


def _path(cfg: Config, field: str, value: Any):
    if value is None or value in ("auto_shortest", "auto"):
        return None
    if isinstance(value, list) and all(isinstance(x, int) for x in value):
        return value
    raise cfg.error(field, "expected a node list or 'auto_shortest'")


# -- protocol runners --------------------------------------------------------


@dataclass
class RunOutput:
    summary: dict
    results: list[ProtocolResult]
    tables: dict[str, tuple[list[str], list[list]]]


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng((seed, trial))


def _fan_out(fn: Callable, args: list[tuple], jobs: int) -> list:
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, *zip(*args), chunksize=max(1, len(args) // (4 * jobs))))
    return [fn(*a) for a in args]


def _outcome_table(results: list[ProtocolResult]) -> tuple[list[str], list[list]]:
    counts: Counter = Counter()
    for r in results:
        for j, cell in r.outcomes:
            counts[(j, cell[0], cell[1])] += 1
    total = len(results)
    rows = [[j, node, coin, n, n / total] for (j, node, coin), n in sorted(counts.items())]
    return ["walker", "node", "coin", "count", "frequency"], rows


def _aggregate(results: list[ProtocolResult], runs: int) -> dict:
    first = results[0]
    summary = first.summary()
    summary.pop("pre_separation_state", None)
    if runs > 1:
        keys = sorted({k for r in results for k in r.fidelities})
        summary["fidelities"] = {k: min(r.fidelities[k] for r in results if k in r.fidelities) for k in keys}
        summary["fidelity_aggregate"] = "min over runs"
        summary["runs"] = runs
        summary.pop("outcomes", None)
        summary.pop("corrections", None)
    return summary


def _protocol_runs(cfg: Config, seed: int, jobs: int, want_trace: bool, one: Callable) -> RunOutput:
    runs = cfg.count("runs", 1, lo=1)
    results = [one(_trial_rng(seed, t), want_trace and t == 0) for t in range(runs)]
    tables = {}
    if any(r.outcomes for r in results):
        tables["outcomes.csv"] = _outcome_table(results)
    ghz = [(k, v) for k, v in results[0].fidelities.items() if k.startswith("ghz")]
    if ghz:
        sets = results[0].info.get("ghz_sets", [])
        rows = [[i, len(sets[i]) if i < len(sets) else "", min(r.fidelities[k] for r in results)]
                for i, (k, _) in enumerate(ghz)]
        tables["ghz_fidelity.csv"] = (["set", "size", "fidelity"], rows)
    return RunOutput(_aggregate(results, runs), results, tables)


def _run_cnot(cfg: Config, g: NetworkGraph, seed: int, jobs: int, want_trace: bool) -> RunOutput:
    a_node, b_node = _node(cfg, g, "A"), _node(cfg, g, "B")
    qubits = cfg.get("qubits", {}, Mapping)
    a = _qubit(cfg, g, "qubits.a", qubits.get("a"), a_node)
    b = _qubit(cfg, g, "qubits.b", qubits.get("b"), b_node)
    path = _path(cfg, "path", cfg.data.get("path"))
    separate = cfg.get("separate", True, bool)

    def one(rng, trace):
        u = _unitary(cfg, "unitary", cfg.data.get("unitary", "X"), rng)
        ab = _qubit_state(cfg, "alpha_beta", cfg.data.get("alpha_beta", [0.7071067811865476] * 2), rng)
        psi = _qubit_state(cfg, "target_state", cfg.data.get("target_state", [1, 0]), rng)
        return distributed_controlled_gate(g, a_node, a, b_node, b, u, path, separate, rng, ab, psi, trace)

    return _protocol_runs(cfg, seed, jobs, want_trace, one)


def _run_multi_target(cfg, g, seed, jobs, want_trace):
    a_node = _node(cfg, g, "A")
    a = _qubit(cfg, g, "qubits.a", cfg.get("qubits", {}, Mapping).get("a"), a_node)
    targets = []
    for i, t in enumerate(cfg.get("targets", kind=list)):
        if not (isinstance(t, list) and len(t) in (1, 2) and isinstance(t[0], int)):
            raise cfg.error(f"targets[{i}]", "expected [B] or [B, qubit]")
        if not g.has_node(t[0]):
            raise TopologyError(f"{cfg.source}: field 'targets[{i}]': node {t[0]} not in topology")
        targets.append((t[0], _qubit(cfg, g, f"targets[{i}]", t[1] if len(t) > 1 else None, t[0])))
    paths = cfg.data.get("paths", "auto")
    paths = None if paths == "auto" else [_path(cfg, f"paths[{i}]", p) for i, p in enumerate(paths)]
    separate = cfg.get("separate", True, bool)

    def one(rng, trace):
        us = [_unitary(cfg, "unitaries", u, rng) for u in cfg.data.get("unitaries", ["X"] * len(targets))]
        ab = _qubit_state(cfg, "alpha_beta", cfg.data.get("alpha_beta", [0.7071067811865476] * 2), rng)
        return multi_target_control(g, a_node, a, targets, paths, us, rng, separate, ab, trace=trace)

    return _protocol_runs(cfg, seed, jobs, want_trace, one)


def _run_multi_pair(cfg, g, seed, jobs, want_trace):
    a_node = _node(cfg, g, "A")
    pairs = []
    for i, t in enumerate(cfg.get("pairs", kind=list)):
        if not (isinstance(t, list) and len(t) == 3 and isinstance(t[1], int)):
            raise cfg.error(f"pairs[{i}]", "expected [a, B, b]")
        if not g.has_node(t[1]):
            raise TopologyError(f"{cfg.source}: field 'pairs[{i}]': node {t[1]} not in topology")
        pairs.append((_qubit(cfg, g, f"pairs[{i}]", t[0], a_node), t[1], _qubit(cfg, g, f"pairs[{i}]", t[2], t[1])))
    paths = cfg.data.get("paths", "auto")
    paths = None if paths == "auto" else [_path(cfg, f"paths[{i}]", p) for i, p in enumerate(paths)]
    separate = cfg.get("separate", True, bool)

    def one(rng, trace):
        us = [_unitary(cfg, "unitaries", u, rng) for u in cfg.data.get("unitaries", ["X"] * len(pairs))]
        states = cfg.data.get("alpha_beta")
        ctl = None if states is None else [_qubit_state(cfg, "alpha_beta", s, rng) for s in states]
        return multi_pair_control(g, a_node, pairs, paths, us, rng, separate, ctl, trace=trace)

    return _protocol_runs(cfg, seed, jobs, want_trace, one)


def _run_bell(cfg, g, seed, jobs, want_trace):
    a_node, b_node = _node(cfg, g, "A"), _node(cfg, g, "B")
    qubits = cfg.get("qubits", {}, Mapping)
    a = _qubit(cfg, g, "qubits.a", qubits.get("a"), a_node)
    b = _qubit(cfg, g, "qubits.b", qubits.get("b"), b_node)
    path = _path(cfg, "path", cfg.data.get("path"))
    return _protocol_runs(cfg, seed, jobs, want_trace,
                          lambda rng, trace: create_bell_pair(g, a_node, a, b_node, b, path, rng, trace))


def _run_multipath_ghz(cfg, g, seed, jobs, want_trace):
    a_node, b_node = _node(cfg, g, "A"), _node(cfg, g, "B")
    if "paths" in cfg.data:
        paths = [PathSpec.from_nodes(g, p) for p in cfg.get("paths", kind=list)]
    else:
        paths = cfg.count("k", 2)
    pairing = cfg.get("pairing", "auto")
    if pairing != "auto":
        raise cfg.error("pairing", "only 'auto' is supported in configs")
    return _protocol_runs(cfg, seed, jobs, want_trace,
                          lambda rng, trace: multipath_ghz(g, a_node, b_node, paths, "auto", rng, trace=trace))


def _run_tree_ghz(cfg, g, seed, jobs, want_trace):
    a_node = _node(cfg, g, "A")
    spec = cfg.get("tree", "auto_bfs")
    if spec == "auto_bfs":
        tree = spanning_tree(g, a_node)
    elif isinstance(spec, Mapping) and "parents" in spec:
        try:
            parents = {int(k): v for k, v in spec["parents"].items()}
        except (TypeError, ValueError, AttributeError):
            raise cfg.error("tree.parents", "expected {node: parent}") from None
        tree = TreeSpec.from_parents(g, a_node, parents)
    else:
        raise cfg.error("tree", "expected 'auto_bfs' or {parents: {...}}")
    per_node = cfg.get("per_node_qubits", "first")
    root_qubit = cfg.get("root_qubit", None)
    return _protocol_runs(cfg, seed, jobs, want_trace,
                          lambda rng, trace: tree_ghz(g, a_node, tree, per_node, root_qubit, rng, trace=trace))


def _reconstruction_trial(kind: str, g: NetworkGraph, a: int, b: int, p: float, q: float,
                          key: tuple[int, int], trial: int) -> dict:
    fn = run_multipath_bsm if kind == "multipath_bsm" else run_ghz_grid
    return fn(g, a, b, p, q, np.random.default_rng((*key, trial)))


def _run_reconstruction(kind: str):
    def runner(cfg, g, seed, jobs, want_trace):
        a, b = _node(cfg, g, "A"), _node(cfg, g, "B")
        raw_p = cfg.data.get("p")
        if isinstance(raw_p, list):
            if not raw_p:
                raise cfg.error("p", "empty sweep")
            sweep = []
            for i, x in enumerate(raw_p):
                if isinstance(x, bool) or not isinstance(x, (int, float)) or not 0 <= x <= 1:
                    raise cfg.error(f"p[{i}]", f"must be a number in [0, 1], got {x!r}")
                sweep.append(float(x))
        else:
            sweep = [cfg.number("p", lo=0, hi=1)]
        q = cfg.number("q", 1.0, lo=0, hi=1)
        trials = cfg.count("trials", 1, lo=1)
        # trial streams are keyed by (seed, point, trial) so sweep points are independent
        args = [(kind, g, a, b, p, q, (seed, i), t) for i, p in enumerate(sweep) for t in range(trials)]
        reports = _fan_out(_reconstruction_trial, args, jobs)
        rows, counts = [], Counter()
        rates = []
        for i, p in enumerate(sweep):
            chunk = reports[i * trials:(i + 1) * trials]
            for t, rep in enumerate(chunk):
                if kind == "multipath_bsm":
                    outs = [c["outcomes"] for c in rep["chains"]]
                    found = rep["paths_found"]
                    for o in outs:
                        counts.update(o)
                else:
                    outs = [pr["outcome"] for pr in rep["projections"]]
                    found = sum(1 for c in rep["components"] if c["has_a"] and c["has_b"])
                    counts.update(outs)
                rows.append([p, t, rep["edges"], found, json.dumps(outs, separators=(",", ":")),
                             int(rep["success"])])
            rates.append({"p": p, "success_rate": sum(r["success"] for r in chunk) / trials})
        total = sum(counts.values())
        keys = sorted(set(counts) | ({1, 2, 3, 4} if kind == "multipath_bsm" and total else set()))
        outcome_rows = [[k, counts[k], counts[k] / total if total else 0.0] for k in keys]
        summary = {"trials": trials, "q": q, "sweep": rates,
                   "outcome_counts": {str(k): counts[k] for k in keys}}
        if len(sweep) == 1:
            summary.update(rates[0])
        tables = {
            "trials.csv": (["p", "trial", "edges", "paths_found", "outcomes", "success"], rows),
            "outcomes.csv": (["outcome", "count", "frequency"], outcome_rows),
        }
        return RunOutput(summary, [], tables)

    return runner


def _run_epr(cfg, g, seed, jobs, want_trace):
    m = cfg.count("m", lo=1)
    if m > M_CAP:
        raise cfg.error("m", f"at most {M_CAP} edges")
    w = generate_epr_all_edges(m)
    amps = walk_to_qubits(w)
    n = 2 * m
    fids = [ghz_fidelity(amps, n, (2 * i, 2 * i + 1)) for i in range(m)]
    summary = {"m": m, "vertex_localized": is_vertex_localized(w), "vertices": sorted(w.vertices()),
               "fidelities": {f"epr_{i}": f for i, f in enumerate(fids)},
               "walk_terms": len(w)}
    rows = [[i, 2, f] for i, f in enumerate(fids)]
    return RunOutput(summary, [], {"ghz_fidelity.csv": (["set", "size", "fidelity"], rows)})


@dataclass(frozen=True)
class ProtocolEntry:
    description: str
    fields: str
    runner: Callable
    walk: bool = True
    topology: bool = True


REGISTRY: dict[str, ProtocolEntry] = {
    "cnot": ProtocolEntry("controlled-U from qubit a at A onto qubit b at B via one walker",
                          "A, B, qubits{a,b}, path, alpha_beta, target_state, unitary, separate, runs", _run_cnot),
    "multi_target": ProtocolEntry("one control qubit driving k target qubits with k walkers",
                                  "A, qubits{a}, targets[[B,b]...], paths, unitaries, alpha_beta, separate, runs",
                                  _run_multi_target),
    "multi_pair": ProtocolEntry("k independent controlled gates sharing the source node",
                                "A, pairs[[a,B,b]...], paths, unitaries, alpha_beta, separate, runs", _run_multi_pair),
    "bell": ProtocolEntry("Bell pair between a at A and b at B", "A, B, qubits{a,b}, path, runs", _run_bell),
    "multipath_ghz": ProtocolEntry("one GHZ state per edge-disjoint path between A and B",
                                   "A, B, k or paths, pairing, runs", _run_multipath_ghz),
    "tree_ghz": ProtocolEntry("one GHZ state over a spanning tree rooted at A",
                              "A, tree ('auto_bfs' or {parents}), per_node_qubits, root_qubit, runs", _run_tree_ghz),
    "multipath_bsm": ProtocolEntry("link sampling plus Bell measurements along edge-disjoint paths",
                                   "grid or topology, A, B, p, q, trials", _run_reconstruction("multipath_bsm"),
                                   walk=False),
    "ghz_grid": ProtocolEntry("link sampling plus GHZ projections at every node other than A and B",
                              "grid or topology, A, B, p, q, trials", _run_reconstruction("ghz_grid"), walk=False),
    "epr_all_edges": ProtocolEntry("one entangling step on K_{2^m}: an EPR pair on every edge", "m",
                                   _run_epr, walk=False, topology=False),
}


def list_protocols() -> str:
    width = max(len(n) for n in REGISTRY)
    lines = []
    for name, entry in REGISTRY.items():
        lines.append(f"{name:<{width}}  {entry.description}")
        lines.append(f"{'':<{width}}  fields: {entry.fields}")
    return "\n".join(lines)


# -- dumps -------------------------------------------------------------------


def _operator_dump(result: ProtocolResult) -> list[dict]:
    state = result.final_state
    try:
        layout = DenseLayout(state.graph, state.walker_count)
    except StateError as exc:
        raise ProtocolError(f"operator dump: {exc}") from None
    if layout.dim > DUMP_CAP:
        raise ProtocolError(f"operator dump: dimension {layout.dim} exceeds {DUMP_CAP}; use a smaller topology")
    out = []
    seen: dict[int, int] = {}
    for phase, op in result.operators:
        entry = {"phase": phase, "kind": op.kind, "name": getattr(op, "name", op.kind)}
        if id(op) in seen:
            entry["same_as"] = seen[id(op)]
        else:
            seen[id(op)] = len(out)
            m = op.to_matrix(layout)
            entry["dim"] = layout.dim
            entry["matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in m]
        out.append(entry)
    return out


def execute(cfg: Config, out_dir: Path, seed: int | None = None, trace: bool = False,
            dump_operators: bool = False, dump_state_flag: bool = False, jobs: int = 1) -> dict:
    name = cfg.get("protocol", kind=str)
    if name not in REGISTRY:
        raise cfg.error("protocol", f"unknown protocol {name!r}; see 'qwalknet list'")
    entry = REGISTRY[name]
    if seed is None:
        seed = cfg.data.get("seed")
        if seed is None and os.environ.get(SEED_ENV):
            seed = int(os.environ[SEED_ENV])
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise cfg.error("seed", f"a non-negative integer seed is required, got {seed!r}")
    trace = trace or cfg.get("trace", False, bool)
    g = build_topology(cfg) if entry.topology else None
    if entry.walk:
        g = augment_self_loops(g)
    output = entry.runner(cfg, g, seed, jobs, trace)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = {"protocol": name, "seed": seed, "config": cfg.data, "result": output.summary}
    _write_json(out_dir / "result.json", result)
    for fname, (header, rows) in output.tables.items():
        _write_csv(out_dir / fname, header, rows)
    if output.results:
        first = output.results[0]
        if trace:
            _write_json(out_dir / "trace.json", first.trace)
        if dump_state_flag:
            _write_json(out_dir / "state.json", {"registry": list(first.final_state.registry),
                                                 "terms": dump_state(first.final_state)})
        if dump_operators:
            _write_json(out_dir / "operators.json", _operator_dump(first))
    return result


# -- entry point -------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qwalknet", description="Quantum-walk network protocol runner")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a protocol from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    run.add_argument("--out", default="out")
    run.add_argument("--trace", action="store_true")
    run.add_argument("--dump-operators", action="store_true")
    run.add_argument("--dump-state", action="store_true")
    run.add_argument("--jobs", type=int, default=1)
    sub.add_parser("list", help="list available protocols")
    gen = sub.add_parser("gen-topology", help="write a generated topology file")
    gen.add_argument("kind", choices=["grid", "chain", "star"])
    gen.add_argument("--rows", type=int)
    gen.add_argument("--cols", type=int)
    gen.add_argument("--n", type=int)
    gen.add_argument("--qubits-per-node", type=int)
    gen.add_argument("--out", required=True)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "list":
            print(list_protocols())
            return EXIT_OK
        if args.command == "gen-topology":
            spec: dict = {"kind": args.kind}
            for key in ("rows", "cols", "n"):
                if getattr(args, key) is not None:
                    spec[key] = getattr(args, key)
            if args.qubits_per_node is not None:
                spec["qubits_per_node"] = args.qubits_per_node
            g = generate_topology(spec)
            dump_topology(g, args.out)
            print(f"wrote {args.out}: {len(g.nodes)} nodes, {len(g.edges)} edges")
            return EXIT_OK
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = load_config(args.config)
        result = execute(cfg, Path(args.out), args.seed, args.trace, args.dump_operators,
                         args.dump_state, args.jobs)
        print(f"{result['protocol']}: results in {args.out}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TopologyError as exc:
        print(f"topology error: {exc}", file=sys.stderr)
        return EXIT_TOPOLOGY
    except (ProtocolError, StateError, OperatorError) as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
