"""Walker-mediated distributed control.

A control qubit ``a`` at node A steers a walker into a superposition of
staying on A's self-loop and travelling a path to B, where a position
controlled gate acts on ``b``.  Reversing the routing, rotating the two
source register values and measuring the walker leaves the data qubits with
the controlled gate applied, up to a known Z correction on ``a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exceptions import ProtocolError
from .netgraph import NetworkGraph, PathSpec, coin_dof, complement, shortest_path
from .statevec import (
    SparseState,
    collapse_walker,
    fidelity,
    init_product_state,
    measure_walker,
    mutual_information,
    occupancy,
    subsystem_entropy,
    subsystem_fidelity,
)
from .walkops import (
    X,
    Z,
    DataGate,
    ExtendedCoin,
    NodeCoin,
    Operator,
    complement_matrix,
    data_controlled_coin,
    embedded_hadamard,
    extended_shift,
    local_gate,
    multi_walker_coin,
    path_coin,
    path_coin_matrices,
)

__all__ = [
    "ProtocolResult",
    "WalkerPlan",
    "controlled",
    "create_bell_pair",
    "distributed_controlled_gate",
    "inject_control",
    "multi_pair_control",
    "multi_target_control",
    "propagate",
    "random_su2",
    "resolve_path",
    "reverse_propagation",
    "separate_control",
]

BRANCH_TOL = 1e-9


@dataclass
class ProtocolResult:
    final_state: SparseState
    outcomes: list[tuple[int, tuple[int, int]]] = field(default_factory=list)
    corrections: list[dict] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)
    elapsed_steps: int = 0
    propagation_steps: int = 0
    fidelities: dict[str, float] = field(default_factory=dict)
    operators: list[tuple[str, Operator]] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "elapsed_steps": self.elapsed_steps,
            "propagation_steps": self.propagation_steps,
            "outcomes": [{"walker": j, "node": cell[0], "coin": cell[1]} for j, cell in self.outcomes],
            "corrections": list(self.corrections),
            "fidelities": dict(self.fidelities),
            **self.info,
        }


# -- small gate helpers ------------------------------------------------------


def controlled(u: np.ndarray) -> np.ndarray:
    """4x4 controlled-U with the control as the first (most significant) qubit."""
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out


def random_su2(rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=4)
    z /= np.linalg.norm(z)
    a, b = complex(z[0], z[1]), complex(z[2], z[3])
    return np.array([[a, -b.conjugate()], [b, a.conjugate()]])


def resolve_path(g: NetworkGraph, a: int, b: int, path: Sequence[int] | str | PathSpec | None) -> PathSpec:
    if isinstance(path, PathSpec):
        path.validate(g)
        if (path.source, path.target) != (a, b):
            raise ProtocolError(f"path runs {path.source}->{path.target}, expected {a}->{b}")
        return path
    if path is None or path == "auto_shortest":
        found = shortest_path(g, a, b)
        if found is None:
            raise ProtocolError(f"no path from {a} to {b}")
        return found
    return resolve_path(g, a, b, PathSpec.from_nodes(g, path))


# -- walker schedules --------------------------------------------------------


@dataclass
class WalkerPlan:
    """Per-walker coins by coin index plus position-controlled data gates.

    ``coins[t]`` is applied at coin index t (the last entry is the arrival
    coin); ``gates[t]`` fire right after it.  Only coins are undone on
    reversal, so gate effects on data persist.
    """
    walker: int
    coins: list[NodeCoin]
    gates: dict[int, list[Operator]] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return len(self.coins) - 1


def _path_plan(g: NetworkGraph, p: PathSpec, j: int, first: NodeCoin | None = None) -> WalkerPlan:
    coin = path_coin(g, p, j)
    coins = [coin] * (p.hops + 1)
    if first is not None:
        coins[0] = first
    return WalkerPlan(j, coins)


def _gate(g: NetworkGraph, j: int, node: int, qubits: Sequence[str], matrix: np.ndarray,
          name: str) -> ExtendedCoin:
    return ExtendedCoin(g, j, {}, {node: [DataGate(tuple(qubits), matrix)]}, name)


class _Run:
    """Applies operators, counts shifts and keeps the routing record for reversal."""

    def __init__(self, state: SparseState, want_trace: bool):
        self.state = state
        self.routing: list[tuple[Operator, bool]] = []
        self.steps = 0
        self.trace: list[dict] = []
        self.want_trace = want_trace
        self.ops: list[tuple[str, Operator]] = []

    def _note(self, phase: str) -> None:
        if self.want_trace:
            self.trace.append({
                "step": self.steps, "phase": phase, "terms": len(self.state),
                "norm": self.state.norm2(), "occupancy": occupancy(self.state),
            })

    def data(self, op: Operator, phase: str) -> None:
        self.state = op.apply(self.state)
        self.ops.append((phase, op))
        self._note(phase)

    def route(self, op: Operator, phase: str, is_shift: bool = False) -> None:
        self.state = op.apply(self.state)
        self.routing.append((op, is_shift))
        self.ops.append((phase, op))
        self.steps += is_shift
        self._note(phase)

    def schedule(self, plans: Sequence[WalkerPlan], shift: Operator, phase: str = "forward") -> int:
        if not plans:
            return 0
        lmax = max(pl.length for pl in plans)
        start = self.steps
        for t in range(lmax + 1):
            coins = [pl.coins[t] for pl in plans if t <= pl.length]
            self.route(multi_walker_coin(coins), f"{phase} coin t={t}")
            for pl in plans:
                for op in pl.gates.get(t, ()):
                    self.data(op, f"{phase} gate t={t} walker={pl.walker}")
            if t < lmax:
                self.route(shift, f"{phase} shift t={t}", is_shift=True)
        return self.steps - start

    def reverse(self, phase: str = "reverse") -> None:
        """Undo every routing operator in reverse order; data gates stay applied."""
        for op, is_shift in reversed(self.routing):
            inv = op.inverse()
            self.state = inv.apply(self.state)
            self.ops.append((phase, inv))
            self.steps += is_shift
            self._note(phase)
        self.routing = []


# -- single operations -------------------------------------------------------


def _require_localized(state: SparseState, j: int, cell: tuple[int, int]) -> None:
    cells = state.walker_cells(j)
    if cells != {cell}:
        raise ProtocolError(f"walker {j} is not localized at {cell}: occupies {sorted(cells)}")


def inject_control(state: SparseState, a_node: int, a: str,
                   walker_indices: Sequence[int] = (0,)) -> SparseState:
    """Entangle walker coin registers with qubit ``a``: c_A -> c̄_A on the |1_a> branch."""
    g = state.graph
    c_a = coin_dof(g, a_node, a_node)
    for j in walker_indices:
        _require_localized(state, j, (a_node, c_a.value))
    op = data_controlled_coin(g, tuple(walker_indices), a_node, a,
                              np.eye(g.coin_dim(a_node)), complement_matrix(g.coin_width(a_node)))
    return op.apply(state)


def propagate(state: SparseState, p: PathSpec, steps: int, walker_index: int = 0,
              arrive: bool = True) -> SparseState:
    """``steps`` applications of S C with the path coin, then the arrival coin.

    The arrival coin is only applied once the walker has covered the whole
    path (``steps == p.hops``).
    """
    g = state.graph
    if not 0 <= steps <= p.hops:
        raise ProtocolError(f"steps must lie in [0, {p.hops}], got {steps}")
    coin = path_coin(g, p, walker_index)
    shift = extended_shift(g, state.walker_count)
    for _ in range(steps):
        state = shift.apply(coin.apply(state))
    if arrive and steps == p.hops:
        state = coin.apply(state)
    return state


def reverse_propagation(state: SparseState, p: PathSpec, steps: int, walker_index: int = 0,
                        arrived: bool = True) -> SparseState:
    """Undo :func:`propagate`; path coin and shift are involutions."""
    g = state.graph
    coin = path_coin(g, p, walker_index)
    shift = extended_shift(g, state.walker_count)
    if arrived and steps == p.hops:
        state = coin.apply(state)
    for _ in range(steps):
        state = coin.apply(shift.apply(state))
    return state


def _measure(state: SparseState, j: int, rng: np.random.Generator | None,
             forced: tuple[int, int] | None) -> tuple[tuple[int, int], SparseState]:
    if forced is not None:
        _, state = collapse_walker(state, j, tuple(forced))
        return tuple(forced), state
    if rng is None:
        raise ProtocolError("a random generator is required for walker measurement")
    (node, label), state = measure_walker(state, j, rng)
    return (node, label.value), state


def _check_branches(state: SparseState, j: int, allowed: set[tuple[int, int]]) -> None:
    stray = 0.0
    for (walkers, _), amp in state.amplitudes.items():
        if walkers[j] not in allowed:
            stray += abs(amp) ** 2
    if stray > BRANCH_TOL:
        raise ProtocolError(f"walker {j} has weight {stray:.3g} outside {sorted(allowed)} before measurement")


def _rotate_and_measure(run: _Run, a_node: int, j: int, partner: int,
                        rng, forced) -> tuple[int, int]:
    """Hadamard on span{c_A, partner} of walker j, then measure it."""
    g = run.state.graph
    c_a = coin_dof(g, a_node, a_node).value
    _check_branches(run.state, j, {(a_node, c_a), (a_node, partner)})
    had = NodeCoin(g, j, {a_node: embedded_hadamard(g.coin_dim(a_node), c_a, partner)}, "separation Hadamard")
    run.data(had, f"separation walker={j}")
    outcome, run.state = _measure(run.state, j, rng, forced)
    run._note(f"measure walker={j}")
    return outcome


def separate_control(state: SparseState, p: PathSpec, a_node: int, a: str,
                     rng: np.random.Generator | None = None, walker_index: int = 0,
                     forced_outcome: tuple[int, int] | None = None
                     ) -> tuple[tuple[int, int], SparseState]:
    """Reverse an arrived walker, rotate {c_A, c̄_A}, measure, correct ``a``.

    Expects the walker to have completed :func:`propagate` on ``p`` (branches
    at (A, c_A) and (B, c_B)).
    """
    g = state.graph
    b_node = p.target
    _check_branches(state, walker_index, {(a_node, coin_dof(g, a_node, a_node).value),
                                          (b_node, coin_dof(g, b_node, b_node).value)})
    run = _Run(reverse_propagation(state, p, p.hops, walker_index), False)
    cbar = complement(coin_dof(g, a_node, a_node)).value
    outcome = _rotate_and_measure(run, a_node, walker_index, cbar, rng, forced_outcome)
    if outcome[1] == cbar:
        run.state = local_gate(g, a, Z).apply(run.state)
    return outcome, run.state


# -- full protocols ----------------------------------------------------------


def _qubit_state(v) -> tuple[complex, complex]:
    alpha, beta = (complex(x) for x in v)
    n = math.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
    if n == 0:
        raise ProtocolError("qubit state cannot be zero")
    return alpha / n, beta / n


def _start_state(g: NetworkGraph, a_node: int, walkers: int,
                 superpositions: Mapping[str, Sequence[complex]]) -> SparseState:
    c_a = coin_dof(g, a_node, a_node)
    return init_product_state(g, [(a_node, c_a)] * walkers,
                              qubit_superpositions={q: _qubit_state(v) for q, v in superpositions.items()})


def _separate_parity(run: _Run, a_node: int, a: str, walkers: Sequence[int], rng, forced,
                     outcomes: list, corrections: list) -> None:
    """Measure each walker in the rotated basis; Z on ``a`` iff an odd number read c̄_A."""
    g = run.state.graph
    cbar = complement(coin_dof(g, a_node, a_node)).value
    flips = 0
    for i, j in enumerate(walkers):
        out = _rotate_and_measure(run, a_node, j, cbar, rng, forced[i] if forced else None)
        outcomes.append((j, out))
        flips += out[1] == cbar
    if flips % 2:
        run.data(local_gate(g, a, Z), "correction")
        corrections.append({"gate": "Z", "qubit": a, "walkers": list(walkers)})


def _kron_all(vecs: Sequence[np.ndarray]) -> np.ndarray:
    out = np.array([1.0 + 0j])
    for v in vecs:
        out = np.kron(out, v)
    return out


def distributed_controlled_gate(
    g: NetworkGraph, a_node: int, a: str, b_node: int, b: str, target_unitary: np.ndarray,
    path: Sequence[int] | str | PathSpec | None = None, separate: bool = True,
    rng: np.random.Generator | None = None, control_state=(1 / math.sqrt(2), 1 / math.sqrt(2)),
    target_state=(1, 0), trace: bool = False, forced_outcome: tuple[int, int] | None = None,
) -> ProtocolResult:
    """Controlled-U from ``a`` at A onto ``b`` at B through one walker."""
    if g.owner(a) != a_node or g.owner(b) != b_node:
        raise ProtocolError("control/target qubits must belong to A/B")
    u = np.asarray(target_unitary, dtype=complex)
    p = resolve_path(g, a_node, b_node, path)
    alpha, beta = _qubit_state(control_state)
    psi_b = np.array(_qubit_state(target_state))
    run = _Run(_start_state(g, a_node, 1, {a: (alpha, beta), b: psi_b}), trace)
    run._note("initial")
    run.data(data_controlled_coin(g, 0, a_node, a, np.eye(g.coin_dim(a_node)),
                                  complement_matrix(g.coin_width(a_node))), "inject")
    plan = _path_plan(g, p, 0)
    plan.gates[p.hops] = [_gate(g, 0, b_node, [b], u, "target gate")]
    propagation = run.schedule([plan], extended_shift(g, 1))
    result = ProtocolResult(run.state, propagation_steps=propagation)

    c_a = coin_dof(g, a_node, a_node).value
    c_b = coin_dof(g, b_node, b_node).value
    # analytic post-gate state: alpha|A,c_A,0_a,psi_b> + beta|B,c_B,1_a,U psi_b>
    n = len(g.registry)
    sa, sb = n - 1 - g.qubit_index[a], n - 1 - g.qubit_index[b]
    expected: dict = {}
    for branch, cell, abit, vec in ((alpha, (a_node, c_a), 0, psi_b), (beta, (b_node, c_b), 1, u @ psi_b)):
        for bbit in (0, 1):
            key = (((cell),), (abit << sa) | (bbit << sb))
            expected[key] = expected.get(key, 0) + branch * vec[bbit]
    result.fidelities["controlled_state"] = fidelity(run.state, SparseState(g, expected, 1))
    result.info["pre_separation_state"] = run.state

    if separate:
        run.reverse()
        _separate_parity(run, a_node, a, [0], rng, [forced_outcome] if forced_outcome else None,
                         result.outcomes, result.corrections)
        ref = controlled(u) @ np.kron(np.array([alpha, beta]), psi_b)
        result.fidelities["target"] = subsystem_fidelity(run.state, [a, b], ref)
    else:
        result.fidelities["target"] = result.fidelities["controlled_state"]
    result.final_state = run.state
    result.elapsed_steps = run.steps
    result.trace = run.trace
    result.operators = run.ops
    result.info["path"] = list(p.nodes)
    return result


def _check_disjoint(paths: Sequence[PathSpec]) -> None:
    seen: set = set()
    for p in paths:
        edges = set(p.edge_list())
        if seen & edges:
            raise ProtocolError(f"paths share edges {sorted(seen & edges)}")
        seen |= edges


def _resolve_paths(g: NetworkGraph, a_node: int, targets: Sequence[int], paths) -> list[PathSpec]:
    """Explicit paths are validated; "auto" entries take shortest routes avoiding earlier paths."""
    if paths is None or paths == "auto":
        paths = [None] * len(targets)
    if len(paths) != len(targets):
        raise ProtocolError("one path per target is required")
    out: list[PathSpec | None] = [
        None if p in (None, "auto", "auto_shortest") else resolve_path(g, a_node, t, p)
        for t, p in zip(targets, paths)
    ]
    used = {e for p in out if p is not None for e in p.edge_list()}
    for i, t in enumerate(targets):
        if out[i] is None:
            p = shortest_path(g, a_node, t, used)
            if p is None:
                raise ProtocolError(f"no edge-disjoint path from {a_node} to {t}")
            out[i] = p
            used.update(p.edge_list())
    _check_disjoint(out)
    return out


def multi_target_control(
    g: NetworkGraph, a_node: int, a: str, targets: Sequence[tuple[int, str]],
    paths=None, unitaries: Sequence[np.ndarray] | None = None,
    rng: np.random.Generator | None = None, separate: bool = True,
    control_state=(1 / math.sqrt(2), 1 / math.sqrt(2)), target_states=None, trace: bool = False,
    forced_outcomes=None,
) -> ProtocolResult:
    """One control qubit, k walkers, k target qubits: applies prod_j C-U_j."""
    k = len(targets)
    b_qubits = [b for _, b in targets]
    if len(set(b_qubits)) != k:
        raise ProtocolError("target qubits must be distinct")
    for b_node, b in targets:
        if g.owner(b) != b_node:
            raise ProtocolError(f"qubit {b!r} is not at node {b_node}")
    if g.owner(a) != a_node:
        raise ProtocolError("control qubit must belong to A")
    us = [np.asarray(u, dtype=complex) for u in (unitaries or [X] * k)]
    ps = _resolve_paths(g, a_node, [t for t, _ in targets], paths)
    alpha, beta = _qubit_state(control_state)
    psis = [np.array(_qubit_state(s)) for s in (target_states or [(1, 0)] * k)]
    sup = {a: (alpha, beta), **{b: v for b, v in zip(b_qubits, psis)}}
    run = _Run(_start_state(g, a_node, k, sup), trace)
    run._note("initial")
    if k:
        run.data(data_controlled_coin(g, tuple(range(k)), a_node, a, np.eye(g.coin_dim(a_node)),
                                      complement_matrix(g.coin_width(a_node))), "inject")
    plans = []
    for j, (p, (b_node, b), u) in enumerate(zip(ps, targets, us)):
        plan = _path_plan(g, p, j)
        plan.gates[p.hops] = [_gate(g, j, b_node, [b], u, f"target gate {j}")]
        plans.append(plan)
    result = ProtocolResult(run.state)
    result.propagation_steps = run.schedule(plans, extended_shift(g, k))
    result.info["pre_separation_state"] = run.state
    result.fidelities.update({f"walker_entropy_{j}": _walker_entropy(run.state, j) for j in range(k)})
    if separate and k:
        run.reverse()
        _separate_parity(run, a_node, a, list(range(k)), rng, forced_outcomes,
                         result.outcomes, result.corrections)
        big_u = _multi_controlled(us)
        ref = big_u @ _kron_all([np.array([alpha, beta])] + psis)
        result.fidelities["target"] = subsystem_fidelity(run.state, [a] + b_qubits, ref)
    result.final_state = run.state
    result.elapsed_steps = run.steps
    result.trace = run.trace
    result.operators = run.ops
    result.info["paths"] = [list(p.nodes) for p in ps]
    return result


def _multi_controlled(us: Sequence[np.ndarray]) -> np.ndarray:
    """Control qubit first, then targets: |0><0| (x) I + |1><1| (x) U_1 (x) ... (x) U_k."""
    on = np.array([[1.0 + 0j]])
    for u in us:
        on = np.kron(on, u)
    d = on.shape[0]
    out = np.zeros((2 * d, 2 * d), dtype=complex)
    out[:d, :d] = np.eye(d)
    out[d:, d:] = on
    return out


def _walker_entropy(state: SparseState, j: int) -> float:
    return subsystem_entropy(state, [j])


def multi_pair_control(
    g: NetworkGraph, a_node: int, pairs: Sequence[tuple[str, int, str]], paths=None,
    unitaries: Sequence[np.ndarray] | None = None, rng: np.random.Generator | None = None,
    separate: bool = True, control_states=None, target_states=None, trace: bool = False,
    forced_outcomes=None,
) -> ProtocolResult:
    """k independent controlled gates a_j -> b_j sharing the source node A."""
    k = len(pairs)
    controls = [a for a, _, _ in pairs]
    b_qubits = [b for _, _, b in pairs]
    if len(set(controls)) != k or len(set(b_qubits)) != k:
        raise ProtocolError("control and target qubits must be distinct")
    for a, b_node, b in pairs:
        if g.owner(a) != a_node or g.owner(b) != b_node:
            raise ProtocolError(f"pair ({a}, {b}) is not registered at ({a_node}, {b_node})")
    us = [np.asarray(u, dtype=complex) for u in (unitaries or [X] * k)]
    ps = _resolve_paths(g, a_node, [t for _, t, _ in pairs], paths)
    r = 1 / math.sqrt(2)
    ctl = [np.array(_qubit_state(s)) for s in (control_states or [(r, r)] * k)]
    psis = [np.array(_qubit_state(s)) for s in (target_states or [(1, 0)] * k)]
    sup = {**{a: v for a, v in zip(controls, ctl)}, **{b: v for b, v in zip(b_qubits, psis)}}
    run = _Run(_start_state(g, a_node, k, sup), trace)
    run._note("initial")
    for j, a in enumerate(controls):
        run.data(data_controlled_coin(g, j, a_node, a, np.eye(g.coin_dim(a_node)),
                                      complement_matrix(g.coin_width(a_node))), f"inject walker={j}")
    plans = []
    for j, (p, (_, b_node, b), u) in enumerate(zip(ps, pairs, us)):
        plan = _path_plan(g, p, j)
        plan.gates[p.hops] = [_gate(g, j, b_node, [b], u, f"target gate {j}")]
        plans.append(plan)
    result = ProtocolResult(run.state)
    result.propagation_steps = run.schedule(plans, extended_shift(g, k))
    result.info["pre_separation_state"] = run.state
    for i in range(k):
        for j in range(i + 1, k):
            result.fidelities[f"walker_mutual_information_{i}_{j}"] = mutual_information(run.state, [i], [j])
    if separate:
        run.reverse()
        for j, a in enumerate(controls):
            forced = forced_outcomes[j] if forced_outcomes else None
            _separate_parity(run, a_node, a, [j], rng, [forced] if forced else None,
                             result.outcomes, result.corrections)
        for j, (a, b) in enumerate(zip(controls, b_qubits)):
            ref = controlled(us[j]) @ np.kron(ctl[j], psis[j])
            result.fidelities[f"target_{j}"] = subsystem_fidelity(run.state, [a, b], ref)
    result.final_state = run.state
    result.elapsed_steps = run.steps
    result.trace = run.trace
    result.operators = run.ops
    result.info["paths"] = [list(p.nodes) for p in ps]
    return result


def create_bell_pair(
    g: NetworkGraph, a_node: int, a: str, b_node: int, b: str,
    path: Sequence[int] | str | PathSpec | None = None, rng: np.random.Generator | None = None,
    trace: bool = False, forced_outcome: tuple[int, int] | None = None,
) -> ProtocolResult:
    """(|1_a 0_b> + |0_a 1_b>)/sqrt2 from a walker split between A and B."""
    if g.owner(a) != a_node or g.owner(b) != b_node:
        raise ProtocolError("qubits must belong to A and B")
    p = resolve_path(g, a_node, b_node, path)
    c_a = coin_dof(g, a_node, a_node).value
    c_ap = p.entry_dof(g).value
    run = _Run(_start_state(g, a_node, 1, {}), trace)
    run._note("initial")
    coins = path_coin_matrices(g, p)
    coins[a_node] = embedded_hadamard(g.coin_dim(a_node), c_a, c_ap)
    first = NodeCoin(g, 0, coins, "splitting coin")
    plan = _path_plan(g, p, 0, first)
    plan.gates[p.hops] = [ExtendedCoin(g, 0, {}, {a_node: [DataGate((a,), X)], b_node: [DataGate((b,), X)]},
                                       "pair gate")]
    result = ProtocolResult(run.state)
    result.propagation_steps = run.schedule([plan], extended_shift(g, 1))
    run.reverse()
    out = _rotate_back(run, a_node, c_a, c_ap, rng, forced_outcome)
    result.outcomes.append((0, out))
    if out[1] == c_ap:
        run.data(local_gate(g, a, Z), "correction")
        result.corrections.append({"gate": "Z", "qubit": a, "walkers": [0]})
    r = 1 / math.sqrt(2)
    result.fidelities["bell"] = subsystem_fidelity(run.state, [a, b], {2: r, 1: r})
    result.final_state = run.state
    result.elapsed_steps = run.steps
    result.trace = run.trace
    result.operators = run.ops
    result.info["path"] = list(p.nodes)
    return result


def _rotate_back(run: _Run, a_node: int, c_a: int, c_ap: int, rng, forced, j: int = 0) -> tuple[int, int]:
    """Measure a fully reversed splitting walker, which sits in span{c_A, c_A^p}."""
    _check_branches(run.state, j, {(a_node, c_a), (a_node, c_ap)})
    out, run.state = _measure(run.state, j, rng, forced)
    run._note(f"measure walker={j}")
    return out
