"""GHZ distribution by walkers: one GHZ state per path, or one over a whole tree."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exceptions import ProtocolError
from .netgraph import NetworkGraph, PathSpec, TreeSpec, coin_dof, complement, edge_disjoint_shortest_paths
from .protocols import ProtocolResult, WalkerPlan, _check_disjoint, _path_plan, _rotate_and_measure, _rotate_back, _Run, _start_state
from .statevec import ghz_target, mutual_information, subsystem_fidelity
from .walkops import (
    H,
    X,
    Z,
    DataGate,
    ExtendedCoin,
    NodeCoin,
    complement_matrix,
    data_controlled_coin,
    embedded_hadamard,
    extended_shift,
    local_gate,
    path_coin_matrices,
)

__all__ = [
    "QubitPairing",
    "auto_pairing",
    "fractional_x",
    "multipath_ghz",
    "tree_ghz",
]


def fractional_x(w: int) -> np.ndarray:
    """Principal W-th root of X: H diag(1, e^{i pi / W}) H."""
    if w < 1:
        raise ProtocolError("fractional X needs W >= 1")
    return H @ np.diag([1, np.exp(1j * np.pi / w)]) @ H


@dataclass(frozen=True)
class QubitPairing:
    """Qubits used by walker j: its endpoint qubits and one pair per interior node."""
    ends: tuple[tuple[str, str], ...]
    interior: tuple[Mapping[int, tuple[str, str]], ...]

    def ghz_set(self, j: int, p: PathSpec) -> list[str]:
        a, b = self.ends[j]
        return [a] + [q for v in p.interior for q in self.interior[j][v]] + [b]

    def validate(self, g: NetworkGraph, a_node: int, b_node: int, paths: Sequence[PathSpec]) -> None:
        used: set[str] = set()

        def claim(q: str, node: int) -> None:
            if g.owner(q) != node:
                raise ProtocolError(f"qubit {q!r} is not registered at node {node}")
            if q in used:
                raise ProtocolError(f"qubit {q!r} is paired twice")
            used.add(q)

        if len(self.ends) != len(paths) or len(self.interior) != len(paths):
            raise ProtocolError("pairing does not match the number of paths")
        for j, p in enumerate(paths):
            claim(self.ends[j][0], a_node)
            claim(self.ends[j][1], b_node)
            for v in p.interior:
                if v not in self.interior[j] or len(self.interior[j][v]) != 2:
                    raise ProtocolError(f"walker {j} has no qubit pair at node {v}")
                for q in self.interior[j][v]:
                    claim(q, v)


def auto_pairing(g: NetworkGraph, a_node: int, b_node: int, paths: Sequence[PathSpec]) -> QubitPairing:
    """Hand out qubits in registration order, walker by walker."""
    cursor = {v: 0 for v in g.nodes}

    def take(v: int, n: int) -> tuple[str, ...]:
        qs = g.data_qubits[v][cursor[v]:cursor[v] + n]
        if len(qs) < n:
            raise ProtocolError(f"node {v} has too few qubits for automatic pairing")
        cursor[v] += n
        return qs

    ends, interior = [], []
    for p in paths:
        ends.append((take(a_node, 1)[0], take(b_node, 1)[0]))
        interior.append({v: take(v, 2) for v in p.interior})
    return QubitPairing(tuple(ends), tuple(interior))


def _splitting_coin(g: NetworkGraph, p: PathSpec, j: int) -> NodeCoin:
    """Path coin whose source block maps c_A to (c_A + c_A^p)/sqrt2."""
    coins = path_coin_matrices(g, p)
    a = p.source
    coins[a] = embedded_hadamard(g.coin_dim(a), coin_dof(g, a, a).value, p.entry_dof(g).value)
    return NodeCoin(g, j, coins, "splitting coin")


def multipath_ghz(
    g: NetworkGraph, a_node: int, b_node: int, paths: Sequence[PathSpec] | int | None = None,
    pairing: QubitPairing | str | None = None, rng: np.random.Generator | None = None,
    separate: bool = True, trace: bool = False, forced_outcomes=None,
) -> ProtocolResult:
    """One independent GHZ state per edge-disjoint path between A and B.

    ``paths`` may be explicit, or an integer k for greedy shortest routes.
    """
    if paths is None or isinstance(paths, int):
        k = 2 if paths is None else paths
        ps = edge_disjoint_shortest_paths(g, a_node, b_node, k) if k else []
        if len(ps) < k:
            raise ProtocolError(f"only {len(ps)} edge-disjoint paths between {a_node} and {b_node}")
    else:
        ps = [p if isinstance(p, PathSpec) else PathSpec.from_nodes(g, p) for p in paths]
        for p in ps:
            p.validate(g)
            if (p.source, p.target) != (a_node, b_node):
                raise ProtocolError(f"path {p.nodes} does not run {a_node}->{b_node}")
    _check_disjoint(ps)
    if pairing is None or pairing == "auto":
        pairing = auto_pairing(g, a_node, b_node, ps)
    pairing.validate(g, a_node, b_node, ps)
    k = len(ps)
    run = _Run(_start_state(g, a_node, k, {}), trace)
    run._note("initial")

    plans: list[WalkerPlan] = []
    for j, p in enumerate(ps):
        plan = _path_plan(g, p, j, _splitting_coin(g, p, j))
        a_j, b_j = pairing.ends[j]
        # the stay branch still sits at A at coin index 1; the travelling branch
        # is at the t-th path node at coin index t
        for t in range(1, p.hops + 1):
            inter: dict[int, list[DataGate]] = {}
            if t == 1:
                inter[a_node] = [DataGate((a_j,), X)]
            v = p.nodes[t]
            if t < p.hops:
                inter[v] = [DataGate(tuple(pairing.interior[j][v]), np.kron(X, X))]
            else:
                inter[v] = [DataGate((b_j,), X)]
            plan.gates[t] = [ExtendedCoin(g, j, {}, inter, f"path {j} interaction")]
        plans.append(plan)

    result = ProtocolResult(run.state)
    result.propagation_steps = run.schedule(plans, extended_shift(g, k)) if k else 0
    sets = [pairing.ghz_set(j, p) for j, p in enumerate(ps)]
    if separate and k:
        run.reverse()
        c_a = coin_dof(g, a_node, a_node).value
        for j, p in enumerate(ps):
            c_ap = p.entry_dof(g).value
            forced = forced_outcomes[j] if forced_outcomes else None
            out = _rotate_back(run, a_node, c_a, c_ap, rng, forced, j)
            result.outcomes.append((j, out))
            a_j = pairing.ends[j][0]
            if out[1] == c_ap:
                run.data(local_gate(g, a_j, Z), "correction")
                result.corrections.append({"gate": "Z", "qubit": a_j, "walkers": [j]})
            # the stay branch carries a_j flipped; X on a_j aligns both branches with GHZ+
            run.data(local_gate(g, a_j, X), "frame")
            result.corrections.append({"gate": "X", "qubit": a_j, "walkers": [j], "kind": "frame"})
    for j, qs in enumerate(sets):
        result.fidelities[f"ghz_{j}"] = subsystem_fidelity(run.state, qs, ghz_target(len(qs)))
    for i in range(k):
        for j in range(i + 1, k):
            result.fidelities[f"mutual_information_{i}_{j}"] = mutual_information(run.state, sets[i], sets[j])
    result.final_state = run.state
    result.elapsed_steps = run.steps
    result.trace = run.trace
    result.operators = run.ops
    result.info["paths"] = [list(p.nodes) for p in ps]
    result.info["ghz_sets"] = sets
    return result


def _designated(g: NetworkGraph, tree: TreeSpec, per_node_qubits) -> dict[int, tuple[str, ...]]:
    out = {}
    for v in tree.nodes:
        if v == tree.root or tree.walker_counts[v] == 0:
            continue
        if per_node_qubits is None or per_node_qubits == "first":
            qs = g.data_qubits[v][:1]
        elif per_node_qubits == "all":
            qs = g.data_qubits[v]
        else:
            qs = tuple(per_node_qubits.get(v, per_node_qubits.get(str(v), ())))
        if not qs:
            raise ProtocolError(f"tree node {v} has no designated qubit")
        for q in qs:
            if g.owner(q) != v:
                raise ProtocolError(f"qubit {q!r} is not registered at node {v}")
        out[v] = tuple(qs)
    return out


def tree_ghz(
    g: NetworkGraph, a_node: int, tree: TreeSpec, per_node_qubits=None, root_qubit: str | None = None,
    rng: np.random.Generator | None = None, separate: bool = True, trace: bool = False,
    forced_outcomes=None,
) -> ProtocolResult:
    """GHZ over the root qubit and the designated qubits of every tree node.

    One walker per leaf.  Node v applies X^{1/W_v} to its designated qubits
    each time a walker passes, so the W_v passing walkers of the moving
    branch net a full X.
    """
    if tree.root != a_node:
        raise ProtocolError(f"tree is rooted at {tree.root}, expected {a_node}")
    for v, p in tree.parent.items():
        g._require_node(v)
        if p is not None and p not in g.neighbors(v):
            raise ProtocolError(f"tree edge ({p}, {v}) is not a network edge")
    paths = tree.paths()
    if not paths:
        raise ProtocolError("tree has no leaves")
    w = tree.walker_counts
    designated = _designated(g, tree, per_node_qubits)
    a = root_qubit or (g.data_qubits[a_node][0] if g.data_qubits[a_node] else None)
    if a is None or g.owner(a) != a_node:
        raise ProtocolError("the root needs a control qubit")
    k = len(paths)
    r = 1 / math.sqrt(2)
    run = _Run(_start_state(g, a_node, k, {a: (r, r)}), trace)
    run._note("initial")
    run.data(data_controlled_coin(g, tuple(range(k)), a_node, a, np.eye(g.coin_dim(a_node)),
                                  complement_matrix(g.coin_width(a_node))), "inject")
    roots = {v: fractional_x(w[v]) for v in designated}
    plans = []
    for j, p in enumerate(paths):
        plan = _path_plan(g, p, j)
        for t in range(1, p.hops + 1):
            v = p.nodes[t]
            gates = [DataGate((q,), roots[v]) for q in designated[v]]
            plan.gates[t] = [ExtendedCoin(g, j, {}, {v: gates}, f"walker {j} fractional X")]
        plans.append(plan)
    result = ProtocolResult(run.state)
    result.propagation_steps = run.schedule(plans, extended_shift(g, k))
    if separate:
        run.reverse()
        cbar = complement(coin_dof(g, a_node, a_node)).value
        flips = 0
        for j in range(k):
            out = _rotate_and_measure(run, a_node, j, cbar, rng, forced_outcomes[j] if forced_outcomes else None)
            result.outcomes.append((j, out))
            flips += out[1] == cbar
        if flips % 2:
            run.data(local_gate(g, a, Z), "correction")
            result.corrections.append({"gate": "Z", "qubit": a, "walkers": list(range(k))})
    ghz_set = [a] + [q for v in sorted(designated) for q in designated[v]]
    result.fidelities["ghz"] = subsystem_fidelity(run.state, ghz_set, ghz_target(len(ghz_set)))
    result.final_state = run.state
    result.elapsed_steps = run.steps
    result.trace = run.trace
    result.operators = run.ops
    result.info.update({
        "paths": [list(p.nodes) for p in paths],
        "ghz_sets": [ghz_set],
        "walker_counts": {str(v): w[v] for v in sorted(w) if w[v]},
        "leaves": list(tree.leaves),
        "height": tree.height,
    })
    return result
