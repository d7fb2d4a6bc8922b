"""Network qubits as a walk on the complete graph K_{2^m}.

Each network edge e_i carries two qubits (x_i, y_i).  Their four basis
states are the four arcs of K_2 through the mapping

    (x, y) -> arc (v, c) with v = 1 ^ x ^ y and c = y,

so |10> is the self-loop at vertex 0 and the Bell states become arcs leaving
a single vertex.  m edges compose to K_{2^m}: vertex and coin labels are
m-bit strings with edge 0 in the most significant bit, and a 2m-qubit basis
state is the bit string x_0 y_0 x_1 y_1 ... (first qubit most significant).

Projective Bell and GHZ measurements are realized as sampled pairs of
unitary coins acting with an identity shift.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .exceptions import ProtocolError, StateError
from .netgraph import NetworkGraph, edge_disjoint_shortest_paths

__all__ = [
    "CompleteWalkState",
    "HouseholderCoin",
    "ProjectionOutcome",
    "WalkPermutation",
    "bsm_step",
    "complete_flipflop",
    "entangling_coin",
    "generate_epr_all_edges",
    "apply_frame",
    "ghz_basis_vector",
    "ghz_fidelity",
    "ghz_frame",
    "ghz_projection_step",
    "is_vertex_localized",
    "project_qubits",
    "qubit_entropy",
    "qubits_to_walk",
    "run_ghz_grid",
    "run_multipath_bsm",
    "sample_edges",
    "walk_to_qubits",
]

M_CAP = 10
TRACK_CAP = 16
LOCALIZED_TOL = 1e-10
PRUNE = 1e-14

Arc = tuple[int, int]
QubitAmps = dict[int, complex]


# -- states and the edge mapping ---------------------------------------------


class CompleteWalkState:
    """Sparse amplitudes over arcs (vertex, coin) of K_{2^m}."""

    __slots__ = ("m", "amplitudes")

    def __init__(self, m: int, amplitudes: Mapping[Arc, complex]):
        if m < 1:
            raise StateError("m must be at least 1")
        self.m = m
        self.amplitudes = {k: complex(a) for k, a in amplitudes.items() if abs(a) >= PRUNE}

    def __len__(self) -> int:
        return len(self.amplitudes)

    def __repr__(self) -> str:
        return f"CompleteWalkState(m={self.m}, terms={len(self)})"

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalized(self) -> CompleteWalkState:
        n = math.sqrt(self.norm2())
        if n == 0:
            raise StateError("cannot normalize the zero vector")
        return CompleteWalkState(self.m, {k: a / n for k, a in self.amplitudes.items()})

    def vertices(self, tol: float = LOCALIZED_TOL) -> set[int]:
        return {v for (v, _), a in self.amplitudes.items() if abs(a) > tol}

    def vector(self) -> np.ndarray:
        """Dense amplitudes indexed by v * 2^m + c (m <= 10)."""
        if self.m > M_CAP:
            raise StateError(f"dense vectors are limited to m <= {M_CAP}")
        out = np.zeros(1 << (2 * self.m), dtype=complex)
        for (v, c), a in self.amplitudes.items():
            out[(v << self.m) | c] = a
        return out

    def allclose(self, other: CompleteWalkState, atol: float = 1e-10) -> bool:
        keys = set(self.amplitudes) | set(other.amplitudes)
        return all(abs(self.amplitudes.get(k, 0) - other.amplitudes.get(k, 0)) <= atol for k in keys)


def _edge_bits(value: int, m: int, i: int) -> tuple[int, int]:
    """(x_i, y_i) of a 2m-qubit basis index."""
    shift = 2 * (m - 1 - i)
    return (value >> (shift + 1)) & 1, (value >> shift) & 1


def _basis_to_arc(value: int, m: int) -> Arc:
    v = c = 0
    for i in range(m):
        x, y = _edge_bits(value, m, i)
        v = (v << 1) | (1 ^ x ^ y)
        c = (c << 1) | y
    return v, c


def _arc_to_basis(arc: Arc, m: int) -> int:
    v, c = arc
    out = 0
    for i in range(m):
        vb = (v >> (m - 1 - i)) & 1
        y = (c >> (m - 1 - i)) & 1
        x = 1 ^ vb ^ y
        out = (out << 2) | (x << 1) | y
    return out


def _as_qubit_amps(bits: str | Mapping) -> tuple[int, QubitAmps]:
    if isinstance(bits, str):
        if set(bits) - {"0", "1"} or not bits:
            raise StateError("bit strings must be non-empty and binary")
        return len(bits), {int(bits, 2): 1.0 + 0j}
    n = None
    amps: QubitAmps = {}
    for key, a in bits.items():
        if isinstance(key, str):
            n = len(key) if n is None else n
            if len(key) != n:
                raise StateError("bit strings of different lengths")
            key = int(key, 2)
        amps[int(key)] = amps.get(int(key), 0) + complex(a)
    if n is None:
        raise StateError("integer-keyed superpositions need an explicit qubit count")
    return n, amps


def qubits_to_walk(bits: str | Mapping, n_qubits: int | None = None) -> CompleteWalkState:
    """Map a 2m-qubit basis state or superposition onto arcs of K_{2^m}."""
    if isinstance(bits, Mapping) and n_qubits is not None and all(isinstance(k, int) for k in bits):
        n, amps = n_qubits, {int(k): complex(a) for k, a in bits.items()}
    else:
        n, amps = _as_qubit_amps(bits)
    if n % 2:
        raise StateError(f"need an even number of qubits, got {n}")
    m = n // 2
    return CompleteWalkState(m, {_basis_to_arc(b, m): a for b, a in amps.items()})


def walk_to_qubits(w: CompleteWalkState) -> QubitAmps:
    """Inverse of :func:`qubits_to_walk`: {2m-bit basis index: amplitude}."""
    return {_arc_to_basis(arc, w.m): a for arc, a in w.amplitudes.items()}


def is_vertex_localized(w: CompleteWalkState) -> bool:
    """True iff every amplitude above 1e-10 leaves the same vertex."""
    return len(w.vertices()) == 1


# -- walk operators ----------------------------------------------------------


class WalkPermutation:
    """Arc relabeling on K_{2^m}."""

    def __init__(self, m: int, fn: Callable[[Arc], Arc], name: str):
        self.m = m
        self.fn = fn
        self.name = name

    def apply(self, w: CompleteWalkState) -> CompleteWalkState:
        if w.m != self.m:
            raise StateError(f"operator for m={self.m} applied to m={w.m}")
        return CompleteWalkState(w.m, {self.fn(k): a for k, a in w.amplitudes.items()})

    def to_matrix(self) -> np.ndarray:
        if self.m > M_CAP:
            raise StateError(f"dense matrices are limited to m <= {M_CAP}")
        n = 1 << self.m
        out = np.zeros((n * n, n * n), dtype=complex)
        for v in range(n):
            for c in range(n):
                tv, tc = self.fn((v, c))
                out[(tv << self.m) | tc, (v << self.m) | c] = 1
        return out

    def inverse(self) -> WalkPermutation:
        # both permutations used here are involutions
        return self

    __call__ = apply


def entangling_coin(m: int) -> WalkPermutation:
    """Bitwise X on all m coin bits; identity on the vertex register."""
    if m < 1:
        raise StateError("m must be at least 1")
    mask = (1 << m) - 1
    return WalkPermutation(m, lambda arc: (arc[0], arc[1] ^ mask), "entangling coin")


def complete_flipflop(m: int) -> WalkPermutation:
    """Arc reversal on K_{2^m}: the arc x -> y becomes y -> x."""
    if m < 1:
        raise StateError("m must be at least 1")
    return WalkPermutation(m, lambda arc: (arc[1], arc[0]), "flip-flop")


def generate_epr_all_edges(m: int, initial: CompleteWalkState | None = None) -> CompleteWalkState:
    """One S C step from |+>|0> on every edge; yields an EPR pair per edge."""
    if initial is None:
        r = 1 / math.sqrt(2)
        per_edge = {"00": r, "10": r}
        amps: dict[str, complex] = {"": 1.0 + 0j}
        for _ in range(m):
            amps = {k + e: a * b for k, a in amps.items() for e, b in per_edge.items()}
        initial = qubits_to_walk(amps)
    if initial.m != m:
        raise StateError(f"initial state has m={initial.m}, expected {m}")
    return complete_flipflop(m).apply(entangling_coin(m).apply(initial))


# -- GHZ-basis projections ---------------------------------------------------


def ghz_basis_vector(k: int, index: int) -> dict[int, complex]:
    """Outcome ``index`` (1-based) of the k-qubit GHZ basis.

    index - 1 = (s << 1) | sign gives (|0 s> + (-1)^sign |1 s̄>)/sqrt2, so for
    k = 2 the order is Phi+, Phi-, Psi+, Psi-.
    """
    if not 1 <= index <= 1 << k:
        raise ProtocolError(f"GHZ outcome index {index} out of range for k={k}")
    s, sign = (index - 1) >> 1, (index - 1) & 1
    low = (1 << (k - 1)) - 1
    r = 1 / math.sqrt(2)
    return {s: r, (1 << (k - 1)) | (~s & low): -r if sign else r}


def _split(value: int, n: int, positions: Sequence[int]) -> tuple[int, int]:
    """(measured bits in ``positions`` order, remaining bits with measured cleared)."""
    z = 0
    rest = value
    for p in positions:
        bit = (value >> (n - 1 - p)) & 1
        z = (z << 1) | bit
        rest &= ~(1 << (n - 1 - p))
    return z, rest


def _join(z: int, rest: int, n: int, positions: Sequence[int]) -> int:
    k = len(positions)
    for t, p in enumerate(positions):
        if (z >> (k - 1 - t)) & 1:
            rest |= 1 << (n - 1 - p)
    return rest


def project_qubits(amps: QubitAmps, n: int, positions: Sequence[int]) -> dict[int, tuple[float, QubitAmps]]:
    """Born probability and normalized post-state for every GHZ outcome on ``positions``."""
    positions = list(positions)
    k = len(positions)
    if k < 2:
        raise ProtocolError("GHZ projections need at least two qubits")
    if len(set(positions)) != k or not all(0 <= p < n for p in positions):
        raise ProtocolError(f"bad measured positions {positions}")
    grouped: dict[int, dict[int, complex]] = defaultdict(dict)
    total = 0.0
    for value, a in amps.items():
        z, rest = _split(value, n, positions)
        grouped[rest][z] = a
        total += abs(a) ** 2
    out = {}
    for index in range(1, (1 << k) + 1):
        basis = ghz_basis_vector(k, index)
        coeff = {rest: sum(np.conj(t) * zs.get(z, 0) for z, t in basis.items()) for rest, zs in grouped.items()}
        p = sum(abs(c) ** 2 for c in coeff.values()) / total
        post: QubitAmps = {}
        if p > 1e-15:
            norm = math.sqrt(p * total)
            for rest, c in coeff.items():
                if abs(c) < PRUNE:
                    continue
                for z, t in basis.items():
                    post[_join(z, rest, n, positions)] = c * t / norm
        out[index] = (float(p), post)
    return out


class HouseholderCoin:
    """Unitary D R with R = I - 2|u><u| and D a phase on one arc.

    Acts on the full walk space of K_{2^m}; applied implicitly so it works on
    sparse states of any size.
    """

    def __init__(self, m: int, u: Mapping[Arc, complex], phase_arc: Arc | None = None,
                 phase: complex = 1.0, name: str = "coin"):
        self.m = m
        self.u = {k: complex(a) for k, a in u.items() if abs(a) >= PRUNE}
        self.phase_arc = phase_arc
        self.phase = complex(phase)
        self.name = name

    @classmethod
    def mapping(cls, m: int, x: Mapping[Arc, complex], y: Mapping[Arc, complex], name: str) -> HouseholderCoin:
        """Reflection taking unit vector x to unit vector y; needs <x|y> real."""
        diff = {k: x.get(k, 0) - y.get(k, 0) for k in set(x) | set(y)}
        n = math.sqrt(sum(abs(a) ** 2 for a in diff.values()))
        return cls(m, {k: a / n for k, a in diff.items()} if n > 1e-12 else {}, name=name)

    def apply(self, w: CompleteWalkState) -> CompleteWalkState:
        amps = dict(w.amplitudes)
        if self.u:
            overlap = sum(np.conj(a) * amps.get(k, 0) for k, a in self.u.items())
            for k, a in self.u.items():
                amps[k] = amps.get(k, 0) - 2 * a * overlap
        if self.phase_arc is not None and self.phase_arc in amps:
            amps[self.phase_arc] *= self.phase
        return CompleteWalkState(w.m, amps)

    def to_matrix(self) -> np.ndarray:
        if self.m > M_CAP:
            raise StateError(f"dense matrices are limited to m <= {M_CAP}")
        dim = 1 << (2 * self.m)
        u = np.zeros(dim, dtype=complex)
        for (v, c), a in self.u.items():
            u[(v << self.m) | c] = a
        out = np.eye(dim, dtype=complex) - 2 * np.outer(u, u.conj())
        if self.phase_arc is not None:
            v, c = self.phase_arc
            out[(v << self.m) | c] *= self.phase
        return out

    __call__ = apply


def _coin_pair(w: CompleteWalkState, target: CompleteWalkState) -> tuple[HouseholderCoin, HouseholderCoin]:
    """C1 concentrates w on the heaviest arc of target; C2 spreads it onto target."""
    x = w.normalized().amplitudes
    y = target.amplitudes
    tau = max(y, key=lambda k: (abs(y[k]), -k[0], -k[1]))
    # reflection x -> e^{i phi}|tau>, then a phase so C1 x = e^{i psi}|tau>
    phi = np.angle(x[tau]) if abs(x.get(tau, 0)) > 1e-15 else 0.0
    psi = np.angle(y[tau])
    r1 = HouseholderCoin.mapping(w.m, x, {tau: np.exp(1j * phi)}, "concentrate")
    c1 = HouseholderCoin(w.m, r1.u, tau, np.exp(1j * (psi - phi)), "concentrate")
    c2 = HouseholderCoin.mapping(w.m, {tau: np.exp(1j * psi)}, y, "spread")
    return c1, c2


@dataclass
class ProjectionOutcome:
    """Sampled GHZ-basis outcome; index 0 marks a failed projection (identity)."""
    index: int
    probability: float
    state: CompleteWalkState
    coins: tuple[HouseholderCoin, HouseholderCoin] | None
    measured: tuple[int, ...]
    probabilities: dict[int, float] = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return self.index != 0

    @property
    def pattern(self) -> tuple[int, int]:
        """(s, sign) of the outcome; undefined for failures."""
        return (self.index - 1) >> 1, (self.index - 1) & 1


def ghz_projection_step(w: CompleteWalkState, measured_qubits: Sequence[int],
                        rng: np.random.Generator | None = None, success_q: float = 1.0,
                        forced: int | None = None) -> ProjectionOutcome:
    """Sample a k-qubit GHZ-basis outcome and realize it with a coin pair (identity shift).

    ``measured_qubits`` are positions in the 2m-qubit register.  With
    probability 1 - ``success_q`` the projection fails and the state is
    returned unchanged under outcome 0.
    """
    if not 0 <= success_q <= 1:
        raise ProtocolError("success probability must lie in [0, 1]")
    n = 2 * w.m
    outcomes = project_qubits(walk_to_qubits(w), n, measured_qubits)
    probs = {i: p for i, (p, _) in outcomes.items()}
    if forced is None:
        if rng is None:
            raise ProtocolError("a random generator is required for sampling")
        if success_q < 1 and rng.random() >= success_q:
            return ProjectionOutcome(0, 1 - success_q, w, None, tuple(measured_qubits), probs)
        keys = sorted(probs)
        p = np.array([probs[i] for i in keys])
        index = keys[int(rng.choice(len(keys), p=p / p.sum()))]
    elif forced == 0:
        return ProjectionOutcome(0, 1 - success_q, w, None, tuple(measured_qubits), probs)
    else:
        index = forced
    p, post = outcomes[index]
    if p <= 0:
        raise ProtocolError(f"outcome {index} has zero probability")
    target = qubits_to_walk(post, n)
    c1, c2 = _coin_pair(w, target)
    new = c2.apply(c1.apply(w.normalized()))
    return ProjectionOutcome(index, p * success_q, new, (c1, c2), tuple(measured_qubits), probs)


def bsm_step(w: CompleteWalkState, measured_pair: Sequence[int], rng: np.random.Generator | None = None,
             success_q: float = 1.0, forced: int | None = None) -> ProjectionOutcome:
    """Bell-state measurement on two qubits; outcomes 1..4 are Phi+, Phi-, Psi+, Psi-."""
    if len(measured_pair) != 2:
        raise ProtocolError("a Bell measurement acts on exactly two qubits")
    return ghz_projection_step(w, measured_pair, rng, success_q, forced)


# -- qubit-level helpers -----------------------------------------------------


def _reduce_matrix(amps: QubitAmps, n: int, keep: Sequence[int]) -> np.ndarray:
    rows: dict[int, int] = {}
    cols: dict[int, int] = {}
    entries = []
    for value, a in amps.items():
        z, rest = _split(value, n, keep)
        entries.append((rows.setdefault(z, len(rows)), cols.setdefault(rest, len(cols)), a))
    m = np.zeros((max(len(rows), 1), max(len(cols), 1)), dtype=complex)
    for r, c, a in entries:
        m[r, c] += a
    return m


def qubit_entropy(amps: QubitAmps, n: int, keep: Sequence[int]) -> float:
    """Von Neumann entropy (bits) of the qubits at ``keep``."""
    m = _reduce_matrix(amps, n, keep)
    gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.conj().T @ m
    eig = np.clip(np.linalg.eigvalsh(gram / np.trace(gram).real), 0, None)
    eig = eig[eig > 1e-15]
    return float(-np.sum(eig * np.log2(eig)))


def ghz_frame(amps: QubitAmps, n: int, keep: Sequence[int]) -> tuple[int, bool]:
    """Pauli frame (X mask over ``keep``, Z on the first) mapping the kept qubits to GHZ+.

    Reads the frame off the dominant Schmidt vector, which is exact when the
    kept qubits are in a GHZ state up to local Paulis.
    """
    m = _reduce_matrix(amps, n, keep)
    rows = sorted({_split(v, n, keep)[0] for v in amps})
    u, _, _ = np.linalg.svd(m, full_matrices=False)
    vec = {z: u[i, 0] for i, z in enumerate(rows) if abs(u[i, 0]) > 1e-9}
    k = len(keep)
    zeros = [z for z in vec if not (z >> (k - 1)) & 1]
    if len(vec) != 2 or len(zeros) != 1:
        raise ProtocolError("kept qubits are not in a GHZ state up to Paulis")
    low = zeros[0]
    high = next(z for z in vec if z != low)
    if high != ((1 << k) - 1) ^ low:
        raise ProtocolError("kept qubits are not in a GHZ state up to Paulis")
    rel = vec[high] / vec[low]
    return low, bool(rel.real < 0)


def apply_frame(amps: QubitAmps, n: int, keep: Sequence[int], frame: tuple[int, bool]) -> QubitAmps:
    x_mask, z_first = frame
    flip = _join(x_mask, 0, n, keep)
    first = 1 << (n - 1 - keep[0])
    out = {}
    for value, a in amps.items():
        nv = value ^ flip
        # X then Z on the first kept qubit
        out[nv] = -a if (z_first and nv & first) else a
    return out


def ghz_fidelity(amps: QubitAmps, n: int, keep: Sequence[int]) -> float:
    """Overlap of the kept qubits' reduced state with GHZ+."""
    k = len(keep)
    r = 1 / math.sqrt(2)
    target = {0: r, (1 << k) - 1: r}
    proj: dict[int, complex] = defaultdict(complex)
    total = 0.0
    for value, a in amps.items():
        z, rest = _split(value, n, keep)
        total += abs(a) ** 2
        if z in target:
            proj[rest] += target[z] * a
    return float(sum(abs(v) ** 2 for v in proj.values()) / total)


# -- reconstructions ---------------------------------------------------------


def sample_edges(g: NetworkGraph, p: float, rng: np.random.Generator) -> frozenset[tuple[int, int]]:
    """Keep each edge independently with probability p (edges visited in sorted order)."""
    if not 0 <= p <= 1:
        raise ProtocolError(f"edge probability must lie in [0, 1], got {p}")
    edges = sorted(g.edges)
    keep = rng.random(len(edges)) < p
    return frozenset(e for e, k in zip(edges, keep) if k)


def _run_chain(hops: int, rng, q: float) -> dict:
    """EPR per path edge, then a Bell measurement at every intermediate node."""
    record: dict = {"hops": hops, "outcomes": [], "state_tracked": hops <= TRACK_CAP}
    if hops > TRACK_CAP:
        outcomes = [0 if (q < 1 and rng.random() >= q) else int(rng.integers(1, 5)) for _ in range(hops - 1)]
        record["outcomes"] = outcomes
        record["success"] = all(outcomes)
        return record
    w = generate_epr_all_edges(hops)
    for i in range(1, hops):
        out = bsm_step(w, (2 * i - 1, 2 * i), rng, q)
        record["outcomes"].append(out.index)
        if not out.succeeded:
            record["success"] = False
            return record
        w = out.state
    amps = walk_to_qubits(w)
    ends = (0, 2 * hops - 1)
    record["success"] = True
    record["end_entropy"] = qubit_entropy(amps, 2 * hops, ends[:1])
    frame = ghz_frame(amps, 2 * hops, ends)
    record["frame"] = {"x_mask": frame[0], "z": frame[1]}
    record["fidelity"] = ghz_fidelity(apply_frame(amps, 2 * hops, ends, frame), 2 * hops, ends)
    return record


def run_multipath_bsm(g: NetworkGraph, a: int, b: int, p: float, swap_success_q: float,
                      rng: np.random.Generator) -> dict:
    """One trial: sample links, route edge-disjoint shortest paths, swap along each."""
    if not 0 <= swap_success_q <= 1:
        raise ProtocolError("swap success probability must lie in [0, 1]")
    ep = sample_edges(g, p, rng)
    sub = g.subgraph(ep)
    paths = edge_disjoint_shortest_paths(sub, a, b, len(ep) + 1) if ep else []
    chains = []
    for path in paths:
        rec = _run_chain(path.hops, rng, swap_success_q)
        rec["path"] = list(path.nodes)
        chains.append(rec)
    return {
        "edges": len(ep),
        "paths_found": len(paths),
        "chains": chains,
        "success": any(c["success"] for c in chains),
    }


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[max(rx, ry)] = min(rx, ry)


def _edge_components(edges: Sequence[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    uf = _UnionFind(edges)
    by_node: dict[int, list] = defaultdict(list)
    for e in edges:
        by_node[e[0]].append(e)
        by_node[e[1]].append(e)
    for es in by_node.values():
        for e in es[1:]:
            uf.union(es[0], e)
    groups: dict = defaultdict(list)
    for e in edges:
        groups[uf.find(e)].append(e)
    return [sorted(es) for _, es in sorted(groups.items())]


def run_ghz_grid(g: NetworkGraph, a: int, b: int, p: float, proj_success_q: float,
                 rng: np.random.Generator) -> dict:
    """One trial: sample links, then GHZ-project the link qubits at every node other than A and B.

    Edge e = (u, v), u < v, holds qubit x_e at u and y_e at v.  The report
    lists the qubit components that contain qubits at A or B.
    """
    if not 0 <= proj_success_q <= 1:
        raise ProtocolError("projection success probability must lie in [0, 1]")
    ep = sorted(sample_edges(g, p, rng))
    qubit_ids = [(e, side) for e in ep for side in (0, 1)]
    uf = _UnionFind(qubit_ids)
    for e in ep:
        uf.union((e, 0), (e, 1))
    projections = []
    tracked = []
    for comp in _edge_components(ep):
        tracked_comp = len(comp) <= TRACK_CAP
        w = generate_epr_all_edges(len(comp)) if tracked_comp else None
        index = {e: i for i, e in enumerate(comp)}
        nodes = sorted({x for e in comp for x in e})
        measured_pos: set[int] = set()
        for v in nodes:
            if v in (a, b):
                continue
            local = [(e, 0 if e[0] == v else 1) for e in comp if v in e]
            if len(local) < 2:
                continue
            positions = [2 * index[e] + side for e, side in local]
            if w is not None:
                out = ghz_projection_step(w, positions, rng, proj_success_q)
                idx = out.index
                if out.succeeded:
                    w = out.state
            else:
                idx = 0 if (proj_success_q < 1 and rng.random() >= proj_success_q) \
                    else int(rng.integers(1, (1 << len(local)) + 1))
            projections.append({"node": v, "k": len(local), "outcome": idx})
            if idx:
                measured_pos.update(positions)
                for qid in local[1:]:
                    uf.union(local[0], qid)
        if w is not None:
            tracked.append((comp, index, w, measured_pos))
    groups: dict = defaultdict(list)
    for qid in qubit_ids:
        groups[uf.find(qid)].append(qid)

    def at(qid):
        (u, v), side = qid
        return v if side else u

    components = []
    for members in groups.values():
        nodes = {at(q) for q in members}
        if a in nodes or b in nodes:
            components.append({"qubits": [[list(e), s] for e, s in sorted(members)],
                               "has_a": a in nodes, "has_b": b in nodes})
    success = any(c["has_a"] and c["has_b"] for c in components)
    report = {"edges": len(ep), "projections": projections, "components": components,
              "success": success, "state_tracked": len(tracked) == len(_edge_components(ep))}
    fids = []
    for comp, index, w, measured in tracked:
        amps = walk_to_qubits(w)
        n = 2 * len(comp)
        free = [i for i in range(n) if i not in measured]
        seen_roots: dict = defaultdict(list)
        for pos in free:
            e, side = comp[pos // 2], pos % 2
            seen_roots[uf.find((e, side))].append(pos)
        for positions in seen_roots.values():
            nodes = {at((comp[pp // 2], pp % 2)) for pp in positions}
            if a in nodes and b in nodes and len(positions) >= 2:
                frame = ghz_frame(amps, n, positions)
                fids.append(ghz_fidelity(apply_frame(amps, n, positions, frame), n, positions))
    if fids:
        report["ab_fidelities"] = fids
    return report
