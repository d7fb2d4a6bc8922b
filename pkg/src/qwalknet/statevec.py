"""Sparse state vectors over walker arcs x data-qubit bitstrings.

A basis label is ``(walkers, bits)``: ``walkers`` is a tuple with one
``(node, coin_value)`` cell per walker and ``bits`` is an int holding the data
register big-endian in registry order (the first registered qubit is the most
significant bit).  Amplitudes live in a plain dict; entries below
``PRUNE_TOL`` in magnitude are dropped after every operation.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .exceptions import StateError
from .netgraph import CoinLabel, NetworkGraph

__all__ = [
    "DENSE_CAP",
    "DenseLayout",
    "DensityMatrix",
    "PRUNE_TOL",
    "SparseState",
    "apply",
    "collapse_walker",
    "dump_state",
    "entropy",
    "enumerate_basis",
    "fidelity",
    "ghz_target",
    "init_product_state",
    "inner",
    "measure_walker",
    "mutual_information",
    "reduced_density",
    "subsystem_entropy",
    "subsystem_fidelity",
    "to_dense",
    "to_vector",
    "walker_distribution",
]

PRUNE_TOL = 1e-14
DENSE_CAP = 1 << 20

Cell = tuple[int, int]
Label = tuple[tuple[Cell, ...], int]
Subsystem = Union[str, int]


class SparseState:
    __slots__ = ("graph", "amplitudes", "walker_count")

    def __init__(self, graph: NetworkGraph, amplitudes: Mapping[Label, complex],
                 walker_count: int, prune: bool = True):
        self.graph = graph
        self.walker_count = walker_count
        if prune:
            self.amplitudes = {k: complex(a) for k, a in amplitudes.items() if abs(a) >= PRUNE_TOL}
        else:
            self.amplitudes = dict(amplitudes)

    @property
    def registry(self) -> tuple[str, ...]:
        return self.graph.registry

    @property
    def n_qubits(self) -> int:
        return len(self.graph.registry)

    def __len__(self) -> int:
        return len(self.amplitudes)

    def __repr__(self) -> str:
        return f"SparseState(terms={len(self)}, walkers={self.walker_count}, qubits={self.n_qubits})"

    def copy(self) -> SparseState:
        return SparseState(self.graph, self.amplitudes, self.walker_count, prune=False)

    def evolve(self, amplitudes: Mapping[Label, complex]) -> SparseState:
        """New state on the same graph with the given amplitudes (pruned)."""
        return SparseState(self.graph, amplitudes, self.walker_count)

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalized(self) -> SparseState:
        n = math.sqrt(self.norm2())
        if n == 0:
            raise StateError("cannot normalize the zero vector")
        return self.evolve({k: a / n for k, a in self.amplitudes.items()})

    def bit_position(self, qubit: str) -> int:
        try:
            return self.n_qubits - 1 - self.graph.qubit_index[qubit]
        except KeyError:
            raise StateError(f"unknown qubit {qubit!r}") from None

    def bitstring(self, bits: int) -> str:
        return format(bits, f"0{self.n_qubits}b") if self.n_qubits else ""

    def walker_cells(self, index: int) -> set[Cell]:
        return {walkers[index] for walkers, _ in self.amplitudes}

    def allclose(self, other: SparseState, atol: float = 1e-12) -> bool:
        keys = set(self.amplitudes) | set(other.amplitudes)
        return all(abs(self.amplitudes.get(k, 0) - other.amplitudes.get(k, 0)) <= atol for k in keys)


def _check_cell(g: NetworkGraph, node: int, coin: int) -> None:
    if not g.has_node(node):
        raise StateError(f"unknown node {node!r}")
    if not 0 <= coin < g.coin_dim(node):
        raise StateError(f"coin value {coin} outside the register of node {node}")


def init_product_state(
    g: NetworkGraph,
    walker_inits: Sequence[tuple[int, CoinLabel | int]],
    qubit_bits: str | Mapping[str, int] | None = None,
    qubit_superpositions: Mapping[str, tuple[complex, complex]] | None = None,
) -> SparseState:
    """Walkers on fixed arcs, data qubits in a product state.

    ``qubit_superpositions`` maps qubit names to ``(alpha, beta)`` and overrides
    ``qubit_bits`` for those qubits.
    """
    if not g.self_loops_added:
        raise StateError("walker states live on the augmented graph")
    walkers = []
    for node, coin in walker_inits:
        value = coin.value if isinstance(coin, CoinLabel) else int(coin)
        if isinstance(coin, CoinLabel) and g.has_node(node) and coin.width != g.coin_width(node):
            raise StateError(f"coin label width {coin.width} does not match node {node}")
        _check_cell(g, node, value)
        walkers.append((node, value))
    n = len(g.registry)
    if qubit_bits is None:
        base = 0
    elif isinstance(qubit_bits, str):
        if len(qubit_bits) != n or set(qubit_bits) - {"0", "1"}:
            raise StateError(f"bitstring must have {n} binary digits")
        base = int(qubit_bits, 2) if n else 0
    else:
        base = 0
        for q, b in qubit_bits.items():
            if q not in g.qubit_index:
                raise StateError(f"unknown qubit {q!r}")
            if b:
                base |= 1 << (n - 1 - g.qubit_index[q])
    terms: dict[int, complex] = {base: 1.0 + 0j}
    for q, (alpha, beta) in (qubit_superpositions or {}).items():
        if q not in g.qubit_index:
            raise StateError(f"unknown qubit {q!r}")
        if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-10:
            raise StateError(f"amplitudes for {q!r} are not normalized")
        mask = 1 << (n - 1 - g.qubit_index[q])
        nxt: dict[int, complex] = {}
        for bits, amp in terms.items():
            nxt[bits & ~mask] = nxt.get(bits & ~mask, 0) + amp * alpha
            nxt[bits | mask] = nxt.get(bits | mask, 0) + amp * beta
        terms = nxt
    w = tuple(walkers)
    return SparseState(g, {(w, bits): amp for bits, amp in terms.items()}, len(walkers))


def apply(state: SparseState, op) -> SparseState:
    if op.walker_span() > state.walker_count:
        raise StateError(f"operator addresses walker {op.walker_span() - 1}, state has {state.walker_count}")
    return op.apply(state)


def _require_compatible(s1: SparseState, s2: SparseState) -> None:
    if s1.registry != s2.registry or s1.walker_count != s2.walker_count:
        raise StateError("states differ in qubit registry or walker count")


def inner(s1: SparseState, s2: SparseState) -> complex:
    """<s1|s2>."""
    _require_compatible(s1, s2)
    small, large = (s1, s2) if len(s1) <= len(s2) else (s2, s1)
    total = sum(np.conj(a) * large.amplitudes.get(k, 0) for k, a in small.amplitudes.items())
    return complex(total if small is s1 else np.conj(total))


def fidelity(s1: SparseState, s2: SparseState) -> float:
    return float(abs(inner(s1, s2)) ** 2)


# -- subsystems --------------------------------------------------------------


@dataclass
class DensityMatrix:
    matrix: np.ndarray
    subsystems: tuple[Subsystem, ...]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def check(self, atol: float = 1e-10) -> None:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=atol):
            raise StateError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > atol:
            raise StateError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(m).min() < -1e-9:
            raise StateError("density matrix is not positive semidefinite")


def _walker_cells_sorted(g: NetworkGraph) -> list[Cell]:
    return [(v, c) for v in g.nodes for c in range(g.coin_dim(v))]


def _splitter(state: SparseState, subset: Sequence[Subsystem]):
    """Return (key of the kept part, key of the traced-out part) for labels."""
    if len(set(subset)) != len(subset):
        raise StateError("subsystem listed twice")
    specs: list[tuple[bool, int]] = []
    for s in subset:
        if isinstance(s, str):
            specs.append((False, 1 << state.bit_position(s)))
        elif isinstance(s, (int, np.integer)) and 0 <= s < state.walker_count:
            specs.append((True, int(s)))
        else:
            raise StateError(f"bad subsystem {s!r}")
    all_mask = sum(m for is_w, m in specs if not is_w)
    keep_w = {j for is_w, j in specs if is_w}

    def kept(label: Label):
        walkers, bits = label
        return tuple(walkers[x] if is_w else bool(bits & x) for is_w, x in specs)

    def rest(label: Label):
        walkers, bits = label
        return tuple(w for j, w in enumerate(walkers) if j not in keep_w), bits & ~all_mask

    return kept, rest


def _local_index(state: SparseState, subset: Sequence[Subsystem]):
    cells = _walker_cells_sorted(state.graph)
    cell_pos = {c: i for i, c in enumerate(cells)}
    dims = [2 if isinstance(s, str) else len(cells) for s in subset]

    def index(key) -> int:
        idx = 0
        for s, part, d in zip(subset, key, dims):
            idx = idx * d + (int(part) if isinstance(s, str) else cell_pos[part])
        return idx

    return index, int(np.prod(dims)) if dims else 1


def _schmidt_matrix(state: SparseState, subset: Sequence[Subsystem]) -> np.ndarray:
    """Coefficient matrix psi[kept, rest] restricted to occurring configurations."""
    kept, rest = _splitter(state, subset)
    rows: dict = {}
    cols: dict = {}
    entries = []
    for label, amp in state.amplitudes.items():
        r = rows.setdefault(kept(label), len(rows))
        c = cols.setdefault(rest(label), len(cols))
        entries.append((r, c, amp))
    m = np.zeros((max(len(rows), 1), max(len(cols), 1)), dtype=complex)
    for r, c, amp in entries:
        m[r, c] += amp
    return m


def reduced_density(state: SparseState, subset: Sequence[Subsystem]) -> DensityMatrix:
    """Partial trace onto ``subset`` (qubit names and/or walker indices).

    Local basis order follows ``subset``; walker factors use the sorted
    (node, coin) cell order of the dense layout.
    """
    subset = tuple(subset)
    index, dim = _local_index(state, subset)
    if dim > DENSE_CAP:
        raise StateError(f"reduced state of dimension {dim} exceeds the dense cap")
    kept, rest = _splitter(state, subset)
    groups: dict = defaultdict(list)
    for label, amp in state.amplitudes.items():
        groups[rest(label)].append((index(kept(label)), amp))
    rho = np.zeros((dim, dim), dtype=complex)
    for terms in groups.values():
        idx = np.array([i for i, _ in terms])
        vec = np.array([a for _, a in terms])
        np.add.at(rho, (idx[:, None], idx[None, :]), np.outer(vec, vec.conj()))
    norm = state.norm2()
    return DensityMatrix(rho / norm, subset)


def _entropy_from_eigs(eigs: np.ndarray) -> float:
    eigs = np.clip(np.real(eigs), 0, None)
    eigs = eigs[eigs > 1e-15]
    return float(-np.sum(eigs * np.log2(eigs))) if eigs.size else 0.0


def entropy(rho: DensityMatrix | np.ndarray) -> float:
    """Von Neumann entropy in bits."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return _entropy_from_eigs(np.linalg.eigvalsh(m))


def subsystem_entropy(state: SparseState, subset: Sequence[Subsystem]) -> float:
    """Entropy of a subsystem computed from the Schmidt spectrum.

    Works without forming the 2^s reduced matrix, so large registers are fine
    as long as the state has few terms.
    """
    if not subset:
        return 0.0
    m = _schmidt_matrix(state, tuple(subset))
    gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.conj().T @ m
    gram /= np.trace(gram).real
    return _entropy_from_eigs(np.linalg.eigvalsh(gram))


def mutual_information(state: SparseState, a: Sequence[Subsystem], b: Sequence[Subsystem]) -> float:
    a, b = tuple(a), tuple(b)
    return subsystem_entropy(state, a) + subsystem_entropy(state, b) - subsystem_entropy(state, a + b)


def ghz_target(size: int) -> dict[int, complex]:
    """Sparse (|0..0> + |1..1>)/sqrt(2) over ``size`` qubits, keyed by local index."""
    r = 1 / math.sqrt(2)
    return {0: r, (1 << size) - 1: r}


def subsystem_fidelity(state: SparseState, qubits: Sequence[str],
                       target: Mapping[int, complex] | np.ndarray) -> float:
    """<t| rho_qubits |t> for a pure target given densely or as {index: amp}.

    Local index is big-endian in the order of ``qubits``.
    """
    qubits = tuple(qubits)
    if isinstance(target, np.ndarray):
        target = {i: a for i, a in enumerate(target) if a != 0}
    kept, rest = _splitter(state, qubits)
    proj: dict = defaultdict(complex)
    for label, amp in state.amplitudes.items():
        idx = 0
        for bit in kept(label):
            idx = (idx << 1) | int(bit)
        t = target.get(idx)
        if t is not None:
            proj[rest(label)] += np.conj(t) * amp
    return float(sum(abs(v) ** 2 for v in proj.values()) / state.norm2())


# -- walker measurement ------------------------------------------------------


def walker_distribution(state: SparseState, walker_index: int) -> dict[Cell, float]:
    probs: dict[Cell, float] = defaultdict(float)
    for (walkers, _), amp in state.amplitudes.items():
        probs[walkers[walker_index]] += abs(amp) ** 2
    total = sum(probs.values())
    return {cell: probs[cell] / total for cell in sorted(probs)}


def collapse_walker(state: SparseState, walker_index: int, outcome: Cell) -> tuple[float, SparseState]:
    """Project walker ``walker_index`` onto ``outcome``; returns (probability, state)."""
    kept = {k: a for k, a in state.amplitudes.items() if k[0][walker_index] == outcome}
    p = sum(abs(a) ** 2 for a in kept.values()) / state.norm2()
    if p <= 0:
        raise StateError(f"outcome {outcome} has zero probability")
    return p, state.evolve(kept).normalized()


def measure_walker(state: SparseState, walker_index: int,
                   rng: np.random.Generator) -> tuple[tuple[int, CoinLabel], SparseState]:
    """Born-rule measurement of one walker's arc register."""
    if not 0 <= walker_index < state.walker_count:
        raise StateError(f"no walker {walker_index}")
    dist = walker_distribution(state, walker_index)
    cells = list(dist)
    p = np.array([dist[c] for c in cells])
    choice = cells[int(rng.choice(len(cells), p=p / p.sum()))]
    _, collapsed = collapse_walker(state, walker_index, choice)
    node, coin = choice
    return (node, CoinLabel(coin, state.graph.coin_width(node))), collapsed


# -- dense oracle ------------------------------------------------------------


class DenseLayout:
    """Enumerated basis: walker cells first (node, coin ascending), then bits."""

    def __init__(self, graph: NetworkGraph, walker_count: int):
        self.graph = graph
        self.walker_count = walker_count
        self.cells = _walker_cells_sorted(graph)
        self.cell_index = {c: i for i, c in enumerate(self.cells)}
        self.walker_dim = len(self.cells)
        self.n_qubits = len(graph.registry)
        self.data_dim = 1 << self.n_qubits
        self.dim = self.walker_dim ** walker_count * self.data_dim
        if self.dim > DENSE_CAP:
            raise StateError(f"composite dimension {self.dim} exceeds the dense cap {DENSE_CAP}")

    def index(self, label: Label) -> int:
        walkers, bits = label
        idx = 0
        for cell in walkers:
            idx = idx * self.walker_dim + self.cell_index[cell]
        return idx * self.data_dim + bits

    def node_projector(self, v: int) -> np.ndarray:
        return np.diag([1.0 if c[0] == v else 0.0 for c in self.cells]).astype(complex)

    def node_block(self, v: int, block: np.ndarray) -> np.ndarray:
        """D x D matrix holding ``block`` on node v's coin cells, zero elsewhere."""
        out = np.zeros((self.walker_dim, self.walker_dim), dtype=complex)
        start = self.cell_index[(v, 0)]
        d = block.shape[0]
        out[start:start + d, start:start + d] = block
        return out

    def on_walker(self, j: int, w: np.ndarray, data: np.ndarray | None = None) -> np.ndarray:
        """kron(I, .., w at slot j, .., I, data) over the full space."""
        factors = [np.eye(self.walker_dim, dtype=complex)] * self.walker_count
        factors[j] = w
        factors.append(np.eye(self.data_dim, dtype=complex) if data is None else data)
        out = np.array([[1.0 + 0j]])
        for f in factors:
            out = np.kron(out, f)
        return out

    def on_walkers(self, ws: Mapping[int, np.ndarray]) -> np.ndarray:
        factors = [ws.get(j, np.eye(self.walker_dim, dtype=complex)) for j in range(self.walker_count)]
        factors.append(np.eye(self.data_dim, dtype=complex))
        out = np.array([[1.0 + 0j]])
        for f in factors:
            out = np.kron(out, f)
        return out

    def data_gate(self, positions: Sequence[int], gate: np.ndarray) -> np.ndarray:
        """2^n matrix of ``gate`` on registry positions, as a sum of Kronecker products."""
        n = self.n_qubits
        k = len(positions)
        out = np.zeros((self.data_dim, self.data_dim), dtype=complex)
        for row in range(1 << k):
            for col in range(1 << k):
                coeff = gate[row, col]
                if coeff == 0:
                    continue
                term = np.array([[coeff]], dtype=complex)
                for q in range(n):
                    if q in positions:
                        t = positions.index(q)
                        e = np.zeros((2, 2), dtype=complex)
                        e[(row >> (k - 1 - t)) & 1, (col >> (k - 1 - t)) & 1] = 1
                        term = np.kron(term, e)
                    else:
                        term = np.kron(term, np.eye(2))
                out += term
        return out

    def qubit_projector(self, position: int, value: int) -> np.ndarray:
        proj = np.zeros((2, 2), dtype=complex)
        proj[value, value] = 1
        return self.data_gate([position], proj)


def enumerate_basis(layout: DenseLayout) -> list[Label]:
    labels = []
    walker_tuples: list[tuple[Cell, ...]] = [()]
    for _ in range(layout.walker_count):
        walker_tuples = [w + (c,) for w in walker_tuples for c in layout.cells]
    for w in walker_tuples:
        for bits in range(layout.data_dim):
            labels.append((w, bits))
    return labels


def to_dense(op, layout: DenseLayout) -> np.ndarray:
    return op.to_matrix(layout)


def to_vector(state: SparseState, layout: DenseLayout) -> np.ndarray:
    vec = np.zeros(layout.dim, dtype=complex)
    for label, amp in state.amplitudes.items():
        vec[layout.index(label)] = amp
    return vec


def from_vector(graph: NetworkGraph, vec: np.ndarray, layout: DenseLayout) -> SparseState:
    basis = enumerate_basis(layout)
    return SparseState(graph, {basis[i]: vec[i] for i in np.flatnonzero(np.abs(vec) >= PRUNE_TOL)},
                       layout.walker_count)


# -- dumps -------------------------------------------------------------------


def dump_state(state: SparseState) -> list[dict]:
    """Records sorted by basis enumeration order."""
    cells = _walker_cells_sorted(state.graph)
    pos = {c: i for i, c in enumerate(cells)}

    def key(item):
        (walkers, bits), _ = item
        return tuple(pos[c] for c in walkers), bits

    return [
        {"walkers": [list(c) for c in walkers], "bits": state.bitstring(bits),
         "re": float(amp.real), "im": float(amp.imag)}
        for (walkers, bits), amp in sorted(state.amplitudes.items(), key=key)
    ]


def occupancy(state: SparseState) -> list[dict[str, float]]:
    """Per-walker probability of sitting at each node."""
    out = []
    for j in range(state.walker_count):
        acc: dict[int, float] = defaultdict(float)
        for cell, p in walker_distribution(state, j).items():
            acc[cell[0]] += p
        out.append({str(v): p for v, p in sorted(acc.items())})
    return out


def iter_bits(bits: int, positions: Iterable[int]) -> tuple[int, ...]:
    return tuple((bits >> p) & 1 for p in positions)
