"""Walker operators: shifts, coins, data-interacting coins and their products.

Every operator exposes ``apply(state)`` for sparse evolution and
``to_matrix(layout)`` which assembles the same map from Kronecker products
for dense cross-checks.  Local unitaries are validated when the operator is
built, never during application.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .exceptions import OperatorError
from .netgraph import NetworkGraph, PathSpec
from .statevec import DenseLayout, SparseState

__all__ = [
    "Composite",
    "DataControlled",
    "DataGate",
    "ExtendedCoin",
    "LocalGate",
    "MultiWalkerCoin",
    "NodeCoin",
    "Operator",
    "WalkerPermutation",
    "complement_matrix",
    "data_controlled_coin",
    "embedded_hadamard",
    "extended_coin",
    "extended_shift",
    "flip_flop_shift",
    "is_unitary",
    "local_gate",
    "multi_walker_coin",
    "node_coin",
    "path_coin",
    "step",
    "transposition",
]

UNITARY_TOL = 1e-12

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def is_unitary(m: np.ndarray, atol: float = UNITARY_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= atol)


def _checked(m, what: str, dim: int | None = None) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if dim is not None and m.shape != (dim, dim):
        raise OperatorError(f"{what}: expected a {dim}x{dim} matrix, got shape {m.shape}")
    if not is_unitary(m):
        raise OperatorError(f"{what} is not unitary")
    return m


def _columns(m: np.ndarray) -> list[list[tuple[int, complex]]]:
    """Sparse column lists: cols[c] = [(row, value), ...]."""
    cols: list[list[tuple[int, complex]]] = [[] for _ in range(m.shape[1])]
    for c, r in zip(*np.nonzero(m.T)):
        cols[c].append((int(r), complex(m[r, c])))
    return cols


def transposition(dim: int, c1: int, c2: int) -> np.ndarray:
    m = np.eye(dim, dtype=complex)
    if c1 != c2:
        m[[c1, c2]] = m[[c2, c1]]
    return m


def embedded_hadamard(dim: int, c1: int, c2: int) -> np.ndarray:
    """|c1> -> (|c1>+|c2>)/sqrt2, |c2> -> (|c1>-|c2>)/sqrt2, identity elsewhere."""
    if c1 == c2:
        raise OperatorError("Hadamard embedding needs two distinct coin values")
    m = np.eye(dim, dtype=complex)
    r = 1 / math.sqrt(2)
    m[c1, c1], m[c1, c2], m[c2, c1], m[c2, c2] = r, r, r, -r
    return m


def complement_matrix(width: int) -> np.ndarray:
    """Bitwise NOT on a ``width``-bit coin register."""
    dim = 1 << width
    m = np.zeros((dim, dim), dtype=complex)
    for c in range(dim):
        m[dim - 1 - c, c] = 1
    return m


# -- data gates --------------------------------------------------------------


@dataclass(frozen=True)
class DataGate:
    """A gate on named data qubits; ``matrix`` is big-endian in ``qubits`` order."""
    qubits: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if len(set(self.qubits)) != len(self.qubits):
            raise OperatorError("gate lists a qubit twice")
        object.__setattr__(self, "matrix",
                           _checked(self.matrix, f"gate on {self.qubits}", 1 << len(self.qubits)))

    def inverse(self) -> DataGate:
        return DataGate(self.qubits, self.matrix.conj().T)


def _as_gates(spec) -> tuple[DataGate, ...]:
    """Accept a DataGate, a (qubits, matrix) pair, or a list of either."""
    if isinstance(spec, DataGate):
        return (spec,)
    if isinstance(spec, tuple) and len(spec) == 2 and isinstance(spec[1], np.ndarray):
        qubits = (spec[0],) if isinstance(spec[0], str) else tuple(spec[0])
        return (DataGate(qubits, spec[1]),)
    out: list[DataGate] = []
    for item in spec:
        out.extend(_as_gates(item))
    return tuple(out)


class _GateKernel:
    """Applies a tensor product of gates to an integer bit register."""

    def __init__(self, g: NetworkGraph, gates: Sequence[DataGate]):
        n = len(g.registry)
        self.gates = tuple(gates)
        self.plan = []
        for gate in gates:
            shifts = []
            for q in gate.qubits:
                if q not in g.qubit_index:
                    raise OperatorError(f"unknown qubit {q!r}")
                shifts.append(n - 1 - g.qubit_index[q])
            mask = sum(1 << s for s in shifts)
            self.plan.append((shifts, mask, _columns(gate.matrix)))

    def __call__(self, bits: int) -> list[tuple[int, complex]]:
        terms = [(bits, 1.0 + 0j)]
        for shifts, mask, cols in self.plan:
            nxt = []
            k = len(shifts)
            for b, amp in terms:
                col = 0
                for s in shifts:
                    col = (col << 1) | ((b >> s) & 1)
                base = b & ~mask
                for row, val in cols[col]:
                    nb = base
                    for t, s in enumerate(shifts):
                        if (row >> (k - 1 - t)) & 1:
                            nb |= 1 << s
                    nxt.append((nb, amp * val))
            terms = nxt
        return terms

    def dense(self, layout: DenseLayout) -> np.ndarray:
        out = np.eye(layout.data_dim, dtype=complex)
        for gate in self.gates:
            pos = [layout.graph.qubit_index[q] for q in gate.qubits]
            out = layout.data_gate(pos, gate.matrix) @ out
        return out


# -- operator kinds ----------------------------------------------------------


class Operator:
    kind = "Operator"

    def apply(self, state: SparseState) -> SparseState:
        raise NotImplementedError

    def to_matrix(self, layout: DenseLayout) -> np.ndarray:
        raise NotImplementedError

    def inverse(self) -> Operator:
        raise NotImplementedError

    def walker_span(self) -> int:
        """1 + the largest walker index addressed (0 for data-only operators)."""
        return 0

    def qubits(self) -> frozenset[str]:
        return frozenset()

    def __call__(self, state: SparseState) -> SparseState:
        return self.apply(state)


def _map_walker(state: SparseState, j: int,
                fn: Callable[[tuple[int, int], int], Iterable[tuple[tuple[int, int], int, complex]]]
                ) -> SparseState:
    out: dict = defaultdict(complex)
    for (walkers, bits), amp in state.amplitudes.items():
        head, tail = walkers[:j], walkers[j + 1:]
        for cell, nbits, coeff in fn(walkers[j], bits):
            out[(head + (cell,) + tail, nbits)] += amp * coeff
    return state.evolve(out)


class WalkerPermutation(Operator):
    """Relabels arcs of the listed walkers through one table (cells absent are fixed)."""
    kind = "WalkerPermutation"

    def __init__(self, graph: NetworkGraph, table: Mapping[tuple[int, int], tuple[int, int]],
                 walkers: Sequence[int] = (0,), name: str = "permutation"):
        table = dict(table)
        if len(set(table.values())) != len(table) or set(table.values()) != set(table):
            raise OperatorError("walker permutation table is not a bijection")
        self.graph = graph
        self.table = table
        self.walkers = tuple(walkers)
        self.name = name

    def apply(self, state):
        t = self.table
        out = {}
        for (walkers, bits), amp in state.amplitudes.items():
            w = list(walkers)
            for j in self.walkers:
                w[j] = t.get(w[j], w[j])
            out[(tuple(w), bits)] = amp
        return state.evolve(out)

    def to_matrix(self, layout):
        p = np.zeros((layout.walker_dim, layout.walker_dim), dtype=complex)
        for cell in layout.cells:
            p[layout.cell_index[self.table.get(cell, cell)], layout.cell_index[cell]] = 1
        return layout.on_walkers({j: p for j in self.walkers})

    def inverse(self):
        return WalkerPermutation(self.graph, {v: k for k, v in self.table.items()}, self.walkers,
                                 self.name + "^-1")

    def walker_span(self):
        return max(self.walkers) + 1 if self.walkers else 0


class NodeCoin(Operator):
    """sum_v |v><v| (x) C_v on one walker; nodes without an entry get identity."""
    kind = "NodeCoin"

    def __init__(self, graph: NetworkGraph, walker_index: int, coins: Mapping[int, np.ndarray],
                 name: str = "coin", _validated: bool = False):
        self.graph = graph
        self.walker_index = walker_index
        self.name = name
        self.coins = {}
        for v, m in coins.items():
            if not graph.has_node(v):
                raise OperatorError(f"coin for unknown node {v}")
            self.coins[v] = np.asarray(m, dtype=complex) if _validated else \
                _checked(m, f"coin at node {v}", graph.coin_dim(v))
        self._cols = {v: _columns(m) for v, m in self.coins.items()}

    def _local(self, cell, bits):
        v, c = cell
        cols = self._cols.get(v)
        if cols is None:
            return ((cell, bits, 1.0),)
        return [((v, r), bits, val) for r, val in cols[c]]

    def apply(self, state):
        return _map_walker(state, self.walker_index, self._local)

    def _walker_matrix(self, layout):
        w = np.zeros((layout.walker_dim, layout.walker_dim), dtype=complex)
        for v in layout.graph.nodes:
            w += layout.node_block(v, self.coins.get(v, np.eye(layout.graph.coin_dim(v))))
        return w

    def to_matrix(self, layout):
        return layout.on_walker(self.walker_index, self._walker_matrix(layout))

    def inverse(self):
        return NodeCoin(self.graph, self.walker_index,
                        {v: m.conj().T for v, m in self.coins.items()}, self.name + "^-1", True)

    def walker_span(self):
        return self.walker_index + 1


class ExtendedCoin(NodeCoin):
    """sum_v |v><v| (x) C_v (x) U_v: the data gate K_v fires where the walker sits."""
    kind = "ExtendedCoin"

    def __init__(self, graph, walker_index, coins, interactions: Mapping[int, object],
                 name: str = "extended coin", _validated: bool = False):
        super().__init__(graph, walker_index, coins, name, _validated)
        self.interactions: dict[int, tuple[DataGate, ...]] = {}
        for v, spec in interactions.items():
            gates = _as_gates(spec)
            if not graph.has_node(v):
                raise OperatorError(f"interaction at unknown node {v}")
            seen: set[str] = set()
            for gate in gates:
                for q in gate.qubits:
                    if q not in graph.qubit_owner:
                        raise OperatorError(f"unknown qubit {q!r}")
                    if graph.qubit_owner[q] != v:
                        raise OperatorError(f"K_{v} touches qubit {q!r} owned by node {graph.qubit_owner[q]}")
                    if q in seen:
                        raise OperatorError(f"K_{v} addresses qubit {q!r} twice")
                    seen.add(q)
            if gates:
                self.interactions[v] = gates
        self._kernels = {v: _GateKernel(graph, gates) for v, gates in self.interactions.items()}

    def _local(self, cell, bits):
        coin_terms = super()._local(cell, bits)
        kernel = self._kernels.get(cell[0])
        if kernel is None:
            return coin_terms
        data_terms = kernel(bits)
        return [(c, nb, a * b) for c, _, a in coin_terms for nb, b in data_terms]

    def to_matrix(self, layout):
        g = layout.graph
        total = np.zeros((layout.dim, layout.dim), dtype=complex)
        for v in g.nodes:
            block = layout.node_block(v, self.coins.get(v, np.eye(g.coin_dim(v))))
            kernel = self._kernels.get(v)
            data = kernel.dense(layout) if kernel else None
            total += layout.on_walker(self.walker_index, block, data)
        return total

    def inverse(self):
        return ExtendedCoin(self.graph, self.walker_index,
                            {v: m.conj().T for v, m in self.coins.items()},
                            {v: [gt.inverse() for gt in gates] for v, gates in self.interactions.items()},
                            self.name + "^-1", True)

    def qubits(self):
        return frozenset(q for gates in self.interactions.values() for gt in gates for q in gt.qubits)


class DataControlled(Operator):
    """U_{vq}: on terms with a listed walker at ``node``, apply U_s to its coin (s = bit of q)."""
    kind = "DataControlled"

    def __init__(self, graph: NetworkGraph, walkers: Sequence[int], node: int, qubit: str,
                 u0: np.ndarray, u1: np.ndarray, name: str = "data-controlled coin"):
        if qubit not in graph.qubit_owner or graph.qubit_owner[qubit] != node:
            raise OperatorError(f"control qubit {qubit!r} is not registered at node {node}")
        dim = graph.coin_dim(node)
        self.graph = graph
        self.walkers = tuple(walkers)
        self.node = node
        self.qubit = qubit
        self.u = (_checked(u0, "U0", dim), _checked(u1, "U1", dim))
        self._cols = tuple(_columns(m) for m in self.u)
        self._shift = len(graph.registry) - 1 - graph.qubit_index[qubit]
        self.name = name

    def apply(self, state):
        for j in self.walkers:
            def local(cell, bits):
                v, c = cell
                if v != self.node:
                    return ((cell, bits, 1.0),)
                cols = self._cols[(bits >> self._shift) & 1]
                return [((v, r), bits, val) for r, val in cols[c]]
            state = _map_walker(state, j, local)
        return state

    def to_matrix(self, layout):
        pos = layout.graph.qubit_index[self.qubit]
        out = np.eye(layout.dim, dtype=complex)
        rest = np.eye(layout.walker_dim) - layout.node_projector(self.node)
        for j in self.walkers:
            factor = sum(
                layout.on_walker(j, layout.node_block(self.node, u) + rest, layout.qubit_projector(pos, s))
                for s, u in enumerate(self.u)
            )
            out = factor @ out
        return out

    def inverse(self):
        return DataControlled(self.graph, self.walkers, self.node, self.qubit,
                              self.u[0].conj().T, self.u[1].conj().T, self.name + "^-1")

    def walker_span(self):
        return max(self.walkers) + 1

    def qubits(self):
        return frozenset({self.qubit})


class LocalGate(Operator):
    """Gates on data qubits that do not involve any walker."""
    kind = "LocalGate"

    def __init__(self, graph: NetworkGraph, gates, name: str = "local gate"):
        self.graph = graph
        self.gates = _as_gates(gates)
        self._kernel = _GateKernel(graph, self.gates)
        self.name = name

    def apply(self, state):
        out: dict = defaultdict(complex)
        for (walkers, bits), amp in state.amplitudes.items():
            for nb, coeff in self._kernel(bits):
                out[(walkers, nb)] += amp * coeff
        return state.evolve(out)

    def to_matrix(self, layout):
        data = self._kernel.dense(layout)
        return np.kron(np.eye(layout.walker_dim ** layout.walker_count), data)

    def inverse(self):
        return LocalGate(self.graph, [g.inverse() for g in reversed(self.gates)], self.name + "^-1")

    def qubits(self):
        return frozenset(q for gt in self.gates for q in gt.qubits)


class MultiWalkerCoin(Operator):
    """Tensor product of single-walker coins acting on distinct walkers."""
    kind = "MultiWalkerCoin"

    def __init__(self, factors: Sequence[NodeCoin], check_disjoint: bool = True):
        walkers = [f.walker_index for f in factors]
        if len(set(walkers)) != len(walkers):
            raise OperatorError("each walker needs exactly one coin factor")
        if check_disjoint:
            seen: set[str] = set()
            for f in factors:
                overlap = seen & f.qubits()
                if overlap:
                    raise OperatorError(f"walkers share interaction qubits {sorted(overlap)}")
                seen |= f.qubits()
        self.factors = tuple(factors)
        self.name = "multi-walker coin"

    def apply(self, state):
        out: dict = defaultdict(complex)
        for (walkers, bits), amp in state.amplitudes.items():
            terms = [(walkers, bits, amp)]
            for f in self.factors:
                j = f.walker_index
                terms = [(w[:j] + (cell,) + w[j + 1:], nb, a * coeff)
                         for w, b, a in terms for cell, nb, coeff in f._local(w[j], b)]
            for w, b, a in terms:
                out[(w, b)] += a
        return state.evolve(out)

    def to_matrix(self, layout):
        out = np.eye(layout.dim, dtype=complex)
        for f in self.factors:
            out = f.to_matrix(layout) @ out
        return out

    def inverse(self):
        return MultiWalkerCoin([f.inverse() for f in self.factors], check_disjoint=False)

    def walker_span(self):
        return max((f.walker_span() for f in self.factors), default=0)

    def qubits(self):
        return frozenset().union(*(f.qubits() for f in self.factors)) if self.factors else frozenset()


class Composite(Operator):
    """Ordered product; ``ops[0]`` is applied first."""
    kind = "Composite"

    def __init__(self, ops: Sequence[Operator], name: str = "composite"):
        self.ops = tuple(ops)
        self.name = name

    def apply(self, state):
        for op in self.ops:
            state = op.apply(state)
        return state

    def to_matrix(self, layout):
        out = np.eye(layout.dim, dtype=complex)
        for op in self.ops:
            out = op.to_matrix(layout) @ out
        return out

    def inverse(self):
        return Composite([op.inverse() for op in reversed(self.ops)], self.name + "^-1")

    def walker_span(self):
        return max((op.walker_span() for op in self.ops), default=0)

    def qubits(self):
        return frozenset().union(*(op.qubits() for op in self.ops)) if self.ops else frozenset()


# -- constructors ------------------------------------------------------------


def _require_augmented(g: NetworkGraph) -> None:
    if not g.self_loops_added:
        raise OperatorError("walker operators need the self-loop augmented graph")


def _flip_flop_table(g: NetworkGraph) -> dict:
    return g.arc_reversal


def flip_flop_shift(g: NetworkGraph, walker_index: int = 0) -> WalkerPermutation:
    """|v, c_vu> -> |u, c_uv>; self-loops and non-arc register values stay put."""
    _require_augmented(g)
    return WalkerPermutation(g, _flip_flop_table(g), (walker_index,), "flip-flop shift")


def extended_shift(g: NetworkGraph, walker_count: int = 1) -> WalkerPermutation:
    """Flip-flop on every walker, identity on data."""
    _require_augmented(g)
    return WalkerPermutation(g, _flip_flop_table(g), tuple(range(walker_count)), "extended shift")


def node_coin(g: NetworkGraph, walker_index: int, coins: Mapping[int, np.ndarray]) -> NodeCoin:
    _require_augmented(g)
    return NodeCoin(g, walker_index, coins)


def extended_coin(g: NetworkGraph, walker_index: int, coins: Mapping[int, np.ndarray],
                  interactions: Mapping[int, object]) -> ExtendedCoin:
    _require_augmented(g)
    return ExtendedCoin(g, walker_index, coins, interactions)


def data_controlled_coin(g: NetworkGraph, walker_index: int | Sequence[int], v: int, q: str,
                         u0: np.ndarray, u1: np.ndarray) -> DataControlled:
    _require_augmented(g)
    walkers = (walker_index,) if isinstance(walker_index, int) else tuple(walker_index)
    return DataControlled(g, walkers, v, q, u0, u1)


def local_gate(g: NetworkGraph, qubits: str | Sequence[str], matrix: np.ndarray) -> LocalGate:
    qubits = (qubits,) if isinstance(qubits, str) else tuple(qubits)
    return LocalGate(g, [DataGate(qubits, matrix)])


def path_coin_matrices(g: NetworkGraph, p: PathSpec) -> dict[int, np.ndarray]:
    return {v: transposition(g.coin_dim(v), c1, c2) for v, (c1, c2) in p.transpositions(g).items()}


def path_coin(g: NetworkGraph, p: PathSpec, walker_index: int = 0) -> NodeCoin:
    """Transposition coins steering a walker along ``p``.

    At the source the parked value c̄_A is swapped with the first path arc,
    interior nodes swap their two path arcs, and the target swaps its
    incoming arc with its self-loop.
    """
    _require_augmented(g)
    p.validate(g)
    return NodeCoin(g, walker_index, path_coin_matrices(g, p), "path coin", _validated=True)


def multi_walker_coin(per_walker: Sequence[NodeCoin]) -> Operator:
    if len(per_walker) == 1:
        return per_walker[0]
    return MultiWalkerCoin(per_walker)


def step(state: SparseState, coin: Operator, shift: Operator) -> SparseState:
    """One walk step: shift after coin."""
    return shift.apply(coin.apply(state))

