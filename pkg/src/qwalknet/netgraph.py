"""Network topology, coin labelling and routing structures.

A network is an undirected simple graph whose nodes hold ordered lists of
data qubits.  The walker moves on the augmented graph, where every node also
carries a self-loop.  Coin degrees of freedom at ``v`` index the ascending
list ``sorted(neighbors(v) | {v})``.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .exceptions import TopologyError

__all__ = [
    "CoinLabel",
    "NetworkGraph",
    "PathSpec",
    "TreeSpec",
    "augment_self_loops",
    "chain_topology",
    "coin_dof",
    "complement",
    "dump_topology",
    "edge_disjoint_shortest_paths",
    "grid_topology",
    "hop_distance",
    "load_topology",
    "parse_topology",
    "spanning_tree",
    "shortest_path",
    "star_topology",
    "topology_to_dict",
]


@dataclass(frozen=True, order=True)
class CoinLabel:
    value: int
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("coin width must be >= 1")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"coin value {self.value} does not fit in {self.width} bits")

    def bits(self) -> str:
        return format(self.value, f"0{self.width}b")


def complement(c: CoinLabel) -> CoinLabel:
    """Bitwise negation of a coin label within its own width."""
    return CoinLabel(((1 << c.width) - 1) - c.value, c.width)


def _normalize_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class NetworkGraph:
    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int]]
    data_qubits: Mapping[int, tuple[str, ...]] = field(default_factory=dict)
    self_loops_added: bool = False

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes))
        if len(set(nodes)) != len(nodes):
            raise TopologyError("duplicate node id")
        for n in nodes:
            if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                raise TopologyError(f"node ids must be non-negative integers, got {n!r}")
        node_set = set(nodes)
        edges = set()
        for u, v in self.edges:
            if u == v:
                raise TopologyError("self-loop in input; self-loops are added by augmentation")
            if u not in node_set or v not in node_set:
                raise TopologyError(f"edge ({u}, {v}) references an unknown node")
            edges.add(_normalize_edge(u, v))
        qubits = {n: tuple(self.data_qubits.get(n, ())) for n in nodes}
        extra = set(self.data_qubits) - node_set
        if extra:
            raise TopologyError(f"qubits registered at unknown nodes {sorted(extra)}")
        seen: set[str] = set()
        for n in nodes:
            for q in qubits[n]:
                if q in seen:
                    raise TopologyError(f"duplicate qubit name {q!r}")
                seen.add(q)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", frozenset(edges))
        object.__setattr__(self, "data_qubits", qubits)

    # -- neighbourhoods -----------------------------------------------------

    @cached_property
    def _adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {n: tuple(sorted(nb)) for n, nb in adj.items()}

    def neighbors(self, v: int) -> tuple[int, ...]:
        """delta(v): real neighbours, ascending, without the self-loop."""
        self._require_node(v)
        return self._adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    @cached_property
    def _arc_targets(self) -> dict[int, tuple[int, ...]]:
        if not self.self_loops_added:
            return self._adjacency
        return {n: tuple(sorted(nb + (n,))) for n, nb in self._adjacency.items()}

    def arc_targets(self, v: int) -> tuple[int, ...]:
        """Ascending targets of the arcs leaving ``v`` in the walker graph.

        Includes ``v`` itself once the graph has been augmented.
        """
        self._require_node(v)
        return self._arc_targets[v]

    @cached_property
    def arc_reversal(self) -> dict[tuple[int, int], tuple[int, int]]:
        """(v, c_vu) -> (u, c_uv) for every arc between distinct nodes."""
        out = {}
        for v, targets in self._arc_targets.items():
            for c, u in enumerate(targets):
                if u != v:
                    out[(v, c)] = (u, self._arc_targets[u].index(v))
        return out

    def augmented_degree(self, v: int) -> int:
        return self.degree(v) + 1

    def coin_width(self, v: int) -> int:
        return max(1, math.ceil(math.log2(self.augmented_degree(v))))

    def coin_dim(self, v: int) -> int:
        return 1 << self.coin_width(v)

    def has_node(self, v: int) -> bool:
        return v in self._node_set

    @cached_property
    def _node_set(self) -> frozenset[int]:
        return frozenset(self.nodes)

    def _require_node(self, v: int) -> None:
        if v not in self._node_set:
            raise TopologyError(f"unknown node {v!r}")

    @property
    def arc_count(self) -> int:
        return 2 * len(self.edges) + (len(self.nodes) if self.self_loops_added else 0)

    # -- qubit registry -----------------------------------------------------

    @cached_property
    def registry(self) -> tuple[str, ...]:
        """Global qubit order: nodes ascending, qubits in declared order."""
        return tuple(q for n in self.nodes for q in self.data_qubits[n])

    @cached_property
    def qubit_index(self) -> dict[str, int]:
        return {q: i for i, q in enumerate(self.registry)}

    @cached_property
    def qubit_owner(self) -> dict[str, int]:
        return {q: n for n in self.nodes for q in self.data_qubits[n]}

    def owner(self, qubit: str) -> int:
        try:
            return self.qubit_owner[qubit]
        except KeyError:
            raise TopologyError(f"unknown qubit {qubit!r}") from None

    def subgraph(self, edges: Iterable[tuple[int, int]]) -> NetworkGraph:
        """Same nodes and qubits, restricted edge set (augmentation preserved)."""
        return NetworkGraph(self.nodes, frozenset(edges), self.data_qubits, self.self_loops_added)


def augment_self_loops(g: NetworkGraph) -> NetworkGraph:
    if g.self_loops_added:
        raise TopologyError("graph already carries self-loops")
    return NetworkGraph(g.nodes, g.edges, g.data_qubits, True)


def _require_augmented(g: NetworkGraph) -> None:
    if not g.self_loops_added:
        raise TopologyError("operation needs the self-loop augmented graph")


def coin_dof(g: NetworkGraph, v: int, u: int) -> CoinLabel:
    """Coin label of arc (v, u): rank of ``u`` among the augmented neighbours of ``v``."""
    g._require_node(v)
    g._require_node(u)
    if u == v:
        _require_augmented(g)
    targets = g.arc_targets(v)
    if u not in targets:
        raise TopologyError(f"({v}, {u}) is not an arc")
    return CoinLabel(targets.index(u), g.coin_width(v))


def arc_target(g: NetworkGraph, v: int, c: int) -> int | None:
    """Inverse of coin_dof; None when ``c`` names no arc."""
    targets = g.arc_targets(v)
    return targets[c] if 0 <= c < len(targets) else None


def hop_distance(g: NetworkGraph, u: int, v: int) -> int | None:
    """BFS hop count, or None when ``v`` is unreachable from ``u``."""
    g._require_node(u)
    g._require_node(v)
    return _bfs_distances(g, u).get(v)


def _bfs_distances(g: NetworkGraph, source: int, edges: set | None = None) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in g.neighbors(x):
            if y in dist:
                continue
            if edges is not None and _normalize_edge(x, y) not in edges:
                continue
            dist[y] = dist[x] + 1
            queue.append(y)
    return dist


# -- paths and trees ---------------------------------------------------------


@dataclass(frozen=True)
class PathSpec:
    nodes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) < 2:
            raise TopologyError("a path needs at least two nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise TopologyError(f"path {self.nodes} repeats a node")

    @classmethod
    def from_nodes(cls, g: NetworkGraph, nodes: Sequence[int]) -> PathSpec:
        p = cls(tuple(nodes))
        p.validate(g)
        return p

    def validate(self, g: NetworkGraph) -> None:
        for x, y in zip(self.nodes, self.nodes[1:]):
            g._require_node(x)
            g._require_node(y)
            if y not in g.neighbors(x):
                raise TopologyError(f"path step ({x}, {y}) is not an edge")

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def target(self) -> int:
        return self.nodes[-1]

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    @property
    def interior(self) -> tuple[int, ...]:
        return self.nodes[1:-1]

    def edge_list(self) -> list[tuple[int, int]]:
        return [_normalize_edge(x, y) for x, y in zip(self.nodes, self.nodes[1:])]

    def reversed(self) -> PathSpec:
        return PathSpec(self.nodes[::-1])

    def entry_dof(self, g: NetworkGraph) -> CoinLabel:
        """c_A^p: the arc leaving the source along the path."""
        return coin_dof(g, self.nodes[0], self.nodes[1])

    def exit_dof(self, g: NetworkGraph) -> CoinLabel:
        """c_B^p: the arc from the target back to its predecessor."""
        return coin_dof(g, self.nodes[-1], self.nodes[-2])

    def transpositions(self, g: NetworkGraph) -> dict[int, tuple[int, int]]:
        """Per-node (c1, c2) pairs swapped by the path coin."""
        _require_augmented(g)
        a, b = self.source, self.target
        pairs = {
            a: (complement(coin_dof(g, a, a)).value, self.entry_dof(g).value),
            b: (self.exit_dof(g).value, coin_dof(g, b, b).value),
        }
        for prev, v, nxt in zip(self.nodes, self.nodes[1:], self.nodes[2:]):
            pairs[v] = (coin_dof(g, v, prev).value, coin_dof(g, v, nxt).value)
        return pairs


@dataclass(frozen=True)
class TreeSpec:
    root: int
    parent: Mapping[int, int | None]

    def __post_init__(self):
        parent = dict(self.parent)
        parent[self.root] = None
        for v, p in parent.items():
            if v != self.root and p is None:
                raise TopologyError(f"node {v} has no parent")
            if p is not None and p not in parent:
                raise TopologyError(f"parent {p} of {v} is outside the tree")
        for v in parent:
            seen = set()
            x = v
            while x is not None:
                if x in seen:
                    raise TopologyError("parent map contains a cycle")
                seen.add(x)
                x = parent[x]
        object.__setattr__(self, "parent", parent)

    @classmethod
    def from_parents(cls, g: NetworkGraph, root: int, parents: Mapping[int, int]) -> TreeSpec:
        t = cls(root, {int(k): (None if v is None else int(v)) for k, v in parents.items()})
        for v, p in t.parent.items():
            g._require_node(v)
            if p is not None and p not in g.neighbors(v):
                raise TopologyError(f"tree edge ({p}, {v}) is not a network edge")
        return t

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        ch: dict[int, list[int]] = {v: [] for v in self.parent}
        for v, p in self.parent.items():
            if p is not None:
                ch[p].append(v)
        return {v: tuple(sorted(c)) for v, c in ch.items()}

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(sorted(self.parent))

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        if len(self.parent) == 1:
            return ()
        return tuple(v for v in self.nodes if not self.children[v])

    def depth(self, v: int) -> int:
        d = 0
        while self.parent[v] is not None:
            v = self.parent[v]
            d += 1
        return d

    def root_path(self, v: int) -> tuple[int, ...]:
        out = [v]
        while self.parent[out[-1]] is not None:
            out.append(self.parent[out[-1]])
        return tuple(reversed(out))

    def paths(self) -> list[PathSpec]:
        """Root-to-leaf paths, ordered by leaf id."""
        return [PathSpec(self.root_path(leaf)) for leaf in self.leaves]

    @cached_property
    def walker_counts(self) -> dict[int, int]:
        """W_v: number of root-to-leaf paths through v (0 off every path)."""
        w = {v: 0 for v in self.parent}
        for leaf in self.leaves:
            for v in self.root_path(leaf):
                w[v] += 1
        return w

    @property
    def height(self) -> int:
        return max((self.depth(v) for v in self.parent), default=0)


def _lexmin_shortest_path(g: NetworkGraph, a: int, b: int, edges: set) -> tuple[int, ...] | None:
    dist = _bfs_distances(g, b, edges)
    if a not in dist:
        return None
    path = [a]
    while path[-1] != b:
        x = path[-1]
        path.append(min(
            y for y in g.neighbors(x)
            if _normalize_edge(x, y) in edges and dist.get(y) == dist[x] - 1
        ))
    return tuple(path)


def shortest_path(g: NetworkGraph, a: int, b: int,
                  avoid: Iterable[tuple[int, int]] = ()) -> PathSpec | None:
    """Lexicographically smallest shortest path from ``a`` to ``b`` avoiding the given edges."""
    g._require_node(a)
    g._require_node(b)
    residual = set(g.edges) - {_normalize_edge(*e) for e in avoid}
    nodes = _lexmin_shortest_path(g, a, b, residual)
    return PathSpec(nodes) if nodes is not None else None


def edge_disjoint_shortest_paths(g: NetworkGraph, a: int, b: int, k: int) -> list[PathSpec]:
    """Greedy edge-disjoint routes: take a shortest path, delete its edges, repeat.

    Ties are broken by the lexicographically smallest node sequence.
    """
    g._require_node(a)
    g._require_node(b)
    if a == b:
        raise TopologyError("endpoints must differ")
    residual = set(g.edges)
    paths: list[PathSpec] = []
    while len(paths) < k:
        nodes = _lexmin_shortest_path(g, a, b, residual)
        if nodes is None:
            break
        p = PathSpec(nodes)
        residual.difference_update(p.edge_list())
        paths.append(p)
    return paths


def spanning_tree(g: NetworkGraph, root: int) -> TreeSpec:
    """BFS tree visiting neighbours in ascending order."""
    g._require_node(root)
    parent: dict[int, int | None] = {root: None}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in g.neighbors(x):
            if y not in parent:
                parent[y] = x
                queue.append(y)
    if len(parent) != len(g.nodes):
        raise TopologyError("graph is disconnected; no spanning tree")
    return TreeSpec(root, parent)


# -- topology files ----------------------------------------------------------


def parse_topology(data: Mapping) -> NetworkGraph:
    if not isinstance(data, Mapping) or "nodes" not in data or "edges" not in data:
        raise TopologyError("topology needs top-level 'nodes' and 'edges'")
    nodes: list[int] = []
    qubits: dict[int, tuple[str, ...]] = {}
    for i, entry in enumerate(data["nodes"]):
        if not isinstance(entry, Mapping) or "id" not in entry:
            raise TopologyError(f"nodes[{i}] must be an object with an 'id'")
        nid = entry["id"]
        if not isinstance(nid, int) or isinstance(nid, bool):
            raise TopologyError(f"nodes[{i}].id must be an integer")
        if nid in qubits:
            raise TopologyError(f"duplicate node id {nid}")
        names = entry.get("qubits", [])
        if not all(isinstance(q, str) for q in names):
            raise TopologyError(f"nodes[{i}].qubits must be strings")
        nodes.append(nid)
        qubits[nid] = tuple(names)
    seen: set[tuple[int, int]] = set()
    for i, e in enumerate(data["edges"]):
        if not isinstance(e, Sequence) or len(e) != 2:
            raise TopologyError(f"edges[{i}] must be a pair")
        u, v = e
        if u == v:
            raise TopologyError("self-loop in input; self-loops are added by augmentation")
        key = _normalize_edge(u, v)
        if key in seen:
            raise TopologyError(f"duplicate edge {list(e)}")
        seen.add(key)
    return NetworkGraph(tuple(nodes), frozenset(seen), qubits)


def load_topology(file_path: str | Path) -> NetworkGraph:
    try:
        with open(file_path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise TopologyError(f"{file_path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise TopologyError(f"{file_path}: parse failure: {exc}") from exc
    return parse_topology(data)


def topology_to_dict(g: NetworkGraph) -> dict:
    return {
        "nodes": [{"id": n, "qubits": list(g.data_qubits[n])} for n in g.nodes],
        "edges": [list(e) for e in sorted(g.edges)],
    }


def dump_topology(g: NetworkGraph, file_path: str | Path) -> None:
    with open(file_path, "w") as fh:
        json.dump(topology_to_dict(g), fh, indent=1)
        fh.write("\n")


def _default_qubits(nodes: Iterable[int], per_node: int) -> dict[int, tuple[str, ...]]:
    return {n: tuple(f"q{n}_{i}" for i in range(per_node)) for n in nodes}


def _check_positive(**params: int) -> None:
    for name, value in params.items():
        if value < 1:
            raise TopologyError(f"{name} must be positive, got {value}")


def grid_topology(rows: int, cols: int, qubits_per_node: int = 1) -> NetworkGraph:
    """rows x cols lattice; node ``r * cols + c`` sits at row r, column c."""
    _check_positive(rows=rows, cols=cols)
    edges = set()
    for r in range(rows):
        for c in range(cols):
            n = r * cols + c
            if c + 1 < cols:
                edges.add((n, n + 1))
            if r + 1 < rows:
                edges.add((n, n + cols))
    nodes = tuple(range(rows * cols))
    return NetworkGraph(nodes, frozenset(edges), _default_qubits(nodes, qubits_per_node))


def chain_topology(n: int, qubits_per_node: int = 2) -> NetworkGraph:
    _check_positive(n=n)
    nodes = tuple(range(n))
    edges = frozenset((i, i + 1) for i in range(n - 1))
    return NetworkGraph(nodes, edges, _default_qubits(nodes, qubits_per_node))


def star_topology(n: int, qubits_per_node: int = 1) -> NetworkGraph:
    """Centre 0 joined to leaves 1..n-1."""
    _check_positive(n=n)
    nodes = tuple(range(n))
    edges = frozenset((0, i) for i in range(1, n))
    return NetworkGraph(nodes, edges, _default_qubits(nodes, qubits_per_node))
