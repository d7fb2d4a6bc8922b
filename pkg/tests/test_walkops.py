from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GRID_PATH, R
from qwalknet.exceptions import OperatorError
from qwalknet.netgraph import PathSpec, augment_self_loops, chain_topology, edge_disjoint_shortest_paths
from qwalknet.statevec import DenseLayout, SparseState, init_product_state, to_vector
from qwalknet.walkops import (
    Composite,
    MultiWalkerCoin,
    complement_matrix,
    data_controlled_coin,
    embedded_hadamard,
    extended_coin,
    extended_shift,
    flip_flop_shift,
    is_unitary,
    local_gate,
    multi_walker_coin,
    node_coin,
    path_coin,
    step,
    transposition,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)


def _rank(g, v, u):
    return sorted(set(g.neighbors(v)) | {v}).index(u)


def _random_state(g, rng, walkers=1, terms=10):
    cells = [(v, c) for v in g.nodes for c in range(g.coin_dim(v))]
    amps = {}
    for _ in range(terms):
        w = tuple(cells[rng.integers(len(cells))] for _ in range(walkers))
        amps[(w, int(rng.integers(1 << len(g.registry))))] = complex(rng.normal(), rng.normal())
    return SparseState(g, amps, walkers).normalized()


def _random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def small():
    return augment_self_loops(chain_topology(3, 1))  # coin dims 2, 4, 2; one qubit per node


def test_flip_flop_matches_rank_oracle(grid5):
    s = flip_flop_shift(grid5)
    for v in grid5.nodes:
        for u in grid5.neighbors(v):
            assert s.table[(v, _rank(grid5, v, u))] == (u, _rank(grid5, u, v))
    st0 = init_product_state(grid5, [(6, 2)])  # self-loop of node 6
    assert s.apply(st0).allclose(st0)
    parked = init_product_state(grid5, [(6, 5)])  # c̄_A names no arc
    assert s.apply(parked).allclose(parked)


def test_shift_is_involution(grid5, rng):
    s = extended_shift(grid5, 2)
    psi = _random_state(grid5, rng, walkers=2, terms=30)
    out = s.apply(s.apply(psi))
    assert set(out.amplitudes) == set(psi.amplitudes)
    assert all(abs(out.amplitudes[k] - a) <= 1e-12 for k, a in psi.amplitudes.items())


def test_extended_shift_moves_both_walkers(grid5):
    psi = init_product_state(grid5, [(6, 3), (12, 4)])  # 6->7 and 12->17
    out = extended_shift(grid5, 2).apply(psi)
    ((walkers, bits), _), = out.amplitudes.items()
    assert walkers == ((7, _rank(grid5, 7, 6)), (17, _rank(grid5, 17, 12))) and bits == 0


def test_node_coin_examples(small, grid5):
    c = node_coin(small, 0, {0: X})
    out = c.apply(init_product_state(small, [(0, 0)]))
    assert set(out.amplitudes) == {(((0, 1),), 0)}
    h = node_coin(grid5, 0, {6: embedded_hadamard(8, 2, 5)})
    out = h.apply(init_product_state(grid5, [(6, 2)]))
    assert math.isclose(abs(out.amplitudes[(((6, 2),), 0)]), R)
    assert math.isclose(abs(out.amplitudes[(((6, 5),), 0)]), R)
    ident = node_coin(small, 0, {})
    psi = init_product_state(small, [(1, 3)], "101")
    assert ident.apply(psi).allclose(psi)
    with pytest.raises(OperatorError):
        node_coin(small, 0, {1: np.ones((4, 4))})
    with pytest.raises(OperatorError):
        node_coin(small, 0, {1: np.eye(2)})  # wrong block size


def test_extended_coin_fires_only_at_owner(grid5):
    k = extended_coin(grid5, 0, {}, {18: ("q18_0", X)})
    at_b = init_product_state(grid5, [(18, 2)])
    at_a = init_product_state(grid5, [(6, 2)])
    pos = at_b.bit_position("q18_0")
    assert set(k.apply(at_b).amplitudes) == {(((18, 2),), 1 << pos)}
    assert k.apply(at_a).allclose(at_a)
    with pytest.raises(OperatorError, match="owned by"):
        extended_coin(grid5, 0, {}, {18: ("q6_0", X)})
    with pytest.raises(OperatorError):
        extended_coin(grid5, 0, {}, {18: ("q18_0", 2 * X)})


def test_extended_coin_identity_interaction_equals_node_coin(small, rng):
    coins = {1: _random_unitary(rng, 4), 2: _random_unitary(rng, 2)}
    a = node_coin(small, 0, coins)
    b = extended_coin(small, 0, coins, {1: ("q1_0", np.eye(2)), 0: ("q0_0", np.eye(2))})
    for _ in range(5):
        psi = _random_state(small, rng)
        assert a.apply(psi).allclose(b.apply(psi))


def test_data_controlled_entangles_coin(grid5):
    alpha, beta = 0.6, 0.8
    op = data_controlled_coin(grid5, 0, 6, "q6_0", np.eye(8), complement_matrix(3))
    psi = init_product_state(grid5, [(6, 2)], qubit_superpositions={"q6_0": (alpha, beta)})
    out = op.apply(psi)
    pos = psi.bit_position("q6_0")
    assert math.isclose(out.amplitudes[(((6, 2),), 0)].real, alpha)
    assert math.isclose(out.amplitudes[(((6, 5),), 1 << pos)].real, beta)
    assert len(out) == 2
    away = init_product_state(grid5, [(7, 0)], qubit_superpositions={"q6_0": (alpha, beta)})
    assert op.apply(away).allclose(away)
    ident = data_controlled_coin(grid5, 0, 6, "q6_0", np.eye(8), np.eye(8))
    assert ident.apply(psi).allclose(psi)
    with pytest.raises(OperatorError):
        data_controlled_coin(grid5, 0, 6, "q7_0", np.eye(8), np.eye(8))


def test_path_coin_transpositions(grid5, rng):
    p = PathSpec.from_nodes(grid5, GRID_PATH)
    c = path_coin(grid5, p)
    # interior node 7 maps its arc from 6 to its arc towards 12
    out = c.apply(init_product_state(grid5, [(7, _rank(grid5, 7, 6))]))
    assert set(out.amplitudes) == {(((7, _rank(grid5, 7, 12)),), 0)}
    # source swaps c̄_A with the first path arc
    out = c.apply(init_product_state(grid5, [(6, 3)]))
    assert set(out.amplitudes) == {(((6, 5),), 0)}
    psi = _random_state(grid5, rng, terms=40)
    assert c.apply(c.apply(psi)).allclose(psi)


def test_walk_reaches_target(grid5):
    p = PathSpec.from_nodes(grid5, GRID_PATH)
    coin, shift = path_coin(grid5, p), flip_flop_shift(grid5)
    psi = init_product_state(grid5, [(6, 5)])
    visited = []
    for _ in range(p.hops):
        psi = step(psi, coin, shift)
        ((w, _), _), = psi.amplitudes.items()
        visited.append(w[0][0])
    assert visited == list(GRID_PATH[1:])
    psi = coin.apply(psi)
    assert set(psi.amplitudes) == {(((18, 2),), 0)}


def test_multi_walker_coin_is_separable(grid5, rng):
    paths = edge_disjoint_shortest_paths(grid5, 6, 18, 2)
    coins = [path_coin(grid5, p, j) for j, p in enumerate(paths)]
    joint = multi_walker_coin(coins)
    psi = _random_state(grid5, rng, walkers=2, terms=25)
    assert joint.apply(psi).allclose(coins[1].apply(coins[0].apply(psi)))
    assert multi_walker_coin(coins[:1]) is coins[0]
    with pytest.raises(OperatorError, match="share"):
        MultiWalkerCoin([extended_coin(grid5, 0, {}, {6: ("q6_0", X)}),
                         extended_coin(grid5, 1, {}, {6: ("q6_0", X)})])
    with pytest.raises(OperatorError):
        MultiWalkerCoin([coins[0], coins[0]])


def test_data_controlled_commutes_with_disjoint_ops(grid5, rng):
    dc = data_controlled_coin(grid5, 0, 6, "q6_0", np.eye(8), complement_matrix(3))
    other = Composite([local_gate(grid5, "q18_0", X), node_coin(grid5, 0, {18: _random_unitary(rng, 8)})])
    psi = _random_state(grid5, rng, terms=30)
    assert dc.apply(other.apply(psi)).allclose(other.apply(dc.apply(psi)))


def test_helper_matrices_are_unitary():
    assert is_unitary(transposition(8, 0, 5))
    assert is_unitary(embedded_hadamard(4, 1, 3))
    assert is_unitary(complement_matrix(3))
    with pytest.raises(OperatorError):
        embedded_hadamard(4, 1, 1)


def _operator_zoo(g, rng, walkers):
    yield flip_flop_shift(g, walkers - 1)
    yield extended_shift(g, walkers)
    yield node_coin(g, 0, {1: _random_unitary(rng, 4), 0: _random_unitary(rng, 2)})
    yield extended_coin(g, walkers - 1, {2: _random_unitary(rng, 2)},
                        {2: ("q2_0", _random_unitary(rng, 2)), 1: ("q1_0", X)})
    yield data_controlled_coin(g, tuple(range(walkers)), 1, "q1_0", _random_unitary(rng, 4),
                               _random_unitary(rng, 4))
    yield local_gate(g, ["q2_0", "q0_0"], _random_unitary(rng, 4))
    if walkers == 2:
        yield MultiWalkerCoin([extended_coin(g, 0, {0: _random_unitary(rng, 2)}, {0: ("q0_0", X)}),
                               node_coin(g, 1, {1: _random_unitary(rng, 4)})])


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), walkers=st.integers(1, 2))
def test_sparse_matches_dense(seed, walkers):
    g = augment_self_loops(chain_topology(3, 1))
    rng = np.random.default_rng(seed)
    layout = DenseLayout(g, walkers)
    ops = list(_operator_zoo(g, rng, walkers))
    for op in ops + [Composite(ops)]:
        m = op.to_matrix(layout)
        assert is_unitary(m, 1e-10)
        psi = _random_state(g, rng, walkers)
        assert np.allclose(to_vector(op.apply(psi), layout), m @ to_vector(psi, layout), atol=1e-12)
        inv = op.inverse()
        assert op.apply(inv.apply(psi)).allclose(psi, 1e-12)
