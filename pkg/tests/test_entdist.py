from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GRID_TREE_PARENTS
from qwalknet.entdist import QubitPairing, auto_pairing, fractional_x, multipath_ghz, tree_ghz
from qwalknet.exceptions import ProtocolError
from qwalknet.netgraph import NetworkGraph, PathSpec, TreeSpec, augment_self_loops, chain_topology
from qwalknet.statevec import mutual_information, subsystem_fidelity, ghz_target
from qwalknet.walkops import ExtendedCoin

X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_fractional_x_values():
    assert np.allclose(fractional_x(1), X, atol=1e-15)
    half = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
    assert np.allclose(fractional_x(2), half, atol=1e-15)
    with pytest.raises(ProtocolError):
        fractional_x(0)


@settings(max_examples=30, deadline=None)
@given(w=st.integers(1, 12))
def test_fractional_x_power(w):
    m = fractional_x(w)
    assert np.allclose(np.linalg.matrix_power(m, w), X, atol=1e-12)
    assert np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12)


def test_length_two_path_gives_ghz4(rng):
    g = augment_self_loops(chain_topology(3, 2))
    res = multipath_ghz(g, 0, 2, [[0, 1, 2]], rng=rng)
    qs = res.info["ghz_sets"][0]
    assert qs == ["q0_0", "q1_0", "q1_1", "q2_0"]
    assert res.fidelities["ghz_0"] >= 1 - 1e-9
    assert res.propagation_steps == 2


@pytest.mark.parametrize("seed", range(4))
def test_multipath_on_grid(grid5x2, seed):
    res = multipath_ghz(grid5x2, 6, 18, 2, rng=np.random.default_rng(seed))
    assert res.fidelities["ghz_0"] >= 1 - 1e-9 and res.fidelities["ghz_1"] >= 1 - 1e-9
    assert abs(res.fidelities["mutual_information_0_1"]) <= 1e-9
    assert res.propagation_steps == 4 and res.elapsed_steps == 8
    assert [len(s) for s in res.info["ghz_sets"]] == [8, 8]


def test_multipath_forced_outcomes(grid5x2):
    ps = [PathSpec.from_nodes(grid5x2, p) for p in [(6, 7, 8, 13, 18), (6, 11, 12, 17, 18)]]
    for forced in [(6, 2), (6, ps[0].entry_dof(grid5x2).value)]:
        res = multipath_ghz(grid5x2, 6, 18, ps, forced_outcomes=[forced, (6, 2)])
        assert res.fidelities["ghz_0"] >= 1 - 1e-9


def test_multipath_zero_paths(grid5x2):
    res = multipath_ghz(grid5x2, 6, 18, 0)
    assert res.propagation_steps == 0
    ((walkers, bits), amp), = res.final_state.amplitudes.items()
    assert walkers == () and bits == 0 and abs(amp) == pytest.approx(1)


def test_multipath_walkers_end_in_product(rng):
    g = augment_self_loops(chain_topology(3, 2))
    res = multipath_ghz(g, 0, 2, 1, rng=rng)
    assert abs(mutual_information(res.final_state, [0], res.info["ghz_sets"][0])) <= 1e-9


def test_pairing_validation(grid5x2, grid5):
    ps = [PathSpec.from_nodes(grid5x2, (6, 7, 8, 13, 18))]
    bad = QubitPairing((("q6_0", "q18_0"),), ({7: ("q7_0", "q8_0"), 8: ("q8_1", "q8_0"),
                                                13: ("q13_0", "q13_1")},))
    with pytest.raises(ProtocolError):
        multipath_ghz(grid5x2, 6, 18, ps, bad)
    with pytest.raises(ProtocolError, match="too few"):
        auto_pairing(grid5, 6, 18, [PathSpec.from_nodes(grid5, (6, 7, 8, 13, 18))])
    with pytest.raises(ProtocolError, match="share"):
        multipath_ghz(grid5x2, 6, 18, [(6, 7, 8, 13, 18), (6, 7, 12, 13, 18)])


@pytest.fixture
def y_graph():
    # root 0 -> trunk 1 -> leaves 2 and 3
    g = NetworkGraph((0, 1, 2, 3), frozenset({(0, 1), (1, 2), (1, 3)}),
                     {v: (f"n{v}",) for v in range(4)})
    return augment_self_loops(g)


def test_y_tree(y_graph, rng):
    tree = TreeSpec.from_parents(y_graph, 0, {1: 0, 2: 1, 3: 1})
    assert tree.walker_counts[1] == 2
    res = tree_ghz(y_graph, 0, tree, rng=rng)
    assert res.info["ghz_sets"] == [["n0", "n1", "n2", "n3"]]
    assert res.fidelities["ghz"] >= 1 - 1e-9
    assert res.propagation_steps == 2
    assert abs(mutual_information(res.final_state, [0, 1], ["n0", "n1", "n2", "n3"])) <= 1e-9


def test_tree_accumulates_full_x(y_graph):
    tree = TreeSpec.from_parents(y_graph, 0, {1: 0, 2: 1, 3: 1})
    res = tree_ghz(y_graph, 0, tree, forced_outcomes=[(0, 0), (0, 1)])
    acc: dict[str, np.ndarray] = {}
    for phase, op in res.operators:
        if isinstance(op, ExtendedCoin) and phase.startswith("forward gate"):
            for gates in op.interactions.values():
                for gate in gates:
                    q, = gate.qubits
                    acc[q] = gate.matrix @ acc.get(q, np.eye(2))
    assert set(acc) == {"n1", "n2", "n3"}
    for m in acc.values():
        assert np.allclose(m, X, atol=1e-12)


def test_path_tree_matches_single_path_ghz(rng):
    g = augment_self_loops(chain_topology(4, 1))
    tree = TreeSpec.from_parents(g, 0, {1: 0, 2: 1, 3: 2})
    res = tree_ghz(g, 0, tree, rng=rng)
    assert res.fidelities["ghz"] >= 1 - 1e-9
    assert res.info["ghz_sets"] == [["q0_0", "q1_0", "q2_0", "q3_0"]]


def test_grid_tree(grid5):
    tree = TreeSpec.from_parents(grid5, 5, GRID_TREE_PARENTS)
    res = tree_ghz(grid5, 5, tree, rng=np.random.default_rng(0))
    assert res.fidelities["ghz"] >= 1 - 1e-9
    assert res.propagation_steps == 7
    assert len(res.info["leaves"]) == 7
    assert subsystem_fidelity(res.final_state, res.info["ghz_sets"][0], ghz_target(25)) >= 1 - 1e-9


def test_tree_errors(grid5, y_graph):
    tree = TreeSpec.from_parents(y_graph, 0, {1: 0, 2: 1, 3: 1})
    with pytest.raises(ProtocolError):
        tree_ghz(y_graph, 1, tree)
    with pytest.raises(ProtocolError):
        tree_ghz(y_graph, 0, tree, per_node_qubits={1: ("n2",)}, rng=np.random.default_rng(0))
