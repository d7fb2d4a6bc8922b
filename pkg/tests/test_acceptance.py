"""End-to-end acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line; the lines are printed as they
happen (visible with ``-s``) and collected into the terminal summary by
conftest.
"""
from __future__ import annotations

import math
import time

import numpy as np

from conftest import GRID_PATH, GRID_TREE_PARENTS, R, random_qubit
from qwalknet.entdist import multipath_ghz, tree_ghz
from qwalknet.netgraph import (
    NetworkGraph,
    PathSpec,
    TreeSpec,
    augment_self_loops,
    chain_topology,
    grid_topology,
    hop_distance,
    star_topology,
)
from qwalknet.protocols import (
    create_bell_pair,
    distributed_controlled_gate,
    multi_pair_control,
    multi_target_control,
    random_su2,
)
from qwalknet.stategraph import (
    apply_frame,
    bsm_step,
    generate_epr_all_edges,
    ghz_fidelity,
    ghz_frame,
    ghz_projection_step,
    is_vertex_localized,
    run_ghz_grid,
    run_multipath_bsm,
    walk_to_qubits,
)
from qwalknet.statevec import DenseLayout, SparseState, subsystem_fidelity, to_vector
from qwalknet.walkops import (
    data_controlled_coin,
    extended_coin,
    extended_shift,
    flip_flop_shift,
    local_gate,
    node_coin,
)

RESULTS: list[str] = []

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * R
A, B, C_A, CBAR_A = 6, 18, 2, 5
FID = 1 - 1e-9


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def controlled_oracle(u: np.ndarray) -> np.ndarray:
    return np.block([[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), u]])


def cnot_target(g: NetworkGraph, alpha, beta, psi_b) -> SparseState:
    """alpha|A,c_A,0_a,psi_b> + beta|B,c_B,1_a,X psi_b>, written out by hand."""
    n = len(g.registry)
    sa = n - 1 - g.qubit_index["q6_0"]
    sb = n - 1 - g.qubit_index["q18_0"]
    flipped = X @ psi_b
    amps = {}
    for bb in (0, 1):
        amps[(((A, C_A),), bb << sb)] = alpha * psi_b[bb]
        amps[(((B, 2),), (1 << sa) | (bb << sb))] = beta * flipped[bb]
    return SparseState(g, amps, 1)


def test_criterion_01_distributed_cnot():
    t0 = time.perf_counter()
    g = augment_self_loops(grid_topology(5, 5))
    res = distributed_controlled_gate(g, A, "q6_0", B, "q18_0", X, GRID_PATH, separate=False)
    elapsed = time.perf_counter() - t0
    target = cnot_target(g, R, R, np.array([1.0, 0.0]))
    overlap = sum(np.conj(a) * res.final_state.amplitudes.get(k, 0) for k, a in target.amplitudes.items())
    fid = abs(overlap) ** 2
    ok = fid >= FID and elapsed < 1.0 and res.propagation_steps == 4
    report(1, ok, f"fidelity={fid:.15f} runtime={elapsed * 1e3:.1f}ms steps={res.propagation_steps}")


def test_criterion_02_separation():
    g = augment_self_loops(grid_topology(5, 5))
    runs = 10_000
    hits = 0
    for run in range(runs):
        res = distributed_controlled_gate(g, A, "q6_0", B, "q18_0", X, GRID_PATH,
                                          rng=np.random.default_rng((2, run)))
        hits += res.outcomes[0][1][1] == C_A
    freq = hits / runs
    rng = np.random.default_rng(20)
    worst = 1.0
    for _ in range(20):
        ctl, tgt = random_qubit(rng), random_qubit(rng)
        ref = controlled_oracle(X) @ np.kron(ctl, tgt)
        for outcome in ((A, C_A), (A, CBAR_A)):
            res = distributed_controlled_gate(g, A, "q6_0", B, "q18_0", X, GRID_PATH, control_state=ctl,
                                              target_state=tgt, forced_outcome=outcome)
            worst = min(worst, subsystem_fidelity(res.final_state, ["q6_0", "q18_0"], ref))
    ok = abs(freq - 0.5) <= 0.02 and abs((1 - freq) - 0.5) <= 0.02 and worst >= FID
    report(2, ok, f"P(c_A)={freq:.4f} P(c̄_A)={1 - freq:.4f} over {runs} runs; "
                  f"min fidelity over 20 inputs x 2 outcomes={worst:.15f}")


def test_criterion_03_universality():
    g = augment_self_loops(grid_topology(5, 5))
    rng = np.random.default_rng(3)
    gates = {"X": X, "Z": Z, "H": H, **{f"SU2_{i}": random_su2(rng) for i in range(5)}}
    fids = {}
    for name, u in gates.items():
        ctl, tgt = random_qubit(rng), random_qubit(rng)
        res = distributed_controlled_gate(g, A, "q6_0", B, "q18_0", u, GRID_PATH, rng=rng,
                                          control_state=ctl, target_state=tgt)
        ref = controlled_oracle(u) @ np.kron(ctl, tgt)
        fids[name] = subsystem_fidelity(res.final_state, ["q6_0", "q18_0"], ref)
    report(3, min(fids.values()) >= FID, " ".join(f"{k}={v:.12f}" for k, v in fids.items()))


def _random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _random_instance(rng, walkers):
    """Connected graph on <= 6 nodes with <= 3 data qubits scattered over it."""
    n = int(rng.integers(2, 4 if walkers > 1 else 7))
    edges = {(int(rng.integers(0, v)), v) for v in range(1, n)}  # random spanning tree
    for _ in range(int(rng.integers(0, 3))):
        u, v = sorted(rng.choice(n, 2, replace=False).tolist())
        edges.add((u, v))
    n_qubits = int(rng.integers(1, 4))
    owners = rng.integers(0, n, n_qubits)
    qubits: dict[int, tuple[str, ...]] = {}
    for i, v in enumerate(owners):
        qubits[int(v)] = qubits.get(int(v), ()) + (f"d{i}",)
    return augment_self_loops(NetworkGraph(tuple(range(n)), frozenset(edges), qubits))


def _random_step_ops(g, rng, walkers):
    j = int(rng.integers(walkers))
    coins = {v: _random_unitary(rng, g.coin_dim(v)) for v in g.nodes if rng.random() < 0.7}
    kind = rng.integers(3)
    owned = [(v, q) for v in g.nodes for q in g.data_qubits[v]]
    if kind == 0 or not owned:
        coin = node_coin(g, j, coins)
    elif kind == 1:
        v, q = owned[int(rng.integers(len(owned)))]
        coin = extended_coin(g, j, coins, {v: (q, _random_unitary(rng, 2))})
    else:
        v, q = owned[int(rng.integers(len(owned)))]
        coin = data_controlled_coin(g, j, v, q, _random_unitary(rng, g.coin_dim(v)),
                                    _random_unitary(rng, g.coin_dim(v)))
    ops = [coin, extended_shift(g, walkers) if walkers > 1 else flip_flop_shift(g)]
    if owned and rng.random() < 0.3:
        ops.append(local_gate(g, owned[0][1], _random_unitary(rng, 2)))
    return ops


def test_criterion_04_oracle_equivalence():
    rng = np.random.default_rng(4)
    worst_diff = 0.0
    worst_unitary = 0.0
    checked_ops = 0
    for inst in range(50):
        walkers = 2 if inst % 5 == 0 else 1
        g = _random_instance(rng, walkers)
        layout = DenseLayout(g, walkers)
        cells = layout.cells
        amps = {}
        for _ in range(6):
            w = tuple(cells[int(rng.integers(len(cells)))] for _ in range(walkers))
            amps[(w, int(rng.integers(layout.data_dim)))] = complex(rng.normal(), rng.normal())
        state = SparseState(g, amps, walkers).normalized()
        vec = to_vector(state, layout)
        for _ in range(int(rng.integers(1, 6))):
            for op in _random_step_ops(g, rng, walkers):
                m = op.to_matrix(layout)
                worst_unitary = max(worst_unitary, float(np.max(np.abs(m.conj().T @ m - np.eye(layout.dim)))))
                checked_ops += 1
                state = op.apply(state)
                vec = m @ vec
        worst_diff = max(worst_diff, float(np.max(np.abs(to_vector(state, layout) - vec))))
    ok = worst_diff <= 1e-10 and worst_unitary <= 1e-10
    report(4, ok, f"50 instances, {checked_ops} operators; max |sparse - dense|={worst_diff:.2e}; "
                  f"max unitarity defect={worst_unitary:.2e}")


def test_criterion_05_multi_walker():
    g = augment_self_loops(grid_topology(5, 5))
    mt = multi_target_control(g, A, "q6_0", [(B, "q18_0"), (8, "q8_0")], rng=np.random.default_rng(5))
    entropies = [mt.fidelities[f"walker_entropy_{j}"] for j in range(2)]
    g2 = augment_self_loops(grid_topology(5, 5, 2))
    mp = multi_pair_control(g2, A, [("q6_0", B, "q18_0"), ("q6_1", 8, "q8_0")], rng=np.random.default_rng(5))
    mi = mp.fidelities["walker_mutual_information_0_1"]
    ok = all(abs(s - 1) <= 1e-9 for s in entropies) and abs(mi) <= 1e-9
    report(5, ok, f"walker entropies={entropies[0]:.12f},{entropies[1]:.12f}; pair mutual information={mi:.2e}")


def test_criterion_06_bell_pair():
    g = augment_self_loops(grid_topology(5, 5))
    p = PathSpec.from_nodes(g, GRID_PATH)
    fids = []
    for forced in ((A, C_A), (A, p.entry_dof(g).value), None):
        res = create_bell_pair(g, A, "q6_0", B, "q18_0", GRID_PATH, rng=np.random.default_rng(6),
                               forced_outcome=forced)
        fids.append(subsystem_fidelity(res.final_state, ["q6_0", "q18_0"], np.array([0, R, R, 0])))
    report(6, min(fids) >= FID, f"fidelity with (|10>+|01>)/sqrt2: {', '.join(f'{f:.15f}' for f in fids)}")


def test_criterion_07_multipath_ghz():
    g = augment_self_loops(grid_topology(5, 5, 2))
    res = multipath_ghz(g, A, B, 2, rng=np.random.default_rng(7))
    ghz = [res.fidelities["ghz_0"], res.fidelities["ghz_1"]]
    mi = res.fidelities["mutual_information_0_1"]
    delta = hop_distance(g, A, B)
    ok = min(ghz) >= FID and abs(mi) <= 1e-9 and res.propagation_steps == delta
    report(7, ok, f"GHZ fidelities={ghz[0]:.15f},{ghz[1]:.15f} sizes={[len(s) for s in res.info['ghz_sets']]} "
                  f"mutual information={mi:.2e} steps={res.propagation_steps} (distance {delta})")


def test_criterion_08_tree_ghz():
    g = augment_self_loops(grid_topology(5, 5))
    tree = TreeSpec.from_parents(g, 5, GRID_TREE_PARENTS)
    w = tree.walker_counts
    res = tree_ghz(g, 5, tree, rng=np.random.default_rng(8))
    longest = max(p.hops for p in tree.paths())
    fid = res.fidelities["ghz"]
    size = len(res.info["ghz_sets"][0])
    ok = (1 in w.values() and 3 in w.values() and len(tree.leaves) == 7 and fid >= FID
          and res.propagation_steps == longest == 7 and size == 25)
    report(8, ok, f"k={len(tree.leaves)} W(0)={w[0]} W(8)={w[8]} GHZ over {size} qubits fidelity={fid:.15f} "
                  f"steps={res.propagation_steps}")


def test_criterion_09_state_graph_epr():
    details = []
    ok = True
    for m in (1, 2, 3):
        w = generate_epr_all_edges(m)
        expected = np.array([1.0 + 0j])
        for _ in range(m):
            expected = np.kron(expected, np.array([R, 0, 0, R]))
        got = np.zeros(1 << (2 * m), dtype=complex)
        for k, a in walk_to_qubits(w).items():
            got[k] = a
        fid = abs(np.vdot(expected, got)) ** 2
        loc = is_vertex_localized(w)
        ok &= fid >= 1 - 1e-12 and loc
        details.append(f"m={m} fidelity={fid:.15f} localized={loc}")
    report(9, ok, "; ".join(details))


def _bell_oracle(psi, n, pair, index):
    """P_i psi / |P_i psi| for Bell states Phi+, Phi-, Psi+, Psi- (index 1..4)."""
    bell = {1: [R, 0, 0, R], 2: [R, 0, 0, -R], 3: [0, R, R, 0], 4: [0, R, -R, 0]}[index]
    bell = np.array(bell, dtype=complex)
    t = psi.reshape([2] * n)
    rest = [i for i in range(n) if i not in pair]
    t = np.transpose(t, list(pair) + rest).reshape(4, -1)
    out = np.outer(bell, bell.conj() @ t).reshape([2] * n)
    out = np.transpose(out, np.argsort(list(pair) + rest)).reshape(-1)
    return out / np.linalg.norm(out)


def test_criterion_10_bsm_statistics():
    g = chain_topology(3)
    trials = 10_000
    counts = np.zeros(5, dtype=int)
    worst_entropy = 0.0
    for t in range(trials):
        rep = run_multipath_bsm(g, 0, 2, 1.0, 1.0, np.random.default_rng((10, 0, t)))
        chain, = rep["chains"]
        counts[chain["outcomes"][0]] += 1
        worst_entropy = max(worst_entropy, abs(chain["end_entropy"] - 1))
    freqs = counts[1:] / trials
    w = generate_epr_all_edges(2)
    psi = np.zeros(16, dtype=complex)
    for k, a in walk_to_qubits(w).items():
        psi[k] = a
    worst_state = 0.0
    for i in range(1, 5):
        got = np.zeros(16, dtype=complex)
        for k, a in walk_to_qubits(bsm_step(w, (1, 2), forced=i).state).items():
            got[k] = a
        worst_state = max(worst_state, float(np.max(np.abs(got - _bell_oracle(psi, 4, (1, 2), i)))))
    ok = counts[0] == 0 and np.all(np.abs(freqs - 0.25) <= 0.02) and worst_state <= 1e-10 \
        and worst_entropy <= 1e-9
    report(10, ok, f"frequencies={np.round(freqs, 4).tolist()} over {trials} trials; "
                   f"max post-state deviation={worst_state:.2e}; max |entropy - 1|={worst_entropy:.2e}")


def test_criterion_11_ghz_projection():
    g = star_topology(4)
    trials = 10_000
    counts = np.zeros(9, dtype=int)
    worst = 1.0
    for t in range(trials):
        rep = run_ghz_grid(g, 1, 2, 1.0, 1.0, np.random.default_rng((11, 0, t)))
        proj, = rep["projections"]
        counts[proj["outcome"]] += 1
        worst = min(worst, *rep["ab_fidelities"])
    w = generate_epr_all_edges(3)
    for i in range(1, 9):
        amps = walk_to_qubits(ghz_projection_step(w, (0, 2, 4), forced=i).state)
        frame = ghz_frame(amps, 6, [1, 3, 5])
        worst = min(worst, ghz_fidelity(apply_frame(amps, 6, [1, 3, 5], frame), 6, [1, 3, 5]))
    freqs = counts[1:] / trials
    ok = counts[0] == 0 and np.all(np.abs(freqs - 0.125) <= 0.02) and worst >= FID
    report(11, ok, f"frequencies={np.round(freqs, 4).tolist()} over {trials} trials; "
                   f"min frame-corrected leaf GHZ fidelity={worst:.15f}")


def _success_rate(g, p, trials, point):
    hits = sum(run_multipath_bsm(g, 0, 8, p, 1.0, np.random.default_rng((12, point, t)))["success"]
               for t in range(trials))
    return hits / trials


def test_criterion_12_reconstruction():
    g = grid_topology(3, 3)
    full = _success_rate(g, 1.0, 200, 0)
    none = _success_rate(g, 0.0, 200, 1)
    trials = 1000
    rates = [_success_rate(g, p, trials, 2 + i) for i, p in enumerate((0.2, 0.5, 0.8))]
    monotone = True
    for lo, hi in zip(rates, rates[1:]):
        sigma = math.sqrt((lo * (1 - lo) + hi * (1 - hi)) / trials)
        monotone &= hi >= lo - 4 * sigma
    ok = full == 1.0 and none == 0.0 and monotone
    report(12, ok, f"p=1 -> {full}; p=0 -> {none}; p=0.2/0.5/0.8 -> {rates}")

