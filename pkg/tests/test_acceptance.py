"""Acceptance criteria, one test each, with wall-clock limits.

Each test records a PASS/FAIL line that is printed in the terminal summary.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import time
from contextlib import contextmanager
from fractions import Fraction as Fr

import numpy as np

from conftest import ACCEPTANCE_LINES, oracle_bfs
from propnet.cli import main
from propnet.diffusion import coverage_report, simulate_diffusion
from propnet.fees import (
    FeeParameters, KnowledgeSnapshot, expected_reward, fee_shares, reward_slope_sign, share_of,
    sybil_delta_intermediary, sybil_delta_leader, verify_fee_function,
)
from propnet.integrity import (
    H, apow_mine, apow_verify, commit, fold_identifiers, leader_initial_identifier, reveal_verify,
    verify_path, extend_identifier,
)
from propnet.routing import (
    analytic_failure_probability, choose_clients, choose_leader, failure_sweep, recognition_phase, run_round,
)
from propnet.seeding import substream
from propnet.topology import GenParams, generate_hybrid, path_graph


@contextmanager
def criterion(num, title, limit_s):
    start = time.perf_counter()
    ok, detail = False, ""
    try:
        yield
        ok = True
    except AssertionError as exc:
        detail = str(exc).splitlines()[0] if str(exc) else "assertion failed"
        raise
    finally:
        took = time.perf_counter() - start
        if ok and limit_s is not None and took >= limit_s:
            ok, detail = False, f"over time limit {limit_s}s"
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} [{num:>2}] {title} ({took:.2f}s){'  ' + detail if detail else ''}")
    if limit_s is not None:
        assert took < limit_s, f"took {took:.1f}s, limit {limit_s}s"


def test_c01_normalization_and_equalities():
    with criterion(1, "fee normalization and equalities", 10):
        rng = np.random.default_rng(101)
        for _ in range(200):
            fee = Fr(int(rng.integers(1, 10**6)), int(rng.integers(1, 1000)))
            c = Fr(int(rng.integers(1, 1000)), 1000)
            k = int(rng.integers(1, 65))
            p = FeeParameters(fee, c)
            assert sum(fee_shares(p, k).shares) == fee
            assert share_of(p, k + 1, k) == c * share_of(p, k, k)
            assert all(share_of(p, k, i) == share_of(p, k + 1, i) for i in range(1, k))
            for kk in range(1, 21):
                for s in range(1, 21):
                    assert sybil_delta_leader(p, kk, s) == 0
            share_of.cache_clear()


def test_c02_impossibility_witness():
    with criterion(2, "intermediary Sybil gain and uniform-split rejection", 5):
        p = FeeParameters(1, Fr(1, 4))
        for k in range(2, 21):
            for i in range(1, k):
                for s in range(1, 11):
                    assert sybil_delta_intermediary(p, k, i, s) > 0
        rep = verify_fee_function(lambda k, i: Fr(1, k), 20, 20)
        assert not rep.all_ok and rep.first_violation is not None


def test_c03_equity_monotone_reward():
    with criterion(3, "expected reward monotone in X", None):
        rng = np.random.default_rng(303)
        for _ in range(1000):
            c = Fr(int(rng.integers(1, 100)), 100)
            k = int(rng.integers(1, 20))
            known = Fr(int(rng.integers(1, 1000)), 1000)
            own = known * Fr(int(rng.integers(0, 101)), 100)
            unknown = Fr(int(rng.integers(1, 1000)), 1000)
            p = FeeParameters(1, c)
            snap = KnowledgeSnapshot(own, known, unknown)
            vals = [expected_reward(p, k, snap, unknown * j / 10) for j in range(11)]
            want = (share_of(p, k + 1, k) * known - share_of(p, k, k) * own)
            sign = (want > 0) - (want < 0)
            assert reward_slope_sign(p, k, snap) == sign
            for a, b in zip(vals, vals[1:]):
                assert ((b > a) - (b < a)) == sign


def test_c04_gradient_tree_oracle():
    with criterion(4, "gradient depths equal BFS distances", None):
        for j in range(100):
            n = 200 if j % 2 else 1000
            g = generate_hybrid(GenParams(n, 8, rng_seed=4000 + j))
            leader = int(substream(4, j).integers(n))
            t = recognition_phase(g, leader, substream(5, j))
            assert t.depth.tolist() == oracle_bfs(n, g.edges.tolist(), leader)


def test_c05_communication_reduction():
    with criterion(5, "mean visited / N <= 0.05 at N=1000", 120):
        visited = []
        for gi in range(10):
            g = generate_hybrid(GenParams(1000, 8, rng_seed=500 + gi))
            leader = choose_leader(g, substream(55, gi))
            clients = choose_clients(g, leader, 100, substream(56, gi))
            ms = run_round(g, leader, clients, 8, 0.0, seed=gi)
            assert all(m.delivered for m in ms)
            visited += [m.nodes_visited for m in ms]
        frac = float(np.mean(visited)) / 1000
        ACCEPTANCE_LINES.append(f"     mean visited fraction {frac:.4f}")
        assert frac <= 0.05


def test_c06_failure_rates():
    with criterion(6, "failure rate band and monotonicity at N=10000", 600):
        rows = failure_sweep([10000], [8], [0.1, 0.2, 0.3], trials=2000, graphs=5, out_degree=8, master_seed=1)
        rates = [r.sim_rate for r in rows]
        ACCEPTANCE_LINES.append(f"     sim {rates} analytic(0.3)={analytic_failure_probability(10000, 8, 0.3):.4f}")
        assert 0.03 <= rows[2].sim_rate <= 0.12
        assert all(b >= a - 0.01 for a, b in zip(rates, rates[1:]))


def test_c07_diffusion_coverage():
    with criterion(7, "diffusion coverage at C=2/8 and stall instance", 60):
        worst = 1.0
        for s in range(50):
            g = generate_hybrid(GenParams(1000, 8, rng_seed=700 + s))
            client = int(substream(71, s).integers(1000))
            rep = coverage_report(simulate_diffusion(g, Fr(2, 8), client, "local", seed=substream(72, s)))
            worst = min(worst, rep.fraction_nodes)
        ACCEPTANCE_LINES.append(f"     worst coverage {worst:.4f}")
        assert worst >= 0.99
        line = path_graph(3).with_capacity([0.9, 0.05, 0.05])
        rep = coverage_report(simulate_diffusion(line, Fr(1, 4), 2))
        assert rep.stalled and rep.stall_witnesses
        assert all(own >= 0.25 * est for _, own, est in rep.stall_witnesses)


def test_c08_path_integrity():
    with criterion(8, "path identifiers: round trip, tamper, commitments, golden", 10):
        rng = np.random.default_rng(808)
        for _ in range(1000):
            trail = [rng.bytes(32) for _ in range(int(rng.integers(0, 17)))]
            init = rng.bytes(32)
            assert verify_path(init, trail, fold_identifiers(init, reversed(trail)))
        rejected = 0
        for kind in ("substitute", "insert", "delete", "swap"):
            for _ in range(1000):
                n = int(rng.integers(2 if kind == "swap" else (0 if kind == "insert" else 1), 17))
                trail = [rng.bytes(32) for _ in range(n)]
                init = rng.bytes(32)
                cin = fold_identifiers(init, reversed(trail))
                j = int(rng.integers(max(n - (1 if kind == "swap" else 0), 1) + (kind == "insert")))
                bad = list(trail)
                if kind == "substitute":
                    bad[j] = rng.bytes(32)
                elif kind == "insert":
                    bad.insert(j, rng.bytes(32))
                elif kind == "delete":
                    del bad[j]
                else:
                    bad[j], bad[j + 1] = bad[j + 1], bad[j]
                rejected += not verify_path(init, bad, cin)
        assert rejected == 4000
        init = leader_initial_identifier(bytes(32), b"A")
        opens = [(k, bytes([i + 1]) * 32) for i, k in enumerate((b"K1", b"K2", b"K3"))]
        cts = [commit(*o).value for o in opens]
        cin = init
        for ct in cts:
            cin = extend_identifier(cin, ct)
        assert verify_path(init, cts[::-1], cin)
        assert all(reveal_verify(ct, *o) for ct, o in zip(cts, opens))
        assert init.hex() == "8bd54a5c1baa0d4bc1c68c8748e321a82de7c47550898319e3bb311d526ca847"
        chain = fold_identifiers(init, [b"K1", b"K2", b"K3"])
        assert chain.hex() == "1043deef482d8b241410c9d9922881977f1233d81cea904a6b7fe5018a34e7b7"


def test_c09_apow():
    with criterion(9, "A-PoW at 2^248: mining and perturbed prev_hash", 30):
        target = 1 << 248
        rejected = 0
        for s in range(100):
            prev = H(b"prev", s.to_bytes(8, "big"))
            pk = H(b"pk", s.to_bytes(8, "big"))
            r, cred, attempts = apow_mine(prev, pk, target, substream(9, s), budget=10**5)
            assert attempts <= 10**5
            assert apow_verify(cred.without_secret(), prev, target)
            perturbed = bytes([prev[0] ^ 1]) + prev[1:]
            rejected += not apow_verify(cred, perturbed, target)
        ACCEPTANCE_LINES.append(f"     perturbed prev_hash rejected {rejected}/100")
        assert rejected == 100, f"perturbed prev_hash rejected in {rejected}/100 cases"


def _run_twice(tmp_path, name, argv):
    outs = []
    for j in range(2):
        path = tmp_path / f"{name}{j}"
        assert main([a.replace("{out}", str(path)) for a in argv]) == 0
        outs.append(path.read_bytes())
    return outs[0] == outs[1]


def test_c10_end_to_end_determinism(tmp_path):
    with criterion(10, "byte-identical outputs across runs", None):
        g = tmp_path / "g.txt"
        assert main(["gen-network", "--n", "400", "--ncon", "8", "--seed", "10", "--out", str(g)]) == 0
        cases = {
            "gen": ["gen-network", "--n", "400", "--seed", "10", "--out", "{out}"],
            "fee": ["fee-shares", "--fee", "100", "--c", "1/4", "--k", "5", "--units", "1", "--csv", "{out}"],
            "route": ["simulate-routing", "--graph", str(g), "--clients", "50", "--h", "0.2", "--trials", "2",
                      "--seed", "3", "--csv", "{out}"],
            "fail": ["failure-sweep", "--n", "400", "--ncon", "8", "--h", "0.1,0.3", "--trials", "100",
                     "--graphs", "2", "--seed", "3", "--csv", "{out}"],
            "comm": ["communication-sweep", "--n", "400", "--ncon", "8", "--clients", "20", "--graphs", "2",
                     "--seed", "3", "--csv", "{out}"],
            "diff": ["simulate-diffusion", "--graph", str(g), "--c", "1/4", "--trials", "3", "--seed", "3",
                     "--csv", "{out}"],
            "block": ["demo-block", "--graph", str(g), "--txs", "5", "--seed", "3", "--tamper", "1", "--out", "{out}"],
            "blockbin": ["demo-block", "--graph", str(g), "--txs", "5", "--seed", "3", "--block-bin", "{out}",
                         "--out", str(tmp_path / "ignored.json")],
        }
        bad = [name for name, argv in cases.items() if not _run_twice(tmp_path, name, argv)]
        assert not bad, f"outputs differ: {bad}"
