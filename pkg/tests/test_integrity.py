import hashlib
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from propnet.errors import DomainError, MiningBudgetExhausted
from propnet.fees import FeeParameters, share_of
from propnet.integrity import (
    H, MAX_TARGET, BlockRecord, Ed25519Scheme, LeaderCredential, MockScheme, SignedTransaction, apow_mine,
    apow_owns, apow_verify, as_int, build_block, claim_shares, commit, extend_identifier, fold_identifiers,
    hop_check, leader_initial_identifier, reveal_verify, signature_chain_overhead_bytes, verify_path,
)

MOCK = MockScheme()
ED = Ed25519Scheme()

OUT0 = "8bd54a5c1baa0d4bc1c68c8748e321a82de7c47550898319e3bb311d526ca847"
CHAIN = [
    "332a5acec6e48e0c768117e83f8844a0e5780795c2e058b08ece183afebec1ba",
    "7afad47415f6c0dd940f7b51aafcea2523141d7d6ca199f198e5dbd717a36e7b",
    "1043deef482d8b241410c9d9922881977f1233d81cea904a6b7fe5018a34e7b7",
]


def ref_h(*parts):
    return hashlib.sha256(b"".join(len(p).to_bytes(8, "big") + p for p in parts)).digest()


def test_golden_vectors():
    assert H(b"abc").hex() == "c3494ca1a2cf8eeb8a11ded316fb55b83c3bbbedb6313cd50415251e5d09e12f"
    out = leader_initial_identifier(bytes(32), b"A")
    assert out.hex() == OUT0
    got = []
    for key in (b"K1", b"K2", b"K3"):
        out = extend_identifier(out, key)
        got.append(out.hex())
    assert got == CHAIN
    # client IN after three relays; the trail arrives client side first
    assert verify_path(bytes.fromhex(OUT0), [b"K3", b"K2", b"K1"], bytes.fromhex(CHAIN[-1]))
    assert not verify_path(bytes.fromhex(OUT0), [b"K1", b"K2", b"K3"], bytes.fromhex(CHAIN[-1]))


@given(st.lists(st.binary(max_size=40), max_size=5))
@settings(max_examples=100)
def test_encoding_matches_reference(parts):
    assert H(*parts) == ref_h(*parts)
    assert len(H(*parts)) == 32


def test_encoding_is_order_and_boundary_sensitive():
    assert H(b"a", b"b") != H(b"b", b"a")
    assert H(b"ab", b"c") != H(b"a", b"bc")
    assert H(b"x") != hashlib.sha256(b"x").digest()


def test_identifier_basics():
    init = leader_initial_identifier(b"cred", b"pk")
    assert init == leader_initial_identifier(b"cred", b"pk")
    assert init != leader_initial_identifier(b"cred", b"pk2")
    assert extend_identifier(init, b"a") != extend_identifier(init, b"b")
    assert verify_path(init, [], init)


trails = st.lists(st.binary(min_size=32, max_size=32), min_size=0, max_size=16)


@given(st.binary(min_size=32, max_size=32), trails)
@settings(max_examples=1000, deadline=None)
def test_round_trip(init, trail):
    client_in = fold_identifiers(init, reversed(trail))
    assert verify_path(init, trail, client_in)


def _case(seed, min_len=1):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(min_len, 17))
    trail = [rng.bytes(32) for _ in range(n)]
    init = rng.bytes(32)
    return rng, init, trail, fold_identifiers(init, reversed(trail))


TAMPER_CASES = 1000


def test_tamper_substitution():
    for s in range(TAMPER_CASES):
        rng, init, trail, cin = _case(s)
        j = int(rng.integers(len(trail)))
        bad = trail[:j] + [rng.bytes(32)] + trail[j + 1:]
        assert not verify_path(init, bad, cin)


def test_tamper_insertion():
    for s in range(TAMPER_CASES):
        rng, init, trail, cin = _case(s, min_len=0)
        j = int(rng.integers(len(trail) + 1))
        assert not verify_path(init, trail[:j] + [rng.bytes(32)] + trail[j:], cin)


def test_tamper_deletion():
    for s in range(TAMPER_CASES):
        rng, init, trail, cin = _case(s)
        j = int(rng.integers(len(trail)))
        assert not verify_path(init, trail[:j] + trail[j + 1:], cin)


def test_tamper_adjacent_swap():
    for s in range(TAMPER_CASES):
        rng, init, trail, cin = _case(s, min_len=2)
        j = int(rng.integers(len(trail) - 1))
        bad = list(trail)
        bad[j], bad[j + 1] = bad[j + 1], bad[j]
        assert not verify_path(init, bad, cin)


def test_commitments():
    r = bytes(range(32))
    c = commit(b"pk", r)
    assert c.value == ref_h(b"pk", r)
    assert reveal_verify(c, b"pk", r)
    assert not reveal_verify(c, b"pk", bytes(32))
    assert not reveal_verify(c, b"pk2", r)
    with pytest.raises(DomainError):
        commit(b"pk", b"short")


def test_commitment_chain():
    init = bytes.fromhex(OUT0)
    opens = {i: (k, bytes([i]) * 32) for i, k in enumerate((b"K1", b"K2", b"K3"))}
    cts = [commit(*opens[i]).value for i in range(3)]
    expect = init
    for ct in cts:
        expect = ref_h(expect, ct)
    assert verify_path(init, cts[::-1], expect)
    assert not verify_path(init, [b"K3", b"K2", b"K1"], expect)
    for i, ct in enumerate(cts):
        assert reveal_verify(ct, *opens[i])


def test_apow_trivial_targets():
    r, cred, attempts = apow_mine(b"prev", b"pk", MAX_TARGET, 1)
    assert attempts == 1
    assert cred.value == H(H(r, b"pk")) and cred.proof == H(r, b"pk")
    assert apow_verify(cred, b"prev", MAX_TARGET)
    with pytest.raises(MiningBudgetExhausted):
        apow_mine(b"prev", b"pk", 0, 1, budget=200)
    with pytest.raises(DomainError):
        apow_mine(b"prev", b"pk", MAX_TARGET + 1, 1)


def test_apow_mining_and_ownership():
    target = 1 << 248
    r, cred, attempts = apow_mine(b"prev", b"pk", target, 7, budget=10**5)
    assert as_int(ref_h(ref_h(ref_h(r, b"pk")), b"prev")) < target
    assert apow_verify(cred.without_secret(), b"prev", target)
    assert apow_owns(cred, r, b"pk")
    assert not apow_owns(cred, r, b"other")
    assert not apow_owns(cred, bytes(32), b"pk")
    flipped = LeaderCredential(bytes([cred.value[0] ^ 1]) + cred.value[1:], cred.leader_pk, cred.proof)
    assert not apow_verify(flipped, b"prev", target)
    assert not apow_verify(cred, b"prev2", target)
    again = apow_mine(b"prev", b"pk", target, 7, budget=10**5)
    assert again[0] == r and again[2] == attempts


def test_signatures():
    for scheme in (MOCK, ED):
        kp = scheme.keypair(bytes(range(32)))
        assert kp == scheme.keypair(bytes(range(32)))
        sig = scheme.sign(kp.secret, b"msg")
        assert scheme.verify(kp.public, b"msg", sig)
        assert not scheme.verify(kp.public, b"msh", sig)
    assert len(ED.keypair(bytes(32)).public) == 32
    assert not ED.verify(b"short", b"m", bytes(64))


def _chain(scheme, hops, seed=0):
    """Relays 1..hops from the leader side; the client hangs below the last."""
    keys = [scheme.keypair(bytes([seed, i]) * 16) for i in range(hops + 2)]
    leader, relays, client = keys[0], keys[1:-1], keys[-1]
    init = leader_initial_identifier(b"cred" + bytes([seed]), leader.public)
    outs = [init]
    for kp in relays:
        outs.append(extend_identifier(outs[-1], kp.public))
    return leader, relays, client, init, outs


def _relay_all(scheme, hops, payload=b"tx", fee=100, seed=0):
    leader, relays, client, init, outs = _chain(scheme, hops, seed)
    tx = SignedTransaction.create(payload, fee, outs[-1], client, scheme)
    for j in range(hops, 0, -1):
        assert hop_check(tx, outs[j], scheme)
        tx = tx.with_hop(relays[j - 1].public)
    return leader, relays, init, tx


def test_signed_transaction_relay():
    leader, relays, init, tx = _relay_all(ED, 3)
    assert tx.path_len == 4 and tx.signature_ok(ED)
    assert verify_path(init, tx.trail, tx.client_in)
    assert tx.trail == tuple(kp.public for kp in relays[::-1])
    forged = SignedTransaction(tx.payload, tx.fee + 1, tx.client_in, tx.client_pk, tx.signature, tx.trail)
    assert not forged.signature_ok(ED)
    # a relay refuses a copy whose trail does not lead from its own OUT
    _, _, _, init2, outs = _chain(MOCK, 2)
    t = SignedTransaction.create(b"p", 5, outs[-1], MOCK.keypair(b"c" * 32), MOCK)
    assert hop_check(t, outs[2], MOCK)
    assert not hop_check(t, outs[1], MOCK)
    with pytest.raises(DomainError):
        SignedTransaction.create(b"p", -1, outs[-1], MOCK.keypair(b"c" * 32), MOCK)


def test_storage_overhead():
    for hops in range(0, 12):
        _, _, _, tx = _relay_all(ED, hops)
        assert tx.integrity_overhead_bytes() == 32 * hops + 64
        if hops:
            assert tx.integrity_overhead_bytes() < signature_chain_overhead_bytes(hops)


def _cred(pk=None, seed=1):
    _, cred, _ = apow_mine(b"prev", pk or ED.keypair(bytes(32)).public, MAX_TARGET, seed)
    return cred


def test_build_block_shortest_verified_copy():
    leader, relays, client, init, outs = _chain(MOCK, 4)
    short = SignedTransaction.create(b"A", 100, outs[2], client, MOCK).with_hop(relays[1].public).with_hop(
        relays[0].public)
    long_ = SignedTransaction.create(b"A", 100, outs[4], client, MOCK)
    for j in range(4, 0, -1):
        long_ = long_.with_hop(relays[j - 1].public)
    broken = SignedTransaction(short.payload, short.fee, short.client_in, short.client_pk, short.signature,
                               (b"x" * 32,) + short.trail[1:])
    solo = SignedTransaction.create(b"B", 10, init, client, MOCK)
    bad = SignedTransaction.create(b"C", 10, init, client, MOCK).with_hop(b"y" * 32)
    cands = [(long_, init), (broken, init), (solo, init), (short, init), (bad, init)]
    block, rejects = build_block(_cred(leader.public), b"prev", cands, leader, MOCK)
    assert [(e.tx.payload, e.k) for e in block.entries] == [(b"A", 3), (b"B", 1)]
    assert block.entries[0].tx == short
    assert [(r.payload, r.copies) for r in rejects] == [(b"C", 1)]
    assert block.leader_signature_ok(MOCK)
    only_valid_longer, _ = build_block(_cred(), b"prev", [(broken, init), (long_, init)], None, MOCK)
    assert only_valid_longer.entries[0].k == 5


def test_build_block_tie_keeps_first():
    leader, relays, client, init, outs = _chain(MOCK, 1)
    a = SignedTransaction.create(b"A", 1, outs[1], client, MOCK).with_hop(relays[0].public)
    b = SignedTransaction.create(b"A", 1, outs[1], MOCK.keypair(b"z" * 32), MOCK).with_hop(relays[0].public)
    block, _ = build_block(_cred(), b"prev", [(b, init), (a, init)], None, MOCK)
    assert block.entries[0].tx == b


@given(st.fractions(Fr(1, 100), Fr(99, 100), max_denominator=100), st.integers(1, 30))
@settings(max_examples=100)
def test_shorter_path_never_hurts_leader(c, k):
    p = FeeParameters(1, c)
    assert share_of(p, k, k) >= share_of(p, k + 1, k + 1)


def test_claim_shares_examples():
    leader, relays, init, tx = _relay_all(ED, 2, fee=100)
    block, _ = build_block(_cred(), b"prev", [(tx, init)], None, ED)
    rep = claim_shares(block, Fr(1, 4))
    assert rep.per_entry == [[25, 18, 57]]
    # position 1 is the relay nearest the client
    assert rep.payouts[tx.trail[0]] == 25 and rep.payouts[tx.trail[1]] == 18
    assert rep.payouts[block.credential.leader_pk] == 57
    assert sum(rep.payouts.values()) == 100
    direct = SignedTransaction.create(b"d", 77, init, ED.keypair(b"q" * 32), ED)
    block1, _ = build_block(_cred(), b"prev", [(direct, init)], None, ED)
    assert claim_shares(block1, Fr(1, 4)).payouts == {block1.credential.leader_pk: 77}


def test_claim_shares_committed():
    keys = [MOCK.keypair(bytes([i]) * 32) for i in range(4)]
    opens = {}
    trail_cts = []
    for i, kp in enumerate(keys[1:3]):
        r = bytes([50 + i]) * 32
        ct = commit(kp.public, r).value
        opens[ct] = (kp.public, r)
        trail_cts.append(ct)
    init = leader_initial_identifier(b"cred", b"inner")
    cin = fold_identifiers(init, reversed(trail_cts))
    tx = SignedTransaction.create(b"t", 100, cin, keys[3], MOCK)
    for ct in trail_cts:
        tx = tx.with_hop(ct)
    block, rejects = build_block(_cred(), b"prev", [(tx, init)], None, MOCK)
    assert not rejects
    full = claim_shares(block, Fr(1, 4), opens, committed=True)
    assert full.payouts[keys[1].public] == 25 and full.payouts[keys[2].public] == 18
    partial = claim_shares(block, Fr(1, 4), {trail_cts[0]: opens[trail_cts[0]]}, committed=True)
    assert partial.withheld == [(0, 2, 18)]
    assert keys[2].public not in partial.payouts
    wrong = claim_shares(block, Fr(1, 4), {trail_cts[0]: (keys[1].public, bytes(32))}, committed=True)
    assert (0, 1, 25) in wrong.withheld


def test_block_serialization_round_trip():
    leader, relays, init, tx = _relay_all(ED, 3)
    block, _ = build_block(_cred(), b"prev", [(tx, init)], ED.keypair(bytes(32)), ED)
    data = block.serialize()
    back = BlockRecord.deserialize(data)
    assert back == block and back.digest() == block.digest()
    assert back.leader_signature_ok(ED)
    assert block.to_debug()["entries"][0]["k"] == 4
    with pytest.raises(DomainError):
        BlockRecord.deserialize(data[:-1])
    with pytest.raises(DomainError):
        BlockRecord.deserialize(data + b"\0")
