"""One full round of the combined mechanism on a graph: credential mining,
identifier flood, relayed signed transactions, block assembly and fee
claims.  Drives ``propnet demo-block``."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from propnet.errors import DomainError
from propnet.fees import default_c
from propnet.integrity import (
    DEFAULT_SCHEME, H, BlockRecord, KeyPair, LeaderCredential, Reject, SignatureScheme,
    SignedTransaction, apow_mine, build_block, claim_shares, commit, extend_identifier, hop_check,
    leader_initial_identifier,
)
from propnet.routing import GradientTable, choose_clients, choose_leader, entry_neighbors, recognition_phase
from propnet.seeding import substream
from propnet.topology import NetworkGraph


def _u64(x: int) -> bytes:
    return (int(x) & ((1 << 64) - 1)).to_bytes(8, "big")


@dataclass
class CombinedRound:
    graph: NetworkGraph
    table: GradientTable
    scheme: SignatureScheme
    keys: list[KeyPair]
    trail_keys: list[bytes]
    out_ids: list[bytes]
    credential: LeaderCredential
    prev_hash: bytes
    initial: bytes
    committed: bool
    mining_attempts: int
    openings: dict[bytes, tuple[bytes, bytes]] = field(default_factory=dict)

    @property
    def leader(self) -> int:
        return self.table.leader


def setup_round(g: NetworkGraph, seed: int, *, scheme: SignatureScheme = DEFAULT_SCHEME, committed: bool = False,
                target_m: int = 1 << 248, leader: Optional[int] = None) -> CombinedRound:
    """Mine the leader credential and flood identifiers.

    With ``committed`` every relay publishes ``H(pk, r)`` instead of its
    key, and the leader seeds the chain with its inner commitment.
    """
    if leader is None:
        leader = choose_leader(g, substream(seed, 10))
    table = recognition_phase(g, leader, substream(seed, 11))
    keys = [scheme.keypair(H(b"node-key", _u64(seed), _u64(u))) for u in range(g.n_nodes)]
    prev_hash = H(b"prev-block", _u64(seed))
    _, credential, attempts = apow_mine(prev_hash, keys[leader].public, target_m, substream(seed, 12))
    initial = leader_initial_identifier(credential.value, credential.proof if committed else keys[leader].public)
    openings: dict[bytes, tuple[bytes, bytes]] = {}
    trail_keys = []
    for u, kp in enumerate(keys):
        if committed:
            r = H(b"commit-r", _u64(seed), _u64(u))
            value = commit(kp.public, r).value
            openings[value] = (kp.public, r)
            trail_keys.append(value)
        else:
            trail_keys.append(kp.public)
    out_ids: list[bytes] = [b""] * g.n_nodes
    out_ids[leader] = initial
    for u in np.argsort(table.depth, kind="stable").tolist():
        if u != leader:
            out_ids[u] = extend_identifier(out_ids[int(table.parent[u])], trail_keys[u])
    return CombinedRound(g, table, scheme, keys, trail_keys, out_ids, credential, prev_hash, initial,
                         committed, attempts, openings)


@dataclass(frozen=True)
class Arrival:
    tick: int
    tx_index: int
    tx: SignedTransaction


def relay(rnd: CombinedRound, tx_index: int, client: int, payload: bytes, fee: int, out_degree: int,
          failed: Optional[np.ndarray] = None) -> tuple[list[Arrival], list[int]]:
    """Send one transaction down the gradient tree.

    Returns the copies that reached the leader and the node ids that refused
    a copy because its path did not check out.
    """
    if client == rnd.leader:
        raise DomainError("client must differ from the leader")
    g, table = rnd.graph, rnd.table
    arrivals: list[Arrival] = []
    refused: list[int] = []
    seen = {client}
    current = []
    for entry in entry_neighbors(g, table, client, out_degree):
        # one identifier per delivering neighbour
        tx = SignedTransaction.create(payload, fee, rnd.out_ids[entry], rnd.keys[client], rnd.scheme)
        current.append((entry, tx))
    tick = 1
    while current:
        nxt = []
        for node, tx in current:
            if node == rnd.leader:
                arrivals.append(Arrival(tick, tx_index, tx))
                continue
            if node in seen:
                continue
            seen.add(node)
            if failed is not None and failed[node]:
                continue
            if not hop_check(tx, rnd.out_ids[node], rnd.scheme):
                refused.append(node)
                continue
            nxt.append((int(table.parent[node]), tx.with_hop(rnd.trail_keys[node])))
        current = nxt
        tick += 1
    return arrivals, refused


def _forge(tx: SignedTransaction) -> SignedTransaction:
    if tx.trail:
        return SignedTransaction(tx.payload, tx.fee, tx.client_in, tx.client_pk, tx.signature,
                                 (H(b"forged", tx.trail[0]),) + tx.trail[1:])
    return SignedTransaction(tx.payload, tx.fee, tx.client_in, tx.client_pk,
                             bytes([tx.signature[0] ^ 1]) + tx.signature[1:], tx.trail)


@dataclass
class DemoResult:
    round: CombinedRound
    block: BlockRecord
    rejects: list[Reject]
    clients: list[int]
    fees: list[int]
    per_tx_units: dict[bytes, list[int]]
    payouts: dict[bytes, int]
    withheld: list[tuple[int, int, int]]
    c: Fraction

    def report(self) -> dict:
        pk_node = {kp.public: u for u, kp in enumerate(self.round.keys)}
        entries = []
        for e in self.block.entries:
            units = self.per_tx_units[e.tx.payload]
            entries.append({"payload": e.tx.payload.hex(), "fee": e.tx.fee, "k": e.k,
                            "payout_units": units, "payout_sum": sum(units)})
        return {
            "leader": self.round.leader,
            "c": f"{self.c.numerator}/{self.c.denominator}",
            "committed": self.round.committed,
            "mining_attempts": self.round.mining_attempts,
            "block_digest": self.block.digest().hex(),
            "block": self.block.to_debug(),
            "entries": entries,
            "payouts": [{"node": pk_node[pk], "pk": pk.hex(), "amount": amt}
                        for pk, amt in sorted(self.payouts.items(), key=lambda kv: pk_node[kv[0]])],
            "rejects": [{"payload": r.payload.hex(), "copies": r.copies, "reason": r.reason} for r in self.rejects],
            "withheld": [{"entry": e, "position": p, "amount": a} for e, p, a in self.withheld],
            "fees_total": sum(self.fees),
            "fees_included": sum(e.tx.fee for e in self.block.entries),
            "paid_total": sum(self.payouts.values()),
        }


def demo_block(g: NetworkGraph, txs: int, seed: int, *, out_degree: int = 8, c=None, tamper: int = 0,
               committed: bool = False, target_m: int = 1 << 248, scheme: SignatureScheme = DEFAULT_SCHEME,
               fee_range: tuple[int, int] = (100, 10_000)) -> DemoResult:
    """Run one round end to end.  The first ``tamper`` transactions have
    every copy forged on arrival at the leader, so they end up as rejects."""
    if c is None:
        c = default_c(out_degree)
    c = Fraction(c)
    rnd = setup_round(g, seed, scheme=scheme, committed=committed, target_m=target_m)
    clients = choose_clients(g, rnd.leader, txs, substream(seed, 13))
    fee_rng = substream(seed, 14)
    fees = [int(f) for f in fee_rng.integers(fee_range[0], fee_range[1] + 1, size=len(clients))]
    arrivals: list[Arrival] = []
    for j, (client, fee) in enumerate(zip(clients, fees)):
        payload = b"tx:" + _u64(j) + fee_rng.bytes(16)
        got, _ = relay(rnd, j, client, payload, fee, out_degree)
        if j < tamper:
            got = [Arrival(a.tick, a.tx_index, _forge(a.tx)) for a in got]
        arrivals += got
    arrivals.sort(key=lambda a: (a.tick, a.tx_index))
    block, rejects = build_block(rnd.credential, rnd.prev_hash, [(a.tx, rnd.initial) for a in arrivals],
                                 rnd.keys[rnd.leader], scheme)
    claims = claim_shares(block, c, rnd.openings, committed=committed)
    per_tx = {e.tx.payload: units for e, units in zip(block.entries, claims.per_entry)}
    return DemoResult(rnd, block, rejects, clients, fees, per_tx, claims.payouts, claims.withheld, c)


def verify_block(rnd: CombinedRound, block: BlockRecord, target_m: int) -> bool:
    """Independent re-check of a finished block."""
    from propnet.integrity import apow_owns, apow_verify, verify_path

    cred = block.credential
    if not apow_verify(cred, block.prev_hash, target_m):
        return False
    if cred.r is not None and not apow_owns(cred, cred.r, cred.leader_pk):
        return False
    if not block.leader_signature_ok(rnd.scheme):
        return False
    return all(e.tx.signature_ok(rnd.scheme) and verify_path(rnd.initial, e.tx.trail, e.tx.client_in)
               and e.k == e.tx.path_len for e in block.entries)

