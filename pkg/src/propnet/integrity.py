"""Path identifiers, commitments, anonymous proof-of-work credentials,
signed transactions and block assembly.

Digest encoding, fixed so test vectors are portable::

    H(a, b, ...) = SHA-256(len8(a) || a || len8(b) || b || ...)

with ``len8`` the 8-byte big-endian byte length.  Digests compare against
difficulty targets as big-endian 256-bit unsigned integers.

The recognition flood gives every node ``OUT = H(IN, key)`` where ``IN`` is
its gradient parent's ``OUT`` and the leader starts from
``H(credential, leader key)``.  A transaction carries the client's ``IN``
and a trail of keys appended hop by hop (client side first), so anyone who
knows an ``OUT`` upstream of the trail can recompute the client's ``IN``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from propnet.errors import DomainError, MiningBudgetExhausted
from propnet.fees import FeeParameters, fee_shares, round_to_units
from propnet.seeding import as_generator

DIGEST_SIZE = 32
MAX_TARGET = 1 << 256


def len8(b: bytes) -> bytes:
    return len(b).to_bytes(8, "big")


def H(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for p in parts:
        h.update(len8(p))
        h.update(p)
    return h.digest()


def as_int(digest: bytes) -> int:
    return int.from_bytes(digest, "big")


# -- signatures ---------------------------------------------------------------

@dataclass(frozen=True)
class KeyPair:
    secret: bytes
    public: bytes


class SignatureScheme(Protocol):
    name: str

    def keypair(self, seed: bytes) -> KeyPair: ...

    def sign(self, secret: bytes, message: bytes) -> bytes: ...

    def verify(self, public: bytes, message: bytes, signature: bytes) -> bool: ...


class Ed25519Scheme:
    name = "ed25519"

    def keypair(self, seed: bytes) -> KeyPair:
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
        from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

        sk = Ed25519PrivateKey.from_private_bytes(seed[:32])
        pk = sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        return KeyPair(seed[:32], pk)

    def sign(self, secret: bytes, message: bytes) -> bytes:
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

        return Ed25519PrivateKey.from_private_bytes(secret).sign(message)

    def verify(self, public: bytes, message: bytes, signature: bytes) -> bool:
        from cryptography.exceptions import InvalidSignature
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey

        try:
            Ed25519PublicKey.from_public_bytes(public).verify(signature, message)
        except (InvalidSignature, ValueError):
            return False
        return True


class MockScheme:
    """Deterministic stand-in with no security: the tag is ``H(pk, msg)``."""

    name = "mock"

    def keypair(self, seed: bytes) -> KeyPair:
        return KeyPair(seed, H(b"mock-pk", seed))

    def sign(self, secret: bytes, message: bytes) -> bytes:
        return H(H(b"mock-pk", secret), message)

    def verify(self, public: bytes, message: bytes, signature: bytes) -> bool:
        return H(public, message) == signature


DEFAULT_SCHEME = Ed25519Scheme()


# -- path identifiers ---------------------------------------------------------

def leader_initial_identifier(credential: bytes, leader_key: bytes) -> bytes:
    """``OUT`` of the leader.  For the anonymous variant pass the leader's
    inner commitment ``H(R, PK)`` as ``leader_key``."""
    return H(credential, leader_key)


def extend_identifier(in_id: bytes, key: bytes) -> bytes:
    return H(in_id, key)


def fold_identifiers(start: bytes, keys_from_leader_side: Iterable[bytes]) -> bytes:
    out = start
    for key in keys_from_leader_side:
        out = extend_identifier(out, key)
    return out


def verify_path(initial: bytes, trail: Sequence[bytes], claimed_client_in: bytes) -> bool:
    """Trail is in travel order (client side first); recognition ran the
    other way, so fold it reversed from ``initial``."""
    return fold_identifiers(initial, reversed(tuple(trail))) == claimed_client_in


# -- commitments --------------------------------------------------------------

@dataclass(frozen=True)
class Commitment:
    value: bytes


def commit(pk: bytes, r: bytes) -> Commitment:
    if len(r) != 32:
        raise DomainError("commitment randomness must be 32 bytes")
    return Commitment(H(pk, r))


def reveal_verify(c: Commitment | bytes, pk: bytes, r: bytes) -> bool:
    value = c.value if isinstance(c, Commitment) else c
    return H(pk, r) == value


# -- anonymous proof of work --------------------------------------------------

@dataclass(frozen=True)
class LeaderCredential:
    """``value`` is ``H(H(R, PK))``; ``proof`` is the inner ``H(R, PK)``;
    ``r`` is revealed with the block."""

    value: bytes
    leader_pk: bytes
    proof: bytes
    r: Optional[bytes] = None

    def without_secret(self) -> "LeaderCredential":
        return replace(self, r=None)


def apow_inner(r: bytes, pk: bytes) -> bytes:
    return H(r, pk)


def apow_mine(prev_hash: bytes, pk: bytes, target_m: int, rng=None,
              budget: int = 10**6) -> tuple[bytes, LeaderCredential, int]:
    """Search 32-byte ``r`` with ``H(H(H(r, pk)), prev_hash) < target_m``.

    Returns ``(r, credential, attempts)``.
    """
    if not 0 <= target_m <= MAX_TARGET:
        raise DomainError("target must lie in [0, 2**256]")
    gen = as_generator(rng)
    for attempt in range(1, budget + 1):
        r = gen.bytes(32)
        inner = apow_inner(r, pk)
        value = H(inner)
        if as_int(H(value, prev_hash)) < target_m:
            return r, LeaderCredential(value, pk, inner, r), attempt
    raise MiningBudgetExhausted(f"no solution in {budget} attempts")


def apow_verify(credential: LeaderCredential, prev_hash: bytes, target_m: int) -> bool:
    """Difficulty check on the credential value alone."""
    return as_int(H(credential.value, prev_hash)) < target_m


def apow_owns(credential: LeaderCredential, r: bytes, pk: bytes) -> bool:
    """Ownership proof once ``r`` and the public key are revealed."""
    inner = apow_inner(r, pk)
    return inner == credential.proof and H(inner) == credential.value and pk == credential.leader_pk


# -- transactions -------------------------------------------------------------

@dataclass(frozen=True)
class SignedTransaction:
    payload: bytes
    fee: int
    client_in: bytes
    client_pk: bytes
    signature: bytes
    trail: tuple[bytes, ...] = ()

    @staticmethod
    def signing_message(payload: bytes, fee: int, client_in: bytes) -> bytes:
        return len8(payload) + payload + fee.to_bytes(8, "big") + len8(client_in) + client_in

    @classmethod
    def create(cls, payload: bytes, fee: int, client_in: bytes, client: KeyPair,
               scheme: SignatureScheme = DEFAULT_SCHEME) -> "SignedTransaction":
        if fee < 0:
            raise DomainError("fee must be non-negative")
        sig = scheme.sign(client.secret, cls.signing_message(payload, fee, client_in))
        return cls(payload, fee, client_in, client.public, sig)

    def signature_ok(self, scheme: SignatureScheme = DEFAULT_SCHEME) -> bool:
        return scheme.verify(self.client_pk, self.signing_message(self.payload, self.fee, self.client_in),
                             self.signature)

    def with_hop(self, key: bytes) -> "SignedTransaction":
        return replace(self, trail=self.trail + (key,))

    @property
    def path_len(self) -> int:
        """Intermediaries plus the leader."""
        return len(self.trail) + 1

    def integrity_overhead_bytes(self) -> int:
        return sum(len(k) for k in self.trail) + len(self.signature)


def hop_check(tx: SignedTransaction, own_out: bytes, scheme: SignatureScheme = DEFAULT_SCHEME) -> bool:
    """What a relay checks before appending its key: the client signature
    and that the trail so far leads from its own identifier to the
    client's."""
    return tx.signature_ok(scheme) and verify_path(own_out, tx.trail, tx.client_in)


def signature_chain_overhead_bytes(hops: int, sig_size: int = 64, key_size: int = 32) -> int:
    """Per-transaction overhead of a design where every hop signs the
    message together with the next hop's key."""
    return hops * (sig_size + key_size) + sig_size


# -- blocks -------------------------------------------------------------------

def _var(b: bytes) -> bytes:
    return len8(b) + b


def _u64(x: int) -> bytes:
    return int(x).to_bytes(8, "big")


@dataclass(frozen=True)
class BlockEntry:
    tx: SignedTransaction
    k: int


@dataclass(frozen=True)
class BlockRecord:
    credential: LeaderCredential
    prev_hash: bytes
    entries: tuple[BlockEntry, ...]
    leader_signature: bytes = b""

    def body_bytes(self) -> bytes:
        c = self.credential
        out = [_var(c.value), _var(c.leader_pk), _var(c.proof), _var(c.r or b""), _var(self.prev_hash),
               _u64(len(self.entries))]
        for e in self.entries:
            t = e.tx
            out += [_var(t.payload), _u64(t.fee), _var(t.client_in), _var(t.client_pk), _var(t.signature),
                    _u64(len(t.trail))]
            out += [_var(k) for k in t.trail]
            out.append(_u64(e.k))
        return b"".join(out)

    def serialize(self) -> bytes:
        return self.body_bytes() + _var(self.leader_signature)

    def digest(self) -> bytes:
        return hashlib.sha256(self.serialize()).digest()

    def to_debug(self) -> dict:
        c = self.credential
        return {
            "credential": {"value": c.value.hex(), "leader_pk": c.leader_pk.hex(), "proof": c.proof.hex(),
                           "r": (c.r or b"").hex()},
            "prev_hash": self.prev_hash.hex(),
            "entries": [{"payload": e.tx.payload.hex(), "fee": e.tx.fee, "client_in": e.tx.client_in.hex(),
                         "client_pk": e.tx.client_pk.hex(), "signature": e.tx.signature.hex(),
                         "trail": [k.hex() for k in e.tx.trail], "k": e.k} for e in self.entries],
            "leader_signature": self.leader_signature.hex(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_debug(), indent=2)

    @classmethod
    def deserialize(cls, data: bytes) -> "BlockRecord":
        pos = 0

        def u64() -> int:
            nonlocal pos
            if pos + 8 > len(data):
                raise DomainError("truncated block")
            x = int.from_bytes(data[pos:pos + 8], "big")
            pos += 8
            return x

        def var() -> bytes:
            nonlocal pos
            n = u64()
            if pos + n > len(data):
                raise DomainError("truncated block")
            b = data[pos:pos + n]
            pos += n
            return b

        value, pk, proof, r, prev = var(), var(), var(), var(), var()
        entries = []
        for _ in range(u64()):
            payload, fee, cin, cpk, sig = var(), u64(), var(), var(), var()
            trail = tuple(var() for _ in range(u64()))
            entries.append(BlockEntry(SignedTransaction(payload, fee, cin, cpk, sig, trail), u64()))
        lsig = var()
        if pos != len(data):
            raise DomainError("trailing bytes after block")
        return cls(LeaderCredential(value, pk, proof, r or None), prev, tuple(entries), lsig)

    def leader_signature_ok(self, scheme: SignatureScheme = DEFAULT_SCHEME) -> bool:
        return scheme.verify(self.credential.leader_pk, self.body_bytes(), self.leader_signature)


@dataclass(frozen=True)
class Reject:
    payload: bytes
    copies: int
    reason: str


def build_block(credential: LeaderCredential, prev_hash: bytes,
                candidates: Sequence[tuple[SignedTransaction, bytes]], leader: Optional[KeyPair] = None,
                scheme: SignatureScheme = DEFAULT_SCHEME) -> tuple[BlockRecord, list[Reject]]:
    """Keep, per payload, the verifying copy with the shortest trail.

    ``candidates`` pairs each received copy with the initial identifier it
    should chain to, in arrival order; equal lengths keep the earliest.
    Payloads without a verifying copy are returned as rejects.
    """
    best: dict[bytes, SignedTransaction] = {}
    seen: dict[bytes, int] = {}
    order: list[bytes] = []
    for tx, initial in candidates:
        if tx.payload not in seen:
            seen[tx.payload] = 0
            order.append(tx.payload)
        seen[tx.payload] += 1
        if not (tx.signature_ok(scheme) and verify_path(initial, tx.trail, tx.client_in)):
            continue
        cur = best.get(tx.payload)
        if cur is None or tx.path_len < cur.path_len:
            best[tx.payload] = tx
    entries = tuple(BlockEntry(best[p], best[p].path_len) for p in order if p in best)
    rejects = [Reject(p, seen[p], "no copy with a valid path and signature") for p in order if p not in best]
    block = BlockRecord(credential, prev_hash, entries)
    if leader is not None:
        block = replace(block, leader_signature=scheme.sign(leader.secret, block.body_bytes()))
    return block, rejects


@dataclass
class ClaimReport:
    payouts: dict[bytes, int] = field(default_factory=dict)
    per_entry: list[list[int]] = field(default_factory=list)
    withheld: list[tuple[int, int, int]] = field(default_factory=list)  # (entry, position, amount)


def claim_shares(block: BlockRecord, c, openings: Optional[Mapping[bytes, tuple[bytes, bytes]]] = None,
                 committed: bool = False) -> ClaimReport:
    """Integer payouts keyed by public key.

    Trail position ``j`` (client side first) gets share ``j``, the leader
    share ``k``.  With ``committed`` the trail holds commitments; a share is
    paid to the revealed key only when ``openings[commitment] = (pk, r)``
    opens it, otherwise it is withheld.
    """
    openings = openings or {}
    report = ClaimReport()
    for idx, entry in enumerate(block.entries):
        tx = entry.tx
        if entry.k != tx.path_len:
            raise DomainError(f"entry {idx}: recorded k does not match its trail")
        if tx.fee == 0:
            units = [0] * entry.k
        else:
            units = round_to_units(fee_shares(FeeParameters(tx.fee, c), entry.k), 1)
        report.per_entry.append(units)
        recipients: list[Optional[bytes]] = []
        for key in tx.trail:
            if not committed:
                recipients.append(key)
                continue
            opened = openings.get(key)
            recipients.append(opened[0] if opened and reveal_verify(key, *opened) else None)
        recipients.append(block.credential.leader_pk)
        for pos, (who, amount) in enumerate(zip(recipients, units), start=1):
            if who is None:
                report.withheld.append((idx, pos, amount))
            else:
                report.payouts[who] = report.payouts.get(who, 0) + amount
    return report
