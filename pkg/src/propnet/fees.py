"""Exact fee sharing between the propagators of a transaction and the leader.

Shares are indexed from the client side: position ``i`` is the ``i``-th node
after the client, position ``k`` is the round leader.  The client itself is
not paid.  Every quantity here is a :class:`fractions.Fraction`; nothing in
this module touches floating point.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

from propnet.errors import DomainError, EvaluationBudgetExceeded

ShareFunction = Callable[[int, int], Fraction]


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # exact binary value; pass strings like "0.25" for decimal intent
        return Fraction(value)
    return Fraction(value)


@dataclass(frozen=True)
class FeeParameters:
    fee: Fraction
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "fee", as_fraction(self.fee))
        object.__setattr__(self, "c", as_fraction(self.c))
        if self.fee <= 0:
            raise DomainError(f"fee must be positive, got {self.fee}")
        if not 0 < self.c < 1:
            raise DomainError(f"c must lie in (0, 1), got {self.c}")
        # hashing Fractions is slow and these are used as cache keys
        object.__setattr__(self, "_hash", hash((self.fee, self.c)))

    def __hash__(self):
        return self._hash


def default_c(n_con: int) -> Fraction:
    """The moderate choice ``2 / n_con`` for the sharing constant."""
    if n_con <= 2:
        raise DomainError(f"2/n_con must be < 1, got n_con={n_con}")
    return Fraction(2, n_con)


@dataclass(frozen=True)
class FeeSchedule:
    k: int
    shares: tuple[Fraction, ...]

    @property
    def total(self) -> Fraction:
        return sum(self.shares, Fraction(0))

    @property
    def leader_share(self) -> Fraction:
        return self.shares[-1]

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "shares": [f"{s.numerator}/{s.denominator}" for s in self.shares]})

    @classmethod
    def from_json(cls, text: str) -> "FeeSchedule":
        data = json.loads(text)
        shares = tuple(Fraction(s) for s in data["shares"])
        if len(shares) != data["k"]:
            raise DomainError("share count does not match k")
        return cls(int(data["k"]), shares)


def _check_k(k: int) -> None:
    if not isinstance(k, int) or k < 1:
        raise DomainError(f"path length k must be a positive integer, got {k!r}")


@lru_cache(maxsize=65536)
def share_of(params: FeeParameters, k: int, i: int) -> Fraction:
    """Share of position ``i`` on a path of length ``k``."""
    _check_k(k)
    if not isinstance(i, int) or not 1 <= i <= k:
        raise DomainError(f"position i must lie in 1..{k}, got {i!r}")
    keep = 1 - params.c
    if i == k:
        return params.fee * keep ** (k - 1)
    return params.fee * params.c * keep ** (i - 1)


def fee_shares(params: FeeParameters, k: int) -> FeeSchedule:
    _check_k(k)
    return FeeSchedule(k, tuple(share_of(params, k, i) for i in range(1, k + 1)))


def _leader_delta(f: ShareFunction, k: int, s: int) -> Fraction:
    return f(k, k) - sum((f(k + s, k + i) for i in range(s + 1)), Fraction(0))


def _intermediary_delta(f: ShareFunction, k: int, i: int, s: int) -> Fraction:
    return sum((f(k + s, j) for j in range(i, i + s + 1)), Fraction(0)) - f(k, i)


@lru_cache(maxsize=4096)
def _prefix_sums(params: FeeParameters, k: int) -> tuple[Fraction, ...]:
    """``out[j]`` is the total of positions ``1..j`` on a length-``k`` path."""
    out = [Fraction(0)]
    for i in range(1, k + 1):
        out.append(out[-1] + share_of(params, k, i))
    return tuple(out)


def sybil_delta_leader(params: FeeParameters, k: int, s: int) -> Fraction:
    """Leader's share minus what it would collect by padding the path with
    ``s`` fake identities of its own.  Non-negative means no Sybil gain."""
    _check_k(k)
    if s < 1:
        raise DomainError(f"s must be >= 1, got {s}")
    pre = _prefix_sums(params, k + s)
    return share_of(params, k, k) - (pre[k + s] - pre[k - 1])


def sybil_delta_intermediary(params: FeeParameters, k: int, i: int, s: int) -> Fraction:
    """Gain of intermediary ``i`` from inserting ``s`` Sybils after itself,
    assuming the padded path is accepted anyway (no competing path)."""
    _check_k(k)
    if not 1 <= i < k:
        raise DomainError(f"intermediary position must lie in 1..{k - 1}, got {i}")
    if s < 1:
        raise DomainError(f"s must be >= 1, got {s}")
    pre = _prefix_sums(params, k + s)
    return (pre[i + s] - pre[i - 1]) - share_of(params, k, i)


@dataclass(frozen=True)
class KnowledgeSnapshot:
    """Capacities as seen by one node: its own, the known set (itself
    included) and its still-unaware neighbours."""

    pi_self: Fraction
    pi_known: Fraction
    pi_unknown_neighbors: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("pi_self", "pi_known", "pi_unknown_neighbors"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if self.pi_self < 0 or self.pi_unknown_neighbors < 0:
            raise DomainError("capacities must be non-negative")
        if self.pi_known <= 0:
            raise DomainError("known capacity must be positive")
        if self.pi_self > self.pi_known:
            raise DomainError("own capacity cannot exceed the known capacity")


def expected_reward(params: FeeParameters, k: int, snapshot: KnowledgeSnapshot, x) -> Fraction:
    """Expected reward when neighbours of total capacity ``x`` receive the
    transaction from this node."""
    _check_k(k)
    x = as_fraction(x)
    if x < 0 or x > snapshot.pi_unknown_neighbors:
        raise DomainError(f"x must lie in [0, {snapshot.pi_unknown_neighbors}], got {x}")
    denom = snapshot.pi_known + x
    if denom == 0:
        raise DomainError("zero denominator")
    return (share_of(params, k, k) * snapshot.pi_self + share_of(params, k + 1, k) * x) / denom


def reward_slope_sign(params: FeeParameters, k: int, snapshot: KnowledgeSnapshot) -> int:
    """Sign of d/dx expected_reward; constant over the whole domain."""
    num = share_of(params, k + 1, k) * snapshot.pi_known - share_of(params, k, k) * snapshot.pi_self
    return (num > 0) - (num < 0)


def propagation_condition(c, pi_self, pi_known) -> bool:
    """True when a node holds strictly less than ``c`` of the known capacity."""
    c, pi_self, pi_known = as_fraction(c), as_fraction(pi_self), as_fraction(pi_known)
    if pi_known <= 0 or pi_self < 0 or pi_self > pi_known:
        raise DomainError("need 0 <= pi_self <= pi_known and pi_known > 0")
    return pi_self < c * pi_known


@dataclass(frozen=True)
class DecisionScenario:
    k: int
    fee: FeeParameters
    snapshot: KnowledgeSnapshot
    pi_cn: Fraction
    pi_ncn1: Fraction
    pi_ncn2: Fraction
    alpha: Fraction

    def __post_init__(self):
        for name in ("pi_cn", "pi_ncn1", "pi_ncn2", "alpha"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        _check_k(self.k)
        if min(self.pi_cn, self.pi_ncn1, self.pi_ncn2) < 0:
            raise DomainError("capacities must be non-negative")
        if not 0 <= self.alpha <= 1:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.pi_cn + self.pi_ncn1 != self.snapshot.pi_unknown_neighbors:
            raise DomainError("common and distinct neighbours must partition the unaware neighbours")


@dataclass(frozen=True)
class DecisionMatrix:
    """Expected rewards; first word is this node's action, second the rest."""

    not_not: Fraction
    not_prop: Fraction
    prop_not: Fraction
    prop_prop: Fraction

    def propagate_dominates(self) -> bool:
        return self.prop_not >= self.not_not and self.prop_prop >= self.not_prop


def decision_matrix(scenario: DecisionScenario) -> DecisionMatrix:
    p, k, snap = scenario.fee, scenario.k, scenario.snapshot
    own = share_of(p, k, k) * snap.pi_self
    fwd = share_of(p, k + 1, k)
    known, unknown = snap.pi_known, snap.pi_unknown_neighbors
    cn, ncn1, ncn2 = scenario.pi_cn, scenario.pi_ncn1, scenario.pi_ncn2
    return DecisionMatrix(
        not_not=own / known,
        not_prop=own / (known + cn + ncn2),
        prop_not=(own + fwd * unknown) / (known + unknown),
        prop_prop=(own + fwd * ncn1 + scenario.alpha * fwd * cn) / (known + unknown + ncn2),
    )


@dataclass(frozen=True)
class Violation:
    check: str
    k: int
    i: Optional[int] = None
    s: Optional[int] = None


@dataclass
class FeeFunctionReport:
    normalized_ok: bool = True
    permanence_ok: bool = True
    sybil_leader_ok: bool = True
    sybil_intermediary_profitable: bool = False
    leader_monotone_ok: bool = True
    incentive_ok: Optional[bool] = None
    first_violation: Optional[Violation] = None
    violations: list[Violation] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return (self.normalized_ok and self.permanence_ok and self.sybil_leader_ok
                and self.leader_monotone_ok and self.incentive_ok is not False)


class _Budgeted:
    def __init__(self, fn: ShareFunction, max_evals: Optional[int], deadline: Optional[float]):
        self.fn = fn
        self.max_evals = max_evals
        self.deadline = deadline
        self.evals = 0
        self.cache: dict[tuple[int, int], Fraction] = {}

    def __call__(self, k: int, i: int) -> Fraction:
        key = (k, i)
        if key in self.cache:
            return self.cache[key]
        self.evals += 1
        if self.max_evals is not None and self.evals > self.max_evals:
            raise EvaluationBudgetExceeded(f"more than {self.max_evals} evaluations")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise EvaluationBudgetExceeded("evaluation deadline passed")
        value = as_fraction(self.fn(k, i))
        self.cache[key] = value
        return value


def verify_fee_function(candidate: ShareFunction, k_max: int, s_max: int, *, fee=None, c=None,
                        max_evals: Optional[int] = None, timeout: Optional[float] = None) -> FeeFunctionReport:
    """Exhaustively check a share function against the Sybil-proofness and
    incentive conditions for every ``k <= k_max`` and ``s <= s_max``.

    ``fee`` defaults to ``candidate(1, 1)``.  The chain rule
    ``f(k+1, k) == c * f(k, k)`` is only checked when ``c`` is given.
    ``max_evals`` / ``timeout`` bound the work; they are checked between
    evaluations, so a single call that never returns cannot be interrupted.
    """
    deadline = None if timeout is None else time.monotonic() + timeout
    f = _Budgeted(candidate, max_evals, deadline)
    report = FeeFunctionReport()
    total = as_fraction(fee) if fee is not None else f(1, 1)
    c = None if c is None else as_fraction(c)

    def fail(v: Violation):
        report.violations.append(v)
        if report.first_violation is None:
            report.first_violation = v

    for k in range(1, k_max + 1):
        if sum((f(k, i) for i in range(1, k + 1)), Fraction(0)) != total:
            report.normalized_ok = False
            fail(Violation("normalized", k))
        # a propagator's share must not shrink when the path grows
        for i in range(1, k):
            if f(k + 1, i) < f(k, i):
                report.permanence_ok = False
                fail(Violation("permanence", k, i))
        for s in range(1, s_max + 1):
            if _leader_delta(f, k, s) < 0:
                report.sybil_leader_ok = False
                fail(Violation("sybil_leader", k, None, s))
            for i in range(1, k):
                if _intermediary_delta(f, k, i, s) > 0:
                    report.sybil_intermediary_profitable = True
        if not f(k, k) > f(k + 1, k + 1):
            report.leader_monotone_ok = False
            fail(Violation("leader_monotone", k))
        if c is not None:
            ok = f(k + 1, k) == c * f(k, k)
            report.incentive_ok = ok and report.incentive_ok is not False
            if not ok:
                fail(Violation("incentive", k))
    return report


def recheck_violation(candidate: ShareFunction, v: Violation, *, fee=None, c=None) -> bool:
    """Re-evaluate a single witness; True when it still fails."""
    f = lambda k, i: as_fraction(candidate(k, i))  # noqa: E731
    if v.check == "normalized":
        total = as_fraction(fee) if fee is not None else f(1, 1)
        return sum((f(v.k, i) for i in range(1, v.k + 1)), Fraction(0)) != total
    if v.check == "permanence":
        return f(v.k + 1, v.i) < f(v.k, v.i)
    if v.check == "sybil_leader":
        return _leader_delta(f, v.k, v.s) < 0
    if v.check == "leader_monotone":
        return not f(v.k, v.k) > f(v.k + 1, v.k + 1)
    if v.check == "incentive":
        return f(v.k + 1, v.k) != as_fraction(c) * f(v.k, v.k)
    raise DomainError(f"unknown check {v.check!r}")


def round_to_units(schedule: FeeSchedule, unit_denominator: int) -> list[int]:
    """Integer settlement: intermediaries get the floor of their exact share
    in base units, the leader gets everything left over."""
    if not isinstance(unit_denominator, int) or unit_denominator <= 0:
        raise DomainError(f"unit_denominator must be a positive integer, got {unit_denominator!r}")
    total = schedule.total * unit_denominator
    if total.denominator != 1:
        raise DomainError("fee is not a whole number of base units")
    out = [int((s * unit_denominator) // 1) for s in schedule.shares[:-1]]
    out.append(int(total) - sum(out))
    return out
