"""Rational spreading of one transaction.

A knowing node with unaware neighbours forwards to all of them or to none,
and forwards only while its own capacity is strictly below ``c`` times the
capacity it believes already knows the transaction.

Two beliefs are supported:

``global``
    the true capacity of every knowing node (an optimistic bound).
``local``
    what the node can observe.  Each node keeps a set of nodes it knows to
    be aware: itself, every node it sent to or heard from, and whatever set
    the senders attached to their messages.  A sender's set already holds
    its own neighbourhood once it has forwarded, so the set a node sees is
    the union of the closed neighbourhoods along the chain it was reached
    by.  This estimator is a modelling choice of this package.

The client always forwards.  Scheduling within a step is a seeded random
order; the loop stops after a step in which nobody forwarded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from propnet.errors import DomainError
from propnet.fees import as_fraction
from propnet.seeding import as_generator
from propnet.topology import NetworkGraph

KNOWLEDGE_MODELS = ("local", "global")


@dataclass
class DiffusionState:
    knows: np.ndarray  # bool per node
    frontier: set[int]
    pi_known_global: float
    trace: list[tuple[int, int, str]] = field(default_factory=list)
    c: Fraction = Fraction(0)
    client: int = 0
    knowledge_model: str = "local"
    estimates: dict[int, float] = field(default_factory=dict)
    capacity_total: float = 1.0
    capacity: Optional[np.ndarray] = None
    pi_history: list[float] = field(default_factory=list)

    def trace_jsonl(self) -> str:
        return "".join(json.dumps({"step": s, "node": n, "action": a}) + "\n" for s, n, a in self.trace)


def _frontier(adj: list[list[int]], knows: np.ndarray) -> set[int]:
    return {u for u in np.flatnonzero(knows).tolist() if any(not knows[v] for v in adj[u])}


def simulate_diffusion(g: NetworkGraph, c, client: int, knowledge_model: str = "local", seed=0,
                       max_steps: Optional[int] = None) -> DiffusionState:
    c = as_fraction(c)
    if not 0 < c < 1:
        raise DomainError(f"c must lie in (0, 1), got {c}")
    if not 0 <= client < g.n_nodes:
        raise DomainError(f"client {client} out of range")
    if knowledge_model not in KNOWLEDGE_MODELS:
        raise DomainError(f"knowledge_model must be one of {KNOWLEDGE_MODELS}")
    rng = as_generator(seed)
    n = g.n_nodes
    cap = g.capacity
    cf = float(c)
    adj = g.adjacency_lists()
    local = knowledge_model == "local"

    knows = np.zeros(n, dtype=bool)
    sent = np.zeros(n, dtype=bool)
    belief: dict[int, np.ndarray] = {}
    trace: list[tuple[int, int, str]] = []
    history: list[float] = []
    pi_global = 0.0

    def learn(u: int) -> None:
        nonlocal pi_global
        if not knows[u]:
            knows[u] = True
            pi_global += float(cap[u])
            if local:
                b = np.zeros(n, dtype=bool)
                b[u] = True
                belief[u] = b

    def forward(u: int, step: int) -> None:
        sent[u] = True
        trace.append((step, u, "propagate"))
        if local:
            belief[u][adj[u]] = True
        for v in adj[u]:
            learn(v)
            if local:
                belief[v] |= belief[u]
        history.append(pi_global)

    def estimate(u: int) -> float:
        if local:
            return float(cap[belief[u]].sum())
        return pi_global

    learn(client)
    forward(client, 0)
    step = 0
    while max_steps is None or step < max_steps:
        step += 1
        frontier = [u for u in np.flatnonzero(knows & ~sent).tolist() if any(not knows[v] for v in adj[u])]
        if not frontier:
            break
        progressed = False
        for u in rng.permutation(frontier).tolist():
            if sent[u] or all(knows[v] for v in adj[u]):
                continue
            if cap[u] < cf * estimate(u):
                forward(u, step)
                progressed = True
        if not progressed:
            break

    final_frontier = _frontier(adj, knows)
    estimates = {u: estimate(u) for u in sorted(final_frontier)}
    for u in sorted(final_frontier):
        trace.append((step, u, "stall"))
    return DiffusionState(knows=knows, frontier=final_frontier, pi_known_global=pi_global, trace=trace,
                          c=c, client=client, knowledge_model=knowledge_model, estimates=estimates,
                          capacity_total=float(cap.sum()), capacity=cap, pi_history=history)


@dataclass(frozen=True)
class CoverageReport:
    fraction_nodes: float
    fraction_capacity: float
    stalled: bool
    stall_witnesses: list[tuple[int, float, float]]


def coverage_report(state: DiffusionState) -> CoverageReport:
    """Witnesses are ``(node, own capacity, believed known capacity)`` for
    every frontier node left at termination."""
    n = len(state.knows)
    witnesses = [(u, float(state.capacity[u]), state.estimates[u]) for u in sorted(state.frontier)]
    return CoverageReport(
        fraction_nodes=float(state.knows.sum()) / n,
        fraction_capacity=float(state.capacity[state.knows].sum() / state.capacity.sum()),
        stalled=bool(state.frontier),
        stall_witnesses=witnesses,
    )
