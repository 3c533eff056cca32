"""Leader-directed routing: the credential flood that builds gradient
pointers, transaction forwarding along them, fault injection and the
bandwidth / failure-rate sweeps.

The delay model is one tick per hop.  A node's gradient is the neighbour
its first credential copy came from; simultaneous arrivals are resolved by a
seeded per-node priority, so the tree shape is reproducible but not tied to
node ids.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from propnet import kernels
from propnet.errors import DomainError
from propnet.seeding import as_generator, substream
from propnet.topology import GenParams, NetworkGraph, assign_capacities, generate_hybrid

FAILURE_COLUMNS = ["N", "n_con", "h", "trials", "failed", "sim_rate", "analytic_rate"]
COMMUNICATION_COLUMNS = ["N", "n_con", "trials", "mean_nodes_visited", "mean_messages", "reduction_vs_flood"]


@dataclass(frozen=True)
class GradientTable:
    leader: int
    parent: np.ndarray
    depth: np.ndarray
    priority: np.ndarray

    def path_to_leader(self, node: int) -> list[int]:
        """Nodes visited from ``node`` up to and including the leader."""
        out = [node]
        while out[-1] != self.leader:
            out.append(int(self.parent[out[-1]]))
        return out


def tiebreak_priority(n: int, tiebreak_seed) -> np.ndarray:
    return as_generator(tiebreak_seed).permutation(n).astype(np.int64)


def recognition_phase(g: NetworkGraph, leader: int, tiebreak_seed=0) -> GradientTable:
    if not 0 <= leader < g.n_nodes:
        raise DomainError(f"leader {leader} out of range")
    priority = tiebreak_priority(g.n_nodes, tiebreak_seed)
    parent, depth = kernels.gradient_tree(g.indptr, g.indices, int(leader), priority)
    if np.any(depth < 0):
        raise DomainError("graph is not connected")
    return GradientTable(int(leader), parent, depth, priority)


@dataclass(frozen=True)
class FaultModel:
    """Nodes that went down (or censor) right after the credential flood."""

    h: float
    failed: np.ndarray  # uint8 mask

    @classmethod
    def none(cls, n: int) -> "FaultModel":
        return cls(0.0, np.zeros(n, dtype=np.uint8))

    @classmethod
    def from_uniforms(cls, uniforms: np.ndarray, h: float, exclude: Iterable[int] = ()) -> "FaultModel":
        """``failed = uniforms < h``; reusing the same draws across ``h``
        gives nested failure sets."""
        if not 0 <= h <= 1:
            raise DomainError(f"h must lie in [0, 1], got {h}")
        mask = (uniforms < h).astype(np.uint8)
        for u in exclude:
            mask[u] = 0
        return cls(float(h), mask)

    @classmethod
    def sample(cls, n: int, h: float, rng, exclude: Iterable[int] = ()) -> "FaultModel":
        return cls.from_uniforms(as_generator(rng).random(n), h, exclude)

    @property
    def failed_set(self) -> set[int]:
        return set(np.flatnonzero(self.failed).tolist())


@dataclass(frozen=True)
class RoundMetrics:
    """Outcome of one transaction.  ``nodes_visited`` counts the client."""

    nodes_visited: int
    messages_sent: int
    delivered: bool
    path_len_delivered: Optional[int]
    baseline_flood_nodes: int


def transaction_phase(g: NetworkGraph, table: GradientTable, client: int, out_degree: int,
                      faults: Optional[FaultModel] = None) -> RoundMetrics:
    """Client hands the transaction to its ``out_degree`` lowest-depth
    neighbours; every first-time recipient that has not failed passes it to
    its gradient parent."""
    if client == table.leader:
        raise DomainError("client must differ from the leader")
    if out_degree < 1:
        raise DomainError("out_degree must be >= 1")
    if faults is None:
        faults = FaultModel.none(g.n_nodes)
    failed = faults.failed
    if failed[client] or failed[table.leader]:
        failed = failed.copy()
        failed[client] = failed[table.leader] = 0
    visited, messages, delivered, path_len = kernels.forward_transaction(
        g.indptr, g.indices, table.parent, table.depth, table.priority,
        int(client), table.leader, int(out_degree), failed)
    return RoundMetrics(int(visited), int(messages), bool(delivered),
                        int(path_len) if delivered else None, g.n_nodes)


def entry_neighbors(g: NetworkGraph, table: GradientTable, client: int, out_degree: int) -> list[int]:
    """The neighbours whose credential copies reach ``client`` first."""
    return kernels.entry_points(g.indptr, g.indices, table.depth, table.priority,
                                int(client), int(out_degree)).tolist()


def analytic_failure_probability(n: int, n_con: int, h: float) -> float:
    """``(1 - (1-h)^(ln N / ln ln N - 1))^n_con``."""
    if n < 3:
        raise DomainError("n must be >= 3 for ln ln N > 0")
    if not 0 <= h <= 1:
        raise DomainError(f"h must lie in [0, 1], got {h}")
    hops = math.log(n) / math.log(math.log(n)) - 1
    return (1 - (1 - h) ** hops) ** n_con


def choose_leader(g: NetworkGraph, rng) -> int:
    """Capacity-weighted leader draw."""
    p = g.capacity / g.capacity.sum()
    return int(as_generator(rng).choice(g.n_nodes, p=p))


def choose_clients(g: NetworkGraph, leader: int, count: int, rng) -> list[int]:
    """``count`` distinct non-leader clients (all of them if fewer exist)."""
    pool = np.array([u for u in range(g.n_nodes) if u != leader], dtype=np.int64)
    count = min(count, len(pool))
    return as_generator(rng).choice(pool, size=count, replace=False).tolist()


def run_round(g: NetworkGraph, leader: int, clients: Sequence[int], out_degree: int, h: float = 0.0,
              seed: int = 0, table: Optional[GradientTable] = None) -> list[RoundMetrics]:
    """One round: a shared gradient table, independent faults per client.

    Fault draws for the ``j``-th client come from ``substream(seed, 1, j)``;
    the tie-break for the table from ``substream(seed, 0)``.
    """
    if table is None:
        table = recognition_phase(g, leader, substream(seed, 0))
    out = []
    for j, client in enumerate(clients):
        faults = FaultModel.sample(g.n_nodes, h, substream(seed, 1, j), exclude=(leader, client))
        out.append(transaction_phase(g, table, client, out_degree, faults))
    return out


@dataclass(frozen=True)
class FailureRow:
    N: int
    n_con: int
    h: float
    trials: int
    failed: int
    sim_rate: float
    analytic_rate: float

    @property
    def gap(self) -> float:
        return self.sim_rate - self.analytic_rate


@dataclass(frozen=True)
class CommunicationRow:
    N: int
    n_con: int
    trials: int
    mean_nodes_visited: float
    mean_messages: float
    reduction_vs_flood: float


def _point_graph(master: int, n: int, n_con: int, gi: int, capacity_scheme: str) -> NetworkGraph:
    g = generate_hybrid(GenParams(n, n_con, rng_seed=int(substream(master, 1, n, n_con, gi).integers(2**63))))
    if capacity_scheme != "uniform":
        g = assign_capacities(g, capacity_scheme, substream(master, 4, n, n_con, gi))
    return g


def _split(trials: int, graphs: int) -> list[int]:
    base, extra = divmod(trials, graphs)
    return [base + (1 if gi < extra else 0) for gi in range(graphs)]


def failure_sweep(ns: Sequence[int], n_cons: Sequence[int], hs: Sequence[float], *, trials: int = 1000,
                  graphs: int = 30, out_degree: Optional[int] = None, master_seed: int = 0,
                  capacity_scheme: str = "uniform") -> list[FailureRow]:
    """Simulated vs. approximate failure rate over a grid.

    Per (N, n_con) point, ``graphs`` hybrid graphs share the ``trials``
    transactions.  Each transaction draws a fresh leader-independent client
    and one uniform per node; node failure is ``uniform < h``, so the same
    draws are reused for every ``h`` and the failure sets are nested.
    ``out_degree`` defaults to ``n_con``.
    """
    if not ns or not n_cons or not hs:
        raise DomainError("grid must be non-empty")
    if trials < 1 or graphs < 1:
        raise DomainError("trials and graphs must be positive")
    rows = []
    for n in sorted(ns):
        for n_con in sorted(n_cons):
            deg = n_con if out_degree is None else out_degree
            failed = {h: 0 for h in hs}
            done = 0
            for gi, count in enumerate(_split(trials, graphs)):
                if count == 0:
                    continue
                g = _point_graph(master_seed, n, n_con, gi, capacity_scheme)
                leader = choose_leader(g, substream(master_seed, 2, n, n_con, gi))
                table = recognition_phase(g, leader, substream(master_seed, 5, n, n_con, gi))
                client_rng = substream(master_seed, 3, n, n_con, gi)
                for t in range(count):
                    client = int(client_rng.integers(0, n - 1))
                    client += client >= leader
                    uniforms = substream(master_seed, 6, n, n_con, gi, t).random(n)
                    for h in hs:
                        faults = FaultModel.from_uniforms(uniforms, h, exclude=(leader, client))
                        if not transaction_phase(g, table, client, deg, faults).delivered:
                            failed[h] += 1
                done += count
            for h in sorted(hs):
                rows.append(FailureRow(n, n_con, float(h), done, failed[h], failed[h] / done,
                                       analytic_failure_probability(n, n_con, h)))
    return rows


def communication_sweep(ns: Sequence[int], n_cons: Sequence[int], *, clients: int = 100, graphs: int = 30,
                        out_degree: Optional[int] = None, master_seed: int = 0,
                        capacity_scheme: str = "uniform") -> list[CommunicationRow]:
    """Mean nodes reached per transaction without faults, vs. flooding all N."""
    rows = []
    for n in sorted(ns):
        for n_con in sorted(n_cons):
            deg = n_con if out_degree is None else out_degree
            metrics: list[RoundMetrics] = []
            for gi in range(graphs):
                g = _point_graph(master_seed, n, n_con, gi, capacity_scheme)
                leader = choose_leader(g, substream(master_seed, 2, n, n_con, gi))
                cl = choose_clients(g, leader, clients, substream(master_seed, 3, n, n_con, gi))
                metrics += run_round(g, leader, cl, deg, 0.0, seed=int(substream(master_seed, 5, n, n_con, gi).integers(2**63)))
            rows.append(summarize_communication(n, n_con, metrics))
    return rows


def summarize_communication(n: int, n_con: int, metrics: Sequence[RoundMetrics]) -> CommunicationRow:
    if not metrics:
        raise DomainError("no rounds to summarise")
    visited = float(np.mean([m.nodes_visited for m in metrics]))
    messages = float(np.mean([m.messages_sent for m in metrics]))
    return CommunicationRow(n, n_con, len(metrics), visited, messages, 1.0 - visited / n)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows, columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in columns])
    return buf.getvalue()
