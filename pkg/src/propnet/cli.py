"""Command-line experiment driver.

Every subcommand takes ``--config FILE``: a JSON object whose keys mirror
the long flags (``out_degree`` or ``out-degree``); flags given on the
command line win.  ``PROPNET_SEED`` overrides ``--seed``.  Exit codes: 0 ok,
2 bad arguments, 3 domain error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from propnet.errors import DomainError, MiningBudgetExhausted
from propnet.seeding import env_seed, substream

EXIT_OK, EXIT_ARGS, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4


def _emit(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _fraction(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def cmd_fee_shares(args) -> int:
    from propnet.fees import FeeParameters, fee_shares, round_to_units, share_of, verify_fee_function

    params = FeeParameters(args.fee, args.c)
    schedule = fee_shares(params, args.k)
    units = round_to_units(schedule, args.units) if args.units else None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "role", "share", "share_float"] + (["units"] if units else []))
    for i, s in enumerate(schedule.shares, start=1):
        row = [i, "leader" if i == args.k else "intermediary", f"{s.numerator}/{s.denominator}", repr(float(s))]
        w.writerow(row + ([units[i - 1]] if units else []))
    _emit(buf.getvalue(), args.csv)
    if args.verify:
        rep = verify_fee_function(lambda k, i: share_of(params, k, i), 20, 20, fee=params.fee, c=params.c)
        for name in ("normalized_ok", "permanence_ok", "sybil_leader_ok", "sybil_intermediary_profitable",
                     "leader_monotone_ok", "incentive_ok"):
            print(f"# {name}={getattr(rep, name)}", file=sys.stderr)
        if not rep.all_ok:
            print(f"# first violation: {rep.first_violation}", file=sys.stderr)
            return EXIT_DOMAIN
    return EXIT_OK


def cmd_gen_network(args) -> int:
    from propnet.topology import GenParams, assign_capacities, generate_hybrid, write_graph

    g = generate_hybrid(GenParams(args.n, args.ncon, er_seed_size=args.er_size, er_edge_prob=args.er_p,
                                  rng_seed=args.seed))
    g = assign_capacities(g, args.capacity, substream(args.seed, 99))
    meta = {"n_con": args.ncon, "seed": args.seed, "capacity": args.capacity,
            "er_size": args.er_size, "er_p": args.er_p}
    cpath = write_graph(g, args.out, meta)
    print(f"wrote {args.out} ({g.n_nodes} nodes, {g.n_edges} edges) and {cpath}", file=sys.stderr)
    return EXIT_OK


def _load(path):
    from propnet.topology import read_graph

    return read_graph(path)


def cmd_simulate_routing(args) -> int:
    from propnet.routing import (
        COMMUNICATION_COLUMNS, FAILURE_COLUMNS, FailureRow, analytic_failure_probability, choose_clients,
        choose_leader, recognition_phase, rows_to_csv, run_round, summarize_communication,
    )

    g, meta = _load(args.graph)
    n_con = int(meta.get("n_con", args.out_degree))
    metrics = []
    for t in range(args.trials):
        if args.leader == "auto":
            leader = choose_leader(g, substream(args.seed, 1, t))
        else:
            leader = int(args.leader)
            if not 0 <= leader < g.n_nodes:
                raise DomainError(f"leader {leader} out of range")
        table = recognition_phase(g, leader, substream(args.seed, 2, t))
        clients = choose_clients(g, leader, args.clients, substream(args.seed, 3, t))
        metrics += run_round(g, leader, clients, args.out_degree, args.h,
                             seed=int(substream(args.seed, 4, t).integers(2**63)), table=table)
    comm = summarize_communication(g.n_nodes, n_con, metrics)
    _emit(rows_to_csv([comm], COMMUNICATION_COLUMNS), args.csv)
    failed = sum(not m.delivered for m in metrics)
    analytic = analytic_failure_probability(g.n_nodes, n_con, args.h) if g.n_nodes >= 3 else float("nan")
    row = FailureRow(g.n_nodes, n_con, float(args.h), len(metrics), failed, failed / len(metrics), analytic)
    if args.failure_csv:
        _emit(rows_to_csv([row], FAILURE_COLUMNS), args.failure_csv)
    print(f"# delivery_rate={1 - row.sim_rate!r} reduction_vs_flood={comm.reduction_vs_flood!r}", file=sys.stderr)
    return EXIT_OK


def cmd_failure_sweep(args) -> int:
    from propnet.routing import FAILURE_COLUMNS, failure_sweep, rows_to_csv

    rows = failure_sweep(_ints(args.n), _ints(args.ncon), _floats(args.h), trials=args.trials, graphs=args.graphs,
                         out_degree=args.out_degree, master_seed=args.seed, capacity_scheme=args.capacity)
    _emit(rows_to_csv(rows, FAILURE_COLUMNS), args.csv)
    for r in rows:
        print(f"# N={r.N} n_con={r.n_con} h={r.h} gap={r.gap:+.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_communication_sweep(args) -> int:
    from propnet.routing import COMMUNICATION_COLUMNS, communication_sweep, rows_to_csv

    rows = communication_sweep(_ints(args.n), _ints(args.ncon), clients=args.clients, graphs=args.graphs,
                               out_degree=args.out_degree, master_seed=args.seed, capacity_scheme=args.capacity)
    _emit(rows_to_csv(rows, COMMUNICATION_COLUMNS), args.csv)
    return EXIT_OK


DIFFUSION_COLUMNS = ["trial", "client", "knowledge", "c", "fraction_nodes", "fraction_capacity", "stalled",
                     "stall_witnesses"]


def cmd_simulate_diffusion(args) -> int:
    from propnet.diffusion import coverage_report, simulate_diffusion

    g, _ = _load(args.graph)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIFFUSION_COLUMNS)
    traces = []
    for t in range(args.trials):
        rng = substream(args.seed, 1, t)
        client = int(rng.integers(g.n_nodes)) if args.client == "random" else int(args.client)
        state = simulate_diffusion(g, args.c, client, args.knowledge, substream(args.seed, 2, t))
        rep = coverage_report(state)
        w.writerow([t, client, args.knowledge, f"{args.c.numerator}/{args.c.denominator}",
                    repr(rep.fraction_nodes), repr(rep.fraction_capacity), int(rep.stalled),
                    len(rep.stall_witnesses)])
        traces.append(state.trace_jsonl())
    _emit(buf.getvalue(), args.csv)
    if args.trace:
        Path(args.trace).write_text("".join(traces))
    return EXIT_OK


def cmd_demo_block(args) -> int:
    from propnet.protocol import demo_block

    g, meta = _load(args.graph)
    out_degree = args.out_degree or int(meta.get("n_con", 8))
    result = demo_block(g, args.txs, args.seed, out_degree=out_degree, c=args.c, tamper=args.tamper,
                        committed=args.commit, target_m=1 << (256 - args.target_bits))
    rep = result.report()
    _emit(json.dumps(rep, indent=2, sort_keys=True) + "\n", args.out)
    if args.block_bin:
        Path(args.block_bin).write_bytes(result.block.serialize())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="propnet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file of default flag values")
        sp.set_defaults(func=func)
        return sp

    sp = add("fee-shares", cmd_fee_shares, "exact fee schedule for one path length")
    sp.add_argument("--fee", type=_fraction, required=True)
    sp.add_argument("--c", type=_fraction, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--units", type=int, default=0, help="base units per fee unit for integer settlement")
    sp.add_argument("--verify", action="store_true", help="check the sharing rule up to k=20, s=20")
    sp.add_argument("--csv")

    sp = add("gen-network", cmd_gen_network, "hybrid ER + preferential-attachment graph")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--ncon", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--capacity", default="uniform")
    sp.add_argument("--er-size", type=int, default=50)
    sp.add_argument("--er-p", type=float, default=0.5)

    sp = add("simulate-routing", cmd_simulate_routing, "gradient routing on a stored graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--leader", default="auto")
    sp.add_argument("--clients", type=int, default=100)
    sp.add_argument("--out-degree", type=int, default=8)
    sp.add_argument("--h", type=float, default=0.0)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--csv")
    sp.add_argument("--failure-csv")

    sp = add("failure-sweep", cmd_failure_sweep, "failure rate over an (N, n_con, h) grid")
    sp.add_argument("--n", default="1000", help="comma-separated node counts")
    sp.add_argument("--ncon", default="8")
    sp.add_argument("--h", default="0.1,0.2,0.3")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--graphs", type=int, default=30)
    sp.add_argument("--out-degree", type=int, default=None)
    sp.add_argument("--capacity", default="uniform")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--csv")

    sp = add("communication-sweep", cmd_communication_sweep, "nodes reached per transaction vs. flooding")
    sp.add_argument("--n", default="1000")
    sp.add_argument("--ncon", default="8")
    sp.add_argument("--clients", type=int, default=100)
    sp.add_argument("--graphs", type=int, default=30)
    sp.add_argument("--out-degree", type=int, default=None)
    sp.add_argument("--capacity", default="uniform")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--csv")

    sp = add("simulate-diffusion", cmd_simulate_diffusion, "rational spreading coverage")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--c", type=_fraction, default=Fraction(1, 4))
    sp.add_argument("--client", default="random")
    sp.add_argument("--knowledge", choices=["local", "global"], default="local")
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--csv")
    sp.add_argument("--trace", help="JSON-lines event log")

    sp = add("demo-block", cmd_demo_block, "one full round ending in a block and fee claims")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--txs", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--block-bin", help="also write the binary block serialization")
    sp.add_argument("--tamper", type=int, default=0, help="forge the first N transactions at the leader")
    sp.add_argument("--commit", action="store_true", help="relays publish commitments instead of keys")
    sp.add_argument("--out-degree", type=int, default=None)
    sp.add_argument("--c", type=_fraction, default=None)
    sp.add_argument("--target-bits", type=int, default=8, help="mining target is 2**(256 - bits)")
    return p


def _config_path(argv):
    for j, tok in enumerate(argv):
        if tok == "--config" and j + 1 < len(argv):
            return argv[j + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _parse(parser: argparse.ArgumentParser, argv):
    argv = list(sys.argv[1:] if argv is None else argv)
    cfg_path = _config_path(argv)
    if cfg_path is not None:
        command = next((tok for tok in argv if not tok.startswith("-")), None)
        choices = parser._subparsers._group_actions[0].choices  # noqa: SLF001
        if command in choices:
            try:
                cfg = json.loads(Path(cfg_path).read_text())
            except OSError as exc:
                raise _IOFailure(str(exc)) from exc
            except json.JSONDecodeError as exc:
                parser.error(f"config file is not valid JSON: {exc}")
            if not isinstance(cfg, dict):
                parser.error("config file must hold a JSON object")
            sub = choices[command]
            actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
            defaults = {}
            for key, value in cfg.items():
                dest = key.replace("-", "_")
                if dest not in actions or dest in ("help", "config"):
                    parser.error(f"unknown config key {key!r}")
                action = actions[dest]
                # argparse only converts string defaults; JSON numbers for typed flags need help
                if action.type is not None and not isinstance(value, (str, bool)) and value is not None:
                    value = action.type(str(value))
                defaults[dest] = value
                action.required = False
            sub.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if hasattr(args, "seed"):
        args.seed = env_seed(args.seed)
    return args


class _IOFailure(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _parse(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except _IOFailure as exc:
        print(f"propnet: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return args.func(args)
    except (DomainError, MiningBudgetExhausted) as exc:
        print(f"propnet: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"propnet: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
