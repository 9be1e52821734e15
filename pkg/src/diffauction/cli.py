"""Command-line interface.

Subcommands: run (one auction on one instance), verify (IC/IR/axiom checks),
estimate (expected revenue of one cell), table (config-driven CSV report),
ratio (benchmark ratio), gen (graph generation / format conversion).

Exit codes: 0 ok, 1 check failed, 2 parse error, 3 precondition violated.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import DiffAuctionError, DomainError, ParseError, PreconditionError
from .mechanisms import cwm_fast_trace, parse_mechanism_id, potential_winners
from .network import (StructureProfile, generate_small_world, load_instance_file,
                      parse_edge_list, serialize_instance)
from .structures import resolve_structure
from .valuation import IdentityVirtualDistribution, UniformDistribution

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3


def _load_structure(token: str, seller_node=None) -> tuple[str, StructureProfile, dict | None]:
    if os.path.exists(token):
        structure, vals = load_instance_file(token, seller_node=seller_node)
        sid = os.path.splitext(os.path.basename(token))[0]
        return sid, structure, vals
    sid, structure = resolve_structure(token)
    return sid, structure, None


def _parse_dist(token: str | None):
    if token is None:
        return UniformDistribution(0.0, 1.0)
    parts = token.split(":")
    if parts[0] != "uniform" or len(parts) != 3:
        raise ParseError(f"expected uniform:<low>:<high>, got {token!r}", context="--dist")
    return UniformDistribution(float(parts[1]), float(parts[2]))


def _float_list(token: str, n: int, what: str) -> dict[int, float]:
    values = [v for v in token.split(",") if v]
    if len(values) != n:
        raise ParseError(f"{what} needs {n} comma-separated values, got {len(values)}",
                         context=what)
    try:
        return {i + 1: float(v) for i, v in enumerate(values)}
    except ValueError as exc:
        raise ParseError(f"bad number in {what}", context=what) from exc


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    sid, structure, file_vals = _load_structure(args.instance, args.seller_node)
    spec = parse_mechanism_id(args.mechanism)
    if args.virtual_bids:
        bids = _float_list(args.virtual_bids, structure.n, "--virtual-bids")
        lo = min(0.0, min(bids.values())) - 1.0
        hi = max(0.0, max(bids.values())) + 1.0
        dist = IdentityVirtualDistribution(lo, hi)
    else:
        dist = _parse_dist(args.dist)
        if args.valuations:
            bids = _float_list(args.valuations, structure.n, "--valuations")
        elif args.sample is not None:
            import numpy as np
            rng = np.random.default_rng(args.sample)
            bids = {i: float(dist.sample(rng)) for i in structure.buyers}
        elif file_vals and len(file_vals) == structure.n:
            bids = file_vals
        else:
            raise PreconditionError(
                "no valuations: pass --valuations, --virtual-bids, or --sample SEED")
    report = structure.truthful_report(bids)
    outcome = spec.run(report, dist)
    print(f"structure: {sid} (n={structure.n})")
    print(f"mechanism: {spec.mech_id}")
    print(f"winner: {outcome.winner if outcome.winner is not None else 'none'}")
    if outcome.winner is not None:
        print(f"payment: {outcome.payment(outcome.winner):.12g}")
    print(f"revenue: {outcome.revenue:.12g}")
    if args.explain:
        chain = potential_winners(report, dist)
        pretty = ", ".join(f"{b} (pays {p:.6g})" for b, p in chain) or "empty"
        print(f"potential-winner chain: {pretty}")
        print("frontier trace:")
        for step, (audience, interim, price) in enumerate(cwm_fast_trace(report, dist), 1):
            who = f"interim winner {interim} at {price:.6g}" if interim is not None \
                else "no interim winner"
            print(f"  step {step}: audience {{{', '.join(map(str, audience))}}}; {who}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .experiments import enumerate_structures
    from .verification import DeviationGrid, check_axioms, check_ic, check_ir

    dist = _parse_dist(args.dist)
    spec = parse_mechanism_id(args.mechanism)
    targets: list[tuple[str, StructureProfile]] = []
    if args.all_structures is not None:
        for k, s in enumerate(enumerate_structures(args.all_structures)):
            targets.append((f"n{args.all_structures}-c{k:02d}", s))
    elif args.instance:
        sid, structure, _ = _load_structure(args.instance, args.seller_node)
        targets.append((sid, structure))
    else:
        raise PreconditionError("verify needs an instance or --all-structures N")
    grid = DeviationGrid.make(dist, points=args.grid)
    reports = []
    all_ok = True
    for sid, structure in targets:
        ir = check_ir(spec, structure, dist, grid)
        ic = check_ic(spec, structure, dist, grid)
        ax = check_axioms(spec, structure, dist, trials=args.trials, seed=args.seed)
        ok = not ir and not ic and ax.passed
        all_ok &= ok
        reports.append({
            "mechanism": spec.mech_id,
            "structure_id": sid,
            "checks": {"ir": "pass" if not ir else "fail",
                       "ic": "pass" if not ic else "fail",
                       "axioms": "pass" if ax.passed else "fail"},
            "violations": [v.as_dict() for v in (ir + ic)[:args.max_violations]],
            "note": "grid-based check: evidence of IC/IR on the finite grid, not a proof",
        })
    payload = reports[0] if len(reports) == 1 else reports
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def _cmd_estimate(args) -> int:
    from .experiments import monte_carlo_revenue, quadrature_estimate

    sid, structure, _ = _load_structure(args.instance, args.seller_node)
    spec = parse_mechanism_id(args.mechanism)
    dist = _parse_dist(args.dist)
    if args.mode == "quad":
        est = quadrature_estimate(spec, structure, dist, args.nodes,
                                  args.check_nodes, structure_id=sid)
    else:
        est = monte_carlo_revenue(spec, structure, dist, args.samples, args.seed,
                                  structure_id=sid)
    _emit(json.dumps(est.__dict__, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_table(args) -> int:
    from .experiments import parse_config, table_report

    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ParseError(str(exc), context=args.config) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", context=f"{args.config}:{exc.lineno}") from exc
    if args.samples is not None:
        data["samples"] = args.samples
    if args.seed is not None:
        data["seed"] = args.seed
    if args.mode is not None:
        data["mode"] = {"mc": "monte-carlo", "quad": "quadrature"}[args.mode]
    config = parse_config(data, base_dir=os.path.dirname(os.path.abspath(args.config)))
    _emit(table_report(config), args.out)
    return EXIT_OK


def _cmd_ratio(args) -> int:
    from .experiments import approximation_ratio

    sid, structure, _ = _load_structure(args.instance, args.seller_node)
    spec = parse_mechanism_id(args.mechanism)
    dist = _parse_dist(args.dist)
    mode = "quadrature" if args.mode == "quad" else "monte-carlo"
    value = approximation_ratio(spec, structure, dist, mode=mode,
                                samples=args.samples, seed=args.seed,
                                nodes_per_dim=args.nodes)
    _emit(json.dumps({"structure_id": sid, "mechanism": spec.mech_id,
                      "mode": mode, "ratio": value}, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_gen(args) -> int:
    if args.small_world:
        n, degree, prob = int(args.small_world[0]), int(args.small_world[1]), \
            float(args.small_world[2])
        attach, attach_k = "designate", 1
        if args.attach:
            if args.attach == "designate":
                pass
            elif args.attach.startswith("random:"):
                attach, attach_k = "random", int(args.attach.split(":", 1)[1])
            else:
                raise ParseError(f"bad --attach {args.attach!r} "
                                 "(designate or random:<k>)", context="--attach")
        structure = generate_small_world(n, degree, prob, args.seed,
                                         attach=attach, attach_k=attach_k)
    elif args.from_edge_list:
        with open(args.from_edge_list, "r", encoding="utf-8") as handle:
            structure, _ = parse_edge_list(handle.read(), seller_node=args.seller_node)
    else:
        raise PreconditionError("gen needs --small-world N DEGREE P or --from-edge-list FILE")
    _emit(serialize_instance(structure), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffauction",
        description="Diffusion auctions: mechanisms, verifiers, revenue experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dist=True):
        p.add_argument("--seller-node", type=int, default=None,
                       help="designate this node as the seller when reading edge lists")
        p.add_argument("--out", "-o", default=None, help="write output to this file")
        if dist:
            p.add_argument("--dist", default=None,
                           help="valuation prior, e.g. uniform:0:1 (default)")

    p_run = sub.add_parser("run", help="run one mechanism on one instance")
    p_run.add_argument("instance", help="instance file or named structure")
    p_run.add_argument("mechanism", help="mechanism id, e.g. cwm, kpwm:3, cwm-srp1")
    p_run.add_argument("--valuations", help="comma-separated valuations by buyer id")
    p_run.add_argument("--virtual-bids",
                       help="comma-separated virtual bids (pedagogical mode: payments "
                            "are then virtual-space values)")
    p_run.add_argument("--sample", type=int, default=None, metavar="SEED",
                       help="draw valuations from the prior with this seed")
    p_run.add_argument("--explain", action="store_true",
                       help="print the potential-winner chain and frontier trace")
    common(p_run)

    p_verify = sub.add_parser("verify", help="IC/IR/axiom checks")
    p_verify.add_argument("mechanism")
    p_verify.add_argument("instance", nargs="?", default=None)
    p_verify.add_argument("--all-structures", type=int, default=None, metavar="N",
                          help="check every connected structure with N buyers")
    p_verify.add_argument("--grid", type=int, default=11, help="bid grid points")
    p_verify.add_argument("--trials", type=int, default=100, help="axiom-check trials")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--max-violations", type=int, default=20)
    common(p_verify)

    p_est = sub.add_parser("estimate", help="expected revenue of one cell")
    p_est.add_argument("instance")
    p_est.add_argument("mechanism")
    p_est.add_argument("--samples", type=int, default=100_000)
    p_est.add_argument("--seed", type=int, default=0)
    p_est.add_argument("--mode", choices=["mc", "quad"], default="mc")
    p_est.add_argument("--nodes", type=int, default=64)
    p_est.add_argument("--check-nodes", type=int, default=96)
    common(p_est)

    p_table = sub.add_parser("table", help="config-driven CSV revenue report")
    p_table.add_argument("--config", required=True)
    p_table.add_argument("--samples", type=int, default=None)
    p_table.add_argument("--seed", type=int, default=None)
    p_table.add_argument("--mode", choices=["mc", "quad"], default=None)
    common(p_table, dist=False)

    p_ratio = sub.add_parser("ratio", help="revenue ratio against the all-buyers benchmark")
    p_ratio.add_argument("instance")
    p_ratio.add_argument("mechanism")
    p_ratio.add_argument("--samples", type=int, default=100_000)
    p_ratio.add_argument("--seed", type=int, default=0)
    p_ratio.add_argument("--mode", choices=["mc", "quad"], default="mc")
    p_ratio.add_argument("--nodes", type=int, default=64)
    common(p_ratio)

    p_gen = sub.add_parser("gen", help="generate or convert instances")
    p_gen.add_argument("--small-world", nargs=3, metavar=("N", "DEGREE", "P"))
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--attach", default=None,
                       help="seller attachment: designate (default) or random:<k>")
    p_gen.add_argument("--from-edge-list", default=None)
    common(p_gen, dist=False)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "verify": _cmd_verify, "estimate": _cmd_estimate,
                "table": _cmd_table, "ratio": _cmd_ratio, "gen": _cmd_gen}
    try:
        return handlers[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PreconditionError, DomainError) as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except DiffAuctionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
