"""Command-line front end.

Subcommands: ``estimate`` (evaluate one decomposition set), ``search``
(tabu search for a good set), ``oracle`` (exhaustive total over a small
family), ``encode`` (emit a cipher instance as DIMACS plus a JSON sidecar),
and ``verify-supbs`` (check the unit-propagation backdoor property).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import ciphers
from .cnf import CnfFormula, dump_dimacs, load_dimacs
from .decomposition import DecompositionSet, draw_sample
from .predictive import (
    DEFAULT_GAMMA,
    DEFAULT_SAMPLE_SIZE,
    EstimateStatus,
    exhaustive_total,
)
from .runner import RunConfig, RunRecord, run_estimate, run_tabu
from .solver import CdclSolver, CostMetric
from .tabu import SupbsVerificationError, init_from_supbs

_METRICS = {
    "wall": CostMetric.WALL_TIME,
    "wall_time": CostMetric.WALL_TIME,
    "decisions": CostMetric.DECISIONS,
    "propagations": CostMetric.PROPAGATIONS,
}


def _parse_vars(text: str) -> tuple[int, ...]:
    if not text.strip():
        return ()
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def _parse_bits(text: str) -> tuple[int, ...]:
    if set(text) <= {"0", "1"}:
        return tuple(int(c) for c in text)
    raise argparse.ArgumentTypeError("bit string must consist of 0s and 1s")


def _build_generator(args) -> ciphers.GeneratorSpec:
    family = args.generator
    if family not in ("a5_1", "bivium"):
        raise SystemExit(f"unknown generator family {family!r}")
    if args.registers:
        lengths = _parse_vars(args.registers)
        keystream = args.keystream_bits or (
            ciphers.A51_DEFAULT_KEYSTREAM if family == "a5_1"
            else ciphers.BIVIUM_DEFAULT_KEYSTREAM)
        return ciphers.make_weakened(family, lengths, keystream)
    if family == "a5_1":
        return ciphers.a5_1(args.keystream_bits or ciphers.A51_DEFAULT_KEYSTREAM)
    return ciphers.bivium(args.keystream_bits or ciphers.BIVIUM_DEFAULT_KEYSTREAM)


def _load_input(args) -> tuple[CnfFormula, DecompositionSet | None]:
    """Resolve --cnf or --generator into a formula and a default init set."""
    if args.cnf:
        return load_dimacs(args.cnf), None
    if getattr(args, "generator", None):
        spec = _build_generator(args)
        state = ciphers.random_state(spec, args.instance_seed)
        keystream = ciphers.reference_keystream(spec, state)
        instance = ciphers.encode(spec, keystream, secret_state=state)
        return instance.cnf, instance.state_vars
    raise SystemExit("either --cnf or --generator is required")


def _estimate_table(est, metric) -> str:
    unit = "s" if metric is CostMetric.WALL_TIME else metric.value
    header = f"{'Min. time':>12} {'Max. time':>12} {'Avg. time':>12} {'s^2':>12} {'F':>14}"
    if est.status is EstimateStatus.COMPLETE:
        row = (f"{est.min_cost:>12.5f} {est.max_cost:>12.5f} "
               f"{est.mean:>12.5f} {est.s2 if est.s2 is not None else 0.0:>12.5f} "
               f"{est.value:>14.6g}")
    else:
        row = f"{'-':>12} {'-':>12} {'-':>12} {'-':>12} {est.value:>14.6g} (lower bound)"
    return f"(costs in {unit})\n{header}\n{row}"


def _add_common(parser, with_vars=True):
    parser.add_argument("--cnf", help="input DIMACS CNF file")
    parser.add_argument("--generator", help="cipher preset: a5_1 or bivium")
    parser.add_argument("--registers",
                        help="weakened register lengths, e.g. 5,6,7")
    parser.add_argument("--keystream-bits", type=int, default=None,
                        help="known keystream length for generator presets")
    parser.add_argument("--instance-seed", type=int, default=0,
                        help="seed for the generator preset's secret state")
    if with_vars:
        parser.add_argument("--vars", help="decomposition variables, e.g. 1,3,5")
    parser.add_argument("--metric", choices=sorted(_METRICS), default="wall",
                        help="solve-cost metric (default: wall)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="output directory for run artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partsat",
        description="Monte Carlo solve-time estimation and decomposition-set "
                    "search for partitioned SAT solving")
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="evaluate one decomposition set")
    _add_common(p_est)
    p_est.add_argument("--n", type=int, default=DEFAULT_SAMPLE_SIZE,
                       help="sample size N")
    p_est.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p_est.add_argument("--workers", type=int, default=1)
    p_est.add_argument("--best-known", type=float, default=None,
                       help="interrupt once the partial sum exceeds this")
    p_est.add_argument("--time-limit", type=float, default=None)

    p_search = sub.add_parser("search", help="tabu-search a decomposition set")
    _add_common(p_search)
    p_search.add_argument("--init-vars",
                          help="initial decomposition set (default: backdoor "
                               "of the generator preset, or all variables)")
    p_search.add_argument("--n", type=int, default=DEFAULT_SAMPLE_SIZE)
    p_search.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p_search.add_argument("--rho", type=int, default=1)
    p_search.add_argument("--workers", type=int, default=1)
    p_search.add_argument("--time-limit", type=float, default=None)
    p_search.add_argument("--point-cap", type=float, default=None,
                          help="hard cap for the first point's evaluation")
    p_search.add_argument("--no-restrict", action="store_true",
                          help="search the whole hypercube, not just subsets "
                               "of the initial set")

    p_oracle = sub.add_parser("oracle", help="exhaustive total over a family")
    _add_common(p_oracle)
    p_oracle.add_argument("--budget", type=int, default=20,
                          help="largest enumerable d")

    p_enc = sub.add_parser("encode", help="emit a cipher instance")
    p_enc.add_argument("--generator", required=True, help="a5_1 or bivium")
    p_enc.add_argument("--registers", help="weakened register lengths")
    p_enc.add_argument("--keystream-bits", type=int, default=None)
    p_enc.add_argument("--state", type=_parse_bits, default=None,
                       help="secret state bits (default: random from seed)")
    p_enc.add_argument("--instance-seed", type=int, default=0)
    p_enc.add_argument("--out", required=True,
                       help="output path base (writes BASE.cnf and BASE.json)")

    p_ver = sub.add_parser("verify-supbs",
                           help="check a set decides the CNF by propagation")
    _add_common(p_ver)
    p_ver.add_argument("--checks", type=int, default=100)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (OSError, ValueError, SupbsVerificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "estimate":
        formula, default_init = _load_input(args)
        variables = _parse_vars(args.vars) if args.vars else (
            default_init.variables if default_init else ())
        if not variables:
            raise SystemExit("estimate needs --vars (or a generator preset)")
        config = RunConfig(
            mode="estimate", cnf_path=args.cnf, generator=args.generator,
            variables=variables, n_samples=args.n, seed=args.seed,
            gamma=args.gamma, metric=_METRICS[args.metric],
            workers=args.workers, time_limit=args.time_limit)
        est, record = run_estimate(formula, config)
        print(json.dumps(est.to_json_dict(variables)))
        print(_estimate_table(est, config.metric))
        if args.out:
            record.save(args.out)
            print(f"run artifacts written to {args.out}")
        return 0

    if args.command == "search":
        formula, default_init = _load_input(args)
        if args.init_vars:
            initial = DecompositionSet.of(_parse_vars(args.init_vars))
        elif default_init is not None:
            initial = default_init
        else:
            initial = DecompositionSet.of(range(1, formula.num_vars + 1))
        config = RunConfig(
            mode="search", cnf_path=args.cnf, generator=args.generator,
            variables=initial.variables, n_samples=args.n, seed=args.seed,
            gamma=args.gamma, rho=args.rho, metric=_METRICS[args.metric],
            workers=args.workers, time_limit=args.time_limit,
            first_point_cap=args.point_cap,
            restrict_to_initial=not args.no_restrict)
        report, record = run_tabu(formula, initial, config)
        counters = report.counters
        print(f"stop reason: {report.stop_reason} after {report.iterations} iterations")
        print(f"best value: {report.best_value}")
        print(f"best variables ({len(report.best_variables or ())}): "
              f"{','.join(map(str, report.best_variables or ()))}")
        print("traversal: "
              f"F finished at {counters['completed']} points, "
              f"interrupted at {counters['interrupted']}, "
              f"|L1|={counters['l1']}, |L2|={counters['l2']}")
        if args.out:
            record.save(args.out)
            print(f"run artifacts written to {args.out}")
        return 0

    if args.command == "oracle":
        formula, _ = _load_input(args)
        variables = _parse_vars(args.vars or "")
        if not variables:
            raise SystemExit("oracle needs --vars")
        dset = DecompositionSet.of(variables)
        metric = _METRICS[args.metric]
        total = exhaustive_total(formula, dset, metric=metric, budget=args.budget)
        print(json.dumps({"variables": list(dset.variables), "total": total,
                          "metric": metric.value, "members": 1 << dset.d}))
        if args.out:
            config = RunConfig(mode="oracle", cnf_path=args.cnf,
                               variables=dset.variables, metric=metric,
                               seed=args.seed)
            record = RunRecord(config=config, started=RunRecord.now())
            record.finished = RunRecord.now()
            record.report = {"oracle": {
                "variables": list(dset.variables), "total": total,
                "metric": metric.value, "members": 1 << dset.d}}
            record.save(args.out)
        return 0

    if args.command == "encode":
        spec = _build_generator(args)
        if args.state is not None:
            state = args.state
        else:
            state = ciphers.random_state(spec, args.instance_seed)
        keystream = ciphers.reference_keystream(spec, state)
        instance = ciphers.encode(spec, keystream, secret_state=state)
        base = Path(args.out)
        base.parent.mkdir(parents=True, exist_ok=True)
        dump_dimacs(instance.cnf, base.with_suffix(".cnf"))
        sidecar = instance.metadata()
        sidecar["secret_state"] = "".join(str(b) for b in state)
        base.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
        print(f"wrote {base.with_suffix('.cnf')} "
              f"({instance.cnf.num_vars} vars, {instance.cnf.num_clauses} clauses) "
              f"and {base.with_suffix('.json')}")
        return 0

    if args.command == "verify-supbs":
        formula, default_init = _load_input(args)
        variables = _parse_vars(args.vars) if args.vars else (
            default_init.variables if default_init else ())
        if not variables:
            raise SystemExit("verify-supbs needs --vars (or a generator preset)")
        try:
            init_from_supbs(formula, DecompositionSet.of(variables),
                            checks=args.checks, seed=args.seed)
        except SupbsVerificationError as exc:
            print(f"NOT a strong unit-propagation backdoor: {exc}")
            return 1
        print(f"verified: {len(variables)} variables decide the formula by "
              f"unit propagation on {args.checks} random assignments")
        return 0

    raise SystemExit(f"unknown command {args.command!r}")


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
