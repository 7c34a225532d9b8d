"""Command line: ``uniftest run | validate | gen``.

Exit codes: 0 success, 2 bad parameters or input, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .combinatorics import substream
from .distance import DEFAULT_MAX_EDGES
from .errors import BudgetExceeded, ValidationError
from .family import (
    ExplicitFamily,
    Junta,
    dno_family,
    dno_size,
    junta_family,
    kneser_matching_ranks,
    random_family,
    read_family,
    star_family,
    write_family,
)
from .harness import (
    GENERATORS,
    ExperimentConfig,
    emit_report,
    parse_junta,
    run_grid,
    run_trials,
    validate_instance,
)
from .rational import as_fraction, fmt_decimal

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3


def _rational(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _rational_list(text: str) -> list[Fraction]:
    return [_rational(part) for part in text.split(",") if part.strip()]


def _add_instance_args(p: argparse.ArgumentParser, *, need_generator: bool) -> None:
    p.add_argument("--n", type=int, help="universe size")
    p.add_argument("--k", type=int, help="set size")
    p.add_argument("--generator", choices=GENERATORS, required=need_generator)
    p.add_argument("--center", type=int, default=1, help="star center (default 1)")
    p.add_argument("--p", type=_rational, help="membership probability for 'random'")
    p.add_argument("--family", help="family file for generator 'file'")
    p.add_argument("--junta", help="junta 'J:S', e.g. '1,2:1;1,2' (default '1:1')")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uniftest", description="Testers for intersectingness of uniform set families."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded trials and write a report")
    _add_instance_args(run, need_generator=True)
    run.add_argument(
        "--tester", required=True, choices=["canonical", "junta", "density", "disjoint-pair"]
    )
    run.add_argument(
        "--eps", type=_rational_list, help="proximity parameter; a comma list runs a grid"
    )
    run.add_argument("--eps1", type=_rational)
    run.add_argument("--eps2", type=_rational)
    run.add_argument("--m", type=int, help="samples per trial (overrides the formula)")
    run.add_argument("--r", type=int, default=2)
    run.add_argument("--c", type=_rational, help="sample-size constant")
    run.add_argument("--j", type=int, default=1, help="junta size for the junta tester")
    run.add_argument("--dedupe", action="store_true", help="canonical: query repeats once")
    run.add_argument("--trials", type=int, required=True)
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--validate", action="store_true", help="certify instance distance")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--format", choices=["csv", "json"], default="csv")
    run.add_argument("--out", default="-", help="report path ('-' for stdout)")

    val = sub.add_parser("validate", help="exact distance of a family file")
    val.add_argument("--family", required=True)
    val.add_argument("--eps", type=_rational, required=True)
    val.add_argument("--max-edges", type=int, default=DEFAULT_MAX_EDGES)

    gen = sub.add_parser("gen", help="write a generated family file")
    _add_instance_args(gen, need_generator=True)
    gen.add_argument("--eps", type=_rational, help="eps for 'dno'")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    return parser


def _n_k(args) -> tuple[int, int]:
    if args.generator == "file":
        if not args.family:
            raise ValidationError("generator 'file' needs --family")
        fam = read_family(args.family)
        return fam.n, fam.k
    if args.n is None or args.k is None:
        raise ValidationError("--n and --k are required")
    return args.n, args.k


def _cmd_run(args) -> int:
    n, k = _n_k(args)
    eps_values = args.eps or [None]
    cfg = ExperimentConfig(
        n=n,
        k=k,
        tester=args.tester.replace("-", "_"),
        generator=args.generator,
        trials=args.trials,
        seed=args.seed,
        eps=eps_values[0],
        eps1=args.eps1,
        eps2=args.eps2,
        m=args.m,
        r=args.r,
        j=args.j,
        c=args.c,
        center=args.center,
        p=args.p,
        family=args.family,
        junta=args.junta,
        dedupe=args.dedupe,
        validate=args.validate,
    )
    if len(eps_values) > 1:
        stats = run_grid(cfg, eps_values, workers=args.workers)
    else:
        stats = run_trials(cfg, workers=args.workers)
    text = emit_report(stats, args.format, args.out)
    if args.out == "-":
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    family = read_family(args.family)
    result = validate_instance(family, args.eps, args.max_edges)
    threshold = args.eps * family.total
    print(
        json.dumps(
            {
                "n": family.n,
                "k": family.k,
                "members": len(family),
                "total": family.total,
                "distance": result.distance,
                "threshold": fmt_decimal(threshold),
                "classification": result.classification,
            }
        )
    )
    return EXIT_OK


def _generate(args) -> ExplicitFamily:
    n, k = _n_k(args)
    g = args.generator
    if g == "star":
        return star_family(n, k, args.center)
    if g == "full":
        return ExplicitFamily.full(n, k)
    if g == "junta":
        coords, traces = parse_junta(args.junta) if args.junta else ((1,), ((1,),))
        return junta_family(n, k, Junta(coords, traces))
    if g == "file":
        return read_family(args.family)
    rng = substream(args.seed, 1, 0)
    if g == "random":
        return random_family(n, k, float(args.p if args.p is not None else Fraction(1, 2)), rng)
    if args.eps is None:
        raise ValidationError("generator 'dno' needs --eps")
    # same substreams as the harness, so 'gen' reproduces trial 0
    matching = kneser_matching_ranks(n, k, dno_size(n, k, args.eps), substream(args.seed, 2))
    return dno_family(n, k, args.eps, rng, matching)


def _cmd_gen(args) -> int:
    write_family(_generate(args), args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "gen": _cmd_gen}
    try:
        return handlers[args.command](args)
    except BudgetExceeded as exc:
        print(f"uniftest: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValidationError, OSError) as exc:
        print(f"uniftest: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
