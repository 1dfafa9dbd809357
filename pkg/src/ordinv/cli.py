"""Command-line frontend tying the toolkit to files and reports.

Subcommands: ``parse``, ``eval``, ``invariance``, ``validity``, ``nf``,
``sat``, ``shrink``, ``census``, ``classify``, ``build-orders``,
``game``, and ``dendroid``.  Exit codes: 0 on success, 1 on a negative
verdict (not invariant, spoiler wins, unsatisfiable, formula false),
2 on usage errors, 3 when a search cap is exceeded.  Output is plain
text by default; ``--format json`` switches the reporting subcommands
to one JSON document on stdout.  Every randomized path takes ``--seed``
(default 0) and identical invocations print identical bytes.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import dendroid as dendroid_mod
from . import games, locality, logic, solver, structures
from .evaluator import evaluate, holds_under_orders

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_CAP = 3


class UsageError(Exception):
    """Bad arguments or unreadable input; maps to exit code 2."""


class CapExceeded(Exception):
    """A configured search cap was exceeded; maps to exit code 3."""


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p.read_text(encoding="utf-8")


def _load_formula(arg: str) -> logic.Formula:
    """Parse a formula from a file path, falling back to literal text."""
    text = _read_text(arg) if Path(arg).is_file() else arg
    payload = " ".join(
        line
        for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    )
    try:
        return logic.parse_formula(payload)
    except ValueError as exc:
        raise UsageError(f"cannot parse formula: {exc}") from exc


def _load_structure(path: str) -> structures.Structure:
    try:
        return structures.parse_structure(_read_text(path))
    except ValueError as exc:
        raise UsageError(f"cannot parse structure {path}: {exc}") from exc


def _parse_assignment(text: str | None) -> dict[str, int]:
    if not text:
        return {}
    out: dict[str, int] = {}
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"bad assignment item {item!r} (want var=element)")
        var, _, value = item.partition("=")
        try:
            out[var.strip()] = int(value)
        except ValueError as exc:
            raise UsageError(f"bad element in assignment: {value!r}") from exc
    return out


def _parse_scaled(text: str | None) -> dict[str, int]:
    if not text:
        return {}
    out: dict[str, int] = {}
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"bad scaled item {item!r} (want m=..,delta=..)")
        name, _, value = item.partition("=")
        name = name.strip()
        if name not in ("m", "delta"):
            raise UsageError(f"unknown scaled parameter {name!r}")
        try:
            out[name] = int(value)
        except ValueError as exc:
            raise UsageError(f"bad scaled value: {value!r}") from exc
    return out


def _params_for(
    s: structures.Structure, radius: int, scaled: dict[str, int], count_multiplier: int
) -> locality.LocalityParams:
    """Scaled parameters if given, otherwise the worst-case theory values."""
    adjacency = structures.gaifman_adjacency(s)
    degree = max((len(v) for v in adjacency), default=0)
    if "m" in scaled or "delta" in scaled:
        if not ("m" in scaled and "delta" in scaled):
            raise UsageError("--scaled needs both m= and delta=")
        m, delta = scaled["m"], scaled["delta"]
    else:
        n_types = len(locality.census(s, radius).types())
        constants = locality.theory_constants(radius, max(degree, 1), max(n_types, 1))
        m = constants.m // count_multiplier if count_multiplier > 1 else constants.m
        delta = constants.delta
    return locality.LocalityParams(
        radius=radius,
        degree_bound=max(degree, 1),
        m=m,
        delta=max(delta, 1),
        count_multiplier=count_multiplier,
    )


def _emit(args: argparse.Namespace, text_lines: list[str], payload: dict) -> None:
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for line in text_lines:
            print(line)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_parse(args: argparse.Namespace) -> int:
    f = _load_formula(args.formula)
    report = logic.analyze(f)
    lines = [
        f"formula {logic.format_formula(f)}",
        f"rank {report.quantifier_rank}",
        f"two-variable {int(report.uses_only_xy)}",
        f"counting {int(report.uses_counting)}",
        f"orders {','.join(report.order_symbols_used) or '-'}",
        f"free {','.join(report.free_variables) or '-'}",
    ]
    _emit(
        args,
        lines,
        {
            "formula": logic.format_formula(f),
            "rank": report.quantifier_rank,
            "two_variable": report.uses_only_xy,
            "counting": report.uses_counting,
            "orders": list(report.order_symbols_used),
            "free_variables": list(report.free_variables),
        },
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    s = _load_structure(args.structure)
    f = _load_formula(args.formula)
    report = logic.analyze(f)
    missing = [o for o in report.order_symbols_used if o not in s.named_orders]
    if missing:
        raise UsageError(
            f"structure lacks an order for {', '.join(missing)}; "
            "add an `order` line to the structure file"
        )
    known = {name: arity for name, arity in s.signature.relations}
    for name, arity in logic.relation_symbols(f).items():
        if known.get(name) != arity:
            raise UsageError(
                f"structure does not interpret {name}/{arity}"
            )
    assignment = _parse_assignment(args.assign)
    unassigned = [v for v in report.free_variables if v not in assignment]
    if unassigned:
        raise UsageError(f"free variables need --assign: {', '.join(unassigned)}")
    value = evaluate(s, f, assignment or None)
    _emit(args, [f"value {str(value).lower()}"], {"value": value})
    return EXIT_OK if value else EXIT_NEGATIVE


def cmd_invariance(args: argparse.Namespace) -> int:
    f = _load_formula(args.formula)
    if args.brute_force:
        return _invariance_brute(args, f)
    outcome = solver.check_invariance(f, args.max_size)
    if outcome.invariant:
        _emit(
            args,
            [f"invariant up to size {outcome.max_size} (general bound {outcome.bound})"],
            {
                "invariant": True,
                "max_size": outcome.max_size,
                "bound": outcome.bound,
            },
        )
        return EXIT_OK
    witness = outcome.structure
    lines = ["not order-invariant", "witness structure:"]
    lines.extend(structures.structure_to_text(witness).splitlines())
    _emit(
        args,
        lines,
        {
            "invariant": False,
            "witness": structures.structure_to_text(witness),
            "order0": list(outcome.order0),
            "order1": list(outcome.order1),
        },
    )
    return EXIT_NEGATIVE


def _invariance_brute(args: argparse.Namespace, f: logic.Formula) -> int:
    symbols = logic.relation_symbols(f)
    sig = structures.Signature(relations=tuple(sorted(symbols.items())))
    for s in structures.enumerate_structures(sig, args.max_size):
        sweep = holds_under_orders(s, f)
        if sweep.varies:
            ordered = s
            for name, perm in (sweep.true_orders or {}).items():
                ordered = ordered.with_named_order(name + "0", perm)
            for name, perm in (sweep.false_orders or {}).items():
                ordered = ordered.with_named_order(name + "1", perm)
            lines = ["not order-invariant (brute force)", "witness structure:"]
            lines.extend(structures.structure_to_text(ordered).splitlines())
            _emit(
                args,
                lines,
                {"invariant": False, "witness": structures.structure_to_text(ordered)},
            )
            return EXIT_NEGATIVE
    _emit(
        args,
        [f"invariant up to size {args.max_size} (brute force)"],
        {"invariant": True, "max_size": args.max_size},
    )
    return EXIT_OK


def cmd_validity(args: argparse.Namespace) -> int:
    f = _load_formula(args.formula)
    try:
        outcome = solver.validity_via_invariance(f, args.max_size)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if outcome.valid:
        _emit(
            args,
            [f"valid on all structures of size <= {outcome.max_size}"],
            {"valid": True, "max_size": outcome.max_size},
        )
        return EXIT_OK
    lines = ["not valid; countermodel:"]
    lines.extend(structures.structure_to_text(outcome.countermodel).splitlines())
    _emit(
        args,
        lines,
        {
            "valid": False,
            "countermodel": structures.structure_to_text(outcome.countermodel),
        },
    )
    return EXIT_NEGATIVE


def cmd_nf(args: argparse.Namespace) -> int:
    f = _load_formula(args.formula)
    try:
        nf = solver.scott_normal_form(f)
    except (ValueError, logic.FragmentError) as exc:
        raise UsageError(str(exc)) from exc
    text = solver.render_normal_form(nf)
    _emit(args, text.splitlines(), {"normal_form": text})
    return EXIT_OK


def _looks_like_nf(text: str) -> bool:
    for line in text.splitlines():
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            return stripped.startswith("base ")
    return False


def cmd_sat(args: argparse.Namespace) -> int:
    text = _read_text(args.input) if Path(args.input).is_file() else args.input
    if _looks_like_nf(text):
        try:
            nf = solver.parse_normal_form(text)
        except ValueError as exc:
            raise UsageError(f"cannot parse normal form: {exc}") from exc
        search = solver.find_model(nf, args.max_size)
    else:
        f = _load_formula(args.input)
        search = solver.find_model_direct(f, args.max_size)
    if search.found:
        lines = ["satisfiable; model:"]
        lines.extend(structures.structure_to_text(search.structure).splitlines())
        _emit(
            args,
            lines,
            {
                "satisfiable": True,
                "model": structures.structure_to_text(search.structure),
            },
        )
        return EXIT_OK
    _emit(
        args,
        [f"unsatisfiable up to size {search.max_size}"],
        {"satisfiable": False, "max_size": search.max_size},
    )
    return EXIT_NEGATIVE


def cmd_shrink(args: argparse.Namespace) -> int:
    try:
        nf = solver.parse_normal_form(_read_text(args.normal_form))
    except ValueError as exc:
        raise UsageError(f"cannot parse normal form: {exc}") from exc
    model = _load_structure(args.model)
    try:
        result = solver.shrink_model(nf, model)
    except solver.ShrinkError as exc:
        raise UsageError(str(exc)) from exc
    trace = solver.render_shrink_trace(result)
    lines = trace.splitlines()
    lines.append("shrunken model:")
    lines.extend(structures.structure_to_text(result.structure).splitlines())
    _emit(
        args,
        lines,
        {
            "trace": trace,
            "size": result.structure.domain_size,
            "bound": result.bound,
            "model": structures.structure_to_text(result.structure),
        },
    )
    return EXIT_OK


def cmd_census(args: argparse.Namespace) -> int:
    s = _load_structure(args.structure)
    c = locality.census(s, args.radius)
    text = locality.render_census(c)
    payload = {
        "radius": c.radius,
        "counts": {key: c.count(key) for key in c.types()},
    }
    _emit(args, text.splitlines(), payload)
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    s = _load_structure(args.structure)
    params = _params_for(s, args.radius, _parse_scaled(args.scaled), 1)
    c = locality.census(s, args.radius)
    try:
        cls = locality.classify_frequent(c, params)
    except locality.LocalityError as exc:
        print(f"classification failed: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    lines = [
        f"radius {cls.radius}",
        f"m {params.m}",
        f"delta {params.delta}",
        f"threshold {cls.threshold}",
        f"rare-total {cls.rare_total}",
    ]
    lines.extend(f"frequent {key}" for key in cls.frequent)
    lines.extend(f"rare {key}" for key in cls.rare)
    _emit(
        args,
        lines,
        {
            "radius": cls.radius,
            "m": params.m,
            "delta": params.delta,
            "threshold": cls.threshold,
            "rare_total": cls.rare_total,
            "frequent": list(cls.frequent),
            "rare": list(cls.rare),
        },
    )
    return EXIT_OK


def cmd_build_orders(args: argparse.Namespace) -> int:
    s0 = _load_structure(args.structure0)
    s1 = _load_structure(args.structure1)
    params = _params_for(
        s0, args.radius, _parse_scaled(args.scaled), args.count_multiplier
    )
    try:
        pair = locality.build_orders(s0, s1, params)
    except locality.LocalityError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    text = locality.render_order_pair(pair)
    _emit(args, text.splitlines(), {"order_pair": text})
    return EXIT_OK


def _interactive_game(args: argparse.Namespace, s0, s1, count_bound) -> int:
    def ask(prompt: str) -> str:
        print(prompt, end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            raise UsageError("input ended before the game finished")
        return line

    result = games.play_solver_game(
        s0,
        s1,
        args.rounds,
        args.human,
        ask=ask,
        tell=print,
        count_bound=count_bound,
    )
    return EXIT_OK if result.winner == games.DUPLICATOR else EXIT_NEGATIVE


def cmd_game(args: argparse.Namespace) -> int:
    s0 = _load_structure(args.structure0)
    s1 = _load_structure(args.structure1)
    count_bound = None
    if args.kind == "c2":
        count_bound = args.count_bound if args.count_bound else args.rounds
    if args.human:
        if args.kind == "fo":
            raise UsageError("interactive play supports fo2 and c2 only")
        return _interactive_game(args, s0, s1, count_bound)
    try:
        if args.kind == "fo":
            winner = games.fo_game_winner(s0, s1, args.rounds)
        elif args.kind == "fo2":
            winner = games.fo2_game_winner(s0, s1, args.rounds)
        else:
            winner = games.counting_game_winner(s0, s1, args.rounds, count_bound)
    except ValueError as exc:
        raise CapExceeded(str(exc)) from exc
    _emit(args, [f"winner {winner}"], {"winner": winner})
    return EXIT_OK if winner == games.DUPLICATOR else EXIT_NEGATIVE


def _parse_depths(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            start, end = int(lo), int(hi)
        except ValueError as exc:
            raise UsageError(f"bad depth range {text!r}") from exc
        if start < 0 or end < start:
            raise UsageError(f"bad depth range {text!r}")
        return list(range(start, end + 1))
    try:
        return [int(part) for part in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad depths {text!r}") from exc


def cmd_dendroid(args: argparse.Namespace) -> int:
    if args.action == "emit":
        s = dendroid_mod.make_dendroid(args.depth)
        if args.order:
            n = s.domain_size
            if args.order == "level":
                perm = tuple(range(n))
            elif args.order == "reverse":
                perm = tuple(reversed(range(n)))
            else:
                rng = random.Random(args.seed)
                order = list(range(n))
                rng.shuffle(order)
                perm = tuple(order)
            s = s.with_named_order("<", perm)
        print(structures.structure_to_text(s), end="")
        return EXIT_OK
    if args.action == "experiment":
        rows = dendroid_mod.class_invariance_experiment(
            0,
            orders_per_depth=args.orders,
            seed=args.seed,
            depths=_parse_depths(args.depths),
        )
        if args.format == "json":
            print(
                json.dumps(
                    [
                        {
                            "depth": r.depth,
                            "order": r.order_name,
                            "holds": r.holds,
                            "zigzag_even": r.zigzag_even,
                        }
                        for r in rows
                    ],
                    indent=2,
                )
            )
        else:
            for r in rows:
                print(r.tsv())
        mismatch = [r for r in rows if r.holds != (r.depth % 2 == 0)]
        return EXIT_NEGATIVE if mismatch else EXIT_OK
    rows = dendroid_mod.deep_dendroid_similarity()
    if args.format == "json":
        print(
            json.dumps(
                [
                    {
                        "depth0": r.depth0,
                        "depth1": r.depth1,
                        "rounds": r.rounds,
                        "winner": r.winner,
                    }
                    for r in rows
                ],
                indent=2,
            )
        )
    else:
        for r in rows:
            print(r.tsv())
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ordinv",
        description="Workbench for order-invariant two-variable logic.",
    )
    parser.add_argument(
        "--format", choices=("tsv", "json"), default="tsv", help="report format"
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for random paths")
    parser.add_argument(
        "--jobs", type=int, default=1, help="worker cap (reserved; everything runs serially)"
    )
    # The same options are accepted after the subcommand; SUPPRESS keeps a
    # subcommand-position default from clobbering a value given up front.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format", choices=("tsv", "json"), default=argparse.SUPPRESS
    )
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "parse", parents=[common], help="parse a formula and report its fragment"
    )
    p.add_argument("formula", help="formula file or literal text")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", parents=[common], help="evaluate a formula on a structure")
    p.add_argument("structure")
    p.add_argument("formula")
    p.add_argument("--assign", help="free-variable assignment, e.g. x=0,y=2")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("invariance", parents=[common], help="check order-invariance up to a size")
    p.add_argument("formula")
    p.add_argument("--max-size", type=int, required=True)
    p.add_argument(
        "--brute-force",
        action="store_true",
        help="use structure enumeration instead of the satisfiability reduction",
    )
    p.set_defaults(func=cmd_invariance)

    p = sub.add_parser("validity", parents=[common], help="decide validity up to a size")
    p.add_argument("formula")
    p.add_argument("--max-size", type=int, required=True)
    p.set_defaults(func=cmd_validity)

    p = sub.add_parser("nf", parents=[common], help="print the Scott-style normal form")
    p.add_argument("formula")
    p.set_defaults(func=cmd_nf)

    p = sub.add_parser("sat", parents=[common], help="bounded model search for a formula or normal form")
    p.add_argument("input", help="formula or normal-form file (or literal formula)")
    p.add_argument("--max-size", type=int, required=True)
    p.set_defaults(func=cmd_sat)

    p = sub.add_parser("shrink", parents=[common], help="shrink a model of a normal form")
    p.add_argument("normal_form")
    p.add_argument("model")
    p.set_defaults(func=cmd_shrink)

    p = sub.add_parser("census", parents=[common], help="neighbourhood-type census of a structure")
    p.add_argument("structure")
    p.add_argument("-k", "--radius", type=int, required=True)
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("classify", parents=[common], help="split neighbourhood types into rare/frequent")
    p.add_argument("structure")
    p.add_argument("-k", "--radius", type=int, required=True)
    p.add_argument("--scaled", help="desk-scale parameters, e.g. m=2,delta=1")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser(
        "build-orders",
        parents=[common],
        help="construct indistinguishability orders for two structures",
    )
    p.add_argument("structure0")
    p.add_argument("structure1")
    p.add_argument("-k", "--radius", type=int, required=True)
    p.add_argument("--scaled", help="desk-scale parameters, e.g. m=2,delta=1")
    p.add_argument("--count-multiplier", type=int, default=1)
    p.set_defaults(func=cmd_build_orders)

    p = sub.add_parser("game", parents=[common], help="play or solve a model-comparison game")
    p.add_argument("kind", choices=("fo", "fo2", "c2"))
    p.add_argument("structure0")
    p.add_argument("structure1")
    p.add_argument("-k", "--rounds", type=int, required=True)
    p.add_argument("--count-bound", type=int, help="set size cap for c2 (default: rounds)")
    p.add_argument(
        "--human",
        choices=("spoiler", "duplicator"),
        help="play interactively in this role against the exact solver",
    )
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("dendroid", parents=[common], help="emit dendroids and run the experiments")
    p.add_argument("action", choices=("emit", "experiment", "similarity"))
    p.add_argument("--depth", type=int, default=2, help="emit: tree depth")
    p.add_argument(
        "--order",
        choices=("level", "reverse", "seeded"),
        help="emit: attach this linear order",
    )
    p.add_argument("--depths", default="1..4", help="experiment: range like 1..5")
    p.add_argument("--orders", type=int, default=50, help="experiment: orders per depth")
    p.set_defaults(func=cmd_dendroid)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValueError, logic.FragmentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
