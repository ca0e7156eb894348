"""Command-line front end.

Exit codes: 0 success, 1 domain error (validation, cover, evidence),
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from contextlib import redirect_stderr, redirect_stdout
from dataclasses import dataclass

from . import dot, fixtures
from .abstraction import enumerate_covers, parse_cover, propagate_all
from .builder import build_model, model_to_dict
from .core import PcNet, load_pcnet, serialize, validate
from .errors import ParseError, PcNetError, SchemaError
from .inference import check_soundness, parse_evidence, solve
from .refine import CostParams, refine


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CommandOutcome:
    exit_code: int
    stdout: str
    stderr: str


def _read_net(path: str | None) -> PcNet:
    if not path:
        raise UsageError("--input PATH is required")
    if path.startswith("builtin:"):
        try:
            return load_pcnet(fixtures.text(path[len("builtin:"):]))
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return load_pcnet(text)


def _ready(net: PcNet) -> PcNet:
    """Use derived diagrams from the file when complete, else propagate."""
    if all(c in net.derived_diagrams for c in net.internal_concepts):
        return net
    return propagate_all(net)


def cmd_validate(args) -> int:
    report = validate(_read_net(args.input))
    print(report)
    return 0 if report.ok else 1


def cmd_propagate(args) -> int:
    print(serialize(propagate_all(_read_net(args.input))), end="")
    return 0


def cmd_covers(args) -> int:
    net = _read_net(args.input)
    for cover in enumerate_covers(_ready(net)):
        print(cover)
    return 0


def cmd_build(args) -> int:
    net = _ready(_read_net(args.input))
    model = build_model(net, parse_cover(net, args.cover))
    print(json.dumps(model_to_dict(model), indent=2))
    return 0


def cmd_solve(args) -> int:
    net = _ready(_read_net(args.input))
    model = build_model(net, parse_cover(net, args.cover))
    print(solve(model, parse_evidence(args.evidence)).to_json())
    return 0


def cmd_soundness(args) -> int:
    net = _ready(_read_net(args.input))
    report = check_soundness(net, parse_cover(net, args.cover))
    print(json.dumps(report.to_dict(), indent=2))
    return 0 if report.sound else 1


def cmd_refine(args) -> int:
    net = _ready(_read_net(args.input))
    cp = CostParams(args.kappa_table, args.kappa_concept)
    init = [t.strip() for t in args.init.split(",") if t.strip()]
    trace = refine(net, None, parse_evidence(args.evidence), cp, init)
    for step in trace.steps:
        print(json.dumps(step.to_dict()))
    return 0


def cmd_export_dot(args) -> int:
    net = _read_net(args.input)
    if args.target == "net":
        print(dot.hierarchy_dot(net), end="")
        return 0
    net = _ready(net)
    if args.target == "diagram":
        if not args.concept:
            raise UsageError("--concept is required for --target diagram")
        net.concept(args.concept)
        print(dot.diagram_dot(net, args.concept), end="")
        return 0
    if not args.cover:
        raise UsageError(f"--cover is required for --target {args.target}")
    cover = parse_cover(net, args.cover)
    if args.target == "cover":
        print(dot.cover_dot(net, cover), end="")
    else:
        print(dot.model_dot(build_model(net, cover)), end="")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", default=argparse.SUPPRESS,
                        help="pc-net JSON file, or builtin:NAME for a bundled fixture")
    common.add_argument("--output", default=argparse.SUPPRESS,
                        help="write results here instead of stdout")

    parser = _Parser(prog="pcnet", description=__doc__.splitlines()[0])
    parser.add_argument("--input", default=None)
    parser.add_argument("--output", default="stdout")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check every invariant and list violations")
    add("propagate", cmd_propagate, "derive internal diagrams and write the net back out")
    add("covers", cmd_covers, "list every conceptual cover")
    p = add("build", cmd_build, "build the categorization model for a cover")
    p.add_argument("--cover", required=True)
    p = add("solve", cmd_solve, "solve the model for a cover under evidence")
    p.add_argument("--cover", required=True)
    p.add_argument("--evidence", action="append", default=[], metavar="FEATURE=STATE")
    p = add("soundness", cmd_soundness, "compare a cover's joint with the leaf-level joint")
    p.add_argument("--cover", required=True)
    p = add("refine", cmd_refine, "greedy cost-aware cover refinement (JSON lines)")
    p.add_argument("--init", required=True)
    p.add_argument("--kappa-table", type=float, default=0.0)
    p.add_argument("--kappa-concept", type=float, default=0.0)
    p.add_argument("--evidence", action="append", default=[], metavar="FEATURE=STATE")
    p = add("export-dot", cmd_export_dot, "emit Graphviz DOT text")
    p.add_argument("--target", required=True)
    p.add_argument("--cover")
    p.add_argument("--concept")
    return parser


def run(argv=None) -> CommandOutcome:
    return _run(argv)[0]


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    target = []
    with redirect_stdout(out), redirect_stderr(err):
        code = _dispatch(argv, target)
    return CommandOutcome(code, out.getvalue(), err.getvalue()), (target or [None])[0]


def _dispatch(argv, target: list) -> int:
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        target.append(args.output)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.command == "export-dot" and args.target not in ("net", "cover", "model",
                                                                "diagram"):
            print(f"error: unknown target {args.target!r}", file=sys.stderr)
            return 1
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:  # malformed --evidence and similar flag values
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except PcNetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    outcome, target = _run(argv)
    if target and target != "stdout" and outcome.exit_code == 0:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(outcome.stdout)
    else:
        sys.stdout.write(outcome.stdout)
    sys.stderr.write(outcome.stderr)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
