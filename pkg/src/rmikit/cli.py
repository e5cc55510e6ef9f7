"""Command-line front end exposing every check for batch and CI use.

Commands:

    trace          print the contract trace set of a snippet
    ni             direct or relative non-interference check
    hw-check       hardware-mode satisfaction check
    sta            static analysis of burst regions
    cache          partition-table inspection and flush costs
    corpus-verify  re-run every golden corpus verdict

Exit codes: 0 success / verdict reproduced, 1 check violated, 2 analysis
failed, 3 path explosion, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from .analyzer import PathExplosion, analyze, explain
from .asm import AsmError, parse_program
from .contracts import (EXEC_KINDS, LEAK_KINDS, ExecModel, LeakageModel,
                        contract_trace_set, trace_set_to_json)
from .corpus import (_parse_layout, _parse_policy, _parse_space, load_corpus,
                     load_reference_table, verify_corpus)
from .llc import LlcError, PartitionTable, PartitionedCache
from .machine import MemoryLayout
from .modes import HwMode, MODE_KINDS, hw_trace_set
from .ni import Policy, check_direct_ni, check_hw_satisfies_one, check_relative_ni

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _emit(payload, as_json, render=None):
    if as_json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(render if render is not None else payload)


def _load_program(path):
    with open(path, "rb") as handle:
        return parse_program(handle.read())


def _load_json(path):
    with open(path) as handle:
        return json.load(handle)


def _contract(text):
    try:
        leak, exec_kind = text.split(":")
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected LEAK:EXEC (e.g. shm:seq), got {text!r}") from None
    if leak not in LEAK_KINDS or exec_kind not in EXEC_KINDS:
        raise argparse.ArgumentTypeError(f"unknown contract {text!r}")
    return LeakageModel(leak), ExecModel(exec_kind)


def _setup(args):
    """Common inputs: program, layout, policy, space."""
    program = _load_program(args.file)
    layout = MemoryLayout()
    policy = Policy()
    space = None
    if getattr(args, "layout", None):
        layout = _parse_layout(_load_json(args.layout))
    if getattr(args, "policy", None):
        policy = _parse_policy(_load_json(args.policy))
    if getattr(args, "space", None):
        space = _parse_space(_load_json(args.space))
    return program, layout, policy, space


def build_parser():
    parser = _Parser(prog="rmikit", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for any randomized sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, space_required=False):
        p.add_argument("file", help="assembly snippet (.s)")
        p.add_argument("--layout", help="memory layout JSON")
        p.add_argument("--policy", help="secrecy policy JSON")
        if space_required:
            p.add_argument("--space", required=True, help="state space JSON")
        p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("trace", help="contract trace set of one snippet")
    common(p)
    p.add_argument("--contract", type=_contract, default=_contract("shm:seq"))
    p.add_argument("--state", help="initial state JSON (default: all zeros)")

    p = sub.add_parser("ni", help="non-interference check")
    common(p, space_required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--direct", type=_contract, metavar="LEAK:EXEC")
    group.add_argument("--relative", type=_contract, nargs=2,
                       metavar=("LEAK:EXEC", "LEAK:EXEC"))

    p = sub.add_parser("hw-check", help="hardware-mode satisfaction check")
    common(p, space_required=True)
    p.add_argument("--mode", choices=MODE_KINDS, required=True)
    p.add_argument("--contract", type=_contract, default=_contract("shm:seq"))

    p = sub.add_parser("sta", help="static analysis of burst regions")
    common(p)

    p = sub.add_parser("cache", help="partition-table inspection")
    p.add_argument("--table", help="partition table JSON (default: reference layout)")
    p.add_argument("--show-flush-cost", action="store_true")
    p.add_argument("--show-map", action="store_true")
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("corpus-verify", help="re-run every golden verdict")
    p.add_argument("--json", action="store_true", dest="as_json")
    return parser


def _cmd_trace(args):
    program, layout, _, _ = _setup(args)
    from .machine import ArchState
    state = ArchState.from_json(_load_json(args.state)) if args.state else ArchState()
    leak, exec_model = args.contract
    traces = contract_trace_set(program, state, layout, leak, exec_model)
    payload = trace_set_to_json(traces)
    _emit(payload, args.as_json,
          "\n".join(" ".join(str(e) for e in t) or "(empty)" for t in payload))
    return 0


def _cmd_ni(args):
    program, layout, policy, space = _setup(args)
    if args.direct:
        verdict = check_direct_ni(program, args.direct, policy, space, layout)
    else:
        verdict = check_relative_ni(program, args.relative[0], args.relative[1],
                                    space, layout)
    _emit(verdict.to_json(), args.as_json,
          "holds" if verdict.holds else "violated")
    return 0 if verdict.holds else 1


def _cmd_hw_check(args):
    program, layout, policy, space = _setup(args)
    mode = HwMode(args.mode)
    report = analyze(program, policy, layout) if mode.kind == "burst_sta" else None
    verdict = check_hw_satisfies_one(program, mode, args.contract, space,
                                     layout, sta_report=report)
    _emit(verdict.to_json(), args.as_json,
          "holds" if verdict.holds else "violated")
    return 0 if verdict.holds else 1


def _cmd_sta(args):
    program, layout, policy, _ = _setup(args)
    try:
        report = analyze(program, policy, layout)
    except PathExplosion as exc:
        _emit({"error": str(exc)}, args.as_json, f"error: {exc}")
        return 3
    _emit(report.to_json(), args.as_json, explain(report).rstrip("\n"))
    return 0 if report.verdict == "pass" else 2


def _cmd_cache(args):
    table = (PartitionTable.from_json(_load_json(args.table))
             if args.table else load_reference_table())
    cache = PartitionedCache(table)
    payload = {"regions": table.to_json()}
    lines = []
    if args.show_map or not args.show_flush_cost:
        for region, spec in sorted(table.to_json().items(), key=lambda kv: int(kv[0])):
            lines.append(f"region {region}: sets [{spec['base']}, "
                         f"{spec['base'] + spec['size']})")
    if args.show_flush_cost:
        costs = cache.flush_costs()
        payload["flush_cost"] = {str(r): c for r, c in costs.items()}
        for region, cost in sorted(costs.items()):
            lines.append(f"region {region}: flush cost {cost} accesses")
    _emit(payload, args.as_json, "\n".join(lines))
    return 0


def _cmd_corpus_verify(args):
    matrix = verify_corpus()
    if args.as_json:
        print(json.dumps(matrix, sort_keys=True, indent=2))
    else:
        for name, row in sorted(matrix["entries"].items()):
            for check, cell in sorted(row.items()):
                flag = "ok" if cell["ok"] else f"MISMATCH (got {cell['actual']})"
                print(f"{name:22s} {check:28s} {cell['expected']:10s} {flag}")
        print("all verdicts reproduced" if matrix["ok"] else "verdict mismatches")
    return 0 if matrix["ok"] else 1


_DISPATCH = {
    "trace": _cmd_trace,
    "ni": _cmd_ni,
    "hw-check": _cmd_hw_check,
    "sta": _cmd_sta,
    "cache": _cmd_cache,
    "corpus-verify": _cmd_corpus_verify,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    random.seed(args.seed)
    try:
        return _DISPATCH[args.command](args)
    except AsmError as exc:
        as_json = getattr(args, "as_json", False)
        if as_json:
            print(json.dumps({"error": exc.to_json()}, sort_keys=True))
        else:
            print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except (LlcError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
