"""Command line front end.

Exit codes: 0 success, 1 negative domain result (no plan), 2 user or config
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from .config import ScenarioError, load_scenario
from .engine import NoPlan, plan_composition
from .ldm import ConflictingDescription, KnowledgeBase
from .netsim import INFO_CENTRIC, VKN, ComparisonReport, RunMetrics, build_topology, run_comparison, run_strategy
from .semantic import MalformedName, RegistryError, SemanticRegistry, default_registry, load_registry
from .vkmd import VkmdError, parse_vkmd, serialize_vkmd, validate_description

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def data_path(name: str) -> Path:
    return Path(str(resources.files("vkn") / "data" / name))


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"{path}: {exc.strerror or exc}") from None


def _write(path: str, text: str):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"{path}: {exc.strerror or exc}") from None


def _registry(args) -> SemanticRegistry:
    path = args.registry or os.environ.get("VKN_REGISTRY")
    if not path:
        return default_registry()
    try:
        return load_registry(_read(path))
    except RegistryError as exc:
        raise CliError(EXIT_USAGE, f"{path}:{exc}") from None


def _parse_file(path: str):
    text = _read(path)
    try:
        return parse_vkmd(text)
    except VkmdError as exc:
        raise CliError(EXIT_USAGE, f"{path}:{exc}") from None


def _scenario(args):
    path = str(data_path("default_scenario.json")) if args.scenario == "default" else args.scenario
    try:
        sc = load_scenario(_read(path))
        return sc.with_overrides(args.override or [])
    except ScenarioError as exc:
        raise CliError(EXIT_USAGE, f"{path}: {exc}") from None


def _emit(args, text: str):
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)


def cmd_parse(args) -> int:
    _emit(args, serialize_vkmd(_parse_file(args.path)))
    return EXIT_OK


def cmd_validate(args) -> int:
    desc = _parse_file(args.path)
    issues = validate_description(desc, _registry(args))
    if args.format == "json":
        _emit(args, json.dumps({"model_id": desc.model_id,
                                "issues": [{"param_id": i.param_id, "type_name": str(i.type_name),
                                            "reason": i.reason} for i in issues]}, indent=2) + "\n")
    else:
        _emit(args, "".join(f"{args.path}: {i}\n" for i in issues) or f"{desc.model_id}: ok\n")
    return EXIT_USAGE if issues else EXIT_OK


def cmd_plan(args) -> int:
    kb = KnowledgeBase()
    errors = []
    kb_dir = Path(args.kb_dir)
    if not kb_dir.is_dir():
        raise CliError(EXIT_IO, f"{kb_dir}: not a directory")
    for f in sorted(kb_dir.glob("*.vkmd")):
        try:
            kb.register_description(parse_vkmd(_read(str(f))))
        except (VkmdError, ConflictingDescription) as exc:
            errors.append(f"{f}:{exc}")
    if errors:
        raise CliError(EXIT_USAGE, "\n".join(errors))
    available = [a for chunk in (args.available or []) for a in chunk.split(",") if a]
    try:
        plan = plan_composition(kb, args.goal, available, args.max_depth)
    except MalformedName as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    except NoPlan as exc:
        print(f"NoPlan: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    if args.format == "json":
        _emit(args, json.dumps({"goal": args.goal, "steps": list(plan.steps),
                                "leaf_inputs": sorted(map(str, plan.leaf_inputs))}, indent=2) + "\n")
    else:
        lines = [f"goal {args.goal}"]
        lines += [f"step {i} {m}" for i, m in enumerate(plan.steps, start=1)]
        lines += [f"leaf {n}" for n in sorted(map(str, plan.leaf_inputs))]
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def format_metrics(m: RunMetrics) -> str:
    lines = [f"[{m.strategy}]",
             f"  total_bytes      {m.total_bytes}",
             f"  message_bytes    {m.message_bytes}",
             f"  messages         {m.message_count} ({m.hop_count} hops)"]
    for area in m.per_area_bytes:
        delay = m.per_query_delay_ms.get(area)
        lines.append(f"  area {area}: comfort={m.area_comfort.get(area) or 'UNAVAILABLE'} "
                     f"bytes={m.per_area_bytes[area]} delay={'-' if delay is None else delay}ms "
                     f"route={'>'.join(m.routes.get(area, []))}")
    if m.fallbacks:
        lines.append(f"  fallbacks: {', '.join(m.fallbacks)}")
    if m.decision is not None:
        flag = " (no comfort data)" if m.decision.no_comfort_data else ""
        lines.append(f"  chosen route: {m.decision.chosen}{flag}")
    return "\n".join(lines) + "\n"


def format_report(r: ComparisonReport) -> str:
    out = format_metrics(r.info_centric) + format_metrics(r.vkn)
    out += f"[deltas] total bytes saved by vkn: {r.bytes_saved}\n"
    for area, d in r.deltas().items():
        out += f"  area {area}: bytes_saved={d['bytes_saved']} delay_saved={d['delay_saved_ms']}ms\n"
    return out


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_run(args) -> int:
    sc = _scenario(args)
    try:
        m = run_strategy(build_topology(sc, _registry(args)), sc, args.strategy)
    except ScenarioError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    if args.trace:
        _write(args.trace, "\n".join(m.trace) + "\n")
    _emit(args, _dump_json(m.to_dict()) if args.format == "json" else format_metrics(m))
    return EXIT_OK


def cmd_compare(args) -> int:
    sc = _scenario(args)
    try:
        report = run_comparison(sc, _registry(args))
    except ScenarioError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    if args.trace:
        _write(args.trace, report.trace_text())
    _emit(args, _dump_json(report.to_dict()) if args.format == "json" else format_report(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--registry", help="registry file (default: $VKN_REGISTRY or built-in)")
    common.add_argument("-o", "--output", help="write the result here instead of stdout")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("scenario", help="scenario JSON file, or 'default' for the shipped one")
    sim.add_argument("--override", action="append", metavar="KEY=VALUE",
                     help="override a scenario constant (repeatable)")
    sim.add_argument("--trace", metavar="PATH", help="write the message trace here")

    p = argparse.ArgumentParser(prog="vkn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", parents=[common], help="print the canonical form of a VKMD file")
    sp.add_argument("path")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("validate", parents=[common], help="check a VKMD file against a registry")
    sp.add_argument("path")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("plan", parents=[common], help="plan a model composition for a goal name")
    sp.add_argument("goal")
    sp.add_argument("kb_dir")
    sp.add_argument("--available", action="append", metavar="NAMES",
                    help="comma-separated semantic names available locally (repeatable)")
    sp.add_argument("--max-depth", type=int, default=8)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("run", parents=[common, sim], help="run one retrieval strategy")
    sp.add_argument("--strategy", choices=(INFO_CENTRIC, VKN), default=VKN)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("compare", parents=[common, sim], help="run both strategies and compare")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "max_depth", 1) < 1:
        parser.error("--max-depth must be >= 1")
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
