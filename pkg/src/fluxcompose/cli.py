"""Command-line front end for batch use and scenario replay.

Human-readable output goes to stdout, diagnostics to stderr; machine mode
(`--format lines`) emits the serialization records documented in the README.
Exit codes: 0 success, 1 domain-level failure (no plan, fallback required),
2 usage or parse errors. FLUXCOMPOSE_LOG overrides --log.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime
from importlib.resources import files as package_files
from pathlib import Path

from . import composer, dsl, ontology, planner, registry as registry_mod, scenario
from .errors import FluxError
from .terms import is_ground


def data_path(name: str) -> Path:
    """Path of a bundled data file shipped with the package."""
    return Path(str(package_files("fluxcompose").joinpath("data", name)))


DEFAULTS = {
    "domain": "emergency.fcd",
    "problem": "emergency.fcp",
    "taxonomy": "domain.tax",
    "registry": "services.reg",
    "roster": "roster.csv",
    "schedule": "route.schedule",
}


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def _path_arg(args: argparse.Namespace, name: str) -> Path:
    given = getattr(args, name, None)
    return Path(given) if given else data_path(DEFAULTS[name])


def _add_path_flags(sub: argparse.ArgumentParser, *names: str) -> None:
    for name in names:
        sub.add_argument(f"--{name}", help=f"{name} file (default: bundled)")


def _search_config(args: argparse.Namespace) -> planner.SearchConfig:
    return planner.SearchConfig(max_depth=args.max_depth)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxcompose",
        description="fluent-calculus planning and service composition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--max-depth", type=int, default=8)
        p.add_argument("--format", choices=("text", "lines"), default="text")

    p_validate = sub.add_parser("validate", help="parse and check input files")
    _add_path_flags(p_validate, "domain", "problem", "taxonomy", "registry",
                    "roster", "schedule")
    common(p_validate)

    p_plan = sub.add_parser("plan", help="plan a domain/problem pair")
    _add_path_flags(p_plan, "domain", "problem")
    common(p_plan)

    p_compose = sub.add_parser("compose", help="compose a workflow for a request")
    _add_path_flags(p_compose, "taxonomy", "registry")
    p_compose.add_argument("--have", action="append", default=[],
                           metavar="CONCEPT=VALUE")
    p_compose.add_argument("--want", action="append", default=[], metavar="CONCEPT")
    p_compose.add_argument("--fact", action="append", default=[], metavar="FLUENT")
    common(p_compose)

    p_trace = sub.add_parser("trace", help="rank responders for an event")
    _add_path_flags(p_trace, "roster")
    p_trace.add_argument("--coach", required=True)
    p_trace.add_argument("--spec")
    p_trace.add_argument("--type", default="Medical", choices=("Medical", "Robbery"))
    p_trace.add_argument("--patient", default="", help="patient name (excluded)")
    p_trace.add_argument("--symptoms", default="")
    p_trace.add_argument("--validate-all", action="store_true",
                         help="validate every registered passenger's travel plan "
                              "against the roster before ranking")
    common(p_trace)

    p_sev = sub.add_parser("severity", help="classify severity from symptoms")
    p_sev.add_argument("--spec", required=True)
    p_sev.add_argument("--symptoms", default="")
    p_sev.add_argument("--rules", help="severity rules file (default: bundled)")
    common(p_sev)

    p_report = sub.add_parser("report", help="run the full report-emergency flow")
    _add_path_flags(p_report, "taxonomy", "registry", "roster", "schedule")
    p_report.add_argument("--log", help="event log path (FLUXCOMPOSE_LOG overrides)")
    p_report.add_argument("--pnr", required=True)
    p_report.add_argument("--type", default="Medical", choices=("Medical", "Robbery"))
    p_report.add_argument("--spec")
    p_report.add_argument("--symptoms", default="")
    p_report.add_argument("--case", default="")
    p_report.add_argument("--now", required=True, help="ISO timestamp of the report")
    common(p_report)

    p_sim = sub.add_parser("simulate", help="replay a scripted scenario file")
    _add_path_flags(p_sim, "taxonomy", "registry", "roster", "schedule")
    p_sim.add_argument("--log", help="event log path (FLUXCOMPOSE_LOG overrides)")
    p_sim.add_argument("--script", required=True)
    common(p_sim)

    return parser


def _log_path(args: argparse.Namespace) -> Path:
    env = os.environ.get("FLUXCOMPOSE_LOG")
    if env:
        return Path(env)
    if args.log:
        return Path(args.log)
    raise FluxError("an event log path is required (--log or FLUXCOMPOSE_LOG)")


def _load_context(args: argparse.Namespace, log: scenario.EventLog
                  ) -> scenario.DispatchContext:
    taxonomy_path = _path_arg(args, "taxonomy")
    registry_path = _path_arg(args, "registry")
    roster_path = _path_arg(args, "roster")
    schedule_path = _path_arg(args, "schedule")
    graph = ontology.load_taxonomy(_read(taxonomy_path), str(taxonomy_path))
    reg = registry_mod.load_registry(_read(registry_path), graph, str(registry_path))
    roster = scenario.load_roster(_read(roster_path), str(roster_path))
    schedule = scenario.load_schedule(_read(schedule_path), str(schedule_path))
    rules = ontology.load_severity_rules(_read(data_path("severity.rules")),
                                         "severity.rules")
    sink = scenario.MessageSink(Path(str(log.path) + ".messages"))
    return scenario.DispatchContext(
        roster=roster, taxonomy=graph, registry=reg, severity_rules=rules,
        schedule=schedule, log=log, message_sink=sink,
        search_config=_search_config(args),
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    domain_path = _path_arg(args, "domain")
    domain = dsl.parse_domain(_read(domain_path), str(domain_path))
    print(f"ok: {domain_path} ({len(domain.fluent_decls)} fluents, "
          f"{len(domain.actions)} actions)")
    problem_path = _path_arg(args, "problem")
    problem = dsl.parse_problem(_read(problem_path), str(problem_path))
    planner.make_problem(domain, problem)
    print(f"ok: {problem_path} ({len(problem.initial)} initial fluents, "
          f"{len(problem.goal)} goal atoms)")
    taxonomy_path = _path_arg(args, "taxonomy")
    graph = ontology.load_taxonomy(_read(taxonomy_path), str(taxonomy_path))
    print(f"ok: {taxonomy_path} ({len(graph.concepts)} concepts)")
    registry_path = _path_arg(args, "registry")
    reg = registry_mod.load_registry(_read(registry_path), graph, str(registry_path))
    for svc in reg.sorted_services():
        registry_mod.compile_service_to_action(svc)
    print(f"ok: {registry_path} ({len(reg)} services)")
    roster_path = _path_arg(args, "roster")
    roster = scenario.load_roster(_read(roster_path), str(roster_path))
    print(f"ok: {roster_path} ({len(roster.passengers)} passengers)")
    schedule_path = _path_arg(args, "schedule")
    schedule = scenario.load_schedule(_read(schedule_path), str(schedule_path))
    print(f"ok: {schedule_path} ({len(schedule.stops)} stops)")
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    domain_path = _path_arg(args, "domain")
    problem_path = _path_arg(args, "problem")
    domain = dsl.parse_domain(_read(domain_path), str(domain_path))
    problem_file = dsl.parse_problem(_read(problem_path), str(problem_path))
    problem = planner.make_problem(domain, problem_file)
    try:
        found = planner.plan(problem, _search_config(args))
    except planner.NoPlanFound as exc:
        print(f"no plan within depth {exc.depth}")
        return 1
    if args.format == "lines":
        for i, step in enumerate(found.steps):
            print(f"step\t{i}\t{step}")
    else:
        if not found.steps:
            print("goal already satisfied; empty plan")
        for i, step in enumerate(found.steps, start=1):
            print(f"{i}. {step}")
    return 0


def cmd_compose(args: argparse.Namespace) -> int:
    taxonomy_path = _path_arg(args, "taxonomy")
    registry_path = _path_arg(args, "registry")
    graph = ontology.load_taxonomy(_read(taxonomy_path), str(taxonomy_path))
    reg = registry_mod.load_registry(_read(registry_path), graph, str(registry_path))
    have = []
    for item in args.have:
        concept, sep, value = item.partition("=")
        if not sep or not concept or not value:
            raise FluxError(f"--have expects CONCEPT=VALUE, found {item!r}")
        have.append((concept, value))
    facts = []
    for text in args.fact:
        term = dsl.parse_term_text(text, "<--fact>")
        if not is_ground(term):
            raise FluxError(f"--fact must be ground, found {text!r}")
        facts.append(term)
    request = composer.CompositionRequest(
        have=tuple(have), want=tuple(args.want), world_facts=tuple(facts))
    try:
        workflow = composer.compose(request, reg, graph, _search_config(args))
    except planner.NoPlanFound as exc:
        print(f"no plan within depth {exc.depth}")
        return 1
    if args.format == "lines":
        for line in workflow.to_lines(reg):
            print(line)
    else:
        if workflow.is_empty:
            print("request already satisfied; empty workflow")
        for i, step in enumerate(workflow.plan.steps, start=1):
            wires = "; ".join(
                f"{w.param}<-{w.source}" for w in workflow.wiring if w.step == i - 1)
            print(f"{i}. {step.name}" + (f"  [{wires}]" if wires else ""))
    return 0


def _event_from_args(args: argparse.Namespace,
                     rules: tuple) -> scenario.EmergencyEvent:
    symptoms = frozenset(s for s in args.symptoms.split(",") if s)
    severity = ontology.classify_severity(args.spec, symptoms, rules)
    return scenario.EmergencyEvent(
        date="-", time="-", patient_name=args.patient, case_history="",
        coach=args.coach, seat=0, delivery_personnel=None,
        event_type=scenario.EventType(args.type), specialization=args.spec,
        symptoms=symptoms, severity=severity,
    )


def cmd_trace(args: argparse.Namespace) -> int:
    roster_path = _path_arg(args, "roster")
    roster = scenario.load_roster(_read(roster_path), str(roster_path))
    if args.validate_all:
        for p in roster.passengers:
            if p.registered_for_service:
                roster, _ = scenario.validate_travel_plan(
                    roster, p.pnr, p.travel.origin, p.travel.destination,
                    p.travel.journey_date)
    rules = ontology.load_severity_rules(_read(data_path("severity.rules")),
                                         "severity.rules")
    event = _event_from_args(args, rules)
    try:
        ranked = scenario.trace_resources(roster, event)
    except scenario.FallbackRequired as exc:
        print(f"fallback required: {exc}", file=sys.stderr)
        return 1
    for i, r in enumerate(ranked, start=1):
        if args.format == "lines":
            print(f"responder\t{i}\t{r.name}\t{r.profession}\t"
                  f"{r.specialization or '-'}\t{r.coach}\t{r.distance}")
        else:
            print(f"{i}. {r.name} ({r.profession}"
                  + (f"/{r.specialization}" if r.specialization else "")
                  + f", coach {r.coach}, distance {r.distance})")
    return 0


def cmd_severity(args: argparse.Namespace) -> int:
    rules_path = Path(args.rules) if args.rules else data_path("severity.rules")
    rules = ontology.load_severity_rules(_read(rules_path), str(rules_path))
    symptoms = frozenset(s for s in args.symptoms.split(",") if s)
    print(ontology.classify_severity(args.spec, symptoms, rules))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    try:
        now = datetime.fromisoformat(args.now)
    except ValueError:
        raise FluxError(f"--now expects an ISO timestamp, found {args.now!r}") from None
    with scenario.EventLog(_log_path(args)) as log:
        ctx = _load_context(args, log)
        info = scenario.EmergencyInfo(
            event_type=scenario.EventType(args.type),
            specialization=args.spec,
            symptoms=frozenset(s for s in args.symptoms.split(",") if s),
            case_history=args.case,
        )
        outcome = scenario.report_emergency(ctx, args.pnr, info, now=now)
    if args.format == "lines":
        print(scenario.record_to_line(outcome.record_id, outcome.record))
        if outcome.trace is not None:
            for line in outcome.trace.to_lines():
                print(line)
    else:
        if outcome.kind is scenario.OutcomeKind.RESPONDER_ASSIGNED:
            print(f"record {outcome.record_id}: responder "
                  f"{outcome.record.delivery_personnel} notified "
                  f"({outcome.record.confirmation})")
        else:
            print(f"record {outcome.record_id}: fallback notice to station "
                  f"{outcome.record.station} ({outcome.record.reason})")
    return 0 if outcome.kind is scenario.OutcomeKind.RESPONDER_ASSIGNED else 1


def cmd_simulate(args: argparse.Namespace) -> int:
    script_path = Path(args.script)
    with scenario.EventLog(_log_path(args)) as log:
        ctx = _load_context(args, log)
        steps = scenario.run_script(ctx, _read(script_path), str(script_path))
    for step in steps:
        if args.format == "lines" and step.outcome is not None:
            print(scenario.record_to_line(step.outcome.record_id,
                                          step.outcome.record))
        else:
            print(f"{script_path}:{step.lineno}: {step.command}: {step.summary}")
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "plan": cmd_plan,
    "compose": cmd_compose,
    "trace": cmd_trace,
    "severity": cmd_severity,
    "report": cmd_report,
    "simulate": cmd_simulate,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except planner.NoPlanFound as exc:
        print(f"no plan within depth {exc.depth}", file=sys.stderr)
        return 1
    except scenario.FallbackRequired as exc:
        print(f"fallback required: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"missing input file: {exc.filename}", file=sys.stderr)
        return 2
    except FluxError as exc:
        print(str(exc), file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
