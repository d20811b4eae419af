"""End-to-end composition: request -> planning problem -> workflow -> execution.

A composition request names typed values the caller already has, the concepts
it wants known at completion, and ground facts seeding the initial state. The
composer compiles every registered service into an action, plans by
progression, wires each step input to its source (a request value or an
earlier step's output placeholder), and can execute the workflow against
in-process grounding stubs that bind placeholders to concrete values.

Workflows and traces serialize to tab-separated lines (one record per line)
for golden tests; the field order is documented in the README.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

from .errors import FluxError
from .ontology import Concept, MatchDegree, TaxonomyGraph, UnknownConceptError, match_degree
from .planner import Plan, PlanningProblem, SearchConfig, plan as find_plan
from .registry import Registry, compile_service_to_action
from .terms import Compound, Constant, Placeholder, State, Term, Variable


class ExecutionError(FluxError):
    """A grounding stub failed; carries the step index and the partial trace."""

    def __init__(self, step: int, reason: str, trace: "ExecutionTrace"):
        self.step = step
        self.reason = reason
        self.trace = trace
        super().__init__(f"execution failed at step {step}: {reason}")


class GroundingFailure(FluxError):
    """Raised by a stub to signal a domain-level failure (e.g. no matching resource)."""


@dataclass(frozen=True)
class CompositionRequest:
    have: tuple[tuple[Concept, str], ...] = ()
    want: tuple[Concept, ...] = ()
    world_facts: tuple[Term, ...] = ()


@dataclass(frozen=True)
class RequestSource:
    concept: Concept
    value: str
    degree: MatchDegree

    def __str__(self) -> str:
        return f"req:{self.concept}:{self.value}:{self.degree}"


@dataclass(frozen=True)
class StepSource:
    step: int
    out_param: str
    concept: Concept

    def __str__(self) -> str:
        return f"out:{self.step}:{self.out_param}"


Source = Union[RequestSource, StepSource]


@dataclass(frozen=True)
class WireEntry:
    step: int
    param: str
    source: Source


@dataclass(frozen=True)
class Workflow:
    plan: Plan
    wiring: tuple[WireEntry, ...]

    @property
    def is_empty(self) -> bool:
        return not self.plan.steps

    def to_lines(self, reg: Registry) -> list[str]:
        """One `step` record per plan step: index, service, semicolon-joined wires."""
        lines = []
        for i, ga in enumerate(self.plan.steps):
            wires = ";".join(
                f"{w.param}={w.source}" for w in self.wiring if w.step == i
            )
            lines.append(f"step\t{i}\t{ga.name}\t{wires}")
        return lines


@dataclass(frozen=True)
class TraceRecord:
    step: int
    service: str
    inputs: tuple[tuple[str, str], ...]
    outputs: tuple[tuple[str, str], ...]
    outcome: str

    def to_line(self) -> str:
        ins = ",".join(f"{k}={v}" for k, v in self.inputs)
        outs = ",".join(f"{k}={v}" for k, v in self.outputs)
        return f"exec\t{self.step}\t{self.service}\t{ins}\t{outs}\t{self.outcome}"


@dataclass(frozen=True)
class ExecutionTrace:
    records: tuple[TraceRecord, ...] = ()

    def to_lines(self) -> list[str]:
        return [r.to_line() for r in self.records]

    def resolved_values(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for r in self.records:
            out.update(dict(r.outputs))
        return out


@dataclass(frozen=True)
class StubResult:
    outputs: Mapping[str, str]
    outcome: str = "ok"


Executor = Callable[[dict[str, str]], StubResult]


@dataclass
class GroundingEnv:
    """In-process stand-in for service groundings.

    Maps stub ids to executors over bound inputs; carries the roster and the
    message sink the bundled stubs work against. ``extras`` is a side channel
    stubs may use to surface structured results (e.g. a ranked responder list).
    """

    stubs: dict[str, Executor]
    roster: object = None
    message_sink: object = None
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Request -> problem -> workflow
# ---------------------------------------------------------------------------


def build_problem(req: CompositionRequest, reg: Registry,
                  g: TaxonomyGraph) -> PlanningProblem:
    """Translate a request into a planning problem over compiled service actions.

    The initial state holds the request's world facts plus know(C(v)) for each
    typed value; when a held concept strictly specializes a concept some
    service takes as input, the knowledge is also asserted at the ancestor
    concept so the planner can wire it (a plugin-degree match). Goals are
    know(C(_)) patterns, one per wanted concept.
    """
    for concept, _ in req.have:
        if not g.declares(concept):
            raise UnknownConceptError(concept)
    for concept in req.want:
        if not g.declares(concept):
            raise UnknownConceptError(concept)

    input_concepts = {
        c for svc in reg.sorted_services() for _, c in svc.inputs
    }
    initial: list[Term] = list(req.world_facts)
    for concept, value in req.have:
        initial.append(Compound("know", (Compound(concept, (Constant(value),)),)))
        for wider in g.ancestors(concept) & input_concepts:
            if wider != concept:
                initial.append(
                    Compound("know", (Compound(wider, (Constant(value),)),)))

    goal = tuple(
        Compound("know", (Compound(concept, (Variable(f"WANT{i}"),)),))
        for i, concept in enumerate(req.want)
    )
    actions = tuple(
        compile_service_to_action(svc) for svc in reg.sorted_services()
    )
    return PlanningProblem(State.from_terms(initial), goal, actions)


def compose(req: CompositionRequest, reg: Registry, g: TaxonomyGraph,
            cfg: SearchConfig = SearchConfig()) -> Workflow:
    """Plan a workflow for the request and wire every step input to a source.

    Raises NoPlanFound when the registry cannot satisfy the request within the
    configured depth.
    """
    problem = build_problem(req, reg, g)
    p = find_plan(problem, cfg)
    wiring: list[WireEntry] = []
    producer = p.placeholder_steps
    for i, ga in enumerate(p.steps):
        svc = reg.get(ga.name)
        for (param, concept), arg in zip(svc.inputs, ga.args):
            wiring.append(WireEntry(i, param, _source_of(arg, concept, req, g,
                                                         producer)))
    return Workflow(p, tuple(wiring))


def _source_of(arg: Term, concept: Concept, req: CompositionRequest,
               g: TaxonomyGraph, producer: Mapping[Placeholder, int]) -> Source:
    if isinstance(arg, Placeholder):
        return StepSource(producer[arg], arg.param, concept)
    if isinstance(arg, Constant):
        best: Optional[RequestSource] = None
        for have_concept, value in req.have:
            if value != arg.name:
                continue
            degree = match_degree(have_concept, concept, g)
            if degree >= MatchDegree.PLUGIN and (best is None or degree > best.degree):
                best = RequestSource(have_concept, value, degree)
        if best is not None:
            return best
    raise FluxError(f"no source for step input {concept}={arg}")


# ---------------------------------------------------------------------------
# Execution against grounding stubs
# ---------------------------------------------------------------------------


def execute(w: Workflow, env: GroundingEnv, reg: Registry) -> ExecutionTrace:
    """Run a workflow's steps in order, binding placeholders to stub outputs.

    Each stub receives the step's bound inputs and must return a value for
    every declared output parameter; the returned values replace that step's
    placeholders for all downstream steps. On stub failure an ExecutionError
    is raised carrying the trace up to (excluding) the failed step.
    """
    records: list[TraceRecord] = []
    bound: dict[Placeholder, str] = {}

    def resolve(arg: Term) -> str:
        if isinstance(arg, Placeholder):
            return bound[arg]
        if isinstance(arg, Constant):
            return arg.name
        raise FluxError(f"cannot resolve non-ground argument {arg}")

    for i, ga in enumerate(w.plan.steps):
        svc = reg.get(ga.name)
        stub = env.stubs.get(svc.grounding_stub_id)
        partial = ExecutionTrace(tuple(records))
        if stub is None:
            raise ExecutionError(i, f"no grounding stub {svc.grounding_stub_id!r}",
                                 partial)
        inputs = {param: resolve(arg)
                  for (param, _), arg in zip(svc.inputs, ga.args)}
        try:
            result = stub(inputs)
        except GroundingFailure as exc:
            raise ExecutionError(i, str(exc), partial) from exc
        outputs: list[tuple[str, str]] = []
        for param, _concept in svc.outputs:
            if param not in result.outputs:
                raise ExecutionError(
                    i, f"stub returned no value for output {param!r}", partial)
            value = result.outputs[param]
            outputs.append((param, value))
            bound[Placeholder(svc.name, param, i + 1)] = value
        records.append(TraceRecord(
            i, svc.name, tuple(sorted(inputs.items())), tuple(outputs),
            result.outcome))
    return ExecutionTrace(tuple(records))
