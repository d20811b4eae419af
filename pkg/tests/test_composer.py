"""Request translation, workflow wiring, and execution against grounding stubs."""

import pytest

from fluxcompose import composer, scenario
from fluxcompose.composer import (
    CompositionRequest,
    ExecutionError,
    GroundingEnv,
    RequestSource,
    StepSource,
    StubResult,
    build_problem,
    compose,
    execute,
)
from fluxcompose.ontology import MatchDegree, UnknownConceptError, load_taxonomy
from fluxcompose.planner import NoPlanFound, enumerate_plans, validate_plan
from fluxcompose.registry import EMPTY_REGISTRY, load_registry
from fluxcompose.terms import Compound, Constant

EMERGENCY_REQUEST = CompositionRequest(
    have=(("Profession", "doctor"), ("Specialization", "Orthopedics"),
          ("Message", "help")),
    want=("ConfirmSend",),
    world_facts=(Compound("availableRole",
                          (Constant("doctor"), Constant("Orthopedics"))),),
)


@pytest.fixture()
def grounded_env(validated_roster):
    event = scenario.EmergencyEvent(
        date="2011-11-05", time="09:20", patient_name="Arjun",
        case_history="fell", coach="S5", seat=21, delivery_personnel=None,
        event_type=scenario.EventType.MEDICAL, specialization="Orthopedics",
        symptoms=frozenset({"fracture"}),
        severity=scenario.Severity.EMERGENCY)
    sink = scenario.MessageSink()
    ctx = type("Deps", (), {"roster": validated_roster, "message_sink": sink,
                            "medical_professions": scenario.DEFAULT_MEDICAL_PROFESSIONS})()
    return scenario.build_grounding_env(ctx, event), sink


# ---------------------------------------------------------------------------
# build_problem
# ---------------------------------------------------------------------------


def test_build_problem_emergency_request(service_registry, taxonomy):
    problem = build_problem(EMERGENCY_REQUEST, service_registry, taxonomy)
    plans = enumerate_plans(problem, 2)
    assert len(plans) == 1
    assert [s.name for s in plans[0].steps] == ["findResource", "notifyResource"]


def test_build_problem_empty_request(service_registry, taxonomy):
    problem = build_problem(CompositionRequest(), service_registry, taxonomy)
    assert problem.initial.world == frozenset()
    assert problem.initial.knowledge == frozenset()
    assert problem.goal == ()


def test_build_problem_single_step_want(service_registry, taxonomy):
    request = CompositionRequest(
        have=(("Profession", "doctor"), ("Specialization", "Orthopedics")),
        want=("Name",),
        world_facts=EMERGENCY_REQUEST.world_facts,
    )
    problem = build_problem(request, service_registry, taxonomy)
    plans = enumerate_plans(problem, 1)
    assert len(plans) == 1
    assert [s.name for s in plans[0].steps] == ["findResource"]


def test_build_problem_unknown_concept(service_registry, taxonomy):
    with pytest.raises(UnknownConceptError):
        build_problem(CompositionRequest(have=(("NoSuch", "x"),)),
                      service_registry, taxonomy)
    with pytest.raises(UnknownConceptError):
        build_problem(CompositionRequest(want=("NoSuch",)),
                      service_registry, taxonomy)


# ---------------------------------------------------------------------------
# compose
# ---------------------------------------------------------------------------


def test_compose_emergency_workflow(service_registry, taxonomy):
    wf = compose(EMERGENCY_REQUEST, service_registry, taxonomy)
    assert [s.name for s in wf.plan.steps] == ["findResource", "notifyResource"]
    sources = {(w.step, w.param): w.source for w in wf.wiring}
    assert sources[(0, "PR")] == RequestSource("Profession", "doctor",
                                               MatchDegree.EXACT)
    assert sources[(1, "P")] == StepSource(0, "P", "Name")
    assert sources[(1, "CN")] == StepSource(0, "CN", "Coach")
    assert sources[(1, "MSG")] == RequestSource("Message", "help", MatchDegree.EXACT)
    problem = build_problem(EMERGENCY_REQUEST, service_registry, taxonomy)
    assert validate_plan(problem, wf.plan)


def test_compose_want_subset_of_have_is_empty(service_registry, taxonomy):
    request = CompositionRequest(have=(("Name", "Ravi"),), want=("Name",))
    wf = compose(request, service_registry, taxonomy)
    assert wf.is_empty and wf.wiring == ()


def test_compose_empty_registry_fails(taxonomy):
    with pytest.raises(NoPlanFound):
        compose(CompositionRequest(want=("ConfirmSend",)), EMPTY_REGISTRY, taxonomy)


def test_compose_plugin_degree_input_wiring():
    g = load_taxonomy(
        "root Specialization\nconcept Orthopedics subClassOf Specialization\n"
        "root Name\n")
    reg = load_registry(
        "service lookup\n"
        "  hasInput: SP : Specialization\n"
        "  hasOutput: N : Name\n"
        "  grounding: stub\nend\n", g)
    request = CompositionRequest(have=(("Orthopedics", "orthoCase"),),
                                 want=("Name",))
    wf = compose(request, reg, g)
    assert [s.name for s in wf.plan.steps] == ["lookup"]
    (wire,) = wf.wiring
    assert wire.source == RequestSource("Orthopedics", "orthoCase",
                                        MatchDegree.PLUGIN)


def test_workflow_serialization_is_stable(service_registry, taxonomy):
    a = compose(EMERGENCY_REQUEST, service_registry, taxonomy)
    b = compose(EMERGENCY_REQUEST, service_registry, taxonomy)
    assert a.to_lines(service_registry) == b.to_lines(service_registry)
    assert a.to_lines(service_registry)[0].startswith("step\t0\tfindResource\t")


# ---------------------------------------------------------------------------
# execute
# ---------------------------------------------------------------------------


def test_execute_emergency_workflow(service_registry, taxonomy, grounded_env):
    env, sink = grounded_env
    wf = compose(EMERGENCY_REQUEST, service_registry, taxonomy)
    trace = execute(wf, env, service_registry)
    assert [r.service for r in trace.records] == ["findResource", "notifyResource"]
    find = trace.records[0]
    assert dict(find.outputs) == {"P": "Ravi", "CN": "S7"}
    notify = trace.records[1]
    assert dict(notify.inputs) == {"P": "Ravi", "CN": "S7", "MSG": "help"}
    assert notify.outcome == "ConfirmSend"
    assert sink.entries == [("Ravi", "S7", "help")]


def test_execute_empty_workflow(service_registry, grounded_env):
    env, _ = grounded_env
    wf = composer.Workflow(composer.Plan(()), ())
    assert execute(wf, env, service_registry).records == ()


def test_execute_no_matching_resource(service_registry, taxonomy, roster):
    # nobody on the roster has a validated travel plan, so the lookup fails
    event = scenario.EmergencyEvent(
        date="2011-11-05", time="09:20", patient_name="Arjun",
        case_history="fell", coach="S5", seat=21, delivery_personnel=None,
        event_type=scenario.EventType.MEDICAL, specialization="Orthopedics",
        symptoms=frozenset(), severity=scenario.Severity.EMERGENCY)
    ctx = type("Deps", (), {"roster": roster, "message_sink": scenario.MessageSink(),
                            "medical_professions": scenario.DEFAULT_MEDICAL_PROFESSIONS})()
    env = scenario.build_grounding_env(ctx, event)
    wf = compose(EMERGENCY_REQUEST, service_registry, taxonomy)
    with pytest.raises(ExecutionError) as exc:
        execute(wf, env, service_registry)
    assert exc.value.step == 0
    assert exc.value.reason == "no matching resource"
    assert exc.value.trace.records == ()


def test_execute_missing_stub(service_registry, taxonomy):
    wf = compose(EMERGENCY_REQUEST, service_registry, taxonomy)
    with pytest.raises(ExecutionError) as exc:
        execute(wf, GroundingEnv(stubs={}), service_registry)
    assert "roster-lookup" in exc.value.reason


def test_execute_stub_must_cover_outputs(service_registry, taxonomy):
    wf = compose(EMERGENCY_REQUEST, service_registry, taxonomy)
    env = GroundingEnv(stubs={
        "roster-lookup": lambda inputs: StubResult({"P": "Ravi"}),  # CN missing
        "message-send": lambda inputs: StubResult({"ACK": "x"}),
    })
    with pytest.raises(ExecutionError) as exc:
        execute(wf, env, service_registry)
    assert "CN" in exc.value.reason


def test_execution_agrees_with_plan_and_goal(service_registry, taxonomy,
                                             grounded_env):
    from fluxcompose.planner import apply_update, check_poss, satisfies_goal
    from fluxcompose.terms import Placeholder, State

    env, _ = grounded_env
    wf = compose(EMERGENCY_REQUEST, service_registry, taxonomy)
    trace = execute(wf, env, service_registry)
    # trace visits exactly the plan's steps in order
    assert [r.service for r in trace.records] == [s.name for s in wf.plan.steps]
    problem = build_problem(EMERGENCY_REQUEST, service_registry, taxonomy)
    assert validate_plan(problem, wf.plan)

    # the knowledge state after execution, with concrete values substituted
    # for placeholders, satisfies the goal
    schemas = {a.name: a for a in problem.actions}
    state = problem.initial
    for i, ga in enumerate(wf.plan.steps):
        schema = schemas[ga.name]
        subst = next(s for s in check_poss(schema, state)
                     if all(s.apply(p) == a for p, a in zip(schema.params, ga.args)))
        state = apply_update(schema, subst, state, step=i + 1, _checked=True)
    resolved_by_param = {}
    for i, record in enumerate(trace.records):
        svc = service_registry.get(record.service)
        for param, value in record.outputs:
            resolved_by_param[Placeholder(svc.name, param, i + 1)] = value

    def substitute(t):
        if isinstance(t, Placeholder):
            return Constant(resolved_by_param[t])
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(substitute(a) for a in t.args))
        return t

    concrete = State.from_terms([substitute(t) for t in state.all_terms()])
    assert satisfies_goal(concrete, problem.goal)
    assert trace.resolved_values()["ACK"].startswith("msg-")


def test_data_flow_sources_precede_consumers(service_registry, taxonomy):
    wf = compose(EMERGENCY_REQUEST, service_registry, taxonomy)
    for wire in wf.wiring:
        if isinstance(wire.source, StepSource):
            assert wire.source.step < wire.step


def test_grounding_determinism(service_registry, taxonomy, validated_roster):
    def run():
        event = scenario.EmergencyEvent(
            date="2011-11-05", time="09:20", patient_name="Arjun",
            case_history="fell", coach="S5", seat=21, delivery_personnel=None,
            event_type=scenario.EventType.MEDICAL, specialization="Orthopedics",
            symptoms=frozenset(), severity=scenario.Severity.EMERGENCY)
        ctx = type("Deps", (), {
            "roster": validated_roster, "message_sink": scenario.MessageSink(),
            "medical_professions": scenario.DEFAULT_MEDICAL_PROFESSIONS})()
        env = scenario.build_grounding_env(ctx, event)
        wf = compose(EMERGENCY_REQUEST, service_registry, taxonomy)
        return execute(wf, env, service_registry).to_lines()

    assert run() == run()
