"""Poss checking, frame-preserving updates, search, and the enumeration oracle."""

import random

import pytest
from hypothesis import given, settings, strategies as st

import randgen
from fluxcompose import dsl, planner
from fluxcompose.planner import (
    NoPlanFound,
    PlanningProblem,
    PreconditionViolation,
    SearchConfig,
    apply_update,
    check_poss,
    enumerate_plans,
    output_binding,
    plan,
    satisfies_goal,
    validate_plan,
)
from fluxcompose.terms import (
    Compound,
    Constant,
    Placeholder,
    State,
    Variable,
    fluent,
)


def names(p):
    return [s.name for s in p.steps]


@pytest.fixture()
def find_resource(emergency_domain):
    return next(a for a in emergency_domain.actions if a.name == "findResource")


@pytest.fixture()
def notify_resource(emergency_domain):
    return next(a for a in emergency_domain.actions if a.name == "notifyResource")


# ---------------------------------------------------------------------------
# check_poss
# ---------------------------------------------------------------------------


def test_check_poss_find_resource(planning_problem, find_resource):
    got = check_poss(find_resource, planning_problem.initial)
    assert len(got) == 1
    subst = got[0]
    assert subst.apply(Variable("PR")) == Constant("doctor")
    assert subst.apply(Variable("SP")) == Constant("orthopedics")


def test_check_poss_missing_availability(find_resource):
    state = State.from_terms([
        Compound("know", (Compound("Profession", (Constant("doctor"),)),)),
        Compound("know", (Compound("Specialization", (Constant("orthopedics"),)),)),
    ])
    assert check_poss(find_resource, state) == []


def test_check_poss_empty_poss_yields_identity():
    schema = dsl.make_action_schema("noop", [], [], [], [])
    got = check_poss(schema, State())
    assert len(got) == 1 and len(got[0]) == 0


def test_check_poss_requires_ground_params():
    # a parameter not bound by poss can never be grounded, so no substitution
    schema = dsl.make_action_schema("f", [Variable("X")], [], [], [])
    assert check_poss(schema, State()) == []


# ---------------------------------------------------------------------------
# apply_update
# ---------------------------------------------------------------------------


def test_apply_update_frame_and_placeholders(planning_problem, find_resource):
    z1 = planning_problem.initial
    subst = check_poss(find_resource, z1)[0]
    z2 = apply_update(find_resource, subst, z1, step=1)
    # everything from Z1 persists (empty remove list)
    assert z1.world <= z2.world and z1.knowledge <= z2.knowledge
    p_ph = Placeholder("findResource", "P", 1)
    cn_ph = Placeholder("findResource", "CN", 1)
    assert Compound("know", (Compound("Name", (p_ph,)),)) in z2
    assert Compound("know", (Compound("CoachNum", (cn_ph,)),)) in z2
    assert Compound("availableAt", (p_ph, cn_ph)) in z2


def test_apply_update_notify_adds_confirmation(planning_problem, find_resource,
                                               notify_resource):
    z1 = planning_problem.initial
    z2 = apply_update(find_resource, check_poss(find_resource, z1)[0], z1, step=1)
    subst = check_poss(notify_resource, z2)[0]
    z3 = apply_update(notify_resource, subst, z2, step=2)
    p_ph = Placeholder("findResource", "P", 1)
    cn_ph = Placeholder("findResource", "CN", 1)
    assert Compound("SendMsg", (p_ph, cn_ph, Constant("help"))) in z3
    assert Compound("know", (Constant("ConfirmSend"),)) in z3


def test_apply_update_empty_update_is_identity():
    schema = dsl.make_action_schema("noop", [], [], [], [])
    state = State.from_terms([Constant("p")])
    assert apply_update(schema, check_poss(schema, state)[0], state) == state


def test_apply_update_rejects_bad_substitution(find_resource, planning_problem):
    from fluxcompose.terms import Substitution
    bad = Substitution({Variable("PR"): Constant("nurse"),
                        Variable("SP"): Constant("general")})
    with pytest.raises(PreconditionViolation):
        apply_update(find_resource, bad, planning_problem.initial)


def test_output_binding_is_deterministic(find_resource):
    assert output_binding(find_resource, 3) == output_binding(find_resource, 3)
    assert output_binding(find_resource, 1) != output_binding(find_resource, 2)


# ---------------------------------------------------------------------------
# plan / enumerate / validate on the emergency problem
# ---------------------------------------------------------------------------


def test_plan_emergency_two_steps(planning_problem):
    got = plan(planning_problem)
    assert names(got) == ["findResource", "notifyResource"]
    assert got.steps[0].args == (Constant("doctor"), Constant("orthopedics"))
    p_ph = Placeholder("findResource", "P", 1)
    cn_ph = Placeholder("findResource", "CN", 1)
    assert got.steps[1].args == (p_ph, cn_ph, Constant("help"))
    assert got.placeholder_steps[p_ph] == 0


def test_plan_satisfied_goal_is_empty(planning_problem):
    satisfied = PlanningProblem(
        planning_problem.initial,
        (Compound("know", (Compound("Profession", (Variable("X"),)),)),),
        planning_problem.actions)
    assert plan(satisfied).steps == ()


def test_plan_without_notify_is_no_plan(planning_problem, find_resource):
    crippled = PlanningProblem(planning_problem.initial, planning_problem.goal,
                               (find_resource,))
    with pytest.raises(NoPlanFound) as exc:
        plan(crippled, SearchConfig(max_depth=8))
    assert exc.value.depth == 8


def test_enumerate_emergency_depth2_is_unique(planning_problem):
    plans = enumerate_plans(planning_problem, 2)
    assert len(plans) == 1
    assert plans[0] == plan(planning_problem)


def test_enumerate_depth0(planning_problem):
    assert enumerate_plans(planning_problem, 0) == []
    satisfied = PlanningProblem(planning_problem.initial, (), planning_problem.actions)
    got = enumerate_plans(satisfied, 0)
    assert len(got) == 1 and got[0].steps == ()


def test_validate_plan_good_and_swapped(planning_problem):
    good = plan(planning_problem)
    assert validate_plan(planning_problem, good)
    swapped = planner.Plan((good.steps[1], good.steps[0]), good.produced)
    check = validate_plan(planning_problem, swapped)
    assert not check.ok and check.failed_step == 0


def test_validate_empty_plan_against_satisfied_goal(planning_problem):
    satisfied = PlanningProblem(planning_problem.initial, (), planning_problem.actions)
    assert validate_plan(satisfied, planner.Plan(()))
    check = validate_plan(planning_problem, planner.Plan(()))
    assert not check.ok and check.failed_step == 0


def test_plan_is_deterministic(planning_problem):
    a, b = plan(planning_problem), plan(planning_problem)
    assert str(a) == str(b) and a == b


def test_plan_breaks_ties_lexicographically():
    goal_fluent = Constant("done")
    mk = lambda name: dsl.make_action_schema(name, [], [], [goal_fluent], [])
    problem = PlanningProblem(State(), (goal_fluent,), (mk("zeta"), mk("alpha")))
    assert [s.name for s in plan(problem).steps] == ["alpha"]

    # same action, two bindings: smaller rendered argument wins
    pattern = Compound("p", (Variable("X"),))
    schema = dsl.make_action_schema(
        "act", [Variable("X")], [dsl.Atom("holds", pattern)], [goal_fluent], [])
    problem = PlanningProblem(
        State.from_terms([Compound("p", (Constant("b"),)),
                          Compound("p", (Constant("a"),))]),
        (goal_fluent,), (schema,))
    assert plan(problem).steps[0].args == (Constant("a"),)


def test_goal_matches_placeholder_valued_fluents(planning_problem, find_resource):
    z2 = apply_update(find_resource, check_poss(find_resource,
                                                planning_problem.initial)[0],
                      planning_problem.initial, step=1)
    goal = (Compound("know", (Compound("Name", (Variable("N"),)),)),)
    assert satisfies_goal(z2, goal)


# ---------------------------------------------------------------------------
# randomized properties
# ---------------------------------------------------------------------------


def _frame_check(problem, schema, subst, state, step):
    z2 = apply_update(schema, subst, state, step=step, _checked=True)
    full = subst.extend_all(output_binding(schema, step))
    adds = {fluent(full.apply(t)) for t in schema.adds}
    removes = {fluent(full.apply(t)) for t in schema.removes}
    before = state.world | state.knowledge
    after = z2.world | z2.knowledge
    # fluent-by-fluent: persistence, additions, and no inventions
    for f in before:
        if f not in removes:
            assert f in after
    for f in adds:
        assert f in after
    for f in after:
        assert f in before or f in adds
    assert after == (before - removes) | adds
    return z2


@given(st.integers(0, 2**32))
@settings(max_examples=80, deadline=None)
def test_frame_property_random_domains(seed):
    rng = random.Random(seed)
    problem = randgen.random_problem(rng)
    state = problem.initial
    for step in range(1, 4):
        options = [(a, s) for a in problem.actions for s in check_poss(a, state)]
        if not options:
            break
        schema, subst = rng.choice(options)
        state = _frame_check(problem, schema, subst, state, step)


@given(st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_plan_agrees_with_enumeration_oracle(seed):
    rng = random.Random(seed)
    problem = randgen.random_problem(rng)
    depth = rng.randint(1, 4)
    all_plans = enumerate_plans(problem, depth)
    try:
        got = plan(problem, SearchConfig(max_depth=depth))
    except NoPlanFound:
        assert all_plans == []
        return
    assert all_plans, "plan() found a plan the oracle missed"
    assert got == all_plans[0]
    assert validate_plan(problem, got)


@given(st.integers(0, 2**32))
@settings(max_examples=30, deadline=None)
def test_pruning_never_changes_the_result(seed):
    rng = random.Random(seed)
    problem = randgen.random_problem(rng)
    cfg = SearchConfig(max_depth=3)
    try:
        pruned = plan(problem, cfg, _prune=True)
    except NoPlanFound as exc:
        with pytest.raises(NoPlanFound):
            plan(problem, cfg, _prune=False)
        return
    assert pruned == plan(problem, cfg, _prune=False)
