"""Progression-based forward-search planner over fluent-calculus schemas.

Planning moves the initial state forward through action applications. Each
application checks the schema's poss conjunction, binds output variables to
fresh deterministic placeholders, and applies the add/remove update; every
fluent not removed persists, which is the whole point of the update axioms.

The search is iterative-deepening depth-first with canonical child ordering
(action name, then rendered arguments), so the returned plan is minimal in
length with deterministic lexicographic tie-breaking. A visited-state table
keyed on a placeholder-renamed canonical form prunes re-expansions without
changing the result.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from .dsl import ActionSchema, Atom, DomainFile, HOLDS, KNOWS_VAL, ProblemFile
from .errors import FluxError
from .terms import (
    EMPTY_SUBST,
    Placeholder,
    State,
    Substitution,
    Term,
    Variable,
    functor_arity,
    holds,
    is_ground,
    is_knowledge,
    knows_val,
    variables_in,
)


class NoPlanFound(FluxError):
    """No action sequence within the depth bound reaches the goal."""

    def __init__(self, depth: int):
        self.depth = depth
        super().__init__(f"no plan within depth {depth}")


class PreconditionViolation(FluxError):
    """A substitution passed to apply_update does not satisfy the schema's poss."""


@dataclass(frozen=True)
class SearchConfig:
    max_depth: int = 8
    strategy: str = "iterative-deepening"

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.strategy != "iterative-deepening":
            raise ValueError(f"unsupported strategy: {self.strategy}")


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        return "%s(%s)" % (self.name, ",".join(str(a) for a in self.args))

    def sort_key(self) -> tuple:
        return (self.name, tuple(str(a) for a in self.args))


@dataclass(frozen=True)
class Plan:
    """Ordered action sequence; produced maps each placeholder to its producing step."""

    steps: tuple[GroundAction, ...]
    produced: tuple[tuple[Placeholder, int], ...] = ()

    @property
    def placeholder_steps(self) -> dict[Placeholder, int]:
        return dict(self.produced)

    def sort_key(self) -> tuple:
        return (len(self.steps), tuple(s.sort_key() for s in self.steps))

    def __str__(self) -> str:
        return "; ".join(str(s) for s in self.steps) if self.steps else "<empty plan>"


@dataclass(frozen=True)
class PlanningProblem:
    initial: State
    goal: tuple[Term, ...]
    actions: tuple[ActionSchema, ...]


@dataclass(frozen=True)
class PlanCheck:
    ok: bool
    failed_step: Optional[int] = None

    def __bool__(self) -> bool:
        return self.ok


def make_problem(domain: DomainFile, problem: ProblemFile) -> PlanningProblem:
    """Tie a parsed domain and problem together, checking goal fluents are declared."""
    declared = domain.declared()
    for t in problem.goal:
        inner = t.args[0] if is_knowledge(t) else t
        name, arity = functor_arity(inner)
        if declared.get(name) != arity:
            raise FluxError(f"goal fluent {name}/{arity} is not declared by the domain")
    return PlanningProblem(State.from_terms(problem.initial), problem.goal,
                           domain.actions)


# ---------------------------------------------------------------------------
# Possibility check and state update
# ---------------------------------------------------------------------------


def _solve_atoms(atoms: Iterable[Atom], state: State,
                 start: Substitution = EMPTY_SUBST) -> list[Substitution]:
    """Solve a conjunction left to right; deterministic by canonical fluent order."""
    results = [start]
    for atom in atoms:
        source = holds if atom.kind == HOLDS else knows_val
        results = [
            extended
            for subst in results
            for extended in source(atom.pattern, state, subst)
        ]
        if not results:
            return []
    return results


def check_poss(schema: ActionSchema, state: State) -> list[Substitution]:
    """All substitutions under which the schema's poss conjunction holds.

    Every returned substitution grounds the schema's non-output variables; an
    empty list means the action is not applicable.
    """
    needed = set(schema.params)
    for atom in schema.poss:
        needed.update(variables_in(atom.pattern))
    out: list[Substitution] = []
    seen: set[tuple] = set()
    for subst in _solve_atoms(schema.poss, state):
        if not all(is_ground(subst.apply(v)) for v in needed):
            continue
        key = subst.dedup_key()
        if key not in seen:
            seen.add(key)
            out.append(subst)
    return out


def output_binding(schema: ActionSchema, step: int) -> dict[Variable, Placeholder]:
    """Deterministic fresh placeholders for the schema's outputs at a 1-based step."""
    return {v: Placeholder(schema.name, v.name, step) for v in schema.outputs}


def apply_update(schema: ActionSchema, subst: Substitution, state: State,
                 step: int = 1, _checked: bool = False) -> State:
    """Progress a state through one action application.

    Output variables are bound to fresh placeholders for the given step, then
    the update is applied: Z2 = (Z1 minus removes) union adds. Raises
    PreconditionViolation when subst does not satisfy poss in this state.
    """
    if not _checked:
        key = subst.dedup_key()
        if key not in {s.dedup_key() for s in check_poss(schema, state)}:
            raise PreconditionViolation(
                f"substitution {subst} does not satisfy poss of {schema.name}")
    full = subst.extend_all(output_binding(schema, step))
    adds = [full.apply(t) for t in schema.adds]
    removes = [full.apply(t) for t in schema.removes]
    return state.with_update(adds, removes)


def satisfies_goal(state: State, goal: Iterable[Term]) -> bool:
    """Existential conjunction over world and knowledge fluents.

    know(...) patterns query the knowledge set, everything else the world set;
    placeholder-valued fluents are admissible witnesses.
    """
    atoms = [
        Atom(KNOWS_VAL, t.args[0]) if is_knowledge(t) else Atom(HOLDS, t)
        for t in goal
    ]
    return bool(_solve_atoms(atoms, state))


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------

_PLACEHOLDER_MARK = re.compile(r"#out_\w+")


def _pruning_key(state: State) -> str:
    """Canonical key with placeholders renamed to position-based indices.

    States differing only in placeholder identity collapse to one key, so
    trips through differently-numbered but isomorphic states are pruned.
    """
    terms = sorted(
        (f.term for f in state.world | state.knowledge),
        key=lambda t: (_PLACEHOLDER_MARK.sub("#?", str(t)), str(t)),
    )
    mapping: dict[Placeholder, Placeholder] = {}

    def rename(t: Term) -> Term:
        if isinstance(t, Placeholder):
            if t not in mapping:
                mapping[t] = Placeholder("ph", "v", len(mapping))
            return mapping[t]
        if hasattr(t, "args"):
            return type(t)(t.functor, tuple(rename(a) for a in t.args))
        return t

    return "|".join(sorted(str(rename(t)) for t in terms))


def _children(actions: list[ActionSchema], state: State):
    """Applicable (schema, substitution, ground action) triples in canonical order."""
    out = []
    for schema in actions:
        for subst in check_poss(schema, state):
            args = tuple(subst.apply(p) for p in schema.params)
            out.append((schema, subst, GroundAction(schema.name, args)))
    out.sort(key=lambda triple: triple[2].sort_key())
    return out


def plan(problem: PlanningProblem, cfg: SearchConfig = SearchConfig(),
         _prune: bool = True) -> Plan:
    """Shortest plan reaching the goal, lexicographically first among equals.

    Raises NoPlanFound (carrying the depth searched) when no sequence of at
    most cfg.max_depth actions reaches a state satisfying every goal pattern.
    """
    actions = sorted(problem.actions, key=lambda a: a.name)
    for limit in range(cfg.max_depth + 1):
        visited: dict[str, int] = {}
        found = _dfs(problem, actions, problem.initial, [], [], 0, limit,
                     visited, _prune)
        if found is not None:
            return found
    raise NoPlanFound(cfg.max_depth)


def _dfs(problem: PlanningProblem, actions: list[ActionSchema], state: State,
         steps: list[GroundAction], produced: list[tuple[Placeholder, int]],
         depth: int, limit: int, visited: dict[str, int],
         prune: bool) -> Optional[Plan]:
    if satisfies_goal(state, problem.goal):
        return Plan(tuple(steps), tuple(produced))
    if depth == limit:
        return None
    if prune:
        key = _pruning_key(state)
        if visited.get(key, limit + 1) <= depth:
            return None
        visited[key] = depth
    for schema, subst, ga in _children(actions, state):
        nxt = apply_update(schema, subst, state, step=depth + 1, _checked=True)
        new_produced = [(ph, depth) for ph in output_binding(schema, depth + 1).values()]
        found = _dfs(problem, actions, nxt, steps + [ga], produced + new_produced,
                     depth + 1, limit, visited, prune)
        if found is not None:
            return found
    return None


def enumerate_plans(problem: PlanningProblem, max_depth: int) -> list[Plan]:
    """Every valid plan of length <= max_depth, in canonical order.

    Exhaustive and unpruned: this is the oracle the searching planner is
    checked against. Canonical order is (length, per-step action/argument
    keys), so the first element is exactly what plan() must return.
    """
    actions = sorted(problem.actions, key=lambda a: a.name)
    found: list[Plan] = []

    def rec(state: State, steps: list[GroundAction],
            produced: list[tuple[Placeholder, int]], depth: int) -> None:
        if satisfies_goal(state, problem.goal):
            found.append(Plan(tuple(steps), tuple(produced)))
        if depth == max_depth:
            return
        for schema, subst, _ga in _children(actions, state):
            nxt = apply_update(schema, subst, state, step=depth + 1, _checked=True)
            new_produced = [(ph, depth)
                            for ph in output_binding(schema, depth + 1).values()]
            rec(nxt, steps + [_ga], produced + new_produced, depth + 1)

    rec(problem.initial, [], [], 0)
    found.sort(key=Plan.sort_key)
    unique: list[Plan] = []
    seen: set[tuple] = set()
    for p in found:
        key = p.sort_key()
        if key not in seen:
            seen.add(key)
            unique.append(p)
    return unique


def validate_plan(problem: PlanningProblem, p: Plan) -> PlanCheck:
    """Simulate a plan from the initial state; report the first failing step.

    The check passes when each step's poss holds in the progressed state and
    the final state satisfies the goal (failed_step == len(steps) marks a
    goal failure).
    """
    schemas = {a.name: a for a in problem.actions}
    state = problem.initial
    for i, ga in enumerate(p.steps):
        schema = schemas.get(ga.name)
        if schema is None or len(ga.args) != len(schema.params):
            return PlanCheck(False, i)
        matching = [
            subst for subst in check_poss(schema, state)
            if all(subst.apply(param) == arg
                   for param, arg in zip(schema.params, ga.args))
        ]
        if not matching:
            return PlanCheck(False, i)
        state = apply_update(schema, matching[0], state, step=i + 1, _checked=True)
    if not satisfies_goal(state, problem.goal):
        return PlanCheck(False, len(p.steps))
    return PlanCheck(True, None)
