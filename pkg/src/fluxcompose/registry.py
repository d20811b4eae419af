"""Service descriptions (profile / process / grounding) and their compilation.

Registry files use one block per service; field order is fixed so pretty
printing is byte-stable:

    service <name>
      textDescription: <free text>
      hasInput: <PARAM> : <Concept>
      hasOutput: <PARAM> : <Concept>
      precondition: <holds(...) | knows_val(...)>
      effectAdd: <fluent pattern>
      effectRemove: <fluent pattern>
      grounding: <stub id>
    end

``#`` starts a comment. A typed parameter (P : Concept) is represented at the
fluent level as Concept(P): inputs compile to knows_val preconditions and
outputs to know(...) add-effects whose variables are outputs of the action.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from . import dsl
from .errors import FluxError, ParseError
from .ontology import Concept, MatchDegree, TaxonomyGraph, UnknownConceptError, match_degree
from .terms import Compound, Term, Variable, variables_in

REGISTRY_EXTENSION = ".reg"

_PARAM_RE = re.compile(r"[A-Z][A-Z0-9_]*\Z")


class DuplicateServiceError(FluxError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"duplicate service name: {name}")


@dataclass(frozen=True)
class ServiceDescription:
    name: str
    text_description: str
    inputs: tuple[tuple[str, Concept], ...]
    outputs: tuple[tuple[str, Concept], ...]
    extra_preconditions: tuple[dsl.Atom, ...]
    extra_adds: tuple[Term, ...]
    extra_removes: tuple[Term, ...]
    grounding_stub_id: str


@dataclass(frozen=True)
class Registry:
    services: Mapping[str, ServiceDescription]

    def get(self, name: str) -> ServiceDescription:
        return self.services[name]

    def sorted_services(self) -> list[ServiceDescription]:
        return [self.services[n] for n in sorted(self.services)]

    def __len__(self) -> int:
        return len(self.services)


EMPTY_REGISTRY = Registry({})


def load_registry(source: str, g: TaxonomyGraph,
                  source_name: str = "<string>") -> Registry:
    """Parse a registry file, validating every concept against the taxonomy."""
    services: dict[str, ServiceDescription] = {}
    block: dict | None = None

    def fail(lineno: int, expected: str, found: str) -> ParseError:
        return ParseError(lineno, 1, expected, found, source_name)

    def parse_typed_param(lineno: int, rest: str) -> tuple[str, Concept]:
        parts = [p.strip() for p in rest.split(":")]
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise fail(lineno, "<PARAM> : <Concept>", repr(rest))
        param, concept = parts
        if not _PARAM_RE.match(param):
            raise fail(lineno, "an all-caps parameter name", repr(param))
        if not g.declares(concept):
            raise UnknownConceptError(concept)
        if any(param == p for p, _ in block["inputs"] + block["outputs"]):
            raise fail(lineno, "a fresh parameter name", repr(param))
        return param, concept

    def finish(lineno: int) -> None:
        if block["grounding"] is None:
            raise fail(lineno, "a grounding field before 'end'", "'end'")
        svc = ServiceDescription(
            name=block["name"],
            text_description=block["description"],
            inputs=tuple(block["inputs"]),
            outputs=tuple(block["outputs"]),
            extra_preconditions=tuple(block["pre"]),
            extra_adds=tuple(block["adds"]),
            extra_removes=tuple(block["removes"]),
            grounding_stub_id=block["grounding"],
        )
        if svc.name in services:
            raise DuplicateServiceError(svc.name)
        services[svc.name] = svc

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if block is None:
            words = line.split()
            if len(words) != 2 or words[0] != "service":
                raise fail(lineno, "'service <name>'", repr(line))
            block = {"name": words[1], "description": "", "inputs": [],
                     "outputs": [], "pre": [], "adds": [], "removes": [],
                     "grounding": None}
            continue
        if line == "end":
            finish(lineno)
            block = None
            continue
        field, _, rest = line.partition(":")
        field = field.strip()
        rest = rest.strip()
        try:
            if field == "textDescription":
                block["description"] = rest
            elif field == "hasInput":
                block["inputs"].append(parse_typed_param(lineno, rest))
            elif field == "hasOutput":
                block["outputs"].append(parse_typed_param(lineno, rest))
            elif field == "precondition":
                block["pre"].append(dsl.parse_atom_text(rest, source_name))
            elif field == "effectAdd":
                block["adds"].append(dsl.parse_term_text(rest, source_name))
            elif field == "effectRemove":
                block["removes"].append(dsl.parse_term_text(rest, source_name))
            elif field == "grounding":
                if not rest:
                    raise fail(lineno, "a grounding stub id", repr(line))
                block["grounding"] = rest
            else:
                raise fail(lineno, "a service field or 'end'", repr(line))
        except ParseError as exc:
            if exc.line == lineno:
                raise
            raise ParseError(lineno, exc.column, exc.expected, exc.found,
                             source_name) from None
    if block is not None:
        raise fail(len(source.splitlines()) + 1, "'end'", "<end of input>")
    return Registry(services)


def compile_service_to_action(svc: ServiceDescription) -> dsl.ActionSchema:
    """Compile a service description into a fluent-calculus action schema.

    Inputs (p, C) become knows_val(C(p)) preconditions; outputs (q, D) become
    know(D(q)) add-effects with q an output variable; extra preconditions and
    effects are appended verbatim.
    """
    params = tuple(Variable(p) for p, _ in svc.inputs)
    poss = tuple(
        dsl.Atom(dsl.KNOWS_VAL, Compound(concept, (Variable(p),)))
        for p, concept in svc.inputs
    ) + svc.extra_preconditions
    outputs = tuple(Variable(q) for q, _ in svc.outputs)
    adds = tuple(
        Compound("know", (Compound(concept, (Variable(q),)),))
        for q, concept in svc.outputs
    ) + svc.extra_adds
    removes = svc.extra_removes

    bound = set(params) | set(outputs)
    for atom in poss:
        bound.update(variables_in(atom.pattern))
    for t in adds:
        for v in variables_in(t):
            if v not in bound:
                raise FluxError(
                    f"service {svc.name}: effect variable {v.name} is neither "
                    f"an input, an output, nor bound by a precondition"
                )
    for t in removes:
        for v in variables_in(t):
            if v not in bound or v in outputs:
                raise FluxError(
                    f"service {svc.name}: remove-effect variable {v.name} is unbound"
                )
    return dsl.ActionSchema(svc.name, params, poss, adds, removes, outputs)


def find_candidates(reg: Registry, requested_outputs: list[Concept],
                    g: TaxonomyGraph) -> list[tuple[ServiceDescription, MatchDegree]]:
    """Services whose outputs cover every requested concept, best match first.

    A service covers a request at the worst-case degree over the requested
    concepts; anything below Subsumes excludes it. Ties break by name.
    """
    for concept in requested_outputs:
        if not g.declares(concept):
            raise UnknownConceptError(concept)
    ranked: list[tuple[ServiceDescription, MatchDegree]] = []
    for svc in reg.sorted_services():
        worst = MatchDegree.EXACT
        for requested in requested_outputs:
            best = MatchDegree.FAIL
            for _, advertised in svc.outputs:
                best = max(best, match_degree(advertised, requested, g))
            worst = min(worst, best)
        if worst > MatchDegree.FAIL:
            ranked.append((svc, worst))
    ranked.sort(key=lambda pair: (-pair[1], pair[0].name))
    return ranked


def pretty_print_registry(reg: Registry) -> str:
    """Render a registry with fixed field order; output is byte-stable."""
    blocks: list[str] = []
    for svc in reg.sorted_services():
        lines = [f"service {svc.name}"]
        if svc.text_description:
            lines.append(f"  textDescription: {svc.text_description}")
        lines.extend(f"  hasInput: {p} : {c}" for p, c in svc.inputs)
        lines.extend(f"  hasOutput: {p} : {c}" for p, c in svc.outputs)
        lines.extend(f"  precondition: {a}" for a in svc.extra_preconditions)
        lines.extend(f"  effectAdd: {t}" for t in svc.extra_adds)
        lines.extend(f"  effectRemove: {t}" for t in svc.extra_removes)
        lines.append(f"  grounding: {svc.grounding_stub_id}")
        lines.append("end")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")
