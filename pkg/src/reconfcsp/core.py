"""Constraint graphs, assignments, reconfiguration sequences, and exact values.

Symbols are integers in `range(alphabet)`; vertex ids are opaque strings and
all declared orders (vertices, hyperedges, accepted tuples) are preserved by
the serializer.  Values are exact integer pairs; comparisons never touch
floating point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence


class InstanceError(ValueError):
    """A malformed instance, assignment, or sequence."""


@dataclass(frozen=True, eq=False)
class Value:
    """Exact satisfied/total hyperedge count of an assignment or sequence."""

    satisfied: int
    total: int

    def __post_init__(self) -> None:
        if self.total <= 0:
            raise InstanceError("no constraints: total hyperedge count must be positive")
        if not 0 <= self.satisfied <= self.total:
            raise InstanceError(f"satisfied count {self.satisfied} outside [0, {self.total}]")

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.satisfied, self.total)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Value):
            return self.fraction == other.fraction
        if isinstance(other, (int, Fraction)):
            return self.fraction == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.fraction)

    def __lt__(self, other: "Value | int | Fraction") -> bool:
        return self.fraction < (other.fraction if isinstance(other, Value) else other)

    def __le__(self, other: "Value | int | Fraction") -> bool:
        return self.fraction <= (other.fraction if isinstance(other, Value) else other)

    def __gt__(self, other: "Value | int | Fraction") -> bool:
        return self.fraction > (other.fraction if isinstance(other, Value) else other)

    def __ge__(self, other: "Value | int | Fraction") -> bool:
        return self.fraction >= (other.fraction if isinstance(other, Value) else other)

    def __str__(self) -> str:
        return f"{self.satisfied}/{self.total}"


@dataclass(frozen=True)
class ConstraintGraph:
    """A q-ary constraint graph with per-hyperedge acceptable-tuple sets.

    Duplicate hyperedges are permitted and counted with multiplicity.  A
    per-vertex alphabet override supports mixed alphabets produced by the
    assignment-tester composition; vertices without an override use the
    graph-wide `alphabet`.
    """

    q: int
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, ...], ...]
    alphabet: int
    accepts: tuple[frozenset[tuple[int, ...]], ...]
    vertex_alphabets: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.q < 1:
            raise InstanceError("arity must be positive")
        if self.alphabet < 1:
            raise InstanceError("alphabet size must be positive")
        if len(set(self.vertices)) != len(self.vertices):
            raise InstanceError("duplicate vertex id")
        if len(self.accepts) != len(self.edges):
            raise InstanceError("accepts/edges length mismatch")
        known = set(self.vertices)
        for name, size in self.vertex_alphabets.items():
            if name not in known:
                raise InstanceError(f"alphabet override for unknown vertex id {name!r}")
            if size < 1:
                raise InstanceError(f"alphabet override for {name!r} must be positive")
        for i, edge in enumerate(self.edges):
            if len(edge) != self.q:
                raise InstanceError(f"edges[{i}]: arity mismatch (got {len(edge)}, declared {self.q})")
            for v in edge:
                if v not in known:
                    raise InstanceError(f"edges[{i}]: unknown vertex id {v!r}")
            sizes = [self.alphabet_of(v) for v in edge]
            for t, tup in enumerate(sorted(self.accepts[i])):
                if len(tup) != self.q:
                    raise InstanceError(f"edges[{i}].accept[{t}]: arity mismatch")
                for coord, (sym, size) in enumerate(zip(tup, sizes)):
                    if not 0 <= sym < size:
                        raise InstanceError(
                            f"edges[{i}].accept[{t}]: symbol {sym} out of range "
                            f"for vertex {edge[coord]!r} (alphabet {size})"
                        )

    def alphabet_of(self, vertex: str) -> int:
        return self.vertex_alphabets.get(vertex, self.alphabet)

    @cached_property
    def vertex_index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def edge_satisfied(self, edge_index: int, psi: "Assignment") -> bool:
        edge = self.edges[edge_index]
        return tuple(psi.values[v] for v in edge) in self.accepts[edge_index]


@dataclass(frozen=True)
class Assignment:
    """A total map from vertex ids to symbols (immutable by convention)."""

    values: dict[str, int]

    def with_value(self, vertex: str, symbol: int) -> "Assignment":
        updated = dict(self.values)
        updated[vertex] = symbol
        return Assignment(updated)

    def changed_vertices(self, other: "Assignment") -> list[str]:
        keys = self.values.keys() | other.values.keys()
        return [v for v in keys if self.values.get(v) != other.values.get(v)]


@dataclass(frozen=True)
class ReconfigSequence:
    """An ordered list of assignments; neighbors differ in at most one vertex."""

    steps: tuple[Assignment, ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise InstanceError("a reconfiguration sequence must be non-empty")

    def reversed(self) -> "ReconfigSequence":
        return ReconfigSequence(tuple(reversed(self.steps)))


@dataclass(frozen=True)
class ReconfInstance:
    graph: ConstraintGraph
    psi_ini: Assignment
    psi_tar: Assignment

    def __post_init__(self) -> None:
        for label, psi in (("psi_ini", self.psi_ini), ("psi_tar", self.psi_tar)):
            check_total(self.graph, psi, where=label)

    def swapped(self) -> "ReconfInstance":
        return ReconfInstance(self.graph, self.psi_tar, self.psi_ini)


def check_total(graph: ConstraintGraph, psi: Assignment, where: str = "assignment") -> None:
    """Raise unless `psi` assigns an in-range symbol to every vertex."""
    for v in graph.vertices:
        if v not in psi.values:
            raise InstanceError(f"incomplete assignment: {where} misses vertex {v!r}")
        sym = psi.values[v]
        if not 0 <= sym < graph.alphabet_of(v):
            raise InstanceError(f"{where}: symbol {sym} out of range for vertex {v!r}")
    for v in psi.values:
        if v not in graph.vertex_index:
            raise InstanceError(f"{where}: unknown vertex id {v!r}")


def value(graph: ConstraintGraph, psi: Assignment) -> Value:
    """Exact fraction of hyperedges whose constraint accepts `psi`."""
    if not graph.edges:
        raise InstanceError("no constraints: graph has an empty hyperedge list")
    check_total(graph, psi)
    satisfied = sum(1 for i in range(len(graph.edges)) if graph.edge_satisfied(i, psi))
    return Value(satisfied, len(graph.edges))


def validate_sequence(seq: ReconfigSequence) -> list[int]:
    """Indices i where steps i and i+1 differ in more than one vertex."""
    bad = []
    for i in range(len(seq.steps) - 1):
        if len(seq.steps[i].changed_vertices(seq.steps[i + 1])) > 1:
            bad.append(i)
    return bad


def sequence_value(graph: ConstraintGraph, seq: ReconfigSequence) -> Value:
    """Minimum per-step value over a valid reconfiguration sequence."""
    violations = validate_sequence(seq)
    if violations:
        raise InstanceError(
            f"invalid sequence: steps {violations[0]} and {violations[0] + 1} "
            "differ in more than one vertex"
        )
    return min((value(graph, step) for step in seq.steps), key=lambda v: v.fraction)


# ---------------------------------------------------------------------------
# Instance file format
#
# A self-describing JSON document:
#   arity     - hyperedge arity q
#   alphabet  - graph-wide alphabet size
#   vertices  - list of "name" or {"name": ..., "alphabet": k} in declared order
#   edges     - list of {"vertices": [...], "accept": [[...], ...]}
#   psi_ini / psi_tar - maps vertex id -> symbol
# Symbols are decimal integers; lists keep declaration order.
# ---------------------------------------------------------------------------


def graph_to_obj(graph: ConstraintGraph) -> dict:
    vertices: list[object] = []
    for v in graph.vertices:
        if v in graph.vertex_alphabets:
            vertices.append({"name": v, "alphabet": graph.vertex_alphabets[v]})
        else:
            vertices.append(v)
    return {
        "arity": graph.q,
        "alphabet": graph.alphabet,
        "vertices": vertices,
        "edges": [
            {"vertices": list(edge), "accept": [list(t) for t in sorted(acc)]}
            for edge, acc in zip(graph.edges, graph.accepts)
        ],
    }


def serialize(instance: ReconfInstance) -> str:
    obj = graph_to_obj(instance.graph)
    order = instance.graph.vertices
    obj["psi_ini"] = {v: instance.psi_ini.values[v] for v in order}
    obj["psi_tar"] = {v: instance.psi_tar.values[v] for v in order}
    return json.dumps(obj, indent=2) + "\n"


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        hint = "missing endpoint" if key in ("psi_ini", "psi_tar") else f"missing field {key!r}"
        raise InstanceError(f"{where}: {hint}")
    return obj[key]


def graph_from_obj(obj: dict, where: str = "instance") -> ConstraintGraph:
    q = _require(obj, "arity", where)
    alphabet = _require(obj, "alphabet", where)
    raw_vertices = _require(obj, "vertices", where)
    names: list[str] = []
    overrides: dict[str, int] = {}
    for i, entry in enumerate(raw_vertices):
        if isinstance(entry, str):
            names.append(entry)
        elif isinstance(entry, dict):
            name = _require(entry, "name", f"{where}.vertices[{i}]")
            names.append(name)
            if "alphabet" in entry:
                overrides[name] = entry["alphabet"]
        else:
            raise InstanceError(f"{where}.vertices[{i}]: malformed field")
    edges: list[tuple[str, ...]] = []
    accepts: list[frozenset[tuple[int, ...]]] = []
    for i, entry in enumerate(_require(obj, "edges", where)):
        if not isinstance(entry, dict):
            raise InstanceError(f"{where}.edges[{i}]: malformed field")
        edge = tuple(_require(entry, "vertices", f"{where}.edges[{i}]"))
        tuples = _require(entry, "accept", f"{where}.edges[{i}]")
        edges.append(edge)
        accepts.append(frozenset(tuple(t) for t in tuples))
    try:
        return ConstraintGraph(
            q=q,
            vertices=tuple(names),
            edges=tuple(edges),
            alphabet=alphabet,
            accepts=tuple(accepts),
            vertex_alphabets=overrides,
        )
    except InstanceError as exc:
        raise InstanceError(f"{where}: {exc}") from exc


def _assignment_from_obj(obj: dict, key: str, graph: ConstraintGraph, where: str) -> Assignment:
    raw = _require(obj, key, where)
    if not isinstance(raw, dict):
        raise InstanceError(f"{where}.{key}: malformed field")
    psi = Assignment({str(v): int(s) for v, s in raw.items()})
    check_total(graph, psi, where=f"{where}.{key}")
    return psi


def deserialize(text: str) -> ReconfInstance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"instance: malformed field ({exc})") from exc
    if not isinstance(obj, dict):
        raise InstanceError("instance: malformed field (top level must be an object)")
    graph = graph_from_obj(obj, "instance")
    psi_ini = _assignment_from_obj(obj, "psi_ini", graph, "instance")
    psi_tar = _assignment_from_obj(obj, "psi_tar", graph, "instance")
    return ReconfInstance(graph, psi_ini, psi_tar)


def sequence_to_obj(seq: ReconfigSequence, order: Sequence[str]) -> dict:
    return {"steps": [{v: step.values[v] for v in order} for step in seq.steps]}


def sequence_from_obj(obj: dict, graph: ConstraintGraph) -> ReconfigSequence:
    steps_raw = _require(obj, "steps", "sequence")
    steps = []
    for i, raw in enumerate(steps_raw):
        psi = Assignment({str(v): int(s) for v, s in raw.items()})
        check_total(graph, psi, where=f"sequence.steps[{i}]")
        steps.append(psi)
    return ReconfigSequence(tuple(steps))
