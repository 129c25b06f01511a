import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from reconfcsp.core import (
    Assignment,
    ConstraintGraph,
    InstanceError,
    ReconfInstance,
    ReconfigSequence,
    Value,
    deserialize,
    sequence_value,
    serialize,
    validate_sequence,
    value,
)

from conftest import single_edge, triangle_equality


def test_value_single_edge_satisfied():
    inst = single_edge({(0, 0)}, 2, (0, 0), (0, 0))
    assert value(inst.graph, inst.psi_ini) == Value(1, 1)


def test_value_triangle_enumerated(triangle):
    psi = Assignment({"a": 0, "b": 0, "c": 1})
    # independent oracle: count the three edges directly
    expected = sum(
        1 for u, w in [("a", "b"), ("b", "c"), ("c", "a")] if psi.values[u] == psi.values[w]
    )
    assert expected == 1
    assert value(triangle.graph, psi) == Value(1, 3)


def test_value_vacuous_constraints():
    full = frozenset(itertools.product(range(3), repeat=2))
    graph = ConstraintGraph(2, ("x", "y"), (("x", "y"), ("y", "x")), 3, (full, full))
    psi = Assignment({"x": 2, "y": 1})
    assert value(graph, psi) == Value(2, 2) == 1


def test_value_errors(triangle):
    with pytest.raises(InstanceError, match="incomplete assignment"):
        value(triangle.graph, Assignment({"a": 0, "b": 0}))
    empty = ConstraintGraph(2, ("a", "b"), (), 2, ())
    with pytest.raises(InstanceError, match="no constraints"):
        value(empty, Assignment({"a": 0, "b": 0}))


def test_sequence_value_single_satisfying_step(triangle):
    seq = ReconfigSequence((triangle.psi_ini,))
    assert sequence_value(triangle.graph, seq) == 1


def test_sequence_value_triangle_flip_path(triangle):
    steps = [Assignment({"a": 0, "b": 0, "c": 0})]
    steps.append(steps[-1].with_value("a", 1))
    steps.append(steps[-1].with_value("b", 1))
    steps.append(steps[-1].with_value("c", 1))
    per_step = [value(triangle.graph, s) for s in steps]
    assert [v.satisfied for v in per_step] == [3, 1, 1, 3]
    assert sequence_value(triangle.graph, ReconfigSequence(tuple(steps))) == Value(1, 3)


def test_sequence_value_idempotent_repeat(triangle):
    psi = Assignment({"a": 0, "b": 1, "c": 0})
    seq = ReconfigSequence((psi, psi))
    assert sequence_value(triangle.graph, seq) == value(triangle.graph, psi)


def test_sequence_value_rejects_double_move(triangle):
    seq = ReconfigSequence(
        (Assignment({"a": 0, "b": 0, "c": 0}), Assignment({"a": 1, "b": 1, "c": 0}))
    )
    with pytest.raises(InstanceError, match="steps 0 and 1"):
        sequence_value(triangle.graph, seq)


def test_validate_sequence():
    a = Assignment({"x": 0, "y": 0})
    b = Assignment({"x": 0, "y": 1})
    c = Assignment({"x": 1, "y": 1})
    assert validate_sequence(ReconfigSequence((a, b, c))) == []
    assert validate_sequence(ReconfigSequence((a, c))) == [0]
    assert validate_sequence(ReconfigSequence((a,))) == []


def test_value_comparisons_are_exact():
    assert Value(1, 3) == Value(2, 6)
    assert Value(1, 3) < Value(1, 2)
    big = 8000**4
    assert Value(big - 1, big) < Value(1, 1)
    assert Value(big - 1, big) >= Fraction(big - 1, big)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def test_serialize_round_trip(triangle):
    assert deserialize(serialize(triangle)) == triangle


def test_serialize_round_trip_with_overrides():
    graph = ConstraintGraph(
        2,
        ("x", "y"),
        (("y", "x"),),
        2,
        (frozenset({(3, 1), (0, 0)}),),
        vertex_alphabets={"y": 5},
    )
    inst = ReconfInstance(graph, Assignment({"x": 1, "y": 4}), Assignment({"x": 0, "y": 0}))
    assert deserialize(serialize(inst)) == inst


def test_deserialize_missing_endpoint(triangle):
    import json

    obj = json.loads(serialize(triangle))
    del obj["psi_tar"]
    with pytest.raises(InstanceError, match="missing endpoint"):
        deserialize(json.dumps(obj))


def test_deserialize_arity_mismatch(triangle):
    import json

    obj = json.loads(serialize(triangle))
    obj["edges"][0]["accept"] = [[0, 0, 0]]
    with pytest.raises(InstanceError, match="arity mismatch"):
        deserialize(json.dumps(obj))


def test_deserialize_out_of_range_symbol(triangle):
    import json

    obj = json.loads(serialize(triangle))
    obj["edges"][1]["accept"] = [[0, 7]]
    with pytest.raises(InstanceError, match="out of range"):
        deserialize(json.dumps(obj))


def test_deserialize_unknown_vertex(triangle):
    import json

    obj = json.loads(serialize(triangle))
    obj["edges"][0]["vertices"] = ["a", "zzz"]
    with pytest.raises(InstanceError, match="unknown vertex"):
        deserialize(json.dumps(obj))


# ---------------------------------------------------------------------------
# Property tests
# ---------------------------------------------------------------------------


@st.composite
def small_instances(draw):
    n_vertices = draw(st.integers(2, 4))
    alphabet = draw(st.integers(2, 3))
    names = tuple(f"v{i}" for i in range(n_vertices))
    n_edges = draw(st.integers(1, 4))
    edges = []
    accepts = []
    for _ in range(n_edges):
        edge = tuple(draw(st.sampled_from(names)) for _ in range(2))
        edges.append(edge)
        tuples = draw(
            st.sets(
                st.tuples(st.integers(0, alphabet - 1), st.integers(0, alphabet - 1)),
                min_size=0,
                max_size=4,
            )
        )
        accepts.append(frozenset(tuples))
    graph = ConstraintGraph(2, names, tuple(edges), alphabet, tuple(accepts))
    psi = Assignment({v: draw(st.integers(0, alphabet - 1)) for v in names})
    return graph, psi


@st.composite
def random_walks(draw):
    graph, psi = draw(small_instances())
    steps = [psi]
    for _ in range(draw(st.integers(0, 5))):
        v = draw(st.sampled_from(graph.vertices))
        s = draw(st.integers(0, graph.alphabet - 1))
        steps.append(steps[-1].with_value(v, s))
    return graph, ReconfigSequence(tuple(steps))


@given(small_instances(), st.randoms(use_true_random=False))
def test_value_invariant_under_relabeling(data, rng):
    graph, psi = data
    order = list(range(len(graph.edges)))
    rng.shuffle(order)
    renames = {v: f"w{i}" for i, v in enumerate(graph.vertices)}
    shuffled = ConstraintGraph(
        2,
        tuple(renames[v] for v in graph.vertices),
        tuple(tuple(renames[u] for u in graph.edges[i]) for i in order),
        graph.alphabet,
        tuple(graph.accepts[i] for i in order),
    )
    relabeled_psi = Assignment({renames[v]: s for v, s in psi.values.items()})
    assert value(graph, psi) == value(shuffled, relabeled_psi)


@given(random_walks())
def test_sequence_value_bounds_and_reversal(data):
    graph, seq = data
    v = sequence_value(graph, seq)
    first = value(graph, seq.steps[0])
    last = value(graph, seq.steps[-1])
    assert 0 <= v.fraction <= min(first.fraction, last.fraction)
    assert sequence_value(graph, seq.reversed()) == v


@st.composite
def two_walks(draw):
    graph, seq_a = draw(random_walks())
    steps = [seq_a.steps[-1]]
    for _ in range(draw(st.integers(0, 5))):
        v = draw(st.sampled_from(graph.vertices))
        s = draw(st.integers(0, graph.alphabet - 1))
        steps.append(steps[-1].with_value(v, s))
    return graph, seq_a, ReconfigSequence(tuple(steps))


@given(two_walks())
def test_concatenation_takes_min(data):
    graph, seq_a, seq_b = data
    assert seq_a.steps[-1] == seq_b.steps[0]
    joined = ReconfigSequence(seq_a.steps + seq_b.steps[1:])
    expected = min(
        sequence_value(graph, seq_a).fraction, sequence_value(graph, seq_b).fraction
    )
    assert sequence_value(graph, joined).fraction == expected


@given(small_instances())
def test_serialize_round_trip_random(data):
    graph, psi = data
    inst = ReconfInstance(graph, psi, psi)
    assert deserialize(serialize(inst)) == inst
