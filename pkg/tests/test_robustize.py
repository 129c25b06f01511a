from fractions import Fraction

import pytest

from reconfcsp.constants import FARNESS_MARGIN, clause_two_radius, quarter_radius
from reconfcsp.core import (
    Assignment,
    InstanceError,
    ReconfInstance,
    ReconfigSequence,
    validate_sequence,
    value,
)
from reconfcsp.hadamard import (
    BitFunction,
    disagreement_set,
    generate_codeword_path,
    had_encode,
    hamming,
    rel_distance,
)
from reconfcsp.robustize import (
    BlockAssignment,
    RobustCircuit,
    adversarial_block_sequence,
    completeness_sequence,
    concat_blocks,
    count_satisfied,
    decode_block,
    eval_circuit,
    extract_psi_sequence,
    four_phase_block_path,
    materialize_micro_csp,
    micro_distance_to_sat,
    pad_alphabet,
    read_system,
    robustize,
    sat_inputs,
    single_bit_change,
    write_system,
)
from reconfcsp import solver

from conftest import single_edge


def circuit(pairs, n=2, weakened=False) -> RobustCircuit:
    return RobustCircuit(0, "u", "w", frozenset(pairs), n, weakened=weakened)


def path_graph_instance(alphabet, psis):
    """Chain u-v-w with constraints accepting exactly the listed assignments."""
    from reconfcsp.core import ConstraintGraph

    edges = (("u", "v"), ("v", "w"))
    pair_sets = [set(), set()]
    for psi in psis:
        pair_sets[0].add((psi["u"], psi["v"]))
        pair_sets[1].add((psi["v"], psi["w"]))
    graph = ConstraintGraph(
        2, ("u", "v", "w"), edges, alphabet, tuple(frozenset(p) for p in pair_sets)
    )
    return ReconfInstance(graph, Assignment(psis[0]), Assignment(psis[-1]))


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def test_robustize_encodes_blocks_and_counts():
    inst = single_edge({(0, 0), (1, 1)}, 4, (0, 0), (1, 1))
    system = robustize(inst)
    assert len(system.circuits) == len(inst.graph.edges) == 1
    for v in inst.graph.vertices:
        assert system.sigma_ini.blocks[v] == had_encode(inst.psi_ini.values[v], system.n)
        assert system.sigma_tar.blocks[v] == had_encode(inst.psi_tar.values[v], system.n)
    assert count_satisfied(system, system.sigma_ini) == 1
    assert count_satisfied(system, system.sigma_tar) == 1


def test_robustize_rejects_bad_inputs():
    bad = single_edge({(0, 0)}, 4, (0, 1), (0, 0))
    with pytest.raises(InstanceError, match="must satisfy"):
        robustize(bad)
    from reconfcsp.core import ConstraintGraph

    ternary = ConstraintGraph(
        3, ("a", "b", "c"), (("a", "b", "c"),), 2, (frozenset({(0, 0, 0)}),)
    )
    inst = ReconfInstance(
        ternary, Assignment({"a": 0, "b": 0, "c": 0}), Assignment({"a": 0, "b": 0, "c": 0})
    )
    with pytest.raises(InstanceError, match="binary"):
        robustize(inst)


def test_alphabet_padding():
    inst = single_edge({(0, 0), (2, 2)}, 3, (0, 0), (2, 2))
    padded, n = pad_alphabet(inst)
    assert n == 2 and padded.graph.alphabet == 4
    # constraints untouched: the dummy symbol 3 satisfies nothing
    assert padded.graph.accepts == inst.graph.accepts
    system = robustize(inst)
    assert system.n == 2 and system.original_alphabet == 3
    dummy = had_encode(3, 2)
    assert not eval_circuit(system.circuits[0], dummy, dummy)


def test_clause_two_radius_values():
    assert quarter_radius(9) == 128
    assert clause_two_radius(9) == 128  # floor((1/4 + 1/800) * 512)
    assert clause_two_radius(10) == 257 and quarter_radius(10) == 256
    assert clause_two_radius(2, weakened=True) == 1 == clause_two_radius(2)


# ---------------------------------------------------------------------------
# Evaluation and decoding
# ---------------------------------------------------------------------------


def test_eval_circuit_on_codeword_pairs():
    c = circuit({(0, 0), (1, 1)}, n=3)
    assert eval_circuit(c, had_encode(0, 3), had_encode(0, 3))
    assert eval_circuit(c, had_encode(1, 3), had_encode(1, 3))
    assert not eval_circuit(c, had_encode(0, 3), had_encode(1, 3))
    with pytest.raises(InstanceError, match="length mismatch"):
        eval_circuit(c, had_encode(0, 2), had_encode(0, 3))


def test_eval_circuit_accepts_path_midpoint_at_n9():
    alpha1, alpha2, beta = 17, 300, 5
    path = generate_codeword_path(alpha1, alpha2, 9, seed=2)
    midpoint = path.steps[len(path.steps) // 2]
    assert hamming(midpoint, had_encode(alpha1, 9)) == 128
    assert hamming(midpoint, had_encode(alpha2, 9)) == 128
    both = RobustCircuit(0, "u", "w", frozenset({(alpha1, beta), (alpha2, beta)}), 9)
    assert eval_circuit(both, midpoint, had_encode(beta, 9))
    # dropping one of the two pairs must reject the midpoint
    one = RobustCircuit(0, "u", "w", frozenset({(alpha1, beta)}), 9)
    assert not eval_circuit(one, midpoint, had_encode(beta, 9))


def _apply_position_map(f: BitFunction, matrix_rows):
    """Permute positions by the linear map x -> Mx (rows are bitmasks)."""
    bits = 0
    for x in range(f.length):
        image = 0
        for j, row in enumerate(matrix_rows):
            if (row & x).bit_count() & 1:
                image |= 1 << j
        if f.bit(image):
            bits |= 1 << x
    return BitFunction(f.n, bits)


def _symbol_map_for(matrix_rows, n):
    """The symbol bijection induced on codewords: alpha -> M^T alpha."""
    out = []
    for alpha in range(1 << n):
        image = 0
        for j, row in enumerate(matrix_rows):
            if (alpha >> j) & 1:
                image ^= row
        out.append(image)
    return out


def test_eval_verdict_transforms_with_linear_bijection():
    # permuting positions of both blocks by an invertible linear map permutes
    # the per-symbol distance profile; the verdict is preserved once the
    # constraint is renamed by the induced symbol bijection
    n = 3
    matrix = [0b001, 0b011, 0b111]  # invertible over F2
    symbol_map = _symbol_map_for(matrix, n)
    assert sorted(symbol_map) == list(range(8))
    c = circuit({(1, 2), (3, 3)}, n=n)
    mapped_pairs = frozenset((symbol_map[a], symbol_map[b]) for a, b in c.pairs)
    c_mapped = RobustCircuit(0, "u", "w", mapped_pairs, n)
    rng_blocks = [(5, 90), (17, 200), (0, 255), (170, 12)]
    for fb, gb in rng_blocks:
        f, g = BitFunction(n, fb), BitFunction(n, gb)
        fm = _apply_position_map(f, matrix)
        gm = _apply_position_map(g, matrix)
        for alpha in range(8):
            assert hamming(f, had_encode(alpha, n)) == hamming(
                fm, had_encode(symbol_map[alpha], n)
            )
        assert eval_circuit(c, f, g) == eval_circuit(c_mapped, fm, gm)


def test_decode_block_examples():
    for n in (2, 3, 4):
        for alpha in range(1 << n):
            assert decode_block(had_encode(alpha, n)) == alpha
    # all-zero with position 0 flipped at n=3: scan all 8 codewords directly
    f = BitFunction(3, 1)
    distances = [hamming(f, had_encode(a, 3)) for a in range(8)]
    assert distances[0] == 1 and all(d >= 3 for d in distances[1:])
    assert decode_block(f) == 0
    # exact midpoint between codewords 0 and 1: flip half of D, tie-break to 0
    from reconfcsp.hadamard import disagreement_set

    d = sorted(disagreement_set(0, 1, 3))
    mid = BitFunction(3, (1 << d[0]) | (1 << d[1]))
    assert hamming(mid, had_encode(0, 3)) == hamming(mid, had_encode(1, 3)) == 2
    assert decode_block(mid) == 0


# ---------------------------------------------------------------------------
# Completeness and extraction
# ---------------------------------------------------------------------------


def _satisfying_walk_instance(seed: int, alphabet: int = 512, vertices: int = 3):
    from reconfcsp.cli import generate_instance

    return generate_instance(
        "path-graph", vertices, alphabet, seed, satisfiable=True, walk_length=4
    )


def test_completeness_sequence_contract():
    inst, walk = _satisfying_walk_instance(seed=77)
    system = robustize(inst)
    sigma_seq = completeness_sequence(system, walk, seed=1)
    moves = sum(
        1
        for a, b in zip(walk.steps, walk.steps[1:])
        if a.changed_vertices(b)
    )
    assert len(sigma_seq) == moves * (1 << 8) + 1
    assert sigma_seq[0] == system.sigma_ini
    assert sigma_seq[-1] == system.sigma_tar
    total = len(system.circuits)
    for a, b in zip(sigma_seq, sigma_seq[1:]):
        assert single_bit_change(a, b) is not None
    assert all(count_satisfied(system, s) == total for s in sigma_seq)
    # blocks of unmoved vertices stay bit-identical across each splice
    for a, b in zip(sigma_seq, sigma_seq[1:]):
        moved_vertex, _ = single_bit_change(a, b)
        for v, block in a.blocks.items():
            if v != moved_vertex:
                assert block is b.blocks[v] or block == b.blocks[v]


def test_completeness_requires_large_n():
    inst = single_edge({(0, 0)}, 4, (0, 0), (0, 0))
    system = robustize(inst)
    seq = ReconfigSequence((inst.psi_ini,))
    with pytest.raises(InstanceError, match="n >= 9"):
        completeness_sequence(system, seq)


def test_extract_round_trip_and_validity():
    inst, walk = _satisfying_walk_instance(seed=13)
    system = robustize(inst)
    sigma_seq = completeness_sequence(system, walk, seed=2)
    extracted = extract_psi_sequence(system, sigma_seq)
    collapsed = [walk.steps[0]]
    for step in walk.steps[1:]:
        if step != collapsed[-1]:
            collapsed.append(step)
    assert list(extracted.steps) == collapsed
    assert validate_sequence(extracted) == []


def test_extract_constant_sequence():
    inst = single_edge({(2, 2)}, 4, (2, 2), (2, 2))
    system = robustize(inst)
    seq = [system.sigma_ini, system.sigma_ini, system.sigma_ini]
    out = extract_psi_sequence(system, seq)
    assert len(out.steps) == 1
    assert out.steps[0].values == {"u": 2, "w": 2}


def test_extract_valid_for_arbitrary_single_bit_walks():
    inst = single_edge({(0, 0), (1, 1)}, 4, (0, 0), (1, 1))
    system = robustize(inst)
    walk = adversarial_block_sequence(system, seed=21, scramble=12)
    assert walk[0] == system.sigma_ini and walk[-1] == system.sigma_tar
    out = extract_psi_sequence(system, walk)
    assert validate_sequence(out) == []
    assert out.steps[0].values == {"u": 0, "w": 0}
    assert out.steps[-1].values == {"u": 1, "w": 1}
    assert adversarial_block_sequence(system, seed=21, scramble=12) == walk


def test_extract_rejects_multibit_steps():
    inst = single_edge({(0, 0)}, 4, (0, 0), (0, 0))
    system = robustize(inst)
    jumped = system.sigma_ini.with_block("u", had_encode(3, 2))
    with pytest.raises(InstanceError, match="more than one bit"):
        extract_psi_sequence(system, [system.sigma_ini, jumped])


def test_soundness_triangle_inequality_witnesses_at_n9():
    # witnesses following the proof's three inequalities: f close to one
    # codeword, far from the decoded one, sigma-block nearest the decoded one
    n, length = 9, 512
    alpha_star, psi_v = 33, 450
    outside = [
        x for x in range(length) if x not in disagreement_set(alpha_star, psi_v, n)
    ]
    f = had_encode(alpha_star, n)
    for x in outside[:128]:
        f = f.flip(x)
    assert rel_distance(f, had_encode(alpha_star, n)) <= Fraction(1, 4)
    assert rel_distance(f, had_encode(psi_v, n)) > Fraction(1, 4) + FARNESS_MARGIN / 2
    sigma_v = had_encode(psi_v, n).flip(0).flip(5)
    assert decode_block(sigma_v) == psi_v
    assert rel_distance(sigma_v, had_encode(psi_v, n)) <= rel_distance(
        sigma_v, had_encode(alpha_star, n)
    )
    assert rel_distance(sigma_v, f) > FARNESS_MARGIN / 4


# ---------------------------------------------------------------------------
# Micro oracle
# ---------------------------------------------------------------------------


def test_micro_distance_zero_for_satisfying():
    c = circuit({(0, 0)}, n=2)
    f = g = had_encode(0, 2)
    assert micro_distance_to_sat(c, f, g) == 0


def test_micro_distance_positive_example():
    c = circuit({(0, 0)}, n=2)
    f = g = had_encode(1, 2)
    # independent oracle: evaluate the circuit on all 256 concatenated inputs
    sats = [
        concat_blocks(BitFunction(2, fb), BitFunction(2, gb))
        for fb in range(16)
        for gb in range(16)
        if eval_circuit(c, BitFunction(2, fb), BitFunction(2, gb))
    ]
    assert sorted(sats) == list(sat_inputs(c))
    point = concat_blocks(f, g)
    expected = Fraction(min((point ^ s).bit_count() for s in sats), 8)
    assert expected > 0
    assert micro_distance_to_sat(c, f, g) == expected


def test_micro_distance_swap_transpose_symmetry():
    pairs = {(0, 1), (2, 3), (1, 1)}
    c = circuit(pairs, n=2)
    transposed = circuit({(b, a) for a, b in pairs}, n=2)
    for fb, gb in [(3, 9), (0, 15), (7, 7)]:
        f, g = BitFunction(2, fb), BitFunction(2, gb)
        assert micro_distance_to_sat(c, f, g) == micro_distance_to_sat(transposed, g, f)


def test_micro_oracle_range_guard():
    c = circuit({(0, 0)}, n=4)
    with pytest.raises(InstanceError, match="micro oracle out of range"):
        micro_distance_to_sat(c, had_encode(0, 4), had_encode(0, 4))
    with pytest.raises(InstanceError, match="micro oracle out of range"):
        sat_inputs(c)


def test_weakened_circuit_failure_mode_n2():
    # two-pair constraint; the four-phase walk stays 1/2^n-close to the
    # weakened circuit's satisfying set at every step
    n = 2
    a1, b1, a2, b2 = 0, 0, 1, 1
    weak = circuit({(a1, b1), (a2, b2)}, n=n, weakened=True)
    sats = sat_inputs(weak)
    walk = four_phase_block_path(n, a1, b1, a2, b2)
    for f, g in walk:
        point = concat_blocks(f, g)
        dist = Fraction(min((point ^ s).bit_count() for s in sats), 2 * f.length)
        assert dist <= Fraction(1, 1 << n)
    # the strict circuit rejects the midpoint (the violation attempt)
    strict = circuit({(a1, b1), (a2, b2)}, n=n)
    midpoint = walk[2 * (1 << (n - 2))]
    assert not eval_circuit(strict, *midpoint)


# ---------------------------------------------------------------------------
# Materialization and serialization
# ---------------------------------------------------------------------------


def test_materialize_micro_csp_matches_circuit_counts():
    inst = single_edge({(0, 0), (1, 1)}, 4, (0, 0), (1, 1))
    system = robustize(inst)
    micro = materialize_micro_csp(system)
    assert solver.state_space_size(micro.graph) == 2 ** (2 * 4)
    assert value(micro.graph, micro.psi_ini) == 1
    import random

    rng = random.Random(3)
    for _ in range(25):
        blocks = BlockAssignment(
            2, {v: BitFunction(2, rng.randrange(16)) for v in inst.graph.vertices}
        )
        bit_psi = Assignment(
            {
                f"{v}@{x}": blocks.blocks[v].bit(x)
                for v in inst.graph.vertices
                for x in range(4)
            }
        )
        assert value(micro.graph, bit_psi).satisfied == count_satisfied(system, blocks)


def test_system_serialization_round_trip(tmp_path):
    inst = single_edge({(0, 0), (1, 3)}, 4, (0, 0), (1, 3))
    system = robustize(inst)
    write_system(system, tmp_path / "sys")
    loaded = read_system(tmp_path / "sys")
    assert loaded.n == system.n
    assert loaded.sigma_ini == system.sigma_ini
    assert loaded.sigma_tar == system.sigma_tar
    assert [c.pairs for c in loaded.circuits] == [c.pairs for c in system.circuits]
