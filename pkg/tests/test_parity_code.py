from __future__ import annotations

import numpy as np
import pytest

from src.errors import InvalidParameterError
from src.parity_code import (
    CodeParams,
    LogicalState,
    SpinMatrix,
    build_code,
    count_code_states,
    decode_logical,
    encode,
    from_binary,
    hamming,
    is_code_state,
    matrix_view,
    parity_checks_ok,
    syndrome3,
    syndrome4,
    syndrome_composition,
    to_binary,
    vector_view,
)


def _random_state(k: int, rng: np.random.Generator) -> SpinMatrix:
    return matrix_view(np.where(rng.random(k * (k - 1) // 2) < 0.5, -1, 1).astype(np.int8), k)


def _random_logical(k: int, rng: np.random.Generator) -> LogicalState:
    return LogicalState(np.where(rng.random(k) < 0.5, -1, 1))


def _flip(x: SpinMatrix, i: int, j: int) -> SpinMatrix:
    a = x.entries.copy()
    a[i, j] = a[j, i] = -a[i, j]
    return SpinMatrix(a)


def test_k4_generator_matches_pair_incidence() -> None:
    expected = np.array([
        [1, 1, 1, 0, 0, 0],
        [1, 0, 0, 1, 1, 0],
        [0, 1, 0, 1, 0, 1],
        [0, 0, 1, 0, 1, 1],
    ])
    assert np.array_equal(build_code(4).generator, expected)


def test_k4_weight3_checks_follow_triple_order() -> None:
    expected = np.array([
        [1, 1, 0, 1, 0, 0],  # 123
        [1, 0, 1, 0, 1, 0],  # 124
        [0, 1, 1, 0, 0, 1],  # 134
        [0, 0, 0, 1, 1, 1],  # 234
    ])
    assert np.array_equal(build_code(4).check3, expected)


def test_k4_plaquettes() -> None:
    expected = np.array([
        [1, 1, 0, 1, 0, 0],
        [0, 1, 1, 1, 1, 0],
        [0, 0, 0, 1, 1, 1],
    ])
    assert np.array_equal(build_code(4).check4, expected)


@pytest.mark.parametrize("k", [4, 5, 6, 7])
def test_code_counts(k: int) -> None:
    code = build_code(k)
    p = CodeParams(k)
    assert code.generator.shape == (k, p.n_v)
    assert code.check3.shape == (p.n_c3, p.n_v)
    assert code.check4.shape == (p.n_c4, p.n_v)
    assert (code.generator.sum(axis=0) == 2).all()
    assert (code.check3.sum(axis=1) == 3).all()
    assert (code.check3.sum(axis=0) == k - 2).all()
    assert code.check4.sum(axis=1).max() <= 4
    assert code.check4.sum(axis=0).max() <= 4


def test_k5_parameters() -> None:
    p = CodeParams(5)
    assert (p.n_v, p.n_c4, p.n_c3, p.d_v3) == (10, 6, 10, 3)


def test_generator_annihilates_checks_up_to_40() -> None:
    for k in range(4, 41):
        assert parity_checks_ok(build_code(k)), k


def test_small_k_is_refused() -> None:
    with pytest.raises(InvalidParameterError):
        build_code(3)


def test_encode_examples() -> None:
    assert encode(np.ones(5)) == SpinMatrix.ones(5)
    z = np.array([1, -1, 1, -1])
    assert encode(z) == encode(-z)
    assert vector_view(encode(z)).tolist() == [-1, 1, -1, -1, 1, -1]


def test_encoded_states_are_code_states() -> None:
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = encode(_random_logical(9, rng))
        assert is_code_state(x)
        assert syndrome3(x).all_satisfied()
        assert syndrome4(x).all_satisfied()


def test_single_flip_syndromes_k4() -> None:
    x = _flip(SpinMatrix.ones(4), 0, 1)
    assert syndrome3(x).values.tolist() == [-1, -1, 1, 1]
    assert syndrome4(x).values.tolist() == [-1, 1, 1]
    assert not is_code_state(x)


def test_single_flip_touches_adjacent_plaquettes_only() -> None:
    code = build_code(7)
    for p, (i, j) in enumerate(code.pairs):
        s = syndrome4(_flip(SpinMatrix.ones(7), i, j)).values
        assert set(np.flatnonzero(s == -1)) == set(code.vn_adjacency4[p].tolist())


def test_plaquettes_are_products_of_triangles() -> None:
    rng = np.random.default_rng(11)
    for _ in range(100):
        x = _random_state(7, rng)
        assert np.array_equal(syndrome_composition(x), syndrome4(x).values)


def test_syndromes_are_gauge_invariant() -> None:
    rng = np.random.default_rng(5)
    for _ in range(50):
        e = _random_state(8, rng)
        z = encode(_random_logical(8, rng))
        assert np.array_equal(syndrome3(z * e).values, syndrome3(e).values)
        assert np.array_equal(syndrome4(z * e).values, syndrome4(e).values)


def test_k4_has_eight_code_states() -> None:
    assert count_code_states(4) == 8 == 2 ** 3


def test_views() -> None:
    x = matrix_view(np.array([-1, 1, 1, 1, 1, 1]))
    assert x.entries[0, 1] == x.entries[1, 0] == -1
    assert int((x.entries == -1).sum()) == 2
    assert matrix_view(np.ones(10, dtype=np.int8)) == SpinMatrix.ones(5)
    rng = np.random.default_rng(0)
    y = _random_state(6, rng)
    assert matrix_view(vector_view(y)) == y
    with pytest.raises(InvalidParameterError):
        matrix_view(np.ones(7))
    with pytest.raises(InvalidParameterError):
        matrix_view(np.ones(6), 5)


def test_spin_matrix_invariants() -> None:
    with pytest.raises(InvalidParameterError):
        SpinMatrix(np.array([[1, -1], [1, 1]]))
    with pytest.raises(InvalidParameterError):
        SpinMatrix(np.array([[-1, 1], [1, 1]]))
    with pytest.raises(InvalidParameterError):
        SpinMatrix(np.array([[1, 0], [0, 1]]))
    x = SpinMatrix.ones(3)
    with pytest.raises(ValueError):
        x.entries[0, 1] = -1


def test_decode_logical_fixes_the_gauge() -> None:
    z = LogicalState(np.array([-1, 1, 1, -1, 1]))
    out = decode_logical(encode(z))
    assert out.spins[0] == 1
    assert encode(out) == encode(z)
    with pytest.raises(InvalidParameterError):
        decode_logical(_flip(SpinMatrix.ones(5), 1, 2))


def test_hamming_and_binary_map() -> None:
    x = _flip(_flip(SpinMatrix.ones(5), 0, 1), 2, 4)
    assert hamming(x, SpinMatrix.ones(5)) == 2
    assert to_binary(np.array([1, -1])).tolist() == [0, 1]
    assert from_binary(np.array([0, 1])).tolist() == [1, -1]
