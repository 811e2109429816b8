"""Dense SPD matrix utilities: Cholesky, inverse, logdet, Schur, patterns."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwcheck import matrix
from gwcheck.graphs import Graph, complete_graph
from gwcheck.matrix import (
    NotPositiveDefiniteError,
    PatternViolationError,
    cholesky,
    enforce_pattern,
    inverse,
    logdet,
    matrix_from_csv,
    matrix_to_csv,
    pattern_mask,
    schur_complement,
    symmetrize,
    trace,
)

from conftest import random_pd_matrix


def test_symmetrize_and_check():
    m = np.array([[1.0, 2.0], [2.0 + 1e-12, 3.0]])
    s = symmetrize(m)
    assert np.array_equal(s, s.T)
    with pytest.raises(ValueError):
        matrix.check_symmetric(np.array([[1.0, 2.0], [0.5, 3.0]]))


def test_cholesky_identity():
    assert np.array_equal(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_hand_example():
    m = np.array([[4.0, 2.0], [2.0, 3.0]])
    l = cholesky(m)
    expected = np.array([[2.0, 0.0], [1.0, math.sqrt(2.0)]])
    assert np.allclose(l, expected, rtol=1e-14, atol=0)
    assert np.allclose(l @ l.T, m, rtol=1e-10)


def test_cholesky_not_pd():
    # eigenvalues 3 and -1
    with pytest.raises(NotPositiveDefiniteError):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_cholesky_rejects_asymmetric():
    with pytest.raises(ValueError):
        cholesky(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_inverse_logdet_trace_identity():
    m = np.eye(5)
    assert np.allclose(inverse(m), m)
    assert logdet(m) == 0.0
    assert trace(m) == 5.0


def test_logdet_diagonal():
    assert math.isclose(logdet(np.diag([2.0, 8.0])), math.log(16.0), rel_tol=1e-14)


def test_inverse_multiply_back():
    gen = np.random.default_rng(3)
    for p in (1, 2, 5, 12):
        m = random_pd_matrix(p, gen)
        prod = m @ inverse(m)
        assert np.max(np.abs(prod - np.eye(p))) < 1e-8
        assert np.array_equal(inverse(m), inverse(m).T)


def test_inverse_not_pd():
    with pytest.raises(NotPositiveDefiniteError):
        inverse(np.array([[0.0, 0.0], [0.0, 1.0]]))


def test_schur_block_diagonal():
    q = np.zeros((4, 4))
    q[:2, :2] = [[3.0, 1.0], [1.0, 2.0]]
    q[2:, 2:] = [[5.0, 0.0], [0.0, 6.0]]
    out = schur_complement(q, [1, 2])
    assert np.allclose(out, q[:2, :2], rtol=0, atol=0)


def test_schur_scalar_example():
    q = np.array([[2.0, 1.0], [1.0, 2.0]])
    out = schur_complement(q, [1])
    assert out.shape == (1, 1)
    assert math.isclose(out[0, 0], 1.5, rel_tol=1e-15)


def test_schur_logdet_identity():
    gen = np.random.default_rng(11)
    for p, block in ((3, [1]), (5, [2, 4]), (8, [1, 2, 3])):
        q = random_pd_matrix(p, gen)
        rest = [i for i in range(1, p + 1) if i not in block]
        rest_idx = np.array(rest) - 1
        lhs = logdet(q)
        rhs = logdet(q[np.ix_(rest_idx, rest_idx)]) + logdet(schur_complement(q, block))
        assert math.isclose(lhs, rhs, rel_tol=1e-10)


def test_schur_rejects_bad_block():
    q = np.eye(3)
    with pytest.raises(ValueError):
        schur_complement(q, [])
    with pytest.raises(ValueError):
        schur_complement(q, [1, 2, 3])
    with pytest.raises(ValueError):
        schur_complement(q, [0])


def test_schur_roundtrip_recovers_block():
    gen = np.random.default_rng(5)
    for p, block in ((4, [1, 3]), (7, [2, 5, 6])):
        q = random_pd_matrix(p, gen)
        idx = np.array(block) - 1
        rest = np.array([i for i in range(p) if i not in set(idx)])
        star = schur_complement(q, block)
        cross = q[np.ix_(idx, rest)]
        rebuilt = star + cross @ np.linalg.solve(q[np.ix_(rest, rest)], cross.T)
        assert np.max(np.abs(rebuilt - q[np.ix_(idx, idx)])) < 1e-8


def test_pattern_mask(graph_b):
    mask = pattern_mask(graph_b)
    expected = np.array(
        [
            [1, 1, 1, 0],
            [1, 1, 0, 1],
            [1, 0, 1, 1],
            [0, 1, 1, 1],
        ],
        dtype=bool,
    )
    assert np.array_equal(mask, expected)


def test_enforce_pattern_accepts_identity(bench):
    for g in bench.values():
        out = enforce_pattern(np.eye(g.p), g)
        assert np.array_equal(out, np.eye(g.p))


def test_enforce_pattern_violation(graph_b):
    m = np.eye(4)
    m[0, 3] = m[3, 0] = 0.5
    with pytest.raises(PatternViolationError) as err:
        enforce_pattern(m, graph_b)
    assert (1, 4) in [(i, j) for i, j, _ in err.value.violations]


def test_enforce_pattern_zeroes_noise(graph_b):
    m = np.eye(4)
    m[0, 3] = m[3, 0] = 1e-12
    out = enforce_pattern(m, graph_b)
    assert out[0, 3] == 0.0 and out[3, 0] == 0.0


def test_enforce_pattern_requires_pd(graph_b):
    m = np.zeros((4, 4))
    with pytest.raises(NotPositiveDefiniteError):
        enforce_pattern(m, graph_b)


def test_enforce_pattern_atol_configurable(graph_b):
    m = np.eye(4)
    m[0, 3] = m[3, 0] = 1e-6
    with pytest.raises(PatternViolationError):
        enforce_pattern(m, graph_b)
    out = enforce_pattern(m, graph_b, atol=1e-5)
    assert out[0, 3] == 0.0


def test_csv_roundtrip():
    gen = np.random.default_rng(17)
    m = random_pd_matrix(6, gen)
    text = matrix_to_csv(m)
    back = matrix_from_csv(text)
    # 17 significant digits round-trip doubles exactly
    assert np.array_equal(back, m)
    assert len(text.strip().splitlines()) == 6


def test_load_matrix_file(tmp_path):
    m = np.array([[2.0, 0.5], [0.5, 1.0]])
    path = tmp_path / "d.csv"
    path.write_text(matrix_to_csv(m))
    assert np.array_equal(matrix.load_matrix_file(path), m)


@st.composite
def pd_matrices(draw):
    p = draw(st.integers(min_value=1, max_value=6))
    seed = draw(st.integers(min_value=0, max_value=2**31))
    gen = np.random.default_rng(seed)
    return random_pd_matrix(p, gen)


@given(pd_matrices())
@settings(max_examples=40, deadline=None)
def test_property_cholesky_multiplies_back(m):
    l = cholesky(m)
    assert np.all(np.triu(l, 1) == 0)
    rel = np.max(np.abs(l @ l.T - m)) / max(1.0, np.max(np.abs(m)))
    assert rel < 1e-10


@given(pd_matrices(), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=30, deadline=None)
def test_property_schur_is_pd(m, block_seed):
    p = m.shape[0]
    if p < 2:
        return
    gen = np.random.default_rng(block_seed)
    k = int(gen.integers(1, p))
    block = sorted(gen.choice(np.arange(1, p + 1), size=k, replace=False).tolist())
    out = schur_complement(m, block)
    cholesky(out)
    assert np.array_equal(out, out.T)
