import numpy as np
import pytest

from qcrelax.sparsemat import SparseSymMatrix


def test_upper_triangle_enforced():
    with pytest.raises(ValueError):
        SparseSymMatrix(3, {(2, 1): 1.0})
    with pytest.raises(ValueError):
        SparseSymMatrix(3, {(1, 4): 1.0})


def test_structural_zeros_dropped():
    m = SparseSymMatrix(2, {(1, 1): 1.0, (1, 2): 0.0})
    assert m.support() == {(1, 1)}
    assert m.get(1, 2) == 0.0
    assert m.get(2, 1) == 0.0


def test_dense_round_trip():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((4, 4))
    a = (a + a.T) / 2
    m = SparseSymMatrix.from_dense(a)
    assert np.allclose(m.to_dense(), a)


def test_inner_matches_trace_product():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 4))
    a = (a + a.T) / 2
    x = rng.standard_normal((4, 4))
    x = (x + x.T) / 2
    m = SparseSymMatrix.from_dense(a)
    assert m.inner(x) == pytest.approx(np.trace(a @ x), rel=1e-12)


def test_offdiag_support():
    m = SparseSymMatrix(3, {(1, 1): 2.0, (1, 3): -1.0})
    assert m.offdiag_support() == {(1, 3)}
