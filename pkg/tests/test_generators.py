import numpy as np
import pytest

from qcrelax.generators import (
    LatticeSpec,
    ZeroDiagSpec,
    gen_lattice,
    gen_zero_diag,
    lattice_edges,
)
from qcrelax.model import aggregate_pattern, homogenize


def test_lattice_edge_count():
    # an n_l x n_l grid has 2 n_l (n_l - 1) edges
    for nl in range(2, 7):
        assert len(lattice_edges(nl)) == 2 * nl * (nl - 1)


def test_lattice_instance_structure():
    inst = gen_lattice(LatticeSpec(3, 5, 1))
    assert inst.n == 9 and inst.m == 5
    edges = lattice_edges(3)
    for pk, qk, _ in inst.data():
        assert not np.any(qk)
        assert pk.offdiag_support() <= edges
    # constraint 1 bounds the feasible set: positive diagonal
    p1 = inst.constraints[0][0]
    assert p1.offdiag_support() == set()
    assert all(p1.get(i, i) > 0 for i in range(1, 10))
    # every rk strictly negative keeps x = 0 strictly feasible
    assert all(rk < 0 for (_, _, rk) in inst.constraints)


def test_lattice_determinism():
    a = gen_lattice(LatticeSpec(4, 6, 42))
    b = gen_lattice(LatticeSpec(4, 6, 42))
    for (pa, _, ra), (pb, _, rb) in zip(a.data(), b.data()):
        assert pa.entries == pb.entries
        assert ra == rb
    c = gen_lattice(LatticeSpec(4, 6, 43))
    assert c.objective[0].entries != a.objective[0].entries


def test_lattice_pattern_is_lattice():
    inst = gen_lattice(LatticeSpec(4, 8, 0))
    pat = aggregate_pattern(homogenize(inst))
    shifted = {(i + 1, j + 1) for (i, j) in lattice_edges(4)}
    assert pat.edges == frozenset(shifted)
    assert 1 in pat.isolated  # homogenizing vertex has no couplings (q = 0)


def test_zero_diag_structure():
    inst = gen_zero_diag(ZeroDiagSpec(8, 4, 0.4, 2))
    # m quadratic constraints plus 2n box constraints
    assert inst.n == 8 and inst.m == 4 + 2 * 8
    for pk, qk, rk in inst.data():
        assert all(i != j for (i, j) in pk.support())


def test_zero_diag_determinism_and_validation():
    a = gen_zero_diag(ZeroDiagSpec(6, 3, 0.5, 9))
    b = gen_zero_diag(ZeroDiagSpec(6, 3, 0.5, 9))
    assert a.objective[0].entries == b.objective[0].entries
    with pytest.raises(ValueError):
        ZeroDiagSpec(6, 3, 0.0, 1)
    with pytest.raises(ValueError):
        LatticeSpec(1, 3, 0)
