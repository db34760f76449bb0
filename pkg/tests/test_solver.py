import itertools
import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from qcrelax.program import ConeBlock, StandardForm
from qcrelax.solver import Solution, SolverConfig, residuals, solve


def make_sf(A, b, c, K, form="P"):
    A = sp.csr_matrix(np.atleast_2d(np.asarray(A, dtype=float)))
    return StandardForm(
        A, np.asarray(b, dtype=float), np.asarray(c, dtype=float),
        tuple(K), form, 1.0, 0.0, None, {},
    )


def lp_ref():
    # min x s.t. x - s = 1, x, s >= 0
    return make_sf([[1.0, -1.0]], [1.0], [1.0, 0.0], [ConeBlock("nonneg", 2)])


def soc_ref():
    # min t s.t. (t, 3, 4) in SOC
    return make_sf(
        [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], [3.0, 4.0], [1.0, 0.0, 0.0],
        [ConeBlock("soc", 3)],
    )


def sdp_ref():
    # min tr(diag(1,2) X) s.t. tr X = 1 (svec layout, off-diagonal x sqrt2)
    return make_sf([[1.0, 0.0, 1.0]], [1.0], [1.0, 0.0, 2.0], [ConeBlock("psd", 2)])


REFERENCE = [(lp_ref, 1.0), (soc_ref, 5.0), (sdp_ref, 1.0)]


@pytest.mark.parametrize("factory,opt", REFERENCE)
def test_reference_suite(factory, opt):
    sol = solve(factory(), SolverConfig())
    assert sol.status == "Optimal"
    assert sol.iterations <= 50
    assert all(r <= 1e-8 for r in sol.residuals)
    assert sol.primal_obj == pytest.approx(opt, abs=1e-6)


def test_residuals_definition():
    sf = lp_ref()
    sol = solve(sf, SolverConfig())
    pr, dr, gap = residuals(sf, sol)
    assert pr == pytest.approx(
        np.linalg.norm(sf.A @ sol.x - sf.b) / (1 + np.linalg.norm(sf.b))
    )
    assert dr <= 1e-8 and gap <= 1e-8
    # perturbing one coordinate moves the primal residual proportionally
    step = np.array([1e-3, 0.0])
    bad = Solution(sol.status, sol.x + step, sol.y, sol.s, 0, 0, 0, (0, 0, 0))
    pr2, _, _ = residuals(sf, bad)
    expect = np.linalg.norm(sf.A @ (sol.x + step) - sf.b) / (1 + np.linalg.norm(sf.b))
    assert pr2 == pytest.approx(expect, rel=1e-9)
    assert pr2 == pytest.approx(1e-3 / 2, abs=1e-6)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol_gap=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(step_fraction=1.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)


def test_primal_infeasible():
    sf = make_sf([[1.0]], [-1.0], [1.0], [ConeBlock("nonneg", 1)])
    assert solve(sf, SolverConfig()).status == "PrimalInfeasible"


def test_dual_infeasible():
    # min -x with only x >= 0: unbounded below
    sf = make_sf(np.zeros((0, 1)), [], [-1.0], [ConeBlock("nonneg", 1)])
    assert solve(sf, SolverConfig()).status == "DualInfeasible"


def test_form_d_status_flip():
    # (D) semantics: infeasibility roles swap relative to the (P) data
    sf = make_sf([[1.0]], [-1.0], [1.0], [ConeBlock("nonneg", 1)], form="D")
    assert solve(sf, SolverConfig()).status == "DualInfeasible"


def test_duplicate_rows_dropped_with_warning():
    A = [[1.0, -1.0], [1.0, -1.0]]
    sf = make_sf(A, [1.0, 1.0], [1.0, 0.0], [ConeBlock("nonneg", 2)])
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        sol = solve(sf, SolverConfig())
    assert sol.status == "Optimal"
    assert any("duplicate" in str(w.message) for w in rec)
    assert sol.y.shape == (2,)


def test_dimension_mismatch_raises():
    A = sp.csr_matrix(np.ones((1, 2)))
    sf = StandardForm(A, np.ones(1), np.ones(3), (ConeBlock("nonneg", 2),),
                      "P", 1.0, 0.0, None, {})
    with pytest.raises(ValueError):
        solve(sf, SolverConfig())


def _vertex_lp_opt(A, b, c):
    """Brute-force LP oracle: enumerate basic feasible points of
    {x >= 0, Ax = b} by solving every square subsystem."""
    m, n = A.shape
    best = np.inf
    for cols in itertools.combinations(range(n), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        xb = np.linalg.solve(B, b)
        if np.all(xb >= -1e-9):
            x = np.zeros(n)
            x[list(cols)] = xb
            best = min(best, float(c @ x))
    return best


def test_random_lps_against_vertex_enumeration():
    rng = np.random.default_rng(11)
    for trial in range(10):
        m, n = 2, 4
        A = rng.uniform(-1, 1, size=(m, n))
        x0 = rng.uniform(0.5, 1.5, size=n)  # feasible by construction
        b = A @ x0
        c = rng.uniform(-1, 1, size=n)
        opt = _vertex_lp_opt(A, b, c)
        sf = make_sf(A, b, c, [ConeBlock("nonneg", n)])
        sol = solve(sf, SolverConfig())
        if opt == np.inf or sol.status != "Optimal":
            # unbounded instances are detected, not compared
            assert sol.status in ("Optimal", "DualInfeasible")
            continue
        assert sol.primal_obj == pytest.approx(opt, abs=1e-6)


def test_mu_monotone_within_safeguard():
    for factory, _ in REFERENCE:
        sol = solve(factory(), SolverConfig())
        mus = sol.mu_trace
        for a, b in zip(mus, mus[1:]):
            assert b <= 10.0 * a


def test_weak_duality_at_solution():
    for factory, _ in REFERENCE:
        sf = factory()
        sol = solve(sf, SolverConfig())
        assert float(sf.c @ sol.x) - float(sf.b @ sol.y) >= -1e-6


def test_mixed_cone_problem():
    # min x + t, x >= 2, t >= ||(x, 1)||; optimum at x = 2, t = sqrt(5)
    A = [
        [1.0, -1.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ]
    b = [2.0, 0.0, 1.0]
    c = [1.0, 0.0, 1.0, 0.0, 0.0]
    K = [ConeBlock("nonneg", 2), ConeBlock("soc", 3)]
    sol = solve(make_sf(A, b, c, K), SolverConfig())
    assert sol.status == "Optimal"
    assert sol.primal_obj == pytest.approx(2.0 + np.sqrt(5.0), abs=1e-6)
