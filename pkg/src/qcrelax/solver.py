"""Primal-dual interior-point solver for the standard conic forms.

Solves  (P) min c'x s.t. Ax = b, x in K  together with its dual
(D) max b'y s.t. c - A'y in K  through the homogeneous self-dual
embedding, with Nesterov-Todd scaling and a Mehrotra predictor-corrector
step.  K may mix NonNeg, SecondOrder and Psd blocks; Zero blocks (which
only the (D) lowering produces) are treated as free coordinates whose
dual slack is pinned at zero.

The Newton systems are reduced to the normal equations M = A H A' and
solved through a sparse LU of the (optionally augmented) system, with a
small diagonal ridge plus one step of iterative refinement to cope with
rank-deficient rows such as redundant pinning constraints.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cones import ConeLayout
from .program import StandardForm

#: tau/kappa ratio below which the embedding is read as an infeasibility certificate
INFEASIBILITY_RATIO = 1e-10

#: diagonal ridge added to the normal equations, relative to their scale
RIDGE = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    tol_gap: float = 1e-8
    tol_primal: float = 1e-8
    tol_dual: float = 1e-8
    max_iterations: int = 200
    step_fraction: float = 0.99

    def __post_init__(self):
        if min(self.tol_gap, self.tol_primal, self.tol_dual) <= 0:
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.step_fraction < 1.0):
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class Solution:
    status: str  # Optimal | PrimalInfeasible | DualInfeasible | IterationLimit | NumericalFailure
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    primal_obj: float
    dual_obj: float
    iterations: int
    residuals: tuple  # (primal, dual, gap)
    mu_trace: list = field(default_factory=list)


def residuals(sf: StandardForm, sol: Solution) -> tuple:
    """(primal, dual, gap) of a candidate point in standard-form semantics."""
    pr = np.linalg.norm(sf.A @ sol.x - sf.b) / (1.0 + np.linalg.norm(sf.b))
    dr = np.linalg.norm(sf.A.T @ sol.y + sol.s - sf.c) / (1.0 + np.linalg.norm(sf.c))
    cx = float(sf.c @ sol.x)
    by = float(sf.b @ sol.y)
    gap = abs(cx - by) / (1.0 + abs(cx) + abs(by))
    return (pr, dr, gap)


def _drop_duplicate_rows(A: sp.csr_matrix, b: np.ndarray):
    """Remove exact duplicates of [A | b] rows; returns (A, b, kept_indices)."""
    seen = {}
    keep = []
    for r in range(A.shape[0]):
        lo, hi = A.indptr[r], A.indptr[r + 1]
        key = (A.indices[lo:hi].tobytes(), A.data[lo:hi].tobytes(), float(b[r]))
        if key in seen:
            continue
        seen[key] = r
        keep.append(r)
    if len(keep) == A.shape[0]:
        return A, b, None
    warnings.warn(
        f"dropped {A.shape[0] - len(keep)} duplicate constraint rows", stacklevel=3
    )
    keep = np.asarray(keep, dtype=int)
    return A[keep], b[keep], keep


class _KktSolver:
    """Factorization of the scaled augmented system for one NT scaling.

    The Newton subsystem  Hinv u - A' v = g (cone rows), -A_F' v = g_F,
    A u = h  is solved through the quasi-definite form

        [[ I,    B',  0  ]  [W^-1 u]   [W g]
         [ B,    0,   A_F]  [  -v  ] = [ h ]
         [ 0,  A_F',  0  ]] [ u_F  ]   [g_F]

    with B = A W restricted to cone columns.  Working with B instead of
    the normal equations B B' keeps the condition number from being
    squared, which is what limits accuracy near convergence.  A ridge is
    only introduced when the factorization fails outright.
    """

    def __init__(self, A, B, free_idx, scaling):
        self.A = A
        self.free_idx = free_idx
        self.scaling = scaling
        p, q = A.shape
        F = len(free_idx)
        self.p, self.q, self.F = p, q, F
        Af = A[:, free_idx] if F else None
        blocks = [
            [sp.eye(q, format="csc"), B.T, None],
            [B, None, Af],
            [None, Af.T if F else None, None],
        ]
        kkt = sp.bmat(
            [row[: 2 + (1 if F else 0)] for row in blocks[: 2 + (1 if F else 0)]],
            format="csc",
        )
        # row-norm equilibration (symmetric matrix, applied on both sides)
        rmax = np.maximum(abs(kkt).max(axis=1).toarray().ravel(), 1e-12)
        self.eq = 1.0 / np.sqrt(rmax)
        D = sp.diags(self.eq)
        kkts = (D @ kkt @ D).tocsc()
        self.ok = False
        ridge = 0.0
        for _ in range(6):
            mat = kkts + ridge * sp.eye(kkts.shape[0], format="csc") if ridge else kkts
            try:
                self.lu = spla.splu(mat)
                probe = self.lu.solve(np.ones(mat.shape[0]))
                if np.all(np.isfinite(probe)):
                    self.ok = True
                    return
            except RuntimeError:
                pass
            ridge = RIDGE if ridge == 0.0 else ridge * 1e4

    def _raw_solve(self, g, h):
        sc, free = self.scaling, self.free_idx
        rhs = np.concatenate([sc.apply_W(g), h, g[free]] if self.F else [sc.apply_W(g), h])
        sol = self.eq * self.lu.solve(self.eq * rhs)
        u = sc.apply_W(sol[: self.q])
        v = -sol[self.q : self.q + self.p]
        if self.F:
            u[free] = sol[self.q + self.p :]
        return u, v

    def solve2(self, g, h, max_refine=8):
        """Solve  Hinv u - A' v = g (cone rows), -A_F' v = g_F,  A u = h."""
        A, sc, free = self.A, self.scaling, self.free_idx
        u, v = self._raw_solve(g, h)
        target = 1e-11 * (1.0 + np.linalg.norm(g) + np.linalg.norm(h))
        prev = np.inf
        for _ in range(max_refine):
            atv = A.T @ v
            r_g = g - (sc.apply_Hinv(u) - atv)
            if self.F:
                r_g[free] = g[free] + atv[free]
            r_h = h - A @ u
            err = np.linalg.norm(r_g) + np.linalg.norm(r_h)
            if not np.isfinite(err) or err <= target or err >= 0.5 * prev:
                break
            prev = err
            du, dv = self._raw_solve(r_g, r_h)
            u = u + du
            v = v + dv
        return u, v


def solve(sf: StandardForm, cfg: SolverConfig | None = None) -> Solution:
    cfg = cfg or SolverConfig()
    A = sp.csr_matrix(sf.A)
    b = np.asarray(sf.b, dtype=float)
    c = np.asarray(sf.c, dtype=float)
    p_full, q = A.shape
    if b.shape != (p_full,) or c.shape != (q,):
        raise ValueError("inconsistent standard-form dimensions")
    layout = ConeLayout(sf.K)
    if layout.dim != q:
        raise ValueError("cone dimensions do not match the number of columns")

    A, b, kept = _drop_duplicate_rows(A, b)
    p = A.shape[0]

    sol = _hsde(A, b, c, layout, cfg)

    if kept is not None:
        y_full = np.zeros(p_full)
        y_full[kept] = sol.y
        sol.y = y_full

    if sf.form == "D":
        # the caller's problem is the maximization side of the pair
        sol.primal_obj, sol.dual_obj = sol.dual_obj, sol.primal_obj
        if sol.status == "PrimalInfeasible":
            sol.status = "DualInfeasible"
        elif sol.status == "DualInfeasible":
            sol.status = "PrimalInfeasible"
        pr, dr, gp = sol.residuals
        sol.residuals = (dr, pr, gp)
    return sol


def _hsde(A, b, c, layout: ConeLayout, cfg: SolverConfig) -> Solution:
    p, q = A.shape
    nu = layout.degree
    free = layout.free_idx
    e = layout.identity()

    theta = max(1.0, float(np.linalg.norm(b)), float(np.linalg.norm(c)))
    x = theta * e
    s = theta * e
    y = np.zeros(p)
    tau, kappa = 1.0, 1.0

    nb = 1.0 + np.linalg.norm(b)
    nc = 1.0 + np.linalg.norm(c)
    mu_trace = []
    res = (np.inf, np.inf, np.inf)

    def make(status, iters):
        if status in ("Optimal", "IterationLimit", "NumericalFailure"):
            xx, yy, ss = x / tau, y / tau, s / tau
        else:
            # infeasibility certificate, normalized for readability
            scale = max(1.0, np.linalg.norm(x), np.linalg.norm(y))
            xx, yy, ss = x / scale, y / scale, s / scale
        return Solution(
            status=status,
            x=xx,
            y=yy,
            s=ss,
            primal_obj=float(c @ xx),
            dual_obj=float(b @ yy),
            iterations=iters,
            residuals=res,
            mu_trace=mu_trace,
        )

    for it in range(cfg.max_iterations):
        xh, yh, sh = x / tau, y / tau, s / tau
        pres = np.linalg.norm(A @ xh - b) / nb
        dres = np.linalg.norm(A.T @ yh + sh - c) / nc
        cx, by = float(c @ xh), float(b @ yh)
        gap = abs(cx - by) / (1.0 + abs(cx) + abs(by))
        res = (float(pres), float(dres), float(gap))
        if pres <= cfg.tol_primal and dres <= cfg.tol_dual and gap <= cfg.tol_gap:
            return make("Optimal", it)
        if tau < INFEASIBILITY_RATIO * max(1.0, kappa):
            # certificate quality decides between the two infeasible
            # statuses: a Farkas ray must actually satisfy its homogeneous
            # equations, not merely have the right objective sign
            by, cx = float(b @ y), float(c @ x)
            pq = np.linalg.norm(A.T @ y + s)
            dq = np.linalg.norm(A @ x)
            if by > 1e-12 and pq <= 1e-6 * by:
                return make("PrimalInfeasible", it)
            if cx < -1e-12 and dq <= -1e-6 * cx:
                return make("DualInfeasible", it)
            return make("NumericalFailure", it)

        # embedding residuals
        rx = A.T @ y + s - c * tau
        ry = A @ x - b * tau
        rt = float(c @ x) - float(b @ y) + kappa

        sc = layout.scaling(x, s)
        lam = sc.lmbda
        mu = (layout.dot_trace(x, s) + tau * kappa) / (nu + 1)
        mu_trace.append(float(mu))

        B = sc.scale_columns(A)
        kkt = _KktSolver(A, B, free, sc)
        if not kkt.ok:
            return make("NumericalFailure", it)
        u2, v2 = kkt.solve2(-c, b)
        den = float(c @ u2) - float(b @ v2) - kappa / tau
        if den >= 0.0:
            # c'u2 - b'v2 equals -|Winv u2|^2 exactly; the direct form can
            # lose its sign to cancellation when the true value is tiny
            den = -float(np.sum(sc.apply_Winv(u2) ** 2)) - kappa / tau
        if den >= 0.0:
            return make("NumericalFailure", it)

        def direction(eta, dtilde, dg):
            g = eta * rx + sc.apply_Winv(dtilde)
            g[free] = eta * rx[free]
            u1, v1 = kkt.solve2(g, -eta * ry)
            num = -eta * rt - float(c @ u1) + float(b @ v1) - dg / tau
            dtau = num / den
            dx = u1 + dtau * u2
            dy = v1 + dtau * v2
            # recover ds from the dual Newton row itself; the algebraic form
            # Winv dtilde - Hinv dx amplifies solve error by cond(W) and lets
            # the dual residual drift once mu is small
            ds = -eta * rx - A.T @ dy + c * dtau
            ds[free] = 0.0
            dkap = (dg - kappa * dtau) / tau
            return dx, dy, ds, dtau, dkap

        def boundary(dx, ds, dtau, dkap):
            a = min(layout.max_step(x, dx), layout.max_step(s, ds))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kappa / dkap)
            return a

        # predictor
        lam2 = sc.jordan(lam, lam)
        dx_a, dy_a, ds_a, dt_a, dk_a = direction(1.0, -lam, -tau * kappa)
        alpha_a = min(1.0, boundary(dx_a, ds_a, dt_a, dk_a))
        mu_aff = (
            layout.dot_trace(x + alpha_a * dx_a, s + alpha_a * ds_a)
            + (tau + alpha_a * dt_a) * (kappa + alpha_a * dk_a)
        ) / (nu + 1)
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # corrector
        corr = sc.jordan(sc.apply_Winv(dx_a), sc.apply_W(ds_a))
        dcomb = sc.lam_solve(sigma * mu * e - lam2 - corr)
        dg = sigma * mu - tau * kappa - dt_a * dk_a
        dx, dy, ds, dtau, dkap = direction(1.0 - sigma, dcomb, dg)

        alpha = min(1.0, cfg.step_fraction * boundary(dx, ds, dtau, dkap))
        for _ in range(30):
            xn, sn = x + alpha * dx, s + alpha * ds
            tn, kn = tau + alpha * dtau, kappa + alpha * dkap
            if tn > 0 and kn > 0 and layout.in_interior(xn) and layout.in_interior(sn):
                break
            alpha *= 0.5
        else:
            return make("NumericalFailure", it)

        x, s = xn, sn
        y = y + alpha * dy
        tau, kappa = tn, kn

    return make("IterationLimit", cfg.max_iterations)
