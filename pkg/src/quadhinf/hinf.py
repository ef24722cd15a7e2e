"""Mixed-sensitivity H-infinity synthesis and robustness analysis.

The generalized regulator stacks three weighted channels on top of the
unity-feedback loop around a nominal plant G0:

    z1 = Ws*(w - G0*u)    tracking performance
    z2 = Wu*u             control effort
    z3 = Wt*G0*u          multiplicative-uncertainty channel
    e  = w - G0*u         measurement fed to the controller

Synthesis is the classical two-Riccati state-space solution with a
bisection on gamma; the central controller is returned.  Robustness
curves use the exact SISO expressions: |Wt*T| for robust stability and
|Ws*S| + |Wt*T| for robust performance of the two-block structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DeviationExceeded,
    InfeasibleAtUpperBound,
    InternallyUnstable,
    InvalidSpec,
    NoStabilizingSolution,
    RankDeficient,
    UnstableController,
)
from .lti import (
    StateSpace,
    TransferFunction,
    balanced_truncation,
    freq_response,
    hinf_norm,
    is_stable,
    standard_grid,
    tf_new,
    to_statespace,
    to_tf,
)

__all__ = [
    "SynthesisSpec",
    "GeneralizedPlant",
    "SynthesisResult",
    "MuCurve",
    "build_tid",
    "build_ws",
    "build_mixsyn_plant",
    "care_solve",
    "hinfsyn_at_gamma",
    "gamma_iterate",
    "verify_mixsyn",
    "closed_loop",
    "lft",
    "rs_mu",
    "rp_mu",
    "reduce_and_check",
]

# Settling-time constant for the ideal second-order target: t_s = 4.6/(zeta*wn)
# (1 percent band).  With (0.3 s, 1e-6) this reproduces the standard target
# denominator s^2 + 30.67 s + 247.3 used by the bundled fixtures.
_SETTLE_CONST = 4.6


def build_tid(ts: float, mp: float) -> TransferFunction:
    """Ideal second-order closed-loop target from settling time and overshoot.

    zeta follows from the overshoot via zeta = |ln mp| / sqrt(pi^2 + ln^2 mp),
    wn from ts = 4.6/(zeta*wn).  Returns wn^2 / (s^2 + 2*zeta*wn*s + wn^2).
    """
    if not (0.0 < mp < 1.0) or ts <= 0.0:
        raise InvalidSpec("need 0 < mp < 1 and ts > 0")
    lm = abs(math.log(mp))
    zeta = lm / math.sqrt(math.pi**2 + lm**2)
    if zeta < 0.01:
        raise InvalidSpec("overshoot target implies near-zero damping")
    wn = _SETTLE_CONST / (ts * zeta)
    return tf_new([wn**2], [1.0, 2.0 * zeta * wn, wn**2])


def build_ws(tid: TransferFunction, a: float) -> TransferFunction:
    """Sensitivity weight: regularized inverse of 1 - tid, scaled by a.

    The numerator is the target denominator.  The pole at the origin of
    the exact inverse sensitivity moves to -0.001 and a unity-DC-gain
    non-dominant factor (s/1000 + 1) makes the weight strictly proper
    without changing its magnitude inside the operating band.
    """
    if not (0.0 < a <= 1.0):
        raise InvalidSpec("tuning scalar a must lie in (0, 1]")
    den_t = tid.den.array()
    if len(den_t) != 3:
        raise InvalidSpec("tid must be a second-order target")
    den = np.polymul(np.polymul([1e-3, 1.0], [1.0, den_t[1]]), [1.0, 0.001])
    return tf_new(a * den_t, den)


def _as_tf(obj) -> TransferFunction:
    if isinstance(obj, TransferFunction):
        return obj
    return tf_new([float(obj)], [1.0])


@dataclass(frozen=True)
class SynthesisSpec:
    """Weighted mixed-sensitivity problem data for one axis."""

    plant: TransferFunction
    ws: TransferFunction
    wu: object  # constant or TransferFunction
    wt: TransferFunction
    a: float = 1.0


@dataclass(frozen=True)
class GeneralizedPlant:
    """Partitioned open-loop interconnection for synthesis.

    Inputs are ordered [w, u], outputs [z..., e]; D11 and D22 vanish by
    construction, D12 has full column rank and D21 full row rank.
    """

    ss: StateSpace
    n_w: int
    n_u: int
    n_z: int
    n_y: int
    spec: SynthesisSpec | None = None

    def partitions(self):
        A = self.ss.A
        B1 = self.ss.B[:, : self.n_w]
        B2 = self.ss.B[:, self.n_w:]
        C1 = self.ss.C[: self.n_z]
        C2 = self.ss.C[self.n_z:]
        D = self.ss.D
        D11 = D[: self.n_z, : self.n_w]
        D12 = D[: self.n_z, self.n_w:]
        D21 = D[self.n_z:, : self.n_w]
        D22 = D[self.n_z:, self.n_w:]
        return A, B1, B2, C1, C2, D11, D12, D21, D22


def _ssbal(A, B, C):
    """Diagonal state scaling (powers of two) equilibrating [A B; C 0].

    One bounded Osborne-style sweep over the state block; scalings are
    clamped so reducible structure cannot push them to infinity.
    """
    n = A.shape[0]
    t = np.ones(n)
    A = A.copy()
    B = B.copy()
    C = C.copy()
    for i in range(n):
        r = np.sum(np.abs(A[i, :])) - abs(A[i, i]) + np.sum(np.abs(B[i, :]))
        c = np.sum(np.abs(A[:, i])) - abs(A[i, i]) + np.sum(np.abs(C[:, i]))
        if r <= 0.0 or c <= 0.0:
            continue
        expo = 0.5 * (math.log2(r) - math.log2(c))
        f = 2.0 ** round(min(30.0, max(-30.0, expo)))
        if f != 1.0:
            A[i, :] /= f
            A[:, i] *= f
            B[i, :] /= f
            C[:, i] *= f
            t[i] *= f
    return A, B, C, t


def build_mixsyn_plant(spec: SynthesisSpec) -> GeneralizedPlant:
    """Assemble the state-space generalized plant for the S/KS/T stack."""
    g = to_statespace(spec.plant)
    if float(g.D[0, 0]) != 0.0:
        raise InvalidSpec("plant must be strictly proper")
    ws = to_statespace(spec.ws)
    if float(ws.D[0, 0]) != 0.0:
        raise InvalidSpec("Ws must be strictly proper (regularized inverse sensitivity)")
    wu = to_statespace(_as_tf(spec.wu))
    wt = to_statespace(spec.wt)
    for name, blk in (("Ws", ws), ("Wt", wt)):
        if not is_stable(blk):
            raise InvalidSpec(f"{name} must be stable")

    ng, ns, nu, nt = g.n_states, ws.n_states, wu.n_states, wt.n_states
    n = ng + ns + nu + nt
    sg = slice(0, ng)
    ss_ = slice(ng, ng + ns)
    su = slice(ng + ns, ng + ns + nu)
    st = slice(ng + ns + nu, n)

    A = np.zeros((n, n))
    A[sg, sg] = g.A
    A[ss_, ss_] = ws.A
    A[ss_, sg] = -ws.B @ g.C
    A[su, su] = wu.A
    A[st, st] = wt.A
    A[st, sg] = wt.B @ g.C

    B1 = np.zeros((n, 1))
    B1[ss_] = ws.B
    B2 = np.zeros((n, 1))
    B2[sg] = g.B
    B2[su] = wu.B

    C1 = np.zeros((3, n))
    C1[0, ss_] = ws.C
    C1[1, su] = wu.C
    C1[2, sg] = float(wt.D[0, 0]) * g.C[0]
    C1[2, st] = wt.C

    C2 = np.zeros((1, n))
    C2[0, sg] = -g.C[0]

    D11 = np.zeros((3, 1))
    D12 = np.array([[0.0], [float(wu.D[0, 0])], [0.0]])
    D21 = np.array([[1.0]])
    D22 = np.array([[0.0]])

    if np.linalg.matrix_rank(D12) < 1 or abs(float(wu.D[0, 0])) < 1e-12:
        raise RankDeficient("D12 rank deficient: Wu must have nonzero feedthrough")
    if np.linalg.matrix_rank(D21) < 1:
        raise RankDeficient("D21 rank deficient")

    B = np.hstack([B1, B2])
    C = np.vstack([C1, C2])
    Ab, Bb, Cb, _ = _ssbal(A, B, C)
    D = np.vstack([np.hstack([D11, D12]), np.hstack([D21, D22])])
    plant = StateSpace(Ab, Bb, Cb, D)
    return GeneralizedPlant(ss=plant, n_w=1, n_u=1, n_z=3, n_y=1, spec=spec)


# ---------------------------------------------------------------------------
# Riccati machinery
# ---------------------------------------------------------------------------

def _care_residual(A, M, Q, X):
    return A.T @ X + X @ A - X @ M @ X + Q


def _solve_care_hamiltonian(A, M, Q):
    """Stabilizing solution of A'X + XA - XMX + Q = 0 (M possibly indefinite).

    Ordered real Schur form of the Hamiltonian; raises
    NoStabilizingSolution when eigenvalues sit on the imaginary axis or
    the stable invariant subspace is not complementary.  One Lyapunov
    defect-correction step polishes the result.
    """
    n = A.shape[0]
    H = np.block([[A, -M], [-Q, -A.T]])
    ev = np.linalg.eigvals(H)
    if np.any(np.abs(ev.real) <= np.maximum(1e-8, 1e-12 * np.abs(ev))):
        raise NoStabilizingSolution("Hamiltonian has imaginary-axis eigenvalues")
    try:
        T, Z, sdim = scipy.linalg.schur(H, output="real", sort="lhp")
    except np.linalg.LinAlgError as exc:
        raise NoStabilizingSolution(f"Schur reordering failed: {exc}")
    if sdim != n:
        raise NoStabilizingSolution("stable invariant subspace has wrong dimension")
    Z11 = Z[:n, :n]
    Z21 = Z[n:, :n]
    if np.linalg.cond(Z11) > 1e13:
        raise NoStabilizingSolution("invariant subspace not complementary")
    X = scipy.linalg.solve(Z11.T, Z21.T).T
    X = 0.5 * (X + X.T)
    # one defect-correction sweep tightens badly scaled problems
    res = _care_residual(A, M, Q, X)
    scale = 1.0 + np.linalg.norm(X, "fro")
    if np.linalg.norm(res, "fro") > 1e-12 * scale:
        Acl = A - M @ X
        try:
            dX = scipy.linalg.solve_continuous_lyapunov(Acl.T, -res)
            Xp = 0.5 * ((X + dX) + (X + dX).T)
            if np.linalg.norm(_care_residual(A, M, Q, Xp), "fro") < np.linalg.norm(res, "fro"):
                X = Xp
        except Exception:
            pass
    return X


def care_solve(A, B, Q, R) -> np.ndarray:
    """Stabilizing solution of A'X + XA - X B R^-1 B' X + Q = 0.

    R must be symmetric positive definite.  The returned X makes
    A - B R^-1 B' X Hurwitz and satisfies the equation to a residual
    below 1e-8*(1 + ||X||_F).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if not np.allclose(R, R.T):
        raise ValueError("R must be symmetric")
    if np.any(np.linalg.eigvalsh(R) <= 0):
        raise ValueError("R must be positive definite")
    M = B @ np.linalg.solve(R, B.T)
    X = _solve_care_hamiltonian(A, M, Q)
    cl = np.linalg.eigvals(A - M @ X)
    if np.any(cl.real >= 0):
        raise NoStabilizingSolution("closed loop not Hurwitz")
    res = np.linalg.norm(_care_residual(A, M, Q, X), "fro")
    if res >= 1e-8 * (1.0 + np.linalg.norm(X, "fro")):
        raise NoStabilizingSolution(f"residual too large: {res:g}")
    return X


def _psd_floor(X, tol=1e-8):
    w = np.linalg.eigvalsh(0.5 * (X + X.T))
    return w.min() >= -tol * max(1.0, w.max(), 0.0)


def hinfsyn_at_gamma(P: GeneralizedPlant, gamma: float) -> StateSpace | None:
    """Central controller at a fixed gamma, or None when infeasible.

    Two-Riccati solvability test: stabilizing solutions X, Y of the
    state-feedback and output-estimation Riccati equations must exist,
    be positive semidefinite, and satisfy the spectral-radius coupling
    rho(X Y) < gamma^2.
    """
    A, B1, B2, C1, C2, D11, D12, D21, D22 = P.partitions()
    if np.any(D11 != 0.0) or np.any(D22 != 0.0):
        raise InvalidSpec("synthesis assumes D11 = 0 and D22 = 0")
    E = D12.T @ D12
    N = D21 @ D21.T
    Einv = np.linalg.inv(E)
    Ninv = np.linalg.inv(N)
    g2 = gamma * gamma

    Ax = A - B2 @ Einv @ D12.T @ C1
    Mx = B2 @ Einv @ B2.T - B1 @ B1.T / g2
    Qx = C1.T @ (np.eye(C1.shape[0]) - D12 @ Einv @ D12.T) @ C1
    Ay = A - B1 @ D21.T @ Ninv @ C2
    My = C2.T @ Ninv @ C2 - C1.T @ C1 / g2
    Qy = B1 @ (np.eye(B1.shape[1]) - D21.T @ Ninv @ D21) @ B1.T
    try:
        X = _solve_care_hamiltonian(Ax, Mx, Qx)
        Y = _solve_care_hamiltonian(Ay.T, My, Qy)
    except NoStabilizingSolution:
        return None
    if not (_psd_floor(X) and _psd_floor(Y)):
        return None
    rho = np.max(np.abs(np.linalg.eigvals(X @ Y))) if X.size else 0.0
    if rho >= g2 * (1.0 - 1e-9):
        return None

    F = -Einv @ (B2.T @ X + D12.T @ C1)
    L = -(Y @ C2.T + B1 @ D21.T) @ Ninv
    Z = np.linalg.solve(np.eye(X.shape[0]) - Y @ X / g2, np.eye(X.shape[0]))
    ZL = Z @ L
    Ak = A + (B1 @ (B1.T @ X)) / g2 + B2 @ F + ZL @ (C2 + (D21 @ (B1.T @ X)) / g2)
    Bk = -ZL
    Ck = F
    Dk = np.zeros((F.shape[0], C2.shape[0]))
    return StateSpace(Ak, Bk, Ck, Dk)


def lft(P: GeneralizedPlant, K: StateSpace) -> StateSpace:
    """Closed loop T_zw of the generalized plant with controller K.

    Assumes D22 = 0 so the interconnection is affine in K's matrices.
    """
    A, B1, B2, C1, C2, D11, D12, D21, D22 = P.partitions()
    if np.any(D22 != 0.0):
        raise InvalidSpec("lft assumes D22 = 0")
    Ak, Bk, Ck, Dk = K.A, K.B, K.C, K.D
    Acl = np.block([
        [A + B2 @ Dk @ C2, B2 @ Ck],
        [Bk @ C2, Ak],
    ])
    Bcl = np.vstack([B1 + B2 @ Dk @ D21, Bk @ D21])
    Ccl = np.hstack([C1 + D12 @ Dk @ C2, D12 @ Ck])
    Dcl = D11 + D12 @ Dk @ D21
    return StateSpace(Acl, Bcl, Ccl, Dcl)


@dataclass(frozen=True)
class SynthesisResult:
    """Central controller with its certified gamma and norm report."""

    controller: TransferFunction
    controller_ss: StateSpace
    gamma: float
    norms: dict
    internally_stable: bool
    spec: SynthesisSpec
    trace: tuple = ()


def _row_subsystem(cl: StateSpace, i: int) -> StateSpace:
    return StateSpace(cl.A, cl.B, cl.C[i:i + 1], cl.D[i:i + 1], cl.sample_time)


def _closed_loop_norms(P: GeneralizedPlant, K: StateSpace):
    cl = lft(P, K)
    if not is_stable(cl):
        return None, cl
    norms = {
        "WsS": hinf_norm(_row_subsystem(cl, 0)),
        "WuU": hinf_norm(_row_subsystem(cl, 1)),
        "WT": hinf_norm(_row_subsystem(cl, 2)),
        "stacked": hinf_norm(cl),
    }
    return norms, cl


def gamma_iterate(P: GeneralizedPlant, gamma_lo: float = 0.1,
                  gamma_hi: float = 10.0, tol: float = 1e-4) -> SynthesisResult:
    """Bisection on gamma down to relative width tol.

    The upper bound must be feasible.  The controller returned is the
    central controller at the smallest certified-feasible gamma; its
    closed-loop norms are recomputed directly and must not exceed that
    gamma (the result carries them in `norms`).
    """
    trace = []

    def feasible(g):
        K = hinfsyn_at_gamma(P, g)
        trace.append((g, K is not None))
        return K

    K_hi = feasible(gamma_hi)
    if K_hi is None:
        raise InfeasibleAtUpperBound(f"no controller at gamma = {gamma_hi}")
    lo, hi = gamma_lo, gamma_hi
    K_best = K_hi
    if feasible(lo) is not None:
        hi = lo  # optimum at or below the requested floor
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        K_mid = feasible(mid)
        if K_mid is None:
            lo = mid
        else:
            hi = mid
            K_best = K_mid

    # certify: recompute at the final gamma, nudging up if numerics bite
    gamma = hi
    K = K_best if hi < gamma_hi else K_hi
    for _ in range(20):
        K_try = hinfsyn_at_gamma(P, gamma)
        if K_try is not None:
            norms, _ = _closed_loop_norms(P, K_try)
            if norms is not None and norms["stacked"] <= gamma + 1e-6:
                K = K_try
                break
        gamma *= 1.0 + max(tol, 1e-6)
    else:
        raise NoStabilizingSolution("could not certify a controller near the optimum")
    norms, _ = _closed_loop_norms(P, K)
    return SynthesisResult(
        controller=to_tf(K),
        controller_ss=K,
        gamma=gamma,
        norms=norms,
        internally_stable=True,
        spec=P.spec,
        trace=tuple(trace),
    )


# ---------------------------------------------------------------------------
# closed-loop verification and mu analysis
# ---------------------------------------------------------------------------

def closed_loop(G: TransferFunction, C) -> dict:
    """Gang-of-four realizations S, T, U, GS on the shared closed-loop A.

    C may be a TransferFunction or a continuous StateSpace controller.
    Raises InternallyUnstable when the loop is not internally stable.
    """
    gss = to_statespace(G)
    css = to_statespace(C) if isinstance(C, TransferFunction) else C
    ng, nk = gss.n_states, css.n_states
    Dk = float(css.D[0, 0]) if css.D.size else 0.0
    if float(gss.D[0, 0]) != 0.0 and Dk != 0.0:
        raise InvalidSpec("either plant or controller must be strictly proper")
    Cg = gss.C
    A = np.block([
        [gss.A - gss.B @ (Dk * Cg), gss.B @ css.C],
        [-css.B @ Cg, css.A],
    ])
    if not is_stable(StateSpace(A, np.zeros((ng + nk, 1)), np.zeros((1, ng + nk)), [[0.0]])):
        raise InternallyUnstable("closed loop has RHP poles")
    Br = np.vstack([gss.B * Dk, css.B])        # from reference r
    Bd = np.vstack([gss.B, np.zeros((nk, 1))])  # from plant-input disturbance
    Cy = np.hstack([Cg, np.zeros((1, nk))])
    Cu = np.hstack([-Dk * Cg, css.C])
    return {
        "T": StateSpace(A, Br, Cy, [[0.0]]),
        "S": StateSpace(A, Br, -Cy, [[1.0]]),
        "U": StateSpace(A, Br, Cu, [[Dk]]),
        "GS": StateSpace(A, Bd, Cy, [[0.0]]),
        "A": A,
    }


def verify_mixsyn(G: TransferFunction, C, Ws: TransferFunction, Wu,
                  Wt: TransferFunction) -> dict:
    """Norm report for the weighted loop plus internal-stability check."""
    gof = closed_loop(G, C)
    spec = SynthesisSpec(plant=G, ws=Ws, wu=Wu, wt=Wt)
    P = build_mixsyn_plant(spec)
    css = to_statespace(C) if isinstance(C, TransferFunction) else C
    norms, cl = _closed_loop_norms(P, css)
    if norms is None:
        raise InternallyUnstable("weighted closed loop unstable")
    return {
        "WsS": norms["WsS"],
        "WuU": norms["WuU"],
        "WT": norms["WT"],
        "stacked": norms["stacked"],
        "internally_stable": True,
    }


@dataclass(frozen=True)
class MuCurve:
    """Structured-singular-value curve on a frequency grid."""

    omega: np.ndarray
    mu: np.ndarray
    sup: float

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))


def rs_mu(G: TransferFunction, C, Wt: TransferFunction, grid=None) -> MuCurve:
    """Robust-stability mu curve: |Wt*T| (exact for one complex block)."""
    w = standard_grid() if grid is None else np.asarray(grid, dtype=float)
    gof = closed_loop(G, C)
    t_mag = freq_response(gof["T"], w).magnitude
    wt_mag = freq_response(Wt, w).magnitude
    mu = wt_mag * t_mag
    return MuCurve(w, mu, float(np.max(mu)))


def rp_mu(G: TransferFunction, C, Ws: TransferFunction, Wt: TransferFunction,
          grid=None) -> MuCurve:
    """Robust-performance mu: |Ws*S| + |Wt*T| (exact two-block SISO formula)."""
    w = standard_grid() if grid is None else np.asarray(grid, dtype=float)
    gof = closed_loop(G, C)
    s_mag = freq_response(gof["S"], w).magnitude
    t_mag = freq_response(gof["T"], w).magnitude
    mu = freq_response(Ws, w).magnitude * s_mag + freq_response(Wt, w).magnitude * t_mag
    return MuCurve(w, mu, float(np.max(mu)))


def reduce_and_check(result: SynthesisResult, target_order: int):
    """Balanced truncation of the controller with a closed-loop budget.

    The relative H-infinity deviation of the complementary sensitivity
    must stay below 5 percent, mirroring the 'negligible effect'
    requirement on the reduced implementation.
    """
    K = result.controller_ss
    if not is_stable(K):
        raise UnstableController("controller reduction requires a stable controller")
    K_red, _bound = balanced_truncation(K, target_order)
    G = result.spec.plant
    t_full = closed_loop(G, K)["T"]
    try:
        t_red = closed_loop(G, K_red)["T"]
    except InternallyUnstable:
        raise DeviationExceeded("reduced controller destabilizes the loop")
    diff = StateSpace(
        scipy.linalg.block_diag(t_full.A, t_red.A),
        np.vstack([t_full.B, t_red.B]),
        np.hstack([t_full.C, -t_red.C]),
        t_full.D - t_red.D,
    )
    deviation = hinf_norm(diff) / hinf_norm(t_full)
    if deviation >= 0.05:
        raise DeviationExceeded(f"closed-loop deviation {deviation:.3f} >= 0.05")
    return K_red, float(deviation)
