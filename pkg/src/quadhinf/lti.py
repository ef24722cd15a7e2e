"""Continuous/discrete LTI representations, algebra and analysis.

SISO transfer functions are stored as descending-power polynomial
coefficient pairs with a monic denominator.  State-space models carry
plain (A, B, C, D) numpy arrays and may be MIMO; `sample_time=None`
marks a continuous-time model, a positive float the sampling period of
a discrete one.  All types are immutable values: operations return new
objects and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    AlgebraicLoop,
    ImproperSystem,
    IntegratorPresent,
    PoleEvaluation,
    PoleOnGrid,
    SingularTransform,
    UnstableSystem,
    ZeroDenominator,
)

__all__ = [
    "Polynomial",
    "TransferFunction",
    "StateSpace",
    "FrequencyResponse",
    "TimeSeries",
    "StepMetrics",
    "tf_new",
    "tf_eval",
    "poles",
    "zeros",
    "series",
    "parallel",
    "feedback",
    "minreal",
    "to_statespace",
    "to_tf",
    "ss_series",
    "is_stable",
    "freq_response",
    "hinf_norm",
    "step_response",
    "step_metrics",
    "c2d_tustin",
    "balanced_truncation",
    "dcgain",
    "standard_grid",
    "STABILITY_TOL",
]

# Default tolerance on pole real parts (continuous) / radius defect (discrete).
STABILITY_TOL = 1e-9


def standard_grid() -> np.ndarray:
    """400 logarithmically spaced frequencies on [0.01, 1000] rad/s.

    Shared evaluation grid for identification, uncertainty profiles and
    mu curves; covers the robot operating band (< 20 Hz) with margin.
    """
    return np.geomspace(1e-2, 1e3, 400)


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------

def _strip(coeffs) -> np.ndarray:
    """Drop leading (near-machine) zero coefficients; keep at least one."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.ndim != 1:
        raise ValueError("polynomial coefficients must be one-dimensional")
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1)
    k = 0
    while k < c.size - 1 and abs(c[k]) <= 1e-14 * scale:
        k += 1
    return c[k:].copy()


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial, descending powers, no leading zeros."""

    coeffs: tuple

    @staticmethod
    def of(coeffs) -> "Polynomial":
        return Polynomial(tuple(float(x) for x in _strip(coeffs)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def __call__(self, s):
        return np.polyval(self.array(), s)

    def derivative(self) -> "Polynomial":
        return Polynomial.of(np.polyder(self.array())) if self.degree > 0 else Polynomial.of([0.0])

    def roots(self) -> np.ndarray:
        """Roots via the balanced companion matrix plus one Newton step."""
        c = self.array()
        if self.degree < 1 or self.is_zero:
            return np.array([], dtype=complex)
        r = np.roots(c)
        dc = np.polyder(c)
        dp = np.polyval(dc, r)
        ok = np.abs(dp) > 1e-300
        r[ok] = r[ok] - np.polyval(c, r[ok]) / dp[ok]
        return r[np.argsort(r.real, kind="stable")]


def _polymul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.polymul(a, b)


def _polyadd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.polyadd(a, b)


# ---------------------------------------------------------------------------
# transfer functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferFunction:
    """Real-rational SISO system num/den, stored with monic denominator."""

    num: Polynomial
    den: Polynomial

    @property
    def is_proper(self) -> bool:
        return self.num.degree <= self.den.degree

    @property
    def is_strictly_proper(self) -> bool:
        return self.num.degree < self.den.degree

    @property
    def order(self) -> int:
        return self.den.degree

    def __call__(self, s):
        return tf_eval(self, s)

    def __repr__(self):
        return f"TransferFunction(num={list(self.num.coeffs)}, den={list(self.den.coeffs)})"


def tf_new(num, den) -> TransferFunction:
    """Build a transfer function from descending coefficient lists.

    Leading zeros are stripped and the denominator is normalized to be
    monic.  No pole-zero cancellation is performed; call `minreal` for
    that explicitly.
    """
    n = _strip(num)
    d = _strip(den)
    if np.all(d == 0.0):
        raise ZeroDenominator("denominator is identically zero")
    lead = d[0]
    return TransferFunction(Polynomial.of(n / lead), Polynomial.of(d / lead))


def tf_eval(sys: TransferFunction, s) -> complex:
    """Evaluate num(s)/den(s) by Horner's scheme at a single point."""
    s = complex(s)
    den = np.polyval(sys.den.array(), s)
    scale = np.polyval(np.abs(sys.den.array()), abs(s))
    if abs(den) <= 1e-12 * max(scale, 1e-300):
        raise PoleEvaluation(f"denominator vanishes at s={s}")
    return complex(np.polyval(sys.num.array(), s)) / den


def poles(sys: TransferFunction) -> np.ndarray:
    """Denominator roots, multiplicity preserved, sorted by real part."""
    return sys.den.roots()


def zeros(sys: TransferFunction) -> np.ndarray:
    """Numerator roots, sorted by real part; empty for constants."""
    if sys.num.is_zero:
        raise ValueError("zero numerator has no well-defined zeros")
    return sys.num.roots()


def series(a: TransferFunction, b: TransferFunction) -> TransferFunction:
    """Cascade a*b without pole-zero cancellation."""
    return tf_new(_polymul(a.num.array(), b.num.array()),
                  _polymul(a.den.array(), b.den.array()))


def parallel(a: TransferFunction, b: TransferFunction) -> TransferFunction:
    """Sum a+b on the common denominator."""
    num = _polyadd(_polymul(a.num.array(), b.den.array()),
                   _polymul(b.num.array(), a.den.array()))
    return tf_new(num, _polymul(a.den.array(), b.den.array()))


def feedback(g: TransferFunction, h: TransferFunction, sign: int = -1) -> TransferFunction:
    """Close the loop g/(1 - sign*g*h); sign=-1 is negative feedback."""
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    ng, dg = g.num.array(), g.den.array()
    nh, dh = h.num.array(), h.den.array()
    num = _polymul(ng, dh)
    den = _polyadd(_polymul(dg, dh), -sign * _polymul(ng, nh))
    scale = max(np.max(np.abs(_polymul(dg, dh))), np.max(np.abs(_polymul(ng, nh))), 1e-300)
    if np.max(np.abs(den)) <= 1e-12 * scale:
        raise AlgebraicLoop("closed-loop denominator vanishes identically")
    return tf_new(num, den)


def minreal(sys: TransferFunction, tol: float = 1e-7) -> TransferFunction:
    """Cancel pole-zero pairs closer than tol*max(1,|p|).

    Cancellation is never implicit in the algebra above; this is the
    one explicit place where near-coincident dynamics are removed.
    """
    if sys.num.is_zero:
        return sys
    p = list(poles(sys))
    z = list(zeros(sys))
    gain = sys.num.coeffs[0]
    kept_p = []
    for pk in p:
        hit = None
        for i, zk in enumerate(z):
            if abs(pk - zk) <= tol * max(1.0, abs(pk)):
                hit = i
                break
        if hit is None:
            kept_p.append(pk)
        else:
            z.pop(hit)
    num = np.real(np.poly(np.asarray(z, dtype=complex))) if z else np.array([1.0])
    den = np.real(np.poly(np.asarray(kept_p, dtype=complex))) if kept_p else np.array([1.0])
    return tf_new(gain * num, den)


# ---------------------------------------------------------------------------
# state space
# ---------------------------------------------------------------------------

def _as_matrix(m, rows=None, cols=None) -> np.ndarray:
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if rows is not None and a.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise ValueError(f"expected {cols} cols, got {a.shape[1]}")
    return a


@dataclass(frozen=True)
class StateSpace:
    """(A, B, C, D) realization; sample_time None marks continuous time."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    sample_time: float | None = None

    def __post_init__(self):
        A = _as_matrix(self.A)
        n = A.shape[0]
        if A.shape[1] != n:
            raise ValueError("A must be square")
        B = _as_matrix(self.B, rows=n) if n else np.zeros((0, _as_matrix(self.B).shape[1]))
        C = _as_matrix(self.C, cols=n) if n else np.zeros((_as_matrix(self.C).shape[0], 0))
        D = _as_matrix(self.D, rows=C.shape[0], cols=B.shape[1])
        if self.sample_time is not None and self.sample_time <= 0:
            raise ValueError("sample_time must be positive")
        for name, val in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, val)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    @property
    def is_continuous(self) -> bool:
        return self.sample_time is None


def to_statespace(tf: TransferFunction) -> StateSpace:
    """Controllable-canonical realization of a proper transfer function."""
    if not tf.is_proper:
        raise ImproperSystem("numerator degree exceeds denominator degree")
    den = tf.den.array()
    n = len(den) - 1
    num = np.concatenate([np.zeros(n + 1 - len(tf.num.coeffs)), tf.num.array()])
    d = num[0]
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[d]])
    a = den[1:]
    A = np.zeros((n, n))
    A[0, :] = -a
    A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1))
    B[0, 0] = 1.0
    C = (num[1:] - d * a).reshape(1, n)
    return StateSpace(A, B, C, [[d]])


def to_tf(ss: StateSpace) -> TransferFunction:
    """SISO state space to transfer function via characteristic polynomials.

    Uses det(sI-A+BC) = det(sI-A)*(1 + C(sI-A)^{-1}B), so the numerator
    is poly(A-BC) + (D-1)*poly(A).
    """
    if ss.n_inputs != 1 or ss.n_outputs != 1:
        raise ValueError("to_tf requires a SISO system")
    d = float(ss.D[0, 0])
    if ss.n_states == 0:
        return tf_new([d], [1.0])
    den = np.poly(ss.A)
    num = np.poly(ss.A - ss.B @ ss.C) + (d - 1.0) * den
    return tf_new(num, den)


def ss_series(first: StateSpace, second: StateSpace) -> StateSpace:
    """Cascade: output of `first` feeds `second` (y = second(first(u)))."""
    if first.sample_time != second.sample_time:
        raise ValueError("sample times differ")
    if first.n_outputs != second.n_inputs:
        raise ValueError("dimension mismatch in cascade")
    n1, n2 = first.n_states, second.n_states
    A = np.block([
        [first.A, np.zeros((n1, n2))],
        [second.B @ first.C, second.A],
    ]) if n1 + n2 else np.zeros((0, 0))
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return StateSpace(A, B, C, D, first.sample_time)


def _eigvals(sys) -> np.ndarray:
    if isinstance(sys, TransferFunction):
        return poles(sys)
    if sys.n_states == 0:
        return np.array([], dtype=complex)
    return np.linalg.eigvals(sys.A)


def is_stable(sys, tol: float = STABILITY_TOL) -> bool:
    """Hurwitz / Schur stability test on poles (eigenvalues)."""
    lam = _eigvals(sys)
    if lam.size == 0:
        return True
    discrete = isinstance(sys, StateSpace) and sys.sample_time is not None
    if discrete:
        return bool(np.all(np.abs(lam) < 1.0 - tol))
    return bool(np.all(lam.real < -tol))


# ---------------------------------------------------------------------------
# frequency response
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrequencyResponse:
    """Complex response samples on a strictly increasing positive grid."""

    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if w.ndim != 1 or v.ndim != 1 or w.size != v.size:
            raise ValueError("omega and values must be 1-D of equal length")
        if w.size and (np.any(w <= 0) or np.any(np.diff(w) <= 0)):
            raise ValueError("omega must be strictly increasing and positive")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "values", v)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


def freq_response(sys, omega) -> FrequencyResponse:
    """Evaluate the system on a frequency grid (rad/s).

    Continuous systems are evaluated at s = j*omega, discrete ones at
    z = exp(j*omega*dt).
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0) or np.any(np.diff(w) <= 0):
        raise ValueError("grid must be strictly increasing and positive")
    if isinstance(sys, TransferFunction):
        s = 1j * w
        den = np.polyval(sys.den.array(), s)
        scale = np.polyval(np.abs(sys.den.array()), np.abs(s))
        bad = np.abs(den) <= 1e-12 * np.maximum(scale, 1e-300)
        if np.any(bad):
            raise PoleOnGrid(f"imaginary-axis pole at omega={w[bad][0]:g}")
        vals = np.polyval(sys.num.array(), s) / den
        return FrequencyResponse(w, vals)
    if sys.n_inputs != 1 or sys.n_outputs != 1:
        raise ValueError("freq_response on state space requires SISO")
    if sys.sample_time is None:
        pts = 1j * w
    else:
        pts = np.exp(1j * w * sys.sample_time)
    n = sys.n_states
    vals = np.empty(w.size, dtype=complex)
    eye = np.eye(n)
    for i, s in enumerate(pts):
        try:
            x = np.linalg.solve(s * eye - sys.A, sys.B)
        except np.linalg.LinAlgError:
            raise PoleOnGrid(f"grid point omega={w[i]:g} hits a pole")
        vals[i] = (sys.C @ x + sys.D)[0, 0]
    return FrequencyResponse(w, vals)


def _sigma_max(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def _hinf_hamiltonian(A, B, C, D, gamma):
    m = B.shape[1]
    R = gamma**2 * np.eye(m) - D.T @ D
    Rinv = np.linalg.inv(R)
    Ah = A + B @ Rinv @ D.T @ C
    return np.block([
        [Ah, B @ Rinv @ B.T],
        [-C.T @ (np.eye(C.shape[0]) + D @ Rinv @ D.T) @ C, -Ah.T],
    ])


def hinf_norm(sys, tol: float = 1e-6) -> float:
    """H-infinity norm of a stable proper system.

    Bisection on gamma: gamma is below the norm exactly when the
    associated Hamiltonian matrix has imaginary-axis eigenvalues
    (Boyd-Balakrishnan / Bruinsma-Steinbuch test).  A coarse grid
    maximum of the frequency response seeds the bracket.
    """
    if isinstance(sys, TransferFunction):
        if not sys.is_proper:
            raise ImproperSystem("hinf_norm requires a proper system")
        ss = to_statespace(sys)
    else:
        ss = sys
    if ss.sample_time is not None:
        raise ValueError("hinf_norm implemented for continuous systems")
    if not is_stable(ss):
        raise UnstableSystem("H-infinity norm is infinite")
    A, B, C, D = ss.A, ss.B, ss.C, ss.D
    d_norm = _sigma_max(D)
    if ss.n_states == 0:
        return d_norm

    lam = np.linalg.eigvals(A)
    mags = np.abs(lam[np.abs(lam) > 0])
    lo_w = 0.01 * (mags.min() if mags.size else 1.0)
    hi_w = 100.0 * (mags.max() if mags.size else 1.0)
    grid = np.geomspace(lo_w, hi_w, 512)
    gmax = 0.0
    eye = np.eye(ss.n_states)
    for w in np.concatenate([[0.0], grid]):
        M = C @ np.linalg.solve(1j * w * eye - A, B) + D
        gmax = max(gmax, _sigma_max(M))
    lb = max(gmax, d_norm)

    def crosses(gamma):
        H = _hinf_hamiltonian(A, B, C, D, gamma)
        ev = np.linalg.eigvals(H)
        return bool(np.any(np.abs(ev.real) <= 1e-8 * (1.0 + np.abs(ev.imag))))

    lo = lb
    hi = max(2.0 * lb, d_norm * (1.0 + 1e-6) + 1e-12)
    for _ in range(80):
        if not crosses(hi):
            break
        lo = hi
        hi *= 2.0
    else:
        raise ArithmeticError("failed to bracket the H-infinity norm")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if crosses(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# time domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled named channels with a shared time step."""

    dt: float
    channels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        chans = {}
        length = None
        for name, data in self.channels.items():
            arr = np.asarray(data, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"channel {name!r} must be 1-D")
            if length is None:
                length = arr.size
            elif arr.size != length:
                raise ValueError("all channels must have equal length")
            chans[str(name)] = arr
        object.__setattr__(self, "channels", chans)

    def __len__(self):
        for arr in self.channels.values():
            return arr.size
        return 0

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]


@dataclass(frozen=True)
class StepMetrics:
    """Step-response figures; settling uses a fixed 2 percent band."""

    overshoot: float
    settling_time: float
    rise_time: float
    final_value: float


def _zoh(A, B, dt):
    """Exact zero-order-hold discretization of (A, B)."""
    n, m = A.shape[0], B.shape[1]
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A
    M[:n, n:] = B
    E = scipy.linalg.expm(M * dt)
    return E[:n, :n], E[:n, n:]


def step_response(sys, t_final: float, dt: float) -> TimeSeries:
    """Unit-step response via exact ZOH discretization of a realization."""
    if dt <= 0 or t_final <= 0:
        raise ValueError("dt and t_final must be positive")
    ss = to_statespace(sys) if isinstance(sys, TransferFunction) else sys
    if ss.n_inputs != 1 or ss.n_outputs != 1:
        raise ValueError("step_response requires SISO")
    n_samp = int(round(t_final / dt)) + 1
    if ss.n_states == 0:
        y = np.full(n_samp, float(ss.D[0, 0]))
        return TimeSeries(dt, {"y": y})
    Ad, Bd = _zoh(ss.A, ss.B, dt)
    x = np.zeros(ss.n_states)
    b = Bd[:, 0]
    c = ss.C[0]
    d = float(ss.D[0, 0])
    y = np.empty(n_samp)
    for k in range(n_samp):
        y[k] = c @ x + d
        x = Ad @ x + b
    return TimeSeries(dt, {"y": y})


def _cross_time(t, f, level, rising=True):
    """First linear-interpolated crossing time of f through level."""
    above = f >= level if rising else f <= level
    idx = np.flatnonzero(above)
    if idx.size == 0:
        return float("nan")
    k = idx[0]
    if k == 0:
        return float(t[0])
    f0, f1 = f[k - 1], f[k]
    if f1 == f0:
        return float(t[k])
    frac = (level - f0) / (f1 - f0)
    return float(t[k - 1] + frac * (t[k] - t[k - 1]))


def step_metrics(ts: TimeSeries, channel: str = "y") -> StepMetrics:
    """Overshoot, 2%-band settling time and 10-90% rise time."""
    y = ts[channel]
    t = ts.t
    final = float(y[-1])
    if final == 0.0:
        raise ValueError("final value is zero; step metrics undefined")
    dev = np.abs(y - final)
    band = 0.02 * abs(final)
    overshoot = max(0.0, (float(np.max(y * np.sign(final))) - abs(final)) / abs(final))
    outside = np.flatnonzero(dev > band)
    if outside.size == 0:
        settling = 0.0
    else:
        k = outside[-1]
        if k == len(y) - 1:
            settling = float("nan")
        else:
            d0, d1 = dev[k], dev[k + 1]
            frac = (d0 - band) / (d0 - d1) if d0 != d1 else 1.0
            settling = float(t[k] + frac * ts.dt)
    t10 = _cross_time(t, y * np.sign(final), 0.1 * abs(final))
    t90 = _cross_time(t, y * np.sign(final), 0.9 * abs(final))
    rise = t90 - t10 if np.isfinite(t10) and np.isfinite(t90) else float("nan")
    return StepMetrics(overshoot=overshoot, settling_time=settling,
                       rise_time=rise, final_value=final)


# ---------------------------------------------------------------------------
# discretization and reduction
# ---------------------------------------------------------------------------

def c2d_tustin(sys, fs: float) -> StateSpace:
    """Bilinear (Tustin) discretization at sampling frequency fs in Hz.

    Substitutes s = 2*fs*(z-1)/(z+1); the map is exact on the frequency
    response up to the usual tangent warping and sends the open left
    half-plane onto the open unit disk, so stability is preserved both
    ways.
    """
    if fs <= 0:
        raise ValueError("fs must be positive")
    ss = to_statespace(sys) if isinstance(sys, TransferFunction) else sys
    if ss.sample_time is not None:
        raise ValueError("system is already discrete")
    n = ss.n_states
    if n == 0:
        return StateSpace(ss.A, ss.B, ss.C, ss.D, sample_time=1.0 / fs)
    M = 2.0 * fs * np.eye(n) - ss.A
    det_scale = np.linalg.cond(M)
    if not np.isfinite(det_scale) or det_scale > 1e14:
        raise SingularTransform("continuous pole at 2*fs; Tustin map singular")
    Minv_B = np.linalg.solve(M, ss.B)
    Ad = np.linalg.solve(M, 2.0 * fs * np.eye(n) + ss.A)
    Bd = (np.eye(n) + Ad) @ Minv_B
    Cd = ss.C.copy()
    Dd = ss.D + ss.C @ Minv_B
    return StateSpace(Ad, Bd, Cd, Dd, sample_time=1.0 / fs)


def _gramian_factor(A, M) -> np.ndarray:
    """Lower factor L with L@L.T solving A X + X A' + M M' = 0."""
    X = scipy.linalg.solve_continuous_lyapunov(A, -M @ M.T)
    X = 0.5 * (X + X.T)
    w, V = np.linalg.eigh(X)
    w = np.clip(w, 0.0, None)
    return V @ np.diag(np.sqrt(w))


def balanced_truncation(ss: StateSpace, target_order: int):
    """Square-root balanced truncation of a stable continuous system.

    Returns the reduced model together with the a-priori error bound
    twice the sum of the discarded Hankel singular values.
    """
    if ss.sample_time is not None:
        raise ValueError("balanced truncation implemented for continuous systems")
    if not is_stable(ss):
        raise UnstableSystem("balanced truncation requires a stable system")
    n = ss.n_states
    if not 0 <= target_order <= n:
        raise ValueError("target order must lie in [0, n]")
    if target_order == n:
        return StateSpace(ss.A, ss.B, ss.C, ss.D, ss.sample_time), 0.0
    Lc = _gramian_factor(ss.A, ss.B)
    Lo = _gramian_factor(ss.A.T, ss.C.T)
    U, sv, Vt = np.linalg.svd(Lo.T @ Lc)
    hsv = sv[: n]
    r = target_order
    bound = 2.0 * float(np.sum(hsv[r:]))
    if r == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, ss.n_inputs)),
                          np.zeros((ss.n_outputs, 0)), ss.D, ss.sample_time), bound
    s_kept = hsv[:r]
    if np.any(s_kept <= 0):
        raise ValueError("retained Hankel singular values must be positive")
    sqrt_inv = np.diag(1.0 / np.sqrt(s_kept))
    T = Lc @ Vt[:r].T @ sqrt_inv          # n x r
    L = sqrt_inv @ U[:, :r].T @ Lo.T      # r x n
    Ar = L @ ss.A @ T
    Br = L @ ss.B
    Cr = ss.C @ T
    return StateSpace(Ar, Br, Cr, ss.D, ss.sample_time), bound


def dcgain(sys) -> float:
    """Steady-state gain sys(0); rejects systems with a pole at the origin."""
    if isinstance(sys, TransferFunction):
        den = sys.den.array()
        if abs(den[-1]) <= 1e-12 * np.max(np.abs(den)):
            raise IntegratorPresent("pole at the origin; DC gain undefined")
        return float(sys.num(0.0) / sys.den(0.0))
    if sys.n_states == 0:
        return float(sys.D[0, 0])
    try:
        x = np.linalg.solve(sys.A, -sys.B)
    except np.linalg.LinAlgError:
        raise IntegratorPresent("singular A; DC gain undefined")
    if np.linalg.cond(sys.A) > 1e12:
        raise IntegratorPresent("near-singular A; DC gain undefined")
    return float((sys.C @ x + sys.D)[0, 0])
