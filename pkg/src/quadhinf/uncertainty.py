"""Multiplicative uncertainty: profiles, envelopes, weight fitting, sampling.

The plant family is G = (1 + Delta*W)*G0 with stable ||Delta||_inf < 1.
A valid weight satisfies |G(jw)/G0(jw) - 1| <= |W(jw)| for every family
member on the working grid; `fit_weight` produces a stable minimum-phase
rational upper bound of the measured envelope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitDiverged, GridMismatch, InvalidConfig, NominalZero
from .lti import TransferFunction, freq_response, standard_grid, tf_new

__all__ = [
    "UncertainModel",
    "UncertaintyProfile",
    "relative_error_profile",
    "envelope",
    "fit_weight",
    "validate_weight",
    "sample_perturbed",
]


@dataclass(frozen=True)
class UncertaintyProfile:
    """Per-model relative-error magnitudes |G_i/G0 - 1| on a shared grid."""

    omega: np.ndarray
    magnitude: tuple  # tuple of arrays, one per model

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        mags = tuple(np.asarray(m, dtype=float) for m in self.magnitude)
        for m in mags:
            if m.shape != w.shape:
                raise GridMismatch("profile magnitude length differs from grid")
            if np.any(m < 0):
                raise InvalidConfig("profile magnitudes must be nonnegative")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "magnitude", mags)


@dataclass(frozen=True)
class UncertainModel:
    """Nominal plant, uncertainty weight, and the perturbed family."""

    nominal: TransferFunction
    weight: TransferFunction
    family: tuple


def relative_error_profile(G: TransferFunction, G0: TransferFunction, grid) -> np.ndarray:
    """|G(jw)/G0(jw) - 1| per grid point."""
    w = np.asarray(grid, dtype=float)
    g = freq_response(G, w).values
    g0 = freq_response(G0, w).values
    scale = float(np.max(np.abs(g0)))
    if np.any(np.abs(g0) < 1e-12 * max(scale, 1e-300)):
        raise NominalZero("nominal response vanishes on the grid")
    return np.abs(g / g0 - 1.0)


def envelope(profiles) -> np.ndarray:
    """Pointwise maximum over profiles (arrays or an UncertaintyProfile)."""
    if isinstance(profiles, UncertaintyProfile):
        mags = profiles.magnitude
    else:
        mags = tuple(np.asarray(m, dtype=float) for m in profiles)
    if not mags:
        raise InvalidConfig("need at least one profile")
    n = mags[0].size
    for m in mags:
        if m.size != n:
            raise GridMismatch("profiles live on different grids")
    return np.max(np.vstack(mags), axis=0)


def _spectral_roots(poly_x: np.ndarray) -> np.ndarray:
    """s-plane left-half roots of P(-s^2) for a polynomial P in x = w^2.

    Real positive roots of P would put zeros on the imaginary axis; they
    are nudged slightly into the left half plane so the factor stays
    stable and minimum phase.
    """
    out = []
    if len(poly_x) <= 1:
        return np.array(out, dtype=complex)
    for x in np.roots(poly_x):
        if abs(x.imag) <= 1e-12 * max(1.0, abs(x.real)) and x.real > 0:
            m = np.sqrt(x.real)
            out.extend([m * (-1e-3 + 1j), m * (-1e-3 - 1j)])
            continue
        s = np.sqrt(-x)
        if s.real > 0:
            s = -s
        elif s.real == 0:
            s = -abs(s.imag) * 1e-3 + 1j * s.imag
        out.append(s)
    # the two-for-one expansion above only happens for real positive x,
    # where the conjugate root is the same point; drop the duplicate pair
    if len(out) > len(poly_x) - 1:
        seen = []
        for s in out:
            if not any(abs(s - t) <= 1e-9 * max(1.0, abs(s)) for t in seen):
                seen.append(s)
        out = seen[: len(poly_x) - 1]
    return np.asarray(out, dtype=complex)


def fit_weight(env, grid=None, num_order: int = 2, den_order: int = 2,
               margin: float = 1.02) -> TransferFunction:
    """Stable minimum-phase rational upper bound of an envelope.

    Fits |W|^2 as a rational function of w^2 by iteratively reweighted
    least squares (relative-error weighting approximates a log-magnitude
    fit), spectral-factors the result, then scales the gain by the
    smallest factor >= margin that dominates the envelope at every grid
    point.
    """
    if margin < 1.0:
        raise InvalidConfig("margin must be at least 1")
    if not (0 <= num_order <= den_order <= 4):
        raise InvalidConfig("orders must satisfy 0 <= num_order <= den_order <= 4")
    env = np.asarray(env, dtype=float)
    w = standard_grid() if grid is None else np.asarray(grid, dtype=float)
    if env.shape != w.shape:
        raise GridMismatch("envelope length differs from grid")
    x = w * w
    y = env * env
    floor = 1e-8 * max(float(np.max(env)), 1e-300)
    rel = 1.0 / np.maximum(env, floor) ** 2

    den_prev = np.ones(1)
    num2 = den2 = None
    for _ in range(30):
        wt = rel / np.maximum(np.abs(np.polyval(den_prev, x)), 1e-300)
        cols = [wt * x ** (num_order - j) for j in range(num_order + 1)]
        cols += [-wt * y * x ** (den_order - k) for k in range(1, den_order + 1)]
        M = np.column_stack(cols)
        rhs = wt * y * x ** den_order
        sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        num2 = sol[: num_order + 1]
        den2 = np.concatenate([[1.0], sol[num_order + 1:]])
        if np.allclose(den2, den_prev, rtol=1e-10, atol=0.0):
            break
        den_prev = den2
    if num2[0] <= 0 or np.any(np.polyval(num2, x) <= 0) or np.any(np.polyval(den2, x) <= 0):
        raise FitDiverged("magnitude-squared fit is not positive; change orders")

    zs = _spectral_roots(num2)
    ps = _spectral_roots(den2)
    num = np.sqrt(num2[0]) * np.real(np.poly(zs)) if zs.size else np.array([np.sqrt(num2[0])])
    den = np.real(np.poly(ps)) if ps.size else np.array([1.0])
    W = tf_new(num, den)

    mag = freq_response(W, w).magnitude
    if np.any(mag <= 0):
        raise FitDiverged("fitted weight magnitude vanishes on the grid")
    factor = max(margin, float(np.max(env / mag))) * (1.0 + 1e-12)
    return tf_new(factor * W.num.array(), W.den.array())


def validate_weight(W: TransferFunction, profiles: UncertaintyProfile):
    """(ok, worst_margin): min over the grid of |W| minus the envelope."""
    env = envelope(profiles)
    mag = freq_response(W, profiles.omega).magnitude
    worst = float(np.min(mag - env))
    return worst >= 0.0, worst


def sample_perturbed(G0: TransferFunction, W: TransferFunction, n: int,
                     seed: int = 0) -> list:
    """Draw family members G_k = (1 + Delta_k W) G0.

    Delta_k is a first-order all-pass (w_k - s)/(w_k + s) scaled by
    r_k ~ U[0, 1), with corner w_k log-uniform on [1, 100] rad/s, so
    |Delta_k(jw)| = r_k < 1 exactly at every frequency.
    """
    rng = np.random.default_rng(seed)
    numW, denW = W.num.array(), W.den.array()
    numG, denG = G0.num.array(), G0.den.array()
    family = []
    for _ in range(n):
        r = rng.uniform(0.0, 1.0)
        wk = float(np.exp(rng.uniform(np.log(1.0), np.log(100.0))))
        ap_den = np.array([1.0, wk])
        ap_num = r * np.array([-1.0, wk])
        bracket = np.polyadd(np.polymul(ap_den, denW), np.polymul(ap_num, numW))
        num = np.polymul(bracket, numG)
        den = np.polymul(np.polymul(ap_den, denW), denG)
        family.append(tf_new(num, den))
    return family
