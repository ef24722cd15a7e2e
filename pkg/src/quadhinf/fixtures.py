"""Bundled nominal models, weights, controllers and PID gain sets.

These are the reference design constants used by the acceptance suite
and by CLI configs that want to run the synthesis stage on the known
plant/weight pair instead of a freshly identified one.  All transfer
functions are reconstructed from their factored forms.
"""

from __future__ import annotations

import numpy as np

from .hinf import build_tid, build_ws
from .lti import TransferFunction, tf_new

__all__ = [
    "g_pitch",
    "g_roll",
    "w_pitch",
    "w_roll",
    "t_id",
    "ws_weight",
    "c_pitch_published",
    "c_roll_published",
    "c_pitch_reduced_published",
    "c_roll_reduced_published",
    "PID_SIM_PITCH",
    "PID_SIM_ROLL",
    "PID_FLIGHT",
    "A_PITCH",
    "A_ROLL",
    "WU_DEFAULT",
    "by_name",
]

# Outer-loop comparison PID gains used in the simulation study (kp, ki, kd).
PID_SIM_PITCH = (1.01, 10.2, 0.0132)
PID_SIM_ROLL = (1.18, 10.6, 0.0329)
# Gains flown on the real robot for the qualitative comparison.
PID_FLIGHT = (2.6, 0.2, 0.65)

# Tuning scalars of the sensitivity weight per axis, and the effort weight.
A_PITCH = 0.88
A_ROLL = 0.92
WU_DEFAULT = 0.05


def _from_factors(gain: float, factors) -> np.ndarray:
    p = np.array([1.0])
    for f in factors:
        p = np.polymul(p, np.asarray(f, dtype=float))
    return gain * p


def g_pitch() -> TransferFunction:
    """Nominal pitch-axis closed-loop model (3 poles, no zero)."""
    return tf_new([1547.4], _from_factors(1.0, [[1, 5.373], [1, 10.12, 390.4]]))


def g_roll() -> TransferFunction:
    """Nominal roll-axis closed-loop model (3 poles, no zero)."""
    return tf_new([2049.8], _from_factors(1.0, [[1, 6.764], [1, 19.03, 426.2]]))


def w_pitch() -> TransferFunction:
    """Multiplicative-uncertainty weight, pitch axis."""
    return tf_new(_from_factors(1659.6, [[1, 2.868, 60.44]]),
                  _from_factors(1.0, [[1, 2.477e4], [1, 9.678]]))


def w_roll() -> TransferFunction:
    """Multiplicative-uncertainty weight, roll axis."""
    return tf_new(_from_factors(1.9017, [[1, 3.813, 91.61]]), [1, 43.53, 545.3])


def t_id() -> TransferFunction:
    """Ideal closed-loop target (0.3 s / 1e-6 overshoot design pair)."""
    return build_tid(0.3, 1e-6)


def ws_weight(a: float) -> TransferFunction:
    """Sensitivity weight for tuning scalar a on the shared target."""
    return build_ws(t_id(), a)


def c_pitch_published() -> TransferFunction:
    """Published full-order (8-state) pitch controller."""
    num = _from_factors(3.3227e5, [[1, 2.477e4], [1, 461.2], [1, 50.77],
                                   [1, 9.678], [1, 5.373], [1, 10.12, 390.4]])
    den = _from_factors(1.0, [[1, 2.477e4], [1, 1.673e4], [1, 1000],
                              [1, 30.67], [1, 8.082], [1, 0.001],
                              [1, 80.13, 3556]])
    return tf_new(num, den)


def c_roll_published() -> TransferFunction:
    """Published full-order (8-state) roll controller."""
    num = _from_factors(4.3173e6, [[1, 371.5], [1, 59.89], [1, 6.764],
                                   [1, 43.53, 545.3], [1, 19.03, 426.2]])
    den = _from_factors(1.0, [[1, 2.175e5], [1, 1000], [1, 30.67],
                              [1, 27.95], [1, 19.41], [1, 0.001],
                              [1, 80.99, 3749]])
    return tf_new(num, den)


def c_pitch_reduced_published() -> TransferFunction:
    """Published order-reduced (6-state) pitch controller."""
    num = _from_factors(3.3227e5, [[1, 461.5], [1, 45.87], [1, 5.903],
                                   [1, 9.836, 388.1]])
    den = _from_factors(1.0, [[1, 1.673e4], [1, 1000], [1, 25.13],
                              [1, 0.001], [1, 79.66, 3577]])
    return tf_new(num, den)


def c_roll_reduced_published() -> TransferFunction:
    """Published order-reduced (6-state) roll controller."""
    num = _from_factors(4.3173e6, [[1, 371.8], [1, 53.33], [1, 7.035],
                                   [1, 18.34, 428.1]])
    den = _from_factors(1.0, [[1, 2.175e5], [1, 1000], [1, 27.87],
                              [1, 0.001], [1, 80.84, 3820]])
    return tf_new(num, den)


_REGISTRY = {
    "G_pitch": g_pitch,
    "G_roll": g_roll,
    "W_pitch": w_pitch,
    "W_roll": w_roll,
    "T_id": t_id,
    "Ws_pitch": lambda: ws_weight(A_PITCH),
    "Ws_roll": lambda: ws_weight(A_ROLL),
    "C_pitch": c_pitch_published,
    "C_roll": c_roll_published,
    "C_pitch_reduced": c_pitch_reduced_published,
    "C_roll_reduced": c_roll_reduced_published,
}


def by_name(name: str) -> TransferFunction:
    """Look up a bundled transfer function by its registry name."""
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; available: {sorted(_REGISTRY)}")
