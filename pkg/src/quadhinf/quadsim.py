"""Nonlinear quadrotor attitude simulator and cascade control runs.

The rigid-body model keeps the full gyroscopic terms (body and
propeller) plus a first-order rotor-speed lag T1/(s+T2) per motor.
Attitude is controlled by per-axis inner loops (integral on the angle
error, proportional and derivative on the measured angle, which keeps
the closed loop free of setpoint-kick zeros) commanding angular
accelerations that a mixer converts into the four rotor-speed commands.
An outer discrete controller running at 1 kHz closes the cascade for
simulation studies; chirp-tracking runs generate identification
records.  Angles are radians internally; experiment records are stored
in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    Diverged,
    InfeasibleAllocation,
    InvalidConfig,
    NonFiniteState,
)
from .lti import StateSpace, TimeSeries, TransferFunction, step_metrics, to_statespace
from .sysid import ChirpConfig, ExperimentRecord, chirp

__all__ = [
    "QuadrotorParams",
    "AttitudeState",
    "PidGains",
    "Scenario",
    "default_params",
    "inner_gains_from_target",
    "quad_dynamics",
    "mixer",
    "pid_step",
    "cascade_sim",
    "synth_experiment",
    "run_comparison",
    "CONTROL_PERIOD",
]

# Outer-loop controller period (the flight firmware runs it at 1 kHz).
CONTROL_PERIOD = 1e-3

_DEG = math.pi / 180.0


@dataclass(frozen=True)
class QuadrotorParams:
    """Physical constants; defaults match a 570 g, 38 cm-span airframe.

    `u_max` bounds the rotor-speed commands so the 850 g total-thrust
    budget puts hover at about 67 percent; `hover_speed` is the per-rotor
    trim speed for that mass.
    """

    Ixx: float = 0.0023
    Iyy: float = 0.0025
    Izz: float = 0.0042
    Jr: float = 3.0e-5
    b: float = 8.5e-7
    d: float = 1.2e-8
    l: float = 0.12
    T1: float = 200.0
    T2: float = 200.0
    mass: float = 0.570
    u_max: float = 1566.0
    hover_speed: float = 1282.4

    def __post_init__(self):
        for name in ("Ixx", "Iyy", "Izz", "Jr", "b", "d", "l", "T1", "T2",
                     "mass", "u_max", "hover_speed"):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be strictly positive")
        ratio = self.Ixx / self.Iyy
        if not (0.8 <= ratio <= 1.25):
            raise InvalidConfig("Ixx and Iyy must agree within 20 percent")


def default_params() -> QuadrotorParams:
    return QuadrotorParams()


@dataclass(frozen=True)
class AttitudeState:
    """Attitude, body rates and the four rotor speeds."""

    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    phi_dot: float = 0.0
    theta_dot: float = 0.0
    psi_dot: float = 0.0
    omega_rotors: tuple = (0.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.theta, self.psi,
                         self.phi_dot, self.theta_dot, self.psi_dot,
                         *self.omega_rotors], dtype=float)


@dataclass(frozen=True)
class PidGains:
    """PID gains plus the derivative-filter pole N (rad/s)."""

    kp: float
    ki: float
    kd: float
    N: float = 400.0

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0 or self.kd < 0 or self.N <= 0:
            raise InvalidConfig("gains must be nonnegative and N positive")


def inner_gains_from_target(target: TransferFunction, N: float = 400.0) -> PidGains:
    """Inner-loop gains placing the ideal loop poles at a 3-pole target.

    For the acceleration-commanded double integrator the closed loop is
    ki / (s^3 + kd s^2 + kp s + ki), so the gains are read off the
    target's monic denominator.
    """
    den = target.den.array()
    if len(den) != 4 or target.num.degree != 0:
        raise InvalidConfig("target must have three poles and no zero")
    return PidGains(kp=float(den[2]), ki=float(den[3]), kd=float(den[1]), N=N)


def quad_dynamics(state, motor_commands, params: QuadrotorParams) -> np.ndarray:
    """Right-hand side of the attitude/rotor ODE.

    State layout: [phi, theta, psi, phi_dot, theta_dot, psi_dot,
    omega_1..omega_4]; motor_commands are rotor-speed commands feeding
    the first-order lag T1/(s+T2).
    """
    x = state.as_array() if isinstance(state, AttitudeState) else np.asarray(state, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("state contains NaN or infinity")
    u = np.asarray(motor_commands, dtype=float)
    p, q, r = x[3], x[4], x[5]
    w1, w2, w3, w4 = x[6], x[7], x[8], x[9]
    wr = w1 + w3 - w2 - w4
    bl = params.b * params.l
    phi_dd = (params.Jr * q * wr
              + (params.Iyy - params.Izz) * r * q
              + bl * (w2 * w2 - w4 * w4)) / params.Ixx
    theta_dd = (-params.Jr * p * wr
                + (params.Izz - params.Ixx) * r * p
                + bl * (w3 * w3 - w1 * w1)) / params.Iyy
    psi_dd = (params.d * (w1 * w1 + w3 * w3 - w2 * w2 - w4 * w4)
              + (params.Ixx - params.Iyy) * q * p) / params.Izz
    dx = np.empty(10)
    dx[0:3] = (p, q, r)
    dx[3:6] = (phi_dd, theta_dd, psi_dd)
    dx[6:10] = params.T1 * u - params.T2 * x[6:10]
    return dx


def mixer(U1: float, U2: float, U3: float, thrust_bias: float,
          u_max: float | None = None):
    """Invert the command-square map onto the four rotor commands.

    Solves u4^2-u2^2 = U1, u3^2-u1^2 = U2, u1^2+u3^2-u2^2-u4^2 = U3 with
    the total bias sum(u_i^2) = 4*thrust_bias^2; commands are clipped to
    [0, u_max] and the clipping is flagged.
    """
    t2 = thrust_bias * thrust_bias
    a = np.array([
        t2 + 0.25 * U3 - 0.5 * U2,
        t2 - 0.25 * U3 - 0.5 * U1,
        t2 + 0.25 * U3 + 0.5 * U2,
        t2 - 0.25 * U3 + 0.5 * U1,
    ])
    if np.any(a < 0):
        raise InfeasibleAllocation("requested torques need negative squared speed")
    u = np.sqrt(a)
    clipped = False
    if u_max is not None:
        hi = u > u_max
        if np.any(hi):
            clipped = True
            u = np.minimum(u, u_max)
    return u, clipped


def pid_step(gains: PidGains, error: float, integrator_state: float,
             filtered_derivative_state: float, dt: float,
             sat_excess: float = 0.0):
    """One discrete PID update on an error sample.

    Derivative acts on the error through a first-order filter with pole
    N.  `sat_excess` (realized minus requested output from the previous
    step) bleeds the integrator by back-calculation when the actuator
    clipped.
    """
    if dt <= 0:
        raise InvalidConfig("dt must be positive")
    integ = integrator_state + dt * error
    if gains.ki > 0.0 and sat_excess != 0.0:
        integ += sat_excess / gains.ki
    alpha = math.exp(-gains.N * dt)
    fd = alpha * filtered_derivative_state + (1.0 - alpha) * error
    deriv = gains.N * (error - fd)
    u = gains.kp * error + gains.ki * integ + gains.kd * deriv
    return u, integ, fd


class _AnglePid:
    """Inner attitude loop: I on error, P and D on the measured angle."""

    def __init__(self, gains: PidGains):
        self.g = gains
        self.integ = 0.0
        self.fd = 0.0
        self.sat_excess = 0.0

    def step(self, ref: float, meas: float, dt: float) -> float:
        g = self.g
        self.integ += dt * (ref - meas)
        if g.ki > 0.0 and self.sat_excess != 0.0:
            self.integ += self.sat_excess / g.ki
            self.sat_excess = 0.0
        alpha = math.exp(-g.N * dt)
        fd_new = alpha * self.fd + (1.0 - alpha) * meas
        deriv = g.N * (meas - fd_new)
        self.fd = fd_new
        return g.ki * self.integ - g.kp * meas - g.kd * deriv

    def report_saturation(self, realized: float, requested: float):
        self.sat_excess = realized - requested


class _DiscreteOuter:
    """ZOH stepping of a discrete state-space outer controller."""

    def __init__(self, ss: StateSpace):
        if ss.sample_time is None or abs(ss.sample_time - CONTROL_PERIOD) > 1e-12:
            raise InvalidConfig("outer controller must be discrete at 1 kHz")
        self.ss = ss
        self.x = np.zeros(ss.n_states)

    def step(self, e: float) -> float:
        ss = self.ss
        y = float(ss.C @ self.x + ss.D[0, 0] * e)
        self.x = ss.A @ self.x + ss.B[:, 0] * e
        return y


class _PidOuter:
    """Discrete PID (error in, command out) in the outer slot."""

    def __init__(self, gains: PidGains):
        self.g = gains
        self.integ = 0.0
        self.fd = 0.0

    def step(self, e: float) -> float:
        u, self.integ, self.fd = pid_step(self.g, e, self.integ, self.fd,
                                          CONTROL_PERIOD)
        return u


def _make_outer(outer):
    if isinstance(outer, StateSpace):
        return _DiscreteOuter(outer)
    if isinstance(outer, PidGains):
        return _PidOuter(outer)
    raise InvalidConfig("outer controller must be a discrete StateSpace or PidGains")


@dataclass(frozen=True)
class Scenario:
    """One simulation case: reference, disturbance, noise, timing."""

    duration: float = 2.0
    dt: float = 1e-3
    step_amplitude: float = 1.0
    step_time: float = 0.0
    disturbance_amplitude: float = 0.0
    disturbance_start: float = 0.0
    disturbance_duration: float = 0.0
    disturbance_at_output: bool = False
    noise_bound: float = 0.0
    seed: int = 0
    axis: str = "pitch"

    def __post_init__(self):
        if self.dt <= 0 or self.duration <= 0:
            raise InvalidConfig("dt and duration must be positive")
        k = CONTROL_PERIOD / self.dt
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise InvalidConfig("dt must divide the 1 ms controller period")
        if self.axis not in ("pitch", "roll"):
            raise InvalidConfig("axis must be pitch or roll")

    def reference(self, t: float) -> float:
        return self.step_amplitude if t >= self.step_time else 0.0

    def disturbance(self, t: float) -> float:
        if self.disturbance_amplitude == 0.0:
            return 0.0
        if self.disturbance_start <= t < self.disturbance_start + self.disturbance_duration:
            return self.disturbance_amplitude
        return 0.0


def _rk4(x, dt, deriv):
    k1 = deriv(x)
    k2 = deriv(x + 0.5 * dt * k1)
    k3 = deriv(x + 0.5 * dt * k2)
    k4 = deriv(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _axis_allocation(params: QuadrotorParams, alpha_phi, alpha_theta, alpha_psi):
    """Angular accelerations to mixer inputs (command-square units).

    Rotor numbering makes the roll axis respond to (w2^2 - w4^2) while
    the mixer's first input is u4^2 - u2^2, hence the sign flip.
    """
    bl = params.b * params.l
    U1 = -alpha_phi * params.Ixx / bl
    U2 = alpha_theta * params.Iyy / bl
    U3 = alpha_psi * params.Izz / params.d
    return U1, U2, U3


_YAW_GAINS = PidGains(kp=25.0, ki=0.0, kd=10.0, N=400.0)


def _quad_consts(p: QuadrotorParams) -> tuple:
    return (p.b * p.l / p.Ixx, p.b * p.l / p.Iyy, p.Jr / p.Ixx, p.Jr / p.Iyy,
            (p.Iyy - p.Izz) / p.Ixx, (p.Izz - p.Ixx) / p.Iyy,
            (p.Ixx - p.Iyy) / p.Izz, p.d / p.Izz, p.T1, p.T2)


def _rk4_quad(x, u, dt: float, consts: tuple):
    """Inlined scalar RK4 step of the quadrotor ODE (hot path).

    Takes and returns a plain 10-tuple; all arithmetic stays on Python
    floats to keep the per-step cost low.
    """
    bl_x, bl_y, jr_x, jr_y, iyz, izx, ixy, d_z, T1, T2 = consts
    c1, c2, c3, c4 = T1 * u[0], T1 * u[1], T1 * u[2], T1 * u[3]

    def f(s):
        pr, qr, rr = s[3], s[4], s[5]
        w1, w2, w3, w4 = s[6], s[7], s[8], s[9]
        wr = w1 + w3 - w2 - w4
        return (
            pr, qr, rr,
            jr_x * qr * wr + iyz * rr * qr + bl_x * (w2 * w2 - w4 * w4),
            -jr_y * pr * wr + izx * rr * pr + bl_y * (w3 * w3 - w1 * w1),
            d_z * (w1 * w1 + w3 * w3 - w2 * w2 - w4 * w4) + ixy * qr * pr,
            c1 - T2 * w1, c2 - T2 * w2, c3 - T2 * w3, c4 - T2 * w4,
        )

    h2 = 0.5 * dt
    k1 = f(x)
    k2 = f(tuple(x[i] + h2 * k1[i] for i in range(10)))
    k3 = f(tuple(x[i] + h2 * k2[i] for i in range(10)))
    k4 = f(tuple(x[i] + dt * k3[i] for i in range(10)))
    w = dt / 6.0
    return tuple(x[i] + w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) for i in range(10))


class _NonlinearPlant:
    """Quadrotor with per-axis inner loops; input is the commanded angle."""

    def __init__(self, params: QuadrotorParams, inner: PidGains, axis: str):
        self.p = params
        self.axis = axis
        h = params.hover_speed
        self.x = (0.0,) * 6 + (h, h, h, h)
        self.loops = {
            "roll": _AnglePid(inner),
            "pitch": _AnglePid(inner),
            "yaw": _AnglePid(_YAW_GAINS),
        }
        self.cmds = (h, h, h, h)
        self._consts = _quad_consts(params)

    def measure(self, noise3) -> tuple:
        return (self.x[0] + noise3[0], self.x[1] + noise3[1], self.x[2] + noise3[2])

    def output(self) -> float:
        return self.x[1] if self.axis == "pitch" else self.x[0]

    def coupled_output(self) -> float:
        return self.x[0] if self.axis == "pitch" else self.x[1]

    def control(self, angle_cmd: float, meas: tuple, dt_ctrl: float,
                accel_disturbance: float = 0.0):
        p = self.p
        refs = {"roll": 0.0, "pitch": 0.0, "yaw": 0.0}
        refs[self.axis] = angle_cmd
        a_phi = self.loops["roll"].step(refs["roll"], meas[0], dt_ctrl)
        a_theta = self.loops["pitch"].step(refs["pitch"], meas[1], dt_ctrl)
        a_psi = self.loops["yaw"].step(refs["yaw"], meas[2], dt_ctrl)
        if self.axis == "pitch":
            a_theta += accel_disturbance
        else:
            a_phi += accel_disturbance
        U1, U2, U3 = _axis_allocation(p, a_phi, a_theta, a_psi)
        t2 = p.hover_speed * p.hover_speed
        a1 = t2 + 0.25 * U3 - 0.5 * U2
        a2 = t2 - 0.25 * U3 - 0.5 * U1
        a3 = t2 + 0.25 * U3 + 0.5 * U2
        a4 = t2 - 0.25 * U3 + 0.5 * U1
        lo = min(a1, a2, a3, a4)
        clipped = False
        if lo < 0.0:
            # saturate the request onto the feasible boundary instead of dying
            clipped = True
            shrink = 0.999 * t2 / (t2 - lo)
            U1 *= shrink
            U2 *= shrink
            U3 *= shrink
            a1 = t2 + 0.25 * U3 - 0.5 * U2
            a2 = t2 - 0.25 * U3 - 0.5 * U1
            a3 = t2 + 0.25 * U3 + 0.5 * U2
            a4 = t2 - 0.25 * U3 + 0.5 * U1
        um = p.u_max
        u1 = min(math.sqrt(a1), um)
        u2 = min(math.sqrt(a2), um)
        u3 = min(math.sqrt(a3), um)
        u4 = min(math.sqrt(a4), um)
        if max(a1, a2, a3, a4) > um * um:
            clipped = True
        self.cmds = (u1, u2, u3, u4)
        if clipped:
            # realized accelerations after clipping, for back-calculation
            bl = p.b * p.l
            real_phi = bl * (u2 * u2 - u4 * u4) / p.Ixx
            real_theta = bl * (u3 * u3 - u1 * u1) / p.Iyy
            self.loops["roll"].report_saturation(real_phi, a_phi)
            self.loops["pitch"].report_saturation(real_theta, a_theta)
        return a_theta if self.axis == "pitch" else a_phi

    def advance(self, dt: float):
        self.x = _rk4_quad(self.x, self.cmds, dt, self._consts)
        if not (abs(self.x[0]) < 1e6):
            raise NonFiniteState("simulation state blew up")


class _LinearPlant:
    """Identified closed-inner-loop model; input is the commanded angle."""

    def __init__(self, tf: TransferFunction):
        ss = to_statespace(tf)
        self.A, self.B, self.C, self.D = ss.A, ss.B[:, 0], ss.C[0], float(ss.D[0, 0])
        self.x = np.zeros(ss.n_states)
        self.u = 0.0

    def measure(self, noise3):
        return (self.output() + noise3[1],) * 3

    def output(self) -> float:
        return float(self.C @ self.x + self.D * self.u)

    def coupled_output(self) -> float:
        return 0.0

    def control(self, angle_cmd, meas, dt_ctrl, accel_disturbance=0.0):
        self.u = angle_cmd
        return angle_cmd

    def advance(self, dt: float):
        A, B, u = self.A, self.B, self.u
        self.x = _rk4(self.x, dt, lambda s: A @ s + B * u)


def cascade_sim(outer, inner: PidGains, plant, scenario: Scenario) -> TimeSeries:
    """Outer controller at 1 kHz over the inner-loop plant.

    `plant` is either QuadrotorParams (full nonlinear model closed by
    the inner loops) or the identified TransferFunction of that closed
    loop.  The disturbance enters at the plant input (commanded-angle
    units) unless `disturbance_at_output` is set; uniform measurement
    noise corrupts the angle before both controllers.
    """
    ctrl = _make_outer(outer)
    if isinstance(plant, TransferFunction):
        sim = _LinearPlant(plant)
    elif isinstance(plant, QuadrotorParams):
        sim = _NonlinearPlant(plant, inner, scenario.axis)
    else:
        raise InvalidConfig("plant must be a TransferFunction or QuadrotorParams")
    rng = np.random.default_rng(scenario.seed)
    dt = scenario.dt
    k_ctrl = int(round(CONTROL_PERIOD / dt))
    n = int(round(scenario.duration / dt))
    log = {name: np.zeros(n + 1) for name in
           ("reference", "angle", "inner_u", "outer_u", "disturbance")}
    u_outer = 0.0
    inner_u = 0.0
    d_in = 0.0
    for k in range(n + 1):
        t = k * dt
        y_true = sim.output()
        d_out = scenario.disturbance(t) if scenario.disturbance_at_output else 0.0
        if k % k_ctrl == 0:
            if abs(y_true) > math.pi / 2:
                raise Diverged(f"attitude left the envelope at t={t:.3f}")
            noise3 = (rng.uniform(-scenario.noise_bound, scenario.noise_bound, 3)
                      if scenario.noise_bound > 0 else np.zeros(3))
            meas = sim.measure(noise3)
            y_meas = (meas[1] if scenario.axis == "pitch" else meas[0]) + d_out
            ref = scenario.reference(t)
            u_outer = ctrl.step(ref - y_meas)
            d_in = 0.0 if scenario.disturbance_at_output else scenario.disturbance(t)
            inner_u = sim.control(u_outer + d_in, meas, CONTROL_PERIOD)
        log["reference"][k] = scenario.reference(t)
        log["angle"][k] = y_true + d_out
        log["inner_u"][k] = inner_u
        log["outer_u"][k] = u_outer
        log["disturbance"][k] = scenario.disturbance(t)
        if k < n:
            sim.advance(dt)
    return TimeSeries(dt, log)


def synth_experiment(params: QuadrotorParams, inner: PidGains,
                     chirp_cfg: ChirpConfig, noise_bound: float, seed: int,
                     axis: str = "pitch") -> ExperimentRecord:
    """Closed-loop chirp tracking on the nonlinear model.

    The excited axis tracks the chirp through its inner loop while the
    other axes regulate to zero; the record stores the measured (noisy)
    angles in degrees, mirroring real telemetry.
    """
    if not (0.05 - 1e-12 <= chirp_cfg.f0 and chirp_cfg.f1 <= 5.0 + 1e-12):
        raise InvalidConfig("chirp band must stay within [0.05, 5] Hz")
    ref_deg = chirp(chirp_cfg)["reference"]
    dt = 1.0 / chirp_cfg.fs
    sim = _NonlinearPlant(params, inner, axis)
    rng = np.random.default_rng(seed)
    n = ref_deg.size
    out = np.zeros(n)
    coupled = np.zeros(n)
    noise = (rng.uniform(-noise_bound, noise_bound, (n, 3))
             if noise_bound > 0 else np.zeros((n, 3)))
    for k in range(n):
        noise3 = noise[k]
        meas = sim.measure(noise3)
        sim.control(ref_deg[k] * _DEG, meas, dt)
        if abs(sim.output()) > math.pi / 2:
            raise Diverged(f"attitude left the envelope at sample {k}")
        excited = meas[1] if axis == "pitch" else meas[0]
        other = meas[0] if axis == "pitch" else meas[1]
        out[k] = excited / _DEG
        coupled[k] = other / _DEG
        sim.advance(dt)
    data = TimeSeries(dt, {"reference": ref_deg, "output": out,
                           "coupled_output": coupled})
    return ExperimentRecord(chirp_cfg, data)


def _recovery_time(ts: TimeSeries, scenario: Scenario) -> float:
    """Time from disturbance onset until the response stays in the band."""
    if scenario.disturbance_amplitude == 0.0:
        return 0.0
    y = ts["angle"]
    ref = ts["reference"]
    band = 0.02 * max(abs(scenario.step_amplitude), 1e-12)
    t = ts.t
    start = scenario.disturbance_start
    k0 = int(np.searchsorted(t, start))
    dev = np.abs(y - ref)
    outside = np.flatnonzero(dev[k0:] > band)
    if outside.size == 0:
        return 0.0
    return float(t[k0 + outside[-1]] + ts.dt - start)


def run_comparison(controllers, scenario: Scenario, plant,
                   inner: PidGains | None = None) -> list:
    """Per-controller step metrics, disturbance recovery and effort peak.

    `controllers` is a list of (name, outer) pairs where outer is a
    discrete StateSpace or PidGains.  Deterministic given the scenario
    seed.
    """
    rows = []
    for name, outer in controllers:
        ts = cascade_sim(outer, inner, plant, scenario)
        t = ts.t
        keep = t >= scenario.step_time
        rebased = TimeSeries(ts.dt, {"y": ts["angle"][keep]})
        m = step_metrics(rebased)
        rows.append({
            "name": str(name),
            "overshoot": m.overshoot,
            "settling": m.settling_time,
            "recovery": _recovery_time(ts, scenario),
            "effort_peak": float(np.max(np.abs(ts["outer_u"]))),
            "timeseries": ts,
        })
    return rows
