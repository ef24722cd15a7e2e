"""Closed-loop continuous-time identification from chirp experiments.

The pipeline: chirp excitation records -> empirical transfer function
estimate (Welch-averaged cross/auto spectra) -> rational fits over a
grid of pole/zero structures (Sanathanan-Koerner iteration) -> per-record
selection -> nominal model as the log-magnitude median of the selected
set.  Everything is deterministic given the input records.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .errors import (
    DegenerateSignal,
    IllConditioned,
    InsufficientData,
    InvalidConfig,
    NoAdmissibleCandidate,
    ToolboxError,
)
from .lti import (
    FrequencyResponse,
    TimeSeries,
    TransferFunction,
    _zoh,
    standard_grid,
    tf_new,
    to_statespace,
    to_tf,
    zeros as tf_zeros,
)

__all__ = [
    "ChirpConfig",
    "ExperimentRecord",
    "CandidateModel",
    "IdentificationReport",
    "chirp",
    "estimate_delay",
    "coupling_metric",
    "etfe",
    "fit_tf",
    "fit_percent",
    "enumerate_candidates",
    "select_best",
    "select_nominal",
    "identify",
    "STRUCTURES",
]

# (n_poles, n_zeros) grid: poles 2..5, zeros 0..min(n_poles, 3); 15 in total.
STRUCTURES = tuple(
    (n_poles, n_zeros)
    for n_poles in range(2, 6)
    for n_zeros in range(0, min(n_poles, 3) + 1)
)


@dataclass(frozen=True)
class ChirpConfig:
    """Sweep parameters; amplitude in degrees, frequencies in Hz.

    `duration` is the length of one sweep; the excitation repeats it
    `periods` times (periodic chirp), which gives the low end of the
    band energy away from the record boundaries.
    """

    f0: float
    f1: float
    amplitude: float
    duration: float
    fs: float
    periods: int = 1

    def __post_init__(self):
        if not (0.0 < self.f0 < self.f1):
            raise InvalidConfig("need 0 < f0 < f1")
        if not (5.0 <= self.amplitude <= 11.0):
            raise InvalidConfig("amplitude must lie in [5, 11] degrees")
        if self.duration <= 0:
            raise InvalidConfig("duration must be positive")
        if self.fs < 20.0 * self.f1:
            raise InvalidConfig("fs must be at least 20*f1")
        if self.periods < 1:
            raise InvalidConfig("periods must be at least 1")


@dataclass(frozen=True)
class ExperimentRecord:
    """One chirp-tracking run: reference, excited output, coupled output."""

    config: ChirpConfig
    data: TimeSeries

    def __post_init__(self):
        for ch in ("reference", "output", "coupled_output"):
            if ch not in self.data.channels:
                raise InvalidConfig(f"record missing channel {ch!r}")


@dataclass(frozen=True)
class CandidateModel:
    """One fitted structure with its time-domain fit score."""

    model: TransferFunction | None
    n_poles: int
    n_zeros: int
    fit_percent: float


@dataclass(frozen=True)
class IdentificationReport:
    """Full Steps 1-4 output for a set of records."""

    candidates: tuple          # tuple of per-record tuples of CandidateModel
    selected: tuple            # per-record CandidateModel
    nominal: TransferFunction
    nominal_index: int
    pole_real_parts: tuple     # real parts of the selected models' poles


def chirp(config: ChirpConfig) -> TimeSeries:
    """Linear frequency sweep f0 -> f1, amplitude in degrees.

    Instantaneous frequency f0 + (f1-f0)*t/T is nondecreasing within a
    sweep; the sample count is periods*duration*fs.
    """
    n = int(round(config.duration * config.fs))
    t = np.arange(n) / config.fs
    rate = (config.f1 - config.f0) / config.duration
    phase = 2.0 * np.pi * (config.f0 * t + 0.5 * rate * t * t)
    one = config.amplitude * np.sin(phase)
    return TimeSeries(1.0 / config.fs, {"reference": np.tile(one, config.periods)})


def estimate_delay(u, y) -> int:
    """Lag (samples) maximizing the cross-correlation over [0, N/4]."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    if u.size != y.size or u.size < 32:
        raise DegenerateSignal("need equal-length channels of at least 32 samples")
    ud = u - u.mean()
    yd = y - y.mean()
    if np.max(np.abs(ud)) == 0.0 or np.max(np.abs(yd)) == 0.0:
        raise DegenerateSignal("constant channel")
    n = u.size
    c = scipy.signal.correlate(yd, ud, mode="full", method="fft")
    lags = np.arange(-n + 1, n)
    keep = (lags >= 0) & (lags <= n // 4)
    return int(lags[keep][np.argmax(c[keep])])


def coupling_metric(excited, coupled) -> float:
    """RMS of the coupled channel over RMS of the excited one (detrended)."""
    e = np.asarray(excited, dtype=float)
    c = np.asarray(coupled, dtype=float)
    if e.size != c.size or e.size == 0:
        raise DegenerateSignal("channels must have equal nonzero length")
    e = e - e.mean()
    c = c - c.mean()
    rms_e = float(np.sqrt(np.mean(e * e)))
    if rms_e <= 1e-300:
        raise DegenerateSignal("excited channel is constant")
    return float(np.sqrt(np.mean(c * c))) / rms_e


def etfe(record: ExperimentRecord, n_avg: int = 8) -> FrequencyResponse:
    """Empirical transfer estimate cross(ref,out)/auto(ref).

    Hann-windowed Welch averaging with 50 percent overlap over n_avg
    segments; the grid is restricted to the excited band [f0, f1].
    """
    u = record.data["reference"]
    y = record.data["output"]
    n = u.size
    if n_avg < 1:
        raise InsufficientData("n_avg must be at least 1")
    seg = int(2 * n // (n_avg + 1))
    if seg < 64:
        raise InsufficientData("record too short for the requested averaging")
    hop = seg // 2
    win = np.hanning(seg)
    suu = None
    syu = None
    for k in range(n_avg):
        sl = slice(k * hop, k * hop + seg)
        uw = np.fft.rfft(u[sl] * win)
        yw = np.fft.rfft(y[sl] * win)
        suu = np.abs(uw) ** 2 if suu is None else suu + np.abs(uw) ** 2
        syu = yw * np.conj(uw) if syu is None else syu + yw * np.conj(uw)
    freqs = np.fft.rfftfreq(seg, d=record.data.dt)
    band = (freqs >= record.config.f0) & (freqs <= record.config.f1) & (suu > 0)
    if np.count_nonzero(band) < 4:
        raise InsufficientData("excited band contains too few FFT bins")
    h = syu[band] / suu[band]
    return FrequencyResponse(2.0 * np.pi * freqs[band], h)


def _sk_design(ws, h, n_zeros, n_poles, weight):
    """Weighted real-stacked design matrix and rhs for one SK pass."""
    cols = []
    for j in range(n_zeros + 1):
        cols.append((1j * ws) ** (n_zeros - j))
    for k in range(1, n_poles + 1):
        cols.append(-h * (1j * ws) ** (n_poles - k))
    M = np.column_stack(cols) * weight[:, None]
    rhs = h * (1j * ws) ** n_poles * weight
    Mr = np.vstack([M.real, M.imag])
    rr = np.concatenate([rhs.real, rhs.imag])
    return Mr, rr


def fit_tf(fr: FrequencyResponse, n_zeros: int, n_poles: int,
           max_iters: int = 30) -> TransferFunction:
    """Rational fit to frequency data by Sanathanan-Koerner iteration.

    Weighted linear least squares on num(jw) - H(jw)*den(jw), reweighted
    by the previous denominator magnitude until the coefficients settle
    to 1e-8 relative.  Any unstable pole of the result is reflected
    across the imaginary axis (magnitude preserved) and the numerator is
    refit once against the stabilized denominator.
    """
    if n_zeros > n_poles:
        raise InvalidConfig("need n_zeros <= n_poles")
    w = fr.omega
    h = fr.values
    if w.size < 4 * (n_zeros + n_poles + 1):
        raise InsufficientData("grid too small for the requested orders")
    w0 = float(np.sqrt(w[0] * w[-1]))
    ws = w / w0

    weight = np.ones(w.size)
    coef = None
    for _ in range(max_iters):
        Mr, rr = _sk_design(ws, h, n_zeros, n_poles, weight)
        if np.linalg.cond(Mr) > 1e14:
            raise IllConditioned("normal equations numerically singular; change orders")
        sol, *_ = np.linalg.lstsq(Mr, rr, rcond=None)
        den_s = np.concatenate([[1.0], sol[n_zeros + 1:]])
        weight = 1.0 / np.maximum(np.abs(np.polyval(den_s, 1j * ws)), 1e-12)
        if coef is not None:
            delta = np.linalg.norm(sol - coef) / max(np.linalg.norm(sol), 1e-300)
            if delta < 1e-8:
                coef = sol
                break
        coef = sol
    num_s = coef[: n_zeros + 1]
    den_s = np.concatenate([[1.0], coef[n_zeros + 1:]])

    # reflect unstable poles, then refit the numerator on the fixed denominator
    roots = np.roots(den_s)
    if np.any(roots.real > 0):
        roots = np.where(roots.real > 0, -roots.real + 1j * roots.imag, roots)
        den_s = np.real(np.poly(roots))
        denw = np.polyval(den_s, 1j * ws)
        cols = [((1j * ws) ** (n_zeros - j)) / denw for j in range(n_zeros + 1)]
        M = np.column_stack(cols) * weight[:, None]
        rhs = h * weight
        Mr = np.vstack([M.real, M.imag])
        rr = np.concatenate([rhs.real, rhs.imag])
        num_s, *_ = np.linalg.lstsq(Mr, rr, rcond=None)

    num = num_s * w0 ** (n_poles - n_zeros + np.arange(n_zeros + 1))
    den = den_s * w0 ** np.arange(n_poles + 1)
    return tf_new(num, den)


def simulate_linear(model: TransferFunction, u: np.ndarray, dt: float) -> np.ndarray:
    """Response of a proper model to an arbitrary input, ZOH-discretized."""
    ss = to_statespace(model)
    if ss.n_states == 0:
        return float(ss.D[0, 0]) * np.asarray(u, dtype=float)
    Ad, Bd = _zoh(ss.A, ss.B, dt)
    dss = to_tf(type(ss)(Ad, Bd, ss.C, ss.D, sample_time=dt))
    b = dss.num.array()
    a = dss.den.array()
    b = np.concatenate([np.zeros(len(a) - len(b)), b])
    return scipy.signal.lfilter(b, a, np.asarray(u, dtype=float))


def fit_percent(model: TransferFunction, record: ExperimentRecord) -> float:
    """Normalized time-domain fit 100*(1 - ||y - yhat|| / ||y - mean(y)||)."""
    y = record.data["output"]
    if y.size == 0:
        raise DegenerateSignal("empty record")
    spread = float(np.linalg.norm(y - y.mean()))
    if spread <= 1e-300:
        raise DegenerateSignal("output channel is constant")
    yhat = simulate_linear(model, record.data["reference"], record.data.dt)
    return 100.0 * (1.0 - float(np.linalg.norm(y - yhat)) / spread)


def enumerate_candidates(record: ExperimentRecord, n_avg: int = 8) -> list:
    """Fit all 15 pole/zero structures against the record's ETFE."""
    fr = etfe(record, n_avg=n_avg)
    out = []
    for n_poles, n_zeros in STRUCTURES:
        try:
            model = fit_tf(fr, n_zeros, n_poles)
            fit = fit_percent(model, record)
        except ToolboxError:
            model, fit = None, float("-inf")
        out.append(CandidateModel(model=model, n_poles=n_poles,
                                  n_zeros=n_zeros, fit_percent=fit))
    return out


def _has_rhp_zero(model: TransferFunction) -> bool:
    if model.num.degree == 0:
        return False
    return bool(np.any(tf_zeros(model).real > 1e-9))


def select_best(candidates) -> CandidateModel:
    """Selection rules: no RHP zeros, fit within 5 points of the best,
    then lowest total order, ties broken by highest fit."""
    admissible = [c for c in candidates
                  if c.model is not None and not _has_rhp_zero(c.model)]
    if not admissible:
        raise NoAdmissibleCandidate("all candidates failed or have RHP zeros")
    best_fit = max(c.fit_percent for c in admissible)
    window = [c for c in admissible if c.fit_percent >= best_fit - 5.0]
    return min(window, key=lambda c: (c.n_poles + c.n_zeros, -c.fit_percent))


def select_nominal(models) -> tuple:
    """Index and model nearest the log-magnitude median of the set.

    d(i) = sum_k || log|G_i| - log|G_k| ||_2 over the standard grid; the
    argmin wins, ties broken by lower index.  Phase is ignored.
    """
    models = list(models)
    if len(models) < 2:
        raise InvalidConfig("need at least two models for a median")
    grid = standard_grid()
    logmags = []
    for m in models:
        s = 1j * grid
        mag = np.abs(np.polyval(m.num.array(), s) / np.polyval(m.den.array(), s))
        logmags.append(np.log10(np.maximum(mag, 1e-300)))
    logmags = np.array(logmags)
    d = np.array([
        sum(np.linalg.norm(logmags[i] - logmags[k]) for k in range(len(models)))
        for i in range(len(models))
    ])
    idx = int(np.argmin(d))
    return idx, models[idx]


def identify(records, n_avg: int = 8) -> IdentificationReport:
    """Steps 1-4: candidates, per-record selection, nominal model."""
    if len(records) < 2:
        raise InvalidConfig("need at least two records")
    all_candidates = tuple(tuple(enumerate_candidates(r, n_avg=n_avg)) for r in records)
    selected = tuple(select_best(c) for c in all_candidates)
    idx, nominal = select_nominal([s.model for s in selected])
    reals = []
    for s in selected:
        reals.extend(np.real(s.model.den.roots()).tolist())
    return IdentificationReport(
        candidates=all_candidates,
        selected=selected,
        nominal=nominal,
        nominal_index=idx,
        pole_real_parts=tuple(reals),
    )
