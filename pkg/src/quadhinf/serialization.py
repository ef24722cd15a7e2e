"""File formats shared across the toolkit.

CSV layouts:
  time series        t,<ch1>,<ch2>,...
  frequency response omega,re,im
  uncertainty profiles omega,mag_1,...,mag_n
  mu curves          omega,mu
  comparison metrics name,overshoot,settling,recovery,effort_peak

Transfer functions serialize as ``{"num": [...], "den": [...]}`` with
descending coefficients.  All writes are atomic (temp file + rename) and
floats go through repr for bit-faithful round trips.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .lti import FrequencyResponse, StateSpace, TimeSeries, TransferFunction, tf_new

__all__ = [
    "atomic_write_text",
    "write_json",
    "read_json",
    "tf_to_dict",
    "tf_from_dict",
    "ss_to_dict",
    "ss_from_dict",
    "timeseries_to_csv",
    "timeseries_from_csv",
    "freqresponse_to_csv",
    "freqresponse_from_csv",
    "profiles_to_csv",
    "mu_to_csv",
    "metrics_to_csv",
]


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def tf_to_dict(tf: TransferFunction) -> dict:
    return {"num": list(tf.num.coeffs), "den": list(tf.den.coeffs)}


def tf_from_dict(d: dict) -> TransferFunction:
    return tf_new(d["num"], d["den"])


def ss_to_dict(ss: StateSpace) -> dict:
    return {
        "A": ss.A.tolist(),
        "B": ss.B.tolist(),
        "C": ss.C.tolist(),
        "D": ss.D.tolist(),
        "sample_time": ss.sample_time,
    }


def ss_from_dict(d: dict) -> StateSpace:
    return StateSpace(np.array(d["A"]).reshape(len(d["A"]), -1) if d["A"] else np.zeros((0, 0)),
                      d["B"], d["C"], d["D"], d.get("sample_time"))


def _csv(rows) -> str:
    return "\n".join(",".join(row) for row in rows) + "\n"


def timeseries_to_csv(ts: TimeSeries, path) -> None:
    names = list(ts.channels)
    rows = [["t"] + names]
    t = ts.t
    cols = [ts.channels[n] for n in names]
    for i in range(len(ts)):
        rows.append([repr(float(t[i]))] + [repr(float(c[i])) for c in cols])
    atomic_write_text(path, _csv(rows))


def timeseries_from_csv(path) -> TimeSeries:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[0] != "t":
        raise ValueError("first column must be t")
    t = data[:, 0]
    if len(t) < 2:
        raise ValueError("need at least two samples")
    dt = float(t[1] - t[0])
    channels = {name: data[:, j + 1] for j, name in enumerate(header[1:])}
    return TimeSeries(dt, channels)


def freqresponse_to_csv(fr: FrequencyResponse, path) -> None:
    rows = [["omega", "re", "im"]]
    for w, v in zip(fr.omega, fr.values):
        rows.append([repr(float(w)), repr(float(v.real)), repr(float(v.imag))])
    atomic_write_text(path, _csv(rows))


def freqresponse_from_csv(path) -> FrequencyResponse:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return FrequencyResponse(data[:, 0], data[:, 1] + 1j * data[:, 2])


def profiles_to_csv(omega, magnitudes, path) -> None:
    rows = [["omega"] + [f"mag_{i + 1}" for i in range(len(magnitudes))]]
    for j, w in enumerate(omega):
        rows.append([repr(float(w))] + [repr(float(m[j])) for m in magnitudes])
    atomic_write_text(path, _csv(rows))


def mu_to_csv(curve, path) -> None:
    rows = [["omega", "mu"]]
    for w, m in zip(curve.omega, curve.mu):
        rows.append([repr(float(w)), repr(float(m))])
    atomic_write_text(path, _csv(rows))


def metrics_to_csv(table, path) -> None:
    rows = [["name", "overshoot", "settling", "recovery", "effort_peak"]]
    for r in table:
        rows.append([str(r["name"]), repr(float(r["overshoot"])),
                     repr(float(r["settling"])), repr(float(r["recovery"])),
                     repr(float(r["effort_peak"]))])
    atomic_write_text(path, _csv(rows))
