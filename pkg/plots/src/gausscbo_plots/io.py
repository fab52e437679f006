"""Readers for the benchmark harness file formats.

Formats (produced by the `gausscbo` harness, consumed here bit-exactly):

  - summary JSON: {"methods": {name: {"time": [...], "median": [...],
    "q25": [...], "q75": [...]}}, ...}
  - sweep summary JSON: {"sweep_param": str, "values": [...],
    "panels": {str(value): curve-dict as above}, ...}
  - finals JSON: {label: {"mean": [...], "cov": [[...], ...]}, ...}
  - target file: flat key=value lines ('#' comments) with keys
    d, K, weights, mean_1..mean_K, cov_1..cov_K (covs row-major).
  - run CSV: header "step,time,..." with a kl column per method.

Every reader raises SchemaError on any deviation, so the CLI can reject
malformed or mismatched inputs with a nonzero exit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SchemaError(Exception):
    """Input file missing, malformed, or not matching the harness schemas."""


CURVE_KEYS = ("time", "median", "q25", "q75")


def _read_json(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"input file {p} does not exist")
    try:
        data = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{p}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{p}: expected a JSON object at top level")
    return data


def _check_curve(obj, where: str) -> dict[str, np.ndarray]:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object with keys {CURVE_KEYS}")
    out = {}
    for key in CURVE_KEYS:
        if key not in obj:
            raise SchemaError(f"{where}: missing key {key!r}")
        try:
            arr = np.asarray(obj[key], dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}.{key}: not a numeric array") from exc
        if arr.ndim != 1 or arr.size == 0:
            raise SchemaError(f"{where}.{key}: expected a non-empty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise SchemaError(f"{where}.{key}: contains non-finite values")
        out[key] = arr
    n = out["time"].size
    for key in CURVE_KEYS[1:]:
        if out[key].size != n:
            raise SchemaError(
                f"{where}: length mismatch, time has {n} entries, "
                f"{key} has {out[key].size}")
    return out


def load_summary(path) -> dict[str, dict[str, np.ndarray]]:
    """Multi-seed summary: one median/q25/q75 curve per method."""
    data = _read_json(path)
    methods = data.get("methods")
    if not isinstance(methods, dict) or not methods:
        raise SchemaError(f"{path}: missing or empty 'methods' object")
    return {name: _check_curve(curve, f"{path}: methods.{name}")
            for name, curve in methods.items()}


def load_sweep_summary(path) -> tuple[str, list[str], dict[str, dict[str, np.ndarray]]]:
    """Sensitivity sweep: (parameter name, ordered values, curve per value)."""
    data = _read_json(path)
    param = data.get("sweep_param")
    values = data.get("values")
    panels = data.get("panels")
    if not isinstance(param, str) or not param:
        raise SchemaError(f"{path}: missing 'sweep_param'")
    if not isinstance(values, list) or not values:
        raise SchemaError(f"{path}: missing or empty 'values'")
    if not isinstance(panels, dict) or not panels:
        raise SchemaError(f"{path}: missing or empty 'panels'")
    keys = [str(v) for v in values]
    curves = {}
    for key in keys:
        if key not in panels:
            raise SchemaError(f"{path}: panels missing entry for value {key!r}")
        curves[key] = _check_curve(panels[key], f"{path}: panels.{key}")
    return param, keys, curves


@dataclass(frozen=True)
class FinalGaussian:
    label: str
    mean: np.ndarray
    cov: np.ndarray


def load_finals(path) -> list[FinalGaussian]:
    """Final Gaussians keyed by label (e.g. 'cbo_seed0'), sorted by label."""
    data = _read_json(path)
    if not data:
        raise SchemaError(f"{path}: empty finals file")
    out = []
    for label in sorted(data):
        entry = data[label]
        if not isinstance(entry, dict) or "mean" not in entry or "cov" not in entry:
            raise SchemaError(f"{path}: entry {label!r} missing 'mean'/'cov'")
        try:
            mean = np.asarray(entry["mean"], dtype=float)
            cov = np.asarray(entry["cov"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: entry {label!r} not numeric") from exc
        if mean.ndim != 1:
            raise SchemaError(f"{path}: entry {label!r}: mean must be a vector")
        d = mean.size
        if cov.shape != (d, d):
            raise SchemaError(
                f"{path}: entry {label!r}: cov shape {cov.shape} does not "
                f"match mean dimension {d}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise SchemaError(f"{path}: entry {label!r} contains non-finite values")
        out.append(FinalGaussian(label, mean, cov))
    return out


@dataclass(frozen=True)
class MixtureTarget:
    """Gaussian mixture read back from a harness target file."""
    weights: np.ndarray   # (K,)
    means: np.ndarray     # (K, d)
    covs: np.ndarray      # (K, d, d)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        """Mixture log-density at points x of shape (..., d)."""
        x = np.asarray(x, dtype=float)
        d = self.dim
        comps = []
        for w, m, c in zip(self.weights, self.means, self.covs):
            sign, logdet = np.linalg.slogdet(c)
            if sign <= 0:
                raise SchemaError("target component covariance is not positive definite")
            dev = x - m
            maha = np.einsum("...i,ij,...j->...", dev, np.linalg.inv(c), dev)
            comps.append(np.log(w) - 0.5 * (d * np.log(2 * np.pi) + logdet + maha))
        stacked = np.stack(comps, axis=-1)
        peak = stacked.max(axis=-1)
        return peak + np.log(np.exp(stacked - peak[..., None]).sum(axis=-1))


def _parse_kv(text: str, where: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{where}, line {lineno}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def load_target(path) -> MixtureTarget:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"input file {p} does not exist")
    kv = _parse_kv(p.read_text(), str(p))
    try:
        d = int(kv["d"])
        k = int(kv["K"])
        weights = np.array([float(v) for v in kv["weights"].split(",")])
        means = np.array([[float(v) for v in kv[f"mean_{i + 1}"].split(",")]
                          for i in range(k)])
        covs = np.array([[float(v) for v in kv[f"cov_{i + 1}"].split(",")]
                         for i in range(k)]).reshape(k, d, d)
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"{p}: malformed target file ({exc})") from exc
    if weights.shape != (k,) or means.shape != (k, d):
        raise SchemaError(f"{p}: inconsistent shapes for K={k}, d={d}")
    if np.any(weights <= 0) or not np.isclose(weights.sum(), 1.0, atol=1e-8):
        raise SchemaError(f"{p}: weights must be positive and sum to 1")
    return MixtureTarget(weights=weights, means=means, covs=covs)


def load_run_csv(path) -> tuple[list[str], np.ndarray]:
    """Run trajectory CSV -> (column names, float data array)."""
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"input file {p} does not exist")
    lines = p.read_text().splitlines()
    if len(lines) < 2:
        raise SchemaError(f"{p}: need a header line and at least one data row")
    cols = lines[0].split(",")
    if cols[:2] != ["step", "time"]:
        raise SchemaError(f"{p}: header must start with 'step,time'")
    try:
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    except ValueError as exc:
        raise SchemaError(f"{p}: non-numeric data row ({exc})") from exc
    if data.shape[1] != len(cols):
        raise SchemaError(f"{p}: row width does not match header")
    return cols, data
