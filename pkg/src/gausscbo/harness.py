"""Reproducible experiment runner.

Target presets A-D, random high-dimensional mixture generation, multi-seed
orchestration for the CBO optimizer and the gradient-flow baseline, relative
KL aggregation, and CSV/JSON emission.

File contracts (consumed by the plotting package, keep stable):
  - CBO run CSV header: step,time,kl_consensus,kl_best_particle,ensemble_variance,frozen_count
  - GF run CSV header:  step,time,kl
  - summary JSON: {"config": ..., "methods": {name: {"time": [], "median": [],
    "q25": [], "q75": []}}, "seeds": [], "wall_clock": ...}
  - target files / config files: flat key=value lines, '#' comments.
"""

from __future__ import annotations

import hashlib
import json
import math
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from .bw import GaussianMeasure
from .cbo import CboParams, run_cbo
from .errors import ConfigError
from .gf import run_gf
from .objectives import ObjectiveSpec, TargetModel
from .matrices import symmetrize

CBO_CSV_HEADER = "step,time,kl_consensus,kl_best_particle,ensemble_variance,frozen_count"
GF_CSV_HEADER = "step,time,kl"

PRESETS: dict[str, TargetModel] = {
    "A": TargetModel(
        weights=[0.5, 0.5],
        means=[[-2.2, 0.0], [2.2, 0.0]],
        covs=[[[1.0, 0.2], [0.2, 0.6]], [[1.0, -0.2], [-0.2, 0.6]]],
    ),
    "B": TargetModel(
        weights=[0.5, 0.5],
        means=[[-1.77, 1.06], [-0.35, -0.35]],
        covs=[[[1.25, -0.25], [-0.25, 1.25]], [[2.50, -1.50], [-1.50, 2.50]]],
    ),
    "C": TargetModel(
        weights=[0.25, 0.30, 0.30, 0.15],
        means=[[-2.47, 1.06], [-1.48, 0.64], [-2.05, 0.07], [0.20, -1.61]],
        covs=[
            [[0.45, 0.0], [0.0, 0.45]],
            [[1.9, -1.9], [-1.9, 2.3]],
            [[2.3, -1.9], [-1.9, 1.9]],
            [[2.51, -2.49], [-2.49, 2.51]],
        ],
    ),
    "D": TargetModel(
        weights=[0.2, 0.2, 0.2, 0.4],
        means=[[-1.5, -2.0], [1.5, 0.7], [-1.5, 0.7], [1.5, -2.0]],
        covs=[[[0.7, 0.0], [0.0, 0.5]]] * 4,
    ),
}

# Explicit Euler on the GF baseline is unstable for target C at dt = 0.1;
# the benchmark runs that target at a reduced step.
PRESET_DT = {"A": 0.1, "B": 0.1, "C": 0.05, "D": 0.1}


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# Target serialization (flat key=value text)

def target_to_text(t: TargetModel) -> str:
    lines = [f"d={t.dim}", f"K={t.n_components}",
             "weights=" + ",".join(_fmt(w) for w in t.weights)]
    for k in range(t.n_components):
        lines.append(f"mean_{k + 1}=" + ",".join(_fmt(v) for v in t.means[k]))
        lines.append(f"cov_{k + 1}=" + ",".join(_fmt(v) for v in t.covs[k].ravel()))
    return "\n".join(lines) + "\n"


def parse_kv_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def target_from_text(text: str) -> TargetModel:
    kv = parse_kv_text(text)
    try:
        d = int(kv["d"])
        k = int(kv["K"])
        weights = [float(v) for v in kv["weights"].split(",")]
        means = [[float(v) for v in kv[f"mean_{i + 1}"].split(",")] for i in range(k)]
        covs = [np.array([float(v) for v in kv[f"cov_{i + 1}"].split(",")]).reshape(d, d)
                for i in range(k)]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed target file: {exc}") from exc
    return TargetModel(weights=weights, means=means, covs=covs)


def save_target(t: TargetModel, path) -> None:
    Path(path).write_text(target_to_text(t))


def load_target(name_or_path) -> TargetModel:
    key = str(name_or_path)
    if key in PRESETS:
        return PRESETS[key]
    p = Path(key)
    if p.exists():
        return target_from_text(p.read_text())
    raise ConfigError(f"unknown target {key!r}: not a preset (A-D) or a file")


# ---------------------------------------------------------------------------
# Random mixtures

@dataclass(frozen=True)
class RandomGmmSpec:
    d: int = 10
    k: int = 5
    r_mean: float = 3.0
    lam_min: float = 0.4
    lam_max: float = 2.0
    dirichlet_concentration: float = 1.0

    def __post_init__(self):
        if not (0 < self.lam_min <= self.lam_max):
            raise ConfigError("need 0 < lam_min <= lam_max")


def random_gmm(spec: RandomGmmSpec, rng: np.random.Generator) -> TargetModel:
    """Weights ~ Dirichlet, means uniform on the sphere of radius
    r_mean * sqrt(d), covariances Haar-rotated with eigenvalues uniform in
    [lam_min, lam_max]."""
    w = rng.dirichlet(np.full(spec.k, spec.dirichlet_concentration))
    radius = spec.r_mean * math.sqrt(spec.d)
    means = []
    for _ in range(spec.k):
        v = rng.standard_normal(spec.d)
        means.append(radius * v / np.linalg.norm(v))
    covs = []
    for _ in range(spec.k):
        g = rng.standard_normal((spec.d, spec.d))
        q, r = np.linalg.qr(g)
        q = q * np.sign(np.diag(r))
        lam = rng.uniform(spec.lam_min, spec.lam_max, size=spec.d)
        covs.append(symmetrize((q * lam) @ q.T))
    return TargetModel(weights=w, means=np.array(means), covs=np.array(covs))


# ---------------------------------------------------------------------------
# Single runs

def draw_init(seed: int, d: int, mode: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-seed initialization, shared between CBO and GF for pairing.

    'unif' draws the mean uniformly in [-5, 5]^d; 'near_origin' from N(0, I).
    The initial covariance is the identity in both protocols.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x1717]))
    if mode == "unif":
        m0 = rng.uniform(-5.0, 5.0, size=d)
    elif mode == "near_origin":
        m0 = rng.standard_normal(d)
    else:
        raise ConfigError(f"unknown init mode {mode!r}")
    return m0, np.eye(d)


def run_single(method: str, target: TargetModel, seed: int, *, dt: float,
               steps: int, sigma: float = 5.0, lam: float = 1.0,
               alpha: float = 1e4, particles: int = 20,
               rebase_every: float = 0.0, init: str = "unif",
               m0=None, cov0=None,
               ) -> tuple[list[dict], GaussianMeasure]:
    """One seeded run of either method; returns row dicts and the final Gaussian."""
    spec = ObjectiveSpec(kind="kl_vs_target", target=target)
    if m0 is None or cov0 is None:
        m0, cov0 = draw_init(seed, target.dim, init)
    if method == "cbo":
        params = CboParams(dt=dt, lam=lam, sigma=sigma, alpha=alpha,
                           n_particles=particles, n_steps=steps,
                           rebase_every=rebase_every, seed=seed)
        records, final = run_cbo(params, spec, m0, cov0)
        rows = [{
            "step": r.step, "time": r.time, "kl_consensus": r.energy_consensus,
            "kl_best_particle": r.min_energy, "ensemble_variance": r.variance,
            "frozen_count": r.frozen,
        } for r in records]
        return rows, final
    if method == "gf":
        records, final, _ = run_gf(spec, m0, cov0, dt, steps)
        return records, final
    raise ConfigError(f"unknown method {method!r}")


def write_csv(rows: list[dict], path, method: str) -> None:
    header = CBO_CSV_HEADER if method == "cbo" else GF_CSV_HEADER
    cols = header.split(",")
    lines = [header]
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            cells.append(str(int(v)) if c in ("step", "frozen_count") else _fmt(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def final_to_dict(g: GaussianMeasure, **meta) -> dict:
    d = {"mean": [float(v) for v in g.mean],
         "cov": [[float(v) for v in row] for row in g.cov]}
    d.update(meta)
    return d


# ---------------------------------------------------------------------------
# Experiments

@dataclass
class RunConfig:
    method: str = "both"            # cbo | gf | both
    target: str = "A"
    dt: Optional[float] = None      # default: per-preset
    horizon: float = 10.0
    sigma: float = 5.0
    lam: float = 1.0
    alpha: float = 1e4
    particles: int = 20
    rebase_every: float = 0.0
    seed0: int = 0
    n_seeds: int = 20
    init: str = "unif"
    out_dir: str = "results"
    workers: int = 1

    def resolved_dt(self) -> float:
        if self.dt is not None:
            return self.dt
        return PRESET_DT.get(self.target, 0.1)

    def n_steps(self) -> int:
        return int(round(self.horizon / self.resolved_dt()))


def config_hash(cfg_dict: dict) -> str:
    blob = json.dumps(cfg_dict, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10)
        return out.stdout.strip() or "unknown"
    except Exception:
        return "unknown"


def _job(args: dict) -> tuple[tuple, list[dict], dict]:
    """Worker entry point; args is plain data so it crosses process pools."""
    target = target_from_text(args["target_text"])
    rows, final = run_single(
        args["method"], target, args["seed"], dt=args["dt"], steps=args["steps"],
        sigma=args["sigma"], lam=args["lam"], alpha=args["alpha"],
        particles=args["particles"], rebase_every=args["rebase_every"],
        init=args["init"])
    key = (args["method"], args["seed"])
    return key, rows, final_to_dict(final)


def _kl_column(rows: list[dict], method: str) -> np.ndarray:
    col = "kl_consensus" if method == "cbo" else "kl"
    return np.array([r[col] for r in rows])


def aggregate(trajectories: list[np.ndarray], times: np.ndarray) -> dict:
    arr = np.stack(trajectories)
    return {
        "time": [float(t) for t in times],
        "median": [float(v) for v in np.median(arr, axis=0)],
        "q25": [float(v) for v in np.quantile(arr, 0.25, axis=0)],
        "q75": [float(v) for v in np.quantile(arr, 0.75, axis=0)],
    }


def run_experiment(cfg: RunConfig, target: Optional[TargetModel] = None) -> dict:
    """n_seeds paired runs of the configured method(s) on one target.

    Writes one CSV per (method, seed) plus a summary JSON to cfg.out_dir and
    returns the summary dict.
    """
    t_start = time.perf_counter()
    if target is None:
        target = load_target(cfg.target)
    target_text = target_to_text(target)
    methods = ["cbo", "gf"] if cfg.method == "both" else [cfg.method]
    seeds = list(range(cfg.seed0, cfg.seed0 + cfg.n_seeds))
    dt, steps = cfg.resolved_dt(), cfg.n_steps()
    jobs = [{
        "method": m, "seed": s, "target_text": target_text, "dt": dt,
        "steps": steps, "sigma": cfg.sigma, "lam": cfg.lam, "alpha": cfg.alpha,
        "particles": cfg.particles, "rebase_every": cfg.rebase_every,
        "init": cfg.init,
    } for m in methods for s in seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = dict_results(pool.map(_job, jobs))
    else:
        results = dict_results(map(_job, jobs))

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_target(target, out / f"{cfg.target}_target.txt")
    per_method: dict[str, dict] = {}
    finals: dict[str, dict] = {}
    for m in methods:
        trajs = []
        for s in seeds:
            rows, final = results[(m, s)]
            write_csv(rows, out / f"{cfg.target}_{m}_seed{s}.csv", m)
            trajs.append(_kl_column(rows, m))
            finals[f"{m}_seed{s}"] = final
        times = np.array([r["time"] for r in results[(m, seeds[0])][0]])
        per_method[m] = aggregate(trajs, times)
    cfg_dict = asdict(cfg)
    summary = {
        "config": cfg_dict,
        "config_hash": config_hash(cfg_dict),
        "git": git_describe(),
        "methods": per_method,
        "seeds": seeds,
        "wall_clock": time.perf_counter() - t_start,
    }
    (out / f"{cfg.target}_summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n")
    (out / f"{cfg.target}_finals.json").write_text(
        json.dumps(finals, sort_keys=True, indent=2) + "\n")
    return summary


def run_random_gmm_study(spec: RandomGmmSpec, n_instances: int, *, seed0: int = 0,
                         dt: float = 0.1, horizon: float = 30.0,
                         sigma: float = 2.5, lam: float = 1.0, alpha: float = 1e4,
                         particles: int = 100, out_dir: str = "results_d10",
                         workers: int = 1) -> dict:
    """Random-mixture study: one paired (CBO, GF) run per instance, relative
    KL normalized per instance by the best value either method attains."""
    t_start = time.perf_counter()
    steps = int(round(horizon / dt))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rel: dict[str, list[np.ndarray]] = {"cbo": [], "gf": []}
    times = None
    for i in range(n_instances):
        inst_seed = seed0 + i
        rng = np.random.default_rng(np.random.SeedSequence([inst_seed, 0xD10]))
        target = random_gmm(spec, rng)
        save_target(target, out / f"instance{i}_target.txt")
        m0, cov0 = draw_init(inst_seed, spec.d, "near_origin")
        kls = {}
        for m in ("cbo", "gf"):
            rows, final = run_single(
                m, target, inst_seed, dt=dt, steps=steps, sigma=sigma, lam=lam,
                alpha=alpha, particles=particles, m0=m0, cov0=cov0)
            write_csv(rows, out / f"instance{i}_{m}.csv", m)
            kls[m] = _kl_column(rows, m)
            if times is None:
                times = np.array([r["time"] for r in rows])
        k_star = min(kls["cbo"].min(), kls["gf"].min())
        k_star = max(k_star, 1e-12)
        for m in ("cbo", "gf"):
            rel[m].append(kls[m] / k_star)
    per_method = {m: aggregate(rel[m], times) for m in ("cbo", "gf")}
    summary = {
        "config": {"spec": asdict(spec), "n_instances": n_instances,
                   "seed0": seed0, "dt": dt, "horizon": horizon, "sigma": sigma,
                   "lam": lam, "alpha": alpha, "particles": particles},
        "metric": "relkl",
        "methods": per_method,
        "seeds": list(range(seed0, seed0 + n_instances)),
        "wall_clock": time.perf_counter() - t_start,
    }
    (out / "d10_summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return summary


def run_sweep(param: str, values: list, base_cfg: RunConfig) -> dict:
    """Sensitivity sweep over sigma, particle count, or rebase frequency."""
    if param not in ("sigma", "particles", "rebase_every"):
        raise ConfigError(f"sweep parameter must be sigma|particles|rebase_every, got {param!r}")
    t_start = time.perf_counter()
    panels = {}
    for v in values:
        cfg = RunConfig(**{**asdict(base_cfg), param: v, "method": "cbo",
                           "out_dir": str(Path(base_cfg.out_dir) / f"{param}_{v}")})
        panels[str(v)] = run_experiment(cfg)["methods"]["cbo"]
    summary = {
        "config": asdict(base_cfg),
        "sweep_param": param,
        "values": [v for v in values],
        "panels": panels,
        "wall_clock": time.perf_counter() - t_start,
    }
    out = Path(base_cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"sweep_{param}_summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return summary


def dict_results(it) -> dict:
    return {key: (rows, final) for key, rows, final in it}
