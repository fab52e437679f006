"""Figure builders: KL-vs-time curves, contour + covariance-ellipse
snapshots, and sensitivity panels.

All figures are drawn purely from harness output files; nothing is
recomputed. The ellipse convention is the 1-sigma contour: semi-axes
sqrt(eigenvalue) along the covariance eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Ellipse  # noqa: E402

from .io import (  # noqa: E402
    FinalGaussian,
    SchemaError,
    load_finals,
    load_summary,
    load_sweep_summary,
    load_target,
)

KIND_CHOICES = ("kl_curve", "contour_ellipse", "sensitivity_panel")

METHOD_LABELS = {"cbo": "CBO", "gf": "GF"}
METHOD_COLORS = {"cbo": "tab:blue", "gf": "tab:orange"}


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple[str, ...]
    kind: str
    out: str
    log_scale: bool = True

    def __post_init__(self):
        if self.kind not in KIND_CHOICES:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {KIND_CHOICES}")
        if not self.inputs:
            raise SchemaError("figure spec needs at least one input path")


def _save(fig, out) -> Path:
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


# ---------------------------------------------------------------------------
# KL curves

def build_kl_figure(methods: dict[str, dict[str, np.ndarray]], log_scale: bool = True,
                    ylabel: str = "KL divergence"):
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in sorted(methods):
        curve = methods[name]
        label = METHOD_LABELS.get(name, name)
        color = METHOD_COLORS.get(name)
        line, = ax.plot(curve["time"], curve["median"], label=label, color=color)
        ax.fill_between(curve["time"], curve["q25"], curve["q75"],
                        color=line.get_color(), alpha=0.25, linewidth=0)
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("time")
    ax.set_ylabel(ylabel)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def plot_kl(spec: FigureSpec) -> Path:
    """Median curve plus shaded interquartile band, one per method."""
    if len(spec.inputs) != 1:
        raise SchemaError("kl_curve takes exactly one summary JSON input")
    methods = load_summary(spec.inputs[0])
    fig, _ = build_kl_figure(methods, log_scale=spec.log_scale)
    return _save(fig, spec.out)


# ---------------------------------------------------------------------------
# Contour + ellipse snapshot

def ellipse_params(cov: np.ndarray) -> tuple[float, float, float]:
    """(width, height, angle_degrees) of the 1-sigma ellipse of a 2x2 SPD
    covariance: full axes 2*sqrt(eigenvalue), rotated to the eigenvectors."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2):
        raise SchemaError(f"ellipse needs a 2x2 covariance, got shape {cov.shape}")
    eigvals, eigvecs = np.linalg.eigh(0.5 * (cov + cov.T))
    if eigvals[0] <= 0:
        raise SchemaError("covariance is not positive definite")
    # eigh sorts ascending; use the larger axis as the width.
    width = 2.0 * float(np.sqrt(eigvals[1]))
    height = 2.0 * float(np.sqrt(eigvals[0]))
    angle = float(np.degrees(np.arctan2(eigvecs[1, 1], eigvecs[0, 1])))
    return width, height, angle


def _grid_bounds(target, finals: list[FinalGaussian], pad_sigmas: float = 3.0):
    points = [target.means]
    spreads = [np.sqrt(np.linalg.eigvalsh(c)[-1]) for c in target.covs]
    for g in finals:
        points.append(g.mean[None, :])
        spreads.append(np.sqrt(np.linalg.eigvalsh(g.cov)[-1]))
    pts = np.concatenate(points, axis=0)
    pad = pad_sigmas * max(spreads)
    lo = pts.min(axis=0) - pad
    hi = pts.max(axis=0) + pad
    return lo, hi


def build_contour_figure(target, finals: list[FinalGaussian], n_grid: int = 200):
    if target.dim != 2:
        raise SchemaError(
            f"contour_ellipse supports d=2 only, target has d={target.dim}")
    for g in finals:
        if g.mean.size != 2:
            raise SchemaError(
                f"contour_ellipse supports d=2 only, final {g.label!r} has "
                f"d={g.mean.size}")
    fig, ax = plt.subplots(figsize=(5.5, 5))
    lo, hi = _grid_bounds(target, finals)
    xs = np.linspace(lo[0], hi[0], n_grid)
    ys = np.linspace(lo[1], hi[1], n_grid)
    xx, yy = np.meshgrid(xs, ys)
    density = np.exp(target.logpdf(np.stack([xx, yy], axis=-1)))
    ax.contour(xx, yy, density, levels=8, cmap="Greys", linewidths=0.8)
    for g in finals:
        width, height, angle = ellipse_params(g.cov)
        ax.add_patch(Ellipse(g.mean, width, height, angle=angle,
                             fill=False, edgecolor="tab:blue", linewidth=1.2,
                             alpha=0.8))
        ax.plot(*g.mean, marker="+", color="tab:blue", markersize=5)
    ax.set_aspect("equal")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    return fig, ax


def plot_contour_ellipse(spec: FigureSpec) -> Path:
    """Target-density contours with the 1-sigma ellipse of each final
    Gaussian. Inputs: target file, finals JSON."""
    if len(spec.inputs) != 2:
        raise SchemaError(
            "contour_ellipse takes two inputs: target file, finals JSON")
    target = load_target(spec.inputs[0])
    finals = load_finals(spec.inputs[1])
    fig, _ = build_contour_figure(target, finals)
    return _save(fig, spec.out)


# ---------------------------------------------------------------------------
# Sensitivity panel

def plot_sensitivity_panel(spec: FigureSpec) -> Path:
    """One KL curve (median + IQR band) per swept parameter value."""
    if len(spec.inputs) != 1:
        raise SchemaError("sensitivity_panel takes exactly one sweep summary input")
    param, keys, curves = load_sweep_summary(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(6, 4))
    cmap = plt.get_cmap("viridis")
    for i, key in enumerate(keys):
        curve = curves[key]
        color = cmap(i / max(len(keys) - 1, 1))
        ax.plot(curve["time"], curve["median"], label=f"{param}={key}", color=color)
        ax.fill_between(curve["time"], curve["q25"], curve["q75"],
                        color=color, alpha=0.2, linewidth=0)
    if spec.log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("time")
    ax.set_ylabel("KL divergence")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, spec.out)
