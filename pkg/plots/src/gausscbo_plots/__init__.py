"""Figure generation for gausscbo benchmark outputs.

Consumes only the files the benchmark harness writes (run CSVs, summary /
finals JSON, flat key=value target files); it never imports the optimizer
package or recomputes any dynamics.
"""

from .io import SchemaError, load_finals, load_summary, load_sweep_summary, load_target
from .figures import FigureSpec, plot_contour_ellipse, plot_kl, plot_sensitivity_panel

__all__ = [
    "SchemaError",
    "FigureSpec",
    "load_summary",
    "load_finals",
    "load_sweep_summary",
    "load_target",
    "plot_kl",
    "plot_contour_ellipse",
    "plot_sensitivity_panel",
]
