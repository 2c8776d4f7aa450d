"""CSV and SVG writers for experiment results.

CSV layout: ``# key=value`` metadata lines, a header row, data rows, and a
final ``# config_hash=<hex>`` line.  Floats use ``repr`` so output is exact and
byte-stable across reruns.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence

from .runner import ResultTable


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(float(v))
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    return "" if v is None else str(v)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence], config_hash: str | None = None,
             meta: dict | None = None) -> str:
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key}={value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    if config_hash is not None:
        buf.write(f"# config_hash={config_hash}\n")
    return buf.getvalue()


def table_csv(table: ResultTable, config_hash: str) -> str:
    return csv_text(table.columns, table.rows, config_hash, table.meta)


def write_text(path, text: str) -> None:
    Path(path).write_text(text)


# x column and series grouping per experiment
_PLOT_LAYOUT = {
    "fig3_n1_sweep": ("n1", None, ["mean_rate_per_ue", "ula_mean_rate_per_ue"]),
    "fig4_m_sweep": ("m", ("theta_max", "arch"), ["mean_rate"]),
    "fig5_sensing_first": ("m", ("arch",), ["mean_rate", "rmse_deg"]),
    "custom": ("arch", None, ["mean_rate"]),
}


def write_svg(table: ResultTable, experiment: str, path) -> None:
    """Simple line plots of the main metrics against the swept variable."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "nestisac"
    x_name, group_by, ys = _PLOT_LAYOUT[experiment]
    fig, axes = plt.subplots(1, len(ys), figsize=(5 * len(ys), 4), squeeze=False)
    for ax, y_name in zip(axes[0], ys):
        groups: dict = {}
        for row in table.rows:
            rec = dict(zip(table.columns, row))
            key = tuple(rec[g] for g in group_by) if group_by else (y_name,)
            groups.setdefault(key, []).append((rec[x_name], rec[y_name]))
        for key, pts in groups.items():
            xs, vals = zip(*pts)
            label = " ".join(str(k) for k in key)
            if isinstance(xs[0], str):
                ax.bar(range(len(xs)), vals, tick_label=list(xs), label=label)
            else:
                ax.plot(xs, vals, marker="o", label=label)
        ax.set_xlabel(x_name)
        ax.set_ylabel(y_name)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
