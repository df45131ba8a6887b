"""Tidy CSV tables and matching PNG figures."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def plot_rows(rows: list[dict], x: str, y: str, path, yerr: str | None = None,
              group: list[str] | None = None, title: str = "", logy: bool = False):
    """Line plot of y against x, one line per combination of ``group`` columns."""
    fig, ax = plt.subplots(figsize=(6, 4))
    group = group or []
    series: dict[tuple, list[dict]] = {}
    for r in rows:
        series.setdefault(tuple(r[g] for g in group), []).append(r)
    for key, rs in series.items():
        rs = sorted(rs, key=lambda r: float(r[x]))
        xs = [float(r[x]) for r in rs]
        ys = [float(r[y]) for r in rs]
        es = [float(r[yerr]) for r in rs] if yerr else None
        label = ", ".join(f"{g}={v}" for g, v in zip(group, key)) or None
        ax.errorbar(xs, ys, yerr=es, marker="o", ms=3, capsize=2, label=label)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    if logy:
        ax.set_yscale("log")
    if title:
        ax.set_title(title)
    if any(k for k in series):
        ax.legend(fontsize=7)
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
