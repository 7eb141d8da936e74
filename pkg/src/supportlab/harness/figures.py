"""PNG figures for campaign output, rendered off-screen."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .scaling import scaling_table  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
}


def _queries_figure(table: list[dict], path: Path):
    fig, ax = plt.subplots()
    series: dict[tuple, list[tuple[float, float]]] = {}
    for r in table:
        key = (r["family"], r["tester"], r["m"])
        series.setdefault(key, []).append((float(1 / Fraction(r["eps"])), r["mean_queries"]))
    styles = ["-", "--", ":", "-."]
    families = sorted({k[0] for k in series})
    for (family, tester, m), pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ls=styles[families.index(family) % 4],
                label=f"{family}: {tester}, m={m}")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("1/eps")
    ax.set_ylabel("mean queries")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _rejection_figure(table: list[dict], path: Path):
    fig, ax = plt.subplots()
    labels = [f"{r['family']}/{r['tester']}\nm={r['m']} eps={r['eps']}" for r in table]
    rates = [r["rejection_rate"] for r in table]
    lo = [r["rejection_rate"] - r["ci_low"] for r in table]
    hi = [r["ci_high"] - r["rejection_rate"] for r in table]
    ax.bar(range(len(table)), rates, yerr=[lo, hi], capsize=3, color="tab:blue", alpha=0.8)
    ax.axhline(2 / 3, color="tab:red", lw=1, ls="--")
    ax.set_xticks(range(len(table)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=6)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("rejection rate (Wilson 95%)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_figures(rows, out_dir: str | Path) -> list[Path]:
    """Write ``queries.png`` and ``rejections.png``; nothing when there are no usable rows."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    if not rows:
        return []
    keys = ("family", "tester", "m", "eps")
    try:
        table = scaling_table(rows, keys)
    except ValueError:
        return []
    if not table:
        return []
    table.sort(key=lambda r: (r["family"], r["tester"], int(r["m"]), Fraction(r["eps"])))
    written = []
    with plt.rc_context(STYLE):
        p = out / "queries.png"
        _queries_figure(table, p)
        written.append(p)
        p = out / "rejections.png"
        _rejection_figure(table, p)
        written.append(p)
    return written
