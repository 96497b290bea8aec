"""Accuracy-vs-perturbation line charts as deterministic SVG."""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from snn_faultlab.campaign.results import BASELINE, ResultRow  # noqa: E402

_RC = {
    "svg.hashsalt": "snn-faultlab",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _series(rows: Sequence[ResultRow]) -> tuple[str, str, dict[float, list[tuple[float, float]]]]:
    attacks = {r.attack for r in rows if r.attack != BASELINE}
    if len(attacks) > 1:
        raise ValueError(f"rows mix attack kinds: {', '.join(sorted(attacks))}")
    if not attacks:
        raise ValueError("no attack rows to plot")
    attack = attacks.pop()
    by_vdd = attack == "GlobalVdd"
    points: dict[tuple[float, float], list[float]] = defaultdict(list)
    for r in rows:
        if r.attack != attack:
            continue
        x = r.vdd if by_vdd else r.delta * 100.0
        points[(r.fraction, x)].append(r.accuracy * 100.0)
    lines: dict[float, list[tuple[float, float]]] = defaultdict(list)
    for (frac, x), accs in sorted(points.items()):
        # mean over seeds (and defense sets) at this coordinate
        lines[frac].append((x, sum(accs) / len(accs)))
    xlabel = "supply voltage (V)" if by_vdd else "threshold / drive change (%)"
    return attack, xlabel, dict(lines)


def emit_plot_svg(rows: Sequence[ResultRow], path: Path | str, title: str | None = None) -> Path:
    """One line per affected fraction; seeds are averaged. Returns ``path``."""
    attack, xlabel, lines = _series(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cmap = plt.get_cmap("viridis")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        n = max(len(lines) - 1, 1)
        for i, (frac, pts) in enumerate(sorted(lines.items())):
            xs, ys = zip(*pts)
            (line,) = ax.plot(xs, ys, marker="o", ms=3, lw=1.2, color=cmap(i / n),
                              label=f"{frac * 100:.0f}%")
            line.set_gid(f"fraction-{frac * 100:.0f}")
        baselines = [r.accuracy * 100.0 for r in rows if r.attack == BASELINE]
        if baselines:
            ax.axhline(sum(baselines) / len(baselines), color="0.5", lw=0.8, ls="--")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("accuracy (%)")
        ax.set_ylim(0, 100)
        ax.set_title(title or attack)
        if len(lines) > 1:
            ax.legend(title="affected", fontsize=7, title_fontsize=7, frameon=False,
                      loc="center left", bbox_to_anchor=(1.0, 0.5))
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
