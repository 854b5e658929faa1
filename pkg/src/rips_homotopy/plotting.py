"""Betti-curve figures written next to the CSV report."""
from __future__ import annotations

import io
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def betti_curves_png(grid: Sequence[float], curves: Mapping[str, Sequence[int]],
                     title: str = "") -> bytes:
    """PNG bytes of a step plot of each curve against the phase grid.

    Curves are constant from one grid value to the next, so they are drawn
    with ``where="post"`` and extended a little past the last value.
    """
    xs = list(grid)
    tail = xs[-1] + max(0.1 * (xs[-1] - xs[0]), 0.1)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    styles = ("-", "--", ":", "-.")
    for i, (label, ys) in enumerate(curves.items()):
        ax.step(xs + [tail], list(ys) + [ys[-1]], where="post", label=label,
                linestyle=styles[i % len(styles)])
    ax.set_xlabel("s")
    ax.set_ylabel("rank")
    ax.set_xlim(xs[0], tail)
    ax.yaxis.get_major_locator().set_params(integer=True)
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    # no Software/date chunks, so reruns are byte-identical
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=100, metadata={"Software": None})
    plt.close(fig)
    return buf.getvalue()
