"""Static figure export. matplotlib is an optional extra and is imported on first use."""

import logging
from pathlib import Path
from typing import Any, Dict, Sequence, Union

from ..errors import LabError

__all__ = ["plot_profile"]

logger = logging.getLogger(__name__)


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise LabError("plotting needs matplotlib; install ballistic-lab[plot]") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_profile(
    rows: Sequence[Dict[str, Any]], out: Union[str, Path], title: str = ""
) -> Path:
    """Two stacked panels over the window: the centered height ``u(x)`` and the forward gradient
    ``u(x + 1) - u(x)``. ``rows`` carry ``x``, ``u`` and ``grad`` (empty on the last site)."""
    plt = _pyplot()
    xs = [r["x"] for r in rows]
    us = [r["u"] for r in rows]
    grad = [(r["x"], r["grad"]) for r in rows if r["grad"] != ""]

    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.6))
    top.plot(xs, us, marker=".", linewidth=1)
    top.axhline(0, color="0.7", linewidth=0.5)
    top.set_ylabel("u(x)")
    if title:
        top.set_title(title)
    bottom.bar([g[0] for g in grad], [g[1] for g in grad], width=0.8)
    bottom.axhline(0, color="0.7", linewidth=0.5)
    bottom.set_ylabel("u(x+1) - u(x)")
    bottom.set_xlabel("x")
    fig.tight_layout()
    out = Path(out)
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    logger.info("wrote %s", out)
    return out
