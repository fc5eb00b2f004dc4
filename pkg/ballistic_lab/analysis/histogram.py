"""Integer histograms with clipped tails."""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple, Union

import numpy as np

from ..config import DEFAULT_TOLERANCES
from ..errors import EmptyInputError

__all__ = ["Histogram", "aligned", "UNDERFLOW", "OVERFLOW"]

UNDERFLOW = "underflow"
OVERFLOW = "overflow"

Bin = Union[int, str]


@dataclass(frozen=True)
class Histogram:
    """Counts of integer values in ``[-clip, clip]`` plus one bin for each clipped tail.

    The bins are disjoint and exhaustive, so ``total`` is the sample size.
    """

    counts: Dict[int, int] = field(default_factory=dict)
    underflow: int = 0
    overflow: int = 0
    clip: int = DEFAULT_TOLERANCES.histogram_clip

    def __post_init__(self):
        if any(abs(k) > self.clip for k in self.counts):
            raise ValueError(f"bins must lie within [-{self.clip}, {self.clip}]")
        if any(c < 0 for c in self.counts.values()) or min(self.underflow, self.overflow) < 0:
            raise ValueError("counts must be nonnegative")

    @classmethod
    def from_values(
        cls, values: Iterable[int], clip: int = DEFAULT_TOLERANCES.histogram_clip
    ) -> "Histogram":
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
        arr = arr.astype(np.int64).ravel()
        low, high = arr < -clip, arr > clip
        inside = arr[~(low | high)]
        keys, counts = np.unique(inside, return_counts=True)
        return cls(
            {int(k): int(c) for k, c in zip(keys, counts)},
            int(low.sum()),
            int(high.sum()),
            clip,
        )

    @property
    def total(self) -> int:
        return sum(self.counts.values()) + self.underflow + self.overflow

    def is_empty(self) -> bool:
        return self.total == 0

    def bins(self) -> List[Tuple[Bin, int]]:
        """All bins in order: underflow, the integer bins, overflow (empty tails omitted)."""
        out: List[Tuple[Bin, int]] = []
        if self.underflow:
            out.append((UNDERFLOW, self.underflow))
        out.extend(sorted(self.counts.items()))
        if self.overflow:
            out.append((OVERFLOW, self.overflow))
        return out

    def count(self, key: Bin) -> int:
        if key == UNDERFLOW:
            return self.underflow
        if key == OVERFLOW:
            return self.overflow
        return self.counts.get(int(key), 0)

    def probabilities(self) -> Dict[Bin, float]:
        n = self.total
        if n == 0:
            raise EmptyInputError("empty histogram")
        return {k: c / n for k, c in self.bins()}

    def merge(self, other: "Histogram") -> "Histogram":
        if other.clip != self.clip:
            raise ValueError(f"cannot merge histograms clipped at {self.clip} and {other.clip}")
        counts = Counter(self.counts)
        counts.update(other.counts)
        return Histogram(
            dict(counts),
            self.underflow + other.underflow,
            self.overflow + other.overflow,
            self.clip,
        )

    def to_rows(self) -> List[Dict[str, Union[int, str, float]]]:
        n = self.total
        return [
            {"bin": k, "count": c, "fraction": c / n if n else 0.0} for k, c in self.bins()
        ]


def aligned(h1: Histogram, h2: Histogram) -> Tuple[List[Bin], np.ndarray, np.ndarray]:
    """Counts of both histograms over the union of their bins, in bin order."""
    if h1.clip != h2.clip:
        raise ValueError(f"histograms are clipped at {h1.clip} and {h2.clip}")
    keys = sorted(set(h1.counts) | set(h2.counts))
    order: List[Bin] = []
    if h1.underflow or h2.underflow:
        order.append(UNDERFLOW)
    order.extend(keys)
    if h1.overflow or h2.overflow:
        order.append(OVERFLOW)
    a = np.array([h1.count(k) for k in order], dtype=np.float64)
    b = np.array([h2.count(k) for k in order], dtype=np.float64)
    return order, a, b
