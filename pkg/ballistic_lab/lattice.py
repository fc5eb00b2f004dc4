"""
Sites, boxes and the integer fields that live on them.

Sites are plain tuples of ints. A box ``B_N = [-N, N]^d`` is enumerated in lexicographic order
(first coordinate most significant), which is also the C order of the ``(2N+1,)*d`` height
arrays, so "canonical site index" and "flat array index" coincide.

A ``HeightField`` keeps its box heights inside a one-site collar. The collar is what a site on
the edge of the box sees when it looks at a neighbour outside: zeros under the pinned-zero
convention, the stored initial values under frozen-initial.
"""

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatchError, EmptyInputError, HeightOverflowError, OutsideBoxError

__all__ = [
    "Site",
    "Boundary",
    "BoxSpec",
    "HeightField",
    "GradientField",
    "LatticeSymmetry",
    "CenteredSample",
    "origin",
    "unit",
    "l1_norm",
    "linf_norm",
    "box_sites",
    "neighbors",
    "gradient_field",
    "path_sum",
    "recenter",
    "apply_symmetry",
    "all_symmetries",
    "sites_within",
]

Site = Tuple[int, ...]

_INT64_MAX = np.iinfo(np.int64).max
_INT64_MIN = np.iinfo(np.int64).min


class Boundary(str, Enum):
    PINNED_ZERO = "pinned-zero"
    FROZEN_INITIAL = "frozen-initial"


def origin(d: int) -> Site:
    return (0,) * d


def unit(d: int, axis: int, sign: int = 1) -> Site:
    return tuple(sign if i == axis else 0 for i in range(d))


def l1_norm(x: Sequence[int]) -> int:
    return sum(abs(c) for c in x)


def linf_norm(x: Sequence[int]) -> int:
    return max((abs(c) for c in x), default=0)


@dataclass(frozen=True)
class BoxSpec:
    d: int
    N: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.N < 0:
            raise ValueError(f"half-width must be >= 0, got {self.N}")

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    @property
    def size(self) -> int:
        return self.side**self.d

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.side,) * self.d

    @property
    def padded_shape(self) -> Tuple[int, ...]:
        return (self.side + 2,) * self.d

    def contains(self, x: Sequence[int]) -> bool:
        return len(x) == self.d and all(-self.N <= c <= self.N for c in x)

    def check_site(self, x: Sequence[int]) -> Site:
        if len(x) != self.d:
            raise DimensionMismatchError(f"site {tuple(x)} is not {self.d}-dimensional")
        if not self.contains(x):
            raise OutsideBoxError(f"site {tuple(x)} is outside B_{self.N}")
        return tuple(int(c) for c in x)

    def index(self, x: Sequence[int]) -> int:
        """Canonical (lexicographic) index of a box site."""
        k = 0
        for c in self.check_site(x):
            k = k * self.side + (c + self.N)
        return k

    def site(self, k: int) -> Site:
        coords = []
        for _ in range(self.d):
            k, r = divmod(k, self.side)
            coords.append(r - self.N)
        return tuple(reversed(coords))

    @cached_property
    def padded_strides(self) -> Tuple[int, ...]:
        width = self.side + 2
        return tuple(width ** (self.d - 1 - i) for i in range(self.d))

    def padded_index(self, x: Sequence[int]) -> int:
        """Flat index into the collar-padded array; valid for the box and its collar."""
        if len(x) != self.d or any(abs(c) > self.N + 1 for c in x):
            raise OutsideBoxError(f"site {tuple(x)} is beyond the collar of B_{self.N}")
        return sum((c + self.N + 1) * s for c, s in zip(x, self.padded_strides))

    @cached_property
    def neighbor_offsets(self) -> Tuple[int, ...]:
        """Padded flat offsets of +e_1, -e_1, +e_2, ... (canonical neighbour order)."""
        offsets: List[int] = []
        for s in self.padded_strides:
            offsets.extend((s, -s))
        return tuple(offsets)

    @cached_property
    def interior_flat(self) -> np.ndarray:
        """Padded flat index of every box site, in canonical order."""
        grids = np.indices(self.shape).reshape(self.d, -1) + 1
        flat = np.zeros(self.size, dtype=np.int64)
        for axis, stride in enumerate(self.padded_strides):
            flat += grids[axis] * stride
        flat.setflags(write=False)
        return flat

    def interior_slice(self) -> Tuple[slice, ...]:
        return (slice(1, self.side + 1),) * self.d


def box_sites(spec: BoxSpec) -> List[Site]:
    return list(itertools.product(range(-spec.N, spec.N + 1), repeat=spec.d))


def neighbors(x: Sequence[int]) -> List[Site]:
    out: List[Site] = []
    for i in range(len(x)):
        for step in (1, -1):
            y = list(x)
            y[i] += step
            out.append(tuple(y))
    return out


def _as_int64(values: Any) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind not in "iub" and arr.size:
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("heights must be integers")
    if arr.size and (arr.max() > _INT64_MAX or arr.min() < _INT64_MIN):
        raise HeightOverflowError("heights outside the signed 64-bit range")
    return arr.astype(np.int64)


@dataclass(frozen=True, eq=False)
class HeightField:
    """Integer heights on a box plus the frozen collar around it.

    Use the ``zeros`` / ``from_heights`` / ``from_padded`` constructors; the stored array is
    read-only.
    """

    box: BoxSpec
    padded: np.ndarray
    boundary: Boundary = Boundary.PINNED_ZERO

    def __post_init__(self):
        if self.padded.shape != self.box.padded_shape:
            raise DimensionMismatchError(
                f"padded array has shape {self.padded.shape}, expected {self.box.padded_shape}"
            )
        if self.boundary == Boundary.PINNED_ZERO:
            collar = self.padded.copy()
            collar[self.box.interior_slice()] = 0
            if np.any(collar):
                raise ValueError("pinned-zero field must have a zero collar")
        self.padded.setflags(write=False)

    @classmethod
    def zeros(cls, box: BoxSpec, boundary: Boundary = Boundary.PINNED_ZERO) -> "HeightField":
        return cls(box, np.zeros(box.padded_shape, dtype=np.int64), Boundary(boundary))

    @classmethod
    def from_heights(
        cls,
        box: BoxSpec,
        heights: Any,
        boundary: Boundary = Boundary.PINNED_ZERO,
        exterior: Union[int, np.ndarray, None] = None,
    ) -> "HeightField":
        """Build a field from box heights (box-shaped, or flat in canonical order).

        ``exterior`` fills the collar under frozen-initial: a constant, or a padded-shape array
        whose collar entries are used. It must be omitted (or zero) under pinned-zero.
        """
        arr = _as_int64(heights)
        if arr.shape != box.shape:
            if arr.size != box.size:
                raise DimensionMismatchError(
                    f"{arr.size} heights given for a box of {box.size} sites"
                )
            arr = arr.reshape(box.shape)
        boundary = Boundary(boundary)
        if exterior is None:
            padded = np.zeros(box.padded_shape, dtype=np.int64)
        elif np.ndim(exterior) == 0:
            padded = np.full(box.padded_shape, int(exterior), dtype=np.int64)
        else:
            padded = _as_int64(exterior).copy()
        padded[box.interior_slice()] = arr
        return cls(box, padded, boundary)

    @classmethod
    def from_padded(
        cls, box: BoxSpec, padded: Any, boundary: Boundary = Boundary.FROZEN_INITIAL
    ) -> "HeightField":
        return cls(box, _as_int64(padded).copy(), Boundary(boundary))

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def heights(self) -> np.ndarray:
        return self.padded[self.box.interior_slice()]

    def flat(self) -> np.ndarray:
        """Box heights in canonical site order."""
        return self.heights.reshape(-1)

    def value(self, x: Sequence[int]) -> int:
        if len(x) != self.d:
            raise DimensionMismatchError(f"site {tuple(x)} is not {self.d}-dimensional")
        if self.box.contains(x):
            return int(self.padded[tuple(c + self.box.N + 1 for c in x)])
        if self.boundary == Boundary.PINNED_ZERO:
            return 0
        return int(self.padded.flat[self.box.padded_index(x)])

    def with_boundary(self, boundary: Boundary) -> "HeightField":
        boundary = Boundary(boundary)
        if boundary == self.boundary:
            return self
        return HeightField.from_heights(self.box, self.heights, boundary)

    def shifted(self, c: int) -> "HeightField":
        """``f + c`` everywhere, collar included; a shifted pinned field becomes frozen."""
        if c == 0:
            return self
        padded = self.padded.astype(np.int64) + int(c)
        return HeightField(self.box, padded, Boundary.FROZEN_INITIAL)

    def equals(self, other: "HeightField") -> bool:
        return (
            self.box == other.box
            and self.boundary == other.boundary
            and np.array_equal(self.padded, other.padded)
        )

    def __repr__(self):
        return f"HeightField(d={self.d}, N={self.box.N}, boundary={self.boundary.value})"


@dataclass(frozen=True, eq=False)
class GradientField:
    """Forward differences ``components[i][x] = h(x + e_i) - h(x)`` inside the box.

    ``components[i]`` has the box shape with axis ``i`` shortened by one; array index ``j`` on
    axis ``i`` is the edge from coordinate ``j - N`` to ``j - N + 1``.
    """

    box: BoxSpec
    components: Tuple[np.ndarray, ...]

    def at(self, x: Sequence[int], axis: int = 0) -> int:
        N = self.box.N
        y = list(x)
        y[axis] += 1
        if not (self.box.contains(x) and self.box.contains(y)):
            raise OutsideBoxError(f"edge {tuple(x)} -> {tuple(y)} is not inside B_{N}")
        return int(self.components[axis][tuple(c + N for c in x)])

    def is_curl_free(self) -> bool:
        for i, j in itertools.combinations(range(self.box.d), 2):
            # d_i(x) + d_j(x + e_i) == d_j(x) + d_i(x + e_j) on every admissible plaquette
            di, dj = self.components[i], self.components[j]

            def cut(axis_i: slice, axis_j: slice) -> Tuple[slice, ...]:
                return tuple(
                    axis_i if a == i else axis_j if a == j else slice(None)
                    for a in range(self.box.d)
                )

            all_, head, tail = slice(None), slice(0, -1), slice(1, None)
            lhs = di[cut(all_, head)] + dj[cut(tail, all_)]
            rhs = dj[cut(head, all_)] + di[cut(all_, tail)]
            if not np.array_equal(lhs, rhs):
                return False
        return True


def gradient_field(h: Union[HeightField, "CenteredSample"]) -> GradientField:
    if isinstance(h, CenteredSample):
        box, heights = h.window_box, h.heights
    else:
        box, heights = h.box, h.heights
    if box.N < 1:
        raise EmptyInputError("a box with N = 0 has no admissible gradient edge")
    comps = tuple(np.diff(heights, axis=i) for i in range(box.d))
    for comp in comps:
        comp.setflags(write=False)
    return GradientField(box, comps)


def path_sum(gradient: GradientField) -> np.ndarray:
    """Reconstruct the centered heights (origin 0) from a gradient field.

    Integrates along axis 0 through the origin, then extends along axis 1 from that line, and so
    on; the curl-free property makes the result path independent.
    """
    box = gradient.box
    out = np.zeros(box.shape, dtype=np.int64)
    c = box.N
    if c == 0:
        return out
    for k in range(box.d):
        idx = tuple(slice(None) if a <= k else c for a in range(box.d))
        sub = np.moveaxis(out[idx], k, -1)
        dk = np.moveaxis(gradient.components[k][idx], k, -1)
        base = sub[..., c : c + 1]
        sub[..., c + 1 :] = base + np.cumsum(dk[..., c:], axis=-1)
        sub[..., :c] = base - np.cumsum(dk[..., c - 1 :: -1], axis=-1)[..., ::-1]
    return out


@dataclass(frozen=True, eq=False)
class CenteredSample:
    """A surface re-centered so that its origin height is 0, cut to a window ``B_W``.

    ``box`` is the box the surface was simulated on; ``raw_origin`` is the height at the origin
    before re-centering, which is what lets a full-box sample be turned back into raw heights.
    """

    box: BoxSpec
    window: int
    heights: np.ndarray
    raw_origin: int = 0
    n_updates: Optional[int] = None
    elapsed_time: Optional[float] = None
    seed: Optional[int] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.window <= self.box.N:
            raise ValueError(f"window {self.window} must lie in [0, {self.box.N}]")
        if self.heights.shape != self.window_box.shape:
            raise DimensionMismatchError(
                f"heights have shape {self.heights.shape}, expected {self.window_box.shape}"
            )
        self.heights.setflags(write=False)

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def window_box(self) -> BoxSpec:
        return BoxSpec(self.box.d, self.window)

    def value(self, x: Sequence[int]) -> int:
        W = self.window
        if not self.window_box.contains(x):
            raise OutsideBoxError(f"site {tuple(x)} is outside the window B_{W}")
        return int(self.heights[tuple(c + W for c in x)])

    def gradient(self, x: Sequence[int], axis: int = 0) -> int:
        y = list(x)
        y[axis] += 1
        return self.value(y) - self.value(x)

    def flat(self) -> np.ndarray:
        return self.heights.reshape(-1)

    def with_window(self, window: int) -> "CenteredSample":
        if window > self.window:
            raise ValueError(f"cannot widen a window from {self.window} to {window}")
        cut = self.window - window
        sl = (slice(cut, self.heights.shape[0] - cut),) * self.d
        return replace(self, window=window, heights=self.heights[sl].copy())

    def to_field(self) -> HeightField:
        """Raw pinned-zero heights on the full box (the window must be the whole box)."""
        if self.window != self.box.N:
            raise ValueError("raw heights are only known when the window is the full box")
        return HeightField.from_heights(self.box, self.heights + self.raw_origin)


def recenter(h: Union[HeightField, CenteredSample]) -> CenteredSample:
    if isinstance(h, CenteredSample):
        zero = h.value(origin(h.d))
        return replace(h, heights=h.heights - zero, raw_origin=h.raw_origin + zero)
    if not h.box.contains(origin(h.d)):
        raise OutsideBoxError("the origin is not in the box")
    raw = h.value(origin(h.d))
    return CenteredSample(
        box=h.box,
        window=h.box.N,
        heights=(h.heights - raw).astype(np.int64),
        raw_origin=raw,
    )


@dataclass(frozen=True)
class LatticeSymmetry:
    """Signed axis permutation acting by ``s(x)[i] = signs[i] * x[perm[i]]``."""

    perm: Tuple[int, ...]
    signs: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"{self.perm} is not a permutation of 0..{len(self.perm) - 1}")
        if len(self.signs) != len(self.perm) or any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be a +1/-1 tuple matching the permutation")

    @classmethod
    def identity(cls, d: int) -> "LatticeSymmetry":
        return cls(tuple(range(d)), (1,) * d)

    @classmethod
    def reflection(cls, d: int, axis: int = 0) -> "LatticeSymmetry":
        return cls(tuple(range(d)), tuple(-1 if i == axis else 1 for i in range(d)))

    @property
    def d(self) -> int:
        return len(self.perm)

    def apply_to_site(self, x: Sequence[int]) -> Site:
        return tuple(self.signs[i] * x[self.perm[i]] for i in range(self.d))

    def compose(self, first: "LatticeSymmetry") -> "LatticeSymmetry":
        """``self ∘ first``: apply ``first``, then ``self``."""
        perm = tuple(first.perm[self.perm[i]] for i in range(self.d))
        signs = tuple(self.signs[i] * first.signs[self.perm[i]] for i in range(self.d))
        return LatticeSymmetry(perm, signs)

    def inverse(self) -> "LatticeSymmetry":
        inv = [0] * self.d
        for i, p in enumerate(self.perm):
            inv[p] = i
        return LatticeSymmetry(tuple(inv), tuple(self.signs[inv[j]] for j in range(self.d)))

    def transform_array(self, arr: np.ndarray) -> np.ndarray:
        """Array with ``out[s(y)] = arr[y]`` for a box-centred array."""
        out = np.transpose(arr, self.perm)
        flips = tuple(i for i, s in enumerate(self.signs) if s < 0)
        if flips:
            out = np.flip(out, axis=flips)
        return np.ascontiguousarray(out)


def all_symmetries(d: int) -> List[LatticeSymmetry]:
    return [
        LatticeSymmetry(perm, signs)
        for perm in itertools.permutations(range(d))
        for signs in itertools.product((1, -1), repeat=d)
    ]


def apply_symmetry(s: LatticeSymmetry, h: HeightField) -> HeightField:
    if s.d != h.d:
        raise DimensionMismatchError(f"{s.d}-dimensional symmetry on a {h.d}-dimensional field")
    return HeightField(h.box, s.transform_array(h.padded), h.boundary)


def sites_within(box: BoxSpec, radius: int) -> Iterable[Site]:
    """Box sites with sup-norm at most ``radius``, in canonical order."""
    r = min(radius, box.N)
    return itertools.product(range(-r, r + 1), repeat=box.d)
