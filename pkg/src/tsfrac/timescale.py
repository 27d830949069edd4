"""Bounded time scales, jump operators and computational meshes.

A time scale is stored as an ordered tuple of disjoint closed segments
``(lo, hi)``; a segment with ``lo == hi`` is an isolated point.  Meshes put
every segment endpoint on a node and subdivide each non-degenerate segment
uniformly.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateScaleError, NotANodeError, NotInScaleError, OverlapError, ResolutionError

DEFAULT_NODE_CAP = 10**7


@dataclass(frozen=True)
class TimeScale:
    segments: tuple[tuple[float, float], ...]

    @property
    def a(self) -> float:
        return self.segments[0][0]

    @property
    def b(self) -> float:
        return self.segments[-1][1]

    def __contains__(self, t: float) -> bool:
        return self._locate(t) is not None

    def _locate(self, t: float) -> int | None:
        los = [s[0] for s in self.segments]
        k = bisect.bisect_right(los, t) - 1
        if k >= 0 and t <= self.segments[k][1]:
            return k
        return None

    def _require(self, t: float) -> int:
        k = self._locate(t)
        if k is None:
            raise NotInScaleError(f"{t!r} is not a point of the time scale")
        return k

    @property
    def isolated_points(self) -> list[float]:
        return [lo for lo, hi in self.segments if lo == hi]

    def to_json(self) -> dict:
        return {"segments": [[lo, hi] for lo, hi in self.segments]}


def build_time_scale(segments: Iterable[Sequence[float]]) -> TimeScale:
    """Normalize ``segments`` into a :class:`TimeScale`.

    Segments are sorted by their left end; touching segments are merged and
    overlapping ones rejected.
    """
    segs = [(float(lo), float(hi)) for lo, hi in segments]
    if not segs:
        raise DegenerateScaleError("a time scale needs at least one segment")
    for lo, hi in segs:
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DegenerateScaleError("segment endpoints must be finite")
        if lo > hi:
            raise OverlapError(f"segment ({lo}, {hi}) has lo > hi")
    segs.sort()
    merged = [segs[0]]
    for lo, hi in segs[1:]:
        plo, phi = merged[-1]
        if lo == phi:
            merged[-1] = (plo, max(phi, hi))
        elif lo < phi:
            raise OverlapError(f"segments ({plo}, {phi}) and ({lo}, {hi}) overlap")
        else:
            merged.append((lo, hi))
    if merged[0][0] == merged[-1][1]:
        raise DegenerateScaleError("time scale has a == b")
    return TimeScale(tuple(merged))


def sigma(ts: TimeScale, t: float) -> float:
    """Forward jump: the smallest point of ``ts`` strictly after ``t``."""
    k = ts._require(t)
    if t < ts.segments[k][1]:
        return t
    if k + 1 < len(ts.segments):
        return ts.segments[k + 1][0]
    return t


def rho(ts: TimeScale, t: float) -> float:
    """Backward jump: the largest point of ``ts`` strictly before ``t``."""
    k = ts._require(t)
    if t > ts.segments[k][0]:
        return t
    if k > 0:
        return ts.segments[k - 1][1]
    return t


def graininess(ts: TimeScale, t: float) -> float:
    return sigma(ts, t) - t


class Side(enum.Enum):
    DENSE = "dense"
    SCATTERED = "scattered"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class PointClass:
    """Left/right classification of a point; ``BOUNDARY`` marks ``a`` and ``b``."""

    left: Side
    right: Side

    @property
    def right_scattered(self) -> bool:
        return self.right is Side.SCATTERED

    @property
    def left_scattered(self) -> bool:
        return self.left is Side.SCATTERED

    @property
    def isolated(self) -> bool:
        return self.left is Side.SCATTERED and self.right is Side.SCATTERED

    @property
    def dense(self) -> bool:
        return self.left is Side.DENSE and self.right is Side.DENSE

    @property
    def label(self) -> str:
        if self.isolated:
            return "isolated"
        if self.dense:
            return "dense"
        if self.right is Side.SCATTERED:
            return "right-scattered"
        if self.left is Side.SCATTERED:
            return "left-scattered"
        if self.right is Side.DENSE:
            return "right-dense"
        if self.left is Side.DENSE:
            return "left-dense"
        return "boundary"


def classify(ts: TimeScale, t: float) -> PointClass:
    s, r = sigma(ts, t), rho(ts, t)
    if t == ts.b:
        right = Side.BOUNDARY
    else:
        right = Side.DENSE if s == t else Side.SCATTERED
    if t == ts.a:
        left = Side.BOUNDARY
    else:
        left = Side.DENSE if r == t else Side.SCATTERED
    return PointClass(left=left, right=right)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Nodes of a time scale with per-cell measure and kind.

    ``mu[i] = nodes[i+1] - nodes[i]`` for ``i < n-1`` and ``mu[-1] = 0``.
    ``scattered[i]`` is true when the open gap between nodes ``i`` and
    ``i+1`` lies outside the scale.
    """

    scale: TimeScale
    nodes: np.ndarray
    mu: np.ndarray
    scattered: np.ndarray
    h_max: float
    _index: dict = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        for arr in (self.nodes, self.mu, self.scattered):
            arr.setflags(write=False)
        self._index.update({float(t): i for i, t in enumerate(self.nodes)})

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def a(self) -> float:
        return self.scale.a

    @property
    def b(self) -> float:
        return self.scale.b

    @property
    def successor(self) -> np.ndarray:
        """Node successor per node; the last node maps to itself."""
        return np.append(self.nodes[1:], self.nodes[-1])

    @property
    def cell_kinds(self) -> list[str]:
        return ["scattered" if s else "dense" for s in self.scattered]

    @property
    def dense_cells(self) -> int:
        return int((~self.scattered).sum())

    @property
    def scattered_cells(self) -> int:
        return int(self.scattered.sum())

    @property
    def purely_scattered(self) -> bool:
        return bool(self.scattered.all())

    def index(self, t: float) -> int:
        try:
            return self._index[float(t)]
        except KeyError:
            raise NotANodeError(f"{t!r} is not a mesh node") from None

    def segment_boundaries(self) -> list[float]:
        return sorted({x for seg in self.scale.segments for x in seg})

    def isolated_mask(self) -> np.ndarray:
        iso = set(self.scale.isolated_points)
        return np.array([float(t) in iso for t in self.nodes])


def _cells_for(lo: float, hi: float, h_max: float) -> int:
    if lo == hi:
        return 0
    # tolerate representation error in (hi - lo) / h_max landing just above an integer
    return max(1, math.ceil((hi - lo) / h_max * (1 - 1e-12)))


def build_mesh(ts: TimeScale, h_max: float, node_cap: int = DEFAULT_NODE_CAP) -> Mesh:
    if not h_max > 0:
        raise ValueError("h_max must be positive")
    counts = [_cells_for(lo, hi, h_max) for lo, hi in ts.segments]
    total = sum(c + 1 for c in counts)
    if total > node_cap:
        raise ResolutionError(f"mesh would have {total} nodes (cap {node_cap})")
    pieces, kinds = [], []
    for k, ((lo, hi), c) in enumerate(zip(ts.segments, counts)):
        if c == 0:
            pts = np.array([lo])
        else:
            pts = lo + (hi - lo) * (np.arange(c + 1) / c)
            pts[0], pts[-1] = lo, hi
        pieces.append(pts)
        kinds.extend([False] * c)
        if k + 1 < len(ts.segments):
            kinds.append(True)
    nodes = np.concatenate(pieces)
    mu = np.append(np.diff(nodes), 0.0)
    return Mesh(scale=ts, nodes=nodes, mu=mu, scattered=np.array(kinds, dtype=bool), h_max=float(h_max))


PRESETS: dict[str, tuple[tuple[float, float], ...]] = {
    "unit-interval": ((0.0, 1.0),),
    "integer-4": ((0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)),
    "mixed": ((0.0, 0.0), (1.0, 2.0), (3.0, 3.0)),
}


def preset(name: str) -> TimeScale:
    try:
        return build_time_scale(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def parse_scale_text(text: str) -> TimeScale:
    """Parse the line format ``lo hi`` (``#`` starts a comment)."""
    segs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 1:
            parts = parts * 2
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'lo hi', got {raw!r}")
        segs.append((float(parts[0]), float(parts[1])))
    return build_time_scale(segs)
