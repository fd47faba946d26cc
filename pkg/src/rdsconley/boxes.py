"""Uniform box grids, fibered box sets, rigorous image enclosures and the
fibered transition graph.

Everything is 1D: the builtin families are scalar maps/ODEs. Successor sets of
a box are contiguous index ranges (the enclosure is an interval), which keeps
the graph as four dense arrays and makes the pruning kernels trivial to
vectorize.

Tie rule: a grid box that touches an enclosure only on a shared face still
counts as a successor; over-approximation always errs outward. Coordinates
within 1e-9 grid units of an edge are snapped to it so decimal-aligned
geometry behaves as written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .errors import ConfigurationError, UsageError
from .systems import _FAMILY_CODES, _drive, _lookup_table

_SNAP = 1e-9
_INTEGRATOR_TOL = 1e-9


@dataclass(frozen=True)
class BoxGrid:
    """Uniform partition of a closed interval into n boxes."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.hi <= self.lo:
            raise ConfigurationError("grid domain must have positive length")
        if self.n < 4:
            raise ConfigurationError("grid needs at least 4 boxes per coordinate")

    @property
    def width(self):
        return (self.hi - self.lo) / self.n

    def edge(self, i):
        return self.lo + (self.hi - self.lo) * (i / self.n)

    def box_bounds(self, i):
        return self.edge(i), self.edge(i + 1)

    def index_of(self, x):
        """Box containing x (right-continuous; clipped to the grid)."""
        u = (x - self.lo) * self.n / (self.hi - self.lo)
        return int(np.clip(math.floor(u), 0, self.n - 1))

    def _coord(self, x):
        u = (x - self.lo) * self.n / (self.hi - self.lo)
        r = round(u)
        if abs(u - r) <= _SNAP * max(1.0, abs(u)):
            u = float(r)
        return u

    def coords(self, x):
        """Vectorized grid coordinates with edge snapping."""
        u = (np.asarray(x, dtype=float) - self.lo) * self.n / (self.hi - self.lo)
        r = np.round(u)
        snap = np.abs(u - r) <= _SNAP * np.maximum(1.0, np.abs(u))
        return np.where(snap, r, u)

    def touched_range(self, elo, ehi):
        """Inclusive index range of boxes intersecting [elo, ehi], face ties included."""
        if not (np.isfinite(elo) and np.isfinite(ehi)):
            return 0, -1
        i0 = math.ceil(self._coord(elo)) - 1
        i1 = math.floor(self._coord(ehi))
        i0 = max(i0, 0)
        i1 = min(i1, self.n - 1)
        return i0, i1

    def needed_range(self, elo, ehi):
        """Inclusive range of boxes whose union must be present to cover [elo, ehi]."""
        i0 = math.floor(self._coord(elo))
        i1 = math.ceil(self._coord(ehi)) - 1
        return max(i0, 0), min(i1, self.n - 1)

    def covers(self, mask, elo, ehi):
        """True iff [elo, ehi] lies inside the closed union of mask's boxes."""
        if not (np.isfinite(elo) and np.isfinite(ehi)):
            return False
        if elo < self.lo - 0.0 or ehi > self.hi + 0.0:
            return False
        i0, i1 = self.needed_range(elo, ehi)
        if i1 < i0:
            return True  # degenerate sliver on an edge
        return bool(mask[i0 : i1 + 1].all())


def build_grid(domain, target_width):
    """Grid with counts = ceil(side / target_width); actual width <= target."""
    lo, hi = float(domain[0]), float(domain[1])
    if target_width <= 0:
        raise ConfigurationError("target box width must be > 0")
    if hi <= lo:
        raise ConfigurationError("degenerate domain %r" % (domain,))
    n = max(4, math.ceil((hi - lo) / target_width - 1e-12))
    return BoxGrid(lo=lo, hi=hi, n=n)


def subdivide(grid, factor):
    """Refine: widths divided by factor, counts multiplied."""
    factor = int(factor)
    if factor < 2:
        raise UsageError("subdivision factor must be >= 2")
    return replace(grid, n=grid.n * factor)


class RandomBoxSet:
    """A fibered family of box collections over fibers k_lo..k_hi (inclusive)."""

    __slots__ = ("grid", "k_lo", "masks")

    def __init__(self, grid, k_lo, masks):
        self.grid = grid
        self.k_lo = int(k_lo)
        masks = np.asarray(masks, dtype=bool)
        if masks.ndim != 2 or masks.shape[1] != grid.n:
            raise UsageError("masks must have shape (n_fibers, grid.n)")
        self.masks = masks

    # -- constructors -------------------------------------------------------
    @classmethod
    def full(cls, grid, k_lo, k_hi):
        return cls(grid, k_lo, np.ones((k_hi - k_lo + 1, grid.n), dtype=bool))

    @classmethod
    def empty(cls, grid, k_lo, k_hi):
        return cls(grid, k_lo, np.zeros((k_hi - k_lo + 1, grid.n), dtype=bool))

    @classmethod
    def from_interval(cls, grid, k_lo, k_hi, span):
        """Fiber-constant set of the boxes covering [span[0], span[1]].

        Covering semantics: a box touching the span only on a shared face is
        not included (contrast with successor ranges, where ties count).
        """
        i0, i1 = grid.needed_range(span[0], span[1])
        m = np.zeros((k_hi - k_lo + 1, grid.n), dtype=bool)
        if i1 >= i0:
            m[:, i0 : i1 + 1] = True
        return cls(grid, k_lo, m)

    # -- basic queries ------------------------------------------------------
    @property
    def k_hi(self):
        return self.k_lo + self.masks.shape[0] - 1

    def row(self, k):
        i = k - self.k_lo
        if i < 0 or i >= self.masks.shape[0]:
            raise UsageError("fiber %d outside box-set range [%d, %d]"
                             % (k, self.k_lo, self.k_hi))
        return self.masks[i]

    def fiber_ids(self, k):
        return np.nonzero(self.row(k))[0]

    def is_empty(self):
        return not self.masks.any()

    def box_count(self):
        return int(self.masks.sum())

    def fiber_span(self, k):
        """Hull [lo, hi] of the fiber's boxes, or None when empty."""
        ids = self.fiber_ids(k)
        if ids.size == 0:
            return None
        return self.grid.edge(int(ids[0])), self.grid.edge(int(ids[-1]) + 1)

    def __eq__(self, other):
        return (
            isinstance(other, RandomBoxSet)
            and self.grid == other.grid
            and self.k_lo == other.k_lo
            and np.array_equal(self.masks, other.masks)
        )

    # -- set algebra (fiberwise) --------------------------------------------
    def _aligned(self, other):
        if self.grid != other.grid or self.k_lo != other.k_lo \
                or self.masks.shape != other.masks.shape:
            raise UsageError("box sets are not aligned (grid or fiber range differ)")

    def union(self, other):
        self._aligned(other)
        return RandomBoxSet(self.grid, self.k_lo, self.masks | other.masks)

    def intersection(self, other):
        self._aligned(other)
        return RandomBoxSet(self.grid, self.k_lo, self.masks & other.masks)

    def difference(self, other):
        self._aligned(other)
        return RandomBoxSet(self.grid, self.k_lo, self.masks & ~other.masks)

    def dilate(self, rings=1, within=None):
        """Chebyshev dilation by whole rings, optionally clipped to another set."""
        m = self.masks
        for _ in range(int(rings)):
            grown = m.copy()
            grown[:, 1:] |= m[:, :-1]
            grown[:, :-1] |= m[:, 1:]
            m = grown
        if within is not None:
            self._aligned(within)
            m = m & within.masks
        return RandomBoxSet(self.grid, self.k_lo, m)

    def restrict(self, k_lo, k_hi):
        if k_lo < self.k_lo or k_hi > self.k_hi:
            raise UsageError("restriction outside fiber range")
        return RandomBoxSet(self.grid, k_lo,
                            self.masks[k_lo - self.k_lo : k_hi - self.k_lo + 1])


def combinatorial_interior(N):
    """One-ring erosion per fiber; boxes touching the domain boundary drop out."""
    m = N.masks
    inner = m.copy()
    inner[:, 1:] &= m[:, :-1]
    inner[:, :-1] &= m[:, 1:]
    inner[:, 0] = False
    inner[:, -1] = False
    return RandomBoxSet(N.grid, N.k_lo, inner)


def _box_images_batch(sys, xi, lo, hi):
    """Enclosure intervals for a batch of boxes at one fiber."""
    if sys.transform is not None:
        a, b = sys.transform
        base = replace(sys, transform=None)
        if a >= 0:
            blo, bhi = (lo - b) / a, (hi - b) / a
        else:
            blo, bhi = (hi - b) / a, (lo - b) / a
        elo, ehi = _box_images_batch(base, xi, blo, bhi)
        if a >= 0:
            return a * elo + b, a * ehi + b
        return a * ehi + b, a * elo + b
    if sys.family == "tabulated":
        tab = _lookup_table(sys, xi)
        out_lo = np.empty_like(lo)
        out_hi = np.empty_like(hi)
        for i in range(lo.shape[0]):
            out_lo[i], out_hi[i] = tab.box_image(lo[i], hi[i])
        return out_lo, out_hi
    code = _FAMILY_CODES[sys.family]
    if sys.kind == "discrete_map":
        return K.discrete_box_images(code, lo, hi, _drive(sys, xi))
    w = float(np.max(hi - lo)) if lo.size else 0.0
    pad = sys.lipschitz * w * 0.5 + _INTEGRATOR_TOL
    cap = 4.0 * max(1.0, abs(sys.domain[0]), abs(sys.domain[1]))
    return K.ode_box_images(code, lo, hi, sys.lam, _drive(sys, xi),
                            sys.ode_substeps, pad, cap)


def enclose_image(sys, path, k, box):
    """Interval guaranteed to contain the image of `box` under the fiber-k map.

    Returns (lo, hi); (nan, nan) marks a divergent (escaping) enclosure.
    """
    xi = path.symbol_at(k)
    lo = np.array([float(box[0])])
    hi = np.array([float(box[1])])
    elo, ehi = _box_images_batch(sys, xi, lo, hi)
    return float(elo[0]), float(ehi[0])


class FiberedTransitionGraph:
    """Successor ranges fiber k -> k+1 for every grid box, plus escape flags.

    succ_lo/succ_hi have shape (F, B) with F = k_hi - k_lo transitions;
    escape[t, b] is True when box b's enclosure at fiber k_lo+t leaves the
    domain (or diverges). img_lo/img_hi retain the float enclosures so
    downstream containment tests need no re-integration.
    """

    __slots__ = ("grid", "k_lo", "succ_lo", "succ_hi", "escape", "img_lo", "img_hi")

    def __init__(self, grid, k_lo, succ_lo, succ_hi, escape, img_lo, img_hi):
        self.grid = grid
        self.k_lo = int(k_lo)
        self.succ_lo = succ_lo
        self.succ_hi = succ_hi
        self.escape = escape
        self.img_lo = img_lo
        self.img_hi = img_hi

    def img_row(self, k):
        t = k - self.k_lo
        if t < 0 or t >= self.img_lo.shape[0]:
            raise UsageError("no transition data for fiber %d" % k)
        return self.img_lo[t], self.img_hi[t]

    @property
    def k_hi(self):
        return self.k_lo + self.succ_lo.shape[0]

    def trans_row(self, k):
        t = k - self.k_lo
        if t < 0 or t >= self.succ_lo.shape[0]:
            raise UsageError("no transition data for fiber %d" % k)
        return self.succ_lo[t], self.succ_hi[t], self.escape[t]

    def successors(self, k, b):
        lo, hi, _ = self.trans_row(k)
        if lo[b] > hi[b]:
            return np.empty(0, dtype=np.int64)
        return np.arange(lo[b], hi[b] + 1, dtype=np.int64)


def build_transition_graph(sys, path, N):
    """Assemble the fibered graph over N's grid and fiber range.

    Rows are computed for every grid box (N's fibers are a subset); output is
    deterministic in (sys, path, grid).
    """
    grid = N.grid
    B = grid.n
    k_lo, k_hi = N.k_lo, N.k_hi
    F = k_hi - k_lo
    lo_edges = np.array([grid.edge(i) for i in range(B)])
    hi_edges = np.array([grid.edge(i + 1) for i in range(B)])
    succ_lo = np.zeros((F, B), dtype=np.int64)
    succ_hi = np.full((F, B), -1, dtype=np.int64)
    escape = np.zeros((F, B), dtype=bool)
    img_lo = np.empty((F, B), dtype=np.float64)
    img_hi = np.empty((F, B), dtype=np.float64)
    for t in range(F):
        xi = path.symbol_at(k_lo + t)
        elo, ehi = _box_images_batch(sys, xi, lo_edges, hi_edges)
        img_lo[t] = elo
        img_hi[t] = ehi
        finite = np.isfinite(elo) & np.isfinite(ehi)
        escape[t] = ~finite | (elo < grid.lo) | (ehi > grid.hi)
        c_lo = grid.coords(np.where(finite, elo, grid.lo))
        c_hi = grid.coords(np.where(finite, ehi, grid.lo))
        raw_i0 = np.ceil(c_lo).astype(np.int64) - 1
        raw_i1 = np.floor(c_hi).astype(np.int64)
        empty = ~finite | (raw_i1 < 0) | (raw_i0 > B - 1) | (raw_i1 < raw_i0)
        i0 = np.clip(raw_i0, 0, B - 1)
        i1 = np.clip(raw_i1, 0, B - 1)
        succ_lo[t] = np.where(empty, 0, i0)
        succ_hi[t] = np.where(empty, -1, i1)
    return FiberedTransitionGraph(grid, k_lo, succ_lo, succ_hi, escape,
                                  img_lo, img_hi)
