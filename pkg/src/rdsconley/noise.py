"""Noise window driving the cocycles.

The abstract driving flow is realized concretely: a sample point is a finite
window of 2K+1 i.i.d. noise values indexed k in [-K, K], and the flow acts by
shifting the index. Shifts that would read outside the window fail loudly
(WindowExhaustedError) instead of extrapolating, so every downstream claim is
explicitly "at window radius K".
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, WindowExhaustedError

DEFAULT_WINDOW_RADIUS = 32


@dataclass(frozen=True)
class NoiseModel:
    """Distribution of one noise symbol. Kinds: constant, uniform, discrete."""

    kind: str
    value: float = 0.0
    lo: float = 0.0
    hi: float = 0.0
    values: tuple = ()
    weights: tuple = ()

    def __post_init__(self):
        if self.kind == "constant":
            if not np.isfinite(self.value):
                raise ConfigurationError("constant noise value must be finite")
        elif self.kind == "uniform":
            if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
                raise ConfigurationError("uniform noise bounds must be finite")
            if self.lo > self.hi:
                raise ConfigurationError(
                    "uniform noise needs lo <= hi, got lo=%g hi=%g" % (self.lo, self.hi)
                )
        elif self.kind == "discrete":
            if len(self.values) == 0:
                raise ConfigurationError("discrete noise needs at least one value")
            if len(self.values) != len(self.weights):
                raise ConfigurationError("discrete noise values/weights length mismatch")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0):
                raise ConfigurationError("discrete noise weights must be nonnegative")
            if abs(float(w.sum()) - 1.0) > 1e-12:
                raise ConfigurationError("discrete noise weights must sum to 1 (within 1e-12)")
        else:
            raise ConfigurationError("unknown noise kind %r" % self.kind)

    @classmethod
    def constant(cls, c):
        return cls(kind="constant", value=float(c))

    @classmethod
    def uniform(cls, lo, hi):
        return cls(kind="uniform", lo=float(lo), hi=float(hi))

    @classmethod
    def discrete(cls, values, weights):
        return cls(
            kind="discrete",
            values=tuple(float(v) for v in values),
            weights=tuple(float(w) for w in weights),
        )

    @property
    def support(self):
        """Closed interval containing every symbol the model can emit."""
        if self.kind == "constant":
            return (self.value, self.value)
        if self.kind == "uniform":
            return (self.lo, self.hi)
        return (min(self.values), max(self.values))


@dataclass(frozen=True)
class NoisePath:
    """One realized noise window; immutable, safe to share across tasks."""

    symbols: np.ndarray
    radius: int
    seed: int
    offset: int = 0

    def symbol_at(self, k):
        """Return the symbol at relative index k (i.e. after the current shift)."""
        j = self.offset + int(k)
        if abs(j) > self.radius:
            raise WindowExhaustedError(
                "symbol index %d outside window radius %d (offset %d)"
                % (k, self.radius, self.offset)
            )
        return float(self.symbols[self.radius + j])

    def shift(self, t):
        """Advance the window position by t steps (the driving flow)."""
        j = self.offset + int(t)
        if abs(j) > self.radius:
            raise WindowExhaustedError(
                "shift by %d leaves window radius %d (offset %d)"
                % (t, self.radius, self.offset)
            )
        return replace(self, offset=j)

    def __eq__(self, other):
        if not isinstance(other, NoisePath):
            return NotImplemented
        return (
            self.radius == other.radius
            and self.seed == other.seed
            and self.offset == other.offset
            and np.array_equal(self.symbols, other.symbols)
        )


def sample_path(model, K, seed):
    """Draw a NoisePath of 2K+1 i.i.d. symbols, deterministic in (model, K, seed)."""
    K = int(K)
    if K < 1:
        raise ConfigurationError("window radius K must be >= 1, got %d" % K)
    n = 2 * K + 1
    if model.kind == "constant":
        symbols = np.full(n, model.value, dtype=np.float64)
    elif model.kind == "uniform":
        rng = np.random.default_rng(seed)
        symbols = rng.uniform(model.lo, model.hi, size=n)
    else:
        rng = np.random.default_rng(seed)
        symbols = rng.choice(np.asarray(model.values, dtype=np.float64), size=n,
                             p=np.asarray(model.weights, dtype=np.float64))
    symbols.setflags(write=False)
    return NoisePath(symbols=symbols, radius=K, seed=int(seed))


def shift(path, t):
    """Module-level alias of NoisePath.shift."""
    return path.shift(t)


def symbol_at(path, k):
    """Module-level alias of NoisePath.symbol_at."""
    return path.symbol_at(k)
