"""Parameterized random systems and the cocycle they generate.

A system is either a discrete map family or a scalar random ODE whose
time-one map is taken as the discrete skeleton. Noise enters once per unit
time interval: the symbol at fiber k drives the step from fiber k to k+1, so
the time-one map is a deterministic function of (lambda, xi_k, x) and the
cocycle law holds exactly by construction for discrete families.

Builtin families
    identity      x' = x (noise ignored); test fixture
    example1      piecewise map x -> x + x^2 + lambda*xi (x >= -1/2),
                                 x -> -x/2 + lambda*xi   (x <  -1/2)
    pitchfork     ODE x' = lambda*x - x^3 + eps*xi
    subcritical   ODE x' = lambda*x + x^3 + eps*xi
    tabulated     piecewise-linear 1D map loaded from CSV tables
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .errors import (
    ConfigurationError,
    DivergenceError,
    NoPreimageError,
    UsageError,
)

_FAMILY_CODES = {
    "identity": K.FAM_IDENTITY,
    "example1": K.FAM_EXAMPLE1,
    "pitchfork": K.FAM_PITCHFORK,
    "subcritical": K.FAM_SUBCRITICAL,
}

_DEFAULT_DOMAIN = {
    "identity": (-1.0, 1.0),
    "example1": (-1.0, 1.0),
    "pitchfork": (-1.2, 1.2),
    "subcritical": (-1.0, 1.0),
    "tabulated": None,  # taken from the table hull
}

# declared slack for sampled ODE enclosures (inflation = lipschitz * width / 2);
# scalar flows are monotone, so the corner hull is already the exact range of
# the integrated map and this only covers model/integrator error
_DEFAULT_LIPSCHITZ = {
    "pitchfork": 1.0,
    "subcritical": 1.0,
}

_INTEGRATOR_TOL = 1e-9


@dataclass(frozen=True)
class TabulatedMap:
    """Piecewise-linear 1D map given by knots; pieces are monotone segments."""

    x: tuple
    fx: tuple
    piece: tuple  # integer piece id per knot; same id = one monotone segment

    def __post_init__(self):
        xs = np.asarray(self.x, dtype=float)
        if xs.size < 2:
            raise ConfigurationError("tabulated map needs at least 2 knots")
        if np.any(np.diff(xs) <= 0):
            raise ConfigurationError("tabulated map knots must be strictly increasing")
        for pid in sorted(set(self.piece)):
            fy = [f for f, p in zip(self.fx, self.piece) if p == pid]
            d = np.diff(fy)
            if len(fy) >= 2 and not (np.all(d > 0) or np.all(d < 0)):
                raise ConfigurationError(
                    "tabulated map piece %d is not strictly monotone" % pid
                )

    @property
    def hull(self):
        return (self.x[0], self.x[-1])

    def __call__(self, v):
        if v < self.x[0] - 1e-12 or v > self.x[-1] + 1e-12:
            raise DivergenceError("tabulated map evaluated outside its knot hull")
        return float(np.interp(v, self.x, self.fx))

    def box_image(self, lo, hi):
        """Exact range of the piecewise-linear interpolant over [lo, hi]."""
        lo = max(lo, self.x[0])
        hi = min(hi, self.x[-1])
        vals = [self(lo), self(hi)]
        xs = np.asarray(self.x)
        inside = (xs > lo) & (xs < hi)
        vals.extend(float(f) for f, m in zip(self.fx, inside) if m)
        return min(vals), max(vals)

    def invert(self, y):
        """Solve f(x) = y per monotone piece; first piece (left to right) wins."""
        xs = np.asarray(self.x)
        fs = np.asarray(self.fx)
        for i in range(len(xs) - 1):
            if self.piece[i] != self.piece[i + 1]:
                continue
            a, b = fs[i], fs[i + 1]
            if (a - y) * (b - y) <= 0 and a != b:
                t = (y - a) / (b - a)
                return float(xs[i] + t * (xs[i + 1] - xs[i]))
        raise NoPreimageError("tabulated map: no piece attains the value %g" % y)


@dataclass(frozen=True)
class SystemDef:
    """A parameterized RDS: map family, parameter, domain and noise model."""

    kind: str  # 'discrete_map' | 'random_ode'
    family: str
    lam: float
    domain: tuple
    noise: object
    ode_substeps: int = 64
    noise_scale: float = 1.0  # forcing amplitude for ODE families (eps)
    lipschitz: float = 2.0
    table: TabulatedMap | None = None
    tables: tuple = ()  # ((lam, xi, TabulatedMap), ...) for per-(lam, xi) files
    transform: tuple | None = None  # affine conjugation (a, b) of the base family

    def __post_init__(self):
        lo, hi = self.domain
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
            raise ConfigurationError("system domain must be a nonempty closed interval")
        if not np.isfinite(self.lam):
            raise ConfigurationError("lambda must be finite")
        if self.kind == "random_ode" and self.ode_substeps < 8:
            raise ConfigurationError("ode_substeps must be >= 8")
        if self.kind not in ("discrete_map", "random_ode"):
            raise ConfigurationError("unknown system kind %r" % self.kind)

    def with_lambda(self, lam):
        return replace(self, lam=float(lam))


def make_system(family, lam, noise, domain=None, **kw):
    """Construct a SystemDef with per-family defaults filled in."""
    family = str(family)
    if family == "tabulated":
        table = kw.get("table")
        tables = kw.get("tables", ())
        if table is None and not tables:
            raise ConfigurationError("tabulated family needs a table")
        hull = table.hull if table is not None else tables[0][2].hull
        return SystemDef(
            kind="discrete_map",
            family="tabulated",
            lam=float(lam),
            domain=tuple(domain) if domain is not None else hull,
            noise=noise,
            table=table,
            tables=tuple(tables),
        )
    if family not in _FAMILY_CODES:
        raise ConfigurationError("unknown family %r" % family)
    kind = "random_ode" if family in ("pitchfork", "subcritical") else "discrete_map"
    dom = tuple(domain) if domain is not None else _DEFAULT_DOMAIN[family]
    lip = kw.get("lipschitz", _DEFAULT_LIPSCHITZ.get(family, 2.0))
    return SystemDef(
        kind=kind,
        family=family,
        lam=float(lam),
        domain=dom,
        noise=noise,
        ode_substeps=int(kw.get("ode_substeps", 64)),
        noise_scale=float(kw.get("noise_scale", 1.0)),
        lipschitz=float(lip),
    )


def _drive(sys, xi):
    """Additive forcing entering the step: lambda*xi (discrete) or eps*xi (ODE)."""
    if sys.kind == "random_ode":
        return sys.noise_scale * xi
    return sys.lam * xi


def _lookup_table(sys, xi):
    if sys.table is not None:
        return sys.table
    for lam, xv, tab in sys.tables:
        if lam == sys.lam and xv == xi:
            return tab
    raise ConfigurationError(
        "no table for (lambda=%g, xi=%g)" % (sys.lam, xi)
    )


def _map_points(sys, xi, x):
    """Batched time-one map at one fiber; x is a float array."""
    if sys.transform is not None:
        a, b = sys.transform
        base = replace(sys, transform=None)
        return a * _map_points(base, xi, (x - b) / a) + b
    if sys.family == "tabulated":
        tab = _lookup_table(sys, xi)
        return np.array([tab(v) for v in np.atleast_1d(x)], dtype=float)
    code = _FAMILY_CODES[sys.family]
    if sys.kind == "discrete_map":
        return K.discrete_points(code, x, _drive(sys, xi))
    return K.ode_points(code, x, sys.lam, _drive(sys, xi), sys.ode_substeps, 1.0)


def _invert_point(sys, xi, y):
    """Solve time_one_map(x) = y for x; backward ODE steps integrate reverse time."""
    if sys.transform is not None:
        a, b = sys.transform
        base = replace(sys, transform=None)
        return a * _invert_point(base, xi, (y - b) / a) + b
    if sys.family == "identity":
        return float(y)
    if sys.family == "tabulated":
        return _lookup_table(sys, xi).invert(y)
    if sys.family == "example1":
        lo, hi = sys.domain
        drive = sys.lam * xi
        disc = 1.0 + 4.0 * (y - drive)
        if disc >= 0.0:
            x = 0.5 * (-1.0 + math.sqrt(disc))
            if lo <= x <= hi:
                return x
        x = -2.0 * (y - drive)
        if x < -0.5 and lo <= x <= hi:
            return x
        raise NoPreimageError(
            "no preimage of %g in the domain for example1 (lambda*xi=%g)" % (y, drive)
        )
    code = _FAMILY_CODES[sys.family]
    out = K.ode_points(code, np.array([y], dtype=float), sys.lam, _drive(sys, xi),
                       sys.ode_substeps, -1.0)
    v = float(out[0])
    if not np.isfinite(v):
        raise NoPreimageError("backward integration diverged from %g" % y)
    return v


def time_one_map(sys, path, k, x):
    """phi(1, theta_k omega, x): one step driven by the symbol at fiber k."""
    xi = path.symbol_at(k)
    out = _map_points(sys, xi, np.array([x], dtype=float))
    v = float(out[0])
    if not np.isfinite(v):
        raise DivergenceError("time-one map diverged from x=%g (fiber %d)" % (x, k))
    return v


def cocycle_eval(sys, path, n, x):
    """phi(n, omega, x) by composing (inverse) time-one maps.

    For n < 0 honors phi(n, omega)^{-1} = phi(-n, theta_n omega): the step at
    fiber j is inverted for j = -1 down to n.
    """
    n = int(n)
    v = float(x)
    if n >= 0:
        for j in range(n):
            v = time_one_map(sys, path, j, v)
    else:
        for j in range(-1, n - 1, -1):
            xi = path.symbol_at(j)
            v = _invert_point(sys, xi, v)
            if not np.isfinite(v):
                raise DivergenceError("backward orbit diverged at fiber %d" % j)
    return v


@dataclass(frozen=True)
class CheckReport:
    passed: bool
    max_defect: float
    trials: int
    skipped: int
    detail: str = ""


def check_cocycle_property(sys, path, trials, tol, seed=0, max_n=4,
                           allow_negative=False):
    """Sample (s, t, x) and test phi(t+s, omega, x) = phi(t, theta_s omega, phi(s, omega, x)).

    Defaults to nonnegative s, t (the forward law composes identical float
    operations on both sides, so discrete families have defect exactly 0);
    allow_negative mixes in inverse steps, whose defect is bounded by the
    inverse-identity tolerance instead.
    """
    if trials < 1:
        raise UsageError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    lo_n = -max_n if allow_negative else 0
    lo, hi = sys.domain
    worst = 0.0
    skipped = 0
    for _ in range(int(trials)):
        s = int(rng.integers(lo_n, max_n + 1))
        t = int(rng.integers(lo_n, max_n + 1))
        x = float(rng.uniform(lo, hi))
        try:
            lhs = cocycle_eval(sys, path, t + s, x)
            mid = cocycle_eval(sys, path, s, x)
            rhs = cocycle_eval(sys, path.shift(s), t, mid)
        except (NoPreimageError, DivergenceError):
            skipped += 1
            continue
        worst = max(worst, abs(lhs - rhs))
    return CheckReport(passed=worst <= tol, max_defect=worst,
                       trials=int(trials), skipped=skipped)


@dataclass(frozen=True)
class ConjugacyDef:
    """Per-fiber homeomorphism alpha(omega, .): affine a_k x + b_k or tabulated monotone."""

    a: tuple = (1.0,)  # scalar tuple = fiber-constant
    b: tuple = (0.0,)
    k_lo: int = 0
    table: TabulatedMap | None = None
    table_inverse: TabulatedMap | None = None

    def __post_init__(self):
        if self.table is None:
            if any(av == 0.0 for av in self.a):
                raise ConfigurationError("conjugacy slope a must be nonzero on every fiber")
            if len(self.a) != len(self.b):
                raise ConfigurationError("conjugacy a/b length mismatch")
        else:
            if self.table_inverse is None:
                raise ConfigurationError("tabulated conjugacy needs a tabulated inverse")

    @classmethod
    def affine(cls, a, b):
        return cls(a=(float(a),), b=(float(b),))

    @property
    def fiber_constant(self):
        return self.table is not None or len(self.a) == 1

    def _coeff(self, k):
        if len(self.a) == 1:
            return self.a[0], self.b[0]
        i = k - self.k_lo
        if i < 0 or i >= len(self.a):
            raise UsageError("conjugacy has no coefficients for fiber %d" % k)
        return self.a[i], self.b[i]

    def apply(self, k, x):
        if self.table is not None:
            return self.table(x)
        a, b = self._coeff(k)
        return a * x + b

    def invert(self, k, y):
        if self.table is not None:
            return self.table_inverse(y)
        a, b = self._coeff(k)
        return (y - b) / a


def check_conjugacy(sys1, sys2, alpha, path, samples, tol, seed=0, max_n=4):
    """Test phi2(t, omega, alpha(omega, x)) = alpha(theta_t omega, phi1(t, omega, x)).

    Both systems are driven by the same path (same noise and window).
    """
    rng = np.random.default_rng(seed)
    lo, hi = sys1.domain
    worst = 0.0
    skipped = 0
    for _ in range(int(samples)):
        t = int(rng.integers(0, max_n + 1))
        x = float(rng.uniform(lo, hi))
        try:
            lhs = cocycle_eval(sys2, path, t, alpha.apply(0, x))
            rhs = alpha.apply(t, cocycle_eval(sys1, path, t, x))
        except (NoPreimageError, DivergenceError):
            skipped += 1
            continue
        worst = max(worst, abs(lhs - rhs))
    return CheckReport(passed=worst <= tol, max_defect=worst,
                       trials=int(samples), skipped=skipped)


def conjugate_system(sys, alpha):
    """Transport a system by a fiber-constant conjugacy: phi2 = alpha . phi1 . alpha^-1."""
    if not alpha.fiber_constant or alpha.table is not None:
        raise ConfigurationError(
            "conjugate_system needs a fiber-constant affine conjugacy"
        )
    a, b = alpha.a[0], alpha.b[0]
    lo, hi = sys.domain
    y0, y1 = a * lo + b, a * hi + b
    dom = (min(y0, y1), max(y0, y1))
    if sys.transform is None:
        tf = (a, b)
    else:
        a0, b0 = sys.transform
        tf = (a * a0, a * b0 + b)
    return replace(sys, transform=tf, domain=dom)
