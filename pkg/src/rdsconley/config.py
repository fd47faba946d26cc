"""Run configuration: line-oriented `key = value` documents with dotted keys.

Unknown keys, duplicate keys and type mismatches are configuration errors
naming the key and line. Every report embeds the fully-resolved configuration
(defaults applied) so runs are reproducible from the report alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigurationError

_FAMILIES = ("example1", "identity", "pitchfork", "subcritical", "tabulated",
             "example1_transported")
_NOISE_KINDS = ("constant", "uniform", "discrete")


def _parse_float(s):
    return float(s)


def _parse_int(s):
    return int(s, 0) if s.lower().startswith("0x") else int(s)


def _parse_float_list(s):
    return tuple(float(v) for v in s.split(",") if v.strip() != "")


def _parse_str(s):
    return s


# key -> (parser, default); None default means "unset"
_SCHEMA = {
    "system.family": (_parse_str, None),
    "system.lambda": (_parse_float, None),
    "system.lambdas": (_parse_float_list, None),
    "system.domain": (_parse_float_list, None),
    "system.x0": (_parse_float, None),
    "system.base_lambda": (_parse_float, -0.2),
    "system.ode_substeps": (_parse_int, 64),
    "system.noise_scale": (_parse_float, 1.0),
    "system.table_dir": (_parse_str, None),
    "noise.kind": (_parse_str, "constant"),
    "noise.value": (_parse_float, 1.0),
    "noise.lo": (_parse_float, None),
    "noise.hi": (_parse_float, None),
    "noise.values": (_parse_float_list, None),
    "noise.weights": (_parse_float_list, None),
    "noise.k": (_parse_int, 32),
    "noise.seed": (_parse_int, 20260808),
    "noise.realizations": (_parse_int, 8),
    "grid.width": (_parse_float, 0.05),
    "grid.refine_rounds": (_parse_int, 3),
    "grid.margin": (_parse_int, 4),
    "encl.lipschitz": (_parse_float, None),
    "index.horizon": (_parse_int, 0),
    "index.ring_limit": (_parse_int, 5),
    "sweep.tol": (_parse_float, 0.02),
    "sim.steps": (_parse_int, 32),
    "conj.a": (_parse_float, 1.0),
    "conj.b": (_parse_float, 0.0),
    "conj.lambda2": (_parse_float, None),
    "output.json": (_parse_str, "report.json"),
    "output.csv": (_parse_str, "sweep.csv"),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully-resolved configuration values."""

    values: dict = field(default_factory=dict)

    def get(self, key):
        return self.values[key]

    def resolved(self):
        """Plain dict (JSON-safe) of every key with defaults applied."""
        out = {}
        for key in sorted(self.values):
            v = self.values[key]
            if isinstance(v, tuple):
                v = list(v)
            out[key] = v
        return out


def parse_config(text):
    """Parse and validate a configuration document."""
    raw = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(
                "line %d: expected key = value, got %r" % (lineno, stripped)
            )
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigurationError("line %d: unknown key %r" % (lineno, key))
        if key in raw:
            raise ConfigurationError(
                "line %d: duplicate key %r (first set on line %d)"
                % (lineno, key, lines[key])
            )
        parser, _default = _SCHEMA[key]
        try:
            raw[key] = parser(value)
        except ValueError:
            raise ConfigurationError(
                "line %d: cannot parse value %r for key %r" % (lineno, value, key)
            )
        lines[key] = lineno

    values = {}
    for key, (_parser, default) in _SCHEMA.items():
        values[key] = raw.get(key, default)

    _validate(values)
    return RunConfig(values=values)


def _validate(v):
    fam = v["system.family"]
    if fam is None:
        raise ConfigurationError("missing required key 'system.family'")
    if fam not in _FAMILIES:
        raise ConfigurationError(
            "system.family must be one of %s, got %r" % (", ".join(_FAMILIES), fam)
        )
    if v["grid.width"] <= 0:
        raise ConfigurationError("grid.width must be > 0")
    if v["grid.refine_rounds"] < 0:
        raise ConfigurationError("grid.refine_rounds must be >= 0")
    if v["grid.margin"] < 1:
        raise ConfigurationError("grid.margin must be >= 1")
    if v["noise.k"] < 1:
        raise ConfigurationError("noise.k must be >= 1")
    if v["noise.realizations"] < 1:
        raise ConfigurationError("noise.realizations must be >= 1")
    if v["index.ring_limit"] < 0:
        raise ConfigurationError("index.ring_limit must be >= 0")
    if v["sweep.tol"] <= 0:
        raise ConfigurationError("sweep.tol must be > 0")
    if v["system.ode_substeps"] < 8:
        raise ConfigurationError("system.ode_substeps must be >= 8")
    kind = v["noise.kind"]
    if kind not in _NOISE_KINDS:
        raise ConfigurationError(
            "noise.kind must be one of %s, got %r" % (", ".join(_NOISE_KINDS), kind)
        )
    if kind == "uniform" and (v["noise.lo"] is None or v["noise.hi"] is None):
        raise ConfigurationError("uniform noise needs noise.lo and noise.hi")
    if kind == "discrete" and (v["noise.values"] is None or v["noise.weights"] is None):
        raise ConfigurationError("discrete noise needs noise.values and noise.weights")
    dom = v["system.domain"]
    if dom is not None and (len(dom) != 2 or dom[1] <= dom[0]):
        raise ConfigurationError("system.domain must be 'lo,hi' with lo < hi")
    lams = v["system.lambdas"]
    if lams is not None:
        if len(lams) < 2:
            raise ConfigurationError("system.lambdas needs at least two values")
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ConfigurationError("system.lambdas must be strictly increasing")
