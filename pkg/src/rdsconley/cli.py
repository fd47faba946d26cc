"""Command-line interface: configuration-driven batch runs.

Subcommands: simulate, invariant, primes, index, sweep, check-conjugacy,
check-cocycle. Reports are machine-first JSON with a CSV sidecar for sweeps;
every report embeds the fully-resolved configuration and seed list. Exit
status: 0 success, 1 detection positive with warnings (or a failed check),
2 configuration error, 3 refinement budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys as _sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import parse_config
from .errors import (
    ConfigurationError,
    FiltrationError,
    RdsConleyError,
    RefinementError,
    UsageError,
)
from .noise import NoiseModel, sample_path
from .primes import DecompSettings, count_M, prime_decomposition, sweep
from .systems import (
    ConjugacyDef,
    TabulatedMap,
    check_cocycle_property,
    check_conjugacy,
    cocycle_eval,
    conjugate_system,
    make_system,
)
from .boxes import RandomBoxSet, build_grid, build_transition_graph
from .topology import compute_inv

_SUBCOMMANDS = ("simulate", "invariant", "primes", "index", "sweep",
                "check-conjugacy", "check-cocycle")


def _sanitize(obj):
    """Convert numpy scalars/containers to plain JSON-safe Python values."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def render_json(obj):
    """Canonical JSON text: fixed key order, two-space indent, trailing newline."""
    return json.dumps(_sanitize(obj), indent=2) + "\n"


def _noise_from(cfg):
    kind = cfg.get("noise.kind")
    if kind == "constant":
        return NoiseModel.constant(cfg.get("noise.value"))
    if kind == "uniform":
        return NoiseModel.uniform(cfg.get("noise.lo"), cfg.get("noise.hi"))
    weights = cfg.get("noise.weights")
    return NoiseModel.discrete(cfg.get("noise.values"), weights)


_TABLE_NAME = re.compile(r"table_lam(?P<lam>-?[0-9.]+)_xi(?P<xi>-?[0-9.]+)\.csv$")


def _load_table_csv(path):
    xs, fs, pieces = [], [], []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("x,"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) < 2:
                raise ConfigurationError(
                    "%s line %d: expected x,fx[,piece]" % (path, lineno)
                )
            xs.append(float(parts[0]))
            fs.append(float(parts[1]))
            pieces.append(int(parts[2]) if len(parts) > 2 else 0)
    return TabulatedMap(x=tuple(xs), fx=tuple(fs), piece=tuple(pieces))


def _load_tables(table_dir):
    if table_dir is None or not os.path.isdir(table_dir):
        raise ConfigurationError("system.table_dir must name a directory of tables")
    tables = []
    for name in sorted(os.listdir(table_dir)):
        m = _TABLE_NAME.search(name)
        if m:
            tab = _load_table_csv(os.path.join(table_dir, name))
            tables.append((float(m.group("lam")), float(m.group("xi")), tab))
    if not tables:
        raise ConfigurationError("no table_lam<...>_xi<...>.csv files in %r" % table_dir)
    return tuple(tables)


def system_factory(cfg):
    """Return lam -> SystemDef per the configuration."""
    noise = _noise_from(cfg)
    fam = cfg.get("system.family")
    domain = cfg.get("system.domain")
    kw = {
        "ode_substeps": cfg.get("system.ode_substeps"),
        "noise_scale": cfg.get("system.noise_scale"),
    }
    if cfg.get("encl.lipschitz") is not None:
        kw["lipschitz"] = cfg.get("encl.lipschitz")
    if fam == "tabulated":
        tables = _load_tables(cfg.get("system.table_dir"))

        def make(lam):
            return make_system("tabulated", lam, noise, domain=domain, tables=tables)

        return make
    if fam == "example1_transported":
        base_lam = cfg.get("system.base_lambda")

        def make(lam):
            base = make_system("example1", base_lam, noise, domain=domain, **kw)
            return conjugate_system(base, ConjugacyDef.affine(1.0, 0.25 * lam))

        return make

    def make(lam):
        return make_system(fam, lam, noise, domain=domain, **kw)

    return make


def settings_from(cfg):
    return DecompSettings(
        width=cfg.get("grid.width"),
        refine_rounds=cfg.get("grid.refine_rounds"),
        margin=cfg.get("grid.margin"),
        ring_limit=cfg.get("index.ring_limit"),
        horizon=cfg.get("index.horizon"),
        K=cfg.get("noise.k"),
    )


def _seeds_from(cfg, seed_list):
    if seed_list:
        return [int(s) for s in seed_list.split(",") if s.strip() != ""]
    base = cfg.get("noise.seed")
    return [base + i for i in range(cfg.get("noise.realizations"))]


def _require_lambda(cfg):
    lam = cfg.get("system.lambda")
    if lam is None:
        raise ConfigurationError("missing required key 'system.lambda'")
    return lam


def _write_out(out_dir, name, text):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w") as f:
        f.write(text)


def _header(cfg, seeds):
    return {"config": cfg.resolved(), "seeds": list(seeds)}


def _cmd_simulate(cfg, args):
    lam = _require_lambda(cfg)
    make = system_factory(cfg)
    sysdef = make(lam)
    seeds = _seeds_from(cfg, args.seed_list)
    path = sample_path(sysdef.noise, cfg.get("noise.k"), seeds[0])
    x0 = cfg.get("system.x0")
    if x0 is None:
        x0 = 0.5 * (sysdef.domain[0] + sysdef.domain[1])
    steps = min(cfg.get("sim.steps"), cfg.get("noise.k"))
    lines = ["n,x"]
    x = x0
    lines.append("0,%s" % repr(float(x)))
    for n in range(1, steps + 1):
        try:
            x = cocycle_eval(sysdef, path.shift(n - 1), 1, x)
        except RdsConleyError:
            break
        lines.append("%d,%s" % (n, repr(float(x))))
    text = "\n".join(lines) + "\n"
    print(text, end="")
    _write_out(args.out, "orbit.csv", text)
    return 0


def _cmd_invariant(cfg, args):
    lam = _require_lambda(cfg)
    make = system_factory(cfg)
    sysdef = make(lam)
    seeds = _seeds_from(cfg, args.seed_list)
    st = settings_from(cfg)
    path = sample_path(sysdef.noise, st.K, seeds[0])
    grid = build_grid(sysdef.domain, st.width)
    N = RandomBoxSet.full(grid, -st.K, st.K)
    G = build_transition_graph(sysdef, path, N)
    inv = compute_inv(G, N, margin=st.margin)
    fibers = {}
    for k in inv.core_fibers():
        ids = inv.boxes.fiber_ids(k)
        spans = []
        if ids.size:
            start = prev = int(ids[0])
            for i in ids[1:]:
                i = int(i)
                if i != prev + 1:
                    spans.append([grid.edge(start), grid.edge(prev + 1)])
                    start = i
                prev = i
            spans.append([grid.edge(start), grid.edge(prev + 1)])
        fibers[str(k)] = spans
    doc = _header(cfg, seeds[:1])
    doc["lambda"] = lam
    doc["fibers"] = fibers
    text = render_json(doc)
    print(text, end="")
    _write_out(args.out, "invariant.json", text)
    return 0


def _decomp_doc(cfg, sysdef, seed, st):
    path = sample_path(sysdef.noise, st.K, seed)
    res = prime_decomposition(sysdef, path, settings=st)
    m = count_M(res)
    doc = {"lambda": sysdef.lam, "seed": seed}
    if isinstance(m, tuple):
        doc["M"] = m[0]
        doc["M_range"] = list(m)
    else:
        doc["M"] = m
    doc["primes"] = [
        {
            "bbox_fiber0": list(p.support_span),
            "trivial": None if p.fingerprint is None else p.fingerprint.trivial,
            "l_flags": p.l_profile(),
            "resolution": p.resolution_certified,
        }
        for p in res.primes
    ]
    doc["unresolved"] = [
        {"bbox": list(u.support_span), "resolution": u.resolution, "reason": u.reason}
        for u in res.unresolved
    ]
    doc["warnings"] = list(res.warnings)
    return doc, res


def _cmd_primes(cfg, args):
    lam = _require_lambda(cfg)
    make = system_factory(cfg)
    st = settings_from(cfg)
    seeds = _seeds_from(cfg, args.seed_list)
    doc = _header(cfg, seeds[:1])
    body, res = _decomp_doc(cfg, make(lam), seeds[0], st)
    doc.update(body)
    text = render_json(doc)
    print(text, end="")
    _write_out(args.out, "primes.json", text)
    return 3 if res.unresolved else 0


def _cmd_index(cfg, args):
    lam = _require_lambda(cfg)
    make = system_factory(cfg)
    st = settings_from(cfg)
    seeds = _seeds_from(cfg, args.seed_list)
    sysdef = make(lam)
    path = sample_path(sysdef.noise, st.K, seeds[0])
    res = prime_decomposition(sysdef, path, settings=st)
    doc = _header(cfg, seeds[:1])
    doc["lambda"] = lam
    fps = []
    for i, p in enumerate(res.primes):
        fp = p.fingerprint
        entry = {"prime": i, "bbox_fiber0": list(p.support_span)}
        if fp is None:
            entry["available"] = False
        else:
            entry["available"] = True
            entry["counts"] = list(fp.counts)
            entry["l_flags"] = [bool(b) for b in fp.l_flags]
            entry["trivial"] = fp.trivial
            entry["horizon"] = fp.horizon
        fps.append(entry)
    doc["fingerprints"] = fps
    doc["warnings"] = list(res.warnings)
    text = render_json(doc)
    print(text, end="")
    _write_out(args.out, "index.json", text)
    return 3 if res.unresolved else 0


def _cmd_sweep(cfg, args):
    lams = cfg.get("system.lambdas")
    if lams is None:
        raise ConfigurationError("missing required key 'system.lambdas'")
    make = system_factory(cfg)
    st = settings_from(cfg)
    seeds = _seeds_from(cfg, args.seed_list)
    mapper = None
    pool = None
    if args.threads != 1:
        workers = args.threads if args.threads > 0 else (os.cpu_count() or 1)
        pool = ThreadPoolExecutor(max_workers=workers)
        mapper = pool.map
    try:
        report = sweep(
            make,
            lams,
            realizations=len(seeds),
            seeds=seeds,
            settings=st,
            tol=cfg.get("sweep.tol"),
            mapper=mapper,
        )
    finally:
        if pool is not None:
            pool.shutdown()
    doc = report.to_dict(config=cfg.resolved())
    text = render_json(doc)
    print(text, end="")
    out = args.out or "."
    _write_out(out, cfg.get("output.json"), text)
    _write_out(out, cfg.get("output.csv"), "\n".join(report.csv_lines()) + "\n")
    has_warnings = any(r.get("warnings") for r in doc["runs"]) or any(
        c["warnings"] for c in doc["certificates"]
    )
    if doc["changes"] and has_warnings:
        return 1
    return 0


def _cmd_check_cocycle(cfg, args):
    lam = _require_lambda(cfg)
    make = system_factory(cfg)
    sysdef = make(lam)
    st = settings_from(cfg)
    seeds = _seeds_from(cfg, args.seed_list)
    path = sample_path(sysdef.noise, st.K, seeds[0])
    tol = 1e-9 if sysdef.kind == "discrete_map" else 1e-6
    rep = check_cocycle_property(sysdef, path, trials=100, tol=tol, seed=seeds[0])
    doc = _header(cfg, seeds[:1])
    doc.update({"passed": rep.passed, "max_defect": rep.max_defect,
                "trials": rep.trials, "skipped": rep.skipped, "tolerance": tol})
    text = render_json(doc)
    print(text, end="")
    _write_out(args.out, "check_cocycle.json", text)
    return 0 if rep.passed else 1


def _cmd_check_conjugacy(cfg, args):
    lam = _require_lambda(cfg)
    make = system_factory(cfg)
    sys1 = make(lam)
    alpha = ConjugacyDef.affine(cfg.get("conj.a"), cfg.get("conj.b"))
    lam2 = cfg.get("conj.lambda2")
    if lam2 is None:
        sys2 = conjugate_system(sys1, alpha)
    else:
        sys2 = make(lam2)
    st = settings_from(cfg)
    seeds = _seeds_from(cfg, args.seed_list)
    path = sample_path(sys1.noise, st.K, seeds[0])
    rep = check_conjugacy(sys1, sys2, alpha, path, samples=100, tol=1e-6,
                          seed=seeds[0])
    doc = _header(cfg, seeds[:1])
    doc.update({"passed": rep.passed, "max_defect": rep.max_defect,
                "samples": rep.trials, "skipped": rep.skipped})
    text = render_json(doc)
    print(text, end="")
    _write_out(args.out, "check_conjugacy.json", text)
    return 0 if rep.passed else 1


_HANDLERS = {
    "simulate": _cmd_simulate,
    "invariant": _cmd_invariant,
    "primes": _cmd_primes,
    "index": _cmd_index,
    "sweep": _cmd_sweep,
    "check-cocycle": _cmd_check_cocycle,
    "check-conjugacy": _cmd_check_conjugacy,
}


def dispatch(argv):
    """Run one subcommand; returns the process exit status."""
    parser = argparse.ArgumentParser(
        prog="rdsconley",
        description="Set-oriented bifurcation detection for random dynamical systems",
    )
    parser.add_argument("subcommand", choices=_SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="configuration file path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=0,
                        help="worker threads for sweeps (0 = auto)")
    parser.add_argument("--seed-list", default=None,
                        help="comma-separated seeds overriding noise.seed")
    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return 2
    try:
        with open(args.config) as f:
            cfg = parse_config(f.read())
        return _HANDLERS[args.subcommand](cfg, args)
    except (ConfigurationError, UsageError) as e:
        print("configuration error: %s" % e, file=_sys.stderr)
        return 2
    except (RefinementError, FiltrationError) as e:
        print("refinement budget exhausted: %s" % e, file=_sys.stderr)
        return 3
    except FileNotFoundError as e:
        print("configuration error: %s" % e, file=_sys.stderr)
        return 2


def main(argv=None):
    return dispatch(_sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    raise SystemExit(main())
