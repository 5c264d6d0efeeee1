"""Run orchestration: flat key = value configs, content-addressed run
directories, checksummed artifacts, resumable sweeps and deterministic
randomness.

A run is keyed by the hash of its canonicalized config plus the package
version; rerunning an identical config reuses completed entries and
reproduces bitwise-identical CSV output.  All randomized initializers draw
from counter-based generators keyed by (seed, name), so concurrency or
resume order cannot change the streams.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__
from .descent import SolverOptions
from .dynamics import EvolveOptions, EvolutionTrace, classify, evolve
from .fields import load_field, save_field
from .frequency import (
    GroundState,
    SweepRecord,
    find_omega_star,
    solve_beta,
    solve_gamma,
    sweep,
)
from .functionals import gn_ratio, rho_norms_piecewise, rho_profile
from .masses import MassCurveRecord, lf_check, mass_curve
from .params import DomainSpec, ModelParams
from .reference import solve_reference
from .fields import random_band_limited

ENV_OUTPUT_ROOT = "WGNLS_OUT"

EXIT_COMPLETE = 0
EXIT_FAILURE = 1
EXIT_PARTIAL = 2

SWEEP_COLUMNS = ["omega", "gamma", "beta", "mass_c", "y_fraction", "rd_reference"]
MASSCURVE_COLUMNS = ["c", "m_c", "omega_lagrange", "lf_discrepancy", "y_fraction"]
TRACE_COLUMNS = ["t", "mass", "energy", "K", "J", "z_R", "grad_norm"]


def rng_for(seed: int, name: str) -> np.random.Generator:
    """Counter-based generator keyed by the run seed and a stream name."""
    digest = hashlib.blake2b(
        f"{seed}:{name}".encode(), digest_size=16
    ).digest()
    key = int.from_bytes(digest, "little")
    return np.random.Generator(np.random.Philox(key=key))


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    params: ModelParams
    domain: DomainSpec
    seed: int = 0
    options: dict = dc_field(default_factory=dict)
    raw: dict = dc_field(default_factory=dict)

    def canonical(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))


_DEFAULTS = {
    ("model", "d"): "1",
    ("model", "m"): "1",
    ("model", "alpha"): "4.0",
    ("domain", "half_length"): "16.0",
    ("domain", "n_x"): "512",
    ("domain", "n_y"): "64",
    ("run", "seed"): "0",
}


def parse_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Flat INI-style config; sections model, domain, solver, run and one
    section named after the command carrying its arguments."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        read = cp.read(str(path))
        if not read:
            raise ConfigError(f"config file {path} not found or unreadable")
    for (section, key), val in _DEFAULTS.items():
        if not cp.has_section(section):
            cp.add_section(section)
        if not cp.has_option(section, key):
            cp.set(section, key, val)
    if overrides:
        for dotted, val in overrides.items():
            section, key = dotted.split(".", 1)
            if not cp.has_section(section):
                cp.add_section(section)
            cp.set(section, key, str(val))
    try:
        command = cp.get("run", "command")
    except configparser.NoOptionError as exc:
        raise ConfigError("run.command missing from config") from exc
    try:
        params = ModelParams(
            cp.getint("model", "d"), cp.getint("model", "m"),
            cp.getfloat("model", "alpha"),
        )
        domain = DomainSpec(
            cp.getfloat("domain", "half_length"), cp.getint("domain", "n_x"),
            cp.getint("domain", "n_y"),
        )
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(f"bad model/domain section: {exc}") from exc
    options = {}
    for section in cp.sections():
        for key, val in cp.items(section):
            options[f"{section}.{key}"] = val
    return RunConfig(
        command=command,
        params=params,
        domain=domain,
        seed=cp.getint("run", "seed"),
        options=options,
        raw=options,
    )


def solver_options_from(config: RunConfig) -> SolverOptions:
    opts = SolverOptions()
    get = config.options.get
    opts.tol = float(get("solver.tol", opts.tol))
    opts.max_iter = int(get("solver.max_iter", opts.max_iter))
    opts.floor_tol = float(get("solver.floor_tol", opts.floor_tol))
    opts.seed = config.seed
    return opts


@dataclass
class RunManifest:
    run_id: str
    config: dict
    seed: int
    status: str = "failed"
    outputs: list = dc_field(default_factory=list)
    entries: dict = dc_field(default_factory=dict)
    timings: dict = dc_field(default_factory=dict)
    code_version: str = __version__

    def path_for(self, root: Path) -> Path:
        return root / self.run_id / "manifest.json"

    def register(self, root: Path, rel_path: str) -> None:
        full = root / self.run_id / rel_path
        digest = sha256_file(full)
        self.outputs = [o for o in self.outputs if o["path"] != rel_path]
        self.outputs.append({"path": rel_path, "sha256": digest})

    def save(self, root: Path) -> None:
        path = self.path_for(root)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
        os.replace(tmp, path)


def load_manifest(root: Path, run_id: str) -> RunManifest | None:
    path = root / run_id / "manifest.json"
    if not path.exists():
        return None
    with open(path) as fh:
        data = json.load(fh)
    return RunManifest(**data)


def verify_manifest(root: Path, manifest: RunManifest) -> list[str]:
    """Paths whose checksum no longer validates."""
    bad = []
    for out in manifest.outputs:
        full = root / manifest.run_id / out["path"]
        if not full.exists() or sha256_file(full) != out["sha256"]:
            bad.append(out["path"])
    return bad


def output_root(explicit: str | Path | None = None) -> Path:
    if explicit is not None:
        return Path(explicit)
    return Path(os.environ.get(ENV_OUTPUT_ROOT, "runs"))


def run_id_for(config: RunConfig) -> str:
    payload = config.canonical() + "|" + __version__
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _groundstate_summary(gs: GroundState) -> dict:
    return {
        "omega": gs.omega,
        "constraint": gs.constraint,
        "value": gs.value,
        "converged": gs.converged,
        "iterations": gs.iterations,
        "el_residual": gs.el_residual,
        "boundary_mass_fraction": gs.boundary_mass_fraction,
        "pg_norm": gs.pg_norm,
        "status": gs.status,
        "report": gs.report.to_dict(),
    }


def _trace_rows(trace: EvolutionTrace) -> list[list]:
    rows = []
    for i in range(trace.times.size):
        rows.append([
            trace.times[i], trace.mass_t[i], trace.energy_t[i],
            trace.virial_K_t[i], trace.variance_J_t[i],
            trace.local_virial_zR_t[i], trace.grad_norm_t[i],
        ])
    return rows


def _float_list(spec: str) -> list[float]:
    items = [s for chunk in spec.split() for s in chunk.split(",") if s]
    return [float(s) for s in items]


def _read_values_file(path: str) -> list[float]:
    text = Path(path).read_text()
    return [
        float(tok)
        for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
        for tok in line.replace(",", " ").split()
    ]


def run(config: RunConfig, root: str | Path | None = None) -> tuple[RunManifest, int]:
    """Dispatch one configured pipeline; returns (manifest, exit code)."""
    root = output_root(root)
    run_id = run_id_for(config)
    run_dir = root / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(root, run_id)
    if manifest is None or manifest.config != config.raw:
        manifest = RunManifest(run_id=run_id, config=dict(config.raw),
                               seed=config.seed)
    handler = _COMMANDS.get(config.command)
    if handler is None:
        raise ConfigError(f"unknown command {config.command!r}")
    t0 = time.perf_counter()
    try:
        status = handler(config, manifest, run_dir)
    except Exception:
        manifest.status = "failed"
        manifest.save(root)
        raise
    manifest.timings[config.command] = manifest.timings.get(
        config.command, 0.0
    ) + (time.perf_counter() - t0)
    manifest.status = status
    manifest.save(root)
    code = EXIT_COMPLETE if status == "complete" else (
        EXIT_PARTIAL if status == "partial" else EXIT_FAILURE
    )
    return manifest, code


def _cmd_groundstate(config: RunConfig, manifest: RunManifest, run_dir: Path) -> str:
    omega = float(config.options["groundstate.omega"])
    constraint = config.options.get("groundstate.constraint", "K")
    opts = solver_options_from(config)
    solver = solve_gamma if constraint.upper() == "K" else solve_beta
    gs = solver(config.params, config.domain, omega, opts=opts)
    (run_dir / "groundstate.json").write_text(
        json.dumps(_groundstate_summary(gs), indent=2, sort_keys=True)
    )
    save_field(run_dir / "groundstate.wgnls", gs.field)
    manifest.register(run_dir.parent, "groundstate.json")
    manifest.register(run_dir.parent, "groundstate.wgnls")
    return "complete" if gs.converged else "partial"


def _cmd_reference(config: RunConfig, manifest: RunManifest, run_dir: Path) -> str:
    omega = float(config.options.get("reference.omega", 1.0))
    flat = ModelParams(config.params.d, 0, config.params.alpha)
    dom = DomainSpec(config.domain.half_length, config.domain.n_x, 0)
    ref = solve_reference(flat, dom, omega)
    payload = {"mass": ref.mass, "method": ref.method, "omega": omega,
               "rd_reference": (2.0 * math.pi) ** config.params.m
               * 0.5 * omega * ref.mass}
    (run_dir / "reference.json").write_text(json.dumps(payload, indent=2,
                                                       sort_keys=True))
    save_field(run_dir / "reference.wgnls", ref.profile)
    manifest.register(run_dir.parent, "reference.json")
    manifest.register(run_dir.parent, "reference.wgnls")
    return "complete"


def _cmd_sweep(config: RunConfig, manifest: RunManifest, run_dir: Path) -> str:
    if "sweep.omegas" in config.options:
        omegas = _read_values_file(config.options["sweep.omegas"])
    else:
        omegas = _float_list(config.options.get("sweep.omega_list", ""))
    omegas = sorted(omegas)
    opts = solver_options_from(config)
    adapt = config.options.get("sweep.adapt_domain", "false").lower() == "true"
    entries_dir = run_dir / "entries"
    entries_dir.mkdir(exist_ok=True)
    records: list[SweepRecord] = []
    pending: list[float] = []
    for i, om in enumerate(omegas):
        key = f"omega_{i:04d}"
        entry = entries_dir / f"{key}.json"
        if manifest.entries.get(key) == "complete" and entry.exists():
            data = json.loads(entry.read_text())
            records.append(SweepRecord(**data))
        else:
            pending.append((i, om))
    limit = int(config.options.get("sweep.max_new_entries", "1000000"))
    computed = 0
    # recompute the warm-start chain only from the first missing entry
    for i, om in pending:
        if computed >= limit:
            break
        key = f"omega_{i:04d}"
        chunk = sweep(
            config.params, config.domain, [om], opts=opts, adapt_domain=adapt,
        ) if not records else sweep(
            config.params, config.domain,
            [records[-1].omega, om], opts=opts, adapt_domain=adapt,
        )[-1:]
        rec = chunk[-1]
        (entries_dir / f"{key}.json").write_text(
            json.dumps(asdict(rec), sort_keys=True)
        )
        manifest.entries[key] = "complete"
        manifest.save(run_dir.parent)
        records.append(rec)
        computed += 1
    done = len(records) == len(omegas)
    records.sort(key=lambda r: r.omega)
    rows = [[r.omega, r.gamma, r.beta, r.mass_c, r.y_fraction, r.rd_reference]
            for r in records]
    _write_csv(run_dir / "sweep.csv", SWEEP_COLUMNS, rows)
    manifest.register(run_dir.parent, "sweep.csv")
    return "complete" if done else "partial"


def _cmd_threshold(config: RunConfig, manifest: RunManifest, run_dir: Path) -> str:
    lo = float(config.options["threshold.bracket_lo"])
    hi = float(config.options["threshold.bracket_hi"])
    tol = float(config.options.get("threshold.tol", 0.05 * (lo + hi) / 2))
    opts = solver_options_from(config)
    res = find_omega_star(config.params, config.domain, (lo, hi), tol, opts=opts)
    payload = {
        "omega_lo": res.omega_lo, "omega_hi": res.omega_hi,
        "omega_star": res.omega_star, "agree": res.agree,
        "value_bracket": list(res.value_bracket),
        "y_bracket": [v if math.isfinite(v) else None for v in res.y_bracket],
    }
    (run_dir / "threshold.json").write_text(json.dumps(payload, indent=2,
                                                       sort_keys=True))
    rows = [[r.omega, r.gamma, r.beta, r.mass_c, r.y_fraction, r.rd_reference]
            for r in res.probes]
    _write_csv(run_dir / "threshold_probes.csv", SWEEP_COLUMNS, rows)
    manifest.register(run_dir.parent, "threshold.json")
    manifest.register(run_dir.parent, "threshold_probes.csv")
    return "complete"


def _cmd_masscurve(config: RunConfig, manifest: RunManifest, run_dir: Path) -> str:
    if "masscurve.c_list_file" in config.options:
        c_list = _read_values_file(config.options["masscurve.c_list_file"])
    else:
        c_list = _float_list(config.options.get("masscurve.c_list", ""))
    c_list = sorted(c_list)
    opts = solver_options_from(config)
    entries_dir = run_dir / "entries"
    entries_dir.mkdir(exist_ok=True)
    records = []
    all_ok = True
    for i, c in enumerate(c_list):
        key = f"c_{i:04d}"
        entry = entries_dir / f"{key}.json"
        if manifest.entries.get(key) == "complete" and entry.exists():
            records.append(MassCurveRecord(**json.loads(entry.read_text())))
            continue
        rec = mass_curve(config.params, config.domain, [c], opts=opts,
                         seed=config.seed + i)[0]
        entry.write_text(json.dumps(asdict(rec), sort_keys=True))
        manifest.entries[key] = "complete"
        manifest.save(run_dir.parent)
        records.append(rec)
        all_ok = all_ok and rec.converged
    rows = [[r.c, r.m_c, r.omega_lagrange, r.lf_discrepancy, r.y_fraction]
            for r in records]
    _write_csv(run_dir / "masscurve.csv", MASSCURVE_COLUMNS, rows)
    manifest.register(run_dir.parent, "masscurve.csv")
    return "complete" if all_ok else "partial"


def _cmd_lf_check(config: RunConfig, manifest: RunManifest, run_dir: Path) -> str:
    omega = float(config.options["lf-check.omega"])
    opts = solver_options_from(config)
    rec, gs_g, gs_m = lf_check(config.params, config.domain, omega, opts=opts,
                               seed=config.seed)
    rows = [[rec.c, rec.m_c, rec.omega_lagrange, rec.lf_discrepancy,
             rec.y_fraction]]
    _write_csv(run_dir / "lf_check.csv", MASSCURVE_COLUMNS, rows)
    (run_dir / "lf_check.json").write_text(json.dumps({
        "omega": omega, "gamma": gs_g.value, "c": rec.c, "m_c": rec.m_c,
        "lf_discrepancy": rec.lf_discrepancy,
        "omega_lagrange": rec.omega_lagrange,
        "converged": rec.converged,
    }, indent=2, sort_keys=True))
    manifest.register(run_dir.parent, "lf_check.csv")
    manifest.register(run_dir.parent, "lf_check.json")
    return "complete" if rec.converged else "partial"


def _cmd_evolve(config: RunConfig, manifest: RunManifest, run_dir: Path) -> str:
    init_path = config.options["evolve.init"]
    u0 = load_field(init_path)
    t_end = float(config.options["evolve.t_end"])
    dt = float(config.options["evolve.dt"])
    eopts = EvolveOptions(
        sample_every=int(config.options.get("evolve.sample_every", 10)),
        order=int(config.options.get("evolve.order", 2)),
    )
    trace = evolve(u0, t_end, dt, eopts)
    summary = {
        "t_end": t_end, "dt": dt, "order": eopts.order,
        "samples": int(trace.times.size), "valid_samples": trace.valid_count,
        "aborted": trace.aborted,
    }
    if "evolve.classify" in config.options:
        c_str, nu_str = config.options["evolve.classify"].split(",")
        m_c = float(config.options["evolve.m_c"])
        label, D = classify(trace, float(c_str), float(nu_str), m_c)
        summary["classification"] = label
        summary["mei_D"] = D if math.isfinite(D) else None
    _write_csv(run_dir / "trace.csv", TRACE_COLUMNS, _trace_rows(trace))
    (run_dir / "evolve.json").write_text(json.dumps(summary, indent=2,
                                                    sort_keys=True))
    manifest.register(run_dir.parent, "trace.csv")
    manifest.register(run_dir.parent, "evolve.json")
    return "partial" if trace.aborted else "complete"


def _cmd_gn_test(config: RunConfig, manifest: RunManifest, run_dir: Path) -> str:
    count = int(config.options.get("gn-test.count", 1000))
    rng = rng_for(config.seed, "gn-test")
    ratios = []
    for _ in range(count):
        fld = random_band_limited(config.params, config.domain, rng)
        ratios.append(gn_ratio(fld))
    payload = {"count": count, "max_ratio": max(ratios), "min_ratio": min(ratios)}
    (run_dir / "gn_test.json").write_text(json.dumps(payload, indent=2,
                                                     sort_keys=True))
    manifest.register(run_dir.parent, "gn_test.json")
    return "complete"


def _cmd_rho_test(config: RunConfig, manifest: RunManifest, run_dir: Path) -> str:
    a = float(config.options.get("rho-test.a", 1.0))
    n_y = int(config.options.get("rho-test.n_y", 4096))
    alpha = config.params.alpha
    prof = rho_profile(a, alpha, n_y)
    h = 2.0 * math.pi / n_y
    trapz_l2 = float(np.sum(prof**2) * h)
    trapz_lp = float(np.sum(prof ** (alpha + 2.0)) * h)
    l2, lp = rho_norms_piecewise(prof, alpha)
    payload = {
        "a": a, "n_y": n_y, "l2": l2, "lp": lp,
        "trapezoid_l2": trapz_l2, "trapezoid_lp": trapz_lp,
        "below_2pi": l2 < 2.0 * math.pi,
        "norm_gap": abs(l2 - lp),
    }
    (run_dir / "rho_test.json").write_text(json.dumps(payload, indent=2,
                                                      sort_keys=True))
    manifest.register(run_dir.parent, "rho_test.json")
    return "complete"


_COMMANDS = {
    "groundstate": _cmd_groundstate,
    "reference": _cmd_reference,
    "sweep": _cmd_sweep,
    "threshold": _cmd_threshold,
    "masscurve": _cmd_masscurve,
    "lf-check": _cmd_lf_check,
    "evolve": _cmd_evolve,
    "gn-test": _cmd_gn_test,
    "rho-test": _cmd_rho_test,
}
