"""Command-line front end.

Usage::

    geoflow verify|evolve|decompose|detect|identities --config run.json
            [--out DIR] [--n N] [--mode spectral|fd4]

Exit codes: 0 consistent pass / success, 1 consistent fail, 2 indeterminate
or inconsistent verdicts, 64 configuration error, 70 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import criteria
from .errors import ConfigError, EpsTooSmall, GeoflowError, IntegrationError
from .euler_arnold import IntegratorConfig, evolve
from .fieldexpr import evaluate, parse
from .fields import MODES, GridSpec, MetricField, OneFormField, flat_omega, hamiltonian_field, inner_product, norm
from .geometry import SymTensorField, christoffels, gauss_curvature
from .hodge import exact_part, harmonic_basis, hodge_decompose
from .io import write_field_csv, write_json, write_pgm

SCHEMA_VERSION = "geoflow.report/1"
COMMANDS = ("verify", "evolve", "decompose", "detect", "identities")
EXIT_OK, EXIT_FAIL, EXIT_UNDECIDED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 64, 70
IDENTITY_TOL = 1e-6


@dataclass
class RunConfig:
    n: int = 64
    mode: str = "spectral"
    metric: dict = field(default_factory=lambda: {"kind": "flat"})
    experiment: dict = field(default_factory=dict)
    out_dir: str | None = None
    snapshots: bool = False
    heatmaps: bool = False

    @property
    def grid(self):
        return GridSpec(self.n, self.mode)


def _expr(value, where):
    if not isinstance(value, str):
        raise ConfigError(f"{where} must be an expression string")
    try:
        return parse(value)
    except ConfigError as exc:
        raise type(exc)(f"{where}: {exc}") from None


def load_config(raw, n=None, mode=None):
    """Validate a decoded JSON config; ``n``/``mode`` override the grid block."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    grid = raw.get("grid", {})
    metric = dict(raw.get("metric", {"kind": "flat"}))
    output = raw.get("output", {})
    if not all(isinstance(b, dict) for b in (grid, metric, output)):
        raise ConfigError("grid, metric and output must be JSON objects")
    cfg = RunConfig(
        n=int(n if n is not None else grid.get("n", 64)),
        mode=str(mode if mode is not None else grid.get("mode", "spectral")),
        metric=metric,
        experiment={k: v for k, v in raw.items() if k not in ("grid", "metric", "output")},
        out_dir=output.get("dir"),
        snapshots=bool(output.get("snapshots", False)),
        heatmaps=bool(output.get("heatmaps", False)),
    )
    if cfg.mode not in MODES:
        raise ConfigError(f"grid.mode must be one of {MODES}")
    if cfg.n < 16 or cfg.n % 2:
        raise ConfigError("grid.n must be an even integer >= 16")
    kind = metric.get("kind", "flat")
    if kind == "conformal":
        _expr(metric.get("phi"), "metric.phi")
    elif kind == "general":
        for c in ("g11", "g12", "g22"):
            _expr(metric.get(c), f"metric.{c}")
    elif kind != "flat":
        raise ConfigError(f"metric.kind must be flat, conformal or general, got {kind!r}")
    return cfg


def build_metric(cfg):
    grid = cfg.grid
    m = cfg.metric
    kind = m.get("kind", "flat")
    mid = m.get("id")
    try:
        if kind == "flat":
            g = MetricField.flat(grid)
            return g if mid is None else MetricField(grid, g.g11, g.g12, g.g22, mid)
        if kind == "conformal":
            return MetricField.conformal(grid, evaluate(_expr(m["phi"], "metric.phi"), grid), mid or f"conformal:{m['phi']}")
        comps = [evaluate(_expr(m[c], f"metric.{c}"), grid).values for c in ("g11", "g12", "g22")]
        return MetricField(grid, *comps, mid or "general")
    except ValueError as exc:
        raise ConfigError(f"metric: {exc}") from None


def _get(cfg, key, default=None, kind=None):
    v = cfg.experiment.get(key, default)
    if v is None:
        raise ConfigError(f"missing required field {key!r}")
    if kind is float:
        try:
            return float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number") from None
    return v


def _header(cfg, command, g):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "metric_id": g.metric_id,
        "grid": {"n": cfg.n, "mode": cfg.mode},
    }


# ---------------------------------------------------------------- commands


def cmd_verify(cfg, out):
    g = build_metric(cfg)
    timings = {}
    rep = criteria.run_criteria_suite(g, timings=timings)
    report = _header(cfg, "verify", g)
    report.update({k: v for k, v in rep.to_dict().items() if k not in ("schema_version", "metric_id", "grid")})
    if cfg.heatmaps:
        K = gauss_curvature(g, christoffels(g))
        write_pgm(out / "gauss_curvature.pgm", K.values)
    return report, rep.exit_code(), timings


def cmd_evolve(cfg, out):
    g = build_metric(cfg)
    grid = cfg.grid
    f0 = evaluate(_expr(_get(cfg, "f0"), "f0"), grid)
    try:
        icfg = IntegratorConfig(
            dt=_get(cfg, "dt", 1e-3, float),
            t_end=_get(cfg, "t_end", 1.0, float),
            group=str(_get(cfg, "group", "sym")),
            reproject_every=int(_get(cfg, "reproject_every", 10)),
            record_every=int(_get(cfg, "record_every", 10)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    X0 = hamiltonian_field(f0, g)
    gamma = christoffels(g)
    basis = harmonic_basis(g)
    traj = evolve(X0, icfg, g, gamma, basis, keep_snapshots=cfg.snapshots or cfg.heatmaps)
    traj.write_csv(out / "trajectory.csv")
    final = traj.final
    report = _header(cfg, "evolve", g)
    report.update(
        {
            "integrator": {
                "dt": icfg.dt,
                "t_end": icfg.t_end,
                "group": icfg.group,
                "steps": icfg.n_steps,
                "reproject_every": icfg.reproject_every,
            },
            "summary": {
                "energy_initial": traj.records[0].energy,
                "energy_drift": traj.energy_drift(),
                "max_harmonic_drift": traj.max_harmonic(),
                "max_div_norm": float(np.max(traj.div_norms())),
                "max_div_before_reproject": traj.max_div_before_reproject,
                "final_harmonic_coeffs": list(final.harmonic_coeffs),
                "displacement": norm(final.X - X0, g),
            },
        }
    )
    for s in traj.snapshots:
        _, psi = exact_part(flat_omega(s.X, g), g)
        tag = f"{s.step:06d}"
        if cfg.snapshots:
            write_field_csv(out / f"snapshot_{tag}_X.csv", s.X.comp_x, "X_x")
            write_field_csv(out / f"snapshot_{tag}_Y.csv", s.X.comp_y, "X_y")
        if cfg.heatmaps:
            write_pgm(out / f"stream_{tag}.pgm", psi.values)
    return report, EXIT_OK, {}


def cmd_decompose(cfg, out):
    g = build_metric(cfg)
    grid = cfg.grid
    phi = OneFormField(
        grid,
        evaluate(_expr(_get(cfg, "phi_x", "0"), "phi_x"), grid).values,
        evaluate(_expr(_get(cfg, "phi_y", "0"), "phi_y"), grid).values,
    )
    split = hodge_decompose(phi, g)
    parts = dict(zip(("exact", "coexact", "harmonic"), split.parts()))
    names = list(parts)
    scale = max(norm(phi, g), 1e-300)
    gram = [[inner_product(parts[a], parts[b], g) / scale**2 for b in names] for a in names]
    orth = max(abs(gram[i][j]) for i in range(3) for j in range(3) if i != j)
    recon = norm(phi - split.exact - split.coexact - split.harmonic, g) / scale
    for name, part in parts.items():
        write_field_csv(out / f"{name}_x.csv", part.comp_x, f"{name}_x")
        write_field_csv(out / f"{name}_y.csv", part.comp_y, f"{name}_y")
    write_field_csv(out / "potential_f.csv", split.f.values, "f")
    write_field_csv(out / "potential_a.csv", split.a.density, "a")
    if cfg.heatmaps:
        write_pgm(out / "potential_f.pgm", split.f.values)
        write_pgm(out / "potential_a.pgm", split.a.density)
    report = _header(cfg, "decompose", g)
    report.update(
        {
            "norms": {k: norm(v, g) for k, v in parts.items()},
            "input_norm": norm(phi, g),
            "orthogonality_matrix": gram,
            "max_cross_term": orth,
            "reconstruction_residual": recon,
        }
    )
    return report, EXIT_OK, {}


def _tensor(cfg, g):
    spec = cfg.experiment.get("tensor", "metric")
    if spec == "metric":
        return SymTensorField.from_metric(g)
    if not isinstance(spec, dict):
        raise ConfigError('tensor must be "metric" or an object with T11, T12, T22')
    grid = cfg.grid
    comps = [evaluate(_expr(spec.get(c, "0"), f"tensor.{c}"), grid).values for c in ("T11", "T12", "T22")]
    return SymTensorField(grid, *comps)


def cmd_detect(cfg, out):
    g = build_metric(cfg)
    T = _tensor(cfg, g)
    eps_list = [float(e) for e in _get(cfg, "eps", [1.0, 0.5, 0.25])]
    center = cfg.experiment.get("center")
    try:
        rows = criteria.detection_table(T, eps_list, g, center=center)
    except EpsTooSmall as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    errors = [v - t for _, v, t in rows]
    with open(out / "detect.csv", "w", encoding="utf-8") as fh:
        fh.write("eps,value,limit_target,error\n")
        for (eps, v, t), e in zip(rows, errors):
            fh.write(f"{eps!r},{v!r},{t!r},{e!r}\n")
    monotone = all(abs(errors[k + 1]) < abs(errors[k]) for k in range(len(errors) - 1))
    ratios = [errors[k] / errors[k + 1] if errors[k + 1] != 0 else None for k in range(len(errors) - 1)]
    report = _header(cfg, "detect", g)
    report.update(
        {
            "rows": [{"eps": e, "value": v, "limit_target": t, "error": v - t} for e, v, t in rows],
            "monotone": monotone,
            "error_ratios": ratios,
        }
    )
    return report, EXIT_OK if monotone else EXIT_FAIL, {}


def cmd_identities(cfg, out):
    g = build_metric(cfg)
    tol = float(cfg.experiment.get("tolerance", IDENTITY_TOL))
    res = criteria.identity_residuals(g)
    write_json(out / "residuals.json", res)
    failed = sorted(k for k, v in res.items() if not v <= tol)
    report = _header(cfg, "identities", g)
    report.update({"tolerance": tol, "residuals": res, "failed": failed})
    return report, EXIT_OK if not failed else EXIT_FAIL, {}


HANDLERS = {
    "verify": cmd_verify,
    "evolve": cmd_evolve,
    "decompose": cmd_decompose,
    "detect": cmd_detect,
    "identities": cmd_identities,
}


# ---------------------------------------------------------------- driver


def build_parser():
    p = argparse.ArgumentParser(prog="geoflow", description="Geodesic flows on diffeomorphism groups of the 2-torus.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--n", type=int, help="grid size override")
    p.add_argument("--mode", choices=MODES, help="derivative mode override")
    return p


def run(command, config_path, out=None, n=None, mode=None):
    """Execute one command; returns the exit code. Errors are reported on stderr."""
    t0 = time.perf_counter()
    try:
        text = Path(config_path).read_text(encoding="utf-8")
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        cfg = load_config(raw, n, mode)
    except OSError as exc:
        print(f"geoflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"geoflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(out or cfg.out_dir or "geoflow_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(text, encoding="utf-8")
    try:
        report, code, timings = HANDLERS[command](cfg, out_dir)
    except ConfigError as exc:
        print(f"geoflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeoflowError as exc:
        err = {"type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, IntegrationError):
            err["step"] = exc.step
        write_json(out_dir / "report.json", {"schema_version": SCHEMA_VERSION, "command": command, "error": err})
        print(f"geoflow: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    report["exit_code"] = code
    write_json(out_dir / "report.json", report)
    write_json(
        out_dir / "timing.json",
        {"wall_time_ms": (time.perf_counter() - t0) * 1e3, "per_condition_ms": timings},
    )
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which the contract reserves for undecided verdicts
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    return run(args.command, args.config, args.out, args.n, args.mode)


if __name__ == "__main__":
    sys.exit(main())
