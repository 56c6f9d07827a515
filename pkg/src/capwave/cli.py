"""Command-line entry point: ``simulate``, ``verify``, ``decompose`` and ``export``.

Exit codes: 0 success, 2 configuration or usage error, 3 I/O error, 4 verification
failure.  Physics stop conditions (CFL, angle exit, mesh fold, Picard failure) end a
run successfully; the reason is recorded in the manifest.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import diagnostics as dg
from .config import RunConfig, config_hash, load_config
from .dynamics import cfl_limit, initial_state, picard_refine, step
from .errors import (
    AngleExitError,
    CFLError,
    ConfigError,
    ConvergenceError,
    GeometryError,
    ResolutionError,
)
from .geometry import build_reference_domain

log = logging.getLogger("capwave")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_VERIFY = 0, 2, 3, 4

STOP_REASONS = ("completed", "cfl", "angle_exit", "mesh_fold", "picard_fail")


class _IOFailure(Exception):
    pass


def stop_reason(exc):
    """Manifest reason for a physics stop condition."""
    if isinstance(exc, CFLError):
        return "cfl"
    if isinstance(exc, AngleExitError):
        return "angle_exit"
    if isinstance(exc, ConvergenceError):
        return "picard_fail"
    if isinstance(exc, GeometryError):
        return "mesh_fold"
    raise exc


# ------------------------------------------------------------------ simulate
class _Recorder:
    """Emits report rows from a sliding window of three states, centred where possible."""

    def __init__(self, writer, cadence):
        self.writer = writer
        self.cadence = cadence
        self.window = []  # (index, state)
        self.done = set()
        self.rows = 0

    def _emit(self, idx, k):
        if idx in self.done or (idx % self.cadence and idx != self.last):
            return
        states = [s for _, s in self.window]
        rep = dg.energy_report(states, k=k, identities=len(states) >= 3)
        self.writer.write([idx] + rep.row())
        self.done.add(idx)
        self.rows += 1

    def push(self, idx, state):
        self.last = idx
        self.window = (self.window + [(idx, state)])[-3:]
        if len(self.window) == 3:
            if self.window[0][0] == 0:
                self._emit(0, 0)
            self._emit(self.window[1][0], 1)

    def finish(self):
        if len(self.window) >= 2:
            if self.window[0][0] == 0 and len(self.window) == 2:
                self._emit(0, 0)
            self._emit(self.window[-1][0], len(self.window) - 1)


def simulate(cfg: RunConfig, out: Path):
    """Run the configured simulation, writing report, snapshots and manifest into ``out``."""
    from . import io

    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "snapshots").mkdir(exist_ok=True)
    except OSError as exc:
        raise _IOFailure(f"cannot create output directory {out}: {exc}") from exc
    try:
        domain = build_reference_domain(cfg.geometry)
        state = initial_state(domain, cfg.physics, cfg.preset, **cfg.preset_params)
    except (GeometryError, ResolutionError, ValueError) as exc:
        raise ConfigError(f"initial state: {exc}") from exc

    num = cfg.numerics
    dt = num.dt if num.dt is not None else cfl_limit(state)
    n_steps = max(1, int(np.ceil(num.t_end / dt - 1e-9)))
    if num.dt is None:
        dt = num.t_end / n_steps
    manifest = {
        "capwave_version": __version__,
        "config_hash": config_hash(cfg),
        "config": cfg.canonical(),
        "dt": float(dt),
        "planned_steps": n_steps,
        "stop_reason": None,
        "detail": "",
        "steps_completed": 0,
        "final_time": 0.0,
        "report": "report.csv",
        "snapshots": [],
    }
    reason, detail = "completed", ""
    writer = io.CsvWriter(out / "report.csv", ["step"] + dg.EnergyReport.columns())
    rec = _Recorder(writer, cfg.output.report_cadence)
    try:
        rec.push(0, state)
        manifest["snapshots"] += [str(f.relative_to(out)) for f in io.write_snapshot(out / "snapshots", 0, state)]
        for n in range(1, n_steps + 1):
            try:
                if num.integrator == "picard":
                    state = picard_refine(state, dt, tol=num.picard_tol, max_iter=num.picard_max_iter)
                else:
                    state = step(state, dt)
                state.stage  # geometry checks of the new state
            except (CFLError, GeometryError, ConvergenceError) as exc:
                reason, detail = stop_reason(exc), str(exc)
                log.info("stopped at step %d: %s", n, detail)
                break
            rec.push(n, state)
            manifest["steps_completed"] = n
            manifest["final_time"] = float(state.time)
            if n % cfg.output.cadence == 0 or n == n_steps:
                manifest["snapshots"] += [str(f.relative_to(out)) for f in io.write_snapshot(out / "snapshots", n, state)]
        rec.finish()
    except OSError as exc:
        reason, detail = "io_error", str(exc)
        raise _IOFailure(str(exc)) from exc
    except Exception as exc:
        reason, detail = "error", f"{type(exc).__name__}: {exc}"
        raise
    finally:
        writer.close()
        manifest["stop_reason"] = reason
        manifest["detail"] = detail
        manifest["report_rows"] = rec.rows
        try:
            io.write_manifest(out / "manifest.yaml", manifest)
        except OSError as exc:
            raise _IOFailure(f"cannot write manifest: {exc}") from exc
    if cfg.output.figures:
        export(out, out / "figures")
    return manifest


def cmd_simulate(args):
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else Path(cfg.output.dir)
    try:
        manifest = simulate(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _IOFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"stop reason: {manifest['stop_reason']}  steps: {manifest['steps_completed']}/{manifest['planned_steps']}"
        f"  t = {manifest['final_time']:.6g}  output: {out}"
    )
    return EXIT_OK


# -------------------------------------------------------------------- verify
def cmd_verify(args):
    from . import io, verify

    suite = args.suite_opt or args.suite
    if suite is None:
        print("error: a suite is required", file=sys.stderr)
        return EXIT_CONFIG
    if suite not in list(verify.SUITES) + ["all"]:
        print(f"error: unknown suite {suite!r} (choose from {', '.join(list(verify.SUITES) + ['all'])})", file=sys.stderr)
        return EXIT_CONFIG
    results = verify.run_suite(suite, seed=args.seed)
    ok = True
    for res in results:
        print(f"== suite {res.name}")
        for c in res.checks:
            print(c.line())
        ok &= res.passed
    if args.out:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            for res in results:
                for name, (cols, rows) in res.tables.items():
                    _write_mixed_csv(out / f"{name}.csv", cols, rows)
                    _plot_table(out / f"{name}.png", name, cols, rows)
                io.write_csv(
                    out / f"{res.name}_checks.csv",
                    ["passed", "measured", "threshold"],
                    [(int(c.passed), c.measured, c.threshold) for c in res.checks],
                )
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
    print("ALL PASS" if ok else "FAILURES")
    return EXIT_OK if ok else EXIT_VERIFY


def _plot_table(path, name, cols, rows):
    """Log-log plot of a convergence table: one curve per (label, quantity)."""
    from .plotting import plot_convergence

    if not rows:
        return None
    xcol = "dt" if "operator" in cols and "dt" in cols else "h"
    if xcol not in cols:
        return None
    labels = [k for k, c in enumerate(cols) if isinstance(rows[0][k], str)]
    values = [k for k, c in enumerate(cols) if c not in ("M", "N", "dt", "h") and k not in labels]
    groups = {}
    for r in rows:
        key = " ".join(r[k] for k in labels)
        groups.setdefault(key, []).append(r)
    curves, names, h = [], [], None
    for key, grp in groups.items():
        x = [float(r[cols.index(xcol)]) for r in grp]
        if h is None:
            h = x
        if x != h:
            continue
        for k in values:
            curves.append([abs(float(r[k])) for r in grp])
            names.append(" ".join(filter(None, (key, cols[k] if len(values) > 1 else ""))))
    return plot_convergence(h, curves, path, labels=names, title=name.replace("_", " "), order=2 if name.startswith("elliptic") else 1)


def _write_mixed_csv(path, cols, rows):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


# ----------------------------------------------------------------- decompose
def cmd_decompose(args):
    from . import io
    from .elliptic.singular import singular_decompose
    from .mesh import Mesh

    try:
        nodes, values, _ = io.read_grid_dump(args.dump, args.field)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: malformed dump: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    angles = tuple(a * np.pi for a in args.angles) if args.angles else None
    try:
        dec = singular_decompose(Mesh(nodes), values, args.bc_kind, angles, args.r0)
    except ResolutionError as exc:
        print(f"error: {exc} (use a larger --r0 or a finer grid)", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = {
        "bc_kind": dec.bc_kind,
        "radius": float(dec.radius),
        "corners": {
            side: {
                "angle_over_pi": float(cm.omega / np.pi),
                "exponent": float(a),
                "coefficient": float(c),
                "fit_residual": float(r),
                "fitted_exponent": None if not np.isfinite(f) else float(f),
            }
            for side, cm, a, c, r, f in zip(
                ("left", "right"), dec.corner_maps, dec.exponents, dec.coefficients, dec.fit_residuals, dec.fitted_exponents
            )
        },
    }
    text = yaml.safe_dump(report, sort_keys=False)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -------------------------------------------------------------------- export
def export(run_dir: Path, out: Path):
    """Figures and a surface-profile table from a finished run directory."""
    from . import io, plotting

    out.mkdir(parents=True, exist_ok=True)
    report = io.read_csv(run_dir / "report.csv")
    written = []
    if len(report["t"]):
        written.append(plotting.plot_energy(report, out / "energy.png"))
        written.append(plotting.plot_contact(report, out / "contact.png"))
    surfaces = sorted((run_dir / "snapshots").glob("surface_*.txt"))
    profiles, rows = [], []
    for path in surfaces:
        header, cols = io.read_surface_dump(path)
        t = float(header["time"])
        profiles.append((t, cols["x"], cols["z"]))
        rows += [(t, int(i), x, z, d) for i, x, z, d in zip(cols["i"], cols["x"], cols["z"], cols["d"])]
    if profiles:
        written.append(plotting.plot_surfaces(profiles, out / "surfaces.png"))
        io.write_csv(out / "surfaces.csv", ["t", "i", "x", "z", "d"], rows)
        grid = sorted((run_dir / "snapshots").glob("grid_*.txt"))[-1]
        nodes, P, header = io.read_grid_dump(grid, "P_vv")
        written.append(plotting.plot_field(nodes, P, out / "pressure.png", title=f"P_vv at t = {float(header['time']):.4g}"))
    return written


def cmd_export(args):
    run_dir = Path(args.run)
    out = Path(args.out) if args.out else run_dir / "figures"
    try:
        files = export(run_dir, out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, ValueError) as exc:
        print(f"error: malformed run directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        print(f)
    return EXIT_OK


# ---------------------------------------------------------------------- main
def build_parser():
    p = argparse.ArgumentParser(prog="capwave", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"capwave {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a configured simulation")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (overrides output.dir)")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", nargs="?", help="elliptic, commutators, energy, contact or all")
    v.add_argument("--suite", dest="suite_opt")
    v.add_argument("--out", help="directory for convergence tables (CSV)")
    v.add_argument("--seed", type=int, default=0, help="seed of the randomized property checks")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("decompose", help="corner singular decomposition of a grid field dump")
    d.add_argument("dump")
    d.add_argument("--angles", nargs=2, type=float, metavar=("LEFT", "RIGHT"), help="corner angles in units of pi")
    d.add_argument("--bc-kind", choices=("neumann", "mixed"), default="neumann")
    d.add_argument("--field", help="column of the dump (default: last)")
    d.add_argument("--r0", type=float, default=0.25)
    d.add_argument("--out", help="report file (default: stdout)")
    d.set_defaults(func=cmd_decompose)

    e = sub.add_parser("export", help="render figures and tables of a run directory")
    e.add_argument("run")
    e.add_argument("--out")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
