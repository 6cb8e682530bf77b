"""Command line front end: config parsing, dispatch, artifact plumbing.

Subcommands
-----------
spectrum            eigenvalue table as JSON
stokes              linear run from a config file
ns                  nonlinear run from a config file
biot-savart-check   dual-route stream-function agreement report
pressure            pressure recovery and momentum defect along a run
annulus-verify      circulation, flux, and spectra checks on an annulus
accept              the full numbered acceptance suite

Exit codes: 0 success, 2 validation error (bad flags or config),
3 numerical tolerance failure in a check subcommand.

Config files are flat INI with sections [domain], [solver], [init],
[output]; unknown sections or keys are rejected, every default is
echoed into the manifest.  Example::

    [solver]
    nu = 0.1
    dt = 0.001
    t_final = 2.0

    [init]
    kind = random
    seed = 42

Every run writes ``manifest.json`` into the output directory before
doing any work (status "running") and rewrites it on success (status
"completed", wall clock, file list), so a crashed run is recognizable
by its unfinished manifest.  All other emitted files are listed in the
manifest; numeric CSV fields carry 17 significant digits.

The BLAS thread count is taken from ``--threads`` or the
``DISKVORT_THREADS`` environment variable; it must be applied before
the first numpy import, so the numerical modules are imported lazily
inside the handlers.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

__all__ = ["ConfigError", "RunManifest", "load_config", "dispatch", "main"]

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


class ConfigError(ValueError):
    """All configuration problems at once, one message per line."""

    def __init__(self, problems):
        self.problems = [str(p) for p in problems]
        super().__init__("\n".join(self.problems))


@dataclasses.dataclass
class RunManifest:
    subcommand: str
    config_path: str | None
    parameters: dict
    outdir: str
    seed: int | None
    version: str
    status: str = "running"
    wall_clock_s: float | None = None
    files: list = dataclasses.field(default_factory=list)

    def write(self) -> None:
        path = Path(self.outdir) / "manifest.json"
        with open(path, "w") as f:
            json.dump(dataclasses.asdict(self), f, indent=2, sort_keys=True)
            f.write("\n")


def _begin(subcommand, parameters, outdir, seed=None, config_path=None):
    from . import __version__

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    man = RunManifest(
        subcommand=subcommand,
        config_path=None if config_path is None else str(config_path),
        parameters=parameters,
        outdir=str(outdir),
        seed=seed,
        version=__version__,
    )
    man.write()
    return man, time.monotonic()


def _finalize(man: RunManifest, t0: float, files) -> None:
    man.status = "completed"
    man.wall_clock_s = time.monotonic() - t0
    man.files = sorted(str(f) for f in files)
    man.write()


# ---------------------------------------------------------------------------
# config files

_SCHEMA = {
    "domain": {
        "K": (int, 8),
        "J": (int, 8),
        "n_radial": (int, None),
        "n_angular": (int, None),
    },
    "solver": {
        "nu": (float, None),  # the one required key
        "dt": (float, 1e-3),
        "t_final": (float, 1.0),
        "cfl": (float, 0.5),
    },
    "init": {
        "kind": (str, "modes"),
        "modes": (str, "0 1 cos 1.0"),
        "seed": (int, None),
    },
    "output": {
        "every": (int, 10),
        "snapshot_every": (int, 0),
    },
}


def _parse_file(path) -> dict:
    """INI text -> {section: {key: raw string}}, with line-numbered errors."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (K vs k)
    try:
        with open(path) as f:
            parser.read_file(f, source=str(path))
    except OSError as e:
        raise ConfigError([f"cannot read config: {e}"])
    except configparser.Error as e:
        # configparser messages carry "[line N]" markers already
        raise ConfigError([f"parse error: {e}"])
    return {s: dict(parser.items(s)) for s in parser.sections()}


def _resolve(raw: dict) -> dict:
    """Typed values with defaults applied; unknown keys and range
    violations are collected and reported together."""
    problems = []
    resolved = {}
    for section in raw:
        if section not in _SCHEMA:
            problems.append(f"unknown section [{section}]")
    for section, keys in _SCHEMA.items():
        got = raw.get(section, {})
        out = {}
        for key in got:
            if key not in keys:
                problems.append(f"unknown key '{key}' in [{section}]")
        for key, (typ, default) in keys.items():
            if key in got:
                try:
                    out[key] = typ(got[key])
                except ValueError:
                    problems.append(
                        f"[{section}] {key}: cannot parse {got[key]!r} as {typ.__name__}"
                    )
                    out[key] = default
            else:
                out[key] = default
        resolved[section] = out
    if problems:
        raise ConfigError(problems)
    return resolved


def _parse_modes(text: str):
    entries = []
    for piece in text.split(";"):
        fields = piece.split()
        if not fields:
            continue
        if len(fields) != 4:
            raise ValueError(
                f"entry {piece.strip()!r} must be 'k j parity amplitude'"
            )
        k, j, parity, amp = fields
        try:
            k, j, amp = int(k), int(j), float(amp)
        except ValueError:
            raise ValueError(f"entry {piece.strip()!r} has non-numeric k, j, or amplitude")
        if parity not in ("cos", "sin"):
            raise ValueError(f"entry {piece.strip()!r}: parity must be cos or sin")
        entries.append(((k, j, parity), amp))
    if not entries:
        raise ValueError("no mode entries given")
    return tuple(entries)


def _run_config(resolved: dict, check_cfl: bool = True):
    """Build and vet the solver configuration, all problems in one
    report, including the advective stability bound of the requested
    initial data (refused before any time stepping)."""
    from .nonlinear import velocity_max
    from .solver import RunConfig, initial_state, prepare

    dom, sol, ini, outp = (
        resolved["domain"],
        resolved["solver"],
        resolved["init"],
        resolved["output"],
    )
    problems = []
    nu = sol["nu"]
    if nu is None:
        problems.append("[solver] nu is required")
        nu = 1.0  # placeholder so the remaining checks still run
    kind = ini["kind"]
    if kind not in ("modes", "random"):
        problems.append(f"[init] kind must be 'modes' or 'random', got {kind!r}")
        kind = "modes"
    seed = ini["seed"]
    if kind == "random" and seed is None:
        problems.append("[init] seed is mandatory when kind = random")
        seed = 0
    if kind == "modes" and seed is not None:
        problems.append("[init] seed is only meaningful when kind = random")
    modes = (((0, 1, "cos"), 1.0),)
    if kind == "modes":
        try:
            modes = _parse_modes(ini["modes"])
        except ValueError as e:
            problems.append(f"[init] modes: {e}")
    if outp["snapshot_every"] < 0:
        problems.append(
            f"[output] snapshot_every must be >= 0, got {outp['snapshot_every']}"
        )
    cfg = RunConfig(
        nu=nu,
        K=dom["K"],
        J=dom["J"],
        dt=sol["dt"],
        t_final=sol["t_final"],
        init_modes=modes if kind == "modes" else None,
        init_seed=seed if kind == "random" else None,
        n_radial=dom["n_radial"],
        n_angular=dom["n_angular"],
        output_every=outp["every"],
        cfl=sol["cfl"],
    )
    problems += cfg.validate()
    if problems:
        raise ConfigError(problems)
    if check_cfl:
        ctx = prepare(cfg)
        omega = initial_state(cfg, ctx).total()
        umax = velocity_max(omega, ctx.grid)
        if umax > 0.0:
            bound = cfg.cfl / (umax * ctx.sqrt_lam_max)
            if cfg.dt > bound:
                raise ConfigError(
                    [
                        f"[solver] dt = {cfg.dt:g} violates the advective stability "
                        f"bound dt <= {bound:.3e} for this init "
                        f"(|u|_max = {umax:.3g}, sqrt(lambda_max) = {ctx.sqrt_lam_max:.3g})"
                    ]
                )
    return cfg


def load_config(path, check_cfl: bool = True):
    """Parse, default, and validate a config file into a RunConfig."""
    return _run_config(_resolve(_parse_file(path)), check_cfl=check_cfl)


# ---------------------------------------------------------------------------
# artifact writers


def _write_snapshots(traj, outdir: Path, every: int) -> list[str]:
    if every <= 0:
        return []
    snapdir = outdir / "snapshots"
    snapdir.mkdir(exist_ok=True)
    files = []
    for idx in range(0, len(traj), every):
        state = traj.states[idx]
        name = f"snapshots/state_{idx:06d}.csv"
        with open(outdir / name, "w", newline="") as f:
            f.write("k,j,parity,coeff\n")
            for m, c in zip(state.table.modes, state.coeffs):
                f.write(f"{m.k},{m.j},{m.parity},{c:.17g}\n")
        files.append(name)
    return files


def _trajectory_pipeline(args, runner, subcommand: str) -> int:
    resolved = _resolve(_parse_file(args.config))
    cfg = _run_config(resolved, check_cfl=(subcommand == "ns"))
    outdir = Path(args.outdir)
    man, t0 = _begin(
        subcommand,
        resolved,
        outdir,
        seed=resolved["init"]["seed"],
        config_path=args.config,
    )
    traj = runner(cfg)
    files = ["trajectory.csv"]
    traj.to_csv(outdir / "trajectory.csv")
    files += _write_snapshots(traj, outdir, resolved["output"]["snapshot_every"])
    _finalize(man, t0, files)
    last = traj.diagnostics[-1]
    print(
        f"{subcommand}: {len(traj)} output rows to {outdir / 'trajectory.csv'}; "
        f"final t={last.t:g} energy={last.energy:.6e} enstrophy={last.enstrophy:.6e}"
    )
    return 0


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_spectrum(args) -> int:
    from .spectrum import build_table

    if args.K < 0 or args.J < 1:
        print("error: need K >= 0 and J >= 1", file=sys.stderr)
        return 2
    man, t0 = _begin("spectrum", {"K": args.K, "J": args.J}, args.outdir)
    table = build_table(args.K, args.J)
    text = table.to_json()
    (Path(args.outdir) / "eigenvalues.json").write_text(text + "\n")
    _finalize(man, t0, ["eigenvalues.json"])
    print(text)
    return 0


def _cmd_stokes(args) -> int:
    from .solver import stokes_run

    return _trajectory_pipeline(args, stokes_run, "stokes")


def _cmd_ns(args) -> int:
    from .solver import run

    return _trajectory_pipeline(args, run, "ns")


def _cmd_biot_savart_check(args) -> int:
    from .acceptance import check_green_equivalence, check_newtonian_agreement

    man, t0 = _begin("biot-savart-check", {}, args.outdir)
    results = [check_newtonian_agreement(), check_green_equivalence()]
    report = {
        r.name: {"passed": r.passed, "detail": r.detail, "seconds": r.seconds}
        for r in results
    }
    with open(Path(args.outdir) / "report.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    _finalize(man, t0, ["report.json"])
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 3


def _cmd_pressure(args) -> int:
    from .pressure import momentum_residual, recover_pressure
    from .solver import prepare, run

    resolved = _resolve(_parse_file(args.config))
    cfg = _run_config(resolved)
    if cfg.t_final / cfg.dt / cfg.output_every < 2:
        raise ConfigError(
            ["pressure needs at least 3 output rows to center a time derivative"]
        )
    outdir = Path(args.outdir)
    man, t0 = _begin(
        "pressure", resolved, outdir, seed=resolved["init"]["seed"], config_path=args.config
    )
    ctx = prepare(cfg)
    traj = run(cfg, ctx)
    index = (len(traj) - 1) // 2
    resid = momentum_residual(traj, index, cfg.nu, ctx.grid, n_aux=args.n_aux)
    p = recover_pressure(traj.states[-1], cfg.nu, ctx.grid, n_aux=args.n_aux)
    files = ["pressure.csv", "report.json"]
    with open(outdir / "pressure.csv", "w", newline="") as f:
        f.write("r,theta,p\n")
        for i, r in enumerate(ctx.grid.r):
            for m, th in enumerate(ctx.grid.theta):
                f.write(f"{r:.17g},{th:.17g},{p.values[i, m]:.17g}\n")
    report = {
        "momentum_residual": resid,
        "residual_time": float(traj.times[index]),
        "pressure_time": float(traj.times[-1]),
        "n_aux": args.n_aux,
    }
    with open(outdir / "report.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    _finalize(man, t0, files)
    print(
        f"pressure: momentum residual {resid:.6e} at t={traj.times[index]:g}; "
        f"field on the final state written to {outdir / 'pressure.csv'}"
    )
    return 0


def _cmd_annulus_verify(args) -> int:
    import numpy as np

    from .acceptance import lambda_fundamental
    from .annulus import (
        AnnulusGeometry,
        annulus_stokes_circulation,
        galerkin_spectra,
        omega_big,
        xi_circulation,
    )

    man, t0 = _begin(
        "annulus-verify",
        {"r_inner": args.r_inner, "n_poly": args.n_poly, "k_max": args.k_max},
        args.outdir,
    )
    geom = AnnulusGeometry(args.r_inner)
    xi = xi_circulation(geom)
    om = omega_big(geom, xi, degree=8)
    th = geom.theta()
    flux_om = float(
        np.sum(-om(np.full_like(th, geom.r_inner), th, "d_r"))
        * (2 * np.pi / th.size)
        * geom.r_inner
    )
    spectra = galerkin_spectra(geom, n_poly=args.n_poly, k_max=args.k_max)
    circ = annulus_stokes_circulation(geom, 1.0, args.nu, args.t_final, n_out=160)
    lam_f = lambda_fundamental()

    checks = [
        ("xi-flux", abs(xi.inner_flux() + 1.0) <= 1e-10, f"{xi.inner_flux():.12f} (= -1 +- 1e-10)"),
        ("projected-flux", abs(flux_om + 1.0) <= 1e-8, f"{flux_om:.10f} (= -1 +- 1e-8)"),
        (
            "spectra-equality",
            abs(spectra.lambda_S - spectra.lambda_V) / spectra.lambda_S <= 1e-6,
            f"{spectra.lambda_S:.8f} vs {spectra.lambda_V:.8f}",
        ),
        (
            "spectrum-ordering",
            spectra.lambda_Z <= lam_f,
            f"{spectra.lambda_Z:.7f} <= {lam_f:.7f}",
        ),
        (
            "circulation-law",
            circ.lamb_residual <= 1e-4,
            f"residual {circ.lamb_residual:.2e} (<= 1e-4)",
        ),
    ]
    files = ["circulation.csv", "report.json"]
    circ.to_csv(Path(args.outdir) / "circulation.csv")
    report = {name: {"passed": ok, "detail": detail} for name, ok, detail in checks}
    with open(Path(args.outdir) / "report.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    _finalize(man, t0, files)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if all(ok for _, ok, _ in checks) else 3


def _cmd_accept(args) -> int:
    from .acceptance import run_all

    numbers = None
    if args.only:
        try:
            numbers = sorted({int(x) for x in args.only.split(",")})
        except ValueError:
            print(f"error: --only expects numbers, got {args.only!r}", file=sys.stderr)
            return 2
        if any(n < 1 or n > 12 for n in numbers):
            print("error: criteria are numbered 1..12", file=sys.stderr)
            return 2
    man, t0 = _begin("accept", {"only": numbers}, args.outdir)
    results = run_all(numbers=numbers, stream=print)
    report = {
        "results": [dataclasses.asdict(r) for r in results],
        "all_passed": all(r.passed for r in results),
    }
    with open(Path(args.outdir) / "report.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    _finalize(man, t0, ["report.json"])
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return 0 if n_fail == 0 else 3


# ---------------------------------------------------------------------------
# parser and dispatch


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diskvort",
        description="Spectral vorticity dynamics on the unit disk and annulus.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        metavar="N",
        help="BLAS thread count (also: DISKVORT_THREADS env var)",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, handler, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(handler=handler)
        p.add_argument("--outdir", default=f"runs/{name}", help="output directory")
        return p

    p = add("spectrum", _cmd_spectrum, help="eigenvalue table as JSON")
    p.add_argument("--K", type=int, default=8, help="max angular wavenumber")
    p.add_argument("--J", type=int, default=8, help="radial modes per wavenumber")

    for name, handler, blurb in (
        ("stokes", _cmd_stokes, "linear run from a config file"),
        ("ns", _cmd_ns, "nonlinear run from a config file"),
    ):
        p = add(name, handler, help=blurb)
        p.add_argument("--config", required=True, help="INI config path")

    add(
        "biot-savart-check",
        _cmd_biot_savart_check,
        help="dual-route stream-function agreement report",
    )

    p = add("pressure", _cmd_pressure, help="pressure recovery along a run")
    p.add_argument("--config", required=True, help="INI config path")
    p.add_argument("--n-aux", type=int, default=256, help="auxiliary radial elements")

    p = add("annulus-verify", _cmd_annulus_verify, help="annulus toolkit checks")
    p.add_argument("--r-inner", type=float, default=0.5, help="inner radius")
    p.add_argument("--n-poly", type=int, default=24, help="radial trial degree")
    p.add_argument("--k-max", type=int, default=4, help="max angular wavenumber")
    p.add_argument("--nu", type=float, default=0.1, help="viscosity for the circulation run")
    p.add_argument("--t-final", type=float, default=2.0, help="circulation run horizon")

    p = add("accept", _cmd_accept, help="run the numbered acceptance suite")
    p.add_argument("--only", help="comma-separated criterion numbers, e.g. 1,5,11")

    return parser


def dispatch(argv) -> int:
    """Parse argv and run one subcommand; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse prints usage itself
        return 0 if e.code in (0, None) else 2

    threads = (
        args.threads
        if args.threads is not None
        else os.environ.get("DISKVORT_THREADS")
    )
    if threads is not None:
        try:
            n = int(threads)
            if n < 1:
                raise ValueError
        except ValueError:
            print(f"error: thread count must be a positive integer, got {threads!r}", file=sys.stderr)
            return 2
        for var in _THREAD_VARS:
            os.environ[var] = str(n)

    try:
        return args.handler(args)
    except ConfigError as e:
        for line in e.problems:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
