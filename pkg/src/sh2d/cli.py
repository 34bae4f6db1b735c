"""``sh2d`` command-line front end.

Usage: ``sh2d <command> --config <path> [--seed <n>] [--output <dir>]`` with
commands groundstate, evolve, spectrum, verify and gn. Outputs are JSON, CSV
and binary field snapshots; every JSON output echoes the configuration and
carries a git-style SHA-1 of the inputs.

Exit codes: 0 success, 1 configuration error, 2 quality failure (no
convergence or a suite out of tolerance), 3 blow-up flag or numerical
failure during evolution.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .errors import ConvergenceError
from .evolve import STATUS_BLOWUP, STATUS_NAN, EvolutionConfig, run
from .grid import Field
from .groundstate import SolverConfig, gn_constant_estimate, minimize, rescale_to_standing_wave
from .pointop import PointOperator, PointOpParams
from .potential import from_config
from .verify import run_all

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_QUALITY = 2
EXIT_BLOWUP = 3

log = logging.getLogger("sh2d")


# output helpers ---------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(obj.real), _plain(obj.imag)]
    return obj


def _dumps(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def git_hash(payload: bytes):
    """SHA-1 of ``payload`` as git stores a blob."""
    return hashlib.sha1(b"blob %d\0" % len(payload) + payload).hexdigest()


def input_hash(command, cfg: RunConfig, extra_files=()):
    echo = cfg.echo()
    echo.pop("output_dir", None)
    payload = json.dumps({"command": command, "config": _plain(echo)}, sort_keys=True).encode()
    for path in extra_files:
        payload += b"\0" + Path(path).read_bytes()
    return git_hash(payload)


def _envelope(command, cfg, result, extra_files=()):
    return {
        "command": command,
        "version": __version__,
        "config": cfg.echo(),
        "seed": cfg.seed,
        "input_hash": input_hash(command, cfg, extra_files),
        "result": result,
    }


def _write(path: Path, text):
    path.write_text(text)
    return path


# shared setup -------------------------------------------------------------------------


def _operator(cfg: RunConfig):
    params = PointOpParams(cfg.alpha, cfg.omega_ref)
    return PointOperator(params, cfg.grid)


def _require_lambda(cfg: RunConfig, command):
    if cfg.lam is None:
        raise ConfigError(f"command {command!r} needs 'lambda' in the config")
    return cfg.lam


def _solver(cfg: RunConfig, lam):
    s = cfg.solver
    return SolverConfig(lam=lam, tol=s.tol, max_iter=s.max_iter, symmetrize_every=s.symmetrize_every)


def radial_profile_csv(grid, f, v):
    """``r,|f|,|v|`` along the positive x axis from the origin cell."""
    i0, j0 = grid.origin
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "|f|", "|v|"])
    for j in range(j0, grid.N):
        w.writerow([repr(float((j - j0) * grid.h)), repr(float(abs(f[i0, j]))), repr(float(abs(v[i0, j])))])
    return buf.getvalue()


# commands ----------------------------------------------------------------------------------


def cmd_groundstate(cfg: RunConfig, out: Path):
    lam = _require_lambda(cfg, "groundstate")
    op = _operator(cfg)
    pot = from_config(cfg.potential, op.grid)
    elem, report = minimize(op, pot, _solver(cfg, lam))
    v = op.assemble(elem)
    Field(op.grid, elem.f).save(out / "f.sh2d", {"role": "regular part f", "lambda": lam})
    Field(op.grid, v).save(out / "v.sh2d", {"role": "minimizer v = f + c G_lambda, unit Hartree energy",
                                            "lambda": lam, "Lambda": report.Lambda, "c": report.c})
    _write(out / "profile.csv", radial_profile_csv(op.grid, elem.f, v))
    _write(out / "groundstate.json", _dumps(_envelope("groundstate", cfg, report.to_dict())))
    print(f"W = {report.W_value:.12g}  Lambda = {report.Lambda:.12g}  c = {report.c:.6g}  "
          f"residual = {report.el_residual:.3e}  iterations = {report.iterations}")
    if not report.converged:
        print(f"error: no convergence after {report.iterations} iterations "
              f"(residual {report.el_residual:.3e} > tol {cfg.solver.tol:g})", file=sys.stderr)
        return EXIT_QUALITY
    return EXIT_OK


def _initial_datum(cfg: RunConfig, op, pot, config_dir):
    """Returns ``(psi0, reference or None, extra input files)``."""
    init = cfg.evolution.initial
    grid = op.grid
    if init.kind == "gaussian":
        return init.amplitude * grid.gaussian(init.width, init.center).astype(complex), None, ()
    if init.kind == "file":
        path = _resolve(init.path, config_dir)
        field = _load_field(path, grid)
        return init.amplitude * field, None, (path,)
    # groundstate: a previous output directory, or solved here
    if init.path is not None:
        d = _resolve(init.path, config_dir)
        v = _load_field(d / "v.sh2d", grid)
        try:
            report = json.loads((d / "groundstate.json").read_text())["result"]
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read ground-state report in {d}: {exc}") from None
        Q = math.sqrt(report["Lambda"]) * v
        return init.amplitude * Q, Q, (d / "v.sh2d", d / "groundstate.json")
    lam = _require_lambda(cfg, "evolve")
    elem, report = minimize(op, pot, _solver(cfg, lam))
    if not report.converged:
        raise ConvergenceError(f"ground state did not converge (residual {report.el_residual:.3e})")
    Q = op.assemble(rescale_to_standing_wave(op, elem, pot)).astype(complex)
    return init.amplitude * Q, Q, ()


def _resolve(path, base):
    p = Path(path)
    return p if p.is_absolute() else Path(base) / p


def _load_field(path, grid):
    try:
        field = Field.load(path).to_position()
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load field {path}: {exc}") from None
    if field.grid.N != grid.N or field.grid.L != grid.L:
        raise ConfigError(f"field {path} is on grid L={field.grid.L}, N={field.grid.N}, "
                          f"config has L={grid.L}, N={grid.N}")
    return field.values


def cmd_evolve(cfg: RunConfig, out: Path, config_dir="."):
    if cfg.evolution is None:
        raise ConfigError("command 'evolve' needs an 'evolution' block")
    op = _operator(cfg)
    pot = from_config(cfg.potential, op.grid)
    try:
        psi0, Q, files = _initial_datum(cfg, op, pot, config_dir)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUALITY
    ev = cfg.evolution
    ecfg = EvolutionConfig(theta=ev.theta, dt=ev.dt, T=ev.T, record_every=ev.record_every)

    stationarity = []
    callback = None
    if Q is not None:
        qn = op.grid.l2_norm(Q)
        callback = lambda t, psi: stationarity.append(op.grid.l2_norm(np.abs(psi) - np.abs(Q)) / qn)

    trace = run(op, pot, psi0, ecfg, callback=callback)
    _write(out / "trace.csv", trace.to_csv())
    Field(op.grid, trace.final).save(out / "psi_final.sh2d", {"t": float(trace.times[-1])})
    result = {
        "status": trace.status,
        "steps": trace.steps,
        "t_final": trace.times[-1],
        "mass_drift": trace.mass_drift(),
        "energy_drift": trace.energy_drift(),
        "e_h": op.e_h,
        "sup_h1alpha": float(np.max(trace.h1alpha)),
    }
    if stationarity:
        result["modulus_stationarity"] = max(stationarity)
        print(f"modulus stationarity: max_t || |psi| - |Q| || / ||Q|| = {max(stationarity):.3e}")
    _write(out / "evolve.json", _dumps(_envelope("evolve", cfg, result, files)))
    print(f"steps = {trace.steps}  mass drift = {result['mass_drift']:.3e}  "
          f"energy drift = {result['energy_drift']:.3e}")
    if trace.status == STATUS_BLOWUP:
        print(f"diagnostic blow-up: energy norm passed 1e6 x its initial value at t = {trace.times[-1]:g}",
              file=sys.stderr)
        return EXIT_BLOWUP
    if trace.status == STATUS_NAN:
        print(f"numerical failure: non-finite field after step {trace.steps}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, out: Path):
    op = _operator(cfg)
    try:
        e_h, phi = op.bound_state()
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUALITY
    grid = op.grid
    e_alpha = op.params.e_alpha
    G = op.green_field(abs(e_h))
    G = G / grid.l2_norm(G)
    result = {
        "e_h": e_h,
        "e_alpha": e_alpha,
        "relative_gap": abs(e_h - e_alpha) / abs(e_alpha),
        "eigenfunction_green_distance": grid.l2_norm(phi - G),
        "S": op.sm_denominator,
        "omega_ref": op.params.omega_ref,
    }
    _write(out / "spectrum.json", _dumps(_envelope("spectrum", cfg, result)))
    print(f"e_h = {e_h:.12g}  e_alpha = {e_alpha:.12g}  relative gap = {result['relative_gap']:.3e}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path):
    op = _operator(cfg)
    pot = from_config(cfg.potential, op.grid)
    lam = cfg.lam if cfg.lam is not None else op.params.omega_ref
    results, gn = run_all(op, pot, lam, cfg.seed, cfg.verify.trials)
    ok = all(r.ok for r in results)
    payload = {"ok": ok, "suites": [r.to_dict() for r in results], "C_gn": gn.C_gn, "lambda": lam}
    _write(out / "verify.json", _dumps(_envelope("verify", cfg, payload)))
    for r in results:
        print(r.summary())
    return EXIT_OK if ok else EXIT_QUALITY


def cmd_gn(cfg: RunConfig, out: Path):
    op = _operator(cfg)
    pot = from_config(cfg.potential, op.grid)
    gn = gn_constant_estimate(op, pot)
    Field(op.grid, op.assemble(gn.maximizer)).save(out / "gn_maximizer.sh2d", {"C_gn": gn.C_gn})
    result = gn.to_dict()
    result["regime"] = pot.regime
    _write(out / "gn.json", _dumps(_envelope("gn", cfg, result)))
    print(f"C_gn = {gn.C_gn:.12g}  kappa = {gn.kappa:.12g}  p = {gn.p:g}")
    return EXIT_OK


COMMANDS = {
    "groundstate": cmd_groundstate,
    "evolve": cmd_evolve,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "gn": cmd_gn,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="sh2d", description="2D Hartree equation with a point interaction")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    parser.add_argument("--output", default=None, help="output directory (overrides config output_dir)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative")
            cfg.seed = args.seed
        out = Path(args.output if args.output is not None else cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        fn = COMMANDS[args.command]
        if args.command == "evolve":
            return fn(cfg, out, Path(args.config).resolve().parent)
        return fn(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
