"""Strict JSON run configuration.

Unknown keys and invalid values are rejected before any computation, with
the line number of the offending key when it can be located in the file.
"""

import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import specfun
from .grid import GridSpec
from .potential import from_config

MIN_N = 16
DEFAULT_OUTPUT = "sh2d-out"
INITIAL_KINDS = ("gaussian", "file", "groundstate")


class ConfigError(ValueError):
    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


@dataclass
class SolverBlock:
    tol: float = 1e-6
    max_iter: int = 5000
    symmetrize_every: int = 25


@dataclass
class InitialBlock:
    kind: str = "gaussian"
    width: float = 2.0
    amplitude: float = 1.0
    center: tuple = (0.0, 0.0)
    path: str = None


@dataclass
class EvolutionBlock:
    theta: int = -1
    dt: float = 1e-3
    T: float = 1.0
    record_every: int = 100
    initial: InitialBlock = field(default_factory=InitialBlock)


@dataclass
class VerifyBlock:
    trials: int = 100


@dataclass
class RunConfig:
    L: float
    N: int
    alpha: float
    potential: dict
    lam: float = None
    omega_ref: float = None
    solver: SolverBlock = field(default_factory=SolverBlock)
    evolution: EvolutionBlock = None
    verify: VerifyBlock = field(default_factory=VerifyBlock)
    seed: int = 0
    output_dir: str = DEFAULT_OUTPUT

    @property
    def grid(self):
        return GridSpec(self.L, self.N)

    def echo(self):
        """Canonical dictionary form, in the file layout."""
        out = {
            "grid": {"L": self.L, "N": self.N},
            "alpha": self.alpha,
            "potential": self.potential,
            "solver": asdict(self.solver),
            "verify": asdict(self.verify),
            "seed": self.seed,
            "output_dir": self.output_dir,
        }
        if self.lam is not None:
            out["lambda"] = self.lam
        if self.omega_ref is not None:
            out["omega_ref"] = self.omega_ref
        if self.evolution is not None:
            ev = asdict(self.evolution)
            ev["initial"]["center"] = list(ev["initial"]["center"])
            out["evolution"] = ev
        return out


# parsing ---------------------------------------------------------------------


class _Locator:
    def __init__(self, text):
        self.text = text or ""

    def line_of(self, key):
        m = re.search(r'"%s"\s*:' % re.escape(key), self.text)
        return self.text.count("\n", 0, m.start()) + 1 if m else None


def _take(block, allowed, where, loc, source):
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be an object", loc.line_of(where), source)
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}", loc.line_of(unknown[0]), source)
    return block


def _number(block, key, loc, source, default=None, integer=False, required=False):
    if key not in block:
        if required:
            raise ConfigError(f"missing required key {key!r}", None, source)
        return default
    v = block[key]
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok or not math.isfinite(v):
        kind = "an integer" if integer else "a finite number"
        raise ConfigError(f"{key} must be {kind}, got {v!r}", loc.line_of(key), source)
    return int(v) if integer else float(v)


def parse_config(data, text=None, source=None) -> RunConfig:
    loc = _Locator(text)
    top = _take(data, ("grid", "alpha", "lambda", "omega_ref", "potential", "solver", "evolution",
                       "verify", "seed", "output_dir"), "config", loc, source)
    for key in ("grid", "alpha", "potential"):
        if key not in top:
            raise ConfigError(f"missing required key {key!r}", None, source)

    grid = _take(top["grid"], ("L", "N"), "grid", loc, source)
    L = _number(grid, "L", loc, source, required=True)
    N = _number(grid, "N", loc, source, integer=True, required=True)
    if not L > 0:
        raise ConfigError(f"L must be positive, got {L}", loc.line_of("L"), source)
    if N < MIN_N or N % 2:
        raise ConfigError(f"N must be even and >= {MIN_N}, got {N}", loc.line_of("N"), source)

    alpha = _number(top, "alpha", loc, source, required=True)
    e_alpha = specfun.e_alpha(alpha)
    lam = _number(top, "lambda", loc, source)
    if lam is not None and not lam > abs(e_alpha):
        raise ConfigError(f"lambda must exceed |e_alpha| = {abs(e_alpha):.6g}, got {lam}",
                          loc.line_of("lambda"), source)
    omega_ref = _number(top, "omega_ref", loc, source)
    if omega_ref is not None and not omega_ref > abs(e_alpha):
        raise ConfigError(f"omega_ref must exceed |e_alpha| = {abs(e_alpha):.6g}",
                          loc.line_of("omega_ref"), source)

    pot = top["potential"]
    if not isinstance(pot, dict):
        raise ConfigError("potential must be an object", loc.line_of("potential"), source)
    try:
        from_config(pot, GridSpec(L, N))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"potential: {exc}", loc.line_of("potential"), source) from None

    s = _take(top.get("solver", {}), ("tol", "max_iter", "symmetrize_every"), "solver", loc, source)
    solver = SolverBlock(
        tol=_number(s, "tol", loc, source, SolverBlock.tol),
        max_iter=_number(s, "max_iter", loc, source, SolverBlock.max_iter, integer=True),
        symmetrize_every=_number(s, "symmetrize_every", loc, source, SolverBlock.symmetrize_every, integer=True),
    )
    if not solver.tol > 0 or solver.max_iter < 1 or solver.symmetrize_every < 0:
        raise ConfigError("solver needs tol > 0, max_iter >= 1, symmetrize_every >= 0",
                          loc.line_of("solver"), source)

    evolution = None
    if "evolution" in top:
        e = _take(top["evolution"], ("theta", "dt", "T", "record_every", "initial"), "evolution", loc, source)
        theta = _number(e, "theta", loc, source, EvolutionBlock.theta, integer=True)
        if theta not in (1, -1):
            raise ConfigError(f"theta must be +1 or -1, got {theta}", loc.line_of("theta"), source)
        dt = _number(e, "dt", loc, source, EvolutionBlock.dt)
        T = _number(e, "T", loc, source, EvolutionBlock.T)
        if not (T > 0 and 0 < dt <= T):
            raise ConfigError(f"dt must lie in (0, T], got dt={dt}, T={T}", loc.line_of("dt"), source)
        rec = _number(e, "record_every", loc, source, EvolutionBlock.record_every, integer=True)
        if rec < 1:
            raise ConfigError("record_every must be >= 1", loc.line_of("record_every"), source)
        evolution = EvolutionBlock(theta, dt, T, rec, _parse_initial(e.get("initial", {}), loc, source))

    v = _take(top.get("verify", {}), ("trials",), "verify", loc, source)
    verify = VerifyBlock(_number(v, "trials", loc, source, VerifyBlock.trials, integer=True))
    if verify.trials < 1:
        raise ConfigError("verify.trials must be >= 1", loc.line_of("trials"), source)

    seed = _number(top, "seed", loc, source, 0, integer=True)
    if seed < 0:
        raise ConfigError("seed must be non-negative", loc.line_of("seed"), source)
    output_dir = top.get("output_dir", DEFAULT_OUTPUT)
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir must be a non-empty string", loc.line_of("output_dir"), source)

    return RunConfig(L=L, N=N, alpha=alpha, potential=dict(pot), lam=lam, omega_ref=omega_ref,
                     solver=solver, evolution=evolution, verify=verify, seed=seed, output_dir=output_dir)


def _parse_initial(block, loc, source):
    b = _take(block, ("kind", "width", "amplitude", "center", "path"), "initial", loc, source)
    kind = b.get("kind", "gaussian")
    if kind not in INITIAL_KINDS:
        raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}, got {kind!r}", loc.line_of("kind"), source)
    width = _number(b, "width", loc, source, InitialBlock.width)
    if not width > 0:
        raise ConfigError("initial.width must be positive", loc.line_of("width"), source)
    amplitude = _number(b, "amplitude", loc, source, InitialBlock.amplitude)
    center = b.get("center", [0.0, 0.0])
    if (not isinstance(center, list) or len(center) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in center)):
        raise ConfigError("initial.center must be a list of two numbers", loc.line_of("center"), source)
    path = b.get("path")
    if kind == "file" and not isinstance(path, str):
        raise ConfigError("initial.kind 'file' needs a 'path'", loc.line_of("initial"), source)
    if path is not None and not isinstance(path, str):
        raise ConfigError("initial.path must be a string", loc.line_of("path"), source)
    return InitialBlock(kind, width, amplitude, (float(center[0]), float(center[1])), path)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, str(path)) from None
    return parse_config(data, text, str(path))
