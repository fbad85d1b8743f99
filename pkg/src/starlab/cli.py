"""Command-line entry point: ``starlab <mode> [flags]``.

Settings are resolved in three layers: built-in mode defaults, then the
JSON document given by ``--config``, then explicit flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

from . import model, study
from .errors import (
    ConfigError,
    DomainError,
    FitDomainError,
    ParameterError,
    SolverError,
    UnsupportedModelError,
)
from .model import INFINITY, ModelParams
from .report import (
    FORMATS,
    RATE_COLUMNS,
    SOLUTION_COLUMNS,
    SWEEP_COLUMNS,
    ReportBundle,
    Table,
    rate_row,
    solution_row,
)
from .solver import SolverConfig, solve_star, verify_c_scaling

MODES = ("solve", "sweep-c", "sweep-n", "corner", "critical", "check")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_GATE = 4

CONFIG_KEYS = ("m", "q", "kappa", "c", "n", "ladder", "lambda_span", "seed",
               "out", "formats", "gate", "solver")
SOLVER_KEYS = tuple(f.name for f in dataclasses.fields(SolverConfig))

STANDARD_C_LADDER = (4.0, 8.0, 16.0, 32.0, 64.0)
MODE_DEFAULTS = {
    "solve": {"c": INFINITY, "n": 1.0},
    "sweep-c": {"n": 1.0, "ladder": STANDARD_C_LADDER},
    "sweep-n": {"c": INFINITY, "ladder": (0.5, 1.0, 2.0, 4.0)},
    "corner": {"n": 1.0, "ladder": (8.0, 16.0, 32.0, 64.0)},
    "critical": {"c": INFINITY, "n": 1.0, "lambda_span": (1e-2, 1e3, 24)},
    "check": {"ladder": STANDARD_C_LADDER},
}

# gate windows
RATE_WINDOW = (-2.1, -1.9)
RATE_R2 = 0.999
CORNER_WINDOW = (-3.3, -2.7)
LIMIT_EXPONENT_TOL = 1e-6
FINITE_EXPONENT_TOL = 0.05
RESCALE_TOL = 1e-8
VIRIAL_GATE = 1e-6
MULTIPLIER_GATE = 1e-6
BOUNDARY_GATE = 1e-8
C_SCALING_GATE = 1e-6
CHECK_MASSES = (0.5, 1.0, 2.0)


def parse_number(value: Any, name: str) -> float:
    """Float from a flag or JSON value; the literal ``inf`` is accepted."""
    if isinstance(value, bool):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        if text == "inf":
            return INFINITY
        try:
            out = float(text)
        except ValueError:
            raise ConfigError(f"{name} must be a number or 'inf', got {value!r}") from None
        if math.isnan(out):
            raise ConfigError(f"{name} may not be nan")
        return out
    raise ConfigError(f"{name} must be a number, got {value!r}")


def parse_list(value: Any, name: str) -> tuple[float, ...]:
    if isinstance(value, str):
        items = [v for v in value.split(",") if v.strip()]
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        raise ConfigError(f"{name} must be a comma list or JSON array")
    if not items:
        raise ConfigError(f"{name} is empty")
    return tuple(parse_number(v, name) for v in items)


def parse_formats(value: Any) -> tuple[str, ...]:
    items = value.split(",") if isinstance(value, str) else list(value)
    items = [str(v).strip().lower() for v in items if str(v).strip()]
    bad = [v for v in items if v not in FORMATS]
    if bad or not items:
        raise ConfigError(f"formats must be drawn from {','.join(FORMATS)}, got {value!r}")
    return tuple(dict.fromkeys(items))


@dataclass
class RunConfig:
    mode: str
    m: float = 1.0
    q: float = 1.0
    kappa: float = 1.0
    c: float | None = None
    n: float | None = None
    ladder: tuple[float, ...] | None = None
    lambda_span: tuple[float, float, int] | None = None
    seed: int = 42
    out: str = "starlab_out"
    formats: tuple[str, ...] = FORMATS
    gate: bool = False
    solver: dict = field(default_factory=dict)

    def params(self, c: float | None = None) -> ModelParams:
        return ModelParams(m=self.m, q=self.q, kappa=self.kappa,
                           c=self.c if c is None else c)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(**self.solver)

    def echo(self) -> dict:
        """JSON-safe settings; feeding this back via --config reproduces the run."""
        def num(v):
            return "inf" if v == INFINITY else v

        doc = {
            "m": self.m, "q": self.q, "kappa": self.kappa,
            "c": None if self.c is None else num(self.c),
            "n": self.n,
            "ladder": None if self.ladder is None else [num(v) for v in self.ladder],
            "lambda_span": None if self.lambda_span is None else list(self.lambda_span),
            "seed": self.seed, "out": self.out, "formats": list(self.formats),
            "gate": self.gate, "solver": dict(sorted(self.solver.items())),
        }
        return {k: v for k, v in doc.items() if v is not None}


def _apply(cfg: RunConfig, key: str, value: Any) -> None:
    if key in ("m", "q", "kappa", "c", "n"):
        setattr(cfg, key, parse_number(value, key))
    elif key == "ladder":
        cfg.ladder = parse_list(value, key)
    elif key == "lambda_span":
        span = parse_list(value, key)
        if len(span) != 3 or span[2] != int(span[2]):
            raise ConfigError("lambda_span must be lo,hi,count")
        cfg.lambda_span = (span[0], span[1], int(span[2]))
    elif key == "seed":
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise ConfigError(f"seed must be an integer, got {value!r}")
        try:
            cfg.seed = int(value)
        except ValueError:
            raise ConfigError(f"seed must be an integer, got {value!r}") from None
    elif key == "out":
        if not isinstance(value, str) or not value:
            raise ConfigError("out must be a nonempty path")
        cfg.out = value
    elif key == "formats":
        cfg.formats = parse_formats(value)
    elif key == "gate":
        if not isinstance(value, bool):
            raise ConfigError("gate must be true or false")
        cfg.gate = value
    elif key == "solver":
        if not isinstance(value, dict):
            raise ConfigError("solver must be a JSON object")
        unknown = sorted(set(value) - set(SOLVER_KEYS))
        if unknown:
            raise ConfigError(f"unknown solver keys: {', '.join(unknown)}")
        cfg.solver.update(value)
    else:
        raise ConfigError(f"unknown config key {key!r}")


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = sorted(set(doc) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return doc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="starlab", description="Thomas-Fermi star solver and study harness.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--m", help="particle mass")
    p.add_argument("--q", help="spin degeneracy")
    p.add_argument("--kappa", help="gravitational coupling")
    p.add_argument("--c", help="speed of light, or 'inf' for the limit model")
    p.add_argument("--n", help="total mass N")
    p.add_argument("--ladder", help="comma-separated c values (or N values for sweep-n)")
    p.add_argument("--lambda-span", dest="lambda_span", help="lo,hi,count for the critical probe")
    p.add_argument("--seed", help="seed for the randomized bound check")
    p.add_argument("--out", help="output directory")
    p.add_argument("--formats", help="comma list from csv,json,svg")
    p.add_argument("--backend", choices=("shoot", "picard", "both"), help="solver backend")
    p.add_argument("--gate", action="store_true", default=None, help="fail with exit 4 outside acceptance windows")
    p.add_argument("--config", help="JSON config file; flags override its values")
    return p


def build_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(mode=args.mode)
    for key, value in MODE_DEFAULTS[args.mode].items():
        setattr(cfg, key, value)
    if args.config:
        for key, value in load_config_file(args.config).items():
            _apply(cfg, key, value)
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            _apply(cfg, key, value)
    if args.backend is not None:
        cfg.solver["backend"] = args.backend
    cfg.params(c=INFINITY if cfg.c is None else cfg.c)  # validates the constants
    cfg.solver_config()
    return cfg


# ---------------------------------------------------------------------------
# Modes. Each returns (exit code, notes).


def _solution_table(solutions) -> Table:
    table = Table("solutions", SOLUTION_COLUMNS)
    for sol in solutions:
        table.add(**solution_row(sol))
    return table


def _solution_gate(sol) -> list[str]:
    fails = []
    tag = f"c={sol.params.c:g} n={sol.mass:g}"
    if abs(sol.virial_residual) > VIRIAL_GATE:
        fails.append(f"virial residual {sol.virial_residual:.3g} at {tag}")
    if sol.multiplier_residual > MULTIPLIER_GATE:
        fails.append(f"multiplier residual {sol.multiplier_residual:.3g} at {tag}")
    if sol.boundary_residual > BOUNDARY_GATE:
        fails.append(f"boundary residual {sol.boundary_residual:.3g} at {tag}")
    if not sol.total_energy < 0.0:
        fails.append(f"nonnegative energy at {tag}")
    return fails


def _finish(cfg: RunConfig, failures: list[str], notes: list[str], solver_failed: bool = False):
    notes = notes + failures
    if solver_failed:
        return EXIT_SOLVER, notes
    if cfg.gate and failures:
        return EXIT_GATE, notes
    return EXIT_OK, notes


def run_solve(cfg: RunConfig, bundle: ReportBundle):
    sol = solve_star(cfg.params(), cfg.n, cfg.solver_config())
    bundle.add_table(_solution_table([sol]))
    profile = Table("profile", ("r", "rho"))
    for r, rho in zip(sol.profile.grid, sol.profile.values):
        profile.add(r=float(r), rho=float(rho))
    bundle.add_table(profile)
    notes = []
    if "backend_agreement" in sol.metadata:
        diffs = sol.metadata["backend_agreement"]
        notes.append("backend agreement: " + ", ".join(f"{k}={v:.3g}" for k, v in sorted(diffs.items())))
    return _finish(cfg, _solution_gate(sol), notes)


def _rates(bundle: ReportBundle, fits) -> None:
    table = Table("rates", RATE_COLUMNS)
    for fit in fits:
        table.add(**rate_row(fit))
        bundle.add_chart(fit)
    bundle.add_table(table)


def run_sweep_c(cfg: RunConfig, bundle: ReportBundle):
    result = study.sweep_c(cfg.params(c=INFINITY), cfg.n, cfg.ladder, cfg.solver_config())
    bundle.add_table(_solution_table([result.limit] + [result.solutions[c] for c in sorted(result.solutions)]))
    sweeps = Table("sweeps", SWEEP_COLUMNS)
    for rec in result.records:
        sweeps.add(c=rec.c, n=rec.N, dE=rec.dE, dKin=rec.dKin, dMu=rec.dMu, dR=rec.dR, status=rec.status)
    bundle.add_table(sweeps)
    failures, notes, fits = [], [], []
    for rec in result.records:
        if not rec.ok:
            notes.append(f"c={rec.c:g}: {rec.status} {rec.message}")
    try:
        fits = [study.fit_rate(result.records, name) for name in study.DELTA_FIELDS]
    except FitDomainError as exc:
        failures.append(f"rate fit refused: {exc}")
    _rates(bundle, fits)
    for fit in fits:
        if not (RATE_WINDOW[0] <= fit.exponent <= RATE_WINDOW[1]) or fit.r2 < RATE_R2:
            failures.append(f"{fit.observable} exponent {fit.exponent:.4f} (r2 {fit.r2:.6f}) outside window")
    for c, name, value in result.sign_violations():
        failures.append(f"{name} = {value:.3g} < 0 at c={c:g}")
    for sol in [result.limit, *result.solutions.values()]:
        failures.extend(_solution_gate(sol))
    return _finish(cfg, failures, notes, solver_failed=result.status != 0)


def run_sweep_n(cfg: RunConfig, bundle: ReportBundle):
    params = cfg.params()
    result = study.sweep_n(params, cfg.ladder, cfg.solver_config())
    bundle.add_table(_solution_table([result.solutions[n] for n in sorted(result.solutions)]))
    failures, notes = [], []
    for rec in result.records:
        if not rec.ok:
            notes.append(f"n={rec.N:g}: {rec.status} {rec.message}")
    if not result.fits:
        failures.append("fewer than 3 solved masses; exponent fits refused")
    _rates(bundle, result.fits.values())
    tol = LIMIT_EXPONENT_TOL if params.is_limit else FINITE_EXPONENT_TOL
    for name, fit in result.fits.items():
        target = study.N_SCALING[name]
        if abs(fit.exponent - target) > tol:
            failures.append(f"{name} exponent {fit.exponent:.8f} differs from {target:.6f} by more than {tol:g}")
    if params.is_limit:
        scaling = Table("scaling", ("n", "rescale_res"))
        for rec in result.records:
            scaling.add(n=rec.N, rescale_res=rec.rescale_residual)
            if rec.ok and rec.rescale_residual > RESCALE_TOL:
                failures.append(f"rescaling residual {rec.rescale_residual:.3g} at n={rec.N:g}")
        bundle.add_table(scaling)
    return _finish(cfg, failures, notes, solver_failed=result.status != 0)


CORNER_COLUMNS = ("c", "R_c", "R_inf", "dR", "rho_inf_at_Rc", "inner_radius", "rho_c_at_inner", "contained")


def run_corner(cfg: RunConfig, bundle: ReportBundle):
    report = study.corner_layer_report(cfg.params(c=INFINITY), cfg.n, cfg.ladder, cfg.solver_config())
    table = Table("corner", CORNER_COLUMNS)
    for row in report.rows:
        table.add(**dataclasses.asdict(row))
    bundle.add_table(table)
    fits = [f for f in (report.dR_fit, report.decay_fit) if f is not None]
    _rates(bundle, fits)
    notes = [f"status: {report.status}"] + ([report.message] if report.message else [])
    failures = []
    if report.status != "ok":
        failures.append("corner layer inconclusive")
    else:
        if not report.containment:
            failures.append("support containment violated")
        e = report.decay_fit.exponent
        if not CORNER_WINDOW[0] <= e <= CORNER_WINDOW[1]:
            failures.append(f"corner decay exponent {e:.4f} outside window")
    return _finish(cfg, failures, notes)


def run_critical(cfg: RunConfig, bundle: ReportBundle):
    est = study.critical_probe(cfg.params(), cfg.n, cfg.lambda_span, config=cfg.solver_config())
    scan = Table("critical_scan", ("lambda", "energy"))
    for lam, e in zip(est.lambdas, est.energies):
        scan.add(**{"lambda": lam, "energy": e})
    bundle.add_table(scan)
    summary = Table("critical", ("c", "n", "verdict", "gns_ratio", "n_star_upper"))
    summary.add(c=est.params.c, n=est.N, verdict=est.verdict, gns_ratio=est.gns_ratio,
                n_star_upper=est.n_star_upper)
    bundle.add_table(summary)
    return EXIT_OK, [f"family: {est.family}", f"verdict: {est.verdict}"]


CHECK_COLUMNS = ("check", "c", "n", "value", "gate", "passed")


def run_check(cfg: RunConfig, bundle: ReportBundle):
    base = cfg.params(c=INFINITY)
    config = cfg.solver_config()
    masses = (cfg.n,) if cfg.n is not None else CHECK_MASSES
    cs = tuple(study.validate_ladder(cfg.ladder, "c")) + (INFINITY,)
    table = Table("check", CHECK_COLUMNS)
    failures, notes = [], []
    solver_failed = False

    def add(name, c, n, value, gate, passed):
        table.add(check=name, c=c, n=n, value=value, gate=gate, passed=bool(passed))
        if not passed:
            failures.append(f"{name} failed at c={c:g} n={n:g}: {value!r}")

    for c in cs:
        config.check_resolves(c)
        for n in masses:
            try:
                sol = solve_star(base.with_c(c), n, config)
            except SolverError as exc:
                solver_failed = True
                notes.append(f"solve failed at c={c:g} n={n:g}: {exc}")
                continue
            add("virial", c, n, sol.virial_residual, VIRIAL_GATE, abs(sol.virial_residual) <= VIRIAL_GATE)
            add("multiplier", c, n, sol.multiplier_residual, MULTIPLIER_GATE,
                sol.multiplier_residual <= MULTIPLIER_GATE)
            add("boundary", c, n, sol.boundary_residual, BOUNDARY_GATE, sol.boundary_residual <= BOUNDARY_GATE)
            add("energy_negative", c, n, sol.total_energy, 0.0, sol.total_energy < 0.0)
    n_scaling = cfg.n if cfg.n is not None else 1.0
    for c in (4.0, 16.0):
        try:
            res = verify_c_scaling(base.with_c(c), n_scaling, c, config)
        except SolverError as exc:
            solver_failed = True
            notes.append(f"c-scaling solve failed at c={c:g}: {exc}")
            continue
        add("c_scaling", c, n_scaling, res, C_SCALING_GATE, res <= C_SCALING_GATE)
    bounds = model.dispersion_bound_check(seed=cfg.seed)
    add("dispersion_bounds", math.nan, float(bounds.samples), bounds.worst_violation, bounds.tolerance,
        bounds.passed)
    bundle.add_table(table)
    if solver_failed:
        return EXIT_SOLVER, notes + failures
    return (EXIT_GATE if failures else EXIT_OK), notes + failures


RUNNERS: dict[str, Callable] = {
    "solve": run_solve,
    "sweep-c": run_sweep_c,
    "sweep-n": run_sweep_n,
    "corner": run_corner,
    "critical": run_critical,
    "check": run_check,
}

STATUS_NAMES = {EXIT_OK: "ok", EXIT_SOLVER: "solver-failure", EXIT_GATE: "gate-failure"}


def _fail(message: str) -> None:
    print(f"starlab: error: {message}", file=sys.stderr)


def run(argv=None) -> int:
    try:
        cfg = build_config(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except (ConfigError, ParameterError, DomainError) as exc:
        _fail(str(exc))
        return EXIT_CONFIG
    try:
        bundle = ReportBundle(cfg.out, cfg.formats)
    except OSError as exc:
        _fail(f"cannot create output directory {cfg.out}: {exc.strerror}")
        return EXIT_CONFIG
    try:
        code, notes = RUNNERS[cfg.mode](cfg, bundle)
    except (ConfigError, ParameterError, DomainError, UnsupportedModelError) as exc:
        _fail(str(exc))
        return EXIT_CONFIG
    except SolverError as exc:
        message = f"{type(exc).__name__}: {exc}"
        _fail(message)
        code, notes = EXIT_SOLVER, [message]
    except OSError as exc:
        _fail(f"cannot write output: {exc}")
        return EXIT_CONFIG
    else:
        if code == EXIT_GATE:
            _fail("gate failed: " + "; ".join(notes))
        elif code == EXIT_SOLVER:
            _fail("solver failure: " + "; ".join(notes))
    try:
        bundle.write_manifest(cfg.mode, cfg.echo(), STATUS_NAMES[code], code, notes)
    except OSError as exc:
        _fail(f"cannot write manifest: {exc}")
        return EXIT_CONFIG
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
