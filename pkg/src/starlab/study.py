"""Experiment harness: c-ladders, N-ladders, corner layer and stability probe."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import model
from .errors import ConfigError, DomainError, FitDomainError, StarlabError
from .model import INFINITY, DensityProfile, ModelParams, StarSolution
from .solver import SolverConfig, limit_rescale, solve_star

DELTA_FIELDS = ("dE", "dKin", "dMu", "dR")
SIGN_TOLERANCE = 1e-9
IDENTITY_TOLERANCE = 1e-6


def default_workers() -> int:
    env = os.environ.get("STARLAB_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"STARLAB_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError("STARLAB_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _solve_point(args):
    params, N, config = args
    try:
        return solve_star(params, N, config)
    except StarlabError as exc:
        return exc


def _solve_many(tasks, workers):
    """Solve independent problems; results come back in task order."""
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [_solve_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_solve_point, tasks))


@dataclass(frozen=True)
class SweepRecord:
    """One ladder point; delta fields are measured against the limit solution."""

    c: float
    N: float
    total_energy: float = math.nan
    kinetic_moment: float = math.nan
    mu: float = math.nan
    radius: float = math.nan
    sup_density: float = math.nan
    dE: float = math.nan
    dKin: float = math.nan
    dMu: float = math.nan
    dR: float = math.nan
    residual: float = math.nan
    identity_residual: float = math.nan
    rescale_residual: float = math.nan
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @classmethod
    def failed(cls, c, N, exc) -> SweepRecord:
        return cls(c=c, N=N, status="error", message=f"{type(exc).__name__}: {exc}")


def _record(sol: StarSolution, limit: StarSolution | None = None, **extra) -> SweepRecord:
    residual = max(abs(sol.virial_residual), sol.multiplier_residual, sol.boundary_residual)
    fields = dict(
        c=sol.params.c,
        N=sol.mass,
        total_energy=sol.total_energy,
        kinetic_moment=sol.kinetic_moment,
        mu=sol.mu,
        radius=sol.radius,
        sup_density=sol.sup_density,
        residual=residual,
    )
    if limit is not None:
        dR = limit.radius - sol.radius
        predicted = (sol.mu - limit.mu) * sol.params.kappa * sol.mass / (sol.mu * limit.mu)
        identity = abs(dR - predicted) / abs(dR) if dR != 0.0 else abs(predicted)
        fields.update(
            dE=limit.total_energy - sol.total_energy,
            dKin=sol.kinetic_moment - limit.kinetic_moment,
            dMu=sol.mu - limit.mu,
            dR=dR,
            identity_residual=identity,
        )
        if identity > IDENTITY_TOLERANCE:
            fields.update(status="identity-fail",
                          message=f"radius/multiplier identity off by {identity:.3g}")
    fields.update(extra)
    return SweepRecord(**fields)


@dataclass
class SweepResult:
    records: list[SweepRecord]
    limit: StarSolution | None = None
    solutions: dict[float, StarSolution] = field(default_factory=dict)
    fits: dict[str, RateFit] = field(default_factory=dict)

    @property
    def status(self) -> int:
        """0 when every record is ok, 3 otherwise (solver failure)."""
        return 0 if all(r.ok for r in self.records) else 3

    def sign_violations(self, tol: float = SIGN_TOLERANCE) -> list[tuple[float, str, float]]:
        out = []
        for rec in self.records:
            if not rec.ok:
                continue
            for name in DELTA_FIELDS:
                value = getattr(rec, name)
                if value < -tol:
                    out.append((rec.c, name, value))
        return out


def validate_ladder(ladder: Sequence[float], what: str, allow_inf: bool = False) -> list[float]:
    values = [float(v) for v in ladder]
    if not values:
        raise ConfigError(f"{what} ladder is empty")
    for v in values:
        if math.isnan(v) or v <= 0.0:
            raise ConfigError(f"{what} ladder entries must be positive, got {v}")
        if v == INFINITY and not allow_inf:
            raise ConfigError(f"{what} ladder may not contain inf")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{what} ladder must be strictly increasing")
    return values


def sweep_c(params: ModelParams, N: float, ladder: Sequence[float],
            config: SolverConfig | None = None, workers: int | None = None) -> SweepResult:
    """Solve the limit star once and each finite-c star once; fill the deltas."""
    config = config or SolverConfig()
    cs = validate_ladder(ladder, "c")
    for c in cs:
        config.check_resolves(c)
    limit_params = params.with_c(INFINITY)
    tasks = [(limit_params, N, config)] + [(params.with_c(c), N, config) for c in cs]
    results = _solve_many(tasks, workers)
    limit = results[0]
    if isinstance(limit, Exception):
        raise limit
    records, solutions = [], {}
    for c, res in zip(cs, results[1:]):
        if isinstance(res, Exception):
            records.append(SweepRecord.failed(c, N, res))
            continue
        solutions[c] = res
        records.append(_record(res, limit))
    return SweepResult(records=records, limit=limit, solutions=solutions)


@dataclass(frozen=True)
class RateFit:
    """Least-squares power law y = amplitude * x**exponent on log-log axes."""

    observable: str
    x: tuple[float, ...]
    y: tuple[float, ...]
    exponent: float
    amplitude: float
    r2: float
    residuals: tuple[float, ...]
    x_name: str = "c"

    def predict(self, x):
        return self.amplitude * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(x: Sequence[float], y: Sequence[float], observable: str,
                  x_name: str = "c") -> RateFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise FitDomainError(f"fit of {observable} needs at least 3 points, got {x.size}")
    for xi, yi in zip(x, y):
        if not (yi > 0.0 and math.isfinite(yi)):
            raise FitDomainError(f"{observable} must be positive to fit a power law; got {yi!r} at {x_name}={xi:g}")
        if not (xi > 0.0 and math.isfinite(xi)):
            raise FitDomainError(f"{x_name} must be positive and finite; got {xi!r}")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else (1.0 if ss_res == 0.0 else 0.0)
    return RateFit(
        observable=observable,
        x=tuple(float(v) for v in x),
        y=tuple(float(v) for v in y),
        exponent=float(slope),
        amplitude=float(math.exp(intercept)),
        r2=r2,
        residuals=tuple(float(v) for v in resid),
        x_name=x_name,
    )


def fit_rate(records: Sequence[SweepRecord], observable: str, against: str = "c") -> RateFit:
    """Power-law fit of one record field against c (or N)."""
    usable = [r for r in records if r.ok]
    if len(usable) < 3:
        raise FitDomainError(f"fit of {observable} needs at least 3 valid records, got {len(usable)}")
    xs = [r.c if against == "c" else r.N for r in usable]
    ys = [getattr(r, observable) for r in usable]
    return fit_power_law(xs, ys, observable, x_name=against)


N_SCALING = {"sup_density": 2.0, "radius": -1.0 / 3.0, "mu": 4.0 / 3.0}


def sweep_n(params: ModelParams, ladder: Sequence[float], config: SolverConfig | None = None,
            workers: int | None = None) -> SweepResult:
    """Solve along an N-ladder at fixed c and fit the N-scaling exponents."""
    config = config or SolverConfig()
    ns = validate_ladder(ladder, "N")
    results = _solve_many([(params, N, config) for N in ns], workers)
    records, solutions = [], {}
    reference = None
    for N, res in zip(ns, results):
        if isinstance(res, Exception):
            records.append(SweepRecord.failed(params.c, N, res))
            continue
        solutions[N] = res
        extra = {}
        if params.is_limit:
            if reference is None:
                reference = res
            extra["rescale_residual"] = rescale_discrepancy(res, limit_rescale(reference, N))
        records.append(_record(res, **extra))
    fits = {}
    if sum(r.ok for r in records) >= 3:
        fits = {name: fit_rate(records, name, against="N") for name in N_SCALING}
    return SweepResult(records=records, solutions=solutions, fits=fits)


def rescale_discrepancy(solved: StarSolution, rescaled: StarSolution) -> float:
    """Largest relative difference in rho (sup norm), mu and R."""
    rho = rescaled.profile.evaluate(solved.profile.grid)
    diffs = [
        float(np.max(np.abs(solved.profile.values - rho))) / solved.sup_density,
        abs(solved.mu - rescaled.mu) / solved.mu,
        abs(solved.radius - rescaled.radius) / solved.radius,
    ]
    return max(diffs)


# ---------------------------------------------------------------------------
# Corner layer


@dataclass(frozen=True)
class CornerRow:
    c: float
    R_c: float
    R_inf: float
    dR: float
    rho_inf_at_Rc: float
    inner_radius: float
    rho_c_at_inner: float
    contained: bool


@dataclass
class CornerReport:
    N: float
    rows: list[CornerRow]
    K1: float
    dR_fit: RateFit | None
    decay_fit: RateFit | None
    status: str
    message: str = ""

    @property
    def containment(self) -> bool:
        return all(row.contained for row in self.rows)


def corner_layer_report(params: ModelParams, N: float, ladder: Sequence[float],
                        config: SolverConfig | None = None, workers: int | None = None,
                        noise_floor: float = 1e-9) -> CornerReport:
    """Densities inside the layer between the finite-c and limit supports.

    K1 is the amplitude of the fitted dR power law.  Layers narrower than
    ``noise_floor * R_inf`` are not resolved and make the report inconclusive.
    """
    sweep = sweep_c(params, N, ladder, config, workers)
    limit = sweep.limit
    good = [r for r in sweep.records if r.ok]
    resolved = [r for r in good if r.dR > noise_floor * limit.radius]
    if len(resolved) < 3 or len(resolved) < len(sweep.records):
        return CornerReport(N, [], math.nan, None, None, "inconclusive",
                            "corner layer not resolved above solver noise at every ladder point")
    dR_fit = fit_rate(resolved, "dR")
    K1 = dR_fit.amplitude
    rows = []
    for rec in resolved:
        sol = sweep.solutions[rec.c]
        inner = sol.radius - K1 / rec.c**2
        rows.append(CornerRow(
            c=rec.c,
            R_c=sol.radius,
            R_inf=limit.radius,
            dR=rec.dR,
            rho_inf_at_Rc=float(limit.profile.evaluate(sol.radius)),
            inner_radius=inner,
            rho_c_at_inner=float(sol.profile.evaluate(max(inner, 0.0))),
            contained=bool(0.0 <= inner <= sol.radius <= limit.radius),
        ))
    try:
        decay_fit = fit_power_law([r.c for r in rows], [r.rho_inf_at_Rc for r in rows],
                                  "rho_inf_at_Rc")
    except FitDomainError as exc:
        return CornerReport(N, rows, K1, dR_fit, None, "inconclusive", str(exc))
    return CornerReport(N, rows, K1, dR_fit, decay_fit, "ok")


# ---------------------------------------------------------------------------
# Stability probe


class NStarTracker:
    """Running minimum of the GNS ratio over every profile seen.

    Each ratio bounds N_*^(2/3) from above, so the running minimum is a
    nonincreasing upper estimate; ``estimate`` reports it in mass units.
    """

    def __init__(self):
        self.history: list[float] = []
        self.ratio = math.inf

    def update(self, profile: DensityProfile, params: ModelParams) -> float:
        self.ratio = min(self.ratio, model.gns_ratio(profile, params))
        self.history.append(self.estimate)
        return self.estimate

    @property
    def estimate(self) -> float:
        return self.ratio**1.5


STABLE = "STABLE"
UNBOUNDED_BELOW = "UNBOUNDED_BELOW"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class CriticalEstimate:
    params: ModelParams
    N: float
    family: str
    lambdas: tuple[float, ...]
    energies: tuple[float, ...]
    verdict: str
    gns_ratio: float
    n_star_upper: float


def trial_energy(profile: DensityProfile, params: ModelParams, lam: float,
                 coulomb: float | None = None) -> float:
    """Energy of lam^3 rho(lam x), evaluated on the unscaled grid."""
    D = model.coulomb_energy(profile) if coulomb is None else coulomb
    kin = profile.radial_integral(model.kinetic_density(profile.rho_support * lam**3, params))
    return kin / lam**3 - lam * params.kappa * D


_reference_cache: dict[tuple, StarSolution] = {}


def limit_reference(params: ModelParams, N: float, config: SolverConfig | None = None) -> DensityProfile:
    """Limit-model minimizer at mass N (solved once at N = 1, then rescaled)."""
    limit = params.with_c(INFINITY)
    key = (limit.m, limit.q, limit.kappa)
    if key not in _reference_cache:
        _reference_cache[key] = solve_star(limit, 1.0, config)
    return limit_rescale(_reference_cache[key], N).profile


def classify(lambdas: Sequence[float], energies: Sequence[float]) -> str:
    """Verdict from the upper half of a log-spaced energy scan."""
    e = np.asarray(energies, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    tail = max(4, e.size // 2)
    de = np.diff(e[-tail:])
    if not np.all(np.isfinite(e)):
        return INCONCLUSIVE
    end_slope = (e[-1] - e[-2]) / (math.log(lam[-1]) - math.log(lam[-2]))
    if np.all(de < 0.0) and end_slope < 0.0:
        return UNBOUNDED_BELOW
    if np.all(de > 0.0):
        return STABLE
    return INCONCLUSIVE


def critical_probe(params: ModelParams, N: float, lambda_span=(1e-2, 1e3, 24),
                   reference: DensityProfile | None = None, tracker: NStarTracker | None = None,
                   config: SolverConfig | None = None) -> CriticalEstimate:
    """Scan the dilation family lam^3 rho(lam x) of a reference profile.

    The default reference is the limit-model minimizer carrying mass N.
    """
    lo, hi, count = lambda_span
    count = int(count)
    if not (0.0 < lo < hi and math.isfinite(hi)):
        raise DomainError("lambda span must satisfy 0 < lo < hi < inf")
    if count < 8:
        raise DomainError("lambda span needs at least 8 samples")
    if reference is None:
        reference = limit_reference(params, N, config)
        family = f"dilations of the limit minimizer at N={N!r}"
    else:
        reference = reference.scale(N / reference.mass)
        family = f"dilations of a supplied profile rescaled to N={N!r}"
    lambdas = np.geomspace(lo, hi, count)
    D = model.coulomb_energy(reference)
    energies = [trial_energy(reference, params, float(lam), D) for lam in lambdas]
    tracker = tracker if tracker is not None else NStarTracker()
    tracker.update(reference, params)
    return CriticalEstimate(
        params=params,
        N=N,
        family=family,
        lambdas=tuple(float(v) for v in lambdas),
        energies=tuple(float(v) for v in energies),
        verdict=classify(lambdas, energies),
        gns_ratio=tracker.ratio,
        n_star_upper=tracker.estimate,
    )
