"""Minimizers of the Chandrasekhar / limit functional at prescribed mass.

Two independent backends:

* shooting on the local potential u = kappa V - mu, which by Newton's theorem
  satisfies (r^2 u')' = -4 pi kappa r^2 rho(u_+), with an outer root find on
  the central value u(0);
* damped Picard iteration of the Euler-Lagrange map
  rho -> inverse_dispersion([kappa V_rho - mu]_+) on a graded radial mesh.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from . import model
from .errors import (
    BracketError,
    ConfigError,
    CriticalMassExceeded,
    DomainError,
    NoBoundaryError,
    NonConvergenceError,
    SolverError,
    StiffnessError,
    UnsupportedModelError,
)
from .model import DensityProfile, ModelParams, StarSolution

log = logging.getLogger(__name__)

Backend = Literal["shoot", "picard", "both"]
BACKENDS = ("shoot", "picard", "both")


@dataclass(frozen=True)
class SolverConfig:
    backend: Backend = "shoot"
    ode_rtol: float = 1e-11
    ode_atol: float = 1e-13
    mass_rtol: float = 1e-10
    picard_damping: float = 0.5
    picard_max_iter: int = 500
    picard_tol: float = 1e-10
    grid_nodes: int = 4001
    initial_u0: float = 1.0
    safeguard_factor: float = 1e4
    u0_max: float = 1e30

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        for name in ("ode_rtol", "ode_atol", "mass_rtol", "picard_tol",
                     "initial_u0", "safeguard_factor", "u0_max"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 < self.picard_damping <= 1.0:
            raise ConfigError("picard_damping must lie in (0, 1]")
        if self.picard_max_iter < 1:
            raise ConfigError("picard_max_iter must be >= 1")
        if self.grid_nodes < 21:
            raise ConfigError("grid_nodes must be >= 21")

    @property
    def n_inside(self) -> int:
        """Even number of intervals inside the support (about 1/1.05 of the grid)."""
        n = int(round((self.grid_nodes - 1) / 1.05))
        return n - (n % 2)

    @property
    def n_outside(self) -> int:
        return self.grid_nodes - 1 - self.n_inside

    def grid(self, radius: float) -> np.ndarray:
        return model.graded_grid(radius, self.n_inside, self.n_outside)

    def check_resolves(self, c: float) -> None:
        """Reject tolerances too loose to resolve a c^-2 relative signal."""
        if c == model.INFINITY:
            return
        budget = 1e-3 / c**2
        worst = max(self.ode_rtol, self.mass_rtol, self.picard_tol)
        if worst > budget:
            raise ConfigError(
                f"solver tolerance {worst:g} cannot resolve the 1/c^2 signal at c={c:g}"
                f" (needs <= {budget:g})"
            )


@dataclass
class ShootingState:
    """Local potential u(r) = kappa V(r) - mu and its derivative at radius r."""

    r: float
    u: float
    du: float
    u0: float


@dataclass(frozen=True, eq=False)
class ShotResult:
    u0: float
    radius: float
    mass: float
    du_at_R: float
    profile: DensityProfile | None = None
    steps: int = 0
    nfev: int = 0
    r_steps: np.ndarray | None = field(default=None, repr=False)
    u_steps: np.ndarray | None = field(default=None, repr=False)

    def __iter__(self):
        return iter((self.profile, self.radius, self.mass, self.du_at_R))


def _density_fn(params: ModelParams):
    pref = params.q / (6.0 * math.pi**2)
    two_m = 2.0 * params.m
    if params.is_limit:
        def rho(u):
            return pref * (two_m * u) ** 1.5 if u > 0.0 else 0.0
    else:
        inv_c2 = 1.0 / params.c**2

        def rho(u):
            return pref * (u * (u * inv_c2 + two_m)) ** 1.5 if u > 0.0 else 0.0
    return rho


def _integrate(params: ModelParams, u0: float, config: SolverConfig, dense: bool):
    if not (u0 > 0.0 and math.isfinite(u0)):
        raise DomainError(f"central potential must be positive, got {u0}")
    kappa = params.kappa
    rho_of = _density_fn(params)
    rho0 = rho_of(u0)
    scale = math.sqrt(u0 / (4.0 * math.pi * kappa * rho0))
    r_start = 1e-6 * scale
    u_start = u0 - (2.0 * math.pi * kappa / 3.0) * rho0 * r_start**2
    m_start = (4.0 * math.pi / 3.0) * rho0 * r_start**3
    mass_scale = 4.0 * math.pi * rho0 * scale**3

    def rhs(r, y):
        return (-kappa * y[1] / (r * r), 4.0 * math.pi * r * r * rho_of(y[0]))

    def surface(r, y):
        return y[0]

    surface.terminal = True
    surface.direction = -1

    sol = solve_ivp(
        rhs,
        (r_start, config.safeguard_factor * scale),
        (u_start, m_start),
        method="DOP853",
        rtol=config.ode_rtol,
        atol=(config.ode_atol * u0, config.ode_atol * mass_scale),
        events=surface,
        dense_output=dense,
    )
    if sol.status == -1:
        raise StiffnessError(f"ODE integration failed at u0={u0:g}: {sol.message}")
    if sol.t_events[0].size == 0:
        raise NoBoundaryError(
            f"no free boundary before r={config.safeguard_factor * scale:g} for u0={u0:g}"
        )
    radius = float(sol.t_events[0][0])
    mass = float(sol.y_events[0][0][1])
    return sol, radius, mass, (rho0, r_start, u0)


def shoot_profile(params: ModelParams, u0: float, config: SolverConfig | None = None,
                  build_profile: bool = True) -> ShotResult:
    """Integrate outward from u(0) = u0 to the free boundary u = 0.

    Returns the density on the configured graded grid, the radius R, the mass
    N = -R^2 u'(R) / kappa and u'(R).
    """
    config = config or SolverConfig()
    sol, radius, mass, (rho0, r_start, u0) = _integrate(params, u0, config, dense=build_profile)
    du = -params.kappa * mass / radius**2
    profile = None
    if build_profile:
        grid = config.grid(radius)
        inside = grid < radius
        r_in = grid[inside]
        u = np.empty_like(r_in)
        core = r_in < r_start
        u[core] = u0 - (2.0 * math.pi * params.kappa / 3.0) * rho0 * r_in[core] ** 2
        u[~core] = sol.sol(r_in[~core])[0]
        values = np.zeros_like(grid)
        values[inside] = model.inverse_dispersion(np.maximum(u, 0.0), params)
        profile = DensityProfile(grid, values, radius)
    return ShotResult(
        u0=u0,
        radius=radius,
        mass=mass,
        du_at_R=du,
        profile=profile,
        steps=int(sol.t.size),
        nfev=int(sol.nfev),
        r_steps=sol.t if build_profile else None,
        u_steps=sol.y[0] if build_profile else None,
    )


def _find_central_potential(params: ModelParams, N: float, config: SolverConfig):
    """Outer root find: u0 such that the shot mass equals N."""
    shots = 0
    cache: dict[float, float] = {}

    def mass_at(log_u0):
        nonlocal shots
        if log_u0 not in cache:
            shots += 1
            cache[log_u0] = _integrate(params, math.exp(log_u0), config, dense=False)[2]
        return cache[log_u0]

    def f(log_u0):
        return math.log(mass_at(log_u0) / N)

    a = math.log(config.initial_u0)
    fa = f(a)
    largest = mass_at(a)
    b = fb = None
    # N(u0) ~ u0^(3/4) in the limit model: use that slope to step towards the target
    for _ in range(200):
        step = -fa * 4.0 / 3.0
        if fa < 0.0:
            step = max(step, math.log(2.0))
        else:
            step = min(step, -math.log(2.0))
        step = max(min(step, math.log(1e6)), -math.log(1e6))
        cand = a + step
        if cand > math.log(config.u0_max):
            raise CriticalMassExceeded(
                f"mass {N:g} not reached below u0={config.u0_max:g}; largest mass {largest:.12g}",
                largest,
            )
        prev_mass = mass_at(a)
        fc = f(cand)
        mc = mass_at(cand)
        if fa < 0.0 and not params.is_limit:
            if mc <= prev_mass * (1.0 + 1e-13):
                raise CriticalMassExceeded(
                    f"mass {N:g} exceeds the critical mass at c={params.c:g}; "
                    f"mass saturates at {max(largest, mc):.12g}",
                    max(largest, mc),
                )
        largest = max(largest, mc)
        if fc == 0.0:
            return math.exp(cand), shots
        if (fc > 0.0) != (fa > 0.0):
            b, fb = cand, fc
            break
        a, fa = cand, fc
    if b is None:
        raise BracketError(f"could not bracket mass {N:g}; largest mass {largest:g}")
    lo, hi = sorted((a, b))
    root = brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(f(root)) > config.mass_rtol:
        raise BracketError(f"mass root find stalled: residual {f(root):.3g}")
    return math.exp(root), shots


def _finish_shooting(params: ModelParams, N: float, u0: float, config: SolverConfig,
                     shots: int) -> StarSolution:
    shot = shoot_profile(params, u0, config)
    profile = shot.profile
    if not profile.is_decreasing():
        raise SolverError("shooting produced a density that is not symmetric decreasing")
    mu = params.kappa * N / shot.radius
    pot = model.newton_potential(profile)
    mu_center = params.kappa * pot.values[0] - u0
    meta = {
        "u0": u0,
        "shots": shots,
        "ode_steps": shot.steps,
        "ode_nfev": shot.nfev,
        "shot_mass": shot.mass,
        "du_at_R": shot.du_at_R,
        "mu_center": mu_center,
        "r_steps": shot.r_steps,
        "u_steps": shot.u_steps,
    }
    return model.assemble_solution(params, profile, mu, N, "shoot", shots, meta)


def _shoot_star(params: ModelParams, N: float, config: SolverConfig) -> StarSolution:
    u0, shots = _find_central_potential(params, N, config)
    return _finish_shooting(params, N, u0, config, shots)


def solve_star(params: ModelParams, N: float, config: SolverConfig | None = None) -> StarSolution:
    """Minimizer of the energy at mass N using the configured backend(s)."""
    config = config or SolverConfig()
    if not (N > 0.0 and math.isfinite(N)):
        raise DomainError(f"mass must be positive and finite, got {N}")
    if config.backend == "picard":
        return picard_solve(params, N, config)
    sol = _shoot_star(params, N, config)
    if config.backend == "both":
        other = picard_solve(params, N, config)
        agreement = compare_solutions(sol, other)
        sol.metadata["backend_agreement"] = agreement
        sol.metadata["backends_agree"] = (agreement["rho"] <= 1e-6 and
                                          max(agreement["mu"], agreement["radius"],
                                              agreement["total_energy"]) <= 1e-8)
        if not sol.metadata["backends_agree"]:
            log.warning("shooting and Picard backends disagree: %s", agreement)
    return sol


def compare_solutions(a: StarSolution, b: StarSolution) -> dict[str, float]:
    """Relative differences between two solutions of the same problem."""
    grid = a.profile.grid
    rho_b = b.profile.evaluate(grid)
    out = {"rho": float(np.max(np.abs(a.profile.values - rho_b)) / a.profile.sup_density)}
    for name in ("mu", "radius", "total_energy", "kinetic_energy", "coulomb_energy"):
        va, vb = getattr(a, name), getattr(b, name)
        out[name] = abs(va - vb) / abs(va)
    return out


# ---------------------------------------------------------------------------
# Picard backend


def _trial_radius(params: ModelParams, N: float, config: SolverConfig) -> float:
    """Radius of the best dilate of (1 - r^2)_+^(3/2) carrying mass N."""
    shape = DensityProfile.from_function(lambda r: (1.0 - r * r) ** 1.5, 1.0,
                                         n_inside=400, n_outside=0)
    shape = shape.scale(N / shape.mass)
    if params.is_limit:
        kin = model.kinetic_energy(shape, params)
        return 2.0 * kin / (params.kappa * model.coulomb_energy(shape))
    limit_guess = _trial_radius(params.with_c(model.INFINITY), N, config)
    D = model.coulomb_energy(shape)
    slope = params.c * params.K_cl * shape.moment(4.0 / 3.0) - params.kappa * D
    if slope <= 0.0:
        raise CriticalMassExceeded(
            f"trial family is unbounded below at N={N:g}, c={params.c:g}", float("nan"))

    def energy(log_lam):
        lam = math.exp(log_lam)
        kin = model.kinetic_energy(shape.scale(lam**3), params) / lam**3
        return kin - lam * params.kappa * D

    res = minimize_scalar(energy, bracket=(math.log(0.5 / limit_guess), math.log(2.0 / limit_guess)))
    return math.exp(-res.x) if res.success else limit_guess


def _initial_profile(params: ModelParams, N: float, config: SolverConfig) -> DensityProfile:
    R0 = _trial_radius(params, N, config)
    prof = DensityProfile.from_function(lambda r: (1.0 - (r / R0) ** 2) ** 1.5, R0,
                                        n_inside=config.n_inside, n_outside=config.n_outside)
    return prof.scale(N / prof.mass)


def _picard_map(profile: DensityProfile, params: ModelParams, N: float, config: SolverConfig):
    """One application of the Euler-Lagrange map with mu fixed by the mass.

    Returns (mu, new support radius, V evaluator).
    """
    kappa = params.kappa
    pot = model.newton_potential(profile)
    R = profile.support_radius
    n = profile.rho_support.size
    spline = CubicSpline(pot.grid[:n], pot.values[:n])
    Nk = pot.mass
    V0 = float(pot.values[0])

    def V_at(r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r <= R
        out[inside] = spline(r[inside])
        out[~inside] = Nk / r[~inside]
        return out

    def support(mu):
        if mu <= kappa * Nk / R:
            return kappa * Nk / mu
        return brentq(lambda r: kappa * float(spline(r)) - mu, 0.0, R, xtol=1e-15 * R, maxiter=200)

    def density_on(grid, mu, Rp):
        vals = np.zeros_like(grid)
        inside = grid < Rp
        w = kappa * V_at(grid[inside]) - mu
        vals[inside] = model.inverse_dispersion(np.maximum(w, 0.0), params)
        return vals

    def mass_of(mu):
        Rp = support(mu)
        grid = model.graded_grid(Rp, config.n_inside, 0)
        return model.FOUR_PI * model.integrate(density_on(grid, mu, Rp) * grid**2, grid)

    mu_hi = kappa * V0 * (1.0 - 1e-9)
    mu_lo = kappa * Nk / R
    for _ in range(100):
        if mass_of(mu_lo) > N:
            break
        mu_lo *= 0.5
    else:
        raise BracketError("Picard: could not bracket the multiplier")
    if mass_of(mu_hi) >= N:
        raise BracketError("Picard: multiplier bracket degenerate")
    mu = brentq(lambda m: mass_of(m) - N, mu_lo, mu_hi, xtol=1e-16 * mu_hi, rtol=4 * np.finfo(float).eps, maxiter=300)
    return mu, support(mu), density_on


def picard_solve(params: ModelParams, N: float, config: SolverConfig | None = None,
                 initial: DensityProfile | None = None) -> StarSolution:
    """Damped fixed-point iteration rho <- (1-tau) rho + tau g([kappa V_rho - mu]_+)."""
    config = config or SolverConfig()
    if not (N > 0.0 and math.isfinite(N)):
        raise DomainError(f"mass must be positive and finite, got {N}")
    tau = config.picard_damping
    prof = initial if initial is not None else _initial_profile(params, N, config)
    prof = prof.scale(N / prof.mass)
    R_init = prof.support_radius
    history: list[float] = []
    for it in range(1, config.picard_max_iter + 1):
        mu, Rp, density_on = _picard_map(prof, params, N, config)
        if not math.isfinite(Rp) or Rp < 1e-8 * R_init:
            raise CriticalMassExceeded(
                f"Picard iterates collapse at N={N:g}, c={params.c:g}", float("nan"))
        R_next = max(prof.support_radius, Rp)
        grid = config.grid(R_next)
        old = prof.evaluate(grid)
        new = density_on(grid, mu, Rp)
        diff = float(np.max(np.abs(new - old))) / max(float(new.max()), float(old.max()))
        history.append(diff)
        if diff <= config.picard_tol:
            final = DensityProfile(config.grid(Rp), density_on(config.grid(Rp), mu, Rp), Rp)
            if not final.is_decreasing():
                raise SolverError("Picard produced a density that is not symmetric decreasing")
            meta = {"sweeps": it, "last_diff": diff, "history": history}
            return model.assemble_solution(params, final, mu, N, "picard", it, meta)
        mixed = DensityProfile(grid, (1.0 - tau) * old + tau * new, R_next)
        prof = mixed.scale(N / mixed.mass)
        if it >= 60 and diff > 0.999 * min(history[-50:-1]):
            raise NonConvergenceError(
                f"Picard stagnated after {it} sweeps (difference {diff:.3g})", diff)
    raise NonConvergenceError(
        f"Picard did not converge in {config.picard_max_iter} sweeps (difference {history[-1]:.3g})",
        history[-1],
    )


# ---------------------------------------------------------------------------
# Exact covariances


def limit_rescale(solution: StarSolution, N: float) -> StarSolution:
    """Exact rescaling of a limit-model minimizer to mass N.

    rho_N(x) = s^2 rho(s^(1/3) x) with s = N / N0, so R ~ s^(-1/3),
    mu ~ s^(4/3), ||rho||_inf ~ s^2 and E ~ s^(7/3).
    """
    if not solution.params.is_limit:
        raise UnsupportedModelError("exact N-rescaling only holds for the limit model")
    if not N > 0.0:
        raise DomainError("target mass must be positive")
    s = N / solution.mass
    if s == 1.0:
        return solution
    prof = solution.profile
    shrink = s ** (1.0 / 3.0)
    new_prof = DensityProfile(prof.grid / shrink, prof.values * s * s, prof.support_radius / shrink)
    meta = {"rescaled_from": solution.mass, "source_backend": solution.backend}
    return model.assemble_solution(solution.params, new_prof, solution.mu * s ** (4.0 / 3.0), N,
                                   solution.backend, solution.iterations, meta)


def verify_c_scaling(params: ModelParams, N: float, c: float,
                     config: SolverConfig | None = None) -> float:
    """Relative residual of E_{c=1}(c^(-3/2) N) = c^(-7/2) E_c(N)."""
    if c == model.INFINITY or not c > 0.0:
        raise UnsupportedModelError("c-scaling needs a finite positive c")
    base = params.with_c(1.0)
    e_one = solve_star(base, c**-1.5 * N, config).total_energy
    target = c**-3.5 * solve_star(params.with_c(c), N, config).total_energy
    return abs(e_one - target) / abs(target)


def with_backend(config: SolverConfig, backend: Backend) -> SolverConfig:
    return replace(config, backend=backend)
