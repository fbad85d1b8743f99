"""Numerical kernel for the Chandrasekhar functional and its c = inf limit.

Everything here is a pure function of its arguments.  Radial integrals use a
composite Simpson rule on the stored (possibly non-uniform) grid; solver
profiles live on a mesh graded towards the free boundary so that the
``(R - r)**(3/2)`` edge of the density does not degrade the rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any

import numpy as np
from scipy.integrate import cumulative_simpson as _cumulative_simpson
from scipy.interpolate import CubicSpline
from scipy.special import binom

from .errors import DomainError, ParameterError, UnsupportedModelError

INFINITY = math.inf
"""Speed-of-light value selecting the nonrelativistic limit model."""

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model, in dimensionless model units."""

    m: float = 1.0
    q: float = 1.0
    kappa: float = 1.0
    c: float = INFINITY

    def __post_init__(self):
        for name in ("m", "q", "kappa", "c"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or math.isnan(value):
                raise ParameterError(f"{name} must be a real number, got {value!r}")
        if not (0.0 < self.m < math.inf):
            raise ParameterError(f"m must be positive and finite, got {self.m}")
        if not (1.0 <= self.q < math.inf):
            raise ParameterError(f"q must be >= 1, got {self.q}")
        if not (0.0 < self.kappa < math.inf):
            raise ParameterError(f"kappa must be positive and finite, got {self.kappa}")
        if not self.c > 0.0:
            raise ParameterError(f"c must be positive or INFINITY, got {self.c}")

    @property
    def is_limit(self) -> bool:
        return self.c == INFINITY

    @property
    def A0(self) -> float:
        """(6 pi^2 / q)^(2/3)."""
        return (6.0 * math.pi**2 / self.q) ** (2.0 / 3.0)

    @property
    def K_cl(self) -> float:
        """Optimal constant of the kinetic/Coulomb (GNS-type) inequality."""
        return 0.75 * (6.0 * math.pi**2 / self.q) ** (1.0 / 3.0)

    @property
    def rest_energy(self) -> float:
        if self.is_limit:
            raise UnsupportedModelError("rest energy m c^2 is undefined for the limit model")
        return self.m * self.c**2

    def with_c(self, c: float) -> ModelParams:
        return replace(self, c=c)

    def describe(self) -> dict[str, Any]:
        return {"m": self.m, "q": self.q, "kappa": self.kappa, "c": self.c}


# ---------------------------------------------------------------------------
# Quadrature on non-uniform grids


def cumulative_simpson(f: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Running integral of ``f`` over a non-uniform ``x``, starting at 0."""
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return np.zeros_like(x)
    if x.size == 2:
        return np.array([0.0, 0.5 * (x[1] - x[0]) * (f[0] + f[1])])
    return _cumulative_simpson(f, x=x, initial=0.0)


def integrate(f: np.ndarray, x: np.ndarray) -> float:
    return float(cumulative_simpson(f, x)[-1])


def graded_grid(radius: float, n_inside: int = 3800, n_outside: int = 200,
                outer_factor: float = 1.05) -> np.ndarray:
    """Radial mesh on [0, outer_factor*radius] with ``radius`` as a node.

    Inside the support r = R x (2 - x) for uniform x, which clusters nodes
    quadratically at the free boundary; outside the spacing is uniform.
    """
    if not radius > 0.0 or not math.isfinite(radius):
        raise DomainError(f"grid radius must be positive and finite, got {radius}")
    if n_inside < 2 or n_inside % 2:
        raise DomainError("n_inside must be an even integer >= 2")
    x = np.linspace(0.0, 1.0, n_inside + 1)
    inner = radius * x * (2.0 - x)
    inner[-1] = radius
    if n_outside <= 0:
        return inner
    outer = np.linspace(radius, outer_factor * radius, n_outside + 1)[1:]
    return np.concatenate((inner, outer))


# ---------------------------------------------------------------------------
# Radial densities


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """Radial density sampled on ``grid`` with compact support ``[0, R]``.

    ``support_radius`` must be one of the grid nodes; all integrals run over
    the nodes up to and including it.
    """

    grid: np.ndarray
    values: np.ndarray
    support_radius: float
    mass: float = field(init=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 3:
            raise DomainError("grid and values must be 1-D arrays of equal length >= 3")
        if grid[0] != 0.0 or np.any(np.diff(grid) <= 0.0):
            raise DomainError("grid must start at 0 and be strictly increasing")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise DomainError("density values must be finite and nonnegative")
        idx = int(np.searchsorted(grid, self.support_radius))
        if idx >= grid.size or grid[idx] != self.support_radius:
            raise DomainError("support_radius must coincide with a grid node")
        if idx < 2:
            raise DomainError("support must contain at least two grid intervals")
        if np.any(values[idx + 1 :] != 0.0):
            raise DomainError("density must vanish beyond the support radius")
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support_radius", float(self.support_radius))
        object.__setattr__(self, "_n_support", idx + 1)
        object.__setattr__(self, "mass", self.radial_integral(values[: idx + 1]))

    @classmethod
    def from_function(cls, func, radius: float, **grid_kw) -> DensityProfile:
        """Sample ``func(r)`` on a graded grid with support ``[0, radius]``."""
        grid = graded_grid(radius, **grid_kw)
        values = np.zeros_like(grid)
        inside = grid <= radius
        values[inside] = np.maximum(np.asarray(func(grid[inside]), dtype=float), 0.0)
        return cls(grid, values, radius)

    @property
    def r_support(self) -> np.ndarray:
        return self.grid[: self._n_support]

    @property
    def rho_support(self) -> np.ndarray:
        return self.values[: self._n_support]

    @property
    def sup_density(self) -> float:
        return float(self.values.max())

    def radial_integral(self, f: np.ndarray) -> float:
        """4 pi * int_0^R f(r) r^2 dr for ``f`` sampled on the support nodes."""
        r = self.grid[: len(f)]
        return FOUR_PI * integrate(np.asarray(f) * r * r, r)

    def moment(self, power: float) -> float:
        """4 pi * int rho^power r^2 dr, i.e. the L^power norm to the power."""
        return self.radial_integral(self.rho_support**power)

    @cached_property
    def _spline(self):
        # rho^(2/3) is proportional to a smooth potential near the edge
        return CubicSpline(self.r_support, self.rho_support ** (2.0 / 3.0))

    def evaluate(self, r) -> np.ndarray | float:
        """Density at arbitrary radii (zero outside the support)."""
        r_arr = np.asarray(r, dtype=float)
        out = np.zeros_like(r_arr)
        inside = (r_arr >= 0.0) & (r_arr <= self.support_radius)
        out[inside] = np.maximum(self._spline(r_arr[inside]), 0.0) ** 1.5
        return float(out) if out.ndim == 0 else out

    def is_decreasing(self, rtol: float = 1e-10) -> bool:
        steps = np.diff(self.values)
        return bool(np.all(steps <= rtol * max(self.sup_density, 1e-300)))

    def dilate(self, lam: float) -> DensityProfile:
        """Mass-preserving rescaling rho -> lam^3 rho(lam x)."""
        if not lam > 0.0:
            raise DomainError("dilation factor must be positive")
        return DensityProfile(self.grid / lam, self.values * lam**3, self.support_radius / lam)

    def scale(self, factor: float) -> DensityProfile:
        return DensityProfile(self.grid, self.values * factor, self.support_radius)


# ---------------------------------------------------------------------------
# Dispersion relation and kinetic energy densities

# Below this value of t = eta/(m c) the closed forms lose more than ~1e-13 to
# cancellation; power series in t^2 are used instead.
SERIES_SWITCH = 0.25
_SERIES_TERMS = 22
_k = np.arange(1, _SERIES_TERMS + 1)
# sqrt(1+x) - 1 = sum b_k x^k ;  1 - 1/sqrt(1+x) = sum e_k x^k
_F_COEF = binom(0.5, _k) / (2 * _k + 3)
_H_COEF = -binom(-0.5, _k) / (2 * _k + 3)
_DEFECT_COEF = _F_COEF - _H_COEF


def _series(coef, t):
    x = t * t
    acc = np.zeros_like(t)
    for a in coef[::-1]:
        acc = acc * x + a
    return acc * t**5


def _F(t):
    """int_0^t s^2 (sqrt(1+s^2) - 1) ds."""
    out = np.empty_like(t)
    small = t < SERIES_SWITCH
    out[small] = _series(_F_COEF, t[small])
    tb = t[~small]
    out[~small] = (tb * (2.0 * tb**2 + 1.0) * np.sqrt(1.0 + tb**2) - np.arcsinh(tb)) / 8.0 - tb**3 / 3.0
    return out


def _H(t):
    """int_0^t s^2 (1 - 1/sqrt(1+s^2)) ds."""
    out = np.empty_like(t)
    small = t < SERIES_SWITCH
    out[small] = _series(_H_COEF, t[small])
    tb = t[~small]
    out[~small] = tb**3 / 3.0 - 0.5 * (tb * np.sqrt(1.0 + tb**2) - np.arcsinh(tb))
    return out


def _G(t):
    """int_0^t s^2 / sqrt(1+s^2) ds."""
    out = np.empty_like(t)
    small = t < SERIES_SWITCH
    ts = t[small]
    out[small] = ts**3 / 3.0 - _series(_H_COEF, ts)
    tb = t[~small]
    out[~small] = 0.5 * (tb * np.sqrt(1.0 + tb**2) - np.arcsinh(tb))
    return out


def _defect(t):
    """int_0^t s^2 (sqrt(1+s^2) - 1)^2 / sqrt(1+s^2) ds  (= F - H)."""
    out = np.empty_like(t)
    small = t < SERIES_SWITCH
    out[small] = _series(_DEFECT_COEF, t[small])
    out[~small] = _F(t[~small]) - _H(t[~small])
    return out


def _as_array(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError(f"{name} contains NaN")
    return arr


def _ret(arr):
    return float(arr) if arr.ndim == 0 else arr


def eta(rho, params: ModelParams):
    """Fermi momentum (6 pi^2 rho / q)^(1/3)."""
    rho = _as_array(rho, "rho")
    if np.any(rho < 0.0):
        raise DomainError("density must be nonnegative")
    return _ret(np.cbrt(6.0 * math.pi**2 * rho / params.q))


def density_from_eta(eta_value, params: ModelParams):
    return _ret(params.q / (6.0 * math.pi**2) * np.asarray(eta_value, dtype=float) ** 3)


def dispersion(p, params: ModelParams):
    """Kinetic symbol sqrt(c^2 p^2 + m^2 c^4) - m c^2, or p^2/2m at c = inf."""
    p = _as_array(p, "p")
    if np.any(p < 0.0):
        raise DomainError("momentum magnitude must be nonnegative")
    if params.is_limit:
        return _ret(p * p / (2.0 * params.m))
    c, m = params.c, params.m
    cp2 = (c * p) ** 2
    return _ret(cp2 / (np.sqrt(cp2 + (m * c * c) ** 2) + m * c * c))


def dispersion_gap(p, params: ModelParams):
    """p^2/2m - T_c(p), evaluated without cancellation (finite c only)."""
    if params.is_limit:
        raise UnsupportedModelError("the gap to the limit symbol needs finite c")
    p = _as_array(p, "p")
    c, m = params.c, params.m
    denom = np.sqrt((p / c) ** 2 + m * m) + m
    return _ret(p**4 / (2.0 * m * c * c * denom**2))


def inverse_dispersion(w, params: ModelParams):
    """Density whose Fermi-surface kinetic energy equals ``w`` (w >= 0)."""
    w = _as_array(w, "w")
    if np.any(w < 0.0):
        raise DomainError("local chemical potential must be nonnegative; apply the positive part first")
    if params.is_limit:
        eta2 = 2.0 * params.m * w
    else:
        eta2 = w * (w / params.c**2 + 2.0 * params.m)
    return _ret(params.q / (6.0 * math.pi**2) * eta2**1.5)


def _t_and_scale(rho, params):
    rho = _as_array(rho, "rho")
    if np.any(rho < 0.0):
        raise DomainError("density must be nonnegative")
    a = params.m * params.c
    t = np.atleast_1d(np.cbrt(6.0 * math.pi**2 * rho / params.q) / a)
    return rho, t, a


def kinetic_density(rho, params: ModelParams):
    """Semiclassical kinetic energy density j_mc(rho), or j_inf at c = inf."""
    if params.is_limit:
        rho = _as_array(rho, "rho")
        if np.any(rho < 0.0):
            raise DomainError("density must be nonnegative")
        return _ret(0.3 / params.m * params.A0 * rho ** (5.0 / 3.0))
    rho, t, a = _t_and_scale(rho, params)
    out = params.q * params.c * a**4 / (2.0 * math.pi**2) * _F(t)
    return _ret(out.reshape(rho.shape))


def kinetic_density_bar(rho, params: ModelParams):
    """q/(8 pi^3) * int_{|p|<eta} dp / sqrt(c^2 p^2 + m^2 c^4)."""
    if params.is_limit:
        raise UnsupportedModelError("j-bar has no limit-model analogue")
    rho, t, a = _t_and_scale(rho, params)
    out = params.q * a * a / (2.0 * math.pi**2 * params.c) * _G(t)
    return _ret(out.reshape(rho.shape))


def rest_energy_deficit(rho, params: ModelParams):
    """m c^2 rho - m^2 c^4 jbar(rho), without cancellation."""
    if params.is_limit:
        raise UnsupportedModelError("rest energy deficit needs finite c")
    rho, t, a = _t_and_scale(rho, params)
    out = params.q * params.c * a**4 / (2.0 * math.pi**2) * _H(t)
    return _ret(out.reshape(rho.shape))


def kinetic_defect(rho, params: ModelParams):
    """j_mc + m^2 c^4 jbar - m c^2 rho, which is nonnegative."""
    if params.is_limit:
        raise UnsupportedModelError("kinetic defect needs finite c")
    rho, t, a = _t_and_scale(rho, params)
    out = params.q * params.c * a**4 / (2.0 * math.pi**2) * _defect(t)
    return _ret(out.reshape(rho.shape))


# ---------------------------------------------------------------------------
# Newtonian potential and energies


@dataclass(frozen=True, eq=False)
class NewtonPotential:
    """V on the profile grid; V(r) = mass / r for r >= radius."""

    grid: np.ndarray
    values: np.ndarray
    mass: float
    radius: float

    def exterior(self, r):
        return self.mass / np.asarray(r, dtype=float)


def newton_potential(profile: DensityProfile) -> NewtonPotential:
    """Potential of a radial density by Newton's theorem.

    V(r) = (1/r) * enclosed(r) + int_{|y|>r} rho/|y|; the enclosed mass is
    accumulated outward from the centre, the shell term inward from R.
    """
    r = profile.r_support
    rho = profile.rho_support
    if profile.mass <= 0.0:
        raise DomainError("empty profile has no meaningful potential")
    enclosed = FOUR_PI * cumulative_simpson(rho * r * r, r)
    # inward accumulation of 4 pi int_r^R rho s ds
    rev = cumulative_simpson((rho * r)[::-1], (r[-1] - r)[::-1])
    shell = FOUR_PI * rev[::-1]
    inner = np.empty_like(r)
    inner[0] = shell[0]
    inner[1:] = enclosed[1:] / r[1:] + shell[1:]
    mass = float(enclosed[-1])
    outside = profile.grid[r.size :]
    values = np.concatenate((inner, mass / outside))
    return NewtonPotential(profile.grid, values, mass, profile.support_radius)


def coulomb_energy(profile: DensityProfile) -> float:
    """D(rho, rho) = 1/2 int V rho."""
    if profile.mass == 0.0:
        return 0.0
    pot = newton_potential(profile)
    n = profile.rho_support.size
    return 0.5 * profile.radial_integral(pot.values[:n] * profile.rho_support)


@dataclass(frozen=True)
class EnergyParts:
    kinetic: float
    coulomb: float
    total: float

    def __iter__(self):
        return iter((self.kinetic, self.coulomb, self.total))


def kinetic_energy(profile: DensityProfile, params: ModelParams) -> float:
    return profile.radial_integral(kinetic_density(profile.rho_support, params))


def total_energy(profile: DensityProfile, params: ModelParams) -> EnergyParts:
    kin = kinetic_energy(profile, params)
    coul = coulomb_energy(profile)
    return EnergyParts(kin, coul, kin - params.kappa * coul)


def kinetic_correction_bound(profile: DensityProfile, params: ModelParams) -> float:
    """A0^2/(8 m^3 c^2) * int rho^(7/3): bound on E_inf - E_c for one profile."""
    if params.is_limit:
        raise UnsupportedModelError("correction bound needs finite c")
    return params.A0**2 / (8.0 * params.m**3 * params.c**2) * profile.moment(7.0 / 3.0)


# ---------------------------------------------------------------------------
# Residuals of the exact identities satisfied by minimizers


def virial_residual(profile: DensityProfile, params: ModelParams, coulomb: float | None = None) -> float:
    """Signed residual of the dilation (virial) identity.

    Finite c: int j - m^2c^4 int jbar - kappa D + m c^2 N, assembled as
    int (j + m c^2 rho - m^2 c^4 jbar) - kappa D to avoid cancelling m c^2 N.
    Limit:    (3/5m) A0 int rho^(5/3) - kappa D.
    """
    D = coulomb_energy(profile) if coulomb is None else coulomb
    rho = profile.rho_support
    if params.is_limit:
        return 0.6 / params.m * params.A0 * profile.moment(5.0 / 3.0) - params.kappa * D
    dens = kinetic_density(rho, params) + rest_energy_deficit(rho, params)
    return profile.radial_integral(dens) - params.kappa * D


def multiplier_identity_residual(profile: DensityProfile, params: ModelParams, mu: float,
                                 coulomb: float | None = None) -> float:
    """|(-mu N) - (int T(eta) rho - 2 kappa D)| / (mu N)."""
    D = coulomb_energy(profile) if coulomb is None else coulomb
    rho = profile.rho_support
    fermi = dispersion(np.cbrt(6.0 * math.pi**2 * rho / params.q), params)
    rhs = profile.radial_integral(fermi * rho) - 2.0 * params.kappa * D
    lhs = -mu * profile.mass
    return abs(lhs - rhs) / abs(mu * profile.mass)


def boundary_residual(profile: DensityProfile, params: ModelParams, mu: float) -> float:
    """|mu - kappa N / R| / mu."""
    return abs(mu - params.kappa * profile.mass / profile.support_radius) / abs(mu)


def multiplier_residual(profile: DensityProfile, params: ModelParams, mu: float,
                        coulomb: float | None = None) -> float:
    return max(multiplier_identity_residual(profile, params, mu, coulomb),
               boundary_residual(profile, params, mu))


def gns_ratio(profile: DensityProfile, params: ModelParams) -> float:
    """K_cl ||rho||_{4/3}^{4/3} ||rho||_1^{2/3} / (kappa D); bounds N_*^(2/3) from above."""
    D = coulomb_energy(profile)
    if not D > 0.0:
        raise DomainError("GNS ratio needs a nonzero profile")
    return params.K_cl * profile.moment(4.0 / 3.0) * profile.mass ** (2.0 / 3.0) / (params.kappa * D)


# ---------------------------------------------------------------------------
# Solutions


@dataclass(frozen=True, eq=False)
class StarSolution:
    """A computed minimizer with its energies and identity residuals.

    ``virial_residual`` is normalized by the kinetic energy; the multiplier and
    boundary residuals are normalized by mu N and mu respectively.
    """

    params: ModelParams
    profile: DensityProfile
    mass: float
    mu: float
    radius: float
    kinetic_energy: float
    coulomb_energy: float
    total_energy: float
    virial_residual: float
    multiplier_residual: float
    boundary_residual: float
    backend: str
    iterations: int
    metadata: dict = field(default_factory=dict)

    @property
    def kinetic_moment(self) -> float:
        """int rho^(5/3)."""
        return self.profile.moment(5.0 / 3.0)

    @property
    def sup_density(self) -> float:
        return self.profile.sup_density

    @property
    def central_density(self) -> float:
        return float(self.profile.values[0])

    def with_mu(self, mu: float) -> StarSolution:
        """Copy with a different multiplier and recomputed residuals."""
        return assemble_solution(self.params, self.profile, mu, self.mass, self.backend,
                                 self.iterations, dict(self.metadata))


def assemble_solution(params: ModelParams, profile: DensityProfile, mu: float, mass: float,
                      backend: str, iterations: int, metadata: dict | None = None) -> StarSolution:
    kin, coul, tot = total_energy(profile, params)
    vir = virial_residual(profile, params, coulomb=coul) / kin
    return StarSolution(
        params=params,
        profile=profile,
        mass=mass,
        mu=mu,
        radius=profile.support_radius,
        kinetic_energy=kin,
        coulomb_energy=coul,
        total_energy=tot,
        virial_residual=vir,
        multiplier_residual=multiplier_residual(profile, params, mu, coulomb=coul),
        boundary_residual=boundary_residual(profile, params, mu),
        backend=backend,
        iterations=iterations,
        metadata=metadata or {},
    )


# ---------------------------------------------------------------------------
# Scalar operator inequalities


def operator_bound_constant(delta, params: ModelParams):
    """B = min(2 sqrt(delta) / sqrt(2 sqrt(5) m), c/2)."""
    delta = np.asarray(delta, dtype=float)
    b = 2.0 * np.sqrt(delta) / math.sqrt(2.0 * math.sqrt(5.0) * params.m)
    if not params.is_limit:
        b = np.minimum(b, params.c / 2.0)
    return _ret(b)


@dataclass(frozen=True)
class BoundCheckReport:
    samples: int
    seed: int
    violations: int
    worst_violation: float
    worst_lower_bound: float
    worst_sandwich_low: float
    worst_sandwich_high: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _violation(lhs, rhs):
    """Normalized amount by which ``lhs >= rhs`` fails (<= 0 when it holds)."""
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    scale = np.where(scale > 0.0, scale, 1.0)
    return (rhs - lhs) / scale


def dispersion_bound_check(samples: int = 100_000, seed: int = 42,
                           p_range=(1e-3, 1e3), m_range=(1e-2, 1e2),
                           c_range=(1.0, 1e3), delta_range=(1e-3, 1e3),
                           tolerance: float = 1e-12) -> BoundCheckReport:
    """Sample (p, m, c, delta) log-uniformly and test the two operator bounds.

    Checks T_c(p) + delta >= B p and, for c >= 1,
    p^4/(8m(p^2+m^2)c^2) <= p^2/2m - T_c(p) <= p^4/(8 m^3 c^2).
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    for lo, hi in (p_range, m_range, c_range, delta_range):
        if not 0.0 < lo <= hi:
            raise DomainError("sample ranges must be positive and ordered")
    if c_range[0] < 1.0:
        raise DomainError("the sandwich bound needs c >= 1")
    rng = np.random.default_rng(seed)

    def draw(lo, hi):
        return np.exp(rng.uniform(math.log(lo), math.log(hi), samples))

    p, m, c, delta = draw(*p_range), draw(*m_range), draw(*c_range), draw(*delta_range)
    cp2 = (c * p) ** 2
    mc2 = m * c * c
    T = cp2 / (np.sqrt(cp2 + mc2 * mc2) + mc2)
    B = np.minimum(2.0 * np.sqrt(delta) / np.sqrt(2.0 * math.sqrt(5.0) * m), c / 2.0)
    v_lower = _violation(T + delta, B * p)
    gap = p**4 / (2.0 * m * c * c * (np.sqrt((p / c) ** 2 + m * m) + m) ** 2)
    v_low = _violation(gap, p**4 / (8.0 * m * (p * p + m * m) * c * c))
    v_high = _violation(p**4 / (8.0 * m**3 * c * c), gap)
    worst = np.maximum(np.maximum(v_lower, v_low), v_high)
    return BoundCheckReport(
        samples=samples,
        seed=seed,
        violations=int(np.count_nonzero(worst > tolerance)),
        worst_violation=float(worst.max()),
        worst_lower_bound=float(v_lower.max()),
        worst_sandwich_low=float(v_low.max()),
        worst_sandwich_high=float(v_high.max()),
        tolerance=tolerance,
    )
