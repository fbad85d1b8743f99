"""Hand-written fixed-step RK4 integrator for the Lane-Emden equation.

Kept free of scipy so it can serve as an independent oracle for the
shooting solver.
"""

import math


def _rhs(xi, theta, dtheta, n):
    return dtheta, -max(theta, 0.0) ** n - 2.0 * dtheta / xi


def first_zero(n=1.5, h=2e-4, xi0=1e-4):
    """Return (xi_1, -xi_1^2 theta'(xi_1)) for index n."""
    xi = xi0
    theta = 1.0 - xi0**2 / 6.0 + n * xi0**4 / 120.0
    dtheta = -xi0 / 3.0 + n * xi0**3 / 30.0
    while True:
        k1 = _rhs(xi, theta, dtheta, n)
        k2 = _rhs(xi + h / 2, theta + h / 2 * k1[0], dtheta + h / 2 * k1[1], n)
        k3 = _rhs(xi + h / 2, theta + h / 2 * k2[0], dtheta + h / 2 * k2[1], n)
        k4 = _rhs(xi + h, theta + h * k3[0], dtheta + h * k3[1], n)
        new_theta = theta + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        new_dtheta = dtheta + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if new_theta <= 0.0:
            # cubic Hermite root inside the last step
            lo, hi = 0.0, 1.0
            for _ in range(60):
                s = 0.5 * (lo + hi)
                h00 = 2 * s**3 - 3 * s**2 + 1
                h10 = s**3 - 2 * s**2 + s
                h01 = -2 * s**3 + 3 * s**2
                h11 = s**3 - s**2
                val = h00 * theta + h10 * h * dtheta + h01 * new_theta + h11 * h * new_dtheta
                lo, hi = (s, hi) if val > 0 else (lo, s)
            s = 0.5 * (lo + hi)
            root = xi + s * h
            slope = dtheta + s * (new_dtheta - dtheta)
            return root, -root**2 * slope
        xi, theta, dtheta = xi + h, new_theta, new_dtheta
        if xi > 50.0:
            raise RuntimeError("no zero found")


def nondimensionalize(u0, rho0, radius, mass, kappa=1.0):
    """Map a limit-model star onto Lane-Emden variables (xi_1, -xi^2 theta')."""
    a = math.sqrt(u0 / (4.0 * math.pi * kappa * rho0))
    return radius / a, mass / (4.0 * math.pi * rho0 * a**3)
