import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import bisect

from utils.errors import OracleError

logger = logging.getLogger(__name__)

SOBOLEV_CONSTANT = 64.0 / math.sqrt(math.pi)
BISECTION_TOLERANCE = 1e-12


# =========================================================
# 🔵 SELF-SIMILAR SPHERES: dρ/dt = -(4λ1/ρ + 2λ2)
# =========================================================
def _check(rho0, lambda1, lambda2):
    if not rho0 > 0:
        raise OracleError(f"rho0 must be positive, got {rho0}")
    if lambda1 < 0 or lambda2 < 0:
        raise OracleError(f"sphere oracle needs lambda1 >= 0 and lambda2 >= 0, got ({lambda1}, {lambda2})")
    if lambda1 == 0 and lambda2 == 0:
        raise OracleError("no extinction for lambda1 = lambda2 = 0 (round spheres are stationary)")


def _antiderivative(r, lambda1, lambda2):
    """
    G(r) = ∫₀^r s ds / (4λ1 + 2λ2 s), so t(ρ) = G(ρ0) - G(ρ).
    Written as (a/b²)(y - log1p(y)) with a = 4λ1, b = 2λ2, y = b r / a; series for small y.
    """
    if lambda2 == 0:
        return r ** 2 / (8.0 * lambda1)
    if lambda1 == 0:
        return r / (2.0 * lambda2)
    a, b = 4.0 * lambda1, 2.0 * lambda2
    y = b * r / a
    if y < 1e-4:
        # (a/b²)·y² folded into r²/a so b² never underflows
        return r ** 2 / a * (0.5 - y / 3 + y ** 2 / 4 - y ** 3 / 5)
    return a / b ** 2 * (y - math.log1p(y))


def extinction_time(rho0, lambda1, lambda2):
    _check(rho0, lambda1, lambda2)
    return _antiderivative(rho0, lambda1, lambda2)


def sphere_radius(rho0, lambda1, lambda2, t):
    """Radius of the shrinking sphere at time t (closed form or bisection on G)."""
    T = extinction_time(rho0, lambda1, lambda2)
    if t < 0:
        raise OracleError(f"time must be non-negative, got {t}")
    if t >= T:
        raise OracleError(f"t = {t} is past the extinction time {T}")
    if t == 0:
        return float(rho0)
    if lambda2 == 0:
        return math.sqrt(rho0 ** 2 - 8.0 * lambda1 * t)
    if lambda1 == 0:
        return rho0 - 2.0 * lambda2 * t
    target = T - t
    return bisect(lambda r: _antiderivative(r, lambda1, lambda2) - target, 0.0, rho0, xtol=BISECTION_TOLERANCE)


def integrate_radius(rho0, lambda1, lambda2, times, rtol=1e-11, atol=1e-13):
    """Independent route: adaptive RK45 integration of the radius ODE."""
    _check(rho0, lambda1, lambda2)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    solution = solve_ivp(
        lambda t, y: -(4.0 * lambda1 / y + 2.0 * lambda2),
        (0.0, float(times.max())),
        [rho0],
        method="RK45",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not solution.success:
        raise OracleError(f"radius integration failed: {solution.message}")
    return solution.y[0]


def sphere_energy(rho, lambda1, lambda2):
    """W_{λ1,λ2} of a round sphere: 4π + 4πλ1ρ² + (4π/3)λ2ρ³."""
    return 4.0 * math.pi + 4.0 * math.pi * lambda1 * rho ** 2 + 4.0 * math.pi / 3.0 * lambda2 * rho ** 3


@dataclass(frozen=True)
class SphereTrajectory:
    rho0: float
    lambda1: float
    lambda2: float = 0.0

    def __post_init__(self):
        _check(self.rho0, self.lambda1, self.lambda2)

    @property
    def extinction_time(self):
        return extinction_time(self.rho0, self.lambda1, self.lambda2)

    def radius(self, t):
        if np.ndim(t) == 0:
            return sphere_radius(self.rho0, self.lambda1, self.lambda2, float(t))
        return np.array([sphere_radius(self.rho0, self.lambda1, self.lambda2, float(x)) for x in t])

    def area(self, t):
        return 4.0 * np.pi * np.asarray(self.radius(t)) ** 2

    def energy(self, t):
        return sphere_energy(np.asarray(self.radius(t)), self.lambda1, self.lambda2)


# =========================================================
# 📜 THEOREM CONSTANTS
# =========================================================
def theorem_bound(energy_f0, lambda1):
    """Upper bound on the maximal existence time: W(f0) / (4λ1²π) + 1."""
    if not lambda1 > 0:
        raise OracleError(f"theorem bound needs lambda1 > 0, got {lambda1}")
    if energy_f0 < 0:
        raise OracleError(f"energy must be non-negative, got {energy_f0}")
    return energy_f0 / (4.0 * lambda1 ** 2 * math.pi) + 1.0


def smallness_constants(lambda1, lambda2=0.0, c3=None, c4=None):
    """
    Computable parts of the ε₂ caps. c3 and c4 have no known values and are inputs;
    caps depending on them are None when they are not supplied.
    """
    if not lambda1 > 0:
        raise OracleError(f"smallness constants need lambda1 > 0, got {lambda1}")
    if lambda2 < 0:
        raise OracleError(f"smallness constants need lambda2 >= 0, got {lambda2}")
    cs2 = SOBOLEV_CONSTANT ** 2
    c6 = lambda1 ** 2 / 2.0
    c7 = lambda2 ** 2 / lambda1 ** 3 + 4.0
    report = {
        "C_S": SOBOLEV_CONSTANT,
        "lambda2_cap": lambda1 ** 3 / (4.0 * lambda2 ** 2) if lambda2 > 0 else None,
        "c6": c6,
        "c7": c7,
        "c3": c3,
        "c4": c4,
        "epsilon2_cap": None,
        "c4_cap": None,
    }
    if c3 is not None:
        if not c3 > 0:
            raise OracleError(f"c3 must be positive, got {c3}")
        if lambda2 == 0:
            report["epsilon2_cap"] = min(1.0, 1.0 / (2.0 * c3)) / (32.0 * cs2)
        else:
            report["epsilon2_cap"] = min(1.0, 4.0 * lambda1 ** 1.5 / (lambda2 * c3), 1.0 / (2.0 * c3)) / (64.0 * cs2)
    if c4 is not None:
        if not c4 > 0:
            raise OracleError(f"c4 must be positive, got {c4}")
        report["c4_cap"] = 2.0 * (c6 * math.pi / (c4 * c7)) ** (1.0 / 3.0)
    return report
