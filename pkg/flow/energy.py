import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from geometry.analytic_surfaces import Chart, chart_energy, integrate_on_grid
from geometry.discrete_geometry import curvature_bundle, laplace_beltrami, signed_volume, total_area
from geometry.surface_mesh import TriangleSurface, VertexField
from utils.errors import ConfigError, FlowError

logger = logging.getLogger(__name__)

ROUND_SPHERE_WILLMORE = 4.0 * np.pi
LI_YAU_THRESHOLD = 8.0 * np.pi
DEFAULT_EPSILON2 = 0.1 * 4.0 * np.pi


# =========================================================
# ⚙️ PARAMETERS AND ENERGY PARTS
# =========================================================
@dataclass(frozen=True)
class FlowParams:
    c0: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self):
        for name in ("c0", "lambda1", "lambda2"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"params.{name} must be finite")

    def check_theorem_mode(self):
        """Round-point regime: lambda1 > 0 and lambda2 >= 0."""
        if not self.lambda1 > 0:
            raise ConfigError(f"params.lambda1 must be > 0 in theorem mode, got {self.lambda1}")
        if self.lambda2 < 0:
            raise ConfigError(f"params.lambda2 must be >= 0 in theorem mode, got {self.lambda2}")
        return self

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EnergyBreakdown:
    willmore: float
    area_term: float
    volume_term: float

    @property
    def total(self):
        return self.willmore + self.area_term + self.volume_term

    def to_dict(self):
        return dict(asdict(self), total=self.total)


def helfrich_energy(target, p, bundle=None):
    """
    1/4 ∫(H - c0)² + λ1·area + λ2·Vol for a mesh (discrete integrals) or a chart
    (fixed-grid quadrature).
    """
    if isinstance(target, Chart):
        willmore, area, volume = chart_energy(target, p.c0, p.lambda1, p.lambda2)
    else:
        b = bundle or curvature_bundle(target)
        willmore = 0.25 * b.integrate((np.asarray(b.H) - p.c0) ** 2)
        area = total_area(target)
        volume = signed_volume(target)
    return EnergyBreakdown(willmore=willmore, area_term=p.lambda1 * area, volume_term=p.lambda2 * volume)


# =========================================================
# 🧭 EULER-LAGRANGE OPERATOR
# =========================================================
def euler_lagrange(s, p, bundle=None):
    """W = ΔH + H|A°|² + 2c0 K - (2λ1 + c0²/2) H - 2λ2 per vertex."""
    b = bundle or curvature_bundle(s)
    H = np.asarray(b.H)
    lap_H = np.asarray(laplace_beltrami(s, H))
    W = lap_H + H * np.asarray(b.Ao2) + 2.0 * p.c0 * np.asarray(b.K) - (2.0 * p.lambda1 + 0.5 * p.c0 ** 2) * H - 2.0 * p.lambda2
    if not np.all(np.isfinite(W)):
        raise FlowError("non-finite Euler-Lagrange operator")
    return VertexField(W)


def dissipation(s, p, bundle=None):
    """1/2 ∫W² (the instantaneous energy decay rate along the flow)."""
    b = bundle or curvature_bundle(s)
    W = np.asarray(euler_lagrange(s, p, bundle=b))
    return 0.5 * b.integrate(W ** 2)


def willmore_operator_norm(s, bundle=None):
    """∫|W_{0,0}|² with W_{0,0} = ΔH + H|A°|²."""
    b = bundle or curvature_bundle(s)
    W = np.asarray(euler_lagrange(s, FlowParams(), bundle=b))
    return b.integrate(W ** 2)


# =========================================================
# 📏 FIRST VARIATION
# =========================================================
@dataclass
class FirstVariationReport:
    steps: list
    finite_differences: list
    predicted: float
    residuals: list

    @property
    def residual(self):
        """Residual at the smallest displacement; the others show the O(s²) trend."""
        return self.residuals[int(np.argmin(np.abs(self.steps)))]

    def to_dict(self):
        return dict(asdict(self), residual=self.residual)


def _relative(a, b):
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 1e-300 else 0.0


def _mesh_speed(s, phi):
    if callable(phi):
        return np.asarray(phi(s.vertices), dtype=float)
    if np.isscalar(phi):
        return np.full(s.n_vertices, float(phi))
    return VertexField(phi).check_length(s.n_vertices).values


def first_variation_check(target, p, phi, steps=(1e-3, 1e-4)):
    """
    Centered difference of E(f + s·φ·ν_in) against 1/2 ∫ φ W dμ.
    `phi` is a scalar, a per-vertex field (meshes), or a callable on ambient positions.
    """
    if isinstance(target, Chart):
        def energy_at(step):
            return helfrich_energy(target.displaced(phi, step), p).total

        def integrand(chart, u, v, f):
            speed = phi(f.X) if callable(phi) else np.full(f.H.shape, float(phi))
            return speed * chart.euler_lagrange(u, v, p.c0, p.lambda1, p.lambda2)

        predicted = 0.5 * integrate_on_grid(target, integrand, 48)
    elif isinstance(target, TriangleSurface):
        b = curvature_bundle(target)
        speed = _mesh_speed(target, phi)
        direction = speed[:, None] * b.nu_in

        def energy_at(step):
            return helfrich_energy(target.with_vertices(target.vertices + step * direction), p).total

        predicted = 0.5 * b.integrate(speed * np.asarray(euler_lagrange(target, p, bundle=b)))
    else:
        raise TypeError(f"expected a TriangleSurface or an analytic chart, got {type(target).__name__}")

    differences, residuals = [], []
    for step in steps:
        plus, minus = energy_at(step), energy_at(-step)
        if not (math.isfinite(plus) and math.isfinite(minus)):
            raise FlowError(f"non-finite energy at displacement {step}")
        fd = (plus - minus) / (2.0 * step)
        differences.append(fd)
        residuals.append(_relative(fd, predicted))
    logger.debug("first variation: predicted %.6g, differences %s", predicted, differences)
    return FirstVariationReport(list(steps), differences, predicted, residuals)


# =========================================================
# 🔎 SMALL-ENERGY CHECK
# =========================================================
@dataclass
class SmallnessReport:
    energy: float
    epsilon2: float
    energy_small: bool
    area_small: bool
    tracefree_small: bool
    li_yau: bool

    @property
    def satisfied(self):
        return self.energy_small and self.area_small and self.tracefree_small

    def to_dict(self):
        return dict(asdict(self), satisfied=self.satisfied)


def smallness_check(s, p, epsilon2=DEFAULT_EPSILON2, bundle=None):
    """
    Advisory: W(f0) < 4π + ε₂, with the consequences λ1·area ≤ ε₂ and ∫|A°|² ≤ 2ε₂.
    """
    b = bundle or curvature_bundle(s)
    energy = helfrich_energy(s, FlowParams(0.0, p.lambda1, p.lambda2), bundle=b)
    report = SmallnessReport(
        energy=energy.total,
        epsilon2=epsilon2,
        energy_small=energy.total < ROUND_SPHERE_WILLMORE + epsilon2,
        area_small=energy.area_term <= epsilon2,
        tracefree_small=b.integrate(b.Ao2) <= 2.0 * epsilon2,
        li_yau=energy.willmore < LI_YAU_THRESHOLD,
    )
    if not report.satisfied:
        logger.warning("⚠️ initial data outside the small-energy regime (W = %.4f, 4π + ε₂ = %.4f)",
                       energy.total, ROUND_SPHERE_WILLMORE + epsilon2)
    return report
