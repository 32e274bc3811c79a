"""
Numerical kernel: Hermite polynomials, deterministic quadrature, Gaussian
phase-space convolution and multistart supremum search.

Phase-space functions passed to this module are vectorized: they take a numpy
array of complex amplitudes and return an array of the same shape.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.ndimage import label, maximum_filter

from src import config
from src.errors import ConvergenceError, RepresentationError

logger = logging.getLogger(__name__)

PhaseSpaceFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GridSpec:
    """Domain and resolution of supremum searches and plane quadratures."""

    radius: float = config.GRID_RADIUS
    points: int = config.GRID_POINTS
    refinements: int = config.GRID_REFINEMENTS
    tolerance: float = config.GRID_TOLERANCE

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"grid radius must be finite and positive, got {self.radius}")
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"grid points per axis must be an integer >= 2, got {self.points}")
        if int(self.refinements) != self.refinements or self.refinements < 0:
            raise ValueError(f"grid refinements must be an integer >= 0, got {self.refinements}")
        if not self.tolerance > 0:
            raise ValueError(f"grid tolerance must be positive, got {self.tolerance}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.radius / (self.points - 1)

    def axis(self) -> np.ndarray:
        return np.linspace(-self.radius, self.radius, self.points)

    def disk_points(self) -> np.ndarray:
        """Grid points inside the disk |alpha| <= radius, row-major in (re, im)."""
        axis = self.axis()
        re, im = np.meshgrid(axis, axis, indexing="ij")
        alpha = (re + 1j * im).ravel()
        return alpha[np.abs(alpha) <= self.radius + 1e-12]

    def to_dict(self) -> dict:
        return {"radius": self.radius, "points": self.points,
                "refinements": self.refinements, "tolerance": self.tolerance}

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "GridSpec":
        data = dict(data or {})
        base = cls()
        return cls(radius=float(data.get("radius", base.radius)),
                   points=int(data.get("points", base.points)),
                   refinements=int(data.get("refinements", base.refinements)),
                   tolerance=float(data.get("tolerance", base.tolerance)))


@dataclass
class SupremumResult:
    """Best value of a supremum search and every point attaining it."""

    value: float
    argmax: List[complex] = field(default_factory=list)
    on_boundary: bool = False


def check_ordering(s: float, name: str = "s") -> float:
    """Validate an ordering parameter s in [-1, 1]."""
    s = float(s)
    if not -1.0 <= s <= 1.0:
        raise RepresentationError(f"ordering parameter {name}={s} outside [-1, 1]")
    return s


def hermite(n: int, x):
    """
    Physicists' Hermite polynomial H_n(x) by the three-term recurrence.

    Args:
        n: Degree, n >= 0
        x: Scalar or array argument

    Returns:
        H_n(x) with the shape of x; overflow shows up as a non-finite value
    """
    if int(n) != n or n < 0:
        raise ValueError(f"Hermite degree must be a non-negative integer, got {n}")
    arr = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        h_prev = np.ones_like(arr)
        h = h_prev if n == 0 else 2.0 * arr
        for k in range(1, int(n)):
            h_prev, h = h, 2.0 * arr * h - 2.0 * k * h_prev
    if np.ndim(x) == 0:
        return float(h)
    return h


def _gauss_hermite_plane(f: PhaseSpaceFunction, center: complex, scale: float,
                         order: int) -> float:
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    u = nodes[:, None] + 1j * nodes[None, :]
    w = weights[:, None] * weights[None, :]
    values = np.asarray(f(center + scale * u))
    return float(np.real(np.sum(w * values)) / math.pi)


def gaussian_convolve(f: PhaseSpaceFunction, s_from: float, s_to: float, alpha: complex,
                      order: Optional[int] = None, tolerance: Optional[float] = None) -> float:
    """
    Smooth a phase-space function from ordering s_from down to s_to.

    Evaluates (2/(pi*d)) * Int d^2gamma f(gamma) exp(-2|alpha-gamma|^2/d) with
    d = s_from - s_to, using a tensor Gauss-Hermite rule centred on alpha.

    Args:
        f: Vectorized phase-space function
        s_from: Ordering of f
        s_to: Target ordering, strictly below s_from
        alpha: Evaluation point
        order: Gauss-Hermite order per axis
        tolerance: Accepted difference between the full and half-order rules

    Returns:
        The smoothed value at alpha
    """
    delta = float(s_from) - float(s_to)
    if delta == 0:
        raise ValueError("s_to equals s_from: the convolution is the identity, evaluate f directly")
    if delta < 0:
        raise ValueError(f"s_to={s_to} must be below s_from={s_from}")
    order = order or config.QUADRATURE_ORDER
    tolerance = tolerance if tolerance is not None else config.GRID_TOLERANCE
    scale = math.sqrt(delta / 2.0)
    value = _gauss_hermite_plane(f, complex(alpha), scale, order)
    coarse = _gauss_hermite_plane(f, complex(alpha), scale, max(4, (3 * order) // 4))
    if abs(value - coarse) > tolerance:
        logger.warning(f"Gaussian convolution at alpha={alpha} did not converge: "
                       f"estimated error {abs(value - coarse):.3e} > {tolerance:.1e}")
    return value


def _legendre_plane(g: PhaseSpaceFunction, radius: float, order: int, radial: bool) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    if radial:
        r = 0.5 * radius * (nodes + 1.0)
        w = 0.5 * radius * weights
        values = np.real(np.asarray(g(r.astype(complex))))
        return float(2.0 * math.pi * np.sum(w * r * values))
    x = radius * nodes
    w = radius * weights
    alpha = x[:, None] + 1j * x[None, :]
    values = np.real(np.asarray(g(alpha)))
    return float(np.sum(w[:, None] * w[None, :] * values))


def integrate_plane(g: PhaseSpaceFunction, grid: Optional[GridSpec] = None,
                    radial: bool = False) -> float:
    """
    Integrate a phase-space function over the square [-R, R]^2.

    Args:
        g: Vectorized phase-space function
        grid: Domain radius and node count per axis
        radial: g depends on |alpha| only; integrate 2*pi*r*g(r) over [0, R]

    Returns:
        The integral
    """
    grid = grid or GridSpec()
    value = _legendre_plane(g, grid.radius, grid.points, radial)
    coarse = _legendre_plane(g, grid.radius, max(4, (3 * grid.points) // 4), radial)
    if abs(value - coarse) > max(grid.tolerance, 1e-8 * abs(value)):
        logger.warning(f"Plane quadrature estimated error {abs(value - coarse):.3e} "
                       f"exceeds tolerance {grid.tolerance:.1e}")
    return value


def quadrature_1d(f: Callable, lower: float = -math.inf, upper: float = math.inf,
                  gaussian_weight: bool = False, order: Optional[int] = None,
                  tolerance: Optional[float] = None, strict: bool = False) -> float:
    """
    Deterministic 1-D quadrature.

    With gaussian_weight the integrand f is taken to decay like exp(-x^2) over the
    real line and a Gauss-Hermite rule is used (f must be vectorized); otherwise
    scipy's adaptive QUADPACK rule integrates f over [lower, upper].

    Args:
        f: Integrand
        lower: Lower limit
        upper: Upper limit
        gaussian_weight: Integrand has Gaussian decay over the whole real line
        order: Gauss-Hermite order
        tolerance: Absolute error target
        strict: Raise ConvergenceError when the target is missed

    Returns:
        The integral
    """
    tolerance = tolerance if tolerance is not None else config.GRID_TOLERANCE
    if gaussian_weight:
        if not (math.isinf(lower) and lower < 0 and math.isinf(upper) and upper > 0):
            raise ValueError("the Gaussian weight hint needs the whole real line")
        order = order or config.QUADRATURE_ORDER

        def rule(n: int) -> float:
            nodes, weights = np.polynomial.hermite.hermgauss(n)
            scaled = np.exp(np.log(weights) + nodes ** 2)
            return float(np.sum(scaled * np.asarray(f(nodes), dtype=float)))

        value = rule(2 * order)
        error = abs(value - rule(order))
    else:
        value, error = integrate.quad(f, lower, upper, epsabs=tolerance, epsrel=1e-12, limit=400)
    if error > tolerance:
        message = f"1-D quadrature missed tolerance {tolerance:.1e}: estimate {value!r}, error {error:.3e}"
        if strict:
            raise ConvergenceError(message, estimate=value, error=error)
        logger.warning(message)
    return float(value)


def _dedupe(candidates: List[tuple], best: float, tolerance: float, min_distance: float) -> List[complex]:
    points: List[complex] = []
    for value, point in candidates:
        if value < best - tolerance:
            continue
        if all(abs(point - p) > min_distance for p in points):
            points.append(point)
    return sorted(points, key=lambda p: (p.real, p.imag))


def _peak_starts(values: np.ndarray, coords: np.ndarray, peaks: np.ndarray, interior: np.ndarray,
                 refinements: int) -> List[int]:
    """
    Flat indices where polishing starts: one per connected plateau of grid maxima.

    The best components take the first refinements slots; up to as many more go
    to the best components away from the boundary.
    """
    structure = np.ones((3,) * values.ndim)
    labels, count = label(peaks, structure=structure)
    if count == 0:
        return []
    flat_labels, flat_values = labels.ravel(), values.ravel()
    flat_coords, flat_interior = coords.ravel(), interior.ravel()
    members = np.flatnonzero(flat_labels)
    # per component: best value, then the point closest to the origin
    order = sorted(members, key=lambda k: (flat_labels[k], -flat_values[k], abs(flat_coords[k]),
                                           flat_coords[k].real, flat_coords[k].imag))
    reps, seen = [], set()
    for k in order:
        if flat_labels[k] not in seen:
            seen.add(flat_labels[k])
            reps.append(k)
    ranked = sorted(reps, key=lambda k: (-flat_values[k], abs(flat_coords[k]),
                                         flat_coords[k].real, flat_coords[k].imag))
    starts = ranked[:refinements]
    inner = [k for k in ranked[refinements:] if flat_interior[k]]
    return starts + inner[:refinements]


def _supremum_radial(g: PhaseSpaceFunction, grid: GridSpec, seeds: List[complex]) -> List[tuple]:
    r = np.linspace(0.0, grid.radius, grid.points)
    values = np.real(np.asarray(g(r.astype(complex)), dtype=complex))
    values = np.where(np.isfinite(values), values, -np.inf)
    padded = np.concatenate(([-np.inf], values, [-np.inf]))
    peaks = (values >= padded[:-2]) & (values >= padded[2:]) & np.isfinite(values)
    candidates = [(float(values[i]), complex(r[i], 0.0)) for i in np.flatnonzero(peaks)]
    interior = r < grid.radius - 2.0 * grid.spacing
    starts = [float(r[i]) for i in _peak_starts(values, r.astype(complex), peaks, interior, grid.refinements)]
    starts += [min(abs(p), grid.radius) for p in seeds]

    def value_at(x: float) -> float:
        return float(np.real(g(np.array([complex(x, 0.0)]))[0]))

    h = grid.spacing
    for x0 in starts:
        lo, hi = max(0.0, x0 - h), min(grid.radius, x0 + h)
        if hi <= lo:
            continue
        local = np.linspace(lo, hi, 21)
        local_values = np.real(np.asarray(g(local.astype(complex)), dtype=complex))
        if np.any(np.isfinite(local_values)):
            best = int(np.nanargmax(np.where(np.isfinite(local_values), local_values, -np.inf)))
            candidates.append((float(local_values[best]), complex(local[best], 0.0)))
            lo, hi = max(lo, local[best] - h / 10.0), min(hi, local[best] + h / 10.0)
        res = optimize.minimize_scalar(lambda x: -value_at(x), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12})
        if np.isfinite(res.fun):
            candidates.append((-float(res.fun), complex(float(res.x), 0.0)))
    return candidates


def _supremum_plane(g: PhaseSpaceFunction, grid: GridSpec, seeds: List[complex]) -> List[tuple]:
    axis = grid.axis()
    re, im = np.meshgrid(axis, axis, indexing="ij")
    alpha = re + 1j * im
    inside = np.abs(alpha) <= grid.radius + 1e-12
    values = np.full(alpha.shape, -np.inf)
    values[inside] = np.real(np.asarray(g(alpha[inside]), dtype=complex))
    values = np.where(np.isfinite(values), values, -np.inf)
    peaks = (maximum_filter(values, size=3, mode="constant", cval=-np.inf) == values)
    peaks &= inside & np.isfinite(values)
    candidates = [(float(values[i, j]), complex(axis[i], axis[j])) for i, j in np.argwhere(peaks)]
    interior = np.abs(alpha) < grid.radius - 2.0 * grid.spacing
    starts = [complex(alpha.ravel()[k]) for k in _peak_starts(values, alpha, peaks, interior, grid.refinements)]
    starts += [complex(p) for p in seeds if abs(p) <= grid.radius]

    def objective(p: np.ndarray) -> float:
        point = complex(p[0], p[1])
        if abs(point) > grid.radius:
            return math.inf
        value = float(np.real(g(np.array([point]))[0]))
        return -value if math.isfinite(value) else math.inf

    h = grid.spacing
    offsets = np.linspace(-h, h, 11)
    local_re, local_im = np.meshgrid(offsets, offsets, indexing="ij")
    local_offsets = (local_re + 1j * local_im).ravel()
    for start in starts:
        # fine scan of the cell around the start before polishing
        local = start + local_offsets
        local = local[np.abs(local) <= grid.radius]
        local_values = np.real(np.asarray(g(local), dtype=complex))
        local_values = np.where(np.isfinite(local_values), local_values, -np.inf)
        if local.size and np.isfinite(local_values.max()):
            best = int(np.argmax(local_values))
            candidates.append((float(local_values[best]), complex(local[best])))
            start = complex(local[best])
        x0, y0 = start.real, start.imag
        step = h / 5.0
        simplex = np.array([[x0, y0], [x0 + step, y0], [x0, y0 + step]])
        res = optimize.minimize(objective, np.array([x0, y0]), method="Nelder-Mead",
                                options={"initial_simplex": simplex, "xatol": 1e-10,
                                         "fatol": 1e-15, "maxiter": 4000})
        if np.isfinite(res.fun):
            candidates.append((-float(res.fun), complex(res.x[0], res.x[1])))
    return candidates


def supremum_over_plane(g: PhaseSpaceFunction, grid: Optional[GridSpec] = None,
                        radial: bool = False, warn_boundary: bool = True,
                        seeds: Sequence[complex] = ()) -> SupremumResult:
    """
    Global supremum of g over the disk |alpha| <= radius.

    A coarse grid scan is followed by derivative-free polishing started from one
    point of each connected plateau of grid local maxima, the best ones first and
    then the best ones away from the boundary. The result is deterministic for a
    fixed GridSpec.

    Args:
        g: Vectorized phase-space function
        grid: Search domain and resolution
        radial: g is phase invariant; search along the positive real axis only
        warn_boundary: Log a warning when the best point sits on the boundary
        seeds: Extra points scanned and polished, e.g. where a state is concentrated

    Returns:
        SupremumResult with the best value and all argmax points within tolerance;
        on_boundary only when no interior point comes within tolerance of the best
    """
    grid = grid or GridSpec()
    seeds = [complex(p) for p in seeds]
    candidates = _supremum_radial(g, grid, seeds) if radial else _supremum_plane(g, grid, seeds)
    if not candidates:
        raise ConvergenceError("supremum search found no finite value of the objective")
    best = max(value for value, _ in candidates)
    argmax = _dedupe(sorted(candidates, key=lambda c: (-c[0], c[1].real, c[1].imag)),
                     best, grid.tolerance, grid.spacing / 2.0)
    edge = grid.radius - grid.spacing
    interior_best = max((value for value, p in candidates if abs(p) < edge), default=-math.inf)
    on_boundary = any(abs(p) >= edge for p in argmax) and interior_best < best - grid.tolerance
    if on_boundary and warn_boundary:
        logger.warning(f"Supremum {best:.6g} attained on the search boundary |alpha|={grid.radius}; "
                       f"the radius may be too small")
    return SupremumResult(value=best, argmax=argmax, on_boundary=on_boundary)
