"""
Dual-form witnesses of phase-space classical simulation.

A witness compares the expectation of a test function lambda over the measured
statistics (left-hand side) with its supremum over classical phase-space points
(right-hand side). Violation rules out a non-negative phase-space simulation.
"""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats
from tqdm import tqdm

from src import config
from src.errors import FormulaIntegrityError, RepresentationError
from src.kernel import GridSpec, SupremumResult, hermite, integrate_plane, quadrature_1d, supremum_over_plane
from src.povm import PHOTOCOUNTING, PovmModel, Scheme, born_probability, normal_exp_symbol, symbol
from src.states import (QuadratureSample, QuantumState, StateKind, fock_quadrature, generating_function,
                        photocount_dist, pnr_distribution, quadrature_dist, quadrature_moments, quasiprob)
from src.utils import complex_to_json, to_jsonable

logger = logging.getLogger(__name__)

QUADRATURE_SAMPLE_LIMIT = 12.0


@dataclass(frozen=True)
class PhotocountExp:
    """lambda(n) = (-t)^n exp(-g n^2)."""

    t: float
    g: float = 0.0

    def __post_init__(self) -> None:
        if not self.t >= -1:
            raise ValueError(f"photocount test function needs t >= -1, got {self.t}")
        if not self.g >= 0:
            raise ValueError(f"photocount test function needs g >= 0, got {self.g}")

    def value(self, n: int) -> float:
        n = int(n)
        return (-self.t) ** n * math.exp(-self.g * n * n)

    def to_dict(self) -> Dict[str, Any]:
        return {"form": "photocount-exp", "params": {"t": self.t, "g": self.g}}


@dataclass(frozen=True)
class QuadratureDensity:
    """lambda(x, phi) = quadrature distribution of a reference state."""

    reference: QuantumState

    def to_dict(self) -> Dict[str, Any]:
        return {"form": "quadrature-density", "params": {"reference": self.reference.to_dict()}}


@dataclass(frozen=True)
class PhaseSpaceDensity:
    """lambda(alpha0) = P(alpha0; s') of a reference state."""

    s_prime: float
    reference: QuantumState

    def __post_init__(self) -> None:
        if not self.s_prime < 1:
            raise ValueError(f"phase-space test function needs s' < 1, got {self.s_prime}")

    def to_dict(self) -> Dict[str, Any]:
        return {"form": "phase-space-density",
                "params": {"s_prime": self.s_prime, "reference": self.reference.to_dict()}}


@dataclass(frozen=True)
class Tabulated:
    """lambda(A, a) given as a table keyed by (outcome, setting index); missing entries are 0."""

    entries: Tuple[Tuple[Tuple[int, int], float], ...]

    def __post_init__(self) -> None:
        bad = [key for key, value in self.entries if not math.isfinite(value)]
        if bad:
            raise ValueError(f"tabulated test function has non-finite values at {bad}")

    @classmethod
    def from_mapping(cls, mapping: Dict[Tuple[int, int], float]) -> "Tabulated":
        return cls(tuple(sorted(((int(o), int(a)), float(v)) for (o, a), v in mapping.items())))

    @property
    def table(self) -> Dict[Tuple[int, int], float]:
        return dict(self.entries)

    def value(self, outcome: int, setting: int = 0) -> float:
        return self.table.get((int(outcome), int(setting)), 0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {"form": "tabulated",
                "params": {"entries": [{"outcome": o, "setting": a, "value": v}
                                       for (o, a), v in self.entries]}}


TestFunction = Union[PhotocountExp, QuadratureDensity, PhaseSpaceDensity, Tabulated]


def lambda_from_dict(data: Dict[str, Any]) -> TestFunction:
    """
    Build a test function from its JSON descriptor {"form", "params"}.

    Raises:
        ValueError: Unknown form or bad parameters
    """
    if not isinstance(data, dict) or "form" not in data:
        raise ValueError("test-function descriptor needs a 'form' field")
    form = data["form"]
    params = dict(data.get("params") or {})
    if form == "photocount-exp":
        return PhotocountExp(t=float(params["t"]), g=float(params.get("g", 0.0)))
    if form == "quadrature-density":
        return QuadratureDensity(QuantumState.from_dict(params["reference"]))
    if form == "phase-space-density":
        return PhaseSpaceDensity(float(params.get("s_prime", 0.0)),
                                 QuantumState.from_dict(params["reference"]))
    if form == "tabulated":
        mapping = {(int(e["outcome"]), int(e.get("setting", 0))): float(e["value"])
                   for e in params.get("entries", [])}
        return Tabulated.from_mapping(mapping)
    raise ValueError(f"unknown test-function form {form!r}")


@dataclass
class WitnessReport:
    """Outcome of one witness evaluation."""

    lhs: float
    rhs: float
    violated: bool
    relative_violation: float
    argmax: List[complex] = field(default_factory=list)
    method: str = "closed-form"
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def build(cls, lhs: float, rhs: float, argmax: Sequence[complex] = (), method: str = "closed-form",
              diagnostics: Optional[Dict[str, Any]] = None) -> "WitnessReport":
        return cls(lhs=float(lhs), rhs=float(rhs), violated=lhs > rhs + config.VIOLATION_TOLERANCE,
                   relative_violation=relative_violation(lhs, rhs), argmax=list(argmax),
                   method=method, diagnostics=dict(diagnostics or {}))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "violated": self.violated,
            "relative_violation": self.relative_violation,
            "argmax": [complex_to_json(a) for a in self.argmax],
            "method": self.method,
            "diagnostics": to_jsonable(self.diagnostics),
        }


def relative_violation(lhs: float, rhs: float) -> float:
    """(lhs - rhs) / |rhs|; infinite with the sign of the gap when rhs is 0."""
    if rhs == 0:
        gap = lhs - rhs
        return 0.0 if gap == 0 else math.copysign(math.inf, gap)
    return (lhs - rhs) / abs(rhs)


def lambda_value(lam: TestFunction, outcome, setting: int = 0, model: Optional[PovmModel] = None):
    """
    Value of a test function at one (outcome, setting index).

    Args:
        lam: Test function
        outcome: Outcome value
        setting: Setting index into model.settings()
        model: Measurement scheme, used to look up homodyne phases

    Returns:
        lambda(outcome, setting)
    """
    if isinstance(lam, PhotocountExp):
        return lam.value(outcome)
    if isinstance(lam, Tabulated):
        return lam.value(outcome, setting)
    if isinstance(lam, QuadratureDensity):
        phase = model.phases[setting] if model is not None and model.phases else 0.0
        return quadrature_dist(lam.reference, outcome, phase)
    return quasiprob(lam.reference, outcome, lam.s_prime)


def _finite_outcome_table(state: QuantumState, model: PovmModel, setting: int) -> np.ndarray:
    if model.scheme in PHOTOCOUNTING:
        return photocount_dist(state, model)
    if model.scheme == Scheme.UHD:
        gamma = model.displacements[setting]
        no_click = born_probability(state, model, 0, gamma, route="closed")
        return np.array([no_click, 1.0 - no_click])
    raise ValueError(f"{model.scheme.value} has continuous outcomes")


def _is_fock_like(state: QuantumState) -> bool:
    return state.is_fock_like or state.kind == StateKind.VACUUM


def _fock_weights(state: QuantumState) -> np.ndarray:
    if state.kind == StateKind.VACUUM or state.eta == 0:
        return np.array([1.0])
    return stats.binom.pmf(np.arange(state.n + 1), state.n, state.eta)


def _lhs(state: QuantumState, model: PovmModel, lam: TestFunction,
         grid: GridSpec) -> Tuple[float, str]:
    scheme = model.scheme
    if isinstance(lam, PhotocountExp) and scheme == Scheme.PNR and lam.g == 0:
        return generating_function(state, 1.0 + lam.t), "closed-form"
    if isinstance(lam, PhotocountExp) and scheme == Scheme.PNR:
        probs = pnr_distribution(state, model.cutoff)
        return float(sum(lam.value(n) * p for n, p in enumerate(probs))), "closed-form"
    if isinstance(lam, (PhotocountExp, Tabulated)) and model.outcomes() is not None:
        total = 0.0
        for a in range(len(model.settings())):
            table = _finite_outcome_table(state, model, a)
            total += sum(lambda_value(lam, n, a, model) * p for n, p in enumerate(table))
        return float(total), "closed-form"
    if scheme == Scheme.BHD and isinstance(lam, QuadratureDensity):
        K = len(model.phases)
        if _is_fock_like(state) and _is_fock_like(lam.reference):
            return K * fock_overlap(_fock_weights(state), _fock_weights(lam.reference)), "closed-form"
        total = 0.0
        for phi in model.phases:
            total += quadrature_1d(
                lambda x, phi=phi: quadrature_dist(lam.reference, x, phi) * quadrature_dist(state, x, phi),
                gaussian_weight=True)
        return total, "quadrature"
    if scheme == Scheme.EPHD and isinstance(lam, PhaseSpaceDensity):
        ref = lam.reference
        if _is_fock_like(state) and _is_fock_like(ref) and state.n <= 1 and ref.n <= 1:
            eta_state = 0.0 if state.kind == StateKind.VACUUM or state.n == 0 else state.eta
            eta_ref = 0.0 if ref.kind == StateKind.VACUUM or ref.n == 0 else ref.eta
            return ephd_lhs_closed(eta_state, lam.s_prime, eta_ref), "closed-form"
        radial = state.is_phase_invariant and ref.is_phase_invariant
        value = integrate_plane(lambda a: quasiprob(state, a, -1.0) * quasiprob(ref, a, lam.s_prime),
                                grid, radial=radial)
        return value, "quadrature"
    raise ValueError(f"test function {type(lam).__name__} does not fit the {model.label} outcomes")


def lhs_expectation(state: QuantumState, model: PovmModel, lam: TestFunction,
                    grid: Optional[GridSpec] = None) -> float:
    """
    Left-hand side: sum over settings of E(lambda | a) under the state's statistics.

    Raises:
        DivergenceError: The photon-number series diverges (squeezed vacuum, t too large)
    """
    value, _ = _lhs(state, model, lam, grid or GridSpec())
    return value


def _check_rhs_ordering(model: PovmModel, s: float) -> float:
    s = float(s)
    if s > 1:
        raise RepresentationError(f"ordering s={s} exceeds 1")
    if s < model.s_th:
        raise RepresentationError(
            f"{model.label} symbols are not non-negative at s={s} < s_th={model.s_th}",
            largest_regular_s=model.s_th)
    return s


def expectation_symbol(model: PovmModel, lam: TestFunction, alpha, s: float):
    """
    Classical expectation sum_a sum/int_A lambda(A, a) Pi(A|a; alpha; -s), vectorized over alpha.

    Args:
        model: Measurement scheme
        lam: Test function
        alpha: Complex amplitude or array
        s: Ordering parameter

    Returns:
        Value(s) with the shape of alpha
    """
    arr = np.asarray(alpha, dtype=complex)
    scheme = model.scheme
    if scheme == Scheme.PNR and isinstance(lam, PhotocountExp) and lam.g == 0:
        return normal_exp_symbol(1.0 + lam.t, arr, s)
    if scheme == Scheme.BHD:
        if not isinstance(lam, QuadratureDensity):
            raise ValueError("balanced homodyne witnesses need a quadrature-density test function")
        total = np.zeros(arr.shape)
        for phi in model.phases:
            x0 = math.sqrt(2.0) * (arr * np.exp(-1j * phi)).real
            total = total + reference_kernel(lam.reference, phi, x0, s)
        return total
    if scheme == Scheme.EPHD:
        if not isinstance(lam, PhaseSpaceDensity):
            raise ValueError("heterodyne witnesses need a phase-space-density test function")
        return quasiprob(lam.reference, arr, lam.s_prime - s - 1.0)
    total = np.zeros(arr.shape)
    for a, setting in enumerate(model.settings()):
        for n in model.outcomes():
            weight = lambda_value(lam, n, a, model)
            if weight != 0:
                total = total + weight * symbol(model, n, setting, arr, s)
    return total


def _ephd_family(model: PovmModel, lam: TestFunction) -> bool:
    if model.scheme != Scheme.EPHD or not isinstance(lam, PhaseSpaceDensity):
        return False
    ref = lam.reference
    return _is_fock_like(ref) and ref.n <= 1


def rhs_bound(model: PovmModel, lam: TestFunction, s: float,
              grid: Optional[GridSpec] = None, seeds: Sequence[complex] = ()) -> SupremumResult:
    """
    Right-hand side: supremum over alpha of the classical expectation at ordering s.

    Args:
        model: Measurement scheme
        lam: Test function
        s: Ordering parameter, s_th <= s <= 1
        grid: Supremum search domain
        seeds: Extra search starts, e.g. the centers of the measured state

    Returns:
        SupremumResult with the bound and its argmax points
    """
    grid = grid or GridSpec()
    s = _check_rhs_ordering(model, s)
    if model.scheme == Scheme.PNR and isinstance(lam, PhotocountExp) and lam.g == 0 and s == 1:
        # sup of exp(-(1 + t)|alpha|^2)
        return SupremumResult(value=1.0, argmax=[0j])
    if _ephd_family(model, lam):
        ref = lam.reference
        eta = 0.0 if ref.kind == StateKind.VACUUM or ref.n == 0 else ref.eta
        value, radius = ephd_rhs_closed(eta, s, lam.s_prime)
        return SupremumResult(value=value, argmax=[complex(radius, 0.0)])
    radial = model.is_phase_invariant and isinstance(lam, (PhotocountExp, Tabulated))
    if isinstance(lam, PhaseSpaceDensity) and lam.reference.is_phase_invariant:
        radial = True
    return supremum_over_plane(lambda a: expectation_symbol(model, lam, a, s), grid, radial=radial, seeds=seeds)


def evaluate_witness(state: QuantumState, model: PovmModel, lam: TestFunction,
                     s: Optional[float] = None, grid: Optional[GridSpec] = None) -> WitnessReport:
    """
    Evaluate lhs and rhs of one witness inequality.

    Args:
        state: Catalog state
        model: Measurement scheme
        lam: Test function
        s: Ordering of the right-hand side (defaults to the model's s, else s_th)
        grid: Supremum search domain

    Returns:
        WitnessReport
    """
    grid = grid or GridSpec()
    if s is None:
        s = model.s if model.s is not None else model.s_th
    lhs, method = _lhs(state, model, lam, grid)
    bound = rhs_bound(model, lam, s, grid, seeds=state.centers)
    report = WitnessReport.build(lhs, bound.value, bound.argmax, method, {
        "s": s,
        "rhs_on_boundary": bound.on_boundary,
        "state": state.to_dict(),
        "povm": model.to_dict(),
        "test_function": lam.to_dict(),
    })
    logger.info(f"Witness {state.label} / {model.label} at s={s}: lhs={lhs:.6g} rhs={bound.value:.6g} "
                f"violated={report.violated}")
    return report


def sample_outcomes(state: QuantumState, model: PovmModel, size: int,
                    rng: np.random.Generator) -> List[Tuple[int, int]]:
    """
    Draw (outcome, setting index) samples, size per setting, from the exact outcome tables.

    Homodyne quadratures are drawn by inverting the tabulated distribution function.

    Args:
        state: Catalog state
        model: Finite-outcome scheme (pnr, click, on-off, uhd) or bhd
        size: Samples per setting
        rng: Seeded numpy generator

    Returns:
        List of (outcome, setting index)
    """
    if size < 1:
        raise ValueError(f"sample size must be >= 1, got {size}")
    samples: List[Tuple[Any, int]] = []
    if model.scheme == Scheme.BHD:
        xs = np.linspace(-QUADRATURE_SAMPLE_LIMIT, QUADRATURE_SAMPLE_LIMIT, 8001)
        for a, phi in enumerate(model.phases):
            cdf = np.cumsum(quadrature_dist(state, xs, phi))
            cdf /= cdf[-1]
            drawn = np.interp(rng.random(size), cdf, xs)
            samples.extend((QuadratureSample(float(x), phi).x, a) for x in drawn)
        return samples
    for a in range(len(model.settings())):
        table = np.clip(_finite_outcome_table(state, model, a), 0.0, None)
        outcomes = rng.choice(len(table), size=size, p=table / table.sum())
        samples.extend((int(n), a) for n in outcomes)
    return samples


def mc_lhs(samples: Sequence[Tuple[Any, int]], lam: TestFunction,
           model: Optional[PovmModel] = None) -> Tuple[float, float]:
    """
    Monte Carlo estimate of the left-hand side from measured samples.

    Per-setting sample means of lambda are summed over settings; the standard
    error combines the per-setting sample variances.

    Args:
        samples: (outcome, setting index) pairs
        lam: Test function
        model: Measurement scheme; when given every setting must be sampled

    Returns:
        (estimate, standard error)
    """
    if not samples:
        raise ValueError("no samples")
    df = pd.DataFrame(list(samples), columns=["outcome", "setting"])
    values: Dict[Tuple[Any, int], float] = {}
    for key in zip(df["outcome"], df["setting"]):
        if key not in values:
            values[key] = lambda_value(lam, key[0], int(key[1]), model)
    df["value"] = [values[key] for key in zip(df["outcome"], df["setting"])]
    grouped = df.groupby("setting")["value"]
    if model is not None:
        missing = set(range(len(model.settings()))) - set(grouped.groups)
        if missing:
            raise ValueError(f"no samples for setting(s) {sorted(missing)}")
    means = grouped.mean()
    variances = grouped.var(ddof=1).fillna(0.0)
    counts = grouped.count()
    estimate = float(means.sum())
    std_error = float(math.sqrt((variances / counts).sum()))
    return estimate, std_error


def coefficient_a(n: int, m: int) -> float:
    """Coefficient of the expansion H_n(x)^2 = (n!)^2 sum_m (-1)^(n-m) 4^m A(n, m) x^(2m)."""
    lo = max(0, -(-n // 2) - m)
    hi = min(n // 2, n - m)
    f = math.factorial
    return sum(1.0 / (f(i) * f(n - i - m) * f(n - 2 * i) * f(2 * i + 2 * m - n)) for i in range(lo, hi + 1))


def fock_pair_integral(m1: int, m2: int) -> float:
    """Overlap integral of two number-state quadrature densities."""
    total = 0.0
    for k in range(m1 + 1):
        a1 = coefficient_a(m1, k)
        if a1 == 0:
            continue
        for l in range(m2 + 1):
            a2 = coefficient_a(m2, l)
            j = k + l
            # (-1)^j (2j - 1)!! from the Gaussian moments
            moment = (-1) ** j * math.factorial(2 * j) / (2 ** j * math.factorial(j))
            total += moment * a1 * a2
    prefactor = (math.factorial(m1) * math.factorial(m2) * (-1) ** (m1 + m2)
                 / (2 ** (m1 + m2) * math.sqrt(2.0 * math.pi)))
    return prefactor * total


def fock_overlap(weights1: Sequence[float], weights2: Sequence[float]) -> float:
    """Int P1(x) P2(x) dx for two number-state mixtures given by their weights."""
    return float(sum(w1 * w2 * fock_pair_integral(m1, m2)
                     for m1, w1 in enumerate(weights1) if w1 > 0
                     for m2, w2 in enumerate(weights2) if w2 > 0))


def bhd_lhs_closed(n: int, eta: float, K: int, check: bool = False) -> float:
    """
    K * Int P_n(x; eta)^2 dx for the attenuated number state tested with its own density.

    Args:
        n: Photon number
        eta: Efficiency
        K: Number of homodyne phases
        check: Compare with direct quadrature

    Returns:
        The left-hand side

    Raises:
        FormulaIntegrityError: Closed form and quadrature differ by more than 1e-8
    """
    if n < 0 or K < 1 or not 0.0 <= eta <= 1.0:
        raise ValueError(f"invalid arguments n={n}, eta={eta}, K={K}")
    state = QuantumState.attenuated_fock(n, eta)
    weights = _fock_weights(state)
    value = K * fock_overlap(weights, weights)
    if check:
        oracle = K * quadrature_1d(lambda x: quadrature_dist(state, x) ** 2, gaussian_weight=True)
        if abs(value - oracle) > 1e-8:
            raise FormulaIntegrityError(f"homodyne lhs closed form {value!r} differs from quadrature {oracle!r}")
    return value


def fock_kernel(m: int, x0, s: float):
    """Number-state quadrature density smoothed by the homodyne kernel of width s."""
    x0 = np.asarray(x0, dtype=float)
    if s == 0:
        return fock_quadrature(m, x0)
    scale = 1.0 + s
    y = x0 / math.sqrt(scale)
    total = np.zeros_like(x0)
    for l in range(m + 1):
        total = total + (2.0 ** l * math.factorial(l) * math.comb(m, l) ** 2 * scale ** (-(m - l))
                         * hermite(2 * (m - l), y))
    norm = 2.0 ** m * math.factorial(m) * math.sqrt(math.pi * scale)
    return total * np.exp(-x0 ** 2 / scale) / norm


def reference_kernel(reference: QuantumState, phi: float, x0, s: float):
    """
    Homodyne expectation of a quadrature-density test function at the classical point x0.

    Args:
        reference: State whose quadrature density is the test function
        phi: Phase setting
        x0: sqrt(2) Re(alpha e^{-i phi}), scalar or array
        s: Ordering, 0 <= s <= 1

    Returns:
        Int dx lambda(x) Pi(x|phi; alpha; -s)
    """
    if not 0.0 <= s <= 1.0:
        raise RepresentationError(f"homodyne expectation needs 0 <= s <= 1, got {s}", largest_regular_s=0.0)
    x0 = np.asarray(x0, dtype=float)
    if _is_fock_like(reference):
        weights = _fock_weights(reference)
        return sum(w * fock_kernel(m, x0, s) for m, w in enumerate(weights) if w > 0)
    if reference.kind in (StateKind.COHERENT, StateKind.SQUEEZED_VACUUM):
        mean, variance = quadrature_moments(reference, phi)
        variance += s / 2.0
        return np.exp(-(x0 - mean) ** 2 / (2.0 * variance)) / math.sqrt(2.0 * math.pi * variance)
    raise ValueError(f"no homodyne expectation kernel for reference {reference.label}")


def bhd_expectation_kernel(n: int, phi: float, alpha, s: float, eta: float = 1.0, check: bool = False):
    """
    E_n(lambda | phi; alpha; s) for lambda the quadrature density of the attenuated state |n>.

    Args:
        n: Photon number of the reference
        phi: Phase setting
        alpha: Complex amplitude or array
        s: Ordering, 0 <= s <= 1
        eta: Efficiency of the reference
        check: Compare with direct quadrature (scalar alpha, s > 0)

    Returns:
        Value(s) with the shape of alpha

    Raises:
        FormulaIntegrityError: Closed form and quadrature differ by more than the formula tolerance
    """
    reference = QuantumState.attenuated_fock(n, eta)
    x0 = math.sqrt(2.0) * (np.asarray(alpha, dtype=complex) * np.exp(-1j * phi)).real
    value = reference_kernel(reference, phi, x0, s)
    if check and s > 0 and np.ndim(alpha) == 0:
        oracle = quadrature_1d(
            lambda x: quadrature_dist(reference, x) * np.exp(-(x - x0) ** 2 / s) / math.sqrt(math.pi * s),
            gaussian_weight=True, order=128)
        if abs(float(value) - oracle) > config.FORMULA_TOLERANCE:
            raise FormulaIntegrityError(
                f"homodyne kernel closed form {float(value)!r} differs from quadrature {oracle!r}")
    return float(value) if np.ndim(value) == 0 else value


def ephd_lhs_closed(eta: float, s_prime: float, eta_reference: Optional[float] = None) -> float:
    """
    Int d^2alpha0 Q(alpha0) P(alpha0; s') for attenuated single-photon states.

    Args:
        eta: Efficiency of the measured state
        s_prime: Ordering of the test function, s' < 1
        eta_reference: Efficiency of the reference state (defaults to eta)

    Returns:
        The left-hand side
    """
    if not s_prime < 1:
        raise RepresentationError(f"test function P(alpha; s') needs s' < 1, got {s_prime}",
                                  largest_regular_s=1.0)
    eta_ref = eta if eta_reference is None else eta_reference
    u = 1.0 - s_prime
    c = 1.0 + 2.0 / u
    a = 1.0 - eta
    b = 4.0 * eta_ref / u
    d = u - 2.0 * eta_ref
    return 2.0 / (math.pi * u ** 2) * (2.0 * eta * b / c ** 3 + (eta * d + a * b) / c ** 2 + a * d / c)


def ephd_rhs_closed(eta: float, s: float, s_prime: float) -> Tuple[float, float]:
    """
    sup over alpha of P(alpha; s' - s - 1) for the attenuated single-photon state.

    Args:
        eta: Efficiency of the reference state
        s: Ordering of the heterodyne symbols, s >= -1
        s_prime: Ordering of the test function

    Returns:
        (supremum, |alpha| of the maximizing ring)
    """
    width = 2.0 + s - s_prime
    if not width > 0:
        raise RepresentationError(f"P(alpha; s' - s - 1) is singular for s={s}, s'={s_prime}")
    scale = 2.0 / (math.pi * width ** 2)
    if eta > 0 and width <= 4.0 * eta:
        radius2 = width * (4.0 * eta - width) / (4.0 * eta)
        return scale * 2.0 * eta * math.exp(-(4.0 * eta - width) / (2.0 * eta)), math.sqrt(radius2)
    return scale * (width - 2.0 * eta), 0.0


def ephd_witness_closed(eta: float, s: float, s_prime: float = 0.0) -> WitnessReport:
    """
    Heterodyne witness for the attenuated single-photon state tested with its own P(alpha; s').

    Args:
        eta: Efficiency
        s: Ordering of the right-hand side, -1 <= s <= 1
        s_prime: Ordering of the test function

    Returns:
        WitnessReport
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"efficiency must lie in [0, 1], got {eta}")
    if not -1.0 <= s <= 1.0:
        raise RepresentationError(f"heterodyne witness needs -1 <= s <= 1, got {s}", largest_regular_s=-1.0)
    lhs = ephd_lhs_closed(eta, s_prime)
    rhs, radius = ephd_rhs_closed(eta, s, s_prime)
    branch = "ring" if eta > 0 and 2.0 + s - s_prime <= 4.0 * eta else "origin"
    return WitnessReport.build(lhs, rhs, [complex(radius, 0.0)], "closed-form",
                               {"eta": eta, "s": s, "s_prime": s_prime, "branch": branch})


def onoff_no_violation_check(lam: TestFunction, resolution: float = 1e-3,
                             grid: Optional[GridSpec] = None) -> Dict[str, Any]:
    """
    Certify that a single on/off detector admits no witness violation for lambda.

    The bound max{lambda(0), lambda(1)} dominates every convex combination
    P(0) lambda(0) + P(1) lambda(1); a sweep of the probability simplex and a
    supremum search over the classical symbols confirm it numerically.

    Returns:
        Proof record with the analytic bound, the searched bound and the sweep result
    """
    model = PovmModel.on_off()
    lam0, lam1 = lambda_value(lam, 0), lambda_value(lam, 1)
    rhs = max(lam0, lam1)
    p0 = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)
    lhs = p0 * lam0 + (1.0 - p0) * lam1
    violations = int(np.sum(lhs > rhs + 1e-12))
    searched = supremum_over_plane(lambda a: expectation_symbol(model, lam, a, 1.0), grid,
                                   radial=True, warn_boundary=False)
    return {
        "lambda": [lam0, lam1],
        "rhs": rhs,
        "rhs_search": searched.value,
        "max_lhs": float(np.max(lhs)),
        "points": int(p0.size),
        "violations": violations,
        "certified": violations == 0,
    }


def sweep_reports(values: Sequence[float], evaluate: Callable[[float], WitnessReport],
                  threads: Optional[int] = None, desc: str = "Sweep") -> List[Dict[str, Any]]:
    """
    Evaluate a report per parameter value and return CSV rows in input order.

    Args:
        values: Parameter axis
        evaluate: Maps a parameter value to a WitnessReport
        threads: Worker cap (defaults to QPS_WITNESS_THREADS)
        desc: Progress-bar label

    Returns:
        Rows with parameter, lhs, rhs, relative_violation, violated
    """
    threads = threads or config.THREADS

    def row(value: float) -> Dict[str, Any]:
        report = evaluate(value)
        return {"parameter": float(value), "lhs": report.lhs, "rhs": report.rhs,
                "relative_violation": report.relative_violation, "violated": report.violated}

    with ThreadPoolExecutor(max_workers=threads) as executor:
        rows = list(tqdm(executor.map(row, values), total=len(values), desc=desc))
    logger.info(f"{desc}: {len(rows)} points, {sum(r['violated'] for r in rows)} violated")
    return rows


def sweep(values: Sequence[float], state_factory: Callable[[float], QuantumState],
          model_factory: Callable[[float], PovmModel], lambda_factory: Callable[[float], TestFunction],
          s_factory: Callable[[float], float], grid: Optional[GridSpec] = None,
          threads: Optional[int] = None) -> List[Dict[str, Any]]:
    """Evaluate evaluate_witness along a parameter axis; factories map the parameter to each input."""
    return sweep_reports(
        values,
        lambda v: evaluate_witness(state_factory(v), model_factory(v), lambda_factory(v), s_factory(v), grid),
        threads)


def zero_crossings(rows: Sequence[Dict[str, Any]], key: str = "relative_violation") -> List[float]:
    """Parameter values where the key changes sign, by linear interpolation."""
    crossings: List[float] = []
    for prev, cur in zip(rows, rows[1:]):
        y0, y1 = prev[key], cur[key]
        if not (math.isfinite(y0) and math.isfinite(y1)):
            continue
        x0, x1 = prev["parameter"], cur["parameter"]
        if y0 == 0:
            if not crossings or crossings[-1] != x0:
                crossings.append(x0)
        elif y0 * y1 < 0:
            crossings.append(x0 + (x1 - x0) * (-y0) / (y1 - y0))
    if rows and rows[-1][key] == 0 and (not crossings or crossings[-1] != rows[-1]["parameter"]):
        crossings.append(rows[-1]["parameter"])
    return crossings
