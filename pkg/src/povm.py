"""
s-parameterized POVM symbols of the photocounting and homodyne measurement schemes.

A symbol evaluated "at s" below means Pi(A|a; alpha; -s), the representation that
pairs with the quasiprobability P(alpha; s) in the phase-space Born rule.
"""
import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from src import config
from src.errors import ConvergenceError, RepresentationError
from src.kernel import GridSpec, integrate_plane
from src.states import (QuantumState, char_fn, click_distribution, fock_quasiprob, largest_regular_s,
                        pnr_distribution, quadrature_dist, quasiprob)
from src.utils import complex_from_json, complex_to_json

logger = logging.getLogger(__name__)

DEFAULT_DISPLACEMENTS = (-0.1 + 0j, 0j, 0.1 + 0j)
MAX_PHASES = 32


class Scheme(Enum):
    PNR = "pnr"
    CLICK = "click"
    ON_OFF = "on-off"
    UHD = "uhd"
    BHD = "bhd"
    EPHD = "ephd"


THRESHOLD_ORDERING = {
    Scheme.PNR: 1.0,
    Scheme.CLICK: 1.0,
    Scheme.ON_OFF: 1.0,
    Scheme.UHD: 1.0,
    Scheme.BHD: 0.0,
    Scheme.EPHD: -1.0,
}

PHOTOCOUNTING = (Scheme.PNR, Scheme.CLICK, Scheme.ON_OFF)


def default_phases(count: int) -> Tuple[float, ...]:
    """Equally spaced homodyne phases pi*k/K, k = 0..K-1."""
    if int(count) != count or not 1 <= count <= MAX_PHASES:
        raise ValueError(f"number of phases must be an integer in [1, {MAX_PHASES}], got {count}")
    return tuple(math.pi * k / count for k in range(int(count)))


@dataclass(frozen=True)
class OutcomeSettingDomain:
    """Outcome set (finite list or a continuous-domain name) and the setting list."""

    settings: List[Any]
    outcomes: Optional[List[int]] = None
    continuous: Optional[str] = None

    @property
    def is_finite(self) -> bool:
        return self.outcomes is not None


@dataclass(frozen=True)
class PovmModel:
    """Measurement scheme with its settings and default ordering."""

    scheme: Scheme
    detectors: int = 1
    displacements: Tuple[complex, ...] = field(default=())
    phases: Tuple[float, ...] = field(default=())
    s: Optional[float] = None
    cutoff: int = config.PNR_CUTOFF

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "displacements", tuple(complex(g) for g in self.displacements))
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        if int(self.detectors) != self.detectors or self.detectors < 1:
            raise ValueError(f"detector count must be an integer >= 1, got {self.detectors}")
        if self.scheme == Scheme.ON_OFF and self.detectors != 1:
            raise ValueError("an on/off detector has exactly one element")
        if self.scheme == Scheme.UHD and not self.displacements:
            object.__setattr__(self, "displacements", DEFAULT_DISPLACEMENTS)
        if self.scheme == Scheme.BHD:
            if not self.phases:
                raise ValueError("balanced homodyne detection needs at least one phase")
            if len(self.phases) > MAX_PHASES:
                raise ValueError(f"at most {MAX_PHASES} homodyne phases are supported")
            bad = [p for p in self.phases if not 0.0 <= p < math.pi]
            if bad:
                raise ValueError(f"homodyne phases must lie in [0, pi), got {bad}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise ValueError(f"photon-number cutoff must be an integer >= 1, got {self.cutoff}")
        if self.s is not None:
            object.__setattr__(self, "s", float(self.s))

    @classmethod
    def pnr(cls, cutoff: Optional[int] = None) -> "PovmModel":
        return cls(Scheme.PNR, cutoff=cutoff or config.PNR_CUTOFF)

    @classmethod
    def click(cls, detectors: int) -> "PovmModel":
        return cls(Scheme.CLICK, detectors=detectors)

    @classmethod
    def on_off(cls) -> "PovmModel":
        return cls(Scheme.ON_OFF)

    @classmethod
    def uhd(cls, displacements=DEFAULT_DISPLACEMENTS) -> "PovmModel":
        return cls(Scheme.UHD, displacements=tuple(displacements))

    @classmethod
    def bhd(cls, phases=None, count: Optional[int] = None, s: Optional[float] = None) -> "PovmModel":
        if phases is None:
            phases = default_phases(count or 1)
        return cls(Scheme.BHD, phases=tuple(phases), s=s)

    @classmethod
    def ephd(cls, s: Optional[float] = None) -> "PovmModel":
        return cls(Scheme.EPHD, s=s)

    @property
    def s_th(self) -> float:
        return THRESHOLD_ORDERING[self.scheme]

    @property
    def preferred_route(self) -> str:
        if self.scheme in (Scheme.CLICK, Scheme.ON_OFF):
            return "characteristic"
        if self.scheme == Scheme.PNR:
            return "closed"
        return "quadrature"

    @property
    def is_phase_invariant(self) -> bool:
        return self.scheme in PHOTOCOUNTING

    def settings(self) -> List[Any]:
        if self.scheme == Scheme.UHD:
            return list(self.displacements)
        if self.scheme == Scheme.BHD:
            return list(self.phases)
        return [None]

    def outcomes(self) -> Optional[List[int]]:
        """Finite outcome list, or None for the continuous homodyne outcomes."""
        if self.scheme == Scheme.PNR:
            return list(range(self.cutoff + 1))
        if self.scheme in (Scheme.CLICK, Scheme.ON_OFF):
            return list(range(self.detectors + 1))
        if self.scheme == Scheme.UHD:
            return [0, 1]
        return None

    def domain(self) -> OutcomeSettingDomain:
        continuous = {Scheme.BHD: "real-line", Scheme.EPHD: "complex-plane"}.get(self.scheme)
        return OutcomeSettingDomain(settings=self.settings(), outcomes=self.outcomes(),
                                    continuous=continuous)

    @property
    def label(self) -> str:
        if self.scheme == Scheme.CLICK:
            return f"click(N={self.detectors})"
        if self.scheme == Scheme.BHD:
            return f"bhd(K={len(self.phases)})"
        if self.scheme == Scheme.UHD:
            return f"uhd({len(self.displacements)} displacements)"
        return self.scheme.value

    def to_dict(self) -> Dict[str, Any]:
        params: Dict[str, Any] = {}
        if self.scheme == Scheme.PNR:
            params["cutoff"] = self.cutoff
        elif self.scheme == Scheme.CLICK:
            params["N"] = self.detectors
        elif self.scheme == Scheme.UHD:
            params["displacements"] = [complex_to_json(g) for g in self.displacements]
        elif self.scheme == Scheme.BHD:
            params["phases"] = list(self.phases)
        return {"scheme": self.scheme.value, "params": params, "s": self.s}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PovmModel":
        """
        Build a model from its JSON descriptor {"scheme", "params", "s"}.

        BHD accepts either an explicit "phases" list or a phase count "K".

        Raises:
            ValueError: Unknown scheme or parameter
        """
        if not isinstance(data, dict) or "scheme" not in data:
            raise ValueError("povm descriptor needs a 'scheme' field")
        try:
            scheme = Scheme(data["scheme"])
        except ValueError:
            known = ", ".join(s.value for s in Scheme)
            raise ValueError(f"unknown povm scheme {data['scheme']!r} (expected one of {known})")
        params = dict(data.get("params") or {})
        allowed = {
            Scheme.PNR: {"cutoff"},
            Scheme.CLICK: {"N"},
            Scheme.ON_OFF: set(),
            Scheme.UHD: {"displacements"},
            Scheme.BHD: {"phases", "K"},
            Scheme.EPHD: set(),
        }[scheme]
        unknown = set(params) - allowed
        if unknown:
            raise ValueError(f"unknown parameters for {scheme.value}: {sorted(unknown)}")
        s = data.get("s")
        s = None if s is None else float(s)
        if scheme == Scheme.PNR:
            return cls(scheme, cutoff=int(params.get("cutoff", config.PNR_CUTOFF)), s=s)
        if scheme == Scheme.CLICK:
            if "N" not in params:
                raise ValueError("click detector needs parameter N")
            return cls(scheme, detectors=int(params["N"]), s=s)
        if scheme == Scheme.UHD:
            gammas = params.get("displacements", DEFAULT_DISPLACEMENTS)
            return cls(scheme, displacements=tuple(complex_from_json(g) for g in gammas), s=s)
        if scheme == Scheme.BHD:
            if "phases" in params:
                return cls(scheme, phases=tuple(float(p) for p in params["phases"]), s=s)
            return cls(scheme, phases=default_phases(int(params.get("K", 1))), s=s)
        return cls(scheme, s=s)

    def __str__(self) -> str:
        return self.label


def pnr_symbol(n: int, alpha):
    """Ideal photon-number symbol |alpha|^{2n} exp(-|alpha|^2) / n! (at s = 1)."""
    if int(n) != n or n < 0:
        raise ValueError(f"photon number must be a non-negative integer, got {n}")
    value = stats.poisson.pmf(int(n), np.abs(np.asarray(alpha, dtype=complex)) ** 2)
    return float(value) if np.ndim(value) == 0 else value


def _check_click(n: int, N: int) -> None:
    if int(N) != N or N < 1:
        raise ValueError(f"detector count must be an integer >= 1, got {N}")
    if int(n) != n or not 0 <= n <= N:
        raise ValueError(f"click number must be an integer in [0, {N}], got {n}")


def click_symbol(n: int, N: int, alpha):
    """
    Click-array symbol C(N, n) (1 - e^{-|alpha|^2/N})^n e^{-|alpha|^2 (N - n)/N} (at s = 1).

    Args:
        n: Number of clicks
        N: Number of on/off detectors
        alpha: Complex amplitude or array

    Returns:
        Symbol value(s)
    """
    _check_click(n, N)
    x = np.abs(np.asarray(alpha, dtype=complex)) ** 2
    value = math.comb(N, n) * (-np.expm1(-x / N)) ** n * np.exp(-x * (N - n) / N)
    return float(value) if np.ndim(value) == 0 else value


def uhd_symbol(n: int, gamma: complex, alpha):
    """Displaced on/off symbol (at s = 1): no-click e^{-|alpha - gamma|^2}, click its complement."""
    if n not in (0, 1):
        raise ValueError(f"unbalanced homodyne outcome must be 0 or 1, got {n}")
    d = np.abs(np.asarray(alpha, dtype=complex) - complex(gamma)) ** 2
    value = np.exp(-d) if n == 0 else -np.expm1(-d)
    return float(value) if np.ndim(value) == 0 else value


def bhd_symbol(x: float, phi: float, alpha, s: float):
    """
    Balanced homodyne symbol (pi s)^{-1/2} exp(-(x - sqrt(2) Re(alpha e^{-i phi}))^2 / s).

    Raises:
        RepresentationError: s <= 0 (s = 0 is a delta kernel handled by closed forms,
            s < 0 lies below the threshold ordering)
    """
    s = float(s)
    if s < 0:
        raise RepresentationError(f"homodyne symbol is not representable at s={s} < 0",
                                  largest_regular_s=0.0)
    if s == 0:
        raise RepresentationError("homodyne symbol at s=0 is a delta kernel; "
                                  "use the closed-form quadrature expectations")
    x0 = math.sqrt(2.0) * (np.asarray(alpha, dtype=complex) * np.exp(-1j * phi)).real
    value = np.exp(-(x - x0) ** 2 / s) / math.sqrt(math.pi * s)
    return float(value) if np.ndim(value) == 0 else value


def ephd_symbol(alpha0: complex, alpha, s: float):
    """
    Eight-port homodyne symbol 2/(pi (1 + s)) exp(-2|alpha0 - alpha|^2 / (1 + s)).

    Raises:
        RepresentationError: s <= -1 (s = -1 is a delta kernel; the outcome density
            there is the Q function of the state)
    """
    s = float(s)
    if s < -1:
        raise RepresentationError(f"heterodyne symbol is not representable at s={s} < -1",
                                  largest_regular_s=-1.0)
    if s == -1:
        raise RepresentationError("heterodyne symbol at s=-1 is a delta kernel; "
                                  "the outcome density equals the Q function")
    d = np.abs(complex(alpha0) - np.asarray(alpha, dtype=complex)) ** 2
    value = 2.0 / (math.pi * (1.0 + s)) * np.exp(-2.0 * d / (1.0 + s))
    return float(value) if np.ndim(value) == 0 else value


def normal_exp_symbol(mu: float, alpha, s: float):
    """Symbol of :exp(-mu n): at ordering -s: 2/(2 - mu(1 - s)) exp(-2 mu |alpha|^2 / (2 - mu(1 - s)))."""
    denom = 2.0 - mu * (1.0 - s)
    if denom <= 0:
        raise RepresentationError(f"normally ordered exponential with mu={mu} has no symbol at s={s}")
    x = np.abs(np.asarray(alpha, dtype=complex)) ** 2
    return 2.0 / denom * np.exp(-2.0 * mu * x / denom)


def _photocount_ordering(s: float) -> float:
    s = float(s)
    if s > 1:
        raise RepresentationError(f"ordering s={s} exceeds 1")
    if s <= -1:
        raise RepresentationError(f"photocounting symbols diverge at s={s} <= -1")
    return s


def symbol(model: PovmModel, outcome, setting, alpha, s: float):
    """
    POVM symbol Pi(outcome | setting; alpha; -s) of any scheme.

    Photocounting symbols below s = 1 are signed but regular for s > -1.

    Args:
        model: Measurement scheme
        outcome: Photon/click number, 0/1 for UHD, quadrature value x for BHD,
            complex amplitude for EPHD
        setting: Displacement (UHD), phase (BHD) or None
        alpha: Complex amplitude or array
        s: Ordering of the paired quasiprobability

    Returns:
        Symbol value(s) with the shape of alpha
    """
    scheme = model.scheme
    if scheme == Scheme.BHD:
        return bhd_symbol(outcome, setting, alpha, s)
    if scheme == Scheme.EPHD:
        return ephd_symbol(outcome, alpha, s)
    s = _photocount_ordering(s)
    if scheme == Scheme.PNR:
        if s == 1.0:
            return pnr_symbol(outcome, alpha)
        value = math.pi * fock_quasiprob(int(outcome), np.abs(np.asarray(alpha, dtype=complex)) ** 2, -s)
        return float(value) if np.ndim(value) == 0 else value
    if scheme == Scheme.UHD:
        if outcome not in (0, 1):
            raise ValueError(f"unbalanced homodyne outcome must be 0 or 1, got {outcome}")
        shifted = np.asarray(alpha, dtype=complex) - complex(setting)
        no_click = normal_exp_symbol(1.0, shifted, s)
        value = no_click if outcome == 0 else 1.0 - no_click
        return float(value) if np.ndim(value) == 0 else value
    N = model.detectors
    _check_click(outcome, N)
    if s == 1.0:
        return click_symbol(outcome, N, alpha)
    n = int(outcome)
    value = 0.0
    for k in range(n + 1):
        weight = math.comb(N, n) * math.comb(n, k) * (-1) ** (n - k)
        value = value + weight * normal_exp_symbol((N - k) / N, alpha, s)
    return float(value) if np.ndim(value) == 0 else value


def click_char(n: int, N: int, beta, s: float, eta: float = 1.0):
    """
    Characteristic function of the click symbol Pi(n; alpha; -s) for efficiency eta.

    Returns the regular part only. For n = N the term k = N is a delta at beta = 0
    of unit weight, see click_char_delta.

    Args:
        n: Number of clicks
        N: Number of detectors
        beta: Complex argument or array
        s: Ordering parameter
        eta: Detection efficiency folded into the symbol, in (0, 1]

    Returns:
        Value(s) with the shape of beta
    """
    _check_click(n, N)
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"efficiency must lie in (0, 1] for the characteristic symbol, got {eta}")
    b2 = np.abs(np.asarray(beta, dtype=complex)) ** 2
    value = np.zeros_like(b2)
    for k in range(min(n, N - 1) + 1):
        weight = math.comb(N, n) * math.comb(n, k) * (-1) ** (n - k)
        rate = ((2.0 - eta) * N + eta * k) / (2.0 * eta * (N - k))
        value = value + weight * N / (math.pi * eta * (N - k)) * np.exp(-b2 * rate)
    value = value * np.exp(-float(s) * b2 / 2.0)
    return float(value) if np.ndim(value) == 0 else value


def click_char_delta(n: int, N: int) -> float:
    """Weight of the delta at beta = 0 in the characteristic click symbol."""
    _check_click(n, N)
    return 1.0 if n == N else 0.0


def default_ordering(state: QuantumState, model: PovmModel) -> float:
    """A regular ordering for the Born rule: the model's own s, else an interior value."""
    if model.s is not None:
        return model.s
    bound = min(1.0, largest_regular_s(state))
    if model.scheme == Scheme.BHD:
        return 0.5 * bound
    return min(0.0, 0.5 * bound)


def _born_closed(state: QuantumState, model: PovmModel, outcome, setting) -> float:
    scheme = model.scheme
    if scheme == Scheme.PNR:
        return float(pnr_distribution(state, model.cutoff)[int(outcome)])
    if scheme in (Scheme.CLICK, Scheme.ON_OFF):
        _check_click(outcome, model.detectors)
        return float(click_distribution(state, model.detectors)[int(outcome)])
    if scheme == Scheme.UHD:
        no_click = math.pi * quasiprob(state, complex(setting), -1.0)
        return no_click if outcome == 0 else 1.0 - no_click
    if scheme == Scheme.BHD:
        return quadrature_dist(state, float(outcome), float(setting))
    return quasiprob(state, complex(outcome), -1.0)


def _born_quadrature(state: QuantumState, model: PovmModel, outcome, setting, s: float,
                     grid: GridSpec) -> float:
    radial = state.is_phase_invariant and model.is_phase_invariant

    def integrand(alpha):
        return symbol(model, outcome, setting, alpha, s) * quasiprob(state, alpha, s)

    return integrate_plane(integrand, grid, radial=radial)


def _born_characteristic(state: QuantumState, model: PovmModel, outcome, s: float,
                         grid: GridSpec) -> float:
    if model.scheme not in (Scheme.CLICK, Scheme.ON_OFF):
        raise ValueError(f"no characteristic-function route for {model.scheme.value}")
    N = model.detectors

    def integrand(beta):
        return np.real(click_char(outcome, N, beta, s, 1.0) * char_fn(state, beta, s))

    value = integrate_plane(integrand, grid, radial=state.is_phase_invariant)
    return value + click_char_delta(outcome, N)


def born_probability(state: QuantumState, model: PovmModel, outcome, setting=None,
                     s: Optional[float] = None, route: Optional[str] = None,
                     cross_check: bool = False, grid: Optional[GridSpec] = None) -> float:
    """
    Outcome probability (density for homodyne outcomes) by the phase-space Born rule.

    Args:
        state: Catalog state
        model: Measurement scheme
        outcome: Outcome value
        setting: Setting value (displacement or phase)
        s: Ordering of the representation pair
        route: "closed", "quadrature" or "characteristic"; defaults to the model's preference
        cross_check: Also evaluate a second route and compare
        grid: Integration domain for the numerical routes

    Returns:
        The probability

    Raises:
        ConvergenceError: Cross-check routes disagree by more than the formula tolerance
    """
    route = route or model.preferred_route
    grid = grid or GridSpec()
    s = default_ordering(state, model) if s is None else float(s)

    def evaluate(which: str) -> float:
        if which == "closed":
            return _born_closed(state, model, outcome, setting)
        if which == "quadrature":
            return _born_quadrature(state, model, outcome, setting, s, grid)
        if which == "characteristic":
            return _born_characteristic(state, model, outcome, s, grid)
        raise ValueError(f"unknown Born-rule route {which!r}")

    value = evaluate(route)
    logger.debug(f"Born rule {state.label} / {model.label} outcome={outcome} "
                 f"setting={setting} s={s} via {route}: {value!r}")
    if cross_check:
        other = "closed" if route != "closed" else "quadrature"
        check = evaluate(other)
        if abs(value - check) > config.FORMULA_TOLERANCE:
            raise ConvergenceError(
                f"Born-rule routes disagree for {state.label} / {model.label}: "
                f"{route}={value!r}, {other}={check!r}", estimate=value, error=abs(value - check))
    return value
