"""
Catalog of single-mode quantum states with closed-form phase-space representations.

Detection efficiency is attributed to the states: every catalog entry carries an
efficiency eta and all of its distributions describe the attenuated state.
"""
import math
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import special, stats

from src import config
from src.errors import ConvergenceError, DivergenceError, RepresentationError
from src.kernel import hermite
from src.utils import complex_from_json, complex_to_json

logger = logging.getLogger(__name__)


class StateKind(Enum):
    VACUUM = "vacuum"
    COHERENT = "coherent"
    FOCK = "fock"
    ATTENUATED_FOCK = "attenuated-fock"
    SQUEEZED_VACUUM = "squeezed-vacuum"
    EVEN_CAT = "even-cat"


_PARAMS = {
    StateKind.VACUUM: ("eta",),
    StateKind.COHERENT: ("alpha0", "eta"),
    StateKind.FOCK: ("n", "eta"),
    StateKind.ATTENUATED_FOCK: ("n", "eta"),
    StateKind.SQUEEZED_VACUUM: ("r", "eta"),
    StateKind.EVEN_CAT: ("alpha0", "eta"),
}


@dataclass(frozen=True)
class QuantumState:
    """Immutable catalog state descriptor."""

    kind: StateKind
    n: int = 0
    alpha0: complex = 0j
    r: float = 0.0
    eta: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", StateKind(self.kind))
        object.__setattr__(self, "alpha0", complex(self.alpha0))
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"efficiency eta must lie in [0, 1], got {self.eta}")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"photon number n must be a non-negative integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"squeezing r must be finite and >= 0, got {self.r}")
        if not (math.isfinite(self.alpha0.real) and math.isfinite(self.alpha0.imag)):
            raise ValueError(f"amplitude alpha0 must be finite, got {self.alpha0}")

    @classmethod
    def vacuum(cls) -> "QuantumState":
        return cls(StateKind.VACUUM)

    @classmethod
    def coherent(cls, alpha0: complex, eta: float = 1.0) -> "QuantumState":
        return cls(StateKind.COHERENT, alpha0=alpha0, eta=eta)

    @classmethod
    def fock(cls, n: int, eta: float = 1.0) -> "QuantumState":
        return cls(StateKind.FOCK, n=n, eta=eta)

    @classmethod
    def attenuated_fock(cls, n: int, eta: float) -> "QuantumState":
        return cls(StateKind.ATTENUATED_FOCK, n=n, eta=eta)

    @classmethod
    def squeezed_vacuum(cls, r: float, eta: float = 1.0) -> "QuantumState":
        return cls(StateKind.SQUEEZED_VACUUM, r=r, eta=eta)

    @classmethod
    def even_cat(cls, alpha0: complex, eta: float = 1.0) -> "QuantumState":
        return cls(StateKind.EVEN_CAT, alpha0=alpha0, eta=eta)

    @property
    def is_fock_like(self) -> bool:
        return self.kind in (StateKind.FOCK, StateKind.ATTENUATED_FOCK)

    @property
    def is_phase_invariant(self) -> bool:
        """True when every distribution of the state depends on |alpha| only."""
        if self.kind in (StateKind.VACUUM, StateKind.FOCK, StateKind.ATTENUATED_FOCK):
            return True
        if self.kind in (StateKind.COHERENT, StateKind.EVEN_CAT):
            return self.alpha0 == 0 or self.eta == 0
        return self.r == 0 or self.eta == 0

    @property
    def is_classical(self) -> bool:
        """True for states whose Glauber-Sudarshan P function is non-negative."""
        if self.kind in (StateKind.VACUUM, StateKind.COHERENT) or self.eta == 0:
            return True
        if self.is_fock_like:
            return self.n == 0
        if self.kind == StateKind.SQUEEZED_VACUUM:
            return self.r == 0
        return self.alpha0 == 0

    @property
    def centers(self) -> List[complex]:
        """Phase-space points the state is concentrated around, after loss."""
        shift = math.sqrt(self.eta) * self.alpha0
        if self.kind == StateKind.COHERENT:
            return [shift]
        if self.kind == StateKind.EVEN_CAT and shift != 0:
            return [shift, -shift]
        return [0j]

    @property
    def label(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.to_dict()["params"].items())
        return f"{self.kind.value}({params})"

    def to_dict(self) -> Dict[str, Any]:
        params: Dict[str, Any] = {}
        for name in _PARAMS[self.kind]:
            if name == "alpha0":
                params[name] = complex_to_json(self.alpha0)
            else:
                params[name] = getattr(self, name)
        return {"kind": self.kind.value, "params": params}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "QuantumState":
        """
        Build a state from its JSON descriptor {"kind": ..., "params": {...}}.

        Raises:
            ValueError: Unknown kind, unknown or missing parameter
        """
        if not isinstance(data, dict) or "kind" not in data:
            raise ValueError("state descriptor needs a 'kind' field")
        try:
            kind = StateKind(data["kind"])
        except ValueError:
            known = ", ".join(k.value for k in StateKind)
            raise ValueError(f"unknown state kind {data['kind']!r} (expected one of {known})")
        params = dict(data.get("params") or {})
        unknown = set(params) - set(_PARAMS[kind])
        if unknown:
            raise ValueError(f"unknown parameters for {kind.value}: {sorted(unknown)}")
        required = {
            StateKind.COHERENT: ("alpha0",),
            StateKind.FOCK: ("n",),
            StateKind.ATTENUATED_FOCK: ("n", "eta"),
            StateKind.SQUEEZED_VACUUM: ("r",),
            StateKind.EVEN_CAT: ("alpha0",),
        }.get(kind, ())
        missing = [name for name in required if name not in params]
        if missing:
            raise ValueError(f"missing parameters for {kind.value}: {missing}")
        kwargs: Dict[str, Any] = {}
        if "alpha0" in params:
            kwargs["alpha0"] = complex_from_json(params["alpha0"])
        if "n" in params:
            n = params["n"]
            if isinstance(n, bool) or int(n) != n:
                raise ValueError(f"photon number n must be an integer, got {n!r}")
            kwargs["n"] = int(n)
        for name in ("r", "eta"):
            if name in params:
                kwargs[name] = float(params[name])
        return cls(kind, **kwargs)

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class QuadratureSample:
    """Quadrature value x at phase phi, with phi reduced to [0, pi)."""

    x: float
    phi: float

    def __post_init__(self) -> None:
        turns = math.floor(self.phi / math.pi)
        if turns:
            # x(phi + pi) = -x(phi)
            object.__setattr__(self, "phi", self.phi - turns * math.pi)
            object.__setattr__(self, "x", self.x * (-1) ** (turns % 2))


def largest_regular_s(state: QuantumState) -> float:
    """
    Supremum of the orderings with a regular quasiprobability (exclusive bound).

    Args:
        state: Catalog state

    Returns:
        1 for every kind except squeezed vacuum, 1 - eta*(1 - exp(-2r)) for it
    """
    if state.kind == StateKind.SQUEEZED_VACUUM:
        return 1.0 - state.eta * (1.0 - math.exp(-2.0 * state.r))
    return 1.0


def _check_regular(state: QuantumState, s: float) -> float:
    s = float(s)
    bound = largest_regular_s(state)
    if not s < bound:
        raise RepresentationError(
            f"{state.label} has no regular quasiprobability at s={s}; "
            f"the ordering must stay below {bound:.12g}", largest_regular_s=bound)
    return s


def _binomial_weights(n: int, eta: float) -> np.ndarray:
    return stats.binom.pmf(np.arange(n + 1), n, eta)


def fock_quasiprob(m: int, abs2, s: float):
    """
    s-parameterized quasiprobability of the number state |m> as a function of |alpha|^2.

    The finite sum is regular for every s < 1, including s <= -1.
    """
    abs2 = np.asarray(abs2, dtype=float)
    one_minus, one_plus = 1.0 - s, 1.0 + s
    total = np.zeros_like(abs2)
    for k in range(m + 1):
        coef = ((-1) ** (m + k) * math.comb(m, k) / math.factorial(k) * 4.0 ** k
                * one_plus ** (m - k) / one_minus ** (m + k))
        total = total + coef * abs2 ** k
    return 2.0 / (math.pi * one_minus) * np.exp(-2.0 * abs2 / one_minus) * total


def _squeezed_variances(state: QuantumState, s: float):
    a = state.eta * math.exp(2.0 * state.r) + 1.0 - state.eta
    b = state.eta * math.exp(-2.0 * state.r) + 1.0 - state.eta
    return (b - s) / 4.0, (a - s) / 4.0


def _cat_norm(alpha0: complex) -> float:
    return 1.0 / (2.0 * (1.0 + math.exp(-2.0 * abs(alpha0) ** 2)))


def quasiprob(state: QuantumState, alpha, s: float):
    """
    s-parameterized (Cahill-Glauber) quasiprobability P(alpha; s).

    Args:
        state: Catalog state
        alpha: Complex amplitude or array of amplitudes
        s: Ordering parameter below largest_regular_s(state)

    Returns:
        Real value(s) with the shape of alpha

    Raises:
        RepresentationError: s is at or above the largest regular ordering
    """
    s = _check_regular(state, s)
    arr = np.asarray(alpha, dtype=complex)
    eta = state.eta
    if state.kind == StateKind.VACUUM or eta == 0:
        value = fock_quasiprob(0, np.abs(arr) ** 2, s)
    elif state.kind == StateKind.COHERENT:
        shift = math.sqrt(eta) * state.alpha0
        value = 2.0 / (math.pi * (1.0 - s)) * np.exp(-2.0 * np.abs(arr - shift) ** 2 / (1.0 - s))
    elif state.is_fock_like:
        abs2 = np.abs(arr) ** 2
        weights = _binomial_weights(state.n, eta)
        value = sum(w * fock_quasiprob(m, abs2, s) for m, w in enumerate(weights) if w > 0)
    elif state.kind == StateKind.SQUEEZED_VACUUM:
        var_re, var_im = _squeezed_variances(state, s)
        value = (np.exp(-arr.real ** 2 / (2.0 * var_re) - arr.imag ** 2 / (2.0 * var_im))
                 / (2.0 * math.pi * math.sqrt(var_re * var_im)))
    else:
        c = _cat_norm(state.alpha0)
        root = math.sqrt(eta)
        value = np.zeros(arr.shape, dtype=complex)
        for a1 in (state.alpha0, -state.alpha0):
            for a2 in (state.alpha0, -state.alpha0):
                overlap = np.exp(-abs(a1) ** 2 / 2 - abs(a2) ** 2 / 2 + np.conj(a2) * a1)
                value = value + overlap * np.exp(
                    -2.0 * (root * np.conj(a2) - np.conj(arr)) * (root * a1 - arr) / (1.0 - s))
        value = np.real(value) * c * 2.0 / (math.pi * (1.0 - s))
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def char_fn(state: QuantumState, beta, s: float):
    """
    s-ordered characteristic function C(beta; s) = Int d^2alpha P(alpha; s) exp(alpha* beta - alpha beta*).

    Computed from the normally ordered form as C(sqrt(eta) beta; 1) * exp((s - 1)|beta|^2 / 2).

    Args:
        state: Catalog state
        beta: Complex argument or array
        s: Ordering parameter (any real value)

    Returns:
        Complex value(s) with the shape of beta
    """
    arr = np.asarray(beta, dtype=complex)
    scaled = math.sqrt(state.eta) * arr
    if state.kind == StateKind.VACUUM or state.eta == 0:
        normal = np.ones(arr.shape, dtype=complex)
    elif state.kind == StateKind.COHERENT:
        a = state.alpha0
        normal = np.exp(np.conj(a) * scaled - a * np.conj(scaled))
    elif state.is_fock_like:
        normal = special.eval_laguerre(state.n, np.abs(scaled) ** 2).astype(complex)
    elif state.kind == StateKind.SQUEEZED_VACUUM:
        e2 = math.exp(2.0 * state.r)
        normal = np.exp(-0.5 * ((e2 - 1.0) * scaled.real ** 2 + (1.0 / e2 - 1.0) * scaled.imag ** 2)
                        ).astype(complex)
    else:
        a = state.alpha0
        overlap = np.conj(a) * scaled
        damp = math.exp(-2.0 * abs(a) ** 2)
        normal = ((np.cos(2.0 * overlap.imag) + damp * np.cosh(2.0 * overlap.real)) / (1.0 + damp)
                  ).astype(complex)
    value = normal * np.exp((float(s) - 1.0) * np.abs(arr) ** 2 / 2.0)
    return complex(value) if value.ndim == 0 else value


def generating_function(state: QuantumState, mu: float) -> float:
    """
    Normally ordered generating function G(mu) = <:exp(-mu n):> of the attenuated state.

    Args:
        state: Catalog state
        mu: Argument (mu = 1 + t for the photocount test function)

    Returns:
        G(mu)

    Raises:
        DivergenceError: The squeezed-vacuum series diverges; carries the critical t = mu - 1
    """
    mu = float(mu)
    x = state.eta * mu
    if state.kind == StateKind.VACUUM or state.eta == 0:
        return 1.0
    if state.kind == StateKind.COHERENT:
        return math.exp(-x * abs(state.alpha0) ** 2)
    if state.is_fock_like:
        return (1.0 - x) ** state.n
    if state.kind == StateKind.SQUEEZED_VACUUM:
        if state.r == 0:
            return 1.0
        denom = 1.0 - math.sinh(state.r) ** 2 * ((1.0 - x) ** 2 - 1.0)
        if denom <= 0:
            critical_mu = (1.0 + 1.0 / math.tanh(state.r)) / state.eta
            raise DivergenceError(
                f"photon-number series of {state.label} diverges at mu={mu}; "
                f"t must stay below {critical_mu - 1.0:.12g}", critical_t=critical_mu - 1.0)
        return 1.0 / math.sqrt(denom)
    a2 = abs(state.alpha0) ** 2
    # cosh ratio written with exponentials to stay finite for large amplitudes
    return (math.exp((abs(1.0 - x) - 1.0) * a2) * (1.0 + math.exp(-2.0 * abs(1.0 - x) * a2))
            / (1.0 + math.exp(-2.0 * a2)))


def _ideal_number_distribution(state: QuantumState, cutoff: int) -> np.ndarray:
    m = np.arange(cutoff + 1)
    probs = np.zeros(cutoff + 1)
    if state.kind == StateKind.VACUUM:
        probs[0] = 1.0
    elif state.kind == StateKind.COHERENT:
        probs = stats.poisson.pmf(m, abs(state.alpha0) ** 2)
    elif state.is_fock_like:
        if state.n > cutoff:
            raise ConvergenceError(f"{state.label} exceeds the photon-number cutoff {cutoff}")
        probs[state.n] = 1.0
    elif state.kind == StateKind.SQUEEZED_VACUUM:
        if state.r == 0:
            probs[0] = 1.0
        else:
            j = m[::2] // 2
            log_p = (special.gammaln(2 * j + 1) - 2.0 * special.gammaln(j + 1)
                     + 2 * j * math.log(math.tanh(state.r) / 2.0) - math.log(math.cosh(state.r)))
            probs[::2] = np.exp(log_p)
    else:
        x = abs(state.alpha0) ** 2
        if x == 0:
            probs[0] = 1.0
        else:
            even = m[::2]
            log_cosh = x + math.log1p(math.exp(-2.0 * x)) - math.log(2.0)
            probs[::2] = np.exp(even * math.log(x) - special.gammaln(even + 1) - log_cosh)
    return probs


def pnr_distribution(state: QuantumState, cutoff: Optional[int] = None) -> np.ndarray:
    """
    Photon-number distribution of the attenuated state, P(0..cutoff).

    The ideal distribution is thinned binomially with the state's efficiency.

    Args:
        state: Catalog state
        cutoff: Largest photon number kept

    Returns:
        Probabilities for n = 0..cutoff

    Raises:
        ConvergenceError: The tail mass beyond the cutoff exceeds the tail tolerance
    """
    cutoff = cutoff or config.PNR_CUTOFF
    ideal = _ideal_number_distribution(state, cutoff)
    tail = 1.0 - float(np.sum(ideal))
    if tail > config.TAIL_TOLERANCE:
        raise ConvergenceError(
            f"photon-number tail of {state.label} beyond cutoff {cutoff} is {tail:.3e}; raise the cutoff",
            estimate=tail)
    if state.eta == 1.0:
        return ideal
    n = np.arange(cutoff + 1)
    thinning = stats.binom.pmf(n[:, None], n[None, :], state.eta)
    return thinning @ ideal


def click_distribution(state: QuantumState, detectors: int) -> np.ndarray:
    """
    Click statistics of an array of N on/off detectors.

    P(n) = C(N, n) sum_k C(n, k) (-1)^(n-k) G((N - k)/N).

    Args:
        state: Catalog state
        detectors: Number of on/off detectors N >= 1

    Returns:
        Probabilities for n = 0..N
    """
    if int(detectors) != detectors or detectors < 1:
        raise ValueError(f"detector count must be an integer >= 1, got {detectors}")
    N = int(detectors)
    g = [generating_function(state, (N - k) / N) for k in range(N + 1)]
    probs = np.array([
        math.comb(N, n) * sum(math.comb(n, k) * (-1) ** (n - k) * g[k] for k in range(n + 1))
        for n in range(N + 1)])
    # alternating sums leave rounding-level negatives
    return np.where(np.abs(probs) < 1e-14, 0.0, probs)


def photocount_dist(state: QuantumState, detector) -> np.ndarray:
    """
    Outcome probability table of a photocounting detector.

    Args:
        state: Catalog state
        detector: PovmModel with scheme pnr, click or on-off

    Returns:
        Probabilities over the detector's outcomes
    """
    from src.povm import Scheme

    if detector.scheme == Scheme.PNR:
        probs = pnr_distribution(state, detector.cutoff)
    elif detector.scheme in (Scheme.CLICK, Scheme.ON_OFF):
        probs = click_distribution(state, detector.detectors)
    else:
        raise ValueError(f"{detector.scheme.value} is not a photocounting detector")
    total = float(np.sum(probs))
    if abs(total - 1.0) > config.TAIL_TOLERANCE:
        logger.warning(f"Photocount table of {state.label} sums to {total!r}")
    return probs


def fock_quadrature(m: int, x):
    """Quadrature density of the number state |m>: H_m(x)^2 exp(-x^2) / (2^m m! sqrt(pi))."""
    x = np.asarray(x, dtype=float)
    norm = 2.0 ** m * math.factorial(m) * math.sqrt(math.pi)
    return hermite(m, x) ** 2 * np.exp(-x ** 2) / norm


def quadrature_moments(state: QuantumState, phi: float = 0.0):
    """Mean and variance of the quadrature x(phi) for the Gaussian catalog states."""
    if state.kind == StateKind.VACUUM or state.eta == 0:
        return 0.0, 0.5
    if state.kind == StateKind.COHERENT:
        mean = math.sqrt(2.0) * (math.sqrt(state.eta) * state.alpha0 * np.exp(-1j * phi)).real
        return float(mean), 0.5
    if state.kind == StateKind.SQUEEZED_VACUUM:
        var_re, var_im = _squeezed_variances(state, 0.0)
        return 0.0, 2.0 * (var_re * math.cos(phi) ** 2 + var_im * math.sin(phi) ** 2)
    raise ValueError(f"{state.label} is not a Gaussian state")


def quadrature_dist(state: QuantumState, x, phi: float = 0.0):
    """
    Quadrature distribution P(x) at phase phi, x = (alpha e^{-i phi} + alpha* e^{i phi}) / sqrt(2).

    Args:
        state: Fock-like, vacuum, coherent or squeezed-vacuum state
        x: Quadrature value or array
        phi: Phase setting

    Returns:
        Density value(s) with the shape of x
    """
    arr = np.asarray(x, dtype=float)
    if state.kind == StateKind.VACUUM or state.eta == 0:
        value = fock_quadrature(0, arr)
    elif state.is_fock_like:
        weights = _binomial_weights(state.n, state.eta)
        value = sum(w * fock_quadrature(m, arr) for m, w in enumerate(weights) if w > 0)
    elif state.kind in (StateKind.COHERENT, StateKind.SQUEEZED_VACUUM):
        mean, variance = quadrature_moments(state, phi)
        value = np.exp(-(arr - mean) ** 2 / (2.0 * variance)) / math.sqrt(2.0 * math.pi * variance)
    else:
        raise ValueError(f"no quadrature distribution for {state.label}")
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value
