"""
Marginal-problem linear programs: incidence matrices, primal feasibility and
dual certificates (optimal test functions) for finite and phase-space problems.
"""
import math
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.optimize import linprog

from src import config
from src.errors import LPFormulationError, RepresentationError
from src.kernel import GridSpec, quadrature_1d, supremum_over_plane
from src.povm import PHOTOCOUNTING, PovmModel, Scheme, born_probability, symbol
from src.states import QuantumState, photocount_dist, pnr_distribution, quadrature_dist
from src.utils import complex_to_json, write_csv

logger = logging.getLogger(__name__)

MAX_STRATEGIES = 10 ** 7
DEFAULT_BINS = {"count": 40, "limit": 5.0}


@dataclass
class MarginalProblem:
    """Finite marginal problem: rows (outcomes, settings), columns deterministic strategies."""

    settings: Tuple[int, ...]
    outcomes: Tuple[int, ...]
    rows: List[Tuple[Tuple[int, ...], Tuple[int, ...]]]
    strategies: List[Tuple[Tuple[int, ...], ...]]
    matrix: np.ndarray
    probabilities: Optional[np.ndarray] = None

    @property
    def num_strategies(self) -> int:
        return self.matrix.shape[1]

    def with_probabilities(self, probabilities: Sequence[float]) -> "MarginalProblem":
        """
        Attach a probability vector ordered like the rows.

        Raises:
            ValueError: Wrong length, entries outside [0, 1] or setting blocks not normalized
        """
        p = np.asarray(probabilities, dtype=float)
        if p.shape != (len(self.rows),):
            raise ValueError(f"expected {len(self.rows)} probabilities, got shape {p.shape}")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        blocks: Dict[Tuple[int, ...], float] = {}
        for (_, setting), value in zip(self.rows, p):
            blocks[setting] = blocks.get(setting, 0.0) + value
        bad = {k: v for k, v in blocks.items() if abs(v - 1.0) > 1e-10}
        if bad:
            raise ValueError(f"setting blocks do not sum to 1: {bad}")
        return MarginalProblem(self.settings, self.outcomes, self.rows, self.strategies, self.matrix, p)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "marginal",
            "settings": list(self.settings),
            "outcomes": list(self.outcomes),
            "shape": list(self.matrix.shape),
            "rows": [{"outcomes": list(o), "settings": list(a)} for o, a in self.rows],
            "probabilities": None if self.probabilities is None else self.probabilities.tolist(),
        }


def build_incidence(settings: Sequence[int], outcomes: Sequence[int]) -> MarginalProblem:
    """
    Incidence matrix of a multi-party marginal problem.

    Column j is a deterministic strategy assigning an outcome to every setting of every
    party; row (A, a) holds 1 where the strategy outputs A at settings a.

    Args:
        settings: Number of settings per party
        outcomes: Number of outcomes per setting, per party

    Returns:
        MarginalProblem without probabilities
    """
    settings, outcomes = tuple(int(x) for x in settings), tuple(int(x) for x in outcomes)
    if len(settings) != len(outcomes) or not settings:
        raise ValueError("settings and outcomes need one entry per party")
    if min(settings) < 1 or min(outcomes) < 1:
        raise ValueError("every party needs at least one setting and one outcome")
    size = math.prod(o ** s for s, o in zip(settings, outcomes))
    if size > MAX_STRATEGIES:
        raise ValueError(f"{size} deterministic strategies exceed the limit {MAX_STRATEGIES}")
    party_strategies = [list(itertools.product(range(o), repeat=s)) for s, o in zip(settings, outcomes)]
    strategies = list(itertools.product(*party_strategies))
    rows = [(A, a)
            for a in itertools.product(*(range(s) for s in settings))
            for A in itertools.product(*(range(o) for o in outcomes))]
    matrix = np.zeros((len(rows), len(strategies)))
    for j, strategy in enumerate(strategies):
        for i, (A, a) in enumerate(rows):
            if all(strategy[p][a[p]] == A[p] for p in range(len(settings))):
                matrix[i, j] = 1.0
    logger.debug(f"Incidence matrix {matrix.shape} for settings={settings} outcomes={outcomes}")
    return MarginalProblem(settings, outcomes, rows, strategies, matrix)


def chsh_problem(kind: str = "tsirelson") -> MarginalProblem:
    """
    Two-party, two-setting, two-outcome scenario with correlations
    P(A, B | a, b) = (1 + (-1)^(A xor B) E(a, b)) / 4.

    Args:
        kind: "tsirelson" (E = +-1/sqrt(2), CHSH value 2 sqrt(2)) or "local"
            (a mixture of deterministic strategies at the local bound)

    Returns:
        MarginalProblem with probabilities
    """
    problem = build_incidence((2, 2), (2, 2))
    if kind == "tsirelson":
        e = 1.0 / math.sqrt(2.0)
        corr = {(0, 0): e, (0, 1): e, (1, 0): e, (1, 1): -e}
        p = [(1.0 + (-1) ** (A[0] ^ A[1]) * corr[a]) / 4.0 for A, a in problem.rows]
    elif kind == "local":
        # equal mixture of "always 0" and "always 1"
        weights = np.zeros(problem.num_strategies)
        weights[0] = weights[-1] = 0.5
        p = problem.matrix @ weights
    else:
        raise ValueError(f"unknown CHSH correlations {kind!r}")
    return problem.with_probabilities(p)


def chsh_functional(problem: Optional[MarginalProblem] = None) -> np.ndarray:
    """CHSH test function (-1)^(A xor B) with a minus sign at settings (1, 1), ordered like the rows."""
    problem = problem or build_incidence((2, 2), (2, 2))
    return np.array([(-1) ** (A[0] ^ A[1]) * (-1 if a == (1, 1) else 1) for A, a in problem.rows], dtype=float)


def local_bound(problem: MarginalProblem, lam: Sequence[float]) -> float:
    """Maximum of lambda^T M W over the probability simplex of strategy mixtures W."""
    objective = -(np.asarray(lam, dtype=float) @ problem.matrix)
    n = problem.num_strategies
    res = linprog(objective, A_eq=np.ones((1, n)), b_eq=[1.0], bounds=(0, None), method="highs")
    if res.status != 0:
        raise LPFormulationError(f"local bound LP failed: {res.message}")
    return float(-res.fun)


@dataclass
class PhaseSpaceLP:
    """Discretized phase-space Born rule: kernel[(A, a), alpha] = Pi(A|a; alpha; -s) * cell weight."""

    state: QuantumState
    model: PovmModel
    s: float
    grid: GridSpec
    alphas: np.ndarray
    weights: np.ndarray
    rows: List[Tuple[Any, int]]
    kernel: np.ndarray
    probabilities: np.ndarray
    bins: Optional[np.ndarray] = None

    @property
    def matrix(self) -> np.ndarray:
        return self.kernel

    def symbol_matrix(self, alphas) -> np.ndarray:
        """Unweighted symbol values, rows x len(alphas)."""
        return _symbol_rows(self.model, self.rows, self.s, np.atleast_1d(np.asarray(alphas, dtype=complex)),
                            self.bins)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "phase-space",
            "state": self.state.to_dict(),
            "povm": self.model.to_dict(),
            "s": self.s,
            "grid": self.grid.to_dict(),
            "shape": list(self.kernel.shape),
            "rows": [{"outcome": o, "setting": a} for o, a in self.rows],
            "bins": None if self.bins is None else self.bins.tolist(),
            "probabilities": self.probabilities.tolist(),
        }


LPProblem = Union[MarginalProblem, PhaseSpaceLP]


def _bin_edges(bins: Optional[Dict[str, Any]]) -> np.ndarray:
    layout = dict(DEFAULT_BINS)
    layout.update(bins or {})
    count, limit = int(layout["count"]), float(layout["limit"])
    if count < 1 or not limit > 0:
        raise ValueError(f"quadrature bins need count >= 1 and limit > 0, got {layout}")
    return np.concatenate(([-np.inf], np.linspace(-limit, limit, count + 1), [np.inf]))


def _symbol_rows(model: PovmModel, rows: List[Tuple[Any, int]], s: float, alphas: np.ndarray,
                 edges: Optional[np.ndarray]) -> np.ndarray:
    out = np.zeros((len(rows), alphas.size))
    settings = model.settings()
    if model.scheme == Scheme.BHD:
        for i, (b, a) in enumerate(rows):
            phi = settings[a]
            x0 = math.sqrt(2.0) * (alphas * np.exp(-1j * phi)).real
            lo, hi = edges[b], edges[b + 1]
            if s == 0:
                out[i] = ((x0 >= lo) & (x0 < hi)).astype(float)
            else:
                width = math.sqrt(s / 2.0)
                out[i] = stats.norm.cdf((hi - x0) / width) - stats.norm.cdf((lo - x0) / width)
        return out
    if model.scheme == Scheme.PNR:
        for i, (n, _) in enumerate(rows[:-1]):
            out[i] = symbol(model, n, None, alphas, s)
        out[-1] = 1.0 - out[:-1].sum(axis=0)
        out[-1, np.abs(out[-1]) < 1e-15] = 0.0
        return out
    for i, (n, a) in enumerate(rows):
        out[i] = symbol(model, n, settings[a], alphas, s)
    return out


def build_phase_space_lp(state: QuantumState, model: PovmModel, s: Optional[float] = None,
                         grid: Optional[GridSpec] = None,
                         bins: Optional[Dict[str, Any]] = None) -> PhaseSpaceLP:
    """
    Discretize the phase-space Born rule of a state and scheme on the grid disk.

    PNR outcomes end with an aggregated ">= cutoff" row; homodyne outcomes are
    binned on [-limit, limit] with two tail bins.

    Args:
        state: Catalog state providing the probability vector
        model: Finite or binnable scheme (not eight-port homodyne)
        s: Ordering, s_th <= s <= 1 (defaults to the model's s, else s_th)
        grid: Phase-space grid; cell weights by the midpoint rule
        bins: {"count", "limit"} for homodyne binning

    Returns:
        PhaseSpaceLP
    """
    if model.scheme == Scheme.EPHD:
        raise LPFormulationError("eight-port homodyne outcomes are not discretized; use the closed-form witness")
    grid = grid or GridSpec()
    if s is None:
        s = model.s if model.s is not None else model.s_th
    s = float(s)
    if s < model.s_th or s > 1:
        raise RepresentationError(f"{model.label} kernel is not non-negative at s={s}", largest_regular_s=model.s_th)
    alphas = grid.disk_points()
    weights = np.full(alphas.size, grid.spacing ** 2)
    edges = None
    settings = model.settings()
    if model.scheme == Scheme.PNR:
        probs = pnr_distribution(state, model.cutoff)
        rows = [(n, 0) for n in range(model.cutoff + 1)]
        p = np.append(probs[:-1], max(0.0, 1.0 - float(np.sum(probs[:-1]))))
    elif model.scheme in PHOTOCOUNTING:
        p = photocount_dist(state, model)
        rows = [(n, 0) for n in range(len(p))]
    elif model.scheme == Scheme.UHD:
        rows, values = [], []
        for a, gamma in enumerate(settings):
            no_click = born_probability(state, model, 0, gamma, route="closed")
            rows += [(0, a), (1, a)]
            values += [no_click, 1.0 - no_click]
        p = np.array(values)
    else:
        edges = _bin_edges(bins)
        rows, values = [], []
        for a, phi in enumerate(settings):
            for b in range(len(edges) - 1):
                rows.append((b, a))
                values.append(quadrature_1d(lambda x, phi=phi: quadrature_dist(state, x, phi),
                                            edges[b], edges[b + 1]))
        p = np.array(values)
    kernel = _symbol_rows(model, rows, s, alphas, edges) * weights[None, :]
    logger.info(f"Phase-space LP for {state.label} / {model.label} at s={s}: "
                f"{len(rows)} rows x {alphas.size} grid points")
    return PhaseSpaceLP(state, model, s, grid, alphas, weights, rows, kernel, np.asarray(p, dtype=float), edges)


@dataclass
class FeasibilityResult:
    """Primal feasibility outcome with either a mixture or a Farkas certificate."""

    status: str
    residual: float
    weights: Optional[np.ndarray] = None
    certificate: Optional[np.ndarray] = None
    extra_points: List[complex] = field(default_factory=list)
    gap: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "residual": self.residual,
            "certificate": None if self.certificate is None else self.certificate.tolist(),
            "extra_points": [complex_to_json(a) for a in self.extra_points],
            "gap": self.gap,
        }


def _l1_residual(M: np.ndarray, P: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    r, n = M.shape
    eye = np.eye(r)
    c = np.concatenate((np.zeros(n), np.ones(2 * r)))
    res = linprog(c, A_eq=np.hstack((M, eye, -eye)), b_eq=P, bounds=(0, None), method="highs")
    if res.status != 0:
        raise LPFormulationError(f"feasibility LP failed: {res.message}")
    return float(res.fun), res.x[:n], np.asarray(res.eqlin.marginals, dtype=float)


def primal_feasible(problem: LPProblem, tolerance: Optional[float] = None, rounds: int = 5) -> FeasibilityResult:
    """
    Search a non-negative W with M W = P through the L1 residual LP
    min sum(u + v) s.t. M W + u - v = P, W, u, v >= 0.

    For phase-space problems a positive grid residual is not yet a proof: the
    equality duals lambda are checked against the continuous supremum of
    lambda^T S(alpha). Infeasibility is reported only when lambda^T P exceeds
    that supremum; otherwise the maximizing points (and the state's own
    centers) are added as columns and the LP is re-solved.

    Args:
        problem: MarginalProblem with probabilities or PhaseSpaceLP
        tolerance: Residual accepted as feasible; infeasible needs 10x it
        rounds: Maximum column-generation rounds for phase-space problems

    Returns:
        FeasibilityResult; infeasible results carry the equality duals as a
        certificate lambda with lambda^T P > 0 >= lambda^T M
    """
    tolerance = tolerance if tolerance is not None else config.LP_TOLERANCE
    if problem.probabilities is None:
        raise ValueError("problem has no probability vector")
    M = problem.matrix
    P = problem.probabilities
    residual, weights, certificate = _l1_residual(M, P)
    if residual <= tolerance:
        logger.info(f"Primal feasible, residual {residual:.3e}")
        return FeasibilityResult("feasible", residual, weights=weights)
    if isinstance(problem, MarginalProblem):
        if residual >= 10.0 * tolerance:
            logger.info(f"Primal infeasible, residual {residual:.3e}")
            return FeasibilityResult("infeasible", residual, certificate=certificate, gap=residual)
        logger.warning(f"Feasibility inconclusive at tolerance {tolerance:.1e}: residual {residual:.3e}")
        return FeasibilityResult("inconclusive", residual, certificate=certificate)

    extra: List[complex] = []
    gap = None
    for done in range(rounds + 1):
        found = supremum_over_plane(lambda a: certificate @ problem.symbol_matrix(a), problem.grid,
                                    warn_boundary=False, seeds=problem.state.centers)
        gap = float(certificate @ P) - found.value
        if gap >= 10.0 * tolerance:
            logger.info(f"Primal infeasible, residual {residual:.3e}, continuous gap {gap:.3e}")
            return FeasibilityResult("infeasible", residual, certificate=certificate, extra_points=extra, gap=gap)
        if done == rounds:
            break
        new = [complex(a) for a in found.argmax]
        if done == 0:
            new += [complex(c) for c in problem.state.centers]
        new = [a for a in new if abs(a) <= problem.grid.radius and all(abs(a - b) > 1e-12 for b in extra)]
        if not new:
            break
        extra += new
        logger.info(f"Column round {done + 1}: grid residual {residual:.3e} not certified "
                    f"(gap {gap:.3e}); adding {len(new)} off-grid points")
        M = np.hstack((M, problem.symbol_matrix(np.array(new))))
        residual, weights, certificate = _l1_residual(M, P)
        if residual <= tolerance:
            logger.info(f"Primal feasible after {done + 1} column rounds, residual {residual:.3e}")
            return FeasibilityResult("feasible", residual, weights=weights, extra_points=extra)
    logger.warning(f"Feasibility inconclusive at tolerance {tolerance:.1e}: residual {residual:.3e}, "
                   f"continuous gap {gap:.3e}")
    return FeasibilityResult("inconclusive", residual, certificate=certificate, extra_points=extra, gap=gap)


@dataclass
class DualCertificate:
    """Test function found by the dual LP with its left- and right-hand sides."""

    lam: np.ndarray
    rows: List[Any]
    lhs: float
    rhs: float
    rhs_grid: float
    gap: float
    valid: bool
    rounds: int = 0
    argmax: List[complex] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam.tolist(),
            "rows": [list(r) if isinstance(r, tuple) else r for r in self.rows],
            "lhs": self.lhs,
            "rhs": self.rhs,
            "rhs_grid": self.rhs_grid,
            "gap": self.gap,
            "valid": self.valid,
            "rounds": self.rounds,
            "argmax": [complex_to_json(a) for a in self.argmax],
        }


def _solve_dual(symbols: np.ndarray, P: np.ndarray) -> Tuple[np.ndarray, float]:
    # variables (lambda, t): minimize t - lambda^T P s.t. lambda^T S_j - t <= 0
    r, n = symbols.shape
    c = np.append(-P, 1.0)
    A_ub = np.hstack((symbols.T, -np.ones((n, 1))))
    bounds = [(-1.0, 1.0)] * r + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), bounds=bounds, method="highs")
    if res.status != 0:
        raise LPFormulationError(f"dual LP failed: {res.message}")
    return res.x[:r], float(res.x[r])


def find_optimal_lambda(problem: LPProblem, tolerance: Optional[float] = None,
                        rounds: int = 5) -> DualCertificate:
    """
    Maximize lambda^T P - sup lambda^T S over box-normalized test functions.

    For phase-space problems the grid supremum is re-checked on the continuous
    plane; points where it is exceeded are added as cutting planes and the LP is
    re-solved, up to the given number of rounds.

    Args:
        problem: MarginalProblem with probabilities or PhaseSpaceLP
        tolerance: Accepted excess of the continuous supremum over the grid bound
        rounds: Maximum cutting-plane rounds

    Returns:
        DualCertificate; valid when the continuous gap is positive
    """
    tolerance = tolerance if tolerance is not None else config.LP_TOLERANCE
    P = problem.probabilities
    if isinstance(problem, MarginalProblem):
        lam, t = _solve_dual(problem.matrix, P)
        lhs = float(lam @ P)
        rhs = float(np.max(lam @ problem.matrix))
        gap = lhs - rhs
        return DualCertificate(lam, list(problem.rows), lhs, rhs, t, gap, gap > tolerance)
    symbols = problem.kernel / problem.weights[None, :]
    done = 0
    argmax: List[complex] = []
    while True:
        lam, t = _solve_dual(symbols, P)
        found = supremum_over_plane(lambda a: lam @ problem.symbol_matrix(a), problem.grid, warn_boundary=False,
                                    seeds=problem.state.centers)
        argmax = found.argmax
        if found.value <= t + tolerance or done >= rounds:
            break
        done += 1
        logger.info(f"Cutting-plane round {done}: continuous sup {found.value:.6g} > grid bound {t:.6g}")
        symbols = np.hstack((symbols, problem.symbol_matrix(np.array(found.argmax))))
    if found.value > t + tolerance:
        logger.warning(f"Cutting planes did not converge after {rounds} rounds: "
                       f"continuous sup {found.value:.6g} vs grid bound {t:.6g}")
    lhs = float(lam @ P)
    rhs = max(found.value, t)
    gap = lhs - rhs
    logger.info(f"Dual certificate for {problem.state.label} / {problem.model.label}: "
                f"lhs={lhs:.6g} rhs={rhs:.6g} gap={gap:.3e}")
    return DualCertificate(lam, list(problem.rows), lhs, rhs, t, gap, gap > tolerance, done, argmax)


def dump_matrix_csv(problem: LPProblem, path: str) -> str:
    """Write the constraint matrix as dense CSV, one line per row label."""
    if isinstance(problem, MarginalProblem):
        columns = [f"w{j}" for j in range(problem.num_strategies)]
        labels = [f"A={A} a={a}" for A, a in problem.rows]
    else:
        columns = [f"{z.real:.6g}{z.imag:+.6g}j" for z in problem.alphas]
        labels = [f"A={o} a={a}" for o, a in problem.rows]
    rows = [dict(zip(["row"] + columns, [label] + list(values))) for label, values in zip(labels, problem.matrix)]
    return write_csv(path, rows, ["row"] + columns)
