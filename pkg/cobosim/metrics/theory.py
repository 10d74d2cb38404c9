"""Collaborativeness constants and the convergence bounds for clustered quadratics.

For each ground-truth cluster C of size c the bounds use

    L = max_i a_i
    M = max_{i != j in C} |a_i - a_j| / (a_i + a_j)
    S = sum_{i, j in C} (ft_ij(x0) - min ft_ij),  ft_ij = (f_i + f_j) / 2
    B = sqrt(L sigma^2 S / (c^2 T))

and report two right-hand-side families: the rate form (consensus
6 M^2 B / (rho^2 c^2), pair gradient norm 3 B, client gradient norm 4 B) and
the explicit form evaluated at the configured step size, which also carries
the per-step noise term of the consensus recursion. Runs pass or fail on the
rate form; the explicit form is reported alongside it.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations, product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config.manager import TrainConfig
from ..errors import ConstantsUnavailableError
from ..tasks.base import Task
from ..tasks.layout import ClusterLayout
from ..tasks.quadratic import QuadraticTask
from ..tools.rng import substream
from .measures import MetricsRecord

logger = logging.getLogger(__name__)

M_SQUARED_LIMIT = 0.2
EMPIRICAL_POINTS = 100
DENOMINATOR_FLOOR = 1e-12
BOUND_TOLERANCE = 1e-6


@dataclass(frozen=True)
class PairConstants:
    """Constants of one unordered client pair; same-cluster pairs carry M, cross-cluster pairs zeta."""

    i: int
    j: int
    same_cluster: bool
    m_analytic: Optional[float] = None
    m_empirical: Optional[float] = None
    zeta_numeric: Optional[float] = None
    zeta_squared_denominator: Optional[float] = None


@dataclass(frozen=True)
class Condition:
    name: str
    satisfied: bool
    detail: str
    gating: bool = True


@dataclass
class ClusterBound:
    """Bound right-hand sides for one cluster, with the measured averages once a run exists."""

    cluster: int
    size: int
    L: float
    M: float
    S: float
    sigma: float
    consensus_bound_rhs: float
    gradnorm_bound_rhs: float
    corollary_rhs: float
    consensus_explicit_rhs: float
    gradnorm_explicit_rhs: float
    corollary_explicit_rhs: float
    eta_cap: float
    batch_floor: float
    measured_consensus: Optional[float] = None
    measured_gradnorm: Optional[float] = None
    measured_corollary: Optional[float] = None

    def holds(self) -> bool:
        """Measured averages within the rate-form bounds (False before measurement)."""
        if self.measured_consensus is None:
            return False
        return (
            self.measured_consensus <= self.consensus_bound_rhs + BOUND_TOLERANCE
            and self.measured_gradnorm <= self.gradnorm_bound_rhs + BOUND_TOLERANCE
            and self.measured_corollary <= self.corollary_rhs + BOUND_TOLERANCE
        )

    def explicit_holds(self) -> bool:
        if self.measured_consensus is None:
            return False
        return (
            self.measured_consensus <= self.consensus_explicit_rhs
            and self.measured_gradnorm <= self.gradnorm_explicit_rhs
            and self.measured_corollary <= self.corollary_explicit_rhs
        )


@dataclass
class TheoryReport:
    """Conditions, bound right-hand sides and measured left-hand sides.

    The top-level rhs/lhs fields are maxima over clusters.
    """

    T: int
    rho: float
    eta: float
    b: int
    conditions: List[Condition]
    clusters: List[ClusterBound]
    consensus_bound_rhs: float
    gradnorm_bound_rhs: float
    corollary_rhs: float
    measured_lhs: Dict[str, Optional[float]] = field(default_factory=dict)

    @property
    def conditions_hold(self) -> bool:
        return all(c.satisfied for c in self.conditions if c.gating)

    @property
    def bounds_hold(self) -> bool:
        return all(cluster.holds() for cluster in self.clusters)

    @property
    def explicit_bounds_hold(self) -> bool:
        return all(cluster.explicit_holds() for cluster in self.clusters)

    @property
    def passed(self) -> bool:
        return self.conditions_hold and self.bounds_hold

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["conditions_hold"] = self.conditions_hold
        data["bounds_hold"] = self.bounds_hold
        data["explicit_bounds_hold"] = self.explicit_bounds_hold
        data["passed"] = self.passed
        return data


def require_quadratics(tasks: Sequence[Task]) -> Sequence[QuadraticTask]:
    if not tasks or not all(isinstance(task, QuadraticTask) for task in tasks):
        raise ConstantsUnavailableError("closed-form constants are only available for quadratic tasks")
    return tasks


def m_analytic(a_i: float, a_j: float) -> float:
    return abs(a_i - a_j) / (a_i + a_j)


def m_empirical(task_i: QuadraticTask, task_j: QuadraticTask, seed: int = 0,
                n_points: int = EMPIRICAL_POINTS) -> float:
    """max ||grad f_i - grad f_j|| / ||grad f_i + grad f_j|| over seeded random points.

    Points where the denominator falls below 1e-12 are skipped; 0 if all are.
    """
    rng = substream(seed, "constants")
    scale = 1.0 + max(np.linalg.norm(task_i.mu), np.linalg.norm(task_j.mu))
    best = 0.0
    for x in rng.normal(0.0, scale, size=(n_points, task_i.dim)):
        g_i, g_j = task_i.grad(x), task_j.grad(x)
        denom = np.linalg.norm(g_i + g_j)
        if denom < DENOMINATOR_FLOOR:
            continue
        best = max(best, float(np.linalg.norm(g_i - g_j) / denom))
    return best


def zeta_numeric(task_i: QuadraticTask, task_j: QuadraticTask) -> float:
    """min_x ||grad f_i(x)||^2 + ||grad f_j(x)||^2, attained at the a^2-weighted center."""
    wi, wj = task_i.a ** 2, task_j.a ** 2
    x_star = (wi * task_i.mu + wj * task_j.mu) / (wi + wj)
    g_i, g_j = task_i.grad(x_star), task_j.grad(x_star)
    return float(np.dot(g_i, g_i) + np.dot(g_j, g_j))


def zeta_squared_denominator(task_i: QuadraticTask, task_j: QuadraticTask) -> float:
    """a_i^2 a_j^2 / (a_i^2 + a_j^2)^2 * ||mu_i - mu_j||^2; kept next to zeta_numeric for comparison."""
    wi, wj = task_i.a ** 2, task_j.a ** 2
    diff = task_i.mu - task_j.mu
    return wi * wj / (wi + wj) ** 2 * float(np.dot(diff, diff))


def collaborativeness_constants(tasks: Sequence[Task], layout: ClusterLayout,
                                seed: int = 0) -> Dict[Tuple[int, int], PairConstants]:
    """Per-pair constants keyed by (i, j), i < j.

    Raises:
        ConstantsUnavailableError: For non-quadratic tasks
    """
    tasks = require_quadratics(tasks)
    constants = {}
    for i, j in combinations(range(len(tasks)), 2):
        if layout.same_cluster(i, j):
            constants[(i, j)] = PairConstants(
                i, j, True,
                m_analytic=m_analytic(tasks[i].a, tasks[j].a),
                m_empirical=m_empirical(tasks[i], tasks[j], seed),
            )
        else:
            constants[(i, j)] = PairConstants(
                i, j, False,
                zeta_numeric=zeta_numeric(tasks[i], tasks[j]),
                zeta_squared_denominator=zeta_squared_denominator(tasks[i], tasks[j]),
            )
    return constants


def pair_optimality_gap(task_i: QuadraticTask, task_j: QuadraticTask, x0: np.ndarray) -> float:
    """ft_ij(x0) - min ft_ij for ft_ij = (f_i + f_j)/2; the minimizer is (a_i mu_i + a_j mu_j)/(a_i + a_j)."""
    x_star = (task_i.a * task_i.mu + task_j.a * task_j.mu) / (task_i.a + task_j.a)

    def averaged(x):
        return 0.5 * (task_i.loss(x) + task_j.loss(x))

    return averaged(x0) - averaged(x_star)


def cluster_constants(tasks: Sequence[QuadraticTask], members: Sequence[int], x0: np.ndarray) -> Dict[str, float]:
    """L, M and S of one cluster (S sums over ordered pairs including i = j)."""
    L = max(task.a for task in tasks)
    M = max((m_analytic(tasks[i].a, tasks[j].a) for i, j in combinations(members, 2)), default=0.0)
    S = sum(pair_optimality_gap(tasks[i], tasks[j], x0) for i, j in product(members, repeat=2))
    return {"L": L, "M": M, "S": S}


def eta_cap(L: float, sigma: float, S: float, c: int, T: int) -> float:
    """min{2 / (sigma sqrt(L T)) * sqrt(S / c^2), 1 / (2 sqrt(3) L)}."""
    stability = 1.0 / (2.0 * math.sqrt(3.0) * L)
    if sigma == 0 or T == 0:
        return stability
    return min(2.0 / (sigma * math.sqrt(L * T)) * math.sqrt(S / c ** 2), stability)


def batch_floor(L: float, sigma: float, eta: float, c: int) -> float:
    """(2 / c^2) * 2 L eta (c - 2) sigma^2; the batch size must not fall below it."""
    return (2.0 / c ** 2) * 2.0 * L * eta * (c - 2) * sigma ** 2


def rho_floor(L: float, c: int) -> float:
    return math.sqrt(3.0) * L / c


def _cluster_bound(k: int, members: Sequence[int], tasks: Sequence[QuadraticTask],
                   cfg: TrainConfig, x0: np.ndarray, T: int) -> ClusterBound:
    consts = cluster_constants(tasks, members, x0)
    L, M, S = consts["L"], consts["M"], consts["S"]
    c = len(members)
    sigma = max(tasks[i].noise_sigma for i in members)
    eta, rho, b = cfg.eta, cfg.rho, cfg.b
    steps = max(T, 1)

    B = math.sqrt(L * sigma ** 2 * S / (c ** 2 * steps))
    consensus_rate = 6.0 * M ** 2 / (rho ** 2 * c ** 2) * B if rho > 0 else math.inf
    gradnorm_rate = 3.0 * B
    corollary_rate = 4.0 * B

    if rho > 0 and eta > 0:
        consensus_explicit = (
            (6.0 * M ** 2 * S / (eta * rho ** 2 * c ** 2 * steps) + 3.0 * M ** 2 * L * eta * sigma ** 2 / (2.0 * rho ** 2)) / c ** 2
            + 2.0 * (c - 1) * eta * sigma ** 2 / (b * rho * c ** 2)
        )
        gradnorm_explicit = (
            2.0 * S / (eta * steps) / c ** 2
            + L * eta * sigma ** 2 / 2.0
            + 4.0 * c ** 2 * rho ** 2 * consensus_explicit
        )
    else:
        consensus_explicit = gradnorm_explicit = math.inf
    corollary_explicit = 2.0 * (1.0 + M ** 2) * gradnorm_explicit + 0.5 * L ** 2 * consensus_explicit

    return ClusterBound(
        cluster=k, size=c, L=L, M=M, S=S, sigma=sigma,
        consensus_bound_rhs=consensus_rate,
        gradnorm_bound_rhs=gradnorm_rate,
        corollary_rhs=corollary_rate,
        consensus_explicit_rhs=consensus_explicit,
        gradnorm_explicit_rhs=gradnorm_explicit,
        corollary_explicit_rhs=corollary_explicit,
        eta_cap=eta_cap(L, sigma, S, c, T),
        batch_floor=batch_floor(L, sigma, eta, c),
    )


def _conditions(bounds: List[ClusterBound], cfg: TrainConfig) -> List[Condition]:
    worst_m = max(bounds, key=lambda cb: cb.M)
    rho_needed = max(rho_floor(cb.L, cb.size) for cb in bounds)
    cap = min(cb.eta_cap for cb in bounds)
    floor = max(cb.batch_floor for cb in bounds)
    return [
        Condition(
            "M^2 < 1/5", worst_m.M ** 2 < M_SQUARED_LIMIT,
            f"M = max same-cluster |a_i - a_j|/(a_i + a_j) = {worst_m.M:.4g} (cluster {worst_m.cluster}), "
            f"M^2 = {worst_m.M ** 2:.4g}",
        ),
        Condition("rho >= sqrt(3) L / c", cfg.rho >= rho_needed - 1e-12,
                  f"rho = {cfg.rho:.4g}, required {rho_needed:.4g}"),
        Condition("eta cap", cfg.eta <= cap * (1 + 1e-12), f"eta = {cfg.eta:.4g}, cap {cap:.4g}"),
        Condition("batch size", cfg.b >= floor, f"b = {cfg.b}, required {floor:.4g}"),
        Condition(
            "zeta^2 >= ||grad f_i + grad f_k||^2 for all x", False,
            "unbounded for quadratics, so never satisfied; reported only",
            gating=False,
        ),
    ]


def theorem_bounds(cfg: TrainConfig, tasks: Sequence[Task], layout: ClusterLayout, T: int,
                   x0: Optional[np.ndarray] = None) -> TheoryReport:
    """Evaluate conditions and right-hand sides from task constants and config only.

    Raises:
        ConstantsUnavailableError: For non-quadratic tasks
    """
    tasks = require_quadratics(tasks)
    if x0 is None:
        x0 = np.zeros(tasks[0].dim)
    bounds = [_cluster_bound(k, layout.members(k), tasks, cfg, x0, T) for k in range(layout.n_clusters)]
    conditions = _conditions(bounds, cfg)
    logger.warning("The zeta condition is unbounded for quadratic tasks and does not gate the bound check")
    for condition in conditions:
        if condition.gating and not condition.satisfied:
            logger.warning("Condition %s not satisfied: %s", condition.name, condition.detail)
    return TheoryReport(
        T=T, rho=cfg.rho, eta=cfg.eta, b=cfg.b,
        conditions=conditions,
        clusters=bounds,
        consensus_bound_rhs=max(cb.consensus_bound_rhs for cb in bounds),
        gradnorm_bound_rhs=max(cb.gradnorm_bound_rhs for cb in bounds),
        corollary_rhs=max(cb.corollary_rhs for cb in bounds),
    )


def measure_lhs(report: TheoryReport, records: Sequence[MetricsRecord], layout: ClusterLayout) -> TheoryReport:
    """Attach time-averaged measurements to ``report`` (in place) and return it.

    Consensus is averaged over rounds 1..T, gradient norms over rounds 0..T-1.
    """
    after = [r for r in records if r.round >= 1]
    before = [r for r in records if r.round < report.T] or list(records[:1])
    for cb in report.clusters:
        members = layout.members(cb.cluster)
        cb.measured_consensus = float(np.mean([r.per_cluster_consensus[cb.cluster] for r in after])) if after else 0.0
        cb.measured_gradnorm = float(np.mean([r.per_cluster_pair_grad_norm[cb.cluster] for r in before]))
        cb.measured_corollary = float(np.mean([
            np.mean([r.per_client_grad_norm_sq[i] for i in members]) for r in before
        ]))
    report.measured_lhs = {
        "consensus": max(cb.measured_consensus for cb in report.clusters),
        "gradnorm": max(cb.measured_gradnorm for cb in report.clusters),
        "corollary": max(cb.measured_corollary for cb in report.clusters),
    }
    return report
