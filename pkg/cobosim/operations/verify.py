"""Check a CoBo run against the convergence bounds at theorem-compliant settings."""

import logging
import math
from dataclasses import replace
from typing import Sequence, Tuple

from ..collab.matrix import Mode
from ..collab.sampling import SamplingStrategy
from ..config.manager import Algorithm, ExperimentConfig, TrainConfig
from ..metrics.theory import (
    BOUND_TOLERANCE,
    TheoryReport,
    batch_floor,
    cluster_constants,
    eta_cap,
    measure_lhs,
    rho_floor,
    theorem_bounds,
    require_quadratics,
)
from ..tasks.base import Task
from ..tasks.layout import ClusterLayout
from ..utils.formatting import format_metric
from .rounds import initial_model
from .runner import RunResult, build_tasks, run_experiment

logger = logging.getLogger(__name__)


def compliant_train_config(train: TrainConfig, tasks: Sequence[Task], layout: ClusterLayout) -> TrainConfig:
    """Derive rho, eta and b satisfying the bound conditions from the task constants.

    rho = sqrt(3) L / c_min, eta at its cap, b the smallest batch meeting the
    batch condition; sampling is every pair in Box mode with auto-scaled gamma.
    """
    tasks = require_quadratics(tasks)
    x0 = initial_model(tasks[0].dim, train)
    sigma = max(task.noise_sigma for task in tasks)
    clusters = []
    for k in range(layout.n_clusters):
        members = layout.members(k)
        consts = cluster_constants(tasks, members, x0)
        clusters.append((len(members), consts["L"], consts["S"]))

    rho = max(rho_floor(L, c) for c, L, _ in clusters)
    eta = min(eta_cap(L, sigma, S, c, train.T) for c, L, S in clusters)
    b = max(1, math.ceil(max(batch_floor(L, sigma, eta, c) for c, L, _ in clusters)))
    logger.info("Theorem-compliant settings: rho=%.4g eta=%.4g b=%d", rho, eta, b)
    return replace(
        train, rho=rho, eta=eta, b=b,
        strategy=SamplingStrategy(), mode=Mode.BOX, auto_gamma=True,
    )


def verify_theory(cfg: ExperimentConfig, progress: bool = False) -> Tuple[TheoryReport, RunResult]:
    """Run CoBo at compliant settings and compare measured averages with the bounds.

    Raises:
        ConstantsUnavailableError: For non-quadratic task configs
    """
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    train = compliant_train_config(cfg.train, tasks, layout)
    report = theorem_bounds(train, tasks, layout, train.T, initial_model(tasks[0].dim, train))
    result = run_experiment(Algorithm.COBO, tasks, layout, train, progress=progress)
    measure_lhs(report, result.records, layout)
    if report.passed:
        logger.info("All bounds hold")
    else:
        logger.warning("Bound check failed")
    return report, result


def print_theory_report(report: TheoryReport):
    """Print conditions and per-cluster bounds.

    Args:
        report: Report returned by verify_theory()
    """
    print("\n" + "=" * 78)
    print(f"📐 Theory Check (T={report.T}, rho={report.rho:.4g}, eta={report.eta:.4g}, b={report.b})")
    print("=" * 78)
    for condition in report.conditions:
        mark = "✅" if condition.satisfied else ("⚠️ " if not condition.gating else "❌")
        print(f"{mark} {condition.name}: {condition.detail}")
    print("-" * 78)
    print(f"{'Cluster':<8} {'Quantity':<12} {'Measured':<12} {'Rate form':<12} {'Explicit':<12} {'OK':<4}")
    print("-" * 78)
    for cb in report.clusters:
        rows = [
            ("consensus", cb.measured_consensus, cb.consensus_explicit_rhs, cb.consensus_bound_rhs),
            ("pair grad", cb.measured_gradnorm, cb.gradnorm_explicit_rhs, cb.gradnorm_bound_rhs),
            ("client grad", cb.measured_corollary, cb.corollary_explicit_rhs, cb.corollary_rhs),
        ]
        for name, measured, explicit, rate in rows:
            ok = measured is not None and measured <= rate + BOUND_TOLERANCE
            print(
                f"{cb.cluster:<8} {name:<12} {format_metric(measured):<12} "
                f"{format_metric(rate):<12} {format_metric(explicit):<12} {'✓' if ok else '✗':<4}"
            )
    print("=" * 78)
    print("✅ All bounds hold\n" if report.passed else "❌ Bound check failed\n")
