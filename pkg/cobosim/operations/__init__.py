"""Training rounds, run driver and the experiment operations behind the CLI."""

from .rounds import (
    TrainerState,
    cobo_round,
    ditto_round,
    fedavg_round,
    finetune_fedavg,
    ifca_assign,
    ifca_round,
    initial_state,
    local_round,
    model_step,
    oracle_round,
    outer_objective,
)
from .runner import RunResult, build_tasks, run_algorithms, run_experiment, select_output_round
from .compare import compare_algorithms, print_comparison, summarize
from .verify import compliant_train_config, print_theory_report, verify_theory
from .inspect import inspect_task, print_inspection

__all__ = [
    'TrainerState',
    'cobo_round',
    'ditto_round',
    'fedavg_round',
    'finetune_fedavg',
    'ifca_assign',
    'ifca_round',
    'initial_state',
    'local_round',
    'model_step',
    'oracle_round',
    'outer_objective',
    'RunResult',
    'build_tasks',
    'run_algorithms',
    'run_experiment',
    'select_output_round',
    'compare_algorithms',
    'print_comparison',
    'summarize',
    'compliant_train_config',
    'print_theory_report',
    'verify_theory',
    'inspect_task',
    'print_inspection',
]
