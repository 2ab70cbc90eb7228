"""Logical options: compile temporal-logic tasks to finite state automata,
learn one low-level option per subgoal, and plan over the product by value
iteration so that learned options transfer across tasks without retraining.
"""

from .automata import (
    DELIVERY_PARTITION,
    Edge,
    Fsa,
    PropositionPartition,
    SafetyAutomaton,
    fsa_from_json,
    fsa_isomorphic,
    fsa_to_json,
    hand_coded_task_fsas,
    load_fsa,
    save_fsa,
    trivial_safety_automaton,
    validate_fsa,
)
from .baselines import (
    FlatOptionsConfig,
    FlatOptionsPolicy,
    QrmConfig,
    QrmModel,
    QrmTrainer,
    train_flat_options,
    train_qrm,
)
from .gridworld import EnvironmentMdp, GridMap, load_map, make_env
from .harness import ExperimentConfig, run_composability, run_oracle_suite, run_satisfaction
from .options import (
    LogicalOption,
    OptionTrainConfig,
    OptionTrainer,
    evaluate_option_models,
    load_options,
    optimal_option,
    save_options,
    train_all_options,
    train_option,
    train_option_general,
    verify_option,
)
from .planner import (
    EventModel,
    LofQlTrainer,
    MetaPolicy,
    MetaQlConfig,
    PlannerConfig,
    greedy_metapolicy,
    hmdp_value_iteration,
    lof_q_learning,
    logical_value_iteration,
    logical_value_iteration_general,
)
from .runtime import (
    EpisodeReturn,
    Trace,
    check_satisfaction,
    normalize_return,
    rollout,
    task_bounds,
)
from .ltl import (
    accepts,
    check_cosafe,
    check_liveness,
    format_formula,
    parse_ltl,
    progress,
    simplify,
    split_spec,
)
from .translate import StateExplosionError, TranslationError, translate_cosafe_to_fsa

__version__ = "0.1.0"
