"""Straggler-resilient distributed black-box optimization with Hadamard-coded search directions."""
from .codec import (
    DirectionSet,
    ErasedOutputs,
    UndecodableError,
    check_decodability,
    decodable_batch,
    decode,
    encode,
    make_direction_set,
)
from .construction import CodeConfig, bec_channel_reliabilities, build_config
from .estimators import (
    GradientEstimate,
    Method,
    WorkerTask,
    coded_gradient,
    es_gradient,
    finite_difference_gradient,
    symmetric_directional_derivative,
)
from .objectives import (
    BlackBoxObjective,
    SyntheticClassifier,
    l1_objective,
    l2sq_objective,
    targeted_attack_objective,
    untargeted_attack_objective,
)
from .optimizer import IterationTrace, OptimizerState, adam_step, gd_step, hybrid_step, run_experiment
from .straggler import ArrivalSchedule, RuntimeDistribution, StoppingRule, run_iteration, sample_runtimes

__version__ = "0.1.0"
