"""Master-side optimization loop: directions, stragglers, estimates, updates."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .codec import ErasedOutputs, make_direction_set
from .construction import CodeConfig
from .estimators import (
    DEFAULT_DELTA,
    GradientEstimate,
    antithetic_outputs,
    coded_gradient,
    es_gradient,
    fd_from_outputs,
)
from .straggler import RuntimeDistribution, StoppingRule, run_iteration, sample_runtimes

METHODS = ("fd", "es", "coded", "hybrid")
DEFAULT_STEP = {"gd": 0.5, "adam": 0.01}

# Independent random streams drawn per (seed, iteration).
_SIGN_STREAM = 0
_RUNTIME_STREAM = 1


@dataclass(frozen=True)
class OptimizerState:
    theta: np.ndarray
    step_size: float
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    method: str = "coded"

    @classmethod
    def initial(cls, theta, step_size, method="coded", **adam):
        theta = np.array(theta, dtype=float)
        return cls(theta=theta, step_size=float(step_size), m=np.zeros_like(theta),
                   v=np.zeros_like(theta), method=method, **adam)


@dataclass(frozen=True)
class IterationTrace:
    iteration: int
    cost: float
    elapsed_time: float
    n_outputs_used: int
    decoded: bool
    delta: float
    method: str


def _grad_values(g):
    return g.values if isinstance(g, GradientEstimate) else np.asarray(g, dtype=float)


def gd_step(state: OptimizerState, g) -> OptimizerState:
    return replace(state, theta=state.theta - state.step_size * _grad_values(g))


def adam_step(state: OptimizerState, g) -> OptimizerState:
    g = _grad_values(g)
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    theta = state.theta - state.step_size * m_hat / (np.sqrt(v_hat) + state.eps_adam)
    return replace(state, theta=theta, m=m, v=v, t=t)


STEPS = {"gd": gd_step, "adam": adam_step}


def hybrid_step(objective, state: OptimizerState, coded_est, es_est, step=gd_step):
    """Take both candidate steps, query ``objective`` at each, keep the lower.

    Returns ``(state, estimate, (coded_cost, es_cost))``.  Ties go to the
    coded step.  Costs two counted evaluations.
    """
    coded_state = step(state, coded_est)
    es_state = step(state, es_est)
    coded_cost = float(objective(coded_state.theta))
    es_cost = float(objective(es_state.theta))
    if coded_cost <= es_cost:
        return coded_state, coded_est, (coded_cost, es_cost)
    return es_state, es_est, (coded_cost, es_cost)


def run_experiment(
    objective,
    method: str,
    config: CodeConfig | None,
    rule: StoppingRule,
    dist: RuntimeDistribution,
    iterations: int,
    seed: int,
    *,
    delta: float = DEFAULT_DELTA,
    optimizer: str = "gd",
    step_size: float | None = None,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps_adam: float = 1e-8,
    theta_init=None,
    freeze_diag: bool = False,
    decode_cost: float = 0.0,
    callback=None,
) -> list[IterationTrace]:
    """Run ``iterations`` distributed steps and return one trace row per step.

    ``fd`` uses one worker per coordinate (identity assignment) and ignores
    ``config``; the other methods use the ``N`` encoded directions of
    ``config``.  Coded and hybrid steps keep waiting past ``rule`` until the
    admitted outputs are decodable.  The hybrid step takes both the decoded
    and the ES step, queries the objective at each candidate (two extra
    evaluations) and keeps the lower one.  Trace costs come from
    ``objective.value`` and are not counted as queries.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if optimizer not in STEPS:
        raise ValueError(f"unknown optimizer {optimizer!r}")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    d = objective.dim
    if method != "fd":
        if config is None:
            raise ValueError(f"method {method!r} needs a code configuration")
        if config.n_params != d:
            raise ValueError(f"code dimension {config.n_params} != objective dimension {d}")
    if method == "fd" and rule.kind == "first_decodable":
        # d uncoded workers: nothing is redundant, so decodable means all arrived
        rule = StoppingRule.all()

    step = STEPS[optimizer]
    if step_size is None:
        step_size = DEFAULT_STEP[optimizer]
    theta = np.zeros(d) if theta_init is None else np.asarray(theta_init, dtype=float)
    state = OptimizerState.initial(theta, step_size, method=method, beta1=beta1, beta2=beta2, eps_adam=eps_adam)

    fixed_signs = np.ones(d) if freeze_diag else None
    decodes = method in ("coded", "hybrid")
    elapsed = 0.0
    traces = []
    for it in range(1, iterations + 1):
        if method == "fd":
            directions = np.eye(d)
            dirset = None
        else:
            signs = fixed_signs
            if signs is None:
                signs = np.random.default_rng([seed, it, _SIGN_STREAM]).choice([-1.0, 1.0], size=d)
            dirset = make_direction_set(config, signs)
            directions = dirset.directions

        outputs = antithetic_outputs(objective, state.theta, directions, delta)
        schedule = sample_runtimes(dist, directions.shape[0], np.random.default_rng([seed, it, _RUNTIME_STREAM]))
        erased, stop_time = run_iteration(schedule, rule, outputs, min_decodable=config if decodes else None)
        elapsed += stop_time + (decode_cost if decodes else 0.0)

        if method == "fd":
            estimate = fd_from_outputs(erased)
            state = step(state, estimate)
        elif method == "es":
            estimate = es_gradient(erased.values, directions, erased.available)
            state = step(state, estimate)
        elif method == "coded":
            estimate = coded_gradient(config, dirset, erased)
            state = step(state, estimate)
        else:
            coded_est = coded_gradient(config, dirset, erased)
            es_est = es_gradient(erased.values, directions, erased.available)
            state, estimate, _ = hybrid_step(objective, state, coded_est, es_est, step)

        trace = IterationTrace(
            iteration=it,
            cost=objective.value(state.theta),
            elapsed_time=elapsed,
            n_outputs_used=estimate.n_outputs_used,
            decoded=estimate.decoded,
            delta=float(delta),
            method=method,
        )
        traces.append(trace)
        if callback is not None:
            callback(it, state, trace)
    return traces
