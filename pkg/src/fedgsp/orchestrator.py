"""Round orchestration: group schedules, chained training, aggregation, baselines.

All four algorithms share one round implementation and differ only in two
knobs: where the round's group count comes from, and how groups are formed.

    fedgsp         growing group count f(r), clustered grouping
    naive_gsp_icg  fixed group count, clustered grouping
    naive_gsp      fixed group count, random balanced grouping
    fedavg         one group per client (chains of length 1)

Each round: regroup, sample a fraction kappa of the groups, seed every
sampled group's chain with the current global model, train the chain
client-by-client, and average the chain outputs (divided by the number of
sampled groups) into the next global model. Groups may train concurrently;
results are reduced in ascending group id, so scheduling never changes the
aggregate bit pattern.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .datagen import ClientDataset, SyntheticTaskSpec, TestSet, generate_task
from .errors import ConfigurationError
from .grouping import (
    GroupingPlan,
    inter_cluster_grouping,
    random_grouping,
    singleton_grouping,
)
from .metrics import CostModelParams
from .rng import generator, stream_id
from .trainer import ModelParams, ModelSpec, SgdConfig, evaluate, init_model, train_one_client

ALGORITHMS = ("fedgsp", "naive_gsp", "naive_gsp_icg", "fedavg")

GROWTH_LINEAR = "linear"
GROWTH_LOG = "log"
GROWTH_EXP = "exp"
GROWTH_KINDS = (GROWTH_LINEAR, GROWTH_LOG, GROWTH_EXP)

# Exponent threshold beyond which exp growth saturates instead of overflowing
# float64; callers cap results at the client count long before this matters.
_EXP_SATURATION = 700.0
GROWTH_CAP = 2**62

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class GrowthFunction:
    """Group-count schedule f(r); alpha sets the growth rate, beta the scale."""

    kind: str
    alpha: float
    beta: int

    def __post_init__(self) -> None:
        if self.kind not in GROWTH_KINDS:
            raise ConfigurationError(f"unknown growth kind {self.kind!r}")
        if not self.alpha > 0.0:
            raise ConfigurationError(f"alpha must be > 0, got {self.alpha}")
        if self.beta < 1:
            raise ConfigurationError(f"beta must be >= 1, got {self.beta}")

    def __call__(self, round_index: int) -> int:
        return growth_eval(self, round_index)


def growth_eval(growth: GrowthFunction, round_index: int) -> int:
    """Evaluate the group-count schedule at round r >= 1 (uncapped).

    linear: beta * floor(alpha * (r - 1) + 1)
    log:    beta * floor(alpha * ln(r) + 1)
    exp:    beta * floor((1 + alpha) ** (r - 1)), saturating instead of
            overflowing; callers cap the result at the client count.
    """
    if round_index < 1:
        raise ValueError(f"round_index must be >= 1, got {round_index}")
    if growth.kind == GROWTH_LINEAR:
        inner = math.floor(growth.alpha * (round_index - 1) + 1.0)
    elif growth.kind == GROWTH_LOG:
        inner = math.floor(growth.alpha * math.log(round_index) + 1.0)
    else:
        exponent = (round_index - 1) * math.log1p(growth.alpha)
        if exponent >= _EXP_SATURATION:
            return GROWTH_CAP
        inner = math.floor((1.0 + growth.alpha) ** (round_index - 1))
    return growth.beta * inner


@dataclass
class ExperimentConfig:
    """A full training run: task, model, optimizer, schedule, sampling, seed."""

    algorithm: str
    task: SyntheticTaskSpec
    model: ModelSpec
    sgd: SgdConfig = SgdConfig()
    growth: GrowthFunction = GrowthFunction(kind=GROWTH_LOG, alpha=2.0, beta=10)
    kappa: float = 0.3
    rounds: int = 500
    fixed_group_count: int | None = None
    run_seed: int = 0
    parallel_groups: int = 0
    cost: CostModelParams | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(
                f"algorithm must be one of {', '.join(ALGORITHMS)}; got {self.algorithm!r}"
            )
        if not 0.0 < self.kappa <= 1.0:
            raise ConfigurationError(f"kappa must be in (0, 1], got {self.kappa}")
        if self.rounds < 0:
            raise ConfigurationError(f"rounds must be >= 0, got {self.rounds}")
        if self.parallel_groups < 0:
            raise ConfigurationError(f"parallel_groups must be >= 0, got {self.parallel_groups}")
        if self.algorithm in ("naive_gsp", "naive_gsp_icg"):
            if self.fixed_group_count is None or self.fixed_group_count < 1:
                raise ConfigurationError(
                    f"{self.algorithm} needs a positive fixed_group_count"
                )
        if self.model.feature_dim != self.task.feature_dim:
            raise ConfigurationError("model feature_dim disagrees with the task")
        if self.model.num_classes != self.task.num_classes:
            raise ConfigurationError("model num_classes disagrees with the task")
        if self.cost is None:
            self.cost = CostModelParams(
                samples_per_client=self.task.samples_per_client,
                num_clients=self.task.num_clients,
                local_epochs=self.sgd.local_epochs,
                sampling_rate=self.kappa,
            )


@dataclass(frozen=True)
class RoundRecord:
    """One row of the per-round metrics stream."""

    round_index: int
    group_count: int
    sampled_groups: int
    accuracy: float
    loss: float
    median_group_cpd: float
    t_comp_cum_s: float
    t_comm_cum_s: float
    d_comm_cum_mb: float


@dataclass
class ExperimentState:
    """Mutable run state advanced by :func:`run_round`."""

    config: ExperimentConfig
    clients: list[ClientDataset]
    test_set: TestSet
    params: ModelParams
    completed_rounds: int = 0
    records: list[RoundRecord] = field(default_factory=list)
    # Diagnostics for tests and audit dumps; refreshed every round.
    last_plan: GroupingPlan | None = None
    last_sampled: tuple[int, ...] = ()


def new_experiment_state(config: ExperimentConfig) -> ExperimentState:
    clients, test_set = generate_task(config.task)
    return ExperimentState(
        config=config,
        clients=clients,
        test_set=test_set,
        params=init_model(config.model),
    )


def group_count_for_round(config: ExperimentConfig, round_index: int) -> int:
    """The round's group count M, capped at the client count."""
    num_clients = config.task.num_clients
    if config.algorithm == "fedgsp":
        return min(growth_eval(config.growth, round_index), num_clients)
    if config.algorithm == "fedavg":
        return num_clients
    return min(config.fixed_group_count, num_clients)


def _build_plan(state: ExperimentState, round_index: int) -> GroupingPlan:
    config = state.config
    count = group_count_for_round(config, round_index)
    if config.algorithm in ("fedgsp", "naive_gsp_icg"):
        result = inter_cluster_grouping(
            [c.distribution for c in state.clients],
            lambda _r: count,
            round_index,
            stream_id(config.run_seed, "grouping"),
        )
        return result.plan
    if config.algorithm == "naive_gsp":
        return random_grouping(
            config.task.num_clients,
            lambda _r: count,
            round_index,
            stream_id(config.run_seed, "grouping"),
        )
    return singleton_grouping(config.task.num_clients, round_index)


def _sample_size(kappa: float, group_count: int) -> int:
    # Round half up, never below one group.
    return max(1, math.floor(kappa * group_count + 0.5))


def _train_chain(state: ExperimentState, plan: GroupingPlan, group_id: int) -> ModelParams:
    config = state.config
    params = state.params
    for client_id in plan.groups[group_id]:
        params = train_one_client(
            params,
            state.clients[client_id],
            config.sgd,
            batch_seed=stream_id(
                config.run_seed, "batch", plan.round_index, group_id, client_id
            ),
        )
    return params


def run_round(state: ExperimentState, round_index: int) -> RoundRecord:
    """Execute round ``round_index``, advance the state, and return its record."""
    config = state.config
    plan = _build_plan(state, round_index)
    sample_count = _sample_size(config.kappa, plan.group_count)
    sampled = np.sort(
        generator(config.run_seed, "group-sample", round_index).choice(
            plan.group_count, size=sample_count, replace=False
        )
    )

    if config.parallel_groups > 1:
        with ThreadPoolExecutor(max_workers=config.parallel_groups) as pool:
            futures = {g: pool.submit(_train_chain, state, plan, int(g)) for g in sampled}
            outputs = {g: futures[g].result() for g in sampled}
    else:
        outputs = {g: _train_chain(state, plan, int(g)) for g in sampled}

    # Reduce in ascending group id regardless of completion order.
    stacked = np.stack([outputs[g].values for g in sampled])
    state.params = ModelParams(values=stacked.mean(axis=0), layout=state.params.layout)

    accuracy, loss = evaluate(state.params, state.test_set)
    if plan.group_count >= 2:
        overall = [
            np.asarray([state.clients[c].distribution.counts for c in group]).sum(axis=0)
            for group in plan.groups
        ]
        median_cpd = metrics.median_pairwise_cpd(overall)
    else:
        median_cpd = 0.0

    counts = [group_count_for_round(config, r) for r in range(1, round_index + 1)]
    record = RoundRecord(
        round_index=round_index,
        group_count=plan.group_count,
        sampled_groups=sample_count,
        accuracy=accuracy,
        loss=loss,
        median_group_cpd=median_cpd,
        t_comp_cum_s=metrics.t_comp(counts, config.cost),
        t_comm_cum_s=metrics.t_comm(round_index, config.cost),
        d_comm_cum_mb=metrics.d_comm(round_index, config.cost),
    )
    state.completed_rounds = round_index
    state.records.append(record)
    state.last_plan = plan
    state.last_sampled = tuple(int(g) for g in sampled)
    return record


def save_checkpoint(state: ExperimentState, path: str) -> None:
    """Versioned JSON dump of (round, global params, PRNG cursor).

    Sub-streams are derived statelessly from ``(run_seed, purpose, round)``,
    so the seed plus the next round index is a complete PRNG cursor.
    """
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "round": state.completed_rounds,
        "run_seed": state.config.run_seed,
        "params": {
            "layout": [[name, list(shape)] for name, shape in state.params.layout],
            "values": state.params.values.tolist(),
        },
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)


def load_checkpoint(path: str) -> tuple[int, int, ModelParams]:
    """Read a checkpoint; returns (completed rounds, run seed, params)."""
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format: {payload.get('format_version')}")
    params = ModelParams(
        values=np.array(payload["params"]["values"], dtype=np.float64),
        layout=tuple((name, tuple(shape)) for name, shape in payload["params"]["layout"]),
    )
    return int(payload["round"]), int(payload["run_seed"]), params


def run_experiment(
    config: ExperimentConfig,
    resume_from: str | None = None,
    checkpoint_path: str | None = None,
    checkpoint_every: int | None = None,
    on_round=None,
) -> tuple[list[RoundRecord], ModelParams]:
    """Run all configured rounds; deterministic for a fixed config.

    Args:
        config: The experiment.
        resume_from: Optional checkpoint path to continue from.
        checkpoint_path: Where to write checkpoints (required with
            ``checkpoint_every``).
        checkpoint_every: Write a checkpoint after every N completed rounds.
        on_round: Optional ``callback(state, record)`` invoked after each round.

    Returns:
        The records of the rounds executed by this call and the final global
        model.
    """
    state = new_experiment_state(config)
    if resume_from is not None:
        completed, run_seed, params = load_checkpoint(resume_from)
        if run_seed != config.run_seed:
            raise ConfigurationError(
                f"checkpoint seed {run_seed} does not match config seed {config.run_seed}"
            )
        state.params = params
        state.completed_rounds = completed
    if checkpoint_every is not None and checkpoint_path is None:
        raise ConfigurationError("checkpoint_every requires checkpoint_path")

    for round_index in range(state.completed_rounds + 1, config.rounds + 1):
        record = run_round(state, round_index)
        if on_round is not None:
            on_round(state, record)
        if (
            checkpoint_path is not None
            and checkpoint_every is not None
            and round_index % checkpoint_every == 0
        ):
            save_checkpoint(state, checkpoint_path)
    return state.records, state.params
