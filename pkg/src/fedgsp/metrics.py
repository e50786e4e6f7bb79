"""Divergence and cost metrics.

CPD (class probability distance) is the squared maximum mean discrepancy
between two normalized class distributions under a Gaussian RBF kernel with
classes embedded one-hot. Because the embedding is one-hot, the full kernel
double sum collapses to

    (1 - exp(-1 / sigma**2)) * ||P - Q||_2**2

which is what this module evaluates; the tests check it against the explicit
double sum.

The cost models are analytic: per-round computation time from per-sample and
aggregation FLOP counts against a device throughput, plus communication time
and traffic that scale with the sampled model transfers per round. They are
estimates by construction, not measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class CpdConfig:
    """Gaussian kernel bandwidth for CPD; the class embedding is fixed one-hot."""

    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class CostModelParams:
    """Constants of the analytic cost models.

    Hardware defaults: 96 MFLOPs per trained sample, 6.3 MFLOPs per model
    aggregation, a 567 GFLOPS device, a 25.2 MB model, and symmetric
    567 Mbps links. ``samples_per_client``, ``local_epochs``, ``num_clients``
    and ``sampling_rate`` describe the experiment being costed.
    """

    samples_per_client: int
    num_clients: int
    local_epochs: int = 1
    sampling_rate: float = 0.3
    calc_flops_per_sample: float = 96e6
    aggregation_flops: float = 6.3e6
    device_flops_per_second: float = 567e9
    model_size_megabytes: float = 25.2
    inbound_megabits_per_second: float = 567.0
    outbound_megabits_per_second: float = 567.0

    def __post_init__(self) -> None:
        for name in (
            "samples_per_client",
            "num_clients",
            "local_epochs",
            "sampling_rate",
            "calc_flops_per_sample",
            "aggregation_flops",
            "device_flops_per_second",
            "model_size_megabytes",
            "inbound_megabits_per_second",
            "outbound_megabits_per_second",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)}")


def _normalized(counts) -> np.ndarray:
    vec = np.asarray(getattr(counts, "counts", counts), dtype=float)
    total = vec.sum()
    if total <= 0.0:
        raise ValueError("class distribution has zero total")
    return vec / total


def cpd(first, second, config: CpdConfig = CpdConfig()) -> float:
    """Squared-MMD distance between two class distributions.

    Args:
        first, second: ``ClassDistribution`` instances or count vectors with
            positive totals (lengths must match).
        config: Kernel bandwidth.

    Returns:
        A non-negative float; 0 iff the normalized distributions coincide.
    """
    p = _normalized(first)
    q = _normalized(second)
    if p.shape != q.shape:
        raise ValueError(f"class counts disagree: {p.shape} vs {q.shape}")
    diff = p - q
    return (1.0 - math.exp(-1.0 / config.sigma**2)) * float(diff @ diff)


def median_pairwise_cpd(distributions: Sequence, config: CpdConfig = CpdConfig()) -> float:
    """Median CPD over all unordered pairs of the given distributions."""
    if len(distributions) < 2:
        raise ValueError("need at least 2 distributions")
    rows = np.stack([_normalized(d) for d in distributions])
    sq = np.sum((rows[:, None, :] - rows[None, :, :]) ** 2, axis=-1)
    pairs = sq[np.triu_indices(len(rows), k=1)]
    return (1.0 - math.exp(-1.0 / config.sigma**2)) * float(np.median(pairs))


def t_comp(group_counts: Sequence[int], params: CostModelParams) -> float:
    """Cumulative computational time (seconds) over rounds 1..R.

    ``group_counts[r-1]`` is the group count of round r. Each round costs a
    local-training term (chains of length K/min{K, M} run in parallel) plus a
    global-aggregation term proportional to the number of sampled models.
    """
    p = params
    total = 0.0
    for count in group_counts:
        parallel = min(p.num_clients, count)
        training = (p.calc_flops_per_sample / p.device_flops_per_second) * (
            p.samples_per_client * p.local_epochs * p.num_clients / parallel
        )
        aggregation = (p.aggregation_flops / p.device_flops_per_second) * (
            p.sampling_rate * count - 1.0
        )
        total += training + aggregation
    return total


def t_comm(rounds: int, params: CostModelParams) -> float:
    """Cumulative communication time (seconds) over ``rounds`` rounds."""
    p = params
    return (
        8.0
        * p.sampling_rate
        * p.num_clients
        * p.model_size_megabytes
        * rounds
        * (1.0 / p.inbound_megabits_per_second + 1.0 / p.outbound_megabits_per_second)
    )


def d_comm(rounds: int, params: CostModelParams) -> float:
    """Cumulative cross-WAN traffic (megabytes) over ``rounds`` rounds."""
    p = params
    return 2.0 * p.sampling_rate * p.num_clients * p.model_size_megabytes * rounds
