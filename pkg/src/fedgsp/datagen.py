"""Synthetic non-i.i.d. client data.

A task is a set of clients holding class-skewed samples of a shared
classification problem. Label skew comes in two flavors: per-client Dirichlet
class proportions (smaller concentration = more skew) or shard dealing (sort
a global pool by label, slice it into shards, deal a few shards to each
client). Features are class-conditioned Gaussian blobs: one mean vector per
class, drawn once from the task seed, plus unit-covariance noise, so the task
is learnable but not trivial.

Generation is a pure function of the task spec: the same spec produces
bit-identical datasets on every run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .rng import dirichlet_proportions, generator

TEST_SAMPLES_PER_CLASS = 100

SKEW_DIRICHLET = "dirichlet"
SKEW_SHARDS = "shards"


@dataclass(frozen=True)
class SyntheticTaskSpec:
    """Everything needed to regenerate a task deterministically.

    Exactly one skew mode applies: ``concentration`` parameterizes
    ``dirichlet``, ``shards_per_client`` parameterizes ``shards``.
    """

    num_classes: int
    num_clients: int
    samples_per_client: int
    feature_dim: int
    skew: str = SKEW_DIRICHLET
    concentration: float = 0.3
    shards_per_client: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ConfigurationError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.num_clients < 2:
            raise ConfigurationError(f"num_clients must be >= 2, got {self.num_clients}")
        if self.samples_per_client < 1:
            raise ConfigurationError(
                f"samples_per_client must be >= 1, got {self.samples_per_client}"
            )
        if self.feature_dim < 1:
            raise ConfigurationError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.skew == SKEW_DIRICHLET:
            if not self.concentration > 0.0:
                raise ConfigurationError(
                    f"dirichlet concentration must be > 0, got {self.concentration}"
                )
        elif self.skew == SKEW_SHARDS:
            if self.shards_per_client < 1:
                raise ConfigurationError(
                    f"shards_per_client must be >= 1, got {self.shards_per_client}"
                )
            if self.samples_per_client % self.shards_per_client != 0:
                raise ConfigurationError(
                    "infeasible shard arithmetic: samples_per_client "
                    f"({self.samples_per_client}) is not divisible by "
                    f"shards_per_client ({self.shards_per_client})"
                )
        else:
            raise ConfigurationError(
                f"skew must be '{SKEW_DIRICHLET}' or '{SKEW_SHARDS}', got {self.skew!r}"
            )


@dataclass(frozen=True)
class ClassDistribution:
    """Per-class sample counts of one client (or one group, when summed)."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1:
            raise ValueError("counts must be a 1-D vector")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_labels(cls, labels: np.ndarray, num_classes: int) -> "ClassDistribution":
        labels = np.asarray(labels)
        if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
            raise ValueError("label out of range")
        return cls(np.bincount(labels, minlength=num_classes))

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClientDataset:
    """One client's local data plus its class-distribution vector."""

    client_id: int
    features: np.ndarray
    labels: np.ndarray
    distribution: ClassDistribution

    def __post_init__(self) -> None:
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels disagree on sample count")
        if self.labels.size == 0:
            raise ValueError(f"client {self.client_id} has no samples")
        expected = np.bincount(self.labels, minlength=len(self.distribution.counts))
        if not np.array_equal(expected, self.distribution.counts):
            raise ValueError(f"distribution does not tally labels of client {self.client_id}")


@dataclass(frozen=True)
class TestSet:
    """Held-out, class-balanced evaluation data."""

    __test__ = False  # keep pytest from collecting this as a test class

    features: np.ndarray
    labels: np.ndarray


def largest_remainder_counts(proportions: np.ndarray, total: int) -> np.ndarray:
    """Round proportions to integer counts that sum exactly to ``total``.

    Largest-remainder rule; ties go to the lower index so the result is
    reproducible.
    """
    scaled = np.asarray(proportions, dtype=float) * total
    base = np.floor(scaled).astype(np.int64)
    short = int(total - base.sum())
    if short < 0:
        raise ValueError("proportions must sum to (at most) 1")
    if short > 0:
        order = np.lexsort((np.arange(len(scaled)), -(scaled - base)))
        base[order[:short]] += 1
    return base


def _dirichlet_label_counts(spec: SyntheticTaskSpec) -> np.ndarray:
    counts = np.zeros((spec.num_clients, spec.num_classes), dtype=np.int64)
    for k in range(spec.num_clients):
        rng = generator(spec.seed, "dirichlet-proportions", k)
        proportions = dirichlet_proportions(rng, spec.concentration, spec.num_classes)
        counts[k] = largest_remainder_counts(proportions, spec.samples_per_client)
    return counts


def _shard_label_counts(spec: SyntheticTaskSpec) -> np.ndarray:
    """Sort a balanced global pool by label, slice into shards, deal them out."""
    pool_size = spec.num_clients * spec.samples_per_client
    per_class = largest_remainder_counts(
        np.full(spec.num_classes, 1.0 / spec.num_classes), pool_size
    )
    pool = np.repeat(np.arange(spec.num_classes), per_class)  # sorted by label
    shard_size = spec.samples_per_client // spec.shards_per_client
    num_shards = spec.num_clients * spec.shards_per_client
    deal = generator(spec.seed, "shard-deal").permutation(num_shards)
    counts = np.zeros((spec.num_clients, spec.num_classes), dtype=np.int64)
    for k in range(spec.num_clients):
        mine = deal[k * spec.shards_per_client : (k + 1) * spec.shards_per_client]
        for shard in mine:
            labels = pool[shard * shard_size : (shard + 1) * shard_size]
            counts[k] += np.bincount(labels, minlength=spec.num_classes)
    return counts


def generate_task(spec: SyntheticTaskSpec) -> tuple[list[ClientDataset], TestSet]:
    """Synthesize the client datasets and the held-out test set for a spec.

    Returns:
        ``(clients, test_set)`` where ``clients[k].client_id == k`` and the
        test set holds exactly ``100 * num_classes`` class-balanced samples.
    """
    if spec.skew == SKEW_DIRICHLET:
        label_counts = _dirichlet_label_counts(spec)
    else:
        label_counts = _shard_label_counts(spec)

    means = generator(spec.seed, "class-means").standard_normal(
        (spec.num_classes, spec.feature_dim)
    )

    clients = []
    for k in range(spec.num_clients):
        counts = label_counts[k]
        labels = np.repeat(np.arange(spec.num_classes), counts)
        labels = generator(spec.seed, "label-order", k).permutation(labels)
        noise = generator(spec.seed, "features", k).standard_normal(
            (spec.samples_per_client, spec.feature_dim)
        )
        features = means[labels] + noise
        clients.append(
            ClientDataset(
                client_id=k,
                features=features,
                labels=labels,
                distribution=ClassDistribution(counts),
            )
        )

    test_labels = np.repeat(np.arange(spec.num_classes), TEST_SAMPLES_PER_CLASS)
    test_rng = generator(spec.seed, "test-set")
    test_labels = test_rng.permutation(test_labels)
    test_features = means[test_labels] + test_rng.standard_normal(
        (test_labels.size, spec.feature_dim)
    )
    return clients, TestSet(features=test_features, labels=test_labels)


def class_distribution(dataset: ClientDataset) -> ClassDistribution:
    """Tally the dataset's labels (pure; ignores the stored distribution)."""
    return ClassDistribution.from_labels(dataset.labels, len(dataset.distribution.counts))


def dump_clients_csv(clients: list[ClientDataset], path: str) -> None:
    """Write clients to a columnar CSV: client_id, label, feature_0..feature_{d-1}."""
    dim = clients[0].features.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["client_id", "label"] + [f"feature_{j}" for j in range(dim)])
        for client in clients:
            for row, label in zip(client.features, client.labels):
                writer.writerow(
                    [client.client_id, int(label)] + [repr(float(v)) for v in row]
                )


def load_clients_csv(path: str, num_classes: int) -> list[ClientDataset]:
    """Read back a dump produced by :func:`dump_clients_csv`."""
    per_client: dict[int, list[tuple[int, list[float]]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header[:2] != ["client_id", "label"]:
            raise ValueError(f"unrecognized client CSV header: {header[:2]}")
        for row in reader:
            client_id, label = int(row[0]), int(row[1])
            per_client.setdefault(client_id, []).append((label, [float(v) for v in row[2:]]))
    clients = []
    for client_id in sorted(per_client):
        rows = per_client[client_id]
        labels = np.array([label for label, _ in rows], dtype=np.int64)
        features = np.array([feats for _, feats in rows], dtype=float)
        clients.append(
            ClientDataset(
                client_id=client_id,
                features=features,
                labels=labels,
                distribution=ClassDistribution.from_labels(labels, num_classes),
            )
        )
    return clients
