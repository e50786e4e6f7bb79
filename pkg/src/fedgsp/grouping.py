"""Group assembly by balanced clustering of client class distributions.

The round's clients are split into ``L`` equal-size clusters of similar
distributions (alternating exact balanced assignment / centroid update, with
the assignment step solved as a min-cost flow), then each group draws one
client from every cluster, so all groups end up with near-identical overall
class mixes. ``L`` is both the cluster count and the group size: with ``M``
groups requested over ``K`` clients, ``L = K // M`` and only
``L * (K // L)`` subsampled clients take part in the round.

Random balanced grouping (the ablation baseline) and singleton grouping (one
client per group, i.e. plain parallel training) produce the same plan type so
the training loop never cares how groups were formed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import mcf
from .metrics import CpdConfig, cpd
from .rng import generator, stream_id

COST_SCALE = 10**6
MAX_ALTERNATIONS = 10
CENTROID_TOLERANCE = 1e-6

PLAN_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ClusterState:
    """Converged (or iteration-capped) balanced clustering of the round's clients."""

    cluster_count: int
    centroids: np.ndarray
    assignment: np.ndarray
    objective: float


@dataclass(frozen=True)
class GroupingPlan:
    """Round-specific assignment of clients to ordered groups.

    ``groups[m]`` lists the client ids of group ``m`` in training order;
    ``unassigned`` are the clients sitting out the round (dropped by the
    divisibility subsample or left over in their cluster).
    """

    round_index: int
    group_count: int
    groups: tuple[tuple[int, ...], ...]
    unassigned: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "groups", tuple(tuple(g) for g in self.groups))
        object.__setattr__(self, "unassigned", tuple(self.unassigned))
        if len(self.groups) != self.group_count:
            raise ValueError("group_count disagrees with groups")
        members = [c for g in self.groups for c in g]
        if len(set(members)) != len(members):
            raise ValueError("a client appears in more than one group")

    def to_json(self) -> str:
        return json.dumps(
            {
                "format_version": PLAN_FORMAT_VERSION,
                "round": self.round_index,
                "groups": [list(g) for g in self.groups],
                "unassigned": list(self.unassigned),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GroupingPlan":
        payload = json.loads(text)
        if payload.get("format_version") != PLAN_FORMAT_VERSION:
            raise ValueError(f"unsupported plan format: {payload.get('format_version')}")
        return cls(
            round_index=payload["round"],
            group_count=len(payload["groups"]),
            groups=tuple(tuple(g) for g in payload["groups"]),
            unassigned=tuple(payload["unassigned"]),
        )


@dataclass(frozen=True)
class GroupCentroidReport:
    """How far each group's centroid strays from the global one.

    ``error_bound`` is ``sum(cluster_spreads) / L**2`` where a cluster's
    spread is its largest member-to-centroid squared distance; every
    ``squared_errors[m]`` is expected to stay below it.
    """

    group_centroids: np.ndarray
    global_centroid: np.ndarray
    squared_errors: np.ndarray
    cluster_spreads: np.ndarray
    error_bound: float


@dataclass(frozen=True)
class IcgResult:
    plan: GroupingPlan
    report: GroupCentroidReport
    cluster_state: ClusterState
    objective_history: tuple[float, ...]


def distribution_matrix(distributions: Sequence) -> np.ndarray:
    """Stack ClassDistribution-like objects (or raw vectors) into a float matrix."""
    return np.stack(
        [np.asarray(getattr(d, "counts", d), dtype=float) for d in distributions]
    )


def clustering_objective(
    points: np.ndarray, centroids: np.ndarray, assignment: np.ndarray
) -> float:
    """Sum of half squared distances from each point to its assigned centroid."""
    diff = points - centroids[assignment]
    return 0.5 * float(np.sum(diff * diff))


def cluster_assignment(points, centroids) -> np.ndarray:
    """Optimal equal-size assignment of points to the given centroids.

    Solved exactly as a min-cost flow on the bipartite graph point -> cluster
    with arc cost ``round(0.5 * ||point - centroid||^2 * 1e6)`` (half-to-even),
    unit supplies and per-cluster demand ``len(points) / len(centroids)``.
    """
    pts = points if isinstance(points, np.ndarray) else distribution_matrix(points)
    cents = np.asarray(centroids, dtype=float)
    num_points, num_clusters = len(pts), len(cents)
    if num_points % num_clusters != 0:
        raise ValueError(
            f"{num_points} points cannot fill {num_clusters} equal clusters"
        )
    quota = num_points // num_clusters

    diff = pts[:, None, :] - cents[None, :, :]
    cost = 0.5 * np.sum(diff * diff, axis=-1)
    scaled = np.rint(cost * COST_SCALE).astype(np.int64)

    arcs = [
        (k, num_points + l, 1, int(scaled[k, l]))
        for k in range(num_points)
        for l in range(num_clusters)
    ]
    supplies = [1] * num_points + [-quota] * num_clusters
    solution = mcf.solve(
        mcf.FlowNetwork(
            node_count=num_points + num_clusters,
            arcs=tuple(arcs),
            supplies=tuple(supplies),
        )
    )
    if solution.status != mcf.STATUS_OPTIMAL:
        raise RuntimeError("balanced assignment network must be feasible")

    assignment = np.empty(num_points, dtype=np.int64)
    flows = solution.flows.reshape(num_points, num_clusters)
    for k in range(num_points):
        assignment[k] = int(np.argmax(flows[k]))
    return assignment


def cluster_update(points, assignment: np.ndarray) -> np.ndarray:
    """Move each centroid to the mean of its members."""
    pts = points if isinstance(points, np.ndarray) else distribution_matrix(points)
    num_clusters = int(assignment.max()) + 1
    centroids = np.empty((num_clusters, pts.shape[1]))
    for l in range(num_clusters):
        members = pts[assignment == l]
        if len(members) == 0:
            raise RuntimeError(f"cluster {l} is empty despite the balance constraint")
        centroids[l] = members.mean(axis=0)
    return centroids


def constrained_cluster(
    points: np.ndarray,
    cluster_count: int,
    seed: int,
    max_iterations: int = MAX_ALTERNATIONS,
    tolerance: float = CENTROID_TOLERANCE,
) -> tuple[ClusterState, tuple[float, ...]]:
    """Alternate exact balanced assignment and centroid update until stable.

    Centroids start at ``cluster_count`` distinct points chosen by seeded
    sampling. The returned history interleaves the objective after each
    assignment and each update step; it is non-increasing up to the cost
    quantization of the flow solver.
    """
    init = generator(seed, "centroid-init").choice(
        len(points), size=cluster_count, replace=False
    )
    centroids = points[np.sort(init)].copy()
    history: list[float] = []
    assignment = None
    for _ in range(max_iterations):
        assignment = cluster_assignment(points, centroids)
        history.append(clustering_objective(points, centroids, assignment))
        updated = cluster_update(points, assignment)
        history.append(clustering_objective(points, updated, assignment))
        displacement = float(
            np.sqrt(np.sum((updated - centroids) ** 2, axis=1)).max()
        )
        centroids = updated
        if displacement < tolerance:
            break
    state = ClusterState(
        cluster_count=cluster_count,
        centroids=centroids,
        assignment=assignment,
        objective=history[-1],
    )
    return state, tuple(history)


def _centroid_report(
    pts: np.ndarray,
    participant_rows: dict[int, int],
    state: ClusterState,
    groups: Sequence[Sequence[int]],
) -> GroupCentroidReport:
    spreads = np.empty(state.cluster_count)
    for l in range(state.cluster_count):
        diff = pts[state.assignment == l] - state.centroids[l]
        spreads[l] = float(np.sum(diff * diff, axis=1).max())
    global_centroid = state.centroids.mean(axis=0)
    group_centroids = np.stack(
        [pts[[participant_rows[c] for c in group]].mean(axis=0) for group in groups]
    )
    errors = np.sum((group_centroids - global_centroid) ** 2, axis=1)
    bound = float(spreads.sum()) / state.cluster_count**2
    return GroupCentroidReport(
        group_centroids=group_centroids,
        global_centroid=global_centroid,
        squared_errors=errors,
        cluster_spreads=spreads,
        error_bound=bound,
    )


def _resolve_group_count(f: Callable[[int], int], round_index: int, num_clients: int) -> int:
    requested = int(f(round_index))
    if requested < 1:
        raise ValueError(f"group count must be >= 1, got {requested}")
    # More groups than clients degenerates to one client per group.
    return min(requested, num_clients)


def inter_cluster_grouping(
    clients: Sequence,
    f: Callable[[int], int],
    round_index: int,
    seed: int,
) -> IcgResult:
    """Build the round's groups by clustering distributions, then drawing across clusters.

    Args:
        clients: One ClassDistribution (or count vector) per client; the
            client id is the position in this sequence.
        f: Group-count schedule; ``f(round_index)`` groups are requested and
            capped at the client count.
        round_index: Current round (>= 1); folded into every sub-stream.
        seed: Grouping seed for the run.

    Returns:
        An :class:`IcgResult` carrying the plan, the group-centroid report,
        the final cluster state, and the objective history of the alternating
        optimization.
    """
    num_clients = len(clients)
    group_count = _resolve_group_count(f, round_index, num_clients)
    group_size = num_clients // group_count  # L: cluster count == group size
    quota = num_clients // group_size  # members per cluster
    sampled_count = group_size * quota

    icg_seed = stream_id(seed, "icg", round_index)
    participants = generator(icg_seed, "participant-sample").choice(
        num_clients, size=sampled_count, replace=False
    )
    participants = np.sort(participants)
    participant_rows = {int(c): i for i, c in enumerate(participants)}

    pts = distribution_matrix([clients[c] for c in participants])
    state, history = constrained_cluster(pts, group_size, icg_seed)

    groups: list[list[int]] = [[] for _ in range(group_count)]
    for l in range(group_size):
        members = participants[state.assignment == l]
        order = generator(icg_seed, "cluster-deal", l).permutation(len(members))
        for m in range(group_count):
            groups[m].append(int(members[order[m]]))
    for m in range(group_count):
        generator(icg_seed, "group-order", m).shuffle(groups[m])

    grouped = {c for group in groups for c in group}
    unassigned = tuple(c for c in range(num_clients) if c not in grouped)
    plan = GroupingPlan(
        round_index=round_index,
        group_count=group_count,
        groups=tuple(tuple(g) for g in groups),
        unassigned=unassigned,
    )
    report = _centroid_report(pts, participant_rows, state, groups)
    return IcgResult(
        plan=plan, report=report, cluster_state=state, objective_history=history
    )


def random_grouping(
    num_clients: int,
    f: Callable[[int], int],
    round_index: int,
    seed: int,
) -> GroupingPlan:
    """Seeded random balanced grouping with the same shape rules as ICG."""
    group_count = _resolve_group_count(f, round_index, num_clients)
    group_size = num_clients // group_count
    drawn = generator(stream_id(seed, "random-grouping", round_index), "draw").choice(
        num_clients, size=group_count * group_size, replace=False
    )
    groups = tuple(
        tuple(int(c) for c in drawn[m * group_size : (m + 1) * group_size])
        for m in range(group_count)
    )
    grouped = {c for group in groups for c in group}
    unassigned = tuple(c for c in range(num_clients) if c not in grouped)
    return GroupingPlan(
        round_index=round_index,
        group_count=group_count,
        groups=groups,
        unassigned=unassigned,
    )


def singleton_grouping(num_clients: int, round_index: int) -> GroupingPlan:
    """One client per group: plain parallel training."""
    return GroupingPlan(
        round_index=round_index,
        group_count=num_clients,
        groups=tuple((c,) for c in range(num_clients)),
        unassigned=(),
    )


def group_distributions(plan: GroupingPlan, distributions: Sequence) -> np.ndarray:
    """Per-group overall class counts (the sum of member distributions)."""
    matrix = distribution_matrix(distributions)
    return np.stack([matrix[list(group)].sum(axis=0) for group in plan.groups])


def grouping_objective_z(
    plan: GroupingPlan,
    distributions: Sequence,
    distance: str = "squared_l2",
    cpd_config: CpdConfig = CpdConfig(),
) -> float:
    """Diagnostic total pairwise distance between group class distributions.

    Never used for optimization; ``distance`` is ``squared_l2`` (default) or
    ``cpd``.
    """
    overall = group_distributions(plan, distributions)
    total = 0.0
    for i in range(len(overall)):
        for j in range(i + 1, len(overall)):
            if distance == "squared_l2":
                diff = overall[i] - overall[j]
                total += float(diff @ diff)
            elif distance == "cpd":
                total += cpd(overall[i], overall[j], cpd_config)
            else:
                raise ValueError(f"unknown distance {distance!r}")
    return total
