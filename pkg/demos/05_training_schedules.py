#!/usr/bin/env python3
"""Run all four training schedules on one small skewed task.

fedavg:        every sampled client trains alone, models averaged.
naive_gsp:     random fixed-size groups, sequential inside, parallel across.
naive_gsp_icg: same, but groups formed by clustered (balanced) assignment.
fedgsp:        clustered groups plus a growing group count per round.

Desk scale (a minute or so of CPU); the point is the shape of the curves,
not headline numbers.
"""

import numpy as np

from fedgsp import (
    ExperimentConfig,
    GrowthFunction,
    ModelSpec,
    SgdConfig,
    SyntheticTaskSpec,
    run_experiment,
)

ROUNDS = 40


def build_config(algorithm):
    task = SyntheticTaskSpec(
        num_classes=10,
        num_clients=30,
        samples_per_client=40,
        feature_dim=6,
        skew="dirichlet",
        concentration=0.3,
        seed=13,
    )
    return ExperimentConfig(
        algorithm=algorithm,
        task=task,
        model=ModelSpec(
            kind="mlp_one_hidden",
            feature_dim=6,
            num_classes=10,
            hidden_units=16,
            init_seed=29,
        ),
        sgd=SgdConfig(),
        growth=GrowthFunction("log", 2.0, 3),
        kappa=0.3,
        rounds=ROUNDS,
        fixed_group_count=3 if algorithm.startswith("naive") else None,
        run_seed=31,
    )


def sparkline(values, width=40):
    blocks = " .:-=+*#%@"
    step = max(1, len(values) // width)
    picks = values[::step][:width]
    low, high = min(values), max(values)
    span = (high - low) or 1.0
    return "".join(blocks[int((v - low) / span * (len(blocks) - 1))] for v in picks)


def main():
    print(f"One shared task, four schedules, {ROUNDS} rounds, kappa=0.3\n")
    results = {}
    for algorithm in ("fedavg", "naive_gsp", "naive_gsp_icg", "fedgsp"):
        records, _ = run_experiment(build_config(algorithm))
        results[algorithm] = records
        accuracy = [r.accuracy for r in records]
        print(f"{algorithm:14s} acc {sparkline(accuracy)}  final={accuracy[-1]:.3f}")

    print("\nround-by-round detail (accuracy / groups / median group CPD):")
    marks = (1, 5, 10, 20, ROUNDS)
    for algorithm, records in results.items():
        cells = [
            f"r{r.round_index}: {r.accuracy:.2f} M={r.group_count} cpd={r.median_group_cpd:.3f}"
            for r in records
            if r.round_index in marks
        ]
        print(f"  {algorithm:14s} " + " | ".join(cells))

    print("\nClustered grouping keeps the group-level CPD low; the growing")
    print("schedule starts with deep sequential chains (fast early gains) and")
    print("ends nearly parallel (stable late rounds).")
    final = {a: np.mean([r.accuracy for r in records][-5:]) for a, records in results.items()}
    order = sorted(final, key=final.get, reverse=True)
    print("final-5-round mean accuracy, best to worst: "
          + ", ".join(f"{a}={final[a]:.3f}" for a in order))


if __name__ == "__main__":
    main()
