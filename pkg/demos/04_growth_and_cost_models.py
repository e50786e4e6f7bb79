#!/usr/bin/env python3
"""Group-count growth schedules and the analytic cost models.

Prints f(r) for the three schedule families, then evaluates the computation /
communication cost models at their published hardware defaults (96 MFLOPs per
sample, 567 GFLOPS device, 25.2 MB model, 567 Mbps symmetric links).
"""

from fedgsp import CostModelParams, GrowthFunction, d_comm, growth_eval, t_comm, t_comp


def main():
    print("=== Growth schedules f(r) ===")
    schedules = [
        GrowthFunction("linear", 1.0, 2),
        GrowthFunction("log", 2.0, 10),
        GrowthFunction("exp", 0.5, 2),
    ]
    rounds = [1, 2, 3, 5, 10, 20, 50, 100]
    header = "r".rjust(14) + "".join(f"{r:>8d}" for r in rounds)
    print(header)
    for growth in schedules:
        label = f"{growth.kind}(a={growth.alpha}, b={growth.beta})"
        row = "".join(f"{growth_eval(growth, r):>8d}" for r in rounds)
        print(f"{label:>14}" + row)
    print("(training caps the group count at the number of clients K)")

    print("\n=== Cost models at the published constants ===")
    params = CostModelParams(samples_per_client=226, num_clients=368, sampling_rate=0.3)
    growth = GrowthFunction("log", 2.0, 10)
    print("R".rjust(4), "T_comp (s)".rjust(12), "T_comm (s)".rjust(12), "D_comm (MB)".rjust(13))
    for horizon in (1, 10, 50, 100, 500):
        counts = [min(368, growth_eval(growth, r)) for r in range(1, horizon + 1)]
        print(
            f"{horizon:4d}",
            f"{t_comp(counts, params):12.2f}",
            f"{t_comm(horizon, params):12.2f}",
            f"{d_comm(horizon, params):13.2f}",
        )

    print("\nSingle-round sanity values (K=368, n=226, kappa=0.3, 10 groups):")
    print(f"  T_comp(1) = {t_comp([10], params):.6f} s  (~1.4082 s)")
    print(f"  T_comm(1) = {t_comm(1, params):.4f} s     (~78.5067 s)")
    print(f"  D_comm(1) = {d_comm(1, params):.2f} MB    (5564.16 MB exactly)")
    print("\nCommunication dominates; growing the group count shrinks the")
    print("sequential-training term while kappa keeps the per-round traffic flat.")


if __name__ == "__main__":
    main()
