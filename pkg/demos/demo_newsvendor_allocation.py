#!/usr/bin/env python3
"""The on-demand pseudonym allocation problem, end to end.

Each user wants pseudonym changes at a Poisson rate over the hour. Stocking
one pseudonym earns a profit proportional to the entropy a change restores
if it gets used, costs storage if it doesn't, and every unmet change draws
a penalty. That is a newsvendor problem per user, coupled by the mint
budget. This script builds the six-user instance, shows the expected
utility curve and where its marginal crosses zero, and compares the exact
greedy optimum, the genetic solver, and the equal split.
"""

import numpy as np

from pseudotwin.allocator import (
    AllocationProblem,
    UtilityParams,
    equal_allocation,
    expected_utility_curve,
    global_expected_utility,
    marginal_gain,
    optimize_exact,
    optimize_ga,
)
from pseudotwin.demand import DemandModel
from pseudotwin.entropy import EntropyParams, average_entropy

FREQUENCIES = [1.0, 1.2, 1.4, 1.6, 1.8, 2.0]
PERIOD = 60.0
BUDGET = 600


def build_problem(seed=7):
    rng = np.random.default_rng(seed)
    vmus = []
    for f in FREQUENCIES:
        p = 0.5 * (1 - rng.random())
        ep = EntropyParams(h_max=1.5, h_0=1.0, h_min=0.25, alpha=1.0, p=p)
        vmus.append(
            (
                DemandModel(frequency=f, period=PERIOD),
                UtilityParams(
                    beta=1.0,
                    h_store=0.1,
                    r_penalty=0.3,
                    avg_entropy=average_entropy(ep, 1.0 / f),
                ),
            )
        )
    return AllocationProblem(vmus=tuple(vmus), budget=BUDGET)


def main():
    problem = build_problem()

    model, params = problem.vmus[0]
    lam = model.rate
    print(f"user 0: lam={lam:.0f} changes expected, H_avg={params.avg_entropy:.3f}")
    curve = expected_utility_curve(model, params, 120)
    r_star = int(np.argmax(curve))
    print(f"expected utility peaks at r*={r_star} (E[U]={curve[r_star]:.2f}):")
    for r in (0, 30, 60, r_star, 90, 120):
        print(f"  r={r:<4} E[U]={curve[r]:8.3f}  marginal={marginal_gain(r, model, params):+.4f}")
    print("the marginal crosses zero exactly at the peak; the greedy optimizer")
    print("hands out pseudonyms one at a time to whoever's marginal is largest.\n")

    exact = optimize_exact(problem)
    ga = optimize_ga(problem, seed=42)
    equal = equal_allocation(problem)
    print(f"budget: {BUDGET} pseudonyms for {problem.size} users")
    print(f"{'scheme':<14}{'allocation':<42}objective")
    for name, plan in (("exact greedy", exact), ("genetic", ga), ("equal split", equal)):
        obj = global_expected_utility(problem, plan)
        print(f"{name:<14}{str(list(plan.r)):<42}{obj:.3f}")

    gap = global_expected_utility(problem, exact) - global_expected_utility(problem, ga)
    print(f"\nGA gap to the exact optimum: {gap:.6f}")
    print("the genetic population is seeded with the equal split, so it can")
    print("never finish below the baseline.")


if __name__ == "__main__":
    main()
