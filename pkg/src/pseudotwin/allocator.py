"""Budget-constrained on-demand pseudonym allocation.

Single-period newsvendor economics per VMU: a pseudonym change earns a
profit proportional to the average privacy entropy it restores, leftover
pseudonyms incur a storage cost, and unmet change demand incurs a shortage
penalty. The global objective (sum of expected utilities under Poisson
demand) is separable and discretely concave, so a greedy marginal
allocator is exact; a genetic algorithm is provided as the approximate
solver, and equal distribution as the baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demand import DEFAULT_TAIL_EPSILON, DemandModel, demand_pmf, extend_pmf


@dataclass(frozen=True)
class UtilityParams:
    """Per-VMU utility coefficients.

    Attributes:
        beta: profit per executed change per entropy bit.
        h_store: storage cost per leftover pseudonym.
        r_penalty: penalty per unmet change.
        avg_entropy: average privacy entropy restored by a change, bits.
    """

    beta: float
    h_store: float
    r_penalty: float
    avg_entropy: float

    def __post_init__(self) -> None:
        for name in ("beta", "h_store", "r_penalty", "avg_entropy"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class AllocationProblem:
    """A set of VMUs competing for a shared pseudonym budget."""

    vmus: tuple[tuple[DemandModel, UtilityParams], ...]
    budget: int

    def __post_init__(self) -> None:
        if len(self.vmus) < 1:
            raise ValueError("at least one VMU required")
        if self.budget < 0:
            raise ValueError(f"budget must be >= 0, got {self.budget}")

    @property
    def size(self) -> int:
        return len(self.vmus)


@dataclass(frozen=True)
class AllocationPlan:
    """Non-negative pseudonym counts, one per VMU."""

    r: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(x < 0 for x in self.r):
            raise ValueError("allocation counts must be >= 0")

    @property
    def total(self) -> int:
        return sum(self.r)


@dataclass(frozen=True)
class GAConfig:
    """Genetic-algorithm settings; defaults are recorded in every report."""

    population: int = 64
    generations: int = 200
    tournament_size: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float = 0.05
    elitism: int = 2

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ValueError(f"population must be >= 2, got {self.population}")
        if self.generations < 1:
            raise ValueError(f"generations must be >= 1, got {self.generations}")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must be in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be in [0, population)")


def realized_utility(r: int, d: int, params: UtilityParams) -> float:
    """Utility of stocking r pseudonyms against a realized demand of d changes."""
    if r < 0 or d < 0:
        raise ValueError("r and d must be >= 0")
    executed = min(r, d)
    leftover = max(r - d, 0)
    shortage = max(d - r, 0)
    return (
        params.beta * params.avg_entropy * executed
        - params.h_store * leftover
        - params.r_penalty * shortage
    )


def expected_utility(
    r: int,
    model: DemandModel,
    params: UtilityParams,
    epsilon: float = DEFAULT_TAIL_EPSILON,
) -> float:
    """Exact expected utility of stocking r under Poisson demand.

    Sums realized utility over the truncated pmf; the tail beyond the
    truncation point is all shortage and is accounted for exactly through
    the Poisson mean identity.
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    probs, tail = extend_pmf(demand_pmf(model, epsilon), model, r + 1)
    d = np.arange(len(probs))
    body = float(
        np.dot(
            probs,
            params.beta * params.avg_entropy * np.minimum(r, d)
            - params.h_store * np.maximum(r - d, 0)
            - params.r_penalty * np.maximum(d - r, 0),
        )
    )
    # Demands beyond the support are all > r: profit saturates at r changes
    # and the penalty grows linearly; E[D 1{D>N}] = lam - sum(d p(d)).
    gain_rate = params.beta * params.avg_entropy + params.r_penalty
    tail_mean = max(0.0, model.rate - float(np.dot(d, probs)))
    return body + tail * gain_rate * r - params.r_penalty * tail_mean


def marginal_gain(
    r: int,
    model: DemandModel,
    params: UtilityParams,
    epsilon: float = DEFAULT_TAIL_EPSILON,
) -> float:
    """Expected gain of one extra pseudonym at stock level r.

    Closed form: (beta*H + r_penalty) * P(D > r) - h_store * P(D <= r).
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    probs, _ = extend_pmf(demand_pmf(model, epsilon), model, r)
    cdf_r = float(probs[: r + 1].sum())
    p_gt = max(0.0, 1.0 - cdf_r)
    return (
        params.beta * params.avg_entropy + params.r_penalty
    ) * p_gt - params.h_store * cdf_r


def expected_utility_curve(
    model: DemandModel,
    params: UtilityParams,
    r_max: int,
    epsilon: float = DEFAULT_TAIL_EPSILON,
) -> np.ndarray:
    """Expected utility for every stock level 0..r_max, vectorized.

    Uses the exact Poisson identities E[min(r,D)] = M(r-1) + r*P(D>=r) and
    E[(D-r)+] = lam - E[min(r,D)], where M is the partial first moment.
    Agrees with ``expected_utility`` to float precision.
    """
    probs, _ = extend_pmf(demand_pmf(model, epsilon), model, r_max + 1)
    d = np.arange(len(probs))
    cdf = np.concatenate(([0.0], np.cumsum(probs)))  # cdf[k] = P(D <= k-1)
    pm = np.concatenate(([0.0], np.cumsum(d * probs)))
    if len(cdf) <= r_max:
        # support saturated below r_max (tail mass hit zero); pad the tails
        pad = r_max + 1 - len(cdf)
        cdf = np.concatenate([cdf, np.full(pad, cdf[-1])])
        pm = np.concatenate([pm, np.full(pad, pm[-1])])
    r = np.arange(r_max + 1)
    e_min = pm[r] + r * (1.0 - cdf[r])
    e_over = r * cdf[r] - pm[r]
    e_short = model.rate - e_min
    return (
        params.beta * params.avg_entropy * e_min
        - params.h_store * e_over
        - params.r_penalty * e_short
    )


def global_expected_utility(problem: AllocationProblem, plan: AllocationPlan) -> float:
    """Sum of per-VMU expected utilities under a plan."""
    if len(plan.r) != problem.size:
        raise ValueError("plan length does not match problem size")
    return sum(
        expected_utility(r_i, model, params)
        for r_i, (model, params) in zip(plan.r, problem.vmus)
    )


def equal_allocation(problem: AllocationProblem) -> AllocationPlan:
    """Baseline: floor(budget/m) pseudonyms each; the remainder is withheld."""
    share = problem.budget // problem.size
    return AllocationPlan(r=(share,) * problem.size)


def optimize_exact(problem: AllocationProblem) -> AllocationPlan:
    """Exact optimum by greedy marginal allocation.

    Valid because each VMU's expected utility is discretely concave, so the
    separable objective is maximized by repeatedly granting one pseudonym
    to the VMU with the largest positive marginal gain. Ties break toward
    the lowest VMU index.
    """
    m = problem.size
    r = [0] * m
    # cdf[i][k] = P(D_i <= k); marginal at stock k needs cdf through budget
    cdfs = []
    for model, _ in problem.vmus:
        probs, _ = extend_pmf(
            demand_pmf(model, DEFAULT_TAIL_EPSILON), model, problem.budget
        )
        cdfs.append(np.minimum(np.cumsum(probs), 1.0))

    def marg(i: int) -> float:
        model, params = problem.vmus[i]
        k = r[i]
        cdf_k = float(cdfs[i][k]) if k < len(cdfs[i]) else 1.0
        p_gt = max(0.0, 1.0 - cdf_k)
        return (
            params.beta * params.avg_entropy + params.r_penalty
        ) * p_gt - params.h_store * cdf_k

    for _ in range(problem.budget):
        best_i = -1
        best_gain = 0.0
        for i in range(m):
            g = marg(i)
            if g > best_gain:
                best_gain = g
                best_i = i
        if best_i < 0:
            break
        r[best_i] += 1
    return AllocationPlan(r=tuple(r))


def _repair(pop: np.ndarray, budget: int) -> np.ndarray:
    """Scale infeasible rows down proportionally, then floor to integers."""
    totals = pop.sum(axis=1)
    bad = totals > budget
    if bad.any():
        scale = budget / totals[bad]
        pop[bad] = np.floor(pop[bad] * scale[:, None]).astype(pop.dtype)
    return pop


def optimize_ga(
    problem: AllocationProblem,
    ga: GAConfig = GAConfig(),
    seed=0,
) -> AllocationPlan:
    """Approximate optimum by a seeded genetic algorithm.

    The equal-distribution plan is injected into generation zero and
    elitism preserves the best individual, so the result never scores
    below the baseline. Deterministic for a fixed seed.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    m = problem.size
    budget = problem.budget
    curves = np.stack(
        [
            expected_utility_curve(model, params, budget)
            for model, params in problem.vmus
        ]
    )  # (m, budget+1)
    cols = np.arange(m)

    def fitness(pop: np.ndarray) -> np.ndarray:
        return curves[cols, pop].sum(axis=1)

    pop = rng.integers(0, budget + 1, size=(ga.population, m), dtype=np.int64)
    pop = _repair(pop, budget)
    pop[0] = np.asarray(equal_allocation(problem).r, dtype=np.int64)

    best_vec = pop[0].copy()
    best_fit = float(fitness(pop[:1])[0])

    n_off = ga.population - ga.elitism
    for _ in range(ga.generations):
        fit = fitness(pop)
        gen_best = int(np.argmax(fit))
        if fit[gen_best] > best_fit:
            best_fit = float(fit[gen_best])
            best_vec = pop[gen_best].copy()

        elite_idx = np.argsort(-fit, kind="stable")[: ga.elitism]
        contenders = rng.integers(0, ga.population, size=(n_off, 2, ga.tournament_size))
        winners = contenders[
            np.arange(n_off)[:, None],
            np.arange(2)[None, :],
            np.argmax(fit[contenders], axis=2),
        ]  # (n_off, 2) parent indices
        pa, pb = pop[winners[:, 0]], pop[winners[:, 1]]

        cross = rng.random(n_off) < ga.crossover_rate
        take_b = (rng.random((n_off, m)) < 0.5) & cross[:, None]
        children = np.where(take_b, pb, pa)

        mutate = rng.random((n_off, m)) < ga.mutation_rate
        steps = rng.poisson(1.0, size=(n_off, m))
        signs = rng.integers(0, 2, size=(n_off, m)) * 2 - 1
        children = np.maximum(children + mutate * signs * steps, 0)
        children = _repair(children.astype(np.int64), budget)

        pop = np.concatenate([pop[elite_idx], children])

    fit = fitness(pop)
    gen_best = int(np.argmax(fit))
    if fit[gen_best] > best_fit:
        best_vec = pop[gen_best].copy()
    return AllocationPlan(r=tuple(int(x) for x in best_vec))
