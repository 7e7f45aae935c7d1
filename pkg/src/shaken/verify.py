"""Small-system verification suite built on the exact oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from shaken.exact import (
    diagonal_minimum_check,
    detailed_balance_check,
    detailed_balance_gap,
    exact_kernel,
    gibbs_distribution,
    marginal_identity_check,
    pair_gibbs,
    shaken_stationary,
    stationary_check,
    unpacked_weight_check,
)
from shaken.graph import DoublingGraph, InteractionGraph, Orientation, build_doubling, orient
from shaken.optimize import q_threshold

# name -> (budget, kind); "max" passes when value <= budget, "min" when value > budget
DEFAULT_BUDGETS = {
    "kernel_row_sums": (1e-12, "max"),
    "stationarity_shaken": (1e-12, "max"),
    "stationarity_shaken_reversed": (1e-12, "max"),
    "detailed_balance_shaken": (1e-13, "max"),
    "marginal_identity": (1e-13, "max"),
    "stationarity_alternate": (1e-12, "max"),
    "alternate_nonreversibility_witness": (1e-6, "min"),
    "heatbath_stationarity": (1e-13, "max"),
    "unpacked_weight_identity": (1e-12, "max"),
    "diagonal_minimum_identity": (1e-9, "max"),
}


@dataclass
class CheckResult:
    name: str
    value: float
    budget: float
    kind: str = "max"

    @property
    def passed(self) -> bool:
        return self.value <= self.budget if self.kind == "max" else self.value > self.budget


def random_doubling(rng: np.random.Generator, max_free: int = 4, max_frozen: int = 1,
                    J_range=(-2.0, 2.0), lam_range=(-1.0, 1.0), q_range=(0.0, 3.0),
                    edge_prob: float = 0.6) -> DoublingGraph:
    """Random small doubling graph with a seeded random orientation."""
    n_free = int(rng.integers(1, max_free + 1))
    n_frozen = int(rng.integers(0, max_frozen + 1))
    n = n_free + n_frozen
    edges = [(i, j, rng.uniform(*J_range))
             for i in range(n) for j in range(i + 1, n) if rng.random() < edge_prob]
    frozen_ids = rng.permutation(n)[:n_frozen]
    frozen = {int(x): int(rng.choice([-1, 1])) for x in frozen_ids}
    g = InteractionGraph(n, edges, rng.uniform(*lam_range, size=n), frozen)
    return build_doubling(g, orient(g, seed=int(rng.integers(2**32))), rng.uniform(*q_range))


def random_graph(rng: np.random.Generator, n_max: int = 10, integer: bool = False,
                 edge_prob: float = 0.5) -> InteractionGraph:
    n = int(rng.integers(2, n_max + 1))
    if integer:
        draw_j = lambda: float(rng.integers(-3, 4))
        lam = rng.integers(-1, 2, size=n).astype(float)
    else:
        draw_j = lambda: float(rng.uniform(-2, 2))
        lam = rng.uniform(-1, 1, size=n)
    edges = [(i, j, draw_j()) for i in range(n) for j in range(i + 1, n) if rng.random() < edge_prob]
    return InteractionGraph(n, edges, lam)


def k22_doubling(weight: float = 1.0) -> DoublingGraph:
    """Two vertices joined by two opposite parallel edges: the doubled graph is K_{2,2}."""
    g = InteractionGraph(2, [(0, 1, weight), (0, 1, weight)], allow_parallel=True)
    return build_doubling(g, Orientation(((0, 1), (1, 0))), weight)


def k22_witness() -> float:
    """Detailed-balance gap of the alternate chain on K_{2,2} between
    ``(++, ++)`` and ``(++, --)`` (second copy flipped everywhere)."""
    d = k22_doubling()
    P = exact_kernel(d, "alt")
    N = 4
    all_plus, all_minus = N - 1, 0
    src = all_plus + N * all_plus
    dst = all_plus + N * all_minus
    return detailed_balance_gap(P, pair_gibbs(d), src, dst)


def run_verification(seed: int = 0, n_instances: int = 25, n_minimum: int = 20,
                     budgets: dict[str, float] | None = None) -> list[CheckResult]:
    """Run every check once and return one result per check, in a fixed order."""
    rng = np.random.default_rng(seed)
    docs = [random_doubling(rng) for _ in range(n_instances)]
    vals = {k: 0.0 for k in DEFAULT_BUDGETS}
    for d in docs:
        Psh = exact_kernel(d, "sh")
        Prev = exact_kernel(d, "sh-reversed")
        Palt = exact_kernel(d, "alt")
        Phb = exact_kernel(d.parent, "heatbath")
        pi = shaken_stationary(d)
        vals["kernel_row_sums"] = max(vals["kernel_row_sums"], Psh.row_sum_error(),
                                      Palt.row_sum_error(), Phb.row_sum_error())
        vals["stationarity_shaken"] = max(vals["stationarity_shaken"], stationary_check(Psh, pi))
        vals["stationarity_shaken_reversed"] = max(
            vals["stationarity_shaken_reversed"],
            stationary_check(Prev, shaken_stationary(d, reverse=True)))
        vals["detailed_balance_shaken"] = max(vals["detailed_balance_shaken"],
                                              detailed_balance_check(Psh, pi)[0])
        vals["marginal_identity"] = max(vals["marginal_identity"], marginal_identity_check(d))
        vals["stationarity_alternate"] = max(vals["stationarity_alternate"],
                                             stationary_check(Palt, pair_gibbs(d)))
        vals["heatbath_stationarity"] = max(vals["heatbath_stationarity"],
                                            stationary_check(Phb, gibbs_distribution(d.parent)))
    vals["alternate_nonreversibility_witness"] = k22_witness()
    vals["unpacked_weight_identity"] = unpacked_weight_check(3, 0.7, 1.1, -0.2)
    worst = 0.0
    for k in range(n_minimum):
        g = random_graph(rng, n_max=8, integer=bool(k % 2))
        o = orient(g, seed=k)
        d = build_doubling(g, o, q_threshold(g, o) + 0.01)
        worst = max(worst, abs(diagonal_minimum_check(d).gap))
    vals["diagonal_minimum_identity"] = worst

    budgets = budgets or {}
    unknown = set(budgets) - set(DEFAULT_BUDGETS)
    if unknown:
        raise KeyError(f"unknown checks: {sorted(unknown)}")
    return [
        CheckResult(name, vals[name], budgets.get(name, budget), kind)
        for name, (budget, kind) in DEFAULT_BUDGETS.items()
    ]


def format_report(results: list[CheckResult]) -> str:
    lines = []
    for r in results:
        op = "<=" if r.kind == "max" else ">"
        lines.append(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.value:.3e} {op} {r.budget:.1e}")
    lines.append("")
    for r in results:
        lines.append(f"{r.name} {r.value!r}")
    lines.append(f"all_passed {str(all(r.passed for r in results)).lower()}")
    return "\n".join(lines) + "\n"
