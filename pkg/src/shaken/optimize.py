"""Heuristic ground-state search with the shaken dynamics.

When ``q`` exceeds :func:`q_threshold` the doubled Hamiltonian is
minimized on the diagonal, so the chain concentrates on minimizers of
``H(sigma)``. A single-spin-flip heat bath with a matched budget of
attempted updates serves as the baseline.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from shaken.dynamics import _HeatBath, initial_configuration, run
from shaken.graph import DoublingGraph, InteractionGraph, Orientation, build_doubling
from shaken.hamiltonian import _energy
from shaken.lattice import TorusLattice
from shaken.rng import Phase, RngStream

SOLVER_KERNELS = ("shaken", "shaken-reversed", "alternate")
RAMP_STAGES = 32
RECOMPUTE_EVERY = 1024


def q_threshold(graph: InteractionGraph | DoublingGraph, orientation: Orientation | None = None) -> float:
    """Smallest q above which pair minimizers are diagonal.

    Per vertex, the larger of the ``|J|`` sums over its incoming and its
    outgoing interaction edges, plus ``|lambda_x|``; maximized over vertices.
    Accepts a doubling graph or a parent graph with its orientation.
    """
    if isinstance(graph, DoublingGraph):
        n, tails, heads, w = graph.n, graph.tails, graph.heads, graph.weights
        lam = graph.fields
    else:
        if orientation is None:
            raise ValueError("an InteractionGraph needs its orientation")
        n, tails, heads = graph.n, orientation.tails(), orientation.heads()
        w, lam = graph.couplings, graph.fields
    out_sum = np.bincount(tails, weights=np.abs(w), minlength=n) if len(w) else np.zeros(n)
    in_sum = np.bincount(heads, weights=np.abs(w), minlength=n) if len(w) else np.zeros(n)
    return float(np.max(np.maximum(out_sum, in_sum) + np.abs(lam)))


def ea_instance(L: int, seed: int) -> InteractionGraph:
    """Edwards-Anderson +-1 couplings on the L x L torus, zero field.

    Edge order follows :meth:`TorusLattice.graph`; the sign of edge ``k``
    is drawn from the counter stream at ``(seed, k)``.
    """
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    lattice = TorusLattice(L)
    u = RngStream(seed).uniform(0, Phase.COUPLING, np.arange(2 * lattice.n))
    g, _ = lattice.graph(np.where(u < 0.5, 1.0, -1.0), 0.0)
    return g


def ea_orientation(L: int) -> Orientation:
    """Down-left orientation matching :func:`ea_instance`'s edge order."""
    return TorusLattice(L).graph()[1]


@dataclass
class OptimizationRun:
    instance: str
    kernel: str
    q: float | None
    steps: int
    seed: int
    schedule: str
    best_energy: float
    best_config: np.ndarray
    trace: np.ndarray  # best energy after each sweep, row 0 = initial
    energies: np.ndarray
    attempted_updates: int
    wall_clock: float
    threshold: float | None = None
    warning: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def time_to_best(self) -> int:
        """First trace row at which the final best energy was reached."""
        return int(np.argmax(self.trace <= self.best_energy))

    @property
    def guaranteed(self) -> bool:
        return self.threshold is not None and self.q is not None and self.q > self.threshold

    def best_string(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.best_config)

    def trace_csv(self) -> str:
        rows = ["sweep,energy,magnetization,best_energy"]
        mags = self.extra.get("magnetization", np.full(len(self.trace), math.nan))
        for k, (e, m, b) in enumerate(zip(self.energies, mags, self.trace)):
            rows.append(f"{k},{float(e)!r},{float(m)!r},{float(b)!r}")
        return "\n".join(rows) + "\n"


def _schedule(sweeps: int, ramp: float | None) -> list[tuple[float, int]]:
    if ramp is None or ramp == 1.0 or sweeps == 0:
        return [(1.0, sweeps)]
    if ramp <= 0:
        raise ValueError("ramp factor must be positive")
    stages = min(RAMP_STAGES, sweeps)
    sizes = [len(c) for c in np.array_split(np.arange(sweeps), stages)]
    return [(ramp ** (k / max(1, stages - 1)), m) for k, m in enumerate(sizes)]


def solve(
    graph: InteractionGraph,
    orientation: Orientation,
    q: float,
    kernel: str = "shaken",
    sweeps: int = 1000,
    seed: int = 0,
    ramp: float | None = None,
    init="random",
    workers: int = 1,
    instance: str = "",
) -> OptimizationRun:
    """Minimize ``H(sigma)`` by running a shaken-type chain on the doubling.

    The best configuration is read on the diagonal after each full step.
    ``ramp`` multiplies ``(J, lambda)`` geometrically from 1 to ``ramp``
    over at most 32 stages while ``q`` stays fixed.
    """
    if kernel not in SOLVER_KERNELS:
        raise ValueError(f"unknown solver kernel {kernel!r}")
    threshold = q_threshold(graph, orientation)
    warning = None
    if not q > threshold:
        warning = f"q={q} does not exceed the threshold {threshold}; no ground-state guarantee"
    start = time.perf_counter()
    s = initial_configuration(graph, seed, init)
    best_e = _energy(graph, s.astype(float))
    best_s = s.copy()
    energies, bests, mags = [best_e], [best_e], [float(s.mean())]

    def track(state):
        nonlocal best_e, best_s
        if state.sweep == 0:
            return
        cur = state.current
        e = _energy(graph, cur.astype(float))
        if e < best_e:
            best_e, best_s = e, cur.copy()
        energies.append(e)
        bests.append(best_e)
        mags.append(float(cur.mean()))

    done = 0
    for beta, count in _schedule(sweeps, ramp):
        d = build_doubling(graph.scaled(beta) if beta != 1.0 else graph, orientation, q)
        state, _ = run(d, kernel, count, seed=seed, observers=[track], init=s,
                       workers=workers, first_sweep=done)
        s = state.current
        done += count
    return OptimizationRun(
        instance=instance, kernel=kernel, q=q, steps=sweeps, seed=seed,
        schedule="constant" if ramp in (None, 1.0) else f"geometric ramp x{ramp}",
        best_energy=best_e, best_config=best_s, trace=np.array(bests),
        energies=np.array(energies), attempted_updates=2 * len(graph.free_sites) * sweeps,
        wall_clock=time.perf_counter() - start, threshold=threshold, warning=warning,
        extra={"magnetization": np.array(mags)},
    )


def paired_flips(graph: InteractionGraph, sweeps: int) -> int:
    """Heat-bath budget matching ``sweeps`` shaken sweeps (2 updates per free site each)."""
    return 2 * len(graph.free_sites) * sweeps


def baseline_solve(graph: InteractionGraph, flips: int, seed: int = 0, init="random",
                   instance: str = "") -> OptimizationRun:
    """Single-spin-flip heat bath for ``flips`` attempted updates.

    A trace row is written every ``|free sites|`` flips (and after the last).
    """
    if flips < 0:
        raise ValueError("flips must be >= 0")
    start = time.perf_counter()
    s = initial_configuration(graph, seed, init)
    e = _energy(graph, s.astype(float))
    best_e, best_s = e, s.copy()
    energies, bests, mags = [e], [e], [float(s.mean())]
    hb = _HeatBath(graph, RngStream(seed))
    spins = s.astype(int).tolist()
    block = len(graph.free_sites)
    for row, pos in enumerate(range(0, flips, block), 1):
        e += hb.flips(spins, pos, min(block, flips - pos))
        if row % RECOMPUTE_EVERY == 0:
            exact = _energy(graph, np.array(spins, dtype=float))
            if abs(exact - e) > 1e-6:
                raise RuntimeError(f"incremental energy drifted by {exact - e:.3g}")
            e = exact
        if e < best_e - 1e-9:
            cur = np.array(spins, dtype=np.int8)
            e = _energy(graph, cur.astype(float))
            if e < best_e:
                best_e, best_s = e, cur
        energies.append(e)
        bests.append(best_e)
        mags.append(sum(spins) / len(spins))
    return OptimizationRun(
        instance=instance, kernel="heatbath", q=None, steps=flips, seed=seed,
        schedule="constant", best_energy=best_e, best_config=best_s, trace=np.array(bests),
        energies=np.array(energies), attempted_updates=flips,
        wall_clock=time.perf_counter() - start, extra={"magnetization": np.array(mags)},
    )


def compare(runs: list[OptimizationRun]) -> list[dict]:
    """One row per run, in input order."""
    return [
        {
            "instance": r.instance,
            "kernel": r.kernel,
            "q": r.q,
            "seed": r.seed,
            "best_energy": float(np.min(r.trace)),
            "time_to_best": r.time_to_best,
            "wall_clock": r.wall_clock,
            "attempted_updates": r.attempted_updates,
        }
        for r in runs
    ]


def format_compare(rows: list[dict]) -> str:
    cols = ["instance", "kernel", "q", "seed", "best_energy", "time_to_best",
            "attempted_updates", "wall_clock"]
    lines = ["\t".join(cols)]
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            cells.append(f"{v:.4f}" if isinstance(v, float) else str(v))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"
