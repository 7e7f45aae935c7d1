"""Stochastic kernels: parallel half-steps, shaken and alternate chains,
and a single-spin-flip heat-bath baseline.

Every random number comes from :class:`~shaken.rng.RngStream` addressed
by ``(sweep, phase, site, replica)``. A half-step reads only the old
configuration, so splitting its site range across worker threads cannot
change the result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from shaken.graph import DoublingGraph, InteractionGraph
from shaken.hamiltonian import _energy, check_spins
from shaken.rng import Phase, RngStream

KERNELS = ("shaken", "shaken-reversed", "alternate", "heatbath")


class NumericError(ArithmeticError):
    """Non-finite local field encountered during an update."""


@lru_cache(maxsize=None)
def _pool(workers: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="shaken")


def plus_probability(h) -> np.ndarray:
    """``P(+1) = e^h / (2 cosh h) = 1 / (1 + e^{-2h})`` without overflow."""
    return expit(2.0 * np.asarray(h, dtype=float))


def _counter_shapes(batch_shape, sweep, replica):
    sweep = np.asarray(sweep, dtype=np.uint64)
    if replica is None:
        replica = np.arange(int(np.prod(batch_shape)), dtype=np.uint64).reshape(batch_shape)
    replica = np.asarray(replica, dtype=np.uint64)
    # trailing axis for sites
    return sweep.reshape(sweep.shape + (1,)), replica.reshape(replica.shape + (1,))


def _uniforms(rng: RngStream, sweep_c, phase, sites, rep_c, workers):
    if workers <= 1 or len(sites) < 2 * workers:
        return rng.uniform(sweep_c, phase, sites, rep_c)
    chunks = np.array_split(sites, workers)
    parts = _pool(workers).map(lambda c: rng.uniform(sweep_c, phase, c, rep_c), chunks)
    return np.concatenate(list(parts), axis=-1)


def _half_step(d: DoublingGraph, s: np.ndarray, rng: RngStream, sweep, phase, replica,
               workers, u=None):
    free = d.parent.free_sites
    matrix = d.in_matrix if phase == Phase.HALF_12 else d.out_matrix
    sf = s.astype(float)
    with np.errstate(over="ignore", invalid="ignore"):
        h = ((matrix @ sf.T).T + d.q * sf + d.fields)[..., free]
    if not np.all(np.isfinite(h)):
        raise NumericError("non-finite local field")
    if u is None:
        sweep_c, rep_c = _counter_shapes(s.shape[:-1], sweep, replica)
        u = _uniforms(rng, sweep_c, phase, free, rep_c, workers)
    out = np.array(s, dtype=np.int8, copy=True)
    out[..., free] = np.where(u < plus_probability(h), 1, -1)
    return out


def half_step_12(d: DoublingGraph, sigma, rng: RngStream, sweep=0, replica=None, workers: int = 1):
    """Resample every free site from ``P(+1) = 1/(1 + e^{-2 h^{1->2}(sigma)})``.

    ``sigma`` may be a stack ``(..., n)``; ``replica`` (default: flat index
    of the stack) and ``sweep`` broadcast over the leading axes.
    """
    s = check_spins(d.parent, sigma)
    return _half_step(d, s, rng, sweep, Phase.HALF_12, replica, workers)


def half_step_21(d: DoublingGraph, sigma, rng: RngStream, sweep=0, replica=None, workers: int = 1):
    """Mirror of :func:`half_step_12` driven by the out-edge field ``h^{2->1}``."""
    s = check_spins(d.parent, sigma)
    return _half_step(d, s, rng, sweep, Phase.HALF_21, replica, workers)


def shaken_step(d: DoublingGraph, sigma, rng: RngStream, sweep=0, replica=None, workers: int = 1):
    s = check_spins(d.parent, sigma)
    mid = _half_step(d, s, rng, sweep, Phase.HALF_12, replica, workers)
    return _half_step(d, mid, rng, sweep, Phase.HALF_21, replica, workers)


def reversed_shaken_step(d: DoublingGraph, sigma, rng: RngStream, sweep=0, replica=None, workers: int = 1):
    s = check_spins(d.parent, sigma)
    mid = _half_step(d, s, rng, sweep, Phase.HALF_21, replica, workers)
    return _half_step(d, mid, rng, sweep, Phase.HALF_12, replica, workers)


def alternate_step(d: DoublingGraph, pair, rng: RngStream, sweep=0, replica=None, workers: int = 1):
    """One step of the alternate chain on pairs; returns ``(tau1, tau2)``.

    The incoming second copy is ignored: ``tau2`` is drawn from ``sigma1``
    and ``tau1`` from ``tau2``. With equal counters the first copy matches
    :func:`shaken_step` bit for bit.
    """
    s1, s2 = pair
    s1 = check_spins(d.parent, s1)
    check_spins(d.parent, s2)
    t2 = _half_step(d, s1, rng, sweep, Phase.HALF_12, replica, workers)
    t1 = _half_step(d, t2, rng, sweep, Phase.HALF_21, replica, workers)
    return t1, t2


# ---------------------------------------------------------------------------
# Single-spin-flip heat bath
# ---------------------------------------------------------------------------

class _HeatBath:
    """Sequential heat-bath sweeper with incremental energy."""

    def __init__(self, g: InteractionGraph, rng: RngStream):
        if len(g.free_sites) == 0:
            raise ValueError("heat-bath dynamics needs at least one free site")
        self.g = g
        self.rng = rng
        m = g.coupling_matrix
        self.nbrs = [m.indices[m.indptr[x]:m.indptr[x + 1]].tolist() for x in range(g.n)]
        self.wts = [m.data[m.indptr[x]:m.indptr[x + 1]].tolist() for x in range(g.n)]
        self.lam2 = (2.0 * g.fields).tolist()
        self.free = g.free_sites.tolist()

    def flips(self, spins: list, start: int, count: int) -> float:
        """Apply flips ``start .. start+count-1`` in place; returns energy change."""
        if count <= 0:
            return 0.0
        steps = np.arange(start, start + count, dtype=np.uint64)
        u_site, u_acc = self.rng.uniform_pair(steps, Phase.BASELINE, 0)
        picks = np.minimum((u_site * len(self.free)).astype(np.int64), len(self.free) - 1)
        u_acc = u_acc.tolist()
        free, nbrs, wts, lam2 = self.free, self.nbrs, self.wts, self.lam2
        d_e = 0.0
        for i, k in enumerate(picks.tolist()):
            x = free[k]
            f = lam2[x]
            for y, w in zip(nbrs[x], wts[x]):
                f += w * spins[y]
            if not math.isfinite(f):
                raise NumericError("non-finite local field")
            new = 1 if u_acc[i] < _expit2(f) else -1
            if new != spins[x]:
                # H contains -s_x f, so flipping s_x changes it by 2 s_x f
                d_e += 2.0 * spins[x] * f
                spins[x] = new
        return d_e


def _expit2(f: float) -> float:
    if f >= 0:
        return 1.0 / (1.0 + math.exp(-2.0 * f))
    e = math.exp(2.0 * f)
    return e / (1.0 + e)


def heat_bath_step(g: InteractionGraph, sigma, rng: RngStream, step: int = 0) -> np.ndarray:
    """Resample one uniformly chosen free site from its conditional under ``H(sigma)``."""
    s = check_spins(g, sigma).astype(int).tolist()
    _HeatBath(g, rng).flips(s, step, 1)
    return np.array(s, dtype=np.int8)


# ---------------------------------------------------------------------------
# Chain driver
# ---------------------------------------------------------------------------

@dataclass
class ChainState:
    """Configuration after ``sweep`` sweeps plus running statistics.

    ``current`` is ``(n,)`` for one chain or ``(R, n)`` for replicas.
    ``partner`` holds the second copy for the alternate kernel.
    """

    current: np.ndarray
    sweep: int = 0
    partner: np.ndarray | None = None
    n_samples: int = 0
    energy_sum: np.ndarray | float = 0.0
    abs_mag_sum: np.ndarray | float = 0.0
    best_energy: np.ndarray | float = math.inf
    best_config: np.ndarray | None = None

    @property
    def mean_energy(self):
        return self.energy_sum / self.n_samples if self.n_samples else math.nan

    @property
    def mean_abs_magnetization(self):
        return self.abs_mag_sum / self.n_samples if self.n_samples else math.nan


@dataclass
class Trace:
    sweep: np.ndarray
    energy: np.ndarray
    magnetization: np.ndarray
    best_energy: np.ndarray
    attempted_updates: int = 0
    extra: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        if self.energy.ndim != 1:
            raise ValueError("CSV traces hold a single chain")
        rows = ["sweep,energy,magnetization,best_energy"]
        for k, e, m, b in zip(self.sweep, self.energy, self.magnetization, self.best_energy):
            rows.append(f"{int(k)},{float(e)!r},{float(m)!r},{float(b)!r}")
        return "\n".join(rows) + "\n"


def initial_configuration(g: InteractionGraph, seed: int, init="random", replicas: int | None = None):
    """Starting spins: ``"random"`` (seeded), ``"plus"``, ``"minus"`` or an array."""
    shape = (g.n,) if replicas is None else (replicas, g.n)
    if isinstance(init, str):
        if init == "plus":
            s = np.ones(shape, dtype=np.int8)
        elif init == "minus":
            s = -np.ones(shape, dtype=np.int8)
        elif init == "random":
            rep = 0 if replicas is None else np.arange(replicas)[:, None]
            u = RngStream(seed).uniform(0, Phase.INIT, np.arange(g.n), rep)
            s = np.where(u < 0.5, 1, -1).astype(np.int8)
        else:
            raise ValueError(f"unknown init {init!r}")
    else:
        s = np.broadcast_to(np.asarray(init, dtype=np.int8), shape).copy()
    if g.frozen:
        s[..., g.frozen_sites] = g.frozen_values
    return check_spins(g, s)


def run(
    model: DoublingGraph | InteractionGraph,
    kernel: str,
    sweeps: int,
    seed: int = 0,
    observers: Sequence[Callable[[ChainState], None]] = (),
    init="random",
    replicas: int | None = None,
    workers: int = 1,
    burn_in: int = 0,
    recompute_every: int = 1024,
    first_sweep: int = 0,
) -> tuple[ChainState, Trace]:
    """Apply ``kernel`` ``sweeps`` times and record one trace row per sweep.

    Row 0 is the initial state. The heat-bath kernel counts ``|free sites|``
    single flips as one sweep. Energies are ``H(sigma)`` of the current
    first-copy configuration; ``best_energy`` is its running minimum.
    Statistics in the returned state cover sweeps ``> burn_in``.
    ``first_sweep`` offsets the RNG sweep counter so that a run can be
    continued in stages without reusing random numbers.
    """
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {KERNELS}")
    if sweeps < 0:
        raise ValueError("sweeps must be >= 0")
    if kernel == "heatbath":
        g = model.parent if isinstance(model, DoublingGraph) else model
        if replicas is not None:
            raise ValueError("the heat-bath baseline runs a single chain")
    else:
        if not isinstance(model, DoublingGraph):
            raise TypeError(f"kernel {kernel!r} needs a DoublingGraph")
        g = model.parent

    rng = RngStream(seed)
    s = initial_configuration(g, seed, init, replicas)
    state = ChainState(current=s, partner=s.copy() if kernel == "alternate" else None)
    batch = s.shape[:-1]
    rows = sweeps + 1
    energies = np.empty((rows,) + batch)
    mags = np.empty((rows,) + batch)
    bests = np.empty((rows,) + batch)

    e = _energy(g, s.astype(float))
    state.best_energy = np.array(e, copy=True) if batch else e
    state.best_config = s.copy()

    def record(k, e):
        m = s.astype(float).mean(axis=-1)
        better = e < state.best_energy
        if batch:
            state.best_energy = np.where(better, e, state.best_energy)
            state.best_config[better] = s[better]
        elif better:
            state.best_energy = e
            state.best_config = s.copy()
        energies[k], mags[k], bests[k] = e, m, state.best_energy
        if k > burn_in:
            state.n_samples += 1
            state.energy_sum = state.energy_sum + e
            state.abs_mag_sum = state.abs_mag_sum + np.abs(m)
        state.sweep = k
        state.current = s
        for obs in observers:
            obs(state)

    record(0, e)
    n_free = len(g.free_sites)
    if kernel == "heatbath":
        hb = _HeatBath(g, rng)
        spins = s.astype(int).tolist()
        for k in range(1, rows):
            e += hb.flips(spins, (first_sweep + k - 1) * n_free, n_free)
            s = np.array(spins, dtype=np.int8)
            if k % recompute_every == 0:
                exact = _energy(g, s.astype(float))
                if abs(exact - e) > 1e-6:
                    raise RuntimeError(
                        f"incremental energy drifted by {exact - e:.3g} at sweep {k}")
                e = exact
            record(k, e)
        updates = sweeps * n_free
    else:
        d = model
        free = g.free_sites
        _, rep_c = _counter_shapes(batch, 0, None)
        block = max(1, 2**18 // max(1, s.size))
        first, second = ((Phase.HALF_21, Phase.HALF_12) if kernel == "shaken-reversed"
                         else (Phase.HALF_12, Phase.HALF_21))
        for b0 in range(0, sweeps, block):
            sw = np.arange(first_sweep + b0, first_sweep + min(b0 + block, sweeps), dtype=np.uint64)
            sw_c = sw.reshape((-1,) + (1,) * (len(batch) + 1))
            u1 = _uniforms(rng, sw_c, first, free, rep_c, workers)
            u2 = _uniforms(rng, sw_c, second, free, rep_c, workers)
            for i in range(len(sw)):
                mid = _half_step(d, s, rng, None, first, None, workers, u1[i])
                s = _half_step(d, mid, rng, None, second, None, workers, u2[i])
                if kernel == "alternate":
                    state.partner = mid
                record(b0 + i + 1, _energy(g, s.astype(float)))
        updates = sweeps * 2 * n_free * (int(np.prod(batch)) if batch else 1)

    trace = Trace(np.arange(rows), energies, mags, bests, attempted_updates=updates)
    return state, trace
