"""Brute-force oracle for small systems.

Configurations of the free sites are indexed little-endian: bit ``i`` of
the index is the spin of the ``i``-th free site (in increasing vertex
order), with bit value 1 meaning +1. Frozen sites always hold their
boundary value. Pair configurations ``(s1, s2)`` use index ``i1 + N * i2``
with ``N = 2**free``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from shaken.graph import DoublingGraph, InteractionGraph
from shaken.hamiltonian import _energy, _log_weight, _pair_energy, fields_12, fields_21, log2cosh
from shaken.lattice import TorusLattice, z2_doubling

MAX_STATES = 2**14
MAX_FREE_SINGLE = 24
MAX_FREE_PAIR = 12

KERNEL_IDS = ("12", "21", "sh", "sh-reversed", "alt", "heatbath")


class SizeCapError(ValueError):
    """System too large for exhaustive enumeration."""


@dataclass(frozen=True)
class ExactDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0) or abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError("not a probability vector")
        object.__setattr__(self, "probs", p)

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __len__(self):
        return len(self.probs)


@dataclass(frozen=True)
class ExactKernel:
    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        P = np.asarray(self.matrix, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("kernel must be a square matrix")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0), initial=0.0) > 1e-12:
            raise ValueError("kernel is not row-stochastic")
        object.__setattr__(self, "matrix", P)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    def row_sum_error(self) -> float:
        """Largest ``|sum_j P_ij - 1|``, rows summed with ``math.fsum``."""
        return max(abs(math.fsum(row) - 1.0) for row in self.matrix)


def _normalize_log(logw: np.ndarray) -> np.ndarray:
    w = np.exp(logw - logw.max())
    return w / math.fsum(w)


def enumerate_configurations(graph: InteractionGraph, cap: int = MAX_FREE_SINGLE) -> np.ndarray:
    """All ``2**free`` configurations as an ``(N, n)`` int8 array in index order."""
    free = graph.free_sites
    if len(free) > cap:
        raise SizeCapError(f"{len(free)} free sites exceed the enumeration cap of {cap}")
    idx = np.arange(2 ** len(free), dtype=np.int64)
    bits = (idx[:, None] >> np.arange(len(free))) & 1
    out = np.empty((len(idx), graph.n), dtype=np.int8)
    out[:, free] = 2 * bits - 1
    if graph.frozen:
        out[:, graph.frozen_sites] = graph.frozen_values
    return out


def configuration_index(graph: InteractionGraph, sigma) -> int:
    s = np.asarray(sigma)[graph.free_sites]
    return int(np.sum((s > 0).astype(np.int64) << np.arange(len(s))))


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def _product_kernel(d: DoublingGraph, configs: np.ndarray, which: str) -> np.ndarray:
    free = d.parent.free_sites
    h = (fields_12 if which == "12" else fields_21)(d, configs)[:, free]
    c = configs[:, free].astype(float)
    logp = h @ c.T - log2cosh(h).sum(axis=1, keepdims=True)
    return np.exp(logp)


def _heat_bath_kernel(g: InteractionGraph, configs: np.ndarray) -> np.ndarray:
    free = g.free_sites
    n_states = len(configs)
    P = np.zeros((n_states, n_states))
    local = configs.astype(float) @ g.coupling_matrix.toarray() + 2.0 * g.fields
    for k, x in enumerate(free):
        f = local[:, x]
        s = configs[:, x].astype(float)
        flip = 1.0 / (1.0 + np.exp(2.0 * s * f))
        j = np.arange(n_states) ^ (1 << k)
        P[np.arange(n_states), j] += flip / len(free)
        P[np.arange(n_states), np.arange(n_states)] += (1.0 - flip) / len(free)
    return P


def exact_kernel(model: DoublingGraph | InteractionGraph, which: str) -> ExactKernel:
    """Transition matrix of kernel ``which`` over enumerated configurations.

    ``"12"``, ``"21"``: parallel half-steps; ``"sh"`` = 12 then 21;
    ``"sh-reversed"`` = 21 then 12; ``"alt"``: the alternate chain on pair
    indices; ``"heatbath"``: random-site single flip (accepts a plain graph).
    """
    if which not in KERNEL_IDS:
        raise ValueError(f"unknown kernel {which!r}; choose from {KERNEL_IDS}")
    g = model.parent if isinstance(model, DoublingGraph) else model
    n_free = len(g.free_sites)
    dim = 4**n_free if which == "alt" else 2**n_free
    if dim > MAX_STATES:
        raise SizeCapError(f"{dim} states exceed the kernel cap of {MAX_STATES}")
    configs = enumerate_configurations(g)
    if which == "heatbath":
        return ExactKernel(_heat_bath_kernel(g, configs), which)
    if not isinstance(model, DoublingGraph):
        raise TypeError(f"kernel {which!r} needs a DoublingGraph")
    if which in ("12", "21"):
        return ExactKernel(_product_kernel(model, configs, which), which)
    P12 = _product_kernel(model, configs, "12")
    P21 = _product_kernel(model, configs, "21")
    if which == "sh":
        return ExactKernel(P12 @ P21, which)
    if which == "sh-reversed":
        return ExactKernel(P21 @ P12, which)
    N = len(configs)
    # A[i1, j2, j1] = P12[i1, j2] * P21[j2, j1]; column index j1 + N * j2
    A = P12[:, :, None] * P21[None, :, :]
    block = A.reshape(N, N * N)
    return ExactKernel(np.tile(block, (N, 1)), which)


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

def shaken_stationary(d: DoublingGraph, reverse: bool = False) -> ExactDistribution:
    """``Z_sigma / Z`` from the closed-form weight (``reverse``: left sums)."""
    configs = enumerate_configurations(d.parent)
    return ExactDistribution(_normalize_log(_log_weight(d, configs.astype(float), reverse)))


def gibbs_distribution(g: InteractionGraph) -> ExactDistribution:
    configs = enumerate_configurations(g)
    return ExactDistribution(_normalize_log(-_energy(g, configs.astype(float))))


def _pair_energy_matrix(d: DoublingGraph, configs: np.ndarray) -> np.ndarray:
    s = configs.astype(float)
    W = d.out_matrix.toarray() + d.q * np.eye(d.n)
    lam = s @ d.fields
    return -(s @ W) @ s.T - lam[:, None] - lam[None, :]


def pair_gibbs(d: DoublingGraph) -> ExactDistribution:
    """Doubled Gibbs measure ``exp(-H(s1, s2)) / Z`` on pair indices ``i1 + N*i2``."""
    g = d.parent
    if 4 ** len(g.free_sites) > MAX_STATES:
        raise SizeCapError("pair measure too large")
    E = _pair_energy_matrix(d, enumerate_configurations(g))
    # E[i1, i2] -> flat index i1 + N * i2 is column-major
    return ExactDistribution(_normalize_log(-E.flatten(order="F")))


def stationary_residual_vector(P, pi) -> np.ndarray:
    P, pi = np.asarray(P), np.asarray(pi)
    return pi @ P - pi


def stationary_check(P, pi) -> float:
    """``max_tau |sum_sigma pi(sigma) P(sigma, tau) - pi(tau)|``."""
    P, pi = np.asarray(P), np.asarray(pi)
    if P.shape[0] != len(pi):
        raise ValueError(f"kernel has {P.shape[0]} states, distribution {len(pi)}")
    return float(np.max(np.abs(stationary_residual_vector(P, pi))))


def detailed_balance_check(P, pi) -> tuple[float, tuple[int, int]]:
    """Largest ``|pi(s) P(s, t) - pi(t) P(t, s)|`` and the ``(s, t)`` where it occurs."""
    P, pi = np.asarray(P), np.asarray(pi)
    flow = pi[:, None] * P
    gap = np.abs(flow - flow.T)
    i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    return float(gap[i, j]), (int(i), int(j))


def detailed_balance_gap(P, pi, i: int, j: int) -> float:
    P, pi = np.asarray(P), np.asarray(pi)
    return float(abs(pi[i] * P[i, j] - pi[j] * P[j, i]))


def marginal_identity_check(d: DoublingGraph) -> float:
    """Max ``|P_sh(s1, t1) - sum_t2 P_alt((s1, s2), (t1, t2))|`` over all ``s2``."""
    Psh = exact_kernel(d, "sh").matrix
    Palt = exact_kernel(d, "alt").matrix
    N = Psh.shape[0]
    # rows i1 + N*i2, columns j1 + N*j2 -> [i2, i1, j2, j1]
    marg = Palt.reshape(N, N, N, N).sum(axis=2)
    return float(np.max(np.abs(marg - Psh[None, :, :])))


def tv_distance(mu, nu) -> float:
    """``0.5 * sum |mu - nu|``."""
    mu, nu = np.asarray(mu, dtype=float), np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise ValueError(f"supports differ: {mu.shape} vs {nu.shape}")
    return 0.5 * math.fsum(np.abs(mu - nu))


def stationary_by_power_iteration(P, tol: float = 1e-15, max_iter: int = 100_000) -> np.ndarray:
    """Left principal eigenvector of ``P`` by repeated multiplication from uniform."""
    P = np.asarray(P)
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt
        pi = nxt
    return pi


# ---------------------------------------------------------------------------
# Closed-form weight on the torus
# ---------------------------------------------------------------------------

def unpacked_log_weight(L: int, J: float, q: float, lam: float, configs: np.ndarray) -> np.ndarray:
    """``log Z_sigma`` as ``q|L| - H(sigma) + sum_x log(1 + delta e^{-2 g_x s_x - 2 lam s_x})``.

    ``g_x = J (s_down + s_left)`` and ``delta = e^{-2q}``; written from the
    torus neighbour maps, independently of the doubling-graph code.
    """
    lat = TorusLattice(L)
    s = np.asarray(configs, dtype=float)
    down, left, right, up = lat.down, lat.left, lat.right, lat.up
    g = J * (s[..., down] + s[..., left])
    h_single = -J * np.sum(s * (s[..., right] + s[..., up]), axis=-1) - 2.0 * lam * s.sum(axis=-1)
    z = -2.0 * q - 2.0 * g * s - 2.0 * lam * s
    return q * lat.n - h_single + np.logaddexp(0.0, z).sum(axis=-1)


def unpacked_weight_check(L: int, J: float, q: float, lam: float,
                          samples: int | None = None, seed: int = 0) -> float:
    """Max relative gap between the product formula and the log-cosh weight.

    Exhaustive when ``L*L <= 14`` and ``samples`` is None; otherwise
    ``samples`` random configurations (always including all-plus).
    """
    d = z2_doubling(L, J, q, lam)
    n = L * L
    if samples is None:
        if n > 14:
            raise SizeCapError(f"{n} sites: pass samples= for spot checks")
        configs = enumerate_configurations(d.parent)
    else:
        rng = np.random.default_rng(seed)
        configs = np.vstack([np.ones((1, n), dtype=np.int8),
                             rng.choice(np.array([-1, 1], dtype=np.int8), size=(samples, n))])
    a = unpacked_log_weight(L, J, q, lam, configs)
    b = _log_weight(d, configs.astype(float))
    return float(np.max(np.abs(np.expm1(a - b))))


# ---------------------------------------------------------------------------
# Exhaustive minimization
# ---------------------------------------------------------------------------

def brute_force_min(g: InteractionGraph, atol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Minimum of ``H(sigma)`` and all minimizing configurations (rows)."""
    configs = enumerate_configurations(g, MAX_FREE_SINGLE)
    e = np.atleast_1d(_energy(g, configs.astype(float)))
    best = float(e.min())
    return best, configs[e <= best + atol]


def brute_force_pair_min(d: DoublingGraph, atol: float = 1e-9) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Minimum of ``H(s1, s2)`` over all pairs and every minimizing pair."""
    configs = enumerate_configurations(d.parent, MAX_FREE_PAIR)
    E = _pair_energy_matrix(d, configs)
    best = float(E.min())
    i1, i2 = np.nonzero(E <= best + atol)
    return best, [(configs[a], configs[b]) for a, b in zip(i1, i2)]


@dataclass
class DiagonalMinimumReport:
    q: float
    threshold: float
    pair_min: float
    single_min: float
    n_vertices: int
    diagonal_only: bool
    non_diagonal: list

    @property
    def hypothesis(self) -> bool:
        return self.q > self.threshold

    @property
    def gap(self) -> float:
        """``min H(s, t) - (min H(s) - q|V|)``; zero when the identity holds."""
        return self.pair_min - (self.single_min - self.q * self.n_vertices)


def diagonal_minimum_check(d: DoublingGraph) -> DiagonalMinimumReport:
    """Compare the exhaustive pair minimum with ``min H(sigma) - q|V|``.

    Reports any non-diagonal pair minimizer instead of asserting; below the
    threshold such minimizers can exist.
    """
    from shaken.optimize import q_threshold

    pair_min, pairs = brute_force_pair_min(d)
    single_min, _ = brute_force_min(d.parent)
    off = [(a, b) for a, b in pairs if np.any(a != b)]
    return DiagonalMinimumReport(d.q, q_threshold(d), pair_min, single_min, d.n, not off, off)
