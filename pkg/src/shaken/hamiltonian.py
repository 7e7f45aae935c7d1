"""Single and pair energies, local fields and the shaken stationary weight.

Spin arrays hold +1/-1 and may carry leading batch axes: a configuration
has shape ``(n,)`` and a stack of ``R`` replicas has shape ``(R, n)``.
Temperature is folded into ``J``, ``lambda`` and ``q``.
"""

from __future__ import annotations

import numpy as np

from shaken.graph import DoublingGraph, InteractionGraph


class ConfigurationError(ValueError):
    """Spin array inconsistent with its graph."""


def check_spins(graph: InteractionGraph, spins) -> np.ndarray:
    """Validate a configuration (or stack) against ``graph`` and return it as an array."""
    s = np.asarray(spins)
    if s.ndim == 0 or s.shape[-1] != graph.n:
        raise ConfigurationError(
            f"configuration has {s.shape[-1] if s.ndim else 0} sites, graph has {graph.n}")
    if not np.all(np.abs(s) == 1):
        raise ConfigurationError("spins must be +1 or -1")
    if graph.frozen and np.any(s[..., graph.frozen_sites] != graph.frozen_values):
        raise ConfigurationError("frozen sites do not hold their boundary values")
    return s


def energy(graph: InteractionGraph, sigma) -> np.ndarray | float:
    """``-sum_e J_xy s_x s_y - 2 sum_x lambda_x s_x``."""
    s = check_spins(graph, sigma).astype(float)
    return _energy(graph, s)


def _energy(graph: InteractionGraph, s: np.ndarray):
    bonds = (s[..., graph.edge_u] * s[..., graph.edge_v]) @ graph.couplings
    e = -bonds - 2.0 * (s @ graph.fields)
    return e if np.ndim(e) else float(e)


def pair_energy(d: DoublingGraph, sigma1, sigma2) -> np.ndarray | float:
    """Doubled Hamiltonian ``H(sigma1, sigma2)`` on the doubling graph ``d``."""
    s1 = check_spins(d.parent, sigma1).astype(float)
    s2 = check_spins(d.parent, sigma2).astype(float)
    if s1.shape != s2.shape:
        raise ConfigurationError(f"copy shapes differ: {s1.shape} vs {s2.shape}")
    return _pair_energy(d, s1, s2)


def _pair_energy(d: DoublingGraph, s1: np.ndarray, s2: np.ndarray):
    cross = (s1[..., d.tails] * s2[..., d.heads]) @ d.weights
    e = -cross - d.q * np.sum(s1 * s2, axis=-1) - (s1 + s2) @ d.fields
    return e if np.ndim(e) else float(e)


def fields_12(d: DoublingGraph, sigma: np.ndarray) -> np.ndarray:
    """Field driving copy 2 from copy 1, at every site (frozen ones included)."""
    s = np.asarray(sigma, dtype=float)
    inter = (d.in_matrix @ s.T).T
    return inter + d.q * s + d.fields


def fields_21(d: DoublingGraph, tau: np.ndarray) -> np.ndarray:
    """Field driving copy 1 from copy 2, at every site (frozen ones included)."""
    t = np.asarray(tau, dtype=float)
    inter = (d.out_matrix @ t.T).T
    return inter + d.q * t + d.fields


def _site_field(d: DoublingGraph, spins, x: int, which) -> float:
    s = check_spins(d.parent, spins)
    if s.ndim != 1:
        raise ConfigurationError("local field takes a single configuration")
    if not 0 <= x < d.n:
        raise ConfigurationError(f"vertex {x} out of range")
    if x in d.parent.frozen:
        raise ConfigurationError(f"vertex {x} is frozen and is never resampled")
    return float(which(d, s)[x])


def local_field_12(d: DoublingGraph, sigma, x: int) -> float:
    """``sum_{(y1, x2)} J_xy sigma_y + q sigma_x + lambda_x``."""
    return _site_field(d, sigma, x, fields_12)


def local_field_21(d: DoublingGraph, tau, x: int) -> float:
    """``sum_{(x1, y2)} J_xy tau_y + q tau_x + lambda_x``."""
    return _site_field(d, tau, x, fields_21)


def log2cosh(h: np.ndarray) -> np.ndarray:
    a = np.abs(h)
    return a + np.log1p(np.exp(-2.0 * a))


def log_stationary_weight(d: DoublingGraph, sigma, reverse: bool = False):
    """Log of the shaken stationary weight of ``sigma``.

    Forward: ``log sum_tau exp(-H(sigma, tau))``, the stationary weight of
    the 1->2 then 2->1 kernel. With ``reverse=True``:
    ``log sum_tau exp(-H(tau, sigma))``, stationary for the opposite order.
    The sum runs over free sites of ``tau`` only; a frozen site adds its
    boundary spin times its field instead of ``log 2cosh``.
    """
    s = check_spins(d.parent, sigma).astype(float)
    return _log_weight(d, s, reverse)


def _log_weight(d: DoublingGraph, s: np.ndarray, reverse: bool = False):
    h = fields_21(d, s) if reverse else fields_12(d, s)
    g = d.parent
    out = s @ d.fields + log2cosh(h[..., g.free_sites]).sum(axis=-1)
    if g.frozen:
        out = out + h[..., g.frozen_sites] @ g.frozen_values.astype(float)
    return out if np.ndim(out) else float(out)


def magnetization(spins) -> np.ndarray | float:
    m = np.mean(np.asarray(spins, dtype=float), axis=-1)
    return m if np.ndim(m) else float(m)
