"""Square and triangular periodic lattices and their doubling graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from shaken.graph import DoublingGraph, InteractionGraph, Orientation, build_doubling

# axial offsets of the three "left" neighbours on the triangular lattice;
# the right neighbours are their negatives
TRIANGULAR_LEFT = ((-1, 0), (-1, 1), (0, -1))


def _boundary_map(boundary) -> dict[int, int]:
    if boundary is None:
        return {}
    if isinstance(boundary, Mapping):
        return {int(k): int(v) for k, v in boundary.items()}
    return {int(k): 1 for k in boundary}


@dataclass(frozen=True)
class TorusLattice:
    """L x L periodic square lattice, site ``x = i + L*j`` (i rightwards, j upwards)."""

    L: int
    boundary: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"torus side must be >= 2, got {self.L}")
        object.__setattr__(self, "boundary", _boundary_map(self.boundary))
        bad = [x for x in self.boundary if not 0 <= x < self.n]
        if bad:
            raise ValueError(f"boundary sites outside the torus: {bad}")

    @property
    def n(self) -> int:
        return self.L * self.L

    def _shift(self, di: int, dj: int) -> np.ndarray:
        x = np.arange(self.n)
        i, j = x % self.L, x // self.L
        return (i + di) % self.L + self.L * ((j + dj) % self.L)

    @property
    def up(self) -> np.ndarray:
        return self._shift(0, 1)

    @property
    def right(self) -> np.ndarray:
        return self._shift(1, 0)

    @property
    def down(self) -> np.ndarray:
        return self._shift(0, -1)

    @property
    def left(self) -> np.ndarray:
        return self._shift(-1, 0)

    def graph(self, J=1.0, lam=0.0) -> tuple[InteractionGraph, Orientation]:
        """Interaction graph with the down-left orientation.

        ``J`` is a scalar or one coupling per edge, edges ordered as
        ``(x, x_right), (x, x_up)`` for ``x = 0 .. n-1``. Edges point from
        ``x`` to its right and up neighbours, so each site's 1->2 field
        collects its down and left neighbours.
        """
        up, right = self.up, self.right
        pairs = []
        for x in range(self.n):
            pairs.append((x, int(right[x])))
            pairs.append((x, int(up[x])))
        weights = np.broadcast_to(np.asarray(J, dtype=float), (len(pairs),))
        lam = np.broadcast_to(np.asarray(lam, dtype=float), (self.n,))
        g = InteractionGraph(
            self.n,
            [(a, b, w) for (a, b), w in zip(pairs, weights)],
            lam,
            self.boundary,
            allow_parallel=self.L == 2,
        )
        return g, Orientation(tuple(pairs))


def z2_doubling(L: int, J: float, q: float, lam: float = 0.0,
                boundary: Mapping[int, int] | Iterable[int] | None = None) -> DoublingGraph:
    """Doubling of the square torus whose 1->2 field is ``J(s_down + s_left) + q s + lam``.

    The resulting doubled graph is the hexagonal lattice. ``boundary`` is a
    map site -> frozen spin, or an iterable of sites frozen at +1.
    """
    lattice = TorusLattice(L, _boundary_map(boundary))
    g, o = lattice.graph(J, lam)
    return build_doubling(g, o, q)


@dataclass(frozen=True)
class TriangularLattice:
    """L x L rhombic torus in axial coordinates, site ``x = i + L*j``."""

    L: int

    def __post_init__(self):
        if self.L < 4 or self.L % 2:
            raise ValueError(f"triangular torus side must be even and >= 4, got {self.L}")

    @property
    def n(self) -> int:
        return self.L * self.L

    def _offset(self, di: int, dj: int) -> np.ndarray:
        x = np.arange(self.n)
        i, j = x % self.L, x // self.L
        return (i + di) % self.L + self.L * ((j + dj) % self.L)

    @property
    def left(self) -> np.ndarray:
        """``(n, 3)`` array of the left neighbours of each site."""
        return np.stack([self._offset(a, b) for a, b in TRIANGULAR_LEFT], axis=1)

    @property
    def right(self) -> np.ndarray:
        return np.stack([self._offset(-a, -b) for a, b in TRIANGULAR_LEFT], axis=1)


def triangular_doubling(L: int, J: float, q: float) -> DoublingGraph:
    """Doubling in which each copy-2 site couples to its three left neighbours in copy 1.

    The doubled interaction graph is a square lattice, homogeneous when ``q == J``.
    """
    tri = TriangularLattice(L)
    left = tri.left
    pairs = [(int(y), x) for x in range(tri.n) for y in left[x]]
    g = InteractionGraph(tri.n, [(a, b, J) for a, b in pairs])
    return build_doubling(g, Orientation(tuple(pairs)), q)
