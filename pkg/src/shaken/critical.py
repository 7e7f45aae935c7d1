"""Critical curve of the shaken dynamics on the triangular lattice.

With ``t = tanh J`` and ``s = tanh q`` the curve is
``1 + t^3 s = 3 t s + 3 t^2``. It is derived here from the even subgraphs
of the elementary cell of the doubled (square) lattice: subgraphs with
trivial mod-2 winding give the left side, the rest the right side.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from scipy.optimize import bisect

from shaken.lattice import TRIANGULAR_LEFT

J_BRACKET = (1e-6, 5.0)
Q_BRACKET = (0.0, 30.0)
XTOL = 1e-12
MAX_CELL_VERTICES = 4
MAX_CELL_EDGES = 20

# coefficients of 1 + t^3 s - 3 t s - 3 t^2, keyed by (power of t, power of s)
RESIDUAL_POLYNOMIAL = {(0, 0): 1, (3, 1): 1, (1, 1): -3, (2, 0): -3}


class NoRootError(ValueError):
    """The residual does not change sign on the search bracket."""


def critical_residual(J: float, q: float) -> float:
    """``1 + t^3 s - 3 t s - 3 t^2`` with ``t = tanh J``, ``s = tanh q`` (q may be inf)."""
    t = math.tanh(J)
    s = math.tanh(q)
    return 1.0 + t**3 * s - 3.0 * t * s - 3.0 * t * t


@dataclass(frozen=True)
class CriticalPoint:
    J: float
    q: float

    @property
    def t(self) -> float:
        return math.tanh(self.J)

    @property
    def s(self) -> float:
        return math.tanh(self.q)

    @property
    def residual(self) -> float:
        return critical_residual(self.J, self.q)


ENDPOINT_ATOL = 1e-12


def _root(f, lo, hi):
    flo, fhi = f(lo), f(hi)
    # a root sitting on the bracket edge may round to either sign
    if abs(flo) <= ENDPOINT_ATOL:
        return lo
    if abs(fhi) <= ENDPOINT_ATOL:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NoRootError(f"no sign change on [{lo}, {hi}]: f = {flo:.3g}, {fhi:.3g}")
    return bisect(f, lo, hi, xtol=XTOL, maxiter=500)


def critical_solve(J: float | None = None, q: float | None = None,
                   diagonal: bool = False) -> CriticalPoint:
    """Find the critical partner of a fixed coupling.

    Give exactly one of ``J=`` (solve for q), ``q=`` (solve for J; ``q=inf``
    means ``s = 1``) or ``diagonal=True`` (solve along ``q = J``).
    """
    if sum(x is not None for x in (J, q)) + bool(diagonal) != 1:
        raise ValueError("fix exactly one of J, q or diagonal")
    if diagonal:
        root = _root(lambda j: critical_residual(j, j), *J_BRACKET)
        return CriticalPoint(root, root)
    if q is not None:
        if q < 0:
            raise NoRootError("q must be >= 0")
        return CriticalPoint(_root(lambda j: critical_residual(j, q), *J_BRACKET), q)
    return CriticalPoint(J, _root(lambda x: critical_residual(J, x), *Q_BRACKET))


LIMITS = {"square": dict(diagonal=True), "hexagonal": dict(q=0.0), "triangular": dict(q=math.inf)}


def critical_limit(name: str) -> CriticalPoint:
    """``square`` (q = J), ``hexagonal`` (q = 0) or ``triangular`` (q -> inf)."""
    try:
        return critical_solve(**LIMITS[name])
    except KeyError:
        raise ValueError(f"unknown limit {name!r}; choose from {sorted(LIMITS)}") from None


# ---------------------------------------------------------------------------
# Even subgraphs of an elementary cell
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellEdge:
    u: int
    v: int
    weight: str  # "J" or "q"
    winding: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class Cell:
    """Quotient of a doubly periodic graph by its translations.

    Each edge carries the lattice translation it crosses; only its parity
    matters for the homology class of a cycle.
    """

    n_vertices: int
    edges: tuple[CellEdge, ...]


@dataclass(frozen=True)
class EvenSubgraphs:
    cell: Cell
    e0: tuple[frozenset[int], ...]
    e1: tuple[frozenset[int], ...]

    def _poly(self, subsets) -> dict[tuple[int, int], int]:
        terms: Counter = Counter()
        for sub in subsets:
            nj = sum(self.cell.edges[i].weight == "J" for i in sub)
            terms[(nj, len(sub) - nj)] += 1
        return dict(terms)

    @property
    def poly0(self) -> dict[tuple[int, int], int]:
        """Trivial-winding sum as ``{(power of t, power of s): coefficient}``."""
        return self._poly(self.e0)

    @property
    def poly1(self) -> dict[tuple[int, int], int]:
        return self._poly(self.e1)

    def critical_polynomial(self) -> dict[tuple[int, int], int]:
        """``poly0 - poly1`` with zero coefficients dropped."""
        out = Counter(self.poly0)
        out.subtract(self.poly1)
        return {k: v for k, v in out.items() if v}


def cell_even_subgraphs(cell: Cell) -> EvenSubgraphs:
    """Split the even subgraphs of ``cell`` by mod-2 winding.

    Subgraphs whose total winding is even along both axes go to ``e0``,
    all other even subgraphs to ``e1``. A loop adds 2 to its vertex degree.
    """
    if cell.n_vertices > MAX_CELL_VERTICES or len(cell.edges) > MAX_CELL_EDGES:
        raise ValueError(
            f"cell too large: {cell.n_vertices} vertices, {len(cell.edges)} edges "
            f"(cap {MAX_CELL_VERTICES}, {MAX_CELL_EDGES})")
    for e in cell.edges:
        if e.weight not in ("J", "q"):
            raise ValueError(f"edge weight label must be 'J' or 'q', got {e.weight!r}")
        if not (0 <= e.u < cell.n_vertices and 0 <= e.v < cell.n_vertices):
            raise ValueError(f"edge ({e.u}, {e.v}) leaves the cell")
    # bit masks: endpoint parity and winding parity per edge
    vmask = [(1 << e.u) ^ (1 << e.v) for e in cell.edges]
    wmask = [(e.winding[0] & 1) | ((e.winding[1] & 1) << 1) for e in cell.edges]
    e0, e1 = [], []
    for subset in range(1 << len(cell.edges)):
        deg = wind = 0
        members = []
        for i in range(len(cell.edges)):
            if subset >> i & 1:
                deg ^= vmask[i]
                wind ^= wmask[i]
                members.append(i)
        if deg:
            continue
        (e0 if wind == 0 else e1).append(frozenset(members))
    return EvenSubgraphs(cell, tuple(e0), tuple(e1))


def triangular_shaken_cell() -> Cell:
    """Elementary cell of the doubled triangular-lattice interaction.

    Vertex 0 is the copy-1 site, vertex 1 the copy-2 site of the same cell.
    The self edge stays in the cell; the three ``J`` edges reach copy-1
    sites in the neighbouring cells given by the left offsets.
    """
    edges = [CellEdge(0, 1, "q", (0, 0))]
    edges += [CellEdge(0, 1, "J", off) for off in TRIANGULAR_LEFT]
    return Cell(2, tuple(edges))


def polynomial_from_cell(cell: Cell) -> dict[tuple[int, int], int]:
    return cell_even_subgraphs(cell).critical_polynomial()


def format_polynomial(poly: dict[tuple[int, int], int], names: Sequence[str] = ("t", "s")) -> str:
    parts = []
    for (a, b), c in sorted(poly.items()):
        mono = "".join(
            f"{n}^{p}" if p > 1 else n for n, p in zip(names, (a, b)) if p)
        coef = "" if abs(c) == 1 and mono else str(abs(c))
        parts.append(("-" if c < 0 else "+") + " " + coef + mono)
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text
