"""Interaction graphs, edge orientations and doubling graphs.

A doubling graph has two copies of the vertex set. Copy 1 vertex ``x`` has
doubled id ``x`` and copy 2 vertex ``y`` has doubled id ``n + y``. Each
vertex carries one self-interaction edge ``{x, n + x}`` of weight ``q`` and
each parent edge ``{x, y}`` becomes exactly one of ``{x, n + y}`` or
``{y, n + x}``, chosen by an :class:`Orientation`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from shaken.rng import Phase, RngStream


class GraphError(ValueError):
    """Structurally invalid graph, orientation or instance file."""


class InteractionGraph:
    """Finite weighted graph with couplings ``J_uv`` and vertex fields ``lambda_v``.

    Parameters
    ----------
    n_vertices : int
        Vertices are the dense ids ``0 .. n_vertices - 1``.
    edges : iterable of (u, v, J)
        Undirected couplings. Self-loops are rejected, and so are repeated
        pairs unless ``allow_parallel`` is set (the 2x2 torus needs it).
    fields : sequence of float, optional
        Per-vertex external field, zero by default.
    frozen : mapping vertex -> +1/-1, optional
        Boundary vertices whose spin never changes.
    """

    def __init__(
        self,
        n_vertices: int,
        edges: Iterable[tuple[int, int, float]] = (),
        fields: Sequence[float] | None = None,
        frozen: Mapping[int, int] | None = None,
        allow_parallel: bool = False,
    ):
        n = int(n_vertices)
        if n < 1:
            raise GraphError("graph needs at least one vertex")
        edges = [(int(u), int(v), float(w)) for u, v, w in edges]
        seen = set()
        for u, v, w in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) has an undeclared endpoint")
            if u == v:
                raise GraphError(f"self-loop on vertex {u}")
            if not np.isfinite(w):
                raise GraphError(f"non-finite coupling on edge ({u}, {v})")
            key = (min(u, v), max(u, v))
            if key in seen and not allow_parallel:
                raise GraphError(f"duplicate edge {{{key[0]}, {key[1]}}}")
            seen.add(key)
        lam = np.zeros(n) if fields is None else np.asarray(fields, dtype=float)
        if lam.shape != (n,):
            raise GraphError(f"expected {n} fields, got shape {lam.shape}")
        if not np.all(np.isfinite(lam)):
            raise GraphError("non-finite external field")
        frozen = {int(k): int(v) for k, v in (frozen or {}).items()}
        for k, s in frozen.items():
            if not 0 <= k < n:
                raise GraphError(f"frozen vertex {k} is not declared")
            if s not in (-1, 1):
                raise GraphError(f"frozen vertex {k} must hold +1 or -1, got {s}")

        self.n = n
        self.edges: tuple[tuple[int, int, float], ...] = tuple(edges)
        self.fields = lam
        self.fields.setflags(write=False)
        self.frozen: Mapping[int, int] = frozen
        self.allow_parallel = allow_parallel

    def __repr__(self):
        return f"InteractionGraph(n={self.n}, edges={len(self.edges)}, frozen={len(self.frozen)})"

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_u(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.int64)

    @cached_property
    def edge_v(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.int64)

    @cached_property
    def couplings(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=float)

    @cached_property
    def free_mask(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.frozen)] = False
        return mask

    @cached_property
    def free_sites(self) -> np.ndarray:
        return np.flatnonzero(self.free_mask)

    @cached_property
    def frozen_sites(self) -> np.ndarray:
        return np.array(sorted(self.frozen), dtype=np.int64)

    @cached_property
    def frozen_values(self) -> np.ndarray:
        return np.array([self.frozen[k] for k in sorted(self.frozen)], dtype=np.int8)

    @cached_property
    def coupling_matrix(self) -> sp.csr_matrix:
        """Symmetric sparse matrix with ``J_uv`` at (u, v) and (v, u)."""
        m = sp.coo_matrix(
            (np.concatenate([self.couplings, self.couplings]),
             (np.concatenate([self.edge_u, self.edge_v]),
              np.concatenate([self.edge_v, self.edge_u]))),
            shape=(self.n, self.n),
        )
        return m.tocsr()

    def scaled(self, beta: float) -> "InteractionGraph":
        """Copy with every coupling and field multiplied by ``beta``."""
        return InteractionGraph(
            self.n,
            [(u, v, beta * w) for u, v, w in self.edges],
            beta * self.fields,
            self.frozen,
            allow_parallel=self.allow_parallel,
        )

    def with_frozen(self, frozen: Mapping[int, int]) -> "InteractionGraph":
        return InteractionGraph(self.n, self.edges, self.fields, frozen,
                                allow_parallel=self.allow_parallel)


@dataclass(frozen=True)
class Orientation:
    """Direction ``(tail, head)`` for each parent edge, aligned by edge index."""

    direction: tuple[tuple[int, int], ...]

    def __len__(self):
        return len(self.direction)

    def tails(self) -> np.ndarray:
        return np.array([d[0] for d in self.direction], dtype=np.int64)

    def heads(self) -> np.ndarray:
        return np.array([d[1] for d in self.direction], dtype=np.int64)


def orient(graph: InteractionGraph, seed: int | None = None) -> Orientation:
    """Orient every edge of ``graph``.

    With ``seed=None`` each edge points from the lower to the higher vertex
    id. With a seed, each of those canonical directions is flipped with
    probability 1/2 using a counter-based stream keyed by the seed and the
    edge index, so the result depends only on ``(graph, seed)``.
    """
    canon = [(min(u, v), max(u, v)) for u, v, _ in graph.edges]
    if seed is None:
        return Orientation(tuple(canon))
    stream = RngStream(seed)
    flips = stream.uniform(0, Phase.ORIENT, np.arange(len(canon))) < 0.5
    return Orientation(tuple((b, a) if f else (a, b) for (a, b), f in zip(canon, flips)))


def orientation_from_pairs(graph: InteractionGraph, pairs: Iterable[tuple[int, int]]) -> Orientation:
    """Match directed pairs ``(u, v)`` to parent edges.

    Each parent edge must be covered exactly once; the pairs are consumed
    as a multiset so parallel edges may be oriented independently.
    """
    pool: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for u, v in pairs:
        pool.setdefault((min(u, v), max(u, v)), []).append((int(u), int(v)))
    direction = []
    for u, v, _ in graph.edges:
        bucket = pool.get((min(u, v), max(u, v)))
        if not bucket:
            raise GraphError(f"orientation is missing edge {{{u}, {v}}}")
        direction.append(bucket.pop(0))
    leftover = [p for b in pool.values() for p in b]
    if leftover:
        raise GraphError(f"orientation names non-edges or extra copies: {leftover[:5]}")
    return Orientation(tuple(direction))


@dataclass(eq=False)
class DoublingGraph:
    """Bipartite doubled graph of ``parent`` with self-interaction weight ``q``.

    ``interaction`` holds ``(a, b, w)`` in doubled ids. Instances produced
    by :func:`build_doubling` are valid by construction; hand-built ones
    should be checked with :func:`validate_doubling` before use.
    """

    parent: InteractionGraph
    q: float
    interaction: tuple[tuple[int, int, float], ...]
    self_vertices: tuple[int, ...] | None = None
    orientation: Orientation | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.self_vertices is None:
            self.self_vertices = tuple(range(self.parent.n))

    @property
    def n(self) -> int:
        return self.parent.n

    @property
    def fields(self) -> np.ndarray:
        return self.parent.fields

    @cached_property
    def _oriented(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        tails, heads, w = [], [], []
        for a, b, j in self.interaction:
            if a >= n:
                a, b = b, a
            tails.append(a)
            heads.append(b - n)
            w.append(j)
        return (np.array(tails, dtype=np.int64), np.array(heads, dtype=np.int64),
                np.array(w, dtype=float))

    @property
    def tails(self) -> np.ndarray:
        """Copy-1 endpoint of each interaction edge."""
        return self._oriented[0]

    @property
    def heads(self) -> np.ndarray:
        """Copy-2 endpoint of each interaction edge."""
        return self._oriented[1]

    @property
    def weights(self) -> np.ndarray:
        return self._oriented[2]

    @cached_property
    def out_matrix(self) -> sp.csr_matrix:
        """Row x holds ``J_xy`` for every interaction edge ``(x1, y2)``."""
        t, h, w = self._oriented
        return sp.coo_matrix((w, (t, h)), shape=(self.n, self.n)).tocsr()

    @cached_property
    def in_matrix(self) -> sp.csr_matrix:
        """Row x holds ``J_xy`` for every interaction edge ``(y1, x2)``."""
        return self.out_matrix.T.tocsr()


def build_doubling(graph: InteractionGraph, orientation: Orientation, q: float) -> DoublingGraph:
    """Doubling graph with interaction edge ``(x1, y2)`` for each oriented ``(x, y)``."""
    if not np.isfinite(q):
        raise GraphError(f"q must be finite, got {q}")
    if len(orientation) != graph.n_edges:
        raise GraphError(
            f"orientation covers {len(orientation)} edges, graph has {graph.n_edges}")
    n = graph.n
    inter = []
    for (u, v, w), (a, b) in zip(graph.edges, orientation.direction):
        if {a, b} != {u, v}:
            raise GraphError(f"orientation entry ({a}, {b}) does not match edge {{{u}, {v}}}")
        inter.append((a, n + b, w))
    return DoublingGraph(graph, float(q), tuple(inter), orientation=orientation)


def validate_doubling(d: DoublingGraph) -> list[str]:
    """List every violated doubling-graph invariant; empty means valid."""
    n = d.n
    problems = []
    collapsed: Counter = Counter()
    for a, b, w in d.interaction:
        if not (0 <= a < 2 * n and 0 <= b < 2 * n):
            problems.append(f"interaction edge ({a}, {b}) leaves the doubled vertex set")
            continue
        if (a < n) == (b < n):
            copy = 1 if a < n else 2
            problems.append(f"interaction edge ({a}, {b}) joins two copy-{copy} vertices; not bipartite")
            continue
        x, y = (a, b - n) if a < n else (b, a - n)
        if x == y:
            problems.append(f"interaction edge on vertex {x} duplicates its self edge")
            continue
        collapsed[(min(x, y), max(x, y))] += 1
    parent_pairs: Counter = Counter((min(u, v), max(u, v)) for u, v, _ in d.parent.edges)
    for pair in sorted(set(parent_pairs) | set(collapsed)):
        want, got = parent_pairs[pair], collapsed[pair]
        if want != got:
            problems.append(
                f"pair {{{pair[0]}, {pair[1]}}}: {got} interaction edge(s) for {want} parent edge(s)")
    counts = Counter(d.self_vertices)
    for x in range(n):
        if counts[x] != 1:
            problems.append(f"vertex {x} has {counts[x]} self edges")
    for x in sorted(set(counts) - set(range(n))):
        problems.append(f"self edge on undeclared vertex {x}")
    return problems


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def _records(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_graph(text: str) -> tuple[InteractionGraph, dict[str, int]]:
    """Parse ``v``/``e``/``b`` records; returns the graph and its id table.

    Vertex names are arbitrary tokens, mapped to dense ids in order of
    first declaration.
    """
    ids: dict[str, int] = {}
    lam: list[float] = []
    edges, frozen = [], {}

    def vid(tok, lineno):
        if tok not in ids:
            raise GraphError(f"line {lineno}: undeclared vertex {tok!r}")
        return ids[tok]

    for lineno, tok in _records(text):
        kind = tok[0]
        try:
            if kind == "v" and len(tok) == 3:
                if tok[1] in ids:
                    raise GraphError(f"line {lineno}: vertex {tok[1]!r} declared twice")
                ids[tok[1]] = len(ids)
                lam.append(float(tok[2]))
            elif kind == "e" and len(tok) == 4:
                edges.append((vid(tok[1], lineno), vid(tok[2], lineno), float(tok[3])))
            elif kind == "b" and len(tok) == 3:
                frozen[vid(tok[1], lineno)] = int(tok[2])
            else:
                raise GraphError(f"line {lineno}: malformed record {' '.join(tok)!r}")
        except ValueError as exc:
            if isinstance(exc, GraphError):
                raise
            raise GraphError(f"line {lineno}: {exc}") from None
    if not ids:
        raise GraphError("no vertices declared")
    try:
        graph = InteractionGraph(len(ids), edges, lam, frozen)
    except GraphError as exc:
        raise GraphError(f"invalid instance: {exc}") from None
    return graph, ids


def format_graph(graph: InteractionGraph) -> str:
    lines = [f"v {x} {float(graph.fields[x])!r}" for x in range(graph.n)]
    lines += [f"e {u} {v} {float(w)!r}" for u, v, w in graph.edges]
    lines += [f"b {x} {s:+d}" for x, s in sorted(graph.frozen.items())]
    return "\n".join(lines) + "\n"


def parse_orientation(text: str, graph: InteractionGraph, ids: Mapping[str, int] | None = None) -> Orientation:
    pairs = []
    for lineno, tok in _records(text):
        if tok[0] != "o" or len(tok) != 3:
            raise GraphError(f"line {lineno}: malformed orientation record {' '.join(tok)!r}")
        try:
            u, v = ((ids[t] if ids is not None else int(t)) for t in tok[1:])
        except (KeyError, ValueError):
            raise GraphError(f"line {lineno}: unknown vertex in {' '.join(tok)!r}") from None
        pairs.append((u, v))
    return orientation_from_pairs(graph, pairs)


def format_orientation(orientation: Orientation) -> str:
    return "".join(f"o {a} {b}\n" for a, b in orientation.direction)
