"""Graphs with indexed edges, random regular generation, balls and BFS trees.

Edges are stored as an indexed tuple of vertex pairs so that configurations can
be plain bit-vectors over edge indices.  Multigraphs are allowed (the
configuration model produces them) but every experiment uses simple mode.
"""
from __future__ import annotations

import hashlib
import math
import struct
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np


class GraphError(ValueError):
    pass


class RejectionBudgetExceeded(RuntimeError):
    """Simple-mode generation gave up after the configured number of retries."""


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, (u, v) in enumerate(self.edges):
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge {i} = {(u, v)} out of range for n={self.n}")
            adj[u].append(i)
            if v != u:
                adj[v].append(i)
        object.__setattr__(self, "adjacency", tuple(tuple(a) for a in adj))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        return cls(n, tuple((int(u), int(v)) for u, v in edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree_of(self, v: int) -> int:
        # a self-loop contributes 2
        return sum(2 if self.edges[e][0] == self.edges[e][1] else 1 for e in self.adjacency[v])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([self.degree_of(v) for v in range(self.n)], dtype=np.int64)

    @property
    def is_regular(self) -> bool:
        return self.n > 0 and bool(np.all(self.degrees == self.degrees[0]))

    @property
    def degree(self) -> Optional[int]:
        """Common degree for regular graphs, ``None`` otherwise."""
        return int(self.degrees[0]) if self.is_regular else None

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    @property
    def is_simple(self) -> bool:
        seen = set()
        for u, v in self.edges:
            if u == v:
                return False
            key = (min(u, v), max(u, v))
            if key in seen:
                return False
            seen.add(key)
        return True

    @cached_property
    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        arr = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        return arr[:, 0].copy(), arr[:, 1].copy()

    def other(self, e: int, u: int) -> int:
        a, b = self.edges[e]
        return b if a == u else a

    def neighbors(self, v: int) -> list[tuple[int, int]]:
        """(neighbour, edge index) pairs sorted by neighbour then edge index."""
        return sorted((self.other(e, v), e) for e in self.adjacency[v])

    def distances_from(self, v: int, limit: Optional[int] = None) -> dict[int, int]:
        dist = {v: 0}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            d = dist[u]
            if limit is not None and d >= limit:
                continue
            for w, _ in self.neighbors(u):
                if w not in dist:
                    dist[w] = d + 1
                    queue.append(w)
        return dist

    def is_connected(self) -> bool:
        return self.n == 0 or len(self.distances_from(0)) == self.n

    @cached_property
    def digest(self) -> str:
        """Short content hash used to tag result files."""
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    # serialisation ------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines.extend(f"{u} {v}" for u, v in self.edges)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
        n, m = int(rows[0][0]), int(rows[0][1])
        if len(rows) - 1 != m:
            raise GraphError(f"header announces {m} edges, found {len(rows) - 1}")
        return cls.from_edges(n, ((int(a), int(b)) for a, b in rows[1:]))

    _MAGIC = b"RCG1"

    def to_bytes(self) -> bytes:
        body = np.array(self.edges, dtype="<u4").reshape(-1).tobytes()
        return self._MAGIC + struct.pack("<II", self.n, self.m) + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "Graph":
        if data[:4] != cls._MAGIC:
            raise GraphError("not a binary graph blob")
        n, m = struct.unpack("<II", data[4:12])
        flat = np.frombuffer(data[12:], dtype="<u4")
        if flat.size != 2 * m:
            raise GraphError("truncated binary graph")
        return cls.from_edges(n, flat.reshape(m, 2).tolist())


# ---------------------------------------------------------------------------
# generation


def generate_random_regular(n: int, delta: int, seed: int | None = None,
                            simple: bool = True, max_tries: int = 100_000) -> Graph:
    """Configuration-model Δ-regular graph, resampled whole until simple.

    Pairings are uniform over perfect matchings of the Δn stubs, so conditioned
    on simplicity the result is uniform over simple Δ-regular graphs.
    """
    if (n * delta) % 2:
        raise GraphError(f"n*delta must be even, got n={n}, delta={delta}")
    if n <= 0 or delta < 0:
        raise GraphError("need n > 0 and delta >= 0")
    if simple and delta >= n:
        raise GraphError(f"no simple {delta}-regular graph on {n} vertices")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), delta)
    for _ in range(max_tries):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        if simple:
            if np.any(pairs[:, 0] == pairs[:, 1]):
                continue
            lo = np.minimum(pairs[:, 0], pairs[:, 1])
            hi = np.maximum(pairs[:, 0], pairs[:, 1])
            keys = lo * n + hi
            if np.unique(keys).size != keys.size:
                continue
            pairs = np.stack([lo, hi], axis=1)
            pairs = pairs[np.argsort(keys, kind="stable")]
        return Graph.from_edges(n, pairs.tolist())
    raise RejectionBudgetExceeded(
        f"no simple graph after {max_tries} configuration-model draws (n={n}, delta={delta})")


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, combinations(range(n), 2))


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def hypercube_graph(d: int) -> Graph:
    n = 1 << d
    return Graph.from_edges(n, [(u, u | (1 << b)) for u in range(n) for b in range(d)
                                if not u & (1 << b)])


def random_tree(n: int, seed: int | None = None) -> Graph:
    """Uniform labelled tree via a random Prüfer sequence."""
    rng = np.random.default_rng(seed)
    if n == 1:
        return Graph(1, ())
    if n == 2:
        return Graph.from_edges(2, [(0, 1)])
    prufer = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for x in prufer:
        degree[x] += 1
    edges = []
    import heapq
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    for x in prufer:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((min(a, b), max(a, b)))
    return Graph.from_edges(n, edges)


# ---------------------------------------------------------------------------
# balls and BFS trees


@dataclass(frozen=True)
class BallView:
    center: int
    radius: int
    dist: dict[int, int]
    vertices: frozenset[int]
    shell: frozenset[int]
    edges: tuple[int, ...]

    def edge_set(self) -> frozenset[int]:
        return frozenset(self.edges)


def ball(g: Graph, v: int, r: int) -> BallView:
    if not 0 <= v < g.n:
        raise GraphError(f"vertex {v} not in graph")
    if r < 0:
        raise GraphError("radius must be non-negative")
    dist = g.distances_from(v, limit=r)
    verts = frozenset(dist)
    shell = frozenset(u for u, d in dist.items() if d == r)
    edges = tuple(sorted({e for u in verts for e in g.adjacency[u]
                          if g.other(e, u) in verts}))
    return BallView(v, r, dist, verts, shell, edges)


def tree_excess(g: Graph, b: BallView) -> int:
    """|E| - |V| + (number of components) of the induced ball subgraph."""
    parent = {u: u for u in b.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = len(parent)
    for e in b.edges:
        a, c = (find(x) for x in g.edges[e])
        if a != c:
            parent[a] = c
            comps -= 1
    return len(b.edges) - len(b.vertices) + comps


def treelike_radius(g: Graph) -> int:
    """floor(log_{Δ-1}(n) / 3); graphs of max degree <= 2 get radius n."""
    delta = g.max_degree
    if delta <= 2:
        return g.n
    return int(math.floor(math.log(g.n) / (3 * math.log(delta - 1)) + 1e-12))


def max_ball_excess(g: Graph, radius: Optional[int] = None) -> int:
    radius = treelike_radius(g) if radius is None else radius
    return max(tree_excess(g, ball(g, v, radius)) for v in range(g.n))


def is_locally_treelike(g: Graph, k: int) -> bool:
    # excess is monotone in r, so checking the largest admissible radius suffices
    return max_ball_excess(g) <= k


# ---------------------------------------------------------------------------
# expansion

EXACT_EXPANSION_CAP = 24


@dataclass(frozen=True)
class ExpansionBound:
    value: float
    exact: bool
    witness: frozenset[int]


def _require_regular(g: Graph) -> int:
    if not g.is_regular:
        raise GraphError("expansion profile is only defined here for regular graphs")
    return g.degree


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x).astype(np.int64)


def expansion_profile(g: Graph, eps: float, mode: str = "exact", seed: int = 0,
                      restarts: int = 64) -> ExpansionBound:
    """min over 0 < |S| <= eps*n of |E(S, V\\S)| / (Δ|S|).

    ``mode="exact"`` enumerates every subset (n <= 24).  ``mode="heuristic"``
    runs a randomised local search and the result is only an upper bound.
    An empty range of sizes gives +inf.
    """
    delta = _require_regular(g)
    if not 0 < eps <= 0.5:
        raise GraphError("eps must lie in (0, 1/2]")
    kmax = int(math.floor(eps * g.n + 1e-12))
    if kmax < 1:
        return ExpansionBound(math.inf, True, frozenset())
    if mode == "exact":
        return _expansion_exact(g, delta, kmax)
    if mode == "heuristic":
        return _expansion_heuristic(g, delta, kmax, seed, restarts)
    raise GraphError(f"unknown mode {mode!r}")


def _expansion_exact(g: Graph, delta: int, kmax: int) -> ExpansionBound:
    n = g.n
    if n > EXACT_EXPANSION_CAP:
        raise GraphError(f"exact expansion refused for n={n} > {EXACT_EXPANSION_CAP}")
    eu, ev = g.endpoints
    best, best_mask = math.inf, 0
    chunk = 1 << 20
    total = 1 << n
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        pop = _popcount(masks)
        keep = pop <= kmax
        if not keep.any():
            continue
        masks, pop = masks[keep], pop[keep]
        cut = np.zeros(masks.size, dtype=np.int64)
        for a, b in zip(eu.tolist(), ev.tolist()):
            cut += ((masks >> np.uint64(a)) ^ (masks >> np.uint64(b))).astype(np.int64) & 1
        ratio = cut / (delta * pop)
        i = int(np.argmin(ratio))
        if ratio[i] < best:
            best, best_mask = float(ratio[i]), int(masks[i])
    witness = frozenset(v for v in range(n) if best_mask >> v & 1)
    return ExpansionBound(best, True, witness)


def _cut_size(g: Graph, s: set[int]) -> int:
    return sum(1 for a, b in g.edges if (a in s) != (b in s))


def _expansion_heuristic(g: Graph, delta: int, kmax: int, seed: int, restarts: int) -> ExpansionBound:
    rng = np.random.default_rng(seed)
    best, best_set = math.inf, frozenset()

    def score(s):
        return _cut_size(g, s) / (delta * len(s))

    seeds: list[set[int]] = []
    for v in range(min(g.n, restarts)):
        # BFS balls are natural low-boundary candidates
        order = list(g.distances_from(int(rng.integers(g.n))))
        seeds.append(set(order[:int(rng.integers(1, kmax + 1))]))
    for _ in range(restarts):
        size = int(rng.integers(1, kmax + 1))
        seeds.append(set(rng.choice(g.n, size=size, replace=False).tolist()))
    for s in seeds:
        cur = score(s)
        improved = True
        while improved:
            improved = False
            boundary = {g.other(e, u) for u in s for e in g.adjacency[u]} - s
            moves = [("add", w) for w in boundary if len(s) < kmax]
            moves += [("drop", u) for u in s if len(s) > 1]
            for kind, x in moves:
                t = s | {x} if kind == "add" else s - {x}
                val = score(t)
                if val < cur - 1e-15:
                    s, cur, improved = t, val, True
                    break
        if cur < best:
            best, best_set = cur, frozenset(s)
    return ExpansionBound(best, False, best_set)


@dataclass(frozen=True)
class ClassVerdict:
    """Membership verdict for the expander class with both thresholds spelled out.

    ``member`` is None when only heuristic upper bounds were available and
    neither threshold was violated: a heuristic can refute membership but
    never certify it.
    """
    member: Optional[bool]
    phi_half: ExpansionBound
    phi_delta: ExpansionBound
    half_ok: Optional[bool]
    delta_ok: Optional[bool]


PHI_HALF_MIN = 1 / 10
PHI_DELTA_MIN = 5 / 9


def in_class_G_delta(g: Graph, delta: float, mode: str = "exact", seed: int = 0) -> ClassVerdict:
    _require_regular(g)
    ph = expansion_profile(g, 0.5, mode, seed=seed)
    pd = expansion_profile(g, delta, mode, seed=seed)
    if mode == "exact":
        half_ok = ph.value >= PHI_HALF_MIN
        delta_ok = pd.value >= PHI_DELTA_MIN
        return ClassVerdict(half_ok and delta_ok, ph, pd, half_ok, delta_ok)
    half_ok = False if ph.value < PHI_HALF_MIN else None
    delta_ok = False if pd.value < PHI_DELTA_MIN else None
    member = False if (half_ok is False or delta_ok is False) else None
    return ClassVerdict(member, ph, pd, half_ok, delta_ok)


# ---------------------------------------------------------------------------
# BFS decomposition into tree edges and excess edges


@dataclass(frozen=True)
class BfsDecomposition:
    root: int
    radius: int
    depth: dict[int, int]
    parent: dict[int, Optional[int]]
    parent_edge: dict[int, Optional[int]]
    children: dict[int, tuple[int, ...]]
    tree_edges: frozenset[int]
    excess_edges: frozenset[int]
    ball_edges: frozenset[int]
    dfs_order: tuple[int, ...]
    excess_plus: dict[int, int]

    @cached_property
    def dfs_index(self) -> dict[int, int]:
        return {u: i for i, u in enumerate(self.dfs_order)}

    def subtree_vertices(self, u: int, max_depth: Optional[int] = None) -> list[int]:
        out, stack = [], [u]
        while stack:
            x = stack.pop()
            out.append(x)
            if max_depth is None or self.depth[x] < max_depth:
                stack.extend(self.children[x])
        return out

    def subtree_edges(self, u: int, max_depth: Optional[int] = None) -> set[int]:
        return {self.parent_edge[x] for x in self.subtree_vertices(u, max_depth) if x != u}

    def excess_depths(self) -> list[int]:
        """d+ of every excess edge: the larger endpoint depth."""
        return sorted(self.excess_plus.values())


def bfs_decomposition(g: Graph, v: int, r: int) -> BfsDecomposition:
    """BFS tree of G[B_r(v)] with smallest-index-first tie-breaking."""
    b = ball(g, v, r)
    depth = {v: 0}
    parent: dict[int, Optional[int]] = {v: None}
    parent_edge: dict[int, Optional[int]] = {v: None}
    children: dict[int, list[int]] = {v: []}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        if depth[u] >= r:
            continue
        for w, e in g.neighbors(u):
            if w not in depth:
                depth[w] = depth[u] + 1
                parent[w], parent_edge[w] = u, e
                children[w] = []
                children[u].append(w)
                queue.append(w)
    tree = frozenset(e for e in parent_edge.values() if e is not None)
    ball_edges = b.edge_set()
    excess = ball_edges - tree
    plus = {e: max(depth[a], depth[c]) for e in excess for a, c in [g.edges[e]]}
    order = []
    stack = [v]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(reversed(children[u]))
    return BfsDecomposition(
        root=v, radius=r, depth=depth, parent=parent, parent_edge=parent_edge,
        children={u: tuple(c) for u, c in children.items()},
        tree_edges=tree, excess_edges=excess, ball_edges=ball_edges,
        dfs_order=tuple(order), excess_plus=plus)


def choose_cut_radii(d: BfsDecomposition, r: int, k: int) -> tuple[int, int]:
    """Radii r >= r1 > r2 >= 0 whose shell E(B_r1) \\ E(B_r2) holds no excess edge.

    Picks the widest gap, ties to the smallest r2.  When r > k + 1 the gap is
    guaranteed to be at least r/(1+k) - 1 and this is asserted.
    """
    forbidden = set(d.excess_depths())
    best = None
    for r2 in range(0, r):
        r1 = r2
        while r1 + 1 <= r and (r1 + 1) not in forbidden:
            r1 += 1
        if r1 > r2 and (best is None or r1 - r2 > best[0] - best[1]):
            best = (r1, r2)
    if best is None:
        raise GraphError(f"every distance in 1..{r} carries an excess edge")
    if r > k + 1 and len(forbidden) <= k:
        assert best[0] - best[1] >= r / (1 + k) - 1 - 1e-12
    return best
