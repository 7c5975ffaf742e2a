"""Fully-dynamic connectivity over a changing edge set.

Two engines share one interface:

* ``HDTConnectivity`` -- Holm/de Lichtenberg/Thorup level structure on Euler-tour
  trees (treaps with parent pointers), polylogarithmic amortised updates.
* ``UnionFindConnectivity`` -- union-find rebuilt lazily after deletions,
  O(n + m) per query after a deletion.  Kept as the differential reference.

Edges are keyed by an id (a graph edge index in the chain); when no id is
given the unordered vertex pair is used.  Self-loops are stored but never
affect connectivity.
"""
from __future__ import annotations

import random
from typing import Hashable, Optional


class ConnectivityError(ValueError):
    pass


class DynamicConnectivity:
    """Common surface of the engines."""

    name = "abstract"

    def __init__(self, n: int):
        self.n = n
        self._ends: dict[Hashable, tuple[int, int]] = {}

    @staticmethod
    def _key(u: int, v: int, eid: Optional[Hashable]) -> Hashable:
        return (min(u, v), max(u, v)) if eid is None else eid

    def has_edge(self, u: int, v: int, eid: Optional[Hashable] = None) -> bool:
        return self._key(u, v, eid) in self._ends

    def edge_count(self) -> int:
        return len(self._ends)

    def insert_edge(self, u: int, v: int, eid: Optional[Hashable] = None) -> None:
        key = self._key(u, v, eid)
        if key in self._ends:
            raise ConnectivityError(f"edge {key} already present")
        self._ends[key] = (u, v)
        if u != v:
            self._insert(key, u, v)

    def delete_edge(self, u: int, v: int, eid: Optional[Hashable] = None) -> None:
        key = self._key(u, v, eid)
        if key not in self._ends:
            raise ConnectivityError(f"edge {key} not present")
        a, b = self._ends.pop(key)
        if a != b:
            self._delete(key, a, b)

    def would_be_cut_edge(self, u: int, v: int, eid: Optional[Hashable] = None) -> bool:
        """Is {u,v} a cut edge of (V, current edges ∪ {e})?  Leaves the state unchanged."""
        if u == v:
            return False
        key = self._key(u, v, eid)
        if key not in self._ends:
            return not self.connected(u, v)
        self.delete_edge(u, v, eid)
        try:
            return not self.connected(u, v)
        finally:
            self.insert_edge(u, v, eid)

    def connected(self, u: int, v: int) -> bool:
        raise NotImplementedError

    def component_size(self, v: int) -> int:
        raise NotImplementedError

    def _insert(self, key, u, v):
        raise NotImplementedError

    def _delete(self, key, u, v):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# naive fallback


class UnionFindConnectivity(DynamicConnectivity):
    name = "unionfind"

    def __init__(self, n: int):
        super().__init__(n)
        self._parent = list(range(n))
        self._size = [1] * n
        self._dirty = False
        self.rebuilds = 0

    def _find(self, x: int) -> int:
        parent = self._parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def _union(self, a: int, b: int) -> None:
        ra, rb = self._find(a), self._find(b)
        if ra == rb:
            return
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]

    def _rebuild(self) -> None:
        self._parent = list(range(self.n))
        self._size = [1] * self.n
        for a, b in self._ends.values():
            if a != b:
                self._union(a, b)
        self._dirty = False
        self.rebuilds += 1

    def _insert(self, key, u, v):
        if not self._dirty:
            self._union(u, v)

    def _delete(self, key, u, v):
        self._dirty = True

    def connected(self, u: int, v: int) -> bool:
        if self._dirty:
            self._rebuild()
        return self._find(u) == self._find(v)

    def component_size(self, v: int) -> int:
        if self._dirty:
            self._rebuild()
        return self._size[self._find(v)]


# ---------------------------------------------------------------------------
# Euler-tour trees on an array-backed treap pool

NIL = 0


class _TreapPool:
    """Implicit-key treaps with parent pointers, aggregated counts and flags.

    Node 0 is the nil sentinel.  ``vc`` counts vertex-occurrence nodes;
    ``fnt``/``ftr`` are OR-aggregates of per-vertex flags "has non-tree edges
    at this level" and "has tree edges of exactly this level".
    """

    def __init__(self, seed: int = 0x5EED):
        self.left = [0]
        self.right = [0]
        self.par = [0]
        self.prio = [0.0]
        self.cnt = [0]
        self.vc = [0]
        self.own_nt = [0]
        self.own_tr = [0]
        self.fnt = [0]
        self.ftr = [0]
        self.vertex = [-1]
        self._free: list[int] = []
        self._rng = random.Random(seed)

    def new(self, vertex: int = -1) -> int:
        isv = 1 if vertex >= 0 else 0
        if self._free:
            x = self._free.pop()
            self.left[x] = self.right[x] = self.par[x] = 0
            self.prio[x] = self._rng.random()
            self.cnt[x] = 1
            self.vc[x] = isv
            self.own_nt[x] = self.own_tr[x] = self.fnt[x] = self.ftr[x] = 0
            self.vertex[x] = vertex
            return x
        self.left.append(0)
        self.right.append(0)
        self.par.append(0)
        self.prio.append(self._rng.random())
        self.cnt.append(1)
        self.vc.append(isv)
        self.own_nt.append(0)
        self.own_tr.append(0)
        self.fnt.append(0)
        self.ftr.append(0)
        self.vertex.append(vertex)
        return len(self.left) - 1

    def free(self, x: int) -> None:
        self._free.append(x)

    def _pull(self, x: int) -> None:
        l, r = self.left[x], self.right[x]
        self.cnt[x] = 1 + self.cnt[l] + self.cnt[r]
        self.vc[x] = (1 if self.vertex[x] >= 0 else 0) + self.vc[l] + self.vc[r]
        self.fnt[x] = self.own_nt[x] | self.fnt[l] | self.fnt[r]
        self.ftr[x] = self.own_tr[x] | self.ftr[l] | self.ftr[r]

    def root(self, x: int) -> int:
        par = self.par
        while par[x]:
            x = par[x]
        return x

    def index(self, x: int) -> int:
        left, par, cnt = self.left, self.par, self.cnt
        i = cnt[left[x]]
        while par[x]:
            p = par[x]
            if self.right[p] == x:
                i += cnt[left[p]] + 1
            x = p
        return i

    def merge(self, a: int, b: int) -> int:
        if not a:
            return b
        if not b:
            return a
        if self.prio[a] > self.prio[b]:
            r = self.merge(self.right[a], b)
            self.right[a] = r
            self.par[r] = a
            self._pull(a)
            self.par[a] = 0
            return a
        l = self.merge(a, self.left[b])
        self.left[b] = l
        self.par[l] = b
        self._pull(b)
        self.par[b] = 0
        return b

    def split(self, t: int, k: int) -> tuple[int, int]:
        """First k nodes, remainder."""
        if not t:
            return 0, 0
        l = self.left[t]
        if self.cnt[l] >= k:
            a, b = self.split(l, k)
            self.left[t] = b
            if b:
                self.par[b] = t
            self._pull(t)
            self.par[t] = 0
            if a:
                self.par[a] = 0
            return a, t
        a, b = self.split(self.right[t], k - self.cnt[l] - 1)
        self.right[t] = a
        if a:
            self.par[a] = t
        self._pull(t)
        self.par[t] = 0
        if b:
            self.par[b] = 0
        return t, b

    def set_flags(self, x: int, nt: Optional[int] = None, tr: Optional[int] = None) -> None:
        if nt is not None:
            self.own_nt[x] = nt
        if tr is not None:
            self.own_tr[x] = tr
        while x:
            old = (self.fnt[x], self.ftr[x])
            self._pull(x)
            if (self.fnt[x], self.ftr[x]) == old and (nt is None and tr is None):
                break
            nt = tr = None
            x = self.par[x]

    def find_flagged(self, t: int, which: str) -> int:
        """Some vertex node in tree ``t`` whose own flag is set, or 0."""
        agg = self.fnt if which == "nt" else self.ftr
        own = self.own_nt if which == "nt" else self.own_tr
        if not agg[t]:
            return 0
        x = t
        while True:
            if own[x]:
                return x
            if agg[self.left[x]]:
                x = self.left[x]
            else:
                x = self.right[x]


class HDTConnectivity(DynamicConnectivity):
    name = "hdt"

    def __init__(self, n: int, seed: int = 0x5EED):
        super().__init__(n)
        self.levels = max(1, n.bit_length())
        self.pool = _TreapPool(seed)
        self._vnode = [[self.pool.new(v) for v in range(n)] for _ in range(self.levels + 1)]
        self._level: dict[Hashable, int] = {}
        self._tree: dict[Hashable, bool] = {}
        self._arcs: dict[Hashable, list[tuple[int, int]]] = {}
        self._nt = [dict() for _ in range(self.levels + 1)]
        self._tr = [dict() for _ in range(self.levels + 1)]

    # euler tour primitives ---------------------------------------------------

    def _reroot(self, x: int) -> int:
        pool = self.pool
        r = pool.root(x)
        a, b = pool.split(r, pool.index(x))
        return pool.merge(b, a)

    def _link(self, level: int, key, u: int, v: int) -> None:
        pool = self.pool
        ru = self._reroot(self._vnode[level][u])
        rv = self._reroot(self._vnode[level][v])
        a1, a2 = pool.new(), pool.new()
        pool.merge(pool.merge(pool.merge(ru, a1), rv), a2)
        self._arcs.setdefault(key, []).append((a1, a2))

    def _cut(self, level: int, key) -> None:
        pool = self.pool
        a1, a2 = self._arcs[key][level]
        r = pool.root(a1)
        i1, i2 = pool.index(a1), pool.index(a2)
        if i1 > i2:
            i1, i2 = i2, i1
        left, rest = pool.split(r, i1)
        _, rest = pool.split(rest, 1)
        _mid, rest = pool.split(rest, i2 - i1 - 1)
        _, right = pool.split(rest, 1)
        pool.merge(left, right)
        pool.free(a1)
        pool.free(a2)

    def _tree_root(self, level: int, v: int) -> int:
        return self.pool.root(self._vnode[level][v])

    # adjacency bookkeeping -------------------------------------------------

    def _adj_add(self, table: list[dict], level: int, v: int, key, which: str) -> None:
        bucket = table[level].get(v)
        if bucket is None:
            bucket = table[level][v] = set()
        bucket.add(key)
        if len(bucket) == 1:
            node = self._vnode[level][v]
            self.pool.set_flags(node, **{which: 1})

    def _adj_remove(self, table: list[dict], level: int, v: int, key, which: str) -> None:
        bucket = table[level][v]
        bucket.discard(key)
        if not bucket:
            del table[level][v]
            node = self._vnode[level][v]
            self.pool.set_flags(node, **{which: 0})

    def _add_nontree(self, level, key, u, v):
        self._level[key] = level
        self._tree[key] = False
        self._adj_add(self._nt, level, u, key, "nt")
        self._adj_add(self._nt, level, v, key, "nt")

    def _remove_nontree(self, level, key, u, v):
        self._adj_remove(self._nt, level, u, key, "nt")
        self._adj_remove(self._nt, level, v, key, "nt")

    def _add_tree(self, level, key, u, v):
        self._level[key] = level
        self._tree[key] = True
        self._adj_add(self._tr, level, u, key, "tr")
        self._adj_add(self._tr, level, v, key, "tr")

    # public queries --------------------------------------------------------

    def connected(self, u: int, v: int) -> bool:
        return u == v or self._tree_root(0, u) == self._tree_root(0, v)

    def component_size(self, v: int) -> int:
        return self.pool.vc[self._tree_root(0, v)]

    def is_tree_edge(self, u: int, v: int, eid: Optional[Hashable] = None) -> bool:
        return self._tree.get(self._key(u, v, eid), False)

    # updates ---------------------------------------------------------------

    def _insert(self, key, u, v):
        if self.connected(u, v):
            self._add_nontree(0, key, u, v)
        else:
            self._add_tree(0, key, u, v)
            self._link(0, key, u, v)

    def _delete(self, key, u, v):
        level = self._level.pop(key)
        if not self._tree.pop(key):
            self._remove_nontree(level, key, u, v)
            return
        self._adj_remove(self._tr, level, u, key, "tr")
        self._adj_remove(self._tr, level, v, key, "tr")
        for i in range(level, -1, -1):
            self._cut(i, key)
        del self._arcs[key]
        for i in range(level, -1, -1):
            if self._replace(i, u, v):
                return

    def _replace(self, i: int, u: int, v: int) -> bool:
        pool = self.pool
        tu, tv = self._tree_root(i, u), self._tree_root(i, v)
        if pool.vc[tu] > pool.vc[tv]:
            u, v, tu, tv = v, u, tv, tu
        # push the smaller side's level-i tree edges up one level
        while pool.ftr[tu]:
            x = pool.find_flagged(tu, "tr")
            w = pool.vertex[x]
            for key in list(self._tr[i].get(w, ())):
                a, b = self._ends[key]
                self._adj_remove(self._tr, i, a, key, "tr")
                self._adj_remove(self._tr, i, b, key, "tr")
                self._add_tree(i + 1, key, a, b)
                self._link(i + 1, key, a, b)
            tu = pool.root(x)
        while pool.fnt[tu]:
            x = pool.find_flagged(tu, "nt")
            w = pool.vertex[x]
            for key in list(self._nt[i].get(w, ())):
                a, b = self._ends[key]
                other = b if a == w else a
                self._remove_nontree(i, key, a, b)
                if pool.root(self._vnode[i][other]) != tu:
                    self._add_tree(i, key, a, b)
                    for j in range(i + 1):
                        self._link(j, key, a, b)
                    return True
                self._add_nontree(i + 1, key, a, b)
            tu = pool.root(x)
        return False


ENGINES = {"hdt": HDTConnectivity, "unionfind": UnionFindConnectivity}


def make_engine(name: str, n: int) -> DynamicConnectivity:
    try:
        return ENGINES[name](n)
    except KeyError:
        raise ConnectivityError(f"unknown engine {name!r}; choose from {sorted(ENGINES)}") from None
