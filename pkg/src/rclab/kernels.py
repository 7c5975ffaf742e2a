"""Compiled inner loops for long single-graph runs.

These consume exactly the (V, U) draws an ``RngStream`` hands to the Python
chain and apply the same update rule, so trajectories are identical to the
Python path; connectivity is a BFS over the current in-edges, which is cheap
at the graph sizes these loops are used for (n in the low hundreds).
"""
from __future__ import annotations

import numba
import numpy as np

from .graph import Graph


def csr(g: Graph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ptr = np.zeros(g.n + 1, dtype=np.int64)
    for v in range(g.n):
        ptr[v + 1] = ptr[v] + len(g.adjacency[v])
    nbr = np.empty(ptr[-1], dtype=np.int64)
    eid = np.empty(ptr[-1], dtype=np.int64)
    for v in range(g.n):
        for k, e in enumerate(g.adjacency[v]):
            nbr[ptr[v] + k] = g.other(e, v)
            eid[ptr[v] + k] = e
    return ptr, nbr, eid


@numba.njit(cache=True)
def _connected(u, v, skip, bits, ptr, nbr, eid, seen, stamp, queue):
    if u == v:
        return True
    seen[u] = stamp
    head, tail = 0, 1
    queue[0] = u
    while head < tail:
        a = queue[head]
        head += 1
        for k in range(ptr[a], ptr[a + 1]):
            e = eid[k]
            if e == skip or bits[e] == 0:
                continue
            b = nbr[k]
            if b == v:
                return True
            if seen[b] != stamp:
                seen[b] = stamp
                queue[tail] = b
                tail += 1
    return False


@numba.njit(cache=True)
def _update(bits, e, U, p, p_hat, eu, ev, ptr, nbr, eid, seen, stamp, queue):
    if U < p_hat:
        new = 1
    elif U >= p:
        new = 0
    else:
        new = 1 if _connected(eu[e], ev[e], e, bits, ptr, nbr, eid, seen, stamp, queue) else 0
    return new


@numba.njit(cache=True)
def pair_chunk(lo, up, vs, us, m, p, p_hat, eu, ev, ptr, nbr, eid, seen, stamp0, queue, diff):
    """Advance a coupled pair over one block of draws; returns (index of coalescence or -1, diff, stamp)."""
    stamp = stamp0
    for k in range(vs.size):
        e = int(vs[k] * m)
        if e >= m:
            e = m - 1
        before = lo[e] != up[e]
        stamp += 1
        lo[e] = _update(lo, e, us[k], p, p_hat, eu, ev, ptr, nbr, eid, seen, stamp, queue)
        stamp += 1
        up[e] = _update(up, e, us[k], p, p_hat, eu, ev, ptr, nbr, eid, seen, stamp, queue)
        after = lo[e] != up[e]
        if before != after:
            if after:
                diff += 1
            else:
                diff -= 1
                if diff == 0:
                    return k, diff, stamp
    return -1, diff, stamp


@numba.njit(cache=True)
def single_chunk(bits, count, vs, us, m, p, p_hat, eu, ev, ptr, nbr, eid, seen, stamp0, queue,
                 target, upward):
    """Advance one chain; stops early once |In| reaches ``target``.  Returns (index or -1, count, stamp)."""
    stamp = stamp0
    for k in range(vs.size):
        e = int(vs[k] * m)
        if e >= m:
            e = m - 1
        stamp += 1
        new = _update(bits, e, us[k], p, p_hat, eu, ev, ptr, nbr, eid, seen, stamp, queue)
        count += new - bits[e]
        bits[e] = new
        if (upward and count >= target) or ((not upward) and count <= target):
            return k, count, stamp
    return -1, count, stamp


class CompiledGraph:
    """Arrays a kernel needs, built once per graph."""

    def __init__(self, g: Graph):
        self.g = g
        self.m = g.m
        eu, ev = g.endpoints
        self.eu = eu.astype(np.int64)
        self.ev = ev.astype(np.int64)
        self.ptr, self.nbr, self.eid = csr(g)
        self.seen = np.zeros(g.n, dtype=np.int64)
        self.queue = np.zeros(max(1, g.n), dtype=np.int64)
        self.stamp = 0
