"""Ordered and disordered polymers, the B∞ closure, and weight factorizations."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .graph import Graph
from .model import (Configuration, ModelParams, PartialConfiguration, component_labels,
                    weight)


class PhaseError(ValueError):
    pass


def closure_threshold(delta_deg: int) -> int:
    """Smallest integer count meeting the real threshold 5Δ/9."""
    return math.ceil(5 * delta_deg / 9)


def b_closure(g: Graph, a: Iterable[int], delta_deg: Optional[int] = None) -> frozenset[int]:
    """Least superset of ``a`` closed under "a vertex with >= 5Δ/9 edges in the set brings in all its edges"."""
    delta_deg = delta_deg if delta_deg is not None else g.max_degree
    t = closure_threshold(delta_deg)
    inside = set(a)
    count = [0] * g.n
    for e in inside:
        u, v = g.edges[e]
        count[u] += 1
        if v != u:
            count[v] += 1
    saturated = [False] * g.n
    queue = deque(v for v in range(g.n) if count[v] >= t)
    while queue:
        v = queue.popleft()
        if saturated[v]:
            continue
        saturated[v] = True
        for e in g.adjacency[v]:
            if e in inside:
                continue
            inside.add(e)
            a_, b_ = g.edges[e]
            for w in {a_, b_}:
                count[w] += 1
                if count[w] >= t and not saturated[w]:
                    queue.append(w)
    return frozenset(inside)


def _edge_components(g: Graph, edges: Iterable[int]) -> list[tuple[frozenset[int], frozenset[int]]]:
    """Connected pieces (vertices, edges) of the subgraph spanned by ``edges``."""
    edges = sorted(edges)
    if not edges:
        return []
    labels = component_labels(g.n, [g.edges[e] for e in edges])
    groups: dict[int, tuple[set, set]] = {}
    for e in edges:
        u, v = g.edges[e]
        vs, es = groups.setdefault(int(labels[u]), (set(), set()))
        vs.update((u, v))
        es.add(e)
    return [(frozenset(vs), frozenset(es)) for vs, es in (groups[k] for k in sorted(groups))]


# ---------------------------------------------------------------------------
# disordered flavour


@dataclass(frozen=True)
class DisorderedPolymer:
    vertices: frozenset[int]
    edges: frozenset[int]
    log_weight: float

    @property
    def size(self) -> int:
        return len(self.edges)


def disordered_polymers(g: Graph, f: Configuration, params: ModelParams,
                        check_phase: bool = True) -> list[DisorderedPolymer]:
    """One polymer per component of (V, In(F)), isolated vertices included."""
    if check_phase and f.in_count > params.eta * g.m:
        raise PhaseError(f"|In| = {f.in_count} exceeds η·m = {params.eta * g.m:.3f}")
    in_edges = f.in_edges()
    labels = component_labels(g.n, [g.edges[e] for e in in_edges])
    verts: dict[int, set] = {}
    edges: dict[int, set] = {}
    for v in range(g.n):
        verts.setdefault(int(labels[v]), set()).add(v)
    for e in in_edges:
        edges.setdefault(int(labels[g.edges[e][0]]), set()).add(e)
    out = []
    for k in sorted(verts):
        vs, es = verts[k], edges.get(k, set())
        lw = (1 - len(vs)) * params.log_q + len(es) * params.log_edge
        out.append(DisorderedPolymer(frozenset(vs), frozenset(es), lw))
    return out


def check_disordered_factorization(g: Graph, f: Configuration, params: ModelParams,
                                   check_phase: bool = True) -> float:
    polys = disordered_polymers(g, f, params, check_phase)
    rhs = g.n * params.log_q + sum(p.log_weight for p in polys)
    return abs(weight(g, f, params) - rhs)


# ---------------------------------------------------------------------------
# ordered flavour


@dataclass(frozen=True)
class OrderedPolymer:
    vertices: frozenset[int]
    edges: frozenset[int]
    unoccupied: frozenset[int]
    c_prime: int
    log_weight: float

    @property
    def size(self) -> int:
        return len(self.edges)

    def labelling(self) -> dict[int, int]:
        return {e: 0 if e in self.unoccupied else 1 for e in sorted(self.edges)}


def small_component_count(g: Graph, removed: Iterable[int]) -> int:
    """Components of (V, E ∖ removed) with fewer than n/2 vertices."""
    removed = set(removed)
    keep = [g.edges[e] for e in range(g.m) if e not in removed]
    labels = component_labels(g.n, keep)
    sizes = np.bincount(labels)
    return int(np.count_nonzero(sizes < g.n / 2))


def _out_edges(f: Union[Configuration, PartialConfiguration]) -> list[int]:
    if isinstance(f, PartialConfiguration):
        return sorted(f.out_edges())
    return f.out_edges()


def _in_count(f: Union[Configuration, PartialConfiguration]) -> int:
    return f.in_count


def ordered_polymers(g: Graph, f: Union[Configuration, PartialConfiguration], params: ModelParams,
                     check_phase: bool = True) -> list[OrderedPolymer]:
    """Components of G[B∞(Out(F))], labelled by F."""
    if check_phase and _in_count(f) < (1 - params.eta) * g.m:
        raise PhaseError(f"|In| = {_in_count(f)} is below (1-η)·m = {(1 - params.eta) * g.m:.3f}")
    out = set(_out_edges(f))
    closure = b_closure(g, out)
    polys = []
    for vs, es in _edge_components(g, closure):
        eu = frozenset(es & out)
        cp = small_component_count(g, eu)
        lw = cp * params.log_q - len(eu) * params.log_edge
        polys.append(OrderedPolymer(vs, es, eu, cp, lw))
    return polys


def check_ordered_factorization(g: Graph, f: Configuration, params: ModelParams,
                                check_phase: bool = True) -> float:
    polys = ordered_polymers(g, f, params, check_phase)
    rhs = params.log_q + g.m * params.log_edge + sum(p.log_weight for p in polys)
    return abs(weight(g, f, params) - rhs)


def largest_polymer_size(g: Graph, f: Configuration, flavor: str, params: ModelParams,
                         check_phase: bool = True) -> int:
    if flavor == "ordered":
        polys = ordered_polymers(g, f, params, check_phase)
    elif flavor == "disordered":
        polys = disordered_polymers(g, f, params, check_phase)
    else:
        raise ValueError("flavor must be 'ordered' or 'disordered'")
    return max((p.size for p in polys), default=0)


def largest_component_size(g: Graph, in_edges: Iterable[int]) -> int:
    labels = component_labels(g.n, [g.edges[e] for e in in_edges])
    return int(np.bincount(labels).max()) if g.n else 0


# ---------------------------------------------------------------------------
# census output


def polymer_census(g: Graph, f: Configuration, flavor: str, params: ModelParams,
                   check_phase: bool = True) -> list[dict]:
    rows = []
    if flavor == "ordered":
        for p in ordered_polymers(g, f, params, check_phase):
            rows.append({"flavor": flavor, "n_vertices": len(p.vertices), "n_edges": len(p.edges),
                         "n_unoccupied": len(p.unoccupied), "c_prime": p.c_prime,
                         "log_weight": p.log_weight})
    elif flavor == "disordered":
        for p in disordered_polymers(g, f, params, check_phase):
            rows.append({"flavor": flavor, "n_vertices": len(p.vertices), "n_edges": len(p.edges),
                         "n_unoccupied": 0, "c_prime": None, "log_weight": p.log_weight})
    else:
        raise ValueError("flavor must be 'ordered' or 'disordered'")
    return rows


def write_census(records: list[dict], path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(records, indent=1))
