"""Brute-force exact computations on small graphs.

Configurations are enumerated in binary counting order: configuration index x
has edge e in iff bit e of x is set.  Every array indexed by configuration in
this module uses that order.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .graph import Graph
from .model import ModelParams, PartialConfiguration, PhaseLabel, component_labels

MAX_ENUM_EDGES = 20
MAX_MATRIX_EDGES = 12
MAX_DC_EDGES = 14
MAX_POTTS_STATES = 10**7
MAX_POLY_VERTICES = 16


class OracleSizeError(ValueError):
    pass


class EmptySupportError(ValueError):
    pass


# ---------------------------------------------------------------------------
# enumeration core


def _component_counts(n: int, edges, xs: np.ndarray) -> np.ndarray:
    """Components of (range(n), {edges[e] : bit e of x set}) for each x in ``xs``."""
    if n == 0:
        return np.zeros(xs.size, dtype=np.int16)
    labels = np.tile(np.arange(n, dtype=np.int16), (xs.size, 1))
    rows = np.arange(xs.size)[:, None]
    masks = [((xs >> e) & 1).astype(bool) for e in range(len(edges))]
    while True:
        before = labels.copy()
        for e, (u, v) in enumerate(edges):
            if u == v:
                continue
            mk = masks[e]
            lo = np.minimum(labels[mk, u], labels[mk, v])
            labels[mk, u] = lo
            labels[mk, v] = lo
        labels = labels[rows, labels]
        if np.array_equal(before, labels):
            break
    return (labels == np.arange(n, dtype=np.int16)).sum(axis=1).astype(np.int16)


def _popcount(xs: np.ndarray) -> np.ndarray:
    return np.bitwise_count(xs.astype(np.uint64)).astype(np.int16)


@lru_cache(maxsize=16)
def _enumeration(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """(in-counts, component counts) over all 2^m configurations."""
    if g.m > MAX_ENUM_EDGES:
        raise OracleSizeError(f"enumeration capped at m <= {MAX_ENUM_EDGES}, got {g.m}")
    xs = np.arange(1 << g.m, dtype=np.int64)
    comps = np.empty(xs.size, dtype=np.int16)
    chunk = 1 << 16
    for s in range(0, xs.size, chunk):
        comps[s:s + chunk] = _component_counts(g.n, g.edges, xs[s:s + chunk])
    return _popcount(xs), comps


def log_weights(g: Graph, params: ModelParams) -> np.ndarray:
    k, c = _enumeration(g)
    return c * params.log_q + k * params.log_edge


@dataclass
class ExactDistribution:
    """π over all 2^m configurations; zero mass outside ``support``."""
    m: int
    log_w: np.ndarray          # unrestricted log-weights
    support: np.ndarray        # boolean mask
    probs: np.ndarray
    log_z: float
    in_counts: np.ndarray
    components: np.ndarray
    restriction: str = "none"
    graph_digest: str = ""

    def mass(self, mask: np.ndarray) -> float:
        return float(self.probs[mask].sum())

    def edge_marginal(self, e: int) -> float:
        xs = np.arange(self.probs.size, dtype=np.int64)
        return float(self.probs[((xs >> e) & 1).astype(bool)].sum())

    def edge_marginals(self) -> np.ndarray:
        return np.array([self.edge_marginal(e) for e in range(self.m)])

    def in_count_law(self) -> np.ndarray:
        return np.bincount(self.in_counts, weights=self.probs, minlength=self.m + 1)

    def project(self, edges) -> np.ndarray:
        """Law of the pattern on ``edges``; pattern bit j is edge edges[j]."""
        xs = np.arange(self.probs.size, dtype=np.int64)
        code = np.zeros(xs.size, dtype=np.int64)
        for j, e in enumerate(edges):
            code |= ((xs >> e) & 1) << j
        return np.bincount(code, weights=self.probs, minlength=1 << len(edges))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.probs.size, size=size, p=self.probs)


def clamp_mask(m: int, a: PartialConfiguration) -> np.ndarray:
    if a.m != m:
        raise ValueError("partial configuration has the wrong edge count")
    rev, inn = a.masks()
    xs = np.arange(1 << m, dtype=np.int64)
    return (xs & rev) == inn


def restriction_mask(g: Graph, params: ModelParams,
                     restriction: Union[str, PhaseLabel, PartialConfiguration, None] = "none",
                     clamp: Optional[PartialConfiguration] = None) -> np.ndarray:
    k, _ = _enumeration(g)
    mask = np.ones(k.size, dtype=bool)
    if isinstance(restriction, PartialConfiguration):
        clamp, restriction = restriction, "none"
    if isinstance(restriction, PhaseLabel):
        restriction = restriction.value
    if restriction in (None, "none"):
        pass
    elif restriction == "ordered":
        mask &= k >= (1 - params.eta) * g.m
    elif restriction == "disordered":
        mask &= k <= params.eta * g.m
    else:
        raise ValueError(f"unknown restriction {restriction!r}")
    if clamp is not None:
        mask &= clamp_mask(g.m, clamp)
    return mask


def exact_distribution(g: Graph, params: ModelParams,
                       restriction: Union[str, PhaseLabel, PartialConfiguration, None] = "none",
                       clamp: Optional[PartialConfiguration] = None) -> ExactDistribution:
    """π_G, optionally restricted to a phase and/or conditioned on a partial configuration."""
    k, c = _enumeration(g)
    lw = c * params.log_q + k * params.log_edge
    mask = restriction_mask(g, params, restriction, clamp)
    if not mask.any():
        raise EmptySupportError("restricted support is empty")
    log_z = float(logsumexp(lw[mask]))
    probs = np.zeros(lw.size)
    probs[mask] = np.exp(lw[mask] - log_z)
    probs /= probs.sum()
    label = restriction if isinstance(restriction, str) else getattr(restriction, "value", "clamp")
    if clamp is not None or isinstance(restriction, PartialConfiguration):
        label = f"{label}+clamp" if label not in ("none", "clamp") else "clamp"
    return ExactDistribution(g.m, lw, mask, probs, log_z, k, c, str(label), g.digest)


def exact_tv(d1: Union[ExactDistribution, np.ndarray], d2: Union[ExactDistribution, np.ndarray]) -> float:
    p1 = d1.probs if isinstance(d1, ExactDistribution) else np.asarray(d1, dtype=float)
    p2 = d2.probs if isinstance(d2, ExactDistribution) else np.asarray(d2, dtype=float)
    if p1.shape != p2.shape:
        raise ValueError(f"distribution spaces differ: {p1.shape} vs {p2.shape}")
    return float(0.5 * np.abs(p1 - p2).sum())


@dataclass
class ConditionalLaw:
    """Law of the unrevealed edges given a clamp; pattern bit j is ``free_edges[j]``."""
    free_edges: tuple[int, ...]
    probs: np.ndarray
    log_z: float

    def edge_marginal(self, e: int) -> float:
        j = self.free_edges.index(e)
        xs = np.arange(self.probs.size, dtype=np.int64)
        return float(self.probs[((xs >> j) & 1).astype(bool)].sum())

    def project(self, edges) -> np.ndarray:
        """Law of the sub-pattern on ``edges`` (all must be free)."""
        pos = [self.free_edges.index(e) for e in edges]
        xs = np.arange(self.probs.size, dtype=np.int64)
        code = np.zeros(xs.size, dtype=np.int64)
        for j, b in enumerate(pos):
            code |= ((xs >> b) & 1) << j
        return np.bincount(code, weights=self.probs, minlength=1 << len(pos))


def conditional_law(g: Graph, params: ModelParams, clamp: PartialConfiguration,
                    phase: Optional[str] = None, max_free: int = MAX_ENUM_EDGES) -> ConditionalLaw:
    """π_A (or π^phase_A) over the unrevealed edges of A, exactly.

    Fixed in-edges are contracted first, so only the unrevealed edges are
    enumerated; the graph itself may be larger than the enumeration cap.
    """
    free = tuple(sorted(clamp.unrevealed()))
    k = len(free)
    if k > max_free:
        raise OracleSizeError(f"{k} unrevealed edges exceeds the cap {max_free}")
    fixed_in = sorted(clamp.in_edges())
    base = component_labels(g.n, [g.edges[e] for e in fixed_in])
    total_comps = int(base.max()) + 1 if g.n else 0
    touched = sorted({int(base[x]) for e in free for x in g.edges[e]})
    index = {c: i for i, c in enumerate(touched)}
    qedges = [(index[int(base[g.edges[e][0]])], index[int(base[g.edges[e][1]])]) for e in free]
    xs = np.arange(1 << k, dtype=np.int64)
    inner = _component_counts(len(touched), qedges, xs).astype(np.int64)
    comps = total_comps - len(touched) + inner
    in_counts = len(fixed_in) + _popcount(xs).astype(np.int64)
    lw = comps * params.log_q + in_counts * params.log_edge
    mask = np.ones(xs.size, dtype=bool)
    if phase == "ordered":
        mask &= in_counts >= (1 - params.eta) * g.m
    elif phase == "disordered":
        mask &= in_counts <= params.eta * g.m
    elif phase not in (None, "none"):
        raise ValueError(f"unknown phase {phase!r}")
    if not mask.any():
        raise EmptySupportError("no configuration refines the clamp inside the phase")
    log_z = float(logsumexp(lw[mask]))
    probs = np.zeros(xs.size)
    probs[mask] = np.exp(lw[mask] - log_z)
    probs /= probs.sum()
    return ConditionalLaw(free, probs, log_z)


# ---------------------------------------------------------------------------
# transition matrices


def _endpoints_connected(g: Graph, x: int, u: int, v: int, skip: int) -> bool:
    if u == v:
        return True
    seen = {u}
    stack = [u]
    while stack:
        a = stack.pop()
        for e in g.adjacency[a]:
            if e == skip or not (x >> e) & 1:
                continue
            b = g.other(e, a)
            if b == v:
                return True
            if b not in seen:
                seen.add(b)
                stack.append(b)
    return False


def exact_transition_matrix(g: Graph, params: ModelParams, method: str = "cut-edge") -> sparse.csr_matrix:
    """Single-edge Glauber kernel over 2^m states.

    ``method="cut-edge"`` follows the p / p̂ rule with a BFS cut-edge test;
    ``method="heat-bath"`` uses the weight ratio w(x∪e)/(w(x∪e)+w(x∖e)).
    The two are built independently and must agree.
    """
    m = g.m
    if m > MAX_MATRIX_EDGES:
        raise OracleSizeError(f"transition matrix capped at m <= {MAX_MATRIX_EDGES}, got {m}")
    size = 1 << m
    rows, cols, vals = [], [], []
    if method == "heat-bath":
        lw = log_weights(g, params)
    for x in range(size):
        for e in range(m):
            bit = 1 << e
            x_in, x_out = x | bit, x & ~bit
            if method == "cut-edge":
                u, v = g.edges[e]
                cut = not _endpoints_connected(g, x, u, v, skip=e)
                p_in = params.p_hat if cut else params.p
            elif method == "heat-bath":
                p_in = 1.0 / (1.0 + math.exp(lw[x_out] - lw[x_in]))
            else:
                raise ValueError(f"unknown method {method!r}")
            rows += [x, x]
            cols += [x_in, x_out]
            vals += [p_in / m, (1 - p_in) / m]
    if m == 0:
        return sparse.csr_matrix(np.ones((1, 1)))
    return sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))


def tv_trajectory(g: Graph, params: ModelParams, start: int, steps: int,
                  pi: Optional[ExactDistribution] = None) -> np.ndarray:
    """TV(P^t(start, ·), π) for t = 0..steps."""
    pi = pi or exact_distribution(g, params)
    P = exact_transition_matrix(g, params)
    row = np.zeros(1 << g.m)
    row[start] = 1.0
    out = [exact_tv(row, pi.probs)]
    PT = P.T.tocsr()
    for _ in range(steps):
        row = PT @ row
        out.append(exact_tv(row, pi.probs))
    return np.array(out)


# ---------------------------------------------------------------------------
# independent partition functions


def potts_partition_bruteforce(g: Graph, q: int, beta: float) -> float:
    """log Σ_σ exp(β · #monochromatic edges) over all q-colourings."""
    q = int(q)
    if q < 1:
        raise ValueError("q must be a positive integer")
    total = q ** g.n
    if total > MAX_POTTS_STATES:
        raise OracleSizeError(f"q^n = {total} exceeds {MAX_POTTS_STATES}")
    eu, ev = g.endpoints
    parts = []
    chunk = 1 << 18
    for s in range(0, total, chunk):
        idx = np.arange(s, min(total, s + chunk), dtype=np.int64)
        colours = np.empty((idx.size, g.n), dtype=np.int16)
        rest = idx.copy()
        for v in range(g.n):
            colours[:, v] = rest % q
            rest //= q
        mono = (colours[:, eu] == colours[:, ev]).sum(axis=1) if g.m else np.zeros(idx.size)
        parts.append(logsumexp(beta * mono))
    return float(logsumexp(parts))


def log_partition_deletion_contraction(g: Graph, params: ModelParams) -> float:
    """log Z by Z(G) = Z(G - e) + (e^β - 1) Z(G / e), loops contributing e^β."""
    if g.m > MAX_DC_EDGES:
        raise OracleSizeError(f"deletion-contraction capped at m <= {MAX_DC_EDGES}, got {g.m}")
    log_q, log_edge, beta = params.log_q, params.log_edge, params.beta

    @lru_cache(maxsize=None)
    def rec(n: int, edges: tuple) -> float:
        loops = sum(1 for a, b in edges if a == b)
        edges = tuple(e for e in edges if e[0] != e[1])
        if not edges:
            return n * log_q + loops * beta
        (a, b), rest = edges[0], edges[1:]
        deleted = rec(n, rest)
        # contract b into a, relabel the last vertex into b's slot
        last = n - 1

        def fix(w):
            w = a if w == b else w
            return b if w == last and b != last else w
        contracted = tuple(sorted(tuple(sorted((fix(x), fix(y)))) for x, y in rest))
        merged = log_edge + rec(n - 1, contracted)
        return float(np.logaddexp(deleted, merged)) + loops * beta

    return rec(g.n, tuple(sorted(tuple(sorted(e)) for e in g.edges)))


@lru_cache(maxsize=16)
def component_edge_counts(g: Graph) -> np.ndarray:
    """N[c, k] = #{F ⊆ E : |F| = k, c(V, F) = c}, exact, by a DP over vertex subsets.

    Works whenever n is small even if m is too large to enumerate.  Connected
    spanning-subgraph counts of each vertex subset come from inclusion-exclusion
    on the part containing the lowest vertex; the full table then splits off
    that part again.
    """
    n, m = g.n, g.m
    if n > MAX_POLY_VERTICES:
        raise OracleSizeError(f"subset DP capped at n <= {MAX_POLY_VERTICES}, got {n}")
    if m > 62:
        raise OracleSizeError("subset DP counts need m <= 62")
    full = (1 << n) - 1
    eu, ev = g.endpoints
    emask = (1 << eu.astype(np.int64)) | (1 << ev.astype(np.int64))
    subsets = np.arange(1 << n, dtype=np.int64)
    inner = ((subsets[:, None] & emask[None, :]) == emask[None, :]).sum(axis=1)
    binom = np.zeros((m + 1, m + 1), dtype=np.int64)
    for t in range(m + 1):
        for k in range(t + 1):
            binom[t, k] = math.comb(t, k)

    def sub_masks(s: int) -> np.ndarray:
        # all subsets of s containing its lowest bit
        low = s & -s
        rest = s ^ low
        pos = [b for b in range(n) if rest >> b & 1]
        t = np.arange(1 << len(pos), dtype=np.int64)
        out = np.full(t.size, low, dtype=np.int64)
        for j, b in enumerate(pos):
            out |= ((t >> j) & 1) << b
        return out

    conn = np.zeros((1 << n, m + 1), dtype=np.int64)
    table = np.zeros((1 << n, n + 1, m + 1), dtype=np.int64)
    table[0, 0, 0] = 1
    for s in range(1, full + 1):
        subs = sub_masks(s)
        proper = subs[subs != s]
        conn[s] = binom[inner[s]]
        if proper.size:
            a, b = conn[proper], binom[inner[s ^ proper]]
            for i in np.flatnonzero(a.any(axis=0)):
                conn[s, i:] -= a[:, i] @ b[:, : m + 1 - i]
        a, b = conn[subs], table[s ^ subs]
        for i in np.flatnonzero(a.any(axis=0)):
            table[s, 1:, i:] += np.einsum("r,rcj->cj", a[:, i], b[:, :n, : m + 1 - i])
    return table[full]


def in_count_log_polynomial(g: Graph, params: ModelParams) -> np.ndarray:
    """log Σ_{|F|=k} q^{c(F)} (e^β-1)^k for k = 0..m."""
    counts = component_edge_counts(g).astype(np.float64)
    cs = np.arange(counts.shape[0])[:, None]
    with np.errstate(divide="ignore"):
        terms = np.log(counts) + cs * params.log_q
    return logsumexp(terms, axis=0) + np.arange(g.m + 1) * params.log_edge


def in_count_law(g: Graph, params: ModelParams) -> tuple[np.ndarray, float]:
    """Exact law of |In(F)| under π_G and log Z, by enumeration when possible else subset DP."""
    if g.m <= MAX_ENUM_EDGES:
        d = exact_distribution(g, params)
        return d.in_count_law(), d.log_z
    lp = in_count_log_polynomial(g, params)
    lz = float(logsumexp(lp))
    return np.exp(lp - lz), lz


def phase_statistics(g: Graph, params: ModelParams) -> dict:
    """Phase masses, TV to the phase-restricted measures and the disordered tail.

    TV(π, π restricted to A) = 1 - π(A) for any event A, so all quantities are
    functions of the law of |In|.
    """
    law, log_z = in_count_law(g, params)
    k = np.arange(g.m + 1)
    ordered = k >= (1 - params.eta) * g.m
    disordered = k <= params.eta * g.m
    m_ord, m_dis = float(law[ordered].sum()), float(law[disordered].sum())
    tail_mask = disordered & (k >= params.zeta * g.m)
    return {
        "graph": g.digest,
        "q": params.q,
        "beta": params.beta,
        "eta": params.eta,
        "zeta": params.zeta,
        "log_z": log_z,
        "mass_ordered": m_ord,
        "mass_disordered": m_dis,
        "mass_neither": max(0.0, 1.0 - m_ord - m_dis),
        "tv_pi_ordered": 1.0 - m_ord,
        "tv_pi_disordered": 1.0 - m_dis,
        "dis_tail_zeta": float(law[tail_mask].sum() / m_dis) if m_dis > 0 else float("nan"),
        "ord_tail_zeta": (float(law[ordered & (k <= (1 - params.zeta) * g.m)].sum() / m_ord)
                          if m_ord > 0 else float("nan")),
    }


# ---------------------------------------------------------------------------
# dumps

ORDER_NOTE = "binary counting over edge indices; bit e of the index is edge e"


def write_oracle_dump(g: Graph, params: ModelParams, path: Union[str, Path]) -> tuple[Path, Path]:
    """Little-endian float64 log-weights in ``<path>.bin`` plus a JSON header."""
    base = Path(path)
    lw = log_weights(g, params).astype("<f8")
    bin_path, json_path = base.with_suffix(".bin"), base.with_suffix(".json")
    bin_path.write_bytes(lw.tobytes())
    header = {
        "graph_digest": g.digest,
        "n": g.n,
        "m": g.m,
        "params": params.as_record(),
        "order": ORDER_NOTE,
        "log_z": float(logsumexp(lw)),
        "sha256": hashlib.sha256(lw.tobytes()).hexdigest(),
    }
    json_path.write_text(json.dumps(header, indent=2, sort_keys=True))
    return bin_path, json_path


def read_oracle_dump(path: Union[str, Path]) -> tuple[dict, np.ndarray]:
    base = Path(path)
    header = json.loads(base.with_suffix(".json").read_text())
    raw = base.with_suffix(".bin").read_bytes()
    if hashlib.sha256(raw).hexdigest() != header["sha256"]:
        raise ValueError("oracle dump checksum mismatch")
    return header, np.frombuffer(raw, dtype="<f8").copy()
