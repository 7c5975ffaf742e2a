"""WSM-within-phase checks and the two revealing-coupling processes.

The processes expose edges of a ball in stages and couple a phase-conditioned
configuration with a boundary-conditioned one.  Every stage is asserted
against the invariants the construction is meant to maintain, and each run
ends with exactly one outcome tag.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .dynamics import ChainState, RngStream, _policy_update
from .graph import BallView, BfsDecomposition, Graph, GraphError, ball, bfs_decomposition, \
    choose_cut_radii, treelike_radius
from .model import (STAR, Configuration, ModelParams, PartialConfiguration, boundary_vertices,
                    component_labels, refines)
from .oracle import (MAX_ENUM_EDGES, ConditionalLaw, EmptySupportError, OracleSizeError,
                     conditional_law, exact_distribution)
from .polymers import largest_polymer_size

MAX_LP_BITS = 10


class InvariantViolation(AssertionError):
    """A reveal invariant failed; this is a defect, never data."""


class CouplingSetupError(ValueError):
    pass


# ---------------------------------------------------------------------------
# conditional marginals and WSM


@dataclass(frozen=True)
class MarginalEstimate:
    value: float
    stderr: float
    method: str
    samples: int = 0

    def __float__(self) -> float:
        return self.value


def boundary_clamp(g: Graph, b: BallView, boundary: str) -> PartialConfiguration:
    """All edges outside E(B) fixed in (plus) or out (minus)."""
    if boundary not in ("plus", "minus"):
        raise ValueError("boundary must be 'plus' or 'minus'")
    inside = b.edge_set()
    exterior = [e for e in range(g.m) if e not in inside]
    return PartialConfiguration.constant(g.m, exterior, 1 if boundary == "plus" else 0)


def _clamped_chain_marginal(g: Graph, params: ModelParams, clamp: PartialConfiguration, e: int,
                            seed: int, sweeps: int, batches: int, engine: str) -> MarginalEstimate:
    free = sorted(clamp.unrevealed())
    vals = clamp.vals.copy()
    vals[vals == STAR] = 0
    s = ChainState.create(g, Configuration(vals.astype(np.uint8)), RngStream(seed), engine)
    k = len(free)
    burn = sweeps * k
    for _ in range(burn):
        j, U = s.rng.next_pair(k)
        _policy_update(s, "none", free[j], U, params)
    per_batch = max(1, sweeps * k)
    means = []
    for _ in range(batches):
        hits = 0
        for _ in range(per_batch):
            j, U = s.rng.next_pair(k)
            _policy_update(s, "none", free[j], U, params)
            hits += int(s.config.bits[e])
        means.append(hits / per_batch)
    means = np.asarray(means)
    se = float(means.std(ddof=1) / math.sqrt(batches)) if batches > 1 else float("nan")
    return MarginalEstimate(float(means.mean()), se, "local-chain", batches * per_batch)


def conditional_edge_marginal(g: Graph, b: BallView, boundary: str, e: int, params: ModelParams,
                              method: str = "oracle", seed: int = 0, sweeps: int = 200,
                              batches: int = 20, engine: str = "unionfind") -> MarginalEstimate:
    """π_{B^±}(e ↦ 1) for an edge e inside the ball.

    The local-chain method runs Glauber updates on the ball edges only with the
    exterior clamped; its standard error comes from batch means.
    """
    if e not in b.edge_set():
        raise ValueError(f"edge {e} is not inside the ball")
    clamp = boundary_clamp(g, b, boundary)
    if method == "oracle":
        if len(b.edges) > MAX_ENUM_EDGES:
            raise OracleSizeError(f"ball has {len(b.edges)} edges, cap is {MAX_ENUM_EDGES}")
        law = conditional_law(g, params, clamp)
        return MarginalEstimate(law.edge_marginal(e), 0.0, "oracle")
    if method == "local-chain":
        est = _clamped_chain_marginal(g, params, clamp, e, seed, sweeps, batches, engine)
        if not np.isfinite(est.stderr):
            raise RuntimeError("local-chain estimate has no error bar; increase batches")
        return est
    raise ValueError(f"unknown method {method!r}")


def phase_edge_marginal(g: Graph, params: ModelParams, phase: str, e: int) -> float:
    """π^phase(e ↦ 1) exactly; raises EmptySupportError if the phase is empty."""
    if phase not in ("ordered", "disordered", "none"):
        raise ValueError(f"unknown phase {phase!r}")
    return exact_distribution(g, params, phase).edge_marginal(e)


@dataclass(frozen=True)
class WsmResult:
    gap: float
    passed: bool
    ball_marginal: float
    phase_marginal: float
    tolerance: float
    radius: int
    boundary: str


def wsm_check(g: Graph, v: int, e: int, r: int, phase: str, params: ModelParams,
              boundary: Optional[str] = None) -> WsmResult:
    """Gap between the extreme-boundary ball marginal and the phase marginal of e.

    The default boundary is plus for the ordered phase (and for "none") and
    minus for the disordered phase.
    """
    if v not in g.edges[e]:
        raise ValueError(f"edge {e} is not incident to {v}")
    if boundary is None:
        boundary = "minus" if phase == "disordered" else "plus"
    b = ball(g, v, r)
    bm = conditional_edge_marginal(g, b, boundary, e, params).value
    pm = phase_edge_marginal(g, params, phase, e)
    tol = 1.0 / (100 * g.m)
    gap = abs(bm - pm)
    return WsmResult(gap, gap <= tol, bm, pm, tol, r, boundary)


def wsm_gap_curve(g: Graph, v: int, e: int, radii: Iterable[int], phase: str,
                  params: ModelParams) -> list[WsmResult]:
    return [wsm_check(g, v, e, r, phase, params) for r in radii]


# ---------------------------------------------------------------------------
# optimal couplings of two laws on a common pattern space


@dataclass
class CouplingPlan:
    """Joint law of two patterns over the same edges; bit j is ``edges[j]``."""
    edges: tuple[int, ...]
    xs: np.ndarray
    ys: np.ndarray
    probs: np.ndarray
    tv: float
    maximal: bool
    monotone: bool
    method: str
    _cdf: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def disagreement(self) -> float:
        return float(self.probs[self.xs != self.ys].sum())

    def sample(self, rng: np.random.Generator) -> tuple[int, int]:
        if self._cdf is None:
            self._cdf = _cdf(self.probs)
        k = _pick(self._cdf, rng)
        return int(self.xs[k]), int(self.ys[k])


def _residual_product(mu: np.ndarray, nu: np.ndarray):
    """Plain maximal coupling: common mass on the diagonal, independent residuals."""
    common = np.minimum(mu, nu)
    c = common.sum()
    xs, ys, ps = [], [], []
    for x in np.flatnonzero(common > 0):
        xs.append(x)
        ys.append(x)
        ps.append(common[x])
    rest = 1.0 - c
    if rest > 1e-15:
        ra, rb = mu - common, nu - common
        for x in np.flatnonzero(ra > 0):
            for y in np.flatnonzero(rb > 0):
                xs.append(x)
                ys.append(y)
                ps.append(ra[x] * rb[y] / rest)
    return np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64), np.asarray(ps)


def _monotone_lp(mu: np.ndarray, nu: np.ndarray):
    """Coupling on pairs x ⊆ y (bitwise) maximising the diagonal; None if infeasible."""
    sx = np.flatnonzero(mu > 0)
    sy = np.flatnonzero(nu > 0)
    ypos = {int(y): j for j, y in enumerate(sy)}
    pairs_x, pairs_y = [], []
    for i, x in enumerate(sx.tolist()):
        for y in sy.tolist():
            if x & ~y == 0:
                pairs_x.append(i)
                pairs_y.append(ypos[y])
    if not pairs_x:
        return None
    px = np.asarray(pairs_x)
    py = np.asarray(pairs_y)
    nv = px.size
    cols = np.arange(nv)
    a_eq = sparse.vstack([
        sparse.csr_matrix((np.ones(nv), (px, cols)), shape=(sx.size, nv)),
        sparse.csr_matrix((np.ones(nv), (py, cols)), shape=(sy.size, nv)),
    ]).tocsr()
    b_eq = np.concatenate([mu[sx], nu[sy]])
    diag = (sx[px] == sy[py])
    cost = np.where(diag, -1.0, 0.0)
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    p = np.clip(res.x, 0, None)
    keep = p > 1e-15
    p = p[keep] / p[keep].sum()
    return sx[px[keep]], sy[py[keep]], p


def _sequential_monotone(mu: np.ndarray, nu: np.ndarray, k: int, rng: np.random.Generator) -> tuple[int, int]:
    """Edge-by-edge shared-uniform draw; exact marginals, monotone, not maximal."""
    idx = np.arange(mu.size, dtype=np.int64)
    mx, my = np.ones(mu.size, bool), np.ones(nu.size, bool)
    x = y = 0
    for j in range(k):
        bit = ((idx >> j) & 1).astype(bool)
        U = rng.random()
        ax, ay = mu[mx].sum(), nu[my].sum()
        px = mu[mx & bit].sum() / ax
        py = nu[my & bit].sum() / ay
        bx, by = int(U < px), int(U < py)
        x |= bx << j
        y |= by << j
        mx &= bit == bool(bx)
        my &= bit == bool(by)
    return x, y


def coupling_plan(mu: np.ndarray, nu: np.ndarray, edges: Sequence[int] = (),
                  monotone: bool = True, max_lp_bits: int = MAX_LP_BITS) -> CouplingPlan:
    """Maximal coupling of two laws on {0,1}^k, order preserving when the laws allow it.

    With ``monotone`` the LP looks for a coupling supported on x ⊆ y that puts
    the largest possible mass on the diagonal.  If that mass reaches the
    maximal-coupling bound the plan is both maximal and monotone.  When no
    order-preserving coupling exists the plain maximal coupling is used.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise ValueError("laws live on different spaces")
    tv = 0.5 * float(np.abs(mu - nu).sum())
    k = int(round(math.log2(mu.size))) if mu.size else 0
    if tv < 1e-12:
        sx = np.flatnonzero(mu > 0)
        return CouplingPlan(tuple(edges), sx, sx.copy(), mu[sx] / mu[sx].sum(), tv, True, True, "identity")
    if monotone and k <= max_lp_bits:
        sol = _monotone_lp(mu, nu)
        if sol is not None:
            xs, ys, ps = sol
            diag = float(ps[xs == ys].sum())
            return CouplingPlan(tuple(edges), xs, ys, ps, tv, abs(diag - (1 - tv)) < 1e-8, True, "lp")
    xs, ys, ps = _residual_product(mu, nu)
    mono = bool(np.all(xs & ~ys == 0))
    return CouplingPlan(tuple(edges), xs, ys, ps / ps.sum(), tv, True, mono, "residual")


# ---------------------------------------------------------------------------
# samplers


def _restrict(vals: np.ndarray, keep: Iterable[int]) -> PartialConfiguration:
    out = np.full(vals.size, STAR, dtype=np.int8)
    idx = list(keep)
    out[idx] = vals[idx]
    return PartialConfiguration(out)


def _fill(a: PartialConfiguration, edges: Sequence[int], pattern: int) -> PartialConfiguration:
    vals = a.vals.copy()
    for j, e in enumerate(edges):
        vals[e] = (pattern >> j) & 1
    return PartialConfiguration(vals)


def _cdf(p: np.ndarray) -> np.ndarray:
    c = np.cumsum(p)
    return c / c[-1]


def _pick(cdf: np.ndarray, rng: np.random.Generator) -> int:
    return int(min(np.searchsorted(cdf, rng.random(), side="right"), cdf.size - 1))


class OracleSampler:
    """Exact draws from conditional laws by enumeration of the unrevealed edges."""

    name = "oracle"
    exact = True

    def __init__(self, g: Graph, params: ModelParams, max_free: int = MAX_ENUM_EDGES,
                 max_lp_bits: int = MAX_LP_BITS):
        self.g = g
        self.params = params
        self.max_free = max_free
        self.max_lp_bits = max_lp_bits
        self._laws: dict = {}
        self._plans: dict = {}
        self._phase: dict = {}
        self.approximate_couplings = 0

    def law(self, a: PartialConfiguration, phase: Optional[str] = None) -> ConditionalLaw:
        key = (a.vals.tobytes(), phase)
        hit = self._laws.get(key)
        if hit is None:
            hit = conditional_law(self.g, self.params, a, phase, self.max_free)
            self._laws[key] = hit
        return hit

    def phase_draw(self, rng: np.random.Generator, phase: str) -> Configuration:
        hit = self._phase.get(phase)
        if hit is None:
            d = exact_distribution(self.g, self.params, phase)
            idx = np.flatnonzero(d.support)
            hit = (idx, _cdf(d.probs[idx]))
            self._phase[phase] = hit
        idx, cdf = hit
        x = int(idx[_pick(cdf, rng)])
        return Configuration.from_int(x, self.g.m)

    def draw(self, rng: np.random.Generator, a: PartialConfiguration,
             phase: Optional[str] = None) -> PartialConfiguration:
        key = (a.vals.tobytes(), phase, "cdf")
        cdf = self._laws.get(key)
        if cdf is None:
            cdf = _cdf(self.law(a, phase).probs)
            self._laws[key] = cdf
        return _fill(a, sorted(a.unrevealed()), _pick(cdf, rng))

    def plan(self, a1: PartialConfiguration, a2: PartialConfiguration,
             new_edges: Sequence[int]) -> CouplingPlan:
        key = (a1.vals.tobytes(), a2.vals.tobytes(), tuple(new_edges))
        hit = self._plans.get(key)
        if hit is None:
            mu = self.law(a1).project(new_edges)
            nu = self.law(a2).project(new_edges)
            hit = coupling_plan(mu, nu, new_edges, max_lp_bits=self.max_lp_bits)
            self._plans[key] = hit
        return hit

    def coupled(self, rng: np.random.Generator, a1: PartialConfiguration, a2: PartialConfiguration,
                new_edges: Sequence[int]) -> tuple[PartialConfiguration, PartialConfiguration]:
        if len(new_edges) > self.max_lp_bits:
            mu = self.law(a1).project(new_edges)
            nu = self.law(a2).project(new_edges)
            if 0.5 * np.abs(mu - nu).sum() < 1e-12:
                x = _pick(_cdf(mu), rng)
                y = x
            else:
                self.approximate_couplings += 1
                x, y = _sequential_monotone(mu, nu, len(new_edges), rng)
        else:
            x, y = self.plan(a1, a2, new_edges).sample(rng)
        return _fill(a1, new_edges, x), _fill(a2, new_edges, y)


class ChainSampler:
    """Approximate draws from clamped Glauber chains.

    Coupled draws run both chains from the same start with shared (e, U)
    draws, which preserves In-containment but is not a maximal coupling;
    every such draw counts as approximate.
    """

    name = "chain"
    exact = False

    def __init__(self, g: Graph, params: ModelParams, sweeps: int = 50, engine: str = "unionfind"):
        self.g = g
        self.params = params
        self.sweeps = sweeps
        self.engine = engine
        self.approximate_couplings = 0

    def _run(self, rng: np.random.Generator, clamps: Sequence[PartialConfiguration],
             start: int, policy: str = "none") -> list[Configuration]:
        free = sorted(clamps[0].unrevealed())
        stream = RngStream(int(rng.integers(2**63)))
        states = []
        for a in clamps:
            vals = a.vals.copy()
            vals[vals == STAR] = start
            states.append(ChainState.create(self.g, Configuration(vals.astype(np.uint8)),
                                            stream, self.engine))
        k = len(free)
        for _ in range(self.sweeps * k):
            j, U = stream.next_pair(k)
            for s in states:
                _policy_update(s, policy, free[j], U, self.params)
        return [s.config for s in states]

    def phase_draw(self, rng: np.random.Generator, phase: str) -> Configuration:
        start = 0 if phase == "disordered" else 1
        return self._run(rng, [PartialConfiguration.empty(self.g.m)], start, phase)[0]

    def draw(self, rng: np.random.Generator, a: PartialConfiguration,
             phase: Optional[str] = None) -> PartialConfiguration:
        start = 0 if phase == "disordered" else 1
        x = self._run(rng, [a], start, phase or "none")[0]
        return PartialConfiguration(x.bits.astype(np.int8))

    def coupled(self, rng: np.random.Generator, a1: PartialConfiguration, a2: PartialConfiguration,
                new_edges: Sequence[int]) -> tuple[PartialConfiguration, PartialConfiguration]:
        self.approximate_couplings += 1
        x1, x2 = self._run(rng, [a1, a2], 0)
        keep = a1.revealed() | set(new_edges)
        return _restrict(x1.bits.astype(np.int8), keep), _restrict(x2.bits.astype(np.int8), keep)


Sampler = Union[OracleSampler, ChainSampler]


def make_sampler(kind: Union[str, OracleSampler, ChainSampler], g: Graph, params: ModelParams) -> Sampler:
    if isinstance(kind, (OracleSampler, ChainSampler)):
        return kind
    if kind == "oracle":
        return OracleSampler(g, params)
    if kind == "chain":
        return ChainSampler(g, params)
    raise ValueError(f"unknown sampler {kind!r}")


def optimally_coupled_conditional_pair(g: Graph, a1: PartialConfiguration, a2: PartialConfiguration,
                                       f_next: Iterable[int], sampler: Sampler,
                                       rng: np.random.Generator
                                       ) -> tuple[PartialConfiguration, PartialConfiguration]:
    """Draw (A1', A2') from π_{A1,F} and π_{A2,F}, coupled maximally.

    If In(A1) ⊆ In(A2) the coupling also keeps In(A1') ⊆ In(A2').
    """
    if a1.revealed() != a2.revealed():
        raise ValueError("the two partial configurations reveal different edges")
    f_next = set(f_next)
    rev = a1.revealed()
    if not rev <= f_next:
        raise ValueError("F must contain the revealed edges")
    if sampler.g is not g:
        raise ValueError("sampler was built for a different graph")
    new_edges = tuple(sorted(f_next - rev))
    return sampler.coupled(rng, a1, a2, new_edges)


# ---------------------------------------------------------------------------
# process records


class CouplingOutcome(enum.Enum):
    AGREE_AT_V = "AgreeAtV"
    UNSUCCESSFUL_OCCUPANCY = "UnsuccessfulOccupancy"
    UNSUCCESSFUL_RADIUS = "UnsuccessfulRadius"
    LARGE_POLYMER_WITNESS = "LargePolymerWitness"


@dataclass
class RevealState:
    """One iteration of a reveal process.

    ``phase_config`` is the phase side (ordered or disordered) and
    ``ball_config`` the boundary side (plus or minus).
    """
    i: int
    revealed: frozenset[int]
    frontier: tuple[int, ...]
    phase_config: PartialConfiguration
    ball_config: PartialConfiguration
    distance: float
    w: Optional[int] = None
    p: Optional[int] = None


@dataclass
class CouplingResult:
    flavor: str
    seed: int
    outcome: CouplingOutcome
    phase_config: Configuration
    ball_config: Configuration
    radii: tuple[int, int, int]
    excess: int
    iterations: int
    occupancy_at_gate: int
    gate: float
    witness_size: Optional[int] = None
    witness_threshold: Optional[float] = None
    agree_at_v: bool = False
    approximate: bool = False
    trace: list[RevealState] = field(default_factory=list)

    def as_record(self) -> dict:
        r, r1, r2 = self.radii
        rec = {"seed": self.seed, "flavor": self.flavor, "outcome": self.outcome.value,
               "iterations": self.iterations, "occupancy_at_gate": self.occupancy_at_gate,
               "gate": self.gate, "radii": {"r": r, "r1": r1, "r2": r2}, "excess": self.excess,
               "agree_at_v": self.agree_at_v, "approximate": self.approximate}
        if self.witness_size is not None:
            rec["polymer_witness_size"] = self.witness_size
            rec["witness_threshold"] = self.witness_threshold
        return rec


def write_outcome_log(results: Iterable[CouplingResult], path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        for res in results:
            fh.write(json.dumps(res.as_record(), sort_keys=True) + "\n")


def _check(cond: bool, label: str, i: int, detail: str = "") -> None:
    if not cond:
        raise InvariantViolation(f"{label}({i}) failed" + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class _Layout:
    r: int
    r1: int
    r2: int
    excess: int
    tree: BfsDecomposition
    ball_edges: frozenset[int]
    tree_vertices: frozenset[int]
    dist: dict[int, int]


def _layout(g: Graph, v: int, r: Optional[int], radii: Optional[tuple[int, int]],
            k: Optional[int]) -> _Layout:
    if r is None:
        r = max(1, treelike_radius(g))
    if r < 1:
        raise CouplingSetupError("radius must be at least 1")
    dec = bfs_decomposition(g, v, r)
    excess = len(dec.excess_edges) if k is None else k
    if radii is None:
        try:
            r1, r2 = choose_cut_radii(dec, r, excess)
        except GraphError as err:
            raise CouplingSetupError(str(err)) from None
    else:
        r1, r2 = radii
        if not (0 <= r2 and 0 <= r1 <= r):
            raise CouplingSetupError(f"radii {radii} outside 0..{r}")
    inner = bfs_decomposition(g, v, r1)
    b1 = ball(g, v, r1)
    dist = g.distances_from(v)
    for u in b1.shell:
        if r1 > 0 and all(e in b1.edge_set() for e in g.adjacency[u]):
            raise CouplingSetupError(f"shell vertex {u} has no edge leaving B_{r1}; graph too small")
    return _Layout(r, r1, r2, excess, inner, b1.edge_set(), b1.vertices, dist)


def _edge_distance(g: Graph, edges: Iterable[int], dist: dict[int, int]) -> float:
    best = math.inf
    for e in edges:
        for x in g.edges[e]:
            d = dist.get(x, math.inf)
            if d < best:
                best = d
    return best


def _agree_at(g: Graph, v: int, x: PartialConfiguration, y: PartialConfiguration) -> bool:
    return all(x.vals[e] == y.vals[e] for e in g.adjacency[v])


def _component_sizes(g: Graph, a: PartialConfiguration) -> tuple[np.ndarray, np.ndarray]:
    labels = component_labels(g.n, [g.edges[e] for e in sorted(a.in_edges())])
    return labels, np.bincount(labels, minlength=1)


def _check_ordered_invariants(g: Graph, lay: _Layout, i: int, f: set, frontier: set,
                              a_ord: PartialConfiguration, a_plus: PartialConfiguration,
                              d_f: float) -> None:
    rev = frozenset(f)
    _check(a_ord.revealed() == rev and a_plus.revealed() == rev, "Inv1", i, "revealed sets differ")
    _check(a_ord.in_edges() <= a_plus.in_edges(), "Inv1", i, "In not nested")
    exterior = frozenset(range(g.m)) - lay.ball_edges
    _check(exterior <= rev, "Inv1", i, "exterior not revealed")
    t = lay.tree
    seen: set = set()
    sub_e: set = set()
    for u in frontier:
        vs = set(t.subtree_vertices(u, lay.r1))
        _check(not (vs & seen), "Inv2", i, f"subtree of {u} overlaps")
        seen |= vs
        sub_e |= t.subtree_edges(u, lay.r1)
    touched = {x for e in rev for x in g.edges[e]} & lay.tree_vertices
    _check(seen == touched, "Inv3", i, "frontier subtrees do not cover V(F) ∩ V(T)")
    _check(sub_e <= rev, "Inv3", i, "frontier subtree edges not revealed")
    if d_f > lay.r2:
        _check(boundary_vertices(g, rev) <= frontier, "Inv4", i, "boundary escapes the frontier")


def _step_invariants(i: int, f: set, f_next: set, before: Sequence[PartialConfiguration],
                     after: Sequence[PartialConfiguration]) -> None:
    _check(f < f_next, "Inv5", i, "revealed set did not grow")
    for a, b in zip(before, after):
        _check(refines(a, b), "Inv6", i, "draw does not refine its predecessor")


def _finish(a: PartialConfiguration) -> Configuration:
    return a.to_configuration()


def revealing_coupling_ordered(g: Graph, v: int, r: Optional[int], params: ModelParams, seed: int,
                               sampler: Union[str, Sampler] = "oracle",
                               radii: Optional[tuple[int, int]] = None,
                               excess: Optional[int] = None, keep_trace: bool = True) -> CouplingResult:
    """Couple F^ord ~ π^ord with F^+ ~ π_{B^+_{r1}(v)} by revealing subtrees from the leaves in."""
    smp = make_sampler(sampler, g, params)
    rng = np.random.default_rng(seed)
    lay = _layout(g, v, r, radii, excess)
    t, m = lay.tree, g.m
    approx0 = smp.approximate_couplings
    f0 = set(range(m)) - lay.ball_edges
    full = smp.phase_draw(rng, "ordered")
    a_ord = _restrict(full.bits.astype(np.int8), f0)
    occupancy = a_ord.in_count
    gate = (1 - params.eta) * m
    plus_clamp = PartialConfiguration.constant(m, f0, 1)
    base = dict(flavor="ordered", seed=seed, radii=(lay.r, lay.r1, lay.r2), excess=lay.excess,
                occupancy_at_gate=occupancy, gate=gate)
    if occupancy < gate:
        x_ord = smp.draw(rng, a_ord, "ordered")
        x_plus = smp.draw(rng, plus_clamp)
        return CouplingResult(outcome=CouplingOutcome.UNSUCCESSFUL_OCCUPANCY,
                              phase_config=_finish(x_ord), ball_config=_finish(x_plus),
                              iterations=0, agree_at_v=_agree_at(g, v, x_ord, x_plus),
                              approximate=not smp.exact, **base)
    a_plus = plus_clamp
    f = set(f0)
    frontier = {u for u in lay.tree_vertices if t.depth[u] == lay.r1}
    trace: list[RevealState] = []
    i = 0
    outcome = None
    while True:
        d_f = _edge_distance(g, f, lay.dist)
        _check_ordered_invariants(g, lay, i, f, frontier, a_ord, a_plus, d_f)
        if keep_trace:
            trace.append(RevealState(i, frozenset(f), tuple(sorted(frontier)), a_ord, a_plus, d_f))
        if d_f <= lay.r2:
            break
        bnd = boundary_vertices(g, frozenset(f))
        labels, sizes = _component_sizes(g, a_ord)
        small = [w for w in bnd if sizes[labels[w]] < g.n / 2]
        if not small:
            outcome = CouplingOutcome.AGREE_AT_V
            break
        w = max(small, key=lambda u: (lay.dist[u], -t.dfs_index[u]))
        p = t.parent[w]
        f_next = f | t.subtree_edges(p, lay.r1)
        n_ord, n_plus = optimally_coupled_conditional_pair(g, a_ord, a_plus, f_next, smp, rng)
        _step_invariants(i, f, f_next, (a_ord, a_plus), (n_ord, n_plus))
        if keep_trace:
            trace[-1].w, trace[-1].p = w, p
        frontier = (frontier - set(t.subtree_vertices(p, lay.r1))) | {p}
        f, a_ord, a_plus = f_next, n_ord, n_plus
        i += 1
    x_ord, x_plus = optimally_coupled_conditional_pair(g, a_ord, a_plus, range(m), smp, rng)
    agree = _agree_at(g, v, x_ord, x_plus)
    approximate = smp.approximate_couplings > approx0 or not smp.exact
    res = CouplingResult(outcome=outcome, phase_config=_finish(x_ord), ball_config=_finish(x_plus),
                         iterations=i, agree_at_v=agree, approximate=approximate, trace=trace, **base)
    if outcome is CouplingOutcome.AGREE_AT_V:
        if not approximate:
            _check(agree, "Agree", i, "identical projections were not coupled to agree at v")
        return res
    size = largest_polymer_size(g, res.phase_config, "ordered", params)
    thr = lay.r / (400 * g.max_degree * (1 + lay.excess)) - 1
    res.witness_size, res.witness_threshold = size, thr
    res.outcome = (CouplingOutcome.LARGE_POLYMER_WITNESS if size >= max(thr, 1)
                   else CouplingOutcome.UNSUCCESSFUL_RADIUS)
    return res


def _witness_component(g: Graph, a: PartialConfiguration, bnd: set, final: Configuration
                       ) -> Optional[int]:
    """Edge count, in the final configuration, of a component joining two boundary vertices."""
    labels, _ = _component_sizes(g, a)
    seen: dict[int, int] = {}
    hit = None
    for u in sorted(bnd):
        lab = int(labels[u])
        if lab in seen:
            hit = u
            break
        seen[lab] = u
    if hit is None:
        return None
    fl = component_labels(g.n, [g.edges[e] for e in final.in_edges()])
    target = fl[hit]
    return sum(1 for e in final.in_edges() if fl[g.edges[e][0]] == target)


def revealing_coupling_disordered(g: Graph, v: int, params: ModelParams, seed: int,
                                  sampler: Union[str, Sampler] = "oracle", r: Optional[int] = None,
                                  radii: Optional[tuple[int, int]] = None,
                                  excess: Optional[int] = None, keep_trace: bool = True) -> CouplingResult:
    """Couple F^dis ~ π^dis with F^- ~ π_{B^-_{r1}(v)} in two bulk reveals."""
    smp = make_sampler(sampler, g, params)
    rng = np.random.default_rng(seed)
    lay = _layout(g, v, r, radii, excess)
    m = g.m
    approx0 = smp.approximate_couplings
    f0 = set(range(m)) - lay.ball_edges
    full = smp.phase_draw(rng, "disordered")
    a_dis = _restrict(full.bits.astype(np.int8), f0)
    occupancy = a_dis.in_count
    gate = params.eta * m - len(lay.ball_edges)
    minus_clamp = PartialConfiguration.constant(m, f0, 0)
    base = dict(flavor="disordered", seed=seed, radii=(lay.r, lay.r1, lay.r2), excess=lay.excess,
                occupancy_at_gate=occupancy, gate=gate)
    if occupancy > gate:
        x_dis = smp.draw(rng, a_dis, "disordered")
        x_minus = smp.draw(rng, minus_clamp)
        return CouplingResult(outcome=CouplingOutcome.UNSUCCESSFUL_OCCUPANCY,
                              phase_config=_finish(x_dis), ball_config=_finish(x_minus),
                              iterations=0, agree_at_v=_agree_at(g, v, x_dis, x_minus),
                              approximate=not smp.exact, **base)
    a_minus = minus_clamp
    trace = [RevealState(0, frozenset(f0), (), a_dis, a_minus, _edge_distance(g, f0, lay.dist))]
    inner = ball(g, v, lay.r2 + 1).edge_set()
    f1 = set(range(m)) - inner
    b_minus, b_dis = optimally_coupled_conditional_pair(g, a_minus, a_dis, f1, smp, rng)
    _check(b_minus.revealed() == b_dis.revealed() == frozenset(f1), "Inv1", 1, "revealed sets differ")
    _check(b_minus.in_edges() <= b_dis.in_edges(), "Inv1", 1, "In not nested")
    if f0 != f1:
        _step_invariants(0, f0, f1, (a_minus, a_dis), (b_minus, b_dis))
    if keep_trace:
        trace.append(RevealState(1, frozenset(f1), (), b_dis, b_minus, _edge_distance(g, f1, lay.dist)))
    x_minus, x_dis = optimally_coupled_conditional_pair(g, b_minus, b_dis, range(m), smp, rng)
    agree = _agree_at(g, v, x_dis, x_minus)
    approximate = smp.approximate_couplings > approx0 or not smp.exact
    res = CouplingResult(outcome=CouplingOutcome.AGREE_AT_V, phase_config=_finish(x_dis),
                         ball_config=_finish(x_minus), iterations=1, agree_at_v=agree,
                         approximate=approximate, trace=trace if keep_trace else [], **base)
    bnd = boundary_vertices(g, frozenset(f1))
    size = _witness_component(g, b_dis, bnd, res.phase_config)
    if size is None:
        if not approximate:
            _check(agree, "Agree", 1, "free boundary but disagreement at v")
        return res
    res.witness_size = size
    res.witness_threshold = lay.r / (lay.excess + 1) - 2
    _check(size >= lay.r1 - lay.r2 - 1, "Witness", 1, f"component of {size} edges is shorter than the shell")
    res.outcome = CouplingOutcome.LARGE_POLYMER_WITNESS
    return res


def law_of(results: Sequence[CouplingResult], side: str) -> np.ndarray:
    """Configuration indices (oracle bit order) of one side of many runs."""
    pick = (lambda r: r.phase_config) if side == "phase" else (lambda r: r.ball_config)
    return np.asarray([pick(r).to_int() for r in results], dtype=np.int64)
