"""Glauber dynamics for the random-cluster model, local chains and monotone couplings.

Every update consumes one edge choice and one uniform U from an ``RngStream``;
the edge goes in iff U < threshold, with threshold p̂ for a cut edge and p
otherwise.  Since p̂ <= p this makes the shared-uniform coupling monotone.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .connectivity import DynamicConnectivity, make_engine
from .graph import BallView, Graph
from .model import (Configuration, ModelParams, PhaseLabel, component_count,
                    component_labels, phase_of)
from .oracle import (MAX_MATRIX_EDGES, ExactDistribution, OracleSizeError,
                     exact_distribution, exact_transition_matrix, exact_tv)

_BUF = 4096


class RngStream:
    """Two independent streams of uniforms: one picks edges, one decides them.

    Edge choice is ``floor(V * m)`` so the stream does not depend on m and two
    chains on different edge sets can still share it.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        ss = np.random.SeedSequence(self.seed)
        edge_ss, u_ss = ss.spawn(2)
        self._edge_gen = np.random.Generator(np.random.PCG64(edge_ss))
        self._u_gen = np.random.Generator(np.random.PCG64(u_ss))
        self.counter = 0
        self._ev: list[float] = []
        self._uv: list[float] = []
        self._i = _BUF

    def _refill(self) -> None:
        self._ev_arr = self._edge_gen.random(_BUF)
        self._uv_arr = self._u_gen.random(_BUF)
        self._ev = self._ev_arr.tolist()
        self._uv = self._uv_arr.tolist()
        self._i = 0

    def raw_block(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        """The next ``count`` raw (V, U) pairs; edge e = floor(V * m)."""
        vs, us = [], []
        need = count
        while need:
            if self._i >= _BUF:
                self._refill()
            take = min(need, _BUF - self._i)
            vs.append(self._ev_arr[self._i:self._i + take])
            us.append(self._uv_arr[self._i:self._i + take])
            self._i += take
            need -= take
        self.counter += count
        if not vs:
            return np.empty(0), np.empty(0)
        return np.concatenate(vs), np.concatenate(us)

    def next_pair(self, m: int) -> tuple[int, float]:
        if self._i >= _BUF:
            self._refill()
        i = self._i
        self._i = i + 1
        self.counter += 1
        e = int(self._ev[i] * m)
        return (e if e < m else m - 1), self._uv[i]

    def pairs(self, m: int, count: int) -> tuple[np.ndarray, np.ndarray]:
        """The next ``count`` draws as arrays (same values next_pair would give)."""
        es = np.empty(count, dtype=np.int64)
        us = np.empty(count)
        for k in range(count):
            es[k], us[k] = self.next_pair(m)
        return es, us


# ---------------------------------------------------------------------------
# single chain


@dataclass
class ChainState:
    g: Graph
    config: Configuration
    engine: DynamicConnectivity
    rng: RngStream
    t: int = 0

    @classmethod
    def create(cls, g: Graph, x0: Configuration, seed: Union[int, RngStream],
               engine: str = "hdt") -> "ChainState":
        if len(x0) != g.m:
            raise ValueError("initial configuration has the wrong edge count")
        eng = make_engine(engine, g.n)
        for e in x0.in_edges():
            u, v = g.edges[e]
            eng.insert_edge(u, v, e)
        rng = seed if isinstance(seed, RngStream) else RngStream(seed)
        return cls(g, x0.copy(), eng, rng)

    def check_consistent(self) -> None:
        """Connectivity mirror holds exactly In(config) and agrees with a fresh labelling."""
        eng, g = self.engine, self.g
        if eng.edge_count() != self.config.in_count:
            raise AssertionError("mirror edge count differs from |In|")
        for e in self.config.in_edges():
            if not eng.has_edge(*g.edges[e], e):
                raise AssertionError(f"edge {e} missing from mirror")
        labels = component_labels(g.n, [g.edges[e] for e in self.config.in_edges()])
        for u in range(0, g.n, max(1, g.n // 16)):
            for v in range(0, g.n, max(1, g.n // 7)):
                if eng.connected(u, v) != (labels[u] == labels[v]):
                    raise AssertionError(f"mirror connectivity wrong for ({u}, {v})")


def update_threshold(s: ChainState, e: int, params: ModelParams) -> tuple[float, bool]:
    """(threshold, is_cut) for an update of edge e in the current state."""
    u, v = s.g.edges[e]
    cut = s.engine.would_be_cut_edge(u, v, e)
    return (params.p_hat if cut else params.p), cut


def set_edge(s: ChainState, e: int, value: int) -> None:
    old = s.config.bits[e]
    if old == value:
        return
    u, v = s.g.edges[e]
    if value:
        s.engine.insert_edge(u, v, e)
    else:
        s.engine.delete_edge(u, v, e)
    s.config.set(e, value)


def apply_update(s: ChainState, e: int, U: float, params: ModelParams) -> int:
    """One Glauber update of edge e with uniform U; returns the new state of e.

    The connectivity query is only needed when p̂ <= U < p, since otherwise both
    thresholds give the same decision.
    """
    p, p_hat = params.p, params.p_hat
    bits = s.config.bits
    cur = bits[e]
    if U < p_hat:
        new = 1
    elif U >= p:
        new = 0
    else:
        u, v = s.g.edges[e]
        eng = s.engine
        if cur:
            eng.delete_edge(u, v, e)
        new = 1 if eng.connected(u, v) else 0
        if new:
            eng.insert_edge(u, v, e)
        if new != cur:
            s.config.set(e, new)
        s.t += 1
        return new
    if new != cur:
        u, v = s.g.edges[e]
        if new:
            s.engine.insert_edge(u, v, e)
        else:
            s.engine.delete_edge(u, v, e)
        s.config.set(e, new)
    s.t += 1
    return new


def glauber_step(s: ChainState, params: ModelParams) -> ChainState:
    e, U = s.rng.next_pair(s.g.m)
    apply_update(s, e, U, params)
    return s


@dataclass
class ChainSummary:
    final: Configuration
    seed: int
    params: ModelParams
    times: list[int] = field(default_factory=list)
    in_counts: list[int] = field(default_factory=list)
    components: list[int] = field(default_factory=list)
    phases: list[str] = field(default_factory=list)

    def rows(self) -> Iterable[dict]:
        for t, k, c, ph in zip(self.times, self.in_counts, self.components, self.phases):
            yield {"t": t, "in_count": k, "components": c, "phase": ph,
                   "seed": self.seed, "q": self.params.q, "beta": self.params.beta}

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=TRAJECTORY_COLUMNS)
            w.writeheader()
            w.writerows(self.rows())


TRAJECTORY_COLUMNS = ["t", "in_count", "components", "phase", "seed", "q", "beta"]


def run_chain(g: Graph, params: ModelParams, x0: Configuration, steps: int, seed: int,
              stride: Optional[int] = None, engine: str = "hdt",
              csv_path: Optional[Union[str, Path]] = None,
              check_every: int = 0) -> ChainSummary:
    """Run ``steps`` single-edge updates, recording |In|, c(F) and the phase every ``stride`` steps."""
    s = ChainState.create(g, x0, seed, engine)
    stride = stride or max(1, g.m)
    summary = ChainSummary(s.config, seed, params)

    def record():
        summary.times.append(s.t)
        summary.in_counts.append(s.config.in_count)
        summary.components.append(component_count(g, s.config))
        summary.phases.append(phase_of(s.config, params, g.m).value)

    record()
    m = g.m
    for k in range(1, steps + 1):
        e, U = s.rng.next_pair(m)
        apply_update(s, e, U, params)
        if check_every and k % check_every == 0:
            s.check_consistent()
        if k % stride == 0:
            record()
    if steps % stride:
        record()
    summary.final = s.config
    if csv_path is not None:
        summary.to_csv(csv_path)
    return summary


def hitting_time_in_count(g: Graph, params: ModelParams, x0: Configuration, target: int,
                          seed: int, cap: int, engine: str = "hdt") -> Optional[int]:
    """First t at which |In| reaches ``target`` from the side x0 starts on; None past ``cap``."""
    upward = x0.in_count <= target
    if engine == "compiled":
        return _hitting_time_compiled(g, params, x0, target, seed, cap, upward)
    s = ChainState.create(g, x0, seed, engine)
    m = g.m
    cfg = s.config
    for t in range(cap + 1):
        k = cfg.in_count
        if (upward and k >= target) or (not upward and k <= target):
            return t
        e, U = s.rng.next_pair(m)
        apply_update(s, e, U, params)
    return None


# ---------------------------------------------------------------------------
# local chains on a ball


@dataclass
class LocalChainState(ChainState):
    """Chain on E(B_r(ρ)) with free (outside all-out) or wired (shell contracted) boundary."""
    ball: Optional[BallView] = None
    mode: str = "free"
    vmap: dict = field(default_factory=dict)
    ball_edges: tuple = ()
    edge_in_ball: Optional[np.ndarray] = None

    @classmethod
    def create_local(cls, g: Graph, ball: BallView, mode: str, x0: Configuration,
                     seed: Union[int, RngStream], engine: str = "hdt") -> "LocalChainState":
        if mode not in ("free", "wired"):
            raise ValueError("mode must be 'free' or 'wired'")
        verts = sorted(ball.vertices)
        vmap: dict[int, int] = {}
        if mode == "wired" and ball.shell:
            sink = 0
            for u in sorted(ball.shell):
                vmap[u] = sink
            nxt = 1
        else:
            nxt = 0
        for u in verts:
            if u not in vmap:
                vmap[u] = nxt
                nxt += 1
        eng = make_engine(engine, max(1, nxt))
        inside = np.zeros(g.m, dtype=bool)
        inside[list(ball.edges)] = True
        bits = np.where(inside, x0.bits, 0).astype(np.uint8)
        cfg = Configuration(bits)
        for e in cfg.in_edges():
            a, b = g.edges[e]
            eng.insert_edge(vmap[a], vmap[b], e)
        rng = seed if isinstance(seed, RngStream) else RngStream(seed)
        return cls(g, cfg, eng, rng, 0, ball, mode, vmap, tuple(ball.edges), inside)


def local_apply_update(s: LocalChainState, e: int, U: float, params: ModelParams) -> int:
    """Update edge e of the ball (no-op for edges outside it)."""
    if not s.edge_in_ball[e]:
        s.t += 1
        return int(s.config.bits[e])
    a, b = s.g.edges[e]
    u, v = s.vmap[a], s.vmap[b]
    cur = s.config.bits[e]
    eng = s.engine
    if cur:
        eng.delete_edge(u, v, e)
    cut = not eng.connected(u, v)
    new = 1 if U < (params.p_hat if cut else params.p) else 0
    if new:
        eng.insert_edge(u, v, e)
    s.config.set(e, new)
    s.t += 1
    return new


def _local_step(ball: BallView, s: LocalChainState, params: ModelParams) -> LocalChainState:
    k, U = s.rng.next_pair(len(s.ball_edges))
    local_apply_update(s, s.ball_edges[k], U, params)
    return s


def free_local_step(ball: BallView, s: LocalChainState, params: ModelParams) -> LocalChainState:
    if s.mode != "free":
        raise ValueError("state was built with a wired boundary")
    return _local_step(ball, s, params)


def wired_local_step(ball: BallView, s: LocalChainState, params: ModelParams) -> LocalChainState:
    if s.mode != "wired":
        raise ValueError("state was built with a free boundary")
    return _local_step(ball, s, params)


# ---------------------------------------------------------------------------
# coupled chains


POLICIES = ("none", "ordered", "disordered")


def _admissible(policy: str, k: int, m: int, params: ModelParams) -> bool:
    if policy == "none":
        return True
    if policy == "ordered":
        return k >= (1 - params.eta) * m
    if policy == "disordered":
        return k <= params.eta * m
    raise ValueError(f"unknown rejection policy {policy!r}")


@dataclass
class CoupledPair:
    """Lower and upper chains driven by one shared stream.

    ``violations`` counts edges in the lower chain but not the upper one and
    ``differences`` counts edges where the two disagree; both are maintained
    incrementally.
    """
    lower: ChainState
    upper: ChainState
    rng: RngStream
    lower_policy: str = "none"
    upper_policy: str = "none"
    t: int = 0
    violations: int = 0
    differences: int = 0
    first_rejection: Optional[int] = None
    first_violation: Optional[int] = None
    rejections: int = 0

    @classmethod
    def create(cls, g: Graph, lower: Configuration, upper: Configuration, seed: int,
               lower_policy: str = "none", upper_policy: str = "none",
               engine: str = "hdt") -> "CoupledPair":
        for pol in (lower_policy, upper_policy):
            if pol not in POLICIES:
                raise ValueError(f"unknown rejection policy {pol!r}")
        rng = RngStream(seed)
        lo = ChainState.create(g, lower, rng, engine)
        up = ChainState.create(g, upper, rng, engine)
        viol = int(np.count_nonzero(lower.bits > upper.bits))
        diff = int(np.count_nonzero(lower.bits != upper.bits))
        pair = cls(lo, up, rng, lower_policy, upper_policy, 0, viol, diff)
        if viol:
            pair.first_violation = 0
        return pair

    @property
    def ordered(self) -> bool:
        return self.violations == 0

    @property
    def coalesced(self) -> bool:
        return self.differences == 0

    @property
    def no_rejection_yet(self) -> bool:
        """The event that no rejection has fired up to now."""
        return self.first_rejection is None


def _policy_update(s: ChainState, policy: str, e: int, U: float, params: ModelParams) -> tuple[int, bool]:
    old = int(s.config.bits[e])
    new = apply_update(s, e, U, params)
    if new != old and not _admissible(policy, s.config.in_count, s.g.m, params):
        set_edge(s, e, old)
        return old, True
    return new, False


def monotone_coupled_step(c: CoupledPair, params: ModelParams) -> CoupledPair:
    m = c.lower.g.m
    e, U = c.rng.next_pair(m)
    lo_old, up_old = int(c.lower.config.bits[e]), int(c.upper.config.bits[e])
    lo_new, rej_lo = _policy_update(c.lower, c.lower_policy, e, U, params)
    up_new, rej_up = _policy_update(c.upper, c.upper_policy, e, U, params)
    c.t += 1
    if rej_lo or rej_up:
        c.rejections += 1
        if c.first_rejection is None:
            c.first_rejection = c.t
    c.violations += int(lo_new > up_new) - int(lo_old > up_old)
    c.differences += int(lo_new != up_new) - int(lo_old != up_old)
    if c.violations and c.first_violation is None:
        c.first_violation = c.t
    return c


@dataclass
class CoalescenceResult:
    seed: int
    cap: int
    steps: Optional[int]

    @property
    def exceeded(self) -> bool:
        return self.steps is None

    def as_record(self) -> dict:
        return {"seed": self.seed, "cap": self.cap, "steps": self.steps, "exceeded": self.exceeded}


def coalescence_time(g: Graph, params: ModelParams, seed: int, cap: int,
                     engine: str = "hdt") -> CoalescenceResult:
    """First t at which the all-out and all-in started chains agree, or Exceeded(cap)."""
    if engine == "compiled":
        return _coalescence_compiled(g, params, seed, cap)
    pair = CoupledPair.create(g, Configuration.all_out(g.m), Configuration.all_in(g.m), seed,
                              engine=engine)
    if pair.coalesced:
        return CoalescenceResult(seed, cap, 0)
    # inlined coupled loop: the hot path of the bottleneck experiments
    lo, up, rng = pair.lower, pair.upper, pair.rng
    lo_bits, up_bits = lo.config.bits, up.config.bits
    m = g.m
    diff = pair.differences
    for t in range(1, cap + 1):
        e, U = rng.next_pair(m)
        before = lo_bits[e] != up_bits[e]
        apply_update(lo, e, U, params)
        apply_update(up, e, U, params)
        after = lo_bits[e] != up_bits[e]
        if before != after:
            diff += 1 if after else -1
            if diff == 0:
                return CoalescenceResult(seed, cap, t)
    return CoalescenceResult(seed, cap, None)


_CHUNK = 1 << 16


def _coalescence_compiled(g: Graph, params: ModelParams, seed: int, cap: int) -> CoalescenceResult:
    from .kernels import CompiledGraph, pair_chunk

    cg = CompiledGraph(g)
    lo = np.zeros(g.m, dtype=np.uint8)
    up = np.ones(g.m, dtype=np.uint8)
    diff = g.m
    if diff == 0:
        return CoalescenceResult(seed, cap, 0)
    rng = RngStream(seed)
    done = 0
    while done < cap:
        vs, us = rng.raw_block(min(_CHUNK, cap - done))
        k, diff, cg.stamp = pair_chunk(lo, up, vs, us, g.m, params.p, params.p_hat, cg.eu, cg.ev,
                                       cg.ptr, cg.nbr, cg.eid, cg.seen, cg.stamp, cg.queue, diff)
        if k >= 0:
            return CoalescenceResult(seed, cap, done + k + 1)
        done += vs.size
    return CoalescenceResult(seed, cap, None)


def _hitting_time_compiled(g: Graph, params: ModelParams, x0: Configuration, target: int,
                           seed: int, cap: int, upward: bool) -> Optional[int]:
    from .kernels import CompiledGraph, single_chunk

    count = x0.in_count
    if (upward and count >= target) or (not upward and count <= target):
        return 0
    cg = CompiledGraph(g)
    bits = x0.bits.copy()
    rng = RngStream(seed)
    done = 0
    while done < cap:
        vs, us = rng.raw_block(min(_CHUNK, cap - done))
        k, count, cg.stamp = single_chunk(bits, count, vs, us, g.m, params.p, params.p_hat, cg.eu,
                                          cg.ev, cg.ptr, cg.nbr, cg.eid, cg.seen, cg.stamp,
                                          cg.queue, target, upward)
        if k >= 0:
            return done + k + 1
        done += vs.size
    return None


def in_count_trace(g: Graph, params: ModelParams, x0: Configuration, steps: int, stride: int,
                   seed: int, engine: str = "compiled") -> np.ndarray:
    """|In| at t = 0, stride, 2·stride, ... up to ``steps`` for one chain."""
    if stride < 1:
        raise ValueError("stride must be positive")
    n_out = steps // stride + 1
    out = np.empty(n_out, dtype=np.int64)
    out[0] = x0.in_count
    if engine != "compiled":
        s = ChainState.create(g, x0, seed, engine)
        for j in range(1, n_out):
            for _ in range(stride):
                e, U = s.rng.next_pair(g.m)
                apply_update(s, e, U, params)
            out[j] = s.config.in_count
        return out
    from .kernels import CompiledGraph, single_chunk

    cg = CompiledGraph(g)
    bits = x0.bits.copy()
    count = x0.in_count
    rng = RngStream(seed)
    for j in range(1, n_out):
        left = stride
        while left:
            vs, us = rng.raw_block(min(_CHUNK, left))
            _, count, cg.stamp = single_chunk(bits, count, vs, us, g.m, params.p, params.p_hat,
                                              cg.eu, cg.ev, cg.ptr, cg.nbr, cg.eid, cg.seen,
                                              cg.stamp, cg.queue, g.m + 1, True)
            left -= vs.size
        out[j] = count
    return out


# ---------------------------------------------------------------------------
# diagnostics


def _as_indices(samples, m: int) -> np.ndarray:
    if isinstance(samples, np.ndarray) and samples.dtype.kind in "iu":
        return samples.astype(np.int64)
    out = []
    for x in samples:
        if isinstance(x, Configuration):
            if x.m != m:
                raise ValueError(f"sample has {x.m} edges, reference has {m}")
            out.append(x.to_int())
        else:
            out.append(int(x))
    return np.asarray(out, dtype=np.int64)


def tv_distance_empirical(samples, reference: Union[ExactDistribution, np.ndarray],
                          projection: Optional[Sequence[int]] = None) -> float:
    """½ Σ |empirical - exact| over the full space, or over the pattern on ``projection`` edges."""
    probs = reference.probs if isinstance(reference, ExactDistribution) else np.asarray(reference)
    size = probs.size
    m = size.bit_length() - 1
    if 1 << m != size:
        raise ValueError("reference length is not a power of two")
    idx = _as_indices(samples, m)
    if idx.size == 0:
        raise ValueError("no samples")
    if idx.max() >= size or idx.min() < 0:
        raise ValueError("sample index outside the reference space")
    if projection is not None:
        code = np.zeros(idx.size, dtype=np.int64)
        for j, e in enumerate(projection):
            code |= ((idx >> e) & 1) << j
        xs = np.arange(size, dtype=np.int64)
        ref_code = np.zeros(size, dtype=np.int64)
        for j, e in enumerate(projection):
            ref_code |= ((xs >> e) & 1) << j
        k = 1 << len(projection)
        emp = np.bincount(code, minlength=k) / idx.size
        ref = np.bincount(ref_code, weights=probs, minlength=k)
        return float(0.5 * np.abs(emp - ref).sum())
    emp = np.bincount(idx, minlength=size) / idx.size
    return float(0.5 * np.abs(emp - probs).sum())


def exact_mixing_time(g: Graph, params: ModelParams, start: Union[Configuration, int],
                      t_max: int = 1_000_000, threshold: float = 0.25) -> int:
    """Smallest t with TV(P^t(start, ·), π) <= threshold, from the explicit kernel."""
    if g.m > MAX_MATRIX_EDGES:
        raise OracleSizeError(f"exact mixing time capped at m <= {MAX_MATRIX_EDGES}")
    pi = exact_distribution(g, params).probs
    PT = exact_transition_matrix(g, params).T.tocsr()
    row = np.zeros(1 << g.m)
    row[start.to_int() if isinstance(start, Configuration) else int(start)] = 1.0
    for t in range(t_max + 1):
        if exact_tv(row, pi) <= threshold:
            return t
        row = PT @ row
    raise RuntimeError(f"no mixing within {t_max} steps")


class EnsembleChain:
    """Many independent copies of the chain on a small graph, advanced in lockstep.

    Cut-edge status is read from a precomputed (2^m, m) table, so one step of
    the whole ensemble is a handful of array operations.  Each copy performs
    exactly the update ``apply_update`` would perform for the same (e, U).
    """

    def __init__(self, g: Graph, params: ModelParams, max_edges: int = 16):
        if g.m > max_edges:
            raise OracleSizeError(f"ensemble table capped at m <= {max_edges}")
        self.g, self.params = g, params
        size = 1 << g.m
        xs = np.arange(size, dtype=np.int64)
        self.cut = np.zeros((size, g.m), dtype=bool)
        for e, (u, v) in enumerate(g.edges):
            without = xs & ~(1 << e)
            self.cut[:, e] = ~self._connected(without, u, v)

    def _connected(self, xs: np.ndarray, u: int, v: int) -> np.ndarray:
        g = self.g
        reach = np.zeros((xs.size, g.n), dtype=bool)
        reach[:, u] = True
        while True:
            before = reach.sum()
            for e, (a, b) in enumerate(g.edges):
                on = ((xs >> e) & 1).astype(bool)
                spread = on & (reach[:, a] | reach[:, b])
                reach[spread, a] = True
                reach[spread, b] = True
            if reach.sum() == before:
                return reach[:, v]

    def step(self, states: np.ndarray, es: np.ndarray, us: np.ndarray) -> np.ndarray:
        thr = np.where(self.cut[states, es], self.params.p_hat, self.params.p)
        bit = np.left_shift(np.int64(1), es)
        return np.where(us < thr, states | bit, states & ~bit)

    def run(self, x0: int, copies: int, steps: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        states = np.full(copies, x0, dtype=np.int64)
        m = self.g.m
        for _ in range(steps):
            es = rng.integers(0, m, size=copies)
            us = rng.random(copies)
            states = self.step(states, es, us)
        return states
