"""Random-cluster parameters, configurations, weights and phases.

Weights are always carried as logarithms: log w(F) = c(F) log q + |F| log(e^β - 1).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .graph import BallView, Graph


@dataclass(frozen=True)
class ModelParams:
    """Model parameters plus the phase constants derived from them.

    ``delta_frac`` is the expansion fraction δ of the expander class; it only
    feeds the default phase margin η = min(δ/5, 1/100).  ``zeta`` defaults to
    20Δ/log q when that is below η, otherwise η/2.
    """
    q: float
    beta: float
    delta_deg: int = 5
    delta_frac: float = 0.1
    eta: Optional[float] = None
    zeta: Optional[float] = None

    def __post_init__(self):
        if self.q <= 0:
            raise ValueError("q must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.eta is None:
            object.__setattr__(self, "eta", min(self.delta_frac / 5, 1 / 100))
        if not 0 < self.eta < 0.5:
            raise ValueError(f"eta must lie in (0, 1/2), got {self.eta}")
        if self.zeta is None:
            formula = 20 * self.delta_deg / math.log(self.q) if self.q > 1 else math.inf
            object.__setattr__(self, "zeta", formula if formula < self.eta else self.eta / 2)

    @property
    def p(self) -> float:
        return -math.expm1(-self.beta)

    @property
    def p_hat(self) -> float:
        p = self.p
        return p / ((1 - p) * self.q + p)

    @property
    def log_q(self) -> float:
        return math.log(self.q)

    @property
    def log_edge(self) -> float:
        """log(e^β - 1)."""
        return math.log(math.expm1(self.beta))

    def with_beta(self, beta: float) -> "ModelParams":
        return ModelParams(self.q, beta, self.delta_deg, self.delta_frac, self.eta, self.zeta)

    def as_record(self) -> dict:
        return {"q": self.q, "beta": self.beta, "delta_deg": self.delta_deg,
                "eta": self.eta, "zeta": self.zeta}


# ---------------------------------------------------------------------------
# configurations


class Configuration:
    """Full assignment E -> {0,1} stored as a uint8 vector with a cached in-count."""

    __slots__ = ("bits", "_count")

    def __init__(self, bits):
        self.bits = np.asarray(bits, dtype=np.uint8).copy()
        self._count = int(self.bits.sum())

    @classmethod
    def all_in(cls, m: int) -> "Configuration":
        return cls(np.ones(m, dtype=np.uint8))

    @classmethod
    def all_out(cls, m: int) -> "Configuration":
        return cls(np.zeros(m, dtype=np.uint8))

    @classmethod
    def from_in_edges(cls, m: int, in_edges: Iterable[int]) -> "Configuration":
        bits = np.zeros(m, dtype=np.uint8)
        bits[list(in_edges)] = 1
        return cls(bits)

    @classmethod
    def from_int(cls, x: int, m: int) -> "Configuration":
        """Bit e of ``x`` is the state of edge e (the oracle enumeration order)."""
        return cls([(x >> e) & 1 for e in range(m)])

    def to_int(self) -> int:
        return sum(1 << e for e in np.flatnonzero(self.bits).tolist())

    @property
    def m(self) -> int:
        return self.bits.size

    @property
    def in_count(self) -> int:
        return self._count

    def __len__(self) -> int:
        return self.bits.size

    def __getitem__(self, e: int) -> int:
        return int(self.bits[e])

    def set(self, e: int, value: int) -> None:
        old = self.bits[e]
        if old != value:
            self.bits[e] = value
            self._count += 1 if value else -1

    def in_edges(self) -> list[int]:
        return np.flatnonzero(self.bits).tolist()

    def out_edges(self) -> list[int]:
        return np.flatnonzero(self.bits == 0).tolist()

    def copy(self) -> "Configuration":
        return Configuration(self.bits)

    def dominated_by(self, other: "Configuration") -> bool:
        """In(self) ⊆ In(other)."""
        return bool(np.all(self.bits <= other.bits))

    def __eq__(self, other) -> bool:
        return isinstance(other, Configuration) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def __repr__(self) -> str:
        return f"Configuration(m={self.m}, in={self._count})"

    def to_hex(self) -> str:
        packed = np.packbits(self.bits, bitorder="little")
        return f"{self.m}:{packed.tobytes().hex()}"

    @classmethod
    def from_hex(cls, text: str) -> "Configuration":
        m_str, body = text.split(":", 1)
        m = int(m_str)
        packed = np.frombuffer(bytes.fromhex(body), dtype=np.uint8)
        bits = np.unpackbits(packed, bitorder="little")
        if bits.size < m or bits[m:].any():
            raise ValueError("hex body does not match edge count")
        return cls(bits[:m])


STAR = -1


class PartialConfiguration:
    """Assignment E -> {0, 1, *}; * is stored as -1."""

    __slots__ = ("vals",)

    def __init__(self, vals):
        self.vals = np.asarray(vals, dtype=np.int8).copy()
        if np.any((self.vals != 0) & (self.vals != 1) & (self.vals != STAR)):
            raise ValueError("partial configuration values must be 0, 1 or *")

    @classmethod
    def empty(cls, m: int) -> "PartialConfiguration":
        return cls(np.full(m, STAR, dtype=np.int8))

    @classmethod
    def from_config(cls, f: Configuration, revealed: Optional[Iterable[int]] = None) -> "PartialConfiguration":
        if revealed is None:
            return cls(f.bits.astype(np.int8))
        vals = np.full(f.m, STAR, dtype=np.int8)
        idx = list(revealed)
        vals[idx] = f.bits[idx]
        return cls(vals)

    @classmethod
    def constant(cls, m: int, edges: Iterable[int], value: int) -> "PartialConfiguration":
        vals = np.full(m, STAR, dtype=np.int8)
        vals[list(edges)] = value
        return cls(vals)

    @property
    def m(self) -> int:
        return self.vals.size

    def revealed(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.vals != STAR).tolist())

    def unrevealed(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.vals == STAR).tolist())

    def in_edges(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.vals == 1).tolist())

    def out_edges(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.vals == 0).tolist())

    @property
    def in_count(self) -> int:
        return int(np.count_nonzero(self.vals == 1))

    def masks(self) -> tuple[int, int]:
        """(revealed mask, in mask) as integers in the oracle bit order."""
        rev = sum(1 << e for e in np.flatnonzero(self.vals != STAR).tolist())
        inn = sum(1 << e for e in np.flatnonzero(self.vals == 1).tolist())
        return rev, inn

    def is_full(self) -> bool:
        return not np.any(self.vals == STAR)

    def to_configuration(self) -> Configuration:
        if not self.is_full():
            raise ValueError("partial configuration has unrevealed edges")
        return Configuration(self.vals.astype(np.uint8))

    def copy(self) -> "PartialConfiguration":
        return PartialConfiguration(self.vals)

    def __eq__(self, other) -> bool:
        return isinstance(other, PartialConfiguration) and np.array_equal(self.vals, other.vals)

    def __hash__(self):
        return hash(self.vals.tobytes())

    def __repr__(self) -> str:
        return "PartialConfiguration(" + "".join("*01"[v + 1] for v in self.vals.tolist()) + ")"


def refines(a1: PartialConfiguration, a2: PartialConfiguration) -> bool:
    """True iff a1 ⊆ a2, i.e. a2 agrees with a1 wherever a1 is revealed."""
    rev = a1.vals != STAR
    return bool(np.array_equal(a1.vals[rev], a2.vals[rev]))


def union(a1: PartialConfiguration, a2: PartialConfiguration) -> PartialConfiguration:
    both = (a1.vals != STAR) & (a2.vals != STAR)
    if both.any():
        raise ValueError(f"revealed sets overlap on edges {np.flatnonzero(both).tolist()}")
    return PartialConfiguration(np.where(a1.vals != STAR, a1.vals, a2.vals))


# ---------------------------------------------------------------------------
# components and weights


def component_labels(n: int, pairs) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    adj = coo_matrix((np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    return connected_components(adj, directed=False)[1]


def _in_pairs(g: Graph, edges) -> np.ndarray:
    eu, ev = g.endpoints
    idx = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    return np.stack([eu[idx], ev[idx]], axis=1) if idx.size else np.zeros((0, 2), dtype=np.int64)


def component_count(g: Graph, f: Configuration) -> int:
    """Components of (V, In(F)); isolated vertices count."""
    labels = component_labels(g.n, _in_pairs(g, np.flatnonzero(f.bits)))
    return int(labels.max()) + 1 if g.n else 0


def components_of_edges(g: Graph, edges) -> np.ndarray:
    return component_labels(g.n, _in_pairs(g, edges))


def weight(g: Graph, f: Configuration, params: ModelParams) -> float:
    """log w_G(F)."""
    return component_count(g, f) * params.log_q + f.in_count * params.log_edge


def wired_component_count(g: Graph, b: BallView, f: Configuration) -> int:
    """Components of (B_r, In(F) ∩ E(B_r)) that avoid the shell S_r."""
    verts = sorted(b.vertices)
    index = {u: i for i, u in enumerate(verts)}
    in_ball = [e for e in b.edges if f[e]]
    pairs = [(index[g.edges[e][0]], index[g.edges[e][1]]) for e in in_ball]
    labels = component_labels(len(verts), pairs)
    touching = {labels[index[s]] for s in b.shell}
    return len(set(labels.tolist()) - touching)


def beta_c(q: float, delta_deg: int) -> float:
    """Exact ordered/disordered transition point on Δ-regular random graphs."""
    if q <= 2:
        raise ValueError("critical point formula needs q > 2")
    if delta_deg < 3:
        raise ValueError("critical point formula needs Δ >= 3")
    return math.log((q - 2) / ((q - 1) ** (1 - 2 / delta_deg) - 1))


def beta_c_asymptotic(q: float, delta_deg: int) -> float:
    return 2 * math.log(q) / delta_deg


class PhaseLabel(enum.Enum):
    ORDERED = "ordered"
    DISORDERED = "disordered"
    NEITHER = "neither"


def phase_of(f: Configuration | int, params: ModelParams, m: int) -> PhaseLabel:
    k = f if isinstance(f, (int, np.integer)) else f.in_count
    if k >= (1 - params.eta) * m:
        return PhaseLabel.ORDERED
    if k <= params.eta * m:
        return PhaseLabel.DISORDERED
    return PhaseLabel.NEITHER


def boundary_vertices(g: Graph, revealed: frozenset[int] | set[int]) -> set[int]:
    """Vertices incident to both a revealed and an unrevealed edge."""
    out = set()
    for v in range(g.n):
        inc = g.adjacency[v]
        has_r = any(e in revealed for e in inc)
        if has_r and any(e not in revealed for e in inc):
            out.add(v)
    return out


def boundary_component_set(g: Graph, a: PartialConfiguration) -> tuple[tuple[int, ...], ...]:
    """Classes of ∂R(A) under connectivity in (V, In(A)), canonically sorted."""
    bnd = boundary_vertices(g, a.revealed())
    if not bnd:
        return ()
    labels = components_of_edges(g, sorted(a.in_edges()))
    classes: dict[int, list[int]] = {}
    for v in sorted(bnd):
        classes.setdefault(int(labels[v]), []).append(v)
    return tuple(sorted(tuple(c) for c in classes.values()))
