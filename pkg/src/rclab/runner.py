"""Experiment specs, presets and the dispatcher behind the ``rclab`` command."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np
from scipy.special import logsumexp

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .coupling import (InvariantViolation, OracleSampler, revealing_coupling_disordered,
                       revealing_coupling_ordered, wsm_check)
from .dynamics import (coalescence_time, hitting_time_in_count, in_count_trace,
                       run_chain)
from .graph import (Graph, GraphError, complete_graph, cycle_graph, generate_random_regular,
                    hypercube_graph, path_graph, random_tree)
from .model import Configuration, ModelParams, beta_c
from .oracle import (MAX_DC_EDGES, MAX_MATRIX_EDGES, MAX_POLY_VERTICES, MAX_POTTS_STATES,
                     OracleSizeError, exact_distribution, exact_transition_matrix,
                     in_count_law, in_count_log_polynomial,
                     log_partition_deletion_contraction, phase_statistics,
                     potts_partition_bruteforce)
from .polymers import (PhaseError, check_disordered_factorization, check_ordered_factorization,
                       polymer_census)

KINDS = ("sample", "mix-scan", "phase-scan", "wsm-test", "polymer-census", "coupling-trace",
         "oracle-verify")

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 3, 2


class SpecError(ValueError):
    """A spec failed to parse or validate; the message names the field."""


# ---------------------------------------------------------------------------
# spec types


@dataclass
class GraphSource:
    kind: str = "generate"          # generate | file | named
    n: int = 12
    delta: int = 5
    seed: int = 0
    path: Optional[str] = None
    name: Optional[str] = None      # triangle, cycle, complete, path, hypercube, tree

    def build(self) -> Graph:
        if self.kind == "generate":
            return generate_random_regular(self.n, self.delta, seed=self.seed)
        if self.kind == "file":
            if not self.path:
                raise SpecError("graph.path: required when graph.kind = 'file'")
            return Graph.from_text(Path(self.path).read_text())
        if self.kind == "named":
            builders: dict[str, Callable[[], Graph]] = {
                "triangle": lambda: complete_graph(3),
                "cycle": lambda: cycle_graph(self.n),
                "complete": lambda: complete_graph(self.n),
                "path": lambda: path_graph(self.n),
                "hypercube": lambda: hypercube_graph(self.delta),
                "tree": lambda: random_tree(self.n, seed=self.seed),
            }
            if self.name not in builders:
                raise SpecError(f"graph.name: unknown graph {self.name!r}; choose from {sorted(builders)}")
            return builders[self.name]()
        raise SpecError(f"graph.kind: expected generate, file or named, got {self.kind!r}")


@dataclass
class ParamGrid:
    q: float = 2.0
    betas: Optional[list[float]] = None
    around_beta_c: Optional[list[float]] = None   # [low factor, high factor]
    points: int = 5
    eta: Optional[float] = None
    delta_frac: float = 0.1
    delta_deg: Optional[int] = None

    def values(self, g: Graph) -> list[float]:
        if self.betas is not None:
            return [float(b) for b in self.betas]
        if self.around_beta_c is None:
            raise SpecError("params: give either 'betas' or 'around_beta_c'")
        lo, hi = self.around_beta_c
        bc = beta_c(self.q, self.delta_deg or g.max_degree)
        if not math.isfinite(bc):
            raise SpecError(f"params.around_beta_c: β_c is undefined for q = {self.q}")
        return [float(x) for x in np.linspace(lo * bc, hi * bc, self.points)]

    def model(self, g: Graph, beta: float) -> ModelParams:
        return ModelParams(q=self.q, beta=beta, delta_deg=self.delta_deg or max(g.max_degree, 1),
                           delta_frac=self.delta_frac, eta=self.eta)


@dataclass
class ExperimentSpec:
    kind: str
    graph: GraphSource = field(default_factory=GraphSource)
    params: ParamGrid = field(default_factory=ParamGrid)
    seeds: list[int] = field(default_factory=lambda: [0])
    caps: dict[str, int] = field(default_factory=dict)
    options: dict[str, Any] = field(default_factory=dict)
    output: str = "results"
    name: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def cap(self, key: str, default: int) -> int:
        return int(self.caps.get(key, default))


_TOP = {"kind", "graph", "params", "seeds", "caps", "options", "output", "name"}


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise SpecError(f"{where}: expected a table, got {type(data).__name__}")
    known = set(cls.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise SpecError(f"{where}: unknown field(s) {sorted(extra)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise SpecError(f"{where}: {exc}") from None


def spec_from_dict(data: dict) -> ExperimentSpec:
    extra = set(data) - _TOP
    if extra:
        raise SpecError(f"unknown top-level field(s) {sorted(extra)}")
    if "kind" not in data:
        raise SpecError("kind: missing")
    if data["kind"] not in KINDS:
        raise SpecError(f"kind: {data['kind']!r} is not one of {list(KINDS)}")
    spec = ExperimentSpec(
        kind=data["kind"],
        graph=_build(GraphSource, data.get("graph", {}), "graph"),
        params=_build(ParamGrid, data.get("params", {}), "params"),
        seeds=[int(s) for s in data.get("seeds", [0])],
        caps={k: int(v) for k, v in data.get("caps", {}).items()},
        options=dict(data.get("options", {})),
        output=str(data.get("output", "results")),
        name=str(data.get("name", "")),
    )
    if spec.params.q <= 0:
        raise SpecError("params.q: must be positive")
    if not spec.seeds:
        raise SpecError("seeds: at least one seed is required")
    return spec


def load_spec(path: Union[str, Path]) -> ExperimentSpec:
    """Read a TOML or JSON spec; parse errors carry line and column."""
    text = str(path)
    if text.startswith("preset:"):
        name = text.split(":", 1)[1]
        if name not in PRESETS:
            raise SpecError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
        return PRESETS[name]()
    path = Path(path)
    raw = path.read_text()
    if path.suffix == ".json":
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    else:
        try:
            data = tomllib.loads(raw)
        except tomllib.TOMLDecodeError as exc:
            raise SpecError(f"{path}: {exc}") from None
    return spec_from_dict(data)


# ---------------------------------------------------------------------------
# output plumbing


def build_id() -> str:
    """git-describe of the source tree when available, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"rclab-{__version__}-{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"rclab-{__version__}"


def _csv_text(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in cols})
    return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    files: dict[str, str]
    warnings: list[dict]
    tables: dict[str, list[dict]]


class _Sink:
    def __init__(self):
        self.tables: dict[str, list[dict]] = {}
        self.logs: dict[str, list[dict]] = {}
        self.warnings: list[dict] = []

    def rows(self, name: str, rows: list[dict]) -> None:
        self.tables.setdefault(name, []).extend(rows)

    def log(self, name: str, recs: list[dict]) -> None:
        self.logs.setdefault(name, []).extend(recs)

    def warn(self, kind: str, **info) -> None:
        self.warnings.append({"kind": kind, **info})


def _stamp(rows: list[dict], build: str, ghash: str, params: Optional[ModelParams],
           seed: Optional[int]) -> list[dict]:
    head = {"build": build, "graph": ghash}
    if params is not None:
        head.update(q=params.q, beta=params.beta, eta=params.eta)
    head["seed"] = seed
    return [{**head, **r} for r in rows]


# ---------------------------------------------------------------------------
# per-kind work items (module level so a process pool can pickle them)


def _task_sample(g: Graph, p: ModelParams, seed: int, opts: dict, caps: dict) -> dict:
    start = opts.get("start", "all-out")
    x0 = Configuration.all_in(g.m) if start == "all-in" else Configuration.all_out(g.m)
    steps = int(caps.get("steps", 10 * g.m))
    stride = int(opts.get("stride", max(1, g.m)))
    summ = run_chain(g, p, x0, steps, seed, stride=stride, engine=opts.get("engine", "hdt"))
    traj = [{"t": t, "in_count": k, "components": c, "phase": ph}
            for t, k, c, ph in zip(summ.times, summ.in_counts, summ.components, summ.phases)]
    final = {"start": start, "steps": steps, "final_in_count": summ.final.in_count,
             "final_hex": summ.final.to_hex()}
    return {"trajectories": traj, "summary": [final]}


def reference_in_counts(g: Graph, p: ModelParams, start: str, seed: int, burn: int,
                        samples: int, stride: int) -> np.ndarray:
    """In-count samples of a long run from an extreme start; the phase-conditional proxy."""
    x0 = Configuration.all_in(g.m) if start == "all-in" else Configuration.all_out(g.m)
    tr = in_count_trace(g, p, x0, burn + samples * stride, stride, seed)
    return tr[burn // stride + 1:]


def _budget(g: Graph, factor: float) -> int:
    return int(factor * g.m * math.log(g.m))


def _task_mix(g: Graph, p: ModelParams, seeds: list[int], opts: dict, caps: dict) -> dict:
    starts = opts.get("starts", ["worst", "all-out", "all-in"])
    cap = int(caps.get("coalescence", 10**6))
    budget = _budget(g, float(opts.get("budget_factor", 50)))
    ref_burn = int(caps.get("reference_burn", 30 * 20000))
    ref_samples = int(opts.get("reference_samples", 30))
    ref_stride = int(opts.get("reference_stride", 20000))
    engine = opts.get("engine", "compiled")
    rows, refs = [], []
    for start in starts:
        if start == "worst":
            for s in seeds:
                res = coalescence_time(g, p, s, cap, engine=engine)
                rows.append({"start": "worst", "seed_run": s, "steps": res.steps,
                             "exceeded": res.exceeded, "limit": cap, "target": None})
            continue
        ref = reference_in_counts(g, p, start, 10**6 + 7919 * seeds[0], ref_burn, ref_samples, ref_stride)
        target = int(np.median(ref))
        refs.append({"start": start, "reference_median": target,
                     "reference_min": int(ref.min()), "reference_max": int(ref.max())})
        x0 = Configuration.all_in(g.m) if start == "all-in" else Configuration.all_out(g.m)
        for s in seeds:
            h = hitting_time_in_count(g, p, x0, target, s, budget, engine=engine)
            rows.append({"start": start, "seed_run": s, "steps": h, "exceeded": h is None,
                         "limit": budget, "target": target})
    return {"mix": rows, "reference": refs}


def _task_phase(g: Graph, p: ModelParams) -> dict:
    st = phase_statistics(g, p)
    st.pop("graph", None)
    return {"phase": [st]}


def _task_wsm(g: Graph, p: ModelParams, opts: dict) -> dict:
    v = int(opts.get("vertex", 0))
    e = int(opts.get("edge", g.adjacency[v][0]))
    phase = opts.get("phase", "ordered")
    rows = []
    for r in opts.get("radii", [1, 2]):
        res = wsm_check(g, v, e, int(r), phase, p)
        rows.append({"vertex": v, "edge": e, "phase": phase, "radius": int(r), "gap": res.gap,
                     "passed": res.passed, "ball_marginal": res.ball_marginal,
                     "phase_marginal": res.phase_marginal, "tolerance": res.tolerance})
    return {"wsm": rows}


def _task_census(g: Graph, p: ModelParams, seed: int, opts: dict, caps: dict) -> dict:
    from .dynamics import ChainState, RngStream, _policy_update

    flavor = opts.get("flavor", "ordered")
    samples = int(opts.get("samples", 10))
    gap = int(caps.get("thin", 5 * g.m))
    burn = int(caps.get("burn", 20 * g.m))
    x0 = Configuration.all_in(g.m) if flavor == "ordered" else Configuration.all_out(g.m)
    s = ChainState.create(g, x0, RngStream(seed), opts.get("engine", "hdt"))
    rows, checks = [], []
    done = 0
    for k in range(samples):
        target = burn + k * gap
        while done < target:
            e, U = s.rng.next_pair(g.m)
            _policy_update(s, flavor, e, U, p)
            done += 1
        f = s.config.copy()
        try:
            census = polymer_census(g, f, flavor, p)
            check = (check_ordered_factorization if flavor == "ordered"
                     else check_disordered_factorization)(g, f, p)
        except PhaseError as exc:
            checks.append({"sample": k, "phase_error": str(exc)})
            continue
        for c in census:
            rows.append({"sample": k, **c})
        checks.append({"sample": k, "in_count": f.in_count, "n_polymers": len(census),
                       "largest": max((c["n_edges"] for c in census), default=0),
                       "factorization_residual": check})
    return {"polymers": rows, "census_summary": checks}


def _task_coupling(g: Graph, p: ModelParams, seeds: list[int], opts: dict) -> dict:
    flavor = opts.get("flavor", "ordered")
    v = int(opts.get("vertex", 0))
    r = opts.get("r")
    sampler = opts.get("sampler", "oracle")
    smp = OracleSampler(g, p) if sampler == "oracle" else sampler
    recs = []
    for s in seeds:
        if flavor == "ordered":
            res = revealing_coupling_ordered(g, v, r, p, s, smp, keep_trace=False)
        else:
            res = revealing_coupling_disordered(g, v, p, s, smp, r=r, keep_trace=False)
        recs.append(res.as_record())
    counts: dict[str, int] = {}
    for rec in recs:
        counts[rec["outcome"]] = counts.get(rec["outcome"], 0) + 1
    summary = [{"flavor": flavor, "outcome": k, "count": c} for k, c in sorted(counts.items())]
    return {"outcomes": recs, "coupling_summary": summary}


def _task_verify(g: Graph, p: ModelParams) -> dict:
    rows = []
    d = exact_distribution(g, p)
    rows.append({"check": "probabilities_sum", "residual": abs(float(d.probs.sum()) - 1)})
    if g.m <= MAX_DC_EDGES:
        dc = log_partition_deletion_contraction(g, p)
        rows.append({"check": "deletion_contraction_logZ",
                     "residual": abs(dc - d.log_z) / max(1.0, abs(d.log_z))})
    if float(p.q).is_integer() and p.q ** g.n <= MAX_POTTS_STATES:
        pz = potts_partition_bruteforce(g, int(p.q), p.beta)
        rows.append({"check": "potts_logZ", "residual": abs(pz - d.log_z)})
    if g.m <= MAX_MATRIX_EDGES:
        P = exact_transition_matrix(g, p)
        pi = d.probs
        rows.append({"check": "row_sums", "residual": float(np.abs(np.asarray(P.sum(axis=1)).ravel() - 1).max())})
        rows.append({"check": "stationarity", "residual": float(np.abs(pi @ P - pi).max())})
        flow = P.multiply(pi[:, None]).tocsr()
        rows.append({"check": "detailed_balance", "residual": float(abs(flow - flow.T).max())})
    if g.n <= MAX_POLY_VERTICES:
        lp = in_count_log_polynomial(g, p)
        law = np.exp(lp - logsumexp(lp))
        ref = np.bincount(d.in_counts, weights=d.probs, minlength=g.m + 1)
        rows.append({"check": "in_count_law_subset_dp", "residual": float(np.abs(law - ref).max())})
    tol = 1e-9
    for r in rows:
        r["tolerance"] = tol
        r["ok"] = r["residual"] < tol
    return {"verify": rows}


# ---------------------------------------------------------------------------
# dispatcher


def _work_items(spec: ExperimentSpec, g: Graph) -> list[tuple]:
    betas = spec.params.values(g)
    items = []
    for b in betas:
        p = spec.params.model(g, b)
        if spec.kind in ("sample", "polymer-census"):
            for s in spec.seeds:
                items.append((spec.kind, g, p, s, spec.options, spec.caps))
        elif spec.kind in ("mix-scan", "coupling-trace"):
            items.append((spec.kind, g, p, list(spec.seeds), spec.options, spec.caps))
        else:
            items.append((spec.kind, g, p, None, spec.options, spec.caps))
    return items


def _execute(item: tuple) -> tuple[dict, Optional[str]]:
    kind, g, p, seed, opts, caps = item
    try:
        if kind == "sample":
            out = _task_sample(g, p, seed, opts, caps)
        elif kind == "mix-scan":
            out = _task_mix(g, p, seed, opts, caps)
        elif kind == "phase-scan":
            out = _task_phase(g, p)
        elif kind == "wsm-test":
            out = _task_wsm(g, p, opts)
        elif kind == "polymer-census":
            out = _task_census(g, p, seed, opts, caps)
        elif kind == "coupling-trace":
            out = _task_coupling(g, p, seed, opts)
        else:
            out = _task_verify(g, p)
    except (InvariantViolation, AssertionError) as exc:
        return {}, f"{type(exc).__name__}: {exc}"
    return out, None


def run(spec: ExperimentSpec, out_dir: Optional[Union[str, Path]] = None, workers: int = 1,
        verbose: bool = False, log: Callable[[str], None] = print) -> RunResult:
    """Run a spec; writes CSV tables, JSONL logs, a manifest and a timestamp sidecar."""
    started = time.time()
    out = Path(out_dir if out_dir is not None else spec.output)
    out.mkdir(parents=True, exist_ok=True)
    g = spec.graph.build()
    ghash = g.digest
    build = build_id()
    items = _work_items(spec, g)
    sink = _Sink()
    failures: list[str] = []
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute, items))
    else:
        results = []
        for it in items:
            results.append(_execute(it))
            if verbose:
                log(f"[rclab] {spec.kind} beta={it[2].beta:.4f} seed={it[3]} done")
    for it, (res, err) in zip(items, results):
        _, _, p, seed, _, _ = it
        row_seed = seed if isinstance(seed, int) else None
        if err:
            failures.append(err)
            sink.warn("invariant_violation", beta=p.beta, seed=row_seed, message=err)
            continue
        for name, rows in res.items():
            if name == "outcomes":
                sink.log(name, _stamp(rows, build, ghash, p, None))
            else:
                sink.rows(name, _stamp(rows, build, ghash, p, row_seed))
    for name, rows in sink.tables.items():
        for r in rows:
            if r.get("exceeded"):
                sink.warn("cap_exceeded", table=name, beta=r.get("beta"), seed=r.get("seed_run"),
                          limit=r.get("limit"))
            if r.get("ok") is False:
                failures.append(f"{r['check']} residual {r['residual']:.3e}")
    files: dict[str, str] = {}

    def emit(name: str, text: str) -> None:
        (out / name).write_text(text)
        files[name] = hashlib.sha256(text.encode()).hexdigest()

    for name in sorted(sink.tables):
        emit(f"{name}.csv", _csv_text(sink.tables[name]))
    for name in sorted(sink.logs):
        emit(f"{name}.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in sink.logs[name]))
    if sink.warnings:
        emit("warnings.jsonl", "".join(json.dumps(w, sort_keys=True) + "\n" for w in sink.warnings))
    code = EXIT_INVARIANT if failures else EXIT_OK
    manifest = {"spec": spec.to_dict(), "build": build, "graph": ghash, "n": g.n, "m": g.m,
                "files": files, "exit_code": code, "failures": failures,
                "warnings": len(sink.warnings)}
    (out / "run-manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    (out / "run-manifest.timestamps.json").write_text(
        json.dumps({"started": started, "finished": time.time()}, indent=1) + "\n")
    if verbose:
        log(f"[rclab] wrote {len(files)} file(s) to {out}; exit {code}")
    return RunResult(code, out, files, sink.warnings, sink.tables)


# ---------------------------------------------------------------------------
# presets


def preset_oracle_verify_triangle() -> ExperimentSpec:
    return ExperimentSpec(kind="oracle-verify", graph=GraphSource(kind="named", name="triangle"),
                          params=ParamGrid(q=2, betas=[0.3, 1.0, 3.0]), name="oracle-verify-triangle",
                          output="results/oracle-verify")


def preset_phase_scan() -> ExperimentSpec:
    """Oracle phase masses on the certified 5-regular n=12 graph across β_c(100, 5)."""
    return ExperimentSpec(kind="phase-scan", graph=GraphSource(n=12, delta=5, seed=1),
                          params=ParamGrid(q=100, around_beta_c=[0.5, 1.5], points=11),
                          name="phase-scan", output="results/phase-scan")


BOTTLENECK_BETAS = [1.2, 1.6, 1.8, beta_c(100, 5), 2.0, 2.3, 2.8]


def preset_bottleneck_mix() -> ExperimentSpec:
    """Worst-start coalescence and extreme-start projected mixing on 5-regular n=128, q=100."""
    return ExperimentSpec(kind="mix-scan", graph=GraphSource(n=128, delta=5, seed=0),
                          params=ParamGrid(q=100, betas=list(BOTTLENECK_BETAS)),
                          seeds=list(range(20)), caps={"coalescence": 10**6},
                          options={"starts": ["all-out", "all-in"], "budget_factor": 50},
                          name="bottleneck-mix", output="results/bottleneck-mix")


def preset_bottleneck_worst() -> ExperimentSpec:
    return ExperimentSpec(kind="mix-scan", graph=GraphSource(n=128, delta=5, seed=0),
                          params=ParamGrid(q=100, betas=[1.8, beta_c(100, 5), 2.0]),
                          seeds=list(range(5)), caps={"coalescence": 10**6},
                          options={"starts": ["worst"]}, name="bottleneck-worst",
                          output="results/bottleneck-worst")


def preset_coupling_trace() -> ExperimentSpec:
    return ExperimentSpec(kind="coupling-trace", graph=GraphSource(kind="named", name="cycle", n=12),
                          params=ParamGrid(q=2, betas=[4.0], eta=0.45), seeds=list(range(200)),
                          options={"flavor": "ordered", "r": 2}, name="coupling-trace",
                          output="results/coupling-trace")


def preset_wsm_curve() -> ExperimentSpec:
    """Ordered-phase WSM gap against r on a certified cubic n=12 graph at 1.5·β_c(10, 3)."""
    return ExperimentSpec(kind="wsm-test", graph=GraphSource(n=12, delta=3, seed=0),
                          params=ParamGrid(q=10, around_beta_c=[1.5, 1.5], points=1, eta=0.45),
                          options={"vertex": 0, "phase": "ordered", "radii": [1, 2, 3, 4]},
                          name="wsm-curve", output="results/wsm-curve")


PRESETS: dict[str, Callable[[], ExperimentSpec]] = {
    "wsm-curve": preset_wsm_curve,
    "oracle-verify-triangle": preset_oracle_verify_triangle,
    "phase-scan": preset_phase_scan,
    "bottleneck-mix": preset_bottleneck_mix,
    "bottleneck-worst": preset_bottleneck_worst,
    "coupling-trace": preset_coupling_trace,
}


# ---------------------------------------------------------------------------
# the scaling demo


@dataclass
class DemoRow:
    n: int
    m: int
    beta: float
    start: str
    reference: str
    steps: Optional[int]
    steps_per_nlogn: Optional[float]


@dataclass
class DemoReport:
    q: float
    beta: float
    beta_c: float
    rows: list[DemoRow]
    exponent: Optional[float]
    projection: str = "in-count law, TV <= 1/4 against the exact phase-conditional law"

    def as_record(self) -> dict:
        return {"q": self.q, "beta": self.beta, "beta_c": self.beta_c, "exponent": self.exponent,
                "projection": self.projection, "rows": [asdict(r) for r in self.rows]}


def _phase_law(g: Graph, p: ModelParams, phase: str) -> np.ndarray:
    law, _ = in_count_law(g, p)
    k = np.arange(g.m + 1)
    if phase == "ordered":
        law = np.where(k >= (1 - p.eta) * g.m, law, 0.0)
    elif phase == "disordered":
        law = np.where(k <= p.eta * g.m, law, 0.0)
    if law.sum() <= 0:
        raise OracleSizeError(f"phase {phase} carries no mass")
    return law / law.sum()


def projected_mixing_time(g: Graph, p: ModelParams, start: str, reference: np.ndarray,
                          copies: int, t_max: int, stride: int, seed: int) -> Optional[int]:
    """First checkpoint at which the in-count law of ``copies`` chains is within TV 1/4 of ``reference``."""
    x0 = Configuration.all_in(g.m) if start == "all-in" else Configuration.all_out(g.m)
    traces = np.stack([in_count_trace(g, p, x0, t_max, stride, seed * 100003 + c) for c in range(copies)])
    for j in range(traces.shape[1]):
        emp = np.bincount(traces[:, j], minlength=g.m + 1) / copies
        if 0.5 * np.abs(emp - reference).sum() <= 0.25:
            return j * stride
    return None


def preset_theorem1_demo(params: ModelParams, sizes=(8, 10, 12, 14, 16), delta: int = 3,
                         copies: int = 400, seed: int = 0, t_factor: float = 200.0) -> DemoReport:
    """Projected mixing from the extreme start matching the phase, across n, with a fitted exponent.

    Below β_c the chain starts all-out and is compared with the disordered
    in-count law; above it starts all-in against the ordered law.  For q <= 2
    (no finite β_c) the all-out chain is compared with the full in-count law.
    """
    bc = beta_c(params.q, delta) if params.q > 2 else math.inf
    if not math.isfinite(bc):
        start, ref_name = "all-out", "none"
    elif params.beta < bc:
        start, ref_name = "all-out", "disordered"
    else:
        start, ref_name = "all-in", "ordered"
    rows = []
    for n in sizes:
        g = generate_random_regular(n, delta, seed=seed)
        p = ModelParams(q=params.q, beta=params.beta, delta_deg=delta, delta_frac=params.delta_frac,
                        eta=params.eta)
        ref = _phase_law(g, p, ref_name)
        stride = max(1, g.m // 4)
        t_max = int(t_factor * g.m * math.log(g.m))
        steps = projected_mixing_time(g, p, start, ref, copies, t_max, stride, seed)
        norm = steps / (n * math.log(n)) if steps is not None else None
        rows.append(DemoRow(n, g.m, params.beta, start, ref_name, steps, norm))
    pts = [(math.log(r.n), math.log(r.steps)) for r in rows if r.steps]
    exponent = float(np.polyfit(*zip(*pts), 1)[0]) if len(pts) >= 2 else None
    return DemoReport(params.q, params.beta, bc, rows, exponent)
