"""Acceptance criteria 1-12 at their stated tolerances.

Each test records a one-line verdict; ``conftest.pytest_terminal_summary``
prints one PASS/FAIL line per criterion at the end of the session.
"""
import csv
import itertools
import math
import time

import networkx as nx
import numpy as np
import pytest

from rclab import runner
from rclab.coupling import boundary_clamp, law_of, revealing_coupling_ordered, wsm_gap_curve
from rclab.dynamics import (ChainState, CoupledPair, EnsembleChain, apply_update, in_count_trace,
                            monotone_coupled_step, tv_distance_empirical)
from rclab.graph import (Graph, ball, cycle_graph, expansion_profile, generate_random_regular,
                         in_class_G_delta, random_tree)
from rclab.model import Configuration, ModelParams, PartialConfiguration, beta_c
from rclab.oracle import (conditional_law, exact_distribution, exact_transition_matrix,
                          potts_partition_bruteforce)
from rclab.polymers import (b_closure, check_disordered_factorization, check_ordered_factorization,
                            largest_component_size)

import oracles

pytestmark = pytest.mark.acceptance


def _verdict(record_property, ok: bool, detail: str) -> None:
    record_property("verdict", detail)
    print(detail)
    assert ok, detail


def _from_nx(h) -> Graph:
    h = nx.convert_node_labels_to_integers(h)
    return Graph.from_edges(h.number_of_nodes(), list(h.edges()))


# 1 -------------------------------------------------------------------------------------

def test_criterion_01_fk_identity(record_property):
    atlas = [h for h in nx.graph_atlas_g()[1:] if 1 <= h.number_of_edges() <= 10]
    graphs = atlas[:: len(atlas) // 24][:24]
    t0 = time.perf_counter()
    worst, checks = 0.0, 0
    for h in graphs:
        g = _from_nx(h)
        for q in (2, 3):
            for b in (0.3, 1.0, 3.0):
                z_rc = exact_distribution(g, ModelParams(q=q, beta=b)).log_z
                worst = max(worst, abs(z_rc - potts_partition_bruteforce(g, q, b)))
                checks += 1
    took = time.perf_counter() - t0
    _verdict(record_property, len(graphs) >= 20 and worst < 1e-9 and took < 10,
             f"{len(graphs)} graphs, {checks} checks, max |dlogZ| = {worst:.2e}, {took:.2f} s")


# 2 -------------------------------------------------------------------------------------

def test_criterion_02_stationarity(record_property):
    cases = [("triangle", cycle_graph(3), ModelParams(q=2, beta=1.0, delta_deg=2)),
             ("cubic8", generate_random_regular(8, 3, seed=3), ModelParams(q=2, beta=2.0, delta_deg=3))]
    parts, ok = [], True
    for name, g, p in cases:
        P = exact_transition_matrix(g, p)
        pi = exact_distribution(g, p).probs
        stat = float(np.abs(P.T @ pi - pi).max())
        flow = P.multiply(pi[:, None]).tocsr()
        balance = float(abs(flow - flow.T).max())
        steps = math.ceil(10 * g.m * math.log(g.m))
        ens = EnsembleChain(g, p)
        tvs = [tv_distance_empirical(ens.run(x0, 10**5, steps, seed=11), pi)
               for x0 in (0, (1 << g.m) - 1)]
        ok &= stat < 1e-10 and balance < 1e-10 and max(tvs) < 0.05
        parts.append(f"{name}: piP-pi {stat:.1e}, balance {balance:.1e}, "
                     f"TV after {steps} steps {max(tvs):.3f}")
    _verdict(record_property, ok, "; ".join(parts))


# 3 -------------------------------------------------------------------------------------

@pytest.mark.parametrize("q,beta,n,seed", [(2, 0.5, 50, 0), (5, 1.5, 40, 1), (1.5, 3.0, 50, 2)])
def test_criterion_03_tree_marginal(record_property, q, beta, n, seed):
    # On a tree every update is a cut-edge update, so the value an update writes is a fresh
    # Bernoulli(p_hat): per-edge counts of written values are exactly binomial.
    g = random_tree(n, seed=seed)
    p = ModelParams(q=q, beta=beta, delta_deg=max(1, g.max_degree))
    s = ChainState.create(g, Configuration.all_out(g.m), seed)
    ones = np.zeros(g.m)
    hits = np.zeros(g.m)
    for _ in range(100_000):
        e, U = s.rng.next_pair(g.m)
        ones[e] += apply_update(s, e, U, p)
        hits[e] += 1
    ph = p.p_hat
    z = np.abs(ones / hits - ph) / np.sqrt(ph * (1 - ph) / hits)
    _verdict(record_property, bool(z.max() <= 4),
             f"q={q} beta={beta} n={n}: p_hat {ph:.4f}, mean freq {(ones / hits).mean():.4f}, "
             f"max |z| {z.max():.2f} over {g.m} edges")


# 4 -------------------------------------------------------------------------------------

def _connected_graphs_upto8():
    conn = [h for h in nx.graph_atlas_g()[1:] if nx.is_connected(h) and 1 <= h.number_of_edges() <= 8]
    conn += list(nx.nonisomorphic_trees(8)) + list(nx.nonisomorphic_trees(9))
    uni = []
    for t in nx.nonisomorphic_trees(8):
        for u, v in itertools.combinations(range(8), 2):
            if not t.has_edge(u, v):
                h = t.copy()
                h.add_edge(u, v)
                if not any(nx.is_isomorphic(h, k) for k in uni):
                    uni.append(h)
    return conn + uni


def _all_graphs_upto8():
    """Every graph with 1..8 edges and no isolated vertices, up to isomorphism."""
    conn = _connected_graphs_upto8()
    sizes = [h.number_of_edges() for h in conn]
    out = []

    def grow(start, parts, total):
        if parts:
            out.append(nx.disjoint_union_all(parts))
        for i in range(start, len(conn)):
            if total + sizes[i] <= 8:
                grow(i, parts + [conn[i]], total + sizes[i])

    grow(0, [], 0)
    return conn, out


def _monotone_violations(g: Graph, p: ModelParams) -> tuple[int, int]:
    """Violations and compared pairs over all (R, a, a + f) covers, for every free edge.

    Nestedness is generated by single-edge covers, so checking covers for every revealed
    set R is the same as checking every nested pair with revealed set R.
    """
    m = g.m
    pi = exact_distribution(g, p).probs.reshape((2,) * m)   # axis m-1-e carries edge e
    viol = pairs = 0
    for R in range(1 << m):
        rev = [e for e in range(m) if (R >> e) & 1]
        free_axes = tuple(m - 1 - e for e in range(m) if not (R >> e) & 1)
        z = pi.sum(axis=free_axes, keepdims=True)
        for e in range(m):
            if (R >> e) & 1:
                continue
            ax = m - 1 - e
            on = np.take(pi, [1], axis=ax).sum(axis=free_axes, keepdims=True)
            marg = on / z
            for f in rev:
                d = np.diff(marg, axis=m - 1 - f)
                viol += int(np.count_nonzero(d < -1e-12))
                pairs += d.size
    return viol, pairs


def test_criterion_04_monotonicity(record_property):
    conn, graphs = _all_graphs_upto8()
    counts_ok = len(conn) == 358 and len(graphs) == 787
    settings = [ModelParams(q=2, beta=1.0), ModelParams(q=5, beta=0.4), ModelParams(q=1.5, beta=2.5)]
    viol = pairs = 0
    for h in graphs:
        g = _from_nx(h)
        for p in settings:
            v, c = _monotone_violations(g, p)
            viol += v
            pairs += c
    # spot-check the tensor marginals against the module's conditional law
    g = _from_nx(graphs[-1])
    rng = np.random.default_rng(0)
    spot = 0.0
    for _ in range(20):
        vals = rng.integers(-1, 2, size=g.m).astype(np.int8)
        vals[0] = -1
        a = PartialConfiguration(vals)
        law = conditional_law(g, settings[0], a)
        full = exact_distribution(g, settings[0], clamp=a)
        spot = max(spot, max(abs(law.edge_marginal(e) - full.edge_marginal(e))
                             for e in range(g.m) if vals[e] < 0))
    _verdict(record_property, counts_ok and viol == 0 and spot < 1e-12,
             f"{len(graphs)} graphs ({len(conn)} connected), {len(settings)} (q,beta) settings, "
             f"{pairs} cover comparisons, {viol} violations")


# 5 -------------------------------------------------------------------------------------

def test_criterion_05_grand_coupling(record_property):
    g = generate_random_regular(64, 5, seed=0)
    grid = [ModelParams(q=2, beta=2.5, eta=0.2), ModelParams(q=10, beta=2.2, eta=0.15),
            ModelParams(q=100, beta=beta_c(100, 5), eta=0.1)]
    viol = checked = rejected = 0
    for seed in range(1000):
        p = grid[seed % len(grid)]
        rng = np.random.default_rng(seed)
        lower = Configuration.all_in(g.m)
        for e in rng.choice(g.m, size=int(p.eta * g.m), replace=False):
            lower.set(int(e), 0)
        upper = Configuration.all_in(g.m)
        c = CoupledPair.create(g, lower, upper, seed, lower_policy="ordered", engine="unionfind")
        for _ in range(400):
            monotone_coupled_step(c, p)
            if not c.no_rejection_yet:
                rejected += 1
                break
            checked += 1
            if np.any(c.lower.config.bits > c.upper.config.bits):
                viol += 1
    _verdict(record_property, viol == 0,
             f"1000 runs on n=64 Delta=5, {checked} pre-rejection steps checked, "
             f"{rejected} runs hit a rejection, {viol} violations")


# 6 -------------------------------------------------------------------------------------

def test_criterion_06_factorizations(record_property):
    rng = np.random.default_rng(6)
    worst_o = worst_d = 0.0
    n_o = n_d = 0
    for g, p in [(generate_random_regular(12, 5, seed=1), ModelParams(q=5, beta=1.7, eta=0.1)),
                 (generate_random_regular(16, 5, seed=0), ModelParams(q=100, beta=2.0, eta=0.1)),
                 (generate_random_regular(12, 3, seed=0), ModelParams(q=3, beta=1.0, delta_deg=3,
                                                                     eta=0.25))]:
        k = int(p.eta * g.m)
        for _ in range(2000):
            f = Configuration.all_in(g.m)
            for e in rng.choice(g.m, size=rng.integers(0, k + 1), replace=False):
                f.set(int(e), 0)
            worst_o = max(worst_o, check_ordered_factorization(g, f, p))
            n_o += 1
            f = Configuration.all_out(g.m)
            for e in rng.choice(g.m, size=rng.integers(0, k + 1), replace=False):
                f.set(int(e), 1)
            worst_d = max(worst_d, check_disordered_factorization(g, f, p))
            n_d += 1
    _verdict(record_property, n_o + n_d >= 10**4 and worst_o < 1e-9 and worst_d < 1e-9,
             f"{n_o} ordered configs max residual {worst_o:.1e}; "
             f"{n_d} disordered configs max residual {worst_d:.1e}")


# 7 -------------------------------------------------------------------------------------

def test_criterion_07_closure(record_property):
    rng = np.random.default_rng(7)
    bad = 0
    graphs = [generate_random_regular(12, 5, seed=1)] + \
             [generate_random_regular(n, 5, seed=0) for n in (16, 20, 24)]
    for i in range(1000):
        g = graphs[i % len(graphs)]
        a = set(rng.choice(g.m, size=rng.integers(0, g.m // 2), replace=False).tolist())
        b = a | set(rng.choice(g.m, size=rng.integers(0, 6), replace=False).tolist())
        ca, cb = b_closure(g, a), b_closure(g, b)
        bad += not (a <= ca and ca <= cb and b_closure(g, ca) == ca)
        if i < 100:
            bad += ca != oracles.closure(g.n, g.edges, a, 5)
    certified = [g for g in graphs if in_class_G_delta(g, 0.1).member]
    over = tested = 0
    for g in certified:
        sets = [frozenset(s) for k in (1, 2) for s in itertools.combinations(range(g.m), k)]
        sets += [frozenset(rng.choice(g.m, size=rng.integers(3, g.m // 10 + 3), replace=False).tolist())
                 for _ in range(500)]
        for a in sets:
            over += len(b_closure(g, a)) > 10 * len(a)
            tested += 1
    _verdict(record_property, bad == 0 and over == 0 and len(certified) == len(graphs),
             f"1000 random sets: {bad} monotonicity/idempotence failures; "
             f"{tested} sets on {len(certified)} certified graphs (n<=24): {over} over 10|A|")


# 8 -------------------------------------------------------------------------------------

def _expansion_k(g: Graph) -> tuple[int, float]:
    phi = expansion_profile(g, 0.5).value
    k = max(j for j in range(g.m) if j / g.m < phi)
    return k, phi


def test_criterion_08_big_component(record_property):
    delta = 0.1
    rng = np.random.default_rng(8)
    small = [generate_random_regular(8, 3, seed=3), generate_random_regular(7, 4, seed=0)]
    large = [generate_random_regular(12, 5, seed=1), generate_random_regular(16, 5, seed=0)]
    assert all(in_class_G_delta(g, delta).member for g in small + large)
    fails = checked = bound_checked = 0
    for g in small + large:
        p = ModelParams(q=2, beta=1.0, delta_deg=g.degree, delta_frac=delta)
        need = (1 - delta) * g.n
        k, phi = _expansion_k(g)
        bound_need = (1 - (k / g.m) / (2 * phi)) * g.n
        if g.m <= 14:
            outs = (c for j in range(g.m + 1) for c in itertools.combinations(range(g.m), j))
        else:
            outs = (rng.choice(g.m, size=rng.integers(0, k + 1), replace=False) for _ in range(10**4))
        for out in outs:
            out = set(int(e) for e in out)
            big = largest_component_size(g, [e for e in range(g.m) if e not in out])
            if len(out) <= p.eta * g.m:
                checked += 1
                fails += big < need
            if len(out) <= k:
                bound_checked += 1
                fails += big < bound_need
    _verdict(record_property, fails == 0,
             f"{checked} configs with |Out| <= eta*m (eta = {min(delta / 5, 0.01)}), "
             f"{bound_checked} with |Out| <= theta*m for theta just below phi(1/2); {fails} failures")


# 9 -------------------------------------------------------------------------------------

def test_criterion_09_revealing_coupling(record_property):
    g = cycle_graph(12)
    assert in_class_G_delta(g, 0.1).member
    p = ModelParams(q=2, beta=4.0, eta=0.45, delta_deg=2)
    runs = 10**4
    results = [revealing_coupling_ordered(g, 0, 2, p, seed=s, keep_trace=False) for s in range(runs)]
    r1 = results[0].radii[1]
    pord = exact_distribution(g, p, "ordered")
    plus = exact_distribution(g, p, clamp=boundary_clamp(g, ball(g, 0, r1), "plus"))
    tv_ord = tv_distance_empirical(law_of(results, "phase"), pord)
    tv_plus = tv_distance_empirical(law_of(results, "ball"), plus)
    agree = sum(r.agree_at_v for r in results) / runs
    _verdict(record_property, tv_ord < 0.05 and tv_plus < 0.05,
             f"C12 q=2 beta=4 eta=0.45 r=2 (r1={r1}), {runs} seeds with invariants checked: "
             f"TV(ord) {tv_ord:.4f}, TV(plus) {tv_plus:.4f}, agree at v {agree:.2f}")


# 10 ------------------------------------------------------------------------------------

def test_criterion_10_wsm_curve(record_property):
    g = generate_random_regular(12, 3, seed=0)
    assert in_class_G_delta(g, 0.1).member
    bc = beta_c(10, 3)
    p = ModelParams(q=10, beta=1.5 * bc, delta_deg=3, eta=0.45)
    e = int(g.adjacency[0][0])
    curve = wsm_gap_curve(g, 0, e, range(1, 5), "ordered", p)
    gaps = [c.gap for c in curve]
    mono = all(b <= a + 1e-15 for a, b in zip(gaps, gaps[1:]))
    _verdict(record_property, mono and gaps[-1] < gaps[0],
             f"cubic n=12, q=10, beta=1.5*beta_c={p.beta:.4f}: gaps " +
             ", ".join(f"r={c.radius}: {c.gap:.2e}" for c in curve))


# 11 ------------------------------------------------------------------------------------

def test_criterion_11_bottleneck(record_property, tmp_path):
    quiet = lambda msg: None  # noqa: E731
    runner.run(runner.PRESETS["phase-scan"](), tmp_path / "phase", log=quiet)
    runner.run(runner.PRESETS["bottleneck-worst"](), tmp_path / "worst", log=quiet)
    runner.run(runner.PRESETS["bottleneck-mix"](), tmp_path / "mix", log=quiet)
    phase = list(csv.DictReader(open(tmp_path / "phase" / "phase.csv")))
    # crossover: the ordered mass overtakes the disordered mass somewhere on the grid
    bc = beta_c(100, 5)
    lead = [float(r["mass_ordered"]) > float(r["mass_disordered"]) for r in phase]
    flips = [i for i in range(1, len(lead)) if lead[i] != lead[i - 1]]
    crossover = not lead[0] and lead[-1] and len(flips) == 1
    cross_at = float(phase[flips[0]]["beta"]) / bc if flips else float("nan")
    worst = list(csv.DictReader(open(tmp_path / "worst" / "mix.csv")))
    at_bc = [r for r in worst if abs(float(r["beta"]) - bc) < 1e-9]
    stuck = all(r["exceeded"] == "True" for r in at_bc)
    mix = list(csv.DictReader(open(tmp_path / "mix" / "mix.csv")))
    fractions = {}
    for r in mix:
        b = float(r["beta"])
        if (b < bc and r["start"] == "all-out") or (b > bc and r["start"] == "all-in"):
            done, tot = fractions.get(b, (0, 0))
            fractions[b] = (done + (r["exceeded"] == "False"), tot + 1)
    fast = all(d / t >= 0.9 for d, t in fractions.values())
    _verdict(record_property, crossover and stuck and fast and len(at_bc) > 0,
             f"q=100 Delta=5: oracle crossover {crossover} (by {cross_at:.2f} beta_c); worst start past 1e6 cap at beta_c "
             f"{sum(r['exceeded'] == 'True' for r in at_bc)}/{len(at_bc)}; extreme starts within "
             f"50 m log m: " + ", ".join(f"{b:.2f}: {d}/{t}" for b, (d, t) in sorted(fractions.items())))


# 12 ------------------------------------------------------------------------------------

def test_criterion_12_engines(record_property):
    g = generate_random_regular(64, 5, seed=0)
    p = ModelParams(q=100, beta=beta_c(100, 5))
    same = True
    for x0 in (Configuration.all_in(g.m), Configuration.all_out(g.m)):
        a = in_count_trace(g, p, x0, 10**5, 1, seed=12, engine="hdt")
        b = in_count_trace(g, p, x0, 10**5, 1, seed=12, engine="unionfind")
        same &= bool(np.array_equal(a, b))
    # per-update throughput; building each engine's initial forest is timed separately
    big = generate_random_regular(10_000, 5, seed=0)
    pb = ModelParams(q=100, beta=2.3)
    times, setup, finals = {}, {}, {}
    for eng in ("hdt", "unionfind"):
        t0 = time.perf_counter()
        s = ChainState.create(big, Configuration.all_in(big.m), 1, eng)
        setup[eng] = time.perf_counter() - t0
        t0 = time.perf_counter()
        for _ in range(800):
            e, U = s.rng.next_pair(big.m)
            apply_update(s, e, U, pb)
        times[eng] = time.perf_counter() - t0
        finals[eng] = s.config.bits.copy()
    speedup = times["unionfind"] / times["hdt"]
    same &= bool(np.array_equal(finals["hdt"], finals["unionfind"]))
    _verdict(record_property, same and speedup >= 10,
             f"2 x 1e5-step traces identical: {same}; n=1e4 ordered-phase chain, 800 updates: "
             f"hdt {times['hdt']:.2f} s, unionfind {times['unionfind']:.2f} s, "
             f"speedup {speedup:.1f}x (setup {setup['hdt']:.2f} s vs {setup['unionfind']:.2f} s)")
