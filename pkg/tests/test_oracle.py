import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rclab.graph import Graph, complete_graph, cycle_graph, generate_random_regular, random_tree
from rclab.model import Configuration, ModelParams, PartialConfiguration
from rclab.oracle import (EmptySupportError, OracleSizeError, component_edge_counts,
                          conditional_law, exact_distribution, exact_transition_matrix, exact_tv,
                          in_count_law, in_count_log_polynomial, log_partition_deletion_contraction,
                          phase_statistics, potts_partition_bruteforce, read_oracle_dump,
                          tv_trajectory, write_oracle_dump)

import oracles


def test_single_edge_law(single_edge):
    p = ModelParams(q=3, beta=0.8)
    d = exact_distribution(single_edge, p)
    w = np.array([9.0, 3 * math.expm1(0.8)])
    assert np.allclose(d.probs, w / w.sum())


def test_percolation_is_product_measure(cubic8):
    p = ModelParams(q=1, beta=0.6)
    d = exact_distribution(cubic8, p)
    xs = np.arange(1 << cubic8.m)
    k = np.array([bin(x).count("1") for x in xs])
    ref = p.p ** k * (1 - p.p) ** (cubic8.m - k)
    assert np.allclose(d.probs, ref, atol=1e-15)


def test_triangle_matches_potts(triangle):
    for b in (0.3, 1.0, 3.0):
        d = exact_distribution(triangle, ModelParams(q=2, beta=b))
        assert d.log_z == pytest.approx(oracles.potts_log_partition(3, triangle.edges, 2, b), abs=1e-12)


@given(st.integers(0, 10**6), st.floats(1.05, 30), st.floats(0.05, 4))
@settings(max_examples=25, deadline=None)
def test_distribution_matches_reference(seed, q, b):
    g = generate_random_regular(8, 3, seed=seed)
    d = exact_distribution(g, ModelParams(q=q, beta=b, delta_deg=3))
    ref = oracles.rc_distribution(g.n, g.edges, q, b)
    assert oracles.tv(d.probs, ref) < 1e-12


def test_phase_restriction_matches_reference(cubic8):
    p = ModelParams(q=3, beta=1.5, eta=0.2, delta_deg=3)
    m = cubic8.m
    d = exact_distribution(cubic8, p, "ordered")
    ref = oracles.rc_distribution(cubic8.n, cubic8.edges, 3, 1.5, keep=lambda s: len(s) >= 0.8 * m)
    assert oracles.tv(d.probs, ref) < 1e-12
    d = exact_distribution(cubic8, p, "disordered")
    ref = oracles.rc_distribution(cubic8.n, cubic8.edges, 3, 1.5, keep=lambda s: len(s) <= 0.2 * m)
    assert oracles.tv(d.probs, ref) < 1e-12


def test_empty_phase_reported(triangle):
    with pytest.raises(EmptySupportError):
        exact_distribution(triangle, ModelParams(q=2, beta=1, eta=0.1), "disordered",
                           clamp=PartialConfiguration([1, 1, -1]))


def test_size_cap():
    with pytest.raises(OracleSizeError):
        exact_distribution(complete_graph(8), ModelParams(q=2, beta=1))


# conditional laws ----------------------------------------------------------------------

@given(st.integers(0, 10**6), st.lists(st.sampled_from([-1, 0, 1]), min_size=12, max_size=12),
       st.sampled_from([None, "ordered", "disordered"]))
@settings(max_examples=60, deadline=None)
def test_conditional_law_matches_projection(seed, vals, phase):
    g = generate_random_regular(8, 3, seed=seed)
    p = ModelParams(q=2.5, beta=1.1, eta=0.3, delta_deg=3)
    a = PartialConfiguration(vals)
    try:
        full = exact_distribution(g, p, phase or "none", clamp=a)
    except EmptySupportError:
        with pytest.raises(EmptySupportError):
            conditional_law(g, p, a, phase)
        return
    law = conditional_law(g, p, a, phase)
    free = sorted(a.unrevealed())
    assert np.allclose(law.probs, full.project(free), atol=1e-12)
    for e in free[:3]:
        assert law.edge_marginal(e) == pytest.approx(full.edge_marginal(e), abs=1e-12)


def test_conditional_law_beyond_enumeration_cap():
    g = generate_random_regular(20, 3, seed=1)
    p = ModelParams(q=2, beta=1.0, delta_deg=3)
    free = []
    for e in range(g.m):
        rest = [g.edges[f] for f in range(g.m) if f not in free and f != e]
        if oracles.n_components(g.n, rest) == 1:
            free.append(e)
        if len(free) == 4:
            break
    vals = np.ones(g.m, dtype=int)
    vals[free] = -1
    law = conditional_law(g, p, PartialConfiguration(vals))
    # the clamped in-edges alone keep the graph connected, so every free edge closes a cycle
    assert np.allclose(law.probs, [np.prod([p.p if (x >> j) & 1 else 1 - p.p for j in range(4)])
                                   for x in range(16)])


# transition matrices -----------------------------------------------------------------------

def test_transition_rows_and_stationarity(triangle, cubic8):
    for g in (triangle, generate_random_regular(6, 3, seed=0)):
        p = ModelParams(q=2, beta=1.3, delta_deg=3)
        P = exact_transition_matrix(g, p)
        assert np.allclose(np.asarray(P.sum(axis=1)).ravel(), 1, atol=1e-12)
        pi = exact_distribution(g, p).probs
        assert np.abs(P.T @ pi - pi).max() < 1e-10


def test_single_edge_matrix(single_edge):
    p = ModelParams(q=2, beta=1.4)
    P = exact_transition_matrix(single_edge, p).toarray()
    ph = p.p_hat
    assert np.allclose(P, [[1 - ph, ph], [1 - ph, ph]])


def test_two_matrix_constructions_agree():
    g = generate_random_regular(6, 3, seed=2)
    p = ModelParams(q=3, beta=0.9, delta_deg=3)
    a = exact_transition_matrix(g, p, "cut-edge").toarray()
    b = exact_transition_matrix(g, p, "heat-bath").toarray()
    ref = oracles.transition_matrix(g.n, g.edges, 3, 0.9)
    assert np.abs(a - b).max() < 1e-12 and np.abs(a - ref).max() < 1e-12


def test_tv_trajectory_nonincreasing(triangle):
    tv = tv_trajectory(triangle, ModelParams(q=2, beta=1), 0, 80)
    assert tv[0] > 0.25 and np.all(np.diff(tv) <= 1e-15)


# distances -----------------------------------------------------------------------------------

def test_tv_examples(triangle):
    d = exact_distribution(triangle, ModelParams(q=2, beta=1))
    assert exact_tv(d, d) == 0
    assert exact_tv(np.array([1.0, 0, 0, 0]), np.array([0, 0.5, 0.5, 0])) == 1.0
    with pytest.raises(ValueError):
        exact_tv(np.ones(2) / 2, np.ones(4) / 4)


def test_ordered_tv_decreases_in_beta(triangle):
    vals = []
    for b in [1, 2, 3, 4, 6]:
        p = ModelParams(q=2, beta=b, eta=0.2)
        vals.append(exact_tv(exact_distribution(triangle, p), exact_distribution(triangle, p, "ordered")))
    assert all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < 0.02


# partition functions ---------------------------------------------------------------------------

def test_potts_examples(single_edge, triangle):
    assert potts_partition_bruteforce(single_edge, 2, 1.3) == pytest.approx(math.log(2 * math.exp(1.3) + 2))
    assert potts_partition_bruteforce(triangle, 3, 0.0) == pytest.approx(3 * math.log(3))


@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.floats(0.1, 3))
@settings(max_examples=20, deadline=None)
def test_fk_identity_random_trees_and_cycles(seed, q, b):
    g = random_tree(7, seed=seed)
    g = Graph.from_edges(g.n, list(g.edges) + [(0, 6)]) if seed % 2 else g
    p = ModelParams(q=q, beta=b)
    z_rc = exact_distribution(g, p).log_z
    assert z_rc == pytest.approx(potts_partition_bruteforce(g, q, b), abs=1e-9)
    assert z_rc == pytest.approx(log_partition_deletion_contraction(g, p), abs=1e-9)


def test_subset_dp_counts(cubic8):
    counts = component_edge_counts(cubic8)
    ref = np.zeros_like(counts)
    for x, ins in oracles.configs(cubic8.m):
        ref[oracles.n_components(cubic8.n, [cubic8.edges[e] for e in ins]), len(ins)] += 1
    assert np.array_equal(counts, ref)


def test_in_count_law_paths_agree(cubic8):
    p = ModelParams(q=4, beta=1.7, delta_deg=3)
    law_enum, lz = in_count_law(cubic8, p)
    lp = in_count_log_polynomial(cubic8, p)
    assert np.allclose(np.exp(lp - lz), law_enum, atol=1e-12)


# phase statistics ------------------------------------------------------------------------------

def test_phase_mass_limits(cubic8):
    low = phase_statistics(cubic8, ModelParams(q=5, beta=0.01, eta=0.1, delta_deg=3))
    high = phase_statistics(cubic8, ModelParams(q=5, beta=12, eta=0.1, delta_deg=3))
    assert low["mass_disordered"] > 0.99 and high["mass_ordered"] > 0.99
    assert low["tv_pi_disordered"] == pytest.approx(1 - low["mass_disordered"])


def test_phase_crossover_on_certified_graph():
    g = generate_random_regular(12, 5, seed=1)
    from rclab.model import beta_c
    bc = beta_c(100, 5)
    rows = [phase_statistics(g, ModelParams(q=100, beta=f * bc)) for f in np.linspace(0.5, 1.5, 6)]
    dis = [r["mass_disordered"] for r in rows]
    ordm = [r["mass_ordered"] for r in rows]
    assert dis[0] > 0.5 and dis[-1] < 0.01
    assert ordm[-1] > ordm[0]


def test_dump_round_trip(tmp_path, triangle):
    p = ModelParams(q=2, beta=1)
    bin_path, json_path = write_oracle_dump(triangle, p, tmp_path / "tri")
    header, lw = read_oracle_dump(tmp_path / "tri")
    assert header["m"] == 3 and lw.size == 8
    assert header["log_z"] == pytest.approx(exact_distribution(triangle, p).log_z)
    raw = bytearray(bin_path.read_bytes())
    raw[0] ^= 1
    bin_path.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        read_oracle_dump(tmp_path / "tri")
