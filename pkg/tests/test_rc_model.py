import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rclab.graph import Graph, ball, cycle_graph, generate_random_regular, random_tree
from rclab.model import (Configuration, ModelParams, PartialConfiguration, PhaseLabel, beta_c,
                         beta_c_asymptotic, boundary_component_set, component_count, phase_of,
                         refines, union, weight, wired_component_count)

import oracles


def test_params_derived_quantities():
    p = ModelParams(q=3, beta=1.2)
    assert p.p == pytest.approx(1 - math.exp(-1.2))
    assert p.p_hat == pytest.approx(math.expm1(1.2) / (3 + math.expm1(1.2)))
    assert p.eta == pytest.approx(0.01)
    with pytest.raises(ValueError):
        ModelParams(q=3, beta=1.0, eta=0.6)


@given(st.floats(1.01, 1e3), st.floats(0.01, 20))
def test_p_hat_between_p_over_q_and_p(q, b):
    p = ModelParams(q=q, beta=b)
    assert p.p / q < p.p_hat < p.p
    assert p.zeta < p.eta


def test_weight_examples(triangle):
    p = ModelParams(q=2.5, beta=0.7)
    assert weight(triangle, Configuration.all_out(3), p) == pytest.approx(3 * p.log_q)
    assert weight(triangle, Configuration.all_in(3), p) == pytest.approx(p.log_q + 3 * p.log_edge)
    one = Configuration.from_in_edges(3, [1])
    assert weight(triangle, one, p) == pytest.approx(2 * p.log_q + p.log_edge)


@given(st.integers(0, 10**6), st.floats(1.1, 20), st.floats(0.05, 5), st.integers(0, 2**18 - 1))
@settings(max_examples=60, deadline=None)
def test_weight_matches_reference(seed, q, b, x):
    g = generate_random_regular(12, 3, seed=seed)
    f = Configuration.from_int(x, g.m)
    ref = oracles.rc_log_weight(g.n, g.edges, f.in_edges(), q, b)
    assert weight(g, f, ModelParams(q=q, beta=b, delta_deg=3)) == pytest.approx(ref, abs=1e-9)


def test_component_count_examples(c6):
    assert component_count(c6, Configuration.all_out(6)) == 6
    assert component_count(c6, Configuration.all_in(6)) == 1
    assert component_count(c6, Configuration.from_in_edges(6, [0, 2, 4])) == 3


def test_wired_count_examples():
    star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    b = ball(star, 0, 1)
    assert wired_component_count(star, b, Configuration.all_out(3)) == 1
    assert wired_component_count(star, b, Configuration.all_in(3)) == 0
    tree = Graph.from_edges(5, [(0, 1), (0, 2), (1, 3), (2, 4)])
    b2 = ball(tree, 0, 2)
    assert wired_component_count(tree, b2, Configuration.from_in_edges(4, [0, 1])) == 1


def test_beta_c_examples():
    assert beta_c(4, 3) == pytest.approx(math.log(2 / (3 ** (1 / 3) - 1)))
    assert beta_c(3, 3) == pytest.approx(math.log(1 / (2 ** (1 / 3) - 1)))
    ratio = beta_c(1e6, 3) / beta_c_asymptotic(1e6, 3)
    assert abs(ratio - 1) < 0.01
    with pytest.raises(ValueError):
        beta_c(2, 5)


def test_phase_labels():
    p = ModelParams(q=5, beta=1, eta=0.01)
    assert phase_of(Configuration.all_in(10), p, 10) is PhaseLabel.ORDERED
    assert phase_of(Configuration.all_out(10), p, 10) is PhaseLabel.DISORDERED
    assert phase_of(Configuration.from_in_edges(10, range(5)), p, 10) is PhaseLabel.NEITHER


def test_boundary_classes_on_c4():
    c4 = cycle_graph(4)
    full = PartialConfiguration.from_config(Configuration.all_in(4))
    assert boundary_component_set(c4, full) == ()
    # edge 3 = (3, 0) unrevealed, the rest revealed in: 0 and 3 joined through the path
    a = PartialConfiguration([1, 1, 1, -1])
    assert boundary_component_set(c4, a) == ((0, 3),)
    a = PartialConfiguration([0, 0, 0, -1])
    assert boundary_component_set(c4, a) == ((0,), (3,))


def test_union_and_refines():
    a = PartialConfiguration([1, -1, 0, -1])
    assert union(a, PartialConfiguration.empty(4)) == a
    full = union(a, PartialConfiguration([-1, 0, -1, 1]))
    assert full.is_full() and full.to_configuration().in_edges() == [0, 3]
    with pytest.raises(ValueError):
        union(a, PartialConfiguration([0, -1, -1, -1]))
    assert refines(a, full) and not refines(full, a)


@given(st.lists(st.sampled_from([-1, 0, 1]), min_size=1, max_size=30))
def test_partial_masks_round_trip(vals):
    a = PartialConfiguration(vals)
    rev, inn = a.masks()
    assert bin(rev).count("1") == len(a.revealed())
    assert inn & ~rev == 0
    assert a.in_edges() | a.out_edges() == a.revealed()


def test_configuration_int_round_trip():
    for x in range(64):
        assert Configuration.from_int(x, 6).to_int() == x
    f = Configuration.from_in_edges(40, [1, 7, 39])
    assert Configuration.from_hex(f.to_hex()).in_edges() == [1, 7, 39]
