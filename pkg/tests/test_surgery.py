from __future__ import annotations

import numpy as np
import pytest

from omniperm.action_graph import ActionGraph, image_order, u_cycle_lengths, validate
from omniperm.base_quotient import QuotientSpec, iter_candidates, random_free_action_graph, regular_cover
from omniperm.surgery import (SurgeryError, build_delta, build_lambda, confined_lcm, confined_spectrum,
                              cycle_census, plan_surgery, region_adjacency_violations, select_u_cycle,
                              verify_confinement)

from conftest import actions_of, s3_graph, z2_z3
from oracles import naive_order, orbit_lengths, spliced_edges

G = z2_z3()
AB, ABAB2 = G.parse("a b"), G.parse("a b a B")


def _bases(count, k_prime=1, girth=4):
    spec = QuotientSpec((AB, ABAB2), girth_target=girth, model="cover", max_vertices=800, attempt_budget=80)
    out = []
    for g, cert in iter_candidates(G, spec):
        if not cert.passed:
            continue
        try:
            for m in (3, 4, 5):
                build_delta(plan_surgery(g, AB, k_prime, m))
        except SurgeryError:
            continue
        out.append(g)
        if len(out) == count:
            break
    assert len(out) == count
    return out


BASES = _bases(10)
GIRTH6 = _bases(1, k_prime=2, girth=6)[0]


def _edges(graph):
    out = set()
    for tag in ("A", "B"):
        act = graph.action(tag)
        for x in range(1, act.shape[0]):
            out.update((tag, x, v, int(act[x][v])) for v in range(graph.n_vertices))
    return out


@pytest.mark.parametrize("m", [3, 4, 5])
def test_vertex_count(m):
    d = build_delta(plan_surgery(BASES[0], AB, 1, m))
    assert d.graph.n_vertices == m * (BASES[0].n_vertices + 1)
    assert validate(d.graph, require_free=False).ok


def test_vertex_count_sixty():
    base = random_free_action_graph(G, 60, 0)
    plan_ok = None
    for seed in range(200):
        base = random_free_action_graph(G, 60, seed)
        try:
            plan_ok = plan_surgery(base, AB, 1, 3)
            build_delta(plan_ok)
            break
        except SurgeryError:
            continue
    assert plan_ok is not None
    assert build_delta(plan_ok).graph.n_vertices == 183


@pytest.mark.parametrize("bi", range(len(BASES)))
@pytest.mark.parametrize("m", [3, 4, 5])
def test_spliced_length(bi, m):
    plan = plan_surgery(BASES[bi], AB, 1, m)
    d = build_delta(plan)
    assert d.spliced_length() == (plan.base_order - 1) * m
    # the cycle through p1 of copy 0 stays in copies; independently walked
    acts = actions_of(d.graph)
    v, steps = d.spliced_start, 0
    while True:
        for tag, x in plan.u:
            v = acts[tag][x][v]
        steps += 1
        if v == d.spliced_start:
            break
    assert steps == (plan.base_order - 1) * m


def test_first_step_moves_to_next_copy():
    plan = plan_surgery(BASES[0], AB, 1, 4)
    d = build_delta(plan)
    n = plan.base.n_vertices
    a = plan.u[0][1]
    assert int(d.graph.a_action[a][d.vertex(0, plan.markers["p1"])]) == d.vertex(1, plan.markers["pk2"])
    assert n + 1 == d.vertex(1, 0)


@pytest.mark.parametrize("bi", range(5))
@pytest.mark.parametrize("k_prime", [1, 2])
@pytest.mark.parametrize("m", [3, 4])
def test_matches_edge_oracle(bi, k_prime, m):
    base = BASES[bi]
    try:
        plan = plan_surgery(base, AB, k_prime, m)
    except SurgeryError:
        pytest.skip("markers collide for this base")
    d = build_delta(plan)
    want = spliced_edges(actions_of(base)["A"], actions_of(base)["B"], base.n_vertices, plan.markers, m)
    assert _edges(d.graph) == want


def test_fixed_vertices():
    plan = plan_surgery(BASES[1], AB, 1, 3)
    d = build_delta(plan)
    for v in d.markers["p2"]:
        assert all(int(d.graph.a_action[x][v]) == v for x in range(G.A.order))
    for v in d.markers["n"]:
        assert all(int(d.graph.b_action[y][v]) == v for y in range(G.B.order))


@pytest.mark.parametrize("m", [3, 5, 7])
def test_region_adjacency(m):
    d = build_delta(plan_surgery(BASES[2], AB, 1, m))
    assert region_adjacency_violations(d) == []


def test_select_rotation():
    sel = select_u_cycle(BASES[0], G.parse("b a"))
    assert sel.u == AB and sel.rotation == 1 and sel.conjugator == G.parse("b")
    assert G.reduce(G.inverse(sel.conjugator) + G.parse("b a") + sel.conjugator) == AB
    assert sel.r == len(AB) * sel.order


def test_select_invariants_random():
    for seed in range(50):
        g = random_free_action_graph(G, 24, seed)
        try:
            sel = select_u_cycle(g, G.parse("b a B a"))
        except SurgeryError as e:
            assert max(e.diagnostic["cycle_lengths"]) < len(AB * 2) * e.diagnostic["order"]
            continue
        assert sel.order == naive_order(actions_of(g), 24, sel.u)
        assert sel.cycle_start == min(s for s, ln in u_cycle_lengths(g, sel.u).items() if ln == sel.order)


def test_no_full_cycle():
    # ab has order 2 on an S3 Cayley graph and order 3 on an A4 Cayley graph;
    # on their disjoint union the order is 6 but no ab-cycle is that long
    s3 = s3_graph(G)
    nat = ActionGraph(G, np.array([[0, 1, 2, 3], [1, 0, 3, 2]]),
                      np.array([[0, 1, 2, 3], [1, 2, 0, 3], [2, 0, 1, 3]]))
    a4 = regular_cover(nat, 100)
    assert a4.n_vertices == 12
    a = np.hstack([s3.a_action, a4.a_action + 6])
    b = np.hstack([s3.b_action, a4.b_action + 6])
    g = ActionGraph(G, a, b)
    assert image_order(g, AB) == 6 and max(u_cycle_lengths(g, AB).values()) == 3
    with pytest.raises(SurgeryError) as info:
        select_u_cycle(g, AB)
    assert info.value.diagnostic == {"order": 6, "cycle_lengths": [2, 3]}


@pytest.mark.parametrize("w", ["a b a B", "a B"])
def test_spectrum_independent_of_m(w):
    word = G.parse(w)
    plan = plan_surgery(BASES[3], AB, 1, 3)
    specs = [confined_spectrum(build_delta(plan_surgery(BASES[3], AB, 1, m)), word) for m in (3, 4, 5)]
    assert specs[0] == specs[1] == specs[2]
    lcms = {confined_lcm(build_delta(plan_surgery(BASES[3], AB, 1, m)), word) for m in (3, 4, 5)}
    assert len(lcms) == 1


def test_census_accounts_for_every_cycle():
    d = build_delta(plan_surgery(BASES[4], AB, 1, 4))
    n = d.graph.n_vertices
    for w in (AB, ABAB2):
        c = cycle_census(d, w)
        total = sum(ln * cnt for ln, cnt in c.confined.items()) + sum(ln for _, ln in c.spanning + c.stray)
        counted = sum(c.confined.values()) + len(c.spanning) + len(c.stray)
        if c.spliced_start is not None:
            total += d.spliced_length()
            counted += 1
        assert total * len(w) == n * len(w) or total == sum(orbit_lengths(actions_of(d.graph), n, w))
        assert counted == len(orbit_lengths(actions_of(d.graph), n, w))


def test_census_spanning_cycles_divisible():
    for m in (3, 4, 5):
        c = cycle_census(build_delta(plan_surgery(BASES[0], AB, 1, m)), AB)
        assert all(ln % m == 0 for _, ln in c.spanning) and not c.stray


def test_confinement_of_second_word():
    d = build_delta(plan_surgery(GIRTH6, AB, 2, 5))
    rep = verify_confinement(d, ABAB2)
    assert rep.passed and rep.cycles_checked > 0


def test_confinement_failure_is_reported():
    # an unconstrained base: ab cycles are short, so long cycles of other words wander
    spec = QuotientSpec((AB,), girth_target=1, max_vertices=200)
    found = False
    for g, _ in iter_candidates(G, spec):
        try:
            plan = plan_surgery(g, AB, 1, 5)
        except SurgeryError:
            continue
        d = build_delta(plan)
        for w in (G.parse("a B a b a B"), ABAB2, G.parse("a B")):
            rep = verify_confinement(d, w)
            if not rep.passed:
                f = rep.failures[0]
                assert len(f["regions"]) > 2 or f["regions"][1] - f["regions"][0] not in (1, 4)
                found = True
                break
        if found:
            break
    assert found


@pytest.mark.parametrize("m", [1, 2])
def test_too_few_copies(m):
    with pytest.raises(SurgeryError):
        plan_surgery(BASES[0], AB, 1, m)


def test_k_prime_too_large():
    order = image_order(BASES[0], AB)
    with pytest.raises(SurgeryError):
        plan_surgery(BASES[0], AB, order, 3)


def test_needs_cyclically_reduced():
    with pytest.raises(ValueError):
        select_u_cycle(BASES[0], G.parse("a b a"))
    with pytest.raises(ValueError):
        select_u_cycle(BASES[0], G.parse("a"))


def test_lambda_copies():
    plan = plan_surgery(BASES[0], AB, 1, 3)
    for m in (1, 2):
        d = build_lambda(plan, m)
        assert d.copies == 3 * m
        assert d.spliced_length() == plan.spliced_period * 3 * m
    with pytest.raises(ValueError):
        build_lambda(plan, 0)
