import pytest
from hypothesis import given
from hypothesis import strategies as st

from muponzi.coarse_core import (
    CoarseMapSpec,
    ExplicitPairs,
    GroupCompact,
    MetricRadius,
    Space,
    WindowMismatch,
    check_coarse_axioms,
    classify_map,
    compose,
    diagonal,
    disk_point_window,
    interval_window,
    is_subset,
    transpose,
    uniform_local_finiteness,
    union,
)
from muponzi.discrete_chains import cayley_ball
from muponzi.groups import FreeGroup
from muponzi import hyperbolic as hyp
from muponzi.transport import greedy_net

W = interval_window(-5, 5)
pts = st.integers(-5, 5)
explicit = st.frozensets(st.tuples(pts, pts), max_size=25).map(lambda s: ExplicitPairs(s, W))


# ---------------------------------------------------------------------------
# relation algebra


def test_compose_without_middle_point_is_empty():
    e = ExplicitPairs({(0, 1)}, W)
    assert compose(e, e).pairs() == frozenset()


def test_metric_composition_on_integers():
    e1 = MetricRadius(1, W)
    assert compose(e1, e1).pairs() == MetricRadius(2, W).pairs()


@given(explicit)
def test_diagonal_is_two_sided_unit(e):
    d = diagonal(W)
    assert compose(d, e).pairs() == e.pairs()
    assert compose(e, d).pairs() == e.pairs()


@given(explicit)
def test_transpose_is_involution(e):
    assert transpose(transpose(e)).pairs() == e.pairs()


@given(explicit, explicit, explicit)
def test_composition_associative(a, b, c):
    assert compose(compose(a, b), c).pairs() == compose(a, compose(b, c)).pairs()


@given(explicit, explicit)
def test_transpose_reverses_composition(a, b):
    assert transpose(compose(a, b)).pairs() == compose(transpose(b), transpose(a)).pairs()


@pytest.mark.parametrize("r1,r2", [(0, 1), (1, 1), (1, 2.5), (2, 3)])
def test_metric_family_closure_by_enumeration(r1, r2):
    e1, e2 = MetricRadius(r1, W), MetricRadius(r2, W)
    assert compose(e1, e2).pairs() <= MetricRadius(r1 + r2, W).pairs()
    assert transpose(e1).pairs() == e1.pairs()
    assert union(e1, e2).pairs() == MetricRadius(max(r1, r2), W).pairs()


def test_sections():
    assert diagonal(W).section(3) == {3}
    assert MetricRadius(1, W).section(0) == {-1, 0, 1}
    assert MetricRadius(2, W).section(5) == {3, 4, 5}
    with pytest.raises(WindowMismatch):
        MetricRadius(1, W).section(99)


def test_group_compact_section_is_translate():
    g = FreeGroup(2)
    win = cayley_ball(g, 3)
    C = frozenset(["a", "B", ""])
    e = GroupCompact(C, win)
    for x in ["", "a", "ab", "Bab"]:
        expect = {g.mul(x, c) for c in C} & set(win.points)
        assert e.section(x) == expect
    assert transpose(e).C == frozenset(["A", "b", ""])


def test_window_mismatch():
    other = interval_window(-5, 5)
    with pytest.raises(WindowMismatch):
        compose(MetricRadius(1, W), MetricRadius(1, other))
    with pytest.raises(WindowMismatch):
        ExplicitPairs({(0, 9)}, W)


def test_is_subset_counterexample():
    ok, bad = is_subset(MetricRadius(2, W), ExplicitPairs(MetricRadius(1, W).pairs(), W))
    assert not ok
    assert abs(bad[0] - bad[1]) == 2


# ---------------------------------------------------------------------------
# axioms


def test_metric_family_axioms_pass():
    rep = check_coarse_axioms([MetricRadius(r, W) for r in (1, 2, 3)], W)
    assert rep.passed
    prods = [c for c in rep.checks if c.axiom == "product"]
    assert all(isinstance(c.witness, MetricRadius) for c in prods)
    assert {c.witness.r for c in prods} == {2, 3, 4, 5, 6}


def test_explicit_relation_without_diagonal_fails_first_axiom():
    rep = check_coarse_axioms([ExplicitPairs({(0, 1), (1, 0)}, W)], W)
    assert not rep.passed
    assert rep.checks[0].axiom == "diagonal" and not rep.checks[0].passed


def test_group_family_axioms_pass():
    win = cayley_ball(FreeGroup(2), 3)
    gens = [GroupCompact(frozenset(["", "a", "A"]), win), GroupCompact(frozenset(["", "b"]), win)]
    rep = check_coarse_axioms(gens, win)
    assert rep.passed, rep.failures()


# ---------------------------------------------------------------------------
# maps


def _radii(win, radii):
    return Space(win, [MetricRadius(r, win) for r in radii])


def test_identity_map_all_pass():
    src = _radii(W, [0, 1, 2])
    rep = classify_map(CoarseMapSpec(lambda x: x, lambda y: y), src, src)
    assert rep.coarse_equivalence
    assert rep.close_to_identity_roundtrips.passed
    assert rep.coarsely_surjective.witnesses[0].r == 0
    assert rep.coarsely_surjective.name == "coarsely_surjective (corrected reading)"


@pytest.mark.parametrize("half", [8, 4])
def test_doubling_map(half):
    sw, dw = interval_window(-half, half), interval_window(-2 * half, 2 * half)
    src = _radii(sw, range(0, 9))
    dst = _radii(dw, range(0, 17))
    rep = classify_map(CoarseMapSpec(lambda n: 2 * n), src, dst, margin=1)
    assert rep.bornologous.passed and rep.effectively_proper.passed
    # MetricRadius(1) on the source lands in MetricRadius(2)
    assert rep.bornologous.witnesses[1][1].r == 2
    assert rep.coarsely_surjective.passed
    assert rep.coarsely_surjective.witnesses[0].r == 1


def test_constant_map_covering_radius_is_window_radius():
    src = _radii(W, range(0, 11))
    rep = classify_map(CoarseMapSpec(lambda n: 0), src, _radii(W, range(0, 11)))
    assert rep.bornologous.passed
    assert rep.coarsely_surjective.witnesses[0].r == 5
    # with targets restricted to a small schedule there is no witness
    rep = classify_map(CoarseMapSpec(lambda n: 0), src, _radii(W, range(0, 11)),
                       radius_schedule=[0, 1, 2])
    assert not rep.coarsely_surjective.passed
    assert rep.coarsely_surjective.counterexample == ("covering radius", 5)


def test_free_group_orbit_map():
    g = FreeGroup(2)
    sw, dw = cayley_ball(g, 3), cayley_ball(g, 4)
    # gamma -> gamma x0 moves distances by up to 2 |x0|, so the source family
    # has to reach the window diameter
    src = _radii(sw, range(0, 7))
    dst = _radii(dw, range(0, 9))
    m = CoarseMapSpec(lambda x: g.mul(x, "a"), lambda y: g.mul(y, "A"))
    rep = classify_map(m, src, dst, margin=2)
    assert rep.coarse_equivalence
    assert rep.effectively_proper.witnesses[1] == (dst.generators[1], src.generators[3])
    assert rep.close_to_identity_roundtrips.passed


# ---------------------------------------------------------------------------
# uniform local finiteness


def test_uniform_local_finiteness_integers():
    w = interval_window(-10, 10)
    assert uniform_local_finiteness(w.points, MetricRadius(2, w), w) == 5
    assert uniform_local_finiteness([], MetricRadius(2, w), w) == 0


def test_uniform_local_finiteness_net_is_bounded_by_packing():
    R, delta = 2.5, 0.4
    net = greedy_net(R, delta)
    win = disk_point_window(net, R)
    count = uniform_local_finiteness(net, MetricRadius(1.0, win), win, margin=1.0)
    # disjoint balls of radius (delta - mesh) / 2 around net points inside B(x, 1 + that radius)
    rho = (delta - delta / 4) / 2
    packing = hyp.ball_volume(1.0 + rho) / hyp.ball_volume(rho)
    assert 1 <= count <= packing
