import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boundary_lab.circle import TWO_PI, CircleArc, ccw_offset, circ_dist
from boundary_lab.cycles import fixed_endpoint_classes, sample_general_partition, verify_endpoint_periodicity
from boundary_lab.errors import DiagonalError, DomainError
from boundary_lab.geometry import build_geometry
from boundary_lab.maps import (
    F_apply,
    F_array,
    Partition,
    branch_image,
    f_apply,
    f_apply_side,
    f_preimage_interval,
    interval_index,
    orbit,
)
from boundary_lab.measures import nu_rect

G2 = build_geometry(2)
G3 = build_geometry(3)


def test_partition_validation():
    with pytest.raises(DomainError):
        Partition.general(G2, G2.P)  # A_i = P_i is not strictly inside
    with pytest.raises(DomainError):
        Partition.general(G2, G2.P[:5])
    with pytest.raises(DomainError):
        Partition(G2, G2.P, "weird")
    assert Partition.bowen_series(G2).a(3) == G2.p(3)
    assert Partition.dual(G2).a(3) == G2.q(3)


def test_interval_index_examples():
    part = Partition.midpoint(G2)
    assert interval_index(part, part.a(3)) == 3
    assert interval_index(part, part.a(3) - 1e-12) == 2
    assert interval_index(part, part.a(1)) == 1
    assert interval_index(part, part.a(1) - 1e-12) == 12
    assert interval_index(Partition.bowen_series(G2), G2.q(1)) == 1


@settings(max_examples=200)
@given(st.floats(0, TWO_PI, exclude_max=True))
def test_interval_index_vectorised_agrees(x):
    part = sample_general_partition(G3, 5)
    i = interval_index(part, x)
    assert part.index_array(np.array([x]))[0] == i
    assert part.branch_arc(i).contains(x)


def test_f_apply_uses_upper_branch_at_jumps():
    part = Partition.midpoint(G2)
    y, i = f_apply(part, part.a(4))
    assert i == 4
    assert circ_dist(y, G2.gen(4)(part.a(4))) < 1e-15
    assert circ_dist(f_apply_side(G2, part.a(4), 3), G2.gen(3)(part.a(4))) < 1e-15


def test_bowen_series_endpoints():
    # closed-open branches send P_1 along T_1; the fixed point is the left limit T_12
    part = Partition.bowen_series(G2)
    assert circ_dist(f_apply(part, G2.p(1))[0], G2.q(8)) < 1e-12
    assert circ_dist(f_apply_side(G2, G2.p(1), 12), G2.p(1)) < 1e-12
    x = G2.q(5)
    for _ in range(2):
        x, _ = f_apply(part, x)
    assert circ_dist(x, G2.q(5)) < 1e-12


@pytest.mark.parametrize("g", [2, 3, 5])
def test_endpoint_periodicity(g):
    geom = build_geometry(g)
    rep = verify_endpoint_periodicity(geom, 1e-9)
    assert rep.passed
    fp, fq = fixed_endpoint_classes(g)
    for i in range(1, geom.N + 1):
        assert (rep.absolute[("f_P", i)] < 1e-12) == (i in fp)
        assert (rep.absolute[("f_Q", i)] < 1e-12) == (i in fq)


def test_f2_fixes_P_on_any_partition_g2():
    # every P_i lies inside a branch of a general partition, away from the jumps
    part = sample_general_partition(G2, 11)
    for i in range(1, 13):
        x = G2.p(i)
        for _ in range(2):
            x, _ = f_apply(part, x)
        assert circ_dist(x, G2.p(i)) < 1e-10


def test_F_apply_and_diagonal():
    part = Partition.midpoint(G2)
    (x1, y1), i = F_apply(part, 0.3, 2.5)
    assert i == interval_index(part, 2.5)
    assert circ_dist(x1, G2.gen(i)(0.3)) < 1e-15
    assert circ_dist(x1, y1) > 0
    with pytest.raises(DiagonalError):
        F_apply(part, 1.0, 1.0 + 1e-13)
    X, Y, idx = F_array(part, np.array([0.3]), np.array([2.5]))
    assert idx[0] == i and abs(X[0] - x1) < 1e-15 and abs(Y[0] - y1) < 1e-15


@settings(max_examples=30)
@given(st.floats(0, TWO_PI, exclude_max=True), st.integers(0, 50))
def test_orbit_trace_invariant(x, seed):
    part = sample_general_partition(G2, seed)
    tr = orbit(part, x, 100)
    assert len(tr) == 101
    assert tr.max_step_residual(G2) < 1e-10


def test_orbit_csv():
    tr = orbit(Partition.midpoint(G2), 1.0, 3)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "step,theta,side_index"
    assert len(lines) == 5
    assert lines[1].startswith("0,1,")
    assert lines[-1].endswith(",")
    with pytest.raises(DomainError):
        orbit(Partition.midpoint(G2), 1.0, -1)


def test_branch_images_cover_circle():
    part = Partition.midpoint(G2)
    total = sum(branch_image(part, i).length for i in range(1, 13))
    # the branches overlap in their images, so this exceeds one turn
    assert total > TWO_PI


@settings(max_examples=50)
@given(st.floats(0, TWO_PI, exclude_max=True), st.floats(1e-3, TWO_PI - 1e-3), st.integers(0, 30))
def test_preimage_maps_onto_interval(s, L, seed):
    part = sample_general_partition(G2, seed)
    I = CircleArc.from_length(s, L, "closed_open")
    pre = f_preimage_interval(part, I)
    rng = np.random.default_rng(seed)
    for arc in pre:
        for u in rng.uniform(0.01, 0.99, 5):
            x = arc.point_at(u * arc.length)
            y, _ = f_apply(part, x)
            assert I.contains(y) or min(circ_dist(y, I.start), circ_dist(y, I.end)) < 1e-9
    # and every point of I has a preimage
    images = [G2.gen(interval_index(part, a.midpoint())).image_arc(a.with_edge("closed_closed")) for a in pre]
    for u in rng.uniform(0.01, 0.99, 5):
        y = I.point_at(u * L)
        assert any(im.contains(y) for im in images)


def test_preimage_full_circle():
    part = Partition.midpoint(G2)
    assert f_preimage_interval(part, CircleArc.full()) == [CircleArc.full()]


def test_branch_expansion():
    for g in (2, 3):
        geom = build_geometry(g)
        part = sample_general_partition(geom, 1)
        for i in range(1, geom.N + 1):
            pieces = part.branch_arc(i).intersect(geom.isometric_arc(i))
            for arc in pieces:
                xs = [arc.point_at(s) for s in np.linspace(0, arc.length, 100)]
                assert min(geom.gen(i).derivative(x) for x in xs) > 1


@settings(max_examples=100)
@given(st.integers(0, 10**6))
def test_F_preserves_nu_on_branch_rectangles(seed):
    rng = np.random.default_rng(seed)
    part = Partition.midpoint(G2)
    i = int(rng.integers(1, 13))
    br = part.branch_arc(i)
    y0 = br.point_at(rng.uniform(0, 0.5) * br.length)
    y1 = br.point_at(rng.uniform(0.5, 1.0) * br.length)
    # x-arc inside the complement of the branch
    gap = ccw_offset(br.end, br.start)
    x0 = br.end + rng.uniform(0.01, 0.5) * gap
    x1 = br.end + rng.uniform(0.5, 0.99) * gap
    T = G2.gen(i)
    before = nu_rect(x0, x1, y0, y1)
    after = nu_rect(T(x0), T(x1), T(y0), T(y1))
    assert after == pytest.approx(before, rel=1e-10, abs=1e-12)
    assert math.isfinite(before)
