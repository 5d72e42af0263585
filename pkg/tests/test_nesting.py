import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import strict_local_minima
from tetmodal import ChildPlacement, InvalidNesting, IrrationalScale, MisalignedChild, NestingNode, compose_problem, plan_refinement
from tetmodal.nesting import anchorage_for, blend_weights, default_gain, embed_child
from tetmodal.primitive import build_primitive_field, standard_primitive


def child(anchor="major", rotation=0, scale=0.25, **kw):
    return ChildPlacement(NestingNode(), anchor, rotation, scale, **kw)


def test_refinement_plan():
    np.testing.assert_array_equal(plan_refinement(NestingNode()), [1, 1, 1])
    np.testing.assert_array_equal(plan_refinement(NestingNode(children=(child(),))), [0.25] * 3)
    np.testing.assert_array_equal(plan_refinement(NestingNode(children=(child(scale=0.5),))), [0.5] * 3)
    with pytest.raises(IrrationalScale):
        plan_refinement(NestingNode(children=(child(scale=0.3),)))
    with pytest.raises(IrrationalScale):
        plan_refinement(NestingNode(children=(child(scale=0.25),)), max_refinement=2)


def test_irrational_scale_reaches_compose():
    with pytest.raises(IrrationalScale):
        compose_problem(NestingNode(children=(child(scale=0.3),)))


@pytest.mark.parametrize("rotation", [0, 90, 180, 270])
def test_footprint_and_spacing(rotation):
    a = anchorage_for(standard_primitive(), child(rotation=rotation))
    x0, x1, y0, y1 = a.region()
    wide = rotation in (0, 180)
    assert (x1 - x0, y1 - y0) == ((1.0, 0.5) if wide else (0.5, 1.0))
    assert ((x0 + x1) / 2, (y0 + y1) / 2) == (1.0, 0.0)
    hx, hy, hz = a.child_spacing((0.25, 0.125, 0.25))
    # children span the parent's full z range, so only x and y are rescaled
    assert (hx, hy, hz) == ((1.0, 0.5, 0.25) if wide else (0.5, 1.0, 0.25))


@settings(max_examples=100, deadline=None)
@given(
    st.sampled_from([0, 90, 180, 270]),
    st.tuples(st.floats(0, 4), st.floats(-1, 1), st.floats(0, 1)),
)
def test_child_map_round_trip(rotation, p):
    a = anchorage_for(standard_primitive(), child(rotation=rotation))
    back = a.to_child(a.to_parent(p))
    np.testing.assert_allclose(back[0], p, atol=1e-12)


def test_rotation_direction():
    a = anchorage_for(standard_primitive(), child(rotation=90))
    # the child's x axis turns onto the parent's y axis
    np.testing.assert_allclose(a.to_parent([[3, 0, 0]]), [[1.0, 0.25, 0.0]])


def test_blend_weights():
    region = (0.0, 2.0, 0.0, 2.0)
    w = blend_weights(np.array([[0, 1], [0.25, 1], [0.5, 1], [1, 1], [2, 0.1]]), region, (0.5, 0.5))
    np.testing.assert_allclose(w, [0, 0.5, 1, 1, 0])


@pytest.mark.parametrize(
    "placement, message",
    [
        (child(rotation=45), "rotation"),
        (child(scale=1.2), "scale"),
        (child(scale=0.0), "scale"),
        (child(value_gain=-1.0), "value_gain"),
        (child(value_gain=0.0), "value_gain"),
        (child(anchor="minor:3"), "minor"),
        (child(anchor="side"), "anchor"),
        (child(offset=(2.5, 0.0)), "inside"),
        (child(scale=0.5, offset=(1.0, 0.0)), "covers"),
    ],
)
def test_invalid_placements(placement, message):
    with pytest.raises(InvalidNesting, match=message):
        compose_problem(NestingNode(children=(placement,)))


def test_overlapping_children():
    kids = (child(anchor="minor", scale=0.125, offset=(0.1, 0)), child(anchor="minor", scale=0.125, offset=(-0.1, 0)))
    with pytest.raises(InvalidNesting, match="overlap"):
        compose_problem(NestingNode(children=kids))


def test_gain_must_stay_below_basin_depth():
    with pytest.raises(InvalidNesting, match="basin depth"):
        compose_problem(NestingNode(children=(child(value_gain=1.0),)))


def test_default_gain():
    # basin depth 1 at the major optimum, child range of psi2 is 4
    assert default_gain(1.0, 4.0) == pytest.approx(0.1)


def test_child_values_inside_footprint():
    p = compose_problem(NestingNode(children=(child(),)))
    gain = default_gain(1.0, 4.0)
    pts = np.array([[0.75, 0, 0], [1.0, 0, 0], [1.25, 0, 0], [0.75, 0, 1]])
    # child p+ at (0.75, 0), child saddle at the anchor, child p- at (1.25, 0)
    np.testing.assert_allclose(p.psi.evaluate(pts)[:, 1], gain * np.array([0.0, 1.0, 0.5, 0.0]), atol=1e-12)
    # outside the footprint the parent field is untouched
    flat = compose_problem(NestingNode(), spacing=p.mesh.spacing)
    outside = p.mesh.vertices[:, 0] >= 1.5 + 0.25
    np.testing.assert_array_equal(p.psi.values[outside], flat.psi.values[outside])


def test_child_optima_become_slice_minima(nested):
    mesh, psi2 = nested.mesh, nested.psi.values[:, 1]
    minima = strict_local_minima(psi2, mesh.vertices[:, 2] == 0, mesh.edges)
    found = {tuple(mesh.vertices[v, :2]) for v in minima}
    # images of the child optima under each placement
    assert {(0.75, 0.0), (1.25, 0.0), (3.0, -0.25), (3.0, 0.25)} <= found
    # the child floor sits at the anchor's base value for every z, so the
    # child's persisting optimum keeps a minimum even where the parent's minor fades
    top = strict_local_minima(psi2, mesh.vertices[:, 2] == 1, mesh.edges)
    assert sorted(tuple(map(float, mesh.vertices[v, :2])) for v in top) == [(0.75, 0.0), (3.0, -0.25)]


def test_global_minimum_at_child_major_image():
    p = compose_problem(NestingNode(children=(child(),)))
    psi2 = p.psi.values[:, 1]
    assert psi2.min() == 0.0
    at_min = p.mesh.vertices[psi2 == 0.0]
    assert np.all(at_min[:, :2] == (0.75, 0.0))


def test_rotation_180_mirrors_the_child():
    for rotation, expected in ((0, 1.25), (180, 0.75)):
        a = anchorage_for(standard_primitive(), child(rotation=rotation))
        np.testing.assert_allclose(a.to_parent([[3, 0, 0]])[0, :2], (expected, 0.0))


def test_two_children_at_one_minor():
    kids = (
        child(anchor="minor", rotation=90, scale=0.125, offset=(0.375, 0)),
        child(anchor="minor", rotation=90, scale=0.125, offset=(-0.375, 0)),
    )
    p = compose_problem(NestingNode(children=kids))
    mesh = p.mesh
    minima = strict_local_minima(p.psi.values[:, 1], mesh.vertices[:, 2] == 0, mesh.edges)
    found = {tuple(map(float, mesh.vertices[v, :2])) for v in minima}
    assert {(2.625, -0.125), (3.375, -0.125)} <= found


def test_depth_three_tree():
    grandchild = ChildPlacement(NestingNode(), "major", 0, 0.25)
    root = NestingNode(children=(ChildPlacement(NestingNode(children=(grandchild,)), "minor", 0, 0.25),))
    assert root.depth == 3
    p = compose_problem(root)
    np.testing.assert_array_equal(p.mesh.spacing, [1 / 16] * 3)
    assert np.isfinite(p.psi.values).all()


def test_misaligned_child_is_detected():
    parent = build_primitive_field(standard_primitive(), None)
    a = anchorage_for(standard_primitive(), child())
    coarse_child = build_primitive_field(standard_primitive())
    with pytest.raises(MisalignedChild):
        embed_child(parent, a, coarse_child)
