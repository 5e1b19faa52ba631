import numpy as np
import pytest

from boxqi.boxmesh import (
    Box, box_size, box_measure, bounding_box, box_contains_box,
    box_intersection, interiors_overlap, TruncatedBox, as_region,
    classify_truncated_box, region_measure, BoxMesh, tensor_mesh,
    elements_in, active_sets, local_resolution, parse_mesh_description,
)


def unit_grid(nx, ny):
    return tensor_mesh([np.linspace(0, nx, nx + 1), np.linspace(0, ny, ny + 1)])


def test_box_size_pins():
    assert tuple(box_size(Box([0, 0], [1, 1]))) == (1, 1)
    assert tuple(box_size(Box([0, 3], [3, 4]))) == (3, 1)
    assert tuple(box_size(Box([0], [0]))) == (0,)


def test_bounding_box():
    bb = bounding_box([Box([0, 0], [1, 1]), Box([2, 2], [3, 3])])
    assert tuple(bb.lo) == (0, 0) and tuple(bb.hi) == (3, 3)
    bb = bounding_box([Box([0, 0], [1, 2]), Box([0.5, 1], [2, 1.5])])
    assert tuple(bb.lo) == (0, 0) and tuple(bb.hi) == (2, 2)


def test_box_predicates():
    a = Box([0, 0], [2, 2])
    b = Box([1, 1], [3, 3])
    assert interiors_overlap(a, b)
    c = box_intersection(a, b)
    assert tuple(c.lo) == (1, 1) and tuple(c.hi) == (2, 2)
    assert box_intersection(a, Box([5, 5], [6, 6])) is None
    assert box_contains_box(Box([0, 0], [4, 4]), a)
    assert not box_contains_box(a, b)


def test_truncated_box_types():
    plain = as_region(Box([0, 0], [1, 1]))
    assert classify_truncated_box(plain) == -1
    ell = TruncatedBox(Box([0, 0], [2, 2]), Box([1, 1], [2, 2]))
    assert classify_truncated_box(ell) == 0
    prism = TruncatedBox(Box([0, 0, 0], [2, 2, 2]), Box([1, 1, 0], [2, 2, 2]))
    assert classify_truncated_box(prism) == 1
    assert region_measure(ell) == pytest.approx(3.0)


def test_elements_in():
    mesh = unit_grid(4, 4)
    assert len(elements_in(mesh, Box([0, 0], [4, 4]))) == 16
    assert len(elements_in(mesh, Box([10, 10], [11, 11]))) == 0
    # scaled copy of the pinned quarter-region case
    mesh2 = tensor_mesh([np.linspace(0, 1, 5), np.linspace(0, 1, 5)])
    assert len(elements_in(mesh2, Box([0, 0], [0.5, 0.5]))) == 4


def test_contained_idx_corner_cut():
    mesh = unit_grid(2, 2)
    region = TruncatedBox(Box([0, 0], [2, 2]), Box([1, 1], [2, 2]))
    idx = mesh.contained_idx(region)
    boxes = [mesh.element(i) for i in idx]
    assert len(boxes) == 3
    assert all(not interiors_overlap(b, Box([1, 1], [2, 2])) for b in boxes)


def test_mesh_rejects_overlap():
    with pytest.raises(ValueError):
        BoxMesh([Box([0, 0], [1, 1]), Box([0.5, 0], [1.5, 1])])


def test_active_sets_single_element_generator():
    mesh = unit_grid(3, 1)
    sup = [Box([1, 0], [2, 1])]
    A, E = active_sets(mesh, sup, sup)
    flat = [i for i in range(len(mesh)) if A[i]]
    assert len(flat) == 1
    assert A[flat[0]] == [0] and E[flat[0]] == [0]


def test_local_resolution_uniform():
    # degree-2 uniform knots: interior esupp spans 3 elements per axis
    from boxqi.spaces import build_tps
    from conftest import open_uniform

    sp = build_tps([open_uniform(0, 1, 8, 2), open_uniform(0, 1, 8, 2)])
    A, E = active_sets(sp.mesh, sp.supports(), sp.esupps())
    h_phi, h_m = local_resolution(sp.mesh, sp.esupps(), E)
    h = 1.0 / 8
    mid = sp.mesh.contained_idx(Box([3 * h, 3 * h], [5 * h, 5 * h]))
    for i in mid:
        assert np.allclose(h_phi[i], 3 * h)


def test_parse_mesh_description_forms():
    m1 = parse_mesh_description({"tensor": {"knots": [[0, 0.5, 1], [0, 1]]}})
    assert len(m1) == 2
    m2 = parse_mesh_description({
        "dimension": 2,
        "elements": [{"lo": [0, 0], "hi": [1, 1]}, {"lo": [1, 0], "hi": [2, 1]}],
    })
    assert len(m2) == 2
    with pytest.raises(ValueError):
        parse_mesh_description({"dimension": 1, "elements": [{"lo": [0, 0], "hi": [1, 1]}]})


def test_measures_and_sizes_cached():
    mesh = unit_grid(3, 2)
    assert mesh.measures().shape == (6,)
    assert np.allclose(mesh.measures(), 1.0)
    assert np.allclose(mesh.sizes(), 1.0)
