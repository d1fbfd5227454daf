import numpy as np
import pytest

from heatbem import (
    MeshError,
    SurfaceMesh,
    TimeGrid,
    generate_cube_surface,
    load_mesh,
    refine,
    save_mesh,
)
from heatbem.mesh import MeshParseError


def test_time_grid_basics():
    tg = TimeGrid(1.0, 8)
    assert tg.step == pytest.approx(0.125)
    assert tg.node(3) == pytest.approx(0.375)
    assert tg.bisect().n_steps == 16
    with pytest.raises(ValueError):
        TimeGrid(0.0, 8)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)


def test_cube_surface_counts_and_geometry():
    for n in (1, 2, 4):
        mesh = generate_cube_surface(n)
        assert mesh.n_triangles == 12 * n * n
        assert mesh.n_vertices == 6 * n * n + 2
        # total surface area of [-1, 1]^3 is 24
        assert mesh.areas.sum() == pytest.approx(24.0, rel=1e-13)
        assert mesh.is_admissible()


def test_cube_normals_point_outward():
    mesh = generate_cube_surface(2)
    # outward normal has positive dot product with the centroid direction
    dots = np.sum(mesh.normals * mesh.centroids, axis=1)
    assert np.all(dots > 0)
    assert np.allclose(np.linalg.norm(mesh.normals, axis=1), 1.0)


def test_cube_half_width():
    mesh = generate_cube_surface(1, half_width=0.5)
    assert mesh.vertices.min() == pytest.approx(-0.5)
    assert mesh.vertices.max() == pytest.approx(0.5)
    assert mesh.areas.sum() == pytest.approx(6.0, rel=1e-13)


def test_refine_quadrisects():
    mesh = generate_cube_surface(1)
    fine = refine(mesh)
    assert fine.n_triangles == 4 * mesh.n_triangles
    assert fine.areas.sum() == pytest.approx(mesh.areas.sum(), rel=1e-13)
    assert fine.is_admissible()
    # orientation is preserved
    dots = np.sum(fine.normals * fine.centroids, axis=1)
    assert np.all(dots > 0)


def test_refine_matches_generator():
    # quadrisecting the cube triangulation gives the finer triangulation's
    # geometry (up to vertex/triangle ordering): same area and diameters
    fine = refine(generate_cube_surface(2))
    direct = generate_cube_surface(4)
    assert fine.n_triangles == direct.n_triangles
    assert fine.areas.sum() == pytest.approx(direct.areas.sum(), rel=1e-13)
    assert np.sort(fine.diameters)[0] == pytest.approx(np.sort(direct.diameters)[0])


def test_mesh_validation():
    with pytest.raises(MeshError):
        SurfaceMesh(np.zeros((2, 3)), np.array([[0, 1, 2]]))  # index out of range
    with pytest.raises(MeshError):
        SurfaceMesh(np.eye(3), np.array([[0, 1, 1]]))  # degenerate
    with pytest.raises(MeshError):
        SurfaceMesh(
            np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]]), np.array([[0, 1, 2]])
        )  # collinear -> zero area


def test_save_load_round_trip(tmp_path):
    mesh = generate_cube_surface(2)
    path = tmp_path / "cube.mesh"
    save_mesh(mesh, path)
    back = load_mesh(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)


def test_load_mesh_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.mesh"
    path.write_text("heatbem-mesh 1\nvertices 3\n0 0 0\n1 0 0\nnot a number 0\n")
    with pytest.raises(MeshParseError) as exc:
        load_mesh(path)
    assert exc.value.line == 5

    path.write_text("wrong header\n")
    with pytest.raises(MeshParseError) as exc:
        load_mesh(path)
    assert exc.value.line == 1


def test_load_mesh_ignores_comments(tmp_path):
    path = tmp_path / "c.mesh"
    path.write_text(
        "# comment\nheatbem-mesh 1\nvertices 3\n0 0 0\n1 0 0\n0 1 0\n"
        "# another\ntriangles 1\n0 1 2\n"
    )
    mesh = load_mesh(path)
    assert mesh.n_triangles == 1
