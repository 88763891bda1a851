"""OBJ and point-CSV round-trip tests.

Coordinates are written with ``repr`` so a write/read cycle is exact at
float64 resolution.  Malformed input must fail with the file path and a
1-based line number in the error, because the command line surfaces
those directly.
"""

from __future__ import annotations

import numpy as np
import pytest

from vackit.correction import MeshModel
from vackit.errors import DataFormatError
from vackit.meshio import read_obj, read_points_csv, write_obj, write_points_csv


def _write(path, text: str) -> str:
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestReadObj:
    def test_vertices_and_triangles(self, tmp_path):
        p = _write(tmp_path / "tri.obj", """\
# comment
v 0.0 0.0 0.5
v 0.1 0.0 0.55
v 0.0 0.1 0.6
f 1 2 3
""")
        mesh = read_obj(p)
        assert mesh.vertices.shape == (3, 3)
        assert mesh.vertices[1, 2] == 0.55
        np.testing.assert_array_equal(mesh.faces, [[0, 1, 2]])
        assert mesh.provenance == p

    def test_quad_is_fan_triangulated(self, tmp_path):
        p = _write(tmp_path / "quad.obj", """\
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 2 3 4
""")
        mesh = read_obj(p)
        np.testing.assert_array_equal(mesh.faces, [[0, 1, 2], [0, 2, 3]])

    def test_negative_indices_count_from_end(self, tmp_path):
        p = _write(tmp_path / "neg.obj", """\
v 0 0 1
v 1 0 1
v 0 1 1
f -3 -2 -1
""")
        mesh = read_obj(p)
        np.testing.assert_array_equal(mesh.faces, [[0, 1, 2]])

    def test_slash_references_ignored(self, tmp_path):
        p = _write(tmp_path / "slash.obj", """\
v 0 0 1
v 1 0 1
v 0 1 1
vn 0 0 1
f 1//1 2//1 3//1
""")
        mesh = read_obj(p)
        np.testing.assert_array_equal(mesh.faces, [[0, 1, 2]])
        assert mesh.normal_lines == ("vn 0 0 1",)

    def test_bad_vertex_reports_line(self, tmp_path):
        p = _write(tmp_path / "bad.obj", "v 0 0 1\nv nope 0 1\n")
        with pytest.raises(DataFormatError) as exc:
            read_obj(p)
        assert exc.value.line == 2
        assert exc.value.path == p

    def test_face_index_out_of_range_reports_line(self, tmp_path):
        p = _write(tmp_path / "range.obj", "v 0 0 1\nv 1 0 1\nv 0 1 1\nf 1 2 9\n")
        with pytest.raises(DataFormatError) as exc:
            read_obj(p)
        assert exc.value.line == 4

    def test_empty_file_rejected(self, tmp_path):
        p = _write(tmp_path / "empty.obj", "# nothing here\n")
        with pytest.raises(DataFormatError):
            read_obj(p)


class TestObjRoundTrip:
    def test_exact_vertex_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        vertices = np.column_stack([
            rng.uniform(-0.3, 0.3, 20),
            rng.uniform(-0.3, 0.3, 20),
            rng.uniform(0.2, 1.5, 20),
        ])
        faces = np.array([[0, 1, 2], [3, 4, 5], [6, 7, 8]])
        mesh = MeshModel(vertices=vertices, faces=faces, provenance="mem",
                         normal_lines=("vn 0 0 1",))
        out = tmp_path / "round.obj"
        write_obj(mesh, out)
        back = read_obj(out)
        assert np.array_equal(back.vertices, vertices)
        assert np.array_equal(back.faces, faces)
        assert back.normal_lines == ("vn 0 0 1",)

    def test_written_file_is_plain_ascii(self, tmp_path):
        mesh = MeshModel(vertices=np.array([[0.0, 0.0, 0.5]]),
                         faces=np.zeros((0, 3), dtype=np.int64),
                         provenance="mem")
        out = tmp_path / "ascii.obj"
        write_obj(mesh, out)
        text = out.read_text(encoding="utf-8")
        assert text == "v 0.0 0.0 0.5\n"


class TestPointsCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        pts = np.column_stack([
            rng.uniform(-1, 1, 10),
            rng.uniform(-1, 1, 10),
            rng.uniform(0.1, 2, 10),
        ])
        out = tmp_path / "pts.csv"
        write_points_csv(pts, out)
        back = read_points_csv(out)
        assert np.array_equal(back, pts)

    def test_header_required(self, tmp_path):
        p = _write(tmp_path / "hdr.csv", "a,b,c\n1,2,3\n")
        with pytest.raises(DataFormatError) as exc:
            read_points_csv(p)
        assert exc.value.line == 1

    def test_bad_row_reports_line(self, tmp_path):
        p = _write(tmp_path / "row.csv", "x,y,z\n0,0,1\n0,oops,1\n")
        with pytest.raises(DataFormatError) as exc:
            read_points_csv(p)
        assert exc.value.line == 3

    def test_empty_body_rejected(self, tmp_path):
        p = _write(tmp_path / "body.csv", "x,y,z\n")
        with pytest.raises(DataFormatError):
            read_points_csv(p)
