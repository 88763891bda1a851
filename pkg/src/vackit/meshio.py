"""Mesh and point-cloud file I/O: ASCII OBJ and xyz CSV."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .correction import MeshModel
from .errors import DataFormatError

__all__ = ["read_obj", "write_obj", "read_points_csv", "write_points_csv"]


def _parse_face_vertex(token: str, n_vertices: int, path: str, line_no: int) -> int:
    # OBJ faces may carry texture/normal references as v/vt/vn.
    head = token.split("/", 1)[0]
    try:
        idx = int(head)
    except ValueError:
        raise DataFormatError(f"bad face index {token!r}", path, line_no) from None
    if idx < 0:
        idx = n_vertices + idx
    else:
        idx -= 1
    if not (0 <= idx < n_vertices):
        raise DataFormatError(f"face index {token!r} out of range", path, line_no)
    return idx


def read_obj(path: str | Path) -> MeshModel:
    """Read an ASCII OBJ mesh.

    Vertex positions and faces are parsed; polygonal faces are fan
    triangulated.  Normal records are kept verbatim so they can be written
    back out, but nothing updates them.

    Raises:
        DataFormatError: On malformed vertex or face records, with file and
            line number.
    """
    path = Path(path)
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    normal_lines: list[str] = []
    raw_faces: list[tuple[list[str], int]] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise DataFormatError("vertex needs 3 coordinates", str(path), line_no)
                try:
                    vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError:
                    raise DataFormatError(f"bad vertex {line!r}", str(path), line_no) from None
            elif tag == "vn":
                normal_lines.append(line)
            elif tag == "f":
                if len(parts) < 4:
                    raise DataFormatError("face needs >= 3 vertices", str(path), line_no)
                raw_faces.append((parts[1:], line_no))
    if not vertices:
        raise DataFormatError("no vertices found", str(path))
    for tokens, line_no in raw_faces:
        idx = [_parse_face_vertex(t, len(vertices), str(path), line_no) for t in tokens]
        for k in range(1, len(idx) - 1):
            faces.append((idx[0], idx[k], idx[k + 1]))
    return MeshModel(
        vertices=np.asarray(vertices, dtype=np.float64),
        faces=np.asarray(faces, dtype=np.int64).reshape(-1, 3),
        provenance=str(path),
        normal_lines=tuple(normal_lines),
    )


def write_obj(mesh: MeshModel, path: str | Path) -> None:
    """Write a mesh as ASCII OBJ (vertices, passthrough normals, faces)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for line in mesh.normal_lines:
            fh.write(line + "\n")
        for a, b, c in mesh.faces:
            fh.write(f"f {int(a) + 1} {int(b) + 1} {int(c) + 1}\n")


def read_points_csv(path: str | Path) -> np.ndarray:
    """Read an (N, 3) point array from a CSV with header x,y,z (meters)."""
    path = Path(path)
    points: list[tuple[float, float, float]] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["x", "y", "z"]:
            raise DataFormatError("expected header x,y,z", str(path), 1)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                points.append((float(row[0]), float(row[1]), float(row[2])))
            except (ValueError, IndexError):
                raise DataFormatError(f"bad point row {row!r}", str(path), line_no) from None
    if not points:
        raise DataFormatError("no points found", str(path))
    return np.asarray(points, dtype=np.float64)


def write_points_csv(points: np.ndarray, path: str | Path) -> None:
    """Write an (N, 3) point array as CSV with header x,y,z (meters)."""
    points = np.asarray(points, dtype=np.float64)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "z"])
        for x, y, z in points:
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(z))])
