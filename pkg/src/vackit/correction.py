"""Corrective depth remapping.

Inverse of the perception model: scene depth is remapped so that geometry
perceived under a vergence offset coincides with the intended geometry.
Operates on scalar depths, single points, and triangle meshes in the
cyclopean view frame; world/view conversion is the caller's concern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backends
from .errors import DomainError
from .geometry import EyeGeometry, ScenePoint
from .perception import PerturbationParams, predict_endpoint

__all__ = [
    "MeshModel",
    "remap_depth",
    "transform_point",
    "transform_mesh",
    "predicted_correction_curve",
    "CorrectionCurveRow",
]


@dataclass(frozen=True)
class MeshModel:
    """Triangle mesh: an (N, 3) vertex array and (M, 3) face index array.

    Attributes:
        vertices: Vertex coordinates in meters, view space.
        faces: 0-based vertex index triples.
        provenance: Source path or a description of how the mesh was made.
        normal_lines: Raw normal records carried through from an OBJ file;
            they are not recomputed by any transform and become stale once
            vertices move.
    """

    vertices: np.ndarray
    faces: np.ndarray
    provenance: str = ""
    normal_lines: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3 or vertices.shape[0] < 1:
            raise DomainError(f"vertices must be (N>=1, 3), got shape {vertices.shape}")
        if faces.size and (faces.ndim != 2 or faces.shape[1] != 3):
            raise DomainError(f"faces must be (M, 3), got shape {faces.shape}")
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise DomainError("face indices out of vertex range")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces.reshape(-1, 3))


def _corrected_angle(tau: float, params: PerturbationParams,
                     literal_half_angle: bool) -> float:
    # Full-angle convention by default; the literal variant subtracts beta
    # from the half angle and later omits the /2 in the tangent, which
    # double-counts the offset and breaks the inverse property.
    if literal_half_angle:
        return tau / 2.0 - params.beta_offset
    return tau - params.beta_offset


def remap_depth(z_view: float, eyes: EyeGeometry, params: PerturbationParams,
                literal_half_angle: bool = False) -> float:
    """Corrected display depth for an on-axis point at depth z_view.

    tau = 2*atan2(ipd/2, z); tau_tilde = tau - beta;
    z_tilde = (ipd/2) / tan(tau_tilde / 2).  For beta > 0 the result is
    farther than the input: objects are pushed away so that the offset
    pulls them back to where they belong.

    Args:
        z_view: View-space depth in meters (> 0).
        eyes: Viewing geometry.
        params: Offset parameters.
        literal_half_angle: Apply beta to the half angle and drop the /2 in
            the tangent.  Provided for comparison only; this variant does
            not satisfy the inverse property.

    Raises:
        DomainError: If z_view <= 0 or the corrected angle underflows
            (point too distant to correct).
    """
    if z_view <= 0.0:
        raise DomainError(f"z_view must be positive, got {z_view!r}")
    tau = 2.0 * math.atan2(eyes.half_ipd, z_view)
    corrected = _corrected_angle(tau, params, literal_half_angle)
    if corrected <= 0.0:
        raise DomainError(
            f"point too distant to correct: corrected angle {corrected!r} <= 0"
        )
    if literal_half_angle:
        return eyes.half_ipd / math.tan(corrected)
    return eyes.half_ipd / math.tan(corrected / 2.0)


def transform_point(p: ScenePoint, eyes: EyeGeometry, params: PerturbationParams,
                    literal_half_angle: bool = False) -> ScenePoint:
    """Remap one point's depth, preserving its x and y coordinates.

    The corrected cyclopean distance d_tilde is triangulated from the
    point's subtended angle minus beta; the new depth is
    sqrt(d_tilde^2 - x^2 - y^2).

    Raises:
        DomainError: If the corrected distance cannot keep the lateral
            coordinates (radicand <= 0), or on angle underflow.
    """
    d = p.cyclopean_distance
    tau = 2.0 * math.atan2(eyes.half_ipd, d)
    corrected = _corrected_angle(tau, params, literal_half_angle)
    if corrected <= 0.0:
        raise DomainError(
            f"point too distant to correct: corrected angle {corrected!r} <= 0"
        )
    if literal_half_angle:
        d_tilde = eyes.half_ipd / math.tan(corrected)
    else:
        d_tilde = eyes.half_ipd / math.tan(corrected / 2.0)
    radicand = d_tilde * d_tilde - p.x * p.x - p.y * p.y
    if radicand <= 0.0:
        raise DomainError(
            f"corrected point cannot keep lateral coordinates: "
            f"point ({p.x}, {p.y}, {p.z}) has corrected distance {d_tilde}"
        )
    return ScenePoint(x=p.x, y=p.y, z=math.sqrt(radicand))


def transform_mesh(mesh: MeshModel, eyes: EyeGeometry,
                   params: PerturbationParams) -> MeshModel:
    """Remap every vertex of a mesh; faces and ordering are preserved.

    Vertex math runs through the batch kernel (numba or numpy backend).

    Raises:
        DomainError: Naming the index and coordinates of the first vertex
            that cannot be corrected.
    """
    out, first_bad = backends.remap_points(mesh.vertices, eyes.half_ipd,
                                           params.beta_offset)
    if first_bad >= 0:
        x, y, z = mesh.vertices[first_bad]
        raise DomainError(
            f"vertex {first_bad} at ({x}, {y}, {z}) cannot be corrected"
        )
    return MeshModel(vertices=out, faces=mesh.faces, provenance=mesh.provenance,
                     normal_lines=mesh.normal_lines)


@dataclass(frozen=True)
class CorrectionCurveRow:
    """One distance of the predicted endpoint-error comparison."""

    distance: float
    original_error: float
    transformed_error: float


def predicted_correction_curve(distances: "np.ndarray | list[float]",
                               eyes: EyeGeometry,
                               params: PerturbationParams) -> list[CorrectionCurveRow]:
    """Predicted endpoint errors with and without the corrective remap.

    For each target distance: the original column is the model endpoint
    error in the uncorrected scene; the transformed column repeats the
    prediction for a target displayed at its remapped depth.  The
    transformed error is zero by construction but is computed numerically
    rather than assumed.

    Args:
        distances: Target cyclopean distances in meters, all positive.

    Returns:
        One row per input distance, in input order.
    """
    rows = []
    for d in np.asarray(distances, dtype=float):
        d = float(d)
        original = predict_endpoint(d, params, eyes) - d
        displayed = remap_depth(d, eyes, params)
        transformed = predict_endpoint(displayed, params, eyes) - d
        rows.append(CorrectionCurveRow(distance=d, original_error=original,
                                       transformed_error=transformed))
    return rows
