"""Forward model of depth misperception under a vergence offset.

Maps true viewing geometry plus a constant vergence offset to perceived
distances, predicted distance errors, and predicted reach endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import (
    EyeGeometry,
    FixationState,
    ScenePoint,
    distance_from_angle,
    disparity_from_vergence,
    subtended_angle,
)

__all__ = [
    "PerturbationParams",
    "ViewingConfiguration",
    "perturbed_vergence",
    "effective_target_angle",
    "perceived_distance",
    "distance_error",
    "offset_as_fixation_shift",
    "predict_endpoint",
    "fixated_distance_error",
]

BETA_BOUND_RAD = 0.05


@dataclass(frozen=True)
class PerturbationParams:
    """Vergence-offset model parameters.

    Args:
        beta_offset: Constant additive vergence offset in radians.  Must
            satisfy |beta| < 0.05 rad (about 2.9 degrees), a sanity bound
            well above any plausible display-induced offset.
        accommodation_distance: Display focal distance in meters, used only
            when expressing the offset as an equivalent fixation shift.
    """

    beta_offset: float
    accommodation_distance: float | None = None

    def __post_init__(self) -> None:
        if not abs(self.beta_offset) < BETA_BOUND_RAD:
            raise DomainError(
                f"|beta_offset| must be < {BETA_BOUND_RAD} rad, got {self.beta_offset!r}"
            )
        if self.accommodation_distance is not None and self.accommodation_distance <= 0:
            raise DomainError(
                f"accommodation_distance must be positive, got {self.accommodation_distance!r}"
            )


@dataclass(frozen=True)
class ViewingConfiguration:
    """One viewing situation: eyes, current fixation, and a target point."""

    eyes: EyeGeometry
    fixation: FixationState
    target: ScenePoint


def perturbed_vergence(phi: float, params: PerturbationParams) -> float:
    """Vergence angle registered under the offset: phi + beta."""
    if phi <= 0.0:
        raise DomainError(f"vergence angle must be positive, got {phi!r}")
    return phi + params.beta_offset


def effective_target_angle(phi: float, delta: float,
                           params: PerturbationParams) -> float:
    """The target's effective subtended angle under the offset.

    tau_hat = (phi + beta) - delta.

    Raises:
        DomainError: If the result is outside (0, pi); a non-positive
            effective angle would place the target at infinity or behind
            the viewer.
    """
    tau_hat = perturbed_vergence(phi, params) - delta
    if not (0.0 < tau_hat < math.pi):
        raise DomainError(
            f"effective target angle must be in (0, pi), got {tau_hat!r}"
        )
    return tau_hat


def perceived_distance(config: ViewingConfiguration,
                       params: PerturbationParams) -> float:
    """Distance at which the target is perceived under the vergence offset.

    Computes the vergence angle and disparity of the configuration, offsets
    the vergence, and triangulates the effective angle back to a distance.
    Angles here are parameterized by cyclopean distance (the same
    triangulation distance_from_angle inverts), which keeps the zero-offset
    case an exact identity for every configuration, on- or off-axis.  The
    azimuth-based visual-angle route in the geometry module agrees with
    this parameterization on the midline.

    Returns:
        Perceived cyclopean distance in meters.
    """
    phi = subtended_angle(config.fixation.fixation_point, config.eyes)
    tau = subtended_angle(config.target, config.eyes)
    delta = disparity_from_vergence(phi, tau)
    tau_hat = effective_target_angle(phi, delta, params)
    return distance_from_angle(tau_hat, config.eyes)


def distance_error(config: ViewingConfiguration,
                   params: PerturbationParams) -> float:
    """Perceived minus true target distance; negative means underestimation."""
    true_distance = config.target.cyclopean_distance
    return perceived_distance(config, params) - true_distance


def offset_as_fixation_shift(params: PerturbationParams,
                             fixation_distance: float,
                             eyes: EyeGeometry) -> float:
    """How much closer the effective fixation lies under the offset.

    Converts the angular offset into the equivalent shift of the fixation
    distance: the offset vergence corresponds to fixating a nearer point.

    Args:
        params: Offset parameters.
        fixation_distance: True fixation distance in meters (> 0).

    Returns:
        fixation_distance minus the distance whose subtended angle is the
        offset vergence; positive for a positive offset.
    """
    if fixation_distance <= 0.0:
        raise DomainError(
            f"fixation_distance must be positive, got {fixation_distance!r}"
        )
    phi = 2.0 * math.atan2(eyes.half_ipd, fixation_distance)
    effective = distance_from_angle(phi + params.beta_offset, eyes)
    return fixation_distance - effective


def predict_endpoint(target_distance: float, params: PerturbationParams,
                     eyes: EyeGeometry) -> float:
    """Model reach endpoint under disparity matching, as a depth in meters.

    The actor fixates the target and drives the hand until its disparity
    matches the target's offset disparity, i.e. to the depth z_e whose
    subtended angle satisfies tau(z_e) = tau(target) + beta:
    z_e = (ipd/2) / tan((tau_t + beta) / 2).

    The endpoint error z_e - target_distance is zero when beta is zero and
    its implied disparity difference equals -beta at every distance.
    """
    if target_distance <= 0.0:
        raise DomainError(f"target_distance must be positive, got {target_distance!r}")
    tau_t = 2.0 * math.atan2(eyes.half_ipd, target_distance)
    matched = tau_t + params.beta_offset
    if not (0.0 < matched < math.pi):
        raise DomainError(f"matched angle must be in (0, pi), got {matched!r}")
    return eyes.half_ipd / math.tan(matched / 2.0)


def fixated_distance_error(distance: np.ndarray | float, ipd: np.ndarray | float,
                           beta: float) -> np.ndarray:
    """Vectorized distance error for fixated targets.

    Fast path used by fitting and simulation: for a fixated target the
    effective angle reduces to tau + beta, so the error is
    (ipd/2)/tan((tau + beta)/2) - distance with tau = 2*atan2(ipd/2, d).
    Inputs broadcast; domain violations yield +inf instead of raising so
    that an optimizer can reject the offending step.

    Args:
        distance: Cyclopean target distance(s) in meters.
        ipd: Interpupillary distance(s) in meters.
        beta: Vergence offset in radians.

    Returns:
        Error array (perceived minus true distance), +inf where invalid.
    """
    d = np.asarray(distance, dtype=float)
    ipd_arr = np.asarray(ipd, dtype=float)
    tau = 2.0 * np.arctan2(ipd_arr / 2.0, d)
    half = (tau + beta) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        perceived = ipd_arr / 2.0 / np.tan(half)
        err = perceived - d
    bad = ~((half > 0.0) & (half < math.pi / 2.0) & np.isfinite(err))
    if np.any(bad):
        err = np.where(bad, np.inf, err)
    return err
