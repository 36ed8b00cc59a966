"""Central numeric defaults.

Every residual threshold the engine or its test-suite relies on lives here so
a single profile switch (environment variable ``TORSIONLAB_TOLERANCES``)
tightens or relaxes the whole stack consistently.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .errors import ValidationError


@dataclass(frozen=True)
class ToleranceProfile:
    name: str = "default"
    # |det e| (equivalently sqrt(det g)) below this means the triad is unusable.
    degenerate_triad_floor: float = 1e-12
    # Defect charts exclude a disk of this radius around the origin.
    guard_radius: float = 1e-8
    # Minimum kernel width / grid spacing ratio accepted by the propagator.
    grid_resolution_ratio: float = 1.5
    # Pointwise identity residuals (max-norm) used by the verification suite.
    symmetry_tol: float = 1e-10
    identity_tol: float = 1e-8
    trace_identity_tol: float = 1e-10
    curvature_relation_tol: float = 1e-6
    flatness_tol: float = 1e-8


_PROFILES = {
    "default": ToleranceProfile(),
    "strict": replace(
        ToleranceProfile(),
        name="strict",
        degenerate_triad_floor=1e-10,
        symmetry_tol=1e-12,
        identity_tol=1e-10,
        curvature_relation_tol=1e-8,
    ),
}

ENV_VAR = "TORSIONLAB_TOLERANCES"


def active_profile() -> ToleranceProfile:
    """Profile selected by the environment, falling back to ``default``."""
    name = os.environ.get(ENV_VAR, "default").strip().lower()
    try:
        return _PROFILES[name]
    except KeyError:
        raise ValidationError(
            f"unknown tolerance profile {name!r}; choose from {sorted(_PROFILES)}"
        ) from None
