"""Rotation-equivariant geometric scattering on point-cloud graphs."""

from ._escgnn import (
    METRICS_HEADER,
    EscgnnError,
    cli,
    diameter_dataset,
    lazy_walk,
    local_frames,
    scattering,
    vector_diffusion,
    vectorfield_dataset,
    verify,
)

__all__ = [
    "METRICS_HEADER",
    "EscgnnError",
    "cli",
    "diameter_dataset",
    "lazy_walk",
    "local_frames",
    "scattering",
    "vector_diffusion",
    "vectorfield_dataset",
    "verify",
]
