"""Rotation-equivariant anchor-distance encoding for point clouds.

Thin numpy-facing wrapper over the C++ core: anchor selection, distance-matrix
encoding and Levenberg-Marquardt decoding, the completion pipeline, evaluation
metrics, and ESCD file I/O.
"""

from ._core import (
    EscapeError,
    add_gaussian_noise,
    apply_rigid,
    chamfer_l1,
    chamfer_l2,
    complete,
    curvature,
    decode,
    decode_point,
    deterministic_fps,
    dmcd,
    encode,
    estimate_normals,
    euler_rotation_deg,
    fidelity,
    kabsch_align,
    load_cloud,
    pca_canonicalize,
    random_rotation,
    read_escd,
    remove_points,
    resample,
    save_cloud,
    select_anchors,
    write_escd,
)

__version__ = "0.1.0"

__all__ = [
    "EscapeError",
    "add_gaussian_noise",
    "apply_rigid",
    "chamfer_l1",
    "chamfer_l2",
    "complete",
    "curvature",
    "decode",
    "decode_point",
    "deterministic_fps",
    "dmcd",
    "encode",
    "estimate_normals",
    "euler_rotation_deg",
    "fidelity",
    "kabsch_align",
    "load_cloud",
    "pca_canonicalize",
    "random_rotation",
    "read_escd",
    "remove_points",
    "resample",
    "save_cloud",
    "select_anchors",
    "write_escd",
]
