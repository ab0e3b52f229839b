"""Image stack data model, matrix flattening, and intensity normalization.

Frames are stored as float32 (bulk storage is the memory bottleneck);
linear algebra and training promote to float64.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

STORAGE_DTYPE = np.float32
COMPUTE_DTYPE = np.float64


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ImageStack:
    """Ordered stack of equally-sized 2D non-negative intensity frames.

    frames: (k, m, n) float32, read-only after construction.
    bit_depth: bit depth of origin for integer-valued data (8 or 16), or None.
    pixel_size_nm: physical pixel size, if known.
    """

    frames: np.ndarray
    bit_depth: int | None = None
    pixel_size_nm: float | None = None

    def __post_init__(self):
        a = np.asarray(self.frames)
        if a.ndim == 2:
            a = a[None, :, :]
        if a.ndim != 3 or min(a.shape) < 1:
            raise ValueError(f"stack must be (k, m, n) with all dims >= 1, got shape {a.shape}")
        a = a.astype(STORAGE_DTYPE, copy=not (a.dtype == STORAGE_DTYPE and not a.flags.writeable))
        if not np.isfinite(a).all():
            raise ValueError("stack contains non-finite values")
        if a.min() < 0:
            raise ValueError("stack contains negative intensities")
        object.__setattr__(self, "frames", _freeze(a))
        if self.bit_depth is not None and self.bit_depth not in (8, 16):
            raise ValueError(f"bit_depth must be 8, 16 or None, got {self.bit_depth}")

    @property
    def n_frames(self):
        return self.frames.shape[0]

    @property
    def height(self):
        return self.frames.shape[1]

    @property
    def width(self):
        return self.frames.shape[2]

    @property
    def shape(self):
        return self.frames.shape

    def frame(self, i):
        return self.frames[i]

    def with_frames(self, frames):
        """New stack with the same metadata but different pixel data."""
        return ImageStack(frames, bit_depth=self.bit_depth, pixel_size_nm=self.pixel_size_nm)


@dataclass(frozen=True, eq=False)
class FlatMatrix:
    """A k-frame window rearranged as a k x (m*n) float64 matrix.

    Row i is frame i read in row-major (scanline) order; `shape` records
    (k, m, n) so the window can be reconstructed exactly.
    """

    data: np.ndarray
    shape: tuple
    bit_depth: int | None = None
    pixel_size_nm: float | None = None

    def __post_init__(self):
        a = np.asarray(self.data, dtype=COMPUTE_DTYPE)
        k, m, n = self.shape
        if a.shape != (k, m * n):
            raise ValueError(f"data shape {a.shape} inconsistent with shape record {self.shape}")
        object.__setattr__(self, "data", _freeze(a))
        object.__setattr__(self, "shape", (int(k), int(m), int(n)))


@dataclass(frozen=True)
class NormalizationRecord:
    """How a stack was rescaled, sufficient to invert the transform."""

    method: str
    scale: float
    offset: float = 0.0


def flatten(window):
    """Rearrange an ImageStack window into a FlatMatrix (one frame per row)."""
    if not isinstance(window, ImageStack):
        raise TypeError("flatten expects an ImageStack")
    k, m, n = window.shape
    data = window.frames.reshape(k, m * n).astype(COMPUTE_DTYPE)
    return FlatMatrix(data, (k, m, n), bit_depth=window.bit_depth,
                      pixel_size_nm=window.pixel_size_nm)


def unflatten(flat):
    """Inverse of flatten; restores the (k, m, n) stack exactly."""
    if not isinstance(flat, FlatMatrix):
        raise TypeError("unflatten expects a FlatMatrix")
    k, m, n = flat.shape
    return ImageStack(flat.data.reshape(k, m, n), bit_depth=flat.bit_depth,
                      pixel_size_nm=flat.pixel_size_nm)


def normalize(stack, method="max-scale"):
    """Rescale intensities; returns (normalized stack, record).

    max-scale divides by the global maximum so values lie in [0, 1];
    `none` is the identity. Division cannot flip signs or create zeros
    from positive values (for any realistic detector-unit input).
    """
    if method == "none":
        return stack, NormalizationRecord("none", 1.0)
    if method != "max-scale":
        raise ValueError(f"unknown normalization method {method!r}")
    scale = float(stack.frames.max())
    if scale <= 0.0:
        raise ValueError("max-scale normalization needs at least one positive value")
    out = (stack.frames.astype(COMPUTE_DTYPE) / scale).astype(STORAGE_DTYPE)
    return stack.with_frames(out), NormalizationRecord("max-scale", scale)


def denormalize(stack, record):
    """Invert normalize(). Integer-origin stacks are restored exactly."""
    if record.method == "none":
        return stack
    vals = stack.frames.astype(COMPUTE_DTYPE) * record.scale + record.offset
    if stack.bit_depth is not None:
        # integer-origin data: snap away the division/multiplication rounding
        vals = np.rint(vals)
    return stack.with_frames(vals.astype(STORAGE_DTYPE))
