"""Reference background-removal methods: global median and rolling ball."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import numpy as np

from .core import ImageStack, STORAGE_DTYPE


@dataclass(frozen=True)
class RollingBallConfig:
    radius: int
    smoothing: bool = False

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")


def median_subtract(stack):
    """Subtract the median over every pixel of every frame, clamping at 0.

    An even element count takes the mean of the two central order
    statistics.
    """
    vals = stack.frames.astype(np.float64)
    med = float(np.median(vals))
    out = np.maximum(vals - med, 0.0).astype(STORAGE_DTYPE)
    return stack.with_frames(out)


def _ball_element(radius):
    """Offsets and spherical-cap heights of the ball structuring element."""
    r = int(radius)
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    mask = dy * dy + dx * dx <= r * r
    heights = np.sqrt((r * r - dy * dy - dx * dx).astype(np.float64)[mask])
    return dy[mask], dx[mask], heights


def _erode(frame, dys, dxs, heights, r):
    m, n = frame.shape
    padded = np.full((m + 2 * r, n + 2 * r), np.inf)
    padded[r:r + m, r:r + n] = frame
    out = np.full((m, n), np.inf)
    for dy, dx, h in zip(dys, dxs, heights):
        np.minimum(out, padded[r + dy:r + dy + m, r + dx:r + dx + n] - h, out=out)
    return out

def _dilate(frame, dys, dxs, heights, r):
    m, n = frame.shape
    padded = np.full((m + 2 * r, n + 2 * r), -np.inf)
    padded[r:r + m, r:r + n] = frame
    out = np.full((m, n), -np.inf)
    for dy, dx, h in zip(dys, dxs, heights):
        np.maximum(out, padded[r + dy:r + dy + m, r + dx:r + dx + n] + h, out=out)
    return out


def rolling_ball_background(frame, cfg):
    """Background under `frame`: grayscale opening with a ball element.

    Erosion then dilation, both with the spherical-cap height profile;
    windows are cropped at the borders (padding with +/-inf is equivalent).
    The result never exceeds the frame.
    """
    f = np.asarray(frame, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError(f"expected a 2D frame, got shape {f.shape}")
    if not np.isfinite(f).all():
        raise ValueError("frame contains non-finite values")
    r = cfg.radius
    if r > f.shape[0] and r > f.shape[1]:
        raise ValueError(f"radius {r} larger than both frame dimensions {f.shape}")
    work = f
    if cfg.smoothing:
        # 3x3 box prefilter of the surface the ball rolls under
        p = np.pad(f, 1, mode="edge")
        work = sum(p[i:i + f.shape[0], j:j + f.shape[1]]
                   for i in range(3) for j in range(3)) / 9.0
    dys, dxs, heights = _ball_element(r)
    background = _dilate(_erode(work, dys, dxs, heights, r), dys, dxs, heights, r)
    if cfg.smoothing:
        np.minimum(background, f, out=background)
    return background


def rolling_ball(frame, cfg):
    """Frame minus its rolling-ball background, clamped at 0."""
    f = np.asarray(frame, dtype=np.float64)
    return np.maximum(f - rolling_ball_background(f, cfg), 0.0)


def rolling_ball_stack(stack, cfg, threads=1):
    """Apply rolling_ball to every frame; frames are independent."""
    frames = stack.frames
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(lambda f: rolling_ball(f, cfg), frames))
    else:
        outs = [rolling_ball(f, cfg) for f in frames]
    return stack.with_frames(np.stack(outs).astype(STORAGE_DTYPE))
