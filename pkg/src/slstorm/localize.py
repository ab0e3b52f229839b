"""Emitter detection, sub-pixel Gaussian fitting, and histogram rendering.

Coordinates are (x, y) with x along columns and y along rows; pixel (i, j)
is centered at x = j, y = i.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import numpy as np
from scipy.ndimage import maximum_filter

from ._fitting import levenberg


@dataclass
class Localization:
    frame: int
    x: float
    y: float
    sigma: float
    intensity: float
    residual: float = 0.0     # inf flags a centroid fallback after a diverged fit


@dataclass
class LocalizationTable:
    rows: list = field(default_factory=list)
    pixel_size_nm: float = 100.0
    source: str = ""

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def detect(frame, threshold, min_separation=2.0):
    """Integer (x, y) positions of local maxima above `threshold`.

    Non-maximum suppression keeps the brightest peak within
    `min_separation` pixels (euclidean); ties break on position so the
    result is deterministic.
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    f = np.asarray(frame, dtype=np.float64)
    is_peak = (f == maximum_filter(f, size=3, mode="constant", cval=-np.inf)) & (f > threshold)
    ys, xs = np.nonzero(is_peak)
    if ys.size == 0:
        return []
    order = np.lexsort((xs, ys, -f[ys, xs]))
    kept = []
    min_sep2 = min_separation * min_separation
    for i in order:
        x, y = int(xs[i]), int(ys[i])
        if all((x - kx) ** 2 + (y - ky) ** 2 >= min_sep2 for kx, ky in kept):
            kept.append((x, y))
    return kept


def _gauss2d_residual(roi, xg, yg):
    flat = roi.ravel()

    def rj(p):
        amp, x0, y0, sig, off = p
        dx = xg - x0
        dy = yg - y0
        e = np.exp(-(dx * dx + dy * dy) / (2.0 * sig * sig))
        model = amp * e + off
        r = (model - flat)
        jac = np.empty((flat.size, 5))
        jac[:, 0] = e
        jac[:, 1] = amp * e * dx / (sig * sig)
        jac[:, 2] = amp * e * dy / (sig * sig)
        jac[:, 3] = amp * e * (dx * dx + dy * dy) / (sig ** 3)
        jac[:, 4] = 1.0
        return r, jac

    return rj


def fit_gaussian(frame, peak, roi_radius=5, frame_index=0):
    """Least-squares symmetric 2D Gaussian + offset around an integer peak.

    The ROI is cropped at the frame border (at least 9 in-bounds pixels
    required). A fit that diverges or wanders outside the frame falls back
    to the weighted centroid, flagged with residual = inf.
    """
    f = np.asarray(frame, dtype=np.float64)
    px, py = int(peak[0]), int(peak[1])
    m, n = f.shape
    x_lo, x_hi = max(px - roi_radius, 0), min(px + roi_radius + 1, n)
    y_lo, y_hi = max(py - roi_radius, 0), min(py + roi_radius + 1, m)
    roi = f[y_lo:y_hi, x_lo:x_hi]
    if roi.size < 9:
        raise ValueError(f"ROI around ({px}, {py}) has fewer than 9 in-bounds pixels")
    if roi.max() == roi.min():
        raise ValueError(f"degenerate (flat) ROI around ({px}, {py})")
    yg, xg = np.mgrid[y_lo:y_hi, x_lo:x_hi]
    xg = xg.ravel().astype(np.float64)
    yg = yg.ravel().astype(np.float64)

    off0 = float(roi.min())
    w = roi.ravel() - off0
    wsum = w.sum()
    cx = float((w * xg).sum() / wsum)
    cy = float((w * yg).sum() / wsum)
    var = float((w * ((xg - cx) ** 2 + (yg - cy) ** 2)).sum() / wsum) / 2.0
    sig0 = min(max(math.sqrt(max(var, 0.25)), 0.5), float(roi_radius))
    p0 = [float(roi.max() - off0), cx, cy, sig0, off0]

    p, cost, ok = levenberg(_gauss2d_residual(roi, xg, yg), p0)
    amp, x0, y0, sig, off = p
    sig = abs(sig)
    in_frame = -0.5 <= x0 <= n - 0.5 and -0.5 <= y0 <= m - 0.5
    if not (ok and amp > 0 and sig > 0 and in_frame):
        # centroid fallback
        return Localization(frame_index, cx, cy, sig0,
                            float(max(wsum, 1e-12)), residual=math.inf)
    intensity = 2.0 * math.pi * amp * sig * sig
    return Localization(frame_index, float(x0), float(y0), float(sig),
                        float(intensity), residual=math.sqrt(cost))


def localize_frame(frame, threshold, min_separation=2.0, roi_radius=5, frame_index=0):
    rows = []
    for peak in detect(frame, threshold, min_separation):
        try:
            rows.append(fit_gaussian(frame, peak, roi_radius, frame_index))
        except ValueError:
            continue  # degenerate ROI: drop the detection
    return rows


def localize_stack(stack, threshold, min_separation=2.0, roi_radius=5,
                   pixel_size_nm=100.0, threads=1):
    """Detect and fit every frame; rows ordered by frame then detection order."""
    frames = stack.frames

    def work(i):
        return localize_frame(frames[i], threshold, min_separation, roi_radius, i)

    indices = range(len(frames))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_frame = list(pool.map(work, indices))
    else:
        per_frame = [work(i) for i in indices]
    table = LocalizationTable(pixel_size_nm=stack.pixel_size_nm or pixel_size_nm)
    for rows in per_frame:
        table.rows.extend(rows)
    return table


def render(table, magnification, dims):
    """Histogram image of localization positions at `magnification`x.

    dims is the (height, width) of the source frames; each in-bounds
    localization adds one count to bin (floor(y*mag), floor(x*mag)), so the
    image total equals the number of in-bounds localizations.
    """
    if magnification < 1:
        raise ValueError(f"magnification must be >= 1, got {magnification}")
    m, n = dims
    image = np.zeros((m * magnification, n * magnification), dtype=np.float64)
    for loc in table:
        col = math.floor(loc.x * magnification)
        row = math.floor(loc.y * magnification)
        if 0 <= row < image.shape[0] and 0 <= col < image.shape[1]:
            image[row, col] += 1.0
    return image
