"""Evaluation metrics: sparsity, FWHM, widefield agreement scores, and
localization accuracy against synthetic ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np
from scipy.ndimage import gaussian_filter

from .core import ImageStack
from .errors import NumericalError
from ._fitting import levenberg

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class FwhmResult:
    fwhm: float
    amplitude: float
    center: float
    sigma: float
    offset: float
    residual_norm: float


@dataclass(frozen=True)
class SquirrelScores:
    rsp: float
    rse: float
    scale: float
    offset: float


@dataclass(frozen=True)
class LocalizationErrorResult:
    rmse: float
    recall: float
    precision: float
    n_matched: int
    n_true: int
    n_detected: int
    precision_defined: bool = True


def sparsity(data, eps=0.0):
    """Percentage of elements that are exactly zero.

    `eps` widens "zero" to |x| <= eps for pipelines that accumulate float
    error; the default is the literal count.
    """
    a = data.frames if isinstance(data, ImageStack) else np.asarray(data)
    if a.size == 0:
        raise ValueError("empty input")
    zeros = (np.abs(a) <= eps).sum() if eps > 0 else (a == 0).sum()
    return 100.0 * float(zeros) / a.size


def _gauss1d_residual(values, grid):
    def rj(p):
        amp, c, sig, off = p
        d = grid - c
        e = np.exp(-d * d / (2.0 * sig * sig))
        r = amp * e + off - values
        jac = np.empty((values.size, 4))
        jac[:, 0] = e
        jac[:, 1] = amp * e * d / (sig * sig)
        jac[:, 2] = amp * e * d * d / (sig ** 3)
        jac[:, 3] = 1.0
        return r, jac

    return rj


def fwhm_profile(profile, spacing=1.0):
    """FWHM of a 1D intensity profile from a Gaussian + offset fit.

    Center, sigma and fwhm come out in `spacing` units
    (fwhm = 2*sqrt(2*ln 2) * sigma).
    """
    v = np.asarray(profile, dtype=np.float64)
    if v.ndim != 1 or v.size < 5:
        raise ValueError("profile must be 1D with at least 5 samples")
    if v.max() == v.min():
        raise ValueError("constant profile")
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    grid = np.arange(v.size, dtype=np.float64)
    off0 = float(v.min())
    w = v - off0
    c0 = float((w * grid).sum() / w.sum())
    var = float((w * (grid - c0) ** 2).sum() / w.sum())
    sig0 = min(max(math.sqrt(max(var, 0.25)), 0.5), v.size / 2.0)
    p0 = [float(v.max() - off0), c0, sig0, off0]
    p, cost, ok = levenberg(_gauss1d_residual(v, grid), p0)
    amp, c, sig, off = p
    sig = abs(sig)
    if not ok or not np.isfinite(p).all() or sig == 0.0:
        raise NumericalError("profile fit did not converge")
    return FwhmResult(
        fwhm=FWHM_PER_SIGMA * sig * spacing,
        amplitude=float(amp),
        center=float(c * spacing),
        sigma=float(sig * spacing),
        offset=float(off),
        residual_norm=math.sqrt(cost),
    )


def profile_through(frame, x, y, half_width=5):
    """Horizontal intensity profile through (x, y), cropped in bounds."""
    f = np.asarray(frame, dtype=np.float64)
    row = int(round(y))
    col = int(round(x))
    if not (0 <= row < f.shape[0]):
        raise ValueError(f"row {row} outside frame")
    lo = max(col - half_width, 0)
    hi = min(col + half_width + 1, f.shape[1])
    return f[row, lo:hi]


def block_downscale(image, factor_y, factor_x):
    """Block-average an image down by integer factors."""
    m, n = image.shape
    if m % factor_y or n % factor_x:
        raise ValueError(f"image shape {image.shape} is not a multiple of "
                         f"({factor_y}, {factor_x})")
    return image.reshape(m // factor_y, factor_y, n // factor_x, factor_x).mean(axis=(1, 3))


def squirrel_scores(reconstruction, widefield, blur_sigma):
    """Agreement of a super-resolved image with a widefield reference.

    The reconstruction is Gaussian-blurred, block-averaged down to the
    widefield grid, and affinely matched (closed-form scale and offset
    minimizing the squared error); rsp is the Pearson correlation of the
    matched image with the widefield and rse its RMSE.
    """
    recon = np.asarray(reconstruction, dtype=np.float64)
    wf = np.asarray(widefield, dtype=np.float64)
    if blur_sigma <= 0:
        raise ValueError("blur_sigma must be > 0")
    if recon.shape[0] % wf.shape[0] or recon.shape[1] % wf.shape[1]:
        raise ValueError(f"reconstruction dims {recon.shape} must be integer "
                         f"multiples of widefield dims {wf.shape}")
    blurred = gaussian_filter(recon, blur_sigma)
    down = block_downscale(blurred, recon.shape[0] // wf.shape[0],
                           recon.shape[1] // wf.shape[1])
    d = down.ravel()
    w = wf.ravel()
    var_d = d.var()
    if var_d == 0.0 or w.var() == 0.0:
        raise ValueError("zero-variance input")
    a = float(np.cov(d, w, bias=True)[0, 1] / var_d)
    b = float(w.mean() - a * d.mean())
    matched = a * d + b
    resid = matched - w
    rse = math.sqrt(float((resid * resid).mean()))
    mstd = matched.std()
    rsp = 0.0 if mstd == 0.0 else float(((matched - matched.mean()) * (w - w.mean())).mean()
                                        / (mstd * w.std()))
    return SquirrelScores(rsp=rsp, rse=rse, scale=a, offset=b)


def _greedy_match(detections, truths, match_radius):
    """One-to-one nearest matching in ascending distance order."""
    if len(detections) == 0 or len(truths) == 0:
        return []
    det = np.asarray(detections, dtype=np.float64)
    tru = np.asarray(truths, dtype=np.float64)
    diff = det[:, None, :] - tru[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    cand = np.argwhere(dist <= match_radius)
    order = np.argsort(dist[cand[:, 0], cand[:, 1]], kind="stable")
    used_d = set()
    used_t = set()
    pairs = []
    for di, ti in cand[order]:
        if di in used_d or ti in used_t:
            continue
        used_d.add(int(di))
        used_t.add(int(ti))
        pairs.append((int(di), int(ti), float(dist[di, ti])))
    return pairs


def localization_error_from_active(table, active_by_frame, match_radius):
    """Match detections to per-frame true positions; see localization_error."""
    if match_radius <= 0:
        raise ValueError("match_radius must be > 0")
    by_frame = {}
    for loc in table:
        by_frame.setdefault(loc.frame, []).append((loc.x, loc.y))
    n_true = sum(len(v) for v in active_by_frame.values())
    n_detected = sum(len(v) for v in by_frame.values())
    sq_sum = 0.0
    n_matched = 0
    for f, truths in active_by_frame.items():
        pairs = _greedy_match(by_frame.get(f, []), truths, match_radius)
        n_matched += len(pairs)
        sq_sum += sum(d * d for _, _, d in pairs)
    rmse = math.sqrt(sq_sum / n_matched) if n_matched else math.nan
    recall = n_matched / n_true if n_true else 0.0
    if n_detected == 0:
        return LocalizationErrorResult(rmse, recall, 0.0, n_matched, n_true, 0,
                                       precision_defined=False)
    return LocalizationErrorResult(rmse, recall, n_matched / n_detected,
                                   n_matched, n_true, n_detected)


def localization_error(table, truth, match_radius):
    """Greedy nearest-neighbor accuracy of a table against ground truth.

    Matching is per frame, one-to-one, closest pairs first. rmse covers
    matched pairs; recall = matched / true active emitter-frames;
    precision = matched / detections (0 with precision_defined=False when
    the table is empty).
    """
    return localization_error_from_active(table, truth.active_by_frame(), match_radius)
