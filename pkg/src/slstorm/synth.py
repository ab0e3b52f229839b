"""Synthetic blinking-emitter stacks with exact ground truth.

Emitters are sub-pixel point sources rendered through a Gaussian PSF
integrated over each pixel (error-function form, so expected pixel values
are analytic). The background is a sum of wide Gaussian blobs whose
spatial pattern is fixed and whose brightness follows a slow temporal
modulation, which makes the flattened background exactly low rank by
construction: rank 1 for a single pattern, rank 2 when a second
independently modulated pattern is enabled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
from scipy.special import erf

from .core import ImageStack, STORAGE_DTYPE

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class BackgroundBlob:
    x: float
    y: float
    sigma: float
    peak: float
    pattern: int = 0     # 0 or 1; patterns are modulated independently

    def __post_init__(self):
        if self.sigma <= 0 or self.peak < 0:
            raise ValueError("blob sigma must be > 0 and peak >= 0")
        if self.pattern not in (0, 1):
            raise ValueError("pattern must be 0 or 1")


@dataclass(frozen=True)
class SynthConfig:
    height: int = 64
    width: int = 64
    n_frames: int = 300
    n_emitters: int = 50
    psf_sigma: float = 1.3
    blink_on_prob: float = 0.05
    photons_per_emitter: float = 2000.0
    background: tuple = ()
    modulation: str = "sinusoid"        # "sinusoid", "linear", or "none"
    modulation_amplitude: float = 0.3
    modulation_period: float | None = None   # frames; None: one period per stack
    read_noise_sigma: float = 0.0
    shot_noise: bool = True
    seed: int = 0

    def __post_init__(self):
        if min(self.height, self.width, self.n_frames) < 1:
            raise ValueError("dims and frame count must be >= 1")
        if self.n_emitters < 0:
            raise ValueError("n_emitters must be >= 0")
        if self.psf_sigma <= 0:
            raise ValueError("psf_sigma must be > 0")
        if not 0.0 <= self.blink_on_prob <= 1.0:
            raise ValueError("blink_on_prob must be in [0, 1]")
        if self.photons_per_emitter <= 0:
            raise ValueError("photons_per_emitter must be > 0")
        if self.modulation not in ("sinusoid", "linear", "none"):
            raise ValueError(f"unknown modulation {self.modulation!r}")
        if not 0.0 <= self.modulation_amplitude < 1.0:
            raise ValueError("modulation_amplitude must be in [0, 1)")
        if self.read_noise_sigma < 0:
            raise ValueError("read_noise_sigma must be >= 0")
        for blob in self.background:
            if not isinstance(blob, BackgroundBlob):
                raise ValueError("background must contain BackgroundBlob entries")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    positions: np.ndarray          # (n_emitters, 2) sub-pixel (x, y)
    on_states: np.ndarray          # (n_frames, n_emitters) bool
    background_stack: np.ndarray   # noiseless (T, m, n) float32
    signal_stack: np.ndarray       # noiseless (T, m, n) float32

    def active_by_frame(self):
        """{frame: (n_active, 2) array of true (x, y)} for matching."""
        out = {}
        for f in range(self.on_states.shape[0]):
            out[f] = self.positions[self.on_states[f]]
        return out


def psf_pixel_integrals(height, width, x, y, sigma):
    """Fraction of a unit-flux PSF at (x, y) falling on each pixel.

    Pixel (i, j) covers [j-0.5, j+0.5] x [i-0.5, i+0.5]; with separable
    Gaussian integrals the full frame is an outer product of two erf
    difference vectors.
    """
    edges_x = (np.arange(width + 1) - 0.5 - x) / (_SQRT2 * sigma)
    edges_y = (np.arange(height + 1) - 0.5 - y) / (_SQRT2 * sigma)
    fx = 0.5 * np.diff(erf(edges_x))
    fy = 0.5 * np.diff(erf(edges_y))
    return np.outer(fy, fx)


def _pattern_images(cfg):
    yy, xx = np.mgrid[0:cfg.height, 0:cfg.width].astype(np.float64)
    patterns = [np.zeros((cfg.height, cfg.width)), np.zeros((cfg.height, cfg.width))]
    for blob in cfg.background:
        d2 = (xx - blob.x) ** 2 + (yy - blob.y) ** 2
        patterns[blob.pattern] += blob.peak * np.exp(-d2 / (2.0 * blob.sigma ** 2))
    return patterns


def _modulation_coeffs(cfg):
    t = np.arange(cfg.n_frames, dtype=np.float64)
    amp = cfg.modulation_amplitude
    if cfg.modulation == "none" or amp == 0.0:
        return np.ones((2, cfg.n_frames))
    if cfg.modulation == "sinusoid":
        period = cfg.modulation_period or float(cfg.n_frames)
        phase = 2.0 * np.pi * t / period
        return np.stack([1.0 + amp * np.sin(phase),
                         1.0 + amp * np.sin(phase + 0.5 * np.pi)])
    # linear: pattern 0 ramps up, pattern 1 ramps down
    ramp = 2.0 * t / max(cfg.n_frames - 1, 1) - 1.0
    return np.stack([1.0 + amp * ramp, 1.0 - amp * ramp])


def generate(cfg):
    """Render a stack per the config; returns (ImageStack, GroundTruth).

    Emitter positions and blink states come from the master seed; the
    noise of frame f is drawn from a generator keyed by (seed, f), so
    frames could be rendered in any order or in parallel without changing
    the output.
    """
    master = np.random.default_rng(cfg.seed)
    if cfg.n_emitters > 0:
        positions = np.column_stack([
            master.uniform(0.0, cfg.width - 1.0, size=cfg.n_emitters),
            master.uniform(0.0, cfg.height - 1.0, size=cfg.n_emitters),
        ])
        on_states = master.random((cfg.n_frames, cfg.n_emitters)) < cfg.blink_on_prob
    else:
        positions = np.zeros((0, 2))
        on_states = np.zeros((cfg.n_frames, 0), dtype=bool)

    psfs = np.zeros((cfg.n_emitters, cfg.height, cfg.width))
    for e in range(cfg.n_emitters):
        psfs[e] = cfg.photons_per_emitter * psf_pixel_integrals(
            cfg.height, cfg.width, positions[e, 0], positions[e, 1], cfg.psf_sigma)

    patterns = _pattern_images(cfg)
    coeffs = _modulation_coeffs(cfg)
    frames = np.zeros((cfg.n_frames, cfg.height, cfg.width), dtype=STORAGE_DTYPE)
    background = np.zeros_like(frames)
    signal = np.zeros_like(frames)
    for f in range(cfg.n_frames):
        bg = coeffs[0, f] * patterns[0] + coeffs[1, f] * patterns[1]
        sig = psfs[on_states[f]].sum(axis=0) if cfg.n_emitters else np.zeros_like(bg)
        clean = bg + sig
        rng = np.random.default_rng([cfg.seed, f])
        noisy = rng.poisson(clean).astype(np.float64) if cfg.shot_noise else clean.copy()
        if cfg.read_noise_sigma > 0:
            noisy += rng.normal(0.0, cfg.read_noise_sigma, size=clean.shape)
        frames[f] = np.maximum(noisy, 0.0)
        background[f] = bg
        signal[f] = sig

    stack = ImageStack(frames)
    truth = GroundTruth(positions=positions, on_states=on_states,
                        background_stack=background, signal_stack=signal)
    return stack, truth
