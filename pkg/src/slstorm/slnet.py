"""Two-convolution background network and its unsupervised training loop.

The network maps a window of k frames to an estimate of their slowly
varying background. Training needs no labels: the loss pushes the
singular-value-shrunk network output toward the raw frames with an
asymmetric penalty, so the residual above the estimate (the emitters)
stays sparse while overshoot is discouraged. Subtracting the estimate
and clamping at zero yields the background-free frames.

All forward/backward arithmetic is written out against plain numpy so the
gradients are auditable and finite-difference checkable; there is no
autograd framework underneath.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
import numpy as np

from .core import FlatMatrix, ImageStack, STORAGE_DTYPE, normalize
from .errors import NumericalError
from .linalg import thin_svd_small_k, _svt_from_svd

WINDOW_FRAMES = 3  # frames per decomposition window


@dataclass(eq=False)
class ConvLayer:
    """One same-padded stride-1 convolution (cross-correlation orientation).

    weights: (out_channels, in_channels, kh, kw); kernel dims must be odd
    so same-padding is symmetric.
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 4:
            raise ValueError(f"weights must be 4D, got shape {self.weights.shape}")
        if self.weights.shape[2] % 2 == 0 or self.weights.shape[3] % 2 == 0:
            raise ValueError("kernel dims must be odd for symmetric same-padding")
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError("bias must have one entry per output channel")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ValueError("layer parameters must be finite")

    @property
    def out_channels(self):
        return self.weights.shape[0]

    @property
    def in_channels(self):
        return self.weights.shape[1]

    def copy(self):
        return ConvLayer(self.weights.copy(), self.bias.copy())


@dataclass(eq=False)
class SLNetModel:
    """conv -> ReLU -> conv, mapping k input frames to k background frames."""

    layer1: ConvLayer
    layer2: ConvLayer
    n_frames_in: int
    hidden_channels: int
    kernel_size: int
    hyperparams_hash: str = ""
    epochs_trained: int = 0

    def __post_init__(self):
        if self.layer1.in_channels != self.n_frames_in or self.layer2.out_channels != self.n_frames_in:
            raise ValueError("layer channel counts inconsistent with n_frames_in")
        if self.layer1.out_channels != self.hidden_channels or self.layer2.in_channels != self.hidden_channels:
            raise ValueError("layer channel counts inconsistent with hidden_channels")

    @classmethod
    def initialize(cls, n_frames_in, hidden_channels, kernel_size, seed=0, rng=None):
        """Fresh model with Kaiming weights; deterministic given the seed."""
        rng = np.random.default_rng(seed) if rng is None else rng
        ks = int(kernel_size)
        l1 = kaiming_init((hidden_channels, n_frames_in, ks, ks), rng)
        l2 = kaiming_init((n_frames_in, hidden_channels, ks, ks), rng)
        return cls(l1, l2, n_frames_in, hidden_channels, ks)

    def copy(self):
        return replace(self, layer1=self.layer1.copy(), layer2=self.layer2.copy())

    def parameters(self):
        return [self.layer1.weights, self.layer1.bias, self.layer2.weights, self.layer2.bias]


@dataclass(frozen=True)
class Hyperparams:
    """Training configuration; defaults follow the reference setup."""

    mu: float = 0.01                # singular value shrinkage threshold
    alpha: float = 12.0             # sparse-term weight
    epochs: int = 100
    learning_rate: float = 1e-3
    triplet_offset: int = 50        # frame spacing inside a training window
    hidden_channels: int = 8
    kernel_size: int = 3
    seed: int = 0
    normalization: str = "max-scale"            # or "none"
    shrinkage_gradient: str = "straight-through"  # or "subspace"
    shrink_at_inference: bool = False

    def __post_init__(self):
        if self.mu < 0 or self.alpha < 0:
            raise ValueError("mu and alpha must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.triplet_offset < 1:
            raise ValueError("triplet_offset must be >= 1")
        if self.hidden_channels < 1:
            raise ValueError("hidden_channels must be >= 1")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd and >= 1")
        if self.normalization not in ("max-scale", "none"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.shrinkage_gradient not in ("straight-through", "subspace"):
            raise ValueError(f"unknown shrinkage_gradient {self.shrinkage_gradient!r}")

    def digest(self):
        parts = ",".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self))
        return hashlib.sha256(parts.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class EpochRecord:
    total: float
    data_term: float
    sparse_term: float
    overshoot_term: float


@dataclass(frozen=True)
class TrainReport:
    epochs: tuple            # one EpochRecord per completed epoch
    wall_seconds: float
    epochs_completed: int


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    """Paired background (low-rank) and emitter (sparse) stacks; sparse = (raw - background) clamped at 0."""

    low_rank: ImageStack
    sparse: ImageStack


@dataclass(eq=False)
class Grads:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def as_list(self):
        return [self.w1, self.b1, self.w2, self.b2]


def kaiming_init(shape, seed=0):
    """Zero-mean normal weights with variance 2/fan_in, zero bias.

    The factor 2 compensates the halving of variance across the ReLU.
    `seed` may be an int or an existing numpy Generator.
    """
    out_c, in_c, kh, kw = shape
    fan_in = in_c * kh * kw
    if fan_in <= 0:
        raise ValueError("fan_in must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
    return ConvLayer(weights, np.zeros(out_c))


def _im2col(x, kh, kw):
    """(c, H, W) -> (c*kh*kw, H*W) patch matrix with zero same-padding."""
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    c, h, w = x.shape
    return win.transpose(0, 3, 4, 1, 2).reshape(c * kh * kw, h * w)


def _conv2d_same(x, layer):
    out_c = layer.out_channels
    kh, kw = layer.weights.shape[2:]
    cols = _im2col(x, kh, kw)
    y = layer.weights.reshape(out_c, -1) @ cols + layer.bias[:, None]
    return y.reshape(out_c, x.shape[1], x.shape[2])


def _conv2d_input_grad(dout, layer):
    """Gradient w.r.t. the conv input: correlate dout with flipped kernels."""
    in_c = layer.in_channels
    kh, kw = layer.weights.shape[2:]
    wflip = layer.weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    cols = _im2col(dout, kh, kw)
    dx = wflip.reshape(in_c, -1) @ cols
    return dx.reshape(in_c, dout.shape[1], dout.shape[2])


def forward(model, window):
    """Background estimate for a (k, m, n) window; same spatial dims out."""
    x = np.asarray(window, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != model.n_frames_in:
        raise ValueError(
            f"window must be ({model.n_frames_in}, m, n), got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("window contains non-finite values")
    h = _conv2d_same(x, model.layer1)
    return _conv2d_same(np.maximum(h, 0.0), model.layer2)


def _shrink_flat(lhat_flat, mu):
    """Apply singular value shrinkage; mu = 0 is the identity (skip the SVD)."""
    if mu == 0.0:
        return lhat_flat, None
    svd = thin_svd_small_k(lhat_flat)
    return _svt_from_svd(svd, mu), svd


def _loss_pieces(m_flat, lt_flat, alpha):
    resid = m_flat - lt_flat
    t1 = float(np.abs(resid).mean())
    t2 = float(alpha * np.maximum(resid, 0.0).mean())
    t3 = float(np.maximum(-resid, 0.0).mean())
    return resid, t1, t2, t3


def loss(m, l_hat, mu, alpha):
    """Training loss for one window: (total, (data, sparse, overshoot)).

    With lt the shrunk estimate, s = (m - lt) clamped at 0 and
    r = (m - lt) clamped above 0:
      data      = mean |m - lt|
      sparse    = alpha * mean(s)
      overshoot = mean |r|
    The identity data = sparse/alpha + overshoot holds whenever alpha > 0
    (|x| splits into positive and negative parts).
    """
    if mu < 0 or alpha < 0:
        raise ValueError("mu and alpha must be >= 0")
    m_flat = np.asarray(m.data if isinstance(m, FlatMatrix) else m, dtype=np.float64)
    l_flat = np.asarray(l_hat.data if isinstance(l_hat, FlatMatrix) else l_hat, dtype=np.float64)
    if m_flat.shape != l_flat.shape:
        raise ValueError(f"shape mismatch: {m_flat.shape} vs {l_flat.shape}")
    lt, _ = _shrink_flat(l_flat, float(mu))
    _, t1, t2, t3 = _loss_pieces(m_flat, lt, alpha)
    return t1 + t2 + t3, (t1, t2, t3)


def _loss_grad_wrt_estimate(resid, alpha):
    """d(total)/d(lt): subgradients at exact kinks are taken as 0."""
    n_el = resid.size
    return (-np.sign(resid) - alpha * (resid > 0.0) + (resid < 0.0)) / n_el


def _forward_cached(model, x):
    kh, kw = model.layer1.weights.shape[2:]
    cols1 = _im2col(x, kh, kw)
    h = (model.layer1.weights.reshape(model.hidden_channels, -1) @ cols1
         + model.layer1.bias[:, None]).reshape(model.hidden_channels, x.shape[1], x.shape[2])
    a = np.maximum(h, 0.0)
    cols2 = _im2col(a, kh, kw)
    y = (model.layer2.weights.reshape(model.n_frames_in, -1) @ cols2
         + model.layer2.bias[:, None]).reshape(x.shape)
    return y, (cols1, h, a, cols2)


def _loss_and_grads(model, window, hp):
    x = np.asarray(window, dtype=np.float64)
    k, m, n = x.shape
    y, (cols1, h, a, cols2) = _forward_cached(model, x)
    lhat_flat = y.reshape(k, m * n)
    m_flat = x.reshape(k, m * n)
    lt, svd = _shrink_flat(lhat_flat, hp.mu)
    resid, t1, t2, t3 = _loss_pieces(m_flat, lt, hp.alpha)
    g = _loss_grad_wrt_estimate(resid, hp.alpha)
    if hp.mu > 0.0 and hp.shrinkage_gradient == "subspace":
        keep = svd.sigma > hp.mu
        if keep.any():
            u_r = svd.u[:, keep]
            vt_r = svd.vt[keep]
            g = u_r @ ((u_r.T @ g) @ vt_r.T) @ vt_r
        else:
            g = np.zeros_like(g)
    dy = g.reshape(k, m, n)
    dout2 = dy.reshape(k, m * n)
    db2 = dout2.sum(axis=1)
    dw2 = (dout2 @ cols2.T).reshape(model.layer2.weights.shape)
    da = _conv2d_input_grad(dy, model.layer2)
    dh = da * (h > 0.0)
    dout1 = dh.reshape(model.hidden_channels, m * n)
    db1 = dout1.sum(axis=1)
    dw1 = (dout1 @ cols1.T).reshape(model.layer1.weights.shape)
    total = t1 + t2 + t3
    return total, (t1, t2, t3), Grads(dw1, db1, dw2, db2)


def backward(model, window, hp):
    """Gradient of the training loss w.r.t. every weight and bias.

    Shrinkage is differentiated per hp.shrinkage_gradient: the default
    straight-through policy treats it as the identity (its fixed point is
    unchanged, only the path differs); the subspace policy projects the
    gradient onto the singular directions the shrinkage retained.
    """
    _, _, grads = _loss_and_grads(model, window, hp)
    return grads


class _Adam:
    """Standard Adam with bias correction; operates on arrays in place."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def triplet_starts(n_frames, delta):
    """Valid window start indices t such that (t, t+delta, t+2*delta) fits."""
    return np.arange(max(n_frames - 2 * delta, 0))


def train(stack, hp=None):
    """Unsupervised training over all frame triplets of the stack.

    Each epoch walks every valid window start in a freshly shuffled
    (seeded) order, taking one optimizer step per window. Deterministic:
    identical (stack, hyperparams) gives bit-identical weights.

    Returns (model, report). Raises NumericalError if the loss leaves the
    finite range, ValueError if no triplet fits the stack.
    """
    hp = hp or Hyperparams()
    n = stack.n_frames
    delta = hp.triplet_offset
    starts = triplet_starts(n, delta)
    if starts.size == 0:
        raise ValueError(
            f"stack of {n} frames admits no (t, t+{delta}, t+{2 * delta}) window; "
            f"need at least {2 * delta + 1} frames")
    norm_stack, _ = normalize(stack, hp.normalization)
    data = norm_stack.frames.astype(np.float64)
    rng = np.random.default_rng(hp.seed)
    model = SLNetModel.initialize(WINDOW_FRAMES, hp.hidden_channels, hp.kernel_size, rng=rng)
    model.hyperparams_hash = hp.digest()
    opt = _Adam(model.parameters(), hp.learning_rate)
    records = []
    t0 = time.perf_counter()
    for epoch in range(hp.epochs):
        order = rng.permutation(starts)
        sums = np.zeros(4)
        for t in order:
            window = data[(t, t + delta, t + 2 * delta), :, :]
            total, terms, grads = _loss_and_grads(model, window, hp)
            if not np.isfinite(total):
                raise NumericalError(
                    f"training diverged at epoch {epoch}, window start {t}: loss={total}")
            opt.step(model.parameters(), grads.as_list())
            sums += (total, *terms)
        sums /= starts.size
        records.append(EpochRecord(*sums))
        model.epochs_trained = epoch + 1
    wall = time.perf_counter() - t0
    return model, TrainReport(tuple(records), wall, len(records))


def _frame_assignments(n_frames, delta):
    """One (window index triple, slot) per frame.

    Frames with their own full window ahead of them read slot 0; the tail
    2*delta frames read slots 1 and 2 of the last full windows. When the
    stack is shorter than 3*delta some tail frames fit no full window; they
    fall back to a window anchored at the frame itself with the two context
    indices clamped to the final frame.
    """
    n_windows = n_frames - 2 * delta
    out = []
    for j in range(n_frames):
        if j < n_windows:
            t = j
            slot = 0
        elif 0 <= j - delta < n_windows:
            t = j - delta
            slot = 1
        elif 0 <= j - 2 * delta < n_windows:
            t = j - 2 * delta
            slot = 2
        else:
            out.append(((j, min(j + delta, n_frames - 1), min(j + 2 * delta, n_frames - 1)), 0))
            continue
        out.append(((t, t + delta, t + 2 * delta), slot))
    return out


def decompose(model, stack, hp=None, threads=1):
    """Split a stack into background and emitter parts using a trained model.

    The input is rescaled by its own global maximum when hp.normalization
    is max-scale (matching how training data was presented), the network
    output is clamped at zero and mapped back to raw units, and the sparse
    part is (raw - background) clamped at zero. Each frame receives exactly
    one prediction; windows are independent, so `threads` only affects wall
    time, never the output.
    """
    hp = hp or Hyperparams()
    n = stack.n_frames
    delta = hp.triplet_offset
    if n < 2 * delta + 1:
        raise ValueError(
            f"stack of {n} frames admits no (t, t+{delta}, t+{2 * delta}) window; "
            f"need at least {2 * delta + 1} frames")
    raw = stack.frames.astype(np.float64)
    scale = float(raw.max()) if hp.normalization == "max-scale" else 1.0
    if scale <= 0.0:
        scale = 1.0  # all-zero stack: nothing to rescale
    data = raw / scale
    assignments = _frame_assignments(n, delta)
    windows = sorted({idx for idx, _ in assignments})

    def run_window(idx):
        lhat = forward(model, data[list(idx)])
        if hp.shrink_at_inference and hp.mu > 0.0:
            k, m, w = lhat.shape
            shrunk, _ = _shrink_flat(lhat.reshape(k, m * w), hp.mu)
            lhat = shrunk.reshape(k, m, w)
        return np.maximum(lhat, 0.0)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(windows, pool.map(run_window, windows)))
    else:
        results = {idx: run_window(idx) for idx in windows}
    low = np.empty_like(raw)
    for j, (idx, slot) in enumerate(assignments):
        low[j] = results[idx][slot] * scale
    low32 = low.astype(STORAGE_DTYPE)
    sparse32 = np.maximum(stack.frames - low32, 0.0).astype(STORAGE_DTYPE)
    return DecompositionResult(
        low_rank=stack.with_frames(low32),
        sparse=stack.with_frames(sparse32),
    )
