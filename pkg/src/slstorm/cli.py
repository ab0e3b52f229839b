"""Command-line pipeline: stack synthesis, network training, decomposition,
baseline subtraction, localization, rendering, metrics, sweeps, and timing.

Every run writes its outputs atomically and emits a JSON manifest holding
the resolved parameters, paths, and per-stage wall times, sufficient to
reproduce the run. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import time
import numpy as np

from . import __version__
from . import io as fileio
from .baselines import RollingBallConfig, median_subtract, rolling_ball_stack
from .core import ImageStack, flatten
from .errors import (ConfigError, CsvFormatError, NumericalError, TiffError,
                     WeightsFileError)
from .localize import localize_stack, render
from .metrics import (fwhm_profile, localization_error_from_active,
                      profile_through, sparsity, squirrel_scores)
from .rpca import RpcaConfig, rpca_ialm
from .slnet import Hyperparams, SLNetModel, decompose, train
from .synth import BackgroundBlob, SynthConfig, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _jsonable(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return str(value)


def _write_manifest(args, inputs, outputs, timings):
    params = {k: _jsonable(v) for k, v in vars(args).items()
              if k not in ("func", "command", "manifest")}
    manifest = {
        "tool": "slstorm",
        "version": __version__,
        "subcommand": args.command,
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
        "finished_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = args.manifest or (str(outputs[0]) + ".manifest.json" if outputs
                             else f"slstorm-{args.command}.manifest.json")
    fileio._atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


class _Timer:
    def __init__(self):
        self.stages = {}

    def stage(self, name):
        timer = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.stages[name] = timer.stages.get(name, 0.0) + time.perf_counter() - self.t0

        return _Stage()


def _parse_blob(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (4, 5):
        raise UsageError(f"--background expects 'x,y,sigma,peak[,pattern]', got {text!r}")
    try:
        x, y, sigma, peak = (float(v) for v in parts[:4])
        pattern = int(parts[4]) if len(parts) == 5 else 0
    except ValueError:
        raise UsageError(f"--background expects numbers, got {text!r}") from None
    return BackgroundBlob(x=x, y=y, sigma=sigma, peak=peak, pattern=pattern)


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated number list, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from None


def _load_stack(path, n_frames=0):
    stack = fileio.read_tiff(path)
    if n_frames and n_frames < stack.n_frames:
        return ImageStack(stack.frames[:n_frames], bit_depth=stack.bit_depth,
                          pixel_size_nm=stack.pixel_size_nm)
    return stack


def _hyperparams_from(args):
    return Hyperparams(
        mu=args.mu, alpha=args.alpha, epochs=args.epochs, learning_rate=args.lr,
        triplet_offset=args.delta, hidden_channels=args.hidden,
        kernel_size=args.kernel_size, seed=args.seed,
        normalization=args.normalization,
        shrink_at_inference=getattr(args, "shrink_at_inference", False),
    )


def _auto_threshold(stack, factor):
    vals = stack.frames
    med = float(np.median(vals))
    high = float(np.percentile(vals, 99.9))
    return med + factor * (high - med)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args):
    timer = _Timer()
    cfg = SynthConfig(
        height=args.height, width=args.width, n_frames=args.frames,
        n_emitters=args.emitters, psf_sigma=args.psf_sigma,
        blink_on_prob=args.blink_prob, photons_per_emitter=args.photons,
        background=tuple(args.background or ()), modulation=args.modulation,
        modulation_amplitude=args.mod_amplitude, modulation_period=args.mod_period,
        read_noise_sigma=args.read_noise, shot_noise=not args.no_shot_noise,
        seed=args.seed,
    )
    with timer.stage("generate"):
        stack, truth = generate(cfg)
    outputs = [args.out]
    with timer.stage("write"):
        fileio.write_tiff(stack, args.out, bit_depth=args.bit_depth)
        if args.truth_out:
            fileio.write_truth_csv(truth, args.truth_out)
            outputs.append(args.truth_out)
    _write_manifest(args, [], outputs, timer.stages)
    return EXIT_OK


def cmd_train(args):
    timer = _Timer()
    with timer.stage("load"):
        stack = _load_stack(args.input, args.frames)
    hp = _hyperparams_from(args)
    with timer.stage("train"):
        model, report = train(stack, hp)
    outputs = [args.out_model]
    with timer.stage("write"):
        fileio.save_model(model, args.out_model)
        if args.report:
            lines = ["epoch,total,data_term,sparse_term,overshoot_term"]
            for i, rec in enumerate(report.epochs):
                lines.append(f"{i},{rec.total:.9g},{rec.data_term:.9g},"
                             f"{rec.sparse_term:.9g},{rec.overshoot_term:.9g}")
            fileio._atomic_write_text(args.report, "\n".join(lines) + "\n")
            outputs.append(args.report)
    timer.stages["train_wall"] = report.wall_seconds
    _write_manifest(args, [args.input], outputs, timer.stages)
    return EXIT_OK


def _decompose_rpca(stack, window, cfg):
    """Tile the stack into disjoint frame windows and solve each by RPCA."""
    n = stack.n_frames
    low = np.zeros_like(stack.frames, dtype=np.float64)
    sparse = np.zeros_like(low)
    for start in range(0, n, window):
        stop = min(start + window, n)
        sub = ImageStack(stack.frames[start:stop], bit_depth=stack.bit_depth,
                         pixel_size_nm=stack.pixel_size_nm)
        result = rpca_ialm(flatten(sub), cfg)
        k, m, w = sub.shape
        low[start:stop] = result.L.data.reshape(k, m, w)
        sparse[start:stop] = result.S.data.reshape(k, m, w)
    low_stack = stack.with_frames(np.maximum(low, 0.0))
    sparse_stack = stack.with_frames(np.maximum(sparse, 0.0))
    return low_stack, sparse_stack


def cmd_decompose(args):
    timer = _Timer()
    with timer.stage("load"):
        stack = _load_stack(args.input, args.frames)
    if args.backend == "slnet":
        if not args.model:
            raise UsageError("--backend slnet requires --model")
        with timer.stage("load"):
            model = fileio.load_model(args.model)
        hp = Hyperparams(mu=args.mu, triplet_offset=args.delta,
                         normalization=args.normalization,
                         shrink_at_inference=args.shrink_at_inference)
        with timer.stage("decompose"):
            result = decompose(model, stack, hp, threads=args.threads)
        low_stack, sparse_stack = result.low_rank, result.sparse
    else:
        cfg = RpcaConfig(tol=args.rpca_tol, max_iter=args.rpca_max_iter)
        with timer.stage("decompose"):
            low_stack, sparse_stack = _decompose_rpca(stack, args.rpca_window, cfg)
    outputs = []
    with timer.stage("write"):
        if args.out_sparse:
            fileio.write_tiff(sparse_stack, args.out_sparse, bit_depth=args.bit_depth)
            outputs.append(args.out_sparse)
        if args.out_lowrank:
            fileio.write_tiff(low_stack, args.out_lowrank, bit_depth=args.bit_depth)
            outputs.append(args.out_lowrank)
    inputs = [args.input] + ([args.model] if args.model else [])
    _write_manifest(args, inputs, outputs, timer.stages)
    return EXIT_OK


def cmd_baseline(args):
    timer = _Timer()
    with timer.stage("load"):
        stack = _load_stack(args.input, args.frames)
    with timer.stage("subtract"):
        if args.method == "median":
            out = median_subtract(stack)
        else:
            cfg = RollingBallConfig(radius=args.radius, smoothing=args.smoothing)
            out = rolling_ball_stack(stack, cfg, threads=args.threads)
    with timer.stage("write"):
        fileio.write_tiff(out, args.out, bit_depth=args.bit_depth)
    _write_manifest(args, [args.input], [args.out], timer.stages)
    return EXIT_OK


def cmd_localize(args):
    timer = _Timer()
    with timer.stage("load"):
        stack = _load_stack(args.input, args.frames)
    threshold = args.threshold
    if threshold is None:
        threshold = _auto_threshold(stack, args.auto_threshold)
    args.threshold = threshold  # manifest records the resolved value
    with timer.stage("localize"):
        table = localize_stack(stack, threshold, min_separation=args.min_separation,
                               roi_radius=args.roi_radius,
                               pixel_size_nm=args.pixel_size, threads=args.threads)
    with timer.stage("write"):
        fileio.write_locs_csv(table, args.out)
    _write_manifest(args, [args.input], [args.out], timer.stages)
    print(f"localized {len(table)} emitters at threshold {threshold:.6g}")
    return EXIT_OK


def cmd_render(args):
    timer = _Timer()
    with timer.stage("load"):
        table = fileio.read_locs_csv(args.locs, pixel_size_nm=args.pixel_size)
    with timer.stage("render"):
        image = render(table, args.mag, (args.height, args.width))
    with timer.stage("write"):
        fileio.write_tiff(ImageStack(image[None]), args.out, bit_depth=args.bit_depth)
    _write_manifest(args, [args.locs], [args.out], timer.stages)
    return EXIT_OK


def cmd_metrics(args):
    timer = _Timer()
    rows = []
    if args.kind == "sparsity":
        stack = _load_stack(args.input)
        value = sparsity(stack, eps=args.eps)
        rows = [("sparsity_percent", f"{value:.6g}")]
        print(f"sparsity_percent,{value:.6g}")
    elif args.kind == "squirrel":
        recon = fileio.read_tiff(args.recon).frames[0]
        widefield = fileio.read_tiff(args.widefield).frames[0]
        scores = squirrel_scores(recon, widefield, args.blur_sigma)
        rows = [("rsp", f"{scores.rsp:.9g}"), ("rse", f"{scores.rse:.9g}")]
        print(f"rsp,{scores.rsp:.6g}")
        print(f"rse,{scores.rse:.6g}")
    elif args.kind == "loc-error":
        table = fileio.read_locs_csv(args.locs, pixel_size_nm=args.pixel_size)
        active = fileio.read_truth_csv(args.truth)
        res = localization_error_from_active(table, active, args.radius)
        rows = [("rmse_px", f"{res.rmse:.9g}"), ("recall", f"{res.recall:.9g}"),
                ("precision", f"{res.precision:.9g}"),
                ("precision_defined", str(res.precision_defined).lower())]
        print(f"rmse_px,{res.rmse:.6g}")
        print(f"recall,{res.recall:.6g}")
        print(f"precision,{res.precision:.6g}")
    else:  # fwhm
        stack = _load_stack(args.input)
        table = fileio.read_locs_csv(args.locs, pixel_size_nm=args.pixel_size)
        values = []
        for loc in table:
            if loc.frame >= stack.n_frames:
                continue
            try:
                profile = profile_through(stack.frames[loc.frame], loc.x, loc.y,
                                          half_width=args.half_width)
                values.append(fwhm_profile(profile, spacing=1.0).fwhm)
            except (ValueError, NumericalError):
                continue
        mean = float(np.mean(values)) if values else float("nan")
        rows = [("fwhm_mean_px", f"{mean:.9g}"), ("fwhm_count", str(len(values)))]
        print(f"fwhm_mean_px,{mean:.6g}")
        print(f"fwhm_count,{len(values)}")
    outputs = []
    if args.out:
        lines = ["metric,value"] + [f"{k},{v}" for k, v in rows]
        fileio._atomic_write_text(args.out, "\n".join(lines) + "\n")
        outputs = [args.out]
    _write_manifest(args, [], outputs, timer.stages)
    return EXIT_OK


def cmd_sweep(args):
    timer = _Timer()
    with timer.stage("load"):
        stack = _load_stack(args.input)
    train_stack = _load_stack(args.input, args.train_frames) if args.train_frames else stack
    lines = ["alpha,mu,seed,sparsity_percent,final_loss,wall_s"]
    with timer.stage("sweep"):
        for alpha in args.alphas:
            for mu in args.mus:
                for seed in args.seeds:
                    hp = Hyperparams(mu=mu, alpha=alpha, epochs=args.epochs,
                                     triplet_offset=args.delta, seed=seed,
                                     hidden_channels=args.hidden,
                                     normalization=args.normalization)
                    t0 = time.perf_counter()
                    model, report = train(train_stack, hp)
                    result = decompose(model, stack, hp, threads=args.threads)
                    wall = time.perf_counter() - t0
                    spars = sparsity(result.sparse)
                    final = report.epochs[-1].total if report.epochs else float("nan")
                    lines.append(f"{alpha:.6g},{mu:.6g},{seed},{spars:.6g},"
                                 f"{final:.9g},{wall:.3f}")
    with timer.stage("write"):
        fileio._atomic_write_text(args.out, "\n".join(lines) + "\n")
    _write_manifest(args, [args.input], [args.out], timer.stages)
    return EXIT_OK


def cmd_bench(args):
    timer = _Timer()
    with timer.stage("load"):
        stack = _load_stack(args.input, args.frames)
    n = stack.n_frames
    lines = ["method,frames,wall_s,frames_per_s"]

    def record(name, fn):
        t0 = time.perf_counter()
        fn()
        wall = time.perf_counter() - t0
        lines.append(f"{name},{n},{wall:.4f},{n / wall if wall > 0 else float('inf'):.2f}")

    with timer.stage("bench"):
        record("median", lambda: median_subtract(stack))
        for radius in args.radii:
            cfg = RollingBallConfig(radius=radius)
            record(f"rollingball_r{radius}",
                   lambda cfg=cfg: rolling_ball_stack(stack, cfg, threads=args.threads))
        if args.model:
            model = fileio.load_model(args.model)
            hp = Hyperparams(triplet_offset=args.delta)
            record("slnet", lambda: decompose(model, stack, hp, threads=args.threads))
        if args.with_rpca:
            cfg = RpcaConfig()
            record("rpca", lambda: _decompose_rpca(stack, args.rpca_window, cfg))
    with timer.stage("write"):
        fileio._atomic_write_text(args.out, "\n".join(lines) + "\n")
    _write_manifest(args, [args.input], [args.out], timer.stages)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", help="key=value file supplying flag defaults")
    sub.add_argument("--manifest", help="manifest path (default: first output + .manifest.json)")


def build_parser():
    parser = _Parser(prog="slstorm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"slstorm {__version__}")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    by_name = {}

    p = subs.add_parser("synth", help="generate a synthetic stack with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--truth-out")
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--frames", type=int, default=300)
    p.add_argument("--emitters", type=int, default=50)
    p.add_argument("--psf-sigma", type=float, default=1.3)
    p.add_argument("--blink-prob", type=float, default=0.05)
    p.add_argument("--photons", type=float, default=2000.0)
    p.add_argument("--background", action="append", type=_parse_blob,
                   metavar="X,Y,SIGMA,PEAK[,PATTERN]")
    p.add_argument("--modulation", choices=["sinusoid", "linear", "none"], default="sinusoid")
    p.add_argument("--mod-amplitude", type=float, default=0.3)
    p.add_argument("--mod-period", type=float, default=None)
    p.add_argument("--read-noise", type=float, default=0.0)
    p.add_argument("--no-shot-noise", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bit-depth", type=int, choices=[8, 16], default=16)
    _add_common(p)
    p.set_defaults(func=cmd_synth)
    by_name["synth"] = p

    p = subs.add_parser("train", help="train the background network on a stack")
    p.add_argument("--input", required=True)
    p.add_argument("--frames", type=int, default=0, help="train on the first N frames (0 = all)")
    p.add_argument("--mu", type=float, default=0.01)
    p.add_argument("--alpha", type=float, default=12.0)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--delta", type=int, default=50)
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--kernel-size", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalization", choices=["max-scale", "none"], default="max-scale")
    p.add_argument("--out-model", required=True)
    p.add_argument("--report", help="per-epoch loss CSV")
    _add_common(p)
    p.set_defaults(func=cmd_train)
    by_name["train"] = p

    p = subs.add_parser("decompose", help="split a stack into background and emitters")
    p.add_argument("--input", required=True)
    p.add_argument("--frames", type=int, default=0)
    p.add_argument("--backend", choices=["slnet", "rpca"], default="slnet")
    p.add_argument("--model")
    p.add_argument("--out-sparse")
    p.add_argument("--out-lowrank")
    p.add_argument("--mu", type=float, default=0.01)
    p.add_argument("--delta", type=int, default=50)
    p.add_argument("--normalization", choices=["max-scale", "none"], default="max-scale")
    p.add_argument("--shrink-at-inference", action="store_true")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--rpca-window", type=int, default=16)
    p.add_argument("--rpca-tol", type=float, default=1e-7)
    p.add_argument("--rpca-max-iter", type=int, default=500)
    p.add_argument("--bit-depth", type=int, choices=[8, 16], default=16)
    _add_common(p)
    p.set_defaults(func=cmd_decompose)
    by_name["decompose"] = p

    p = subs.add_parser("baseline", help="median or rolling-ball background removal")
    p.add_argument("--input", required=True)
    p.add_argument("--frames", type=int, default=0)
    p.add_argument("--method", choices=["median", "rollingball"], required=True)
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--smoothing", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--bit-depth", type=int, choices=[8, 16], default=16)
    _add_common(p)
    p.set_defaults(func=cmd_baseline)
    by_name["baseline"] = p

    p = subs.add_parser("localize", help="detect and fit emitters")
    p.add_argument("--input", required=True)
    p.add_argument("--frames", type=int, default=0)
    p.add_argument("--threshold", type=float, default=None,
                   help="absolute detection threshold (default: auto)")
    p.add_argument("--auto-threshold", type=float, default=0.5,
                   help="auto threshold factor: median + f*(p99.9 - median)")
    p.add_argument("--min-separation", type=float, default=3.0)
    p.add_argument("--roi-radius", type=int, default=5)
    p.add_argument("--pixel-size", type=float, default=100.0)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    _add_common(p)
    p.set_defaults(func=cmd_localize)
    by_name["localize"] = p

    p = subs.add_parser("render", help="histogram rendering of a localization CSV")
    p.add_argument("--locs", required=True)
    p.add_argument("--mag", type=int, default=8)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--pixel-size", type=float, default=100.0)
    p.add_argument("--out", required=True)
    p.add_argument("--bit-depth", type=int, choices=[8, 16], default=16)
    _add_common(p)
    p.set_defaults(func=cmd_render)
    by_name["render"] = p

    p = subs.add_parser("metrics", help="sparsity / squirrel / loc-error / fwhm")
    p.add_argument("--kind", choices=["sparsity", "squirrel", "loc-error", "fwhm"],
                   required=True)
    p.add_argument("--input")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--recon")
    p.add_argument("--widefield")
    p.add_argument("--blur-sigma", type=float, default=4.0)
    p.add_argument("--locs")
    p.add_argument("--truth")
    p.add_argument("--radius", type=float, default=1.5)
    p.add_argument("--half-width", type=int, default=5)
    p.add_argument("--pixel-size", type=float, default=100.0)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_metrics)
    by_name["metrics"] = p

    p = subs.add_parser("sweep", help="train/decompose over alpha, mu, seed grids")
    p.add_argument("--input", required=True)
    p.add_argument("--alphas", type=_float_list, default=[12.0])
    p.add_argument("--mus", type=_float_list, default=[0.01])
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--delta", type=int, default=50)
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--train-frames", type=int, default=0)
    p.add_argument("--normalization", choices=["max-scale", "none"], default="max-scale")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)
    by_name["sweep"] = p

    p = subs.add_parser("bench", help="per-frame throughput of each method")
    p.add_argument("--input", required=True)
    p.add_argument("--frames", type=int, default=0)
    p.add_argument("--model", help="weights file; enables the slnet row")
    p.add_argument("--delta", type=int, default=50)
    p.add_argument("--radii", type=_int_list, default=[3, 10])
    p.add_argument("--with-rpca", action="store_true")
    p.add_argument("--rpca-window", type=int, default=16)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_bench)
    by_name["bench"] = p

    return parser, by_name


def _apply_config_defaults(sub, argv):
    """Load --config and install its values as typed defaults; explicit
    flags still win because they are parsed afterwards."""
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return
    values = fileio.read_config(argv[idx + 1])
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    for key, raw in values.items():
        if key not in actions or key in ("help", "config"):
            raise ConfigError(f"unknown config key {key!r}")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                value = action.type(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from None
        else:
            value = raw
        sub.set_defaults(**{key: value})


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, by_name = build_parser()
    try:
        if argv and argv[0] in by_name and "--config" in argv:
            _apply_config_defaults(by_name[argv[0]], argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TiffError, CsvFormatError, WeightsFileError, ConfigError, OSError,
            ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
