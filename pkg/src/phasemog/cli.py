"""Command-line interface.

Subcommands:
  simulate   generate a synthetic surface and its noisy observation
  train      learn a mixture model from CIMG images and write a .cmog file
  denoise    denoise one CIMG image (pre-learned model or self-learned)
  eval       score an estimate against the ground truth and write a report
  noise-est  print the noise level estimated from an image

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.
All randomized behavior is governed solely by the --seed arguments.

``eval`` writes the report as key=value lines and prints the same record as
a single JSON line on stdout, so a sequence of eval runs forms a JSONL
stream. With --figures DIR it also renders the estimate, truth and error
maps as PNG figures next to the report.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .errors import InvalidInputError, NumericalError, PhasemogError
from .imagecore import (ComplexImage, PhaseImage, estimate_noise_sigma, phase_of,
                        read_cimg, read_phase_raw, wrap, write_cimg,
                        write_phase_png, write_phase_raw)
from .metrics import MetricReport, format_report, nelp_psnr_a, psnr, report_record
from .mog import EmOptions, load_mixture, save_mixture
from .pipeline import DenoiseConfig, denoise_image, train
from .simulate import (SURFACE_KINDS, ObservationSpec, SurfaceSpec,
                       generate_surface, observe, write_manifest)


def _sigma_arg(text: str):
    if text == "auto":
        return None
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"sigma must be a number or 'auto': {text!r}") from exc
    return value


def _bandwidth_arg(text: str):
    if text == "auto":
        return None
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bandwidth must be a number or 'auto': {text!r}") from exc
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasemog",
                                     description="wrapped-phase image denoising")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic noisy phase image")
    p_sim.add_argument("--kind", required=True, choices=SURFACE_KINDS)
    p_sim.add_argument("--size", nargs=2, type=int, default=(100, 100),
                       metavar=("H", "W"))
    p_sim.add_argument("--sigma", type=float, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--amplitude-scale", type=float, default=14.0)
    p_sim.add_argument("--amplitude", choices=("constant", "mountains"),
                       default="constant")
    p_sim.add_argument("--out-truth", required=True,
                       help="raw float64 raster (+ .hdr sidecar) of the absolute phase")
    p_sim.add_argument("--out-noisy", required=True, help="CIMG observation file")
    p_sim.add_argument("--manifest", default=None,
                       help="optional key=value manifest file")

    p_train = sub.add_parser("train", help="learn a mixture prior from CIMG images")
    p_train.add_argument("--inputs", nargs="+", required=True)
    p_train.add_argument("--components", type=int, required=True)
    p_train.add_argument("--sigma", type=_sigma_arg, default=0.0,
                         help="noise level of the training images, or 'auto' (default 0)")
    p_train.add_argument("--patch-side", type=int, default=10)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--max-iters", type=int, default=100)
    p_train.add_argument("--rel-tol", type=float, default=1e-5)
    p_train.add_argument("--out-model", required=True)

    p_den = sub.add_parser("denoise", help="denoise one CIMG image")
    p_den.add_argument("--input", required=True)
    source = p_den.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", help="pre-learned .cmog model file")
    source.add_argument("--self-learn", action="store_true",
                        help="fit the mixture to the noisy input itself")
    p_den.add_argument("--components", type=int, default=15)
    p_den.add_argument("--sigma", type=_sigma_arg, default=None,
                       help="noise level or 'auto' (default auto)")
    p_den.add_argument("--patch-side", type=int, default=10)
    p_den.add_argument("--nl-h", type=_bandwidth_arg, default=None,
                       help="NL bandwidth or 'auto' for 0.48*sigma (default auto)")
    p_den.add_argument("--nl-window", type=int, default=11)
    p_den.add_argument("--seed", type=int, default=0)
    p_den.add_argument("--max-iters", type=int, default=100)
    p_den.add_argument("--rel-tol", type=float, default=1e-5)
    p_den.add_argument("--out-phase", default=None,
                       help="wrapped phase as raw float64 raster (+ .hdr)")
    p_den.add_argument("--out-complex", default=None, help="denoised CIMG file")
    p_den.add_argument("--export-png", default=None,
                       help="8-bit grayscale export of the wrapped phase")

    p_eval = sub.add_parser("eval", help="score an estimate against the truth")
    p_eval.add_argument("--est", required=True,
                        help="wrapped-phase estimate (raw raster + .hdr)")
    p_eval.add_argument("--truth", required=True,
                        help="absolute-phase truth (raw raster + .hdr)")
    p_eval.add_argument("--est-unwrapped", default=None,
                        help="optional externally unwrapped estimate for nelp/psnr_a")
    p_eval.add_argument("--report", required=True, help="key=value report file")
    p_eval.add_argument("--figures", default=None,
                        help="directory for estimate/truth/error PNG figures")

    p_noise = sub.add_parser("noise-est", help="estimate the noise level of an image")
    p_noise.add_argument("--input", required=True)

    return parser


def _cmd_simulate(args) -> int:
    surface = SurfaceSpec(kind=args.kind, height=args.size[0], width=args.size[1],
                          amplitude_scale=args.amplitude_scale, seed=args.seed)
    truth = generate_surface(surface)
    amp = None
    if args.amplitude == "mountains":
        amp = SurfaceSpec(kind="mountains", height=args.size[0], width=args.size[1],
                          amplitude_scale=args.amplitude_scale, seed=args.seed)
    noisy = observe(truth, ObservationSpec(sigma=args.sigma, seed=args.seed, amplitude=amp))
    write_phase_raw(args.out_truth, truth)
    write_cimg(args.out_noisy, noisy)
    if args.manifest:
        write_manifest(args.manifest, {
            "kind": args.kind,
            "height": args.size[0],
            "width": args.size[1],
            "sigma": args.sigma,
            "seed": args.seed,
            "amplitude": args.amplitude,
            "amplitude_scale": args.amplitude_scale,
            "truth": args.out_truth,
            "noisy": args.out_noisy,
        })
    return 0


def _cmd_train(args) -> int:
    images = [read_cimg(path) for path in args.inputs]
    em = EmOptions(max_iters=args.max_iters, rel_tol=args.rel_tol, seed=args.seed)
    model = train(images, args.components, em=em, sigma=args.sigma,
                  patch_pixels=args.patch_side ** 2)
    save_mixture(args.out_model, model)
    return 0


def _cmd_denoise(args) -> int:
    img = read_cimg(args.input)
    model = load_mixture(args.model) if args.model else None
    em = EmOptions(max_iters=args.max_iters, rel_tol=args.rel_tol, seed=args.seed)
    cfg = DenoiseConfig(patch_pixels=args.patch_side ** 2, components=args.components,
                        sigma=args.sigma, nl_bandwidth=args.nl_h,
                        nl_window=args.nl_window, em=em, model=model)
    result = denoise_image(img, cfg)
    if args.out_phase:
        write_phase_raw(args.out_phase, result.phase)
    if args.out_complex:
        write_cimg(args.out_complex, result.complex_image)
    if args.export_png:
        write_phase_png(args.export_png, result.phase)
    print(f"sigma={result.sigma!r}")
    return 0


def _cmd_eval(args) -> int:
    est = read_phase_raw(args.est)
    truth = read_phase_raw(args.truth)
    if not est.wrapped:
        est = wrap(est)
    psnr_db = psnr(est, truth)
    nelp = psnr_a = None
    if args.est_unwrapped:
        est_unwrapped = read_phase_raw(args.est_unwrapped)
        nelp, psnr_a = nelp_psnr_a(est_unwrapped, truth)
    report = MetricReport(psnr_db=psnr_db, n_pixels=truth.data.size,
                          nelp=nelp, psnr_a_db=psnr_a)
    with open(args.report, "w") as fh:
        fh.write(format_report(report))
    if args.figures:
        from .figures import save_report_figures

        truth_wrapped = wrap(truth)
        error = np.abs(wrap(est.data - truth.data))
        save_report_figures(args.figures, est.data, truth_wrapped.data, error)
    print(json.dumps(report_record(report), sort_keys=True))
    return 0


def _cmd_noise_est(args) -> int:
    sigma = estimate_noise_sigma(read_cimg(args.input))
    print(f"sigma={sigma!r}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "train": _cmd_train,
    "denoise": _cmd_denoise,
    "eval": _cmd_eval,
    "noise-est": _cmd_noise_est,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, PhasemogError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
