"""Wrapped-phase image denoising with complex Gaussian mixture priors.

The package models overlapping patches of a complex interferogram with a
zero-mean circularly-symmetric complex Gaussian mixture, estimates each clean
patch as its posterior mean, refines the estimates by similarity-weighted
averaging over a spatial neighborhood, and aggregates the patches back into
an image. A synthetic surface simulator and the standard wrapped/unwrapped
phase quality metrics are included.
"""

__version__ = "0.1.0"

from .errors import (ConsistencyError, InvalidInputError, NumericalError,
                     PhasemogError)
from .imagecore import (ComplexImage, PatchSet, PhaseImage, aggregate_patches,
                        estimate_noise_sigma, extract_patches, phase_of,
                        read_cimg, read_phase_raw, wrap, write_cimg,
                        write_phase_png, write_phase_raw)
from .metrics import MetricReport, format_report, nelp_psnr_a, psnr
from .mmse import WienerBank, build_wiener_bank, denoise_patchset, mmse_estimate
from .mog import (CleanMixture, ComponentResetWarning, EmOptions, NoisyMixture,
                  circular_gaussian_logpdf, correct_covariances, em_fit,
                  load_mixture, responsibilities, save_mixture)
from .nlavg import NlOptions, nl_average
from .pipeline import (DenoiseConfig, DenoiseResult, default_bandwidth,
                       denoise_image, train)
from .simulate import (SURFACE_KINDS, ObservationSpec, SurfaceSpec,
                       amplitude_image, generate_surface, observe)

__all__ = [
    "ComplexImage", "PhaseImage", "PatchSet", "wrap", "phase_of",
    "extract_patches", "aggregate_patches", "estimate_noise_sigma",
    "read_cimg", "write_cimg", "read_phase_raw", "write_phase_raw",
    "write_phase_png",
    "NoisyMixture", "CleanMixture", "EmOptions", "ComponentResetWarning",
    "circular_gaussian_logpdf", "em_fit", "responsibilities",
    "correct_covariances", "save_mixture", "load_mixture",
    "WienerBank", "build_wiener_bank", "mmse_estimate", "denoise_patchset",
    "NlOptions", "nl_average",
    "SurfaceSpec", "ObservationSpec", "SURFACE_KINDS", "generate_surface",
    "observe", "amplitude_image",
    "MetricReport", "psnr", "nelp_psnr_a", "format_report",
    "DenoiseConfig", "DenoiseResult", "denoise_image", "train",
    "default_bandwidth",
    "PhasemogError", "InvalidInputError", "NumericalError", "ConsistencyError",
]
