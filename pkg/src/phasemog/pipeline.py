"""End-to-end denoising: patches -> (train) -> posterior mean -> NL average -> image.

Two operating modes mirror the two ways the prior can be obtained: training
a mixture on clean reference images once and reusing it (pre-learned), or
fitting the mixture to the noisy input itself (self-learned). In both modes
the noise level used by the Wiener filters, the posterior weights and the
non-local bandwidth is the one resolved for the image being denoised.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError
from .imagecore import (ComplexImage, PatchSet, PhaseImage, aggregate_patches,
                        estimate_noise_sigma, extract_patches, phase_of)
from .mmse import build_wiener_bank, denoise_patchset
from .mog import CleanMixture, EmOptions, correct_covariances, em_fit
from .nlavg import NlOptions, nl_average

# keeps the NL kernel finite when the noise estimate degenerates to zero
_MIN_BANDWIDTH = 1e-6


@dataclass(frozen=True)
class DenoiseConfig:
    """Settings for one denoising run.

    ``sigma=None`` estimates the noise from the input's first differences.
    ``model=None`` selects self-learned mode (fit ``components`` mixture
    components to the input's own patches); otherwise the given clean mixture
    is used as the prior and ``components`` is ignored.
    """

    patch_pixels: int = 100
    components: int = 15
    sigma: float | None = None
    nl_bandwidth: float | None = None
    nl_window: int = 11
    em: EmOptions = EmOptions()
    model: CleanMixture | None = None

    def __post_init__(self):
        if self.sigma is not None and not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidInputError(f"sigma must be >= 0, got {self.sigma!r}")
        if self.components < 1:
            raise InvalidInputError("components must be positive")


@dataclass(frozen=True)
class DenoiseResult:
    """Final wrapped phase plus the intermediate single-stage estimate."""

    phase: PhaseImage
    complex_image: ComplexImage
    sigma: float
    mmse_phase: PhaseImage
    mmse_complex: ComplexImage


def train(images: list[ComplexImage], n_components: int,
          em: EmOptions = EmOptions(), sigma: float | None = None,
          patch_pixels: int = 100) -> CleanMixture:
    """Learn a clean mixture from the pooled patches of several images.

    ``sigma`` is the common noise level of the training images (0 for clean
    references); ``None`` estimates it per image and pools by root mean
    square. The fitted covariances have the noise spectrum removed before
    they are returned.
    """
    if not images:
        raise InvalidInputError("need at least one training image")
    sets = [extract_patches(img, patch_pixels) for img in images]
    pooled = PatchSet(
        np.concatenate([s.patches for s in sets], axis=0),
        np.concatenate([s.positions for s in sets], axis=0),
    )
    if sigma is None:
        per_image = [estimate_noise_sigma(img) for img in images]
        sigma = float(np.sqrt(np.mean(np.square(per_image))))
    mixture, _ = em_fit(pooled, n_components, em)
    return correct_covariances(mixture, sigma)


def default_bandwidth(sigma: float) -> float:
    """NL kernel bandwidth: 0.48 * sigma, floored away from zero."""
    return max(0.48 * sigma, _MIN_BANDWIDTH)


def denoise_image(img: ComplexImage, cfg: DenoiseConfig = DenoiseConfig()) -> DenoiseResult:
    """Run the full two-stage denoiser on one complex image.

    Stage one computes per-patch posterior means under the mixture prior;
    stage two averages each estimated patch with similar neighbors. The
    averaged patches are aggregated back into an image whose principal
    argument is the wrapped-phase estimate.
    """
    ps = extract_patches(img, cfg.patch_pixels)

    if cfg.sigma is not None:
        sigma = float(cfg.sigma)
    else:
        sigma = estimate_noise_sigma(img)
        if sigma == 0.0:
            warnings.warn("noise estimate is 0; NL bandwidth floored", RuntimeWarning)

    if cfg.model is not None:
        if cfg.model.m != cfg.patch_pixels:
            raise InvalidInputError(
                f"model dimension {cfg.model.m} != patch pixels {cfg.patch_pixels}"
            )
        prior = replace(cfg.model, sigma_noise=sigma)
    else:
        mixture, _ = em_fit(ps, cfg.components, cfg.em)
        prior = correct_covariances(mixture, sigma)

    bank = build_wiener_bank(prior)
    mmse_ps = denoise_patchset(ps, prior, bank)

    h = cfg.nl_bandwidth if cfg.nl_bandwidth is not None else default_bandwidth(sigma)
    averaged = nl_average(mmse_ps, NlOptions(h=h, window_side=cfg.nl_window))

    final_img = aggregate_patches(averaged, img.height, img.width)
    mmse_img = aggregate_patches(mmse_ps, img.height, img.width)
    return DenoiseResult(
        phase=phase_of(final_img),
        complex_image=final_img,
        sigma=sigma,
        mmse_phase=phase_of(mmse_img),
        mmse_complex=mmse_img,
    )
