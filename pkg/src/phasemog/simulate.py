"""Synthetic absolute-phase surfaces and the noisy observation model.

The five surface families cover the qualitative range used to benchmark
wrapped-phase denoisers: a smooth peak, oscillatory fringes, an oscillatory
surface with a step discontinuity, rough smooth terrain, and piecewise-planar
ramps with a shear jump. The observation model is z = a*exp(j*phi) + n with
circular white complex Gaussian noise of variance sigma^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .imagecore import ComplexImage, PhaseImage

SURFACE_KINDS = (
    "truncated_gaussian",
    "sinusoidal",
    "discontinuous_sinusoidal",
    "mountains",
    "shear_planes",
)


@dataclass(frozen=True)
class SurfaceSpec:
    kind: str
    height: int = 100
    width: int = 100
    amplitude_scale: float = 14.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SURFACE_KINDS:
            raise InvalidInputError(
                f"unknown surface kind {self.kind!r}; choose from {SURFACE_KINDS}"
            )
        if self.height < 1 or self.width < 1:
            raise InvalidInputError("surface dimensions must be positive")
        if not (np.isfinite(self.amplitude_scale) and self.amplitude_scale > 0):
            raise InvalidInputError("amplitude_scale must be positive")


@dataclass(frozen=True)
class ObservationSpec:
    """Noise level, RNG seed and amplitude model for synthesizing observations.

    ``amplitude`` is None for the constant-1 amplitude, or a SurfaceSpec whose
    surface is min-max rescaled to [0.2, 1.0] and used as the amplitude image.
    """

    sigma: float
    seed: int = 0
    amplitude: SurfaceSpec | None = None

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidInputError(f"sigma must be >= 0, got {self.sigma!r}")


def _grid(height: int, width: int):
    return np.meshgrid(np.arange(height, dtype=np.float64),
                       np.arange(width, dtype=np.float64), indexing="ij")


def _truncated_gaussian(spec: SurfaceSpec) -> np.ndarray:
    rows, cols = _grid(spec.height, spec.width)
    center_r, center_c = spec.height // 2, spec.width // 2
    spread = min(spec.height, spec.width) / 5.0
    dist2 = (rows - center_r) ** 2 + (cols - center_c) ** 2
    peak = spec.amplitude_scale * np.exp(-dist2 / (2.0 * spread * spread))
    return np.maximum(peak, spec.amplitude_scale * math.exp(-2.0))


def _sinusoidal(spec: SurfaceSpec) -> np.ndarray:
    rows, cols = _grid(spec.height, spec.width)
    periods = 3.0
    return (spec.amplitude_scale / 2.0) * \
        np.sin(2.0 * np.pi * periods * rows / spec.height) * \
        np.sin(2.0 * np.pi * periods * cols / spec.width)


def _discontinuous_sinusoidal(spec: SurfaceSpec) -> np.ndarray:
    surface = _sinusoidal(spec)
    step = spec.amplitude_scale / 3.0
    surface[:, spec.width // 2:] += step
    return surface


def _mountains(spec: SurfaceSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    rows, cols = _grid(spec.height, spec.width)
    scale = min(spec.height, spec.width)
    surface = np.zeros((spec.height, spec.width))
    for _ in range(6):
        center_r = rng.uniform(0, spec.height)
        center_c = rng.uniform(0, spec.width)
        spread = rng.uniform(0.10, 0.25) * scale
        height = rng.uniform(0.3, 1.0)
        dist2 = (rows - center_r) ** 2 + (cols - center_c) ** 2
        surface += height * np.exp(-dist2 / (2.0 * spread * spread))
    return surface * (spec.amplitude_scale / surface.max())


def _shear_planes(spec: SurfaceSpec) -> np.ndarray:
    rows, cols = _grid(spec.height, spec.width)
    row_slope = 0.2 * spec.amplitude_scale / spec.height
    col_slope = spec.amplitude_scale / spec.width
    mid = spec.width // 2
    left = row_slope * rows + col_slope * cols
    offset = spec.amplitude_scale / 2.0 + 2.0 * col_slope * mid
    right = row_slope * rows - col_slope * cols + offset
    return np.where(cols < mid, left, right)


_GENERATORS = {
    "truncated_gaussian": _truncated_gaussian,
    "sinusoidal": _sinusoidal,
    "discontinuous_sinusoidal": _discontinuous_sinusoidal,
    "mountains": _mountains,
    "shear_planes": _shear_planes,
}


def generate_surface(spec: SurfaceSpec) -> PhaseImage:
    """Deterministic absolute (unwrapped) phase surface for the given spec."""
    return PhaseImage(_GENERATORS[spec.kind](spec), wrapped=False)


def amplitude_image(spec: ObservationSpec, height: int, width: int) -> np.ndarray:
    """Amplitude raster for the observation: constant 1 or a rescaled surface."""
    if spec.amplitude is None:
        return np.ones((height, width))
    surf = generate_surface(spec.amplitude).data
    if surf.shape != (height, width):
        raise InvalidInputError(
            f"amplitude surface {surf.shape} does not match phase {height}x{width}"
        )
    span = surf.max() - surf.min()
    if span == 0:
        return np.ones((height, width))
    return 0.2 + 0.8 * (surf - surf.min()) / span


def observe(phase: PhaseImage, spec: ObservationSpec) -> ComplexImage:
    """Synthesize z = a*exp(j*phi) + n with circular white noise, reproducibly.

    The noise splits sigma^2 evenly between the real and imaginary parts, so
    its pseudo-variance E[n^2] is zero and its variance E|n|^2 is sigma^2.
    """
    amp = amplitude_image(spec, phase.height, phase.width)
    clean = amp * np.exp(1j * phase.data)
    if spec.sigma == 0:
        return ComplexImage(clean)
    rng = np.random.default_rng(spec.seed)
    parts = rng.standard_normal((phase.height, phase.width, 2))
    noise = (spec.sigma / math.sqrt(2.0)) * (parts[..., 0] + 1j * parts[..., 1])
    return ComplexImage(clean + noise)


def write_manifest(path, entries: dict) -> None:
    """Write a dataset manifest as plain-text key=value lines."""
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={value}\n")
