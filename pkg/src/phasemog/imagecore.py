"""Complex images, wrapped phase, patch extraction/aggregation and noise estimation.

A complex image holds samples ``a * exp(j*phi) + n`` on a regular grid. The
phase of interest is only ever observed modulo 2*pi, so all phase values
produced here live in the half-open interval [-pi, pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ConsistencyError, InvalidInputError

TWO_PI = 2.0 * np.pi

CIMG_MAGIC = b"CIMG1\n"


def _as_2d(data, dtype, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=dtype)
    if arr.ndim != 2:
        raise InvalidInputError(f"{what} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{what} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what} contains non-finite samples")
    return arr


@dataclass(frozen=True)
class ComplexImage:
    """A 2-D grid of complex samples.

    ``data`` is complex128, shape (height, width), finite everywhere.
    """

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_2d(self.data, np.complex128, "complex image"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PhaseImage:
    """A 2-D grid of real phase values in radians.

    ``wrapped=True`` asserts every value lies in [-pi, pi); this is checked
    at construction time.
    """

    data: np.ndarray
    wrapped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "data", _as_2d(self.data, np.float64, "phase image"))
        if self.wrapped:
            lo, hi = self.data.min(), self.data.max()
            if lo < -np.pi or hi >= np.pi:
                raise InvalidInputError(
                    f"phase flagged wrapped but has values in [{lo}, {hi}] outside [-pi, pi)"
                )

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PatchSet:
    """All patches of one image plus their top-left anchor positions.

    ``patches`` has shape (n_patches, m) with each row a sqrt(m) x sqrt(m)
    block flattened row-major; ``positions`` has shape (n_patches, 2) holding
    (row, col) anchors.
    """

    patches: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        patches = np.asarray(self.patches, dtype=np.complex128)
        positions = np.asarray(self.positions, dtype=np.int64)
        if patches.ndim != 2 or positions.ndim != 2 or positions.shape[1] != 2:
            raise InvalidInputError("patches must be (N, m), positions (N, 2)")
        if patches.shape[0] != positions.shape[0]:
            raise InvalidInputError("patches and positions disagree on patch count")
        side = math.isqrt(patches.shape[1])
        if side * side != patches.shape[1]:
            raise InvalidInputError(f"patch length {patches.shape[1]} is not a perfect square")
        object.__setattr__(self, "patches", patches)
        object.__setattr__(self, "positions", positions)

    @property
    def n_patches(self) -> int:
        return self.patches.shape[0]

    @property
    def m(self) -> int:
        return self.patches.shape[1]

    @property
    def patch_side(self) -> int:
        return math.isqrt(self.m)


def wrap(phi):
    """Wrap phase into [-pi, pi), elementwise.

    Accepts a real scalar, an ndarray, or a PhaseImage and returns the same
    kind. Values already in [-pi, pi) pass through bit-exactly, which makes
    wrap idempotent; everything else is reduced via mod(phi + pi, 2*pi) - pi.
    """
    if isinstance(phi, PhaseImage):
        return PhaseImage(wrap(phi.data), wrapped=True)
    arr = np.asarray(phi, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("wrap requires finite input")
    in_range = (arr >= -np.pi) & (arr < np.pi)
    reduced = np.mod(arr + np.pi, TWO_PI) - np.pi
    # mod can land exactly on 2*pi - eps rounding up; fold the stray pi back
    reduced = np.where(reduced >= np.pi, -np.pi, reduced)
    out = np.where(in_range, arr, reduced)
    if np.isscalar(phi) or np.ndim(phi) == 0:
        return float(out)
    return out


def phase_of(img: ComplexImage) -> PhaseImage:
    """Principal argument of each sample, mapped into [-pi, pi).

    numpy's angle returns (-pi, pi]; the lone boundary value pi is sent to
    -pi so the result satisfies the wrapped-phase convention exactly.
    """
    ph = np.angle(img.data)
    ph[ph == np.pi] = -np.pi
    return PhaseImage(ph, wrapped=True)


def extract_patches(img: ComplexImage, m: int) -> PatchSet:
    """Extract every overlapping sqrt(m) x sqrt(m) patch (stride 1).

    The patch count is (N1 - sqrt(m) + 1) * (N2 - sqrt(m) + 1); only fully
    interior windows are taken, no padding.
    """
    side = math.isqrt(int(m))
    if side * side != m or m < 1:
        raise InvalidInputError(f"patch pixel count m={m} is not a perfect square")
    if side > min(img.height, img.width):
        raise InvalidInputError(
            f"patch side {side} exceeds image size {img.height}x{img.width}"
        )
    windows = np.lib.stride_tricks.sliding_window_view(img.data, (side, side))
    n_rows, n_cols = windows.shape[:2]
    patches = windows.reshape(n_rows * n_cols, m).copy()
    rows, cols = np.meshgrid(np.arange(n_rows), np.arange(n_cols), indexing="ij")
    positions = np.stack([rows.ravel(), cols.ravel()], axis=1)
    return PatchSet(patches, positions)


def aggregate_patches(ps: PatchSet, height: int, width: int) -> ComplexImage:
    """Average overlapping patch values back into an image.

    Each output pixel is the arithmetic mean of all patch values covering it.
    The mean is accumulated relative to a per-pixel reference value (the value
    written by the first covering patch) so that stacks of identical values
    reproduce that value exactly.
    """
    side = ps.patch_side
    pos = ps.positions
    if ps.n_patches == 0:
        raise InvalidInputError("cannot aggregate an empty patch set")
    if pos[:, 0].min() < 0 or pos[:, 1].min() < 0 or \
            pos[:, 0].max() + side > height or pos[:, 1].max() + side > width:
        raise InvalidInputError("patch positions fall outside the target image")

    ref = np.zeros((height, width), dtype=np.complex128)
    covered = np.zeros((height, width), dtype=bool)
    blocks = ps.patches.reshape(ps.n_patches, side, side)
    for i in range(ps.n_patches - 1, -1, -1):
        r, c = pos[i]
        ref[r:r + side, c:c + side] = blocks[i]
        covered[r:r + side, c:c + side] = True
    if not covered.all():
        raise ConsistencyError("aggregation left uncovered pixels")

    dev = np.zeros((height, width), dtype=np.complex128)
    count = np.zeros((height, width), dtype=np.int64)
    for i in range(ps.n_patches):
        r, c = pos[i]
        dev[r:r + side, c:c + side] += blocks[i] - ref[r:r + side, c:c + side]
        count[r:r + side, c:c + side] += 1
    return ComplexImage(ref + dev / count)


def estimate_noise_sigma(img: ComplexImage) -> float:
    """Estimate the complex noise standard deviation from first differences.

    Pools horizontal and vertical first differences d; for a smooth signal
    plus circular white noise of variance sigma^2, E|d|^2 = 2 sigma^2, so the
    estimate is sqrt(mean(|d|^2) / 2).
    """
    if img.height < 2 or img.width < 2:
        raise InvalidInputError("noise estimation needs at least a 2x2 image")
    dh = np.diff(img.data, axis=1)
    dv = np.diff(img.data, axis=0)
    pooled = np.concatenate([np.abs(dh.ravel()) ** 2, np.abs(dv.ravel()) ** 2])
    return float(np.sqrt(pooled.mean() / 2.0))


# ---------------------------------------------------------------------------
# File formats

def write_cimg(path, img: ComplexImage) -> None:
    """Write the CIMG binary format.

    Layout: magic ``CIMG1\\n``, two uint32 little-endian (height, width),
    then height*width (real, imag) float64 little-endian pairs, row-major.
    """
    interleaved = np.empty((img.height, img.width, 2), dtype="<f8")
    interleaved[..., 0] = img.data.real
    interleaved[..., 1] = img.data.imag
    with open(path, "wb") as fh:
        fh.write(CIMG_MAGIC)
        fh.write(np.array([img.height, img.width], dtype="<u4").tobytes())
        fh.write(interleaved.tobytes())


def read_cimg(path) -> ComplexImage:
    """Read a CIMG file written by :func:`write_cimg`."""
    with open(path, "rb") as fh:
        magic = fh.read(len(CIMG_MAGIC))
        if magic != CIMG_MAGIC:
            raise InvalidInputError(f"{path}: not a CIMG file (bad magic {magic!r})")
        dims = np.frombuffer(fh.read(8), dtype="<u4")
        if dims.size != 2:
            raise InvalidInputError(f"{path}: truncated CIMG header")
        height, width = int(dims[0]), int(dims[1])
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != height * width * 2:
        raise InvalidInputError(
            f"{path}: expected {height * width * 2} floats, found {raw.size}"
        )
    pairs = raw.reshape(height, width, 2)
    return ComplexImage(pairs[..., 0] + 1j * pairs[..., 1])


def write_phase_png(path, ph: PhaseImage) -> None:
    """Export phase as 8-bit grayscale, mapping [-pi, pi) linearly to [0, 255]."""
    data = ph.data if ph.wrapped else wrap(ph.data)
    levels = np.rint((data + np.pi) / TWO_PI * 255.0)
    Image.fromarray(np.clip(levels, 0, 255).astype(np.uint8), mode="L").save(path)


def write_phase_raw(path, ph: PhaseImage) -> None:
    """Write phase as a raw float64 little-endian raster plus a sidecar header.

    The sidecar at ``<path>.hdr`` is plain text key=value lines recording
    height, width, dtype, byte order and the wrapped flag.
    """
    with open(path, "wb") as fh:
        fh.write(ph.data.astype("<f8").tobytes())
    with open(f"{path}.hdr", "w") as fh:
        fh.write(f"height={ph.height}\n")
        fh.write(f"width={ph.width}\n")
        fh.write("dtype=float64\n")
        fh.write("byteorder=little\n")
        fh.write("order=row-major\n")
        fh.write(f"wrapped={int(ph.wrapped)}\n")


def read_phase_raw(path) -> PhaseImage:
    """Read a raw phase raster written by :func:`write_phase_raw`."""
    header = {}
    try:
        with open(f"{path}.hdr") as fh:
            for line in fh:
                line = line.strip()
                if line and "=" in line:
                    key, value = line.split("=", 1)
                    header[key] = value
    except OSError as exc:
        raise InvalidInputError(f"{path}: missing sidecar header: {exc}") from exc
    try:
        height = int(header["height"])
        width = int(header["width"])
        wrapped = bool(int(header.get("wrapped", "0")))
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"{path}.hdr: bad header: {exc}") from exc
    raw = np.fromfile(path, dtype="<f8")
    if raw.size != height * width:
        raise InvalidInputError(
            f"{path}: expected {height * width} float64 values, found {raw.size}"
        )
    return PhaseImage(raw.reshape(height, width), wrapped=wrapped)
