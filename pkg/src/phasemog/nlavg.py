"""Neighborhood-restricted non-local averaging of denoised patches.

Each patch is replaced by a weighted average of the patches whose anchors lie
in a square window around its own anchor. Kernel values decay exponentially
in the squared Frobenius distance between (already denoised) patches, and the
weights are normalized to sum to one so the output is a true average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .imagecore import PatchSet


@dataclass(frozen=True)
class NlOptions:
    """Bandwidth h (signal units) and odd window width in anchor coordinates."""

    h: float
    window_side: int = 11

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise InvalidInputError(f"bandwidth h must be positive, got {self.h!r}")
        if self.window_side < 1 or self.window_side % 2 == 0:
            raise InvalidInputError(f"window_side must be odd and >= 1, got {self.window_side}")


def _is_full_grid(positions: np.ndarray) -> tuple[bool, int, int]:
    rows = positions[:, 0]
    cols = positions[:, 1]
    if rows.min() != 0 or cols.min() != 0:
        return False, 0, 0
    n_rows = int(rows.max()) + 1
    n_cols = int(cols.max()) + 1
    if n_rows * n_cols != positions.shape[0]:
        return False, 0, 0
    expected_rows = np.repeat(np.arange(n_rows), n_cols)
    expected_cols = np.tile(np.arange(n_cols), n_rows)
    ok = np.array_equal(rows, expected_rows) and np.array_equal(cols, expected_cols)
    return ok, n_rows, n_cols


def _average_grid(patches: np.ndarray, n_rows: int, n_cols: int, radius: int,
                  inv_h2: float) -> np.ndarray:
    m = patches.shape[1]
    x = patches.reshape(n_rows, n_cols, m)
    # accumulate kernel-weighted deviations from the center patch; the self
    # term contributes 0 to the numerator and exactly 1 to the denominator,
    # so identical neighborhoods reproduce the input bit for bit
    num = np.zeros_like(x)
    den = np.ones((n_rows, n_cols))
    for d_row in range(-radius, radius + 1):
        for d_col in range(-radius, radius + 1):
            if d_row == 0 and d_col == 0:
                continue
            r0 = max(0, -d_row)
            r1 = n_rows - max(0, d_row)
            c0 = max(0, -d_col)
            c1 = n_cols - max(0, d_col)
            if r0 >= r1 or c0 >= c1:
                continue
            center = x[r0:r1, c0:c1]
            shifted = x[r0 + d_row:r1 + d_row, c0 + d_col:c1 + d_col]
            delta = shifted - center
            dist2 = np.abs(delta)
            np.square(dist2, out=dist2)
            kernel = np.exp(-dist2.sum(axis=2) * inv_h2)
            num[r0:r1, c0:c1] += kernel[..., None] * delta
            den[r0:r1, c0:c1] += kernel
    return (x + num / den[..., None]).reshape(-1, m)


def _average_scattered(patches: np.ndarray, positions: np.ndarray, radius: int,
                       inv_h2: float) -> np.ndarray:
    index = {(int(r), int(c)): i for i, (r, c) in enumerate(positions)}
    out = patches.copy()
    for i, (row, col) in enumerate(positions):
        neighbors = [
            index[(row + dr, col + dc)]
            for dr in range(-radius, radius + 1)
            for dc in range(-radius, radius + 1)
            if (dr or dc) and (row + dr, col + dc) in index
        ]
        if not neighbors:
            continue
        delta = patches[neighbors] - patches[i]
        dist2 = (np.abs(delta) ** 2).sum(axis=1)
        kernel = np.exp(-dist2 * inv_h2)
        out[i] = patches[i] + (kernel[:, None] * delta).sum(axis=0) / (1.0 + kernel.sum())
    return out


def nl_average(ps: PatchSet, opts: NlOptions) -> PatchSet:
    """Average each patch with its spatial neighbors, weighted by similarity.

    The neighborhood of patch i is every patch whose anchor falls in the
    ``window_side`` x ``window_side`` square centered on i's anchor (clipped
    at the borders); the patch itself always participates with kernel value 1.
    """
    if ps.n_patches == 0:
        raise InvalidInputError("cannot average an empty patch set")
    radius = (opts.window_side - 1) // 2
    if radius == 0:
        return PatchSet(ps.patches.copy(), ps.positions.copy())
    inv_h2 = 1.0 / (opts.h * opts.h)
    is_grid, n_rows, n_cols = _is_full_grid(ps.positions)
    if is_grid:
        averaged = _average_grid(ps.patches, n_rows, n_cols, radius, inv_h2)
    else:
        averaged = _average_scattered(ps.patches, ps.positions, radius, inv_h2)
    return PatchSet(averaged, ps.positions.copy())
