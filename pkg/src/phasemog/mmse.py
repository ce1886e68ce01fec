"""Posterior-mean patch estimation under the clean-mixture prior.

For a single component the posterior mean of the clean patch given the noisy
one is the Wiener filter Sigma (Sigma + sigma^2 I)^{-1} z; under the mixture
prior the estimate is the convex combination of the per-component filters,
weighted by the posterior probability that each component generated z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidInputError, NumericalError
from .imagecore import PatchSet
from .mog import LOG_PI, CleanMixture


@dataclass(frozen=True)
class WienerBank:
    """Per-component filters and factorizations, shared across all patches.

    ``filters[k]`` is Sigma_k (Sigma_k + var I)^{-1}; ``whiteners[k]`` maps z
    to coordinates in which Sigma_k + var I is the identity, giving both the
    quadratic form and (with ``log_dets``) the component log densities.
    """

    filters: np.ndarray
    whiteners: np.ndarray
    log_dets: np.ndarray
    sigma_noise: float


def build_wiener_bank(cm: CleanMixture) -> WienerBank:
    """Precompute the K Wiener filters from one eigendecomposition each.

    With Sigma_k = U diag(s) U^H the filter is U diag(s / (s + sigma^2)) U^H;
    its singular values therefore lie in [0, 1]. Requires sigma > 0 or every
    component strictly positive definite.
    """
    var = cm.sigma_noise ** 2
    n_comp, m = cm.n_components, cm.m
    filters = np.empty((n_comp, m, m), dtype=np.complex128)
    whiteners = np.empty((n_comp, m, m), dtype=np.complex128)
    log_dets = np.empty(n_comp)
    for k in range(n_comp):
        try:
            evals, vecs = np.linalg.eigh(cm.sigmas[k])
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"component {k}: eigendecomposition failed: {exc}") from exc
        evals = np.maximum(evals, 0.0)
        noisy = evals + var
        if noisy.min() <= 0.0:
            raise InvalidInputError(
                "Wiener bank needs sigma > 0 or strictly positive-definite covariances"
            )
        gains = evals / noisy
        filt = (vecs * gains) @ vecs.conj().T
        filt = 0.5 * (filt + filt.conj().T)
        np.fill_diagonal(filt, filt.diagonal().real)
        filters[k] = filt
        whiteners[k] = (vecs / np.sqrt(noisy)).conj().T
        log_dets[k] = float(np.log(noisy).sum())
    return WienerBank(filters=filters, whiteners=whiteners, log_dets=log_dets,
                      sigma_noise=cm.sigma_noise)


def _posterior_weights(z: np.ndarray, cm: CleanMixture, bank: WienerBank) -> np.ndarray:
    """Posterior component weights w_k(z) for rows of z, shape (N, K)."""
    n, m = z.shape
    logw = np.empty((n, cm.n_components))
    zt = z.T
    for k in range(cm.n_components):
        whitened = bank.whiteners[k] @ zt
        quad = np.abs(whitened)
        np.square(quad, out=quad)
        logw[:, k] = -m * LOG_PI - bank.log_dets[k] - quad.sum(axis=0)
    logw += np.log(cm.alphas)[None, :]
    norm = logsumexp(logw, axis=1)
    if not np.all(np.isfinite(norm)):
        raise NumericalError("all component densities vanished for some patch")
    return np.exp(logw - norm[:, None])


def _estimate_rows(z: np.ndarray, cm: CleanMixture, bank: WienerBank) -> np.ndarray:
    weights = _posterior_weights(z, cm, bank)
    out = np.zeros_like(z)
    for k in range(cm.n_components):
        out += weights[:, k, None] * (z @ bank.filters[k].T)
    return out


def mmse_estimate(z: np.ndarray, cm: CleanMixture, bank: WienerBank | None = None) -> np.ndarray:
    """Posterior mean of the clean patch given one noisy patch vector z."""
    z = np.asarray(z, dtype=np.complex128).ravel()
    if z.size != cm.m:
        raise InvalidInputError(f"patch length {z.size} != mixture dimension {cm.m}")
    if bank is None:
        bank = build_wiener_bank(cm)
    return _estimate_rows(z[None, :], cm, bank)[0]


def denoise_patchset(ps: PatchSet, cm: CleanMixture,
                     bank: WienerBank | None = None) -> PatchSet:
    """Apply the posterior-mean estimator to every patch; positions carry over."""
    if ps.m != cm.m:
        raise InvalidInputError(f"patch length {ps.m} != mixture dimension {cm.m}")
    if bank is None:
        bank = build_wiener_bank(cm)
    return PatchSet(_estimate_rows(ps.patches, cm, bank), ps.positions.copy())
