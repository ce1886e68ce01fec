"""Zero-mean circularly-symmetric complex Gaussian mixtures.

The mixture density over complex patch vectors z is

    p(z) = sum_k alpha_k * N(z; Gamma_k),
    N(z; S) = exp(-z^H S^{-1} z) / (pi^m det S),

with Hermitian positive-definite covariances. Circular symmetry (invariance
under a common phase rotation of all pixels) forces zero mean and zero
pseudo-covariance, so the covariances are the only shape parameters.

``em_fit`` learns {alpha_k, Gamma_k} from noisy patches; ``correct_covariances``
subtracts the noise floor sigma^2 from the spectrum of each Gamma_k to obtain
the clean-signal covariances used as the estimation prior.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import blas, lapack
from scipy.special import logsumexp

from .errors import InvalidInputError, NumericalError
from .imagecore import PatchSet

LOG_PI = math.log(math.pi)

CMOG_MAGIC = b"CMOG1\n"

# responsibilities mass below this fraction of N_p marks a dead component
_COLLAPSE_FRACTION = 1e-12


class ComponentResetWarning(RuntimeWarning):
    """A mixture component collapsed during EM and was reinitialized."""


def _check_hermitian(mats: np.ndarray, tol: float, what: str) -> None:
    dev = np.abs(mats - np.conj(np.swapaxes(mats, -1, -2))).max()
    scale = max(1.0, float(np.abs(mats).max()))
    if dev > tol * scale:
        raise InvalidInputError(f"{what}: matrix deviates from Hermitian by {dev:g}")


def _check_alphas(alphas: np.ndarray) -> None:
    if alphas.ndim != 1 or alphas.size < 1:
        raise InvalidInputError("mixing weights must be a non-empty vector")
    if np.any(alphas < 0) or not np.all(np.isfinite(alphas)):
        raise InvalidInputError("mixing weights must be finite and nonnegative")
    if abs(alphas.sum() - 1.0) > 1e-10:
        raise InvalidInputError(f"mixing weights sum to {alphas.sum()!r}, not 1")


@dataclass(frozen=True)
class NoisyMixture:
    """Mixture learned from noisy patches: weights and covariances Gamma_k."""

    alphas: np.ndarray
    gammas: np.ndarray

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=np.float64)
        gammas = np.asarray(self.gammas, dtype=np.complex128)
        _check_alphas(alphas)
        if gammas.ndim != 3 or gammas.shape[1] != gammas.shape[2]:
            raise InvalidInputError("covariances must have shape (K, m, m)")
        if gammas.shape[0] != alphas.size:
            raise InvalidInputError("weights and covariances disagree on K")
        _check_hermitian(gammas, 1e-10, "noisy mixture")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "gammas", gammas)

    @property
    def n_components(self) -> int:
        return self.alphas.size

    @property
    def m(self) -> int:
        return self.gammas.shape[1]


@dataclass(frozen=True)
class CleanMixture:
    """Noise-corrected mixture: the MMSE prior {alpha_k, Sigma_k} plus sigma."""

    alphas: np.ndarray
    sigmas: np.ndarray
    sigma_noise: float

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=np.float64)
        sigmas = np.asarray(self.sigmas, dtype=np.complex128)
        _check_alphas(alphas)
        if sigmas.ndim != 3 or sigmas.shape[1] != sigmas.shape[2]:
            raise InvalidInputError("covariances must have shape (K, m, m)")
        if sigmas.shape[0] != alphas.size:
            raise InvalidInputError("weights and covariances disagree on K")
        _check_hermitian(sigmas, 1e-10, "clean mixture")
        if not (np.isfinite(self.sigma_noise) and self.sigma_noise >= 0):
            raise InvalidInputError(f"sigma_noise must be >= 0, got {self.sigma_noise!r}")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "sigma_noise", float(self.sigma_noise))

    @property
    def n_components(self) -> int:
        return self.alphas.size

    @property
    def m(self) -> int:
        return self.sigmas.shape[1]


@dataclass(frozen=True)
class EmOptions:
    """Controls for the EM fit.

    ``reg_eps`` sets the covariance eigenvalue floor as a fraction of the
    mean diagonal of the pooled data second moment; ``rel_tol`` is the
    relative log-likelihood change that stops the iteration.
    """

    max_iters: int = 100
    rel_tol: float = 1e-5
    reg_eps: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be positive")
        if not 0 < self.rel_tol < 1:
            raise InvalidInputError("rel_tol must lie in (0, 1)")
        if not self.reg_eps > 0:
            raise InvalidInputError("reg_eps must be positive")


def circular_gaussian_logpdf(x: np.ndarray, sigma: np.ndarray) -> float:
    """Log density of a circularly-symmetric complex Gaussian at x.

    Returns -m*ln(pi) - ln det(sigma) - x^H sigma^{-1} x. The quadratic form
    is evaluated through a Cholesky factor, so its value is real by
    construction.
    """
    x = np.asarray(x, dtype=np.complex128).ravel()
    sigma = np.asarray(sigma, dtype=np.complex128)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] != x.size:
        raise InvalidInputError(
            f"covariance shape {sigma.shape} does not match vector length {x.size}"
        )
    dev = np.abs(sigma - sigma.conj().T).max()
    if dev > 1e-8 * max(1.0, float(np.abs(sigma).max())):
        raise NumericalError(f"covariance deviates from Hermitian by {dev:g}")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"covariance is not positive definite: {exc}") from exc
    logdet = 2.0 * float(np.log(np.diagonal(chol).real).sum())
    y = np.linalg.solve(chol, x)
    quad = float(np.real(np.vdot(y, y)))
    return -x.size * LOG_PI - logdet - quad


def _fill_herk(upper: np.ndarray) -> np.ndarray:
    """Complete a BLAS herk upper triangle into a full Hermitian matrix."""
    full = upper + np.triu(upper, 1).conj().T
    np.fill_diagonal(full, full.diagonal().real)
    return full


def _weighted_second_moment(z: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_i w_i z_i z_i^H computed as a rank-k Hermitian update."""
    scaled = z * np.sqrt(weights)[:, None]
    return _fill_herk(blas.zherk(1.0, scaled.T, lower=0))


def _floor_eigenvalues(gamma: np.ndarray, floor: float) -> np.ndarray:
    """Project onto {G Hermitian : G >= floor*I}, leaving feasible G untouched.

    The projection clips eigenvalues from below; keeping already-feasible
    matrices bit-identical preserves the exact M-step maximizer whenever the
    constraint is inactive.
    """
    m = gamma.shape[0]
    try:
        np.linalg.cholesky(gamma - floor * np.eye(m))
        return gamma
    except np.linalg.LinAlgError:
        pass
    try:
        evals, vecs = np.linalg.eigh(gamma)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    clipped = (vecs * np.maximum(evals, floor)) @ vecs.conj().T
    out = 0.5 * (clipped + clipped.conj().T)
    np.fill_diagonal(out, out.diagonal().real)
    return out


def _log_densities(z: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    """Per-patch, per-component circular Gaussian log densities, (N_p, K)."""
    n_patches, m = z.shape
    n_comp = gammas.shape[0]
    logp = np.empty((n_patches, n_comp))
    zt = z.T
    for k in range(n_comp):
        try:
            chol = np.linalg.cholesky(gammas[k])
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"component {k}: covariance not PD: {exc}") from exc
        logdet = 2.0 * float(np.log(np.diagonal(chol).real).sum())
        inv_chol, info = lapack.ztrtri(chol, lower=1)
        if info != 0:
            raise NumericalError(f"component {k}: triangular inversion failed ({info})")
        whitened = inv_chol @ zt
        quad = np.abs(whitened)
        np.square(quad, out=quad)
        logp[:, k] = -m * LOG_PI - logdet - quad.sum(axis=0)
    return logp


def responsibilities(ps: PatchSet, mixture: NoisyMixture):
    """Posterior component probabilities of each patch, plus the log-likelihood.

    Returns (R, loglik) where R has shape (N_p, K) with rows summing to 1.
    """
    if ps.m != mixture.m:
        raise InvalidInputError(f"patch length {ps.m} != mixture dimension {mixture.m}")
    logw = _log_densities(ps.patches, mixture.gammas) + np.log(mixture.alphas)[None, :]
    norm = logsumexp(logw, axis=1)
    return np.exp(logw - norm[:, None]), float(norm.sum())


def _init_gammas(z: np.ndarray, n_comp: int, rng: np.random.Generator,
                 floor: float) -> np.ndarray:
    """Seed each component from the neighborhood of a random center patch.

    The component covariance is the second moment of the center's nearest
    patches (in Euclidean distance) plus the floor ridge. Anchoring each
    component to a distinct patch breaks the symmetry that makes
    equal-split initializations stall at a single-Gaussian saddle.
    """
    n_patches, m = z.shape
    centers = rng.choice(n_patches, size=n_comp, replace=False)
    n_near = min(n_patches, max(2 * m, 40))
    eye = np.eye(m)
    gammas = np.empty((n_comp, m, m), dtype=np.complex128)
    for k, center in enumerate(centers):
        dist = np.abs(z - z[center])
        np.square(dist, out=dist)
        nearest = np.argpartition(dist.sum(axis=1), n_near - 1)[:n_near]
        moment = _fill_herk(blas.zherk(1.0, z[nearest].T, lower=0)) / n_near
        gammas[k] = moment + floor * eye
    return gammas


def em_fit(ps: PatchSet, n_components: int, opts: EmOptions = EmOptions()):
    """Fit the noisy-domain mixture by expectation maximization.

    Alternates posterior evaluation with weighted second-moment updates until
    the relative log-likelihood change drops below ``opts.rel_tol`` or
    ``opts.max_iters`` is reached. Covariances are kept positive definite by
    flooring their eigenvalues at ``reg_eps`` times the mean data power; the
    floor acts as a constraint on the M-step, so the returned log-likelihood
    trace is nondecreasing.

    Returns (NoisyMixture, trace) with ``trace[t]`` the log-likelihood of the
    parameters entering iteration t.
    """
    z = ps.patches
    n_patches, m = z.shape
    if n_components < 1:
        raise InvalidInputError("need at least one component")
    if n_components > n_patches:
        raise InvalidInputError(
            f"K={n_components} exceeds the number of patches N_p={n_patches}"
        )
    rng = np.random.default_rng(opts.seed)
    mean_power = float(np.mean(np.abs(z) ** 2))
    floor = opts.reg_eps * (mean_power if mean_power > 0 else 1.0)
    eye = np.eye(m)

    gammas = _init_gammas(z, n_components, rng, floor)
    alphas = np.full(n_components, 1.0 / n_components)

    trace = []
    for _ in range(opts.max_iters):
        logw = _log_densities(z, gammas) + np.log(alphas)[None, :]
        norm = logsumexp(logw, axis=1)
        loglik = float(norm.sum())
        trace.append(loglik)
        if len(trace) > 1 and abs(loglik - trace[-2]) <= opts.rel_tol * abs(trace[-2]):
            break

        resp = np.exp(logw - norm[:, None])
        counts = resp.sum(axis=0)
        rescued = False
        for k in range(n_components):
            if counts[k] < _COLLAPSE_FRACTION * n_patches:
                warnings.warn(
                    f"component {k} collapsed (mass {counts[k]:.3g}); reinitialized",
                    ComponentResetWarning,
                )
                seed_patch = z[rng.integers(0, n_patches)]
                gammas[k] = np.outer(seed_patch, seed_patch.conj()) + floor * eye
                alphas[k] = 1.0 / n_components
                rescued = True
            else:
                moment = _weighted_second_moment(z, resp[:, k]) / counts[k]
                gammas[k] = _floor_eigenvalues(moment, floor)
                alphas[k] = counts[k] / n_patches
        if rescued:
            alphas = alphas / alphas.sum()

    return NoisyMixture(alphas=alphas, gammas=gammas), np.asarray(trace)


def correct_covariances(mixture: NoisyMixture, sigma: float) -> CleanMixture:
    """Remove the noise floor from each covariance spectrum.

    Each Gamma_k is eigendecomposed as U S U^H and rebuilt with eigenvalues
    max(S - sigma^2, 0), which is the clean-signal covariance under the
    additive circular-noise model. Mixing weights are copied unchanged.
    """
    if not (np.isfinite(sigma) and sigma >= 0):
        raise InvalidInputError(f"sigma must be finite and >= 0, got {sigma!r}")
    var = sigma * sigma
    sigmas = np.empty_like(mixture.gammas)
    for k in range(mixture.n_components):
        try:
            evals, vecs = np.linalg.eigh(mixture.gammas[k])
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"component {k}: eigendecomposition failed: {exc}") from exc
        shrunk = (vecs * np.maximum(evals - var, 0.0)) @ vecs.conj().T
        shrunk = 0.5 * (shrunk + shrunk.conj().T)
        np.fill_diagonal(shrunk, shrunk.diagonal().real)
        sigmas[k] = shrunk
    return CleanMixture(alphas=mixture.alphas.copy(), sigmas=sigmas, sigma_noise=sigma)


# ---------------------------------------------------------------------------
# CMOG model files

def save_mixture(path, cm: CleanMixture) -> None:
    """Write a clean mixture in the CMOG binary format.

    Layout: magic ``CMOG1\\n``, K and m as uint64 little-endian, sigma as
    float64 little-endian, the K mixing weights as float64, then K dense
    matrices with (real, imag) float64 pairs interleaved row-major.
    """
    with open(path, "wb") as fh:
        fh.write(CMOG_MAGIC)
        fh.write(np.array([cm.n_components, cm.m], dtype="<u8").tobytes())
        fh.write(np.array([cm.sigma_noise], dtype="<f8").tobytes())
        fh.write(cm.alphas.astype("<f8").tobytes())
        interleaved = np.empty((cm.n_components, cm.m, cm.m, 2), dtype="<f8")
        interleaved[..., 0] = cm.sigmas.real
        interleaved[..., 1] = cm.sigmas.imag
        fh.write(interleaved.tobytes())


def load_mixture(path) -> CleanMixture:
    """Read a CMOG model file; rejects matrices that are not Hermitian."""
    with open(path, "rb") as fh:
        magic = fh.read(len(CMOG_MAGIC))
        if magic != CMOG_MAGIC:
            raise InvalidInputError(f"{path}: not a CMOG file (bad magic {magic!r})")
        header = np.frombuffer(fh.read(16), dtype="<u8")
        if header.size != 2:
            raise InvalidInputError(f"{path}: truncated CMOG header")
        n_comp, m = int(header[0]), int(header[1])
        sigma_raw = np.frombuffer(fh.read(8), dtype="<f8")
        if sigma_raw.size != 1:
            raise InvalidInputError(f"{path}: truncated CMOG header")
        alphas = np.frombuffer(fh.read(8 * n_comp), dtype="<f8")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if alphas.size != n_comp or raw.size != n_comp * m * m * 2:
        raise InvalidInputError(f"{path}: CMOG payload has the wrong size")
    pairs = raw.reshape(n_comp, m, m, 2)
    sigmas = pairs[..., 0] + 1j * pairs[..., 1]
    dev = np.abs(sigmas - np.conj(np.swapaxes(sigmas, -1, -2))).max()
    if dev > 1e-8 * max(1.0, float(np.abs(sigmas).max())):
        raise InvalidInputError(f"{path}: stored covariance deviates from Hermitian by {dev:g}")
    # canonicalize sub-tolerance asymmetry left over from the writer
    sigmas = 0.5 * (sigmas + np.conj(np.swapaxes(sigmas, -1, -2)))
    return CleanMixture(alphas=alphas.copy(), sigmas=sigmas, sigma_noise=float(sigma_raw[0]))
