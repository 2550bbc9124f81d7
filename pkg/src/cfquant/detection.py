"""Quantized uplink data phase and MMSE multiuser detection.

With every AP quantizing at the same bit depth, the forwarded vector obeys
the linearized model y = alpha*G*s + alpha*n + d, where the distortion d
has a diagonal covariance set by the per-AP received variance.  The
central unit applies the MMSE receiver for this model; its error
covariance is available both as a direct M x M solve and as the
numerically friendlier K x K information form, and per-user SINR follows
from the error covariance diagonal.  Jensen-style lower bounds on two
averaged inverse Gram matrices are provided as diagnostics.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .quantizer import quantize_complex

__all__ = [
    "DetectionResult",
    "simulate_uplink",
    "distortion_covariance",
    "mmse_weights",
    "detect",
    "error_covariance",
    "error_covariance_direct",
    "error_covariance_for_weights",
    "per_user_sinr",
    "jensen_bound_diagonals",
]

logger = logging.getLogger(__name__)

_COND_WARN = 1e12


@dataclass(frozen=True)
class DetectionResult:
    """Soft symbol estimates with the receiver that produced them, the
    error covariance and the per-user SINR (linear)."""

    s_hat: np.ndarray
    weights: np.ndarray
    error_cov: np.ndarray
    sinr: np.ndarray


def simulate_uplink(G, symbols, noise, q_per_ap, rng):
    """Quantized uplink observation y, shape (M,) or (M, T).

    ``symbols`` holds one or more transmit vectors of power sigma_s2 in its
    first axis (K,) or (K, T).  Receiver noise is drawn from ``rng`` and
    each AP's sample is quantized with its own step; pass None for an
    unquantized fronthaul.
    """
    symbols = np.asarray(symbols)
    x = G @ symbols
    n = rng.normal(size=x.shape) + 1j * rng.normal(size=x.shape)
    x = x + np.sqrt(noise.sigma_n2 / 2.0) * n
    if q_per_ap is None:
        return x
    if len(q_per_ap) != G.shape[0]:
        raise ValueError(f"expected {G.shape[0]} quantizers, got {len(q_per_ap)}")
    y = np.empty_like(x)
    for m, q in enumerate(q_per_ap):
        y[m] = x[m] if q is None else quantize_complex(x[m], q)
    return y


def distortion_covariance(beta, alpha, gamma, sigma_s2, sigma_n2):
    """Diagonal of the quantization distortion covariance, shape (M,).

    Entry m is (gamma - alpha**2) times the received variance at AP m; the
    distortion is uncorrelated across APs, so the diagonal fully describes
    the covariance.  All entries are zero in the distortion-free limit.
    """
    beta = np.asarray(beta, dtype=float)
    gap = gamma - alpha**2
    if gap < 0.0 and gap > -1e-12:
        gap = 0.0
    if gap < 0.0:
        raise ValueError(f"gamma={gamma} < alpha^2={alpha**2}")
    return gap * (sigma_s2 * beta.sum(axis=1) + sigma_n2)


def _system_matrix(G, alpha, sigma_n2, c_delta, sigma_s2, legacy_eq21):
    """Covariance of the linearized observation, alpha**2*sigma_s2*G*G^H
    plus the noise and distortion diagonal."""
    c_delta = np.asarray(c_delta, dtype=float)
    noise_scale = sigma_n2 if legacy_eq21 else alpha**2 * sigma_n2
    A = alpha**2 * sigma_s2 * (G @ G.conj().T)
    diag = c_delta + noise_scale
    A[np.diag_indices_from(A)] += diag
    return A


def mmse_weights(G, alpha, sigma_n2, c_delta, sigma_s2=1.0, legacy_eq21=False):
    """MMSE receive matrix W, shape (K, M), for the linearized model.

    Computed as alpha*sigma_s2*G^H times the inverse observation
    covariance, via a Hermitian positive-definite solve.  With
    ``legacy_eq21`` the noise term enters unscaled by alpha**2, an
    alternative bookkeeping kept for comparison; the default scaling is the
    one consistent with the observation covariance of the linearized
    model.
    """
    A = _system_matrix(G, alpha, sigma_n2, c_delta, sigma_s2, legacy_eq21)
    _check_conditioning(A)
    try:
        X = scipy.linalg.solve(A, G, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "observation covariance is singular (distortion-free and "
            "noiseless corner); no MMSE receiver exists"
        ) from exc
    return alpha * sigma_s2 * X.conj().T


def _check_conditioning(A):
    eigs = np.linalg.eigvalsh(A)
    if eigs[0] <= 0.0:
        raise np.linalg.LinAlgError(
            "observation covariance is singular (distortion-free and "
            "noiseless corner); no MMSE receiver exists"
        )
    cond = eigs[-1] / eigs[0]
    if cond > _COND_WARN:
        logger.warning("observation covariance condition number %.3e", cond)


def detect(W, y):
    """Soft symbol estimates W @ y."""
    return W @ y


def error_covariance(G, alpha, sigma_s2, sigma_n2, c_delta):
    """Error covariance of the MMSE detector given the channel, shape (K, K).

    Uses the K x K information form
    (I/sigma_s2 + alpha**2 * G^H * diag(B)^-1 * G)^-1 with B the noise-plus-
    distortion diagonal, which stays well conditioned whenever B is
    nonsingular.  Hermitian positive semidefinite with diagonal in
    (0, sigma_s2].
    """
    c_delta = np.asarray(c_delta, dtype=float)
    b = c_delta + alpha**2 * sigma_n2
    if np.any(b <= 0.0):
        raise np.linalg.LinAlgError(
            "noise-plus-distortion diagonal is singular; error covariance undefined"
        )
    k_users = G.shape[1]
    info = alpha**2 * (G.conj().T @ (G / b[:, None]))
    info[np.diag_indices_from(info)] += 1.0 / sigma_s2
    info = 0.5 * (info + info.conj().T)
    cov = np.linalg.inv(info)
    return 0.5 * (cov + cov.conj().T) if k_users > 1 else cov


def error_covariance_direct(G, alpha, sigma_s2, sigma_n2, c_delta):
    """Error covariance via the direct M x M solve,
    sigma_s2*I - alpha**2*sigma_s2**2 * G^H * A^-1 * G.

    Algebraically identical to ``error_covariance``; kept as the
    cross-checkable second route.
    """
    A = _system_matrix(G, alpha, sigma_n2, c_delta, sigma_s2, legacy_eq21=False)
    X = scipy.linalg.solve(A, G, assume_a="pos")
    cov = -(alpha**2 * sigma_s2**2) * (G.conj().T @ X)
    cov[np.diag_indices_from(cov)] += sigma_s2
    return 0.5 * (cov + cov.conj().T)


def error_covariance_for_weights(W, G, alpha, sigma_s2, sigma_n2, c_delta):
    """Error covariance of an arbitrary linear receiver W.

    General quadratic form (alpha*W*G - I) sigma_s2 (.)^H + W (alpha**2*
    sigma_n2*I + C_delta) W^H; used for receiver perturbation checks and
    for the legacy noise-scaling variant, where W is not the exact MMSE
    receiver of the linearized model.
    """
    c_delta = np.asarray(c_delta, dtype=float)
    k_users = G.shape[1]
    bias = alpha * (W @ G) - np.eye(k_users)
    noise_diag = c_delta + alpha**2 * sigma_n2
    cov = sigma_s2 * (bias @ bias.conj().T) + (W * noise_diag[None, :]) @ W.conj().T
    return 0.5 * (cov + cov.conj().T)


def per_user_sinr(error_cov, sigma_s2):
    """Per-user SINR (linear) from the error covariance diagonal.

    sinr_k = sigma_s2/[C_e]_kk - 1, the SINR of the biased MMSE symbol
    estimate; zero when the observation carries no information about the
    user.
    """
    diag = np.real(np.diagonal(error_cov)).copy()
    if np.any(diag <= 0.0) or np.any(diag > sigma_s2 * (1.0 + 1e-9)):
        raise ValueError("error covariance diagonal must lie in (0, sigma_s2]")
    return np.maximum(sigma_s2 / diag - 1.0, 0.0)


def jensen_bound_diagonals(beta, c_delta):
    """Jensen lower bounds for two fading-averaged inverse Gram diagonals.

    For each user k returns a pair of bounds: 1/sum_m(beta_mk) for the
    average of diag((G^H G)^-1), and 1/sum_m(beta_mk/c_delta_m) for the
    average of diag((G^H C_delta^-1 G)^-1).  Diagnostic only; both follow
    from Jensen's inequality applied entrywise under uncorrelated Rayleigh
    fading.
    """
    beta = np.asarray(beta, dtype=float)
    c_delta = np.asarray(c_delta, dtype=float)
    if np.any(c_delta <= 0.0):
        raise ValueError("distortion covariance diagonal must be positive")
    bound_gram = 1.0 / beta.sum(axis=0)
    bound_distortion = 1.0 / (beta / c_delta[:, None]).sum(axis=0)
    return bound_gram, bound_distortion


def detection_result(G, noise, c_delta, alpha, y):
    """Bundle receiver, estimates, error covariance and SINR for one block."""
    W = mmse_weights(G, alpha, noise.sigma_n2, c_delta, noise.sigma_s2)
    cov = error_covariance(G, alpha, noise.sigma_s2, noise.sigma_n2, c_delta)
    return DetectionResult(
        s_hat=detect(W, y),
        weights=W,
        error_cov=cov,
        sinr=per_user_sinr(cov, noise.sigma_s2),
    )
