"""Pilot phase simulation and LMMSE channel estimation from quantized samples.

Each user transmits an orthonormal pilot sequence scaled by sqrt(tau); the
APs quantize the received samples and forward them, and the central unit
correlates with each pilot and applies a per-coefficient LMMSE scaling.
Closed forms for the optimal scaling and the resulting per-coefficient MSE
follow from the Bussgang linearization of the quantizer, with the
distortion variance taken at the per-AP received variance.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .quantizer import optimal_step, quantize_complex

__all__ = [
    "PilotBook",
    "ChannelEstimate",
    "make_pilot_book",
    "simulate_pilot_phase",
    "pilot_correlate",
    "correlate_all",
    "lmmse_coefficient",
    "estimate_channel",
    "estimation_mse",
    "pilot_mse_at_coefficient",
    "estimate_from_pilots",
]

# Relative step mismatch beyond which the Gaussian sizing assumption behind
# the Bussgang coefficients is considered violated.
_STEP_MISMATCH_TOL = 0.1


@dataclass(frozen=True)
class PilotBook:
    """tau x K matrix of orthonormal, constant-modulus pilot columns."""

    tau: int
    phi: np.ndarray


@dataclass(frozen=True)
class ChannelEstimate:
    """Per-coefficient estimates with their LMMSE scalings and closed-form
    (normalized) mean square errors, all shaped (M, K)."""

    g_hat: np.ndarray
    c: np.ndarray
    mse: np.ndarray
    nmse: np.ndarray


def make_pilot_book(k_users, tau):
    """First K columns of the unitary DFT of size tau, scaled to unit norm.

    Columns are exactly orthonormal and every entry has modulus
    1/sqrt(tau), so the per-symbol pilot power is constant and matches the
    data-phase variance the quantizers are sized against.
    """
    if tau < k_users:
        raise ValueError(f"tau={tau} < k_users={k_users}: orthonormal pilots impossible")
    t = np.arange(tau)
    phi = np.exp(-2j * math.pi * np.outer(t, t[:k_users]) / tau) / math.sqrt(tau)
    return PilotBook(tau=tau, phi=phi)


def simulate_pilot_phase(G, pilots, noise, q_per_ap, rng, beta=None):
    """Quantized pilot observations, shape (M, tau).

    The clean sample at AP m and symbol t is sqrt(tau) * sum_k g_mk *
    phi[t, k] plus receiver noise.  ``q_per_ap`` is a length-M sequence of
    quantizers, or None for an unquantized fronthaul.  When the large-scale
    gains are supplied, each quantizer step is checked against the pilot
    phase variance it should have been sized for, and a mismatch beyond 10%
    raises a warning since the linearization coefficients then no longer
    describe the configuration.
    """
    m_aps, k_users = G.shape
    tau, k_pilots = pilots.phi.shape
    if k_pilots != k_users:
        raise ValueError(f"pilot book has {k_pilots} columns for {k_users} users")
    clean = math.sqrt(tau) * (G @ pilots.phi.T)
    noise_samp = rng.normal(size=(m_aps, tau)) + 1j * rng.normal(size=(m_aps, tau))
    x = clean + math.sqrt(noise.sigma_n2 / 2.0) * noise_samp
    if q_per_ap is None:
        return x
    if len(q_per_ap) != m_aps:
        raise ValueError(f"expected {m_aps} quantizers, got {len(q_per_ap)}")
    if beta is not None:
        _warn_on_step_mismatch(beta, noise.sigma_n2, q_per_ap)
    y = np.empty_like(x)
    for m, q in enumerate(q_per_ap):
        y[m] = x[m] if q is None else quantize_complex(x[m], q)
    return y


def _warn_on_step_mismatch(beta, sigma_n2, q_per_ap):
    # Pilot symbols have unit power, so the per-symbol variance at AP m is
    # sum(beta_m) + sigma_n2 regardless of the data-phase symbol power.
    sigma2 = np.asarray(beta, dtype=float).sum(axis=1) + sigma_n2
    for m, q in enumerate(q_per_ap):
        if q is None:
            continue
        expected = optimal_step(q.levels) * math.sqrt(sigma2[m] / 2.0)
        if abs(q.step - expected) > _STEP_MISMATCH_TOL * expected:
            warnings.warn(
                f"quantizer step at AP {m} is {q.step:.4g} but the pilot-phase "
                f"variance implies {expected:.4g}; linearization coefficients "
                "may not describe this configuration",
                stacklevel=3,
            )


def pilot_correlate(y_m, phi_k):
    """Correlation of one AP's quantized pilot block with one pilot column."""
    if len(y_m) != len(phi_k):
        raise ValueError("sample block and pilot length differ")
    return complex(np.vdot(phi_k, y_m))


def correlate_all(y, pilots):
    """All AP-user pilot correlations at once, shape (M, K)."""
    return y @ pilots.phi.conj()


def _interference_term(beta_mk, beta_row, alpha, gamma, sigma_n2):
    """Noise-plus-distortion power seen by the correlator, aligned so it
    broadcasts against ``beta_mk`` (per-AP when given full matrices)."""
    beta_mk = np.asarray(beta_mk, dtype=float)
    total = np.asarray(
        (gamma - alpha**2) * np.asarray(beta_row, dtype=float).sum(axis=-1) + gamma * sigma_n2
    )
    if total.ndim == beta_mk.ndim - 1:
        total = total[..., None]
    return beta_mk, total


def lmmse_coefficient(beta_mk, beta_row, tau, alpha, gamma, sigma_n2):
    """Optimal scaling of the pilot correlation for estimating one gain.

    ``beta_row`` holds all K gains at the same AP (last axis); passing the
    full (M, K) gain matrix for both arguments yields the full coefficient
    matrix.  With alpha = gamma = 1 this reduces to the textbook
    unquantized LMMSE coefficient.
    """
    beta_mk, interference = _interference_term(beta_mk, beta_row, alpha, gamma, sigma_n2)
    out = beta_mk * math.sqrt(tau) * alpha / (tau * alpha**2 * beta_mk + interference)
    return out if out.ndim else float(out)


def estimate_channel(r, c):
    """Channel estimate: elementwise scaling of the pilot correlations."""
    r = np.asarray(r)
    c = np.asarray(c)
    if r.shape != c.shape:
        raise ValueError(f"shape mismatch: correlations {r.shape}, coefficients {c.shape}")
    return c * r


def estimation_mse(beta_mk, beta_row, tau, alpha, gamma, sigma_n2):
    """Closed-form MSE of the LMMSE estimate and its normalized value.

    Returns (mse, nmse) with nmse = mse/beta_mk, which lies in (0, 1) for
    every valid parameter set.  Broadcasts like ``lmmse_coefficient``.
    """
    beta_mk, interference = _interference_term(beta_mk, beta_row, alpha, gamma, sigma_n2)
    nmse = interference / (alpha**2 * tau * beta_mk + interference)
    mse = beta_mk * nmse
    if mse.ndim:
        return mse, nmse
    return float(mse), float(nmse)


def pilot_mse_at_coefficient(c, beta_mk, beta_row, tau, alpha, gamma, sigma_n2):
    """Estimation MSE for an arbitrary (not necessarily optimal) scaling c.

    Quadratic in c: beta*(c*sqrt(tau)*alpha - 1)**2 plus c**2 times the
    noise-plus-distortion power seen by the correlator.  Minimized exactly
    at ``lmmse_coefficient``, where it equals ``estimation_mse``.
    """
    c = np.asarray(c, dtype=float)
    beta_mk, interference = _interference_term(beta_mk, beta_row, alpha, gamma, sigma_n2)
    out = beta_mk * (c * math.sqrt(tau) * alpha - 1.0) ** 2 + c**2 * interference
    return out if out.ndim else float(out)


def estimate_from_pilots(y, pilots, beta, alpha, gamma, sigma_n2):
    """Full estimation pipeline from quantized pilot blocks.

    Correlates, builds the per-coefficient LMMSE scalings from the
    large-scale gains, and returns the estimates together with the
    closed-form (normalized) MSEs.
    """
    r = correlate_all(y, pilots)
    c = lmmse_coefficient(beta, beta, pilots.tau, alpha, gamma, sigma_n2)
    mse, nmse = estimation_mse(beta, beta, pilots.tau, alpha, gamma, sigma_n2)
    return ChannelEstimate(g_hat=estimate_channel(r, c), c=c, mse=mse, nmse=nmse)
