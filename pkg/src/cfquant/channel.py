"""Network geometry, propagation, fading and noise for the uplink model.

Access points and user terminals are dropped uniformly over a square
service area.  Large-scale gains combine a three-slope path loss with
i.i.d. log-normal shadowing; small-scale fading is i.i.d. Rayleigh.  The
noise floor is anchored to the SNR of a link spanning half the service
width, and the per-AP received variance drives quantizer sizing.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PathLossModel",
    "NetworkGeometry",
    "NoiseModel",
    "path_loss",
    "noise_variance",
    "draw_geometry",
    "large_scale_gains",
    "draw_small_scale",
    "received_variance",
]


@dataclass(frozen=True)
class PathLossModel:
    """Three-slope power-law gain: flat below d0, exponent gamma0 up to d1,
    then gamma1 beyond.  Continuous and nonincreasing in distance."""

    d0: float = 10.0
    d1: float = 100.0
    gamma0: float = 2.0
    gamma1: float = 3.5

    def __post_init__(self):
        if not (0.0 < self.d0 < self.d1):
            raise ValueError(f"need 0 < d0 < d1, got d0={self.d0}, d1={self.d1}")
        if self.gamma0 <= 0.0 or self.gamma1 <= 0.0:
            raise ValueError("path loss exponents must be positive")


@dataclass(frozen=True)
class NetworkGeometry:
    """AP and UT drop positions inside the [0, service_width]^2 area."""

    ap_positions: np.ndarray
    ut_positions: np.ndarray
    service_width: float

    @property
    def n_aps(self):
        return self.ap_positions.shape[0]

    @property
    def n_users(self):
        return self.ut_positions.shape[0]

    def distances(self):
        """Euclidean AP-to-UT distance matrix, shape (M, K)."""
        diff = self.ap_positions[:, None, :] - self.ut_positions[None, :, :]
        return np.sqrt((diff**2).sum(axis=2))


@dataclass(frozen=True)
class NoiseModel:
    """Receive noise variance, edge SNR and transmit symbol power."""

    snr_edge: float
    sigma_n2: float
    sigma_s2: float = 1.0

    def __post_init__(self):
        if not self.sigma_s2 > 0.0:
            raise ValueError("sigma_s2 must be positive")

    @classmethod
    def from_edge_snr_db(cls, snr_edge_db, model=None, l_serv=1000.0, sigma_s2=1.0):
        """Noise model anchored to the SNR (in dB) over a l_serv/2 link."""
        model = model if model is not None else PathLossModel()
        snr = 10.0 ** (snr_edge_db / 10.0)
        return cls(snr_edge=snr, sigma_n2=noise_variance(model, l_serv, snr), sigma_s2=sigma_s2)


def path_loss(d, model):
    """Linear gain of the three-slope model at distance(s) ``d`` in meters."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0.0):
        raise ValueError("distance must be nonnegative")
    with np.errstate(divide="ignore"):
        mid = (d / model.d0) ** (-model.gamma0)
        far = (model.d1 / model.d0) ** (-model.gamma0) * (d / model.d1) ** (-model.gamma1)
    out = np.where(d < model.d0, 1.0, np.where(d < model.d1, mid, far))
    return out if out.ndim else float(out)


def noise_variance(model, l_serv, snr_edge):
    """Noise variance putting a user at distance l_serv/2 at the given SNR.

    Equals path_loss(l_serv/2)/snr_edge for any l_serv beyond the second
    breakpoint.
    """
    if not snr_edge > 0.0:
        raise ValueError("snr_edge must be positive")
    gain = (model.d1 / model.d0) ** (-model.gamma0) * (0.5 * l_serv / model.d1) ** (-model.gamma1)
    return gain / snr_edge


def draw_geometry(m_aps, k_users, l_serv, rng):
    """Drop APs and UTs i.i.d. uniformly over the square service area."""
    if m_aps < 1 or k_users < 1:
        raise ValueError("need at least one AP and one user")
    ap = rng.uniform(0.0, l_serv, size=(m_aps, 2))
    ut = rng.uniform(0.0, l_serv, size=(k_users, 2))
    return NetworkGeometry(ap_positions=ap, ut_positions=ut, service_width=l_serv)


def large_scale_gains(geo, model, sigma_sh_db, rng):
    """Large-scale gain matrix beta, shape (M, K).

    beta = 10**(xi/10) * PL(d) with xi i.i.d. zero-mean normal of standard
    deviation sigma_sh_db, independent across all AP-UT pairs.
    """
    if sigma_sh_db < 0.0:
        raise ValueError("sigma_sh_db must be nonnegative")
    d = geo.distances()
    shadow_db = rng.normal(0.0, sigma_sh_db, size=d.shape) if sigma_sh_db > 0.0 else np.zeros(d.shape)
    return 10.0 ** (shadow_db / 10.0) * path_loss(d, model)


def draw_small_scale(m_aps, k_users, rng):
    """I.i.d. unit-variance circularly-symmetric complex normal matrix (M, K)."""
    re = rng.normal(size=(m_aps, k_users))
    im = rng.normal(size=(m_aps, k_users))
    return (re + 1j * im) / math.sqrt(2.0)


def received_variance(beta_row, sigma_s2, sigma_n2):
    """Total received variance at an AP: sigma_s2 * sum(beta) + sigma_n2.

    ``beta_row`` may be a single AP's gain row (K,) or the full (M, K)
    matrix, in which case one variance per AP is returned.  This is the
    variance the quantizer at each AP is sized against, conditioned on the
    large-scale gains being known there.
    """
    beta_row = np.asarray(beta_row, dtype=float)
    if np.any(beta_row < 0.0):
        raise ValueError("gains must be nonnegative")
    total = sigma_s2 * beta_row.sum(axis=-1) + sigma_n2
    return total if np.ndim(total) else float(total)
