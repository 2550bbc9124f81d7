"""Midrise uniform quantizer and its Bussgang linearization.

An L-level uniform quantizer applied to a zero-mean Gaussian input can be
written as g(x) = alpha*x + d, where the distortion d is uncorrelated with
the input.  This module provides the quantizer transfer function, closed
forms for the linear gain alpha and the output power ratio gamma, the
resulting distortion power and SDNR, and a numerical solver for the
SDNR-optimal step size.  All coefficients depend on the step only through
the normalized step delta/sigma, so the solver works in normalized units.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

__all__ = [
    "FlatObjectiveWarning",
    "UniformQuantizer",
    "BussgangFactors",
    "quantize",
    "quantize_complex",
    "quantize_complex_with_steps",
    "bussgang_alpha",
    "power_gain_gamma",
    "bussgang_factors",
    "distortion_power",
    "sdnr",
    "optimal_step",
]

# Slack when testing gamma >= alpha**2; the closed forms satisfy the
# inequality exactly, so anything beyond this is a caller error.
_CONSISTENCY_TOL = 1e-12

# Canonical 2-level step: the objective alpha**2/gamma is constant in the
# step, so we return the minimum-distortion choice 2*E|x| for unit-variance
# Gaussian input (the classical table value 1.596).
_TWO_LEVEL_STEP = 2.0 * math.sqrt(2.0 / math.pi)

# Search interval for the step-size solver, wide enough to bracket the
# optimum for every level count up to 2**14.
_SEARCH_HI = 8.0
_COARSE_RES = 1e-3
_REFINE_TOL = 1e-6


class FlatObjectiveWarning(UserWarning):
    """Raised when the step-size objective does not depend on the step."""


def _gaussian_tail(x):
    """P(N(0,1) > x), vectorized."""
    return 0.5 * erfc(x / math.sqrt(2.0))


@dataclass(frozen=True)
class UniformQuantizer:
    """L-level midrise quantizer with step size ``step``.

    Output alphabet is {(l + 1/2)*step : l = -L/2, ..., L/2 - 1}, symmetric
    about zero and saturating at +/-(L-1)/2*step.
    """

    levels: int
    step: float

    def __post_init__(self):
        if self.levels < 2 or self.levels % 2 != 0:
            raise ValueError(f"levels must be even and >= 2, got {self.levels}")
        if not (self.step > 0.0 and math.isfinite(self.step)):
            raise ValueError(f"step must be positive and finite, got {self.step}")

    @property
    def bits(self):
        """Fronthaul bits per real sample, log2(levels)."""
        return math.log2(self.levels)

    @property
    def saturation(self):
        """Largest output magnitude, (L-1)/2 * step."""
        return 0.5 * (self.levels - 1) * self.step

    @classmethod
    def for_complex_variance(cls, levels, variance):
        """Quantizer sized for a complex signal of the given total variance.

        I and Q are quantized separately, each with variance ``variance/2``,
        so the absolute step is the SDNR-optimal normalized step scaled by
        the per-component standard deviation.
        """
        if not variance > 0.0:
            raise ValueError("variance must be positive")
        return cls(levels, optimal_step(levels) * math.sqrt(variance / 2.0))


@dataclass(frozen=True)
class BussgangFactors:
    """Linearization coefficients of a quantizer for a Gaussian input.

    alpha is the linear gain, gamma the output/input power ratio,
    distortion_power the variance of the uncorrelated distortion term and
    sdnr = alpha**2/(gamma - alpha**2) the signal-to-distortion ratio
    (infinite in the distortion-free limit).
    """

    alpha: float
    gamma: float
    distortion_power: float
    sdnr: float


def quantize(x, q):
    """Apply the midrise transfer function of ``q`` to real samples.

    Bins are half open, (l*step, (l+1)*step], so x = 0 maps to -step/2.
    Saturates at +/-(L-1)/2*step.  Accepts scalars or arrays; rejects
    non-finite input.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("quantizer input must be finite")
    out = _midrise(x, q.levels, q.step)
    return out if out.ndim else float(out)


def _midrise(x, levels, step):
    """Core midrise map; ``step`` may be an array broadcast against ``x``."""
    half = levels // 2
    idx = np.clip(np.ceil(x / step) - 1.0, -half, half - 1)
    return (idx + 0.5) * step


def quantize_complex(x, q):
    """Quantize in-phase and quadrature components independently."""
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        raise ValueError("quantizer input must be finite")
    out = _midrise(x.real, q.levels, q.step) + 1j * _midrise(x.imag, q.levels, q.step)
    return out if out.ndim else complex(out)


def quantize_complex_with_steps(x, levels, steps):
    """Componentwise midrise quantization with a broadcastable step array.

    Vectorized kernel for pipelines where each row (AP) carries its own
    step; ``steps`` must broadcast against ``x``.
    """
    return _midrise(x.real, levels, steps) + 1j * _midrise(x.imag, levels, steps)


def _alpha_normalized(levels, step_norm):
    """Linear gain for unit input variance; step_norm may be an array."""
    d = np.atleast_1d(np.asarray(step_norm, dtype=float))
    ls = np.arange(1, levels // 2, dtype=float)
    if ls.size:
        series = 2.0 * np.exp(-0.5 * np.multiply.outer(ls**2, d**2)).sum(axis=0)
    else:
        series = np.zeros_like(d)
    out = d / math.sqrt(2.0 * math.pi) * (series + 1.0)
    return out if np.ndim(step_norm) else float(out[0])


def _gamma_normalized(levels, step_norm):
    """Output power ratio for unit input variance; step_norm may be an array."""
    d = np.atleast_1d(np.asarray(step_norm, dtype=float))
    ls = np.arange(1, levels // 2, dtype=float)
    if ls.size:
        series = 4.0 * (ls @ _gaussian_tail(np.multiply.outer(ls, d)))
    else:
        series = np.zeros_like(d)
    out = d**2 * (0.25 + series)
    return out if np.ndim(step_norm) else float(out[0])


def bussgang_alpha(q, sigma_x):
    """Linear gain of ``q`` for zero-mean Gaussian input with std sigma_x.

    Equals E[x*g(x)]/sigma_x**2 and depends only on the normalized step
    step/sigma_x and the level count.
    """
    if not sigma_x > 0.0:
        raise ValueError("sigma_x must be positive")
    return float(_alpha_normalized(q.levels, q.step / sigma_x))


def power_gain_gamma(q, sigma_x):
    """Output/input power ratio E[g(x)**2]/sigma_x**2 for Gaussian input."""
    if not sigma_x > 0.0:
        raise ValueError("sigma_x must be positive")
    return float(_gamma_normalized(q.levels, q.step / sigma_x))


def distortion_power(alpha, gamma, sigma_x2):
    """Variance of the Bussgang distortion term, sigma_x2*(gamma - alpha**2)."""
    if not sigma_x2 > 0.0:
        raise ValueError("sigma_x2 must be positive")
    gap = gamma - alpha * alpha
    if gap < -_CONSISTENCY_TOL * max(1.0, alpha * alpha):
        raise ValueError(f"inconsistent factors: gamma={gamma} < alpha^2={alpha * alpha}")
    return sigma_x2 * max(gap, 0.0)


def sdnr(alpha, gamma):
    """Signal-to-distortion ratio alpha**2/(gamma - alpha**2).

    Returns ``math.inf`` in the distortion-free limit gamma == alpha**2.
    """
    a2 = alpha * alpha
    if not a2 > 0.0:
        raise ValueError("alpha must be nonzero")
    gap = gamma - a2
    if gap < -_CONSISTENCY_TOL * max(1.0, a2):
        raise ValueError(f"inconsistent factors: gamma={gamma} < alpha^2={a2}")
    if gap <= 0.0:
        return math.inf
    return a2 / gap


def bussgang_factors(q, sigma_x):
    """All linearization coefficients of ``q`` at input std sigma_x."""
    a = bussgang_alpha(q, sigma_x)
    g = power_gain_gamma(q, sigma_x)
    return BussgangFactors(
        alpha=a,
        gamma=g,
        distortion_power=distortion_power(a, g, sigma_x * sigma_x),
        sdnr=sdnr(a, g),
    )


def _sdnr_objective(levels, step_norm):
    """alpha**2/gamma at unit variance; the quantity maximized over the step."""
    a = _alpha_normalized(levels, step_norm)
    return a * a / _gamma_normalized(levels, step_norm)


def _golden_max(f, lo, hi, tol):
    """Golden-section maximization of a unimodal f on [lo, hi]."""
    inv_phi = 0.5 * (math.sqrt(5.0) - 1.0)
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = f(c)
    fd = f(d)
    while b - a > tol:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
    return 0.5 * (a + b)


@lru_cache(maxsize=None)
def _optimal_step_cached(levels):
    grid = np.arange(_COARSE_RES, _SEARCH_HI + 0.5 * _COARSE_RES, _COARSE_RES)
    best_val = -np.inf
    best_idx = 0
    # Chunked scan keeps the (L/2 x grid) exponential table small for deep
    # quantizers.
    chunk = max(1, int(4e6 // max(levels, 2)))
    for start in range(0, grid.size, chunk):
        seg = grid[start : start + chunk]
        vals = _sdnr_objective(levels, seg)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = float(vals[i])
            best_idx = start + i
    lo = float(grid[best_idx - 1]) if best_idx > 0 else _COARSE_RES * 1e-3
    hi = float(grid[best_idx + 1]) if best_idx + 1 < grid.size else _SEARCH_HI
    return _golden_max(lambda d: _sdnr_objective(levels, d), lo, hi, _REFINE_TOL)


def optimal_step(levels):
    """SDNR-optimal normalized step (step/sigma_x) for an L-level quantizer.

    Solved by a coarse grid scan over (0, 8] followed by golden-section
    refinement.  For levels == 2 the objective is flat in the step; the
    canonical minimum-distortion value 2*sqrt(2/pi) is returned and a
    FlatObjectiveWarning is issued.
    """
    if levels < 2 or levels % 2 != 0:
        raise ValueError(f"levels must be even and >= 2, got {levels}")
    if levels == 2:
        warnings.warn(
            "SDNR objective is constant in the step for a 2-level quantizer; "
            "returning the canonical minimum-distortion step 2*sqrt(2/pi)",
            FlatObjectiveWarning,
            stacklevel=2,
        )
        return _TWO_LEVEL_STEP
    return _optimal_step_cached(levels)
