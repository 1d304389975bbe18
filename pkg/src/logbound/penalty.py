"""Truncation and cutoff kernels of the penalized energy.

Three penalizations cooperate so that the modified functional is well posed
even when the potential dives to -infinity:

* the potential truncation ``v_tilde`` replaces V outside the ball of radius
  R0 by max(V, |x|^(2-2*kappa)), and ``v_bar = V - v_tilde <= 0`` records what
  was removed;
* the envelope cutoff ``eta_hat`` (built from the C^1 ramp ``eta``) switches
  the removed part back on only where the candidate stays under the envelope
  ``phi``; the resulting correction ``psi_penalty`` is non-positive and
  exponentially small in 1/eps;
* the nonlinearity truncation ``g_cut/G_cut`` caps s*log(s^2) outside the
  concentration domain Omega.

All kernels are pure functions of (point, value, config) and vectorize over
numpy arrays; internal products are formed in the ratio tau = t/phi so that
nothing overflows where phi underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import NDArray

__all__ = ["BallDomain", "BoxDomain", "PenaltyConfig",
           "phi", "eta", "eta_hat", "eta_dt",
           "g_cut", "G_cut", "v_tilde", "v_bar", "f_pen", "F_pen",
           "psi_penalty", "psi_prime_apply", "chi_outside"]

_E_INV = math.exp(-1.0)
_TINY_NORMAL = np.finfo(float).tiny  # smallest positive normal double


# ---------------------------------------------------------------------------
# Domains and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BallDomain:
    """Ball of given radius centered at the origin (original coordinates)."""

    radius: float

    def contains(self, pts: NDArray) -> NDArray:
        return np.sum(pts * pts, axis=1) <= self.radius * self.radius

    @property
    def circumradius(self) -> float:
        return self.radius

    @property
    def inradius(self) -> float:
        return self.radius


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [-a1,a1] x ... x [-aN,aN] centered at the origin."""

    halfwidths: tuple[float, ...]

    def contains(self, pts: NDArray) -> NDArray:
        hw = np.asarray(self.halfwidths)
        return np.all(np.abs(pts[:, : hw.size]) <= hw, axis=1)

    @property
    def circumradius(self) -> float:
        return float(np.linalg.norm(self.halfwidths))

    @property
    def inradius(self) -> float:
        return float(min(self.halfwidths))


Domain = Union[BallDomain, BoxDomain]


@dataclass(frozen=True)
class PenaltyConfig:
    """Everything defining the penalization: eps, truncation radius R0, the
    concentration domain Omega, decay exponent kappa, and the gauge shift c
    already applied to the potential."""

    eps: float
    r0: float
    omega: Domain
    kappa: float = 0.0
    gauge_c: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.eps):
            raise ValueError("eps must be positive")
        if not (0.0 <= self.kappa < 1.0):
            raise ValueError("kappa must lie in [0, 1)")
        if self.r0 < 1.0:
            raise ValueError("truncation radius R0 must be >= 1 so the "
                             "truncated potential stays >= 1")
        if self.omega.circumradius > 0.5 * self.r0 + 1e-12:
            raise ValueError("Omega must fit inside the ball of radius R0/2")


# ---------------------------------------------------------------------------
# Envelope and ramp kernels (rescaled coordinates)
# ---------------------------------------------------------------------------

def _norms(y) -> NDArray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        return np.array([np.linalg.norm(y)])
    return np.sqrt(np.sum(y * y, axis=1))


def _eps_power(cfg: PenaltyConfig) -> float:
    return cfg.eps ** (1.0 - cfg.kappa)


def phi(y, cfg: PenaltyConfig) -> NDArray | float:
    """Decay envelope exp(-eps^(1-kappa) |y|^(2-kappa)) at rescaled points y.

    y is a single coordinate vector (N,) or an array of points (M, N).
    Clamped at the smallest positive normal double so that ratios t/phi stay
    well defined where the true envelope underflows.
    """
    scalar = np.asarray(y).ndim == 1
    d = _norms(y)
    val = np.exp(-_eps_power(cfg) * d ** (2.0 - cfg.kappa))
    val = np.maximum(val, _TINY_NORMAL)
    return float(val[0]) if scalar else val


def _ramp_tau(tau: NDArray) -> NDArray:
    """phi * eta as a function of tau = t/phi: bounded in [-1/2, 0]."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    m = (tau >= 1.0) & (tau <= 2.0)
    out[m] = -0.25 * (tau[m] - 1.0) ** 2
    m = (tau > 2.0) & (tau <= 4.0)
    out[m] = 0.25 * ((tau[m] - 3.0) ** 2 - 2.0)
    m = (tau > 4.0) & (tau <= 5.0)
    out[m] = -0.25 * (tau[m] - 5.0) ** 2
    return out


def _ramp_tau_prime(tau: NDArray) -> NDArray:
    """phi^2 * (d eta / dt) as a function of tau: bounded in [-1/2, 1/2]."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    m = (tau >= 1.0) & (tau <= 2.0)
    out[m] = -0.5 * (tau[m] - 1.0)
    m = (tau > 2.0) & (tau <= 4.0)
    out[m] = 0.5 * (tau[m] - 3.0)
    m = (tau > 4.0) & (tau <= 5.0)
    out[m] = -0.5 * (tau[m] - 5.0)
    return out


def _cutoff_tau(tau: NDArray) -> NDArray:
    """Closed-form antiderivative cutoff: 1 below tau=1, 0 above tau=5.

    Branchwise symbolic integral of the ramp, never numerical quadrature, so
    the value at tau = 5 is exactly zero.
    """
    tau = np.asarray(tau, dtype=float)
    out = np.empty_like(tau)
    out.fill(0.0)
    out[tau <= 1.0] = 1.0
    m = (tau > 1.0) & (tau <= 2.0)
    out[m] = 1.0 - (tau[m] - 1.0) ** 3 / 12.0
    m = (tau > 2.0) & (tau <= 4.0)
    t3 = (tau[m] - 3.0) ** 3
    out[m] = 11.0 / 12.0 + (t3 + 1.0) / 12.0 - 0.5 * (tau[m] - 2.0)
    m = (tau > 4.0) & (tau <= 5.0)
    t5 = (tau[m] - 5.0) ** 3
    out[m] = 1.0 / 12.0 - (t5 + 1.0) / 12.0
    return out


def _tau(y, t, cfg: PenaltyConfig) -> tuple[NDArray, NDArray]:
    p = np.atleast_1d(np.asarray(phi(y, cfg), dtype=float))
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        tau = np.broadcast_arrays(t / p, p)[0]
    return tau, p


def eta(y, t, cfg: PenaltyConfig):
    """C^1 ramp in t: zero below phi and above 5*phi, scaled by 1/phi."""
    tau, p = _tau(y, t, cfg)
    out = _ramp_tau(tau) / p
    return float(out[0]) if out.size == 1 else out


def eta_dt(y, t, cfg: PenaltyConfig):
    """Partial derivative of the ramp in t; |eta_dt| <= 1/(2 phi^2).

    Saturates instead of overflowing deep in the underflow region of phi.
    """
    tau, p = _tau(y, t, cfg)
    p = np.maximum(p, math.sqrt(_TINY_NORMAL))
    out = _ramp_tau_prime(tau) / (p * p)
    return float(out[0]) if out.size == 1 else out


def eta_hat(y, t, cfg: PenaltyConfig):
    """Envelope cutoff in [0, 1]: 1 for t <= phi(y), 0 for t >= 5 phi(y)."""
    tau, _ = _tau(y, t, cfg)
    out = _cutoff_tau(tau)
    return float(out[0]) if out.size == 1 else out


# ---------------------------------------------------------------------------
# Truncated log nonlinearity
# ---------------------------------------------------------------------------

def _s_log_s2(s: NDArray) -> NDArray:
    # s*log(s^2) with the 0*log(0) = 0 convention
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    nz = s != 0.0
    out[nz] = 2.0 * s[nz] * np.log(np.abs(s[nz]))
    return out


def _s2_log_s2(s: NDArray) -> NDArray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    nz = s != 0.0
    out[nz] = 2.0 * s[nz] * s[nz] * np.log(np.abs(s[nz]))
    return out


def g_cut(s):
    """Odd continuous truncation of s*log(s^2), constant beyond |s| = 1/e."""
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.where(np.abs(arr) <= _E_INV, _s_log_s2(arr), -2.0 * _E_INV * np.sign(arr))
    return float(out[0]) if np.isscalar(s) or np.asarray(s).ndim == 0 else out


def G_cut(s):
    """Even C^1 antiderivative of g_cut, G_cut(0) = 0."""
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    inner = 0.5 * (_s2_log_s2(arr) - arr * arr)
    outer = -2.0 * _E_INV * np.abs(arr) + 0.5 * _E_INV * _E_INV
    out = np.where(np.abs(arr) <= _E_INV, inner, outer)
    return float(out[0]) if np.isscalar(s) or np.asarray(s).ndim == 0 else out


# ---------------------------------------------------------------------------
# Potential truncation (original coordinates)
# ---------------------------------------------------------------------------

def _eval_v(V, pts: NDArray) -> NDArray:
    if hasattr(V, "evaluate"):
        return np.asarray(V.evaluate(pts), dtype=float)
    return np.asarray(V(pts), dtype=float)


def v_tilde(x_orig, V, cfg: PenaltyConfig):
    """Truncated potential: V inside B(0,R0), max(V, |x|^(2-2 kappa)) outside."""
    pts = np.atleast_2d(np.asarray(x_orig, dtype=float))
    v = _eval_v(V, pts)
    d = np.sqrt(np.sum(pts * pts, axis=1))
    grow = d ** (2.0 - 2.0 * cfg.kappa)
    out = np.where(d < cfg.r0, v, np.maximum(v, grow))
    return float(out[0]) if np.asarray(x_orig).ndim == 1 else out


def v_bar(x_orig, V, cfg: PenaltyConfig):
    """V - v_tilde: non-positive, zero inside B(0,R0)."""
    pts = np.atleast_2d(np.asarray(x_orig, dtype=float))
    v = _eval_v(V, pts)
    out = v - np.atleast_1d(v_tilde(pts, V, cfg))
    return float(out[0]) if np.asarray(x_orig).ndim == 1 else out


def chi_outside(x_orig, cfg: PenaltyConfig) -> NDArray:
    """Indicator of the complement of Omega (1 outside, 0 inside)."""
    pts = np.atleast_2d(np.asarray(x_orig, dtype=float))
    return np.where(cfg.omega.contains(pts), 0.0, 1.0)


def f_pen(x_orig, s, cfg: PenaltyConfig):
    """Penalized nonlinearity: s*log(s^2) inside Omega, g_cut outside."""
    pts = np.atleast_2d(np.asarray(x_orig, dtype=float))
    s_arr = np.broadcast_to(np.asarray(s, dtype=float), (pts.shape[0],)).copy()
    ch = chi_outside(pts, cfg)
    out = (1.0 - ch) * _s_log_s2(s_arr) + ch * np.atleast_1d(g_cut(s_arr))
    return float(out[0]) if np.asarray(x_orig).ndim == 1 else out


def F_pen(x_orig, s, cfg: PenaltyConfig):
    """Antiderivative of f_pen in s."""
    pts = np.atleast_2d(np.asarray(x_orig, dtype=float))
    s_arr = np.broadcast_to(np.asarray(s, dtype=float), (pts.shape[0],)).copy()
    ch = chi_outside(pts, cfg)
    inner = 0.5 * (_s2_log_s2(s_arr) - s_arr * s_arr)
    out = (1.0 - ch) * inner + ch * np.atleast_1d(G_cut(s_arr))
    return float(out[0]) if np.asarray(x_orig).ndim == 1 else out


# ---------------------------------------------------------------------------
# The non-positive correction functional and its derivative
# ---------------------------------------------------------------------------

def _vbar_tau(u, cfg: PenaltyConfig, V):
    grid = u.grid
    x = cfg.eps * grid.points
    vb = np.atleast_1d(v_bar(x, V, cfg))
    mask = vb != 0.0
    tau = np.zeros(grid.size)
    if np.any(mask):
        p = np.atleast_1d(phi(grid.points[mask], cfg))
        with np.errstate(over="ignore"):
            tau[mask] = np.abs(u.values[mask]) / p
    return vb, mask, tau


def psi_penalty(u, cfg: PenaltyConfig, V) -> float:
    """(1/2) integral of v_bar * eta_hat(|u|) * u^2: non-positive, and zero
    whenever |u| <= phi fails nowhere that v_bar is active."""
    vb, mask, tau = _vbar_tau(u, cfg, V)
    if not np.any(mask):
        return 0.0
    w = u.grid.weights[mask]
    dens = vb[mask] * _cutoff_tau(tau[mask]) * u.values[mask] ** 2
    return 0.5 * float(np.dot(w, dens))


def psi_prime_density(u, cfg: PenaltyConfig, V) -> NDArray:
    """Node values D such that psi'(u) v = integral(D * v).

    D = v_bar * (eta_hat(|u|) + (1/2) ramp(tau) * tau) * u, assembled in
    tau space so the 1/phi factors cancel exactly.
    """
    vb, mask, tau = _vbar_tau(u, cfg, V)
    out = np.zeros(u.grid.size)
    if np.any(mask):
        tm = tau[mask]
        factor = _cutoff_tau(tm) + 0.5 * _ramp_tau(tm) * np.where(np.isfinite(tm), tm, 0.0)
        out[mask] = vb[mask] * factor * u.values[mask]
    return out


def psi_prime_apply(u, v, cfg: PenaltyConfig, V) -> float:
    """Directional derivative of psi_penalty at u along v."""
    dens = psi_prime_density(u, cfg, V)
    return float(np.dot(u.grid.weights, dens * v.values))
