"""Closed-form limit objects and a-posteriori diagnostics.

The autonomous problem -Lap v + a v = b v log v^2 has (up to translation) the
unique positive solution

    U_{a,b}(y) = exp(a/(2b)) * exp(N/2) * exp(-b |y|^2 / 2),

with ground-state level m(a,b) = (1/2) e^(a/b) b^(1-N/2) e^N pi^(N/2); for
b = 1 this is the strictly increasing map a -> (e^a/2) e^N pi^(N/2).  These
exact profiles and levels are the oracles against which computed critical
points are checked; quadrature validates the grid, not the other way around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from numpy.typing import NDArray

from .errors import EmptyAnnulus, ZeroMass
from .grid import Field, Grid, inner, laplacian
from .penalty import BallDomain, BoxDomain
from .potentials import Potential, ShiftedPotential

__all__ = ["LimitProfile", "DecayFit", "limit_profile", "m_level",
           "gauge_shift", "auto_gauge_constant", "locate_concentration",
           "decay_fit", "profile_distance", "barycenter"]


# ---------------------------------------------------------------------------
# Closed-form ground states
# ---------------------------------------------------------------------------

def m_level(a: float, b: float = 1.0, dim: int = 1) -> float:
    """Least critical level of the autonomous problem."""
    if b <= 0:
        raise ValueError("b must be positive")
    u2 = math.exp(dim) * math.pi ** (dim / 2.0)  # squared L2 mass of the b=1 profile
    return 0.5 * math.exp(a / b) * b ** (1.0 - dim / 2.0) * u2


@dataclass(frozen=True)
class LimitProfile:
    """Gaussian ground state of the autonomous problem with constants (a, b)."""

    a: float
    b: float = 1.0
    dim: int = 1

    @property
    def amplitude(self) -> float:
        return math.exp(self.a / (2.0 * self.b) + self.dim / 2.0)

    @property
    def level(self) -> float:
        return m_level(self.a, self.b, self.dim)

    def profile(self, y, center=None) -> NDArray:
        pts = np.atleast_2d(np.asarray(y, dtype=float))
        c = np.zeros(pts.shape[1]) if center is None else np.asarray(center, dtype=float)
        d2 = np.sum((pts - c) ** 2, axis=1)
        return self.amplitude * np.exp(-0.5 * self.b * d2)

    def sample(self, grid: Grid, center=None) -> Field:
        return Field(grid, self.profile(grid.points, center))


def limit_profile(a: float, b: float = 1.0, dim: int = 1) -> LimitProfile:
    if b <= 0:
        raise ValueError("b must be positive")
    return LimitProfile(a=a, b=b, dim=dim)


# ---------------------------------------------------------------------------
# Gauge shift
# ---------------------------------------------------------------------------

def gauge_shift(V: Potential, c: float, K: Potential | None = None):
    """Shift the linear part by c (by c*K with a competing coefficient).

    Returns the shifted potential and the multiplier exp(-c/2): solving with
    V + c and scaling the solution by the multiplier solves the problem
    for V.
    """
    if c == 0.0:
        return V, 1.0
    return ShiftedPotential(V, c, K), math.exp(-0.5 * c)


def auto_gauge_constant(V: Potential, grid: Grid, eps: float, r0: float,
                        K: Potential | None = None) -> float:
    """Smallest c >= 0 with V + c*K >= 1 on the grid nodes inside B(0, R0)."""
    x = eps * grid.points
    ball = grid.norms * eps <= r0
    v = np.asarray(V.evaluate(x[ball]), dtype=float)
    k = np.ones(v.size) if K is None else np.asarray(K.evaluate(x[ball]), dtype=float)
    if np.any(k <= 0.0):
        raise ValueError("K must be positive for the gauge shift")
    return float(max(0.0, np.max((1.0 - v) / k)))


# ---------------------------------------------------------------------------
# Concentration and decay diagnostics
# ---------------------------------------------------------------------------

def _refine_peak(vals: NDArray, idx: int, n: int) -> float:
    """Sub-grid peak offset in units of h from a 3-point parabola."""
    if idx <= 0 or idx >= n - 1:
        return 0.0
    fm, f0, fp = vals[idx - 1], vals[idx], vals[idx + 1]
    denom = fp - 2.0 * f0 + fm
    if denom >= 0.0:
        return 0.0
    delta = 0.5 * (fm - fp) / denom
    return float(np.clip(delta, -0.5, 0.5))


def locate_concentration(u: Field, spec) -> NDArray:
    """Quadratically refined argmax in original coordinates.

    Ties break to the lexicographically first node.  Radial mode returns the
    single radial coordinate eps * r*.
    """
    vals = np.abs(u.values)
    if not np.any(vals > 0):
        raise ValueError("cannot locate the concentration point of a zero field")
    grid = u.grid
    flat = int(np.argmax(vals))
    if grid.mode == "radial":
        delta = _refine_peak(vals, flat, grid.n)
        if flat == 0:
            delta = 0.0  # symmetric limit: peak at the origin stays there
        r_star = grid.points[flat, 0] + delta * grid.h
        return np.array([spec.cfg.eps * r_star])
    shape = (grid.n,) * grid.dim
    multi = np.unravel_index(flat, shape)
    arr = vals.reshape(shape)
    coords = np.empty(grid.dim)
    for ax in range(grid.dim):
        line = arr[tuple(multi[:ax]) + (slice(None),) + tuple(multi[ax + 1:])]
        delta = _refine_peak(line, multi[ax], grid.n)
        coords[ax] = -grid.half_width + (multi[ax] + delta) * grid.h
    return spec.cfg.eps * coords


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log u against dist^(2-kappa) over an annulus."""

    slope: float
    intercept: float
    r_squared: float
    annulus: tuple[float, float]
    n_nodes: int
    kappa: float = 0.0

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r_squared}


def decay_fit(u: Field, center, annulus: tuple[float, float] = (2.0, 4.0),
              kappa: float = 0.0) -> DecayFit:
    """Fit log u ~ intercept + slope * dist^(2-kappa) on an annulus (rescaled
    units, distances from ``center``).

    The outermost 10% of the grid is excluded: the Dirichlet truncation
    contaminates the tail.  Raises EmptyAnnulus below 20 usable nodes.
    r_squared is reported as computed, never thresholded.
    """
    grid = u.grid
    c = np.asarray(center, dtype=float)
    if c.size < grid.dim:
        c = np.concatenate([c, np.zeros(grid.dim - c.size)])
    dist = np.sqrt(np.sum((grid.points - c) ** 2, axis=1))
    r1, r2 = annulus
    mask = (dist >= r1) & (dist <= r2) & (u.values > 0.0) \
        & (grid.norms <= 0.9 * grid.half_width)
    n_nodes = int(np.count_nonzero(mask))
    if n_nodes < 20:
        raise EmptyAnnulus(f"only {n_nodes} usable nodes in annulus {annulus}")
    x = dist[mask] ** (2.0 - kappa)
    y = np.log(u.values[mask])
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    sxy = float(np.sum((x - xm) * (y - ym)))
    slope = sxy / sxx if sxx > 0 else 0.0
    intercept = ym - slope * xm
    ss_res = float(np.sum((y - intercept - slope * x) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    if ss_tot <= 1e-28 * max(1.0, float(np.sum(y * y))):
        # constant data up to roundoff: a perfect flat fit
        return DecayFit(0.0, float(ym), 1.0, (r1, r2), n_nodes, kappa)
    r_sq = 1.0 - ss_res / ss_tot
    return DecayFit(slope, intercept, r_sq, (r1, r2), n_nodes, kappa)


def profile_distance(u: Field, spec, profile: LimitProfile,
                     center=None) -> float:
    """H1 distance between u and the profile recentered at u's peak."""
    if center is None:
        x_star = locate_concentration(u, spec)
        center = x_star / spec.cfg.eps
    p = profile.sample(u.grid, center=center)
    diff = u - p
    quad = -inner(diff, laplacian(diff)) + inner(diff, diff)
    return math.sqrt(max(quad, 0.0))


WindowLike = Union[None, BallDomain, BoxDomain, Callable[[NDArray], NDArray]]


def barycenter(u: Field, spec, p: float = 3.0, window: WindowLike = None) -> NDArray:
    """Windowed p-moment centroid in original coordinates.

    The window is a domain object or a predicate over original-coordinate
    points; both numerator and denominator are restricted to it, so a window
    missing the support raises ZeroMass.  Meaningful in full mode (a radial
    field yields the first moment of the radial profile).
    """
    grid = u.grid
    if p <= 2.0:
        raise ValueError("moment exponent must exceed 2")
    if grid.dim >= 3 and p >= 2.0 * grid.dim / (grid.dim - 2.0):
        raise ValueError("moment exponent must stay below the critical exponent")
    x = spec.cfg.eps * grid.points
    if window is None:
        mask = np.ones(grid.size, dtype=bool)
    elif hasattr(window, "contains"):
        mask = np.asarray(window.contains(x), dtype=bool)
    else:
        mask = np.asarray(window(x), dtype=bool)
    dens = grid.weights[mask] * np.abs(u.values[mask]) ** p
    den = float(np.sum(dens))
    if den <= 0.0 or not math.isfinite(den):
        raise ZeroMass("no mass of |u|^p inside the window")
    num = dens @ x[mask]
    return num / den
