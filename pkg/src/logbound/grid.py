"""Discretization of the rescaled domain.

Two modes:

* ``full``  -- tensor grid on [-L, L]^N (N <= 3), homogeneous Dirichlet on the
  box boundary, second-order central Laplacian, trapezoidal (cell) weights.
* ``radial`` -- grid on [0, L] for radially symmetric fields in any dimension,
  conservative flux form of u'' + (N-1)/r u'.  At r = 0 the flux form reduces
  to the symmetric limit N*u''(0); quadrature weights are exact cell measures
  of r^(N-1) dr times the unit-sphere area, so they are positive and sum to
  the measure of the ball.

Both modes make integrate(u * laplacian(v)) exactly symmetric and negative
semi-definite for Dirichlet fields, which the energy/gradient consistency of
the variational solver relies on.  Reductions are fixed-order numpy sums, so
results do not depend on any parallel schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from numpy.typing import NDArray

from .errors import NoConvergence

__all__ = ["Grid", "Field", "laplacian", "integrate", "inner", "solve_shifted",
           "field_from_function", "gaussian_field", "zeros_like",
           "field_to_csv", "field_from_csv", "field_to_binary", "field_from_binary"]


def _sphere_area(n_dim: int) -> float:
    # |S^{N-1}|; equals 2 for N=1 (two half lines), 2*pi, 4*pi, ...
    return 2.0 * math.pi ** (n_dim / 2.0) / math.gamma(n_dim / 2.0)


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable discretization of the rescaled coordinates y = x/eps."""

    mode: str           # "full" | "radial"
    dim: int            # spatial dimension N
    n: int              # points per axis (full) / radial nodes
    half_width: float   # L

    def __eq__(self, other):
        return (isinstance(other, Grid) and self.mode == other.mode
                and self.dim == other.dim and self.n == other.n
                and self.half_width == other.half_width)

    def __hash__(self):
        return hash((self.mode, self.dim, self.n, self.half_width))

    h: float = field(init=False)
    points: NDArray = field(init=False, repr=False)   # (M, N), radial embedded on axis 1
    norms: NDArray = field(init=False, repr=False)    # (M,)
    weights: NDArray = field(init=False, repr=False)  # (M,) quadrature weights
    boundary: NDArray = field(init=False, repr=False)  # (M,) bool

    def __post_init__(self):
        if self.mode not in ("full", "radial"):
            raise ValueError(f"unknown grid mode {self.mode!r}")
        if self.n < 16:
            raise ValueError("need at least 16 points per axis")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.mode == "full" and self.dim > 3:
            raise ValueError("full tensor grids are capped at N = 3; use radial mode")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

        if self.mode == "full":
            h = 2.0 * self.half_width / (self.n - 1)
            axis = -self.half_width + h * np.arange(self.n)
            mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=1)
            w1 = np.full(self.n, h)
            w1[0] = w1[-1] = 0.5 * h
            w = w1.copy()
            for _ in range(self.dim - 1):
                w = np.multiply.outer(w, w1).ravel()
            idx = np.arange(self.n)
            edge1 = (idx == 0) | (idx == self.n - 1)
            bmask = edge1.copy()
            for _ in range(self.dim - 1):
                bmask = (np.add.outer(bmask, edge1) > 0).ravel()
        else:
            h = self.half_width / (self.n - 1)
            r = h * np.arange(self.n)
            pts = np.zeros((self.n, self.dim))
            pts[:, 0] = r
            faces = np.minimum(r + 0.5 * h, self.half_width)  # rho_{i+1/2}
            lower = np.concatenate(([0.0], faces[:-1]))
            cells = (faces ** self.dim - lower ** self.dim) / self.dim
            w = _sphere_area(self.dim) * cells
            bmask = np.zeros(self.n, dtype=bool)
            bmask[-1] = True
            object.__setattr__(self, "_face_areas", faces[:-1] ** (self.dim - 1))
            object.__setattr__(self, "_cells", cells)

        object.__setattr__(self, "h", h)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "norms", np.sqrt(np.sum(pts * pts, axis=1)))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "boundary", bmask)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def zero_boundary(self, values: NDArray) -> NDArray:
        out = np.array(values, dtype=float)
        out[self.boundary] = 0.0
        return out


@dataclass
class Field:
    """Real-valued function sampled on a grid.

    Solver fields carry homogeneous Dirichlet data (boundary nodes zero),
    enforced by default; pass enforce_boundary=False for pure quadrature
    samplings of functions that do not vanish on the box edge.
    """

    grid: Grid
    values: NDArray
    enforce_boundary: bool = True

    def __post_init__(self):
        if self.enforce_boundary:
            self.values = self.grid.zero_boundary(self.values)
        else:
            self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - other.values)

    def __mul__(self, s: float) -> "Field":
        return Field(self.grid, self.values * s)

    __rmul__ = __mul__

    def __abs__(self) -> "Field":
        return Field(self.grid, np.abs(self.values))


def zeros_like(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.size))


def field_from_function(grid: Grid, fn: Callable[[NDArray], NDArray],
                        dirichlet: bool = True) -> Field:
    """Sample fn over the grid points (fn takes an (M, N) array)."""
    return Field(grid, np.asarray(fn(grid.points), dtype=float),
                 enforce_boundary=dirichlet)


def gaussian_field(grid: Grid, center=None, width: float = 1.0, amplitude: float = 1.0) -> Field:
    c = np.zeros(grid.dim) if center is None else np.asarray(center, dtype=float)
    d2 = np.sum((grid.points - c) ** 2, axis=1)
    return Field(grid, amplitude * np.exp(-0.5 * d2 / (width * width)))


# ---------------------------------------------------------------------------
# Stencils and quadrature
# ---------------------------------------------------------------------------

def _laplacian_values(grid: Grid, v: NDArray) -> NDArray:
    if grid.mode == "full":
        shape = (grid.n,) * grid.dim
        vv = v.reshape(shape)
        out = np.zeros(shape)
        inv_h2 = 1.0 / (grid.h * grid.h)
        for ax in range(grid.dim):
            c = [slice(None)] * grid.dim
            m = [slice(None)] * grid.dim
            p = [slice(None)] * grid.dim
            c[ax] = slice(1, -1)
            m[ax] = slice(0, -2)
            p[ax] = slice(2, None)
            out[tuple(c)] += (vv[tuple(p)] - 2.0 * vv[tuple(c)] + vv[tuple(m)]) * inv_h2
        return grid.zero_boundary(out.ravel())
    # radial flux form; cell measures carry the radial h
    flux = grid._face_areas * np.diff(v) / grid.h     # at faces i+1/2
    out = np.zeros_like(v)
    out[0] = flux[0] / grid._cells[0]
    out[1:-1] = (flux[1:] - flux[:-1]) / grid._cells[1:-1]
    out[-1] = 0.0
    return out


def laplacian(u: Field) -> Field:
    """Second-order Laplacian respecting the Dirichlet boundary."""
    return Field(u.grid, _laplacian_values(u.grid, u.values))


def integrate(f: Field) -> float:
    """Quadrature sum over the grid."""
    return float(np.dot(f.grid.weights, f.values))


def inner(u: Field, v: Field) -> float:
    """Weighted L2 inner product."""
    return float(np.dot(u.grid.weights, u.values * v.values))


def l2_norm(u: Field) -> float:
    return math.sqrt(max(inner(u, u), 0.0))


# ---------------------------------------------------------------------------
# Shifted-Laplacian solver (descent preconditioner)
# ---------------------------------------------------------------------------

def solve_shifted(rhs: Field, shift: Union[Field, float], tol: float = 1e-10,
                  max_iters: int | None = None) -> Field:
    """Conjugate gradients on (-Lap + shift) w = rhs, to relative residual tol.

    The operator is symmetric positive definite in the quadrature inner
    product provided shift > 0 pointwise, which the gauge normalization
    guarantees (the truncated potential is >= 1).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = rhs.grid
    s = shift.values if isinstance(shift, Field) else np.full(grid.size, float(shift))
    if np.min(s[~grid.boundary]) <= 0.0:
        raise ValueError("shift must be positive for a definite operator")
    w = grid.weights
    b = rhs.values

    def apply(x: NDArray) -> NDArray:
        out = -_laplacian_values(grid, x) + s * x
        out[grid.boundary] = 0.0
        return out

    bnorm = math.sqrt(float(np.dot(w, b * b)))
    if bnorm == 0.0:
        return zeros_like(grid)
    if max_iters is None:
        max_iters = 2 * grid.size + 200

    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(np.dot(w, r * r))
    for _ in range(max_iters):
        ap = apply(p)
        denom = float(np.dot(w, p * ap))
        if denom <= 0.0:
            break  # loss of definiteness from roundoff; return current iterate
        alpha = rs / denom
        x += alpha * p
        r -= alpha * ap
        rs_new = float(np.dot(w, r * r))
        if math.sqrt(rs_new) <= tol * bnorm:
            return Field(grid, x)
        p = r + (rs_new / rs) * p
        rs = rs_new
    if math.sqrt(rs) <= tol * bnorm:
        return Field(grid, x)
    raise NoConvergence(max_iters, math.sqrt(rs) / bnorm, "conjugate gradient")


# ---------------------------------------------------------------------------
# Dumps
# ---------------------------------------------------------------------------

def field_to_csv(u: Field, path) -> None:
    grid = u.grid
    if grid.mode == "radial":
        header = "r,value"
        data = np.column_stack([grid.norms, u.values])
    else:
        header = ",".join(f"y{i + 1}" for i in range(grid.dim)) + ",value"
        data = np.column_stack([grid.points, u.values])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def field_from_csv(grid: Grid, path) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.size:
        raise ValueError(f"csv has {data.shape[0]} rows, grid has {grid.size} nodes")
    return Field(grid, data[:, -1])


_BINARY_MAGIC = 0x4C42464C  # arbitrary tag guarding the header layout


def field_to_binary(u: Field, path) -> None:
    grid = u.grid
    head = np.array([_BINARY_MAGIC, grid.dim, 0 if grid.mode == "full" else 1, grid.n],
                    dtype="<i8")
    with open(path, "wb") as fh:
        fh.write(head.tobytes())
        fh.write(np.array([grid.half_width], dtype="<f8").tobytes())
        fh.write(u.values.astype("<f8").tobytes())


def field_from_binary(path) -> Field:
    with open(path, "rb") as fh:
        head = np.frombuffer(fh.read(32), dtype="<i8")
        if head[0] != _BINARY_MAGIC:
            raise ValueError("not a field dump")
        half_width = float(np.frombuffer(fh.read(8), dtype="<f8")[0])
        grid = Grid(mode="full" if head[2] == 0 else "radial", dim=int(head[1]),
                    n=int(head[3]), half_width=half_width)
        values = np.frombuffer(fh.read(), dtype="<f8").copy()
    return Field(grid, values)
