import math

import numpy as np
import pytest

from logbound import (Field, Grid, NoConvergence, field_from_binary,
                      field_from_csv, field_from_function, field_to_binary,
                      field_to_csv, gaussian_field, inner, integrate,
                      laplacian, solve_shifted, zeros_like)

RNG = np.random.default_rng(42)


def test_grid_invariants():
    g = Grid(mode="full", dim=2, n=33, half_width=4.0)
    assert g.h > 0
    assert np.all(g.weights > 0)
    assert np.sum(g.weights) == pytest.approx((2 * 4.0) ** 2, rel=1e-12)
    r = Grid(mode="radial", dim=3, n=65, half_width=4.0)
    assert r.points[0, 0] == 0.0
    assert np.all(r.weights > 0)
    ball = 4.0 / 3.0 * math.pi * 4.0**3
    assert np.sum(r.weights) == pytest.approx(ball, rel=1e-12)
    with pytest.raises(ValueError):
        Grid(mode="full", dim=4, n=33, half_width=4.0)
    with pytest.raises(ValueError):
        Grid(mode="full", dim=1, n=8, half_width=4.0)


def test_field_enforces_dirichlet_boundary():
    g = Grid(mode="full", dim=1, n=17, half_width=2.0)
    f = Field(g, np.ones(g.size))
    assert f.values[0] == 0.0 and f.values[-1] == 0.0
    with pytest.raises(ValueError):
        Field(g, np.full(g.size, np.nan))


def test_integrate_examples():
    g = Grid(mode="full", dim=1, n=129, half_width=3.0)
    ones = field_from_function(g, lambda p: np.ones(p.shape[0]), dirichlet=False)
    assert integrate(ones) == pytest.approx(6.0, rel=1e-12)

    g = Grid(mode="full", dim=1, n=2049, half_width=9.0)
    f = field_from_function(g, lambda p: np.exp(-np.sum(p * p, axis=1)))
    assert integrate(f) == pytest.approx(math.sqrt(math.pi), abs=1e-8)

    r = Grid(mode="radial", dim=2, n=8193, half_width=9.0)
    f = field_from_function(r, lambda p: np.exp(-np.sum(p * p, axis=1)))
    assert integrate(f) == pytest.approx(math.pi, abs=1e-6)


def test_quadrature_order():
    # halving h cuts the error of a smooth compactly supported integrand by >= 3.5
    def bump(p):
        d2 = np.sum(p * p, axis=1) / 4.0
        out = np.zeros(p.shape[0])
        m = d2 < 1.0
        out[m] = np.exp(-1.0 / (1.0 - d2[m]))
        return out

    for mode, dim in (("full", 1), ("radial", 3)):
        vals = []
        for n in (33, 65, 129, 4097):
            g = Grid(mode=mode, dim=dim, n=n, half_width=3.0)
            vals.append(integrate(field_from_function(g, bump)))
        ref = vals[-1]
        e1, e2 = abs(vals[0] - ref), abs(vals[1] - ref)
        assert e1 / max(e2, 1e-16) >= 3.5


def test_laplacian_examples():
    g = Grid(mode="full", dim=1, n=513, half_width=6.0)
    assert np.all(laplacian(zeros_like(g)).values == 0.0)

    g = Grid(mode="full", dim=1, n=4097, half_width=10.0)
    u = field_from_function(g, lambda p: np.exp(-0.5 * np.sum(p * p, axis=1)))
    lap = laplacian(u)
    i0 = int(np.argmin(np.abs(g.points[:, 0])))
    assert lap.values[i0] / u.values[i0] == pytest.approx(-1.0, abs=1e-4)

    r = Grid(mode="radial", dim=3, n=2049, half_width=8.0)
    u = field_from_function(r, lambda p: np.exp(-0.5 * np.sum(p * p, axis=1)))
    assert laplacian(u).values[0] == pytest.approx(-3.0 * u.values[0], abs=1e-3)


def test_laplacian_radial_interior_consistency():
    # lap e^{-r^2/2} = (r^2 - N) e^{-r^2/2}
    for dim in (1, 2, 3, 5):
        r = Grid(mode="radial", dim=dim, n=4097, half_width=8.0)
        u = field_from_function(r, lambda p: np.exp(-0.5 * np.sum(p * p, axis=1)))
        lap = laplacian(u).values
        rr = r.points[:, 0]
        expect = (rr * rr - dim) * u.values
        m = slice(1, r.size // 2)
        assert np.max(np.abs(lap[m] - expect[m])) < 5e-5


def test_summation_by_parts_and_negativity():
    for mode, dim, n in (("full", 1, 201), ("full", 2, 41), ("full", 3, 21),
                         ("radial", 2, 201), ("radial", 3, 201)):
        g = Grid(mode=mode, dim=dim, n=max(n, 16), half_width=5.0)
        for _ in range(5):
            u = Field(g, RNG.normal(size=g.size))
            v = Field(g, RNG.normal(size=g.size))
            a = inner(u, laplacian(v))
            b = inner(v, laplacian(u))
            assert abs(a - b) <= 1e-12 * max(abs(a), abs(b), 1.0)
            assert inner(u, laplacian(u)) <= 0.0


def test_solve_shifted():
    g = Grid(mode="full", dim=1, n=1025, half_width=8.0)
    assert np.all(solve_shifted(zeros_like(g), 1.0).values == 0.0)

    w = Field(g, RNG.normal(size=g.size))
    rhs = Field(g, -laplacian(w).values + w.values)
    sol = solve_shifted(rhs, 1.0, tol=1e-12)
    assert np.max(np.abs(sol.values - w.values)) < 1e-7

    shift = Field(g, 1.0 + g.points[:, 0] ** 2)
    rhs = Field(g, -laplacian(w).values + shift.values * w.values)
    sol = solve_shifted(rhs, shift, tol=1e-12)
    assert np.max(np.abs(sol.values - w.values)) < 1e-7

    with pytest.raises(ValueError):
        solve_shifted(rhs, 0.0)
    with pytest.raises(NoConvergence):
        solve_shifted(rhs, 1.0, tol=1e-14, max_iters=3)


def test_solve_shifted_radial():
    g = Grid(mode="radial", dim=3, n=513, half_width=8.0)
    w = field_from_function(g, lambda p: np.exp(-np.sum(p * p, axis=1)))
    rhs = Field(g, -laplacian(w).values + 2.0 * w.values)
    sol = solve_shifted(rhs, 2.0, tol=1e-12)
    assert np.max(np.abs(sol.values - w.values)) < 1e-9


def test_csv_roundtrip(tmp_path):
    for mode, dim in (("full", 2), ("radial", 3)):
        g = Grid(mode=mode, dim=dim, n=17 if mode == "full" else 65, half_width=3.0)
        u = gaussian_field(g, width=0.7, amplitude=2.0)
        path = tmp_path / f"{mode}.csv"
        field_to_csv(u, path)
        v = field_from_csv(g, path)
        assert np.array_equal(u.values, v.values)
        header = path.read_text().splitlines()[0]
        if mode == "radial":
            assert header == "r,value"
        else:
            assert header == "y1,y2,value"


def test_binary_roundtrip(tmp_path):
    g = Grid(mode="radial", dim=2, n=65, half_width=4.0)
    u = gaussian_field(g)
    path = tmp_path / "f.bin"
    field_to_binary(u, path)
    v = field_from_binary(path)
    assert v.grid == g
    assert np.array_equal(u.values, v.values)
