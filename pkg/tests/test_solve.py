import math

import numpy as np
import pytest

from logbound import (BadEndpoint, BallDomain, ConstantPotential, Field, Grid,
                      NoBracket, PenaltyConfig,
                      ProblemSpec, SaddleUnbounded, SolveOptions,
                      TrivialCollapse, continuation_sweep,
                      h_eps_norm, inner, limit_profile, m_level,
                      mountain_pass_level, nehari_scale, saddle_minmax,
                      solve_critical)
from logbound.functional import energy as energy_fn
from logbound.penalty import _s2_log_s2
from logbound.solve import _bump_field, _constraint_value

RNG = np.random.default_rng(23)


def autonomous_spec(a=2.0, n=8193, L=16.0):
    cfg = PenaltyConfig(eps=1.0, r0=5.0, omega=BallDomain(2.4), gauge_c=0.0)
    grid = Grid(mode="full", dim=1, n=n, half_width=L)
    return ProblemSpec(potential=ConstantPotential(a), cfg=cfg, grid=grid)


def v0_spec(eps=0.25, n=1024):
    cfg = PenaltyConfig(eps=eps, r0=3.0, omega=BallDomain(1.0), gauge_c=1.0)
    grid = Grid(mode="full", dim=1, n=n, half_width=max(2 * 3.0 / eps, 12.0))
    return ProblemSpec(potential=ConstantPotential(0.0), cfg=cfg, grid=grid)


def test_nehari_at_closed_form_is_identity():
    spec = autonomous_spec()
    ua = limit_profile(2.0, 1.0, 1).sample(spec.grid)
    t, w = nehari_scale(ua, spec)
    assert abs(t - 1.0) <= 1e-6
    # manifold membership: the constraint vanishes against the norm scale
    quad = h_eps_norm(w, spec) ** 2
    assert abs(_constraint_value(1.0, w, spec, quad)) <= 1e-10 * quad


def test_nehari_closed_form_and_double():
    spec = autonomous_spec(n=513, L=10.0)
    grid = spec.grid
    for _ in range(5):
        vals = np.zeros(grid.size)
        for _ in range(2):
            c = RNG.uniform(-1.0, 1.0)
            w = RNG.uniform(0.3, 0.8)
            a = RNG.uniform(0.2, 2.0)
            vals += a * np.exp(-0.5 * (grid.points[:, 0] - c) ** 2 / (w * w))
        vals[np.abs(grid.points[:, 0]) > 2.3] = 0.0
        u = Field(grid, vals)
        A = h_eps_norm(u, spec) ** 2
        B = inner(u, u)
        D = float(np.dot(grid.weights, _s2_log_s2(u.values)))
        t_closed = math.exp((A - D) / (2.0 * B))
        t_num, _ = nehari_scale(u, spec)
        assert abs(t_num - t_closed) / t_closed <= 1e-10
        # doubling the field halves the scaling (closed-form correction)
        t2, _ = nehari_scale(Field(grid, 2.0 * u.values), spec)
        assert t2 == pytest.approx(0.5 * t_num, rel=1e-9)


def test_nehari_no_bracket_outside_domain():
    # a narrow bump living entirely where the nonlinearity is capped never
    # crosses the manifold: the scan must report its trace
    spec = v0_spec()
    grid = spec.grid
    vals = np.exp(-0.5 * (grid.points[:, 0] - 8.0) ** 2 / 0.09)
    with pytest.raises(NoBracket) as ei:
        nehari_scale(Field(grid, vals), spec)
    assert len(ei.value.trace) > 5


def test_solve_zero_seed_collapses():
    spec = v0_spec()
    with pytest.raises(TrivialCollapse):
        solve_critical(spec, SolveOptions(seed=Field(spec.grid, np.zeros(spec.grid.size))))


def test_solve_constant_potential():
    spec = v0_spec()
    rep = solve_critical(spec, SolveOptions())
    m0 = 0.5 * math.e * math.sqrt(math.pi)
    assert rep.converged
    assert not rep.penalization_active
    assert rep.d_est == pytest.approx(m0, rel=1e-3)
    assert rep.residual_pen <= 1e-8
    assert rep.residual_orig <= 1e-7
    # positivity and the manifold norm floor
    assert np.all(rep.u.values >= 0.0)
    assert rep.nehari_norm_floor_ok
    assert h_eps_norm(rep.u, spec) >= spec.cfg.eps ** 2
    # accepted steps never increase the energy (up to the roundoff allowance)
    gh = rep.gamma_history
    assert all(b <= a + 1e-11 * max(abs(a), 1.0) for a, b in zip(gh, gh[1:]))
    # profile comparison against the limit ground state
    assert rep.profile_a == pytest.approx(0.0, abs=1e-12)
    assert rep.profile_dist <= 1e-2
    assert abs(rep.x_eps[0]) <= 1e-8


def test_solve_radial_mode():
    cfg = PenaltyConfig(eps=0.25, r0=3.0, omega=BallDomain(1.0), gauge_c=1.0)
    grid = Grid(mode="radial", dim=2, n=1024, half_width=24.0)
    spec = ProblemSpec(potential=ConstantPotential(0.0), cfg=cfg, grid=grid)
    rep = solve_critical(spec, SolveOptions())
    assert rep.d_est == pytest.approx(m_level(0.0, 1.0, 2), rel=1e-3)
    assert not rep.penalization_active


def test_recovery_soundness():
    spec = v0_spec()
    opts = SolveOptions()
    rep = solve_critical(spec, opts)
    if not rep.penalization_active:
        assert rep.residual_orig <= 10.0 * opts.tol_residual


def test_sweep_single_entry_matches_solve():
    entries = continuation_sweep(lambda e: v0_spec(eps=e), [0.25], SolveOptions())
    assert len(entries) == 1
    rep = entries[0]["report"]
    direct = solve_critical(v0_spec(eps=0.25), SolveOptions())
    assert rep.d_est == direct.d_est


def test_sweep_validation_and_error_rows():
    with pytest.raises(ValueError):
        continuation_sweep(lambda e: v0_spec(eps=e), [], SolveOptions())
    with pytest.raises(ValueError):
        continuation_sweep(lambda e: v0_spec(eps=e), [0.1, 0.2], SolveOptions())

    def make(eps):
        if eps < 0.2:
            raise ValueError("deliberately broken spec")
        return v0_spec(eps=eps)

    entries = continuation_sweep(make, [0.25, 0.1], SolveOptions())
    assert "report" in entries[0]
    assert "error" in entries[1]
    assert "ValueError" in entries[1]["error"]


def test_sweep_warm_start_converges_faster():
    entries = continuation_sweep(lambda e: v0_spec(eps=e), [0.5, 0.25], SolveOptions())
    cold = solve_critical(v0_spec(eps=0.25), SolveOptions())
    warm_iters = entries[1]["report"].iterations
    assert warm_iters <= cold.iterations
    # norm floor and p-mass bounded away from zero along the sweep
    for e in entries:
        rep = e["report"]
        spec = rep.u.grid
        assert rep.nehari_norm_floor_ok
        p_mass = float(np.dot(rep.u.grid.weights, np.abs(rep.u.values) ** 3)) ** (1 / 3)
        assert p_mass >= 0.5


def test_mountain_pass_level():
    spec = v0_spec()
    om = _bump_field(spec.grid, 2.0)
    t_end = 1.0
    while energy_fn(Field(spec.grid, t_end * om.values), spec).total >= -2.0:
        t_end *= 2.0
    rep = solve_critical(spec, SolveOptions())
    lvl = mountain_pass_level(spec, list(np.linspace(0.05, 1.0, 16) * t_end),
                              SolveOptions(), n_relax=30)
    m0 = 0.5 * math.e * math.sqrt(math.pi)
    assert lvl >= rep.d_est * (1.0 - 1e-9)
    assert lvl == pytest.approx(m0, rel=0.05)
    # degenerate path: one interior sample reduces to a max of two evaluations
    lvl0 = mountain_pass_level(spec, [0.5 * t_end, t_end], SolveOptions(), n_relax=0)
    e1 = energy_fn(Field(spec.grid, 0.5 * t_end * om.values), spec).total
    e2 = energy_fn(Field(spec.grid, t_end * om.values), spec).total
    assert lvl0 == pytest.approx(math.exp(-1.0) * max(e1, e2, 0.0), rel=1e-12)
    # endpoint must sit below the -2 level
    with pytest.raises(BadEndpoint):
        mountain_pass_level(spec, [1e-3], SolveOptions())


def test_saddle_constant_potential_symmetry():
    spec = v0_spec(n=2048)
    pts = [[-0.25], [0.25]]
    rep = saddle_minmax(spec, pts, SolveOptions())
    assert rep.converged
    assert rep.d_est == pytest.approx(0.5 * math.e * math.sqrt(math.pi), rel=1e-3)
    assert rep.profile_dist <= 2e-2
    # the minimizer sits near one of the (equivalent) seed locations
    assert min(abs(rep.x_eps[0] - 0.25), abs(rep.x_eps[0] + 0.25),
               abs(rep.x_eps[0])) <= 0.05
    with pytest.raises(ValueError):
        saddle_minmax(spec, [], SolveOptions())


def test_saddle_picks_highest_seed_level():
    # interior maximum of V at 0: the worst (= highest) projected seed is the
    # one at the hilltop, and the returned point reports the hilltop
    eps, r0 = 0.25, 3.0
    cfg = PenaltyConfig(eps=eps, r0=r0, omega=BallDomain(1.0), gauge_c=1.0 + r0 * r0)
    grid = Grid(mode="full", dim=1, n=2048, half_width=24.0)
    spec = ProblemSpec(potential=SaddleUnbounded(a=0.0, b=1.0), cfg=cfg, grid=grid)
    rep = saddle_minmax(spec, [[-0.4], [0.0], [0.4]], SolveOptions())
    assert abs(rep.x_eps[0]) <= 0.05
    assert rep.grad_v_norm <= 0.1
    assert abs(rep.v_at_xeps - 0.0) <= 0.05


def test_saddle_seed_levels_order_by_potential():
    # projected seed levels reproduce the autonomous level map: the seed at
    # the larger potential value carries the larger energy
    eps, r0 = 0.25, 3.0
    cfg = PenaltyConfig(eps=eps, r0=r0, omega=BallDomain(1.0), gauge_c=1.0 + r0 * r0)
    grid = Grid(mode="full", dim=1, n=2048, half_width=24.0)
    spec = ProblemSpec(potential=SaddleUnbounded(a=0.0, b=1.0), cfg=cfg, grid=grid)
    from logbound.solve import _seed_cutoff
    levels = []
    for y in (0.4, 0.0):  # V(0.4) = -0.16 < V(0) = 0
        a = 0.0 - y * y + spec.cfg.gauge_c
        prof = limit_profile(a, 1.0, 1)
        center = np.array([y / eps])
        vals = prof.profile(grid.points, center=center)
        vals *= _seed_cutoff(grid, center, eps)
        _, w = nehari_scale(Field(grid, vals), spec)
        levels.append(energy_fn(w, spec).total)
    assert levels[1] > levels[0]
    # and the level tracks the closed-form map m(V_work(y))
    assert levels[1] / levels[0] == pytest.approx(
        m_level(10.0, 1.0, 1) / m_level(10.0 - 0.16, 1.0, 1), rel=1e-2)


def test_argmax_tie_breaks_to_first_index():
    # documents the tie rule used for the worst-seed selection
    assert int(np.argmax(np.array([1.0, 1.0, 0.5]))) == 0
