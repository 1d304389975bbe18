"""Randomized property suite behind the ``validate`` subcommand.

Each check draws its own samples from a fixed-seed generator, evaluates a
mathematical identity or inequality of the kernels/functional, and reports
pass/fail with the worst violation.  The ``mutate`` hook deliberately breaks
the ramp kernel (sign flip) so the suite's sensitivity can be demonstrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import limit_profile, m_level
from .functional import ProblemSpec, energy, gradient, h_eps_norm
from .grid import Field, Grid, inner, integrate, laplacian
from .penalty import (BallDomain, PenaltyConfig, G_cut, _cutoff_tau, _ramp_tau,
                      _ramp_tau_prime, _s2_log_s2, _s_log_s2, g_cut, phi,
                      psi_penalty, psi_prime_apply)
from .potentials import ConstantPotential, HarmonicRepulsive
from .solve import nehari_scale

__all__ = ["CheckResult", "run_validation"]

_E_INV = math.exp(-1.0)
_EPS_SET = (0.5, 0.25, 0.1, 0.05)
_KAPPA_SET = (0.0, 0.5)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _sample_kernel_inputs(rng, cfg: PenaltyConfig, n: int):
    """Radii kept out of the envelope-underflow region; s drawn both on
    absolute scales and relative to the envelope so every branch is hit."""
    rmax = (200.0 / cfg.eps ** (1.0 - cfg.kappa)) ** (1.0 / (2.0 - cfg.kappa))
    r = rng.uniform(0.0, rmax, size=n)
    pts = np.zeros((n, 3))
    pts[:, 0] = r
    p = np.asarray(phi(pts, cfg))
    tau = rng.uniform(0.0, 7.0, size=n)
    s_rel = tau * p
    s_abs = np.power(10.0, rng.uniform(-8.0, 0.8, size=n))
    s = np.where(rng.random(n) < 0.5, s_rel, s_abs) * rng.choice([-1.0, 1.0], size=n)
    return pts, p, s


def _kernel_pieces(cfg: PenaltyConfig, pts, s, mutate: str | None):
    p = np.asarray(phi(pts, cfg))
    with np.errstate(over="ignore"):
        tau = np.abs(s) / p
    ramp = _ramp_tau(tau)
    ramp_p = _ramp_tau_prime(tau)
    cut = _cutoff_tau(tau)
    if mutate == "eta-sign":
        ramp = -ramp
        ramp_p = -ramp_p
        cut = 2.0 - cut  # antiderivative of the flipped ramp
    return p, tau, ramp, ramp_p, cut


def _check_ramp_quadratic(rng, mutate):
    worst = 0.0
    for eps in _EPS_SET:
        for kappa in _KAPPA_SET:
            cfg = PenaltyConfig(eps=eps, r0=2.5, omega=BallDomain(1.0), kappa=kappa)
            pts, p, s = _sample_kernel_inputs(rng, cfg, 2500)
            p, tau, ramp, _, cut = _kernel_pieces(cfg, pts, s, mutate)
            # cut * s^2 <= 25 phi^2 and |ramp/phi * s^3| <= 125 phi^2
            lhs1 = cut * s * s - 25.0 * p * p
            tau_f = np.where(np.isfinite(tau), tau, 0.0)
            lhs2 = np.abs(ramp * tau_f ** 3) * p * p - 125.0 * p * p
            worst = max(worst, float(np.max(lhs1)), float(np.max(lhs2)))
    return worst <= 1e-12, f"worst excess {worst:.3e}"


def _check_ramp_linear(rng, mutate):
    worst = 0.0
    for eps in _EPS_SET:
        for kappa in _KAPPA_SET:
            cfg = PenaltyConfig(eps=eps, r0=2.5, omega=BallDomain(1.0), kappa=kappa)
            pts, p, s = _sample_kernel_inputs(rng, cfg, 2500)
            p, tau, ramp, ramp_p, cut = _kernel_pieces(cfg, pts, s, mutate)
            tau_f = np.where(np.isfinite(tau), tau, 0.0)
            lhs1 = cut * np.abs(s) - 5.0 * p
            lhs2 = np.abs(ramp * tau_f ** 2) * p - 25.0 * p
            lhs3 = np.abs(ramp_p * tau_f ** 3) * p - 125.0 * p
            worst = max(worst, float(np.max(lhs1)), float(np.max(lhs2)), float(np.max(lhs3)))
    return worst <= 1e-12, f"worst excess {worst:.3e}"


def _check_g_bounds(rng, mutate):
    s = np.power(10.0, rng.uniform(-10.0, 2.0, size=20000))
    g = np.asarray(g_cut(s))
    slog = _s_log_s2(s)
    ok_upper = np.all(g <= slog + 1e-12)
    ok_range = np.all((g >= -2.0 * _E_INV - 1e-12) & (g <= 1e-12))
    s2 = s * rng.choice([-1.0, 1.0], size=s.size)
    G = np.asarray(G_cut(s2))
    s2log = _s2_log_s2(s2)
    lower = -0.5 * np.maximum(-s2log, 0.0) - 2.0 * s2 * s2
    ok_G = np.all((G >= lower - 1e-12) & (G <= 1e-12))
    return bool(ok_upper and ok_range and ok_G), \
        f"upper {ok_upper}, range {ok_range}, antiderivative {ok_G}"


def _check_g_identity(rng, mutate):
    s = rng.uniform(-_E_INV, _E_INV, size=20000)
    g = np.asarray(g_cut(s))
    G = np.asarray(G_cut(s))
    err_g = np.max(np.abs(g - _s_log_s2(s)))
    err_G = np.max(np.abs(G - 0.5 * (_s2_log_s2(s) - s * s)))
    return err_g == 0.0 and err_G == 0.0, f"max dev g {err_g:.1e}, G {err_G:.1e}"


def _check_gs_minus_2G(rng, mutate):
    s_in = rng.uniform(-_E_INV, _E_INV, size=20000)
    val_in = np.asarray(g_cut(s_in)) * s_in - 2.0 * np.asarray(G_cut(s_in))
    # identity value s^2: exact in real arithmetic, roundoff-level in floats
    err_in = np.max(np.abs(val_in - s_in * s_in) / np.maximum(s_in * s_in, 1e-300))
    s_out = np.power(10.0, rng.uniform(math.log10(_E_INV), 3.0, size=20000))
    s_out *= rng.choice([-1.0, 1.0], size=s_out.size)
    val_out = np.asarray(g_cut(s_out)) * s_out - 2.0 * np.asarray(G_cut(s_out))
    ok_out = np.all((val_out >= -1e-12) & (val_out <= s_out * s_out + 1e-12))
    return err_in <= 1e-12 and bool(ok_out), \
        f"core rel dev {err_in:.2e}, outside in [0, s^2]: {ok_out}"


def _check_cutoff_continuity(rng, mutate):
    # branch formulas evaluated exactly at the knots tau = 1, 2, 4, 5
    ramp_branches = [
        (lambda t: 0.0 * t, lambda t: 0.0 * t),                       # tau <= 1
        (lambda t: -0.25 * (t - 1) ** 2, lambda t: -0.5 * (t - 1)),   # [1, 2]
        (lambda t: 0.25 * ((t - 3) ** 2 - 2), lambda t: 0.5 * (t - 3)),  # [2, 4]
        (lambda t: -0.25 * (t - 5) ** 2, lambda t: -0.5 * (t - 5)),   # [4, 5]
        (lambda t: 0.0 * t, lambda t: 0.0 * t),                       # tau >= 5
    ]
    cut_branches = [
        lambda t: 1.0 + 0.0 * t,
        lambda t: 1.0 - (t - 1) ** 3 / 12.0,
        lambda t: 11.0 / 12.0 + ((t - 3) ** 3 + 1.0) / 12.0 - 0.5 * (t - 2),
        lambda t: 1.0 / 12.0 - ((t - 5) ** 3 + 1.0) / 12.0,
        lambda t: 0.0 * t,
    ]
    worst = 0.0
    for k, knot in enumerate((1.0, 2.0, 4.0, 5.0)):
        t = np.float64(knot)
        for fns in (ramp_branches,):
            val_l, val_r = fns[k][0](t), fns[k + 1][0](t)
            der_l, der_r = fns[k][1](t), fns[k + 1][1](t)
            if mutate == "eta-sign":
                val_l, val_r, der_l, der_r = -val_l, -val_r, -der_l, -der_r
            worst = max(worst, abs(float(val_l - val_r)), abs(float(der_l - der_r)))
        cl, cr = cut_branches[k](t), cut_branches[k + 1](t)
        if mutate == "eta-sign":
            cl, cr = 2.0 - cl, 2.0 - cr
        worst = max(worst, abs(float(cl - cr)))
    cut5 = _cutoff_tau(np.array([5.0]))
    if mutate == "eta-sign":
        cut5 = 2.0 - cut5
    at_five = float(np.abs(cut5[0]))
    taus = rng.uniform(0.0, 8.0, size=5000)
    cut = _cutoff_tau(taus)
    if mutate == "eta-sign":
        cut = 2.0 - cut
    rng_ok = bool(np.all((cut >= -1e-15) & (cut <= 1.0 + 1e-15)))
    passed = worst <= 1e-12 and at_five <= 1e-12 and rng_ok
    return passed, f"knot mismatch {worst:.2e}, value at 5*phi {at_five:.2e}, in [0,1]: {rng_ok}"


def _check_g_branch_continuity(rng, mutate):
    h = 1e-13
    vals = []
    for s0 in (_E_INV, -_E_INV):
        vals.append(abs(g_cut(s0 - h * np.sign(s0)) - g_cut(s0 + h * np.sign(s0))))
        vals.append(abs(G_cut(s0 - h * np.sign(s0)) - G_cut(s0 + h * np.sign(s0))))
    worst = max(vals)
    return worst <= 1e-12, f"branch jump {worst:.2e}"


def _check_cutoff_antiderivative(rng, mutate):
    cfg = PenaltyConfig(eps=0.25, r0=2.5, omega=BallDomain(1.0))
    pts = np.zeros((2000, 3))
    pts[:, 0] = rng.uniform(0.0, 4.0, size=2000)
    p = np.asarray(phi(pts, cfg))
    t = rng.uniform(0.0, 6.0, size=2000) * p
    errs = []
    for h_rel in (1e-3, 1e-4):
        h = h_rel * p
        fd = (_cutoff_tau((t + h) / p) - _cutoff_tau((t - h) / p)) / (2.0 * h)
        ramp = _ramp_tau(t / p) / p
        if mutate == "eta-sign":
            ramp = -ramp
        errs.append(float(np.max(np.abs(fd - ramp) * p)))  # scale by phi
    passed = errs[1] <= errs[0] / 20.0 + 1e-10 and errs[0] <= 1e-4
    return passed, f"fd errors {errs[0]:.2e} -> {errs[1]:.2e}"


def _mini_spec(eps=0.5, kappa=0.0, n=257, dim=1, mode="full") -> ProblemSpec:
    r0 = 2.5
    cfg = PenaltyConfig(eps=eps, r0=r0, omega=BallDomain(1.0), kappa=kappa,
                        gauge_c=1.0 + r0 * r0)
    grid = Grid(mode=mode, dim=dim, n=n, half_width=max(2 * r0 / eps, 12.0))
    return ProblemSpec(potential=HarmonicRepulsive(), cfg=cfg, grid=grid)


def _random_bumps(rng, grid: Grid, k: int = 3, spread: float = 0.6) -> Field:
    vals = np.zeros(grid.size)
    for _ in range(k):
        c = rng.uniform(-spread, spread, size=grid.dim) * grid.half_width
        w = rng.uniform(0.5, 2.0)
        a = rng.uniform(-1.5, 1.5)
        d2 = np.sum((grid.points - c) ** 2, axis=1)
        vals += a * np.exp(-0.5 * d2 / (w * w))
    return Field(grid, vals)


def _check_gradient_fd(rng, mutate):
    # the log nonlinearity is not twice differentiable at u = 0, so the
    # direction is masked at near-zero nodes (the gradient value there is
    # pinned by the continuity convention and checked separately); elsewhere
    # the central difference must show clean second order
    spec = _mini_spec()
    bad = 0
    worst_pair = (0.0, 0.0)
    for _ in range(100):
        u = _random_bumps(rng, spec.grid)
        v = _random_bumps(rng, spec.grid, k=2)
        vv = v.values.copy()
        vv[np.abs(u.values) < 0.05] = 0.0
        v = Field(spec.grid, vv)
        gv = integrate(Field(spec.grid, gradient(u, spec).values * v.values))
        scale = max(abs(gv), 1.0)
        errs = []
        for h in (1e-3, 1e-4):
            ep = energy(Field(spec.grid, u.values + h * v.values), spec).total
            em = energy(Field(spec.grid, u.values - h * v.values), spec).total
            errs.append(abs((ep - em) / (2 * h) - gv) / scale)
        ok = errs[1] <= errs[0] / 20.0 + 1e-10 and errs[0] <= 1e-4
        if not ok:
            bad += 1
            worst_pair = (errs[0], errs[1])
    return bad == 0, f"{bad}/100 fields failed; last errors {worst_pair[0]:.2e} -> {worst_pair[1]:.2e}"


def _check_psi_fd(rng, mutate):
    cfg = PenaltyConfig(eps=0.5, r0=2.5, omega=BallDomain(1.0))
    grid = Grid(mode="full", dim=1, n=257, half_width=10.0)
    V = HarmonicRepulsive()
    p = np.asarray(phi(grid.points, cfg))
    worst = 0.0
    for _ in range(25):
        tau_u = rng.uniform(0.3, 6.0, size=grid.size)
        u = Field(grid, tau_u * p)
        v = Field(grid, rng.uniform(-1.0, 1.0, size=grid.size) * p)
        dv = psi_prime_apply(u, v, cfg, V)
        errs = []
        for h in (1e-2, 1e-3):
            fp = psi_penalty(Field(grid, u.values + h * v.values), cfg, V)
            fm = psi_penalty(Field(grid, u.values - h * v.values), cfg, V)
            errs.append(abs((fp - fm) / (2 * h) - dv) / max(abs(dv), 1e-280))
        ratio_ok = errs[1] <= errs[0] / 20.0 + 1e-9
        worst = max(worst, errs[0])
        if not ratio_ok:
            return False, f"fd errors {errs[0]:.2e} -> {errs[1]:.2e}"
    return worst <= 1e-3, f"worst relative fd error {worst:.2e}"


def _check_sbp(rng, mutate):
    worst = 0.0
    for mode, dim, n in (("full", 1, 129), ("full", 2, 33), ("radial", 3, 129)):
        grid = Grid(mode=mode, dim=dim, n=n, half_width=8.0)
        for _ in range(20):
            u = _random_bumps(rng, grid)
            v = _random_bumps(rng, grid)
            a = inner(u, laplacian(v))
            b = inner(v, laplacian(u))
            scale = max(abs(a), abs(b), 1.0)
            worst = max(worst, abs(a - b) / scale)
            neg = inner(u, laplacian(u))
            worst = max(worst, max(neg, 0.0) / scale)
    return worst <= 1e-12, f"worst relative asymmetry {worst:.2e}"


def _check_evenness(rng, mutate):
    # sign flips leave the energy exactly invariant; taking |u| leaves it
    # invariant for sign-definite fields and can only *lower* it when u
    # changes sign (the modulus kink reduces the discrete gradient energy:
    # (|a|-|b|)^2 <= (a-b)^2), which is what the positivity step relies on
    spec = _mini_spec()
    worst = 0.0
    worst_abs = 0.0
    for _ in range(30):
        u = _random_bumps(rng, spec.grid)
        e1 = energy(u, spec).total
        e2 = energy(Field(spec.grid, -u.values), spec).total
        e3 = energy(Field(spec.grid, np.abs(u.values)), spec).total
        scale = max(abs(e1), 1.0)
        worst = max(worst, abs(e1 - e2) / scale)
        worst_abs = max(worst_abs, (e3 - e1) / scale)
        pos = Field(spec.grid, np.abs(_random_bumps(rng, spec.grid).values))
        e4 = energy(pos, spec).total
        e5 = energy(Field(spec.grid, -pos.values), spec).total
        worst = max(worst, abs(e4 - e5) / max(abs(e4), 1.0))
    passed = worst <= 1e-12 and worst_abs <= 1e-12
    return passed, f"flip asymmetry {worst:.2e}, modulus increase {worst_abs:.2e}"


def _check_nehari_closed_form(rng, mutate):
    # pure-log regime: support well inside Omega, so the ray equation is
    # t^2 (A - D - B log t^2) = 0 with the closed-form root.
    cfg = PenaltyConfig(eps=1.0, r0=5.0, omega=BallDomain(2.5), gauge_c=0.0)
    grid = Grid(mode="full", dim=1, n=513, half_width=10.0)
    spec = ProblemSpec(potential=ConstantPotential(2.0), cfg=cfg, grid=grid)
    worst = 0.0
    for _ in range(40):
        vals = np.zeros(grid.size)
        for _ in range(2):
            c = rng.uniform(-1.2, 1.2)
            w = rng.uniform(0.3, 0.8)
            a = rng.uniform(0.2, 2.0)
            vals += a * np.exp(-0.5 * (grid.points[:, 0] - c) ** 2 / (w * w))
        vals[np.abs(grid.points[:, 0]) > 2.4] = 0.0  # keep the ray purely on the log branch
        u = Field(grid, vals)
        A = h_eps_norm(u, spec) ** 2
        B = inner(u, u)
        D = float(np.dot(grid.weights, _s2_log_s2(u.values)))
        t_closed = math.exp((A - D) / (2.0 * B))
        t_num, _ = nehari_scale(u, spec)
        worst = max(worst, abs(t_num - t_closed) / t_closed)
    return worst <= 1e-10, f"worst relative deviation {worst:.2e}"


def _check_ray_profile(rng, mutate):
    # I_a(t U_a) = (1/2) t^2 (1 - log t^2) e^a |U|_2^2 to 1e-6 relative
    grid = Grid(mode="full", dim=1, n=32769, half_width=14.0)
    worst = 0.0
    for a in (-1.0, 0.0, 1.0):
        prof = limit_profile(a, 1.0, 1)
        base = prof.sample(grid)
        mass = math.exp(a) * math.exp(1) * math.sqrt(math.pi)
        for t in (0.5, 1.0, 2.0):
            u = Field(grid, t * base.values)
            val = 0.5 * (-inner(u, laplacian(u)) + (a + 1.0) * inner(u, u)
                         - float(np.dot(grid.weights, _s2_log_s2(u.values))))
            closed = 0.5 * t * t * (1.0 - math.log(t * t)) * mass
            denom = max(abs(closed), 1.0)
            worst = max(worst, abs(val - closed) / denom)
    return worst <= 1e-6, f"worst relative deviation {worst:.2e}"


def _check_m_monotone(rng, mutate):
    a_grid = np.linspace(-3.0, 3.0, 41)
    vals = [m_level(a, 1.0, 2) for a in a_grid]
    ok = all(b > a for a, b in zip(vals, vals[1:]))
    return ok, "strictly increasing on [-3, 3]" if ok else "monotonicity violated"


_CHECKS = [
    ("envelope-bounds-quadratic", _check_ramp_quadratic),
    ("envelope-bounds-linear", _check_ramp_linear),
    ("nonlinearity-cut-bounds", _check_g_bounds),
    ("nonlinearity-cut-core-identity", _check_g_identity),
    ("nonlinearity-cut-defect", _check_gs_minus_2G),
    ("cutoff-branch-continuity", _check_cutoff_continuity),
    ("nonlinearity-branch-continuity", _check_g_branch_continuity),
    ("cutoff-antiderivative-fd", _check_cutoff_antiderivative),
    ("energy-gradient-fd", _check_gradient_fd),
    ("penalty-directional-fd", _check_psi_fd),
    ("summation-by-parts", _check_sbp),
    ("energy-evenness", _check_evenness),
    ("ray-scaling-closed-form", _check_nehari_closed_form),
    ("ray-profile-identity", _check_ray_profile),
    ("level-monotonicity", _check_m_monotone),
]


def run_validation(mutate: str | None = None, rng_seed: int = 20240811) -> list[CheckResult]:
    """Run every property check; deterministic for a fixed rng_seed."""
    results = []
    for name, fn in _CHECKS:
        rng = np.random.default_rng(rng_seed)
        passed, detail = fn(rng, mutate)
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail))
    return results
