"""Critical-point search for the penalized energy.

The descent realization: preconditioned gradient steps with backtracking,
positivity enforced by taking absolute values (the energy is even, so this
never increases it), and re-projection onto the constraint manifold
{ energy'(u) u = 0, norm >= eps^2 } after every step.  Accepted steps never
increase the energy; the iteration stops when the relative penalized residual
drops below tolerance.

A computed critical point solves the *original* equation exactly when every
penalty term sits on its identity branch; the report carries the residual of
the original equation, the branch diagnostics, and the recovery flag.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq

from .analysis import (DecayFit, barycenter, decay_fit, limit_profile,
                       locate_concentration, profile_distance)
from .errors import (BadEndpoint, DomainError, EmptyAnnulus, LogboundError,
                     NoBracket, NoConvergence, TrivialCollapse, ZeroMass)
from .functional import (EnergyBreakdown, ProblemSpec, _f_values, energy,
                         energy_original_gauge, gradient, h_eps_norm,
                         residual_original, residual_penalized, unshift)
from .grid import (Field, Grid, field_to_csv, gaussian_field, inner,
                   solve_shifted, zeros_like)
from .penalty import BallDomain, _cutoff_tau, _ramp_tau
from .potentials import grad_potential

__all__ = ["SolveOptions", "SolveReport", "nehari_scale", "solve_critical",
           "continuation_sweep", "mountain_pass_level", "saddle_minmax"]

_E_INV = math.exp(-1.0)


@dataclass
class SolveOptions:
    """Descent controls.  Seeds are given in rescaled coordinates."""

    tol_residual: float = 1e-8
    max_iters: int = 600
    positivity: bool = True
    seed: Union[None, Field, dict, str] = None
    armijo: float = 1e-4
    backtrack_factor: float = 0.5
    alpha_init: float = 1.0
    alpha_min: float = 1e-13
    alpha_max: float = 8.0
    cg_tol: float = 1e-8
    snapshot_every: int = 0
    snapshot_dir: Optional[str] = None

    def __post_init__(self):
        if self.tol_residual <= 0:
            raise ValueError("tol_residual must be positive")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ValueError("backtracking factor must lie in (0, 1)")


@dataclass
class SolveReport:
    """Everything the pipeline learned about one critical point."""

    u: Field                      # working-gauge critical point
    u_original: Field             # unshifted field (original gauge)
    energy: EnergyBreakdown       # working-gauge breakdown
    d_est: float                  # attained level in the original gauge
    residual_pen: float
    residual_orig: float
    x_eps: NDArray                # concentration point, original coordinates
    t_scale_history: list[float]
    gamma_history: list[float]
    iterations: int
    converged: bool
    penalization_active: bool
    nehari_norm_floor_ok: bool
    branch_inactive_ok: bool      # every penalty term on its identity branch
    phi_bound_ok: bool            # |u| <= envelope outside Omega (pointwise)
    gauge_c: float
    decay: Optional[DecayFit]
    profile_a: float
    profile_b: float
    profile_dist: float
    v_at_xeps: float
    grad_v_norm: float
    barycenter_xeps: Optional[NDArray]
    status: str


# ---------------------------------------------------------------------------
# Nehari projection
# ---------------------------------------------------------------------------

def _constraint_value(t: float, u: Field, spec: ProblemSpec, quad: float) -> float:
    """energy'(t u) (t u): zero exactly on the constraint manifold."""
    w = Field(spec.grid, t * u.values)
    uv = w.values
    val = t * t * quad
    mask, tau = spec._tau_active(w)
    if np.any(mask):
        tm = tau[mask]
        factor = _cutoff_tau(tm) + 0.5 * _ramp_tau(tm) * np.where(np.isfinite(tm), tm, 0.0)
        val += float(np.dot(spec.grid.weights[mask],
                            spec.vb[mask] * factor * uv[mask] ** 2))
    val -= float(np.dot(spec.grid.weights, spec.kk * _f_values(uv, spec) * uv))
    return val


def nehari_scale(u: Field, spec: ProblemSpec, t_hint: float = 1.0,
                 t_cap: float = 1e3) -> tuple[float, Field]:
    """Ray scaling t with t*u on the constraint manifold, at the crossing of
    largest energy.

    The constraint value is positive near t = 0 (the log term dominates);
    a geometric scan records every sign change, each bracket is root-found,
    and among the resulting interior maxima of the ray energy the largest is
    returned.  A clean field has exactly one crossing; fields carrying mass
    in the truncated region can produce several.  Raises NoBracket with the
    scan trace if no crossing occurs below t_cap.
    """
    quad = h_eps_norm(u, spec) ** 2
    if quad == 0.0:
        raise TrivialCollapse("cannot project the zero field")

    # walk down from t_hint until the constraint is positive
    t_lo = max(min(t_hint, t_cap), 1e-8)
    v_lo = _constraint_value(t_lo, u, spec, quad)
    trace: list[tuple[float, float]] = [(t_lo, v_lo)]
    while v_lo <= 0.0:
        t_lo *= 0.5
        if t_lo < 1e-12:
            raise NoBracket(trace)
        v_lo = _constraint_value(t_lo, u, spec, quad)
        trace.append((t_lo, v_lo))

    # geometric scan upward collecting every +/- bracket
    brackets: list[tuple[float, float]] = []
    t_prev, v_prev = t_lo, v_lo
    t = t_lo
    while t <= t_cap:
        t *= 1.5
        v = _constraint_value(t, u, spec, quad)
        trace.append((t, v))
        if v_prev > 0.0 >= v:
            brackets.append((t_prev, t))
        t_prev, v_prev = t, v
    if not brackets:
        raise NoBracket(trace)

    best_t, best_energy = None, -math.inf
    for lo, hi in brackets:
        t_star = brentq(lambda s: _constraint_value(s, u, spec, quad),
                        lo, hi, xtol=1e-15 * max(1.0, hi), rtol=4 * np.finfo(float).eps)
        e = energy(Field(spec.grid, t_star * u.values), spec).total
        if e > best_energy:
            best_t, best_energy = float(t_star), e
    return best_t, Field(spec.grid, best_t * u.values)


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------

def materialize_seed(spec: ProblemSpec, seed) -> Field:
    if seed is None or (isinstance(seed, str) and seed == "gaussian"):
        return gaussian_field(spec.grid)
    if isinstance(seed, Field):
        if seed.grid != spec.grid:
            raise ValueError("seed field lives on a different grid")
        return seed.copy()
    if isinstance(seed, dict):
        return gaussian_field(spec.grid,
                              center=seed.get("center"),
                              width=float(seed.get("width", 1.0)),
                              amplitude=float(seed.get("amplitude", 1.0)))
    raise ValueError(f"cannot interpret seed {seed!r}")


# ---------------------------------------------------------------------------
# Descent
# ---------------------------------------------------------------------------

def _precondition(g: Field, spec: ProblemSpec, tol: float,
                  at: Field | None = None) -> Field:
    """Solve (-Lap + shift) d = g for the descent direction.

    The base shift is the truncated potential (>= 1 after the gauge shift, so
    the operator is SPD).  When the current iterate is supplied, the positive
    part of the linearized nonlinearity -K (log u^2 + 2) is added: in the far
    field log u^2 is hugely negative and would otherwise cap the stable step
    size at a tiny value (measured: the plain shift stalls the iteration two
    decades above the residual target).
    """
    shift_vals = spec.vt + spec.rw
    if at is not None:
        av = np.abs(at.values)
        logu2 = np.where(av > 0.0, 2.0 * np.log(np.maximum(av, 1e-300)), -1400.0)
        x = -spec.kk * (logu2 + 2.0)
        # smooth positive part: a hard switch at |u| = 1/e makes the
        # direction discontinuous in u and the iteration can limit-cycle
        shift_vals = shift_vals + 0.5 * (x + np.sqrt(x * x + 4.0))
    return solve_shifted(g, Field(spec.grid, shift_vals), tol=tol)


def _default_window(spec: ProblemSpec):
    return BallDomain(spec.cfg.omega.circumradius + 1.0)


def _branch_checks(u: Field, spec: ProblemSpec, tol: float) -> tuple[bool, bool]:
    """(all penalty terms on identity branch, pointwise envelope bound).

    The pointwise comparisons only apply above the solver's resolution,
    10 * tol * peak: far-tail values below that are leftover iteration noise
    (they satisfy the residual target but carry no solution information), so
    they count as zero here.  Recovery itself is judged by the residual of
    the original equation, which weighs every node by what it contributes.
    """
    av = np.abs(u.values)
    floor = 10.0 * tol * float(np.max(av, initial=0.0))
    outside = spec.chi == 1.0
    f_ok = bool(np.all(av[outside] <= _E_INV + 1e-12))
    active = spec.vb != 0.0
    envelope = np.maximum(spec.phi_nodes * (1.0 + 1e-12), floor)
    cut_ok = bool(np.all(av[active] <= envelope[active]))
    phi_ok = bool(np.all(av[outside] <= envelope[outside]))
    return f_ok and cut_ok, phi_ok


def _build_report(u: Field, spec: ProblemSpec, opts: SolveOptions,
                  iterations: int, t_hist: list[float], gam_hist: list[float],
                  converged: bool) -> SolveReport:
    eb = energy(u, spec)
    res_pen = residual_penalized(u, spec)
    res_orig = residual_original(u, spec)
    u_orig = unshift(u, spec)
    x_eps = locate_concentration(u_orig, spec)
    d_est = energy_original_gauge(u, spec)
    branch_ok, phi_ok = _branch_checks(u, spec, opts.tol_residual)
    recovered = converged and res_orig <= 10.0 * opts.tol_residual
    floor_ok = h_eps_norm(u, spec) >= spec.cfg.eps ** 2

    center = x_eps / spec.cfg.eps
    try:
        dec = decay_fit(u_orig, center, kappa=spec.cfg.kappa)
    except EmptyAnnulus:
        dec = None

    x_pt = np.zeros(spec.grid.dim)
    x_pt[: x_eps.size] = x_eps
    prof_a = float(spec.potential.evaluate(x_pt[None, :])[0])
    prof_b = (float(spec.k_potential.evaluate(x_pt[None, :])[0])
              if spec.k_potential is not None else 1.0)
    prof = limit_profile(prof_a, prof_b, spec.grid.dim)
    prof_dist = profile_distance(u_orig, spec, prof, center=center)
    try:
        grad_v = grad_potential(spec.potential, x_pt)
    except DomainError:
        grad_v = np.full(spec.grid.dim, np.nan)
    try:
        bary = barycenter(u_orig, spec, p=3.0, window=_default_window(spec))
    except (ZeroMass, ValueError):
        bary = None

    return SolveReport(
        u=u, u_original=u_orig, energy=eb, d_est=d_est,
        residual_pen=res_pen, residual_orig=res_orig, x_eps=x_eps,
        t_scale_history=t_hist, gamma_history=gam_hist, iterations=iterations,
        converged=converged, penalization_active=not recovered,
        nehari_norm_floor_ok=floor_ok, branch_inactive_ok=branch_ok,
        phi_bound_ok=phi_ok, gauge_c=spec.cfg.gauge_c, decay=dec,
        profile_a=prof_a, profile_b=prof_b, profile_dist=prof_dist,
        v_at_xeps=prof_a, grad_v_norm=float(np.linalg.norm(grad_v)),
        barycenter_xeps=bary,
        status="recovered" if recovered else (
            "penalization-active" if converged else "not-converged"),
    )


def solve_critical(spec: ProblemSpec, opts: SolveOptions | None = None) -> SolveReport:
    """Find a positive critical point of the penalized energy.

    Raises TrivialCollapse if an iterate falls below the manifold norm floor
    eps^2, NoConvergence if the residual target is not met within the
    iteration budget.  A converged report with penalization_active=True is a
    warning state (exit code 2 at the CLI), not an error.
    """
    opts = opts or SolveOptions()
    floor = spec.cfg.eps ** 2
    u = materialize_seed(spec, opts.seed)
    if h_eps_norm(u, spec) < floor:
        raise TrivialCollapse("seed is below the manifold norm floor")
    t0, u = nehari_scale(u, spec)
    gam = energy(u, spec).total
    relres = residual_penalized(u, spec)
    t_hist = [t0]
    gam_hist = [gam]
    alpha = opts.alpha_init
    iterations = 0
    converged = False
    # "energy" phase: strict Armijo backtracking on the composed step.  Once
    # the energy decrease per step falls below its own roundoff floor the
    # line search must stall; from there the "polish" phase accepts steps on
    # residual decrease (no cancellation, so no floor) while still refusing
    # energy increases beyond roundoff.
    phase = "energy"

    for it in range(1, opts.max_iters + 1):
        iterations = it
        g = gradient(u, spec)
        relres = residual_penalized(u, spec, g)
        if relres <= opts.tol_residual:
            converged = True
            iterations = it - 1
            break
        d = _precondition(g, spec, opts.cg_tol, at=u)
        slope = inner(g, d)
        if slope <= 0.0:
            d, slope = g, inner(g, g)  # roundoff fallback: steepest descent

        noise = 32.0 * np.finfo(float).eps * (abs(gam) + 1.0)
        a = min(alpha, 1.0) if phase == "polish" else alpha
        accepted = False
        while a >= opts.alpha_min:
            if phase == "energy" and opts.armijo * a * slope < noise:
                # the decrease this step could certify is below the roundoff
                # floor of the energy: energy information is exhausted
                break
            w_vals = u.values - a * d.values
            if opts.positivity:
                w_vals = np.abs(w_vals)
            w = Field(spec.grid, w_vals)
            if h_eps_norm(w, spec) == 0.0:
                a *= opts.backtrack_factor
                continue
            try:
                tw, w2 = nehari_scale(w, spec)
            except (NoBracket, TrivialCollapse):
                a *= opts.backtrack_factor
                continue
            gam_new = energy(w2, spec).total
            if phase == "energy":
                if gam_new <= gam - opts.armijo * a * slope:
                    accepted = True
                    break
            else:
                relres_new = residual_penalized(w2, spec)
                if relres_new <= relres * (1.0 - 1e-3 * a) and gam_new <= gam + noise:
                    accepted = True
                    break
            a *= opts.backtrack_factor
        if not accepted:
            if phase == "energy":
                phase = "polish"
                alpha = 1.0
                continue
            raise NoConvergence(it, relres, "descent (stalled line search)")

        u, gam = w2, gam_new
        t_hist.append(tw)
        gam_hist.append(gam)
        if h_eps_norm(u, spec) < floor:
            raise TrivialCollapse(f"iterate {it} fell below the norm floor {floor:g}")
        alpha = min(a * 2.0, opts.alpha_max)
        if opts.snapshot_every and opts.snapshot_dir and it % opts.snapshot_every == 0:
            field_to_csv(u, f"{opts.snapshot_dir}/field_iter{it:05d}.csv")

    if not converged:
        raise NoConvergence(opts.max_iters, residual_penalized(u, spec), "descent")
    return _build_report(u, spec, opts, iterations, t_hist, gam_hist, converged)


# ---------------------------------------------------------------------------
# Continuation in eps
# ---------------------------------------------------------------------------

def _transfer_field(u_prev: Field, grid_new: Grid, shift: NDArray) -> Field:
    """Resample a field onto a new grid, translating by ``shift`` (rescaled
    units) so the profile stays put around its concentration point."""
    gp = u_prev.grid
    query = grid_new.points - shift
    if gp.mode == "radial":
        vals = np.interp(np.abs(query[:, 0]), gp.points[:, 0], u_prev.values,
                         left=u_prev.values[0], right=0.0)
        return Field(grid_new, vals)
    axes = [np.unique(gp.points[:, ax]) for ax in range(gp.dim)]
    interp = RegularGridInterpolator(
        axes, u_prev.values.reshape((gp.n,) * gp.dim),
        bounds_error=False, fill_value=0.0)
    return Field(grid_new, interp(query))


def continuation_sweep(make_spec: Callable[[float], ProblemSpec],
                       eps_list: Sequence[float],
                       opts: SolveOptions | None = None) -> list[dict]:
    """Solve for each eps in descending order, warm-starting each run from the
    previous solution held fixed in rescaled coordinates around its peak.

    Returns one entry per eps: {"eps", "report"} or {"eps", "error"}; errors
    do not stop the sweep.
    """
    if len(eps_list) == 0:
        raise ValueError("eps_list must not be empty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly descending")
    opts = opts or SolveOptions()
    entries: list[dict] = []
    prev: SolveReport | None = None
    prev_eps: float | None = None
    for eps in eps_list:
        try:
            spec = make_spec(eps)
            run_opts = opts
            if prev is not None:
                delta = np.zeros(spec.grid.dim)
                x_prev = np.zeros(spec.grid.dim)
                x_prev[: prev.x_eps.size] = prev.x_eps
                if spec.grid.mode == "full":
                    delta = x_prev * (1.0 / eps - 1.0 / prev_eps)
                seed = _transfer_field(prev.u, spec.grid, delta)
                run_opts = replace(opts, seed=seed)
            report = solve_critical(spec, run_opts)
            entries.append({"eps": eps, "report": report})
            prev, prev_eps = report, eps
        except (LogboundError, ValueError) as exc:
            entries.append({"eps": eps, "error": f"{type(exc).__name__}: {exc}"})
    return entries


# ---------------------------------------------------------------------------
# Mountain-pass level estimate
# ---------------------------------------------------------------------------

def _bump_field(grid: Grid, amplitude: float = 2.0) -> Field:
    d2 = np.sum(grid.points ** 2, axis=1)
    vals = np.zeros(grid.size)
    m = d2 < 1.0
    vals[m] = amplitude * np.exp(1.0 - 1.0 / (1.0 - d2[m]))
    return Field(grid, vals)


def mountain_pass_level(spec: ProblemSpec, path_seeds: Sequence[float],
                        opts: SolveOptions | None = None,
                        bump_amplitude: float = 2.0,
                        n_relax: int = 60, step_cap_frac: float = 0.3) -> float:
    """Upper estimate of the mountain-pass level, in the original gauge.

    Evaluates the energy along the segment s -> s * t_max * bump through the
    built-in bump, then relaxes the interior points by descent steps capped
    at a fraction of the local segment length, re-equidistributing the path
    in arc length after each sweep (endpoints fixed; points below the -2
    admissibility level are frozen so the string stays taut).  The returned
    value is the smallest manifold-crossing energy over the relaxed points:
    each such crossing is the maximum of an admissible ray path, so this is
    an upper estimate only, never the exact infimum over all paths.
    """
    opts = opts or SolveOptions()
    seeds = sorted(t for t in path_seeds if t > 0.0)
    if not seeds:
        raise ValueError("need at least one positive path seed")
    omega = _bump_field(spec.grid, bump_amplitude)
    t_max = seeds[-1]
    end_energy = energy(Field(spec.grid, t_max * omega.values), spec).total
    if end_energy >= -2.0:
        raise BadEndpoint(f"energy at the path endpoint is {end_energy:.3g}, need < -2")

    path = [zeros_like(spec.grid)] + [Field(spec.grid, t * omega.values) for t in seeds]
    energies = [energy(p, spec).total for p in path]
    if n_relax == 0:
        return math.exp(-spec.cfg.gauge_c) * max(energies)

    def _seg_lengths(pts: list[Field]) -> list[float]:
        return [h_eps_norm(pts[i + 1] - pts[i], spec) for i in range(len(pts) - 1)]

    prev_max = max(energies)
    for _ in range(n_relax):
        cap = step_cap_frac * float(np.mean(_seg_lengths(path)))
        for i in range(1, len(path) - 1):
            # points already in the deep valley play no role in the pass
            # level (the path class only requires reaching energy < -2);
            # freezing them keeps the arc length bounded, otherwise the
            # unbounded-below energy stretches the string until the ridge
            # crossing is no longer sampled
            if energies[i] < -2.0:
                continue
            p = path[i]
            g = gradient(p, spec)
            try:
                d = _precondition(g, spec, max(opts.cg_tol, 1e-6), at=p)
            except NoConvergence:
                d = g
            dn = h_eps_norm(d, spec)
            if dn == 0.0 or inner(g, d) <= 0.0:
                continue
            a = min(1.0, cap / dn)
            for _ in range(5):
                cand = Field(spec.grid, p.values - a * d.values)
                e_new = energy(cand, spec).total
                if e_new <= energies[i]:
                    path[i], energies[i] = cand, e_new
                    break
                a *= 0.5
        # re-equidistribute interior points along the polyline
        lengths = _seg_lengths(path)
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        if cum[-1] > 0.0:
            targets = np.linspace(0.0, cum[-1], len(path))
            new_path = [path[0]]
            for k in range(1, len(path) - 1):
                j = int(np.searchsorted(cum, targets[k], side="right") - 1)
                j = min(max(j, 0), len(path) - 2)
                seg = cum[j + 1] - cum[j]
                frac = 0.0 if seg == 0.0 else (targets[k] - cum[j]) / seg
                new_path.append(Field(spec.grid,
                                      (1.0 - frac) * path[j].values
                                      + frac * path[j + 1].values))
            new_path.append(path[-1])
            path = new_path
            energies = [energy(p, spec).total for p in path]
        cur_max = max(energies)
        if abs(cur_max - prev_max) <= 1e-5 * max(abs(cur_max), 1.0):
            break
        prev_max = cur_max

    # Certify: the ray through any path point, scaled to the constraint
    # manifold at its best crossing, is itself an admissible path whose
    # maximum is the scaled energy.  The smallest such ray maximum is the
    # returned upper estimate; the sampled polyline maximum alone is not a
    # bound (the ridge can peak between samples).
    certified: list[float] = []
    for p in path[1:]:
        if h_eps_norm(p, spec) == 0.0:
            continue
        try:
            _, w = nehari_scale(p, spec)
        except (NoBracket, TrivialCollapse):
            continue
        certified.append(energy(w, spec).total)
    best = min(certified) if certified else max(energies)
    return math.exp(-spec.cfg.gauge_c) * best


# ---------------------------------------------------------------------------
# Saddle-seed min-max
# ---------------------------------------------------------------------------

def _smoothstep(t: NDArray) -> NDArray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _seed_cutoff(grid: Grid, center_resc: NDArray, eps: float) -> NDArray:
    """Radial cutoff at scale eps^(-1/3): 1 inside half that radius, 0 beyond."""
    d = np.sqrt(np.sum((grid.points - center_resc) ** 2, axis=1))
    s = eps ** (1.0 / 3.0) * d
    return 1.0 - _smoothstep(2.0 * (s - 0.5))


def saddle_minmax(spec: ProblemSpec, seed_points: Sequence[Sequence[float]],
                  opts: SolveOptions | None = None, threads: int = 1) -> SolveReport:
    """Min-max over a finite seed family through a saddle of the potential.

    For each supplied point y (original coordinates), builds the cut-off
    limit profile translated to y/eps, projects it onto the constraint
    manifold, then descends from the seed of *largest* energy.  Ties break to
    the first index.
    """
    opts = opts or SolveOptions()
    if len(seed_points) == 0:
        raise ValueError("need at least one seed point")
    eps = spec.cfg.eps
    pts = [np.asarray(p, dtype=float) for p in seed_points]

    def project(y: NDArray) -> tuple[float, Field]:
        x_pt = np.zeros(spec.grid.dim)
        x_pt[: y.size] = y
        a = float(spec.potential.evaluate(x_pt[None, :])[0]) + spec.cfg.gauge_c * (
            float(spec.k_potential.evaluate(x_pt[None, :])[0]) if spec.k_potential else 1.0)
        b = (float(spec.k_potential.evaluate(x_pt[None, :])[0])
             if spec.k_potential is not None else 1.0)
        prof = limit_profile(a, b, spec.grid.dim)
        center = x_pt[: spec.grid.dim] / eps
        vals = prof.profile(spec.grid.points, center=center)
        vals *= _seed_cutoff(spec.grid, center, eps)
        seed = Field(spec.grid, vals)
        _, w = nehari_scale(seed, spec)
        return energy(w, spec).total, w

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            projected = list(pool.map(project, pts))
    else:
        projected = [project(y) for y in pts]

    levels = np.array([lv for lv, _ in projected])
    worst = int(np.argmax(levels))  # argmax; ties resolve to the first index
    seed = projected[worst][1]
    report = solve_critical(spec, replace(opts, seed=seed))
    return report
