"""Batch front-end: solve / sweep / saddle / validate / limit-profile.

Configuration is JSON with // and /* */ comments allowed; all lengths in the
config are original coordinates except solver seeds, which live on the
rescaled grid.  Exit codes: 0 converged and recovered, 2 converged but the
penalization stayed active (the computed critical point does not solve the
original equation at this eps), 1 error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import auto_gauge_constant, limit_profile
from .errors import ConfigError, LogboundError
from .functional import ProblemSpec
from .grid import Grid, field_from_csv, field_to_csv
from .penalty import BallDomain, BoxDomain, PenaltyConfig
from .potentials import CompetingPotential, builtin_potential, parse_potential
from .solve import (SolveOptions, SolveReport, continuation_sweep,
                    saddle_minmax, solve_critical)
from .validation import run_validation

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PENALIZED = 2


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def strip_json_comments(text: str) -> str:
    out = []
    i, n = 0, len(text)
    in_string = False
    while i < n:
        ch = text[i]
        if in_string:
            out.append(ch)
            if ch == "\\" and i + 1 < n:
                out.append(text[i + 1])
                i += 1
            elif ch == '"':
                in_string = False
            i += 1
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
            i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            i += 2
            while i + 1 < n and not (text[i] == "*" and text[i + 1] == "/"):
                i += 1
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(strip_json_comments(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    return cfg


def _build_potential(spec, key: str):
    if isinstance(spec, str):
        return parse_potential(spec)
    if isinstance(spec, dict) and "builtin" in spec:
        return builtin_potential(spec["builtin"], **spec.get("params", {}))
    raise ConfigError(f"{key}: expected an expression string or {{'builtin': ...}}")


def _build_domain(spec) -> BallDomain | BoxDomain:
    if isinstance(spec, dict) and "ball" in spec:
        return BallDomain(float(spec["ball"]))
    if isinstance(spec, dict) and "box" in spec:
        return BoxDomain(tuple(float(v) for v in spec["box"]))
    raise ConfigError("omega: expected {'ball': radius} or {'box': [halfwidths]}")


def _build_solver_options(cfg: dict, out_dir: Path | None, dump_fields: bool) -> SolveOptions:
    s = dict(cfg.get("solver", {}))
    opts = SolveOptions(
        tol_residual=float(s.get("tol_residual", 1e-8)),
        max_iters=int(s.get("max_iters", 600)),
        positivity=bool(s.get("positivity", True)),
        seed=s.get("seed"),
        armijo=float(s.get("armijo", 1e-4)),
        backtrack_factor=float(s.get("backtrack_factor", 0.5)),
        cg_tol=float(s.get("cg_tol", 1e-8)),
        snapshot_every=int(s.get("snapshot_every", 25)) if dump_fields else 0,
        snapshot_dir=str(out_dir) if (dump_fields and out_dir) else None,
    )
    return opts


def build_problem(cfg: dict, eps: float) -> ProblemSpec:
    """Assemble the discrete problem for one eps from a parsed config."""
    pot = _build_potential(cfg.get("potential"), "potential")
    k_pot = None
    kappa = float(cfg.get("kappa", 0.0))
    if isinstance(pot, CompetingPotential):
        k_pot = pot.k
        if "kappa" not in cfg:
            kappa = pot.kappa
        pot = pot.v
    if "k_potential" in cfg:
        k_pot = _build_potential(cfg["k_potential"], "k_potential")

    omega = _build_domain(cfg.get("omega", {"ball": 1.0}))
    r0_spec = cfg.get("r0", "auto")
    r0 = 2.0 * omega.circumradius + 1.0 if r0_spec == "auto" else float(r0_spec)

    gcfg = dict(cfg.get("grid", {}))
    mode = gcfg.get("mode", "full")
    dim = int(gcfg.get("dim", 1))
    n = int(gcfg.get("n", 2048))
    half = gcfg.get("half_width", "auto")
    half_width = max(2.0 * r0 / eps, 12.0) if half == "auto" else float(half)
    grid = Grid(mode=mode, dim=dim, n=n, half_width=half_width)

    gauge = cfg.get("gauge_c", "auto")
    if gauge == "auto":
        gauge = auto_gauge_constant(pot, grid, eps, r0, K=k_pot)
    pen = PenaltyConfig(eps=eps, r0=r0, omega=omega, kappa=kappa, gauge_c=float(gauge))
    r_weight = cfg.get("r_weight")
    return ProblemSpec(potential=pot, cfg=pen, grid=grid, k_potential=k_pot,
                       r_weight=float(r_weight) if r_weight is not None else None)


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def report_to_dict(report: SolveReport, config_echo: dict) -> dict:
    decay = report.decay.as_dict() if report.decay is not None else None
    return {
        "config_echo": config_echo,
        "energy": report.energy.as_dict(residual_original=report.residual_orig),
        "residuals": {"penalized": report.residual_pen, "original": report.residual_orig},
        "x_eps": [float(v) for v in report.x_eps],
        "decay": decay,
        "profile": {"a": report.profile_a, "b": report.profile_b,
                    "distance": report.profile_dist},
        "flags": {"penalization_active": report.penalization_active,
                  "nehari_floor": report.nehari_norm_floor_ok},
        "solver": {
            "iterations": report.iterations,
            "converged": report.converged,
            "status": report.status,
            "d_est": report.d_est,
            "gauge_c": report.gauge_c,
            "t_scale_final": report.t_scale_history[-1] if report.t_scale_history else None,
            "branch_inactive": report.branch_inactive_ok,
            "phi_bound": report.phi_bound_ok,
            "v_at_xeps": report.v_at_xeps,
            "grad_v_norm": report.grad_v_norm,
            "barycenter": ([float(v) for v in report.barycenter_xeps]
                           if report.barycenter_xeps is not None else None),
        },
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_decay_csv(report: SolveReport, spec: ProblemSpec, path: Path) -> None:
    u = report.u_original
    center = np.zeros(spec.grid.dim)
    center[: report.x_eps.size] = report.x_eps / spec.cfg.eps
    dist = np.sqrt(np.sum((spec.grid.points - center) ** 2, axis=1))
    mask = (u.values > 0.0) & (spec.grid.norms <= 0.9 * spec.grid.half_width)
    data = np.column_stack([dist[mask], np.log(u.values[mask])])
    data = data[np.argsort(data[:, 0])]
    np.savetxt(path, data, delimiter=",", header="dist,log_value", comments="", fmt="%.17g")


def _emit_solve_artifacts(report: SolveReport, spec: ProblemSpec,
                          config_echo: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "report.json", report_to_dict(report, config_echo))
    field_to_csv(report.u_original, out / "field.csv")
    _write_decay_csv(report, spec, out / "decay.csv")


def _resolve_seed(seed_flag: str | None, grid: Grid):
    if seed_flag is None:
        return None
    if seed_flag == "gaussian":
        return "gaussian"
    return field_from_csv(grid, seed_flag)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    if "eps" not in cfg:
        raise ConfigError("solve requires 'eps' in the config")
    eps = float(cfg["eps"])
    out = Path(args.out)
    spec = build_problem(cfg, eps)
    opts = _build_solver_options(cfg, out, args.dump_fields)
    if args.seed is not None:
        opts.seed = _resolve_seed(args.seed, spec.grid)
    if opts.snapshot_dir:
        Path(opts.snapshot_dir).mkdir(parents=True, exist_ok=True)
    report = solve_critical(spec, opts)
    _emit_solve_artifacts(report, spec, cfg, out)
    return EXIT_PENALIZED if report.penalization_active else EXIT_OK


SWEEP_BASE_COLUMNS = ["eps", "d_eps"]
SWEEP_TAIL_COLUMNS = ["decay_slope", "profile_dist", "penalization_active", "status"]


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    eps_list = cfg.get("eps_list")
    if not eps_list:
        raise ConfigError("sweep requires a non-empty 'eps_list'")
    eps_list = [float(e) for e in eps_list]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    opts = _build_solver_options(cfg, out, args.dump_fields)
    if args.seed is not None:
        if args.seed != "gaussian":
            raise ConfigError("sweep grids change with eps; only the named "
                              "'gaussian' seed is supported here")
        opts.seed = "gaussian"

    entries = continuation_sweep(lambda e: build_problem(cfg, e), eps_list, opts)

    dim = int(cfg.get("grid", {}).get("dim", 1))
    xcols = [f"x_eps_{i + 1}" for i in range(dim)]
    header = ",".join(SWEEP_BASE_COLUMNS + xcols + SWEEP_TAIL_COLUMNS)
    lines = [header]
    worst = EXIT_OK
    any_ok = False
    for i, entry in enumerate(entries):
        eps = entry["eps"]
        if "error" in entry:
            row = [f"{eps:.17g}", "nan"] + ["nan"] * dim + ["nan", "nan", "true",
                                                            entry["error"].split(":")[0]]
            worst = EXIT_ERROR
        else:
            rep: SolveReport = entry["report"]
            any_ok = True
            x = list(rep.x_eps) + [0.0] * (dim - rep.x_eps.size)
            slope = rep.decay.slope if rep.decay is not None else float("nan")
            row = ([f"{eps:.17g}", f"{rep.d_est:.17g}"]
                   + [f"{v:.17g}" for v in x[:dim]]
                   + [f"{slope:.17g}", f"{rep.profile_dist:.17g}",
                      "true" if rep.penalization_active else "false", rep.status])
            if rep.penalization_active and worst == EXIT_OK:
                worst = EXIT_PENALIZED
            _write_json(out / f"report_{i:03d}.json", report_to_dict(rep, cfg))
        lines.append(",".join(row))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    if not any_ok:
        return EXIT_ERROR
    return worst


def cmd_saddle(args) -> int:
    cfg = load_config(args.config)
    if "eps" not in cfg:
        raise ConfigError("saddle requires 'eps' in the config")
    pts = cfg.get("saddle_points")
    if not pts:
        raise ConfigError("saddle requires a non-empty 'saddle_points' list")
    eps = float(cfg["eps"])
    out = Path(args.out)
    spec = build_problem(cfg, eps)
    opts = _build_solver_options(cfg, out, args.dump_fields)
    report = saddle_minmax(spec, pts, opts, threads=max(1, args.threads))
    _emit_solve_artifacts(report, spec, cfg, out)
    return EXIT_PENALIZED if report.penalization_active else EXIT_OK


def cmd_validate(args) -> int:
    mutate = "eta-sign" if args.inject_eta_sign_error else None
    results = run_validation(mutate=mutate)
    width = max(len(r.name) for r in results)
    all_ok = True
    for r in results:
        flag = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {flag}  {r.detail}")
        all_ok &= r.passed
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "validate.json",
                    {"results": [{"name": r.name, "passed": r.passed, "detail": r.detail}
                                 for r in results]})
    return EXIT_OK if all_ok else EXIT_ERROR


def cmd_limit_profile(args) -> int:
    if args.b <= 0:
        print("error: b must be positive", file=sys.stderr)
        return EXIT_ERROR
    prof = limit_profile(args.a, args.b, args.dim)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    r = np.linspace(0.0, 8.0 / math.sqrt(args.b), 513)
    pts = np.zeros((r.size, args.dim))
    pts[:, 0] = r
    vals = prof.profile(pts)
    np.savetxt(out / "profile.csv", np.column_stack([r, vals]), delimiter=",",
               header="r,value", comments="", fmt="%.17g")
    print(f"level m(a={args.a:g}, b={args.b:g}, N={args.dim}) = {prof.level:.12g}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="logbound",
                                description="bound states of logarithmic"
                                            " Schrodinger equations")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--dump-fields", action="store_true",
                        help="dump iterate snapshots")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seed", default=None, help="'gaussian' or a field CSV path")

    sp = sub.add_parser("solve", help="solve at a single eps")
    add_common(sp)
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("sweep", help="continuation sweep over eps_list")
    add_common(sp)
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("saddle", help="min-max over a seed family")
    add_common(sp)
    sp.set_defaults(fn=cmd_saddle)

    sp = sub.add_parser("validate", help="run the property suite")
    sp.add_argument("--out", default=None)
    sp.add_argument("--inject-eta-sign-error", action="store_true",
                    help=argparse.SUPPRESS)  # test mode: mutate the ramp kernel
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("limit-profile", help="emit the closed-form ground state")
    sp.add_argument("a", type=float)
    sp.add_argument("b", type=float)
    sp.add_argument("dim", type=int)
    sp.add_argument("--out", default="out")
    sp.set_defaults(fn=cmd_limit_profile)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except LogboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
