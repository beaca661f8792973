"""Command-line front end: ``tmcrit {mesh,eigen,solve,sweep,verify} ...``.

Every run writes ``<name>.json`` (summary with the resolved config embedded)
plus CSV traces into the output directory: ``--out``, else the
``TMCRIT_OUTPUT_DIR`` environment variable, else ``./tmcrit_out``.  A JSON
file given with ``--config`` supplies defaults; explicit flags win.

Exit codes: 0 pass, 1 numeric failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import checks
from .eigen import eigen_sequence, gap_threshold
from .functional import FunctionalParams, grad_power_integral, gradient_check
from .mesh import DomainSpec, generate_mesh
from .moser import (
    MoserSpec,
    cutoff_asymptotics_report,
    cutoff_test_mesh,
    moser_function,
    moser_level_certificate,
    moser_norm_power,
    moser_test_mesh,
    moser_tm_integral,
    smooth_radial_set,
)
from .solver import (
    LinkingError,
    bifurcation_sweep,
    build_linking_sets,
    minimax_mountain_pass,
    ps_threshold,
)

log = logging.getLogger("tmcrit")

ENV_OUT = "TMCRIT_OUTPUT_DIR"
GRADCHECK_RTOL = 1e-6
SLOPE_TOL = 0.3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    options: dict
    out: Path

    def to_dict(self) -> dict:
        return {"command": self.command, **self.options}


# ---------------------------------------------------------------- output helpers


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def write_json(path: Path, data) -> None:
    # repr-based float output is the shortest string that round-trips exactly
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, rows: list, fields: list | None = None) -> None:
    if not rows:
        path.write_text("")
        return
    fields = fields or list(rows[0])
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in r.items()})


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _int_range(text: str) -> list[int]:
    """'3:8' -> [3..8]; '4,8,16' -> list."""
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


# ---------------------------------------------------------------- subcommands


def _mesh_for(o) -> tuple:
    spec = DomainSpec.parse(o["domain"])
    return spec, generate_mesh(spec, o["h"])


def cmd_mesh(cfg: RunConfig) -> tuple[int, dict]:
    spec, mesh = _mesh_for(cfg.options)
    mesh.save(cfg.out / "mesh_data.json")
    q = mesh.element_measures
    summary = {
        "n_nodes": mesh.n_nodes,
        "n_elements": int(mesh.elements.shape[0]),
        "n_interior": mesh.n_interior,
        "h": mesh.h,
        "volume": mesh.volume,
        "exact_volume": spec.exact_volume,
        "min_element_measure": float(q.min()),
    }
    return (0 if q.min() > 0 else 1), summary


def cmd_eigen(cfg: RunConfig) -> tuple[int, dict]:
    o = cfg.options
    _, mesh = _mesh_for(o)
    est = eigen_sequence(mesh, o["N"], o["k"], tol=o["tol"], max_iter=o["max_iter"], seed=o["seed"])
    rows = [
        {"k": e.k, "iteration": i, "rayleigh": R, "residual": r}
        for e in est for i, (R, r) in enumerate(e.history)
    ]
    write_csv(cfg.out / "eigen_history.csv", rows)
    gaps = [
        gap_threshold(a.lambda_k, b.lambda_k, o["N"], mesh.volume) for a, b in zip(est[:-1], est[1:])
    ]
    summary = {"h": mesh.h, "volume": mesh.volume, "estimates": [e.to_dict() for e in est], "gap_thresholds": gaps}
    ok = len(est) == o["k"] and all(e.converged for e in est)
    return (0 if ok else 1), summary


def _lambda_level(eig, lam: float) -> int:
    return sum(e.lambda_k < lam for e in eig)


def cmd_solve(cfg: RunConfig) -> tuple[int, dict]:
    o = cfg.options
    _, mesh = _mesh_for(o)
    N = o["N"]
    if N != mesh.dim:
        raise UsageError(f"solve needs N equal to the domain dimension ({mesh.dim})")
    k_max = (o["k"] or 0) + 1 if o["k"] is not None else o["k_max"]
    eig = eigen_sequence(mesh, N, max(k_max, 1), tol=o["tol"], seed=o["seed"])
    if o["lambda"] is not None:
        lam = o["lambda"]
    elif o["lambda_rel"] is not None:
        lam = o["lambda_rel"] * eig[0].lambda_k
    else:
        raise UsageError("solve needs --lambda or --lambda-rel")
    k = _lambda_level(eig, lam) if o["k"] is None else o["k"]
    if k >= len(eig):
        raise UsageError(f"lambda={lam} is not below the computed lambda_{len(eig)}; raise --k-max")
    params = FunctionalParams(N, lam)
    try:
        sets = build_linking_sets(k, lam, mesh, params, eigen=eig, seed=o["seed"], tol=o["tol"])
    except LinkingError as exc:
        return 1, {"lambda": lam, "k": k, "error": str(exc), "diagnostics": exc.diagnostics}
    rep = minimax_mountain_pass(sets, params, o["tol"])
    write_csv(cfg.out / "solve_trace.csv", rep.history)
    (cfg.out / "solution.json").write_text(rep.u_star.to_json() + "\n")
    summary = {
        "lambda": lam,
        "k": k,
        "eigenvalues": [e.lambda_k for e in eig],
        "threshold": ps_threshold(params),
        "sets": sets.to_dict(),
        "report": rep.to_dict(),
        "bracket_ok": rep.bracket_ok(o["tol"]),
    }
    ok = rep.accepted and rep.residual <= o["residual_tol"] and rep.bracket_ok(o["tol"])
    return (0 if ok else 1), summary


def sweep_grid(eig, k: int, N: int, volume: float, n: int) -> list[float]:
    """n interior points of (max(lambda_k, gap), lambda_{k+1})."""
    lo = max(eig[k - 1].lambda_k, gap_threshold(eig[k - 1].lambda_k, eig[k].lambda_k, N, volume))
    return np.linspace(lo, eig[k].lambda_k, n + 2)[1:-1].tolist()


def cmd_sweep(cfg: RunConfig) -> tuple[int, dict]:
    o = cfg.options
    _, mesh = _mesh_for(o)
    N, k, m = mesh.dim, o["k"], o["m"]
    if o["N"] != N:
        raise UsageError(f"sweep needs N equal to the domain dimension ({N})")
    eig = eigen_sequence(mesh, N, k + m, tol=o["tol"], seed=o["seed"])
    grid = _floats(o["grid"]) if o["grid"] else sweep_grid(eig, k, N, mesh.volume, o["n_grid"])
    rep = bifurcation_sweep(k, m, grid, mesh, FunctionalParams(N), tol=o["tol"], eigen=eig, seed=o["seed"])
    write_csv(cfg.out / "sweep.csv", rep.entries)
    summary = rep.to_dict()
    ok = rep.complete and rep.all_within_bound and all(r < o["spearman_max"] for r in rep.spearman)
    return (0 if ok else 1), summary


def cmd_gradcheck(cfg: RunConfig) -> tuple[int, dict]:
    o = cfg.options
    _, mesh = _mesh_for(o)
    res = gradient_check(mesh, FunctionalParams(o["N"], o["lambda"] or 1.0), o["pairs"], o["eps"], o["seed"])
    write_csv(cfg.out / "gradcheck.csv", res.pop("rows"))
    res["passed"] = res["max_rel_error"] <= GRADCHECK_RTOL
    return (0 if res["passed"] else 1), res


def cmd_inequalities(cfg: RunConfig) -> tuple[int, dict]:
    o = cfg.options
    mesh = generate_mesh(DomainSpec.parse(o["domain"]), o["h"])
    reports = checks.check_all(o["N"], mesh, lam=o["lambda"] or 1.0, seed=o["seed"])
    rows = [{"check": r.name, **row} for r in reports for row in r.rows]
    write_csv(cfg.out / "inequalities.csv", rows, ["check", "inequality", "sample", "t", "margin", "margin_raw"])
    summary = {"reports": [r.to_dict() for r in reports], "all_passed": all(r.passed for r in reports)}
    return (0 if summary["all_passed"] else 1), summary


def cmd_moser(cfg: RunConfig) -> tuple[int, dict]:
    o = cfg.options
    N = o["N"]
    js = _int_range(o["j_range"])
    ms = _int_range(o["m_range"])
    norm_rows = []
    for j in js:
        lj = math.log(j)
        p = moser_norm_power(lj, N)
        norm_rows.append({"j": j, "norm_power": p, "norm_power_log_j": p * lj, "tm_integral": moser_tm_integral(lj, N)})
    write_csv(cfg.out / "moser_norms.csv", norm_rows)
    prod = [r["norm_power_log_j"] for r in norm_rows]
    summary: dict = {"norms": {"variation_ratio": max(prod) / min(prod), "bounded": max(prod) / min(prod) <= 3.0}}
    ok = summary["norms"]["bounded"]
    if N == 2:
        # discrete ||grad v_j||_N on graded discs, halving the relative element size
        spec = MoserSpec(js[0], radius=0.5)
        errs = []
        for hr in (0.2, 0.1, 0.05, 0.025):
            v = moser_function(spec, moser_test_mesh(spec, hr))
            errs.append(abs(grad_power_integral(v, N) ** (1.0 / N) - 1.0))
        ratios = [a / b for a, b in zip(errs[:-1], errs[1:])]
        summary["grad_norm"] = {"h_rel": [0.2, 0.1, 0.05, 0.025], "errors": errs, "ratios": ratios,
                                "halves": all(r >= 2.0 for r in ratios)}
        rep = cutoff_asymptotics_report(smooth_radial_set(cutoff_test_mesh(ms)), ms)
        write_csv(cfg.out / "cutoff.csv", rep.rows)
        slopes_ok = all(
            s["power"] is not None and s["power"] <= -N + SLOPE_TOL
            and abs(s["gradient"] + (N - 1)) <= SLOPE_TOL
            and s["psi"] <= -(N - 1) + SLOPE_TOL
            for s in rep.slopes
        )
        summary["cutoff"] = {"slopes": rep.slopes, "passed": slopes_ok}
        ok = ok and summary["grad_norm"]["halves"] and slopes_ok
    if o["cert_log10_j"]:
        spec = MoserSpec(10 ** o["cert_log10_j"], m=ms[0])
        cert = moser_level_certificate(spec, FunctionalParams(N, o["lambda"] or 1.0))
        summary["level_certificate"] = cert.to_dict()  # reported, not part of the pass flag
    summary["passed"] = bool(ok)
    return (0 if ok else 1), summary


COMMANDS = {
    "mesh": cmd_mesh,
    "eigen": cmd_eigen,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "gradcheck": cmd_gradcheck,
    "inequalities": cmd_inequalities,
    "moser": cmd_moser,
}


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, domain="unit-square", h=0.05, N=2):
    p.add_argument("--config", help="JSON file of option defaults (flags win)")
    p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./tmcrit_out)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--N", type=int, default=N)
    p.add_argument("--domain", default=domain, help="unit-square | rectangle:WxH | disc:R | cube:S")
    p.add_argument("--h", type=float, default=h)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="tmcrit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="{mesh,eigen,solve,sweep,verify}")
    leaves = {}

    p = sub.add_parser("mesh", help="generate a mesh and export it")
    _common(p)
    leaves["mesh"] = p

    p = sub.add_parser("eigen", help="eigenvalue estimates lambda_1..lambda_k")
    _common(p)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--max-iter", type=int, default=500)
    leaves["eigen"] = p

    p = sub.add_parser("solve", help="find a critical point of the energy")
    _common(p, h=0.025)
    p.add_argument("--lambda", type=float, default=None)
    p.add_argument("--lambda-rel", type=float, default=None, help="lambda as a multiple of lambda_1")
    p.add_argument("--k", type=int, default=None, help="linking level (default: inferred from lambda)")
    p.add_argument("--k-max", type=int, default=4, help="eigenvalues computed when --k is omitted")
    p.add_argument("--residual-tol", type=float, default=1e-8)
    leaves["solve"] = p

    p = sub.add_parser("sweep", help="track solution pairs across (lambda_k, lambda_{k+1})")
    _common(p)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m", type=int, default=2, help="number of solution pairs")
    p.add_argument("--grid", default=None, help="comma-separated lambda values")
    p.add_argument("--n-grid", type=int, default=6)
    p.add_argument("--spearman-max", type=float, default=-0.9)
    leaves["sweep"] = p

    pv = sub.add_parser("verify", help="verification suites")
    vsub = pv.add_subparsers(dest="target", metavar="{gradcheck,inequalities,moser}")
    p = vsub.add_parser("gradcheck", help="grad_Phi against central differences")
    _common(p, h=0.1)
    p.add_argument("--lambda", type=float, default=1.0)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--eps", type=float, default=1e-6)
    leaves["gradcheck"] = p
    p = vsub.add_parser("inequalities", help="closed-form inequality grids")
    _common(p, h=0.1)
    p.add_argument("--lambda", type=float, default=1.0)
    leaves["inequalities"] = p
    p = vsub.add_parser("moser", help="Moser function and cutoff estimates")
    _common(p)
    p.add_argument("--j-range", default="4:64")
    p.add_argument("--m-range", default="3:8")
    p.add_argument("--lambda", type=float, default=1.0)
    p.add_argument("--cert-log10-j", type=int, default=0, help="also run the level certificate at j=10^n")
    leaves["moser"] = p
    leaves["verify"] = pv
    return parser, leaves


def _leaf_name(args) -> str | None:
    if args.command == "verify":
        return getattr(args, "target", None)
    return args.command


def parse_config(argv: list[str]) -> RunConfig:
    parser, leaves = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        raise UsageError("no command given")
    args = parser.parse_args(argv)
    name = _leaf_name(args)
    if name is None:
        (leaves.get(args.command) or parser).print_usage(sys.stderr)
        raise UsageError("no command given")
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        known = {a.dest for a in leaves[name]._actions}
        bad = sorted(set(cfg) - known)
        if bad:
            raise UsageError(f"unknown config keys for {name}: {', '.join(bad)}")
        leaves[name].set_defaults(**cfg)
        args = parser.parse_args(argv)
    opts = {k: v for k, v in vars(args).items() if k not in ("command", "target", "config", "verbose", "out")}
    if opts.get("N", 2) < 2 or opts.get("h", 1.0) <= 0 or opts.get("tol", 1.0) <= 0:
        raise UsageError("need N >= 2, h > 0 and tol > 0")
    for key in ("lambda", "lambda_rel"):
        if opts.get(key) is not None and not opts[key] > 0:
            raise UsageError(f"--{key.replace('_', '-')} must be positive")
    out = Path(args.out or os.environ.get(ENV_OUT) or "tmcrit_out")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    return RunConfig(name, opts, out)


def run_command(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse already printed its message
        return 0 if exc.code == 0 else 2
    except UsageError as exc:
        print(f"tmcrit: error: {exc}", file=sys.stderr)
        return 2
    cfg.out.mkdir(parents=True, exist_ok=True)
    try:
        code, summary = COMMANDS[cfg.command](cfg)
    except (UsageError, ValueError) as exc:  # bad inputs, incl. MeshError and violated preconditions
        print(f"tmcrit: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        code, summary = 1, {"error": f"{type(exc).__name__}: {exc}"}
    summary = {"config": cfg.to_dict(), "status": "pass" if code == 0 else "fail", **summary}
    write_json(cfg.out / f"{cfg.command}.json", summary)
    print(f"{cfg.command}: {summary['status']} -> {cfg.out / (cfg.command + '.json')}")
    return code


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
