"""Command-line entry point.

    acsphere solve --geometry clifford --p 1 --q 1 --eps 0.05 --out runs/cl
    acsphere spectrum --solution runs/cl/profile.csv --eps 0.05 --out runs/cl
    acsphere flow --from-solution runs/cl/profile.csv --perturb 0.01 --out runs/fl
    acsphere report --geometry clifford --p 1 --q 1 --eps-list 0.2,0.1,0.05

Parameters come from an optional YAML file (``--config``) overridden by
flags.  Every run directory gets ``config.echo`` plus the subcommand's
CSV/JSON artifacts; JSON is written with sorted keys and no timestamps so
identical configs give byte-identical output.

Exit codes: 0 pass, 1 acceptance failure, 2 usage/config error, 3 numerical
error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import acceptance as A
from . import flow as F
from . import geometry as Gm
from . import grid as G
from . import measures as M
from . import spectrum as S
from . import stationary as St
from .errors import AcsphereError, ConfigError, PreconditionError
from .potential import by_name

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "geometry": "clifford",
    "n": 2,
    "p": 1,
    "q": 1,
    "eps": 0.05,
    "eps_list": [0.2, 0.1, 0.05],
    "nodes": 2000,
    "potential": "quartic",
    "out": "run",
    "seed": 0,
}

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "minProperties": 1,
    "additionalProperties": False,
    "properties": {
        "geometry": {"enum": ["equatorial", "clifford"]},
        "n": {"type": "integer", "minimum": 2},
        "p": {"type": "integer", "minimum": 1},
        "q": {"type": "integer", "minimum": 1},
        "eps": _POS,
        "eps_list": {"type": "array", "items": _POS, "minItems": 1},
        "nodes": {"type": "integer", "minimum": G.MIN_NODES},
        "potential": {"type": "string"},
        "coeffs": {"type": "array", "items": _NUM, "minItems": 2},
        "out": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "layers": {"type": "string"},
        "bo": {"type": "boolean"},
        "solution": {"type": "string"},
        "initial": {"type": "string"},
        "perturb": _NUM,
        "dt": _POS,
        "t_max": _POS,
        "settle_tol": _POS,
        "levels": {"type": "integer", "minimum": 1, "maximum": 6},
        "refine": {"type": "boolean"},
        "cutoff": _POS,
        "d0": _POS,
        "triples": {"type": "integer", "minimum": 1},
        "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 10}},
    },
}


# ---------------------------------------------------------------- config


def _csv_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _csv_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="acsphere", description="Symmetry-reduced Allen-Cahn laboratory on round spheres.")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file of parameters (flags override it)")
    common.add_argument("--geometry", choices=["equatorial", "clifford"])
    common.add_argument("--n", type=int, help="equatorial: dimension of the sphere S^n")
    common.add_argument("--p", type=int, help="clifford: first factor dimension")
    common.add_argument("--q", type=int, help="clifford: second factor dimension")
    common.add_argument("--eps", type=float)
    common.add_argument("--eps-list", dest="eps_list", type=_csv_floats, help="comma separated, strictly decreasing")
    common.add_argument("--nodes", type=int)
    common.add_argument("--potential", help="quartic or polynomial (with coeffs in the config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)

    p = sub.add_parser("solve", parents=[common], help="stationary solution")
    p.add_argument("--layers", help="r1:+,r2:- (default: one layer at the minimal radius)")
    p.add_argument("--bo", action="store_const", const=True, help="Brezis-Oswald path")

    p = sub.add_parser("spectrum", parents=[common], help="index, nullity and per-mode eigenvalues")
    p.add_argument("--solution", help="profile CSV (r,u); solved from scratch if absent")
    p.add_argument("--refine", action="store_const", const=True, help="re-solve on 2N nodes and extrapolate")
    p.add_argument("--cutoff", type=float)

    p = sub.add_parser("flow", parents=[common], help="parabolic flow to equilibrium")
    p.add_argument("--initial", help="profile CSV to start from")
    p.add_argument("--from-solution", dest="solution", help="profile CSV of a stationary solution")
    p.add_argument("--perturb", type=float, help="theta in u + theta*phi_1")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--settle-tol", dest="settle_tol", type=float)

    p = sub.add_parser("measure", parents=[common], help="energy, varifold mass and nodal set")
    p.add_argument("--solution", help="profile CSV (r,u); solved from scratch if absent")

    sub.add_parser("sweep", parents=[common], help="continuation in eps with spectra and masses")

    p = sub.add_parser("frankel-demo", parents=[common], help="three-layer equatorial solution")
    p.add_argument("--d0", type=float, help="initial half separation (default 5 eps)")
    p.add_argument("--triples", type=int, help="random triples for the intersection oracle")

    p = sub.add_parser("oracle-check", parents=[common], help="constant-potential spectrum oracle")
    p.add_argument("--levels", type=int)

    p = sub.add_parser("report", parents=[common], help="sweep table plus the acceptance suite")
    p.add_argument("--criteria", type=_csv_ints, help="subset of criteria, e.g. 1,2,5")
    return ap


def load_config(args: argparse.Namespace) -> dict:
    """Defaults <- YAML file <- flags, then schema and resolution checks."""
    cfg: dict = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
            data = yaml.safe_load(text)
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            jsonschema.validate(data, SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"schema violation: {exc.message}") from exc
        cfg.update(data)
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")}
    merged = {**DEFAULTS, **cfg, **flags}
    if args.command == "frankel-demo":
        # the demo lives on the equatorial reduction and defaults to a thinner interface
        merged["geometry"] = "equatorial"
        if "eps" not in cfg and "eps" not in flags:
            merged["eps"] = 0.02
    try:
        jsonschema.validate(merged, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"schema violation: {exc.message}") from exc
    merged["command"] = args.command
    _check_config(merged)
    return merged


def _check_config(cfg: dict) -> None:
    el = cfg["eps_list"]
    if any(b >= a for a, b in zip(el, el[1:])):
        raise ConfigError("eps_list must be strictly decreasing")
    g = geometry_of(cfg)
    h = (g.r_max - g.r_min) / (cfg["nodes"] - 1)
    used = el if cfg["command"] in ("sweep", "report") else [cfg["eps"]]
    if cfg["command"] != "oracle-check" and h > min(used) / 4:
        raise ConfigError(f"grid spacing h = {h:.4g} exceeds eps/4 = {min(used) / 4:.4g}; raise --nodes")


def geometry_of(cfg: dict) -> Gm.ReducedGeometry:
    try:
        return Gm.from_name(cfg["geometry"], n=cfg["n"], p=cfg["p"], q=cfg["q"])
    except AcsphereError as exc:
        raise ConfigError(str(exc)) from exc


def potential_of(cfg: dict):
    try:
        return by_name(cfg["potential"], cfg.get("coeffs"))
    except (AcsphereError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- output


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                         for v in row])


def _outdir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    echo = {k: v for k, v in cfg.items() if k != "out"}
    (out / "config.echo").write_text(yaml.safe_dump(_plain(echo), sort_keys=True))
    return out


def _format_table(rows: list[dict], cols: list[str]) -> str:
    def fmt(v):
        if v is None:
            return "-"
        if isinstance(v, bool):
            return "pass" if v else "FAIL"
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    cells = [[fmt(r.get(c)) for c in cols] for r in rows]
    width = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, width))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, width)) for row in cells]
    return "\n".join(lines)


TABLE_COLS = ["geometry", "eps", "index", "nullity", "nu_expected", "energy_mass", "target_area",
              "relative_gap", "passed"]


# ---------------------------------------------------------------- commands


def _grid(cfg):
    return G.build_grid(geometry_of(cfg), cfg["nodes"])


def _solution(cfg, grid, pot) -> np.ndarray:
    if cfg.get("solution"):
        return G.Profile.read_csv(cfg["solution"], grid=grid).values
    res = St.solve_layers(grid, cfg["eps"], [(grid.geometry.minimal_radius, 1)], potential=pot)
    if not res.converged:
        raise AcsphereError(res.message or "Newton did not converge", where="stationary.newton_solve")
    return res.values


def cmd_solve(cfg) -> int:
    pot = potential_of(cfg)
    grid = _grid(cfg)
    eps = cfg["eps"]
    if cfg.get("bo"):
        res = St.brezis_oswald_solve(grid, eps, pot)
    else:
        layers = St.parse_layers(cfg["layers"]) if cfg.get("layers") else [(grid.geometry.minimal_radius, 1)]
        res = St.solve_layers(grid, eps, layers, potential=pot)
    out = _outdir(cfg)
    res.profile.to_csv(out / "profile.csv")
    dump_json(res.metadata(), out / "report.json")
    print(f"{grid.geometry.label} eps={eps}: converged={res.converged} residual={res.residual_norm:.3e} "
          f"iterations={res.iterations}")
    return EXIT_OK if res.converged else EXIT_NUMERIC


def cmd_spectrum(cfg) -> int:
    pot = potential_of(cfg)
    grid = _grid(cfg)
    eps = cfg["eps"]
    St.check_resolution(grid, eps, "cli.spectrum")
    u = _solution(cfg, grid, pot)
    fine = None
    if cfg.get("refine"):
        fine_res = St.refine(St.SolveResult(G.Profile(grid, u), eps, 0.0, 0, True, []), potential=pot)
        if not fine_res.converged:
            raise AcsphereError("refined solve did not converge", where="stationary.refine")
        fine = (fine_res.grid, fine_res.values)
    rep = S.assemble(grid, u, eps, pot, cutoff=cfg.get("cutoff", S.DEFAULT_CUTOFF), fine=fine)
    out = _outdir(cfg)
    d = rep.to_dict()
    d["modes"] = [m.to_dict() for m in rep.modes]
    dump_json(d, out / "spectrum.json")
    write_csv(out / "modes.csv", ["mode", "multiplicity", "eigenvalues"],
              [[":".join(map(str, m.mode_id)), m.multiplicity, " ".join(repr(float(x)) for x in m.eigenvalues)]
               for m in rep.modes])
    print(f"{rep.geometry} eps={eps}: index={rep.index} nullity={rep.nullity} "
          f"killing={rep.killing_nullity_found}/{rep.killing_nullity_expected} zero_tol={rep.zero_tol:.3e}")
    return EXIT_OK


def cmd_flow(cfg) -> int:
    pot = potential_of(cfg)
    grid = _grid(cfg)
    eps = cfg["eps"]
    St.check_resolution(grid, eps, "cli.flow")
    info = {}
    if cfg.get("initial"):
        u0 = G.Profile.read_csv(cfg["initial"], grid=grid).values
    else:
        u = _solution(cfg, grid, pot)
        theta = cfg.get("perturb", 0.01)
        u0, lam1, _ = F.perturb_along_ground_state(grid, eps, u, theta, pot)
        info = {"perturb": theta, "lambda_1": lam1,
                "subsolution": F.is_subsolution(grid, eps, u0, pot),
                "supersolution": F.is_subsolution(grid, eps, -u0, pot)}
    tr = F.flow_to_equilibrium(grid, eps, u0, dt=cfg.get("dt"), t_max=cfg.get("t_max"),
                               settle_tol=cfg.get("settle_tol", 1e-8), potential=pot)
    out = _outdir(cfg)
    write_csv(out / "flow.csv", ["time", "energy", "min_u", "max_u"], tr.rows())
    G.Profile(grid, tr.snapshots[-1]).to_csv(out / "profile.csv")
    final = tr.snapshots[-1]
    info.update(steps=tr.steps, dt=tr.dt, final_time=tr.times[-1], settled=tr.settled,
                monotone_up=tr.monotone_up, monotone_down=tr.monotone_down,
                energy_nonincreasing=tr.energy_nonincreasing,
                distance_to_plus=float(np.max(np.abs(final - 1))), distance_to_minus=float(np.max(np.abs(final + 1))))
    dump_json(info, out / "report.json")
    print(f"flow: steps={tr.steps} settled={tr.settled} up={tr.monotone_up} down={tr.monotone_down} "
          f"min={final.min():.6f} max={final.max():.6f}")
    return EXIT_OK if tr.settled else EXIT_NUMERIC


def cmd_measure(cfg) -> int:
    pot = potential_of(cfg)
    grid = _grid(cfg)
    eps = cfg["eps"]
    u = _solution(cfg, grid, pot)
    rep = M.mass_report(grid, u, eps, pot)
    nd = M.nodal_data(grid, u)
    out = _outdir(cfg)
    dump_json({**rep.to_dict(), "nodal_radii": nd.radii, "separating": nd.separating, "connected": nd.connected},
              out / "report.json")
    print(f"{grid.geometry.label} eps={eps}: energy={rep.energy:.6f} energy_mass={rep.energy_mass:.6f} "
          f"area={rep.limit_area:.6f} gap={rep.relative_gap:.3%}")
    return EXIT_OK


def cmd_sweep(cfg) -> int:
    rows = A.sweep_rows(geometry_of(cfg), cfg["eps_list"], cfg["nodes"], potential_of(cfg))
    out = _outdir(cfg)
    write_csv(out / "sweep.csv", TABLE_COLS, [[r.get(c) for c in TABLE_COLS] for r in rows])
    dump_json({"rows": rows}, out / "report.json")
    print(_format_table(rows, TABLE_COLS))
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NUMERIC


def cmd_frankel(cfg) -> int:
    pot = potential_of(cfg)
    grid = _grid(cfg)
    eps = cfg["eps"]
    res = St.three_layer_solve(grid, eps, d0=cfg.get("d0"), potential=pot)
    g = grid.geometry
    radii = res.notes["nodal_radii"]
    disjoint, margin = M.radius_sets_disjoint(radii, [g.r_mid], tol=grid.h)
    rng = np.random.default_rng(cfg["seed"])
    triples = cfg.get("triples", 100)
    agree = 0
    for _ in range(triples):
        theta0 = float(rng.uniform(0.05, math.pi - 0.05))
        phi = float(rng.uniform(0.0, math.pi / 2))
        r0 = float(rng.uniform(0.05, math.pi / 2 - 0.05))
        axis = (math.cos(phi), math.sin(phi))
        agree += M.nodal_intersection(theta0, axis, r0).intersects == M.nodal_intersection_monte_carlo(
            theta0, axis, r0, rng=rng)
    out = _outdir(cfg)
    res.profile.to_csv(out / "profile.csv")
    meta = res.metadata()
    meta.update(disjoint_from_equator=disjoint, disjoint_margin=margin, triples=triples, triples_agree=agree,
                spectrum=A.spectral_summary(grid, res.values, eps, pot))
    dump_json(meta, out / "report.json")
    ok = bool(res.notes["demo_ok"]) and disjoint and agree == triples
    print(f"three-layer eps={eps}: radii={['%.6f' % r for r in radii]} d={res.notes['d']:.6f} "
          f"disjoint={disjoint} oracle {agree}/{triples}" + ("" if ok else f"  [{res.message}]"))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_oracle(cfg) -> int:
    g = geometry_of(cfg)
    levels = S.constant_spectrum_oracle(g, levels=cfg.get("levels", 4), node_count=cfg["nodes"])
    rows = [{"degree": lv.degree, "value": lv.expected_value, "multiplicity": lv.multiplicity,
             "expected_multiplicity": lv.expected_multiplicity, "max_rel_error": lv.max_rel_error}
            for lv in levels]
    out = _outdir(cfg)
    dump_json({"geometry": g.label, "levels": rows}, out / "report.json")
    print(_format_table(rows, list(rows[0])))
    return EXIT_OK


def cmd_report(cfg) -> int:
    ctx = A.Context(potential_of(cfg), cfg["nodes"])
    rows = A.sweep_rows(geometry_of(cfg), cfg["eps_list"], cfg["nodes"], ctx.potential, ctx=ctx)
    results = A.run_all(ctx, cfg.get("criteria"))
    out = _outdir(cfg)
    write_csv(out / "sweep.csv", TABLE_COLS, [[r.get(c) for c in TABLE_COLS] for r in rows])
    zero = A.zero_state_index(geometry_of(cfg), cfg["eps_list"][-1], cfg["nodes"], ctx.potential)
    dump_json({"table": rows, "criteria": [r.to_dict() for r in results], "zero_state": zero},
              out / "report.json")
    print(_format_table(rows, TABLE_COLS))
    print()
    for r in results:
        print(r.line())
    ok = all(r["passed"] for r in rows) and all(r.passed for r in results)
    return EXIT_OK if ok else EXIT_FAIL


HANDLERS = {
    "solve": cmd_solve,
    "spectrum": cmd_spectrum,
    "flow": cmd_flow,
    "measure": cmd_measure,
    "sweep": cmd_sweep,
    "frankel-demo": cmd_frankel,
    "oracle-check": cmd_oracle,
    "report": cmd_report,
}


def run(cfg: dict) -> int:
    """Execute a validated config; returns the exit status."""
    try:
        return HANDLERS[cfg["command"]](cfg)
    except (ConfigError, PreconditionError) as exc:
        print(f"usage error {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AcsphereError as exc:
        print(f"numerical error {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
