"""Command-line front end.

Every command writes one JSON report (to --out, or stdout) embedding the
run configuration and SHA-256 digests of its inputs. Exit codes: 0 success,
2 input error, 3 a proven bound failed, 4 numeric error.
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone

import numpy as np

from . import io
from .config import EXAMPLES, build_config, load_toml
from .errors import BoundViolation, InputError, LiporosError
from .extraction import check_well_separated, extract_well_separated
from .kalton import kalton_decompose
from .kr import AGREEMENT_TOL, kr_solve
from .metric import LipFunction, PointCloud, lip_norm
from .operators import glue, mcshane_extend
from .porosity import density_profile, lebesgue_density_scan, porosity_profile
from .showcase import (CantorDustSpec, FatCantorSpec, LatticeSpec, build_annuli_family, build_test_set,
                       fat_cantor_intervals, fat_cantor_measure, verify_power_lattice,
                       verify_square_lattice_nonporous)
from .spaces import BallSequence, EuclideanSpace, space_from_dict
from .suite import run_suite


class Outcome:
    """Result payload, optional CSV rows, and the exit status it implies."""

    def __init__(self, result, rows=None, failed=False):
        self.result = result
        self.rows = rows
        self.failed = failed


def _space(cfg):
    if cfg.space is None:
        return None
    d = dict(cfg.space)
    if d["kind"] == "heisenberg" and cfg.tol is not None:
        d["tol"] = cfg.tol
    return space_from_dict(d)


def _need_inputs(cfg, k, what):
    if len(cfg.inputs) < k:
        raise InputError(f"{cfg.command} needs {what}")


def _molecule(cfg):
    """One molecule file, or a cloud followed by a [{point_index, weight}] list."""
    _need_inputs(cfg, 1, "--input MOLECULE")
    space = _space(cfg)
    if len(cfg.inputs) == 1:
        return io.load_molecule(cfg.inputs[0], space)
    return io.load_molecule(cfg.inputs[1], space, cloud=io.load_cloud(cfg.inputs[0], space))


# ------------------------------------------------------------- commands


def cmd_analyze_porosity(cfg):
    _need_inputs(cfg, 1, "--input CLOUD")
    cloud = io.load_cloud(cfg.inputs[0], _space(cfg))
    if not cfg.scales:
        raise InputError("analyze-porosity needs --scales")
    rep = porosity_profile(cloud, cfg.scales, cfg.probes, cfg.seed, h=cfg.h)
    out = rep.to_dict()
    out["non_porous_trend"] = rep.non_porous_trend(float(cfg.params.get("threshold", 0.05)))
    rows = [{"scale": r, "lambda_hat": lam, "resolution": h}
            for r, lam, h in zip(rep.scales, rep.lambda_hat, rep.resolutions)]
    return Outcome(out, rows)


def cmd_density(cfg):
    _need_inputs(cfg, 2, "--input CLOUD --input BALLS")
    space = _space(cfg)
    cloud = io.load_cloud(cfg.inputs[0], space)
    balls = io.load_balls(cfg.inputs[1], cloud.space)
    thr = cfg.params.get("threshold")
    prof = density_profile(cloud, balls, h=cfg.h, threshold=None if thr is None else float(thr))
    rows = [{"index": i, "radius": b.radius, "covering": c, "eps": e}
            for i, (b, c, e) in enumerate(zip(balls, prof.covering, prof.eps))]
    return Outcome(prof.to_dict(), rows)


def cmd_extract_balls(cfg):
    _need_inputs(cfg, 2, "--input CLOUD --input BALLS")
    cloud = io.load_cloud(cfg.inputs[0], _space(cfg))
    d = io._read_json(cfg.inputs[1])
    cands = BallSequence.from_dict(d.get("witnesses", d), cloud.space)
    x0 = cfg.params.get("x0")
    ex = extract_well_separated(cloud, cands, x0=None if x0 is None else np.asarray(x0, dtype=float))
    rows = [{"index": i, "radius": b.radius, **{f"c{k}": v for k, v in enumerate(b.center)}}
            for i, b in enumerate(ex.balls)]
    return Outcome(ex.to_dict(), rows)


def cmd_extend(cfg):
    _need_inputs(cfg, 2, "--input FUNCTION --input QUERIES")
    space = _space(cfg)
    f = io.load_function(cfg.inputs[0], space)
    Q = io.load_cloud(cfg.inputs[1], f.cloud.space).points
    L = cfg.params.get("L")
    norm = lip_norm(f) if len(f.cloud) > 1 else 0.0
    L = norm if L is None else float(L)
    F = mcshane_extend(f, Q, L)
    allp = np.vstack([f.cloud.points, Q])
    vals = np.concatenate([f.values, F])
    D = f.cloud.space.pairwise(allp)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(D > 0, np.abs(vals[:, None] - vals[None, :]) / np.where(D > 0, D, 1), 0.0)
    measured = float(slope.max())
    if measured > L * (1 + 1e-12) + 1e-9:
        raise BoundViolation(f"extension slope {measured} exceeds L = {L}")
    rows = [{"index": i, "value": v} for i, v in enumerate(F)]
    return Outcome({"L": L, "lip_norm": norm, "measured_slope": measured, "values": F.tolist()}, rows)


def cmd_kr_norm(cfg):
    mu = _molecule(cfg)
    res = kr_solve(mu, tol=cfg.tol or AGREEMENT_TOL)
    return Outcome({"value": res.value, "lp_value": res.lp_value, "flow_value": res.flow_value,
                    "support": mu.indices.tolist(), "weights": mu.weights.tolist(),
                    "potentials": res.potentials.tolist()})


def cmd_decompose(cfg):
    mu = _molecule(cfg)
    dec = kalton_decompose(mu, check=True)
    layers = [{"n": L.n, "annulus": list(L.annulus), "support": L.molecule.indices.tolist(),
               "weights": L.molecule.weights.tolist(), "kr_norm": L.kr_norm} for L in dec.layers]
    rows = [{"n": L["n"], "kr_norm": L["kr_norm"], "size": len(L["support"])} for L in layers]
    return Outcome({"total_norm": dec.total_norm, "layer_norm_sum": dec.layer_norm_sum, "ratio": dec.ratio,
                    "bound": 45.0, "layers": layers}, rows)


def cmd_glue(cfg):
    _need_inputs(cfg, 1, "--input BLOCKS")
    d = io._read_json(cfg.inputs[0])
    space = _space(cfg) or space_from_dict(d["space"])
    x0 = space.check_point(np.asarray(d["base_point"], dtype=float))
    blocks = d.get("blocks") or []
    if len(blocks) < 2:
        raise InputError("glue needs at least two blocks")
    sets, fs = [], []
    for b in blocks:
        P = np.asarray(b["points"], dtype=float)
        v = np.asarray(b["values"], dtype=float)
        if len(P) != len(v):
            raise InputError("each block needs one value per point")
        sets.append(P)
        fs.append(LipFunction(PointCloud(space, np.vstack([x0, P]), 0), np.concatenate([[0.0], v])))
    cert = check_well_separated(space, sets, x0)
    if not cert.lam > 0:
        raise InputError("blocks are not well separated (lambda = 0)")
    g = glue(fs, cert, check=True)
    norms = [lip_norm(f) for f in fs]
    return Outcome({"certificate": cert.to_dict(), "block_norms": norms, "glued_norm": lip_norm(g),
                    "bound": max(norms) / min(cert.lam, 1.0)})


def cmd_verify_suite(cfg):
    size = cfg.params.get("size", "quick")
    crit = cfg.params.get("criteria")
    results = run_suite(cfg.seed, size=size, criteria=crit)
    rows = [{"criterion": r.number, "name": r.name, "passed": r.passed} for r in results]
    return Outcome({"size": size, "seed": cfg.seed, "all_passed": all(r.passed for r in results),
                    "criteria": [r.to_dict() for r in results]}, rows, failed=not all(r.passed for r in results))


def ex_powers(cfg):
    N = int(cfg.params.get("N", 12))
    rep = verify_power_lattice(LatticeSpec.powers(2, N))
    rows = [c.to_dict() for c in rep.checks]
    return Outcome(rep.to_dict(), rows, failed=not rep.holds)


def ex_squares(cfg):
    ns = cfg.params.get("n", [5, 10, 20])
    hf = cfg.params.get("h_fraction", 1.0 / 64.0)
    rows = verify_square_lattice_nonporous(ns, h_fraction=hf)
    out = [r.to_dict() for r in rows]
    flat = [{"n": r.n, "ratio": r.ratio, "bound": r.bound, "holds": r.holds} for r in rows]
    return Outcome({"rows": out, "holds": all(r.holds for r in rows)}, flat, failed=not all(r.holds for r in rows))


def ex_annuli(cfg):
    nmax = int(cfg.params.get("nmax", 6))
    samples = int(cfg.params.get("samples", 1000))
    space = _space(cfg) or EuclideanSpace(2, 2)
    fam = build_annuli_family(space, nmax, samples, cfg.seed)
    closed = check_well_separated(space, fam.annuli, fam.base_point)
    exhaustive = check_well_separated(space, fam.sets, fam.base_point)
    rows = [{"annulus": n, **{f"x{k}": v for k, v in enumerate(p)}} for n, S in zip(fam.n_values, fam.sets) for p in S]
    ok = closed.lam >= 1 / 16
    return Outcome({"n_values": fam.n_values, "closed_form": closed.to_dict(), "exhaustive": exhaustive.to_dict(),
                    "target_constant": 1 / 16, "holds": ok}, rows, failed=not ok)


def ex_dust(cfg):
    ratio = float(cfg.params.get("ratio", 0.25))
    depth = int(cfg.params.get("depth", 6))
    cloud = build_test_set(CantorDustSpec(ratio, depth))
    scales = cfg.scales or [ratio ** k for k in range(depth - 1, -1, -1)]
    rep = porosity_profile(cloud, scales, cfg.probes, cfg.seed or 0, h=cfg.h)
    rows = [{"scale": r, "lambda_hat": lam} for r, lam in zip(rep.scales, rep.lambda_hat)]
    return Outcome({"ratio": ratio, "depth": depth, "points": len(cloud), "profile": rep.to_dict()}, rows)


def ex_fatcantor(cfg):
    depth = int(cfg.params.get("depth", 5))
    spec = FatCantorSpec.quarter_powers(depth)
    grid = build_test_set(spec)
    ivs = fat_cantor_intervals(spec)
    a, b = ivs[len(ivs) // 3]
    x = float((a + b) / 2)
    point = np.array([x, 0.5])
    radii = [0.25 / 2 ** k for k in range(12) if 0.25 / 2 ** k >= 8 * grid.pitch]
    dens = lebesgue_density_scan(grid, point, radii)
    exact = [float(fat_cantor_measure(ivs, x - r, x + r) / (2 * r)) for r in radii]
    rows = [{"radius": r, "grid_density": g, "exact_density": e} for r, g, e in zip(radii, dens, exact)]
    return Outcome({"depth": depth, "point": point.tolist(), "pitch": grid.pitch,
                    "measure": float(grid.mask.mean()), "radii": radii, "grid_density": dens.tolist(),
                    "exact_density": exact}, rows)


COMMANDS = {"analyze-porosity": cmd_analyze_porosity, "density": cmd_density, "extract-balls": cmd_extract_balls,
            "extend": cmd_extend, "kr-norm": cmd_kr_norm, "decompose": cmd_decompose, "glue": cmd_glue,
            "verify-suite": cmd_verify_suite}
EXAMPLE_COMMANDS = {"powers": ex_powers, "squares": ex_squares, "annuli": ex_annuli, "dust": ex_dust,
                    "fatcantor": ex_fatcantor}


# ---------------------------------------------------------------- driver


def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _common(p):
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--space", help="e.g. euclidean(2,inf), euclidean:2:1, heisenberg")
    p.add_argument("--input", action="append", dest="inputs", help="input file (repeatable)")
    p.add_argument("--h", type=float, help="absolute grid resolution")
    p.add_argument("--scales", type=_floats, help="comma-separated radii")
    p.add_argument("--probes", type=int, help="probes per scale")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--csv", help="flattened per-row table")
    p.add_argument("--tol", type=float, help="numeric tolerance override")


def build_parser():
    parser = argparse.ArgumentParser(prog="liporos", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        if name in ("analyze-porosity", "density"):
            p.add_argument("--threshold", type=float)
        if name == "extract-balls":
            p.add_argument("--x0", type=_floats)
        if name == "extend":
            p.add_argument("--L", type=float)
        if name == "verify-suite":
            p.add_argument("--size", choices=["quick", "full"])
            p.add_argument("--criteria", type=_ints)
    ex = sub.add_parser("example")
    ex.add_argument("example", choices=EXAMPLES)
    _common(ex)
    ex.add_argument("--N", type=int)
    ex.add_argument("--n", type=_ints)
    ex.add_argument("--nmax", type=int)
    ex.add_argument("--samples", type=int)
    ex.add_argument("--ratio", type=float)
    ex.add_argument("--depth", type=int)
    return parser


_PARAM_FLAGS = ("threshold", "x0", "L", "size", "criteria", "N", "n", "nmax", "samples", "ratio", "depth")


def config_from_args(args):
    ns = vars(args)
    file_values = load_toml(ns["config"]) if ns.get("config") else {}
    params = {k: ns[k] for k in _PARAM_FLAGS if ns.get(k) is not None}
    overrides = {k: ns.get(k) for k in ("command", "example", "space", "h", "scales", "probes", "seed", "out",
                                        "csv", "tol", "inputs")}
    overrides["params"] = params
    if file_values.get("command") and file_values["command"] != overrides["command"]:
        raise InputError(f"config file is for {file_values['command']!r}, not {overrides['command']!r}")
    return build_config(file_values, overrides)


def make_report(cfg, inputs, status, exit_code, result=None, error=None):
    conf = cfg.to_dict() if cfg is not None else {"command": "unknown"}
    conf.pop("out", None)
    conf.pop("csv", None)
    return {
        "schema_version": 1,
        "tool": "liporos",
        "command": conf.get("command") if conf.get("command") != "example" else f"example {conf.get('example')}",
        "config": conf,
        "inputs": inputs,
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "status": status,
        "exit_code": exit_code,
        "result": result,
        "error": error,
    }


def run(cfg):
    """Execute a validated config; returns (report dict, exit code)."""
    inputs = {}
    try:
        inputs = io.inputs_digest(cfg.inputs)
        handler = EXAMPLE_COMMANDS[cfg.example] if cfg.command == "example" else COMMANDS[cfg.command]
        outcome = handler(cfg)
    except LiporosError as exc:
        err = {"type": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code,
               "residual": getattr(exc, "residual", None)}
        return make_report(cfg, inputs, "error", exc.exit_code, error=err), exc.exit_code, None
    code = BoundViolation.exit_code if outcome.failed else 0
    return make_report(cfg, inputs, "fail" if outcome.failed else "ok", code, result=outcome.result), code, outcome.rows


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except LiporosError as exc:
        err = {"type": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code, "residual": None}
        print(f"liporos: {exc}", file=sys.stderr)
        sys.stderr.write(io.dumps(err))
        if args.out:
            raw = {k: v for k, v in vars(args).items() if v is not None and k not in ("out", "csv", "config")}
            report = make_report(None, {}, "error", exc.exit_code, error=err)
            report["config"] = raw
            report["command"] = raw["command"] if raw["command"] != "example" else f"example {raw['example']}"
            with open(args.out, "w") as fh:
                fh.write(io.dumps(report))
        return exc.exit_code
    report, code, rows = run(cfg)
    text = io.dumps(report)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.csv and rows:
        io.write_csv(rows, cfg.csv)
    if report["error"] is not None:
        print(f"liporos: {report['error']['type']}: {report['error']['message']}", file=sys.stderr)
        sys.stderr.write(io.dumps(report["error"]))
    return code


if __name__ == "__main__":
    sys.exit(main())
