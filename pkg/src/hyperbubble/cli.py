"""Command-line entry point: ``hyperbubble <subcommand> ...``.

Exit codes: 0 success, 1 a check failed, 2 configuration error.
Results go to files in ``--output-dir``; logging goes to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile

import jsonschema
import numpy as np

from . import __version__
from .errors import ConfigInvalid, HyperbubbleError

log = logging.getLogger("hyperbubble")

PARAMS_SCHEMA = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 3},
        "p": {"type": "number", "exclusiveMinimum": 1},
        "lambda": {"type": "number"},
    },
    "required": ["n", "p", "lambda"],
    "additionalProperties": False,
}

GRID_SCHEMA = {
    "type": "object",
    "properties": {
        "n_rho": {"type": "integer", "minimum": 16},
        "n_theta": {"type": "integer", "minimum": 8},
        "rho_max": {"type": "number", "exclusiveMinimum": 0},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "degree": {"type": "integer", "minimum": 2},
    },
    "additionalProperties": False,
}

FAMILY_SCHEMA = {
    "type": "object",
    "properties": {
        "positions": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "alphas": {"type": "array", "items": {"type": "number"}},
    },
    "required": ["positions"],
    "additionalProperties": False,
}

_GLOBAL = {
    "seed": {"type": "integer"},
    "output_dir": {"type": "string"},
    "format": {"enum": ["csv", "json", "both"]},
    "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
}

STABILITY_SCHEMA = {
    "type": "object",
    "properties": {
        "params": PARAMS_SCHEMA,
        "family": FAMILY_SCHEMA,
        "perturbation": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["none", "bump", "v1", "random"]},
                "epsilons": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "center": {"type": "number"},
                "q": {"type": "number"},
                "r": {"type": "number"},
                "R": {"type": "number"},
                "index": {"type": "integer", "minimum": 1},
                "terms": {"type": "integer", "minimum": 1},
            },
            "required": ["kind", "epsilons"],
            "additionalProperties": False,
        },
        "grid": GRID_SCHEMA,
        **_GLOBAL,
    },
    "required": ["params", "family", "perturbation"],
    "additionalProperties": False,
}

SPECTRAL_GAP_SCHEMA = {
    "type": "object",
    "properties": {
        "params": PARAMS_SCHEMA,
        "family": FAMILY_SCHEMA,
        "grid": GRID_SCHEMA,
        "constrained": {"type": "boolean"},
        **_GLOBAL,
    },
    "required": ["params", "family"],
    "additionalProperties": False,
}


# --- output plumbing -----------------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


class Writer:
    """Atomic, write-once outputs with a shared metadata header."""

    def __init__(self, out_dir: str, fmt: str, meta: dict, plot_data: bool):
        self.dir = out_dir
        self.fmt = fmt
        self.meta = meta
        self.plot = plot_data
        os.makedirs(out_dir, exist_ok=True)

    def _atomic(self, name: str, text: str):
        path = os.path.join(self.dir, name)
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=".tmp-", suffix=name)
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        log.info("wrote %s", path)
        return path

    def json(self, name: str, payload: dict, grid_meta=None):
        body = {"metadata": dict(self.meta, grid_meta=grid_meta), **payload}
        return self._atomic(name, json.dumps(_clean(body), indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, columns, rows, grid_meta=None):
        buf = io.StringIO()
        meta = dict(self.meta, grid_meta=grid_meta)
        buf.write("# " + json.dumps(_clean(meta), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
        return self._atomic(name, buf.getvalue())

    def table(self, stem: str, columns, rows, summary: dict | None = None, grid_meta=None):
        if self.fmt in ("csv", "both"):
            self.csv(stem + ".csv", columns, rows, grid_meta)
        if self.fmt in ("json", "both") or summary is not None:
            payload = {"summary": summary or {}}
            if self.fmt in ("json", "both"):
                payload["rows"] = [{c: r.get(c) for c in columns} for r in rows]
            self.json(stem + ".json", payload, grid_meta)

    def curve(self, command: str, curve: str, x, y):
        if not self.plot:
            return
        lines = [f"{float(a)!r} {float(b)!r}" for a, b in zip(x, y)]
        self._atomic(f"{command}_{curve}.dat", "\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else v


# --- config ------------------------------------------------------------------------------------------

def _validate(instance, schema, what: str):
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigInvalid(f"{what}: {exc.message} (at {loc})") from None


def _load_config(path: str, schema, what: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"{what}: cannot read {path}: {exc}") from None
    _validate(cfg, schema, what)
    return cfg


def _params_from_args(args):
    raw = {k: v for k, v in (("n", args.n), ("p", args.p), ("lambda", args.lam)) if v is not None}
    _validate(raw, PARAMS_SCHEMA, "params")
    return _params(raw)


def _params(raw: dict):
    from .geometry import validate_params
    try:
        return validate_params(int(raw["n"]), float(raw["p"]), float(raw["lambda"]))
    except HyperbubbleError as exc:
        raise ConfigInvalid(f"params: {type(exc).__name__}: {exc}") from None


def _grid_kwargs(grid: dict | None, positions) -> dict:
    """Map the config's grid block onto grid_for_positions arguments."""
    from .operators import DEFAULT_DEGREE, DEFAULT_H
    g = dict(grid or {})
    pos = np.asarray(positions, dtype=float)
    far = 0.5 * float(pos.max() - pos.min())
    out = {"L": g.get("n_theta"), "degree": int(g.get("degree", DEFAULT_DEGREE)), "h": float(g.get("h", DEFAULT_H))}
    if "rho_max" in g:
        if g["rho_max"] <= far + 2:
            raise ConfigInvalid(f"grid: rho_max {g['rho_max']} does not contain the bubbles (needs > {far + 2:g})")
        out["margin"] = float(g["rho_max"]) - far
    if "n_rho" in g and "h" not in g:
        R = out.get("margin", 14.0) + far
        out["h"] = max(0.05, out["degree"] * R / g["n_rho"])
    return out


def _workers(args) -> int:
    env = os.environ.get("HYPERBUBBLE_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigInvalid(f"HYPERBUBBLE_WORKERS must be an integer, got {env!r}") from None
    if args.workers is not None:
        return max(1, args.workers)
    return os.cpu_count() or 1


# --- subcommands ------------------------------------------------------------------------------------------

def cmd_geometry(args, W: Writer) -> int:
    from .acceptance import geometry_checks
    rows = geometry_checks(args.samples, args.seed)
    for r in rows:
        r["status"] = "pass" if r["max_error"] <= r["tolerance"] else "fail"
    W.table("geometry_check", ["check_name", "max_error", "tolerance", "status"], rows)
    for r in rows:
        print(f"{r['check_name']:24s} {r['max_error']:.3e} <= {r['tolerance']:.0e}  {r['status']}")
    return 0 if all(r["status"] == "pass" for r in rows) else 1


def cmd_ground_state(args, W: Writer) -> int:
    from .ground_state import solve_ground_state
    P = _params_from_args(args)
    W.meta["params"] = P.as_dict()
    prof = solve_ground_state(P, args.tol, args.rho_max)
    dec = prof.decay_report()
    W.json("ground_state.json", {"amplitude": prof.amplitude, "sobolev": prof.sobolev, "energy": prof.energy,
                                 "decay_fit": dec, "residual_max": prof.residual_max, "solver": prof.meta})
    if args.profile_csv:
        rows = [{"rho": r, "u": u, "du": d} for r, u, d in zip(prof.grid, prof.u, prof.du)]
        W.csv("ground_state_profile.csv", ["rho", "u", "du"], rows)
    W.curve("ground-state", "u", prof.grid, prof.u)
    W.curve("ground-state", "du", prof.grid, prof.du)
    print(json.dumps(_clean({"amplitude": prof.amplitude, "sobolev": prof.sobolev, "energy": prof.energy})))
    return 0


def cmd_sweep(args, W: Writer) -> int:
    from .ground_state import lambda_sweep
    P = _params_from_args(argparse.Namespace(n=args.n, p=args.p, lam=args.lambda_min))
    W.meta["params"] = dict(P.as_dict(), lambda_max=args.lambda_max, steps=args.steps)
    if args.steps < 1:
        raise ConfigInvalid("steps must be >= 1")
    lams = np.linspace(args.lambda_min, args.lambda_max, args.steps)
    try:
        sw = lambda_sweep(args.n, args.p, lams, workers=_workers(args))
    except HyperbubbleError as exc:
        raise ConfigInvalid(f"sweep: {type(exc).__name__}: {exc}") from None
    for r in sw["rows"]:
        r["monotone_flag"] = r["monotone"]
    W.table("sweep_lambda", ["lambda", "S_lambda", "ratio", "monotone_flag", "error"], sw["rows"],
            {"monotone": sw["monotone"], "euclidean_S": sw["euclidean_S"]})
    W.curve("sweep-lambda", "S_lambda", lams, [r["S_lambda"] for r in sw["rows"]])
    return 0


def cmd_interact(args, W: Writer) -> int:
    from . import interactions as I
    from .ground_state import ground_state
    P = _params_from_args(args)
    W.meta["params"] = P.as_dict()
    prof = ground_state(P.n, P.p, P.lam)
    if args.kind == "two":
        s_grid = np.linspace(args.s_min, args.s_max, args.steps)
        res = [I.two_bubble(prof, args.alpha, args.beta, float(s)) for s in s_grid]
        rows = [{"s": float(s), "value": r.value, "q": r.q, "compensated": r.compensated} for s, r in zip(s_grid, res)]
        summary = {}
        if args.alpha != args.beta and len(s_grid) >= 5:
            fit = I.fit_exponent(prof, args.alpha, args.beta, s_grid)
            summary = {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared,
                       "target": fit.target, "relative_error": fit.relative_error}
        W.table("interact_two", ["s", "value", "q", "compensated"], rows, summary)
        W.curve("interact", "two_log_value", s_grid, [math.log(r.value) for r in res])
    elif args.kind == "three":
        r = I.three_bubble(prof, args.s12, args.s13)
        rows = [{"s12": args.s12, "s13": args.s13, "value": r.value, "q": r.q, "compensated": r.compensated}]
        W.table("interact_three", ["s12", "s13", "value", "q", "compensated"], rows, {})
    else:
        r = I.deriv_interaction(prof, args.s, not args.perp)
        rows = [{"s": args.s, "value": r.value, "q": r.q, "compensated": r.compensated}]
        W.table("interact_deriv", ["s", "value", "q", "compensated"], rows,
                {"direction": "perpendicular" if args.perp else "along_axis"})
    return 0


def cmd_spectrum(args, W: Writer) -> int:
    from .ground_state import ground_state
    from .operators import mode_eigenvalues
    P = _params_from_args(args)
    W.meta["params"] = P.as_dict()
    if args.mode < 0 or args.count < 1:
        raise ConfigInvalid("mode must be >= 0 and count >= 1")
    res = mode_eigenvalues(ground_state(P.n, P.p, P.lam), args.mode, args.count)
    W.json("spectrum.json", {"mode": args.mode, **res}, res.get("grid_meta"))
    print(json.dumps(_clean(res["eigenvalues"])))
    return 0


def _family(cfg, P):
    from .family import BubbleFamily
    fam = cfg["family"]
    al = fam.get("alphas")
    if al is not None and len(al) != len(fam["positions"]):
        raise ConfigInvalid("family: alphas and positions differ in length")
    try:
        return BubbleFamily.on_axis(P, fam["positions"], al)
    except HyperbubbleError as exc:
        raise ConfigInvalid(f"family: {type(exc).__name__}: {exc}") from None


def cmd_spectral_gap(args, W: Writer) -> int:
    from .ground_state import ground_state
    from .operators import grid_for_positions, spectral_gap_constrained
    cfg = _load_config(args.config, SPECTRAL_GAP_SCHEMA, "spectral-gap config")
    P = _params(cfg["params"])
    W.meta["params"] = P.as_dict()
    fam = _family(cfg, P)
    grid, shifted = grid_for_positions(P, fam.positions, **_grid_kwargs(cfg.get("grid"), fam.positions))
    res = spectral_gap_constrained(ground_state(P.n, P.p, P.lam), fam, grid, shifted,
                                   constrained=cfg.get("constrained", True))
    out = {"c_tilde": res["c_tilde"], "constraints_rank": res["constraints_rank"],
           "constraint_residual": res.get("constraint_residual")}
    W.json("spectral_gap.json", out, res["grid_meta"])
    print(json.dumps(_clean(out)))
    return 0


def cmd_stability(args, W: Writer) -> int:
    from .stability import stability_ratio_experiment
    cfg = _load_config(args.config, STABILITY_SCHEMA, "stability config")
    P = _params(cfg["params"])
    seed = args.seed if args.seed_given else cfg.get("seed", args.seed)
    W.meta.update(params=P.as_dict(), seed=seed)
    fam = _family(cfg, P)
    pert = dict(cfg["perturbation"])
    eps = pert.pop("epsilons")
    gk = _grid_kwargs(cfg.get("grid"), fam.positions)
    res = stability_ratio_experiment(P, 0.0, eps, kind=pert["kind"], seed=seed, positions=fam.positions.tolist(),
                                     alphas=fam.alphas.tolist(), perturbation=pert, workers=_workers(args), **gk)
    cols = ["epsilon", "deficit", "distance", "ratio", "noise_floor", "converged"]
    sm = res["summary"]
    summary = {"ratio_max": sm["ratio_max"], "ratio_min": sm["ratio_min"], "floor": sm["floor"],
               "counted": sm["counted"], "excluded": sm["excluded"], "grid_meta": sm["grid_meta"]}
    W.table("stability", cols, res["rows"], summary, sm["grid_meta"])
    W.curve("stability", "ratio", [r["epsilon"] for r in res["rows"]], [r["ratio"] for r in res["rows"]])
    return 0


def cmd_all_checks(args, W: Writer) -> int:
    from .acceptance import run_all
    results, elapsed = run_all(quick=args.quick, seed=args.seed, workers=_workers(args) if not args.quick else 1)
    log.info("all-checks finished in %.1f s", elapsed)
    rows = [{"criterion": r.number, "name": r.name, "status": "pass" if r.passed else "fail"} for r in results]
    W.table("all_checks", ["criterion", "name", "status"], rows,
            {"quick": args.quick, "passed": sum(r.passed for r in results), "total": len(results),
             "details": [r.as_dict() for r in results]})
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


# --- parser ----------------------------------------------------------------------------------------

def _add_params(p):
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--lambda", dest="lam", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyperbubble", description=__doc__.splitlines()[0])
    ap.add_argument("--output-dir", default=".")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--format", choices=["csv", "json", "both"], default="csv")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--plot-data", action="store_true")
    ap.add_argument("--log-level", choices=["error", "info", "debug"], default="info")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geometry", help="isometry and bump checks")
    g.add_argument("action", choices=["check"])
    g.add_argument("--samples", type=int, default=10_000)
    g.set_defaults(func=cmd_geometry)

    g = sub.add_parser("ground-state", help="solve for the radial bubble")
    _add_params(g)
    g.add_argument("--tol", type=float, default=1e-10)
    g.add_argument("--rho-max", type=float, default=None)
    g.add_argument("--profile-csv", action="store_true")
    g.set_defaults(func=cmd_ground_state)

    g = sub.add_parser("sweep-lambda", help="S_lambda over a lambda grid")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--lambda-min", type=float, required=True)
    g.add_argument("--lambda-max", type=float, required=True)
    g.add_argument("--steps", type=int, required=True)
    g.set_defaults(func=cmd_sweep)

    g = sub.add_parser("interact", help="interaction integrals")
    isub = g.add_subparsers(dest="kind", required=True)
    t = isub.add_parser("two")
    _add_params(t)
    t.add_argument("--alpha", type=float, required=True)
    t.add_argument("--beta", type=float, required=True)
    t.add_argument("--s-min", type=float, required=True)
    t.add_argument("--s-max", type=float, required=True)
    t.add_argument("--steps", type=int, required=True)
    t = isub.add_parser("three")
    _add_params(t)
    t.add_argument("--s12", type=float, required=True)
    t.add_argument("--s13", type=float, required=True)
    t = isub.add_parser("deriv")
    _add_params(t)
    t.add_argument("--s", type=float, required=True)
    t.add_argument("--perp", action="store_true")
    g.set_defaults(func=cmd_interact)

    g = sub.add_parser("spectrum", help="linearized mode eigenvalues")
    _add_params(g)
    g.add_argument("--mode", type=int, default=0)
    g.add_argument("--count", type=int, default=1)
    g.set_defaults(func=cmd_spectrum)

    g = sub.add_parser("spectral-gap", help="constrained spectral gap from a JSON config")
    g.add_argument("--config", required=True)
    g.set_defaults(func=cmd_spectral_gap)

    g = sub.add_parser("stability", help="deficit-vs-distance experiment from a JSON config")
    g.add_argument("--config", required=True)
    g.set_defaults(func=cmd_stability)

    g = sub.add_parser("all-checks", help="the numbered acceptance suite")
    g.add_argument("--quick", action="store_true")
    g.set_defaults(func=cmd_all_checks)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}[args.log_level]
    root = logging.getLogger("hyperbubble")
    if not root.handlers:
        h = logging.StreamHandler(sys.stderr)
        h.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(h)
    root.setLevel(level)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    meta = {"version": __version__, "params": None, "seed": args.seed, "command": args.command}
    try:
        W = Writer(args.output_dir, args.format, meta, args.plot_data)
        return args.func(args, W)
    except ConfigInvalid as exc:
        log.error("ConfigInvalid: %s", exc)
        return 2
    except HyperbubbleError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
