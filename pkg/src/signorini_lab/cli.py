"""Command-line front end: epi, gap, solve, modes, norms.

Exit codes: 0 success, 1 usage error, 2 inequality or hypothesis violation,
3 solver non-convergence.  Every output embeds (JSON) or is listed with
(manifest) the hash of the canonical command description.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_NONCONVERGENCE = 0, 1, 2, 3

log = logging.getLogger("signorini_lab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        out = {"level": record.levelname.lower(), "msg": record.getMessage()}
        out.update(getattr(record, "fields", {}))
        return json.dumps(out, sort_keys=True, default=str)


def _setup_logging(json_logs):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter() if json_logs else logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO)
    log.propagate = False


def _info(msg, **fields):
    log.info(msg, extra={"fields": fields})


# ---------------------------------------------------------------------------
# deterministic output


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def spec_hash(command, params):
    canon = json.dumps(_clean({"command": command, "params": params}), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


class Outputs:
    """Single writer for one command run; records every file in a manifest."""

    def __init__(self, out_dir, command, shash):
        self.dir = out_dir
        self.command = command
        self.hash = shash
        self.files = []
        self.plots = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name)

    def _record(self, name, data):
        self.files.append({"file": name, "sha256": hashlib.sha256(data).hexdigest()})

    def text(self, name, content):
        data = content.encode()
        with open(self.path(name), "wb") as fh:
            fh.write(data)
        self._record(name, data)

    def json(self, name, obj):
        obj = dict(obj)
        obj["spec_hash"] = self.hash
        self.text(name, _dumps(obj))

    def external(self, name):
        with open(self.path(name), "rb") as fh:
            self._record(name, fh.read())

    def plot(self, name, file, x, y, **extra):
        self.plots.append({"name": name, "file": file, "x": x, "y": y, **extra})

    def finish(self):
        if self.plots:
            self.json("plots.json", {"command": self.command, "plots": self.plots})
        self.json("manifest.json", {"command": self.command, "files": self.files})


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# epi


def _load_trace(args):
    from .competitors.half_integer import SlitTrace
    from .spectral import trace_from_dict

    data = _read_json(args.trace)
    try:
        if args.case == "half-integer":
            return SlitTrace.from_dict(data, m=args.m)
        exp = trace_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed trace file {args.trace}: {exc}") from exc
    if exp.table.d != args.d:
        raise UsageError(f"trace file has d={exp.table.d}, command asks for d={args.d}")
    return exp


def _verify_single(args, c):
    from .competitors import verify_half_integer, verify_negative, verify_regular, verify_singular
    from .competitors.fuzz import calibrate_singular_eps
    from .gap import negative_epsilon

    params = {}
    if args.case == "regular":
        return verify_regular(c, tol=args.tol), params
    if args.case == "singular":
        eps = args.eps
        if eps is None:
            cal = calibrate_singular_eps(args.d, args.m, seed=args.seed)
            eps = cal["eps"]
            params["calibration"] = cal
        params["eps"] = eps
        return verify_singular(c, args.m, eps, tol=args.tol), params
    if args.case == "negative":
        eps = args.eps if args.eps is not None else negative_epsilon(args.d, args.m)
        params["eps"] = eps
        return verify_negative(c, args.m, eps, tol=args.tol), params
    params["delta"] = args.delta
    return verify_half_integer(c, args.m, args.delta, tol=args.tol), params


def cmd_epi(args, out):
    from .competitors import CSV_HEADER, ConstructionError, InadmissibleTrace, run_campaign

    if args.case in ("singular", "negative", "half-integer") and args.m is None:
        if not (args.case == "half-integer" and args.trace):
            raise UsageError(f"--m is required for --case {args.case}")
    if args.case == "half-integer" and args.d != 2:
        raise UsageError("the half-integer case is planar (--d 2)")
    c = _load_trace(args) if args.trace else None
    if args.case == "half-integer" and args.m is None and c is not None:
        args.m = c.m
    stem = f"epi_{args.case}_d{args.d}" + (f"_m{args.m}" if args.m is not None else "")
    if args.trace:
        try:
            rep, params = _verify_single(args, c)
        except (InadmissibleTrace, ConstructionError) as exc:
            msg = str(exc)
            out.json(f"{stem}_error.json", {"case": args.case, "error": type(exc).__name__, "message": msg})
            print(f"{type(exc).__name__}: {msg}", file=sys.stderr)
            return EXIT_VIOLATION
        out.json(f"{stem}_report.json", {"report": rep.to_dict(), "params": params})
        row = [args.seed, rep.case, rep.d, "" if rep.m is None else rep.m, rep.W_z, rep.W_h, rep.factor, rep.gap,
               int(rep.passed)]
        out.text(f"{stem}.csv", _csv(CSV_HEADER, [row]))
        _info("epi report", case=args.case, gap=rep.gap, passed=rep.passed)
        print(f"{args.case}: W(z)={rep.W_z:.6g} W(h)={rep.W_h:.6g} gap={rep.gap:.3e} "
              f"{'pass' if rep.passed else 'VIOLATION'}")
        return EXIT_OK if rep.passed else EXIT_VIOLATION
    if args.fuzz is None:
        raise UsageError("epi needs --trace FILE or --fuzz N")
    if args.fuzz < 1:
        raise UsageError("--fuzz must be positive")
    t0 = time.perf_counter()
    res = run_campaign(args.case, args.d, args.m, args.fuzz, args.seed, eps=args.eps, delta=args.delta, tol=args.tol)
    _info("campaign done", case=args.case, n=args.fuzz, violations=res.violations,
          seconds=round(time.perf_counter() - t0, 3))
    out.text(f"{stem}.csv", res.to_csv())
    out.json(f"{stem}_reports.json", {"summary": res.summary(), "reports": [r.to_dict() for r in res.reports]})
    out.plot("gap vs W(z)", f"{stem}.csv", "W(z)", "gap", kind="scatter")
    print(f"{args.case} d={args.d} m={args.m}: {len(res.reports)} items, {res.violations} violations")
    return EXIT_OK if res.violations == 0 else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# gap


def cmd_gap(args, out):
    from .gap import certify_negative_gap

    if args.grid:
        dmax, mmax = args.grid
        pairs = [(d, m) for d in range(2, dmax + 1) for m in range(1, mmax + 1)]
    else:
        if args.d is None or args.m is None:
            raise UsageError("gap needs --d and --m, or --grid DMAX MMAX")
        pairs = [(args.d, args.m)]
    if any(d not in (2, 3) for d, _ in pairs):
        raise UsageError("certificates are available for d in {2, 3}")
    status = EXIT_OK
    for d, m in pairs:
        cert = certify_negative_gap(d, m)
        body = cert.to_dict()
        body["eps_singular"] = cert.eps_singular
        if args.check_paper and (d, m) == (3, 2):
            ok = cert.C1 == 16 and cert.C2 == Fraction(15, 4) and cert.c_minus >= 0.0015
            body["check_paper"] = {"C1_is_16": cert.C1 == 16, "C2_is_15/4": cert.C2 == Fraction(15, 4),
                                   "c_minus_at_least_0.0015": bool(cert.c_minus >= 0.0015), "ok": bool(ok)}
            if not ok:
                status = EXIT_VIOLATION
        out.json(f"gap_d{d}_m{m}.json", body)
        print(f"d={d} m={m}: C1={cert.C1} C2={cert.C2} eps={cert.epsilon:.6g} "
              f"c_minus={cert.c_minus:.6g} c_plus={cert.c_plus:.6g}")
    if args.check_paper and (3, 2) not in pairs:
        _info("check-paper applies to (d, m) = (3, 2) only; nothing asserted")
    return status


# ---------------------------------------------------------------------------
# solve


def _profile_radii(x0, h, cfg):
    if "radii" in cfg:
        return np.asarray(cfg["radii"], dtype=float)
    from .solver import radius_ladder

    r_max = min(0.5, 0.9 * (1.0 - float(np.linalg.norm(x0))))
    r_min = max(0.05, 4 * h)
    if r_max < 2 * r_min:
        return None
    return radius_ladder(r_max, r_min, int(cfg.get("n_radii", 12)))


def cmd_solve(args, out, cfg):
    from .solver import (
        InadmissibleDatum,
        classify_point,
        decay_check,
        detect_free_boundary,
        frequency_profile,
        make_datum,
        solve,
    )

    if "datum" not in cfg:
        raise UsageError("config lacks 'datum'")
    d = int(cfg.get("d", 2))
    h = float(cfg.get("h", 1 / 64))
    tol = float(args.tol if args.tol is not None else cfg.get("tol", 1e-10))
    try:
        datum = make_datum(dict(cfg["datum"]), d=d)
        t0 = time.perf_counter()
        sol = solve(datum, d, h, tol, int(cfg.get("max_iters", 200000)), cfg.get("omega", "auto"))
    except InadmissibleDatum as exc:
        print(f"inadmissible datum: {exc}", file=sys.stderr)
        out.json("summary.json", {"error": "InadmissibleDatum", "message": str(exc)})
        return EXIT_VIOLATION
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad config: {exc}") from exc
    _info("solved", iterations=sol.info["iterations"], seconds=round(time.perf_counter() - t0, 3))
    sol.dump(out.path("solution.bin"), out.path("solution.json"), out.hash)
    out.external("solution.bin")
    out.external("solution.json")
    summary = {"config": cfg, "solver": sol.info, "h": sol.h, "d": d}
    if datum.exact is not None:
        summary["sup_error_B_half"] = sol.sup_error(0.5)
    if not sol.info["converged"]:
        summary["error"] = "NonConvergence"
        out.json("summary.json", summary)
        print(f"no convergence after {sol.info['iterations']} sweeps", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    fb = detect_free_boundary(sol)
    summary["free_boundary"] = fb
    points = [p for p in fb if not p["boundary_touching"]]
    # in d=3 the free boundary is a curve: profile the points nearest the origin
    points.sort(key=lambda p: (float(np.linalg.norm(p["point"])), p["point"]))
    max_points = int(cfg.get("max_points", 16))
    if len(points) > max_points:
        summary["profiled_points"] = f"{max_points} of {len(points)} interior free-boundary points, nearest the origin"
        points = points[:max_points]
    if "x0" in cfg:
        points = [{"point": list(map(float, cfg["x0"])), "boundary_touching": False}]
    rows = []
    violation = False
    for i, p in enumerate(points):
        x0 = np.asarray(p["point"], dtype=float)
        radii = _profile_radii(x0, sol.h, cfg)
        entry = {"index": i, "point": x0.tolist()}
        if radii is None:
            entry["excluded"] = "radius ladder does not fit in the ball"
            rows.append(entry)
            continue
        lam = float(cfg.get("lambda", 1.5))
        prof = frequency_profile(sol, x0, lam, radii)
        cls = classify_point(prof)
        if "lambda" not in cfg and abs(cls["lambda"] - lam) > 1e-12 and cls["label"] != "Other":
            prof = frequency_profile(sol, x0, cls["lambda"], radii)
            cls = classify_point(prof)
        name = f"profile_{i}.csv"
        out.text(name, prof.to_csv())
        out.plot(f"N(r) at point {i}", name, "r", "N", logx=True)
        out.plot(f"W_lambda(r) at point {i}", name, "r", "W_lambda", logx=True)
        mono_ok = all(v["ok"] for v in prof.monotonicity.values())
        violation |= not mono_ok
        entry.update({"classification": cls, "lambda": prof.lam, "monotonicity": prof.monotonicity,
                      "tau_mono": prof.tau_mono, "profile": name})
        if cls["label"].startswith("Sing"):
            try:
                entry["decay"] = decay_check(sol, x0, cls["lambda"], classification=cls)
            except ValueError as exc:
                entry["decay"] = {"skipped": str(exc)}
        rows.append(entry)
    summary["points"] = rows
    table = [[e["index"], *(list(e["point"]) + [0.0] * (3 - len(e["point"]))),
              e.get("classification", {}).get("label", "excluded"),
              e.get("classification", {}).get("N_hat", float("nan"))] for e in rows]
    out.text("classification.csv", _csv(["index", "x1", "x2", "x3", "label", "N_hat"], table))
    summary["monotonicity_ok"] = not violation
    out.json("summary.json", summary)
    labels = ", ".join(f"{e['point']}: {e.get('classification', {}).get('label', 'excluded')}" for e in rows)
    print(f"free boundary points: {len(fb)}; {labels or 'none'}")
    return EXIT_VIOLATION if violation else EXIT_OK


# ---------------------------------------------------------------------------
# modes, norms


def cmd_modes(args, out):
    from .spectral import build_mode_table

    table = build_mode_table(args.d, args.K, parity=args.parity)
    rows = [[md.index, md.alpha, md.order, md.eigenvalue] for md in table.modes]
    name = f"modes_d{args.d}_K{args.K}_{args.parity}.csv"
    out.text(name, _csv(["index", "alpha", "order", "eigenvalue"], rows))
    print(f"d={args.d} K={args.K} parity={args.parity}: {len(rows)} modes")
    return EXIT_OK


def cmd_norms(args, out):
    from .special import ModelSolution, build_h2m, h2m_norm_sq_exact, l2_sphere_norm_sq
    from .spectral import graded_quadrature

    d = args.d
    # h_e and u_0 are only C^{1,1/2} across the equator: use the equator-graded rule
    quad = graded_quadrature(d)
    res = {"d": d, "h_e": l2_sphere_norm_sq(ModelSolution("he", d), d, quad),
           "u_0": l2_sphere_norm_sq(ModelSolution("u0", d), d, quad), "h_2m": {}}
    for m in range(1, args.mmax + 1):
        val = l2_sphere_norm_sq(build_h2m(d, m), d)
        entry = {"norm_sq": val}
        if d == 3:
            q = h2m_norm_sq_exact(m)
            entry["exact"] = f"2 pi * {q}"
            entry["exact_value"] = float(2 * np.pi * q)
        res["h_2m"][str(2 * m)] = entry
    if d == 2:
        from .special import abs_xd_ball_integral

        from .competitors.half_integer import half_integer_trace, slit_quadrature

        res["half_integer"] = {}
        for m in range(1, args.mmax + 1):
            q = slit_quadrature(m)
            res["half_integer"][f"{(4 * m - 1) / 2:g}"] = q.integrate(half_integer_trace(m).evaluate(q.points) ** 2)
        res["abs_xd_ball_integral"] = abs_xd_ball_integral(d)
    out.json(f"norms_d{d}.json", res)
    print(_dumps(res), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _global_flags(p, defaults):
    kw = {} if defaults else {"default": argparse.SUPPRESS}
    p.add_argument("--out", help="output directory (default: ./out)", **({"default": "out"} if defaults else kw))
    p.add_argument("--seed", type=int, help="campaign seed (default 0)", **({"default": 0} if defaults else kw))
    p.add_argument("--tol", type=float, help="tolerance override", **({"default": None} if defaults else kw))
    p.add_argument("--json-logs", action="store_true", help="log as JSON lines on stderr",
                   **({"default": False} if defaults else kw))


def build_parser():
    parser = _Parser(prog="signorini-lab", description="Thin obstacle problem laboratory.")
    _global_flags(parser, True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("epi", help="verify epiperimetric competitors")
    _global_flags(p, False)
    p.add_argument("--case", required=True, choices=["regular", "singular", "negative", "half-integer"])
    p.add_argument("--d", type=int, default=2, choices=[2, 3])
    p.add_argument("--m", type=int)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--trace", help="trace JSON file")
    src.add_argument("--fuzz", type=int, metavar="N", help="number of generated traces")
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float, default=0.05)

    p = sub.add_parser("gap", help="frequency-gap certificates")
    _global_flags(p, False)
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--grid", type=int, nargs=2, metavar=("DMAX", "MMAX"))
    p.add_argument("--check-paper", action="store_true", help="assert C1 = 16, C2 = 15/4, c_minus >= 0.0015 at (3, 2)")

    p = sub.add_parser("solve", help="solve, profile and classify from a JSON config")
    _global_flags(p, False)
    p.add_argument("config")

    p = sub.add_parser("modes", help="dump a mode table")
    _global_flags(p, False)
    p.add_argument("--d", type=int, default=2, choices=[2, 3])
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--parity", default="even", choices=["even", "all"])

    p = sub.add_parser("norms", help="model-solution norms")
    _global_flags(p, False)
    p.add_argument("--d", type=int, default=2, choices=[2, 3])
    p.add_argument("--mmax", type=int, default=4)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.json_logs)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "json_logs")}
    cfg = None
    try:
        if args.command == "solve":
            cfg = _read_json(args.config)
            params["config"] = cfg
        if args.command == "epi" and args.trace:
            params["trace_content"] = _read_json(args.trace)
        out = Outputs(args.out, args.command, spec_hash(args.command, params))
        handler = {"epi": cmd_epi, "gap": cmd_gap, "modes": cmd_modes, "norms": cmd_norms}.get(args.command)
        code = cmd_solve(args, out, cfg) if args.command == "solve" else handler(args, out)
    except UsageError as exc:
        print(f"signorini-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out.finish()
    return code


if __name__ == "__main__":
    sys.exit(main())
