"""Command-line front end.

Every subcommand writes ``<command>.json`` (plus CSV tables where relevant)
to the output directory and prints a short summary.  Exit codes: 0 pass,
1 fail, 2 inapplicable (a hypothesis gate failed), 3 input or configuration
error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SynthNullError
from .io import (
    default_output_dir, read_hypersurface, read_measure, write_csv,
    write_hypersurface, write_measure, write_report,
)

EXIT_PASS, EXIT_FAIL, EXIT_INAPPLICABLE, EXIT_INPUT = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _eps_grid(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if len(vals) < 2 or any(v <= 0 for v in vals) or any(b >= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("eps grid must be positive and strictly decreasing")
    return vals


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def build_parser():
    p = _Parser(prog="synthnull", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, inputs=True):
        if inputs:
            sp.add_argument("--input", required=True, help="hypersurface file (.snh)")
        sp.add_argument("--out-dir", default=None,
                        help="output directory (default: $SYNTHNULL_OUTPUT or ./synthnull-out)")
        sp.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp so reports are byte-reproducible")
        sp.add_argument("--format", choices=("text", "csv"), default="text",
                        help="summary format on stdout")

    sp = sub.add_parser("validate", help="check the disintegration data of an instance")
    common(sp)

    sp = sub.add_parser("nce", help="null energy condition: randomized search or one pair")
    common(sp)
    sp.add_argument("--N", type=_positive(float), required=True)
    sp.add_argument("--trials", type=_positive(int), default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--t-grid-size", type=_positive(int), default=64)
    sp.add_argument("--mu0", help="measure file; with --mu1 tests that single pair")
    sp.add_argument("--mu1")

    sp = sub.add_parser("localize", help="compare CD(0, N-1) per ray with the NC search")
    common(sp)
    sp.add_argument("--N", type=_positive(float), required=True)
    sp.add_argument("--trials", type=_positive(int), default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--t-grid-size", type=_positive(int), default=64)

    sp = sub.add_parser("hawking", help="area monotonicity between two constant-gauge sections")
    common(sp)
    sp.add_argument("--N", type=_positive(float), required=True)
    sp.add_argument("--s1", type=float, required=True, help="gauge of the earlier section")
    sp.add_argument("--s2", type=float, required=True, help="gauge of the later section")
    sp.add_argument("--eps-grid", type=_eps_grid, default=[1e-2, 1e-3, 1e-4])

    sp = sub.add_parser("penrose", help="ray-length bound from the initial section")
    common(sp)
    sp.add_argument("--N", type=_positive(float), required=True)
    sp.add_argument("--theta", type=float, default=None)
    sp.add_argument("--eps-grid", type=_eps_grid, default=[1e-2, 1e-3, 1e-4])
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("warped", help="null geodesic of dt^2 - (-t) dr^2 from t0")
    common(sp, inputs=False)
    sp.add_argument("--t0", type=float, default=-1.0)
    sp.add_argument("--tdot0", type=_positive(float), default=1.0)
    sp.add_argument("--step", type=_positive(float), default=1e-3)
    sp.add_argument("--max-steps", type=_positive(int), default=10**6)
    sp.add_argument("--min-turns", type=float, default=20.0)

    sp = sub.add_parser("stability", help="NC of the limit of an approximating sequence")
    common(sp, inputs=False)
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="sequence manifest (manifest.json)")
    src.add_argument("--family", choices=("wiggle", "kink", "adversarial"))
    sp.add_argument("--N", type=_positive(float), default=4.0)
    sp.add_argument("--steps", type=_positive(int), default=6)
    sp.add_argument("--trials", type=_positive(int), default=10_000)
    sp.add_argument("--step-trials", type=_positive(int), default=None)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("generate", help="write a model or random instance")
    common(sp, inputs=False)
    sp.add_argument("kind", choices=("cone", "sphere", "ingoing", "concave", "bump",
                                     "penrose", "sequence"))
    sp.add_argument("--n", type=int, default=4, help="spacetime dimension / N")
    sp.add_argument("--horizon", type=_positive(float), default=10.0)
    sp.add_argument("--radius", type=_positive(float), default=2.0)
    sp.add_argument("--rays", type=_positive(int), default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--output", default=None, help="file to write (default: <out-dir>/<kind>.snh)")
    return p


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _out_dir(args):
    return Path(args.out_dir) if args.out_dir else default_output_dir()


def _load(args):
    from .measures import disintegration_check
    H = read_hypersurface(args.input)
    rep = disintegration_check(H)
    if not rep.passed:
        raise ConfigError(f"{args.input}: invalid disintegration: " + "; ".join(
            f"{reason} {ids}" if ids else reason for reason, ids in rep.reasons))
    return H


def _finish(args, name, report, summary, verdict):
    report = dict(report)
    report["command"] = name
    report["config"] = {k: v for k, v in sorted(vars(args).items())
                        if k not in ("out_dir", "no_timestamp", "format")}
    write_report(_out_dir(args) / f"{name}.json", report, timestamp=not args.no_timestamp)
    code = {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(verdict, EXIT_INAPPLICABLE)
    if args.format == "csv":
        print("key,value")
        for k, v in summary:
            print(f"{k},{v}")
    else:
        for k, v in summary:
            print(f"{k}: {v}")
        print(f"verdict: {verdict} (exit {code})")
    return code


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_validate(args):
    from .measures import disintegration_check
    from .nec import cd_check
    H = read_hypersurface(args.input)
    rep = disintegration_check(H)
    summary = [("rays", len(H.rays)), ("disintegration", "ok" if rep.passed else "bad")]
    out = {"disintegration": rep.to_dict(), "rays": len(H.rays)}
    if H.dimension_hint is not None and H.dimension_hint > 2:
        cds = [cd_check(r, H.dimension_hint).to_dict() for r in H.rays]
        out["cd"] = cds
    return _finish(args, "validate", out, summary, "pass" if rep.passed else "fail")


def cmd_nce(args):
    from .nec import nce_search, nce_test
    H = _load(args)
    if (args.mu0 is None) != (args.mu1 is None):
        raise ConfigError("--mu0 and --mu1 must be given together")
    if args.mu0 is not None:
        rep = nce_test(H, args.N, read_measure(args.mu0), read_measure(args.mu1),
                       args.t_grid_size)
        verdict = "inapplicable" if rep.vacuous else rep.verdict
        summary = [("max_violation", rep.max_violation), ("witness", rep.witness)]
        return _finish(args, "nce", rep.to_dict(), summary, verdict)
    res = nce_search(H, args.N, args.trials, args.seed, args.t_grid_size)
    if res.witness_pair is not None:
        write_measure(_out_dir(args) / "witness_mu0.json", res.witness_pair[0])
        write_measure(_out_dir(args) / "witness_mu1.json", res.witness_pair[1])
    if res.worst is not None:
        write_csv(_out_dir(args) / "nce_worst_curve.csv", ["t", "U"],
                  zip(res.worst.t_grid, res.worst.values))
    verdict = "inapplicable" if res.verdict == "vacuous" else res.verdict
    summary = [("trials", res.trials), ("seed", res.seed), ("max_violation", res.max_violation),
               ("failing_trial", res.failing_trial)]
    return _finish(args, "nce", res.to_dict(), summary, verdict)


def cmd_localize(args):
    from .nec import localization_crosscheck
    H = _load(args)
    rep = localization_crosscheck(H, args.N, args.trials, args.seed, args.t_grid_size)
    summary = [("cd", rep.cd_verdict), ("nce", rep.nce_verdict), ("agree", rep.agree)]
    verdict = "inapplicable" if rep.nce_verdict == "vacuous" else ("pass" if rep.agree else "fail")
    return _finish(args, "localize", rep.to_dict(), summary, verdict)


def _section_at(H, g):
    from .geometry import CrossSection
    ids = [r.id for r in H.rays if (r.interval.a <= g if r.interval.has_initial_point
                                     else r.interval.a < g) and g < r.interval.b]
    return CrossSection({k: g for k in ids})


def cmd_hawking(args):
    from .geometry import area_curve, hawking_check, minkowski_content
    H = _load(args)
    S1, S2 = _section_at(H, args.s1), _section_at(H, args.s2)
    if not len(S2):
        raise ConfigError(f"no ray contains gauge {args.s2}")
    rep = hawking_check(S1, S2, H, args.N)
    out = rep.to_dict()
    if rep.verdict != "inapplicable":
        out["numeric"] = [minkowski_content(S, H, args.eps_grid).to_dict() for S in (S1, S2)]
    lo = min(r.interval.a for r in H.rays)
    hi = max(r.top for r in H.rays)
    write_csv(_out_dir(args) / "area_curve.csv", ["gauge", "content"],
              area_curve(H, np.linspace(lo, hi, 65)))
    summary = [("content1", rep.content1), ("content2", rep.content2)] + \
        [("reason", r) for r in rep.reasons]
    return _finish(args, "hawking", out, summary, rep.verdict)


def cmd_penrose(args):
    from .geometry import CrossSection, penrose_check, theta_estimate
    H = _load(args)
    rep = penrose_check(H, args.N, theta=args.theta)
    out = rep.to_dict()
    if rep.verdict in ("pass", "fail"):
        out["theta_estimate"] = theta_estimate(CrossSection.initial(H), H, args.eps_grid,
                                               seed=args.seed).to_dict()
        write_csv(_out_dir(args) / "penrose_rays.csv", ["ray", "b", "bound", "slack"],
                  rep.table())
    summary = [("theta", rep.theta), ("bound", rep.bound), ("max_b", rep.max_b),
               ("slack", rep.slack)] + [("reason", r) for r in rep.reasons]
    verdict = rep.verdict if rep.verdict in ("pass", "fail") else "inapplicable"
    return _finish(args, "penrose", out, summary, verdict)


def cmd_warped(args):
    from .smooth import WarpedProductSpec, integrate_geodesic, sqrt_warp
    f, df = sqrt_warp()
    spec = WarpedProductSpec.null(f, df, args.t0, args.tdot0)
    tr = integrate_geodesic(spec, args.step, args.max_steps)
    half = integrate_geodesic(spec, args.step / 2, 2 * args.max_steps)
    rel = abs(tr.b_estimate - half.b_estimate) / abs(half.b_estimate)
    tdot = tr.samples[:, 2]
    checks = {
        "conservation": tr.drift <= 1e-8,
        "b_finite": tr.terminated != "steps" and math.isfinite(tr.b_estimate),
        "b_step_stable": rel <= 1e-4,
        "tdot_increasing": bool(np.all(np.diff(tdot) > 0)),
        "winding_exceeds_min_turns": tr.turns > args.min_turns,
    }
    write_csv(_out_dir(args) / "geodesic_trace.csv", ["s", "t", "tdot", "r"], tr.csv_rows())
    out = {"trace": tr.to_dict(), "half_step_b_estimate": half.b_estimate,
           "b_relative_change": rel, "checks": checks}
    summary = [("b_estimate", tr.b_estimate), ("terminated", tr.terminated),
               ("drift", tr.drift), ("turns", tr.turns), ("b_relative_change", rel)] + \
        [(k, v) for k, v in checks.items()]
    return _finish(args, "warped", out, summary, "pass" if all(checks.values()) else "fail")


def cmd_stability(args):
    from .smooth import cone_hypersurface
    from .stability import (
        adversarial_sigma_sequence, kink_sequence, limit_nce, read_manifest,
        wiggle_cone_sequence,
    )
    if args.manifest:
        limit, steps = read_manifest(args.manifest)
    elif args.family == "wiggle":
        limit, steps = wiggle_cone_sequence(args.steps, int(args.N))
    elif args.family == "kink":
        limit, steps = kink_sequence(args.steps, args.N)
    else:
        limit = cone_hypersurface(int(args.N), 2.0, K=16)
        steps = adversarial_sigma_sequence(limit, args.steps)
    rep = limit_nce(limit, steps, args.N, args.trials, args.seed, step_trials=args.step_trials)
    summary = [("steps", len(steps)), ("hypotheses", rep["hypotheses"]["verdict"])]
    if "reason" in rep:
        summary.append(("reason", rep["reason"]))
    return _finish(args, "stability", rep, summary, rep["verdict"])


def cmd_generate(args):
    from . import corpus, smooth
    rng = np.random.default_rng(args.seed)
    if args.kind == "cone":
        H = smooth.cone_hypersurface(args.n, args.horizon, K=args.rays, seed=args.seed)
    elif args.kind == "sphere":
        H = smooth.sphere_boundary_hypersurface(args.radius, args.horizon, K=args.rays,
                                                seed=args.seed)
    elif args.kind == "ingoing":
        H = smooth.sphere_boundary_hypersurface(args.radius, args.horizon, ingoing=True,
                                                K=args.rays, seed=args.seed)
    elif args.kind == "concave":
        H = corpus.random_concave_instance(rng, float(args.n))
    elif args.kind == "bump":
        H = corpus.random_bump_instance(rng, float(args.n))
    elif args.kind == "penrose":
        H, _ = corpus.random_penrose_instance(rng, float(args.n))
    else:
        from .stability import wiggle_cone_sequence, write_manifest
        limit, steps = wiggle_cone_sequence(N=args.n)
        path = write_manifest(_out_dir(args) / "sequence", limit, steps)
        print(f"wrote {path}")
        return EXIT_PASS
    path = Path(args.output) if args.output else _out_dir(args) / f"{args.kind}.snh"
    write_hypersurface(path, H)
    # the written file must read back to the same data
    back = read_hypersurface(path)
    from .io import hypersurface_to_dict
    if hypersurface_to_dict(back) != hypersurface_to_dict(H):
        print(f"round trip mismatch for {path}", file=sys.stderr)
        return EXIT_FAIL
    print(f"wrote {path}")
    return EXIT_PASS


COMMANDS = {
    "validate": cmd_validate,
    "nce": cmd_nce,
    "localize": cmd_localize,
    "hawking": cmd_hawking,
    "penrose": cmd_penrose,
    "warped": cmd_warped,
    "stability": cmd_stability,
    "generate": cmd_generate,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SynthNullError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
