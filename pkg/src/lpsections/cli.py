"""Command-line front end.

Exit codes: 0 success, 1 a check failed (or a solver did not converge),
2 usage error (bad flag, malformed number, missing file, violated
precondition).  Results go to standard output or, with ``--output``, to a
file that is only created once the run has finished.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import verify as verify_mod
from ._validation import check_count, check_positive, check_unit_vector
from .exact import exact_volume
from .gaussian import (
    PSDSamplerSpec,
    det_schur_estimate,
    laplace_estimate,
    negative_moment_estimate,
    slab_laplace_estimate,
)
from .lewis import LewisSingularityError, lewis_solve
from .meanwidth import mean_width_estimate
from .projections import MembershipConfig, projection_volume, subspace_projection_volume
from .sections import MAX_SECTION_DIM, block_section_volume, question_probe, section_volume
from .spaces import DiscreteMeasure, LpDiscrete, LpPower, Subspace, parse_space, resolve_theta
from .streams import WORKERS_ENV, MCConfig

# config keys whose flag name differs from the argparse destination
CONFIG_ALIASES = {"lambda": "lam"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class ExperimentSpec:
    command: str
    params: dict
    mc: MCConfig
    fmt: str = "json"
    output: str | None = None
    notes: list = field(default_factory=list)


def _add_common(p, mc=True):
    p.add_argument("--config", help="JSON file whose keys mirror the flags; flags win")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--output", help="write the report here instead of standard output")
    if mc:
        p.add_argument("--samples", type=int, default=100_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--chunk", type=int, default=1 << 16)
        p.add_argument("--workers", type=int, default=None,
                       help=f"thread count (default: ${WORKERS_ENV} or 1)")


def _add_target(p, need_p=True):
    p.add_argument("--space", help="space spec, e.g. lq:q=1,m=2 or power:p=1,n=2(euclid:m=2)")
    if need_p:
        p.add_argument("--p", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--theta", help="diag, e1 or a comma list of n unit-norm weights")
    p.add_argument("--subspace-file", help="orthonormal basis rows, whitespace separated")


def build_parser():
    parser = _Parser(prog="lpsections", description="Sections, projections and mean widths of l_p sums.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("volume", help="volume of the unit ball of a space (exact when known, else MC)")
    _add_common(p)
    p.add_argument("--space", required=False)

    p = sub.add_parser("section", help="section volume through H_theta or a subspace")
    _add_common(p)
    _add_target(p)
    p.add_argument("--probe", action="store_true",
                   help="also estimate |B_p^{n-1}(X)| and report both sides without asserting an order")

    p = sub.add_parser("project", help="projection volume of K^n onto H_theta, or of K onto a subspace")
    _add_common(p)
    _add_target(p, need_p=False)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=400)
    p.add_argument("--multistarts", type=int, default=8)

    p = sub.add_parser("laplace", help="Gaussian Laplace transform or negative moment on H_theta")
    _add_common(p)
    _add_target(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--epsilon", type=float, help="also run the slab estimator at this width")

    p = sub.add_parser("lewis", help="Lewis position of a discrete measure")
    _add_common(p, mc=False)
    p.add_argument("--space", help="measure:<path>,p=<r>")
    p.add_argument("--measure", help="atom file (weight then direction per line)")
    p.add_argument("--p", type=float)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--damping", type=float, default=0.5)

    p = sub.add_parser("meanwidth", help="mean width of Proj_{H_theta}(B_q^n(X*))")
    _add_common(p)
    _add_target(p)

    p = sub.add_parser("detlab", help="E det(sum_i alpha_i M_i)^(-r) for random positive definite M_i")
    _add_common(p)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--alphas", help="comma list of nonnegative weights")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--kind", choices=("wishart", "uniform", "constant"), default="wishart")
    p.add_argument("--dof", type=int)
    p.add_argument("--lo", type=float, default=1.0)
    p.add_argument("--hi", type=float, default=2.0)

    p = sub.add_parser("verify", help="run a verification suite and print CSV rows")
    _add_common(p, mc=False)
    p.add_argument("suite", nargs="?", default="all", choices=verify_mod.SUITE_NAMES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    return parser, sub


# --------------------------------------------------------------------------
# validation

def parse_theta(text, n):
    if n is None:
        raise UsageError("--theta needs --n")
    if isinstance(text, str) and text in ("diag", "e1"):
        return resolve_theta(text, n)
    if isinstance(text, str):
        try:
            vals = [float(t) for t in text.split(",")]
        except ValueError:
            raise UsageError(f"--theta: malformed number in {text!r}") from None
    else:
        vals = [float(t) for t in text]
    if len(vals) != n:
        raise UsageError(f"--theta has {len(vals)} entries but n = {n}")
    return check_unit_vector(np.array(vals))


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"--config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config {path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise UsageError(f"--config {path}: expected a JSON object")
    out = {}
    for k, v in data.items():
        k = k.replace("-", "_")
        out[CONFIG_ALIASES.get(k, k)] = v
    return out


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for {args.command}")


def _space(args):
    _require(args, "space")
    return parse_space(args.space)


def _subspace_or_theta(args, dim_body):
    if args.subspace_file is not None and args.theta is not None:
        raise UsageError("give either --theta or --subspace-file, not both")
    if args.subspace_file is not None:
        sub = Subspace.read(args.subspace_file)
        if sub.ambient != dim_body:
            raise UsageError(f"subspace lives in R^{sub.ambient} but the body in R^{dim_body}")
        return sub
    if args.theta is None:
        raise UsageError("one of --theta or --subspace-file is required")
    return None


def _mc(args):
    workers = args.workers
    if workers is not None:
        check_count(workers, "workers")
    return MCConfig(samples=check_count(args.samples, "samples"), seed=args.seed,
                    chunk=check_count(args.chunk, "chunk"), workers=workers)


def parse_and_validate(argv):
    """Turn ``argv`` into a fully validated :class:`ExperimentSpec` or raise :class:`UsageError`."""
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config)
        known = set(vars(args))
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"--config: unknown keys {unknown}")
        cfg.pop("command", None)
        cfg.pop("config", None)
        sub.choices[args.command].set_defaults(**cfg)
        args = parser.parse_args(argv)
    try:
        return _validate(args)
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from None


def _validate(args):
    cmd = args.command
    fmt = args.format or ("csv" if cmd == "verify" else "json")
    params = {}
    if cmd == "verify":
        mc = MCConfig(seed=args.seed, workers=args.workers)
        params["suite"] = args.suite
        return ExperimentSpec(cmd, params, mc, fmt, args.output)
    if cmd == "lewis":
        if args.measure is not None:
            measure = DiscreteMeasure.read(args.measure)
            _require(args, "p")
            p = args.p
        else:
            space = _space(args)
            if not isinstance(space, LpDiscrete):
                raise UsageError("lewis needs --measure FILE or --space measure:<path>,p=<r>")
            measure, p = space.measure, space.p if args.p is None else args.p
        params.update(measure=measure, p=check_positive(p, "p"), tol=check_positive(args.tol, "tol"),
                      max_iter=check_count(args.max_iter, "max-iter"), damping=args.damping)
        if not 0 < args.damping <= 1:
            raise UsageError(f"--damping must be in (0, 1], got {args.damping}")
        return ExperimentSpec(cmd, params, MCConfig(), fmt, args.output)

    mc = _mc(args)
    if cmd == "volume":
        params["space"] = _space(args)
    elif cmd == "detlab":
        _require(args, "alphas")
        try:
            alphas = np.array([float(t) for t in str(args.alphas).split(",")])
        except ValueError:
            raise UsageError(f"--alphas: malformed number in {args.alphas!r}") from None
        if np.any(alphas < 0) or alphas.sum() <= 0:
            raise UsageError("--alphas must be nonnegative with a positive sum")
        params.update(sampler=PSDSamplerSpec(check_count(args.m, "m"), kind=args.kind, dof=args.dof,
                                             lo=args.lo, hi=args.hi),
                      alphas=alphas, r=check_positive(args.r, "r"))
    else:
        X = _space(args)
        n = args.n
        params["space"] = X
        if cmd == "project":
            if n is not None:
                check_count(n, "n", minimum=2)
            sub = _subspace_or_theta(args, X.dim if n is None else X.dim * n)
            if sub is None:
                params.update(n=n, theta=parse_theta(args.theta, n))
            else:
                if n is not None:
                    raise UsageError("--subspace-file projects the unit ball of --space itself; drop --n")
                params["subspace"] = sub
            body = X if n is None else LpPower(math.inf, n, X)
            if not body.is_convex:
                raise UsageError("projections need a convex body (q >= 1 throughout)")
            params["membership"] = MembershipConfig(tol=args.tol, max_iter=args.max_iter,
                                                    multistarts=args.multistarts)
        else:
            _require(args, "p")
            p = args.p
            check_positive(p, "p", allow_inf=(cmd == "section"))
            params["p"] = p
            if cmd == "section" and args.subspace_file is not None:
                body = X if n is None else LpPower(p, check_count(n, "n"), X)
                params.update(body=body, subspace=_subspace_or_theta(args, body.dim), n=n)
            else:
                _require(args, "n", "theta")
                check_count(n, "n", minimum=2)
                params.update(n=n, theta=parse_theta(args.theta, n))
            if cmd == "laplace":
                if (args.lam is None) == (args.alpha is None):
                    raise UsageError("laplace needs exactly one of --lambda or --alpha")
                if args.lam is not None:
                    params["lam"] = check_positive(args.lam, "lambda")
                    if args.epsilon is not None:
                        params["epsilon"] = check_positive(args.epsilon, "epsilon")
                else:
                    dim = X.dim * (n - 1)
                    if not 0 < args.alpha < dim:
                        raise UsageError(f"--alpha must lie in (0, {dim})")
                    if args.epsilon is not None:
                        raise UsageError("--epsilon applies to --lambda runs only")
                    params["alpha"] = args.alpha
            if cmd == "meanwidth" and p < 1:
                raise UsageError(f"mean width needs p >= 1, got {p}")
            if cmd == "section":
                params["probe"] = args.probe
                if args.probe and "theta" not in params:
                    raise UsageError("--probe works with --theta")
    return ExperimentSpec(cmd, params, mc, fmt, args.output)


# --------------------------------------------------------------------------
# dispatch

def _est(e):
    return e.to_dict()


def run(spec):
    """Execute a validated spec; returns ``(report, exit_code)``."""
    cmd, P, mc = spec.command, spec.params, spec.mc
    if cmd == "verify":
        checks = verify_mod.run_suite(P["suite"], seed=mc.seed, workers=mc.workers)
        return checks, 0 if all(c.passed for c in checks) else 1
    if cmd == "lewis":
        try:
            res = lewis_solve(P["measure"], P["p"], P["tol"], P["max_iter"], P["damping"])
        except LewisSingularityError as exc:
            return {"error": str(exc), "converged": False}, 1
        return res.to_dict(), 0 if res.converged else 1
    if cmd == "volume":
        X = P["space"]
        ex = exact_volume(X)
        est = section_volume(X, Subspace.full(X.dim), mc)
        out = {"space": str(X), "dim": X.dim, "estimate": _est(est)}
        if ex is not None:
            out["exact"] = ex.to_dict()
        return out, 0
    if cmd == "section":
        X, p = P["space"], P["p"]
        if "subspace" in P:
            est = section_volume(P["body"], P["subspace"], mc)
            return {"body": str(P["body"]), "subspace_dim": P["subspace"].dim, "estimate": _est(est)}, 0
        out = {"space": str(X), "p": p, "n": P["n"], "theta": P["theta"].tolist()}
        if X.dim * (P["n"] - 1) > MAX_SECTION_DIM:
            spec.notes.append(f"section dimension above {MAX_SECTION_DIM}: expect large variance")
        if P["probe"]:
            probe = question_probe(X, p, P["n"], P["theta"], mc)
            out.update(section=_est(probe["section"]), lower_dim_volume=_est(probe["lower_dim_volume"]))
        else:
            out["estimate"] = _est(block_section_volume(X, p, P["n"], P["theta"], mc))
        return out, 0
    if cmd == "project":
        X, cfg = P["space"], P["membership"]
        if "subspace" in P:
            est = subspace_projection_volume(X, P["subspace"], cfg, mc)
            return {"space": str(X), "subspace_dim": P["subspace"].dim, "estimate": _est(est)}, 0
        est = projection_volume(X, P["n"], P["theta"], cfg, mc)
        return {"space": str(X), "n": P["n"], "theta": P["theta"].tolist(), "estimate": _est(est)}, 0
    if cmd == "laplace":
        X, p, n, th = P["space"], P["p"], P["n"], P["theta"]
        out = {"space": str(X), "p": p, "n": n, "theta": th.tolist()}
        if "lam" in P:
            out["lambda"] = P["lam"]
            out["estimate"] = _est(laplace_estimate(X, p, n, th, P["lam"], mc))
            if "epsilon" in P:
                out["epsilon"] = P["epsilon"]
                out["slab_estimate"] = _est(slab_laplace_estimate(X, p, n, th, P["lam"], P["epsilon"], mc))
        else:
            out["alpha"] = P["alpha"]
            out["estimate"] = _est(negative_moment_estimate(X, p, n, th, P["alpha"], mc))
        return out, 0
    if cmd == "meanwidth":
        X, p, n, th = P["space"], P["p"], P["n"], P["theta"]
        est = mean_width_estimate(X, p, n, th, mc)
        return {"space": str(X), "p": p, "n": n, "theta": th.tolist(), "estimate": _est(est)}, 0
    if cmd == "detlab":
        a = P["alphas"]
        est = det_schur_estimate(P["sampler"], a, P["r"], a.shape[0], mc)
        return {"m": P["sampler"].m, "kind": P["sampler"].kind, "alphas": a.tolist(), "r": P["r"],
                "estimate": _est(est)}, 0
    raise UsageError(f"unknown command {cmd!r}")


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
        return out
    if isinstance(obj, list):
        return {prefix[:-1]: " ".join(json.dumps(v) for v in obj)}
    return {prefix[:-1]: obj}


def render(spec, report):
    if spec.command == "verify":
        if spec.fmt == "csv":
            return verify_mod.to_csv(report)
        rows = [dict(zip(verify_mod.COLUMNS, c.row())) for c in report]
        return json.dumps(rows, indent=2) + "\n"
    if spec.notes:
        report = dict(report, notes=spec.notes)
    if spec.fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    flat = _flatten(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(flat))
    w.writerow(["" if v is None else v for v in flat.values()])
    return buf.getvalue()


def _write_atomic(path, text):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".lpsections-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        spec = parse_and_validate(argv)
        if spec.output is not None and not os.path.isdir(os.path.dirname(os.path.abspath(spec.output))):
            raise UsageError(f"--output: directory of {spec.output!r} does not exist")
        report, code = run(spec)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(spec, report)
    if spec.output is None:
        sys.stdout.write(text)
    else:
        _write_atomic(spec.output, text)
    return code


if __name__ == "__main__":
    sys.exit(main())
