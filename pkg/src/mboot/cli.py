"""``mboot`` command line: intervals, rate and size estimation, simulation studies.

Exit codes: 0 on success, 1 on any error (including usage errors), and
2 when the run succeeded but produced warnings (``--warnings-exit-code``
changes or, with 0, disables that).
"""

import argparse
import json
import sys

from . import io as mio
from .core import mboot
from .errors import MbootError
from .estimators import STATISTICS, get_statistic
from .intervals import ESTIMATED_TAU_NOTE, ScalingRate, ci_basic, ci_norm, ci_sherman, slow_rate_warning
from .rate import estimate_tau, gamma_grid
from .rng import derive_seed, resolve_seed
from .selection import METHODS, estimate_m
from .simulate import describe_rule, load_studies, presets, run_study


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# argument parsing helpers


def parse_tau_arg(text):
    """``"n^b"``, ``"b"`` or ``"estimate"``; returns a ScalingRate or ``"estimate"``."""
    t = text.strip()
    if t == "estimate":
        return "estimate"
    body = t[2:] if t.startswith("n^") else t
    body = body.strip("()")
    try:
        if "/" in body:
            num, den = body.split("/")
            beta = float(num) / float(den)
        else:
            beta = float(body)
    except ValueError:
        raise UsageError(f"cannot read scaling rate {text!r}; use 'n^<beta>' or 'estimate'") from None
    return ScalingRate.power(beta)


def parse_gamma_arg(text):
    """``"low:high:count"`` or a comma list of exponents."""
    try:
        if ":" in text:
            low, high, count = text.split(":")
            return gamma_grid(float(low), float(high), int(count))
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"cannot read gamma grid {text!r}; use 'low:high:count'") from None


def parse_params_arg(text):
    """``"k=v,k2=v2"`` with numeric values where possible."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"parameter {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        k, v = k.strip(), v.strip()
        for conv in (int, float):
            try:
                v = conv(v)
                break
            except ValueError:
                continue
        out[k] = v
    return out


def parse_columns_arg(text):
    if text is None:
        return None
    try:
        cols = [int(c) - 1 for c in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot read column list {text!r}") from None
    if any(c < 0 for c in cols):
        raise UsageError("columns are numbered from 1")
    return cols


# ---------------------------------------------------------------------------
# commands


def _load(args):
    try:
        stat = get_statistic(args.stat)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    data, _ = mio.read_dataset(args.data, parse_columns_arg(args.columns))
    if data.d < stat.dims:
        raise UsageError(f"statistic {stat.name!r} needs {stat.dims} data columns, file has {data.d}")
    return data, stat


def _resolve_tau(args, data, stat, seed):
    """Returns ``(ScalingRate, TauEstimate or None)``."""
    tau = parse_tau_arg(args.tau)
    if tau != "estimate":
        return tau, None
    est = estimate_tau(data, stat, R=args.R, replace=args.replace, seed=derive_seed(seed, 1))
    return ScalingRate.power(est.beta, provenance="estimated"), est


def cmd_ci(args):
    data, stat = _load(args)
    seed = resolve_seed(args.seed)
    types = ["basic", "norm"] if args.type == "all" else [args.type]
    needs_tau = any(t != "sherman" for t in types) or args.m.startswith("auto")
    tau, est = _resolve_tau(args, data, stat, seed) if needs_tau else (None, None)

    extra_warnings = list(est.warnings) if est else []
    if args.m.startswith("auto"):
        method = args.m.split(":", 1)[1] if ":" in args.m else "bickel"
        if method not in METHODS:
            raise UsageError(f"unknown m selection method {method!r}; choose from {', '.join(METHODS)}")
        m = estimate_m(data, stat, tau, R=args.R, replace=args.replace, method=method, seed=derive_seed(seed, 2)).m
    else:
        try:
            m = int(args.m)
        except ValueError:
            raise UsageError(f"--m takes an integer or auto:<method>, got {args.m!r}") from None

    records = []
    dist = None
    for t in types:
        if t == "sherman":
            ci = ci_sherman(data, stat, m, R=args.R, level=args.level, seed=seed)
        else:
            if dist is None:
                dist = mboot(data, stat, m, R=args.R, replace=args.replace, seed=seed)
            ci = (ci_basic if t == "basic" else ci_norm)(dist, tau, args.level)
        warnings = list(ci.warnings)
        warnings += [w for w in extra_warnings if w not in warnings]
        rec = {
            "method": ci.method,
            "n": ci.n,
            "m": ci.m,
            "level": ci.level,
            "lower": ci.lower,
            "upper": ci.upper,
            "beta_hat": est.beta if est else None,
            "warnings": warnings,
            "statistic": stat.name,
            "tau": ci.tau_description,
            "R": args.R,
            "replace": args.replace and t != "sherman",
            "seed": seed,
        }
        records.append(rec)
    return records


def cmd_estimate_tau(args):
    data, stat = _load(args)
    seed = resolve_seed(args.seed)
    gamma = parse_gamma_arg(args.gamma)
    est = estimate_tau(data, stat, R=args.R, replace=args.replace, gamma=gamma, method=args.method, seed=seed)
    records = [
        {
            "record": "estimate",
            "method": est.method,
            "n": data.n,
            "beta_hat": est.beta,
            "warnings": list(est.warnings),
            "log_dispersion_intercept": est.log_V_intercept,
            "statistic": stat.name,
            "R": args.R,
            "seed": seed,
        }
    ]
    for g, m, disp in est.grid:
        records.append({"record": "grid", "method": est.method, "n": data.n, "m": m, "gamma": g, "dispersion": disp})
    return records


def cmd_estimate_m(args):
    data, stat = _load(args)
    seed = resolve_seed(args.seed)
    tau, est = _resolve_tau(args, data, stat, seed)
    params = parse_params_arg(args.params)
    sel = estimate_m(data, stat, tau, R=args.R, replace=args.replace, method=args.method, params=params, seed=seed)
    warnings = []
    slow = slow_rate_warning(tau, data.n)
    if slow:
        warnings.append(slow)
    if est:
        warnings += [w for w in est.warnings if w not in warnings] + [ESTIMATED_TAU_NOTE]
    records = [
        {
            "record": "selection",
            "method": sel.method,
            "n": data.n,
            "m": sel.m,
            "beta_hat": est.beta if est else None,
            "warnings": warnings,
            "statistic": stat.name,
            "tau": tau.describe(),
            "R": args.R,
            "seed": seed,
        }
    ]
    for m, crit in sel.curve:
        records.append({"record": "curve", "method": sel.method, "n": data.n, "m": m, "criterion": crit})
    return records


def _study_records(result):
    cfg = result.config
    out = []
    for row in result.rows:
        rec = {
            "method": cfg.ci_method if cfg.kind == "coverage" else cfg.tau_method,
            "n": row["n"],
            "level": cfg.level if cfg.kind == "coverage" else None,
            "label": cfg.label,
            "kind": cfg.kind,
            "model": cfg.model,
            "statistic": cfg.statistic,
            "m_rule": describe_rule(cfg.m_rule) if cfg.kind == "coverage" else None,
            "tau": cfg.tau if isinstance(cfg.tau, str) or cfg.tau is None else repr(cfg.tau),
            "N": cfg.N,
            "R": cfg.R,
            "replace": cfg.replace,
            "seed": cfg.seed,
        }
        if cfg.kind == "coverage":
            rec.update(
                coverage=row["coverage"],
                covered=row["covered"],
                half_width=row["half_width"],
                mean_length=row["mean_length"],
                mean_m=row["mean_m"],
                sd_m=row["sd_m"],
                fit_c=result.fit[0] if result.fit else None,
                fit_beta=result.fit[1] if result.fit else None,
            )
        else:
            rec.update(beta_hat=row["beta_mean"], beta_sd=row["beta_sd"], warn_fraction=row["warn_fraction"])
        out.append(rec)
    return out


def cmd_simulate(args):
    if (args.config is None) == (args.preset is None):
        raise UsageError("give exactly one of --config or --preset")
    if args.preset is not None:
        doc = {"preset": args.preset}
    else:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MbootError(f"{args.config}: line {exc.lineno}: {exc.msg}") from None
    studies = load_studies(doc)
    if args.N is not None:
        for cfg in studies:
            cfg.N = args.N
    records = []
    for cfg in studies:
        result = run_study(cfg, workers=args.workers)
        for row in result.rows:
            print(f"[{cfg.label or cfg.model}] n={row['n']} finished in {row['elapsed']:.1f}s", file=sys.stderr)
        records += _study_records(result)
    return records


# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="mboot", description="m-out-of-n bootstrap confidence intervals and simulation studies")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, data=True):
        if data:
            sp.add_argument("--data", required=True, help="CSV file, one observation per row")
            sp.add_argument("--stat", required=True, help=f"statistic: {', '.join(STATISTICS)}")
            sp.add_argument("--columns", help="1-based columns to use, e.g. '1,2' (default: all)")
            sp.add_argument("--R", type=int, default=1000, help="bootstrap replicates (default 1000)")
            sp.add_argument("--replace", action="store_true", help="draw with replacement")
            sp.add_argument("--seed", type=int, help="master seed (random when omitted)")
        sp.add_argument("--out", help="output file (.csv, .jsonl); stdout when omitted")
        sp.add_argument("--format", choices=("csv", "jsonl"), help="output format (default from --out suffix)")
        sp.add_argument("--warnings-exit-code", type=int, default=2, help="exit code when warnings occur (0 disables)")

    ci = sub.add_parser("ci", help="confidence interval(s) for a statistic")
    common(ci)
    ci.add_argument("--m", required=True, help="subsample size or auto:<bickel|goetze|politis>")
    ci.add_argument("--tau", default="estimate", help="'n^<beta>' or 'estimate' (default)")
    ci.add_argument("--type", default="all", choices=("basic", "norm", "sherman", "all"))
    ci.add_argument("--level", type=float, default=0.95)
    ci.set_defaults(func=cmd_ci)

    et = sub.add_parser("estimate-tau", help="estimate the rate exponent beta in tau(n) = n^beta")
    common(et)
    et.add_argument("--gamma", default="0.2:0.7:5", help="'low:high:count' or a comma list (default 0.2:0.7:5)")
    et.add_argument("--method", default="variance", choices=("variance", "quantile"))
    et.set_defaults(func=cmd_estimate_tau)

    em = sub.add_parser("estimate-m", help="choose the subsample size m from the data")
    common(em)
    em.add_argument("--tau", default="estimate", help="'n^<beta>' or 'estimate' (default)")
    em.add_argument("--method", default="bickel", choices=tuple(METHODS))
    em.add_argument("--params", default="", help="method settings as k=v,... (e.g. q=0.7)")
    em.set_defaults(func=cmd_estimate_m)

    sim = sub.add_parser("simulate", help="run coverage or rate-estimation studies")
    common(sim, data=False)
    sim.add_argument("--config", help="JSON study file (one study, a list, or {'studies': [...]})")
    sim.add_argument("--preset", choices=tuple(presets()), help="built-in desk-scale study set")
    sim.add_argument("--N", type=int, help="override the repetition count of every study")
    sim.add_argument("--workers", type=int, default=1, help="worker processes (capped by MOONBOOT_THREADS)")
    sim.set_defaults(func=cmd_simulate)
    return p


def _summary(rec):
    parts = [f"{k}={mio.format_value(v)}" for k, v in rec.items() if k != "warnings" and v is not None]
    return " ".join(parts)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        records = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (MbootError, ValueError, KeyError, OSError, RuntimeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else 0

    fmt = args.format or (mio.format_for(args.out) if args.out else "csv")
    if args.out:
        mio.write_records(records, args.out, fmt)
        for rec in records:
            if rec.get("record") not in ("grid", "curve"):
                print(_summary(rec))
    else:
        sys.stdout.write(mio.dumps_records(records, fmt))

    warnings = []
    for rec in records:
        for w in rec.get("warnings") or []:
            if w not in warnings:
                warnings.append(w)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return args.warnings_exit_code if warnings else 0


if __name__ == "__main__":
    sys.exit(main())
