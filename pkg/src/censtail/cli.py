"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data parse error, 3 estimator
domain error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import DomainError, order
from .datafile import DataParseError, parse_keyvalue, parse_model, read_data
from .estimators import (hill_censored, hill_z, kaplan_meier, kernel_estimate,
                         weissman_quantile, worms)
from .kernels import QuadratureError, kernel_from_name
from .secondorder import derive_z_params, theoretical_k_opt
from .simulate import (DistributionSpec, McStudyConfig, adaptive_study,
                       estimator_trajectory, mc_study, weissman_study)
from .threshold import LINK_PROFILES, ThresholdConfig, adaptive_k_hill

SCHEMA_VERSION = 1
EXIT_USAGE, EXIT_PARSE, EXIT_DOMAIN = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    return "nan" if x is None or not math.isfinite(x) else f"{x:.17g}"


def _json_num(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _dump_json(obj, out):
    json.dump({"schema_version": SCHEMA_VERSION, **obj}, out, indent=2)
    out.write("\n")


def _estimator(label: str):
    """Scalar estimator ``(ordered, k) -> xi`` for a CLI label."""
    if label == "hill":
        return hill_censored
    if label == "hill_z":
        return hill_z
    if label == "worms":
        return worms
    try:
        kernel = kernel_from_name(label)
    except ValueError:
        raise UsageError(f"unknown estimator {label!r}") from None
    return lambda o, k: kernel_estimate(o, k, kernel)


def _threshold_config(args) -> ThresholdConfig:
    try:
        return ThresholdConfig.with_profile(
            args.link_f_profile, rho_z=args.rho_z, k_lo=args.k_lo,
            k_hi_fraction=args.k_hi_frac, link_constant_K=args.link_k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse_k(text: str | None):
    if text is None or text == "adaptive":
        return text
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"--k must be an integer or 'adaptive', got {text!r}") from None


def _select(ordered, args):
    tcfg = _threshold_config(args)
    return adaptive_k_hill(ordered, tcfg)


def _eval_at(ordered, labels, k):
    out = {}
    for lbl in labels:
        fn = _estimator(lbl)
        try:
            out[lbl] = fn(ordered, k)
        except DomainError as exc:
            raise DomainError(f"{lbl} at k={k}: {exc}") from None
    return out


def cmd_estimate(args, out):
    ordered = order(read_data(args.file))
    labels = args.kernel or ["hill"]
    for lbl in labels:
        _estimator(lbl)
    k = _parse_k(args.k)
    if k is None:
        ks = np.arange(1, ordered.n)
        cols = {lbl: estimator_trajectory(lbl)(ordered, ks) for lbl in labels}
        if args.format == "json":
            _dump_json({"ks": ks.tolist(),
                        "estimates": {l: [_json_num(v) for v in c] for l, c in cols.items()}}, out)
        else:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["k"] + labels)
            for m, kk in enumerate(ks):
                w.writerow([int(kk)] + [_fmt(cols[l][m]) for l in labels])
        return
    extra = {}
    if k == "adaptive":
        res = _select(ordered, args)
        k = res.k_adaptive
        extra = {"k_hat0": res.k_hat0, "p_at_khat0": res.p_at_khat0,
                 "k_adaptive": res.k_adaptive}
    ests = _eval_at(ordered, labels, k)
    if args.format == "json":
        _dump_json({"k": k, **extra,
                    "estimates": {l: _json_num(v) for l, v in ests.items()}}, out)
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["estimator", "k", "xi"] + list(extra))
        for l, v in ests.items():
            w.writerow([l, k, _fmt(v)] + [_fmt(x) if isinstance(x, float) else x
                                          for x in extra.values()])


def cmd_quantile(args, out):
    if not 0.0 < args.level < 1.0:
        raise UsageError(f"--level must lie in (0, 1), got {args.level}")
    sample = read_data(args.file)
    ordered = order(sample)
    k = _parse_k(args.k)
    extra = {}
    if k == "adaptive":
        res = _select(ordered, args)
        k = res.k_adaptive
        extra = {"k_hat0": res.k_hat0, "p_at_khat0": res.p_at_khat0,
                 "k_adaptive": res.k_adaptive}
    xi = _eval_at(ordered, [args.kernel], k)[args.kernel]
    try:
        q = weissman_quantile(ordered, k, 1.0 - args.level, xi, anchor=args.anchor)
    except DomainError as exc:
        raise DomainError(f"at k={k}: {exc}") from None
    if args.format == "json":
        _dump_json({"level": args.level, "k": k, **extra, "estimator": args.kernel,
                    "xi": xi, "quantile": q}, out)
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["estimator", "k", "level", "xi", "quantile"])
        w.writerow([args.kernel, k, _fmt(args.level), _fmt(xi), _fmt(q)])


def cmd_km(args, out):
    surv = kaplan_meier(read_data(args.file))
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["x", "survival"])
    for x, s in zip(surv.breakpoints, surv.values):
        w.writerow([_fmt(x), _fmt(s)])


def cmd_select_k(args, out):
    ordered = order(read_data(args.file))
    res = _select(ordered, args)
    _dump_json({"k_hat0": res.k_hat0, "p_at_khat0": res.p_at_khat0,
                "k_adaptive": res.k_adaptive, "k_raw": res.k_raw,
                "clamped": res.clamped, "rho_z": args.rho_z,
                "s2_trajectory": [{"k": int(k), "s2": float(s)}
                                  for k, s in res.s2_trajectory]}, out)


def cmd_theory(args, out):
    try:
        text = Path(args.model).read_text()
    except OSError as exc:
        raise DataParseError(f"cannot read {args.model}: {exc.strerror}") from None
    model = parse_model(text, args.model)
    try:
        kernel = kernel_from_name(args.kernel)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = theoretical_k_opt(kernel, model, args.n, constant=args.constant)
    if args.curve:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["k", "amse"])
        for k, a in zip(range(2, args.n), res.amse):
            w.writerow([k, _fmt(a)])
        return
    d = derive_z_params(model)
    _dump_json({"kernel": kernel.name, "n": args.n, "k_opt": res.k,
                "degenerate": res.degenerate, "reason": res.reason,
                "derived": {k: _json_num(v) if v is not None else None
                            for k, v in vars(d).items()}}, out)


# -- simulate ----------------------------------------------------------------

_SIM_KEYS = {"name", "study", "x", "c", "n", "reps", "seed", "estimators", "k_grid",
             "prob_exceed", "rho_z", "k_lo", "k_hi_fraction", "link_k",
             "link_f_profile", "fixed_k"}


def _num(text: str) -> float:
    num, _, den = text.partition("/")
    return float(num) / (float(den) if den else 1.0)


def _parse_grid(text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            lo, hi, *step = part.split(":")
            out.extend(range(int(lo), int(hi) + 1, int(step[0]) if step else 1))
        elif part:
            out.append(int(part))
    return tuple(out)


def load_study(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        kv = parse_keyvalue(text, path)
    except DataParseError as exc:
        raise UsageError(str(exc)) from None
    unknown = sorted(set(kv) - _SIM_KEYS)
    if unknown:
        raise UsageError(f"{path}: unknown key {unknown[0]!r}")
    try:
        specs = [DistributionSpec.parse(kv[key]) for key in ("x", "c")]
        cfg = McStudyConfig(
            specs[0], specs[1], n=int(kv["n"]), reps=int(kv["reps"]),
            k_grid=_parse_grid(kv.get("k_grid", "")),
            estimators=tuple(s.strip() for s in kv.get("estimators", "k0,k1,k2,worms").split(",")),
            seed=int(kv.get("seed", "0")))
        tcfg = ThresholdConfig.with_profile(
            kv.get("link_f_profile", "unit"), rho_z=_num(kv.get("rho_z", "-1")),
            k_lo=int(kv.get("k_lo", "10")),
            k_hi_fraction=_num(kv.get("k_hi_fraction", "0.2")),
            link_constant_K=_num(kv.get("link_k", "1")))
    except KeyError as exc:
        raise UsageError(f"{path}: missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    studies = [s.strip() for s in kv.get("study", "mc").split(",")]
    for s in studies:
        if s not in ("mc", "weissman", "adaptive"):
            raise UsageError(f"{path}: unknown study {s!r}")
    return kv, cfg, tcfg, studies


def cmd_simulate(args, out):
    kv, cfg, tcfg, studies = load_study(args.config)
    workers = int(os.environ.get("CENSTAIL_THREADS", "1") or 1)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = kv.get("name", Path(args.config).stem)
    for study in studies:
        if study == "mc":
            text = mc_study(cfg, workers).to_csv()
        elif study == "weissman":
            text = weissman_study(cfg, _num(kv.get("prob_exceed", "0.005")), workers).to_csv()
        else:
            fixed = int(kv["fixed_k"]) if "fixed_k" in kv else None
            text = adaptive_study(cfg, tcfg, fixed, cfg.estimators, workers).to_csv()
        target = outdir / f"{stem}_{study}.csv"
        target.write_text(text)
        out.write(f"{target}\n")


# -- parser ------------------------------------------------------------------

def _threshold_flags(p):
    p.add_argument("--rho-z", type=float, default=-1.0)
    p.add_argument("--k-lo", type=int, default=10)
    p.add_argument("--k-hi-frac", type=float, default=0.2)
    p.add_argument("--link-k", type=float, default=1.0)
    p.add_argument("--link-f-profile", default="unit", choices=sorted(LINK_PROFILES))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="censtail", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="extreme value index estimates")
    p.add_argument("file")
    p.add_argument("--kernel", action="append",
                   help="hill, hill_z, worms or a kernel name (k0, k1, k2, bar:.., tilde:..); repeatable")
    p.add_argument("--k", help="integer or 'adaptive'; omit for the full trajectory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _threshold_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("quantile", help="Weissman extreme quantile")
    p.add_argument("file")
    p.add_argument("--level", type=float, default=0.995)
    p.add_argument("--k", default="adaptive")
    p.add_argument("--kernel", default="hill")
    p.add_argument("--anchor", choices=("km", "order_statistic"), default="km")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _threshold_flags(p)
    p.set_defaults(func=cmd_quantile)

    p = sub.add_parser("km", help="Kaplan-Meier survival curve as CSV")
    p.add_argument("file")
    p.set_defaults(func=cmd_km)

    p = sub.add_parser("select-k", help="adaptive threshold selection (JSON)")
    p.add_argument("file")
    _threshold_flags(p)
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("simulate", help="run a Monte Carlo study from a config file")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("theory", help="theoretical AMSE-optimal k from a model file")
    p.add_argument("model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kernel", default="k0")
    p.add_argument("--constant", choices=("z", "x"), default="z")
    p.add_argument("--curve", action="store_true", help="emit the AMSE curve as CSV")
    p.set_defaults(func=cmd_theory)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args, out)
    except UsageError as exc:
        err.write(f"censtail: usage error: {exc}\n")
        return EXIT_USAGE
    except DataParseError as exc:
        err.write(f"censtail: data error: {exc}\n")
        return EXIT_PARSE
    except (DomainError, QuadratureError) as exc:
        err.write(f"censtail: estimator domain error: {exc}\n")
        return EXIT_DOMAIN
    return 0


if __name__ == "__main__":
    sys.exit(main())
