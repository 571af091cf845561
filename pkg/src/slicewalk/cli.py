"""Command-line front end.

Subcommands: gen-graph, sample, estimate-z, verify-spectral, experiment.
Every run prints a machine-readable report that starts with a reproducibility
stanza (full effective config, seed, version); with identical config and seed
the output is byte-identical.  Exit codes: 0 success, 1 verification failure,
2 usage error.

A flat key=value config file can seed any option (--config); explicit
command-line flags take precedence over the file.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .counting import (EstimatorConfig, ThresholdParams, estimate_partition_hat,
                       thresholds)
from .experiments import (ExperimentConfig, experiment_independent_set_size,
                          experiment_large_set_expansion,
                          experiment_neighborhood_concentration,
                          experiment_slow_mixing)
from .graphs import gen_bipartite_regular, gen_regular, load_graph, save_graph
from .reports import emit, reproducibility_stanza, to_csv, to_json
from .slices import OneSidedSlice, RegularSlice, TwoSidedSlice
from .verify import (verify_one_sided_identities, verify_top_link_one_sided,
                     verify_top_link_regular, verify_top_link_two_sided)
from .walks import ChainConfig, format_facet, run_chain


class UsageError(ValueError):
    pass


def _parse_config_value(raw: str):
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def load_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment."""
    out: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, raw = line.split("=", 1)
        out[key.strip().replace("-", "_")] = _parse_config_value(raw.strip())
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicewalk",
        description="Sampling, spectral verification, and approximate counting "
                    "for hardcore-model slices on regular bipartite graphs")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--config", type=str, default=None,
                       help="flat key=value file providing defaults")
        p.add_argument("--timing", action="store_true",
                       help="include wall_time in the report (breaks "
                            "byte-reproducibility)")

    p = sub.add_parser("gen-graph", help="generate a random regular (bipartite) graph")
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--bipartite", action="store_true")
    kind.add_argument("--regular", action="store_true")
    p.add_argument("--n", type=int, required=True,
                   help="side size (bipartite) or vertex count (regular)")
    p.add_argument("--delta", type=int, required=True, help="degree")
    p.add_argument("--max-retries", type=int, default=10_000)
    common(p)

    p = sub.add_parser("sample", help="run a down-up chain and emit the sample stream")
    p.add_argument("--in", dest="graph_in", type=str, required=True)
    p.add_argument("--family", choices=("two-sided", "one-sided", "regular"),
                   required=True)
    p.add_argument("--kx", type=int, default=1)
    p.add_argument("--ky", type=int, default=1)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5, help="fugacity")
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--no-lazy", action="store_true")
    p.add_argument("--stream-out", type=str, default=None,
                   help="write the facet stream here (default: inside the report)")
    common(p)

    p = sub.add_parser("estimate-z", help="banded partition-function estimate")
    p.add_argument("--in", dest="graph_in", type=str, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="fugacity")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--ell", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=None,
                   help="override the occupancy threshold")
    p.add_argument("--beta", type=float, default=None,
                   help="override the band ceiling")
    common(p)

    p = sub.add_parser("verify-spectral", help="deterministic top-link bound sweeps")
    p.add_argument("--in", dest="graph_in", type=str, required=True)
    fam = p.add_mutually_exclusive_group(required=True)
    fam.add_argument("--two-sided", action="store_true")
    fam.add_argument("--one-sided", action="store_true")
    fam.add_argument("--regular", action="store_true")
    p.add_argument("--kx", type=int, default=2)
    p.add_argument("--ky", type=int, default=2)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=0.25, help="fugacity")
    p.add_argument("--face-cap", type=int, default=100_000)
    p.add_argument("--sample-count", type=int, default=10_000)
    p.add_argument("--full-records", action="store_true",
                   help="include every per-link record in the report")
    common(p)

    p = sub.add_parser("experiment", help="concentration and slow-mixing drivers")
    p.add_argument("--name", required=True,
                   choices=("neighborhood-concentration", "large-set-expansion",
                            "independent-set-size", "slow-mixing"))
    p.add_argument("--n", type=int, required=True, help="side size")
    p.add_argument("--delta", type=int, required=True, help="degree")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5, help="fugacity")
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--ell", type=float, default=2.0)
    p.add_argument("--a", type=float, default=0.4)
    p.add_argument("--b", type=float, default=0.4)
    p.add_argument("--c", type=float, default=0.6)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--control", action="store_true")
    common(p)
    return parser


def _flag_for(key: str) -> str:
    return "--lambda" if key == "lam" else "--" + key.replace("_", "-")


def _effective_args(argv):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        overrides = load_config_file(args.config)
        unknown = [k for k in overrides if not hasattr(args, k)]
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key, value in overrides.items():
            if _flag_for(key) not in argv:  # explicit flags win over the file
                setattr(args, key, value)
    return args


def _public_config(args) -> dict:
    skip = {"command", "config", "out", "format", "timing"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _finish(args, report: dict, failed: bool = False, records=None) -> int:
    if args.timing:
        report["wall_time"] = time.monotonic()
    if args.format == "csv" and records is not None:
        emit(to_csv(records), args.out)
    elif args.format == "csv":
        emit(to_csv([report]), args.out)
    else:
        emit(to_json(report), args.out)
    return 1 if failed else 0


def _cmd_gen_graph(args) -> int:
    if args.bipartite:
        g = gen_bipartite_regular(args.n, args.delta, args.seed,
                                  max_retries=args.max_retries)
        kind = "bipartite"
    else:
        g = gen_regular(args.n, args.delta, args.seed, max_retries=args.max_retries)
        kind = "regular"
    report = {"reproducibility": reproducibility_stanza("gen-graph",
                                                        _public_config(args), args.seed),
              "kind": kind, "n": args.n, "degree": args.delta}
    if args.out:
        save_graph(g, args.out)
        report["path"] = args.out
        print(to_json(report), end="")
        return 0
    # no --out: the edge list goes into the report
    report["edges"] = g.edges()
    print(to_json(report), end="")
    return 0


def _require_kind(g, bipartite: bool) -> None:
    from .graphs import BipartiteRegularGraph, RegularGraph

    if bipartite and not isinstance(g, BipartiteRegularGraph):
        raise UsageError("this operation needs a bipartite graph file")
    if not bipartite and not isinstance(g, RegularGraph):
        raise UsageError("this operation needs a regular (non-bipartite) graph file")


def _make_slice(args, g):
    if args.family == "two-sided":
        _require_kind(g, True)
        return TwoSidedSlice(g, args.kx, args.ky)
    if args.family == "one-sided":
        _require_kind(g, True)
        return OneSidedSlice(g, args.k, args.lam)
    _require_kind(g, False)
    return RegularSlice(g, args.k)


def _cmd_sample(args) -> int:
    g = load_graph(args.graph_in)
    slc = _make_slice(args, g)
    cfg = ChainConfig(steps=args.steps, seed=args.seed, lazy=not args.no_lazy,
                      burn_in=args.burn_in, thinning=args.thin)
    samples, mix = run_chain(slc, cfg)
    lines = [format_facet(slc, f) for f in samples]
    report = {"reproducibility": reproducibility_stanza("sample",
                                                        _public_config(args), args.seed),
              "samples": len(samples),
              "mixing": {"empirical_tv": mix.empirical_tv, "exact_gap": mix.exact_gap,
                         "autocorr_lag1": mix.autocorr_lag1, "steps": mix.steps}}
    if args.stream_out:
        Path(args.stream_out).write_text("\n".join(lines) + "\n")
        report["stream_path"] = args.stream_out
    else:
        report["stream"] = lines
    return _finish(args, report)


def _cmd_estimate_z(args) -> int:
    g = load_graph(args.graph_in)
    _require_kind(g, True)
    if args.alpha is not None or args.beta is not None:
        base = thresholds(max(3, g.degree), args.lam, args.gamma, args.ell)
        thr = ThresholdParams(args.alpha if args.alpha is not None else base.alpha,
                              args.beta if args.beta is not None else base.beta,
                              args.gamma, args.ell, args.lam, g.degree)
    else:
        thr = thresholds(g.degree, args.lam, args.gamma, args.ell)
    est = estimate_partition_hat(g, args.lam, args.eps, args.delta, seed=args.seed,
                                 thr=thr, config=EstimatorConfig())
    report = {
        "reproducibility": reproducibility_stanza("estimate-z",
                                                  _public_config(args), args.seed),
        "estimate_log": est.log_value, "epsilon": est.epsilon, "delta": est.delta,
        "bands": [{"kind": b.kind, "k_range": list(b.k_range),
                   "value_log": b.value_log, "samples": b.samples}
                  for b in est.bands],
        "trace": [{"pinned": list(t.pinned) if isinstance(t.pinned, tuple) else t.pinned,
                   "marginal": t.marginal, "samples": t.samples} for t in est.trace],
        "seed": est.seed,
        "thresholds": {"alpha": thr.alpha, "beta": thr.beta, "gamma": thr.gamma,
                       "ell": thr.ell},
        "note": "sets heavy on both sides inside (alpha, beta] are counted in "
                "both one-sided bands by construction",
    }
    return _finish(args, report)


def _cmd_verify_spectral(args) -> int:
    g = load_graph(args.graph_in)
    _require_kind(g, not args.regular)
    reports = []
    if args.two_sided:
        reports.append(verify_top_link_two_sided(g, args.kx, args.ky,
                                                 face_cap=args.face_cap,
                                                 sample_count=args.sample_count,
                                                 seed=args.seed))
    elif args.one_sided:
        reports.append(verify_top_link_one_sided(g, args.k, args.lam,
                                                 face_cap=args.face_cap,
                                                 sample_count=args.sample_count,
                                                 seed=args.seed))
        reports.append(verify_one_sided_identities(g, args.k, args.lam,
                                                   face_cap=args.face_cap,
                                                   seed=args.seed))
    else:
        reports.append(verify_top_link_regular(g, args.k, face_cap=args.face_cap,
                                               sample_count=args.sample_count,
                                               seed=args.seed))
    failed = any(not r.all_pass() for r in reports)
    payload = {
        "reproducibility": reproducibility_stanza("verify-spectral",
                                                  _public_config(args), args.seed),
        "sweeps": [r.summary() for r in reports],
        "all_pass": not failed,
    }
    records = None
    if args.full_records or args.format == "csv":
        records = [{"sweep": r.name, "face": list(rec.face), "lambda2": rec.lambda2,
                    "bound": rec.bound, "status": rec.status, "detail": rec.detail}
                   for r in reports for rec in r.records]
        payload["records"] = records
    else:
        payload["failures"] = [
            {"sweep": r.name, "face": list(rec.face), "lambda2": rec.lambda2,
             "bound": rec.bound} for r in reports for rec in r.records
            if rec.status == "fail"]
    return _finish(args, payload, failed=failed, records=records)


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig(name=args.name, n_side=args.n, degree=args.delta,
                           seed=args.seed, k=args.k, fugacity=args.lam,
                           gamma=args.gamma, ell=args.ell, a=args.a, b=args.b,
                           c=args.c, samples=args.samples, steps=args.steps,
                           runs=args.runs)
    driver = {
        "neighborhood-concentration": experiment_neighborhood_concentration,
        "large-set-expansion": experiment_large_set_expansion,
        "independent-set-size": experiment_independent_set_size,
    }.get(args.name)
    if driver is not None:
        report = driver(cfg)
    else:
        report = experiment_slow_mixing(cfg, control=args.control)
    report["reproducibility"] = reproducibility_stanza("experiment",
                                                       _public_config(args), args.seed)
    return _finish(args, report)


def main(argv=None) -> int:
    try:
        args = _effective_args(sys.argv[1:] if argv is None else argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    handlers = {"gen-graph": _cmd_gen_graph, "sample": _cmd_sample,
                "estimate-z": _cmd_estimate_z, "verify-spectral": _cmd_verify_spectral,
                "experiment": _cmd_experiment}
    try:
        return handlers[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
