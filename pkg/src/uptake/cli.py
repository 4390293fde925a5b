"""Command-line interface: fit, diagnose, simulate, compare, rank, compress,
report, serve.

Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 diagnostics failure (the fit completed and the posterior file was
written, but convergence thresholds were violated).  Machine-readable
output is emitted with --json and is byte-identical for identical inputs
and seeds.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import compute_diagnostics
from .errors import ConvergenceError, DataFormatError, HashMismatchError, PriorCoverageError, UptakeError
from .inference import (
    PosteriorSamples,
    SamplerConfig,
    posterior_from_json,
    posterior_to_json,
)
from .model import canonical_json, default_graph, default_instrument, model_from_json
from .priors import compress_posterior, prior_from_json, prior_to_json
from .survey import dataset_hash, parse_responses, score_constructs
from .whatif import (
    comparison_table,
    compare as compare_scenarios,
    rank as rank_scenarios,
    scenario_from_json,
    simulate,
)
from .workflow import RHAT_THRESHOLD, ESS_THRESHOLD, fit_posterior

DATA_DIR_ENV = "UPTAKE_DATA_DIR"


class UsageError(Exception):
    """Bad flags/arguments; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uptake", description=__doc__)
    parser.add_argument("--version", action="version", version=f"uptake {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add_data_flags(p):
        p.add_argument("--data", required=True, help="raw responses file (long CSV or JSON)")
        p.add_argument("--format", choices=["csv", "json"], default=None, help="input format (default: by extension)")
        p.add_argument("--instrument", default=None, help="instrument+graph JSON (default: bundled)")
        p.add_argument("--policy", choices=["per-construct-item-mean", "drop-respondent"], default="per-construct-item-mean")

    p_fit = sub.add_parser("fit", help="fit the acceptance model by MCMC")
    add_data_flags(p_fit)
    p_fit.add_argument("--prior", default=None, help="prior JSON (default: weakly informative)")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--chains", type=int, default=4)
    p_fit.add_argument("--warmup", type=int, default=1000)
    p_fit.add_argument("--draws", type=int, default=1000)
    p_fit.add_argument("--measurement", choices=["mean", "latent"], default="mean")
    p_fit.add_argument("--out", required=True, help="posterior output path")
    p_fit.add_argument("--json", action="store_true")

    p_diag = sub.add_parser("diagnose", help="print R-hat / ESS for a posterior")
    p_diag.add_argument("--posterior", required=True)
    p_diag.add_argument("--json", action="store_true")

    for name, help_text in [
        ("simulate", "posterior-predictive summary under one scenario"),
        ("compare", "summaries for several scenarios"),
        ("rank", "rank scenarios by expected USE gain"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--posterior", required=True)
        add_data_flags(p)
        if name == "simulate":
            p.add_argument("--scenario", required=True, help="scenario JSON file")
        else:
            p.add_argument("--scenarios", nargs="+", required=True, help="scenario JSON files")
        p.add_argument("--draws", type=int, default=1, help="predictive draws per posterior draw")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", action="store_true")

    p_comp = sub.add_parser("compress", help="compress a posterior into a chained prior")
    p_comp.add_argument("--posterior", required=True)
    p_comp.add_argument("--out", required=True)

    p_rep = sub.add_parser("report", help="human-readable model summary")
    p_rep.add_argument("--posterior", required=True)
    add_data_flags(p_rep)
    p_rep.add_argument("--low-threshold", type=float, default=4.0, help="flag constructs with raw mean below this")
    p_rep.add_argument("--json", action="store_true")

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--port", type=int, default=8080)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--data-dir", default=None, help=f"artifact directory (default: ${DATA_DIR_ENV} or ./uptake-data)")
    return parser


def _read(path: str) -> str:
    p = Path(path)
    if not p.exists():
        raise DataFormatError(f"file not found: {path}")
    return p.read_text("utf-8")


def _load_model(args):
    if args.instrument:
        return model_from_json(_read(args.instrument))
    return default_graph(), default_instrument()


def _load_dataset(args):
    graph, inst = _load_model(args)
    fmt = args.format or ("json" if args.data.endswith(".json") else "csv")
    responses = parse_responses(_read(args.data), fmt, inst)
    measurement = getattr(args, "measurement", "mean")
    if measurement == "latent":
        from .measurement import latent_scores

        data = latent_scores(responses, inst, policy=args.policy, seed=getattr(args, "seed", 0))
    else:
        data = score_constructs(responses, inst, policy=args.policy)
    return graph, inst, data


def _load_posterior(path: str) -> PosteriorSamples:
    return posterior_from_json(_read(path))


def _emit(payload: dict, as_json: bool, human: str) -> None:
    if as_json:
        print(canonical_json(payload))
    else:
        print(human)


def cmd_fit(args) -> int:
    graph, _inst, data = _load_dataset(args)
    prior = prior_from_json(_read(args.prior)) if args.prior else None
    cfg = SamplerConfig(chains=args.chains, warmup_draws=args.warmup, kept_draws=args.draws, seed=args.seed)
    samples, diag = fit_posterior(data, prior, cfg, graph)
    payload = posterior_to_json(samples)
    Path(args.out).write_text(payload, "utf-8")
    converged = bool(samples.diagnostics_summary["converged"])
    summary = {
        "v": 1,
        "out": args.out,
        "parameters": len(samples.names),
        "respondents": data.n,
        "rhatMax": diag.max_rhat(),
        "essMin": diag.min_ess(),
        "converged": converged,
        "datasetHash": samples.dataset_hash,
    }
    human = (
        f"fit: {data.n} respondents, {len(samples.names)} parameters -> {args.out}\n"
        f"max R-hat {diag.max_rhat():.4f}, min ESS {diag.min_ess():.0f}, "
        f"{'converged' if converged else 'NOT CONVERGED'}"
    )
    _emit(summary, args.json, human)
    if not converged:
        print(
            f"warning: diagnostics thresholds violated (R-hat <= {RHAT_THRESHOLD}, ESS >= {ESS_THRESHOLD:.0f}); "
            "posterior written with converged=false",
            file=sys.stderr,
        )
        return 3
    return 0


def cmd_diagnose(args) -> int:
    samples = _load_posterior(args.posterior)
    diag = compute_diagnostics(samples)
    if args.json:
        print(canonical_json({"v": 1, "diagnostics": diag.to_summary(RHAT_THRESHOLD, ESS_THRESHOLD)}))
        return 0
    print(f"{'parameter':<22} {'rhat':>8} {'ess':>8}")
    for name in samples.names:
        r, e = diag.rhat[name], diag.ess[name]
        print(f"{name:<22} {r:>8.4f} {e:>8.0f}")
    print(f"acceptance rates: {[round(a, 3) for a in diag.acceptance]}")
    return 0


def _summary_payload(summaries) -> dict:
    return {k: v.to_dict() for k, v in sorted(summaries.items())}


def cmd_simulate(args) -> int:
    graph, _inst, data = _load_dataset(args)
    samples = _load_posterior(args.posterior)
    scenario = scenario_from_json(_read(args.scenario))
    result = simulate(samples, data, scenario, args.draws, args.seed, graph)
    human_lines = [
        f"{s.target}: mean {s.mean:.4f}, sd {s.sd:.4f}, 90% CI [{s.ci_low:.4f}, {s.ci_high:.4f}] ({s.draw_count} draws)"
        for s in result.values()
    ]
    _emit({"v": 1, "scenario": scenario.name, "targets": _summary_payload(result)}, args.json, "\n".join(human_lines))
    return 0


def cmd_compare(args) -> int:
    graph, _inst, data = _load_dataset(args)
    samples = _load_posterior(args.posterior)
    scenarios = [scenario_from_json(_read(p)) for p in args.scenarios]
    rows = compare_scenarios(samples, data, scenarios, args.draws, args.seed, graph)
    payload = {
        "v": 1,
        "rows": [
            {"scenario": s.name, "targets": _summary_payload(row)}
            for s, row in zip(scenarios, rows)
        ],
    }
    _emit(payload, args.json, comparison_table(rows))
    return 0


def cmd_rank(args) -> int:
    graph, _inst, data = _load_dataset(args)
    samples = _load_posterior(args.posterior)
    scenarios = [scenario_from_json(_read(p)) for p in args.scenarios]
    result = rank_scenarios(samples, data, scenarios, args.draws, args.seed, graph)
    lines = [f"baseline USE mean {result.baseline['USE'].mean:.4f}"]
    for i, e in enumerate(result.entries, start=1):
        lines.append(
            f"{i}. {e.name}: gain {e.expected_gain:+.4f} "
            f"[{e.gain_ci_low:+.4f}, {e.gain_ci_high:+.4f}], P(improve) {e.prob_improvement:.3f}"
        )
    _emit(result.to_dict(), args.json, "\n".join(lines))
    return 0


def cmd_compress(args) -> int:
    samples = _load_posterior(args.posterior)
    prior = compress_posterior(samples, source_id=args.posterior)
    Path(args.out).write_text(prior_to_json(prior), "utf-8")
    print(f"chained prior -> {args.out}")
    return 0


def cmd_report(args) -> int:
    graph, _inst, data = _load_dataset(args)
    samples = _load_posterior(args.posterior)
    if samples.dataset_hash and samples.dataset_hash != dataset_hash(data):
        raise HashMismatchError("posterior was fit against a different dataset")
    diag = compute_diagnostics(samples)
    pooled = samples.pooled()
    rows = []
    for i, name in enumerate(samples.names):
        col = pooled[:, i]
        lo, hi = np.quantile(col, [0.05, 0.95])
        rows.append(
            {
                "name": name,
                "mean": float(col.mean()),
                "sd": float(col.std(ddof=1)),
                "ci90": [float(lo), float(hi)],
                "rhat": None if np.isnan(diag.rhat[name]) else float(diag.rhat[name]),
                "ess": None if np.isnan(diag.ess[name]) else float(diag.ess[name]),
            }
        )
    means = {c: data.stats[c].mean for c in data.constructs}
    low = sorted(c for c, m in means.items() if m < args.low_threshold)
    payload = {
        "v": 1,
        "parameters": rows,
        "constructMeans": means,
        "lowScoring": low,
        "lowThreshold": args.low_threshold,
    }
    if args.json:
        print(canonical_json(payload))
        return 0
    print(f"{'parameter':<22} {'mean':>8} {'sd':>8} {'5%':>8} {'95%':>8} {'rhat':>7} {'ess':>6}")
    for r in rows:
        print(
            f"{r['name']:<22} {r['mean']:>8.4f} {r['sd']:>8.4f} {r['ci90'][0]:>8.4f} "
            f"{r['ci90'][1]:>8.4f} {r['rhat'] or float('nan'):>7.4f} {r['ess'] or float('nan'):>6.0f}"
        )
    print("\nconstruct raw-score means (Likert scale):")
    for c in data.constructs:
        flag = "  <- low" if c in low else ""
        print(f"  {c:<4} {means[c]:.3f}{flag}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    data_dir = args.data_dir or os.environ.get(DATA_DIR_ENV) or "./uptake-data"
    app = create_app(Path(data_dir))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "diagnose": cmd_diagnose,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "rank": cmd_rank,
    "compress": cmd_compress,
    "report": cmd_report,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("no command given (try --help)")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"diagnostics failure: {exc}", file=sys.stderr)
        return 3
    except (DataFormatError, HashMismatchError, PriorCoverageError, UptakeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
