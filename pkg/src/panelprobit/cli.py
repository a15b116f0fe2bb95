"""Command-line interface.

Exit codes: 0 on success, 1 for bad input (files, flags, configs), 2 when
the data leave an estimator undefined or a fit fails numerically.  Results
are JSON with a ``schema_version`` field and a ``provenance`` block holding
the input digest and the effective configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from importlib.metadata import PackageNotFoundError, version

from .conditional_glm import build_switcher_design, fit_conditional, identifiability_check
from .errors import NumericalError, PanelProbitError, SchemaError, UserInputError
from .heckman import MleSpec, fit_mle
from .panel import PanelData, parse_panel_csv
from .ratio import count_transitions, estimate_gamma_ratio
from .results import EstimateResult, dumps, sha256_digest
from .runs import RunsCounts, estimate_gamma_t3
from .simulation import SimulationScenario, run_rmse_experiment

COUNT_ORDER = "n000,n001,n010,n100,n110,n011,n101,n111"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _package_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise UserInputError(f"cannot read {path}: {exc.strerror}") from None


def _decode(data: bytes, path: str) -> str:
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError:
        raise SchemaError(f"{path} is not UTF-8 text") from None


def _load_panel(path: str) -> tuple[PanelData, str]:
    data = _read_bytes(path)
    return parse_panel_csv(io.StringIO(_decode(data, path), newline="")), sha256_digest(data)


def _parse_counts(text: str) -> RunsCounts:
    try:
        values = [int(v) for v in text.split(",")]
        return RunsCounts.from_sequence(values)
    except ValueError as exc:
        raise SchemaError(f"--counts expects 8 non-negative integers {COUNT_ORDER}: {exc}") from None


def _load_counts_csv(path: str) -> tuple[RunsCounts, str]:
    """Read a ``pattern,count`` table such as ``001,16``."""
    data = _read_bytes(path)
    rows = list(csv.reader(io.StringIO(_decode(data, path))))
    if not rows or [c.strip() for c in rows[0]] != ["pattern", "count"]:
        raise SchemaError(f"{path}: header must be 'pattern,count'")
    counts = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise SchemaError(f"{path} line {line}: expected 2 fields, got {len(row)}")
        pattern, count = (c.strip() for c in row)
        if len(pattern) != 3 or set(pattern) - {"0", "1"}:
            raise SchemaError(f"{path} line {line}: pattern {pattern!r} is not three binary digits")
        if pattern in counts:
            raise SchemaError(f"{path} line {line}: pattern {pattern} listed twice")
        try:
            counts[pattern] = int(count)
        except ValueError:
            raise SchemaError(f"{path} line {line}: count {count!r} is not an integer") from None
    try:
        return RunsCounts(**{f"n{p}": c for p, c in counts.items()}), sha256_digest(data)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def _provenance(command: str, digest: str, config: dict) -> dict:
    return {"command": command, "input_digest": digest, "config": config, "version": _package_version()}


def _counts_source(args) -> tuple[RunsCounts, str]:
    if args.counts is not None:
        counts = _parse_counts(args.counts)
        return counts, sha256_digest(args.counts.encode())
    return _load_counts_csv(args.input)


# -- subcommands --------------------------------------------------------------

def cmd_estimate_gamma(args) -> dict:
    panel, digest = _load_panel(args.input)
    counts = count_transitions(panel)
    est = estimate_gamma_ratio(counts)
    result = EstimateResult(
        method="ratio",
        estimates={"gamma": est.gamma_hat},
        se={"gamma": est.se},
        diagnostics={"counts": {"n00": counts.n00, "n01": counts.n01, "n10": counts.n10, "n11": counts.n11},
                     "ratio": est.w_hat, "kappa_n": est.kappa_n, "asymptotic_variance": est.sigma2},
        provenance=_provenance("estimate-gamma", digest, {"input": args.input}),
    )
    return result.to_dict()


def cmd_estimate_glm(args) -> dict:
    panel, digest = _load_panel(args.input)
    design = build_switcher_design(panel, dynamic=args.dynamic)
    report = identifiability_check(design)
    fit = fit_conditional(design, max_iter=args.max_iter)
    result = fit.to_result(design, report)
    result.provenance = _provenance("estimate-glm", digest,
                                    {"input": args.input, "dynamic": args.dynamic, "max_iter": args.max_iter})
    return result.to_dict()


def cmd_estimate_heckman(args) -> dict:
    if args.counts is not None:
        counts, digest = _counts_source(args)
        panel = PanelData.from_pattern_counts(counts.as_patterns())
    else:
        panel, digest = _load_panel(args.input)
    spec = MleSpec(horizon=panel.T, estimate_mean=args.estimate_mean, quadrature_nodes=args.nodes,
                   seed=args.seed)
    fit = fit_mle(panel, spec)
    result = fit.to_result(spec)
    result.provenance = _provenance("estimate-heckman", digest, {
        "input": args.input, "counts": args.counts, "estimate_mean": args.estimate_mean,
        "nodes": args.nodes, "seed": args.seed, "horizon": panel.T})
    return result.to_dict()


def cmd_analyze_runs(args) -> dict:
    counts, digest = _counts_source(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = estimate_gamma_t3(counts)
    result.diagnostics["warnings"] = [str(w.message) for w in caught]
    result.diagnostics["counts"] = dict(zip(COUNT_ORDER.split(","), counts.__dict__.values()))
    result.provenance = _provenance("analyze-runs", digest, {"input": args.input, "counts": args.counts})
    return result.to_dict()


def cmd_simulate(args) -> dict:
    data = _read_bytes(args.config)
    try:
        config = json.loads(_decode(data, args.config))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{args.config}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    scenario = SimulationScenario.from_dict(config)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    report = run_rmse_experiment(scenario, workers=args.workers)
    if args.csv:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(
            [["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row]
             for row in report.csv_rows()])
        _write_text(args.csv, buf.getvalue())
    payload = report.to_dict()
    payload["provenance"] = _provenance("simulate", sha256_digest(data),
                                        {"config": args.config, "effective_scenario": scenario.to_dict()})
    return payload


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UserInputError(f"cannot write {path}: {exc.strerror}") from None


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="panelprobit",
                     description="Estimators for dynamic and static panel probit models with large individual effects.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--output", metavar="PATH", help="write JSON here instead of stdout")
        return p

    p = add("estimate-gamma", cmd_estimate_gamma, "Closed-form ratio estimate of gamma from a two-wave panel.")
    p.add_argument("--input", metavar="PATH", required=True, help="long-format CSV with header id,t,d")

    p = add("estimate-glm", cmd_estimate_glm, "Conditional-likelihood GLM for a two-wave panel with covariates.")
    p.add_argument("--input", metavar="PATH", required=True, help="long-format CSV with header id,t,d,x1..xk")
    p.add_argument("--dynamic", action="store_true", help="also estimate gamma (dynamic model)")
    p.add_argument("--max-iter", type=_positive, default=100, help="IRLS iteration limit (default 100)")

    p = add("estimate-heckman", cmd_estimate_heckman, "Random-effects probit MLE with a normal prior for tau.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="PATH", help="long-format panel CSV (T=2 or 3)")
    src.add_argument("--counts", metavar="N000,...,N111", help=f"T=3 pattern counts in the order {COUNT_ORDER}")
    p.add_argument("--estimate-mean", action="store_true", help="estimate the prior mean instead of fixing it at 0")
    p.add_argument("--nodes", type=_positive, default=64, help="quadrature nodes (default 64)")
    p.add_argument("--seed", type=_u64, default=0, help="seed for the jittered simplex restarts (default 0)")

    p = add("analyze-runs", cmd_analyze_runs, "Conditional runs-pattern estimate of gamma for three-wave data.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--counts", metavar="N000,...,N111", help=f"pattern counts in the order {COUNT_ORDER}")
    src.add_argument("--input", metavar="PATH", help="CSV with header pattern,count (e.g. 001,16)")

    p = add("simulate", cmd_simulate, "Monte Carlo RMSE experiment from a JSON scenario.")
    p.add_argument("--config", metavar="PATH", required=True, help="scenario JSON; unknown keys are rejected")
    p.add_argument("--seed", type=_u64, help="override the scenario seed")
    p.add_argument("--csv", metavar="PATH", help="also write the RMSE rows as CSV")
    p.add_argument("--workers", type=_positive, default=1,
                   help="worker processes; results do not depend on this (default 1)")
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload = args.func(args)
        _write_text(args.output, dumps(payload))
    except UserInputError as exc:
        print(f"panelprobit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        sys.stdout.write(dumps({"schema_version": 1, **exc.to_dict()}))
        print(f"panelprobit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except PanelProbitError as exc:  # pragma: no cover - every error is in one of the two families
        print(f"panelprobit {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
