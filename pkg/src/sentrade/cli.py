"""Command-line surface: aggregate, train, backtest, and synth subcommands.

Exit codes: 0 on success, 1 for usage or configuration problems, 2 for
data problems (unreadable or malformed inputs, spans too short to run).
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import IO, Sequence

from .adaptive import write_predictions_csv
from .backtest import (
    FitCache,
    evaluate,
    train_params,
    write_report_csv,
    write_training_csv,
)
from .config import Config, load_config, parse_params_file
from .errors import ConfigError, DataError
from .sessions import (
    MarketCalendar,
    build_sessions,
    compute_returns,
    parse_buckets,
    parse_ticks,
    read_sessions_csv,
    session_prices,
    write_sessions_csv,
)
from .synth import SyntheticScenario, generate

log = logging.getLogger(__name__)

MODELS_HEADER = ("window_end", "tfw", "variables", "class", "p_max", "predicted_next", "passed")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems as ConfigError (exit 1)."""

    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="sentrade", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    agg = sub.add_parser("aggregate", help="build the sessions CSV from raw inputs")
    agg.add_argument("--prices", required=True, help="tick CSV: timestamp,price")
    agg.add_argument("--sentiment", required=True, help="bucket CSV: bucket_start,positive,negative,neutral")
    agg.add_argument("--calendar", required=True, help="market calendar file (timezone/open/close/holidays)")
    agg.add_argument("--config", help="run configuration file")
    agg.add_argument("--out", default="", help="output path prefix")
    agg.set_defaults(func=cmd_aggregate)

    train = sub.add_parser("train", help="grid-search beta and gamma on the training prefix")
    train.add_argument("--sessions", required=True, help="sessions CSV from the aggregate step")
    train.add_argument("--config", help="run configuration file")
    train.add_argument("--threads", type=int, default=1)
    train.add_argument("--out", default="", help="output path prefix")
    train.add_argument("--params", help="where to write the chosen parameters")
    train.set_defaults(func=cmd_train)

    backtest = sub.add_parser("backtest", help="trade the prediction series on the evaluation span")
    backtest.add_argument("--sessions", required=True, help="sessions CSV from the aggregate step")
    backtest.add_argument("--config", help="run configuration file")
    backtest.add_argument("--params", help="parameters file written by train")
    backtest.add_argument("--threads", type=int, default=1)
    backtest.add_argument("--out", default="", help="output path prefix")
    backtest.add_argument("--dump-models", action="store_true", help="also write per-window model diagnostics")
    backtest.set_defaults(func=cmd_backtest)

    synth = sub.add_parser("synth", help="generate a synthetic sessions CSV")
    synth.add_argument("--kind", required=True, choices=("A", "B", "C"))
    synth.add_argument("--n", required=True, type=int, help="number of sessions")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--signal-strength", type=float, default=0.02)
    synth.add_argument("--noise-sigma", type=float, default=0.004)
    synth.add_argument("--ar2", type=float, default=0.0)
    synth.add_argument("--out", default="", help="output path prefix")
    synth.set_defaults(func=cmd_synth)

    return parser


def _load_config(path: str | None) -> Config:
    if path is None:
        return Config()
    try:
        return load_config(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None


def _load_series(path: str):
    with open(path, encoding="utf-8") as handle:
        return compute_returns(read_sessions_csv(handle))


def _open_out(path: str) -> IO[str]:
    return open(path, "w", encoding="utf-8", newline="")


def cmd_aggregate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    with open(args.calendar, encoding="utf-8") as handle:
        calendar = MarketCalendar.from_config(handle.read())
    with open(args.prices, encoding="utf-8", newline="") as handle:
        ticks = parse_ticks(handle)
    with open(args.sentiment, encoding="utf-8", newline="") as handle:
        buckets = parse_buckets(handle)
    daily = session_prices(ticks, calendar, config.offset_minutes)
    series = build_sessions(daily, buckets, calendar)
    out_path = f"{args.out}sessions.csv"
    with _open_out(out_path) as handle:
        write_sessions_csv(series, handle)
    print(f"wrote {len(series)} sessions to {out_path}", file=sys.stderr)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    series = _load_series(args.sessions)
    base = config.with_params(config.beta or 0.0, config.gamma or 0.0).pipeline_params()
    grid = [(config.beta, config.gamma)] if config.has_params else None
    result = train_params(
        series,
        base,
        grid=grid,
        train_fraction=config.train_fraction,
        threads=args.threads,
        cost_per_trade=config.cost_per_trade,
    )
    training_path = f"{args.out}training.csv"
    with _open_out(training_path) as handle:
        write_training_csv(result, handle)
    params_path = args.params or f"{args.out}params.txt"
    with _open_out(params_path) as handle:
        handle.write(f"beta = {result.beta!r}\n")
        handle.write(f"gamma = {result.gamma!r}\n")
    print(f"beta = {result.beta!r}")
    print(f"gamma = {result.gamma!r}")
    log.info(
        "trained on %d sessions: best train return %s at beta=%s gamma=%s",
        result.split_index,
        result.train_return,
        result.beta,
        result.gamma,
    )
    return 0


def _write_models_csv(cache: FitCache, start: int, end: int, windows: range, stream: IO[str]) -> None:
    stream.write(",".join(MODELS_HEADER) + "\n")
    for t in range(start, end):
        for w in windows:
            for model in cache(t, w):
                if model.fit is not None and model.fit.rank_ok:
                    p_max = repr(model.fit.max_p_value)
                else:
                    p_max = "na"
                predicted = "na" if model.predicted_next is None else repr(model.predicted_next)
                row = (
                    str(t),
                    str(w),
                    model.candidate.label,
                    model.candidate.model_class.value,
                    p_max,
                    predicted,
                    "true" if model.passed_filter else "false",
                )
                stream.write(",".join(row) + "\n")


def cmd_backtest(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.params:
        try:
            with open(args.params, encoding="utf-8") as handle:
                beta, gamma = parse_params_file(handle.read())
        except OSError as exc:
            raise ConfigError(f"cannot read params: {exc}") from None
        config = config.with_params(beta, gamma)
    if not config.has_params:
        raise ConfigError("beta and gamma are unset; pass --params or set them in the config")
    series = _load_series(args.sessions)
    params = config.pipeline_params()
    cache = FitCache(series, params.p_threshold, params.normalize_sentiment)
    result = evaluate(
        series,
        params,
        train_fraction=config.train_fraction,
        threads=args.threads,
        cost_per_trade=config.cost_per_trade,
        fit_fn=cache,
    )
    predictions_path = f"{args.out}predictions.csv"
    with _open_out(predictions_path) as handle:
        write_predictions_csv(result.records, handle)
    report_path = f"{args.out}report.csv"
    with _open_out(report_path) as handle:
        write_report_csv(result.ledger, handle)
    if args.dump_models:
        with _open_out(f"{args.out}models.csv") as handle:
            _write_models_csv(cache, result.start, result.start + len(result.records), params.windows, handle)
    ledger = result.ledger
    seconds = result.session_seconds
    log.info(
        "evaluated %d sessions in %.2fs (mean %.1f ms, max %.1f ms per session)",
        len(seconds),
        sum(seconds),
        1000.0 * sum(seconds) / len(seconds),
        1000.0 * max(seconds),
    )
    hit = "na" if ledger.hit_rate is None else f"{ledger.hit_rate:.3f}"
    print(
        f"strategy {ledger.final_strategy:+.4f} benchmark {ledger.final_benchmark:+.4f} "
        f"optimal {ledger.final_optimal:+.4f} trades {ledger.n_trades} hit_rate {hit}"
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    scenario = SyntheticScenario(
        kind=args.kind,
        n_sessions=args.n,
        signal_strength=args.signal_strength,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
        ar2=args.ar2,
    )
    series = generate(scenario)
    comment = (
        f"synth kind={scenario.kind} n={scenario.n_sessions} "
        f"signal_strength={scenario.signal_strength!r} noise_sigma={scenario.noise_sigma!r} "
        f"seed={scenario.seed} ar2={scenario.ar2!r}"
    )
    out_path = f"{args.out}sessions.csv"
    with _open_out(out_path) as handle:
        write_sessions_csv(series, handle, comments=[comment])
    print(f"wrote {len(series)} sessions to {out_path}", file=sys.stderr)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse --help
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
