"""Command-line entry point.

Output is JSON lines by default. Every line is an object with
``schema_version``, ``command`` and ``record``; the last line of each command
is the ``summary`` record carrying ``inputs``, ``results`` and ``warnings``.
With ``--format csv`` the primary records are flattened (nested keys joined
with ``.``, lists as JSON) and the summary goes to stderr as JSON.

Exit codes: 0 success, 1 total failure, 2 usage or configuration error,
3 partial failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from chessruns.board import Side, SquareColor
from chessruns.engine import ENGINE_ENV, EngineConfig, EngineConfigError, qc_report, stub_config
from chessruns.pgn import parse_pgn_stream
from chessruns.rundist import (
    DegenerateParameterError,
    ExactBoundError,
    RunDistribution,
    TrialSeries,
    exact_run_count_pmf,
    feller_longest_run_cdf,
    feller_longest_run_tail,
    imbed_longest_run_tail,
    longest_run_pmf,
    longest_run_tail_exact,
    poisson_run_approx,
    smooth_pmf,
)
from chessruns.runscan import collection_scan, game_run_report
from chessruns.search import ScanStats, SearchCriteria, scan_database

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, tuples lists, keys strings."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, allow_nan=False)


def _flatten(obj, prefix="") -> dict:
    out = {}
    for key, val in obj.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(_flatten(val, name + "."))
        elif isinstance(val, (list, tuple)):
            out[name] = _dumps(val)
        else:
            out[name] = "" if val is None else val
    return out


class Emitter:
    def __init__(self, command: str, fmt: str, out, err):
        self.command = command
        self.fmt = fmt
        self.out = out
        self.err = err
        self.rows: list[dict] = []

    def record(self, kind: str, results) -> None:
        if self.fmt == "json":
            line = {"schema_version": SCHEMA_VERSION, "command": self.command, "record": kind, "results": results}
            self.out.write(_dumps(line) + "\n")
        else:
            self.rows.append(_flatten(_clean({"record": kind, **results})))

    def summary(self, inputs: dict, results: dict, warnings: list) -> None:
        line = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "record": "summary",
            "inputs": inputs,
            "results": results,
            "warnings": warnings,
        }
        if self.fmt == "json":
            self.out.write(_dumps(line) + "\n")
            return
        if self.rows:
            cols = sorted({c for r in self.rows for c in r})
            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for r in self.rows:
                w.writerow(r)
            self.out.write(buf.getvalue())
        self.err.write(_dumps(line) + "\n")


# -- prob ---------------------------------------------------------------------


def _read_series(path: str) -> TrialSeries:
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    values = [float(t) for t in text.replace(",", " ").split()]
    return TrialSeries(tuple(values))


def cmd_prob(args, em: Emitter) -> int:
    m = args.method
    if args.p_series and m != "imbed":
        raise UsageError("--p-series is only supported by the imbed method")
    if args.x is not None and m in ("feller", "imbed"):
        raise UsageError(f"--x is not supported by the {m} method")
    if args.pmf and m not in ("exact", "imbed"):
        raise UsageError("--pmf is available for exact and imbed")
    if args.x is not None and (args.tail or args.pmf):
        raise UsageError("--x cannot be combined with --tail or --pmf")
    if args.bandwidth is not None and not args.pmf:
        raise UsageError("--bandwidth needs --pmf")
    if args.k is None and not args.pmf:
        raise UsageError("--k is required")

    if args.p_series:
        series = _read_series(args.p_series)
        n = len(series)
        if args.n is not None and args.n != n:
            raise UsageError(f"--n {args.n} disagrees with {n} probabilities in --p-series")
        inputs = {"method": m, "n": n, "k": args.k, "p_series": args.p_series}
    else:
        if args.n is None or args.p is None:
            raise UsageError("--n and --p are required unless --p-series is given")
        n = args.n
        series = None
        inputs = {"method": m, "n": n, "k": args.k, "p": float(args.p)}
    if args.x is not None:
        inputs["x"] = args.x
    # exact decimal value for the integer-arithmetic route, float elsewhere
    p_exact = args.p
    p = float(args.p) if args.p is not None else None

    results: dict = {"method": m}
    if args.pmf:
        ser = series if series is not None else TrialSeries.constant(n, p)
        if m == "exact":
            tails = [1.0] + [longest_run_tail_exact(n, k, p_exact) for k in range(1, n + 1)] + [0.0]
            pmf = [max(0.0, tails[k] - tails[k + 1]) for k in range(n + 1)]
            dist = RunDistribution(n, tuple(pmf))
        else:
            dist = longest_run_pmf(ser)
        results.update(pmf=list(dist.pmf), mean=dist.mean(), mode=dist.mode())
        if args.k is not None:
            results.update(quantity="P(L_n >= k)", value=dist.tail(args.k))
        if args.bandwidth is not None:
            results["density"] = [list(pt) for pt in smooth_pmf(dist, args.bandwidth, args.step)]
            inputs.update(bandwidth=args.bandwidth, step=args.step)
        em.record("distribution", results)
        em.summary(inputs, {"records": 1}, [])
        return EXIT_OK

    k = args.k
    if m == "exact":
        if args.tail:
            results.update(quantity="P(L_n >= k)", value=longest_run_tail_exact(n, k, p_exact))
        else:
            x = args.x or 0
            results.update(quantity="P(N_{n,k} = x)", x=x, value=exact_run_count_pmf(n, k, x, p_exact))
    elif m == "feller":
        if args.tail:
            results.update(quantity="P(L_n >= k)", value=feller_longest_run_tail(n, k, p))
        else:
            results.update(quantity="P(L_n < k)", value=feller_longest_run_cdf(n, k, p))
    elif m == "imbed":
        ser = series if series is not None else TrialSeries.constant(n, p)
        tail = imbed_longest_run_tail(ser, k)
        if args.tail:
            results.update(quantity="P(L_n >= k)", value=tail)
        else:
            results.update(quantity="P(L_n < k)", value=1.0 - tail)
    else:
        if args.tail:
            results.update(quantity="P(L_n >= k)", value=1.0 - poisson_run_approx(n, k, p, 0))
        else:
            x = args.x or 0
            results.update(quantity="P(N_{n,k} = x)", x=x, value=poisson_run_approx(n, k, p, x))
    em.record("probability", results)
    em.summary(inputs, {"records": 1}, [])
    return EXIT_OK


# -- runs ---------------------------------------------------------------------

_SIDES = {"white": (Side.WHITE,), "black": (Side.BLACK,), "both": (Side.WHITE, Side.BLACK)}
_COLORS = {"light": (SquareColor.LIGHT,), "dark": (SquareColor.DARK,), "both": (SquareColor.LIGHT, SquareColor.DARK)}


def _error_text(exc) -> str:
    where = f" at ply {exc.ply}" if getattr(exc, "ply", None) else ""
    return f"game {exc.index + 1}{where}: {exc.message}"


def _open_pgn(path: str):

    if path == "-":
        return parse_pgn_stream(sys.stdin.buffer)
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"cannot read PGN file {path}")
    return parse_pgn_stream(p)


def cmd_runs(args, em: Emitter) -> int:

    if args.query_k is not None and args.query_k < 1:
        raise UsageError("--query-k must be >= 1")
    games = list(_open_pgn(args.pgn))
    res = collection_scan(
        games, _SIDES[args.side], _COLORS[args.color], adjust=args.adjust,
        concatenate=args.concatenate, query_k=args.query_k, jobs=args.jobs,
    )
    for rep in res.reports:
        em.record("report", rep.to_dict())
    for rep in res.concatenated:
        em.record("concatenated", rep.to_dict())
    warnings = [_error_text(e) for e in sorted(res.errors, key=lambda e: e.index)]
    inputs = {"pgn": args.pgn, "side": args.side, "color": args.color, "adjust": args.adjust,
              "concatenate": args.concatenate, "query_k": args.query_k}
    em.summary(inputs, res.summary, warnings)
    if res.errors and not res.summary["games"]:
        return EXIT_FAILURE
    return EXIT_PARTIAL if res.errors else EXIT_OK


# -- search -------------------------------------------------------------------


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict) or set(data) - {"criteria", "engine"}:
        raise UsageError("config must be an object with optional 'criteria' and 'engine' sections")
    return data


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, _, hi = text.partition(":")
        return int(lo), int(hi if hi else lo)
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected MIN:MAX") from None


def _criteria(args):

    data = dict(_load_config(args.config).get("criteria", {}))
    if args.opposite_bishops:
        data["require_opposite_bishops"] = True
    if args.no_knights_majors:
        data["forbid_knights_and_majors"] = True
    if args.pawns is not None:
        data["pawn_range"] = _parse_range(args.pawns)
    if args.pawn_mode is not None:
        data["pawn_mode"] = args.pawn_mode
    if args.min_avg_elo is not None:
        data["min_avg_elo"] = args.min_avg_elo
    if args.min_fullmoves is not None:
        data["min_fullmoves"] = args.min_fullmoves
    try:
        return SearchCriteria.from_mapping(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid search criteria: {exc}") from None


def cmd_search(args, em: Emitter) -> int:

    criteria = _criteria(args)
    stats = ScanStats()
    source = _open_pgn(args.pgn)
    errors = []

    def tracked():
        for item in source:
            if not hasattr(item, "san_moves"):
                errors.append(item)
            yield item

    for item in scan_database(tracked(), criteria, with_run_reports=args.with_runs, stats=stats, jobs=args.jobs):
        if args.with_runs:
            hit, reports = item
            em.record("hit", {**hit.to_dict(), "runs": [r.to_dict() for r in reports]})
        else:
            em.record("hit", item.to_dict())
    inputs = {"pgn": args.pgn, "criteria": criteria.to_mapping(), "with_runs": args.with_runs}
    summary = {"games": stats.games, "hits": stats.hits, "parse_errors": stats.parse_errors,
               "excluded_missing_tags": stats.excluded_missing_tags}
    warnings = [_error_text(e) for e in errors]
    em.summary(inputs, summary, warnings)
    if stats.parse_errors and stats.parse_errors == stats.games + len(errors):
        return EXIT_FAILURE
    return EXIT_PARTIAL if stats.parse_errors else EXIT_OK


# -- quality ------------------------------------------------------------------


def _engine_config(args, config: dict):

    eng = dict(config.get("engine", {}))
    depth = args.depth if args.depth is not None else eng.get("depth")
    multipv = args.multipv if args.multipv is not None else eng.get("multipv", 5)
    if args.stub_engine:
        if not Path(args.stub_engine).is_file():
            raise UsageError(f"stub engine script not found: {args.stub_engine}")
        return stub_config(args.stub_engine, depth or 1, multipv)
    path = args.engine or eng.get("path") or os.environ.get(ENGINE_ENV)
    if not path:
        raise UsageError(
            f"no engine configured: pass --engine PATH, set {ENGINE_ENV}, add engine.path to --config, "
            "or use --stub-engine SCRIPT"
        )
    if depth is None:
        raise UsageError("--depth is required with a real engine (no default search depth)")
    try:
        return EngineConfig(path, int(depth), int(multipv), {str(k): str(v) for k, v in eng.get("options", {}).items()})
    except EngineConfigError as exc:
        raise UsageError(str(exc)) from None


def _select_game(args):
    games = list(_open_pgn(args.pgn))
    records = [g for g in games if hasattr(g, "san_moves")]
    if args.game_id is not None:
        for g in records:
            if g.game_id == args.game_id:
                return g
        raise UsageError(f"no game with id {args.game_id!r}")
    idx = args.game
    if not 1 <= idx <= len(games):
        raise UsageError(f"--game {idx} out of range (file has {len(games)} games)")
    g = games[idx - 1]
    if not hasattr(g, "san_moves"):
        raise RuntimeError(_error_text(g))
    return g


def cmd_quality(args, em: Emitter) -> int:

    config = _load_config(args.config)
    cfg = _engine_config(args, config)
    game = _select_game(args)
    side = Side.parse(args.side)
    if args.run_span:
        span = _parse_range(args.run_span)
    else:
        rep = game_run_report(game, side, SquareColor.parse(args.color))
        if not rep.longest:
            raise UsageError("game has no run for the chosen side and colour; pass --run-span")
        span = tuple(rep.run_span)
    jk = [tuple(int(v) for v in t.split(",")) for t in (args.jk or ["2,1"])]
    try:
        report = qc_report(game, span, cfg, side=side, models=args.model or ["log"], jk=jk,
                           window=args.window, equal_var=args.pooled)
    except EngineConfigError as exc:
        raise UsageError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = report.to_dict()
    if em.fmt == "csv":
        for q in data["qualities"]:
            em.record("move", q)
    else:
        em.record("qc", data)
    inputs = {"pgn": args.pgn, "game_id": game.game_id, "run_span": list(span), "side": args.side,
              "window": args.window, "depth": cfg.depth, "multipv": cfg.multipv,
              "models": args.model or ["log"], "jk": [list(p) for p in jk], "pooled": args.pooled,
              "engine": "stub" if args.stub_engine else "uci"}
    summary = {"n_run": report.n_run, "n_nonrun": report.n_nonrun, "partial": report.partial,
               "t_test": report.t_test, "logistic": [
                   {k: v for k, v in fit.items() if k in ("model", "j", "k", "status", "beta", "beta_se", "beta_p")}
                   for fit in report.logistic]}
    warnings = [report.error] if report.error else []
    em.summary(inputs, summary, warnings)
    if report.partial:
        return EXIT_FAILURE if not report.qualities else EXIT_PARTIAL
    return EXIT_OK


# -- parser -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _p_arg(text: str) -> Fraction:
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a probability: {text!r}") from None
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"p must lie in [0, 1], got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (output is identical for any value)")

    parser = _Parser(prog="chessruns", description="Colour-square move runs in chess games.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pr = sub.add_parser("prob", parents=[common], help="run-length probabilities")
    pr.add_argument("method", choices=("exact", "feller", "imbed", "poisson"))
    pr.add_argument("--n", type=int)
    pr.add_argument("--k", type=int)
    pr.add_argument("--p", type=_p_arg)
    pr.add_argument("--p-series", metavar="FILE", help="per-trial probabilities, whitespace or comma separated ('-' for stdin)")
    pr.add_argument("--x", type=int, help="number of non-overlapping k-runs (exact, poisson)")
    pr.add_argument("--tail", action="store_true", help="report P(L_n >= k)")
    pr.add_argument("--pmf", action="store_true", help="emit the full longest-run distribution")
    pr.add_argument("--bandwidth", type=float, help="add a Gaussian-smoothed density (with --pmf)")
    pr.add_argument("--step", type=float, default=0.1, help="density grid step")
    pr.set_defaults(func=cmd_prob)

    ru = sub.add_parser("runs", parents=[common], help="scan games for colour runs")
    ru.add_argument("pgn")
    ru.add_argument("--side", choices=tuple(_SIDES), default="both")
    ru.add_argument("--color", choices=tuple(_COLORS), default="both")
    ru.add_argument("--adjust", choices=("bonferroni", "holm", "none"), default="bonferroni")
    ru.add_argument("--concatenate", choices=("off", "per-side", "all-moves"), default="off")
    ru.add_argument("--query-k", type=int, help="also report P(L >= k) for concatenated series")
    ru.set_defaults(func=cmd_runs)

    se = sub.add_parser("search", parents=[common], help="search a corpus by material and tags")
    se.add_argument("pgn")
    se.add_argument("--min-avg-elo", type=int)
    se.add_argument("--min-fullmoves", type=int)
    se.add_argument("--pawns", metavar="MIN:MAX")
    se.add_argument("--pawn-mode", choices=("total", "per-side"))
    se.add_argument("--opposite-bishops", action="store_true")
    se.add_argument("--no-knights-majors", action="store_true")
    se.add_argument("--config", help="JSON file with 'criteria' (and 'engine') sections")
    se.add_argument("--with-runs", action="store_true", help="attach run reports to each hit")
    se.set_defaults(func=cmd_search)

    qu = sub.add_parser("quality", parents=[common], help="engine move-quality audit of a run")
    qu.add_argument("pgn")
    qu.add_argument("--game", type=int, default=1, help="1-based game number in the file")
    qu.add_argument("--game-id")
    qu.add_argument("--side", choices=("white", "black"), default="white")
    qu.add_argument("--color", choices=("light", "dark"), default="light",
                    help="colour used to locate the run when --run-span is absent")
    qu.add_argument("--run-span", metavar="FIRST:LAST", help="run as inclusive fullmove numbers")
    qu.add_argument("--window", type=int, help="compare only with this many moves either side of the run")
    qu.add_argument("--engine", help="UCI engine executable")
    qu.add_argument("--stub-engine", metavar="SCRIPT", help="use the scripted stub engine")
    qu.add_argument("--depth", type=int)
    qu.add_argument("--multipv", type=int)
    qu.add_argument("--model", action="append", choices=("log", "linear", "log-possibles", "log-complexity"))
    qu.add_argument("--jk", action="append", metavar="J,K", help="complexity ratio ranks, e.g. 2,1")
    qu.add_argument("--pooled", action="store_true", help="pooled-variance t-test instead of Welch")
    qu.add_argument("--config", help="JSON file with an 'engine' section")
    qu.set_defaults(func=cmd_quality)
    return parser


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    em = Emitter(args.command, args.format, stdout, stderr)
    try:
        return args.func(args, em)
    except UsageError as exc:
        stderr.write(f"chessruns {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except (ExactBoundError, DegenerateParameterError, ValueError) as exc:
        stderr.write(f"chessruns {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except (OSError, RuntimeError) as exc:
        stderr.write(f"chessruns {args.command}: failed: {exc}\n")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
