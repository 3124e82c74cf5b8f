"""Colour-square move runs in games, with p-values under two models.

For a side and a target colour, trial i is that side's i-th move and succeeds
when the move lands on a square of the target colour. The uniform model uses
p = 0.5 for every trial; the proxy model uses the share of legal moves in the
position that go to the target colour.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from chessruns.board import Side, SquareColor, is_light, light_move_fraction
from chessruns.pgn import GameRecord, PGNGameError, game_plies
from chessruns.rundist import (
    TrialSeries,
    bonferroni_adjust,
    holm_adjust,
    imbed_longest_run_tail,
    longest_run_tail,
)

ADJUST_METHODS = ("bonferroni", "holm", "none")
CONCATENATE_MODES = ("off", "per-side", "all-moves")


@dataclass(frozen=True)
class IndicatorSeries:
    side: Side | None
    target_color: SquareColor
    x: tuple
    p: TrialSeries
    source_plies: tuple
    move_numbers: tuple = ()
    # index into ``x`` where each source game starts (concatenated series)
    boundaries: tuple = (0,)

    def __post_init__(self):
        if not len(self.x) == len(self.p) == len(self.source_plies):
            raise ValueError("x, p and source_plies must have equal length")

    def __len__(self) -> int:
        return len(self.x)


@dataclass
class RunReport:
    game_id: str
    side: str
    target_color: str
    n: int
    longest: int
    run_span: tuple | None
    p_uniform: float
    p_proxy: float
    adjusted: dict = field(default_factory=dict)
    series_span: tuple | None = None
    straddles_games: bool | None = None
    query: dict | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["run_span"] = list(self.run_span) if self.run_span else None
        d["series_span"] = list(self.series_span) if self.series_span else None
        return d


@dataclass(frozen=True)
class _Ply:
    mover: Side
    ply: int
    move_number: int
    light: bool
    light_fraction: float


def _plies(game: GameRecord) -> list[_Ply]:
    return [
        _Ply(ev.mover, ev.ply_index, ev.move_number, is_light(ev.move.to_sq),
             light_move_fraction(ev.position_before))
        for ev in game_plies(game)
    ]


def _series_from(plies: Sequence[_Ply], side: Side | None, color: SquareColor) -> IndicatorSeries:
    chosen = [pl for pl in plies if side is None or pl.mover is side]
    want_light = color is SquareColor.LIGHT
    return IndicatorSeries(
        side=side,
        target_color=color,
        x=tuple(1 if pl.light == want_light else 0 for pl in chosen),
        p=TrialSeries(tuple(pl.light_fraction if want_light else 1.0 - pl.light_fraction for pl in chosen)),
        source_plies=tuple(pl.ply for pl in chosen),
        move_numbers=tuple(pl.move_number for pl in chosen),
    )


def extract_indicators(game: GameRecord, side: Side, target_color: SquareColor) -> IndicatorSeries:
    return _series_from(_plies(game), side, target_color)


def find_longest_run(x: Sequence[int]) -> tuple[int, int | None, int | None]:
    """(length, start, end) of the earliest longest run of 1s, one-based."""
    best, best_start = 0, None
    run, start = 0, 0
    for i, bit in enumerate(x, start=1):
        if bit:
            if run == 0:
                start = i
            run += 1
            if run > best:
                best, best_start = run, start
        else:
            run = 0
    if best == 0:
        return 0, None, None
    return best, best_start, best_start + best - 1


def nonoverlap_count(x: Sequence[int], k: int) -> int:
    """Greedy count of non-overlapping runs of k ones."""
    if k < 1:
        raise ValueError("k must be >= 1")
    total = run = 0
    for bit in x:
        if bit:
            run += 1
        else:
            total += run // k
            run = 0
    return total + run // k


def series_report(series: IndicatorSeries, game_id: str) -> RunReport:
    n = len(series)
    longest, start, end = find_longest_run(series.x)
    if longest == 0:
        p_uniform = p_proxy = 1.0
        span = series_span = None
    else:
        p_uniform = longest_run_tail(n, longest, 0.5)
        p_proxy = imbed_longest_run_tail(series.p, longest)
        series_span = (start, end)
        if series.move_numbers:
            span = (series.move_numbers[start - 1], series.move_numbers[end - 1])
        else:
            span = series_span
    straddles = None
    if len(series.boundaries) > 1 and longest:
        straddles = any(start - 1 < b <= end - 1 for b in series.boundaries[1:])
    return RunReport(
        game_id=game_id,
        side=series.side.name.lower() if series.side is not None else "both",
        target_color=series.target_color.value,
        n=n,
        longest=longest,
        run_span=span,
        p_uniform=p_uniform,
        p_proxy=p_proxy,
        series_span=series_span,
        straddles_games=straddles,
    )


def game_run_report(game: GameRecord, side: Side, target_color: SquareColor) -> RunReport:
    return series_report(extract_indicators(game, side, target_color), game.game_id)


def _game_reports(game, sides, colors):
    try:
        plies = _plies(game)
    except PGNGameError as exc:
        return None, exc
    return plies, [series_report(_series_from(plies, s, c), game.game_id) for s in sides for c in colors]


def _concatenate(chunks: list[IndicatorSeries], side, color) -> IndicatorSeries:
    x, p, src = [], [], []
    bounds = []
    for ch in chunks:
        bounds.append(len(x))
        x.extend(ch.x)
        p.extend(ch.p.probs)
        src.extend(ch.source_plies)
    return IndicatorSeries(side, color, tuple(x), TrialSeries(tuple(p)), tuple(src), (), tuple(bounds) or (0,))


@dataclass
class ScanResult:
    reports: list
    concatenated: list
    summary: dict
    errors: list


def _adjust(reports: list[RunReport], method: str) -> None:
    if method == "none" or not reports:
        return
    m = len(reports)
    for model in ("p_uniform", "p_proxy"):
        values = [getattr(r, model) for r in reports]
        if method == "bonferroni":
            adj = [bonferroni_adjust(v, m) for v in values]
        else:
            adj = holm_adjust(values)
        for r, v in zip(reports, adj):
            r.adjusted[f"{method}_{model[2:]}"] = v


def collection_scan(
    games: Iterable[GameRecord | PGNGameError],
    sides: Sequence[Side] = (Side.WHITE, Side.BLACK),
    colors: Sequence[SquareColor] = (SquareColor.LIGHT, SquareColor.DARK),
    adjust: str = "bonferroni",
    concatenate: str = "off",
    query_k: int | None = None,
    jobs: int = 1,
) -> ScanResult:
    """Per-game run reports across a corpus, with multiplicity adjustment.

    The multiplicity m is the number of series scanned (games x sides x
    colours). Concatenated modes additionally analyse one long series per
    (side, colour) or per colour; runs there may straddle game boundaries and
    each such report says whether its longest run does.
    """
    if adjust not in ADJUST_METHODS:
        raise ValueError(f"adjust must be one of {ADJUST_METHODS}")
    if concatenate not in CONCATENATE_MODES:
        raise ValueError(f"concatenate must be one of {CONCATENATE_MODES}")
    records, errors = [], []
    for item in games:
        (errors if isinstance(item, PGNGameError) else records).append(item)

    if jobs > 1 and len(records) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_game_reports, records, [sides] * len(records),
                                    [colors] * len(records), chunksize=8))
    else:
        results = [_game_reports(g, sides, colors) for g in records]

    reports: list[RunReport] = []
    per_game_plies = []
    for plies, reps in results:
        if plies is None:
            errors.append(reps)
            continue
        per_game_plies.append(plies)
        reports.extend(reps)
    _adjust(reports, adjust)

    concatenated: list[RunReport] = []
    if concatenate != "off" and per_game_plies:
        targets = [(s, c) for s in sides for c in colors] if concatenate == "per-side" else [(None, c) for c in colors]
        for side, color in targets:
            series = _concatenate([_series_from(pl, side, color) for pl in per_game_plies], side, color)
            rep = series_report(series, f"concatenated:{concatenate}")
            if query_k is not None:
                rep.query = {
                    "k": query_k,
                    "p_uniform": longest_run_tail(len(series), query_k, 0.5),
                    "p_proxy": imbed_longest_run_tail(series.p, query_k) if query_k >= 1 else 1.0,
                }
            concatenated.append(rep)

    summary = {
        "games": len(per_game_plies),
        "errors": len(errors),
        "series": len(reports),
        "adjust": adjust,
        "concatenate": concatenate,
        "straddling_allowed": concatenate != "off",
    }
    if reports:
        summary["min_p_uniform"] = min(r.p_uniform for r in reports)
        summary["min_p_proxy"] = min(r.p_proxy for r in reports)
        if adjust != "none":
            for key in (f"{adjust}_uniform", f"{adjust}_proxy"):
                summary[f"min_{key}"] = min(r.adjusted[key] for r in reports)
    return ScanResult(reports, concatenated, summary, errors)

