"""Corpus search by material signature and game-level tags.

A game is selected when its tag predicates hold and every board predicate
holds together at some position of the main line. Positions are numbered like
plies: position i is the one before ply i, and ``len(moves) + 1`` is the
final position.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from itertools import islice
from typing import Iterable, Iterator, Mapping

from chessruns.board import PieceKind, Position, Side, SquareColor, apply_move, is_light
from chessruns.pgn import GameRecord, PGNGameError, Source, game_plies, parse_pgn_stream
from chessruns.runscan import game_run_report

PAWN_MODES = ("total", "per-side")

_W = {k: int(k) for k in PieceKind}
_B = {k: 8 | int(k) for k in PieceKind}


@dataclass(frozen=True)
class SearchCriteria:
    require_opposite_bishops: bool = False
    forbid_knights_and_majors: bool = False
    pawn_range: tuple | None = None
    pawn_mode: str = "total"
    min_avg_elo: int | None = None
    min_fullmoves: int | None = None

    def __post_init__(self):
        if self.pawn_range is not None:
            lo, hi = self.pawn_range
            if lo < 0 or hi < 0:
                raise ValueError("pawn range must be nonnegative")
            if lo > hi:
                raise ValueError(f"pawn range min {lo} exceeds max {hi}")
            object.__setattr__(self, "pawn_range", (int(lo), int(hi)))
        if self.pawn_mode not in PAWN_MODES:
            raise ValueError(f"pawn_mode must be one of {PAWN_MODES}")
        for name in ("min_avg_elo", "min_fullmoves"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")

    @classmethod
    def opposite_bishop_endings(cls) -> "SearchCriteria":
        """The five-part search: opposite bishops, no knights or majors,
        three to four pawns, average Elo >= 2500, at least 80 moves."""
        return cls(True, True, (3, 4), "total", 2500, 80)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "SearchCriteria":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown criteria keys: {sorted(unknown)}")
        kwargs = dict(data)
        if kwargs.get("pawn_range") is not None:
            kwargs["pawn_range"] = tuple(kwargs["pawn_range"])
        return cls(**kwargs)

    def to_mapping(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        if d["pawn_range"] is not None:
            d["pawn_range"] = list(d["pawn_range"])
        return d


@dataclass(frozen=True)
class SearchHit:
    game_id: str
    first_matching_ply: int
    tag_snapshot: dict
    fen: str = ""

    def to_dict(self) -> dict:
        return {"game_id": self.game_id, "first_matching_ply": self.first_matching_ply,
                "tag_snapshot": dict(self.tag_snapshot), "fen": self.fen}


@dataclass
class ScanStats:
    games: int = 0
    hits: int = 0
    parse_errors: int = 0
    excluded_missing_tags: int = 0


def _board_matches(board: bytes, c: SearchCriteria) -> bool:
    if c.forbid_knights_and_majors:
        for kind in (PieceKind.KNIGHT, PieceKind.ROOK, PieceKind.QUEEN):
            if board.count(_W[kind]) or board.count(_B[kind]):
                return False
    if c.require_opposite_bishops:
        wb = [i for i, v in enumerate(board) if v == _W[PieceKind.BISHOP]]
        bb = [i for i, v in enumerate(board) if v == _B[PieceKind.BISHOP]]
        if len(wb) != 1 or len(bb) != 1 or is_light(wb[0]) == is_light(bb[0]):
            return False
    if c.pawn_range is not None:
        lo, hi = c.pawn_range
        wp, bp = board.count(_W[PieceKind.PAWN]), board.count(_B[PieceKind.PAWN])
        if c.pawn_mode == "total":
            if not lo <= wp + bp <= hi:
                return False
        elif not (lo <= wp <= hi and lo <= bp <= hi):
            return False
    return True


def position_matches(pos: Position, c: SearchCriteria) -> bool:
    """Board part of the criteria; depends on placement only."""
    return _board_matches(pos.board, c)


def game_fullmoves(game: GameRecord) -> int:
    """Fullmove number of the last move played (0 for an empty game)."""
    plies = len(game.san_moves)
    if not plies:
        return 0
    start = game.initial_position()
    offset = 1 if start.side_to_move is Side.BLACK else 0
    return start.fullmove_number + (plies + offset - 1) // 2


def _avg_elo(tags: Mapping) -> int | None:
    try:
        w, b = int(tags["WhiteElo"]), int(tags["BlackElo"])
    except (KeyError, ValueError):
        return None
    if w <= 0 or b <= 0:
        return None
    return (w + b) // 2


def _snapshot(tags: Mapping) -> dict:
    return {k: tags.get(k, "?") for k in ("White", "Black", "WhiteElo", "BlackElo", "Date")}


def game_matches(game: GameRecord, c: SearchCriteria, stats: ScanStats | None = None) -> SearchHit | None:
    if c.min_avg_elo is not None:
        avg = _avg_elo(game.tags)
        if avg is None:
            if stats is not None:
                stats.excluded_missing_tags += 1
            return None
        if avg < c.min_avg_elo:
            return None
    if c.min_fullmoves is not None and game_fullmoves(game) < c.min_fullmoves:
        return None
    last = None
    for ev in game_plies(game):
        if _board_matches(ev.position_before.board, c):
            return SearchHit(game.game_id, ev.ply_index, _snapshot(game.tags), ev.position_before.fen())
        last = ev
    if last is None:
        final, index = game.initial_position(), 1
    else:
        final, index = apply_move(last.position_before, last.move), last.ply_index + 1
    if _board_matches(final.board, c):
        return SearchHit(game.game_id, index, _snapshot(game.tags), final.fen())
    return None


def _match_one(item, criteria):
    # worker entry point: (hit | None, excluded_for_missing_tags, parse_error)
    local = ScanStats()
    try:
        hit = game_matches(item, criteria, local)
    except PGNGameError:
        return None, 0, True
    return hit, local.excluded_missing_tags, False


def _batches(items, size):
    it = iter(items)
    while batch := list(islice(it, size)):
        yield batch


def scan_database(
    source: Source | Iterable[GameRecord | PGNGameError],
    criteria: SearchCriteria,
    with_run_reports: bool = False,
    stats: ScanStats | None = None,
    jobs: int = 1,
    batch_size: int = 256,
) -> Iterator:
    """Yield hits in corpus order.

    With ``with_run_reports`` each item is ``(hit, reports)`` where reports
    covers both sides and both colours. ``jobs > 1`` evaluates batches of
    games in worker processes; output order is unchanged.
    """
    stats = stats if stats is not None else ScanStats()
    games = source if _is_game_iterable(source) else parse_pgn_stream(source)
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for batch in _batches(games, batch_size):
            records = [g for g in batch if not isinstance(g, PGNGameError)]
            stats.parse_errors += len(batch) - len(records)
            if pool is not None:
                results = pool.map(_match_one, records, [criteria] * len(records))
            else:
                results = (_match_one(g, criteria) for g in records)
            for game, (hit, excluded, failed) in zip(records, results):
                stats.games += 1
                stats.excluded_missing_tags += excluded
                if failed:
                    stats.parse_errors += 1
                    continue
                if hit is None:
                    continue
                stats.hits += 1
                if with_run_reports:
                    reports = [game_run_report(game, s, col) for s in Side for col in SquareColor]
                    yield hit, reports
                else:
                    yield hit
    finally:
        if pool is not None:
            pool.shutdown()


def _is_game_iterable(source) -> bool:
    return not isinstance(source, (str, bytes)) and not hasattr(source, "read") and not hasattr(source, "__fspath__")
