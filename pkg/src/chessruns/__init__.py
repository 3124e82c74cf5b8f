"""Runs of same-coloured-square moves in chess games and their probabilities."""

from chessruns._backend import COMPILED
from chessruns.board import (
    ChessMove,
    FENError,
    IllegalMoveError,
    PieceKind,
    Position,
    Side,
    SquareColor,
    apply_move,
    dark_move_fraction,
    legal_moves,
    light_move_fraction,
    material_census,
    parse_fen,
    perft,
    starting_position,
    to_fen,
)
from chessruns.pgn import GameRecord, PGNGameError, game_plies, parse_pgn_stream, read_games, to_pgn
from chessruns.rundist import (
    RunDistribution,
    TrialSeries,
    bonferroni_adjust,
    exact_run_count_pmf,
    feller_longest_run_tail,
    holm_adjust,
    imbed_longest_run_tail,
    longest_run_pmf,
    longest_run_tail,
    poisson_run_approx,
)
from chessruns.runscan import RunReport, collection_scan, extract_indicators, game_run_report
from chessruns.search import SearchCriteria, SearchHit, scan_database

__version__ = "0.1.0"

__all__ = [
    "COMPILED", "ChessMove", "FENError", "GameRecord", "IllegalMoveError", "PGNGameError", "PieceKind",
    "Position", "RunDistribution", "RunReport", "SearchCriteria", "SearchHit", "Side", "SquareColor",
    "TrialSeries", "apply_move", "bonferroni_adjust", "collection_scan", "dark_move_fraction",
    "exact_run_count_pmf", "extract_indicators", "feller_longest_run_tail", "game_plies",
    "game_run_report", "holm_adjust", "imbed_longest_run_tail", "legal_moves", "light_move_fraction",
    "longest_run_pmf", "longest_run_tail", "material_census", "parse_fen", "parse_pgn_stream", "perft",
    "poisson_run_approx", "read_games", "scan_database", "starting_position", "to_fen", "to_pgn",
]
