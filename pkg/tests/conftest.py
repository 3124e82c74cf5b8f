import random
from pathlib import Path

import pytest

from chessruns import _imbed_py, _movegen_py
from chessruns.board import apply_move, starting_position
from chessruns.pgn import GameRecord, move_to_san, parse_pgn_stream, to_pgn

DATA = Path(__file__).parent / "data"

try:
    from chessruns import _imbed, _movegen
except ImportError:  # extension not built
    _imbed = _movegen = None

MOVEGEN_BACKENDS = [pytest.param(_movegen_py, id="pure")]
IMBED_BACKENDS = [pytest.param(_imbed_py, id="pure")]
if _movegen is not None:
    MOVEGEN_BACKENDS.append(pytest.param(_movegen, id="compiled"))
    IMBED_BACKENDS.append(pytest.param(_imbed, id="compiled"))


@pytest.fixture(params=MOVEGEN_BACKENDS)
def movegen(request):
    return request.param


@pytest.fixture(params=IMBED_BACKENDS)
def imbed(request):
    return request.param


def playout(seed: int, plies: int):
    """Seeded random legal game; stops early at mate or stalemate."""
    rng = random.Random(seed)
    pos = starting_position()
    sans, positions = [], [pos]
    while len(sans) < plies:
        moves = pos.legal_moves()
        if not moves:
            break
        mv = rng.choice(moves)
        sans.append(move_to_san(pos, mv))
        pos = apply_move(pos, mv)
        positions.append(pos)
    return sans, positions


def game_from_sans(sans, tags=None, result="*"):
    tags = dict(tags or {"Event": "t", "White": "W", "Black": "B"})
    tags["Result"] = result
    text = to_pgn(GameRecord(tags, tuple(sans), result))
    return next(parse_pgn_stream(text.encode()))


def load_one(name: str):
    return next(parse_pgn_stream(DATA / name))
