"""Board representation, FEN, legal moves and square colours.

Squares are indexed ``rank * 8 + file`` with a1 = 0 and h8 = 63. A square is
light when file + rank is odd (a1 is dark). The heavy lifting (move
generation, perft) lives in the kernel picked by :mod:`chessruns._backend`.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

from chessruns import _movegen_py as _rules
from chessruns._backend import movegen as _kernel

FILES = "abcdefgh"
STARTING_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"


class FENError(ValueError):
    """Malformed or illegal FEN; ``field`` names the offending FEN field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class IllegalMoveError(ValueError):
    pass


class NoLegalMovesError(ValueError):
    """The light-square fraction is undefined once the game is over."""


class Side(enum.IntEnum):
    WHITE = 0
    BLACK = 1

    @property
    def other(self) -> "Side":
        return Side(1 - self)

    @classmethod
    def parse(cls, text: str) -> "Side":
        return cls[text.upper()]


class PieceKind(enum.IntEnum):
    PAWN = 1
    KNIGHT = 2
    BISHOP = 3
    ROOK = 4
    QUEEN = 5
    KING = 6

    @property
    def letter(self) -> str:
        return "PNBRQK"[self - 1]


class SquareColor(enum.Enum):
    LIGHT = "light"
    DARK = "dark"

    @property
    def other(self) -> "SquareColor":
        return SquareColor.DARK if self is SquareColor.LIGHT else SquareColor.LIGHT

    @classmethod
    def parse(cls, text: str) -> "SquareColor":
        return cls(text.lower())


class MoveFlag(enum.IntFlag):
    NONE = 0
    CAPTURE = _rules.CAPTURE
    EN_PASSANT = _rules.EN_PASSANT
    CASTLE_KINGSIDE = _rules.CASTLE_K
    CASTLE_QUEENSIDE = _rules.CASTLE_Q
    DOUBLE_PAWN_PUSH = _rules.DOUBLE_PUSH


def square_index(name: str) -> int:
    if len(name) != 2 or name[0] not in FILES or name[1] not in "12345678":
        raise ValueError(f"bad square name {name!r}")
    return (int(name[1]) - 1) * 8 + FILES.index(name[0])


def square_name(index: int) -> str:
    return FILES[index & 7] + str((index >> 3) + 1)


def is_light(index: int) -> bool:
    return ((index & 7) + (index >> 3)) & 1 == 1


def square_color(index: int) -> SquareColor:
    return SquareColor.LIGHT if is_light(index) else SquareColor.DARK


@dataclass(frozen=True, order=True)
class Square:
    """A square with one-based file and rank (a1 = (1, 1))."""

    file: int
    rank: int

    def __post_init__(self):
        if not (1 <= self.file <= 8 and 1 <= self.rank <= 8):
            raise ValueError(f"square out of range: ({self.file}, {self.rank})")

    @classmethod
    def from_index(cls, index: int) -> "Square":
        return cls((index & 7) + 1, (index >> 3) + 1)

    @classmethod
    def parse(cls, name: str) -> "Square":
        return cls.from_index(square_index(name))

    @property
    def index(self) -> int:
        return (self.rank - 1) * 8 + self.file - 1

    @property
    def color(self) -> SquareColor:
        return SquareColor.LIGHT if (self.file + self.rank) % 2 else SquareColor.DARK

    def __str__(self) -> str:
        return square_name(self.index)


@dataclass(frozen=True)
class Piece:
    kind: PieceKind
    side: Side

    @property
    def symbol(self) -> str:
        letter = self.kind.letter
        return letter if self.side is Side.WHITE else letter.lower()

    @classmethod
    def from_symbol(cls, ch: str) -> "Piece":
        kind = PieceKind("PNBRQK".index(ch.upper()) + 1)
        return cls(kind, Side.WHITE if ch.isupper() else Side.BLACK)

    @property
    def code(self) -> int:
        return int(self.kind) | (int(self.side) << 3)

    @classmethod
    def from_code(cls, code: int) -> "Piece":
        return cls(PieceKind(code & 7), Side(code >> 3))


@dataclass(frozen=True)
class ChessMove:
    """A move; ``to_sq`` is the destination for every move type.

    For castling that is the king's destination square.
    """

    from_sq: int
    to_sq: int
    promotion: PieceKind | None = None
    flags: MoveFlag = MoveFlag.NONE

    @classmethod
    def from_code(cls, code: int) -> "ChessMove":
        promo = code & 7
        return cls(
            (code >> 9) & 63,
            (code >> 3) & 63,
            PieceKind(promo) if promo else None,
            MoveFlag(code & ~_rules.SORT_MASK),
        )

    @property
    def code(self) -> int:
        promo = int(self.promotion) if self.promotion else 0
        return (self.from_sq << 9) | (self.to_sq << 3) | promo | int(self.flags)

    @property
    def from_square(self) -> Square:
        return Square.from_index(self.from_sq)

    @property
    def to_square(self) -> Square:
        return Square.from_index(self.to_sq)

    @property
    def destination_color(self) -> SquareColor:
        return square_color(self.to_sq)

    def uci(self) -> str:
        s = square_name(self.from_sq) + square_name(self.to_sq)
        if self.promotion:
            s += self.promotion.letter.lower()
        return s

    def __str__(self) -> str:
        return self.uci()


_CASTLE_CHARS = (("K", _rules.WK), ("Q", _rules.WQ), ("k", _rules.BK), ("q", _rules.BQ))


@dataclass(frozen=True)
class Position:
    """Immutable game state.

    ``board`` is 64 bytes of piece codes (see ``_movegen_py``); ``castling`` a
    KQkq bitmask. ``en_passant`` is only set when an en passant capture is
    actually legal, so equal positions compare and print equal.
    """

    board: bytes
    side_to_move: Side = Side.WHITE
    castling: int = 0
    en_passant: int | None = None
    halfmove_clock: int = 0
    fullmove_number: int = 1

    @property
    def castling_rights(self) -> tuple[bool, bool, bool, bool]:
        """(white kingside, white queenside, black kingside, black queenside)."""
        c = self.castling
        return (bool(c & 1), bool(c & 2), bool(c & 4), bool(c & 8))

    def piece_at(self, square: int | Square | str) -> Piece | None:
        idx = _as_index(square)
        code = self.board[idx]
        return Piece.from_code(code) if code else None

    def pieces(self) -> Iterator[tuple[int, Piece]]:
        for idx, code in enumerate(self.board):
            if code:
                yield idx, Piece.from_code(code)

    @cached_property
    def move_codes(self) -> tuple[int, ...]:
        return tuple(_kernel.legal_moves(self.board, int(self.side_to_move), self.castling, self._ep))

    @property
    def _ep(self) -> int:
        return -1 if self.en_passant is None else self.en_passant

    def legal_moves(self) -> list[ChessMove]:
        return [ChessMove.from_code(c) for c in self.move_codes]

    def is_check(self) -> bool:
        return bool(_kernel.in_check(self.board, int(self.side_to_move)))

    def is_checkmate(self) -> bool:
        return not self.move_codes and self.is_check()

    def is_stalemate(self) -> bool:
        return not self.move_codes and not self.is_check()

    def fen(self) -> str:
        return to_fen(self)

    def __str__(self) -> str:
        return to_fen(self)


def _as_index(square: int | Square | str) -> int:
    if isinstance(square, Square):
        return square.index
    if isinstance(square, str):
        return square_index(square)
    return square


def _validate(board: bytes, side: Side, castling: int) -> None:
    counts = Counter(board)
    for s, name in ((Side.WHITE, "white"), (Side.BLACK, "black")):
        kings = counts[(int(s) << 3) | PieceKind.KING]
        if kings != 1:
            raise FENError("placement", f"{name} has {kings} kings")
        if counts[(int(s) << 3) | PieceKind.PAWN] > 8:
            raise FENError("placement", f"{name} has more than 8 pawns")
    for idx in list(range(8)) + list(range(56, 64)):
        if board[idx] & 7 == PieceKind.PAWN:
            raise FENError("placement", f"pawn on back rank at {square_name(idx)}")
    wk = board.index(PieceKind.KING)
    bk = board.index(8 | PieceKind.KING)
    if bk in _rules.KING_TARGETS[wk]:
        raise FENError("placement", "kings are adjacent")
    if _kernel.in_check(board, 1 - int(side)):
        raise FENError("side to move", "side not to move is in check")
    rook, king = PieceKind.ROOK, PieceKind.KING
    needs = ((_rules.WK, 4, king, 7, rook), (_rules.WQ, 4, king, 0, rook),
             (_rules.BK, 60, 8 | king, 63, 8 | rook), (_rules.BQ, 60, 8 | king, 56, 8 | rook))
    for bit, ksq, kc, rsq, rc in needs:
        if castling & bit and not (board[ksq] == kc and board[rsq] == rc):
            raise FENError("castling", "right claimed without king and rook on home squares")


def _normalized_ep(board: bytes, side: Side, castling: int, ep: int | None) -> int | None:
    if ep is None:
        return None
    codes = _kernel.legal_moves(board, int(side), castling, ep)
    if any(c & _rules.EN_PASSANT for c in codes):
        return ep
    return None


def parse_fen(text: str) -> Position:
    parts = text.split()
    if len(parts) != 6:
        raise FENError("record", f"expected 6 fields, got {len(parts)}")
    placement, stm, castle, ep, half, full = parts

    rows = placement.split("/")
    if len(rows) != 8:
        raise FENError("placement", "expected 8 ranks")
    board = bytearray(64)
    for i, row in enumerate(rows):
        rank = 7 - i
        f = 0
        for ch in row:
            if ch.isdigit():
                if ch == "0":
                    raise FENError("placement", "zero run length")
                f += int(ch)
            elif ch in "pnbrqkPNBRQK":
                if f > 7:
                    raise FENError("placement", f"rank {rank + 1} overflows")
                board[rank * 8 + f] = Piece.from_symbol(ch).code
                f += 1
            else:
                raise FENError("placement", f"unexpected character {ch!r}")
        if f != 8:
            raise FENError("placement", f"rank {rank + 1} has {f} files")
    board = bytes(board)

    if stm not in ("w", "b"):
        raise FENError("side to move", f"expected 'w' or 'b', got {stm!r}")
    side = Side.WHITE if stm == "w" else Side.BLACK

    castling = 0
    if castle != "-":
        for ch in castle:
            bit = dict(_CASTLE_CHARS).get(ch)
            if bit is None or castling & bit:
                raise FENError("castling", f"bad castling field {castle!r}")
            castling |= bit

    ep_sq = None
    if ep != "-":
        try:
            ep_sq = square_index(ep)
        except ValueError:
            raise FENError("en passant", f"bad square {ep!r}") from None
        if ep_sq >> 3 != (5 if side is Side.WHITE else 2):
            raise FENError("en passant", f"{ep} is on the wrong rank")

    try:
        halfmove = int(half)
        fullmove = int(full)
    except ValueError:
        raise FENError("clocks", f"non-integer clock {half!r} / {full!r}") from None
    if halfmove < 0:
        raise FENError("halfmove clock", "negative")
    if fullmove < 1:
        raise FENError("fullmove number", "must be positive")

    _validate(board, side, castling)
    if ep_sq is not None:
        pusher = (8 if side is Side.WHITE else 0) | PieceKind.PAWN
        behind = ep_sq - 8 if side is Side.WHITE else ep_sq + 8
        if board[behind] != pusher or board[ep_sq]:
            raise FENError("en passant", f"no double-pushed pawn behind {ep}")
    ep_sq = _normalized_ep(board, side, castling, ep_sq)
    return Position(board, side, castling, ep_sq, halfmove, fullmove)


def to_fen(pos: Position) -> str:
    rows = []
    for rank in range(7, -1, -1):
        row, empty = "", 0
        for f in range(8):
            code = pos.board[rank * 8 + f]
            if code:
                if empty:
                    row += str(empty)
                    empty = 0
                row += Piece.from_code(code).symbol
            else:
                empty += 1
        if empty:
            row += str(empty)
        rows.append(row)
    castle = "".join(ch for ch, bit in _CASTLE_CHARS if pos.castling & bit) or "-"
    ep = "-" if pos.en_passant is None else square_name(pos.en_passant)
    stm = "w" if pos.side_to_move is Side.WHITE else "b"
    return f"{'/'.join(rows)} {stm} {castle} {ep} {pos.halfmove_clock} {pos.fullmove_number}"


def starting_position() -> Position:
    return parse_fen(STARTING_FEN)


def legal_moves(pos: Position) -> list[ChessMove]:
    """Legal moves ordered by (from, to, promotion); one entry per promotion piece."""
    return pos.legal_moves()


def apply_move(pos: Position, mv: ChessMove | int) -> Position:
    code = mv if isinstance(mv, int) else mv.code
    if code not in pos.move_codes:
        # tolerate callers that built the move without flags
        key = code & _rules.SORT_MASK
        matches = [c for c in pos.move_codes if c & _rules.SORT_MASK == key]
        if not matches:
            name = ChessMove.from_code(code).uci()
            raise IllegalMoveError(f"illegal move {name} in {to_fen(pos)}")
        code = matches[0]
    b = list(pos.board)
    moved = b[(code >> 9) & 63]
    _rules.make(b, code)
    castling, ep = _rules.next_state(code, pos.castling)
    board = bytes(b)
    side = pos.side_to_move.other
    reset = moved & 7 == PieceKind.PAWN or code & _rules.CAPTURE
    half = 0 if reset else pos.halfmove_clock + 1
    full = pos.fullmove_number + (1 if pos.side_to_move is Side.BLACK else 0)
    ep_sq = _normalized_ep(board, side, castling, ep if ep >= 0 else None)
    return Position(board, side, castling, ep_sq, half, full)


def perft(pos: Position, depth: int) -> int:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return _kernel.perft(pos.board, int(pos.side_to_move), pos.castling, pos._ep, depth)


def light_move_fraction(pos: Position) -> float:
    """Share of legal moves whose destination square is light."""
    codes = pos.move_codes
    if not codes:
        raise NoLegalMovesError(f"no legal moves in {to_fen(pos)}")
    light = sum(1 for c in codes if is_light((c >> 3) & 63))
    return light / len(codes)


def dark_move_fraction(pos: Position) -> float:
    codes = pos.move_codes
    if not codes:
        raise NoLegalMovesError(f"no legal moves in {to_fen(pos)}")
    dark = sum(1 for c in codes if not is_light((c >> 3) & 63))
    return dark / len(codes)


def move_fraction(pos: Position, color: SquareColor) -> float:
    if color is SquareColor.LIGHT:
        return light_move_fraction(pos)
    return dark_move_fraction(pos)


@dataclass(frozen=True)
class MaterialCensus:
    counts: dict
    bishop_colors: dict

    def count(self, side: Side, kind: PieceKind) -> int:
        return self.counts[(side, kind)]

    def total(self, kind: PieceKind) -> int:
        return self.counts[(Side.WHITE, kind)] + self.counts[(Side.BLACK, kind)]


def material_census(pos: Position) -> MaterialCensus:
    counts = {(s, k): 0 for s in Side for k in PieceKind}
    bishops: dict = {Side.WHITE: [], Side.BLACK: []}
    for idx, code in enumerate(pos.board):
        if not code:
            continue
        side, kind = Side(code >> 3), PieceKind(code & 7)
        counts[(side, kind)] += 1
        if kind is PieceKind.BISHOP:
            bishops[side].append(square_color(idx))
    colors = {s: tuple(sorted(c, key=lambda x: x.value)) for s, c in bishops.items()}
    return MaterialCensus(counts, colors)
