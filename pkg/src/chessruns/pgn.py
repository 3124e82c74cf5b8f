"""Streaming PGN import with SAN resolution.

Input is read as bytes and decoded as UTF-8 with ``surrogateescape`` so legacy
8-bit archives pass through without loss. Comments, variations and NAGs are
skipped; only the main line is replayed.
"""

from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Union

from chessruns.board import (
    ChessMove,
    MoveFlag,
    PieceKind,
    Position,
    Side,
    FENError,
    IllegalMoveError,
    apply_move,
    parse_fen,
    square_index,
    square_name,
    starting_position,
)

RESULTS = ("1-0", "0-1", "1/2-1/2", "*")
SEVEN_TAG_ROSTER = ("Event", "Site", "Date", "Round", "White", "Black", "Result")


class SANError(ValueError):
    pass


class AmbiguousMoveError(SANError):
    pass


class NoMatchingMoveError(SANError):
    pass


class PGNGameError(Exception):
    """A game that could not be read; yielded in place of its GameRecord."""

    def __init__(self, index: int, message: str, ply: int | None = None, tags: dict | None = None):
        where = f" at ply {ply}" if ply is not None else ""
        super().__init__(f"game {index}{where}: {message}")
        self.index = index
        self.ply = ply
        self.message = message
        self.tags = dict(tags or {})


@dataclass(frozen=True)
class GameRecord:
    tags: dict
    san_moves: tuple
    result: str
    index: int = 0
    # resolved move codes, filled in by the parser so replays skip SAN matching
    codes: tuple = field(default=(), compare=False, repr=False)

    @property
    def game_id(self) -> str:
        t = self.tags
        if "GameId" in t:
            return t["GameId"]
        return f"{self.index}:{t.get('White', '?')}-{t.get('Black', '?')}:{t.get('Date', '?')}"

    def initial_position(self) -> Position:
        fen = self.tags.get("FEN")
        if fen and self.tags.get("SetUp", "1") == "1":
            return parse_fen(fen)
        return starting_position()


@dataclass(frozen=True)
class PlyEvent:
    ply_index: int
    mover: Side
    position_before: Position
    move: ChessMove

    @property
    def move_number(self) -> int:
        return self.position_before.fullmove_number


_SAN_RE = re.compile(r"^([NBRQK])?([a-h])?([1-8])?(x)?([a-h][1-8])(?:=?([NBRQ]))?$")
_LETTER_KIND = {"N": PieceKind.KNIGHT, "B": PieceKind.BISHOP, "R": PieceKind.ROOK,
                "Q": PieceKind.QUEEN, "K": PieceKind.KING}


def _clean_san(token: str) -> str:
    s = token.rstrip("!?+#")
    if s.endswith("e.p."):
        s = s[:-4]
    return s.replace("0", "O") if s.startswith("0-0") else s


def san_to_move(pos: Position, token: str) -> ChessMove:
    """Resolve a SAN token to the unique legal move it denotes."""
    s = _clean_san(token)
    codes = pos.move_codes
    if s in ("O-O", "O-O-O"):
        flag = MoveFlag.CASTLE_KINGSIDE if s == "O-O" else MoveFlag.CASTLE_QUEENSIDE
        found = [c for c in codes if c & flag]
        if not found:
            raise NoMatchingMoveError(f"{token}: castling not legal")
        return ChessMove.from_code(found[0])
    m = _SAN_RE.match(s)
    if not m:
        raise SANError(f"unrecognized SAN token {token!r}")
    letter, from_file, from_rank, _, dest, promo = m.groups()
    kind = _LETTER_KIND[letter] if letter else PieceKind.PAWN
    to_sq = square_index(dest)
    promo_kind = _LETTER_KIND[promo] if promo else None
    board = pos.board
    matches = []
    for c in codes:
        if (c >> 3) & 63 != to_sq:
            continue
        fr = (c >> 9) & 63
        if board[fr] & 7 != kind:
            continue
        if c & (MoveFlag.CASTLE_KINGSIDE | MoveFlag.CASTLE_QUEENSIDE):
            continue
        if from_file and fr & 7 != "abcdefgh".index(from_file):
            continue
        if from_rank and fr >> 3 != int(from_rank) - 1:
            continue
        if (c & 7 or None) != (promo_kind and int(promo_kind)):
            continue
        matches.append(c)
    if not matches:
        raise NoMatchingMoveError(f"no legal move matches {token!r}")
    if len(matches) > 1:
        alts = ", ".join(ChessMove.from_code(c).uci() for c in matches)
        raise AmbiguousMoveError(f"{token!r} is ambiguous ({alts})")
    return ChessMove.from_code(matches[0])


def move_to_san(pos: Position, mv: ChessMove) -> str:
    code = mv.code
    if code not in pos.move_codes:
        raise IllegalMoveError(f"illegal move {mv.uci()}")
    if mv.flags & MoveFlag.CASTLE_KINGSIDE:
        san = "O-O"
    elif mv.flags & MoveFlag.CASTLE_QUEENSIDE:
        san = "O-O-O"
    else:
        kind = pos.board[mv.from_sq] & 7
        capture = bool(mv.flags & MoveFlag.CAPTURE)
        if kind == PieceKind.PAWN:
            san = (square_name(mv.from_sq)[0] + "x" if capture else "") + square_name(mv.to_sq)
            if mv.promotion:
                san += "=" + mv.promotion.letter
        else:
            rivals = [
                (c >> 9) & 63 for c in pos.move_codes
                if (c >> 3) & 63 == mv.to_sq and (c >> 9) & 63 != mv.from_sq
                and pos.board[(c >> 9) & 63] & 7 == kind
            ]
            dis = ""
            if rivals:
                if all(r & 7 != mv.from_sq & 7 for r in rivals):
                    dis = square_name(mv.from_sq)[0]
                elif all(r >> 3 != mv.from_sq >> 3 for r in rivals):
                    dis = square_name(mv.from_sq)[1]
                else:
                    dis = square_name(mv.from_sq)
            san = PieceKind(kind).letter + dis + ("x" if capture else "") + square_name(mv.to_sq)
    after = apply_move(pos, mv)
    if after.is_check():
        san += "#" if not after.move_codes else "+"
    return san


_TOKEN_RE = re.compile(
    r"""
    (?P<comment>\{[^}]*\}?)
  | (?P<line_comment>;[^\n]*)
  | (?P<open>\()
  | (?P<close>\))
  | (?P<nag>\$\d+)
  | (?P<result>1-0|0-1|1/2-1/2|\*)
  | (?P<number>\d+\.+)
  | (?P<annotation>[!?]+)
  | (?P<san>[^\s{}();$]+)
    """,
    re.VERBOSE,
)
_TAG_RE = re.compile(r'^\[\s*([A-Za-z0-9_+#=:-]+)\s+"((?:[^"\\]|\\.)*)"\s*\]\s*$')


def tokenize_movetext(text: str) -> tuple[list[str], str | None]:
    """Main-line SAN tokens and the termination marker (if any)."""
    sans: list[str] = []
    result = None
    depth = 0
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind == "open":
            depth += 1
        elif kind == "close":
            depth = max(0, depth - 1)
        elif depth:
            continue
        elif kind == "san":
            sans.append(m.group())
        elif kind == "result":
            result = m.group()
    return sans, result


def _unescape(value: str) -> str:
    return re.sub(r"\\(.)", r"\1", value)


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


def _build_game(index: int, header: list[str], movetext: str) -> GameRecord:
    tags: dict = {}
    for line in header:
        m = _TAG_RE.match(line.strip())
        if not m:
            if not line.rstrip().endswith("]"):
                raise PGNGameError(index, f"unterminated tag section: {line.strip()!r}", tags=tags)
            raise PGNGameError(index, f"malformed tag pair: {line.strip()!r}", tags=tags)
        tags[m.group(1)] = _unescape(m.group(2))
    sans, term = tokenize_movetext(movetext)
    tag_result = tags.get("Result")
    if term and tag_result and tag_result in RESULTS and term != tag_result:
        raise PGNGameError(index, f"termination {term} contradicts Result tag {tag_result}", tags=tags)
    result = term or (tag_result if tag_result in RESULTS else "*")
    draft = GameRecord(tags, tuple(sans), result, index)
    try:
        pos = draft.initial_position()
    except FENError as exc:
        raise PGNGameError(index, f"bad FEN tag: {exc}", tags=tags) from None
    codes = []
    for ply, token in enumerate(sans, start=1):
        try:
            mv = san_to_move(pos, token)
        except SANError as exc:
            raise PGNGameError(index, str(exc), ply=ply, tags=tags) from None
        codes.append(mv.code)
        pos = apply_move(pos, mv)
    return GameRecord(tags, tuple(sans), result, index, tuple(codes))


Source = Union[str, bytes, os.PathLike, IO[bytes], IO[str]]


def _lines(source: Source) -> Iterator[str]:
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            yield from _lines(fh)
        return
    for raw in source:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8", errors="surrogateescape")
        yield raw.rstrip("\r\n")


def _raw_games(lines: Iterable[str]) -> Iterator[tuple[list[str], list[str]]]:
    header: list[str] = []
    body: list[str] = []
    in_comment = False
    for line in lines:
        if line.startswith("%"):
            continue
        stripped = line.strip()
        if not in_comment and stripped.startswith("["):
            if body:
                yield header, body
                header, body = [], []
            header.append(line)
            continue
        if not stripped:
            continue
        body.append(line)
        # brace comments may span lines; a '[' inside one is not a new header
        for ch in re.sub(r";.*", "", line) if not in_comment else line:
            if ch == "{":
                in_comment = True
            elif ch == "}":
                in_comment = False
    if header or body:
        yield header, body


def parse_pgn_stream(source: Source) -> Iterator[GameRecord | PGNGameError]:
    """Yield each game in file order; unreadable games yield a PGNGameError."""
    for index, (header, body) in enumerate(_raw_games(_lines(source))):
        try:
            yield _build_game(index, header, "\n".join(body))
        except PGNGameError as exc:
            yield exc


def read_games(source: Source, errors: list | None = None) -> Iterator[GameRecord]:
    """Like :func:`parse_pgn_stream` but collects errors into ``errors``."""
    for item in parse_pgn_stream(source):
        if isinstance(item, PGNGameError):
            if errors is not None:
                errors.append(item)
        else:
            yield item


def game_plies(game: GameRecord) -> Iterator[PlyEvent]:
    pos = game.initial_position()
    codes = game.codes
    for i, token in enumerate(game.san_moves):
        ply = i + 1
        try:
            mv = ChessMove.from_code(codes[i]) if codes else san_to_move(pos, token)
            nxt = apply_move(pos, mv)
        except (SANError, IllegalMoveError) as exc:
            raise PGNGameError(game.index, str(exc), ply=ply, tags=game.tags) from None
        yield PlyEvent(ply, pos.side_to_move, pos, mv)
        pos = nxt


def final_position(game: GameRecord) -> Position:
    pos = game.initial_position()
    for ev in game_plies(game):
        pos = apply_move(ev.position_before, ev.move)
    return pos


def to_pgn(game: GameRecord, width: int = 79) -> str:
    tags = dict(game.tags)
    tags["Result"] = game.result
    order = [t for t in SEVEN_TAG_ROSTER if t in tags] + [t for t in tags if t not in SEVEN_TAG_ROSTER]
    lines = [f'[{t} "{_escape(tags[t])}"]' for t in order]
    pos = game.initial_position()
    words = []
    number = pos.fullmove_number
    white = pos.side_to_move is Side.WHITE
    for i, san in enumerate(game.san_moves):
        if white:
            words.append(f"{number}.")
        elif i == 0:
            words.append(f"{number}...")
        words.append(san)
        if not white:
            number += 1
        white = not white
    words.append(game.result)
    text, line = [], ""
    for w in words:
        if line and len(line) + 1 + len(w) > width:
            text.append(line)
            line = w
        else:
            line = f"{line} {w}" if line else w
    text.append(line)
    return "\n".join(lines) + "\n\n" + "\n".join(text) + "\n"
