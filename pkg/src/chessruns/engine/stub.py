"""Scripted UCI responder for deterministic tests.

Run as ``python -m chessruns.engine.stub SCRIPT``. Script format, one item per
line::

    # comment
    default synthetic          (optional; otherwise unknown positions fail)
    position <FEN>
    searchmoves <uci>          (optional; block answers only that restricted search)
    > info depth 8 multipv 1 score cp 31 pv e2e4
    > bestmove e2e4

Lines after ``> `` are written back verbatim. The synthetic default scores
every legal move with a hash of (FEN, move) so that it is deterministic and
all scores are positive.
"""

from __future__ import annotations

import sys
import zlib
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from chessruns.board import Position, parse_fen, starting_position

STUB_NAME = "chessruns-stub"


@dataclass
class Script:
    blocks: dict
    default: str | None = None


def parse_script(text: str) -> Script:
    blocks: dict = {}
    default = None
    fen = search = None
    opened = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line.startswith("> "):
            if fen is None:
                raise ValueError(f"line {lineno}: response before any position")
            if not opened:
                blocks[(fen, search)] = []
                opened = True
            blocks[(fen, search)].append(line[2:])
        elif line.startswith("position "):
            fen, search, opened = line[len("position "):].strip(), None, False
        elif line.startswith("searchmoves "):
            if fen is None or opened:
                raise ValueError(f"line {lineno}: searchmoves must directly follow a position line")
            search = line.split()[1]
        elif line.startswith("default "):
            default = line.split()[1]
            if default not in ("synthetic", "none"):
                raise ValueError(f"line {lineno}: unknown default {default!r}")
        else:
            raise ValueError(f"line {lineno}: cannot parse {line!r}")
    return Script(blocks, None if default == "none" else default)


def synthetic_score(fen: str, uci: str) -> int:
    return 1 + zlib.crc32(f"{fen} {uci}".encode()) % 400


def synthetic_lines(pos: Position, depth: int, multipv: int, searchmoves: Sequence[str] = ()) -> list[str]:
    fen = pos.fen()
    moves = [m.uci() for m in pos.legal_moves()]
    if searchmoves:
        moves = [m for m in moves if m in searchmoves]
    scored = sorted(((synthetic_score(fen, m), m) for m in moves), key=lambda t: (-t[0], t[1]))
    out = [f"info depth {depth} multipv {i} score cp {s} pv {m}"
           for i, (s, m) in enumerate(scored[:multipv], start=1)]
    out.append(f"bestmove {scored[0][1]}" if scored else "bestmove (none)")
    return out


def format_block(fen: str, lines: Iterable[tuple[str, int]], depth: int = 1,
                 searchmoves: str | None = None) -> str:
    """Script block for ``fen`` listing ``(uci, centipawns)`` best first."""
    lines = list(lines)
    out = [f"position {fen}"]
    if searchmoves:
        out.append(f"searchmoves {searchmoves}")
    for i, (mv, score) in enumerate(lines, start=1):
        out.append(f"> info depth {depth} multipv {i} score cp {score} pv {mv}")
    out.append(f"> bestmove {lines[0][0]}")
    return "\n".join(out) + "\n"


def game_script(game, multipv: int = 5, played_rank: int | Callable | None = 1) -> str:
    """Script covering every position of ``game``.

    Candidate scores come from the synthetic hash. ``played_rank`` puts the
    played move at that MultiPV rank (a callable receives the ply event);
    ``None`` keeps the hashed order. A played move pushed outside the listed
    lines gets a matching ``searchmoves`` block.
    """
    from chessruns.pgn import game_plies

    parts = ["# generated\n"]
    for ev in game_plies(game):
        pos = ev.position_before
        fen = pos.fen()
        played = ev.move.uci()
        scored = sorted(((synthetic_score(fen, m.uci()), m.uci()) for m in pos.legal_moves()),
                        key=lambda t: (-t[0], t[1]))
        order = [m for _, m in scored]
        scores = [s for s, _ in scored]
        rank = played_rank(ev) if callable(played_rank) else played_rank
        if rank is not None:
            order.remove(played)
            rank = min(rank, len(order) + 1)
            order.insert(rank - 1, played)
        listed = list(zip(order, scores))[:multipv]
        parts.append(format_block(fen, listed))
        if played not in order[:multipv]:
            idx = order.index(played)
            parts.append(format_block(fen, [(played, scores[idx])], searchmoves=played))
    return "".join(parts)


class StubEngine:
    def __init__(self, script: Script, out=sys.stdout):
        self.script = script
        self.out = out
        self.multipv = 1
        self.pos: Position | None = None
        self.fen = ""

    def emit(self, line: str) -> None:
        self.out.write(line + "\n")
        self.out.flush()

    def handle(self, line: str) -> bool:
        tok = line.split()
        if not tok:
            return True
        cmd = tok[0]
        if cmd == "uci":
            self.emit(f"id name {STUB_NAME}")
            self.emit("id author chessruns")
            self.emit("option name MultiPV type spin default 1 min 1 max 500")
            self.emit("uciok")
        elif cmd == "isready":
            self.emit("readyok")
        elif cmd == "setoption":
            if "MultiPV" in tok and "value" in tok:
                self.multipv = int(tok[tok.index("value") + 1])
        elif cmd == "position":
            if len(tok) > 1 and tok[1] == "startpos":
                self.pos = starting_position()
            else:
                end = tok.index("moves") if "moves" in tok else len(tok)
                self.fen = " ".join(tok[2:end])
                self.pos = None
            if self.pos is not None:
                self.fen = self.pos.fen()
        elif cmd == "go":
            self.go(tok)
        elif cmd == "quit":
            return False
        return True

    def go(self, tok: list[str]) -> None:
        depth = int(tok[tok.index("depth") + 1]) if "depth" in tok else 1
        search = tok[tok.index("searchmoves") + 1:] if "searchmoves" in tok else []
        key = (self.fen, search[0] if len(search) == 1 else None)
        lines = self.script.blocks.get(key)
        if lines is None and search:
            # fall back to the unrestricted block if it lists the move
            full = self.script.blocks.get((self.fen, None), [])
            for ln in full:
                parts = ln.split()
                if parts[:1] == ["info"] and "pv" in parts and parts[parts.index("pv") + 1] in search:
                    if "multipv" in parts:
                        parts[parts.index("multipv") + 1] = "1"
                    lines = [" ".join(parts), f"bestmove {parts[parts.index('pv') + 1]}"]
                    break
        if lines is None:
            if self.script.default == "synthetic":
                lines = synthetic_lines(parse_fen(self.fen), depth, self.multipv, search)
            else:
                lines = ["info string unknown position", "bestmove (none)"]
        for ln in lines:
            self.emit(ln)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if len(argv) != 1:
        print("usage: python -m chessruns.engine.stub SCRIPT", file=sys.stderr)
        return 2
    with open(argv[0], encoding="utf-8") as fh:
        script = parse_script(fh.read())
    eng = StubEngine(script)
    for line in sys.stdin:
        if not eng.handle(line.strip()):
            break
    return 0


if __name__ == "__main__":
    sys.exit(main())
