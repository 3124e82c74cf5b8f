"""Minimal UCI client: one external process, strictly serialized requests."""

from __future__ import annotations

import os
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from chessruns.board import ChessMove, Position

ENGINE_ENV = "CHESSRUNS_ENGINE"
MATE_SCORE = 32000
MIN_MULTIPV = 5


class EngineError(RuntimeError):
    """Engine crashed, timed out or misbehaved.

    ``fen`` is the position being analysed, so the failure can be replayed.
    """

    def __init__(self, message: str, fen: str | None = None, raw: str | None = None):
        detail = message
        if fen:
            detail += f" [position {fen}]"
        if raw is not None:
            detail += f" [raw line {raw!r}]"
        super().__init__(detail)
        self.fen = fen
        self.raw = raw


class ProtocolError(EngineError):
    pass


class EngineConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    executable_path: str | Sequence[str]
    depth: int
    multipv: int = MIN_MULTIPV
    options: Mapping[str, str] = field(default_factory=dict)
    timeout: float = 120.0

    def __post_init__(self):
        if not self.executable_path:
            raise EngineConfigError(f"no engine executable given; pass one or set {ENGINE_ENV}")
        if self.depth < 1:
            raise EngineConfigError("depth must be a positive integer")
        if self.multipv < MIN_MULTIPV:
            raise EngineConfigError(f"multipv must be at least {MIN_MULTIPV} (complexity ratios use the top five lines)")

    @classmethod
    def from_env(cls, depth: int, multipv: int = MIN_MULTIPV, options: Mapping[str, str] | None = None) -> "EngineConfig":
        path = os.environ.get(ENGINE_ENV)
        if not path:
            raise EngineConfigError(
                f"engine path missing: set {ENGINE_ENV}=/path/to/uci-engine or pass --engine"
            )
        return cls(path, depth, multipv, dict(options or {}))

    def argv(self) -> list[str]:
        if isinstance(self.executable_path, (str, os.PathLike)):
            path = os.fspath(self.executable_path)
            return [path] if os.path.exists(path) else shlex.split(path)
        return list(self.executable_path)


@dataclass(frozen=True)
class EngineLine:
    move: str
    score: int  # centipawns from the mover's point of view, mates mapped
    depth: int
    mate: int | None = None


@dataclass(frozen=True)
class EngineEvaluation:
    fen: str
    lines: tuple

    @property
    def best(self) -> EngineLine:
        return self.lines[0]

    @property
    def best_score(self) -> int:
        return self.lines[0].score

    def score_of(self, move: str) -> int | None:
        for ln in self.lines:
            if ln.move == move:
                return ln.score
        return None

    def rank_of(self, move: str) -> int | None:
        for i, ln in enumerate(self.lines, start=1):
            if ln.move == move:
                return i
        return None


def mate_to_cp(m: int) -> int:
    """Mate in m (negative: getting mated) as sign * (MATE_SCORE - |m|)."""
    if m == 0:
        return -MATE_SCORE
    return (MATE_SCORE - abs(m)) * (1 if m > 0 else -1)


def parse_info(line: str) -> dict | None:
    """Fields of an ``info`` line carrying a score and pv, else None."""
    tok = line.split()
    if not tok or tok[0] != "info" or "score" not in tok or "pv" not in tok:
        return None
    out = {"multipv": 1, "depth": 0, "bound": None}
    i = 1
    try:
        while i < len(tok):
            t = tok[i]
            if t == "depth":
                out["depth"] = int(tok[i + 1])
                i += 2
            elif t == "multipv":
                out["multipv"] = int(tok[i + 1])
                i += 2
            elif t == "score":
                kind, val = tok[i + 1], int(tok[i + 2])
                if kind == "cp":
                    out["score"], out["mate"] = val, None
                elif kind == "mate":
                    out["score"], out["mate"] = mate_to_cp(val), val
                else:
                    raise ProtocolError(f"unknown score kind {kind!r}", raw=line)
                i += 3
                if i < len(tok) and tok[i] in ("lowerbound", "upperbound"):
                    out["bound"] = tok[i]
                    i += 1
            elif t == "pv":
                if i + 1 >= len(tok):
                    raise ProtocolError("empty pv", raw=line)
                out["move"] = tok[i + 1]
                break
            elif t == "string":
                return None
            else:
                i += 1
    except (IndexError, ValueError):
        raise ProtocolError("malformed info line", raw=line) from None
    return out


class UciEngine:
    """A running engine process. Use as a context manager."""

    def __init__(self, cfg: EngineConfig):
        self.cfg = cfg
        try:
            self._proc = subprocess.Popen(
                cfg.argv(), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1,
            )
        except OSError as exc:
            raise EngineConfigError(
                f"cannot start engine {cfg.executable_path!r}: {exc}; check the path or {ENGINE_ENV}"
            ) from None
        self._out: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._handshake()

    def _pump(self):
        for line in self._proc.stdout:
            self._out.put(line.rstrip("\r\n"))
        self._out.put(None)

    def _send(self, cmd: str, fen: str | None = None) -> None:
        try:
            self._proc.stdin.write(cmd + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise EngineError("engine process is gone", fen=fen) from None

    def _read(self, fen: str | None = None) -> str:
        try:
            line = self._out.get(timeout=self.cfg.timeout)
        except queue.Empty:
            raise EngineError(f"engine timed out after {self.cfg.timeout}s", fen=fen) from None
        if line is None:
            raise EngineError("engine exited unexpectedly", fen=fen)
        return line

    def _wait_for(self, token: str, fen: str | None = None) -> None:
        while True:
            if self._read(fen).strip() == token:
                return

    def _handshake(self):
        self._send("uci")
        self._wait_for("uciok")
        for name, value in sorted(self.cfg.options.items()):
            self._send(f"setoption name {name} value {value}")
        self._send(f"setoption name MultiPV value {self.cfg.multipv}")
        self._send("isready")
        self._wait_for("readyok")

    def new_game(self) -> None:
        self._send("ucinewgame")
        self._send("isready")
        self._wait_for("readyok")

    def _search(self, pos: Position, searchmoves: str | None = None) -> tuple[list[EngineLine], str]:
        fen = pos.fen()
        self._send(f"position fen {fen}", fen)
        cmd = f"go depth {self.cfg.depth}"
        if searchmoves:
            cmd += f" searchmoves {searchmoves}"
        self._send(cmd, fen)
        latest: dict[int, dict] = {}
        while True:
            line = self._read(fen)
            if line.startswith("bestmove"):
                parts = line.split()
                if len(parts) < 2:
                    raise ProtocolError("bestmove without a move", fen=fen, raw=line)
                best = parts[1]
                break
            try:
                info = parse_info(line)
            except ProtocolError as exc:
                raise ProtocolError(str(exc).split(" [")[0], fen=fen, raw=line) from None
            if info is None or info["bound"] is not None:
                continue
            prev = latest.get(info["multipv"])
            if prev is None or info["depth"] >= prev["depth"]:
                latest[info["multipv"]] = info
        lines = [
            EngineLine(v["move"], v["score"], v["depth"], v["mate"])
            for _, v in sorted(latest.items())
        ]
        return lines, best

    def evaluate(self, pos: Position) -> EngineEvaluation:
        fen = pos.fen()
        n_legal = len(pos.move_codes)
        if n_legal == 0:
            raise EngineError("no legal moves to evaluate", fen=fen)
        lines, best = self._search(pos)
        if not lines:
            raise ProtocolError("search returned no scored lines", fen=fen, raw=best)
        for a, b in zip(lines, lines[1:]):
            if b.score > a.score:
                raise ProtocolError("MultiPV scores are not ordered best first", fen=fen)
        if len(lines) < min(self.cfg.multipv, n_legal):
            raise ProtocolError(
                f"expected {min(self.cfg.multipv, n_legal)} lines, got {len(lines)}", fen=fen
            )
        return EngineEvaluation(fen, tuple(lines))

    def restricted_score(self, pos: Position, move: ChessMove | str) -> int:
        """Score of one move from a search limited to that move."""
        uci = move if isinstance(move, str) else move.uci()
        lines, _ = self._search(pos, uci)
        for ln in lines:
            if ln.move == uci:
                return ln.score
        raise ProtocolError(f"restricted search did not report {uci}", fen=pos.fen())

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send("quit")
            except EngineError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        if self._proc.stdin:
            self._proc.stdin.close()

    def __enter__(self) -> "UciEngine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def evaluate_position(engine: UciEngine, pos: Position) -> EngineEvaluation:
    return engine.evaluate(pos)


def score_played_move(engine: UciEngine, pos: Position, played: ChessMove,
                      evaluation: EngineEvaluation | None = None) -> int:
    """Score of the played move: its MultiPV line if listed, else a restricted search."""
    ev = evaluation if evaluation is not None else engine.evaluate(pos)
    score = ev.score_of(played.uci())
    if score is not None:
        return score
    return engine.restricted_score(pos, played)
