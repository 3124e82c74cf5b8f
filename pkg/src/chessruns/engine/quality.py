"""Engine-based move quality inside and outside a run."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

from chessruns.board import ChessMove, Side
from chessruns.engine.uci import EngineConfig, EngineError, EngineEvaluation, UciEngine
from chessruns.pgn import GameRecord, game_plies
from chessruns.stats import DegenerateSampleError, logistic_fit, welch_t_test

# below this |best score| the relative loss is not computed
REL_DELTA_MIN_CP = 10
MAX_RANK = 5


def complexity_ratio(scores: Sequence[int], j: int, k: int) -> float | None:
    """score of the j-th best line over the k-th best; None if undefined."""
    if j > len(scores) or k > len(scores) or scores[k - 1] == 0:
        return None
    return scores[j - 1] / scores[k - 1]


@dataclass(frozen=True)
class MoveQuality:
    ply_index: int
    move_number: int
    move: str
    in_run: bool
    score: int
    best_score: int
    delta: int
    delta_rel: float | None
    best_move_indicator: int
    possibles: int
    complexity: dict
    rank: int
    # restricted search scored the move above the MultiPV best; delta clamped to 0
    clamped: bool = False
    rel_skipped: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["complexity"] = {f"{j},{k}": v for (j, k), v in sorted(self.complexity.items())}
        return d


def move_quality(evaluation: EngineEvaluation, played_score: int, played: ChessMove | str,
                 in_run: bool, possibles: int | None = None, ply_index: int = 0,
                 move_number: int = 0) -> MoveQuality:
    uci = played if isinstance(played, str) else played.uci()
    scores = [ln.score for ln in evaluation.lines]
    best = scores[0]
    delta = played_score - best
    clamped = delta > 0
    if clamped:
        delta = 0
    rel_skipped = abs(best) < REL_DELTA_MIN_CP
    delta_rel = None if rel_skipped else delta / best
    rank = evaluation.rank_of(uci)
    y = 1 if (rank == 1 or delta == 0) else 0
    top = min(MAX_RANK, len(scores))
    cx = {(j, k): complexity_ratio(scores, j, k) for j in range(2, top + 1) for k in range(1, j)}
    return MoveQuality(
        ply_index=ply_index,
        move_number=move_number,
        move=uci,
        in_run=bool(in_run),
        score=played_score,
        best_score=best,
        delta=delta,
        delta_rel=delta_rel,
        best_move_indicator=y,
        possibles=possibles if possibles is not None else len(evaluation.lines),
        complexity=cx,
        rank=rank if rank is not None else len(scores) + 1,
        clamped=clamped,
        rel_skipped=rel_skipped,
    )


def _log(v):
    return math.log(v) if v is not None and v > 0 else None


def _cov_log(q: MoveQuality, jk):
    return [_log(q.possibles), _log(q.complexity.get(jk))]


def _cov_linear(q: MoveQuality, jk):
    return [float(q.possibles), q.complexity.get(jk)]


def _cov_possibles(q: MoveQuality, jk):
    return [_log(q.possibles)]


def _cov_complexity(q: MoveQuality, jk):
    return [_log(q.complexity.get(jk))]


@dataclass(frozen=True)
class ModelSpec:
    name: str
    covariates: Callable
    labels: tuple
    columns: tuple

    def describe(self, jk) -> str:
        j, k = jk
        terms = " + ".join(lbl.format(j=j, k=k) for lbl in self.labels)
        return f"logit(Y) = b0 + beta*run + {terms}"


MODEL_SPECS = {
    "log": ModelSpec("log", _cov_log, ("a1*log(possibles)", "a2*log(complexity({j},{k}))"),
                     ("log_possibles", "log_complexity")),
    "linear": ModelSpec("linear", _cov_linear, ("a1*possibles", "a2*complexity({j},{k})"),
                        ("possibles", "complexity")),
    "log-possibles": ModelSpec("log-possibles", _cov_possibles, ("a1*log(possibles)",), ("log_possibles",)),
    "log-complexity": ModelSpec("log-complexity", _cov_complexity, ("a2*log(complexity({j},{k}))",),
                                ("log_complexity",)),
}


def _t_test(run, nonrun, equal_var):
    try:
        r = welch_t_test(run, nonrun, equal_var=equal_var)
    except DegenerateSampleError as exc:
        return {"error": str(exc), "n_run": len(run), "n_nonrun": len(nonrun)}
    return {"statistic": r.statistic, "df": r.df, "p": r.pvalue, "n_run": r.n_a,
            "n_nonrun": r.n_b, "mean_run": r.mean_a, "mean_nonrun": r.mean_b}


def _fit(qualities, spec: ModelSpec, jk):
    rows, ys, dropped = [], [], 0
    for q in qualities:
        cov = spec.covariates(q, jk)
        if any(c is None for c in cov):
            dropped += 1
            continue
        rows.append([1.0, 1.0 if q.in_run else 0.0, *cov])
        ys.append(q.best_move_indicator)
    names = ("intercept", "run") + spec.columns
    out = {"model": spec.name, "j": jk[0], "k": jk[1], "f": spec.describe(jk), "rows": len(rows), "dropped": dropped}
    if not rows:
        out.update(status="singular", coefficients={})
        return out
    fit = logistic_fit(rows, ys, names=names)
    out.update(fit.to_dict())
    if fit.converged:
        out["beta"] = fit.coef[1]
        out["beta_se"] = fit.se[1]
        out["beta_p"] = fit.pvalues[1]
    return out


@dataclass
class QCReport:
    game_id: str
    side: str
    run_span: tuple
    window: int | None
    qualities: list
    n_run: int
    n_nonrun: int
    t_test: dict = field(default_factory=dict)
    t_test_rel: dict = field(default_factory=dict)
    t_test_rank: dict = field(default_factory=dict)
    logistic: list = field(default_factory=list)
    equal_var: bool = False
    partial: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["run_span"] = list(self.run_span)
        d["qualities"] = [q.to_dict() for q in self.qualities]
        return d


def _select(plies, run_span, window):
    first, last = run_span
    if window is None:
        return plies
    lo, hi = first - window, last + window
    return [ev for ev in plies if lo <= ev.move_number <= hi]


def qc_report(
    game: GameRecord,
    run_span: tuple[int, int],
    engine: EngineConfig | UciEngine,
    side: Side = Side.WHITE,
    models: Sequence[str] = ("log",),
    jk: Sequence[tuple[int, int]] = ((2, 1),),
    window: int | None = None,
    equal_var: bool = False,
) -> QCReport:
    """Score every move of ``side`` and compare run moves with the rest.

    ``run_span`` is an inclusive range of ``side``'s fullmove numbers. With
    ``window`` the comparison group is cut to that many moves either side of
    the run. If the engine fails midway the report keeps what was scored and
    sets ``partial``.
    """
    for name in models:
        if name not in MODEL_SPECS:
            raise ValueError(f"unknown model {name!r}; choose from {sorted(MODEL_SPECS)}")
    for j, k in jk:
        if not 1 <= k < j <= MAX_RANK:
            raise ValueError(f"complexity({j},{k}) needs 1 <= k < j <= {MAX_RANK}")
    first, last = run_span
    plies = [ev for ev in game_plies(game) if ev.mover is side]
    numbers = {ev.move_number for ev in plies}
    if first > last or first not in numbers or last not in numbers:
        raise ValueError(f"run span {run_span} is not within {side.name.lower()}'s moves")
    if window is not None and window < 0:
        raise ValueError("window must be nonnegative")
    chosen = _select(plies, run_span, window)

    own = isinstance(engine, EngineConfig)
    qualities: list[MoveQuality] = []
    partial, error = False, None
    session = None
    try:
        session = UciEngine(engine) if own else engine
        session.new_game()
        for ev in chosen:
            pos = ev.position_before
            evaluation = session.evaluate(pos)
            played = ev.move.uci()
            score = evaluation.score_of(played)
            if score is None:
                score = session.restricted_score(pos, ev.move)
            qualities.append(move_quality(
                evaluation, score, ev.move, first <= ev.move_number <= last,
                possibles=len(pos.move_codes), ply_index=ev.ply_index, move_number=ev.move_number,
            ))
    except EngineError as exc:
        partial, error = True, str(exc)
    finally:
        if own and session is not None:
            session.close()

    run = [q for q in qualities if q.in_run]
    rest = [q for q in qualities if not q.in_run]
    report = QCReport(
        game_id=game.game_id, side=side.name.lower(), run_span=(first, last), window=window,
        qualities=qualities, n_run=len(run), n_nonrun=len(rest), equal_var=equal_var,
        partial=partial, error=error,
    )
    report.t_test = _t_test([q.delta for q in run], [q.delta for q in rest], equal_var)
    report.t_test_rel = _t_test([q.delta_rel for q in run if q.delta_rel is not None],
                                [q.delta_rel for q in rest if q.delta_rel is not None], equal_var)
    report.t_test_rank = _t_test([q.rank for q in run], [q.rank for q in rest], equal_var)
    for name in models:
        for pair in jk:
            report.logistic.append(_fit(qualities, MODEL_SPECS[name], tuple(pair)))
    return report
