from chessruns.engine.quality import (
    MODEL_SPECS,
    MoveQuality,
    QCReport,
    complexity_ratio,
    move_quality,
    qc_report,
)
from chessruns.engine.uci import (
    ENGINE_ENV,
    MATE_SCORE,
    EngineConfig,
    EngineConfigError,
    EngineError,
    EngineEvaluation,
    EngineLine,
    ProtocolError,
    UciEngine,
    evaluate_position,
    mate_to_cp,
    score_played_move,
)


def stub_config(script_path, depth: int = 1, multipv: int = 5) -> EngineConfig:
    """Config that runs the scripted stub engine on ``script_path``."""
    import os
    import sys

    return EngineConfig([sys.executable, "-m", "chessruns.engine.stub", os.fspath(script_path)], depth, multipv)


__all__ = [
    "ENGINE_ENV", "MATE_SCORE", "MODEL_SPECS", "EngineConfig", "EngineConfigError", "EngineError",
    "EngineEvaluation", "EngineLine", "MoveQuality", "ProtocolError", "QCReport", "UciEngine",
    "complexity_ratio", "evaluate_position", "mate_to_cp", "move_quality", "qc_report",
    "score_played_move", "stub_config",
]
