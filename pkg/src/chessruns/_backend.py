"""Pick the compiled kernels when built, else the pure-Python fallbacks.

Set ``CHESSRUNS_PURE=1`` to force the fallbacks.
"""

import os

PURE_REQUESTED = os.environ.get("CHESSRUNS_PURE", "") not in ("", "0")

if PURE_REQUESTED:
    from chessruns import _imbed_py as imbed
    from chessruns import _movegen_py as movegen
else:
    try:
        from chessruns import _imbed as imbed
        from chessruns import _movegen as movegen
    except ImportError:
        from chessruns import _imbed_py as imbed
        from chessruns import _movegen_py as movegen

COMPILED = movegen.BACKEND == "cython"
