"""Time the compiled kernels against the pure-Python fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import random
import timeit

from chessruns import _imbed_py, _movegen_py
from chessruns.board import parse_fen, starting_position

try:
    from chessruns import _imbed, _movegen
except ImportError:
    _imbed = _movegen = None

KIWIPETE = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1"


def perft_case(mod, pos, depth):
    return lambda: mod.perft(pos.board, int(pos.side_to_move), pos.castling, pos._ep, depth)


def imbed_case(mod, probs, k):
    return lambda: mod.imbed_tail(probs, k)


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = random.Random(0)
    probs = [rng.random() for _ in range(5000)]
    cases = [
        ("perft(start, 4)", lambda m: perft_case(m, starting_position(), 4), "movegen"),
        ("perft(kiwipete, 3)", lambda m: perft_case(m, parse_fen(KIWIPETE), 3), "movegen"),
        ("imbed n=5000 k=12", lambda m: imbed_case(m, probs, 12), "imbed"),
        ("imbed n=5000 k=200", lambda m: imbed_case(m, probs, 200), "imbed"),
    ]
    pure = {"movegen": _movegen_py, "imbed": _imbed_py}
    compiled = {"movegen": _movegen, "imbed": _imbed}

    print(f"{'case':<22}{'pure (s)':>12}{'compiled (s)':>14}{'speedup':>10}")
    for label, make, kind in cases:
        t_pure = best_of(make(pure[kind]), args.repeat)
        if compiled[kind] is None:
            print(f"{label:<22}{t_pure:>12.4f}{'n/a':>14}{'':>10}")
            continue
        fast, slow = make(compiled[kind])(), make(pure[kind])()
        assert fast == slow or abs(fast - slow) < 1e-12, (label, fast, slow)
        t_comp = best_of(make(compiled[kind]), args.repeat)
        print(f"{label:<22}{t_pure:>12.4f}{t_comp:>14.4f}{t_pure / t_comp:>9.1f}x")


if __name__ == "__main__":
    main()
