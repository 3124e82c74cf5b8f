# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled move generation kernel; same interface as ``_movegen_py``."""

from libc.string cimport memcpy

from chessruns._movegen_py import (
    CASTLE_KEEP as _KEEP,
    KING_TARGETS as _KING,
    KNIGHT_TARGETS as _KNIGHT,
    RAYS as _RAYS,
)

BACKEND = "cython"

cdef enum:
    MAXMOVES = 512
    PAWN = 1
    KNIGHT = 2
    BISHOP = 3
    ROOK = 4
    QUEEN = 5
    KING = 6
    BLACK_BIT = 8
    CAPTURE = 1 << 15
    EN_PASSANT = 1 << 16
    CASTLE_K = 1 << 17
    CASTLE_Q = 1 << 18
    DOUBLE_PUSH = 1 << 19
    SORT_MASK = 0x7FFF

cdef int knight_t[64][8]
cdef int knight_n[64]
cdef int king_t[64][8]
cdef int king_n[64]
cdef int ray_t[64][8][7]
cdef int ray_n[64][8]
cdef int keep[64]


def _init_tables():
    cdef int sq, i, d
    for sq in range(64):
        knight_n[sq] = len(_KNIGHT[sq])
        for i, t in enumerate(_KNIGHT[sq]):
            knight_t[sq][i] = t
        king_n[sq] = len(_KING[sq])
        for i, t in enumerate(_KING[sq]):
            king_t[sq][i] = t
        for d in range(8):
            ray_n[sq][d] = len(_RAYS[sq][d])
            for i, t in enumerate(_RAYS[sq][d]):
                ray_t[sq][d][i] = t
        keep[sq] = _KEEP[sq]


_init_tables()


cdef bint _attacked(const unsigned char* b, int sq, int by) nogil:
    cdef int base = by << 3
    cdef int f = sq & 7, r = sq >> 3
    cdef int i, d, t, pc, slider
    if by == 0:
        if r > 0:
            if f > 0 and b[sq - 9] == PAWN:
                return True
            if f < 7 and b[sq - 7] == PAWN:
                return True
    elif r < 7:
        if f > 0 and b[sq + 7] == (BLACK_BIT | PAWN):
            return True
        if f < 7 and b[sq + 9] == (BLACK_BIT | PAWN):
            return True
    for i in range(knight_n[sq]):
        if b[knight_t[sq][i]] == (base | KNIGHT):
            return True
    for i in range(king_n[sq]):
        if b[king_t[sq][i]] == (base | KING):
            return True
    for d in range(8):
        slider = (base | ROOK) if d < 4 else (base | BISHOP)
        for i in range(ray_n[sq][d]):
            pc = b[ray_t[sq][d][i]]
            if pc:
                if pc == slider or pc == (base | QUEEN):
                    return True
                break
    return False


cdef int _pseudo(const unsigned char* b, int stm, int castling, int ep, int* out) nogil:
    cdef int n = 0
    cdef int sq, pc, kind, src, step, start_rank, last_rank, to, tgt, f, df, pr
    cdef int i, d, lo, hi, opp = 1 - stm
    for sq in range(64):
        pc = b[sq]
        if pc == 0 or (pc >> 3) != stm:
            continue
        kind = pc & 7
        src = sq << 9
        if kind == PAWN:
            step = 8 if stm == 0 else -8
            start_rank = 1 if stm == 0 else 6
            last_rank = 7 if stm == 0 else 0
            to = sq + step
            if b[to] == 0:
                if (to >> 3) == last_rank:
                    for pr in range(KNIGHT, QUEEN + 1):
                        out[n] = src | (to << 3) | pr
                        n += 1
                else:
                    out[n] = src | (to << 3)
                    n += 1
                    if (sq >> 3) == start_rank and b[to + step] == 0:
                        out[n] = src | ((to + step) << 3) | DOUBLE_PUSH
                        n += 1
            f = sq & 7
            for df in range(-1, 2, 2):
                if f + df < 0 or f + df > 7:
                    continue
                to = sq + step + df
                tgt = b[to]
                if tgt and (tgt >> 3) != stm:
                    if (to >> 3) == last_rank:
                        for pr in range(KNIGHT, QUEEN + 1):
                            out[n] = src | (to << 3) | pr | CAPTURE
                            n += 1
                    else:
                        out[n] = src | (to << 3) | CAPTURE
                        n += 1
                elif to == ep and tgt == 0:
                    out[n] = src | (to << 3) | CAPTURE | EN_PASSANT
                    n += 1
        elif kind == KNIGHT:
            for i in range(knight_n[sq]):
                to = knight_t[sq][i]
                tgt = b[to]
                if tgt == 0:
                    out[n] = src | (to << 3)
                    n += 1
                elif (tgt >> 3) != stm:
                    out[n] = src | (to << 3) | CAPTURE
                    n += 1
        elif kind == KING:
            for i in range(king_n[sq]):
                to = king_t[sq][i]
                tgt = b[to]
                if tgt == 0:
                    out[n] = src | (to << 3)
                    n += 1
                elif (tgt >> 3) != stm:
                    out[n] = src | (to << 3) | CAPTURE
                    n += 1
        else:
            if kind == ROOK:
                lo, hi = 0, 4
            elif kind == BISHOP:
                lo, hi = 4, 8
            else:
                lo, hi = 0, 8
            for d in range(lo, hi):
                for i in range(ray_n[sq][d]):
                    to = ray_t[sq][d][i]
                    tgt = b[to]
                    if tgt == 0:
                        out[n] = src | (to << 3)
                        n += 1
                    else:
                        if (tgt >> 3) != stm:
                            out[n] = src | (to << 3) | CAPTURE
                            n += 1
                        break
    if stm == 0:
        if b[4] == KING and castling & 3:
            if castling & 1 and b[5] == 0 and b[6] == 0 and b[7] == ROOK:
                if not (_attacked(b, 4, opp) or _attacked(b, 5, opp) or _attacked(b, 6, opp)):
                    out[n] = (4 << 9) | (6 << 3) | CASTLE_K
                    n += 1
            if castling & 2 and b[3] == 0 and b[2] == 0 and b[1] == 0 and b[0] == ROOK:
                if not (_attacked(b, 4, opp) or _attacked(b, 3, opp) or _attacked(b, 2, opp)):
                    out[n] = (4 << 9) | (2 << 3) | CASTLE_Q
                    n += 1
    else:
        if b[60] == (BLACK_BIT | KING) and castling & 12:
            if castling & 4 and b[61] == 0 and b[62] == 0 and b[63] == (BLACK_BIT | ROOK):
                if not (_attacked(b, 60, opp) or _attacked(b, 61, opp) or _attacked(b, 62, opp)):
                    out[n] = (60 << 9) | (62 << 3) | CASTLE_K
                    n += 1
            if castling & 8 and b[59] == 0 and b[58] == 0 and b[57] == 0 and b[56] == (BLACK_BIT | ROOK):
                if not (_attacked(b, 60, opp) or _attacked(b, 59, opp) or _attacked(b, 58, opp)):
                    out[n] = (60 << 9) | (58 << 3) | CASTLE_Q
                    n += 1
    return n


cdef void _make(unsigned char* b, int code) nogil:
    cdef int fr = (code >> 9) & 63
    cdef int to = (code >> 3) & 63
    cdef int promo = code & 7
    cdef int pc = b[fr]
    b[fr] = 0
    if code & EN_PASSANT:
        if pc < BLACK_BIT:
            b[to - 8] = 0
        else:
            b[to + 8] = 0
    if promo:
        pc = (pc & BLACK_BIT) | promo
    b[to] = pc
    if code & CASTLE_K:
        b[fr + 1] = b[fr + 3]
        b[fr + 3] = 0
    elif code & CASTLE_Q:
        b[fr - 1] = b[fr - 4]
        b[fr - 4] = 0


cdef int _king_square(const unsigned char* b, int side) nogil:
    cdef int sq
    cdef int king = (side << 3) | KING
    for sq in range(64):
        if b[sq] == king:
            return sq
    return -1


cdef int _legal(const unsigned char* b, int stm, int castling, int ep, int* out) nogil:
    cdef int pseudo[MAXMOVES]
    cdef unsigned char nb[64]
    cdef int np = _pseudo(b, stm, castling, ep, pseudo)
    cdef int ksq = _king_square(b, stm)
    cdef int i, code, k, n = 0
    for i in range(np):
        code = pseudo[i]
        memcpy(nb, b, 64)
        _make(nb, code)
        k = ((code >> 3) & 63) if ((code >> 9) & 63) == ksq else ksq
        if not _attacked(nb, k, 1 - stm):
            out[n] = code
            n += 1
    return n


cdef long long _perft(const unsigned char* b, int stm, int castling, int ep, int depth) nogil:
    cdef int moves[MAXMOVES]
    cdef unsigned char nb[64]
    cdef int n = _legal(b, stm, castling, ep, moves)
    cdef int i, code, fr, to, c2, ep2
    cdef long long total = 0
    if depth == 1:
        return n
    for i in range(n):
        code = moves[i]
        memcpy(nb, b, 64)
        _make(nb, code)
        fr = (code >> 9) & 63
        to = (code >> 3) & 63
        c2 = castling & keep[fr] & keep[to]
        ep2 = ((fr + to) >> 1) if code & DOUBLE_PUSH else -1
        total += _perft(nb, 1 - stm, c2, ep2, depth - 1)
    return total


cdef void _load(const unsigned char[:] board, unsigned char* b):
    cdef int i
    if board.shape[0] != 64:
        raise ValueError("board must have 64 squares")
    for i in range(64):
        b[i] = board[i]


def attacked(const unsigned char[:] board, int sq, int by):
    cdef unsigned char b[64]
    _load(board, b)
    return _attacked(b, sq, by)


def in_check(const unsigned char[:] board, int side):
    cdef unsigned char b[64]
    _load(board, b)
    return _attacked(b, _king_square(b, side), 1 - side)


def legal_moves(const unsigned char[:] board, int stm, int castling, int ep):
    """Legal move codes sorted by (from, to, promotion)."""
    cdef unsigned char b[64]
    cdef int moves[MAXMOVES]
    cdef int n, i
    _load(board, b)
    n = _legal(b, stm, castling, ep, moves)
    out = [moves[i] for i in range(n)]
    out.sort(key=_sort_key)
    return out


def _sort_key(int code):
    return code & SORT_MASK


def perft(const unsigned char[:] board, int stm, int castling, int ep, int depth):
    cdef unsigned char b[64]
    cdef long long total
    if depth == 0:
        return 1
    _load(board, b)
    with nogil:
        total = _perft(b, stm, castling, ep, depth)
    return total
