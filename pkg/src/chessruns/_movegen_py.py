"""Pure-Python move generation kernel.

Mirrors the compiled ``_movegen`` extension function for function. Boards are
64-byte sequences indexed ``rank * 8 + file`` (a1 = 0). Piece bytes: 0 empty,
1..6 white pawn..king, 9..14 black pawn..king.

Move codes pack everything into one int::

    bits 0-2   promotion kind (0 none, 2..5 knight..queen)
    bits 3-8   destination square
    bits 9-14  origin square
    bits 15-19 flags (capture, en passant, castle K, castle Q, double push)

so ``code & SORT_MASK`` orders moves by (from, to, promotion).
"""

PAWN, KNIGHT, BISHOP, ROOK, QUEEN, KING = 1, 2, 3, 4, 5, 6
BLACK_BIT = 8

CAPTURE = 1 << 15
EN_PASSANT = 1 << 16
CASTLE_K = 1 << 17
CASTLE_Q = 1 << 18
DOUBLE_PUSH = 1 << 19
SORT_MASK = 0x7FFF

WK, WQ, BK, BQ = 1, 2, 4, 8

BACKEND = "python"


def _build_tables():
    knight, king, rays = [], [], []
    kd = ((1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2))
    gd = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
    # 0-3 orthogonal, 4-7 diagonal
    rd = ((0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (-1, 1), (1, -1), (-1, -1))
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        knight.append(tuple((r + dr) * 8 + f + df for df, dr in kd
                            if 0 <= f + df < 8 and 0 <= r + dr < 8))
        king.append(tuple((r + dr) * 8 + f + df for df, dr in gd
                          if 0 <= f + df < 8 and 0 <= r + dr < 8))
        per_dir = []
        for df, dr in rd:
            ray = []
            ff, rr = f + df, r + dr
            while 0 <= ff < 8 and 0 <= rr < 8:
                ray.append(rr * 8 + ff)
                ff += df
                rr += dr
            per_dir.append(tuple(ray))
        rays.append(tuple(per_dir))
    return tuple(knight), tuple(king), tuple(rays)


KNIGHT_TARGETS, KING_TARGETS, RAYS = _build_tables()

# rights that survive a move touching this square
CASTLE_KEEP = [15] * 64
CASTLE_KEEP[4] = 15 & ~(WK | WQ)
CASTLE_KEEP[7] = 15 & ~WK
CASTLE_KEEP[0] = 15 & ~WQ
CASTLE_KEEP[60] = 15 & ~(BK | BQ)
CASTLE_KEEP[63] = 15 & ~BK
CASTLE_KEEP[56] = 15 & ~BQ

PROMOTIONS = (KNIGHT, BISHOP, ROOK, QUEEN)


def attacked(b, sq, by):
    """True if side ``by`` (0 white, 1 black) attacks square ``sq``."""
    base = by << 3
    f, r = sq & 7, sq >> 3
    if by == 0:
        if r > 0:
            if f > 0 and b[sq - 9] == PAWN:
                return True
            if f < 7 and b[sq - 7] == PAWN:
                return True
    elif r < 7:
        pawn = BLACK_BIT | PAWN
        if f > 0 and b[sq + 7] == pawn:
            return True
        if f < 7 and b[sq + 9] == pawn:
            return True
    knight = base | KNIGHT
    for t in KNIGHT_TARGETS[sq]:
        if b[t] == knight:
            return True
    king = base | KING
    for t in KING_TARGETS[sq]:
        if b[t] == king:
            return True
    rook, bishop, queen = base | ROOK, base | BISHOP, base | QUEEN
    rays = RAYS[sq]
    for d in range(8):
        slider = rook if d < 4 else bishop
        for t in rays[d]:
            pc = b[t]
            if pc:
                if pc == slider or pc == queen:
                    return True
                break
    return False


def in_check(board, side):
    b = board if isinstance(board, list) else list(board)
    return attacked(b, b.index((side << 3) | KING), 1 - side)


def _pseudo(b, stm, castling, ep):
    out = []
    add = out.append
    for sq in range(64):
        pc = b[sq]
        if not pc or (pc >> 3) != stm:
            continue
        kind = pc & 7
        src = sq << 9
        if kind == PAWN:
            step = 8 if stm == 0 else -8
            start_rank = 1 if stm == 0 else 6
            last_rank = 7 if stm == 0 else 0
            to = sq + step
            if b[to] == 0:
                if to >> 3 == last_rank:
                    for pr in PROMOTIONS:
                        add(src | (to << 3) | pr)
                else:
                    add(src | (to << 3))
                    if sq >> 3 == start_rank and b[to + step] == 0:
                        add(src | ((to + step) << 3) | DOUBLE_PUSH)
            f = sq & 7
            for df in (-1, 1):
                if not 0 <= f + df < 8:
                    continue
                to = sq + step + df
                tgt = b[to]
                if tgt and (tgt >> 3) != stm:
                    if to >> 3 == last_rank:
                        for pr in PROMOTIONS:
                            add(src | (to << 3) | pr | CAPTURE)
                    else:
                        add(src | (to << 3) | CAPTURE)
                elif to == ep and tgt == 0:
                    add(src | (to << 3) | CAPTURE | EN_PASSANT)
        elif kind == KNIGHT or kind == KING:
            for to in (KNIGHT_TARGETS[sq] if kind == KNIGHT else KING_TARGETS[sq]):
                tgt = b[to]
                if tgt == 0:
                    add(src | (to << 3))
                elif (tgt >> 3) != stm:
                    add(src | (to << 3) | CAPTURE)
        else:
            lo, hi = (0, 4) if kind == ROOK else (4, 8) if kind == BISHOP else (0, 8)
            rays = RAYS[sq]
            for d in range(lo, hi):
                for to in rays[d]:
                    tgt = b[to]
                    if tgt == 0:
                        add(src | (to << 3))
                    else:
                        if (tgt >> 3) != stm:
                            add(src | (to << 3) | CAPTURE)
                        break
    _castles(b, stm, castling, add)
    return out


def _castles(b, stm, castling, add):
    opp = 1 - stm
    if stm == 0:
        if b[4] != KING or not castling & (WK | WQ):
            return
        if castling & WK and b[5] == 0 and b[6] == 0 and b[7] == ROOK:
            if not (attacked(b, 4, opp) or attacked(b, 5, opp) or attacked(b, 6, opp)):
                add((4 << 9) | (6 << 3) | CASTLE_K)
        if castling & WQ and b[3] == 0 and b[2] == 0 and b[1] == 0 and b[0] == ROOK:
            if not (attacked(b, 4, opp) or attacked(b, 3, opp) or attacked(b, 2, opp)):
                add((4 << 9) | (2 << 3) | CASTLE_Q)
    else:
        king, rook = BLACK_BIT | KING, BLACK_BIT | ROOK
        if b[60] != king or not castling & (BK | BQ):
            return
        if castling & BK and b[61] == 0 and b[62] == 0 and b[63] == rook:
            if not (attacked(b, 60, opp) or attacked(b, 61, opp) or attacked(b, 62, opp)):
                add((60 << 9) | (62 << 3) | CASTLE_K)
        if castling & BQ and b[59] == 0 and b[58] == 0 and b[57] == 0 and b[56] == rook:
            if not (attacked(b, 60, opp) or attacked(b, 59, opp) or attacked(b, 58, opp)):
                add((60 << 9) | (58 << 3) | CASTLE_Q)


def make(b, code):
    """Play ``code`` on the mutable board list ``b`` (placement only)."""
    fr = (code >> 9) & 63
    to = (code >> 3) & 63
    promo = code & 7
    pc = b[fr]
    b[fr] = 0
    if code & EN_PASSANT:
        b[to - 8 if pc < BLACK_BIT else to + 8] = 0
    if promo:
        pc = (pc & BLACK_BIT) | promo
    b[to] = pc
    if code & CASTLE_K:
        b[fr + 1] = b[fr + 3]
        b[fr + 3] = 0
    elif code & CASTLE_Q:
        b[fr - 1] = b[fr - 4]
        b[fr - 4] = 0


def next_state(code, castling):
    """Castling rights and en passant target after ``code``."""
    fr = (code >> 9) & 63
    to = (code >> 3) & 63
    castling &= CASTLE_KEEP[fr] & CASTLE_KEEP[to]
    ep = (fr + to) >> 1 if code & DOUBLE_PUSH else -1
    return castling, ep


def _legal(b, stm, castling, ep):
    king = (stm << 3) | KING
    ksq = b.index(king)
    opp = 1 - stm
    out = []
    for code in _pseudo(b, stm, castling, ep):
        nb = b[:]
        make(nb, code)
        fr = (code >> 9) & 63
        k = (code >> 3) & 63 if fr == ksq else ksq
        if not attacked(nb, k, opp):
            out.append(code)
    return out


def legal_moves(board, stm, castling, ep):
    """Legal move codes sorted by (from, to, promotion)."""
    out = _legal(list(board), stm, castling, ep)
    out.sort(key=lambda c: c & SORT_MASK)
    return out


def _perft(b, stm, castling, ep, depth):
    moves = _legal(b, stm, castling, ep)
    if depth == 1:
        return len(moves)
    total = 0
    for code in moves:
        nb = b[:]
        make(nb, code)
        c2, ep2 = next_state(code, castling)
        total += _perft(nb, 1 - stm, c2, ep2, depth - 1)
    return total


def perft(board, stm, castling, ep, depth):
    if depth == 0:
        return 1
    return _perft(list(board), stm, castling, ep, depth)
