"""Pure-Python Markov chain imbedding kernel (fallback for ``_imbed``)."""

BACKEND = "python"


def imbed_tail(probs, k):
    """P(longest success run >= k) for independent trials with success probs."""
    if k < 1:
        raise ValueError("k must be >= 1")
    # state[s] = P(current run length is s and k not yet reached)
    state = [0.0] * k
    state[0] = 1.0
    absorbed = 0.0
    last = k - 1
    for p in probs:
        absorbed += state[last] * p
        fail = sum(state) * (1.0 - p)
        for s in range(last, 0, -1):
            state[s] = state[s - 1] * p
        state[0] = fail
    return absorbed


def longest_run_tails(probs, kmax, cutoff=0.0):
    """[P(L >= 1), ..., P(L >= kmax)], zero-filled once a tail drops to cutoff."""
    probs = list(probs)
    tails = [0.0] * kmax
    for k in range(1, kmax + 1):
        t = imbed_tail(probs, k)
        tails[k - 1] = t
        if t <= cutoff:
            break
    return tails
