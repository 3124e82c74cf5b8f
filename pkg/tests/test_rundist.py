import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from chessruns import _imbed_py
from chessruns.rundist import (
    EXACT_MAX_N,
    DegenerateParameterError,
    ExactBoundError,
    RunCountQuery,
    RunDistribution,
    TrialSeries,
    bonferroni_adjust,
    brute_force_longest_run_tail,
    brute_force_longest_run_tails,
    exact_run_count_pmf,
    feller_longest_run_cdf,
    feller_longest_run_tail,
    holm_adjust,
    imbed_longest_run_tail,
    longest_run_pmf,
    longest_run_tail,
    longest_run_tail_exact,
    poisson_run_approx,
    smooth_pmf,
    solve_feller_theta,
)
from chessruns.runscan import nonoverlap_count

probs = st.floats(0.0, 1.0, allow_nan=False)


def dp_tail(n, k, p):
    """Exact P(L_n >= k) by a run-length recurrence over Fractions."""
    p = Fraction(p)
    q = 1 - p
    state = [Fraction(0)] * k
    state[0] = Fraction(1)
    for _ in range(n):
        new = [Fraction(0)] * k
        new[0] = sum(state) * q
        for s in range(1, k):
            new[s] = state[s - 1] * p
        state = new
    return 1 - sum(state)


def enum_count_pmf(n, k, x, p):
    """P(N_{n,k} = x) by listing all 2^n strings."""
    total = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        if nonoverlap_count(bits, k) == x:
            ones = sum(bits)
            total += p ** ones * (1 - p) ** (n - ones)
    return total


class TestExact:
    def test_headline_value(self):
        assert longest_run_tail_exact(63, 18, 0.5) == pytest.approx(8.96439123618531e-05, rel=1e-12)

    def test_matches_fraction_recurrence_exactly(self):
        for n, k, p in [(63, 18, "1/2"), (40, 5, "3/10"), (25, 3, "2/3"), (81, 46, "1/2")]:
            assert longest_run_tail_exact(n, k, Fraction(p), as_fraction=True) == dp_tail(n, k, Fraction(p))

    @pytest.mark.parametrize("n", range(1, 11))
    def test_count_pmf_against_enumeration(self, n):
        for k in range(1, n + 1):
            for p in (0.5, 0.3):
                for x in range(n // k + 1):
                    assert exact_run_count_pmf(n, k, x, p) == pytest.approx(enum_count_pmf(n, k, x, p), abs=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 10), st.sampled_from(["1/2", "1/3", "7/10", "1/10"]))
    def test_count_pmf_sums_to_one(self, n, k, p):
        total = sum(exact_run_count_pmf(n, k, x, Fraction(p), as_fraction=True) for x in range(n // k + 1))
        assert total == 1

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 60), st.integers(1, 12))
    def test_no_runs_iff_short_longest(self, n, k):
        # {L_n < k} and {N_{n,k} = 0} are the same event
        p = Fraction(1, 2)
        assert exact_run_count_pmf(n, k, 0, p, as_fraction=True) == 1 - longest_run_tail_exact(n, k, p, True)

    def test_enumeration_example(self):
        tails = brute_force_longest_run_tails(TrialSeries.constant(4, 0.5))
        pmf = [tails[k] - tails[k + 1] for k in range(4)] + [tails[4]]
        assert pmf[:2] == [1 / 16, 7 / 16]
        # L_4 >= 2 has probability 1/2
        assert tails[2] == 0.5

    def test_bound_enforced(self):
        with pytest.raises(ExactBoundError):
            longest_run_tail_exact(EXACT_MAX_N + 1, 10, 0.5)
        assert longest_run_tail(EXACT_MAX_N + 1, 30, 0.5) > 0

    def test_degenerate_p(self):
        assert longest_run_tail_exact(10, 3, 0) == 0.0
        assert longest_run_tail_exact(10, 3, 1) == 1.0

    def test_query_object(self):
        q = RunCountQuery(20, 4, 1, 0.5)
        assert q.evaluate() == exact_run_count_pmf(20, 4, 1, 0.5)
        with pytest.raises(ValueError):
            RunCountQuery(10, 4, 3, 0.5)


class TestImbedding:
    def test_constant_matches_exact(self, imbed):
        assert imbed.imbed_tail([0.5] * 63, 18) == pytest.approx(8.96439123618531e-05, rel=1e-10)

    def test_three_halves(self):
        assert imbed_longest_run_tail([0.5, 0.5, 0.5], 2) == 0.375

    @settings(max_examples=60, deadline=None)
    @given(st.lists(probs, min_size=1, max_size=12), st.data())
    def test_against_enumeration(self, ps, data):
        k = data.draw(st.integers(1, len(ps)))
        assert imbed_longest_run_tail(ps, k) == pytest.approx(brute_force_longest_run_tail(ps, k), abs=1e-12)

    def test_backends_agree(self, imbed):
        rng = np.random.default_rng(7)
        for _ in range(50):
            ps = rng.random(int(rng.integers(1, 80))).tolist()
            k = int(rng.integers(1, len(ps) + 1))
            assert imbed.imbed_tail(ps, k) == pytest.approx(_imbed_py.imbed_tail(ps, k), abs=1e-14)
            assert list(imbed.longest_run_tails(ps, len(ps))) == pytest.approx(
                _imbed_py.longest_run_tails(ps, len(ps)), abs=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(probs, min_size=1, max_size=30))
    def test_tail_nonincreasing_in_k(self, ps):
        tails = [imbed_longest_run_tail(ps, k) for k in range(1, len(ps) + 1)]
        assert all(a >= b - 1e-15 for a, b in zip(tails, tails[1:]))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(probs, min_size=2, max_size=25), st.integers(0, 24), st.floats(0, 1))
    def test_tail_monotone_in_each_p(self, ps, i, bump):
        assume(i < len(ps))
        raised = list(ps)
        raised[i] = max(ps[i], bump)
        for k in (1, 2, 3):
            assert imbed_longest_run_tail(raised, k) >= imbed_longest_run_tail(ps, k) - 1e-14

    def test_bad_probability(self):
        with pytest.raises(ValueError):
            TrialSeries((0.2, 1.5))


class TestPmf:
    @settings(max_examples=30, deadline=None)
    @given(st.lists(probs, min_size=0, max_size=40))
    def test_sums_to_one(self, ps):
        dist = longest_run_pmf(ps)
        assert math.fsum(dist.pmf) == pytest.approx(1.0, abs=1e-12)
        assert all(v >= 0 for v in dist.pmf)

    def test_headline_mode(self):
        dist = longest_run_pmf(TrialSeries.constant(63, 0.5))
        assert dist.mode() == 5
        assert dist.tail(18) == pytest.approx(8.96439123618531e-05, rel=1e-9)

    def test_smoothing_preserves_mass(self):
        dist = longest_run_pmf(TrialSeries.constant(30, 0.5))
        grid = smooth_pmf(dist, bandwidth=0.8, step=0.05)
        assert math.fsum(d for _, d in grid) * 0.05 == pytest.approx(1.0, abs=1e-6)
        with pytest.raises(ValueError):
            smooth_pmf(dist, bandwidth=0)

    def test_distribution_mean(self):
        assert RunDistribution(2, (0.25, 0.5, 0.25)).mean() == 1.0


class TestFeller:
    def test_large_n_value(self):
        assert feller_longest_run_tail(5540, 18, 0.5) == pytest.approx(0.0104812, abs=1e-6)

    def test_six_decimals_at_headline(self):
        assert abs(feller_longest_run_tail(63, 18, 0.5) - longest_run_tail_exact(63, 18, 0.5)) < 5e-7

    def test_theta_is_a_root(self):
        for k, p in [(18, 0.5), (5, 0.3), (3, 0.6), (2, 0.5)]:
            t = solve_feller_theta(k, p)
            q = 1 - p
            assert 1 < t < 1 / p
            assert t == pytest.approx(1 + q * p ** k * t ** (k + 1), rel=1e-12)

    def test_theta_double_root_case(self):
        # (k+1)q <= 1: the only root in [1, 1/p] is 1/p and the approximation is undefined
        assert solve_feller_theta(1, 0.5) == 2.0
        with pytest.raises(DegenerateParameterError):
            feller_longest_run_cdf(10, 1, 0.5)

    def test_open_interval(self):
        with pytest.raises(DegenerateParameterError):
            feller_longest_run_tail(10, 2, 1.0)

    @pytest.mark.parametrize("p", ["3/10", "1/2", "7/10"])
    def test_accuracy_away_from_small_n(self, p):
        worst = 0.0
        for k in range(5, 40, 3):
            for n in range(3 * k, 501, 11):
                exact = longest_run_tail_exact(n, k, Fraction(p))
                worst = max(worst, abs(feller_longest_run_tail(n, k, float(Fraction(p))) - exact))
        assert worst < 1e-4

    @pytest.mark.xfail(strict=True, reason="fails for n within a few multiples of k; see notes")
    def test_accuracy_everywhere(self):
        for p in ("1/2", "7/10"):
            for k in range(5, 16):
                for n in range(k, 2 * k):
                    exact = longest_run_tail_exact(n, k, Fraction(p))
                    assert abs(feller_longest_run_tail(n, k, float(Fraction(p))) - exact) < 1e-4


class TestPoisson:
    def test_error_shrinks(self):
        errs = []
        for n in (100, 1000, 10_000):
            k = math.ceil(math.log2(n)) + 2
            errs.append(abs(poisson_run_approx(n, k, 0.5, 0) - (1 - longest_run_tail(n, k, 0.5))))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-3

    def test_pmf_sums_to_one(self):
        assert math.fsum(poisson_run_approx(200, 4, 0.5, x) for x in range(60)) == pytest.approx(1.0)

    def test_zero_rate(self):
        assert poisson_run_approx(10, 3, 0.0, 0) == 1.0
        assert poisson_run_approx(10, 3, 0.0, 1) == 0.0


class TestMultiplicity:
    def test_bonferroni_scale_and_cap(self):
        assert bonferroni_adjust(0.0000896, 144) == pytest.approx(0.0129024)
        assert bonferroni_adjust(0.3, 10) == 1.0
        with pytest.raises(ValueError):
            bonferroni_adjust(0.1, 0)

    def test_holm_known(self):
        assert holm_adjust([0.01, 0.04, 0.03]) == pytest.approx([0.03, 0.06, 0.06])

    @settings(max_examples=100)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
    def test_holm_properties(self, ps):
        adj = holm_adjust(ps)
        m = len(ps)
        for raw, a in zip(ps, adj):
            assert raw <= a + 1e-15 <= 1.0 + 1e-15
            assert a <= bonferroni_adjust(raw, m) + 1e-15
        order = sorted(range(m), key=lambda i: ps[i])
        assert all(adj[a] <= adj[b] for a, b in zip(order, order[1:]))

    def test_holm_against_reference(self):
        from statsmodels.stats.multitest import multipletests

        rng = np.random.default_rng(3)
        for _ in range(20):
            ps = rng.random(int(rng.integers(1, 40))) ** 3
            ref = multipletests(ps, method="holm")[1]
            assert holm_adjust(ps.tolist()) == pytest.approx(ref.tolist(), abs=1e-12)
