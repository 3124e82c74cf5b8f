import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chessruns.board import Side, SquareColor
from chessruns.pgn import parse_pgn_stream
from chessruns.rundist import TrialSeries, imbed_longest_run_tail, longest_run_tail_exact
from chessruns.runscan import (
    IndicatorSeries,
    collection_scan,
    extract_indicators,
    find_longest_run,
    game_run_report,
    nonoverlap_count,
)
from conftest import DATA, game_from_sans, playout

bits = st.lists(st.integers(0, 1), max_size=60)


def longest_by_groupby(x):
    return max((len(list(g)) for v, g in itertools.groupby(x) if v), default=0)


class TestRuns:
    @given(bits)
    def test_longest_matches_groupby(self, x):
        length, start, end = find_longest_run(x)
        assert length == longest_by_groupby(x)
        if length:
            assert end - start + 1 == length
            assert all(x[i - 1] for i in range(start, end + 1))
        else:
            assert start is None and end is None

    def test_earliest_run_reported(self):
        assert find_longest_run([1, 1, 0, 1, 1]) == (2, 1, 2)

    @given(bits, st.integers(1, 8))
    def test_count_zero_iff_short(self, x, k):
        assert (nonoverlap_count(x, k) == 0) == (longest_by_groupby(x) < k)

    def test_greedy_count(self):
        assert nonoverlap_count([1] * 7 + [0] + [1] * 3, 3) == 3

    def test_bad_k(self):
        with pytest.raises(ValueError):
            nonoverlap_count([1], 0)


class TestIndicators:
    def test_opening_moves(self):
        game = game_from_sans(["e4", "e5", "Nf3", "Nc6", "Bb5", "a6"])
        white_light = extract_indicators(game, Side.WHITE, SquareColor.LIGHT)
        # e4, f3 and b5 are all light squares
        assert white_light.x == (1, 1, 1)
        assert white_light.source_plies == (1, 3, 5)
        assert white_light.move_numbers == (1, 2, 3)
        assert white_light.p.probs[0] == 0.5
        black_dark = extract_indicators(game, Side.BLACK, SquareColor.DARK)
        # e5 dark, c6 light, a6 light
        assert black_dark.x == (1, 0, 0)

    def test_colours_complement(self):
        game = game_from_sans(playout(21, 90)[0])
        light = extract_indicators(game, Side.BLACK, SquareColor.LIGHT)
        dark = extract_indicators(game, Side.BLACK, SquareColor.DARK)
        assert all(a + b == 1 for a, b in zip(light.x, dark.x))
        assert all(abs(a + b - 1) < 1e-12 for a, b in zip(light.p.probs, dark.p.probs))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            IndicatorSeries(Side.WHITE, SquareColor.LIGHT, (1, 0), TrialSeries((0.5,)), (1, 3))


class TestReport:
    def test_report_fields(self):
        game = next(parse_pgn_stream(DATA / "synthetic_63.pgn"))
        series = extract_indicators(game, Side.WHITE, SquareColor.LIGHT)
        rep = game_run_report(game, Side.WHITE, SquareColor.LIGHT)
        assert rep.n == 63 == len(series)
        length, start, end = find_longest_run(series.x)
        assert rep.longest == length
        assert rep.run_span == (series.move_numbers[start - 1], series.move_numbers[end - 1])
        assert rep.p_uniform == longest_run_tail_exact(63, length, 0.5)
        assert rep.p_proxy == imbed_longest_run_tail(series.p, length)

    def test_no_moves(self):
        rep = game_run_report(game_from_sans([]), Side.WHITE, SquareColor.LIGHT)
        assert rep.n == 0 and rep.longest == 0 and rep.p_uniform == 1.0


@pytest.fixture(scope="module")
def games():
    return list(parse_pgn_stream(DATA / "random_playouts.pgn"))


class TestCollection:
    def test_bonferroni_uses_series_count(self, games):
        res = collection_scan(games, adjust="bonferroni")
        m = len(games) * 4
        assert res.summary["series"] == m
        for r in res.reports:
            assert r.adjusted["bonferroni_uniform"] == min(1.0, m * r.p_uniform)

    def test_holm_between_raw_and_bonferroni(self, games):
        res = collection_scan(games, adjust="holm")
        m = len(res.reports)
        for r in res.reports:
            assert r.p_proxy <= r.adjusted["holm_proxy"] <= min(1.0, m * r.p_proxy) + 1e-15

    def test_concatenation_flags_straddling(self, games):
        res = collection_scan(games[:3], sides=(Side.WHITE,), colors=(SquareColor.LIGHT,),
                              concatenate="per-side", query_k=3)
        (cat,) = res.concatenated
        assert cat.n == sum(r.n for r in res.reports)
        assert cat.straddles_games in (True, False)
        assert 0 <= cat.query["p_proxy"] <= 1
        assert res.summary["straddling_allowed"]

    def test_straddling_run_detected(self):
        a = game_from_sans(["e4", "e5", "Nf3"])   # white: light, light
        b = game_from_sans(["d3", "d6", "e4"])   # white: light, light
        res = collection_scan([a, b], sides=(Side.WHITE,), colors=(SquareColor.LIGHT,), concatenate="per-side")
        (cat,) = res.concatenated
        assert cat.longest == 4 and cat.straddles_games is True

    def test_all_moves_mode(self, games):
        res = collection_scan(games[:2], concatenate="all-moves")
        assert [c.side for c in res.concatenated] == ["both", "both"]
        assert res.concatenated[0].n == sum(len(g.san_moves) for g in games[:2])

    def test_errors_kept_separate(self):
        items = list(parse_pgn_stream(DATA / "search_corpus.pgn"))
        res = collection_scan(items)
        assert res.summary["errors"] == 1 and res.summary["games"] == 9

    def test_parallel_matches_serial(self, games):
        a = collection_scan(games, jobs=1)
        b = collection_scan(games, jobs=3)
        assert [r.to_dict() for r in a.reports] == [r.to_dict() for r in b.reports]

    def test_bad_options(self, games):
        with pytest.raises(ValueError):
            collection_scan(games, adjust="sidak")
        with pytest.raises(ValueError):
            collection_scan(games, concatenate="yes")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_report_pvalues_in_range(seed):
    game = game_from_sans(playout(seed, 70)[0])
    for side in Side:
        for col in SquareColor:
            rep = game_run_report(game, side, col)
            assert 0.0 <= rep.p_uniform <= 1.0 and 0.0 <= rep.p_proxy <= 1.0
