import datetime as dt
import random

import pytest

from conftest import make_series
from signal_miner.errors import ConfigError
from signal_miner.ingest import FlairCategory, FlairClass, clean_pipeline
from signal_miner.signals import (
    DailyConsensus,
    KeywordLexicon,
    Mode,
    PostSignal,
    Verdict,
    aggregate_daily,
    class_score,
    class_score_prox,
    classify_post,
    consensus_verdict,
    enrich,
    extract_signals,
    load_lexicon,
    read_consensus,
    verdict_from_scores,
    write_consensus,
    write_enriched,
)
from signal_miner.tickers import load_universe

LEX = load_lexicon()
B, H, S = Verdict.BUY, Verdict.HOLD, Verdict.SELL
DAY = dt.date(2021, 3, 1)


def sig(verdict, symbol="AAPL", day=DAY, pid="x"):
    return PostSignal(pid, symbol, day, verdict, (0, 0, 0))


class TestLexicon:
    def test_defaults(self):
        assert LEX.buy == {"buy", "call", "calls"}
        assert LEX.hold == {"hold"}
        assert LEX.sell == {"sell", "put", "puts"}
        assert set(LEX.negators) == {("not",), ("don't",), ("do", "not")}

    def test_custom_file(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("[buy]\nbuy\nlong\n[hold]\nhold\n[sell]\nshort\n[negators]\nnever\n", encoding="utf-8")
        lex = load_lexicon(path)
        assert class_score("never long, short", B, lex) == 0
        assert class_score("never long, short", S, lex) == 1

    def test_overlap_rejected(self):
        with pytest.raises(ConfigError):
            KeywordLexicon(frozenset({"buy"}), frozenset({"buy"}), frozenset(), (("not",),))

    def test_missing_section(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("[buy]\nbuy\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_lexicon(path)


class TestClassScore:
    @pytest.mark.parametrize("text, verdict, score", [
        ("buy buy calls", B, 3),
        ("don't buy", B, 0),
        ("I bought yesterday", B, 0),
        ("do not sell, hold", S, 0),
        ("do not sell, hold", H, 1),
        ("BUY Calls", B, 2),
        ("not buy buy", B, 1),
        ("puts put sell", S, 3),
        ("do not", B, 0),
    ])
    def test_examples(self, text, verdict, score):
        from signal_miner.kernels import normalize

        assert class_score(normalize(text), verdict, LEX) == score

    def test_do_not_counts_once(self, kern):
        hits = kern.find_keywords("do not buy", LEX.classes, LEX.negators)
        assert hits == [(0, 7, 10, 0)]
        assert kern.class_counts(hits) == [0, 0, 0]


class TestProximity:
    def test_within_window(self):
        assert class_score_prox("buy $AAPL today", "AAPL", B, LEX) == 1

    def test_outside_window(self):
        assert class_score_prox("buy " + "x" * 30 + " $AAPL", "AAPL", B, LEX) == 0

    def test_window_boundary(self):
        # gap of exactly 20 characters counts, 21 does not
        assert class_score_prox("buy " + "x" * 18 + " AAPL", "AAPL", B, LEX) == 1
        assert class_score_prox("buy " + "x" * 19 + " AAPL", "AAPL", B, LEX) == 0

    def test_negation_near(self):
        assert class_score_prox("don't buy AAPL", "AAPL", B, LEX) == 0

    def test_negation_both_near(self):
        # "buy" gap 20, "not buy" gap 16: +1 - 1
        text = "AAPL " + "y" * 14 + " not buy"
        assert class_score_prox(text, "AAPL", B, LEX) == 0

    def test_can_go_negative(self):
        # phrase start gap 16 (near), word gap 21 (far): 0 - 1
        text = "AAPL " + "y" * 15 + " not buy"
        assert class_score_prox(text, "AAPL", B, LEX) == -1

    def test_phrase_far_word_near(self):
        # mention after the word; the whole phrase still touches the window
        text = "not " + "z" * 30 + " buy AAPL"
        assert class_score_prox(text, "AAPL", B, LEX) == 1

    def test_fixture_post_42(self, fixtures):
        u = load_universe(fixtures / "universe.csv")
        post = next(p for p in clean_pipeline(fixtures / "posts.jsonl") if p.id == "p042")
        assert class_score_prox(post.text, "AAPL", B, LEX, u) == 2
        assert class_score(post.text, B, LEX) == 3

    def test_ambiguous_symbol_via_universe(self, fixtures):
        u = load_universe(fixtures / "universe.csv")
        assert class_score_prox("buy F", "F", B, LEX, u) == 0
        assert class_score_prox("buy $F", "F", B, LEX, u) == 1


class TestVerdict:
    @pytest.mark.parametrize("scores, verdict", [
        ((2, 0, 1), B), ((1, 0, 1), None), ((0, 0, 0), None), ((0, 1, 0), H), ((0, 0, 4), S),
        ((-1, -1, 0), None), ((1, 1, 1), None),
    ])
    def test_argmax(self, scores, verdict):
        assert verdict_from_scores(scores) is verdict

    def test_classify_post_modes(self):
        from signal_miner.ingest import CleanPost

        post = CleanPost("p", DAY, "buy " + "x" * 30 + " AAPL sell", FlairClass(FlairCategory.PROACTIVE, "DD"))
        assert classify_post(post, "AAPL", LEX, Mode.DEFAULT).verdict is None
        p = classify_post(post, "AAPL", LEX, "proximity")
        assert p.verdict is S and p.scores == (0, 0, 1) and p.mentions == 1


class TestConsensus:
    @pytest.mark.parametrize("verdicts, expected", [
        ([B, B, S], B),
        ([B, B, B, S, S], None),
        ([S], S),
        ([B], B),
        ([H, H], None),
        ([None], None),
        ([B, B, B, S], B),
        ([S, S, S, B, B], None),
    ])
    def test_rule(self, verdicts, expected):
        (row,) = aggregate_daily([sig(v, pid=str(i)) for i, v in enumerate(verdicts)])
        assert row.consensus is expected
        assert (row.buy_n, row.sell_n) == (verdicts.count(B), verdicts.count(S))

    def test_min_posts(self):
        assert consensus_verdict(1, 0, min_posts=2) is None
        assert consensus_verdict(2, 0, min_posts=2) is B

    def test_rows_sorted_and_grouped(self):
        rows = aggregate_daily([sig(B, "MSFT"), sig(S, "AAPL", DAY + dt.timedelta(1)), sig(B, "AAPL")])
        assert [(r.symbol, r.date) for r in rows] == [("AAPL", DAY), ("AAPL", DAY + dt.timedelta(1)), ("MSFT", DAY)]

    def test_csv_round_trip(self, tmp_path):
        rows = aggregate_daily([sig(B), sig(S, "MSFT"), sig(None, "TSLA")])
        write_consensus(rows, tmp_path / "c.csv")
        assert read_consensus(tmp_path / "c.csv") == rows
        assert (tmp_path / "c.csv").read_text().splitlines()[0] == "symbol,date,buy_n,hold_n,sell_n,mentions,consensus"


class TestEnrich:
    def test_mentions_ma3(self):
        rows = [DailyConsensus("AAPL", DAY + dt.timedelta(i), 0, 0, 0, m, None) for i, m in enumerate([3, 6, 9])]
        out = enrich(rows, {}, {})
        assert [e.mentions_ma3 for e in out] == [3.0, 4.5, 6.0]
        assert out[0].below_ma30 is None

    def test_gap_days_count_as_zero(self):
        rows = [DailyConsensus("AAPL", DAY, 0, 0, 0, 6, None),
                DailyConsensus("AAPL", DAY + dt.timedelta(2), 0, 0, 0, 3, None)]
        assert [e.mentions_ma3 for e in enrich(rows, {}, {})] == [6.0, 3.0]

    def test_below_ma_and_calendar(self):
        series = make_series("AAPL", dt.date(2021, 1, 4), [110.0] * 40 + [100.0])
        day = series.last_date
        (e,) = enrich([DailyConsensus("AAPL", day, 1, 0, 0, 1, B)], {"AAPL": series}, {day: 7})
        assert e.below_ma30 is True and e.below_ma90 is None
        assert e.total_posts == 7 and e.weekday == day.weekday()

    def test_write(self, tmp_path):
        rows = [DailyConsensus("AAPL", DAY, 1, 0, 0, 2, B)]
        write_enriched(enrich(rows, {}, {DAY: 3}), tmp_path / "e.csv")
        assert (tmp_path / "e.csv").read_text().splitlines()[1] == "AAPL,2021-03-01,1,0,0,2,Buy,3,2.000,0,,"


class TestExtract:
    def test_fixture_counts(self, fixtures):
        u = load_universe(fixtures / "universe.csv")
        posts = clean_pipeline(fixtures / "posts.jsonl")
        default = aggregate_daily(extract_signals(posts, u, LEX, Mode.DEFAULT))
        prox = aggregate_daily(extract_signals(posts, u, LEX, Mode.PROXIMITY))
        buys = [r for r in default if r.consensus is B]
        assert len(buys) == 23
        assert len(prox) == len(default)
        assert sum(r.consensus is B for r in prox) <= len(buys)

    def test_parallel_matches_serial(self, fixtures):
        u = load_universe(fixtures / "universe.csv")
        posts = clean_pipeline(fixtures / "posts.jsonl")
        serial = extract_signals(posts, u, LEX, Mode.PROXIMITY)
        assert extract_signals(posts, u, LEX, Mode.PROXIMITY, workers=3, min_chunk=8) == serial

    def test_post_order_does_not_matter(self, fixtures):
        u = load_universe(fixtures / "universe.csv")
        posts = clean_pipeline(fixtures / "posts.jsonl")
        shuffled = posts[:]
        random.Random(4).shuffle(shuffled)
        assert aggregate_daily(extract_signals(shuffled, u, LEX)) == aggregate_daily(extract_signals(posts, u, LEX))
