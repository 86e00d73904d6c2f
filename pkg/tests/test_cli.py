import datetime as dt
import filecmp
import shutil
import subprocess
import sys

import pytest

from signal_miner.cli import main
from signal_miner.config import RunConfig, UsageError, build_config, parse_settings, read_config_file
from signal_miner.signals import Mode, Verdict, read_consensus


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def cfg_args(fixtures, tmp_path):
    return ["--config", fixtures / "run.cfg", "--out-dir", tmp_path / "out"]


class TestConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.study_window == (dt.date(2018, 1, 1), dt.date(2022, 3, 22))
        assert cfg.horizons == (7, 30, 90) and cfg.quantile == 0.15

    def test_file_then_flags(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("start = 2020-01-01\nend = 2020-12-31\nposts = data/p.jsonl\nmode = proximity\n",
                        encoding="utf-8")
        cfg = build_config(read_config_file(path), parse_settings({"end": "2020-06-30"}))
        assert cfg.start == dt.date(2020, 1, 1) and cfg.end == dt.date(2020, 6, 30)
        assert cfg.posts == tmp_path / "data" / "p.jsonl"
        assert cfg.mode is Mode.PROXIMITY

    @pytest.mark.parametrize("settings", [
        {"start": "2021-02-30"},
        {"horizons": "7,x"},
        {"conditions": "rsi14"},
        {"quantile": "0"},
        {"mode": "fuzzy"},
        {"colour": "blue"},
        {"split": "2021-01-01,2020-01-01"},
        {"start": "2022-01-01", "end": "2021-01-01"},
        {"threads": "0"},
    ])
    def test_rejects(self, settings):
        with pytest.raises(UsageError):
            build_config(parse_settings(settings))

    def test_thread_cap(self, monkeypatch):
        monkeypatch.setenv("SIGNAL_MINER_THREADS", "2")
        assert RunConfig(threads=8).workers == 2
        monkeypatch.setenv("SIGNAL_MINER_THREADS", "many")
        with pytest.raises(UsageError):
            RunConfig().workers


class TestExitCodes:
    def test_missing_posts_is_usage_error(self, tmp_path, capsys):
        assert run("ingest", "--out-dir", tmp_path) == 2
        assert "--posts" in capsys.readouterr().err

    def test_unknown_condition(self, cfg_args):
        assert run("backtest", *cfg_args, "--conditions", "ma30,bollinger") == 2

    def test_no_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            run()
        assert exc.value.code == 2

    def test_data_error(self, fixtures, tmp_path, capsys):
        bad = tmp_path / "prices.csv"
        bad.write_text("symbol,date,open,high,low,close,volume\nA,2021-01-04,1,1,2,1,0\n", encoding="utf-8")
        assert run("top-stocks", "--prices", bad, "--out-dir", tmp_path) == 1
        assert "prices.csv:2" in capsys.readouterr().err

    def test_missing_file_is_data_error(self, tmp_path):
        assert run("ingest", "--posts", tmp_path / "nope.jsonl", "--out-dir", tmp_path) == 1

    def test_console_script_module(self, fixtures, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "signal_miner.cli", "ingest", "--posts",
                               str(fixtures / "posts.jsonl"), "--out-dir", str(tmp_path)],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.startswith("200 read, 117 retained")


class TestStages:
    def test_ingest_idempotent(self, cfg_args, tmp_path, capsys):
        assert run("ingest", *cfg_args) == 0
        first = (tmp_path / "out" / "posts.jsonl").read_bytes()
        assert run("ingest", *cfg_args) == 0
        assert (tmp_path / "out" / "posts.jsonl").read_bytes() == first
        out = capsys.readouterr().out.splitlines()
        assert out[0] == out[1] and out[0].startswith("200 read, 117 retained")

    def test_signals_modes(self, cfg_args, tmp_path):
        assert run("signals", *cfg_args) == 0
        assert run("signals", *cfg_args, "--mode", "proximity") == 0
        default = read_consensus(tmp_path / "out" / "consensus.csv")
        prox = read_consensus(tmp_path / "out" / "consensus_proximity.csv")
        assert sum(r.consensus is Verdict.BUY for r in default) == 23
        assert len(prox) <= len(default)
        assert sum(r.consensus is Verdict.BUY for r in prox) <= 23
        assert (tmp_path / "out" / "enriched.csv").exists()

    def test_signals_empty_universe(self, fixtures, tmp_path, caplog):
        empty = tmp_path / "u.csv"
        empty.write_text("symbol,name,sector,ambiguous\n", encoding="utf-8")
        assert run("signals", "--posts", fixtures / "posts.jsonl", "--universe", empty, "--out-dir", tmp_path) == 0
        assert (tmp_path / "consensus.csv").read_text() == "symbol,date,buy_n,hold_n,sell_n,mentions,consensus\n"
        assert "no symbols" in caplog.text

    def test_analysts(self, cfg_args, tmp_path, capsys):
        assert run("analysts", *cfg_args) == 0
        assert "12 Buy, 7 Hold, 1 Sell, 0 Unknown" in capsys.readouterr().out

    def test_firms_filter(self, cfg_args, tmp_path, capsys):
        firms = tmp_path / "firms.txt"
        firms.write_text("Beta Capital\n", encoding="utf-8")
        assert run("analysts", *cfg_args, "--firms", firms) == 0
        assert "firms (1): Beta Capital" in capsys.readouterr().out

    def test_backtest_split(self, cfg_args, tmp_path):
        assert run("backtest", *cfg_args, "--split", "2021-01-01") == 0
        summary = (tmp_path / "out" / "summary.md").read_text()
        assert "## Period pre-hype" in summary and "## Period post-hype" in summary
        rows = (tmp_path / "out" / "metrics_split.csv").read_text().splitlines()
        assert rows[0].startswith("period,source")
        assert any(r.startswith("pre-hype,WSB,none,7,0,0,n/a,n/a") for r in rows)

    def test_backtest_from_caches(self, cfg_args, fixtures, tmp_path):
        out = tmp_path / "out"
        for stage in ("ingest", "signals", "analysts"):
            assert run(stage, *cfg_args) == 0
        assert run("backtest", "--universe", fixtures / "universe.csv", "--prices", fixtures / "prices.csv",
                   "--start", "2021-01-01", "--end", "2021-09-30", "--out-dir", out) == 0
        for name in ("metrics.csv", "detection.csv", "sectors.csv"):
            assert (out / name).read_bytes() == (fixtures / "golden" / name).read_bytes()

    def test_top_stocks_and_portfolio(self, cfg_args, tmp_path):
        assert run("top-stocks", *cfg_args) == 0
        lines = (tmp_path / "out" / "top_stocks.csv").read_text().splitlines()
        assert lines[0] == "symbol,total_change,median_3m_change,top_by_total,top_by_median" and len(lines) == 6
        assert run("portfolio", *cfg_args) == 0
        assert (tmp_path / "out" / "sectors.csv").exists()


def test_determinism_with_workers(cfg_args, tmp_path, monkeypatch):
    monkeypatch.delenv("SIGNAL_MINER_THREADS", raising=False)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("backtest", *cfg_args[:2], "--out-dir", a, "--threads", 4, "--split", "2021-05-01") == 0
    assert run("backtest", *cfg_args[:2], "--out-dir", b, "--threads", 4, "--split", "2021-05-01") == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert mismatch == [] and errors == []
    shutil.rmtree(a)
