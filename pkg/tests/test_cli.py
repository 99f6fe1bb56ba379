from pathlib import Path

import orjson
import pytest

from harness import ENGINE_VERSION
from harness.cli import ScanConfig, main
from space_cache import clear_memory_cache

CURVES = str(Path(__file__).resolve().parents[1] / "data" / "curves.jsonl")


def _scan(tmp_path, lo, hi, name="report.jsonl", *extra):
    out = tmp_path / name
    code = main(["-q", "scan", "--from", str(lo), "--to", str(hi), "--out", str(out),
                 "--cache", str(tmp_path / "cache"), "--curves", CURVES, *extra])
    return code, out


def _lines(path):
    return [orjson.loads(x) for x in path.read_bytes().splitlines()]


def test_scan_level_11(tmp_path):
    code, out = _scan(tmp_path, 11, 11)
    assert code == 0
    lines = _lines(out)
    assert [l["kind"] for l in lines] == ["form", "summary"]
    assert lines[0]["data"]["lratio"] == "1/5"
    assert lines[0]["data"]["curve"] == "11a1"
    assert lines[-1]["data"]["pairs"] == 0
    assert (tmp_path / "cache" / "level_00011.v1.json").exists()


def test_scan_genus_zero_levels(tmp_path):
    code, out = _scan(tmp_path, 1, 10)
    assert code == 0
    lines = _lines(out)
    assert [l["kind"] for l in lines] == ["summary"]
    assert lines[0]["data"]["pairs"] == 0
    assert lines[0]["data"]["forms"] == 0


def test_scan_is_deterministic_across_worker_counts(tmp_path):
    code1, first = _scan(tmp_path, 11, 20, "one.jsonl", "--threads", "1")
    code2, second = _scan(tmp_path, 11, 20, "two.jsonl", "--threads", "2")
    assert code1 == code2 == 0
    assert first.read_bytes() == second.read_bytes()


@pytest.mark.parametrize("argv", [
    ["scan", "--bogus"],
    ["scan", "--from", "5", "--to", "3", "--out", "x.jsonl"],
    ["scan", "--from", "1", "--to", "3", "--p-max", "2", "--out", "x.jsonl"],
    ["scan", "--from", "1", "--to", "3", "--safety", "0", "--out", "x.jsonl"],
    ["scan", "--from", "one", "--to", "3", "--out", "x.jsonl"],
    ["inspect"],
])
def test_bad_arguments_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_curve_file_exits_3(tmp_path):
    code = main(["-q", "scan", "--from", "11", "--to", "11", "--out", str(tmp_path / "r.jsonl"),
                 "--curves", str(tmp_path / "missing.jsonl")])
    assert code == 3


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert ENGINE_VERSION in capsys.readouterr().out


def test_inspect_genus_zero(tmp_path, capsys):
    assert main(["-q", "inspect", "1", "--cache", str(tmp_path)]) == 0
    assert "genus 0, nothing to show" in capsys.readouterr().out


def test_inspect_level_11(tmp_path, capsys):
    assert main(["-q", "inspect", "11", "--eigenvalues", "7", "--cache", str(tmp_path), "--curves", CURVES]) == 0
    out = capsys.readouterr().out
    assert "winding denominator 5" in out
    assert "1/5" in out
    assert "a2" in out and "-2" in out
    assert "11a1" in out
    assert "sha_an 1/1" in out


def test_scan_config_defaults(monkeypatch):
    monkeypatch.setenv("MODVIS_THREADS", "4")
    cfg = ScanConfig(n_from=1, n_to=2, out="r.jsonl")
    assert cfg.threads == 4
    assert cfg.p_max == 13
    assert cfg.safety == 3


def test_level_over_budget_fails_the_scan(tmp_path, monkeypatch):
    monkeypatch.setenv("MODVIS_MAX_DIM", "10")
    clear_memory_cache([11])
    code, out = _scan(tmp_path, 11, 11)
    clear_memory_cache([11])
    assert code == 1
    lines = _lines(out)
    assert [l["kind"] for l in lines] == ["error", "summary"]
    assert lines[0]["data"]["error"].startswith("LevelTooLarge")
    assert lines[-1]["data"]["levels_with_errors"] == 1


def test_inspect_with_bad_prime_eigenvalues(tmp_path, capsys):
    assert main(["-q", "inspect", "53", "--eigenvalues", "7", "--cache", str(tmp_path), "--curves", CURVES]) == 0
    assert "53a1" in capsys.readouterr().out
