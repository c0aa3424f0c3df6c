import csv
import io
import subprocess
import sys

import pytest

from ofdm_svr.cli import main
from ofdm_svr.harness import CSV_HEADER

SMALL = "snr_db = 10, 20\nsymbols_per_frame = 14\nframes_per_point = 1\n"


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "scenario.cfg"
    path.write_text(SMALL)
    return path


def test_writes_csv(cfg_file, tmp_path):
    out = tmp_path / "out.csv"
    assert main(["--config", str(cfg_file), "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + 2 * 3


def test_stdout_and_overrides(cfg_file, capsys):
    assert main(["--config", str(cfg_file), "--estimators", "svr", "--seed", "42"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["method"] for r in rows] == ["svr", "svr"]
    assert {r["seed"] for r in rows} == {"42"}


def test_seed_changes_output(cfg_file, tmp_path):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    main(["--config", str(cfg_file), "--out", str(a), "--seed", "1"])
    main(["--config", str(cfg_file), "--out", str(b), "--seed", "1"])
    main(["--config", str(cfg_file), "--out", str(c), "--seed", "2"])
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()


def test_dump_channel(cfg_file, tmp_path):
    dump = tmp_path / "h.csv"
    assert main(["--config", str(cfg_file), "--estimators", "", "--out", str(tmp_path / "o.csv"),
                 "--dump-channel", str(dump)]) == 0
    assert dump.read_text().startswith("symbol_index,subcarrier,magnitude,phase\n")
    assert len(dump.read_text().splitlines()) == 1 + 14 * 301


@pytest.mark.parametrize("args,code", [
    ([], 2),
    (["--config", "/nonexistent/cfg"], 1),
    (["--preset", "paper-table3", "--estimators", "mmse"], 1),
])
def test_errors(args, code, capsys):
    assert main(args) == code
    assert "simulate:" in capsys.readouterr().err


def test_unknown_key(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("snr_db = 10\nframes = 3\n")
    assert main(["--config", str(bad)]) == 1
    assert "unknown key 'frames'" in capsys.readouterr().err


def test_bad_preset_name():
    with pytest.raises(SystemExit) as info:
        main(["--preset", "nope"])
    assert info.value.code != 0


def test_module_entry_point(cfg_file, tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run([sys.executable, "-m", "ofdm_svr", "--config", str(cfg_file),
                           "--estimators", "ls", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(out.read_text().splitlines()) == 3
