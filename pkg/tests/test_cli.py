import json

import pytest

from braggsqueeze import io as bio
from braggsqueeze.cli import main

SMALL = """
# short grating, short pulse
grating_length = 1.0
lead_in = 2.0
lead_out = 1.0
fwhm = 20.0
peak_intensity = 20.0
gamma = 0.05
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return p


def test_run_writes_row_and_metadata(tmp_path, cfg):
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--save-fields"]) == 0
    text = (out / "result.csv").read_text()
    assert text.startswith("# config_hash=")
    rows = bio.read_csv(out / "result.csv")
    assert len(rows) == 1 and tuple(rows[0]) == bio.RUN_COLUMNS
    assert rows[0]["status"] == "ok"
    assert len(rows[0]["R_final"].replace("-", "").replace(".", "").lstrip("0")) <= 9
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["config_hash"] in text and meta["grid"]["dz"] > 0
    assert (out / "fields.bin").exists()


def test_unknown_key_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("kappa = 10\nkapa = 3\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "kapa" in capsys.readouterr().err


def test_bad_value_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("kappa = ten\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "kappa" in capsys.readouterr().err


def test_short_window_exit_3(tmp_path, cfg, capsys):
    p = tmp_path / "short.cfg"
    p.write_text(SMALL + "n_t = 300\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "residual" in capsys.readouterr().err


def test_partial_sweep_exit_4(tmp_path, cfg):
    p = tmp_path / "sweep.cfg"
    p.write_text(SMALL + "lengths = 0, 1\n")
    out = tmp_path / "sw"
    assert main(["sweep-length", "--config", str(p), "--out", str(out)]) == 4
    rows = bio.read_csv(out / "sweep_length.csv")
    assert [r["status"].split(":")[0] for r in rows] == ["config", "ok"]
    assert rows[0]["length_cm"] == "0" and rows[0]["R_final"] == "nan"
    assert (out / "sweep_length.svg").read_text().count("config_hash") >= 1


def test_sweep_bitwise_across_workers(tmp_path):
    p = tmp_path / "sweep.cfg"
    p.write_text(SMALL + "intensities = 5, 10, 15\n")
    outs = []
    for w in (1, 3):
        out = tmp_path / f"w{w}"
        assert main(["sweep-intensity", "--config", str(p), "--out", str(out),
                     "--workers", str(w)]) == 0
        outs.append(out)
    assert (outs[0] / "sweep_intensity.csv").read_bytes() == \
        (outs[1] / "sweep_intensity.csv").read_bytes()
    assert (outs[0] / "sweep_intensity.svg").read_bytes() == \
        (outs[1] / "sweep_intensity.svg").read_bytes()


def test_config_roundtrip():
    raw = bio.parse_config_text(SMALL + "intensities = 1, 2.5\n")
    cfg = bio.typed_config(raw)
    again = bio.typed_config(bio.parse_config_text(bio.config_text(cfg)))
    assert again == cfg
    assert bio.setup_from_config(cfg).grating.gamma == 0.05


def test_fmt_nine_digits():
    assert bio.fmt(1 / 3) == "0.333333333"
    assert bio.fmt(None) == "nan"
