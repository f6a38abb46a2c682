import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holeburn.config import ENV_VAR, SCHEMA, RunConfig
from holeburn.csvio import (
    read_coherence,
    read_spectrum,
    read_table,
    read_trace,
    write_coherence,
    write_spectrum,
    write_trace,
)
from holeburn.errors import ConfigError, SchemaError
from holeburn.report import Report, add_hole_t2
from holeburn.specdiff import CoherencePoint, Method

finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=1, max_size=30))
def test_trace_round_trip_bit_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    t = np.arange(len(values), dtype=float) * 1e-9
    write_trace(path, t, values, ["comment line"])
    t2, v2 = read_trace(path)
    assert t2.tobytes() == t.tobytes()
    assert v2.tobytes() == np.array(values, dtype=float).tobytes()


def test_spectrum_sweep_columns(tmp_path):
    grid = np.linspace(-1, 1, 5)
    write_spectrum(tmp_path / "s.csv", grid, {"od_B0": grid**2, "od_B1": grid + 0.1})
    x, y = read_spectrum(tmp_path / "s.csv", "od_B1")
    assert y.tobytes() == (grid + 0.1).tobytes()
    with pytest.raises(SchemaError, match="missing column"):
        read_spectrum(tmp_path / "s.csv")


def test_coherence_round_trip(tmp_path):
    pts = [CoherencePoint(0.5, 1.7, 1.1e-6, 3e-8, Method.FID), CoherencePoint(2.0, 1.7, 1.03e-6, 2e-8)]
    write_coherence(tmp_path / "c.csv", pts)
    assert read_coherence(tmp_path / "c.csv") == pts


def test_schema_errors_name_row_and_column(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# c\ntime_s,value\n0,1\n1,abc\n")
    with pytest.raises(SchemaError, match=r"line 4, column value"):
        read_trace(p)
    p.write_text("time_s,value\n0,1\n1\n")
    with pytest.raises(SchemaError, match="line 3"):
        read_trace(p)
    p.write_text("time_s,value\n1,1\n0,1\n")
    with pytest.raises(SchemaError, match="increase"):
        read_trace(p)
    p.write_text("time_s,value\n")
    with pytest.raises(SchemaError, match="no data"):
        read_table(p, ("time_s",))
    p.write_text("field_t,temperature_k,t2_s,t2_sigma_s,method\n1,1.7,1e-6,1e-8,echo\n")
    with pytest.raises(SchemaError, match="row 1"):
        read_coherence(p)
    with pytest.raises(SchemaError, match="cannot read"):
        read_trace(tmp_path / "missing.csv")


def test_config_defaults_and_override(tmp_path, monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)
    cfg = RunConfig.load()
    assert cfg["protocol"]["burn_s"] == 3.0e-4
    assert cfg["broadening"]["gamma_laser_sigma_hz"] == 5.0e4
    p = tmp_path / "c.ini"
    p.write_text("[rates]\ntb_s = 6.4e-3\n[sd]\nfrozen = c0\n")
    monkeypatch.setenv(ENV_VAR, str(p))
    cfg = RunConfig.load()
    assert cfg.rate_params().tb == 6.4e-3
    assert cfg.frozen() == ("c0",)
    assert cfg.source == str(p)


@pytest.mark.parametrize(
    "text, match",
    [
        ("[nope]\n", r"c.ini:1: unknown section"),
        ("[rates]\n\nbogus = 1\n", r"c.ini:3: \[rates\] bogus: unknown key"),
        ("[rates]\nt1_s = fast\n", r"c.ini:2: .*expected a number"),
        ("[rates]\nbeta = 2\n", "beta"),
        ("[sd]\nfrozen = a_d, zz\n", "unknown parameters"),
        ("[hyperfine]\nselection_rule = maybe\n", "maybe"),
        ("[holes]\ngrid_points = 3\n", "grid_points"),
    ],
)
def test_config_rejections(tmp_path, text, match):
    p = tmp_path / "c.ini"
    p.write_text(text)
    with pytest.raises(ConfigError, match=match):
        RunConfig.load(p)


def test_every_schema_key_is_accepted(tmp_path):
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        lines += [f"{k} = {v}" for k, v in keys.items()]
    p = tmp_path / "full.ini"
    p.write_text("\n".join(lines) + "\n")
    cfg = RunConfig.load(p)
    assert cfg.values == SCHEMA


def test_config_hash_tracks_every_byte():
    a = RunConfig.from_text("[rates]\ntb_s = 6.3e-3\n")
    b = RunConfig.from_text("[rates]\ntb_s = 6.3e-3 \n")
    c = RunConfig.from_text("[rates]\ntb_s = 6.3e-3\n")
    assert a.sha256 != b.sha256
    assert a.sha256 == c.sha256
    assert a.values == b.values


def test_report_text_and_csv_agree(tmp_path):
    r = Report("fit-hole")
    r.add("fit.fwhm_hz", 746.1e3)
    add_hole_t2(r, 746.1e3, 1e3, 200e3, 50e3)
    txt, csv_path = r.write(tmp_path / "rep.txt")
    parsed = Report.parse_text(txt.read_text())
    rows = dict(line.split(",", 1) for line in csv_path.read_text().splitlines()[1:])
    assert parsed == rows
    assert float(parsed["derived.t2_band_low_s"]) == pytest.approx(1.068e-6, rel=1e-3)
    assert float(parsed["derived.t2_band_high_s"]) == pytest.approx(1.283e-6, rel=1e-3)
    with pytest.raises(KeyError):
        r.add("fit.fwhm_hz", 1.0)


def test_report_band_unbounded_when_laser_limited():
    r = Report("fit-hole")
    add_hole_t2(r, 240e3, 1e3, 200e3, 50e3)
    assert r.get("derived.t2_band_high_s") == "inf"
