import json
import math

import numpy as np
import pytest

from resonet import io
from resonet.bench import NoiseSpec, Trace, calibration_scenario, reference_scenario, simulate_sweep
from resonet.calib import run_pipeline
from resonet.errors import ParseError, UnsupportedFormatError
from resonet.io import (
    ConfigDocument,
    PipelineOptions,
    config_from_dict,
    config_to_dict,
    load_trace_file,
    read_config,
    read_report_json,
    read_touchstone,
    read_trace_csv,
    report_to_dict,
    scenario_from_dict,
    scenario_to_dict,
    write_report_json,
    write_stage_csvs,
    write_trace_csv,
)


@pytest.fixture(scope="module")
def calib_report():
    s = calibration_scenario()
    t = simulate_sweep(s)[0]
    return s, run_pipeline(t), run_pipeline(t, truth=s.truth)


def write(path, text):
    path.write_text(text)
    return path


# -- CSV ---------------------------------------------------------------------


def test_csv_three_rows(tmp_path):
    p = write(tmp_path / "t.csv", "freq_hz,re_s11,im_s11\n1e9,0.1,0.2\n2e9,0.3,0.4\n3e9,0.5,0.6\n")
    (t,) = read_trace_csv(p)
    assert t.port_pair == (1, 1) and len(t) == 3
    assert t.values[1] == 0.3 + 0.4j


def test_csv_two_traces_share_grid(tmp_path):
    p = write(tmp_path / "t.csv", "freq_hz,re_s11,im_s11,re_s21,im_s21\n1,0,0,1,0\n2,0,1,0,1\n")
    a, b = read_trace_csv(p)
    assert (a.port_pair, b.port_pair) == ((1, 1), (2, 1))
    assert np.array_equal(a.freqs, b.freqs)


def test_csv_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    f = np.cumsum(rng.uniform(1e3, 1e6, 500)) + 6e9
    tr = [Trace(pp, f, rng.normal(size=500) + 1j * rng.normal(size=500)) for pp in ((1, 1), (2, 1))]
    write_trace_csv(tr, tmp_path / "r.csv")
    back = read_trace_csv(tmp_path / "r.csv")
    for a, b in zip(tr, back):
        assert np.array_equal(a.freqs, b.freqs)
        assert np.array_equal(a.values, b.values)


def test_csv_duplicate_row(tmp_path):
    p = write(tmp_path / "t.csv", "freq_hz,re_s11,im_s11\n1,0,0\n2,0,0\n2,0,0\n")
    with pytest.raises(ParseError) as e:
        read_trace_csv(p)
    assert e.value.row == 4 and e.value.column == "freq_hz"


def test_csv_missing_freq(tmp_path):
    p = write(tmp_path / "t.csv", "f,re_s11,im_s11\n1,0,0\n")
    with pytest.raises(ParseError) as e:
        read_trace_csv(p)
    assert e.value.column == "freq_hz"


def test_csv_nan_cell(tmp_path):
    p = write(tmp_path / "t.csv", "freq_hz,re_s11,im_s11\n1,0,0\n2,nan,0\n")
    with pytest.raises(ParseError) as e:
        read_trace_csv(p)
    assert e.value.row == 3 and e.value.column == "re_s11"


def test_csv_bad_number(tmp_path):
    p = write(tmp_path / "t.csv", "freq_hz,re_s11,im_s11\n1,0,abc\n")
    with pytest.raises(ParseError) as e:
        read_trace_csv(p)
    assert e.value.column == "im_s11"


def test_csv_write_needs_shared_grid(tmp_path):
    a = Trace((1, 1), [1.0, 2.0], [0j, 0j])
    b = Trace((2, 1), [1.0, 3.0], [0j, 0j])
    with pytest.raises(Exception):
        write_trace_csv([a, b], tmp_path / "x.csv")


# -- Touchstone ----------------------------------------------------------------


def test_touchstone_ri(tmp_path):
    p = write(tmp_path / "a.s2p", "! comment\n# GHz S RI R 50\n6.5 0.1 0.2 0.3 0.4 0.3 0.4 0.5 0.6\n")
    tf = load_trace_file(p)
    assert tf.format == "touchstone-v1-s2p" and tf.z0 == 50
    s11, s21, s12, s22 = tf.traces
    assert s11.freqs[0] == 6.5e9 and len(s11) == 1
    assert s11.values[0] == 0.1 + 0.2j
    assert s21.port_pair == (2, 1) and s21.values[0] == 0.3 + 0.4j
    assert s22.values[0] == 0.5 + 0.6j


def test_touchstone_ma(tmp_path):
    p = write(tmp_path / "a.s2p", "# MHz S MA R 50\n100 1 0 1 90 1 90 1 180\n")
    s11, s21, _, s22 = read_touchstone(p)
    assert s11.freqs[0] == 1e8
    assert s11.values[0] == 1 + 0j
    assert abs(s21.values[0] - 1j) <= 1e-15
    assert abs(s22.values[0] + 1) <= 1e-15


def test_touchstone_db(tmp_path):
    p = write(tmp_path / "a.s2p", "# Hz S DB R 50\n1000 -6.0206 0 0 0 0 0 0 0\n")
    assert abs(read_touchstone(p)[0].values[0]) == pytest.approx(0.5, abs=1e-4)


def test_touchstone_wrapped_records(tmp_path):
    p = write(tmp_path / "a.s2p", "# GHz S RI R 50\n1 0.1 0 0.2 0\n 0.2 0 0.3 0\n2 0.4 0 0 0 0 0 0 0\n")
    tr = read_touchstone(p)
    assert len(tr[0]) == 2 and tr[3].values[0] == 0.3


@pytest.mark.parametrize("param", ["Y", "Z", "H", "G"])
def test_touchstone_unsupported(tmp_path, param):
    p = write(tmp_path / "a.s2p", f"# GHz {param} RI R 50\n1 0 0 0 0 0 0 0 0\n")
    with pytest.raises(UnsupportedFormatError):
        read_touchstone(p)


def test_unknown_extension(tmp_path):
    with pytest.raises(UnsupportedFormatError):
        load_trace_file(write(tmp_path / "a.txt", "x"))


# -- scenario and config --------------------------------------------------------


@pytest.mark.parametrize("s", [reference_scenario("hanger"), calibration_scenario()])
def test_scenario_round_trip(s):
    d = scenario_to_dict(s)
    back = scenario_from_dict(json.loads(json.dumps(d)))
    assert scenario_to_dict(back) == d
    assert back.truth == s.truth


def test_preset_reference():
    s = scenario_from_dict({"preset": "fig3-necklace", "noise": {"sigma": 1e-3, "seed": 9}})
    assert s.noise == NoiseSpec(1e-3, 9)
    assert s.truth == reference_scenario("necklace").truth


def test_config_round_trip(tmp_path):
    doc = ConfigDocument(calibration_scenario(), PipelineOptions(3.5, "transmission-hanger"), {"report": "r.json"})
    io.write_json(config_to_dict(doc), tmp_path / "c.json")
    back = read_config(tmp_path / "c.json")
    assert config_to_dict(back) == config_to_dict(doc)
    assert back.pipeline.window_k == 3.5


def test_config_bare_scenario():
    doc = config_from_dict(scenario_to_dict(reference_scenario("bridge")))
    assert doc.pipeline == PipelineOptions()


def test_config_invalid_json(tmp_path):
    with pytest.raises(ParseError):
        read_config(write(tmp_path / "c.json", "{\n  bad\n}"))


# -- reports -----------------------------------------------------------------


def test_report_keys(calib_report, tmp_path):
    _, r, _ = calib_report
    write_report_json(r, tmp_path / "r.json")
    d = read_report_json(tmp_path / "r.json")
    for k in ("omega_r_hz", "q_l", "q_i", "q_c", "tau_ns", "phi_rad", "s_off_re", "s_off_im", "stages"):
        assert k in d
    assert d["schema"] == 1
    assert "relative_errors" not in d
    assert [s["stage"] for s in d["stages"]][-1] == "extract"
    assert d["q_c"] == pytest.approx(1750, rel=0.01)


def test_report_round_trip(calib_report, tmp_path):
    _, r, _ = calib_report
    write_report_json(r, tmp_path / "r.json")
    d = read_report_json(tmp_path / "r.json")
    assert d["q_l"] == r.q_l and d["q_c"] == r.q_c and d["q_i"] == r.q_i
    assert d["tau_ns"] == r.tau * 1e9
    assert d["omega_r_hz"] == r.omega_r / (2 * math.pi)
    assert d == json.loads(json.dumps(report_to_dict(r)))


def test_report_with_truth(calib_report):
    _, _, rt = calib_report
    assert set(report_to_dict(rt)["relative_errors"]) >= {"q_l", "q_i", "q_c"}


def test_stage_csvs(calib_report, tmp_path):
    _, r, _ = calib_report
    paths = write_stage_csvs(r, tmp_path / "stages")
    names = [p.name for p in paths]
    assert names[0].startswith("00_unwrap")
    assert names[-1].endswith("_corrected.csv")
    assert all(len(read_trace_csv(p)[0]) > 0 for p in paths)
