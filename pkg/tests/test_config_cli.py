import json

import numpy as np
import pytest

from synthcorr.cli import main
from synthcorr.config import ConfigError, default_config, dump_config, parse_config_text
from synthcorr.io import fmt, read_csv, write_csv

SECOND = """
[protocol]
order = second
[errors]
delta_theta = 0.04
inject_pulse_error = true
readout_sigma = 1e-3
seed = 11
[sweep]
tau_count = 8
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# ----------------------------------------------------------------- config

def test_default_config():
    cfg = default_config()
    assert cfg.experiment.J_CH == 129.6
    assert len(cfg.tau_grid) == 40 and np.isclose(cfg.tau_grid[-1], 78e-6)


@pytest.mark.parametrize("text", [
    "[bogus]\nx = 1\n",
    "[experiment]\nJ = 1\n",
    "[experiment]\nJ_CH = abc\n",
    "[experiment]\nJ_CH = -1\n",
    "[protocol]\norder = sixth\n",
    "[protocol]\norder = custom\n",
    "[protocol]\nmethod = fast\n",
    "[sweep]\ntau_count = 0\n",
    "[budget]\ntheta = 3\n",
    "[errors]\ninject_pulse_error = maybe\n",
    "no section header\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_config_preset_sigma():
    cfg = parse_config_text("[errors]\nreadout_sigma = preset\n")
    assert cfg.readout_preset and cfg.errors.readout_sigma == 0.0


def test_dump_config_round_trip():
    cfg = parse_config_text(SECOND.replace("order = second", "order = second\ntaus = 1e-6 2e-6"))
    assert cfg.raw["protocol"]["taus"] == (1e-6, 2e-6)
    again = parse_config_text(dump_config(cfg.as_dict()))
    assert again.as_dict() == cfg.as_dict()


# --------------------------------------------------------------------- io

def test_csv_precision_and_metadata(tmp_path):
    p = tmp_path / "x.csv"
    write_csv(p, {"a": np.array([0.1, 1 / 3]), "b": np.array([1e-300, -2.5])}, {"k": {"v": 1}})
    meta, cols = read_csv(p)
    assert meta["k"] == {"v": 1}
    assert cols["a"][1] == 1 / 3 and cols["b"][0] == 1e-300
    assert fmt(0.1) == "0.10000000000000001"
    assert not any(q.name.startswith(".x.csv") for q in tmp_path.iterdir())


# -------------------------------------------------------------------- cli

def test_verify_table2_command(capsys):
    assert main(["verify-table2"]) == 0
    assert capsys.readouterr().out.count("ok") == 16
    assert main(["synthesize", "--verify-table2"]) == 0


def test_synthesize_element(capsys):
    assert main(["synthesize", "--element", "Pxx"]) == 0
    out = capsys.readouterr().out.split("\n")
    w = {line.split()[0]: float(line.split()[1]) for line in out[:16]}
    assert np.isclose(w["R0"], 0.5) and np.isclose(w["Rx+90"], 0.25) and np.isclose(w["Ry+90"], -0.25)


def test_synthesize_identity_matrix(tmp_path, capsys):
    m = _write(tmp_path, "m.txt", "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n")
    out = tmp_path / "w.csv"
    assert main(["synthesize", "--matrix", m, "--output", str(out)]) == 0
    _, cols = read_csv(out)
    assert np.isclose(cols["weight"][0], 1.0) and np.allclose(cols["weight"][1:], 0, atol=1e-12)


def test_synthesize_bad_input_exit_codes(tmp_path):
    assert main(["synthesize", "--matrix", _write(tmp_path, "m.txt", "1 2\n3 4\n")]) == 2
    assert main(["synthesize", "--matrix", _write(tmp_path, "n.txt", "a b c d\n" * 4)]) == 2
    assert main(["synthesize", "--element", "Pqq"]) == 2
    assert main(["synthesize", "--matrix", str(tmp_path / "missing.txt")]) == 4
    # a residual above the tolerance is a verification failure
    assert main(["synthesize", "--element", "Pxx", "--tol", "-1"]) == 3


def test_simulate_writes_sweep_and_target(tmp_path, capsys):
    cfg = _write(tmp_path, "c.ini", SECOND)
    out = tmp_path / "s.csv"
    assert main(["simulate", cfg, "--output", str(out)]) == 0
    meta, cols = read_csv(out)
    assert list(cols) == ["tau21", "signal", "sigma"] and len(cols["signal"]) == 8
    assert np.allclose(cols["sigma"], 1e-3)
    tmeta, tcols = read_csv(tmp_path / "s.target.csv")
    assert "delta_th" in tmeta and set(tcols) == {"tau21", "target", "exact"}


def test_simulate_is_reproducible_from_embedded_metadata(tmp_path):
    cfg = _write(tmp_path, "c.ini", SECOND)
    a, b, c = (tmp_path / f"{n}.csv" for n in "abc")
    assert main(["simulate", cfg, "--output", str(a)]) == 0
    assert main(["simulate", cfg, "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    meta, _ = read_csv(a)
    cfg2 = _write(tmp_path, "c2.ini", dump_config(meta["config"]))
    assert main(["simulate", cfg2, "--output", str(c)]) == 0
    assert a.read_bytes() == c.read_bytes()


def test_simulate_custom_channels(tmp_path):
    chans = _write(tmp_path, "ch.txt", "0.5 Ry+90\n0.5 Ry-90\n---\n1 Ry+90\n")
    cfg = _write(tmp_path, "c.ini", f"[protocol]\norder = custom\nchannel_file = {chans}\ntaus = 0 0\n"
                                     "[sweep]\ntau_count = 4\n")
    ref = _write(tmp_path, "r.ini", "[sweep]\ntau_count = 4\n")
    assert main(["simulate", cfg, "--output", str(tmp_path / "c.csv")]) == 0
    assert main(["simulate", ref, "--output", str(tmp_path / "r.csv")]) == 0
    assert np.allclose(read_csv(tmp_path / "c.csv")[1]["signal"], read_csv(tmp_path / "r.csv")[1]["signal"])


def test_simulate_custom_channel_errors(tmp_path):
    chans = _write(tmp_path, "ch.txt", "0.5 Qy\n")
    cfg = _write(tmp_path, "c.ini", f"[protocol]\norder = custom\nchannel_file = {chans}\n")
    assert main(["simulate", cfg, "--output", str(tmp_path / "x.csv")]) == 2
    cfg = _write(tmp_path, "d.ini", f"[protocol]\norder = custom\nchannel_file = {tmp_path / 'none.txt'}\n")
    assert main(["simulate", cfg, "--output", str(tmp_path / "x.csv")]) == 4


def test_simulate_2d_writes_matrix_and_spectrum(tmp_path, capsys):
    cfg = _write(tmp_path, "c.ini", "[protocol]\norder = fourth\n[sweep]\ntau_count = 8\ntau43_count = 8\n")
    assert main(["simulate", cfg, "--2d", "--output", str(tmp_path / "m.csv")]) == 0
    assert (tmp_path / "m.spectrum.csv").exists()
    assert "peak" in capsys.readouterr().out
    assert main(["simulate", _write(tmp_path, "s.ini", "[sweep]\ntau_count = 4\n"), "--2d"]) == 2


def test_budget_reports_optimum(tmp_path, capsys):
    cfg = _write(tmp_path, "b.ini", "[errors]\nreadout_sigma = preset\n[budget]\ntheta = 2\n")
    out = tmp_path / "b.csv"
    assert main(["budget", cfg, "--output", str(out)]) == 0
    meta, cols = read_csv(out)
    assert meta["interior_minimum"] is True
    assert np.isclose(meta["dt_opt"], meta["dt_opt_numeric"], rtol=1e-4)
    assert list(cols) == ["dt", "delta_th", "delta_pulse", "delta_evo", "delta_r", "delta_tot"]


def test_budget_without_readout_noise_has_no_interior_minimum(tmp_path, capsys):
    cfg = _write(tmp_path, "b.ini", "[budget]\ntheta = 4\n")
    out = tmp_path / "b.csv"
    assert main(["budget", cfg, "--output", str(out)]) == 0
    meta, cols = read_csv(out)
    assert meta["interior_minimum"] is False
    assert np.all(np.diff(cols["delta_tot"]) > 0)
    assert "no interior minimum" in capsys.readouterr().out


def test_budget_io_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = _write(tmp_path, "b.ini", "[budget]\ntheta = 2\n")
    assert main(["budget", cfg, "--output", str(blocker / "x.csv")]) == 4
    assert main(["budget", str(tmp_path / "missing.ini")]) == 4
    assert main(["budget", _write(tmp_path, "bad.ini", "[budget]\nfoo = 1\n")]) == 2


def test_oracle_command(capsys):
    assert main(["oracle", "+-", "0", "10e-6"]) == 0
    out = capsys.readouterr().out
    assert "closed form" in out
    assert main(["oracle", "-+", "0", "10e-6"]) == 0
    assert "= 0" in capsys.readouterr().out
    assert main(["oracle", "+x", "0", "1e-6"]) == 2
    assert main(["oracle", "+-", "0"]) == 2


def test_oracle_fourth_order_ignores_tau32(capsys):
    vals = []
    for t32 in ("0", "7e-6", "20e-6"):
        t3 = float(t32) + 6e-6
        assert main(["oracle", "+--+", "0", "6e-6", repr(t3), repr(t3 + 14e-6)]) == 0
        vals.append(float(capsys.readouterr().out.split("\n")[0].split("=")[1]))
    assert np.ptp(vals) < 1e-10 * abs(vals[0])


def test_unknown_command_is_config_error():
    assert main(["frobnicate"]) == 2
