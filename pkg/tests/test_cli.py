import json
import subprocess
import sys

import numpy as np
import pytest

from qdelay import MHZ, reflection_weak
from qdelay.cli import main
from qdelay.io import read_table

COMMANDS = ["spectrum", "delay-map", "pulse", "pulse-sweep", "fit-circle", "fit-spectrum",
            "fit-power", "fit-two-tone", "features"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def grid(path):
    return read_table(str(path))


def row_at(table, axis1, dp):
    i = np.nonzero((table["axis1"] == axis1) & (table["delta_p_mhz"] == dp))[0]
    return {k: v[i[0]] for k, v in table.items()}


@pytest.fixture
def weak_csv(tmp_path, dev2):
    f = np.linspace(-8, 8, 321)
    r = reflection_weak(dev2, f * MHZ)
    path = tmp_path / "weak.csv"
    with open(path, "w") as fh:
        fh.write("freq_mhz,re_r,im_r\n")
        for x, z in zip((f + 4761.62).tolist(), r.tolist()):
            fh.write(f"{x!r},{z.real!r},{z.imag!r}\n")
    return path


class TestSpectrum:
    def test_resonant_delay(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        assert run(capsys, "spectrum", "--device", "device2", "-o", str(out))[0] == 0
        row = row_at(grid(out), -np.inf, 0.0)
        assert 274.0 <= row["tau_d_ns"] <= 275.0
        assert row["singular"] == 0

    def test_fast_light_device(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        run(capsys, "spectrum", "--device", "device1a", "--span-mhz", "20", "-o", str(out))
        t = grid(out)
        assert row_at(t, -np.inf, 0.0)["tau_d_ns"] == pytest.approx(-19.4, abs=0.05)
        pos = t["delta_p_mhz"] > 0
        crossing = t["delta_p_mhz"][pos][np.nonzero(np.diff(np.sign(t["tau_d_ns"][pos])))[0][0]]
        assert crossing == pytest.approx(7.557, abs=0.03)

    def test_uncoupled_atom(self, capsys, tmp_path):
        cfg = tmp_path / "dark.cfg"
        cfg.write_text("omega_10_mhz = 5000\ngamma_r_10_mhz = 0\ngamma_10_mhz = 1\n")
        out = tmp_path / "s.csv"
        assert run(capsys, "spectrum", "--device", str(cfg), "-o", str(out))[0] == 0
        t = grid(out)
        np.testing.assert_array_equal(t["re_r"], 1.0)
        np.testing.assert_array_equal(t["tau_d_ns"], 0.0)

    def test_header_lists_rates(self, capsys):
        code, out, _ = run(capsys, "spectrum", "--span-mhz", "1", "--step-mhz", "0.1")
        assert code == 0
        assert "# gamma_r_10_mhz = 2.316" in out
        assert out.splitlines()[12] == "axis1,delta_p_mhz,re_r,im_r,abs_r,phase_rad,tau_d_ns,singular"

    def test_saturating_probe(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        code, _, _ = run(capsys, "spectrum", "--pp-dbm", "-142.48", "--span-mhz", "1",
                         "--step-mhz", "0.01", "-o", str(out))
        assert code == 0
        assert row_at(grid(out), -np.inf, 0.0)["abs_r"] < 1e-3


class TestDelayMap:
    def test_sign_flip_and_markers(self, capsys, tmp_path):
        out = tmp_path / "m.csv"
        code, _, _ = run(capsys, "delay-map", "--pc-min-dbm", "-141", "--pc-max-dbm", "-138",
                         "--pc-points", "31", "-o", str(out))
        assert code == 0
        text = out.read_text()
        ats = float(text.split("# ats_threshold_pc_dbm = ")[1].split()[0])
        assert ats == pytest.approx(-136.2, abs=0.05)
        t = grid(out)
        res = t["delta_p_mhz"] == 0.0
        pc, tau = t["axis1"][res], t["tau_d_ns"][res]
        flip = pc[np.nonzero(np.diff(np.sign(tau)))[0][0]]
        assert flip == pytest.approx(-139.4, abs=0.11)

    def test_single_cell_matches_spectrum(self, capsys, tmp_path):
        m, s = tmp_path / "m.csv", tmp_path / "s.csv"
        run(capsys, "delay-map", "--pc-min-dbm", "-145", "--pc-max-dbm", "-145", "--pc-points", "1",
            "--span-mhz", "2", "--step-mhz", "0.01", "-o", str(m))
        run(capsys, "spectrum", "--pc-dbm", "-145", "--span-mhz", "2", "--step-mhz", "0.01",
            "-o", str(s))
        body = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("#")]
        assert body(m) == body(s)

    def test_threads_do_not_change_output(self, capsys, tmp_path, monkeypatch):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["delay-map", "--pc-points", "41", "--span-mhz", "3", "--step-mhz", "0.1"]
        run(capsys, *args, "-o", str(a))
        monkeypatch.setenv("QDELAY_THREADS", "4")
        run(capsys, *args, "-o", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_atom_table(self, capsys, tmp_path):
        tab = tmp_path / "t.csv"
        tab.write_text("omega_10_mhz,gamma_r_10_mhz,gamma_10_mhz\n7605.7,6.96,11.8\n7799.0,33.07,22.6\n")
        out = tmp_path / "m.csv"
        code, _, _ = run(capsys, "delay-map", "--device", "device1a", "--atom-table", str(tab),
                         "--span-mhz", "20", "--step-mhz", "0.05", "-o", str(out))
        assert code == 0
        t = grid(out)
        assert row_at(t, 7605.7, 0.0)["tau_d_ns"] < 0 < row_at(t, 7799.0, 0.0)["tau_d_ns"]

    def test_all_singular_exits_3(self, capsys, tmp_path):
        cfg = tmp_path / "z.cfg"
        # Gamma = gamma puts |r| = 0 on resonance; a grid far inside the dip is all singular
        cfg.write_text("omega_10_mhz = 5000\ngamma_r_10_mhz = 1\ngamma_10_mhz = 1\n")
        code, _, err = run(capsys, "spectrum", "--device", str(cfg), "--span-mhz", "1e-13",
                           "--step-mhz", "1e-13", "-o", str(tmp_path / "o.csv"))
        assert code == 3 and "singular" in err


class TestPulse:
    def test_resonant_pulse(self, capsys, tmp_path):
        out = tmp_path / "tr.csv"
        code, stdout, _ = run(capsys, "pulse", "--sigma-ns", "1040", "-o", str(out))
        assert code == 0
        summary = json.loads(stdout)
        assert summary["tau_d_ns"] == pytest.approx(273, abs=5)
        t = read_table(str(out))
        assert list(t)[:3] == ["t_ns", "re_in", "im_in"]
        assert "# tau_d_ns = " in out.read_text()

    def test_detuned_pulse(self, capsys, tmp_path):
        code, stdout, _ = run(capsys, "pulse", "--sigma-ns", "1000", "--delta-p-mhz", "-5",
                              "-o", str(tmp_path / "tr.csv"))
        assert code == 0
        assert json.loads(stdout)["tau_d_ns"] == pytest.approx(15, abs=3)

    def test_zero_amplitude_exits_4(self, capsys, tmp_path):
        out = tmp_path / "tr.csv"
        code, _, err = run(capsys, "pulse", "--sigma-ns", "300", "--pp-dbm=-inf", "-o", str(out))
        assert code == 4 and "extraction" in err
        t = read_table(str(out))
        assert not np.any(t["re_out"]) and not np.any(t["im_out"])

    def test_bad_grid_exits_2(self, capsys):
        code, _, err = run(capsys, "pulse", "--sigma-ns", "5", "--dt-ns", "1")
        assert code == 2 and "BadGridError" in err

    def test_sweep(self, capsys, tmp_path):
        out = tmp_path / "sw.csv"
        code, _, _ = run(capsys, "pulse-sweep", "--param", "delta-p-mhz", "--values", "0,-1",
                         "--sigma-ns", "1000", "-o", str(out))
        assert code == 0
        lines = out.read_text().splitlines()
        assert "param,tau_d_ns,confidence,residual_ratio" in lines
        rows = lines[lines.index("param,tau_d_ns,confidence,residual_ratio") + 1:]
        assert [r.split(",")[0] for r in rows] == ["0", "-1"]

    def test_sweep_parallel_matches_serial(self, capsys, tmp_path, monkeypatch):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["pulse-sweep", "--param", "sigma-ns", "--values", "200,300,400"]
        run(capsys, *args, "-o", str(a))
        run(capsys, *args, "--threads", "3", "-o", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_bad_values(self, capsys):
        assert run(capsys, "pulse-sweep", "--param", "pc-dbm", "--values", "1,x")[0] == 2


class TestFits:
    def test_spectrum_round_trip(self, capsys, weak_csv):
        code, out, _ = run(capsys, "fit-spectrum", str(weak_csv))
        assert code == 0
        rep = {p["parameter"]: p["value"] for p in json.loads(out)["params"]}
        assert rep["omega_10_mhz"] == pytest.approx(4761.62, rel=1e-9)
        assert rep["gamma_r_10_mhz"] == pytest.approx(2.316, rel=1e-6)
        assert rep["gamma_10_mhz"] == pytest.approx(1.176, rel=1e-6)
        assert rep["gamma_n_10_mhz"] == pytest.approx(0.018, rel=1e-4)

    def test_pipe_own_output_back(self, capsys, tmp_path):
        s = tmp_path / "s.csv"
        run(capsys, "spectrum", "--span-mhz", "8", "--step-mhz", "0.05", "-o", str(s))
        code, out, _ = run(capsys, "fit-spectrum", str(s))
        assert code == 0
        rep = {p["parameter"]: p["value"] for p in json.loads(out)["params"]}
        assert rep["delta_center_mhz"] == pytest.approx(0.0, abs=1e-6)
        assert rep["gamma_10_mhz"] == pytest.approx(1.176, rel=1e-6)

    def test_circle(self, capsys, weak_csv):
        code, out, _ = run(capsys, "fit-circle", str(weak_csv))
        rep = {p["parameter"]: p["value"] for p in json.loads(out)["params"]}
        assert code == 0 and rep["diameter"] == pytest.approx(2.316 / 1.176, rel=1e-9)

    def test_malformed_csv_exit_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("freq_mhz,re_r,im_r\n1,0,0\n2,zz,0\n")
        code, _, err = run(capsys, "fit-spectrum", str(bad))
        assert code == 2 and "bad.csv:3" in err

    def test_power(self, capsys, tmp_path, dev2):
        from qdelay import dbm_to_rabi, reflection_powered
        p = np.linspace(-160, -125, 36)
        r = reflection_powered(dev2, 0.0, dbm_to_rabi(p, dev2.k_10))
        f = tmp_path / "p.csv"
        f.write_text("p_dbm,re_r,im_r\n" + "".join(f"{x!r},{z.real!r},{z.imag!r}\n"
                                                   for x, z in zip(p.tolist(), r.tolist())))
        code, out, _ = run(capsys, "fit-power", str(f), "--attenuation-db", "0")
        rep = json.loads(out)
        k = {q["parameter"]: q["value"] for q in rep["params"]}["k_10"]
        assert code == 0 and k == pytest.approx(6.8363e14, rel=1e-6)
        assert rep["singular_pp_dbm"] == pytest.approx(-142.48, abs=0.01)
        assert run(capsys, "fit-power", str(f))[0] == 2

    def test_two_tone_round_trip(self, capsys, tmp_path):
        m = tmp_path / "m.csv"
        run(capsys, "delay-map", "--pc-min-dbm", "-150", "--pc-max-dbm", "-128", "--pc-points", "12",
            "--span-mhz", "6", "--step-mhz", "0.1", "-o", str(m))
        code, out, _ = run(capsys, "fit-two-tone", str(m))
        rep = json.loads(out)
        assert code == 0
        assert rep["params"][0]["value"] == pytest.approx(2.364, rel=0.005)
        assert rep["singular_pc_dbm"] == pytest.approx(-139.38, abs=0.05)

    def test_two_tone_without_pump_exits_4(self, capsys, tmp_path):
        s = tmp_path / "s.csv"
        run(capsys, "spectrum", "--span-mhz", "4", "--step-mhz", "0.1", "-o", str(s))
        assert run(capsys, "fit-two-tone", str(s))[0] == 4


class TestFeatures:
    def test_device2(self, capsys):
        code, out, _ = run(capsys, "features")
        rep = json.loads(out)
        assert code == 0
        assert rep["singular_pc_dbm"] == pytest.approx(-139.38, abs=0.01)
        assert rep["ats_threshold_pc_dbm"] == pytest.approx(-136.21, abs=0.01)
        assert rep["singular_pp_dbm"] == pytest.approx(-142.48, abs=0.01)
        assert rep["tau_d_resonant_ns"] == pytest.approx(274.95, abs=0.01)
        assert rep["zero_delay_boundary_mhz"] is None

    def test_device1a(self, capsys):
        rep = json.loads(run(capsys, "features", "--device", "device1a")[1])
        assert rep["zero_delay_boundary_mhz"][1] == pytest.approx(7.557, abs=1e-3)
        assert rep["singular_probe_rabi_mhz"] is None

    def test_pumped(self, capsys):
        rep = json.loads(run(capsys, "features", "--pc-dbm", "-137")[1])
        assert rep["tau_d_resonant_ns"] < 0

    def test_above_ats_threshold_exits_3(self, capsys):
        assert run(capsys, "features", "--pc-dbm", "-130")[0] == 3


@pytest.mark.parametrize("command", COMMANDS)
def test_dry_run(capsys, tmp_path, weak_csv, command):
    extra = {
        "pulse-sweep": ["--param", "sigma-ns", "--values", "500,1000"],
        "fit-circle": [str(weak_csv)],
        "fit-spectrum": [str(weak_csv)],
        "fit-power": [str(weak_csv), "--attenuation-db", "0"],
        "fit-two-tone": [str(weak_csv)],
    }.get(command, [])
    if command == "fit-power":
        f = tmp_path / "p.csv"
        f.write_text("p_dbm,re_r,im_r\n-150,0,0\n-140,0,0\n")
        extra = [str(f), "--attenuation-db", "0"]
    if command == "fit-two-tone":
        f = tmp_path / "m.csv"
        f.write_text("pc_dbm,delta_p_mhz,re_r,im_r\n-140,0,1,0\n-140,1,1,0\n")
        extra = [str(f)]
    code, out, _ = run(capsys, command, "--dry-run", *extra)
    assert code == 0
    rep = json.loads(out)
    text = json.dumps(rep)
    assert "rad_s" in text or "points" in text or "rows" in text


def test_bad_device_exit_2(capsys):
    code, _, err = run(capsys, "features", "--device", "/nope.cfg")
    assert code == 2 and "cannot read" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qdelay", "features", "--device", "device1b"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["tau_d_resonant_ns"] == pytest.approx(22.24, abs=0.01)
