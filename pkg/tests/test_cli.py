import csv
import io
import json
import math

import numpy as np
import pytest

from bsv_tpa import cli, tpa
from bsv_tpa.oracles import OracleReport
from bsv_tpa.pdc import width_high, width_low


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    rows = list(csv.reader(line for line in text.splitlines() if not line.startswith("#")))
    return rows[0], rows[1:]


def column(text, name):
    header, rows = table(text)
    k = header.index(name)
    return [r[k] for r in rows]


def numeric(text):
    return [line for line in text.splitlines() if not line.startswith("# generated")]


def test_unit_conversion_table():
    rc = cli.resolve(cli.load_config(overrides=[
        "crystal.wavelength_nm=1064", "crystal.gvd_fs2_per_mm=20", "crystal.length_mm=5",
        "crystal.gamma_z=2", "gate.duration_ps=3", "molecule.sigma2_gm=4",
        "sample.beam_radius_um=7", "sample.path_length_cm=2", "sample.concentration_mmol_per_l=5",
        "compensation.mode=fixed", "compensation.d2_fs2=-300"]))
    assert rc.crystal.omega0 == pytest.approx(2 * math.pi * 299792458 / 1064e-9, rel=1e-15)
    assert rc.crystal.kappa == pytest.approx(0.5 * 20e-30 / 1e-3, rel=1e-15)
    assert rc.crystal.z == pytest.approx(5e-3)
    assert rc.crystal.gain == pytest.approx(2.0)
    assert rc.gate.T == pytest.approx(3e-12)
    assert rc.molecule.sigma2 == pytest.approx(4e-58)
    assert rc.molecule.A0 == pytest.approx(math.pi * 49e-12)
    assert rc.path_length == pytest.approx(0.02)
    assert rc.concentration == pytest.approx(5e-3)
    assert rc.compensation == pytest.approx(-300e-30)


def test_default_kappa_preset():
    rc = cli.resolve(cli.load_config())
    assert rc.crystal.kappa == pytest.approx(2.5e-26, rel=1e-12)
    assert rc.crystal.z == 0.01


def test_fig4_preset_crossover():
    rc = cli.resolve(cli.load_config(preset="fig4"))
    nc = tpa.crossover_photon_number(width_low(rc.crystal), rc.gate.T)
    assert nc == pytest.approx(125, rel=1e-3)
    assert rc.n_molecules == pytest.approx(1.8918e13, rel=1e-4)


@pytest.mark.parametrize("override,field", [
    ("crystal.length_mm=-1", "crystal.length_mm"), ("gate.duration_ps=abc", "gate.duration_ps"),
    ("sweep.axis=z", "sweep.axis"), ("crystal.xi=2", "crystal.xi"), ("nosuch.key=1", "nosuch.key"),
    ("run.seed=1.5", "run.seed")])
def test_config_errors_name_the_field(capsys, override, field):
    code, _, err = run(capsys, "rates", "--set", override)
    assert code == cli.EXIT_CONFIG
    assert field in err


def test_bad_set_syntax(capsys):
    assert run(capsys, "rates", "--set", "crystal.length_mm")[0] == cli.EXIT_CONFIG


def test_missing_config_file(capsys, tmp_path):
    assert run(capsys, "rates", "--config", str(tmp_path / "none.ini"))[0] == cli.EXIT_CONFIG


def test_ini_config_and_flag_precedence(capsys, tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[crystal]\ngamma_z = 0.5\nlength_mm = 5\n")
    code, out, _ = run(capsys, "rates", "--config", str(ini), "--set", "crystal.gamma_z=2")
    assert code == 0
    assert float(column(out, "gamma_z [1]")[0]) == 2.0
    assert "# length_mm = 5" in out


def test_every_header_has_unit(capsys):
    for argv in (["spectrum", "--set", "spectrum.points=11"], ["rates"],
                 ["tpa-sweep", "--set", "sweep.points=2"],
                 ["dispersion-scan", "--set", "dispersion.points=3"]):
        code, out, _ = run(capsys, *argv)
        assert code == 0
        header, _ = table(out)
        assert all(h.endswith("]") and " [" in h for h in header), header


def test_spectrum_width_markers(capsys):
    code, out, _ = run(capsys, "spectrum", "--preset", "fig3", "--set", "spectrum.points=21")
    assert code == 0
    header, rows = table(out)
    gz = np.array([float(r[0]) for r in rows])
    w = np.array(column(out, "w [rad/s]"), float)
    b = np.array(column(out, "b [rad/s]"), float)
    assert set(gz) == {1e-4, 10.0}
    np.testing.assert_allclose(b / w, (gz / math.pi ** 2) ** 0.25, rtol=1e-14)


def test_spectrum_without_pump_is_zero(capsys):
    code, out, _ = run(capsys, "spectrum", "--set", "spectrum.gamma_z_list=0",
                       "--set", "spectrum.points=11")
    assert code == 0
    assert all(float(v) == 0 for v in column(out, "S [photons/s per (rad/s)/2pi]"))


def test_halving_length_widens_spectrum(capsys):
    _, a, _ = run(capsys, "rates")
    _, b, _ = run(capsys, "rates", "--set", "crystal.length_mm=5")
    wa = float(column(a, "w [rad/s]")[0])
    wb = float(column(b, "w [rad/s]")[0])
    assert wb / wa == pytest.approx(math.sqrt(2), rel=1e-14)


def test_rates_columns(capsys):
    code, out, _ = run(capsys, "rates", "--set", "crystal.gamma_z=1")
    header, rows = table(out)
    row = dict(zip(header, rows[0]))
    assert float(row["N [photons]"]) == pytest.approx(float(row["F [photons/s]"]) * 1e-11)
    assert float(row["M [modes]"]) == pytest.approx(float(row["N [photons]"]) / float(row["nbar [photons/mode]"]))
    assert row["regime [tag]"] == "intermediate"


def test_round_trip_reproduces_run(capsys, tmp_path):
    first = tmp_path / "first.csv"
    code, _, _ = run(capsys, "tpa-sweep", "--preset", "fig4", "--set", "sweep.points=4",
                     "--out", str(first))
    assert code == 0
    second = tmp_path / "second.csv"
    assert run(capsys, "tpa-sweep", "--config", str(first), "--out", str(second))[0] == 0
    a, b = first.read_text(), second.read_text()
    assert table(a) == table(b)
    assert "# assumption:" in a


def test_repeat_runs_are_byte_identical(capsys):
    argv = ["validate", "--set", "validate.mc_samples=20000", "--set", "validate.tw_list=100",
            "--seed", "9"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert numeric(a) == numeric(b)


def test_json_and_sidecar(capsys, tmp_path):
    code, out, _ = run(capsys, "rates", "--format", "json")
    doc = json.loads(out)
    assert doc["provenance"]["command"] == "rates"
    assert doc["provenance"]["config"]["crystal"]["length_mm"] == "10"
    assert len(doc["columns"]) == len(doc["rows"][0])
    path = tmp_path / "r.csv"
    run(capsys, "rates", "--out", str(path), "--sidecar")
    side = json.loads((tmp_path / "r.csv.json").read_text())
    assert side["columns"] == table(path.read_text())[0]


def test_point_failure_exit_code(capsys):
    code, out, _ = run(capsys, "tpa-sweep", "--set", "sweep.start=1", "--set", "sweep.stop=1e40",
                       "--set", "sweep.points=2")
    assert code == cli.EXIT_NUMERIC
    errors = column(out, "error [text]")
    assert errors[0] == "" and errors[1]


def test_sweep_requires_photon_number_on_other_axes(capsys):
    assert run(capsys, "tpa-sweep", "--set", "sweep.axis=T")[0] == cli.EXIT_CONFIG


def test_dispersion_scan_exposes_both_scalings(capsys):
    code, out, _ = run(capsys, "dispersion-scan", "--set", "dispersion.points=5",
                       "--set", "dispersion.gamma_z_list=1e-4")
    assert code == 0
    pair = np.array(column(out, "d2_pair [s^2]"), float)
    field = np.array(column(out, "d2_if_full_phase_per_field [s^2]"), float)
    np.testing.assert_allclose(field, pair / 2)
    r = np.array(column(out, "r [1]"), float)
    assert r.max() == pytest.approx(1.02, rel=0.005)


def test_g2_command(capsys):
    code, out, _ = run(capsys, "g2", "--preset", "fig6", "--set", "sweep.points=3")
    assert code == 0
    comp = np.array(column(out, "g2_compensated [1]"), float)
    ana = np.array(column(out, "g2_analytic [1]"), float)
    np.testing.assert_allclose(comp, ana, rtol=0.1)


def test_linewidth_sweep(capsys):
    code, out, _ = run(capsys, "linewidth-sweep", "--preset", "fig7", "--set", "sweep.points=2",
                       "--set", "linewidth.n_photons_list=1e6")
    assert code == 0
    assert len(table(out)[1]) == 2
    assert run(capsys, "linewidth-sweep")[0] == cli.EXIT_CONFIG


def test_validate_default_passes(capsys):
    code, out, _ = run(capsys, "validate")
    assert code == 0
    header, rows = table(out)
    failed = [r for r in rows if r[header.index("passed [flag]")] == "false"]
    assert len(failed) == 1
    assert failed[0][header.index("informational [flag]")] == "true"


def test_validate_oracle_failure_exit(capsys, monkeypatch):
    monkeypatch.setattr(cli, "validation_reports",
                        lambda rc: [OracleReport.compare("broken", 1.0, 2.0, 0.1)])
    assert run(capsys, "validate")[0] == cli.EXIT_ORACLE


def test_all_presets_resolve():
    for name in cli.PRESETS:
        cli.resolve(cli.load_config(preset=name))
    with pytest.raises(cli.ConfigError):
        cli.load_config(preset="fig99")
