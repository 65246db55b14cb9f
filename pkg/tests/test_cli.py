"""Command-line client: subcommands, file emission, exit codes."""

from ringsim.cli import EXIT_CONFIG, EXIT_INSUFFICIENT, EXIT_OK, main


def _write_config(tmp_path, body) -> str:
    path = tmp_path / "exp.ini"
    path.write_text(body)
    return str(path)


def _tiny_config(tmp_path, out, duration=5.0, powers="0.01", extra=""):
    return _write_config(
        tmp_path,
        f"""
[run]
duration_s = {duration}
seed = 4
powers_mw = {powers}

[output]
directory = {out}
{extra}
""",
    )


def test_pgr_command(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _tiny_config(tmp_path, out)
    assert main(["--config", cfg, "pgr"]) == EXIT_OK
    stdout = capsys.readouterr().out
    assert "pgr_per_mw2 = 2e+10" in stdout
    assert (out / "pgr.csv").exists()
    report = (out / "pgr_report.csv").read_text()
    assert "pgr_per_mw2,2e+10" in report


def test_pgr_kv_format(tmp_path):
    out = tmp_path / "out"
    cfg = _tiny_config(tmp_path, out)
    assert main(["--config", cfg, "--format", "kv", "pgr"]) == EXIT_OK
    text = (out / "pgr.kv").read_text()
    assert text.startswith("pgr_per_mw2=2e+10")


def test_simulate_deterministic_files(tmp_path):
    out1, out2, out3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    cfg = _tiny_config(tmp_path, "ignored", duration=5.0)
    assert main(["--config", cfg, "--out", str(out1), "simulate"]) == EXIT_OK
    assert main(["--config", cfg, "--out", str(out2), "simulate"]) == EXIT_OK
    assert main(["--config", cfg, "--out", str(out3), "--seed", "99", "simulate"]) == EXIT_OK
    f1 = sorted(p.name for p in out1.iterdir())
    assert f1 == sorted(p.name for p in out2.iterdir())
    for name in f1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    # a different seed changes the tag files
    tags = next(n for n in f1 if n.startswith("timetags"))
    assert (out1 / tags).read_bytes() != (out3 / tags).read_bytes()


def test_simulate_summary_columns(tmp_path):
    out = tmp_path / "out"
    cfg = _tiny_config(tmp_path, out, duration=10.0, powers="0.005, 0.01")
    assert main(["--config", cfg, "simulate"]) == EXIT_OK
    lines = (out / "summary.csv").read_text().splitlines()
    assert lines[0] == "power_mw,singles_signal_hz,singles_idler_hz,coincidences,accidentals,car,pgr_onchip"
    assert len(lines) == 3
    assert len(list(out.glob("timetags_*"))) == 2


def test_simulate_insufficient_statistics_exit_code(tmp_path):
    out = tmp_path / "out"
    # microsecond-scale run: no accidentals anywhere in the histogram
    cfg = _tiny_config(tmp_path, out, duration=0.001, powers="0.001")
    assert main(["--config", cfg, "simulate"]) == EXIT_INSUFFICIENT


def test_franson_command(tmp_path):
    out = tmp_path / "out"
    cfg = _write_config(
        tmp_path,
        f"""
[run]
duration_s = 5
seed = 6
powers_mw = 0.03

[franson]
sweep_points = 5
integration_s = 20

[output]
directory = {out}
format = kv
""",
    )
    assert main(["--config", cfg, "franson"]) == EXIT_OK
    sweep = (out / "franson_sweep.csv").read_text().splitlines()
    assert sweep[0] == "phase_rad,coincidences,singles_signal,singles_idler,accidentals"
    assert len(sweep) == 6
    vis = (out / "visibility.kv").read_text()
    assert "v_fit=" in vis and "bell_sigmas=" in vis


def test_g2h_command(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _tiny_config(tmp_path, out, duration=30.0, powers="0.02")
    code = main(["--config", cfg, "g2h"])
    stdout = capsys.readouterr().out
    assert "n_herald" in stdout
    assert code in (EXIT_OK, EXIT_INSUFFICIENT)
    assert (out / "g2h.csv").exists()


def test_g2h_zero_duration_insufficient(tmp_path):
    out = tmp_path / "out"
    cfg = _tiny_config(tmp_path, out, duration=0.0)
    assert main(["--config", cfg, "g2h"]) == EXIT_INSUFFICIENT


def test_compare_command(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _tiny_config(tmp_path, out)
    assert main(["--config", cfg, "compare"]) == EXIT_OK
    stdout = capsys.readouterr().out
    assert "AlGaAsOI,SFWM,1.2e6,20,2e11" in stdout
    assert (out / "platforms.csv").exists()
    assert (out / "brightness_vs_nonlinearity.csv").exists()


def test_replay_command(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _tiny_config(tmp_path, out, duration=20.0)
    assert main(["--config", cfg, "simulate"]) == EXIT_OK
    tagfile = next(out.glob("timetags_*"))
    assert main(["--config", cfg, "--format", "kv", "replay", str(tagfile)]) == EXIT_OK
    report = next(out.glob("replay_*.kv")).read_text()
    assert "summary.car=" in report
    assert "singles_hz.0=" in report


def test_config_error_exit_code(tmp_path, capsys):
    bad = _write_config(tmp_path, "[run]\nseed = 1\n")  # duration missing
    assert main(["--config", bad, "pgr"]) == EXIT_CONFIG
    assert "run.duration_s" in capsys.readouterr().err


def test_missing_config_file_exit_code(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.ini"), "pgr"]) == EXIT_CONFIG


def test_default_config_used_without_flag(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["compare"]) == EXIT_OK
    assert (tmp_path / "out" / "platforms.csv").exists()
