import json

import pytest
import yaml

from orbitlab import cli
from orbitlab import config as cf
from orbitlab import scenarios as sc

SMALL_RB = {"m_values": [1, 5, 10, 20], "k": 3, "repetitions": 100}


def write_yaml(tmp_path, data, name="c.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data) if data is not None else "")
    return path


# -- config ---------------------------------------------------------------------


def test_empty_file_gives_defaults(tmp_path):
    assert cf.parse_config(write_yaml(tmp_path, None)) == cf.defaults()


def test_four_levels_rejected_with_range(tmp_path):
    with pytest.raises(cf.ConfigError, match="levels.*out of range"):
        cf.parse_config(write_yaml(tmp_path, {"levels": 4}))


def test_round_trip(tmp_path):
    cfg = cf.parse_config(write_yaml(tmp_path, {"k": 7, "pole_1_rate": 0.3}))
    again = cf.parse_config(write_yaml(tmp_path, yaml.safe_load(cf.dump_config(cfg)), "d.yaml"))
    assert again == cfg


@pytest.mark.parametrize(
    "raw, message",
    [
        ({"not_a_key": 1}, "unknown config key"),
        ({"k": "many"}, "expected an integer"),
        ({"dt_ns": 0.0}, "out of range"),
        ({"f10_ghz": True}, "expected a number"),
        ({"m_values": []}, "nonempty"),
        ({"m_values": [1, 2.5]}, "positive integers"),
        ({"rb_mode": "sideways"}, "rb_mode"),
    ],
)
def test_bad_values(raw, message):
    with pytest.raises(cf.ConfigError, match=message):
        cf.resolve(raw)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(cf.ConfigError, match="does not exist"):
        cf.parse_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("k: [1, 2\n")
    with pytest.raises(cf.ConfigError, match="malformed"):
        cf.parse_config(bad)
    with pytest.raises(cf.ConfigError):
        cf.resolve(["k", 1])


def test_every_key_documented():
    for name, key in cf.KEYS.items():
        assert key.doc, name


# -- CLI ---------------------------------------------------------------------------


def test_list(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in sc.SCENARIOS:
        assert name in out


def test_unknown_scenario_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        cli.main(["warp-drive", "--out", "x"])
    assert exc.value.code != 0


def test_run_scenario_rejects_unknown_name():
    with pytest.raises(ValueError, match="valid: rb-curve"):
        sc.run_scenario("warp-drive", cf.defaults(), 0)


def test_rb_curve_artifacts(tmp_path):
    cfg = write_yaml(tmp_path, SMALL_RB)
    out = tmp_path / "run"
    assert cli.main(["rb-curve", "--config", str(cfg), "--seed", "3", "--out", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert [f for f in files if f.endswith(".csv")] == ["curve.csv"]
    assert [f for f in files if f.endswith(".json")] == ["record.json"]
    assert [f for f in files if f.endswith(".svg")] == ["rb_curve.svg"]
    record = json.loads((out / "record.json").read_text())
    assert record["seed"] == 3 and record["config"]["k"] == 3
    assert (out / "curve.csv").read_text().splitlines()[0] == "m,seq_index,fidelity"
    svg = (out / "rb_curve.svg").read_text()
    assert "sequence length m" in svg


def test_reruns_are_byte_identical_across_parallelism(tmp_path):
    cfg = write_yaml(tmp_path, SMALL_RB)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["rb-curve", "--config", str(cfg), "--seed", "9", "--out", str(a)]) == 0
    assert cli.main(["rb-curve", "--config", str(cfg), "--seed", "9", "--out", str(b), "--parallel", "3"]) == 0
    for name in ("curve.csv", "record.json", "rb_curve.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_exact_flag_removes_shot_noise(tmp_path):
    cfg = write_yaml(tmp_path, SMALL_RB)
    out = tmp_path / "e"
    assert cli.main(["rb-curve", "--config", str(cfg), "--out", str(out), "--exact"]) == 0
    assert json.loads((out / "record.json").read_text())["config"]["repetitions"] == 0


def test_config_error_exit_code(tmp_path, capsys):
    cfg = write_yaml(tmp_path, {"levels": 4})
    assert cli.main(["rb-curve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "levels" in capsys.readouterr().err


def test_bad_seed_and_parallel(tmp_path):
    assert cli.main(["sensitivity", "--out", str(tmp_path), "--seed", "-1"]) == 2
    assert cli.main(["sensitivity", "--out", str(tmp_path), "--parallel", "0"]) == 2


def test_unwritable_output_leaves_nothing(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["sensitivity", "--out", str(blocker / "sub")]) == 1
    assert "output error" in capsys.readouterr().err
    assert sorted(p.name for p in tmp_path.iterdir()) == ["file"]


def test_atomic_write_cleans_up_on_failure(tmp_path):
    from orbitlab import artifacts as art

    with pytest.raises(TypeError):
        art.atomic_write(tmp_path / "x.txt", 12345)
    assert list(tmp_path.iterdir()) == []


# -- scenario content --------------------------------------------------------------


def test_sensitivity_scenario_peaks_near_optimal_depth(tmp_path):
    rec = sc.run_scenario("sensitivity", cf.defaults(), 0)
    peaks = {c["r"]: c["peak_m"] for c in rec.summary["curves"]}
    assert abs(peaks[0.001] - 500) / 500 < 0.02
    assert abs(peaks[0.0005] - 1000) / 1000 < 0.02


def test_landscape_scenario_shape(tmp_path):
    cfg = cf.resolve({"landscape_points": 3, "landscape_m": [1, 50], "k": 2, "repetitions": 0})
    rec = sc.run_scenario("landscape-x2", cfg, 0)
    header, rows = rec.tables["landscape"]
    assert header == ("parameter", "value", "m", "fidelity")
    assert len(rows) == 3 * 2 * 3
    # the calibrated centre beats both edges on the amplitude axis at m = 50
    amp = [r for r in rows if r[0] == "amplitude" and r[2] == 50]
    assert amp[1][3] > amp[0][3] and amp[1][3] > amp[2][3]
