import csv
import json

import pytest

from ergolab import __version__
from ergolab.cli import OUTPUT_DIR_ENV, compare, main, parse_observable, parse_schedule, parse_system
from ergolab.errors import ConfigError
from ergolab.systems import Rotation, SubstitutionSubshift, ToralAutomorphism


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_parse_helpers():
    assert parse_schedule("64..512") == [64, 128, 256, 512]
    assert parse_schedule("10,20") == [10, 20]
    with pytest.raises(ConfigError):
        parse_schedule("20,10")
    assert isinstance(parse_system("cat"), ToralAutomorphism)
    assert parse_system("rotation:golden,sqrt2").dim == 2
    assert isinstance(parse_system("substitution:thue-morse"), SubstitutionSubshift)
    assert parse_system("product:rotation:golden*cat").dim == 3
    f = parse_observable("1:1;-1:0,2", Rotation())
    assert f.coeff((-1,)) == 2j
    with pytest.raises(ConfigError):
        parse_observable("1,0:1", Rotation())
    with pytest.raises(ConfigError):
        parse_system("spiral")


def test_resonant_ap_run(tmp_path):
    code = main(["average", "--kind", "ap", "--system", "rotation:golden", "--d", "3",
                 "--f", "1:1", "--f", "-2:1", "--f", "1:1", "--N", "64..4096", "--out", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "average.csv")
    assert [int(r["N"]) for r in rows] == [64 * 2**i for i in range(7)]
    assert float(rows[-1]["abs_error"]) <= 1e-2
    report = json.loads((tmp_path / "average.json").read_text())
    assert report["library_version"] == __version__
    assert report["config"]["window"] == 3 and report["config"]["x"] is None
    assert (tmp_path / "average.timing.json").exists()


def test_toml_config_and_override(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('command = "average"\nkind = "birkhoff"\nf = "1:1"\nN = "64..256"\n')
    assert main(["run", str(cfg), "--out", str(tmp_path), "--name", "a"]) == 0
    assert main(["average", "--config", str(cfg), "--N", "32", "--out", str(tmp_path), "--name", "b"]) == 0
    assert len(read_csv(tmp_path / "a.csv")) == 3
    assert len(read_csv(tmp_path / "b.csv")) == 1


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert main(["tempered", "--d", "2", "--nmax", "8"]) == 0
    assert json.loads((tmp_path / "tempered.json").read_text())["results"]["holds"]


@pytest.mark.parametrize(
    "argv, code",
    [
        (["average", "--kind", "ap", "--d", "2", "--f", "1:1"], 2),
        (["average", "--kind", "nope"], 2),
        (["average", "--f", "1:nan", "--N", "64"], 3),
        (["average", "--f", "1:1", "--N", "1099511627776"], 4),
        (["cube-language", "--system", "substitution:thue-morse", "--d", "1", "--N", "64", "--horizon-cap", "16"], 4),
    ],
)
def test_exit_codes(tmp_path, argv, code):
    assert main(argv + ["--out", str(tmp_path)]) == code


def test_limit_and_seminorm_commands(tmp_path):
    assert main(["limit", "--kind", "cube-face", "--d", "2", "--face", "10=1:1", "--face", "01=1:1",
                 "--face", "11=-1:1", "--x", "0.25", "--out", str(tmp_path)]) == 0
    lim = json.loads((tmp_path / "limit.json").read_text())["results"]
    assert lim["depends_on_x"] and abs(lim["value_at_x"][1] - 1) < 1e-12
    assert main(["seminorm", "--f", "1:1;-1:1", "--k", "2", "--out", str(tmp_path)]) == 0
    sem = json.loads((tmp_path / "seminorm.json").read_text())["results"]
    assert abs(sem["value"] - 2**0.25) < 1e-12


def test_probe_and_language_commands(tmp_path):
    assert main(["probe", "--system", "cat", "--f", "1,0:1", "--include", "0,0", "--points", "3",
                 "--N", "256..1024", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "probe.json").read_text())["results"]["verdict"] == "inconsistent"
    assert main(["cube-language", "--system", "substitution:thue-morse", "--d", "1", "--L", "1",
                 "--N", "64", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "cube-language.json").read_text())["results"]["size"] == 4


def test_compare(tmp_path, capsys):
    base = ["average", "--f", "1:1", "--N", "64..256", "--out", str(tmp_path)]
    assert main(base + ["--name", "a", "--x", "0.1"]) == 0
    assert main(base + ["--name", "b", "--x", "0.2"]) == 0
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    summary = compare(a, b)
    assert [d["N"] for d in summary["diffs"]] == [64, 128, 256]
    assert summary["max_diff"] > 0
    assert main(["tempered", "--d", "1", "--nmax", "4", "--out", str(tmp_path)]) == 0
    assert main(["compare", str(tmp_path / "a.json"), str(tmp_path / "tempered.json")]) == 2


def test_invalid_d_names_the_field(tmp_path, capsys):
    assert main(["tempered", "--d", "0", "--out", str(tmp_path)]) == 2
    assert "d:" in capsys.readouterr().err


def test_report_echo_reproduces_run(tmp_path):
    argv = ["average", "--kind", "cube-face", "--system", "skew:golden", "--face", "10=1,0:1",
            "--face", "11=-1,0:1;0,1:0.5", "--N", "32..256", "--seed", "7"]
    assert main(argv + ["--out", str(tmp_path), "--name", "first"]) == 0
    first = json.loads((tmp_path / "first.json").read_text())
    assert first["config"]["grid_cap"] > 0 and first["config"]["table_cap"] > 0
    rerun = tmp_path / "rerun.toml"
    lines, tables = ['command = "average"'], []
    for key, value in first["config"].items():
        if isinstance(value, dict):
            tables += [f"[{key}]"] + [f'"{k}" = {json.dumps(v)}' for k, v in value.items()]
        elif value is not None:
            lines.append(f"{key} = {json.dumps(value)}")
    lines += tables
    rerun.write_text("\n".join(lines) + "\n")
    assert main(["run", str(rerun), "--out", str(tmp_path), "--name", "second"]) == 0
    second = json.loads((tmp_path / "second.json").read_text())
    assert first["results"] == second["results"]


def test_language_saturation_is_monotone(tmp_path):
    assert main(["cube-language", "--system", "substitution:thue-morse", "--d", "2", "--L", "1",
                 "--N", "1..32", "--out", str(tmp_path)]) == 0
    sat = json.loads((tmp_path / "cube-language.json").read_text())["results"]["saturation"]
    sizes = [row["size"] for row in sat]
    assert sizes[0] == 1 and sizes == sorted(sizes)
