import numpy as np
import pytest

from ocb import cli
from ocb.optimize import envelope
from ocb.bounds import ConstraintSpec


@pytest.fixture(autouse=True)
def one_worker(monkeypatch):
    monkeypatch.setenv("OCB_THREADS", "1")


def run(argv):
    return cli.main(argv)


def test_case2_sweep_rows(tmp_path):
    out = tmp_path / "c2.csv"
    assert run(["sweep", "--case", "II", "--db-min", "-10", "--db-max", "60", "--steps", "141", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# schema=1"
    assert lines[1].split(",") == cli.header("II")
    assert len(lines) == 2 + 141
    cols, data = cli.read_csv(out)
    col = {c: i for i, c in enumerate(cols)}
    assert np.allclose(data[:, col["gap"]], data[:, col["envelope_upper"]] - data[:, col["envelope_lower"]], atol=1e-11)
    assert np.all(data[:, col["gap"]] >= -1e-9)
    assert np.allclose(data[:, col["ratio_db"]], np.linspace(-10, 60, 141))


def test_sweep_row_matches_library():
    row = cli.sweep_point("I", 0.3, 10.0)
    env = envelope(ConstraintSpec(1.0, 3.0, 10.0))
    assert row.upper == env.upper and row.lower == env.lower
    assert set(row.bounds) == {26, 27, 28}


def test_sweep_is_byte_identical(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--case", "I", "--alpha", "0.2", "--db-min", "0", "--db-max", "20", "--steps", "21"]
    run(args + ["--out", str(a)])
    monkeypatch.setenv("OCB_THREADS", "2")
    run(args + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_number_format(tmp_path):
    out = tmp_path / "c3.csv"
    run(["sweep", "--case", "III", "--db-min", "0", "--db-max", "10", "--steps", "3", "--out", str(out)])
    row = out.read_text().splitlines()[2].split(",")
    assert row[0] == "1" and row[1] == "0"
    digits = [v.lstrip("-").split("e")[0].replace(".", "").lstrip("0") for v in row]
    assert all(len(d) <= 12 for d in digits)
    assert max(len(d) for d in digits) == 12


def test_alpha_ignored_with_warning(tmp_path):
    out = tmp_path / "c.csv"
    with pytest.warns(UserWarning, match="ignored"):
        run(["sweep", "--case", "III", "--alpha", "0.3", "--db-min", "0", "--db-max", "1", "--steps", "2", "--out", str(out)])


@pytest.mark.parametrize("argv", [
    ["sweep", "--case", "I", "--db-min", "0", "--db-max", "1", "--steps", "2"],
    ["sweep", "--case", "I", "--alpha", "0.7", "--db-min", "0", "--db-max", "1", "--steps", "2"],
    ["sweep", "--case", "II", "--db-min", "5", "--db-max", "1", "--steps", "2"],
    ["sweep", "--case", "II", "--db-min", "0", "--db-max", "1", "--steps", "1"],
    ["sweep", "--db-min", "0", "--db-max", "1", "--steps", "2"],
    ["figure", "6"],
])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as err:
        run(argv)
    assert err.value.code == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\ncase = II\ndb-min = 0\ndb_max = 10\nsteps = 5\n")
    out = tmp_path / "o.csv"
    run(["sweep", "--config", str(cfg), "--steps", "3", "--out", str(out)])
    _, data = cli.read_csv(out)
    assert data.shape[0] == 3 and data[-1, 1] == 10.0


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    with pytest.raises(SystemExit):
        run(["sweep", "--case", "II", "--config", str(bad)])
    bad.write_text("steps = many\n")
    with pytest.raises(SystemExit):
        run(["sweep", "--case", "II", "--config", str(bad)])


def test_db_convention_changes_axis_not_gap():
    r10 = cli.sweep_point("II", None, 20.0, db_convention=10)
    r20 = cli.sweep_point("II", None, 40.0, db_convention=20)
    assert r10.ratio == pytest.approx(r20.ratio) and r10.gap == pytest.approx(r20.gap)


def test_figure_four(tmp_path, capsys):
    out = tmp_path / "chi.csv"
    assert run(["figure", "4", "--out", str(out)]) == 0
    assert "chi_min=" in capsys.readouterr().out
    cols, data = cli.read_csv(out)
    assert cols == ["alpha", "chi"]
    k = int(np.argmin(np.abs(data[:, 0] - 0.75)))
    assert data[k, 0] == 0.75
    assert data[k, 1] == pytest.approx(-1.41894, abs=5e-6)


def test_figure_three_summary(capsys):
    assert run(["figure", "3", "--db-min", "4", "--db-max", "9", "--steps", "21"]) == 0
    line = capsys.readouterr().out.strip()
    gap = float(line.split()[0].split("=")[1])
    at = float(line.split()[1].split("=")[1])
    assert abs(gap - 0.50) <= 0.02 and abs(at - 6.4) <= 1.0


def test_verify_lemmas(capsys):
    assert run(["verify", "lemmas"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[-1] == "summary failed=0"
    assert all(l.startswith("suite=lemmas check=") and "status=PASS" in l for l in lines[:-1])


def test_verify_reports_failure(monkeypatch, capsys):
    from ocb import checks

    monkeypatch.setitem(checks.SUITES, "lemmas", (lambda: checks.CheckResult("broken", False, "forced"),))
    assert run(["verify", "lemmas"]) == 1
    assert "status=FAIL" in capsys.readouterr().out
