import csv
import functools
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from dislog.cli import main, parse_xi_grid
from dislog.datasets import DIGESTS, embedded_text
from dislog.kernels import Family


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


# fit


def test_fit_computer_breaks(capsys):
    code, out, _ = run(capsys, "fit", "--data", "computer-breaks", "--kernel", "normal", "--threads", "1")
    assert code == 0
    report = json.loads(out)
    assert report["fit"]["lambda"] == pytest.approx(3.2280, abs=0.002)
    assert report["fit"]["bic"] == pytest.approx(652.0702, abs=0.05)
    assert report["gof"]["chi2_pvalue"] > 0.05
    assert report["gof"]["cvm_pvalue"] > 0.05
    assert report["manifest"]["input_digest"] == DIGESTS["computer-breaks"]
    assert report["manifest"]["command"] == "fit"


def test_fit_student_t_fixed_twenty(capsys):
    code, out, _ = run(capsys, "fit", "--data", "computer-breaks", "--kernel", "student-t", "--xi", "20", "--threads", "1")
    assert code == 0
    assert json.loads(out)["fit"]["aic"] == pytest.approx(644.2248, abs=0.2)


@pytest.mark.xfail(strict=True, reason="AIC keeps falling toward the normal limit, so the 1:100 profile selects 100")
def test_fit_student_t_profile(capsys):
    code, out, _ = run(
        capsys, "fit", "--data", "computer-breaks", "--kernel", "student-t", "--xi-grid", "1:100", "--threads", "1"
    )
    fit = json.loads(out)["fit"]
    assert 10 <= fit["xi"][0] <= 30
    assert fit["aic"] == pytest.approx(644.2248, abs=0.2)


@pytest.mark.xfail(strict=True, reason="on the tabulated data the fit gives lambda near 0.62 and AIC near 261")
def test_fit_pain_relief_extended_bs(capsys):
    code, out, _ = run(capsys, "fit", "--data", "pain-relief", "--kernel", "extended-bs", "--xi", "0.1")
    fit = json.loads(out)["fit"]
    assert fit["lambda"] == pytest.approx(2.3263, abs=0.01)
    assert fit["aic"] == pytest.approx(540.2164, abs=0.2)


def test_fit_censored_writes_survival_table(capsys, tmp_path):
    code, _, _ = run(capsys, "fit", "--data", "pain-relief", "--kernel", "normal", "--out", str(tmp_path))
    assert code == 0
    rows = read_csv((tmp_path / "survival.csv").read_text())
    assert list(rows[0]) == ["x", "km", "normal"]
    assert float(rows[0]["km"]) == 1.0
    assert {p.name for p in tmp_path.iterdir()} == {"fit.csv", "fit.json", "survival.csv", "manifest.json"}


def test_fit_profile_outputs(capsys, tmp_path):
    code, _, _ = run(
        capsys, "fit", "--data", "computer-breaks", "--kernel", "power-exponential",
        "--xi-grid=-0.5,0,0.5", "--threads", "1", "--out", str(tmp_path),
    )
    assert code == 0
    rows = read_csv((tmp_path / "profile.csv").read_text())
    assert [r["xi"] for r in rows] == ["-0.5", "0", "0.5"]


def test_fit_csv_format(capsys):
    code, out, _ = run(capsys, "fit", "--data", "computer-breaks", "--format", "csv", "--threads", "1")
    rows = read_csv(out)
    assert [r["param"] for r in rows] == ["lambda", "phi"]


def test_fit_nonconvergence_exit_code(capsys, monkeypatch):
    from dislog import cli

    monkeypatch.setattr(cli, "fit", functools.partial(cli.fit, max_iter=1))
    code, _, err = run(capsys, "fit", "--data", "pain-relief", "--kernel", "student-t", "--xi", "3")
    assert code == 4
    assert "did not converge" in err


def test_xi_and_grid_exclusive(capsys):
    code, _, err = run(capsys, "fit", "--data", "computer-breaks", "--kernel", "student-t", "--xi", "4", "--xi-grid", "1:3")
    assert code == 2
    assert "mutually exclusive" in err


def test_bad_kernel_and_xi(capsys):
    assert run(capsys, "fit", "--data", "computer-breaks", "--kernel", "cauchy")[0] == 2
    assert run(capsys, "fit", "--data", "computer-breaks", "--kernel", "student-t", "--xi", "-1")[0] == 2


def test_parse_xi_grid():
    assert parse_xi_grid("1:3", Family.STUDENT_T) == [(1.0,), (2.0,), (3.0,)]
    assert parse_xi_grid("0.1:0.3:0.1;1,2", Family.EXTENDED_BS_T) == [
        (0.1, 1.0), (0.1, 2.0), (0.2, 1.0), (0.2, 2.0), (0.3, 1.0), (0.3, 2.0)
    ]
    assert len(parse_xi_grid("default", Family.STUDENT_T)) > 1


# data errors


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "fit", "--data", str(tmp_path / "nope.csv"))
    assert code == 3
    assert "data error" in err


def test_malformed_file_reports_line(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,frequency\n0,4\n1,x\n")
    code, _, err = run(capsys, "fit", "--data", str(path))
    assert code == 3
    assert "line 3" in err


# gof


def test_gof_command(capsys):
    code, out, _ = run(capsys, "gof", "--data", "computer-breaks", "--threads", "1", "--format", "csv")
    assert code == 0
    rows = read_csv(out)
    assert sum(int(r["observed"]) for r in rows) == 128
    assert rows[-1]["cell"].endswith("+")


def test_gof_rejects_censored(capsys):
    assert run(capsys, "gof", "--data", "pain-relief")[0] == 2


def test_gof_small_n_boot(capsys):
    with pytest.raises(SystemExit) as info:
        main(["gof", "--data", "computer-breaks", "--n-boot", "10"])
    assert info.value.code == 2


# km


def test_km_pain_relief(capsys):
    code, out, _ = run(capsys, "km", "--data", "pain-relief")
    assert code == 0
    rows = read_csv(out)
    assert float(rows[0]["km"]) == 1.0
    assert int(rows[0]["at_risk"]) == 100 and int(rows[0]["events"]) == 64
    assert float(rows[1]["km"]) == pytest.approx(0.36, abs=1e-12)
    km = np.array([float(r["km"]) for r in rows])
    assert np.all(np.diff(km) <= 0)


@pytest.mark.xfail(strict=True, reason="the tabulated data give 0.36 at x=1 (0.2 strictly beyond 1)")
def test_km_pain_relief_table_value(capsys):
    _, out, _ = run(capsys, "km", "--data", "pain-relief")
    assert float(read_csv(out)[1]["km"]) == pytest.approx(0.4333, abs=5e-4)


def test_km_matches_survival_table(capsys, tmp_path):
    _, out, _ = run(capsys, "km", "--data", "pain-relief")
    run(capsys, "fit", "--data", "pain-relief", "--out", str(tmp_path))
    table = read_csv((tmp_path / "survival.csv").read_text())
    assert [r["km"] for r in read_csv(out)] == [r["km"] for r in table]


def test_km_on_uncensored(capsys):
    code, _, err = run(capsys, "km", "--data", "computer-breaks")
    assert code == 2
    assert "censored" in err


# pmf-table


def test_pmf_table_single_row(capsys):
    code, out, _ = run(capsys, "pmf-table", "--kernel", "normal", "--lambda", "2", "--phi", "1", "--xmax", "0")
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 1
    assert float(rows[0]["pmf"]) + float(rows[0]["rf"]) == pytest.approx(1.0, abs=1e-15)


def test_pmf_table_json(capsys):
    code, out, _ = run(
        capsys, "pmf-table", "--kernel", "student-t", "--xi", "4", "--lambda", "2", "--phi", "1.5",
        "--xmax", "5", "--format", "json",
    )
    table = json.loads(out)
    assert table["pmf"][0] == pytest.approx(0.30083340146970981, rel=1e-11)
    assert table["manifest"]["input_digest"] is None


def test_pmf_table_not_reingestable(capsys, tmp_path):
    _, out, _ = run(capsys, "pmf-table", "--lambda", "2", "--phi", "1", "--xmax", "4")
    rows = read_csv(out)
    path = tmp_path / "pseudo.csv"
    path.write_text("x,frequency\n" + "".join(f"{r['x']},{r['pmf']}\n" for r in rows))
    assert run(capsys, "fit", "--data", str(path))[0] == 3


def test_pmf_table_bad_args(capsys):
    assert run(capsys, "pmf-table", "--lambda", "-2", "--phi", "1", "--xmax", "3")[0] == 2
    assert run(capsys, "pmf-table", "--lambda", "2", "--phi", "1", "--xmax", "-1")[0] == 2


# simulate


def test_simulate_single_replicate(capsys):
    code, out, _ = run(
        capsys, "simulate", "--n", "40", "--phi", "1", "--censoring", "0", "--reps", "1", "--seed", "3",
        "--threads", "1",
    )
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 2
    phi = next(r for r in rows if r["param"] == "phi")
    assert float(phi["mse"]) == pytest.approx(float(phi["bias"]) ** 2, rel=1e-14)


def test_simulate_deterministic_bytes(capsys, tmp_path):
    argv = ["simulate", "--kernel", "student-t", "--xi", "4", "--n", "30", "--phi", "1,4",
            "--censoring", "0,0.1", "--reps", "5", "--seed", "7"]
    run(capsys, *argv, "--threads", "1", "--out", str(tmp_path / "a"))
    run(capsys, *argv, "--threads", "2", "--out", str(tmp_path / "b"))
    for name in ("study.csv", "study.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert manifest["command"] == "simulate"
    assert {"version", "timestamp", "arguments"} <= set(manifest)


def test_simulate_default_reps(capsys, monkeypatch):
    from dislog import cli

    seen = {}

    def fake_run_study(config, workers=None):
        seen["reps"] = config.replications
        return []

    monkeypatch.setattr(cli, "run_study", fake_run_study)
    run(capsys, "simulate", "--kernel", "normal")
    assert seen["reps"] == 1000
    run(capsys, "simulate", "--kernel", "extended-bs", "--xi", "0.5")
    assert seen["reps"] == 250


def test_simulate_bad_grid(capsys):
    assert run(capsys, "simulate", "--censoring", "1.5", "--reps", "1")[0] == 2
    assert run(capsys, "simulate", "--n", "0", "--reps", "1")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--n", "forty"])
    assert info.value.code == 2


def test_threads_env(capsys, monkeypatch):
    monkeypatch.setenv("DISLOG_THREADS", "zero")
    assert run(capsys, "gof", "--data", "computer-breaks")[0] == 4


def test_console_script_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "dislog.cli", "pmf-table", "--lambda", "2", "--phi", "1", "--xmax", "2"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "x,pmf,cdf,rf,hazard"


def test_embedded_text_is_verbatim():
    assert embedded_text("computer-breaks").startswith("x,frequency\n0,15\n")
