import json
from pathlib import Path

import numpy as np
import pytest

from iscreen import cli
from iscreen import io as iio
from iscreen.model import Dataset, PenaltySpec, StopReason
from iscreen.pipeline import preset_config, run
from iscreen.projection import ActiveSetState

SCHEMA = json.loads((Path(__file__).parent / "data" / "report_schema.json").read_text())


def _write(tmp_path, text, name="d.csv", newline="\n"):
    p = tmp_path / name
    p.write_bytes(text.replace("\n", newline).encode())
    return p


@pytest.fixture
def data_csv(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((40, 8))
    y = 2 * x[:, 1] - x[:, 5] + 0.3 * rng.standard_normal(40)
    ds = Dataset(x, y, column_names=[f"c{j}" for j in range(8)])
    path = tmp_path / "data.csv"
    iio.write_csv(ds, path)
    return path


def _run_cli(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# -- load_csv --------------------------------------------------------------


def test_load_small_csv(tmp_path):
    p = _write(tmp_path, "a,b,y\n1,2,3\n4,5,6\n7,8,10\n")
    ds = iio.load_csv(p, response="y")
    assert (ds.n, ds.p) == (3, 2)
    assert ds.names() == ("a", "b")
    np.testing.assert_array_equal(ds.y, [3, 6, 10])


def test_response_column_by_name_and_default(tmp_path):
    p = _write(tmp_path, "y,a,b\n1,2,3\n4,5,6\n")
    assert iio.load_csv(p, response="y").names() == ("a", "b")
    assert iio.load_csv(p).names() == ("y", "a")
    with pytest.raises(iio.ResponseColumnMissing):
        iio.load_csv(p, response="z")


def test_headerless_and_delimiter(tmp_path):
    p = _write(tmp_path, "1;2;3\n4;5;7\n")
    ds = iio.load_csv(p, response=0, has_header=False, delimiter=";")
    np.testing.assert_array_equal(ds.y, [1, 4])
    assert ds.names() == ("x1", "x2")


def test_nan_cell_located(tmp_path):
    p = _write(tmp_path, "a,b,y\n1,2,3\n4,NaN,6\n")
    with pytest.raises(iio.NonNumericCell) as err:
        iio.load_csv(p)
    assert (err.value.line, err.value.column) == (3, 2)


def test_ragged_row_and_empty(tmp_path):
    with pytest.raises(iio.ParseError) as err:
        iio.load_csv(_write(tmp_path, "a,b,y\n1,2,3\n4,5\n"))
    assert err.value.line == 3
    with pytest.raises(iio.EmptyFile):
        iio.load_csv(_write(tmp_path, "", name="e.csv"))
    with pytest.raises(iio.EmptyFile):
        iio.load_csv(_write(tmp_path, "a,b\n", name="h.csv"))


def test_crlf_equals_lf(tmp_path):
    text = "a,b,y\n1.5,2,3\n4,5e-3,6\n"
    lf = iio.load_csv(_write(tmp_path, text, "lf.csv"))
    crlf = iio.load_csv(_write(tmp_path, text, "crlf.csv", newline="\r\n"))
    np.testing.assert_array_equal(lf.x, crlf.x)
    np.testing.assert_array_equal(lf.y, crlf.y)


def test_csv_roundtrip_is_lossless(tmp_path):
    rng = np.random.default_rng(3)
    ds = Dataset(rng.standard_normal((25, 4)) * 1e3, rng.standard_normal(25) / 7)
    iio.write_csv(ds, tmp_path / "r.csv")
    back = iio.load_csv(tmp_path / "r.csv")
    np.testing.assert_array_equal(back.x, ds.x)
    np.testing.assert_array_equal(back.y, ds.y)


def test_run_report_roundtrip(data_csv):
    ds = iio.load_csv(data_csv)
    cfg = preset_config("VanISIS", ds.n, PenaltySpec("scad", 0.2), max_iters=3)
    traj = run(ds, cfg)
    rep = iio.RunReport({"path": "x"}, cfg, traj, list(traj.final_model), [], [traj.initial_rss])
    back = iio.RunReport.from_dict(json.loads(iio.dumps(rep.to_dict())))
    assert back.to_dict() == rep.to_dict()
    assert back.trajectory == traj


# -- screen ------------------------------------------------------------------


def _paths(o, pre=""):
    if isinstance(o, dict):
        for k, v in o.items():
            yield from _paths(v, f"{pre}.{k}" if pre else k)
    elif isinstance(o, list) and o and isinstance(o[0], dict):
        yield from _paths(o[0], pre + "[]")
    else:
        yield pre


def test_screen_fr_smoke_and_schema(capsys, data_csv):
    code, out, _ = _run_cli(capsys, "screen", "--input", data_csv, "--preset", "fr", "--max-iters", 5)
    assert code == cli.EXIT_OK
    rep = json.loads(out)
    assert len(rep["trajectory"]["records"]) == 5
    assert rep["trajectory"]["records"][0]["model"] == [1]
    assert rep["selected_names"][0] == "c1"
    assert rep["schema_version"] == SCHEMA["schema_version"]
    # config.penalty is null for FR, so compare everything except its subkeys
    golden = {p for p in SCHEMA["paths"] if not p.startswith("config.penalty.")}
    assert set(_paths(rep)) == golden | {"config.penalty"}


def test_screen_golden_schema_penalized(capsys, data_csv):
    code, out, _ = _run_cli(capsys, "screen", "--input", data_csv, "--preset", "isis",
                            "--lambda", 0.1, "--max-iters", 2)
    assert code == 0
    assert sorted(set(_paths(json.loads(out)))) == SCHEMA["paths"]


def test_screen_csv_format(capsys, data_csv):
    code, out, _ = _run_cli(capsys, "screen", "--input", data_csv, "--preset", "fr",
                            "--max-iters", 2, "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "k,model,rss" and lines[1].startswith("1,1,")


def test_preset_matches_explicit(capsys, data_csv):
    _, a, _ = _run_cli(capsys, "screen", "--input", data_csv, "--preset", "isis", "--lambda", 0.1)
    _, b, _ = _run_cli(capsys, "screen", "--input", data_csv, "--scr", 1, "--sel", 2,
                       "--penalty", "lasso", "--lambda", 0.1)
    ra, rb = json.loads(a), json.loads(b)
    assert ra["trajectory"] == rb["trajectory"]
    assert ra["config"] == rb["config"]


def test_output_file_written(capsys, data_csv, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = _run_cli(capsys, "screen", "--input", data_csv, "--preset", "fr",
                            "--output", target)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["selected"]


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["--preset", "isis"], "--lambda"),
        (["--preset", "fr", "--scr", "1"], "--preset"),
        (["--scr", "2"], "--scr"),
        (["--preset", "fr", "--lambda", "0.1"], "SEL2/SEL3"),
        (["--preset", "fr", "--a-size", "2", "--a-schedule", "1,2"], "exclusive"),
        (["--scr", "1", "--sel", "1", "--a-schedule", "1,x"], "integers"),
        (["--scr", "1", "--sel", "3", "--lambda", "-1"], "lambda"),
    ],
)
def test_usage_errors(capsys, data_csv, argv, needle):
    code, _, err = _run_cli(capsys, "screen", "--input", data_csv, *argv)
    assert code == cli.EXIT_USAGE
    assert needle in err


def test_data_errors(capsys, tmp_path):
    bad = _write(tmp_path, "a,b,y\n1,x,2\n3,4,5\n")
    code, _, err = _run_cli(capsys, "screen", "--input", bad, "--preset", "fr")
    assert code == cli.EXIT_DATA and "line 2, column 2" in err
    code, _, _ = _run_cli(capsys, "screen", "--input", tmp_path / "missing.csv", "--preset", "fr")
    assert code == cli.EXIT_DATA
    const = _write(tmp_path, "a,b,y\n1,1,2\n2,1,5\n3,1,1\n", name="c.csv")
    code, _, err = _run_cli(capsys, "screen", "--input", const, "--preset", "fr")
    assert code == cli.EXIT_DATA and "column 1" in err


def test_rank_deficient_first_step(capsys, tmp_path):
    rows = ["a,b,c,y"] + [f"{v},{v},{(v * 7) % 5},{v + 0.5 * (v % 2)}" for v in range(10)]
    p = _write(tmp_path, "\n".join(rows) + "\n")
    code, out, err = _run_cli(capsys, "screen", "--input", p, "--scr", 1, "--sel", 1, "--a-size", 2)
    assert code == cli.EXIT_NUMERIC
    assert "numerical failure" in err
    assert json.loads(out)["trajectory"]["stop_reason"] == StopReason.RANK_DEFICIENT.value


def test_argparse_errors_exit_2(capsys):
    for argv in (["verify", "--instances", "0"], ["screen"], ["bogus"]):
        with pytest.raises(SystemExit) as err:
            cli.main(argv)
        assert err.value.code == 2
    capsys.readouterr()


# -- simulate ----------------------------------------------------------------


SIM = ["simulate", "--n", 100, "--p", 200, "--t", 3, "--cov", "identity", "--reps", 10,
       "--preset", "fr", "--max-iters", 10, "--seed", 1]


def test_simulate_smoke_and_determinism(capsys):
    code, a, _ = _run_cli(capsys, *SIM, "--workers", 1)
    assert code == 0
    ra = json.loads(a)
    assert 0 <= ra["success_rate"] <= 1
    _, b, _ = _run_cli(capsys, *SIM, "--workers", 1)
    rb = json.loads(b)
    ra.pop("timing"), rb.pop("timing")
    assert ra == rb


def test_simulate_adversarial_needs_cs(capsys):
    code, _, err = _run_cli(capsys, "simulate", "--n", 50, "--p", 60, "--t", 4, "--adversarial",
                            "--preset", "sis", "--reps", 1)
    assert code == cli.EXIT_USAGE and "cs:RHO" in err
    code, out, _ = _run_cli(capsys, "simulate", "--n", 50, "--p", 60, "--t", 4, "--adversarial",
                            "--cov", "cs:0.5", "--beta-min", 5, "--preset", "sis", "--reps", 2,
                            "--workers", 1)
    assert code == 0 and json.loads(out)["spec"]["adversarial"] is True


def test_simulate_bad_cov(capsys):
    code, _, _ = _run_cli(capsys, "simulate", "--n", 50, "--p", 60, "--t", 2, "--cov", "ar1",
                          "--preset", "fr")
    assert code == cli.EXIT_USAGE


# -- verify ------------------------------------------------------------------


def test_verify_passes(capsys, tmp_path):
    target = tmp_path / "v.json"
    code, out, _ = _run_cli(capsys, "verify", "--instances", 50, "--seed", 7, "--output", target)
    assert code == 0
    assert out.count("PASS") == 9 and "FAIL" not in out
    summary = json.loads(target.read_text())
    assert summary["passed"]
    for s in summary["suites"]:
        if s["suite"] in ("rss_delta", "joint_coef"):
            assert s["max_error"] <= 1e-8


def test_verify_negative_control(capsys, monkeypatch):
    original = ActiveSetState.beta_hat_last
    monkeypatch.setattr(ActiveSetState, "beta_hat_last", lambda self, j: -original(self, j))
    code, out, err = _run_cli(capsys, "verify", "--instances", 20, "--seed", 1)
    assert code == cli.EXIT_VERIFY_FAILED
    assert "joint_coef" in err
    assert "FAIL" in out
