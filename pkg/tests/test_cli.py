import json
import math

import numpy as np

from xxzquench import cli, entangle, model


def run(*argv):
    return cli.main(list(argv))


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return header, rows


def col(header, rows, name, cast=float):
    i = header.index(name)
    return [cast(r[i]) for r in rows]


def test_quench_single_point_grid(tmp_path):
    out = tmp_path / "q.csv"
    assert run("quench", "--n", "7", "--t-max-horizon", "0",
               "--grid-step", "0.1", "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert header == ["t", "a", "b", "c", "fef", "negativity"]
    assert len(rows) == 1
    assert rows[0][header.index("fef")] == "0.5"
    assert rows[0][header.index("t")] == "0"


def test_quench_three_sites_closed_form(tmp_path):
    out = tmp_path / "q3.csv"
    assert run("quench", "--n", "3", "--t-max-horizon", "3",
               "--grid-step", "0.05", "--out", str(out)) == 0
    header, rows = read_csv(out)
    ts = np.array(col(header, rows, "t"))
    a = np.array(col(header, rows, "a"))
    fef = np.array(col(header, rows, "fef"))
    expected = np.maximum(a, np.sin(math.sqrt(2) * ts) ** 2)
    assert np.max(np.abs(fef - expected)) < 1e-10


def test_quench_peak_matches_find_tmax(tmp_path):
    out = tmp_path / "q7.csv"
    assert run("quench", "--n", "7", "--out", str(out)) == 0
    header, rows = read_csv(out)
    fef = np.array(col(header, rows, "fef"))
    ts = np.array(col(header, rows, "t"))
    ref = entangle.find_tmax("freefermion", model.ChainSpec(n=7))
    i = int(np.argmax(fef))
    assert abs(fef[i] - ref.fef_at_tmax) < 1e-6
    assert abs(ts[i] - ref.t_max) <= ref.scan_resolution


def test_quench_writes_manifest(tmp_path):
    out = tmp_path / "q.csv"
    assert run("quench", "--n", "5", "--out", str(out)) == 0
    doc = json.loads((tmp_path / "q.csv.manifest.json").read_text())
    assert doc["tool"] == "xxzquench"
    assert doc["command"] == "quench"
    assert doc["config"]["engine"] == "freefermion"
    assert doc["config"]["spec"]["delta1"] == "inf"
    assert doc["outputs"] == ["q.csv"]


def test_quench_engine_cap_refusal(tmp_path, capsys):
    out = tmp_path / "q.csv"
    assert run("quench", "--n", "17", "--delta2", "0.5", "--out", str(out)) == 1
    assert "capped at 15" in capsys.readouterr().err
    assert not out.exists()


def test_quench_engine_auto_selection(tmp_path):
    out = tmp_path / "qed.csv"
    assert run("quench", "--n", "5", "--delta1", "3", "--t-max-horizon", "1",
               "--grid-step", "0.5", "--out", str(out)) == 0
    doc = json.loads((tmp_path / "qed.csv.manifest.json").read_text())
    assert doc["config"]["engine"] == "exactdiag"


def test_scan_single_size_anchor(tmp_path):
    out = tmp_path / "s.csv"
    assert run("scan-n", "--n", "9", "--jobs", "1", "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert len(rows) == 1
    assert abs(col(header, rows, "fef_at_tmax")[0] - 0.9117) < 5e-4
    assert col(header, rows, "engine", str)[0] == "freefermion"
    runtimes = json.loads((tmp_path / "s.csv.manifest.json").read_text())["runtimes_ms"]
    assert "9" in runtimes


def test_scan_finite_quenches_use_exact_engine(tmp_path):
    out = tmp_path / "s.csv"
    assert run("scan-n", "--n", "3,5", "--delta1", "3", "--delta2", "0",
               "--jobs", "1", "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert col(header, rows, "engine", str) == ["exactdiag", "exactdiag"]
    assert all(f > 0.5 for f in col(header, rows, "fef_at_tmax"))
    doc = json.loads((tmp_path / "s.csv.manifest.json").read_text())
    assert doc["fit"] is None  # fit is reserved for the analytic quench
    assert "conventions" in doc


def test_scan_rejects_even_without_override(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run("scan-n", "--n", "4,5", "--out", str(out)) == 1
    assert "--allow-even" in capsys.readouterr().err


def test_scan_even_with_override(tmp_path):
    out = tmp_path / "s.csv"
    assert run("scan-n", "--n", "4", "--allow-even", "--jobs", "1",
               "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert col(header, rows, "fef_at_tmax")[0] <= 0.5 + 1e-12


def test_scan_fit_in_manifest(tmp_path):
    out = tmp_path / "s.csv"
    assert run("scan-n", "--n", "25,33,41,49", "--jobs", "1", "--out", str(out)) == 0
    fit = json.loads((tmp_path / "s.csv.manifest.json").read_text())["fit"]
    assert fit is not None
    assert 0.0 < fit["exponent"] < 1.0
    assert fit["points"] == 4


def test_scan_reruns_are_bit_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["scan-n", "--n", "3,5,9", "--jobs", "1"]
    assert run(*argv, "--out", str(a)) == 0
    assert run(*argv, "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_scan_jobs_do_not_change_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("scan-n", "--n", "3,5,7,9", "--jobs", "1", "--out", str(a)) == 0
    assert run("scan-n", "--n", "3,5,7,9", "--jobs", "2", "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_disorder_zero_sigma_matches_quench(tmp_path):
    dis = tmp_path / "d.csv"
    qch = tmp_path / "q.csv"
    assert run("disorder", "--n", "7", "--sigma", "0", "--realizations", "3",
               "--jobs", "1", "--out", str(dis)) == 0
    assert run("quench", "--n", "7", "--out", str(qch)) == 0
    h_d, r_d = read_csv(tmp_path / "d_timeseries.csv")
    h_q, r_q = read_csv(qch)
    mean0 = col(h_d, r_d, "fef_mean_sigma=0")
    fef = col(h_q, r_q, "fef")
    assert len(mean0) == len(fef)
    np.testing.assert_array_equal(mean0, fef)


def test_disorder_summary_layout(tmp_path):
    out = tmp_path / "d.csv"
    assert run("disorder", "--n", "7", "--sigma", "0,0.1", "--realizations", "4",
               "--jobs", "1", "--seed", "5", "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert col(header, rows, "sigma") == [0.0, 0.1]
    assert col(header, rows, "realizations") == [1.0, 4.0]
    clean, noisy = col(header, rows, "mean_peak_fef")
    assert noisy < clean
    assert col(header, rows, "stderr_peak_fef")[1] > 0


def test_disorder_is_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["disorder", "--n", "7", "--sigma", "0.2", "--realizations", "5",
            "--seed", "17"]
    assert run(*argv, "--jobs", "1", "--out", str(a)) == 0
    assert run(*argv, "--jobs", "2", "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a_timeseries.csv").read_bytes() == \
        (tmp_path / "b_timeseries.csv").read_bytes()


def test_ed_compare_passes_for_small_chains(tmp_path):
    out = tmp_path / "e.csv"
    assert run("ed-compare", "--n", "3,5", "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert max(col(header, rows, "max_dev")) < 1e-8


def test_ed_compare_even_chain_is_separable(tmp_path):
    out = tmp_path / "e.csv"
    assert run("ed-compare", "--n", "6", "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert col(header, rows, "max_dev")[0] < 1e-8
    assert col(header, rows, "max_negativity")[0] <= 1e-10


def test_ed_compare_rejects_large_chains(tmp_path):
    assert run("ed-compare", "--n", "15", "--out", str(tmp_path / "e.csv")) == 1


def test_purify_from_value(tmp_path):
    out = tmp_path / "p.json"
    assert run("purify", "--fef", "0.544", "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["purifiable"] is True
    assert doc["iterations"] == 5
    assert abs(doc["expected_pairs"] - 361) < 36.1
    assert abs(doc["final_fidelity"] - 0.996) < 2e-3


def test_purify_boundary_source_reports_not_purifiable(tmp_path):
    out = tmp_path / "p.json"
    assert run("purify", "--fef", "0.5", "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["purifiable"] is False
    assert "1/2" in doc["criterion"]


def test_purify_from_scan_record(tmp_path):
    scan = tmp_path / "s.csv"
    out = tmp_path / "p.json"
    assert run("scan-n", "--n", "9,11", "--jobs", "1", "--out", str(scan)) == 0
    assert run("purify", "--record", str(scan), "--record-n", "9",
               "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["source"]["kind"] == "scan-record"
    assert doc["iterations"] == 1
    assert abs(doc["final_fidelity"] - 0.991) < 1e-3


def test_purify_requires_exactly_one_source(tmp_path):
    assert run("purify", "--out", str(tmp_path / "p.json")) == 1
    assert run("purify", "--fef", "0.7", "--record", "x.csv",
               "--out", str(tmp_path / "p.json")) == 1


def test_usage_errors_exit_one(tmp_path):
    assert run("quench", "--n", "7", "--bogus-flag") == 1
    assert run("quench", "--out", str(tmp_path / "q.csv")) == 1  # missing --n
    assert run("quench", "--n", "7", "--delta1", "0", "--out",
               str(tmp_path / "q.csv")) == 1  # upward quench rejected
