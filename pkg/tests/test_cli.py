import csv
import hashlib
import json
import math
import os
import subprocess
import sys

import pytest

from transprop.cli import main


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_cli(*args, env=None):
    full_env = dict(os.environ)
    full_env.update(env or {})
    return subprocess.run([sys.executable, "-m", "transprop", *args], capture_output=True, text=True, env=full_env)


@pytest.fixture
def frustrated_csv(tmp_path):
    p = tmp_path / "scores.csv"
    p.write_text("0,-2,3\n-2,0,-1\n3,-1,0\n")
    return p


def test_cluster_score_matrix(tmp_path, frustrated_csv):
    out, summary = tmp_path / "part.tsv", tmp_path / "summary.json"
    assert main(["cluster", "--scores", str(frustrated_csv), "-o", str(out), "--summary", str(summary)]) == 0
    assert out.read_text() == "0\t0\n1\t0\n2\t1\n"
    doc = json.loads(summary.read_text())
    assert doc["clusters"] == 2 and doc["converged"] and doc["violations"] == 0
    assert doc["objective"] == pytest.approx(2.0)
    assert doc["wall_time_s"] >= 0
    manifest = json.loads((tmp_path / "part.tsv.manifest.json").read_text())
    assert manifest["subcommand"] == "cluster"
    assert manifest["config"]["solver"]["lambda"] == 0.5
    assert list(manifest["inputs"].values())[0] == hashlib.sha256(frustrated_csv.read_bytes()).hexdigest()


def test_cluster_reads(tmp_path):
    prefix = tmp_path / "sim"
    assert main(["simulate", "-K", "2", "-L", "30", "-N", "6", "--error-rate", "0.01", "--seed", "5",
                 "--out-prefix", str(prefix)]) == 0
    out, summary = tmp_path / "part.tsv", tmp_path / "summary.json"
    assert main(["cluster", "--reads", f"{prefix}.reads.txt", "--error-rate", "0.01", "-o", str(out),
                 "--summary", str(summary)]) == 0
    truth = [int(line.split("\t")[1]) for line in (tmp_path / "sim.truth.tsv").read_text().splitlines()]
    labels = [int(line.split("\t")[1]) for line in out.read_text().splitlines()]
    assert len(set(truth)) == 2
    # identical grouping up to relabelling
    assert len(set(zip(truth, labels))) == 2 == len(set(labels))
    assert json.loads(summary.read_text())["converged"]


def test_cluster_stdout(capsys, frustrated_csv):
    assert main(["cluster", "--scores", str(frustrated_csv)]) == 0
    assert capsys.readouterr().out == "0\t0\n1\t0\n2\t1\n"


@pytest.mark.parametrize("content, message", [("", "no data points"), ("0,1\n1,0,2\n", ":2:")])
def test_cluster_bad_input_exit_2(tmp_path, capsys, content, message):
    p = tmp_path / "bad.csv"
    p.write_text(content)
    assert main(["cluster", "--scores", str(p)]) == 2
    assert message in capsys.readouterr().err


def test_cluster_empty_reads_exit_2(tmp_path, capsys):
    p = tmp_path / "reads.txt"
    p.write_text("")
    assert main(["cluster", "--reads", str(p), "--error-rate", "0.1"]) == 2
    assert "no data points" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["cluster"],
        ["cluster", "--reads", "x.txt"],
        ["cluster", "--scores", "does-not-exist.csv"],
        ["simulate", "-K", "2", "-N", "6", "--error-rate", "0.5", "--seed", "1", "--out-prefix", "unused"],
        ["prior", "--n", "3", "--x", "-1"],
        ["cluster", "--bogus-flag"],
    ],
)
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_nonconvergence_exit_3(tmp_path, frustrated_csv):
    out = tmp_path / "p.tsv"
    assert main(["cluster", "--scores", str(frustrated_csv), "--max-iters", "1", "-o", str(out)]) == 3
    assert out.exists()
    assert main(["cluster", "--scores", str(frustrated_csv), "--max-iters", "1", "--allow-nonconverged",
                 "-o", str(out)]) == 0


def test_simulate_outputs(tmp_path):
    prefix = tmp_path / "d"
    assert main(["simulate", "-K", "2", "-L", "8", "-N", "6", "--error-rate", "0", "--seed", "1",
                 "--out-prefix", str(prefix)]) == 0
    reads = (tmp_path / "d.reads.txt").read_text().split()
    assert len(reads) == 6 and len(set(reads)) <= 2 and all(len(r) == 8 for r in reads)
    truth = (tmp_path / "d.truth.tsv").read_text().splitlines()
    assert [t.split("\t")[0] for t in truth] == [str(i) for i in range(6)]
    doc = json.loads((tmp_path / "d.manifest.json").read_text())
    assert doc["config"]["seed"] == 1


def test_simulate_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", "-K", "4", "-L", "30", "-N", "40", "--error-rate", "0.05", "--seed", "77",
                     "--out-prefix", str(tmp_path / name)]) == 0
    for ext in ("reads.txt", "truth.tsv"):
        assert (tmp_path / f"a.{ext}").read_bytes() == (tmp_path / f"b.{ext}").read_bytes()


def test_fig4_noiseless(tmp_path):
    out = tmp_path / "fig4.csv"
    assert main(["experiment-fig4", "-K", "3,6", "--error-rates", "0", "--sims", "3", "--seed", "2",
                 "-o", str(out)]) == 0
    rows = read_csv(out)
    sims = [r for r in rows if r["row"] == "sim"]
    assert len(sims) == 6
    for r in sims:
        assert r["recovered_clusters"] == r["sampled_templates"]
        assert r["misclassified_edges"] == "0"
    assert {r["row"] for r in rows} == {"sim", "mean", "sd"}


def test_fig4_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["experiment-fig4", "-K", "5", "--error-rates", "0.05", "--sims", "1", "--seed", "9",
                     "-o", str(tmp_path / f"{name}.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_fig5_small(tmp_path):
    out = tmp_path / "fig5.csv"
    assert main(["experiment-fig5", "-K", "5", "-N", "30", "--error-rates", "0,0.05", "--sims", "2", "--seed", "3",
                 "-o", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["p_e", "d", "f0", "f1", "pairs_mean", "tp_errors_mean", "baseline_errors_mean"]
    noiseless = [r for r in rows if float(r["p_e"]) == 0]
    assert all(float(r["tp_errors_mean"]) == 0 and float(r["baseline_errors_mean"]) == 0 for r in noiseless)
    d0 = [r for r in rows if r["d"] == "0"]
    assert all(float(r["tp_errors_mean"]) == 0 and float(r["baseline_errors_mean"]) == 0 for r in d0)


def test_prior_modes(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["prior", "--mode", "zfun", "--x", "1", "--n", "15", "-o", str(out)]) == 0
    assert read_csv(out)[0]["Z"] == "1382958545"
    assert main(["prior", "--mode", "blue-fraction", "--x", "1", "--n", "3", "-o", str(out)]) == 0
    row = read_csv(out)[0]
    assert float(row["blue_fraction"]) == pytest.approx(0.4, rel=1e-12) and row["Z"] == ""
    assert main(["prior", "--mode", "cluster-moments", "--x", "1", "--n", "3", "-o", str(out)]) == 0
    row = read_csv(out)[0]
    assert float(row["mean_clusters"]) == pytest.approx(2.0)
    assert float(row["sd_clusters"]) == pytest.approx(math.sqrt(0.4))
    assert main(["prior", "--mode", "critical-x", "--n", "50,100", "-o", str(out)]) == 0
    rows = read_csv(out)
    assert [r["N"] for r in rows] == ["50", "100"]
    assert 1 < float(rows[0]["x_crossing"]) < 1 + 4 * math.log(50) / 50


def test_prior_range(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["prior", "--x-range", "0.5", "2", "4", "--log", "--n", "5,10", "-o", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 8
    assert float(rows[0]["x"]) == pytest.approx(0.5) and float(rows[-1]["x"]) == pytest.approx(2.0)


def test_manifest_replay(tmp_path, frustrated_csv):
    out = tmp_path / "fig4.csv"
    assert main(["experiment-fig4", "-K", "4", "--error-rates", "0.01", "--sims", "2", "--seed", "4",
                 "-o", str(out)]) == 0
    first = out.read_bytes()
    out.unlink()
    assert main(["replay", f"{out}.manifest.json"]) == 0
    assert out.read_bytes() == first

    part = tmp_path / "part.tsv"
    assert main(["cluster", "--scores", str(frustrated_csv), "-o", str(part)]) == 0
    frustrated_csv.write_text("0,1,1\n1,0,1\n1,1,0\n")
    assert main(["replay", f"{part}.manifest.json"]) == 2


def test_module_entry_point_and_threads(tmp_path):
    outs = []
    for threads in ("1", "2"):
        out = tmp_path / f"t{threads}.csv"
        proc = run_cli("experiment-fig5", "-K", "4", "-N", "40", "--sims", "1", "--seed", "8",
                       "--threads", threads, "-o", str(out), env={"NUMBA_NUM_THREADS": "2"})
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
