import csv

import numpy as np
import pytest

from msnfa.cli import main
from msnfa.io import load_model, save_model
from msnfa.model import Family, MsnfaModel, SnfaComponent
from msnfa.selection import adjusted_rand_index


@pytest.fixture(scope="module")
def sim_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(1)
    comps = [
        SnfaComponent(np.full(5, m), rng.normal(scale=0.7, size=(5, 1)), np.full(5, 0.3), np.array([2.0]))
        for m in (0.0, 4.0)
    ]
    save_model(d / "true.json", MsnfaModel(np.array([0.4, 0.6]), comps, Family.MSNFA), {})
    assert main(["simulate", "--model", str(d / "true.json"), "--n", "300", "--seed", "3",
                 "--out", str(d / "sim.csv")]) == 0
    return d


def read_rows(path, delimiter=","):
    with open(path, newline="") as fh:
        return [r for r in csv.reader(fh, delimiter=delimiter)]


def run_fit(d, tag, *extra):
    argv = ["fit", "--data", str(d / "sim.csv"), "--label-column", "label", "--g", "1:2", "--q", "1",
            "--family", "both", "--starts", "2", "--max-iter", "200", "--seed", "5",
            "--out", str(d / f"{tag}.json"), "--assign", str(d / f"{tag}.csv"),
            "--criteria", str(d / f"{tag}.tsv"), *extra]
    return main(argv)


def test_simulate_output(sim_files):
    rows = read_rows(sim_files / "sim.csv")
    assert rows[0] == ["y0", "y1", "y2", "y3", "y4", "label"]
    assert len(rows) == 301
    assert {r[-1] for r in rows[1:]} == {"0", "1"}


def test_fit_workflow(sim_files):
    d = sim_files
    assert run_fit(d, "a") == 0
    crit = read_rows(d / "a.tsv", "\t")
    assert crit[0] == ["g", "q", "family", "loglik", "m", "BIC", "ICL", "AWE", "ENT", "ARI", "CCR"]
    assert len(crit) == 1 + 2 * 1 * 2
    assert all(len(r[5].split(".")[1]) == 4 and len(r[9].split(".")[1]) == 3 for r in crit[1:])
    assign = read_rows(d / "a.csv")
    post = np.array([[float(v) for v in r[2:]] for r in assign[1:]])
    assert np.allclose(post.sum(axis=1), 1.0, atol=1e-9)
    truth = [r[-1] for r in read_rows(d / "sim.csv")[1:]]
    assert adjusted_rand_index(truth, [r[1] for r in assign[1:]]) >= 0.9
    model = load_model(d / "a.json")
    assert model.g == 2


def test_fit_is_deterministic(sim_files):
    d = sim_files
    if not (d / "a.tsv").exists():
        run_fit(d, "a")
    assert run_fit(d, "b") == 0
    assert (d / "a.tsv").read_text() == (d / "b.tsv").read_text()
    assert (d / "a.json").read_text() == (d / "b.json").read_text()


def test_fit_original_units(sim_files):
    d = sim_files
    assert run_fit(d, "o", "--standardize", "--original-units", "--select", "icl") == 0
    orig = load_model(d / "o.json")
    X = np.array([[float(v) for v in r[:-1]] for r in read_rows(d / "sim.csv")[1:]])
    means = sorted(c.mu[0] for c in orig.components)
    assert means[0] < X[:, 0].mean() < means[1]


def test_identifiability_warning(sim_files, capsys):
    d = sim_files
    main(["fit", "--data", str(d / "sim.csv"), "--label-column", "label", "--g", "1", "--q", "3",
          "--starts", "1", "--max-iter", "5"])
    assert "identifiability" in capsys.readouterr().err


def test_score_and_se(sim_files):
    d = sim_files
    if not (d / "a.json").exists():
        run_fit(d, "a")
    assert main(["score", "--model", str(d / "a.json"), "--data", str(d / "sim.csv"), "--label-column",
                 "label", "--out", str(d / "s.csv")]) == 0
    rows = read_rows(d / "s.csv")
    assert rows[0] == ["f0"] and len(rows) == 301
    assert main(["score", "--model", str(d / "a.json"), "--data", str(d / "sim.csv"), "--label-column",
                 "label", "--out", str(d / "s2.csv"), "--posterior-weights"]) == 0
    assert main(["se", "--model", str(d / "a.json"), "--data", str(d / "sim.csv"), "--label-column",
                 "label", "--eta", "1e-4", "--out", str(d / "se.tsv")]) == 0
    se = read_rows(d / "se.tsv", "\t")
    assert se[0] == ["parameter", "se"] and se[1][0] == "pi[0]"


def test_eval_identical(sim_files, capsys):
    f = str(sim_files / "sim.csv")
    assert main(["eval", "--truth", f + ":label", "--pred", f + ":label"]) == 0
    out = capsys.readouterr().out
    assert "ARI\t1.000" in out and "CCR\t1.000" in out


def test_exit_codes(sim_files, tmp_path):
    d = sim_files
    assert main(["fit", "--data", str(d / "sim.csv"), "--g", "x", "--q", "1"]) == 1
    assert main(["nonsense"]) == 1
    assert main(["fit", "--data", str(tmp_path / "missing.csv"), "--g", "1", "--q", "1"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,x\n")
    assert main(["fit", "--data", str(bad), "--g", "1", "--q", "1"]) == 2
    assert main(["eval", "--truth", str(d / "sim.csv") + ":nope", "--pred", str(d / "sim.csv") + ":label"]) == 2
    tiny = tmp_path / "tiny.csv"
    rng = np.random.default_rng(0)
    tiny.write_text("a,b,c,d\n" + "\n".join(",".join(map(str, r)) for r in rng.normal(size=(10, 4))) + "\n")
    out = tmp_path / "crit.tsv"
    assert main(["fit", "--data", str(tiny), "--g", "3", "--q", "2", "--starts", "2", "--criteria", str(out)]) == 3


def test_failed_fits_listed_in_comment_block(tmp_path):
    rng = np.random.default_rng(0)
    data = tmp_path / "d.csv"
    data.write_text("a,b,c,d\n" + "\n".join(",".join(map(str, r)) for r in rng.normal(size=(14, 4))) + "\n")
    out = tmp_path / "crit.tsv"
    assert main(["fit", "--data", str(data), "--g", "1:4", "--q", "2", "--starts", "2", "--max-iter", "20",
                 "--criteria", str(out)]) == 0
    lines = out.read_text().splitlines()
    rows = [ln for ln in lines[1:] if not ln.startswith("#")]
    failed = [ln for ln in lines if ln.startswith("# g=")]
    assert "# failed fits" in lines and failed
    assert len(rows) + len(failed) == 4
    assert lines.index("# failed fits") > max(lines.index(r) for r in rows)
