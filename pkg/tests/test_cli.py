import json
import subprocess
import sys

import numpy as np
import pytest

from modnet.cli import main
from modnet.core import MnmModel, read_csv, write_csv
from modnet.sampler import SamplerConfig, gibbs_sample
from modnet.simgen import random_mnm


@pytest.fixture
def data_csv(tmp_path):
    x = gibbs_sample(random_mnm(3).model, 400, SamplerConfig(seed=3)).data
    path = tmp_path / "data.csv"
    write_csv(path, x, [f"x{k}" for k in range(1, 14)])
    return path


def test_fit_without_moderators_has_no_threeway(tmp_path, data_csv, capsys):
    out = tmp_path / "m.json"
    assert main(["fit", "--data", str(data_csv), "--moderators", "none", "--out", str(out), "--jobs", "1"]) == 0
    d = json.loads(out.read_text())
    assert d["omega"] == []
    assert d["column_names"][0] == "x1"
    assert d["meta"]["rule"] == "AND" and d["meta"]["gamma"] == 0.5
    assert "3-way interactions: 0" in capsys.readouterr().out


def test_fit_all_moderators_summary(tmp_path, data_csv, capsys):
    small = tmp_path / "five.csv"
    raw = read_csv(data_csv)
    write_csv(small, raw.values[:, :5], raw.column_names[:5])
    out = tmp_path / "m.json"
    assert main(["fit", "--data", str(small), "--moderators", "all", "--out", str(out), "--jobs", "1"]) == 0
    text = capsys.readouterr().out
    assert "Pairwise interactions:" in text and "3-way interactions:" in text
    m = MnmModel.from_json(out.read_text())
    assert f"Pairwise interactions: {len(m.nonzero_beta())}" in text


def test_moderator_zero_is_usage_error(tmp_path, data_csv, capsys):
    code = main(["fit", "--data", str(data_csv), "--moderators", "0", "--out", str(tmp_path / "m.json")])
    assert code == 1
    assert "index out of range" in capsys.readouterr().err


def test_missing_argument_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["fit", "--out", "x.json"])
    assert info.value.code == 1


@pytest.mark.parametrize("content", ["a,b,c\n1,2,3\n4,oops,6\n", "a,b,c\n1,5,3\n2,5,4\n3,5,1\n"])
def test_bad_data_exit_code(tmp_path, content, capsys):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    assert main(["fit", "--data", str(path), "--out", str(tmp_path / "m.json")]) == 2
    assert "data error" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["fit", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path / "m.json")]) == 2


def test_gen_model_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen-model", "--kind", "random", "--seed", "7", "--out", str(a)]) == 0
    assert main(["gen-model", "--kind", "random", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert MnmModel.from_json(a.read_text()) == random_mnm(7).model


def test_seed_from_environment(tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("MODNET_SEED", "7")
    main(["gen-model", "--out", str(a)])
    main(["gen-model", "--seed", "7", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_show_output(tmp_path, capsys):
    path = tmp_path / "m.json"
    m = MnmModel(5, np.zeros(5), {(2, 5): 0.4318148}, {(3, 4, 5): 0.0564465}, np.ones(5))
    path.write_text(m.to_json())
    assert main(["show", "--model", str(path), "--int", "3,4,5"]) == 0
    assert capsys.readouterr().out == "Interaction: 3-4-5\nWeight: 0.0564465\nSign: 1 (Positive)\n"
    assert main(["show", "--model", str(path), "--int", "5,2"]) == 0
    assert "Weight: 0.4318148" in capsys.readouterr().out
    assert main(["show", "--model", str(path), "--int", "1,9"]) == 1


def test_sample_writes_data_and_metadata(tmp_path):
    model = tmp_path / "m.json"
    main(["gen-model", "--seed", "2", "--out", str(model)])
    out = tmp_path / "s.csv"
    assert main(["sample", "--model", str(model), "--n", "50", "--seed", "4", "--out", str(out)]) == 0
    raw = read_csv(out)
    assert raw.n == 50 and raw.p == 13
    meta = json.loads((tmp_path / "s.meta.json").read_text())
    assert {"seed", "tau", "burn_in", "rejection_rate", "generator_name"} <= set(meta)
    again = tmp_path / "t.csv"
    main(["sample", "--model", str(model), "--n", "50", "--seed", "4", "--out", str(again)])
    assert out.read_bytes() == again.read_bytes()


def test_sampler_abort_exit_code(tmp_path):
    import itertools

    m = MnmModel(5, np.zeros(5), {}, {t: 5.0 for t in itertools.combinations(range(1, 6), 3)}, np.ones(5))
    path = tmp_path / "bad.json"
    path.write_text(m.to_json())
    code = main(["sample", "--model", str(path), "--n", "3", "--max-attempts", "20", "--out", str(tmp_path / "s.csv")])
    assert code == 3


def test_export_graph_formats(tmp_path, data_csv):
    model = tmp_path / "m.json"
    main(["fit", "--data", str(data_csv), "--moderators", "13", "--out", str(model), "--jobs", "1"])
    dot, js, nw = tmp_path / "g.dot", tmp_path / "g.json", tmp_path / "nw.dot"
    assert main(["export-graph", "--model", str(model), "--out", str(dot)]) == 0
    assert main(["export-graph", "--model", str(model), "--out", str(js)]) == 0
    assert main(["export-graph", "--model", str(model), "--nodewise", "--out", str(nw)]) == 0
    assert dot.read_text().startswith("graph mnm {")
    assert json.loads(js.read_text())["nodewise"] is False
    assert nw.read_text().startswith("digraph mnm {")


def test_baseline_command(tmp_path, data_csv, capsys):
    out = tmp_path / "split.json"
    assert main(["baseline", "--data", str(data_csv), "--moderator", "13", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["n_low"] + d["n_high"] == 400
    assert "flagged edges:" in capsys.readouterr().out


def test_simulate_blank_precision_cells(tmp_path, capsys):
    out, summary = tmp_path / "r.csv", tmp_path / "s.txt"
    code = main(["simulate", "--reps", "5", "--estimators", "mnm1,mnm3,split", "--n-grid", "30,1808",
                 "--no-screen", "--jobs", "1", "--out", str(out), "--summary", str(summary)])
    assert code == 0
    table = summary.read_text()
    pr = next(line for line in table.splitlines() if line.startswith("MNM (1)") and "PR" in line)
    # nothing is estimated at n=30, so the first precision cell is empty
    assert len(pr.split()) == 4
    assert "SPLIT" in table


def test_unknown_estimator(tmp_path):
    assert main(["simulate", "--estimators", "mnm9", "--out", str(tmp_path / "r.csv")]) == 1


def test_closing_the_loop(tmp_path):
    model, data, fitted = tmp_path / "m.json", tmp_path / "d.csv", tmp_path / "f.json"
    assert main(["gen-model", "--kind", "random", "--seed", "11", "--out", str(model)]) == 0
    assert main(["sample", "--model", str(model), "--n", "1808", "--seed", "11", "--out", str(data)]) == 0
    assert main(["fit", "--data", str(data), "--moderators", "13", "--out", str(fitted), "--jobs", "1"]) == 0
    truth = random_mnm(11)
    est = MnmModel.from_json(fitted.read_text())
    # per edge: is its pairwise weight present, and (if moderated) its moderation effect
    checks = []
    for (i, j), t in truth.edge_types.items():
        checks.append((est.get((i, j)) != 0) == (truth.model.get((i, j)) != 0))
        if truth.model.get((i, j, 13)):
            checks.append(est.get((i, j, 13)) > 0)
    assert len(checks) == 10
    assert sum(checks) >= 9


def test_console_entry_point(tmp_path):
    out = tmp_path / "m.json"
    res = subprocess.run([sys.executable, "-m", "modnet.cli", "gen-model", "--kind", "isolated", "--out", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert MnmModel.from_json(out.read_text()).p == 8
