import json

import pytest

from rnnclust import automata, cli, runner
from rnnclust.runner import ExperimentConfig, ResultRow


def tiny(**kw):
    base = dict(languages=[{"builtin": "tomita5"}], seeds=[0], dataset_size=600, validation_size=150,
                len_range=(1, 8), train={"max_epochs": 3}, kmeans=["n", "8n"], dbscan=[0.5],
                optics=False, mean_shift=[4], classifiers=["logreg"], accuracy_cutoff=0.0,
                output_dir="")
    base.update(kw)
    return ExperimentConfig(**base)


def test_k_from_factor():
    got = [runner.k_from_factor(f, 4) for f in runner.KMEANS_FACTORS]
    assert got == [3, 4, 5, 8, 16, 24, 32]


def test_network_shape():
    assert runner.network_shape("n", 8) == (1, 8)
    assert runner.network_shape("1.5n", 5) == (1, 8)
    assert runner.network_shape("2xn", 8) == (2, 8)
    with pytest.raises(ValueError):
        runner.network_shape("3n", 8)


def test_config_round_trip():
    cfg = tiny()
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again == cfg and again.digest() == cfg.digest()
    assert tiny(seeds=[1]).digest() != cfg.digest()


@pytest.mark.parametrize("bad", [dict(seeds=[]), dict(archs=["nope"]), dict(accuracy_cutoff=2),
                                 dict(validation_size=600), dict(train={"learning_rate": -1})])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        tiny(**bad)


@pytest.mark.parametrize("name", ["smoke", "desk", "paper", "construction"])
def test_profiles_are_valid(name):
    cfg = runner.profile(name, output_dir="x")
    assert cfg.output_dir == "x" and cfg.languages


def rows_for(*wambs, method="kmeans", params="k=n"):
    return [ResultRow(f"e{i}", "t", 4, 2, "gru", 1, 8, 0, 1.0, method, params,
                      num_clusters=4, amb=w, wamb=w, perfect=w == 0) for i, w in enumerate(wambs)]


def test_report_aggregates():
    rows = rows_for(0.0, 0.2, 0.0) + rows_for(0.5, method="lda", params="")
    rows.append(ResultRow("x", "t", 4, 2, "gru", 1, 8, 0, 1.0, "kmeans", "k=n", status="error"))
    agg = runner.report(rows)
    assert [a["method"] for a in agg] == ["lda", "kmeans"]
    km = agg[1]
    assert km["runs"] == 3 and km["perfect"] == 2
    assert km["wamb_mean"] == pytest.approx(0.2 / 3) and km["wamb_max"] == 0.2
    text = runner.format_report(agg)
    assert "k-means (k=n)" in text and "2/3" in text
    table = runner.perfect_count_table(agg)
    assert "2/3" in table and "0/1" in table
    with pytest.raises(ValueError):
        runner.report([])


def test_rows_round_trip(tmp_path):
    rows = rows_for(0.0, 0.25)
    runner.write_rows(rows, tmp_path / "r.csv")
    assert runner.read_rows(tmp_path / "r.csv") == rows


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return out, runner.run_experiment(tiny(), out)


def test_run_outputs(tiny_run):
    out, rows = tiny_run
    assert [(r.method, r.params) for r in rows] == [
        ("logreg", ""), ("dbscan", "eps=0.5"), ("kmeans", "k=n"), ("kmeans", "k=8n"),
        ("mean_shift", "bw=alpha/4")]
    header = (out / "results.csv").read_text().splitlines()[0]
    assert header == ",".join(runner.ROW_FIELDS)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema_version"] == runner.SCHEMA_VERSION and manifest["rows"] == 5
    assert (out / "timings.csv").exists() and not (out / "results.partial.csv").exists()
    assert ExperimentConfig.load(out / "config.json") == tiny()


def test_run_is_byte_identical(tiny_run, tmp_path):
    out, _ = tiny_run
    runner.run_experiment(tiny(), tmp_path)
    assert (tmp_path / "results.csv").read_bytes() == (out / "results.csv").read_bytes()


def test_filtered_and_error_rows():
    rows = runner.run_experiment(tiny(accuracy_cutoff=1.0, train={"max_epochs": 1}))
    assert len(rows) == 1 and rows[0].status == "filtered"
    rows = runner.run_experiment(tiny(languages=[{"file": "/nonexistent.fsm"}]))
    assert rows[0].status == "error" and rows[0].method == "language"


def test_cell_errors_become_rows():
    # k = 8n exceeds the number of distinct vectors of a barely trained net on tiny data
    rows = runner.run_experiment(tiny(dataset_size=40, validation_size=4, len_range=(1, 1),
                                      kmeans=["8n"], dbscan=[], mean_shift=[]))
    km = [r for r in rows if r.method == "kmeans"][0]
    assert km.status == "error" and "TooFewPoints" in km.error


def test_classifier_only_grid():
    rows = runner.run_experiment(tiny(kmeans=[], dbscan=[], mean_shift=[],
                                      classifiers=["lda", "logreg"]))
    assert [r.method for r in rows] == ["lda", "logreg"]


def test_curve_tsv():
    pts = [runner.CurvePoint(1, 0.5, 0.9), runner.CurvePoint(2, 1.0, 0.1)]
    text = runner.curve_tsv(pts, -1.0)
    assert text.splitlines()[0] == "epoch\taccuracy\twamb"
    assert text.splitlines()[-1] == "# spearman\t-1.0"
    assert "undefined" in runner.curve_tsv(pts, None)


def test_training_curve_runs():
    from rnnclust import data, train
    d = automata.tomita(5)
    ds = data.sample_dataset(d, 300, (1, 6), 0.2, seed=0)
    pts, rho = runner.track_training_curve(d, "gru", 0, ds, train.TrainConfig(max_epochs=3))
    assert [p.epoch for p in pts] == [0, 1, 2, 3]  # includes the untrained net
    assert rho is None or -1 <= rho <= 1


def test_cli_run_and_report(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(tiny().to_json())
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert cli.main(["report", str(out / "results.csv"), "-o", str(tmp_path / "t.txt")]) == 0
    text = capsys.readouterr().out
    assert "# Perfect" in text and (tmp_path / "t.txt").read_text() in text
    assert cli.main(["report", str(tmp_path / "missing.csv")]) == 1
