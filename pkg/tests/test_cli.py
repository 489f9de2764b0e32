import json
import os

import numpy as np
import pytest

from metaviz import cli
from metaviz import io as mio
from metaviz.model import Embedding


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def scene(tmp_path_factory):
    d = tmp_path_factory.mktemp("scene")
    assert run("simulate", "--structure", "gaussian-mixture", "--n", 180, "--p", 40, "--theta", 5,
               "--seed", 2, "--out-dir", d) == 0
    return d


def test_usage_errors(capsys):
    assert run() == cli.EXIT_USAGE
    assert run("score") == cli.EXIT_USAGE
    assert run("frobnicate") == cli.EXIT_USAGE
    assert run("embed", "--distance", "x", "--out", "y", "--sigma", 1, "--knn", 3) == cli.EXIT_USAGE
    assert "--knn" in capsys.readouterr().err
    assert run("bench", "--threads", -2) == cli.EXIT_USAGE


def test_data_errors(tmp_path, scene):
    assert run("score", "--manifest", tmp_path / "missing.json", "--out", tmp_path / "s.csv") == cli.EXIT_DATA
    (tmp_path / "t.bin").write_bytes((scene / "candidates" / "pca.csv").read_bytes()[:7])
    assert run("embed", "--distance", tmp_path / "t.bin", "--out", tmp_path / "e.csv") == cli.EXIT_DATA
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert run("evaluate", "--metric", "concordance", "--truth", scene / "signals.csv",
               "--embedding", bad) == cli.EXIT_DATA


def test_simulate_files(scene):
    for f in ("data.csv", "signals.csv", "labels.csv", "manifest.json", "scene.json"):
        assert (scene / f).exists()
    man = json.loads((scene / "manifest.json").read_text())
    assert man["n"] == 180 and man["kind"] == "clusters" and len(man["candidates"]) >= 8
    assert mio.load_embedding(str(scene / "data.csv")).coords.shape == (180, 40)


def test_score_single_candidate(tmp_path, rng):
    mio.save_embedding(Embedding("a", rng.standard_normal((20, 2))), tmp_path / "a.csv")
    mio.save_manifest(tmp_path / "m.json", [mio.ManifestEntry("a", "a.csv")])
    assert run("score", "--manifest", tmp_path / "m.json", "--out", tmp_path / "s.csv") == 0
    names, S = mio.load_scores(str(tmp_path / "s.csv"))
    assert names == ["a"] and np.all(S == 1.0)


def test_combine_embed_evaluate_chain(tmp_path, scene):
    m = scene / "manifest.json"
    assert run("combine", "--manifest", m, "--symmetrize", "--out", tmp_path / "d.bin") == 0
    assert mio.load_distance(str(tmp_path / "d.bin")).symmetrized
    assert run("embed", "--distance", tmp_path / "d.bin", "--method", "mds", "--out", tmp_path / "e.csv") == 0
    assert run("evaluate", "--metric", "silhouette", "--truth", scene / "labels.csv",
               "--embedding", tmp_path / "e.csv", "--out", tmp_path / "r.json") == 0
    r = json.loads((tmp_path / "r.json").read_text())
    assert -1 <= r["results"]["e"]["median_silhouette"] <= 1
    assert run("combine", "--manifest", m, "--naive", "--out", tmp_path / "n.csv") == 0
    assert run("evaluate", "--metric", "concordance", "--truth", scene / "signals.csv",
               "--distance", tmp_path / "n.csv") == 0


def test_pipeline_beats_candidates(tmp_path, scene, capsys):
    out = tmp_path / "out"
    assert run("pipeline", "--manifest", scene / "manifest.json", "--out-dir", out) == 0
    capsys.readouterr()
    assert run("evaluate", "--metric", "silhouette", "--truth", scene / "labels.csv",
               "--embedding", out / "meta_embedding.csv", "--manifest", scene / "manifest.json") == 0
    res = json.loads(capsys.readouterr().out)["results"]
    meta = res.pop("meta_embedding")["median_silhouette"]
    assert all(meta >= v["median_silhouette"] for v in res.values())


def test_pipeline_on_model_candidates(tmp_path):
    d = tmp_path / "sim"
    assert run("simulate", "--structure", "smiley", "--n", 60, "--p", 10, "--theta", 6,
               "--candidates", "model", "--model-k", 4, "--out-dir", d) == 0
    assert run("score", "--manifest", d / "manifest.json", "--out", tmp_path / "s.csv") == 0
    # raw model rows can be negative, so their meta-distance is rejected unless clamped
    assert run("pipeline", "--manifest", d / "manifest.json", "--out-dir", tmp_path / "o") == cli.EXIT_DATA
    c = tmp_path / "simc"
    assert run("simulate", "--structure", "smiley", "--n", 60, "--p", 10, "--theta", 6,
               "--candidates", "model", "--model-k", 4, "--clamp", "--out-dir", c) == 0
    assert run("pipeline", "--manifest", c / "manifest.json", "--out-dir", tmp_path / "o") == 0


def test_tau_metrics(tmp_path):
    t = np.linspace(0, 2 * np.pi, 30, endpoint=False)
    mio.save_embedding(Embedding("c", np.c_[np.cos(t), np.sin(t)]), tmp_path / "c.csv")
    mio.save_labels(np.arange(30), tmp_path / "o.csv", header="order")
    for metric in ("tau-circular", "tau-principal"):
        assert run("evaluate", "--metric", metric, "--truth", tmp_path / "o.csv",
                   "--embedding", tmp_path / "c.csv", "--out", tmp_path / "r.json") == 0
    assert run("evaluate", "--metric", "tau-circular", "--truth", tmp_path / "o.csv") == cli.EXIT_USAGE


def _files(d):
    return {f: (d / f).read_bytes() for f in sorted(os.listdir(d))}


def test_threads_and_reruns_byte_identical(tmp_path, scene):
    outs = []
    for tag, threads in (("a", 1), ("b", 8), ("c", 1)):
        o = tmp_path / tag
        assert run("pipeline", "--manifest", scene / "manifest.json", "--out-dir", o,
                   "--naive", "--threads", threads) == 0
        outs.append(_files(o))
    assert outs[0] == outs[1] == outs[2]


def test_bench_reports(capsys):
    assert run("bench", "--n", 60, "--k", 3) == 0
    rep = json.loads(capsys.readouterr().out)
    if rep["backends"].get("compiled", {}).get("available"):
        assert rep["bit_identical"] is True
