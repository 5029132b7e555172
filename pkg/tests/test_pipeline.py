import json
import shutil
import subprocess
import sys

import pytest

from hashsem import cli
from hashsem.pipeline import STAGES, PipelineConfig, StageError, run_all

REPORTS = ("regression.json", "regression.txt", "cohort.json", "cohort.txt")


@pytest.fixture(scope="module")
def pipeline_out(tmp_path_factory, small_synth_dir):
    out = tmp_path_factory.mktemp("run")
    status = run_all(PipelineConfig(corpus=str(small_synth_dir / "corpus.jsonl"), out_dir=str(out)))
    return out, status


def test_all_artifacts(pipeline_out):
    out, status = pipeline_out
    assert status == {s: "ran" for s in STAGES}
    for name in (
        "ingest_summary.json", "targets.tsv", "hashtags.tsv", "network.json", "interactions.json",
        "network.graphml", "semantic.tsv", "baseline.tsv", "predictions_baseline.tsv",
        "predictions_semantic.tsv", *REPORTS,
    ):
        assert (out / name).stat().st_size > 0, name
    for s in STAGES:
        m = json.loads((out / "manifests" / f"{s}.json").read_text())
        assert m["stage"] == s and m["outputs"]


def test_rerun_is_cached(tmp_path, small_synth_dir):
    cfg = PipelineConfig(corpus=str(small_synth_dir / "corpus.jsonl"), out_dir=str(tmp_path))
    run_all(cfg)
    before = {n: (tmp_path / n).read_bytes() for n in REPORTS}
    assert run_all(cfg) == {s: "cached" for s in STAGES}
    assert {n: (tmp_path / n).read_bytes() for n in REPORTS} == before
    # changing a downstream parameter reruns only what depends on it
    status = run_all(PipelineConfig(corpus=cfg.corpus, out_dir=str(tmp_path), top_k=5))
    assert status["regress"] == "cached" and status["analyze"] == "ran"
    # worker count is not part of the cache key
    assert set(run_all(PipelineConfig(corpus=cfg.corpus, out_dir=str(tmp_path), top_k=5, workers=2)).values()) == {
        "cached"
    }


def test_corrupt_stats_names_stage(tmp_path, small_synth_dir):
    cfg = PipelineConfig(corpus=str(small_synth_dir / "corpus.jsonl"), out_dir=str(tmp_path))
    run_all(cfg)
    stats = tmp_path / "hashtags.tsv"
    data = bytearray(stats.read_bytes())
    data[-2] ^= 0x01  # flip one bit in the last count
    stats.write_bytes(bytes(data))
    with pytest.raises(StageError) as info:
        run_all(cfg)
    assert info.value.stage == "hashtags"
    assert "hashtags" in str(info.value)
    assert info.value.exit_code == 10 + STAGES.index("hashtags")


def test_deleted_artifact_reruns(tmp_path, small_synth_dir):
    cfg = PipelineConfig(corpus=str(small_synth_dir / "corpus.jsonl"), out_dir=str(tmp_path))
    run_all(cfg)
    (tmp_path / "cohort.txt").unlink()
    status = run_all(cfg)
    assert status["analyze"] == "ran" and status["regress"] == "cached"


def test_failing_stage_exit_code(tmp_path):
    bad = tmp_path / "c.jsonl"
    bad.write_text('{"tweet_id": "1", "user_id": "a", "text": "sans hashtag"}\n', encoding="utf-8")
    code = cli.main(["run-all", "--corpus", str(bad), "--out-dir", str(tmp_path / "o")])
    assert code == 10 + STAGES.index("build-graph")
    code = cli.main(["run-all", "--corpus", str(tmp_path / "nope.jsonl"), "--out-dir", str(tmp_path / "o")])
    assert code == 10


def test_config_file_and_overrides(tmp_path, small_synth_dir):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"corpus": str(small_synth_dir / "corpus.jsonl"), "out_dir": str(tmp_path / "a"),
                                "export": "dot", "top_k": 4}))
    cfg = PipelineConfig.from_file(conf, top_k=7, alpha=None)
    assert (cfg.top_k, cfg.export, cfg.alpha, cfg.min_tweets) == (7, "dot", 0.05, 10)
    assert cli.main(["run-all", "--config", str(conf), "--top-k", "3"]) == 0
    assert (tmp_path / "a" / "network.dot").exists()
    assert len((tmp_path / "a" / "cohort.txt").read_text().splitlines()) == 4
    conf.write_text(json.dumps({"corpus": "x", "bogus": 1}))
    with pytest.raises(ValueError):
        PipelineConfig.from_file(conf)
    with pytest.raises(ValueError):
        PipelineConfig(corpus="x", prune="cutoff:0")


def test_cli_stage_by_stage(tmp_path, small_synth_dir, pipeline_out, capsys):
    ref, _ = pipeline_out
    corpus = str(small_synth_dir / "corpus.jsonl")
    t = tmp_path
    assert cli.main(["ingest", "--input", corpus, "--targets-out", str(t / "targets.tsv")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["records"] > 0 and summary["skipped"] == 0
    assert cli.main(["hashtags", "--input", corpus, "--out", str(t / "hashtags.tsv")]) == 0
    assert cli.main(["build-graph", "--corpus", corpus, "--index", str(t / "hashtags.tsv"), "--prune", "mst",
                     "--export", "graphml", "--out", str(t / "network.graphml")]) == 0
    assert cli.main(["enrich", "--network", str(t / "network.json"), "--interactions",
                     str(t / "interactions.json"), "--out", str(t / "features.tsv")]) == 0
    assert cli.main(["regress", "--features", str(t / "features_semantic.tsv"), "--baseline",
                     str(t / "features_baseline.tsv"), "--targets", str(t / "targets.tsv"),
                     "--out", str(t / "regression.json"), "--predictions-dir", str(t)]) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[0].split() == ["Emotion", "Baseline", "R2", "Semantic", "R2", "Sig"]
    assert cli.main(["analyze", "--predictions", str(t / "predictions_baseline.tsv"),
                     str(t / "predictions_semantic.tsv"), "--targets", str(t / "targets.tsv"),
                     "--interactions", str(t / "interactions.json"), "--out", str(t / "cohort.json")]) == 0
    for name in ("hashtags.tsv", "network.json", "interactions.json", "network.graphml",
                 "regression.json", "cohort.json"):
        assert (t / name).read_bytes() == (ref / name).read_bytes(), name


def test_cli_synth(tmp_path):
    assert cli.main(["synth", "--seed", "1", "--users", "50", "--hashtags", "8", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "corpus.jsonl").exists() and (tmp_path / "ledger.json").exists()


def test_cli_bad_prune_arg(capsys):
    with pytest.raises(SystemExit):
        cli.main(["build-graph", "--corpus", "c", "--index", "i", "--prune", "cutoff:0", "--out", "o"])


def test_console_script(tmp_path, small_synth_dir):
    exe = shutil.which("hashsem")
    cmd = [exe] if exe else [sys.executable, "-m", "hashsem"]
    out = subprocess.run(cmd + ["ingest", "--input", str(small_synth_dir / "corpus.jsonl")],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["records"] > 0
    out = subprocess.run(cmd + ["ingest", "--input", str(tmp_path / "missing")], capture_output=True, text=True)
    assert out.returncode == 1 and "Error" in out.stderr
