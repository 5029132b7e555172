"""Stage functions shared by the CLI, and the cached end-to-end runner."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Callable

from .cohort import cohort_analysis, score_improvement
from .corpus import ingest
from .enrich import enrich_all, read_features, write_features
from .graph import (
    InteractionSets,
    PruningPolicy,
    SemanticNetwork,
    assign_root,
    build_interactions,
    export_graph,
    project,
    prune,
)
from .regression import (
    aggregate_emotions,
    read_predictions,
    read_targets,
    run_regressions,
    write_predictions,
    write_targets,
)
from .text import count_hashtags, load_stopwords, read_stats, select_trendy, tokenize_corpus, write_stats

log = logging.getLogger(__name__)

STAGES = ("ingest", "hashtags", "build-graph", "enrich", "regress", "analyze")


class StageError(RuntimeError):
    """A stage failed; ``exit_code`` is 10 + the stage's position in STAGES."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        self.exit_code = 10 + STAGES.index(stage)
        super().__init__(f"[{stage}] {message}")


# ----------------------------------------------------------------------------
# stage bodies (file in, file out)
# ----------------------------------------------------------------------------


def stage_ingest(corpus_path, summary_path=None, targets_path=None, strict=False, workers=1) -> dict:
    corpus = ingest(corpus_path, strict=strict, workers=workers)
    summary = corpus.summary()
    if summary_path is not None:
        Path(summary_path).write_text(json.dumps(summary, indent=2, ensure_ascii=False) + "\n", "utf-8")
    if targets_path is not None:
        write_targets(aggregate_emotions(corpus), targets_path)
    return summary


def stage_hashtags(corpus_path, stats_path, stopwords_path=None, workers=1):
    corpus = ingest(corpus_path, workers=workers)
    stats = count_hashtags(corpus, load_stopwords(stopwords_path), workers=workers)
    write_stats(stats, stats_path)
    return stats


def stage_build_graph(
    corpus_path,
    stats_path,
    out_path,
    network_path,
    interactions_path,
    stopwords_path=None,
    policy: PruningPolicy | str = "mst",
    fmt="graphml",
    workers=1,
) -> SemanticNetwork:
    if isinstance(policy, str):
        policy = PruningPolicy.parse(policy)
    stopwords = load_stopwords(stopwords_path)
    corpus = ingest(corpus_path, workers=workers)
    index = select_trendy(read_stats(stats_path))
    tokens = tokenize_corpus(corpus, stopwords, workers)
    inter = build_interactions(corpus, index, stopwords, tokens=tokens)
    net = assign_root(prune(project(inter, workers), policy), inter)
    Path(network_path).write_text(net.to_json(), "utf-8")
    Path(interactions_path).write_text(inter.to_json(), "utf-8")
    export_graph(net, fmt, out_path)
    return net


def stage_enrich(network_path, interactions_path, variant, out_path, dense=False, workers=1):
    net = SemanticNetwork.from_json(Path(network_path).read_text("utf-8"))
    inter = InteractionSets.from_json(Path(interactions_path).read_text("utf-8"))
    mat = enrich_all(inter, net, variant, workers=workers)
    write_features(mat, out_path, dense=dense)
    return mat


def stage_regress(
    semantic_path,
    baseline_path,
    targets_path,
    min_tweets=10,
    alpha=0.05,
    report_path=None,
    table_path=None,
    predictions_dir=None,
    workers=1,
):
    sem = read_features(semantic_path)
    base = read_features(baseline_path)
    if sem.network_hash != base.network_hash:
        log.warning("semantic and baseline features were built from different networks")
    targets = read_targets(targets_path).filter(min_tweets)
    report = run_regressions(targets, sem, base, alpha, workers)
    if report_path is not None:
        Path(report_path).write_text(report.to_json(), "utf-8")
    if table_path is not None:
        Path(table_path).write_text(report.table(), "utf-8")
    if predictions_dir is not None:
        pdir = Path(predictions_dir)
        for variant, preds in report.predictions.items():
            write_predictions(report.user_ids, preds, pdir / f"predictions_{variant}.tsv")
    return report


def stage_analyze(baseline_pred_path, semantic_pred_path, targets_path, interactions_path, top_k=10,
                  report_path=None, table_path=None):
    ub, pb = read_predictions(baseline_pred_path)
    us, ps = read_predictions(semantic_pred_path)
    if ub != us:
        raise ValueError("prediction files cover different users")
    targets = read_targets(targets_path)
    pos = {u: i for i, u in enumerate(targets.user_ids)}
    missing = [u for u in ub if u not in pos]
    if missing:
        raise ValueError(f"user {missing[0]!r} has predictions but no target")
    y = targets.values[[pos[u] for u in ub]]
    inter = InteractionSets.from_json(Path(interactions_path).read_text("utf-8"))
    records = score_improvement(ub, pb, ps, y)
    report = cohort_analysis(records, inter, top_k=top_k)
    if report_path is not None:
        Path(report_path).write_text(report.to_json(), "utf-8")
    if table_path is not None:
        Path(table_path).write_text(report.table(), "utf-8")
    return report


# ----------------------------------------------------------------------------
# cached runner
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    corpus: str
    out_dir: str = "hashsem-out"
    stopwords: str | None = None
    prune: str = "mst"
    export: str = "graphml"
    min_tweets: int = 10
    alpha: float = 0.05
    top_k: int = 10
    workers: int = 1
    strict: bool = False

    def __post_init__(self):
        PruningPolicy.parse(self.prune)
        if self.export not in ("graphml", "dot"):
            raise ValueError(f"unknown export format {self.export!r}")
        if self.min_tweets < 1 or self.top_k < 1 or self.workers < 1:
            raise ValueError("min_tweets, top_k and workers must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "PipelineConfig":
        data = json.loads(Path(path).read_text("utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _bundled_stopwords_hash() -> str:
    data = resources.files("hashsem.data").joinpath("stopwords_fr.txt").read_bytes()
    return hashlib.sha256(data).hexdigest()


class _Runner:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self.mdir = self.out / "manifests"
        self.mdir.mkdir(parents=True, exist_ok=True)
        self.producer: dict[str, str] = {}
        self.status: dict[str, str] = {}

    def _manifest(self, stage: str) -> Path:
        return self.mdir / f"{stage}.json"

    def _verify(self, stage: str, name: str) -> None:
        """Check an artifact against the manifest of the stage that wrote it."""
        producer = self.producer.get(name)
        if producer is None:
            return
        manifest = json.loads(self._manifest(producer).read_text("utf-8"))
        path = self.out / name
        if not path.exists():
            raise StageError(producer, f"artifact {name} is missing")
        if sha256_file(path) != manifest["outputs"][name]:
            raise StageError(producer, f"artifact {name} does not match its recorded hash")

    def run(self, stage: str, inputs: dict[str, Path], params: dict, outputs: list[str], body: Callable):
        for name in outputs:
            self.producer[name] = stage
        try:
            in_hashes = {}
            for key, path in inputs.items():
                if path is None:
                    in_hashes[key] = None
                    continue
                if Path(path).parent == self.out:
                    self._verify(stage, Path(path).name)
                in_hashes[key] = sha256_file(path)
        except OSError as exc:
            raise StageError(stage, f"cannot read input: {exc}") from exc

        mpath = self._manifest(stage)
        if mpath.exists():
            manifest = json.loads(mpath.read_text("utf-8"))
            if manifest.get("inputs") == in_hashes and manifest.get("params") == params:
                stale = False
                for name in outputs:
                    path = self.out / name
                    if not path.exists():
                        stale = True
                    elif sha256_file(path) != manifest["outputs"].get(name):
                        raise StageError(stage, f"artifact {name} does not match its recorded hash")
                if not stale:
                    log.info("%-11s cached", stage)
                    self.status[stage] = "cached"
                    return

        log.info("%-11s running", stage)
        try:
            body()
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, f"{type(exc).__name__}: {exc}") from exc
        manifest = {
            "stage": stage,
            "inputs": in_hashes,
            "params": params,
            "outputs": {name: sha256_file(self.out / name) for name in outputs},
        }
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")
        self.status[stage] = "ran"


def run_all(cfg: PipelineConfig) -> dict[str, str]:
    """Run every stage into ``cfg.out_dir``; returns stage -> "ran" | "cached".

    Worker count never changes outputs and is not part of the cache key.
    """
    r = _Runner(cfg)
    out = r.out
    w = cfg.workers
    corpus = Path(cfg.corpus)
    stop = Path(cfg.stopwords) if cfg.stopwords else None
    stop_param = {"stopwords": "bundled:" + _bundled_stopwords_hash()} if stop is None else {}

    r.run(
        "ingest",
        {"corpus": corpus},
        {"strict": cfg.strict},
        ["ingest_summary.json", "targets.tsv"],
        lambda: stage_ingest(corpus, out / "ingest_summary.json", out / "targets.tsv", cfg.strict, w),
    )
    r.run(
        "hashtags",
        {"corpus": corpus, "stopwords": stop},
        dict(stop_param),
        ["hashtags.tsv"],
        lambda: stage_hashtags(corpus, out / "hashtags.tsv", stop, w),
    )
    graph_file = f"network.{cfg.export}"
    r.run(
        "build-graph",
        {"corpus": corpus, "stats": out / "hashtags.tsv", "stopwords": stop},
        {"prune": cfg.prune, "export": cfg.export, **stop_param},
        ["network.json", "interactions.json", graph_file],
        lambda: stage_build_graph(
            corpus, out / "hashtags.tsv", out / graph_file, out / "network.json",
            out / "interactions.json", stop, cfg.prune, cfg.export, w,
        ),
    )

    def enrich_body():
        stage_enrich(out / "network.json", out / "interactions.json", "semantic", out / "semantic.tsv", workers=w)
        stage_enrich(out / "network.json", out / "interactions.json", "baseline", out / "baseline.tsv", workers=w)

    r.run(
        "enrich",
        {"network": out / "network.json", "interactions": out / "interactions.json"},
        {},
        ["semantic.tsv", "baseline.tsv"],
        enrich_body,
    )
    r.run(
        "regress",
        {"semantic": out / "semantic.tsv", "baseline": out / "baseline.tsv", "targets": out / "targets.tsv"},
        {"min_tweets": cfg.min_tweets, "alpha": cfg.alpha},
        ["regression.json", "regression.txt", "predictions_baseline.tsv", "predictions_semantic.tsv"],
        lambda: stage_regress(
            out / "semantic.tsv", out / "baseline.tsv", out / "targets.tsv", cfg.min_tweets, cfg.alpha,
            out / "regression.json", out / "regression.txt", out, w,
        ),
    )
    r.run(
        "analyze",
        {
            "baseline": out / "predictions_baseline.tsv",
            "semantic": out / "predictions_semantic.tsv",
            "targets": out / "targets.tsv",
            "interactions": out / "interactions.json",
        },
        {"top_k": cfg.top_k},
        ["cohort.json", "cohort.txt"],
        lambda: stage_analyze(
            out / "predictions_baseline.tsv", out / "predictions_semantic.tsv", out / "targets.tsv",
            out / "interactions.json", cfg.top_k, out / "cohort.json", out / "cohort.txt",
        ),
    )
    return dict(r.status)

