"""Command line entry point: ``hashsem <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .corpus import CorpusError
from .graph import PruningPolicy
from .synth import SynthConfig, generate, write_synth

log = logging.getLogger("hashsem")


def _cmd_ingest(args) -> int:
    summary = pipeline.stage_ingest(args.input, None, args.targets_out, args.strict, args.workers)
    json.dump(summary, sys.stdout, indent=2, ensure_ascii=False)
    sys.stdout.write("\n")
    return 0


def _cmd_hashtags(args) -> int:
    stats = pipeline.stage_hashtags(args.input, args.out, args.stopwords, args.workers)
    log.info("%d distinct hashtags, mean count %.3f", len(stats.counts), stats.mean_count)
    return 0


def _cmd_build_graph(args) -> int:
    out = Path(args.out)
    network = args.network_out or out.with_name("network.json")
    inter = args.interactions_out or out.with_name("interactions.json")
    net = pipeline.stage_build_graph(
        args.corpus, args.index, out, network, inter, args.stopwords, args.prune, args.export, args.workers
    )
    log.info("network: %d nodes, %d edges, root %s", net.n, net.num_edges, net.label(net.root))
    return 0


def _cmd_enrich(args) -> int:
    variants = ("semantic", "baseline") if args.variant == "both" else (args.variant,)
    out = Path(args.out)
    for v in variants:
        path = out if len(variants) == 1 else out.with_name(f"{out.stem}_{v}{out.suffix}")
        pipeline.stage_enrich(args.network, args.interactions, v, path, args.dense, args.workers)
        log.info("wrote %s features to %s", v, path)
    return 0


def _cmd_regress(args) -> int:
    report = pipeline.stage_regress(
        args.features,
        args.baseline,
        args.targets,
        args.min_tweets,
        args.alpha,
        args.out,
        args.table,
        args.predictions_dir,
        args.workers,
    )
    sys.stdout.write(report.table())
    return 0


def _cmd_analyze(args) -> int:
    baseline, semantic = args.predictions
    report = pipeline.stage_analyze(
        baseline, semantic, args.targets, args.interactions, args.top_k, args.out, args.table
    )
    sys.stdout.write(report.table())
    return 0


def _cmd_synth(args) -> int:
    cfg = SynthConfig(
        seed=args.seed,
        n_users=args.users,
        n_hashtags=args.hashtags,
        community_count=args.communities,
        signal_strength=args.signal,
        noise_level=args.noise,
        tweets_per_user=(args.min_user_tweets, args.max_user_tweets),
    )
    corpus, ledger = generate(cfg)
    corpus_path, ledger_path = write_synth(corpus, ledger, args.out)
    log.info("wrote %d records to %s and ledger to %s", len(corpus), corpus_path, ledger_path)
    return 0


def _cmd_run_all(args) -> int:
    overrides = {
        "corpus": args.corpus,
        "stopwords": args.stopwords,
        "prune": args.prune,
        "export": args.export,
        "min_tweets": args.min_tweets,
        "alpha": args.alpha,
        "top_k": args.top_k,
        "out_dir": args.out_dir,
        "workers": args.workers,
        "strict": True if args.strict else None,
    }
    if args.config:
        cfg = pipeline.PipelineConfig.from_file(args.config, **overrides)
    else:
        if not args.corpus:
            raise SystemExit("run-all needs --config or --corpus")
        cfg = pipeline.PipelineConfig(**{k: v for k, v in overrides.items() if v is not None})
    status = pipeline.run_all(cfg)
    for stage in pipeline.STAGES:
        print(f"{stage:<12}{status[stage]}")
    return 0


def _prune_arg(text: str) -> str:
    try:
        PruningPolicy.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hashsem", description="Hashtag co-audience network features.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def workers(sp):
        sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("ingest", help="validate a corpus and print a summary")
    sp.add_argument("--input", required=True)
    sp.add_argument("--strict", action="store_true")
    sp.add_argument("--targets-out", help="also write per-user emotion targets")
    workers(sp)
    sp.set_defaults(func=_cmd_ingest)

    sp = sub.add_parser("hashtags", help="count hashtags")
    sp.add_argument("--input", required=True)
    sp.add_argument("--stopwords")
    sp.add_argument("--out", required=True)
    workers(sp)
    sp.set_defaults(func=_cmd_hashtags)

    sp = sub.add_parser("build-graph", help="project, prune, root and export the network")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--index", required=True, help="hashtag stats file from 'hashtags'")
    sp.add_argument("--stopwords")
    sp.add_argument("--prune", type=_prune_arg, default="mst", help="none | cutoff:<w> | mst")
    sp.add_argument("--export", choices=("graphml", "dot"), default="graphml")
    sp.add_argument("--out", required=True)
    sp.add_argument("--network-out")
    sp.add_argument("--interactions-out")
    workers(sp)
    sp.set_defaults(func=_cmd_build_graph)

    sp = sub.add_parser("enrich", help="per-user feature vectors")
    sp.add_argument("--network", required=True)
    sp.add_argument("--interactions", required=True)
    sp.add_argument("--variant", choices=("semantic", "baseline", "both"), default="both")
    sp.add_argument("--dense", action="store_true")
    sp.add_argument("--out", required=True)
    workers(sp)
    sp.set_defaults(func=_cmd_enrich)

    sp = sub.add_parser("regress", help="per-emotion OLS and F comparison")
    sp.add_argument("--features", required=True, help="semantic feature file")
    sp.add_argument("--baseline", required=True, help="baseline feature file")
    sp.add_argument("--targets", required=True)
    sp.add_argument("--min-tweets", type=int, default=10)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--out", help="JSON report path")
    sp.add_argument("--table", help="text table path")
    sp.add_argument("--predictions-dir")
    workers(sp)
    sp.set_defaults(func=_cmd_regress)

    sp = sub.add_parser("analyze", help="top-decile hashtag occurrence rates")
    sp.add_argument("--predictions", nargs=2, required=True, metavar=("BASELINE", "SEMANTIC"))
    sp.add_argument("--targets", required=True)
    sp.add_argument("--interactions", required=True)
    sp.add_argument("--top-k", type=int, default=10)
    sp.add_argument("--out", help="JSON report path")
    sp.add_argument("--table", help="text table path")
    sp.set_defaults(func=_cmd_analyze)

    d = SynthConfig()
    sp = sub.add_parser("synth", help="generate a synthetic corpus and ledger")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--users", type=int, default=d.n_users)
    sp.add_argument("--hashtags", type=int, default=d.n_hashtags)
    sp.add_argument("--communities", type=int, default=d.community_count)
    sp.add_argument("--signal", type=float, default=d.signal_strength)
    sp.add_argument("--noise", type=float, default=d.noise_level)
    sp.add_argument("--min-user-tweets", type=int, default=d.tweets_per_user[0])
    sp.add_argument("--max-user-tweets", type=int, default=d.tweets_per_user[1])
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_synth)

    sp = sub.add_parser("run-all", help="run every stage with caching")
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--corpus")
    sp.add_argument("--stopwords")
    sp.add_argument("--prune", type=_prune_arg)
    sp.add_argument("--export", choices=("graphml", "dot"))
    sp.add_argument("--min-tweets", type=int)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--top-k", type=int)
    sp.add_argument("--out-dir")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--strict", action="store_true")
    sp.set_defaults(func=_cmd_run_all)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except pipeline.StageError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except (CorpusError, OSError, ValueError, KeyError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
