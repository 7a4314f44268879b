"""Command-line interface.

Subcommands: ingest, index, label, train, route, eval, pipeline, synth.
Exit codes: 0 success, 1 usage error, 2 data validation error, 3 transport
error. Every command is deterministic for a fixed config and seed when the
mock answerer is in play.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bm25 import DEFAULT_K, INDEX_VERSION, InvertedIndex, build_index
from .classifier import (
    CLASSES_3,
    CLASSES_4,
    DEFAULT_DIMENSION,
    DEFAULT_HASH_SEED,
    WEIGHTS_VERSION,
    FeatureConfig,
    TrainConfig,
    interpolate,
    load_weights,
    route,
    save_weights,
    train,
)
from .corpus import QADataset, QAExample, ingest_corpus, ingest_qa
from .engine import (
    DEFAULT_MAX_STEPS,
    HttpAnswerer,
    MockOracleAnswerer,
    Strategy,
    execute,
    load_oracle,
)
from .errors import DataError, FlareRagError, TransportError, UsageError
from .evaluate import (
    DEFAULT_ALPHA_GRID,
    ClassifierPolicy,
    InterpolatedPolicy,
    StaticPolicy,
    parse_policy_name,
    run_policy,
    sweep_alpha,
)
from .labeler import (
    label_combined,
    label_cost_dataset,
    label_reliability_dataset,
    read_labels,
    write_exclusions,
    write_labels,
)
from .report import render_sweep_figures, write_query_log, write_records_json, write_sweep_csv
from .synthetic import make_benchmark, make_random_oracle_set

_STATIC_POLICIES = {
    "static:no": Strategy.NO_RETRIEVAL,
    "static:single": Strategy.SINGLE_STEP,
    "static:multi": Strategy.MULTI_STEP,
}

_PIPELINE_DEFAULTS: dict = {
    "corpus": None,
    "qa": None,
    "oracle": None,
    "out": None,
    "answerer": "mock",
    "endpoint": None,
    "k": DEFAULT_K,
    "max_steps": DEFAULT_MAX_STEPS,
    "alphas": list(DEFAULT_ALPHA_GRID),
    "dimension": DEFAULT_DIMENSION,
    "hash_seed": DEFAULT_HASH_SEED,
    "epochs": 20,
    "batch_size": 64,
    "learning_rate": 0.1,
    "l2": 1e-4,
    "seed": 42,
    "four_class": False,
    "figures": True,
    "workers": 1,
    "on_transport": "abort",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise UsageError(message)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _check_alpha(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise UsageError(f"alpha must be in [0, 1], got {alpha}")
    return alpha


def _parse_alphas(text: str) -> list[float]:
    try:
        alphas = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"bad alpha list {text!r}") from None
    if not alphas:
        raise UsageError("empty alpha list")
    return [_check_alpha(a) for a in alphas]


def _build_answerer(args, qa: QADataset | None):
    """Mock answerer from --oracle, or HTTP answerer from --endpoint / env."""
    endpoint = getattr(args, "endpoint", None)
    if endpoint:
        return HttpAnswerer(url=endpoint)
    oracle_path = getattr(args, "oracle", None)
    if not oracle_path:
        raise UsageError("oracle required for mock answerer (or pass --endpoint)")
    return MockOracleAnswerer(load_oracle(oracle_path, qa))


def _load_index(args) -> InvertedIndex:
    index = InvertedIndex.load(args.index)
    corpus_path = getattr(args, "corpus", None)
    if corpus_path:
        index.attach_texts(ingest_corpus(corpus_path))
    return index


def _train_classes_and_exemptions(mode: str, four_class: bool):
    classes = CLASSES_4 if four_class else CLASSES_3
    allow_absent = set()
    if mode == "reliability":
        allow_absent.add(Strategy.NO_RETRIEVAL)
    if four_class:
        # unanswerable examples exist only when some query has no correct strategy
        allow_absent.add(Strategy.UNANSWERABLE)
    return classes, allow_absent


def _join_labels_with_questions(labels, qa: QADataset) -> list[tuple[str, Strategy]]:
    examples = []
    for entry in labels:
        example = qa.get(entry.query_id)
        if example is None:
            raise DataError(f"label {entry.query_id} has no matching question")
        examples.append((example.question, entry.label))
    return examples


def cmd_ingest(args) -> int:
    if args.kind == "corpus":
        corpus = ingest_corpus(args.infile)
        if args.out:
            corpus.export(args.out)
        print(f"ingested {len(corpus)} documents")
    else:
        qa = ingest_qa(args.infile)
        if args.out:
            qa.export(args.out)
        print(f"ingested {len(qa)} examples")
    return 0


def cmd_index_build(args) -> int:
    corpus = ingest_corpus(args.corpus)
    index = build_index(corpus)
    index.save(args.out)
    print(f"indexed {index.n_docs} documents -> {args.out}")
    return 0


def cmd_index_search(args) -> int:
    if args.k < 0:
        raise UsageError("k must be >= 0")
    index = InvertedIndex.load(args.index)
    for hit in index.search(args.query, args.k):
        print(f"{hit.doc_id}\t{hit.score:.6f}")
    return 0


def cmd_label(args) -> int:
    qa = ingest_qa(args.qa)
    if args.kind == "reliability":
        labels = label_reliability_dataset(qa)
        write_labels(labels, args.out)
        print(f"labeled {len(labels)} queries -> {args.out}")
        return 0
    if args.kind == "combined":
        cost = read_labels(args.cost)
        reliability = read_labels(args.reliability)
        labels = label_combined(cost, reliability)
        write_labels(labels, args.out)
        print(f"labeled {len(labels)} queries -> {args.out}")
        return 0
    answerer = _build_answerer(args, qa)
    index = _load_index(args)
    labels, exclusions = label_cost_dataset(
        answerer, index, qa, k=args.k, max_steps=args.max_steps, four_class=args.four_class
    )
    write_labels(labels, args.out)
    exclusions_path = args.exclusions or str(Path(args.out).with_suffix("")) + "_exclusions.jsonl"
    write_exclusions(exclusions, exclusions_path)
    print(f"labeled {len(labels)} queries, excluded {len(exclusions)} -> {args.out}")
    return 0


def cmd_train(args) -> int:
    qa = ingest_qa(args.qa)
    labels = read_labels(args.labels)
    examples = _join_labels_with_questions(labels, qa)
    classes, allow_absent = _train_classes_and_exemptions(args.mode, args.four_class)
    config = FeatureConfig(dimension=args.dimension, hash_seed=args.hash_seed)
    hyper = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        l2=args.l2,
        seed=args.seed,
    )
    result = train(examples, config, hyper, classes=classes, allow_absent=allow_absent)
    save_weights(result.weights, args.out)
    print(f"trained on {len(examples)} examples, final loss {result.losses[-1]:.6f} -> {args.out}")
    return 0


def cmd_route(args) -> int:
    alpha = _check_alpha(args.alpha)
    coc = load_weights(args.coc)
    roc = load_weights(args.roc, expected_config=coc.config)
    decision = route(interpolate(coc, roc, alpha), args.query)
    classes = coc.classes
    print(f"strategy: {decision.strategy.value}")
    if decision.predicted is not decision.strategy:
        print(f"predicted: {decision.predicted.value} (executed as {decision.strategy.value})")
    print("logits: " + " ".join(f"{c.value}={v:.6f}" for c, v in zip(classes, decision.logits)))
    print(
        "probabilities: "
        + " ".join(f"{c.value}={v:.6f}" for c, v in zip(classes, decision.probabilities))
    )
    if args.execute:
        if not args.index:
            raise UsageError("--execute needs --index")
        index = _load_index(args)
        if args.endpoint:
            answerer = _build_answerer(args, None)
        elif args.oracle:
            answerer = MockOracleAnswerer(load_oracle(args.oracle), strict=False)
        else:
            raise UsageError("--execute needs --oracle or --endpoint")
        query = QAExample(
            id="cli-query", question=args.query, gold_answers=("",), origin="single_hop", dataset="cli"
        )
        trace = execute(answerer, index, query, decision.strategy, k=args.k, max_steps=args.max_steps)
        print(f"answer: {trace.answer}")
        print(f"steps_used: {trace.steps_used}")
    return 0


def _build_policy(args):
    kind, alpha = parse_policy_name(args.policy)
    if kind in _STATIC_POLICIES:
        return StaticPolicy(_STATIC_POLICIES[kind])
    if kind == "adaptive_rag":
        if not args.weights:
            raise UsageError("adaptive_rag needs --weights")
        return ClassifierPolicy(load_weights(args.weights))
    # flare: alpha from the policy string or the --alpha flag
    if alpha is None:
        alpha = args.alpha
    if alpha is None:
        raise UsageError("flare policy needs an alpha (flare:alpha=X or --alpha)")
    if not (args.coc and args.roc):
        raise UsageError("flare policy needs --coc and --roc")
    coc = load_weights(args.coc)
    roc = load_weights(args.roc, expected_config=coc.config)
    return InterpolatedPolicy(coc, roc, _check_alpha(alpha))


def cmd_eval_run(args) -> int:
    qa = ingest_qa(args.qa)
    policy = _build_policy(args)
    answerer = _build_answerer(args, qa)
    index = _load_index(args)
    record, rows = run_policy(
        policy,
        qa,
        answerer,
        index,
        k=args.k,
        max_steps=args.max_steps,
        on_transport=args.on_transport,
        workers=args.workers,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_sweep_csv([record], out_dir / "results.csv")
    write_query_log(rows, out_dir / "queries.jsonl")
    write_records_json([record], out_dir / "records.json")
    print(
        f"{record.policy}: accuracy={record.accuracy:.3f} mean_steps={record.mean_steps:.1f} "
        f"total_steps={record.total_steps} n={record.n}"
    )
    return 0


def cmd_eval_sweep(args) -> int:
    qa = ingest_qa(args.qa)
    answerer = _build_answerer(args, qa)
    index = _load_index(args)
    coc = load_weights(args.coc)
    roc = load_weights(args.roc, expected_config=coc.config)
    records, rows = sweep_alpha(
        qa,
        coc,
        roc,
        answerer,
        index,
        grid=args.alphas,
        k=args.k,
        max_steps=args.max_steps,
        on_transport=args.on_transport,
        workers=args.workers,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(records, out_dir / "sweep.csv")
    write_query_log(rows, out_dir / "queries.jsonl")
    write_records_json(records, out_dir / "records.json")
    if args.figures:
        render_sweep_figures(records, out_dir / "figures")
    for record in records:
        print(
            f"{record.policy}: accuracy={record.accuracy:.3f} mean_steps={record.mean_steps:.1f} "
            f"total_steps={record.total_steps} n={record.n}"
        )
    return 0


def cmd_synth(args) -> int:
    if args.kind == "benchmark":
        bench = make_benchmark(n=args.n) if args.seed is None else make_benchmark(n=args.n, seed=args.seed)
    else:
        bench = (
            make_random_oracle_set(n=args.n)
            if args.seed is None
            else make_random_oracle_set(n=args.n, seed=args.seed)
        )
    paths = bench.write(args.out_dir)
    for name in ("corpus", "qa", "oracle"):
        print(f"{name}: {paths[name]}")
    return 0


def _merge_pipeline_config(args) -> dict:
    config = dict(_PIPELINE_DEFAULTS)
    if args.config:
        path = Path(args.config)
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"unreadable config file {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError(f"{path}: config must be a JSON object")
        unknown = [key for key in loaded if key not in _PIPELINE_DEFAULTS]
        if unknown:
            raise UsageError(f"{path}: unknown config keys: {', '.join(sorted(unknown))}")
        config.update(loaded)
    for key in _PIPELINE_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if isinstance(config["alphas"], str):
        config["alphas"] = _parse_alphas(config["alphas"])
    config["alphas"] = [_check_alpha(float(a)) for a in config["alphas"]]
    for key in ("corpus", "qa", "out"):
        if not config[key]:
            raise UsageError(f"pipeline config needs {key!r}")
    if config["answerer"] not in ("mock", "http"):
        raise UsageError(f"answerer must be 'mock' or 'http', got {config['answerer']!r}")
    if config["answerer"] == "mock" and not config["oracle"]:
        raise UsageError("oracle required for mock answerer")
    return config


def cmd_pipeline(args) -> int:
    config = _merge_pipeline_config(args)
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)

    def stage(name, fn):
        try:
            return fn()
        except FlareRagError as exc:
            raise type(exc)(f"stage {name}: {exc}") from exc

    inputs = {}
    for key in ("corpus", "qa", "oracle"):
        if config[key]:
            path = Path(config[key])
            if not path.exists():
                raise DataError(f"input {key} file not found: {path}")
            inputs[key] = {"path": str(path), "sha256": _sha256(path)}

    def run_ingest():
        corpus = ingest_corpus(config["corpus"])
        qa = ingest_qa(config["qa"])
        store = out / "store"
        store.mkdir(exist_ok=True)
        corpus.export(store / "corpus.jsonl")
        qa.export(store / "qa.jsonl")
        print(f"stage ingest: {len(corpus)} documents, {len(qa)} queries")
        return corpus, qa

    corpus, qa = stage("ingest", run_ingest)

    def run_index():
        index = build_index(corpus)
        index.save(out / "index.json")
        print(f"stage index: {index.n_docs} documents")
        return index

    index = stage("index", run_index)

    def run_answerer():
        if config["answerer"] == "http":
            return HttpAnswerer(url=config["endpoint"])
        return MockOracleAnswerer(load_oracle(config["oracle"], qa))

    answerer = stage("answerer", run_answerer)
    labels_dir = out / "labels"
    labels_dir.mkdir(exist_ok=True)

    def run_label_cost():
        labels, exclusions = label_cost_dataset(
            answerer,
            index,
            qa,
            k=config["k"],
            max_steps=config["max_steps"],
            four_class=config["four_class"],
        )
        write_labels(labels, labels_dir / "cost.jsonl")
        write_exclusions(exclusions, labels_dir / "cost_exclusions.jsonl")
        print(f"stage label_cost: {len(labels)} labeled, {len(exclusions)} excluded")
        return labels

    cost_labels = stage("label_cost", run_label_cost)

    def run_label_reliability():
        labels = label_reliability_dataset(qa)
        write_labels(labels, labels_dir / "reliability.jsonl")
        print(f"stage label_reliability: {len(labels)} labeled")
        return labels

    reliability_labels = stage("label_reliability", run_label_reliability)

    feature_config = FeatureConfig(dimension=config["dimension"], hash_seed=config["hash_seed"])
    hyper = TrainConfig(
        epochs=config["epochs"],
        batch_size=config["batch_size"],
        learning_rate=config["learning_rate"],
        l2=config["l2"],
        seed=config["seed"],
    )
    weights_dir = out / "weights"
    weights_dir.mkdir(exist_ok=True)

    def make_trainer(mode, labels, target):
        def run_train():
            classes, allow_absent = _train_classes_and_exemptions(mode, config["four_class"])
            examples = _join_labels_with_questions(labels, qa)
            result = train(examples, feature_config, hyper, classes=classes, allow_absent=allow_absent)
            save_weights(result.weights, target)
            print(f"stage train_{mode}: {len(examples)} examples, final loss {result.losses[-1]:.6f}")
            return result.weights

        return run_train

    coc = stage("train_cost", make_trainer("cost", cost_labels, weights_dir / "coc.json"))
    roc = stage(
        "train_reliability", make_trainer("reliability", reliability_labels, weights_dir / "roc.json")
    )

    def run_sweep():
        eval_dir = out / "eval"
        eval_dir.mkdir(exist_ok=True)
        records, rows = sweep_alpha(
            qa,
            coc,
            roc,
            answerer,
            index,
            grid=config["alphas"],
            k=config["k"],
            max_steps=config["max_steps"],
            on_transport=config["on_transport"],
            workers=config["workers"],
        )
        baselines = []
        for strategy in _STATIC_POLICIES.values():
            record, static_rows = run_policy(
                StaticPolicy(strategy),
                qa,
                answerer,
                index,
                k=config["k"],
                max_steps=config["max_steps"],
                on_transport=config["on_transport"],
                workers=config["workers"],
            )
            baselines.append(record)
            rows.extend(static_rows)
        write_sweep_csv(records + baselines, eval_dir / "sweep.csv")
        write_query_log(rows, eval_dir / "queries.jsonl")
        write_records_json(records + baselines, eval_dir / "records.json")
        if config["figures"]:
            render_sweep_figures(records, eval_dir / "figures", baselines=baselines)
        for record in records:
            print(
                f"stage sweep: {record.policy} accuracy={record.accuracy:.3f} "
                f"mean_steps={record.mean_steps:.1f}"
            )
        return records

    stage("sweep", run_sweep)

    def run_manifest():
        artifacts = {}
        for path in sorted(out.rglob("*")):
            if path.is_file() and path.name != "manifest.json":
                artifacts[str(path.relative_to(out))] = _sha256(path)
        manifest = {
            "package": f"flare-rag {__version__}",
            "formats": {"index": INDEX_VERSION, "weights": WEIGHTS_VERSION},
            "config": {k: config[k] for k in sorted(config)},
            "inputs": inputs,
            "artifacts": artifacts,
        }
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"wrote {out / 'manifest.json'}")

    stage("manifest", run_manifest)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="flare-rag", description=__doc__)
    parser.add_argument("--version", action="version", version=f"flare-rag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize corpus or QA JSONL")
    p.add_argument("kind", choices=("corpus", "qa"))
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="build or query the BM25 index")
    index_sub = p.add_subparsers(dest="index_command", required=True)
    b = index_sub.add_parser("build")
    b.add_argument("--corpus", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_index_build)
    s = index_sub.add_parser("search")
    s.add_argument("--index", required=True)
    s.add_argument("--query", required=True)
    s.add_argument("--k", type=int, default=DEFAULT_K)
    s.set_defaults(func=cmd_index_search)

    p = sub.add_parser("label", help="produce training labels")
    p.add_argument("kind", choices=("cost", "reliability", "combined"))
    p.add_argument("--qa", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--oracle")
    p.add_argument("--endpoint")
    p.add_argument("--index")
    p.add_argument("--corpus")
    p.add_argument("--exclusions")
    p.add_argument("--cost")
    p.add_argument("--reliability")
    p.add_argument("--four-class", action="store_true", dest="four_class")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    p.set_defaults(func=_cmd_label_dispatch)

    p = sub.add_parser("train", help="fit a routing classifier from labels")
    p.add_argument("--labels", required=True)
    p.add_argument("--qa", required=True)
    p.add_argument("--mode", choices=("cost", "reliability", "combined"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dimension", type=int, default=DEFAULT_DIMENSION)
    p.add_argument("--hash-seed", type=int, default=DEFAULT_HASH_SEED, dest="hash_seed")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=64, dest="batch_size")
    p.add_argument("--learning-rate", type=float, default=0.1, dest="learning_rate")
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--four-class", action="store_true", dest="four_class")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("route", help="route one query through the blended classifier")
    p.add_argument("--coc", required=True, help="cost-optimized weight file")
    p.add_argument("--roc", required=True, help="reliability-optimized weight file")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--execute", action="store_true")
    p.add_argument("--index")
    p.add_argument("--corpus")
    p.add_argument("--oracle")
    p.add_argument("--endpoint")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("eval", help="evaluate a policy or sweep alpha")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)
    r = eval_sub.add_parser("run")
    r.add_argument("--policy", required=True)
    r.add_argument("--qa", required=True)
    r.add_argument("--index", required=True)
    r.add_argument("--out-dir", required=True, dest="out_dir")
    r.add_argument("--oracle")
    r.add_argument("--endpoint")
    r.add_argument("--corpus")
    r.add_argument("--weights")
    r.add_argument("--coc")
    r.add_argument("--roc")
    r.add_argument("--alpha", type=float)
    r.add_argument("--k", type=int, default=DEFAULT_K)
    r.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    r.add_argument("--on-transport", choices=("abort", "skip"), default="abort", dest="on_transport")
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_eval_run)
    w = eval_sub.add_parser("sweep")
    w.add_argument("--qa", required=True)
    w.add_argument("--index", required=True)
    w.add_argument("--coc", required=True)
    w.add_argument("--roc", required=True)
    w.add_argument("--out-dir", required=True, dest="out_dir")
    w.add_argument("--oracle")
    w.add_argument("--endpoint")
    w.add_argument("--corpus")
    w.add_argument("--alphas", type=_parse_alphas, default=list(DEFAULT_ALPHA_GRID))
    w.add_argument("--k", type=int, default=DEFAULT_K)
    w.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    w.add_argument("--on-transport", choices=("abort", "skip"), default="abort", dest="on_transport")
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    w.set_defaults(func=cmd_eval_sweep)

    p = sub.add_parser("pipeline", help="ingest, index, label, train, sweep, manifest")
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--corpus")
    p.add_argument("--qa")
    p.add_argument("--oracle")
    p.add_argument("--out")
    p.add_argument("--answerer", choices=("mock", "http"))
    p.add_argument("--endpoint")
    p.add_argument("--k", type=int)
    p.add_argument("--max-steps", type=int, dest="max_steps")
    p.add_argument("--alphas")
    p.add_argument("--dimension", type=int)
    p.add_argument("--hash-seed", type=int, dest="hash_seed")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--l2", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--four-class", action="store_const", const=True, dest="four_class")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--workers", type=int)
    p.add_argument("--on-transport", choices=("abort", "skip"), dest="on_transport")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--kind", choices=("benchmark", "random"), default="benchmark")
    p.set_defaults(func=cmd_synth)

    return parser


def _cmd_label_dispatch(args) -> int:
    if args.kind == "cost":
        if not args.index:
            raise UsageError("label cost needs --index")
    if args.kind == "combined" and not (args.cost and args.reliability):
        raise UsageError("label combined needs --cost and --reliability")
    return cmd_label(args)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args) or 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
