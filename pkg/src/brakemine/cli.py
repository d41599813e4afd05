"""Command-line pipeline: synth, preprocess, tag, koi, describe, classify,
retrieve, eval, and run-all with stage skipping for up-to-date outputs.

Exit codes: 0 success, 1 internal error, 2 usage or input error.
Progress is logged as one JSON object per line on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import describer, evaluation, koi, llm_gateway, model, preprocess, scenario_store, synthkit, tagger
from .model import LogParseError, ScenarioCategory, ValidationError


def _log_event(stage: str, **fields) -> None:
    print(json.dumps({"stage": stage, **fields}), file=sys.stderr)


def _require_file(path: str | Path) -> Path:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    return path


def _chat_provider(name: str):
    if name == "mock":
        return llm_gateway.MockChatProvider()
    return llm_gateway.RemoteChatProvider()


def _embed_provider(name: str):
    if name == "mock":
        return llm_gateway.MockEmbedder()
    return llm_gateway.RemoteEmbedder()


def _smoothing_config(args) -> preprocess.SmoothingConfig:
    return preprocess.SmoothingConfig(window=args.window, polyorder=args.polyorder)


def _tagger_config(path: str | None) -> tagger.TaggerConfig:
    if not path:
        return tagger.TaggerConfig()
    with _require_file(path).open("r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {f.name for f in dataclasses.fields(tagger.TaggerConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"tagger config: unknown keys {sorted(unknown)}")
    return tagger.TaggerConfig(**raw)


# ---------------------------------------------------------------------------
# Single-stage commands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    logs_dir = out_dir / "logs"
    logs_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    if args.category == "all":
        labeled = synthkit.generate_corpus(args.n, args.seed, noise_sigma_pos=args.noise)
    else:
        category = ScenarioCategory(args.category)
        labeled = [
            synthkit.generate(
                synthkit.ScenarioSpec(
                    category=category,
                    seed=args.seed * 100_000 + i,
                    noise_sigma_pos=args.noise,
                    variant=args.variant,
                )
            )
            for i in range(args.n)
        ]
    annotations = []
    for lab in labeled:
        model.save_log(lab.log, logs_dir / f"{lab.log.log_id}.jsonl")
        annotations.extend(lab.annotations)
    model.save_annotations(annotations, out_dir / "annotations.csv")
    _log_event("synth", logs=len(labeled), annotations=len(annotations),
               duration_s=round(time.time() - started, 3))
    return 0


def cmd_preprocess(args) -> int:
    started = time.time()
    log = model.load_log(_require_file(args.infile))
    out, report = preprocess.preprocess_log(log, _smoothing_config(args))
    model.save_log(out, args.outfile)
    _log_event("preprocess", log_id=log.log_id, unsmoothed=report.unsmoothed,
               duration_s=round(time.time() - started, 3))
    return 0


def cmd_tag(args) -> int:
    started = time.time()
    log = model.load_log(_require_file(args.infile))
    tags = tagger.tag_log(log, _tagger_config(args.config))
    model.save_tags(tags, args.outfile)
    _log_event("tag", log_id=log.log_id, objects=tags.n_objects, frames=tags.n_frames,
               duration_s=round(time.time() - started, 3))
    return 0


def cmd_koi(args) -> int:
    started = time.time()
    tags = model.load_tags(_require_file(args.tags))
    pairs = koi.identify_key_objects(tags)
    koi.save_pairs(pairs, args.outfile)
    _log_event("koi", log_id=tags.log_id, candidates=len(pairs),
               duration_s=round(time.time() - started, 3))
    return 0


def cmd_describe(args) -> int:
    started = time.time()
    tags = model.load_tags(_require_file(args.tags))
    pairs = koi.load_pairs(_require_file(args.pairs))
    rows = []
    for pair in pairs:
        if pair.log_id != tags.log_id:
            continue
        text, category = describer.describe_pair(tags, pair.guest_id)
        rows.append({"log_id": pair.log_id, "guest_id": pair.guest_id,
                     "guest_category": category, "description": text})
    describer.save_descriptions(rows, args.outfile)
    _log_event("describe", log_id=tags.log_id, descriptions=len(rows),
               duration_s=round(time.time() - started, 3))
    return 0


def cmd_classify(args) -> int:
    started = time.time()
    rows = describer.load_descriptions(_require_file(args.descriptions))
    records = llm_gateway.classify_descriptions(
        rows, _chat_provider(args.provider), _embed_provider(args.provider),
        concurrency=args.concurrency,
    )
    db = scenario_store.ScenarioDb()
    for record in records:
        db.insert(record)
    db.save(args.outfile)
    _log_event("classify", records=len(records), provider=args.provider,
               duration_s=round(time.time() - started, 3))
    return 0


def cmd_retrieve(args) -> int:
    started = time.time()
    db = scenario_store.ScenarioDb.load(_require_file(args.db))
    out = sys.stdout if args.outfile == "-" else Path(args.outfile).open("w", encoding="utf-8")
    try:
        if args.category:
            hits = db.retrieve_by_category(ScenarioCategory(args.category))
            for record in hits:
                out.write(json.dumps({
                    "log_id": record.log_id, "guest_id": record.guest_id,
                    "category": record.category.value,
                    "rephrased_description": record.rephrased_description,
                }) + "\n")
            _log_event("retrieve", mode="category", hits=len(hits),
                       duration_s=round(time.time() - started, 3))
        else:
            ranked = db.retrieve_by_similarity(args.query, args.k, _embed_provider(args.provider))
            for result in ranked:
                out.write(json.dumps({
                    "log_id": result.record.log_id, "guest_id": result.record.guest_id,
                    "score": result.score, "category": result.record.category.value,
                    "rephrased_description": result.record.rephrased_description,
                }) + "\n")
            _log_event("retrieve", mode="similarity", hits=len(ranked),
                       duration_s=round(time.time() - started, 3))
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _run_retrieval_queries(db, queries_path, annotations, provider_name):
    with _require_file(queries_path).open("r", encoding="utf-8") as fh:
        spec = json.load(fh)
    embedder = _embed_provider(provider_name)
    out = {}
    for query in spec.get("queries", []):
        category = ScenarioCategory(query["category"])
        relevant = {a.key for a in annotations if a.scenario_category == category}
        ranked = db.retrieve_by_similarity(query["text"], max(len(db), 1), embedder)
        out[query["name"]] = evaluation.score_retrieval(ranked, relevant)
    return out


def cmd_eval(args) -> int:
    started = time.time()
    records = model.load_records(_require_file(args.records))
    annotations = model.load_annotations(_require_file(args.annotations))
    report = evaluation.score_classification(records, annotations)
    key_pairs = [koi.KeyPair(r.log_id, r.guest_id, (0,)) for r in records]
    report.koi = evaluation.score_koi(key_pairs, annotations)
    if args.retrieval_queries:
        db = scenario_store.ScenarioDb.load(args.records)
        report.retrieval = _run_retrieval_queries(
            db, args.retrieval_queries, annotations, args.provider
        )
    report.save(args.report)
    overall = report.overall
    _log_event("eval", precision=overall.precision, recall=overall.recall, f1=overall.f1,
               koi=report.koi, duration_s=round(time.time() - started, 3))
    return 0


# ---------------------------------------------------------------------------
# run-all
# ---------------------------------------------------------------------------

@dataclass
class PipelineConfig:
    logs_dir: str
    work_dir: str
    annotations: str | None = None
    provider: str = "mock"
    concurrency: int = 4
    smoothing: preprocess.SmoothingConfig = field(default_factory=preprocess.SmoothingConfig)
    tagger: tagger.TaggerConfig = field(default_factory=tagger.TaggerConfig)
    retrieval_queries: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        with _require_file(path).open("r", encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"pipeline config: unknown keys {sorted(unknown)}")
        if "logs_dir" not in raw or "work_dir" not in raw:
            raise ValidationError("pipeline config: logs_dir and work_dir are required")
        smoothing = preprocess.SmoothingConfig(**raw.get("smoothing", {}))
        tagger_cfg = tagger.TaggerConfig(**raw.get("tagger", {}))
        return cls(
            logs_dir=raw["logs_dir"],
            work_dir=raw["work_dir"],
            annotations=raw.get("annotations"),
            provider=raw.get("provider", "mock"),
            concurrency=int(raw.get("concurrency", 4)),
            smoothing=smoothing,
            tagger=tagger_cfg,
            retrieval_queries=raw.get("retrieval_queries"),
        )


def _up_to_date(outputs: list[Path], inputs: list[Path]) -> bool:
    if not outputs or not all(p.exists() for p in outputs):
        return False
    newest_input = max(p.stat().st_mtime for p in inputs)
    return min(p.stat().st_mtime for p in outputs) >= newest_input


def run_all(cfg: PipelineConfig) -> Path:
    """Execute preprocess -> tag -> koi -> describe -> classify -> eval.

    Stages whose outputs are newer than all inputs are skipped, so reruns
    are cheap and the pipeline is resumable after a failure.
    """
    logs_dir = Path(cfg.logs_dir)
    if not logs_dir.exists():
        raise FileNotFoundError(f"input not found: {logs_dir}")
    log_paths = sorted(logs_dir.glob("*.jsonl"))
    if not log_paths:
        raise FileNotFoundError(f"input not found: no *.jsonl logs in {logs_dir}")
    work = Path(cfg.work_dir)
    (work / "preprocessed").mkdir(parents=True, exist_ok=True)
    (work / "tags").mkdir(parents=True, exist_ok=True)

    pre_paths = [work / "preprocessed" / p.name for p in log_paths]
    started = time.time()
    if _up_to_date(pre_paths, log_paths):
        _log_event("preprocess", skipped="up to date")
    else:
        for src, dst in zip(log_paths, pre_paths):
            out, _ = preprocess.preprocess_log(model.load_log(src), cfg.smoothing)
            model.save_log(out, dst)
        _log_event("preprocess", logs=len(log_paths), duration_s=round(time.time() - started, 3))

    tag_paths = [work / "tags" / p.name for p in log_paths]
    started = time.time()
    if _up_to_date(tag_paths, pre_paths):
        _log_event("tag", skipped="up to date")
    else:
        for src, dst in zip(pre_paths, tag_paths):
            model.save_tags(tagger.tag_log(model.load_log(src), cfg.tagger), dst)
        _log_event("tag", logs=len(tag_paths), duration_s=round(time.time() - started, 3))

    pairs_path = work / "pairs.jsonl"
    started = time.time()
    if _up_to_date([pairs_path], tag_paths):
        _log_event("koi", skipped="up to date")
    else:
        pairs = []
        for src in tag_paths:
            pairs.extend(koi.identify_key_objects(model.load_tags(src)))
        koi.save_pairs(pairs, pairs_path)
        _log_event("koi", candidates=len(pairs), duration_s=round(time.time() - started, 3))

    desc_path = work / "descriptions.jsonl"
    started = time.time()
    if _up_to_date([desc_path], tag_paths + [pairs_path]):
        _log_event("describe", skipped="up to date")
    else:
        by_log: dict[str, list] = {}
        for pair in koi.load_pairs(pairs_path):
            by_log.setdefault(pair.log_id, []).append(pair)
        rows = []
        for src in tag_paths:
            tags = model.load_tags(src)
            for pair in by_log.get(tags.log_id, []):
                text, category = describer.describe_pair(tags, pair.guest_id)
                rows.append({"log_id": pair.log_id, "guest_id": pair.guest_id,
                             "guest_category": category, "description": text})
        describer.save_descriptions(rows, desc_path)
        _log_event("describe", descriptions=len(rows), duration_s=round(time.time() - started, 3))

    records_path = work / "records.jsonl"
    started = time.time()
    if _up_to_date([records_path], [desc_path]):
        _log_event("classify", skipped="up to date")
    else:
        rows = describer.load_descriptions(desc_path)
        records = llm_gateway.classify_descriptions(
            rows, _chat_provider(cfg.provider), _embed_provider(cfg.provider),
            concurrency=cfg.concurrency,
        )
        db = scenario_store.ScenarioDb()
        for record in records:
            db.insert(record)
        db.save(records_path)
        _log_event("classify", records=len(records), duration_s=round(time.time() - started, 3))

    report_path = work / "report.json"
    if cfg.annotations:
        ann_path = _require_file(cfg.annotations)
        started = time.time()
        if _up_to_date([report_path], [records_path, ann_path]):
            _log_event("eval", skipped="up to date")
        else:
            records = model.load_records(records_path)
            annotations = model.load_annotations(ann_path)
            report = evaluation.score_classification(records, annotations)
            key_pairs = [koi.KeyPair(r.log_id, r.guest_id, (0,)) for r in records]
            report.koi = evaluation.score_koi(key_pairs, annotations)
            if cfg.retrieval_queries:
                db = scenario_store.ScenarioDb.load(records_path)
                report.retrieval = _run_retrieval_queries(
                    db, cfg.retrieval_queries, annotations, cfg.provider
                )
            report.save(report_path)
            _log_event("eval", report=str(report_path), duration_s=round(time.time() - started, 3))
    return report_path if cfg.annotations else records_path


def cmd_run_all(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    if args.work_dir:
        cfg.work_dir = args.work_dir
    if args.logs_dir:
        cfg.logs_dir = args.logs_dir
    if args.provider:
        cfg.provider = args.provider
    out = run_all(cfg)
    _log_event("run-all", done=str(out))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brakemine",
        description="Mine, describe, classify and retrieve ego-braking scenarios from driving logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate labeled synthetic logs")
    p.add_argument("--category", required=True,
                   choices=[c.value for c in synthkit.BEHAVIOR_CATEGORIES] + ["all"])
    p.add_argument("--variant", default="", choices=["", synthkit.VEER_BEHIND])
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="interpolate gaps and smooth pose series")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--window", type=int, default=11)
    p.add_argument("--polyorder", type=int, default=3)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("tag", help="compute all activity tag matrices")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("koi", help="identify brake-causing key objects")
    p.add_argument("--tags", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.set_defaults(func=cmd_koi)

    p = sub.add_parser("describe", help="render structured pair descriptions")
    p.add_argument("--tags", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("classify", help="classify descriptions and embed them")
    p.add_argument("--descriptions", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--provider", default="mock", choices=["mock", "remote"])
    p.add_argument("--concurrency", type=int, default=4)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("retrieve", help="query the scenario database")
    p.add_argument("--db", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--category", choices=[c.value for c in ScenarioCategory])
    group.add_argument("--query")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--provider", default="mock", choices=["mock", "remote"])
    p.add_argument("--out", dest="outfile", default="-")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("eval", help="score records against annotations")
    p.add_argument("--records", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--retrieval-queries", dest="retrieval_queries", default=None)
    p.add_argument("--report", required=True)
    p.add_argument("--provider", default="mock", choices=["mock", "remote"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run-all", help="run the whole pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--work-dir", dest="work_dir", default=None)
    p.add_argument("--logs-dir", dest="logs_dir", default=None)
    p.add_argument("--provider", default=None, choices=["mock", "remote"])
    p.set_defaults(func=cmd_run_all)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, LogParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except llm_gateway.GatewayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
