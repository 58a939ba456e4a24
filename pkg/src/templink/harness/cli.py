"""Command line entry point: one subcommand per pipeline stage.

Every stage reads its inputs from ``out_dir``, writes its artifact there and
adds ``<stage>.manifest.json`` holding sha256 digests of inputs and outputs.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import tempfile
from pathlib import Path

import numpy as np

from .. import __version__
from ..dataset import COLUMN_NAMES, Scaler, TrainingSet
from ..edge_features.hoprec import EmbeddingTable, train_embeddings, truncate_for_embedding
from ..evaluation import auc, compare_models, load_submission, rank_pairs, write_report
from ..models import feature_report, format_report, load_model, save_model
from ..node_features import NodeFeatureTable, compute_node_features
from ..temporal_graph import TemporalGraph, ingest, read_records
from .config import PipelineConfig, load_config
from .pipeline import Stage, build_training_set, predict_pairs, train_classifier
from .synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger("templink")

GRAPH = "graph.npz"
FEATURES = {"train": "features_train.bin", "predict": "features_predict.bin"}
EMBEDDINGS = {"train": "embed_train.bin", "predict": "embed_predict.bin"}
DATASET = "dataset.bin"
MODEL = "model.bin"
SCALER = "scaler.json"
SUBMISSION = "submission.json"
SCORES = "scores.csv"
REPORT = "report.json"


class MissingArtifact(RuntimeError):
    pass


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _require(out: Path, name: str, what: str, step: str) -> Path:
    path = out / name
    if not path.exists():
        raise MissingArtifact(f"missing {what}: run `templink {step}` first ({path} not found)")
    return path


def _input_file(value: str | None, what: str) -> Path:
    if not value:
        raise MissingArtifact(f"missing {what}: set it in the config or on the command line")
    path = Path(value)
    if not path.exists():
        raise MissingArtifact(f"missing {what}: {path} not found")
    return path


def write_manifest(out: Path, step: str, cfg: PipelineConfig, inputs: list, outputs: list,
                   extra: dict | None = None) -> Path:
    """Provenance record; contains no timestamps so reruns are byte-identical."""
    body = {
        "step": step,
        "version": __version__,
        "config_digest": cfg.digest(),
        "inputs": {Path(p).name: sha256(p) for p in inputs},
        "outputs": {Path(p).name: sha256(p) for p in outputs},
    }
    if extra:
        body.update(extra)
    path = out / f"{step}.manifest.json"
    path.write_text(json.dumps(body, indent=1, sort_keys=True))
    return path


def _read_pairs(path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").replace("\t", " ").split()
        rows.append((int(parts[0]), int(parts[1])))
    return np.asarray(rows, dtype=np.int64).reshape(-1, 2)


def _read_labels(path) -> np.ndarray:
    return np.asarray([int(x) for x in Path(path).read_text().split()], dtype=np.int64)


def _stage_time(cfg: PipelineConfig, which: str) -> float:
    return cfg.t0 if which == "train" else cfg.t_predict


def _load_graph(out: Path) -> TemporalGraph:
    return TemporalGraph.load(_require(out, GRAPH, "graph", "ingest"))


def _load_stage(out: Path, cfg: PipelineConfig, which: str) -> Stage:
    fpath = _require(out, FEATURES[which], f"{which} features", "features")
    epath = _require(out, EMBEDDINGS[which], f"{which} embeddings", "embed")
    table = EmbeddingTable.load(epath)
    meta = json.loads(Path(str(epath) + ".json").read_text())
    return Stage(_stage_time(cfg, which), NodeFeatureTable.load(fpath), table,
                 tuple(meta.get("truncation_pct", (0.0, 0.0))))


# -- steps ------------------------------------------------------------------------

def step_ingest(cfg: PipelineConfig, out: Path) -> dict:
    src = _input_file(cfg.records, "records")
    g = ingest(read_records(src))
    g.save(out / GRAPH)
    write_manifest(out, "ingest", cfg, [src], [out / GRAPH],
                   {"n_nodes": g.n_nodes, "n_records": g.n_records, "n_edges": g.n_edges,
                    "n_rejected": g.n_rejected})
    return {"n_nodes": g.n_nodes, "n_records": g.n_records, "n_edges": g.n_edges}


def step_features(cfg: PipelineConfig, out: Path) -> dict:
    g = _load_graph(out)
    threads = 1 if cfg.deterministic else cfg.threads
    outputs = []
    for which, name in FEATURES.items():
        tbl = compute_node_features(g, _stage_time(cfg, which), cfg.dt, threads=threads)
        tbl.save(out / name)
        outputs += [out / name, out / (name + ".json")]
    write_manifest(out, "features", cfg, [out / GRAPH], outputs)
    return {"files": [p.name for p in outputs[::2]]}


def step_embed(cfg: PipelineConfig, out: Path) -> dict:
    g = _load_graph(out)
    info, outputs = {}, []
    for which, name in EMBEDDINGS.items():
        rep = truncate_for_embedding(g, cfg.t_cut, _stage_time(cfg, which))
        table = train_embeddings(rep.view, cfg.embed_params())
        table.save(out / name)
        meta_path = Path(str(out / name) + ".json")
        meta = json.loads(meta_path.read_text())
        meta["truncation_pct"] = [rep.removed_edge_pct, rep.removed_node_pct]
        meta_path.write_text(json.dumps(meta))
        outputs += [out / name, meta_path]
        info[which] = {"removed_edge_pct": rep.removed_edge_pct,
                       "removed_node_pct": rep.removed_node_pct}
    write_manifest(out, "embed", cfg, [out / GRAPH], outputs, {"truncation": info})
    return info


def step_build_dataset(cfg: PipelineConfig, out: Path) -> dict:
    g = _load_graph(out)
    stage = _load_stage(out, cfg, "train")
    ts = build_training_set(g, stage, cfg)
    ts.save(out / DATASET)
    inputs = [out / GRAPH, out / FEATURES["train"], out / EMBEDDINGS["train"]]
    outputs = [out / DATASET, out / (DATASET + ".json"), out / (DATASET + ".rows.npz")]
    write_manifest(out, "build-dataset", cfg, inputs, outputs)
    return {k: ts.meta[k] for k in ("n_positive", "n_negative", "n_injected")}


def step_train(cfg: PipelineConfig, out: Path) -> dict:
    path = _require(out, DATASET, "dataset", "build-dataset")
    ts = TrainingSet.load(path)
    model, scaler = train_classifier(ts, cfg)
    save_model(model, out / MODEL)
    (out / SCALER).write_text(json.dumps(scaler.to_dict()))
    info = {"classifier": cfg.classifier}
    if cfg.classifier == "logistic":
        info["top_features"] = format_report(feature_report(model, COLUMN_NAMES), top=10)
    write_manifest(out, "train", cfg, [path], [out / MODEL, out / SCALER])
    return info


def step_predict(cfg: PipelineConfig, out: Path) -> dict:
    g = _load_graph(out)
    model_path = _require(out, MODEL, "model", "train")
    model = load_model(model_path)
    scaler = Scaler.from_dict(json.loads(_require(out, SCALER, "scaler", "train").read_text()))
    stage = _load_stage(out, cfg, "predict")
    pairs_path = _input_file(cfg.pairs, "pairs")
    pairs = _read_pairs(pairs_path)
    dense = g.dense_ids(pairs.ravel()).reshape(-1, 2)
    scores, _ = predict_pairs(g, stage, model, scaler, dense, cfg)
    sub = rank_pairs(scores)
    sub.save_json(out / SUBMISSION)
    sub.save_csv(out / SCORES, pairs.tolist())
    inputs = [out / GRAPH, model_path, out / SCALER, out / FEATURES["predict"],
              out / EMBEDDINGS["predict"], pairs_path]
    write_manifest(out, "predict", cfg, inputs, [out / SUBMISSION, out / SCORES])
    return {"n_pairs": int(len(pairs)), "unseen_pairs": int((dense < 0).any(axis=1).sum())}


def _read_scores(path: Path) -> np.ndarray:
    rows = np.genfromtxt(path, delimiter=",", skip_header=1, usecols=(0, 3))
    rows = rows.reshape(-1, 2)
    scores = np.empty(rows.shape[0])
    scores[rows[:, 0].astype(np.int64)] = rows[:, 1]
    return scores


def step_evaluate(cfg: PipelineConfig, out: Path) -> dict:
    scores_path = _require(out, SCORES, "scores", "predict")
    labels_path = _input_file(cfg.labels, "labels")
    scores = _read_scores(scores_path)
    labels = _read_labels(labels_path)
    if labels.size != scores.size:
        raise ValueError(f"{labels.size} labels for {scores.size} scored pairs")
    reports = {cfg.classifier: auc(scores, labels)}
    write_report(out / REPORT, reports)
    write_manifest(out, "evaluate", cfg, [scores_path, labels_path], [out / REPORT])
    return {"auc": reports[cfg.classifier].auc, "comparison": compare_models(reports)}


def step_reproduce_check(cfg: PipelineConfig, out: Path) -> dict:
    """Rebuild embeddings, dataset, model and submission twice and compare rankings."""
    _require(out, GRAPH, "graph", "ingest")
    subs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(2):
            run_dir = Path(tmp) / f"run{i}"
            run_dir.mkdir()
            (run_dir / GRAPH).write_bytes((out / GRAPH).read_bytes())
            for step in (step_features, step_embed, step_build_dataset, step_train, step_predict):
                step(cfg, run_dir)
            subs.append(load_submission(run_dir / SUBMISSION))
    same = float(np.mean(subs[0] == subs[1])) if subs[0].size else 1.0
    result = {"identical_fraction": same, "identical": bool(np.array_equal(*subs)),
              "n_pairs": int(subs[0].size)}
    path = out / "reproduce.json"
    path.write_text(json.dumps(result, indent=1))
    write_manifest(out, "reproduce-check", cfg, [out / GRAPH], [path])
    return result


def step_synth(cfg: PipelineConfig, out: Path, spec: SyntheticSpec) -> dict:
    bench = generate_synthetic(spec)
    paths = bench.write(out)
    write_manifest(out, "synth", cfg, [], list(paths.values()),
                   {"spec": dataclasses.asdict(spec)})
    return {"records": len(bench.records), "pairs": int(len(bench.pairs)),
            "unseen_pair_share": bench.unseen_pair_share()}


STEPS = {
    "ingest": step_ingest,
    "features": step_features,
    "embed": step_embed,
    "build-dataset": step_build_dataset,
    "train": step_train,
    "predict": step_predict,
    "evaluate": step_evaluate,
    "reproduce-check": step_reproduce_check,
}
RUN_ORDER = ("ingest", "features", "embed", "build-dataset", "train", "predict")


# -- argument handling ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--seed", type=int, help="sets the data, embedding and model seeds")
    common.add_argument("--threads", type=int)
    common.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None,
                        help="force single-threaded, bit-reproducible stages")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--records")
    common.add_argument("--pairs")
    common.add_argument("--labels")
    common.add_argument("--classifier", choices=("mlp", "logistic"))
    common.add_argument("--imputation", choices=("newborn", "seen", "zero"))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="templink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STEPS:
        sub.add_parser(name, parents=[common], help=STEPS[name].__doc__ and STEPS[name].__doc__.splitlines()[0])
    sub.add_parser("run", parents=[common], help="ingest through predict (and evaluate if labels are set)")
    synth = sub.add_parser("synth", parents=[common], help="write a synthetic benchmark")
    synth.add_argument("--nodes", type=int, default=SyntheticSpec.n_nodes)
    synth.add_argument("--closure", type=float, default=SyntheticSpec.closure_prob)
    synth.add_argument("--pref", type=float, default=SyntheticSpec.pref_attachment)
    return parser


def config_from_args(args) -> PipelineConfig:
    overrides = {k: getattr(args, k) for k in
                 ("out_dir", "records", "pairs", "labels", "classifier", "imputation",
                  "threads", "deterministic")}
    cfg = load_config(args.config, **overrides)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "synth":
            spec = SyntheticSpec(n_nodes=args.nodes, closure_prob=args.closure,
                                 pref_attachment=args.pref, seed=cfg.data_seed)
            result = step_synth(cfg, out, spec)
        elif args.command == "run":
            result = {}
            for name in RUN_ORDER:
                result[name] = STEPS[name](cfg, out)
            if cfg.labels:
                result["evaluate"] = step_evaluate(cfg, out)
        else:
            result = STEPS[args.command](cfg, out)
    except (MissingArtifact, ValueError, RuntimeError, FileNotFoundError) as exc:
        print(f"templink {args.command}: error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result, indent=1, default=str))
    if args.command == "reproduce-check" and not result["identical"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
