"""Command-line entry point.

Subcommands cover the full experiment cycle: ``synth`` (toy corpora),
``train``, ``parse``, ``eval``, ``layer-scan`` and ``transfer``. Every
command writes into an output directory with a fixed layout
(``checkpoints/``, ``predictions/``, ``reports/``, ``manifest.json``) so
downstream scripts stay stable. Runs are reproducible: a fixed seed makes
checkpoints and reports byte-identical; the manifest records input
digests, configuration and wall-clock time.

Exit codes: 0 success, 2 usage, 3 I/O, 4 format, 5 alignment or
compatibility, 6 numeric.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

# honored only if set before the numeric libraries load, hence before the
# numpy import below
if os.environ.get("DEPPROBE_THREADS"):
    for _variable in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_variable, os.environ["DEPPROBE_THREADS"])

import numpy as np

from . import __version__, analysis, decode, embstore, evaluate, probe, synth, train, treebank
from .errors import (
    AlignmentError,
    CompatibilityError,
    ConlluParseError,
    DataError,
    DegenerateInputError,
    DepProbeError,
    FormatError,
    RankError,
    StructuralError,
    TruncatedFileError,
    VocabularyError,
)

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_ALIGNMENT = 5
EXIT_NUMERIC = 6

_EXIT_CODES = (
    (TruncatedFileError, EXIT_IO),
    (ConlluParseError, EXIT_FORMAT),
    (FormatError, EXIT_FORMAT),
    (StructuralError, EXIT_FORMAT),
    (VocabularyError, EXIT_FORMAT),
    (DataError, EXIT_FORMAT),
    (AlignmentError, EXIT_ALIGNMENT),
    (CompatibilityError, EXIT_ALIGNMENT),
    (DegenerateInputError, EXIT_NUMERIC),
    (RankError, EXIT_NUMERIC),
    (FloatingPointError, EXIT_NUMERIC),
    (OSError, EXIT_IO),
    (DepProbeError, EXIT_USAGE),
    (ValueError, EXIT_USAGE),
    (KeyError, EXIT_USAGE),
)


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_json(document, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, sort_keys=True, indent=2)
        handle.write("\n")


def _write_manifest(out_dir: Path, args, inputs, seeds, config, started) -> None:
    manifest = {
        "command": list(sys.argv) if sys.argv else [],
        "config": config,
        "inputs": {str(path): _sha256(path) for path in inputs},
        "seeds": list(seeds),
        "tool_version": __version__,
        "duration_seconds": time.time() - started,
    }
    _write_json(manifest, out_dir / "manifest.json")


def _train_config(args, seed: int) -> train.TrainConfig:
    return train.TrainConfig(
        learning_rate=args.lr,
        plateau_factor=args.plateau_factor,
        early_stop_patience=args.patience,
        max_epochs=args.max_epochs,
        batch_size=args.batch_size,
        seed=seed,
        loss_weights=(args.weight_structural, args.weight_relational),
    )


def _config_snapshot(config: train.TrainConfig) -> dict:
    return {
        "learning_rate": config.learning_rate,
        "plateau_factor": config.plateau_factor,
        "early_stop_patience": config.early_stop_patience,
        "max_epochs": config.max_epochs,
        "batch_size": config.batch_size,
        "loss_weights": list(config.loss_weights),
        "weight_decay": config.weight_decay,
    }


def _records_by_layer(paths) -> dict:
    """Load embedding files keyed by their header layer (authoritative)."""
    by_layer = {}
    for path in paths:
        records, layer = embstore.read_embeddings(path)
        if layer in by_layer:
            raise ValueError(f"two embedding files declare layer {layer}")
        by_layer[layer] = records
    return by_layer


def _pick_layer(by_layer: dict, layer: int, role: str):
    if layer in by_layer:
        return by_layer[layer], layer
    if len(by_layer) == 1:
        only_layer, records = next(iter(by_layer.items()))
        print(
            f"note: no embedding file for layer {layer} ({role}); "
            f"using the only provided layer {only_layer}",
            file=sys.stderr,
        )
        return records, only_layer
    raise ValueError(
        f"no embedding file for layer {layer} ({role}); "
        f"available layers: {sorted(by_layer)}"
    )


def _parse_seeds(text: str) -> list:
    seeds = [int(part) for part in text.split(",") if part.strip()]
    if not seeds:
        raise ValueError("at least one seed is required")
    return seeds


def cmd_synth(args) -> int:
    started = time.time()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_corpus, train_embs, dev_corpus, dev_embs = synth.make_dataset(
        args.num_train, args.num_dev, args.seed,
        min_len=args.min_len, max_len=args.max_len,
    )
    for name, corpus, embs in (
        ("train", train_corpus, train_embs),
        ("dev", dev_corpus, dev_embs),
    ):
        (out / f"{name}.conllu").write_text(
            treebank.to_conllu(corpus), encoding="utf-8"
        )
        embstore.write_embeddings(embs, synth.SYNTH_LAYER, out / f"{name}.dpe")
    _write_manifest(
        out, args, [], [args.seed],
        {"num_train": args.num_train, "num_dev": args.num_dev,
         "min_len": args.min_len, "max_len": args.max_len,
         "embedding_dim": synth.EMBEDDING_DIM},
        started,
    )
    print(f"wrote synthetic corpus to {out}")
    return 0


def _build_examples_for_model(corpus, by_layer, model_kind, args):
    roles = {"structural": args.layer_b}
    if model_kind == "depprobe":
        roles["relational"] = args.layer_l
    else:
        roles["depth"] = args.layer_c
    chosen = {}
    layers = {}
    for role, layer in roles.items():
        records, actual = _pick_layer(by_layer, layer, role)
        chosen[role] = records
        layers[role] = actual
    examples = train.build_examples(
        corpus,
        chosen["structural"],
        relational=chosen.get("relational"),
        depth=chosen.get("depth"),
    )
    return examples, layers


def cmd_train(args) -> int:
    started = time.time()
    out = Path(args.out)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    (out / "reports").mkdir(parents=True, exist_ok=True)

    train_corpus = treebank.read_conllu(args.train_conllu)
    dev_corpus = treebank.read_conllu(args.dev_conllu)
    train_layers = _records_by_layer(args.train_emb)
    dev_layers = _records_by_layer(args.dev_emb)

    train_set, layers = _build_examples_for_model(
        train_corpus, train_layers, args.probe, args
    )
    dev_set, _ = _build_examples_for_model(dev_corpus, dev_layers, args.probe, args)
    embedding_dim = train_set[0].structural_emb.shape[1]

    seeds = _parse_seeds(args.seeds)
    summaries = {}
    config = None
    for seed in seeds:
        config = _train_config(args, seed)
        model = probe.initialize(
            embedding_dim,
            args.dim_b,
            relational=args.probe == "depprobe",
            depth=args.probe == "dirprobe",
            depth_dim=args.dim_c,
            structural_layer=layers["structural"],
            relational_layer=layers.get("relational", probe.DEFAULT_RELATIONAL_LAYER),
            depth_layer=layers.get("depth"),
            seed=seed,
        )
        fitted, report = train.fit(model, train_set, dev_set, config)
        probe.save_checkpoint(fitted, out / "checkpoints" / f"seed-{seed}.json")
        with open(out / "reports" / f"train-seed-{seed}.json", "w") as handle:
            handle.write(report.to_json())
            handle.write("\n")
        summaries[str(seed)] = {
            "stopping_epoch": report.stopping_epoch,
            "best_epoch": report.best_epoch,
            "best_dev_loss": report.best_dev_loss,
            "final_dev_uuas": report.final_dev_uuas,
            "final_dev_relacc": report.final_dev_relacc,
        }
        print(
            f"seed {seed}: stopped after epoch {report.stopping_epoch}, "
            f"dev UUAS {report.final_dev_uuas}, dev RelAcc {report.final_dev_relacc}"
        )

    def _mean(key):
        values = [s[key] for s in summaries.values() if s[key] is not None]
        return float(np.mean(values)) if values else None

    mean_report = {
        "seeds": seeds,
        "per_seed": summaries,
        "mean": {
            "best_dev_loss": _mean("best_dev_loss"),
            "final_dev_uuas": _mean("final_dev_uuas"),
            "final_dev_relacc": _mean("final_dev_relacc"),
        },
    }
    _write_json(mean_report, out / "reports" / "train-mean.json")

    inputs = [args.train_conllu, args.dev_conllu, *args.train_emb, *args.dev_emb]
    snapshot = _config_snapshot(config)
    snapshot.update({"probe": args.probe, "dim_b": args.dim_b, "dim_c": args.dim_c,
                     "layers": layers})
    _write_manifest(out, args, inputs, seeds, snapshot, started)
    return 0


def _depth_scores(depth_map, embeddings) -> np.ndarray:
    transformed = np.asarray(embeddings, dtype=np.float64) @ depth_map
    return np.sum(transformed**2, axis=1)


def cmd_parse(args) -> int:
    started = time.time()
    out = Path(args.out)
    (out / "predictions").mkdir(parents=True, exist_ok=True)

    model = probe.load_checkpoint(args.checkpoint)
    corpus = treebank.read_conllu(args.conllu)
    by_layer = _records_by_layer(args.emb)

    structural_records, _ = _pick_layer(by_layer, model.structural_layer, "structural")
    for record in structural_records:
        if record.e != model.embedding_dim:
            raise CompatibilityError(
                f"checkpoint expects embedding width {model.embedding_dim}, "
                f"file provides {record.e}"
            )
    aligned = embstore.align(corpus, structural_records)

    relational_records = None
    if args.decoder == "depprobe":
        if model.relational is None:
            raise ValueError("checkpoint has no relational map; cannot run depprobe decoding")
        relational_records, _ = _pick_layer(by_layer, model.relational_layer, "relational")
        embstore.align(corpus, relational_records)
    depth_records = None
    if args.decoder == "dirprobe":
        if model.depth is None:
            raise ValueError("checkpoint has no depth map; cannot run dirprobe decoding")
        depth_records, _ = _pick_layer(by_layer, model.depth_layer, "depth")
        embstore.align(corpus, depth_records)

    trees = []
    relaxed_total = 0
    for index, (sentence, record) in enumerate(aligned):
        dist = probe.distance_matrix(model.structural, record.values)
        if args.decoder == "depprobe":
            probs = probe.relation_prob_matrix(
                model.relational, relational_records[index].values
            )
            tree = decode.depprobe_decode(dist, probs, model.vocab)
        elif args.decoder == "mst":
            tree = decode.edges_to_tree(decode.undirected_mst(dist), len(sentence))
        else:
            scores = _depth_scores(model.depth, depth_records[index].values)
            tree = decode.dirprobe_decode(dist, scores, flip_gate=args.flip_depth_gate)
            relaxed_total += len(tree.relaxed_words)
        trees.append(tree)

    text = decode.predictions_to_conllu(trees, corpus, model.vocab)
    (out / "predictions" / "predictions.conllu").write_text(text, encoding="utf-8")

    snapshot = {"decoder": args.decoder, "flip_depth_gate": args.flip_depth_gate,
                "depth_gate_relaxed_words": relaxed_total}
    _write_manifest(out, args, [args.checkpoint, args.conllu, *args.emb], [], snapshot, started)
    print(f"parsed {len(trees)} sentences with {args.decoder}")
    return 0


def _eval_tsv(report: evaluate.EvalReport) -> str:
    lines = []
    for name in ("uas", "las", "uuas", "rel_acc"):
        value = getattr(report, name)
        lines.append(f"metric\t{name}\t{'' if value is None else repr(value)}")
    lines.append(f"metric\ttokens\t{report.tokens}")
    if report.offset_histogram is not None:
        for bucket, ratio in report.offset_histogram.items():
            lines.append(f"offset\t{bucket}\t{ratio!r}")
    if report.group_rel_acc is not None:
        for group, entry in sorted(report.group_rel_acc.items()):
            lines.append(f"group\t{group}\t{entry['accuracy']!r}")
            for label, stats in sorted(entry["relations"].items()):
                lines.append(f"relation\t{label}\t{stats['accuracy']!r}")
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    started = time.time()
    out = Path(args.out)
    (out / "reports").mkdir(parents=True, exist_ok=True)

    gold = treebank.read_conllu(args.gold)
    pred = decode.read_predictions(args.pred)
    report = evaluate.score(pred, gold)
    report.offset_histogram = evaluate.head_offsets(pred, gold)
    if all(tree.labeled for tree in pred):
        report.group_rel_acc = evaluate.group_relation_accuracy(pred, gold)

    document = report.to_dict()
    lengths = evaluate.edge_length_stats(gold)
    document["gold_edge_lengths"] = {
        "median": lengths.median,
        "mean": lengths.mean,
        "stddev": lengths.stddev,
        "fraction_over_10": lengths.fraction_over_10,
    }
    _write_json(document, out / "reports" / "eval.json")
    (out / "reports" / "eval.tsv").write_text(_eval_tsv(report), encoding="utf-8")
    _write_manifest(out, args, [args.pred, args.gold], [], {}, started)
    for name in ("uas", "las", "uuas", "rel_acc"):
        value = getattr(report, name)
        print(f"{name}: {'-' if value is None else f'{value:.4f}'}")
    return 0


def _parse_layer_spec(spec: str) -> list:
    layers = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            layers.extend(range(int(lo), int(hi) + 1))
        else:
            layers.append(int(part))
    if not layers:
        raise ValueError("empty layer specification")
    return layers


def cmd_layer_scan(args) -> int:
    started = time.time()
    out = Path(args.out)
    (out / "reports").mkdir(parents=True, exist_ok=True)

    layers = _parse_layer_spec(args.layers)
    train_paths = [args.train_emb_pattern.format(layer=layer) for layer in layers]
    dev_paths = [args.dev_emb_pattern.format(layer=layer) for layer in layers]
    for path in (*train_paths, *dev_paths):
        if not Path(path).exists():
            raise FileNotFoundError(f"missing embedding file {path}")

    train_corpus = treebank.read_conllu(args.train_conllu)
    dev_corpus = treebank.read_conllu(args.dev_conllu)
    train_by_layer = _records_by_layer(train_paths)
    dev_by_layer = _records_by_layer(dev_paths)

    config = _train_config(args, args.seed)
    result = train.layer_scan(
        train_corpus, dev_corpus, train_by_layer, dev_by_layer, config,
        structural_dim=args.dim_b,
    )

    lines = ["layer\tdev_uuas\tdev_relacc"]
    for record in result.records:
        lines.append(f"{record.layer}\t{record.dev_uuas!r}\t{record.dev_relacc!r}")
    (out / "reports" / "layer-scan.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_json(
        {
            "best_structural_layer": result.best_structural_layer,
            "best_relational_layer": result.best_relational_layer,
        },
        out / "reports" / "layer-scan.json",
    )

    inputs = [args.train_conllu, args.dev_conllu, *train_paths, *dev_paths]
    _write_manifest(out, args, inputs, [args.seed],
                    _config_snapshot(config) | {"layers": layers}, started)
    print(
        f"best structural layer: {result.best_structural_layer}, "
        f"best relational layer: {result.best_relational_layer}"
    )
    return 0


def _result_dict(result: analysis.CorrelationResult) -> dict:
    return {
        "rho": result.rho,
        "p_value": result.p_value,
        "tau_w": result.tau_w,
        "tau_w_global": result.tau_w_global,
        "best_source_hit_rate": result.hit_rate,
        "n_pairs": result.n_pairs,
        "degenerate": result.degenerate,
    }


def cmd_transfer(args) -> int:
    started = time.time()
    out = Path(args.out)
    (out / "reports").mkdir(parents=True, exist_ok=True)

    parser_scores = analysis.read_score_matrix(args.parser_scores)
    results = {}
    inputs = [args.parser_scores]

    if args.probe_scores:
        probe_scores = analysis.read_score_matrix(args.probe_scores)
        results["probe"] = analysis.transfer_correlation(
            parser_scores, probe_scores, include_diagonal=not args.exclude_diagonal
        )
        inputs.append(args.probe_scores)

    probes = {}
    for spec in args.probe_checkpoint or []:
        if "=" not in spec:
            raise ValueError(f"--probe-checkpoint expects LANG=PATH, got {spec!r}")
        language, path = spec.split("=", 1)
        probes[language] = probe.load_checkpoint(path)
        inputs.append(path)
    if probes:
        missing = sorted(set(parser_scores.sources) - set(probes))
        if missing:
            raise ValueError(f"missing probe checkpoints for languages: {missing}")
        kinds = ["struct"]
        if all(model.relational is not None for model in probes.values()):
            kinds.append("rel")
        if all(model.depth is not None for model in probes.values()):
            kinds.append("depth")
        for kind in kinds:
            results[f"ssa_{kind}"] = analysis.ssa_correlation(parser_scores, probes, kind)
            matrix = analysis.pairwise_ssa(probes, kind, parser_scores.sources)
            analysis.write_score_matrix(matrix, out / "reports" / f"ssa-{kind}.tsv")

    if args.lang2vec:
        table = analysis.read_lang2vec(args.lang2vec)
        results["lang2vec"] = analysis.lang2vec_correlation(parser_scores, table)
        inputs.append(args.lang2vec)

    z_tests = {}
    names = sorted(name for name, result in results.items() if not result.degenerate)
    for i, first in enumerate(names):
        for second in names[i + 1:]:
            a, b = results[first], results[second]
            try:
                z, p = analysis.correlation_z_test(a.rho, a.n_pairs, b.rho, b.n_pairs)
                z_tests[f"{first}|{second}"] = {"z": z, "p_value": p}
            except DegenerateInputError:
                z_tests[f"{first}|{second}"] = {"z": None, "p_value": None}

    document = {
        "metric": parser_scores.metric,
        "correlations": {name: _result_dict(result) for name, result in results.items()},
        "best_source_hit_rate": {
            name: result.hit_rate for name, result in results.items()
        },
        "z_tests": z_tests,
        "notes": {
            "z_test_assumes_independent_samples": True,
            "include_diagonal": not args.exclude_diagonal,
        },
    }
    _write_json(document, out / "reports" / "transfer.json")
    _write_manifest(out, args, inputs, [], {"exclude_diagonal": args.exclude_diagonal}, started)
    for name, result in results.items():
        print(f"{name}: rho={result.rho} tau_w={result.tau_w} hit_rate={result.hit_rate}")
    return 0


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lr", type=float, default=1e-3, help="initial learning rate")
    parser.add_argument("--plateau-factor", type=float, default=0.1)
    parser.add_argument("--patience", type=int, default=3,
                        help="early stopping patience in epochs")
    parser.add_argument("--max-epochs", type=int, default=30)
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--dim-b", type=int, default=128,
                        help="structural subspace width")
    parser.add_argument("--dim-c", type=int, default=128,
                        help="depth subspace width")
    parser.add_argument("--weight-structural", type=float, default=1.0)
    parser.add_argument("--weight-relational", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depprobe",
        description="Train, decode and analyze linear dependency probes.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("synth", help="generate a synthetic recoverable corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--num-train", type=int, default=500)
    p.add_argument("--num-dev", type=int, default=100)
    p.add_argument("--seed", type=int, default=41)
    p.add_argument("--min-len", type=int, default=3)
    p.add_argument("--max-len", type=int, default=12)
    p.set_defaults(func=cmd_synth)

    p = commands.add_parser("train", help="train a probe on aligned embeddings")
    p.add_argument("--train-conllu", required=True)
    p.add_argument("--dev-conllu", required=True)
    p.add_argument("--train-emb", action="append", required=True,
                   help="embedding file; repeat for multiple layers")
    p.add_argument("--dev-emb", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--probe", choices=("depprobe", "dirprobe"), default="depprobe")
    p.add_argument("--seeds", default="41", help="comma-separated seeds")
    p.add_argument("--layer-b", type=int, default=probe.DEFAULT_STRUCTURAL_LAYER,
                   help="encoder layer for the structural map")
    p.add_argument("--layer-l", type=int, default=probe.DEFAULT_RELATIONAL_LAYER,
                   help="encoder layer for the relational map")
    p.add_argument("--layer-c", type=int, default=probe.DEFAULT_STRUCTURAL_LAYER,
                   help="encoder layer for the depth map")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = commands.add_parser("parse", help="decode trees with a trained probe")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--conllu", required=True)
    p.add_argument("--emb", action="append", required=True)
    p.add_argument("--decoder", choices=("depprobe", "mst", "dirprobe"),
                   default="depprobe")
    p.add_argument("--flip-depth-gate", action="store_true",
                   help="invert the depth-gate reading (replication studies)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_parse)

    p = commands.add_parser("eval", help="score predictions against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = commands.add_parser("layer-scan", help="train one probe per encoder layer")
    p.add_argument("--train-conllu", required=True)
    p.add_argument("--dev-conllu", required=True)
    p.add_argument("--train-emb-pattern", required=True,
                   help="path template with a {layer} placeholder")
    p.add_argument("--dev-emb-pattern", required=True)
    p.add_argument("--layers", default="0-12", help="e.g. 0-12 or 0,4,8")
    p.add_argument("--seed", type=int, default=41)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_layer_scan)

    p = commands.add_parser("transfer", help="transfer-prediction statistics")
    p.add_argument("--parser-scores", required=True,
                   help="TSV score matrix of the reference parser")
    p.add_argument("--probe-scores", help="TSV score matrix of the probe")
    p.add_argument("--probe-checkpoint", action="append",
                   help="LANG=PATH; repeat per language for SSA statistics")
    p.add_argument("--lang2vec", help="typological feature CSV")
    p.add_argument("--exclude-diagonal", action="store_true",
                   help="drop in-language cells from the Pearson correlation")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as error:  # noqa: BLE001 - mapped to exit codes below
        for error_type, code in _EXIT_CODES:
            if isinstance(error, error_type):
                print(f"error: {error}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
