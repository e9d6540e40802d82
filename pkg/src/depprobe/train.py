"""Losses, analytic gradients and the optimization loop.

Per-sentence objectives:

* structural: mean absolute difference between gold tree distances and
  probe distances over all ordered word pairs (i = j included),
* relational: mean cross-entropy of the gold relation label; words whose
  gold label falls outside the probe's 37-label space (the legacy "ref")
  are excluded from the mean,
* depth: mean absolute difference between gold depth and the squared
  norm in the depth image.

Training uses a decoupled-weight-decay adaptive-moment optimizer with
reduce-on-plateau and early stopping on the dev loss. Everything is
deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .decode import undirected_mst
from .probe import DISTANCE_EPS, ProbeModel, relation_prob_matrix
from .treebank import REF_INDEX, GoldSentence

#: Plateau detection: dev loss must improve by more than this amount.
IMPROVEMENT_THRESHOLD = 1e-4


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    plateau_factor: float = 0.1
    early_stop_patience: int = 3
    max_epochs: int = 30
    batch_size: int = 64
    seed: int = 41
    loss_weights: tuple[float, float] = (1.0, 1.0)
    weight_decay: float = 0.01

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.plateau_factor < 1:
            raise ValueError("plateau_factor must lie in (0, 1)")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


@dataclass(frozen=True)
class TrainExample:
    """One sentence with the embeddings each matrix trains against."""

    gold: GoldSentence
    structural_emb: np.ndarray
    relational_emb: np.ndarray | None = None
    depth_emb: np.ndarray | None = None


def build_examples(corpus, structural, relational=None, depth=None) -> list[TrainExample]:
    """Zip a corpus with per-role embedding records (already aligned)."""
    from .embstore import align

    structural_pairs = align(corpus, structural)
    relational_pairs = align(corpus, relational) if relational is not None else None
    depth_pairs = align(corpus, depth) if depth is not None else None

    examples = []
    for index, (sentence, record) in enumerate(structural_pairs):
        examples.append(
            TrainExample(
                gold=sentence,
                structural_emb=np.ascontiguousarray(record.values, dtype=np.float64),
                relational_emb=np.ascontiguousarray(
                    relational_pairs[index][1].values, dtype=np.float64
                )
                if relational_pairs is not None
                else None,
                depth_emb=np.ascontiguousarray(
                    depth_pairs[index][1].values, dtype=np.float64
                )
                if depth_pairs is not None
                else None,
            )
        )
    return examples


def _check_lengths(matrix, sentence, embeddings):
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.shape != (len(sentence), matrix.shape[0]):
        raise ValueError(
            f"embeddings for sentence {sentence.sentence_id!r}: expected shape "
            f"{(len(sentence), matrix.shape[0])}, got {embeddings.shape}"
        )
    return embeddings


def _masked_labels(sentence) -> np.ndarray:
    labels = np.asarray(sentence.gold_rel, dtype=np.int64)
    labels[labels == REF_INDEX] = -1
    return labels


def structural_loss(structural, sentence, embeddings) -> float:
    embeddings = _check_lengths(structural, sentence, embeddings)
    transformed = np.ascontiguousarray(embeddings @ structural)
    gold = np.ascontiguousarray(sentence.tree_dist, dtype=np.float64)
    loss, _ = _kernels.structural_loss_grad(transformed, gold, DISTANCE_EPS)
    return float(loss)


def relational_loss(relational, sentence, embeddings) -> float:
    embeddings = _check_lengths(relational, sentence, embeddings)
    logits = np.ascontiguousarray(embeddings @ relational)
    loss, _ = _kernels.softmax_xent_loss_grad(logits, _masked_labels(sentence))
    return float(loss)


def depth_loss(depth, sentence, embeddings) -> float:
    embeddings = _check_lengths(depth, sentence, embeddings)
    transformed = np.ascontiguousarray(embeddings @ depth)
    gold = np.ascontiguousarray(sentence.depth, dtype=np.float64)
    loss, _ = _kernels.depth_loss_grad(transformed, gold)
    return float(loss)


def _sentence_losses_grads(model: ProbeModel, example: TrainExample, want_grads: bool):
    """Per-sentence loss terms and, optionally, gradients per matrix."""
    losses = {}
    grads = {}

    emb = _check_lengths(model.structural, example.gold, example.structural_emb)
    transformed = np.ascontiguousarray(emb @ model.structural)
    gold = np.ascontiguousarray(example.gold.tree_dist, dtype=np.float64)
    loss, grad_points = _kernels.structural_loss_grad(transformed, gold, DISTANCE_EPS)
    losses["structural"] = float(loss)
    if want_grads:
        grads["structural"] = emb.T @ grad_points

    if model.relational is not None:
        emb = _check_lengths(model.relational, example.gold, example.relational_emb)
        logits = np.ascontiguousarray(emb @ model.relational)
        loss, grad_logits = _kernels.softmax_xent_loss_grad(
            logits, _masked_labels(example.gold)
        )
        losses["relational"] = float(loss)
        if want_grads:
            grads["relational"] = emb.T @ grad_logits

    if model.depth is not None:
        emb = _check_lengths(model.depth, example.gold, example.depth_emb)
        transformed = np.ascontiguousarray(emb @ model.depth)
        gold_depth = np.ascontiguousarray(example.gold.depth, dtype=np.float64)
        loss, grad_points = _kernels.depth_loss_grad(transformed, gold_depth)
        losses["depth"] = float(loss)
        if want_grads:
            grads["depth"] = emb.T @ grad_points

    return losses, grads


def _term_weights(model: ProbeModel, loss_weights) -> dict:
    weights = {"structural": loss_weights[0]}
    if model.relational is not None:
        weights["relational"] = loss_weights[1]
    if model.depth is not None:
        weights["depth"] = 1.0
    return weights


def gradients(model: ProbeModel, batch, loss_weights=(1.0, 1.0)) -> dict:
    """Analytic gradients of the batch-mean weighted loss, per matrix."""
    if not batch:
        raise ValueError("batch must not be empty")
    weights = _term_weights(model, loss_weights)
    totals = {name: 0.0 for name in weights}
    for example in batch:
        _, grads = _sentence_losses_grads(model, example, want_grads=True)
        for name, grad in grads.items():
            totals[name] = totals[name] + weights[name] * grad
    return {name: total / len(batch) for name, total in totals.items()}


def evaluate_losses(model: ProbeModel, examples) -> dict:
    """Mean per-term losses over a dataset (no gradients)."""
    sums: dict[str, float] = {}
    for example in examples:
        losses, _ = _sentence_losses_grads(model, example, want_grads=False)
        for name, value in losses.items():
            sums[name] = sums.get(name, 0.0) + value
    return {name: value / len(examples) for name, value in sums.items()}


class AdamW:
    """Decoupled weight decay Adam over a dict of parameter matrices."""

    def __init__(self, params, learning_rate, weight_decay=0.01,
                 betas=(0.9, 0.999), eps=1e-8):
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.first_moment = {name: np.zeros_like(value) for name, value in params.items()}
        self.second_moment = {name: np.zeros_like(value) for name, value in params.items()}

    def step(self, params, grads):
        self.step_count += 1
        bias1 = 1.0 - self.beta1**self.step_count
        bias2 = 1.0 - self.beta2**self.step_count
        for name, grad in grads.items():
            m = self.first_moment[name]
            v = self.second_moment[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad**2
            update = (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            params[name] -= self.learning_rate * (
                update + self.weight_decay * params[name]
            )


@dataclass
class EpochRecord:
    epoch: int
    learning_rate: float
    train: dict
    dev: dict


@dataclass
class TrainReport:
    seed: int
    epochs: list[EpochRecord] = field(default_factory=list)
    stopping_epoch: int = 0
    best_epoch: int = 0
    best_dev_loss: float = float("inf")
    initial_dev_loss: float = float("inf")
    final_dev_uuas: float | None = None
    final_dev_relacc: float | None = None

    @property
    def learning_rates(self) -> list[float]:
        return [record.learning_rate for record in self.epochs]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))


def _combined(losses, weights) -> float:
    return sum(weights[name] * losses[name] for name in weights)


def _dev_uuas(model: ProbeModel, examples) -> float | None:
    from .probe import distance_matrix

    gold_edges = 0
    shared = 0
    for example in examples:
        sentence = example.gold
        if len(sentence) < 2:
            continue
        dist = distance_matrix(model.structural, example.structural_emb)
        predicted = undirected_mst(dist)
        gold = {
            (min(h, c), max(h, c))
            for c, h in enumerate(sentence.gold_head)
            if h is not None
        }
        gold_edges += len(gold)
        shared += len(gold & predicted)
    return shared / gold_edges if gold_edges else None


def _dev_relacc(model: ProbeModel, examples) -> float | None:
    if model.relational is None:
        return None
    hits = 0
    total = 0
    for example in examples:
        probs = relation_prob_matrix(model.relational, example.relational_emb)
        predicted = np.argmax(probs, axis=1)
        for i, gold_rel in enumerate(example.gold.gold_rel):
            total += 1
            hits += int(predicted[i]) == gold_rel
    return hits / total if total else None


def fit(model: ProbeModel, train_set, dev_set, config: TrainConfig):
    """Train a probe; returns (best model, report).

    The dev loss is evaluated before training and after every epoch; the
    parameters with the lowest dev loss are returned. The learning rate
    drops by ``plateau_factor`` whenever an epoch fails to improve the
    best dev loss by more than 1e-4, and training stops after
    ``early_stop_patience`` consecutive such epochs.
    """
    if not train_set:
        raise ValueError("training set must not be empty")
    if not dev_set:
        raise ValueError("dev set must not be empty")

    params = {"structural": model.structural.copy()}
    if model.relational is not None:
        params["relational"] = model.relational.copy()
    if model.depth is not None:
        params["depth"] = model.depth.copy()
    weights = _term_weights(model, config.loss_weights)

    # Live view over the mutable parameter arrays (AdamW updates in place).
    live = model.with_matrices(
        structural=params["structural"],
        relational=params.get("relational"),
        depth=params.get("depth"),
    )

    optimizer = AdamW(params, config.learning_rate, config.weight_decay)
    rng = np.random.default_rng(config.seed)

    report = TrainReport(seed=config.seed)
    dev_losses = evaluate_losses(live, dev_set)
    best_loss = _combined(dev_losses, weights)
    report.initial_dev_loss = best_loss
    report.best_dev_loss = best_loss
    best_params = {name: value.copy() for name, value in params.items()}
    bad_epochs = 0

    for epoch in range(1, config.max_epochs + 1):
        epoch_lr = optimizer.learning_rate
        order = rng.permutation(len(train_set))
        train_sums: dict[str, float] = dict.fromkeys(weights, 0.0)
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[index] for index in order[start:start + config.batch_size]]
            grad_sums = {name: 0.0 for name in weights}
            for example in batch:
                losses, grads = _sentence_losses_grads(live, example, want_grads=True)
                for name in weights:
                    train_sums[name] += losses[name]
                    grad_sums[name] = grad_sums[name] + weights[name] * grads[name]
            optimizer.step(
                params, {name: total / len(batch) for name, total in grad_sums.items()}
            )

        train_means = {name: value / len(train_set) for name, value in train_sums.items()}
        train_means["total"] = _combined(train_means, weights)
        dev_losses = evaluate_losses(live, dev_set)
        dev_losses["total"] = _combined(dev_losses, weights)
        report.epochs.append(
            EpochRecord(epoch=epoch, learning_rate=epoch_lr,
                        train=train_means, dev=dev_losses)
        )

        dev_total = dev_losses["total"]
        improved = dev_total < best_loss - IMPROVEMENT_THRESHOLD
        if dev_total < best_loss:
            best_loss = dev_total
            best_params = {name: value.copy() for name, value in params.items()}
            report.best_epoch = epoch
            report.best_dev_loss = best_loss
        if improved:
            bad_epochs = 0
        else:
            optimizer.learning_rate *= config.plateau_factor
            bad_epochs += 1
        report.stopping_epoch = epoch
        if bad_epochs >= config.early_stop_patience:
            break

    best_model = model.with_matrices(
        **{name: value for name, value in best_params.items()}
    )
    report.final_dev_uuas = _dev_uuas(best_model, dev_set)
    report.final_dev_relacc = _dev_relacc(best_model, dev_set)
    return best_model, report


@dataclass(frozen=True)
class LayerScanRecord:
    layer: int
    dev_uuas: float
    dev_relacc: float


@dataclass(frozen=True)
class LayerScanResult:
    records: tuple[LayerScanRecord, ...]
    best_structural_layer: int
    best_relational_layer: int


def layer_scan(train_corpus, dev_corpus, train_records_by_layer,
               dev_records_by_layer, config: TrainConfig,
               structural_dim: int = 128) -> LayerScanResult:
    """Train an independent probe per layer; report dev UUAS and RelAcc.

    Both matrices of each probe train on the same layer's embeddings.
    Returns per-layer records plus the argmax layer for each metric
    (lowest layer wins ties).
    """
    from .probe import initialize

    records = []
    for layer in sorted(train_records_by_layer):
        train_embs = train_records_by_layer[layer]
        dev_embs = dev_records_by_layer[layer]
        embedding_dim = train_embs[0].e if train_embs else 0
        train_set = build_examples(train_corpus, train_embs, relational=train_embs)
        dev_set = build_examples(dev_corpus, dev_embs, relational=dev_embs)
        probe = initialize(
            embedding_dim,
            structural_dim,
            relational=True,
            structural_layer=layer,
            relational_layer=layer,
            seed=config.seed,
        )
        _, report = fit(probe, train_set, dev_set, config)
        records.append(
            LayerScanRecord(
                layer=layer,
                dev_uuas=report.final_dev_uuas,
                dev_relacc=report.final_dev_relacc,
            )
        )

    best_structural = max(records, key=lambda record: record.dev_uuas).layer
    best_relational = max(records, key=lambda record: record.dev_relacc).layer
    return LayerScanResult(
        records=tuple(records),
        best_structural_layer=best_structural,
        best_relational_layer=best_relational,
    )
