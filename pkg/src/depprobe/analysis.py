"""Transfer-prediction statistics.

Correlates probe-derived signals (attachment scores, negative subspace
angles, typological cosine similarity) against the reference parser's
source-by-target score matrix. Rank agreement uses the additive
hyperbolic weighted Kendall coefficient; its ``(tau + 1) / 2`` reading is
the probability that ranking one source above another matches the parser.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.stats

from .errors import DegenerateInputError, RankError

_SSA_KINDS = ("struct", "depth", "rel")


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation with a two-sided t-test p-value (n - 2 df)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-d arrays of equal length")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    if denom == 0.0:
        raise DegenerateInputError("correlation undefined for constant input")
    rho = float(np.clip((xc @ yc) / denom, -1.0, 1.0))
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(scipy.stats.t.sf(abs(t), df=n - 2))
    return rho, p


def _descending_ranks(values: np.ndarray) -> np.ndarray:
    """0-based ranks with the largest value at rank 0; ties get averages."""
    return scipy.stats.rankdata(-values, method="average") - 1.0


def weighted_kendall(ground, predicted) -> float:
    """Additive hyperbolic weighted Kendall rank agreement.

    Pair (i, j) weighs 1/(1+rank_i) + 1/(1+rank_j) under the ground
    ranking (rank 0 = best ground value). Concordant pairs add their
    weight, discordant pairs subtract it, and pairs tied in either list
    count toward the denominator only.
    """
    ground = np.asarray(ground, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if ground.shape != predicted.shape or ground.ndim != 1:
        raise ValueError("inputs must be 1-d arrays of equal length")
    n = ground.size
    if n < 2:
        raise ValueError("need at least 2 observations")

    weights = 1.0 / (1.0 + _descending_ranks(ground))
    # sequential accumulation in pair order keeps the result reproducible
    # bit for bit against a plain pair enumeration
    numerator = 0.0
    denominator = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            pair_weight = weights[i] + weights[j]
            denominator += pair_weight
            sign_g = int(ground[i] > ground[j]) - int(ground[i] < ground[j])
            sign_p = int(predicted[i] > predicted[j]) - int(predicted[i] < predicted[j])
            numerator += pair_weight * (sign_g * sign_p)
    return numerator / denominator


def correlation_z_test(r1: float, n1: int, r2: float, n2: int) -> tuple[float, float]:
    """Fisher-transform Z-test for the difference of two correlations.

    Assumes independent samples; when both correlations share data the
    p-value is approximate (flagged in report output).
    """
    for r in (r1, r2):
        if abs(r) >= 1.0:
            raise DegenerateInputError("correlation of magnitude 1 cannot be compared")
    for n in (n1, n2):
        if n <= 3:
            raise ValueError("need more than 3 observations per correlation")
    z = (np.arctanh(r1) - np.arctanh(r2)) / np.sqrt(
        1.0 / (n1 - 3) + 1.0 / (n2 - 3)
    )
    p = 2.0 * float(scipy.stats.norm.sf(abs(z)))
    return float(z), p


def _check_rank(matrix, name: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or 0 in matrix.shape:
        raise ValueError(f"{name}: expected a non-empty 2-d matrix")
    singular = np.linalg.svd(matrix, compute_uv=False)
    if singular.min() <= 1e-10:
        raise RankError(f"{name}: matrix is rank-deficient (min sigma {singular.min():.2e})")
    return matrix


def subspace_angle(a, b) -> float:
    """Mean principal angle between column spaces, in degrees.

    Bases are orthonormalized and the singular values of their product
    turned into min(k, m) angles in [0, 90]; small angles use the
    sine-based evaluation so that identical spans measure 0 within 1e-6
    degrees.
    """
    a = _check_rank(a, "first matrix")
    b = _check_rank(b, "second matrix")
    angles = scipy.linalg.subspace_angles(a, b)
    return float(np.degrees(angles.mean()))


@dataclass(frozen=True)
class ScoreMatrix:
    """Source-by-target score table (e.g. parser LAS per language pair)."""

    metric: str
    sources: tuple[str, ...]
    targets: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.sources), len(self.targets)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{len(self.sources)} sources x {len(self.targets)} targets"
            )
        if not np.isfinite(values).all():
            raise ValueError("score matrix contains non-finite values")
        object.__setattr__(self, "values", values)


def write_score_matrix(matrix: ScoreMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\t".join([matrix.metric, *matrix.targets]) + "\n")
        for source, row in zip(matrix.sources, matrix.values):
            handle.write("\t".join([source, *(repr(float(v)) for v in row)]) + "\n")


def read_score_matrix(path) -> ScoreMatrix:
    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    header = lines[0].split("\t")
    metric, targets = header[0], header[1:]
    sources, rows = [], []
    for line in lines[1:]:
        cells = line.split("\t")
        sources.append(cells[0])
        rows.append([float(cell) for cell in cells[1:]])
    return ScoreMatrix(
        metric=metric,
        sources=tuple(sources),
        targets=tuple(targets),
        values=np.asarray(rows, dtype=np.float64),
    )


def _check_same_axes(reference: ScoreMatrix, other: ScoreMatrix) -> None:
    if reference.sources != other.sources or reference.targets != other.targets:
        missing = sorted(
            set(reference.sources) ^ set(other.sources)
            | set(reference.targets) ^ set(other.targets)
        )
        raise ValueError(
            f"score matrices disagree on language sets or ordering: {missing or 'ordering'}"
        )


@dataclass(frozen=True)
class CorrelationResult:
    rho: float | None
    p_value: float | None
    tau_w: float | None
    tau_w_global: float | None
    hit_rate: float | None
    n_pairs: int
    degenerate: bool = False


def _correlate(parser_cols, signal_cols, flat_parser, flat_signal, n_pairs):
    """Shared correlation core over per-target columns and flat cells."""
    flat_parser = np.asarray(flat_parser, dtype=np.float64)
    flat_signal = np.asarray(flat_signal, dtype=np.float64)
    if np.ptp(flat_signal) == 0.0 or np.ptp(flat_parser) == 0.0:
        return CorrelationResult(None, None, None, None, None, n_pairs, degenerate=True)
    try:
        rho, p = pearson(flat_signal, flat_parser)
    except DegenerateInputError:
        return CorrelationResult(None, None, None, None, None, n_pairs, degenerate=True)
    taus = [
        weighted_kendall(parser_col, signal_col)
        for parser_col, signal_col in zip(parser_cols, signal_cols)
    ]
    tau_global = weighted_kendall(flat_parser, flat_signal)
    hits = sum(
        int(np.argmax(signal_col)) == int(np.argmax(parser_col))
        for parser_col, signal_col in zip(parser_cols, signal_cols)
    )
    return CorrelationResult(
        rho=rho,
        p_value=p,
        tau_w=float(np.mean(taus)),
        tau_w_global=tau_global,
        hit_rate=hits / len(parser_cols),
        n_pairs=n_pairs,
    )


def transfer_correlation(
    parser_scores: ScoreMatrix,
    probe_scores: ScoreMatrix,
    include_diagonal: bool = True,
) -> CorrelationResult:
    """Probe-score agreement with the parser across all source-target cells.

    Pearson rho runs over the flattened cells (diagonal included by
    default); tau_w ranks sources per target and averages over targets;
    the hit rate is the fraction of targets whose best probe source is
    also the parser's best source.
    """
    _check_same_axes(parser_scores, probe_scores)
    parser = parser_scores.values
    probe = probe_scores.values

    if include_diagonal or parser.shape[0] != parser.shape[1]:
        flat_parser, flat_probe = parser.ravel(), probe.ravel()
    else:
        mask = ~np.eye(parser.shape[0], dtype=bool)
        flat_parser, flat_probe = parser[mask], probe[mask]

    parser_cols = [parser[:, t] for t in range(parser.shape[1])]
    probe_cols = [probe[:, t] for t in range(probe.shape[1])]
    return _correlate(parser_cols, probe_cols, flat_parser, flat_probe, flat_parser.size)


def pairwise_ssa(probes: dict, which: str, languages) -> ScoreMatrix:
    """Symmetric matrix of subspace angles between same-kind probe maps."""
    if which not in _SSA_KINDS:
        raise ValueError(f"which must be one of {_SSA_KINDS}, got {which!r}")
    attribute = {"struct": "structural", "depth": "depth", "rel": "relational"}[which]
    matrices = {}
    for language in languages:
        if language not in probes:
            raise ValueError(f"no probe checkpoint for language {language!r}")
        matrix = getattr(probes[language], attribute)
        if matrix is None:
            raise ValueError(
                f"probe for {language!r} has no {attribute} map (needed for SSA-{which})"
            )
        matrices[language] = matrix

    n = len(languages)
    values = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            angle = subspace_angle(matrices[languages[i]], matrices[languages[j]])
            values[i, j] = values[j, i] = angle
    return ScoreMatrix(
        metric=f"ssa_{which}",
        sources=tuple(languages),
        targets=tuple(languages),
        values=values,
    )


def ssa_correlation(
    parser_scores: ScoreMatrix, probes: dict, which: str
) -> CorrelationResult:
    """Correlation of negative subspace angles with parser transfer scores.

    The diagonal (SSA of a probe with itself, always 0) is excluded from
    every statistic. All-identical probes make the signal constant; that
    is reported as a degenerate result rather than an error.
    """
    if parser_scores.sources != parser_scores.targets:
        raise ValueError("SSA correlation needs a square source-by-target matrix")
    languages = parser_scores.sources
    ssa = pairwise_ssa(probes, which, languages)

    parser = parser_scores.values
    signal = -ssa.values
    mask = ~np.eye(len(languages), dtype=bool)
    parser_cols = [parser[mask[:, t], t] for t in range(len(languages))]
    signal_cols = [signal[mask[:, t], t] for t in range(len(languages))]
    return _correlate(
        parser_cols, signal_cols, parser[mask], signal[mask], int(mask.sum())
    )


@dataclass(frozen=True)
class Lang2VecTable:
    """Typological feature vectors; NaN marks unknown feature values."""

    features: tuple[str, ...]
    vectors: dict

    def __contains__(self, language):
        return language in self.vectors


def read_lang2vec(path) -> Lang2VecTable:
    """CSV with a language column first; "--" cells are missing values."""
    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    features = tuple(lines[0].split(",")[1:])
    vectors = {}
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(features) + 1:
            raise ValueError(
                f"row for {cells[0]!r} has {len(cells) - 1} features, "
                f"header declares {len(features)}"
            )
        vectors[cells[0]] = np.asarray(
            [np.nan if cell == "--" else float(cell) for cell in cells[1:]],
            dtype=np.float64,
        )
    return Lang2VecTable(features=features, vectors=vectors)


def write_lang2vec(table: Lang2VecTable, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(",".join(["language", *table.features]) + "\n")
        for language, vector in table.vectors.items():
            cells = ["--" if np.isnan(v) else repr(float(v)) for v in vector]
            handle.write(",".join([language, *cells]) + "\n")


def lang2vec_similarity(table: Lang2VecTable, a: str, b: str) -> float:
    """Cosine of the two feature vectors over their shared known features."""
    for language in (a, b):
        if language not in table.vectors:
            raise KeyError(f"language {language!r} not in the typology table")
    va, vb = table.vectors[a], table.vectors[b]
    shared = ~np.isnan(va) & ~np.isnan(vb)
    if not shared.any():
        raise DegenerateInputError(f"{a!r} and {b!r} share no known features")
    va, vb = va[shared], vb[shared]
    norms = np.linalg.norm(va) * np.linalg.norm(vb)
    if norms == 0.0:
        raise DegenerateInputError("cosine undefined for a zero vector")
    return float(np.clip((va @ vb) / norms, -1.0, 1.0))


def lang2vec_correlation(
    parser_scores: ScoreMatrix, table: Lang2VecTable
) -> CorrelationResult:
    """Typological-cosine agreement with the parser over all cells."""
    sources, targets = parser_scores.sources, parser_scores.targets
    similarity = np.asarray(
        [[lang2vec_similarity(table, s, t) for t in targets] for s in sources]
    )
    parser = parser_scores.values
    parser_cols = [parser[:, t] for t in range(len(targets))]
    signal_cols = [similarity[:, t] for t in range(len(targets))]
    return _correlate(
        parser_cols, signal_cols, parser.ravel(), similarity.ravel(), parser.size
    )
