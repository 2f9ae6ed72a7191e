"""Hyperparameter tuning and the metric suite.

Grid search over (lambda, tau) inside nested k-fold cross-validation:
patterns are generalized only from malicious entries of each training
portion, the point is chosen on an internal validation split by F1, and the
outer test folds stay untouched during selection. Fold assignment keeps
whole attack families together so imitations of one incident can never leak
across the train/test boundary.

Pairwise per-side similarities are label-independent, so they are
precomputed once as matrices and reused across folds, grid points and
label-permutation runs. The matrix path performs the same IEEE operations
as the scalar matcher, so scores agree bit-for-bit.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .extractor import ExtractedLogic, logic_from_dict, logic_to_dict
from .matcher import candidate_sides

NOT_DEFINED = "NOT_DEFINED"


class Label(str, Enum):
    MALICIOUS = "MALICIOUS"
    BENIGN = "BENIGN"


class DegenerateInput(ValueError):
    pass


class GridEmpty(ValueError):
    pass


class InsufficientBenign(ValueError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    tx_hash: str
    label: Label
    family: Optional[str]
    logic: ExtractedLogic


@dataclass(frozen=True)
class LabeledCorpus:
    entries: Tuple[CorpusEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def counts(self) -> Tuple[int, int]:
        m = sum(1 for e in self.entries if e.label is Label.MALICIOUS)
        return m, len(self.entries) - m


def compute_metrics(predictions: Sequence[Tuple[Label, bool]]) -> Dict[str, object]:
    """Confusion-matrix metrics for (true label, flagged) pairs.

    Division-by-zero cases yield the explicit NOT_DEFINED marker instead of
    0. Raises DegenerateInput when a class is absent entirely.
    """
    if not predictions:
        raise DegenerateInput("no predictions")
    tp = fp = fn = tn = 0
    for label, flagged in predictions:
        if label is Label.MALICIOUS:
            if flagged:
                tp += 1
            else:
                fn += 1
        else:
            if flagged:
                fp += 1
            else:
                tn += 1
    pos, neg = tp + fn, fp + tn
    if pos == 0 or neg == 0:
        raise DegenerateInput(f"need both classes: {pos} malicious, {neg} benign")
    recall = tp / pos
    fnr = fn / pos
    fpr = fp / neg
    accuracy = (tp + tn) / (pos + neg)
    if tp + fp == 0:
        precision: object = NOT_DEFINED
        f1: object = NOT_DEFINED
    else:
        precision = tp / (tp + fp)
        f1 = NOT_DEFINED if precision + recall == 0 else \
            2 * precision * recall / (precision + recall)
    metrics = {
        "f1": f1, "fpr": fpr, "fnr": fnr, "accuracy": accuracy, "recall": recall,
        "precision": precision, "tp": tp, "fp": fp, "fn": fn, "tn": tn,
    }
    assert abs(accuracy - (tp + tn) / (pos + neg)) == 0.0
    assert abs(recall - (1.0 - fnr)) < 1e-12
    return metrics


def default_grid(step: float = 0.02) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    if step <= 0 or step > 1:
        raise GridEmpty(f"bad grid step {step}")
    n = int(round(1.0 / step))
    values = tuple(round(i * step, 10) for i in range(n + 1))
    return values, values


@dataclass
class PairScores:
    """Pairwise per-side similarities: row = pattern source, col = candidate."""

    sim_core: np.ndarray
    sim_proto: np.ndarray
    core_size: np.ndarray
    proto_size: np.ndarray
    has_pattern: np.ndarray  # at least one non-empty side


def precompute_pair_scores(corpus: LabeledCorpus) -> PairScores:
    n = len(corpus.entries)
    key_index: Dict[tuple, int] = {}
    sides = []
    for e in corpus.entries:
        core, proto = candidate_sides(e.logic)
        sides.append((core, proto))
        for k in core | proto:
            key_index.setdefault(k, len(key_index))
    K = max(len(key_index), 1)
    C = np.zeros((n, K), dtype=np.float64)
    P = np.zeros((n, K), dtype=np.float64)
    for i, (core, proto) in enumerate(sides):
        for k in core:
            C[i, key_index[k]] = 1.0
        for k in proto:
            P[i, key_index[k]] = 1.0
    core_size = C.sum(axis=1)
    proto_size = P.sum(axis=1)
    inter_core = C @ C.T
    inter_proto = P @ P.T
    # same expression as matcher.ansd: 1 - (|A| - |A & B|) / |A|
    with np.errstate(divide="ignore", invalid="ignore"):
        sim_core = 1.0 - (core_size[:, None] - inter_core) / core_size[:, None]
        sim_proto = 1.0 - (proto_size[:, None] - inter_proto) / proto_size[:, None]
    sim_core[core_size == 0, :] = 0.0
    sim_proto[proto_size == 0, :] = 0.0
    return PairScores(
        sim_core=sim_core,
        sim_proto=sim_proto,
        core_size=core_size,
        proto_size=proto_size,
        has_pattern=(core_size + proto_size) > 0,
    )


def _combine_sliced(simc: np.ndarray, simp: np.ndarray, core_sz: np.ndarray,
                    proto_sz: np.ndarray, lam: float) -> np.ndarray:
    lo = np.minimum(simc, simp)
    hi = np.maximum(simc, simp)
    weighted = np.minimum(hi, np.maximum(lo, lam * simc + (1.0 - lam) * simp))
    weighted = np.where(simc == simp, simc, weighted)
    return np.where(core_sz == 0, simp, np.where(proto_sz == 0, simc, weighted))


def _slice_scores(scores: PairScores, pattern_rows: np.ndarray,
                  candidate_cols: np.ndarray):
    return (
        scores.sim_core[np.ix_(pattern_rows, candidate_cols)],
        scores.sim_proto[np.ix_(pattern_rows, candidate_cols)],
        scores.core_size[pattern_rows][:, None],
        scores.proto_size[pattern_rows][:, None],
    )


def combined_scores(scores: PairScores, pattern_rows: np.ndarray,
                    candidate_cols: np.ndarray, lam: float) -> np.ndarray:
    """Weighted per-pair scores with the empty-side policy, vectorized.

    Elementwise identical to matcher.finalize/combine.
    """
    simc, simp, core_sz, proto_sz = _slice_scores(scores, pattern_rows, candidate_cols)
    return _combine_sliced(simc, simp, core_sz, proto_sz, lam)


def _f1_vector(tp: np.ndarray, fp: np.ndarray, fn: np.ndarray) -> np.ndarray:
    """F1 per threshold with NOT_DEFINED encoded as NaN; same arithmetic as
    compute_metrics."""
    pos = tp + fn
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = tp / (tp + fp)
        recall = tp / pos
        f1 = 2 * precision * recall / (precision + recall)
    f1 = np.where(tp + fp == 0, np.nan, f1)
    f1 = np.where((tp + fp > 0) & (precision + recall == 0), np.nan, f1)
    return f1


@dataclass
class TuneResult:
    best_lambda: float
    best_tau: float
    per_fold_metrics: List[dict]
    fold_points: List[Tuple[float, float]]
    grid_lambdas: Tuple[float, ...]
    grid_taus: Tuple[float, ...]
    surface: np.ndarray  # mean inner-validation F1, NaN where undefined

    def to_dict(self) -> dict:
        surface = [[None if np.isnan(v) else float(v) for v in row]
                   for row in self.surface]
        return {
            "best_lambda": self.best_lambda,
            "best_tau": self.best_tau,
            "per_fold_metrics": self.per_fold_metrics,
            "fold_points": [list(p) for p in self.fold_points],
            "grid_lambdas": list(self.grid_lambdas),
            "grid_taus": list(self.grid_taus),
            "surface": surface,
        }


def _entry_groups(entries: Sequence[CorpusEntry]) -> Dict[str, List[int]]:
    groups: Dict[str, List[int]] = {}
    for i, e in enumerate(entries):
        key = e.family if e.family else f"solo:{i}"
        groups.setdefault(key, []).append(i)
    return groups


def _assign_folds(corpus: LabeledCorpus, k: int, rng: random.Random) -> List[int]:
    """Family-aware fold assignment: every group lands in exactly one fold.

    Malicious families and benign singletons are spread round-robin after a
    seeded shuffle, which keeps both class counts balanced across folds.
    """
    groups = _entry_groups(corpus.entries)
    mal_groups, ben_groups = [], []
    for key in sorted(groups):
        indices = groups[key]
        if any(corpus.entries[i].label is Label.MALICIOUS for i in indices):
            mal_groups.append(key)
        else:
            ben_groups.append(key)
    rng.shuffle(mal_groups)
    rng.shuffle(ben_groups)
    fold_of = [0] * len(corpus.entries)
    for pos, key in enumerate(mal_groups):
        for i in groups[key]:
            fold_of[i] = pos % k
    for pos, key in enumerate(ben_groups):
        for i in groups[key]:
            fold_of[i] = pos % k
    return fold_of


def _check_no_leakage(corpus: LabeledCorpus, train_idx: np.ndarray,
                      test_idx: np.ndarray) -> None:
    train_fams = {corpus.entries[i].family for i in train_idx
                  if corpus.entries[i].family}
    test_fams = {corpus.entries[i].family for i in test_idx
                 if corpus.entries[i].family}
    shared = train_fams & test_fams
    if shared:
        raise RuntimeError(f"family leakage across folds: {sorted(shared)[:5]}")


def _split_groups(indices: List[int], corpus: LabeledCorpus, frac: float,
                  rng: random.Random) -> Tuple[List[int], List[int]]:
    """Family-aware split of one training portion into (fit, validation)."""
    groups: Dict[str, List[int]] = {}
    for i in indices:
        e = corpus.entries[i]
        key = e.family if e.family else f"solo:{i}"
        groups.setdefault(key, []).append(i)
    keys = sorted(groups)
    rng.shuffle(keys)
    target = max(1, int(round(frac * len(indices))))
    val: List[int] = []
    fit: List[int] = []
    for key in keys:
        if len(val) < target:
            val.extend(groups[key])
        else:
            fit.extend(groups[key])
    return fit, val


def nested_cv(corpus: LabeledCorpus, outer_folds: int = 4, inner_frac: float = 0.1,
              grid: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
              seed: int = 0, pair_scores: Optional[PairScores] = None) -> TuneResult:
    """Nested cross-validation with grid-searched (lambda, tau).

    Selection ties break toward higher tau (fewer false positives), then
    lower lambda. The reported surface is the mean inner-validation F1
    across folds; per-fold metrics use each fold's own selected point.
    """
    if len(corpus.entries) < outer_folds * 2:
        raise DegenerateInput(f"corpus of {len(corpus.entries)} too small for "
                              f"{outer_folds} folds")
    if grid is None:
        grid = default_grid()
    lambdas, taus = tuple(grid[0]), tuple(grid[1])
    if not lambdas or not taus:
        raise GridEmpty("empty (lambda, tau) lattice")
    if pair_scores is None:
        pair_scores = precompute_pair_scores(corpus)

    rng = random.Random(seed)
    fold_of = np.asarray(_assign_folds(corpus, outer_folds, rng))
    labels = np.asarray([e.label is Label.MALICIOUS for e in corpus.entries])
    tau_arr = np.asarray(taus)

    surface_sum = np.zeros((len(lambdas), len(taus)))
    surface_cnt = np.zeros((len(lambdas), len(taus)))
    per_fold_metrics: List[dict] = []
    fold_points: List[Tuple[float, float]] = []

    for fold in range(outer_folds):
        test_idx = np.flatnonzero(fold_of == fold)
        train_idx = np.flatnonzero(fold_of != fold)
        if len(test_idx) == 0:
            raise DegenerateInput(f"fold {fold} is empty")
        _check_no_leakage(corpus, train_idx, test_idx)

        fit_idx, val_idx = _split_groups(list(train_idx), corpus, inner_frac,
                                         random.Random(f"{seed}:inner:{fold}"))
        fold_surface = _grid_surface(corpus, pair_scores, np.asarray(fit_idx),
                                     np.asarray(val_idx), lambdas, tau_arr, labels)
        defined = ~np.isnan(fold_surface)
        surface_sum[defined] += fold_surface[defined]
        surface_cnt[defined] += 1

        li, ti = _argmax_point(fold_surface, lambdas, taus)
        lam, tau = lambdas[li], taus[ti]
        fold_points.append((lam, tau))

        flagged = _flag_candidates(corpus, pair_scores, train_idx, test_idx, lam, tau)
        predictions = [(corpus.entries[i].label, bool(f))
                       for i, f in zip(test_idx, flagged)]
        metrics = compute_metrics(predictions)
        metrics["lambda"], metrics["tau"] = lam, tau
        per_fold_metrics.append(metrics)

    with np.errstate(invalid="ignore"):
        surface = np.where(surface_cnt > 0, surface_sum / np.maximum(surface_cnt, 1), np.nan)
    li, ti = _argmax_point(surface, lambdas, taus)
    return TuneResult(
        best_lambda=lambdas[li],
        best_tau=taus[ti],
        per_fold_metrics=per_fold_metrics,
        fold_points=fold_points,
        grid_lambdas=lambdas,
        grid_taus=taus,
        surface=surface,
    )


def _pattern_rows(corpus: LabeledCorpus, scores: PairScores,
                  indices: np.ndarray) -> np.ndarray:
    return np.asarray([i for i in indices
                       if corpus.entries[i].label is Label.MALICIOUS
                       and scores.has_pattern[i]], dtype=int)


def _grid_surface(corpus: LabeledCorpus, scores: PairScores, fit_idx: np.ndarray,
                  val_idx: np.ndarray, lambdas: Sequence[float],
                  tau_arr: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Inner-validation F1 for every grid point, NaN where undefined."""
    surface = np.full((len(lambdas), len(tau_arr)), np.nan)
    pat = _pattern_rows(corpus, scores, fit_idx)
    if len(pat) == 0 or len(val_idx) == 0:
        return surface
    y = labels[val_idx]
    if not y.any() or y.all():
        return surface  # single-class validation split: F1 undefined
    sliced = _slice_scores(scores, pat, val_idx)
    for li, lam in enumerate(lambdas):
        best = _combine_sliced(*sliced, lam).max(axis=0)
        flagged = best[None, :] >= tau_arr[:, None]
        tp = (flagged & y[None, :]).sum(axis=1).astype(float)
        fp = (flagged & ~y[None, :]).sum(axis=1).astype(float)
        fn = (~flagged & y[None, :]).sum(axis=1).astype(float)
        surface[li, :] = _f1_vector(tp, fp, fn)
    return surface


def _argmax_point(surface: np.ndarray, lambdas: Sequence[float],
                  taus: Sequence[float]) -> Tuple[int, int]:
    """Best grid point by F1; ties prefer higher tau, then lower lambda."""
    best = (-1.0, -1.0, 0.0)  # (f1, tau, -lambda)
    best_pt = (0, 0)
    for li in range(surface.shape[0]):
        for ti in range(surface.shape[1]):
            f1 = surface[li, ti]
            if np.isnan(f1):
                continue
            key = (f1, taus[ti], -lambdas[li])
            if key > best:
                best = key
                best_pt = (li, ti)
    return best_pt


def _flag_candidates(corpus: LabeledCorpus, scores: PairScores,
                     train_idx: np.ndarray, candidate_idx: np.ndarray,
                     lam: float, tau: float) -> np.ndarray:
    pat = _pattern_rows(corpus, scores, train_idx)
    if len(pat) == 0:
        return np.zeros(len(candidate_idx), dtype=bool)
    best = combined_scores(scores, pat, candidate_idx, lam).max(axis=0)
    return best >= tau


def evaluate_fixed(corpus: LabeledCorpus, lam: float, tau: float,
                   outer_folds: int = 4, seed: int = 0,
                   pair_scores: Optional[PairScores] = None) -> List[dict]:
    """Per-fold metrics at a fixed (lambda, tau), same folding as nested_cv."""
    if pair_scores is None:
        pair_scores = precompute_pair_scores(corpus)
    rng = random.Random(seed)
    fold_of = np.asarray(_assign_folds(corpus, outer_folds, rng))
    out = []
    for fold in range(outer_folds):
        test_idx = np.flatnonzero(fold_of == fold)
        train_idx = np.flatnonzero(fold_of != fold)
        _check_no_leakage(corpus, train_idx, test_idx)
        flagged = _flag_candidates(corpus, pair_scores, train_idx, test_idx, lam, tau)
        predictions = [(corpus.entries[i].label, bool(f))
                       for i, f in zip(test_idx, flagged)]
        out.append(compute_metrics(predictions))
    return out


def skewed_eval(corpus: LabeledCorpus, ratios: Sequence[Tuple[int, int]],
                lam: float, tau: float, seed: int = 0,
                outer_folds: int = 4) -> dict:
    """Metrics under skewed malicious:benign ratios at one tuned point.

    Ratios are realized by subsampling malicious entries against the full
    benign pool (fixed seed). Reports per-ratio mean metrics plus the
    FPR/FNR drift from the first to the last ratio.
    """
    malicious = [e for e in corpus.entries if e.label is Label.MALICIOUS]
    benign = [e for e in corpus.entries if e.label is Label.BENIGN]
    per_ratio = {}
    for rm, rb in ratios:
        m_target = len(benign) * rm // rb
        if m_target < outer_folds or m_target > len(malicious):
            raise InsufficientBenign(
                f"ratio {rm}:{rb} needs {m_target} malicious entries; "
                f"have {len(malicious)} against {len(benign)} benign"
            )
        rng = random.Random(f"{seed}:{rm}:{rb}")
        sub = rng.sample(malicious, m_target)
        sub_corpus = LabeledCorpus(tuple(sub) + tuple(benign))
        folds = evaluate_fixed(sub_corpus, lam, tau, outer_folds=outer_folds,
                               seed=seed)
        per_ratio[f"{rm}:{rb}"] = {
            "folds": folds,
            "mean": _mean_metrics(folds),
        }
    keys = list(per_ratio)
    drift = {}
    if len(keys) >= 2:
        first, last = per_ratio[keys[0]]["mean"], per_ratio[keys[-1]]["mean"]
        for metric in ("fpr", "fnr", "f1"):
            if isinstance(first.get(metric), float) and isinstance(last.get(metric), float):
                drift[metric] = last[metric] - first[metric]
    return {"ratios": per_ratio, "drift_first_to_last": drift}


def _mean_metrics(folds: List[dict]) -> dict:
    """Per-metric mean and std across folds, skipping undefined values."""
    out = {}
    for metric in ("f1", "fpr", "fnr", "accuracy", "recall"):
        values = [f[metric] for f in folds if isinstance(f[metric], float)]
        if values:
            mean = sum(values) / len(values)
            out[metric] = mean
            out[f"{metric}_std"] = (sum((v - mean) ** 2 for v in values)
                                    / len(values)) ** 0.5
        else:
            out[metric] = NOT_DEFINED
            out[f"{metric}_std"] = NOT_DEFINED
        out[f"{metric}_defined_folds"] = len(values)
    return out


def shuffle_labels(corpus: LabeledCorpus, seed: int) -> LabeledCorpus:
    """Permute labels across entries (null-hypothesis control); families and
    logics stay attached to their entries."""
    labels = [e.label for e in corpus.entries]
    random.Random(seed).shuffle(labels)
    return LabeledCorpus(tuple(
        CorpusEntry(e.tx_hash, label, e.family, e.logic)
        for e, label in zip(corpus.entries, labels)
    ))


def save_corpus_jsonl(corpus: LabeledCorpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in corpus.entries:
            doc = {"tx_hash": e.tx_hash, "label": e.label.value,
                   "logic": logic_to_dict(e.logic)}
            if e.family:
                doc["family"] = e.family
            fh.write(json.dumps(doc, separators=(",", ":")) + "\n")


def load_corpus_jsonl(path: str) -> LabeledCorpus:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            entries.append(CorpusEntry(
                tx_hash=doc["tx_hash"],
                label=Label(doc["label"]),
                family=doc.get("family"),
                logic=logic_from_dict(doc["logic"]),
            ))
    return LabeledCorpus(tuple(entries))
