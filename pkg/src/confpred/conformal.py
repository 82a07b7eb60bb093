"""Transductive conformal prediction for classification.

The building blocks are :func:`p_value` / :func:`smoothed_p_value` over a
score vector whose last entry belongs to the test example,
:func:`classify_p_table` which tries every candidate label, and the two ways of
reading a table: :func:`prediction_set` and :func:`summarize`.

:class:`TransductiveClassifier` wraps any measure; :class:`KnnConformalClassifier`
computes the same k-NN p-values incrementally so on-line runs over thousands
of examples stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ClassAlphabet,
    ConfidenceCredibility,
    DataError,
    Dataset,
    LabelSet,
    PValueTable,
    as_object,
    check_epsilon,
    complete,
    empty_dataset,
)
from .kernels import distances
from .nonconformity import KnnConfig, Measure, knn_ratio, truncated_sums


@dataclass(frozen=True)
class SmoothingTape:
    """Seeded source of the tie-breaking uniforms used by smoothed p-values.

    Every test object gets its own substream keyed by ``(seed, index)``, so the
    values do not depend on the order in which objects are processed.
    """

    seed: int = 0

    def __post_init__(self):
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit nonnegative integer, got {self.seed}")

    def etas(self, index: int, count: int) -> np.ndarray:
        rng = np.random.default_rng([int(self.seed), int(index)])
        return rng.random(count)


def _check_scores(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size == 0:
        raise ValueError("empty score vector")
    if np.isnan(scores).any():
        raise ValueError("scores must not be NaN")
    return scores


def p_value(scores) -> float:
    """Fraction of scores at least as large as the last one (the test score)."""
    scores = _check_scores(scores)
    return np.count_nonzero(scores >= scores[-1]) / scores.size


def smoothed_p_value(scores, eta: float) -> float:
    """p-value with ties against the test score weighted by ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    scores = _check_scores(scores)
    test = scores[-1]
    greater = np.count_nonzero(scores > test)
    equal = np.count_nonzero(scores == test)
    return (greater + eta * equal) / scores.size


def _p(scores, smoothed: bool, eta: float) -> float:
    return smoothed_p_value(scores, eta) if smoothed else p_value(scores)


def classify_p_table(
    training: Dataset,
    object,
    measure: Measure,
    smoothed: bool = False,
    tape: SmoothingTape | None = None,
    index: int = 0,
) -> PValueTable:
    """p-value of each label in the alphabet as the label of ``object``.

    Each candidate completes the training sequence, the measure scores the
    completed sequence, and the candidate's own score is ranked last.
    ``index`` selects the smoothing substream of ``tape``.
    """
    if not training.is_classification:
        raise DataError("classify_p_table needs a classification dataset")
    alphabet = training.label_space.symbols
    etas = _etas(smoothed, tape, index, len(alphabet))
    entries = {}
    for label, eta in zip(alphabet, etas):
        seq = complete(training, object, label)
        # one example on its own is never strange
        scores = measure(seq) if len(seq) > 1 else np.zeros(1)
        entries[label] = _p(scores, smoothed, eta)
    return PValueTable(entries)


def _etas(smoothed: bool, tape: SmoothingTape | None, index: int, count: int):
    if not smoothed:
        return np.ones(count)
    if tape is None:
        raise ValueError("smoothed p-values need a SmoothingTape")
    return tape.etas(index, count)


def prediction_set(table: PValueTable, eps: float) -> LabelSet:
    """Labels whose p-value is strictly greater than ``eps``."""
    eps = check_epsilon(eps)
    return LabelSet(tuple(label for label, p in table.items() if p > eps))


def summarize(table: PValueTable) -> ConfidenceCredibility:
    """Forced prediction with its confidence and credibility.

    Ties for the largest p-value go to the label that comes first in the
    table (alphabet order). Arithmetic is done on the table's own number type,
    so Decimal or Fraction p-values give exact results.
    """
    labels = list(table.labels)
    if len(labels) < 2:
        raise ValueError("summarize needs at least two candidate labels")
    values = [table[label] for label in labels]
    best = max(range(len(values)), key=lambda i: (values[i], -i))
    runner_up = max(v for i, v in enumerate(values) if i != best)
    return ConfidenceCredibility(
        prediction=labels[best],
        confidence=1 - runner_up,
        credibility=values[best],
    )


# predictors -------------------------------------------------------------------


class TransductiveClassifier:
    """Conformal classifier over any measure; rescoring is done from scratch.

    Predictors share a small interface used by :mod:`confpred.protocol`:
    ``learn(x, label)`` adds a labelled example, ``p_values(x, index)`` returns
    a table, ``predict(x, eps_list, index)`` returns one set per level.
    """

    def __init__(
        self,
        measure: Measure,
        alphabet: ClassAlphabet,
        dim: int,
        smoothed: bool = False,
        tape: SmoothingTape | None = None,
    ):
        if smoothed and tape is None:
            raise ValueError("smoothed predictor needs a SmoothingTape")
        self.measure = measure
        self.alphabet = alphabet
        self.dim = dim
        self.smoothed = smoothed
        self.tape = tape
        self._X: list[np.ndarray] = []
        self._y: list = []

    @property
    def training(self) -> Dataset:
        if not self._X:
            return empty_dataset(self.dim, self.alphabet)
        return Dataset(np.vstack(self._X), self._y, self.alphabet)

    def learn(self, x, label) -> None:
        self.alphabet.code(label)
        self._X.append(as_object(x, self.dim))
        self._y.append(label)

    def p_values(self, x, index: int = 0) -> PValueTable:
        return classify_p_table(
            self.training, x, self.measure, self.smoothed, self.tape, index
        )

    def predict(self, x, eps_list, index: int = 0) -> list[LabelSet]:
        table = self.p_values(x, index)
        return [prediction_set(table, eps) for eps in eps_list]


class KnnConformalClassifier:
    """k-NN conformal classifier with incrementally maintained neighbour lists.

    For every stored example the ``k`` smallest same-label and other-label
    distances are kept sorted. A candidate completion then only inserts the
    test distance into those lists, which makes a prediction O(l k log k)
    instead of O(l^2). Results agree with
    ``classify_p_table(..., partial(knn_scores, cfg=cfg))``.
    """

    def __init__(
        self,
        cfg: KnnConfig,
        alphabet: ClassAlphabet,
        dim: int,
        smoothed: bool = False,
        tape: SmoothingTape | None = None,
    ):
        if smoothed and tape is None:
            raise ValueError("smoothed predictor needs a SmoothingTape")
        self.cfg = cfg
        self.alphabet = alphabet
        self.dim = dim
        self.smoothed = smoothed
        self.tape = tape
        self._n = 0
        self._X = np.empty((16, dim))
        self._codes = np.empty(16, dtype=np.int64)
        self._near_same = np.full((16, cfg.k), np.inf)
        self._near_diff = np.full((16, cfg.k), np.inf)
        self._counts = np.zeros(len(alphabet), dtype=np.int64)

    def __len__(self) -> int:
        return self._n

    def _grow(self) -> None:
        cap = 2 * self._X.shape[0]
        k = self.cfg.k
        self._X = np.resize(self._X, (cap, self.dim))
        self._codes = np.resize(self._codes, cap)
        self._near_same = np.vstack([self._near_same, np.full((cap - self._near_same.shape[0], k), np.inf)])
        self._near_diff = np.vstack([self._near_diff, np.full((cap - self._near_diff.shape[0], k), np.inf)])

    def _dist(self, x: np.ndarray) -> np.ndarray:
        return distances(self.cfg.kernel, self._X[: self._n], x[None, :])[:, 0]

    def _k_smallest(self, d: np.ndarray) -> np.ndarray:
        out = np.full(self.cfg.k, np.inf)
        d = np.sort(d)[: self.cfg.k]
        out[: d.size] = d
        return out

    def _inserted(self, lists: np.ndarray, d: np.ndarray) -> np.ndarray:
        if self.cfg.k == 1:
            return np.minimum(lists, d[:, None])
        return np.sort(np.concatenate([lists, d[:, None]], axis=1), axis=1)[:, : self.cfg.k]

    def learn(self, x, label) -> None:
        x = as_object(x, self.dim)
        code = self.alphabet.code(label)
        n = self._n
        if n == self._X.shape[0]:
            self._grow()
        if n:
            d = self._dist(x)
            same = self._codes[:n] == code
            self._near_same[:n][same] = self._inserted(self._near_same[:n][same], d[same])
            self._near_diff[:n][~same] = self._inserted(self._near_diff[:n][~same], d[~same])
            self._near_same[n] = self._k_smallest(d[same])
            self._near_diff[n] = self._k_smallest(d[~same])
        self._X[n] = x
        self._codes[n] = code
        self._counts[code] += 1
        self._n = n + 1

    def candidate_scores(self, x) -> list[np.ndarray]:
        """Score vectors of the completed sequence for each candidate label."""
        x = as_object(x, self.dim)
        n, k = self._n, self.cfg.k
        if n == 0:
            return [np.zeros(1) for _ in self.alphabet]
        d = self._dist(x)
        codes = self._codes[:n]
        near_same = self._near_same[:n]
        near_diff = self._near_diff[:n]
        with_same = self._inserted(near_same, d)
        with_diff = self._inserted(near_diff, d)
        own = self._counts[codes]
        out = []
        for c in range(len(self.alphabet)):
            same = codes == c
            s_same = np.where(same[:, None], with_same, near_same)
            s_diff = np.where(same[:, None], near_diff, with_diff)
            n_same = own - 1 + same
            n_diff = n - own + ~same
            m = np.minimum(np.minimum(n_same, n_diff), k)
            train = knn_ratio(*truncated_sums(s_same, s_diff, m), n_same, n_diff)

            t_same, t_diff = int(self._counts[c]), n - int(self._counts[c])
            t_m = min(k, t_same, t_diff)
            ds = np.sort(d[same])[:t_m].sum() if t_m else 0.0
            dd = np.sort(d[~same])[:t_m].sum() if t_m else 0.0
            test = knn_ratio(ds, dd, t_same, t_diff).reshape(1)
            out.append(np.concatenate([train, test]))
        return out

    def p_values(self, x, index: int = 0) -> PValueTable:
        etas = _etas(self.smoothed, self.tape, index, len(self.alphabet))
        scores = self.candidate_scores(x)
        return PValueTable(
            {
                label: _p(s, self.smoothed, eta)
                for label, s, eta in zip(self.alphabet, scores, etas)
            }
        )

    def predict(self, x, eps_list, index: int = 0) -> list[LabelSet]:
        table = self.p_values(x, index)
        return [prediction_set(table, eps) for eps in eps_list]
