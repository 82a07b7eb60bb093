"""On-line and batch evaluation of confidence predictors.

At step n the predictor sees object x_n, outputs one prediction set per
significance level, and then Reality reveals y_n. The ledger records, for
every level, whether the set missed y_n (err), held several labels (mult) or
was empty (emp). Teacher schedules control which labels the predictor is
allowed to learn from, and when.

Predictors need ``learn(x, label)`` and ``predict(x, eps_list, index)``; if
they also have ``p_values(x, index)`` the p-value of the true label is
recorded too.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .conformal import prediction_set
from .core import Dataset, Example, check_epsilons


# teacher schedules --------------------------------------------------------------


@dataclass(frozen=True)
class Immediate:
    """Label n is revealed right after the prediction at step n."""

    training_prefix = 0

    def reveals(self, n: int) -> tuple[int, ...]:
        return (n,)


@dataclass(frozen=True)
class Lazy:
    """Only every ``period``-th label is revealed, immediately."""

    period: int
    training_prefix = 0

    def __post_init__(self):
        if int(self.period) != self.period or self.period < 1:
            raise ValueError(f"lazy period must be an integer >= 1, got {self.period}")

    def reveals(self, n: int) -> tuple[int, ...]:
        return (n,) if n % self.period == 0 else ()


@dataclass(frozen=True)
class Slow:
    """Label n is revealed after the prediction at step n + delay."""

    delay: int
    training_prefix = 0

    def __post_init__(self):
        if int(self.delay) != self.delay or self.delay < 0:
            raise ValueError(f"slow delay must be an integer >= 0, got {self.delay}")

    def reveals(self, n: int) -> tuple[int, ...]:
        return (n - self.delay,) if n > self.delay else ()


@dataclass(frozen=True)
class Explicit:
    """Feedback at the end of steps n_1 < n_2 < ...

    ``reveal[k]`` names the (1-based) example whose label arrives at step
    ``steps[k]``; by default it is the example of that step.
    """

    steps: tuple
    reveal: tuple | None = None
    training_prefix = 0
    _plan: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if any(b <= a for a, b in zip(steps, steps[1:])) or (steps and steps[0] < 1):
            raise ValueError("feedback steps must be positive and strictly increasing")
        reveal = steps if self.reveal is None else tuple(int(r) for r in self.reveal)
        if len(reveal) != len(steps):
            raise ValueError("need one revealed example per feedback step")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "reveal", reveal)
        object.__setattr__(self, "_plan", dict(zip(steps, reveal)))

    def reveals(self, n: int) -> tuple[int, ...]:
        r = self._plan.get(n)
        return () if r is None else (r,)


@dataclass(frozen=True)
class Batch:
    """The first ``l`` examples form the training set; no feedback afterwards."""

    l: int

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 0:
            raise ValueError(f"batch training size must be >= 0, got {self.l}")

    @property
    def training_prefix(self) -> int:
        return self.l

    def reveals(self, n: int) -> tuple[int, ...]:
        return ()


TeacherSchedule = Union[Immediate, Lazy, Slow, Explicit, Batch]


def parse_teacher(text: str) -> TeacherSchedule:
    """``immediate``, ``lazy:Q``, ``slow:D``, ``batch:L`` or ``explicit:N1,N2,...``."""
    name, _, arg = text.strip().lower().partition(":")
    try:
        if name == "immediate" and not arg:
            return Immediate()
        if name == "lazy":
            return Lazy(int(arg))
        if name == "slow":
            return Slow(int(arg))
        if name == "batch":
            return Batch(int(arg))
        if name == "explicit":
            return Explicit(tuple(int(s) for s in arg.split(",") if s))
    except ValueError as exc:
        raise ValueError(f"bad teacher spec {text!r}: {exc}") from None
    raise ValueError(f"bad teacher spec {text!r}")


# ledger -------------------------------------------------------------------------


@dataclass(frozen=True)
class ProtocolLedger:
    """Per-step indicators for every significance level.

    ``err``, ``mult`` and ``emp`` have shape ``(len(eps), n_steps)``;
    ``true_p`` holds the p-value of the true label at each step (NaN when the
    predictor does not expose p-values).
    """

    eps: tuple
    err: np.ndarray
    mult: np.ndarray
    emp: np.ndarray
    true_p: np.ndarray

    @property
    def n(self) -> int:
        return self.err.shape[1]

    @property
    def Err(self) -> np.ndarray:
        return np.cumsum(self.err, axis=1)

    @property
    def Mult(self) -> np.ndarray:
        return np.cumsum(self.mult, axis=1)

    @property
    def Emp(self) -> np.ndarray:
        return np.cumsum(self.emp, axis=1)

    def level(self, eps: float) -> int:
        try:
            return self.eps.index(float(eps))
        except ValueError:
            raise KeyError(f"level {eps} not in ledger {self.eps}") from None

    def series(self) -> dict[str, np.ndarray]:
        """Cumulative counters as named columns: n, then Err/Mult/Emp per level."""
        out = {"n": np.arange(1, self.n + 1)}
        for j, e in enumerate(self.eps):
            out[f"Err_{e:g}"] = self.Err[j]
            out[f"Mult_{e:g}"] = self.Mult[j]
            out[f"Emp_{e:g}"] = self.Emp[j]
        return out


class _Recorder:
    def __init__(self, eps: tuple):
        self.eps = eps
        self.err, self.mult, self.emp, self.true_p = [], [], [], []

    def step(self, predictor, x, y, index: int) -> None:
        p_true = np.nan
        if hasattr(predictor, "p_values"):
            table = predictor.p_values(x, index)
            sets = [prediction_set(table, e) for e in self.eps]
            p_true = table[y]
        else:
            sets = predictor.predict(x, self.eps, index)
        sizes = [s.cardinality() for s in sets]
        self.err.append([y not in s for s in sets])
        self.mult.append([c > 1 for c in sizes])
        self.emp.append([c == 0 for c in sizes])
        self.true_p.append(p_true)

    def ledger(self) -> ProtocolLedger:
        k = len(self.eps)

        def arr(rows):
            return np.array(rows, dtype=bool).reshape(-1, k).T.copy()

        return ProtocolLedger(
            self.eps, arr(self.err), arr(self.mult), arr(self.emp),
            np.array(self.true_p, dtype=np.float64),
        )


def _examples(stream) -> list[Example]:
    return list(stream)


def run_online(
    stream: Dataset | Iterable[Example],
    predictor,
    eps_list: Sequence[float],
    schedule: TeacherSchedule = Immediate(),
) -> ProtocolLedger:
    """Run the on-line protocol over ``stream``.

    ``index`` passed to the predictor is the 0-based stream position, which
    keys the smoothing substream.
    """
    eps = check_epsilons(eps_list)
    examples = _examples(stream)
    prefix = schedule.training_prefix
    if prefix > len(examples):
        raise ValueError(f"batch training size {prefix} exceeds stream length {len(examples)}")
    for ex in examples[:prefix]:
        predictor.learn(ex.object, ex.label)
    rec = _Recorder(eps)
    revealed = set(range(1, prefix + 1))
    for idx in range(prefix, len(examples)):
        n = idx + 1
        ex = examples[idx]
        rec.step(predictor, ex.object, ex.label, idx)
        for r in schedule.reveals(n):
            if not 1 <= r <= n:
                raise ValueError(
                    f"schedule reveals the label of example {r} at step {n}, before it was seen"
                )
            if r in revealed:
                continue
            revealed.add(r)
            predictor.learn(examples[r - 1].object, examples[r - 1].label)
    return rec.ledger()


def run_batch(
    training: Dataset | Iterable[Example],
    test: Dataset | Iterable[Example],
    predictor,
    eps_list: Sequence[float],
) -> ProtocolLedger:
    """Train on ``training`` once and predict every test example without feedback."""
    eps = check_epsilons(eps_list)
    train = _examples(training)
    for ex in train:
        predictor.learn(ex.object, ex.label)
    rec = _Recorder(eps)
    for j, ex in enumerate(_examples(test)):
        rec.step(predictor, ex.object, ex.label, len(train) + j)
    return rec.ledger()


# reporting ------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationReport:
    eps: float
    n: int
    error_rate: float
    multiple_rate: float
    empty_rate: float
    error_slope: float
    multiple_slope: float
    empty_slope: float
    series: dict


def _slope(counts: np.ndarray) -> float:
    if counts.size < 2:
        return float(counts[-1]) if counts.size else 0.0
    steps = np.arange(1, counts.size + 1)
    return float(np.polyfit(steps, counts, 1)[0])


def calibration_report(ledger: ProtocolLedger, eps: float) -> CalibrationReport:
    """Final rates and fitted slopes of the cumulative counts at one level."""
    if ledger.n == 0:
        raise ValueError("empty ledger")
    j = ledger.level(eps)
    Err, Mult, Emp = ledger.Err[j], ledger.Mult[j], ledger.Emp[j]
    n = ledger.n
    return CalibrationReport(
        eps=float(eps),
        n=n,
        error_rate=Err[-1] / n,
        multiple_rate=Mult[-1] / n,
        empty_rate=Emp[-1] / n,
        error_slope=_slope(Err),
        multiple_slope=_slope(Mult),
        empty_slope=_slope(Emp),
        series={"n": np.arange(1, n + 1), "Err": Err, "Mult": Mult, "Emp": Emp},
    )


def lag1_autocorrelation(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    x = x - x.mean()
    denom = float(x @ x)
    if denom == 0.0:
        return 0.0
    return float(x[1:] @ x[:-1]) / denom
