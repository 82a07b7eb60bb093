import math

import numpy as np
import pytest

from confpred.core import (
    ClassAlphabet,
    DataError,
    Dataset,
    IntervalUnion,
    LabelSet,
    PValueTable,
    RealLine,
    check_epsilon,
    complete,
    concat,
    empty_dataset,
)

AB = ClassAlphabet(("A", "B"))


def toy(n=3):
    X = np.arange(n, dtype=float).reshape(-1, 1)
    return Dataset(X, ["A", "B", "A"][:n], AB, dim=1)


class TestAlphabet:
    def test_needs_two_labels(self):
        with pytest.raises(DataError):
            ClassAlphabet(("A",))

    def test_rejects_duplicates(self):
        with pytest.raises(DataError):
            ClassAlphabet(("A", "A", "B"))

    def test_code_follows_declared_order(self):
        alpha = ClassAlphabet(("z", "a", "m"))
        assert [alpha.code(s) for s in ("z", "a", "m")] == [0, 1, 2]


class TestDataset:
    def test_rejects_non_finite_features(self):
        with pytest.raises(DataError):
            Dataset([[np.nan]], ["A"], AB, dim=1)
        with pytest.raises(DataError):
            Dataset([[np.inf]], [1.0], RealLine(), dim=1)

    def test_rejects_unknown_label(self):
        with pytest.raises(DataError):
            Dataset([[0.0]], ["C"], AB, dim=1)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            Dataset([[0.0, 1.0]], ["A"], AB, dim=1)

    def test_immutable(self):
        d = toy()
        with pytest.raises(AttributeError):
            d.X = None
        with pytest.raises(ValueError):
            d.X[0, 0] = 5.0

    def test_duplicates_allowed(self):
        d = Dataset([[1.0], [1.0]], ["A", "A"], AB, dim=1)
        assert len(d) == 2

    def test_labels_round_trip(self):
        assert toy().labels == ["A", "B", "A"]

    def test_head_tail(self):
        d = toy()
        assert d.head(1).labels == ["A"]
        assert d.tail(1).labels == ["B", "A"]

    def test_concat(self):
        d = toy()
        assert concat(d.head(1), d.tail(1)) == d

    def test_empty(self):
        e = empty_dataset(2, RealLine())
        assert len(e) == 0 and e.dim == 2


class TestComplete:
    def test_from_empty(self):
        seq = complete(empty_dataset(1, AB), [3.0], "B")
        assert len(seq) == 1
        assert seq[0].label == "B"

    def test_appends_last_and_keeps_order(self):
        d = toy(2)
        seq = complete(d, [7.0], "A")
        assert len(seq) == 3
        assert seq.X[:2].tolist() == d.X.tolist()
        assert seq[2].object.tolist() == [7.0]
        assert seq[2].label == "A"

    def test_each_candidate_gives_distinct_sequence(self):
        digits = ClassAlphabet(tuple(str(i) for i in range(10)))
        d = Dataset([[0.0]], ["3"], digits, dim=1)
        seqs = [complete(d, [1.0], Y) for Y in digits]
        assert len({tuple(s.labels) for s in seqs}) == 10
        assert all(s.labels[:1] == ["3"] for s in seqs)

    def test_errors(self):
        with pytest.raises(DataError):
            complete(toy(), [1.0, 2.0], "A")
        with pytest.raises(DataError):
            complete(toy(), [1.0], "Z")


class TestPredictionSets:
    def test_interval_union_validation(self):
        with pytest.raises(ValueError):
            IntervalUnion(((0, 2), (1, 3)))
        with pytest.raises(ValueError):
            IntervalUnion(((2, 1),))

    def test_interval_membership_and_hull(self):
        u = IntervalUnion(((-math.inf, -1), (1, 2)))
        assert -5 in u and 1 in u and 2 in u
        assert 0 not in u
        assert u.hull() == (-math.inf, 2.0)
        assert u.cardinality() == math.inf

    def test_single_point(self):
        assert IntervalUnion(((1, 1),)).cardinality() == 1
        assert IntervalUnion(()).cardinality() == 0

    def test_label_set(self):
        s = LabelSet(("A",))
        assert "A" in s and "B" not in s
        assert LabelSet(("A", "B")).issuperset(s)

    def test_p_table_range(self):
        with pytest.raises(ValueError):
            PValueTable({"A": 1.5})


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, float("nan")])
def test_epsilon_open_interval(eps):
    with pytest.raises(ValueError):
        check_epsilon(eps)
