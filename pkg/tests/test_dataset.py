import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frugal.dataset import (
    UNKNOWN,
    Dataset,
    LabelCounter,
    budget_size,
    load_csv,
    make_split_plan,
    reveal_labels,
    stratified_split,
    write_csv,
)
from frugal.errors import ContractError, InfeasibleSplitError, ParseError, SchemaError


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_csv_labels_with_unknown(tmp_path):
    p = _write(tmp_path, "f1,f2,label\n1,2,0\n3,4,1\n5,6,\n")
    d = load_csv(p, "label")
    assert d.feature_names == ("f1", "f2")
    assert d.X.tolist() == [[1, 2], [3, 4], [5, 6]]
    assert d.labels.tolist() == [0, 1, UNKNOWN]


def test_load_csv_bad_cell_names_location(tmp_path):
    p = _write(tmp_path, "f1,f2\nabc,2\n")
    with pytest.raises(ParseError) as err:
        load_csv(p)
    assert err.value.row == 2 and err.value.column == "f1"
    assert "row 2" in str(err.value) and "column f1" in str(err.value)


@pytest.mark.parametrize("literal", ["NaN", "nan", "inf", "-Infinity"])
def test_load_csv_rejects_non_finite(tmp_path, literal):
    p = _write(tmp_path, f"f1\n1\n{literal}\n")
    with pytest.raises(ParseError):
        load_csv(p)


def test_load_csv_schema_errors(tmp_path):
    with pytest.raises(SchemaError):
        load_csv(_write(tmp_path, "a,a\n1,2\n"))
    with pytest.raises(SchemaError):
        load_csv(_write(tmp_path, "a,b\n1,2\n3\n", "r.csv"))
    with pytest.raises(ParseError):
        load_csv(_write(tmp_path, "a,label\n1,2\n", "l.csv"), "label")


def test_dataset_invariants():
    with pytest.raises(SchemaError):
        Dataset(("a", "a"), np.zeros((1, 2)))
    with pytest.raises(ContractError):
        Dataset(("a",), np.array([[np.nan]]))
    with pytest.raises(ContractError):
        Dataset(("a",), np.zeros((1, 1)), [2])
    d = Dataset.from_arrays([[1.0]], [1])
    with pytest.raises(ValueError):
        d.X[0, 0] = 5.0


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.floats(allow_nan=False, allow_infinity=False, width=64),
            st.floats(allow_nan=False, allow_infinity=False, width=64),
            st.sampled_from([0, 1, UNKNOWN]),
        ),
        min_size=1,
        max_size=20,
    )
)
def test_csv_round_trip(tmp_path_factory, rows):
    d = Dataset.from_arrays([r[:2] for r in rows], [r[2] for r in rows], ["x", "y"])
    p = tmp_path_factory.mktemp("rt") / "d.csv"
    write_csv(d, p)
    back = load_csv(p, "label")
    assert back.feature_names == d.feature_names
    assert np.array_equal(back.X, d.X)
    assert np.array_equal(back.labels, d.labels)


def _counting_oracle(bins_, labels):
    return [int(np.sum(labels[b])) for b in bins_]


def test_stratified_split_exact_divisibility():
    y = np.array([1] * 20 + [0] * 80)
    d = Dataset.from_arrays(np.arange(100.0), y)
    bins_ = stratified_split(d, 5, seed=7)
    assert [len(b) for b in bins_] == [20] * 5
    assert _counting_oracle(bins_, y) == [4] * 5


def test_stratified_split_single_bin():
    d = Dataset.from_arrays(np.arange(10.0), [1] * 5 + [0] * 5)
    (only,) = stratified_split(d, 1, seed=0)
    assert only.tolist() == list(range(10))


def test_stratified_split_off_by_one():
    y = np.array([1] * 7 + [0] * 14)
    d = Dataset.from_arrays(np.arange(21.0), y)
    bins_ = stratified_split(d, 3, seed=3)
    assert [len(b) for b in bins_] == [7, 7, 7]
    assert all(c in (2, 3) for c in _counting_oracle(bins_, y))


def test_stratified_split_errors():
    d = Dataset.from_arrays(np.arange(5.0), [1, 1, 0, 0, UNKNOWN])
    with pytest.raises(ContractError):
        stratified_split(d, 2, 0)
    d = Dataset.from_arrays(np.arange(5.0), [1, 0, 0, 0, 0])
    with pytest.raises(InfeasibleSplitError):
        stratified_split(d, 2, 0)


@settings(max_examples=60, deadline=None)
@given(
    n_pos=st.integers(1, 40),
    n_neg=st.integers(1, 40),
    bins=st.integers(1, 6),
    seed=st.integers(0, 2**31),
)
def test_stratified_split_is_balanced_partition(n_pos, n_neg, bins, seed):
    if bins > 1 and bins > min(n_pos, n_neg):
        return
    y = np.array([1] * n_pos + [0] * n_neg)
    d = Dataset.from_arrays(np.zeros(len(y)), y)
    bins_ = stratified_split(d, bins, seed)
    flat = np.concatenate(bins_)
    assert sorted(flat.tolist()) == list(range(len(y)))
    for b in bins_:
        share = n_pos * len(b) / len(y)
        assert abs(y[b].sum() - share) <= 1
    again = stratified_split(d, bins, seed)
    assert all(np.array_equal(a, b) for a, b in zip(bins_, again))


def test_budget_size_is_ceiling():
    assert budget_size(0.025, 1000) == 25
    assert budget_size(0.025, 1440) == 36
    assert budget_size(0.01, 50) == 1
    assert budget_size(1.0, 7) == 7
    with pytest.raises(ContractError):
        budget_size(0.0, 10)


def _plan(n_train=5000, budget=0.025, seed=0, **kw):
    rng = np.random.default_rng(seed)
    train = Dataset.from_arrays(rng.random((n_train, 3)), (rng.random(n_train) < 0.2).astype(int))
    test = Dataset.from_arrays(rng.random((500, 3)), (rng.random(500) < 0.2).astype(int))
    return train, make_split_plan(train, test, budget, seed, **kw)


def test_reveal_labels_counts_exactly_the_slice():
    train, plan = _plan()
    counter = LabelCounter()
    assert len(plan.train_samples[0]) == 1000
    validation, tuning = reveal_labels(train, plan, 0, counter)
    assert validation.n_rows == 25 and tuning.n_rows == 975
    assert tuning.labels is None
    assert counter.reads == 25
    assert set(np.unique(validation.labels)) == {0, 1}


def test_reveal_labels_full_budget():
    train, plan = _plan(n_train=50, budget=1.0)
    validation, tuning = reveal_labels(train, plan, 2, LabelCounter())
    assert validation.n_rows == 10 and tuning.n_rows == 0


def test_reveal_labels_median_static_warning_split():
    # a 1440-row train sample at 2.5% reveals 36 labels
    train, plan = _plan(n_train=7200)
    counter = LabelCounter()
    validation, _ = reveal_labels(train, plan, 0, counter)
    assert len(plan.train_samples[0]) == 1440
    assert validation.n_rows == 36 == counter.reads


def test_split_plan_is_deterministic_and_nested():
    _, a = _plan(seed=5)
    _, b = _plan(seed=5)
    assert a.to_dict() == b.to_dict()
    for sample, val in zip(a.train_samples, a.validation_indices):
        assert np.isin(val, sample).all()
        assert len(val) == math.ceil(0.025 * len(sample))
    with pytest.raises(IndexError):
        reveal_labels(_plan()[0], a, 9)


def test_uniform_validation_flag():
    train, plan = _plan(stratified_validation=False)
    assert all(len(v) == 25 for v in plan.validation_indices)


def test_label_counter_thread_safe():
    import threading

    counter = LabelCounter()
    threads = [threading.Thread(target=lambda: [counter.record(1) for _ in range(1000)]) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert counter.reads == 8000
