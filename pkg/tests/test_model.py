import json

import pytest
from hypothesis import given, settings, strategies as st

from wshsa.model import (Instance, InstanceError, canonical, is_monotone, load_instance,
                         monotone_close)

from oracles import brute_closure
from strategies import instances

A, B = (1, 1), (2, 1)


def doc(**kw):
    base = {"clusters": [1, 1], "security_sets": [[]], "collusion_sets": [[]]}
    base.update(kw)
    return json.dumps(base)


def test_example1_document_sizes(ex1):
    assert (ex1.M, ex1.N, ex1.K, ex1.U) == (6, 8, 6, 3)


def test_example1_indices_follow_canonical_order(ex1):
    assert ex1.security_sets[5] == {(1, 1), (2, 1)}
    assert ex1.collusion_sets[7] == {(1, 2), (2, 2), (3, 1)}


def test_empty_families_load():
    inst = load_instance(doc())
    assert inst.M == inst.N == 1


def test_closure_on_load():
    inst = load_instance(doc(security_sets=[[[1, 1], [2, 1]]]))
    assert inst.M == 4
    assert list(inst.security_sets) == [frozenset(), {A}, {B}, {A, B}]


def test_closure_examples():
    assert monotone_close([{A, B}]) == [frozenset(), {A}, {B}, {A, B}]
    assert monotone_close([frozenset()]) == [frozenset()]


def test_example1_families_already_closed(ex1):
    assert set(ex1.collusion_sets) == brute_closure(ex1.collusion_sets)
    assert is_monotone(ex1.security_sets)


def test_is_monotone_small_cases():
    assert not is_monotone([{A, B}])
    assert is_monotone([frozenset()])


@pytest.mark.parametrize("bad", [
    "not json",
    json.dumps([1, 2]),
    json.dumps({"security_sets": [[]]}),
    doc(clusters=[1]),
    doc(clusters=[1, 0]),
    doc(security_sets=[[[3, 1]]]),
    doc(collusion_sets=[[[1, 2]]]),
    doc(security_sets=[[[1]]]),
])
def test_invalid_documents_rejected(bad):
    with pytest.raises(InstanceError):
        load_instance(bad)


def test_no_closure_rejects_non_monotone_and_duplicates():
    with pytest.raises(InstanceError):
        load_instance(doc(security_sets=[[[1, 1]]], auto_close=False))
    with pytest.raises(InstanceError):
        load_instance(doc(security_sets=[[], []], auto_close=False))
    inst = load_instance(doc(security_sets=[[[1, 1]], []], auto_close=False))
    assert inst.M == 2


def test_duplicates_are_silently_merged_when_closing():
    inst = load_instance(doc(security_sets=[[[1, 1]], [[1, 1]]]))
    assert inst.M == 2


@given(st.lists(st.lists(st.sampled_from([A, B, (1, 2), (2, 2)]), max_size=4), max_size=4))
def test_closure_idempotent_and_contains_input(fam):
    closed = monotone_close(fam)
    assert monotone_close(closed) == closed
    assert len(closed) >= len(canonical(fam))
    assert all(frozenset(s) in set(closed) for s in fam)
    assert set(closed) == brute_closure(frozenset(s) for s in fam)


@settings(max_examples=50)
@given(instances())
def test_serialization_round_trip(inst):
    again = load_instance(inst.dumps())
    assert again == inst
    assert again.dumps() == inst.dumps()
