import json
import math

import pytest

from annocamp.cli import sample_taxonomy_path
from annocamp.taxonomy import (
    TaxonomyError,
    expand_answer,
    load_taxonomy,
    partition_questions,
    singleton_taxonomy,
    taxonomy_from_mapping,
)


@pytest.fixture(scope="module")
def sample_tax():
    return load_taxonomy(sample_taxonomy_path())


def write_tax(tmp_path, doc):
    path = tmp_path / "tax.json"
    path.write_text(json.dumps(doc))
    return path


def test_sample_taxonomy_shape(sample_tax):
    assert sample_tax.label_count == 157
    assert sample_tax.question_count == 52
    groups = [q for q in sample_tax.questions if not q.is_singleton]
    singles = [q for q in sample_tax.questions if q.is_singleton]
    assert len(groups) == 33
    assert len(singles) == 19


def test_minimal_taxonomy(tmp_path):
    doc = {
        "labels": [{"id": 0, "name": "solo"}],
        "questions": [{"id": 0, "prompt": "solo?", "members": [0]}],
    }
    tax = load_taxonomy(write_tax(tmp_path, doc))
    assert tax.label_count == 1
    assert tax.question_count == 1


def test_label_in_two_groups_is_rejected(tmp_path):
    doc = {
        "labels": [{"id": i, "name": f"l{i}"} for i in range(10)],
        "questions": [
            {"id": 0, "prompt": "a", "members": [0, 1, 2, 7]},
            {"id": 1, "prompt": "b", "members": [3, 4, 7]},
            {"id": 2, "prompt": "c", "members": [5, 6, 8, 9]},
        ],
    }
    with pytest.raises(TaxonomyError, match="label 7"):
        load_taxonomy(write_tax(tmp_path, doc))


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d["labels"].append({"id": 2, "name": "dup"}), "duplicate label"),
        (lambda d: d["questions"][0].update(members=[]), "no members"),
        (lambda d: d["questions"][0].update(members=[0, 99]), "unknown label"),
        (lambda d: d["labels"][0].update(name=""), "empty name"),
        (lambda d: d["labels"][1].update(id=5), "dense"),
    ],
)
def test_validation_errors(mutate, message):
    doc = {
        "labels": [{"id": 0, "name": "a"}, {"id": 1, "name": "b"}, {"id": 2, "name": "c"}],
        "questions": [
            {"id": 0, "prompt": "p", "members": [0, 1]},
            {"id": 1, "prompt": "q", "members": [2]},
        ],
    }
    mutate(doc)
    with pytest.raises(TaxonomyError, match=message):
        taxonomy_from_mapping(doc)


def test_uncovered_label_is_rejected():
    doc = {
        "labels": [{"id": 0, "name": "a"}, {"id": 1, "name": "b"}],
        "questions": [{"id": 0, "prompt": "p", "members": [0]}],
    }
    with pytest.raises(TaxonomyError, match="not covered"):
        taxonomy_from_mapping(doc)


def test_parse_error_names_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(TaxonomyError, match="broken.json"):
        load_taxonomy(path)


def test_partition_whole_set(sample_tax):
    plan = partition_questions(sample_tax, 52, seed=1)
    assert len(plan.subsets) == 1
    assert len(plan.subsets[0]) == 52


def test_partition_exact_halves(sample_tax):
    plan = partition_questions(sample_tax, 26, seed=1)
    assert [len(s) for s in plan.subsets] == [26, 26]


def test_partition_with_remainder(sample_tax):
    # ceil(52/5) = 11 subsets; all size 5 except a final 52 mod 5 = 2.
    plan = partition_questions(sample_tax, 5, seed=3)
    expected_count = math.ceil(52 / 5)
    assert len(plan.subsets) == expected_count
    assert [len(s) for s in plan.subsets] == [5] * 10 + [2]


@pytest.mark.parametrize("k", [1, 3, 7, 13, 26, 52])
def test_partition_is_exact_partition(sample_tax, k):
    for seed in (0, 1, 99):
        plan = partition_questions(sample_tax, k, seed)
        flat = [qid for subset in plan.subsets for qid in subset]
        assert sorted(flat) == [q.id for q in sample_tax.questions]


def test_partition_determinism(sample_tax):
    a = partition_questions(sample_tax, 7, seed=42)
    b = partition_questions(sample_tax, 7, seed=42)
    c = partition_questions(sample_tax, 7, seed=43)
    assert a.subsets == b.subsets
    assert a.subsets != c.subsets


def test_partition_k_out_of_range(sample_tax):
    with pytest.raises(ValueError):
        partition_questions(sample_tax, 0, seed=1)
    with pytest.raises(ValueError):
        partition_questions(sample_tax, 53, seed=1)


def test_expand_negative_gate(sample_tax):
    assert expand_answer(sample_tax, 0, False, set()) == frozenset()


def test_expand_group_selection(sample_tax):
    group = next(q for q in sample_tax.questions if len(q.members) >= 3)
    picked = set(group.members[:2])
    assert expand_answer(sample_tax, group.id, True, picked) == frozenset(picked)


def test_expand_singleton(sample_tax):
    single = next(q for q in sample_tax.questions if q.is_singleton)
    only = single.members[0]
    assert expand_answer(sample_tax, single.id, True, {only}) == frozenset({only})


def test_expand_rejects_foreign_member(sample_tax):
    group = sample_tax.questions[0]
    outsider = sample_tax.questions[1].members[0]
    with pytest.raises(ValueError, match="not members"):
        expand_answer(sample_tax, group.id, True, {outsider})


def test_expand_rejects_members_on_negative_gate(sample_tax):
    group = sample_tax.questions[0]
    with pytest.raises(ValueError, match="negative gate"):
        expand_answer(sample_tax, group.id, False, {group.members[0]})


def test_expand_full_coverage(sample_tax):
    covered = set()
    for q in sample_tax.questions:
        covered |= expand_answer(sample_tax, q.id, True, set(q.members))
    assert covered == {lab.id for lab in sample_tax.labels}


def test_singleton_taxonomy_helper():
    tax = singleton_taxonomy(10)
    assert tax.label_count == 10
    assert all(q.is_singleton for q in tax.questions)
    assert all(q.members == (q.id,) for q in tax.questions)
