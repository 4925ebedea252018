"""Label space, question hierarchy, and question partitioning.

A taxonomy is a flat list of labels plus a two-level hierarchy: each
top-level question either gates a group of member labels ("is someone
interacting with a book?" -> opening / closing / holding ...) or asks
about a single label directly. Few-question interfaces are built by
partitioning the top-level questions into fixed-size subsets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .seeding import substream


class TaxonomyError(ValueError):
    """Malformed or inconsistent taxonomy document."""


@dataclass(frozen=True)
class Label:
    id: int
    name: str


@dataclass(frozen=True)
class QuestionGroup:
    """One top-level question and the labels it unlocks."""

    id: int
    prompt: str
    members: tuple[int, ...]

    @property
    def is_singleton(self) -> bool:
        return len(self.members) == 1


@dataclass(frozen=True)
class Taxonomy:
    labels: tuple[Label, ...]
    questions: tuple[QuestionGroup, ...]
    _question_index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_question_index", {q.id: q for q in self.questions}
        )

    @property
    def label_count(self) -> int:
        return len(self.labels)

    @property
    def question_count(self) -> int:
        return len(self.questions)

    def question(self, question_id: int) -> QuestionGroup:
        try:
            return self._question_index[question_id]
        except KeyError:
            raise TaxonomyError(f"unknown question id {question_id}") from None

    def question_of_label(self, label_id: int) -> QuestionGroup:
        for q in self.questions:
            if label_id in q.members:
                return q
        raise TaxonomyError(f"label {label_id} not covered by any question")


@dataclass(frozen=True)
class SubsetPlan:
    """An exact partition of the top-level question ids into k-sized subsets."""

    subsets: tuple[tuple[int, ...], ...]
    subset_size: int
    seed: int


def _validate(labels: list[Label], questions: list[QuestionGroup]) -> None:
    seen_label_ids = set()
    for lab in labels:
        if not lab.name:
            raise TaxonomyError(f"label {lab.id} has an empty name")
        if lab.id in seen_label_ids:
            raise TaxonomyError(f"duplicate label id {lab.id}")
        seen_label_ids.add(lab.id)
    if seen_label_ids != set(range(len(labels))):
        raise TaxonomyError("label ids must be dense (0..N-1)")

    seen_question_ids = set()
    owner: dict[int, int] = {}
    for q in questions:
        if q.id in seen_question_ids:
            raise TaxonomyError(f"duplicate question id {q.id}")
        seen_question_ids.add(q.id)
        if not q.members:
            raise TaxonomyError(f"question {q.id} has no members")
        for member in q.members:
            if member not in seen_label_ids:
                raise TaxonomyError(
                    f"question {q.id} references unknown label {member}"
                )
            if member in owner:
                raise TaxonomyError(
                    f"label {member} appears in questions {owner[member]} and {q.id}"
                )
            owner[member] = q.id
    uncovered = seen_label_ids - owner.keys()
    if uncovered:
        raise TaxonomyError(f"labels not covered by any question: {sorted(uncovered)}")


def taxonomy_from_mapping(doc: dict) -> Taxonomy:
    """Build and validate a Taxonomy from an already-parsed document."""
    try:
        labels = [Label(int(l["id"]), str(l["name"])) for l in doc["labels"]]
        questions = [
            QuestionGroup(
                int(q["id"]), str(q["prompt"]), tuple(int(m) for m in q["members"])
            )
            for q in doc["questions"]
        ]
    except (KeyError, TypeError) as exc:
        raise TaxonomyError(f"malformed taxonomy document: {exc}") from exc
    _validate(labels, questions)
    return Taxonomy(tuple(labels), tuple(questions))


def load_taxonomy(source: str | Path) -> Taxonomy:
    """Load and validate a taxonomy from a JSON file."""
    text = Path(source).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TaxonomyError(f"cannot parse {source}: {exc}") from exc
    return taxonomy_from_mapping(doc)


def singleton_taxonomy(n_questions: int) -> Taxonomy:
    """Synthetic taxonomy where every question asks about exactly one label.

    Useful for calibration experiments where question-level and label-level
    statistics must coincide.
    """
    labels = tuple(Label(i, f"activity {i}") for i in range(n_questions))
    questions = tuple(
        QuestionGroup(i, f"activity {i} occurs", (i,)) for i in range(n_questions)
    )
    return Taxonomy(labels, questions)


def partition_questions(tax: Taxonomy, k: int, seed: int) -> SubsetPlan:
    """Randomly partition the question ids into ceil(Q/k) subsets of size k.

    The assignment is a pure function of (taxonomy content, k, seed); the
    final subset may be smaller than k when Q mod k != 0.
    """
    qtop = tax.question_count
    if not 1 <= k <= qtop:
        raise ValueError(f"k must be in [1, {qtop}], got {k}")
    ids = [q.id for q in tax.questions]
    order = substream(seed, "partition", qtop, k).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    subsets = tuple(
        tuple(shuffled[i : i + k]) for i in range(0, len(shuffled), k)
    )
    return SubsetPlan(subsets=subsets, subset_size=k, seed=seed)


def expand_answer(
    tax: Taxonomy, question_id: int, gate: bool, selected_members
) -> frozenset[int]:
    """Positive label set implied by one answered question."""
    question = tax.question(question_id)
    selected = frozenset(selected_members)
    if not gate:
        if selected:
            raise ValueError(
                f"question {question_id}: members selected on a negative gate"
            )
        return frozenset()
    stray = selected - set(question.members)
    if stray:
        raise ValueError(
            f"question {question_id}: selected labels {sorted(stray)} are not members"
        )
    return selected
