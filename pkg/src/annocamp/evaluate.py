"""Aggregation of annotation events into label matrices plus all metrics.

Covers the union consensus rule (a label is positive once any iteration
marked it), closed-form expectations for repeated passes, micro-averaged
precision/recall, and temporal-extent agreement scoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .taxonomy import Taxonomy


class IncompleteIterationError(ValueError):
    """An iteration is missing answers for some (video, question) pairs."""

    def __init__(self, gaps):
        self.gaps = list(gaps)
        shown = ", ".join(
            f"video {v} iteration {i}: missing questions {sorted(qs)}"
            for v, i, qs in self.gaps[:20]
        )
        more = "" if len(self.gaps) <= 20 else f" (+{len(self.gaps) - 20} more)"
        super().__init__(f"incomplete iterations: {shown}{more}")


@dataclass(frozen=True)
class TemporalSegment:
    start: float
    end: float

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"need 0 <= start < end, got ({self.start}, {self.end})")

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass
class LabelMatrix:
    """Per-(video, label) positive-vote counts accumulated over iterations."""

    video_ids: tuple[str, ...]
    votes: np.ndarray
    iterations: int

    def __post_init__(self):
        if self.votes.max(initial=0) > self.iterations:
            raise ValueError("vote counts cannot exceed the number of iterations")

    def binary(self, threshold: int = 1) -> np.ndarray:
        """Thresholded labels: positive iff at least `threshold` votes."""
        if threshold < 1:
            raise ValueError("threshold must be >= 1")
        return self.votes >= threshold

    def video_index(self, video_id: str) -> int:
        return self.video_ids.index(video_id)


@dataclass(frozen=True)
class Metrics:
    recall: float | None
    precision: float | None
    minutes_per_video: float | None = None
    affirmative_per_iteration: float | None = None


def aggregate(events, taxonomy: Taxonomy, video_ids=None) -> LabelMatrix:
    """Fold annotation events into a LabelMatrix of per-iteration votes.

    Every (video, iteration) present in the stream must cover all top-level
    questions, otherwise IncompleteIterationError lists the gaps. Gold
    duplicate events never contribute.
    """
    question_bit = {q.id: 1 << idx for idx, q in enumerate(taxonomy.questions)}
    full_mask = (1 << taxonomy.question_count) - 1
    coverage: dict[tuple[str, int], int] = {}
    positives: dict[tuple[str, int], int] = {}
    seen_videos: dict[str, None] = {}

    for event in events:
        if event.gold:
            continue
        bit = question_bit.get(event.question)
        if bit is None:
            raise ValueError(f"event references unknown question {event.question}")
        key = (event.video, event.iteration)
        coverage[key] = coverage.get(key, 0) | bit
        if event.gate:
            label_bits = positives.get(key, 0)
            for label in event.members:
                label_bits |= 1 << label
            positives[key] = label_bits
        seen_videos.setdefault(event.video, None)

    if not coverage:
        raise ValueError("no events to aggregate")

    gaps = []
    for (video, iteration), mask in sorted(coverage.items()):
        if mask != full_mask:
            missing = [
                q.id for q in taxonomy.questions if not mask & question_bit[q.id]
            ]
            gaps.append((video, iteration, missing))
    if gaps:
        raise IncompleteIterationError(gaps)

    if video_ids is None:
        video_ids = tuple(sorted(seen_videos))
    else:
        video_ids = tuple(video_ids)
    video_index = {v: i for i, v in enumerate(video_ids)}
    iterations = len({i for _, i in coverage})

    votes = np.zeros((len(video_ids), taxonomy.label_count), dtype=np.int16)
    for (video, _), label_bits in positives.items():
        row = votes[video_index[video]]
        label = 0
        while label_bits:
            if label_bits & 1:
                row[label] += 1
            label_bits >>= 1
            label += 1
    return LabelMatrix(video_ids=video_ids, votes=votes, iterations=iterations)


def expected_recall(r: float, t_minutes: float, budget_minutes: float) -> float:
    """Expected union recall when a budget buys budget/t annotation passes."""
    if not 0.0 <= r <= 1.0:
        raise ValueError("r must lie in [0, 1]")
    if t_minutes <= 0:
        raise ValueError("per-iteration time must be positive")
    if budget_minutes < 0:
        raise ValueError("budget must be non-negative")
    return 1.0 - (1.0 - r) ** (budget_minutes / t_minutes)


def analytic_union(
    r: float, f: float, g: float, qtop: int, n: int
) -> tuple[float, float]:
    """Closed-form (recall, precision) after n independent union-merged passes."""
    if n < 1:
        raise ValueError("n must be >= 1")
    recall = 1.0 - (1.0 - r) ** n
    tp = g * recall
    fp = (qtop - g) * (1.0 - (1.0 - f) ** n)
    precision = tp / (tp + fp) if tp + fp > 0 else 1.0
    return recall, precision


def truth_matrix(truths, label_count: int, video_ids=None) -> np.ndarray:
    """Ground-truth boolean matrix aligned with the given video-id order."""
    truths = list(truths)
    if video_ids is None:
        video_ids = tuple(sorted(t.video_id for t in truths))
    by_id = {t.video_id: t for t in truths}
    out = np.zeros((len(video_ids), label_count), dtype=bool)
    for row, video_id in enumerate(video_ids):
        for label in by_id[video_id].labels:
            out[row, label] = True
    return out


def metrics(binary: np.ndarray, truth: np.ndarray) -> Metrics:
    """Micro-averaged recall and precision over all (video, label) pairs."""
    if binary.shape != truth.shape:
        raise ValueError(f"shape mismatch: {binary.shape} vs {truth.shape}")
    tp = int(np.logical_and(binary, truth).sum())
    fn = int(np.logical_and(~binary, truth).sum())
    fp = int(np.logical_and(binary, ~truth).sum())
    recall = tp / (tp + fn) if tp + fn > 0 else None
    precision = tp / (tp + fp) if tp + fp > 0 else None
    return Metrics(recall=recall, precision=precision)


def event_stats(events) -> tuple[float, float]:
    """(total worker minutes per video, affirmative answers per iteration).

    Gold duplicates are excluded from both figures.
    """
    seconds = 0.0
    affirmative = 0
    passes: set[tuple[str, int]] = set()
    videos: set[str] = set()
    for event in events:
        if event.gold:
            continue
        seconds += event.elapsed
        if event.gate:
            affirmative += 1
        passes.add((event.video, event.iteration))
        videos.add(event.video)
    if not videos:
        raise ValueError("no events")
    minutes_per_video = seconds / 60.0 / len(videos)
    affirmative_per_iteration = affirmative / len(passes)
    return minutes_per_video, affirmative_per_iteration


def _as_segment(value) -> TemporalSegment:
    if isinstance(value, TemporalSegment):
        return value
    start, end = value
    return TemporalSegment(float(start), float(end))


def temporal_iou(s1, s2) -> float:
    """Intersection-over-union of two time intervals."""
    a, b = _as_segment(s1), _as_segment(s2)
    inter = max(0.0, min(a.end, b.end) - max(a.start, b.start))
    union = (a.length + b.length) - inter
    return inter / union if union > 0 else 0.0


def _match_greedy(segs_a, segs_b, iou_threshold: float) -> int:
    pairs = []
    for i, sa in enumerate(segs_a):
        for j, sb in enumerate(segs_b):
            iou = temporal_iou(sa, sb)
            if iou >= iou_threshold:
                pairs.append((iou, i, j))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    used_a: set[int] = set()
    used_b: set[int] = set()
    matched = 0
    for _, i, j in pairs:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        matched += 1
    return matched


def agreement_rate(set_a: dict, set_b: dict, iou_threshold: float = 0.1, normalize: str = "max") -> float:
    """Fraction of temporal segments two annotation sets agree on.

    Per (video, label) key, segments are matched one-to-one greedily by
    descending IoU; pairs at or above the threshold count as agreement. The
    per-key score divides by max(|A|, |B|) by default ("min" and "mean" are
    the alternative normalizations); scores are averaged over keys.
    """
    if set(set_a) != set(set_b):
        raise ValueError("segment sets must address the same (video, label) keys")
    if normalize not in ("max", "min", "mean"):
        raise ValueError(f"unknown normalization {normalize!r}")
    scores = []
    for key in sorted(set_a):
        segs_a = [_as_segment(s) for s in set_a[key]]
        segs_b = [_as_segment(s) for s in set_b[key]]
        if not segs_a and not segs_b:
            continue
        matched = _match_greedy(segs_a, segs_b, iou_threshold)
        if normalize == "max":
            denom = max(len(segs_a), len(segs_b))
        elif normalize == "min":
            denom = max(1, min(len(segs_a), len(segs_b)))
        else:
            denom = (len(segs_a) + len(segs_b)) / 2.0
        scores.append(matched / denom)
    if not scores:
        raise ValueError("no non-empty keys to score")
    return float(np.mean(scores))


def segments_by_key(truths) -> dict:
    """Flatten per-video temporal annotations into a (video, label) -> segments map."""
    out = {}
    for truth in truths:
        for label, spans in truth.segments.items():
            out[(truth.video_id, label)] = [_as_segment(s) for s in spans]
    return out


def recall_vs_duration(recalls, durations) -> float:
    """Pearson correlation between per-label recall and median extent length."""
    r = np.asarray(recalls, dtype=float)
    d = np.asarray(durations, dtype=float)
    if r.shape != d.shape or r.size < 3:
        raise ValueError("need >= 3 aligned (recall, duration) pairs")
    if not (np.isfinite(r).all() and np.isfinite(d).all()):
        raise ValueError("inputs must be finite")
    if r.std() == 0 or d.std() == 0:
        raise ValueError("zero-variance input: correlation undefined")
    return float(np.corrcoef(r, d)[0, 1])
