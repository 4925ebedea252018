"""Stochastic crowd-worker model calibrated to measured interface accuracy.

The model is anchored on per-interface-size measurements: with k questions
per task a worker finds a true activity with probability r(k) and falsely
marks an absent one with probability f(k). f(k) is derived from measured
precision through the identity

    precision = r*g / (r*g + f*(Qtop - g))

where g is the expected number of positive questions per video. Repeated
annotation passes miss less and less, but real passes are not independent:
some (video, label) pairs are intrinsically hard for everyone. A
two-component difficulty mixture (hard fraction h, hard-recall multiplier)
reconciles single-pass anchors with measured multi-pass recall.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .costmodel import DEFAULT_TIME_MODEL, TimeModel, scale_base_for_duration, task_time
from .seeding import substream, unit_fraction
from .taxonomy import QuestionGroup

ELAPSED_SIGMA = 0.25
FEW_QUESTION_MAX = 7

# Reference calibration bundled with the package: accuracy and per-iteration
# minutes measured for the 1-question and 52-question interfaces.
DEFAULT_QTOP = 52
DEFAULT_PREVALENCE = 3.7
DEFAULT_MULTI_PASS_RECALL = ((3, 0.767), (5, 0.853))


@dataclass(frozen=True)
class AccuracyAnchor:
    """Measured single-iteration accuracy for a k-question interface."""

    k: int
    recall: float
    precision: float
    iteration_minutes: float

    def __post_init__(self):
        if not (0.0 <= self.recall <= 1.0 and 0.0 <= self.precision <= 1.0):
            raise ValueError(f"anchor k={self.k}: recall/precision must lie in [0, 1]")
        if self.iteration_minutes <= 0:
            raise ValueError(f"anchor k={self.k}: iteration_minutes must be positive")


DEFAULT_ANCHORS = (
    AccuracyAnchor(k=1, recall=0.563, precision=0.810, iteration_minutes=8.61),
    AccuracyAnchor(k=52, recall=0.450, precision=0.864, iteration_minutes=1.10),
)


@dataclass(frozen=True)
class ModifierSet:
    positive_bias: bool = False
    grouping: bool = False
    summary_prompt: bool = False
    forced_response: bool = False

    @property
    def any(self) -> bool:
        return any(
            (self.positive_bias, self.grouping, self.summary_prompt, self.forced_response)
        )

    def label(self) -> str:
        names = [
            name
            for name, on in (
                ("bias", self.positive_bias),
                ("group", self.grouping),
                ("summary", self.summary_prompt),
                ("forced", self.forced_response),
            )
            if on
        ]
        return "+".join(names) if names else "none"


@dataclass(frozen=True)
class ModifierEffect:
    recall_ratio: float
    precision_ratio: float
    time_ratio: float
    extra_seconds: float = 0.0


# A/B-measured effects, keyed by (modifier, regime). Regimes: interfaces with
# at most FEW_QUESTION_MAX questions are "few", the rest "many". The summary
# prompt costs a flat 36 s per iteration instead of scaling the time.
MODIFIER_EFFECTS = {
    ("positive_bias", "few"): ModifierEffect(57.9 / 53.2, 81.3 / 79.0, 3.6 / 4.6),
    ("grouping", "few"): ModifierEffect(67.2 / 70.4, 81.4 / 77.7, 5.1 / 5.9),
    ("grouping", "many"): ModifierEffect(55.2 / 62.0, 79.0 / 80.2, 1.4 / 1.6),
    ("summary_prompt", "many"): ModifierEffect(53.2 / 54.2, 88.3 / 87.1, 1.0, 36.0),
    ("forced_response", "many"): ModifierEffect(55.7 / 63.3, 84.6 / 88.8, 2.2 / 1.6),
}


def regime(k: int) -> str:
    return "few" if k <= FEW_QUESTION_MAX else "many"


def fp_rate_from_precision(recall: float, precision: float, prevalence: float, qtop: int) -> float:
    """Per-negative-question false-positive rate implied by measured precision."""
    if precision <= 0.0:
        raise ValueError("precision must be positive to derive a false-positive rate")
    if not 0 < prevalence < qtop:
        raise ValueError(f"prevalence must lie in (0, {qtop})")
    f = recall * prevalence * (1.0 - precision) / (precision * (qtop - prevalence))
    return min(1.0, f)


def mixture_union_recall(r: float, n: int, hard_fraction: float, hard_multiplier: float) -> float:
    """Expected recall after n union-aggregated passes at single-pass recall r.

    A fraction `hard_fraction` of positive pairs is found at a reduced rate;
    the easy-pair rate is inflated so the single-pass marginal stays r.
    """
    h = hard_fraction
    m = hard_multiplier
    denom = (1.0 - h) + h * m
    r_easy = min(1.0, r / denom) if denom > 0 else 0.0
    easy_term = (1.0 - h) * (1.0 - (1.0 - r_easy) ** n)
    hard_term = h * (1.0 - (1.0 - m * r_easy) ** n)
    return easy_term + hard_term


@lru_cache(maxsize=4096)
def _interp(points: tuple[tuple[int, float], ...], k: int) -> float:
    ks = [p[0] for p in points]
    vs = [p[1] for p in points]
    return float(np.interp(k, ks, vs))


@dataclass(frozen=True)
class WorkerBehavior:
    """Piecewise-linear accuracy curves plus the difficulty mixture."""

    recall_points: tuple[tuple[int, float], ...]
    fp_points: tuple[tuple[int, float], ...]
    prevalence: float = DEFAULT_PREVALENCE
    qtop: int = DEFAULT_QTOP
    speed_multiplier: float = 1.0
    hard_fraction: float = 0.0
    hard_recall_multiplier: float = 0.0
    observed_minutes: tuple[tuple[int, float], ...] = ()

    def recall(self, k: int) -> float:
        return _interp(self.recall_points, k)

    def fp_rate(self, k: int) -> float:
        return _interp(self.fp_points, k)

    def precision(self, k: int) -> float:
        r, f, g = self.recall(k), self.fp_rate(k), self.prevalence
        tp = r * g
        fp = f * (self.qtop - g)
        return tp / (tp + fp) if tp + fp > 0 else 1.0

    def observed_iteration_minutes(self, k: int) -> float | None:
        for anchor_k, minutes in self.observed_minutes:
            if anchor_k == k:
                return minutes
        return None

    @property
    def correlated(self) -> bool:
        return self.hard_fraction > 0.0

    def easy_recall(self, r: float) -> float:
        """Inflate r so the hard/easy mixture has marginal single-pass recall r."""
        denom = (1.0 - self.hard_fraction) + self.hard_fraction * self.hard_recall_multiplier
        return min(1.0, r / denom) if denom > 0 else 0.0

    def union_recall(self, k: int, n: int, recall_override: float | None = None) -> float:
        r = self.recall(k) if recall_override is None else recall_override
        return mixture_union_recall(r, n, self.hard_fraction, self.hard_recall_multiplier)


def behavior_to_dict(behavior: WorkerBehavior) -> dict:
    return {
        "recall_points": [list(p) for p in behavior.recall_points],
        "fp_points": [list(p) for p in behavior.fp_points],
        "prevalence": behavior.prevalence,
        "qtop": behavior.qtop,
        "speed_multiplier": behavior.speed_multiplier,
        "hard_fraction": behavior.hard_fraction,
        "hard_recall_multiplier": behavior.hard_recall_multiplier,
        "observed_minutes": [list(p) for p in behavior.observed_minutes],
    }


def behavior_from_dict(doc: dict) -> WorkerBehavior:
    return WorkerBehavior(
        recall_points=tuple((int(k), float(v)) for k, v in doc["recall_points"]),
        fp_points=tuple((int(k), float(v)) for k, v in doc["fp_points"]),
        prevalence=float(doc.get("prevalence", DEFAULT_PREVALENCE)),
        qtop=int(doc.get("qtop", DEFAULT_QTOP)),
        speed_multiplier=float(doc.get("speed_multiplier", 1.0)),
        hard_fraction=float(doc.get("hard_fraction", 0.0)),
        hard_recall_multiplier=float(doc.get("hard_recall_multiplier", 0.0)),
        observed_minutes=tuple(
            (int(k), float(v)) for k, v in doc.get("observed_minutes", ())
        ),
    )


def calibrate(
    anchors,
    prevalence: float = DEFAULT_PREVALENCE,
    qtop: int = DEFAULT_QTOP,
) -> WorkerBehavior:
    """Build a worker model from measured per-interface accuracy anchors."""
    anchors = sorted(anchors, key=lambda a: a.k)
    if len(anchors) < 2 or len({a.k for a in anchors}) < 2:
        raise ValueError("need at least 2 anchors with distinct k")
    recall_points = tuple((a.k, a.recall) for a in anchors)
    fp_points = tuple(
        (a.k, fp_rate_from_precision(a.recall, a.precision, prevalence, qtop))
        for a in anchors
    )
    observed = tuple((a.k, a.iteration_minutes) for a in anchors)
    return WorkerBehavior(
        recall_points=recall_points,
        fp_points=fp_points,
        prevalence=prevalence,
        qtop=qtop,
        observed_minutes=observed,
    )


def default_behavior() -> WorkerBehavior:
    return calibrate(DEFAULT_ANCHORS)


def fit_hard_mixture(
    behavior: WorkerBehavior,
    k: int = DEFAULT_QTOP,
    targets=DEFAULT_MULTI_PASS_RECALL,
    hard_grid=None,
    multiplier_grid=None,
) -> WorkerBehavior:
    """Grid-search the difficulty mixture against measured multi-pass recall.

    Finds (hard_fraction, hard_recall_multiplier) minimizing squared error
    against the observed union recall at the given iteration counts, keeping
    the single-pass recall anchored at recall(k).
    """
    r = behavior.recall(k)
    if hard_grid is None:
        hard_grid = np.arange(0.0, 0.3001, 0.0025)
    if multiplier_grid is None:
        multiplier_grid = np.arange(0.0, 0.5001, 0.02)
    best = (math.inf, 0.0, 0.0)
    for h in hard_grid:
        for m in multiplier_grid:
            sse = sum(
                (mixture_union_recall(r, n, h, m) - target) ** 2 for n, target in targets
            )
            if sse < best[0] - 1e-15:
                best = (sse, float(h), float(m))
    _, h, m = best
    return replace(behavior, hard_fraction=h, hard_recall_multiplier=m)


@dataclass(frozen=True)
class AdjustedBehavior:
    """Recall / false-positive rate / timing after interface modifiers."""

    recall: float
    fp_rate: float
    time_ratio: float
    extra_seconds: float


def apply_modifiers(
    behavior: WorkerBehavior, modifiers: ModifierSet, k: int
) -> AdjustedBehavior:
    """Fold A/B-measured modifier effects into the k-question operating point."""
    reg = regime(k)
    r = behavior.recall(k)
    p = behavior.precision(k)
    time_ratio = 1.0
    extra_seconds = 0.0
    active = [
        name
        for name, on in (
            ("positive_bias", modifiers.positive_bias),
            ("grouping", modifiers.grouping),
            ("summary_prompt", modifiers.summary_prompt),
            ("forced_response", modifiers.forced_response),
        )
        if on
    ]
    for name in active:
        effect = MODIFIER_EFFECTS.get((name, reg))
        if effect is None:
            raise ValueError(
                f"modifier {name!r} has no measured effect in the {reg}-question regime"
            )
        r *= effect.recall_ratio
        p *= effect.precision_ratio
        time_ratio *= effect.time_ratio
        extra_seconds += effect.extra_seconds
    r = min(1.0, r)
    p = min(1.0, p)
    f = fp_rate_from_precision(r, p, behavior.prevalence, behavior.qtop)
    return AdjustedBehavior(recall=r, fp_rate=f, time_ratio=time_ratio, extra_seconds=extra_seconds)


@dataclass(frozen=True)
class VideoTruth:
    """Ground truth for one video: positive labels and optional extents."""

    video_id: str
    duration_seconds: float = 30.1
    labels: frozenset[int] = frozenset()
    segments: dict = field(default_factory=dict)

    def __post_init__(self):
        for label_id, spans in self.segments.items():
            for start, end in spans:
                if not 0 <= start < end <= self.duration_seconds + 1e-9:
                    raise ValueError(
                        f"video {self.video_id}: segment ({start}, {end}) outside "
                        f"[0, {self.duration_seconds}] for label {label_id}"
                    )


@dataclass(slots=True)
class AnnotationEvent:
    worker: str
    video: str
    question: int
    gate: bool
    members: tuple[int, ...]
    elapsed: float
    iteration: int
    gold: bool = False


@dataclass(frozen=True)
class Worker:
    worker_id: str
    recall_scale: float = 1.0
    time_scale: float = 1.0
    spammer: bool = False


DEFAULT_WORKER = Worker("w0")

SPAMMER_YES_RATE = 0.5
SPAMMER_TIME_SCALE = 0.2

# Pure-function caches for the per-task hot path.
_scaled_model = lru_cache(maxsize=512)(scale_base_for_duration)
_cached_adjust = lru_cache(maxsize=512)(apply_modifiers)


def sample_worker_pool(
    n: int, behavior: WorkerBehavior, spammer_fraction: float, seed: int
) -> list[Worker]:
    """Honest workers with +/-10% recall jitter plus fast random-guess spammers.

    The spammer count is floor(n * fraction) or ceil(n * fraction), decided
    deterministically by the seed; spammer positions are a seeded draw.
    """
    if not 0.0 <= spammer_fraction <= 1.0:
        raise ValueError("spammer_fraction must lie in [0, 1]")
    rng = substream(seed, "worker-pool", n)
    quota = n * spammer_fraction
    n_spam = int(quota) + (1 if rng.random() < quota - int(quota) else 0)
    spam_slots = set(rng.choice(n, size=n_spam, replace=False).tolist()) if n_spam else set()
    pool = []
    for i in range(n):
        if i in spam_slots:
            pool.append(Worker(f"w{i:04d}", spammer=True, time_scale=SPAMMER_TIME_SCALE))
        else:
            jitter = 1.0 + (rng.random() * 0.2 - 0.1)
            pool.append(Worker(f"w{i:04d}", recall_scale=jitter))
    return pool


def is_hard_pair(master_seed: int, video_id: str, label_id: int, hard_fraction: float) -> bool:
    """Whether a (video, label) pair belongs to the shared hard set.

    The draw depends only on the campaign seed and the pair, so every worker
    and every iteration sees the same difficulty (the correlation lives in
    the data, not the workers).
    """
    if hard_fraction <= 0.0:
        return False
    return unit_fraction(master_seed, "hard-pair", video_id, label_id) < hard_fraction


def _select_members(
    rng: np.random.Generator,
    question: QuestionGroup,
    positive_members: list[int],
    hard_members: set[int],
    r_easy: float,
    hard_multiplier: float,
    fp_rate: float,
) -> tuple[int, ...]:
    """Members picked on an affirmative gate; at least one is always selected.

    Samples independent per-member Bernoullis conditioned on a non-empty
    outcome (exact sequential scheme, no rejection loop).
    """
    members = question.members
    if len(members) == 1:
        return members
    probs = []
    for member in members:
        if member in positive_members:
            probs.append(r_easy * hard_multiplier if member in hard_members else r_easy)
        else:
            probs.append(fp_rate)
    n = len(probs)
    tail = [1.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        tail[i] = tail[i + 1] * (1.0 - probs[i])
    draws = rng.random(n)
    chosen = []
    got = False
    for i in range(n):
        if got:
            take = draws[i] < probs[i]
        else:
            none_later = 1.0 - tail[i]
            take = draws[i] < probs[i] / none_later if none_later > 0 else i == n - 1
        if take:
            got = True
            chosen.append(members[i])
    return tuple(chosen)


def simulate_task(
    behavior: WorkerBehavior,
    video: VideoTruth,
    questions,
    modifiers: ModifierSet,
    seed: int,
    *,
    model: TimeModel = DEFAULT_TIME_MODEL,
    worker: Worker = DEFAULT_WORKER,
    iteration: int = 0,
    subset_index: int = 0,
    gold_questions=(),
    scale_to_duration: bool = True,
) -> list[AnnotationEvent]:
    """Simulate one worker answering one question subset about one video.

    Returns one event per question (affirmative or not) plus one flagged
    event per injected gold duplicate. The RNG stream is a pure function of
    (seed, worker, video, iteration, subset index), making results identical
    under any execution order or thread count.
    """
    questions = list(questions)
    k = len(questions)
    if k == 0:
        raise ValueError("a task needs at least one question")
    adjusted = _cached_adjust(behavior, modifiers, k) if modifiers.any else None
    r = adjusted.recall if adjusted else behavior.recall(k)
    f = adjusted.fp_rate if adjusted else behavior.fp_rate(k)
    r = min(1.0, r * worker.recall_scale)
    r_easy = behavior.easy_recall(r)
    hard_mult = behavior.hard_recall_multiplier

    rng = substream(seed, "task", worker.worker_id, video.video_id, iteration, subset_index)
    order = rng.permutation(k)

    effective_model = (
        _scaled_model(model, video.duration_seconds) if scale_to_duration else model
    )
    total_seconds = (
        task_time(effective_model, k)
        * behavior.speed_multiplier
        * worker.time_scale
        * math.exp(rng.normal(0.0, ELAPSED_SIGMA))
    )
    if adjusted:
        total_seconds = total_seconds * adjusted.time_ratio + adjusted.extra_seconds
    per_question = total_seconds / k

    events = []
    gate_draws = rng.random(k)
    truth_labels = video.labels
    hard_fraction = behavior.hard_fraction
    worker_id = worker.worker_id
    video_id = video.video_id
    spammer = worker.spammer
    for slot, qidx in enumerate(order):
        question = questions[qidx]
        positive_members = [m for m in question.members if m in truth_labels]
        hard_members = ()
        if spammer:
            p_yes = SPAMMER_YES_RATE
        elif positive_members:
            p_yes = r_easy
            if hard_fraction > 0.0:
                hard_members = {
                    m
                    for m in positive_members
                    if is_hard_pair(seed, video_id, m, hard_fraction)
                }
                if len(hard_members) == len(positive_members):
                    p_yes = r_easy * hard_mult
        else:
            p_yes = f
        gate = bool(gate_draws[slot] < p_yes)
        if gate:
            if spammer:
                pick = int(rng.integers(len(question.members)))
                members = (question.members[pick],)
            else:
                members = _select_members(
                    rng, question, positive_members, hard_members, r_easy, hard_mult, f
                )
        else:
            members = ()
        events.append(
            AnnotationEvent(
                worker_id,
                video_id,
                question.id,
                gate,
                members,
                per_question,
                iteration,
            )
        )

    for question in gold_questions:
        # Gold duplicates repeat a question known positive for this video.
        p_yes = SPAMMER_YES_RATE if worker.spammer else r_easy
        gate = bool(rng.random() < p_yes)
        members = (question.members[0],) if gate else ()
        events.append(
            AnnotationEvent(
                worker=worker.worker_id,
                video=video.video_id,
                question=question.id,
                gate=gate,
                members=members,
                elapsed=per_question,
                iteration=iteration,
                gold=True,
            )
        )
    return events


def make_random_truth(
    n_videos: int,
    label_count: int,
    prevalence: float,
    seed: int,
    duration_seconds: float = 30.1,
    min_labels: int = 0,
) -> list[VideoTruth]:
    """Synthetic ground truth: each label positive independently at rate g/N."""
    if not 0 < prevalence < label_count:
        raise ValueError("prevalence must lie in (0, label_count)")
    rng = substream(seed, "truth", n_videos, label_count)
    p = prevalence / label_count
    truths = []
    for i in range(n_videos):
        mask = rng.random(label_count) < p
        labels = set(np.flatnonzero(mask).tolist())
        while len(labels) < min_labels:
            labels.add(int(rng.integers(label_count)))
        truths.append(
            VideoTruth(
                video_id=f"v{i:05d}",
                duration_seconds=duration_seconds,
                labels=frozenset(labels),
            )
        )
    return truths


def load_truths(source) -> list[VideoTruth]:
    """Read ground truth from JSON lines.

    Each line: {"video": id, "duration": seconds, "labels": [ids],
    "segments": {"label": [[start, end], ...]}} (segments optional).
    """
    truths = []
    with open(source, encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                truths.append(
                    VideoTruth(
                        video_id=str(doc["video"]),
                        duration_seconds=float(doc.get("duration", 30.1)),
                        labels=frozenset(int(l) for l in doc.get("labels", ())),
                        segments={
                            int(label): tuple((float(s), float(e)) for s, e in spans)
                            for label, spans in doc.get("segments", {}).items()
                        },
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{source}: line {line_num}: {exc}") from exc
    return truths


def write_truths(truths, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for truth in truths:
            doc = {
                "video": truth.video_id,
                "duration": truth.duration_seconds,
                "labels": sorted(truth.labels),
            }
            if truth.segments:
                doc["segments"] = {
                    str(label): [list(span) for span in spans]
                    for label, spans in sorted(truth.segments.items())
                }
            fh.write(json.dumps(doc) + "\n")
