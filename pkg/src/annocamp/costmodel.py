"""Linear task-time model, HIT packing arithmetic, and campaign costing.

Annotating one video with Q questions takes a + b*Q seconds: a fixed
video-watching overhead plus a per-question reading/answering cost. The
bundled default (a=14.1, b=1.15) was fitted on measured worker timings for
30.1-second videos played at double speed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

REFERENCE_VIDEO_SECONDS = 30.1


@dataclass(frozen=True)
class TimeModel:
    base_seconds: float
    per_question_seconds: float

    def __post_init__(self):
        for name, value in (
            ("base_seconds", self.base_seconds),
            ("per_question_seconds", self.per_question_seconds),
        ):
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")

    def to_json(self) -> str:
        return json.dumps({"a": self.base_seconds, "b": self.per_question_seconds})

    @classmethod
    def from_json(cls, text: str) -> "TimeModel":
        doc = json.loads(text)
        return cls(float(doc["a"]), float(doc["b"]))


DEFAULT_TIME_MODEL = TimeModel(14.1, 1.15)


@dataclass(frozen=True)
class TimingObservation:
    questions: int
    seconds: float
    video_seconds: float = REFERENCE_VIDEO_SECONDS

    def __post_init__(self):
        if self.questions < 1:
            raise ValueError("questions must be >= 1")
        if self.seconds <= 0 or self.video_seconds <= 0:
            raise ValueError("seconds and video_seconds must be positive")


@dataclass(frozen=True)
class HitBudget:
    target_seconds: float = 150.0
    pay_per_hit: float = 0.40

    def __post_init__(self):
        if self.target_seconds <= 0:
            raise ValueError("target_seconds must be positive")


@dataclass(frozen=True)
class CampaignCost:
    hits: int
    dollars: float
    worker_hours: float


def fit_time_model(observations) -> TimeModel:
    """Ordinary least squares of task seconds on question count."""
    obs = list(observations)
    if len(obs) < 2:
        raise ValueError("need at least 2 timing observations")
    q = np.array([o.questions for o in obs], dtype=float)
    y = np.array([o.seconds for o in obs], dtype=float)
    if np.unique(q).size < 2:
        raise ValueError("need at least 2 distinct question counts to fit a line")
    slope, intercept = np.polyfit(q, y, 1)
    if intercept < 0 or slope < 0:
        raise ValueError(
            f"fitted model has negative coefficients (a={intercept:.3f}, "
            f"b={slope:.3f}); timing data is inconsistent with the model"
        )
    return TimeModel(float(intercept), float(slope))


def task_time(model: TimeModel, questions: int) -> float:
    """Expected seconds to annotate one video with `questions` questions."""
    if questions < 1:
        raise ValueError("questions must be >= 1")
    return model.base_seconds + model.per_question_seconds * questions


def subset_sizes(qtop: int, k: int) -> list[int]:
    """Sizes of the ceil(qtop/k) subsets covering qtop questions."""
    if not 1 <= k <= qtop:
        raise ValueError(f"k must be in [1, {qtop}], got {k}")
    sizes = [k] * (qtop // k)
    if qtop % k:
        sizes.append(qtop % k)
    return sizes


def iteration_time(model: TimeModel, k: int, qtop: int) -> float:
    """Seconds for one complete pass over all qtop questions, k at a time."""
    return sum(task_time(model, size) for size in subset_sizes(qtop, k))


def videos_per_hit(model: TimeModel, k: int, budget: HitBudget) -> int:
    """How many k-question videos fit into one HIT's effort target."""
    per_video = task_time(model, k)
    return max(1, int(budget.target_seconds // per_video))


def campaign_cost(
    videos: int,
    k: int,
    iterations: int,
    model: TimeModel,
    budget: HitBudget,
    qtop: int = 52,
) -> CampaignCost:
    """Total HITs, dollars and worker hours for an exhaustive campaign."""
    if videos < 1 or iterations < 1:
        raise ValueError("videos and iterations must be >= 1")
    per_hit = videos_per_hit(model, k, budget)
    n_subsets = len(subset_sizes(qtop, k))
    hits = iterations * n_subsets * math.ceil(videos / per_hit)
    dollars = hits * budget.pay_per_hit
    worker_hours = iterations * videos * iteration_time(model, k, qtop) / 3600.0
    return CampaignCost(hits=hits, dollars=round(dollars, 2), worker_hours=worker_hours)


def scale_base_for_duration(
    model: TimeModel,
    video_seconds: float,
    reference_seconds: float = REFERENCE_VIDEO_SECONDS,
) -> TimeModel:
    """Rescale the watching overhead for videos of a different length.

    The fitted base folds double-speed watching of a reference-length video
    together with a fixed interaction overhead. The overhead is whatever the
    base exceeds half the reference duration by (clamped at zero); the watch
    component scales proportionally with duration.
    """
    if video_seconds <= 0:
        raise ValueError("video_seconds must be positive")
    overhead = max(0.0, model.base_seconds - reference_seconds / 2.0)
    watch = model.base_seconds - overhead
    scaled = overhead + watch * video_seconds / reference_seconds
    return TimeModel(scaled, model.per_question_seconds)


def read_timings_csv(source: str | Path) -> list[TimingObservation]:
    """Read observations from a `questions,seconds[,video_seconds]` CSV."""
    rows = []
    with open(source, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for i, row in enumerate(reader, start=2):
            try:
                video_seconds = row.get("video_seconds") or REFERENCE_VIDEO_SECONDS
                rows.append(
                    TimingObservation(
                        questions=int(row["questions"]),
                        seconds=float(row["seconds"]),
                        video_seconds=float(video_seconds),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{source}: bad timing row at line {i}: {exc}") from exc
    return rows
