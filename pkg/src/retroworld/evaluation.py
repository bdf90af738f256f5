"""Rollout evaluation: teacher-forced and autoregressive prediction, grid
Hamming error, pixel-space prediction error, and program-size statistics."""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .grid import Grid, Trace, grid_distance, overlay_exogenous
from .interpreter import ProgramSet, step
from .parallel import ordered_map


class EvaluationError(ValueError):
    pass


class Mode(IntEnum):
    """Teacher forcing (1: truth at every step) vs autoregressive (2: truth
    only at t=0, then the model consumes its own predictions)."""

    APPROACH_1 = 1
    APPROACH_2 = 2


@dataclass(frozen=True)
class EpisodeRollout:
    predicted: tuple[Grid, ...]
    hamming: tuple[int, ...]


@dataclass(frozen=True)
class RolloutResult:
    mode: Mode
    episodes: tuple[EpisodeRollout, ...]

    @property
    def total_hamming(self) -> int:
        return sum(sum(ep.hamming) for ep in self.episodes)


def rollout(trace: Trace, ps: ProgramSet, mode: Mode | int) -> RolloutResult:
    """Predict every episode's frames 1..n from its ground truth.

    In both modes, cells holding exogenous sprites are overlaid from the
    ground truth frame at t+1 after stepping: player input is external and
    never predicted.
    """
    mode = Mode(mode)
    if ps.empty_id != trace.empty_id or ps.exogenous_ids != trace.exogenous_ids:
        raise EvaluationError("program set and trace disagree on empty/exogenous sprites")
    for sprite in ps.programs:
        if not (0 <= sprite < trace.n_sprites):
            raise EvaluationError(f"program set references unknown sprite id {sprite}")

    def run_episode(ep: tuple[Grid, ...]) -> EpisodeRollout:
        predicted = []
        hamming = []
        current = ep[0] if ep else None
        for t in range(len(ep) - 1):
            base = ep[t] if mode == Mode.APPROACH_1 else current
            truth = ep[t + 1]
            pred = overlay_exogenous(step(base, ps), truth, trace.exogenous_ids)
            predicted.append(pred)
            hamming.append(grid_distance(pred, truth))
            current = pred
        return EpisodeRollout(tuple(predicted), tuple(hamming))

    episodes = ordered_map(run_episode, trace.episodes)
    return RolloutResult(mode, tuple(episodes))


def divergence_step(
    autoregressive: RolloutResult, teacher_forced: RolloutResult
) -> tuple[int, int] | None:
    """First (episode, step) where the autoregressive Hamming error strictly
    exceeds the teacher-forced one, or None."""
    for ei, (a2, a1) in enumerate(zip(autoregressive.episodes, teacher_forced.episodes)):
        for t, (h2, h1) in enumerate(zip(a2.hamming, a1.hamming)):
            if h2 > h1:
                return (ei, t)
    return None


def prediction_error(
    truth_images: Sequence[np.ndarray], model_images: Sequence[np.ndarray]
) -> float:
    """Sum over frames of the mean absolute difference between the true and
    predicted frame deltas: sum_i MAE(T[i+1]-T[i], M[i+1]-T[i])."""
    if len(truth_images) != len(model_images):
        raise EvaluationError(
            f"frame count mismatch: {len(truth_images)} vs {len(model_images)}"
        )
    total = 0.0
    for i in range(len(truth_images) - 1):
        t0 = np.asarray(truth_images[i], dtype=np.int64)
        t1 = np.asarray(truth_images[i + 1], dtype=np.int64)
        m1 = np.asarray(model_images[i + 1], dtype=np.int64)
        if t0.shape != t1.shape or t0.shape != m1.shape:
            raise EvaluationError("image dimension mismatch")
        dt = t1 - t0
        dm = m1 - t0
        # Exact integer sum; a single division per frame keeps the mean exact
        # for oracle comparison.
        total += int(np.abs(dt - dm).sum()) / dt.size
    return total


@dataclass(frozen=True)
class ProgramStats:
    rule_counts: tuple[int, ...]
    mean: float
    std: float


def program_stats(ps: ProgramSet) -> ProgramStats:
    """Per-program rule counts with mean and population standard deviation."""
    counts = tuple(len(ps.programs[s].rules) for s in sorted(ps.programs))
    if not counts:
        return ProgramStats((), 0.0, 0.0)
    mean = sum(counts) / len(counts)
    var = sum((c - mean) ** 2 for c in counts) / len(counts)
    return ProgramStats(counts, mean, var**0.5)
