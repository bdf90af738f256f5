"""Greedy hill-climbing extraction of per-sprite programs from traces.

For each target sprite the search starts from the empty program and slides a
batch window over the sprite's occurrence frames. Within a window it
repeatedly evaluates all neighbor programs (add one rule from the full
condition x action vocabulary, or remove one existing rule) and adopts the
strictly best improving neighbor until none improves, then carries the
program into the next window.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .dsl import (
    Action,
    ChangeToEntity,
    Condition,
    Direction,
    EMPTY_PROGRAM,
    ExistsInMap,
    ExistsInPosition,
    FollowDirection,
    FollowEntity,
    FollowTargetLocation,
    Neighboring,
    Neighbours,
    Program,
    Rule,
    print_program,
    parse_program,
)
from .grid import Grid, Position, Trace, grid_distance, occurrence_indices, overlay_exogenous
from .interpreter import (
    PendingInstance,
    ProgramSet,
    apply_action,
    eval_condition,
    run_program,
    step,
)
from .parallel import ordered_map

REPORT_FORMAT_VERSION = 1


class SynthesisError(ValueError):
    pass


@dataclass(frozen=True)
class SynthesisConfig:
    """Search-space and loop parameters for program extraction."""

    width: int
    height: int
    n_sprites: int
    target_sprites: tuple[int, ...]
    batch_size: int = 3
    entity_ids: tuple[int, ...] | None = None
    directions: tuple[Direction, ...] = (
        Direction.UP,
        Direction.DOWN,
        Direction.LEFT,
        Direction.RIGHT,
    )
    positions: tuple[Position, ...] | None = None
    max_rules: int = 16
    dedup_rules: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise SynthesisError("batch_size must be >= 1")
        if self.max_rules < 1:
            raise SynthesisError("max_rules must be >= 1")

    @classmethod
    def for_trace(cls, trace: Trace, targets: Sequence[int], **kwargs) -> "SynthesisConfig":
        targets = tuple(targets)
        for t in targets:
            if not (0 <= t < trace.n_sprites):
                raise SynthesisError(f"target sprite id {t} out of range")
            if t == trace.empty_id or t in trace.exogenous_ids:
                raise SynthesisError(
                    f"sprite {trace.dictionary[t]!r} is empty/exogenous and cannot be a target"
                )
        return cls(
            width=trace.width,
            height=trace.height,
            n_sprites=trace.n_sprites,
            target_sprites=targets,
            **kwargs,
        )

    def _entities(self) -> tuple[int, ...]:
        return self.entity_ids if self.entity_ids is not None else tuple(range(self.n_sprites))

    def _positions(self) -> tuple[Position, ...]:
        if self.positions is not None:
            return self.positions
        return tuple(
            Position(c, r) for r in range(self.height) for c in range(self.width)
        )

    def condition_vocab(self) -> list[Condition]:
        ents = self._entities()
        out: list[Condition] = [ExistsInMap(e) for e in ents]
        out += [Neighboring(e) for e in ents]
        out += [Neighbours(e1, e2) for e1 in ents for e2 in ents]
        out += [ExistsInPosition(p) for p in self._positions()]
        return out

    def action_vocab(self) -> list[Action]:
        ents = self._entities()
        out: list[Action] = [FollowEntity(e) for e in ents]
        out += [FollowDirection(d) for d in self.directions]
        out += [ChangeToEntity(e) for e in ents]
        out += [FollowTargetLocation(p) for p in self._positions()]
        return out


def neighbor_programs(program: Program, cfg: SynthesisConfig) -> list[Program]:
    """Neighbors of a program: one rule appended (full vocabulary cross
    product, in (condition, action) lexicographic vocabulary order) then one
    rule removed, deduplicated and excluding the program itself."""
    out: list[Program] = []
    seen: set[Program] = set()
    if len(program.rules) < cfg.max_rules:
        existing = set(program.rules) if cfg.dedup_rules else set()
        for cond in cfg.condition_vocab():
            for act in cfg.action_vocab():
                rule = Rule(cond, act)
                if rule in existing:
                    continue
                q = program.with_rule(rule)
                if q not in seen:
                    seen.add(q)
                    out.append(q)
    for i in range(len(program.rules)):
        q = program.without_rule(i)
        if q != program and q not in seen:
            seen.add(q)
            out.append(q)
    return out


def window_loss(
    program: Program,
    trace: Trace,
    window: Sequence[tuple[int, int]],
    ps_context: ProgramSet,
    target: int,
) -> int:
    """Sum of next-frame grid distances over a window with `program` bound to
    `target`; exogenous cells are synchronized with the ground truth before
    measuring."""
    ps = ps_context.with_program(target, program)
    total = 0
    for episode, frame in window:
        ep = trace.episodes[episode]
        if not (0 <= frame < len(ep) - 1):
            raise SynthesisError(f"window index ({episode}, {frame}) has no successor frame")
        truth = ep[frame + 1]
        pred = step(ep[frame], ps)
        pred = overlay_exogenous(pred, truth, trace.exogenous_ids)
        total += grid_distance(pred, truth)
    return total


def prior_frame_predict(grid: Grid) -> Grid:
    """Baseline predictor: the next frame is the current frame."""
    return grid


# ---------------------------------------------------------------------------
# Fast window evaluation for neighbor scans.


class _FrameState:
    """Precomputed per-frame state shared by all candidate evaluations."""

    __slots__ = (
        "snapshot",
        "truth_cells",
        "instances",
        "target_slots",
        "vacated",
        "check_idx",
    )

    def __init__(self, snapshot: Grid, truth: Grid, programmed: set[int],
                 target: int, empty_id: int, exo: frozenset[int]):
        self.snapshot = snapshot
        self.truth_cells = truth.cells
        self.instances = [(i, c) for i, c in enumerate(snapshot.cells) if c in programmed]
        self.target_slots = [k for k, (_, c) in enumerate(self.instances) if c == target]
        vac = list(snapshot.cells)
        for i, _ in self.instances:
            vac[i] = empty_id
        self.vacated = vac
        self.check_idx = [j for j, t in enumerate(self.truth_cells) if t not in exo]


class _WindowEvaluator:
    """Evaluates window loss for many neighbor candidates of one program.

    Matches `window_loss` exactly; the speedup comes from caching condition
    evaluations, action applications, and per-frame context pendings.
    """

    def __init__(
        self,
        trace: Trace,
        window: Sequence[tuple[int, int]],
        target: int,
        ps_context: ProgramSet,
        cfg: SynthesisConfig,
    ):
        self.trace = trace
        self.target = target
        self.empty_id = trace.empty_id
        self.exo = trace.exogenous_ids
        programmed = set(ps_context.programs) | {target}
        self.frames: list[_FrameState] = []
        for episode, frame in window:
            ep = trace.episodes[episode]
            if not (0 <= frame < len(ep) - 1):
                raise SynthesisError(f"window index ({episode}, {frame}) has no successor frame")
            self.frames.append(
                _FrameState(ep[frame], ep[frame + 1], programmed, target, self.empty_id, self.exo)
            )
        # Context pendings never depend on the target's candidate program.
        self.ctx_pendings: list[dict[int, PendingInstance]] = []
        for fs in self.frames:
            pend = {}
            for k, (i, c) in enumerate(fs.instances):
                if c != target:
                    pend[k] = run_program(
                        ps_context.programs[c], fs.snapshot, fs.snapshot.position(i), c
                    )
            self.ctx_pendings.append(pend)
        self._cond_cache: dict[tuple, bool] = {}
        self._apply_cache: dict[tuple, PendingInstance] = {}
        self._base_pendings: list[list[PendingInstance]] | None = None

    def _cond(self, fi: int, cond: Condition, origin: Position) -> bool:
        local = isinstance(cond, (Neighboring, ExistsInPosition))
        key = (fi, cond, origin if local else None)
        hit = self._cond_cache.get(key)
        if hit is None:
            hit = eval_condition(cond, self.frames[fi].snapshot, origin)
            self._cond_cache[key] = hit
        return hit

    def _apply(self, fi: int, action: Action, inst: PendingInstance) -> PendingInstance:
        key = (fi, action, inst)
        hit = self._apply_cache.get(key)
        if hit is None:
            hit = apply_action(action, inst, self.frames[fi].snapshot)
            self._apply_cache[key] = hit
        return hit

    def _fold(self, fi: int, program: Program, origin: Position) -> PendingInstance:
        inst = PendingInstance(origin, origin, self.target)
        for rule in program.rules:
            if self._cond(fi, rule.condition, origin):
                inst = self._apply(fi, rule.action, inst)
        return inst

    def target_pendings(self, program: Program) -> list[list[PendingInstance]]:
        out = []
        for fi, fs in enumerate(self.frames):
            out.append(
                [
                    self._fold(fi, program, fs.snapshot.position(fs.instances[k][0]))
                    for k in fs.target_slots
                ]
            )
        return out

    def set_base(self, program: Program) -> None:
        self._base_pendings = self.target_pendings(program)

    def loss_for_pendings(self, pendings: list[list[PendingInstance]]) -> int:
        empty = self.empty_id
        exo = self.exo
        total = 0
        for fi, fs in enumerate(self.frames):
            out = fs.vacated.copy()
            ctx = self.ctx_pendings[fi]
            ti = 0
            target_slots = fs.target_slots
            tslot = set(target_slots)
            frame_pendings = pendings[fi]
            for k, (i, _) in enumerate(fs.instances):
                if k in tslot:
                    pend = frame_pendings[ti]
                    ti += 1
                else:
                    pend = ctx[k]
                typ = pend.current_type
                if typ == empty:
                    continue
                pos = pend.current_pos
                j = pos.row * fs.snapshot.width + pos.col
                if out[j] == empty:
                    out[j] = typ
                elif out[i] == empty:
                    out[i] = typ
            truth = fs.truth_cells
            for j in fs.check_idx:
                p = out[j]
                if p != truth[j] and p not in exo:
                    total += 1
        return total

    def loss_of(self, program: Program) -> int:
        return self.loss_for_pendings(self.target_pendings(program))

    def loss_of_extension(self, cond: Condition, act: Action) -> int:
        """Loss of the base program with one rule appended."""
        assert self._base_pendings is not None
        pendings = []
        for fi, fs in enumerate(self.frames):
            base = self._base_pendings[fi]
            row = []
            for slot_index, k in enumerate(fs.target_slots):
                origin = fs.snapshot.position(fs.instances[k][0])
                inst = base[slot_index]
                if self._cond(fi, cond, origin):
                    inst = self._apply(fi, act, inst)
                row.append(inst)
            pendings.append(row)
        return self.loss_for_pendings(pendings)


# ---------------------------------------------------------------------------
# Hill climbing


@dataclass(frozen=True)
class WindowRecord:
    frames: tuple[tuple[int, int], ...]
    baseline: int
    achieved: int
    # Window loss after each accepted neighbor, in acceptance order.
    steps: tuple[int, ...] = ()


@dataclass(frozen=True)
class SynthesisReport:
    sprite: int
    program: Program
    windows: tuple[WindowRecord, ...]
    accepted: int
    rejected: int
    duration_s: float
    no_occurrences: bool = False

    @property
    def rule_count(self) -> int:
        return len(self.program.rules)


def _scan_best_neighbor(
    evaluator: _WindowEvaluator,
    program: Program,
    cfg: SynthesisConfig,
    current_loss: int,
) -> tuple[Program | None, int, int]:
    """First strictly-best neighbor in canonical enumeration order.

    Returns (best_program or None, best_loss, n_evaluated). The enumeration
    order matches `neighbor_programs`: additions in (condition, action)
    vocabulary order, then removals by rule index.
    """
    evaluator.set_base(program)
    best: Program | None = None
    best_loss = current_loss
    evaluated = 0

    if len(program.rules) < cfg.max_rules:
        existing = set(program.rules) if cfg.dedup_rules else set()
        conds = cfg.condition_vocab()
        acts = cfg.action_vocab()

        def eval_cond_block(cond: Condition) -> tuple[int, int] | None:
            # Best (loss, action index) within one condition's action block.
            block_best: tuple[int, int] | None = None
            for ai, act in enumerate(acts):
                if Rule(cond, act) in existing:
                    continue
                loss = evaluator.loss_of_extension(cond, act)
                if block_best is None or loss < block_best[0]:
                    block_best = (loss, ai)
            return block_best

        for ci, block in enumerate(ordered_map(eval_cond_block, conds)):
            evaluated += len(acts) - (
                sum(1 for a in acts if Rule(conds[ci], a) in existing)
            )
            if block is not None and block[0] < best_loss:
                best_loss = block[0]
                best = program.with_rule(Rule(conds[ci], acts[block[1]]))

    seen: set[Program] = set()
    for i in range(len(program.rules)):
        q = program.without_rule(i)
        if q == program or q in seen:
            continue
        seen.add(q)
        loss = evaluator.loss_of(q)
        evaluated += 1
        if loss < best_loss:
            best, best_loss = q, loss
    return best, best_loss, evaluated


def synthesize_sprite(
    trace: Trace,
    sprite: int,
    cfg: SynthesisConfig,
    ps_context: ProgramSet | None = None,
) -> SynthesisReport:
    """Learn one sprite's program over sliding batch windows of its occurrences."""
    if sprite not in cfg.target_sprites:
        raise SynthesisError(f"sprite {sprite} is not in the configured targets")
    if ps_context is None:
        ps_context = ProgramSet({}, trace.empty_id, trace.exogenous_ids)
    start = time.perf_counter()
    occ = occurrence_indices(trace, sprite)
    if not occ:
        return SynthesisReport(
            sprite=sprite,
            program=EMPTY_PROGRAM,
            windows=(),
            accepted=0,
            rejected=0,
            duration_s=time.perf_counter() - start,
            no_occurrences=True,
        )
    b = cfg.batch_size
    windows = [occ[i : i + b] for i in range(0, len(occ), b)]
    program = EMPTY_PROGRAM
    records: list[WindowRecord] = []
    accepted = 0
    rejected = 0
    for window in windows:
        evaluator = _WindowEvaluator(trace, window, sprite, ps_context, cfg)
        baseline = evaluator.loss_of(program)
        loss = baseline
        steps: list[int] = []
        # A zero loss cannot strictly improve; skip the scan.
        while loss > 0:
            best, best_loss, evaluated = _scan_best_neighbor(evaluator, program, cfg, loss)
            if best is None:
                rejected += evaluated
                break
            program = best
            loss = best_loss
            steps.append(loss)
            accepted += 1
            rejected += evaluated - 1
        records.append(WindowRecord(tuple(window), baseline, loss, tuple(steps)))
    return SynthesisReport(
        sprite=sprite,
        program=program,
        windows=tuple(records),
        accepted=accepted,
        rejected=rejected,
        duration_s=time.perf_counter() - start,
    )


def synthesize_all(
    trace: Trace, cfg: SynthesisConfig
) -> tuple[ProgramSet, list[SynthesisReport]]:
    """Learn programs for all targets in dictionary order, each with the
    previously learned programs active as context."""
    ps = ProgramSet({}, trace.empty_id, trace.exogenous_ids)
    reports: list[SynthesisReport] = []
    for sprite in sorted(cfg.target_sprites):
        report = synthesize_sprite(trace, sprite, cfg, ps_context=ps)
        reports.append(report)
        ps = ps.with_program(sprite, report.program)
    return ps, reports


# ---------------------------------------------------------------------------
# Report document (JSON)


def _mean_std(counts: Sequence[int]) -> tuple[float, float]:
    if not counts:
        return 0.0, 0.0
    mean = sum(counts) / len(counts)
    var = sum((c - mean) ** 2 for c in counts) / len(counts)
    return mean, var**0.5


def build_report_document(
    trace: Trace,
    cfg: SynthesisConfig,
    reports: Sequence[SynthesisReport],
    include_timings: bool = False,
) -> dict:
    """JSON-ready synthesis report: programs in canonical DSL text, loss
    trajectories, and the effective config.

    Timings are omitted by default so identical runs produce byte-identical
    report files; pass include_timings=True to record wall-clock durations.
    """
    names = trace.dictionary
    counts = [r.rule_count for r in reports]
    mean, std = _mean_std(counts)
    return {
        "version": REPORT_FORMAT_VERSION,
        "config": {
            "batch_size": cfg.batch_size,
            "max_rules": cfg.max_rules,
            "dedup_rules": cfg.dedup_rules,
            "width": cfg.width,
            "height": cfg.height,
            "n_sprites": cfg.n_sprites,
            "targets": [names[s] for s in sorted(cfg.target_sprites)],
        },
        "order": [names[r.sprite] for r in reports],
        "programs": {names[r.sprite]: print_program(r.program, names) for r in reports},
        "reports": {
            names[r.sprite]: {
                "rule_count": r.rule_count,
                "accepted": r.accepted,
                "rejected": r.rejected,
                "no_occurrences": r.no_occurrences,
                "duration_s": r.duration_s if include_timings else None,
                "windows": [
                    {
                        "frames": [list(f) for f in w.frames],
                        "baseline": w.baseline,
                        "achieved": w.achieved,
                        "steps": list(w.steps),
                    }
                    for w in r.windows
                ],
            }
            for r in reports
        },
        "stats": {
            "rule_counts": counts,
            "mean_rules": mean,
            "std_rules": std,
        },
    }


def program_set_from_document(doc: Mapping, trace: Trace) -> ProgramSet:
    """Rebuild a ProgramSet from a synthesis report document."""
    if doc.get("version") != REPORT_FORMAT_VERSION:
        raise SynthesisError(f"unsupported report version: {doc.get('version')!r}")
    programs = {}
    for name, text in doc["programs"].items():
        sprite = trace.name_to_id(name)
        programs[sprite] = parse_program(text, trace.dictionary, trace.width, trace.height)
    return ProgramSet(programs, trace.empty_id, trace.exogenous_ids)
