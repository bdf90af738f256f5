"""retroworld: symbolic world models for retro grid games.

Learns per-sprite if-then rule programs from gameplay traces via greedy
hill-climbing, evaluates them as a deterministic world model, and serves the
result as a playable grid game.
"""
from .dsl import (
    Action,
    ChangeToEntity,
    Condition,
    Direction,
    ExistsInMap,
    ExistsInPosition,
    FollowDirection,
    FollowEntity,
    FollowTargetLocation,
    Neighboring,
    Neighbours,
    ParseError,
    Program,
    Rule,
    parse_program,
    print_program,
)
from .evaluation import Mode, prediction_error, program_stats, rollout
from .grid import (
    Grid,
    GridError,
    Position,
    Trace,
    TraceFormatError,
    grid_distance,
    occurrence_indices,
    overlay_exogenous,
)
from .interpreter import (
    PendingInstance,
    ProgramSet,
    apply_action,
    eval_condition,
    step,
)
from .synthesis import (
    SynthesisConfig,
    SynthesisReport,
    neighbor_programs,
    prior_frame_predict,
    synthesize_all,
    synthesize_sprite,
    window_loss,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ChangeToEntity",
    "Condition",
    "Direction",
    "ExistsInMap",
    "ExistsInPosition",
    "FollowDirection",
    "FollowEntity",
    "FollowTargetLocation",
    "Grid",
    "GridError",
    "Mode",
    "Neighboring",
    "Neighbours",
    "ParseError",
    "PendingInstance",
    "Position",
    "Program",
    "ProgramSet",
    "Rule",
    "SynthesisConfig",
    "SynthesisReport",
    "Trace",
    "TraceFormatError",
    "apply_action",
    "eval_condition",
    "grid_distance",
    "neighbor_programs",
    "occurrence_indices",
    "overlay_exogenous",
    "parse_program",
    "prediction_error",
    "print_program",
    "prior_frame_predict",
    "program_stats",
    "rollout",
    "step",
    "synthesize_all",
    "synthesize_sprite",
    "window_loss",
]
