"""Command-line entry point for the whole pipeline.

Subcommands: tokenize, synth, rollout, eval, gen-fixture, play. Every
artifact is a file; identical inputs and seeds produce byte-identical
outputs. Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import atlas as atlas_mod
from .atlas import AtlasError, load_atlas, render_grid, save_atlas, synthetic_atlas, tokenize_frame
from .dsl import ParseError, print_program
from .evaluation import (
    EvaluationError,
    Mode,
    divergence_step,
    prediction_error,
    program_stats,
    rollout,
)
from .fixtures import FixtureError, FixtureSpec, generate_fixture
from .grid import Grid, GridError, Trace, TraceFormatError
from .interpreter import ProgramSet, ProgramSetError
from .parallel import ordered_map
from .synthesis import (
    REPORT_FORMAT_VERSION,
    SynthesisConfig,
    SynthesisError,
    build_report_document,
    program_set_from_document,
    synthesize_all,
)

_DATA_ERRORS = (
    TraceFormatError,
    GridError,
    ParseError,
    AtlasError,
    SynthesisError,
    EvaluationError,
    FixtureError,
    ProgramSetError,
    FileNotFoundError,
    NotADirectoryError,
    json.JSONDecodeError,
    ValueError,
)

_IMAGE_SUFFIXES = {".png", ".bmp", ".gif", ".jpg", ".jpeg"}


class _ArgumentParser(argparse.ArgumentParser):
    # usage problems exit 1; data problems exit 2
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _read_json(path: str | Path) -> dict:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise TraceFormatError(f"{path}: expected a JSON object")
    return data


def _resolve_sprites(trace: Trace, raw: str) -> list[int]:
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        out.append(trace.name_to_id(part))
    return out


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_tokenize(args) -> int:
    atlas = load_atlas(args.atlas)
    frames_dir = Path(args.frames_dir)
    if not frames_dir.is_dir():
        raise NotADirectoryError(f"{frames_dir} is not a directory")
    episode_dirs = sorted(p for p in frames_dir.iterdir() if p.is_dir())
    if not episode_dirs:
        episode_dirs = [frames_dir]
    episodes = []
    for ep_dir in episode_dirs:
        files = sorted(
            p for p in ep_dir.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
        )
        if not files:
            raise TraceFormatError(f"no frame images in {ep_dir}")

        def tokenize_file(path: Path) -> Grid:
            img = np.asarray(Image.open(path).convert("RGB"), dtype=np.uint8)
            return tokenize_frame(img, atlas)

        episodes.append(tuple(ordered_map(tokenize_file, files)))
    names = atlas.names
    if args.empty is not None:
        empty_id = list(names).index(args.empty) if args.empty in names else None
        if empty_id is None:
            raise TraceFormatError(f"unknown empty sprite name: {args.empty!r}")
    else:
        empty_id = list(names).index("EMPTY") if "EMPTY" in names else 0
    exogenous = frozenset()
    if args.exogenous:
        exogenous = frozenset(
            list(names).index(n.strip()) if n.strip() in names else _unknown(n)
            for n in args.exogenous.split(",")
        )
    first = episodes[0][0]
    trace = Trace(
        width=first.width,
        height=first.height,
        dictionary=tuple(names),
        empty_id=empty_id,
        exogenous_ids=exogenous,
        episodes=tuple(episodes),
    )
    trace.save(args.output)
    return 0


def _unknown(name: str):
    raise TraceFormatError(f"unknown sprite name: {name.strip()!r}")


def _cmd_synth(args) -> int:
    trace = Trace.load(args.trace)
    if args.targets:
        targets = _resolve_sprites(trace, args.targets)
    else:
        targets = [
            s
            for s in range(trace.n_sprites)
            if s != trace.empty_id and s not in trace.exogenous_ids
        ]
    cfg = SynthesisConfig.for_trace(
        trace,
        targets,
        batch_size=args.batch,
        max_rules=args.max_rules,
        dedup_rules=args.dedup_rules,
    )
    _, reports = synthesize_all(trace, cfg)
    doc = build_report_document(trace, cfg, reports, include_timings=args.timings)
    _write_json(args.output, doc)
    return 0


def _episode_hamming_doc(result) -> list[dict]:
    return [
        {"hamming": list(ep.hamming), "total": sum(ep.hamming)}
        for ep in result.episodes
    ]


def _cmd_rollout(args) -> int:
    trace = Trace.load(args.trace)
    ps = program_set_from_document(_read_json(args.report), trace)
    result = rollout(trace, ps, Mode(args.mode))
    doc = {
        "version": 1,
        "mode": int(result.mode),
        "total_hamming": result.total_hamming,
        "episodes": [
            {
                "hamming": list(ep.hamming),
                "total": sum(ep.hamming),
                "predicted": [g.to_rows() for g in ep.predicted],
            }
            for ep in result.episodes
        ],
    }
    _write_json(args.output, doc)
    return 0


def _cmd_eval(args) -> int:
    trace = Trace.load(args.trace)
    ps = program_set_from_document(_read_json(args.report), trace)
    mode = Mode(args.mode)
    result = rollout(trace, ps, mode)
    stats = program_stats(ps)
    doc = {
        "version": 1,
        "mode": int(mode),
        "total_hamming": result.total_hamming,
        "episodes": _episode_hamming_doc(result),
        "program_stats": {
            "rule_counts": list(stats.rule_counts),
            "mean": stats.mean,
            "std": stats.std,
        },
    }
    if mode == Mode.APPROACH_2:
        teacher = rollout(trace, ps, Mode.APPROACH_1)
        div = divergence_step(result, teacher)
        doc["teacher_forced_total_hamming"] = teacher.total_hamming
        doc["divergence_step"] = list(div) if div is not None else None
    if args.atlas:
        atlas = load_atlas(args.atlas)
        per_episode = []
        for ep, ep_result in zip(trace.episodes, result.episodes):
            truth_imgs = [render_grid(g, atlas) for g in ep]
            model_imgs = [truth_imgs[0]] + [
                render_grid(g, atlas) for g in ep_result.predicted
            ]
            per_episode.append(prediction_error(truth_imgs, model_imgs))
        doc["prediction_error"] = {
            "per_episode": per_episode,
            "total": sum(per_episode),
        }
        if args.dump_frames:
            out_dir = Path(args.dump_frames)
            for ei, ep_result in enumerate(result.episodes):
                ep_dir = out_dir / f"ep{ei:03d}"
                ep_dir.mkdir(parents=True, exist_ok=True)
                for t, g in enumerate(ep_result.predicted):
                    Image.fromarray(render_grid(g, atlas)).save(
                        ep_dir / f"pred_{t:04d}.png"
                    )
    _write_json(args.output, doc)
    return 0


def reference_report_document(trace: Trace, ps: ProgramSet) -> dict:
    """Report-schema document carrying a fixture's reference programs."""
    names = trace.dictionary
    sprites = sorted(ps.programs)
    counts = [len(ps.programs[s].rules) for s in sprites]
    mean = sum(counts) / len(counts) if counts else 0.0
    var = sum((c - mean) ** 2 for c in counts) / len(counts) if counts else 0.0
    return {
        "version": REPORT_FORMAT_VERSION,
        "config": {"reference": True},
        "order": [names[s] for s in sprites],
        "programs": {names[s]: print_program(ps.programs[s], names) for s in sprites},
        "reports": {},
        "stats": {"rule_counts": counts, "mean_rules": mean, "std_rules": var**0.5},
    }


def _cmd_gen_fixture(args) -> int:
    spec = FixtureSpec(
        domain=args.domain,
        width=args.width,
        height=args.height,
        seed=args.seed,
        episode_count=args.episodes,
        episode_length=args.length,
        adversarial=args.adversarial,
    )
    trace, ps = generate_fixture(spec)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace.save(out_dir / "trace.json")
    _write_json(out_dir / "reference_report.json", reference_report_document(trace, ps))
    if args.render:
        atlas = synthetic_atlas(
            trace.dictionary,
            empty_id=trace.empty_id,
            with_background=True,
            frame_cells=(trace.width, trace.height),
        )
        save_atlas(atlas, out_dir / "atlas")
        for ei, ep in enumerate(trace.episodes):
            ep_dir = out_dir / "frames" / f"ep{ei:03d}"
            ep_dir.mkdir(parents=True, exist_ok=True)
            for t, g in enumerate(ep):
                Image.fromarray(render_grid(g, atlas)).save(ep_dir / f"frame_{t:04d}.png")
    return 0


def _cmd_play(args) -> int:
    import uvicorn

    from .server import build_app

    trace = Trace.load(args.trace)
    ps = program_set_from_document(_read_json(args.report), trace)
    if not trace.exogenous_ids:
        raise EvaluationError("the trace declares no exogenous player sprite")
    player_id = min(trace.exogenous_ids)
    ui_dir = Path(args.ui) if args.ui else _default_ui_dir()
    app = build_app(
        initial=trace.episodes[0][0],
        ps=ps,
        sprites=trace.dictionary,
        player_id=player_id,
        tick_ms=args.tick_ms,
        ui_dir=ui_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _default_ui_dir() -> Path | None:
    for base in (Path.cwd(), Path(__file__).resolve().parents[2]):
        candidate = base / "frontend" / "dist"
        if candidate.is_dir():
            return candidate
    return None


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="retroworld", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="tokenize frame images into a trace")
    p.add_argument("frames_dir")
    p.add_argument("atlas")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--empty", help="name of the empty sprite (default: EMPTY or id 0)")
    p.add_argument("--exogenous", help="comma-separated exogenous sprite names")
    p.set_defaults(func=_cmd_tokenize)

    p = sub.add_parser("synth", help="learn per-sprite programs from a trace")
    p.add_argument("trace")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--targets", help="comma-separated target sprite names (default: all learnable)")
    p.add_argument("--batch", type=int, default=3, help="batch window size (default 3)")
    p.add_argument("--max-rules", type=int, default=16)
    p.add_argument("--dedup-rules", action="store_true")
    p.add_argument("--timings", action="store_true", help="record wall-clock durations in the report")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("rollout", help="predict a trace with learned programs")
    p.add_argument("trace")
    p.add_argument("report")
    p.add_argument("--mode", type=int, choices=(1, 2), required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_rollout)

    p = sub.add_parser("eval", help="evaluate learned programs against a trace")
    p.add_argument("trace")
    p.add_argument("report")
    p.add_argument("--mode", type=int, choices=(1, 2), required=True)
    p.add_argument("--atlas", help="atlas directory; adds pixel prediction error")
    p.add_argument("--dump-frames", help="directory for predicted frame PNGs")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gen-fixture", help="generate a deterministic fixture trace")
    p.add_argument("domain", choices=("chase", "scroll"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=4)
    p.add_argument("--length", type=int, default=60)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--height", type=int, default=8)
    p.add_argument("--adversarial", action="store_true")
    p.add_argument("--render", action="store_true", help="also emit a synthetic atlas and PNG frames")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_gen_fixture)

    p = sub.add_parser("play", help="serve a learned model as a playable grid game")
    p.add_argument("trace")
    p.add_argument("report")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--tick-ms", type=int, default=250)
    p.add_argument("--ui", help="directory with the built UI bundle")
    p.set_defaults(func=_cmd_play)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
