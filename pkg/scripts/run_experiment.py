#!/usr/bin/env python3
"""End-to-end experiment on a generated fixture world.

Generates a training trace, learns per-sprite programs, prints them, and
scores the model on a held-out trace of the same world with a different seed.

    python3 scripts/run_experiment.py --domain chase
    python3 scripts/run_experiment.py --domain scroll --seed 3 --holdout-seed 4
    python3 scripts/run_experiment.py --domain chase --adversarial --mode 2
"""
from __future__ import annotations

import argparse
import time

from retroworld import (
    Mode,
    SynthesisConfig,
    print_program,
    program_stats,
    rollout,
    synthesize_all,
)
from retroworld.evaluation import divergence_step
from retroworld.fixtures import FixtureSpec, generate_fixture


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--domain", choices=("chase", "scroll"), default="chase")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--holdout-seed", type=int, default=8)
    parser.add_argument("--episodes", type=int, default=4)
    parser.add_argument("--length", type=int, default=60)
    parser.add_argument("--batch", type=int, default=3)
    parser.add_argument("--mode", type=int, choices=(1, 2), default=1)
    parser.add_argument("--adversarial", action="store_true")
    args = parser.parse_args()

    spec = FixtureSpec(
        domain=args.domain,
        seed=args.seed,
        episode_count=args.episodes,
        episode_length=args.length,
        adversarial=args.adversarial,
    )
    trace, reference_ps = generate_fixture(spec)
    targets = [
        s
        for s in range(trace.n_sprites)
        if s != trace.empty_id and s not in trace.exogenous_ids
    ]
    cfg = SynthesisConfig.for_trace(trace, targets, batch_size=args.batch)

    start = time.perf_counter()
    learned_ps, reports = synthesize_all(trace, cfg)
    elapsed = time.perf_counter() - start

    print(f"domain={args.domain} seed={args.seed} "
          f"frames={sum(len(ep) for ep in trace.episodes)} "
          f"synthesis={elapsed:.2f}s")
    for report in reports:
        name = trace.dictionary[report.sprite]
        print(f"\n[{name}] rules={report.rule_count} "
              f"accepted={report.accepted} rejected={report.rejected}")
        text = print_program(report.program, trace.dictionary)
        print(text if text else "  (empty program)")

    stats = program_stats(learned_ps)
    print(f"\nrule counts {list(stats.rule_counts)} "
          f"mean={stats.mean:.2f} std={stats.std:.2f}")

    train = rollout(trace, learned_ps, Mode(args.mode))
    print(f"training hamming (mode {args.mode}): {train.total_hamming}")

    holdout_spec = FixtureSpec(
        domain=args.domain,
        seed=args.holdout_seed,
        episode_count=args.episodes,
        episode_length=args.length,
        adversarial=args.adversarial,
    )
    holdout, _ = generate_fixture(holdout_spec)
    held = rollout(holdout, learned_ps, Mode(args.mode))
    print(f"held-out hamming (seed {args.holdout_seed}): {held.total_hamming}")

    if args.mode == 2:
        teacher = rollout(holdout, learned_ps, Mode.APPROACH_1)
        div = divergence_step(held, teacher)
        print(f"divergence step: {div}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
