"""A miniature version of the three-condition study.

Sweeps the canonical corridor in each assistance condition over a block of
seeds and prints the per-condition summary. The pattern to look for:

  unassisted  -- the simulated walker bumps through the clutter,
  singleview  -- the robot steers around everything it can see, but the
                 overhead hazards hit the follower anyway,
  crossview   -- the chest branch buys those collisions back at the cost
                 of slower, more cautious runs.

Run:  python3 demos/study_trends.py [SEEDS]
      (SEEDS like "0..7" or a single integer; default 0..7)
"""

import sys
import tempfile

from crossnav.harness import SweepSpec, format_summary_table, parse_seed_range, run_sweep, summarize
from crossnav.sim import Condition


def main() -> None:
    seeds = parse_seed_range(sys.argv[1]) if len(sys.argv) > 1 else tuple(range(8))
    conditions = (Condition.UNASSISTED, Condition.SINGLE_VIEW, Condition.CROSS_VIEW)
    print(f"canonical scenario, seeds {seeds[0]}..{seeds[-1]}, "
          f"{len(conditions) * len(seeds)} episodes (this takes a minute)\n")

    with tempfile.TemporaryDirectory(prefix="crossnav_demo_") as out:
        reports = run_sweep(SweepSpec("canonical", conditions, seeds, out))

    stats = summarize(reports)
    print(format_summary_table(stats))

    una = stats[Condition.UNASSISTED].mean_collisions
    single = stats[Condition.SINGLE_VIEW].mean_collisions
    cross = stats[Condition.CROSS_VIEW].mean_collisions
    print(f"\nmean collisions fall {una:.2f} -> {single:.2f} -> {cross:.2f}; the "
          f"overhead column is what the chest view removes.")


if __name__ == "__main__":
    main()
