#!/usr/bin/env python3
"""Show that cluster partitioning does not change what the session renders.

Runs the demo script twice: once on a single all-responsibilities display,
once split across three displays (visual left eye, visual+audio right eye,
haptic mono).  The merged canonical logs must agree event for event.
"""

import argparse
import time
from pathlib import Path

from sensegraph.cluster import compare_logs, load_config, merge_logs, run_session
from sensegraph.fixtures import write_demo_workspace


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", default="demo_workspace", help="workspace directory")
    args = parser.parse_args()

    paths = write_demo_workspace(Path(args.dir))
    script = paths["script"].read_text(encoding="utf-8").splitlines()

    t0 = time.time()
    single_logs = run_session(load_config(paths["single"]), script)
    t1 = time.time()
    split_logs = run_session(load_config(paths["split"]), script)
    t2 = time.time()

    merged_single = merge_logs(single_logs)
    merged_split = merge_logs(split_logs)
    print(f"single display : {len(merged_single)} canonical events in {t1 - t0:.2f}s")
    print(f"three displays : {len(merged_split)} canonical events in {t2 - t1:.2f}s")

    divergence = compare_logs(merged_single, merged_split)
    if divergence is None:
        print("logs are equivalent: partitioning changed nothing")
        return 0
    print(f"DIVERGENCE at event {divergence.index}: {divergence.reason}")
    print(f"  single: {divergence.left}")
    print(f"  split : {divergence.right}")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
