#!/usr/bin/env python3
"""Run the bundled demo session on a single display and summarize its log.

Writes the demo workspace (scene, mapping, script, cluster configs) into a
directory, runs the 50-tick script against one all-responsibilities consumer,
and prints what fired.
"""

import argparse
import collections
import json
from pathlib import Path

from sensegraph.cluster import load_config, read_log, run_session
from sensegraph.fixtures import write_demo_workspace


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", default="demo_workspace", help="workspace directory")
    args = parser.parse_args()

    workspace = Path(args.dir)
    paths = write_demo_workspace(workspace)
    print(f"workspace: {workspace.resolve()}")

    config = load_config(paths["single"])
    script = paths["script"].read_text(encoding="utf-8").splitlines()
    logs = run_session(config, script)

    events = read_log(logs[0])
    print(f"\n{logs[0].name}: {len(events)} events over 50 ticks")
    counts = collections.Counter((e["type"], e["trigger"]) for e in events)
    for (etype, trigger), n in sorted(counts.items()):
        print(f"  {etype:>7} {trigger:<11} {n:>6}")

    touches = [e for e in events if e["trigger"] == "on_touch"]
    print(f"\ntouch events ({len(touches)}):")
    for e in touches:
        print(f"  {json.dumps(e)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
