"""Deterministic demo workspace used by the experiment scripts and the tests.

One mid-sized scene (exactly 50 reachable nodes), a ten-entry mapping that
touches every effect family, a 50-tick session script, and cluster configs
for a single-display run and a three-way responsibility split.  Everything
is constructed by code so the documents stay internally consistent.
"""

from __future__ import annotations

import json
from pathlib import Path

from .scene import SceneGraph, load_scene

TOWER_COUNT = 22
TOWER_SPACING = 3.0
GRID_COLS = 5

SCENE_FILE = "demo.scene.json"
MAPPING_FILE = "demo.mapping.json"
SCRIPT_FILE = "demo.script.txt"
AUDIO_FILE = "beep.raw"
SINGLE_CONFIG_FILE = "cluster.single.json"
SPLIT_CONFIG_FILE = "cluster.split.json"

# Vertices in the z=0 plane; picks in the script shoot straight down -z.
QUAD_MESH = {
    "vertices": [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
    "triangles": [[0, 1, 2], [0, 2, 3]],
}
TRI_MESH = {
    "vertices": [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    "triangles": [[0, 1, 2]],
}


def tower_origin(i: int) -> tuple[float, float]:
    return (TOWER_SPACING * (i % GRID_COLS), TOWER_SPACING * (i // GRID_COLS))


def demo_scene() -> dict:
    """50 reachable nodes: root, camera, light, a shared geo under two
    transforms, and 22 transform+geo towers on a grid (meshes alternate, the
    even towers share one mesh record)."""
    nodes: dict = {
        "root": {
            "kind": "group",
            "children": ["cam", "lamp", "tshare1", "tshare2"]
            + [f"tr{i}" for i in range(TOWER_COUNT)],
        },
        "cam": {"kind": "camera"},
        "lamp": {"kind": "light"},
        "tshare1": {
            "kind": "transform",
            "transform": {"translation": [-3.0, 0.0, 0.0]},
            "children": ["gshared"],
        },
        "tshare2": {
            "kind": "transform",
            "transform": {"translation": [-3.0, 3.0, 0.0]},
            "children": ["gshared"],
        },
        "gshared": {"kind": "geo", "mesh": "quad"},
    }
    for i in range(TOWER_COUNT):
        x, y = tower_origin(i)
        nodes[f"tr{i}"] = {
            "kind": "transform",
            "transform": {"translation": [x, y, 0.0]},
            "children": [f"g{i}"],
        }
        nodes[f"g{i}"] = {"kind": "geo", "mesh": "quad" if i % 2 == 0 else "tri"}
    return {"meshes": {"quad": QUAD_MESH, "tri": TRI_MESH}, "nodes": nodes, "root": "root"}


def demo_scene_graph() -> SceneGraph:
    return load_scene(json.dumps(demo_scene()))


def _field(values: list, lo: float, hi: float) -> dict:
    return {
        "field_name": "temperature",
        "unit": "K",
        "values": values,
        "value_min": lo,
        "value_max": hi,
    }


def demo_mapping() -> dict:
    """Ten entries: four audio (three continuous on transforms, one on-touch
    on a geo), three visual, three haptic.  One geo (g4) carries two effects.

    The shared geo stays untargeted on purpose: a shared target gets a fresh
    node id during the rewrite, and that id depends on which entries survive
    the responsibility filter, so split displays would disagree on its path.
    """
    sine = lambda freq: {"sine": {"freq_hz": freq, "amp": 1.0, "duration_s": 0.5}}
    entries = [
        {"target": "/root/tr0", "effect": {
            "type": "audio", "trigger": "continuous", "waveform": sine(220.0),
        }},
        {"target": "/root/tr1", "effect": {
            "type": "audio", "trigger": "continuous",
            "waveform": {"file": {"path": AUDIO_FILE}},
            "ref_distance": 2.0, "rolloff": 0.5, "max_distance": 10.0,
        }},
        {"target": "/root/tr2/g2", "effect": {
            "type": "haptic", **_field([0.2, 0.8], 0.0, 1.0),
        }},
        {"target": "/root/tr3/g3", "effect": {
            "type": "visual", **_field([0.6], 0.0, 1.0),
        }},
        {"target": "/root/tr4/g4", "effect": {
            "type": "visual", **_field([10.0, 30.0], 0.0, 40.0),
            "color_cold": [0.0, 0.0, 0.0], "color_hot": [1.0, 1.0, 0.0],
        }},
        {"target": "/root/tr4/g4", "effect": {
            "type": "haptic", **_field([5.0, 35.0], 0.0, 40.0),
            "force_min": 0.1, "force_max": 0.9,
        }},
        {"target": "/root/tr5/g5", "effect": {
            "type": "audio", "trigger": "on_touch", "waveform": sine(880.0),
        }},
        {"target": "/root/tr6/g6", "effect": {
            "type": "visual", **_field([1.0, 2.0], 0.0, 4.0),
        }},
        {"target": "/root/tr7/g7", "effect": {
            "type": "haptic", **_field([0.5], 0.0, 1.0),
        }},
        {"target": "/root/tr8", "effect": {
            "type": "audio", "trigger": "continuous",
            "waveform": sine(110.0), "rolloff": 2.0,
        }},
    ]
    return {"scene": SCENE_FILE, "entries": entries}


def demo_script() -> list[str]:
    """A 50-tick session touching every message kind.

    Picks aim at points chosen to sit strictly inside one triangle of a
    known tower, including one aimed at a tower mid-spin.
    """
    lines = [
        f"load {SCENE_FILE} {MAPPING_FILE}",
        "viewpoint 0 0 5 0 0 0 1",
        "tick",  # 0
        "tick",  # 1
        "tick",  # 2
        "pick 6.75 0.25 5 0 0 -1",  # tower 2 quad, triangle 0: haptic
        "tick",  # 3
        "pick 12.75 0.25 5 0 0 -1",  # tower 4 quad: on-touch haptic + visual summary
        "tick",  # 4
        "pick 0.25 3.25 5 0 0 -1",  # tower 5 tri: on-touch audio
        "tick",  # 5
        "mode 1",
        "viewpoint 6.25 3.25 5 0 0 0 1",
        "gesture point",  # forward (-z) ray from the viewpoint: selects tower 7's geo
        "tick",  # 6
        "mode 7",  # out of range: consumers answer an error ack and stay put
        "tick",  # 7
        "mode 2",
        "viewpoint 7.25 3.25 5 0 0 0 1",  # editing drag: tower 7 moves +1 in x
        "tick",  # 8
        "pick 7.25 3.25 5 0 0 -1",  # hits the moved tower at its new spot
        "tick",  # 9
        "mode 0",
        "viewpoint 0 0 5 0 0 0 1",
        "animate /root/tr2 0 0 1 0.12",
        "tick",  # 10
        "tick",  # 11
        # Tower 2 has spun 3 steps (0.36 rad) by the time this pick resolves;
        # the aim point sits at 40 degrees off the corner so it is still
        # inside the rotated first triangle.
        "pick 6.0766 0.0643 5 0 0 -1",
        "tick",  # 12
        "gesture swipe",  # recognized, currently has no bound action
        "tick",  # 13
    ]
    for _ in range(14, 20):
        lines.append("tick")  # 14..19
    lines += [
        "pick 0.25 3.25 5 0 0 -1",  # second on-touch audio on tower 5
        "tick",  # 20
        "viewpoint 0 0 8 0 0 0 1",  # further away: continuous gains drop
    ]
    for _ in range(21, 30):
        lines.append("tick")  # 21..29
    lines += [
        "pick 12.75 0.25 5 0 0 -1",
        "tick",  # 30
        "viewpoint 3 3 4 0 0 0.7071067811865476 0.7071067811865476",
    ]
    for _ in range(31, 50):
        lines.append("tick")  # 31..49
    assert lines.count("tick") == 50
    return lines


ALL_RESPONSIBILITIES = ["visual", "audio", "haptic"]


def single_config() -> dict:
    return {
        "producer": {"listen": "127.0.0.1:0"},
        "storage_path": ".",
        "script": SCRIPT_FILE,
        "consumers": [
            {
                "id": "solo",
                "address": "127.0.0.1",
                "responsibilities": ALL_RESPONSIBILITIES,
                "eye": "mono",
            }
        ],
    }


def split_config() -> dict:
    """Three displays: stereo eyes split the visual load (the right eye also
    renders audio) and a third box owns haptics."""
    return {
        "producer": {"listen": "127.0.0.1:0"},
        "storage_path": ".",
        "script": SCRIPT_FILE,
        "ipd": 0.064,
        "consumers": [
            {"id": "left", "address": "127.0.0.1", "responsibilities": ["visual"], "eye": "left"},
            {
                "id": "right",
                "address": "127.0.0.1",
                "responsibilities": ["visual", "audio"],
                "eye": "right",
            },
            {"id": "hap", "address": "127.0.0.1", "responsibilities": ["haptic"], "eye": "mono"},
        ],
    }


def beep_payload() -> bytes:
    # Content only matters for buffer identity; a short ramp will do.
    return bytes(range(64))


def write_demo_workspace(directory: Path) -> dict[str, Path]:
    """Materialize every demo file into one directory and return the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "scene": directory / SCENE_FILE,
        "mapping": directory / MAPPING_FILE,
        "script": directory / SCRIPT_FILE,
        "audio": directory / AUDIO_FILE,
        "single": directory / SINGLE_CONFIG_FILE,
        "split": directory / SPLIT_CONFIG_FILE,
    }
    paths["scene"].write_text(json.dumps(demo_scene(), indent=2) + "\n", encoding="utf-8")
    paths["mapping"].write_text(json.dumps(demo_mapping(), indent=2) + "\n", encoding="utf-8")
    paths["script"].write_text("\n".join(demo_script()) + "\n", encoding="utf-8")
    paths["audio"].write_bytes(beep_payload())
    paths["single"].write_text(json.dumps(single_config(), indent=2) + "\n", encoding="utf-8")
    paths["split"].write_text(json.dumps(split_config(), indent=2) + "\n", encoding="utf-8")
    return paths
