"""Multimodal scene-graph runtime.

A scene graph extended with audio / effect-geometry nodes, a declarative
object-to-effect mapping applied as a responsibility-filtered graph rewrite,
and a lockstep producer/consumer cluster whose displays are deterministic
JSONL event logs.
"""

__version__ = "0.1.0"
