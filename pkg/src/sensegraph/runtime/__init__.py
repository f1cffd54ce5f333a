"""Headless display runtime: consumer state machine and producer session loop."""

from .consumer import (
    Animation,
    ConsumerState,
    consumer_load,
    consumer_step,
    eye_view,
    handle_message,
    initialize_audio,
)
from .producer import (
    ScriptError,
    SessionError,
    SessionDriver,
    parse_script_line,
    run_script_lines,
)

__all__ = [
    "Animation",
    "ConsumerState",
    "consumer_load",
    "consumer_step",
    "eye_view",
    "handle_message",
    "initialize_audio",
    "ScriptError",
    "SessionError",
    "SessionDriver",
    "parse_script_line",
    "run_script_lines",
]
