"""Cluster configuration, session orchestration, and log equivalence tools.

A cluster config names the producer endpoint and every display consumer with
its responsibilities.  Running a session spawns the consumers, feeds them a
script, and leaves one JSONL event log per consumer; merging normalizes
those logs into one canonical stream so differently partitioned clusters can
be compared event for event.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .effects import effect_type
from .mapping import ResponsibilitySet, parse_mapping
from .runtime.consumer import DEFAULT_IPD
from .runtime.producer import ConsumerSpec, SessionDriver, run_script_lines

log = logging.getLogger(__name__)

CONSUMER_SOFT_CAP = 16


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ConsumerConfig:
    id: str
    host: str
    responsibilities: ResponsibilitySet
    eye: str = "mono"


@dataclass(frozen=True)
class ClusterConfig:
    listen_host: str
    listen_port: int
    storage_path: Path
    consumers: tuple[ConsumerConfig, ...]
    ipd: float = DEFAULT_IPD
    tracking_port: Optional[int] = None
    script_path: Optional[Path] = None


def _check_keys(obj: dict, required: set, optional: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    missing = required - obj.keys()
    if missing:
        raise ConfigError(f"{where} missing field(s) {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise ConfigError(f"{where} has unknown field(s) {sorted(unknown)}")


def _split_endpoint(value: str, where: str) -> tuple[str, int]:
    host, sep, port_text = str(value).rpartition(":")
    if not sep or not host:
        raise ConfigError(f"{where} must look like host:port, got {value!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise ConfigError(f"{where} has a non-numeric port: {value!r}") from None
    if not 0 <= port <= 65535:
        raise ConfigError(f"{where} port out of range: {port}")
    return host, port


def parse_config(text: str, base_dir: Path) -> ClusterConfig:
    """Strict cluster-config parse; storage_path resolves against base_dir."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    _check_keys(
        doc,
        {"producer", "storage_path", "consumers"},
        {"ipd", "tracking", "script"},
        "config",
    )
    _check_keys(doc["producer"], {"listen"}, set(), "producer")
    listen_host, listen_port = _split_endpoint(doc["producer"]["listen"], "producer.listen")

    tracking_port: Optional[int] = None
    if "tracking" in doc:
        _check_keys(doc["tracking"], {"udp_port"}, set(), "tracking")
        tracking_port = int(doc["tracking"]["udp_port"])
        if not 0 <= tracking_port <= 65535:
            raise ConfigError(f"tracking.udp_port out of range: {tracking_port}")

    raw_consumers = doc["consumers"]
    if not isinstance(raw_consumers, list) or not raw_consumers:
        raise ConfigError("consumers must be a non-empty list")
    if len(raw_consumers) > CONSUMER_SOFT_CAP:
        log.warning(
            "config lists %d consumers; lockstep ticking is untested beyond %d",
            len(raw_consumers),
            CONSUMER_SOFT_CAP,
        )

    consumers = []
    seen_ids: set[str] = set()
    eyes_taken: set[str] = set()
    for i, raw in enumerate(raw_consumers):
        where = f"consumers[{i}]"
        _check_keys(raw, {"id", "address", "responsibilities"}, {"eye"}, where)
        cid = str(raw["id"])
        if not cid or "/" in cid or cid != cid.strip():
            raise ConfigError(f"{where}: id {cid!r} is not usable as a log filename")
        if cid in seen_ids:
            raise ConfigError(f"{where}: duplicate consumer id {cid!r}")
        seen_ids.add(cid)
        address = str(raw["address"])
        host = _split_endpoint(address, where)[0] if ":" in address else address
        if not host:
            raise ConfigError(f"{where}: empty address")
        try:
            resp = ResponsibilitySet.from_names(raw["responsibilities"])
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        if resp.to_mask() == 0:
            raise ConfigError(f"{where}: responsibilities must not be empty")
        eye = str(raw.get("eye", "mono"))
        if eye not in ("mono", "left", "right"):
            raise ConfigError(f"{where}: eye must be mono, left or right, got {eye!r}")
        if eye != "mono":
            if eye in eyes_taken:
                raise ConfigError(f"two consumers claim the {eye} eye")
            eyes_taken.add(eye)
        consumers.append(ConsumerConfig(id=cid, host=host, responsibilities=resp, eye=eye))

    ipd = float(doc.get("ipd", DEFAULT_IPD))
    if ipd <= 0:
        raise ConfigError(f"ipd must be positive, got {ipd}")

    def resolved(value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else (base_dir / path).resolve()

    script_path = None
    if "script" in doc:
        script_path = resolved(str(doc["script"]))

    return ClusterConfig(
        listen_host=listen_host,
        listen_port=listen_port,
        storage_path=resolved(str(doc["storage_path"])),
        consumers=tuple(consumers),
        ipd=ipd,
        tracking_port=tracking_port,
        script_path=script_path,
    )


def load_config(path: Union[str, Path]) -> ClusterConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), path.parent)


def _warn_uncovered_effects(config: ClusterConfig, script_lines: Sequence[str]) -> None:
    """Warn when the mapping uses an effect type no consumer owns."""
    union = ResponsibilitySet(
        visual=any(c.responsibilities.visual for c in config.consumers),
        audio=any(c.responsibilities.audio for c in config.consumers),
        haptic=any(c.responsibilities.haptic for c in config.consumers),
    )
    for line in script_lines:
        parts = line.split()
        if len(parts) == 3 and parts[0] == "load":
            try:
                mapping = parse_mapping(
                    (config.storage_path / parts[2]).read_text(encoding="utf-8")
                )
            except (OSError, ValueError):
                return  # the consumers will report the load failure themselves
            used = {effect_type(e.effect) for e in mapping.entries}
            dropped = [t.value for t in sorted(used, key=lambda t: t.value) if not union.includes(t)]
            if dropped:
                log.warning(
                    "mapping %s uses effect type(s) nobody renders: %s",
                    parts[2],
                    ", ".join(dropped),
                )


def run_session(
    config: ClusterConfig, script_lines: Sequence[str], spawn: bool = True
) -> list[Path]:
    """Run one scripted lockstep session; returns the per-consumer log paths."""
    _warn_uncovered_effects(config, script_lines)
    specs = [
        ConsumerSpec(
            name=c.id,
            host=c.host,
            responsibilities=c.responsibilities.to_mask(),
            eye=c.eye,
        )
        for c in config.consumers
    ]
    driver = SessionDriver(
        specs,
        storage=config.storage_path,
        listen_host=config.listen_host,
        listen_port=config.listen_port,
        ipd=config.ipd,
        tracking_port=config.tracking_port,
        spawn=spawn,
    )
    with driver:
        run_script_lines(driver, script_lines)
    return [config.storage_path / f"{c.id}.events.jsonl" for c in config.consumers]


# --- canonical log handling ------------------------------------------------

LogSource = Union[str, Path, Sequence[dict]]


def read_log(path: Union[str, Path]) -> list[dict]:
    events = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events


def _as_events(source: LogSource) -> list[dict]:
    if isinstance(source, (str, Path)):
        return read_log(source)
    return list(source)


def normalize_event(event: dict) -> dict:
    """Strip per-display rendering detail (which eye, from where) so logs
    from differently partitioned clusters become comparable."""
    if event.get("trigger") == "frame":
        return {k: v for k, v in event.items() if k not in ("eye", "viewpoint")}
    return dict(event)


def _sort_key(event: dict):
    color = event.get("color")
    return (
        event["tick"],
        event["path"],
        event["type"],
        event["trigger"],
        event["param"],
        tuple(color) if color is not None else (),
    )


def merge_logs(sources: Sequence[LogSource]) -> list[dict]:
    """One canonical event stream from any cluster partitioning.

    Frame events lose their eye/viewpoint tags and exact duplicates collapse
    (stereo pairs both render every geo, as does a mono display); everything
    else keeps its multiplicity.  The result is fully ordered.
    """
    merged: list[dict] = []
    seen_frames: set[str] = set()
    for source in sources:
        for event in _as_events(source):
            event = normalize_event(event)
            if event.get("trigger") == "frame":
                key = json.dumps(event, sort_keys=True)
                if key in seen_frames:
                    continue
                seen_frames.add(key)
            merged.append(event)
    merged.sort(key=_sort_key)
    return merged


@dataclass(frozen=True)
class Divergence:
    index: int
    left: Optional[dict]
    right: Optional[dict]
    reason: str


def _close(a: float, b: float, tolerance: float) -> bool:
    return abs(a - b) <= tolerance


def compare_logs(
    a: Sequence[dict], b: Sequence[dict], tolerance: float = 1e-6
) -> Optional[Divergence]:
    """First event where two canonical streams disagree, or None.

    Numeric payloads (param, color channels) compare within the tolerance;
    everything else must match exactly.
    """
    for i, (ea, eb) in enumerate(zip(a, b)):
        reason = _event_mismatch(ea, eb, tolerance)
        if reason is not None:
            return Divergence(index=i, left=ea, right=eb, reason=reason)
    if len(a) != len(b):
        i = min(len(a), len(b))
        longer = "left" if len(a) > len(b) else "right"
        return Divergence(
            index=i,
            left=a[i] if i < len(a) else None,
            right=b[i] if i < len(b) else None,
            reason=f"{longer} log has {abs(len(a) - len(b))} extra event(s)",
        )
    return None


def _event_mismatch(a: dict, b: dict, tolerance: float) -> Optional[str]:
    if a.keys() != b.keys():
        return f"field sets differ: {sorted(a.keys())} vs {sorted(b.keys())}"
    for key in a:
        va, vb = a[key], b[key]
        if key == "param":
            if not _close(va, vb, tolerance):
                return f"param differs by {abs(va - vb):g}"
        elif key in ("color", "viewpoint"):
            if len(va) != len(vb) or any(
                not _close(x, y, tolerance) for x, y in zip(va, vb)
            ):
                return f"{key} differs"
        elif va != vb:
            return f"{key} differs: {va!r} vs {vb!r}"
    return None
