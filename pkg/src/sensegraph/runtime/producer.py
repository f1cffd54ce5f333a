"""Session producer: broadcasts one total order of messages to every display.

The producer listens on one TCP socket, spawns (or just waits for) the
consumer processes, and runs the session in lockstep: a scene load blocks
until every consumer reported SceneLoaded, a tick blocks until every
consumer acked it.  Lockstep is what makes multi-display runs byte-for-byte
reproducible, and at interactive tick rates the round trip is cheap.
"""

from __future__ import annotations

import logging
import os
import socket
import subprocess
import sys
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

from ..tracking import TrackingReceiver, gesture_window_tracker
from .. import wire
from .consumer import DEFAULT_IPD

log = logging.getLogger(__name__)

_LOOPBACK_HOSTS = {"127.0.0.1", "localhost", "::1"}


class ScriptError(ValueError):
    """A session script line that cannot be turned into a message."""


class SessionError(RuntimeError):
    """A live session failure: timeout, consumer death, failed load."""


@dataclass(frozen=True)
class ConsumerSpec:
    name: str
    host: str
    responsibilities: int  # wire bitmask
    eye: str = "mono"


def parse_script_line(line: str, next_tick: int) -> Optional[wire.Message]:
    """One script line to one message; blank lines and # comments give None.

    The tick counter lives with the caller: a "tick" line gets stamped with
    next_tick, and the caller advances the counter once the message is out.
    """
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    parts = text.split()
    verb, args = parts[0], parts[1:]
    try:
        if verb == "viewpoint":
            x, y, z, qx, qy, qz, qw = (float(a) for a in _arity(verb, args, 7))
            return wire.ViewpointUpdate(position=(x, y, z), rotation_quat=(qx, qy, qz, qw))
        if verb == "pick":
            ox, oy, oz, dx, dy, dz = (float(a) for a in _arity(verb, args, 6))
            return wire.Pick(origin=(ox, oy, oz), direction=(dx, dy, dz))
        if verb == "mode":
            (raw,) = _arity(verb, args, 1)
            mode = int(raw)
            if not 0 <= mode <= 255:
                raise ScriptError(f"mode {mode} does not fit one byte")
            return wire.ModeSwitch(mode=mode)
        if verb == "animate":
            path, ax, ay, az, rad = _arity(verb, args, 5)
            return wire.PlayAnimation(
                target_path=path,
                axis=(float(ax), float(ay), float(az)),
                rad_per_tick=float(rad),
            )
        if verb == "gesture":
            (kind,) = _arity(verb, args, 1)
            codes = {"point": wire.GESTURE_POINT, "swipe": wire.GESTURE_SWIPE}
            if kind not in codes:
                raise ScriptError(f"unknown gesture {kind!r} (expected point or swipe)")
            return wire.Gesture(gesture_id=codes[kind])
        if verb == "tick":
            _arity(verb, args, 0)
            return wire.Tick(tick=next_tick)
        if verb == "load":
            scene, mapping = _arity(verb, args, 2)
            return wire.LoadScene(scene_path=scene, mapping_path=mapping)
    except ValueError as exc:
        raise ScriptError(f"bad {verb} command {text!r}: {exc}") from exc
    raise ScriptError(f"unknown command verb {verb!r}")


def _arity(verb: str, args: list[str], n: int) -> list[str]:
    if len(args) != n:
        raise ScriptError(f"{verb} takes {n} argument(s), got {len(args)}")
    return args


class _Connection:
    def __init__(self, spec: ConsumerSpec, sock: socket.socket):
        self.spec = spec
        self.sock = sock
        self.alive = True
        self.scene_status: Optional[int] = None
        self.last_ack_tick = -1


class SessionDriver:
    """Owns the producer socket, the consumer processes, and the total order.

    Commands arrive as script-grammar lines (from a file or a console) and
    leave as broadcast messages.  Feedback from every consumer accumulates in
    arrival order, tagged with the consumer name.
    """

    def __init__(
        self,
        consumers: Sequence[ConsumerSpec],
        storage: Path,
        listen_host: str = "127.0.0.1",
        listen_port: int = 0,
        ipd: float = DEFAULT_IPD,
        tracking_port: Optional[int] = None,
        spawn: bool = True,
        barrier_timeout: float = 10.0,
        on_feedback: Optional[Callable[[str, wire.Message], None]] = None,
    ):
        if not consumers:
            raise SessionError("a session needs at least one consumer")
        self.specs = list(consumers)
        self.storage = Path(storage)
        self.listen_host = listen_host
        self.listen_port = listen_port
        self.ipd = ipd
        self.tracking_port = tracking_port
        self.spawn = spawn
        self.barrier_timeout = barrier_timeout
        self.on_feedback = on_feedback

        self.next_tick = 0
        self.feedback: list[tuple[str, wire.Message]] = []
        self._cond = threading.Condition()
        self._send_lock = threading.Lock()
        self._connections: dict[int, _Connection] = {}
        self._processes: list[subprocess.Popen] = []
        self._server: Optional[socket.socket] = None
        self._readers: list[threading.Thread] = []
        self._tracker: Optional[TrackingReceiver] = None
        self._started = False
        self._closed = False

    # -- lifecycle ----------------------------------------------------------

    def __enter__(self) -> "SessionDriver":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()

    @property
    def port(self) -> int:
        if self._server is None:
            raise SessionError("session not started")
        return self._server.getsockname()[1]

    def start(self, connect_timeout: float = 5.0) -> None:
        server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind((self.listen_host, self.listen_port))
        server.listen(len(self.specs))
        self._server = server

        if self.spawn:
            for index, spec in enumerate(self.specs):
                self._processes.append(self._spawn(index, spec))

        try:
            self._accept_all(connect_timeout)
        except Exception:
            self.stop()
            raise

        for index, conn in self._connections.items():
            thread = threading.Thread(
                target=self._reader, args=(index, conn), name=f"reader-{conn.spec.name}",
                daemon=True,
            )
            thread.start()
            self._readers.append(thread)

        if self.tracking_port is not None:
            push = gesture_window_tracker()
            def on_samples(frame, samples):
                for sample in samples:
                    kind = push(sample)
                    if kind is not None:
                        try:
                            self.command(f"gesture {kind.value}")
                        except SessionError as exc:
                            log.warning("tracker gesture dropped: %s", exc)
            self._tracker = TrackingReceiver(self.tracking_port, on_samples)
            self._tracker.start()

        self._started = True

    def _spawn(self, index: int, spec: ConsumerSpec) -> subprocess.Popen:
        if spec.host not in _LOOPBACK_HOSTS:
            raise SessionError(
                f"consumer {spec.name!r} lives on {spec.host}; this launcher only "
                "spawns loopback consumers (start remote ones by hand)"
            )
        package_root = Path(__file__).resolve().parent.parent.parent
        env = dict(os.environ)
        env["PYTHONPATH"] = str(package_root) + os.pathsep + env.get("PYTHONPATH", "")
        argv = [
            sys.executable,
            "-m",
            "sensegraph.runtime.consumer_proc",
            "--host", self.listen_host,
            "--port", str(self.port),
            "--name", spec.name,
            "--index", str(index),
            "--responsibilities", str(spec.responsibilities),
            "--eye", spec.eye,
            "--storage", str(self.storage),
            "--ipd", str(self.ipd),
        ]
        return subprocess.Popen(argv, env=env, stdout=subprocess.DEVNULL)

    def _accept_all(self, timeout: float) -> None:
        assert self._server is not None
        self._server.settimeout(timeout)
        expected = set(range(len(self.specs)))
        while expected:
            try:
                sock, _ = self._server.accept()
            except socket.timeout:
                missing = ", ".join(self.specs[i].name for i in sorted(expected))
                raise SessionError(f"consumers never connected: {missing}") from None
            sock.settimeout(timeout)
            hello = self._read_hello(sock)
            if hello.consumer_id not in expected:
                sock.close()
                raise SessionError(f"unexpected hello from consumer id {hello.consumer_id}")
            spec = self.specs[hello.consumer_id]
            if hello.responsibilities != spec.responsibilities:
                sock.close()
                raise SessionError(
                    f"consumer {spec.name!r} announced responsibilities "
                    f"{hello.responsibilities}, expected {spec.responsibilities}"
                )
            expected.discard(hello.consumer_id)
            sock.settimeout(None)
            self._connections[hello.consumer_id] = _Connection(spec, sock)

    @staticmethod
    def _read_hello(sock: socket.socket) -> wire.Hello:
        decoder = wire.StreamDecoder()
        while True:
            chunk = sock.recv(4096)
            if not chunk:
                raise SessionError("consumer hung up before Hello")
            messages = decoder.feed(chunk)
            if messages:
                first = messages[0]
                if not isinstance(first, wire.Hello):
                    raise SessionError(f"expected Hello, got {type(first).__name__}")
                return first

    def stop(self) -> None:
        if self._closed:
            return
        self._closed = True
        if self._tracker is not None:
            self._tracker.stop()
        for conn in self._connections.values():
            try:
                conn.sock.shutdown(socket.SHUT_WR)
            except OSError:
                pass
        for proc in self._processes:
            try:
                proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
        for thread in self._readers:
            thread.join(timeout=2.0)
        for conn in self._connections.values():
            conn.sock.close()
        if self._server is not None:
            self._server.close()

    # -- command path -------------------------------------------------------

    def command(self, line: str) -> Optional[wire.Message]:
        """Parse and execute one script line; returns the message sent, if any."""
        if not self._started or self._closed:
            raise SessionError("session is not running")
        msg = parse_script_line(line, self.next_tick)
        if msg is None:
            return None
        self.dispatch(msg)
        return msg

    def dispatch(self, msg: wire.Message) -> None:
        """Broadcast one message and run its barrier."""
        with self._send_lock:
            if isinstance(msg, wire.LoadScene):
                with self._cond:
                    for conn in self._connections.values():
                        conn.scene_status = None
                self._broadcast(msg)
                self._await(
                    lambda c: c.scene_status is not None,
                    f"SceneLoaded for {msg.scene_path}",
                )
                failed = [
                    c.spec.name
                    for c in self._connections.values()
                    if c.scene_status != 0
                ]
                if failed:
                    raise SessionError(f"scene load failed on: {', '.join(failed)}")
            elif isinstance(msg, wire.Tick):
                tick = msg.tick
                self._broadcast(msg)
                self._await(lambda c: c.last_ack_tick >= tick, f"ack of tick {tick}")
                self.next_tick = tick + 1
            else:
                self._broadcast(msg)

    def _broadcast(self, msg: wire.Message) -> None:
        payload = wire.encode_message(msg)
        for conn in self._connections.values():
            if not conn.alive:
                raise SessionError(f"consumer {conn.spec.name!r} is gone")
            try:
                conn.sock.sendall(payload)
            except OSError as exc:
                conn.alive = False
                raise SessionError(f"send to {conn.spec.name!r} failed: {exc}") from exc

    def _await(self, predicate: Callable[[_Connection], bool], what: str) -> None:
        deadline = self.barrier_timeout
        with self._cond:
            ok = self._cond.wait_for(
                lambda: all(
                    predicate(c) or not c.alive for c in self._connections.values()
                ),
                timeout=deadline,
            )
            dead = [c.spec.name for c in self._connections.values() if not c.alive]
            if dead:
                raise SessionError(f"consumer(s) died waiting for {what}: {', '.join(dead)}")
            if not ok:
                raise SessionError(f"timed out waiting for {what}")

    # -- feedback path ------------------------------------------------------

    def _reader(self, index: int, conn: _Connection) -> None:
        decoder = wire.StreamDecoder()
        try:
            while True:
                chunk = conn.sock.recv(65536)
                if not chunk:
                    break
                for msg in decoder.feed(chunk):
                    self._on_message(conn, msg)
        except (OSError, wire.ProtocolError) as exc:
            log.warning("reader for %s stopped: %s", conn.spec.name, exc)
        with self._cond:
            conn.alive = False
            self._cond.notify_all()

    def _on_message(self, conn: _Connection, msg: wire.Message) -> None:
        with self._cond:
            if isinstance(msg, wire.SceneLoaded):
                conn.scene_status = msg.status
            elif isinstance(msg, wire.Ack):
                if msg.acked_type == wire.TYPE_BYTES[wire.Tick] and msg.status == 0:
                    conn.last_ack_tick = max(conn.last_ack_tick, msg.tick)
            self.feedback.append((conn.spec.name, msg))
            self._cond.notify_all()
        if self.on_feedback is not None:
            try:
                self.on_feedback(conn.spec.name, msg)
            except Exception:
                log.exception("feedback hook failed")

    def feedback_since(self, cursor: int) -> tuple[int, list[tuple[str, wire.Message]]]:
        with self._cond:
            items = self.feedback[cursor:]
            return cursor + len(items), items


def run_script_lines(driver: SessionDriver, lines: Sequence[str]) -> int:
    """Feed a whole script through a started driver; returns ticks executed."""
    ticks = 0
    for number, line in enumerate(lines, start=1):
        try:
            msg = driver.command(line)
        except ScriptError as exc:
            raise ScriptError(f"line {number}: {exc}") from exc
        if isinstance(msg, wire.Tick):
            ticks += 1
    return ticks
