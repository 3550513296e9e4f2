"""Process lifecycle: the timeline loop, OSC wiring, and the WebSocket
bridge the control UI connects to.

The timeline thread owns the engine.  OSC receive threads and WS clients
only enqueue commands; snapshots flow the other way as immutable JSON
published by the timeline after each iteration.
"""

from __future__ import annotations

import asyncio
import json
import logging
import queue
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .clock import WallClock
from .commands import CommandError, DEFAULT_CC_MAP, apply_command, cc_to_command
from .engine import Emission, LooperEngine
from .generator import make_generator
from .model import Tempo, TimeSignature
from .transport import LoopSpec
from . import osc

log = logging.getLogger(__name__)

# How long the timeline waits on the inbound queue between scheduler
# deadlines; bounds input latency while idle.
IDLE_WAIT_S = 0.01
SNAPSHOT_MIN_INTERVAL_MS = 50.0


@dataclass
class EngineConfig:
    bars: int = 2
    numerator: int = 4
    denominator: int = 4
    qpm: float = 120.0
    osc_listen: Tuple[str, int] = ("127.0.0.1", 57120)
    osc_send: Optional[Tuple[str, int]] = ("127.0.0.1", 57110)
    ws_port: int = 8765
    generator: str = "stub"
    generator_endpoint: Optional[Tuple[str, int]] = None
    generator_timeout_s: float = 5.0
    seed: Optional[int] = None
    threshold: int = 16
    octave_align: bool = False
    gate_cc: Optional[int] = None
    cc_map: Dict[int, str] = field(default_factory=lambda: dict(DEFAULT_CC_MAP))
    log_level: str = "INFO"

    def loop_spec(self) -> LoopSpec:
        return LoopSpec(
            self.bars,
            TimeSignature(self.numerator, self.denominator),
            Tempo(self.qpm),
        )

    def effective_cc_map(self) -> Dict[int, str]:
        cc_map = dict(self.cc_map)
        if self.gate_cc is not None:
            cc_map = {c: n for c, n in cc_map.items() if n != "gate"}
            cc_map[self.gate_cc] = "gate"
        return cc_map


class Daemon:
    """Runs the engine with OSC and WebSocket frontends until stopped."""

    def __init__(self, config: EngineConfig):
        self.config = config
        config.loop_spec()  # validate structure up front
        self.engine = LooperEngine(
            spec=config.loop_spec(),
            threshold=config.threshold,
            seed=config.seed,
            octave_align=config.octave_align,
            generator=make_generator(
                config.generator, config.generator_endpoint,
                config.generator_timeout_s,
            ),
            generation="worker",
        )
        self.clock = WallClock()
        self.inbound: "queue.Queue[dict]" = queue.Queue()
        self._cc_map = config.effective_cc_map()
        self._stop = threading.Event()
        self._snapshot_lock = threading.Lock()
        self._snapshot_json: bytes = b"{}"
        self._osc: Optional[osc.UdpTransport] = None
        self._ws: Optional[WsBridge] = None
        self._timeline: Optional[threading.Thread] = None
        self._publish_snapshot()

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        self._osc = osc.UdpTransport(
            listen=self.config.osc_listen,
            send_to=self.config.osc_send,
            on_message=self._on_osc,
        )
        self._osc.start()
        self._ws = WsBridge(self, self.config.ws_port)
        self._ws.start()
        log.info(
            "OSC listening on %s:%s, WebSocket on port %s",
            self.config.osc_listen[0], self._osc.bound_port, self._ws.bound_port,
        )
        self._timeline = threading.Thread(
            target=self._timeline_loop, name="timeline", daemon=True
        )
        self._timeline.start()

    def shutdown(self) -> None:
        """Stop playback (flushing note-offs), then tear everything down."""
        self.inbound.put({"cmd": "stop"})
        self._stop.set()
        if self._timeline is not None:
            self._timeline.join(timeout=2.0)
        if self._osc is not None:
            self._osc.stop()
        if self._ws is not None:
            self._ws.stop()
        self.engine.close()

    def run_forever(self) -> None:
        self.start()
        try:
            self._stop.wait()
        except KeyboardInterrupt:
            pass
        finally:
            self.shutdown()

    def request_stop(self) -> None:
        self._stop.set()

    # -- inbound paths ------------------------------------------------------

    def submit(self, command: dict) -> None:
        """Thread-safe entry point used by OSC, WS, and signals alike."""
        self.inbound.put(command)

    def _on_osc(self, message: osc.OscMessage) -> None:
        try:
            if message.address == osc.ADDR_NOTEON:
                pitch, velocity = message.args
                if velocity == 0:
                    self.submit({"cmd": "note_off", "pitch": pitch})
                else:
                    self.submit({"cmd": "note_on", "pitch": pitch,
                                 "velocity": velocity})
            elif message.address == osc.ADDR_NOTEOFF:
                self.submit({"cmd": "note_off", "pitch": message.args[0]})
            elif message.address == osc.ADDR_CC:
                controller, value = message.args
                command = cc_to_command(controller, value, self._cc_map)
                if command is not None:
                    self.submit(command)
            elif message.address == osc.ADDR_GEN_RESPONSE:
                # responses normally arrive through the worker; accept a
                # directly pushed one as well
                response = osc.response_from_bytes(message.args[0])
                self.submit({"cmd": "_gen_response", "response": response})
            else:
                log.info("dropped message for unknown address %s", message.address)
        except (ValueError, IndexError, TypeError) as exc:
            log.warning("malformed %s message: %s", message.address, exc)

    # -- timeline -----------------------------------------------------------

    def _timeline_loop(self) -> None:
        engine = self.engine
        last_publish = 0.0
        last_rev = -1
        while not self._stop.is_set():
            emissions: List[Emission] = []
            try:
                command = self.inbound.get(timeout=self._wait_s())
            except queue.Empty:
                command = None
            now = self.clock.now_ms()
            if command is not None:
                emissions.extend(self._apply(command, now))
                while True:  # drain without waiting
                    try:
                        command = self.inbound.get_nowait()
                    except queue.Empty:
                        break
                    emissions.extend(self._apply(command, now))
            deadline = engine.next_deadline_ms()
            if deadline is not None and deadline <= now + 1.0:
                self.clock.sleep_until(deadline)
                now = self.clock.now_ms()
            emissions.extend(engine.tick(now))
            self._send(emissions)
            now = self.clock.now_ms()
            if engine.rev != last_rev and now - last_publish >= SNAPSHOT_MIN_INTERVAL_MS:
                self._publish_snapshot()
                last_publish = now
                last_rev = engine.rev
        self._send(engine.stop())
        self._publish_snapshot()

    def _wait_s(self) -> float:
        deadline = self.engine.next_deadline_ms()
        if deadline is None:
            return IDLE_WAIT_S
        remaining = (deadline - self.clock.now_ms()) / 1000.0
        return max(0.0, min(IDLE_WAIT_S, remaining - 0.002))

    def _apply(self, command: dict, now_ms: float) -> List[Emission]:
        if command.get("cmd") == "_gen_response":
            self.engine._handle_response(
                self.engine.machine.request_serial, command["response"]
            )
            return []
        try:
            return apply_command(self.engine, command, now_ms)
        except CommandError as exc:
            log.warning("rejected command %s: %s", command, exc)
            return []

    def _send(self, emissions: List[Emission]) -> None:
        if not emissions or self._osc is None:
            return
        for emission in emissions:
            self._osc.send(osc.play_message(emission.note))

    def _publish_snapshot(self) -> None:
        data = json.dumps(self.engine.snapshot(), sort_keys=True).encode("utf-8")
        with self._snapshot_lock:
            self._snapshot_json = data

    def snapshot_json(self) -> bytes:
        with self._snapshot_lock:
            return self._snapshot_json


class WsBridge:
    """WebSocket mirror of engine state plus a control channel.

    Every connected client receives the same snapshots; commands are fed
    into the daemon's inbound queue, the same path OSC controls take.
    """

    def __init__(self, daemon: Daemon, port: int, host: str = "127.0.0.1"):
        self.daemon = daemon
        self.host = host
        self.port = port
        self.bound_port: Optional[int] = None
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._thread: Optional[threading.Thread] = None
        self._started = threading.Event()
        self._startup_error: Optional[BaseException] = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, name="ws-bridge", daemon=True)
        self._thread.start()
        self._started.wait(timeout=5.0)
        if self._startup_error is not None:
            raise self._startup_error

    def stop(self) -> None:
        if self._loop is not None:
            self._loop.call_soon_threadsafe(self._loop.stop)
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    def _run(self) -> None:
        try:
            import websockets.asyncio.server as ws_server
        except ImportError as exc:  # pragma: no cover
            self._startup_error = exc
            self._started.set()
            return
        loop = asyncio.new_event_loop()
        asyncio.set_event_loop(loop)
        self._loop = loop
        clients = set()

        async def handler(connection):
            clients.add(connection)
            try:
                await connection.send(self.daemon.snapshot_json().decode("utf-8"))
                async for raw in connection:
                    try:
                        command = json.loads(raw)
                        if not isinstance(command, dict) or "cmd" not in command:
                            raise ValueError("commands are objects with a 'cmd' field")
                    except ValueError as exc:
                        await connection.send(json.dumps({"error": str(exc)}))
                        continue
                    self.daemon.submit(command)
            finally:
                clients.discard(connection)

        async def broadcaster():
            last = b""
            while True:
                await asyncio.sleep(SNAPSHOT_MIN_INTERVAL_MS / 1000.0)
                data = self.daemon.snapshot_json()
                if data == last or not clients:
                    continue
                last = data
                text = data.decode("utf-8")
                for connection in list(clients):
                    try:
                        await connection.send(text)
                    except Exception:
                        clients.discard(connection)

        async def main():
            try:
                server = await ws_server.serve(handler, self.host, self.port)
            except OSError as exc:
                self._startup_error = exc
                self._started.set()
                return
            self.bound_port = server.sockets[0].getsockname()[1] if server.sockets else self.port
            self._started.set()
            await broadcaster()

        try:
            loop.run_until_complete(main())
        except RuntimeError:
            pass  # loop.stop() during run_until_complete
        finally:
            loop.close()
