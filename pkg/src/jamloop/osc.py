"""OSC 1.0 codec and the application wire schema.

The codec covers plain messages with int32 / float32 / string / blob
arguments (no bundles, no time tags).  The schema table maps application
events to fixed addresses; it is the compatibility contract with any
SuperCollider-style MIDI bridge:

    /midi/noteon  [i pitch, i velocity]     bridge -> engine
    /midi/noteoff [i pitch]                 bridge -> engine
    /midi/cc      [i controller, i value]   bridge -> engine
    /play/note    [i instrument, i pitch, i velocity]   engine -> renderer
    /gen/request  [b serialized request]    engine -> remote generator
    /gen/response [b serialized response]   remote generator -> engine
    /engine/state [b json snapshot]         engine -> monitors

Velocity 0 on /midi/noteon is treated as a note-off, mirroring MIDI
convention.
"""

from __future__ import annotations

import json
import logging
import socket
import struct
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Union

from .improv import GeneratorKind, GeneratorRequest, GeneratorResponse, NoteToken
from .model import (
    BASS,
    CLICK_1,
    CLICK_2,
    CLICK_3,
    CRASH,
    HIHAT,
    KEYS,
    KICK,
    SNARE,
    OutboundNote,
)

log = logging.getLogger(__name__)

OscArg = Union[int, float, str, bytes]

MAX_DATAGRAM = 64 * 1024

# Wire-level instrument ids (stable contract with renderers).
INSTRUMENT_IDS = {
    CLICK_1: 1,
    CLICK_2: 2,
    CLICK_3: 3,
    BASS: 10,
    KEYS: 11,
    KICK: 20,
    SNARE: 21,
    HIHAT: 22,
    CRASH: 23,
}
INSTRUMENT_BY_ID = {v: k for k, v in INSTRUMENT_IDS.items()}

ADDR_NOTEON = "/midi/noteon"
ADDR_NOTEOFF = "/midi/noteoff"
ADDR_CC = "/midi/cc"
ADDR_PLAY = "/play/note"
ADDR_GEN_REQUEST = "/gen/request"
ADDR_GEN_RESPONSE = "/gen/response"
ADDR_STATE = "/engine/state"


class OscEncodeError(ValueError):
    pass


class OscDecodeError(ValueError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class OscMessage:
    address: str
    args: Tuple[OscArg, ...] = ()

    def __post_init__(self) -> None:
        if not self.address.startswith("/"):
            raise OscEncodeError("address must start with '/'")


def _pad_string(s: str) -> bytes:
    raw = s.encode("utf-8") + b"\x00"
    return raw + b"\x00" * (-len(raw) % 4)


def encode(message: OscMessage) -> bytes:
    """Serialize to the OSC 1.0 binary layout (length always % 4 == 0)."""
    tags = ","
    payload = b""
    for arg in message.args:
        if isinstance(arg, bool):
            raise OscEncodeError("bool is not an OSC 1.0 argument type")
        if isinstance(arg, int):
            if not (-(2**31) <= arg < 2**31):
                raise OscEncodeError(f"int32 out of range: {arg}")
            tags += "i"
            payload += struct.pack(">i", arg)
        elif isinstance(arg, float):
            tags += "f"
            payload += struct.pack(">f", arg)
        elif isinstance(arg, str):
            tags += "s"
            payload += _pad_string(arg)
        elif isinstance(arg, bytes):
            tags += "b"
            payload += struct.pack(">i", len(arg))
            payload += arg + b"\x00" * (-len(arg) % 4)
        else:
            raise OscEncodeError(f"unsupported argument type {type(arg).__name__}")
    return _pad_string(message.address) + _pad_string(tags) + payload


def _read_string(data: bytes, offset: int) -> Tuple[str, int]:
    end = data.find(b"\x00", offset)
    if end < 0:
        raise OscDecodeError("unterminated string")
    try:
        value = data[offset:end].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise OscDecodeError(f"invalid utf-8 in string: {exc}") from exc
    next_offset = end + 1
    next_offset += -(next_offset - offset) % 4
    if next_offset > len(data):
        raise OscDecodeError("string padding truncated")
    if data[end:next_offset].strip(b"\x00"):
        raise OscDecodeError("nonzero string padding")
    return value, next_offset


def decode(data: bytes) -> OscMessage:
    """Parse an OSC 1.0 message; raises OscDecodeError, never crashes."""
    if len(data) % 4 != 0:
        raise OscDecodeError(f"length {len(data)} not a multiple of 4")
    if not data:
        raise OscDecodeError("empty buffer")
    address, offset = _read_string(data, 0)
    if not address.startswith("/"):
        raise OscDecodeError(f"address {address!r} does not start with '/'")
    tags, offset = _read_string(data, offset)
    if not tags.startswith(","):
        raise OscDecodeError("type tag string does not start with ','")
    args: List[OscArg] = []
    for tag in tags[1:]:
        if tag == "i":
            if offset + 4 > len(data):
                raise OscDecodeError("truncated int32")
            args.append(struct.unpack_from(">i", data, offset)[0])
            offset += 4
        elif tag == "f":
            if offset + 4 > len(data):
                raise OscDecodeError("truncated float32")
            args.append(struct.unpack_from(">f", data, offset)[0])
            offset += 4
        elif tag == "s":
            value, offset = _read_string(data, offset)
            args.append(value)
        elif tag == "b":
            if offset + 4 > len(data):
                raise OscDecodeError("truncated blob size")
            size = struct.unpack_from(">i", data, offset)[0]
            offset += 4
            if size < 0:
                raise OscDecodeError("negative blob size")
            padded = size + (-size % 4)
            if offset + padded > len(data):
                raise OscDecodeError("truncated blob")
            args.append(data[offset : offset + size])
            offset += padded
        else:
            raise OscDecodeError(f"unsupported type tag {tag!r}")
    if offset != len(data):
        raise OscDecodeError("trailing bytes after arguments")
    return OscMessage(address=address, args=tuple(args))


# ---------------------------------------------------------------------------
# Schema mapping: application events <-> messages
# ---------------------------------------------------------------------------


def note_on_message(pitch: int, velocity: int) -> OscMessage:
    return OscMessage(ADDR_NOTEON, (pitch, velocity))


def note_off_message(pitch: int) -> OscMessage:
    return OscMessage(ADDR_NOTEOFF, (pitch,))


def cc_message(controller: int, value: int) -> OscMessage:
    return OscMessage(ADDR_CC, (controller, value))


def play_message(note: OutboundNote) -> OscMessage:
    return OscMessage(
        ADDR_PLAY, (INSTRUMENT_IDS[note.instrument], note.pitch, note.velocity)
    )


def play_note_from_message(msg: OscMessage) -> OutboundNote:
    instrument_id, pitch, velocity = msg.args
    return OutboundNote(
        instrument=INSTRUMENT_BY_ID[instrument_id], pitch=pitch, velocity=velocity
    )


def state_message(snapshot_json: bytes) -> OscMessage:
    return OscMessage(ADDR_STATE, (snapshot_json,))


# ---------------------------------------------------------------------------
# Generator request/response blob serialization (JSON inside an OSC blob)
# ---------------------------------------------------------------------------


def request_to_bytes(request: GeneratorRequest) -> bytes:
    return json.dumps(
        {
            "kind": request.kind.value,
            "primer": [[t.pitch, t.duration_sixteenths] for t in request.primer],
            "drum_steps": [sorted(s) for s in request.drum_steps],
            "requested_length": request.requested_length,
            "seed": request.seed,
        }
    ).encode("utf-8")


def request_from_bytes(data: bytes) -> GeneratorRequest:
    obj = json.loads(data.decode("utf-8"))
    return GeneratorRequest(
        kind=GeneratorKind(obj["kind"]),
        primer=tuple(NoteToken(p, d) for p, d in obj["primer"]),
        drum_steps=tuple(frozenset(s) for s in obj["drum_steps"]),
        requested_length=obj["requested_length"],
        seed=obj.get("seed"),
    )


def response_to_bytes(response: GeneratorResponse) -> bytes:
    return json.dumps(
        {
            "kind": response.kind.value,
            "melody": [[t.pitch, t.duration_sixteenths] for t in response.melody],
            "drum_steps": [sorted(s) for s in response.drum_steps],
        }
    ).encode("utf-8")


def response_from_bytes(data: bytes) -> GeneratorResponse:
    obj = json.loads(data.decode("utf-8"))
    return GeneratorResponse(
        kind=GeneratorKind(obj["kind"]),
        melody=tuple(NoteToken(p, d) for p, d in obj["melody"]),
        drum_steps=tuple(frozenset(s) for s in obj["drum_steps"]),
    )


def remote_generate(
    request: GeneratorRequest, host: str, port: int, timeout_s: float
) -> GeneratorResponse:
    """Round-trip a request to a remote generator; empty response on
    timeout, transport failure, or a malformed reply."""
    empty = GeneratorResponse(kind=request.kind)
    msg = OscMessage(ADDR_GEN_REQUEST, (request_to_bytes(request),))
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        sock.settimeout(timeout_s)
        try:
            sock.sendto(encode(msg), (host, port))
            data, _ = sock.recvfrom(MAX_DATAGRAM)
        except (OSError, socket.timeout):
            return empty
    try:
        reply = decode(data)
        if reply.address != ADDR_GEN_RESPONSE or len(reply.args) != 1:
            raise OscDecodeError("unexpected reply shape")
        return response_from_bytes(reply.args[0])
    except (OscDecodeError, ValueError, KeyError) as exc:
        log.warning("malformed remote generator payload: %s", exc)
        return empty


def run_generator_server(
    plugin,
    host: str,
    port: int,
    stop: Optional[threading.Event] = None,
    ready: Optional[threading.Event] = None,
) -> None:
    """Serve /gen/request datagrams with a plugin; used to host a generator
    out of process (and by tests)."""
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        sock.bind((host, port))
        sock.settimeout(0.2)
        if ready is not None:
            ready.set()
        while stop is None or not stop.is_set():
            try:
                data, peer = sock.recvfrom(MAX_DATAGRAM)
            except socket.timeout:
                continue
            try:
                msg = decode(data)
                request = request_from_bytes(msg.args[0])
            except (OscDecodeError, ValueError, KeyError, IndexError):
                continue
            response = plugin.generate(request)
            reply = OscMessage(ADDR_GEN_RESPONSE, (response_to_bytes(response),))
            sock.sendto(encode(reply), peer)


# ---------------------------------------------------------------------------
# UDP transport
# ---------------------------------------------------------------------------


@dataclass
class TransportStats:
    received: int = 0
    dropped_malformed: int = 0
    dropped_oversized: int = 0
    dispatch_latencies_ms: List[float] = field(default_factory=list)

    def record_latency(self, ms: float) -> None:
        self.dispatch_latencies_ms.append(ms)
        if len(self.dispatch_latencies_ms) > 10000:
            del self.dispatch_latencies_ms[:5000]


class UdpTransport:
    """Datagram receive loop dispatching decoded messages to a callback,
    plus an outbound send path.

    One receive thread per instance; `on_message` is expected to enqueue
    into the engine's inbound queue and return quickly.
    """

    def __init__(
        self,
        listen: Tuple[str, int],
        send_to: Optional[Tuple[str, int]],
        on_message: Callable[[OscMessage], None],
    ):
        self.listen = listen
        self.send_to = send_to
        self.on_message = on_message
        self.stats = TransportStats()
        self._stop = threading.Event()
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            # absorb bursts; note streams are small but arrive in clumps
            self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 1 << 20)
        except OSError:
            pass
        self._sock.bind(listen)
        self._sock.settimeout(0.2)
        self.bound_port = self._sock.getsockname()[1]
        self._thread = threading.Thread(
            target=self._recv_loop, name="osc-recv", daemon=True
        )

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=2.0)
        self._sock.close()

    def send(self, message: OscMessage) -> None:
        if self.send_to is None:
            return
        data = encode(message)
        if len(data) > MAX_DATAGRAM:
            log.warning("refusing to send oversized datagram (%d bytes)", len(data))
            return
        try:
            self._sock.sendto(data, self.send_to)
        except OSError as exc:
            log.warning("osc send failed: %s", exc)

    def _recv_loop(self) -> None:
        while not self._stop.is_set():
            try:
                data, _ = self._sock.recvfrom(MAX_DATAGRAM)
            except socket.timeout:
                continue
            except OSError:
                if self._stop.is_set():
                    return
                time.sleep(0.05)  # backoff, then retry
                continue
            received_at = time.perf_counter()
            if len(data) >= MAX_DATAGRAM:
                self.stats.dropped_oversized += 1
                log.warning("dropped oversized datagram (%d bytes)", len(data))
                continue
            try:
                msg = decode(data)
            except OscDecodeError as exc:
                self.stats.dropped_malformed += 1
                log.debug("dropped malformed datagram: %s", exc)
                continue
            self.stats.received += 1
            self.on_message(msg)
            self.stats.record_latency((time.perf_counter() - received_at) * 1000.0)
