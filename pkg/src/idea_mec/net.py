"""Government/consumer exchange over TCP with CFB-encrypted frames.

Wire frame (all integers big-endian)::

    magic   4  b"MEC1"
    version 1  0x01
    command 1  1=ISSUE 2=GRANT 3=CHECK 4=REVOKE
    iv      8
    length  4  ciphertext length
    ciphertext

The plaintext under CFB is a 4-byte checksum (sum of body bytes mod 2**32)
followed by the body. Body fields are each a 2-byte length plus the bytes.

The checksum only catches accidental damage. It is not a MAC, there is no
replay protection, and the header (including the command byte) is not
covered by it.

A response reuses the envelope with the command echoed. Its body is one status
byte followed by fields: the record report on success, a message on error.
"""

from __future__ import annotations

import errno
import logging
import os
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass
from enum import IntEnum

from . import cfb
from .registry import (
    InvalidRecordError,
    RegistryError,
    RegistryStore,
    RevokedError,
    StatusReport,
    StorageError,
    UnknownIdError,
)

log = logging.getLogger(__name__)

MAGIC = b"MEC1"
VERSION = 1
HEADER = struct.Struct(">4sBB8sI")
MAX_CIPHERTEXT = 1 << 20


class Command(IntEnum):
    ISSUE = 1
    GRANT = 2
    CHECK = 3
    REVOKE = 4


class Status(IntEnum):
    OK = 0
    CHECKSUM = 1
    MALFORMED = 2
    UNKNOWN_ID = 3
    REVOKED = 4
    INVALID = 5
    UNKNOWN_COMMAND = 6
    STORAGE = 7


class ProtocolError(Exception):
    pass


class ChecksumError(ProtocolError):
    pass


class RemoteError(Exception):
    """The server answered with a non-OK status."""

    def __init__(self, status: Status, message: str) -> None:
        super().__init__(f"{status.name}: {message}")
        self.status = status
        self.message = message


@dataclass(frozen=True)
class Frame:
    command: int
    iv: bytes
    ciphertext: bytes

    def to_bytes(self) -> bytes:
        return HEADER.pack(MAGIC, VERSION, self.command, self.iv, len(self.ciphertext)) + self.ciphertext


def checksum(body: bytes) -> int:
    return sum(body) & 0xFFFFFFFF


def seal(key: bytes, command: int, body: bytes, iv: bytes) -> Frame:
    ctx = cfb.CfbContext(key, iv)
    try:
        ct = ctx.encrypt(struct.pack(">I", checksum(body)) + body)
    finally:
        ctx.destroy()
    return Frame(command, iv, ct)


def open_frame(key: bytes, frame: Frame) -> bytes:
    """Decrypt a frame and return its body once the checksum verifies."""
    if len(frame.ciphertext) < 4:
        raise ProtocolError("ciphertext shorter than the checksum")
    ctx = cfb.CfbContext(key, frame.iv)
    try:
        pt = ctx.decrypt(frame.ciphertext)
    finally:
        ctx.destroy()
    (expected,) = struct.unpack(">I", pt[:4])
    body = pt[4:]
    if checksum(body) != expected:
        raise ChecksumError("frame checksum mismatch")
    return body


def parse_header(header: bytes) -> tuple[int, bytes, int]:
    magic, version, command, iv, length = HEADER.unpack(header)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported version {version}")
    if length > MAX_CIPHERTEXT:
        raise ProtocolError(f"frame of {length} bytes exceeds limit")
    return command, iv, length


def decode_frame(data: bytes) -> Frame:
    if len(data) < HEADER.size:
        raise ProtocolError("truncated frame header")
    command, iv, length = parse_header(data[: HEADER.size])
    ct = data[HEADER.size :]
    if len(ct) != length:
        raise ProtocolError(f"length field says {length}, got {len(ct)} bytes")
    return Frame(command, iv, ct)


def encode_fields(*fields: bytes) -> bytes:
    out = bytearray()
    for f in fields:
        if len(f) > 0xFFFF:
            raise ValueError("field longer than 65535 bytes")
        out += struct.pack(">H", len(f)) + f
    return bytes(out)


def decode_fields(data: bytes) -> list[bytes]:
    fields, pos = [], 0
    while pos < len(data):
        if pos + 2 > len(data):
            raise ProtocolError("truncated field length")
        (n,) = struct.unpack_from(">H", data, pos)
        pos += 2
        if pos + n > len(data):
            raise ProtocolError("field runs past end of body")
        fields.append(data[pos : pos + n])
        pos += n
    return fields


def issue_body(name: str, age: int) -> bytes:
    return encode_fields(name.encode("utf-8"), struct.pack(">H", age))


def uid_body(unique_id: bytes) -> bytes:
    return encode_fields(unique_id)


def parse_request(command: int, body: bytes) -> tuple:
    fields = decode_fields(body)
    if command == Command.ISSUE:
        if len(fields) != 2 or len(fields[1]) != 2:
            raise ProtocolError("ISSUE expects name and 2-byte age")
        try:
            name = fields[0].decode("utf-8")
        except UnicodeDecodeError:
            raise ProtocolError("name is not UTF-8") from None
        return name, struct.unpack(">H", fields[1])[0]
    if len(fields) != 1 or len(fields[0]) != 8:
        raise ProtocolError("expected a single 8-byte unique ID")
    return (fields[0],)


def report_body(report: StatusReport) -> bytes:
    return bytes([Status.OK]) + encode_fields(
        struct.pack(">Q", report.serial),
        report.unique_id,
        report.name.encode("utf-8"),
        struct.pack(">H", report.age),
        struct.pack(">I", report.facilities),
        report.status.encode("ascii"),
    )


def error_body(status: Status, message: str) -> bytes:
    return bytes([status]) + encode_fields(message.encode("utf-8"))


def parse_response(body: bytes) -> StatusReport:
    """Decode a response body, raising RemoteError for non-OK statuses."""
    if not body:
        raise ProtocolError("empty response body")
    try:
        status = Status(body[0])
    except ValueError:
        raise ProtocolError(f"unknown status byte {body[0]}") from None
    fields = decode_fields(body[1:])
    if status != Status.OK:
        msg = fields[0].decode("utf-8", "replace") if fields else ""
        raise RemoteError(status, msg)
    if len(fields) != 6:
        raise ProtocolError("report must carry 6 fields")
    serial, uid, name, age, fac, state = fields
    try:
        return StatusReport(
            struct.unpack(">Q", serial)[0],
            name.decode("utf-8"),
            struct.unpack(">H", age)[0],
            struct.unpack(">I", fac)[0],
            state.decode("ascii"),
            bytes(uid),
        )
    except (struct.error, UnicodeDecodeError) as exc:
        raise ProtocolError(f"malformed report: {exc}") from None


_ERROR_STATUS = [
    (UnknownIdError, Status.UNKNOWN_ID),
    (RevokedError, Status.REVOKED),
    (InvalidRecordError, Status.INVALID),
    (StorageError, Status.STORAGE),
]


def dispatch(store: RegistryStore, command: int, body: bytes) -> bytes:
    """Apply one decrypted request to the registry and build the response body."""
    try:
        cmd = Command(command)
    except ValueError:
        return error_body(Status.UNKNOWN_COMMAND, f"unknown command {command}")
    try:
        args = parse_request(cmd, body)
    except ProtocolError as exc:
        return error_body(Status.MALFORMED, str(exc))
    try:
        if cmd == Command.ISSUE:
            report = StatusReport.of(store.issue_card(*args))
        elif cmd == Command.GRANT:
            report = StatusReport.of(store.set_voter_flag(*args))
        elif cmd == Command.CHECK:
            report = store.check_overall_status(*args)
        else:
            report = StatusReport.of(store.revoke(*args))
    except RegistryError as exc:
        for cls, status in _ERROR_STATUS:
            if isinstance(exc, cls):
                return error_body(status, str(exc))
        return error_body(Status.STORAGE, str(exc))
    return report_body(report)


def parse_endpoint(endpoint: str | tuple[str, int]) -> tuple[str, int]:
    if isinstance(endpoint, tuple):
        return endpoint
    host, sep, port = endpoint.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {endpoint!r}")
    return host or "127.0.0.1", int(port)


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None if not buf else bytes(buf)
        buf += chunk
    return bytes(buf)


def read_frame(sock: socket.socket) -> Frame | None:
    """Read one frame; None on clean EOF before a header."""
    header = _recv_exact(sock, HEADER.size)
    if header is None:
        return None
    if len(header) < HEADER.size:
        raise ProtocolError("connection closed mid-header")
    command, iv, length = parse_header(header)
    ct = _recv_exact(sock, length) if length else b""
    if ct is None or len(ct) < length:
        raise ProtocolError("connection closed mid-frame")
    return Frame(command, iv, ct)


def _fresh_rand(key: bytes) -> cfb.RandContext:
    return cfb.RandContext(key, os.urandom(cfb.IV_BYTES))


class _Handler(socketserver.BaseRequestHandler):
    server: "G2CServer"

    def handle(self) -> None:
        srv = self.server
        while True:
            try:
                frame = read_frame(self.request)
            except (ProtocolError, OSError) as exc:
                log.info("closing connection from %s: %s", self.client_address, exc)
                return
            if frame is None:
                return
            try:
                body = open_frame(srv.key, frame)
            except ChecksumError as exc:
                reply = error_body(Status.CHECKSUM, str(exc))
            except ProtocolError as exc:
                reply = error_body(Status.MALFORMED, str(exc))
            else:
                with srv.lock:
                    reply = dispatch(srv.store, frame.command, body)
            with srv.lock:
                iv = srv.rand.read(cfb.IV_BYTES)
            self.request.sendall(seal(srv.key, frame.command, reply, iv).to_bytes())


class G2CServer(socketserver.ThreadingTCPServer):
    """Government-side registry server. All registry access goes through one lock."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, store: RegistryStore, key: bytes, endpoint: str | tuple[str, int]) -> None:
        self.store = store
        self.key = bytes(key)
        self.lock = threading.Lock()
        self.rand = _fresh_rand(self.key)
        super().__init__(parse_endpoint(endpoint), _Handler)

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> threading.Thread:
        """Serve on a background thread."""
        t = threading.Thread(target=self.serve_forever, name="g2c-server", daemon=True)
        t.start()
        return t


def serve(store: RegistryStore, key: bytes, endpoint: str | tuple[str, int]) -> None:
    with G2CServer(store, key, endpoint) as server:
        log.info("serving registry on %s", server.endpoint)
        server.serve_forever()


_client_rand: dict[bytes, cfb.RandContext] = {}
_client_lock = threading.Lock()


def _client_iv(key: bytes) -> bytes:
    with _client_lock:
        ctx = _client_rand.get(key)
        if ctx is None:
            ctx = _client_rand[key] = _fresh_rand(key)
        return ctx.read(cfb.IV_BYTES)


def exchange(endpoint: str | tuple[str, int], raw: bytes, timeout: float = 10.0) -> Frame | None:
    """Send raw frame bytes and read back one frame (None if the server hung up)."""
    with socket.create_connection(parse_endpoint(endpoint), timeout=timeout) as sock:
        try:
            sock.sendall(raw)
            sock.shutdown(socket.SHUT_WR)
        except OSError as exc:
            # the server may drop a bad frame before we finish sending
            if not isinstance(exc, (BrokenPipeError, ConnectionResetError)) and exc.errno != errno.ENOTCONN:
                raise
            log.debug("send interrupted: %s", exc)
        try:
            return read_frame(sock)
        except ConnectionResetError:
            return None


def request(
    endpoint: str | tuple[str, int], key: bytes, command: int, body: bytes, timeout: float = 10.0
) -> bytes:
    """One request/response round trip; returns the verified response body."""
    frame = seal(key, command, body, _client_iv(key))
    reply = exchange(endpoint, frame.to_bytes(), timeout)
    if reply is None:
        raise ProtocolError("server closed the connection without replying")
    if reply.command != command:
        raise ProtocolError(f"response echoes command {reply.command}, sent {command}")
    return open_frame(key, reply)


class Client:
    """Consumer-side convenience wrapper returning decoded status reports."""

    def __init__(self, endpoint: str | tuple[str, int], key: bytes, timeout: float = 10.0) -> None:
        self.endpoint = endpoint
        self.key = bytes(key)
        self.timeout = timeout

    def _call(self, command: Command, body: bytes) -> StatusReport:
        return parse_response(request(self.endpoint, self.key, command, body, self.timeout))

    def issue(self, name: str, age: int) -> StatusReport:
        return self._call(Command.ISSUE, issue_body(name, age))

    def grant(self, unique_id: bytes) -> StatusReport:
        return self._call(Command.GRANT, uid_body(unique_id))

    def check(self, unique_id: bytes) -> StatusReport:
        return self._call(Command.CHECK, uid_body(unique_id))

    def revoke(self, unique_id: bytes) -> StatusReport:
        return self._call(Command.REVOKE, uid_body(unique_id))
