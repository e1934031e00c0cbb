"""Invocation boundary to opaque native-side functions.

Requests and responses travel as canonical JSON framed by a 4-byte
little-endian length.  The same codec rides two transports: a persistent
subprocess (stdin/stdout) and an in-process shared library exposing a single
``mudep_exec`` entry point.  A handle is strictly single-threaded; the two
calls of one operation unit are always serialized on it.
"""

from __future__ import annotations

import ctypes
import json
import logging
import os
import select
import struct
import subprocess
import time
from dataclasses import dataclass, field

from mudep.errors import LoadError, SchemaError
from mudep import typesys
from mudep.typesys import TypeRegistry, TypeDesc, Value

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 2.0  # seconds per call
MAX_FRAME = 64 * 1024 * 1024

LIST_FUNCTION = "__list__"  # reserved probe request name


# ---------------------------------------------------------------------------
# Signatures and manifest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionSig:
    name: str
    is_static: bool
    receiver_type: str | None  # record name; occupies slot 0 when present
    params: tuple[TypeDesc, ...]
    return_type: TypeDesc | None  # None = void

    def __post_init__(self):
        if not self.is_static and self.receiver_type is None:
            raise SchemaError(f"non-static function {self.name!r} needs a receiver type")

    def arg_types(self, reg: TypeRegistry) -> list[TypeDesc]:
        """Declared slot types, receiver first for non-static functions."""
        slots = [] if self.is_static else [reg.record(self.receiver_type)]
        return slots + list(self.params)


def parse_manifest(doc: dict | list, reg: TypeRegistry) -> list[FunctionSig]:
    """Read a manifest document: either a bare list of function entries or
    an object with "types" (registered first) and "functions"."""
    if isinstance(doc, dict):
        typesys.register_types(doc.get("types", []), reg)
        entries = doc.get("functions", [])
    else:
        entries = doc
    sigs = []
    for e in entries:
        ret = e.get("returns")
        sigs.append(FunctionSig(
            name=e["name"],
            is_static=bool(e.get("static", True)),
            receiver_type=e.get("receiver"),
            params=tuple(typesys.typedesc_from_json(p, reg) for p in e.get("params", [])),
            return_type=None if ret in (None, {"kind": "void"}) else typesys.typedesc_from_json(ret, reg),
        ))
    return sigs


def load_manifest(path: str, reg: TypeRegistry) -> list[FunctionSig]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_manifest(json.load(f), reg)


# ---------------------------------------------------------------------------
# Framing
# ---------------------------------------------------------------------------

def encode_frame(payload: dict) -> bytes:
    body = json.dumps(payload, separators=(",", ":"), sort_keys=True).encode("utf-8")
    return struct.pack("<I", len(body)) + body


def decode_frame(buf: bytes) -> dict:
    if len(buf) < 4:
        raise SchemaError("frame shorter than its length header")
    (n,) = struct.unpack("<I", buf[:4])
    if n > MAX_FRAME or len(buf) < 4 + n:
        raise SchemaError(f"bad frame length {n}")
    return json.loads(buf[4:4 + n].decode("utf-8"))


# ---------------------------------------------------------------------------
# Responses
# ---------------------------------------------------------------------------

@dataclass
class ExecResponse:
    status: str  # ok | fault | timeout
    ret: Value | None = None
    args_post: list[Value] = field(default_factory=list)
    log: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------

@dataclass
class SubprocessBackend:
    """Callee runs as a child process speaking frames on stdin/stdout."""

    argv: list[str]
    env: dict | None = None


@dataclass
class InProcessBackend:
    """Callee is a shared library with mudep_exec/mudep_free entry points.

    No hard timeout is possible in-process; use the subprocess backend for
    callees that may hang.
    """

    library_path: str


class _SubprocessTransport:
    def __init__(self, backend: SubprocessBackend):
        self._backend = backend
        self._proc: subprocess.Popen | None = None

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            env = dict(os.environ, **(self._backend.env or {}))
            self._proc = subprocess.Popen(
                self._backend.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, env=env)
        return self._proc

    def _read_exact(self, n: int, deadline: float) -> bytes | None:
        """Read n bytes from the child's stdout before deadline, else None."""
        fd = self._proc.stdout.fileno()
        chunks = bytearray()
        while len(chunks) < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            r, _, _ = select.select([fd], [], [], remaining)
            if not r:
                return None
            data = os.read(fd, n - len(chunks))
            if not data:  # child closed stdout (crash/exit)
                raise BrokenPipeError("callee closed its output")
            chunks.extend(data)
        return bytes(chunks)

    def roundtrip(self, frame: bytes, budget: float) -> tuple[str, bytes | None, str]:
        proc = self._ensure()
        deadline = time.monotonic() + budget
        try:
            proc.stdin.write(frame)
            proc.stdin.flush()
            header = self._read_exact(4, deadline)
            if header is None:
                self.kill()
                return "timeout", None, f"no response within {budget:.3f}s"
            (n,) = struct.unpack("<I", header)
            if n > MAX_FRAME:
                self.kill()
                return "fault", None, f"oversized response frame ({n} bytes)"
            body = self._read_exact(n, deadline)
            if body is None:
                self.kill()
                return "timeout", None, f"truncated response after {budget:.3f}s"
            return "ok", body, ""
        except (BrokenPipeError, OSError) as e:
            self.kill()
            return "fault", None, f"callee process failed: {e}"

    def kill(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except Exception:
                pass
            self._proc = None

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=1)
            except Exception:
                self.kill()
        self._proc = None


class _InProcessTransport:
    def __init__(self, backend: InProcessBackend):
        self._lib = ctypes.CDLL(backend.library_path)
        self._exec = self._lib.mudep_exec
        self._exec.argtypes = [ctypes.c_char_p, ctypes.c_size_t, ctypes.POINTER(ctypes.c_size_t)]
        self._exec.restype = ctypes.c_void_p
        self._free = self._lib.mudep_free
        self._free.argtypes = [ctypes.c_void_p]
        self._free.restype = None

    def roundtrip(self, frame: bytes, budget: float) -> tuple[str, bytes | None, str]:
        out_len = ctypes.c_size_t(0)
        ptr = self._exec(frame, len(frame), ctypes.byref(out_len))
        if not ptr:
            return "fault", None, "mudep_exec returned no buffer"
        try:
            buf = ctypes.string_at(ptr, out_len.value)
        finally:
            self._free(ptr)
        # The returned buffer is itself a frame; strip the header here.
        if len(buf) < 4:
            return "fault", None, "short in-process response"
        return "ok", buf[4:], ""

    def kill(self) -> None:
        pass

    def close(self) -> None:
        pass


# ---------------------------------------------------------------------------
# Handle
# ---------------------------------------------------------------------------

class ExecutorHandle:
    def __init__(self, transport, reg: TypeRegistry, sigs: dict[str, FunctionSig]):
        self._transport = transport
        self._reg = reg
        self._sigs = sigs
        self.calls = 0

    def functions(self) -> list[str]:
        return sorted(self._sigs)

    def sig(self, name: str) -> FunctionSig:
        return self._sigs[name]

    def reset(self) -> None:
        """Drop callee state; the next call starts a fresh process."""
        self._transport.kill()

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _raw(self, request: dict, budget: float) -> tuple[str, dict | None, str]:
        status, body, msg = self._transport.roundtrip(encode_frame(request), budget)
        if status != "ok":
            return status, None, msg
        try:
            return "ok", json.loads(body.decode("utf-8")), ""
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            self._transport.kill()
            return "fault", None, f"undecodable response: {e}"

    def invoke(self, sig: FunctionSig, args: list[Value], budget: float = DEFAULT_BUDGET) -> ExecResponse:
        """Run one call; faults and timeouts are reported, never raised."""
        request = {"function": sig.name, "args": [typesys.value_to_json(a) for a in args]}
        self.calls += 1
        status, doc, msg = self._raw(request, budget)
        if status != "ok":
            return ExecResponse(status, log=msg)
        if doc.get("status") != "ok":
            return ExecResponse("fault", log=doc.get("log", "callee fault"))
        try:
            args_post = [typesys.value_from_json(a, self._reg) for a in doc.get("args_post", [])]
            ret = None
            if sig.return_type is not None:
                ret = typesys.value_from_json(doc["ret"], self._reg)
        except Exception as e:
            return ExecResponse("fault", log=f"malformed response payload: {e}")
        if len(args_post) != len(args):
            return ExecResponse("fault", log="args_post arity mismatch")
        return ExecResponse("ok", ret=ret, args_post=args_post, log=doc.get("log", ""))


Backend = SubprocessBackend | InProcessBackend


def load(backend: Backend, manifest: list[FunctionSig], reg: TypeRegistry,
         budget: float = DEFAULT_BUDGET) -> ExecutorHandle:
    """Open a handle and eagerly verify every manifest function resolves."""
    if isinstance(backend, SubprocessBackend):
        transport = _SubprocessTransport(backend)
    else:
        transport = _InProcessTransport(backend)
    handle = ExecutorHandle(transport, reg, {s.name: s for s in manifest})
    if manifest:
        status, doc, msg = handle._raw({"function": LIST_FUNCTION, "args": []}, budget)
        if status != "ok" or doc.get("status") != "ok":
            transport.close()
            raise LoadError(LIST_FUNCTION, msg or doc.get("log", "probe failed"))
        available = {e["value"] for e in doc["ret"]["elems"]}
        missing = sorted(s.name for s in manifest if s.name not in available)
        if missing:
            transport.close()
            raise LoadError(missing[0], f"{len(missing)} manifest function(s) unresolved: {', '.join(missing)}")
    return handle
