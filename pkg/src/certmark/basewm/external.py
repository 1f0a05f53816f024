"""Bridge to decoders running in a child process.

Line protocol over the child's stdin/stdout::

    -> HELLO m=<int>          <- OK
    -> DECODE <abs path>      <- LOGITS <m reals>   |   ERR <message>

Images are handed over as raw float32 tensor files so noisy (unclamped)
inputs survive the trip intact.
"""
from __future__ import annotations

import os
import queue
import shlex
import subprocess
import tempfile
import threading

import numpy as np

from ..core import as_array
from ..errors import ChildExit, DecoderTimeout, ProtocolError
from ..imageio import encode_raw
from .contract import Decoder

DEFAULT_TIMEOUT = 30.0
STARTUP_TIMEOUT = 60.0   # model loading can dwarf a single decode
_EOF = object()


class Endpoint:
    """One handshaken child process.

    ``timeout`` bounds each DECODE reply; the handshake gets
    ``startup_timeout`` instead.
    """

    def __init__(self, command, m: int, timeout: float = DEFAULT_TIMEOUT,
                 startup_timeout: float = STARTUP_TIMEOUT):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.m = m
        self.timeout = timeout
        self.lock = threading.Lock()
        self.proc = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1,
        )
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._send(f"HELLO m={m}")
        reply = self._recv(max(startup_timeout, timeout))
        if reply != "OK":
            self.close()
            raise ProtocolError(f"bad handshake reply {reply!r}")

    def _pump(self):
        for line in self.proc.stdout:
            self._lines.put(line.rstrip("\r\n"))
        self._lines.put(_EOF)

    def _send(self, line: str):
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise ChildExit(f"decoder process exited (code {self.proc.poll()})") from exc

    def _recv(self, timeout: float | None = None) -> str:
        timeout = self.timeout if timeout is None else timeout
        try:
            item = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise DecoderTimeout(f"no reply from decoder within {timeout} s") from None
        if item is _EOF:
            self._lines.put(_EOF)
            raise ChildExit(f"decoder process exited (code {self.proc.wait()})")
        return item

    @property
    def alive(self) -> bool:
        return self.proc.poll() is None

    def close(self):
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()


def external_decoder_call(image_path, endpoint: Endpoint) -> np.ndarray:
    """Request logits for one image file from a handshaken endpoint."""
    path = os.path.abspath(str(image_path))
    with endpoint.lock:
        endpoint._send(f"DECODE {path}")
        reply = endpoint._recv()
    head, _, rest = reply.partition(" ")
    if head == "ERR":
        raise ProtocolError(f"decoder error: {rest}")
    if head != "LOGITS":
        raise ProtocolError(f"unexpected reply {reply[:80]!r}")
    try:
        values = np.array([float(t) for t in rest.split()])
    except ValueError:
        raise ProtocolError(f"non-numeric logits in reply {reply[:80]!r}") from None
    if values.size != endpoint.m:
        raise ProtocolError(f"expected {endpoint.m} logits, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise ProtocolError("decoder returned non-finite logits")
    return values


class ExternalDecoder(Decoder):
    """Decoder backed by a small pool of child processes."""

    def __init__(self, command, m: int, timeout: float = DEFAULT_TIMEOUT, pool_size: int = 1):
        self.m = m
        self._pool: queue.Queue = queue.Queue()
        self._endpoints = [Endpoint(command, m, timeout) for _ in range(max(1, pool_size))]
        for ep in self._endpoints:
            self._pool.put(ep)
        self._tmpdir = tempfile.TemporaryDirectory(prefix="certmark-ext-")
        self._counter = 0
        self._counter_lock = threading.Lock()

    def _tmp_path(self) -> str:
        with self._counter_lock:
            self._counter += 1
            n = self._counter
        return os.path.join(self._tmpdir.name, f"img{n}.f32")

    def _one(self, arr: np.ndarray) -> np.ndarray:
        path = self._tmp_path()
        with open(path, "wb") as fh:
            fh.write(encode_raw(arr))
        ep = self._pool.get()
        try:
            return external_decoder_call(path, ep)
        finally:
            self._pool.put(ep)
            os.unlink(path)

    def logits(self, x) -> np.ndarray:
        arr = as_array(x)
        if arr.ndim == 3:
            return self._one(arr)
        return np.stack([self._one(a) for a in arr])

    def close(self):
        for ep in self._endpoints:
            ep.close()
        self._tmpdir.cleanup()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
