"""External classifier protocol: line-delimited JSON over pipes or TCP.

The evaluator side (e.g. a wrapper around a real vision model) speaks a
minimal request/response protocol:

    evaluator -> toolkit   {"hello": {"classes": <int>}}          on start
    toolkit -> evaluator   {"id": <int>, "width": W, "height": H,
                            "pixels_b64": <base64 RGB bytes>}
    evaluator -> toolkit   {"id": <int>, "label": <int>}

Responses may arrive in any order. The toolkit never imposes a model or
preprocessing; whatever the evaluator does with the pixels is its own
business.
"""

from __future__ import annotations

import base64
import json
import socket
import subprocess
from typing import Optional

import numpy as np

__all__ = ["ExternalClassifier", "EvaluatorProtocolError"]


class EvaluatorProtocolError(RuntimeError):
    """Protocol failure; carries any labels collected before the failure."""

    def __init__(self, message: str, partial_labels: Optional[dict] = None):
        super().__init__(message)
        self.partial_labels = partial_labels or {}


class ExternalClassifier:
    """Client for an external classifier process or TCP service."""

    def __init__(self, command=None, host: Optional[str] = None,
                 port: Optional[int] = None, timeout: float = 60.0):
        if (command is None) == (host is None):
            raise ValueError("specify exactly one of command or host/port")
        self._proc = None
        self._sock = None
        if command is not None:
            self._proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
            self._write = self._proc.stdin.write
            self._readline = self._proc.stdout.readline
        else:
            self._sock = socket.create_connection((host, port), timeout=timeout)
            self._file = self._sock.makefile("rw", buffering=1)
            self._write = self._file.write
            self._readline = self._file.readline
        self.classes = self._handshake()

    def _handshake(self) -> int:
        line = self._readline()
        if not line:
            raise EvaluatorProtocolError("evaluator closed before handshake")
        try:
            hello = json.loads(line)["hello"]
            return int(hello["classes"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise EvaluatorProtocolError(f"bad handshake line {line!r}") from exc

    def classify_batch(self, images) -> np.ndarray:
        """Send every image, collect labels (responses may be unordered)."""
        labels: dict[int, int] = {}
        try:
            for i, img in enumerate(images):
                img = np.ascontiguousarray(img, dtype=np.uint8)
                request = {
                    "id": i,
                    "width": int(img.shape[1]),
                    "height": int(img.shape[0]),
                    "pixels_b64": base64.b64encode(img.tobytes()).decode("ascii"),
                }
                self._write(json.dumps(request) + "\n")
            n = len(images)
            while len(labels) < n:
                line = self._readline()
                if not line:
                    raise EvaluatorProtocolError(
                        f"evaluator closed after {len(labels)}/{n} responses",
                        partial_labels=labels,
                    )
                reply = json.loads(line)
                labels[int(reply["id"])] = int(reply["label"])
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise EvaluatorProtocolError(
                f"protocol failure: {exc}", partial_labels=labels
            ) from exc
        return np.array([labels[i] for i in range(len(images))], dtype=np.int64)

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            self._proc.wait(timeout=10)
            self._proc = None
        if self._sock is not None:
            self._file.close()
            self._sock.close()
            self._sock = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
