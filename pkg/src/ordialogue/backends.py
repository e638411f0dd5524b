"""Backend contracts for VAD, diarization, ASR, speaker embedding, and text
classification, plus HTTP adapters for hosted models.

Every backend carries a BackendDescriptor. Adapters retry transient HTTP
failures with exponential backoff and bound their own concurrency with a
semaphore sized to max_in_flight.
"""

from __future__ import annotations

import abc
import base64
import threading
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import httpx
import numpy as np

from .timeline import AudioBuffer, AudioChunk, FrameActivitySeries, TimeSpan

if TYPE_CHECKING:  # pragma: no cover
    from .prompts import PromptPayload
    from .reconstruction import DiarizedSegment

BACKEND_KINDS = ("vad", "dia", "asr", "embed", "classify")


class BackendError(Exception):
    """A backend call failed; carries the stage and, when known, the chunk."""

    def __init__(
        self,
        kind: str,
        message: str,
        *,
        chunk_index: int | None = None,
        status: int | None = None,
    ) -> None:
        self.kind = kind
        self.chunk_index = chunk_index
        self.status = status
        where = f" (chunk {chunk_index})" if chunk_index is not None else ""
        code = f" [status {status}]" if status is not None else ""
        super().__init__(f"{kind} backend failed{where}{code}: {message}")


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str
    id: str
    max_in_flight: int = 1
    config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


class Backend(abc.ABC):
    """Common surface: a descriptor naming the model and its concurrency limit."""

    @property
    @abc.abstractmethod
    def descriptor(self) -> BackendDescriptor: ...

    @property
    def max_in_flight(self) -> int:
        return self.descriptor.max_in_flight


class VadBackend(Backend):
    @abc.abstractmethod
    def activity(self, chunk: AudioChunk) -> FrameActivitySeries:
        """Per-10ms activity for the chunk, origin at the chunk offset."""


class DiarizationBackend(Backend):
    @abc.abstractmethod
    def diarize(self, chunk: AudioChunk) -> "list[DiarizedSegment]":
        """Speaker-labelled segments with spans in absolute recording time."""


class AsrBackend(Backend):
    @abc.abstractmethod
    def transcribe(self, chunk: AudioChunk, span: TimeSpan, run_index: int = 0) -> str:
        """Transcript text for the given span of the chunk."""


class EmbeddingBackend(Backend):
    @abc.abstractmethod
    def embed(self, source: object, span: TimeSpan) -> np.ndarray:
        """Fixed-dimension voice embedding for a span of the recording."""

    @property
    @abc.abstractmethod
    def dim(self) -> int: ...


class TextClassifierBackend(Backend):
    @abc.abstractmethod
    def complete(self, payload: "PromptPayload") -> str:
        """Raw text response for a rendered prompt."""


# ---------------------------------------------------------------------------
# Remote HTTP adapters
# ---------------------------------------------------------------------------

_RETRYABLE_STATUS = {408, 429, 500, 502, 503, 504}


@dataclass
class RemoteEndpoint:
    url: str
    timeout_s: float = 60.0
    attempts: int = 3
    backoff_base_s: float = 0.5
    auth_token: str | None = None  # from environment, never config files


class _RemoteCaller:
    """POST JSON with retry/backoff and an in-flight bound."""

    def __init__(self, descriptor: BackendDescriptor, endpoint: RemoteEndpoint) -> None:
        self._descriptor = descriptor
        self._endpoint = endpoint
        self._gate = threading.Semaphore(descriptor.max_in_flight)
        self._client = httpx.Client(timeout=endpoint.timeout_s)

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def post(self, payload: dict, *, chunk_index: int | None = None) -> dict:
        headers = {}
        if self._endpoint.auth_token:
            headers["Authorization"] = f"Bearer {self._endpoint.auth_token}"
        last_status: int | None = None
        last_error = "unreachable"
        with self._gate:
            for attempt in range(self._endpoint.attempts):
                if attempt:
                    time.sleep(self._endpoint.backoff_base_s * (2 ** (attempt - 1)))
                try:
                    response = self._client.post(
                        self._endpoint.url, json=payload, headers=headers
                    )
                except httpx.HTTPError as exc:
                    last_error = str(exc)
                    continue
                if response.status_code in _RETRYABLE_STATUS:
                    last_status = response.status_code
                    last_error = f"transient HTTP {response.status_code}"
                    continue
                if response.status_code != 200:
                    raise BackendError(
                        self._descriptor.kind,
                        f"HTTP {response.status_code}: {response.text[:200]}",
                        chunk_index=chunk_index,
                        status=response.status_code,
                    )
                try:
                    return response.json()
                except ValueError as exc:
                    raise BackendError(
                        self._descriptor.kind,
                        f"malformed payload: {exc}",
                        chunk_index=chunk_index,
                    ) from exc
        raise BackendError(
            self._descriptor.kind, last_error, chunk_index=chunk_index, status=last_status
        )


def _audio_request(chunk: AudioChunk, *, with_samples: bool) -> dict:
    req = {
        "surgery_id": chunk.surgery_id,
        "chunk_index": chunk.chunk_index,
        "offset_s": chunk.offset_s,
        "duration_s": chunk.audio.duration_s,
    }
    if with_samples and isinstance(chunk.audio, AudioBuffer):
        req["sample_rate_hz"] = chunk.audio.sample_rate_hz
        req["channels"] = chunk.audio.channels
        req["samples_b64"] = base64.b64encode(
            chunk.audio.samples.astype(np.float32).tobytes()
        ).decode("ascii")
    return req


class RemoteVad(VadBackend):
    def __init__(self, descriptor: BackendDescriptor, endpoint: RemoteEndpoint) -> None:
        self._caller = _RemoteCaller(descriptor, endpoint)

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._caller.descriptor

    def activity(self, chunk: AudioChunk) -> FrameActivitySeries:
        body = self._caller.post(
            _audio_request(chunk, with_samples=True), chunk_index=chunk.chunk_index
        )
        try:
            return FrameActivitySeries(
                values=np.asarray(body["values"], dtype=np.float64),
                frame_len_s=float(body.get("frame_len_s", 0.01)),
                origin_s=float(body.get("origin_s", chunk.offset_s)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError("vad", f"contract error: {exc}", chunk_index=chunk.chunk_index)


class RemoteDiarizer(DiarizationBackend):
    def __init__(self, descriptor: BackendDescriptor, endpoint: RemoteEndpoint) -> None:
        self._caller = _RemoteCaller(descriptor, endpoint)

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._caller.descriptor

    def diarize(self, chunk: AudioChunk) -> "list[DiarizedSegment]":
        from .reconstruction import DiarizedSegment

        body = self._caller.post(
            _audio_request(chunk, with_samples=True), chunk_index=chunk.chunk_index
        )
        segments = []
        try:
            for item in body["segments"]:
                # Remote services see one chunk at a time and answer in
                # chunk-relative seconds; shift to absolute recording time.
                span = TimeSpan(
                    float(item["start_s"]) + chunk.offset_s,
                    float(item["end_s"]) + chunk.offset_s,
                )
                segments.append(
                    DiarizedSegment(
                        span=span,
                        raw_speaker_label=str(item["label"]),
                        chunk_index=chunk.chunk_index,
                    )
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError("dia", f"contract error: {exc}", chunk_index=chunk.chunk_index)
        return segments


class RemoteAsr(AsrBackend):
    def __init__(self, descriptor: BackendDescriptor, endpoint: RemoteEndpoint) -> None:
        self._caller = _RemoteCaller(descriptor, endpoint)

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._caller.descriptor

    def transcribe(self, chunk: AudioChunk, span: TimeSpan, run_index: int = 0) -> str:
        req = _audio_request(chunk, with_samples=True)
        req.update({"start_s": span.start_s, "end_s": span.end_s, "run_index": run_index})
        body = self._caller.post(req, chunk_index=chunk.chunk_index)
        try:
            return str(body["text"])
        except KeyError as exc:
            raise BackendError("asr", f"contract error: {exc}", chunk_index=chunk.chunk_index)


class RemoteEmbedder(EmbeddingBackend):
    def __init__(
        self, descriptor: BackendDescriptor, endpoint: RemoteEndpoint, dim: int
    ) -> None:
        self._caller = _RemoteCaller(descriptor, endpoint)
        self._dim = dim

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._caller.descriptor

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, source: object, span: TimeSpan) -> np.ndarray:
        req: dict = {"start_s": span.start_s, "end_s": span.end_s}
        if isinstance(source, AudioBuffer):
            clip = source.slice(span.start_s, span.end_s)
            req["sample_rate_hz"] = clip.sample_rate_hz
            req["samples_b64"] = base64.b64encode(
                clip.samples.astype(np.float32).tobytes()
            ).decode("ascii")
        body = self._caller.post(req)
        try:
            vec = np.asarray(body["embedding"], dtype=np.float64)
        except (KeyError, TypeError) as exc:
            raise BackendError("embed", f"contract error: {exc}")
        if vec.shape != (self._dim,):
            raise BackendError(
                "embed", f"dimension mismatch: got {vec.shape}, expected ({self._dim},)"
            )
        return vec


class RemoteClassifier(TextClassifierBackend):
    def __init__(self, descriptor: BackendDescriptor, endpoint: RemoteEndpoint) -> None:
        self._caller = _RemoteCaller(descriptor, endpoint)

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._caller.descriptor

    def complete(self, payload: "PromptPayload") -> str:
        body = self._caller.post(
            {
                "model": self.descriptor.config.get("model", self.descriptor.id),
                "temperature": float(self.descriptor.config.get("temperature", 0.0)),
                "system": payload.system_text,
                "user": payload.user_text,
                "task": payload.task.value,
            }
        )
        try:
            return str(body["text"])
        except KeyError as exc:
            raise BackendError("classify", f"contract error: {exc}")
