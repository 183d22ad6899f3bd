"""Serialized background jobs with monotone state transitions."""
from __future__ import annotations

import threading
import time
import traceback
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..errors import EffectLabError

_STATES = ("queued", "running", "done", "failed")
_ORDER = {s: i for i, s in enumerate(_STATES)}


class JobNotFound(EffectLabError):
    """No job registered under the requested id."""


@dataclass
class Job:
    """One unit of background work; state only ever moves forward."""

    job_id: str
    kind: str
    state: str = "queued"
    created_at: float = field(default_factory=time.time)
    started_at: float | None = None
    finished_at: float | None = None
    result: dict | None = None
    error: str | None = None

    def describe(self) -> dict:
        return {
            "id": self.job_id,
            "kind": self.kind,
            "state": self.state,
            "created_at": self.created_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "result": self.result,
            "error": self.error,
        }


class JobRunner:
    """Single-worker executor so writes to shared artifacts are serialized."""

    def __init__(self):
        self._executor = ThreadPoolExecutor(max_workers=1)
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def _transition(self, job: Job, state: str) -> None:
        with self._lock:
            if _ORDER[state] < _ORDER[job.state]:
                raise RuntimeError(
                    f"job {job.job_id}: illegal transition {job.state} -> {state}"
                )
            job.state = state

    def submit(self, kind: str, fn) -> Job:
        """Queue ``fn()``; its return dict becomes the job result."""
        job = Job(job_id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._jobs[job.job_id] = job

        def run():
            self._transition(job, "running")
            job.started_at = time.time()
            try:
                job.result = fn()
                self._transition(job, "done")
            except Exception:
                job.error = traceback.format_exc(limit=5)
                self._transition(job, "failed")
            finally:
                job.finished_at = time.time()

        self._executor.submit(run)
        return job

    def get(self, job_id: str) -> Job:
        with self._lock:
            if job_id not in self._jobs:
                raise JobNotFound(f"no job with id {job_id!r}")
            return self._jobs[job_id]

    def list_jobs(self) -> list[Job]:
        with self._lock:
            return sorted(self._jobs.values(), key=lambda j: j.created_at)

    def wait(self, job_id: str, timeout: float = 60.0) -> Job:
        """Block until the job reaches a terminal state (for tests/CLI)."""
        deadline = time.time() + timeout
        while time.time() < deadline:
            job = self.get(job_id)
            if job.state in ("done", "failed"):
                return job
            time.sleep(0.02)
        raise TimeoutError(f"job {job_id} still {self.get(job_id).state}")
