"""File-backed store, job runner, and the versioned HTTP API."""
from .store import DatasetRecord, DatasetStore
from .jobs import Job, JobRunner
from .app import create_app

__all__ = ["DatasetRecord", "DatasetStore", "Job", "JobRunner", "create_app"]
