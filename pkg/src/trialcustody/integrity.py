"""Cross-check retrieved datasets against their on-ledger digests.

This closes the custody loop: the ledger says what the bytes should hash to,
the blob store says what bytes it has, and the verdict says whether they
still agree.  All failure modes are verdict statuses, never exceptions, so
an investigator gets one row per file regardless of what broke.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, List, Optional, Union

from . import blobstore
from .blobstore import Cluster, ContentId
from .contract import ContractState, NoManifest

STATUS_VERIFIED = "verified"
STATUS_MISMATCH = "mismatch"
STATUS_NO_RECORD = "no-record"
STATUS_NO_BLOB = "no-blob"

_CHUNK = 1024 * 1024


def hash_file(source: Union[bytes, BinaryIO, str, Path]) -> str:
    """SHA-256 hex digest of bytes, a binary stream, or a file path.

    Streams are consumed in 1 MiB chunks so arbitrarily large datasets never
    need to fit in memory.
    """
    if isinstance(source, bytes):
        return hashlib.sha256(source).hexdigest()
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return hash_file(fh)
    digest = hashlib.sha256()
    for chunk in iter(lambda: source.read(_CHUNK), b""):
        digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class VerificationVerdict:
    filename: str
    trial_id: str
    ledger_hash: Optional[str]
    computed_hash: Optional[str]
    status: str
    record_id: Optional[int]

    def to_dict(self) -> dict:
        return {
            "filename": self.filename,
            "trial_id": self.trial_id,
            "ledger_hash": self.ledger_hash,
            "computed_hash": self.computed_hash,
            "status": self.status,
            "record_id": self.record_id,
        }


@dataclass(frozen=True)
class TrialVerificationReport:
    trial_id: str
    verdicts: List[VerificationVerdict]
    missing: List[str]

    @property
    def counts(self) -> dict:
        summary = {
            STATUS_VERIFIED: 0,
            STATUS_MISMATCH: 0,
            STATUS_NO_RECORD: 0,
            STATUS_NO_BLOB: 0,
        }
        for verdict in self.verdicts:
            summary[verdict.status] += 1
        return summary

    def to_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "missing": list(self.missing),
            "counts": self.counts,
        }


def verify_collection(
    state: ContractState,
    cluster: Cluster,
    trial_id: str,
    filename: str,
    record_id: Optional[int] = None,
) -> VerificationVerdict:
    """Verdict for one dataset.

    Verifies against the latest history record by default; pass record_id to
    check an earlier claimed state (e.g. the original submission).  The blob
    address is derived from the ledger digest itself, so the record alone is
    enough to locate the bytes.
    """
    history = state.history(trial_id, filename)
    record = None
    if record_id is not None:
        for candidate in history:
            if candidate.record_id == record_id:
                record = candidate
                break
    elif history:
        record = history[-1]
    if record is None:
        return VerificationVerdict(
            filename=filename,
            trial_id=trial_id,
            ledger_hash=None,
            computed_hash=None,
            status=STATUS_NO_RECORD,
            record_id=record_id,
        )

    cid = ContentId.from_hex_digest(record.file_hash)
    try:
        data = cluster.get_blob(cid)
        computed = hash_file(data)
    except blobstore.NotFound:
        return VerificationVerdict(
            filename=filename,
            trial_id=trial_id,
            ledger_hash=record.file_hash,
            computed_hash=None,
            status=STATUS_NO_BLOB,
            record_id=record.record_id,
        )
    except blobstore.CorruptBlob:
        # Every replica failed re-hash; hash the first copy we can reach so
        # the verdict shows what the store actually holds.
        copies = cluster.fetch_raw(cid)
        computed = hash_file(copies[0][1]) if copies else None
        return VerificationVerdict(
            filename=filename,
            trial_id=trial_id,
            ledger_hash=record.file_hash,
            computed_hash=computed,
            status=STATUS_MISMATCH,
            record_id=record.record_id,
        )

    status = STATUS_VERIFIED if computed == record.file_hash else STATUS_MISMATCH
    return VerificationVerdict(
        filename=filename,
        trial_id=trial_id,
        ledger_hash=record.file_hash,
        computed_hash=computed,
        status=status,
        record_id=record.record_id,
    )


def verify_trial(state: ContractState, cluster: Cluster, trial_id: str) -> TrialVerificationReport:
    """One verdict per manifest filename plus any extra submitted files."""
    submitted, missing = state.completeness(trial_id)  # raises NoManifest
    manifest = state.get_manifest(trial_id)
    names = list(manifest.required_filenames)
    extras = sorted(submitted - set(names))
    verdicts = [verify_collection(state, cluster, trial_id, name) for name in names + extras]
    return TrialVerificationReport(trial_id=trial_id, verdicts=verdicts, missing=missing)


__all__ = [
    "hash_file",
    "verify_collection",
    "verify_trial",
    "VerificationVerdict",
    "TrialVerificationReport",
    "NoManifest",
    "STATUS_VERIFIED",
    "STATUS_MISMATCH",
    "STATUS_NO_RECORD",
    "STATUS_NO_BLOB",
]
