"""Deterministic evidence-registry state machine executed by the ledger.

State: contract owner, submitter whitelist, per-trial required-file
manifests, and the append-only sequence of metadata records with its
per-trial index and count maps.  Every accepted state change emits an event
so listeners can follow along.

Call payloads use the canonical encoding with a fixed-width 4-byte operation
tag; the tag table and argument layouts are documented in
docs/wire_format.md.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

from . import codec

HEX_DIGEST_LEN = 64  # 256-bit digest, lowercase hex

TAG_TRANSFER_OWNERSHIP = b"OWNR"
TAG_WHITELIST_ADD = b"WLAD"
TAG_WHITELIST_REMOVE = b"WLRM"
TAG_SET_MANIFEST = b"MSET"
TAG_RECORD_METADATA = b"RADD"


class ContractError(Exception):
    """Base class for rejected contract calls."""


class NotOwner(ContractError):
    """Caller is not the contract owner."""


class NotWhitelisted(ContractError):
    """Caller is neither whitelisted nor the owner."""


class DuplicateFilename(ContractError):
    """Manifest contains the same filename twice."""


class EmptyManifest(ContractError):
    """Manifest has no filenames."""


class EmptyField(ContractError):
    """Filename or trial id is empty."""


class MalformedHash(ContractError):
    """File hash is not a 64-char lowercase hex digest."""


class NoManifest(ContractError):
    """No manifest registered for the trial."""


class NotFound(ContractError):
    """Record id beyond the sequence length."""


class BadCursor(ContractError):
    """Event cursor beyond the event count."""


class BadCall(ContractError):
    """Payload is not a well-formed contract call."""


@dataclass(frozen=True)
class MetadataRecord:
    """The five-field evidence descriptor kept on-ledger."""

    record_id: int
    filename: str
    trial_id: str
    file_hash: str
    timestamp: int
    submitter: bytes

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "filename": self.filename,
            "trial_id": self.trial_id,
            "file_hash": self.file_hash,
            "timestamp": self.timestamp,
            "submitter": self.submitter.hex(),
        }


@dataclass(frozen=True)
class TrialManifest:
    """Required dataset filenames for one trial."""

    trial_id: str
    required_filenames: Tuple[str, ...]

    def to_dict(self) -> dict:
        return {"trial_id": self.trial_id, "required_filenames": list(self.required_filenames)}


class EventKind(str, enum.Enum):
    RECORD_ADDED = "RecordAdded"
    MANIFEST_SET = "ManifestSet"
    WHITELIST_CHANGED = "WhitelistChanged"
    OWNERSHIP_TRANSFERRED = "OwnershipTransferred"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    payload: dict
    block_height: int
    tx_position: int

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "payload": self.payload,
            "block_height": self.block_height,
            "tx_position": self.tx_position,
        }


@dataclass(frozen=True)
class BlockContext:
    """Where in the chain the current call is being applied."""

    height: int
    timestamp: int
    position: int


# Used by direct unit-level calls that bypass the ledger.
_DETACHED_CONTEXT = BlockContext(height=0, timestamp=0, position=0)


def _is_hex_digest(value: str) -> bool:
    return len(value) == HEX_DIGEST_LEN and all(c in "0123456789abcdef" for c in value)


# -- call payload encoding ----------------------------------------------------


def encode_transfer_ownership(new_owner: bytes) -> bytes:
    return TAG_TRANSFER_OWNERSHIP + codec.encode_bytes(new_owner)


def encode_whitelist_add(key: bytes) -> bytes:
    return TAG_WHITELIST_ADD + codec.encode_bytes(key)


def encode_whitelist_remove(key: bytes) -> bytes:
    return TAG_WHITELIST_REMOVE + codec.encode_bytes(key)


def encode_set_manifest(trial_id: str, filenames: List[str]) -> bytes:
    return (
        TAG_SET_MANIFEST
        + codec.encode_str(trial_id)
        + codec.encode_list([codec.encode_str(name) for name in filenames])
    )


def encode_record_metadata(filename: str, trial_id: str, file_hash: str) -> bytes:
    return (
        TAG_RECORD_METADATA
        + codec.encode_str(filename)
        + codec.encode_str(trial_id)
        + codec.encode_str(file_hash)
    )


OPERATION_NAMES = {
    TAG_TRANSFER_OWNERSHIP: "transfer_ownership",
    TAG_WHITELIST_ADD: "whitelist_add",
    TAG_WHITELIST_REMOVE: "whitelist_remove",
    TAG_SET_MANIFEST: "set_manifest",
    TAG_RECORD_METADATA: "record_metadata",
}


def describe_call(payload: bytes) -> dict:
    """JSON-safe summary of a call payload, for explorer views."""
    try:
        tag, args = decode_call(payload)
    except ContractError:
        return {"operation": "unknown", "args": {}}
    safe_args = {
        key: value.hex() if isinstance(value, bytes) else value for key, value in args.items()
    }
    return {"operation": OPERATION_NAMES[tag], "args": safe_args}


def decode_call(payload: bytes) -> Tuple[bytes, dict]:
    """Split a call payload into its operation tag and argument dict."""
    if len(payload) < 4:
        raise BadCall("payload shorter than operation tag")
    tag, body = payload[:4], payload[4:]
    reader = codec.Reader(body)
    try:
        if tag == TAG_TRANSFER_OWNERSHIP:
            args = {"new_owner": reader.bytes()}
        elif tag in (TAG_WHITELIST_ADD, TAG_WHITELIST_REMOVE):
            args = {"key": reader.bytes()}
        elif tag == TAG_SET_MANIFEST:
            args = {"trial_id": reader.str(), "filenames": reader.list(lambda r: r.str())}
        elif tag == TAG_RECORD_METADATA:
            args = {
                "filename": reader.str(),
                "trial_id": reader.str(),
                "file_hash": reader.str(),
            }
        else:
            raise BadCall(f"unknown operation tag {tag!r}")
        reader.expect_eof()
    except codec.CodecError as exc:
        raise BadCall(f"malformed call arguments: {exc}") from exc
    return tag, args


class ContractState:
    """Ownership, whitelist, manifests, records, indices, counts, events.

    Mutated only through the ledger's single writer during seal; queries are
    read-only and safe against sealed history.  Every mutating method
    validates fully before touching state, so a rejected call leaves no trace
    beyond its failed receipt.
    """

    def __init__(self, owner: bytes):
        self.owner = owner
        self.whitelist: Set[bytes] = set()
        self.records: List[MetadataRecord] = []
        self.trial_index: Dict[str, List[int]] = {}
        self.trial_count: Dict[str, int] = {}
        self.manifests: Dict[str, TrialManifest] = {}
        self.events: List[Event] = []

    @classmethod
    def deploy(cls, deployer: bytes) -> "ContractState":
        """Fresh state with the deployer as owner; whitelist and stores empty."""
        return cls(owner=deployer)

    # -- access checks -------------------------------------------------------

    def _require_owner(self, sender: bytes) -> None:
        if sender != self.owner:
            raise NotOwner("caller is not the contract owner")

    def is_authorized_submitter(self, sender: bytes) -> bool:
        # The owner is implicitly whitelisted.
        return sender in self.whitelist or sender == self.owner

    # -- mutations (ledger-applied) -------------------------------------------

    def transfer_ownership(
        self, sender: bytes, new_owner: bytes, ctx: BlockContext = _DETACHED_CONTEXT
    ) -> dict:
        self._require_owner(sender)
        self.owner = new_owner
        self._emit(
            EventKind.OWNERSHIP_TRANSFERRED, {"new_owner": new_owner.hex()}, ctx
        )
        return {"new_owner": new_owner.hex()}

    def whitelist_add(
        self, sender: bytes, key: bytes, ctx: BlockContext = _DETACHED_CONTEXT
    ) -> dict:
        self._require_owner(sender)
        # Re-adding a present key is an idempotent no-op that still seals.
        if key not in self.whitelist:
            self.whitelist.add(key)
            self._emit(EventKind.WHITELIST_CHANGED, {"action": "add", "key": key.hex()}, ctx)
        return {"whitelisted": True, "key": key.hex()}

    def whitelist_remove(
        self, sender: bytes, key: bytes, ctx: BlockContext = _DETACHED_CONTEXT
    ) -> dict:
        self._require_owner(sender)
        if key in self.whitelist:
            self.whitelist.discard(key)
            self._emit(EventKind.WHITELIST_CHANGED, {"action": "remove", "key": key.hex()}, ctx)
        return {"whitelisted": False, "key": key.hex()}

    def set_manifest(
        self,
        sender: bytes,
        trial_id: str,
        filenames: List[str],
        ctx: BlockContext = _DETACHED_CONTEXT,
    ) -> dict:
        self._require_owner(sender)
        if not trial_id:
            raise EmptyField("trial id is empty")
        if not filenames:
            raise EmptyManifest("manifest needs at least one filename")
        if any(not name for name in filenames):
            raise EmptyField("manifest contains an empty filename")
        if len(set(filenames)) != len(filenames):
            raise DuplicateFilename("manifest repeats a filename")
        manifest = TrialManifest(trial_id=trial_id, required_filenames=tuple(filenames))
        # Re-submission replaces the previous manifest; the old one stays
        # recoverable from the event log.
        self.manifests[trial_id] = manifest
        self._emit(EventKind.MANIFEST_SET, manifest.to_dict(), ctx)
        return manifest.to_dict()

    def record_metadata(
        self,
        sender: bytes,
        filename: str,
        trial_id: str,
        file_hash: str,
        ctx: BlockContext = _DETACHED_CONTEXT,
    ) -> dict:
        if not self.is_authorized_submitter(sender):
            raise NotWhitelisted("sender is not on the submitter whitelist")
        if not filename or not trial_id:
            raise EmptyField("filename and trial id must be non-empty")
        if not _is_hex_digest(file_hash):
            raise MalformedHash("file hash must be 64 lowercase hex chars")
        record = MetadataRecord(
            record_id=len(self.records),
            filename=filename,
            trial_id=trial_id,
            file_hash=file_hash,
            timestamp=ctx.timestamp,
            submitter=sender,
        )
        self.records.append(record)
        self.trial_index.setdefault(trial_id, []).append(record.record_id)
        self.trial_count[trial_id] = self.trial_count.get(trial_id, 0) + 1
        self._emit(EventKind.RECORD_ADDED, record.to_dict(), ctx)
        return {"record_id": record.record_id}

    def apply(self, sender: bytes, payload: bytes, ctx: BlockContext) -> dict:
        """Dispatch one ledger transaction.  Raises ContractError on rejection."""
        tag, args = decode_call(payload)
        if tag == TAG_TRANSFER_OWNERSHIP:
            return self.transfer_ownership(sender, args["new_owner"], ctx)
        if tag == TAG_WHITELIST_ADD:
            return self.whitelist_add(sender, args["key"], ctx)
        if tag == TAG_WHITELIST_REMOVE:
            return self.whitelist_remove(sender, args["key"], ctx)
        if tag == TAG_SET_MANIFEST:
            return self.set_manifest(sender, args["trial_id"], args["filenames"], ctx)
        if tag == TAG_RECORD_METADATA:
            return self.record_metadata(
                sender, args["filename"], args["trial_id"], args["file_hash"], ctx
            )
        raise BadCall(f"unknown operation tag {tag!r}")

    # -- queries --------------------------------------------------------------

    def get_record_ids(self, trial_id: str) -> List[int]:
        """First phase of two-phase retrieval: ids in ascending order."""
        return list(self.trial_index.get(trial_id, []))

    def get_record(self, record_id: int) -> MetadataRecord:
        if not 0 <= record_id < len(self.records):
            raise NotFound(f"no record {record_id}")
        return self.records[record_id]

    def get_count(self, trial_id: str) -> int:
        return self.trial_count.get(trial_id, 0)

    def completeness(self, trial_id: str) -> Tuple[Set[str], List[str]]:
        """(submitted filenames, missing manifest filenames in manifest order).

        Submitted includes filenames recorded outside the manifest; trials
        may collect more than the required minimum.
        """
        manifest = self.manifests.get(trial_id)
        if manifest is None:
            raise NoManifest(f"no manifest for trial {trial_id!r}")
        submitted = {self.records[i].filename for i in self.trial_index.get(trial_id, [])}
        missing = [name for name in manifest.required_filenames if name not in submitted]
        return submitted, missing

    def get_manifest(self, trial_id: str) -> Optional[TrialManifest]:
        return self.manifests.get(trial_id)

    def history(self, trial_id: str, filename: str) -> List[MetadataRecord]:
        """All records for (trial, filename) in record-id order.

        The first element is the original submission, each later one a
        change, each carrying its block timestamp and submitter.
        """
        return [
            self.records[i]
            for i in self.trial_index.get(trial_id, [])
            if self.records[i].filename == filename
        ]

    def known_trial(self, trial_id: str) -> bool:
        return trial_id in self.manifests or trial_id in self.trial_index

    def events_since(self, cursor: int) -> List[Event]:
        if not 0 <= cursor <= len(self.events):
            raise BadCursor(f"cursor {cursor} beyond event count {len(self.events)}")
        return self.events[cursor:]

    # -- internals -------------------------------------------------------------

    def _emit(self, kind: EventKind, payload: dict, ctx: BlockContext) -> None:
        self.events.append(
            Event(kind=kind, payload=payload, block_height=ctx.height, tx_position=ctx.position)
        )
