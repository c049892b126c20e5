"""Content-addressed dataset storage over a simulated peer cluster.

Blobs are stored whole and addressed by a one-byte version+algorithm tag
followed by the SHA-256 digest of their bytes.  A cluster-wide pin set says
which content must be kept and at what replication factor; only standard
peers may change it, follower peers just hold what they are told to hold.
Allocation is least-loaded-first with lexicographic peer-id tie-break, so
placements are reproducible.

When the cluster is given a persistence root, each peer keeps its blobs as
files named by content id under its own subdirectory, and the pin set is
mirrored to a newline-delimited text index for human inspection.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple, Union

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

CID_TAG = 0x01  # version 1, SHA-256
DEFAULT_REPLICATION = 2

ROLE_STANDARD = "standard"
ROLE_FOLLOWER = "follower"

PINSET_FILE = "pinset.txt"
PEERS_DIR = "peers"


class BlobstoreError(Exception):
    """Base class for cluster failures."""


class NoPeers(BlobstoreError):
    """No online peer available to take the blob."""


class NotFound(BlobstoreError):
    """No online holder for the content id."""


class CorruptBlob(BlobstoreError):
    """Every reachable copy fails hash re-verification."""


class NotStandardPeer(BlobstoreError):
    """Pin-set mutation attempted by a follower (or unknown) peer."""


class UnknownContent(BlobstoreError):
    """Content id absent from the pin set."""


class UnknownPeer(BlobstoreError):
    """Peer id not in the cluster."""


class AuthFailure(BlobstoreError):
    """Envelope decryption failed authentication."""


@dataclass(frozen=True)
class ContentId:
    """Hash-derived blob address: identical bytes, identical id."""

    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise ValueError("content id needs a 32-byte digest")

    @classmethod
    def for_bytes(cls, data: bytes) -> "ContentId":
        return cls(digest=hashlib.sha256(data).digest())

    @classmethod
    def from_hex_digest(cls, hex_digest: str) -> "ContentId":
        """Derive the address from a ledger-recorded hex digest."""
        return cls(digest=bytes.fromhex(hex_digest))

    @classmethod
    def parse(cls, text: str) -> "ContentId":
        raw = bytes.fromhex(text)
        if len(raw) != 33 or raw[0] != CID_TAG:
            raise ValueError(f"not a content id: {text!r}")
        return cls(digest=raw[1:])

    @property
    def hex(self) -> str:
        return bytes([CID_TAG]).hex() + self.digest.hex()

    @property
    def hex_digest(self) -> str:
        return self.digest.hex()

    def __str__(self) -> str:
        return self.hex


class Peer:
    """One storage node: an isolated blob partition plus role and liveness."""

    def __init__(self, peer_id: str, role: str = ROLE_FOLLOWER, directory: Optional[Path] = None):
        if role not in (ROLE_STANDARD, ROLE_FOLLOWER):
            raise ValueError(f"unknown peer role {role!r}")
        self.peer_id = peer_id
        self.role = role
        self.online = True
        self._directory = directory
        self._blobs: Dict[str, bytes] = {}
        if directory is not None:
            directory.mkdir(parents=True, exist_ok=True)

    def put(self, cid: ContentId, data: bytes) -> None:
        if self._directory is not None:
            (self._directory / cid.hex).write_bytes(data)
        else:
            self._blobs[cid.hex] = data

    def get(self, cid: ContentId) -> Optional[bytes]:
        if self._directory is not None:
            path = self._directory / cid.hex
            return path.read_bytes() if path.exists() else None
        return self._blobs.get(cid.hex)

    def delete(self, cid: ContentId) -> None:
        if self._directory is not None:
            path = self._directory / cid.hex
            if path.exists():
                path.unlink()
        else:
            self._blobs.pop(cid.hex, None)

    def has(self, cid: ContentId) -> bool:
        if self._directory is not None:
            return (self._directory / cid.hex).exists()
        return cid.hex in self._blobs

    def stored_bytes(self) -> int:
        if self._directory is not None:
            return sum(p.stat().st_size for p in self._directory.iterdir())
        return sum(len(b) for b in self._blobs.values())

    def cids(self) -> List[str]:
        if self._directory is not None:
            return [p.name for p in self._directory.iterdir()]
        return list(self._blobs)


@dataclass
class PinEntry:
    replication_factor: int
    assigned_peers: Set[str] = field(default_factory=set)
    under_replicated: bool = False


@dataclass
class RebalanceReport:
    """What one rebalance pass changed."""

    created: List[Tuple[str, str]] = field(default_factory=list)  # (cid hex, peer)
    abandoned: List[Tuple[str, str]] = field(default_factory=list)
    unavailable: List[str] = field(default_factory=list)
    under_replicated: List[str] = field(default_factory=list)
    corrupt: List[Tuple[str, str]] = field(default_factory=list)


class Cluster:
    """Pin-set coordinator over the peers.

    All mutations go through this single coordinator; reads are safe to run
    concurrently.  Peers share no state except what the coordinator copies
    between them.
    """

    def __init__(
        self,
        peers: List[Peer],
        default_replication: int = DEFAULT_REPLICATION,
        root: Optional[Union[str, Path]] = None,
    ):
        if len({p.peer_id for p in peers}) != len(peers):
            raise ValueError("duplicate peer ids")
        self.peers: Dict[str, Peer] = {p.peer_id: p for p in peers}
        self.default_replication = default_replication
        self.pin_set: Dict[str, PinEntry] = {}
        self.corruption_reports: List[Tuple[str, str]] = []  # (peer_id, cid hex)
        self._root = Path(root) if root is not None else None
        if self._root is not None:
            self._load_pinset()

    @classmethod
    def create(
        cls,
        num_peers: int,
        num_standard: int = 1,
        default_replication: int = DEFAULT_REPLICATION,
        root: Optional[Union[str, Path]] = None,
    ) -> "Cluster":
        """Build peer-0..peer-N; the first num_standard of them are standard peers."""
        root_path = Path(root) if root is not None else None
        peers = []
        for i in range(num_peers):
            peer_id = f"peer-{i}"
            role = ROLE_STANDARD if i < num_standard else ROLE_FOLLOWER
            directory = root_path / PEERS_DIR / peer_id if root_path is not None else None
            peers.append(Peer(peer_id, role=role, directory=directory))
        return cls(peers, default_replication=default_replication, root=root_path)

    # -- core operations -----------------------------------------------------

    def add_blob(self, data: bytes, replication_factor: Optional[int] = None) -> ContentId:
        """Store bytes under their own hash and pin them at the default factor."""
        if not self._online_peers():
            raise NoPeers("no online peer to store the blob")
        cid = ContentId.for_bytes(data)
        r = replication_factor if replication_factor is not None else self.default_replication
        entry = self.pin_set.get(cid.hex)
        if entry is None:
            entry = PinEntry(replication_factor=r)
            self.pin_set[cid.hex] = entry
        self._allocate(cid, entry, source_bytes=data)
        self._save_pinset()
        return cid

    def get_blob(self, cid: ContentId) -> bytes:
        """Fetch and re-hash before returning; corrupt holders are reported
        and remaining replicas tried."""
        holders = self._online_holders(cid)
        if not holders:
            raise NotFound(f"no online holder for {cid.hex}")
        corrupt = []
        for peer in holders:
            data = peer.get(cid)
            if data is None:
                continue
            if ContentId.for_bytes(data) == cid:
                for bad in corrupt:
                    self.corruption_reports.append((bad, cid.hex))
                return data
            corrupt.append(peer.peer_id)
        for bad in corrupt:
            self.corruption_reports.append((bad, cid.hex))
        raise CorruptBlob(f"all reachable copies of {cid.hex} fail re-hash")

    def fetch_raw(self, cid: ContentId) -> List[Tuple[str, bytes]]:
        """Unverified copies from every online holder, for forensic use."""
        out = []
        for peer in self._online_holders(cid):
            data = peer.get(cid)
            if data is not None:
                out.append((peer.peer_id, data))
        return out

    def pin(self, actor: str, cid: ContentId, replication_factor: Optional[int] = None) -> None:
        """Pin (or re-pin at a new factor) existing content.  Standard peers only."""
        self._require_standard(actor)
        entry = self.pin_set.get(cid.hex)
        if entry is None:
            raise UnknownContent(f"{cid.hex} not in the pin set")
        if replication_factor is not None:
            entry.replication_factor = replication_factor
        self._allocate(cid, entry)
        self._save_pinset()

    def unpin(self, actor: str, cid: ContentId) -> None:
        self._require_standard(actor)
        entry = self.pin_set.pop(cid.hex, None)
        if entry is None:
            raise UnknownContent(f"{cid.hex} not in the pin set")
        for peer in self.peers.values():
            if peer.online and peer.has(cid):
                peer.delete(cid)
        self._save_pinset()

    def set_peer_online(self, peer_id: str, online: bool) -> None:
        peer = self.peers.get(peer_id)
        if peer is None:
            raise UnknownPeer(peer_id)
        peer.online = online

    def rebalance(self) -> RebalanceReport:
        """Restore every pin entry to min(r, online peers) holders.

        Content whose every copy sits on offline peers is flagged
        unavailable and left alone until a holder returns.
        """
        report = RebalanceReport()
        for cid_hex in sorted(self.pin_set):
            cid = ContentId.parse(cid_hex)
            entry = self.pin_set[cid_hex]
            source = self._intact_source(cid, report)
            if source is None:
                entry.assigned_peers = set()
                entry.under_replicated = True
                report.unavailable.append(cid_hex)
                continue
            self._allocate(cid, entry, source_bytes=source, report=report)
            if entry.under_replicated:
                report.under_replicated.append(cid_hex)
        self._save_pinset()
        return report

    # -- envelope encryption ---------------------------------------------------

    # (module-level functions below; kept on the cluster's doc radar because
    # IP-sensitive datasets are encrypted before they ever reach add_blob)

    # -- queries ----------------------------------------------------------------

    def holders(self, cid: ContentId) -> List[str]:
        entry = self.pin_set.get(cid.hex)
        return sorted(entry.assigned_peers) if entry else []

    def total_stored_bytes(self) -> int:
        return sum(p.stored_bytes() for p in self.peers.values())

    # -- internals ----------------------------------------------------------------

    def _require_standard(self, actor: str) -> None:
        peer = self.peers.get(actor)
        if peer is None or peer.role != ROLE_STANDARD:
            raise NotStandardPeer(f"{actor!r} may not modify the pin set")

    def _online_peers(self) -> List[Peer]:
        return [p for p in self.peers.values() if p.online]

    def _online_holders(self, cid: ContentId) -> List[Peer]:
        entry = self.pin_set.get(cid.hex)
        if entry is None:
            return []
        out = []
        for peer_id in sorted(entry.assigned_peers):
            peer = self.peers.get(peer_id)
            if peer is not None and peer.online:
                out.append(peer)
        return out

    def _intact_source(self, cid: ContentId, report: RebalanceReport) -> Optional[bytes]:
        """An intact copy from any online peer, assigned or stale."""
        for peer in sorted(self._online_peers(), key=lambda p: p.peer_id):
            if not peer.has(cid):
                continue
            data = peer.get(cid)
            if data is not None and ContentId.for_bytes(data) == cid:
                return data
            report.corrupt.append((cid.hex, peer.peer_id))
            self.corruption_reports.append((peer.peer_id, cid.hex))
        return None

    def _allocate(
        self,
        cid: ContentId,
        entry: PinEntry,
        source_bytes: Optional[bytes] = None,
        report: Optional[RebalanceReport] = None,
    ) -> None:
        """Assign min(r, online) holders, least-loaded first, lexicographic
        tie-break; copy bytes to new holders and drop surplus online copies."""
        online = self._online_peers()
        target = min(entry.replication_factor, len(online))
        current_holders = {
            p.peer_id
            for p in online
            if p.has(cid)
        }
        # Keep existing holders first to minimise churn, then fill with the
        # least-loaded remaining peers.
        ranked = sorted(online, key=lambda p: (p.peer_id not in current_holders, p.stored_bytes(), p.peer_id))
        chosen = ranked[:target]
        chosen_ids = {p.peer_id for p in chosen}

        if source_bytes is None:
            for peer_id in sorted(current_holders):
                data = self.peers[peer_id].get(cid)
                if data is not None and ContentId.for_bytes(data) == cid:
                    source_bytes = data
                    break
        if source_bytes is None:
            entry.assigned_peers = set()
            entry.under_replicated = True
            if report is not None:
                report.unavailable.append(cid.hex)
            return

        for peer in chosen:
            if not peer.has(cid):
                peer.put(cid, source_bytes)
                if report is not None:
                    report.created.append((cid.hex, peer.peer_id))
        for peer in online:
            if peer.peer_id not in chosen_ids and peer.has(cid):
                peer.delete(cid)
                if report is not None:
                    report.abandoned.append((cid.hex, peer.peer_id))

        entry.assigned_peers = chosen_ids
        entry.under_replicated = target < entry.replication_factor

    # -- pin-set persistence -----------------------------------------------------

    def _save_pinset(self) -> None:
        if self._root is None:
            return
        self._root.mkdir(parents=True, exist_ok=True)
        lines = []
        for cid_hex in sorted(self.pin_set):
            entry = self.pin_set[cid_hex]
            holders = ",".join(sorted(entry.assigned_peers)) or "-"
            lines.append(f"{cid_hex} {entry.replication_factor} {holders}")
        (self._root / PINSET_FILE).write_text("\n".join(lines) + ("\n" if lines else ""))

    def _load_pinset(self) -> None:
        assert self._root is not None
        path = self._root / PINSET_FILE
        if not path.exists():
            return
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            cid_hex, factor, holders = line.split()
            assigned = set() if holders == "-" else set(holders.split(","))
            self.pin_set[cid_hex] = PinEntry(
                replication_factor=int(factor), assigned_peers=assigned
            )


# -- offline envelope encryption -------------------------------------------------

ENVELOPE_KEY_LEN = 32
_NONCE_LEN = 12


def encrypt_envelope(data: bytes, key: bytes) -> bytes:
    """Authenticated encryption for IP-sensitive datasets before storage.

    Fresh random nonce per call, prepended to the ciphertext, so equal
    plaintexts produce differing envelopes.
    """
    if len(key) != ENVELOPE_KEY_LEN:
        raise ValueError(f"envelope key must be {ENVELOPE_KEY_LEN} bytes")
    nonce = os.urandom(_NONCE_LEN)
    return nonce + ChaCha20Poly1305(key).encrypt(nonce, data, None)


def decrypt_envelope(data: bytes, key: bytes) -> bytes:
    if len(key) != ENVELOPE_KEY_LEN:
        raise ValueError(f"envelope key must be {ENVELOPE_KEY_LEN} bytes")
    if len(data) < _NONCE_LEN + 16:
        raise AuthFailure("envelope too short")
    nonce, ciphertext = data[:_NONCE_LEN], data[_NONCE_LEN:]
    try:
        return ChaCha20Poly1305(key).decrypt(nonce, ciphertext, None)
    except InvalidTag as exc:
        raise AuthFailure("envelope failed authentication") from exc
