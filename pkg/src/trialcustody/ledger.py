"""Append-only, hash-chained, tamper-evident transaction log.

The chain is single-authority: one writer serializes submissions and seals,
there is no mining and no fork choice.  Tamper evidence comes from hash
recomputation alone — every sealed byte is covered by its block hash, and
every block hash is covered by its successor's parent link.

Blocks persist to an append-only block file plus a line-oriented index file
(see docs/wire_format.md); a chain reloaded from disk re-verifies and
replays its transactions to rebuild application state.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

from . import codec, keys

GENESIS_PARENT_HASH = b"\x00" * 32

STATUS_APPLIED = "applied"
STATUS_FAILED = "failed"

BLOCK_FILE = "blocks.dat"
INDEX_FILE = "blocks.idx"


class LedgerError(Exception):
    """Base class for ledger rejections."""


class BadSignature(LedgerError):
    """Transaction signature does not verify under the sender key."""


class StaleNonce(LedgerError):
    """Nonce does not exceed the sender's last accepted nonce."""


class ClockSkew(LedgerError):
    """Seal time precedes the genesis timestamp."""


class NotFound(LedgerError):
    """Unknown block height or transaction id."""


@dataclass(frozen=True)
class Transaction:
    """A signed state-change request: contract call payload + sender + nonce."""

    payload: bytes
    sender: bytes
    nonce: int
    signature: bytes

    def signing_material(self) -> bytes:
        return (
            codec.encode_bytes(self.payload)
            + codec.encode_bytes(self.sender)
            + codec.encode_u64(self.nonce)
        )

    def encode(self) -> bytes:
        return self.signing_material() + codec.encode_bytes(self.signature)

    @classmethod
    def read_from(cls, reader: codec.Reader) -> "Transaction":
        payload = reader.bytes()
        sender = reader.bytes()
        nonce = reader.u64()
        signature = reader.bytes()
        return cls(payload=payload, sender=sender, nonce=nonce, signature=signature)

    @classmethod
    def decode(cls, data: bytes) -> "Transaction":
        reader = codec.Reader(data)
        tx = cls.read_from(reader)
        reader.expect_eof()
        return tx

    @property
    def tx_id(self) -> str:
        return hashlib.sha256(self.encode()).hexdigest()


def sign_transaction(identity: keys.Identity, payload: bytes, nonce: int) -> Transaction:
    unsigned = Transaction(payload=payload, sender=identity.public_key, nonce=nonce, signature=b"")
    signature = keys.sign(identity.secret_key, unsigned.signing_material())
    return Transaction(payload=payload, sender=identity.public_key, nonce=nonce, signature=signature)


@dataclass(frozen=True)
class Block:
    height: int
    parent_hash: bytes
    timestamp: int
    transactions: Tuple[Transaction, ...]
    block_hash: bytes

    def header_bytes(self) -> bytes:
        """Canonical encoding of everything the block hash covers."""
        return (
            codec.encode_u64(self.height)
            + codec.encode_bytes(self.parent_hash)
            + codec.encode_u64(self.timestamp)
            + codec.encode_list([tx.encode() for tx in self.transactions])
        )

    def compute_hash(self) -> bytes:
        return hashlib.sha256(self.header_bytes()).digest()

    def encode(self) -> bytes:
        return self.header_bytes() + codec.encode_bytes(self.block_hash)

    @classmethod
    def decode(cls, data: bytes) -> "Block":
        reader = codec.Reader(data)
        height = reader.u64()
        parent_hash = reader.bytes()
        timestamp = reader.u64()
        transactions = tuple(reader.list(Transaction.read_from))
        block_hash = reader.bytes()
        reader.expect_eof()
        return cls(
            height=height,
            parent_hash=parent_hash,
            timestamp=timestamp,
            transactions=transactions,
            block_hash=block_hash,
        )

    @classmethod
    def build(
        cls, height: int, parent_hash: bytes, timestamp: int, transactions: Tuple[Transaction, ...]
    ) -> "Block":
        unhashed = cls(
            height=height,
            parent_hash=parent_hash,
            timestamp=timestamp,
            transactions=transactions,
            block_hash=b"",
        )
        return cls(
            height=height,
            parent_hash=parent_hash,
            timestamp=timestamp,
            transactions=transactions,
            block_hash=unhashed.compute_hash(),
        )


@dataclass(frozen=True)
class Receipt:
    """Inclusion record for one sealed transaction."""

    tx_id: str
    block_height: int
    position: int
    status: str
    reason: Optional[str] = None
    result: Optional[dict] = None


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    bad_height: Optional[int] = None


# The application hook invoked for each transaction while sealing.  It gets
# (tx, block_height, block_timestamp, position) and returns (status, reason,
# result).  The ledger itself does not interpret payloads.
Applier = Callable[[Transaction, int, int, int], Tuple[str, Optional[str], Optional[dict]]]


def _null_applier(tx: Transaction, height: int, timestamp: int, position: int):
    return STATUS_APPLIED, None, None


class Chain:
    """The transaction log plus its pending queue.

    All mutations (submit, seal) are serialized through one internal lock;
    sealed history is immutable and may be read concurrently.
    """

    def __init__(
        self,
        genesis_timestamp: int = 0,
        applier: Optional[Applier] = None,
        data_dir: Optional[Union[str, Path]] = None,
    ):
        self._lock = threading.Lock()
        self.applier: Applier = applier or _null_applier
        self.blocks: List[Block] = []
        self.pending: List[Transaction] = []
        self._receipts: Dict[str, Receipt] = {}
        self._last_nonce: Dict[bytes, int] = {}
        self._data_dir = Path(data_dir) if data_dir is not None else None

        if self._data_dir is not None and (self._data_dir / INDEX_FILE).exists():
            self._load_from_disk()
        else:
            genesis = Block.build(0, GENESIS_PARENT_HASH, genesis_timestamp, ())
            self.blocks.append(genesis)
            if self._data_dir is not None:
                self._data_dir.mkdir(parents=True, exist_ok=True)
                self._persist_block(genesis)

    # -- submission ---------------------------------------------------------

    def submit(self, tx: Transaction) -> int:
        """Validate signature and nonce, then queue the transaction.

        Returns the position in the pending queue.
        """
        with self._lock:
            if not keys.verify(tx.sender, tx.signing_material(), tx.signature):
                raise BadSignature(f"signature check failed for tx {tx.tx_id[:12]}")
            last = self._last_nonce.get(tx.sender)
            if last is not None and tx.nonce <= last:
                raise StaleNonce(f"nonce {tx.nonce} <= last accepted {last}")
            self.pending.append(tx)
            self._last_nonce[tx.sender] = tx.nonce
            return len(self.pending) - 1

    def next_nonce(self, sender: bytes) -> int:
        last = self._last_nonce.get(sender)
        return 0 if last is None else last + 1

    # -- sealing ------------------------------------------------------------

    def seal(self, now: int, allow_empty: bool = False) -> Optional[Block]:
        """Drain the pending queue into a new block and apply each transaction.

        Failed applications are sealed with status=failed, never dropped, so
        the audit trail also records rejected attempts.  Returns None when the
        queue is empty (unless allow_empty).
        """
        with self._lock:
            if now < self.blocks[0].timestamp:
                raise ClockSkew(f"seal time {now} precedes genesis {self.blocks[0].timestamp}")
            if not self.pending and not allow_empty:
                return None
            height = len(self.blocks)
            parent_hash = self.blocks[-1].block_hash
            timestamp = max(now, self.blocks[-1].timestamp)
            transactions = tuple(self.pending)
            self.pending = []
            block = Block.build(height, parent_hash, timestamp, transactions)
            self.blocks.append(block)
            for position, tx in enumerate(transactions):
                status, reason, result = self.applier(tx, height, timestamp, position)
                self._receipts[tx.tx_id] = Receipt(
                    tx_id=tx.tx_id,
                    block_height=height,
                    position=position,
                    status=status,
                    reason=reason,
                    result=result,
                )
            if self._data_dir is not None:
                self._persist_block(block)
            return block

    # -- queries ------------------------------------------------------------

    def get_block(self, height: int) -> Block:
        if not 0 <= height < len(self.blocks):
            raise NotFound(f"no block at height {height}")
        return self.blocks[height]

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    def get_receipt(self, tx_id: str) -> Receipt:
        receipt = self._receipts.get(tx_id)
        if receipt is None:
            raise NotFound(f"no sealed transaction {tx_id}")
        return receipt

    def has_receipt(self, tx_id: str) -> bool:
        return tx_id in self._receipts

    # -- verification -------------------------------------------------------

    def verify(self) -> VerificationReport:
        """Recompute every block hash and parent link.

        Reports the lowest height at which recomputation mismatches; tampering
        is a report outcome, not an error.
        """
        expected_parent = GENESIS_PARENT_HASH
        previous_timestamp = None
        for position, block in enumerate(self.blocks):
            if (
                block.height != position
                or block.parent_hash != expected_parent
                or block.compute_hash() != block.block_hash
                or (previous_timestamp is not None and block.timestamp < previous_timestamp)
            ):
                return VerificationReport(ok=False, bad_height=position)
            expected_parent = block.block_hash
            previous_timestamp = block.timestamp
        return VerificationReport(ok=True)

    # -- persistence --------------------------------------------------------

    def _persist_block(self, block: Block) -> None:
        assert self._data_dir is not None
        encoded = block.encode()
        block_path = self._data_dir / BLOCK_FILE
        offset = block_path.stat().st_size if block_path.exists() else 0
        with open(block_path, "ab") as fh:
            fh.write(codec.encode_u32(len(encoded)) + encoded)
        with open(self._data_dir / INDEX_FILE, "a") as fh:
            fh.write(f"{block.height} {offset} {len(encoded) + 4} {block.block_hash.hex()}\n")

    def _load_from_disk(self) -> None:
        assert self._data_dir is not None
        raw = (self._data_dir / BLOCK_FILE).read_bytes()
        for line in (self._data_dir / INDEX_FILE).read_text().splitlines():
            if not line.strip():
                continue
            _height, offset, length, _hash = line.split()
            record = raw[int(offset) : int(offset) + int(length)]
            reader = codec.Reader(record)
            block = Block.decode(reader.bytes())
            self.blocks.append(block)
        for block in self.blocks:
            for position, tx in enumerate(block.transactions):
                status, reason, result = self.applier(tx, block.height, block.timestamp, position)
                self._receipts[tx.tx_id] = Receipt(
                    tx_id=tx.tx_id,
                    block_height=block.height,
                    position=position,
                    status=status,
                    reason=reason,
                    result=result,
                )
                last = self._last_nonce.get(tx.sender)
                if last is None or tx.nonce > last:
                    self._last_nonce[tx.sender] = tx.nonce
