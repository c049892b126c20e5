"""One running stack: chain + contract + blob cluster under a single writer.

The node is what both the HTTP service and the embedded CLI drive.  It owns
the clock (wall or logical), the seal policy (immediately after each submit,
or on a background interval), and the persistence layout:

    <data_root>/meta.json    owner public key
    <data_root>/chain/       append-only block file + index
    <data_root>/blobs/       per-peer blob directories + pin-set index
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from . import ledger
from .blobstore import Cluster, ContentId
from .config import CLOCK_LOGICAL, SEAL_IMMEDIATE, SEAL_INTERVAL, NodeConfig
from .contract import BlockContext, ContractError, ContractState, Event
from .ledger import Chain, Receipt, Transaction

META_FILE = "meta.json"


@dataclass(frozen=True)
class SubmitOutcome:
    tx_id: str
    position: int
    receipt: Optional[Receipt]  # present when the node seals synchronously


class Node:
    def __init__(self, config: NodeConfig, owner_public_key: Optional[bytes] = None):
        self.config = config
        if owner_public_key is None and config.owner_public_key:
            owner_public_key = bytes.fromhex(config.owner_public_key)
        data_root = config.data_root
        chain_dir = blob_root = None
        if data_root is not None:
            data_root = Path(data_root)
            data_root.mkdir(parents=True, exist_ok=True)
            chain_dir = data_root / "chain"
            blob_root = data_root / "blobs"
            owner_public_key = self._resolve_owner(data_root, owner_public_key)
        if owner_public_key is None:
            raise ValueError("node needs an owner public key to deploy the contract")

        self.state = ContractState.deploy(owner_public_key)
        self.cluster = Cluster.create(
            config.cluster_size,
            num_standard=config.standard_peers,
            default_replication=config.replication_factor,
            root=blob_root,
        )
        self.chain = Chain(
            genesis_timestamp=self._genesis_timestamp(),
            applier=self._apply,
            data_dir=chain_dir,
        )
        self._events_changed = threading.Condition()
        self._sealer: Optional[threading.Thread] = None
        self._stop_sealer = threading.Event()

    # -- clock ----------------------------------------------------------------

    def _genesis_timestamp(self) -> int:
        if self.config.clock == CLOCK_LOGICAL:
            return self.config.logical_clock_start
        return int(time.time())

    def now(self) -> int:
        if self.config.clock == CLOCK_LOGICAL:
            # One second per block keeps replays byte-reproducible.
            return self.config.logical_clock_start + len(self.chain.blocks)
        return int(time.time())

    # -- transaction flow -------------------------------------------------------

    def submit(self, tx: Transaction) -> SubmitOutcome:
        """Queue a signed transaction; seal synchronously in immediate mode."""
        position = self.chain.submit(tx)
        receipt = None
        if self.config.seal_mode == SEAL_IMMEDIATE:
            self.seal_now()
            receipt = self.chain.get_receipt(tx.tx_id)
        return SubmitOutcome(tx_id=tx.tx_id, position=position, receipt=receipt)

    def seal_now(self) -> Optional[ledger.Block]:
        block = self.chain.seal(self.now())
        if block is not None:
            with self._events_changed:
                self._events_changed.notify_all()
        return block

    def _apply(self, tx: Transaction, height: int, timestamp: int, position: int):
        ctx = BlockContext(height=height, timestamp=timestamp, position=position)
        try:
            result = self.state.apply(tx.sender, tx.payload, ctx)
            return ledger.STATUS_APPLIED, None, result
        except ContractError as exc:
            return ledger.STATUS_FAILED, f"{type(exc).__name__}: {exc}", None

    # -- interval sealer ---------------------------------------------------------

    def start_interval_sealer(self) -> None:
        if self.config.seal_mode != SEAL_INTERVAL or self._sealer is not None:
            return
        self._stop_sealer.clear()

        def run():
            while not self._stop_sealer.wait(self.config.block_interval):
                self.seal_now()

        self._sealer = threading.Thread(target=run, name="block-sealer", daemon=True)
        self._sealer.start()

    def stop_interval_sealer(self) -> None:
        if self._sealer is None:
            return
        self._stop_sealer.set()
        self._sealer.join()
        self._sealer = None

    # -- events --------------------------------------------------------------------

    def events_since(self, cursor: int) -> List[Event]:
        return self.state.events_since(cursor)

    def wait_for_events(self, cursor: int, timeout: float) -> List[Event]:
        """Events after cursor, blocking up to timeout if none are there yet."""
        events = self.state.events_since(cursor)
        if events:
            return events
        with self._events_changed:
            self._events_changed.wait(timeout)
        return self.state.events_since(cursor)

    # -- blobs -----------------------------------------------------------------------

    def add_blob(self, data: bytes) -> ContentId:
        return self.cluster.add_blob(data)

    def get_blob(self, cid: ContentId) -> bytes:
        return self.cluster.get_blob(cid)

    # -- persistence -------------------------------------------------------------------

    @staticmethod
    def _resolve_owner(data_root: Path, owner_public_key: Optional[bytes]) -> bytes:
        """Owner is fixed at deployment: an existing root keeps its recorded
        owner regardless of who opens it later."""
        meta_path = data_root / META_FILE
        if meta_path.exists():
            return bytes.fromhex(json.loads(meta_path.read_text())["owner_public_key"])
        if owner_public_key is None:
            raise ValueError("fresh data root needs an owner public key")
        meta_path.write_text(json.dumps({"owner_public_key": owner_public_key.hex()}) + "\n")
        return owner_public_key

    def close(self) -> None:
        self.stop_interval_sealer()
