"""HTTP interface for the three user tasks plus explorer and event stream.

Writes arrive as signed calls: the JSON (or multipart) body carries the
sender key, a nonce, and a detached signature over the canonical encoding of
(call payload, sender, nonce) — exactly the material the ledger transaction
is built from, so the client-side signature IS the transaction signature.
Reads are unauthenticated in this prototype.

In immediate seal mode a write response arrives after its block is sealed
and includes the receipt; in interval mode the response is 202 and the
client polls /tx/{tx_id}.
"""

from __future__ import annotations

import asyncio
import json
from contextlib import asynccontextmanager
from typing import List, Optional

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from . import contract, integrity, keys, ledger
from .config import SEAL_INTERVAL
from .ledger import Receipt, Transaction
from .node import Node, SubmitOutcome

# Payload tag for the storage-plane blob upload (not a ledger operation).
BLOB_UPLOAD_TAG = b"BLOB"

# How contract rejection reasons map onto HTTP statuses.
_REASON_STATUS = {
    "NotOwner": 403,
    "NotWhitelisted": 403,
    "DuplicateFilename": 422,
    "EmptyManifest": 422,
    "EmptyField": 422,
    "MalformedHash": 422,
    "BadCall": 422,
}

_EVENT_POLL_SECONDS = 0.05


class SignedCall(BaseModel):
    sender: str  # public key, hex
    nonce: int
    signature: str  # hex


class ManifestBody(SignedCall):
    filenames: List[str]


class WhitelistBody(SignedCall):
    action: str  # "add" | "remove"
    key: str  # public key, hex


class OwnershipBody(SignedCall):
    new_owner: str  # public key, hex


def receipt_dict(receipt: Receipt) -> dict:
    return {
        "tx_id": receipt.tx_id,
        "block_height": receipt.block_height,
        "position": receipt.position,
        "status": receipt.status,
        "reason": receipt.reason,
        "result": receipt.result,
    }


def block_dict(node: Node, block: ledger.Block) -> dict:
    transactions = []
    for tx in block.transactions:
        entry = {
            "tx_id": tx.tx_id,
            "sender": tx.sender.hex(),
            "nonce": tx.nonce,
            "call": contract.describe_call(tx.payload),
        }
        if node.chain.has_receipt(tx.tx_id):
            receipt = node.chain.get_receipt(tx.tx_id)
            entry["status"] = receipt.status
            entry["reason"] = receipt.reason
        transactions.append(entry)
    return {
        "height": block.height,
        "parent_hash": block.parent_hash.hex(),
        "timestamp": block.timestamp,
        "block_hash": block.block_hash.hex(),
        "transactions": transactions,
    }


def _reason_class(receipt: Receipt) -> Optional[str]:
    if receipt.reason is None:
        return None
    return receipt.reason.split(":", 1)[0]


def write_result(outcome: SubmitOutcome, extra: Optional[dict] = None):
    """(http status, body) for a write outcome; shared with the embedded client."""
    if outcome.receipt is None:  # interval mode: sealed later
        return 202, {"tx_id": outcome.tx_id, "status": "pending", "poll": f"/tx/{outcome.tx_id}"}
    receipt = outcome.receipt
    body = {"receipt": receipt_dict(receipt)}
    if extra:
        body.update(extra)
    if receipt.status == ledger.STATUS_FAILED:
        status = _REASON_STATUS.get(_reason_class(receipt), 422)
        body["error"] = _reason_class(receipt)
        return status, body
    return 200, body


def _write_response(outcome: SubmitOutcome, extra: Optional[dict] = None) -> JSONResponse:
    status, body = write_result(outcome, extra)
    return JSONResponse(body, status_code=status)


def create_app(node: Node) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if node.config.seal_mode == SEAL_INTERVAL:
            node.start_interval_sealer()
        yield
        node.close()

    app = FastAPI(title="trialcustody", lifespan=lifespan)
    # the web UI is served from its own origin; writes are signature-checked
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.node = node

    def submit_signed(sender: str, nonce: int, signature: str, payload: bytes) -> SubmitOutcome:
        try:
            tx = Transaction(
                payload=payload,
                sender=bytes.fromhex(sender),
                nonce=nonce,
                signature=bytes.fromhex(signature),
            )
        except ValueError:
            raise HTTPException(401, "sender and signature must be hex")
        try:
            return node.submit(tx)
        except ledger.BadSignature:
            raise HTTPException(401, "signature verification failed")
        except ledger.StaleNonce as exc:
            raise HTTPException(409, str(exc))

    # -- writes ---------------------------------------------------------------

    @app.post("/trials/{trial_id}/manifest")
    def set_manifest(trial_id: str, body: ManifestBody):
        payload = contract.encode_set_manifest(trial_id, body.filenames)
        outcome = submit_signed(body.sender, body.nonce, body.signature, payload)
        return _write_response(outcome)

    @app.post("/trials/{trial_id}/records")
    async def add_record(
        trial_id: str,
        sender: str = Form(...),
        nonce: int = Form(...),
        signature: str = Form(...),
        filename: str = Form(""),  # empty reaches the contract as EmptyField
        file_hash: str = Form(""),
        file: Optional[UploadFile] = File(None),
    ):
        cid_hex = None
        if file is not None:
            data = await file.read()
            server_digest = integrity.hash_file(data)
            if server_digest != file_hash:
                raise HTTPException(
                    422,
                    f"digest mismatch: client signed {file_hash}, upload hashes to {server_digest}",
                )
            # Skip storage when the call is doomed; the attempt still seals.
            if node.state.is_authorized_submitter(bytes.fromhex(sender)):
                cid_hex = node.add_blob(data).hex
        payload = contract.encode_record_metadata(filename, trial_id, file_hash)
        outcome = submit_signed(sender, nonce, signature, payload)
        extra = {"content_id": cid_hex}
        if outcome.receipt is not None and outcome.receipt.result:
            extra["record_id"] = outcome.receipt.result.get("record_id")
        return _write_response(outcome, extra)

    @app.post("/whitelist")
    def change_whitelist(body: WhitelistBody):
        key = bytes.fromhex(body.key)
        if body.action == "add":
            payload = contract.encode_whitelist_add(key)
        elif body.action == "remove":
            payload = contract.encode_whitelist_remove(key)
        else:
            raise HTTPException(422, f"unknown whitelist action {body.action!r}")
        outcome = submit_signed(body.sender, body.nonce, body.signature, payload)
        return _write_response(outcome)

    @app.post("/ownership")
    def transfer_ownership(body: OwnershipBody):
        payload = contract.encode_transfer_ownership(bytes.fromhex(body.new_owner))
        outcome = submit_signed(body.sender, body.nonce, body.signature, payload)
        return _write_response(outcome)

    @app.post("/blobs")
    async def upload_blob(
        sender: str = Form(...),
        nonce: int = Form(...),
        signature: str = Form(...),
        file_hash: str = Form(...),
        file: UploadFile = File(...),
    ):
        """Storage-plane upload for datasets recorded hash-only earlier.

        Signed like a call but never sealed: the ledger record already
        exists, this just delivers the bytes to the cluster.
        """
        payload = BLOB_UPLOAD_TAG + file_hash.encode()
        material = (
            Transaction(payload, bytes.fromhex(sender), nonce, b"").signing_material()
        )
        if not keys.verify(bytes.fromhex(sender), material, bytes.fromhex(signature)):
            raise HTTPException(401, "signature verification failed")
        if not node.state.is_authorized_submitter(bytes.fromhex(sender)):
            raise HTTPException(403, "sender is not on the submitter whitelist")
        data = await file.read()
        digest = integrity.hash_file(data)
        if digest != file_hash:
            raise HTTPException(422, f"upload hashes to {digest}, not {file_hash}")
        cid = node.add_blob(data)
        return {"content_id": cid.hex}

    # -- reads ------------------------------------------------------------------

    @app.get("/owner")
    def get_owner():
        return {"owner": node.state.owner.hex()}

    @app.get("/whitelist")
    def get_whitelist():
        return {"whitelist": sorted(k.hex() for k in node.state.whitelist)}

    @app.get("/accounts/{public_key}/nonce")
    def get_nonce(public_key: str):
        try:
            sender = bytes.fromhex(public_key)
        except ValueError:
            raise HTTPException(404, "not a public key")
        return {"next_nonce": node.chain.next_nonce(sender)}

    def _require_known_trial(trial_id: str) -> None:
        if not node.state.known_trial(trial_id):
            raise HTTPException(404, f"unknown trial {trial_id!r}")

    @app.get("/trials/{trial_id}/records")
    def trial_records(trial_id: str):
        _require_known_trial(trial_id)
        ids = node.state.get_record_ids(trial_id)
        return {
            "trial_id": trial_id,
            "count": node.state.get_count(trial_id),
            "records": [node.state.get_record(i).to_dict() for i in ids],
        }

    @app.get("/trials/{trial_id}/completeness")
    def trial_completeness(trial_id: str):
        try:
            submitted, missing = node.state.completeness(trial_id)
        except contract.NoManifest as exc:
            raise HTTPException(404, str(exc))
        manifest = node.state.get_manifest(trial_id)
        return {
            "trial_id": trial_id,
            "required": list(manifest.required_filenames),
            "submitted": sorted(submitted),
            "missing": missing,
        }

    @app.get("/trials/{trial_id}/files/{filename}/history")
    def file_history(trial_id: str, filename: str):
        _require_known_trial(trial_id)
        history = node.state.history(trial_id, filename)
        return {
            "trial_id": trial_id,
            "filename": filename,
            "history": [r.to_dict() for r in history],
        }

    @app.get("/trials/{trial_id}/verify")
    def trial_verify(trial_id: str):
        try:
            report = integrity.verify_trial(node.state, node.cluster, trial_id)
        except contract.NoManifest as exc:
            raise HTTPException(404, str(exc))
        return report.to_dict()

    @app.get("/trials/{trial_id}/files/{filename}/verify")
    def file_verify(trial_id: str, filename: str, record_id: Optional[int] = None):
        _require_known_trial(trial_id)
        verdict = integrity.verify_collection(
            node.state, node.cluster, trial_id, filename, record_id=record_id
        )
        return verdict.to_dict()

    @app.get("/blocks/{height}")
    def get_block(height: int):
        try:
            block = node.chain.get_block(height)
        except ledger.NotFound as exc:
            raise HTTPException(404, str(exc))
        return block_dict(node, block)

    @app.get("/tx/{tx_id}")
    def get_tx(tx_id: str):
        if node.chain.has_receipt(tx_id):
            return {"receipt": receipt_dict(node.chain.get_receipt(tx_id))}
        if any(tx.tx_id == tx_id for tx in node.chain.pending):
            return {"tx_id": tx_id, "status": "pending"}
        raise HTTPException(404, f"unknown transaction {tx_id}")

    @app.get("/chain/verify")
    def chain_verify():
        report = node.chain.verify()
        return {"ok": report.ok, "bad_height": report.bad_height, "length": len(node.chain.blocks)}

    # -- event stream ---------------------------------------------------------------

    @app.get("/events")
    async def events(cursor: int = 0, limit: Optional[int] = None):
        try:
            node.events_since(cursor)
        except contract.BadCursor as exc:
            raise HTTPException(400, str(exc))

        async def stream(position: int):
            sent = 0
            while True:
                batch = node.events_since(position)
                for event in batch:
                    position += 1
                    frame = {"cursor": position, "event": event.to_dict()}
                    yield f"id: {position}\ndata: {json.dumps(frame)}\n\n"
                    sent += 1
                    if limit is not None and sent >= limit:
                        return
                await asyncio.sleep(_EVENT_POLL_SECONDS)

        return StreamingResponse(stream(cursor), media_type="text/event-stream")

    return app
