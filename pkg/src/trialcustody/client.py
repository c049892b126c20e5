"""Clients for driving a stack from the CLI: over HTTP or fully in-process.

Both backends sign client-side with the caller's key file; the secret key is
never transmitted.  They expose the same methods and raise the same ApiError
so the CLI cannot tell them apart.
"""

from __future__ import annotations

import json
from typing import List, Optional

import httpx

from . import contract, integrity, ledger, service
from .keys import Identity
from .ledger import Transaction
from .node import Node


class ApiError(Exception):
    def __init__(self, status: int, message: str, body: Optional[dict] = None):
        super().__init__(message)
        self.status = status
        self.body = body or {}


def _sign_call(identity: Identity, payload: bytes, nonce: int) -> Transaction:
    return ledger.sign_transaction(identity, payload, nonce)


class HttpBackend:
    """Talks to a running service over HTTP."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self._client = httpx.Client(base_url=base_url, timeout=timeout)

    def close(self):
        self._client.close()

    # -- plumbing -------------------------------------------------------------

    def _check(self, response: httpx.Response) -> dict:
        try:
            body = response.json()
        except json.JSONDecodeError:
            body = {}
        if response.status_code >= 400:
            message = body.get("error") or body.get("detail") or response.text
            raise ApiError(response.status_code, str(message), body)
        return body

    def next_nonce(self, public_key: bytes) -> int:
        body = self._check(self._client.get(f"/accounts/{public_key.hex()}/nonce"))
        return body["next_nonce"]

    def _signed_fields(self, identity: Identity, payload: bytes) -> dict:
        nonce = self.next_nonce(identity.public_key)
        tx = _sign_call(identity, payload, nonce)
        return {
            "sender": identity.public_key.hex(),
            "nonce": nonce,
            "signature": tx.signature.hex(),
        }

    # -- writes ------------------------------------------------------------------

    def set_manifest(self, identity: Identity, trial_id: str, filenames: List[str]) -> dict:
        payload = contract.encode_set_manifest(trial_id, filenames)
        fields = self._signed_fields(identity, payload)
        fields["filenames"] = filenames
        return self._check(self._client.post(f"/trials/{trial_id}/manifest", json=fields))

    def add_record(
        self,
        identity: Identity,
        trial_id: str,
        filename: str,
        file_hash: str,
        data: Optional[bytes] = None,
    ) -> dict:
        payload = contract.encode_record_metadata(filename, trial_id, file_hash)
        fields = self._signed_fields(identity, payload)
        fields.update({"filename": filename, "file_hash": file_hash})
        fields["nonce"] = str(fields["nonce"])  # multipart fields are strings
        files = {"file": (filename or "upload", data)} if data is not None else None
        return self._check(
            self._client.post(f"/trials/{trial_id}/records", data=fields, files=files)
        )

    def upload_blob(self, identity: Identity, data: bytes) -> dict:
        file_hash = integrity.hash_file(data)
        payload = service.BLOB_UPLOAD_TAG + file_hash.encode()
        fields = self._signed_fields(identity, payload)
        fields.update({"file_hash": file_hash, "nonce": str(fields["nonce"])})
        return self._check(
            self._client.post("/blobs", data=fields, files={"file": ("blob", data)})
        )

    def whitelist(self, identity: Identity, action: str, key: bytes) -> dict:
        if action == "add":
            payload = contract.encode_whitelist_add(key)
        else:
            payload = contract.encode_whitelist_remove(key)
        fields = self._signed_fields(identity, payload)
        fields.update({"action": action, "key": key.hex()})
        return self._check(self._client.post("/whitelist", json=fields))

    def transfer_ownership(self, identity: Identity, new_owner: bytes) -> dict:
        payload = contract.encode_transfer_ownership(new_owner)
        fields = self._signed_fields(identity, payload)
        fields["new_owner"] = new_owner.hex()
        return self._check(self._client.post("/ownership", json=fields))

    # -- reads --------------------------------------------------------------------

    def owner(self) -> dict:
        return self._check(self._client.get("/owner"))

    def get_whitelist(self) -> dict:
        return self._check(self._client.get("/whitelist"))

    def records(self, trial_id: str) -> dict:
        return self._check(self._client.get(f"/trials/{trial_id}/records"))

    def completeness(self, trial_id: str) -> dict:
        return self._check(self._client.get(f"/trials/{trial_id}/completeness"))

    def history(self, trial_id: str, filename: str) -> dict:
        return self._check(self._client.get(f"/trials/{trial_id}/files/{filename}/history"))

    def verify_trial(self, trial_id: str) -> dict:
        return self._check(self._client.get(f"/trials/{trial_id}/verify"))

    def verify_file(self, trial_id: str, filename: str) -> dict:
        return self._check(self._client.get(f"/trials/{trial_id}/files/{filename}/verify"))

    def block(self, height: int) -> dict:
        return self._check(self._client.get(f"/blocks/{height}"))

    def tx(self, tx_id: str) -> dict:
        return self._check(self._client.get(f"/tx/{tx_id}"))

    def chain_verify(self) -> dict:
        return self._check(self._client.get("/chain/verify"))


class EmbeddedBackend:
    """Runs the whole stack in-process against a local data root."""

    def __init__(self, node: Node):
        self.node = node

    def close(self):
        self.node.close()

    def _raise_for_status(self, status: int, body: dict) -> dict:
        if status >= 400:
            raise ApiError(status, str(body.get("error") or body.get("detail") or status), body)
        return body

    def _submit(self, identity: Identity, payload: bytes, extra: Optional[dict] = None) -> dict:
        nonce = self.node.chain.next_nonce(identity.public_key)
        outcome = self.node.submit(_sign_call(identity, payload, nonce))
        if outcome.receipt is not None and outcome.receipt.result and extra is not None:
            extra = dict(extra)
            extra.update(outcome.receipt.result)
        status, body = service.write_result(outcome, extra)
        return self._raise_for_status(status, body)

    def next_nonce(self, public_key: bytes) -> int:
        return self.node.chain.next_nonce(public_key)

    # -- writes ----------------------------------------------------------------------

    def set_manifest(self, identity: Identity, trial_id: str, filenames: List[str]) -> dict:
        return self._submit(identity, contract.encode_set_manifest(trial_id, filenames))

    def add_record(
        self,
        identity: Identity,
        trial_id: str,
        filename: str,
        file_hash: str,
        data: Optional[bytes] = None,
    ) -> dict:
        cid_hex = None
        if data is not None:
            digest = integrity.hash_file(data)
            if digest != file_hash:
                raise ApiError(422, f"digest mismatch: signed {file_hash}, data is {digest}")
            if self.node.state.is_authorized_submitter(identity.public_key):
                cid_hex = self.node.add_blob(data).hex
        payload = contract.encode_record_metadata(filename, trial_id, file_hash)
        return self._submit(identity, payload, {"content_id": cid_hex})

    def upload_blob(self, identity: Identity, data: bytes) -> dict:
        if not self.node.state.is_authorized_submitter(identity.public_key):
            raise ApiError(403, "sender is not on the submitter whitelist")
        return {"content_id": self.node.add_blob(data).hex}

    def whitelist(self, identity: Identity, action: str, key: bytes) -> dict:
        if action == "add":
            payload = contract.encode_whitelist_add(key)
        else:
            payload = contract.encode_whitelist_remove(key)
        return self._submit(identity, payload)

    def transfer_ownership(self, identity: Identity, new_owner: bytes) -> dict:
        return self._submit(identity, contract.encode_transfer_ownership(new_owner))

    # -- reads -----------------------------------------------------------------------

    def owner(self) -> dict:
        return {"owner": self.node.state.owner.hex()}

    def get_whitelist(self) -> dict:
        return {"whitelist": sorted(k.hex() for k in self.node.state.whitelist)}

    def records(self, trial_id: str) -> dict:
        state = self.node.state
        if not state.known_trial(trial_id):
            raise ApiError(404, f"unknown trial {trial_id!r}")
        ids = state.get_record_ids(trial_id)
        return {
            "trial_id": trial_id,
            "count": state.get_count(trial_id),
            "records": [state.get_record(i).to_dict() for i in ids],
        }

    def completeness(self, trial_id: str) -> dict:
        state = self.node.state
        try:
            submitted, missing = state.completeness(trial_id)
        except contract.NoManifest as exc:
            raise ApiError(404, str(exc))
        manifest = state.get_manifest(trial_id)
        return {
            "trial_id": trial_id,
            "required": list(manifest.required_filenames),
            "submitted": sorted(submitted),
            "missing": missing,
        }

    def history(self, trial_id: str, filename: str) -> dict:
        state = self.node.state
        if not state.known_trial(trial_id):
            raise ApiError(404, f"unknown trial {trial_id!r}")
        return {
            "trial_id": trial_id,
            "filename": filename,
            "history": [r.to_dict() for r in state.history(trial_id, filename)],
        }

    def verify_trial(self, trial_id: str) -> dict:
        try:
            report = integrity.verify_trial(self.node.state, self.node.cluster, trial_id)
        except contract.NoManifest as exc:
            raise ApiError(404, str(exc))
        return report.to_dict()

    def verify_file(self, trial_id: str, filename: str) -> dict:
        if not self.node.state.known_trial(trial_id):
            raise ApiError(404, f"unknown trial {trial_id!r}")
        verdict = integrity.verify_collection(self.node.state, self.node.cluster, trial_id, filename)
        return verdict.to_dict()

    def block(self, height: int) -> dict:
        try:
            block = self.node.chain.get_block(height)
        except ledger.NotFound as exc:
            raise ApiError(404, str(exc))
        return service.block_dict(self.node, block)

    def tx(self, tx_id: str) -> dict:
        if self.node.chain.has_receipt(tx_id):
            return {"receipt": service.receipt_dict(self.node.chain.get_receipt(tx_id))}
        if any(tx.tx_id == tx_id for tx in self.node.chain.pending):
            return {"tx_id": tx_id, "status": "pending"}
        raise ApiError(404, f"unknown transaction {tx_id}")

    def chain_verify(self) -> dict:
        report = self.node.chain.verify()
        return {
            "ok": report.ok,
            "bad_height": report.bad_height,
            "length": len(self.node.chain.blocks),
        }
