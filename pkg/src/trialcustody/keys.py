"""Participant identities: Ed25519 keypairs and detached signatures.

The public key is the participant's address on the ledger.  Secret keys stay
client-side (key files for the CLI, browser storage for the web UI); nothing
in this package ever persists one on the ledger.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

PUBLIC_KEY_LEN = 32
SECRET_KEY_LEN = 32
SIGNATURE_LEN = 64


@dataclass(frozen=True)
class Identity:
    """One participant: owner, whitelisted submitter, or investigator."""

    public_key: bytes
    secret_key: bytes

    def __post_init__(self):
        if len(self.public_key) != PUBLIC_KEY_LEN:
            raise ValueError("bad public key length")
        if len(self.secret_key) != SECRET_KEY_LEN:
            raise ValueError("bad secret key length")


def generate_identity() -> Identity:
    sk = Ed25519PrivateKey.generate()
    return Identity(
        public_key=sk.public_key().public_bytes_raw(),
        secret_key=sk.private_bytes_raw(),
    )


def derive_public_key(secret_key: bytes) -> bytes:
    sk = Ed25519PrivateKey.from_private_bytes(secret_key)
    return sk.public_key().public_bytes_raw()


def sign(secret_key: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(secret_key).sign(message)


def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


def save_key_file(identity: Identity, path: Union[str, Path]) -> None:
    """Write a key file for CLI use.  The secret key never leaves this file."""
    payload = {
        "public_key": identity.public_key.hex(),
        "secret_key": identity.secret_key.hex(),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_key_file(path: Union[str, Path]) -> Identity:
    payload = json.loads(Path(path).read_text())
    identity = Identity(
        public_key=bytes.fromhex(payload["public_key"]),
        secret_key=bytes.fromhex(payload["secret_key"]),
    )
    if derive_public_key(identity.secret_key) != identity.public_key:
        raise ValueError(f"key file {path}: public key does not match secret key")
    return identity
