"""Ledger behaviour: submission, sealing, tamper evidence, persistence."""

import hashlib
import random

import pytest
from hypothesis import given, settings, strategies as st

from trialcustody import codec, keys
from trialcustody.ledger import (
    GENESIS_PARENT_HASH,
    STATUS_APPLIED,
    STATUS_FAILED,
    BadSignature,
    Block,
    Chain,
    ClockSkew,
    NotFound,
    StaleNonce,
    Transaction,
    sign_transaction,
)


@pytest.fixture
def identity():
    return keys.generate_identity()


def make_tx(identity, payload=b"payload", nonce=0):
    return sign_transaction(identity, payload, nonce)


def sealed_chain(num_blocks, txs_per_block=2, identity=None):
    """A chain of num_blocks sealed blocks (heights 1..num_blocks) plus genesis."""
    identity = identity or keys.generate_identity()
    chain = Chain(genesis_timestamp=100)
    nonce = 0
    for i in range(num_blocks):
        for _ in range(txs_per_block):
            chain.submit(make_tx(identity, b"data-%d" % nonce, nonce))
            nonce += 1
        chain.seal(now=101 + i)
    return chain


# -- the independent verification oracle --------------------------------------


def oracle_first_bad_height(blocks):
    """Brute-force recomputation scan, assembled field by field.

    Independent of Chain.verify: re-encodes each header here and walks the
    invariants directly.
    """
    expected_parent = GENESIS_PARENT_HASH
    previous_ts = None
    for position, block in enumerate(blocks):
        header = (
            codec.encode_u64(block.height)
            + codec.encode_bytes(block.parent_hash)
            + codec.encode_u64(block.timestamp)
            + codec.encode_list([tx.encode() for tx in block.transactions])
        )
        recomputed = hashlib.sha256(header).digest()
        if block.height != position:
            return position
        if block.parent_hash != expected_parent:
            return position
        if recomputed != block.block_hash:
            return position
        if previous_ts is not None and block.timestamp < previous_ts:
            return position
        expected_parent = block.block_hash
        previous_ts = block.timestamp
    return None


# -- submission ---------------------------------------------------------------


def test_valid_tx_accepted(identity):
    chain = Chain()
    position = chain.submit(make_tx(identity))
    assert position == 0
    assert len(chain.pending) == 1


def test_corrupted_signature_rejected(identity):
    chain = Chain()
    tx = make_tx(identity)
    bad_sig = bytearray(tx.signature)
    bad_sig[3] ^= 0x40
    bad = Transaction(tx.payload, tx.sender, tx.nonce, bytes(bad_sig))
    with pytest.raises(BadSignature):
        chain.submit(bad)
    assert chain.pending == []


def test_replay_of_sealed_nonce_rejected(identity):
    chain = Chain(genesis_timestamp=0)
    tx = make_tx(identity, nonce=0)
    chain.submit(tx)
    chain.seal(now=1)
    with pytest.raises(StaleNonce):
        chain.submit(make_tx(identity, b"other", nonce=0))


def test_pending_nonce_also_consumes(identity):
    chain = Chain()
    chain.submit(make_tx(identity, nonce=0))
    with pytest.raises(StaleNonce):
        chain.submit(make_tx(identity, b"other", nonce=0))


def test_next_nonce(identity):
    chain = Chain()
    assert chain.next_nonce(identity.public_key) == 0
    chain.submit(make_tx(identity, nonce=0))
    assert chain.next_nonce(identity.public_key) == 1


# -- sealing --------------------------------------------------------------------


def test_seal_drains_pending(identity):
    chain = Chain(genesis_timestamp=0)
    for nonce in range(3):
        chain.submit(make_tx(identity, b"x", nonce))
    block = chain.seal(now=5)
    assert len(block.transactions) == 3
    assert chain.pending == []
    assert block.height == 1


def test_empty_seal_produces_no_block():
    chain = Chain(genesis_timestamp=0)
    assert chain.seal(now=5) is None
    assert len(chain.blocks) == 1


def test_empty_seal_allowed_when_requested():
    chain = Chain(genesis_timestamp=0)
    block = chain.seal(now=5, allow_empty=True)
    assert block is not None
    assert block.transactions == ()


def test_sequential_seals_link(identity):
    chain = Chain(genesis_timestamp=0)
    chain.submit(make_tx(identity, nonce=0))
    first = chain.seal(now=1)
    chain.submit(make_tx(identity, nonce=1))
    second = chain.seal(now=2)
    assert second.parent_hash == first.block_hash
    assert first.parent_hash == chain.blocks[0].block_hash
    assert chain.blocks[0].parent_hash == GENESIS_PARENT_HASH


def test_timestamp_never_decreases(identity):
    chain = Chain(genesis_timestamp=100)
    chain.submit(make_tx(identity, nonce=0))
    first = chain.seal(now=200)
    chain.submit(make_tx(identity, nonce=1))
    second = chain.seal(now=150)  # clock went backwards
    assert first.timestamp == 200
    assert second.timestamp == 200


def test_clock_skew_before_genesis(identity):
    chain = Chain(genesis_timestamp=1000)
    chain.submit(make_tx(identity, nonce=0))
    with pytest.raises(ClockSkew):
        chain.seal(now=999)


# -- queries ----------------------------------------------------------------------


def test_get_block_genesis():
    chain = Chain(genesis_timestamp=7)
    genesis = chain.get_block(0)
    assert genesis.height == 0
    assert genesis.timestamp == 7
    assert genesis.parent_hash == GENESIS_PARENT_HASH


def test_get_block_missing():
    chain = Chain()
    with pytest.raises(NotFound):
        chain.get_block(3)


def test_receipt_of_sealed_tx(identity):
    chain = Chain(genesis_timestamp=0)
    tx = make_tx(identity)
    chain.submit(tx)
    chain.seal(now=1)
    receipt = chain.get_receipt(tx.tx_id)
    assert receipt.block_height == 1
    assert receipt.status == STATUS_APPLIED


def test_receipt_of_rejected_application(identity):
    def applier(tx, height, timestamp, position):
        return STATUS_FAILED, "NotWhitelisted: nope", None

    chain = Chain(genesis_timestamp=0, applier=applier)
    tx = make_tx(identity)
    chain.submit(tx)
    chain.seal(now=1)
    receipt = chain.get_receipt(tx.tx_id)
    assert receipt.status == STATUS_FAILED
    assert "NotWhitelisted" in receipt.reason


def test_receipt_unknown_tx():
    chain = Chain()
    with pytest.raises(NotFound):
        chain.get_receipt("00" * 32)


# -- verification -------------------------------------------------------------------


def test_untampered_chain_verifies():
    chain = sealed_chain(5)
    report = chain.verify()
    assert report.ok
    assert report.bad_height is None
    assert oracle_first_bad_height(chain.blocks) is None


def test_payload_flip_detected_at_height():
    chain = sealed_chain(5)
    target = chain.blocks[2]
    tx = target.transactions[0]
    mutated_tx = Transaction(
        b"\xff" + tx.payload[1:], tx.sender, tx.nonce, tx.signature
    )
    mutated = Block(
        height=target.height,
        parent_hash=target.parent_hash,
        timestamp=target.timestamp,
        transactions=(mutated_tx,) + target.transactions[1:],
        block_hash=target.block_hash,
    )
    chain.blocks[2] = mutated
    report = chain.verify()
    assert not report.ok
    assert report.bad_height == 2
    assert oracle_first_bad_height(chain.blocks) == 2


def test_swap_in_storage_detected_at_lower_height():
    chain = sealed_chain(5)
    chain.blocks[3], chain.blocks[4] = chain.blocks[4], chain.blocks[3]
    expected = oracle_first_bad_height(chain.blocks)
    assert expected == 3
    report = chain.verify()
    assert not report.ok
    assert report.bad_height == 3


def test_block_hash_tamper_detected():
    chain = sealed_chain(3)
    target = chain.blocks[1]
    forged = bytearray(target.block_hash)
    forged[0] ^= 0x01
    chain.blocks[1] = Block(
        target.height, target.parent_hash, target.timestamp, target.transactions, bytes(forged)
    )
    assert chain.verify().bad_height == 1
    assert oracle_first_bad_height(chain.blocks) == 1


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_single_byte_mutation_always_detected(data):
    """Tamper evidence: any single-byte change in any sealed block is flagged
    at or below the mutated height."""
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = random.Random(seed)
    chain = sealed_chain(4, identity=_SHARED_IDENTITY)
    height = data.draw(st.integers(0, len(chain.blocks) - 1))
    encoded = bytearray(chain.blocks[height].encode())
    index = data.draw(st.integers(0, len(encoded) - 1))
    encoded[index] ^= rng.randint(1, 255)
    try:
        mutated = Block.decode(bytes(encoded))
    except codec.CodecError:
        return  # structural damage: the storage layer itself flags this block
    chain.blocks[height] = mutated
    report = chain.verify()
    assert not report.ok
    assert report.bad_height <= height


_SHARED_IDENTITY = keys.generate_identity()


# -- determinism -----------------------------------------------------------------------


def test_replay_reproduces_hashes(identity):
    payloads = [b"alpha", b"beta", b"gamma", b"delta"]

    def build():
        chain = Chain(genesis_timestamp=50)
        for nonce, payload in enumerate(payloads):
            chain.submit(sign_transaction(identity, payload, nonce))
            if nonce % 2 == 1:
                chain.seal(now=60 + nonce)
        chain.seal(now=99)
        return chain

    first = build()
    second = build()
    assert [b.block_hash for b in first.blocks] == [b.block_hash for b in second.blocks]
    assert [b.encode() for b in first.blocks] == [b.encode() for b in second.blocks]


# -- transaction encoding ----------------------------------------------------------------


def test_transaction_roundtrip(identity):
    tx = make_tx(identity, b"\x00\x01\x02", nonce=9)
    assert Transaction.decode(tx.encode()) == tx


def test_block_roundtrip(identity):
    chain = Chain(genesis_timestamp=0)
    chain.submit(make_tx(identity))
    block = chain.seal(now=1)
    assert Block.decode(block.encode()) == block


# -- persistence ----------------------------------------------------------------------------


def test_chain_survives_restart(tmp_path, identity):
    data_dir = tmp_path / "chain"
    chain = Chain(genesis_timestamp=10, data_dir=data_dir)
    for nonce in range(4):
        chain.submit(make_tx(identity, b"p%d" % nonce, nonce))
        chain.seal(now=20 + nonce)
    original = [b.block_hash for b in chain.blocks]
    tx_id = chain.blocks[1].transactions[0].tx_id

    reloaded = Chain(data_dir=data_dir)
    assert [b.block_hash for b in reloaded.blocks] == original
    assert reloaded.verify().ok
    assert reloaded.get_receipt(tx_id).block_height == 1
    assert reloaded.next_nonce(identity.public_key) == 4


def test_reloaded_chain_continues(tmp_path, identity):
    data_dir = tmp_path / "chain"
    chain = Chain(genesis_timestamp=10, data_dir=data_dir)
    chain.submit(make_tx(identity, nonce=0))
    chain.seal(now=11)

    reloaded = Chain(data_dir=data_dir)
    reloaded.submit(make_tx(identity, b"later", nonce=1))
    block = reloaded.seal(now=12)
    assert block.height == 2
    assert reloaded.verify().ok

    again = Chain(data_dir=data_dir)
    assert len(again.blocks) == 3
    assert again.verify().ok
