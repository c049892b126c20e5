"""Contract state machine: access control, records, manifests, events."""

import pytest
from hypothesis import given, strategies as st

from trialcustody import keys
from trialcustody.contract import (
    BadCursor,
    BadCall,
    BlockContext,
    ContractState,
    DuplicateFilename,
    EmptyField,
    EmptyManifest,
    EventKind,
    MalformedHash,
    NoManifest,
    NotFound,
    NotOwner,
    NotWhitelisted,
    decode_call,
    describe_call,
    encode_record_metadata,
    encode_set_manifest,
    encode_transfer_ownership,
    encode_whitelist_add,
    encode_whitelist_remove,
)

H1 = "a" * 64
H2 = "b" * 64
H3 = "c" * 64


@pytest.fixture
def owner():
    return keys.generate_identity().public_key


@pytest.fixture
def submitter():
    return keys.generate_identity().public_key


@pytest.fixture
def state(owner, submitter):
    s = ContractState.deploy(owner)
    s.whitelist_add(owner, submitter)
    return s


def ctx(height=1, timestamp=1000, position=0):
    return BlockContext(height=height, timestamp=timestamp, position=position)


# -- brute-force oracles over the record sequence ------------------------------


def oracle_ids(state, trial_id):
    return [r.record_id for r in state.records if r.trial_id == trial_id]


def oracle_count(state, trial_id):
    return sum(1 for r in state.records if r.trial_id == trial_id)


def oracle_history(state, trial_id, filename):
    return [r for r in state.records if r.trial_id == trial_id and r.filename == filename]


# -- deployment and ownership ----------------------------------------------------


def test_deploy_initial_state(owner):
    state = ContractState.deploy(owner)
    assert state.owner == owner
    assert state.records == []
    assert state.whitelist == set()


def test_transfer_ownership(owner, submitter):
    state = ContractState.deploy(owner)
    state.transfer_ownership(owner, submitter)
    assert state.owner == submitter
    assert state.events[-1].kind == EventKind.OWNERSHIP_TRANSFERRED


def test_transfer_ownership_requires_owner(owner, submitter):
    state = ContractState.deploy(owner)
    outsider = keys.generate_identity().public_key
    with pytest.raises(NotOwner):
        state.transfer_ownership(outsider, submitter)
    assert state.owner == owner


# -- whitelist ----------------------------------------------------------------------


def test_whitelist_add(owner, submitter):
    state = ContractState.deploy(owner)
    state.whitelist_add(owner, submitter)
    assert submitter in state.whitelist


def test_whitelist_add_requires_owner(owner, submitter):
    state = ContractState.deploy(owner)
    with pytest.raises(NotOwner):
        state.whitelist_add(submitter, submitter)


def test_whitelist_add_idempotent(owner, submitter):
    state = ContractState.deploy(owner)
    state.whitelist_add(owner, submitter)
    events_before = len(state.events)
    state.whitelist_add(owner, submitter)
    assert len(state.whitelist) == 1
    assert len(state.events) == events_before


def test_whitelist_remove_idempotent(owner, submitter):
    state = ContractState.deploy(owner)
    state.whitelist_remove(owner, submitter)  # absent: no-op, no error
    assert submitter not in state.whitelist


# -- manifests --------------------------------------------------------------------------


def test_set_manifest(state, owner):
    state.set_manifest(owner, "T1", ["a.csv", "b.mp4", "c.log"])
    manifest = state.get_manifest("T1")
    assert manifest.required_filenames == ("a.csv", "b.mp4", "c.log")
    assert state.events[-1].kind == EventKind.MANIFEST_SET


def test_manifest_duplicate_filename(state, owner):
    with pytest.raises(DuplicateFilename):
        state.set_manifest(owner, "T1", ["a.csv", "a.csv"])


def test_manifest_requires_owner(state, submitter):
    with pytest.raises(NotOwner):
        state.set_manifest(submitter, "T1", ["a.csv"])


def test_manifest_empty_rejected(state, owner):
    with pytest.raises(EmptyManifest):
        state.set_manifest(owner, "T1", [])
    with pytest.raises(EmptyField):
        state.set_manifest(owner, "T1", ["a.csv", ""])


def test_manifest_resubmission_replaces(state, owner):
    state.set_manifest(owner, "T1", ["a.csv"])
    state.set_manifest(owner, "T1", ["b.csv", "c.csv"])
    assert state.get_manifest("T1").required_filenames == ("b.csv", "c.csv")
    # the old manifest stays recoverable from the event log
    manifest_events = [e for e in state.events if e.kind == EventKind.MANIFEST_SET]
    assert manifest_events[0].payload["required_filenames"] == ["a.csv"]


# -- records ----------------------------------------------------------------------------------


def test_record_ids_follow_sequence(state, submitter):
    first = state.record_metadata(submitter, "a.csv", "T1", H1, ctx())
    second = state.record_metadata(submitter, "b.mp4", "T1", H2, ctx())
    assert first == {"record_id": 0}
    assert second == {"record_id": 1}


def test_record_requires_whitelist(owner):
    state = ContractState.deploy(owner)
    outsider = keys.generate_identity().public_key
    with pytest.raises(NotWhitelisted):
        state.record_metadata(outsider, "a.csv", "T1", H1, ctx())
    assert state.records == []


def test_owner_implicitly_whitelisted(owner):
    state = ContractState.deploy(owner)
    state.record_metadata(owner, "a.csv", "T1", H1, ctx())
    assert len(state.records) == 1


def test_record_validation(state, submitter):
    with pytest.raises(EmptyField):
        state.record_metadata(submitter, "", "T1", H1, ctx())
    with pytest.raises(EmptyField):
        state.record_metadata(submitter, "a.csv", "", H1, ctx())
    with pytest.raises(MalformedHash):
        state.record_metadata(submitter, "a.csv", "T1", "zz" * 32, ctx())
    with pytest.raises(MalformedHash):
        state.record_metadata(submitter, "a.csv", "T1", "A" * 64, ctx())
    with pytest.raises(MalformedHash):
        state.record_metadata(submitter, "a.csv", "T1", "ab" * 16, ctx())


def test_record_takes_block_timestamp(state, submitter):
    state.record_metadata(submitter, "a.csv", "T1", H1, ctx(height=4, timestamp=4444))
    record = state.get_record(0)
    assert record.timestamp == 4444
    assert record.submitter == submitter


def test_counts_match_oracle(state, submitter):
    state.record_metadata(submitter, "a.csv", "T1", H1, ctx())
    state.record_metadata(submitter, "b.mp4", "T1", H2, ctx())
    state.record_metadata(submitter, "x.log", "T2", H3, ctx())
    assert state.get_count("T1") == oracle_count(state, "T1") == 2
    assert state.get_count("T2") == oracle_count(state, "T2") == 1
    assert state.get_count("T9") == oracle_count(state, "T9") == 0


def test_two_phase_retrieval_matches_filter_oracle(state, submitter):
    state.record_metadata(submitter, "a.csv", "T1", H1, ctx())
    state.record_metadata(submitter, "b.mp4", "T1", H2, ctx())
    state.record_metadata(submitter, "x.log", "T2", H3, ctx())
    ids = state.get_record_ids("T1")
    assert ids == oracle_ids(state, "T1") == [0, 1]
    assert [state.get_record(i) for i in ids] == [
        r for r in state.records if r.trial_id == "T1"
    ]
    assert state.get_record_ids("unknown") == []


def test_get_record_bounds(state):
    with pytest.raises(NotFound):
        state.get_record(0)


def test_duplicate_filename_records_form_history(state, submitter):
    state.record_metadata(submitter, "a.csv", "T1", H1, ctx(timestamp=1))
    state.record_metadata(submitter, "a.csv", "T1", H2, ctx(timestamp=2))
    history = state.history("T1", "a.csv")
    assert [r.file_hash for r in history] == [H1, H2]
    assert history == oracle_history(state, "T1", "a.csv")
    assert state.history("T1", "never.bin") == []


def test_byte_exact_name_matching(state, submitter):
    # no case folding, no normalization: checksummed evidence is never fuzzy-matched
    state.record_metadata(submitter, "A.csv", "T1", H1, ctx())
    assert state.history("T1", "a.csv") == []
    assert state.get_record_ids("t1") == []


# -- completeness -----------------------------------------------------------------------------------


def test_completeness_two_of_three_submitted(state, owner, submitter):
    state.set_manifest(owner, "T1", ["a.csv", "b.mp4", "c.log"])
    state.record_metadata(submitter, "a.csv", "T1", H1, ctx())
    state.record_metadata(submitter, "b.mp4", "T1", H2, ctx())
    submitted, missing = state.completeness("T1")
    assert submitted == {"a.csv", "b.mp4"}
    assert missing == ["c.log"]


def test_completeness_nothing_submitted(state, owner):
    state.set_manifest(owner, "T1", ["a.csv", "b.mp4", "c.log"])
    submitted, missing = state.completeness("T1")
    assert submitted == set()
    assert missing == ["a.csv", "b.mp4", "c.log"]


def test_completeness_all_submitted(state, owner, submitter):
    state.set_manifest(owner, "T1", ["a.csv", "b.mp4", "c.log"])
    for name, digest in [("a.csv", H1), ("b.mp4", H2), ("c.log", H3)]:
        state.record_metadata(submitter, name, "T1", digest, ctx())
    submitted, missing = state.completeness("T1")
    assert missing == []
    assert submitted == {"a.csv", "b.mp4", "c.log"}


def test_completeness_reports_extras(state, owner, submitter):
    state.set_manifest(owner, "T1", ["a.csv"])
    state.record_metadata(submitter, "a.csv", "T1", H1, ctx())
    state.record_metadata(submitter, "extra.bin", "T1", H2, ctx())
    submitted, missing = state.completeness("T1")
    assert "extra.bin" in submitted
    assert missing == []


def test_completeness_requires_manifest(state):
    with pytest.raises(NoManifest):
        state.completeness("T1")


def test_manifest_after_records_allowed(state, owner, submitter):
    state.record_metadata(submitter, "a.csv", "T1", H1, ctx())
    state.set_manifest(owner, "T1", ["a.csv", "b.mp4"])
    submitted, missing = state.completeness("T1")
    assert submitted == {"a.csv"}
    assert missing == ["b.mp4"]


@given(
    manifest_names=st.lists(
        st.text(min_size=1, max_size=8), min_size=1, max_size=8, unique=True
    ),
    recorded=st.lists(st.text(min_size=1, max_size=8), max_size=12),
)
def test_completeness_partition_property(manifest_names, recorded):
    """missing ∪ (manifest ∩ recorded) = manifest, and the union is disjoint."""
    owner = b"\x01" * 32
    state = ContractState.deploy(owner)
    state.set_manifest(owner, "T", manifest_names)
    for i, name in enumerate(recorded):
        state.record_metadata(owner, name, "T", H1, ctx(position=i))
    submitted, missing = state.completeness("T")
    manifest = set(manifest_names)
    assert set(missing) | (manifest & submitted) == manifest
    assert not set(missing) & submitted
    assert submitted == set(recorded)
    # manifest order preserved in the missing list
    assert missing == [n for n in manifest_names if n not in submitted]


# -- events ------------------------------------------------------------------------------------------------


def test_record_added_events_match_records(state, submitter):
    state.record_metadata(submitter, "a.csv", "T1", H1, ctx(height=2, position=0))
    state.record_metadata(submitter, "b.mp4", "T1", H2, ctx(height=2, position=1))
    added = [e for e in state.events if e.kind == EventKind.RECORD_ADDED]
    assert len(added) == len(state.records)
    for event, record in zip(added, state.records):
        assert event.payload == record.to_dict()
    assert added[0].block_height == 2
    assert added[1].tx_position == 1


def test_events_since_cursor(state, submitter):
    state.record_metadata(submitter, "a.csv", "T1", H1, ctx())
    events = state.events_since(0)
    assert len(events) >= 1
    assert state.events_since(len(state.events)) == []
    with pytest.raises(BadCursor):
        state.events_since(len(state.events) + 1)
    with pytest.raises(BadCursor):
        state.events_since(-1)


# -- call payload codec -------------------------------------------------------------------------------------


def test_call_roundtrips(owner, submitter):
    cases = [
        (encode_transfer_ownership(owner), {"new_owner": owner}),
        (encode_whitelist_add(submitter), {"key": submitter}),
        (encode_whitelist_remove(submitter), {"key": submitter}),
        (
            encode_set_manifest("T1", ["a.csv", "b.mp4"]),
            {"trial_id": "T1", "filenames": ["a.csv", "b.mp4"]},
        ),
        (
            encode_record_metadata("a.csv", "T1", H1),
            {"filename": "a.csv", "trial_id": "T1", "file_hash": H1},
        ),
    ]
    for payload, expected_args in cases:
        _tag, args = decode_call(payload)
        assert args == expected_args


def test_bad_calls_rejected():
    with pytest.raises(BadCall):
        decode_call(b"")
    with pytest.raises(BadCall):
        decode_call(b"ZZZZ" + b"\x00")
    with pytest.raises(BadCall):
        decode_call(encode_whitelist_add(b"\x01" * 32) + b"extra")


def test_describe_call(submitter):
    described = describe_call(encode_whitelist_add(submitter))
    assert described["operation"] == "whitelist_add"
    assert described["args"]["key"] == submitter.hex()
    assert describe_call(b"????")["operation"] == "unknown"


def test_apply_dispatch(owner, submitter):
    state = ContractState.deploy(owner)
    state.apply(owner, encode_whitelist_add(submitter), ctx())
    state.apply(owner, encode_set_manifest("T1", ["a.csv"]), ctx())
    result = state.apply(submitter, encode_record_metadata("a.csv", "T1", H1), ctx(timestamp=7))
    assert result == {"record_id": 0}
    assert state.get_record(0).timestamp == 7
    with pytest.raises(NotWhitelisted):
        state.apply(
            keys.generate_identity().public_key,
            encode_record_metadata("b.mp4", "T1", H2),
            ctx(),
        )
