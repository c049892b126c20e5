"""Chain-of-custody tooling for vehicle trial evidence data.

A trial organization registers required dataset manifests and dataset
metadata (content hashes included) on an append-only, hash-chained ledger
that executes a deterministic access-controlled state machine.  The datasets
themselves live in a replicated content-addressed blob store.  After an
incident, an investigator can verify both completeness (what is missing
against the manifest) and byte-level integrity (does the stored file still
hash to the recorded digest) of the evidence set.
"""

__version__ = "0.1.0"
