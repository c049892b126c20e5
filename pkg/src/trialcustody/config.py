"""Node configuration: JSON file plus environment overrides.

Environment variables TRIALCUSTODY_PORT and TRIALCUSTODY_DATA_ROOT override
the file, which is handy for containerized runs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

SEAL_IMMEDIATE = "immediate"
SEAL_INTERVAL = "interval"

CLOCK_SYSTEM = "system"
CLOCK_LOGICAL = "logical"

ENV_PORT = "TRIALCUSTODY_PORT"
ENV_DATA_ROOT = "TRIALCUSTODY_DATA_ROOT"


@dataclass
class NodeConfig:
    data_root: Optional[Path] = None
    cluster_size: int = 3
    standard_peers: int = 1
    replication_factor: int = 2
    block_interval: float = 1.0
    seal_mode: str = SEAL_IMMEDIATE
    listen_host: str = "127.0.0.1"
    port: int = 8350
    owner_public_key: Optional[str] = None  # hex; the contract deployer
    clock: str = CLOCK_SYSTEM
    logical_clock_start: int = 1_700_000_000

    def __post_init__(self):
        if self.seal_mode not in (SEAL_IMMEDIATE, SEAL_INTERVAL):
            raise ValueError(f"unknown seal mode {self.seal_mode!r}")
        if self.clock not in (CLOCK_SYSTEM, CLOCK_LOGICAL):
            raise ValueError(f"unknown clock {self.clock!r}")
        if self.data_root is not None:
            self.data_root = Path(self.data_root)


def load_config(path: Optional[Union[str, Path]] = None) -> NodeConfig:
    """Read config JSON (all keys optional), then apply env overrides."""
    values = {}
    if path is not None:
        values = json.loads(Path(path).read_text())
    config = NodeConfig(**values)
    if os.environ.get(ENV_PORT):
        config.port = int(os.environ[ENV_PORT])
    if os.environ.get(ENV_DATA_ROOT):
        config.data_root = Path(os.environ[ENV_DATA_ROOT])
    return config
