"""Environment-variable configuration for the scoring service."""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass
class Settings:
    model_id: str = "bert-base-uncased"
    max_sequence_length: int = 512
    max_batch_size: int = 64
    device: str = "cpu"

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            model_id=os.environ.get("ORACLE_MODEL", cls.model_id),
            max_sequence_length=int(
                os.environ.get("ORACLE_MAX_SEQUENCE", cls.max_sequence_length)
            ),
            max_batch_size=int(os.environ.get("ORACLE_MAX_BATCH", cls.max_batch_size)),
            device=os.environ.get("ORACLE_DEVICE", cls.device),
        )
