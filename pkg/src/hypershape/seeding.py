"""Deterministic seed derivation.

All experiment randomness flows from a master seed through
``numpy.random.SeedSequence`` so that any evaluation, fitness seed, or
spawned worker can be reproduced from its coordinates alone, without a seed
table.
"""

from __future__ import annotations

import numpy as np

_ARM_CODES = {"hpo-only": 1, "rpo-only": 2, "combined": 3, "combined-rs": 4}


def derive_seed(*parts: int) -> int:
    """Stable 32-bit seed from integer coordinates."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def arm_code(arm: str) -> int:
    return _ARM_CODES[arm]
