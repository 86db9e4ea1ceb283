"""Episode rollout backends.

The compiled extension is preferred when importable; the pure-Python
fallback is selected otherwise or when ``HYPERSHAPE_PURE_PYTHON=1`` is set.
Both expose the same ``simulate_episode`` and produce bit-identical
trajectories.
"""

from __future__ import annotations

import os

from . import _pyfallback
from ._pyfallback import (
    ACTION_DIM,
    FEATURE_DIM,
    FLAG_CRASHED,
    FLAG_LANDED,
    FLAG_RUNNING,
    FLAG_TIMEOUT,
    FLAG_TRUNCATED,
    state_features,
    step_scalars,
)

if os.environ.get("HYPERSHAPE_PURE_PYTHON", "") == "1":
    _impl = _pyfallback
    BACKEND = "python"
else:
    try:
        from . import _landercore as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _pyfallback
        BACKEND = "python"

simulate_episode = _impl.simulate_episode


def backend_name() -> str:
    """Which rollout implementation is active: 'compiled' or 'python'."""
    return BACKEND
