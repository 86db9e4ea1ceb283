"""Parameter search spaces and their unit-hypercube encoding.

Every optimized quantity (trainer hyperparameter, reward weight, reward
scale) is declared as a :class:`ParamSpec`.  The optimizer itself only ever
sees vectors in ``[0, 1]^d``; :class:`SearchSpace` provides the bijection
between those vectors and named values.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

ROLE_HYPERPARAMETER = "hyperparameter"
ROLE_REWARD_WEIGHT = "reward_weight"
ROLE_REWARD_SCALE = "reward_scale"
ROLES = (ROLE_HYPERPARAMETER, ROLE_REWARD_WEIGHT, ROLE_REWARD_SCALE)

KIND_CONTINUOUS = "continuous"
KIND_CATEGORICAL = "categorical"


class SpaceError(ValueError):
    """Invalid parameter definition or out-of-domain value."""


@dataclass(frozen=True)
class ParamSpec:
    """One optimizable parameter.

    Continuous specs map ``[0, 1]`` onto ``[lo, hi]`` (linearly or in log
    space); categorical specs split ``[0, 1]`` into equal-width bins, one per
    choice, which keeps differential-evolution arithmetic meaningful.
    """

    name: str
    kind: str = KIND_CONTINUOUS
    lo: float = 0.0
    hi: float = 1.0
    choices: tuple = ()
    log_scale: bool = False
    role: str = ROLE_HYPERPARAMETER

    def __post_init__(self) -> None:
        if not self.name:
            raise SpaceError("parameter name must be non-empty")
        if self.role not in ROLES:
            raise SpaceError(f"{self.name}: unknown role {self.role!r}")
        if self.kind == KIND_CATEGORICAL:
            if len(self.choices) == 0:
                raise SpaceError(f"{self.name}: categorical needs at least one choice")
            if self.log_scale:
                raise SpaceError(f"{self.name}: log scale is meaningless for categoricals")
        elif self.kind == KIND_CONTINUOUS:
            if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
                raise SpaceError(f"{self.name}: bounds must be finite")
            if not self.lo < self.hi:
                raise SpaceError(f"{self.name}: lo ({self.lo}) must be < hi ({self.hi})")
            if self.log_scale and self.lo <= 0:
                raise SpaceError(f"{self.name}: log scale requires lo > 0")
        else:
            raise SpaceError(f"{self.name}: unknown kind {self.kind!r}")

    def decode(self, u: float) -> Any:
        """Map one unit-interval coordinate to this parameter's value."""
        if not 0.0 <= u <= 1.0:
            raise SpaceError(f"{self.name}: unit component {u} outside [0, 1]")
        if self.kind == KIND_CATEGORICAL:
            k = len(self.choices)
            return self.choices[min(int(math.floor(u * k)), k - 1)]
        if u == 0.0:
            return self.lo
        if u == 1.0:
            return self.hi
        if self.log_scale:
            return math.exp(math.log(self.lo) + u * (math.log(self.hi) - math.log(self.lo)))
        return self.lo + u * (self.hi - self.lo)

    def encode(self, value: Any) -> float:
        """Inverse of :meth:`decode`; categoricals encode to their bin midpoint."""
        if self.kind == KIND_CATEGORICAL:
            for i, choice in enumerate(self.choices):
                if choice == value:
                    return (i + 0.5) / len(self.choices)
            raise SpaceError(f"{self.name}: {value!r} is not one of {self.choices}")
        v = float(value)
        grace = 1e-9 * max(abs(self.lo), abs(self.hi))
        if not self.lo - grace <= v <= self.hi + grace:
            raise SpaceError(f"{self.name}: value {v} outside [{self.lo}, {self.hi}]")
        v = min(max(v, self.lo), self.hi)
        if self.log_scale:
            u = (math.log(v) - math.log(self.lo)) / (math.log(self.hi) - math.log(self.lo))
        else:
            u = (v - self.lo) / (self.hi - self.lo)
        return min(max(u, 0.0), 1.0)


@dataclass(frozen=True)
class SearchSpace:
    """An ordered collection of :class:`ParamSpec` with unique names."""

    specs: tuple[ParamSpec, ...]

    def __post_init__(self) -> None:
        if len(self.specs) < 1:
            raise SpaceError("search space needs at least one parameter")
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise SpaceError(f"duplicate parameter names in {names}")

    @property
    def dimension(self) -> int:
        return len(self.specs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    def spec(self, name: str) -> ParamSpec:
        for s in self.specs:
            if s.name == name:
                return s
        raise SpaceError(f"no parameter named {name!r}")

    def decode(self, unit: Sequence[float]) -> dict[str, Any]:
        """Decode a unit vector into a name -> value map.  Deterministic."""
        u = np.asarray(unit, dtype=float)
        if u.shape != (self.dimension,):
            raise SpaceError(f"unit vector has shape {u.shape}, expected ({self.dimension},)")
        return {s.name: s.decode(float(ui)) for s, ui in zip(self.specs, u)}

    def encode(self, values: Mapping[str, Any]) -> np.ndarray:
        """Encode named values back into the unit hypercube."""
        missing = [s.name for s in self.specs if s.name not in values]
        if missing:
            raise SpaceError(f"missing values for {missing}")
        return np.array([s.encode(values[s.name]) for s in self.specs])

    def configuration(self, unit: Sequence[float]) -> "Configuration":
        u = np.asarray(unit, dtype=float).copy()
        values = self.decode(u)
        u.setflags(write=False)
        return Configuration(unit=u, values=values, id=_unit_hash(u))

    def sample_uniform(self, rng: np.random.Generator) -> "Configuration":
        """Draw each unit component i.i.d. uniform on [0, 1]."""
        return self.configuration(rng.random(self.dimension))

    def subset(self, roles: Iterable[str]) -> "SearchSpace":
        """Restrict to parameters with one of the given roles."""
        wanted = set(roles)
        kept = tuple(s for s in self.specs if s.role in wanted)
        return SearchSpace(kept)


@dataclass(frozen=True)
class Configuration:
    """A point in the unit hypercube together with its decoded values."""

    unit: np.ndarray
    values: dict[str, Any]
    id: str

    def __post_init__(self) -> None:
        u = np.asarray(self.unit, dtype=float)
        if u.ndim != 1 or np.any(u < 0.0) or np.any(u > 1.0):
            raise SpaceError("configuration unit vector must lie in [0, 1]^d")


def _unit_hash(unit: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(unit, dtype=np.float64).tobytes()).hexdigest()[:12]


def weight_search_range(default_weight: float) -> tuple[float, float]:
    """Search range for a reward weight given its default value.

    A non-negative default w maps to [0, 10^n] where n is the smallest
    non-negative integer with w < 10^n; negative defaults mirror to
    [-10^n, 0] using |w|.  This preserves the weight's order of magnitude
    without trusting the default ratios.
    """
    w = float(default_weight)
    if not math.isfinite(w):
        raise SpaceError(f"default weight must be finite, got {w}")
    mag = abs(w)
    n = 0
    while mag >= 10.0**n:
        n += 1
    hi = float(10.0**n)
    return (0.0, hi) if w >= 0 else (-hi, 0.0)


def weight_spec(name: str, default_weight: float) -> ParamSpec:
    """Reward-weight spec with the range derived from its default value."""
    lo, hi = weight_search_range(default_weight)
    return ParamSpec(name=name, lo=lo, hi=hi, role=ROLE_REWARD_WEIGHT)
