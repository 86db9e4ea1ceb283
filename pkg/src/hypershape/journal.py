"""Append-only JSONL evaluation journal.

One JSON object per line: a header carrying the config hash first, then one
record per evaluation.  Records are self-validating (the stored unit vector
must re-decode to the stored values, the fitness must equal the mean of the
per-seed values), which is what makes resume trustworthy.

Wall-clock durations are tracked on the in-memory records but never
serialized: journals from equal-seed sequential runs must be byte-identical.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .space import SearchSpace

FORMAT_VERSION = 1

STATUS_OK = "ok"
STATUS_FAILED = "failed"


class JournalIntegrityError(RuntimeError):
    """Corrupt or inconsistent journal; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        suffix = f" (line {line_number})" if line_number is not None else ""
        super().__init__(message + suffix)


@dataclass
class EvalRecord:
    """One evaluation: configuration, budget, per-seed metrics, fitness."""

    seq: int
    config_id: str
    unit: list[float]
    values: dict[str, Any]
    budget: int
    fitness_seeds: list[int]
    per_seed: list[float]
    fitness: float | None
    status: str = STATUS_OK
    duration_s: float = 0.0  # in-memory only; excluded from serialization

    def to_json(self) -> str:
        payload = {
            "type": "eval",
            "seq": self.seq,
            "config_id": self.config_id,
            "unit": self.unit,
            "values": self.values,
            "budget": self.budget,
            "fitness_seeds": self.fitness_seeds,
            "per_seed": self.per_seed,
            "fitness": self.fitness,
            "status": self.status,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "EvalRecord":
        return cls(
            seq=payload["seq"],
            config_id=payload["config_id"],
            unit=list(payload["unit"]),
            values=dict(payload["values"]),
            budget=payload["budget"],
            fitness_seeds=list(payload["fitness_seeds"]),
            per_seed=list(payload["per_seed"]),
            fitness=payload["fitness"],
            status=payload["status"],
        )


class JournalWriter:
    def __init__(self, path: str, header: Mapping[str, Any], append: bool = False):
        self.path = path
        mode = "a" if append and os.path.exists(path) else "w"
        self._fh = open(path, mode, encoding="utf-8")
        if mode == "w":
            payload = {"type": "header", "format_version": FORMAT_VERSION, **header}
            self._fh.write(json.dumps(payload, sort_keys=True) + "\n")
            self._fh.flush()

    def write(self, record: EvalRecord) -> None:
        self._fh.write(record.to_json() + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "JournalWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_journal(path: str) -> tuple[dict[str, Any], list[EvalRecord]]:
    """Parse and structurally validate a journal file."""
    header: dict[str, Any] | None = None
    records: list[EvalRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JournalIntegrityError(f"unparseable journal line: {exc}", line_number)
            kind = payload.get("type")
            if kind == "header":
                if header is not None:
                    raise JournalIntegrityError("duplicate journal header", line_number)
                header = payload
            elif kind == "eval":
                if header is None:
                    raise JournalIntegrityError("record before header", line_number)
                try:
                    records.append(EvalRecord.from_payload(payload))
                except KeyError as exc:
                    raise JournalIntegrityError(f"record missing field {exc}", line_number)
            else:
                raise JournalIntegrityError(f"unknown record type {kind!r}", line_number)
    if header is None:
        raise JournalIntegrityError("journal has no header", 1)
    return header, records


def validate_record(record: EvalRecord, space: SearchSpace, line_number: int) -> None:
    """Self-validation: re-decode the unit vector, re-check the fitness mean."""
    decoded = space.decode(np.asarray(record.unit))
    for name, value in decoded.items():
        stored = record.values.get(name)
        if stored is None:
            raise JournalIntegrityError(f"value for {name!r} missing", line_number)
        if isinstance(value, float):
            if not math.isclose(value, float(stored), rel_tol=1e-12, abs_tol=1e-12):
                raise JournalIntegrityError(
                    f"stored value for {name!r} does not re-decode: {stored} vs {value}",
                    line_number,
                )
        elif stored != value:
            raise JournalIntegrityError(
                f"stored value for {name!r} does not re-decode: {stored} vs {value}",
                line_number,
            )
    if record.status == STATUS_OK:
        if record.fitness is None or not record.per_seed:
            raise JournalIntegrityError("ok record without fitness data", line_number)
        mean = sum(record.per_seed) / len(record.per_seed)
        if not math.isclose(record.fitness, mean, rel_tol=1e-9, abs_tol=1e-9):
            raise JournalIntegrityError(
                f"fitness {record.fitness} is not the per-seed mean {mean}", line_number
            )
