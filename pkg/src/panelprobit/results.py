"""Estimation results and deterministic JSON serialization."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA_VERSION = 1
UNAVAILABLE = "unavailable"


@dataclass
class EstimateResult:
    """Point estimates with standard errors and fit diagnostics.

    ``se`` values that are missing or non-finite serialize as
    ``"unavailable"`` rather than as a number.
    """

    method: str
    estimates: dict[str, float]
    se: dict[str, float | None]
    diagnostics: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return list(self.estimates)

    def to_dict(self) -> dict:
        params = []
        for name, value in self.estimates.items():
            se = self.se.get(name)
            ok = se is not None and math.isfinite(se)
            params.append({"name": name, "estimate": float(value),
                           "se": float(se) if ok else UNAVAILABLE})
        return {
            "schema_version": SCHEMA_VERSION,
            "method": self.method,
            "parameters": params,
            "diagnostics": self.diagnostics,
            "provenance": self.provenance,
        }


def sha256_digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def to_plain(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dumps(payload: dict) -> str:
    """Key order is insertion order; floats are written at full precision."""
    return json.dumps(to_plain(payload), indent=2, allow_nan=False) + "\n"
