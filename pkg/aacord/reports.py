# file: aacord/reports.py
"""Machine-readable certificates and atomic artifact writers."""
import json
import math
import os
import tempfile
from typing import Any, Dict, Iterable, List, Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, computed_field

from aacord.utils.config import Config
from aacord.utils.logger import setup_logger

logger = setup_logger(__name__)

SCHEMA_VERSION = 1


def to_builtin(value: Any) -> Any:
    """Convert numpy containers/scalars to plain Python; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


class CheckRecord(BaseModel):
    name: str
    anchor: str
    passed: bool
    max_residual: Optional[float] = None
    tolerance: float
    samples: int = 0
    details: Dict[str, Any] = Field(default_factory=dict)
    # per-sample problems that did not abort the check
    flagged: List[str] = Field(default_factory=list)


class Hypothesis(BaseModel):
    name: str
    status: Literal["assumed", "certified", "probed"]
    evidence: Dict[str, Any] = Field(default_factory=dict)


class ProbeReport(BaseModel):
    """Outcome of a finite-window completeness probe."""
    status: Literal["ok", "escape", "step_limit", "domain_error"]
    window: float
    escape_time: Optional[float] = None
    max_norm: float = 0.0
    steps: int = 0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class ResidualReport(BaseModel):
    """Every numerical certificate of one run; passes iff every member check passes."""
    schema_version: int = Field(SCHEMA_VERSION, serialization_alias="schema")
    command: str = ""
    system: str = ""
    seed: Optional[int] = None
    version: str = Config.VERSION
    checks: List[CheckRecord] = Field(default_factory=list)
    results: Dict[str, Any] = Field(default_factory=dict)
    validity: Dict[str, Any] = Field(default_factory=dict)
    hypotheses: List[Hypothesis] = Field(default_factory=list)
    tolerances: Dict[str, Any] = Field(default_factory=dict)

    @computed_field
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> CheckRecord:
        for record in self.checks:
            if record.name == name:
                return record
        raise KeyError(name)

    def merge(self, *others: "ResidualReport") -> "ResidualReport":
        """Concatenate checks and union the result blocks; later keys win."""
        merged = self.model_copy(deep=True)
        for other in others:
            merged.checks.extend(c.model_copy(deep=True) for c in other.checks)
            merged.results.update(other.results)
            merged.validity.update(other.validity)
            known = {h.name for h in merged.hypotheses}
            merged.hypotheses.extend(h for h in other.hypotheses if h.name not in known)
        return merged

    def failures(self) -> List[CheckRecord]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> str:
        payload = to_builtin(self.model_dump(by_alias=True))
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def single_check(
    name: str,
    anchor: str,
    passed: bool,
    max_residual: Optional[float],
    tolerance: float,
    samples: int,
    details: Optional[Dict[str, Any]] = None,
    flagged: Optional[Iterable[str]] = None,
    results: Optional[Dict[str, Any]] = None,
    validity: Optional[Dict[str, Any]] = None,
) -> ResidualReport:
    record = CheckRecord(
        name=name,
        anchor=anchor,
        passed=bool(passed),
        max_residual=to_builtin(max_residual),
        tolerance=float(tolerance),
        samples=int(samples),
        details=to_builtin(details or {}),
        flagged=list(flagged or []),
    )
    status = "passed" if record.passed else "FAILED"
    logger.info(f"[Check] {name}: {status} (max residual {record.max_residual}, tol {tolerance})")
    return ResidualReport(
        checks=[record],
        results=to_builtin(results or {}),
        validity=to_builtin(validity or {}),
    )


def _atomic_write(path: str, write) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            write(handle)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.info(f"[Artifacts] wrote {path}")
    return path


def write_text_atomic(path: str, text: str) -> str:
    return _atomic_write(path, lambda handle: handle.write(text))


def write_report(report: ResidualReport, path: str) -> str:
    return write_text_atomic(path, report.to_json())


def write_json(payload: Dict[str, Any], path: str) -> str:
    text = json.dumps(to_builtin(payload), sort_keys=True, indent=2) + "\n"
    return write_text_atomic(path, text)


def write_csv(frame: pd.DataFrame, path: str) -> str:
    return _atomic_write(path, lambda handle: frame.to_csv(handle, index=False, float_format="%.12g"))
# end file
