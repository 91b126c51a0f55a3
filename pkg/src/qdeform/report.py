"""Named pass/fail/skipped check records shared by the verifiers and the CLI."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"


@dataclass(frozen=True)
class Check:
    name: str
    tag: str
    status: str
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    tolerance: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("lhs", "rhs", "tolerance"):
            if d[key] is not None and not math.isfinite(d[key]):
                d[key] = repr(d[key])
        return d


def leq(name: str, tag: str, lhs: float, rhs: float, tol: float = 0.0) -> Check:
    """Check ``lhs <= rhs + tol``."""
    lhs, rhs, tol = float(lhs), float(rhs), float(tol)
    status = PASS if lhs <= rhs + tol else FAIL
    return Check(name, tag, status, lhs, rhs, tol)


def lt(name: str, tag: str, lhs: float, rhs: float) -> Check:
    """Strict ``lhs < rhs``."""
    lhs, rhs = float(lhs), float(rhs)
    return Check(name, tag, PASS if lhs < rhs else FAIL, lhs, rhs, 0.0)


def close(name: str, tag: str, lhs: float, rhs: float, tol: float) -> Check:
    lhs, rhs, tol = float(lhs), float(rhs), float(tol)
    return Check(name, tag, PASS if abs(lhs - rhs) <= tol else FAIL, lhs, rhs, tol)


def truth(name: str, tag: str, ok: bool, lhs: Optional[float] = None,
          rhs: Optional[float] = None, tol: Optional[float] = None) -> Check:
    return Check(name, tag, PASS if ok else FAIL,
                 None if lhs is None else float(lhs),
                 None if rhs is None else float(rhs),
                 None if tol is None else float(tol))


def skipped(name: str, tag: str) -> Check:
    return Check(name, tag, SKIPPED)
