"""Outcome record shared by all checkers."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

PASS = "pass"
FAIL = "fail"
NOT_FOUND = "not-found-within-budget"


@dataclass
class Report:
    check_id: str
    eq: str
    status: str
    witness: str | None = None
    millis: float = 0.0
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status == FAIL and not self.witness:
            raise ValueError("a failing report needs a witness")

    @property
    def ok(self) -> bool:
        return self.status == PASS

    def to_json(self, timing: bool = True) -> dict:
        out = {"id": self.check_id, "eq": self.eq, "status": self.status}
        if self.witness is not None:
            out["witness"] = self.witness
        if timing:
            out["millis"] = round(self.millis, 1)
        return out

    def line(self) -> str:
        s = f"{self.status.upper():5s} {self.check_id} [{self.eq}]"
        if self.witness:
            s += f" witness: {self.witness}"
        return s


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.millis = (time.perf_counter() - self.t0) * 1000.0
        return False


def verdict(check_id, eq, mismatch, millis=0.0, **detail) -> Report:
    """Build a report from the first mismatch (None means pass)."""
    if mismatch is None:
        return Report(check_id, eq, PASS, None, millis, detail)
    return Report(check_id, eq, FAIL, str(mismatch), millis, detail)
