# ============================================================
# 보고서 모델 (pydantic)
# 파일: mcp_server_serre/reports.py
#
# 같은 입력 → 바이트 단위로 같은 JSON (키 정렬, 시간 측정은 선택)
# ============================================================

import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ParameterError

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'config'))
from precision_constants import REPORT, PrecisionRules, default_mu  # noqa: E402


class Parameters(BaseModel):
    """실행 파라미터 (플래그와 파라미터 파일이 같은 스키마)"""
    model_config = ConfigDict(extra="forbid")

    p: int
    f: int
    mu: Optional[List[Tuple[int, int]]] = None
    irhomu: str = ""
    I: str = ""
    j: Optional[int] = None
    prec_N: Optional[int] = None
    prec_M: Optional[int] = None
    window: Optional[int] = None
    seed: int = 0

    @field_validator("p")
    @classmethod
    def _prime(cls, v: int) -> int:
        if v < 2 or any(v % d == 0 for d in range(2, int(v ** 0.5) + 1)):
            raise ValueError(f"p={v} is not prime")
        return v

    @field_validator("f")
    @classmethod
    def _degree(cls, v: int) -> int:
        if v < 1:
            raise ValueError("f must be positive")
        return v

    @model_validator(mode="after")
    def _fill_mu(self) -> "Parameters":
        if self.mu is None:
            self.mu = [tuple(x) for x in default_mu(self.p, self.f)]
        if len(self.mu) != self.f:
            raise ValueError(f"mu has {len(self.mu)} components, expected f={self.f}")
        return self

    def precision(self, base: PrecisionRules) -> PrecisionRules:
        return base.with_overrides(self.prec_N, self.prec_M, self.window)


def parse_mu(text: str) -> List[Tuple[int, int]]:
    """'4,1;5,1' 또는 '4,1,5,1' → [(4, 1), (5, 1)]"""
    text = text.replace(" ", "")
    if ";" not in text:
        flat = [x for x in text.split(",") if x]
        if len(flat) % 2:
            raise ParameterError(f"mu '{text}' has an odd number of entries (expected pairs a,b)")
        text = ";".join(f"{a},{b}" for a, b in zip(flat[::2], flat[1::2]))
    pairs = []
    for chunk in text.split(";"):
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ParameterError(f"cannot parse mu component '{chunk}' (expected a,b)")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as e:
            raise ParameterError(f"mu component '{chunk}' is not a pair of integers") from e
    return pairs


def load_parameters(data: Dict[str, Any]) -> Parameters:
    """
    Raises:
        ParameterError: 스키마 위반
    """
    try:
        return Parameters.model_validate(data)
    except ValidationError as e:
        raise ParameterError(str(e)) from e


def load_parameter_file(path: Path) -> Dict[str, Any]:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ParameterError(f"cannot read parameter file {path}: {e}") from e


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: Dict[str, Any] = Field(default_factory=dict)
    seconds: Optional[float] = None


class ErrorInfo(BaseModel):
    type: str
    message: str
    key: Optional[str] = None


class ReportEnvelope(BaseModel):
    """
    보고서 봉투

    기능:
    1. 도구 이름/버전, 스키마 버전
    2. 파라미터와 정밀도
    3. 검사 결과 목록과 자료
    4. 정렬된 키의 JSON
    """
    tool: str = REPORT.tool_name
    version: str = REPORT.tool_version
    schema_version: int = REPORT.schema_version
    subcommand: str
    parameters: Optional[Parameters] = None
    precision: Dict[str, Any] = Field(default_factory=dict)
    checks: List[CheckResult] = Field(default_factory=list)
    data: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[ErrorInfo] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def failed_checks(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def payload(self) -> dict:
        out = self.model_dump(mode="json", exclude_none=True)
        out["passed"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, ensure_ascii=False, indent=2)

    def to_text(self) -> str:
        """사람이 읽는 요약 (같은 봉투)"""
        lines = [f"{self.tool} {self.version} {self.subcommand}: {'PASS' if self.passed else 'FAIL'}"]
        if self.parameters is not None:
            prm = self.parameters
            lines.append(f"  p={prm.p} f={prm.f} mu={prm.mu} irhomu='{prm.irhomu}' I='{prm.I}'")
        for c in self.checks:
            lines.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}")
        if self.error is not None:
            lines.append(f"  error {self.error.type}: {self.error.message}")
        return "\n".join(lines)


def precision_json(rules: PrecisionRules, p: int, f: int) -> dict:
    return {
        "N": rules.witt_N,
        "M": rules.series_M,
        "ring_M": rules.ring_M(f),
        "laurent_width": rules.laurent_width(p, f),
        "tangent_window": list(rules.tangent_window(p)),
    }
