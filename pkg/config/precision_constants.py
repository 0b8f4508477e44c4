# config/precision_constants.py
# 중앙 설정 모듈 - 정밀도, 창(window), 지원 범위, 캐시 경로
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Optional, Tuple

# __pycache__ 폴더 생성 방지
sys.dont_write_bytecode = True


# ========== 정밀도 규칙 ==========

@dataclass(frozen=True)
class PrecisionRules:
    """절단 정밀도 규칙 (p-진 N, 𝔪-진 M, v-창)"""
    witt_N: int = 4          # 계수 W(F_q)/p^N
    series_M: int = 8        # 멱급수 𝔪^{M+1} 절단
    window_factor: int = 1   # Laurent 창 폭 = window_factor·(p+2)·f
    tangent_factor: int = 1  # 접공간 창 [-(p+2), 2(p+2)]·tangent_factor

    def laurent_width(self, p: int, f: int) -> int:
        """v-창 폭"""
        return self.window_factor * (p + 2) * f

    def ring_M(self, f: int) -> int:
        """환 수준 검사의 𝔪-진 절단 (변수 2f 개)"""
        return max(2, self.series_M // f)

    def roundtrip_M(self, f: int) -> int:
        """정규화 왕복 검사의 절단"""
        return max(1, self.ring_M(f) // 2)

    def tangent_window(self, p: int) -> Tuple[int, int]:
        """접공간 창: 미지수 D_i 는 v^0..v^hi, 하한 lo 는 배제한 극 범위 (보고용)"""
        return (-(p + 2) * self.tangent_factor, 2 * (p + 2) * self.tangent_factor)

    def doubled(self) -> "PrecisionRules":
        """모든 정밀도 2배"""
        return replace(
            self,
            witt_N=2 * self.witt_N,
            series_M=2 * self.series_M,
            window_factor=2 * self.window_factor,
            tangent_factor=2 * self.tangent_factor,
        )

    def with_overrides(self, N: Optional[int] = None, M: Optional[int] = None,
                       window: Optional[int] = None) -> "PrecisionRules":
        """CLI 플래그 반영"""
        rules = self
        if N is not None:
            rules = replace(rules, witt_N=N)
        if M is not None:
            rules = replace(rules, series_M=M)
        if window is not None:
            rules = replace(rules, window_factor=window)
        return rules


# ========== 지원 범위 ==========

@dataclass(frozen=True)
class RangeRules:
    """기본 파라미터 범위"""
    primes: Tuple = (7, 11, 13)
    degrees: Tuple = (1, 2, 3)
    oracle_max_p: int = 13
    oracle_max_f: int = 3
    ring_check_max_f: int = 2    # 환 수준 검사 (교집합·HS 다중도)
    tangent_max_f: int = 2

    def supported(self, p: int, f: int) -> bool:
        return p in self.primes and f in self.degrees


# ========== 캐시 ==========

@dataclass(frozen=True)
class CacheRules:
    """분해표 캐시 규칙"""
    env_var: str = "SERRE_CACHE_DIR"
    default_dir: str = "~/.cache/mcp-serre"
    format_version: int = 1

    def resolve(self, flag: Optional[str] = None) -> Path:
        """플래그 > 환경변수 > 기본값"""
        raw = flag or os.environ.get(self.env_var) or self.default_dir
        return Path(raw).expanduser()


# ========== 보고서 ==========

@dataclass(frozen=True)
class ReportRules:
    """보고서 메타데이터"""
    tool_name: str = "mcp-serre"
    tool_version: str = "1.0.0"
    schema_version: int = 1
    exit_codes: Dict = None

    def __post_init__(self):
        object.__setattr__(self, "exit_codes", {
            "pass": 0, "check_failure": 1, "parameter_error": 2
        })


# ========== 기본 μ ==========

def default_mu(p: int, f: int) -> Tuple[Tuple[int, int], ...]:
    """일반(generic) 기본 가중치 μ_i = (c_i, 1), 2 < c_i < p-1"""
    choices = [4, 5, 4] if p == 7 else [4, 6, 5]
    return tuple((choices[i % len(choices)], 1) for i in range(f))


PRECISION = PrecisionRules()
RANGES = RangeRules()
CACHE = CacheRules()
REPORT = ReportRules()
