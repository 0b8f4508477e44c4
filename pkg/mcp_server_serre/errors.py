# mcp_server_serre/errors.py
# 예외 계층과 협조적 취소 토큰
import threading


class SerreError(Exception):
    """패키지 공통 예외"""


class ParameterError(SerreError, ValueError):
    """잘못된 p, f, μ, I 또는 환 불일치"""


class PrecisionError(SerreError):
    """절단 창이 너무 작음 (다항식 적합 불안정, 접공간 창 부족, 정규화 미수렴)"""


class ShapeMismatchError(SerreError):
    """잔여 행렬이 Ā₁/Ā₂/Ā₃ 어느 모양에도 맞지 않음"""


class NotInvertibleError(SerreError, ArithmeticError):
    """가역이 아닌 원소/행렬의 역원 요청"""


class ChainError(SerreError):
    """M″ ⊆ M′ ⊆ M 이 사슬이 아님"""


class OracleError(SerreError):
    """지표표 연립방정식이 특이하거나 σ_J 가 유일하게 결정되지 않음"""


class CacheError(SerreError):
    """손상된 캐시 항목"""

    def __init__(self, key: str, reason: str):
        super().__init__(f"cache entry {key}: {reason}")
        self.key = key
        self.reason = reason

    def __reduce__(self):
        return (CacheError, (self.key, self.reason))


class CancelledError(SerreError):
    """협조적 취소"""


class CancelToken:
    """긴 루프에서 check() 로 취소 여부 확인"""

    def __init__(self):
        self._event = threading.Event()

    def cancel(self) -> None:
        self._event.set()

    @property
    def cancelled(self) -> bool:
        return self._event.is_set()

    def check(self) -> None:
        if self._event.is_set():
            raise CancelledError("operation cancelled")


def check_token(token) -> None:
    """token 이 None 이면 무시"""
    if token is not None:
        token.check()
