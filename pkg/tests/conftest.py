"""공용 픽스처: 저장소 경로, 임시 분해표 캐시, 자주 쓰는 환"""

import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))
sys.dont_write_bytecode = True

from mcp_server_serre.brauer_oracle import OracleCacheService, configure_cache  # noqa: E402
from mcp_server_serre.power_series import series_ring  # noqa: E402
from mcp_server_serre.weights import CharacterMu, ResidualParams, SignedRootSubset  # noqa: E402
from mcp_server_serre.witt import witt_ring  # noqa: E402


@pytest.fixture(autouse=True)
def cache_dir(tmp_path, monkeypatch):
    """테스트마다 빈 캐시 디렉터리 (환경변수, 전역 캐시, 메모리 memo 모두 초기화)"""
    root = tmp_path / "serre-cache"
    monkeypatch.setenv("SERRE_CACHE_DIR", str(root))
    service = OracleCacheService(root)
    service.purge()
    configure_cache(service)
    yield root
    configure_cache(None)


@pytest.fixture
def mu_f1():
    return CharacterMu.of([(4, 1)])


@pytest.fixture
def mu_f2():
    return CharacterMu.of([(4, 1), (5, 1)])


@pytest.fixture
def params_f1(mu_f1):
    """p=7, f=1, c=4, I(ρ̄,μ) = ∅"""
    return ResidualParams.default(7, 1, mu_f1, SignedRootSubset.empty(1))


@pytest.fixture
def Z7():
    return witt_ring(7, 1, 4)


@pytest.fixture
def F7_XY():
    """F_7[[X, Y]] / 𝔪^9"""
    return series_ring(("X", "Y"), witt_ring(7, 1, 1), 8)


@pytest.fixture
def Z7_Y():
    """ℤ_7/7^4 [[Y]] / 𝔪^9"""
    return series_ring(("Y",), witt_ring(7, 1, 4), 8)
