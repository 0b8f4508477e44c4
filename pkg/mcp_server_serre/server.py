from enum import Enum
import asyncio
import json
from typing import Sequence
import sys
import os

# 중앙 설정 모듈 import
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'config'))
from precision_constants import PRECISION, RANGES  # type: ignore

# 검사 서비스 import
from mcp_server_serre.cli import check_all
from mcp_server_serre.errors import CancelToken
from mcp_server_serre.reports import load_parameters
from mcp_server_serre.service import SerreService

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import Tool, TextContent, ImageContent, EmbeddedResource

# __pycache__ 폴더 생성 방지
sys.dont_write_bytecode = True


class SerreTools(str, Enum):
    WEIGHTS = "weights"
    SKELETON = "skeleton"
    DEFRING = "defring"
    PHI = "phi"
    TANGENT = "tangent"
    ORACLE = "oracle"
    CHECK_ALL = "check_all"
    # 캐시 관리
    CACHE = "cache"


# ========== 입력 스키마 ==========

PARAMETER_PROPERTIES = {
    "p": {"type": "integer", "enum": list(RANGES.primes), "description": "소수 p"},
    "f": {"type": "integer", "enum": list(RANGES.degrees), "description": "잉여 차수 f"},
    "mu": {
        "type": "array",
        "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "description": "μ = [[a_0, b_0], ...], 생략하면 일반 기본값"
    },
    "irhomu": {"type": "string", "description": "I(ρ̄,μ), 예: 'w0,-w1'"},
    "I": {"type": "string", "description": "I ⊆ I(ρ̄,μ), 예: 'w0'"},
    "j": {"type": "integer", "description": "접합 지표 (생략하면 전체)"},
    "prec_N": {"type": "integer", "description": "p-진 정밀도 N"},
    "prec_M": {"type": "integer", "description": "𝔪-진 절단 M"},
    "window": {"type": "integer", "description": "Laurent 창 배수"},
    "seed": {"type": "integer", "description": "난수 시드"},
}


def _schema(extra: dict = None) -> dict:
    return {
        "type": "object",
        "properties": dict(PARAMETER_PROPERTIES, **(extra or {})),
        "required": ["p", "f"]
    }


def _parameters(arguments: dict):
    return load_parameters({k: v for k, v in arguments.items() if k in PARAMETER_PROPERTIES})


# ========== 도구 실행 ==========

def _dispatch(service: SerreService, name: str, arguments: dict, token: CancelToken) -> dict:
    """동기 도구 실행: asyncio.to_thread 에서 호출"""
    match name:
        case SerreTools.WEIGHTS.value | SerreTools.SKELETON.value | SerreTools.DEFRING.value \
                | SerreTools.PHI.value | SerreTools.TANGENT.value | SerreTools.ORACLE.value:
            worker = SerreService(service.precision, str(service.cache_root), token=token)
            return worker.run(name, _parameters(arguments)).payload()

        case SerreTools.CHECK_ALL.value:
            doubled = bool(arguments.get('compare_doubled', False))
            rules = PRECISION.doubled() if doubled else PRECISION
            return check_all(
                _parameters(arguments), rules,
                cache_dir=str(service.cache_root),
                compare_base=doubled,
                token=token
            ).payload()

        case SerreTools.CACHE.value:
            return service.cache_admin(
                arguments['action'],
                arguments.get('seed', 0)
            ).payload()

        case _:
            raise ValueError(f"Unknown tool: {name}")


# ========== 서버 ==========

async def serve() -> None:
    server = Server("mcp-serre")
    service = SerreService(PRECISION)

    @server.list_tools()
    async def list_tools() -> list[Tool]:
        """Serre 가중치 / 변형환 도구 목록"""
        return [
            Tool(
                name=SerreTools.WEIGHTS.value,
                description="일반성 판정, 유형별 JH 표, W(ρ̄), 유형 집합 T_{σ,I}",
                inputSchema=_schema()
            ),
            Tool(
                name=SerreTools.SKELETON.value,
                description="등급 골격과 정수 골격: 길이 공식, 축약 일치, 접합 그림자, 덮개 검사",
                inputSchema=_schema()
            ),
            Tool(
                name=SerreTools.DEFRING.value,
                description="다중타입 변형환 표시, 몫 표, 횡단성, 접합 완전열, Hilbert–Samuel 중복도 (f ≤ 2)",
                inputSchema=_schema()
            ),
            Tool(
                name=SerreTools.PHI.value,
                description="잔여 φ-모듈, 보편 전개, 특수화, 기저 변환, 정규형 왕복",
                inputSchema=_schema()
            ),
            Tool(
                name=SerreTools.TANGENT.value,
                description="접방향별 장애 판정 (OBSTRUCTED / SOLVABLE)",
                inputSchema=_schema()
            ),
            Tool(
                name=SerreTools.ORACLE.value,
                description="Brauer 분해표 생성 (캐시 사용)",
                inputSchema=_schema()
            ),
            Tool(
                name=SerreTools.CHECK_ALL.value,
                description="모든 I(ρ̄,μ) 에 대한 전체 검사 묶음",
                inputSchema=_schema({
                    "compare_doubled": {"type": "boolean", "description": "2배 정밀도 판정과 비교"}
                })
            ),
            Tool(
                name=SerreTools.CACHE.value,
                description="분해표 캐시 관리 (list / verify / purge)",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "action": {"type": "string", "enum": ["list", "verify", "purge"]},
                        "seed": {"type": "integer"}
                    },
                    "required": ["action"]
                }
            ),
        ]

    @server.call_tool()
    async def call_tool(
        name: str, arguments: dict
    ) -> Sequence[TextContent | ImageContent | EmbeddedResource]:
        """도구 실행 (작업 스레드, 호출마다 취소 토큰)"""
        token = CancelToken()
        try:
            result = await asyncio.to_thread(_dispatch, service, name, arguments, token)
            return [
                TextContent(type="text", text=json.dumps(
                    result, ensure_ascii=False, indent=2, sort_keys=True))
            ]

        except asyncio.CancelledError:
            # 작업 스레드는 다음 check_token 에서 멈춤
            token.cancel()
            raise

        except Exception as e:
            raise ValueError(f"Error in {name}: {str(e)}")

    options = server.create_initialization_options()
    async with stdio_server() as (read_stream, write_stream):
        await server.run(read_stream, write_stream, options)

# 서버시작 함수
if __name__ == "__main__":
    asyncio.run(serve())
