# ============================================================
# 배치 CLI
# 파일: mcp_server_serre/cli.py
#
# 사용:
#   python -m mcp_server_serre.cli weights --p 7 --f 1 --mu 4,1
#   python -m mcp_server_serre.cli check-all --p 7 --f 2 --jobs 4
#   python -m mcp_server_serre.cli cache verify --cache-dir /tmp/serre
#
# 종료 코드: 0 통과, 1 검사 실패, 2 파라미터 오류
# ============================================================

import argparse
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Optional

from .errors import ParameterError, check_token
from .reports import (CheckResult, ErrorInfo, Parameters, ReportEnvelope, load_parameter_file,
                      load_parameters, parse_mu, precision_json)
from .service import SUBCOMMANDS, SerreService, check_all_tasks, run_task

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'config'))
from precision_constants import PRECISION, REPORT, PrecisionRules  # noqa: E402

# __pycache__ 폴더 생성 방지
sys.dont_write_bytecode = True

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s %(message)s'
CACHE_ACTIONS = ("list", "verify", "purge")
PARAM_FIELDS = ("p", "f", "mu", "irhomu", "I", "j", "prec_N", "prec_M", "window", "seed")


# ========== 인자 ==========

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, help="소수 p (7, 11, 13)")
    common.add_argument("--f", type=int, help="잉여 차수 f (1, 2, 3)")
    common.add_argument("--mu", help="μ 성분: '4,1' 또는 '4,1;5,1'")
    common.add_argument("--irhomu", help="I(ρ̄,μ): 'w0,-w1' 형식, 빈 문자열은 공집합")
    common.add_argument("--I", dest="I", help="I ⊆ I(ρ̄,μ) 또는 골격의 I")
    common.add_argument("--j", type=int, help="접합 지표 j")
    common.add_argument("--prec-N", dest="prec_N", type=int, help="p-진 정밀도 N")
    common.add_argument("--prec-M", dest="prec_M", type=int, help="𝔪-진 절단 M")
    common.add_argument("--window", type=int, help="Laurent 창 배수")
    common.add_argument("--seed", type=int, help="난수 시드")
    common.add_argument("--params", help="JSON 파라미터 파일 (플래그와 같은 스키마, 플래그가 우선)")
    common.add_argument("--cache-dir", help="분해표 캐시 디렉터리 (환경변수 SERRE_CACHE_DIR 보다 우선)")
    common.add_argument("--jobs", type=int, default=1, help="check-all 작업자 수")
    common.add_argument("--double-precision", action="store_true", help="N, M, 창을 모두 2배")
    common.add_argument("--timings", action="store_true", help="검사별 소요 시간 기록 (바이트 안정성 해제)")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", help="보고서를 파일로도 저장 (원자적 쓰기)")
    common.add_argument("--log-level", default="WARNING",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    ap = argparse.ArgumentParser(prog="mcp-serre", description="다중타입 Barsotti–Tate 계산 검사")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    sub.add_parser("check-all", parents=[common], help="전체 검사 묶음")
    cache = sub.add_parser("cache", parents=[common], help="분해표 캐시 관리")
    cache.add_argument("action", choices=CACHE_ACTIONS)
    return ap


def collect_parameters(args: argparse.Namespace) -> Parameters:
    """
    파라미터 파일 위에 플래그를 덮어씀

    Raises:
        ParameterError: 파일 읽기 실패 또는 스키마 위반
    """
    data: Dict = load_parameter_file(Path(args.params)) if args.params else {}
    for name in PARAM_FIELDS:
        value = getattr(args, name, None)
        if value is None:
            continue
        data[name] = parse_mu(value) if name == "mu" else value
    if "p" not in data or "f" not in data:
        raise ParameterError("--p and --f are required (flag or parameter file)")
    return load_parameters(data)


def base_rules(args: argparse.Namespace) -> PrecisionRules:
    return PRECISION.doubled() if args.double_precision else PRECISION


# ========== 출력 ==========

def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(str(tmp), str(path))


def emit(envelope: ReportEnvelope, args: argparse.Namespace) -> None:
    text = envelope.to_text() if args.format == "text" else envelope.to_json()
    sys.stdout.write(text + "\n")
    sys.stdout.flush()
    if args.out:
        _atomic_write_text(Path(args.out), envelope.to_json() + "\n")


def exit_code(envelope: ReportEnvelope) -> int:
    if envelope.error is not None and envelope.error.type == "ParameterError":
        return REPORT.exit_codes["parameter_error"]
    return REPORT.exit_codes["pass"] if envelope.passed else REPORT.exit_codes["check_failure"]


# ========== check-all ==========

def _run_tasks(tasks: List[Dict], params: Parameters, rules: PrecisionRules,
               cache_dir: Optional[str], timings: bool, jobs: int, token=None) -> List[Dict]:
    params_json = params.model_dump(mode="json")
    precision = dataclasses.asdict(rules)
    if jobs <= 1:
        results = [run_task(t, params_json, precision, cache_dir, timings, token) for t in tasks]
    else:
        results = []
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futures = {ex.submit(run_task, t, params_json, precision, cache_dir, timings): t for t in tasks}
            for ft in as_completed(futures):
                results.append(ft.result())
                logger.info("check-all task done: %s", futures[ft])
                if token is not None and token.cancelled:
                    ex.shutdown(wait=False, cancel_futures=True)
                    check_token(token)
    order = {json.dumps(t, sort_keys=True): k for k, t in enumerate(tasks)}
    return sorted(results, key=lambda r: order[json.dumps(r["task"], sort_keys=True)])


def _task_name(task: Dict) -> str:
    return f"{task['subcommand']}[irhomu={task['irhomu'] or '{}'}]"


def _verdicts(results: List[Dict]) -> Dict[str, Dict[str, bool]]:
    return {
        _task_name(r["task"]): {c["name"]: c["passed"] for c in r["report"].get("checks", [])}
        for r in results
    }


def check_all(params: Parameters, rules: PrecisionRules, cache_dir: Optional[str] = None,
              timings: bool = False, jobs: int = 1, compare_base: bool = False, token=None) -> ReportEnvelope:
    """
    모든 I(ρ̄,μ) 와 하위 명령에 대한 전체 검사

    compare_base 이면 기본 정밀도로 한 번 더 돌려 판정이 같은지 비교
    """
    rules = params.precision(rules)
    tasks = check_all_tasks(params)
    logger.info("check-all p=%d f=%d: %d tasks, jobs=%d", params.p, params.f, len(tasks), jobs)
    results = _run_tasks(tasks, params, rules, cache_dir, timings, jobs, token)
    envelope = ReportEnvelope(subcommand="check-all", parameters=params,
                              precision=precision_json(rules, params.p, params.f))
    for r in results:
        report = r["report"]
        detail = {"failed": [c["name"] for c in report.get("checks", []) if not c["passed"]]}
        if "error" in report:
            detail["error"] = report["error"]
        envelope.checks.append(CheckResult(name=_task_name(r["task"]), passed=report["passed"], detail=detail))
    envelope.data = {"reports": [r["report"] for r in results]}
    if compare_base:
        base = params.precision(PRECISION)
        lower = _verdicts(_run_tasks(tasks, params, base, cache_dir, False, jobs, token))
        differ = sorted(
            f"{task}:{name}"
            for task, checks in _verdicts(results).items()
            for name, ok in checks.items()
            if lower.get(task, {}).get(name) != ok
        )
        envelope.checks.append(CheckResult(name="check_all.precision_stability", passed=not differ,
                                           detail={"differing": differ}))
    return envelope


# ========== 진입점 ==========

def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT, stream=sys.stderr)
    envelope = ReportEnvelope(subcommand=args.subcommand if args.subcommand != "cache" else f"cache {args.action}")
    try:
        rules = base_rules(args)
        if args.subcommand == "cache":
            service = SerreService(rules, args.cache_dir)
            envelope = service.cache_admin(args.action, seed=args.seed or 0)
        else:
            params = collect_parameters(args)
            if args.subcommand == "check-all":
                envelope = check_all(params, rules, args.cache_dir, args.timings, args.jobs,
                                     compare_base=args.double_precision)
            else:
                service = SerreService(rules, args.cache_dir, timings=args.timings)
                envelope = service.run(args.subcommand, params)
    except ParameterError as e:
        logger.error("parameter error: %s", e)
        envelope.error = ErrorInfo(type="ParameterError", message=str(e))
    emit(envelope, args)
    code = exit_code(envelope)
    if code:
        logger.warning("%s: exit %d, failed checks %s", envelope.subcommand, code, envelope.failed_checks())
    return code


def main():
    """배치 CLI 진입점"""
    raise SystemExit(run())


if __name__ == "__main__":
    main()
