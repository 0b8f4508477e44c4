# ============================================================
# 검사 서비스: CLI 와 MCP 서버가 같은 계산을 호출
# 파일: mcp_server_serre/service.py
# ============================================================

import itertools
import logging
import os
import random
import sys
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from .brauer_oracle import OracleCacheService, all_types, build_table, configure_cache, decompose
from .deformation_rings import (base_ring, glue_sequence_check, lemma_glue_check, multiplicity_compare,
                                multitype_quotient, ring_report, single_type_reports, single_types,
                                transversality, zariski_closure_check)
from .errors import CancelledError, ParameterError, SerreError, check_token
from .phi_modules import (base_change, build_residual, deformation_display, expand_universal,
                          matrix_inverse, normalization_roundtrip, random_gauge,
                          specialize_display, TangentProblem, tangent_obstruction, type_free_variables,
                          valuation_recursion)
from .reports import CheckResult, ErrorInfo, Parameters, ReportEnvelope, precision_json
from .skeletons import (build_skeleton, covering_set_check, gluing_shadow, reduction_consistency,
                        slice_multiplicity_free)
from .weights import (CharacterMu, ResidualParams, SignedRootSubset, all_signed_subsets, is_generic,
                      jh_of_type, orientation_solve, reconcile_recipe, require_generic, sigma_empty,
                      type_of_weight_set, types_for, weight_set)

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'config'))
from precision_constants import CACHE, PRECISION, RANGES, PrecisionRules  # noqa: E402

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("weights", "skeleton", "defring", "phi", "tangent", "oracle")


@dataclass(frozen=True)
class Point:
    """하나의 파라미터 점"""
    p: int
    f: int
    mu: CharacterMu
    irhomu: SignedRootSubset
    I: SignedRootSubset
    j: Optional[int]
    seed: int

    @property
    def q(self) -> int:
        return self.p ** self.f

    def residual(self) -> ResidualParams:
        return ResidualParams.default(self.p, self.f, self.mu, self.irhomu)


def make_point(params: Parameters) -> Point:
    """
    Raises:
        ParameterError: 범위 밖, 또는 I(ρ̄,μ) 에 완전한 쌍
    """
    if not RANGES.supported(params.p, params.f):
        raise ParameterError(f"(p, f) = ({params.p}, {params.f}) outside the supported ranges "
                             f"p in {list(RANGES.primes)}, f in {list(RANGES.degrees)}")
    f = params.f
    irhomu = SignedRootSubset.parse(f, params.irhomu)
    if irhomu.has_full_pair():
        raise ParameterError("I(rho,mu) has at most one element per index")
    I = SignedRootSubset.parse(f, params.I)
    if params.j is not None and not 0 <= params.j < f:
        raise ParameterError(f"j={params.j} out of range for f={f}")
    return Point(params.p, f, CharacterMu.of(params.mu), irhomu, I, params.j, params.seed)


def pair_free_subsets(f: int) -> List[SignedRootSubset]:
    return [J for J in all_signed_subsets(f) if not J.has_full_pair()]


class _Collector:
    """검사 결과 모음 (시간 측정 선택)"""

    def __init__(self, timings: bool):
        self.timings = timings
        self.checks: List[CheckResult] = []

    def run(self, name: str, fn: Callable[[], dict]) -> dict:
        start = time.perf_counter()
        detail = fn()
        passed = bool(detail.pop("pass"))
        seconds = round(time.perf_counter() - start, 4) if self.timings else None
        self.checks.append(CheckResult(name=name, passed=passed, detail=detail, seconds=seconds))
        if not passed:
            logger.warning("check %s failed", name)
        return detail


class SerreService:
    """
    하위 명령별 검사 묶음

    기능:
    1. weights: 일반성, JH 표, 쌍 상쇄 다중도, W(ρ̄)
    2. skeleton: 길이 공식, 축약 일치, 접합 그림자, 덮개 보조정리
    3. defring: 표시, Zariski 폐포, 단일 유형, 횡단성, 접합, 중복도
    4. phi: 잔여 모형, 보편 전개, 특수화, 기저 변환, 정규화 왕복
    5. tangent: 접방향 장애 판정
    6. oracle: 분해표
    """

    def __init__(self, precision: Optional[PrecisionRules] = None, cache_dir: Optional[str] = None,
                 timings: bool = False, exhaustive: bool = False, token=None):
        self.precision = precision or PRECISION
        self.cache_root: Path = CACHE.resolve(cache_dir)
        self.cache = OracleCacheService(self.cache_root)
        self.timings = timings
        self.exhaustive = exhaustive
        self.token = token
        configure_cache(self.cache)

    # ========== 진입점 ==========

    def run(self, subcommand: str, params: Parameters) -> ReportEnvelope:
        """ParameterError 와 CancelledError 는 호출자에게 전달, 그 밖의 SerreError 는 보고서 error 로"""
        if subcommand not in SUBCOMMANDS:
            raise ParameterError(f"unknown subcommand {subcommand}")
        check_token(self.token)
        rules = params.precision(self.precision)
        worker = SerreService(rules, str(self.cache_root), self.timings, self.exhaustive, self.token)
        point = make_point(params)
        envelope = ReportEnvelope(subcommand=subcommand, parameters=params,
                                  precision=precision_json(rules, point.p, point.f))
        collector = _Collector(self.timings)
        try:
            envelope.data = getattr(worker, f"_{subcommand}")(point, collector)
        except (ParameterError, CancelledError):
            raise
        except SerreError as e:
            envelope.error = ErrorInfo(type=type(e).__name__, message=str(e), key=getattr(e, "key", None))
        envelope.checks = collector.checks
        return envelope

    def _ideals_I(self, point: Point) -> List[SignedRootSubset]:
        return pair_free_subsets(point.f) if self.exhaustive else [point.I]

    # ========== weights ==========

    def _weights(self, pt: Point, out: _Collector) -> dict:
        if not is_generic(pt.mu, pt.p):
            raise ParameterError(f"mu={pt.mu.to_json()} is not generic for p={pt.p}")
        params = pt.residual()
        table = {}

        def jh_sums():
            bad = []
            for s in all_types(pt.f):
                jh = jh_of_type(s, pt.mu, pt.p)
                total = sum(w.dimension() for _, w in jh)
                expected = pt.q + 1 if s.is_principal() else pt.q - 1
                table[s.label()] = [{"J": J.to_json(), "weight": w.to_json()} for J, w in jh]
                if total != expected or len(jh) != 2 ** pt.f:
                    bad.append({"s": s.label(), "sum": total, "expected": expected})
            return {"mismatches": bad, "pass": not bad}

        def jh_oracle():
            bad = [s.label() for s in all_types(pt.f)
                   if Counter(w for _, w in jh_of_type(s, pt.mu, pt.p)) != Counter(decompose(s, pt.mu, pt.p))]
            return {"mismatches": bad, "pass": not bad}

        def sigma_empty_multiplicity():
            base = sigma_empty(pt.mu, pt.p)
            count = sum(decompose(s, pt.mu, pt.p).count(base) for s in all_types(pt.f))
            return {"weight": base.to_json(), "multiplicity": count, "expected": 2 ** pt.f,
                    "pass": count == 2 ** pt.f}

        def weight_set_check():
            W = weight_set(params)
            s = type_of_weight_set(pt.irhomu)
            jh = set(decompose(s, pt.mu, pt.p))
            return {"weights": [w.to_json() for w in W], "type": s.label(),
                    "pass": len(W) == 2 ** len(pt.irhomu) and set(W) <= jh}

        def types_check():
            if pt.I.has_full_pair():
                return {"types": [], "skipped": "I has a full pair", "pass": True}
            T = types_for(pt.mu, pt.I)
            return {"I": pt.I.to_json(), "types": [s.label() for s in T],
                    "pass": len(T) == 2 ** (pt.f - len(pt.I))}

        def orientation():
            rows = []
            for s in all_types(pt.f):
                w, s_tau = orientation_solve(s)
                rows.append({"s": s.label(), "w": w.label(), "s_tau": "s" if s_tau else "Id"})
            return {"solutions": rows, "pass": all(not r["w"].startswith("s") for r in rows)}

        def recipe():
            rep = reconcile_recipe(pt.mu, pt.p)
            return dict(rep, **{"pass": rep["set_match"]})

        out.run("weights.jh_dimension_sums", jh_sums)
        out.run("weights.jh_matches_oracle", jh_oracle)
        out.run("weights.sigma_empty_multiplicity", sigma_empty_multiplicity)
        out.run("weights.weight_set", weight_set_check)
        out.run("weights.types_for", types_check)
        out.run("weights.orientation", orientation)
        out.run("weights.recipe_reconciliation", recipe)
        return {
            "generic": True,
            "sigma_empty": sigma_empty(pt.mu, pt.p).to_json(),
            "jh_tables": table,
        }

    # ========== skeleton ==========

    def _skeleton(self, pt: Point, out: _Collector) -> dict:
        require_generic(pt.mu, pt.p)
        dumps = {}
        for I in self._ideals_I(pt):
            tag = I.label()
            sk = build_skeleton(pt.mu, I, pt.p, self.token)
            dumps[tag] = sk.to_json()
            out.run(f"skeleton.graded[{tag}]", lambda sk=sk: {
                "length": sk.length(), "strata": sk.stratum_sizes(),
                "pass": sk.length() == sk.expected_length() and sk.edge_counts_ok()})
            if not I.has_full_pair():
                out.run(f"skeleton.reduction[{tag}]",
                        lambda I=I: reduction_consistency(pt.mu, I, pt.p, self.token))
            top = 2 * pt.f - len(I)
            for kvec in itertools.product(range(3), repeat=pt.f):
                if sum(kvec) >= top or any(k + len(I.at(i)) > 2 for i, k in enumerate(kvec)):
                    continue
                out.run(f"skeleton.slice[{tag};{''.join(map(str, kvec))}]",
                        lambda sk=sk, kvec=kvec: slice_multiplicity_free(sk, kvec))
            for j in range(pt.f):
                if (pt.j is not None and j != pt.j) or I.at(j) or I.has_full_pair():
                    continue
                out.run(f"skeleton.gluing[{tag};j={j}]",
                        lambda I=I, j=j: gluing_shadow(pt.mu, I, j, pt.p, self.token))
            if all(len(I.at(i)) + len(pt.irhomu.at(i)) == 1 for i in range(pt.f)):
                W = weight_set(pt.residual())
                out.run(f"skeleton.covering[{tag}]",
                        lambda I=I, W=W: covering_set_check(pt.mu, I, pt.irhomu, pt.p, W, token=self.token))
        return {"skeletons": dumps}

    # ========== defring ==========

    def _ring_levels(self, pt: Point) -> Tuple[int, int]:
        if pt.f > RANGES.ring_check_max_f:
            raise ParameterError(f"ring-level checks support f <= {RANGES.ring_check_max_f}")
        return self.precision.witt_N, self.precision.ring_M(pt.f)

    def _defring(self, pt: Point, out: _Collector) -> dict:
        N, M = self._ring_levels(pt)
        base = base_ring(pt.irhomu, pt.p, N, M, self.token)
        report = ring_report(base, self.token)
        out.run("defring.base", lambda: {
            "flat": report["flat"], "krull_dimension": report["krull_dimension"],
            "pass": report["flat"] and report["krull_dimension"] == pt.f + 1})
        quotients = {}
        for I in self._ideals_I(pt):
            tag = I.label()
            if I.has_full_pair():
                raise ParameterError(f"I={tag} contains a full pair")
            quotients[tag] = multitype_quotient(base, I, self.token).to_json()
            out.run(f"defring.zariski[{tag}]", lambda I=I: zariski_closure_check(base, I, self.token))
            reps = single_type_reports(base, I, self.token)
            out.run(f"defring.single_types[{tag}]", lambda reps=reps: {
                "types": [{"type": r["type"], "flat": r["flat"], "krull_dimension": r["krull_dimension"],
                           "matches_type_chart": r["matches_type_chart"]} for r in reps],
                "pass": all(r["pass"] for r in reps)})
            for j in range(pt.f):
                if (pt.j is not None and j != pt.j) or I.at(j) or pt.irhomu.at(j):
                    continue
                out.run(f"defring.glue[{tag};j={j}]",
                        lambda I=I, j=j: glue_sequence_check(base, I, j, self.token))
                out.run(f"defring.multiplicity[{tag};j={j}]",
                        lambda I=I, j=j: multiplicity_compare(base, I, j, self.token))
        members = [ring for _, ring in single_types(base, SignedRootSubset.empty(pt.f), self.token)]
        for a, b in itertools.combinations(members, 2):
            out.run(f"defring.transversality[{a.I.label()}|{b.I.label()}]",
                    lambda a=a, b=b: transversality(a, b, self.token))
        out.run("defring.lemma_glue", lambda: lemma_glue_check(pt.p, N, self.precision.series_M))
        return {"base": report, "quotients": quotients}

    # ========== phi ==========

    def _phi(self, pt: Point, out: _Collector) -> dict:
        params = pt.residual()
        N = self.precision.witt_N
        M = self.precision.ring_M(pt.f)
        residual = build_residual(params)

        def etale():
            vals = [residual.det(i).valuation() for i in range(pt.f)]
            expected = [params.c[(-i) % pt.f] + 1 for i in range(pt.f)]
            return {"valuations": vals, "expected": expected, "pass": vals == expected}

        out.run("phi.residual_etale", etale)
        display = deformation_display(params, N, M)
        out.run("phi.display_residual", lambda: {"pass": display.residual().equals(residual)})
        rng = random.Random(pt.seed)
        for s in all_types(pt.f):
            tag = s.label()
            uni = expand_universal(s, params, N, M)
            out.run(f"phi.expand[{tag}]", lambda uni=uni: {
                "cases": [x.case for x in uni.word.letters], "pass": uni.verified})
            out.run(f"phi.residual[{tag}]", lambda uni=uni: {"pass": uni.family.residual().equals(residual)})
            result = specialize_display(display, s, params)
            out.run(f"phi.specialize[{tag}]", lambda r=result: {"pass": r.verified})

            def inverse_roundtrip(uni=uni):
                D = random_gauge(uni.word, uni.ring, rng)
                inv = [matrix_inverse(d) for d in D]
                back = base_change(base_change(uni.family, D), inv)
                return {"pass": back.equals(uni.family)}

            out.run(f"phi.base_change[{tag}]", inverse_roundtrip)
            if pt.f <= RANGES.ring_check_max_f:
                out.run(f"phi.normalize[{tag}]", lambda s=s: normalization_roundtrip(
                    s, params, pt.seed, N, self.precision.roundtrip_M(pt.f), None, self.token))
        return {"residual": residual.to_json(), "params": params.to_json()}

    # ========== tangent ==========

    def _tangent(self, pt: Point, out: _Collector) -> dict:
        if pt.f > RANGES.tangent_max_f:
            raise ParameterError(f"tangent checks support f <= {RANGES.tangent_max_f}")
        params = pt.residual()
        window = self.precision.tangent_window(pt.p)
        names = list(deformation_display(params, 1, 1).ring.variables)
        directions = [{}] + [{name: 1} for name in names] + [{name: 1 for name in names}]
        free = set(type_free_variables(params))
        verdicts = {}
        for direction in directions:
            tag = ",".join(direction) or "zero"
            obstructed = any(name not in free for name in direction)
            problem = TangentProblem.from_direction(params, direction, window)
            verdict = tangent_obstruction(problem, self.token)
            verdicts[tag] = verdict.to_json()
            expected = "OBSTRUCTED" if obstructed else "SOLVABLE"
            out.run(f"tangent[{tag}]", lambda v=verdict, e=expected: {
                "status": v.status, "expected": e, "poles": v.pole_orders,
                "pass": v.status == e and (not v.solvable or max(v.pole_orders) <= 0)})

        def recursion():
            rec = valuation_recursion(pt.p, params.c, 1)
            return dict(rec, **{"pass": rec["contradiction"]})

        out.run("tangent.valuation_recursion", recursion)
        return {"verdicts": verdicts, "window": list(window)}

    # ========== oracle ==========

    def _oracle(self, pt: Point, out: _Collector) -> dict:
        table = build_table(pt.p, pt.f, [pt.mu])

        def sums():
            expected = [pt.q + 1 if s.is_principal() else pt.q - 1 for s, _ in table.columns]
            got = table.dimension_sums()
            return {"sums": got, "expected": expected, "pass": got == expected}

        out.run("oracle.dimension_sums", sums)
        out.run("oracle.multiplicity_free", lambda: {"pass": table.is_multiplicity_free()})
        return {"table": table.to_json(), "cache": str(self.cache_root)}

    # ========== 캐시 관리 ==========

    def cache_admin(self, action: str, seed: int = 0) -> ReportEnvelope:
        envelope = ReportEnvelope(subcommand=f"cache {action}")
        if action == "list":
            entries = self.cache.entries()
            envelope.data = {"root": str(self.cache_root), "entries": entries}
            envelope.checks = [CheckResult(name="cache.readable", passed=all(e["ok"] for e in entries),
                                           detail={"count": len(entries)})]
        elif action == "verify":
            rep = self.cache.verify(seed=seed)
            envelope.data = {"root": str(self.cache_root), **rep}
            envelope.checks = [CheckResult(name="cache.verify", passed=not rep["corrupt"] and not rep["mismatched"],
                                           detail={"corrupt": rep["corrupt"], "mismatched": rep["mismatched"]})]
        elif action == "purge":
            removed = self.cache.purge()
            envelope.data = {"root": str(self.cache_root), "removed": removed}
        else:
            raise ParameterError(f"unknown cache action {action}")
        return envelope


# ========== check-all ==========

def check_all_tasks(params: Parameters) -> List[Dict]:
    """(하위 명령, I(ρ̄,μ)) 작업 목록, 정렬됨"""
    point = make_point(params)
    tasks = [{"subcommand": "oracle", "irhomu": ""}]
    for irhomu in pair_free_subsets(point.f):
        label = ",".join(irhomu.to_json())
        subs = ["weights", "skeleton", "phi"]
        if point.f <= RANGES.ring_check_max_f:
            subs += ["defring"]
        if point.f <= RANGES.tangent_max_f:
            subs += ["tangent"]
        tasks += [{"subcommand": s, "irhomu": label} for s in subs]
    return sorted(tasks, key=lambda t: (t["irhomu"], t["subcommand"]))


def run_task(task: Dict, params_json: Dict, precision: Dict, cache_dir: Optional[str],
             timings: bool, token=None) -> Dict:
    """ProcessPoolExecutor 작업자 (최상위 함수, token 은 같은 프로세스에서만)"""
    params = Parameters.model_validate(dict(params_json, irhomu=task["irhomu"], I=""))
    rules = PrecisionRules(**precision)
    service = SerreService(rules, cache_dir, timings=timings, exhaustive=True, token=token)
    envelope = service.run(task["subcommand"], params)
    return {"task": task, "report": envelope.payload()}
