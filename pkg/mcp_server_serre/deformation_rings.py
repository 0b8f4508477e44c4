# ============================================================
# 다중유형 Barsotti–Tate 변형환 표시와 아이디얼 계산
# 파일: mcp_server_serre/deformation_rings.py
#
# 핵심 좌표 𝒪[[(X_r, Y_r)_r]] (틀 변수는 불활성이라 생략)
# 기본 아이디얼 (Y_r g_r), g_r = Y_r - p (I(ρ̄,μ) 가 근 r 을 안 만남) 또는 X_r Y_r - p
# 비교는 모두 𝔪^k (k ≤ min(N, M+1)) 를 더한 뒤 수행: 절단 경계의 영향이 없음
# ============================================================

import logging
import os
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .errors import ParameterError, check_token
from .ideals import (IdealNF, hilbert_dims, hilbert_samuel, ideal_intersection, ideal_sum, is_flat,
                     krull_dimension)
from .phi_modules import var_x, var_y
from .power_series import PowerSeriesPoly, SeriesRing, series_ring
from .weights import CharacterMu, SignedRootSubset, WeylElt, types_for
from .witt import witt_ring

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'config'))
from precision_constants import PRECISION  # noqa: E402

logger = logging.getLogger(__name__)

# 표의 보완 규칙 (I(ρ̄,μ) 가 근을 안 만날 때)
D1_NOTE = ("f_r(I) table completed: I(rho,mu) misses root r and w_r in I gives Y_r, "
           "-w_r in I gives Y_r - p")


# ========== 환 ==========

def core_ring(p: int, f: int, N: Optional[int] = None, M: Optional[int] = None) -> SeriesRing:
    """𝒪[[X_0, Y_0, ..., X_{f-1}, Y_{f-1}]]"""
    N = N or PRECISION.witt_N
    M = M if M is not None else PRECISION.ring_M(f)
    names = []
    for r in range(f):
        names += [var_x(r), var_y(r)]
    return series_ring(tuple(names), witt_ring(p, f, N), M)


def comparison_level(ring: SeriesRing) -> int:
    """𝔪^k ⊇ (p^N, 𝔪^{M+1}) 인 최대 k"""
    return min(ring.N, ring.M + 1)


def agree(I: IdealNF, J: IdealNF, level: Optional[int] = None) -> bool:
    """I + 𝔪^k = J + 𝔪^k"""
    k = level or comparison_level(I.ambient)
    m = IdealNF.maximal_power(I.ambient, k)
    return ideal_sum(I, m) == ideal_sum(J, m)


@dataclass(frozen=True)
class MultitypeRing:
    """
    R^{T_{σ,I}} 의 표시

    equations: (이름표, 생성원) 목록, 아이디얼은 그 생성원으로 생성.
    """
    p: int
    f: int
    ambient: SeriesRing
    irhomu: SignedRootSubset
    I: SignedRootSubset
    equations: Tuple[Tuple[str, PowerSeriesPoly], ...]
    ideal: IdealNF = field(repr=False, compare=False)

    @property
    def types(self) -> List[WeylElt]:
        return types_for(CharacterMu.eta(self.f), self.I)

    @property
    def is_single_type(self) -> bool:
        return len(self.types) == 1

    @property
    def label(self) -> str:
        return f"R[T_(sigma,{self.I.label()})]"

    def mod_p(self) -> IdealNF:
        return self.ideal.with_generators([self.ambient.constant(self.p)])

    def to_json(self, with_dims: bool = True) -> dict:
        out = {
            "label": self.label,
            "irhomu": self.irhomu.to_json(),
            "I": self.I.to_json(),
            "ring": self.ambient.json_schema(),
            "presentation": [name for name, _ in self.equations],
            "normal_form_generators": [g.to_json() for g in self.ideal.minimal_generators()],
        }
        if with_dims:
            out["dims_mod_p"] = hilbert_dims(self.ideal)
        return out


def _xy(ambient: SeriesRing, r: int) -> Tuple[PowerSeriesPoly, PowerSeriesPoly]:
    return ambient.var(var_x(r)), ambient.var(var_y(r))


def base_equation(ambient: SeriesRing, irhomu: SignedRootSubset, r: int) -> Tuple[str, PowerSeriesPoly]:
    """Y_r·g_r"""
    X, Y = _xy(ambient, r)
    p = ambient.p
    if irhomu.at(r):
        return f"Y{r}*(X{r}*Y{r}-p)", Y * (X * Y - p)
    return f"Y{r}*(Y{r}-p)", Y * (Y - p)


def quotient_equation(ambient: SeriesRing, irhomu: SignedRootSubset, r: int,
                      sign: int) -> Tuple[str, PowerSeriesPoly]:
    """
    f_r(I): sign = +1 (ω^{(r)} ∈ I) 또는 -1 (-ω^{(r)} ∈ I)

    I(ρ̄,μ) ∩ {±ω}: ∅ → Y / Y-p, {ω} → Y / XY-p, {-ω} → XY-p / Y
    """
    X, Y = _xy(ambient, r)
    p = ambient.p
    at = irhomu.at(r)
    if not at:
        return (f"Y{r}", Y) if sign > 0 else (f"Y{r}-p", Y - p)
    if (1 in at) == (sign > 0):
        return f"Y{r}", Y
    return f"X{r}*Y{r}-p", X * Y - p


def _make(p: int, f: int, ambient: SeriesRing, irhomu: SignedRootSubset, I: SignedRootSubset,
          equations: List[Tuple[str, PowerSeriesPoly]], token=None) -> MultitypeRing:
    ideal = IdealNF.generate(ambient, [g for _, g in equations], token)
    return MultitypeRing(p, f, ambient, irhomu, I, tuple(equations), ideal)


def base_ring(irhomu: SignedRootSubset, p: int, N: Optional[int] = None, M: Optional[int] = None,
              token=None) -> MultitypeRing:
    """
    R^{T_{σ,∅}} = 𝒪[[(X_r, Y_r)]]/(Y_r g_r)_r

    Raises:
        ParameterError: I(ρ̄,μ) 에 완전한 쌍
    """
    if irhomu.has_full_pair():
        raise ParameterError("I(rho,mu) contains a full pair")
    f = irhomu.f
    ambient = core_ring(p, f, N, M)
    eqs = [base_equation(ambient, irhomu, r) for r in range(f)]
    return _make(p, f, ambient, irhomu, SignedRootSubset.empty(f), eqs, token)


def multitype_quotient(base: MultitypeRing, I: SignedRootSubset, token=None) -> MultitypeRing:
    """
    R^{T_{σ,∅}} 의 몫 R^{T_{σ,I}} = base / (f_r(I))_r

    Raises:
        ParameterError: I 에 완전한 쌍, 또는 base 가 기본환이 아님
    """
    if I.f != base.f:
        raise ParameterError(f"I has f={I.f}, base ring has f={base.f}")
    if I.has_full_pair():
        raise ParameterError(f"I={I.label()} contains a full pair")
    if base.I.members:
        raise ParameterError("multitype_quotient expects the base ring R[T_(sigma,{})]")
    eqs = list(base.equations)
    for r in range(base.f):
        for sign in I.at(r):
            name, g = quotient_equation(base.ambient, base.irhomu, r, sign)
            if not base.irhomu.at(r):
                logger.info("%s (root %d)", D1_NOTE, r)
            eqs.append((name, g))
    return _make(base.p, base.f, base.ambient, base.irhomu, I, eqs, token)


def type_subset(s: WeylElt) -> SignedRootSubset:
    """단일 유형 s 에 해당하는 I: s_r = Id ⇒ ω^{(r)}, s_r ≠ Id ⇒ -ω^{(r)}"""
    return SignedRootSubset.of(s.f, [(r, -1 if s.components[r] else 1) for r in range(s.f)])


def single_types(base: MultitypeRing, I: SignedRootSubset, token=None) -> List[Tuple[WeylElt, MultitypeRing]]:
    """T_{σ,I} 의 각 유형 τ 와 R^τ"""
    out = []
    for s in types_for(CharacterMu.eta(base.f), I):
        check_token(token)
        out.append((s, multitype_quotient(base, type_subset(s), token)))
    return out


def type_chart_ideal(base: MultitypeRing, s: WeylElt) -> IdealNF:
    """
    유형 s 의 유형환 차트를 핵심 좌표로 옮긴 아이디얼

    -s_r ω^{(r)} ∈ I(ρ̄,μ) 이면 X_r Y_r - p, 아니면 Y_r (Y_r 을 죽임).
    I(ρ̄,μ) 가 근 r 을 안 만나고 s_r ≠ Id 이면 Y_r ↦ Y_r - p 로 옮김.
    """
    ambient = base.ambient
    gens = []
    for r in range(base.f):
        X, Y = _xy(ambient, r)
        swapped = bool(s.components[r])
        target = (r, 1 if swapped else -1)
        if target in base.irhomu:
            gens.append(X * Y - ambient.p)
        elif swapped and not base.irhomu.at(r):
            gens.append(Y - ambient.p)
        else:
            gens.append(Y)
    return IdealNF.generate(ambient, gens)


def zariski_closure_check(base: MultitypeRing, I: SignedRootSubset, token=None) -> dict:
    """아이디얼(R^{T_{σ,I}}) = ⋂_{τ ∈ T_{σ,I}} 아이디얼(R^τ) (𝔪^k 를 더해 비교)"""
    multi = multitype_quotient(base, I, token)
    members = single_types(base, I, token)
    inter = None
    for _, ring in members:
        inter = ring.ideal if inter is None else ideal_intersection(inter, ring.ideal, token)
    level = comparison_level(base.ambient)
    ok = agree(multi.ideal, inter, level)
    return {
        "I": I.to_json(),
        "types": [s.label() for s, _ in members],
        "level": level,
        "pass": ok,
    }


# ========== 횡단성 ==========

def transversality(t1: MultitypeRing, t2: MultitypeRing, token=None) -> dict:
    """
    두 단일 유형이 정확히 mod p 섬유에서 만남: p ∈ I₁ + I₂ ≠ (1)

    Raises:
        ParameterError: 같은 유형, 단일 유형이 아님, 또는 다른 기본환
    """
    if not (t1.is_single_type and t2.is_single_type):
        raise ParameterError("transversality compares two single types")
    if t1.ambient != t2.ambient or t1.irhomu != t2.irhomu:
        raise ParameterError("types live over different base rings")
    if t1.I == t2.I:
        raise ParameterError(f"the same type {t1.I.label()} was supplied twice")
    total = ideal_sum(t1.ideal, t2.ideal, token)
    p = t1.ambient.constant(t1.p)
    contains_p = total.contains(p)
    nonzero = not total.contains(t1.ambient.one())
    p2 = IdealNF.generate(t1.ambient, [p * p])
    distinct_mod_p2 = not agree(ideal_sum(t1.ideal, p2), ideal_sum(t2.ideal, p2))
    return {
        "types": [t1.types[0].label(), t2.types[0].label()],
        "sum_generators": [g.to_json() for g in total.minimal_generators()],
        "sum_contains_p": contains_p,
        "quotient_nonzero": nonzero,
        "distinct_mod_p2": distinct_mod_p2,
        "pass": contains_p and nonzero,
    }


# ========== 접합 완전열 ==========

def _length_table(ideals: List[IdealNF], level: int) -> List[List[int]]:
    return [[J.colength(k) for k in range(1, level + 1)] for J in ideals]


def _require_glue_precondition(base: MultitypeRing, I: SignedRootSubset, j: int) -> None:
    if not 0 <= j < base.f:
        raise ParameterError(f"index j={j} out of range for f={base.f}")
    if I.at(j) or base.irhomu.at(j):
        raise ParameterError(f"(I u I(rho,mu)) meets +-w{j}")


def glue_sequence_check(base: MultitypeRing, I: SignedRootSubset, j: int, token=None) -> dict:
    """
    0 → R^{T_{σ,I}} → R^{T_{σ,I∪{ω_j}}} ⊕ R^{T_{σ,I∪{-ω_j}}} → R^{T_{σ,I∪{ω_j}}}/p → 0

    완전성 ⟺ 아이디얼 K = J₁ ∩ J₂, 셋째 항 = R/(J₁+J₂) = R/(J₁ + p).
    k ≤ min(N, M+1) 에서 𝒪-길이 교대합 ℓ(R/K) - ℓ(R/J₁) - ℓ(R/J₂) + ℓ(R/(J₁+J₂)) = 0.

    Raises:
        ParameterError: 전제 조건 위반
    """
    _require_glue_precondition(base, I, j)
    K = multitype_quotient(base, I, token)
    R1 = multitype_quotient(base, I.add(j, 1), token)
    R2 = multitype_quotient(base, I.add(j, -1), token)
    J1, J2 = R1.ideal, R2.ideal
    level = comparison_level(base.ambient)
    inter = ideal_intersection(J1, J2, token)
    total = ideal_sum(J1, J2, token)
    left_exact = agree(K.ideal, inter, level)
    right_term = agree(total, R1.mod_p(), level)
    table = _length_table([K.ideal, J1, J2, total], level)
    alternating = [a - b - c + d for a, b, c, d in zip(*table)]
    ok = left_exact and right_term and not any(alternating)
    logger.info("glue sequence I=%s j=%d: %s", I.label(), j, "exact" if ok else "NOT exact")
    return {
        "I": I.to_json(), "j": j, "level": level,
        "kernel_matches": left_exact,
        "cokernel_is_mod_p": right_term,
        "lengths": {"R_I": table[0], "R_plus": table[1], "R_minus": table[2], "R_glue": table[3]},
        "alternating_sums": alternating,
        "pass": ok,
    }


def lemma_glue_check(p: int, N: Optional[int] = None, M: Optional[int] = None) -> dict:
    """𝒪[[Y]] 에서 (Y) ∩ (Y-p) = (Y(Y-p)), (Y) + (Y-p) = (Y, p) 와 길이 교대합"""
    N = N or PRECISION.witt_N
    M = M if M is not None else PRECISION.series_M
    ring = series_ring(("Y",), witt_ring(p, 1, N), M)
    Y = ring.var("Y")
    A = IdealNF.generate(ring, [Y])
    B = IdealNF.generate(ring, [Y - p])
    prod = IdealNF.generate(ring, [Y * (Y - p)])
    level = comparison_level(ring)
    inter_ok = agree(ideal_intersection(A, B), prod, level)
    sum_ok = agree(ideal_sum(A, B), IdealNF.generate(ring, [Y, ring.constant(p)]), level)
    table = _length_table([prod, A, B, ideal_sum(A, B)], level)
    alternating = [a - b - c + d for a, b, c, d in zip(*table)]
    return {
        "p": p, "N": N, "M": M, "level": level,
        "intersection": inter_ok, "sum": sum_ok,
        "alternating_sums": alternating,
        "pass": inter_ok and sum_ok and not any(alternating),
    }


# ========== 중복도 ==========

def multiplicity_compare(base: MultitypeRing, I: SignedRootSubset, j: int, token=None) -> dict:
    """
    e(R^{T_{σ,I∪{ω_j}}}/p) = e(R^{T_{σ,I∪{-ω_j}}}/p) = e(R/(J₁+J₂)) 와
    e(R^{T_{σ,I}}/p) = e₁ + e₂

    Raises:
        ParameterError: 전제 조건 위반
        PrecisionError: Hilbert 함수가 안정되지 않음
    """
    _require_glue_precondition(base, I, j)
    K = multitype_quotient(base, I, token)
    R1 = multitype_quotient(base, I.add(j, 1), token)
    R2 = multitype_quotient(base, I.add(j, -1), token)
    hs_K = hilbert_samuel(K.ideal)
    hs_1 = hilbert_samuel(R1.ideal)
    hs_2 = hilbert_samuel(R2.ideal)
    hs_glue = hilbert_samuel(ideal_sum(R1.ideal, R2.ideal, token))
    same = hs_1.e == hs_2.e == hs_glue.e and hs_1.d == hs_2.d == hs_glue.d
    additive = hs_K.d == hs_1.d and hs_K.e == hs_1.e + hs_2.e
    return {
        "I": I.to_json(), "j": j,
        "e_I": hs_K.to_json(), "e_plus": hs_1.to_json(), "e_minus": hs_2.to_json(),
        "e_glue": hs_glue.to_json(),
        "halves_agree": same, "additive": additive,
        "pass": same and additive,
    }


def ring_report(ring: MultitypeRing, token=None) -> dict:
    """평탄성, Krull 차원, mod p Hilbert–Samuel"""
    flat, witness = is_flat(ring.ideal, token)
    hs = hilbert_samuel(ring.ideal)
    out = ring.to_json()
    out.update({
        "flat": flat,
        "torsion_witness": None if witness is None else witness.to_json(),
        "krull_dimension": krull_dimension(ring.ideal),
        "hilbert_samuel": hs.to_json(),
    })
    return out


def single_type_reports(base: MultitypeRing, I: SignedRootSubset, token=None) -> List[dict]:
    """단일 유형별 평탄성, 차원 (= f+1), 유형환 차트 일치"""
    out = []
    for s, ring in single_types(base, I, token):
        rep = ring_report(ring, token)
        rep["type"] = s.label()
        rep["dimension_ok"] = rep["krull_dimension"] == base.f + 1
        rep["matches_type_chart"] = agree(ring.ideal, type_chart_ideal(base, s))
        rep["pass"] = rep["flat"] and rep["dimension_ok"] and rep["matches_type_chart"]
        out.append(rep)
    return out
