# ============================================================
# 가군 골격: R_{μ,I} 의 등급 골격, R̃_{μ,I} 의 정수 골격
# 파일: mcp_server_serre/skeletons.py
#
# 슬롯의 기본 키는 J (가중치는 쌍 상쇄로 겹칠 수 있음)
# 접합 완전열은 수치적 그림자만 검사
# ============================================================

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .brauer_oracle import decompose
from .errors import ParameterError, check_token
from .weights import (CharacterMu, SerreWeightSym, SignedRootSubset, WeylElt, admissible_subsets,
                      require_generic, sigma_J, stratum_counts, types_for)

logger = logging.getLogger(__name__)


def _multiset_json(weights: Iterable[SerreWeightSym]) -> List[dict]:
    counts = Counter(weights)
    return [dict(w.to_json(), mult=counts[w]) for w in sorted(counts, key=SerreWeightSym.sort_key)]


# ========== 등급 골격 ==========

@dataclass(frozen=True)
class Slot:
    J: SignedRootSubset
    weight: SerreWeightSym

    @property
    def k(self) -> Tuple[int, ...]:
        return self.J.multidegree()

    @property
    def level(self) -> int:
        return len(self.J)

    def to_json(self) -> dict:
        return {"J": self.J.to_json(), "k": list(self.k), "weight": self.weight.to_json(),
                "label": self.weight.label()}


@dataclass
class GradedSkeleton:
    """
    gr R_{μ,I} = ⊕_{J ∩ I = ∅} σ_J

    기능:
    1. 슬롯 (J, 𝐤(J), σ_J)
    2. 층 |𝐤| = k 별 슬롯
    3. 확장 변 J → J ∪ {x}
    4. Fil^𝐤, W_{𝐤,𝐤+1,I} 조각
    """
    p: int
    mu: CharacterMu
    I: SignedRootSubset
    slots: List[Slot]
    edges: List[Tuple[SignedRootSubset, SignedRootSubset]] = field(default_factory=list)

    @property
    def f(self) -> int:
        return self.I.f

    def length(self) -> int:
        return len(self.slots)

    def expected_length(self) -> int:
        return 2 ** (2 * self.f - len(self.I))

    def slot(self, J: SignedRootSubset) -> Optional[Slot]:
        for s in self.slots:
            if s.J == J:
                return s
        return None

    def stratum(self, k: int) -> List[Slot]:
        return [s for s in self.slots if s.level == k]

    def stratum_sizes(self) -> List[int]:
        top = 2 * self.f
        sizes = [len(self.stratum(k)) for k in range(top + 1)]
        while len(sizes) > 1 and sizes[-1] == 0:
            sizes.pop()
        return sizes

    def fil(self, kvec: Sequence[int]) -> List[Slot]:
        """Fil^𝐤: 성분별로 𝐤(J) ≥ 𝐤"""
        return [s for s in self.slots if all(a >= b for a, b in zip(s.k, kvec))]

    def slice(self, kvec: Sequence[int]) -> List[Slot]:
        """W_{𝐤,𝐤+1,I}: 𝐤(J) = 𝐤 또는 𝐤 + e_j"""
        k = sum(kvec)
        return [s for s in self.fil(kvec) if s.level in (k, k + 1)]

    def out_degree(self, J: SignedRootSubset) -> int:
        return sum(1 for a, _ in self.edges if a == J)

    def weight_multiset(self) -> Counter:
        return Counter(s.weight for s in self.slots)

    def edge_counts_ok(self) -> bool:
        """각 슬롯의 나가는 변 수 = I ∪ J 밖 원소 수"""
        return all(self.out_degree(s.J) == 2 * self.f - len(self.I) - s.level for s in self.slots)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "mu": self.mu.to_json(),
            "I": self.I.to_json(),
            "length": self.length(),
            "expected_length": self.expected_length(),
            "strata": self.stratum_sizes(),
            "expected_strata": stratum_counts(self.I),
            "slots": [s.to_json() for s in self.slots],
            "edges": [[a.to_json(), b.to_json()] for a, b in self.edges],
            "edge_counts_ok": self.edge_counts_ok(),
        }


def build_skeleton(mu: CharacterMu, I: SignedRootSubset, p: int, token=None) -> GradedSkeleton:
    """
    Raises:
        ParameterError: μ 가 일반적이지 않음, 또는 f 불일치
    """
    if mu.f != I.f:
        raise ParameterError(f"mu has f={mu.f}, I has f={I.f}")
    require_generic(mu, p)
    slots = []
    for J in admissible_subsets(I):
        check_token(token)
        slots.append(Slot(J, sigma_J(mu, J, p)))
    members = {s.J for s in slots}
    edges = []
    for s in slots:
        for i in range(I.f):
            for sign in (1, -1):
                if (i, sign) in s.J or (i, sign) in I:
                    continue
                target = s.J.add(i, sign)
                if target in members:
                    edges.append((s.J, target))
    logger.debug("skeleton I=%s: %d slots, %d edges", I.label(), len(slots), len(edges))
    return GradedSkeleton(p, mu, I, slots, edges)


def slice_multiplicity_free(skeleton: GradedSkeleton, kvec: Sequence[int]) -> dict:
    """W_{𝐤,𝐤+1,I} 의 가중치가 서로 다른지"""
    if len(kvec) != skeleton.f or any(x < 0 or x > 2 for x in kvec):
        raise ParameterError(f"multidegree {list(kvec)} out of range for f={skeleton.f}")
    piece = skeleton.slice(kvec)
    counts = Counter(s.weight for s in piece)
    repeated = [w.to_json() for w, c in counts.items() if c > 1]
    return {"k": list(kvec), "size": len(piece), "repeated": repeated, "pass": not repeated}


# ========== 정수 골격 ==========

@dataclass
class IntegralSkeleton:
    """R̃_{μ,I} = ⊕_{τ ∈ T_{σ,I}} σ°(τ)"""
    p: int
    mu: CharacterMu
    I: SignedRootSubset
    types: List[WeylElt]
    constituents: Dict[WeylElt, List[SerreWeightSym]]

    def type_rank(self, s: WeylElt) -> int:
        return sum(w.dimension() for w in self.constituents[s])

    def rank(self) -> int:
        return sum(self.type_rank(s) for s in self.types)

    def jh_multiset(self) -> Counter:
        out = Counter()
        for s in self.types:
            out.update(self.constituents[s])
        return out

    def length_mod_p(self) -> int:
        return sum(self.jh_multiset().values())

    def to_json(self) -> dict:
        q = self.p ** self.mu.f
        return {
            "I": self.I.to_json(),
            "types": [{
                "s": s.label(),
                "kind": "principal" if s.is_principal() else "cuspidal",
                "rank": self.type_rank(s),
                "expected_rank": q + 1 if s.is_principal() else q - 1,
                "jh": [w.to_json() for w in self.constituents[s]],
            } for s in self.types],
            "rank": self.rank(),
            "length_mod_p": self.length_mod_p(),
            "jh_multiset": _multiset_json(self.jh_multiset().elements()),
        }


def integral_skeleton(mu: CharacterMu, I: SignedRootSubset, p: int, token=None) -> IntegralSkeleton:
    """
    Raises:
        ParameterError: I 에 완전한 쌍
    """
    types = types_for(mu, I)
    constituents = {}
    for s in types:
        check_token(token)
        constituents[s] = decompose(s, mu, p)
    return IntegralSkeleton(p, mu, I, types, constituents)


def reduction_consistency(mu: CharacterMu, I: SignedRootSubset, p: int, token=None) -> dict:
    """⊔_τ JH(σ̄(τ)) 와 등급 골격 가중치 다중집합 비교"""
    graded = build_skeleton(mu, I, p, token)
    integral = integral_skeleton(mu, I, p, token)
    a, b = integral.jh_multiset(), graded.weight_multiset()
    q = p ** mu.f
    ranks_ok = all(integral.type_rank(s) == (q + 1 if s.is_principal() else q - 1) for s in integral.types)
    return {
        "I": I.to_json(),
        "graded_length": graded.length(),
        "integral_length": integral.length_mod_p(),
        "expected_length": graded.expected_length(),
        "strata": graded.stratum_sizes(),
        "expected_strata": stratum_counts(I),
        "ranks_ok": ranks_ok,
        "only_integral": _multiset_json((a - b).elements()),
        "only_graded": _multiset_json((b - a).elements()),
        "pass": a == b and graded.length() == graded.expected_length() and ranks_ok
                and graded.stratum_sizes() == stratum_counts(I),
    }


# ========== 접합 완전열의 그림자 ==========

def gluing_shadow(mu: CharacterMu, I: SignedRootSubset, j: int, p: int, token=None) -> dict:
    """
    0 → R̃_{μ,I} → R̃_{μ,I∪{ω_j}} ⊕ R̃_{μ,I∪{-ω_j}} → R_{μ,I∪{±ω_j}} → 0

    계수: rk A = rk B₁ + rk B₂, 꼬임 길이 = 2^{2f-#I-2},
    ℓ(A/p) + ℓ(C) = ℓ(B₁/p) + ℓ(B₂/p) + ℓ(Tor₁(C, F)), C 는 p 로 죽으므로 Tor₁ = C.

    Raises:
        ParameterError: I 에 완전한 쌍, 또는 I 가 {±ω_j} 와 만남
    """
    f = I.f
    if not 0 <= j < f:
        raise ParameterError(f"index j={j} out of range for f={f}")
    if I.has_full_pair():
        raise ParameterError(f"I={I.label()} contains a full pair")
    if I.at(j):
        raise ParameterError(f"I={I.label()} meets +-w{j}")
    A = integral_skeleton(mu, I, p, token)
    B1 = integral_skeleton(mu, I.add(j, 1), p, token)
    B2 = integral_skeleton(mu, I.add(j, -1), p, token)
    C = build_skeleton(mu, I.add(j, 1).add(j, -1), p, token)
    expected_torsion = 2 ** (2 * f - len(I) - 2)
    tor = C.length()
    rank_ok = A.rank() == B1.rank() + B2.rank()
    torsion_ok = C.length() == expected_torsion
    tor_shadow = A.length_mod_p() + C.length() == B1.length_mod_p() + B2.length_mod_p() + tor
    jh_ok = A.jh_multiset() == B1.jh_multiset() + B2.jh_multiset()
    # C 의 슬롯은 두 쪽 등급 골격 모두에 있음
    c_slots = {s.J for s in C.slots}
    covered = all(c_slots <= {s.J for s in build_skeleton(mu, half, p, token).slots}
                  for half in (I.add(j, 1), I.add(j, -1)))
    return {
        "I": I.to_json(), "j": j,
        "ranks": {"A": A.rank(), "B_plus": B1.rank(), "B_minus": B2.rank()},
        "lengths_mod_p": {"A": A.length_mod_p(), "B_plus": B1.length_mod_p(),
                          "B_minus": B2.length_mod_p(), "C": C.length(), "Tor1": tor},
        "expected_torsion": expected_torsion,
        "rank_additive": rank_ok,
        "torsion_length_ok": torsion_ok,
        "tor_shadow": tor_shadow,
        "jh_additive": jh_ok,
        "cokernel_in_both_halves": covered,
        "pass": rank_ok and torsion_ok and tor_shadow and jh_ok and covered,
    }


# ========== 덮개 보조정리 ==========

def _require_cover_hypothesis(I: SignedRootSubset, irhomu: SignedRootSubset) -> None:
    for i in range(I.f):
        if len(I.at(i)) + len(irhomu.at(i)) != 1:
            raise ParameterError(f"#(I n +-w{i}) + #(I(rho,mu) n +-w{i}) must be 1")


def covering_set_check(mu: CharacterMu, I: SignedRootSubset, irhomu: SignedRootSubset, p: int,
                       W_rho: Sequence[SerreWeightSym], k: Optional[int] = None,
                       chosen: Optional[Iterable[SignedRootSubset]] = None, token=None) -> dict:
    """
    층 k 의 선택된 슬롯이 W(ρ̄) 를 덮으면 층 k+1 도 덮는지 재현

    층 k+1 의 J′ (σ_{J′} ∈ W) 와 늘어난 자리 j 마다 이웃 J:
    𝐤(J′)_j = 2 이면 J′ ∖ {-w_jω_j}, 아니면 J′ ∩ {±ω_j} = {w_jω_j} 이어야 하고 J′ ∖ {w_jω_j}.
    w_j 는 I(ρ̄,μ) 의 j 자리 부호.

    Args:
        k: None 이면 모든 층
        chosen: None 이면 층 k 에서 σ_J ∈ W 인 슬롯 전부

    Raises:
        ParameterError: 가정 위반
    """
    _require_cover_hypothesis(I, irhomu)
    skeleton = build_skeleton(mu, I, p, token)
    W = set(W_rho)
    top = 2 * I.f - len(I)
    levels = range(top) if k is None else [k]
    chosen_set = None if chosen is None else set(chosen)
    counterexamples = []
    checked = 0
    for level in levels:
        check_token(token)
        covered = chosen_set if chosen_set is not None else \
            {s.J for s in skeleton.stratum(level) if s.weight in W}
        uncovered = [s.J.to_json() for s in skeleton.stratum(level) if s.weight in W and s.J not in covered]
        if uncovered:
            counterexamples.append({"level": level, "reason": "chosen set misses W(rho) at level k",
                                    "slots": uncovered})
            continue
        for s in skeleton.stratum(level + 1):
            if s.weight not in W:
                continue
            for j in range(I.f):
                here = s.J.at(j)
                if not here:
                    continue
                checked += 1
                signs = irhomu.at(j)
                w_sign = next(iter(signs)) if signs else None
                if len(here) == 2:
                    J = SignedRootSubset(I.f, s.J.members - {(j, -w_sign)}) if w_sign else None
                elif w_sign is not None and here == {w_sign}:
                    J = SignedRootSubset(I.f, s.J.members - {(j, w_sign)})
                else:
                    J = None
                bad = None
                if J is None:
                    bad = "neighbour rule does not apply"
                elif skeleton.slot(J) is None or skeleton.slot(J).weight not in W:
                    bad = "neighbour weight not in W(rho)"
                elif J not in covered:
                    bad = "neighbour not in chosen set"
                if bad:
                    counterexamples.append({"level": level, "J_prime": s.J.to_json(), "j": j,
                                            "J": None if J is None else J.to_json(), "reason": bad})
    ok = not counterexamples
    if not ok:
        logger.warning("covering check I=%s failed: %d counterexamples", I.label(), len(counterexamples))
    return {
        "I": I.to_json(), "irhomu": irhomu.to_json(),
        "levels": list(levels), "checked": checked,
        "W_rho": [w.to_json() for w in sorted(W, key=SerreWeightSym.sort_key)],
        "counterexamples": counterexamples,
        "pass": ok,
    }
