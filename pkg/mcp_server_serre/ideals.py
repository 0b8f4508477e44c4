# ============================================================
# 국소 멱급수환의 아이디얼 정규형과 길이
# 파일: mcp_server_serre/ideals.py
#
# 주변환 A = W/p^N [[x]] / 𝔪^{M+1} 을 유한 ℤ/p^N 가군으로 보고
# 아이디얼 = {t^i x^m g} 의 ℤ-스팬 (Howell 기저) 으로 저장한다.
# 생성원의 계수가 모두 ℤ_p 에 있으면 W(F_p) 위에서 계산 (평탄 기저변환).
# ============================================================

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .chain_linalg import HowellBasis, howell_form, kernel_mod, span_intersection, span_sum
from .errors import ChainError, ParameterError, PrecisionError, check_token
from .power_series import PowerSeriesPoly, SeriesRing, series_ring
from .witt import witt_ring

logger = logging.getLogger(__name__)


# ========== 벡터화 ==========

def _is_integral(g: PowerSeriesPoly) -> bool:
    return g.ring.f == 1 or not np.any(g.data[:, 1:])


def _scalar_rank(ambient: SeriesRing, gens: Sequence[PowerSeriesPoly]) -> int:
    """1: ℤ_p 계수로 충분, f: t-기저로 펼침"""
    return 1 if all(_is_integral(g) for g in gens) else ambient.f


def _work_ring(ambient: SeriesRing, s: int) -> SeriesRing:
    if s == ambient.f:
        return ambient
    return series_ring(ambient.variables, witt_ring(ambient.p, 1, ambient.N), ambient.M)


def _descend(g: PowerSeriesPoly, work: SeriesRing) -> PowerSeriesPoly:
    if g.ring is work or g.ring == work:
        return g
    return work.from_array(g.data[:, :1])


def _flatten(g: PowerSeriesPoly) -> np.ndarray:
    return np.asarray(g.data).ravel()


def _scalar_multiples(g: PowerSeriesPoly) -> List[PowerSeriesPoly]:
    """t^i·g, i < f (작업환 기준)"""
    ring = g.ring
    if ring.f == 1:
        return [g]
    out = []
    for i in range(ring.f):
        coords = [0] * ring.f
        coords[i] = 1
        out.append(g * ring.witt.element(coords))
    return out


def _multiples(g: PowerSeriesPoly) -> List[np.ndarray]:
    """x^m t^i g 전부 (0 이 아닌 것)"""
    ring = g.ring
    order = g.order()
    rows = []
    for h in _scalar_multiples(g):
        for i in range(len(ring.monomials)):
            if int(ring.degrees[i]) + order > ring.M:
                break
            v = _flatten(h.times_monomial(i))
            if np.any(v):
                rows.append(v)
    return rows


def torsion_rows(ring: SeriesRing, copies: int = 1) -> np.ndarray:
    """p^{n_m} e_m (n_m < N 인 열): A = ⊕ ℤ/p^{n_m} 을 (ℤ/p^N)^c 의 몫으로"""
    n_mon, f = len(ring.monomials), ring.f
    width = copies * n_mon * f
    rows = []
    for c in range(copies):
        for i, n in enumerate(ring.precisions):
            if n < ring.N:
                for k in range(f):
                    row = np.zeros(width, dtype=ring.dtype)
                    row[(c * n_mon + i) * f + k] = ring.p ** int(n)
                    rows.append(row)
    return np.array(rows, dtype=ring.dtype).reshape(-1, width)


def maximal_power_rows(ring: SeriesRing, k: int, copies: int = 1) -> np.ndarray:
    """𝔪^k 의 생성 벡터 p^a x^m (a + |m| = k, 주변환에 관계 없음)"""
    n_mon, f = len(ring.monomials), ring.f
    width = copies * n_mon * f
    rows = []
    for c in range(copies):
        for i, d in enumerate(ring.degrees):
            a = k - int(d)
            if a < 0 or a >= ring.precisions[i]:
                continue
            for t in range(f):
                row = np.zeros(width, dtype=ring.dtype)
                row[(c * n_mon + i) * f + t] = ring.p ** a
                rows.append(row)
    return np.array(rows, dtype=ring.dtype).reshape(-1, width)


def _unflatten(vec: np.ndarray, ring: SeriesRing) -> PowerSeriesPoly:
    return ring.from_array(np.asarray(vec).reshape(len(ring.monomials), ring.f))


def _lift_to(g: PowerSeriesPoly, ambient: SeriesRing) -> PowerSeriesPoly:
    if g.ring == ambient:
        return g
    data = ambient.zeros()
    data[:, :1] = g.data
    return ambient.from_array(data)


# ========== 아이디얼 ==========

@dataclass(frozen=True)
class IdealNF:
    """
    주변환 절단 위의 아이디얼 (정규형 = 축약 Howell 기저)

    소속 판정: g ∈ I ⟺ 정규형 나머지가 0 (mod p^N, 𝔪^{M+1}).
    """
    ambient: SeriesRing
    generators: Tuple[PowerSeriesPoly, ...]
    scalar_rank: int
    basis: HowellBasis = field(repr=False)

    @classmethod
    def generate(cls, ambient: SeriesRing, gens: Sequence[PowerSeriesPoly], token=None,
                 scalar_rank: Optional[int] = None) -> "IdealNF":
        if ambient.relations:
            raise ParameterError("ideals live in an ambient ring without relations")
        for g in gens:
            if g.ring != ambient:
                raise ParameterError("generator from a different ring")
        s = scalar_rank or _scalar_rank(ambient, gens)
        work = _work_ring(ambient, s)
        rows: List[np.ndarray] = []
        for g in gens:
            check_token(token)
            rows.extend(_multiples(_descend(g, work)))
        tors = torsion_rows(work)
        width = len(work.monomials) * work.f
        mat = np.vstack([np.array(rows, dtype=work.dtype).reshape(-1, width), tors])
        basis = howell_form(mat, work.p, work.N, width, token)
        return cls(ambient, tuple(gens), s, basis)

    @classmethod
    def zero(cls, ambient: SeriesRing) -> "IdealNF":
        return cls.generate(ambient, [])

    @classmethod
    def unit(cls, ambient: SeriesRing) -> "IdealNF":
        return cls.generate(ambient, [ambient.one()])

    @classmethod
    def maximal_power(cls, ambient: SeriesRing, k: int) -> "IdealNF":
        """𝔪^k"""
        work = _work_ring(ambient, 1)
        gens = []
        for i, d in enumerate(work.degrees):
            a = k - int(d)
            if 0 <= a < work.precisions[i]:
                data = work.zeros()
                data[i, 0] = work.p ** a
                gens.append(_lift_to(work.from_array(data), ambient))
        return cls.generate(ambient, gens)

    @property
    def work_ring(self) -> SeriesRing:
        return _work_ring(self.ambient, self.scalar_rank)

    def at_rank(self, s: int) -> "IdealNF":
        if s == self.scalar_rank:
            return self
        return IdealNF.generate(self.ambient, self.generators, scalar_rank=s)

    def normal_form_elements(self) -> List[PowerSeriesPoly]:
        work = self.work_ring
        return [_lift_to(_unflatten(r, work), self.ambient) for r in self.basis.rows]

    # ========== 질의 ==========

    def reduce(self, g: PowerSeriesPoly) -> PowerSeriesPoly:
        """정규형 나머지"""
        if self.scalar_rank == 1 and not _is_integral(g):
            return self.at_rank(self.ambient.f).reduce(g)
        work = self.work_ring
        rem = self.basis.reduce(_flatten(_descend(g, work)))
        return _lift_to(_unflatten(rem, work), self.ambient)

    def contains(self, g: PowerSeriesPoly) -> bool:
        return self.reduce(g).is_zero()

    def contains_ideal(self, other: "IdealNF") -> bool:
        a, b = _common_rank(self, other)
        return a.basis.contains_basis(b.basis)

    def __eq__(self, other):
        if not isinstance(other, IdealNF):
            return NotImplemented
        return self.ambient == other.ambient and self.contains_ideal(other) and other.contains_ideal(self)

    def __hash__(self):
        return hash((self.ambient, self.length()))

    def length(self) -> int:
        """ℓ_𝒪(I) (절단 A 안에서)"""
        return (self.basis.length() - _torsion_length(self)) // self.work_ring.f

    def colength(self, k: Optional[int] = None) -> int:
        """ℓ_𝒪(A/(I + 𝔪^k)), k ≤ min(N, M+1); k=None 이면 ℓ(A/I)"""
        work = self.work_ring
        width = len(work.monomials) * work.f
        if k is None:
            total = sum(int(n) for n in work.precisions) * work.f
            return (total - (self.basis.length() - _torsion_length(self))) // work.f
        if k > min(work.N, work.M + 1):
            raise PrecisionError(f"colength level {k} exceeds truncation (N={work.N}, M={work.M})")
        extra = maximal_power_rows(work, k)
        mat = np.vstack([self.basis.rows, extra]) if self.basis.rows.shape[0] else extra
        keep_cols = sum(1 for d in work.degrees if d < k) * work.f
        return (keep_cols * work.N - _restricted_length(mat, keep_cols, work)) // work.f

    def hilbert_function(self, k: int) -> int:
        """dim_F A/(p, I, 𝔪^k)"""
        return hilbert_dims(self)[k - 1]

    def minimal_generators(self) -> List[PowerSeriesPoly]:
        """I/𝔪I 의 기저로 고른 생성원 (원래 생성원 우선)"""
        work = self.work_ring
        width = len(work.monomials) * work.f
        m_rows = [(self.basis.rows * work.p) % work.witt.modulus]
        for i in range(len(work.monomials)):
            if work.degrees[i] == 1:
                m_rows.append(np.array([_flatten(_unflatten(r, work).times_monomial(i)) for r in self.basis.rows],
                                       dtype=work.dtype).reshape(-1, width))
        base = np.vstack(m_rows + [torsion_rows(work)])
        current = howell_form(base, work.p, work.N, width)
        chosen: List[PowerSeriesPoly] = []
        candidates = [_descend(g, work) for g in self.generators] + [_unflatten(r, work) for r in self.basis.rows]
        for g in candidates:
            if current.contains(_flatten(g)):
                continue
            chosen.append(_lift_to(g, self.ambient))
            current = howell_form(np.vstack([current.rows] + _multiples(g)), work.p, work.N, width)
        return chosen

    def reduce_mod_p(self) -> "IdealNF":
        """(I + p)/p ⊆ F_q[[x]]/𝔪^{M+1}"""
        target = self.ambient.with_precision(N=1)
        return IdealNF.generate(target, [g.change_ring(target) for g in self.generators])

    def with_generators(self, extra: Sequence[PowerSeriesPoly]) -> "IdealNF":
        return IdealNF.generate(self.ambient, list(self.generators) + list(extra))

    def to_json(self) -> dict:
        return {
            "ring": self.ambient.json_schema(),
            "generators": [g.to_json() for g in self.generators],
            "minimal_generators": [g.to_json() for g in self.minimal_generators()],
            "colength": self.colength(),
        }


def _common_rank(a: IdealNF, b: IdealNF) -> Tuple[IdealNF, IdealNF]:
    if a.ambient != b.ambient:
        raise ParameterError("ideals live in different ambient rings")
    s = max(a.scalar_rank, b.scalar_rank)
    return a.at_rank(s), b.at_rank(s)


def _torsion_length(ideal: IdealNF) -> int:
    work = ideal.work_ring
    return sum(work.N - int(n) for n in work.precisions) * work.f


def _restricted_length(rows: np.ndarray, ncols: int, work: SeriesRing) -> int:
    """앞 ncols 열로의 사영 길이 (열 순서 = 차수 오름차순)"""
    return howell_form(rows[:, :ncols], work.p, work.N, ncols).length()


def _from_basis(ambient: SeriesRing, basis: HowellBasis, s: int) -> IdealNF:
    work = _work_ring(ambient, s)
    gens = tuple(_lift_to(_unflatten(r, work), ambient) for r in basis.rows)
    return IdealNF(ambient, gens, s, basis)


# ========== 연산 ==========

def ideal_sum(I: IdealNF, J: IdealNF, token=None) -> IdealNF:
    """I + J"""
    a, b = _common_rank(I, J)
    basis = span_sum(a.basis, b.basis, token)
    return IdealNF(I.ambient, tuple(I.generators) + tuple(J.generators), a.scalar_rank, basis)


def ideal_intersection(I: IdealNF, J: IdealNF, token=None) -> IdealNF:
    """I ∩ J (Zassenhaus 블록 소거)"""
    a, b = _common_rank(I, J)
    basis = span_intersection(a.basis, b.basis, token)
    return _from_basis(I.ambient, basis, a.scalar_rank)


def ideal_quotient(I: IdealNF, J: IdealNF, token=None) -> IdealNF:
    """(I : J) = {a : aJ ⊆ I}"""
    a, b = _common_rank(I, J)
    work = a.work_ring
    width = len(work.monomials) * work.f
    result: Optional[HowellBasis] = None
    unit_vectors = []
    for i in range(len(work.monomials)):
        for t in range(work.f):
            data = work.zeros()
            data[i, t] = 1
            unit_vectors.append(work.from_array(data))
    for g in b.generators:
        check_token(token)
        g = _descend(g, work)
        images = np.array([_flatten(e * g) for e in unit_vectors], dtype=work.dtype).reshape(-1, width)
        ker = kernel_mod(images, a.basis, torsion_rows(work), token)
        result = ker if result is None else span_intersection(result, ker, token)
    if result is None:
        return IdealNF.unit(I.ambient)
    return _from_basis(I.ambient, span_sum(result, howell_form(torsion_rows(work), work.p, work.N, width)),
                       a.scalar_rank)


def ideal_equal(I: IdealNF, J: IdealNF) -> bool:
    return I == J


def modular_law_holds(I: IdealNF, J: IdealNF, K: IdealNF) -> bool:
    """I ∩ (J + (I∩K)) = (I∩J) + (I∩K)"""
    ik = ideal_intersection(I, K)
    left = ideal_intersection(I, ideal_sum(J, ik))
    right = ideal_sum(ideal_intersection(I, J), ik)
    return left == right


def is_flat(I: IdealNF, token=None) -> Tuple[bool, Optional[PowerSeriesPoly]]:
    """
    절단에서 p-비틀림 검사: (I : p) ⊆ I + 𝔪^{K-2}, K = min(M+1, N+1)

    Returns:
        (평탄 여부, 반례 원소)
    """
    ambient = I.ambient
    colon = ideal_quotient(I, IdealNF.generate(ambient, [ambient.constant(ambient.p)]), token)
    level = min(ambient.M + 1, ambient.N + 1) - 2
    bound = ideal_sum(I, IdealNF.maximal_power(ambient, level))
    for g in colon.generators:
        if not bound.contains(g):
            return False, g
    return True, None


def krull_dimension(I: IdealNF) -> int:
    """𝒪-평탄 몫환의 차원 = dim(R/p) + 1"""
    return hilbert_samuel(I.reduce_mod_p()).d + 1


# ========== Hilbert–Samuel ==========

def hilbert_dims(I: IdealNF) -> List[int]:
    """[dim_F A/(p, I, 𝔪^k) for k = 1..M+1]"""
    reduced = I if I.ambient.N == 1 else I.reduce_mod_p()
    work = reduced.work_ring
    rows = [r for g in reduced.generators for r in _multiples(_descend(g, work))]
    width = len(work.monomials) * work.f
    basis = howell_form(np.array(rows, dtype=work.dtype).reshape(-1, width), work.p, 1, width)
    pivot_cols = [j for j, _ in basis.pivots]
    dims = []
    for k in range(1, work.M + 2):
        cols = sum(1 for d in work.degrees if d < k) * work.f
        rank = sum(1 for j in pivot_cols if j < cols)
        dims.append((cols - rank) // work.f)
    return dims


@dataclass(frozen=True)
class HilbertSamuel:
    """dim_F R/(p, 𝔪^k) = e·k^d/d! + (낮은 차수)"""
    e: int
    d: int
    dims: Tuple[int, ...]
    stable_from: int

    def to_json(self) -> dict:
        return {"e": self.e, "d": self.d, "dims": list(self.dims), "stable_from": self.stable_from}


def hilbert_samuel(I: IdealNF) -> HilbertSamuel:
    """
    R = A/I 의 mod p Hilbert–Samuel 중복도와 차원

    d 차 차분이 마지막 세 점에서 일정하고 0 이 아니면 (e, d).
    """
    dims = hilbert_dims(I)
    seq = list(dims)
    for d in range(len(dims)):
        if len(seq) < 3:
            break
        tail = seq[-3:]
        if tail[0] == tail[1] == tail[2] and tail[0] != 0:
            start = len(seq) - 3
            while start > 0 and seq[start - 1] == tail[0]:
                start -= 1
            return HilbertSamuel(tail[0], d, tuple(dims), start + 1 + d)
        seq = [b - a for a, b in zip(seq, seq[1:])]
    raise PrecisionError(f"Hilbert function not stable at M={I.ambient.M}: {dims}")


# ========== 유한 생성 가군 (Nakayama) ==========

@dataclass(frozen=True)
class LocalModulePresentation:
    """
    (A/I)^n / Rel 의 부분가군 X = ⟨generators⟩

    길이는 모두 ℤ_p (또는 W) 가군으로서, F-차원 = 길이.
    """
    ring: IdealNF
    rank: int
    generators: Tuple[Tuple[PowerSeriesPoly, ...], ...]
    relations: Tuple[Tuple[PowerSeriesPoly, ...], ...] = ()

    def __post_init__(self):
        for vec in self.generators + self.relations:
            if len(vec) != self.rank:
                raise ParameterError(f"module vector of length {len(vec)} in rank {self.rank}")

    @property
    def _work(self) -> SeriesRing:
        return self.ring.work_ring

    def _vector_rows(self, vec: Sequence[PowerSeriesPoly]) -> List[np.ndarray]:
        """x^m t^i·vec"""
        work = self._work
        parts = [_descend(c, work) for c in vec]
        rows = []
        for scalar in range(work.f):
            coords = [0] * work.f
            coords[scalar] = 1
            unit = work.witt.element(coords)
            for i in range(len(work.monomials)):
                row = np.concatenate([_flatten((c * unit).times_monomial(i)) for c in parts])
                if np.any(row):
                    rows.append(row)
        return rows

    def _width(self) -> int:
        work = self._work
        return self.rank * len(work.monomials) * work.f

    def _ambient_rows(self) -> np.ndarray:
        """Rel + I·A^n + 절단 비틀림"""
        work = self._work
        n_cols = len(work.monomials) * work.f
        rows = [r for vec in self.relations for r in self._vector_rows(vec)]
        for c in range(self.rank):
            for r in self.ring.basis.rows:
                row = np.zeros(self._width(), dtype=work.dtype)
                row[c * n_cols:(c + 1) * n_cols] = r
                rows.append(row)
        mat = np.array(rows, dtype=work.dtype).reshape(-1, self._width())
        return np.vstack([mat, torsion_rows(work, self.rank)])

    def span(self, extra: Optional[np.ndarray] = None) -> HowellBasis:
        work = self._work
        rows = [r for vec in self.generators for r in self._vector_rows(vec)]
        mat = np.vstack([np.array(rows, dtype=work.dtype).reshape(-1, self._width()), self._ambient_rows()])
        if extra is not None and len(extra):
            mat = np.vstack([mat, extra])
        return howell_form(mat, work.p, work.N, self._width())

    def maximal_multiple_rows(self) -> np.ndarray:
        """𝔪X 의 생성 벡터"""
        work = self._work
        span = self.span()
        n_cols = len(work.monomials) * work.f
        out = [(span.rows * work.p) % work.witt.modulus]
        for i in range(len(work.monomials)):
            if work.degrees[i] != 1:
                continue
            shifted = []
            for r in span.rows:
                parts = [_unflatten(r[c * n_cols:(c + 1) * n_cols], work).times_monomial(i) for c in range(self.rank)]
                shifted.append(np.concatenate([_flatten(q) for q in parts]))
            if shifted:
                out.append(np.array(shifted, dtype=work.dtype).reshape(-1, self._width()))
        return np.vstack(out + [self._ambient_rows()])

    def module_length(self) -> int:
        """ℓ(X) = ℓ(X + Rel′) - ℓ(Rel′)"""
        work = self._work
        base = howell_form(self._ambient_rows(), work.p, work.N, self._width())
        return (self.span().length() - base.length()) // work.f

    def mingen(self) -> int:
        """dim_F X/𝔪X"""
        work = self._work
        m_span = howell_form(self.maximal_multiple_rows(), work.p, work.N, self._width())
        return (self.span().length() - m_span.length()) // work.f


def _same_frame(*mods: LocalModulePresentation) -> None:
    first = mods[0]
    for m in mods[1:]:
        if m.rank != first.rank or not (m.ring == first.ring) or m.relations != first.relations:
            raise ChainError("modules do not share a common ambient presentation")


def quotient_mingen(big: LocalModulePresentation, small: LocalModulePresentation) -> int:
    """dim_F big/(𝔪·big + small)"""
    work = big._work
    width = big._width()
    small_rows = small.span().rows
    top = big.span().length()
    bottom = howell_form(np.vstack([big.maximal_multiple_rows(), small_rows]), work.p, work.N, width).length()
    return (top - bottom) // work.f


@dataclass(frozen=True)
class NakayamaReport:
    mingen_M: int
    mingen_M1: int
    mingen_M1_mod_M2: int
    mingen_M_mod_M2: int
    status: str

    def to_json(self) -> dict:
        return {
            "mingen(M)": self.mingen_M,
            "mingen(M')": self.mingen_M1,
            "mingen(M'/M'')": self.mingen_M1_mod_M2,
            "mingen(M/M'')": self.mingen_M_mod_M2,
            "status": self.status,
        }


def nakayama_check(M2: LocalModulePresentation, M1: LocalModulePresentation,
                   M: LocalModulePresentation) -> NakayamaReport:
    """
    M″ ⊆ M′ ⊆ M 에 대해: mingen(M′/M″) = mingen(M′) 이면 M″ ⊆ 𝔪M 이고
    mingen(M/M″) = mingen(M).

    Raises:
        ChainError: 포함 관계가 성립하지 않음
    """
    _same_frame(M2, M1, M)
    span_M, span_M1, span_M2 = M.span(), M1.span(), M2.span()
    if not span_M1.contains_basis(span_M2) or not span_M.contains_basis(span_M1):
        raise ChainError("M'' ⊆ M' ⊆ M does not hold")
    g_M, g_M1 = M.mingen(), M1.mingen()
    g_quot = quotient_mingen(M1, M2)
    g_top = quotient_mingen(M, M2)
    if g_quot != g_M1:
        status = "hypothesis-not-met"
    else:
        work = M._work
        m_M = howell_form(M.maximal_multiple_rows(), work.p, work.N, M._width())
        ok = m_M.contains_basis(span_M2) and g_top == g_M
        status = "pass" if ok else "fail"
    logger.debug("Nakayama check: %s", status)
    return NakayamaReport(g_M, g_M1, g_quot, g_top, status)
