# ============================================================
# 계수 2 에탈 φ-가군 행렬 계산
# 파일: mcp_server_serre/phi_modules.py
#
# 규약 (열 규약): M_i 는 색인 i-1 의 기저를 색인 i 로 보냄
#   φ(𝔈^{i-1}) = M_i[0][0]·𝔈^i + M_i[1][0]·𝔉^i
#   φ(𝔉^{i-1}) = M_i[0][1]·𝔈^i + M_i[1][1]·𝔉^i
# 화면 표기의 행 (φ𝔈 행, φ𝔉 행) 은 M_i 의 전치.
# 색인 i 의 근은 r = -i mod f, 변수 X_r, Y_r, a_r, c_r 은 근 색인.
# D(α,α′) 비틀림은 i = 0 에서 오른쪽 곱 (표기에서는 행 배율).
# ============================================================

import logging
import os
import random
import sys
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .chain_linalg import solve_many_mod_p, solve_mod_p
from .errors import (NotInvertibleError, ParameterError, PrecisionError,
                     ShapeMismatchError, check_token)
from .laurent import (CoeffRing, LaurentSeriesV, Matrix, diagonal,
                      identity, mat_add, mat_det, mat_equals, mat_inverse, mat_map, mat_mul, mat_scale,
                      mat_phi, mat_sub, mat_to_json, mat_transpose, mat_truncate, swap, torus)
from .power_series import PowerSeriesPoly, SeriesRing, dual_numbers, series_ring
from .weights import ResidualParams, WeylElt
from .witt import TruncatedWitt, WittRing, residue_field, teichmuller, witt_ring

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'config'))
from precision_constants import PRECISION  # noqa: E402

logger = logging.getLogger(__name__)

VAR_ALPHA = "Xalpha"
VAR_ALPHAP = "Xalphap"


def var_x(r: int) -> str:
    return f"X{r}"


def var_y(r: int) -> str:
    return f"Y{r}"


def root_of(i: int, f: int) -> int:
    """행렬 색인 i 의 근 r = -i mod f"""
    return (-i) % f


# ========== 모양 ==========

class Shape(str, Enum):
    """정규형 행렬 A₁, A₂, A₃"""
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"


# 다섯 경우 → 모양 (1, 5: A1 / 2, 4: A2 / 3: A3)
SHAPE_OF_CASE = {1: Shape.A1, 2: Shape.A2, 3: Shape.A3, 4: Shape.A2, 5: Shape.A1}


def case_at(swapped: bool, signs: Iterable[int]) -> int:
    """
    근 r 에서의 경우 번호

    s_r = Id: -ω ∈ I(ρ̄,μ) 이면 2, 아니면 1
    s_r ≠ Id: ω ∈ I 이면 4, -ω ∈ I 이면 5, 둘 다 아니면 3
    """
    signs = set(signs)
    if not swapped:
        return 2 if -1 in signs else 1
    if 1 in signs:
        return 4
    if -1 in signs:
        return 5
    return 3


@dataclass(frozen=True)
class ShapeLetter:
    """행렬 색인 하나의 모양 문자"""
    index: int
    root: int
    case: int
    swapped: bool
    a: TruncatedWitt      # 잉여체 원소, 경우 5 에서는 0
    c: int

    @property
    def shape(self) -> Shape:
        return SHAPE_OF_CASE[self.case]

    @property
    def lam(self) -> Tuple[int, int]:
        """μ_r - s_r η, μ_r = (c, 1)"""
        return (self.c, 0) if self.swapped else (self.c - 1, 1)

    @property
    def has_y(self) -> bool:
        return self.shape is Shape.A2

    def to_json(self) -> dict:
        return {
            "index": self.index, "root": self.root, "case": self.case,
            "shape": self.shape.value, "s": "s" if self.swapped else "Id",
            "a": self.a.to_json(), "c": self.c,
        }


@dataclass(frozen=True)
class ShapeWord:
    """정규형 자료: 색인별 모양 문자와 잔여 비틀림 (α, α′)"""
    p: int
    f: int
    letters: Tuple[ShapeLetter, ...]
    alpha: TruncatedWitt
    alpha_prime: TruncatedWitt

    def parameter_names(self) -> List[str]:
        names = []
        for letter in sorted(self.letters, key=lambda x: x.root):
            names.append(var_x(letter.root))
            if letter.has_y:
                names.append(var_y(letter.root))
        return names + [VAR_ALPHA, VAR_ALPHAP]

    def relations(self) -> Tuple[Tuple[str, str], ...]:
        return tuple((var_x(x.root), var_y(x.root)) for x in sorted(self.letters, key=lambda x: x.root)
                     if x.has_y)

    def to_json(self) -> dict:
        return {
            "letters": [x.to_json() for x in self.letters],
            "alpha": self.alpha.to_json(), "alpha_prime": self.alpha_prime.to_json(),
        }


def shape_word(s: WeylElt, params: ResidualParams) -> ShapeWord:
    """유형 s 와 잔여 자료에서 색인별 모양 결정"""
    if s.f != params.f:
        raise ParameterError(f"type has f={s.f}, residual data has f={params.f}")
    field_ = residue_field(params.p, params.f)
    letters = []
    for i in range(params.f):
        r = root_of(i, params.f)
        swapped = bool(s.components[r])
        case = case_at(swapped, params.irhomu.at(r))
        a = field_.zero if case == 5 else params.a[r]
        letters.append(ShapeLetter(i, r, case, swapped, a, params.c[r]))
    return ShapeWord(params.p, params.f, tuple(letters), params.alpha, params.alpha_prime)


# ========== 행렬족 ==========

def _ring_json(ring: CoeffRing) -> dict:
    if isinstance(ring, SeriesRing):
        return ring.json_schema()
    return {"variables": [], "p": ring.p, "f": ring.f, "N": ring.N, "M": 0, "relations": []}


@dataclass(frozen=True)
class PhiMatrixFamily:
    """
    ∏_{i∈ℤ/f} R((v)) 위 계수 2 φ-가군의 행렬 M_0..M_{f-1}

    convention = "column": M_i 의 열이 φ(𝔈^{i-1}), φ(𝔉^{i-1}) 의 좌표.
    """
    p: int
    f: int
    ring: CoeffRing
    matrices: Tuple[Matrix, ...]
    convention: str = "column"

    def __post_init__(self):
        if len(self.matrices) != self.f:
            raise ParameterError(f"expected {self.f} matrices, got {len(self.matrices)}")

    def __getitem__(self, i: int) -> Matrix:
        return self.matrices[i % self.f]

    def display_rows(self, i: int) -> Matrix:
        """(φ𝔈^{i-1} 의 (𝔈, 𝔉) 계수, φ𝔉^{i-1} 의 계수)"""
        return mat_transpose(self[i])

    def det(self, i: int) -> LaurentSeriesV:
        return mat_det(self[i])

    def is_etale(self) -> bool:
        return all(self.det(i).valuation() is not None for i in range(self.f))

    def map_coefficients(self, fn: Callable, ring: CoeffRing) -> "PhiMatrixFamily":
        mats = tuple(mat_map(M, lambda x: x.map_coefficients(fn, ring)) for M in self.matrices)
        return PhiMatrixFamily(self.p, self.f, ring, mats, self.convention)

    def substitute(self, images: Mapping[str, PowerSeriesPoly], target: SeriesRing) -> "PhiMatrixFamily":
        """변수 대입 x ↦ images[x]"""
        return self.map_coefficients(lambda c: c.substitute(images, target), target)

    def residual(self) -> "PhiMatrixFamily":
        """mod 𝔪 축약 (F_q 계수)"""
        field_ = residue_field(self.p, self.f)
        if isinstance(self.ring, SeriesRing):
            return self.map_coefficients(lambda c: c.constant_term().reduce(), field_)
        return self.map_coefficients(lambda c: c.reduce(), field_)

    def truncate(self, hi: int) -> "PhiMatrixFamily":
        return PhiMatrixFamily(self.p, self.f, self.ring, tuple(mat_truncate(M, hi) for M in self.matrices),
                               self.convention)

    def equals(self, other: "PhiMatrixFamily", hi: Optional[int] = None) -> bool:
        return self.f == other.f and all(mat_equals(a, b, hi) for a, b in zip(self.matrices, other.matrices))

    def to_json(self) -> dict:
        return {
            "p": self.p, "f": self.f, "convention": self.convention,
            "ring": _ring_json(self.ring),
            "matrices": [mat_to_json(M) for M in self.matrices],
        }


def _laurent(ring: CoeffRing) -> Callable[[Dict[int, object]], LaurentSeriesV]:
    """{지수: 계수} → LaurentSeriesV (정수 계수 허용)"""
    def build(terms: Dict[int, object]) -> LaurentSeriesV:
        clean = {}
        for e, c in terms.items():
            if isinstance(c, int):
                c = ring.constant(c) if isinstance(ring, SeriesRing) else ring.from_int(c)
            clean[e] = c
        return LaurentSeriesV.build(ring, clean)
    return build


def _from_display(rows: Matrix) -> Matrix:
    return mat_transpose(rows)


def _twist_rows(rows: Matrix, a: LaurentSeriesV, b: LaurentSeriesV) -> Matrix:
    """표기 행 배율 (φ𝔈 행 × a, φ𝔉 행 × b)"""
    return ((rows[0][0] * a, rows[0][1] * a), (rows[1][0] * b, rows[1][1] * b))


# ========== 잔여 φ-가군 ==========

def build_residual(params: ResidualParams) -> PhiMatrixFamily:
    """
    잔여 φ-가군 𝓜 (F_q 계수)

    -ω^{(r)} ∉ I(ρ̄,μ): φ𝔈 = v^c 𝔈 + a_r v^c 𝔉, φ𝔉 = v 𝔉
    -ω^{(r)} ∈ I(ρ̄,μ): φ𝔈 = v^c 𝔉,            φ𝔉 = v 𝔈
    i = 0 에서 두 행에 α, α′ 배.
    """
    p, f = params.p, params.f
    F = residue_field(p, f)
    L = _laurent(F)
    mats = []
    for i in range(f):
        r = root_of(i, f)
        c = params.c[r]
        if -1 in params.irhomu.at(r):
            rows = ((L({}), L({c: F.one})), (L({1: F.one}), L({})))
        else:
            rows = ((L({c: F.one}), L({c: params.a[r]})), (L({}), L({1: F.one})))
        if i == 0:
            rows = _twist_rows(rows, L({0: params.alpha}), L({0: params.alpha_prime}))
        mats.append(_from_display(rows))
    return PhiMatrixFamily(p, f, F, tuple(mats))


# ========== Kisin 정규형 ==========

def type_ring(word: ShapeWord, N: Optional[int] = None, M: Optional[int] = None) -> SeriesRing:
    """
    유형환 𝒪[[X_r, (Y_r : A₂), X_α, X_α′]], A₂ 근에서 X_r·Y_r = p
    """
    N = N or PRECISION.witt_N
    M = M if M is not None else PRECISION.series_M
    return series_ring(tuple(word.parameter_names()), witt_ring(word.p, word.f, N), M, word.relations())


def _value(values: Mapping[str, PowerSeriesPoly], ring: SeriesRing, name: str) -> PowerSeriesPoly:
    v = values.get(name)
    return ring.zero() if v is None else v


def _teich(ring: SeriesRing, x: TruncatedWitt) -> PowerSeriesPoly:
    return ring.constant(teichmuller(x, ring.N))


def _shape_matrix(letter: ShapeLetter, ring: SeriesRing, values: Mapping[str, PowerSeriesPoly]) -> Matrix:
    L = _laurent(ring)
    p = ring.p
    X = _value(values, ring, var_x(letter.root))
    if letter.shape is Shape.A1:
        Z = X + _teich(ring, letter.a)
        return ((L({0: p, 1: 1}), L({})), (L({1: Z}), L({0: 1})))
    if letter.shape is Shape.A2:
        Y = _value(values, ring, var_y(letter.root))
        return ((L({0: -Y}), L({0: 1})), (L({1: 1}), L({0: X})))
    Z = X + _teich(ring, letter.a)
    return ((L({0: -(Z.inverse() * p)}), L({0: 1})), (L({1: 1}), L({0: Z})))


def _placement(letter: ShapeLetter, ring: CoeffRing) -> Matrix:
    """s^{-1}·v^{μ-sη}"""
    T = torus(ring, letter.lam)
    return mat_mul(swap(ring), T) if letter.swapped else T


def _alpha_twist(word: ShapeWord, ring: SeriesRing, values: Mapping[str, PowerSeriesPoly]) -> Matrix:
    L = _laurent(ring)
    return diagonal(L({0: _teich(ring, word.alpha) + _value(values, ring, VAR_ALPHA)}),
                    L({0: _teich(ring, word.alpha_prime) + _value(values, ring, VAR_ALPHAP)}))


def kisin_normal_form(word: ShapeWord, values: Mapping[str, PowerSeriesPoly],
                      ring: SeriesRing) -> PhiMatrixFamily:
    """
    정규형 M_i = A^{(i)}·s_r^{-1}·v^{μ_r - s_r η} (i = 0 에서 ·D(α,α′))

    Args:
        word: 모양 문자열
        values: 매개변수 이름 → ring 원소 (없으면 0)
        ring: 계수환
    """
    mats = []
    for letter in word.letters:
        M = mat_mul(_shape_matrix(letter, ring, values), _placement(letter, ring))
        if letter.index == 0:
            M = mat_mul(M, _alpha_twist(word, ring, values))
        mats.append(M)
    return PhiMatrixFamily(word.p, word.f, ring, tuple(mats))


def _case_display(letter: ShapeLetter, ring: SeriesRing, values: Mapping[str, PowerSeriesPoly]) -> Matrix:
    """다섯 경우의 전사(轉寫)된 표기 행"""
    L = _laurent(ring)
    p, c = ring.p, letter.c
    X = _value(values, ring, var_x(letter.root))
    Y = _value(values, ring, var_y(letter.root))
    Z = X + _teich(ring, letter.a)
    if letter.case == 1:
        return ((L({c - 1: p, c: 1}), L({c: Z})), (L({}), L({1: 1})))
    if letter.case == 2:
        return ((L({c - 1: -Y}), L({c: 1})), (L({1: 1}), L({1: X})))
    if letter.case == 3:
        return ((L({c: 1}), L({c: Z})), (L({0: -(Z.inverse() * p)}), L({1: 1})))
    if letter.case == 4:
        return ((L({c: 1}), L({c: X})), (L({0: -Y}), L({1: 1})))
    return ((L({}), L({c: 1})), (L({0: p, 1: 1}), L({1: X})))


def case_display(word: ShapeWord, values: Mapping[str, PowerSeriesPoly], ring: SeriesRing) -> PhiMatrixFamily:
    """다섯 경우 표기에서 직접 읽은 행렬족"""
    mats = []
    for letter in word.letters:
        rows = _case_display(letter, ring, values)
        if letter.index == 0:
            D = _alpha_twist(word, ring, values)
            rows = _twist_rows(rows, D[0][0], D[1][1])
        mats.append(_from_display(rows))
    return PhiMatrixFamily(word.p, word.f, ring, tuple(mats))


@dataclass(frozen=True)
class UniversalExpansion:
    """유형 s 의 보편 변형 행렬족과 검증 결과"""
    word: ShapeWord
    family: PhiMatrixFamily
    verified: bool

    @property
    def ring(self) -> SeriesRing:
        return self.family.ring

    def to_json(self) -> dict:
        return {
            "word": self.word.to_json(),
            "cases": [x.case for x in self.word.letters],
            "verified": self.verified,
            "family": self.family.to_json(),
        }


def expand_universal(s: WeylElt, params: ResidualParams, N: Optional[int] = None,
                     M: Optional[int] = None) -> UniversalExpansion:
    """
    A^{(i)}·s^{-1}·v^{μ-sη} 을 기호적으로 전개하고 다섯 경우 표기와 비교

    Raises:
        ParameterError: s 와 잔여 자료의 f 불일치
    """
    word = shape_word(s, params)
    ring = type_ring(word, N, M)
    gens = {name: ring.var(name) for name in ring.variables}
    family = kisin_normal_form(word, gens, ring)
    verified = family.equals(case_display(word, gens, ring))
    if not verified:
        logger.warning("universal family for s=%s disagrees with the case display", s.label())
    logger.debug("expanded s=%s cases=%s", s.label(), [x.case for x in word.letters])
    return UniversalExpansion(word, family, verified)


# ========== 다중유형 표기 ==========

def deformation_ring(params: ResidualParams, N: Optional[int] = None, M: Optional[int] = None) -> SeriesRing:
    """자유환 𝒪[[(X_r, Y_r)_r, X_α, X_α′]]"""
    N = N or PRECISION.witt_N
    M = M if M is not None else PRECISION.series_M
    names = []
    for r in range(params.f):
        names += [var_x(r), var_y(r)]
    return series_ring(tuple(names + [VAR_ALPHA, VAR_ALPHAP]), witt_ring(params.p, params.f, N), M)


def deformation_display(params: ResidualParams, N: Optional[int] = None,
                        M: Optional[int] = None) -> PhiMatrixFamily:
    """
    R^{T_{σ,∅}} 위 다중유형 행렬족 (근별 세 경우)

    ∅:        φ𝔈 = v^{c-1}(v+p-Y)𝔈 + v^c(X+[a])𝔉,  φ𝔉 = -Y(X+[a])^{-1}𝔈 + v𝔉
    ω ∈ I:    φ𝔈 = v^{c-1}(v+p-XY)𝔈 + X v^c 𝔉,    φ𝔉 = -Y𝔈 + v𝔉
    -ω ∈ I:   φ𝔈 = -Y v^{c-1}𝔈 + v^c 𝔉,          φ𝔉 = (v+p-XY)𝔈 + X v 𝔉
    """
    ring = deformation_ring(params, N, M)
    L = _laurent(ring)
    p = ring.p
    word = ShapeWord(params.p, params.f, (), params.alpha, params.alpha_prime)
    gens = {name: ring.var(name) for name in ring.variables}
    mats = []
    for i in range(params.f):
        r = root_of(i, params.f)
        c = params.c[r]
        X, Y = gens[var_x(r)], gens[var_y(r)]
        signs = params.irhomu.at(r)
        if 1 in signs:
            rows = ((L({c - 1: p - X * Y, c: 1}), L({c: X})), (L({0: -Y}), L({1: 1})))
        elif -1 in signs:
            rows = ((L({c - 1: -Y}), L({c: 1})), (L({0: p - X * Y, 1: 1}), L({1: X})))
        else:
            Z = X + _teich(ring, params.a[r])
            rows = ((L({c - 1: p - Y, c: 1}), L({c: Z})), (L({0: -(Y * Z.inverse())}), L({1: 1})))
        if i == 0:
            D = _alpha_twist(word, ring, gens)
            rows = _twist_rows(rows, D[0][0], D[1][1])
        mats.append(_from_display(rows))
    return PhiMatrixFamily(params.p, params.f, ring, tuple(mats))


def type_specialization(s: WeylElt, params: ResidualParams, target: SeriesRing) -> Dict[str, PowerSeriesPoly]:
    """
    다중유형 표기 → 단일 유형 s 의 대입

    ∅: Id 이면 Y ↦ 0, s 이면 Y ↦ p
    ω ∈ I(ρ̄,μ): Id 이면 Y ↦ 0, s 이면 Y 유지 (XY = p)
    -ω ∈ I(ρ̄,μ): Id 이면 Y 유지 (XY = p), s 이면 Y ↦ 0
    """
    images: Dict[str, PowerSeriesPoly] = {}
    for r in range(params.f):
        swapped = bool(s.components[r])
        signs = params.irhomu.at(r)
        name = var_y(r)
        if not signs:
            images[name] = target.constant(params.p) if swapped else target.zero()
        elif (1 in signs) != swapped:
            images[name] = target.zero()
    return images


def specialize_display(display: PhiMatrixFamily, s: WeylElt, params: ResidualParams) -> UniversalExpansion:
    """다중유형 표기를 유형 s 의 유형환으로 내림"""
    word = shape_word(s, params)
    target = type_ring(word, display.ring.N, display.ring.M)
    family = display.substitute(type_specialization(s, params, target), target)
    gens = {name: target.var(name) for name in target.variables}
    verified = family.equals(kisin_normal_form(word, gens, target))
    return UniversalExpansion(word, family, verified)


# ========== 기저 변환 ==========

def _is_nilpotent_perturbation(A: Matrix) -> bool:
    """A - Id 의 계수가 모두 비단원"""
    ring = A[0][0].ring
    diff = mat_sub(A, identity(ring))
    return all(not c.is_unit() for row in diff for x in row for _, c in x.terms)


def neumann_inverse(A: Matrix, hi: Optional[int] = None, limit: int = 256) -> Matrix:
    """A = Id + N, N 멱영: Σ (-N)^k"""
    ring = A[0][0].ring
    one = identity(ring)
    neg = mat_map(mat_sub(A, one), lambda x: -x)
    total, term = one, one
    for _ in range(limit):
        term = mat_mul(term, neg)
        if hi is not None:
            term = mat_truncate(term, hi)
        if all(x.is_zero() for row in term for x in row):
            return total if hi is None else mat_truncate(total, hi)
        total = mat_add(total, term)
    raise PrecisionError("Neumann series did not terminate; perturbation is not nilpotent at this precision")


def matrix_inverse(A: Matrix, hi: Optional[int] = None) -> Matrix:
    """
    2×2 Laurent 행렬의 역

    det 이 단원 계수 단항식이면 정확, Id + 멱영이면 Neumann, 그 외에는 hi 까지.
    """
    det = mat_det(A)
    if len(det.terms) == 1 and det.terms[0][1].is_unit():
        e, c = det.terms[0]
        inv = LaurentSeriesV.build(det.ring, {-e: c.inverse()})
        adj = ((A[1][1], -A[0][1]), (-A[1][0], A[0][0]))
        out = mat_map(adj, lambda x: x * inv)
        return out if hi is None else mat_truncate(out, hi)
    if _is_nilpotent_perturbation(A):
        return neumann_inverse(A, hi)
    if hi is None:
        raise NotInvertibleError("inverse needs a v-adic precision bound")
    return mat_inverse(A, hi)


def base_change(family: PhiMatrixFamily, D: Sequence[Matrix], hi: Optional[int] = None) -> PhiMatrixFamily:
    """
    M_i ↦ D_i·M_i·φ(D_{i-1})^{-1}

    Raises:
        NotInvertibleError: D_i 가 가역이 아님
    """
    if len(D) != family.f:
        raise ParameterError(f"expected {family.f} change-of-basis matrices")
    p, f = family.p, family.f
    inv_phi = [matrix_inverse(mat_phi(D[i], p), hi) for i in range(f)]
    mats = []
    for i in range(f):
        M = mat_mul(mat_mul(D[i], family[i]), inv_phi[(i - 1) % f])
        mats.append(M if hi is None else mat_truncate(M, hi))
    return PhiMatrixFamily(p, f, family.ring, tuple(mats), family.convention)


def torus_scale(family: PhiMatrixFamily, scalars: Sequence[Tuple[object, object]]) -> PhiMatrixFamily:
    """상수 대각 기저 변환 diag(d_i, d′_i)"""
    L = _laurent(family.ring)
    return base_change(family, [diagonal(L({0: a}), L({0: b})) for a, b in scalars])


# ========== F_q 선형계 ==========

EqKey = Tuple[int, int, int, int]   # (색인, 행, 열, v-지수)


@dataclass
class _FqSystem:
    """F_q 값 미지수를 F_p 좌표로 펼친 선형계"""
    p: int
    fdeg: int
    keep: Callable[[EqKey], bool]
    keys: List[Tuple[object, int]] = field(default_factory=list)
    columns: List[Dict[EqKey, Tuple[int, ...]]] = field(default_factory=list)

    def add_unknown(self, key, contributions: Callable[[TruncatedWitt], Iterable[Tuple[EqKey, TruncatedWitt]]],
                    F: WittRing) -> None:
        for k in range(self.fdeg):
            u = F.element([1 if j == k else 0 for j in range(self.fdeg)])
            acc: Dict[EqKey, TruncatedWitt] = {}
            for eq, val in contributions(u):
                if not self.keep(eq):
                    continue
                acc[eq] = acc[eq] + val if eq in acc else val
            self.keys.append((key, k))
            self.columns.append({eq: v.coords for eq, v in acc.items() if not v.is_zero()})

    def assemble(self, rhs: Sequence[Dict[EqKey, Tuple[int, ...]]]) -> Tuple[np.ndarray, np.ndarray, List[EqKey]]:
        rowkeys = sorted({eq for col in self.columns for eq in col}
                         | {eq for r in rhs for eq in r if self.keep(eq)})
        pos = {eq: n for n, eq in enumerate(rowkeys)}
        fd = self.fdeg
        A = np.zeros((len(rowkeys) * fd, len(self.columns)), dtype=np.int64)
        for j, col in enumerate(self.columns):
            for eq, coords in col.items():
                A[pos[eq] * fd:(pos[eq] + 1) * fd, j] = coords
        B = np.zeros((len(rowkeys) * fd, len(rhs)), dtype=np.int64)
        for n, r in enumerate(rhs):
            for eq, coords in r.items():
                if eq in pos:
                    B[pos[eq] * fd:(pos[eq] + 1) * fd, n] = coords
        return A % self.p, B % self.p, rowkeys

    def gather(self, x: np.ndarray) -> Dict[object, Tuple[int, ...]]:
        """해 벡터 → 미지수별 F_q 좌표 (0 은 생략)"""
        out: Dict[object, List[int]] = {}
        for (key, k), val in zip(self.keys, x):
            if val % self.p:
                out.setdefault(key, [0] * self.fdeg)[k] = int(val) % self.p
        return {k: tuple(v) for k, v in out.items()}


def _gauge_contributions(Mbar: PhiMatrixFamily, i: int, a: int, b: int, e: int):
    """δ_i[a][b] = u·v^e 의 기여: δ_i M̄_i - M̄_{i+1} φ(δ_i)"""
    p, f = Mbar.p, Mbar.f
    nxt = (i + 1) % f

    def contributions(u: TruncatedWitt):
        for b2 in range(2):
            for E, m in Mbar[i][b][b2].terms:
                yield (i, a, b2, e + E), u * m
        su = u.frobenius(1)
        for a2 in range(2):
            for E, m in Mbar[nxt][a2][a].terms:
                yield (nxt, a2, b, p * e + E), -(m * su)
    return contributions


def _matrix_contributions(deriv: PhiMatrixFamily, sign: int = -1):
    def contributions(u: TruncatedWitt):
        for i in range(deriv.f):
            for a in range(2):
                for b in range(2):
                    for E, m in deriv[i][a][b].terms:
                        yield (i, a, b, E), (u * m) if sign > 0 else -(u * m)
    return contributions


def _family_rhs(family: PhiMatrixFamily, extract: Callable, keep: Callable[[EqKey], bool]) -> Dict:
    """{열 키: {EqKey: 좌표}} (extract 는 계수 → {열 키: 좌표})"""
    out: Dict[object, Dict[EqKey, Tuple[int, ...]]] = {}
    for i in range(family.f):
        for a in range(2):
            for b in range(2):
                for e, c in family[i][a][b].terms:
                    if not keep((i, a, b, e)):
                        continue
                    for col, coords in extract(c).items():
                        out.setdefault(col, {})[(i, a, b, e)] = coords
    return out


# ========== 고유기저 정규화 ==========

@dataclass
class NormalizationResult:
    """정규화 결과: 매개변수, 기저 변환 (T_i), 창"""
    word: ShapeWord
    params: Dict[str, PowerSeriesPoly]
    change: Tuple[Matrix, ...]
    normal_form: PhiMatrixFamily
    window: Tuple[int, int]
    levels: List[dict]

    def to_json(self) -> dict:
        return {
            "word": self.word.to_json(),
            "params": {k: v.to_json() for k, v in sorted(self.params.items())},
            "change": [mat_to_json(T) for T in self.change],
            "window": list(self.window),
            "levels": self.levels,
        }


def _linearisation(word: ShapeWord) -> Tuple[PhiMatrixFamily, Dict[str, PhiMatrixFamily]]:
    """F_q[ε] 위에서 평가한 잔여 정규형과 매개변수 미분"""
    dual = dual_numbers(word.p, word.f)
    F = residue_field(word.p, word.f)
    eps = dual.var("eps")
    base = kisin_normal_form(word, {}, dual).map_coefficients(lambda c: c.constant_term(), F)
    derivs = {}
    for name in word.parameter_names():
        fam = kisin_normal_form(word, {name: eps}, dual)
        derivs[name] = fam.map_coefficients(lambda c: c.coefficient({"eps": 1}), F)
    return base, derivs


def normalize_eigenbasis(family: PhiMatrixFamily, word: ShapeWord, width: Optional[int] = None,
                         token=None) -> NormalizationResult:
    """
    국소환 R 위 행렬족을 A₁/A₂/A₃ 정규형으로 보내는 기저 변환과 매개변수

    𝔪-진 등급 k = 1..M 마다 δ_i M̄_i - M̄_i φ(δ_{i-1}) - Σ Δ·∂NF_i = -E^{(k)} 를
    F_p 좌표로 풀고 (Id+δ_i) 로 갱신. 게이지: δ_0 의 v^0 대각 성분은 0.
    v-지수 W 이하의 δ, H = W + max(c) + 1 이하의 방정식.

    Raises:
        ShapeMismatchError: 잔여가 word 의 정규형이 아님, 또는 A₂ 에서 XY ≠ p
        PrecisionError: 어떤 등급에서 해가 없음
    """
    ring = family.ring
    if not isinstance(ring, SeriesRing):
        raise ParameterError("normalisation needs a power-series coefficient ring")
    p, f = family.p, family.f
    W = width if width is not None else PRECISION.laurent_width(p, f)
    H = W + max(x.c for x in word.letters) + 1
    F = residue_field(p, f)

    Mbar, derivs = _linearisation(word)
    if not family.residual().equals(Mbar):
        raise ShapeMismatchError("residual family does not match the requested A1/A2/A3 shapes")

    keep = lambda eq: 0 <= eq[3] <= H  # noqa: E731
    system = _FqSystem(p, f, keep)
    for i in range(f):
        for a in range(2):
            for b in range(2):
                for e in range(W + 1):
                    if i == 0 and a == b and e == 0:
                        continue
                    system.add_unknown(("D", i, a, b, e), _gauge_contributions(Mbar, i, a, b, e), F)
    for name, deriv in derivs.items():
        system.add_unknown(("P", name), _matrix_contributions(deriv), F)

    values = {name: ring.zero() for name in word.parameter_names()}
    one = identity(ring)
    T = [one] * f
    current = family.truncate(H)
    levels = []
    for k in range(1, ring.M + 1):
        check_token(token)
        nf = kisin_normal_form(word, values, ring)
        err = PhiMatrixFamily(p, f, ring, tuple(mat_sub(current[i], nf[i]) for i in range(f)))

        def extract(c: PowerSeriesPoly):
            return {key: tuple((-x) % p for x in digits) for key, digits in c.graded_component(k).items()}

        rhs_map = _family_rhs(err, extract, keep)
        if not rhs_map:
            levels.append({"level": k, "monomials": 0})
            continue
        cols = sorted(rhs_map)
        A, B, _ = system.assemble([rhs_map[c] for c in cols])
        X, ok = solve_many_mod_p(A, B, p)
        if not np.all(ok):
            raise PrecisionError(f"normalisation has no solution at level {k} within v-window {W}")
        delta_terms: Dict[Tuple[int, int, int], Dict[int, PowerSeriesPoly]] = {}
        for n, (mono, j) in enumerate(cols):
            exps = dict(zip(ring.variables, mono))
            for key, coords in system.gather(X[:, n]).items():
                lifted = ring.monomial(exps, ring.witt.element([x * p ** j for x in coords]))
                if key[0] == "P":
                    values[key[1]] = values[key[1]] + lifted
                else:
                    _, i, a, b, e = key
                    slot = delta_terms.setdefault((i, a, b), {})
                    slot[e] = slot[e] + lifted if e in slot else lifted
        deltas = []
        for i in range(f):
            rows = [[LaurentSeriesV.build(ring, delta_terms.get((i, a, b), {})) for b in range(2)]
                    for a in range(2)]
            deltas.append(mat_add(one, (tuple(rows[0]), tuple(rows[1]))))
        inv_phi = [neumann_inverse(mat_phi(deltas[i], p), H) for i in range(f)]
        current = PhiMatrixFamily(p, f, ring, tuple(
            mat_truncate(mat_mul(mat_mul(deltas[i], current[i]), inv_phi[(i - 1) % f]), H) for i in range(f)))
        T = [mat_truncate(mat_mul(deltas[i], T[i]), H) for i in range(f)]
        levels.append({"level": k, "monomials": len(cols)})
        logger.debug("normalisation level %d: %d graded monomials", k, len(cols))

    nf = kisin_normal_form(word, values, ring)
    if not current.equals(nf, H):
        raise PrecisionError("normalisation did not converge at the working precision")
    for letter in word.letters:
        if letter.has_y and not (values[var_x(letter.root)] * values[var_y(letter.root)] - p).is_zero():
            raise ShapeMismatchError(f"X{letter.root}*Y{letter.root} != p after normalisation")
    return NormalizationResult(word, values, tuple(T), nf, (W, H), levels)


def random_point(word: ShapeWord, ring: SeriesRing, rng: random.Random) -> Dict[str, PowerSeriesPoly]:
    """
    유형환 생성원을 Teichmüller 단위로 비튼 점 (A₂ 에서 X ↦ λX, Y ↦ λ^{-1}Y)
    """
    F = residue_field(word.p, word.f)

    def unit() -> TruncatedWitt:
        while True:
            x = F.element([rng.randrange(word.p) for _ in range(word.f)])
            if not x.is_zero():
                return teichmuller(x, ring.N)

    values = {}
    for letter in word.letters:
        lam = unit()
        values[var_x(letter.root)] = ring.constant(lam) * ring.var(var_x(letter.root))
        if letter.has_y:
            values[var_y(letter.root)] = ring.constant(lam.inverse()) * ring.var(var_y(letter.root))
    for name in (VAR_ALPHA, VAR_ALPHAP):
        values[name] = ring.constant(unit()) * ring.var(name)
    return values


def random_gauge(word: ShapeWord, ring: SeriesRing, rng: random.Random) -> List[Matrix]:
    """Id + 𝔪·(v^0, v^1 항), 색인 0 은 v^1 항만 (게이지와 맞춤)"""
    names = list(ring.variables)
    out = []
    for i in range(word.f):
        rows = []
        for a in range(2):
            row = []
            for b in range(2):
                terms = {}
                for e in (0, 1):
                    if i == 0 and e == 0:
                        continue
                    coeff = ring.var(rng.choice(names)) * rng.randrange(word.p)
                    if not coeff.is_zero():
                        terms[e] = coeff
                row.append(LaurentSeriesV.build(ring, terms))
            rows.append(tuple(row))
        out.append(mat_add(identity(ring), (rows[0], rows[1])))
    return out


def normalization_roundtrip(s: WeylElt, params: ResidualParams, seed: int = 0, N: Optional[int] = None,
                            M: Optional[int] = None, width: Optional[int] = None, token=None) -> dict:
    """
    정규형 점을 게이지 변환한 뒤 다시 정규화해 같은 매개변수를 얻는지
    """
    word = shape_word(s, params)
    ring = type_ring(word, N, M)
    rng = random.Random(seed)
    values = random_point(word, ring, rng)
    start = kisin_normal_form(word, values, ring)
    family = base_change(start, random_gauge(word, ring, rng))
    result = normalize_eigenbasis(family, word, width, token)
    recovered = all(result.params[name] == values[name] for name in word.parameter_names())
    again = normalize_eigenbasis(family, word, width, token)
    stable = all(again.params[name] == result.params[name] for name in word.parameter_names())
    return {
        "s": s.label(), "seed": seed,
        "cases": [x.case for x in word.letters],
        "window": list(result.window),
        "levels": result.levels,
        "recovered": recovered,
        "deterministic": stable,
        "pass": recovered and stable,
    }


# ========== 접공간 장애 ==========

def type_free_variables(params: ResidualParams) -> List[str]:
    """
    어떤 단일 유형에서 mod p 로 자유로운 표기 변수

    ∅ 근의 Y_r 은 두 유형 모두에서 0 또는 p 로 고정, 나머지는 모두 자유.
    """
    names = []
    for r in range(params.f):
        names.append(var_x(r))
        if params.irhomu.at(r):
            names.append(var_y(r))
    return names + [VAR_ALPHA, VAR_ALPHAP]


def _epsilon_part(display: PhiMatrixFamily, images: Mapping[str, PowerSeriesPoly], dual: SeriesRing,
                  F: WittRing) -> Tuple[PhiMatrixFamily, PhiMatrixFamily]:
    deformed = display.substitute(images, dual)
    return (deformed.map_coefficients(lambda c: c.constant_term(), F),
            deformed.map_coefficients(lambda c: c.coefficient({"eps": 1}), F))


@dataclass(frozen=True)
class TangentProblem:
    """
    F 위 기본 행렬족 M̄ 과 방향 t 의 ε-계수 N:
    D_i M̄_i - M̄_i φ(D_{i-1}) + Σ s_n ∂_n M̄_i = N_i 를 정수 D (v-지수 0..hi) 로 풂.
    ∂_n 은 단일 유형 안에서 자유로운 변수 n 의 미분.
    """
    params: ResidualParams
    base: PhiMatrixFamily
    delta: PhiMatrixFamily
    direction: Tuple[Tuple[str, Tuple[int, ...]], ...]
    window: Tuple[int, int]
    type_directions: Tuple[Tuple[str, PhiMatrixFamily], ...] = ()

    @classmethod
    def from_direction(cls, params: ResidualParams, direction: Mapping[str, object],
                       window: Optional[Tuple[int, int]] = None) -> "TangentProblem":
        """
        Args:
            direction: 변수 이름 → t(변수) ∈ F_q (정수 또는 잉여체 원소)
        """
        display = deformation_display(params, N=1, M=1)
        F = residue_field(params.p, params.f)
        dual = dual_numbers(params.p, params.f)
        eps = dual.var("eps")
        images = {}
        for name, t in direction.items():
            if name not in display.ring.variables:
                raise ParameterError(f"unknown deformation variable {name}")
            t = t if isinstance(t, TruncatedWitt) else F.from_int(int(t))
            images[name] = dual.constant(t) * eps
        base, delta = _epsilon_part(display, images, dual, F)
        free = tuple((name, _epsilon_part(display, {name: eps}, dual, F)[1])
                     for name in type_free_variables(params))
        key = tuple(sorted((n, tuple(images[n].coefficient({"eps": 1}).coords)) for n in images))
        return cls(params, base, delta, key, window or PRECISION.tangent_window(params.p), free)

    def to_json(self) -> dict:
        return {
            "direction": {n: list(c) for n, c in self.direction},
            "window": list(self.window),
            "type_directions": [n for n, _ in self.type_directions],
            "base": self.base.to_json(),
            "delta": self.delta.to_json(),
        }


@dataclass
class TangentVerdict:
    status: str
    window: Tuple[int, int]
    witness: Optional[Tuple[Matrix, ...]] = None
    pole_orders: Optional[List[int]] = None
    certificate: Optional[List[dict]] = None
    unknowns: int = 0
    equations: int = 0
    type_components: Optional[Dict[str, Tuple[int, ...]]] = None

    @property
    def solvable(self) -> bool:
        return self.status == "SOLVABLE"

    def to_json(self) -> dict:
        out = {
            "status": self.status, "window": list(self.window),
            "unknowns": self.unknowns, "equations": self.equations,
        }
        if self.witness is not None:
            out["witness"] = [mat_to_json(D) for D in self.witness]
            out["pole_orders"] = self.pole_orders
            out["type_components"] = {n: list(c) for n, c in sorted((self.type_components or {}).items())}
        if self.certificate is not None:
            out["certificate"] = self.certificate
        return out


def tangent_operator(base: PhiMatrixFamily, D: Sequence[Matrix]) -> PhiMatrixFamily:
    """D ↦ (D_i M̄_i - M̄_i φ(D_{i-1}))_i"""
    p, f = base.p, base.f
    return PhiMatrixFamily(p, f, base.ring, tuple(
        mat_sub(mat_mul(D[i], base[i]), mat_mul(base[i], mat_phi(D[(i - 1) % f], p))) for i in range(f)))


def tangent_obstruction(problem: TangentProblem, token=None) -> TangentVerdict:
    """
    접방향 t 의 장애 판정

    미지수는 D_i 의 v^0..v^hi 계수 (극 없음, k_i ≤ 0) 와 유형 자유 방향의 계수 s_n.

    Returns:
        SOLVABLE (증인 D_i, 극 차수 k_i, 유형 성분 s_n) 또는 OBSTRUCTED (좌핵 증명 행)
    Raises:
        PrecisionError: 창 상한이 max(c)+1 미만
    """
    params = problem.params
    p, f = params.p, params.f
    lo, hi = problem.window
    if hi < max(params.c) + 1:
        raise PrecisionError(f"tangent window [{lo}, {hi}] too small for p={p}, c={list(params.c)}")
    F = residue_field(p, f)
    base = problem.base
    system = _FqSystem(p, f, lambda eq: True)
    for e in range(hi + 1):
        check_token(token)
        for i in range(f):
            for a in range(2):
                for b in range(2):
                    system.add_unknown(("D", i, a, b, e), _gauge_contributions(base, i, a, b, e), F)
    derivs = dict(problem.type_directions)
    for name, deriv in problem.type_directions:
        system.add_unknown(("P", name), _matrix_contributions(deriv, sign=1), F)
    rhs = _family_rhs(problem.delta, lambda c: {0: c.coords}, lambda eq: True).get(0, {})
    A, B, rowkeys = system.assemble([rhs])
    x, cert = solve_mod_p(A, B[:, 0], p)
    nvars, neqs = A.shape[1], A.shape[0]
    if x is not None:
        coords = system.gather(x)
        components = {key[1]: c for key, c in coords.items() if key[0] == "P"}
        witness = []
        poles = []
        for i in range(f):
            rows = [[LaurentSeriesV.build(F, {key[4]: F.element(c) for key, c in coords.items()
                                                if key[0] == "D" and key[1:4] == (i, ra, rb)})
                     for rb in range(2)] for ra in range(2)]
            D = (tuple(rows[0]), tuple(rows[1]))
            witness.append(D)
            low = min((x_.lowest() for row in D for x_ in row if not x_.is_zero()), default=0)
            poles.append(max(0, -low))
        image = tangent_operator(base, witness)
        for name, c in components.items():
            s = F.element(c)
            image = PhiMatrixFamily(p, f, F, tuple(mat_add(image[i], mat_scale(derivs[name][i], s))
                                                   for i in range(f)))
        if not image.equals(problem.delta):
            raise ArithmeticError("tangent witness failed verification")
        logger.debug("tangent direction %s solvable, type components %s", problem.direction, sorted(components))
        return TangentVerdict("SOLVABLE", (lo, hi), tuple(witness), poles, None, nvars, neqs, components)
    certificate = []
    fd = f
    for n, eq in enumerate(rowkeys):
        weights = [int(w) for w in cert[n * fd:(n + 1) * fd]]
        if any(weights):
            i, a, b, e = eq
            certificate.append({"index": i, "entry": [a, b], "exponent": e, "weights": weights})
    logger.debug("tangent direction %s obstructed on %d rows", problem.direction, len(certificate))
    return TangentVerdict("OBSTRUCTED", (lo, hi), None, None, certificate, nvars, neqs)


def valuation_recursion(p: int, c: Sequence[int], k0: int, rounds: int = 2) -> dict:
    """
    극 차수 하한 k_i ≥ 2 + p(k_{i-1} - 1) 의 전개

    k0 ≥ 1 이면 한 바퀴 뒤 하한이 k0 를 넘어 모순 → k_i ≤ 0.
    """
    if any(not (0 < ci < p - 1) for ci in c):
        raise ParameterError(f"exponents {list(c)} must satisfy 0 < c < p-1")
    f = len(c)
    bounds = [k0]
    for _ in range(rounds * f):
        bounds.append(2 + p * (bounds[-1] - 1))
    return {
        "p": p, "c": list(c), "k0": k0, "bounds": bounds,
        "cycle_bound": bounds[f],
        "contradiction": k0 >= 1 and bounds[f] > k0,
    }
