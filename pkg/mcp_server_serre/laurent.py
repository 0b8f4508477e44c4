# mcp_server_serre/laurent.py
# v-진 Laurent 급수 R((v)) 와 2×2 행렬 (R = Witt 계수 또는 절단 멱급수)
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

from .errors import NotInvertibleError, ParameterError
from .power_series import PowerSeriesPoly, SeriesRing
from .witt import TruncatedWitt, WittRing

CoeffRing = Union[WittRing, SeriesRing]
Coeff = Union[TruncatedWitt, PowerSeriesPoly]


# ========== 계수환 어댑터 ==========

def coeff_zero(ring: CoeffRing) -> Coeff:
    return ring.zero() if isinstance(ring, SeriesRing) else ring.zero


def coeff_one(ring: CoeffRing) -> Coeff:
    return ring.one() if isinstance(ring, SeriesRing) else ring.one


def coeff_const(ring: CoeffRing, c) -> Coeff:
    if isinstance(ring, SeriesRing):
        return ring.constant(c)
    return c if isinstance(c, TruncatedWitt) else ring.from_int(int(c))


def coeff_is_zero(c: Coeff) -> bool:
    return c.is_zero()


def coeff_is_unit(c: Coeff) -> bool:
    return c.is_unit()


def coeff_frobenius(c: Coeff, power: int) -> Coeff:
    return c.frobenius(power) if power else c


# ========== Laurent 급수 ==========

@dataclass(frozen=True)
class LaurentSeriesV:
    """
    Σ c_e v^e, hi 이하 지수까지 정확 (hi=None 이면 유한 Laurent 다항식)

    [a,b] 와 [c,d] 창의 곱은 [a+c, min(a+d, b+c)] 에서 정확.
    """
    ring: CoeffRing
    terms: Tuple[Tuple[int, Coeff], ...]
    hi: Optional[int] = None

    @classmethod
    def build(cls, ring: CoeffRing, terms: Dict[int, Coeff], hi: Optional[int] = None) -> "LaurentSeriesV":
        clean = tuple(sorted((e, c) for e, c in terms.items()
                             if not coeff_is_zero(c) and (hi is None or e <= hi)))
        return cls(ring, clean, hi)

    @classmethod
    def zero(cls, ring: CoeffRing, hi: Optional[int] = None) -> "LaurentSeriesV":
        return cls(ring, (), hi)

    @classmethod
    def monomial(cls, ring: CoeffRing, exponent: int, coeff=1) -> "LaurentSeriesV":
        return cls.build(ring, {exponent: coeff_const(ring, coeff)})

    @classmethod
    def constant(cls, ring: CoeffRing, coeff) -> "LaurentSeriesV":
        return cls.monomial(ring, 0, coeff)

    # ========== 질의 ==========

    def as_dict(self) -> Dict[int, Coeff]:
        return dict(self.terms)

    def coefficient(self, e: int) -> Coeff:
        if self.hi is not None and e > self.hi:
            raise ParameterError(f"coefficient v^{e} beyond precision v^{self.hi}")
        return self.as_dict().get(e, coeff_zero(self.ring))

    def is_zero(self) -> bool:
        return not self.terms

    def lowest(self) -> Optional[int]:
        return self.terms[0][0] if self.terms else None

    def valuation(self) -> Optional[int]:
        """F((v)) 로 축약했을 때의 값매김 (단원 계수의 최소 지수)"""
        for e, c in self.terms:
            if coeff_is_unit(c):
                return e
        return None

    def _val_bound(self) -> float:
        low = self.lowest()
        if low is not None:
            return low
        return float("inf") if self.hi is None else self.hi + 1

    # ========== 산술 ==========

    def _check(self, other: "LaurentSeriesV") -> None:
        if other.ring != self.ring:
            raise ParameterError("Laurent series over different coefficient rings")

    def _lift(self, other) -> "LaurentSeriesV":
        if isinstance(other, LaurentSeriesV):
            self._check(other)
            return other
        return LaurentSeriesV.constant(self.ring, other)

    def __add__(self, other):
        other = self._lift(other)
        hi = _min_opt(self.hi, other.hi)
        acc = self.as_dict()
        for e, c in other.terms:
            acc[e] = acc[e] + c if e in acc else c
        return LaurentSeriesV.build(self.ring, acc, hi)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeriesV(self.ring, tuple((e, -c) for e, c in self.terms), self.hi)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, LaurentSeriesV):
            return self.scale(coeff_const(self.ring, other) if isinstance(other, int) else other)
        self._check(other)
        hi = _min_opt(_add_opt(self._val_bound(), other.hi), _add_opt(other._val_bound(), self.hi))
        acc: Dict[int, Coeff] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = e1 + e2
                if hi is not None and e > hi:
                    continue
                prod = c1 * c2
                acc[e] = acc[e] + prod if e in acc else prod
        return LaurentSeriesV.build(self.ring, acc, None if hi is None else int(hi))

    __rmul__ = __mul__

    def scale(self, c: Coeff) -> "LaurentSeriesV":
        return LaurentSeriesV.build(self.ring, {e: c * x for e, x in self.terms}, self.hi)

    def shift(self, k: int) -> "LaurentSeriesV":
        """v^k 배"""
        return LaurentSeriesV(self.ring, tuple((e + k, c) for e, c in self.terms),
                              None if self.hi is None else self.hi + k)

    def truncate(self, hi: int) -> "LaurentSeriesV":
        return LaurentSeriesV.build(self.ring, self.as_dict(), _min_opt(self.hi, hi))

    def phi(self, p: int, power: int = 1) -> "LaurentSeriesV":
        """v ↦ v^p, 계수에 σ^power"""
        hi = None if self.hi is None else p * (self.hi + 1) - 1
        return LaurentSeriesV(self.ring, tuple((p * e, coeff_frobenius(c, power)) for e, c in self.terms), hi)

    def map_coefficients(self, fn: Callable[[Coeff], Coeff], ring: CoeffRing) -> "LaurentSeriesV":
        return LaurentSeriesV.build(ring, {e: fn(c) for e, c in self.terms}, self.hi)

    def inverse(self, hi: int) -> "LaurentSeriesV":
        """최저 차 계수가 단원일 때 v^hi 까지의 역원"""
        if not self.terms or not coeff_is_unit(self.terms[0][1]):
            raise NotInvertibleError("Laurent series with non-unit leading coefficient")
        k, c = self.terms[0]
        cinv = c.inverse()
        rel_hi = hi + k
        if self.hi is not None:
            rel_hi = min(rel_hi, self.hi - k)
        z = LaurentSeriesV.build(self.ring, {e - k: x * cinv for e, x in self.terms[1:]}, rel_hi)
        total = LaurentSeriesV.constant(self.ring, 1).truncate(rel_hi)
        term = total
        for _ in range(rel_hi + 1):
            term = (term * (-z)).truncate(rel_hi)
            if term.is_zero():
                break
            total = total + term
        return total.scale(cinv).shift(-k)

    def equals(self, other: "LaurentSeriesV", hi: Optional[int] = None) -> bool:
        """공통 정밀도(또는 hi) 이하에서 계수 일치"""
        self._check(other)
        bound = _min_opt(_min_opt(self.hi, other.hi), hi)
        diff = (self - other)
        return all(bound is not None and e > bound for e, _ in diff.terms)

    def __eq__(self, other):
        if not isinstance(other, LaurentSeriesV):
            return NotImplemented
        return self.ring == other.ring and self.equals(other)

    def __hash__(self):
        return hash((self.ring, tuple(e for e, _ in self.terms)))

    def to_json(self) -> dict:
        """지수별 희소 표현"""
        return {
            "hi": self.hi,
            "terms": {str(e): c.to_json() for e, c in self.terms},
        }


def _min_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _add_opt(a, b):
    if a is None or b is None:
        return None
    if a == float("inf") or b == float("inf"):
        return None
    return a + b


# ========== 2×2 행렬 ==========

Matrix = Tuple[Tuple[LaurentSeriesV, LaurentSeriesV], Tuple[LaurentSeriesV, LaurentSeriesV]]


def matrix(rows: Iterable[Iterable[LaurentSeriesV]]) -> Matrix:
    rows = tuple(tuple(r) for r in rows)
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ParameterError("expected a 2x2 matrix")
    return rows  # type: ignore[return-value]


def identity(ring: CoeffRing) -> Matrix:
    one, zero = LaurentSeriesV.constant(ring, 1), LaurentSeriesV.zero(ring)
    return ((one, zero), (zero, one))


def swap(ring: CoeffRing) -> Matrix:
    one, zero = LaurentSeriesV.constant(ring, 1), LaurentSeriesV.zero(ring)
    return ((zero, one), (one, zero))


def diagonal(a: LaurentSeriesV, b: LaurentSeriesV) -> Matrix:
    zero = LaurentSeriesV.zero(a.ring)
    return ((a, zero), (zero, b))


def torus(ring: CoeffRing, lam: Tuple[int, int]) -> Matrix:
    """v^λ = diag(v^{λ¹}, v^{λ²})"""
    return diagonal(LaurentSeriesV.monomial(ring, lam[0]), LaurentSeriesV.monomial(ring, lam[1]))


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    return tuple(
        tuple(A[i][0] * B[0][j] + A[i][1] * B[1][j] for j in range(2)) for i in range(2)
    )  # type: ignore[return-value]


def mat_add(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(A[i][j] + B[i][j] for j in range(2)) for i in range(2))  # type: ignore[return-value]


def mat_sub(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(A[i][j] - B[i][j] for j in range(2)) for i in range(2))  # type: ignore[return-value]


def mat_scale(A: Matrix, c: Coeff) -> Matrix:
    return tuple(tuple(A[i][j].scale(c) for j in range(2)) for i in range(2))  # type: ignore[return-value]


def mat_phi(A: Matrix, p: int, power: int = 1) -> Matrix:
    return tuple(tuple(A[i][j].phi(p, power) for j in range(2)) for i in range(2))  # type: ignore[return-value]


def mat_map(A: Matrix, fn: Callable[[LaurentSeriesV], LaurentSeriesV]) -> Matrix:
    return tuple(tuple(fn(A[i][j]) for j in range(2)) for i in range(2))  # type: ignore[return-value]


def mat_transpose(A: Matrix) -> Matrix:
    return ((A[0][0], A[1][0]), (A[0][1], A[1][1]))


def mat_det(A: Matrix) -> LaurentSeriesV:
    return A[0][0] * A[1][1] - A[0][1] * A[1][0]


def mat_inverse(A: Matrix, hi: int) -> Matrix:
    """adj(A)/det(A), det 의 최저 차 계수가 단원이어야 함"""
    dinv = mat_det(A).inverse(hi)
    adj = ((A[1][1], -A[0][1]), (-A[1][0], A[0][0]))
    return mat_map(adj, lambda x: (x * dinv).truncate(hi))


def mat_truncate(A: Matrix, hi: int) -> Matrix:
    return mat_map(A, lambda x: x.truncate(hi))


def mat_equals(A: Matrix, B: Matrix, hi: Optional[int] = None) -> bool:
    return all(A[i][j].equals(B[i][j], hi) for i in range(2) for j in range(2))


def mat_to_json(A: Matrix) -> List[List[dict]]:
    return [[A[i][j].to_json() for j in range(2)] for i in range(2)]
