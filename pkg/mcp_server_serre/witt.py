# ============================================================
# 절단 Witt 벡터 W(F_q)/p^N
# 파일: mcp_server_serre/witt.py
#
# 표현: (ℤ/p^N)[t]/(P̃(t)), P̃ 는 F_p 위 사전식 최소 모닉 기약 다항식의
#       정수 계수 그대로의 올림. 원소는 길이 f 의 정수 좌표.
# 사용 라이브러리: sympy (galoistools: 기약성 판정, 확장 유클리드),
#       numpy (좌표 곱: object 배열 np.convolve 와 환원표 곱)
# ============================================================

import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Sequence, Tuple

import numpy as np
from sympy import ZZ
from sympy.polys.galoistools import gf_gcdex, gf_irreducible_p

from .errors import NotInvertibleError, ParameterError

logger = logging.getLogger(__name__)


def first_irreducible(p: int, f: int) -> Tuple[int, ...]:
    """F_p 위 차수 f 모닉 기약 다항식 중 사전식 최소 (높은 차수 우선 계수열)"""
    if f == 1:
        return (1, 0)
    for tail in itertools.product(range(p), repeat=f):
        coeffs = [1, *tail]
        if tail[-1] == 0:
            continue
        if gf_irreducible_p(coeffs, p, ZZ):
            return tuple(coeffs)
    raise ParameterError(f"no irreducible polynomial of degree {f} over F_{p}")


def p_valuation(n: int, p: int, cap: int) -> int:
    """정수 n 의 p-진 값매김 (0 이면 cap)"""
    if n == 0:
        return cap
    v = 0
    while n % p == 0 and v < cap:
        n //= p
        v += 1
    return v


class WittRing:
    """
    W(F_{p^f})/p^N

    기능:
    1. 좌표 곱셈 (축약표 R[e, k]: t^e mod P̃ 의 t^k 계수)
    2. Witt Frobenius σ (t ↦ θ, θ ≡ t^p mod p 인 P̃ 의 근)
    3. 역원 (mod p 역원 후 Newton 올림)
    4. Teichmüller 올림
    """

    def __init__(self, p: int, f: int, N: int):
        if p < 2 or f < 1 or N < 1:
            raise ParameterError(f"invalid Witt ring parameters p={p}, f={f}, N={N}")
        self.p = p
        self.f = f
        self.N = N
        self.q = p ** f
        self.modulus = p ** N
        self.poly = first_irreducible(p, f)
        self.reduction = self._reduction_table()
        self.frobenius_matrix = self._frobenius_matrix()

    # ========== 구조 ==========

    def __eq__(self, other):
        return isinstance(other, WittRing) and (self.p, self.f, self.N) == (other.p, other.f, other.N)

    def __hash__(self):
        return hash(("WittRing", self.p, self.f, self.N))

    def __repr__(self):
        return f"WittRing(p={self.p}, f={self.f}, N={self.N})"

    def __reduce__(self):
        return (witt_ring, (self.p, self.f, self.N))

    def _reduction_table(self) -> np.ndarray:
        """R[e, k] = [t^k] (t^e mod P̃), e = 0..2f-2"""
        f, m = self.f, self.modulus
        low = [(-c) % m for c in reversed(self.poly[1:])]  # t^f = Σ low_k t^k
        rows = []
        cur = [0] * f
        cur[0] = 1
        for _ in range(2 * f - 1):
            rows.append(list(cur))
            top = cur[-1]
            cur = [0] + cur[:-1]
            cur = [(cur[k] + top * low[k]) % m for k in range(f)]
        return np.array(rows, dtype=object)

    def _frobenius_matrix(self) -> List[List[int]]:
        """F[i][k] = [t^k] σ(t)^i"""
        f = self.f
        if f == 1:
            return [[1]]
        t = self.element([0, 1] + [0] * (f - 2))
        theta = t ** self.p
        dpoly = self._derivative_poly()
        # Newton: θ ← θ - P̃(θ)/P̃'(θ)
        for _ in range(self.N.bit_length() + 1):
            num = self._eval_poly(self.poly, theta)
            den = self._eval_poly(dpoly, theta)
            theta = theta - num * den.inverse()
        rows = []
        power = self.one
        for _ in range(f):
            rows.append(list(power.coords))
            power = power * theta
        return rows

    def _derivative_poly(self) -> Tuple[int, ...]:
        deg = len(self.poly) - 1
        return tuple(c * (deg - i) for i, c in enumerate(self.poly[:-1]))

    def _eval_poly(self, coeffs: Sequence[int], x: "TruncatedWitt") -> "TruncatedWitt":
        acc = self.zero
        for c in coeffs:
            acc = acc * x + self.from_int(c)
        return acc

    # ========== 원소 생성 ==========

    def element(self, coords: Sequence[int]) -> "TruncatedWitt":
        if len(coords) != self.f:
            raise ParameterError(f"expected {self.f} coordinates, got {len(coords)}")
        return TruncatedWitt(self, tuple(int(c) % self.modulus for c in coords))

    def from_int(self, n: int) -> "TruncatedWitt":
        return TruncatedWitt(self, (int(n) % self.modulus,) + (0,) * (self.f - 1))

    @property
    def zero(self) -> "TruncatedWitt":
        return TruncatedWitt(self, (0,) * self.f)

    @property
    def one(self) -> "TruncatedWitt":
        return self.from_int(1)

    @property
    def residue_field(self) -> "WittRing":
        return witt_ring(self.p, self.f, 1)

    def at_precision(self, N: int) -> "WittRing":
        return witt_ring(self.p, self.f, N)

    def residues(self) -> Iterator["TruncatedWitt"]:
        """F_q 의 모든 원소 (좌표 사전식)"""
        field = self.residue_field
        for coords in itertools.product(range(self.p), repeat=self.f):
            yield field.element(coords[::-1])

    # ========== 좌표 연산 ==========

    def mul_coords(self, a: Sequence[int], b: Sequence[int]) -> Tuple[int, ...]:
        """다항식 곱 (합성곱) 후 t^e 환원표 R 로 내림, object 배열이라 정수 넘침 없음"""
        lhs = np.array([int(x) for x in a], dtype=object)
        rhs = np.array([int(x) for x in b], dtype=object)
        conv = np.convolve(lhs, rhs)
        return tuple(int(x) % self.modulus for x in conv.dot(self.reduction))

    def frobenius_coords(self, a: Sequence[int], power: int = 1) -> Tuple[int, ...]:
        """σ^power 적용"""
        out = tuple(a)
        for _ in range(power % self.f if self.f > 1 else 0):
            acc = [0] * self.f
            for i, ai in enumerate(out):
                if ai:
                    row = self.frobenius_matrix[i]
                    for k in range(self.f):
                        acc[k] += ai * row[k]
            out = tuple(x % self.modulus for x in acc)
        return out

    def teichmuller(self, residue: "TruncatedWitt") -> "TruncatedWitt":
        """[r]: 임의 올림에서 t ↦ t^q 고정점 반복"""
        t = self.element(residue.coords)
        for _ in range(self.N + 1):
            nxt = t ** self.q
            if nxt == t:
                return t
            t = nxt
        if t ** self.q != t:
            raise ArithmeticError("Teichmüller iteration did not stabilise")
        return t


@lru_cache(maxsize=None)
def witt_ring(p: int, f: int, N: int) -> WittRing:
    """(p, f, N) 당 하나의 WittRing"""
    logger.debug("building Witt ring p=%d f=%d N=%d", p, f, N)
    return WittRing(p, f, N)


def residue_field(p: int, f: int) -> WittRing:
    return witt_ring(p, f, 1)


@dataclass(frozen=True)
class TruncatedWitt:
    """W(F_q)/p^N 의 원소"""
    ring: WittRing
    coords: Tuple[int, ...]

    @property
    def p(self) -> int:
        return self.ring.p

    @property
    def f(self) -> int:
        return self.ring.f

    @property
    def N(self) -> int:
        return self.ring.N

    def _coerce(self, other) -> "TruncatedWitt":
        if isinstance(other, TruncatedWitt):
            if other.ring != self.ring:
                raise ParameterError(f"ring mismatch: {self.ring} vs {other.ring}")
            return other
        if isinstance(other, (int, np.integer)):
            return self.ring.from_int(int(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        m = self.ring.modulus
        return TruncatedWitt(self.ring, tuple((a + b) % m for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        m = self.ring.modulus
        return TruncatedWitt(self.ring, tuple((-a) % m for a in self.coords))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TruncatedWitt(self.ring, self.ring.mul_coords(self.coords, other.coords))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result, base = self.ring.one, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __bool__(self):
        return any(self.coords)

    def is_zero(self) -> bool:
        return not any(self.coords)

    def valuation(self) -> int:
        """p-진 값매김 (0 이면 N)"""
        return min(p_valuation(c, self.p, self.N) for c in self.coords)

    def is_unit(self) -> bool:
        return any(c % self.p for c in self.coords)

    def reduce(self) -> "TruncatedWitt":
        """mod p 축약: F_q 로의 환 준동형"""
        return self.ring.residue_field.element(self.coords)

    def truncate(self, N: int) -> "TruncatedWitt":
        return self.ring.at_precision(N).element(self.coords)

    def lift(self, N: int) -> "TruncatedWitt":
        """좌표 그대로의 올림 (같은 대표원)"""
        return self.ring.at_precision(N).element(self.coords)

    def frobenius(self, power: int = 1) -> "TruncatedWitt":
        return TruncatedWitt(self.ring, self.ring.frobenius_coords(self.coords, power))

    def inverse(self) -> "TruncatedWitt":
        if not self.is_unit():
            raise NotInvertibleError(f"{self} is not a unit")
        p = self.p
        if self.f == 1:
            return self.ring.from_int(pow(self.coords[0], -1, self.ring.modulus))
        poly = list(self.ring.poly)
        a_bar = [c % p for c in reversed(self.coords)]
        while a_bar and a_bar[0] == 0:
            a_bar.pop(0)
        s, _, h = gf_gcdex(a_bar, poly, p, ZZ)
        if h != [1]:
            raise NotInvertibleError(f"{self} has no inverse modulo p")
        s = [int(c) for c in reversed(s)]
        x = self.ring.element(s + [0] * (self.f - len(s)))
        # Newton: x ← x(2 - a x)
        for _ in range(self.N.bit_length() + 1):
            x = x * (2 - self * x)
        return x

    def __truediv__(self, other):
        other = self._coerce(other)
        return self * other.inverse()

    def to_json(self):
        return [str(c) for c in self.coords]

    def __repr__(self):
        if self.f == 1:
            return f"{self.coords[0]} mod {self.p}^{self.N}"
        return f"W({self.coords}) mod {self.p}^{self.N}"


def teichmuller(r: TruncatedWitt, N: int) -> TruncatedWitt:
    """잉여체 원소 r 의 Teichmüller 올림 [r] ∈ W(F_q)/p^N"""
    if N < 1:
        raise ParameterError("precision N must be at least 1")
    return witt_ring(r.p, r.f, N).teichmuller(r)
