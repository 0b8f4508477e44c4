# ============================================================
# 절단 다변수 멱급수 W(F_q)/p^N [[x]] / 𝔪^{M+1}
# 파일: mcp_server_serre/power_series.py
#
# 조밀 표현: 단항식 목록 × Witt 좌표 (n_mon × f) 정수 배열
# 관계 X_r·Y_r = p 를 가질 수 있음 (그때 p 의 𝔪-가중치 w = 2)
# ============================================================

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .chain_linalg import working_dtype
from .errors import NotInvertibleError, ParameterError
from .witt import TruncatedWitt, WittRing, p_valuation, witt_ring

logger = logging.getLogger(__name__)

Monomial = Tuple[int, ...]


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class SeriesRing:
    """멱급수환 서술자: 변수, 계수환, 절단 M, 관계 (X, Y) 쌍"""
    variables: Tuple[str, ...]
    witt: WittRing
    M: int
    relations: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise ParameterError(f"duplicate variables in {self.variables}")
        for x, y in self.relations:
            if x not in self.variables or y not in self.variables:
                raise ParameterError(f"relation {x}*{y}=p uses unknown variables")

    # ========== 구조 ==========

    @property
    def p(self) -> int:
        return self.witt.p

    @property
    def f(self) -> int:
        return self.witt.f

    @property
    def N(self) -> int:
        return self.witt.N

    @property
    def p_weight(self) -> int:
        """𝔪-진 차수에서 p 의 가중치"""
        return 2 if self.relations else 1

    @cached_property
    def _relation_pairs(self) -> List[Tuple[int, int]]:
        pos = {v: i for i, v in enumerate(self.variables)}
        return [(pos[x], pos[y]) for x, y in self.relations]

    def _admissible(self, mono: Monomial) -> bool:
        return all(not (mono[i] and mono[j]) for i, j in self._relation_pairs)

    @cached_property
    def monomials(self) -> List[Monomial]:
        """차수 오름차순, 같은 차수는 사전식 내림차순"""
        n = len(self.variables)
        out: List[Monomial] = []
        for d in range(self.M + 1):
            level = [m for m in _compositions(d, n) if self._admissible(m)]
            level.sort(reverse=True)
            out.extend(level)
        return out

    @cached_property
    def index(self) -> Dict[Monomial, int]:
        return {m: i for i, m in enumerate(self.monomials)}

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([sum(m) for m in self.monomials], dtype=np.int64)

    @cached_property
    def precisions(self) -> np.ndarray:
        """단항식별 p-진 정밀도 min(N, ⌈(M+1-|m|)/w⌉)"""
        w = self.p_weight
        return np.array([min(self.N, _ceil_div(self.M + 1 - d, w)) for d in self.degrees], dtype=np.int64)

    @cached_property
    def column_moduli(self) -> np.ndarray:
        dtype = working_dtype(self.witt.modulus)
        return np.array([self.p ** int(n) for n in self.precisions], dtype=dtype)

    @cached_property
    def dtype(self):
        m = self.witt.modulus
        return np.int64 if self.f * self.f * m * m < (1 << 62) else object

    @cached_property
    def _structure(self) -> np.ndarray:
        """T[i, j, k] = [t^k] t^{i+j}"""
        f = self.f
        red = self.witt.reduction
        return np.array([[[int(red[i + j][k]) for k in range(f)] for j in range(f)] for i in range(f)],
                        dtype=self.dtype)

    @cached_property
    def _pair_table(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(i, j) → (k, p 지수) 곱셈표"""
        nv = len(self.variables)
        mono = np.array(self.monomials, dtype=np.int64).reshape(-1, nv)
        deg = self.degrees
        radix = (self.M + 1) ** np.arange(nv, dtype=np.int64)
        keys = mono @ radix
        order = np.argsort(keys)
        sorted_keys = keys[order]
        # 차수 오름차순이므로 degree ≤ d 인 단항식은 접두부
        prefix_end = np.searchsorted(deg, np.arange(self.M + 1), side="right")
        left, right, out, ppow = [], [], [], []
        for i in range(mono.shape[0]):
            room = self.M - int(deg[i])
            if room < 0:
                continue
            js = np.arange(prefix_end[room])
            prod = mono[js] + mono[i]
            k = np.zeros(js.size, dtype=np.int64)
            for xi, yi in self._relation_pairs:
                c = np.minimum(prod[:, xi], prod[:, yi])
                prod[:, xi] -= c
                prod[:, yi] -= c
                k += c
            keep = k < self.N
            js, prod, k = js[keep], prod[keep], k[keep]
            pos = order[np.searchsorted(sorted_keys, prod @ radix)]
            left.append(np.full(js.size, i, dtype=np.int64))
            right.append(js)
            out.append(pos)
            ppow.append(k)
        if not left:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, empty, empty
        logger.debug("pair table for %s: %d entries", self.variables, sum(x.size for x in left))
        return (np.concatenate(left), np.concatenate(right), np.concatenate(out), np.concatenate(ppow))

    @cached_property
    def _pair_offsets(self) -> np.ndarray:
        left = self._pair_table[0]
        return np.searchsorted(left, np.arange(len(self.monomials) + 1))

    def shift_map(self, i: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """x^{m_i} 곱: (원본 j, 대상 k, p 지수)"""
        lo, hi = self._pair_offsets[i], self._pair_offsets[i + 1]
        _, right, out, ppow = self._pair_table
        return right[lo:hi], out[lo:hi], ppow[lo:hi]

    # ========== 원소 생성 ==========

    def zeros(self) -> np.ndarray:
        return np.zeros((len(self.monomials), self.f), dtype=self.dtype)

    def from_array(self, data: np.ndarray) -> "PowerSeriesPoly":
        data = np.array(data, dtype=self.dtype) % self.column_moduli[:, None]
        data.setflags(write=False)
        return PowerSeriesPoly(self, data)

    def zero(self) -> "PowerSeriesPoly":
        return self.from_array(self.zeros())

    def one(self) -> "PowerSeriesPoly":
        return self.constant(1)

    def constant(self, c) -> "PowerSeriesPoly":
        if not isinstance(c, TruncatedWitt):
            c = self.witt.from_int(int(c))
        data = self.zeros()
        data[0] = c.coords
        return self.from_array(data)

    def monomial(self, exponents: Mapping[str, int], coeff=1) -> "PowerSeriesPoly":
        """coeff·Π x^e (관계 적용)"""
        result = self.constant(coeff)
        for name, e in exponents.items():
            result = result * self.var(name) ** e
        return result

    def var(self, name: str) -> "PowerSeriesPoly":
        if name not in self.variables:
            raise ParameterError(f"unknown variable {name}")
        data = self.zeros()
        if self.M >= 1:
            mono = tuple(1 if v == name else 0 for v in self.variables)
            data[self.index[mono], 0] = 1
        return self.from_array(data)

    def gens(self) -> List["PowerSeriesPoly"]:
        return [self.var(v) for v in self.variables]

    def with_precision(self, N: Optional[int] = None, M: Optional[int] = None) -> "SeriesRing":
        return series_ring(self.variables, self.witt.at_precision(N or self.N), M if M is not None else self.M,
                           self.relations)

    def without_relations(self) -> "SeriesRing":
        return series_ring(self.variables, self.witt, self.M, ())

    def json_schema(self) -> dict:
        return {
            "variables": list(self.variables),
            "p": self.p, "f": self.f, "N": self.N, "M": self.M,
            "relations": [f"{x}*{y}=p" for x, y in self.relations],
        }


def _compositions(d: int, n: int) -> Iterable[Monomial]:
    if n == 0:
        if d == 0:
            yield ()
        return
    for bars in itertools.combinations(range(d + n - 1), n - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(d + n - 1 - prev - 1)
        yield tuple(parts)


@lru_cache(maxsize=None)
def series_ring(variables: Tuple[str, ...], witt: WittRing, M: int,
                relations: Tuple[Tuple[str, str], ...] = ()) -> SeriesRing:
    return SeriesRing(tuple(variables), witt, M, tuple(relations))


def dual_numbers(p: int, f: int) -> SeriesRing:
    """F_q[ε]/(ε²)"""
    return series_ring(("eps",), witt_ring(p, f, 1), 1)


@dataclass(frozen=True, eq=False)
class PowerSeriesPoly:
    """절단 멱급수 원소 (불변)"""
    ring: SeriesRing
    data: np.ndarray = field(repr=False)

    # ========== 기본 연산 ==========

    def _coerce(self, other) -> "PowerSeriesPoly":
        if isinstance(other, PowerSeriesPoly):
            if other.ring != self.ring:
                raise ParameterError("power series from different rings")
            return other
        if isinstance(other, (int, np.integer, TruncatedWitt)):
            return self.ring.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.ring.from_array(self.data + other.data)

    __radd__ = __add__

    def __neg__(self):
        return self.ring.from_array(-self.data)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.ring.from_array(self.data - other.data)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        ring = self.ring
        left, right, out, ppow = ring._pair_table
        if left.size == 0:
            return ring.zero()
        a, b = self.data, other.data
        live = np.any(a[left] != 0, axis=1) & np.any(b[right] != 0, axis=1)
        left, right, out, ppow = left[live], right[live], out[live], ppow[live]
        m = ring.witt.modulus
        T = ring._structure
        f = ring.f
        acc = np.zeros((left.size, f), dtype=ring.dtype)
        for i in range(f):
            for j in range(f):
                if not T[i, j].any():
                    continue
                c = (a[left, i] * b[right, j]) % m
                acc = acc + c[:, None] * T[i, j][None, :]
        scale = np.array([ring.p ** int(k) for k in ppow], dtype=ring.dtype)
        acc = (acc % m) * scale[:, None] % m
        result = ring.zeros()
        np.add.at(result, out, acc)
        return ring.from_array(result % m)

    __rmul__ = __mul__

    def times_monomial(self, i: int) -> "PowerSeriesPoly":
        """x^{m_i} 배 (i 는 ring.monomials 색인)"""
        ring = self.ring
        js, outs, ppow = ring.shift_map(i)
        scale = np.array([ring.p ** int(k) for k in ppow], dtype=ring.dtype)
        result = ring.zeros()
        np.add.at(result, outs, self.data[js] * scale[:, None])
        return ring.from_array(result % ring.witt.modulus)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result, base = self.ring.one(), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, TruncatedWitt)):
            other = self.ring.constant(other)
        if not isinstance(other, PowerSeriesPoly) or other.ring != self.ring:
            return NotImplemented
        return bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.ring, tuple(map(int, self.data.ravel()))))

    # ========== 질의 ==========

    def is_zero(self) -> bool:
        return not np.any(self.data)

    def coefficient(self, exponents: Mapping[str, int]) -> TruncatedWitt:
        mono = tuple(exponents.get(v, 0) for v in self.ring.variables)
        row = self.data[self.ring.index[mono]]
        return self.ring.witt.element([int(x) for x in row])

    def constant_term(self) -> TruncatedWitt:
        return self.ring.witt.element([int(x) for x in self.data[0]])

    def is_unit(self) -> bool:
        return self.constant_term().is_unit()

    def order(self) -> int:
        """𝔪-진 차수 (0 이면 M+1)"""
        ring = self.ring
        best = ring.M + 1
        for i, row in enumerate(self.data):
            if np.any(row):
                v = min(p_valuation(int(x), ring.p, ring.N) for x in row)
                best = min(best, int(ring.degrees[i]) + ring.p_weight * v)
        return best

    def inverse(self) -> "PowerSeriesPoly":
        """단원 역원: c^{-1} Σ (-n)^k"""
        c = self.constant_term()
        if not c.is_unit():
            raise NotInvertibleError("power series with non-unit constant term")
        cinv = c.inverse()
        n = self * cinv - 1
        term = self.ring.one()
        total = self.ring.one()
        for _ in range(self.ring.M * max(1, self.ring.N)):
            term = term * (-n)
            if term.is_zero():
                break
            total = total + term
        return total * cinv

    def frobenius(self, power: int = 1) -> "PowerSeriesPoly":
        """계수에 σ^power (변수 고정)"""
        if power % self.ring.f == 0:
            return self
        witt = self.ring.witt
        rows = [witt.frobenius_coords([int(x) for x in row], power) for row in self.data]
        return self.ring.from_array(np.array(rows, dtype=self.ring.dtype))

    def scale_variables(self, factors: Mapping[str, TruncatedWitt]) -> "PowerSeriesPoly":
        """x ↦ λ_x·x (단항식별 계수 곱)"""
        ring = self.ring
        data = ring.zeros()
        for i, mono in enumerate(ring.monomials):
            coeff = ring.witt.one
            for name, e in zip(ring.variables, mono):
                if e and name in factors:
                    coeff = coeff * factors[name] ** e
            data[i] = ring.witt.mul_coords([int(x) for x in self.data[i]], coeff.coords)
        return ring.from_array(data)

    def substitute(self, images: Mapping[str, "PowerSeriesPoly"], target: SeriesRing) -> "PowerSeriesPoly":
        """
        환 준동형 x ↦ images[x] (없는 변수는 이름이 같은 target 변수, 없으면 0)

        Args:
            images: 변수 이름 → target 원소
            target: 상의 환 (같은 잉여체)
        """
        ring = self.ring
        tw = target.witt
        base: Dict[str, PowerSeriesPoly] = {}
        for name in ring.variables:
            if name in images:
                base[name] = images[name]
            elif name in target.variables:
                base[name] = target.var(name)
            else:
                base[name] = target.zero()
        powers: Dict[Tuple[str, int], PowerSeriesPoly] = {}

        def power(name: str, e: int) -> PowerSeriesPoly:
            key = (name, e)
            if key not in powers:
                powers[key] = target.one() if e == 0 else power(name, e - 1) * base[name]
            return powers[key]

        total = target.zero()
        for i, mono in enumerate(ring.monomials):
            row = self.data[i]
            if not np.any(row):
                continue
            term = target.constant(tw.element([int(x) for x in row]))
            for name, e in zip(ring.variables, mono):
                if e:
                    term = term * power(name, e)
                    if term.is_zero():
                        break
            total = total + term
        return total

    def change_ring(self, target: SeriesRing) -> "PowerSeriesPoly":
        """같은 이름 변수로의 자연 사상 (절단)"""
        return self.substitute({}, target)

    def reduce_mod_p(self) -> "PowerSeriesPoly":
        return self.change_ring(self.ring.with_precision(N=1))

    def graded_component(self, j: int) -> Dict[Tuple[Monomial, int], Tuple[int, ...]]:
        """
        𝔪-진 차수 j 성분: {(단항식, p 지수 k): F_q 좌표} with |m| + w·k = j
        """
        ring = self.ring
        w = ring.p_weight
        out = {}
        for i, mono in enumerate(ring.monomials):
            d = int(ring.degrees[i])
            if d > j or (j - d) % w:
                continue
            k = (j - d) // w
            if k >= ring.N:
                continue
            digits = tuple((int(x) // ring.p ** k) % ring.p for x in self.data[i])
            if any(digits):
                out[(mono, k)] = digits
        return out

    def terms(self) -> Dict[Monomial, Tuple[int, ...]]:
        return {mono: tuple(int(x) for x in self.data[i])
                for i, mono in enumerate(self.ring.monomials) if np.any(self.data[i])}

    def to_json(self) -> Dict[str, List[str]]:
        """정렬된 단항식 → 정수 문자열 계수"""
        names = self.ring.variables
        out = {}
        for mono, coords in self.terms().items():
            key = "*".join(f"{n}^{e}" if e > 1 else n for n, e in zip(names, mono) if e) or "1"
            out[key] = [str(c) for c in coords]
        return dict(sorted(out.items()))

    def __repr__(self):
        return f"PowerSeriesPoly({self.to_json()})"
