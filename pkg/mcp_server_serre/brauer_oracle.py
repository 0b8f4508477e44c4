# ============================================================
# GL₂(F_q) 지표 판정 기준 (Brauer oracle)
# 파일: mcp_server_serre/brauer_oracle.py
#
# 지표는 고유값 다중집합으로 저장:
#   분해 토러스 T  : diag(x, y) 위 (e1, e2) mod (q-1)
#   비분해 토러스 T′: F_{q²}^× 위 지수 n mod (q²-1)
#   중심·멱단원 류 : x·u 위 지수 mod (q-1)
# p-정칙 원소는 모두 T 또는 T′ 에 켤레이므로 T, T′ 다중집합이
# Brauer 지표를 결정한다.
# ============================================================

import hashlib
import json
import logging
import os
import random
import sys
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sympy import Matrix, Poly, cyclotomic_poly, symbols

from .errors import CacheError, OracleError, ParameterError
from .weights import (
    CharacterMu,
    SerreWeightSym,
    WeylElt,
    dl_parameters,
    require_generic,
    type_weight,
)

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'config'))
from precision_constants import CACHE, RANGES, default_mu  # noqa: E402

logger = logging.getLogger(__name__)

_x = symbols("x")


# ========== 원분 정수 ==========

@lru_cache(maxsize=None)
def _cyclotomic(order: int) -> Poly:
    return Poly(cyclotomic_poly(order, _x), _x)


@dataclass(frozen=True)
class CyclotomicInteger:
    """ℤ[ζ_n] = ℤ[x]/(Φ_n) 의 원소, 계수는 낮은 차수부터"""
    order: int
    coeffs: Tuple[int, ...]

    @classmethod
    def from_exponents(cls, order: int, terms: Dict[int, int]) -> "CyclotomicInteger":
        dense = [0] * order
        for e, c in terms.items():
            dense[e % order] += c
        poly = Poly(list(reversed(dense)), _x).rem(_cyclotomic(order))
        low_first = [int(c) for c in reversed(poly.all_coeffs())]
        while low_first and low_first[-1] == 0:
            low_first.pop()
        return cls(order, tuple(low_first))

    def is_integer(self) -> bool:
        return len(self.coeffs) <= 1

    def to_int(self) -> int:
        if not self.is_integer():
            raise ArithmeticError("cyclotomic value is not a rational integer")
        return self.coeffs[0] if self.coeffs else 0

    def to_json(self) -> List[str]:
        return [str(c) for c in self.coeffs]


# ========== 켤레류 ==========

@dataclass(frozen=True)
class ClassData:
    """
    GL₂(F_q) 켤레류 (생성원 g ∈ F_{q²}^×, x = g^{(q+1)a})

    central (a), unipotent (a), split (a, b) a<b, nonsplit (k) k ≢ 0 mod (q+1)
    """
    p: int
    f: int

    @property
    def q(self) -> int:
        return self.p ** self.f

    @property
    def group_order(self) -> int:
        q = self.q
        return (q * q - 1) * (q * q - q)

    def classes(self) -> List[Tuple[Tuple, int]]:
        q = self.q
        out: List[Tuple[Tuple, int]] = []
        for a in range(q - 1):
            out.append((("central", a), 1))
        for a in range(q - 1):
            out.append((("unipotent", a), q * q - 1))
        for a in range(q - 1):
            for b in range(a + 1, q - 1):
                out.append((("split", a, b), q * (q + 1)))
        order = q * q - 1
        for k in range(1, order):
            if k % (q + 1) == 0:
                continue
            if k <= (q * k) % order:
                out.append((("nonsplit", k), q * (q - 1)))
        return out

    def p_regular(self) -> List[Tuple[Tuple, int]]:
        return [(label, size) for label, size in self.classes() if label[0] != "unipotent"]


# ========== 유사 지표 ==========

@dataclass(frozen=True)
class ClassFunction:
    """
    T, T′, 멱단원 위 다중집합으로 주어진 지표

    unipotent 가 None 이면 p-정칙 류에서만 정의 (Brauer 지표).
    """
    q: int
    degree: int
    torus: Tuple[Tuple[Tuple[int, int], int], ...]
    nonsplit: Tuple[Tuple[int, int], ...]
    unipotent: Optional[Tuple[Tuple[int, int], ...]] = None
    label: str = ""

    @classmethod
    def build(cls, q: int, torus: Counter, nonsplit: Counter, unipotent: Optional[Counter] = None,
              label: str = "") -> "ClassFunction":
        def clean(counter):
            return tuple(sorted((k, v) for k, v in counter.items() if v))

        degree = sum(torus.values())
        return cls(q, degree, clean(torus), clean(nonsplit),
                   None if unipotent is None else clean(unipotent), label)

    def torus_counter(self) -> Counter:
        return Counter(dict(self.torus))

    def nonsplit_counter(self) -> Counter:
        return Counter(dict(self.nonsplit))

    def value_terms(self, cls_label: Tuple) -> Dict[int, int]:
        """류에서의 값 Σ c·ζ^e, ζ = 원시 (q²-1) 제곱근"""
        q = self.q
        order = q * q - 1
        out: Dict[int, int] = {}

        def bump(e, c):
            e %= order
            out[e] = out.get(e, 0) + c

        kind = cls_label[0]
        if kind == "central":
            a = cls_label[1]
            for (e1, e2), m in self.torus:
                bump((q + 1) * a * (e1 + e2), m)
        elif kind == "split":
            a, b = cls_label[1], cls_label[2]
            for (e1, e2), m in self.torus:
                bump((q + 1) * (a * e1 + b * e2), m)
        elif kind == "nonsplit":
            k = cls_label[1]
            for n, m in self.nonsplit:
                bump(k * n, m)
        elif kind == "unipotent":
            if self.unipotent is None:
                raise ParameterError("Brauer characters are not defined on p-singular classes")
            a = cls_label[1]
            for e, c in self.unipotent:
                bump((q + 1) * a * e, c)
        else:
            raise ParameterError(f"unknown class label {cls_label!r}")
        return {e: c for e, c in out.items() if c}

    def value(self, cls_label: Tuple) -> CyclotomicInteger:
        return CyclotomicInteger.from_exponents(self.q * self.q - 1, self.value_terms(cls_label))

    def central_character(self) -> int:
        """ζ ↦ x^c 인 c mod (q-1) (중심이 스칼라로 작용할 때)"""
        exps = {(e1 + e2) % (self.q - 1) for (e1, e2), _ in self.torus}
        if len(exps) != 1:
            raise OracleError("center does not act by a scalar")
        return exps.pop()


def inner_product(chi: ClassFunction, psi: ClassFunction, classes: ClassData) -> CyclotomicInteger:
    """|G|·⟨χ, ψ⟩ = Σ |C| χ(C) conj ψ(C)"""
    order = chi.q * chi.q - 1
    acc: Dict[int, int] = {}
    for label, size in classes.classes():
        a = chi.value_terms(label)
        b = psi.value_terms(label)
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                e = (e1 - e2) % order
                acc[e] = acc.get(e, 0) + size * c1 * c2
    return CyclotomicInteger.from_exponents(order, acc)


# ========== 보통 지표 ==========

def principal_series_character(A: int, B: int, q: int) -> ClassFunction:
    """I(x^A, x^B), 차수 q+1"""
    torus = Counter({(A % (q - 1), B % (q - 1)): 1})
    torus[(B % (q - 1), A % (q - 1))] += 1
    for j in range(q - 1):
        torus[((A + B + j) % (q - 1), (-j) % (q - 1))] += 1
    order = q * q - 1
    nonsplit = Counter((A + B + (q - 1) * j) % order for j in range(q + 1))
    unipotent = Counter({(A + B) % (q - 1): 1})
    return ClassFunction.build(q, torus, nonsplit, unipotent, f"PS({A % (q - 1)},{B % (q - 1)})")


def cuspidal_character(n: int, q: int) -> ClassFunction:
    """θ(z) = z^n 에 대응하는 첨점 표현, 차수 q-1"""
    order = q * q - 1
    if (n * (q - 1)) % order == 0:
        raise ParameterError(f"cuspidal parameter n={n} is not regular (n ≡ qn)")
    torus = Counter(((n + j) % (q - 1), (-j) % (q - 1)) for j in range(q - 1))
    nonsplit = Counter((n + (q - 1) * j) % order for j in range(q + 1))
    nonsplit[n % order] -= 1
    nonsplit[(q * n) % order] -= 1
    unipotent = Counter({n % (q - 1): -1})
    return ClassFunction.build(q, torus, nonsplit, unipotent, f"Cusp({n % order})")


def determinant_character(a: int, q: int) -> ClassFunction:
    torus = Counter({(a % (q - 1), a % (q - 1)): 1})
    nonsplit = Counter({(a * (q + 1)) % (q * q - 1): 1})
    return ClassFunction.build(q, torus, nonsplit, Counter({(2 * a) % (q - 1): 1}), f"det^{a % (q - 1)}")


def steinberg_character(a: int, q: int) -> ClassFunction:
    """St ⊗ det^a, 차수 q"""
    order = q * q - 1
    torus = Counter({(a % (q - 1), a % (q - 1)): 1})
    for j in range(q - 1):
        torus[((a + j) % (q - 1), (a - j) % (q - 1))] += 1
    nonsplit = Counter((a * (q + 1) + (q - 1) * j) % order for j in range(1, q + 1))
    return ClassFunction.build(q, torus, nonsplit, Counter(), f"St.det^{a % (q - 1)}")


def character_table(p: int, f: int) -> List[ClassFunction]:
    """q²-1 개의 기약 보통 지표"""
    q = p ** f
    order = q * q - 1
    table = [determinant_character(a, q) for a in range(q - 1)]
    table += [steinberg_character(a, q) for a in range(q - 1)]
    for A in range(q - 1):
        for B in range(A + 1, q - 1):
            table.append(principal_series_character(A, B, q))
    for n in range(1, order):
        if n % (q + 1) and n <= (q * n) % order:
            table.append(cuspidal_character(n, q))
    return table


def ordinary_character(s: WeylElt, mu: CharacterMu, p: int) -> ClassFunction:
    """
    R_s(μ-sη) 의 지표

    Raises:
        ParameterError: μ 가 일반적이지 않음
    """
    require_generic(mu, p)
    q = p ** s.f
    kind, params = dl_parameters(s, type_weight(mu, s), p)
    if kind == "principal":
        A, B = params
        if (A - B) % (q - 1) == 0:
            raise ParameterError("principal series parameters coincide (reducible induction)")
        return principal_series_character(A, B, q)
    return cuspidal_character(params[0], q)


# ========== Brauer 지표 ==========

def brauer_character(sigma: SerreWeightSym) -> ClassFunction:
    """⊗_i (Sym^{r_i} ⊗ det^{d_i})^{Frob^i} 의 고유값 합"""
    torus = Counter(sigma.torus_weights())
    nonsplit = Counter(sigma.nonsplit_weights())
    return ClassFunction.build(sigma.q, torus, nonsplit, None, sigma.label())


def _fits(sigma: SerreWeightSym, torus: Counter, nonsplit: Counter) -> bool:
    """σ 의 T, T′ 다중집합이 목표에 포함되는가 (첫 불일치에서 중단)"""
    used_t: Counter = Counter()
    used_n: Counter = Counter()
    for key, n in zip(sigma.torus_weights(), sigma.nonsplit_weights()):
        used_t[key] += 1
        if used_t[key] > torus.get(key, 0):
            return False
        used_n[n] += 1
        if used_n[n] > nonsplit.get(n, 0):
            return False
    return True


def _candidate_weights(chi: ClassFunction, p: int, f: int) -> List[SerreWeightSym]:
    q = p ** f
    torus = chi.torus_counter()
    nonsplit = chi.nonsplit_counter()
    seen = set()
    out = []
    for (e1, e2), _ in chi.torus:
        R = (e1 - e2) % (q - 1)
        for top in ([R, q - 1] if R == 0 else [R]):
            digits = [(top // p ** i) % p for i in range(f)] if top < q - 1 else [p - 1] * f
            sigma = SerreWeightSym.make(p, digits, e2)
            if sigma in seen:
                continue
            seen.add(sigma)
            if _fits(sigma, torus, nonsplit):
                out.append(sigma)
    return sorted(out, key=SerreWeightSym.sort_key)


def decompose_character(chi: ClassFunction, p: int, f: int) -> List[SerreWeightSym]:
    """
    p-정칙 류 위에서 χ = Σ m_σ·β_σ 인 유일한 음 아닌 정수 해

    Raises:
        OracleError: 연립방정식이 특이하거나 해가 정수가 아님
    """
    candidates = _candidate_weights(chi, p, f)
    if not candidates:
        raise OracleError(f"no Serre weight fits {chi.label}")
    keys: Dict[Tuple, int] = {}
    for (k, _) in chi.torus:
        keys.setdefault(("T", k), len(keys))
    for (k, _) in chi.nonsplit:
        keys.setdefault(("N", k), len(keys))
    A = np.zeros((len(keys), len(candidates)), dtype=np.int64)
    b = np.zeros(len(keys), dtype=np.int64)
    for k, m in chi.torus:
        b[keys[("T", k)]] = m
    for k, m in chi.nonsplit:
        b[keys[("N", k)]] = m
    for j, sigma in enumerate(candidates):
        beta = brauer_character(sigma)
        for k, m in beta.torus:
            A[keys[("T", k)], j] += m
        for k, m in beta.nonsplit:
            A[keys[("N", k)], j] += m
    # 서로 다른 기약 Brauer 지표는 독립이므로 피벗 열만 남김
    system = Matrix(A.tolist())
    _, pivots = system.rref()
    pivots = list(pivots)
    if len(pivots) < len(candidates):
        logger.debug("%s: %d of %d candidate columns are dependent", chi.label,
                     len(candidates) - len(pivots), len(candidates))
    basis = [candidates[j] for j in pivots]
    sub = system.extract(list(range(system.rows)), pivots)
    try:
        sol, free = sub.gauss_jordan_solve(Matrix(b.tolist()))
    except ValueError as e:
        raise OracleError(f"decomposition system for {chi.label} has no solution: {e}") from e
    if free.shape[0]:
        raise OracleError(f"decomposition of {chi.label} is not unique")
    mults = []
    for value in sol:
        if not value.is_integer or value < 0:
            raise OracleError(f"non-integral decomposition for {chi.label}: {list(sol)}")
        mults.append(int(value))
    used = A[:, pivots] @ np.array(mults, dtype=np.int64)
    if not np.array_equal(used, b):
        raise OracleError(f"decomposition of {chi.label} does not reproduce the character")
    out = []
    for sigma, m in zip(basis, mults):
        out.extend([sigma] * m)
    return out


# ========== 분해 (캐시 경유) ==========

_ACTIVE_CACHE: Optional["OracleCacheService"] = None


def configure_cache(service: Optional["OracleCacheService"]) -> None:
    """decompose 가 사용할 디스크 캐시 (None 이면 메모리만)"""
    global _ACTIVE_CACHE
    _ACTIVE_CACHE = service


def _check_range(p: int, f: int) -> None:
    if p > RANGES.oracle_max_p or f > RANGES.oracle_max_f:
        raise ParameterError(f"oracle supports p <= {RANGES.oracle_max_p}, f <= {RANGES.oracle_max_f}")


@lru_cache(maxsize=None)
def _decompose_memo(s: WeylElt, mu: CharacterMu, p: int) -> Tuple[SerreWeightSym, ...]:
    service = _ACTIVE_CACHE
    if service is not None:
        hit = service.get(p, s, mu)
        if hit is not None:
            return tuple(hit)
    chi = ordinary_character(s, mu, p)
    result = tuple(decompose_character(chi, p, s.f))
    logger.debug("decompose %s mu=%s p=%d: %d factors", s.label(), mu.to_json(), p, len(result))
    if service is not None:
        service.put(p, s, mu, result)
    return result


def decompose(s: WeylElt, mu: CharacterMu, p: int) -> List[SerreWeightSym]:
    """
    σ̄(τ) 의 JH 인자 다중집합 (정렬됨)

    Raises:
        ParameterError: 범위 밖 또는 μ 가 일반적이지 않음
        OracleError: 지표 연립방정식 실패
    """
    if s.f != mu.f:
        raise ParameterError("type and weight have different f")
    _check_range(p, s.f)
    require_generic(mu, p)
    return list(_decompose_memo(s, mu, p))


def all_types(f: int) -> List[WeylElt]:
    out = []
    for bits in range(2 ** f):
        out.append(WeylElt(tuple(bool((bits >> i) & 1) for i in range(f))))
    return out


@dataclass
class DecompositionTable:
    """(p, f) 분해표: 행 = Serre 가중치, 열 = (s, μ)"""
    p: int
    f: int
    rows: List[SerreWeightSym]
    columns: List[Tuple[WeylElt, CharacterMu]]
    entries: List[List[int]] = field(default_factory=list)

    def column(self, j: int) -> Dict[SerreWeightSym, int]:
        return {self.rows[i]: self.entries[i][j] for i in range(len(self.rows)) if self.entries[i][j]}

    def dimension_sums(self) -> List[int]:
        return [sum(self.rows[i].dimension() * self.entries[i][j] for i in range(len(self.rows)))
                for j in range(len(self.columns))]

    def is_multiplicity_free(self) -> bool:
        return all(x <= 1 for row in self.entries for x in row)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "f": self.f,
            "rows": [w.to_json() for w in self.rows],
            "columns": [{"s": s.to_json(), "mu": mu.to_json()} for s, mu in self.columns],
            "entries": self.entries,
            "dimension_sums": self.dimension_sums(),
        }


def build_table(p: int, f: int, mus: Optional[Sequence[CharacterMu]] = None) -> DecompositionTable:
    """각 μ 와 모든 s ∈ S₂^f 에 대한 분해표"""
    _check_range(p, f)
    mus = list(mus) if mus else [CharacterMu.of(default_mu(p, f))]
    columns = [(s, mu) for mu in mus for s in all_types(f)]
    decomps = [decompose(s, mu, p) for s, mu in columns]
    rows = sorted({w for d in decomps for w in d}, key=SerreWeightSym.sort_key)
    entries = [[Counter(d)[w] for d in decomps] for w in rows]
    logger.info("decomposition table p=%d f=%d: %d weights x %d types", p, f, len(rows), len(columns))
    return DecompositionTable(p, f, rows, columns, entries)


# ========== 디스크 캐시 ==========

def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    with tmp.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(str(tmp), str(path))


class OracleCacheService:
    """
    분해표 열의 디스크 캐시

    기능:
    1. 열 조회 / 저장 (내용 주소 sha256 키, 원자적 1회 쓰기)
    2. 항목 목록
    3. 검증 (체크섬 + seed 로 고른 열 재계산)
    4. 비우기

    배치: <root>/v<format>/p<p>_f<f>/<key>.json
    """

    FORMAT_VERSION = CACHE.format_version

    def __init__(self, root: Path):
        self.root = Path(root)

    # ========== 경로 ==========

    def _bucket(self, p: int, f: int) -> Path:
        return self.root / f"v{self.FORMAT_VERSION}" / f"p{p}_f{f}"

    def key_for(self, p: int, s: WeylElt, mu: CharacterMu) -> str:
        payload = {"format": self.FORMAT_VERSION, "p": p, "f": s.f, "s": s.to_json(), "mu": mu.to_json()}
        return hashlib.sha256(_canonical_json(payload).encode("utf-8")).hexdigest()

    def path_for(self, p: int, s: WeylElt, mu: CharacterMu) -> Path:
        return self._bucket(p, s.f) / f"{self.key_for(p, s, mu)}.json"

    # ========== 읽기 / 쓰기 ==========

    @staticmethod
    def _checksum(entry: dict) -> str:
        body = {k: v for k, v in entry.items() if k != "checksum"}
        return hashlib.sha256(_canonical_json(body).encode("utf-8")).hexdigest()

    def _load(self, path: Path) -> dict:
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise CacheError(path.stem, f"unreadable: {e}") from e
        if entry.get("checksum") != self._checksum(entry):
            raise CacheError(path.stem, "checksum mismatch")
        if entry.get("format_version") != self.FORMAT_VERSION:
            raise CacheError(path.stem, f"format version {entry.get('format_version')}")
        return entry

    def get(self, p: int, s: WeylElt, mu: CharacterMu) -> Optional[List[SerreWeightSym]]:
        path = self.path_for(p, s, mu)
        if not path.exists():
            return None
        entry = self._load(path)
        return [SerreWeightSym.make(p, w["r"], w["d"]) for w in entry["weights"]]

    def put(self, p: int, s: WeylElt, mu: CharacterMu, weights: Iterable[SerreWeightSym]) -> Path:
        """이미 있으면 덮어쓰지 않음"""
        path = self.path_for(p, s, mu)
        if path.exists():
            return path
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "format_version": self.FORMAT_VERSION,
            "key": path.stem,
            "p": p,
            "f": s.f,
            "s": s.to_json(),
            "mu": mu.to_json(),
            "weights": [{"r": list(w.r), "d": w.d} for w in weights],
        }
        entry["checksum"] = self._checksum(entry)
        _atomic_write_text(path, json.dumps(entry, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
        logger.debug("cached oracle column %s", path)
        return path

    # ========== 관리 ==========

    def paths(self) -> List[Path]:
        base = self.root / f"v{self.FORMAT_VERSION}"
        if not base.exists():
            return []
        return sorted(base.glob("p*_f*/*.json"))

    def entries(self) -> List[dict]:
        out = []
        for path in self.paths():
            try:
                entry = self._load(path)
                out.append({"key": path.stem, "p": entry["p"], "f": entry["f"], "s": entry["s"],
                            "mu": entry["mu"], "weights": len(entry["weights"]), "ok": True})
            except CacheError as e:
                out.append({"key": path.stem, "ok": False, "reason": e.reason})
        return out

    def verify(self, seed: int = 0, sample: int = 1) -> dict:
        """
        모든 항목 체크섬 + 무작위 열 재계산

        Returns:
            {"checked", "corrupt": [key...], "recomputed": [...], "mismatched": [key...]}
        """
        corrupt, good = [], []
        for path in self.paths():
            try:
                good.append((path, self._load(path)))
            except CacheError as e:
                corrupt.append(e.key)
        rng = random.Random(seed)
        picks = rng.sample(good, min(sample, len(good))) if good else []
        recomputed, mismatched = [], []
        for path, entry in picks:
            s = WeylElt.of(x == "s" for x in entry["s"])
            mu = CharacterMu.of(entry["mu"])
            fresh = decompose_character(ordinary_character(s, mu, entry["p"]), entry["p"], entry["f"])
            stored = [SerreWeightSym.make(entry["p"], w["r"], w["d"]) for w in entry["weights"]]
            recomputed.append(path.stem)
            if sorted(fresh, key=SerreWeightSym.sort_key) != sorted(stored, key=SerreWeightSym.sort_key):
                mismatched.append(path.stem)
        return {
            "checked": len(corrupt) + len(good),
            "corrupt": corrupt,
            "recomputed": recomputed,
            "mismatched": mismatched,
        }

    def purge(self) -> int:
        removed = 0
        for path in self.paths():
            path.unlink()
            removed += 1
        _decompose_memo.cache_clear()
        return removed
