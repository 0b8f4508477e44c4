# ============================================================
# 가중치 조합론: X*(T), Weyl 군, Frobenius, Serre 가중치, σ_J
# 파일: mcp_server_serre/weights.py
#
# 규약: (F·μ)_i = p·μ_{i+1}, (F·w)_i = w_{i+1}
#       S = {±ω^{(i)}}, 원소는 (i, ±1)
# ============================================================

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

from .errors import OracleError, ParameterError
from .witt import TruncatedWitt, residue_field


# ========== 지표 격자 ==========

@dataclass(frozen=True)
class CharacterMu:
    """μ ∈ X*(T) ≅ (ℤ²)^{ℤ/f}"""
    components: Tuple[Tuple[int, int], ...]

    @classmethod
    def of(cls, pairs: Iterable[Sequence[int]]) -> "CharacterMu":
        return cls(tuple((int(a), int(b)) for a, b in pairs))

    @classmethod
    def eta(cls, f: int) -> "CharacterMu":
        return cls(((1, 0),) * f)

    @classmethod
    def alpha(cls, f: int, i: int) -> "CharacterMu":
        return cls(tuple((1, -1) if j == i else (0, 0) for j in range(f)))

    @property
    def f(self) -> int:
        return len(self.components)

    def pairing(self, i: int) -> int:
        """⟨μ, α^{(i)}⟩ = a_i - b_i"""
        a, b = self.components[i % self.f]
        return a - b

    def __add__(self, other: "CharacterMu") -> "CharacterMu":
        return CharacterMu(tuple((a + c, b + d) for (a, b), (c, d) in zip(self.components, other.components)))

    def __sub__(self, other: "CharacterMu") -> "CharacterMu":
        return CharacterMu(tuple((a - c, b - d) for (a, b), (c, d) in zip(self.components, other.components)))

    def frobenius(self, p: int) -> "CharacterMu":
        f = self.f
        return CharacterMu(tuple((p * self.components[(i + 1) % f][0], p * self.components[(i + 1) % f][1])
                                 for i in range(f)))

    def is_dominant(self) -> bool:
        return all(a >= b for a, b in self.components)

    def to_json(self) -> List[List[int]]:
        return [list(c) for c in self.components]


# ========== Weyl 군 ==========

@dataclass(frozen=True)
class WeylElt:
    """w ∈ S₂^{ℤ/f}, True = s"""
    components: Tuple[bool, ...]

    @classmethod
    def identity(cls, f: int) -> "WeylElt":
        return cls((False,) * f)

    @classmethod
    def of(cls, flags: Iterable) -> "WeylElt":
        return cls(tuple(bool(x) for x in flags))

    @classmethod
    def parse(cls, text: str) -> "WeylElt":
        """'Id,s' 또는 '01'"""
        parts = text.split(",") if "," in text else list(text)
        return cls(tuple(part.strip() in ("s", "1") for part in parts))

    @property
    def f(self) -> int:
        return len(self.components)

    def __mul__(self, other: "WeylElt") -> "WeylElt":
        return WeylElt(tuple(a != b for a, b in zip(self.components, other.components)))

    def inverse(self) -> "WeylElt":
        return self

    def frobenius(self) -> "WeylElt":
        f = self.f
        return WeylElt(tuple(self.components[(i + 1) % f] for i in range(f)))

    def frobenius_inverse(self) -> "WeylElt":
        f = self.f
        return WeylElt(tuple(self.components[(i - 1) % f] for i in range(f)))

    def act(self, mu: CharacterMu) -> CharacterMu:
        return CharacterMu(tuple((b, a) if s else (a, b) for s, (a, b) in zip(self.components, mu.components)))

    def parity(self) -> int:
        return sum(self.components) % 2

    def is_principal(self) -> bool:
        return self.parity() == 0

    def label(self) -> str:
        return ",".join("s" if x else "Id" for x in self.components)

    def to_json(self) -> List[str]:
        return ["s" if x else "Id" for x in self.components]


def orientation_solve(s: WeylElt) -> Tuple[WeylElt, bool]:
    """F^{-1}(w)·s·w^{-1} = (s_τ, Id, …, Id), w₀ = Id 인 유일한 (w, s_τ)"""
    comps = [False]
    for i in range(1, s.f):
        comps.append(comps[-1] != s.components[i])
    w = WeylElt(tuple(comps))
    check = w.frobenius_inverse() * s * w
    if any(check.components[1:]):
        raise ArithmeticError("orientation equation has no solution")
    return w, check.components[0]


# ========== 부호 근 부분집합 ==========

@dataclass(frozen=True)
class SignedRootSubset:
    """J ⊆ S = {±ω^{(i)}}"""
    f: int
    members: FrozenSet[Tuple[int, int]]

    @classmethod
    def of(cls, f: int, members: Iterable[Tuple[int, int]]) -> "SignedRootSubset":
        mem = frozenset((int(i) % f, 1 if sgn > 0 else -1) for i, sgn in members)
        return cls(f, mem)

    @classmethod
    def empty(cls, f: int) -> "SignedRootSubset":
        return cls(f, frozenset())

    @classmethod
    def parse(cls, f: int, text: str) -> "SignedRootSubset":
        """'w0,-w1' 형식 ('' 또는 'none' 은 공집합)"""
        text = (text or "").strip()
        if text in ("", "none", "empty", "{}"):
            return cls.empty(f)
        members = []
        for tok in text.split(","):
            tok = tok.strip()
            sign = -1 if tok.startswith("-") else 1
            body = tok.lstrip("+-")
            if not body.startswith("w") or not body[1:].isdigit():
                raise ParameterError(f"cannot parse signed root '{tok}' (expected w<i> or -w<i>)")
            i = int(body[1:])
            if i >= f:
                raise ParameterError(f"index {i} out of range for f={f}")
            members.append((i, sign))
        return cls.of(f, members)

    def __contains__(self, item: Tuple[int, int]) -> bool:
        return item in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __or__(self, other: "SignedRootSubset") -> "SignedRootSubset":
        return SignedRootSubset(self.f, self.members | other.members)

    def __and__(self, other: "SignedRootSubset") -> "SignedRootSubset":
        return SignedRootSubset(self.f, self.members & other.members)

    def __sub__(self, other: "SignedRootSubset") -> "SignedRootSubset":
        return SignedRootSubset(self.f, self.members - other.members)

    def add(self, i: int, sign: int) -> "SignedRootSubset":
        return SignedRootSubset(self.f, self.members | {(i % self.f, sign)})

    def at(self, i: int) -> FrozenSet[int]:
        """index i 에 있는 부호들"""
        return frozenset(sgn for j, sgn in self.members if j == i)

    def multidegree(self) -> Tuple[int, ...]:
        """𝐤(J)_i = #(J ∩ {±ω^{(i)}})"""
        return tuple(len(self.at(i)) for i in range(self.f))

    def is_issubset(self, other: "SignedRootSubset") -> bool:
        return self.members <= other.members

    def has_full_pair(self) -> bool:
        return any(len(self.at(i)) == 2 for i in range(self.f))

    def cancel_pairs(self) -> "SignedRootSubset":
        """{±ω^{(i)}} 쌍 제거"""
        return SignedRootSubset(self.f, frozenset((i, s) for i, s in self.members if len(self.at(i)) < 2))

    def subsets(self) -> Iterable["SignedRootSubset"]:
        items = sorted(self.members)
        for r in range(len(items) + 1):
            for combo in itertools.combinations(items, r):
                yield SignedRootSubset(self.f, frozenset(combo))

    def sort_key(self) -> Tuple:
        return (len(self.members), sorted(self.members))

    def label(self) -> str:
        if not self.members:
            return "{}"
        return ",".join(("-" if s < 0 else "") + f"w{i}" for i, s in sorted(self.members, key=lambda m: (m[0], -m[1])))

    def to_json(self) -> List[str]:
        return [("-" if s < 0 else "") + f"w{i}" for i, s in sorted(self.members, key=lambda m: (m[0], -m[1]))]


def all_signed_subsets(f: int) -> List[SignedRootSubset]:
    full = SignedRootSubset(f, frozenset((i, s) for i in range(f) for s in (1, -1)))
    return sorted(full.subsets(), key=SignedRootSubset.sort_key)


def admissible_subsets(I: SignedRootSubset) -> List[SignedRootSubset]:
    """J ∩ I = ∅ 인 J ⊆ S"""
    return [J for J in all_signed_subsets(I.f) if not (J.members & I.members)]


def stratum_counts(I: SignedRootSubset) -> List[int]:
    """∏_{i∉supp I}(1+2t+t²)·∏_{i∈supp I}(1+t) 의 계수 (완전한 쌍이 있는 자리는 1)"""
    poly = [1]
    for i in range(I.f):
        factor = [[1, 2, 1], [1, 1], [1]][len(I.at(i))]
        out = [0] * (len(poly) + len(factor) - 1)
        for a, x in enumerate(poly):
            for b, y in enumerate(factor):
                out[a + b] += x * y
        poly = out
    return poly


# ========== Serre 가중치 ==========

@dataclass(frozen=True)
class SerreWeightSym:
    """F(r, d) = ⊗_i (Sym^{r_i} ⊗ det^{d_i})^{Frob^i}, 정규형 (r 자리수, d mod q-1)"""
    p: int
    r: Tuple[int, ...]
    d: int

    @classmethod
    def make(cls, p: int, r: Sequence[int], d: int) -> "SerreWeightSym":
        r = tuple(int(x) for x in r)
        if any(x < 0 or x > p - 1 for x in r):
            raise ParameterError(f"weight digits {r} are not p-restricted for p={p}")
        q = p ** len(r)
        return cls(p, r, int(d) % (q - 1))

    @classmethod
    def from_weight(cls, lam: CharacterMu, p: int) -> "SerreWeightSym":
        """F(λ), λ_i = (x_i, y_i), 0 ≤ x_i - y_i ≤ p-1"""
        r = [x - y for x, y in lam.components]
        d = sum(y * p ** i for i, (_, y) in enumerate(lam.components))
        return cls.make(p, r, d)

    @property
    def f(self) -> int:
        return len(self.r)

    @property
    def q(self) -> int:
        return self.p ** self.f

    def dimension(self) -> int:
        out = 1
        for x in self.r:
            out *= x + 1
        return out

    def R(self) -> int:
        return sum(x * self.p ** i for i, x in enumerate(self.r))

    def torus_weights(self) -> List[Tuple[int, int]]:
        """T-무게 (d+E, d+R-E) mod (q-1), E = Σ e_i p^i, 0 ≤ e_i ≤ r_i"""
        q, p = self.q, self.p
        R = self.R()
        out = []
        for digits in itertools.product(*[range(x + 1) for x in self.r]):
            E = sum(e * p ** i for i, e in enumerate(digits))
            out.append(((self.d + E) % (q - 1), (self.d + R - E) % (q - 1)))
        return out

    def nonsplit_weights(self) -> List[int]:
        """T′ = F_{q²}^× 위 지수 E + q(R-E) + d(q+1) mod (q²-1), torus_weights 와 같은 순서"""
        q, p = self.q, self.p
        order = q * q - 1
        R = self.R()
        out = []
        for digits in itertools.product(*[range(x + 1) for x in self.r]):
            E = sum(e * p ** i for i, e in enumerate(digits))
            out.append((E + q * (R - E) + self.d * (q + 1)) % order)
        return out

    def sort_key(self) -> Tuple:
        return (self.r, self.d)

    def label(self) -> str:
        if self.f == 1:
            return f"F({self.r[0] + self.d},{self.d})"
        return f"F(r={list(self.r)}, d={self.d})"

    def to_json(self) -> dict:
        return {"r": list(self.r), "d": self.d, "dim": self.dimension()}


# ========== 일반성 ==========

def is_generic(mu: CharacterMu, p: int) -> bool:
    """1 < ⟨μ-η, α^{(i)}⟩ < p-2, 모든 i"""
    lam = mu - CharacterMu.eta(mu.f)
    return all(1 < lam.pairing(i) < p - 2 for i in range(mu.f))


def require_generic(mu: CharacterMu, p: int) -> None:
    if not mu.is_dominant() or not is_generic(mu, p):
        raise ParameterError(f"mu={mu.to_json()} is not generic for p={p}")


# ========== 잔여 데이터 ==========

@dataclass(frozen=True)
class ResidualParams:
    """
    잔여 φ-가군 데이터

    a 는 근 색인 r 로: a_r = 0 ⟺ ω^{(r)} ∈ I(ρ̄,μ).
    μ_r = (c_r, 1), 2 < c_r < p-1.
    """
    p: int
    f: int
    mu: CharacterMu
    irhomu: SignedRootSubset
    a: Tuple[TruncatedWitt, ...]
    alpha: TruncatedWitt
    alpha_prime: TruncatedWitt

    def __post_init__(self):
        if self.mu.f != self.f or self.irhomu.f != self.f or len(self.a) != self.f:
            raise ParameterError("residual data has inconsistent f")
        for r, (c, one) in enumerate(self.mu.components):
            if one != 1 or not (2 < c < self.p - 1):
                raise ParameterError(f"mu_{r} = ({c},{one}) violates 2 < c < p-1 with second entry 1")
        if self.irhomu.has_full_pair():
            raise ParameterError("I(rho,mu) has at most one element per index")
        for r in range(self.f):
            if self.a[r].is_zero() != ((r, 1) in self.irhomu):
                raise ParameterError(f"a_{r} must vanish exactly when w{r} is in I(rho,mu)")
        if self.alpha.is_zero() or self.alpha_prime.is_zero():
            raise ParameterError("alpha and alpha' must be nonzero")

    @property
    def c(self) -> Tuple[int, ...]:
        return tuple(a for a, _ in self.mu.components)

    @classmethod
    def default(cls, p: int, f: int, mu: CharacterMu, irhomu: SignedRootSubset) -> "ResidualParams":
        """a_r = 1 (ω^{(r)} ∉ I), α = 1, α′ = 2"""
        field = residue_field(p, f)
        a = tuple(field.zero if (r, 1) in irhomu else field.one for r in range(f))
        return cls(p, f, mu, irhomu, a, field.one, field.from_int(2))

    def to_json(self) -> dict:
        return {
            "p": self.p, "f": self.f, "mu": self.mu.to_json(), "irhomu": self.irhomu.to_json(),
            "a": [x.to_json() for x in self.a], "alpha": self.alpha.to_json(),
            "alpha_prime": self.alpha_prime.to_json(),
        }


# ========== 유형 ==========

def types_for(mu: CharacterMu, I: SignedRootSubset) -> List[WeylElt]:
    """T_{σ,I}: ω^{(i)} ∈ I ⇒ w_i = Id, -ω^{(i)} ∈ I ⇒ w_i = s, 나머지 자유"""
    if I.has_full_pair():
        raise ParameterError("I contains a full pair {+w_i, -w_i}")
    choices = []
    for i in range(I.f):
        signs = I.at(i)
        if 1 in signs:
            choices.append((False,))
        elif -1 in signs:
            choices.append((True,))
        else:
            choices.append((False, True))
    return [WeylElt(c) for c in itertools.product(*choices)]


def pinned_types(K: SignedRootSubset) -> List[WeylElt]:
    """W_K: -ω^{(i)} ∈ K ⇒ w_i = Id, ω^{(i)} ∈ K ⇒ w_i = s"""
    flipped = SignedRootSubset(K.f, frozenset((i, -s) for i, s in K.members))
    return types_for(CharacterMu.eta(K.f), flipped)


def type_weight(mu: CharacterMu, w: WeylElt) -> CharacterMu:
    """λ = μ - wη"""
    return mu - w.act(CharacterMu.eta(mu.f))


def dl_parameters(w: WeylElt, lam: CharacterMu, p: int) -> Tuple[str, Tuple[int, ...]]:
    """
    R_w(λ) 의 Deligne–Lusztig 매개변수

    Returns:
        ("principal", (A, B)) 또는 ("cuspidal", (n,))
    """
    f = w.f
    q = p ** f
    A = B = 0
    flipped = False
    for i in range(f):
        # π_i = w_i ⋯ w_1
        if i > 0:
            flipped ^= w.components[i]
        x, y = lam.components[i]
        if flipped:
            x, y = y, x
        A += x * p ** i
        B += y * p ** i
    if w.parity() == 0:
        return "principal", (A % (q - 1), B % (q - 1))
    return "cuspidal", ((A + q * B) % (q * q - 1),)


# ========== σ_J (판정 기준으로 고정) ==========

def sigma_empty(mu: CharacterMu, p: int) -> SerreWeightSym:
    return SerreWeightSym.from_weight(mu - CharacterMu.eta(mu.f), p)


def sigma_J(mu: CharacterMu, J: SignedRootSubset, p: int) -> SerreWeightSym:
    """
    σ_J: 쌍은 상쇄, 그 외에는
    ⋂_{w ∈ W_K} JH(R_w(μ-wη)) ∖ {σ_{K′} : K′ ⊊ K} 의 유일한 원소.

    Raises:
        ParameterError: μ 가 일반적이지 않음
        OracleError: 유일하게 결정되지 않음
    """
    require_generic(mu, p)
    return _sigma_pinned(mu, J.cancel_pairs(), p)


@lru_cache(maxsize=None)
def _sigma_pinned(mu: CharacterMu, K: SignedRootSubset, p: int) -> SerreWeightSym:
    if not K.members:
        return sigma_empty(mu, p)
    from .brauer_oracle import decompose

    common = None
    for w in pinned_types(K):
        jh = set(decompose(w, mu, p))
        common = jh if common is None else common & jh
    lower = {_sigma_pinned(mu, sub, p) for sub in K.subsets() if sub.members != K.members}
    left = (common or set()) - lower
    if len(left) != 1:
        raise OracleError(f"sigma_J recipe not pinned for J={K.label()}: {len(left)} candidates")
    return next(iter(left))


def jh_of_type(s: WeylElt, mu: CharacterMu, p: int) -> List[Tuple[SignedRootSubset, SerreWeightSym]]:
    """
    σ̄(τ) 의 2^f 개 JH 인자, J′ ∩ {±ω^{(i)}} ⊆ {-s_iω^{(i)}} 로 색인

    Raises:
        ParameterError: μ 가 일반적이지 않음
    """
    require_generic(mu, p)
    allowed = SignedRootSubset(s.f, frozenset((i, 1 if s.components[i] else -1) for i in range(s.f)))
    return [(J, sigma_J(mu, J, p)) for J in sorted(allowed.subsets(), key=SignedRootSubset.sort_key)]


def weight_set(params: ResidualParams) -> List[SerreWeightSym]:
    """W(ρ̄) = {σ_J : J ⊆ I(ρ̄,μ)}"""
    out = []
    for J in sorted(params.irhomu.subsets(), key=SignedRootSubset.sort_key):
        sigma = sigma_J(params.mu, J, params.p)
        if sigma not in out:
            out.append(sigma)
    return out


def type_of_weight_set(irhomu: SignedRootSubset) -> WeylElt:
    """s_i ≠ Id ⟺ ω^{(i)} ∈ I(ρ̄,μ)"""
    return WeylElt(tuple((i, 1) in irhomu for i in range(irhomu.f)))


# ========== 주계열 닫힌 공식 ==========

def _digits(n: int, p: int, f: int) -> List[int]:
    return [(n // p ** i) % p for i in range(f)]


def principal_series_constituents(A: int, B: int, p: int, f: int) -> Dict[FrozenSet[int], SerreWeightSym]:
    """
    I(x^A, x^B) 축약의 JH 인자, 고전적 색인 J ⊆ ℤ/f (반사와 올림)
    """
    q = p ** f
    r = _digits((A - B) % (q - 1), p, f)
    out = {}
    for size in range(f + 1):
        for combo in itertools.combinations(range(f), size):
            J = frozenset(combo)
            digits = []
            d = B
            for i in range(f):
                prev = (i - 1) % f
                if i not in J:
                    digits.append(r[i] - 1 if prev in J else r[i])
                else:
                    digits.append(p - 1 - r[i] if prev in J else p - 2 - r[i])
                    d += (r[i] + (0 if prev in J else 1)) * p ** i
            out[J] = SerreWeightSym.make(p, digits, d)
    return out


def signed_index(J: FrozenSet[int], s: WeylElt) -> SignedRootSubset:
    """고전 색인 J → J′ = {-s_iω^{(i)} : i-1 ∈ J}"""
    f = s.f
    members = []
    for i in range(f):
        if (i - 1) % f in J:
            members.append((i, 1 if s.components[i] else -1))
    return SignedRootSubset.of(f, members)


def reconcile_recipe(mu: CharacterMu, p: int) -> dict:
    """
    주계열 닫힌 공식 대 판정 기준 (집합 수준)

    Returns:
        {"set_match": bool, "shift_matches": [...], "mismatches": [...]}
    """
    from .brauer_oracle import decompose

    f = mu.f
    w = WeylElt.identity(f)
    kind, (A, B) = dl_parameters(w, type_weight(mu, w), p)
    recipe = principal_series_constituents(A, B, p, f)
    oracle = set(decompose(w, mu, p))
    shift = []
    for J, sigma in sorted(recipe.items(), key=lambda kv: sorted(kv[0])):
        Jp = signed_index(J, w)
        shift.append({"J": sorted(J), "J_prime": Jp.to_json(), "weight": sigma.to_json(),
                      "matches_sigma_J_prime": sigma_J(mu, Jp, p) == sigma})
    mismatches = [s.to_json() for s in set(recipe.values()) ^ oracle]
    return {"set_match": set(recipe.values()) == oracle, "shift_matches": shift, "mismatches": mismatches}
