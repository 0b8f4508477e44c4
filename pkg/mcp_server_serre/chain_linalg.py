# mcp_server_serre/chain_linalg.py
# ℤ/p^n 위 선형대수: Howell 형식, 소속 판정, 길이, 교집합, 핵
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import check_token

INT64_SAFE = 1 << 62


def working_dtype(modulus: int):
    """곱이 int64 를 넘지 않으면 int64, 아니면 object"""
    return np.int64 if modulus * modulus < INT64_SAFE else object


def valuations(values: np.ndarray, p: int, n: int) -> np.ndarray:
    """원소별 p-진 값매김 (0 은 n)"""
    vals = np.full(values.shape, n, dtype=np.int64)
    nonzero = values != 0
    vals[nonzero] = 0
    power = 1
    for k in range(1, n):
        power *= p
        vals[nonzero & (values % power == 0)] = k
    return vals


@dataclass
class HowellBasis:
    """
    (ℤ/p^n)^c 부분가군의 Howell 기저

    rows[i] 의 피벗 열 pivots[i][0] 값은 p^{pivots[i][1]}, 그 왼쪽은 0.
    Howell 성질: 앞쪽 k 열이 0 인 부분가군은 피벗이 k 이상인 행들로 생성.
    """
    p: int
    n: int
    ncols: int
    rows: np.ndarray
    pivots: List[Tuple[int, int]]

    @property
    def modulus(self) -> int:
        return self.p ** self.n

    def length(self) -> int:
        """ℤ_p-길이 Σ(n - v)"""
        return sum(self.n - v for _, v in self.pivots)

    def reduce(self, vec: Sequence[int]) -> np.ndarray:
        """피벗 순서대로 소거한 나머지"""
        m = self.modulus
        r = np.array(vec, dtype=self.rows.dtype) % m
        for row, (j, v) in zip(self.rows, self.pivots):
            e = r[j]
            if e == 0:
                continue
            step = self.p ** v
            if e % step:
                continue
            r = (r - (e // step) * row) % m
        return r

    def contains(self, vec: Sequence[int]) -> bool:
        return not np.any(self.reduce(vec))

    def contains_all(self, rows: np.ndarray) -> bool:
        return all(self.contains(r) for r in rows)

    def contains_basis(self, other: "HowellBasis") -> bool:
        return self.contains_all(other.rows)

    def rows_after(self, col: int) -> np.ndarray:
        """피벗 열이 col 이상인 행 (앞쪽 col 열은 0)"""
        keep = [i for i, (j, _) in enumerate(self.pivots) if j >= col]
        return self.rows[keep]

    def rank_mod_p(self) -> int:
        """F_p 위 계수 = 단위 피벗 개수"""
        return sum(1 for _, v in self.pivots if v == 0)


def howell_form(rows, p: int, n: int, ncols: int, token=None) -> HowellBasis:
    """행들이 생성하는 부분가군의 축약 Howell 기저"""
    m = p ** n
    dtype = working_dtype(m)
    active = np.array(rows, dtype=dtype).reshape(-1, ncols) % m
    active = active[np.any(active != 0, axis=1)]
    basis: List[np.ndarray] = []
    pivots: List[Tuple[int, int]] = []
    for j in range(ncols):
        check_token(token)
        if active.shape[0] == 0:
            break
        col = active[:, j]
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        vals = valuations(col[nz], p, n)
        pick = int(nz[int(np.argmin(vals))])
        v = int(vals.min())
        step = p ** v
        prow = active[pick].copy()
        unit = int(prow[j]) // step
        prow = (prow * pow(unit, -1, m)) % m
        others = np.delete(active, pick, axis=0)
        if others.shape[0]:
            hit = np.nonzero(others[:, j])[0]
            if hit.size:
                factors = others[hit, j] // step
                others[hit] = (others[hit] - np.outer(factors, prow)) % m
        for i, (bj, bv) in enumerate(pivots):
            e = int(basis[i][j])
            if e >= step:
                basis[i] = (basis[i] - (e // step) * prow) % m
        if v > 0:
            hrow = (prow * (p ** (n - v))) % m
            if np.any(hrow):
                others = np.vstack([others, hrow[None, :]]) if others.shape[0] else hrow[None, :]
        if others.shape[0]:
            others = others[np.any(others != 0, axis=1)]
        active = others
        basis.append(prow)
        pivots.append((j, v))
    mat = np.array(basis, dtype=dtype).reshape(-1, ncols)
    return HowellBasis(p, n, ncols, mat, pivots)


def span_sum(a: HowellBasis, b: HowellBasis, token=None) -> HowellBasis:
    return howell_form(np.vstack([a.rows, b.rows]), a.p, a.n, a.ncols, token)


def span_intersection(a: HowellBasis, b: HowellBasis, token=None) -> HowellBasis:
    """Zassenhaus: [[U, U], [V, 0]] 의 Howell 형식에서 앞 블록이 0 인 행"""
    c = a.ncols
    dtype = working_dtype(a.modulus)
    top = np.hstack([a.rows, a.rows]) if a.rows.shape[0] else np.zeros((0, 2 * c), dtype=dtype)
    bottom = np.hstack([b.rows, np.zeros_like(b.rows)]) if b.rows.shape[0] else np.zeros((0, 2 * c), dtype=dtype)
    joint = howell_form(np.vstack([top, bottom]), a.p, a.n, 2 * c, token)
    tail = joint.rows_after(c)[:, c:]
    return howell_form(tail, a.p, a.n, c, token)


def kernel_mod(images: np.ndarray, target: HowellBasis, domain_torsion: Optional[np.ndarray] = None,
               token=None) -> HowellBasis:
    """
    a ↦ Σ a_i·images[i] (mod target) 의 핵

    Args:
        images: 정의역 기저 e_i 의 상 (k × c)
        target: 공역에서 0 으로 보는 부분가군
        domain_torsion: 정의역 관계 (k 열 행들)
    Returns:
        (ℤ/p^n)^k 안의 핵의 Howell 기저
    """
    p, n, c = target.p, target.n, target.ncols
    k = images.shape[0]
    dtype = working_dtype(target.modulus)
    eye = np.eye(k, dtype=dtype)
    blocks = [np.hstack([np.array(images, dtype=dtype).reshape(k, c), eye])]
    if target.rows.shape[0]:
        blocks.append(np.hstack([target.rows, np.zeros((target.rows.shape[0], k), dtype=dtype)]))
    if domain_torsion is not None and len(domain_torsion):
        tors = np.array(domain_torsion, dtype=dtype).reshape(-1, k)
        blocks.append(np.hstack([np.zeros((tors.shape[0], c), dtype=dtype), tors]))
    joint = howell_form(np.vstack(blocks), p, n, c + k, token)
    return howell_form(joint.rows_after(c)[:, c:], p, n, k, token)


def rank_mod_p(rows, p: int, ncols: int) -> int:
    """F_p 위 행렬 계수"""
    return howell_form(rows, p, 1, ncols).rank_mod_p()




# ========== F_p 연립방정식 ==========

def rref_mod_p(aug: np.ndarray, npiv: int, p: int) -> List[int]:
    """
    앞 npiv 열에 대해 제자리 Gauss–Jordan 소거

    Returns:
        피벗 열 목록 (피벗 행은 0..len-1)
    """
    rows = aug.shape[0]
    r = 0
    pivcols: List[int] = []
    for j in range(npiv):
        if r == rows:
            break
        nz = np.nonzero(aug[r:, j])[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            aug[[r, i]] = aug[[i, r]]
        aug[r] = (aug[r] * pow(int(aug[r, j]), -1, p)) % p
        col = aug[:, j].copy()
        col[r] = 0
        hit = np.nonzero(col)[0]
        if hit.size:
            aug[hit] = (aug[hit] - np.outer(col[hit], aug[r])) % p
        pivcols.append(j)
        r += 1
    return pivcols


def solve_many_mod_p(matrix: np.ndarray, rhs: np.ndarray, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    matrix·X = rhs 를 열마다 풂 (자유 변수 0)

    Returns:
        (X, ok): ok[k] 가 False 인 열은 해 없음
    """
    rows, cols = matrix.shape
    rhs = np.array(rhs, dtype=np.int64).reshape(rows, -1) % p
    aug = np.hstack([np.array(matrix, dtype=np.int64) % p, rhs])
    pivcols = rref_mod_p(aug, cols, p)
    r = len(pivcols)
    ok = ~np.any(aug[r:, cols:] != 0, axis=0)
    X = np.zeros((cols, rhs.shape[1]), dtype=np.int64)
    for i, j in enumerate(pivcols):
        X[j] = aug[i, cols:]
    return X, ok


def solve_mod_p(matrix: np.ndarray, rhs: np.ndarray, p: int):
    """
    F_p 위 matrix·x = rhs 의 해 하나 (자유 변수 0)

    Returns:
        (x, None) 해가 있으면, (None, 증명행) 없으면.
        증명행 y 는 y·matrix = 0, y·rhs = 1.
    """
    rows, cols = matrix.shape
    X, ok = solve_many_mod_p(matrix, rhs, p)
    if ok[0]:
        return X[:, 0], None
    dual = np.vstack([np.array(matrix, dtype=np.int64).T % p,
                      (np.array(rhs, dtype=np.int64) % p).reshape(1, rows)])
    target = np.zeros(cols + 1, dtype=np.int64)
    target[-1] = 1
    Y, found = solve_many_mod_p(dual, target, p)
    if not found[0]:
        raise ArithmeticError("inconsistent system without a left-kernel witness")
    return None, Y[:, 0]
