"""Binary extension fields GF(2^m) and a systematic Cauchy MDS erasure code.

The code is systematic: rows ``0..k-1`` of a codeword are the data rows and
rows ``k..K-1`` are parity. Any ``k`` rows recover the data.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

# primitive polynomials, x^m term included
_PRIMITIVE = {
    1: 0b11, 2: 0b111, 3: 0b1011, 4: 0b10011, 5: 0b100101, 6: 0b1000011,
    7: 0b10001001, 8: 0x11D, 9: 0x211, 10: 0x409, 11: 0x805, 12: 0x1053,
    13: 0x201B, 14: 0x4443, 15: 0x8003, 16: 0x1100B,
}


class InsufficientSharesError(ValueError):
    pass


class GF:
    """GF(2^m) with log/antilog tables. Elements are ints in ``[0, 2^m)``."""

    def __init__(self, m: int = 8):
        if m not in _PRIMITIVE:
            raise ValueError(f"unsupported field degree {m}")
        self.m = m
        self.order = 1 << m
        poly = _PRIMITIVE[m]
        n = self.order - 1
        exp = np.zeros(2 * n, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(n):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.order:
                x ^= poly
        if len(set(exp[:n].tolist())) != n:
            raise ArithmeticError(f"polynomial {poly:#x} is not primitive")
        exp[n:] = exp[:n]
        self.exp, self.log = exp, log

    def __repr__(self):
        return f"GF(2^{self.m})"

    def mul(self, a: int, b):
        """Scalar ``a`` times scalar or array ``b``."""
        b = np.asarray(b, dtype=np.int64)
        if a == 0:
            return np.zeros_like(b)
        out = self.exp[self.log[a] + self.log[b]]
        return np.where(b == 0, 0, out)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return int(self.exp[(self.order - 1 - self.log[a]) % (self.order - 1)])

    def matmul(self, M: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """``M @ rows`` over the field; ``rows`` is (n, L)."""
        out = np.zeros((M.shape[0], rows.shape[1]), dtype=np.int64)
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                if M[i, j]:
                    out[i] ^= self.mul(int(M[i, j]), rows[j])
        return out

    def inverse_matrix(self, M: np.ndarray) -> np.ndarray:
        n = M.shape[0]
        A = np.concatenate([M.astype(np.int64), np.eye(n, dtype=np.int64)], axis=1)
        for col in range(n):
            pivot = next((r for r in range(col, n) if A[r, col]), None)
            if pivot is None:
                raise np.linalg.LinAlgError("singular matrix over GF")
            A[[col, pivot]] = A[[pivot, col]]
            A[col] = self.mul(self.inv(int(A[col, col])), A[col])
            for r in range(n):
                if r != col and A[r, col]:
                    A[r] ^= self.mul(int(A[r, col]), A[col])
        return A[:, n:]


@lru_cache(maxsize=None)
def field(m: int = 8) -> GF:
    return GF(m)


GF256 = field(8)


@lru_cache(maxsize=None)
def _parity_matrix(k: int, K: int, m: int) -> np.ndarray:
    gf = field(m)
    if k == 1:
        # repetition is MDS over any field
        return np.ones((K - 1, 1), dtype=np.int64)
    if k == K - 1:
        # so is a single XOR parity row
        return np.ones((1, k), dtype=np.int64)
    if K > gf.order:
        raise ValueError(f"a ({k},{K}) Cauchy code needs at least {K} field elements, {gf} has {gf.order}")
    C = np.zeros((K - k, k), dtype=np.int64)
    for i in range(K - k):
        for j in range(k):
            C[i, j] = gf.inv((k + i) ^ j)
    return C


def generator_matrix(k: int, K: int, m: int = 8) -> np.ndarray:
    """``K x k`` systematic generator ``[I; C]``."""
    if not 1 <= k <= K:
        raise ValueError(f"need 1 <= k <= K, got k={k}, K={K}")
    top = np.eye(k, dtype=np.int64)
    if k == K:
        return top
    return np.concatenate([top, _parity_matrix(k, K, m)], axis=0)


def mds_encode(data_rows, total_rows: int, gf: GF = GF256) -> np.ndarray:
    """Parity rows (``total_rows - k`` of them) for ``k`` equal-length data rows."""
    data = np.atleast_2d(np.asarray(data_rows, dtype=np.int64))
    k = data.shape[0]
    if not 1 <= k <= total_rows:
        raise ValueError(f"need 1 <= k <= K, got k={k}, K={total_rows}")
    if total_rows > 255 and gf.m == 8:
        raise ValueError("at most 255 rows over GF(256)")
    if k == total_rows:
        return np.zeros((0, data.shape[1]), dtype=np.int64)
    return gf.matmul(_parity_matrix(k, total_rows, gf.m), data)


def mds_decode(rows: Mapping[int, Sequence[int]], k: int, total_rows: int,
               gf: GF = GF256) -> np.ndarray:
    """Recover the ``k`` data rows from any ``k`` rows keyed by their index (0-based)."""
    idx = sorted(i for i in rows if 0 <= i < total_rows)
    if len(idx) < k:
        raise InsufficientSharesError(f"need {k} of {total_rows} rows, got {len(idx)}")
    idx = idx[:k]
    received = np.array([np.asarray(rows[i], dtype=np.int64) for i in idx])
    if idx == list(range(k)):
        return received
    G = generator_matrix(k, total_rows, gf.m)
    return gf.matmul(gf.inverse_matrix(G[idx]), received)
