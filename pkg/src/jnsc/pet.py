"""Priority encoding transmission: K balanced descriptions from a progressive bitstream.

Level ``l`` occupies ``w_l`` columns of a ``K x (n*r)`` bit matrix. Its first
``l`` rows hold source bits in stream order and the remaining ``K - l`` rows
hold parity of an ``(l, K)`` MDS code, so any ``l`` rows recover every level
``<= l``. Description ``i`` is row ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import accumulate
from typing import Callable, Sequence

import numpy as np

from .gf import field, mds_decode, mds_encode


@dataclass(frozen=True)
class PetProfile:
    levels: tuple[float, ...]
    rate: float = 1.0

    def __post_init__(self):
        y = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "levels", y)
        if not y:
            raise ValueError("profile needs at least one level")
        if min(y) < 0:
            raise ValueError("profile entries must be non-negative")
        if abs(sum(y) - 1.0) > 1e-9:
            raise ValueError(f"profile must sum to 1, sums to {sum(y)!r}")
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    @property
    def K(self) -> int:
        return len(self.levels)

    @property
    def descriptions(self) -> int:
        return len(self.levels)

    def effective_rate(self, k: int) -> float:
        """Source rate recoverable from ``k`` descriptions: ``r * sum_{l<=k} l*y_l``."""
        k = min(k, self.K)
        return self.rate * sum((l + 1) * y for l, y in enumerate(self.levels[:k]))


@dataclass(frozen=True)
class PetLayout:
    block_length: int
    K: int
    widths: tuple[int, ...]

    @property
    def row_bits(self) -> int:
        return sum(self.widths)

    @property
    def column_offsets(self) -> tuple[int, ...]:
        """First column of each level's segment."""
        return (0,) + tuple(accumulate(self.widths))[:-1]

    @property
    def prefix_lengths(self) -> tuple[int, ...]:
        """``xi_0..xi_K``: source bits recoverable from ``l`` descriptions."""
        return (0,) + tuple(accumulate((l + 1) * w for l, w in enumerate(self.widths)))

    @property
    def source_bits(self) -> int:
        return self.prefix_lengths[-1]


class PetError(ValueError):
    pass


def largest_remainder(shares: Sequence[float], total: int) -> list[int]:
    """Round ``shares * total`` to integers summing to ``total``; ties go to the lower index."""
    raw = [s * total for s in shares]
    base = [math.floor(x + 1e-12) for x in raw]
    short = total - sum(base)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def make_layout(profile: PetProfile, n: int) -> PetLayout:
    bits = n * profile.rate
    if abs(bits - round(bits)) > 1e-9:
        raise PetError(f"n*r = {bits} is not an integer")
    return PetLayout(n, profile.K, tuple(largest_remainder(profile.levels, int(round(bits)))))


def _chunks(width: int) -> list[tuple[int, int]]:
    """Split a segment into ``(symbol_bits, count)`` groups.

    Bulk columns go 8 to a GF(256) symbol; a ragged tail is merged into one
    wider symbol (up to 15 bits) so that parity never needs padding.
    """
    if width == 0:
        return []
    if width < 16:
        return [(width, 1)]
    whole, tail = divmod(width, 8)
    if tail == 0:
        return [(8, whole)]
    return [(8, whole - 1), (8 + tail, 1)]


def _to_symbols(bits: np.ndarray, m: int) -> np.ndarray:
    """(rows, count*m) bits -> (rows, count) ints, most significant bit first."""
    rows = bits.shape[0]
    weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    return bits.reshape(rows, -1, m).astype(np.int64) @ weights


def _to_bits(symbols: np.ndarray, m: int) -> np.ndarray:
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    return ((symbols[..., None] >> shifts) & 1).reshape(symbols.shape[0], -1).astype(np.uint8)


def _segment_parity(data_bits: np.ndarray, K: int) -> np.ndarray:
    l, width = data_bits.shape
    out = []
    col = 0
    for m, count in _chunks(width):
        part = data_bits[:, col:col + m * count]
        parity = mds_encode(_to_symbols(part, m), K, field(m))
        out.append(_to_bits(parity, m))
        col += m * count
    return np.concatenate(out, axis=1) if out else np.zeros((K - l, 0), np.uint8)


def _segment_recover(rows: dict[int, np.ndarray], l: int, K: int, width: int) -> np.ndarray:
    out = []
    col = 0
    for m, count in _chunks(width):
        symbols = {i: _to_symbols(r[None, col:col + m * count], m)[0] for i, r in rows.items()}
        out.append(_to_bits(mds_decode(symbols, l, K, field(m)), m))
        col += m * count
    return np.concatenate(out, axis=1)


def check_codable(layout: PetLayout) -> None:
    """Raise if some segment is too narrow to carry an MDS code of length K.

    Levels 1, K-1 and K work at any width (repetition, single parity, no
    parity). Other levels need symbols with at least K field elements.
    """
    for l, w in enumerate(layout.widths, start=1):
        if w == 0 or l in (1, layout.K - 1, layout.K):
            continue
        for m, _ in _chunks(w):
            if (1 << m) < layout.K:
                raise PetError(
                    f"level {l} is {w} columns wide; a ({l},{layout.K}) MDS code needs "
                    f"symbols of at least {math.ceil(math.log2(layout.K))} bits"
                )


def is_codable(layout: PetLayout) -> bool:
    try:
        check_codable(layout)
    except PetError:
        return False
    return True


def _as_bits(source_bits) -> np.ndarray:
    bits = np.asarray(source_bits, dtype=np.uint8).ravel()
    if bits.size and bits.max() > 1:
        raise ValueError("source bits must be 0/1")
    return bits


def encode(source_bits, layout: PetLayout, profile: PetProfile | None = None) -> list[np.ndarray]:
    """Split the first ``xi_K`` source bits into ``K`` descriptions of ``n*r`` bits each.

    Surplus input bits are ignored.
    """
    if profile is not None and profile.K != layout.K:
        raise PetError("profile and layout disagree on K")
    bits = _as_bits(source_bits)
    xi = layout.prefix_lengths
    if bits.size < xi[-1]:
        raise PetError(f"need {xi[-1]} source bits, got {bits.size}")
    check_codable(layout)
    K = layout.K
    matrix = np.zeros((K, layout.row_bits), dtype=np.uint8)
    for l, (w, c0) in enumerate(zip(layout.widths, layout.column_offsets), start=1):
        if w == 0:
            continue
        data = bits[xi[l - 1]:xi[l]].reshape(l, w)
        matrix[:l, c0:c0 + w] = data
        if l < K:
            matrix[l:, c0:c0 + w] = _segment_parity(data, K)
    return [matrix[i].copy() for i in range(K)]


def decode(received, layout: PetLayout, profile: PetProfile | None = None) -> np.ndarray:
    """Recover the first ``xi_l`` source bits from ``l`` distinct descriptions.

    ``received`` maps 1-based description index to payload, or is an iterable
    of ``(index, payload)`` pairs.
    """
    pairs = list(received.items()) if isinstance(received, dict) else list(received)
    rows: dict[int, np.ndarray] = {}
    for index, payload in pairs:
        index = int(index)
        if not 1 <= index <= layout.K:
            raise PetError(f"description index {index} outside 1..{layout.K}")
        if index - 1 in rows:
            raise PetError(f"duplicate description index {index}")
        payload = _as_bits(payload)
        if payload.size != layout.row_bits:
            raise PetError(f"description {index} has {payload.size} bits, expected {layout.row_bits}")
        rows[index - 1] = payload
    l = len(rows)
    xi = layout.prefix_lengths
    out = np.zeros(xi[l], dtype=np.uint8)
    for k in range(1, l + 1):
        w = layout.widths[k - 1]
        if w == 0:
            continue
        c0 = layout.column_offsets[k - 1]
        seg = {i: r[c0:c0 + w] for i, r in rows.items()}
        data = _segment_recover(dict(sorted(seg.items())[:k]), k, layout.K, w)
        out[xi[k - 1]:xi[k]] = data.ravel()
    return out


def pet_distortion(k: int, profile: PetProfile, drf: Callable[[float], float]) -> float:
    """Distortion with ``k`` descriptions: ``D(r * sum_{l<=k} l*y_l)``."""
    if not 0 <= k <= profile.K:
        raise ValueError(f"k={k} outside 0..{profile.K}")
    return float(drf(profile.effective_rate(k)))


def level_distortions(profile: PetProfile, drf: Callable[[float], float]) -> tuple[float, ...]:
    return tuple(pet_distortion(k, profile, drf) for k in range(profile.K + 1))
