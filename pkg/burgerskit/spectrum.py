from __future__ import annotations

import dataclasses
import logging
import math
import typing as t

import numpy as np

if t.TYPE_CHECKING:
    from burgerskit.types import FloatArray, IntArray

logger = logging.getLogger("burgerskit")


@dataclasses.dataclass(frozen=True)
class SpectrumEntry:
    value: float
    multiplicity: int
    representative: tuple[int, ...]
    norm2: int


@dataclasses.dataclass(frozen=True)
class SpectrumTable:
    """
    Distinct eigenvalues (2 pi / L)^2 |k|^2 of -Laplacian on the periodic box,
    for integer |k|^2 up to cutoff, in increasing order.
    """

    d: int
    L: float
    cutoff: int
    entries: tuple[SpectrumEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, n: int) -> SpectrumEntry:
        return self.entries[n]

    @property
    def scale(self) -> float:
        return (2 * math.pi / self.L) ** 2

    @property
    def norm2s(self) -> IntArray:
        return np.array([e.norm2 for e in self.entries], dtype=np.int64)

    @property
    def values(self) -> FloatArray:
        return self.scale * self.norm2s.astype(float)

    def value(self, n: int) -> float:
        return self.scale * self.entries[n].norm2

    def dimension(self, n: int) -> int:
        """Number of lattice modes with eigenvalue at most the n-th one."""
        return sum(e.multiplicity for e in self.entries[: n + 1])


def enumerate_eigenvalues(d: int, L: float, cutoff: int) -> SpectrumTable:
    if cutoff < 1:
        raise ValueError(f"cutoff must be at least 1, got {cutoff}")
    if d not in (1, 2):
        raise ValueError(f"Unsupported dimension {d}")
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    K = math.isqrt(cutoff)
    scale = (2 * math.pi / L) ** 2
    if d == 1:
        entries = tuple(
            SpectrumEntry(scale * k * k, 1 if k == 0 else 2, (k,), k * k) for k in range(K + 1)
        )
        return SpectrumTable(d, L, cutoff, entries)

    axis = np.arange(-K, K + 1, dtype=np.int64)
    norm2 = (axis[:, None] ** 2 + axis[None, :] ** 2).ravel()
    counts = np.bincount(norm2[norm2 <= cutoff], minlength=cutoff + 1)

    # representative with a >= b >= 0 and the smallest b
    a, b = np.meshgrid(np.arange(K + 1), np.arange(K + 1), indexing="ij")
    a, b = a.ravel(), b.ravel()
    keep = (b <= a) & (a * a + b * b <= cutoff)
    a, b = a[keep], b[keep]
    n2 = a * a + b * b
    order = np.lexsort((b, n2))
    distinct, first = np.unique(n2[order], return_index=True)
    entries = tuple(
        SpectrumEntry(scale * int(n), int(counts[n]), (int(a[order][i]), int(b[order][i])), int(n))
        for n, i in zip(distinct, first)
    )
    logger.debug("Enumerated %s distinct eigenvalues up to |k|^2 = %s", len(entries), cutoff)
    return SpectrumTable(d, L, cutoff, entries)


def integer_gaps(table: SpectrumTable) -> list[tuple[int, int]]:
    n2 = table.norm2s
    return [(n, int(g)) for n, g in enumerate(np.diff(n2))]


def gaps(table: SpectrumTable) -> list[tuple[int, float]]:
    return [(n, table.scale * g) for n, g in integer_gaps(table)]


def first_index_with_gap(table: SpectrumTable, g: float) -> t.Optional[int]:
    for n, gap in gaps(table):
        if gap >= g:
            return n
    return None


def check_sgc(
    table: SpectrumTable,
    C: float,
    alpha: float = 1.0,
    beta: float = 1.0,
    strict: bool = True,
) -> t.Optional[int]:
    """
    Smallest n with lambda_{n+1} - lambda_n > 2C (lambda_n^e + lambda_{n+1}^e),
    e = (alpha - beta) / 2; strict=False accepts equality.
    """
    if not 0 <= alpha - beta <= 1:
        raise ValueError(f"Need 0 <= alpha - beta <= 1, got {alpha - beta}")
    if C < 0:
        raise ValueError(f"C must be non-negative, got {C}")
    values = table.values
    if values.size < 2:
        return None
    exponent = (alpha - beta) / 2
    powered = np.power(values, exponent)
    gap = np.diff(values)
    rhs = 2 * C * (powered[:-1] + powered[1:])
    satisfied = gap > rhs if strict else gap >= rhs
    hits = np.flatnonzero(satisfied)
    return int(hits[0]) if hits.size else None


def gap_growth(table: SpectrumTable) -> list[tuple[int, float, float]]:
    """Record-setting gaps as (n, log n, gap), the raw data for gap growth plots."""
    rows = []
    best = -math.inf
    for n, gap in gaps(table):
        if gap > best:
            best = gap
            rows.append((n, math.log(n) if n > 0 else 0.0, gap))
    return rows
