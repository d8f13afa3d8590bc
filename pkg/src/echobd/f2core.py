"""Sparse linear algebra over GF(2).

Vectors are Python ints used as bitsets (bit i set <=> coordinate i is 1).
A matrix stores one bitset per column, so ``m.cols_bits[c]`` is the image
of basis vector ``c``.  Everything here is exact and deterministic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import CompositionNonzero, NotChainMap


def bits_of(support: Iterable[int]) -> int:
    out = 0
    for i in support:
        out ^= 1 << i
    return out


def support_of(bits: int) -> list[int]:
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return out


@dataclass(frozen=True)
class F2Vector:
    bits: int = 0

    @classmethod
    def from_support(cls, support: Iterable[int]) -> "F2Vector":
        return cls(bits_of(support))

    @property
    def support(self) -> frozenset[int]:
        return frozenset(support_of(self.bits))

    def __add__(self, other: "F2Vector") -> "F2Vector":
        return F2Vector(self.bits ^ other.bits)

    def __bool__(self) -> bool:
        return self.bits != 0

    def __repr__(self) -> str:
        return f"F2Vector({sorted(self.support)})"


@dataclass(frozen=True)
class F2Matrix:
    rows: int
    cols: int
    cols_bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.cols_bits) != self.cols:
            raise ValueError("column count mismatch")
        limit = 1 << self.rows
        for c in self.cols_bits:
            if c < 0 or c >= limit:
                raise ValueError("entry row index out of bounds")

    # constructors

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "F2Matrix":
        return cls(rows, cols, (0,) * cols)

    @classmethod
    def identity(cls, n: int) -> "F2Matrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries: Iterable[tuple[int, int]]) -> "F2Matrix":
        colv = [0] * cols
        for r, c in entries:
            if not (0 <= r < rows and 0 <= c < cols):
                raise ValueError(f"entry ({r}, {c}) outside {rows}x{cols}")
            colv[c] ^= 1 << r
        return cls(rows, cols, tuple(colv))

    @classmethod
    def from_columns(cls, rows: int, columns: Sequence[int]) -> "F2Matrix":
        return cls(rows, len(columns), tuple(columns))

    @classmethod
    def from_dense(cls, dense) -> "F2Matrix":
        dense = [list(row) for row in dense]
        rows = len(dense)
        cols = len(dense[0]) if rows else 0
        return cls.from_entries(
            rows, cols, ((r, c) for r in range(rows) for c in range(cols) if int(dense[r][c]) % 2)
        )

    @classmethod
    def random(cls, rows: int, cols: int, rng: random.Random, density: float = 0.5) -> "F2Matrix":
        entries = [(r, c) for c in range(cols) for r in range(rows) if rng.random() < density]
        return cls.from_entries(rows, cols, entries)

    # views

    @property
    def entries(self) -> frozenset[tuple[int, int]]:
        return frozenset((r, c) for c, col in enumerate(self.cols_bits) for r in support_of(col))

    def to_dense(self) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for r, c in self.entries:
            out[r][c] = 1
        return out

    def row_bits(self) -> list[int]:
        rowv = [0] * self.rows
        for c, col in enumerate(self.cols_bits):
            for r in support_of(col):
                rowv[r] |= 1 << c
        return rowv

    def is_zero(self) -> bool:
        return not any(self.cols_bits)

    def nnz(self) -> int:
        return sum(c.bit_count() for c in self.cols_bits)

    # algebra

    def apply(self, v: int) -> int:
        """Image of the bitset vector ``v``."""
        out = 0
        cb = self.cols_bits
        while v:
            low = v & -v
            out ^= cb[low.bit_length() - 1]
            v ^= low
        return out

    def __matmul__(self, other: "F2Matrix") -> "F2Matrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        return F2Matrix(self.rows, other.cols, tuple(self.apply(c) for c in other.cols_bits))

    def __add__(self, other: "F2Matrix") -> "F2Matrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return F2Matrix(self.rows, self.cols, tuple(a ^ b for a, b in zip(self.cols_bits, other.cols_bits)))

    def transpose(self) -> "F2Matrix":
        return F2Matrix(self.cols, self.rows, tuple(self.row_bits()))

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "F2Matrix":
        """Restrict to the given rows and columns (renumbered in order)."""
        row_idx = list(row_idx)
        cb = self.cols_bits
        if row_idx == list(range(self.rows)):
            return F2Matrix(self.rows, len(col_idx), tuple(cb[c] for c in col_idx))
        mask = 0
        for r in row_idx:
            mask |= 1 << r
        pos = {r: i for i, r in enumerate(row_idx)}
        cols = []
        for c in col_idx:
            v = cb[c] & mask
            out = 0
            while v:
                low = v & -v
                out |= 1 << pos[low.bit_length() - 1]
                v ^= low
            cols.append(out)
        return F2Matrix(len(row_idx), len(col_idx), tuple(cols))


# elimination


class EchelonBasis:
    """Row-echelon basis of a subspace of GF(2)^n, keyed by top bit."""

    def __init__(self, vectors: Iterable[int] = ()):
        self.pivots: dict[int, int] = {}
        for v in vectors:
            self.add(v)

    def reduce(self, v: int) -> int:
        piv = self.pivots
        while v:
            b = piv.get(v.bit_length() - 1)
            if b is None:
                return v
            v ^= b
        return 0

    def add(self, v: int) -> bool:
        v = self.reduce(v)
        if not v:
            return False
        self.pivots[v.bit_length() - 1] = v
        return True

    def contains(self, v: int) -> bool:
        return self.reduce(v) == 0

    def __len__(self) -> int:
        return len(self.pivots)

    def basis(self) -> list[int]:
        return [self.pivots[k] for k in sorted(self.pivots)]


def span_dim(vectors: Iterable[int]) -> int:
    return len(EchelonBasis(vectors))


def rank(m: F2Matrix) -> int:
    return span_dim(m.cols_bits)


def kernel_combos(columns: Sequence[int]) -> list[int]:
    """Kernel of the map whose i-th column is ``columns[i]``, as bitsets
    over column positions."""
    piv: dict[int, tuple[int, int]] = {}
    kernel = []
    for c, col in enumerate(columns):
        v, combo = col, 1 << c
        while v:
            hit = piv.get(v.bit_length() - 1)
            if hit is None:
                break
            v ^= hit[0]
            combo ^= hit[1]
        if v:
            piv[v.bit_length() - 1] = (v, combo)
        else:
            kernel.append(combo)
    return kernel


def kernel_basis_bits(m: F2Matrix) -> list[int]:
    """Kernel of ``m`` as bitsets over the column index set."""
    return kernel_combos(m.cols_bits)


def kernel_basis(m: F2Matrix) -> list[F2Vector]:
    return [F2Vector(b) for b in kernel_basis_bits(m)]


def check_complex(d_in: F2Matrix, d_out: F2Matrix) -> None:
    if d_in.rows != d_out.cols:
        raise ValueError("d_in.rows must equal d_out.cols")
    if not (d_out @ d_in).is_zero():
        raise CompositionNonzero("d_out o d_in != 0")


def homology_dim(d_in: F2Matrix, d_out: F2Matrix) -> int:
    """dim ker(d_out) / im(d_in)."""
    check_complex(d_in, d_out)
    return d_out.cols - rank(d_out) - rank(d_in)


def homology_basis(d_in: F2Matrix, d_out: F2Matrix) -> tuple[list[int], EchelonBasis]:
    """Cycle representatives of a homology basis, plus the boundary span."""
    check_complex(d_in, d_out)
    bnd = EchelonBasis(d_in.cols_bits)
    reps = []
    acc = EchelonBasis(bnd.basis())
    for z in kernel_basis_bits(d_out):
        if acc.add(z):
            reps.append(z)
    return reps, bnd


@dataclass(frozen=True)
class TwoStep:
    """C_in --d_in--> C --d_out--> C_out, the slice of a complex around C."""

    d_in: F2Matrix
    d_out: F2Matrix

    @classmethod
    def ungraded(cls, d: F2Matrix) -> "TwoStep":
        return cls(d, d)

    @property
    def dim(self) -> int:
        return self.d_out.cols


def induced_map_rank(f: F2Matrix, src: TwoStep, dst: TwoStep, check: bool = True) -> int:
    """Rank of the map induced on homology by ``f``.

    With ``check`` the map must send cycles to cycles and boundaries to
    boundaries, which is exactly what is needed for it to descend.
    """
    if f.cols != src.dim or f.rows != dst.dim:
        raise ValueError("chain map shape does not match complexes")
    cycles = kernel_basis_bits(src.d_out)
    bnd = EchelonBasis(dst.d_in.cols_bits)
    if check:
        for z in cycles:
            if dst.d_out.apply(f.apply(z)):
                raise NotChainMap("a cycle is not sent to a cycle")
        for b in src.d_in.cols_bits:
            if not bnd.contains(f.apply(b)):
                raise NotChainMap("a boundary is not sent to a boundary")
    base = len(bnd)
    for z in cycles:
        bnd.add(f.apply(z))
    return len(bnd) - base


def is_chain_map(f: F2Matrix, d_src: F2Matrix, d_dst: F2Matrix) -> bool:
    return (d_dst @ f) == (f @ d_src)


induced_map_dims = induced_map_rank
