"""Filtered complexes and spectral-sequence pages over F2.

Pages come from the subspace formula

    Z^r_p = {x in F_p : dx in F_{p-r}},
    E^r_p = Z^r_p / (Z^{r-1}_{p-1} + d Z^{r-1}_{p+r-1}),

where F_p is the span of generators with filtration index <= p.  A
filtration whose differential raises the level is handled by reversing the
index, and reports are always keyed by the original level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence

from .complexbuilder import (
    FLAT,
    ModelComplex,
    NModel,
    TotalBounds,
    VModel,
    build_ecc_j,
    build_quotient_complex,
    build_total_complex,
    build_U0,
    mapping_cone,
)
from .errors import ClaimFailed, DirectionViolated
from .f2core import EchelonBasis, F2Matrix, homology_basis, kernel_basis_bits, kernel_combos, rank
from .orbitsets import OrbitSet, multiply

NONINCREASING = "nonincreasing"
NONDECREASING = "nondecreasing"

# feature read by each named filtration and the direction the differential moves it
FILTRATIONS = {
    "F": ("eta", NONINCREASING),
    "G": ("h", NONDECREASING),
    "Gprime": ("hp", NONINCREASING),
    "E": ("ep", NONINCREASING),
    "Fhat": ("eta", NONINCREASING),
    "Ehat": ("ep", NONINCREASING),
}


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    base: ModelComplex
    level: tuple[int, ...]
    direction: str
    name: str = ""

    def __post_init__(self):
        if self.direction not in (NONINCREASING, NONDECREASING):
            raise ValueError("direction must be nonincreasing or nondecreasing")
        if len(self.level) != self.base.dim:
            raise ValueError("one level per generator required")
        lv = self.level
        for c, col in enumerate(self.base.differential.cols_bits):
            v = col
            while v:
                low = v & -v
                r = low.bit_length() - 1
                bad = lv[r] > lv[c] if self.direction == NONINCREASING else lv[r] < lv[c]
                if bad:
                    raise DirectionViolated(
                        f"filtration {self.name or '?'} ({self.direction}) broken by "
                        f"{self.base.name(c)} -> {self.base.name(r)}"
                    )
                v ^= low
        object.__setattr__(self, "level", tuple(lv))

    @cached_property
    def index(self) -> tuple[int, ...]:
        """Increasing filtration index: the differential never raises it."""
        if self.direction == NONINCREASING:
            return self.level
        top = max(self.level, default=0)
        return tuple(top - x for x in self.level)

    def to_level(self, q: int) -> int:
        if self.direction == NONINCREASING:
            return q
        return max(self.level, default=0) - q


def make_filtration(c: ModelComplex, which: str) -> FilteredComplex:
    if which not in FILTRATIONS:
        raise ValueError(f"unknown filtration {which!r}; expected one of {sorted(FILTRATIONS)}")
    key, direction = FILTRATIONS[which]
    if key not in c.features:
        raise ValueError(f"complex {c.variant!r} carries no {key!r} grading for filtration {which}")
    return FilteredComplex(c, c.features[key], direction, which)


def associated_graded(fc: FilteredComplex) -> ModelComplex:
    """The complex (E^0, d_0): only level-preserving entries survive."""
    lv = fc.level
    n = fc.base.dim
    cols = []
    for c, col in enumerate(fc.base.differential.cols_bits):
        keep = 0
        v = col
        while v:
            low = v & -v
            if lv[low.bit_length() - 1] == lv[c]:
                keep |= low
            v ^= low
        cols.append(keep)
    b = fc.base
    return ModelComplex(
        b.generators,
        F2Matrix(n, n, tuple(cols)),
        b.actions,
        b.features,
        f"gr_{fc.name}({b.variant})",
        dict(b.bounds),
        b.names,
        b.strict_action,
    )


@dataclass(frozen=True)
class PageReport:
    r: int
    filtration: str
    grade_key: tuple[str, ...]
    dims: Mapping[tuple, int]
    differential_ranks: Mapping[tuple, int]
    collapsed: bool

    def dim_at(self, p: int) -> int:
        return sum(d for (q, _), d in self.dims.items() if q == p)

    def total(self) -> int:
        return sum(self.dims.values())


class _PageEngine:
    """Subspace-formula pages of one filtered complex (no grade splitting)."""

    def __init__(self, d: F2Matrix, index: Sequence[int]):
        self.d = d
        self.idx = list(index)
        self.qs = sorted(set(self.idx))
        self._z: dict[tuple[int, int], list[int]] = {}

    def F(self, q: int) -> list[int]:
        return [i for i, x in enumerate(self.idx) if x <= q]

    def Z(self, r: int, q: int) -> list[int]:
        key = (r, q)
        hit = self._z.get(key)
        if hit is not None:
            return hit
        cols = self.F(q)
        if r <= 0 or not cols:
            out = [1 << i for i in cols]
        else:
            # components of dx outside F_{q-r}
            mask = 0
            for i, x in enumerate(self.idx):
                if x > q - r:
                    mask |= 1 << i
            cb = self.d.cols_bits
            out = []
            for combo in kernel_combos([cb[i] & mask for i in cols]):
                v = 0
                while combo:
                    low = combo & -combo
                    v |= 1 << cols[low.bit_length() - 1]
                    combo ^= low
                out.append(v)
        self._z[key] = out
        return out

    def page_dim(self, r: int, q: int) -> int:
        z = self.Z(r, q)
        if not z:
            return 0
        den = EchelonBasis(self.Z(r - 1, q - 1))
        for x in self.Z(r - 1, q + r - 1):
            den.add(self.d.apply(x))
        return len(z) - len(den)

    def diff_rank(self, r: int, q: int) -> int:
        z = self.Z(r, q)
        if not z:
            return 0
        ker = EchelonBasis(self.Z(r + 1, q))
        for x in self.Z(r - 1, q - 1):
            ker.add(x)
        return len(z) - len(ker)


def _split_blocks(fc: FilteredComplex, grade_key: Sequence[str], r: int):
    """Yield (grade, block_matrix, block_index) for a grade-homogeneous split,
    or None when the relevant differential mixes grades."""
    b = fc.base
    grades = list(zip(*(b.features[k] for k in grade_key)))
    d = b.differential if r >= 2 else associated_graded(fc).differential
    for c, col in enumerate(d.cols_bits):
        v = col
        while v:
            low = v & -v
            if grades[low.bit_length() - 1] != grades[c]:
                return None
            v ^= low
    blocks: dict[tuple, list[int]] = {}
    for i, g in enumerate(grades):
        blocks.setdefault(g, []).append(i)
    out = []
    for g in sorted(blocks):
        ids = blocks[g]
        out.append((g, d.submatrix(ids, ids), [fc.index[i] for i in ids]))
    return out


def page(fc: FilteredComplex, r: int, grade_key: Optional[Sequence[str]] = None, check_collapse: bool = True) -> PageReport:
    """E^r of the spectral sequence of ``fc``.

    With ``grade_key`` the dims are split by that internal grade, which
    requires the differential that matters for page r (the level-preserving
    part when r <= 1, the whole differential otherwise) to preserve it.
    Otherwise dims are keyed by (level, '*').
    """
    if r < 0:
        raise ValueError("page number must be >= 0")
    key = tuple(grade_key) if grade_key else ()
    blocks = _split_blocks(fc, key, r) if key else None
    if key and blocks is None:
        raise ValueError(f"differential is not homogeneous in {key}; cannot split page {r} by it")
    if blocks is None:
        blocks = [("*", fc.base.differential if r >= 1 else associated_graded(fc).differential, list(fc.index))]
    dims: dict[tuple, int] = {}
    ranks: dict[tuple, int] = {}
    collapsed = True
    qmin = min(fc.index, default=0)
    qmax = max(fc.index, default=0)
    span = qmax - qmin
    for g, d, idx in blocks:
        eng = _PageEngine(d, idx)
        for q in eng.qs:
            dim = eng.page_dim(r, q)
            if dim:
                dims[(fc.to_level(q), g)] = dim
            if r >= 1:
                rk = eng.diff_rank(r, q)
                if rk:
                    ranks[(fc.to_level(q), g)] = rk
        if check_collapse and r >= 1:
            for s in range(r, span + 1):
                if any(eng.diff_rank(s, q) for q in eng.qs):
                    collapsed = False
                    break
    if r == 0:
        collapsed = False if span > 0 and any(fc.base.differential.cols_bits) else True
    return PageReport(r, fc.name, key or ("*",), dims, ranks, collapsed)


def infinity_page(fc: FilteredComplex, grade_key: Optional[Sequence[str]] = None) -> PageReport:
    span = max(fc.index, default=0) - min(fc.index, default=0)
    return page(fc, span + 1, grade_key, check_collapse=False)


# ---------------------------------------------------------------- claims


@dataclass
class ClaimsReport:
    passed: bool
    checks: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


def _prime_chain(n: NModel, x: OrbitSet) -> list[set]:
    """[x, d'x, d'^2 x, ...] until zero (terminates since d' lowers action)."""
    out = [{x}]
    cur = {x}
    while cur:
        nxt: set = set()
        for t in cur:
            for u in n.prime_image(t):
                nxt ^= {u}
        if not nxt:
            break
        out.append(nxt)
        cur = nxt
        if len(out) > 10_000:
            raise ClaimFailed("right-inverse", "d' does not appear nilpotent")
    return out


def check_intermediate_claims(
    v: VModel,
    n: NModel,
    bounds: TotalBounds,
    guard: int = 2,
    total: Optional[ModelComplex] = None,
    raise_on_failure: bool = True,
) -> ClaimsReport:
    """Verify the page computations behind the main and hat theorems on
    the truncation ``bounds`` of V (x) N (V post-limit)."""
    W, J = bounds.total_degree, bounds.interior_cap
    T = total if total is not None else build_total_complex(v, n, bounds)
    rep = ClaimsReport(True)
    flat_dims = {j: build_ecc_j(n, j, FLAT, J).homology_dim() for j in range(W + 1)}
    qdim = build_quotient_complex(n, FLAT, J).homology_dim()

    def record(name: str, ok: bool, detail: str = ""):
        rep.checks[name] = ok
        if not ok:
            rep.passed = False
            rep.notes.append(f"{name}: {detail}")
            if raise_on_failure:
                raise ClaimFailed(name, detail)

    jflat = tuple(a - b for a, b in zip(T.features["jN"], T.features["h"]))
    feats = dict(T.features)
    feats["jflat"] = jflat
    T = ModelComplex(T.generators, T.differential, T.actions, feats, T.variant, dict(T.bounds), T.names, T.strict_action)

    # (i) E^1(G') on (E^0(G), d_00)
    fcG = make_filtration(T, "G")
    E0G = associated_graded(fcG)
    fcGp = make_filtration(E0G, "Gprime")
    p1 = page(fcGp, 1, ("h", "ep", "jflat"), check_collapse=False)
    bad = []
    present = set(zip(E0G.features["hp"], E0G.features["h"], E0G.features["ep"], E0G.features["jflat"]))
    for k, b, m, jf in sorted(present):
        got = p1.dims.get((k, (b, m, jf)), 0)
        if got != flat_dims[jf]:
            bad.append(((k, b, m, jf), got, flat_dims[jf]))
    record("E1(G') = F[h',h] (x) ECH_flat(V) (x) ECH_flat(N)", not bad, f"mismatches {bad[:3]}")

    # (ii) E^2_{k,1}(G') = 0
    p2 = page(fcGp, 2, ("h",), check_collapse=False)
    nz = {key: d for key, d in p2.dims.items() if key[0] == 1}
    record("E2_{k,1}(G') = 0", not nz, f"nonzero cells {nz}")

    # (iii) E^1(G) = F[e',h] (x) ECH(N, dN) in the stable window
    g1 = page(fcG, 1, ("ep",), check_collapse=False)
    bad = []
    for b in (0, 1):
        for m in range(W + 1):
            top = W - m - b
            if top < 0:
                continue
            got = g1.dims.get((b, (m,)), 0)
            want = flat_dims[top]
            if got != want or (top >= J and got != qdim):
                bad.append(((b, m), got, want, qdim))
    record("E1(G) = F[e',h] (x) ECH(N,dN)", not bad, f"mismatches {bad[:3]}")

    # (iv) d_01 surjective with a chain-level right inverse s
    record_s = _check_right_inverse(v, n, T, fcG, E0G, W, J)
    record("d_01 surjective, d_01 s = id", record_s is None, record_s or "")

    # (v) E^2_1(G) = 0 and E^2_0(G) = H(total)
    g2 = page(fcG, 2, check_collapse=False)
    hdim = T.homology_dim()
    record("E2_1(G) = 0", g2.dim_at(1) == 0 and g2.dim_at(0) == hdim, f"E2 dims {dict(g2.dims)}, H={hdim}")

    # E^1_p(F) = 0 for p > 0
    f1 = page(make_filtration(T, "F"), 1, check_collapse=False)
    pos = {k: d for k, d in f1.dims.items() if k[0] > 0}
    record("E1_p(F) = 0 for p > 0", not pos and f1.dim_at(0) == hdim, f"cells {pos}")

    # (vi) hat version: E^2_n(Ehat) = 0 for n > 0 inside the guarded window
    u = build_U0(T, v, n)
    cone = mapping_cone(u, T)
    fcE = make_filtration(cone, "Ehat")
    e2 = page(fcE, 2, check_collapse=False)
    window = W - J - guard
    bad_cells = {k: d for k, d in e2.dims.items() if 0 < k[0] <= window}
    qfull = build_quotient_complex(n, "full", J).homology_dim()
    ok0 = e2.dim_at(0) == qfull
    record(
        "E2_n(Ehat) = 0 for n > 0",
        not bad_cells and ok0,
        f"cells {bad_cells}, E2_0={e2.dim_at(0)} vs hat {qfull}",
    )
    return rep


def _check_right_inverse(v, n, T, fcG, E0G, W, J) -> Optional[str]:
    """Return None on success, otherwise a description of the failure."""
    lv = fcG.level
    L0 = [i for i in range(T.dim) if lv[i] == 0]
    L1 = [i for i in range(T.dim) if lv[i] == 1]
    d00 = E0G.differential
    full = T.differential
    ep1 = OrbitSet.single(v.ep)
    h1 = OrbitSet.single(n.h)
    # homology of the level-1 piece
    sub1 = d00.submatrix(L1, L1)
    reps_needed = len(kernel_basis_bits(sub1)) - _rank_of(sub1)
    bnd1 = EchelonBasis(d00.apply(1 << i) for i in L1)
    base = len(bnd1)
    for m in range(W):
        top = W - m - 1
        C = build_ecc_j(n, top, FLAT, J)
        cycles, _ = homology_basis(C.differential, C.differential)
        for z in cycles:
            gam = C.labels_of(z)
            x = 0
            s = 0
            for G in gam:
                x ^= 1 << T.index[(_pow(ep1, m), multiply(h1, G))]
                for i, layer in enumerate(_prime_chain(n, G), start=1):
                    for t in layer:
                        key = (_pow(ep1, m + i), t)
                        if key not in T.index:
                            return f"s leaves the truncation at {key}"
                        s ^= 1 << T.index[key]
            if d00.apply(s):
                return f"s(x) is not a d_00-cycle for x={gam}"
            raised = full.apply(s) ^ d00.apply(s)
            if raised != x:
                return f"d_01 s(x) != x for x = e'^{m} h {gam}"
            bnd1.add(x)
    if len(bnd1) - base != reps_needed:
        return f"image of d_01 has rank {len(bnd1) - base}, E1_1(G) has dim {reps_needed}"
    return None


def _pow(o: OrbitSet, k: int) -> OrbitSet:
    out = OrbitSet()
    for _ in range(k):
        out = multiply(out, o)
    return out


def _rank_of(m: F2Matrix) -> int:
    return rank(m)
