"""Chain complexes built from combinatorial model data.

N-side generators are orbit sets over the interior orbits plus the
boundary pair ``e`` (elliptic) and ``h`` (hyperbolic).  V-side generators
use ``e'`` and ``h'``.  Toy differentials are given on e-free, h-free
monomials and extended e-equivariantly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Mapping, Optional, Sequence

from .errors import InvalidModel, NotChainMap, NotStabilized
from .f2core import (
    EchelonBasis,
    F2Matrix,
    TwoStep,
    homology_dim,
    induced_map_rank,
    kernel_basis_bits,
    rank,
    support_of,
)
from .orbitsets import (
    ELLIPTIC,
    EMPTY,
    HYPERBOLIC,
    OrbitSet,
    SimpleOrbit,
    action,
    divide,
    grade,
    multiply,
)

DEFAULT_BOUNDARY_ACTIONS = {"h": 1.0, "e": 1.1, "h'": 1.2, "e'": 1.3}

FULL, FLAT, SHARP = "full", "flat", "sharp"
VARIANTS = (FULL, FLAT, SHARP)


def boundary_orbits(actions: Optional[Mapping[str, float]] = None) -> dict[str, SimpleOrbit]:
    acts = dict(DEFAULT_BOUNDARY_ACTIONS)
    if actions:
        acts.update(actions)
    if not acts["e'"] > acts["h'"] > acts["e"] > acts["h"] > 0:
        raise InvalidModel("boundary actions must satisfy A(e') > A(h') > A(e) > A(h) > 0")
    return {
        "e": SimpleOrbit("e", ELLIPTIC, acts["e"]),
        "h": SimpleOrbit("h", HYPERBOLIC, acts["h"]),
        "e'": SimpleOrbit("e'", ELLIPTIC, acts["e'"]),
        "h'": SimpleOrbit("h'", HYPERBOLIC, acts["h'"]),
    }


def _toggle(acc: set, item) -> None:
    if item is None:
        return
    if item in acc:
        acc.remove(item)
    else:
        acc.add(item)


def _power(o: SimpleOrbit, k: int) -> OrbitSet:
    return OrbitSet.single(o, k) if k else EMPTY


def monomials(orbits: Sequence[SimpleOrbit], max_degree: int) -> list[OrbitSet]:
    """All orbit sets over ``orbits`` with total page degree <= max_degree."""
    out: list[OrbitSet] = []
    orbits = sorted(orbits, key=lambda o: o.name)

    def rec(i: int, left: int, acc: list):
        if i == len(orbits):
            out.append(OrbitSet.of(acc))
            return
        o = orbits[i]
        top = 1 if o.hyperbolic else (left // o.page_degree if o.page_degree else 0)
        if o.page_degree == 0 and not o.hyperbolic:
            raise InvalidModel(f"elliptic orbit {o.name!r} with page_degree 0 gives infinitely many monomials")
        for k in range(top + 1):
            if k * o.page_degree > left:
                break
            rec(i + 1, left - k * o.page_degree, acc + ([(o, k)] if k else []))

    rec(0, max_degree, [])
    out.sort(key=lambda g: (grade(g)[0], g._key))
    return out


# ---------------------------------------------------------------- complexes


@dataclass(frozen=True, eq=False)
class ModelComplex:
    """Finite F2 complex with labelled, action-graded generators."""

    generators: tuple
    differential: F2Matrix
    actions: tuple[float, ...]
    features: Mapping[str, tuple[int, ...]]
    variant: str = ""
    bounds: Mapping = field(default_factory=dict)
    names: tuple[str, ...] = ()
    strict_action: bool = True

    def __post_init__(self):
        n = len(self.generators)
        d = self.differential
        if d.rows != n or d.cols != n:
            raise ValueError("differential must be square on the generator set")
        if not (d @ d).is_zero():
            raise InvalidModel(f"{self.variant}: differential does not square to zero")
        if self.strict_action:
            acts = self.actions
            for c, col in enumerate(d.cols_bits):
                v = col
                while v:
                    low = v & -v
                    r = low.bit_length() - 1
                    if not acts[r] < acts[c] - 1e-12:
                        raise InvalidModel(
                            f"{self.variant}: entry {self.name(c)} -> {self.name(r)} does not decrease action"
                        )
                    v ^= low
        if not self.names:
            object.__setattr__(self, "names", tuple(_label_name(g) for g in self.generators))

    @cached_property
    def index(self) -> dict:
        return {g: i for i, g in enumerate(self.generators)}

    @property
    def dim(self) -> int:
        return len(self.generators)

    def name(self, i: int) -> str:
        return self.names[i] if self.names else _label_name(self.generators[i])

    def feature(self, key: str) -> tuple[int, ...]:
        return self.features[key]

    def homology_dim(self) -> int:
        return homology_dim(self.differential, self.differential)

    def two_step(self) -> TwoStep:
        return TwoStep.ungraded(self.differential)

    def boundary_of(self, label) -> list:
        col = self.differential.cols_bits[self.index[label]]
        return [self.generators[i] for i in range(self.dim) if col >> i & 1]

    def vector(self, labels: Iterable) -> int:
        out = 0
        for g in labels:
            out ^= 1 << self.index[g]
        return out

    def labels_of(self, bits: int) -> list:
        return [self.generators[i] for i in range(self.dim) if bits >> i & 1]

    def restrict(self, keep: Sequence[int], variant: Optional[str] = None, require_closed: bool = True) -> "ModelComplex":
        """Complex on the generators ``keep``.  With ``require_closed`` the
        span must be a subcomplex; otherwise terms leaving it are dropped,
        which is only legitimate when the complement is a subcomplex."""
        keep = list(keep)
        keepbits = 0
        for i in keep:
            keepbits |= 1 << i
        if require_closed:
            for i in keep:
                if self.differential.cols_bits[i] & ~keepbits:
                    raise InvalidModel("restriction is not a subcomplex")
        d = self.differential.submatrix(keep, keep)
        return ModelComplex(
            tuple(self.generators[i] for i in keep),
            d,
            tuple(self.actions[i] for i in keep),
            {k: tuple(v[i] for i in keep) for k, v in self.features.items()},
            variant or self.variant,
            dict(self.bounds),
            tuple(self.names[i] for i in keep),
            self.strict_action,
        )

    def reorder(self, key: str) -> "ModelComplex":
        """Same complex with generators stably sorted by a feature."""
        vals = self.features[key]
        order = sorted(range(self.dim), key=lambda i: vals[i])
        return self.restrict(order, require_closed=False)

    def edges(self) -> list[tuple[str, str]]:
        out = []
        for c, col in enumerate(self.differential.cols_bits):
            for r in range(self.dim):
                if col >> r & 1:
                    out.append((self.name(c), self.name(r)))
        return out


def _label_name(g) -> str:
    if isinstance(g, OrbitSet):
        return str(g)
    if isinstance(g, tuple) and len(g) == 2 and isinstance(g[0], OrbitSet):
        return f"{g[0]}|{g[1]}"
    if isinstance(g, tuple) and len(g) == 2 and g[0] in (0, 1):
        return f"{'ab'[g[0]]}:{_label_name(g[1])}"
    return str(g)


def assemble(
    labels: Sequence[Hashable],
    boundary: Callable[[Hashable], Iterable],
    action_of: Callable[[Hashable], float],
    feature_of: Callable[[Hashable], Mapping[str, int]],
    variant: str,
    bounds: Optional[Mapping] = None,
    outside: str = "error",
    strict_action: bool = True,
) -> ModelComplex:
    """Build a ModelComplex from a boundary rule.

    ``outside='drop'`` discards terms whose label is not a generator (a
    quotient truncation); ``'error'`` insists the span is closed.
    """
    labels = list(labels)
    idx = {g: i for i, g in enumerate(labels)}
    cols = []
    for g in labels:
        v = 0
        for t in boundary(g):
            i = idx.get(t)
            if i is None:
                if outside == "drop":
                    continue
                raise InvalidModel(f"{variant}: boundary of {_label_name(g)} leaves the generator set ({_label_name(t)})")
            v ^= 1 << i
        cols.append(v)
    feats: dict[str, list[int]] = {}
    for g in labels:
        for k, val in feature_of(g).items():
            feats.setdefault(k, []).append(val)
    return ModelComplex(
        tuple(labels),
        F2Matrix(len(labels), len(labels), tuple(cols)),
        tuple(action_of(g) for g in labels),
        {k: tuple(v) for k, v in feats.items()},
        variant,
        dict(bounds or {}),
        strict_action=strict_action,
    )


# ------------------------------------------------------------------ N model


def _as_map(data) -> tuple[tuple[OrbitSet, tuple[OrbitSet, ...]], ...]:
    items = data.items() if isinstance(data, Mapping) else data
    out = []
    for src, tgts in items:
        acc: set = set()
        for t in tgts:
            _toggle(acc, t)
        if acc:
            out.append((src, tuple(sorted(acc))))
    out.sort(key=lambda t: t[0]._key)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class NModel:
    """Combinatorial stand-in for the chain complex of the mapping torus N.

    ``d_flat`` sends an e-free, h-free monomial to monomials over the
    interior orbits and e with the same page degree.  ``d_prime`` sends it
    to monomials G' (same alphabet, page degree one less) standing for the
    terms h*G' of the differential.
    """

    interior: tuple[SimpleOrbit, ...] = ()
    d_flat: tuple = ()
    d_prime: tuple = ()
    e: SimpleOrbit = field(default_factory=lambda: boundary_orbits()["e"])
    h: SimpleOrbit = field(default_factory=lambda: boundary_orbits()["h"])
    name: str = "N"

    def __post_init__(self):
        object.__setattr__(self, "interior", tuple(sorted(self.interior, key=lambda o: o.name)))
        object.__setattr__(self, "d_flat", _as_map(self.d_flat))
        object.__setattr__(self, "d_prime", _as_map(self.d_prime))
        audit_nmodel(self)

    @classmethod
    def trivial(cls, **kw) -> "NModel":
        return cls(name=kw.pop("name", "trivial"), **kw)

    @classmethod
    def one_orbit(cls, page_degree: int = 1, orbit_action: float = 2.0, **kw) -> "NModel":
        g = SimpleOrbit("g1", ELLIPTIC, orbit_action, page_degree)
        return cls(interior=(g,), name=kw.pop("name", "one-orbit"), **kw)

    @cached_property
    def flat_map(self) -> dict[OrbitSet, tuple[OrbitSet, ...]]:
        return dict(self.d_flat)

    @cached_property
    def prime_map(self) -> dict[OrbitSet, tuple[OrbitSet, ...]]:
        return dict(self.d_prime)

    @cached_property
    def _split_cache(self) -> dict:
        return {}

    def split(self, x: OrbitSet) -> tuple[int, int, OrbitSet]:
        """x = e^a h^b G0 -> (a, b, G0)."""
        c = self._split_cache
        hit = c.get(x)
        if hit is None:
            a = x.mult(self.e)
            b = x.mult(self.h)
            g0 = OrbitSet(tuple((o, m) for o, m in x.factors if o.name not in (self.e.name, self.h.name)))
            hit = c[x] = (a, b, g0)
        return hit

    def interior_degree(self, x: OrbitSet) -> int:
        return grade(self.split(x)[2])[0]

    def flat_image(self, x: OrbitSet) -> set:
        """d_flat extended e-equivariantly to an h-free monomial."""
        a, b, g0 = self.split(x)
        acc: set = set()
        ea = _power(self.e, a)
        for t in self.flat_map.get(g0, ()):
            _toggle(acc, multiply(ea, t))
        return acc

    def prime_image(self, x: OrbitSet) -> set:
        a, b, g0 = self.split(x)
        acc: set = set()
        ea = _power(self.e, a)
        for t in self.prime_map.get(g0, ()):
            _toggle(acc, multiply(ea, t))
        return acc

    def boundary(self, x: OrbitSet, variant: str = FULL) -> set:
        """d_N on a monomial over interior + {e, h}."""
        a, b, g0 = self.split(x)
        hb = _power(self.h, b)
        core = OrbitSet.of([(self.e, a)] + list(g0.factors)) if b else x
        acc: set = set()
        for t in self.flat_image(core):
            _toggle(acc, multiply(hb, t))
        if not b and variant != FLAT:
            hh = OrbitSet.single(self.h)
            for t in self.prime_image(core):
                _toggle(acc, multiply(hh, t))
        if variant == SHARP:
            acc = {t for t in acc if not t.mult(self.e)}
        return acc

    def interior_monomials(self, max_degree: int) -> list[OrbitSet]:
        return monomials(self.interior, max_degree)


def audit_nmodel(m: NModel) -> None:
    """Raise InvalidModel naming the first violated admissibility rule."""
    names = [o.name for o in m.interior]
    if len(set(names)) != len(names):
        raise InvalidModel("interior orbit names must be unique")
    for o in m.interior:
        if o.name in ("e", "h", "e'", "h'"):
            raise InvalidModel(f"interior orbit may not use boundary name {o.name!r}")
        if o.page_degree < 1:
            raise InvalidModel(f"interior orbit {o.name!r} needs page_degree >= 1")
    if m.e.kind != ELLIPTIC or m.h.kind != HYPERBOLIC:
        raise InvalidModel("e must be elliptic and h hyperbolic")
    interior = set(m.interior)
    allowed = interior | {m.e}
    for label, data, shift in (("d_flat", m.d_flat, 0), ("d_prime", m.d_prime, 1)):
        for src, tgts in data:
            if any(o not in interior for o in src.orbits):
                raise InvalidModel(f"{label}: source {src} is not an interior monomial")
            js = grade(src)[0]
            for t in tgts:
                if any(o not in allowed for o in t.orbits):
                    raise InvalidModel(f"{label}: target {t} of {src} uses orbits outside interior+e")
                if grade(t)[0] != js - shift:
                    raise InvalidModel(f"{label}: entry {src} -> {t} violates page-degree compatibility")
                tact = action(t) + (m.h.action if shift else 0.0)
                if not tact < action(src) - 1e-12:
                    raise InvalidModel(f"{label}: entry {src} -> {t} does not decrease action")
    # d_flat^2 = 0 and d_flat d' + d' d_flat = 0 on every listed source
    sources = {s for s, _ in m.d_flat} | {s for s, _ in m.d_prime}
    for s in sorted(sources):
        acc: set = set()
        for t in m.flat_image(s):
            for u in m.flat_image(t):
                _toggle(acc, u)
        if acc:
            raise InvalidModel(f"(d_flat)^2 != 0 on {s}")
        acc = set()
        for t in m.flat_image(s):
            for u in m.prime_image(t):
                _toggle(acc, u)
        for t in m.prime_image(s):
            for u in m.flat_image(t):
                _toggle(acc, u)
        if acc:
            raise InvalidModel(f"d_flat d' + d' d_flat != 0 on {s}")


# ------------------------------------------------------------------ V model

PRE_LIMIT, POST_LIMIT, TOY = "pre-limit", "post-limit", "toy"


@dataclass(frozen=True, eq=False)
class VModel:
    variant: str = POST_LIMIT
    r: Optional[float] = None
    interior: tuple[SimpleOrbit, ...] = ()
    d_flat: tuple = ()
    d_prime: tuple = ()
    ep: SimpleOrbit = field(default_factory=lambda: boundary_orbits()["e'"])
    hp: SimpleOrbit = field(default_factory=lambda: boundary_orbits()["h'"])

    def __post_init__(self):
        if self.variant not in (PRE_LIMIT, POST_LIMIT, TOY):
            raise InvalidModel(f"unknown VModel variant {self.variant!r}")
        if self.variant == PRE_LIMIT and (self.r is None or not self.r > 0):
            raise InvalidModel("pre-limit VModel needs r > 0")
        if self.variant != TOY and (self.interior or self.d_flat or self.d_prime):
            raise InvalidModel("only toy VModels carry interior orbits")
        object.__setattr__(self, "d_flat", _as_map(self.d_flat))
        object.__setattr__(self, "d_prime", _as_map(self.d_prime))
        if self.variant == TOY:
            self._audit_toy()

    @classmethod
    def post_limit(cls, **kw) -> "VModel":
        return cls(POST_LIMIT, **kw)

    @classmethod
    def pre_limit(cls, r: float) -> "VModel":
        return cls(PRE_LIMIT, r=r)

    @cached_property
    def _flat(self) -> dict:
        return dict(self.d_flat)

    @cached_property
    def _prime(self) -> dict:
        if self.variant == POST_LIMIT:
            return {EMPTY: (EMPTY,)}
        return dict(self.d_prime)

    def split(self, x: OrbitSet) -> tuple[int, int, OrbitSet]:
        m = x.mult(self.ep)
        k = x.mult(self.hp)
        g0 = OrbitSet(tuple((o, c) for o, c in x.factors if o.name not in (self.ep.name, self.hp.name)))
        return m, k, g0

    def boundary(self, x: OrbitSet) -> set:
        """d_V(e'^m h'^k g0) = e'^m h'^k d_flat(g0) + k e'^m d'(g0)."""
        m, k, g0 = self.split(x)
        acc: set = set()
        pre = multiply(_power(self.ep, m), _power(self.hp, k))
        for t in self._flat.get(g0, ()):
            _toggle(acc, multiply(pre, t))
        if k:
            em = _power(self.ep, m)
            for t in self._prime.get(g0, ()):
                _toggle(acc, multiply(em, t))
        return acc

    def _audit_toy(self) -> None:
        interior = set(self.interior)
        for label, data, extra in (("d_flat_V", self.d_flat, 0.0), ("d_prime_V", self.d_prime, self.hp.action)):
            for src, tgts in data:
                if any(o not in interior for o in src.orbits):
                    raise InvalidModel(f"{label}: source {src} is not an interior monomial")
                for t in tgts:
                    if any(o not in interior for o in t.orbits):
                        raise InvalidModel(f"{label}: target {t} uses orbits outside the interior")
                    if not action(t) < action(src) + extra - 1e-12:
                        raise InvalidModel(f"{label}: entry {src} -> {t} does not decrease action")
        for s in sorted({s for s, _ in self.d_flat} | {s for s, _ in self.d_prime}):
            acc: set = set()
            for t in self._flat.get(s, ()):
                for u in self._flat.get(t, ()):
                    _toggle(acc, u)
            if acc:
                raise InvalidModel(f"(d_flat_V)^2 != 0 on {s}")
            for t in self._flat.get(s, ()):
                for u in self._prime.get(t, ()):
                    _toggle(acc, u)
            for t in self._prime.get(s, ()):
                for u in self._flat.get(t, ()):
                    _toggle(acc, u)
            if acc:
                raise InvalidModel(f"d_flat_V d'_V + d'_V d_flat_V != 0 on {s}")


def core_index(n: int, r: float) -> int:
    from .indices import core_absolute_index

    return core_absolute_index(n, r)


# ---------------------------------------------------------------- builders


@dataclass(frozen=True)
class Bounds:
    j_max: int = 6
    m_max: int = 6
    interior_cap: Optional[int] = None


def _n_features(m: NModel, x: OrbitSet) -> dict:
    a, b, g0 = m.split(x)
    return {"j": grade(x)[0], "g": grade(g0)[0], "e": a, "h": b, "eta": 0}


def _n_generators(m: NModel, variant: str, j_lo: int, j_hi: int, cap: Optional[int]) -> list[OrbitSet]:
    out = []
    top = j_hi if cap is None else min(cap, j_hi)
    for g0 in m.interior_monomials(top):
        gj = grade(g0)[0]
        for b in ((0, 1) if variant == FULL else (0,) if variant == FLAT else (0, 1)):
            for a in range(j_hi + 1):
                if variant == SHARP and a:
                    break
                j = gj + a + b
                if j > j_hi:
                    break
                if j < j_lo:
                    continue
                x = multiply(multiply(_power(m.e, a), _power(m.h, b)), g0)
                if x is not None:
                    out.append(x)
    out.sort(key=lambda x: (grade(x)[0], x._key))
    return out


def build_ecc_j(m: NModel, j: int, variant: str = FLAT, interior_cap: Optional[int] = None) -> ModelComplex:
    """ECC_j: monomials of total page degree exactly j."""
    if j < 0:
        raise ValueError("j must be >= 0")
    if variant not in (FLAT, FULL):
        raise ValueError("build_ecc_j supports the flat and full variants")
    gens = _n_generators(m, variant, j, j, interior_cap)
    return assemble(
        gens,
        lambda x: m.boundary(x, variant),
        action,
        lambda x: _n_features(m, x),
        f"ECC_{j}[{variant}]",
        {"j": j, "interior_cap": interior_cap},
    )


def build_ecc_variant(model, variant: str, bounds: Bounds = Bounds()) -> ModelComplex:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if isinstance(model, NModel):
        gens = _n_generators(model, variant, 0, bounds.j_max, bounds.interior_cap)
        # flat and sharp are quotients of the full complex, hence 'drop' is legal
        return assemble(
            gens,
            lambda x: model.boundary(x, variant),
            action,
            lambda x: _n_features(model, x),
            f"ECC(N)[{variant}]",
            {"j_max": bounds.j_max, "interior_cap": bounds.interior_cap},
        )
    if isinstance(model, VModel):
        return _build_v(model, variant, bounds)
    raise TypeError("model must be an NModel or VModel")


def _v_features(v: VModel, x: OrbitSet) -> dict:
    m, k, g0 = v.split(x)
    j, eta = grade(x)
    return {"ep": m, "hp": k, "j": j, "eta": eta}


def _build_v(v: VModel, variant: str, bounds: Bounds) -> ModelComplex:
    if v.variant == PRE_LIMIT:
        core = SimpleOrbit("e", ELLIPTIC, 1.0)
        gens = [_power(core, n) for n in range(bounds.m_max + 1)]
        return assemble(
            gens,
            lambda x: (),
            lambda x: float(x.mult(core)),
            lambda x: {"n": x.mult(core), "index": core_index(x.mult(core), v.r)},
            f"ECC(V,r={v.r})",
            {"m_max": bounds.m_max},
        )
    interior = monomials(v.interior, bounds.j_max) if v.interior else [EMPTY]
    gens = []
    for mm in range(bounds.m_max + 1):
        if variant == SHARP and mm:
            break
        for k in (0, 1):
            if variant == FLAT and k:
                continue
            for g0 in interior:
                gens.append(multiply(multiply(_power(v.ep, mm), _power(v.hp, k)), g0))
    return assemble(
        gens,
        v.boundary,
        action,
        lambda x: _v_features(v, x),
        f"ECC(V)[{variant}]",
        {"m_max": bounds.m_max},
    )


# ---------------------------------------------------------------- maps


@dataclass(frozen=True, eq=False)
class ChainMap:
    matrix: F2Matrix
    src: ModelComplex
    dst: ModelComplex

    def __post_init__(self):
        f, s, t = self.matrix, self.src, self.dst
        if (f.cols, f.rows) != (s.dim, t.dim):
            raise ValueError("chain map shape mismatch")
        if t.differential @ f != f @ s.differential:
            raise NotChainMap("map does not commute with the differentials")

    def homology_rank(self) -> int:
        return induced_map_rank(self.matrix, self.src.two_step(), self.dst.two_step(), check=False)


def stabilization_map(m: NModel, j: int, variant: str = FLAT, interior_cap: Optional[int] = None) -> ChainMap:
    """Multiplication by e, ECC_j -> ECC_{j+1}."""
    src = build_ecc_j(m, j, variant, interior_cap)
    dst = build_ecc_j(m, j + 1, variant, interior_cap)
    e1 = OrbitSet.single(m.e)
    cols = tuple(1 << dst.index[multiply(e1, x)] for x in src.generators)
    return ChainMap(F2Matrix(dst.dim, src.dim, cols), src, dst)


def build_quotient_complex(m: NModel, variant: str, interior_cap: int) -> ModelComplex:
    """ECC(N)/(e - 1) on interior degree <= cap: basis h^b G0, e set to 1."""
    gens = []
    for g0 in m.interior_monomials(interior_cap):
        gens.append(g0)
        if variant == FULL:
            gens.append(multiply(OrbitSet.single(m.h), g0))
    drop_e = lambda t: OrbitSet(tuple((o, c) for o, c in t.factors if o.name != m.e.name))

    def bnd(x):
        acc: set = set()
        for t in m.boundary(x, variant):
            _toggle(acc, drop_e(t))
        return acc

    return assemble(
        gens,
        bnd,
        action,
        lambda x: _n_features(m, x),
        f"Q(N)[{variant}]",
        {"interior_cap": interior_cap},
    )


# ---------------------------------------------------------------- direct limits


def direct_limit(stages: Sequence[Mapping], maps: Sequence[Mapping]) -> dict:
    """Colimit estimate per grade of a finite telescope.

    ``stages[i]`` maps grade -> dim and ``maps[i]`` maps grade -> rank of the
    induced map stage i -> stage i+1.  A class counts in the limit when it
    survives the last map; a single stage is its own limit.
    """
    if len(maps) != max(len(stages) - 1, 0):
        raise ValueError("need exactly one map between consecutive stages")
    if not stages:
        return {}
    if not maps:
        return dict(stages[0])
    grades = set()
    for s in stages:
        grades |= set(s)
    last = maps[-1]
    return {g: int(last.get(g, 0)) for g in sorted(grades, key=repr)}


@dataclass(frozen=True)
class EchRelResult:
    variant: str
    interior_cap: Optional[int]
    dims: tuple[int, ...]
    map_ranks: tuple[int, ...]
    stabilized: bool
    stable_from: Optional[int]
    limit_dim: Optional[int]
    quotient_dim: int
    agree: bool


def ech_rel_boundary(
    m: NModel, variant: str = FLAT, j_max: int = 6, interior_cap: Optional[int] = None, raise_unstable: bool = False
) -> EchRelResult:
    """Stabilized homology of ECC_j under Gamma -> e Gamma, cross-checked
    against the quotient complex by (e - 1).

    Stabilization means every induced map H_j -> H_{j+1} from some j on is
    an isomorphism, over at least three consecutive stages up to j_max.
    """
    if j_max < 3:
        raise ValueError("j_max must be >= 3")
    dims, ranks = [], []
    for j in range(j_max + 1):
        c = build_ecc_j(m, j, variant, interior_cap)
        dims.append(c.homology_dim())
        if j < j_max:
            ranks.append(stabilization_map(m, j, variant, interior_cap).homology_rank())
    # walk back from j_max while the induced maps stay isomorphisms
    j = j_max
    while j > 0 and dims[j - 1] == dims[j] == ranks[j - 1]:
        j -= 1
    stable_from = j if j_max - j >= 2 else None
    cap = interior_cap if interior_cap is not None else j_max
    qdim = build_quotient_complex(m, variant, cap).homology_dim()
    stabilized = stable_from is not None
    limit = dims[stable_from] if stabilized else None
    if not stabilized and raise_unstable:
        raise NotStabilized(f"ECH_j dims {dims} not stable up to j={j_max}")
    agree = stabilized and (interior_cap is None and not _finite_interior(m, j_max) or limit == qdim)
    return EchRelResult(variant, interior_cap, tuple(dims), tuple(ranks), stabilized, stable_from, limit, qdim, agree)


def _finite_interior(m: NModel, j_max: int) -> bool:
    """True when every interior monomial has degree <= j_max (so the quotient is exact)."""
    if any(not o.hyperbolic for o in m.interior):
        return False
    return sum(o.page_degree for o in m.interior) <= j_max


# ---------------------------------------------------------------- total complex


@dataclass(frozen=True)
class TotalBounds:
    """Truncation of V (x) N: total page degree <= W and interior degree <= cap."""

    total_degree: int
    interior_cap: int


def _tensor_features(v: VModel, n: NModel, g, G) -> dict:
    mm, k, gv = v.split(g)
    a, b, g0 = n.split(G)
    jv, eta = grade(g)
    return {
        "ep": mm,
        "hp": k,
        "e": a,
        "h": b,
        "g": grade(g0)[0],
        "jN": grade(G)[0],
        "w": jv + grade(G)[0],
        "eta": eta,
    }


def total_boundary(v: VModel, n: NModel, g: OrbitSet, G: OrbitSet) -> set:
    """The four-term differential on g (x) G."""
    acc: set = set()
    for t in v.boundary(g):
        _toggle(acc, (t, G))
    ge = divide(g, OrbitSet.single(v.ep))
    if ge is not None:
        hG = multiply(OrbitSet.single(n.h), G)
        if hG is not None:
            _toggle(acc, (ge, hG))
    gh = divide(g, OrbitSet.single(v.hp))
    if gh is not None:
        _toggle(acc, (gh, multiply(OrbitSet.single(n.e), G)))
    for t in n.boundary(G, FULL):
        _toggle(acc, (g, t))
    return acc


def build_total_complex(v: VModel, n: NModel, bounds: TotalBounds) -> ModelComplex:
    """V (x) N truncated to total page degree <= W and interior degree <= cap.

    Both cuts are subcomplexes: the differential never raises total page
    degree nor interior degree.  Generators are ordered by total degree so
    the truncation at any W' <= W is a prefix of the basis.
    """
    if v.variant not in (POST_LIMIT, TOY):
        raise InvalidModel("total complex needs a post-limit or toy VModel")
    W, cap = bounds.total_degree, bounds.interior_cap
    vint = monomials(v.interior, W) if v.interior else [EMPTY]
    vgens = []
    for mm in range(W + 1):
        for k in (0, 1):
            for g0 in vint:
                x = multiply(multiply(_power(v.ep, mm), _power(v.hp, k)), g0)
                if grade(x)[0] <= W:
                    vgens.append(x)
    ngens = _n_generators(n, FULL, 0, W, cap)
    labels = [(g, G) for g in vgens for G in ngens if grade(g)[0] + grade(G)[0] <= W]
    labels.sort(key=lambda t: (grade(t[0])[0] + grade(t[1])[0], t[0]._key, t[1]._key))
    return assemble(
        labels,
        lambda t: total_boundary(v, n, t[0], t[1]),
        lambda t: action(t[0]) + action(t[1]),
        lambda t: _tensor_features(v, n, t[0], t[1]),
        "V(x)N",
        {"total_degree": W, "interior_cap": cap},
    )


def build_U0(c: ModelComplex, v: Optional[VModel] = None, n: Optional[NModel] = None) -> F2Matrix:
    """g (x) G -> (g/e') (x) eG on the truncated basis; checked to commute."""
    ep = v.ep if v else boundary_orbits()["e'"]
    e = n.e if n else boundary_orbits()["e"]
    E1, EP1 = OrbitSet.single(e), OrbitSet.single(ep)
    cols = []
    for g, G in c.generators:
        q = divide(g, EP1)
        if q is None:
            cols.append(0)
            continue
        tgt = (q, multiply(E1, G))
        i = c.index.get(tgt)
        if i is None:
            raise InvalidModel(f"U0 leaves the truncation at {_label_name((g, G))}")
        cols.append(1 << i)
    u = F2Matrix(c.dim, c.dim, tuple(cols))
    if u @ c.differential != c.differential @ u:
        raise NotChainMap("U0 does not commute with the differential")
    return u


def mapping_cone(u: F2Matrix, c: ModelComplex) -> ModelComplex:
    """Cone with differential [[d, 0], [u, d]] on pairs (x, y)."""
    if (u.rows, u.cols) != (c.dim, c.dim):
        raise ValueError("cone map must be an endomorphism of the complex")
    if u @ c.differential != c.differential @ u:
        raise NotChainMap("cone map does not commute with the differential")
    n = c.dim
    d = c.differential
    cols = [d.cols_bits[i] | (u.cols_bits[i] << n) for i in range(n)]
    cols += [d.cols_bits[i] << n for i in range(n)]
    strict = all(
        c.actions[r] < c.actions[i] - 1e-12 for i, col in enumerate(u.cols_bits) for r in support_of(col)
    )
    feats = {k: v + v for k, v in c.features.items()}
    feats["half"] = (0,) * n + (1,) * n
    return ModelComplex(
        tuple((0, g) for g in c.generators) + tuple((1, g) for g in c.generators),
        F2Matrix(2 * n, 2 * n, tuple(cols)),
        c.actions + c.actions,
        feats,
        f"cone({c.variant})",
        dict(c.bounds),
        tuple("a:" + s for s in c.names) + tuple("b:" + s for s in c.names),
        strict_action=c.strict_action and strict,
    )


def action_truncate(c: ModelComplex, L: float) -> ModelComplex:
    keep = [i for i, a in enumerate(c.actions) if a <= L + 1e-12]
    out = c.restrict(keep, variant=f"{c.variant}<={L}", require_closed=True)
    return out


# ---------------------------------------------------------------- colimits of truncations


@dataclass(frozen=True)
class TruncationLimit:
    dims: tuple[int, ...]
    ranks_to_top: tuple[int, ...]
    degrees: tuple[int, ...]
    stabilized: bool
    limit_dim: int


def prefix_colimit(c: ModelComplex, degree_key: str, lo: int, guard: int) -> TruncationLimit:
    """Colimit estimate for the filtration by prefixes {degree <= W}.

    The generators must be sorted by ``degree_key`` so that each prefix is
    a subcomplex.  For each W in [lo, top] we record dim H(prefix) and the
    rank of H(prefix) -> H(whole); the estimate is stable when that rank is
    constant over the top ``guard`` + 1 prefixes.
    """
    deg = c.features[degree_key]
    if list(deg) != sorted(deg):
        raise ValueError("generators are not sorted by the degree key")
    top = max(deg) if deg else 0
    ends = {}
    for i, w in enumerate(deg):
        ends[w] = i + 1
    d = c.differential
    # a single column sweep yields kernels of every prefix at once
    piv: dict[int, tuple[int, int]] = {}
    kern_at: list[tuple[int, int]] = []
    rank_prefix = {}
    running_rank = 0
    for col_i, col in enumerate(d.cols_bits):
        v, combo = col, 1 << col_i
        while v:
            hit = piv.get(v.bit_length() - 1)
            if hit is None:
                break
            v ^= hit[0]
            combo ^= hit[1]
        if v:
            piv[v.bit_length() - 1] = (v, combo)
            running_rank += 1
        else:
            kern_at.append((col_i, combo))
        if deg[col_i] in ends and ends[deg[col_i]] == col_i + 1:
            rank_prefix[deg[col_i]] = running_rank
    bnd = EchelonBasis(v for v, _ in piv.values())
    base = len(bnd)
    dims, ranks, degrees = [], [], []
    ki = 0
    count_kernel = 0
    for w in range(0, top + 1):
        if w not in ends:
            continue
        end = ends[w]
        while ki < len(kern_at) and kern_at[ki][0] < end:
            bnd.add(kern_at[ki][1])
            ki += 1
            count_kernel += 1
        if w < lo:
            continue
        # boundaries inside the prefix: columns of the prefix (prefix is a subcomplex)
        dim_prefix = count_kernel - rank_prefix[w]
        degrees.append(w)
        dims.append(dim_prefix)
        ranks.append(len(bnd) - base)
    stable = len(ranks) >= guard + 1 and len(set(ranks[-(guard + 1):])) == 1
    return TruncationLimit(tuple(dims), tuple(ranks), tuple(degrees), stable, ranks[-1] if ranks else 0)
