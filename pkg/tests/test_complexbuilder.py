import random

import pytest

from echobd.complexbuilder import (
    FLAT,
    FULL,
    SHARP,
    Bounds,
    NModel,
    TotalBounds,
    VModel,
    action_truncate,
    boundary_orbits,
    build_ecc_j,
    build_ecc_variant,
    build_quotient_complex,
    build_total_complex,
    build_U0,
    direct_limit,
    ech_rel_boundary,
    mapping_cone,
    stabilization_map,
)
from echobd.errors import InvalidModel
from echobd.f2core import F2Matrix, homology_dim, induced_map_rank
from echobd.orbitsets import EMPTY, ELLIPTIC, HYPERBOLIC, OrbitSet, SimpleOrbit, multiply, parse_monomial
from echobd.scenarios import random_admissible_nmodel

from oracles import homology_by_enumeration

B = boundary_orbits()
ALPHABET = dict(B)


def mono(text, extra=()):
    table = dict(ALPHABET)
    table.update({o.name: o for o in extra})
    return parse_monomial(text, table)


def names(c):
    return sorted(c.names)


def test_boundary_action_order_enforced():
    with pytest.raises(InvalidModel):
        boundary_orbits({"h": 1.0, "e": 0.9, "h'": 1.2, "e'": 1.3})


def test_post_limit_full_generators_and_differential():
    c = build_ecc_variant(VModel.post_limit(), FULL, Bounds(m_max=2))
    assert names(c) == sorted(["1", "e'", "e'^2", "h'", "e'*h'", "e'^2*h'"])
    for m in range(3):
        src = mono("*".join(["e'"] * m + ["h'"]) if m else "h'")
        tgt = mono("*".join(["e'"] * m)) if m else EMPTY
        assert c.boundary_of(src) == [tgt]
    assert c.homology_dim() == 0


def test_post_limit_sharp_and_flat():
    sharp = build_ecc_variant(VModel.post_limit(), SHARP, Bounds(m_max=4))
    assert names(sharp) == ["1", "h'"] and sharp.homology_dim() == 0
    flat = build_ecc_variant(VModel.post_limit(), FLAT, Bounds(m_max=4))
    assert flat.differential.is_zero() and flat.homology_dim() == 5


def test_pre_limit_has_zero_differential_and_core_indices():
    c = build_ecc_variant(VModel.pre_limit(1.4142), FULL, Bounds(m_max=4))
    assert c.differential.is_zero()
    assert c.features["index"] == (0, 3, 5, 9, 11)


def test_ecc_j_enumeration():
    t = NModel.trivial()
    assert names(build_ecc_j(t, 2, FULL)) == ["e*h", "e^2"]
    assert names(build_ecc_j(t, 0, FLAT)) == ["1"]
    n = NModel.one_orbit(page_degree=2)
    assert names(build_ecc_j(n, 2, FLAT)) == ["e^2", "g1"]


def test_stabilization_map_examples():
    t = NModel.trivial()
    f = stabilization_map(t, 0, FULL)
    assert f.dst.labels_of(f.matrix.apply(f.src.vector([EMPTY]))) == [mono("e")]
    g = stabilization_map(t, 2, FULL)
    assert g.dst.labels_of(g.matrix.apply(g.src.vector([mono("e*h")]))) == [mono("e^2*h")]


@pytest.mark.parametrize("seed", range(1, 9))
def test_stabilization_commutes_and_rank_matches_basis_oracle(seed):
    n = random_admissible_nmodel(seed, 3, 6)
    for j in range(4):
        f = stabilization_map(n, j, FULL, interior_cap=3)
        src, dst = f.src, f.dst
        # oracle: count dimension of the image of H(src) in H(dst) by enumeration:
        # |image of cycles + boundaries(dst)| / |boundaries(dst)|
        cycles = [v for v in range(1 << src.dim) if src.differential.apply(v) == 0] if src.dim <= 12 else None
        if cycles is None or dst.dim > 14:
            continue
        bnd = {dst.differential.apply(v) for v in range(1 << dst.dim)}
        img = {f.matrix.apply(z) ^ b for z in cycles for b in bnd}
        import math

        expected = int(math.log2(len(img))) - int(math.log2(len(bnd)))
        assert f.homology_rank() == expected


def test_ech_rel_boundary_trivial_model():
    t = NModel.trivial()
    flat = ech_rel_boundary(t, FLAT)
    full = ech_rel_boundary(t, FULL)
    assert flat.stabilized and flat.limit_dim == 1 == flat.quotient_dim
    assert full.stabilized and full.limit_dim == 2 == full.quotient_dim


@pytest.mark.parametrize("seed", range(1, 11))
def test_limit_equals_quotient_on_random_models(seed):
    n = random_admissible_nmodel(seed, 1 + seed % 4, 6)
    for J in range(3):
        for variant in (FLAT, FULL):
            r = ech_rel_boundary(n, variant, 6, J)
            assert r.stabilized, (variant, J, r.dims)
            assert r.limit_dim == r.quotient_dim


def test_total_complex_examples():
    v, t = VModel.post_limit(), NModel.trivial()
    c = build_total_complex(v, t, TotalBounds(4, 2))
    hp, ep, e, h = (OrbitSet.single(B[k]) for k in ("h'", "e'", "e", "h"))
    assert sorted(c.boundary_of((hp, EMPTY)), key=str) == sorted([(EMPTY, EMPTY), (EMPTY, e)], key=str)
    assert c.boundary_of((ep, EMPTY)) == [(EMPTY, h)]
    d = c.differential
    assert d.apply(d.apply(c.vector([(hp, EMPTY)]))) == 0


def test_U0_examples():
    v, t = VModel.post_limit(), NModel.trivial()
    c = build_total_complex(v, t, TotalBounds(5, 2))
    u = build_U0(c, v, t)
    ep, hp, e = (OrbitSet.single(B[k]) for k in ("e'", "h'", "e"))
    img = lambda lab: c.labels_of(u.apply(c.vector([lab])))
    assert img((ep, EMPTY)) == [(EMPTY, e)]
    assert img((EMPTY, e)) == []
    assert img((multiply(OrbitSet.single(B["e'"], 2), hp), EMPTY)) == [(multiply(ep, hp), e)]
    assert c.differential @ u == u @ c.differential


def test_mapping_cone_extremes():
    c = build_total_complex(VModel.post_limit(), NModel.one_orbit(), TotalBounds(4, 2))
    h = c.homology_dim()
    zero = mapping_cone(F2Matrix.zeros(c.dim, c.dim), c)
    assert zero.homology_dim() == 2 * h
    ident = mapping_cone(F2Matrix.identity(c.dim), c)
    assert ident.homology_dim() == 0


def test_action_truncate():
    c = build_ecc_variant(NModel.one_orbit(), FULL, Bounds(j_max=4))
    assert action_truncate(c, 0).names == ("1",)
    assert action_truncate(c, max(c.actions) + 1).dim == c.dim
    mid = sorted(c.actions)[c.dim // 2]
    sub = action_truncate(c, mid)
    assert all(a <= mid for a in sub.actions)
    assert homology_dim(sub.differential, sub.differential) >= 0


def test_direct_limit_rules():
    assert direct_limit([{0: 1, 1: 2}], []) == {0: 1, 1: 2}
    stages = [{0: 1, 1: 2}] * 3
    assert direct_limit(stages, [{0: 1, 1: 2}] * 2) == {0: 1, 1: 2}
    assert direct_limit(stages, [{}, {}]) == {0: 0, 1: 0}
    with pytest.raises(ValueError):
        direct_limit(stages, [{}])


def test_pre_limit_stages_limit():
    rs = (2.01, 20.01, 200.01)
    stages = []
    for r in rs:
        c = build_ecc_variant(VModel.pre_limit(r), FULL, Bounds(m_max=6))
        stages.append({(n, i): 1 for n, i in zip(c.features["n"], c.features["index"])})
    maps = [{g: 1 for g in a if g in b} for a, b in zip(stages, stages[1:])]
    lim = direct_limit(stages, maps)
    per_n = {n: sum(d for (k, _), d in lim.items() if k == n) for n in range(7)}
    assert per_n == {0: 1, 1: 0, 2: 0, 3: 0, 4: 0, 5: 0, 6: 0}


def test_nmodel_audit_rejects_bad_models():
    g1 = SimpleOrbit("g1", ELLIPTIC, 2.0)
    g2 = SimpleOrbit("g2", ELLIPTIC, 3.0)
    # action must decrease
    with pytest.raises(InvalidModel):
        NModel((g1, g2), {OrbitSet.single(g1): [OrbitSet.single(g2)]})
    # degree must be preserved by d_flat
    with pytest.raises(InvalidModel):
        NModel((g1, g2), {OrbitSet.single(g2): [EMPTY]})
    # (d_flat)^2 != 0
    g3 = SimpleOrbit("g3", ELLIPTIC, 4.0)
    with pytest.raises(InvalidModel):
        NModel((g1, g2, g3), {OrbitSet.single(g3): [OrbitSet.single(g2)], OrbitSet.single(g2): [OrbitSet.single(g1)]})


@pytest.mark.parametrize("seed", range(20))
def test_built_complexes_square_to_zero(seed):
    n = random_admissible_nmodel(seed, 1 + seed % 6, 6)
    for variant in (FLAT, SHARP, FULL):
        c = build_ecc_variant(n, variant, Bounds(j_max=4))
        assert (c.differential @ c.differential).is_zero()
    T = build_total_complex(VModel.post_limit(), n, TotalBounds(5, 2))
    assert (T.differential @ T.differential).is_zero()
    if T.dim <= 12:
        assert T.homology_dim() == homology_by_enumeration(T.differential, T.differential)


def test_quotient_complex_trivial():
    q = build_quotient_complex(NModel.trivial(), FULL, 3)
    assert names(q) == ["1", "h"] and q.homology_dim() == 2
