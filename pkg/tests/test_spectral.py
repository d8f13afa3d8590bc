import random

import pytest

from echobd.complexbuilder import ModelComplex, NModel, TotalBounds, VModel, build_total_complex, build_U0, mapping_cone
from echobd.errors import DirectionViolated
from echobd.f2core import F2Matrix, homology_dim
from echobd.orbitsets import EMPTY, OrbitSet, multiply
from echobd.scenarios import random_admissible_nmodel
from echobd.spectral import (
    FilteredComplex,
    associated_graded,
    check_intermediate_claims,
    infinity_page,
    make_filtration,
    page,
)

from oracles import random_complex

V = VModel.post_limit()


def _complex(n=None, W=5, J=2):
    return build_total_complex(V, n or NModel.one_orbit(), TotalBounds(W, J))


def test_direction_checked():
    c = _complex()
    with pytest.raises(DirectionViolated):
        # h increases along the differential, so a nonincreasing filtration by h is wrong
        FilteredComplex(c, c.features["h"], "nonincreasing", "bad")


def test_filtration_levels():
    c = _complex(NModel.trivial(), W=6, J=0)
    e, h = V.ep, V.hp
    n = NModel.trivial()
    E, Hn = OrbitSet.single(n.e), OrbitSet.single(n.h)
    G = make_filtration(c, "G")
    lvl = dict(zip(c.generators, G.level))
    assert lvl[(EMPTY, multiply(Hn, E))] == 1
    assert lvl[(EMPTY, OrbitSet.single(n.e, 2))] == 0
    Gp = make_filtration(c, "Gprime")
    assert dict(zip(c.generators, Gp.level))[(multiply(OrbitSet.single(e), OrbitSet.single(h)), EMPTY)] == 1
    Ef = make_filtration(c, "E")
    gen = (multiply(OrbitSet.single(e, 3), OrbitSet.single(h)), EMPTY)
    assert dict(zip(c.generators, Ef.level))[gen] == 3


def test_unfiltered_page_one_is_homology():
    rng = random.Random(4)
    for _ in range(20):
        d, h = random_complex(rng.randint(1, 10), rng)
        n = d.cols
        c = ModelComplex(tuple(range(n)), d, tuple(float(i) for i in range(n)), {"z": (0,) * n}, strict_action=False)
        fc = FilteredComplex(c, (0,) * n, "nonincreasing", "flat")
        assert page(fc, 1).total() == h


@pytest.mark.parametrize("which", ["F", "G", "Gprime", "E"])
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_pages_against_graded_homology_and_abutment(which, seed):
    c = _complex(random_admissible_nmodel(seed, 3, 6), W=5, J=2)
    fc = make_filtration(c, which)
    e1 = page(fc, 1, check_collapse=False)
    gr = associated_graded(fc)
    for lvl in sorted(set(fc.level)):
        keep = [i for i, x in enumerate(fc.level) if x == lvl]
        sub = gr.differential.submatrix(keep, keep)
        assert e1.dim_at(lvl) == homology_dim(sub, sub)
    assert infinity_page(fc).total() == c.homology_dim()
    assert page(fc, 0).total() == c.dim


def test_page_dims_nonincreasing_in_r():
    c = _complex(random_admissible_nmodel(5, 4, 6), W=6, J=3)
    fc = make_filtration(c, "E")
    totals = [page(fc, r, check_collapse=False).total() for r in range(0, 6)]
    assert all(a >= b for a, b in zip(totals, totals[1:]))


def test_claims_trivial_model():
    rep = check_intermediate_claims(V, NModel.trivial(), TotalBounds(8, 2), 2, raise_on_failure=False)
    assert rep.passed, rep.notes


@pytest.mark.parametrize("seed", range(1, 6))
def test_claims_random_models(seed):
    n = random_admissible_nmodel(seed, 1 + seed % 6, 6)
    rep = check_intermediate_claims(V, n, TotalBounds(8, 1), 2, raise_on_failure=False)
    assert rep.passed, rep.notes


def test_cone_filtration_Ehat():
    c = _complex(NModel.trivial(), W=6, J=1)
    cone = mapping_cone(build_U0(c), c)
    fc = make_filtration(cone, "Ehat")
    assert infinity_page(fc).total() == cone.homology_dim()
