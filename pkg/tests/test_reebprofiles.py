import math
import xml.etree.ElementTree as ET
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from echobd.errors import DegenerateDirection, InfeasibleParameters, InvalidModel
from echobd.reebprofiles import (
    SOLID_TORUS,
    TORUS_SHELL,
    Piece,
    ReebProfile,
    action_floor,
    audit_alpha_delta,
    build_action_floor_extension,
    build_alpha_delta,
    build_V_profile,
    check_contact,
    contact_expression,
    convergents,
    emit_profile_plot,
    example_core_only,
    example_monotone,
    irrational_surrogate,
    profile_from_dict,
    profile_to_dict,
    pshift,
    record_action,
    reeb_slope,
    render_svg,
    scan_morse_bott,
)

DELTA = irrational_surrogate(math.sqrt(2) / 20)


@pytest.fixture(scope="module")
def alpha():
    return build_alpha_delta(DELTA)


def test_surrogate_contract():
    s = irrational_surrogate(math.sqrt(2))
    assert s.denominator > 10**6 and abs(float(s) - math.sqrt(2)) < 1e-12
    with pytest.raises(InfeasibleParameters):
        irrational_surrogate("7/10")
    assert convergents(Fraction(415, 93))[-1] == Fraction(415, 93)


def test_example_one_contact_and_slope():
    nu, C = Fraction(7, 10), Fraction(2)
    p = example_core_only(nu, C)
    rep = check_contact(p)
    assert rep.ok and rep.limit == 2 * nu * C
    for i in range(1, 1001):
        rho = Fraction(i, 1000)
        assert contact_expression(p, rho) == 2 * nu * rho * C
        assert abs(float(reeb_slope(p, rho)) - 1 / 0.7) < 1e-9


def test_example_two_slope():
    p = example_monotone()
    for i in range(1, 1001):
        rho = i / 1000
        assert abs(reeb_slope(p, rho) - 2 * rho * rho) < 1e-9


def test_degenerate_profiles():
    flat = ReebProfile.from_global(TORUS_SHELL, [1, 2], [((0, 1), (0, 1))])
    assert not check_contact(flat).ok
    const = ReebProfile.from_global(TORUS_SHELL, [0, 1], [((1,), (0, 0, 1))])
    assert reeb_slope(const, 0.5) == math.inf
    with pytest.raises(DegenerateDirection):
        reeb_slope(const, 0)


def test_profile_invariants_enforced():
    with pytest.raises(InvalidModel):  # not C^1
        ReebProfile.from_global(TORUS_SHELL, [0, 1, 2], [((1, 1), (1, 1)), ((1, 2), (1, 1))])
    with pytest.raises(InvalidModel):  # f(0) != 0 on the solid torus
        ReebProfile.from_global(SOLID_TORUS, [0, 1], [((1, 0, 1), (2, 0, -1))])
    with pytest.raises(InvalidModel):  # odd term at the core
        ReebProfile.from_global(SOLID_TORUS, [0, 1], [((0, 1, 1), (2, 0, -1))])


def test_example_one_irrational_has_no_orbits():
    p = example_core_only(irrational_surrogate(1 / math.sqrt(2)))
    for L, q in ((10, 20), (100, 200), (1000, 500)):
        assert scan_morse_bott(p, L, q) == []


def test_example_one_rational_is_one_family():
    recs = scan_morse_bott(example_core_only(Fraction(7, 10)), 100, 20)
    assert len(recs) == 1 and recs[0].slope == Fraction(10, 7) and recs[0].family_end == 1.0


def test_alpha_delta_conditions(alpha):
    assert all(audit_alpha_delta(alpha).values())
    tiny = build_alpha_delta(irrational_surrogate(1e-7 * math.sqrt(2)))
    assert all(audit_alpha_delta(tiny).values())
    assert reeb_slope(alpha, 1) == math.inf and reeb_slope(alpha, 2) == math.inf


def test_alpha_delta_endpoint_ray_independent_of_delta():
    a = build_alpha_delta(irrational_surrogate(0.05 * math.sqrt(2)))
    b = build_alpha_delta(irrational_surrogate(1e-5 * math.sqrt(2)))
    fa, ga = a.f(2), a.g(2)
    fb, gb = b.f(2), b.g(2)
    assert fa * gb == fb * ga


def test_alpha_delta_infeasible_anchor():
    with pytest.raises(InfeasibleParameters):
        build_alpha_delta(Fraction(1, 3), anchor=(Fraction(1, 100), 5))


def _oracle_tori(prof, delta, P, Q):
    """Both parameters where f'/g' = Q/P, found by brentq on k(y) - Q/P."""
    target = Q / P

    def k(y):
        _, _, df, dg = prof.values(y)
        return df / dg - target

    out = []
    for lo, hi in ((1.0 + 1e-15, 1.5), (1.5, 2.0 - 1e-15)):
        y = brentq(k, lo, hi, xtol=1e-14)
        f, g, _, _ = prof.values(y)
        out.append((y, -Q * g + P * f))
    return out


def test_alpha_delta_two_tori_per_slope(alpha):
    L, qmax = 50, 20
    recs = scan_morse_bott(alpha, L, qmax)
    got = Counter((r.p, r.q) for r in recs if r.q)
    d = float(DELTA)
    expected = Counter()
    for Q in range(1, qmax + 1):
        for P in range(math.ceil(Q / d), int(L * 2) + 1):
            if math.gcd(P, Q) != 1 or Q / P >= d:
                continue
            for y, act in _oracle_tori(alpha, d, P, Q):
                if act <= L:
                    expected[(-P, Q)] += 1
    assert got == expected
    both = [k for k, v in expected.items() if v == 2]
    assert both and all(got[k] == 2 for k in both)
    for r in recs:
        if r.q:
            side = [y for y, _ in _oracle_tori(alpha, d, -r.p, r.q)]
            assert min(abs(r.parameter - y) for y in side) < 1e-9
            assert 1 < r.parameter < 2 and r.parameter != 1.5
    # slope infinity sits exactly at both ends
    assert sorted(r.parameter for r in recs if r.q == 0) == [1.0, 2.0]


def test_record_actions_recomputed(alpha):
    for prof in (alpha, build_V_profile((alpha.f(2), alpha.g(2)))):
        for r in scan_morse_bott(prof, 40, 20):
            f, g, _, _ = prof.values(r.parameter)
            a, b = r.direction
            assert math.gcd(a, b) == 1
            assert abs(abs(a * g + b * f) - r.action) < 1e-9
            assert r.action > 0


def test_V_profile_conditions(alpha):
    anchor = (alpha.f(2), alpha.g(2))
    V = build_V_profile(anchor)
    assert check_contact(V).ok
    inner = V.pieces[0]
    assert inner.f == (0, 0, 1) and inner.g == (4, 0, -1)
    assert reeb_slope(V, Fraction(1, 1000)) == 1
    assert reeb_slope(V, 1) == math.inf
    assert (V.f(1), V.g(1)) == anchor
    slopes = [reeb_slope(V, Fraction(i, 500)) for i in range(1, 500)]
    assert all(a <= b for a, b in zip(slopes, slopes[1:]))
    # monotone slope: at most one torus per rational slope
    recs = scan_morse_bott(V, 40, 20)
    assert max(Counter((r.p, r.q) for r in recs).values()) == 1


def test_V_profile_infeasible():
    with pytest.raises(InfeasibleParameters):
        build_V_profile((2, 1), C=Fraction(1, 2))
    with pytest.raises(InfeasibleParameters):
        build_V_profile((50, 1), C=2)


@pytest.mark.parametrize("L", [10, 100])
def test_action_floor(L):
    af = action_floor(L)
    p = af.profile
    assert check_contact(p).ok
    assert (p.f(0), p.g(0)) == (1, 0)
    assert p.f(Fraction(1, 2)) == 1 and p.g(Fraction(1, 2)) == af.N > L
    assert all(r.action >= L for r in scan_morse_bott(p, L, 200))
    # the straight segment has no closed orbits at all
    seg = p.restrict(0, Fraction(1, 8))
    assert scan_morse_bott(seg, 1e9, 200) == []
    # window rationals are long: every p/q strictly inside has q > L/K
    s, s2 = af.window
    for q in range(1, int(L / af.K) + 1):
        lo = math.floor(s * q) + 1
        assert not (Fraction(lo, q) < s2)


def test_action_floor_nonvacuous():
    p = build_action_floor_extension(10)
    big = float(p.meta["N"]) * 3
    recs = scan_morse_bott(p, big, 5)
    assert recs and all(r.action >= 10 for r in recs)


def test_torus_and_solid_signs_agree_under_reflection():
    C = Fraction(3)
    solid = example_monotone(C)
    pc = solid.pieces[0]
    # y = 1 - rho : F(y) = f(1 - y)
    refl = lambda poly: tuple(c * (-1) ** i for i, c in enumerate(pshift(poly, 1)))
    shell = ReebProfile(TORUS_SHELL, (Piece(0, 1, refl(pc.f), refl(pc.g)),))
    for i in range(0, 11):
        y = Fraction(i, 10)
        assert contact_expression(shell, y) == contact_expression(solid, 1 - y)


@given(st.fractions(min_value=Fraction(1, 10), max_value=3), st.fractions(min_value=Fraction(11, 10), max_value=5))
def test_contact_is_transversality(nu, C):
    p = example_core_only(nu, C)
    for rho in (Fraction(1, 7), Fraction(1, 2), Fraction(9, 10)):
        f, g, df, dg = p.values(rho)
        assert f * dg - df * g != 0  # never radial
        assert contact_expression(p, rho) > 0


def test_svg_deterministic(tmp_path, alpha):
    a = tmp_path / "a.svg"
    b = tmp_path / "b.svg"
    emit_profile_plot(alpha, a)
    emit_profile_plot(alpha, b)
    assert a.read_bytes() == b.read_bytes()
    root = ET.fromstring(a.read_bytes())
    assert root.get("version") == "1.1"
    ns = "{http://www.w3.org/2000/svg}"
    assert root.find(f"{ns}polyline") is not None
    texts = [t.text for t in root.iter(f"{ns}text")]
    assert "f" in texts and "g" in texts
    # Example 1 draws a monotone curve (f up, g down)
    pts = render_svg(example_core_only(Fraction(7, 10))).split('points="')[1].split('"')[0].split()
    xs = [float(q.split(",")[0]) for q in pts]
    ys = [float(q.split(",")[1]) for q in pts]
    assert xs == sorted(xs) and ys == sorted(ys)  # svg y grows downward as g decreases


def test_roundtrip_dict(alpha):
    again = profile_from_dict(profile_to_dict(alpha))
    assert again.pieces == alpha.pieces and again.side == alpha.side


def test_scan_threads_deterministic(alpha):
    assert scan_morse_bott(alpha, 50, 20, threads=1) == scan_morse_bott(alpha, 50, 20, threads=4)
