"""Rotationally symmetric contact forms described by (f, g) trajectories.

A torus shell T^2 x [y0, y1] carries g(y) dtheta + f(y) dt, a solid torus
carries g(rho) dtheta + f(rho)/(2 pi) dphi.  Profiles are piecewise
polynomials with rational coefficients; every sign and derivative check is
exact and floats only enter the grid sampling and the slope bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateDirection, InfeasibleParameters, InvalidModel

TORUS_SHELL = "torus-shell"
SOLID_TORUS = "solid-torus"
SIDES = (TORUS_SHELL, SOLID_TORUS)

Number = Union[int, float, Fraction]
Poly = tuple[Fraction, ...]


def _q(x: Number) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


# ---------------------------------------------------------------- polynomials

def _trim(p: Sequence[Fraction]) -> Poly:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(p) if p else (Fraction(0),)


def padd(p: Sequence, q: Sequence) -> Poly:
    n = max(len(p), len(q))
    return _trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def pscale(p: Sequence, c) -> Poly:
    return _trim([c * a for a in p])


def pmul(p: Sequence, q: Sequence) -> Poly:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return _trim(out)


def pderiv(p: Sequence) -> Poly:
    return _trim([i * p[i] for i in range(1, len(p))]) if len(p) > 1 else (Fraction(0),)


def pinteg(p: Sequence, c0=0) -> Poly:
    return _trim([Fraction(c0)] + [Fraction(a) / (i + 1) for i, a in enumerate(p)])


def peval(p: Sequence, x):
    acc = 0 * x
    for a in reversed(p):
        acc = acc * x + a
    return acc


def pshift(p: Sequence, h) -> Poly:
    """Coefficients of p(t + h) in t."""
    out: Poly = (Fraction(0),)
    for a in reversed(p):
        out = padd(pmul(out, (Fraction(h), Fraction(1))), (a,))
    return out


def pis_zero(p: Sequence) -> bool:
    return all(a == 0 for a in p)


# --------------------------------------------------------------------- pieces

@dataclass(frozen=True)
class Piece:
    """(f, g) on [lo, hi], coefficients in powers of (x - lo)."""

    lo: Fraction
    hi: Fraction
    f: Poly
    g: Poly
    _float: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lo", _q(self.lo))
        object.__setattr__(self, "hi", _q(self.hi))
        object.__setattr__(self, "f", _trim([_q(a) for a in self.f]))
        object.__setattr__(self, "g", _trim([_q(a) for a in self.g]))
        if not self.hi > self.lo:
            raise InvalidModel(f"piece [{self.lo}, {self.hi}] is empty")
        df, dg = pderiv(self.f), pderiv(self.g)
        fl = tuple(tuple(float(a) for a in p) for p in (self.f, self.g, df, dg))
        object.__setattr__(self, "_float", fl)

    @property
    def df(self) -> Poly:
        return pderiv(self.f)

    @property
    def dg(self) -> Poly:
        return pderiv(self.g)

    def values(self, x):
        """(f, g, f', g') at x; exact for Fraction input."""
        if isinstance(x, int):
            x = Fraction(x)
        if isinstance(x, Fraction):
            t = x - self.lo
            return (peval(self.f, t), peval(self.g, t), peval(self.df, t), peval(self.dg, t))
        t = float(x) - float(self.lo)
        return tuple(peval(p, t) for p in self._float)


def _local(p: Sequence, lo: Fraction) -> Poly:
    # global-variable coefficients -> coefficients in (x - lo)
    return pshift([_q(a) for a in p], lo)


@dataclass(frozen=True)
class ReebProfile:
    side: str
    pieces: tuple[Piece, ...]
    name: str = ""
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.side not in SIDES:
            raise InvalidModel(f"side must be one of {SIDES}")
        if not self.pieces:
            raise InvalidModel("a profile needs at least one piece")
        object.__setattr__(self, "pieces", tuple(self.pieces))
        for left, right in zip(self.pieces, self.pieces[1:]):
            if left.hi != right.lo:
                raise InvalidModel(f"pieces are not contiguous at {left.hi} / {right.lo}")
            a, b = left.values(left.hi), right.values(right.lo)
            if a != b:
                raise InvalidModel(f"profile is not C^1 at x = {left.hi}: {a} vs {b}")
        if self.side == SOLID_TORUS:
            inner = self.pieces[0]
            if inner.lo != 0:
                raise InvalidModel("a solid-torus profile starts at rho = 0")
            if inner.f[0] != 0:
                raise InvalidModel("solid torus needs f(0) = 0")
            for name, p in (("f", inner.f), ("g", inner.g)):
                if any(p[i] != 0 for i in range(1, len(p), 2)):
                    raise InvalidModel(f"solid torus: odd-degree derivatives of {name} must vanish at rho = 0")

    @classmethod
    def from_global(cls, side: str, breaks: Sequence[Number], polys: Sequence[tuple[Sequence, Sequence]],
                    name: str = "", meta: Optional[Mapping] = None) -> "ReebProfile":
        """Pieces given by coefficients in the global variable."""
        br = [_q(b) for b in breaks]
        if len(br) != len(polys) + 1:
            raise InvalidModel("need one more breakpoint than polynomial pairs")
        pieces = [Piece(br[i], br[i + 1], _local(f, br[i]), _local(g, br[i])) for i, (f, g) in enumerate(polys)]
        return cls(side, tuple(pieces), name, dict(meta or {}))

    @property
    def parameter_range(self) -> tuple[Fraction, Fraction]:
        return self.pieces[0].lo, self.pieces[-1].hi

    @property
    def breakpoints(self) -> list[Fraction]:
        return [p.lo for p in self.pieces] + [self.pieces[-1].hi]

    def piece_at(self, x) -> Piece:
        lo, hi = self.parameter_range
        if not lo <= x <= hi:
            raise ValueError(f"parameter {x} outside [{lo}, {hi}]")
        for p in self.pieces:
            if x <= p.hi:
                return p
        return self.pieces[-1]

    def values(self, x):
        return self.piece_at(x).values(x)

    def f(self, x):
        return self.values(x)[0]

    def g(self, x):
        return self.values(x)[1]

    def restrict(self, lo: Number, hi: Number) -> "ReebProfile":
        """Sub-profile over whole pieces between two breakpoints."""
        lo, hi = _q(lo), _q(hi)
        keep = tuple(p for p in self.pieces if p.lo >= lo and p.hi <= hi)
        if not keep or keep[0].lo != lo or keep[-1].hi != hi:
            raise ValueError("restrict() needs breakpoints as bounds")
        if self.side == SOLID_TORUS and lo != 0:
            raise ValueError("a solid-torus restriction must keep the core rho = 0")
        return ReebProfile(self.side, keep, f"{self.name}[{lo},{hi}]", dict(self.meta))


# -------------------------------------------------------------- contact check

def contact_sign(side: str) -> int:
    """+1: f g' - f' g > 0 (torus shell); -1: f' g - f g' > 0 (solid torus)."""
    return 1 if side == TORUS_SHELL else -1


def contact_poly(piece: Piece, side: str) -> Poly:
    c = padd(pmul(piece.f, piece.dg), pscale(pmul(piece.df, piece.g), -1))
    return pscale(c, contact_sign(side))


def contact_expression(p: ReebProfile, x):
    f, g, df, dg = p.values(x)
    return contact_sign(p.side) * (f * dg - df * g)


@dataclass(frozen=True)
class ContactReport:
    ok: bool
    margin: float
    worst_at: float
    limit: Optional[Fraction] = None
    points: int = 0


def _real_roots(poly: Sequence, lo: float, hi: float) -> list[float]:
    c = [float(a) for a in poly]
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    if len(c) < 2:
        return []
    r = np.roots(c[::-1])
    out = []
    for z in r:
        if abs(z.imag) <= 1e-9 * max(1.0, abs(z.real)) and lo < z.real < hi:
            out.append(float(z.real))
    return sorted(out)


def check_contact(p: ReebProfile, grid: int = 1000) -> ContactReport:
    """Sample the contact expression on a grid, at breakpoints and at its
    critical points; on a solid torus also test lim C(rho)/rho at 0."""
    worst, worst_at, count, ok = math.inf, math.nan, 0, True
    limit = None
    for k, pc in enumerate(p.pieces):
        cpoly = contact_poly(pc, p.side)
        width = pc.hi - pc.lo
        inner = p.side == SOLID_TORUS and k == 0
        test = cpoly
        if inner:
            if cpoly[0] != 0:
                return ContactReport(False, float(cpoly[0]), 0.0, None, 1)
            test = _trim(cpoly[1:])
            limit = test[0]
            if limit <= 0:
                ok = False
        fw = float(width)
        ts = [fw * i / grid for i in range(grid + 1)]
        ts += _real_roots(pderiv(test), 0.0, fw)
        fc = [float(a) for a in cpoly]
        ft = [float(a) for a in test]
        for t in ts:
            if inner and t == 0:
                continue
            v = peval(fc, t)
            if peval(ft, t) <= 0:
                ok = False
            if v < worst:
                worst, worst_at = v, float(pc.lo) + t
            count += 1
        for t in (Fraction(0), width):
            if inner and t == 0:
                continue
            v = peval(cpoly, t)
            if v <= 0:
                ok = False
            if float(v) < worst:
                worst, worst_at = float(v), float(pc.lo + t)
            count += 1
    return ContactReport(ok and worst > 0, worst, worst_at, limit, count)


# --------------------------------------------------------------------- slopes

def reeb_slope(p: ReebProfile, x):
    """-g'/f' at x (math.inf where f' = 0)."""
    _, _, df, dg = p.values(x)
    if df == 0 and dg == 0:
        raise DegenerateDirection(f"f' = g' = 0 at {x}")
    if df == 0:
        return math.inf
    return -dg / df


def reeb_direction(p: ReebProfile, x):
    """Positive Reeb direction (theta, t) up to a positive factor."""
    _, _, df, dg = p.values(x)
    return (-df, dg) if p.side == TORUS_SHELL else (df, -dg)


@dataclass(frozen=True)
class MorseBottRecord:
    parameter: float
    p: int
    q: int
    action: float
    direction: tuple[int, int]
    family_end: Optional[float] = None

    @property
    def slope(self):
        return math.inf if self.q == 0 else Fraction(self.p, self.q)

    def as_row(self) -> tuple:
        return (repr(self.parameter), self.p, self.q, repr(self.action))


def _slope_pq(a: int, b: int) -> tuple[int, int]:
    if a == 0:
        return 1, 0
    return (b if a > 0 else -b), abs(a)


def record_action(p: ReebProfile, x, direction: tuple[int, int]):
    f, g, _, _ = p.values(x)
    a, b = direction
    return a * g + b * f


def _primitive_of(u: tuple[Fraction, Fraction]) -> tuple[int, int]:
    ux, uy = Fraction(u[0]), Fraction(u[1])
    den = ux.denominator * uy.denominator // math.gcd(ux.denominator, uy.denominator)
    a, b = int(ux * den), int(uy * den)
    gd = math.gcd(a, b)
    return a // gd, b // gd


def _cross(u, w) -> float:
    return u[0] * w[1] - u[1] * w[0]


class _PieceScanner:
    def __init__(self, prof: ReebProfile, piece: Piece, L: float, q_max: int, inner: bool):
        self.prof, self.pc, self.L, self.q_max = prof, piece, L, q_max
        self.sign = 1 if prof.side == TORUS_SHELL else -1
        self.fl = piece._float
        self.inner = inner
        self.cpoly = [float(a) for a in contact_poly(piece, prof.side)]

    def u(self, t: float) -> tuple[float, float]:
        df, dg = peval(self.fl[2], t), peval(self.fl[3], t)
        return (-df, dg) if self.sign > 0 else (df, -dg)

    def reeb_norm(self, t: float) -> float:
        ux, uy = self.u(t)
        c = peval(self.cpoly, t)
        return math.hypot(ux, uy) / c if c > 0 else math.inf

    def fg(self, t: float) -> tuple[float, float]:
        return peval(self.fl[0], t), peval(self.fl[1], t)

    def angle(self, t: float) -> float:
        ux, uy = self.u(t)
        return math.atan2(uy, ux)

    def chunks(self) -> list[tuple[float, float]]:
        pc = self.pc
        width = float(pc.hi - pc.lo)
        rot = padd(pmul(pc.df, pderiv(pc.dg)), pscale(pmul(pc.dg, pderiv(pc.df)), -1))
        cuts = [0.0] + _real_roots(rot, 0.0, width) + [width]
        if self.inner:
            cuts[0] = min(1e-12, width * 1e-9)
        out = []
        for lo, hi in zip(cuts, cuts[1:]):
            self._split(lo, hi, out, 0)
        return out

    def _sweep(self, lo: float, hi: float) -> float:
        ts = [lo + (hi - lo) * i / 8 for i in range(9)]
        ang = [self.angle(t) for t in ts]
        tot = 0.0
        for a, b in zip(ang, ang[1:]):
            d = (b - a + math.pi) % (2 * math.pi) - math.pi
            tot += abs(d)
        return tot

    def _split(self, lo, hi, out, depth):
        if depth < 30 and self._sweep(lo, hi) > math.pi / 3:
            mid = 0.5 * (lo + hi)
            self._split(lo, mid, out, depth + 1)
            self._split(mid, hi, out, depth + 1)
        else:
            out.append((lo, hi))

    def rmax(self, lo: float, hi: float) -> float:
        return max(self.reeb_norm(lo + (hi - lo) * i / 32) for i in range(33))

    def candidates(self, lo: float, hi: float) -> Iterable[tuple[int, int]]:
        u1, u2 = self.u(lo), self.u(hi)
        if _cross(u1, u2) < 0:
            u1, u2 = u2, u1
        nmax = self.L * self.rmax(lo, hi) * 1.5 + 2.0
        if not math.isfinite(nmax):
            raise DegenerateDirection("contact expression vanishes inside the scan range")
        mid = (u1[0] + u2[0], u1[1] + u2[1])
        for a in range(-self.q_max, self.q_max + 1):
            if abs(a) > nmax:
                continue
            if a == 0:
                bs = (-1, 1)
            else:
                bound = math.sqrt(max(nmax * nmax - a * a, 0.0))
                blo, bhi = -bound, bound
                # cross(u1, w) = u1x b - u1y a >= 0 ; cross(w, u2) = a u2y - b u2x >= 0
                for cx, c0 in ((u1[0], -u1[1] * a), (-u2[0], a * u2[1])):
                    if cx > 0:
                        blo = max(blo, -c0 / cx)
                    elif cx < 0:
                        bhi = min(bhi, -c0 / cx)
                    elif c0 < 0 and abs(c0) > 1e-12 * abs(a):
                        blo, bhi = 1.0, 0.0
                if blo > bhi + 2:
                    continue
                bs = range(math.floor(blo) - 1, math.ceil(bhi) + 2)
            for b in bs:
                if math.gcd(a, b) != 1:
                    continue
                if a * mid[0] + b * mid[1] <= 0:
                    continue
                yield a, b

    def roots(self, lo: float, hi: float, w: tuple[int, int]) -> list[float]:
        h1, h2 = _cross(self.u(lo), w), _cross(self.u(hi), w)
        scale = math.hypot(*w)
        n1 = math.hypot(*self.u(lo)) * scale or 1.0
        n2 = math.hypot(*self.u(hi)) * scale or 1.0
        if abs(h1) <= 1e-13 * n1:
            return [lo]
        if abs(h2) <= 1e-13 * n2:
            return [hi]
        if h1 * h2 > 0:
            return []
        a, b = lo, hi
        while b - a > 1e-13 * max(1.0, abs(a)) and b - a > 1e-15:
            m = 0.5 * (a + b)
            hm = _cross(self.u(m), w)
            if hm == 0:
                a = b = m
                break
            if (hm > 0) == (h1 > 0):
                a, h1 = m, hm
            else:
                b = m
        return [0.5 * (a + b)]


def _constant_family(prof: ReebProfile, pc: Piece, L: float, q_max: int) -> list[MorseBottRecord]:
    mid = (pc.lo + pc.hi) / 2
    u = reeb_direction(prof, mid)
    if u[0] == 0 and u[1] == 0:
        raise DegenerateDirection(f"f' = g' = 0 on [{pc.lo}, {pc.hi}]")
    a, b = _primitive_of(u)
    p, q = _slope_pq(a, b)
    if q > q_max:
        return []
    act = record_action(prof, mid, (a, b))
    if act <= 0 or act > L:
        return []
    return [MorseBottRecord(float(pc.lo), p, q, float(act), (a, b), float(pc.hi))]


def _scan_piece(prof: ReebProfile, k: int, L: float, q_max: int) -> list[MorseBottRecord]:
    pc = prof.pieces[k]
    rot = padd(pmul(pc.df, pderiv(pc.dg)), pscale(pmul(pc.dg, pderiv(pc.df)), -1))
    if pis_zero(rot):
        return _constant_family(prof, pc, L, q_max)
    sc = _PieceScanner(prof, pc, L, q_max, inner=(prof.side == SOLID_TORUS and k == 0))
    lo0 = float(pc.lo)
    out = []
    for clo, chi in sc.chunks():
        for w in sc.candidates(clo, chi):
            for t in sc.roots(clo, chi, w):
                ux, uy = sc.u(t)
                if ux * w[0] + uy * w[1] <= 0:
                    continue
                f, g = sc.fg(t)
                act = w[0] * g + w[1] * f
                if 0 < act <= L:
                    p, q = _slope_pq(*w)
                    out.append(MorseBottRecord(lo0 + t, p, q, act, w))
    return out


def scan_morse_bott(p: ReebProfile, L: float, q_max: int, threads: int = 1) -> list[MorseBottRecord]:
    """Closed Reeb orbit tori with slope denominator <= q_max and action <= L."""
    if L <= 0:
        raise ValueError("L must be positive")
    idx = range(len(p.pieces))
    if threads > 1 and len(p.pieces) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda k: _scan_piece(p, k, L, q_max), idx))
    else:
        parts = [_scan_piece(p, k, L, q_max) for k in idx]
    recs = sorted((r for part in parts for r in part), key=lambda r: (r.parameter, r.q, r.p))
    out: list[MorseBottRecord] = []
    for r in recs:
        dup = False
        for o in out:
            if o.direction != r.direction:
                continue
            if o.family_end is not None and o.parameter - 1e-12 <= r.parameter <= o.family_end + 1e-12:
                dup = True
            elif abs(o.parameter - r.parameter) <= 1e-9:
                dup = True
            if dup:
                break
        if not dup:
            out.append(r)
    return out


# ----------------------------------------------------------------- surrogates

def irrational_surrogate(x: Union[float, Fraction, str], min_den: int = 10**6) -> Fraction:
    """First continued-fraction convergent of x with denominator > min_den."""
    v = Fraction(x) if not isinstance(x, str) else Fraction(x)
    for c in convergents(v):
        if c.denominator > min_den:
            return c
    raise InfeasibleParameters(f"{x} has no convergent with denominator > {min_den}; it is too simple a rational")


def convergents(v: Fraction) -> list[Fraction]:
    out = []
    h0, h1, k0, k1 = 0, 1, 1, 0
    num, den = v.numerator, v.denominator
    while den:
        a, rem = divmod(num, den)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(Fraction(h1, k1))
        num, den = den, rem
    return out


# --------------------------------------------------------- worked examples

def example_core_only(nu: Number, C: Number = 2, rho_max: Number = 1) -> ReebProfile:
    """(nu rho^2, C - rho^2): the core is the only simple orbit when nu is irrational."""
    nu, C = _q(nu), _q(C)
    return ReebProfile.from_global(SOLID_TORUS, [0, rho_max], [((0, 0, nu), (C, 0, -1))],
                                   name="example-1", meta={"nu": nu, "C": C})


def example_monotone(C: Number = 2, rho_max: Number = 1) -> ReebProfile:
    """(rho^2, C - rho^4): slope 2 rho^2 sweeps upward from 0."""
    C = _q(C)
    return ReebProfile.from_global(SOLID_TORUS, [0, rho_max], [((0, 0, 1), (C, 0, 0, 0, -1))],
                                   name="example-2", meta={"C": C})


# ------------------------------------------------------------------- alpha_delta

def _lin(v0, v1, width) -> Poly:
    return _trim([Fraction(v0), (Fraction(v1) - Fraction(v0)) / width])


def build_alpha_delta(delta: Number, anchor: tuple[Number, Number] = (2, Fraction(1, 2)),
                      eps_prox: Optional[Number] = None) -> ReebProfile:
    """Profile on [1, 2] with 0 <= f'/g' <= delta peaking at 3/2 and vertical
    tangents (slope infinity) at both ends.

    The endpoint (f(2), g(2)) is forced onto the ray through
    (f(1), g(1) + eps/2), which does not depend on delta.
    """
    d = _q(delta)
    f1, g1 = _q(anchor[0]), _q(anchor[1])
    if not d > 0:
        raise InfeasibleParameters("delta must be positive")
    if f1 <= 0 or g1 <= 0:
        raise InfeasibleParameters("anchor must lie in the open first quadrant")
    eps = _q(eps_prox) if eps_prox is not None else Fraction(1, 20) * max(f1, g1)
    a = min(d / 4, eps / 16, Fraction(1, 16))
    one, half = Fraction(1), Fraction(3, 2)
    br = [one, one + a, one + 2 * a, half, 2 - 2 * a, 2 - a, Fraction(2)]
    w_mid = half - (one + 2 * a)
    k_lo, k_mid = 2 * a, (2 * a + d) / 2  # f'/g' at 1+a and 1+2a

    def segments(sigma):
        """(k, g') per piece as local polynomials."""
        return [
            ((0, 2), (1,)),
            (_lin(k_lo, k_mid, a), _lin(1, sigma, a)),
            (_lin(k_mid, d, w_mid), (sigma,)),
            (_lin(d, k_mid, w_mid), (sigma,)),
            (_lin(k_mid, k_lo, a), _lin(sigma, 1, a)),
            (_lin(k_lo, 0, a), (1,)),
        ]

    def increments(sigma):
        dfs, dgs = [], []
        for (k, gp), lo, hi in zip(segments(sigma), br, br[1:]):
            fp = pmul(k, gp)
            w = hi - lo
            dfs.append(peval(pinteg(fp), w))
            dgs.append(peval(pinteg(gp), w))
        return sum(dfs), sum(dgs)

    # both increments are affine in sigma; solve the ray condition exactly
    G = eps / 2
    F0, G0 = increments(Fraction(0))
    F1, G1 = increments(Fraction(1))
    Fs, Gs = F1 - F0, G1 - G0
    # (f1 + F)(g1 + G) = f1 (g1 + Gd)  with F = F0 + s Fs, Gd = G0 + s Gs
    denom = f1 * Gs - (g1 + G) * Fs
    if denom == 0:
        raise InfeasibleParameters("cannot place the endpoint on the reference ray")
    sigma = ((f1 + F0) * (g1 + G) - f1 * (g1 + G0)) / denom
    if not sigma > 0:
        raise InfeasibleParameters(f"delta = {float(d):.3g} is too large for the anchor: middle g' = {sigma}")
    pieces = []
    fv, gv = f1, g1
    for (k, gp), lo, hi in zip(segments(sigma), br, br[1:]):
        fpoly = pinteg(pmul(k, gp), fv)
        gpoly = pinteg(gp, gv)
        pieces.append(Piece(lo, hi, fpoly, gpoly))
        fv, gv = peval(fpoly, hi - lo), peval(gpoly, hi - lo)
    if max(abs(fv - f1), abs(gv - g1)) > eps:
        raise InfeasibleParameters(f"trajectory leaves the {float(eps):.3g}-neighbourhood of the anchor")
    prof = ReebProfile(TORUS_SHELL, tuple(pieces), "alpha_delta",
                       {"delta": d, "anchor": (f1, g1), "eps_prox": eps, "ray": (f1, g1 + G), "sigma": sigma})
    if not check_contact(prof, grid=200).ok:
        raise InfeasibleParameters("anchor violates the contact condition f g' - f' g > 0")
    return prof


def audit_alpha_delta(p: ReebProfile) -> dict[str, bool]:
    """Exact check of the six defining conditions."""
    d = p.meta["delta"]
    f1, g1 = p.meta["anchor"]
    eps = p.meta["eps_prox"]
    rf, rg = p.meta["ray"]
    one, half, two = Fraction(1), Fraction(3, 2), Fraction(2)
    res = {"contact": check_contact(p).ok}
    # proximity: extremes of f, g on each piece (monotone pieces, check ends and critical points)
    near = True
    for pc in p.pieces:
        for poly, anchor in ((pc.f, f1), (pc.g, g1)):
            ts = [Fraction(0), pc.hi - pc.lo]
            for r in _real_roots(pderiv(poly), 0.0, float(pc.hi - pc.lo)):
                ts.append(_q(r))
            near &= all(abs(peval(poly, t) - anchor) <= eps for t in ts)
    res["proximity"] = near
    ratio_ok = True
    for pc in p.pieces:
        k_num, k_den = pc.df, pc.dg
        # k = f'/g' with g' > 0; monotonicity via the sign of f''g' - f'g''
        wid = pc.hi - pc.lo
        ts = [wid * i / 64 for i in range(65)]
        for t in ts:
            gp = peval(k_den, t)
            if gp <= 0:
                ratio_ok = False
                continue
            k = peval(k_num, t) / gp
            if not 0 <= k <= d:
                ratio_ok = False
            wr = peval(pderiv(k_num), t) * gp - peval(k_num, t) * peval(pderiv(k_den), t)
            inside = 0 < t < wid
            if inside and pc.hi <= half and wr <= 0:
                ratio_ok = False
            if inside and pc.lo >= half and wr >= 0:
                ratio_ok = False
    fh, gh, dfh, dgh = p.values(half)
    res["ratio"] = ratio_ok and dfh == d * dgh
    f0, g0, df0, dg0 = p.values(one)
    fe, ge, dfe, dge = p.values(two)
    first, last = p.pieces[0], p.pieces[-1]
    res["left_end"] = (first.f == _trim([f1, 0, 1]) and first.g == _trim([g1, 1]))
    w = last.hi - last.lo
    res["right_end"] = (pshift(last.f, w) == _trim([fe, 0, -1]) and pshift(last.g, w) == _trim([ge, 1]))
    res["ray"] = fe * rg == ge * rf
    return res


# --------------------------------------------------------------------- V profile

def build_V_profile(anchor: tuple[Number, Number], C: Number = 4, a: Number = Fraction(1, 10)) -> ReebProfile:
    """Solid torus from (rho^2, C - rho^2) near the core to
    (f1 - (rho-1)^2, g1 - (rho-1)) near rho = 1, with -g'/f' rising from 1 to infinity."""
    f1, g1, C, a = _q(anchor[0]), _q(anchor[1]), _q(C), _q(a)
    if not C > 1:
        raise InfeasibleParameters("C must exceed 1")
    if not 0 < a < Fraction(1, 4):
        raise InfeasibleParameters("collar width a must lie in (0, 1/4)")
    width = 1 - 2 * a
    need_g = C - g1 - a - a * a     # integral of -g' over the middle
    need_f = f1 - 2 * a * a         # integral of f' over the middle
    if need_g <= 0 or need_f <= 0:
        raise InfeasibleParameters("anchor incompatible with C: the middle would need a non-positive increment")
    # -g' on the middle (local s in [0,1]):  2a + (1-2a) s + beta s (1 - s)
    base = (2 * a, 1 - 2 * a)
    bump = (Fraction(0), Fraction(1), Fraction(-1))
    beta = (need_g / width - peval(pinteg(base), 1)) / peval(pinteg(bump), 1)
    wpoly = padd(base, pscale(bump, beta))
    # w > 0 on [0, 1]: it is a quadratic with w(0), w(1) > 0 so only a maximum can occur inside when beta > 0
    if beta < 0:
        vert = Fraction(1, 2) + (1 - 2 * a) / (2 * beta)
        if 0 < vert < 1 and peval(wpoly, vert) <= 0:
            raise InfeasibleParameters("g' changes sign on the middle collar")
    choice = None
    for n in range(1, 11):
        fast = padd((2 * a,), pscale(pshift((0,) * n + (1,), -1), (1 - 2 * a) * (-1) ** n))
        slow = padd((1,), pscale((0,) * n + (1,), -(1 - 2 * a)))
        i_fast = peval(pinteg(pmul(fast, wpoly)), 1) * width
        i_slow = peval(pinteg(pmul(slow, wpoly)), 1) * width
        if i_slow == i_fast:
            continue
        t = (need_f - i_slow) / (i_fast - i_slow)
        if 0 <= t <= 1:
            choice = padd(pscale(fast, t), pscale(slow, 1 - t))
            break
    if choice is None:
        raise InfeasibleParameters("no monotone slope profile reaches the anchor value of f")
    # convert the local variable s = (rho - a)/width into rho - a
    def rescale(p):
        return _trim([c / width ** i for i, c in enumerate(p)])
    w_r = rescale(wpoly)
    u_r = rescale(choice)
    f_a, g_a = a * a, C - a * a
    mid_f = pinteg(pmul(u_r, w_r), f_a)
    mid_g = pinteg(pscale(w_r, -1), g_a)
    inner = Piece(0, a, (0, 0, 1), (C, 0, -1))
    middle = Piece(a, 1 - a, mid_f, mid_g)
    outer_f = pshift(_trim([f1, 0, -1]), -a)   # f1 - (rho-1)^2 in (rho - (1-a))
    outer_g = pshift(_trim([g1, -1]), -a)
    outer = Piece(1 - a, 1, outer_f, outer_g)
    prof = ReebProfile(SOLID_TORUS, (inner, middle, outer), "V", {"anchor": (f1, g1), "C": C, "a": a})
    if not check_contact(prof, grid=400).ok:
        raise InfeasibleParameters("the solid-torus contact condition fails for this anchor and C")
    return prof


# ------------------------------------------------------------- action floor

@dataclass(frozen=True)
class ActionFloor:
    profile: ReebProfile
    K: float
    window: tuple[Fraction, Fraction]
    scale: Fraction
    N: Fraction


def build_action_floor_extension(L: Number, boundary: tuple[Number, Number] = (1, None),
                                 min_den: int = 10**6) -> ReebProfile:
    return action_floor(L, boundary, min_den).profile


def action_floor(L: Number, boundary: tuple[Number, Number] = (1, None), min_den: int = 10**6) -> ActionFloor:
    """Torus shell on [0, 1/2] whose closed orbits all have action >= L.

    boundary = (c, r): v(0) = (c, 0) and v'(0) has slope -r > 0 (r is a
    negative high-denominator surrogate; default -sqrt(2)).
    """
    L = _q(L)
    if not L > 0:
        raise ValueError("L must be positive")
    c = _q(boundary[0])
    r = boundary[1]
    r = -irrational_surrogate(math.sqrt(2), min_den) if r is None else _q(r)
    if not c > 0 or not r < 0:
        raise InfeasibleParameters("need c > 0 and a negative slope parameter r")
    s = -r
    y0 = Fraction(1, 8)
    K = float(c * s) / math.sqrt(1 + float(s) ** 2)
    # window: the next convergent above s whose gap rationals are long enough
    conv = convergents(s)
    target = float(L) / K
    s2 = None
    for i in range(len(conv) - 1):
        cand, nxt = conv[i], conv[i + 1]
        if cand > s and cand.denominator + nxt.denominator > target and cand.denominator > target:
            s2 = cand
            break
    if s2 is None:
        raise InfeasibleParameters("slope surrogate is too coarse for this L")
    lam = Fraction(1)
    for _ in range(200):
        prof, N = _floor_profile(c, s, s2, lam, y0)
        if _tangent_distance_ok(prof, 2 * y0, Fraction(1, 2), 1.01 * float(L)):
            return ActionFloor(prof, K, (s, s2), lam, N)
        lam *= 2
    raise InfeasibleParameters("could not make the tangent lines avoid the disk of radius L")


def _floor_profile(c, s, s2, lam, y0):
    sc = lam / y0
    p1 = Piece(0, y0, (c, lam / y0), (Fraction(0), s * lam / y0))
    # turn 1: v' = sc (1, s + (s2 - s) t / y0)
    f2 = pinteg((sc,), c + lam)
    g2 = pinteg((sc * s, sc * (s2 - s) / y0), s * lam)
    p2 = Piece(y0, 2 * y0, f2, g2)
    P2 = (peval(f2, y0), peval(g2, y0))
    mu = 1 / (2 * s)
    end = (-s * mu, mu)   # direction (-s, 1) scaled
    f3 = pinteg((sc, sc * (end[0] - 1) / y0), P2[0])
    g3 = pinteg((sc * s2, sc * (end[1] - s2) / y0), P2[1])
    p3 = Piece(2 * y0, 3 * y0, f3, g3)
    P3 = (peval(f3, y0), peval(g3, y0))
    # quadratic Bezier P3 -> Q -> (1, N) with B'(0) = v'(3 y0)
    Q = (P3[0] + lam * end[0] / 2, P3[1] + lam * end[1] / 2)
    N = Q[1]
    P4 = (Fraction(1), N)
    # B(t) = P3 + 2t(Q - P3) + t^2 (P3 - 2Q + P4), t = (y - 3y0)/y0
    f4 = _trim([P3[0], 2 * (Q[0] - P3[0]) / y0, (P3[0] - 2 * Q[0] + P4[0]) / y0 ** 2])
    g4 = _trim([P3[1], 2 * (Q[1] - P3[1]) / y0, (P3[1] - 2 * Q[1] + P4[1]) / y0 ** 2])
    p4 = Piece(3 * y0, 4 * y0, f4, g4)
    prof = ReebProfile(TORUS_SHELL, (p1, p2, p3, p4), "action-floor",
                       {"c": c, "r": -s, "window": (s, s2), "scale": lam, "N": N})
    return prof, N


def _tangent_distance_ok(p: ReebProfile, lo, hi, bound: float, grid: int = 400) -> bool:
    for pc in p.pieces:
        if pc.hi <= lo or pc.lo >= hi:
            continue
        cpoly = [float(a) for a in contact_poly(pc, p.side)]
        w = float(pc.hi - pc.lo)
        for i in range(grid + 1):
            t = w * i / grid
            _, _, df, dg = pc.values(t + float(pc.lo))
            if peval(cpoly, t) / math.hypot(df, dg) < bound:
                return False
    return True


# --------------------------------------------------------------------- output

def sample_trajectory(p: ReebProfile, per_piece: int = 64) -> list[tuple[float, float]]:
    pts = []
    for k, pc in enumerate(p.pieces):
        w = pc.hi - pc.lo
        for i in range(0 if k == 0 else 1, per_piece + 1):
            f, g, _, _ = pc.values(pc.lo + w * Fraction(i, per_piece))
            pts.append((float(f), float(g)))
    return pts


def render_svg(p: ReebProfile, size: int = 400, per_piece: int = 64) -> str:
    pts = sample_trajectory(p, per_piece)
    fs = [x for x, _ in pts]
    gs = [y for _, y in pts]
    fmin, fmax, gmin, gmax = min(fs), max(fs), min(gs), max(gs)
    span_f = (fmax - fmin) or 1.0
    span_g = (gmax - gmin) or 1.0
    m = 40
    inner = size - 2 * m

    def xy(f, g):
        return m + inner * (f - fmin) / span_f, size - m - inner * (g - gmin) / span_g

    poly = " ".join(f"{x:.3f},{y:.3f}" for x, y in (xy(f, g) for f, g in pts))
    title = p.name or p.side
    lines = [
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f"<title>{_esc(title)}</title>",
        f'<line x1="{m}" y1="{size - m}" x2="{size - m}" y2="{size - m}" stroke="black"/>',
        f'<line x1="{m}" y1="{size - m}" x2="{m}" y2="{m}" stroke="black"/>',
        f'<text x="{size - m}" y="{size - m + 20}" font-size="14">f</text>',
        f'<text x="{m - 20}" y="{m}" font-size="14">g</text>',
        f'<text x="{m}" y="{size - m + 20}" font-size="10">{fmin:.4g}</text>',
        f'<text x="{size - m - 60}" y="{size - m + 32}" font-size="10">{fmax:.4g}</text>',
        f'<text x="2" y="{size - m}" font-size="10">{gmin:.4g}</text>',
        f'<text x="2" y="{m + 12}" font-size="10">{gmax:.4g}</text>',
        f'<polyline fill="none" stroke="blue" stroke-width="1.5" points="{poly}"/>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_profile_plot(p: ReebProfile, path) -> str:
    text = render_svg(p)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return str(path)


# -------------------------------------------------------------- serialization

def profile_to_dict(p: ReebProfile) -> dict:
    return {
        "side": p.side,
        "name": p.name,
        "pieces": [
            {"lo": str(pc.lo), "hi": str(pc.hi), "f": [str(a) for a in pc.f], "g": [str(a) for a in pc.g]}
            for pc in p.pieces
        ],
    }


def profile_from_dict(d: Mapping) -> ReebProfile:
    """Either explicit pieces (local coefficients) or a named builder."""
    if "builder" in d:
        kind = d["builder"]
        if kind == "alpha_delta":
            delta = _param(d["delta"])
            return build_alpha_delta(delta, tuple(_q(x) for x in d.get("anchor", (2, "1/2"))), d.get("eps_prox"))
        if kind == "V":
            return build_V_profile(tuple(_q(x) for x in d["anchor"]), _q(d.get("C", 4)))
        if kind == "action_floor":
            r = d.get("r")
            return build_action_floor_extension(_q(d["L"]), (_q(d.get("c", 1)), None if r is None else _param(r)))
        if kind == "example1":
            return example_core_only(_param(d["nu"]), _q(d.get("C", 2)))
        if kind == "example2":
            return example_monotone(_q(d.get("C", 2)))
        raise InvalidModel(f"unknown profile builder {kind!r}")
    pieces = tuple(Piece(_q(pc["lo"]), _q(pc["hi"]), tuple(_q(a) for a in pc["f"]), tuple(_q(a) for a in pc["g"]))
                   for pc in d["pieces"])
    return ReebProfile(d["side"], pieces, d.get("name", ""))


def _param(v) -> Fraction:
    """Numbers pass through; {"surrogate": x} builds a high-denominator approximant."""
    if isinstance(v, Mapping):
        return irrational_surrogate(float(v["surrogate"]), int(v.get("min_den", 10**6)))
    if isinstance(v, str):
        return Fraction(v)
    return _q(v)
