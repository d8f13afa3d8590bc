"""Conley-Zehnder, Fredholm and trivial-class ECH indices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Union

from .errors import DegenerateOrbit, MissingConvention
from .orbitsets import OrbitSet, SimpleOrbit

TORUS = "torus"
DISK = "disk"

Number = Union[int, float, Fraction]


def _exact(x: Number) -> Fraction:
    # floats go through their shortest repr so 10.01 means 1001/100
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def cz_core_cover(n: int, r: Number) -> int:
    """2 floor(n r) + 1 for the n-fold cover of the core."""
    if n < 1:
        raise ValueError("cover multiplicity must be >= 1 (the empty set has index 0)")
    if not r > 0:
        raise ValueError("r must be positive")
    nr = n * _exact(r)
    if nr.denominator == 1:
        raise DegenerateOrbit(f"n*r = {nr} is an integer; the cover is degenerate")
    return 2 * math.floor(nr) + 1


_PERTURBED = {"e": -1, "h": 0, "h'": 0, "e'": 1}


def cz_boundary_perturbed(orbit: Union[str, SimpleOrbit]) -> int:
    name = orbit if isinstance(orbit, str) else orbit.name
    try:
        return _PERTURBED[name]
    except KeyError:
        raise ValueError(f"{name!r} is not one of the boundary orbits e, h, h', e'") from None


@dataclass(frozen=True)
class IndexContext:
    """Index convention: explicit (orbit name, cover) -> mu entries plus
    optional per-orbit rules (a function of the cover multiplicity)."""

    table: Mapping[tuple[str, int], int] = field(default_factory=dict)
    rules: Mapping[str, Callable[[int], int]] = field(default_factory=dict)
    framing_tag: str = TORUS

    def mu(self, orbit: SimpleOrbit, j: int) -> int:
        hit = self.table.get((orbit.name, j))
        if hit is not None:
            return hit
        rule = self.rules.get(orbit.name)
        if rule is not None:
            return rule(j)
        own = orbit.cz(j)
        if own is not None:
            return own
        raise MissingConvention(f"no Conley-Zehnder index for {orbit.name}^{j} in the {self.framing_tag} framing")

    @classmethod
    def morse_bott(cls, positive: Mapping[str, str] = (), negative: Mapping[str, str] = ()) -> "IndexContext":
        """``positive``/``negative`` map orbit name -> 'e' or 'h' role.

        Positive family: mu(e^j) = 1, mu(h) = 0.  Negative: mu(e^j) = -1, mu(h) = 0.
        """
        rules: dict[str, Callable[[int], int]] = {}
        for names, sign in ((dict(positive), 1), (dict(negative), -1)):
            for name, role in names.items():
                if role == "e":
                    rules[name] = (lambda j, s=sign: s)
                elif role == "h":
                    rules[name] = lambda j: 0
                else:
                    raise ValueError("role must be 'e' or 'h'")
        return cls(rules=rules, framing_tag=TORUS)

    @classmethod
    def boundary_perturbed(cls) -> "IndexContext":
        return cls(rules={k: (lambda j, v=v: v) for k, v in _PERTURBED.items()}, framing_tag=TORUS)

    @classmethod
    def core(cls, r: Number, name: str = "e") -> "IndexContext":
        return cls(rules={name: lambda j: cz_core_cover(j, r)}, framing_tag=DISK)


def symmetric_cz(g: OrbitSet, ctx: IndexContext) -> int:
    return sum(ctx.mu(o, j) for o, m in g.factors for j in range(1, m + 1))


def fredholm_branched_cover(chi: int, k: int, mu_e: int, mu_ek: int) -> int:
    return -chi + k * mu_e - mu_ek


def ech_index_trivial_class(g: OrbitSet, gp: OrbitSet, ctx: IndexContext, relative_class: str = "trivial") -> int:
    """I(g, g') for a relative class made of trivial cylinders, where the
    relative Chern class and self-intersection terms vanish."""
    if relative_class != "trivial":
        raise ValueError("only unions of trivial cylinders are supported")
    return symmetric_cz(g, ctx) - symmetric_cz(gp, ctx)


def core_absolute_index(n: int, r: Number) -> int:
    """Absolute grading of e^n on the solid torus: 0 for the empty set and
    2 floor(n r) + 1 otherwise.  It comes from normalizing against reference
    forms, so it is not the symmetric CZ difference to the empty set."""
    return 0 if n == 0 else cz_core_cover(n, r)


def index_table(r: Number, n_max: int, name: str = "e") -> list[tuple[int, int, int]]:
    """Rows (n, symmetric CZ of e^n, absolute index of e^n), n = 0..n_max."""
    from .orbitsets import ELLIPTIC

    core = SimpleOrbit(name, ELLIPTIC, 1.0)
    ctx = IndexContext.core(r, name)
    rows = []
    for n in range(n_max + 1):
        g = OrbitSet.single(core, n)
        rows.append((n, symmetric_cz(g, ctx), core_absolute_index(n, r)))
    return rows
