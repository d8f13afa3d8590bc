"""Orbit sets: monomials in simple Reeb orbits over F2.

Elliptic orbits behave like polynomial variables, hyperbolic ones like
Grassmann variables (a repeated hyperbolic factor kills the monomial).
The zero of the algebra is represented by ``None`` so that products and
quotients stay total functions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

ELLIPTIC = "elliptic"
HYPERBOLIC = "hyperbolic"
ZERO = None

BOUNDARY_NAMES = ("e", "h", "e'", "h'")


@dataclass(frozen=True, eq=False)
class SimpleOrbit:
    name: str
    kind: str
    action: float
    page_degree: int = 1
    eta_class: int = 0
    cz_profile: Optional[tuple[tuple[int, int], ...]] = None

    def __post_init__(self):
        if self.kind not in (ELLIPTIC, HYPERBOLIC):
            raise ValueError(f"orbit {self.name!r}: kind must be elliptic or hyperbolic")
        if not self.action > 0:
            raise ValueError(f"orbit {self.name!r}: action must be positive")
        if self.page_degree < 0:
            raise ValueError(f"orbit {self.name!r}: page_degree must be >= 0")
        if self.name in BOUNDARY_NAMES:
            if self.page_degree != 1:
                raise ValueError(f"boundary orbit {self.name!r} must have page_degree 1")
            if self.name in ("e'", "h'") and self.eta_class != 0:
                raise ValueError(f"boundary orbit {self.name!r} must have eta_class 0")
        if isinstance(self.cz_profile, Mapping):
            object.__setattr__(self, "cz_profile", tuple(sorted(self.cz_profile.items())))

    @property
    def hyperbolic(self) -> bool:
        return self.kind == HYPERBOLIC

    def cz(self, j: int) -> Optional[int]:
        if self.cz_profile is None:
            return None
        return dict(self.cz_profile).get(j)

    def __eq__(self, other):
        return isinstance(other, SimpleOrbit) and other.name == self.name

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return f"SimpleOrbit({self.name!r}, {self.kind}, A={self.action})"


@dataclass(frozen=True)
class OrbitSet:
    """Sorted (orbit, multiplicity) pairs; the empty tuple is the empty set."""

    factors: tuple[tuple[SimpleOrbit, int], ...] = ()
    _key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for o, m in self.factors:
            if m < 1:
                raise ValueError("multiplicities must be >= 1")
            if o.hyperbolic and m != 1:
                raise ValueError(f"hyperbolic orbit {o.name!r} with multiplicity {m}")
        object.__setattr__(self, "_key", tuple((o.name, m) for o, m in self.factors))

    @classmethod
    def of(cls, mults: Mapping[SimpleOrbit, int] | Iterable[tuple[SimpleOrbit, int]] = ()) -> "OrbitSet":
        items = mults.items() if isinstance(mults, Mapping) else mults
        merged: dict[SimpleOrbit, int] = {}
        for o, m in items:
            if m:
                merged[o] = merged.get(o, 0) + m
        return cls(tuple(sorted(((o, m) for o, m in merged.items() if m), key=lambda t: t[0].name)))

    @classmethod
    def single(cls, orbit: SimpleOrbit, m: int = 1) -> "OrbitSet":
        return cls(((orbit, m),)) if m else EMPTY

    def __eq__(self, other):
        return isinstance(other, OrbitSet) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __lt__(self, other: "OrbitSet"):
        return self._key < other._key

    def __bool__(self):
        # an orbit set is never the zero element; the empty set is truthy too
        return True

    @property
    def orbits(self) -> tuple[SimpleOrbit, ...]:
        return tuple(o for o, _ in self.factors)

    def mult(self, orbit: SimpleOrbit | str) -> int:
        name = orbit if isinstance(orbit, str) else orbit.name
        for o, m in self.factors:
            if o.name == name:
                return m
        return 0

    def is_empty(self) -> bool:
        return not self.factors

    def __mul__(self, other: "OrbitSet"):
        return multiply(self, other)

    def __truediv__(self, other: "OrbitSet"):
        return divide(self, other)

    def __str__(self):
        if not self.factors:
            return "1"
        return "*".join(o.name if m == 1 else f"{o.name}^{m}" for o, m in self.factors)

    def __repr__(self):
        return f"OrbitSet({self})"


EMPTY = OrbitSet()


def multiply(a: Optional[OrbitSet], b: Optional[OrbitSet]) -> Optional[OrbitSet]:
    if a is None or b is None:
        return ZERO
    if not b.factors:
        return a
    if not a.factors:
        return b
    merged: dict[SimpleOrbit, int] = dict(a.factors)
    for o, m in b.factors:
        if o in merged and o.hyperbolic:
            return ZERO
        merged[o] = merged.get(o, 0) + m
    return OrbitSet.of(merged)


def divide(g: Optional[OrbitSet], d: Optional[OrbitSet]) -> Optional[OrbitSet]:
    """g/d, or ZERO when some multiplicity of d exceeds the one in g."""
    if g is None or d is None:
        return ZERO
    merged = dict(g.factors)
    for o, m in d.factors:
        left = merged.get(o, 0) - m
        if left < 0:
            return ZERO
        merged[o] = left
    return OrbitSet.of(merged)


def action(g: OrbitSet) -> float:
    return sum(m * o.action for o, m in g.factors)


def grade(g: OrbitSet) -> tuple[int, int]:
    j = sum(m * o.page_degree for o, m in g.factors)
    eta = sum(m * o.eta_class for o, m in g.factors)
    return j, eta


_TOKEN = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*'?)\s*(?:\^\s*(\d+))?\s*$")


def parse_monomial(text: str, orbits: Mapping[str, SimpleOrbit]) -> Optional[OrbitSet]:
    """Parse ``"e^2*h"`` style strings; ``"1"`` is the empty set, ``"0"`` is zero."""
    text = text.strip()
    if text == "1":
        return EMPTY
    if text == "0":
        return ZERO
    out: Optional[OrbitSet] = EMPTY
    for part in text.split("*"):
        mt = _TOKEN.match(part)
        if not mt:
            raise ValueError(f"cannot parse monomial factor {part!r} in {text!r}")
        name, power = mt.group(1), int(mt.group(2) or 1)
        if name not in orbits:
            raise KeyError(f"undeclared orbit {name!r} in monomial {text!r}")
        o = orbits[name]
        if o.hyperbolic and power > 1:
            return ZERO
        out = multiply(out, OrbitSet.single(o, power))
    return out
