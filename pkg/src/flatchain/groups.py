"""Normed abelian coefficient groups.

A chain's coefficients live in an abelian group carrying a norm that is
positive off zero, symmetric, subadditive, bounded below by a gap constant
``alpha`` on nonzero elements, and whose closed balls are finite.  The
concrete instances shipped here are the integers (with an optional sublinear
exponent on the norm), the cyclic groups, and finite-rank free abelian
groups.  Elements are plain ints (or int tuples for the free groups); norms
are 64-bit floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Callable

import numpy as np

Element = Any  # int, or tuple[int, ...] for free groups


@dataclass(frozen=True)
class GroupSpec:
    """A normed abelian group, immutable after construction.

    ``ball(r)`` must return the finite list of all elements of norm <= r.
    ``alpha`` is the gap constant: norm(sigma) >= alpha for sigma != zero.
    """

    name: str
    zero: Element
    add: Callable[[Element, Element], Element]
    neg: Callable[[Element], Element]
    norm: Callable[[Element], float]
    alpha: float
    ball: Callable[[float], list]
    params: dict = field(default_factory=dict, compare=False)

    def sum(self, elements) -> Element:
        total = self.zero
        for e in elements:
            total = self.add(total, e)
        return total

    def to_dict(self) -> dict:
        """Serializable header, used by chain and field files."""
        return {"group": self.name, **self.params}

    def same_as(self, other: "GroupSpec") -> bool:
        return self.to_dict() == other.to_dict()


def make_int_group(scale: float = 1.0, exponent: float = 1.0) -> GroupSpec:
    """Integers with norm(d) = scale * |d|**exponent.

    The exponent must lie in (0, 1] so the norm stays subadditive
    (|a+b|^e <= |a|^e + |b|^e for e <= 1).  The gap constant is ``scale``.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if not 0 < exponent <= 1:
        raise ValueError(f"exponent must lie in (0, 1], got {exponent}")

    def norm(d: int) -> float:
        return scale * abs(d) ** exponent

    def ball(radius: float) -> list:
        if radius < 0:
            return []
        r = (radius / scale) ** (1.0 / exponent) if radius > 0 else 0.0
        k = int(math.floor(r + 1e-12))
        return [d for d in range(-k, k + 1) if norm(d) <= radius + 1e-12]

    return GroupSpec(
        name="int",
        zero=0,
        add=lambda a, b: a + b,
        neg=lambda a: -a,
        norm=norm,
        alpha=scale,
        ball=ball,
        params={"scale": float(scale), "exponent": float(exponent)},
    )


def make_cyclic_group(n: int, scale: float = 1.0) -> GroupSpec:
    """Z_n with elements {0, .., n-1} and norm(k) = scale * min(k, n-k)."""
    if n < 2:
        raise ValueError(f"cyclic group needs n >= 2, got {n}")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")

    def norm(k: int) -> float:
        k = k % n
        return scale * min(k, n - k)

    def ball(radius: float) -> list:
        return [k for k in range(n) if norm(k) <= radius + 1e-12]

    return GroupSpec(
        name="cyclic",
        zero=0,
        add=lambda a, b: (a + b) % n,
        neg=lambda a: (-a) % n,
        norm=norm,
        alpha=scale,
        ball=ball,
        params={"n": int(n), "scale": float(scale)},
    )


def make_free_group(rank: int, scale: float = 1.0) -> GroupSpec:
    """Z^rank with the scaled L1 norm; elements are int tuples."""
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")

    zero = (0,) * rank

    def norm(v) -> float:
        return scale * sum(abs(c) for c in v)

    def ball(radius: float) -> list:
        if radius < 0:
            return []
        k = int(math.floor(radius / scale + 1e-12))
        return [
            v
            for v in product(range(-k, k + 1), repeat=rank)
            if norm(v) <= radius + 1e-12
        ]

    return GroupSpec(
        name="free",
        zero=zero,
        add=lambda a, b: tuple(x + y for x, y in zip(a, b)),
        neg=lambda a: tuple(-x for x in a),
        norm=norm,
        alpha=scale,
        ball=ball,
        params={"rank": int(rank), "scale": float(scale)},
    )


def group_from_dict(d: dict) -> GroupSpec:
    """Rebuild a GroupSpec from its serialized header."""
    kind = d["group"]
    if kind == "int":
        return make_int_group(d.get("scale", 1.0), d.get("exponent", 1.0))
    if kind == "cyclic":
        return make_cyclic_group(d["n"], d.get("scale", 1.0))
    if kind == "free":
        return make_free_group(d["rank"], d.get("scale", 1.0))
    raise ValueError(f"unknown group kind {kind!r}")


@dataclass
class AxiomReport:
    """Outcome of a randomized check of the group/norm contract."""

    samples: int
    passed: bool
    violations: list  # (axiom name, witness) pairs

    def __bool__(self) -> bool:
        return self.passed


def check_group_axioms(g: GroupSpec, samples: int = 1000, seed: int = 0,
                       radius: float | None = None) -> AxiomReport:
    """Randomized verification of the norm axioms and the gap constant.

    Samples elements from a ball of the group (radius defaults to 10*alpha)
    and checks: norm(0) = 0, positivity off zero, symmetry, the triangle
    inequality (to 1e-12), norm >= alpha off zero, and that ``ball`` returns
    exactly the elements it should on nested radii.  Report-only.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    radius = 10.0 * g.alpha if radius is None else radius
    universe = g.ball(radius)
    violations = []

    if abs(g.norm(g.zero)) > 1e-12:
        violations.append(("zero_norm", g.zero))

    idx = rng.integers(0, len(universe), size=(samples, 2))
    for i, j in idx:
        a, b = universe[i], universe[j]
        na, nb = g.norm(a), g.norm(b)
        if a != g.zero and na <= 0:
            violations.append(("positivity", a))
        if a != g.zero and na < g.alpha - 1e-12:
            violations.append(("gap", a))
        if abs(na - g.norm(g.neg(a))) > 1e-12:
            violations.append(("symmetry", a))
        s = g.add(a, b)
        if g.norm(s) > na + nb + 1e-12:
            violations.append(("triangle", (a, b)))

    # ball consistency: smaller balls are exactly the norm-filtered subsets
    for frac in (0.25, 0.5, 1.0):
        r = radius * frac
        got = set(g.ball(r))
        want = {e for e in universe if g.norm(e) <= r + 1e-12}
        if got != want:
            violations.append(("ball", r))
            break

    return AxiomReport(samples=samples, passed=not violations,
                       violations=violations)
