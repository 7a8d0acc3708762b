"""Polyhedral 0-chains relative to a box domain.

A chain is a finite formal sum of weighted points.  Two chains are equal *in*
the domain when their difference is supported outside it, so canonical form
keeps only atoms strictly inside the open box, with distinct points and
nonzero coefficients, sorted lexicographically.  Point coincidence is decided
after snapping coordinates to a 1e-12 lattice, which makes canonical forms
deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BoundaryContact,
    DomainMismatch,
    GroupMismatch,
    OffsetTooLong,
)
from .groups import Element, GroupSpec, group_from_dict

SNAP = 1e-12
BOUNDARY_TOL_FACTOR = 1e-9  # tau_bd = factor * diam(domain)


def _snap(x) -> tuple:
    return tuple(float(np.round(c / SNAP) * SNAP) for c in x)


@dataclass(frozen=True)
class BoxDomain:
    """An open axis-aligned box (lo_i, hi_i)^n, n >= 2."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(float(c) for c in self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have equal length")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("each lo_i must be < hi_i")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    def contains_open(self, x) -> bool:
        return all(a < c < b for a, c, b in zip(self.lo, x, self.hi))

    def contains_closed(self, x, tol: float = 0.0) -> bool:
        return all(a - tol <= c <= b + tol
                   for a, c, b in zip(self.lo, x, self.hi))

    def boundary_distance(self, x) -> float:
        """Exact Euclidean distance from x to the box boundary."""
        q = np.maximum(np.subtract(self.lo, x), np.subtract(x, self.hi))
        if np.any(q > 0):
            return float(np.linalg.norm(np.maximum(q, 0.0)))
        return float(-np.max(q))

    def nearest_boundary_point(self, x) -> tuple:
        x = np.asarray(x, dtype=float)
        q = np.maximum(self.lo - x, x - self.hi)
        if np.any(q > 0):  # outside: clamp onto the box
            return tuple(np.clip(x, self.lo, self.hi))
        y = x.copy()
        # inside: push the tightest coordinate onto its face
        gaps_lo = x - np.asarray(self.lo)
        gaps_hi = np.asarray(self.hi) - x
        i = int(np.argmin(np.minimum(gaps_lo, gaps_hi)))
        y[i] = self.lo[i] if gaps_lo[i] <= gaps_hi[i] else self.hi[i]
        return tuple(y)

    def contains_box(self, other: "BoxDomain") -> bool:
        return all(a <= c for a, c in zip(self.lo, other.lo)) and all(
            c <= b for c, b in zip(other.hi, self.hi))

    def padded(self, pad: float) -> "BoxDomain":
        return BoxDomain(tuple(a - pad for a in self.lo),
                         tuple(b + pad for b in self.hi))

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @staticmethod
    def from_dict(d: dict) -> "BoxDomain":
        return BoxDomain(tuple(d["lo"]), tuple(d["hi"]))


@dataclass(frozen=True)
class Chain:
    """A canonical polyhedral 0-chain relative to ``domain``."""

    domain: BoxDomain
    group: GroupSpec
    atoms: tuple  # ((point tuple, coefficient), ...) sorted by point

    @property
    def support(self) -> tuple:
        return tuple(x for x, _ in self.atoms)

    def is_zero(self) -> bool:
        return not self.atoms

    def __add__(self, other: "Chain") -> "Chain":
        _check_compatible(self, other)
        return canonicalize(list(self.atoms) + list(other.atoms),
                            self.domain, self.group)

    def __neg__(self) -> "Chain":
        return canonicalize([(x, self.group.neg(c)) for x, c in self.atoms],
                            self.domain, self.group)

    def __sub__(self, other: "Chain") -> "Chain":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Chain):
            return NotImplemented
        return (self.domain == other.domain
                and self.group.same_as(other.group)
                and self.atoms == other.atoms)

    def __hash__(self):
        return hash((self.domain, self.atoms))

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.to_dict(),
            "group": self.group.to_dict(),
            "atoms": [{"x": list(x), "c": list(c) if isinstance(c, tuple)
                       else c} for x, c in self.atoms],
        }

    @staticmethod
    def from_dict(d: dict) -> "Chain":
        group = group_from_dict(d["group"])
        domain = BoxDomain.from_dict(d["domain"])
        atoms = [(tuple(a["x"]),
                  tuple(a["c"]) if isinstance(a["c"], list) else a["c"])
                 for a in d["atoms"]]
        return canonicalize(atoms, domain, group)


def _check_compatible(a: Chain, b: Chain):
    if a.domain != b.domain:
        raise DomainMismatch(f"{a.domain} vs {b.domain}")
    if not a.group.same_as(b.group):
        raise GroupMismatch(f"{a.group.to_dict()} vs {b.group.to_dict()}")


def canonicalize(atoms: Iterable, domain: BoxDomain,
                 group: GroupSpec) -> Chain:
    """Merge coincident points, drop zeros and non-interior atoms.

    Idempotent; coincidence means equality after snapping to the 1e-12
    lattice.
    """
    merged: dict = {}
    for x, c in atoms:
        key = _snap(x)
        merged[key] = group.add(merged.get(key, group.zero), c)
    kept = [(x, c) for x, c in merged.items()
            if c != group.zero and domain.contains_open(x)]
    kept.sort(key=lambda a: a[0])
    return Chain(domain=domain, group=group, atoms=tuple(kept))


def zero_chain(domain: BoxDomain, group: GroupSpec) -> Chain:
    return Chain(domain=domain, group=group, atoms=())


def mass(chain: Chain) -> float:
    """Sum of coefficient norms over the atoms."""
    return float(sum(chain.group.norm(c) for _, c in chain.atoms))


def augmentation(chain: Chain) -> Element:
    """Group sum of all coefficients."""
    return chain.group.sum(c for _, c in chain.atoms)


def restrict(chain: Chain, box: BoxDomain) -> Chain:
    """Keep atoms strictly inside the open sub-box; result lives on it."""
    return canonicalize(
        [(x, c) for x, c in chain.atoms if box.contains_open(x)],
        box, chain.group)


def intersection_index(chain: Chain, box: BoxDomain) -> Element:
    """Augmentation of the chain restricted to ``box``.

    Requires the closure of ``box`` inside the chain's domain and the
    support disjoint from the boundary of ``box`` by the declared tolerance;
    raises BoundaryContact otherwise.
    """
    if not chain.domain.contains_box(box):
        raise BoundaryContact(
            "probe box closure must be contained in the chain domain")
    tau = BOUNDARY_TOL_FACTOR * chain.domain.diameter
    for x, _ in chain.atoms:
        if box.boundary_distance(x) < tau:
            raise BoundaryContact(
                f"atom {x} within {tau:g} of the probe boundary")
    inside = [c for x, c in chain.atoms if box.contains_open(x)]
    return chain.group.sum(inside)


# ---------------------------------------------------------------------------
# dipolar decompositions
# ---------------------------------------------------------------------------

@dataclass
class DipolarDecomposition:
    """Monopoles plus dipoles representing a chain in its domain.

    A dipole (x, v, sigma) stands for sigma[[x + v]] - sigma[[x]] with
    |v| <= 1; both endpoints must lie in the closed box.
    """

    monopoles: list = field(default_factory=list)  # (point, coeff)
    dipoles: list = field(default_factory=list)    # (point, offset, coeff)

    def __iter__(self):
        yield from (("M", x, c) for x, c in self.monopoles)
        yield from (("D", x, v, c) for x, v, c in self.dipoles)


def _check_offsets(decomp: DipolarDecomposition):
    for _, v, _ in decomp.dipoles:
        if float(np.linalg.norm(v)) > 1.0 + 1e-12:
            raise OffsetTooLong(f"dipole offset {v} longer than 1")


def assemble(decomp: DipolarDecomposition, domain: BoxDomain,
             group: GroupSpec) -> Chain:
    """Canonical chain equal to the decomposition's formal sum in the domain.

    Endpoints outside the open box are silently dropped by canonicalization;
    offsets longer than 1 raise OffsetTooLong.
    """
    _check_offsets(decomp)
    atoms = list(decomp.monopoles)
    for x, v, c in decomp.dipoles:
        atoms.append((tuple(np.add(x, v)), c))
        atoms.append((tuple(x), group.neg(c)))
    return canonicalize(atoms, domain, group)


def decomposition_cost_flat(decomp: DipolarDecomposition,
                            group: GroupSpec) -> float:
    """Sum of monopole norms plus norm(sigma)*|v| per dipole."""
    _check_offsets(decomp)
    cost = sum(group.norm(c) for _, c in decomp.monopoles)
    cost += sum(group.norm(c) * float(np.linalg.norm(v))
                for _, v, c in decomp.dipoles)
    return float(cost)


def decomposition_cost_flatsize(decomp: DipolarDecomposition,
                                group: GroupSpec) -> float:
    """Sum of monopole norms plus alpha*|v| per dipole."""
    _check_offsets(decomp)
    cost = sum(group.norm(c) for _, c in decomp.monopoles)
    cost += group.alpha * sum(float(np.linalg.norm(v))
                              for _, v, _ in decomp.dipoles)
    return float(cost)


def split_segment(x, y, max_len: float = 1.0) -> list:
    """Collinear subdivision of the segment x -> y into pieces <= max_len.

    Returns (base, offset) pairs whose chained dipoles carry a coefficient
    from x to y at unchanged total cost.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    length = float(np.linalg.norm(y - x))
    if length <= max_len:
        return [(tuple(x), tuple(y - x))]
    k = int(np.ceil(length / max_len - 1e-12))
    pts = [x + (y - x) * (i / k) for i in range(k + 1)]
    return [(tuple(pts[i]), tuple(pts[i + 1] - pts[i])) for i in range(k)]


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def save_chain(chain: Chain, path) -> None:
    with open(path, "w") as f:
        json.dump(chain.to_dict(), f)


def load_chain(path) -> Chain:
    with open(path) as f:
        return Chain.from_dict(json.load(f))
