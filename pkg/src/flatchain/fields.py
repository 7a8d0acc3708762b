"""Sampled sphere-valued maps and the grid singularity detector.

A field stores unit vectors (length 2 for the circle, 3 for the 2-sphere)
at the vertices of a regular lattice covering the analysis domain plus a
padding collar, so every grid cube that meets the domain is fully sampled.
Detection computes, for each cube of an analysis grid, the homotopy class
of the field on the lattice-snapped cube boundary: a winding number from
wrapped angle increments (circle target) or a Brouwer degree from signed
solid angles over the triangulated boundary (sphere target).
"""

from __future__ import annotations

import json
import math
from dataclasses import InitVar, dataclass, field as dc_field

import numpy as np

from .chains import BoxDomain, Chain, canonicalize, mass
from .errors import InsufficientResolution, NonIntegral
from .flatnorm import SolveLimits, flat_norm
from .grids import Grid, deform, sample_offset, _loglog_slope
from .groups import GroupSpec, make_int_group

TARGET_COMPONENTS = {"S1": 2, "S2": 3}
ANGULAR_MARGIN = 0.1          # tau_ang, radians
DEGREE_ROUND_TOL = 0.1        # NonIntegral beyond this
RESOLUTION_RATIO = 16         # delta <= h / RESOLUTION_RATIO

# defect clearance from the skeleton, in lattice spacings; the solid-angle
# triangle condition is tighter than the winding gap condition
DETECTION_MARGIN = {"S1": 2.0, "S2": 2.5}


def detection_margin(target: str) -> float:
    return DETECTION_MARGIN[target]

# library defaults for the coefficient norm of extracted integer chains:
# the minimal loop/bubble energies of the two targets
S1_NORM_SCALE = 2.0 * math.pi
S2_NORM_SCALE = 8.0 * math.pi


def default_group(target: str) -> GroupSpec:
    scale = S1_NORM_SCALE if target == "S1" else S2_NORM_SCALE
    return make_int_group(scale, 1.0)


@dataclass
class Field:
    """Unit-vector samples on a padded lattice over a box domain.

    ``guard_points`` is optional generator metadata (defect locations plus
    any other under-resolved spots, such as dipole-tube caps): offsets that
    keep grid faces clear of them make detection well conditioned.  It is
    not part of the file format.
    """

    domain: BoxDomain
    target: str
    spacing: float
    values: np.ndarray  # shape (*lattice_shape, components)
    guard_points: tuple | None = None
    # set by internal constructors whose values are unit by construction
    trust_unit: InitVar[bool] = False
    # lazy per-plane detector tables; never serialized
    _cache: dict = dc_field(default_factory=dict, init=False, repr=False,
                            compare=False)

    def __post_init__(self, trust_unit: bool):
        if self.target not in TARGET_COMPONENTS:
            raise ValueError(f"unknown target {self.target!r}")
        m = TARGET_COMPONENTS[self.target]
        if self.values.ndim != self.domain.dim + 1 \
                or self.values.shape[-1] != m:
            raise ValueError("values shape does not match domain/target")
        if trust_unit:
            return
        sq = np.einsum("...i,...i", self.values, self.values)
        worst = float(np.max(np.abs(sq - 1.0)))  # |n-1| ~ |n^2-1| / 2 near 1
        if worst > 2.000001e-9:
            raise ValueError(
                f"samples deviate from unit norm by about {worst / 2:g}")

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def shape(self) -> tuple:
        return self.values.shape[:-1]

    @property
    def origin(self) -> tuple:
        # symmetric padding: derived, not stored, so files round-trip
        out = []
        for a in range(self.dim):
            extent = self.spacing * (self.shape[a] - 1)
            side = self.domain.hi[a] - self.domain.lo[a]
            out.append(self.domain.lo[a] - 0.5 * (extent - side))
        return tuple(out)

    def vertex(self, idx) -> tuple:
        o = self.origin
        return tuple(o[a] + self.spacing * idx[a] for a in range(self.dim))

    def index_window(self, lo, hi) -> tuple:
        """Nearest lattice planes bracketing the box [lo, hi]."""
        o = self.origin
        wlo, whi = [], []
        for a in range(self.dim):
            i0 = int(round((lo[a] - o[a]) / self.spacing))
            i1 = int(round((hi[a] - o[a]) / self.spacing))
            if i0 < 0 or i1 > self.shape[a] - 1 or i1 - i0 < 2:
                raise ValueError("window exceeds the sampled lattice")
            wlo.append(i0)
            whi.append(i1)
        return tuple(wlo), tuple(whi)

    def covers_grid(self, grid: Grid) -> bool:
        """True when every cube meeting the domain is fully sampled."""
        o = self.origin
        top = [o[a] + self.spacing * (self.shape[a] - 1)
               for a in range(self.dim)]
        for a in range(self.dim):
            if self.domain.lo[a] - grid.h < o[a] - 1e-12:
                return False
            if self.domain.hi[a] + grid.h > top[a] + 1e-12:
                return False
        return True


def make_lattice(domain: BoxDomain, spacing: float, pad: float):
    """Vertex coordinate axes for a padded lattice (symmetric collar).

    The collar is rounded up to whole spacings per side, so when a box side
    is a multiple of the spacing the lattice stays aligned with the box
    (cell centers never sit exactly on the boundary).  Matches the origin
    convention of ``Field``, so fields built on these axes round-trip
    exactly through the file format.
    """
    q = int(math.ceil(pad / spacing - 1e-9))
    shape, axes = [], []
    for a in range(domain.dim):
        side = domain.hi[a] - domain.lo[a]
        n = int(math.ceil(side / spacing - 1e-9)) + 2 * q
        shape.append(n + 1)
        extent = spacing * n
        start = domain.lo[a] - 0.5 * (extent - side)
        axes.append(start + spacing * np.arange(n + 1))
    return tuple(shape), axes


def default_pad(h0: float, dim: int) -> float:
    """Padding rule: the collar that keeps any cube of side <= h0 inside."""
    return 2.0 * math.sqrt(dim) * h0


def save_field(field: Field, path) -> None:
    header = {
        "domain": field.domain.to_dict(),
        "target": field.target,
        "spacing": field.spacing,
        "shape": list(field.shape),
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode() + b"\n")
        f.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode())
        raw = f.read()
    domain = BoxDomain.from_dict(header["domain"])
    shape = tuple(header["shape"])
    m = TARGET_COMPONENTS[header["target"]]
    values = np.frombuffer(raw, dtype="<f8").reshape(*shape, m).copy()
    return Field(domain, header["target"], float(header["spacing"]), values)


# ---------------------------------------------------------------------------
# discrete Dirichlet energy
# ---------------------------------------------------------------------------

def dirichlet_energy(field: Field, p: int,
                     region: BoxDomain | None = None) -> float:
    """Sum over lattice cells of |grad u|^p * delta^n, forward differences.

    The exponent is pinned to the critical value p = n - 1; a cell counts
    when its center lies in the open region (default: the whole domain).
    """
    n = field.dim
    if p != n - 1:
        raise ValueError(f"p must equal dim-1 = {n - 1}, got {p}")
    region = region or field.domain
    delta = field.spacing
    u = field.values
    o = field.origin

    # cell index slice whose centers fall inside the open region
    sl = []
    for a in range(n):
        lo = int(math.ceil((region.lo[a] - o[a]) / delta - 0.5 + 1e-12))
        hi = int(math.floor((region.hi[a] - o[a]) / delta - 0.5 - 1e-12))
        lo = max(lo, 0)
        hi = min(hi, field.shape[a] - 2)
        if hi < lo:
            return 0.0
        sl.append(slice(lo, hi + 1))
    sl = tuple(sl)

    base = tuple(slice(0, field.shape[a] - 1) for a in range(n))
    if p == 2:
        # |grad u|^2 integrates axis by axis; no cell array needed
        total = 0.0
        for a in range(n):
            shifted = tuple(slice(1, field.shape[b]) if b == a else base[b]
                            for b in range(n))
            diff = u[shifted][sl] - u[base][sl]
            total += float(np.einsum("...i,...i->", diff, diff))
        return total * delta ** (n - 2)
    grad2 = None
    for a in range(n):
        shifted = tuple(
            slice(1, field.shape[b]) if b == a else base[b] for b in range(n))
        diff = (u[shifted] - u[base]) / delta
        term = np.sum(diff * diff, axis=-1)
        grad2 = term if grad2 is None else grad2 + term
    grad2 = grad2[sl]
    return float(np.sum(grad2 ** (p / 2.0)) * delta ** n)


# ---------------------------------------------------------------------------
# boundary homotopy invariants
# ---------------------------------------------------------------------------

def _angles(field: Field) -> np.ndarray:
    if "theta" not in field._cache:
        field._cache["theta"] = np.arctan2(field.values[..., 1],
                                           field.values[..., 0])
    return field._cache["theta"]


def winding_number(field: Field, loop) -> int:
    """Winding of the circle-valued field along an ordered lattice cycle.

    The loop is a sequence of lattice index pairs; the edge back to the
    first vertex is implied.  Raises InsufficientResolution when any angular
    gap reaches pi - 0.1, the discrete well-definedness threshold.
    """
    if field.target != "S1":
        raise ValueError("winding numbers need an S1-valued field")
    idx = np.asarray(loop, dtype=int)
    theta = _angles(field)[idx[:, 0], idx[:, 1]]
    d = np.diff(np.append(theta, theta[0]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    if np.max(np.abs(d)) >= np.pi - ANGULAR_MARGIN:
        raise InsufficientResolution(
            f"angular gap {np.max(np.abs(d)):.3f} too close to pi")
    return int(round(float(np.sum(d)) / (2 * np.pi)))


def _ring_indices(wlo, whi):
    """Counterclockwise cycle around the index rectangle [wlo, whi]."""
    (l0, l1), (h0, h1) = wlo, whi
    path = []
    path += [(i, l1) for i in range(l0, h0)]
    path += [(h0, j) for j in range(l1, h1)]
    path += [(i, h1) for i in range(h0, l0, -1)]
    path += [(l0, j) for j in range(h1, l1, -1)]
    return path


def _winding_tables(field: Field):
    """Prefix sums of wrapped angle steps along both lattice axes, plus
    counts of steps near pi; rings become O(1) queries."""
    if "w0" in field._cache:
        return field._cache["w0"], field._cache["w1"]
    theta = _angles(field)
    out = []
    for axis in (0, 1):
        d = np.diff(theta, axis=axis)
        d = (d + np.pi) % (2 * np.pi) - np.pi
        bad = np.abs(d) >= np.pi - ANGULAR_MARGIN
        shape = theta.shape
        C = np.zeros(shape)
        B = np.zeros(shape, dtype=np.int64)
        sl = (slice(1, None), slice(None)) if axis == 0 \
            else (slice(None), slice(1, None))
        C[sl] = np.cumsum(d, axis=axis)
        B[sl] = np.cumsum(bad, axis=axis)
        out.append((C, B))
        field._cache[f"w{axis}"] = out[-1]
    return out[0], out[1]


def _ring_winding(field: Field, wlo, whi) -> int:
    """Winding along the window ring via the prefix tables; identical to
    summing the wrapped steps explicitly."""
    (l0, l1), (h0, h1) = wlo, whi
    (C0, B0), (C1, B1) = _winding_tables(field)
    bad = (B0[h0, l1] - B0[l0, l1]) + (B0[h0, h1] - B0[l0, h1]) \
        + (B1[h0, h1] - B1[h0, l1]) + (B1[l0, h1] - B1[l0, l1])
    if bad:
        raise InsufficientResolution("angular gap too close to pi on a "
                                     "cube boundary")
    total = (C0[h0, l1] - C0[l0, l1]) + (C1[h0, h1] - C1[h0, l1]) \
        - (C0[h0, h1] - C0[l0, h1]) - (C1[l0, h1] - C1[l0, l1])
    return int(round(total / (2 * np.pi)))


_FACE_PARITY = (1.0, -1.0, 1.0)  # sign of e_b x e_c vs e_a, axes sorted


def _solid_angles(a, b, c):
    """Signed solid angles of spherical triangles (van Oosterom-Strackee)."""
    numer = np.einsum("...i,...i", a, np.cross(b, c))
    denom = (1.0 + np.einsum("...i,...i", a, b)
             + np.einsum("...i,...i", b, c)
             + np.einsum("...i,...i", c, a))
    return 2.0 * np.arctan2(numer, denom)


def _min_pair_dot(a, b, c):
    return np.minimum(np.einsum("...i,...i", a, b),
                      np.minimum(np.einsum("...i,...i", b, c),
                                 np.einsum("...i,...i", c, a)))


def _plane_tables(field: Field, axis: int, plane: int):
    """Prefix sums of triangle solid angles and wide-triangle counts on one
    lattice plane, cached per field (they do not depend on the grid)."""
    key = (axis, plane)
    cached = field._cache.get(key)
    if cached is not None:
        return cached
    slicer = [slice(None)] * 3
    slicer[axis] = plane
    face = field.values[tuple(slicer)]
    A = face[:-1, :-1]
    B = face[1:, :-1]
    C = face[1:, 1:]
    D = face[:-1, 1:]
    ang = _solid_angles(A, B, C) + _solid_angles(A, C, D)
    dot_min = math.cos(math.pi / 2 - ANGULAR_MARGIN)
    bad = (_min_pair_dot(A, B, C) <= dot_min) \
        | (_min_pair_dot(A, C, D) <= dot_min)
    nb, nc = ang.shape
    P = np.zeros((nb + 1, nc + 1))
    P[1:, 1:] = np.cumsum(np.cumsum(ang, axis=0), axis=1)
    Q = np.zeros((nb + 1, nc + 1), dtype=np.int64)
    Q[1:, 1:] = np.cumsum(np.cumsum(bad, axis=0), axis=1)
    field._cache[key] = (P, Q)
    return P, Q


def _face_query(P, j0, j1, k0, k1) -> float:
    return P[j1, k1] - P[j0, k1] - P[j1, k0] + P[j0, k0]


def sphere_degree(field: Field, window) -> int:
    """Brouwer degree of the field on a lattice-sampled cube boundary.

    ``window`` is the (lo_index, hi_index) pair of the cube's lattice hull.
    Faces are split into lattice triangles with outward orientation; the
    degree is the signed solid-angle sum over 4*pi.  Raises
    InsufficientResolution when a spherical triangle is too wide and
    NonIntegral when the sum does not round cleanly.
    """
    if field.target != "S2":
        raise ValueError("degrees need an S2-valued field")
    raw = sphere_degree_raw(field, window)
    if abs(raw - round(raw)) > DEGREE_ROUND_TOL:
        raise NonIntegral(f"degree sum {raw:.4f} is not close to an integer")
    return int(round(raw))


def sphere_degree_raw(field: Field, window) -> float:
    wlo, whi = window
    total = 0.0
    for axis in range(3):
        rest = [b for b in range(3) if b != axis]
        j0, j1 = wlo[rest[0]], whi[rest[0]]
        k0, k1 = wlo[rest[1]], whi[rest[1]]
        for side, fixed in ((0, wlo[axis]), (1, whi[axis])):
            factor = _FACE_PARITY[axis] * (1.0 if side else -1.0)
            P, Q = _plane_tables(field, axis, fixed)
            if _face_query(Q, j0, j1, k0, k1) > 0:
                raise InsufficientResolution(
                    "spherical triangle wider than pi/2 on a cube face")
            total += factor * _face_query(P, j0, j1, k0, k1)
    return total / (4.0 * math.pi)


# ---------------------------------------------------------------------------
# the grid detector
# ---------------------------------------------------------------------------

@dataclass
class SingularChain:
    """Extracted singular chain plus the grid provenance that produced it."""

    chain: Chain
    h: float
    y: tuple
    per_cube: dict = dc_field(default_factory=dict)  # cube index -> raw value


def extract_sgrid(field: Field, h: float, y, p: int | None = None,
                  group: GroupSpec | None = None) -> SingularChain:
    """Per-cube homotopy classes of the field on an analysis grid.

    For each cube of the grid meeting the domain, computes the boundary
    invariant on the lattice-snapped cube boundary and emits it at the cube
    center.  Requires spacing <= h/16 and full lattice coverage of the
    grid's cubes.
    """
    n = field.dim
    if p is not None and p != n - 1:
        raise ValueError(f"p must equal dim-1 = {n - 1}")
    if field.spacing > h / RESOLUTION_RATIO + 1e-12:
        raise ValueError(
            f"need spacing <= h/{RESOLUTION_RATIO}: {field.spacing} vs h={h}")
    grid = Grid(h, tuple(y), field.domain)
    if not field.covers_grid(grid):
        raise ValueError("lattice padding does not cover the analysis grid")
    group = group or default_group(field.target)

    atoms = []
    per_cube = {}
    half = h / 2.0
    for z in grid.cubes_meeting_domain():
        c = grid.center(z)
        lo = [ci - half for ci in c]
        hi = [ci + half for ci in c]
        try:
            window = field.index_window(lo, hi)
            if n == 2:
                val = _ring_winding(field, *window)
                raw = val
            else:
                raw = sphere_degree_raw(field, window)
                if abs(raw - round(raw)) > DEGREE_ROUND_TOL:
                    raise NonIntegral(
                        f"cube {z}: degree sum {raw:.4f} not integral")
                val = int(round(raw))
        except InsufficientResolution as e:
            raise InsufficientResolution(f"cube {z}: {e}") from e
        if val != 0:
            atoms.append((c, val))
            per_cube[z] = raw
    chain = canonicalize(atoms, field.domain, group)
    return SingularChain(chain=chain, h=h, y=tuple(y), per_cube=per_cube)


def admissible_offset(rng, defects, h: float, spacing: float, dim: int,
                      target: str = "S1", tries: int = 500) -> tuple:
    """Grid translation keeping every defect clear of the skeleton.

    Clearance is the target's detection margin in lattice spacings, which
    keeps the snapped cube boundaries on the correct side of each defect
    and bounds the angular steps along them.
    """
    return sample_offset(rng, defects, h, dim,
                         margin=detection_margin(target) * spacing,
                         tries=tries)


# ---------------------------------------------------------------------------
# harnesses: consistency, energy bound, stability
# ---------------------------------------------------------------------------

@dataclass
class ConsistencyReport:
    h_values: list
    means: list            # E_y[F(truth - extracted)] per h
    stderrs: list
    ratios: list           # mean / (h * M(truth))
    slope: float
    mismatches: int        # grid cells where extraction != deformed truth
    samples: int
    seed: int


def sgrid_consistency(field: Field, truth: Chain, h_values,
                      samples: int = 20, seed: int = 0,
                      limits: SolveLimits | None = None) -> ConsistencyReport:
    """Check extraction equals deformed ground truth, and its F-convergence."""
    rng = np.random.default_rng(seed)
    pts = list(field.guard_points or ()) or [x for x, _ in truth.atoms]
    total_mass = mass(truth)
    means, stderrs, ratios = [], [], []
    mismatches = 0
    for h in h_values:
        vals = []
        for _ in range(samples):
            y = admissible_offset(rng, pts, h, field.spacing, field.dim,
                                  field.target)
            grid = Grid(h, y, field.domain)
            extracted = extract_sgrid(field, h, y, group=truth.group).chain
            expected = deform(truth, grid)
            if extracted != expected:
                mismatches += 1
            vals.append(flat_norm(truth - extracted, "flat", limits).value)
        vals = np.asarray(vals)
        means.append(float(vals.mean()))
        stderrs.append(float(vals.std(ddof=1) / math.sqrt(len(vals)))
                       if len(vals) > 1 else 0.0)
        ratios.append(float(vals.mean() / (h * total_mass))
                      if total_mass > 0 else 0.0)
    slope = _loglog_slope(h_values, means) if total_mass > 0 else 0.0
    return ConsistencyReport(list(h_values), means, stderrs, ratios, slope,
                             mismatches, samples, seed)


@dataclass
class EnergyBoundReport:
    ratios: list
    energies: list
    flat_norms: list
    max_ratio: float


def energy_bound_test(instances, p: int,
                      limits: SolveLimits | None = None) -> EnergyBoundReport:
    """Ratio of the truth chain's flat norm to the discrete energy, per
    instance; the corpus maximum is the reported bound."""
    ratios, energies, norms = [], [], []
    for field, truth in instances:
        d = dirichlet_energy(field, p)
        f = flat_norm(truth, "flat", limits).value
        energies.append(d)
        norms.append(f)
        ratios.append(f / d if d > 0 else 0.0)
    return EnergyBoundReport(ratios, energies, norms,
                             max(ratios) if ratios else 0.0)


@dataclass
class StabilityReport:
    epsilons: list
    unchanged: list        # per-epsilon equality with the base chain
    threshold: float       # largest epsilon with equality from below
    h: float
    y: tuple
    seed: int


def stability_test(field: Field, epsilons, h: float, y, seed: int = 0,
                   group: GroupSpec | None = None) -> StabilityReport:
    """Extract from renormalized noisy copies and report the stability
    threshold."""
    from .synth import perturb  # local import avoids a module cycle

    base = extract_sgrid(field, h, y, group=group).chain
    eps_sorted = sorted(float(e) for e in epsilons)
    unchanged = []
    for eps in eps_sorted:
        noisy = perturb(field, eps, seed)
        try:
            got = extract_sgrid(noisy, h, y, group=group).chain
            unchanged.append(got == base)
        except (InsufficientResolution, NonIntegral):
            unchanged.append(False)
    threshold = 0.0
    for eps, ok in zip(eps_sorted, unchanged):
        if not ok:
            break
        threshold = eps
    return StabilityReport(eps_sorted, unchanged, threshold, h, tuple(y),
                           seed)
