"""Cubical grids, the chain deformation operator, and skeleton averages.

A grid of size h translated by h*y tiles space with closed cubes
h*y + h*z + [-h/2, h/2]^n, z integer.  Deformation snaps every atom of a
chain to the center of its containing cube and sums coefficients per cube.
The Monte-Carlo harnesses average over the translation y, which is sampled
uniformly from [0,1)^n with rejection on skeleton contact (the exceptional
set has measure zero, so retries terminate quickly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .chains import BoxDomain, Chain, canonicalize, mass
from .errors import OnSkeleton
from .flatnorm import SolveLimits, flat_norm

SKELETON_TOL_FACTOR = 1e-9  # tau_skel = factor * h


@dataclass(frozen=True)
class Grid:
    """Cubical grid of cell side h, translated by h*y, over a box domain."""

    h: float
    y: tuple
    domain: BoxDomain

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(float(c) for c in self.y))
        if self.h <= 0:
            raise ValueError("h must be positive")
        if len(self.y) != self.domain.dim:
            raise ValueError("offset dimension must match the domain")

    @property
    def dim(self) -> int:
        return self.domain.dim

    def skeleton_distance(self, x) -> float:
        """Distance from x to the (n-1)-skeleton (the cube face planes)."""
        t = (np.asarray(x, dtype=float) / self.h
             - np.asarray(self.y)) + 0.5
        return self.h * float(np.min(np.abs(t - np.round(t))))

    def cube_of(self, x) -> tuple:
        """Integer index of the cube containing x.

        Raises OnSkeleton when x is within 1e-9*h of a face plane; the
        caller should resample the translation y.
        """
        if self.skeleton_distance(x) < SKELETON_TOL_FACTOR * self.h:
            raise OnSkeleton(f"point {tuple(x)} lies on the grid skeleton")
        t = np.asarray(x, dtype=float) / self.h - np.asarray(self.y)
        return tuple(int(z) for z in np.round(t))

    def center(self, z) -> tuple:
        return tuple(self.h * (yi + zi) for yi, zi in zip(self.y, z))

    def cube_meets_domain(self, z) -> bool:
        c = self.center(z)
        return all(ci - self.h / 2 < hi and ci + self.h / 2 > lo
                   for ci, lo, hi in zip(c, self.domain.lo, self.domain.hi))

    def cubes_meeting_domain(self):
        """All integer indices of cubes with nonempty open intersection."""
        ranges = []
        for a in range(self.dim):
            lo, hi = self.domain.lo[a], self.domain.hi[a]
            zmin = math.floor((lo - self.h * self.y[a]) / self.h - 0.5) + 1
            zmax = math.ceil((hi - self.h * self.y[a]) / self.h + 0.5) - 1
            ranges.append(range(zmin, zmax + 1))
        for z in product(*ranges):
            if self.cube_meets_domain(z):
                yield z


def deform(chain: Chain, grid: Grid) -> Chain:
    """Snap each atom to its cube center and merge per cube.

    Only cubes meeting the grid's domain contribute; the result is canonical
    relative to that domain, so centers falling outside the open box are
    dropped (equality in the domain is unaffected).
    """
    atoms = []
    for x, c in chain.atoms:
        z = grid.cube_of(x)
        if grid.cube_meets_domain(z):
            atoms.append((grid.center(z), c))
    return canonicalize(atoms, grid.domain, chain.group)


def sample_offset(rng, points, h: float, dim: int,
                  margin: float | None = None, tries: int = 100) -> tuple:
    """Uniform translation with all given points off the skeleton.

    ``margin`` is an absolute clearance; default is the OnSkeleton tolerance.
    """
    margin = SKELETON_TOL_FACTOR * h if margin is None else margin
    pts = np.asarray(points, dtype=float).reshape(-1, dim)
    for _ in range(tries):
        y = tuple(rng.random(dim))
        if len(pts) == 0:
            return y
        t = pts / h - np.asarray(y) + 0.5
        d = h * np.min(np.abs(t - np.round(t)))
        if d >= margin:
            return y
    raise OnSkeleton(f"no admissible offset found in {tries} tries")


# ---------------------------------------------------------------------------
# Monte-Carlo property harnesses
# ---------------------------------------------------------------------------

@dataclass
class ScalingReport:
    h_values: list
    means: list
    stderrs: list
    ratios: list          # mean / (h * M(S)) per h
    slope: float          # log-log fit of mean vs h
    samples: int
    seed: int
    extra: dict = field(default_factory=dict)


def _loglog_slope(h_values, means) -> float:
    if len(h_values) < 2:
        return float("nan")
    lo = np.log(np.asarray(h_values, dtype=float))
    lm = np.log(np.maximum(np.asarray(means, dtype=float), 1e-300))
    return float(np.polyfit(lo, lm, 1)[0])


def deformation_scaling_test(chain: Chain, h_values, samples: int = 200,
                             seed: int = 0,
                             limits: SolveLimits | None = None
                             ) -> ScalingReport:
    """Estimate E_y[F(S - P(S,h,y))] per h and fit the scaling exponent."""
    rng = np.random.default_rng(seed)
    total_mass = mass(chain)
    pts = [x for x, _ in chain.atoms]
    means, stderrs, ratios = [], [], []
    for h in h_values:
        vals = []
        for _ in range(samples):
            y = sample_offset(rng, pts, h, chain.domain.dim)
            grid = Grid(h, y, chain.domain)
            diff = chain - deform(chain, grid)
            vals.append(flat_norm(diff, "flat", limits).value)
        vals = np.asarray(vals)
        means.append(float(vals.mean()))
        stderrs.append(float(vals.std(ddof=1) / math.sqrt(len(vals)))
                       if len(vals) > 1 else 0.0)
        ratios.append(float(vals.mean() / (h * total_mass))
                      if total_mass > 0 else 0.0)
    slope = _loglog_slope(h_values, means) if total_mass > 0 else 0.0
    return ScalingReport(list(h_values), means, stderrs, ratios, slope,
                         samples, seed)


def deformation_flatsize_test(chain: Chain, h_values, samples: int = 200,
                              seed: int = 0,
                              limits: SolveLimits | None = None
                              ) -> ScalingReport:
    """Estimate E_y[FS(P(S,h,y))] per h against FS of the source chain.

    The ratio column is mean / FS(S); it must stay bounded across h.
    """
    rng = np.random.default_rng(seed)
    pts = [x for x, _ in chain.atoms]
    fs_source = flat_norm(chain, "flatsize", limits).value
    means, stderrs, ratios = [], [], []
    nonzero_fraction = []
    for h in h_values:
        vals = []
        nz = 0
        for _ in range(samples):
            y = sample_offset(rng, pts, h, chain.domain.dim)
            grid = Grid(h, y, chain.domain)
            p = deform(chain, grid)
            nz += 0 if p.is_zero() else 1
            vals.append(flat_norm(p, "flatsize", limits).value)
        vals = np.asarray(vals)
        means.append(float(vals.mean()))
        stderrs.append(float(vals.std(ddof=1) / math.sqrt(len(vals)))
                       if len(vals) > 1 else 0.0)
        ratios.append(float(vals.mean() / fs_source) if fs_source > 0
                      else 0.0)
        nonzero_fraction.append(nz / samples)
    slope = _loglog_slope(h_values, means) if any(means) else 0.0
    return ScalingReport(list(h_values), means, stderrs, ratios, slope,
                         samples, seed,
                         extra={"fs_source": fs_source,
                                "nonzero_fraction": nonzero_fraction})


# ---------------------------------------------------------------------------
# skeleton averages (grid Fubini identity)
# ---------------------------------------------------------------------------

def skeleton_integral(f, grid: Grid, j: int, box: BoxDomain,
                      order: int = 3) -> float:
    """Integral of f over the j-skeleton of the grid clipped to the box.

    j-cells are products of j full edges and n-j vertex coordinates; the
    union over cells of one axis subset is the tensor product of the
    per-axis interval unions and plane sets, so each subset is evaluated
    with one batched Gauss-Legendre grid.  ``f`` must be vectorized:
    it maps an (N, n) array of points to N values.
    """
    n = grid.dim
    h, y = grid.h, grid.y
    nodes, gw = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for axes in combinations(range(n), j):
        per_axis = []  # (coordinate array, weight array) per axis
        empty = False
        for a in range(n):
            lo, hi = box.lo[a], box.hi[a]
            if a in axes:
                # edges span [h(y+z-1/2), h(y+z+1/2)], clipped to the box
                zmin = math.floor((lo - h * y[a]) / h - 0.5) + 1
                zmax = math.ceil((hi - h * y[a]) / h + 0.5) - 1
                pts, wts = [], []
                for z in range(zmin, zmax + 1):
                    s0 = max(h * (y[a] + z - 0.5), lo)
                    s1 = min(h * (y[a] + z + 0.5), hi)
                    if s1 > s0:
                        mid, half = 0.5 * (s0 + s1), 0.5 * (s1 - s0)
                        pts.append(mid + half * nodes)
                        wts.append(half * gw)
                if not pts:
                    empty = True
                    break
                per_axis.append((np.concatenate(pts), np.concatenate(wts)))
            else:
                # vertex planes at h(y + 1/2 + m), weight 1 each
                mmin = math.ceil(lo / h - y[a] - 0.5)
                mmax = math.floor(hi / h - y[a] - 0.5)
                planes = [h * (y[a] + 0.5 + m) for m in range(mmin, mmax + 1)
                          if lo < h * (y[a] + 0.5 + m) < hi]
                if not planes:
                    empty = True
                    break
                per_axis.append((np.asarray(planes), np.ones(len(planes))))
        if empty:
            continue
        mesh = np.meshgrid(*(p for p, _ in per_axis), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        wmesh = np.meshgrid(*(w for _, w in per_axis), indexing="ij")
        wts = np.ones(len(pts))
        for wm in wmesh:
            wts = wts * wm.ravel()
        total += float(np.sum(wts * np.asarray(f(pts))))
    return total


@dataclass
class FubiniReport:
    j: int
    h: float
    samples: int
    estimate: float
    stderr: float
    target: float
    relative_error: float
    seed: int


def skeleton_average_test(f, target_integral: float, box: BoxDomain,
                          j: int, h: float, samples: int = 200,
                          seed: int = 0, order: int = 3) -> FubiniReport:
    """Monte-Carlo check of E_y[h^(n-j) * int_{R_j cap U} f] against
    binom(n,j) * int_U f, for a vectorized integrand f: (N,n) -> (N,)."""
    n = box.dim
    if not 0 <= j <= n:
        raise ValueError("j must lie in [0, n]")
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(samples):
        y = tuple(rng.random(n))
        grid = Grid(h, y, box)
        vals.append(h ** (n - j) * skeleton_integral(f, grid, j, box, order))
    vals = np.asarray(vals)
    target = math.comb(n, j) * target_integral
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) \
        if len(vals) > 1 else 0.0
    rel = abs(est - target) / max(abs(target), 1e-300)
    return FubiniReport(j, h, samples, est, stderr, target, rel, seed)
