"""Generators for fields with known ground-truth singular chains.

Circle-valued fields come from exact complex products of unit vortices.
Sphere-valued fields combine a radial hedgehog (single defect) or localized
dipole-bubble tubes painted over a constant background: each transversal
slice of a tube carries a degree-sigma bubble that shrinks to the
background at the tube wall, and the tube caps pinch the bubble off at the
two endpoints, which become the only singularities.  Unbalanced charge is
routed through a companion point outside the open domain, which the truth
chain therefore never sees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .chains import BoxDomain, Chain, canonicalize
from .errors import (
    DefectTooClose,
    DegenerateBoundary,
    TubeOutsideDomain,
    TubeTooThin,
)
from .fields import (
    Field,
    default_group,
    default_pad,
    extract_sgrid,
    make_lattice,
)
from .groups import GroupSpec

# orientation of the bubble construction, pinned by the reference-instance
# test: a tube from a to b extracts as sigma([[b]] - [[a]])
CYL_SIGN_S1 = -1.0
CYL_SIGN_S2 = 1.0


@dataclass
class DefectSpec:
    """Prescribed point defects: (location, integer charge) pairs."""

    defects: list
    target: str = "S1"
    background: tuple | None = None

    def background_value(self) -> np.ndarray:
        if self.background is not None:
            v = np.asarray(self.background, dtype=float)
            return v / np.linalg.norm(v)
        return np.array([1.0, 0.0]) if self.target == "S1" \
            else np.array([0.0, 0.0, 1.0])


def _validate_spec(spec: DefectSpec, domain: BoxDomain, h_ref: float):
    pts = [np.asarray(x, dtype=float) for x, _ in spec.defects]
    for x in pts:
        if not domain.contains_open(x):
            raise DefectTooClose(f"defect {tuple(x)} outside the open domain")
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = float(np.linalg.norm(pts[i] - pts[j]))
            if d < 4.0 * h_ref:
                raise DefectTooClose(
                    f"defects {i},{j} at distance {d:.4f} < 4h = {4 * h_ref}")


def _truth_chain(spec: DefectSpec, domain: BoxDomain,
                 group: GroupSpec | None) -> Chain:
    group = group or default_group(spec.target)
    return canonicalize([(tuple(x), int(d)) for x, d in spec.defects],
                        domain, group)


# ---------------------------------------------------------------------------
# circle-valued vortices: exact complex products
# ---------------------------------------------------------------------------

def vortex_field(spec: DefectSpec, domain: BoxDomain, spacing: float,
                 h_ref: float, pad: float | None = None,
                 group: GroupSpec | None = None):
    """Product of unit vortices; returns (field, ground-truth chain).

    Computed by accumulating phase angles, so the samples are exactly unit
    vectors and the value at a vertex coinciding with a defect is merely
    arbitrary rather than undefined.
    """
    if spec.target != "S1" or domain.dim != 2:
        raise ValueError("vortex fields need an S1 target on a 2d box")
    _validate_spec(spec, domain, h_ref)
    pad = default_pad(h_ref, 2) if pad is None else pad
    _, axes = make_lattice(domain, spacing, pad)
    bg = spec.background_value()
    theta = np.full((len(axes[0]), len(axes[1])),
                    math.atan2(bg[1], bg[0]))
    for a, d in spec.defects:
        theta += float(d) * np.arctan2(axes[1][None, :] - a[1],
                                       axes[0][:, None] - a[0])
    values = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    field = Field(domain, "S1", spacing, values,
                  guard_points=tuple(tuple(x) for x, _ in spec.defects))
    return field, _truth_chain(spec, domain, group)


# ---------------------------------------------------------------------------
# dipole tubes
# ---------------------------------------------------------------------------

def _perp_frame(e: np.ndarray):
    """Right-handed orthonormal completion of a unit vector."""
    if len(e) == 2:
        return (np.array([-e[1], e[0]]),)
    probe = np.zeros(3)
    probe[int(np.argmin(np.abs(e)))] = 1.0
    t1 = np.cross(e, probe)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(e, t1)
    return t1, t2


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _cap_profile(xi, r: float, spacing: float):
    """Bubble radius as a function of the axial distance to a tube end.

    Two regimes: a steep pinch from zero to a throat of a few lattice
    spacings, confined inside the detection clearance of the endpoint, and
    a gentle widening (slope 0.4) up to the full radius r/2, which keeps
    the texture resolvable on any grid face that slices the cone outside
    that clearance.
    """
    xi_tip = 1.25 * spacing
    throat = min(3.5 * spacing, r / 2.0)
    tip = throat * np.maximum(xi, 0.0) / xi_tip
    cone = throat + 0.4 * (xi - xi_tip)
    return np.minimum(r / 2.0, np.where(xi <= xi_tip, tip, cone))


def _paint_tube(values: np.ndarray, axes, a, b, sigma: int, r: float,
                bg: np.ndarray, target: str, spacing: float):
    """Overwrite lattice samples inside the tube with the bubble texture.

    The bubble lives inside radius rho(x1) <= r/2, pinched to zero over the
    cap cones at both ends; the field equals the background outside, so
    disjoint tubes compose exactly.
    """
    if sigma == 0:
        return
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    L = float(np.linalg.norm(b - a))
    e = (b - a) / L
    frame = _perp_frame(e)
    dim = len(a)

    # restrict the computation to the tube's bounding box
    slices = []
    for ax in range(dim):
        lo = min(a[ax], b[ax]) - r
        hi = max(a[ax], b[ax]) + r
        i0 = int(np.searchsorted(axes[ax], lo))
        i1 = int(np.searchsorted(axes[ax], hi))
        slices.append(slice(max(i0 - 1, 0), min(i1 + 1, len(axes[ax]))))
    grids = np.meshgrid(*(axes[ax][slices[ax]] for ax in range(dim)),
                        indexing="ij")
    X = np.stack(grids, axis=-1)
    rel = X - a
    x1 = rel @ e
    rho = _cap_profile(np.minimum(x1, L - x1), r, spacing)

    if target == "S1":
        s = rel @ frame[0]
        inside = (rho > 0) & (np.abs(s) < rho)
        t = (np.where(inside, s / np.where(inside, rho, 1.0), 0.0) + 1) / 2
        phase = CYL_SIGN_S1 * 2.0 * np.pi * sigma * _smoothstep(t)
        bz = complex(bg[0], bg[1])
        wv = bz * np.exp(1j * phase)
        patch = np.stack([wv.real, wv.imag], axis=-1)
    else:
        t1, t2 = frame
        zc = (rel @ t1) + 1j * (rel @ t2)
        inside = (rho > 0) & (np.abs(zc) < rho)
        wdisk = np.where(inside, zc / np.where(inside, rho, 1.0), 0.0)
        mag = np.abs(wdisk)
        # radial stretch of the unit disk onto the plane, then charge power
        stretch = np.tan(0.5 * np.pi * np.clip(mag, 0.0, 1.0 - 1e-9))
        zeta = np.where(mag > 0, wdisk / np.where(mag > 0, mag, 1.0), 1.0) \
            * stretch
        k = int(abs(sigma))
        zeta = zeta ** k
        if CYL_SIGN_S2 * sigma < 0:
            zeta = np.conj(zeta)
        e1, e2 = _perp_frame(bg)
        denom = 1.0 + np.abs(zeta) ** 2
        patch = (2.0 * zeta.real[..., None] * e1
                 + 2.0 * zeta.imag[..., None] * e2
                 + (np.abs(zeta) ** 2 - 1.0)[..., None] * bg) / denom[..., None]

    region = values[tuple(slices)]
    region[inside] = patch[inside]
    values[tuple(slices)] = region


def _segment_distance(p1, q1, p2, q2) -> float:
    """Euclidean distance between segments [p1,q1] and [p2,q2]."""
    p1, q1 = np.asarray(p1, float), np.asarray(q1, float)
    p2, q2 = np.asarray(p2, float), np.asarray(q2, float)
    d1, d2, r = q1 - p1, q2 - p2, p1 - p2
    a, e, f = d1 @ d1, d2 @ d2, d2 @ r
    c, b = d1 @ r, d1 @ d2
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0, 1) if denom > 1e-15 else 0.0
    t = np.clip((b * s + f) / e, 0, 1) if e > 1e-15 else 0.0
    s = np.clip((b * t - c) / a, 0, 1) if a > 1e-15 else 0.0
    return float(np.linalg.norm(p1 + s * d1 - (p2 + t * d2)))


def dipole_cylinder_field(segment, sigma: int, r: float, domain: BoxDomain,
                          spacing: float, target: str = "S1",
                          background=None, pad: float | None = None,
                          h_ref: float | None = None,
                          group: GroupSpec | None = None):
    """A single dipole tube over a constant background.

    Returns (field, truth chain) with truth sigma*([[b]] - [[a]]) for
    segment (a, b).  The tube of radius r must lie inside the domain and be
    at least 8 lattice spacings wide.
    """
    a, b = (np.asarray(p, dtype=float) for p in segment)
    if r < 8.0 * spacing:
        raise TubeTooThin(f"radius {r} < 8 * spacing = {8 * spacing}")
    for p in (a, b):
        if not domain.contains_open(p) or domain.boundary_distance(p) <= r:
            raise TubeOutsideDomain(
                f"tube endpoint {tuple(p)} within r of the boundary")
    h_ref = r if h_ref is None else h_ref
    pad = default_pad(h_ref, domain.dim) if pad is None else pad

    spec = DefectSpec(defects=[(tuple(a), -sigma), (tuple(b), sigma)],
                      target=target, background=background)
    bg = spec.background_value()
    _, axes = make_lattice(domain, spacing, pad)
    shape = tuple(len(ax) for ax in axes)
    values = np.broadcast_to(bg, shape + (len(bg),)).copy()
    if sigma != 0:
        _paint_tube(values, axes, a, b, sigma, r, bg, target, spacing)
    field = Field(domain, target, spacing, values,
                  guard_points=_tube_guards([(a, b)], spacing)
                  if sigma != 0 else None)
    truth = _truth_chain(spec, domain, group) if sigma != 0 \
        else canonicalize([], domain, group or default_group(target))
    return field, truth


def _tube_guards(segments, spacing: float) -> tuple:
    """Tube endpoints (the pinch-off points): keep grid faces away."""
    guards = []
    for a, b in segments:
        guards += [tuple(np.asarray(a, float)), tuple(np.asarray(b, float))]
    return tuple(guards)


# ---------------------------------------------------------------------------
# sphere-valued hedgehogs
# ---------------------------------------------------------------------------

def _radial_hedgehog(axes, a, charge: int):
    dx = (axes[0] - a[0])[:, None, None]
    dy = (axes[1] - a[1])[None, :, None]
    dz = (axes[2] - a[2])[None, None, :]
    mag = np.sqrt(dx * dx + dy * dy + dz * dz)
    safe = np.where(mag > 0, mag, 1.0)
    u = np.empty(mag.shape + (3,))
    u[..., 0] = dx / safe
    u[..., 1] = dy / safe
    u[..., 2] = dz / safe
    u[mag == 0] = (0.0, 0.0, 1.0)  # arbitrary unit value at the defect
    if charge < 0:
        u[..., 2] = -u[..., 2]  # mirror flips the degree
    return u


def hedgehog_field(spec: DefectSpec, domain: BoxDomain, spacing: float,
                   h_ref: float, pad: float | None = None,
                   group: GroupSpec | None = None,
                   tube_radius: float | None = None):
    """Sphere-valued field with prescribed unit charges.

    A single defect is a radial hedgehog (mirrored for charge -1).  Several
    defects are composed from disjoint dipole tubes over the constant
    background: opposite charges pair up, and any leftover charge runs to a
    companion point outside the open domain.
    """
    if spec.target != "S2" or domain.dim != 3:
        raise ValueError("hedgehog fields need an S2 target on a 3d box")
    for _, d in spec.defects:
        if d not in (-1, 1):
            raise ValueError("hedgehog charges must be +1 or -1; compose "
                             "higher charges by clustering unit defects")
    _validate_spec(spec, domain, h_ref)
    pad = default_pad(h_ref, 3) if pad is None else pad
    _, axes = make_lattice(domain, spacing, pad)
    shape = tuple(len(ax) for ax in axes)
    bg = spec.background_value()

    if len(spec.defects) == 1:
        (a, d), = spec.defects
        values = _radial_hedgehog(axes, a, int(d))
        field = Field(domain, "S2", spacing, values,
                      guard_points=(tuple(a),))
        return field, _truth_chain(spec, domain, group)

    values = np.broadcast_to(bg, shape + (3,)).copy()
    guards = None
    if spec.defects:
        tubes = _plan_tubes(spec, domain, spacing, h_ref, pad, tube_radius)
        for (ta, tb, sigma, r) in tubes:
            _paint_tube(values, axes, ta, tb, sigma, r, bg, "S2", spacing)
        # companion pinch points are beyond the detector's reach, so only
        # the in-domain defects need skeleton clearance
        guards = tuple(tuple(x) for x, _ in spec.defects)
    field = Field(domain, "S2", spacing, values, guard_points=guards)
    return field, _truth_chain(spec, domain, group)


def _plan_tubes(spec: DefectSpec, domain: BoxDomain, spacing: float,
                h_ref: float, pad: float, tube_radius: float | None):
    """Route every defect through an axis-aligned tube out of the domain.

    The companion pinch point sits outside the open box, beyond any grid
    cube meeting it, so the truth chain never sees it.  Axis alignment
    keeps the pinch cones' coordinate extents inside the per-axis detection
    clearance; oblique tubes would not have that property.  Raises
    DefectTooClose when no disjoint routing exists.
    """
    sep = min((np.linalg.norm(np.subtract(x, y))
               for i, (x, _) in enumerate(spec.defects)
               for y, _ in spec.defects[i + 1:]), default=np.inf)
    # 12 spacings keeps every triangle of the bubble texture narrow enough
    # for the solid-angle detector
    r = tube_radius if tube_radius is not None \
        else max(12.0 * spacing, min(sep / 4.0, h_ref))
    if r < 8.0 * spacing:
        raise TubeTooThin(f"tube radius {r} < 8 * spacing")

    lo = np.asarray(domain.lo)
    hi = np.asarray(domain.hi)
    # companion clearance: a cube of side h meeting the box stays within h
    # of it per axis, so anything beyond 1.3h is out of the detector's reach
    clearance = 1.3 * h_ref
    if clearance + r + 2 * spacing > pad:
        raise TubeOutsideDomain(
            "padding too small to host exterior companion defects")

    out = []
    for x, d in spec.defects:
        p = np.asarray(x, float)
        candidates = []
        for axis in range(domain.dim):
            for sign, wall in ((-1, lo[axis]), (1, hi[axis])):
                exit_len = (hi[axis] - p[axis]) if sign > 0 \
                    else (p[axis] - lo[axis])
                q = p.copy()
                q[axis] = wall + sign * clearance
                candidates.append((exit_len, q))
        candidates.sort(key=lambda c: c[0])
        placed = False
        for _, q in candidates:
            gap = min((_segment_distance(q, p, ta, tb)
                       for ta, tb, _, _ in out), default=np.inf)
            if gap >= 2 * r + 2 * spacing:
                out.append((q, p, 1 if d > 0 else -1, r))
                placed = True
                break
        if not placed:
            raise DefectTooClose("no disjoint axis-aligned tube routing")
    return out


# ---------------------------------------------------------------------------
# homogeneous extension and noise
# ---------------------------------------------------------------------------

def homogeneous_extension(field: Field, window) -> Field:
    """Replace the window interior by the radial extension of its boundary.

    Every interior vertex takes the boundary value hit by the ray from the
    window center (faces parametrized in the max-norm); the center vertex
    gets the value at the lattice point nearest the first corner's frame --
    it is singular whenever the boundary class is nontrivial.
    """
    wlo, whi = window
    n = field.dim
    _check_boundary_nondegenerate(field, window)
    lo_pt = np.asarray(field.vertex(wlo))
    hi_pt = np.asarray(field.vertex(whi))
    c = 0.5 * (lo_pt + hi_pt)
    hw = 0.5 * (hi_pt - lo_pt)

    out = field.values.copy()
    for idx in np.ndindex(*(whi[a] - wlo[a] - 1 for a in range(n))):
        gi = tuple(wlo[a] + 1 + idx[a] for a in range(n))
        x = np.asarray(field.vertex(gi))
        lam = np.max(np.abs(x - c) / hw)
        if lam < 1e-12:
            continue  # singular center keeps its (background) value
        q = c + (x - c) / lam
        out[gi] = _interpolate_unit(field, q)
    return Field(field.domain, field.target, field.spacing, out)


def _interpolate_unit(field: Field, q) -> np.ndarray:
    o = field.origin
    t = [(q[a] - o[a]) / field.spacing for a in range(field.dim)]
    i0 = [min(max(int(math.floor(ti)), 0), field.shape[a] - 2)
          for a, ti in enumerate(t)]
    frac = [min(max(t[a] - i0[a], 0.0), 1.0) for a in range(field.dim)]
    acc = np.zeros(field.values.shape[-1])
    for corner in np.ndindex(*(2,) * field.dim):
        w = 1.0
        for a in range(field.dim):
            w *= frac[a] if corner[a] else (1.0 - frac[a])
        acc += w * field.values[tuple(i0[a] + corner[a]
                                      for a in range(field.dim))]
    nrm = np.linalg.norm(acc)
    if nrm < 1e-6:
        raise DegenerateBoundary("interpolated boundary value near zero")
    return acc / nrm


def _check_boundary_nondegenerate(field: Field, window):
    wlo, whi = window
    n = field.dim
    worst = 1.0
    for axis in range(n):
        for fixed in (wlo[axis], whi[axis]):
            slicer = [slice(wlo[a], whi[a] + 1) for a in range(n)]
            slicer[axis] = fixed
            face = field.values[tuple(slicer)]
            for a in range(face.ndim - 1):
                sl1 = [slice(None)] * (face.ndim - 1)
                sl0 = [slice(None)] * (face.ndim - 1)
                sl1[a] = slice(1, None)
                sl0[a] = slice(0, -1)
                dots = np.einsum("...i,...i", face[tuple(sl1)],
                                 face[tuple(sl0)])
                worst = min(worst, float(np.min(dots)))
    if worst <= math.cos(math.pi - 0.1):
        raise DegenerateBoundary(
            f"adjacent boundary samples nearly antipodal (dot {worst:.3f})")


def perturb(field: Field, epsilon: float, seed: int = 0) -> Field:
    """Seeded Gaussian noise per component, renormalized to the target."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if epsilon == 0:
        return Field(field.domain, field.target, field.spacing,
                     field.values.copy())
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(field.values.shape, dtype=np.float32)
    noisy = field.values + epsilon * noise
    norms = np.sqrt(np.einsum("...i,...i", noisy, noisy))
    if np.min(norms) < 1e-9:  # noise cancelled a sample; keep the original
        bad = norms < 1e-9
        noisy[bad] = field.values[bad]
        norms = np.sqrt(np.einsum("...i,...i", noisy, noisy))
    return Field(field.domain, field.target, field.spacing,
                 noisy / norms[..., None])
