"""Flat and flat-size norms of polyhedral 0-chains.

Three routes, deliberately independent of one another:

* ``flat_norm_flow`` -- exact for the integers with a linear norm, by
  reduction to a min-cost transportation problem solved with successive
  shortest paths and node potentials.  Each atom is a supply/demand node
  with integer capacity; a unit may pair with an opposite unit at
  alpha * distance or vanish at alpha * min(1, distance to the boundary).
* ``flat_norm_oracle`` -- exhaustive for small chains over any group:
  enumerates bounded splittings of every coefficient, then optimally pairs
  the resulting pieces into dipoles (blossom matching on the savings graph),
  with monopole and boundary-escape self options.
* a greedy pairing heuristic for everything else (certified upper bound).

``flat_norm`` dispatches between them.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import networkx as nx
import numpy as np

from .chains import (
    BoxDomain,
    Chain,
    DipolarDecomposition,
    decomposition_cost_flat,
    decomposition_cost_flatsize,
    split_segment,
)
from .errors import TooLarge, WrongGroup
from .groups import GroupSpec

MODES = ("flat", "flatsize")


@dataclass
class SolveLimits:
    max_atoms: int = 6
    max_split: int = 4


@dataclass
class NormResult:
    value: float
    certificate: DipolarDecomposition
    exact: bool
    method: str

    def certificate_cost(self, group: GroupSpec, mode: str) -> float:
        if mode == "flat":
            return decomposition_cost_flat(self.certificate, group)
        return decomposition_cost_flatsize(self.certificate, group)


def _is_linear_int(group: GroupSpec) -> bool:
    return group.name == "int" and group.params.get("exponent") == 1.0


def _self_cost(group: GroupSpec, sigma, dbd: float, mode: str) -> float:
    """Cheapest way to absorb a lone piece: monopole or boundary escape."""
    if mode == "flat":
        return group.norm(sigma) * min(1.0, dbd)
    return min(group.norm(sigma), group.alpha * dbd)


def _self_piece(decomp: DipolarDecomposition, group: GroupSpec,
                domain: BoxDomain, x, sigma, mode: str):
    """Append the realization of a self-absorbed piece to the certificate."""
    dbd = domain.boundary_distance(x)
    if mode == "flat":
        use_escape = dbd < 1.0
    else:
        use_escape = group.alpha * dbd < group.norm(sigma)
    if use_escape:
        b = domain.nearest_boundary_point(x)
        for base, off in split_segment(b, x):
            decomp.dipoles.append((base, off, sigma))
    else:
        decomp.monopoles.append((tuple(x), sigma))


def _pair_piece(decomp: DipolarDecomposition, x_to, x_from, sigma):
    """Dipole chain carrying +sigma to ``x_to`` and -sigma to ``x_from``."""
    for base, off in split_segment(x_from, x_to):
        decomp.dipoles.append((base, off, sigma))


# ---------------------------------------------------------------------------
# exact flow solver (linear integer coefficients)
# ---------------------------------------------------------------------------

class _MinCostFlow:
    """Successive shortest paths with potentials on a small dense graph."""

    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.graph: list = [[] for _ in range(n_nodes)]

    def add_edge(self, u: int, v: int, cap: float, cost: float):
        self.graph[u].append([v, cap, cost, len(self.graph[v])])
        self.graph[v].append([u, 0.0, -cost, len(self.graph[u]) - 1])

    def solve(self, s: int, t: int):
        """Push max flow from s to t at min cost; returns (flow, cost)."""
        n = self.n
        potential = [0.0] * n
        total_flow = 0.0
        total_cost = 0.0
        while True:
            dist = [np.inf] * n
            dist[s] = 0.0
            prev = [(-1, -1)] * n
            heap = [(0.0, s)]
            while heap:
                d, u = heapq.heappop(heap)
                if d > dist[u] + 1e-15:
                    continue
                for ei, e in enumerate(self.graph[u]):
                    v, cap, cost, _ = e
                    if cap <= 1e-12:
                        continue
                    nd = d + cost + potential[u] - potential[v]
                    if nd < dist[v] - 1e-15:
                        dist[v] = nd
                        prev[v] = (u, ei)
                        heapq.heappush(heap, (nd, v))
            if not np.isfinite(dist[t]):
                break
            for i in range(n):
                potential[i] += min(dist[i], dist[t])
            # bottleneck along the path
            push = np.inf
            v = t
            while v != s:
                u, ei = prev[v]
                push = min(push, self.graph[u][ei][1])
                v = u
            v = t
            while v != s:
                u, ei = prev[v]
                e = self.graph[u][ei]
                e[1] -= push
                self.graph[v][e[3]][1] += push
                total_cost += push * e[2]
                v = u
            total_flow += push
        return total_flow, total_cost

    def flow_on(self, u: int, ei: int) -> float:
        e = self.graph[u][ei]
        return self.graph[e[0]][e[3]][1]


def flat_norm_flow(chain: Chain) -> NormResult:
    """Exact flat norm for integer coefficients with a linear norm.

    Raises WrongGroup for any other coefficient group.
    """
    group = chain.group
    if not _is_linear_int(group):
        raise WrongGroup("flow solver requires the linear integer group")
    alpha = group.alpha
    domain = chain.domain

    pos = [(x, c) for x, c in chain.atoms if c > 0]
    neg = [(x, -c) for x, c in chain.atoms if c < 0]
    cert = DipolarDecomposition()
    if not pos and not neg:
        return NormResult(0.0, cert, True, "flow")

    P, N = len(pos), len(neg)
    clamp_p = [min(1.0, domain.boundary_distance(x)) for x, _ in pos]
    clamp_n = [min(1.0, domain.boundary_distance(x)) for x, _ in neg]
    sum_s = sum(c for _, c in pos)
    sum_d = sum(c for _, c in neg)

    # nodes: 0 source, 1 sink, 2 VL, 3 VR, then positives, then negatives
    SRC, SNK, VL, VR = 0, 1, 2, 3
    node_p = lambda i: 4 + i
    node_n = lambda j: 4 + P + j
    mcf = _MinCostFlow(4 + P + N)
    mcf.add_edge(SRC, VL, float(sum_d), 0.0)
    pair_edges = {}
    for i, (x, s) in enumerate(pos):
        mcf.add_edge(SRC, node_p(i), float(s), 0.0)
        mcf.add_edge(node_p(i), VR, float(s), alpha * clamp_p[i])
        for j, (y, _) in enumerate(neg):
            pair_edges[(i, j)] = (node_p(i), len(mcf.graph[node_p(i)]))
            mcf.add_edge(node_p(i), node_n(j), float(min(s, neg[j][1])),
                         alpha * float(np.linalg.norm(np.subtract(x, y))))
    escape_n = {}
    for j, (y, d) in enumerate(neg):
        mcf.add_edge(node_n(j), SNK, float(d), 0.0)
        escape_n[j] = (VL, len(mcf.graph[VL]))
        mcf.add_edge(VL, node_n(j), float(d), alpha * clamp_n[j])
    mcf.add_edge(VL, VR, float(min(sum_s, sum_d)), 0.0)
    mcf.add_edge(VR, SNK, float(sum_s), 0.0)

    flow, cost = mcf.solve(SRC, SNK)
    assert abs(flow - (sum_s + sum_d)) < 1e-9, "transportation must saturate"

    # rebuild the optimal decomposition from edge flows
    for i, (x, s) in enumerate(pos):
        handled = 0
        for j, (y, _) in enumerate(neg):
            u, ei = pair_edges[(i, j)]
            f = int(round(mcf.flow_on(u, ei)))
            if f > 0:
                _pair_piece(cert, x, y, f)
                handled += f
        rest = s - handled
        if rest > 0:
            _self_piece(cert, group, domain, x, rest, "flat")
    for j, (y, d) in enumerate(neg):
        u, ei = escape_n[j]
        f = int(round(mcf.flow_on(u, ei)))
        if f > 0:
            _self_piece(cert, group, domain, y, -f, "flat")

    value = float(cost)
    check = decomposition_cost_flat(cert, group)
    assert abs(check - value) < 1e-9, (check, value)
    return NormResult(value, cert, True, "flow")


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------

def _int_partitions(total: int, max_parts: int):
    """Partitions of total >= 1 into at most max_parts positive parts,
    nonincreasing order."""
    out = []

    def rec(remaining, max_piece, parts):
        if remaining == 0:
            out.append(tuple(parts))
            return
        if len(parts) == max_parts:
            return
        for piece in range(min(remaining, max_piece), 0, -1):
            parts.append(piece)
            rec(remaining - piece, piece, parts)
            parts.pop()

    rec(total, total, [])
    return out


@lru_cache(maxsize=None)
def _int_split_options(coeff: int, max_split: int):
    sign = 1 if coeff > 0 else -1
    parts = _int_partitions(abs(coeff), max_split)
    # trivial (unsplit) option first so the search seeds a good incumbent
    opts = [tuple(sign * p for p in part) for part in parts]
    opts.sort(key=len)
    return opts


def _cyclic_split_options(coeff: int, n: int, max_split: int):
    """Multisets of <= max_split nonzero residues summing to coeff mod n."""
    out = []

    def rec(target, start, parts):
        if parts and target == 0:
            out.append(tuple(parts))
        if len(parts) == max_split:
            return
        for e in range(start, n):
            parts.append(e)
            rec((target - e) % n, e, parts)
            parts.pop()

    rec(coeff % n, 1, [])
    opts = sorted(set(out), key=lambda t: (len(t), t))
    return opts


def _split_options(coeff, group: GroupSpec, max_split: int):
    if group.name == "int":
        return _int_split_options(int(coeff), max_split)
    if group.name == "cyclic":
        return _cyclic_split_options(int(coeff), group.params["n"], max_split)
    # free groups: no coefficient splitting in the declared search space
    return [(coeff,)]


def flat_norm_oracle(chain: Chain, mode: str = "flat",
                     limits: SolveLimits | None = None) -> NormResult:
    """Exhaustive minimum over the bounded decomposition search space.

    For every combination of per-atom coefficient splittings (at most
    ``max_split`` summands each), pieces are optimally paired into dipoles
    by maximum-weight matching on the pairing-savings graph; unpaired pieces
    take the cheaper of a monopole or a dipole run to the nearest boundary
    point.  Branches whose quick lower bound cannot beat the incumbent are
    pruned, which does not affect exactness.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    limits = limits or SolveLimits()
    group, domain = chain.group, chain.domain
    atoms = chain.atoms
    if len(atoms) > limits.max_atoms:
        raise TooLarge(
            f"{len(atoms)} atoms exceeds the oracle bound {limits.max_atoms}")
    if not atoms:
        return NormResult(0.0, DipolarDecomposition(), True, "oracle")

    pts = [np.asarray(x, dtype=float) for x, _ in atoms]
    dbd = [domain.boundary_distance(x) for x, _ in atoms]
    dist = [[float(np.linalg.norm(a - b)) for b in pts] for a in pts]
    options = [_split_options(c, group, limits.max_split) for _, c in atoms]

    def pair_cost(i, j, sigma):
        if mode == "flat":
            return group.norm(sigma) * dist[i][j]
        return group.alpha * dist[i][j]

    # best achievable saving for a piece of value sigma at atom i, over all
    # partners; admissible upper bound used for pruning
    @lru_cache(maxsize=None)
    def max_save(i, sigma):
        s_i = _self_cost(group, sigma, dbd[i], mode)
        best = 0.0
        for j in range(len(atoms)):
            if j == i:
                continue
            w = s_i + _self_cost(group, sigma, dbd[j], mode) \
                - pair_cost(i, j, sigma)
            best = max(best, w)
        return best

    best_value = np.inf
    best_combo = None
    best_matching = None

    for combo in product(*options):
        pieces = [(i, sigma) for i, parts in enumerate(combo)
                  for sigma in parts]
        selfs = [_self_cost(group, sigma, dbd[i], mode)
                 for i, sigma in pieces]
        base = sum(selfs)
        bound = base - 0.5 * sum(max_save(i, sigma) for i, sigma in pieces)
        if bound >= best_value - 1e-12:
            continue
        graph = nx.Graph()
        graph.add_nodes_from(range(len(pieces)))
        for a in range(len(pieces)):
            ia, sa = pieces[a]
            for b in range(a + 1, len(pieces)):
                ib, sb = pieces[b]
                if ia == ib or sb != group.neg(sa):
                    continue
                w = selfs[a] + selfs[b] - pair_cost(ia, ib, sa)
                if w > 1e-15:
                    graph.add_edge(a, b, weight=w)
        matching = nx.max_weight_matching(graph)
        saving = sum(graph[a][b]["weight"] for a, b in matching)
        value = base - saving
        if value < best_value - 1e-12:
            best_value = value
            best_combo = pieces
            best_matching = matching

    cert = DipolarDecomposition()
    matched = set()
    for a, b in best_matching:
        matched.update((a, b))
        ia, sa = best_combo[a]
        ib, _ = best_combo[b]
        _pair_piece(cert, pts[ia], pts[ib], sa)
    for k, (i, sigma) in enumerate(best_combo):
        if k not in matched:
            _self_piece(cert, group, domain, pts[i], sigma, mode)

    result = NormResult(float(best_value), cert, True, "oracle")
    check = result.certificate_cost(group, mode)
    assert abs(check - best_value) < 1e-9, (check, best_value)
    return result


# ---------------------------------------------------------------------------
# greedy heuristic (upper bound only)
# ---------------------------------------------------------------------------

def flat_norm_greedy(chain: Chain, mode: str = "flat") -> NormResult:
    """Nearest-opposite pairing plus boundary escape; exact=False.

    Integer coefficients are transferred in whole lumps between the closest
    improving opposite-sign pair; other groups pair only exactly opposite
    coefficients, whole.  Remaining atoms take the cheaper self option.
    """
    group, domain = chain.group, chain.domain
    cert = DipolarDecomposition()
    coeffs = {x: c for x, c in chain.atoms}
    dbd = {x: domain.boundary_distance(x) for x, _ in chain.atoms}

    def improving_pairs():
        pairs = []
        for x, cx in coeffs.items():
            for y, cy in coeffs.items():
                if x >= y:
                    continue
                if group.name == "int":
                    ok = (cx > 0) != (cy > 0)
                    sigma = min(abs(cx), abs(cy))
                else:
                    ok = cy == group.neg(cx)
                    sigma = cx
                if not ok:
                    continue
                d = float(np.linalg.norm(np.subtract(x, y)))
                pc = (group.norm(sigma) * d if mode == "flat"
                      else group.alpha * d)
                alt = (_self_cost(group, sigma, dbd[x], mode)
                       + _self_cost(group, sigma, dbd[y], mode))
                if pc < alt - 1e-15:
                    pairs.append((d, x, y, sigma))
        pairs.sort(key=lambda p: p[0])
        return pairs

    while True:
        pairs = improving_pairs()
        if not pairs:
            break
        _, x, y, sigma = pairs[0]
        cx, cy = coeffs[x], coeffs[y]
        if group.name == "int":
            t = min(abs(cx), abs(cy))
            if cx > 0:
                _pair_piece(cert, x, y, t)
                coeffs[x], coeffs[y] = cx - t, cy + t
            else:
                _pair_piece(cert, y, x, t)
                coeffs[x], coeffs[y] = cx + t, cy - t
        else:
            _pair_piece(cert, x, y, cx)
            coeffs[x], coeffs[y] = group.zero, group.zero
        coeffs = {x: c for x, c in coeffs.items() if c != group.zero}

    for x, c in coeffs.items():
        if c != group.zero:
            _self_piece(cert, group, domain, x, c, mode)

    value = (decomposition_cost_flat(cert, group) if mode == "flat"
             else decomposition_cost_flatsize(cert, group))
    return NormResult(float(value), cert, False, "greedy")


def flat_norm(chain: Chain, mode: str = "flat",
              limits: SolveLimits | None = None,
              method: str = "auto") -> NormResult:
    """Dispatch: flow when exact and applicable, oracle when small, else
    greedy."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    limits = limits or SolveLimits()
    if method == "flow" or (method == "auto" and mode == "flat"
                            and _is_linear_int(chain.group)):
        return flat_norm_flow(chain)
    if method == "oracle" or (method == "auto"
                              and len(chain.atoms) <= limits.max_atoms):
        return flat_norm_oracle(chain, mode, limits)
    return flat_norm_greedy(chain, mode)
