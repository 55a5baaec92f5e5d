"""Dynamical partitions, refinement checks, and bridge decompositions.

Level n partitions the circle into q_n arcs of generation n-1 and q_{n-1}
arcs of generation n, all iterates of the two fundamental arcs at the base
point.  Arcs are stored by exact orbit endpoints (lengths are derived on
demand, never accumulated), with the orientation convention

    I_g = [x_0, x_{q_g})  for g even,      [x_{q_g}, x_0)  for g odd,

so I_g^i runs from x_i to x_{i+q_g} for even g and backwards for odd g.

A PartitionHierarchy owns one orbit and serves every level from it.  Point
location descends the refinement tree: inside a long atom the cut points
x_{i + q_{n-1} + j q_n} are monotone along the arc, so each level is a
binary search over j and a full descent costs O(sum_k log a_k) comparisons,
without ever sorting the orbit.  This keeps deep levels with huge partial
quotients cheap.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import mpmath
from mpmath import mpf

from .cf import ContinuedFraction
from .errors import GeometryError, InvalidInputError
from .maps import MapSpec, OrbitSegment, iterate_orbit

#: atom label: (generation, index)
Label = tuple[int, int]


@dataclass(frozen=True)
class Atom:
    """Oriented circle arc [left, right), an iterate I_g^i."""

    generation: int
    index: int
    left: mpf
    right: mpf

    @property
    def label(self) -> Label:
        return (self.generation, self.index)

    def length(self) -> mpf:
        return (self.right - self.left) % 1

    def rel(self, x) -> mpf:
        """Position of x relative to the left endpoint, in [0, 1)."""
        return (x - self.left) % 1

    def contains(self, x, tol=0) -> bool:
        return self.rel(x) < self.length() + tol


@dataclass
class LocateResult:
    labels: tuple[Label, ...]
    boundary: bool

    @property
    def label(self) -> Label:
        return self.labels[0]


class PartitionHierarchy:
    """All partition levels of one map over a shared base orbit."""

    def __init__(self, spec: MapSpec, cf: ContinuedFraction, depth: int,
                 base=None, min_points: int = 0):
        if depth < 1 or depth > cf.depth:
            raise InvalidInputError(f"depth {depth} out of range (cf depth {cf.depth})")
        self.spec = spec
        self.cf = cf
        self.depth = depth
        with mpmath.workprec(spec.precision_bits):
            if base is None:
                cps = spec.critical_points()
                base = cps[0] if cps else mpf(0)
            self.base = mpf(base) % 1
        count = max(cf.q(depth) + cf.q(depth - 1) - 1, min_points, 1)
        self.orbit: OrbitSegment = iterate_orbit(spec, self.base, count)
        self._partitions: dict[int, DynamicalPartition] = {}

    # -- raw geometry ---------------------------------------------------

    def position(self, k: int) -> mpf:
        return self.orbit.positions[k]

    def n_points(self) -> int:
        return len(self.orbit.positions)

    def extend_orbit(self, total_points: int) -> None:
        """Grow the stored orbit to at least ``total_points`` positions."""
        have = self.n_points()
        if total_points <= have:
            return
        extra = iterate_orbit(self.spec, self.position(have - 1),
                              total_points - have)
        base_w = self.orbit.windings[-1]
        last_err = self.orbit.error_bounds[-1]
        self.orbit.positions.extend(extra.positions[1:])
        self.orbit.windings.extend(base_w + w for w in extra.windings[1:])
        self.orbit.error_bounds.extend(last_err + e for e in extra.error_bounds[1:])

    def atom(self, generation: int, index: int) -> Atom:
        """I_generation^index, for any index with both endpoints on the orbit."""
        qg = self.cf.q(generation)
        a, b = self.position(index), self.position(index + qg)
        if generation % 2 == 0:
            return Atom(generation, index, a, b)
        return Atom(generation, index, b, a)

    def delta_atom(self, n: int, i: int, j: int) -> Atom:
        """Bridge constituent of strip i at level n: I_n^{i + q_{n-1} + j q_n}."""
        return self.atom(n, i + self.cf.q(n - 1) + j * self.cf.q(n))

    # -- partitions -----------------------------------------------------

    def partition(self, n: int) -> "DynamicalPartition":
        if n < 1 or n > self.depth:
            raise InvalidInputError(f"level {n} out of range 1..{self.depth}")
        part = self._partitions.get(n)
        if part is None:
            part = DynamicalPartition._build(self, n)
            self._partitions[n] = part
        return part

    # -- descent location -------------------------------------------------

    def locate(self, x, n: int, tol=None) -> LocateResult:
        """Label of the level-n atom containing x; both flanks if x sits
        within ``tol`` of an atom boundary."""
        prec = self.spec.precision_bits
        with mpmath.workprec(prec):
            x = mpf(x) % 1
            if tol is None:
                tol = mpf(2) ** (-(prec - 48))
            label, cut_index = self._descend(x, n, "interior", tol)
            if cut_index is None:
                return LocateResult((label,), False)
            v = self.position(cut_index)
            owner = self._descend(v, n, "right", tol)[0]
            left_of = self._descend(v, n, "left", tol)[0]
            labels = (owner,) if owner == left_of else (owner, left_of)
            return LocateResult(labels, True)

    def _descend(self, x, n: int, mode: str, tol):
        """Walk levels 1..n.  Returns (label, boundary_cut_orbit_index).

        mode 'interior': left-closed arcs, flags a boundary when x falls
        within tol of a cut.  mode 'right': exact, ties assign the cut to
        the atom starting there.  mode 'left': exact, ties assign the cut
        to the atom ending there.
        """
        cf = self.cf
        strict = mode == "left"

        def pick(cut, rel):
            # True when the cut lies at-or-before rel (the point belongs to
            # the region at or beyond this cut)
            return cut < rel if strict else cut <= rel

        # level 1: cuts x_0, .., x_{q_1} in increasing circular order, then wrap
        q1 = cf.q(1)
        rel = (x - self.base) % 1
        if strict and rel == 0:
            rel = mpf(1)  # x is the base point: it ends the wrap atom

        def cut1(i):
            return (self.position(i) - self.base) % 1 if i <= q1 else mpf(1)

        lo, hi = 0, q1 + 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if pick(cut1(mid), rel):
                lo = mid
            else:
                hi = mid
        boundary = None
        if mode == "interior" and min(rel - cut1(lo), cut1(hi) - rel) < tol:
            boundary = lo if rel - cut1(lo) <= cut1(hi) - rel else (hi % (q1 + 1))
            return None, boundary
        label = (1, 0) if lo == q1 else (0, lo)
        level = 1
        while level < n:
            gen, idx = label
            if gen == level:  # short atom survives unchanged into level+1
                level += 1
                continue
            # long atom I_{level-1}^idx splits; cuts at i + q_{level-1} + j q_level
            a_next = cf.a(level + 1)
            parent = self.atom(gen, idx)
            relx = parent.rel(x)
            if strict and relx == 0:
                relx = parent.length()
            base_index = idx + cf.q(level - 1)
            q_lev = cf.q(level)

            if level % 2 == 0:
                # cuts increasing in j; region j == a_next is I_{level+1}^idx
                def cut(j):
                    return parent.rel(self.position(base_index + j * q_lev)) \
                        if j <= a_next else parent.length()
                lo, hi = 0, a_next + 1
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if pick(cut(mid), relx):
                        lo = mid
                    else:
                        hi = mid
                if mode == "interior" and min(relx - cut(lo), cut(hi) - relx) < tol:
                    side = lo if relx - cut(lo) <= cut(hi) - relx else hi
                    if side <= a_next:
                        return None, base_index + side * q_lev
                    return None, idx  # parent's right endpoint: x_idx
                label = (level + 1, idx) if lo == a_next else \
                    (level, base_index + lo * q_lev)
            else:
                # cuts decreasing in j; region below cut(a_next) is I_{level+1}
                def cut(j):
                    return parent.rel(self.position(base_index + j * q_lev)) \
                        if j >= 0 else parent.length()
                # find largest j with cut(j) > relx (or >= for right-closed)
                if not pick(cut(a_next), relx):
                    if mode == "interior" and cut(a_next) - relx < tol:
                        return None, base_index + a_next * q_lev
                    if mode == "interior" and relx < tol:
                        return None, idx  # parent's left endpoint: x_idx
                    label = (level + 1, idx)
                    level += 1
                    continue
                lo, hi = -1, a_next
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if not pick(cut(mid), relx):
                        lo = mid
                    else:
                        hi = mid
                j = lo  # delta region between cut(j+1) and cut(j)
                if mode == "interior" and \
                        min(relx - cut(j + 1), cut(j) - relx) < tol:
                    side = j + 1 if relx - cut(j + 1) <= cut(j) - relx else j
                    return None, base_index + side * q_lev
                label = (level, base_index + j * q_lev)
            level += 1
        # final guard on the surviving atom's own endpoints
        if mode == "interior":
            atom = self.atom(*label)
            d = atom.rel(x)
            if d < tol:
                return None, self._endpoint_index(label, "left")
            if atom.length() - d < tol:
                return None, self._endpoint_index(label, "right")
        return label, None

    def _endpoint_index(self, label: Label, side: str) -> int:
        gen, idx = label
        if (gen % 2 == 0) == (side == "left"):
            return idx
        return idx + self.cf.q(gen)


class DynamicalPartition:
    """One materialized level: atoms, cyclic order, tiling residual."""

    def __init__(self, hierarchy: PartitionHierarchy, level: int, atoms: list[Atom],
                 sorted_atoms: list[Atom], tiling_residual: float,
                 adjacency_residual: float):
        self.hierarchy = hierarchy
        self.level = level
        self.cf = hierarchy.cf
        self.atoms = atoms
        self.sorted_atoms = sorted_atoms
        self._sorted_lefts = [a.left for a in sorted_atoms]
        self.tiling_residual = tiling_residual
        self.adjacency_residual = adjacency_residual
        self.precision_bits = hierarchy.spec.precision_bits

    @classmethod
    def _build(cls, hier: PartitionHierarchy, n: int) -> "DynamicalPartition":
        cf = hier.cf
        prec = hier.spec.precision_bits
        with mpmath.workprec(prec):
            atoms = [hier.atom(n - 1, i) for i in range(cf.q(n))]
            atoms += [hier.atom(n, i) for i in range(cf.q(n - 1))]
            in_order = sorted(atoms, key=lambda a: a.left)
            total = mpf(0)
            worst_gap = mpf(0)
            for k, atom in enumerate(in_order):
                total += atom.length()
                nxt = in_order[(k + 1) % len(in_order)]
                gap = (nxt.left - atom.right) % 1
                gap = min(gap, 1 - gap)
                worst_gap = max(worst_gap, gap)
            residual = abs(total - 1)
            tol_tile = mpf(2) ** (-(prec - 32)) * len(atoms)
            if residual > tol_tile or worst_gap > tol_tile:
                raise GeometryError(
                    f"level-{n} tiling failed: residual {mpmath.nstr(residual, 5)}, "
                    f"worst gap {mpmath.nstr(worst_gap, 5)} (tolerance "
                    f"{mpmath.nstr(tol_tile, 5)}); wrong quotients or precision loss"
                )
            return cls(hier, n, atoms, in_order, float(residual), float(worst_gap))

    def __len__(self):
        return len(self.atoms)

    def atom_by_label(self, label: Label) -> Atom:
        gen, idx = label
        if gen == self.level - 1:
            return self.atoms[idx]
        if gen == self.level:
            return self.atoms[self.cf.q(self.level) + idx]
        raise InvalidInputError(f"label {label} not at level {self.level}")

    def locate(self, x, tol=None) -> LocateResult:
        """Binary search over the cyclic order (left-closed arcs)."""
        with mpmath.workprec(self.precision_bits):
            x = mpf(x) % 1
            if tol is None:
                tol = mpf(2) ** (-(self.precision_bits - 48))
            k = bisect.bisect_right(self._sorted_lefts, x) - 1
            k %= len(self.sorted_atoms)  # k == -1 wraps to the last atom
            atom = self.sorted_atoms[k]
            d_left = atom.rel(x)
            d_right = atom.length() - d_left
            if d_left < tol:
                prev = self.sorted_atoms[(k - 1) % len(self.sorted_atoms)]
                return LocateResult((atom.label, prev.label), True)
            if d_right < tol:
                nxt = self.sorted_atoms[(k + 1) % len(self.sorted_atoms)]
                return LocateResult((atom.label, nxt.label), True)
            return LocateResult((atom.label,), False)

    def to_rows(self, dps: int | None = None) -> list[tuple]:
        """(generation, index, left, right, length) rows as decimal strings."""
        if dps is None:
            dps = mpmath.libmp.libmpf.prec_to_dps(self.precision_bits)
        with mpmath.workprec(self.precision_bits):
            return [
                (a.generation, a.index,
                 mpmath.nstr(a.left, dps), mpmath.nstr(a.right, dps),
                 mpmath.nstr(a.length(), dps))
                for a in self.atoms
            ]


def build_partition(spec: MapSpec, cf: ContinuedFraction, n: int,
                    base=None) -> DynamicalPartition:
    """Standalone construction of the level-n partition."""
    hier = PartitionHierarchy(spec, cf, n, base=base)
    return hier.partition(n)


@dataclass
class RefinementReport:
    level: int
    pieces_per_long_atom: int
    worst_violation: float
    checked_atoms: int

    def to_report(self) -> dict:
        return vars(self)


def refine_check(p_n: DynamicalPartition, p_next: DynamicalPartition,
                 tol=None) -> RefinementReport:
    """Verify that level n+1 refines level n per the splitting rule.

    Every long atom I_{n-1}^i splits into the a_{n+1} constituents
    Delta_{i,j} plus I_{n+1}^i; every finer atom must lie inside its
    combinatorial parent.  Raises GeometryError past tolerance.
    """
    if p_next.level != p_n.level + 1 or p_next.hierarchy is not p_n.hierarchy:
        raise InvalidInputError("partitions must be consecutive levels of one hierarchy")
    hier = p_n.hierarchy
    cf = p_n.cf
    n = p_n.level
    prec = p_n.precision_bits
    with mpmath.workprec(prec):
        if tol is None:
            tol = mpf(2) ** (-(prec - 32)) * len(p_next)
        worst = mpf(0)
        checked = 0

        def containment_defect(parent: Atom, child: Atom) -> mpf:
            r = parent.rel(child.left)
            defect = max(mpf(0), r + child.length() - parent.length())
            if r > parent.length() + mpf("0.5"):
                # child.left "before" the parent start, wrapped around
                defect = max(defect, 1 - r)
            return defect

        a_next = cf.a(n + 1)
        for i in range(cf.q(n)):
            parent = p_n.atoms[i]  # I_{n-1}^i
            children = [hier.delta_atom(n, i, j) for j in range(a_next)]
            children.append(hier.atom(n + 1, i))
            for child in children:
                worst = max(worst, containment_defect(parent, child))
                checked += 1
        for i in range(cf.q(n - 1)):
            # short atoms of level n survive into level n+1 as long atoms
            parent = p_n.atoms[cf.q(n) + i]
            child = p_next.atom_by_label((n, i))
            worst = max(worst, containment_defect(parent, child))
            checked += 1
        if worst > tol:
            raise GeometryError(
                f"refinement violated at level {n}: worst containment defect "
                f"{mpmath.nstr(worst, 5)} exceeds {mpmath.nstr(tol, 5)}"
            )
        return RefinementReport(n, a_next + 1, float(worst), checked)


@dataclass
class BridgeDecomposition:
    """Critical times, spots, bridges, and reduced bridges at one level.

    ``critical_times`` is k_0 = 0 < k_1 < ... < k_r = a_{n+1} - 1; bridges[s]
    is the inclusive j-range (start, end) strictly between consecutive
    critical times, or None when empty; the trailing entry (after the last
    critical time) is always empty.  ``found_spots`` records every j whose
    closed atom meets a critical orbit, including any that coincide with the
    forced ends, so either reading of the count r is reconstructible.
    """

    level: int
    a_next: int
    critical_times: tuple[int, ...]
    found_spots: tuple[int, ...]
    spot_details: tuple[tuple[int, int, int], ...]  # (critical pt, atom index, j)
    bridges: tuple
    reduced_bridges: tuple
    degenerate: bool

    @property
    def r(self) -> int:
        return len(self.critical_times) - 1

    def bridge_js(self, s: int) -> range:
        b = self.bridges[s]
        return range(b[0], b[1] + 1) if b else range(0)

    def reduced_js(self, s: int) -> range:
        b = self.reduced_bridges[s]
        return range(b[0], b[1] + 1) if b else range(0)

    def to_report(self) -> dict:
        return {
            "level": self.level,
            "a_next": self.a_next,
            "r": self.r,
            "critical_times": list(self.critical_times),
            "spot_indices": list(self.found_spots),
            "bridge_runs": [list(b) if b else None for b in self.bridges],
            "reduced_bridges": [list(b) if b else None for b in self.reduced_bridges],
            "degenerate": self.degenerate,
        }


def bridge_decomposition(hier: PartitionHierarchy, n: int) -> BridgeDecomposition:
    """Locate the critical spots of the level-n return dynamics.

    A critical point c' of f marks time j = (k - q_{n-1}) div q_n when its
    containing atom I_n^k has q_{n-1} <= k < q_{n+1}: the orbit of the j-th
    gap constituent sweeps exactly that index block before returning, so its
    closure meets a critical point of the return map iff some swept atom's
    closure contains c'.  A c' exactly on a shared endpoint marks the
    lower-indexed closure.
    """
    cf = hier.cf
    if n + 1 > cf.depth:
        raise InvalidInputError(f"need quotient a_{n + 1}; cf depth is {cf.depth}")
    if cf.q(n + 1) + cf.q(n) > hier.n_points():
        raise InvalidInputError(
            f"orbit has {hier.n_points()} points; level-{n} bridges need "
            f"{cf.q(n + 1) + cf.q(n)}"
        )
    a_next = cf.a(n + 1)
    found: list[tuple[int, int, int]] = []
    with mpmath.workprec(hier.spec.precision_bits):
        for ci, c in enumerate(hier.spec.critical_points()):
            res = hier.locate(c, n + 1)
            candidates = [idx for gen, idx in res.labels
                          if gen == n and cf.q(n - 1) <= idx < cf.q(n + 1)]
            if candidates:
                k = min(candidates)
                found.append((ci, k, (k - cf.q(n - 1)) // cf.q(n)))
    spots = sorted({j for _, _, j in found})
    interior = [j for j in spots if 0 < j < a_next - 1]
    times = [0] + interior + ([a_next - 1] if a_next >= 2 else [])
    bridges = []
    for s in range(len(times) - 1):
        lo, hi = times[s] + 1, times[s + 1] - 1
        bridges.append((lo, hi) if lo <= hi else None)
    bridges.append(None)  # after the last critical time
    reduced = []
    for b in bridges:
        if b is None or b[1] - b[0] + 1 < 3:
            reduced.append(None)
        else:
            reduced.append((b[0] + 1, b[1] - 1))
    return BridgeDecomposition(
        level=n, a_next=a_next, critical_times=tuple(times),
        found_spots=tuple(spots), spot_details=tuple(found),
        bridges=tuple(bridges), reduced_bridges=tuple(reduced),
        degenerate=a_next <= 2,
    )
