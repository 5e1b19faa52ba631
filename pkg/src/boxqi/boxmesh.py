"""Axis-aligned boxes, truncated boxes, box meshes, and mesh-regularity diagnostics.

A box mesh is a list of boxes with pairwise-disjoint interiors.  Elements are
kept sorted lexicographically by their lower corner so every derived report is
reproducible bit-for-bit.  Geometric predicates share a single absolute
tolerance eps_geom = 1e-12 * (domain diameter).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .multiindex import vec_pow

GEOM_RTOL = 1e-12


class Box:
    """Closed axis-aligned box [lo_1,hi_1] x ... x [lo_n,hi_n]."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ValueError("lo/hi must be 1-d vectors of equal length")
        if np.any(self.hi < self.lo):
            raise ValueError("box needs lo <= hi componentwise")

    @property
    def n(self):
        return self.lo.size

    def __repr__(self):
        ivals = ", ".join(f"[{a:g},{b:g}]" for a, b in zip(self.lo, self.hi))
        return f"Box({ivals})"


def box_size(b):
    """Componentwise edge lengths hi - lo."""
    return b.hi - b.lo


def box_measure(b):
    return float(np.prod(b.hi - b.lo))


def bounding_box(regions):
    """Smallest box containing every region (boxes or truncated boxes)."""
    if not regions:
        raise ValueError("bounding_box of an empty list")
    boxes = [r.outer if isinstance(r, TruncatedBox) else r for r in regions]
    lo = np.min([b.lo for b in boxes], axis=0)
    hi = np.max([b.hi for b in boxes], axis=0)
    return Box(lo, hi)


def box_contains_point(b, x, tol=0.0):
    x = np.asarray(x, dtype=float)
    return bool(np.all(x >= b.lo - tol) and np.all(x <= b.hi + tol))


def box_contains_box(outer, inner, tol=0.0):
    return bool(
        np.all(inner.lo >= outer.lo - tol) and np.all(inner.hi <= outer.hi + tol)
    )


def interiors_overlap(a, b, tol=0.0):
    """True iff int(a) and int(b) intersect (overlap wider than tol everywhere)."""
    return bool(np.all(np.minimum(a.hi, b.hi) - np.maximum(a.lo, b.lo) > tol))


def box_intersection(a, b):
    """Intersection box, or None when interiors do not meet."""
    lo = np.maximum(a.lo, b.lo)
    hi = np.minimum(a.hi, b.hi)
    if np.any(hi <= lo):
        return None
    return Box(lo, hi)


class TruncatedBox:
    """Closure of outer \\ corner; the corner is a box hugging outer's boundary.

    The corner, when present, must touch at least one end of outer's extent on
    every axis (so it contains a vertex of outer), must be a strict subset, and
    must leave at least two axes partially uncovered -- otherwise the region is
    again a plain box and should be built as one.
    """

    __slots__ = ("outer", "corner")

    def __init__(self, outer, corner=None, tol=None):
        self.outer = outer
        self.corner = corner
        if corner is None:
            return
        if tol is None:
            tol = GEOM_RTOL * float(np.linalg.norm(box_size(outer)))
        if not box_contains_box(outer, corner, tol):
            raise ValueError("corner must lie inside the outer box")
        full = 0
        for i in range(outer.n):
            lo_t = abs(corner.lo[i] - outer.lo[i]) <= tol
            hi_t = abs(corner.hi[i] - outer.hi[i]) <= tol
            if not (lo_t or hi_t):
                raise ValueError("corner must share a vertex with the outer box")
            if lo_t and hi_t:
                full += 1
        if outer.n - full < 2:
            raise ValueError("corner removes a slab; the region is a plain box")

    @property
    def n(self):
        return self.outer.n

    def __repr__(self):
        if self.corner is None:
            return f"TruncatedBox({self.outer!r})"
        return f"TruncatedBox({self.outer!r} minus {self.corner!r})"


def as_region(r):
    """Accept a Box where a TruncatedBox is expected."""
    return r if isinstance(r, TruncatedBox) else TruncatedBox(r)


def classify_truncated_box(t):
    """Type index m: -1 for a plain box, else the dimension of the largest
    face of the outer box missed by the region (= number of axes the corner
    covers fully)."""
    if t.corner is None:
        return -1
    tol = GEOM_RTOL * float(np.linalg.norm(box_size(t.outer)))
    m = 0
    for i in range(t.n):
        if (
            abs(t.corner.lo[i] - t.outer.lo[i]) <= tol
            and abs(t.corner.hi[i] - t.outer.hi[i]) <= tol
        ):
            m += 1
    return m


def region_measure(t):
    if isinstance(t, Box):
        return box_measure(t)
    out = box_measure(t.outer)
    if t.corner is not None:
        out -= box_measure(t.corner)
    return out


def region_contains_box(region, b, tol=0.0):
    """b subseteq closure(outer \\ corner): inside outer, interior disjoint
    from the corner's interior."""
    region = as_region(region)
    if not box_contains_box(region.outer, b, tol):
        return False
    if region.corner is not None and interiors_overlap(region.corner, b, tol):
        return False
    return True


class BoxMesh:
    """Boxes with pairwise-disjoint interiors, sorted lexicographically by lo.

    tags is an optional per-element integer array (e.g. hierarchical level),
    reordered together with the elements.
    """

    def __init__(self, elements, tags=None, validate=True):
        if not elements:
            raise ValueError("mesh needs at least one element")
        n = elements[0].n
        los = np.array([e.lo for e in elements], dtype=float)
        his = np.array([e.hi for e in elements], dtype=float)
        if los.shape[1] != n:
            raise ValueError("mixed dimensions")
        order = np.lexsort(tuple(los[:, i] for i in range(n - 1, -1, -1)))
        self.los = los[order]
        self.his = his[order]
        self.tags = None if tags is None else np.asarray(tags)[order]
        self.domain = Box(self.los.min(axis=0), self.his.max(axis=0))
        self.eps_geom = GEOM_RTOL * float(np.linalg.norm(box_size(self.domain)))
        if np.any(self.his - self.los <= self.eps_geom):
            raise ValueError("mesh elements need nonempty interior")
        self._sizes = self.his - self.los
        self._measures = np.prod(self._sizes, axis=1)
        if validate:
            self._check_disjoint()

    def _check_disjoint(self):
        m = len(self)
        for i in range(m - 1):
            ov = np.minimum(self.his[i], self.his[i + 1 :]) - np.maximum(
                self.los[i], self.los[i + 1 :]
            )
            if np.any(np.all(ov > self.eps_geom, axis=1)):
                raise ValueError("mesh elements have overlapping interiors")

    def __len__(self):
        return self.los.shape[0]

    @property
    def n(self):
        return self.los.shape[1]

    @property
    def elements(self):
        return [Box(self.los[i], self.his[i]) for i in range(len(self))]

    def element(self, i):
        return Box(self.los[i], self.his[i])

    def sizes(self):
        return self._sizes

    def measures(self):
        return self._measures

    def contained_idx(self, region):
        """Indices of elements fully inside region (Box or TruncatedBox)."""
        region = as_region(region)
        tol = self.eps_geom
        # los[:, 0] is nondecreasing (lexicographic order), so the candidate
        # rows form one contiguous block
        los0 = self.los[:, 0]
        i0 = int(np.searchsorted(los0, region.outer.lo[0] - tol, "left"))
        i1 = int(np.searchsorted(los0, region.outer.hi[0] + tol, "left"))
        if i1 <= i0:
            return np.empty(0, dtype=np.intp)
        los = self.los[i0:i1]
        his = self.his[i0:i1]
        mask = his[:, 0] <= region.outer.hi[0] + tol
        for i in range(1, self.n):
            mask &= (los[:, i] >= region.outer.lo[i] - tol) & (
                his[:, i] <= region.outer.hi[i] + tol
            )
        if region.corner is not None:
            ov = np.minimum(his, region.corner.hi) - np.maximum(los, region.corner.lo)
            mask &= ~np.all(ov > tol, axis=1)
        return np.flatnonzero(mask) + i0


def tensor_mesh(breaks_per_axis):
    """Tensor-product mesh from strictly increasing break sequences.

    Disjointness holds by construction, so validation is skipped; element
    (i_1,...,i_n) order coincides with the lexicographic contract.
    """
    breaks = [np.asarray(b, dtype=float) for b in breaks_per_axis]
    for b in breaks:
        if b.size < 2 or np.any(np.diff(b) <= 0):
            raise ValueError("breaks must be strictly increasing, length >= 2")
    los_1d = [b[:-1] for b in breaks]
    his_1d = [b[1:] for b in breaks]
    grids_lo = np.meshgrid(*los_1d, indexing="ij")
    grids_hi = np.meshgrid(*his_1d, indexing="ij")
    los = np.stack([g.ravel() for g in grids_lo], axis=1)
    his = np.stack([g.ravel() for g in grids_hi], axis=1)
    elems = [Box(lo, hi) for lo, hi in zip(los, his)]
    return BoxMesh(elems, validate=False)


def elements_in(mesh, region):
    """Elements of the mesh fully contained in the region."""
    return [mesh.element(i) for i in mesh.contained_idx(region)]


def active_sets(mesh, supports, esupps):
    """Per-element active lists (A, E): generators whose support (resp.
    extended support) contains the element.  E_omega always contains A_omega
    since esupp contains the support."""
    m = len(mesh)
    A = [[] for _ in range(m)]
    E = [[] for _ in range(m)]
    for g, (sup, esp) in enumerate(zip(supports, esupps)):
        for i in mesh.contained_idx(sup):
            A[i].append(g)
        for i in mesh.contained_idx(esp):
            E[i].append(g)
    return A, E


def local_resolution(mesh, esupps, E):
    """Fields (h_Phi, h_M): per element, the componentwise max of esupp sizes
    over E_omega, and the element's own size."""
    m = len(mesh)
    esizes = [box_size(as_region(e).outer) for e in esupps]
    h_phi = np.empty((m, mesh.n))
    for i in range(m):
        if not E[i]:
            raise ValueError(f"element {i} has empty E_omega")
        h_phi[i] = np.max([esizes[g] for g in E[i]], axis=0)
    return h_phi, mesh.sizes()


@dataclass
class RegularityReport:
    C_num_elements: float  # C_#: max elements per support
    C_quasi_uniform: float  # C_m: max h_esupp / h_omega over active pairs
    C_elem_shape: float  # C_O: element aspect ratio
    C_esupp_shape: float  # C_A: esupp aspect ratio
    C_overlap: float  # C_E: max |E_omega|
    Gamma_max: float
    gamma: tuple
    p: float
    n: int = field(default=0)


def _gamma_phi(h_elems, h_esupp, gamma, p):
    """Mesh-regularity functional of one generator.

    h_elems: (k, n) sizes of the elements inside the support; h_esupp: (n,)."""
    if np.isinf(p):
        best = 0.0
        for row in h_elems:
            best = max(best, vec_pow(row / h_esupp, gamma))
        return best
    expo = tuple(g * p + 1.0 for g in gamma)
    acc = 0.0
    for row in h_elems:
        acc += vec_pow(row / h_esupp, expo)
    return acc ** (1.0 / p)


def regularity_report(mesh, supports, esupps, gamma, p):
    """All regularity constants of the mesh/support family at (gamma, p)."""
    gamma = tuple(float(g) for g in gamma)
    p = float(p)
    if not (p >= 1.0):
        raise ValueError("p must lie in [1, inf]")
    A, E = active_sets(mesh, supports, esupps)
    sizes = mesh.sizes()
    esizes = [box_size(as_region(e).outer) for e in esupps]

    C_hash = 0
    gmax = 0.0
    for g, sup in enumerate(supports):
        idx = mesh.contained_idx(sup)
        C_hash = max(C_hash, idx.size)
        if idx.size:
            gmax = max(gmax, _gamma_phi(sizes[idx], esizes[g], gamma, p))

    C_m = 0.0
    for i in range(len(mesh)):
        for g in A[i]:
            C_m = max(C_m, float(np.max(esizes[g] / sizes[i])))

    C_O = float(np.max(sizes.max(axis=1) / sizes.min(axis=1)))
    C_A = max(float(np.max(es) / np.min(es)) for es in esizes)
    C_E = max(len(e) for e in E)

    return RegularityReport(
        C_num_elements=float(C_hash),
        C_quasi_uniform=C_m,
        C_elem_shape=C_O,
        C_esupp_shape=C_A,
        C_overlap=float(C_E),
        Gamma_max=gmax,
        gamma=gamma,
        p=p,
        n=mesh.n,
    )


def gamma_bound_checks(report):
    """The three sufficient-condition rows bounding Gamma_max.

    Returns a list of (name, applicable, bound, ok)."""
    g = np.array(report.gamma)
    p = report.p
    ip = 0.0 if np.isinf(p) else 1.0 / p
    rows = []

    applicable = bool(np.all(g >= 0))
    rows.append(("gamma>=0 => Gamma<=1", applicable, 1.0, report.Gamma_max <= 1.0 + 1e-12))

    applicable = bool(np.all(g >= -ip))
    bound = report.C_num_elements ** (-float(g.min()))
    rows.append(
        (
            "gamma>=-1/p => Gamma<=C_#^(-min gamma)",
            applicable,
            bound,
            report.Gamma_max <= bound * (1 + 1e-12),
        )
    )

    neg = np.minimum(g + ip, 0.0)
    bound = report.C_quasi_uniform ** (float(-neg.sum()) + report.n * ip)
    rows.append(
        (
            "quasi-uniform => Gamma<=C_m^(|(gamma+1/p)_-|+n/p)",
            True,
            bound,
            report.Gamma_max <= bound * (1 + 1e-12),
        )
    )
    return rows


def parse_mesh_description(desc):
    """Mesh from a parsed description tree.

    Two forms are accepted: {"tensor": {"knots": [[...], ...]}} builds the
    grid of the unique knot values, {"dimension": n, "elements": [{"lo":
    [...], "hi": [...]}, ...]} lists boxes explicitly.  Overlapping
    interiors are rejected by the BoxMesh constructor.
    """
    if "tensor" in desc:
        knots = desc["tensor"]["knots"]
        return tensor_mesh([np.unique(np.asarray(kv, dtype=float)) for kv in knots])
    if "elements" in desc:
        boxes = [Box(e["lo"], e["hi"]) for e in desc["elements"]]
        if "dimension" in desc and boxes[0].n != int(desc["dimension"]):
            raise ValueError("mesh dimension does not match the elements")
        return BoxMesh(boxes)
    raise ValueError("mesh description needs a 'tensor' or 'elements' entry")
