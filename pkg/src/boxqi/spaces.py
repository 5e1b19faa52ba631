"""Builders for the three spline families on box meshes.

Tensor-product spaces come straight from open knot vectors.  Truncated
hierarchical spaces select functions from a ladder of nested tensor bases
restricted to shrinking subdomains and replace each by its truncation,
stored as a sparse coefficient vector over the finest-level basis.  Locally
refined spaces grow from Bernstein seeds by splitting every generator that
a mesh line segment fully traverses, repeated to a fixpoint.

All three end up in the same SplineSpace container; assign_functionals
attaches a coefficient functional to every generator and packages the
result as a QuasiInterpolant together with the audit constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxmesh import (
    Box,
    BoxMesh,
    bounding_box,
    box_contains_box,
    box_intersection,
    box_measure,
    box_size,
    tensor_mesh,
)
from .bspline import (
    TensorBSpline,
    bspline_derivative,
    bspline_eval,
    knot_insert,
    knot_mult,
    open_windows,
    refine_expand,
    validate_open_knots,
)
from .functionals import (
    build_G,
    functional_norm_bound,
    lr_duals,
)


@dataclass
class Generator:
    """One member of the generating system; functional and extended support
    are attached by assign_functionals."""

    shape: object  # TensorBSpline or THBShape
    support: Box
    level: int = 0
    esupp: Box = None
    functional: object = None


@dataclass
class SplineSpace:
    kind: str  # "tps" | "thb" | "lr"
    generators: list
    mesh: BoxMesh
    degrees: tuple
    domain: Box
    levels: list = None  # THB ladder, None otherwise
    knot_axes: tuple = None  # global per-axis knot vectors (TPS only)
    segments: list = None  # applied meshline segments (LR only)

    @property
    def n(self):
        return len(self.degrees)

    def supports(self):
        return [g.support for g in self.generators]

    def esupps(self):
        return [g.esupp if g.esupp is not None else g.support for g in self.generators]


# ---------------------------------------------------------------------------
# tensor product


def _infer_degree(knots):
    t = np.asarray(knots, dtype=float)
    d = int(np.count_nonzero(t == t[0])) - 1
    if d < 0 or t.size < 2 * (d + 1):
        raise ValueError("cannot infer degree from boundary multiplicity")
    return d


def build_tps(knot_vectors, degrees=None):
    """Tensor-product space of all B-spline windows of the open vectors.

    Degrees default to boundary multiplicity minus one.
    """
    if degrees is None:
        degrees = tuple(_infer_degree(kv) for kv in knot_vectors)
    degrees = tuple(int(d) for d in degrees)
    axes = []
    for kv, d in zip(knot_vectors, degrees):
        t, _ = validate_open_knots(kv, d)
        axes.append(t)
    mesh = tensor_mesh([np.unique(t) for t in axes])
    windows = [open_windows(t, d) for t, d in zip(axes, degrees)]
    counts = [len(w) for w in windows]
    gens = []
    for multi in np.indices(counts).reshape(len(counts), -1).T:
        tb = TensorBSpline(tuple(windows[a][j] for a, j in enumerate(multi)), degrees)
        gens.append(Generator(shape=tb, support=tb.support))
    domain = Box([t[0] for t in axes], [t[-1] for t in axes])
    return SplineSpace("tps", gens, mesh, degrees, domain, knot_axes=tuple(axes))


# ---------------------------------------------------------------------------
# truncated hierarchical


@dataclass
class THBLevel:
    """One rung of the hierarchy: a tensor basis and the subdomain it is
    active on (list of boxes; None means the whole domain)."""

    knot_vectors: tuple
    domain: list = None
    index: int = 0


@dataclass(frozen=True)
class THBShape:
    """Truncated basis function: expansion over the finest-level windows."""

    level: int
    degrees: tuple
    level_knots: tuple  # the untruncated level-`level` window, per axis
    fine_windows: tuple  # per axis, tuple of all finest-level windows
    coeffs: tuple  # ((window index tuple, coefficient), ...)

    @property
    def support(self):
        lo = [w[0] for w in self.level_knots]
        hi = [w[-1] for w in self.level_knots]
        return Box(lo, hi)

    def value(self, x):
        return self.deriv(x, (0,) * len(self.degrees))

    def deriv(self, x, sigma):
        x = np.asarray(x, dtype=float)
        out = 0.0
        for widx, c in self.coeffs:
            term = c
            for a, (j, s) in enumerate(zip(widx, sigma)):
                kv = self.fine_windows[a][j]
                if s == 0:
                    term *= bspline_eval(kv, self.degrees[a], x[a])
                else:
                    term *= bspline_derivative(kv, self.degrees[a], x[a], s)
                if term == 0.0:
                    break
            out += term
        return out

    def values(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.value(x) for x in X])

    def untruncated(self):
        return TensorBSpline(self.level_knots, self.degrees)


def _centers(mesh):
    return 0.5 * (mesh.los + mesh.his)


def _in_union(boxes, pts):
    """Boolean mask: point lies in some box of the list (closed)."""
    pts = np.atleast_2d(pts)
    mask = np.zeros(pts.shape[0], dtype=bool)
    for b in boxes:
        mask |= np.all(pts >= b.lo[None, :], axis=1) & np.all(
            pts <= b.hi[None, :], axis=1
        )
    return mask


def _check_nested_knots(coarse, fine):
    for v in np.unique(coarse):
        if knot_mult(fine, v) < knot_mult(coarse, v):
            raise ValueError("level knot vectors are not nested")


class _LevelData:
    """Per-level caches used by selection and truncation."""

    def __init__(self, knot_vectors, degrees):
        self.axes = [np.asarray(kv, dtype=float) for kv in knot_vectors]
        self.degrees = degrees
        self.windows = [open_windows(t, d) for t, d in zip(self.axes, degrees)]
        self.index = [{w: j for j, w in enumerate(ws)} for ws in self.windows]
        self.mesh = tensor_mesh([np.unique(t) for t in self.axes])
        self.centers = _centers(self.mesh)


def build_thb(levels, degrees=None):
    """Hierarchical space from a ladder of nested tensor bases.

    levels[i].domain lists the boxes forming the active subdomain; it must
    be a union of level-(i-1) elements (checked), and the subdomains must
    shrink.  Selected level-i functions get truncated against all finer
    subdomains and are stored over the finest basis.
    """
    if not levels:
        raise ValueError("need at least one level")
    if degrees is None:
        degrees = tuple(_infer_degree(kv) for kv in levels[0].knot_vectors)
    degrees = tuple(int(d) for d in degrees)
    s = len(levels)
    data = []
    for lv in levels:
        for kv, d in zip(lv.knot_vectors, degrees):
            validate_open_knots(kv, d)
        data.append(_LevelData(lv.knot_vectors, degrees))
    for i in range(1, s):
        for a in range(len(degrees)):
            if data[i].axes[a][0] != data[0].axes[a][0] or data[i].axes[a][-1] != data[0].axes[a][-1]:
                raise ValueError("all levels must share the domain box")
            _check_nested_knots(data[i - 1].axes[a], data[i].axes[a])

    domain = Box([t[0] for t in data[0].axes], [t[-1] for t in data[0].axes])
    tol = 1e-12 * float(np.linalg.norm(domain.hi - domain.lo))

    # resolve the active subdomains; omega[s] is empty
    omega = []
    for i, lv in enumerate(levels):
        if lv.domain is None:
            if i > 0:
                raise ValueError("only level 0 may default to the full domain")
            omega.append([domain])
        else:
            omega.append([b if isinstance(b, Box) else Box(*b) for b in lv.domain])
    omega.append([])

    for i in range(1, s):
        coarse = data[i - 1].mesh
        for b in omega[i]:
            inside = coarse.contained_idx(b)
            tiled = float(np.sum(coarse.measures()[inside]))
            if abs(tiled - box_measure(b)) > tol * max(1.0, box_measure(b)):
                raise ValueError(
                    f"level-{i} domain box {b} is not a union of level-{i-1} elements"
                )
            if not _in_union(omega[i - 1], _centers_of(coarse, inside)).all():
                raise ValueError("subdomains must be nested")

    # hierarchical mesh: level-i elements inside omega_i \ omega_{i+1}
    elems, tags = [], []
    for i in range(s):
        c = data[i].centers
        keep = _in_union(omega[i], c) & ~_in_union(omega[i + 1], c)
        for j in np.flatnonzero(keep):
            elems.append(data[i].mesh.element(int(j)))
            tags.append(i)
    mesh = BoxMesh(elems, tags)

    # window expansion tables between consecutive levels, built lazily
    refine_cache = [dict() for _ in range(s)]  # [j][(axis, coarse widx)] -> [(fine widx, c)]

    def axis_expand(j, axis, widx):
        key = (axis, widx)
        hit = refine_cache[j].get(key)
        if hit is not None:
            return hit
        w = data[j - 1].windows[axis][widx]
        fine = data[j].axes[axis]
        d = degrees[axis]
        target = {}
        for v in fine:
            v = float(v)
            if w[0] <= v <= w[-1]:
                target[v] = knot_mult(fine, v)
        out = []
        for fw, c in refine_expand(w, d, target).items():
            out.append((data[j].index[axis][fw], c))
        refine_cache[j][key] = out
        return out

    # membership of window supports in omega_j, via level-j cell centers
    def support_inside(j, widx):
        lo = [data[j].windows[a][widx[a]][0] for a in range(len(degrees))]
        hi = [data[j].windows[a][widx[a]][-1] for a in range(len(degrees))]
        idx = data[j].mesh.contained_idx(Box(lo, hi))
        return _in_union(omega[j], data[j].centers[idx]).all()

    inside_cache = [dict() for _ in range(s)]

    def support_inside_cached(j, widx):
        hit = inside_cache[j].get(widx)
        if hit is None:
            hit = support_inside(j, widx)
            inside_cache[j][widx] = hit
        return hit

    def truncate_to_finest(i, widx0):
        coeffs = {widx0: 1.0}
        for j in range(i + 1, s):
            nxt = {}
            for widx, c in coeffs.items():
                per_axis = [axis_expand(j, a, widx[a]) for a in range(len(degrees))]
                stack = [((), c)]
                for table in per_axis:
                    stack = [
                        (partial + (fj,), pc * fc)
                        for partial, pc in stack
                        for fj, fc in table
                    ]
                for full, pc in stack:
                    nxt[full] = nxt.get(full, 0.0) + pc
            for widx in list(nxt):
                if support_inside_cached(j, widx):
                    del nxt[widx]
            coeffs = nxt
        return coeffs

    gens = []
    nd = len(degrees)
    for i in range(s):
        counts = [len(ws) for ws in data[i].windows]
        for multi in np.indices(counts).reshape(nd, -1).T:
            widx = tuple(int(v) for v in multi)
            lo = [data[i].windows[a][widx[a]][0] for a in range(nd)]
            hi = [data[i].windows[a][widx[a]][-1] for a in range(nd)]
            sup = Box(lo, hi)
            inside = data[i].mesh.contained_idx(sup)
            ctr = data[i].centers[inside]
            in_i = _in_union(omega[i], ctr)
            if not in_i.all():
                continue
            if not (in_i & ~_in_union(omega[i + 1], ctr)).any():
                continue
            coeffs = truncate_to_finest(i, widx)
            shape = THBShape(
                level=i,
                degrees=degrees,
                level_knots=tuple(data[i].windows[a][widx[a]] for a in range(nd)),
                fine_windows=tuple(tuple(ws) for ws in data[s - 1].windows),
                coeffs=tuple(sorted(coeffs.items())),
            )
            gens.append(Generator(shape=shape, support=sup, level=i))

    for i, lv in enumerate(levels):
        lv.index = i
    return SplineSpace("thb", gens, mesh, degrees, domain, levels=list(levels))


def _centers_of(mesh, idx):
    return 0.5 * (mesh.los[idx] + mesh.his[idx])


def thb_admissibility(space):
    """Smallest k such that every element only sees active functions from
    the k finest levels present there."""
    if space.kind != "thb":
        raise ValueError("admissibility is a hierarchical-space notion")
    k = 1
    for i in range(len(space.mesh)):
        w = space.mesh.element(i)
        lev = space.mesh.tags[i]
        found = [g.level for g in space.generators if box_contains_box(g.support, w, space.mesh.eps_geom)]
        if found:
            k = max(k, lev - min(found) + 1)
    return k


# ---------------------------------------------------------------------------
# locally refined


@dataclass(frozen=True)
class MeshlineSegment:
    """Axis-aligned segment: constant coordinate `position` on `axis`,
    extending over [span_lo, span_hi] in the remaining axes."""

    axis: int
    position: float
    span_lo: tuple
    span_hi: tuple
    mult: int = 1


def _as_segment(n, axis, position, span_lo, span_hi, mult=1):
    lo = np.atleast_1d(np.asarray(span_lo, dtype=float))
    hi = np.atleast_1d(np.asarray(span_hi, dtype=float))
    if lo.size != n - 1 or hi.size != n - 1:
        raise ValueError("segment span must cover the remaining axes")
    return MeshlineSegment(int(axis), float(position), tuple(lo), tuple(hi), int(mult))


def _split_element(b, seg, tol):
    """None if untouched, two boxes if traversed; raises on partial overlap."""
    a = seg.axis
    if not (b.lo[a] + tol < seg.position < b.hi[a] - tol):
        return None
    other = [i for i in range(b.n) if i != a]
    covered = all(
        seg.span_lo[j] <= b.lo[o] + tol and b.hi[o] - tol <= seg.span_hi[j]
        for j, o in enumerate(other)
    )
    if covered:
        lo2 = b.lo.copy()
        hi1 = b.hi.copy()
        hi1[a] = seg.position
        lo2[a] = seg.position
        return Box(b.lo, hi1), Box(lo2, b.hi)
    overlaps = all(
        min(seg.span_hi[j], b.hi[o]) - max(seg.span_lo[j], b.lo[o]) > tol
        for j, o in enumerate(other)
    )
    if overlaps:
        raise ValueError(
            "meshline segment partially covers an element; segments must "
            "span complete elements of the current mesh"
        )
    return None


def _traverses(tb, seg, tol):
    """Segment crosses the open support and covers its cross-section."""
    a = seg.axis
    k = tb.knots[a]
    if not (k[0] + tol < seg.position < k[-1] - tol):
        return False
    if knot_mult(k, seg.position) >= seg.mult:
        return False
    other = [i for i in range(tb.n) if i != a]
    return all(
        seg.span_lo[j] <= tb.knots[o][0] + tol
        and tb.knots[o][-1] - tol <= seg.span_hi[j]
        for j, o in enumerate(other)
    )


def _split_generator(tb, seg):
    a = seg.axis
    _, hat, _, tilde = knot_insert(tb.knots[a], tb.degrees[a], seg.position)
    out = []
    for kv in (hat, tilde):
        knots = tuple(
            tuple(kv) if i == a else tb.knots[i] for i in range(tb.n)
        )
        out.append(TensorBSpline(knots, tb.degrees))
    return out


def build_lr(dvec, domain, insertions=()):
    """Locally refined space: Bernstein seeds split along inserted segments.

    Each insertion is (axis, position, span_lo, span_hi[, mult]).  After
    every insertion all generators are re-split against all segments until
    nothing changes, and duplicates are merged by exact knot equality.
    """
    from .polyblossom import bernstein_generators

    dvec = tuple(int(d) for d in dvec)
    n = len(dvec)
    tol = 1e-12 * float(np.linalg.norm(domain.hi - domain.lo))
    gens = {g.knots: g for g in bernstein_generators(dvec, domain)}
    elems = [domain]
    segments = []

    def resplit():
        changed = True
        while changed:
            changed = False
            for key in list(gens):
                tb = gens[key]
                for seg in segments:
                    if _traverses(tb, seg, tol):
                        del gens[key]
                        for child in _split_generator(tb, seg):
                            gens.setdefault(child.knots, child)
                        changed = True
                        break

    for ins in insertions:
        seg = ins if isinstance(ins, MeshlineSegment) else _as_segment(n, *ins)
        if not (domain.lo[seg.axis] < seg.position < domain.hi[seg.axis]):
            raise ValueError("segment position must be interior to the domain")
        new_elems = []
        for b in elems:
            parts = _split_element(b, seg, tol)
            if parts is None:
                new_elems.append(b)
            else:
                new_elems.extend(parts)
        elems = new_elems
        segments.append(seg)
        resplit()

    mesh = BoxMesh(elems)
    out = [Generator(shape=tb, support=tb.support) for tb in gens.values()]
    out.sort(key=lambda g: g.shape.knots)
    domain_box = Box(domain.lo, domain.hi)
    return SplineSpace("lr", out, mesh, dvec, domain_box, segments=segments)


def lr_nesting_sets(space):
    """For each generator index i, the list of (j, c) with phi_i
    strictly reachable from phi_j by knot insertion, c the total expansion
    coefficient."""
    from .bspline import nesting_relation

    gens = [g.shape for g in space.generators]
    out = []
    for i, phi in enumerate(gens):
        row = []
        for j, psi in enumerate(gens):
            if i == j:
                continue
            c = nesting_relation(phi, psi)
            if c is not None:
                row.append((j, c))
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# functional assignment


@dataclass
class QuasiInterpolant:
    space: SplineSpace
    functionals: list
    constants: dict
    nesting: list = None
    z_tables: list = None

    def c_lambda(self, p):
        return max(functional_norm_bound(lam, p) for lam in self.functionals)


def _eta_for(space, gen, policy):
    """Averaging box for the generator's functional.

    "element": the largest mesh element inside the support (own level for
    hierarchical generators).  The spline space restricted to that box is
    polynomial, which makes the functionals dual to the basis.
    "support": the whole support clipped to the domain.  Duality to the
    basis is given up, but h_eta stays comparable to h_phi, so the operator
    norm stays bounded as the degree grows.
    """
    if policy == "support":
        eta = box_intersection(gen.support, space.domain)
        if eta is None:
            raise ValueError("generator support does not meet the domain")
        return eta
    if policy != "element":
        raise ValueError(f"unknown eta policy {policy!r}")
    idx = space.mesh.contained_idx(gen.support)
    if space.kind == "thb":
        idx = [i for i in idx if space.mesh.tags[i] == gen.level]
    if len(idx) == 0:
        raise ValueError("no mesh element inside a generator support")
    meas = space.mesh.measures()[list(idx)]
    return space.mesh.element(int(np.asarray(idx)[int(np.argmax(meas))]))


def assign_functionals(space, eta_policy="element"):
    """Attach coefficient functionals and package the quasi-interpolant.

    Tensor-product and hierarchical generators get their own G functional;
    locally refined generators get the unfolded recursive combination.  The
    eta policy picks the averaging boxes (see _eta_for): "element" yields a
    projector, "support" trades duality for degree-robust norms.  The audit
    constants are measured from the built space, not assumed.
    """
    bsplines = []
    for g in space.generators:
        tb = g.shape.untruncated() if isinstance(g.shape, THBShape) else g.shape
        bsplines.append(tb)
    etas = [_eta_for(space, g, eta_policy) for g in space.generators]
    G_list = [build_G(tb, eta) for tb, eta in zip(bsplines, etas)]

    nesting = None
    z_tables = None
    if space.kind == "lr":
        nesting = lr_nesting_sets(space)
        functionals, z_tables = lr_duals(G_list, nesting)
    else:
        functionals = G_list

    for g, lam in zip(space.generators, functionals):
        g.functional = lam
        hull = bounding_box([g.support, lam.support])
        g.esupp = box_intersection(hull, space.domain)

    constants = _audit_constants(space, functionals, nesting)
    return QuasiInterpolant(space, functionals, constants, nesting, z_tables)


def _audit_constants(space, functionals, nesting):
    sups = space.supports()
    esups = space.esupps()
    from .boxmesh import active_sets

    A, E = active_sets(space.mesh, sups, esups)
    C_E = max(len(e) for e in E)
    c_esupp = 1.0
    for sup, esp in zip(sups, esups):
        hs = box_size(sup)
        he = box_size(esp)
        c_esupp = max(c_esupp, float(np.max(he / hs)))
        c_esupp = max(c_esupp, (box_measure(esp) / box_measure(sup)) ** (1.0 / space.n))
    constants = {
        "C_E": C_E,
        "C_esupp": c_esupp,
        "C_lambda_inf": max(functional_norm_bound(lam, np.inf) for lam in functionals),
    }
    if space.kind == "thb":
        constants["admissibility_k"] = thb_admissibility(space)
    if nesting is not None:
        ell = 1.0
        for i, row in enumerate(nesting):
            h_i = box_size(sups[i])
            for j, _ in row:
                ell = max(ell, float(np.max(box_size(sups[j]) / h_i)))
        constants["ell"] = ell
    return constants
