import numpy as np
from boxqi.boxmesh import Box, regularity_report
from boxqi.polyblossom import Polynomial, blossom, poly_eval
from boxqi.functionals import apply_functional
from boxqi.spaces import (
    build_tps, build_thb, build_lr, THBLevel, THBShape,
    thb_admissibility, lr_nesting_sets, assign_functionals,
)


def open_uniform(lo, hi, nelem, d):
    inner = np.linspace(lo, hi, nelem + 1)
    return np.concatenate([[lo] * d, inner, [hi] * d])


# --- TPS ---
kv = open_uniform(0, 1, 5, 2)
sp = build_tps([kv, kv])
assert len(sp.generators) == 49, len(sp.generators)
assert len(sp.mesh) == 25
Q = assign_functionals(sp)
rep = regularity_report(sp.mesh, sp.supports(), sp.esupps(), (0.0, 0.0), 2.0)
assert rep.C_num_elements == 9, rep.C_num_elements
assert rep.C_overlap == 9, rep.C_overlap
assert Q.constants["C_E"] == 9
assert Q.constants["C_esupp"] == 1.0
print("tps 5x5 d=2: 49 gens, C_#=9, C_E=9 ok")

# Bernstein single element
spb = build_tps([np.array([0, 0, 0, 1, 1, 1.0]), np.array([0, 0, 1, 1.0])])
assert len(spb.generators) == 3 * 2
print("bernstein tps ok")

# biorthogonality on a small space
sp1 = build_tps([open_uniform(0, 1, 3, 2)])
Q1 = assign_functionals(sp1)
worst = 0.0
for i, gi in enumerate(sp1.generators):
    for j, gj in enumerate(sp1.generators):
        v = apply_functional(Q1.functionals[i], gj.shape.values, mesh=sp1.mesh)
        worst = max(worst, abs(v - (1.0 if i == j else 0.0)))
assert worst < 1e-12, worst
print(f"tps biorthogonality worst {worst:.2e}")

# polynomial reproduction through the functionals
rng = np.random.default_rng(3)
g = Polynomial.from_dict(2, {(a, b): rng.standard_normal() for a in range(3) for b in range(3)})
coefs = [apply_functional(lam, lambda X: poly_eval(g, X), mesh=sp.mesh) for lam in Q.functionals]
pts = rng.uniform(0.01, 0.99, (40, 2))
err = 0.0
for x in pts:
    s = sum(c * gen.shape.value(x) for c, gen in zip(coefs, sp.generators))
    err = max(err, abs(s - poly_eval(g, x[None, :])[0]))
assert err < 1e-10, err
print(f"tps poly reproduction err {err:.2e}")

# --- THB ---
kv0 = open_uniform(0, 1, 4, 2)
kv1 = open_uniform(0, 1, 8, 2)
one = build_thb([THBLevel((kv0, kv0))])
tps_ref = build_tps([kv0, kv0])
set_a = {tuple(map(tuple, g.shape.level_knots)) for g in one.generators}
set_b = {tuple(map(tuple, g.shape.knots)) for g in tps_ref.generators}
assert set_a == set_b
assert thb_admissibility(one) == 1
print("thb single level == tps ok, k=1")

# two dyadic levels, refined quadrant [0,.5]^2
two = build_thb([
    THBLevel((kv0, kv0)),
    THBLevel((kv1, kv1), domain=[Box([0, 0], [0.5, 0.5])]),
])
levels = sorted({g.level for g in two.generators})
assert levels == [0, 1], levels
n0 = sum(1 for g in two.generators if g.level == 0)
n1 = sum(1 for g in two.generators if g.level == 1)
print(f"thb two-level: {n0} coarse + {n1} fine gens, mesh {len(two.mesh)} elems, k={thb_admissibility(two)}")

# truncation shrinks sup norm for coarse functions overlapping the refined zone
import itertools
shrunk = 0
for gen in two.generators:
    if gen.level != 0:
        continue
    sh = gen.shape
    tb = sh.untruncated()
    xs = np.random.default_rng(1).uniform(gen.support.lo, gen.support.hi, (200, 2))
    tv = np.array([sh.value(x) for x in xs])
    uv = np.array([tb.value(x) for x in xs])
    assert np.all(tv <= uv + 1e-12)
    if np.max(uv - tv) > 1e-8:
        shrunk += 1
assert shrunk > 0
print(f"truncation strictly shrinks {shrunk} coarse functions")

# THB polynomial reproduction: sum blossom(g, untruncated) * truncated = g
g = Polynomial.from_dict(2, {(a, b): rng.standard_normal() for a in range(3) for b in range(3)})
err = 0.0
for x in rng.uniform(0.01, 0.99, (40, 2)):
    s = 0.0
    for gen in two.generators:
        c = blossom(g, gen.shape.untruncated())
        s += c * gen.shape.value(x)
    err = max(err, abs(s - poly_eval(g, x[None, :])[0]))
assert err < 1e-9, err
print(f"thb poly reproduction err {err:.2e}")

# --- LR ---
lr0 = build_lr((2, 2), Box([0, 0], [1, 1]))
assert len(lr0.generators) == 9
assert len(lr0.mesh) == 1
print("lr bernstein seed ok")

# full line insertions reproduce a tensor space
dom = Box([0.0, 0.0], [3.0, 2.0])
ins = [
    (0, 1.0, 0.0, 2.0), (0, 2.0, 0.0, 2.0),  # vertical lines x=1,2 spanning all y
    (1, 1.0, 0.0, 3.0),                      # horizontal line y=1 spanning all x
]
lrt = build_lr((2, 2), dom, ins)
ref = build_tps([
    np.array([0, 0, 0, 1, 2, 3, 3, 3.0]),
    np.array([0, 0, 0, 1, 2, 2, 2.0]),
])
ks_lr = {g.shape.knots for g in lrt.generators}
ks_tp = {g.shape.knots for g in ref.generators}
assert ks_lr == ks_tp, (len(ks_lr), len(ks_tp))
assert all(len(row) == 0 for row in lr_nesting_sets(lrt))
print("lr full-line == tps, all N_phi empty ok")

# partial line -> nonempty nesting somewhere, reproduction still exact
dom = Box([0.0, 0.0], [4.0, 2.0])
ins = [
    (0, 1.0, 0.0, 2.0), (0, 2.0, 0.0, 2.0), (0, 3.0, 0.0, 2.0),
    (1, 1.0, 0.0, 4.0),
    (1, 0.5, 0.0, 3.0),    # partial horizontal band edge
    (0, 1.5, 0.0, 0.5),    # short vertical inside the band
]
lrp = build_lr((2, 2), dom, ins)
nest = lr_nesting_sets(lrp)
n_nonempty = sum(1 for row in nest if row)
print(f"lr partial: {len(lrp.generators)} gens, {len(lrp.mesh)} elems, {n_nonempty} gens with nonempty N_phi")
assert n_nonempty > 0
Qlr = assign_functionals(lrp)
for row, ztab in zip(nest, Qlr.z_tables):
    for k, z in ztab.items():
        assert abs(z) <= 2.0 ** max(0, len(row) - 1) + 1e-12 or len(row) == 0
g = Polynomial.from_dict(2, {(a, b): rng.standard_normal() for a in range(3) for b in range(3)})
coefs = [apply_functional(lam, lambda X: poly_eval(g, X), mesh=lrp.mesh) for lam in Qlr.functionals]
err = 0.0
for x in rng.uniform([0.05, 0.05], [3.95, 1.95], (40, 2)):
    s = sum(c * gen.shape.value(x) for c, gen in zip(coefs, lrp.generators))
    err = max(err, abs(s - poly_eval(g, x[None, :])[0]))
assert err < 1e-9, err
print(f"lr partial-line poly reproduction err {err:.2e}")
print("ell:", Qlr.constants.get("ell"), "C_esupp:", Qlr.constants["C_esupp"])

# minimal support audit: every segment fully traversing a support appears
# in the generator's knots with at least the segment multiplicity
from boxqi.spaces import _traverses
for gen in lrp.generators:
    for seg in lrp.segments:
        assert not _traverses(gen.shape, seg, 1e-12)
print("minimal support audit ok")
print("all spaces smoke checks passed")
