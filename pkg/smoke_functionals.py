import numpy as np
from fractions import Fraction
from boxqi.boxmesh import Box, tensor_mesh
from boxqi.bspline import TensorBSpline
from boxqi.polyblossom import Polynomial, blossom
from boxqi.functionals import (
    hilbert_matrix, hilbert_inverse, build_G, apply_functional,
    gauss_legendre, lr_duals, functional_norm_bound, CompositeFunctional,
)

# Hilbert inverse exactness
assert [list(r) for r in hilbert_inverse(1)] == [[4, -6], [-6, 12]]
for d in range(11):
    H = hilbert_matrix(d)
    Hi = hilbert_inverse(d)
    N = d + 1
    for i in range(N):
        for j in range(N):
            s = sum(H[i][k] * Hi[k][j] for k in range(N))
            assert s == (1 if i == j else 0), (d, i, j, s)
print("hilbert inverse exact through d=10 ok")

# quadrature sanity: integrate x^2*y on [0,2]x[1,3]
r = gauss_legendre(4, Box([0, 1], [2, 3]))
val = np.dot(r.nodes[:, 0] ** 2 * r.nodes[:, 1], r.weights)
assert abs(val - (8.0 / 3.0) * 4.0) < 1e-12, val
print("quadrature ok")

# bi-orthogonality: G reproduces blossom coefficients of monomials
rng = np.random.default_rng(7)
worst = 0.0
for trial in range(40):
    d = int(rng.integers(1, 5))
    kv = np.sort(rng.uniform(0, 4, d + 2))
    while np.min(np.diff(kv)) < 0.2:
        kv = np.sort(rng.uniform(0, 4, d + 2))
    phi = TensorBSpline((tuple(kv),), (d,))
    lo = rng.uniform(kv[0], kv[1])
    hi = rng.uniform(kv[-2], kv[-1])
    if hi - lo < 0.05:
        continue
    eta = Box([lo], [hi])
    G = build_G(phi, eta)
    for k in range(d + 1):
        g = Polynomial.from_dict(1, {(k,): 1.0})
        want = blossom(g, phi)
        got = apply_functional(G, lambda X, k=k: X[:, 0] ** k)
        worst = max(worst, abs(got - want))
assert worst < 1e-12, worst
print(f"1d biorthogonality worst residual {worst:.3e}")

# the d=5 stress case: wide support, small central eta
kv = tuple(np.linspace(0.0, 6.0, 7))
phi = TensorBSpline((kv,), (5,))
eta = Box([3.0], [4.0])
G = build_G(phi, eta)
worst5 = 0.0
for k in range(6):
    g = Polynomial.from_dict(1, {(k,): 1.0})
    want = blossom(g, phi)
    got = apply_functional(G, lambda X, k=k: X[:, 0] ** k)
    worst5 = max(worst5, abs(got - want))
print(f"d=5 central-element residual {worst5:.3e}  (need << 1e-10)")
assert worst5 < 5e-11

# harsher: eta much smaller than support, d=5
eta = Box([3.4], [3.6])
G = build_G(phi, eta)
worst5b = 0.0
for k in range(6):
    g = Polynomial.from_dict(1, {(k,): 1.0})
    want = blossom(g, phi)
    got = apply_functional(G, lambda X, k=k: X[:, 0] ** k)
    worst5b = max(worst5b, abs(got - want))
print(f"d=5 tiny-eta residual {worst5b:.3e}")

# 2d mixed degrees
phi2 = TensorBSpline((tuple(np.array([0, 1, 2, 3.0])), tuple(np.array([0, 0.5, 1.0, 1.5, 2.0]))), (2, 3))
eta2 = Box([1.0, 0.5], [2.0, 1.0])
G2 = build_G(phi2, eta2)
worst2 = 0.0
for kx in range(3):
    for ky in range(4):
        g = Polynomial.from_dict(2, {(kx, ky): 1.0})
        want = blossom(g, phi2)
        got = apply_functional(G2, lambda X, kx=kx, ky=ky: X[:, 0] ** kx * X[:, 1] ** ky)
        worst2 = max(worst2, abs(got - want))
assert worst2 < 1e-12, worst2
print(f"2d biorthogonality worst residual {worst2:.3e}")

# mesh-aligned quadrature does not change smooth results
mesh = tensor_mesh([np.linspace(0, 3, 7), np.linspace(0, 2, 5)])
a = apply_functional(G2, lambda X: np.sin(X[:, 0]) * np.exp(X[:, 1]))
b = apply_functional(G2, lambda X: np.sin(X[:, 0]) * np.exp(X[:, 1]), mesh=mesh)
print(f"mesh-aligned vs plain on smooth f: {abs(a-b):.3e} (order-5 rule, small)")

# lr_duals on the canonical nested pair
psi = TensorBSpline(((0.0, 1.0, 2.0, 3.0),), (2,))
phj = TensorBSpline(((1.0, 1.5, 2.0, 2.5),), (2,))
Gp = build_G(psi, Box([1.0], [2.0]))
Gf = build_G(phj, Box([1.5], [2.0]))
lams, ztab = lr_duals([Gp, Gf], [[], [(0, 0.75)]])
assert lams[0] is Gp
assert isinstance(lams[1], CompositeFunctional)
assert ztab[1] == {1: 1.0, 0: -0.75}, ztab[1]
f = lambda X: np.cos(X[:, 0])
lhs = apply_functional(lams[1], f)
rhs = apply_functional(Gf, f) - 0.75 * apply_functional(Gp, f)
assert abs(lhs - rhs) < 1e-14
print("lr_duals unfold ok:", ztab[1])

# norm bound positive, scales like (h_phi/h_eta)^d
nb_wide = functional_norm_bound(build_G(phi, Box([3.0], [4.0])), 2)
nb_tiny = functional_norm_bound(build_G(phi, Box([3.4], [3.6])), 2)
assert nb_tiny > nb_wide > 0
print(f"norm bounds: wide {nb_wide:.3e}, tiny {nb_tiny:.3e}")
print("all functionals smoke checks passed")
