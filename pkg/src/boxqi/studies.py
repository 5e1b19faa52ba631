"""Study drivers: refinement sweeps, degree sweeps, mesh audits, dimension checks.

Configs arrive as plain dicts (the CLI loads them from JSON).  Every driver
returns a StudyResult carrying the output table plus a list of named
pass/fail checks, so callers decide what a failure means.  All drivers are
deterministic; thread counts only change wall time, never the rows.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boxmesh import Box, active_sets, box_measure, box_size, gamma_bound_checks, local_resolution, regularity_report, tensor_mesh
from .approxop import FunctionOracle, apply_quasi_interp, error_norm
from .spaces import THBLevel, assign_functionals, build_lr, build_thb, build_tps

FIT_FLOOR = 1e-13  # rows at or below this error are rounding noise, not signal
MAX_DEGREE = 10  # the exact dual-weight solver is tabulated through degree 10


# ---------------------------------------------------------------------------
# test function catalog


def _sin_prod(n):
    def f(X):
        return np.prod(np.sin(np.pi * np.asarray(X, dtype=float)), axis=-1)

    def deriv(alpha, X):
        X = np.asarray(X, dtype=float)
        out = np.ones(X.shape[:-1])
        for i, a in enumerate(alpha):
            out = out * np.pi**a * np.sin(np.pi * X[..., i] + 0.5 * np.pi * a)
        return out

    return FunctionOracle(f=f, deriv=deriv, order=12)


def _exp_sum(n):
    def f(X):
        return np.exp(np.sum(np.asarray(X, dtype=float), axis=-1))

    # every partial derivative is the function itself
    return FunctionOracle(f=f, deriv=lambda alpha, X: f(X), order=12)


def _runge(n):
    # per axis 1/(1 + 25 x^2) = Re (1 + 5ix)^{-1}, differentiated in closed form
    def axis_deriv(k, x):
        z = 1.0 + 5.0j * x
        return ((-5.0j) ** k * math.factorial(k) * z ** (-(k + 1))).real

    def f(X):
        X = np.asarray(X, dtype=float)
        return np.prod(1.0 / (1.0 + 25.0 * X**2), axis=-1)

    def deriv(alpha, X):
        X = np.asarray(X, dtype=float)
        out = np.ones(X.shape[:-1])
        for i, a in enumerate(alpha):
            out = out * axis_deriv(a, X[..., i])
        return out

    return FunctionOracle(f=f, deriv=deriv, order=12)


def _poly(n, m):
    # (w.x + 1/2)^m with decaying weights, so no axis is interchangeable
    w = 0.6 ** np.arange(n)

    def f(X):
        return (np.asarray(X, dtype=float) @ w + 0.5) ** m

    def deriv(alpha, X):
        k = sum(alpha)
        if k > m:
            return np.zeros(np.asarray(X).shape[:-1])
        c = math.factorial(m) // math.factorial(m - k)
        return c * np.prod(w ** np.asarray(alpha)) * (np.asarray(X, dtype=float) @ w + 0.5) ** (m - k)

    return FunctionOracle(f=f, deriv=deriv, order=12)


def catalog(name, n):
    """Named test function as an oracle with closed-form derivatives."""
    if name == "sin_prod":
        return _sin_prod(n)
    if name == "exp_sum":
        return _exp_sum(n)
    if name == "runge":
        return _runge(n)
    if name.startswith("poly:"):
        return _poly(n, int(name.split(":", 1)[1]))
    raise ValueError(f"unknown test function {name!r}")


# ---------------------------------------------------------------------------
# space descriptions


def _expand_ranges(ranges, count):
    idx = []
    for r in ranges:
        if isinstance(r, int):
            lo, hi = r, r + 1
        else:
            lo, hi = int(r[0]), int(r[1])
        if not (0 <= lo < hi <= count):
            raise ValueError(f"element range [{lo}, {hi}) outside 0..{count}")
        idx.extend(range(lo, hi))
    return idx


def parse_space(desc):
    """Spline space from a parsed description tree.

    Forms: {"tps": {"knots": [[...], ...]}},
    {"thb": {"levels": [{"knots": ...}, {"knots": ..., "domain": [ranges]}]}}
    where the ranges are half-open index pairs into the PREVIOUS level's
    element list (lexicographic order), and
    {"lr": {"degree": [...], "domain": [lo, hi], "insertions": [{...}]}}.
    """
    if "tps" in desc:
        d = desc["tps"]
        knots = [np.asarray(kv, dtype=float) for kv in d["knots"]]
        return build_tps(knots, degrees=d.get("degrees"))
    if "thb" in desc:
        d = desc["thb"]
        levels = []
        prev_mesh = None
        for i, lv in enumerate(d["levels"]):
            knots = [np.asarray(kv, dtype=float) for kv in lv["knots"]]
            if i == 0:
                if "domain" in lv:
                    raise ValueError("level 0 always spans the full domain")
                dom = None
            else:
                ranges = lv.get("domain")
                if ranges is None:
                    raise ValueError(f"level {i} needs a 'domain' entry")
                picked = _expand_ranges(ranges, len(prev_mesh))
                dom = [prev_mesh.element(j) for j in picked]
            levels.append(THBLevel(knots, domain=dom, index=i))
            prev_mesh = tensor_mesh([np.unique(kv) for kv in knots])
        return build_thb(levels, degrees=d.get("degrees"))
    if "lr" in desc:
        d = desc["lr"]
        dvec = d["degree"]
        if isinstance(dvec, int):
            dvec = [dvec] * len(d["domain"][0])
        domain = Box(d["domain"][0], d["domain"][1])
        ins = [
            (it["axis"], it["position"], it["span_lo"], it["span_hi"], it.get("mult", 1))
            for it in d["insertions"]
        ]
        return build_lr(dvec, domain, ins)
    raise ValueError("space description needs one of 'tps', 'thb', 'lr'")


def load_space(cfg):
    if "space" in cfg:
        desc = cfg["space"]
    elif "space_file" in cfg:
        with open(cfg["space_file"]) as fh:
            desc = json.load(fh)
    else:
        raise ValueError("config needs 'space' or 'space_file'")
    return parse_space(desc)


def thin_band_lr_description(eps):
    """LR description: 5x3 unit grid, middle row crossed by two horizontal
    segments eps apart over x in [1, 4].  Element aspect ratio grows like
    1/eps while supports stay at aspect 3."""
    ins = [{"axis": 0, "position": float(x), "span_lo": 0.0, "span_hi": 3.0} for x in (1, 2, 3, 4)]
    ins += [{"axis": 1, "position": float(y), "span_lo": 0.0, "span_hi": 5.0} for y in (1, 2)]
    ins += [
        {"axis": 1, "position": 1.5 - eps / 2, "span_lo": 1.0, "span_hi": 4.0},
        {"axis": 1, "position": 1.5 + eps / 2, "span_lo": 1.0, "span_hi": 4.0},
    ]
    return {"lr": {"degree": [2, 2], "domain": [[0.0, 0.0], [5.0, 3.0]], "insertions": ins}}


def nested_pair_lr_description():
    """LR description whose final state keeps a generator strictly inside
    another one's support, so the dual recursion has a nonempty overlap set."""
    ins = [
        {"axis": 0, "position": 1.0, "span_lo": 0.0, "span_hi": 2.0},
        {"axis": 0, "position": 2.0, "span_lo": 0.0, "span_hi": 2.0},
        {"axis": 0, "position": 3.0, "span_lo": 0.0, "span_hi": 2.0},
        {"axis": 1, "position": 1.0, "span_lo": 0.0, "span_hi": 4.0},
        {"axis": 1, "position": 0.5, "span_lo": 0.0, "span_hi": 3.0},
        {"axis": 0, "position": 1.5, "span_lo": 0.0, "span_hi": 0.5},
    ]
    return {"lr": {"degree": [2, 2], "domain": [[0.0, 0.0], [4.0, 2.0]], "insertions": ins}}


# ---------------------------------------------------------------------------
# refinement


def refine_knots(kv):
    """One dyadic step: add the midpoint of every nonempty span once."""
    t = np.asarray(kv, dtype=float)
    u = np.unique(t)
    return np.sort(np.concatenate([t, 0.5 * (u[:-1] + u[1:])]))


def refine_space(space):
    """Dyadically refined copy; subdomain geometry of hierarchies is kept."""
    if space.kind == "tps":
        return build_tps([refine_knots(kv) for kv in space.knot_axes], space.degrees)
    if space.kind == "thb":
        levels = [
            THBLevel([refine_knots(kv) for kv in lv.knot_vectors], domain=lv.domain, index=lv.index)
            for lv in space.levels
        ]
        return build_thb(levels, degrees=space.degrees)
    raise ValueError("dyadic refinement handles tps and thb spaces only")


# ---------------------------------------------------------------------------
# results and small fit helpers


@dataclass
class StudyResult:
    header: list
    rows: list
    checks: list = field(default_factory=list)  # (label, passed)
    summary: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(passed for _, passed in self.checks)


def _slope(xs, ys):
    return float(np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 1)[0])


def _r_squared(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    fit = np.polyval(np.polyfit(xs, ys, 1), xs)
    ss_res = float(np.sum((ys - fit) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    return 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot


def _as_p(v):
    if isinstance(v, str):
        if v.lower() in ("inf", "infinity"):
            return np.inf
        raise ValueError(f"bad norm exponent {v!r}")
    p = float(v)
    if not p >= 1.0:
        raise ValueError("norm exponent must be >= 1")
    return p


def _sigma(cfg, n):
    sig = tuple(int(s) for s in cfg.get("sigma", (0,) * n))
    if len(sig) != n or any(s < 0 for s in sig):
        raise ValueError("sigma must be a nonnegative multi-index of the space dimension")
    return sig


def _check_function(cfg, space):
    name = cfg.get("function", "sin_prod")
    f = catalog(name, space.n)
    if name.startswith("poly:") and int(name.split(":")[1]) > min(space.degrees):
        raise ValueError("polynomial degree exceeds the space degree")
    return name, f


# ---------------------------------------------------------------------------
# h refinement study


def run_h_study(cfg):
    """Error under dyadic refinement.

    Rows (level, n_elements, h_max, error, running_order); the running order
    is the least-squares slope of log error against log h_max over the last
    three rows (nan until two rows exist).  Optional checks: 'expect_order'
    as a [lo, hi] window on the final order, 'plateau_tol' as a ceiling on
    every error (for reproduced polynomials).
    """
    space = load_space(cfg)
    name, f = _check_function(cfg, space)
    p = _as_p(cfg.get("p", "inf"))
    sigma = _sigma(cfg, space.n)
    nlevels = int(cfg.get("levels", 5))
    if nlevels < 1:
        raise ValueError("need at least one level")

    spaces = [space]
    while len(spaces) < nlevels:
        spaces.append(refine_space(spaces[-1]))
    eta = cfg.get("eta", "element")

    def work(sp):
        q = assign_functionals(sp, eta_policy=eta)
        coeffs = apply_quasi_interp(q, f)
        err = error_norm(f, q, coeffs, p, sigma=sigma)
        return len(sp.mesh), float(np.max(sp.mesh.sizes())), err

    with ThreadPoolExecutor(max_workers=int(cfg.get("threads", 1))) as ex:
        measured = list(ex.map(work, spaces))

    rows = []
    hs, es = [], []
    for lvl, (nel, hmax, err) in enumerate(measured):
        hs.append(hmax)
        es.append(err)
        if lvl == 0 or min(es) <= 0.0:
            order = float("nan")
        else:
            order = _slope(np.log(hs[-3:]), np.log(es[-3:]))
        rows.append((lvl, nel, hmax, err, order))

    checks = []
    final_order = rows[-1][4]
    if "expect_order" in cfg:
        lo, hi = (float(v) for v in cfg["expect_order"])
        checks.append((f"fitted order {final_order:.3f} in [{lo}, {hi}]", lo <= final_order <= hi))
    if "plateau_tol" in cfg:
        tol = float(cfg["plateau_tol"])
        worst = max(es)
        checks.append((f"max error {worst:.3e} <= {tol:.1e}", worst <= tol))

    return StudyResult(
        header=["level", "n_elements", "h_max", "error", "running_order"],
        rows=rows,
        checks=checks,
        summary={"function": name, "order": final_order},
    )


# ---------------------------------------------------------------------------
# degree sweep study


def _uniform_open_knots(breaks, d):
    b = np.asarray(breaks, dtype=float)
    return np.concatenate([np.full(d, b[0]), b, np.full(d, b[-1])])


def run_p_study(cfg):
    """Error under degree elevation on a fixed break grid.

    Rows (d, dim, error).  Fits a log10-linear model against d (decay base
    tau) and against dim^(1/n) (decay base tau_dim), excluding rows whose
    error is at the rounding floor.  Checks: errors strictly decreasing,
    every consecutive ratio at most the first one, fit quality r2 at least
    'min_r2' (default 0.97).  A 'max_ratio' entry tightens the ratio bound;
    poly targets switch to a plateau check instead.
    """
    if "breaks" in cfg:
        breaks = [np.asarray(b, dtype=float) for b in cfg["breaks"]]
    elif "elements" in cfg and "domain" in cfg:
        lo, hi = cfg["domain"]
        if not all(float(a) < float(b) for a, b in zip(lo, hi)):
            raise ValueError("domain must be [lower corner, upper corner]")
        breaks = [np.linspace(a, b, int(m) + 1) for a, b, m in zip(lo, hi, cfg["elements"])]
    else:
        raise ValueError("config needs 'breaks' or 'elements' plus 'domain'")
    n = len(breaks)

    degs = cfg.get("degrees", [2, 8])
    if len(degs) == 2 and degs[0] < degs[1]:
        degs = list(range(int(degs[0]), int(degs[1]) + 1))
    degs = [int(d) for d in degs]
    name = cfg.get("function", "exp_sum")
    f = catalog(name, n)
    p = _as_p(cfg.get("p", "inf"))
    sigma = _sigma(cfg, n)
    if min(degs) < sum(sigma) + n:
        raise ValueError("degree range must start at |sigma| + dimension")
    if max(degs) > MAX_DEGREE:
        raise ValueError(f"degrees above {MAX_DEGREE} are not supported")

    # wide averaging boxes keep the functional norms flat across the sweep
    eta = cfg.get("eta", "support")

    def work(d):
        sp = build_tps([_uniform_open_knots(b, d) for b in breaks], degrees=(d,) * n)
        q = assign_functionals(sp, eta_policy=eta)
        coeffs = apply_quasi_interp(q, f)
        return len(sp.generators), error_norm(f, q, coeffs, p, sigma=sigma)

    with ThreadPoolExecutor(max_workers=int(cfg.get("threads", 1))) as ex:
        measured = list(ex.map(work, degs))

    rows = [(d, dim, err) for d, (dim, err) in zip(degs, measured)]
    usable = [(d, dim, err) for d, dim, err in rows if err > FIT_FLOOR]

    summary = {"function": name}
    checks = []
    if name.startswith("poly:"):
        tol = float(cfg.get("plateau_tol", 1e-9))
        worst = max(err for _, _, err in rows)
        checks.append((f"max error {worst:.3e} <= {tol:.1e}", worst <= tol))
    else:
        errs = [err for _, _, err in usable]
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
        checks.append(("errors strictly decreasing", decreasing))
        if len(errs) >= 2:
            ratios = [b / a for a, b in zip(errs, errs[1:])]
            cap = float(cfg.get("max_ratio", ratios[0]))
            checks.append(
                (f"first ratio {ratios[0]:.3f} < 1", ratios[0] < 1.0),
            )
            checks.append(
                (f"consecutive ratios <= {cap:.3f}", all(r <= cap * (1 + 1e-12) for r in ratios))
            )
        if len(errs) >= 3:
            ds = [d for d, _, _ in usable]
            dims = [dim ** (1.0 / n) for _, dim, _ in usable]
            logs = np.log10(errs)
            summary["tau"] = 10.0 ** _slope(ds, logs)
            summary["tau_dim"] = 10.0 ** _slope(dims, logs)
            r2 = _r_squared(ds, logs)
            summary["r2"] = r2
            min_r2 = float(cfg.get("min_r2", 0.97))
            checks.append((f"fit r2 {r2:.4f} >= {min_r2}", r2 >= min_r2))

    return StudyResult(header=["d", "dim", "error"], rows=rows, checks=checks, summary=summary)


# ---------------------------------------------------------------------------
# mesh regularity report


def _gamma_vector(spec, p, n):
    if isinstance(spec, str):
        if spec == "0":
            return (0.0,) * n
        if spec == "-1/p":
            return (0.0,) * n if np.isinf(p) else (-1.0 / p,) * n
        raise ValueError(f"unknown gamma form {spec!r}")
    g = tuple(float(v) for v in spec)
    if len(g) != n:
        raise ValueError("gamma must match the space dimension")
    return g


def run_mesh_report(cfg):
    """Regularity constants of a space, with the sufficient-condition rows.

    Emits (quantity, value, status) rows: the constants once, then Gamma_max
    and its three bounds for every requested (gamma, p) pair.  Hierarchical
    spaces also check the active-overlap count against k * (d+1)^n; locally
    refined ones report the nesting size ratio.
    """
    space = load_space(cfg)
    q = assign_functionals(space)
    p_values = [_as_p(v) for v in cfg.get("p_values", [1, 2, "inf"])]
    gamma_specs = cfg.get("gammas", ["0", "-1/p"])

    sups = space.supports()
    esups = space.esupps()
    base = regularity_report(space.mesh, sups, esups, (0.0,) * space.n, np.inf)

    rows = [
        ("n_generators", float(len(space.generators)), ""),
        ("n_elements", float(len(space.mesh)), ""),
        ("C_num_elements", base.C_num_elements, ""),
        ("C_quasi_uniform", base.C_quasi_uniform, ""),
        ("C_elem_shape", base.C_elem_shape, ""),
        ("C_esupp_shape", base.C_esupp_shape, ""),
        ("C_overlap", base.C_overlap, ""),
        ("C_esupp", q.constants["C_esupp"], ""),
        ("C_lambda_inf", q.constants["C_lambda_inf"], ""),
    ]
    checks = []

    lo_shape = base.C_esupp_shape / base.C_quasi_uniform
    hi_shape = base.C_esupp_shape * base.C_quasi_uniform
    ok = lo_shape <= base.C_elem_shape * (1 + 1e-12) and base.C_elem_shape <= hi_shape * (1 + 1e-12)
    rows.append(("shape_sandwich C_A/C_m <= C_O <= C_A*C_m", float(ok), "pass" if ok else "fail"))
    checks.append(("shape sandwich", ok))

    if "admissibility_k" in q.constants:
        k = q.constants["admissibility_k"]
        cap = k * float(np.prod([d + 1 for d in space.degrees]))
        ok = q.constants["C_E"] <= cap + 1e-12
        rows.append(("admissibility_k", float(k), ""))
        rows.append(("C_E<=k*(d+1)^n", cap, "pass" if ok else "fail"))
        checks.append(("hierarchical overlap bound", ok))
    if "ell" in q.constants:
        rows.append(("nesting_size_ratio", q.constants["ell"], ""))

    for p in p_values:
        for spec in gamma_specs:
            gamma = _gamma_vector(spec, p, space.n)
            rep = regularity_report(space.mesh, sups, esups, gamma, p)
            tag = f"[gamma={spec},p={'inf' if np.isinf(p) else '%g' % p}]"
            rows.append((f"Gamma_max{tag}", rep.Gamma_max, ""))
            for label, applicable, bound, ok in gamma_bound_checks(rep):
                if not applicable:
                    rows.append((f"{label} {tag}", bound, "skip"))
                    continue
                rows.append((f"{label} {tag}", bound, "pass" if ok else "fail"))
                checks.append((f"{label} {tag}", ok))

    return StudyResult(header=["quantity", "value", "status"], rows=rows, checks=checks)


# ---------------------------------------------------------------------------
# dimension against resolution


def run_dim_bound_check(cfg):
    """Generator count against the resolution integral.

    Computes |Phi|, the exact per-element sum for the integral of the
    reciprocal local resolution, and the sandwich
    prod(d+1) * integral <= |Phi| <= C_g * C_E * integral.  The gradedness
    ratio C_g is taken over the per-element extended-support lists, which is
    what the upper bound actually uses.
    """
    space = load_space(cfg)
    assign_functionals(space)
    sups = space.supports()
    esups = space.esupps()
    A, E = active_sets(space.mesh, sups, esups)
    h_phi, _ = local_resolution(space.mesh, esups, E)

    meas = space.mesh.measures()
    integral = float(np.sum(meas / np.prod(h_phi, axis=1)))
    nphi = len(space.generators)
    lower = float(np.prod([d + 1 for d in space.degrees])) * integral

    esizes = [np.prod(box_size(b)) for b in esups]
    c_g = 1.0
    for lst in E:
        vals = [esizes[g] for g in lst]
        c_g = max(c_g, max(vals) / min(vals))
    c_e = float(max(len(lst) for lst in E))
    upper = c_g * c_e * integral

    ok_lower = lower <= nphi * (1 + 1e-12)
    ok_upper = nphi <= upper * (1 + 1e-12)
    rows = [
        ("n_generators", float(nphi), ""),
        ("resolution_integral", integral, ""),
        ("C_E", c_e, ""),
        ("C_graded", c_g, ""),
        ("lower_bound", lower, "pass" if ok_lower else "fail"),
        ("upper_bound", upper, "pass" if ok_upper else "fail"),
    ]
    checks = [("lower bound", ok_lower), ("upper bound", ok_upper)]
    return StudyResult(header=["quantity", "value", "status"], rows=rows, checks=checks)


# ---------------------------------------------------------------------------
# CSV output


def format_csv(header, rows):
    """Comma-separated text: header row, %.17g numbers, LF endings."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else "%.17g" % v for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, result):
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(result.header, result.rows))
