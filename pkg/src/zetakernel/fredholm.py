"""Nystrom machinery for the truncated operator (Kf)(x) = int_{-t}^{t} K(x+y) f(y) dy.

The kernel argument x+y crosses the cusp lines x+y = log n inside the square
[-t,t]^2, so a plain tensor Nystrom rule stalls at low order.  The cure here
is product integration applied only where it matters: the matrix starts from
plain panel-Gauss samples (exact wherever the integrand is smooth on the
panel, since an interpolatory rule at its own nodes reproduces itself) and
every (row, panel) cell containing a cusp of y -> K(x_i + y) is replaced by
int K(x_i+y) ell_j(y) dy computed with the cusp split out and the algebraic
factor absorbed by the u = cusp + v^2 substitution.

Panel edges carry the solution kinks {log n - t} (the right side K(x+t) has
cusps exactly there) plus their mirror images, so per-panel polynomial
interpolation of the solutions converges at full rate.  Everything downstream
(determinants, the four integral-equation solutions, m(t), the Hamiltonian,
and the exp-integral route to m) sits on this one assembler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .quadrature import build_mesh, left_edge_rule, plain_rule

__all__ = [
    "NystromSystem",
    "SolutionField",
    "HamiltonianRow",
    "DetResult",
    "ZeroKernel",
    "SeparableKernel",
    "discretize",
    "operator_row",
    "fredholm_det",
    "det_pair",
    "solve_field",
    "solve_all",
    "m_of_t",
    "m_exp_integral",
    "equation_residual",
]

_KIND_SIGN = {"phi_plus": +1, "Phi": +1, "phi_minus": -1, "Psi": -1}


class ZeroKernel:
    """K identically zero; the operator vanishes and solutions equal the rhs."""

    x_max = math.inf
    kinks = np.zeros(0)

    def eval_fast(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    eval = eval_fast
    eval_deriv = eval_fast


class SeparableKernel:
    """K(z) = c e^{-z} on the whole line, so K(x+y) = c e^{-x} e^{-y} is rank one.

    The single eigenvalue of the induced operator on [-t,t] is
    c int_{-t}^{t} e^{-2y} dy = c sinh(2t), giving closed-form determinants.
    """

    x_max = math.inf
    kinks = np.zeros(0)

    def __init__(self, c: float):
        self.c = float(c)

    def eval_fast(self, x):
        return self.c * np.exp(-np.asarray(x, dtype=np.float64))

    eval = eval_fast

    def eval_deriv(self, x):
        return -self.c * np.exp(-np.asarray(x, dtype=np.float64))

    def det_closed_form(self, sign: int, t: float) -> float:
        return 1.0 + sign * self.c * math.sinh(2.0 * t)


@dataclass
class NystromSystem:
    """Composite Gauss discretization of the operator at one truncation t."""

    t: float
    profile: object = field(repr=False)
    edges: np.ndarray = field(repr=False)
    order: int
    sub_order: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)  # plain samples K(x_i + x_j)
    B: np.ndarray = field(repr=False)  # product-integration action on values

    @property
    def panels(self) -> list:
        return list(zip(self.edges[:-1], self.edges[1:]))

    @property
    def size(self) -> int:
        return len(self.nodes)


@dataclass
class SolutionField:
    """Nodal solution of one integral equation plus its natural interpolation."""

    t: float
    kind: str
    values: np.ndarray = field(repr=False)
    boundary: float
    residual_inf: float
    system: NystromSystem = field(repr=False)

    def value_at(self, x: float) -> float:
        sign = _KIND_SIGN[self.kind]
        row = operator_row(self.system, x)
        return _rhs_value(self.system, self.kind, x) - sign * float(row @ self.values)

    def deriv_at(self, x: float) -> float:
        """d/dx of the natural interpolant; needs x off the kink set."""
        sign = _KIND_SIGN[self.kind]
        row = operator_row(self.system, x, deriv=True)
        return _rhs_deriv(self.system, self.kind, x) - sign * float(row @ self.values)


@dataclass(frozen=True)
class DetResult:
    value: float
    sign: float
    log_abs: float


@dataclass(frozen=True)
class HamiltonianRow:
    t: float
    m: float
    h11: float
    h22: float
    det_plus: float
    det_minus: float
    flag: str


@lru_cache(maxsize=32)
def _ref_gauss(order: int):
    """Panel rule mapped to [0, 1]: shared reference for every panel."""
    return plain_rule(0.0, 1.0, order)


@lru_cache(maxsize=32)
def _ref_bary(order: int):
    nodes = _ref_gauss(order)[0]
    bary = np.ones(order)
    for j in range(order):
        bary[j] = 1.0 / np.prod(nodes[j] - np.delete(nodes, j))
    return nodes, bary


def _basis_at(xi: np.ndarray, order: int) -> np.ndarray:
    """ell_j(xi) on the reference panel nodes, any leading shape -> (..., order)."""
    nodes, bary = _ref_bary(order)
    d = xi[..., None] - nodes
    hit = np.abs(d) < 1e-14
    terms = bary / np.where(hit, 1.0, d)
    out = terms / terms.sum(axis=-1, keepdims=True)
    rows = hit.any(axis=-1)
    if np.any(rows):
        out[rows] = hit[rows].astype(np.float64)
    return out


def _interior_kinks(profile, x: float, lo: float, hi: float) -> np.ndarray:
    ks = np.asarray(profile.kinks, dtype=np.float64) - x
    return ks[(ks > lo + 1e-13) & (ks < hi - 1e-13)]


def _panel_product(profile, x: float, a: float, b: float, ys, order: int,
                   sub_order: int, deriv: bool = False) -> np.ndarray:
    """int_a^b K(x+y) ell_j(y) dy for a panel with interior cusps at ys.

    Plain Gauss up to the first cusp, then the v^2 substitution from each
    cusp onward; the algebraic factor (y - cusp)^{theta-1} (or theta-2 for
    the derivative kernel) becomes an odd polynomial weight in v.
    """
    ev = profile.eval_deriv if deriv else profile.eval_fast
    acc = np.zeros(order)
    cuts = [a] + [float(y) for y in ys] + [b]
    inv_w = 1.0 / (b - a)
    for k in range(len(cuts) - 1):
        lo, hi = cuts[k], cuts[k + 1]
        if hi - lo < 1e-14:
            continue
        if k == 0:
            xn, xw = plain_rule(lo, hi, sub_order)
        else:
            xn, xw = left_edge_rule(lo, hi, sub_order)
        basis = _basis_at((xn - a) * inv_w, order)
        acc += (xw * ev(x + xn)) @ basis
    return acc


def _apply_corrections(profile, nodes, edges, order, sub_order, A, B, weights):
    """Replace plain panel contributions by product integration where a kernel
    cusp crosses the (row, panel) cell.  Vectorized over all single-cusp cells."""
    kinks = np.asarray(profile.kinks, dtype=np.float64)
    if kinks.size == 0:
        return
    n_panels = len(edges) - 1
    lo, hi = edges[0], edges[-1]
    Y = kinks[None, :] - nodes[:, None]
    ii, kk = np.nonzero((Y > lo + 1e-13) & (Y < hi - 1e-13))
    if ii.size == 0:
        return
    ys = Y[ii, kk]
    p = np.clip(np.searchsorted(edges, ys, side="right") - 1, 0, n_panels - 1)
    # a cusp essentially on the right edge belongs to the next panel
    bump = (edges[p + 1] - ys) < 1e-12
    p = p + bump
    keep = p <= n_panels - 1
    ii, ys, p = ii[keep], ys[keep], p[keep]

    key = ii.astype(np.int64) * n_panels + p
    sort = np.argsort(key, kind="stable")
    key_s = key[sort]
    _, starts, counts = np.unique(key_s, return_index=True, return_counts=True)

    w_panels = weights.reshape(n_panels, order)
    col_base = np.arange(order)

    multi = np.nonzero(counts > 1)[0]
    for g in multi:
        idx = sort[starts[g] : starts[g] + counts[g]]
        i, pp = int(ii[idx[0]]), int(p[idx[0]])
        yy = np.sort(ys[idx])
        a, b = edges[pp], edges[pp + 1]
        cols = slice(pp * order, (pp + 1) * order)
        exact = _panel_product(profile, nodes[i], a, b, yy, order, sub_order)
        B[i, cols] += exact - w_panels[pp] * A[i, cols]

    single = sort[starts[counts == 1]]
    i_s, p_s, y_s = ii[single], p[single], ys[single]
    r_sub, w_sub = _ref_gauss(sub_order)
    for c0 in range(0, len(single), 2048):
        i_c = i_s[c0 : c0 + 2048]
        p_c = p_s[c0 : c0 + 2048]
        y_c = y_s[c0 : c0 + 2048]
        a = edges[p_c][:, None]
        b = edges[p_c + 1][:, None]
        y = y_c[:, None]
        # left of the cusp: plain Gauss; right: u = cusp + v^2
        n_left = a + (y - a) * r_sub
        w_left = (y - a) * w_sub
        n_right = y + (b - y) * r_sub**2
        w_right = 2.0 * (b - y) * r_sub * w_sub
        yq = np.concatenate([n_left, n_right], axis=1)
        wq = np.concatenate([w_left, w_right], axis=1)
        kv = profile.eval_fast(nodes[i_c][:, None] + yq)
        basis = _basis_at((yq - a) / (b - a), order)
        exact = np.einsum("cs,csj->cj", wq * kv, basis)
        cols = p_c[:, None] * order + col_base[None, :]
        plain = w_panels[p_c] * A[i_c[:, None], cols]
        # (row, panel) pairs are unique here, so fancy += cannot collide
        B[i_c[:, None], cols] += exact - plain


def discretize(
    profile,
    t: float,
    panels_per_unit: float = 4.0,
    nodes_per_panel: int = 12,
    *,
    sub_order: int | None = None,
    mirror_edges: bool = True,
    edge_levels: int = 0,
    edge_ratio: float = 0.3,
    interior_levels: int = 0,
    extra_breakpoints=(),
) -> NystromSystem:
    """Composite Gauss system on [-t, t] with cusp-aware product integration.

    Panel edges include the solution kinks {log n - t} and (optionally) their
    mirrors {t - log n}; kernel cusps interior to a (row, panel) cell are
    handled by the correction pass, so they need no edges of their own.

    edge_levels > 0 grades the mesh geometrically into both endpoints (the
    solutions behave like (t -/+ x)^{theta + 1/2} there) and around x = 0
    (the determinant trace sees the K(2x) ~ (2x)^{theta-1} cusp).
    interior_levels > 0 additionally grades around every interior kink
    image; that matters for non-integer theta, where each image carries a
    fractional cusp instead of a plain derivative jump.
    """
    x_max = getattr(profile, "x_max", math.inf)
    if not (0.0 < t <= 0.5 * x_max + 1e-12):
        raise ValueError("t must satisfy 0 < t <= x_max/2")
    order = int(nodes_per_panel)
    if sub_order is None:
        sub_order = order + 6
    kinks = np.asarray(profile.kinks, dtype=np.float64)
    brk = list(kinks - t)
    if mirror_edges:
        brk += list(t - kinks)
    # K(2x) kinks at log(n)/2; without these edges the determinants (which
    # see the trace quadrature) converge an order slower than the solves
    brk += list(0.5 * kinks)
    brk += [float(p) for p in extra_breakpoints]
    d = min(1.0 / panels_per_unit, t)
    if interior_levels > 0:
        centers = [p for p in set(brk) if -t + 1e-12 < p < t - 1e-12]
        for j in range(1, interior_levels + 1):
            s = d * edge_ratio**j
            brk += [p + s for p in centers] + [p - s for p in centers]
    for j in range(1, edge_levels + 1):
        s = d * edge_ratio**j
        brk += [t - s, -t + s, s, -s]
    mesh = build_mesh(-t, t, panels_per_unit=panels_per_unit, order=order,
                      breakpoints=brk)
    nodes, weights = mesh.nodes, mesh.weights
    A = profile.eval_fast(np.add.outer(nodes, nodes))
    B = A * weights[None, :]
    _apply_corrections(profile, nodes, mesh.edges, order, sub_order, A, B, weights)
    return NystromSystem(
        t=t,
        profile=profile,
        edges=mesh.edges,
        order=order,
        sub_order=sub_order,
        nodes=nodes,
        weights=weights,
        A=A,
        B=B,
    )


def operator_row(sys: NystromSystem, x: float, deriv: bool = False) -> np.ndarray:
    """Product-integration row of the operator (or its x-derivative) at any x.

    row @ values approximates int_{-t}^{t} K(x+y) f(y) dy for the per-panel
    interpolant of f; this is what natural interpolation evaluates.
    """
    prof = sys.profile
    ev = prof.eval_deriv if deriv else prof.eval_fast
    row = sys.weights * ev(x + sys.nodes)
    ys = _interior_kinks(prof, x, sys.edges[0], sys.edges[-1])
    if ys.size == 0:
        return row
    m = sys.order
    n_panels = len(sys.edges) - 1
    p = np.clip(np.searchsorted(sys.edges, ys, side="right") - 1, 0, n_panels - 1)
    p = p + ((sys.edges[p + 1] - ys) < 1e-12)
    for pp in np.unique(p[p <= n_panels - 1]):
        sel = ys[p == pp]
        a, b = sys.edges[pp], sys.edges[pp + 1]
        cols = slice(pp * m, (pp + 1) * m)
        row[cols] = _panel_product(prof, x, a, b, np.sort(sel), m, sys.sub_order,
                                   deriv=deriv)
    return row


def _rhs_nodes(sys: NystromSystem, kind: str) -> np.ndarray:
    if kind in ("Phi", "Psi"):
        return np.ones(sys.size)
    return sys.profile.eval_fast(sys.nodes + sys.t)


def _rhs_value(sys: NystromSystem, kind: str, x: float) -> float:
    if kind in ("Phi", "Psi"):
        return 1.0
    return float(sys.profile.eval_fast(x + sys.t))


def _rhs_deriv(sys: NystromSystem, kind: str, x: float) -> float:
    if kind in ("Phi", "Psi"):
        return 0.0
    return float(sys.profile.eval_deriv(x + sys.t))


def fredholm_det(sys: NystromSystem, sign: int) -> DetResult:
    """det(I + sign*S) with S the weight-symmetrized product-integration matrix.

    On cusp-free cells S_ij = sqrt(w_i) K(x_i+x_j) sqrt(w_j) exactly.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    sq = np.sqrt(sys.weights)
    S = (sq[:, None] * sys.B) / sq[None, :]
    mat = np.eye(sys.size) + sign * S
    det_sign, log_abs = np.linalg.slogdet(mat)
    return DetResult(value=float(det_sign * math.exp(log_abs)),
                     sign=float(det_sign), log_abs=float(log_abs))


def det_pair(sys: NystromSystem):
    return fredholm_det(sys, +1), fredholm_det(sys, -1)


def _solve(sys: NystromSystem, sign: int, rhs: np.ndarray) -> np.ndarray:
    mat = np.eye(sys.size) + sign * sys.B
    return np.linalg.solve(mat, rhs)


def solve_field(sys: NystromSystem, kind: str) -> SolutionField:
    """Solve (I +/- K)f = rhs for one of phi_plus, phi_minus, Phi, Psi."""
    if kind not in _KIND_SIGN:
        raise ValueError(f"unknown kind {kind!r}")
    sign = _KIND_SIGN[kind]
    rhs = _rhs_nodes(sys, kind)
    v = _solve(sys, sign, rhs)
    resid = float(np.max(np.abs(v + sign * (sys.B @ v) - rhs)))
    fld = SolutionField(t=sys.t, kind=kind, values=v, boundary=math.nan,
                        residual_inf=resid, system=sys)
    fld.boundary = fld.value_at(sys.t)
    return fld


def solve_all(sys: NystromSystem) -> dict:
    """All four solutions with one factorization per operator sign."""
    ones = np.ones(sys.size)
    krhs = sys.profile.eval_fast(sys.nodes + sys.t)
    rhs = np.column_stack([ones, krhs])
    v_plus = _solve(sys, +1, rhs)
    v_minus = _solve(sys, -1, rhs)
    row_t = operator_row(sys, sys.t)
    k2t = float(sys.profile.eval_fast(2.0 * sys.t))
    out = {}
    for kind, v, rvec, rb in (
        ("Phi", v_plus[:, 0], ones, 1.0),
        ("phi_plus", v_plus[:, 1], krhs, k2t),
        ("Psi", v_minus[:, 0], ones, 1.0),
        ("phi_minus", v_minus[:, 1], krhs, k2t),
    ):
        sign = _KIND_SIGN[kind]
        resid = float(np.max(np.abs(v + sign * (sys.B @ v) - rvec)))
        boundary = rb - sign * float(row_t @ v)
        out[kind] = SolutionField(t=sys.t, kind=kind, values=v, boundary=boundary,
                                  residual_inf=resid, system=sys)
    return out


_NEAR_ZERO_RATIO = 1e-12


def m_of_t(
    profile,
    t_grid,
    panels_per_unit: float = 4.0,
    nodes_per_panel: int = 12,
    **kw,
) -> list:
    """Determinant-ratio rows m(t) = det(1+K[t])/det(1-K[t]) and H = diag(m^-2, m^2).

    t = 0 is the zero operator: both determinants are exactly 1.  A row where
    det(1-K[t]) nearly vanishes relative to det(1+K[t]) is flagged instead of
    raising, so sweeps survive a determinant zero-crossing.
    """
    rows = []
    prev = -math.inf
    for t in t_grid:
        t = float(t)
        if t < prev:
            raise ValueError("t_grid must be nondecreasing")
        prev = t
        if t == 0.0:
            rows.append(HamiltonianRow(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, "ok"))
            continue
        sys = discretize(profile, t, panels_per_unit, nodes_per_panel, **kw)
        dp, dm = det_pair(sys)
        flag = "ok"
        if abs(dm.value) < _NEAR_ZERO_RATIO * abs(dp.value):
            flag = "near_zero"
        m = dp.value / dm.value if dm.value != 0.0 else math.inf
        rows.append(HamiltonianRow(t, m, m**-2.0, m**2.0, dp.value, dm.value, flag))
    return rows


def m_exp_integral(
    profile,
    t_values,
    *,
    panels_per_unit: float = 4.0,
    nodes_per_panel: int = 12,
    tau_order: int = 5,
    bands=None,
    **kw,
) -> dict:
    """m(t) = exp(int_0^t (phi_plus + phi_minus)(tau, tau) dtau), solve-based.

    The integrand s(tau) has algebraic cusps exactly where a new kernel cusp
    enters the domain, at tau = (log n)/2; those points and the requested t
    values seed the tau panels, each integrated with the edge-cusp rule.
    Independent of the determinant route: every s(tau) comes from solving the
    two integral equations at that tau.

    bands, if given, is a sorted list of (tau_limit, overrides) pairs; a
    panel starting at g0 uses the overrides of the first band with
    g0 < tau_limit (falling back to the keyword defaults above it).  The
    integrand stiffens as tau grows, so coarse early bands buy the budget
    for fine late ones.  Band limits are inserted as panel edges.
    """
    t_values = sorted(float(t) for t in t_values)
    if t_values and t_values[0] < 0.0:
        raise ValueError("t values must be nonnegative")
    out = {t: 1.0 for t in t_values if t == 0.0}
    t_max = max(t_values, default=0.0)
    if t_max == 0.0:
        return out
    bands = [(float(b), dict(ov)) for b, ov in (bands or ())]
    cusps = [0.5 * k for k in np.asarray(profile.kinks, dtype=np.float64)
             if 1e-12 < 0.5 * k < t_max - 1e-12]
    band_edges = [b for b, _ in bands if 1e-12 < b < t_max - 1e-12]
    edges = np.unique(np.concatenate([[0.0, t_max], cusps, band_edges,
                                      [t for t in t_values if t > 0.0]]))
    targets = {t: None for t in t_values if t > 0.0}
    acc = 0.0
    for g0, g1 in zip(edges[:-1], edges[1:]):
        opts = dict(panels_per_unit=panels_per_unit,
                    nodes_per_panel=nodes_per_panel, tau_order=tau_order, **kw)
        for lim, ov in bands:
            if g0 < lim - 1e-12:
                opts.update(ov)
                break
        q = int(opts.pop("tau_order"))
        ppu = float(opts.pop("panels_per_unit"))
        npp = int(opts.pop("nodes_per_panel"))
        xn, xw = left_edge_rule(g0, g1, q)
        part = 0.0
        for tau, w in zip(xn, xw):
            sys = discretize(profile, float(tau), ppu, npp, **opts)
            rhs = profile.eval_fast(sys.nodes + tau)
            v_plus = _solve(sys, +1, rhs)
            v_minus = _solve(sys, -1, rhs)
            row = operator_row(sys, float(tau))
            s = 2.0 * float(sys.profile.eval_fast(2.0 * tau)) + float(
                row @ (v_minus - v_plus))
            part += w * s
        acc += part
        for t in targets:
            if targets[t] is None and abs(g1 - t) < 1e-12:
                targets[t] = math.exp(acc)
    out.update(targets)
    return out


def equation_residual(sys: NystromSystem, fld: SolutionField, xs,
                      refine: int = 3) -> float:
    """Max residual of the integral equation at arbitrary points xs.

    The operator integral is recomputed on a refined mesh (refine subpanels
    per original panel, higher order, cusp splits per point) against the
    per-panel interpolant of the nodal values, independently of the B matrix.
    """
    sign = _KIND_SIGN[fld.kind]
    m = sys.order
    q = m + 8
    sub_edges = []
    for owner, (a, b) in enumerate(sys.panels):
        for k in range(refine):
            sub_edges.append((a + (b - a) * k / refine,
                              a + (b - a) * (k + 1) / refine, a, b, owner))
    vals = fld.values.reshape(-1, m)
    worst = 0.0
    for x in np.atleast_1d(xs):
        x = float(x)
        total = 0.0
        for lo, hi, a, b, owner in sub_edges:
            pieces = [lo] + [float(c) for c in
                             _interior_kinks(sys.profile, x, lo, hi)] + [hi]
            for k in range(len(pieces) - 1):
                if pieces[k + 1] - pieces[k] < 1e-14:
                    continue
                rule = plain_rule if k == 0 else left_edge_rule
                yn, yw = rule(pieces[k], pieces[k + 1], q)
                fvals = _basis_at((yn - a) / (b - a), m) @ vals[owner]
                total += float(np.dot(yw, sys.profile.eval_fast(x + yn) * fvals))
        resid = fld.value_at(x) + sign * total - _rhs_value(sys, fld.kind, x)
        worst = max(worst, abs(resid))
    return worst
