"""Order-by-order time-Taylor recursion for Lagrangian Euler flow in 2D.

Stored coefficients are scaled, ``c[n] = (1/n!) d^n/dt^n`` at the expansion
time, where labels coincide with positions.  Then ``Y = I + sum W[n] t^n`` with
``W[0] = 0`` and the Leibniz rule turns into plain convolution.  With
``G = grad_alpha v`` (``G[i, k] = d_k v^i``):

* ``Y_t = -Y G Y``  gives  ``(n+1) W[n+1] = -sum_{p+q+s=n} Yf[p] G[q] Yf[s]``.
* Vorticity and divergence in label coordinates,
  ``eps_ij Y[k,i] G[j,k] = omega0`` and ``tr(Y G) = 0``, give the curl and
  divergence of ``V[n]`` from lower orders (simply-connected path).
* Momentum ``v_t = -Y^T grad q`` gives ``V[n+1]`` from the pressure
  coefficients (general path).  Each pressure coefficient is fixed by asking
  the next velocity coefficient to satisfy the divergence and tangency
  constraints, a Neumann problem for ``Q[n]``.
* The boundary is a union of circles centred at the origin, so tangency of the
  flow is ``X . v = 0`` on every ring with ``X = alpha + sum V[n] t^{n+1}/(n+1)``.
  Differentiating this in time gives the normal data of both elliptic problems.

Products are formed on the 3/2-padded grid and truncated once per result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import DomainSpec, resample
from .elliptic import div_curl_array, poisson_neumann_array
from .errors import InsufficientOrders, NonFiniteCoefficient
from .fields import (ScalarField, TensorField, VectorField, _Field, Sample3D, dealiased,
                     div_array, eps_contract_array, grad_array, l2_array, matmul_array,
                     normal_trace, sobolev_array)

SC = "simply-connected"
GENERAL = "general"
_PATHS = {"sc": SC, "simply-connected": SC, "general": GENERAL}

OVERFLOW = 1e300


def canonical_path(path: str) -> str:
    try:
        return _PATHS[path]
    except KeyError:
        raise ValueError(f"unknown path {path!r}; use 'sc' or 'general'") from None


# -- ledger -------------------------------------------------------------------

LEDGER_COLUMNS = ("hr_gradv", "hr_Y", "l2_gradv", "h2_q")


@dataclass
class NormLedger:
    """Raw time-derivative norms per order (``n! * ||coefficient||``)."""

    sobolev_r: int = 2
    rows: list = field(default_factory=list)

    def append(self, hr_gradv, hr_Y, l2_gradv, h2_q):
        row = (float(hr_gradv), float(hr_Y), float(l2_gradv), float(h2_q))
        if not all(math.isfinite(v) and v >= 0.0 for v in row):
            raise NonFiniteCoefficient(f"ledger row {len(self.rows)} is not finite: {row}")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, 4)

    def column(self, name: str) -> np.ndarray:
        return self.as_array()[:, LEDGER_COLUMNS.index(name)]

    hr_gradv = property(lambda self: self.column("hr_gradv"))
    hr_Y = property(lambda self: self.column("hr_Y"))
    l2_gradv = property(lambda self: self.column("l2_gradv"))
    h2_q = property(lambda self: self.column("h2_q"))

    def head(self, k: int) -> "NormLedger":
        return NormLedger(self.sobolev_r, list(self.rows[:k]))

    @classmethod
    def from_array(cls, arr, sobolev_r=2) -> "NormLedger":
        led = cls(sobolev_r)
        for row in np.asarray(arr, dtype=float).reshape(-1, 4):
            led.append(*row)
        return led


# -- state ----------------------------------------------------------------------

@dataclass(eq=False)
class TaylorState:
    """Scaled Taylor coefficients of ``Y - I``, ``grad v``, ``v`` and ``q``.

    The lists are append-only.  ``Qc`` may be one entry shorter than the others
    while an order is in progress.
    """

    domain: DomainSpec
    path: str
    omega0: ScalarField
    Yc: list = field(default_factory=list)
    Gc: list = field(default_factory=list)
    Vc: list = field(default_factory=list)
    Qc: list = field(default_factory=list)
    ledger: NormLedger = None
    compat_defects: list = field(default_factory=list)
    _fine: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.path = canonical_path(self.path)
        if self.ledger is None:
            self.ledger = NormLedger(self.domain.sobolev_r)

    @property
    def order_count(self) -> int:
        return len(self.Gc)

    @property
    def N(self) -> int:
        return len(self.Gc) - 1

    # padded coefficients, built lazily and kept
    def fine(self, name: str, k: int) -> np.ndarray:
        cache = self._fine.setdefault(name, {})
        if k not in cache:
            cache[k] = _FINE_BUILDERS[name](self, k)
        return cache[k]

    def coarse(self, fine_values: np.ndarray) -> np.ndarray:
        return resample(fine_values, self.domain.padded(), self.domain)


def _need(seq, k, what):
    if k < 0 or len(seq) <= k:
        raise InsufficientOrders(f"{what}[{k}] is not available (have {len(seq)})")


def _pad(state, values):
    return resample(values, state.domain, state.domain.padded())


def _build_W(state, k):
    _need(state.Yc, k, "Yc")
    return _pad(state, state.Yc[k].values)


def _build_Yf(state, k):
    W = state.fine("W", k)
    if k == 0:
        return W + np.eye(2)[:, :, None, None]
    return W


def _build_G(state, k):
    _need(state.Gc, k, "Gc")
    return _pad(state, state.Gc[k].values)


def _build_V(state, k):
    _need(state.Vc, k, "Vc")
    return _pad(state, state.Vc[k].values)


def _build_X(state, k):
    if k == 0:
        g = state.domain.padded().grid
        return np.stack([g.x, g.y])
    return state.fine("V", k - 1) / k


def _build_gQ(state, k):
    _need(state.Qc, k, "Qc")
    return _pad(state, grad_array(state.domain, state.Qc[k].values))


def _build_P(state, k):
    # coefficient k of Y G
    return sum(matmul_array(state.fine("Yf", p), state.fine("G", k - p)) for p in range(k + 1))


_FINE_BUILDERS = {
    "W": _build_W, "Yf": _build_Yf, "G": _build_G, "V": _build_V, "X": _build_X,
    "gQ": _build_gQ, "P": _build_P,
}


# -- generic convolution --------------------------------------------------------

def _default_product(a, b):
    if isinstance(a, _Field) or isinstance(b, _Field):
        dom = a.domain if isinstance(a, _Field) else b.domain
        ra, rb = getattr(a, "rank", 0), getattr(b, "rank", 0)
        av = a.values if isinstance(a, _Field) else np.asarray(a, float)
        bv = b.values if isinstance(b, _Field) else np.asarray(b, float)
        if ra == 2 and rb == 2:
            fn = matmul_array
        elif ra == 2 and rb == 1:
            fn = lambda x, y: np.einsum("ij...,j...->i...", x, y)
        else:
            fn = lambda x, y: x * y
        vals = dealiased(dom, fn, av, bv)
        rank = ra + rb if ra + rb < 2 or (ra, rb) not in ((2, 2), (2, 1)) else (2 if rb == 2 else 1)
        return (ScalarField, VectorField, TensorField)[rank](dom, vals)
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.ndim == 2 and b.ndim >= 1:
        return a @ b
    return a * b


def leibniz_convolve(seqs: Sequence[Sequence], n: int, drop_zero_order_of: Optional[int] = None,
                     product=None):
    """Sum over splittings ``p + s = n`` (or ``p + q + s = n``) of coefficient products.

    ``drop_zero_order_of`` names a factor whose order-0 slot is omitted.  The
    default product is the matrix product for 2x2 blocks and tensor fields and
    the pointwise product otherwise; field products are dealiased.
    """
    if len(seqs) not in (2, 3):
        raise ValueError("leibniz_convolve takes two or three sequences")
    for j, s in enumerate(seqs):
        if len(s) <= n:
            raise InsufficientOrders(f"sequence {j} has {len(s)} orders, order {n} needed")
    prod = product or _default_product
    total = None
    if len(seqs) == 2:
        splits = ((p, n - p) for p in range(n + 1))
    else:
        splits = ((p, q, n - p - q) for p in range(n + 1) for q in range(n + 1 - p))
    for idx in splits:
        if drop_zero_order_of is not None and idx[drop_zero_order_of] == 0:
            continue
        term = seqs[0][idx[0]]
        for s, k in zip(seqs[1:], idx[1:]):
            term = prod(term, s[k])
        total = term if total is None else total + term
    if total is None:
        return 0.0 * prod(seqs[0][0], seqs[1][0]) if len(seqs) == 2 else \
            0.0 * prod(prod(seqs[0][0], seqs[1][0]), seqs[2][0])
    return total


# -- one order ------------------------------------------------------------------

def next_Y_coefficient(state: TaylorState, n: int) -> TensorField:
    """``W[n+1] = -(1/(n+1)) sum_{p+q+s=n} Yf[p] G[q] Yf[s]``."""
    _need(state.Yc, n, "Yc")
    _need(state.Gc, n, "Gc")
    acc = sum(matmul_array(state.fine("P", k), state.fine("Yf", n - k)) for k in range(n + 1))
    return TensorField(state.domain, -state.coarse(acc) / (n + 1))


def assemble_curl_div_rhs_2d(state: TaylorState, n_target: int
                             ) -> tuple[ScalarField, ScalarField]:
    """Order-``n_target`` coefficients of ``curl V`` and ``div V`` from lower orders."""
    dom = state.domain
    if n_target == 0:
        return state.omega0, ScalarField(dom, np.zeros(dom.shape))
    _need(state.Yc, n_target, "Yc")
    _need(state.Gc, n_target - 1, "Gc")
    c = 0.0
    d = 0.0
    for p in range(1, n_target + 1):
        W, G = state.fine("W", p), state.fine("G", n_target - p)
        c = c - eps_contract_array(W, G)
        d = d - np.einsum("ki...,ik...->...", W, G)
    return ScalarField(dom, state.coarse(c)), ScalarField(dom, state.coarse(d))


def _ring_factor(domain: DomainSpec) -> np.ndarray:
    g = domain.grid
    return (g.normal_sign / g.boundary_radii)[:, None]


def velocity_flux_data(state: TaylorState, n_target: int) -> np.ndarray:
    """Normal trace of ``V[n_target]`` implied by ``X . v = 0`` on the rings."""
    acc = 0.0
    for a in range(1, n_target + 1):
        acc = acc - np.einsum("i...,i...->...", state.fine("X", a), state.fine("V", n_target - a))
    dot = state.coarse(acc)
    return state.domain.grid.boundary_trace(dot) * _ring_factor(state.domain)


def _amax(a) -> float:
    return float(np.max(np.abs(a))) if np.ndim(a) else abs(float(a))


def _W_fine(state: TaylorState, p: int) -> np.ndarray:
    # W[p] on the padded grid; the one order past the stored ones is built on the fly
    if p < len(state.Yc):
        return state.fine("W", p)
    if p == len(state.Yc):
        return _pad(state, next_Y_coefficient(state, p - 1).values)
    raise InsufficientOrders(f"W[{p}] needs Yc[{p - 1}]")


def _pressure(state: TaylorState, n: int, tol=None) -> tuple[np.ndarray, float]:
    """Zero-mean ``Q[n]`` and the relative compatibility defect of its Neumann data.

    ``V[n+1] = -(grad Q[n] + corr) / (n+1)`` with ``corr = sum_{p>=1} W[p]^T grad Q[n-p]``
    must carry the divergence and normal trace fixed by ``tr(Y G) = 0`` and
    ``X . v = 0`` at order ``n+1``.  Imposing them on ``Q[n]`` directly, rather
    than their time derivatives, keeps lower-order errors from accumulating.
    """
    dom = state.domain
    _need(state.Gc, n, "Gc")
    _need(state.Vc, n, "Vc")
    if n > 0:
        _need(state.Qc, n - 1, "Qc")
    # divergence and normal trace that V[n+1] must have
    d = 0.0
    for p in range(1, n + 2):
        d = d - np.einsum("ki...,ik...->...", _W_fine(state, p), state.fine("G", n + 1 - p))
    d_target = state.coarse(d)
    f_target = velocity_flux_data(state, n + 1)
    corr = 0.0
    for p in range(1, n + 1):
        corr = corr + np.einsum("ki...,k...->i...", state.fine("W", p), state.fine("gQ", n - p))
    rhs = -(n + 1) * d_target
    g_ring = -(n + 1) * f_target
    if n > 0:
        corr = state.coarse(corr)
        rhs = rhs - div_array(dom, corr)
        g_ring = g_ring - normal_trace(corr, dom)
    return poisson_neumann_array(dom, rhs, g_ring, tol=tol)


def next_pressure_coefficient(state: TaylorState, n: int) -> ScalarField:
    """Zero-mean ``Q[n]``; needs ``Yc``, ``Gc``, ``Vc`` through ``n`` and ``Qc`` through ``n-1``."""
    q, _ = _pressure(state, n)
    return ScalarField(state.domain, q)


def next_velocity_coefficient(state: TaylorState, n: int, path: str | None = None
                              ) -> tuple[VectorField, TensorField]:
    """``(V[n+1], G[n+1])`` by the chosen path."""
    dom = state.domain
    path = canonical_path(path or state.path)
    if path == GENERAL:
        _need(state.Qc, n, "Qc")
        _need(state.Yc, n, "Yc")
        acc = 0.0
        scale = 0.0
        for p in range(n + 1):
            term = np.einsum("ki...,k...->i...", state.fine("Yf", p), state.fine("gQ", n - p))
            scale = max(scale, _amax(term))
            acc = acc + term
        v = -state.coarse(acc) / (n + 1)
        scale /= n + 1
    else:
        curl_rhs, div_rhs = assemble_curl_div_rhs_2d(state, n + 1)
        _need(state.Vc, n, "Vc")
        flux = velocity_flux_data(state, n + 1)
        v = div_curl_array(dom, curl_rhs.values, div_rhs.values, flux)
        scale = 0.0
    # round-off inherited from lower orders is at eps times their size; below
    # that the coefficients are noise that every later gradient would amplify
    scale = max([scale] + [_amax(c.values) for c in state.Vc[:n + 1]])
    v = dom.grid.chop_small(v, scale)
    if path == GENERAL:
        v = _match_trace(state, v, n + 1)
    return VectorField(dom, v), TensorField(dom, grad_array(dom, v))


def _match_trace(state: TaylorState, v: np.ndarray, n_target: int) -> np.ndarray:
    """One refinement step on the normal trace of ``V[n_target]``.

    The trace of ``grad Q`` carries round-off of order ``eps N^2 |Q|``; a
    harmonic gradient with the residual as Neumann data removes it without
    touching curl, and changes the divergence only by a constant of the same size.
    """
    dom = state.domain
    g = dom.grid
    err = normal_trace(v, dom) - velocity_flux_data(state, n_target)
    area = g.integrate(np.ones(dom.shape))
    f = np.full(dom.shape, g.boundary_integral(err) / area)
    phi, _ = poisson_neumann_array(dom, f, err)
    return v - grad_array(dom, phi)


# -- driver ---------------------------------------------------------------------

def _append_ledger(state: TaylorState, n: int):
    dom = state.domain
    r = dom.sobolev_r
    logfact = math.lgamma(n + 1)
    limit = OVERFLOW / math.factorial(n) if n < 170 else 0.0

    def raw(seq, order, floor=0.0):
        # round-off inherited from lower orders sits at eps times their size
        scale = max([floor] + [_amax(c.values) for c in seq[:n + 1]])
        values = seq[n].values
        nrm = sobolev_array(dom, values, order, scale) if order else l2_array(dom, values)
        if not math.isfinite(nrm) or nrm > limit:
            raise NonFiniteCoefficient(f"order {n}: coefficient norm {nrm:.3e} beyond guard")
        return math.exp(logfact + math.log(nrm)) if nrm > 0 else 0.0

    state.ledger.append(raw(state.Gc, r), raw(state.Yc, r, 1.0), raw(state.Gc, 0),
                        raw(state.Qc, 2))


def initial_state(v0: VectorField, omega0: ScalarField, path: str = GENERAL) -> TaylorState:
    dom = v0.domain
    st = TaylorState(dom, path, omega0)
    st.Yc.append(TensorField(dom, np.zeros((2, 2) + dom.shape)))
    st.Vc.append(v0)
    st.Gc.append(TensorField(dom, grad_array(dom, v0.values)))
    return st


def expand(initial, domain: DomainSpec | None = None, path: str = GENERAL, N: int = 8,
           resume: TaylorState | None = None, tol: float | None = None) -> TaylorState:
    """Compute orders ``0..N``; ``resume`` continues an earlier state in place.

    Sequence per order: ``W[n+1]``, then ``Q[n]``, then ``V[n+1]`` and
    ``G[n+1]``; the pressure is computed on both paths so the ledger always has
    its ``H^2`` column.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    if resume is not None:
        state = resume
    else:
        v0, omega0 = initial
        if domain is not None and v0.domain != domain:
            raise ValueError("initial data live on a different domain")
        state = initial_state(v0, omega0, path)
    for n in range(state.N, N):
        state.Yc.append(next_Y_coefficient(state, n))
        if len(state.Qc) == n:
            q, defect = _pressure(state, n, tol)
            state.Qc.append(ScalarField(state.domain, q))
            state.compat_defects.append(defect)
        if len(state.ledger) == n:
            _append_ledger(state, n)
        v, G = next_velocity_coefficient(state, n)
        state.Vc.append(v)
        state.Gc.append(G)
    n = state.N
    if len(state.Qc) == n:
        q, defect = _pressure(state, n, tol)
        state.Qc.append(ScalarField(state.domain, q))
        state.compat_defects.append(defect)
    if len(state.ledger) == n:
        _append_ledger(state, n)
    return state


# -- summation and residuals ------------------------------------------------------

def series_sum(coeffs: Sequence, t: float) -> np.ndarray:
    """Horner evaluation of ``sum c[n] t^n`` over arrays or fields."""
    out = None
    for c in reversed(coeffs):
        v = c.values if isinstance(c, _Field) else np.asarray(c)
        out = v.copy() if out is None else out * t + v
    return out


def summed_Y(state: TaylorState, t: float) -> np.ndarray:
    return np.eye(2)[:, :, None, None] + series_sum(state.Yc, t)


def summed_grad_v(state: TaylorState, t: float) -> np.ndarray:
    return series_sum(state.Gc, t)


def cauchy_invariance_residual(state: TaylorState, t: float) -> float:
    """``|| eps_ij Y[k,i] G[j,k] - omega0 ||_L2`` with ``Y`` and ``G`` summed at ``t``."""
    dom = state.domain
    w = dealiased(dom, eps_contract_array, summed_Y(state, t), summed_grad_v(state, t))
    return l2_array(dom, w - state.omega0.values)


def divergence_residual(state: TaylorState, t: float) -> float:
    """``|| tr(Y G) ||_L2`` at time ``t``."""
    dom = state.domain
    tr = dealiased(dom, lambda Y, G: np.einsum("ki...,ik...->...", Y, G),
                   summed_Y(state, t), summed_grad_v(state, t))
    return l2_array(dom, tr)


def piola_residual(Y: TensorField) -> float:
    """``max_i || d_j Y[j, i] ||_L2``."""
    dom = Y.domain
    g = dom.grid
    res = [g.d_x(Y.values[0, i]) + g.d_y(Y.values[1, i]) for i in range(2)]
    return max(l2_array(dom, r) for r in res)


def det_residual(state: TaylorState, t: float) -> float:
    """``max |det(grad_alpha X) - 1|`` with ``grad_alpha X = Y^{-1}``."""
    Y = summed_Y(state, t)
    detY = Y[0, 0] * Y[1, 1] - Y[0, 1] * Y[1, 0]
    return float(np.max(np.abs(1.0 / detY - 1.0)))


def boundary_flux_residual(state: TaylorState, n: int) -> float:
    """Order-``n`` coefficient of ``v . nu(X)`` on the rings (max abs)."""
    _need(state.Vc, n, "Vc")
    acc = 0.0
    for a in range(n + 1):
        acc = acc + np.einsum("i...,i...->...", state.fine("X", a), state.fine("V", n - a))
    dot = state.coarse(acc)
    return float(np.max(np.abs(state.domain.grid.boundary_trace(dot) * _ring_factor(state.domain))))


def gradient_consistency(state: TaylorState, n: int) -> float:
    dom = state.domain
    return l2_array(dom, state.Gc[n].values - grad_array(dom, state.Vc[n].values))


# -- 3D pointwise assembler -----------------------------------------------------

def _levi_civita() -> np.ndarray:
    e = np.zeros((3, 3, 3))
    e[0, 1, 2] = e[1, 2, 0] = e[2, 0, 1] = 1.0
    e[0, 2, 1] = e[2, 1, 0] = e[1, 0, 2] = -1.0
    return e


_EPS3 = _levi_civita()


def assemble_curl_rhs_3d(samples: Sample3D, mode: str = "direct") -> np.ndarray:
    """Per-point 3-vectors of the 3D invariance expression.

    ``direct``: ``eps_ijk Y[m,i] Y[l,j] G[k,l]``.  ``expanded``: ``omega0`` plus
    the three correction sums written with ``a = I - Y`` (index pairs
    ``a[i,m] = delta_im - Y[m,i]``), which equals the plain curl of ``v`` when
    ``omega0`` is the direct value.
    """
    Y, G = samples.Y, samples.grad_v
    e = _EPS3
    if mode == "direct":
        return np.einsum("ijk,pmi,plj,pkl->pm", e, Y, Y, G, optimize=True)
    if mode != "expanded":
        raise ValueError("mode must be 'direct' or 'expanded'")
    I = np.eye(3)
    a = I[None] - np.swapaxes(Y, 1, 2)  # a[p, i, m] = delta_im - Y[p, m, i]
    b = a  # b[p, j, l] = delta_jl - Y[p, l, j]
    t1 = np.einsum("ilk,pim,pkl->pm", e, a, G, optimize=True)
    t2 = np.einsum("mjk,pjl,pkl->pm", e, b, G, optimize=True)
    t3 = np.einsum("ijk,pim,pjl,pkl->pm", e, a, b, G, optimize=True)
    return samples.omega0 + t1 + t2 - t3
