"""Sampled scalar, vector and tensor fields on a :class:`DomainSpec`.

Fields are thin immutable wrappers around sample arrays with leading
component axes: ``(n_theta, n_r)`` for scalars, ``(2, n_theta, n_r)`` for
vectors and ``(2, 2, n_theta, n_r)`` for tensors.  Most numerical kernels in
the package work on the raw arrays and wrap the results at the API boundary.

Index convention for gradients: ``grad(v)[i, k] = d v^i / d x_k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .domain import DomainSpec, resample
from .errors import DomainError, SobolevOrderError

_EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class _Field:
    rank = 0

    def __init__(self, domain: DomainSpec, values):
        arr = np.array(values, dtype=float)
        want = (2,) * self.rank + domain.shape
        if arr.shape != want:
            arr = np.broadcast_to(arr, want).copy()
        if not np.all(np.isfinite(arr)):
            raise ValueError("field samples must be finite")
        arr.setflags(write=False)
        self.domain = domain
        self.values = arr

    @cached_property
    def spectral(self) -> np.ndarray:
        return self.domain.grid.to_spectral(self.values)

    def _check(self, other):
        if isinstance(other, _Field):
            if other.domain != self.domain:
                raise DomainError("fields live on different domains")
            return other.values
        return other

    def _new(self, values):
        return type(self)(self.domain, values)

    def __add__(self, other):
        return self._new(self.values + self._check(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._new(self.values - self._check(other))

    def __rsub__(self, other):
        return self._new(self._check(other) - self.values)

    def __mul__(self, c):
        if isinstance(c, _Field):
            raise TypeError("use multiply() for dealiased field products")
        return self._new(self.values * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self._new(self.values / c)

    def __neg__(self):
        return self._new(-self.values)

    def __repr__(self):
        return f"{type(self).__name__}({self.domain.kind}, shape={self.values.shape})"


class ScalarField(_Field):
    rank = 0


class VectorField(_Field):
    """Cartesian components ``u^1, u^2``."""

    rank = 1

    def __getitem__(self, i) -> ScalarField:
        return ScalarField(self.domain, self.values[i])

    @classmethod
    def from_components(cls, u1: ScalarField, u2: ScalarField):
        if u1.domain != u2.domain:
            raise DomainError("component domains differ")
        return cls(u1.domain, np.stack([u1.values, u2.values]))


class TensorField(_Field):
    """Components indexed ``(i, k)``."""

    rank = 2

    def __getitem__(self, ik) -> ScalarField:
        i, k = ik
        return ScalarField(self.domain, self.values[i, k])

    @classmethod
    def identity(cls, domain: DomainSpec):
        return cls(domain, np.eye(2)[:, :, None, None])

    @property
    def T(self) -> "TensorField":
        return TensorField(self.domain, np.swapaxes(self.values, 0, 1))


def wrap(domain: DomainSpec, values: np.ndarray):
    """Field of the right rank for ``values``."""
    rank = np.ndim(values) - 2
    return (ScalarField, VectorField, TensorField)[rank](domain, values)


@dataclass(frozen=True)
class Sample3D:
    """Pointwise 3D data: ``Y[p]``, ``grad_v[p]`` (3x3) and ``omega0[p]`` (3,)."""

    Y: np.ndarray
    grad_v: np.ndarray
    omega0: np.ndarray

    def __post_init__(self):
        Y, G, w = (np.asarray(a, dtype=float) for a in (self.Y, self.grad_v, self.omega0))
        if Y.shape[1:] != (3, 3) or G.shape != Y.shape or w.shape != (Y.shape[0], 3):
            raise ValueError("expected Y, grad_v of shape (P, 3, 3) and omega0 of shape (P, 3)")
        if not (np.isfinite(Y).all() and np.isfinite(G).all() and np.isfinite(w).all()):
            raise ValueError("non-finite sample entries")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "grad_v", G)
        object.__setattr__(self, "omega0", w)

    def __len__(self):
        return self.Y.shape[0]


# -- array kernels ----------------------------------------------------------

def grad_array(domain: DomainSpec, values: np.ndarray) -> np.ndarray:
    """Append a derivative axis just before the grid axes."""
    g = domain.grid
    return np.stack([g.d_x(values), g.d_y(values)], axis=-3)


def div_array(domain: DomainSpec, u: np.ndarray) -> np.ndarray:
    g = domain.grid
    return g.d_x(u[..., 0, :, :]) + g.d_y(u[..., 1, :, :])


def curl_array(domain: DomainSpec, u: np.ndarray) -> np.ndarray:
    g = domain.grid
    return g.d_x(u[..., 1, :, :]) - g.d_y(u[..., 0, :, :])


def eps_contract_array(Y: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``eps_ij Y[k,i] G[j,k]`` with ``eps_12 = 1``."""
    GY = np.einsum("jk...,ki...->ji...", G, Y)
    return GY[1, 0] - GY[0, 1]


def matmul_array(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.einsum("ij...,jk...->ik...", A, B)


def l2_array(domain: DomainSpec, values: np.ndarray) -> float:
    g = domain.grid
    sq = values * values
    while sq.ndim > 2:
        sq = sq.sum(axis=0)
    return float(np.sqrt(max(g.integrate(sq), 0.0)))


def sobolev_array(domain: DomainSpec, values: np.ndarray, r: int,
                  noise_scale: float | None = None) -> float:
    """``H^r`` norm summing every mixed partial ``dx^a dy^b`` with ``a + b <= r``.

    ``noise_scale`` is the magnitude of the quantities ``values`` was computed
    from (for a difference, the larger operand); coefficients at round-off
    relative to it are dropped before differentiating.
    """
    g = domain.grid
    total = 0.0
    values = np.asarray(values, dtype=float)
    if noise_scale is not None:
        values = g.chop_small(values, noise_scale)
    level = [values]
    for k in range(r + 1):
        for d in level:
            total += l2_array(domain, d) ** 2
        if k < r:
            level = [g.d_x(level[0])] + [g.d_y(d) for d in level]
    return float(np.sqrt(total))


def sobolev_distance(domain: DomainSpec, a: np.ndarray, b: np.ndarray, r: int) -> float:
    """``||a - b||_{H^r}`` without amplifying the round-off of either operand."""
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    return sobolev_array(domain, np.asarray(a) - np.asarray(b), r, noise_scale=scale)


def dealiased(domain: DomainSpec, fn, *arrays):
    """Evaluate a pointwise polynomial ``fn`` on the 3/2 grid and truncate back."""
    fine = domain.padded()
    up = [resample(a, domain, fine) for a in arrays]
    return resample(fn(*up), fine, domain)


# -- field operations -------------------------------------------------------

def partial_derivative(f: ScalarField, axis: str) -> ScalarField:
    g = f.domain.grid
    if axis == "x":
        return ScalarField(f.domain, g.d_x(f.values))
    if axis == "y":
        return ScalarField(f.domain, g.d_y(f.values))
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def gradient(f):
    """Scalar -> vector, vector -> tensor with ``G[i, k] = d_k v^i``."""
    if isinstance(f, ScalarField):
        return VectorField(f.domain, grad_array(f.domain, f.values))
    if isinstance(f, VectorField):
        return TensorField(f.domain, grad_array(f.domain, f.values))
    raise TypeError("gradient of a scalar or vector field")


def divergence(u: VectorField) -> ScalarField:
    return ScalarField(u.domain, div_array(u.domain, u.values))


def curl(u: VectorField) -> ScalarField:
    return ScalarField(u.domain, curl_array(u.domain, u.values))


def multiply(a: _Field, b: _Field) -> _Field:
    """Dealiased pointwise product; a scalar factor may multiply any rank."""
    if a.domain != b.domain:
        raise DomainError("fields live on different domains")
    if isinstance(a, ScalarField):
        return wrap(a.domain, dealiased(a.domain, lambda x, y: x * y, a.values, b.values))
    if isinstance(b, ScalarField):
        return multiply(b, a)
    raise TypeError("multiply needs at least one scalar factor")


def epsilon_contract_2d(Y: TensorField, G: TensorField) -> ScalarField:
    if Y.domain != G.domain:
        raise DomainError("fields live on different domains")
    return ScalarField(Y.domain, dealiased(Y.domain, eps_contract_array, Y.values, G.values))


def l2_norm(f: _Field) -> float:
    return l2_array(f.domain, f.values)


def sobolev_norm(f: _Field, r: int | None = None) -> float:
    dom = f.domain
    r = dom.sobolev_r if r is None else int(r)
    if r < 0 or r > dom.sobolev_r:
        raise SobolevOrderError(f"r = {r} outside [0, {dom.sobolev_r}]")
    return sobolev_array(dom, f.values, r)


def boundary_normal(domain: DomainSpec) -> np.ndarray:
    """Outward unit normal on each ring: shape ``(2, n_boundaries, n_theta)``."""
    g = domain.grid
    s = g.normal_sign[:, None]
    return np.stack([s * np.cos(g.theta)[None, :], s * np.sin(g.theta)[None, :]])


def normal_trace(u: VectorField | np.ndarray, domain: DomainSpec | None = None) -> np.ndarray:
    """``u . nu`` at boundary samples, shape ``(n_boundaries, n_theta)``."""
    if isinstance(u, VectorField):
        domain, u = u.domain, u.values
    tr = domain.grid.boundary_trace(u)
    return np.einsum("icj,icj->cj", tr, boundary_normal(domain))
