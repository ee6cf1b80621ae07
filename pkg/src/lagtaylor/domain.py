"""Bounded 2D spectral domains: disk and annulus on a polar Fourier x Chebyshev grid.

Samples live on an ``(n_theta, n_r)`` array, theta-major.  Angular points are
uniform, radial points are Chebyshev-Lobatto.  On the disk the radial line is
the positive half of a doubled Chebyshev grid on ``[-R, R]`` with an even
number of points, so ``r = 0`` is never sampled and the value at ``(-r, theta)``
is read from ``(r, theta + pi)``.  Mode ``m`` then carries radial functions of
parity ``(-1)**m``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import DomainError

# relative size below which spectral coefficients count as round-off
CHOP = 1e-14

DISK = "disk"
ANNULUS = "annulus"


@dataclass(frozen=True)
class DomainSpec:
    """Disk ``r < r_outer`` or annulus ``r_inner < r < r_outer`` with grid sizes.

    Attributes
    ----------
    kind : {"disk", "annulus"}
    r_inner, r_outer : float
        Radii. ``r_inner`` must be 0 for the disk and positive for the annulus.
    n_theta : int
        Even number of angular points.
    n_r : int
        Radial points (``>= 4``).
    sobolev_r : int
        Sobolev index used for ``H^r`` norms (``>= 2``).
    """

    kind: str
    r_inner: float
    r_outer: float
    n_theta: int
    n_r: int
    sobolev_r: int = 2

    def __post_init__(self):
        if self.kind not in (DISK, ANNULUS):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if not self.r_inner < self.r_outer:
            raise DomainError("r_inner must be smaller than r_outer")
        if (self.r_inner == 0) != (self.kind == DISK):
            raise DomainError("r_inner = 0 exactly for the disk")
        if self.r_inner < 0:
            raise DomainError("negative radius")
        if self.n_theta <= 0 or self.n_theta % 2:
            raise DomainError("n_theta must be a positive even count")
        if self.n_r < 4:
            raise DomainError("n_r must be at least 4")
        if self.sobolev_r < 2:
            raise DomainError("sobolev_r must be >= 2 (r > d/2 with d = 2)")

    @classmethod
    def disk(cls, radius=1.0, n_theta=32, n_r=24, sobolev_r=2):
        return cls(DISK, 0.0, float(radius), int(n_theta), int(n_r), int(sobolev_r))

    @classmethod
    def annulus(cls, r_inner=1.0, r_outer=2.0, n_theta=32, n_r=24, sobolev_r=2):
        return cls(ANNULUS, float(r_inner), float(r_outer), int(n_theta), int(n_r),
                   int(sobolev_r))

    @property
    def is_disk(self) -> bool:
        return self.kind == DISK

    @property
    def n_boundaries(self) -> int:
        return 1 if self.is_disk else 2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_r)

    @property
    def grid(self) -> "PolarGrid":
        return _grid(self.kind, self.r_inner, self.r_outer, self.n_theta, self.n_r)

    def with_resolution(self, n_theta: int, n_r: int) -> "DomainSpec":
        return replace(self, n_theta=int(n_theta), n_r=int(n_r))

    def refined(self, factor: int = 2) -> "DomainSpec":
        return self.with_resolution(self.n_theta * factor, self.n_r * factor)

    def padded(self) -> "DomainSpec":
        """The 3/2 grid used for dealiased products."""
        nt = 3 * self.n_theta // 2
        nt += nt % 2
        return self.with_resolution(nt, (3 * self.n_r + 1) // 2)

    def same_geometry(self, other: "DomainSpec") -> bool:
        return (self.kind, self.r_inner, self.r_outer) == (other.kind, other.r_inner, other.r_outer)


def cheb(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev-Lobatto points ``cos(pi j / N)`` and the differentiation matrix."""
    j = np.arange(N + 1)
    # sine forms keep the points exactly symmetric and the differences accurate
    x = np.sin(np.pi * (N - 2 * j) / (2 * N))
    c = np.where((j == 0) | (j == N), 2.0, 1.0) * (-1.0) ** j
    dX = -2.0 * np.sin(np.pi * (j[:, None] + j[None, :]) / (2 * N)) \
        * np.sin(np.pi * (j[:, None] - j[None, :]) / (2 * N))
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def _cheb_deriv_coeffs(c: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients of the derivative (last axis), same length."""
    n = c.shape[-1]
    d = np.zeros_like(c)
    if n < 2:
        return d
    d[..., n - 2] = 2 * (n - 1) * c[..., n - 1]
    for k in range(n - 3, -1, -1):
        d[..., k] = d[..., k + 2] + 2 * (k + 1) * c[..., k + 1]
    d[..., 0] *= 0.5
    return d


def _cheb_div_x_coeffs(c: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients of ``f / x`` with the ``c / x`` remainder dropped.

    Solves ``x g = f`` from the top coefficient down; the constant term of
    ``f`` is the residue at the origin and is discarded.
    """
    n = c.shape[-1]
    b = np.zeros_like(c)
    if n < 2:
        return b
    b[..., n - 2] = 2 * c[..., n - 1]
    for j in range(n - 2, 1, -1):
        nxt = b[..., j + 1] if j + 1 < n else 0.0
        b[..., j - 1] = 2 * c[..., j] - nxt
    b[..., 0] = c[..., 1] - (0.5 * b[..., 2] if n > 2 else 0.0)
    return b


def _cheb_coeff_matrix(N: int) -> np.ndarray:
    """Matrix mapping Lobatto samples to Chebyshev coefficients (degree <= N)."""
    j = np.arange(N + 1)
    chat = np.where((j == 0) | (j == N), 2.0, 1.0)
    C = np.cos(np.pi * np.outer(j, j) / N) / chat[None, :]
    return (2.0 / N) * C / chat[:, None]


class PolarGrid:
    """Immutable spectral machinery for one geometry and resolution."""

    def __init__(self, kind, a, b, n_theta, n_r):
        self.kind, self.a, self.b = kind, float(a), float(b)
        self.n_theta, self.n_r = int(n_theta), int(n_r)
        self.n_modes = self.n_theta // 2 + 1
        self.chop = CHOP
        self.theta = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        self.m = np.arange(self.n_modes)
        nr = self.n_r
        if kind == DISK:
            N = 2 * nr - 1
            x, D = cheb(N)
            self.xi = x[:nr]
            self.r = b * self.xi
            DD = D @ D
            # columns for mirrored points, ordered like the positive half
            self._D1 = D[:nr, :nr] / b
            self._D2 = D[:nr, ::-1][:, :nr] / b
            self.Dr = [self._D1 + s * self._D2 for s in (1.0, -1.0)]
            self.Drr = [(DD[:nr, :nr] + s * DD[:nr, ::-1][:, :nr]) / b**2 for s in (1.0, -1.0)]
            C = _cheb_coeff_matrix(N)
            self._to_coef = [C[p::2, :nr] + s * C[p::2, ::-1][:, :nr]
                             for p, s in ((0, 1.0), (1, -1.0))]
            T = np.cos(np.outer(np.arange(nr), np.arange(N + 1)) * np.pi / N)
            self._from_coef = [T[:, p::2] for p in (0, 1)]
            mu = np.zeros(N + 1)
            ell = np.arange(0, N + 1, 2) // 2
            with np.errstate(divide="ignore", invalid="ignore"):
                mu_even = np.where(ell == 1, 0.0, (1.0 + (-1.0) ** ell) / (4.0 * (1.0 - ell**2)))
            mu[0::2] = mu_even
            W = mu @ C
            self.weights = b**2 * (W[:nr] + W[::-1][:nr])
            self.boundary_rows = np.array([0])
            self.boundary_radii = np.array([b])
            self.normal_sign = np.array([1.0])
        else:
            N = nr - 1
            x, D = cheb(N)
            self.xi = x
            self.r = 0.5 * (a + b) + 0.5 * (b - a) * x
            Dr = D * (2.0 / (b - a))
            self.Dr = [Dr, Dr]
            self.Drr = [Dr @ Dr, Dr @ Dr]
            C = _cheb_coeff_matrix(N)
            T = np.cos(np.outer(np.arange(nr), np.arange(nr)) * np.pi / N)
            self._to_coef = [C, C]
            self._from_coef = [T, T]
            k = np.arange(nr)
            mu = np.where(k % 2 == 0, 2.0 / (1.0 - k.astype(float) ** 2 + (k == 1)), 0.0)
            W = mu @ C
            self.weights = 0.5 * (b - a) * W * self.r
            self.boundary_rows = np.array([0, nr - 1])
            self.boundary_radii = np.array([b, a])
            self.normal_sign = np.array([1.0, -1.0])
        self.parity = self.m % 2
        self.cos = np.cos(self.theta)[:, None] * np.ones(nr)[None, :]
        self.sin = np.sin(self.theta)[:, None] * np.ones(nr)[None, :]
        self.rr = np.ones(self.n_theta)[:, None] * self.r[None, :]
        self.x = self.rr * self.cos
        self.y = self.rr * self.sin

    # -- derivatives --------------------------------------------------------
    def d_r(self, f: np.ndarray) -> np.ndarray:
        """Radial derivative computed on Chebyshev coefficients.

        Coefficients below ``chop * max|c|`` (per field) are dropped first, so
        round-off in the samples is not amplified by the ``O(N^2)`` growth of
        differentiation.
        """
        c = self.to_spectral(f)
        if self.chop > 0:
            lim = self.chop * np.max(np.abs(c), axis=(-2, -1), keepdims=True)
            c = np.where(np.abs(c) < lim, 0.0, c)
        out = np.empty_like(c)
        if self.kind == DISK:
            N = 2 * self.n_r - 1
            for p in (0, 1):
                sel = self.parity == p
                full = np.zeros(c[..., sel, :].shape[:-1] + (N + 1,), dtype=complex)
                full[..., p::2] = c[..., sel, :]
                d = _cheb_deriv_coeffs(full) / self.b
                out[..., sel, :] = d[..., 1 - p::2] @ self._from_coef[1 - p].T
        else:
            d = _cheb_deriv_coeffs(c) * (2.0 / (self.b - self.a))
            out = d @ self._from_coef[0].T
        return self.inverse_fourier(out)

    def d_r_collocation(self, f: np.ndarray) -> np.ndarray:
        if self.kind == DISK:
            flipped = np.roll(f, self.n_theta // 2, axis=-2)
            return f @ self._D1.T + flipped @ self._D2.T
        return f @ self.Dr[0].T

    def d_theta(self, f: np.ndarray) -> np.ndarray:
        fh = sfft.rfft(f, axis=-2)
        fh = fh * (1j * self.m)[:, None]
        fh[..., -1, :] = 0.0
        return sfft.irfft(fh, n=self.n_theta, axis=-2)

    def d_theta_over_r(self, f: np.ndarray) -> np.ndarray:
        """``(1/r) d f / d theta``.

        On the disk the division by ``r`` is done on the parity-split
        Chebyshev series, dropping the residue at the centre, so round-off in
        the higher Fourier modes is not blown up near ``r = 0``.
        """
        if self.kind != DISK:
            return self.d_theta(f) / self.rr
        c = self.to_spectral(f) * (1j * self.m)[:, None]
        c[..., -1, :] = 0.0
        out = np.empty_like(c)
        N = 2 * self.n_r - 1
        for p in (0, 1):
            sel = self.parity == p
            full = np.zeros(c[..., sel, :].shape[:-1] + (N + 1,), dtype=complex)
            full[..., p::2] = c[..., sel, :]
            q = _cheb_div_x_coeffs(full) / self.b
            out[..., sel, :] = q[..., 1 - p::2] @ self._from_coef[1 - p].T
        return self.inverse_fourier(out)

    def d_x(self, f: np.ndarray) -> np.ndarray:
        return self.cos * self.d_r(f) - self.sin * self.d_theta_over_r(f)

    def d_y(self, f: np.ndarray) -> np.ndarray:
        return self.sin * self.d_r(f) + self.cos * self.d_theta_over_r(f)

    # -- quadrature ---------------------------------------------------------
    def integrate(self, f: np.ndarray) -> np.ndarray:
        """Area integral over the domain (reduces the last two axes)."""
        return (2.0 * np.pi / self.n_theta) * np.einsum("...ij,j->...", f, self.weights)

    def boundary_integral(self, g: np.ndarray) -> np.ndarray:
        """Sum over boundary components of the arc-length integral of ``g[..., c, :]``."""
        ds = 2.0 * np.pi * self.boundary_radii / self.n_theta
        return np.einsum("...ci,c->...", g, ds)

    def boundary_trace(self, f: np.ndarray) -> np.ndarray:
        """Samples on each boundary ring: shape ``(..., n_boundaries, n_theta)``."""
        return np.moveaxis(f[..., self.boundary_rows], -1, -2)

    # -- transforms ---------------------------------------------------------
    def fourier(self, f: np.ndarray) -> np.ndarray:
        return sfft.rfft(f, axis=-2, norm="forward")

    def inverse_fourier(self, fh: np.ndarray) -> np.ndarray:
        return sfft.irfft(fh, n=self.n_theta, axis=-2, norm="forward")

    def to_spectral(self, f: np.ndarray) -> np.ndarray:
        """Fourier-in-theta x Chebyshev-in-r coefficients, shape ``(..., n_modes, n_r)``."""
        fh = self.fourier(f)
        out = np.empty_like(fh)
        for p in (0, 1):
            sel = self.parity == p
            out[..., sel, :] = fh[..., sel, :] @ self._to_coef[p].T
        return out

    def from_spectral(self, c: np.ndarray) -> np.ndarray:
        fh = np.empty_like(c)
        for p in (0, 1):
            sel = self.parity == p
            fh[..., sel, :] = c[..., sel, :] @ self._from_coef[p].T
        return self.inverse_fourier(fh)

    def chop_small(self, f: np.ndarray, scale: float) -> np.ndarray:
        """Drop spectral coefficients below ``chop * scale``.

        Used on quantities that are sums of cancelling terms of size ``scale``,
        where the result's own magnitude says nothing about its round-off.
        """
        c = self.to_spectral(f)
        return self.from_spectral(np.where(np.abs(c) < self.chop * scale, 0.0, c))

    def evaluate(self, f: np.ndarray, px, py) -> np.ndarray:
        """Spectral interpolant of ``f`` at arbitrary points inside the domain."""
        px, py = np.asarray(px, float), np.asarray(py, float)
        shape = np.broadcast(px, py).shape
        px, py = np.broadcast_to(px, shape).ravel(), np.broadcast_to(py, shape).ravel()
        rad = np.hypot(px, py)
        ang = np.arctan2(py, px)
        if self.kind == DISK:
            xi = np.clip(rad / self.b, -1.0, 1.0)
            kmax = 2 * self.n_r
        else:
            xi = np.clip((2.0 * rad - self.a - self.b) / (self.b - self.a), -1.0, 1.0)
            kmax = self.n_r
        Tk = np.cos(np.outer(np.arccos(xi), np.arange(kmax)))
        c = self.to_spectral(f)
        lead = c.shape[:-2]
        radial = np.empty(lead + (px.size, self.n_modes), dtype=complex)
        for p in (0, 1):
            sel = self.parity == p
            basis = Tk[:, p::2] if self.kind == DISK else Tk
            radial[..., sel] = np.einsum("pl,...ml->...pm", basis[:, : self.n_r], c[..., sel, :])
        wt = np.full(self.n_modes, 2.0)
        wt[0] = 1.0
        wt[-1] = 1.0
        phase = np.exp(1j * np.outer(ang, self.m)) * wt
        vals = np.real(np.einsum("...pm,pm->...p", radial, phase))
        return vals.reshape(lead + shape)


@lru_cache(maxsize=64)
def _grid(kind, a, b, n_theta, n_r) -> PolarGrid:
    return PolarGrid(kind, a, b, n_theta, n_r)


def resample(values: np.ndarray, src: DomainSpec, dst: DomainSpec) -> np.ndarray:
    """Spectral prolongation or truncation between two resolutions of one geometry.

    Coefficients missing on the destination are dropped; the source Nyquist mode
    is halved when it becomes an ordinary mode and the destination Nyquist mode
    is zeroed when truncating.
    """
    if not src.same_geometry(dst):
        raise DomainError("resampling needs a common geometry")
    gs, gd = src.grid, dst.grid
    if (gs.n_theta, gs.n_r) == (gd.n_theta, gd.n_r):
        return np.array(values, dtype=float, copy=True)
    c = gs.to_spectral(values)
    out = np.zeros(c.shape[:-2] + (gd.n_modes, gd.n_r), dtype=complex)
    mm = min(gs.n_modes, gd.n_modes)
    kk = min(gs.n_r, gd.n_r)
    out[..., :mm, :kk] = c[..., :mm, :kk]
    if gd.n_theta > gs.n_theta:
        out[..., gs.n_modes - 1, :] *= 0.5
    elif gd.n_theta < gs.n_theta:
        out[..., -1, :] = 0.0
    return gd.from_spectral(out)
