"""Poisson (Dirichlet / Neumann) and div-curl solvers on the disk and annulus.

Each Fourier mode gives a radial boundary-value problem

    phi'' + phi'/r - m^2 phi / r^2 = f_m(r)

collocated at the Chebyshev points, with the boundary rows replaced by
Dirichlet conditions.  LU factors are built once per grid and kept.  Neumann
problems are reduced to a homogeneous Dirichlet solve plus a harmonic
correction written in closed form per mode (``r^m`` on the disk, ``r^m`` and
``r^-m`` or ``log r`` on the annulus); the result is shifted to zero mean
under the grid quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .domain import DomainSpec
from .errors import (DomainError, IncompatibleFluxData, IncompatibleNeumannData,
                     MissingCirculation)
from .fields import ScalarField, VectorField, grad_array, l2_array
from .tolerances import DEFAULTS

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


class _RadialSolver:
    """Factorized per-mode radial Dirichlet operators for one grid."""

    def __init__(self, domain: DomainSpec):
        g = self.grid = domain.grid
        self.domain = domain
        rows = g.boundary_rows
        inv_r = 1.0 / g.r
        self.lu = []
        for m in g.m:
            p = int(g.parity[m]) if domain.is_disk else 0
            L = g.Drr[p] + inv_r[:, None] * g.Dr[p] - np.diag((m * inv_r) ** 2)
            L[rows] = 0.0
            L[rows, rows] = 1.0
            self.lu.append(sla.lu_factor(L))

    def _solve_modes(self, fh: np.ndarray, gh: np.ndarray) -> np.ndarray:
        out = np.empty_like(fh)
        rows = self.grid.boundary_rows
        for m, lu in enumerate(self.lu):
            rhs = fh[m].copy()
            rhs[rows] = gh[:, m]
            sol = sla.lu_solve(lu, np.column_stack([rhs.real, rhs.imag]))
            out[m] = sol[:, 0] + 1j * sol[:, 1]
        return out

    def dirichlet(self, f: np.ndarray, g_ring: np.ndarray) -> np.ndarray:
        grid = self.grid
        gh = np.fft.rfft(g_ring, axis=-1, norm="forward")
        return grid.inverse_fourier(self._solve_modes(grid.fourier(f), gh))

    def neumann(self, f: np.ndarray, g_ring: np.ndarray) -> np.ndarray:
        """Zero-boundary Dirichlet solve plus an exact harmonic correction.

        Collocating the Neumann rows directly loses several digits in the
        higher derivatives of the solution; the harmonic part is instead
        written in closed form mode by mode, which keeps it exact.
        """
        grid = self.grid
        u = self.dirichlet(f, np.zeros_like(g_ring))
        du = grid.boundary_trace(grid.d_r(u)) * grid.normal_sign[:, None]
        gh = np.fft.rfft(g_ring - du, axis=-1, norm="forward")
        r = grid.r
        hh = np.zeros((grid.n_modes, grid.n_r), dtype=complex)
        if self.domain.is_disk:
            R = grid.b
            for m in grid.m[1:]:
                hh[m] = gh[0, m] * R / m * (r / R) ** m
        else:
            a, b = grid.a, grid.b
            for m in grid.m[1:]:
                q = (a / b) ** m
                A = np.array([[m / b, -m * q / b], [-m * q / a, m / a]])
                cA, cB = np.linalg.solve(A, gh[:, m])
                hh[m] = cA * (r / b) ** m + cB * (a / r) ** m
            # m = 0: C log r, fitted to both rings in the least-squares sense
            C = 0.5 * (b * gh[0, 0] - a * gh[1, 0])
            hh[0] = C * np.log(r)
        q = u + grid.inverse_fourier(hh)
        w = grid.integrate(np.ones_like(q))
        return q - grid.integrate(q) / w

    def solve(self, f: np.ndarray, g_ring: np.ndarray, bc: str) -> np.ndarray:
        return (self.dirichlet if bc == DIRICHLET else self.neumann)(f, g_ring)


def _solver(domain: DomainSpec) -> _RadialSolver:
    # the Sobolev index does not affect the operator
    return _cached_solver(DomainSpec(domain.kind, domain.r_inner, domain.r_outer,
                                     domain.n_theta, domain.n_r))


@lru_cache(maxsize=32)
def _cached_solver(domain: DomainSpec) -> _RadialSolver:
    return _RadialSolver(domain)


def _ring_data(domain: DomainSpec, g) -> np.ndarray:
    arr = np.asarray(0.0 if g is None else g, dtype=float)
    shape = (domain.n_boundaries, domain.n_theta)
    if arr.ndim == 1 and arr.shape[0] == domain.n_boundaries and arr.shape != (domain.n_theta,):
        arr = arr[:, None]
    try:
        return np.broadcast_to(arr, shape).astype(float)
    except ValueError:
        raise DomainError(f"boundary data of shape {arr.shape} does not fit {shape}") from None


def boundary_l2(domain: DomainSpec, g: np.ndarray) -> float:
    return float(np.sqrt(max(domain.grid.boundary_integral(g * g), 0.0)))


def neumann_defect(domain: DomainSpec, f: np.ndarray, g: np.ndarray) -> tuple[float, float]:
    """Absolute and relative compatibility defect ``int f - oint g``."""
    grid = domain.grid
    d = float(grid.integrate(f) - grid.boundary_integral(g))
    scale = l2_array(domain, f) + boundary_l2(domain, g) + 1.0
    return d, abs(d) / scale


# -- array-level solvers ------------------------------------------------------

def poisson_dirichlet_array(domain: DomainSpec, f: np.ndarray, g=None) -> np.ndarray:
    return _solver(domain).solve(np.asarray(f, float), _ring_data(domain, g), DIRICHLET)


def poisson_neumann_array(domain: DomainSpec, f: np.ndarray, g=None, tol: float | None = None,
                          error=IncompatibleNeumannData) -> tuple[np.ndarray, float]:
    """Zero-mean Neumann solve; returns the solution and the relative defect."""
    tol = DEFAULTS["neumann_compat"] if tol is None else tol
    f = np.asarray(f, float)
    g = _ring_data(domain, g)
    _, rel = neumann_defect(domain, f, g)
    if not rel <= tol:
        raise error(f"compatibility defect {rel:.3e} exceeds {tol:.1e}")
    return _solver(domain).solve(f, g, NEUMANN), rel


def perp_grad_array(domain: DomainSpec, psi: np.ndarray) -> np.ndarray:
    d = grad_array(domain, psi)
    return np.stack([-d[1], d[0]])


def harmonic_array(domain: DomainSpec) -> np.ndarray:
    g = domain.grid
    r2 = g.rr**2
    return np.stack([-g.y, g.x]) / (2.0 * np.pi * r2)


def outer_circulation(domain: DomainSpec, u: np.ndarray) -> float:
    """Counter-clockwise loop integral of ``u`` along the outer ring."""
    g = domain.grid
    row = g.boundary_rows[0]
    c, s = np.cos(g.theta), np.sin(g.theta)
    ut = -u[0][:, row] * s + u[1][:, row] * c
    return float(np.sum(ut) * 2.0 * np.pi * g.boundary_radii[0] / g.n_theta)


def div_curl_array(domain: DomainSpec, omega, div, flux=None, circulation=None,
                   tol: float | None = None) -> np.ndarray:
    """``u = perp grad psi + grad phi + beta h`` with the prescribed data."""
    tol = DEFAULTS["flux_compat"] if tol is None else tol
    if not domain.is_disk and circulation is None:
        raise MissingCirculation("the annulus needs a circulation value")
    phi, _ = poisson_neumann_array(domain, div, flux, tol=tol, error=IncompatibleFluxData)
    psi = poisson_dirichlet_array(domain, omega, 0.0)
    u = perp_grad_array(domain, psi) + grad_array(domain, phi)
    if not domain.is_disk:
        g = domain.grid
        row = g.boundary_rows[0]
        d_r = g.d_r(psi)[:, row]
        gamma_psi = float(np.sum(d_r) * 2.0 * np.pi * g.boundary_radii[0] / g.n_theta)
        u = u + (float(circulation) - gamma_psi) * harmonic_array(domain)
    return u


# -- field API ----------------------------------------------------------------

@dataclass(frozen=True)
class DivCurlData:
    """Prescribed curl, divergence, normal trace and (annulus) circulation.

    ``normal_flux`` holds one ring of ``n_theta`` samples per boundary
    component (outer ring first); circulation is measured counter-clockwise
    along the outer ring.
    """

    omega: ScalarField
    div: ScalarField
    normal_flux: np.ndarray | float = 0.0
    circulation: Optional[float] = None


def solve_poisson_dirichlet(f: ScalarField, g=None) -> ScalarField:
    """``Delta phi = f`` in the domain, ``phi = g`` on each ring."""
    return ScalarField(f.domain, poisson_dirichlet_array(f.domain, f.values, g))


def solve_poisson_neumann(f: ScalarField, g=None, tol: float | None = None) -> ScalarField:
    """Zero-mean ``q`` with ``Delta q = f`` and outward ``dq/dnu = g``.

    Raises IncompatibleNeumannData if ``int f`` and ``oint g`` disagree beyond
    ``tol * (||f|| + ||g|| + 1)``.
    """
    q, _ = poisson_neumann_array(f.domain, f.values, g, tol=tol)
    return ScalarField(f.domain, q)


def solve_div_curl(data: DivCurlData, domain: DomainSpec | None = None) -> VectorField:
    domain = data.omega.domain if domain is None else domain
    if data.omega.domain != domain or data.div.domain != domain:
        raise DomainError("data fields live on a different domain")
    u = div_curl_array(domain, data.omega.values, data.div.values, data.normal_flux,
                       data.circulation)
    return VectorField(domain, u)


def harmonic_basis(domain: DomainSpec) -> list[VectorField]:
    """Curl-free, divergence-free, zero-flux fields; unit circulation."""
    if domain.is_disk:
        return []
    return [VectorField(domain, harmonic_array(domain))]
