"""Initial velocity presets and their closed-form steady velocities.

Every preset returns a velocity tangent to the boundary together with its
vorticity, both evaluated from closed-form expressions on the grid.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import polynomial as P

from .domain import DomainSpec
from .errors import PresetDomainMismatch, UnknownPreset
from .fields import ScalarField, VectorField

PRESETS = ("zero", "rigid-rotation", "circular-shear", "random-smooth")
STEADY = ("zero", "rigid-rotation", "circular-shear")

_DEFAULTS = {
    "omega": 1.0,
    "shear_coeffs": (0.0, 0.0, 1.0),
    "seed": 0,
    "decay": 0.5,
    "degree": 2,
    "amplitude": 1.0,
}


def _params(params):
    out = dict(_DEFAULTS)
    for k, v in (params or {}).items():
        if v is not None:
            out[k] = v
    return out


def _check_name(name):
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}")


def _shear_profile(coeffs):
    c = np.asarray(coeffs, dtype=float)
    k = np.arange(c.size)

    def f_over_r(r):
        return sum(ck * r ** (kk - 1.0) for kk, ck in zip(k, c) if ck != 0.0)

    def vort(r):
        return sum(ck * (kk + 1.0) * r ** (kk - 1.0) for kk, ck in zip(k, c) if ck != 0.0)

    return f_over_r, vort


def steady_velocity(name: str, params: Mapping | None = None, domain: DomainSpec | None = None
                    ) -> Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """Closed-form ``u(x, y)`` for presets that are steady Euler flows.

    Rotation and circular shear are steady because the pressure balances the
    centripetal term exactly.
    """
    _check_name(name)
    if name not in STEADY:
        raise UnknownPreset(f"preset {name!r} has no closed-form steady velocity")
    p = _params(params)
    amp = float(p["amplitude"])
    if name == "zero":
        return lambda x, y: (np.zeros_like(np.asarray(x, float)), np.zeros_like(np.asarray(y, float)))
    if name == "rigid-rotation":
        om = amp * float(p["omega"])
        return lambda x, y: (-om * np.asarray(y, float), om * np.asarray(x, float))
    if domain is not None and domain.is_disk and float(np.asarray(p["shear_coeffs"])[0]) != 0.0:
        raise PresetDomainMismatch("circular-shear on the disk needs f(0) = 0")
    g, _ = _shear_profile(p["shear_coeffs"])

    def u(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        w = amp * g(np.hypot(x, y))
        return -w * y, w * x

    return u


def _bubble(domain: DomainSpec):
    """Coefficients (in x, y) of a polynomial vanishing on every ring, peak value 1."""
    # r^2 as a 2D power-series coefficient array
    r2 = np.zeros((3, 3))
    r2[2, 0] = r2[0, 2] = 1.0
    one = np.zeros((3, 3))
    one[0, 0] = 1.0
    if domain.is_disk:
        return (one - r2 / domain.r_outer**2)
    a2, b2 = domain.r_inner**2, domain.r_outer**2
    peak = (0.5 * (b2 - a2)) ** 2
    return _polymul2d(r2 - a2 * one, b2 * one - r2) / peak


def _polymul2d(a, b):
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i, j in zip(*np.nonzero(a)):
        out[i:i + b.shape[0], j:j + b.shape[1]] += a[i, j] * b
    return out


def _stream_coeffs(domain: DomainSpec, seed: int, decay: float, degree: int, amp: float):
    rng = np.random.default_rng(seed)
    c = np.zeros((degree + 1, degree + 1))
    R = domain.r_outer
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            # polynomial in x / R, y / R so the field stays O(1) on large domains
            c[i, j] = rng.standard_normal() * (decay / R) ** (i + j)
    return amp * _polymul2d(_bubble(domain), c)


def make_preset_field(name: str, params: Mapping | None, domain: DomainSpec
                      ) -> tuple[VectorField, ScalarField]:
    """Initial velocity ``v0`` and vorticity ``omega0`` for a named preset.

    Parameters
    ----------
    name : {"zero", "rigid-rotation", "circular-shear", "random-smooth"}
    params : mapping
        ``omega`` (rotation rate), ``shear_coeffs`` (``f(r) = sum c_k r^k``),
        ``seed``, ``decay``, ``degree`` (random stream polynomial), and a global
        ``amplitude`` multiplying the velocity.
    """
    _check_name(name)
    p = _params(params)
    g = domain.grid
    x, y = g.x, g.y
    amp = float(p["amplitude"])
    if name == "zero":
        v = np.zeros((2,) + domain.shape)
        w = np.zeros(domain.shape)
    elif name == "rigid-rotation":
        om = amp * float(p["omega"])
        v = np.stack([-om * y, om * x])
        w = np.full(domain.shape, 2.0 * om)
    elif name == "circular-shear":
        coeffs = np.atleast_1d(np.asarray(p["shear_coeffs"], dtype=float))
        if domain.is_disk and coeffs[0] != 0.0:
            raise PresetDomainMismatch("circular-shear on the disk needs f(0) = 0")
        f_over_r, vort = _shear_profile(coeffs)
        fr = amp * f_over_r(g.rr) * np.ones(domain.shape)
        v = np.stack([-fr * y, fr * x])
        w = amp * vort(g.rr) * np.ones(domain.shape)
    else:
        c = _stream_coeffs(domain, int(p["seed"]), float(p["decay"]), int(p["degree"]), amp)
        cx, cy = P.polyder(c, axis=0), P.polyder(c, axis=1)
        lap = np.zeros_like(c)
        cxx, cyy = P.polyder(c, 2, axis=0), P.polyder(c, 2, axis=1)
        lap[: cxx.shape[0], : cxx.shape[1]] += cxx
        lap[: cyy.shape[0], : cyy.shape[1]] += cyy
        v = np.stack([-P.polyval2d(x, y, cy), P.polyval2d(x, y, cx)])
        w = P.polyval2d(x, y, lap)
    return VectorField(domain, v), ScalarField(domain, w)
