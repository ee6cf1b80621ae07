"""Summation of the time series, trajectory oracles and difference-quotient checks.

Positions come from integrating the velocity series term by term,
``X(alpha, t) = alpha + sum Vc[n] t^(n+1) / (n+1)``.  Summation is refused
beyond ``step_fraction * rho`` where ``rho`` is the fitted majorant radius.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import RadiusExceeded
from .fields import ScalarField, TensorField, VectorField, grad_array, sobolev_array
from .majorant import fit_majorant
from .recursion import TaylorState, series_sum

STEP_FRACTION = 0.5
QUANTITIES = ("v", "Y", "q", "X")
CSV_COLUMNS = ("label_x", "label_y", "t", "x", "y", "vx", "vy")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class TrajectorySet:
    """Positions and velocities per ``(label, time)``.

    ``positions`` and ``velocities`` have shape ``(n_labels, n_times, 2)``.
    """

    labels: np.ndarray
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, float).reshape(-1, 2)
        self.times = np.asarray(self.times, float).ravel()
        want = (self.labels.shape[0], self.times.size, 2)
        self.positions = np.asarray(self.positions, float).reshape(want)
        self.velocities = np.asarray(self.velocities, float).reshape(want)

    def max_penetration(self, domain) -> float:
        """Largest distance by which any position leaves the closed domain."""
        r = np.hypot(self.positions[..., 0], self.positions[..., 1])
        out = np.maximum(r - domain.r_outer, 0.0)
        if not domain.is_disk:
            out = np.maximum(out, domain.r_inner - r)
        return float(out.max()) if out.size else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i, (lx, ly) in enumerate(self.labels):
            for j, t in enumerate(self.times):
                x, y = self.positions[i, j]
                vx, vy = self.velocities[i, j]
                w.writerow([_fmt(v) for v in (lx, ly, t, x, y, vx, vy)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TrajectorySet":
        rows = list(csv.DictReader(io.StringIO(text)))
        labels, times = [], []
        for r in rows:
            lab = (float(r["label_x"]), float(r["label_y"]))
            if lab not in labels:
                labels.append(lab)
            if float(r["t"]) not in times:
                times.append(float(r["t"]))
        pos = np.zeros((len(labels), len(times), 2))
        vel = np.zeros_like(pos)
        for r in rows:
            i = labels.index((float(r["label_x"]), float(r["label_y"])))
            j = times.index(float(r["t"]))
            pos[i, j] = float(r["x"]), float(r["y"])
            vel[i, j] = float(r["vx"]), float(r["vy"])
        return cls(np.array(labels), np.array(times), pos, vel)


# -- summation --------------------------------------------------------------------

def allowed_time(state: TaylorState, rho: float | None = None,
                 step_fraction: float = STEP_FRACTION) -> float:
    """Largest ``|t|`` the series may be summed at."""
    if rho is None:
        rho = fit_majorant(state.ledger).rho
    return step_fraction * rho


def _check_time(state, t, rho, step_fraction):
    limit = allowed_time(state, rho, step_fraction)
    if abs(t) > limit:
        raise RadiusExceeded(f"|t| = {abs(t):.6g} exceeds {step_fraction} * rho = {limit:.6g}")


def _position_coeffs(state: TaylorState) -> list:
    g = state.domain.grid
    out = [np.stack([g.x, g.y])]
    out += [state.Vc[n].values / (n + 1) for n in range(len(state.Vc))]
    return out


def taylor_sum(state: TaylorState, t: float, quantity: str, labels=None,
               rho: float | None = None, step_fraction: float = STEP_FRACTION):
    """Sum the series of ``v``, ``Y``, ``q`` or ``X`` at time ``t``.

    Returns a field on the label grid, or with ``labels`` (shape ``(L, 2)``)
    the values at those labels, shape ``(L,)`` or ``(L, 2)`` / ``(L, 2, 2)``.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}")
    _check_time(state, t, rho, step_fraction)
    dom = state.domain
    if quantity == "v":
        vals, kind = series_sum(state.Vc, t), VectorField
    elif quantity == "Y":
        vals = np.eye(2)[:, :, None, None] + series_sum(state.Yc, t)
        kind = TensorField
    elif quantity == "q":
        vals, kind = series_sum(state.Qc, t), ScalarField
    else:
        vals, kind = series_sum(_position_coeffs(state), t), VectorField
    if labels is None:
        return kind(dom, vals)
    lab = np.asarray(labels, float).reshape(-1, 2)
    out = dom.grid.evaluate(vals, lab[:, 0], lab[:, 1])
    return np.moveaxis(out, -1, 0)


def trajectories(state: TaylorState, labels, times: Sequence[float], rho: float | None = None,
                 step_fraction: float = STEP_FRACTION) -> TrajectorySet:
    """Summed positions and Lagrangian velocities at every ``(label, time)``."""
    if rho is None:
        rho = fit_majorant(state.ledger).rho
    lab = np.asarray(labels, float).reshape(-1, 2)
    times = np.asarray(times, float).ravel()
    pos = np.empty((lab.shape[0], times.size, 2))
    vel = np.empty_like(pos)
    for j, t in enumerate(times):
        pos[:, j] = taylor_sum(state, t, "X", lab, rho, step_fraction)
        vel[:, j] = taylor_sum(state, t, "v", lab, rho, step_fraction)
    return TrajectorySet(lab, times, pos, vel)


def grad_X(state: TaylorState, t: float) -> np.ndarray:
    """Spectral label gradient of the summed flow map, ``[i, k] = d X^i / d alpha_k``."""
    return grad_array(state.domain, series_sum(_position_coeffs(state), t))


def inverse_consistency(state: TaylorState, t: float) -> float:
    """``max |Y(t) grad X(t) - I|`` per entry."""
    Y = np.eye(2)[:, :, None, None] + series_sum(state.Yc, t)
    prod = np.einsum("ij...,jk...->ik...", Y, grad_X(state, t))
    return float(np.max(np.abs(prod - np.eye(2)[:, :, None, None])))


# -- RK4 oracle ----------------------------------------------------------------------

def rk4_trajectories(velocity: Callable, labels, T: float, steps: int) -> TrajectorySet:
    """Classical RK4 for ``dX/dt = u(X)`` with a closed-form steady ``u(x, y)``."""
    lab = np.asarray(labels, float).reshape(-1, 2)
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be positive")
    h = float(T) / steps

    def f(p):
        ux, uy = velocity(p[:, 0], p[:, 1])
        return np.stack([np.broadcast_to(ux, p[:, 0].shape), np.broadcast_to(uy, p[:, 1].shape)],
                        axis=-1)

    times = h * np.arange(steps + 1)
    pos = np.empty((lab.shape[0], steps + 1, 2))
    vel = np.empty_like(pos)
    p = lab.copy()
    for j in range(steps + 1):
        pos[:, j] = p
        vel[:, j] = f(p)
        if j == steps:
            break
        k1 = vel[:, j]
        k2 = f(p + 0.5 * h * k1)
        k3 = f(p + 0.5 * h * k2)
        k4 = f(p + h * k3)
        p = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return TrajectorySet(lab, times, pos, vel)


# -- difference quotients ---------------------------------------------------------------

def derivative_series(state: TaylorState, n: int, t: float) -> np.ndarray:
    """``d^n/dt^n grad v`` at time ``t`` from the summed series."""
    G = state.Gc
    if n >= len(G):
        return np.zeros_like(G[0].values)
    coeffs = [math.perm(k, n) * G[k].values for k in range(n, len(G))]
    return series_sum(coeffs, t)


def _norm(state, values):
    dom = state.domain
    return sobolev_array(dom, values, dom.sobolev_r)


def fd_consistency(state: TaylorState, h: float, n: int, scheme: str = "forward",
                   rho: float | None = None, step_fraction: float = STEP_FRACTION) -> float:
    """``H^r`` distance between a difference quotient of ``d^n grad v`` at 0 and ``d^(n+1) grad v``.

    ``scheme`` is ``"forward"`` (first order) or ``"central"`` (second order).
    """
    if n + 1 >= len(state.Gc):
        raise ValueError(f"order {n + 1} not computed")
    _check_time(state, h, rho, step_fraction)
    if scheme == "forward":
        dq = (derivative_series(state, n, h) - derivative_series(state, n, 0.0)) / h
    elif scheme == "central":
        dq = (derivative_series(state, n, h) - derivative_series(state, n, -h)) / (2 * h)
    else:
        raise ValueError("scheme must be 'forward' or 'central'")
    exact = derivative_series(state, n + 1, 0.0)
    return _norm(state, dq - exact)


def mean_value_slack(state: TaylorState, h: float, n: int, samples: int = 33,
                     rho: float | None = None, step_fraction: float = STEP_FRACTION) -> float:
    """``sup_[0,h] ||d^(n+1) grad v|| - ||forward quotient||``; nonnegative when the bound holds."""
    _check_time(state, h, rho, step_fraction)
    dq = (derivative_series(state, n, h) - derivative_series(state, n, 0.0)) / h
    sup = max(_norm(state, derivative_series(state, n + 1, s))
              for s in np.linspace(0.0, h, samples))
    return sup - _norm(state, dq)
