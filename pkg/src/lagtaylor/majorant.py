"""Exact combinatorics of the factorial majorants and fitting of their constants.

The induction bounds every order-``n`` time derivative by a multiple of
``K^n M^(n+a) (n-3)!`` with the convention ``k! = 1`` for negative ``k``.  Four
families are tracked, one per ledger column:

==========  =====================================  ====
column      bound                                  a
==========  =====================================  ====
hr_Y        ``eps0 K^n M^n (n-3)!``                0
l2_gradv    ``2 K^n M^(n+1) (n-3)!``               1
hr_gradv    ``C1 K^n M^(n+1) (n-3)!``              1
h2_q        ``C2 K^n M^(n+2) (n-3)!``              2
==========  =====================================  ====

Because every family is monotone in ``K``, the smallest admissible ``K`` is the
largest per-order root ``(value / (A M^(n+a) (n-3)!))^(1/n)``; it is computed
in closed form rather than by bisection.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import EmptyLedger, InsufficientData
from .recursion import NormLedger

RADIUS_CAP = 1e6
# relative head-room on K so the fitted bounds survive rounding when re-checked
K_SLACK = 1e-12


def neg_factorial(k: int) -> int:
    """``k!`` for ``k >= 0`` and 1 for negative ``k``."""
    k = int(k)
    return math.factorial(k) if k >= 0 else 1


def _log_neg_factorial(k: int) -> float:
    return math.lgamma(k + 1) if k >= 0 else 0.0


@lru_cache(maxsize=None)
def _a(k: int) -> Fraction:
    return Fraction(neg_factorial(k - 3), math.factorial(k))


@lru_cache(maxsize=None)
def _conv2(n: int) -> Fraction:
    return sum((_a(p) * _a(n - p) for p in range(n + 1)), Fraction(0))


@lru_cache(maxsize=None)
def _conv3(n: int) -> Fraction:
    return sum((_conv2(m) * _a(n - m) for m in range(n + 1)), Fraction(0))


def combinatorial_sums(n: int) -> tuple[Fraction, Fraction]:
    """Exact ``(triple_sum, double_sum)`` at order ``n >= 1``.

    With ``a_k = (k-3)!/k!`` the triple sum runs over ``1 <= p+q <= n`` minus
    the corners ``(0, n)`` and ``(n, 0)``, the double sum over ``1 <= p <= n-1``.
    Both are full convolutions of ``a`` minus the excluded terms (``a_0 = 1``).
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    an = _a(n)
    return _conv3(n) - 3 * an, _conv2(n) - 2 * an


def combinatorial_table(max_n: int) -> list[tuple[int, Fraction, Fraction]]:
    return [(n, *combinatorial_sums(n)) for n in range(1, int(max_n) + 1)]


def n3_maxima(max_n: int = 200) -> tuple[Fraction, Fraction]:
    """``max_n n^3 * triple_sum`` and ``max_n n^3 * double_sum`` for ``n <= max_n``."""
    t = d = Fraction(0)
    for n, ts, ds in combinatorial_table(max_n):
        t = max(t, n**3 * ts)
        d = max(d, n**3 * ds)
    return t, d


# -- fitting --------------------------------------------------------------------

@dataclass(frozen=True)
class MajorantFit:
    eps0: float
    K: float
    M: float
    C1: float
    C2: float
    rho: float
    orders_used: int

    def report(self, max_n: int = 200) -> dict:
        """JSON-ready record; infinities are written as the string ``"inf"``."""
        t, d = n3_maxima(max_n)
        rec = asdict(self)
        rec["max_n3_triple"] = float(t)
        rec["max_n3_double"] = float(d)
        return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
                for k, v in rec.items()}

    def to_json(self, max_n: int = 200) -> str:
        return json.dumps(self.report(max_n), indent=2, sort_keys=True)


# (ledger column, exponent offset a)
_FAMILIES = (("hr_Y", 0), ("l2_gradv", 1), ("hr_gradv", 1), ("h2_q", 2))


def _log_root(value: float, log_amp: float, n: int, a: int, log_M: float) -> float:
    """``log K`` needed for one ledger entry; ``-inf`` when the entry is zero."""
    if value <= 0.0:
        return -math.inf
    return (math.log(value) - log_amp - (n + a) * log_M - _log_neg_factorial(n - 3)) / n


def _constants(arr: np.ndarray) -> tuple[float, float, float]:
    hr0, q0 = arr[0, 0], arr[0, 3]
    M = max(1.0, float(hr0))
    C1 = max(2.0, float(hr0) / M)
    C2 = max(2.0, float(q0) / M**2)
    return M, C1, C2


def default_eps0(ledger: NormLedger) -> float:
    """Smallest ``eps0`` for which the ``Y`` family does not raise ``K``.

    ``K`` is first fitted to the three velocity and pressure families; ``eps0``
    is then the largest ratio ``||d_t^n Y||_{H^r} / (K^n M^n (n-3)!)`` over
    ``n >= 1``.  Zero when ``Y`` never moves.
    """
    arr = _rows(ledger)
    M, C1, C2 = _constants(arr)
    logK = _fit_logK(arr, M, {"l2_gradv": 2.0, "hr_gradv": C1, "h2_q": C2})
    if logK == -math.inf:
        return 0.0 if not np.any(arr[1:, 1] > 0) else 1.0
    best = -math.inf
    for n in range(1, arr.shape[0]):
        v = arr[n, 1]
        if v > 0:
            best = max(best, math.log(v) - n * (logK + math.log(M)) - _log_neg_factorial(n - 3))
    return math.exp(best) if best > -math.inf else 0.0


def _rows(ledger) -> np.ndarray:
    arr = ledger.as_array() if isinstance(ledger, NormLedger) else np.asarray(ledger, float)
    if arr.size == 0:
        raise EmptyLedger("ledger has no rows")
    return arr.reshape(-1, 4)


def _fit_logK(arr: np.ndarray, M: float, amps: dict) -> float:
    cols = {name: i for i, name in enumerate(("hr_gradv", "hr_Y", "l2_gradv", "h2_q"))}
    log_M = math.log(M)
    logK = -math.inf
    for name, a in _FAMILIES:
        if name not in amps:
            continue
        amp = amps[name]
        for n in range(1, arr.shape[0]):
            v = arr[n, cols[name]]
            if v <= 0.0:
                continue
            if amp <= 0.0:
                return math.inf
            logK = max(logK, _log_root(v, math.log(amp), n, a, log_M))
    return logK


def fit_majorant(ledger: NormLedger, eps0: float | None = None) -> MajorantFit:
    """Fit ``(eps0, K, M, C1, C2)`` so all four families hold at every order.

    ``M = max(1, ||grad v0||_{H^r})``; ``C1``, ``C2`` come from the order-0 rows
    (at least 2, matching the ``L^2`` family); ``K`` is the smallest value that
    works, times ``1 + 1e-12``.  ``rho = 1 / (K M)``, infinite when no order
    above zero carries any signal.
    """
    arr = _rows(ledger)
    M, C1, C2 = _constants(arr)
    if eps0 is None:
        eps0 = default_eps0(arr)
    eps0 = float(eps0)
    if eps0 < 0:
        raise ValueError("eps0 must be nonnegative")
    logK = _fit_logK(arr, M, {"hr_Y": eps0, "l2_gradv": 2.0, "hr_gradv": C1, "h2_q": C2})
    if logK == math.inf:
        raise ValueError("eps0 = 0 cannot bound a moving Y")
    if logK == -math.inf:
        K, rho = 0.0, math.inf
    else:
        K = math.exp(logK) * (1.0 + K_SLACK)
        rho = 1.0 / (K * M)
    return MajorantFit(eps0=eps0, K=K, M=M, C1=C1, C2=C2, rho=rho,
                       orders_used=int(arr.shape[0]))


def bound_violations(ledger: NormLedger, fit: MajorantFit) -> list[tuple[int, str, float, float]]:
    """Entries exceeding their bound, as ``(n, column, value, bound)``."""
    arr = _rows(ledger)
    amps = {"hr_Y": fit.eps0, "l2_gradv": 2.0, "hr_gradv": fit.C1, "h2_q": fit.C2}
    cols = {"hr_gradv": 0, "hr_Y": 1, "l2_gradv": 2, "h2_q": 3}
    out = []
    for n in range(arr.shape[0]):
        for name, a in _FAMILIES:
            v = float(arr[n, cols[name]])
            if v == 0.0:
                continue
            bound = amps[name] * fit.K**n * fit.M ** (n + a) * neg_factorial(n - 3)
            if not v <= bound:
                out.append((n, name, v, bound))
    return out


def verify_fit(ledger: NormLedger, fit: MajorantFit) -> bool:
    return not bound_violations(ledger, fit)


def radius_estimate(ledger: NormLedger) -> float:
    """Root-test radius ``1 / max c_n^(1/n)`` over the last half of the orders.

    ``c_n`` is the scaled ``H^r`` norm of the velocity gradient coefficient
    (``hr_gradv[n] / n!``).  Needs at least six nonzero orders; returns
    ``inf`` when the estimate exceeds ``1e6`` (entire series).
    """
    arr = _rows(ledger)
    hr = arr[:, 0]
    nz = [n for n in range(1, hr.size) if hr[n] > 0]
    if len(nz) < 6:
        raise InsufficientData(f"need 6 nonzero orders, have {len(nz)}")
    last = nz[len(nz) // 2:]
    roots = [(math.log(hr[n]) - math.lgamma(n + 1)) / n for n in last]
    est = math.exp(-max(roots))
    return math.inf if est > RADIUS_CAP else est
