"""Default tolerances, in one place.

Every threshold used by the verification suite, the CLI ``verify`` command and
the test-suite is read from :data:`DEFAULTS`.  Overrides go through
:func:`resolve`, which rejects unknown names.

========================  ========  ==================================================
name                      value     meaning
========================  ========  ==================================================
roundtrip                 1e-12     values -> spectral -> values, relative
derivative_poly           1e-10     Cartesian partials of resolvable polynomials
neumann_compat            1e-8      relative Neumann compatibility defect before raising
flux_compat               1e-8      relative div/flux compatibility defect before raising
poisson_residual          1e-10     L2 residual of Poisson solves
divcurl_residual          1e-9      L2 residual of div-curl solves
zero_mean                 1e-12     mean of Neumann solutions
boundary_flux             1e-9      per-order boundary flux of the velocity coefficients
gradient_consistency      1e-9      ||Gc[n] - grad Vc[n]||_L2
two_path                  1e-8      relative H^r gap between the two recursion paths
pressure_compat           1e-9      per-order Neumann compatibility defect (relative)
invariance                1e-8      summed Cauchy-invariance residual
divergence                1e-8      summed Lagrangian divergence residual
piola                     1e-8      summed Piola residual
det_one                   1e-7      |det(grad X) - 1|
refinement                1e-8      relative ledger change on grid doubling
trajectory                1e-6      Taylor vs RK4 positions
closed_form               1e-10     recursion vs closed-form rigid rotation
riccati                   1e-11     matrix Riccati recursion vs series inversion
curl3d                    1e-13     direct vs expanded 3D invariance assembly
scaling                   0.05      relative Euler-scaling covariance of rho
========================  ========  ==================================================
"""

from __future__ import annotations

from types import MappingProxyType
from typing import Mapping

from .errors import ConfigError

DEFAULTS: Mapping[str, float] = MappingProxyType({
    "roundtrip": 1e-12,
    "derivative_poly": 1e-10,
    "neumann_compat": 1e-8,
    "flux_compat": 1e-8,
    "poisson_residual": 1e-10,
    "divcurl_residual": 1e-9,
    "zero_mean": 1e-12,
    "boundary_flux": 1e-9,
    "gradient_consistency": 1e-9,
    "two_path": 1e-8,
    "pressure_compat": 1e-9,
    "invariance": 1e-8,
    "divergence": 1e-8,
    "piola": 1e-8,
    "det_one": 1e-7,
    "refinement": 1e-8,
    "trajectory": 1e-6,
    "closed_form": 1e-10,
    "riccati": 1e-11,
    "curl3d": 1e-13,
    "scaling": 0.05,
})


def resolve(overrides: Mapping[str, float] | None = None) -> dict[str, float]:
    """Return the default table with ``overrides`` applied."""
    table = dict(DEFAULTS)
    for key, value in (overrides or {}).items():
        if key not in table:
            raise ConfigError(f"unknown tolerance {key!r}")
        table[key] = float(value)
    return table
