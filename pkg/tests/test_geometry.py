"""Domains, transforms, derivatives, norms and presets."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P

from conftest import poly_field
from lagtaylor.domain import DomainSpec, resample
from lagtaylor.errors import (DomainError, PresetDomainMismatch, SnapshotFormatError,
                              SobolevOrderError, UnknownPreset)
from lagtaylor.fields import (Sample3D, ScalarField, TensorField, VectorField, curl, divergence,
                              epsilon_contract_2d, gradient, multiply, normal_trace,
                              partial_derivative, sobolev_norm)
from lagtaylor.presets import PRESETS, make_preset_field, steady_velocity
from lagtaylor.snapshot import field_from_bytes, field_to_bytes, load_field, save_field

DOMAINS = [DomainSpec.disk(1.0, 32, 24), DomainSpec.annulus(1.0, 2.0, 32, 24),
           DomainSpec.disk(1.5, 24, 16)]


def random_poly(rng, degree):
    c = np.zeros((degree + 1, degree + 1))
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            c[i, j] = rng.standard_normal()
    return c


# -- DomainSpec ---------------------------------------------------------------------

@pytest.mark.parametrize("args", [
    ("disk", 0.5, 1.0, 32, 24, 2),      # disk with a hole
    ("annulus", 0.0, 1.0, 32, 24, 2),   # annulus without one
    ("annulus", 2.0, 1.0, 32, 24, 2),   # radii out of order
    ("disk", 0.0, 1.0, 31, 24, 2),      # odd n_theta
    ("disk", 0.0, 1.0, 32, 3, 2),       # too few radial points
    ("disk", 0.0, 1.0, 32, 24, 1),      # r <= d/2
    ("square", 0.0, 1.0, 32, 24, 2),
])
def test_domain_rejects_invalid(args):
    with pytest.raises(DomainError):
        DomainSpec(*args)


def test_domain_helpers():
    d = DomainSpec.disk(1.0, 32, 24)
    assert d.n_boundaries == 1 and d.shape == (32, 24)
    assert d.refined().shape == (64, 48)
    assert d.padded().shape == (48, 36)
    assert DomainSpec.annulus().n_boundaries == 2


# -- transforms and derivatives ---------------------------------------------------

@pytest.mark.parametrize("dom", DOMAINS, ids=["disk", "annulus", "disk-r1.5"])
@given(seed=st.integers(0, 2**31 - 1), degree=st.integers(0, 8))
def test_spectral_roundtrip(dom, seed, degree, tol):
    f = poly_field(dom, random_poly(np.random.default_rng(seed), degree))
    g = dom.grid
    back = g.from_spectral(g.to_spectral(f))
    assert np.max(np.abs(back - f)) <= tol["roundtrip"] * np.max(np.abs(f))


@pytest.mark.parametrize("dom", DOMAINS, ids=["disk", "annulus", "disk-r1.5"])
@given(seed=st.integers(0, 2**31 - 1), degree=st.integers(1, 6))
def test_derivatives_of_polynomials(dom, seed, degree, tol):
    c = random_poly(np.random.default_rng(seed), degree)
    f = ScalarField(dom, poly_field(dom, c))
    for axis, k in (("x", 0), ("y", 1)):
        exact = poly_field(dom, P.polyder(c, axis=k))
        got = partial_derivative(f, axis).values
        assert np.max(np.abs(got - exact)) <= tol["derivative_poly"]


def test_derivative_examples():
    d = DomainSpec.disk(1.0, 32, 24)
    g = d.grid
    assert np.allclose(partial_derivative(ScalarField(d, g.x**2), "x").values, 2 * g.x,
                       atol=1e-12)
    assert np.max(np.abs(partial_derivative(ScalarField(d, 3.7), "x").values)) <= 1e-13
    d32 = DomainSpec.disk(1.0, 32, 32)
    g = d32.grid
    dy = partial_derivative(ScalarField(d32, g.x * g.y), "y").values
    assert np.max(np.abs(dy - g.x)) <= 1e-12
    with pytest.raises(ValueError):
        partial_derivative(ScalarField(d32, g.x), "z")


def test_evaluate_matches_closed_form():
    rng = np.random.default_rng(4)
    for dom in DOMAINS[:2]:
        c = random_poly(rng, 5)
        f = poly_field(dom, c)
        rad = dom.r_inner + (dom.r_outer - dom.r_inner) * rng.random(50)
        ang = 2 * np.pi * rng.random(50)
        px, py = rad * np.cos(ang), rad * np.sin(ang)
        got = dom.grid.evaluate(f, px, py)
        assert np.max(np.abs(got - P.polyval2d(px, py, c))) <= 1e-11


def test_resample_preserves_resolved_fields():
    d = DomainSpec.annulus(1.0, 2.0, 16, 12)
    fine = d.refined()
    c = random_poly(np.random.default_rng(0), 4)
    up = resample(poly_field(d, c), d, fine)
    assert np.max(np.abs(up - poly_field(fine, c))) <= 1e-12
    down = resample(up, fine, d)
    assert np.max(np.abs(down - poly_field(d, c))) <= 1e-12
    with pytest.raises(DomainError):
        resample(up, fine, DomainSpec.disk(1.0, 16, 12))


def test_multiply_is_dealiased():
    d = DomainSpec.disk(1.0, 32, 24)
    rng = np.random.default_rng(1)
    a, b = random_poly(rng, 6), random_poly(rng, 6)
    fa, fb = poly_field(d, a), poly_field(d, b)
    prod = multiply(ScalarField(d, fa), ScalarField(d, fb))
    # degree 12 is resolved by the grid, so the pointwise product is exact
    assert np.max(np.abs(prod.values - fa * fb)) <= 1e-11 * np.max(np.abs(fa * fb))


# -- norms -----------------------------------------------------------------------

@pytest.mark.parametrize("expr, expected", [
    (lambda x, y: np.ones_like(x), math.sqrt(math.pi)),
    (lambda x, y: x, math.sqrt(5 * math.pi / 4)),
    (lambda x, y: x**2 + y**2, math.sqrt(31 * math.pi / 3)),
])
def test_sobolev_norm_examples(expr, expected):
    d = DomainSpec.disk(1.0, 32, 24)
    g = d.grid
    assert sobolev_norm(ScalarField(d, expr(g.x, g.y)), 2) == pytest.approx(expected, rel=1e-12)


def test_quadrature_exact_on_polynomials():
    # int_annulus r^2 = pi (b^4 - a^4) / 2
    d = DomainSpec.annulus(1.0, 2.0, 16, 12)
    g = d.grid
    assert g.integrate(g.rr**2) == pytest.approx(7.5 * math.pi, rel=1e-13)
    assert g.boundary_integral(np.ones((2, 16))) == pytest.approx(6 * math.pi, rel=1e-14)


def test_sobolev_order_limits():
    d = DomainSpec.disk(1.0, 16, 12)
    f = ScalarField(d, d.grid.x)
    with pytest.raises(SobolevOrderError):
        sobolev_norm(f, 3)
    with pytest.raises(SobolevOrderError):
        sobolev_norm(f, -1)


@given(seed=st.integers(0, 2**31 - 1), degree=st.integers(0, 7))
def test_norm_monotone_in_r(seed, degree):
    d = DomainSpec.annulus(1.0, 2.0, 24, 16, sobolev_r=3)
    f = ScalarField(d, poly_field(d, random_poly(np.random.default_rng(seed), degree)))
    norms = [sobolev_norm(f, r) for r in range(4)]
    assert all(a <= b * (1 + 1e-14) for a, b in zip(norms, norms[1:]))


def test_algebra_constant_is_bounded():
    """``||fg||_{H^r} <= C ||f||_{H^r} ||g||_{H^r}`` over 100 random pairs.

    The measured maximum is frozen below.
    """
    d = DomainSpec.disk(1.0, 24, 16)
    rng = np.random.default_rng(2024)
    ratios = []
    for _ in range(100):
        f = ScalarField(d, poly_field(d, random_poly(rng, 4)))
        g = ScalarField(d, poly_field(d, random_poly(rng, 4)))
        ratios.append(sobolev_norm(multiply(f, g)) / (sobolev_norm(f) * sobolev_norm(g)))
    c_alg = max(ratios)
    print(f"measured algebra constant C_alg = {c_alg:.6f}")
    assert c_alg == pytest.approx(0.444312181664, rel=1e-9)


# -- fields ----------------------------------------------------------------------

def test_fields_validate():
    d = DomainSpec.disk(1.0, 8, 6)
    with pytest.raises(ValueError):
        ScalarField(d, np.full(d.shape, np.nan))
    other = DomainSpec.disk(2.0, 8, 6)
    with pytest.raises(DomainError):
        ScalarField(d, 1.0) + ScalarField(other, 1.0)
    with pytest.raises(TypeError):
        ScalarField(d, 1.0) * ScalarField(d, 2.0)
    f = ScalarField(d, 1.0)
    assert np.all((2 * f - f).values == 1.0)
    with pytest.raises(ValueError):
        f.values[0, 0] = 3.0


def test_sample3d_validation():
    with pytest.raises(ValueError):
        Sample3D(np.zeros((4, 3, 3)), np.zeros((4, 3, 3)), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        Sample3D(np.full((1, 3, 3), np.inf), np.zeros((1, 3, 3)), np.zeros((1, 3)))
    assert len(Sample3D(np.zeros((5, 3, 3)), np.zeros((5, 3, 3)), np.zeros((5, 3)))) == 5


def test_epsilon_contract_examples():
    d = DomainSpec.disk(1.0, 16, 12)
    g = d.grid
    rot = VectorField(d, np.stack([-g.y, g.x]))
    G = gradient(rot)
    assert np.allclose(epsilon_contract_2d(TensorField.identity(d), G).values, 2.0, atol=1e-13)
    phi = ScalarField(d, g.x**3 * g.y - g.y**2)
    H = gradient(gradient(phi))
    assert np.max(np.abs(epsilon_contract_2d(TensorField.identity(d), H).values)) <= 1e-12
    Y = TensorField(d, np.diag([2.0, 1.0])[:, :, None, None])
    assert np.allclose(epsilon_contract_2d(Y, G).values, 3.0, atol=1e-13)


@pytest.mark.parametrize("dom", DOMAINS[:2], ids=["disk", "annulus"])
@pytest.mark.parametrize("name", PRESETS)
def test_presets_tangent_and_curl(dom, name):
    params = {"shear_coeffs": (0, 1, 0, 1)} if name == "circular-shear" and dom.is_disk else {}
    v, w = make_preset_field(name, params, dom)
    assert np.max(np.abs(normal_trace(v))) <= 1e-12
    assert np.max(np.abs(curl(v).values - w.values)) <= 1e-10
    assert np.max(np.abs(divergence(v).values)) <= 1e-10
    contracted = epsilon_contract_2d(TensorField.identity(dom), gradient(v))
    assert np.max(np.abs(contracted.values - curl(v).values)) <= 1e-10


def test_preset_examples():
    d = DomainSpec.disk(1.0, 16, 12)
    g = d.grid
    v, w = make_preset_field("rigid-rotation", {"omega": 1.0}, d)
    assert np.array_equal(v.values, np.stack([-g.y, g.x])) and np.all(w.values == 2.0)
    v, w = make_preset_field("zero", None, d)
    assert not v.values.any() and not w.values.any()
    a = DomainSpec.annulus(1.0, 2.0, 16, 12)
    ga = a.grid
    v, w = make_preset_field("circular-shear", {"shear_coeffs": (0, 0, 1)}, a)
    assert np.allclose(v.values, ga.rr * np.stack([-ga.y, ga.x]), atol=1e-14)
    assert np.allclose(w.values, 3 * ga.rr, atol=1e-13)


def test_preset_errors():
    d = DomainSpec.disk(1.0, 16, 12)
    with pytest.raises(UnknownPreset, match="unknown preset"):
        make_preset_field("nosuch", {}, d)
    with pytest.raises(PresetDomainMismatch):
        make_preset_field("circular-shear", {"shear_coeffs": (1.0, 0.5)}, d)
    with pytest.raises(ValueError):
        steady_velocity("random-smooth")


def test_random_smooth_is_deterministic():
    d = DomainSpec.disk(1.0, 16, 12)
    a = make_preset_field("random-smooth", {"seed": 5}, d)[0].values
    b = make_preset_field("random-smooth", {"seed": 5}, d)[0].values
    c = make_preset_field("random-smooth", {"seed": 6}, d)[0].values
    assert np.array_equal(a, b) and not np.array_equal(a, c)


# -- snapshots -------------------------------------------------------------------

@pytest.mark.parametrize("rank", [0, 1, 2])
def test_field_snapshot_roundtrip(tmp_path, rank):
    d = DomainSpec.annulus(0.5, 1.25, 12, 8)
    vals = np.random.default_rng(rank).standard_normal((2,) * rank + d.shape)
    f = (ScalarField, VectorField, TensorField)[rank](d, vals)
    path = tmp_path / "f.clxf"
    save_field(f, path)
    g = load_field(path)
    assert type(g) is type(f) and g.domain == d
    assert g.values.tobytes() == f.values.tobytes()
    raw = path.read_bytes()
    assert raw[:4] == b"CLXF" and int.from_bytes(raw[4:8], "little") == 1


def test_field_snapshot_rejects_garbage():
    d = DomainSpec.disk(1.0, 8, 6)
    buf = field_to_bytes(ScalarField(d, 1.0))
    with pytest.raises(SnapshotFormatError):
        field_from_bytes(b"XXXX" + buf[4:])
    with pytest.raises(SnapshotFormatError):
        field_from_bytes(buf[:-8])
    with pytest.raises(SnapshotFormatError):
        field_from_bytes(buf[:10])
