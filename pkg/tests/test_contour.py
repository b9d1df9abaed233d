import math

import numpy as np
import pytest
from scipy.special import erfcx, gamma

from app.contour.kernels import (
    fit_xi_exponent,
    kernel_h_contour,
    kernel_h_real,
    kernel_h_scaling,
    ramp_kernels,
    scalar_propagator,
    scaling_integral,
    scaling_integral_closed_form,
)
from app.contour.mittag_leffler import mittag_leffler, mittag_leffler_array
from app.contour.nodes import ContourSpec, build_contour, check_phi, default_phi
from app.errors import ContourError, DomainError, PreconditionError


def _kernel_spec(alpha: float, xi: float) -> ContourSpec:
    return ContourSpec(phi=default_phi(alpha), radius=min(1.0, 0.5 * xi ** (1.0 / alpha)))


def test_closed_contour_winds_once_around_origin():
    nodes = build_contour(ContourSpec(phi=2.0), close=True)
    assert abs(nodes.integrate(1.0 / nodes.points) - 1.0) < 1e-12


@pytest.mark.parametrize("t", [0.01, 1.0, 7.5])
def test_inverse_laplace_of_powers(t: float):
    nodes = build_contour(ContourSpec(phi=2.2), t_scale=t)
    lam = nodes.points
    assert nodes.integrate(np.exp(lam * t) / lam**2).real == pytest.approx(t, rel=1e-12)
    half = nodes.integrate(np.exp(lam * t) * np.power(lam, -0.5))
    assert half.real == pytest.approx(t**-0.5 / gamma(0.5), rel=1e-10)
    assert abs(half.imag) < 1e-12


def test_lower_half_mirrors_upper():
    nodes = build_contour(ContourSpec(phi=2.0, nodes_per_ray=8, arc_nodes=8))
    top = nodes.points[: nodes.upper]
    assert np.array_equal(nodes.points[nodes.upper :], np.conj(top))
    assert len(nodes) == 2 * nodes.upper


def test_build_contour_is_cached():
    spec = ContourSpec(phi=2.0)
    assert build_contour(spec, 0.5) is build_contour(spec, 0.5)


def test_contour_csv(tmp_path):
    path = tmp_path / "nodes.csv"
    build_contour(ContourSpec(phi=2.0, nodes_per_ray=4, arc_nodes=4)).to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "re,im,w_re,w_im"
    assert len(lines) > 10


@pytest.mark.parametrize("phi", [1.5, 3.2])
def test_contour_spec_rejects_angle(phi: float):
    with pytest.raises(ContourError):
        ContourSpec(phi=phi)


def test_phi_must_respect_order():
    assert math.pi / 2 < default_phi(1.5) < math.pi / 1.5
    with pytest.raises(ContourError):
        check_phi(2.5, 1.5)


@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.3, 1.8])
@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
@pytest.mark.parametrize("xi", [0.5, 2.0, 10.0])
def test_kernel_h_two_evaluations_agree(alpha: float, t: float, xi: float):
    by_contour = kernel_h_contour(t, xi, alpha, _kernel_spec(alpha, xi))
    by_real = kernel_h_real(t, xi, alpha)
    assert abs(by_contour - by_real) < 1e-8


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_kernel_h_vanishes_for_classical_order(t: float):
    assert kernel_h_real(t, 2.0, 1.0) == 0.0
    assert abs(kernel_h_contour(t, 2.0, 1.0, _kernel_spec(1.0, 2.0))) < 1e-10


def test_kernel_h_needs_pole_outside():
    with pytest.raises(PreconditionError):
        kernel_h_contour(1.0, 0.5, 0.5, ContourSpec(phi=2.0, radius=1.0))


@pytest.mark.parametrize("alpha", [0.4, 1.6])
def test_kernel_h_scaling(alpha: float):
    t_scaled, factor = kernel_h_scaling(0.7, 3.0, alpha)
    assert kernel_h_real(0.7, 3.0, alpha) == pytest.approx(factor * kernel_h_real(t_scaled, 1.0, alpha), abs=1e-10)


def test_scaling_integral_known_constant():
    assert scaling_integral(1.0, 0.0, 1.0, 2.0, 1.0) == pytest.approx(math.pi / 2, abs=1e-6)
    assert scaling_integral(1.0, 0.0, 1.0, 2.0, 4.0) == pytest.approx(math.pi / 4, abs=1e-6)


@pytest.mark.parametrize("a, b, c, d", [(1.0, 0.0, 1.0, 2.0), (2.0, 0.5, 1.0, 3.0), (1.0, -0.5, 0.5, 2.0)])
def test_scaling_integral_exponent(a: float, b: float, c: float, d: float):
    slope = fit_xi_exponent(a, b, c, d, [0.5, 1.0, 2.0, 4.0, 8.0])
    assert abs(slope - ((c - b) / d - 1.0)) < 1e-3
    value = scaling_integral(a, b, c, d, 3.0)
    assert value == pytest.approx(scaling_integral_closed_form(a, b, c, d, 3.0), rel=1e-6)


@pytest.mark.parametrize("b, c, d", [(0.0, 0.0, 2.0), (-1.0, 0.5, 2.0), (0.0, 3.0, 2.0)])
def test_scaling_integral_domain(b: float, c: float, d: float):
    with pytest.raises(DomainError):
        scaling_integral(1.0, b, c, d, 1.0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("t", [0.1, 1.0])
def test_scalar_propagator_matches_mittag_leffler(alpha: float, t: float):
    xi = 3.0
    expected = t ** (alpha - 1.0) * mittag_leffler(alpha, alpha, -xi * t**alpha).real
    assert scalar_propagator(t, xi, alpha, ContourSpec(phi=default_phi(alpha))) == pytest.approx(expected, rel=1e-10)


def test_ramp_kernels_match_mittag_leffler():
    alpha = 0.6
    taus = np.array([0.0, 0.2, 1.0])
    mus = np.array([-1.0, -9.0])
    first, second = ramp_kernels(taus, mus, alpha, ContourSpec(phi=default_phi(alpha)))
    assert np.all(first[0] == 0.0)
    for i, tau in enumerate(taus[1:], start=1):
        z = mus * tau**alpha
        assert np.allclose(first[i], tau**alpha * mittag_leffler_array(alpha, alpha + 1.0, z), rtol=1e-10, atol=1e-13)
        assert np.allclose(second[i], tau ** (alpha + 1.0) * mittag_leffler_array(alpha, alpha + 2.0, z), rtol=1e-10, atol=1e-13)


def test_mittag_leffler_classical_cases():
    assert mittag_leffler(1.0, 1.0, -3.0) == pytest.approx(math.exp(-3.0), rel=1e-14)
    assert mittag_leffler(2.0, 1.0, -4.0) == pytest.approx(math.cos(2.0), rel=1e-14)
    assert mittag_leffler(0.5, 1.0, -2.0) == pytest.approx(erfcx(2.0), rel=1e-13)
    assert mittag_leffler(1.0, 1.0, -40.0).real == pytest.approx(math.exp(-40.0), rel=1e-12)


def test_mittag_leffler_at_zero_and_envelope():
    assert mittag_leffler(0.7, 2.5, 0.0) == pytest.approx(1.0 / gamma(2.5))
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 1.0, -60.0)
    with pytest.raises(DomainError):
        mittag_leffler(-0.5, 1.0, 1.0)


def test_mittag_leffler_array_shape():
    z = -np.linspace(0.0, 2.0, 6).reshape(2, 3)
    out = mittag_leffler_array(1.0, 1.0, z)
    assert out.shape == (2, 3)
    assert np.allclose(out, np.exp(z), rtol=1e-14)


def test_quadrature_converges_with_node_count():
    alpha, t, xi = 0.5, 1.0, 3.0
    expected = t ** (alpha - 1.0) * mittag_leffler(alpha, alpha, -xi * t**alpha).real
    errors = []
    for count in (2, 4, 16):
        spec = ContourSpec(phi=default_phi(alpha), nodes_per_ray=count, arc_nodes=count)
        errors.append(abs(scalar_propagator(t, xi, alpha, spec) - expected))
    assert errors[0] > 1e-8
    assert errors[1] < errors[0]
    assert errors[2] <= 1e-10
