import cmath
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad
from scipy.linalg import expm

from conftest import basis_fv, random_fv, random_omega, rng_for
from spincs import (ACoords, DecompositionPole, EulerAngles, NotUnitary, Spin,
                    SubsidiaryViolation, ZCoords, ZOriginSingular, a_measure_weight,
                    a_to_omega, big_r, gaussian_decompose, kinetic_term,
                    kinetic_term_a, kinetic_term_z, omega_to_a, omega_to_z,
                    spin_operators, su2_matrix, z3_of, z_measure_weight,
                    z_to_omega)


def test_z_chart_roundtrip():
    rng = rng_for(40)
    for _ in range(20):
        om = random_omega(rng, theta_margin=1e-3)
        back = z_to_omega(omega_to_z(om))
        assert_allclose((back.phi, back.theta, back.psi),
                        (om.phi, om.theta, om.psi), atol=1e-12)


def test_z_chart_values():
    om = EulerAngles(0.8, 1.1, 2.3)
    z = omega_to_z(om)
    t2 = math.tan(0.55)
    assert_allclose(z.z_plus, -t2 * cmath.exp(-0.8j), atol=1e-14)
    assert_allclose(z.z_minus, t2 * cmath.exp(-2.3j), atol=1e-14)


def test_z_chart_origin():
    back = z_to_omega(ZCoords(0.0, 0.0))
    assert (back.phi, back.theta, back.psi) == (0.0, 0.0, 0.0)


def test_z_constraint_enforced():
    with pytest.raises(SubsidiaryViolation):
        ZCoords(0.5, 0.7)


def test_omega_to_z_pole():
    with pytest.raises(DecompositionPole):
        omega_to_z(EulerAngles(0.1, math.pi, 0.2))


def test_z3_matches_gaussian_decomposition():
    rng = rng_for(41)
    for _ in range(20):
        om = random_omega(rng, theta_margin=1e-3)
        zp, z3, zm = gaussian_decompose(om)
        z = ZCoords(zp, zm)
        # z3 carries a 2 pi i ambiguity from the square-root branch;
        # exp(-z3) is the invariant content
        assert_allclose(cmath.exp(-z3_of(z)), cmath.exp(-z3), atol=1e-12)


def test_z3_product_identity_integer_spin():
    # for integer spin exp(z3 S3) is branch-insensitive, so the Gaussian
    # product built from chart data alone reproduces the rotation matrix
    rng = rng_for(42)
    spin = Spin(4)
    ops = spin_operators(spin)
    for _ in range(5):
        om = random_omega(rng, theta_margin=0.05)
        z = omega_to_z(om)
        product = (expm(z.z_plus * ops.s_plus) @ expm(z3_of(z) * ops.s3)
                   @ expm(z.z_minus * ops.s_minus))
        assert_allclose(product, big_r(spin, om).entries, atol=1e-11)


def test_z3_origin_singular():
    with pytest.raises(ZOriginSingular):
        z3_of(ZCoords(0.0, 0.0))


def test_a_chart_roundtrip_with_sign():
    rng = rng_for(43)
    for _ in range(20):
        om = random_omega(rng, theta_margin=1e-6)
        a = omega_to_a(om)
        back, sign = a_to_omega(a)
        u = np.array([[a.a1, -np.conj(a.a2)], [a.a2, np.conj(a.a1)]])
        assert_allclose(sign * su2_matrix(back), u, atol=1e-12)
        assert_allclose(back.theta, om.theta, atol=1e-12)


def test_a_sphere_constraint():
    with pytest.raises(NotUnitary):
        ACoords(0.9, 0.5)


def test_z_measure_integrates_to_dim():
    # integral over (u, arg z+, arg z-) of the chart density is 2s + 1
    for two_s in (1, 2, 5):
        spin = Spin(two_s)
        radial, _ = quad(lambda u: z_measure_weight(ZCoords(-u, u), spin), 0.0,
                         np.inf)
        assert_allclose(radial * (2.0 * math.pi) ** 2, spin.dim, rtol=1e-10)


def test_a_measure_is_constant_density():
    spin = Spin(3)
    rng = rng_for(44)
    om = random_omega(rng)
    w = a_measure_weight(omega_to_a(om), spin)
    assert_allclose(w, spin.dim / (2.0 * math.pi ** 2))
    # round 3-sphere area is 2 pi^2, so the total mass is 2s + 1
    assert_allclose(w * 2.0 * math.pi ** 2, spin.dim)


def _chart_velocity(mapper, om_array, om_dot, h=1e-6):
    """Finite-difference velocity of a chart map along an Euler path."""
    plus = mapper(EulerAngles(*(om_array + h * om_dot)))
    minus = mapper(EulerAngles(*(om_array - h * om_dot)))
    return [(p - m) / (2 * h) for p, m in zip(plus, minus)]


def test_kinetic_term_z_matches_euler_chart():
    rng = rng_for(45)
    for two_s in (1, 2, 3):
        fv = random_fv(Spin(two_s), rng)
        for _ in range(5):
            om = random_omega(rng, theta_margin=0.1, wrap_margin=0.05)
            om_dot = rng.normal(size=3)
            z = omega_to_z(om)
            z_dot = _chart_velocity(
                lambda o: (omega_to_z(o).z_plus, omega_to_z(o).z_minus),
                om.as_array(), om_dot)
            assert_allclose(kinetic_term_z(fv, z, z_dot),
                            kinetic_term(fv, om, om_dot), atol=1e-7)


def test_kinetic_term_a_matches_euler_chart():
    rng = rng_for(46)
    for two_s in (1, 2, 3):
        fv = random_fv(Spin(two_s), rng)
        for _ in range(5):
            om = random_omega(rng, theta_margin=0.1, wrap_margin=0.05)
            om_dot = rng.normal(size=3)
            a = omega_to_a(om)
            a_dot = _chart_velocity(
                lambda o: (omega_to_a(o).a1, omega_to_a(o).a2),
                om.as_array(), om_dot)
            assert_allclose(kinetic_term_a(fv, a, a_dot),
                            kinetic_term(fv, om, om_dot), atol=1e-7)


def test_kinetic_term_z_origin():
    # coupled neighboring components make the chart origin singular
    rng = rng_for(47)
    fv = random_fv(Spin(2), rng)
    with pytest.raises(ZOriginSingular):
        kinetic_term_z(fv, ZCoords(0.0, 0.0), (0.1, 0.1))
    # a single-m fiducial vector has no coupling and the limit is zero
    assert kinetic_term_z(basis_fv(Spin(2), 1), ZCoords(0.0, 0.0), (0.1, 0.1)) == 0.0
