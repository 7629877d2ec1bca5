import numpy as np
import pytest
from scipy import special

from nearcloak.em import (
    EmScatteringSolution,
    amplitude_functions,
    cross_sections,
    em_far_field,
    mie_layered_sphere,
)
from nearcloak.errors import ConfigError, EmRequires3DError, InvalidPolarizationError, UnsupportedDomainError
from nearcloak.materials import EmLayer, Layer, LayeredConfig, build_em_virtual

# 30-digit mpmath values, x = 1, relative index 1.5
MIE_A = [complex(0.034872697078027157886216984405, -0.183457330397374184647591060183),
         complex(0.000105161942023787053387022484478, -0.0102543104590087791547410456483)]
MIE_B = [complex(0.000800505846321542410900289415614, -0.0282818853104164086952923047245),
         complex(5.73182556751759406781711375795e-7, -0.000757087992384977693682407812941)]

rng = np.random.default_rng(5)


def sphere(eps, mu=1.0, sigma=0.0, radius=1.0):
    return LayeredConfig(3, (EmLayer(radius, eps, mu, sigma),), physics="em")


def riccati(n, z):
    j, dj = special.spherical_jn(n, z), special.spherical_jn(n, z, True)
    y, dy = special.spherical_yn(n, z), special.spherical_yn(n, z, True)
    return z * j, j + z * dj, z * (j + 1j * y), j + 1j * y + z * (dj + 1j * dy)


def random_unit():
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_rotation():
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    return q if np.linalg.det(q) > 0 else -q


def test_vacuum_gives_zero():
    sol = mie_layered_sphere(sphere(1.0), 1.0)
    assert np.all(sol.tm_coefficients == 0) and np.all(sol.te_coefficients == 0)
    assert em_far_field(sol).sup_norm == 0


def test_mie_reference_values():
    sol = mie_layered_sphere(sphere(2.25), 1.0)
    for i in range(2):
        assert abs(sol.tm_coefficients[i] - MIE_A[i]) <= 1e-10 * abs(MIE_A[i])
        assert abs(sol.te_coefficients[i] - MIE_B[i]) <= 1e-10 * abs(MIE_B[i])


def test_mie_closed_form_magnetic_lossy():
    k, R, eps, mu = 1.7, 0.9, 3.0 + 0.4j, 1.8
    m, x = np.sqrt(eps * mu), k * R
    n = np.arange(1, 11)
    p1, dp1, _, _ = riccati(n, m * x)
    p, dp, xi, dxi = riccati(n, x)
    # inverse relative impedance m/mu
    z = m / mu
    a = (z * p1 * dp - p * dp1) / (z * p1 * dxi - xi * dp1)
    b = (p1 * dp - z * p * dp1) / (p1 * dxi - z * xi * dp1)
    sol = mie_layered_sphere(sphere(eps, mu, radius=R), k, n_modes=10)
    assert np.allclose(sol.tm_coefficients, a, rtol=1e-9, atol=1e-18)
    assert np.allclose(sol.te_coefficients, b, rtol=1e-9, atol=1e-18)


def test_conductor_limit():
    cfg = LayeredConfig(3, (EmLayer(0.5, 2.0, 1.0, 0.0), EmLayer(1.0, 1.0, 1.0, 1e6)), physics="em")
    sol = mie_layered_sphere(cfg, 1.0, n_modes=10)
    n = np.arange(1, 11)
    p, dp, xi, dxi = riccati(n, 1.0)
    assert np.abs(sol.tm_coefficients - dp / dxi).max() <= 1e-3
    assert np.abs(sol.te_coefficients - p / xi).max() <= 1e-3


def test_lossless_unitarity():
    cfg = LayeredConfig(3, (EmLayer(0.4, 4.0, 2.0, 0.0), EmLayer(1.2, 1.5, 1.0, 0.0)), physics="em")
    sol = mie_layered_sphere(cfg, 1.3)
    assert np.allclose(np.abs(1 - 2 * sol.tm_coefficients), 1, atol=1e-10)
    assert np.allclose(np.abs(1 - 2 * sol.te_coefficients), 1, atol=1e-10)


def test_zero_amplitudes_zero_field():
    zero = np.zeros(5, complex)
    ff = em_far_field(EmScatteringSolution(1.0, zero, zero, 5))
    assert ff.sup_norm == 0


def test_transversality():
    sol = mie_layered_sphere(build_em_virtual(0.2, (2 + 0.5j, 1.5, 0.0)), 1.0)
    d = random_unit()
    p = np.cross(d, random_unit())
    ff = em_far_field(sol, None, d, p)
    dots = np.abs(np.einsum("ij,ij->i", ff.samples, ff.directions))
    assert dots.max() <= 1e-12 * ff.sup_norm


def test_rotational_covariance():
    sol = mie_layered_sphere(sphere(2.0 + 0.3j, 1.2), 1.5)
    d = np.array([0.0, 0.0, 1.0])
    p = np.array([1.0, 0.0, 0.0])
    x = np.array([random_unit() for _ in range(40)])
    base = em_far_field(sol, x, d, p).samples
    for _ in range(10):
        rot = random_rotation()
        turned = em_far_field(sol, x @ rot.T, rot @ d, rot @ p).samples
        assert np.allclose(turned, base @ rot.T, atol=1e-13)


def test_reciprocity():
    # q . A(x; d, p) = p . A(-d; -x, q)
    sol = mie_layered_sphere(sphere(3.0 + 1j, 1.4, radius=0.8), 2.0)
    for _ in range(10):
        x, d = random_unit(), random_unit()
        p = np.cross(d, random_unit())
        q = np.cross(x, random_unit())
        lhs = q @ em_far_field(sol, [x], d, p).samples[0]
        rhs = p @ em_far_field(sol, [-d], -x, q).samples[0]
        assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1e-30)


def test_forward_amplitude_identity():
    sol = mie_layered_sphere(sphere(2.25), 1.0)
    s1, s2 = amplitude_functions(sol, np.array([1.0]))
    assert s1[0] == pytest.approx(s2[0])


@pytest.mark.parametrize("cfg", [sphere(2.25), sphere(2 + 1j, 1.5), build_em_virtual(0.3, (2.0, 3.0, 0.5))])
def test_optical_theorem(cfg):
    k = 1.0
    sol = mie_layered_sphere(cfg, k)
    c_sca, c_ext = cross_sections(sol)
    p = np.array([1.0, 0.0, 0.0])
    fwd = em_far_field(sol, [[0.0, 0.0, 1.0]]).samples[0]
    assert 4 * np.pi / k * (p @ fwd).imag == pytest.approx(c_ext, rel=1e-10)
    # Gauss-Legendre in cos(theta) times uniform phi
    mu, w = np.polynomial.legendre.leggauss(60)
    phi = 2 * np.pi * np.arange(64) / 64
    st = np.sqrt(1 - mu**2)
    dirs = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)), np.outer(mu, np.ones_like(phi))], -1)
    vals = em_far_field(sol, dirs.reshape(-1, 3)).samples
    power = (np.sum(np.abs(vals) ** 2, axis=1).reshape(60, 64) * w[:, None]).sum() * 2 * np.pi / 64
    assert power == pytest.approx(c_sca, rel=1e-6)
    assert c_ext >= c_sca * (1 - 1e-12)


def test_lossless_extinction_equals_scattering():
    c_sca, c_ext = cross_sections(mie_layered_sphere(sphere(2.25), 1.0))
    assert c_sca == pytest.approx(c_ext, rel=1e-10)


def test_invalid_polarization():
    sol = mie_layered_sphere(sphere(2.0), 1.0)
    with pytest.raises(InvalidPolarizationError):
        em_far_field(sol, None, [0, 0, 1.0], [0, 1.0, 1.0])
    with pytest.raises(InvalidPolarizationError):
        em_far_field(sol, None, [0, 0, 1.0], [0, 0, 0.0])
    with pytest.raises(UnsupportedDomainError):
        em_far_field(sol, None, [0, 0, 2.0], [1.0, 0, 0])


def test_truncation_doubling():
    sol = mie_layered_sphere(build_em_virtual(0.1, (2 + 0.5j, 1.5, 0.0)), 1.0)
    assert not sol.tail_warning
    doubled = mie_layered_sphere(build_em_virtual(0.1, (2 + 0.5j, 1.5, 0.0)), 1.0, n_modes=2 * sol.truncation)
    assert abs(em_far_field(sol).sup_norm - em_far_field(doubled).sup_norm) <= 1e-10


def test_conducting_layer_suppresses_scattering():
    sups = [em_far_field(mie_layered_sphere(build_em_virtual(r, (2 + 0.5j, 1.5, 0.0)), 1.0)).sup_norm
            for r in (0.1, 0.05, 0.025)]
    assert sups[0] > sups[1] > sups[2]


def test_em_config_errors():
    with pytest.raises(EmRequires3DError):
        build_em_virtual(0.1, dimension=2)
    with pytest.raises(ConfigError):
        mie_layered_sphere(LayeredConfig(3, (Layer(1.0, 1.0, 2.0),)), 1.0)
