import dataclasses
import math
import warnings

import numpy as np
import pytest
from scipy import special

from nearcloak import _modal
from nearcloak.acoustic import (
    default_truncation,
    direction_grid,
    far_field,
    pattern,
    solve_layered,
    solve_radial_anisotropic,
    solve_sound_hard,
    solve_with_core_source,
)
from nearcloak.errors import (
    InterfaceInconsistencyError,
    ModalSingularityError,
    OdeStiffnessError,
    UncloakedSourceWarning,
)
from nearcloak.materials import (
    Layer,
    LayeredConfig,
    RadialMedium,
    RadialProfile,
    build_physical_fullcloak,
    build_virtual_fullcloak,
    radial_medium_from_config,
)
from nearcloak.specfun import TABLES

# 30-digit mpmath evaluations of the closed forms
DISK_K1_Q4_R1 = [
    complex(-0.88925400876818842801776286814, 0.313817330078972991060408331351),
    complex(-0.270910723492428009815575583763, 0.444430088303252960848085654961),
    complex(-0.000194805984262121867775104688026, 0.0139559318890075389226226478396),
]
HARD_2D_A1 = complex(-0.122688685395811569937126172234, 0.328079520652629494074776492145)
FREE_SOURCE_A0 = complex(-0.0275963965605338520432985960994, 0.193174096202056903158651448186)

LOSSLESS = [
    LayeredConfig(2, (Layer(0.4, 2.0, 3.0), Layer(1.0, 0.5, 1.2))),
    LayeredConfig(3, (Layer(0.4, 2.0, 3.0), Layer(1.0, 0.5, 1.2))),
    LayeredConfig(2, (Layer(1.5, 1.0, 4.0),)),
    LayeredConfig(3, (Layer(2.0, 1.0, 0.3),)),
]


def test_background_gives_zero():
    for n in (2, 3):
        cfg = LayeredConfig(n, (Layer(0.5), Layer(2.0)))
        sol = solve_layered(cfg, 1.0)
        assert np.all(sol.coefficients == 0)
        assert far_field(sol).sup_norm == 0


def test_single_disk_closed_form():
    sol = solve_layered(LayeredConfig(2, (Layer(1.0, 1.0, 4.0),)), 1.0)
    for m, ref in enumerate(DISK_K1_Q4_R1):
        assert abs(sol.coefficients[m] - ref) <= 1e-10 * abs(ref)


def test_single_disk_with_density_contrast():
    # a_m = -[k J_m'(kR) J_m(K R) - eta K J_m'(K R) J_m(kR)] / [...H...]
    k, R, eta, q = 1.3, 0.8, 2.5, 3.0 + 0.2j
    K = k * np.sqrt(q / eta)
    m = np.arange(8)
    J, dJ = special.jv(m, K * R), special.jvp(m, K * R)
    j, dj = special.jv(m, k * R), special.jvp(m, k * R)
    h, dh = special.hankel1(m, k * R), special.h1vp(m, k * R)
    expected = -(k * dj * J - eta * K * dJ * j) / (k * dh * J - eta * K * dJ * h)
    sol = solve_layered(LayeredConfig(2, (Layer(R, eta, q),)), k, n_modes=7)
    assert np.allclose(sol.coefficients, expected, rtol=1e-10, atol=1e-16)


def test_sound_hard_2d():
    sol = solve_sound_hard(1.0, 2, 1.0)
    assert abs(sol.coefficients[1] - HARD_2D_A1) <= 1e-12


def test_sound_hard_3d_small():
    kr = 0.01
    a0 = solve_sound_hard(kr, 3, 1.0).coefficients[0]
    assert abs(a0) == pytest.approx(kr**3 / 3, rel=1e-2)


def test_sound_hard_scale_invariance():
    for n in (2, 3):
        a = solve_sound_hard(1.0, n, 2.0).coefficients
        b = solve_sound_hard(2.0, n, 1.0).coefficients
        assert np.allclose(a, b, rtol=1e-13, atol=0)


def test_high_loss_coefficients_vanish():
    peaks = [np.abs(solve_layered(build_virtual_fullcloak(r, 3, "high_loss", (2.0, 3.0)), 1.0).coefficients).max()
             for r in (0.1, 0.01, 0.001)]
    assert peaks[0] > peaks[1] > peaks[2] and peaks[2] < 1e-3


@pytest.mark.parametrize("cfg", LOSSLESS)
def test_lossless_unitarity(cfg):
    a = solve_layered(cfg, 1.1).coefficients
    assert np.allclose(np.abs(1 + 2 * a), 1.0, atol=1e-8)


def optical_sides(sol):
    k = sol.k
    if sol.dimension == 2:
        t = 2 * np.pi * np.arange(2048) / 2048
        vals = pattern(2, k, sol.coefficients, np.cos(t))
        total = np.mean(np.abs(vals) ** 2) * 2 * np.pi
        fwd = pattern(2, k, sol.coefficients, np.array([1.0]))[0]
        return total, -math.sqrt(8 * math.pi / k) * (np.exp(0.25j * np.pi) * fwd).real
    mu, w = np.polynomial.legendre.leggauss(200)
    vals = pattern(3, k, sol.coefficients, mu)
    total = 2 * np.pi * np.sum(w * np.abs(vals) ** 2)
    fwd = pattern(3, k, sol.coefficients, np.array([1.0]))[0]
    return total, 4 * np.pi / k * fwd.imag


@pytest.mark.parametrize("cfg", LOSSLESS)
def test_optical_theorem(cfg):
    total, forward = optical_sides(solve_layered(cfg, 1.1))
    assert total == pytest.approx(forward, rel=1e-6)


def test_absorbing_body_extinction_exceeds_scattering():
    cfg = LayeredConfig(2, (Layer(1.0, 1.0, 2 + 1j),))
    total, forward = optical_sides(solve_layered(cfg, 1.0))
    assert forward > total > 0


def test_reciprocity_and_rotational_symmetry():
    rng = np.random.default_rng(11)
    for n in (2, 3):
        sol = solve_layered(build_virtual_fullcloak(0.3, n, "high_density", (2.0, 3 + 1j)), 1.0)
        for _ in range(10):
            x, d = rng.normal(size=(2, n))
            x /= np.linalg.norm(x)
            d /= np.linalg.norm(d)
            a = far_field(sol, [x], d).samples[0]
            b = far_field(sol, [-d], -x).samples[0]
            assert abs(a - b) <= 1e-8 * max(abs(a), 1e-30)
        # rotate observation and incidence together
        rot = np.linalg.qr(rng.normal(size=(n, n)))[0]
        x = direction_grid(n, 50)
        d = np.eye(n)[0]
        a = far_field(sol, x, d).samples
        b = far_field(sol, x @ rot.T, rot @ d).samples
        assert np.allclose(a, b, atol=1e-14)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("scheme", ["high_loss", "high_density"])
def test_truncation_doubling(n, scheme):
    cfg = build_virtual_fullcloak(0.1, n, scheme, (2.0, 3.0))
    sol = solve_layered(cfg, 1.0)
    assert not sol.tail_warning
    doubled = solve_layered(cfg, 1.0, n_modes=2 * sol.truncation)
    assert abs(far_field(sol).sup_norm - far_field(doubled).sup_norm) <= 1e-10


def test_tail_flag_on_short_truncation():
    sol = solve_layered(LayeredConfig(2, (Layer(3.0, 1.0, 4.0),)), 2.0, n_modes=3)
    assert sol.tail_warning


def test_default_truncation():
    assert default_truncation(1.0, 2.0) == math.ceil(2 + 4 * 2 ** (1 / 3) + 12)
    assert default_truncation(1.0, 0.0) == 12


def test_modal_singularity_reports_mode():
    k, R = 1.0, 1.0
    _, _, g, dg = TABLES["cyl"](3, k * R)
    state = np.array([g, k * dg])
    state[:, :2] = [[1.0, 1.0], [0.2, 0.3]]
    with pytest.raises(ModalSingularityError) as info:
        _modal.exterior_coefficients("cyl", 3, k, R, state)
    assert info.value.mode == 2


# ---------------------------------------------------------------------------
# anisotropic ODE path


def test_ode_background_profile():
    medium = RadialMedium(2, Layer(0.5), (RadialProfile.constant(0.5, 2.0),))
    sol = solve_radial_anisotropic(medium, 1.0)
    assert np.abs(sol.coefficients).max() < 1e-12


@pytest.mark.parametrize("cfg", LOSSLESS[:2] + [
    LayeredConfig(2, (Layer(0.3, 2.0, 3 + 1j), Layer(0.6, 0.1, 1 + 1j), Layer(1.0, 1.0, 2.0))),
    LayeredConfig(3, (Layer(0.3, 2.0, 3 + 1j), Layer(0.6, 0.1, 1 + 1j), Layer(1.0, 1.0, 2.0))),
])
def test_ode_matches_transfer_matrix(cfg):
    ode = solve_radial_anisotropic(radial_medium_from_config(cfg), 1.0, rtol=1e-12)
    tm = solve_layered(cfg, 1.0, n_modes=ode.truncation)
    assert np.allclose(ode.coefficients, tm.coefficients, rtol=1e-8, atol=1e-13)


@pytest.mark.parametrize("n", [2, 3])
def test_physical_cloak_matches_virtual(n):
    rho = 0.1
    phys = solve_radial_anisotropic(build_physical_fullcloak(rho, n, "high_loss", (2.0, 3.0)), 1.0)
    virt = solve_layered(build_virtual_fullcloak(rho, n, "high_loss", (2.0, 3.0)), 1.0)
    fp, fv = far_field(phys).samples, far_field(virt).samples
    assert np.abs(fp - fv).max() <= 1e-6 * np.abs(fv).max()


def test_ode_sensitive_to_profile():
    bundle = build_physical_fullcloak(0.1, 2, "high_loss", (2.0, 3.0))
    bad = dataclasses.replace(bundle, cloak=dataclasses.replace(bundle.cloak, q=lambda r: 1.01 * bundle.cloak.q(r)))
    a = far_field(solve_radial_anisotropic(bundle, 1.0)).samples
    b = far_field(solve_radial_anisotropic(bad, 1.0)).samples
    assert np.abs(a - b).max() > 1e-4


def test_ode_interface_mismatch():
    medium = RadialMedium(2, Layer(0.5), (RadialProfile.constant(0.6, 2.0),))
    with pytest.raises(InterfaceInconsistencyError):
        solve_radial_anisotropic(medium, 1.0)


def test_ode_failure_is_reported():
    medium = RadialMedium(2, Layer(0.5), (RadialProfile.constant(0.5, 2.0, 1.0, 1e40 + 1e40j),))
    with pytest.raises(OdeStiffnessError):
        solve_radial_anisotropic(medium, 1.0)


# ---------------------------------------------------------------------------
# interior sources


def test_zero_source():
    cfg = build_virtual_fullcloak(0.1, 3, "high_loss", (1.0, 1 + 1j))
    assert np.all(solve_with_core_source(cfg, 1.0, 0.0).coefficients == 0)


def test_free_source_ball():
    cfg = LayeredConfig(3, (Layer(0.7, 1.0, 1 + 1j), Layer(2.0)))
    a0 = solve_with_core_source(cfg, 1.0, 2.0).coefficients[0]
    assert abs(a0 - FREE_SOURCE_A0) <= 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_source_matches_dense_solve(n):
    # unknowns: core amplitude, (A, B) per shell, outgoing amplitude
    k, h = 1.2, 1.5 - 0.5j
    layers = [Layer(0.3, 2.0, 1 + 2j), Layer(0.6, 0.5, 2 + 0.3j), Layer(1.0, 1.5, 1.0 + 0.1j)]
    cfg = LayeredConfig(n, tuple(layers))
    if n == 2:
        F = lambda z, d=False: special.jvp(0, z) if d else special.jv(0, z)  # noqa: E731
        Y = lambda z, d=False: special.yvp(0, z) if d else special.yv(0, z)  # noqa: E731
        G = lambda z, d=False: special.h1vp(0, z) if d else special.hankel1(0, z)  # noqa: E731
    else:
        F = lambda z, d=False: special.spherical_jn(0, z, d)  # noqa: E731
        Y = lambda z, d=False: special.spherical_yn(0, z, d)  # noqa: E731
        G = lambda z, d=False: special.spherical_jn(0, z, d) + 1j * special.spherical_yn(0, z, d)  # noqa: E731
    kap = [k * np.sqrt(lay.q / lay.eta) for lay in layers]
    up = -h / (k**2 * layers[0].q)
    # unknowns [c0, A1, B1, A2, B2, a]
    M = np.zeros((6, 6), complex)
    rhs = np.zeros(6, complex)
    r0, r1, r2 = (lay.outer_radius for lay in layers)
    e = [lay.eta for lay in layers]
    M[0, :3] = [F(kap[0] * r0), -F(kap[1] * r0), -Y(kap[1] * r0)]
    rhs[0] = -up
    M[1, :3] = [e[0] * kap[0] * F(kap[0] * r0, True), -e[1] * kap[1] * F(kap[1] * r0, True),
                -e[1] * kap[1] * Y(kap[1] * r0, True)]
    M[2, 1:5] = [F(kap[1] * r1), Y(kap[1] * r1), -F(kap[2] * r1), -Y(kap[2] * r1)]
    M[3, 1:5] = [e[1] * kap[1] * F(kap[1] * r1, True), e[1] * kap[1] * Y(kap[1] * r1, True),
                 -e[2] * kap[2] * F(kap[2] * r1, True), -e[2] * kap[2] * Y(kap[2] * r1, True)]
    M[4, 3:6] = [F(kap[2] * r2), Y(kap[2] * r2), -G(k * r2)]
    M[5, 3:6] = [e[2] * kap[2] * F(kap[2] * r2, True), e[2] * kap[2] * Y(kap[2] * r2, True), -k * G(k * r2, True)]
    expected = np.linalg.solve(M, rhs)[5]
    got = solve_with_core_source(cfg, k, h).coefficients[0]
    assert abs(got - expected) <= 1e-10 * abs(expected)


def test_source_decays_with_high_loss():
    sups = []
    for rho in (0.1, 0.05, 0.025, 0.0125):
        cfg = build_virtual_fullcloak(rho, 3, "high_loss", (1.0, 3 + 1j))
        sups.append(far_field(solve_with_core_source(cfg, 1.0, 1.0)).sup_norm)
    assert all(b < a for a, b in zip(sups, sups[1:]))


def test_uncloaked_source_warns():
    cfg = build_virtual_fullcloak(0.1, 2, "high_loss", (1.0, 3.0))
    with pytest.warns(UncloakedSourceWarning):
        solve_with_core_source(cfg, 1.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_with_core_source(cfg, 1.0, 0.0)


def test_far_field_zero_and_grid():
    sol = solve_layered(LayeredConfig(3, (Layer(1.0),)), 1.0)
    ff = far_field(sol)
    assert ff.sup_norm == 0 and ff.resolution == 1000
    assert far_field(solve_layered(LayeredConfig(2, (Layer(1.0),)), 1.0)).resolution == 360
    dirs = direction_grid(3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
