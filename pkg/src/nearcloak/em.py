"""Mie scattering by concentric isotropic spheres.

Each layer has an effective permittivity ``epsilon + i sigma / k`` and a
permeability ``mu``.  Multipole amplitudes follow the Bohren-Huffman
convention: outside the sphere the scattered Debye potentials carry
``-a_l xi_l`` (TM, electric) and ``-b_l xi_l`` (TE, magnetic), so that a
perfect conductor gives ``a_l = psi_l'/xi_l'`` and ``b_l = psi_l/xi_l`` and
lossless spheres satisfy ``|1 - 2 a_l| = |1 - 2 b_l| = 1``.

For an incident field ``p e^{ik d.x}`` the scattering amplitude in the frame
``e_z = d``, ``e_x = p`` is

``A_inf = (i/k) [cos(phi) S2(theta) e_theta - sin(phi) S1(theta) e_phi]``.
"""

from dataclasses import dataclass

import numpy as np

from . import _modal
from .acoustic import FarField, default_truncation, direction_grid
from .errors import ConfigError, InvalidPolarizationError, UnsupportedDomainError

TAIL_RTOL = 1e-12


@dataclass(frozen=True)
class EmScatteringSolution:
    """TM (``a_l``) and TE (``b_l``) amplitudes for ``l = 1..N``."""

    k: float
    tm_coefficients: np.ndarray
    te_coefficients: np.ndarray
    truncation: int
    tail_warning: bool = False


def _effective_layers(config):
    layers = list(config.layers)
    while len(layers) > 1 and layers[-1].is_background():
        layers.pop()
    merged = []
    for lay in layers:
        key = (lay.epsilon, lay.mu, lay.sigma)
        if merged and (merged[-1].epsilon, merged[-1].mu, merged[-1].sigma) == key:
            merged[-1] = lay
        else:
            merged.append(lay)
    return merged


def mie_layered_sphere(config, k, n_modes=None) -> EmScatteringSolution:
    """Multipole amplitudes of a layered sphere.

    Parameters
    ----------
    config : LayeredConfig
        EM configuration (``physics="em"``), innermost layer first.
    k : float
        Background wavenumber; also used as the frequency in ``sigma / k``.
    n_modes : int, optional
        Highest multipole order ``N``.
    """
    if config.physics != "em":
        raise ConfigError("mie_layered_sphere needs an EM configuration")
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    radius = config.scatterer_radius()
    nmax = default_truncation(k, radius) if n_modes is None else int(n_modes)
    if radius == 0:
        zero = np.zeros(nmax, complex)
        return EmScatteringSolution(k, zero, zero.copy(), nmax)
    layers = _effective_layers(config)
    out = []
    for pol in ("tm", "te"):
        stack = []
        for lay in layers:
            eps = lay.effective_permittivity(k)
            mu = complex(lay.mu)
            eta = 1 / eps if pol == "tm" else 1 / mu
            stack.append((lay.outer_radius, eta, _modal.wavenumber(k, eps * mu)))
        state = _modal.propagate("ric", nmax, stack)
        c = _modal.exterior_coefficients("ric", nmax, k, layers[-1].outer_radius, state)
        out.append(-c[1:])
    a, b = out
    peak = max(np.abs(a).max(), np.abs(b).max())
    tail = bool(peak > 0 and max(abs(a[-1]), abs(b[-1])) > TAIL_RTOL * peak)
    return EmScatteringSolution(k, a, b, nmax, tail)


def angular_functions(nmax, mu):
    """``pi_n`` and ``tau_n`` for ``n = 1..nmax`` at ``mu = cos(theta)``; shape ``(len(mu), nmax)``."""
    mu = np.asarray(mu, dtype=float)
    pi = np.zeros(mu.shape + (nmax + 1,))
    tau = np.zeros_like(pi)
    if nmax >= 1:
        pi[..., 1] = 1.0
    for n in range(2, nmax + 1):
        pi[..., n] = ((2 * n - 1) * mu * pi[..., n - 1] - n * pi[..., n - 2]) / (n - 1)
    n = np.arange(nmax + 1)
    tau[..., 1:] = n[1:] * mu[..., None] * pi[..., 1:] - (n[1:] + 1) * pi[..., :-1]
    return pi[..., 1:], tau[..., 1:]


def amplitude_functions(solution, cos_theta):
    """Bohren-Huffman ``S1``, ``S2`` at the given scattering-angle cosines."""
    n = np.arange(1, solution.truncation + 1)
    pi, tau = angular_functions(solution.truncation, cos_theta)
    w = (2 * n + 1) / (n * (n + 1))
    a, b = solution.tm_coefficients, solution.te_coefficients
    return pi @ (w * a) + tau @ (w * b), pi @ (w * b) + tau @ (w * a)


def em_far_field(solution, directions=None, incident=None, polarization=None) -> FarField:
    """Vector scattering amplitude ``A_inf`` on a direction grid.

    ``incident`` defaults to ``e_z`` and ``polarization`` to ``e_x``.  The
    amplitude is linear in ``polarization``; its norm scales the result.
    """
    x = direction_grid(3) if directions is None else np.atleast_2d(np.asarray(directions, float))
    d = np.array([0.0, 0.0, 1.0]) if incident is None else np.asarray(incident, float)
    p = np.array([1.0, 0.0, 0.0]) if polarization is None else np.asarray(polarization, float)
    if d.shape != (3,) or p.shape != (3,):
        raise UnsupportedDomainError("incident and polarization must be 3-vectors")
    nd, amp = np.linalg.norm(d), np.linalg.norm(p)
    if abs(nd - 1) > 1e-12:
        raise UnsupportedDomainError("incident direction must be a unit vector")
    if amp == 0 or abs(p @ d) > 1e-10 * amp:
        raise InvalidPolarizationError("polarization must be nonzero and orthogonal to d")
    ex = p / amp
    ey = np.cross(d, ex)
    cos_t = np.clip(x @ d, -1.0, 1.0)
    sin_t = np.sqrt(1 - cos_t**2)
    phi = np.arctan2(x @ ey, x @ ex)
    cp, sp = np.cos(phi), np.sin(phi)
    e_theta = (cos_t * cp)[:, None] * ex + (cos_t * sp)[:, None] * ey - sin_t[:, None] * d
    e_phi = -sp[:, None] * ex + cp[:, None] * ey
    s1, s2 = amplitude_functions(solution, cos_t)
    samples = (1j * amp / solution.k) * ((cp * s2)[:, None] * e_theta - (sp * s1)[:, None] * e_phi)
    sup = float(np.linalg.norm(samples, axis=1).max()) if len(samples) else 0.0
    return FarField(x, samples, sup)


def cross_sections(solution):
    """``(C_sca, C_ext)`` from the amplitudes."""
    n = np.arange(1, solution.truncation + 1)
    a, b = solution.tm_coefficients, solution.te_coefficients
    k2 = solution.k**2
    c_sca = 2 * np.pi / k2 * np.sum((2 * n + 1) * (np.abs(a) ** 2 + np.abs(b) ** 2))
    c_ext = 2 * np.pi / k2 * np.sum((2 * n + 1) * (a + b).real)
    return float(c_sca), float(c_ext)
