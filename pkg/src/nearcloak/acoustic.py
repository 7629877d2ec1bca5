"""Modal scattering for radially layered acoustic media.

Conventions.  With ``F`` the regular and ``G`` the outgoing radial function
(``J_m, H_m`` in 2D and ``j_l, h_l`` in 3D) the total exterior field is

* 2D: ``u = sum_m i^m [J_m(kr) + a_m H_m(kr)] e^{im theta}``;
* 3D: ``u = sum_l i^l (2l+1) [j_l(kr) + a_l h_l(kr)] P_l(cos theta)``.

The far-field patterns are then

* 2D: ``a_inf = e^{-i pi/4} sqrt(2/(pi k)) [a_0 + 2 sum_{m>=1} a_m cos(m gamma)]``;
* 3D: ``a_inf = (-i/k) sum_l (2l+1) a_l P_l(cos gamma)``;

where ``gamma`` is the angle between the observation and incident
directions.  For lossless media ``|1 + 2 a_m| = 1``.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.integrate import solve_ivp

from . import _modal
from .errors import InterfaceInconsistencyError, OdeStiffnessError, UncloakedSourceWarning
from .materials import LayeredConfig
from .specfun import TABLES

TAIL_RTOL = 1e-12
KIND = {2: "cyl", 3: "sph"}


@dataclass(frozen=True)
class ScatteringSolution:
    """Exterior scattered-wave coefficients ``a_0..a_N``."""

    dimension: int
    k: float
    coefficients: np.ndarray
    truncation: int
    tail_warning: bool = False

    @property
    def mode_coefficients(self):
        return self.coefficients


@dataclass(frozen=True)
class FarField:
    directions: np.ndarray
    samples: np.ndarray
    sup_norm: float

    @property
    def resolution(self):
        return len(self.samples)


def default_truncation(k, radius):
    """Mode count ``ceil(x + 4 x^(1/3) + 12)`` with size parameter ``x = k R``."""
    x = k * radius
    return int(math.ceil(x + 4 * x ** (1 / 3) + 12))


def _tail_flag(coeffs):
    peak = np.abs(coeffs).max() if len(coeffs) else 0.0
    return bool(peak > 0 and abs(coeffs[-1]) > TAIL_RTOL * peak)


def _solution(dimension, k, coeffs):
    coeffs = np.asarray(coeffs, dtype=complex)
    return ScatteringSolution(dimension, k, coeffs, len(coeffs) - 1, _tail_flag(coeffs))


def _effective_layers(config):
    """Drop trailing background layers and merge equal neighbours."""
    layers = list(config.layers)
    while len(layers) > 1 and layers[-1].is_background():
        layers.pop()
    merged = []
    for lay in layers:
        if merged and (merged[-1].eta, merged[-1].q) == (lay.eta, lay.q):
            merged[-1] = lay
        else:
            merged.append(lay)
    return merged


def _modal_stack(layers, k):
    return [(lay.outer_radius, complex(lay.eta), _modal.wavenumber(k, complex(lay.q) / complex(lay.eta)))
            for lay in layers]


def _check_k(k):
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")


def solve_layered(config: LayeredConfig, k: float, n_modes=None) -> ScatteringSolution:
    """Exact modal solution for concentric isotropic layers.

    Parameters
    ----------
    config : LayeredConfig
        Acoustic configuration, innermost layer first.
    k : float
        Background wavenumber.
    n_modes : int, optional
        Highest angular order ``N``; defaults to :func:`default_truncation`
        of the outermost non-background radius.

    Returns
    -------
    ScatteringSolution
    """
    _check_k(k)
    layers = _effective_layers(config)
    radius = config.scatterer_radius()
    nmax = default_truncation(k, radius) if n_modes is None else int(n_modes)
    if radius == 0:
        return _solution(config.dimension, k, np.zeros(nmax + 1))
    kind = KIND[config.dimension]
    state = _modal.propagate(kind, nmax, _modal_stack(layers, k))
    coeffs = _modal.exterior_coefficients(kind, nmax, k, layers[-1].outer_radius, state)
    return _solution(config.dimension, k, coeffs)


def solve_sound_hard(radius, dimension, k, n_modes=None) -> ScatteringSolution:
    """Neumann obstacle: ``a_m = -F'(kR) / G'(kR)``."""
    _check_k(k)
    nmax = default_truncation(k, radius) if n_modes is None else int(n_modes)
    x = k * radius
    _, df, _, dg = TABLES[KIND[dimension]](nmax, x)
    coeffs = -df / dg * np.exp(-1j * x)
    return _solution(dimension, k, coeffs)


# ---------------------------------------------------------------------------
# anisotropic radial media


def _integrate_shell(profile, dimension, k, ell, y0, rtol, atol):
    n = dimension
    a, b = profile.inner_radius, profile.outer_radius
    if np.real(profile.eta_r(a)) <= 0:
        a = a * (1 + 1e-8)
    m = len(ell)

    def rhs(r, y):
        u, w = y[:m], y[m:]
        rn = r ** (n - 1)
        du = w / (rn * profile.eta_r(r))
        dw = rn * (ell * profile.eta_t(r) / r**2 - k**2 * profile.q(r)) * u
        return np.concatenate([du, dw])

    sol = solve_ivp(rhs, (a, b), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise OdeStiffnessError(f"integration over [{a:g}, {b:g}] failed: {sol.message}",
                                interval=(a, b), nfev=sol.nfev)
    return sol.y[:, -1]


def solve_radial_anisotropic(medium, k, n_modes=None, rtol=1e-10, atol=1e-13) -> ScatteringSolution:
    """Scattering by an isotropic core wrapped in anisotropic radial shells.

    The core supplies analytic Cauchy data; the modal ODE
    ``(r^{n-1} eta_r u')' = r^{n-1} (L eta_t / r^2 - k^2 q) u`` with
    ``L = m^2`` (2D) or ``l(l+1)`` (3D) is then integrated through each shell
    with an adaptive Runge-Kutta scheme and matched to the exterior basis.

    Parameters
    ----------
    medium : PhysicalCloak or RadialMedium
        Anything exposing ``dimension``, ``core`` and ``shells()``.
    k : float
        Background wavenumber.
    n_modes : int, optional
        Highest order; defaults to the truncation rule at the outer radius.
    rtol, atol : float
        Integrator tolerances.
    """
    _check_k(k)
    n = medium.dimension
    kind = KIND[n]
    shells = medium.shells()
    core = medium.core
    radius = shells[-1].outer_radius if shells else core.outer_radius
    nmax = default_truncation(k, radius) if n_modes is None else int(n_modes)
    order = np.arange(nmax + 1)
    ell = order**2 if n == 2 else order * (order + 1)

    r0 = core.outer_radius
    kappa = _modal.wavenumber(k, complex(core.q) / complex(core.eta))
    u, v = _modal.core_state(kind, nmax, kappa, complex(core.eta), r0)
    y = np.concatenate([u, r0 ** (n - 1) * v])
    r_prev = r0
    for shell in shells:
        if not math.isclose(shell.inner_radius, r_prev, rel_tol=1e-12):
            raise InterfaceInconsistencyError(
                f"shell starts at {shell.inner_radius:g} but the previous region ends at {r_prev:g}")
        scale = np.maximum(np.abs(y[:nmax + 1]), np.abs(y[nmax + 1:]))
        y = y / np.tile(np.maximum(scale, 1e-300), 2)
        y = _integrate_shell(shell, n, k, ell, y, rtol, atol)
        r_prev = shell.outer_radius
    state = np.array([y[:nmax + 1], y[nmax + 1:] / r_prev ** (n - 1)])
    coeffs = _modal.exterior_coefficients(kind, nmax, k, r_prev, state)
    return _solution(n, k, coeffs)


# ---------------------------------------------------------------------------
# interior source


def solve_with_core_source(config: LayeredConfig, k: float, source_density, n_modes=None):
    """Field radiated by a constant source density ``h`` on the core ball.

    There is no incident wave.  Only the zeroth mode is excited; inside the
    core ``u = A F_0 + u_p`` with the particular solution ``u_p = -h/(k^2 q_a)``
    of ``div(eta grad u) + k^2 q u = -h``.  The returned coefficient ``a_0``
    multiplies the outgoing wave ``G_0(kr)``, so :func:`far_field` applies
    unchanged.
    """
    _check_k(k)
    h = complex(source_density)
    core = config.layers[0]
    if h != 0 and complex(core.q).imag <= 0:
        warnings.warn("source sits in a lossless core; the decay estimate does not apply",
                      UncloakedSourceWarning, stacklevel=2)
    layers = list(config.layers)
    while len(layers) > 1 and layers[-1].is_background():
        layers.pop()
    radius = layers[-1].outer_radius
    nmax = default_truncation(k, radius) if n_modes is None else int(n_modes)
    coeffs = np.zeros(nmax + 1, complex)
    if h == 0:
        return _solution(config.dimension, k, coeffs)

    kind = KIND[config.dimension]
    stack = _modal_stack(layers, k)
    r0, eta0, kappa0 = stack[0]
    sh = _modal.core_state(kind, 0, kappa0, eta0, r0)[:, 0]
    sp = np.array([-h / (k**2 * complex(core.q)), 0j])
    v = sh.copy()
    log_scale = 0j
    det = 1.0
    r_prev = r0
    for r_out, eta, kappa in stack[1:]:
        m, s = _modal.layer_transfer(kind, 0, kappa, eta, r_prev, r_out)
        v = m[:, :, 0] @ v
        log_scale += s
        det *= _modal.transfer_determinant(kind, r_prev, r_out)
        r_prev = r_out
    _, _, g, dg = TABLES[kind](0, k * r_prev)
    e = np.array([g[0], k * dg[0]])
    num = sh[0] * sp[1] - sh[1] * sp[0]
    den = v[0] * e[1] - v[1] * e[0]
    coeffs[0] = np.exp(-log_scale - 1j * k * r_prev) * det * num / den
    return _solution(config.dimension, k, coeffs)


# ---------------------------------------------------------------------------
# far field


def direction_grid(dimension, count=None):
    """Unit observation directions: uniform circle (360) or Fibonacci sphere (1000)."""
    if dimension == 2:
        count = 360 if count is None else count
        t = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    count = 1000 if count is None else count
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    phi = np.pi * (1 + 5**0.5) * i
    s = np.sqrt(1 - z**2)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def pattern(dimension, k, coeffs, cos_gamma):
    """Far-field pattern from modal coefficients at ``cos(angle(x, d))``."""
    c = np.clip(np.asarray(cos_gamma, dtype=float), -1.0, 1.0)
    order = np.arange(len(coeffs))
    if dimension == 2:
        gamma = np.arccos(c)
        weights = np.where(order == 0, 1.0, 2.0) * coeffs
        total = np.cos(np.multiply.outer(gamma, order)) @ weights
        return np.exp(-0.25j * np.pi) * np.sqrt(2 / (np.pi * k)) * total
    legendre = special.eval_legendre(order[None, :], c[..., None])
    return -1j / k * (legendre @ ((2 * order + 1) * coeffs))


def far_field(solution: ScatteringSolution, directions=None, incident=None) -> FarField:
    """Sample the far-field pattern.

    Parameters
    ----------
    solution : ScatteringSolution
    directions : (M, n) array, optional
        Unit observation directions; defaults to :func:`direction_grid`.
    incident : (n,) array, optional
        Unit incident direction, first axis by default.
    """
    n = solution.dimension
    x = direction_grid(n) if directions is None else np.atleast_2d(np.asarray(directions, float))
    d = np.eye(n)[0] if incident is None else np.asarray(incident, float)
    samples = pattern(n, solution.k, solution.coefficients, x @ d)
    sup = float(np.abs(samples).max()) if samples.size else 0.0
    return FarField(x, samples, sup)
