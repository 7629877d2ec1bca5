"""Per-mode radial transfer through concentric homogeneous layers.

Each mode is carried as the state ``(u, w)`` with ``w = eta * du/dr``; both
components are continuous across every interface.  Inside a homogeneous layer
the fundamental matrix is built from a (regular, outgoing) pair ``F, G`` of
radial functions of ``kappa * r`` (see :mod:`nearcloak.specfun` for the three
kinds).  The layer transfer matrix ``M = Phi(r_b) Phi(r_a)^{-1}`` is assembled
from exponentially scaled values as ``M = exp(s) * M_hat`` where ``M_hat`` is
bounded for any absorption and ``s`` is a complex log-scale shared by all
orders.  ``det M = W(kappa r_b) / W(kappa r_a)`` depends only on the radii,
which the source solve uses instead of forming ``det M_hat`` numerically.
"""

import numpy as np

from .errors import EvanescentOverflowError, ModalSingularityError
from .specfun import TABLES, wronskian

SINGULAR_RTOL = 1e-13


def wavenumber(k, ratio):
    """``k * sqrt(ratio)`` on the branch with nonnegative imaginary part."""
    kappa = k * np.sqrt(complex(ratio))
    if kappa.imag < 0 or (kappa.imag == 0 and kappa.real < 0):
        kappa = -kappa
    return kappa


def core_state(kind, nmax, kappa, eta, radius):
    """Scaled state of the regular solution at the core boundary."""
    f, df, _, _ = TABLES[kind](nmax, kappa * radius)
    return np.array([f, eta * kappa * df])


def layer_transfer(kind, nmax, kappa, eta, r_a, r_b):
    """Return ``(M_hat, s)`` with shape ``(2, 2, nmax+1)`` for one layer."""
    za, zb = kappa * r_a, kappa * r_b
    fa, dfa, ga, dga = TABLES[kind](nmax, za)
    fb, dfb, gb, dgb = TABLES[kind](nmax, zb)
    dz = zb - za
    tau = np.exp(1j * dz - dz.imag)
    ek = eta * kappa
    m = np.empty((2, 2, nmax + 1), complex)
    m[0, 0] = fb * dga - tau * gb * dfa
    m[0, 1] = (tau * gb * fa - fb * ga) / ek
    m[1, 0] = ek * (dfb * dga - tau * dgb * dfa)
    m[1, 1] = tau * dgb * fa - dfb * ga
    s = zb.imag + 1j * za - np.log(wronskian(kind, za))
    if not np.all(np.isfinite(m)):
        raise EvanescentOverflowError(
            f"layer [{r_a:g}, {r_b:g}] transfer overflows (kappa={kappa:.6g})")
    return m, s


def apply(m, state):
    return np.einsum("ijn,jn->in", m, state)


def propagate(kind, nmax, layers):
    """Propagate the regular core solution outward through ``layers``.

    ``layers`` is a list of ``(outer_radius, eta, kappa)`` innermost first.
    Returns the (projectively normalized) state at the outermost radius.
    """
    r0, eta0, kappa0 = layers[0]
    state = core_state(kind, nmax, kappa0, eta0, r0)
    r_prev = r0
    for r_out, eta, kappa in layers[1:]:
        m, _ = layer_transfer(kind, nmax, kappa, eta, r_prev, r_out)
        state = apply(m, state)
        state /= np.maximum(np.abs(state).max(axis=0), 1e-300)
        r_prev = r_out
    return state


def exterior_coefficients(kind, nmax, k, radius, state, modes=None):
    """Outgoing coefficient ``a`` in ``u = F(kr) + a G(kr)`` matching ``state``."""
    x = k * radius
    f, df, g, dg = TABLES[kind](nmax, x)
    u, w = state
    num = k * u * df - w * f
    den = w * g - k * u * dg
    scale = np.abs(w * g) + np.abs(k * u * dg)
    bad = np.abs(den) <= SINGULAR_RTOL * scale
    if np.any(bad):
        idx = np.flatnonzero(bad)[0]
        mode = int(idx if modes is None else modes[idx])
        raise ModalSingularityError(mode=mode)
    # F is unscaled for real x; G carries exp(i x).
    return num / den * np.exp(-1j * x) * np.exp(complex(x).imag)


def transfer_determinant(kind, r_a, r_b):
    if kind == "cyl":
        return r_a / r_b
    if kind == "sph":
        return (r_a / r_b) ** 2
    return 1.0
