"""Complex-argument cylindrical and spherical wave functions.

Values come from the AMOS routines wrapped by :mod:`scipy.special`, always in
their exponentially scaled form.  The modal solvers work with the scaled
tables directly so that strongly absorbing layers (``Im z`` in the hundreds)
never overflow:

* regular functions (``J_m``, ``j_n``, ``psi_n``) are stored as
  ``value * exp(-Im z)``;
* outgoing functions (``H_m``, ``h_n``, ``xi_n``) are stored as
  ``value * exp(-1j * z)``.

Derivatives are formed from the order recurrences
``2 C_m' = C_{m-1} - C_{m+1}`` (cylindrical) and
``(2n+1) c_n' = n c_{n-1} - (n+1) c_{n+1}`` (spherical), which avoid any
division by ``z``.

Arguments are restricted to the closed upper half-plane minus the negative
real axis; every wavenumber produced by a passive (lossy) medium lies there.
"""

import functools
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import SingularArgumentError, UnsupportedDomainError

MAX_ORDER = 200
MAX_MODULUS = 1.0e4


@dataclass(frozen=True)
class WaveFunctionValue:
    """A wave function and its derivative with respect to the argument."""

    value: complex
    derivative: complex


def _check(order, z, allow_zero=True):
    if int(order) != order or order < 0 or order > MAX_ORDER:
        raise UnsupportedDomainError(f"order must be an integer in [0, {MAX_ORDER}], got {order}")
    z = complex(z)
    if not np.isfinite(z.real) or not np.isfinite(z.imag):
        raise UnsupportedDomainError("argument must be finite")
    if abs(z) > MAX_MODULUS:
        raise UnsupportedDomainError(f"|z| > {MAX_MODULUS:g} is not supported")
    if z.imag < 0:
        raise UnsupportedDomainError("argument must lie in the closed upper half-plane")
    if z.imag == 0 and z.real < 0:
        raise UnsupportedDomainError("negative real axis is a branch cut")
    if z == 0 and not allow_zero:
        raise SingularArgumentError("function is singular at z = 0")
    return int(order), z


def _quiet(fn):
    # overflow is reported through _finite, not as a RuntimeWarning
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(over="ignore", invalid="ignore"):
            return fn(*args, **kwargs)
    return wrapper


def _finite(value, derivative, name):
    if not (np.isfinite(value) and np.isfinite(derivative)):
        raise UnsupportedDomainError(f"{name} over/underflows at this order and argument")
    return WaveFunctionValue(complex(value), complex(derivative))


# ---------------------------------------------------------------------------
# scaled tables (orders 0..nmax), used by the solvers


def cylindrical_table(nmax, z):
    """Scaled ``(J, J', H, H')`` for orders ``0..nmax`` at one argument."""
    z = complex(z)
    m = np.arange(-1, nmax + 2)
    if z == 0:
        jh = np.where(m == 0, 1.0, 0.0).astype(complex)
        dj = np.zeros(nmax + 1, complex)
        if nmax >= 1:
            dj[1] = 0.5
        inf = np.full(nmax + 1, np.inf + 0j)
        return jh[1:-1], dj, inf, inf
    j = special.jve(m, z)
    h = special.hankel1e(m, z)
    # J_{-1} = -J_1 and H_{-1} = -H_1 for integer order; jve/hankel1e handle it.
    dj = 0.5 * (j[:-2] - j[2:])
    dh = 0.5 * (h[:-2] - h[2:])
    return j[1:-1], dj, h[1:-1], dh


def spherical_table(nmax, z):
    """Scaled ``(j, j', h, h')`` for orders ``0..nmax`` at one argument."""
    z = complex(z)
    n = np.arange(0, nmax + 2)
    if z == 0:
        j = np.where(n == 0, 1.0, 0.0).astype(complex)
        dj = np.zeros(nmax + 1, complex)
        if nmax >= 1:
            dj[1] = 1.0 / 3.0
        inf = np.full(nmax + 1, np.inf + 0j)
        return j[:-1], dj, inf, inf
    pref = np.sqrt(np.pi / (2.0 * z))
    j = pref * special.jve(n + 0.5, z)
    h = pref * special.hankel1e(n + 0.5, z)
    nn = n[:-1]
    # j_{-1} = cos z / z and h_{-1} = e^{iz} / z, scaled; only ever multiplied by n = 0.
    cos_scaled = 0.5 * (np.exp(1j * z.real - 2 * z.imag) + np.exp(-1j * z.real))
    jm1 = np.concatenate(([cos_scaled / z], j[:-2]))
    hm1 = np.concatenate(([1.0 / z], h[:-2]))
    dj = (nn * jm1 - (nn + 1) * j[1:]) / (2 * nn + 1)
    dh = (nn * hm1 - (nn + 1) * h[1:]) / (2 * nn + 1)
    return j[:-1], dj, h[:-1], dh


def riccati_table(nmax, z):
    """Scaled ``(psi, psi', xi, xi')`` for orders ``0..nmax``."""
    z = complex(z)
    j, dj, h, dh = spherical_table(nmax, z)
    if z == 0:
        psi = np.zeros(nmax + 1, complex)
        dpsi = j.copy()
        return psi, dpsi, np.full(nmax + 1, np.inf + 0j), np.full(nmax + 1, np.inf + 0j)
    return z * j, j + z * dj, z * h, h + z * dh


TABLES = {"cyl": cylindrical_table, "sph": spherical_table, "ric": riccati_table}


def wronskian(kind, z):
    """``F G' - F' G`` for the (regular, outgoing) pair of ``kind``; unscaled."""
    if kind == "cyl":
        return 2j / (np.pi * z)
    if kind == "sph":
        return 1j / z**2
    return 1j


# ---------------------------------------------------------------------------
# pointwise public API


@_quiet
def bessel_j(order, z):
    order, z = _check(order, z)
    j, dj, _, _ = cylindrical_table(order, z)
    s = np.exp(z.imag)
    return _finite(j[order] * s, dj[order] * s, "J")


@_quiet
def bessel_y(order, z):
    order, z = _check(order, z, allow_zero=False)
    m = np.arange(-1, order + 2)
    y = special.yve(m, z) * np.exp(z.imag)
    return _finite(y[order + 1], 0.5 * (y[order] - y[order + 2]), "Y")


@_quiet
def hankel1(order, z):
    order, z = _check(order, z, allow_zero=False)
    _, _, h, dh = cylindrical_table(order, z)
    s = np.exp(1j * z)
    return _finite(h[order] * s, dh[order] * s, "H1")


@_quiet
def spherical_jn(order, z):
    order, z = _check(order, z)
    j, dj, _, _ = spherical_table(order, z)
    s = np.exp(z.imag)
    return _finite(j[order] * s, dj[order] * s, "j")


@_quiet
def spherical_hn1(order, z):
    order, z = _check(order, z, allow_zero=False)
    _, _, h, dh = spherical_table(order, z)
    s = np.exp(1j * z)
    return _finite(h[order] * s, dh[order] * s, "h1")


@_quiet
def riccati_pair(order, z):
    """Return ``(psi, xi)`` with ``psi_n = z j_n(z)`` and ``xi_n = z h_n(z)``."""
    order, z = _check(order, z, allow_zero=False)
    psi, dpsi, xi, dxi = riccati_table(order, z)
    sr, so = np.exp(z.imag), np.exp(1j * z)
    return (_finite(psi[order] * sr, dpsi[order] * sr, "psi"),
            _finite(xi[order] * so, dxi[order] * so, "xi"))
