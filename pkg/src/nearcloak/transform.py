"""Radial blow-up maps and the push-forward of acoustic and EM media.

The blow-up map ``F_rho`` expands the small ball of radius ``rho * r_inner``
onto the cloaked ball of radius ``r_inner`` and squeezes the rest of the
ball of radius ``r_outer`` onto the annulus between them, leaving the outer
sphere fixed:

* inside ``|x| < rho * r_inner``: ``F(x) = x / rho``;
* on the annulus: ``F(x) = f(|x|) x / |x|`` with the linear radial stretch
  ``f(r) = r_inner + (r - rho r_inner)(r_outer - r_inner)/(r_outer - rho r_inner)``.

As ``rho -> 0`` with ``r_inner=1, r_outer=2`` this becomes the singular map
``x -> (|x|/2 + 1) x/|x|`` of the classical cloaking construction.

All tensors are stored in Cartesian components.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateMapError,
    NonSmoothPointError,
    OutsideDomainError,
    UnsupportedDomainError,
)

_EDGE_RTOL = 1e-12


@dataclass(frozen=True)
class RadialBlowupMap:
    rho: float
    r_inner: float = 1.0
    r_outer: float = 2.0
    dimension: int = 2

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise UnsupportedDomainError(f"rho must lie in (0, 1], got {self.rho}")
        if not 0 < self.r_inner < self.r_outer:
            raise UnsupportedDomainError("need 0 < r_inner < r_outer")
        if self.dimension not in (2, 3):
            raise UnsupportedDomainError("dimension must be 2 or 3")

    @property
    def break_radius(self):
        """Radius of the small ball that is blown up (``rho * r_inner``)."""
        return self.rho * self.r_inner

    @property
    def slope(self):
        """Constant radial derivative of the annulus branch."""
        return (self.r_outer - self.r_inner) / (self.r_outer - self.break_radius)

    def radial(self, r):
        """Radial profile ``|F(x)|`` as a function of ``r = |x|``."""
        r = np.asarray(r, dtype=float)
        inner = r / self.rho
        outer = self.r_inner + (r - self.break_radius) * self.slope
        return np.where(r < self.break_radius, inner, outer)

    def radial_derivative(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.break_radius, 1.0 / self.rho, self.slope)

    def radial_inverse(self, s):
        """Inverse of :meth:`radial`: virtual radius for a physical radius."""
        s = np.asarray(s, dtype=float)
        inner = s * self.rho
        outer = self.break_radius + (s - self.r_inner) / self.slope
        return np.where(s < self.r_inner, inner, outer)


def _point(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise UnsupportedDomainError(f"expected a point of shape ({dim},), got {x.shape}")
    return x


def eval_map(fmap, x):
    """Apply the blow-up map to a virtual point."""
    x = _point(x, fmap.dimension)
    r = np.linalg.norm(x)
    if r > fmap.r_outer * (1 + _EDGE_RTOL):
        raise OutsideDomainError(f"|x| = {r:g} exceeds r_outer = {fmap.r_outer:g}")
    if r == 0:
        return x.copy()
    return fmap.radial(r) * x / r


def inverse_map(fmap, y):
    """Preimage of a physical point under the blow-up map."""
    y = _point(y, fmap.dimension)
    s = np.linalg.norm(y)
    if s > fmap.r_outer * (1 + _EDGE_RTOL):
        raise OutsideDomainError(f"|y| = {s:g} exceeds r_outer = {fmap.r_outer:g}")
    if s == 0:
        return y.copy()
    return fmap.radial_inverse(s) * y / s


def eval_jacobian(fmap, x):
    """Analytic Jacobian ``DF(x)`` in Cartesian components.

    In the radial frame it is ``diag(f'(r), f(r)/r, ...)``.
    """
    x = _point(x, fmap.dimension)
    r = np.linalg.norm(x)
    if r > fmap.r_outer * (1 + _EDGE_RTOL):
        raise OutsideDomainError(f"|x| = {r:g} exceeds r_outer = {fmap.r_outer:g}")
    if abs(r - fmap.break_radius) <= _EDGE_RTOL * fmap.break_radius:
        raise NonSmoothPointError("the map is not differentiable on the inner interface")
    eye = np.eye(fmap.dimension)
    if r < fmap.break_radius:
        return eye / fmap.rho
    e = x / r
    radial = np.outer(e, e)
    return fmap.slope * radial + (fmap.radial(r) / r) * (eye - radial)


def jacobian_determinant(fmap, r):
    """``det DF`` as a function of the virtual radius."""
    r = np.asarray(r, dtype=float)
    n = fmap.dimension
    return fmap.radial_derivative(r) * (fmap.radial(r) / r) ** (n - 1)


# ---------------------------------------------------------------------------
# media


@dataclass(frozen=True)
class MaterialTensor:
    """Acoustic medium at a point: ``eta`` (inverse density tensor) and modulus ``q``."""

    eta: np.ndarray
    q: complex

    def __post_init__(self):
        eta = np.atleast_2d(np.asarray(self.eta, dtype=float))
        if eta.shape[0] != eta.shape[1]:
            raise UnsupportedDomainError("eta must be square")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "q", complex(self.q))

    @classmethod
    def isotropic(cls, dimension, eta=1.0, q=1.0):
        return cls(eta * np.eye(dimension), q)

    def regular_violation(self, lam):
        """Describe how the regular conditions with constant ``lam`` fail, or None."""
        if not np.allclose(self.eta, self.eta.T):
            return "eta is not symmetric"
        ev = np.linalg.eigvalsh(self.eta)
        if ev.min() < lam or ev.max() > 1.0 / lam:
            return f"eta eigenvalue outside [{lam:g}, {1 / lam:g}]: {ev.min():.6g}..{ev.max():.6g}"
        if self.q.real < lam or self.q.imag < 0:
            return f"q = {self.q} violates Re q >= {lam:g}, Im q >= 0"
        return None

    def is_regular(self, lam):
        return self.regular_violation(lam) is None


@dataclass(frozen=True)
class EmMaterial:
    """Permittivity, permeability and conductivity tensors at a point."""

    epsilon: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        for name in ("epsilon", "mu", "sigma"):
            m = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if m.shape != (3, 3):
                raise UnsupportedDomainError(f"{name} must be 3x3")
            object.__setattr__(self, name, m)

    @classmethod
    def isotropic(cls, epsilon=1.0, mu=1.0, sigma=0.0):
        eye = np.eye(3)
        return cls(epsilon * eye, mu * eye, sigma * eye)

    def regular_violation(self, lam):
        for name in ("epsilon", "mu"):
            ev = np.linalg.eigvalsh(getattr(self, name))
            if ev.min() < lam or ev.max() > 1.0 / lam:
                return f"{name} eigenvalue outside [{lam:g}, {1 / lam:g}]"
        ev = np.linalg.eigvalsh(self.sigma)
        if ev.min() < -1e-14 or ev.max() > 1.0 / lam:
            return f"sigma eigenvalues outside [0, {1 / lam:g}]"
        return None


def push_tensor(tensor, jac):
    """``DF m DF^T / |det DF|``; the rule shared by eta, epsilon, mu and sigma."""
    det = np.linalg.det(jac)
    if not np.isfinite(det) or abs(det) < 1e-300:
        raise DegenerateMapError("Jacobian is not invertible")
    return jac @ tensor @ jac.T / abs(det)


def _resolve(value, x):
    return value(x) if callable(value) else value


def push_forward_acoustic(material, source, fmap, x_physical):
    """Physical ``(MaterialTensor, source)`` at ``x_physical``.

    ``material`` and ``source`` describe the virtual medium; either may be a
    callable of the virtual point, evaluated at ``F^{-1}(x_physical)``.
    """
    x = inverse_map(fmap, x_physical)
    mat = _resolve(material, x)
    h = complex(_resolve(source, x))
    jac = eval_jacobian(fmap, x)
    det = abs(np.linalg.det(jac))
    eta = push_tensor(mat.eta, jac)
    return MaterialTensor(eta, mat.q / det), h / det


def push_forward_em(material, current, fmap, x_physical):
    """Physical ``(EmMaterial, current)``; the current maps by ``DF J / |det DF|``."""
    if fmap.dimension != 3:
        raise UnsupportedDomainError("EM push-forward needs a 3D map")
    x = inverse_map(fmap, x_physical)
    mat = _resolve(material, x)
    j = np.asarray(_resolve(current, x), dtype=complex)
    jac = eval_jacobian(fmap, x)
    det = abs(np.linalg.det(jac))
    pushed = EmMaterial(*(push_tensor(m, jac) for m in (mat.epsilon, mat.mu, mat.sigma)))
    return pushed, jac @ j / det


# ---------------------------------------------------------------------------
# fields


def push_forward_scalar(field, fmap, x_physical):
    """Physical field ``u(F^{-1}(x~))`` from a virtual sampler ``u``."""
    return field(inverse_map(fmap, x_physical))


def pull_back_scalar(field, fmap, x_virtual):
    """Virtual field ``u~(F(x))`` from a physical sampler ``u~``."""
    return field(eval_map(fmap, x_virtual))


def push_forward_vector(field, fmap, x_physical):
    """Physical EM field ``DF^{-T} E`` at ``F^{-1}(x~)`` from a virtual sampler ``E``."""
    x = inverse_map(fmap, x_physical)
    jac = eval_jacobian(fmap, x)
    return np.linalg.solve(jac.T, np.asarray(field(x), dtype=complex))


def pull_back_vector(field, fmap, x_virtual):
    """Virtual EM field ``DF^T E~(F(x))`` from a physical sampler ``E~``."""
    jac = eval_jacobian(fmap, x_virtual)
    return jac.T @ np.asarray(field(eval_map(fmap, x_virtual)), dtype=complex)
