"""Builders for virtual and physical cloaking configurations.

A virtual configuration is a stack of concentric homogeneous layers
(:class:`LayeredConfig`).  The physical cloak obtained by pushing it through
the blow-up map is described by radial profiles (:class:`RadialProfile`).
"""

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    CoatTooThickError,
    ConfigError,
    EmRequires3DError,
    InvalidExponentError,
    OutsideCloakShellError,
    UnsupportedDomainError,
)
from .transform import MaterialTensor, RadialBlowupMap

SCHEMES = ("high_loss", "high_density", "general", "none")


@dataclass(frozen=True)
class Layer:
    """Homogeneous isotropic acoustic layer ``(eta, q)`` ending at ``outer_radius``."""

    outer_radius: float
    eta: complex = 1.0
    q: complex = 1.0

    def is_background(self):
        return self.eta == 1 and self.q == 1


@dataclass(frozen=True)
class EmLayer:
    """Homogeneous isotropic EM layer ``(epsilon, mu, sigma)``."""

    outer_radius: float
    epsilon: complex = 1.0
    mu: complex = 1.0
    sigma: float = 0.0

    def effective_permittivity(self, k):
        """``epsilon + i sigma / k`` (frequency and wavenumber coincide)."""
        return complex(self.epsilon) + 1j * self.sigma / k

    def is_background(self):
        return self.epsilon == 1 and self.mu == 1 and self.sigma == 0


@dataclass(frozen=True)
class LayeredConfig:
    """Concentric layers listed innermost first; the exterior is background."""

    dimension: int
    layers: tuple
    physics: str = "acoustic"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.dimension not in (2, 3):
            raise ConfigError("dimension must be 2 or 3")
        if self.physics not in ("acoustic", "em"):
            raise ConfigError(f"unknown physics {self.physics!r}")
        if self.physics == "em" and self.dimension != 3:
            raise EmRequires3DError("EM configurations are three-dimensional")
        if not self.layers:
            raise ConfigError("at least one layer is required")
        kind = EmLayer if self.physics == "em" else Layer
        radii = [lay.outer_radius for lay in self.layers]
        if any(not isinstance(lay, kind) for lay in self.layers):
            raise ConfigError(f"{self.physics} config needs {kind.__name__} entries")
        if radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigError(f"radii must be positive and strictly increasing: {radii}")

    @property
    def radii(self):
        return np.array([lay.outer_radius for lay in self.layers])

    def scatterer_radius(self):
        """Outer radius of the last non-background layer, or 0 if there is none."""
        for lay in reversed(self.layers):
            if not lay.is_background():
                return lay.outer_radius
        return 0.0


@dataclass(frozen=True)
class GeneralLossyParams:
    """Lossy layer ``eta = rho^r gamma``, ``q = (alpha + i beta) rho^q_exponent``.

    ``q_exponent = 0`` is the constant-coefficient layer; ``q_exponent = 1 - n``
    gives the physical-space scaling ``q~ = (alpha + i beta) rho``.
    """

    r_exponent: float
    gamma_scale: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    q_exponent: float = 0.0

    def __post_init__(self):
        if min(self.gamma_scale, self.alpha, self.beta) <= 0:
            raise ConfigError("gamma_scale, alpha and beta must be positive")

    def check(self, dimension):
        if self.r_exponent <= 2 - dimension / 2:
            raise InvalidExponentError(
                f"r = {self.r_exponent:g} must exceed 2 - n/2 = {2 - dimension / 2:g}")


@dataclass(frozen=True)
class RadialProfile:
    """Radially symmetric anisotropic medium on ``[inner_radius, outer_radius]``.

    ``eta_r``, ``eta_t`` and ``q`` are vectorized callables of the radius.
    """

    eta_r: Callable
    eta_t: Callable
    q: Callable
    inner_radius: float
    outer_radius: float

    @classmethod
    def constant(cls, inner_radius, outer_radius, eta=1.0, q=1.0):
        return cls(lambda r: np.full(np.shape(r), eta, dtype=complex),
                   lambda r: np.full(np.shape(r), eta, dtype=complex),
                   lambda r: np.full(np.shape(r), q, dtype=complex),
                   inner_radius, outer_radius)

    def tensor(self, x):
        """Cartesian :class:`MaterialTensor` at the point ``x``."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        if not self.inner_radius <= r <= self.outer_radius:
            raise UnsupportedDomainError(f"radius {r:g} outside the profile")
        e = x / r
        proj = np.outer(e, e)
        eta = (np.real(self.eta_r(r)) * proj
               + np.real(self.eta_t(r)) * (np.eye(len(x)) - proj))
        return MaterialTensor(eta, complex(self.q(r)))


@dataclass(frozen=True)
class PhysicalCloak:
    """Physical full cloak: isotropic core, lossy shell profile, cloak shell profile."""

    dimension: int
    core: Layer
    lossy: RadialProfile
    cloak: RadialProfile
    blowup: RadialBlowupMap

    def __iter__(self):
        # unpacks as (cloak, lossy, core)
        return iter((self.cloak, self.lossy, self.core))

    def shells(self):
        return (self.lossy, self.cloak)


@dataclass(frozen=True)
class RadialMedium:
    """Isotropic core ball followed by contiguous radial profiles."""

    dimension: int
    core: Layer
    profiles: tuple

    def shells(self):
        return tuple(self.profiles)


def radial_medium_from_config(config):
    """View an acoustic :class:`LayeredConfig` as constant radial profiles."""
    if config.physics != "acoustic":
        raise ConfigError("radial media are acoustic")
    layers = config.layers
    profiles = tuple(
        RadialProfile.constant(prev.outer_radius, lay.outer_radius, complex(lay.eta), complex(lay.q))
        for prev, lay in zip(layers, layers[1:]))
    return RadialMedium(config.dimension, layers[0], profiles)


def normalize_scheme(scheme):
    if isinstance(scheme, GeneralLossyParams):
        return scheme
    name = str(scheme).replace("-", "_")
    if name not in SCHEMES or name == "general":
        raise ConfigError(f"unknown scheme {scheme!r}; pass GeneralLossyParams for 'general'")
    return name


def lossy_layer_material(rho, dimension, scheme):
    """Virtual ``(eta_l, q_l)`` of the lossy shell for a scheme."""
    scheme = normalize_scheme(scheme)
    if isinstance(scheme, GeneralLossyParams):
        scheme.check(dimension)
        eta = rho**scheme.r_exponent * scheme.gamma_scale
        return eta, complex(scheme.alpha, scheme.beta) * rho**scheme.q_exponent
    if scheme == "high_loss":
        return 1.0, complex(1.0, rho**-2)
    if scheme == "high_density":
        return rho**2, complex(1.0, 1.0)
    return 1.0, complex(1.0)


def _check_rho(rho):
    if not 0 < rho <= 1:
        raise ConfigError(f"rho must lie in (0, 1], got {rho}")


def build_virtual_fullcloak(rho, dimension=2, scheme="high_loss", core=(1.0, 1.0),
                            r_inner=1.0, r_outer=2.0):
    """Core ball, lossy shell and vacuum out to ``r_outer`` in virtual space."""
    _check_rho(rho)
    eta_l, q_l = lossy_layer_material(rho, dimension, scheme)
    eta_a, q_a = core
    return LayeredConfig(dimension, (
        Layer(rho * r_inner / 2, eta_a, q_a),
        Layer(rho * r_inner, eta_l, q_l),
        Layer(r_outer, 1.0, 1.0),
    ))


def build_physical_fullcloak(rho, dimension=2, scheme="high_loss", core=(1.0, 1.0),
                             r_inner=1.0, r_outer=2.0):
    """Push the virtual full cloak through the linear blow-up map.

    The core and lossy shell are scaled by the interior branch ``x/rho``
    (``eta -> rho^(n-2) eta``, ``q -> rho^n q``).  The cloak shell is the image
    of the vacuum annulus.
    """
    _check_rho(rho)
    n = dimension
    fmap = RadialBlowupMap(rho, r_inner, r_outer, n)
    eta_l, q_l = lossy_layer_material(rho, n, scheme)
    eta_a, q_a = core
    scale_eta, scale_q = rho ** (n - 2), rho**n
    core_layer = Layer(r_inner / 2, eta_a * scale_eta, q_a * scale_q)
    lossy = RadialProfile.constant(r_inner / 2, r_inner, eta_l * scale_eta, q_l * scale_q)

    slope = fmap.slope

    def stretch(s):
        r = fmap.radial_inverse(s)
        return r, np.asarray(s, dtype=float) / r

    def eta_r(s):
        _, g = stretch(s)
        return slope / g ** (n - 1) + 0j

    def eta_t(s):
        _, g = stretch(s)
        return g ** (3 - n) / slope + 0j

    def q(s):
        _, g = stretch(s)
        return 1.0 / (slope * g ** (n - 1)) + 0j

    cloak = RadialProfile(eta_r, eta_t, q, r_inner, r_outer)
    return PhysicalCloak(n, core_layer, lossy, cloak, fmap)


def build_em_virtual(rho, core=(1.0, 1.0, 0.0), dimension=3, r_inner=1.0, r_outer=2.0):
    """Core sphere, conducting shell ``sigma = rho^-2`` and vacuum."""
    if dimension != 3:
        raise EmRequires3DError("EM cloaks are built in three dimensions only")
    _check_rho(rho)
    eps_a, mu_a, sigma_a = core
    return LayeredConfig(3, (
        EmLayer(rho * r_inner / 2, eps_a, mu_a, sigma_a),
        EmLayer(rho * r_inner, 1.0, 1.0, rho**-2),
        EmLayer(r_outer, 1.0, 1.0, 0.0),
    ), physics="em")


def electrostatic_cloak_tensor(r, theta):
    """Conductivity of the singular cloak in spherical coordinates ``(r, theta, phi)``."""
    if not (1 < r <= 2) or not (0 < theta < math.pi):
        raise OutsideCloakShellError(f"(r, theta) = ({r}, {theta}) outside 1 < r <= 2, 0 < theta < pi")
    s = math.sin(theta)
    return np.diag([2 * (r - 1) ** 2 * s, 2 * s, 2 / s])


def build_shrinking_obstacle_coat(rho, obstacle_radius=1.0, dimension=2, loss_scale=1.0):
    """Obstacle of radius ``R0`` wrapped in a thin high-density lossy coat.

    The placeholder core fills the ball of radius ``R0 + rho/2`` and the coat
    occupies ``[R0 + rho/2, R0 + rho]`` with ``eta = rho^2`` and
    ``q = 1 + i loss_scale / rho``.
    """
    r0 = obstacle_radius
    if not 0 < rho < r0:
        raise CoatTooThickError(f"coat thickness {rho} must be below R0 = {r0}")
    return LayeredConfig(dimension, (
        Layer(r0 + rho / 2, 1.0, 1.0),
        Layer(r0 + rho, rho**2, complex(1.0, loss_scale / rho)),
    ))


def shell_volume(dimension, r_a, r_b):
    if dimension == 2:
        return math.pi * (r_b**2 - r_a**2)
    return 4 * math.pi / 3 * (r_b**3 - r_a**3)


def layer_mass(config, index):
    """``integral of |q|`` over one layer."""
    lay = config.layers[index]
    r_a = config.layers[index - 1].outer_radius if index > 0 else 0.0
    return abs(lay.q) * shell_volume(config.dimension, r_a, lay.outer_radius)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    layer: int
    quantity: str
    value: float
    message: str


def validate_config(config, lam=None):
    """Check the regular conditions layer by layer.

    With ``lam=None`` only positivity and passivity are checked; otherwise the
    eigenvalue bounds ``[lam, 1/lam]`` are enforced too.  Returns the list of
    violations (empty when the configuration is admissible).
    """
    out = []
    lo = 0.0 if lam is None else lam
    hi = math.inf if lam is None else 1.0 / lam

    def bound(i, name, value, upper=True):
        ok = value > 0 if lam is None else lo <= value and (not upper or value <= hi)
        if not ok:
            out.append(Violation(i, name, value, f"layer {i}: {name} = {value:.6g} outside bounds"))

    for i, lay in enumerate(config.layers):
        if config.physics == "acoustic":
            eta, q = complex(lay.eta), complex(lay.q)
            if eta.imag != 0:
                out.append(Violation(i, "eta", eta.imag, f"layer {i}: eta must be real"))
            bound(i, "eta", eta.real)
            bound(i, "Re q", q.real, upper=False)
            if q.imag < 0:
                out.append(Violation(i, "Im q", q.imag, f"layer {i}: Im q < 0 (active medium)"))
        else:
            bound(i, "epsilon", complex(lay.epsilon).real)
            bound(i, "mu", complex(lay.mu).real)
            if lay.sigma < 0 or (lam is not None and lay.sigma > hi):
                out.append(Violation(i, "sigma", lay.sigma, f"layer {i}: sigma = {lay.sigma:.6g} outside bounds"))
    return out


def regular_constant(config):
    """Largest ``lam`` for which every layer satisfies the regular conditions (0 if none)."""
    if validate_config(config):
        return 0.0
    vals = []
    for lay in config.layers:
        if config.physics == "acoustic":
            e = complex(lay.eta).real
            vals += [e, 1 / e, complex(lay.q).real]
        else:
            for v in (complex(lay.epsilon).real, complex(lay.mu).real):
                vals += [v, 1 / v]
            if lay.sigma > 0:
                vals.append(1 / lay.sigma)
    return min(1.0, min(vals))


# ---------------------------------------------------------------------------
# serialization


def _num(v):
    v = complex(v)
    # keep [re, im] for -0.0 so the sign bit survives
    return v.real if v.imag == 0 and not math.copysign(1.0, v.imag) < 0 else [v.real, v.imag]


def _complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex value must be [re, im], got {v}")
        return complex(float(v[0]), float(v[1]))
    return float(v)


def config_to_dict(config):
    if config.physics == "acoustic":
        layers = [{"outer_radius": lay.outer_radius, "eta": _num(lay.eta), "q": _num(lay.q)}
                  for lay in config.layers]
    else:
        layers = [{"outer_radius": lay.outer_radius, "epsilon": _num(lay.epsilon),
                   "mu": _num(lay.mu), "sigma": lay.sigma} for lay in config.layers]
    return {"dimension": config.dimension, "physics": config.physics, "layers": layers}


def config_from_dict(data):
    try:
        physics = data.get("physics", "acoustic")
        layers = []
        for item in data["layers"]:
            if physics == "em":
                layers.append(EmLayer(float(item["outer_radius"]), _complex(item.get("epsilon", 1.0)),
                                      _complex(item.get("mu", 1.0)), float(item.get("sigma", 0.0))))
            else:
                layers.append(Layer(float(item["outer_radius"]), _complex(item.get("eta", 1.0)),
                                    _complex(item.get("q", 1.0))))
        return LayeredConfig(int(data["dimension"]), tuple(layers), physics)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc


def dumps_config(config, indent=2):
    """JSON text; floats use the shortest repr so a reload is bit-exact."""
    return json.dumps(config_to_dict(config), indent=indent)


def loads_config(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return config_from_dict(data)
