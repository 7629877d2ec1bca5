"""Experiment drivers: rho sweeps, rate fits, resonance search, limit checks."""

import csv
import hashlib
import io
import json
import time
from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np

from . import __version__
from .acoustic import (
    default_truncation,
    direction_grid,
    far_field,
    solve_layered,
    solve_radial_anisotropic,
    solve_sound_hard,
    solve_with_core_source,
)
from .em import em_far_field, mie_layered_sphere
from .errors import ConfigError, InsufficientDataError, ModalSingularityError, NearCloakError
from .materials import (
    GeneralLossyParams,
    build_em_virtual,
    build_physical_fullcloak,
    build_shrinking_obstacle_coat,
    build_virtual_fullcloak,
    normalize_scheme,
)

DEFAULT_RHOS = (0.1, 0.05, 0.025, 0.0125)
CSV_COLUMNS = ("rho", "sup_far_field", "n_modes", "flags", "wall_ms")


@dataclass(frozen=True)
class SweepRow:
    rho: float
    sup_far_field: float
    per_mode_max: tuple
    n_modes: int
    flags: str
    wall_ms: float

    @property
    def ok(self):
        return self.flags in ("ok", "tail")


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    metadata: dict = field(default_factory=dict)

    def rhos(self):
        return np.array([r.rho for r in self.rows])

    def sup_norms(self):
        return np.array([r.sup_far_field for r in self.rows])


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points_used: int


def _jsonable(value):
    if is_dataclass(value):
        return {k: _jsonable(v) for k, v in asdict(value).items()}
    if isinstance(value, complex):
        return [value.real, value.imag] if value.imag else value.real
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    return value


def content_hash(obj):
    """Git blob hash of the canonical JSON encoding of ``obj``."""
    data = json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _scheme_label(scheme):
    return "general" if isinstance(scheme, GeneralLossyParams) else str(scheme).replace("-", "_")


def _solve_row(rho, scheme, dimension, k, core, n_modes, source_density):
    if _scheme_label(scheme) == "em_conducting":
        sol = mie_layered_sphere(build_em_virtual(rho, core or (1.0, 1.0, 0.0), dimension), k, n_modes)
        ff = em_far_field(sol)
        per_mode = np.maximum(np.abs(sol.tm_coefficients), np.abs(sol.te_coefficients))
        return ff.sup_norm, per_mode, sol.truncation, sol.tail_warning
    config = build_virtual_fullcloak(rho, dimension, scheme, core or (1.0, 1.0))
    if source_density is None:
        sol = solve_layered(config, k, n_modes)
    else:
        sol = solve_with_core_source(config, k, source_density, n_modes)
    ff = far_field(sol)
    return ff.sup_norm, np.abs(sol.coefficients), sol.truncation, sol.tail_warning


def sweep_rho(scheme, dimension=2, k=1.0, core=None, rho_list=DEFAULT_RHOS, n_modes=None,
              source_density=None, seed=None, deterministic=False) -> SweepResult:
    """Solve the virtual full cloak for each ``rho`` and record far-field sup norms.

    Parameters
    ----------
    scheme : str or GeneralLossyParams
        ``"high_loss"``, ``"high_density"``, ``"none"``, ``"em_conducting"`` or
        general-layer parameters.
    dimension : int
    k : float
    core : tuple, optional
        ``(eta_a, q_a)`` for acoustics, ``(epsilon_a, mu_a, sigma_a)`` for EM.
    rho_list : sequence of float
        Values in ``(0, 1)``; rows are emitted in descending order.
    n_modes : int, optional
        Truncation override.
    source_density : complex, optional
        Replace the incident wave by a constant core source.
    seed : int, optional
        Recorded in the metadata; the sweep itself is deterministic.
    deterministic : bool
        Record ``wall_ms = 0`` so repeated runs are byte-identical.

    Solver failures are recorded in the row ``flags`` and the sweep continues.
    """
    if isinstance(scheme, GeneralLossyParams):
        scheme.check(dimension)
    elif _scheme_label(scheme) != "em_conducting":
        scheme = normalize_scheme(scheme)
    rhos = sorted((float(r) for r in rho_list), reverse=True)
    if not rhos or any(not 0 < r < 1 for r in rhos):
        raise ConfigError(f"rho values must lie in (0, 1): {rho_list}")
    rows = []
    for rho in rhos:
        start = time.perf_counter()
        try:
            sup, per_mode, nmax, tail = _solve_row(rho, scheme, dimension, k, core, n_modes, source_density)
            flags = "tail" if tail else "ok"
        except NearCloakError as exc:
            sup, per_mode, nmax, flags = float("nan"), np.array([]), -1, exc.code
        wall = 0.0 if deterministic else (time.perf_counter() - start) * 1e3
        rows.append(SweepRow(rho, float(sup), tuple(float(v) for v in per_mode), int(nmax), flags, wall))
    settings = {
        "scheme": _scheme_label(scheme),
        "general": scheme if isinstance(scheme, GeneralLossyParams) else None,
        "dimension": dimension,
        "k": k,
        "core": list(core) if core is not None else None,
        "rho": rhos,
        "n_modes": n_modes,
        "source_density": source_density,
        "seed": seed,
    }
    meta = dict(_jsonable(settings), version=__version__, config_hash=content_hash(settings))
    return SweepResult(tuple(rows), meta)


def fit_rate(sweep, values=None) -> RateFit:
    """Least-squares slope of ``log(sup)`` against ``log(rho)``.

    Accepts a :class:`SweepResult`, or two arrays ``(rhos, values)``.
    """
    if values is None:
        pairs = [(r.rho, r.sup_far_field) for r in sweep.rows if r.ok]
    else:
        pairs = list(zip(np.asarray(sweep, float), np.asarray(values, float)))
    pairs = [(r, v) for r, v in pairs if np.isfinite(v) and v > 1e-14 and r > 0]
    if len(pairs) < 3:
        raise InsufficientDataError(f"need at least 3 usable points, got {len(pairs)}")
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    (slope, intercept), *_ = np.linalg.lstsq(np.column_stack([x, np.ones_like(x)]), y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else float(np.clip(1 - np.sum(resid**2) / ss_tot, 0.0, 1.0))
    return RateFit(float(slope), float(intercept), r2, len(pairs))


# ---------------------------------------------------------------------------
# cloak busting


@dataclass(frozen=True)
class ResonanceResult:
    rho: float
    no_layer_q: float
    no_layer_sup: float
    with_layer_q: float
    with_layer_sup: float
    baseline_sup: float
    evaluations: int

    @property
    def ratio(self):
        return self.no_layer_sup / self.with_layer_sup


def _busting_sup(rho, dimension, k, scheme, eta_core, q_core, directions):
    config = build_virtual_fullcloak(rho, dimension, scheme, (eta_core, q_core))
    sol = solve_layered(config, k)
    return far_field(sol, directions).sup_norm


def _maximize(fn, lo, hi, steps, levels, zoom):
    best_q, best_v, count = lo, -np.inf, 0
    for _ in range(levels):
        grid = np.linspace(lo, hi, steps)
        vals = np.empty(steps)
        for i, q in enumerate(grid):
            try:
                vals[i] = fn(q)
            except ModalSingularityError:
                # exact resonance; look just beside it
                try:
                    vals[i] = fn(q * (1 + 1e-9))
                except ModalSingularityError:
                    vals[i] = np.inf
            count += 1
        i = int(np.argmax(vals))
        if vals[i] > best_v:
            best_q, best_v = float(grid[i]), float(vals[i])
        half = (hi - lo) / (2 * zoom)
        lo, hi = max(lo, best_q - half), min(hi, best_q + half)
    return best_q, best_v, count


def resonance_search(rho, dimension=2, k=1.0, q_range=(1.0, 2000.0), steps=400,
                     eta_core=1.0, levels=3, zoom=10.0) -> ResonanceResult:
    """Worst-case core modulus with and without the high-loss layer.

    The core ``q_a`` is scanned over ``q_range``; each scan is refined
    ``levels - 1`` times on a window ``zoom`` times narrower around the
    running maximizer.
    """
    lo, hi = map(float, q_range)
    if not 0 < lo < hi:
        raise ConfigError(f"q_range must be a positive interval, got {q_range}")
    directions = direction_grid(dimension)

    def make(scheme):
        return lambda q: _busting_sup(rho, dimension, k, scheme, eta_core, q, directions)

    q0, v0, n0 = _maximize(make("none"), lo, hi, steps, levels, zoom)
    q1, v1, n1 = _maximize(make("high_loss"), lo, hi, steps, levels, zoom)
    baseline = make("high_loss")(1.0)
    return ResonanceResult(rho, q0, v0, q1, v1, baseline, n0 + n1 + 1)


# ---------------------------------------------------------------------------
# limit and invariance checks


@dataclass(frozen=True)
class NeumannResult:
    rhos: tuple
    errors: tuple
    reference_sup: float

    @property
    def strictly_decreasing(self):
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))

    @property
    def reduction(self):
        return self.errors[-1] / self.errors[0]


def neumann_limit_check(obstacle_radius=1.0, dimension=2, k=1.0, rho_list=(0.2, 0.1, 0.05, 0.025),
                        loss_scale=1.0) -> NeumannResult:
    """Sup-norm far-field distance between coated balls and the sound-hard ball."""
    directions = direction_grid(dimension)
    nmax = default_truncation(k, obstacle_radius + max(rho_list))
    ref = far_field(solve_sound_hard(obstacle_radius, dimension, k, nmax), directions)
    errors = []
    for rho in rho_list:
        config = build_shrinking_obstacle_coat(rho, obstacle_radius, dimension, loss_scale)
        coated = far_field(solve_layered(config, k, nmax), directions)
        errors.append(float(np.abs(coated.samples - ref.samples).max()))
    return NeumannResult(tuple(rho_list), tuple(errors), ref.sup_norm)


def invariance_check(rho, dimension=2, k=1.0, scheme="high_density", core=(1.0, 1.0),
                     rtol=1e-10, atol=1e-13):
    """Relative sup-norm gap between the physical ODE solve and the virtual solve."""
    virtual = build_virtual_fullcloak(rho, dimension, scheme, core)
    physical = build_physical_fullcloak(rho, dimension, scheme, core)
    sol_p = solve_radial_anisotropic(physical, k, rtol=rtol, atol=atol)
    sol_v = solve_layered(virtual, k, sol_p.truncation)
    directions = direction_grid(dimension)
    fv = far_field(sol_v, directions).samples
    fp = far_field(sol_p, directions).samples
    ref = np.abs(fv).max()
    gap = np.abs(fv - fp).max()
    # absolute gap when the virtual body does not scatter at all
    return float(gap / ref) if ref > 0 else float(gap)


# ---------------------------------------------------------------------------
# output


def _fmt(value):
    return format(value, ".17g")


def sweep_to_csv(sweep) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in sweep.rows:
        writer.writerow([_fmt(row.rho), _fmt(row.sup_far_field), row.n_modes, row.flags, _fmt(row.wall_ms)])
    return buf.getvalue()


def sweep_to_json(sweep) -> str:
    return json.dumps({"metadata": sweep.metadata,
                       "rows": [_jsonable(r) for r in sweep.rows]}, indent=2)


def sweep_from_text(text) -> SweepResult:
    """Parse a sweep written by :func:`sweep_to_csv` or :func:`sweep_to_json`."""
    text = text.lstrip()
    if text.startswith("{"):
        data = json.loads(text)
        rows = tuple(SweepRow(r["rho"], r["sup_far_field"], tuple(r.get("per_mode_max", ())),
                              r["n_modes"], r["flags"], r["wall_ms"]) for r in data["rows"])
        return SweepResult(rows, data.get("metadata", {}))
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
        raise ConfigError(f"unexpected CSV header {reader.fieldnames}")
    rows = tuple(SweepRow(float(r["rho"]), float(r["sup_far_field"]), (), int(r["n_modes"]),
                          r["flags"], float(r["wall_ms"])) for r in reader)
    return SweepResult(rows, {})
