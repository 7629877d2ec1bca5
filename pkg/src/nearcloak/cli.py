"""Command-line driver.

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 a check
requested with ``--assert`` failed.
"""

import argparse
import json
import sys

import numpy as np

from . import experiments as ex
from .errors import ConfigError, NearCloakError
from .materials import (
    GeneralLossyParams,
    build_physical_fullcloak,
    config_from_dict,
    normalize_scheme,
    validate_config,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ASSERT = 0, 2, 3, 4

DEFAULTS = {
    "dimension": 2,
    "scheme": "high_loss",
    "k": 1.0,
    "rho": list(ex.DEFAULT_RHOS),
    "core": None,
    "modes": None,
    "seed": None,
    "format": "csv",
}


class AssertionFailed(Exception):
    pass


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _complexes(text):
    return [complex(v.replace(" ", "")) for v in str(text).split(",") if v.strip()]


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _settings(args):
    """Merge defaults, the config file and explicit flags (flags win)."""
    merged = dict(DEFAULTS)
    merged.update(_load_config(getattr(args, "config", None)))
    for key in ("dimension", "scheme", "k", "rho", "core", "modes", "seed", "format",
                "r_exponent", "source", "q_range", "steps", "r0", "loss_scale", "tol",
                "expect_slope", "min_ratio", "max_reduction", "points"):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if isinstance(merged["rho"], (int, float)):
        merged["rho"] = [merged["rho"]]
    if isinstance(merged.get("core"), str):
        merged["core"] = _complexes(merged["core"])
    if merged.get("core") is not None:
        merged["core"] = tuple(complex(*c) if isinstance(c, list) else c for c in merged["core"])
    return merged


def _scheme(settings):
    name = str(settings["scheme"]).replace("-", "_")
    if name == "general":
        general = dict(settings.get("general") or {})
        if settings.get("r_exponent") is not None:
            general["r_exponent"] = settings["r_exponent"]
        if "r_exponent" not in general:
            raise ConfigError("scheme 'general' needs r_exponent (flag --r-exponent or config 'general')")
        return GeneralLossyParams(**general)
    if name == "em_conducting":
        return name
    return normalize_scheme(name)


def _write(text, path):
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _check(condition, message):
    if not condition:
        raise AssertionFailed(message)


def _run_sweep(s):
    return ex.sweep_rho(_scheme(s), int(s["dimension"]), float(s["k"]), s.get("core"),
                        s["rho"], s.get("modes"), s.get("source"), s.get("seed"),
                        deterministic=bool(s.get("deterministic")))


def cmd_sweep(args):
    s = _settings(args)
    s["deterministic"] = args.deterministic
    sweep = _run_sweep(s)
    fmt = s["format"]
    _write(ex.sweep_to_json(sweep) if fmt == "json" else ex.sweep_to_csv(sweep), args.out)
    if args.assert_:
        _check(all(r.ok for r in sweep.rows), "some rows failed")
        sup = sweep.sup_norms()
        _check(bool(np.all(np.diff(sup) < 0)), f"sup norms not decreasing: {sup}")


def cmd_fit(args):
    s = _settings(args)
    if args.input:
        with open(args.input) as fh:
            sweep = ex.sweep_from_text(fh.read())
    else:
        sweep = _run_sweep(s)
    fit = ex.fit_rate(sweep)
    _write(json.dumps(ex._jsonable(fit), indent=2), args.out)
    if args.assert_:
        lo, hi = s.get("expect_slope") or (-np.inf, np.inf)
        _check(lo <= fit.slope <= hi, f"slope {fit.slope:.4f} outside [{lo}, {hi}]")


def cmd_busting(args):
    s = _settings(args)
    rho = s["rho"][0]
    lo, hi = s.get("q_range") or (1.0, 2000.0)
    res = ex.resonance_search(rho, int(s["dimension"]), float(s["k"]), (lo, hi), int(s.get("steps") or 400))
    out = dict(ex._jsonable(res), ratio=res.ratio)
    _write(json.dumps(out, indent=2), args.out)
    if args.assert_:
        need = float(s.get("min_ratio") or 10.0)
        _check(res.ratio >= need, f"busting ratio {res.ratio:.3f} < {need}")


def cmd_neumann(args):
    s = _settings(args)
    rhos = s["rho"] if args.rho is not None or "rho" in _load_config(args.config) else [0.2, 0.1, 0.05, 0.025]
    res = ex.neumann_limit_check(float(s.get("r0") or 1.0), int(s["dimension"]), float(s["k"]), rhos,
                                 float(s.get("loss_scale") or 1.0))
    out = dict(ex._jsonable(res), strictly_decreasing=res.strictly_decreasing, reduction=res.reduction)
    _write(json.dumps(out, indent=2), args.out)
    if args.assert_:
        limit = float(s.get("max_reduction") or 0.1)
        _check(res.strictly_decreasing, f"errors not strictly decreasing: {res.errors}")
        _check(res.reduction <= limit, f"final/initial error {res.reduction:.3f} > {limit}")


def cmd_invariance(args):
    s = _settings(args)
    core = s.get("core") or (1.0, 1.0)
    gap = ex.invariance_check(s["rho"][0], int(s["dimension"]), float(s["k"]), _scheme(s), core)
    _write(json.dumps({"rho": s["rho"][0], "discrepancy": gap}, indent=2), args.out)
    if args.assert_:
        tol = float(s.get("tol") or 1e-6)
        _check(gap <= tol, f"discrepancy {gap:.3e} > {tol:.1e}")


def cmd_material(args):
    s = _settings(args)
    core = s.get("core") or (1.0, 1.0)
    cloak = build_physical_fullcloak(s["rho"][0], int(s["dimension"]), _scheme(s), core)
    npts = int(s.get("points") or 50)
    lines = ["region,r,eta_r,eta_t,q_re,q_im"]
    lines.append(f"core,{cloak.core.outer_radius!r},{complex(cloak.core.eta).real!r},"
                 f"{complex(cloak.core.eta).real!r},{complex(cloak.core.q).real!r},{complex(cloak.core.q).imag!r}")
    for name, prof in (("lossy", cloak.lossy), ("cloak", cloak.cloak)):
        for r in np.linspace(prof.inner_radius, prof.outer_radius, npts):
            q = complex(prof.q(r))
            lines.append(f"{name},{float(r)!r},{complex(prof.eta_r(r)).real!r},"
                         f"{complex(prof.eta_t(r)).real!r},{q.real!r},{q.imag!r}")
    _write("\n".join(lines) + "\n", args.out)


def cmd_validate(args):
    data = _load_config(args.config)
    if "layers" in data:
        config = config_from_dict(data)
        issues = validate_config(config, args.lam)
        report = {"valid": not issues, "violations": [ex._jsonable(v) for v in issues]}
    else:
        s = _settings(args)
        scheme = _scheme(s)
        if scheme == "em_conducting" and int(s["dimension"]) != 3:
            raise ConfigError("em-conducting needs --dim 3")
        if isinstance(scheme, GeneralLossyParams):
            scheme.check(int(s["dimension"]))
        if any(not 0 < r < 1 for r in s["rho"]):
            raise ConfigError("rho values must lie in (0, 1)")
        report = {"valid": True, "violations": []}
    _write(json.dumps(report, indent=2), args.out)
    if not report["valid"]:
        return EXIT_CONFIG
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment or layered-configuration file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--dim", dest="dimension", type=int, choices=(2, 3))
    common.add_argument("--scheme", choices=("high-loss", "high-density", "general", "em-conducting", "none"))
    common.add_argument("--rho", type=_floats, help="comma-separated values")
    common.add_argument("--k", type=float)
    common.add_argument("--modes", type=int, help="truncation override")
    common.add_argument("--seed", type=int)
    common.add_argument("--core", help="comma-separated core material, e.g. 2,3+1j")
    common.add_argument("--r-exponent", dest="r_exponent", type=float, help="general-layer exponent r")
    common.add_argument("--assert", dest="assert_", action="store_true",
                        help="exit with status 4 when the subcommand's check fails")

    parser = argparse.ArgumentParser(prog="nearcloak", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="far-field sup norm against rho")
    p.add_argument("--source", type=complex, help="constant core source density instead of a plane wave")
    p.add_argument("--deterministic", action="store_true", help="record wall_ms = 0")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", parents=[common], help="log-log rate fit")
    p.add_argument("--input", help="sweep CSV/JSON; runs a sweep when omitted")
    p.add_argument("--source", type=complex)
    p.add_argument("--expect-slope", dest="expect_slope", type=_floats, help="LO,HI for --assert")
    p.set_defaults(func=cmd_fit, deterministic=False)

    p = sub.add_parser("busting", parents=[common], help="resonance search over the core modulus")
    p.add_argument("--q-range", dest="q_range", type=_floats)
    p.add_argument("--steps", type=int)
    p.add_argument("--min-ratio", dest="min_ratio", type=float)
    p.set_defaults(func=cmd_busting)

    p = sub.add_parser("neumann", parents=[common], help="coated obstacle against the sound-hard ball")
    p.add_argument("--r0", type=float)
    p.add_argument("--loss-scale", dest="loss_scale", type=float)
    p.add_argument("--max-reduction", dest="max_reduction", type=float)
    p.set_defaults(func=cmd_neumann)

    p = sub.add_parser("invariance", parents=[common], help="physical against virtual far field")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_invariance)

    p = sub.add_parser("material", parents=[common], help="dump physical cloak tensors as CSV")
    p.add_argument("--points", type=int)
    p.set_defaults(func=cmd_material)

    p = sub.add_parser("validate", parents=[common], help="check a configuration without solving")
    p.add_argument("--lam", type=float, help="regular-condition constant")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        status = args.func(args)
    except AssertionFailed as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except NearCloakError as exc:
        # input problems derive from ValueError, numerical failures do not
        if isinstance(exc, ValueError):
            print(f"config error [{exc.code}]: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"solver error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return status or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
