"""Command-line driver.

Exit status: 0 success, 2 configuration error, 3 numeric failure, 4 I/O
error.  Failures print one line ``code: message`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import experiments, model, semiclassical, symbols, toeplitz, zeros
from .errors import ConfigError, LabError
from .experiments import ExperimentConfig
from .model import ModelSpace
from .randgauss import RngStream, sample_section

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        code = "config.missing_field" if "required" in message else "config.invalid_argument"
        raise ConfigError(message, code=code)


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, complex):
        return f"{fmt(x.real)},{fmt(x.imag)}"
    return format(float(x), ".17g")


def _complex(text: str) -> complex:
    try:
        parts = [float(t) for t in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse point {text!r}; expected x,y", code="config.invalid_value") from None
    if len(parts) == 1:
        parts.append(0.0)
    if len(parts) != 2:
        raise ConfigError(f"cannot parse point {text!r}; expected x,y", code="config.invalid_value")
    return complex(parts[0], parts[1])


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}", code="config.invalid_value") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}", code="config.invalid_value") from None


def _space(args) -> ModelSpace:
    if args.model == "fock":
        return ModelSpace.fock(args.p)
    if args.model == "disc":
        return ModelSpace.disc()
    raise ConfigError(f"unknown model {args.model!r}", code="config.invalid_value")


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise ConfigError(f"--{n.replace('_', '-')} is required", code="config.missing_field")


def _emit(name: str | None, payload: dict):
    if name:
        Path(f"{name}.report.json").write_text(json.dumps(payload, sort_keys=True, indent=2))


def _print(key, value):
    print(f"{key} {fmt(value)}")


# --------------------------------------------------------------------------
# direct commands


def cmd_kernel(args) -> int:
    _require(args, "z")
    space = _space(args)
    z = _complex(args.z)
    closed = model.kernel_diag(space, z)
    cert = model.truncation_order(space, max(abs(z), 1e-3), args.eps)
    trunc = model.kernel_diag(space, z, cert.order)
    _print("closed_form", closed)
    _print("truncated", trunc)
    _print("order", cert.order)
    _emit(args.out, {"version": experiments._version(), "space": space.to_dict(), "z": [z.real, z.imag],
                     "closed_form": closed, "truncated": trunc, "certificate": cert.to_dict()})
    return EXIT_OK


def cmd_density(args) -> int:
    _require(args, "z")
    space = _space(args)
    z = _complex(args.z)
    closed = model.ek_density(space, z)
    fd = model.ek_density(space, z, method="fd")
    _print("closed_form", closed)
    _print("finite_difference", fd)
    _emit(args.out, {"version": experiments._version(), "space": space.to_dict(), "z": [z.real, z.imag],
                     "closed_form": closed, "finite_difference": fd})
    return EXIT_OK


def _sample(args):
    space = _space(args)
    cert = model.truncation_order(space, args.radius, args.eps)
    return sample_section(space, cert, RngStream(args.seed, args.stream))


def cmd_sample(args) -> int:
    s = _sample(args)
    d = s.to_dict()
    d["version"] = experiments._version()
    _print("order", s.order)
    _emit(args.out, d)
    if not args.out:
        print(json.dumps(d))
    return EXIT_OK


def cmd_zeros(args) -> int:
    if args.trials is not None:
        cfg = ExperimentConfig(kind="zero_count", model=args.model, p=args.p, radius=args.radius,
                               trials=args.trials, seed=args.seed, eps=args.eps, threads=args.threads)
        return _run_config(cfg, args)
    s = _sample(args)
    zs = zeros.roots_in_disk(s, args.radius)
    _print("zeros", zs.total)
    _print("argument_count", zs.argument_count if zs.argument_count is not None else -1)
    print(f"status {zs.status}")
    d = zs.to_dict()
    d["version"] = experiments._version()
    d["provenance"] = s.provenance
    _emit(args.out, d)
    return EXIT_OK if zs.status == zeros.VALID else EXIT_NUMERIC


def cmd_toeplitz(args) -> int:
    space = _space(args)
    f = symbols.get_symbol(args.symbol)
    op = toeplitz.spectrum(toeplitz.build_toeplitz(space, f, args.N))
    tr = toeplitz.trace_and_hs(op)
    _print("trace", tr.trace)
    _print("hs_norm", tr.hs_norm)
    _print("independent_trace", tr.independent_trace)
    for j, lam in enumerate(op.eigenvalues[: args.show]):
        _print(f"lambda_{j}", lam)
    d = op.to_dict()
    d["version"] = experiments._version()
    d["trace"] = {"trace": tr.trace, "hs_norm": tr.hs_norm,
                  "independent_trace": tr.independent_trace if math.isfinite(tr.independent_trace) else None}
    _emit(args.out, d)
    return EXIT_OK


def cmd_semiclassical(args) -> int:
    f = symbols.get_symbol(args.symbol)
    x = _complex(args.x)
    out = {"version": experiments._version(), "symbol": f.to_dict(), "x": [x.real, x.imag]}
    b = semiclassical.b_coefficients(f, x)
    for k, v in zip(("b0", "b1", "b2"), b):
        _print(k, v)
    out["b"] = list(b)
    labels, kappa = semiclassical.proper_vanishing_check(f, [x])
    print(f"vanishing {labels[0]}")
    out["vanishing"] = labels[0]
    if labels[0] == semiclassical.ORDER2_PROPER:
        data = semiclassical.order2_data(f, x)
        _print("mu", data.mu)
        _print("F_log_density_0", semiclassical.F_log_density(data, 0.0))
        out["order2"] = data.to_dict()
    if args.p_list:
        fit = semiclassical.t2_growth_exponent(_ints(args.p_list), f, x)
        _print("growth_slope", fit.slope)
        _print("growth_plain_slope", fit.plain_slope)
        out["growth"] = fit.to_dict()
    if args.R is not None:
        res = semiclassical.planck_pairing(f, x, args.R, args.p)
        _print("pairing_numeric", res.numeric)
        _print("pairing_predicted", res.predicted)
        _print("pairing_ratio", res.ratio)
        out["pairing"] = res.to_dict()
    _emit(args.out, experiments._clean(out))
    return EXIT_OK


def calibration_suite() -> list[tuple[str, float, float, float, bool]]:
    """``(name, value, expected, tolerance, ok)`` for each pinned constant."""
    g = symbols.gaussian()
    q = symbols.quadratic_gaussian()
    checks = []
    b = semiclassical.b_coefficients(g, 0.0)
    for name, v, e in (("b0", b.b0, 1.0), ("b1", b.b1, -2.0), ("b2", b.b2, 3.0)):
        checks.append((f"{name}_gauss", v, e, 1e-9))
    checks.append(("b2_quad_gauss", semiclassical.b_coefficients(q, 0.0).b2, 1.0, 1e-9))
    for p in (50, 100, 200):
        exact = p**3 / (p + 1.0) ** 2 / p
        resid = abs(p * (exact - b.b0) - b.b1 - b.b2 / p)
        checks.append((f"expansion_residual_p{p}", resid, 0.0, 5.0 / p**2))
    data = semiclassical.order2_data(q, 0.0)
    checks.append(("mu", data.mu, 1 / math.pi**2, 1e-12))
    checks.append(("F_log_density_0", semiclassical.F_log_density(data, 0.0), 3 * math.pi, 1e-9))
    return [(n, float(v), float(e), t, abs(v - e) <= t) for n, v, e, t in checks]


def cmd_calibrate(args) -> int:
    rows = calibration_suite()
    for name, v, e, tol, ok in rows:
        print(f"{'PASS' if ok else 'FAIL'} {name} value={fmt(v)} expected={fmt(e)} tol={fmt(tol)}")
    if args.out:
        Path(f"{args.out}.table.csv").write_text(
            "name,value,expected,tolerance,pass\n" + "".join(f"{n},{fmt(v)},{fmt(e)},{fmt(t)},{ok}\n" for n, v, e, t, ok in rows)
        )
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_NUMERIC


# --------------------------------------------------------------------------
# experiment commands

_SCHEMA = None


def config_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        _SCHEMA = json.loads(resources.files("bergzeros").joinpath("config.schema.json").read_text())
    return _SCHEMA


def load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError:
        raise
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}", code="config.parse") from None
    try:
        jsonschema.validate(data, config_schema())
    except jsonschema.ValidationError as exc:
        code = "config.unknown_key" if exc.validator == "additionalProperties" else "config.invalid_value"
        raise ConfigError(f"{path}: {exc.message}", code=code) from None
    return data


_FLAG_KEYS = {
    "model": "model", "p": "p", "p_list": "p_list", "trials": "trials", "seed": "seed", "radius": "radius",
    "radii": "radii", "r0": "r0", "mode": "mode", "margin": "margin", "form_radius": "form_radius",
    "form": "form", "delta": "delta", "sampler": "sampler", "symbol": "symbol", "edges": "edges",
    "toeplitz_order": "toeplitz_order", "components": "components", "eps": "eps", "detection": "detection",
    "threads": "threads",
}
_LISTS = {"p_list": _ints, "radii": _floats, "edges": _floats}


def _experiment_config(kind: str, args, defaults: dict) -> ExperimentConfig:
    d = dict(defaults)
    d["kind"] = kind
    if args.config:
        file_cfg = load_config(args.config)
        if file_cfg.get("kind", kind) != kind:
            raise ConfigError(f"config kind {file_cfg['kind']!r} does not match subcommand", code="config.invalid_value")
        d.update(file_cfg)
    for attr, key in _FLAG_KEYS.items():
        v = getattr(args, attr, None)
        if v is not None:
            d[key] = _LISTS[key](v) if key in _LISTS else v
    return ExperimentConfig.from_dict(d)


def _run_config(cfg: ExperimentConfig, args) -> int:
    if getattr(args, "dump_config", False):
        print(json.dumps(cfg.to_dict(), sort_keys=True, indent=2))
        return EXIT_OK
    rep = experiments.run_experiment(cfg)
    name = args.out or cfg.kind
    fmt_ = args.format
    if fmt_ in ("json", "both"):
        Path(f"{name}.report.json").write_text(rep.to_json(include_timing=args.timing))
    if fmt_ in ("csv", "both"):
        Path(f"{name}.table.csv").write_text(rep.to_csv())
    for k, v in rep.results.items():
        if isinstance(v, (int, float)) and not isinstance(v, bool) and v is not None:
            _print(k, v)
    print(f"flags {','.join(rep.flags) or 'none'}")
    if "UNRESOLVED" in rep.flags or "UNRESOLVED_TRIALS" in rep.flags:
        print(f"experiments.unresolved: {cfg.kind} report has unresolved estimates", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


_EXPERIMENTS = {
    "hole": ("hole", {"p_list": [1, 4, 9, 16, 25], "trials": 100000}),
    "linstat": ("linear_statistic", {"p_list": [1, 2, 4, 8], "trials": 10000}),
    "tails": ("tails", {"p_list": [1, 2, 4, 8], "trials": 1000, "radius": 1.0}),
    "densitymap": ("density_map", {"trials": 10000}),
    "wiener": ("wiener_covariance", {"trials": 100000}),
}


def _add_common_model(sp, radius=True):
    sp.add_argument("--model", choices=["fock", "disc"], default="fock")
    sp.add_argument("--p", type=int, default=1, help="Fock level")
    sp.add_argument("--eps", type=float, default=1e-12, help="truncation tail bound")
    sp.add_argument("--out", help="write <out>.report.json")


def _add_experiment_flags(sp):
    sp.add_argument("--config", help="JSON config file (validated against the schema)")
    sp.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    sp.add_argument("--out", help="output name prefix (default: the experiment kind)")
    sp.add_argument("--format", choices=["json", "csv", "both"], default="both")
    sp.add_argument("--timing", action="store_true", help="include wall-clock time in the JSON report")
    sp.add_argument("--threads", type=int, help="worker threads (default: $THREADS or 1)")
    sp.add_argument("--model", choices=["fock", "disc"])
    sp.add_argument("--p", type=int)
    sp.add_argument("--p-list", dest="p_list")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--eps", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bergzeros", description="Zeros of Gaussian holomorphic sections and Toeplitz operators.")
    ap.add_argument("--version", action="version", version=experiments._version())
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("kernel", help="Bergman kernel on the diagonal")
    _add_common_model(sp)
    sp.add_argument("--z", help="point x,y")

    sp = sub.add_parser("density", help="expected zero density")
    _add_common_model(sp)
    sp.add_argument("--z", help="point x,y")

    for name, hlp in (("sample", "draw one Gaussian section"), ("zeros", "zeros of one section, or zero-count statistics")):
        sp = sub.add_parser(name, help=hlp)
        _add_common_model(sp)
        sp.add_argument("--radius", type=float, default=1.0)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--stream", type=int, default=0)
        if name == "zeros":
            sp.add_argument("--trials", type=int, help="run zero-count statistics over this many trials")
            sp.add_argument("--threads", type=int)
            sp.add_argument("--format", choices=["json", "csv", "both"], default="both")
            sp.add_argument("--timing", action="store_true")
            sp.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")

    sp = sub.add_parser("toeplitz", help="Toeplitz operator, trace and spectrum")
    _add_common_model(sp)
    sp.add_argument("--symbol", default="gauss", help=f"one of {sorted(symbols.REGISTRY)} or expr:<sympy in z, zb>")
    sp.add_argument("--N", type=int, default=20)
    sp.add_argument("--show", type=int, default=5, help="eigenvalues to print")

    sp = sub.add_parser("semiclassical", help="expansion coefficients, order-2 data, growth and pairing")
    sp.add_argument("--symbol", default="quad_gauss")
    sp.add_argument("--x", default="0,0")
    sp.add_argument("--p-list", dest="p_list", help="levels for the growth fit, e.g. 20,40,...,200")
    sp.add_argument("--R", type=float, help="Planck-scale radius for the pairing")
    sp.add_argument("--p", type=int, default=100, help="level for the pairing")
    sp.add_argument("--out")

    sp = sub.add_parser("calibrate", help="check the pinned semiclassical constants")
    sp.add_argument("--out")

    for name in _EXPERIMENTS:
        sp = sub.add_parser(name, help=f"{_EXPERIMENTS[name][0]} experiment")
        _add_experiment_flags(sp)
        if name == "hole":
            sp.add_argument("--r0", type=float)
            sp.add_argument("--mode", choices=["scaled", "fixed"])
            sp.add_argument("--radii")
            sp.add_argument("--radius", type=float)
            sp.add_argument("--margin", type=float)
            sp.add_argument("--detection", choices=["argument", "roots"])
        if name in ("linstat", "tails"):
            sp.add_argument("--form-radius", dest="form_radius", type=float)
            sp.add_argument("--form", choices=["bump", "zero"])
        if name == "tails":
            sp.add_argument("--delta", type=float)
            sp.add_argument("--radius", type=float, help="radius of the sup-norm region")
        if name in ("densitymap", "wiener"):
            sp.add_argument("--symbol")
            sp.add_argument("--toeplitz-order", dest="toeplitz_order", type=int)
        if name == "densitymap":
            sp.add_argument("--edges", help="annulus radii, e.g. 0,0.5,1,1.5,2")
            sp.add_argument("--sampler", choices=["standard", "wiener"])
        if name == "wiener":
            sp.add_argument("--components", type=int)
    return ap


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command in _EXPERIMENTS:
            kind, defaults = _EXPERIMENTS[args.command]
            return _run_config(_experiment_config(kind, args, defaults), args)
        return {
            "kernel": cmd_kernel,
            "density": cmd_density,
            "sample": cmd_sample,
            "zeros": cmd_zeros,
            "toeplitz": cmd_toeplitz,
            "semiclassical": cmd_semiclassical,
            "calibrate": cmd_calibrate,
        }[args.command](args)
    except LabError as exc:
        print(exc.reason(), file=sys.stderr)
        return EXIT_NUMERIC if exc.numeric else EXIT_CONFIG
    except OSError as exc:
        print(f"io.error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
