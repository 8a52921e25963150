"""Command-line frontend.

Every experiment reads an :class:`ExperimentConfig`, built from an optional
INI file and overridden by command-line flags, and writes a JSON report
(always) plus a CSV table for the tabular experiments. Exit status is 0 on
success, 2 on validation errors and 3 when a numerical certificate (tail
bound or quadrature error) misses the requested tolerance.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import sys
from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import CertificateError, CompletenessError, NilspecError, PoleError

SCHEMA_VERSION = 1
EXPERIMENTS = ("spectrum", "theta", "weyl", "zeta", "periodise", "constants", "crosscheck")
FAMILIES = ("torus", "heisenberg")

# certificate tolerances; periodise compares relative to the trace
DEFAULT_TOLERANCE = {"theta": 1e-8, "zeta": 1e-6, "crosscheck": 1e-6, "periodise": 1e-2}

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CERTIFICATE = 3


@dataclass
class ExperimentConfig:
    experiment: str = ""
    family: str = "torus"
    n: int = 1
    lattice: tuple | None = None  # lattice scales; None means the canonical lattice
    scale: Fraction = Fraction(1)
    power: int = 1
    prefactor_mode: str = "consistent"
    lambda_max: float | None = None
    t: tuple = ()
    s: tuple = ()
    eps: tuple = ()
    tolerance: float | None = None  # None: experiment default, see DEFAULT_TOLERANCE
    resolution: int = 4
    r_cut: float | None = None  # None: 3 + 5*eps for each eps
    kernel_t: float = 1.0
    json_path: str | None = None
    csv_path: str | None = None
    residue: bool = False


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


# --------------------------------------------------------------------------- parsing


def _floats(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).replace(";", ",").split(",") if x.strip())


def parse_model(text: str) -> tuple[str, int]:
    """``"heisenberg:1"`` -> ``("heisenberg", 1)``."""
    family, _, n = text.partition(":")
    return family.strip().lower(), int(n) if n.strip() else 1


def _from_ini(path: str) -> dict:
    cp = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    flat = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            flat[key.replace("-", "_")] = value
    return flat


def _apply(cfg: ExperimentConfig, values: dict) -> ExperimentConfig:
    conv = {
        "experiment": str,
        "family": lambda v: str(v).lower(),
        "n": int,
        "lattice": lambda v: tuple(Fraction(x.strip()) for x in str(v).split(",") if x.strip()),
        "scale": lambda v: Fraction(str(v)),
        "power": int,
        "prefactor_mode": str,
        "lambda_max": float,
        "t": _floats,
        "s": _floats,
        "eps": _floats,
        "tolerance": float,
        "resolution": int,
        "r_cut": float,
        "kernel_t": float,
        "json_path": str,
        "csv_path": str,
        "residue": lambda v: v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on"),
    }
    updates = {}
    for key, value in values.items():
        if value is None:
            continue
        key = {"json": "json_path", "csv": "csv_path"}.get(key.replace("-", "_"), key.replace("-", "_"))
        if key == "model":
            updates["family"], updates["n"] = parse_model(str(value))
        elif key in conv:
            updates[key] = conv[key](value)
        else:
            raise ValueError(f"unknown configuration key {key!r}")
    return replace(cfg, **updates)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nilspec", description="Spectral invariants of compact nilmanifolds.")
    p.add_argument("experiment", nargs="?", help="|".join(EXPERIMENTS))
    p.add_argument("action", nargs="?", help="optional sub-action (constants: report)")
    p.add_argument("--config", help="INI file; command-line flags override its values")
    p.add_argument("--model", help="torus:N or heisenberg:N")
    p.add_argument("--lattice", help="comma-separated lattice scales")
    p.add_argument("--scale", help="c in c*R^ell (rational)")
    p.add_argument("--power", type=int, help="ell in c*R^ell")
    p.add_argument("--prefactor-mode", dest="prefactor_mode", choices=("consistent", "paper"))
    p.add_argument("--lambda-max", dest="lambda_max", type=float, help="spectral cutoff")
    p.add_argument("--t", help="comma-separated times")
    p.add_argument("--s", help="comma-separated zeta arguments")
    p.add_argument("--eps", help="comma-separated dilation parameters")
    p.add_argument("--tolerance", type=float, help="certificate tolerance")
    p.add_argument("--resolution", type=int, help="fundamental-domain grid resolution")
    p.add_argument("--r-cut", dest="r_cut", type=float, help="lattice-ball radius for periodisation")
    p.add_argument("--kernel-t", dest="kernel_t", type=float, help="heat time of the torus test kernel")
    p.add_argument("--residue", action="store_true", default=None, help="zeta: also extract the residue")
    p.add_argument("--json", dest="json_path", help="JSON output path (default: stdout)")
    p.add_argument("--csv", dest="csv_path", help="CSV output path")
    return p


def config_from_args(argv=None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig()
    if args.config:
        cfg = _apply(cfg, _from_ini(args.config))
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "action")}
    return _apply(cfg, flags)


# --------------------------------------------------------------------------- validation


def _default_lattice(family: str, n: int) -> tuple:
    if family == "heisenberg":
        return (Fraction(1),) * (2 * n) + (Fraction(1, 2),)
    return (Fraction(1),) * n


def _alpha(cfg: ExperimentConfig) -> float:
    Q = cfg.n if cfg.family == "torus" else 2 * cfg.n + 2
    return Q / (2 * cfg.power)


def validate(config: ExperimentConfig) -> list[Diagnostic]:
    """Diagnostics for ``config``; empty exactly when :func:`run` would accept it."""
    out: list[Diagnostic] = []

    def bad(code, msg):
        out.append(Diagnostic(code, msg))

    if config.experiment not in EXPERIMENTS:
        bad("UNKNOWN_EXPERIMENT", f"experiment {config.experiment!r} is not one of {', '.join(EXPERIMENTS)}")
    if config.family not in FAMILIES:
        bad("UNKNOWN_MODEL", f"model family {config.family!r} is not one of {', '.join(FAMILIES)}")
        return out
    if not 1 <= config.n <= 4:
        bad("PARAM_RANGE", f"n={config.n} outside 1..4")
        return out
    if config.lattice is not None and tuple(config.lattice) != _default_lattice(config.family, config.n):
        expected = ",".join(str(x) for x in _default_lattice(config.family, config.n))
        bad("UNSUPPORTED_LATTICE", f"only the canonical lattice ({expected}) has a known spectrum")
    if not config.scale > 0:
        bad("PARAM_RANGE", "scale must be positive")
    if config.power < 1:
        bad("PARAM_RANGE", "power must be a positive integer")
    if config.lambda_max is not None and not config.lambda_max > 0:
        bad("PARAM_RANGE", "lambda-max must be positive")
    if config.tolerance is not None and not config.tolerance > 0:
        bad("PARAM_RANGE", "tolerance must be positive")
    if any(not t > 0 for t in config.t):
        bad("PARAM_RANGE", "times must be positive")
    if any(not 0 < e <= 1 for e in config.eps):
        bad("PARAM_RANGE", "eps values must lie in (0, 1]")
    if config.resolution < 1:
        bad("PARAM_RANGE", "resolution must be at least 1")
    if (config.r_cut is not None and not config.r_cut > 0) or not config.kernel_t > 0:
        bad("PARAM_RANGE", "r-cut and kernel-t must be positive")
    if config.prefactor_mode not in ("consistent", "paper"):
        bad("PARAM_RANGE", f"unknown prefactor mode {config.prefactor_mode!r}")
    if out:
        return out

    a = _alpha(config)
    if config.experiment == "zeta":
        for s in config.s:
            if abs(s - a) < 1e-6:
                bad("AT_POLE", f"s={s} is the pole Q/nu={a}")
    if config.experiment == "crosscheck":
        if config.family != "torus" or config.scale != 1 or config.power != 1:
            bad("PARAM_RANGE", "crosscheck pairs an unscaled torus:N operator with the circle Laplacian")
        for s in config.s:
            if abs(s - 0.5 - a) < 1e-6:
                bad("AT_POLE", f"s-1/2={s - 0.5} is the pole Q/nu={a}")
            elif s <= a + 0.5:
                bad("PARAM_RANGE", f"s={s} must exceed (Q+1)/2={a + 0.5} for the direct product series")
    if config.experiment == "periodise" and (config.scale != 1 or config.power != 1):
        bad("PARAM_RANGE", "periodise works with kernels directly; scale and power do not apply")
    if config.experiment == "weyl" and config.lambda_max is not None and config.lambda_max < 16:
        bad("PARAM_RANGE", "weyl needs lambda-max of at least 16 for a fitting grid")
    return out


# --------------------------------------------------------------------------- experiments


def _num(z) -> object:
    if isinstance(z, complex):
        if z.imag == 0:
            return z.real
        return {"re": z.real, "im": z.imag}
    return float(z)


def _stream(cfg: ExperimentConfig, Lam: float):
    from .spectral_data import heisenberg_eigenvalues, torus_eigenvalues, transform_spectrum

    base_lam = (Lam / float(cfg.scale)) ** (1.0 / cfg.power)
    if cfg.family == "torus":
        spec = torus_eigenvalues(cfg.n, base_lam)
    else:
        spec = heisenberg_eigenvalues(cfg.n, base_lam, cfg.prefactor_mode)
    if cfg.scale != 1 or cfg.power != 1:
        spec = transform_spectrum(spec, cfg.scale, cfg.power)
    return spec


def _default_cutoff(cfg: ExperimentConfig) -> float:
    base = {"torus": 2e4, "heisenberg": 8000.0}[cfg.family]
    return float(cfg.scale) * base**cfg.power


def _model_block(cfg: ExperimentConfig, spec=None) -> dict:
    out = {"family": cfg.family, "n": cfg.n, "scale": str(cfg.scale), "power": cfg.power}
    if spec is not None:
        m = spec.model
        out.update(
            operator=m.describe(), Q=m.Q, nu=m.nu, vol=m.vol, p1_zero=m.p1_zero, c0=m.c0,
            prefactor_mode=cfg.prefactor_mode, cutoff=spec.cutoff,
        )
    return out


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row) + "\n")
    return buf.getvalue()


def _exp_spectrum(cfg):
    Lam = cfg.lambda_max if cfg.lambda_max is not None else _default_cutoff(cfg)
    spec = _stream(cfg, Lam)
    report = {
        "model": _model_block(cfg, spec),
        "eigenvalues": len(spec.keys),
        "total_count": {"value": spec.total, "error_estimate": 0},
    }
    return report, spec.to_csv(), True


def _exp_theta(cfg):
    from .zeta_engine import required_cutoff, theta_array

    ts = cfg.t or (0.2, 0.1, 0.05)
    if cfg.lambda_max is not None:
        Lam = cfg.lambda_max
    else:
        from .spectral_data import heisenberg_model, scaled_model, torus_model

        base = torus_model(cfg.n) if cfg.family == "torus" else heisenberg_model(cfg.n, cfg.prefactor_mode)
        model = scaled_model(base, cfg.scale, cfg.power) if (cfg.scale != 1 or cfg.power != 1) else base
        Lam = required_cutoff(model, min(ts), min(cfg.tolerance, 1e-10))
    spec = _stream(cfg, Lam)
    vals, tails = theta_array(spec, ts)
    a = spec.model.alpha
    lead = spec.model.vol * spec.model.p1_zero
    rows = []
    for t, v, e in zip(ts, vals.tolist(), tails.tolist()):
        rows.append({"t": t, "theta": v, "error_estimate": e, "t_alpha_theta": v * t**a, "leading_constant": lead})
    ok = all(r["error_estimate"] < cfg.tolerance for r in rows)
    csv_text = _csv(
        ["t", "theta", "error_estimate", "t_alpha_theta", "leading_constant"],
        [(r["t"], r["theta"], r["error_estimate"], r["t_alpha_theta"], r["leading_constant"]) for r in rows],
    )
    return {"model": _model_block(cfg, spec), "alpha": a, "rows": rows}, csv_text, ok


def _exp_weyl(cfg):
    from .spectral_data import counting
    from .zeta_engine import weyl_fit

    Lam = cfg.lambda_max if cfg.lambda_max is not None else _default_cutoff(cfg)
    spec = _stream(cfg, Lam)
    grid = [Lam * 2.0 ** (-k / 2) for k in range(8, -1, -1)]
    fit = weyl_fit(spec, grid=grid)
    m = spec.model
    report = {
        "model": _model_block(cfg, spec),
        "fitted_constant": {"value": fit.constant, "error_estimate": fit.drift * fit.constant},
        "comparison": {
            "formula": "vol*p1(0)/Gamma(1+Q/nu)",
            "value": m.weyl_constant,
            "relative_error": fit.relative_error,
        },
        "grid": list(fit.grid),
    }
    rows = [(L, counting(spec, L), r, 0.0) for L, r in zip(fit.grid, fit.ratios)]
    csv_text = _csv(["lambda", "count", "count_over_lambda_alpha", "error_estimate"], rows)
    return report, csv_text, True


def _exp_zeta(cfg):
    from .zeta_engine import residue_at_pole, zeta_mellin

    Lam = cfg.lambda_max if cfg.lambda_max is not None else _default_cutoff(cfg)
    spec = _stream(cfg, Lam)
    ss = cfg.s or (2.0 * _alpha(cfg) + 1.0,)
    rows, ok = [], True
    for s in ss:
        z = zeta_mellin(spec, s)
        ok &= z.error_estimate < cfg.tolerance
        rows.append(
            {
                "s": s,
                "value": _num(z.value),
                "error_estimate": z.error_estimate,
                "components": {
                    "h1": _num(z.h1),
                    "pole_term": _num(z.pole_term),
                    "gamma_reciprocal_term": _num(z.gamma_reciprocal_term),
                    "h2": _num(z.h2),
                },
            }
        )
    report = {"model": _model_block(cfg, spec), "pole": _alpha(cfg), "rows": rows}
    if cfg.residue:
        r, e = residue_at_pole(spec)
        ok &= e < cfg.tolerance
        report["residue"] = {
            "value": r,
            "error_estimate": e,
            "comparison": {"formula": "vol*p1(0)/Gamma(Q/nu)", "value": spec.model.zeta_residue},
        }
    return report, None, ok


def _exp_periodise(cfg):
    from .group_core import canonical_lattice, fundamental_domain_grid
    from .kernels import gaussian_kernel, heisenberg_test_kernel, periodised_trace, scale_kernel
    from .spectral_data import heisenberg_model, torus_model

    if cfg.family == "torus":
        kappa = gaussian_kernel(cfg.n, cfg.kernel_t)
        model = torus_model(cfg.n)
    else:
        kappa = heisenberg_test_kernel(cfg.n)
        model = heisenberg_model(cfg.n)
    lat = canonical_lattice(model.group)
    grid = fundamental_domain_grid(lat, cfg.resolution)
    eps = cfg.eps or (0.4, 0.2, 0.1)
    target = float(lat.covolume) * kappa.value_at_zero
    rows = []
    for e in eps:
        R = cfg.r_cut if cfg.r_cut is not None else 3.0 + 5.0 * e
        tr, err = periodised_trace(scale_kernel(kappa, e), lat, grid, R)
        sc = e**model.Q * tr
        rows.append({"eps": e, "trace": tr, "eps_Q_trace": sc, "error_estimate": err, "target": target,
                     "deviation": abs(sc - target), "r_cut": R})
    csv_text = _csv(
        ["eps", "trace", "eps_Q_trace", "error_estimate", "target", "deviation", "r_cut"],
        [tuple(r.values()) for r in rows],
    )
    report = {"model": _model_block(cfg), "kernel": kappa.name, "Q": model.Q, "rows": rows}
    ok = all(r["error_estimate"] < cfg.tolerance * abs(r["trace"]) for r in rows)
    return report, csv_text, ok


def _exp_constants(cfg):
    from .constants import constants_report

    reports = [r.to_dict() for r in constants_report()]
    return {"reports": reports}, None, all(r["agree"] or r["discrepancy"] for r in reports)


def _exp_crosscheck(cfg):
    from .spectral_data import torus_eigenvalues
    from .zeta_engine import torus_cross_check

    Lam = cfg.lambda_max if cfg.lambda_max is not None else 2e4
    spec = torus_eigenvalues(cfg.n, Lam)
    ss = cfg.s or (2.0, 3.0)
    rows, ok = [], True
    for s in ss:
        cc = torus_cross_check(spec, s)
        bound = cc.lhs_error + cc.rhs_error
        ok &= cc.residual <= max(bound, cfg.tolerance)
        rows.append(
            {
                "s": s,
                "lhs": _num(cc.lhs),
                "lhs_error": cc.lhs_error,
                "rhs": _num(cc.rhs),
                "rhs_error": cc.rhs_error,
                "residual": cc.residual,
                "error_estimate": bound,
                "residual_paper_form": cc.residual_paper_form,
            }
        )
    return {"model": _model_block(cfg, spec), "rows": rows}, None, ok


_RUNNERS = {
    "spectrum": _exp_spectrum,
    "theta": _exp_theta,
    "weyl": _exp_weyl,
    "zeta": _exp_zeta,
    "periodise": _exp_periodise,
    "constants": _exp_constants,
    "crosscheck": _exp_crosscheck,
}


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(path, text, stdout):
    if path in (None, "-"):
        stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def run(config: ExperimentConfig, stdout=None) -> int:
    """Run one experiment, write its artifacts and return the exit status."""
    stdout = stdout or sys.stdout
    diags = validate(config)
    if not diags and config.tolerance is None:
        config = replace(config, tolerance=DEFAULT_TOLERANCE.get(config.experiment, 1e-6))
    if diags:
        _write(config.json_path, _dump({"schema_version": SCHEMA_VERSION, "status": "invalid",
                                         "diagnostics": [d.to_dict() for d in diags]}), stdout)
        return EXIT_VALIDATION
    try:
        report, csv_text, ok = _RUNNERS[config.experiment](config)
    except (CompletenessError, CertificateError) as exc:
        _write(config.json_path, _dump({"schema_version": SCHEMA_VERSION, "status": "certificate_failure",
                                         "experiment": config.experiment, "message": str(exc)}), stdout)
        return EXIT_CERTIFICATE
    except (PoleError, NilspecError, ValueError) as exc:
        _write(config.json_path, _dump({"schema_version": SCHEMA_VERSION, "status": "invalid",
                                         "diagnostics": [{"code": "PARAM_RANGE", "message": str(exc)}]}), stdout)
        return EXIT_VALIDATION
    status = "ok" if ok else "certificate_failure"
    payload = {"schema_version": SCHEMA_VERSION, "experiment": config.experiment, "status": status,
               "tolerance": config.tolerance}
    payload.update(report)
    json_text = _dump(payload)
    if csv_text is not None and config.csv_path:
        _write(config.csv_path, csv_text, stdout)
    if config.experiment == "spectrum" and config.json_path is None and not config.csv_path:
        # bare spectrum request: the table is the natural stdout artifact
        stdout.write(csv_text)
    else:
        _write(config.json_path, json_text, stdout)
    return EXIT_OK if ok else EXIT_CERTIFICATE


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except (ValueError, OSError, configparser.Error) as exc:
        print(_dump({"schema_version": SCHEMA_VERSION, "status": "invalid",
                     "diagnostics": [{"code": "CONFIG", "message": str(exc)}]}), end="")
        return EXIT_VALIDATION
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
