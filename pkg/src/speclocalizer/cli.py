"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 computation error.
"""

import argparse
import csv
from dataclasses import dataclass
import json
import os
import sys

import numpy as np

from . import hermitian as hc
from . import ktheory as kt
from . import localizer as loc
from . import torus
from .errors import LocalizerError, ShapeMismatch
from .matrix_io import load_matrix

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2

DEFAULTS = {
    "m": 1,
    "rho": 2.0,
    "kappa": 1.0,
    "B": torus.DEFAULT_BANDWIDTH,
    "pad": None,
    "steps": hc.DEFAULT_STEPS,
    "tol_zero": None,
    "singular_rtol": loc.SINGULAR_RTOL,
    "format": "csv",
    "seed": 0,
    "threads": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    subcommand: str
    m: int = 1
    rho: float = 2.0
    kappa: float = 1.0
    B: int = torus.DEFAULT_BANDWIDTH
    pad: int = None
    steps: int = hc.DEFAULT_STEPS
    tol_zero: float = None
    singular_rtol: float = loc.SINGULAR_RTOL
    format: str = "csv"
    seed: int = 0
    threads: int = 1

    def validate(self):
        if self.rho < 0:
            raise UsageError("rho must be >= 0")
        if not self.kappa > 0:
            raise UsageError("kappa must be > 0")
        if self.B < 16 or self.B > 4096 or self.B & (self.B - 1):
            raise UsageError("B must be a power of two between 16 and 4096")
        if self.pad is not None and self.pad < 0:
            raise UsageError("pad must be >= 0")
        if self.steps < 1:
            raise UsageError("steps must be positive")
        for name in ("tol_zero", "singular_rtol"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise UsageError(f"{name} must be > 0")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")
        return self


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return cfg


def make_config(args):
    """Merge flags over the ``--config`` file over defaults."""
    cfg = _load_config(getattr(args, "config", None))
    merged = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        merged[key] = flag if flag is not None else cfg.get(key, default)
    if merged["threads"] is None:
        merged["threads"] = loc.default_threads()
    try:
        conf = RunConfig(
            subcommand=args.command,
            m=int(merged["m"]),
            rho=float(merged["rho"]),
            kappa=float(merged["kappa"]),
            B=int(merged["B"]),
            pad=None if merged["pad"] is None else int(merged["pad"]),
            steps=int(merged["steps"]),
            tol_zero=None if merged["tol_zero"] is None else float(merged["tol_zero"]),
            singular_rtol=float(merged["singular_rtol"]),
            format=str(merged["format"]),
            seed=int(merged["seed"]),
            threads=int(merged["threads"]),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad parameter: {exc}") from exc
    return conf.validate()


def _profile(conf):
    return torus.default_profile(conf.B, max(torus.DEFAULT_GRID, 4 * conf.B))


def _emit(text, path=None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _spectrum_paths(path, count):
    if count == 1:
        return [path]
    stem, ext = os.path.splitext(path)
    return [f"{stem}_row{i}{ext}" for i in range(count)]


def cmd_torus(args):
    conf = make_config(args)
    profile = _profile(conf)
    row = loc.torus_row(conf.m, conf.rho, conf.kappa, profile, conf.pad, conf.singular_rtol)
    report = loc.SweepReport([row])
    _emit(report.to_json() if conf.format == "json" else report.to_csv())
    if args.dump_operators:
        torus.dump_operators(args.dump_operators, conf.m, conf.rho, profile, conf.pad)
    if args.dump_spectrum and row.spectrum is not None:
        loc.write_spectrum(args.dump_spectrum, row.spectrum)
    if row.error:
        print(row.error, file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


def cmd_form(args):
    conf = make_config(args)
    try:
        data = load_matrix(args.path)
        form = hc.make_form(data, tol_zero=conf.tol_zero)
    except OSError as exc:
        print(f"cannot read {args.path}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (LocalizerError, json.JSONDecodeError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    out = {
        "n": form.n,
        "gap": form.gap,
        "signature": form.signature,
        "inertia": form.negative_inertia,
    }
    if args.witt:
        p = hc.witt_projection(form)
        out["witt_rank"] = int(round(float(np.trace(p).real)))
    if conf.format == "json":
        _emit(json.dumps(out))
    else:
        _emit("\n".join(f"{k}: {v!r}" if isinstance(v, float) else f"{k}: {v}" for k, v in out.items()))
    return EXIT_OK


def _read_params(path):
    params = []
    try:
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(lines)
    for i, rec in enumerate(reader):
        rec = [r.strip() for r in rec]
        if i == 0 and rec[:3] == ["m", "rho", "kappa"]:
            continue
        if len(rec) < 3:
            raise UsageError(f"line {i + 1}: expected m,rho,kappa")
        try:
            params.append((int(rec[0]), float(rec[1]), float(rec[2])))
        except ValueError as exc:
            raise UsageError(f"line {i + 1}: {exc}") from exc
    return params


def cmd_sweep(args):
    conf = make_config(args)
    params = _read_params(args.input)
    report = loc.sweep(params, _profile(conf), conf.B, conf.pad, conf.threads, conf.singular_rtol)
    text = report.to_json() if conf.format == "json" else report.to_csv()
    _emit(text, args.output)
    if args.dump_spectrum:
        for path, row in zip(_spectrum_paths(args.dump_spectrum, len(report.rows)), report.rows):
            if row.spectrum is not None:
                loc.write_spectrum(path, row.spectrum)
    if report.rows and not any(r.error is None for r in report.rows):
        return EXIT_COMPUTE
    return EXIT_OK


def cmd_classify(args):
    conf = make_config(args)
    try:
        blocks = tuple(int(k) for k in args.blocks.split(","))
        desc = kt.SystemDescriptor(blocks)
    except (ValueError, ShapeMismatch) as exc:
        raise UsageError(f"bad --blocks: {exc}") from exc
    try:
        form = hc.make_form(load_matrix(args.path), tol_zero=conf.tol_zero)
        label = kt.classify(desc, form, args.n)
    except OSError as exc:
        print(f"cannot read {args.path}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (LocalizerError, json.JSONDecodeError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    _emit(json.dumps(label.to_dict()))
    return EXIT_OK


def selftest_checks(seed=0):
    """Quick health checks; returns a list of ``(name, passed, detail)``."""
    checks = []
    residuals = [torus.profile_residuals(torus.default_profile(B)) for B in (64, 128, 256)]
    for key in ("idempotent", "gh", "sum_of_squares"):
        vals = [r[key] for r in residuals]
        ok = vals[-1] <= 1e-3 and vals[0] > vals[1] > vals[2]
        checks.append((f"profile {key} residual (B=64,128,256)", ok, ", ".join(f"{v:.3e}" for v in vals)))

    for m, rho, kappa, expected in ((1, 2.0, 1.0, 1), (2, 3.0, 0.1, 2)):
        row = loc.torus_row(m, rho, kappa)
        checks.append((f"torus index m={m} rho={rho:g} kappa={kappa:g}", row.index == expected, f"index={row.index}"))

    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(50):
        x = hc.random_form(rng, int(rng.integers(1, 9)))
        bound = x.gap**2 / (2 * x.norm)
        e = rng.standard_normal((x.n, x.n)) + 1j * rng.standard_normal((x.n, x.n))
        e = e + e.conj().T
        e *= 0.99 * bound * rng.random() / hc.operator_norm(e)
        y = hc.RawHermitian.from_matrix(x.data + e)
        eps = hc.operator_norm(e)
        worst = min(worst, y.gap**2 - (x.gap**2 - 2 * eps * x.norm))
    checks.append(("rigidity bound on 50 random pairs", worst >= -1e-9, f"min slack={worst:.3e}"))
    return checks


def cmd_selftest(args):
    conf = make_config(args)
    checks = selftest_checks(conf.seed)
    if conf.format == "json":
        _emit(json.dumps([{"check": n, "passed": ok, "detail": d} for n, ok, d in checks], indent=2))
    else:
        for name, ok, detail in checks:
            _emit(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_COMPUTE


def _add_common(p, torus_params=False):
    p.add_argument("--config", help="JSON file with default parameters")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol-zero", dest="tol_zero", type=float, default=None)
    if torus_params:
        p.add_argument("--B", type=int, default=None, help="Fourier bandwidth of g and h")
        p.add_argument("--pad", type=int, default=None)
        p.add_argument("--singular-rtol", dest="singular_rtol", type=float, default=None)


def build_parser():
    parser = _Parser(prog="speclocalizer", description="Hermitian forms, K_0 labels and the spectral localizer.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("torus", help="localizer index on the truncated torus")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--dump-operators", dest="dump_operators")
    p.add_argument("--dump-spectrum", dest="dump_spectrum")
    _add_common(p, torus_params=True)
    p.set_defaults(func=cmd_torus)

    p = sub.add_parser("form", help="gap, signature and inertia of a matrix")
    p.add_argument("path")
    p.add_argument("--witt", action="store_true", help="also report the rank of the Witt projection")
    _add_common(p)
    p.set_defaults(func=cmd_form)

    p = sub.add_parser("sweep", help="evaluate a CSV of (m, rho, kappa)")
    p.add_argument("input")
    p.add_argument("--output", "-o")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--dump-spectrum", dest="dump_spectrum")
    _add_common(p, torus_params=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ktheory", help="K-theory labels")
    ksub = p.add_subparsers(dest="ktheory_command", parser_class=_Parser)
    c = ksub.add_parser("classify", help="inertia label of a block-diagonal form")
    c.add_argument("path")
    c.add_argument("--blocks", required=True, help="comma-separated block sizes, e.g. 2,1")
    c.add_argument("--n", type=int, default=None)
    _add_common(c)
    c.set_defaults(func=cmd_classify)

    p = sub.add_parser("selftest", help="model health checks")
    _add_common(p)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError(parser.format_usage().strip())
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
