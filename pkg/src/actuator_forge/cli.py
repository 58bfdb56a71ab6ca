"""Configuration-driven command line front end.

Commands: weights | optimize | stationarity | control | lumped | verify.
Flag values override config-file keys (line-based `key = value`, `#` comments)
which override defaults; ACTUATOR_FORGE_PRECISION_BITS overrides the built-in
default precision.  Data goes to files or standard output, diagnostics to
standard error.  Numeric output uses 17 significant digits so doubles
round-trip losslessly; identical configs produce byte-identical outputs.

Exit codes: 0 success, 1 domain/validation or I/O error, 2 numerical failure
(precision insufficient, solver not converged), 64 unknown command.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Sequence

import numpy as np
from mpmath import mp

from . import biortho, control, design, geometry, lumped, spectrum
from .errors import NumericalError, ValidationError

PI = math.pi

COMMANDS = ("weights", "optimize", "stationarity", "control", "lumped", "verify")

USAGE = """\
usage: actuator-forge <command> [flags]

commands:
  weights       biorthogonal norms and design weights as CSV
  optimize      solve the truncated design problem at one order
  stationarity  solve a range of orders and locate the stationary one
  control       synthesize a null control and verify terminal zeroing
  lumped        closed-form optimal lumped-control profile as CSV
  verify        re-check a stored domain: value, certificate, geometry

run `actuator-forge <command> --help` for the flags of one command.
"""

ENV_PRECISION = "ACTUATOR_FORGE_PRECISION_BITS"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _fmt_mp(x) -> str:
    return mp.nstr(x, 17)


def _default_precision() -> int:
    value = os.environ.get(ENV_PRECISION)
    if value is None:
        return biortho.DEFAULT_PRECISION_BITS
    try:
        return int(value)
    except ValueError as exc:
        raise ValidationError(f"{ENV_PRECISION} must be an integer, got {value!r}") from exc


def read_config_file(path: str) -> dict[str, str]:
    """Parse line-based `key = value` pairs; `#` starts a comment."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise ValidationError(f"{path}:{lineno}: expected key = value, got {raw!r}")
            values[key.strip()] = value.strip()
    return values


class _Options:
    """Flag/config/default merger with field-naming validation errors."""

    def __init__(self, args: argparse.Namespace):
        self._flags = vars(args)
        self._config = read_config_file(args.config) if getattr(args, "config", None) else {}

    def raw(self, name: str):
        flag = self._flags.get(name.replace("-", "_"))
        if flag is not None:
            return flag
        return self._config.get(name)

    def get(self, name: str, convert, default=None, required: bool = False):
        value = self.raw(name)
        if value is None:
            if required:
                raise ValidationError(f"missing required option --{name}")
            return default
        try:
            return convert(value)
        except ValidationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad value for --{name}: {value!r} ({exc})") from exc

    def precision_bits(self) -> int:
        return self.get("precision-bits", int, default=_default_precision())


def _require_range(name: str, value, lo=None, hi=None, strict=True):
    if value is None:
        return value
    bad = False
    if lo is not None:
        bad |= value <= lo if strict else value < lo
    if hi is not None:
        bad |= value >= hi if strict else value > hi
    if bad:
        bounds = f"({lo}, {hi})" if strict else f"[{lo}, {hi}]"
        raise ValidationError(f"--{name} must lie in {bounds}, got {value}")
    return value


def render_strips(strips: Sequence[tuple[int, geometry.IntervalUnion]], path) -> None:
    """Write an SVG with one horizontal strip per order: filled spans over (0, pi)."""
    if len(strips) == 0:
        raise ValidationError("render_strips needs at least one strip")
    width, strip_h, gap, label_w = 640, 26, 8, 54
    height = len(strips) * (strip_h + gap) + gap
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    span = width - label_w - 12
    for row, (n, omega) in enumerate(strips):
        y = gap + row * (strip_h + gap)
        parts.append(
            f'<text x="8" y="{y + strip_h - 8}" font-family="monospace" '
            f'font-size="14" fill="black">N={n}</text>')
        parts.append(
            f'<rect x="{label_w}" y="{y}" width="{span}" height="{strip_h}" '
            f'fill="#eeeeee" stroke="#333333" stroke-width="1"/>')
        for a, b in omega:
            x0 = label_w + span * a / PI
            w = span * (b - a) / PI
            parts.append(
                f'<rect x="{x0:.4f}" y="{y}" width="{w:.4f}" height="{strip_h}" '
                f'fill="#3b6fb6"/>')
    parts.append("</svg>")
    data = "\n".join(parts) + "\n"
    with open(path, "w") as fh:
        fh.write(data)


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _json_report(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _parser(command: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=f"actuator-forge {command}", add_help=True)
    p.add_argument("--config", help="config file with key = value lines")
    p.add_argument("--family", help="family spec, e.g. sine-fractional:alpha=1")
    p.add_argument("--T", type=float, help="control horizon")
    p.add_argument("--precision-bits", type=int, dest="precision_bits")
    if command == "weights":
        p.add_argument("--M", type=int, help="number of represented modes")
        p.add_argument("--out", help="output CSV path (default stdout)")
    elif command == "optimize":
        p.add_argument("--L", type=float, help="measure fraction of the domain")
        p.add_argument("--N", type=int, help="truncation order")
        p.add_argument("--M", type=int, help="biorthogonal truncation (default N+8)")
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--out-intervals", dest="out_intervals")
        p.add_argument("--out-report", dest="out_report")
        p.add_argument("--out-svg", dest="out_svg")
    elif command == "stationarity":
        p.add_argument("--L", type=float, help="measure fraction of the domain")
        p.add_argument("--N-min", type=int, dest="N_min")
        p.add_argument("--N-max", type=int, dest="N_max")
        p.add_argument("--M", type=int, help="shared biorthogonal truncation (default N_max+8)")
        p.add_argument("--tol", type=float, help="symdiff stationarity tolerance")
        p.add_argument("--out-report", dest="out_report")
        p.add_argument("--out-svg", dest="out_svg")
    elif command == "control":
        p.add_argument("--M", type=int, help="number of represented modes")
        p.add_argument("--intervals", help="domain CSV (a,b rows)")
        p.add_argument("--datum", help="initial datum CSV (j,a_j rows)")
        p.add_argument("--K-check", type=int, dest="K_check")
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out-report", dest="out_report")
        p.add_argument("--out-terminal", dest="out_terminal")
    elif command == "lumped":
        p.add_argument("--M", type=int, help="number of represented modes")
        p.add_argument("--out", help="output CSV path (default stdout)")
    elif command == "verify":
        p.add_argument("--L", type=float, help="measure fraction of the domain")
        p.add_argument("--N", type=int, help="truncation order")
        p.add_argument("--M", type=int, help="biorthogonal truncation (default N+8)")
        p.add_argument("--intervals", help="domain CSV (a,b rows)")
        p.add_argument("--out-report", dest="out_report")
    return p


def _family(opts: _Options) -> spectrum.SpectralFamily:
    return opts.get("family", spectrum.parse_family, required=True)


def _cmd_weights(opts: _Options) -> int:
    family = _family(opts)
    T = _require_range("T", opts.get("T", float, required=True), lo=0.0)
    M = _require_range("M", opts.get("M", int, required=True), lo=0)
    bio = biortho.build_biorthogonal(family, M, T, precision_bits=opts.precision_bits())
    lines = ["j,lambda_j,theta_norm_sq,gamma_j"]
    for j in range(1, M + 1):
        lines.append(",".join([
            str(j),
            _fmt(bio.lambdas[j - 1]),
            _fmt_mp(bio.norm_sq_mp(j)),
            _fmt_mp(bio.gamma_mp(j)),
        ]))
    _write_text(opts.raw("out"), "\n".join(lines) + "\n")
    return 0


def _certificate_dict(cert: design.Certificate) -> dict:
    return {
        "checked_to": cert.checked_to,
        "tail_min": cert.tail_min,
        "certified": cert.certified,
        "analytic_floor": cert.analytic_floor,
        "extrapolation_certified": cert.extrapolation_certified,
    }


def _cmd_optimize(opts: _Options) -> int:
    family = _family(opts)
    T = _require_range("T", opts.get("T", float, required=True), lo=0.0)
    L = _require_range("L", opts.get("L", float, required=True), lo=0.0, hi=1.0)
    N = _require_range("N", opts.get("N", int, required=True), lo=0)
    M = _require_range("M", opts.get("M", int, default=N + design.DEFAULT_M_MARGIN), lo=N, strict=False)
    cfg = design.SolverConfig()
    cfg.max_iter = opts.get("max-iter", int, default=cfg.max_iter)
    cfg.tol = opts.get("tol", float, default=cfg.tol)
    problem = design.DesignProblem.assemble(family, T, L, N, M=M,
                                            precision_bits=opts.precision_bits())
    result = design.solve_truncated(problem, cfg)
    result.certificate = design.tail_certificate(result, problem.bio, M) if M > N else None
    report = {
        "family": family.spec_string(),
        "T": T, "L": L, "N": N, "M": M,
        "alpha": [float(a) for a in result.alpha.values],
        "J_N": result.value,
        "mode_values": [float(v) for v in result.mode_values],
        "active_set": list(result.active_set),
        "iterations": result.iterations,
        "equalization_gap": result.equalization_gap,
        "converged": result.converged,
        "certificate": _certificate_dict(result.certificate) if result.certificate else None,
    }
    if opts.raw("out-intervals"):
        geometry.write_intervals(result.omega, opts.raw("out-intervals"))
    _write_text(opts.raw("out-report"), _json_report(report))
    if opts.raw("out-svg"):
        render_strips([(N, result.omega)], opts.raw("out-svg"))
    if not result.converged:
        print("warning: solver did not reach its equalization tolerance", file=sys.stderr)
        return 2
    return 0


def _cmd_stationarity(opts: _Options) -> int:
    family = _family(opts)
    T = _require_range("T", opts.get("T", float, required=True), lo=0.0)
    L = _require_range("L", opts.get("L", float, required=True), lo=0.0, hi=1.0)
    n_min = _require_range("N-min", opts.get("N-min", int, default=1), lo=0)
    n_max = opts.get("N-max", int, required=True)
    if n_max < n_min:
        raise ValidationError(f"--N-max must be >= --N-min, got {n_max} < {n_min}")
    tol = opts.get("tol", float, default=1e-2)
    M = opts.get("M", int, default=n_max + design.DEFAULT_M_MARGIN)
    report = design.stationarity_scan(family, T, L, n_min, n_max, tol=tol, M=M,
                                      precision_bits=opts.precision_bits())
    payload = {
        "family": family.spec_string(),
        "T": T, "L": L, "N_min": n_min, "N_max": n_max, "M": M, "tol": tol,
        "N_stat": report.n_stat,
        "verifiable": report.verifiable,
        "values": {str(n): v for n, v in report.values.items()},
        "symdiffs": [[n1, n2, v] for (n1, n2), v in sorted(report.symdiffs.items())],
    }
    _write_text(opts.raw("out-report"), _json_report(payload))
    if opts.raw("out-svg"):
        strips = [(n, report.omegas[n]) for n in sorted(report.omegas)]
        render_strips(strips, opts.raw("out-svg"))
    return 0


def _cmd_control(opts: _Options) -> int:
    family = _family(opts)
    T = _require_range("T", opts.get("T", float, required=True), lo=0.0)
    M = _require_range("M", opts.get("M", int, required=True), lo=0)
    intervals_path = opts.raw("intervals")
    datum_path = opts.raw("datum")
    if intervals_path is None:
        raise ValidationError("missing required option --intervals")
    if datum_path is None:
        raise ValidationError("missing required option --datum")
    omega = geometry.read_intervals(intervals_path)
    coeffs = _read_datum(datum_path, M)
    k_check = _require_range("K-check", opts.get("K-check", int, default=2 * M), lo=M, strict=False)
    samples = opts.get("samples", int, default=0)
    seed = opts.get("seed", int, default=0)
    bio = biortho.build_biorthogonal(family, M, T, precision_bits=opts.precision_bits())
    y0 = control.InitialDatum.from_array(coeffs)
    ctrl = control.synthesize_control(omega, y0, bio)
    report = control.simulate_terminal(omega, y0, ctrl, k_check)
    payload = {
        "family": family.spec_string(),
        "T": T, "M": M, "K_check": k_check,
        "datum_norm": report.datum_norm,
        "energy": report.energy,
        "max_residual": report.max_residual,
        "spillover": report.spillover,
        "randomized_cost": control.randomized_cost(omega, bio),
    }
    if samples:
        mc = control.monte_carlo_expectation(omega, y0, bio, samples, seed)
        payload["monte_carlo"] = {
            "samples": mc.samples, "seed": seed, "mean": mc.mean,
            "stderr": mc.stderr, "formula_value": mc.formula_value,
        }
    _write_text(opts.raw("out-report"), _json_report(payload))
    if opts.raw("out-terminal"):
        lines = ["k,y_k_T"]
        lines += [f"{k + 1},{_fmt(v)}" for k, v in enumerate(report.terminal)]
        _write_text(opts.raw("out-terminal"), "\n".join(lines) + "\n")
    return 0


def _read_datum(path: str, M: int) -> np.ndarray:
    coeffs = np.zeros(M)
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line or line.lower().startswith("j,"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 'j,a_j', got {raw!r}")
            j = int(parts[0])
            if not (1 <= j <= M):
                raise ValidationError(f"{path}:{lineno}: mode {j} outside 1..{M}")
            coeffs[j - 1] = float(parts[1])
    return coeffs


def _cmd_lumped(opts: _Options) -> int:
    family = _family(opts)
    T = _require_range("T", opts.get("T", float, required=True), lo=0.0)
    M = _require_range("M", opts.get("M", int, required=True), lo=0)
    bio = biortho.build_biorthogonal(family, M, T, precision_bits=opts.precision_bits())
    with mp.workprec(bio.gram.precision_bits):
        gammas = [bio.gamma_mp(j) for j in range(1, M + 1)]
        profile = lumped.solve_lumped(gammas)
        lines = [f"# value = {_fmt_mp(profile.value)}", "j,gamma_j,g_j,gamma_g_sq"]
        for j, (g, c) in enumerate(zip(gammas, profile.coefficients), start=1):
            lines.append(",".join([str(j), _fmt_mp(g), _fmt_mp(c), _fmt_mp(g * c * c)]))
    _write_text(opts.raw("out"), "\n".join(lines) + "\n")
    return 0


def _cmd_verify(opts: _Options) -> int:
    family = _family(opts)
    T = _require_range("T", opts.get("T", float, required=True), lo=0.0)
    L = _require_range("L", opts.get("L", float, required=True), lo=0.0, hi=1.0)
    N = _require_range("N", opts.get("N", int, required=True), lo=0)
    M = _require_range("M", opts.get("M", int, default=N + design.DEFAULT_M_MARGIN), lo=N, strict=False)
    intervals_path = opts.raw("intervals")
    if intervals_path is None:
        raise ValidationError("missing required option --intervals")
    omega = geometry.read_intervals(intervals_path)
    problem = design.DesignProblem.assemble(family, T, L, N, M=M,
                                            precision_bits=opts.precision_bits())
    value = design.j_trunc(problem, omega)
    masses = spectrum.mode_masses(range(1, N + 1), omega)
    mode_values = [problem.gamma_value(j) * masses[j - 1] for j in range(1, N + 1)]
    mu = geometry.measure(omega)
    endpoints = omega.endpoints
    pseudo = design.DesignResult(
        alpha=design.SimplexWeights.from_array(np.full(N, 1.0 / N)),
        omega=omega, value=value, mode_values=np.array(mode_values),
        active_set=(), iterations=0, equalization_gap=0.0, converged=True, level=0.0)
    cert = design.tail_certificate(pseudo, problem.bio, M) if M > N else None
    try:
        n0 = design.estimate_N0_bound(problem.bio, L, T, cap=M)
    except ValidationError:
        n0 = None
    payload = {
        "family": family.spec_string(),
        "T": T, "L": L, "N": N, "M": M,
        "measure": mu,
        "measure_error": abs(mu - L * PI),
        "component_count": geometry.component_count(omega),
        "boundary_margin": (float(min(endpoints[0], PI - endpoints[-1]))
                            if len(endpoints) else None),
        "J_N": value,
        "mode_values": [float(v) for v in mode_values],
        "certificate": _certificate_dict(cert) if cert else None,
        "stationarity_order_bound": n0,
    }
    _write_text(opts.raw("out-report"), _json_report(payload))
    return 0


_DISPATCH = {
    "weights": _cmd_weights,
    "optimize": _cmd_optimize,
    "stationarity": _cmd_stationarity,
    "control": _cmd_control,
    "lumped": _cmd_lumped,
    "verify": _cmd_verify,
}


def run_command(argv: Sequence[str]) -> int:
    """Execute one CLI invocation; returns the process exit code."""
    if not argv or argv[0] in ("-h", "--help"):
        sys.stderr.write(USAGE)
        return 0 if argv else 64
    command = argv[0]
    if command not in COMMANDS:
        sys.stderr.write(f"unknown command {command!r}\n\n{USAGE}")
        return 64
    parser = _parser(command)
    try:
        args = parser.parse_args(list(argv[1:]))
    except SystemExit as exc:
        # argparse already printed its message; --help exits with code 0
        return 0 if exc.code == 0 else 1
    try:
        opts = _Options(args)
        return _DISPATCH[command](opts)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
