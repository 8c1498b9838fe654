"""Command-line front end.

Exit codes: 0 success, 1 file I/O error, 2 config/validation error,
3 data-format error, 4 numerical failure (divergence, non-convergence,
degenerate or undefined results).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import traceio
from .config import ConfigError, RunConfig
from .dynamics import apply_storage, integrate_read, integrate_write
from .emission import PulseTrace, farfield_amplitude, grating_period
from .errors import (DegenerateSteadyState, IntegrationDiverged, ParameterError,
                     TraceFormatError, TruncatedPulse, UndefinedCoherence)
from .fitting import fit_exponential, fit_scale_parameter
from .model import coherence_steady_closed, coherence_steady_limit, steady_state_write
from .svgplot import line_plot
from .sweeps import (build_grating, retrieved_trace, sweep_read_intensity,
                     sweep_storage_time, sweep_write_intensity)

log = logging.getLogger("gratingmem")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4

DEFAULT_GRIDS = {
    "read-intensity": "0.5:30:50",
    "write-intensity": "0.25:40:60",
    "storage-time": "0:10:21",
}


class NumericalFailure(RuntimeError):
    pass


def parse_grid(spec):
    """'start:stop:num' or 'start:stop:num:log'."""
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"grid spec {spec!r}: expected start:stop:num[:log]")
    try:
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid spec {spec!r}: bad number") from None
    if num < 1:
        raise ConfigError(f"grid spec {spec!r}: num must be >= 1")
    if num > 1 and not stop > start:
        raise ConfigError(f"grid spec {spec!r}: stop must exceed start")
    if len(parts) == 4:
        if parts[3] != "log":
            raise ConfigError(f"grid spec {spec!r}: last field must be 'log'")
        if start <= 0:
            raise ConfigError(f"grid spec {spec!r}: log grid needs start > 0")
        return np.geomspace(start, stop, num)
    return np.linspace(start, stop, num)


def load_config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig.default()
    overrides = {}
    for item in args.set or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        lhs, rhs = item.split("=", 1)
        sec, key = lhs.strip().split(".", 1)
        overrides.setdefault(sec, {})[key] = rhs.strip()
    if args.format:
        overrides.setdefault("output", {})["format"] = args.format
    if args.output:
        overrides.setdefault("output", {})["path"] = args.output
    if overrides:
        merged = {s: dict(v) for s, v in cfg.values.items()}
        for s, kv in overrides.items():
            merged.setdefault(s, {}).update(kv)
        cfg = RunConfig.from_mapping(merged)
    return cfg


def emit(cfg, text):
    path = cfg.get("output.path")
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _complex_pair(z):
    return [float(np.real(z)), float(np.imag(z))]


def cmd_steady(cfg, args):
    atom, beams = cfg.atom, cfg.beams
    ow, owp = beams.omega_w(atom), beams.omega_wp(atom)
    state = steady_state_write(atom, ow, owp)
    closed = complex(coherence_steady_closed(atom, ow, owp))
    limit = complex(coherence_steady_limit(ow, owp))
    diff = abs(state.rho_ab - closed)
    report = {
        "linear_solve": {
            "rho22": state.rho22, "rho_aa": state.rho_aa, "rho_bb": state.rho_bb,
            "sigma_a2": _complex_pair(state.sigma_a2), "sigma_b2": _complex_pair(state.sigma_b2),
            "rho_ab": _complex_pair(state.rho_ab),
        },
        "rho_ab_closed_form": _complex_pair(closed),
        "rho_ab_small_gamma_limit": _complex_pair(limit),
        "abs_difference_linear_vs_closed": diff,
    }
    if cfg.get("output.format") == "json":
        return json.dumps(report, indent=2) + "\n"
    f = traceio.fmt
    lines = ["# element,linear_solve_re,linear_solve_im,closed_form_re,closed_form_im"]
    for name in ("rho22", "rho_aa", "rho_bb"):
        lines.append(f"{name},{f(getattr(state, name))},0,,")
    for name in ("sigma_a2", "sigma_b2"):
        z = getattr(state, name)
        lines.append(f"{name},{f(z.real)},{f(z.imag)},,")
    lines.append(f"rho_ab,{f(state.rho_ab.real)},{f(state.rho_ab.imag)},{f(closed.real)},{f(closed.imag)}")
    lines.append(f"# abs_difference = {f(diff)}")
    lines.append(f"# small_gamma_limit = {f(limit.real)},{f(limit.imag)}")
    return "\n".join(lines) + "\n"


def numeric_trace(cfg):
    """Write by RK4 from the ground mixture, store, read by RK4."""
    atom, beams, seq = cfg.atom, cfg.beams, cfg.sequence
    norm = cfg.normalization
    traj = integrate_write(atom, beams.omega_w(atom), beams.omega_wp(atom), seq)
    grating = apply_storage(traj.density_matrix(-1), seq.t_store, atom)
    read = integrate_read(grating, beams.omega_r(atom), atom, seq)
    values = norm.amp_const * np.abs(read.states[:, 0]) ** 2
    trace = PulseTrace(read.times, values, "gamma12",
                       {"path": "numeric", "write_residual": traj.steady_distance or 0.0})
    if cfg.detector_tau:
        from .emission import detector_lowpass
        trace = detector_lowpass(trace, cfg.detector_tau)
    return trace


def closed_trace(cfg):
    scn = cfg.scenario()
    from .emission import pulse_trace
    grating = build_grating(scn)
    return pulse_trace(grating, scn.beams.i_r_eff, scn.atom, scn.norm, scn.t_read, scn.dt,
                       detector_tau=scn.detector_tau, metadata={"path": "closed"})


def cmd_pulse(cfg, args):
    traces = []
    if args.mode in ("closed", "compare"):
        traces.append(closed_trace(cfg))
    if args.mode in ("numeric", "compare"):
        traces.append(numeric_trace(cfg))
    atom = cfg.atom
    traces = [traceio.to_microseconds(tr, atom) for tr in traces]
    for tr in traces:
        tr.metadata["i_r_mw_per_cm2"] = cfg.get("beams.i_r_mw_per_cm2")
    fmt_ = cfg.get("output.format")
    if fmt_ == "svg":
        series = {tr.metadata["path"]: tr.values for tr in traces}
        return line_plot(traces[0].times, series, "time (us)", "S_fast (arb.)", "retrieved pulse")
    if fmt_ == "json":
        return json.dumps([{"metadata": tr.metadata, "time_us": tr.times.tolist(),
                            "signal": tr.values.tolist()} for tr in traces]) + "\n"
    return traceio.format_traces(traces)


def cmd_sweep(cfg, args):
    grid = parse_grid(args.grid or DEFAULT_GRIDS[args.param])
    scn = cfg.scenario()
    fn = {"read-intensity": sweep_read_intensity, "write-intensity": sweep_write_intensity,
          "storage-time": sweep_storage_time}[args.param]
    table = fn(grid, scn)
    fmt_ = cfg.get("output.format")
    if fmt_ == "svg":
        return line_plot(table.values, {"fwhm_us": table.fwhm,
                                        "energy (norm.)": table.energy / max(table.energy.max(), 1e-300),
                                        "peak (norm.)": table.peak / max(table.peak.max(), 1e-300)},
                         table.fixed["swept"], "", f"sweep {args.param}")
    if fmt_ == "json":
        return json.dumps({"param": table.param, "fixed": table.fixed,
                           "columns": ["param", "fwhm_us", "peak", "energy", "energy_numeric"],
                           "rows": [list(map(float, r)) for r in table.rows()]}) + "\n"
    return traceio.format_sweep_table(table)


def cmd_fit(cfg, args):
    path = args.data
    is_table = traceio.looks_like_sweep_table(path)
    scn = cfg.scenario()
    if args.target == "tau":
        if is_table:
            table = traceio.read_sweep_table(path)
            t, y = table.values, table.peak
        else:
            tr = traceio.ingest_traces(path)[0]
            t, y = tr.times, tr.values
        res = fit_exponential(t, y, convention=args.convention)
        tau = res.estimates["tau"]
        gamma_per_us = res.estimates["gamma"]
        report = {"target": "tau", "tau_us": tau if math.isfinite(tau) else None,
                  "amplitude": res.estimates["amplitude"], "convention": args.convention,
                  "gamma_per_us": gamma_per_us,
                  "gamma_over_gamma12": gamma_per_us * 1e6 / scn.atom.gamma12,
                  "rss": res.rss, "iterations": res.iterations, "converged": res.converged}
    else:
        which = "a" if args.target == "a" else "a_prime"
        data = traceio.read_sweep_table(path) if is_table else traceio.ingest_traces(path)
        bounds = None
        if args.bounds:
            lo, hi = (float(v) for v in args.bounds.split(":"))
            bounds = (lo, hi)
        res = fit_scale_parameter(data, which, scn, bounds=bounds, observable=args.observable)
        report = {"target": args.target, which: res.estimates[which], "scale": res.estimates["scale"],
                  "observable": res.info["observable"], "rss": res.rss,
                  "evaluations": res.evaluations, "converged": res.converged}
    text = json.dumps(report, indent=2) + "\n"
    if not res.converged:
        emit(cfg, text)
        raise NumericalFailure(f"fit for {args.target} did not converge")
    return text


def cmd_farfield(cfg, args):
    atom, beams = cfg.atom, cfg.beams
    cloud = cfg.cloud
    try:
        n, span = args.plane.split(":")
        n, span = int(n), float(span)
    except ValueError:
        raise ConfigError(f"--plane expects N:SPAN, got {args.plane!r}") from None
    if n < 2 or span <= 0:
        raise ConfigError("--plane needs N >= 2 and SPAN > 0")
    t = atom.us_to_internal(args.time)
    grating = build_grating(cfg.scenario())
    kw = np.asarray(cloud.k_wprime)
    u = np.array([math.cos(beams.theta), 0.0, -math.sin(beams.theta)])
    v = np.array([0.0, 1.0, 0.0])
    q = np.linspace(-span, span, n) / cloud.rms_width
    qu, qv = np.meshgrid(q, q, indexing="ij")
    k = -kw + qu[..., None] * u + qv[..., None] * v
    amp = farfield_amplitude(k, t, grating, cloud, beams.i_r_eff, atom, cfg.normalization)
    inten = np.abs(amp) ** 2
    f = traceio.fmt
    if cfg.get("output.format") == "json":
        return json.dumps({"q_per_um": (q * 1e-6).tolist(), "intensity": inten.tolist(),
                           "grating_period_um": grating_period(beams.wavelength, beams.theta) * 1e6}) + "\n"
    lines = [f"# grating_period_um = {f(grating_period(beams.wavelength, beams.theta) * 1e6)}",
             f"# time_us = {f(args.time)}",
             "# qu_per_um,qv_per_um,intensity"]
    for i in range(n):
        for j in range(n):
            lines.append(f"{f(qu[i, j] * 1e-6)},{f(qv[i, j] * 1e-6)},{f(inten[i, j])}")
    return "\n".join(lines) + "\n"


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one configuration value (repeatable)")
    common.add_argument("--output", "-o", help="output path ('-' for stdout)")
    common.add_argument("--format", choices=["csv", "json", "svg"])
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="gratingmem",
                                description="Stored coherence grating: write, store, read.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("steady", parents=[common], help="write-phase steady state")

    sp = sub.add_parser("pulse", parents=[common], help="retrieved pulse S_fast(t)")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--closed-form", dest="mode", action="store_const", const="closed")
    g.add_argument("--numeric", dest="mode", action="store_const", const="numeric")
    g.add_argument("--compare", dest="mode", action="store_const", const="compare")
    sp.set_defaults(mode="closed")

    sw = sub.add_parser("sweep", parents=[common], help="figure-regeneration sweeps")
    sw.add_argument("--param", required=True, choices=sorted(DEFAULT_GRIDS))
    sw.add_argument("--grid", help="start:stop:num[:log] (mW/cm^2 or us)")

    ft = sub.add_parser("fit", parents=[common], help="fit tau, a or a'")
    ft.add_argument("--data", required=True)
    ft.add_argument("--target", required=True, choices=["tau", "a", "a-prime"])
    ft.add_argument("--observable", default="energy", choices=["energy", "peak", "fwhm"])
    ft.add_argument("--convention", default="amplitude", choices=["amplitude", "intensity"])
    ft.add_argument("--bounds", help="lo:hi search interval for a or a'")

    ff = sub.add_parser("farfield", parents=[common], help="|E_D(k)|^2 around -k_W'")
    ff.add_argument("--time", type=float, required=True, help="read time in us")
    ff.add_argument("--plane", default="41:3", help="N:SPAN, SPAN in units of 1/L")
    return p


COMMANDS = {"steady": cmd_steady, "pulse": cmd_pulse, "sweep": cmd_sweep,
            "fit": cmd_fit, "farfield": cmd_farfield}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        text = COMMANDS[args.command](cfg, args)
        emit(cfg, text)
    except (ConfigError, ParameterError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except TraceFormatError as exc:
        log.error("data format error: %s", exc)
        return EXIT_DATA
    except (IntegrationDiverged, DegenerateSteadyState, UndefinedCoherence, TruncatedPulse,
            NumericalFailure) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
