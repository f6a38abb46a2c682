"""``holeburn`` command line: simulate traces and fit them.

Exit status is 0 on success, 1 for invalid input (config, CSV schema,
out-of-domain parameters, I/O) and 2 when a numerical step fails.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import __version__
from .config import ENV_VAR, RunConfig
from .csvio import POPULATION_COLUMNS, read_coherence, read_spectrum, read_trace, write_spectrum, write_table, write_trace
from .errors import ConfigError, DomainError, FitError, NumericalError, SchemaError
from .fidsim import EnsembleSpec, fit_fid, synthesize_fid, tau_fid
from .holesim import default_grid, fit_hole, hole_features, hole_fwhm, spectrum_from_features
from .levelmodel import predict_hole_pattern
from .ratedyn import PumpSchedule, fit_lifetime, hole_area_series, integrate, rise_model
from .report import Report, add_fid_t2, add_hole_t2
from .specdiff import fit_sd, t_m

log = logging.getLogger("holeburn")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def parse_sweep(text: str) -> np.ndarray:
    """``start:stop:step`` inclusive of ``stop`` when it lies on the grid."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"need step > 0 and stop >= start in {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _provenance(report: Report, cfg: RunConfig, inputs=()) -> None:
    for i, p in enumerate(inputs):
        report.add(f"provenance.input{i}", str(p))
    report.add("provenance.config", cfg.source or "<defaults>")
    report.add("provenance.config_sha256", cfg.sha256)
    report.add("provenance.version", __version__)


def _emit(report: Report, out) -> None:
    if out:
        txt, csv_path = report.write(out)
        log.info("wrote %s and %s", txt, csv_path)
    else:
        sys.stdout.write(report.to_text())


def _cfg_comments(cfg: RunConfig) -> list[str]:
    return [f"holeburn {__version__}", f"config {cfg.source or '<defaults>'} sha256 {cfg.sha256}"]


# -- simulate ----------------------------------------------------------------

def cmd_simulate_shb(args, cfg: RunConfig) -> int:
    h = cfg["holes"]
    fields = args.field_sweep if args.field_sweep is not None else np.array([args.field])
    wait = cfg["protocol"]["wait_s"] if args.wait is None else args.wait
    grid = default_grid(cfg["protocol"]["scan_hz"], h["grid_points"])
    p = cfg.broadening()
    model = cfg.hyperfine_model()
    columns = {}
    for B in fields:
        pattern = predict_hole_pattern(model, float(B), include_antiholes=h["include_antiholes"])
        if pattern.inconsistent_with_data:
            log.warning("B=%g T: selection rule gives central satellites not seen in measurements", B)
        feats = hole_features(pattern, p, wait, lifetimes=cfg.lifetimes(), depth=h["depth_od"],
                              antihole_wait_factor=h["antihole_wait_factor"], x1_lifetime=h["x1_lifetime_s"])
        outside = [f for f in feats if not grid[0] <= f.detuning <= grid[-1]]
        # holes must fit the scan; anti-holes beyond it are dropped with a warning
        if any(f.sign > 0 for f in outside):
            spectrum_from_features(feats, grid, wait, h["baseline_od"])  # raises with the list
        if outside:
            log.warning("B=%g T: %d anti-hole(s) outside the %g Hz scan omitted", B, len(outside), grid[-1] - grid[0])
        spec = spectrum_from_features(feats, grid, wait, h["baseline_od"], allow_truncation=True)
        name = "od" if args.field_sweep is None else f"od_B{float(B):g}"
        columns[name] = spec.od
    comments = _cfg_comments(cfg) + [f"wait_s {wait!r}", f"hole_fwhm_hz {hole_fwhm(p)!r}"]
    write_spectrum(args.out, grid, columns, comments)
    return EXIT_OK


def cmd_simulate_fid(args, cfg: RunConfig) -> int:
    b, f = cfg["broadening"], cfg["fid"]
    spec = EnsembleSpec(
        b["gamma_hom_hz"] if args.gamma_hom is None else args.gamma_hom,
        b["gamma_laser_hz"] if args.gamma_laser is None else args.gamma_laser,
        f["detuning_cutoff"],
    )
    tau = tau_fid(spec.gamma_hom, spec.gamma_laser)
    times = np.linspace(0.0, f["span_tau"] * tau, f["points"])
    trace = synthesize_fid(spec, times)
    comments = _cfg_comments(cfg) + [f"gamma_hom_hz {spec.gamma_hom!r}", f"gamma_laser_hz {spec.gamma_laser!r}",
                                     f"tau_fid_s {tau!r}"]
    write_trace(args.out, trace.times, trace.intensity, comments)
    return EXIT_OK


def cmd_simulate_pump(args, cfg: RunConfig) -> int:
    p = cfg.rate_params()
    sched = cfg.schedule()
    if args.tau_pump is not None or args.tau_delay is not None:
        sched = PumpSchedule(sched.tau_pump if args.tau_pump is None else args.tau_pump,
                             sched.tau_delay if args.tau_delay is None else args.tau_delay,
                             sched.read_window)
    comments = _cfg_comments(cfg)
    try:
        rm = rise_model(p)
        comments += [f"rise {k} {v!r}" for k, v in rm.items()]
    except DomainError as exc:
        log.warning("%s", exc)
    trace = integrate(p, sched)
    write_table(args.out, POPULATION_COLUMNS, [trace.times, trace.n_g, trace.n_e, trace.n_b], comments)
    if args.delay_sweep is not None:
        if not args.area_out:
            raise ConfigError("--delay-sweep needs --area-out")
        areas = hole_area_series(p, sched.tau_pump, args.delay_sweep)
        write_trace(args.area_out, args.delay_sweep, areas,
                    comments + [f"tau_pump_s {sched.tau_pump!r}", "time_s is the pump-to-read delay"])
    return EXIT_OK


# -- fit ---------------------------------------------------------------------

def cmd_fit_hole(args, cfg: RunConfig) -> int:
    x, y = read_spectrum(args.input, args.column)
    if args.span_hz is not None:
        c = 0.0 if args.center_hz is None else args.center_hz
        keep = np.abs(x - c) <= args.span_hz / 2
        x, y = x[keep], y[keep]
    res = fit_hole(x, y)
    b = cfg["broadening"]
    r = Report("fit-hole")
    r.add("input.column", args.column)
    r.add("input.points", int(x.size))
    r.add("input.detuning_min_hz", float(x[0]))
    r.add("input.detuning_max_hz", float(x[-1]))
    r.add_fit(res, {"center": "hz", "fwhm": "hz", "depth": "od", "baseline": "od"})
    add_hole_t2(r, res["fwhm"], res.sigmas["fwhm"], b["gamma_laser_hz"], b["gamma_laser_sigma_hz"])
    _provenance(r, cfg, [args.input])
    _emit(r, args.out)
    return EXIT_OK


def cmd_fit_fid(args, cfg: RunConfig) -> int:
    t, v = read_trace(args.input)
    res = fit_fid(t, v)
    b = cfg["broadening"]
    r = Report("fit-fid")
    r.add("input.points", int(t.size))
    r.add_fit(res, {"tau": "s", "tau_fid": "s"})
    add_fid_t2(r, res["tau_fid"], res.sigmas["tau_fid"], b["gamma_laser_hz"], b["gamma_laser_sigma_hz"])
    _provenance(r, cfg, [args.input])
    _emit(r, args.out)
    return EXIT_OK


def cmd_fit_lifetime(args, cfg: RunConfig) -> int:
    t, v = read_trace(args.input)
    if args.t_min is not None:
        keep = t >= args.t_min
        t, v = t[keep], v[keep]
    res = fit_lifetime(t, v, biexponential=args.biexp)
    r = Report("fit-lifetime")
    r.add("input.points", int(t.size))
    r.add("input.t_min_s", float(t[0]))
    r.add("input.model", "biexponential" if args.biexp else "exponential")
    r.add_fit(res, {"tau": "s", "tau1": "s", "tau2": "s"})
    _provenance(r, cfg, [args.input])
    _emit(r, args.out)
    return EXIT_OK


def cmd_fit_sd(args, cfg: RunConfig) -> int:
    pts = read_coherence(args.input)
    frozen = cfg.frozen()
    fitres = fit_sd(pts, frozen=frozen, init=cfg.sd_params())
    r = Report("fit-sd")
    r.add("input.points", len(pts))
    r.add("input.frozen", ",".join(frozen) or "none")
    units = {"a_d": "hz2_per_t5", "b_f": "hz2", "c0": "hz2", "gamma0": "hz"}
    r.add_fit(fitres.result, units)
    temperature = cfg["sd"]["temperature_k"]
    for B in (0.0, 1.0, 2.0):
        r.add(f"derived.t_m_s.B{B:g}T", float(t_m(B, temperature, fitres.params)))
    r.add("derived.t_m_asymptote_s", 1.0 / (math.pi * fitres.params.gamma0))
    _provenance(r, cfg, [args.input])
    _emit(r, args.out)
    return EXIT_OK


# -- wiring ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input, status 1; argparse would use 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="holeburn", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help=f"config file (default: ${ENV_VAR}, else built-in defaults)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate-shb", parents=[common], help="hole-burning spectrum CSV")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--field", type=float, default=0.0, help="magnetic field, T")
    g.add_argument("--field-sweep", type=parse_sweep, metavar="START:STOP:STEP")
    s.add_argument("--wait", type=float, help="burn-to-read wait, s")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_simulate_shb)

    s = sub.add_parser("simulate-fid", parents=[common], help="FID intensity trace CSV")
    s.add_argument("--gamma-hom", type=float, help="homogeneous linewidth, Hz")
    s.add_argument("--gamma-laser", type=float, help="laser linewidth, Hz")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_simulate_fid)

    s = sub.add_parser("simulate-pump", parents=[common], help="population trace and hole-area series")
    s.add_argument("--tau-pump", type=float, help="pump duration, s")
    s.add_argument("--tau-delay", type=float, help="pump-to-read delay, s")
    s.add_argument("--delay-sweep", type=parse_sweep, metavar="START:STOP:STEP")
    s.add_argument("--area-out", help="hole-area vs delay CSV")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_simulate_pump)

    s = sub.add_parser("fit-hole", parents=[common], help="Lorentzian fit of a hole")
    s.add_argument("input")
    s.add_argument("--column", default="od")
    s.add_argument("--center-hz", type=float)
    s.add_argument("--span-hz", type=float, help="fit window width around --center-hz")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit_hole)

    s = sub.add_parser("fit-fid", parents=[common], help="exponential fit of an FID trace")
    s.add_argument("input")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit_fid)

    s = sub.add_parser("fit-lifetime", parents=[common], help="exponential decay fit")
    s.add_argument("input")
    s.add_argument("--biexp", action="store_true")
    s.add_argument("--t-min", type=float, help="drop points before this time, s")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit_lifetime)

    s = sub.add_parser("fit-sd", parents=[common], help="spectral-diffusion fit of coherence data")
    s.add_argument("input")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit_sd)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="holeburn: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = RunConfig.load(args.config)
        return args.func(args, cfg)
    except (NumericalError, FitError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except (ConfigError, SchemaError, DomainError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
