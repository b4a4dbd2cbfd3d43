"""Command-line interface.

Exit codes: 0 success, 2 configuration or input error, 3 verification
failure, 4 I/O failure.  ``SYNTHCORR_THREADS`` sets the worker count for
sweeps and numba kernels.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .config import ConfigError, RunConfig, load_config
from .io import fmt, write_csv, write_matrix_csv

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4


class VerificationError(RuntimeError):
    pass


def _threads() -> int:
    try:
        n = int(os.environ.get("SYNTHCORR_THREADS", "0"))
    except ValueError:
        raise ConfigError("SYNTHCORR_THREADS must be an integer") from None
    if n > 0 and _kernels.HAVE_NUMBA:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return max(n, 1)


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}.{suffix}.csv")


# ------------------------------------------------------------- synthesize

def _read_matrix(path: str) -> np.ndarray:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([complex(tok.replace("i", "j")) for tok in line.replace(",", " ").split()])
        except ValueError:
            raise ConfigError(f"cannot parse matrix row {line!r}") from None
    m = np.array(rows)
    if m.shape != (4, 4):
        raise ConfigError(f"matrix must be 4x4, got {m.shape}")
    return np.real_if_close(m)


def verify_table2(out=None, tol: float = 1e-10) -> float:
    from .reference import MATRIX_UNIT_EXPANSIONS
    from .synthesis import SPARSE_NAMES, decompose, sparse_element

    out = out or sys.stdout
    worst = 0.0
    for name in SPARSE_NAMES:
        sol = decompose(sparse_element(name))
        dev = float(np.max(np.abs(sol.vector - MATRIX_UNIT_EXPANSIONS[name])))
        worst = max(worst, dev)
        print(f"{name}: max deviation {dev:.3e} {'ok' if dev <= tol else 'MISMATCH'}", file=out)
    if worst > tol:
        raise VerificationError(f"matrix-unit expansion mismatch: max deviation {worst:.3e}")
    return worst


def cmd_synthesize(args) -> int:
    from .catalog import LABELS
    from .synthesis import decompose, sparse_element

    if args.verify_table2:
        verify_table2()
        return EXIT_OK
    if args.element:
        try:
            target = sparse_element(args.element)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    elif args.matrix:
        target = _read_matrix(args.matrix)
    else:
        target = np.eye(4)
    sol = decompose(target)
    for label in LABELS:
        print(f"{label:8s} {fmt(np.real(sol.weights[label]))}")
    print(f"residual {sol.residual:.3e}")
    if args.output:
        write_csv(args.output, {"operation": np.arange(len(LABELS)), "weight": np.real(sol.vector)},
                  {"labels": list(LABELS), "residual": sol.residual})
    if sol.residual > args.tol:
        raise VerificationError(f"residual {sol.residual:.3e} exceeds {args.tol:g}")
    return EXIT_OK


def cmd_verify_table2(args) -> int:
    verify_table2()
    return EXIT_OK


# --------------------------------------------------------------- simulate

def _protocol_builder(cfg: RunConfig, model):
    from .engine import ProtocolSpec, Slot, fourth_order_protocol, second_order_protocol
    from .errors import inject_pulse_error
    from .synthesis import parse_channels

    p, e = cfg.raw["protocol"], cfg.raw["errors"]
    params = cfg.experiment
    dth = cfg.errors.delta_theta if e["inject_pulse_error"] else 0.0
    mode = p["coupling_mode"]
    if p["order"] == "second":
        return lambda t: second_order_protocol(params, t, model, mode, dth)
    if p["order"] == "fourth":
        return lambda t: fourth_order_protocol(params, t, p["tau32"], p["tau43"], params.n_repeat, dth, model, mode)
    try:
        chans = parse_channels(Path(p["channel_file"]).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigError(f"channel file: {exc}") from None
    if dth:
        chans = inject_pulse_error(chans, dth)
    taus = list(p["taus"]) or [0.0] * len(chans)
    if len(taus) != len(chans):
        raise ConfigError("[protocol] taus must list one delay per channel")
    if not 0 <= p["sweep_slot"] < len(chans):
        raise ConfigError("[protocol] sweep_slot out of range")

    def build_custom(t):
        tt = list(taus)
        tt[p["sweep_slot"]] = t
        return ProtocolSpec(model, tuple(Slot(c, params.delta_t, x) for c, x in zip(chans, tt)), coupling_mode=mode)

    return build_custom


def _elapsed(spec) -> float:
    ts = spec.correlation_times()
    return ts[-1] - ts[0]


def _metadata(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "version": __version__, "backend": _kernels.BACKEND, "config": cfg.as_dict()}


def cmd_simulate(args) -> int:
    from .engine import SweepResult, spectral_density, sweep, sweep_2d
    from .errors import add_readout_noise, apply_amplitude_decay, deviation_metrics, preset_readout_sigma
    from .model import build
    from .oracle import analytic_C_plus_minus, analytic_C_pmmp, exact_S2, exact_S4

    cfg = load_config(args.config)
    workers = _threads()
    out = Path(args.output or cfg.raw["output"]["path"])
    p, e = cfg.raw["protocol"], cfg.raw["errors"]
    params = cfg.experiment
    meta = _metadata(cfg, "simulate")

    if args.two_d:
        if p["order"] != "fourth":
            raise ConfigError("--2d needs [protocol] order = fourth")
        g21, g43 = cfg.tau_grid, cfg.tau43_grid
        dth = cfg.errors.delta_theta if e["inject_pulse_error"] else 0.0
        mat = sweep_2d(params, g21, g43, p["tau32"], params.n_repeat, dth, p["method"],
                       coupling_mode=p["coupling_mode"])
        spec = spectral_density(mat, cfg.raw["sweep"]["tau_step"], cfg.raw["sweep"]["tau43_step"])
        write_matrix_csv(out, mat, g21, g43, meta, "tau21", "tau43")
        peaks = [list(pk) for pk in spec.peaks]
        write_matrix_csv(_sibling(out, "spectrum"), spec.magnitude, spec.freq_rows, spec.freq_cols,
                         dict(meta, peaks=peaks), "f21", "f43")
        for f1, f2, mag in spec.peaks:
            print(f"peak f21={f1:.1f} Hz f43={f2:.1f} Hz magnitude={mag:.6g}")
        return EXIT_OK

    model = build(params)
    builder = _protocol_builder(cfg, model)
    grid = cfg.tau_grid
    res = sweep(builder, grid, p["method"], workers=workers, axis_name="tau21" if p["order"] != "custom" else "tau")
    signals = res.signals
    if e["apply_decay"]:
        signals = apply_amplitude_decay(signals, [_elapsed(builder(t)) for t in grid], cfg.errors.k_decay)
    sigma = cfg.errors.readout_sigma
    if cfg.readout_preset:
        sigma = preset_readout_sigma(2 if p["order"] == "second" else 4)
    signals = add_readout_noise(signals, sigma, cfg.errors.seed)
    result = SweepResult(grid, signals, np.full(len(grid), sigma), dict(meta, **res.metadata), res.axis_name)
    result.to_csv(out)

    if p["order"] in ("second", "fourth"):
        dt = params.delta_t
        if p["order"] == "second":
            target = np.array([dt ** 2 * analytic_C_plus_minus(t, params) for t in grid])
            exact = np.array([exact_S2(dt, *builder(t).correlation_times(), model) for t in grid])
        else:
            target = np.array([params.p_C * dt ** 4 * analytic_C_pmmp(t, p["tau43"], params) for t in grid])
            exact = np.array([exact_S4(dt, *builder(t).correlation_times(), model) for t in grid])
        cmeta = dict(meta)
        try:
            cmeta["delta_th"] = deviation_metrics(exact, target)[1]
            cmeta["delta_signal"] = deviation_metrics(signals, target)[1]
        except ValueError:
            pass
        write_csv(_sibling(out, "target"), {res.axis_name: grid, "target": target, "exact": exact}, cmeta)
        for key in ("delta_th", "delta_signal"):
            if key in cmeta:
                print(f"{key} {cmeta[key]:.6g}")
    print(f"wrote {out}")
    return EXIT_OK


# ----------------------------------------------------------------- budget

def cmd_budget(args) -> int:
    from .errors import budget_norms, error_components, minimize_total_error, optimal_dt

    cfg = load_config(args.config)
    b = cfg.raw["budget"]
    theta = args.theta or b["theta"]
    sigma = None if cfg.readout_preset else cfg.errors.readout_sigma
    norms = budget_norms(theta, cfg.experiment, cfg.errors, cfg.tau_grid, cfg.raw["protocol"]["tau32"],
                         cfg.raw["protocol"]["tau43"], sigma)
    dts = np.geomspace(b["dt_min"], b["dt_max"], b["dt_count"])
    comps = error_components(dts, norms)
    meta = _metadata(cfg, "budget")
    meta["theta"] = theta
    interior = norms.norm_readout > 0
    if interior:
        closed = optimal_dt(theta, norms.norm_next, norms.norm_readout)
        numeric = minimize_total_error(norms, (b["dt_min"] / 100, b["dt_max"] * 100))
        meta.update(dt_opt=closed, dt_opt_numeric=numeric, interior_minimum=True)
        print(f"dt_opt {closed:.6g} s (numeric minimizer {numeric:.6g} s)")
    else:
        meta["interior_minimum"] = False
        print("no interior minimum: total error increases monotonically with dt")
    out = Path(args.output or cfg.raw["output"]["path"])
    write_csv(out, {"dt": dts, **comps}, meta)
    print(f"wrote {out}")
    return EXIT_OK


# ----------------------------------------------------------------- oracle

_ETA = re.compile(r"^[+\-0−]+$")


def cmd_oracle(args) -> int:
    from .model import build
    from .oracle import OrderingSequence, analytic_C_p00p, analytic_C_plus_minus, analytic_C_pmmp, correlation

    try:
        seq = OrderingSequence.from_string(args.eta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = load_config(args.config) if args.config else None
    params = cfg.experiment if cfg else None
    from .model import ExperimentParams

    params = params or ExperimentParams()
    model = build(params)
    times = args.times or [0.0] * len(seq)
    if len(times) != len(seq):
        raise ConfigError(f"need {len(seq)} times for ordering {args.eta!r}")
    try:
        val = correlation(seq, times, model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"C^{seq.notation} = {fmt(val)}")
    analytic = None
    if params.bath_spins == 3:
        if seq.notation == "+-":
            analytic = analytic_C_plus_minus(times[1] - times[0], params)
        elif seq.notation == "+--+":
            analytic = analytic_C_pmmp(times[1] - times[0], times[3] - times[2], params)
        elif seq.notation == "+00+":
            analytic = analytic_C_p00p(times[3] - times[0], params)
    if analytic is not None:
        print(f"closed form = {fmt(analytic)} (difference {abs(val - analytic):.3e})")
    return EXIT_OK


# ------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="synthcorr", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="decompose a Liouville matrix into catalog weights")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--element", help="matrix unit name such as Pxy or P00")
    g.add_argument("--matrix", help="file with a 4x4 Liouville matrix (one row per line)")
    g.add_argument("--verify-table2", action="store_true", help="check all sixteen matrix-unit expansions")
    s.add_argument("--output", help="optional CSV output")
    s.add_argument("--tol", type=float, default=1e-10, help="residual tolerance")
    s.set_defaults(func=cmd_synthesize)

    v = sub.add_parser("verify-table2", help="check all sixteen matrix-unit expansions")
    v.set_defaults(func=cmd_verify_table2)

    m = sub.add_parser("simulate", help="run a protocol sweep from a config file")
    m.add_argument("config")
    m.add_argument("--2d", dest="two_d", action="store_true", help="tau21 x tau43 sweep and 2D spectrum")
    m.add_argument("--output", help="output CSV (overrides [output] path)")
    m.set_defaults(func=cmd_simulate)

    b = sub.add_parser("budget", help="error budget versus coupling window")
    b.add_argument("config")
    b.add_argument("--theta", type=int, choices=(2, 4))
    b.add_argument("--output")
    b.set_defaults(func=cmd_budget)

    o = sub.add_parser("oracle", help="evaluate a bath correlation")
    o.add_argument("eta", help="ordering in printed notation, e.g. +--+")
    o.add_argument("times", nargs="*", type=float, help="times in seconds, earliest first")
    o.add_argument("--config")
    o.set_defaults(func=cmd_oracle)
    return ap


def _protect_eta(argv: list) -> list:
    """Let orderings such as ``-+`` pass through argparse as positionals."""
    if len(argv) >= 2 and argv[0] == "oracle" and _ETA.match(argv[1]):
        rest, opts, pos = argv[2:], [], []
        it = iter(rest)
        for tok in it:
            if tok == "--config":
                opts += [tok, next(it, "")]
            elif tok.startswith("--config="):
                opts.append(tok)
            else:
                pos.append(tok)
        return ["oracle", *opts, "--", argv[1], *pos]
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_protect_eta(argv))
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
