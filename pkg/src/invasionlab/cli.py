"""Command-line surface.

Subcommands: simulate, analyze, wavetrain, front, dispersion, spectrum,
eikonal, report.  Exit codes: 0 ok, 2 config error, 3 integration blow-up,
4 missing data, 5 solver failure.  INVASIONLAB_OUT overrides the default
output root.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import diagnostics as dg
from . import eikonal as ek
from . import front as fr
from . import io as ilio
from . import spectral as spc
from . import wavetrain as wtm
from .core import Grid, State
from .stepper import IntegrationBlowup, SchemeConfig, Trajectory, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_MISSING = 4
EXIT_SOLVER = 5

_SOLVER_ERRORS = (wtm.WaveTrainError, spc.SpectralError, fr.FrontError,
                  ek.FitFailed, dg.DiagnosticsError)


def _out_dir(args, default_name: str) -> str:
    out = args.out or os.path.join(ilio.default_out_root(), default_name)
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, default=ilio._jsonable)
        fh.write("\n")


def _traj_from_run(run_dir: str) -> Trajectory:
    manifest = ilio.load_manifest(run_dir)
    snaps = ilio.load_snapshots(run_dir, manifest)
    cfg = manifest["config"]
    traj = Trajectory(params=ilio.build_params(cfg),
                      cfg=ilio.build_scheme(cfg), snapshots=snaps,
                      events_fired=manifest.get("events_fired", []))
    return traj


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = ilio.load_config(args.config)
    out = _out_dir(args, "run")
    writer = ilio.RunWriter(out, cfg)
    params = ilio.build_params(cfg)
    scheme = ilio.build_scheme(cfg)
    initial = ilio.build_initial_state(cfg, seed=args.seed)
    events = ilio.build_events(cfg)
    traj = run(initial, params, scheme, events=events, sink=writer.sink)
    level = 0.5 * (1.0 - params.a)
    try:
        ts, pos = fr.front_positions(traj, level)
    except fr.FrontError:
        ts, pos = np.array([]), np.array([])
    ilio.write_csv(os.path.join(out, "front_positions.csv"),
                   ["t", "position"], [ts, pos])
    writer.add_file("front_positions.csv")
    writer.finalize(traj)
    print(out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    traj = _traj_from_run(args.run)
    out = _out_dir(args, "analysis")
    params = traj.params
    level = 0.5 * (1.0 - params.a)
    summary: dict = {"run": args.run, "checks": {}}

    ts, pos = fr.front_positions(traj, level)
    if ts.size >= 10:
        c_ps, stderr = fr.measure_speed(ts, pos)
        summary["c_ps"] = c_ps
        summary["c_ps_stderr"] = stderr
        summary["checks"]["front_speed_measured"] = True
    else:
        summary["checks"]["front_speed_measured"] = False

    try:
        fp = fr.extract_front(traj, params)
        eta_ps, r2 = fr.fit_tail_decay(fp)
        summary["eta_ps"] = eta_ps
        summary["eta_ps_r2"] = r2
        summary["alignment_residual"] = fp.alignment_residual
        summary["checks"]["front_extracted"] = True
    except fr.FrontError as exc:
        summary["checks"]["front_extracted"] = False
        summary["checks"]["front_error"] = str(exc)
        fp = None

    if fp is not None and ts.size:
        try:
            k = dg.measure_wavenumber(traj.final(),
                                      (pos[-1] - 300.0, pos[-1] - 40.0))
            summary["k_selected"] = k
            summary["checks"]["wavenumber_measured"] = True
        except dg.DiagnosticsError as exc:
            summary["checks"]["wavenumber_measured"] = False
            summary["checks"]["wavenumber_error"] = str(exc)

    times = traj.times
    sup_u = np.array([float(np.max(np.abs(s.u))) for s in traj.snapshots])
    l2_u = np.array([float(np.sqrt(np.trapezoid(s.u ** 2, dx=s.grid.h)))
                     for s in traj.snapshots])
    ilio.write_csv(os.path.join(out, "norms.csv"),
                   ["t", "sup_u", "l2_u"], [times, sup_u, l2_u])

    field = np.array([s.u for s in traj.snapshots])
    ilio.write_heatmap(os.path.join(out, "spacetime_u.pgm"), field,
                       sidecar={"t0": float(times[0]), "t1": float(times[-1]),
                                "x_min": traj.final().grid.x_min,
                                "x_max": traj.final().grid.x_max})
    _write_json(os.path.join(out, "summary.json"), summary)
    print(out)
    return EXIT_OK


def cmd_wavetrain(args) -> int:
    cfg = ilio.load_config(args.config)
    params = ilio.build_params(cfg)
    wt_cfg = cfg.get("wavetrain", {})
    out = _out_dir(args, "wavetrain")
    if not args.run:
        raise ilio.MissingData("wavetrain needs --run with a developed wake")
    traj = _traj_from_run(args.run)
    level = 0.5 * (1.0 - params.a)
    pos = fr.front_position(traj.final(), level)
    window = tuple(wt_cfg.get("window", (pos - 300.0, pos - 40.0)))
    if "c" in wt_cfg:
        c = float(wt_cfg["c"])
    else:
        ts, positions = fr.front_positions(traj, level)
        c, _ = fr.measure_speed(ts, positions)
    guess = wtm.wavetrain_from_simulation(traj, window,
                                          m=int(wt_cfg.get("m", 256)), c=c)
    wt = wtm.solve_wavetrain(params, c, guess)
    ilio.write_wavetrain(os.path.join(out, "wavetrain.json"), wt)
    l_minus, l_plus = wtm.wavelength_quadrature(params)
    _write_json(os.path.join(out, "wavelength.json"), {
        "L": wt.L, "k_wt": wt.k_wt, "c": wt.c, "residual": wt.residual,
        "eps_L": params.eps * wt.L,
        "L_minus": l_minus, "L_plus": l_plus,
        "quadrature_sum": l_minus + l_plus,
        "deviation": abs(params.eps * wt.L - l_minus - l_plus),
        "bound_3_eps_cuberoot": 3.0 * params.eps ** (1.0 / 3.0),
    })
    print(out)
    return EXIT_OK


def cmd_front(args) -> int:
    traj = _traj_from_run(args.run)
    out = _out_dir(args, "front")
    fp = fr.extract_front(traj, traj.params)
    eta_ps, r2 = fr.fit_tail_decay(fp)
    ilio.write_snapshot(os.path.join(out, "front_profile.bin"),
                        State(fp.grid, 0.0, fp.u_ps, fp.w_ps))
    _write_json(os.path.join(out, "front.json"), {
        "c_ps": fp.c_ps, "eta_ps": eta_ps, "eta_ps_r2": r2,
        "alignment_residual": fp.alignment_residual,
    })
    print(out)
    return EXIT_OK


def cmd_dispersion(args) -> int:
    cfg = ilio.load_config(args.config)
    params = ilio.build_params(cfg)
    out = _out_dir(args, "dispersion")
    c_lin, eta_lin, root = spc.linear_spreading_speed(params)
    _write_json(os.path.join(out, "dispersion.json"), {
        "c_lin": c_lin, "eta_lin": eta_lin,
        "lambda_star": [root.lam.real, root.lam.imag],
        "nu_star": [root.nu.real, root.nu.imag],
        "pinched": root.pinched,
    })
    print(out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if not args.wavetrain:
        raise ilio.MissingData("spectrum needs --wavetrain RECORD")
    wt = ilio.read_wavetrain(args.wavetrain)
    cfg = ilio.load_config(args.config)
    params = ilio.build_params(cfg)
    out = _out_dir(args, "spectrum")
    spec = spc.bloch_sweep(params, wt, n_k=args.n_k, threads=args.threads)
    rows_k, rows_re, rows_im = [], [], []
    for k, lams in zip(spec.k_grid, spec.eigenvalues):
        if lams is None:
            continue
        for lam in lams:
            rows_k.append(k)
            rows_re.append(lam.real)
            rows_im.append(lam.imag)
    ilio.write_csv(os.path.join(out, "bloch_spectrum.csv"),
                   ["k", "re_lambda", "im_lambda"],
                   [np.array(rows_k), np.array(rows_re), np.array(rows_im)])
    c_g, d_eff, _ = spc.critical_curve(params, wt)
    c_g_adj = spc.group_velocity_adjoint(params, wt)
    _write_json(os.path.join(out, "spectrum.json"), {
        "zero_eigenvalue": [spec.zero_eigenvalue.real,
                            spec.zero_eigenvalue.imag],
        "simplicity_gap": spec.simplicity_gap,
        "theta_fit": spec.theta_fit,
        "max_real_part_excl_zero": spec.max_real_part(),
        "violations": spec.violations,
        "c_g": c_g, "c_g_adjoint": c_g_adj, "d_eff": d_eff,
    })
    print(out)
    return EXIT_OK


def cmd_eikonal(args) -> int:
    cfg = ilio.load_config(args.config)
    if "eikonal" not in cfg:
        raise ilio.ConfigError("eikonal", "missing section for this command")
    e = cfg["eikonal"]
    grid = ilio.build_grid(cfg)
    out = _out_dir(args, "eikonal")
    ecfg = ek.EikonalConfig(d_eff=float(e["d_eff"]), c_g=float(e["c_g"]),
                            beta=float(e.get("beta", 0.0)), grid=grid,
                            dt=float(e["dt"]))
    amp = float(e.get("amplitude", 1.0))
    width = float(e.get("width", 2.0))
    psi0 = amp * ek.erf_unnormalized(grid.x / width) / np.sqrt(np.pi)
    times, frames = ek.eikonal_run(psi0, ecfg, float(e["t_end"]))
    cols = [times] + [np.array([fr_[i] for fr_ in frames])
                      for i in range(0, grid.n, max(grid.n // 64, 1))]
    hdr = ["t"] + [f"psi_{i}" for i in range(0, grid.n, max(grid.n // 64, 1))]
    ilio.write_csv(os.path.join(out, "phase_frames.csv"), hdr, cols)
    d0, ampl, off, resid = ek.fit_erf(frames[-1], grid.x, times[-1],
                                      float(e["c_g"]))
    _write_json(os.path.join(out, "erf_fit.json"), {
        "t": float(times[-1]), "d0": d0, "amplitude": ampl, "offset": off,
        "rms_residual": resid,
        "relative_residual": resid / abs(ampl) if ampl else np.nan,
    })
    print(out)
    return EXIT_OK


def cmd_report(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    traj = _traj_from_run(args.run)
    out = _out_dir(args, "report")
    times = traj.times
    x = traj.final().grid.x
    field = np.array([s.u for s in traj.snapshots])

    fig, ax = plt.subplots(figsize=(8, 5))
    im = ax.imshow(field, aspect="auto", origin="lower",
                   extent=(x[0], x[-1], times[0], times[-1]), cmap="viridis")
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel("t")
    ax.set_title("u spacetime")
    fig.colorbar(im, ax=ax, label="u")
    fig.savefig(os.path.join(out, "spacetime_u.png"), dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(x, traj.final().u, label="u")
    ax.plot(x, traj.final().w, label="w")
    ax.set_xlabel(r"$\xi$")
    ax.set_title(f"final profile, t={times[-1]:g}")
    ax.legend()
    fig.savefig(os.path.join(out, "final_profile.png"), dpi=150)
    plt.close(fig)

    level = 0.5 * (1.0 - traj.params.a)
    try:
        ts, pos = fr.front_positions(traj, level)
    except fr.FrontError:
        ts, pos = np.array([]), np.array([])
    if ts.size:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(ts, pos, ".-")
        ax.set_xlabel("t")
        ax.set_ylabel("front position")
        fig.savefig(os.path.join(out, "front_position.png"), dpi=150)
        plt.close(fig)
        ilio.write_csv(os.path.join(out, "front_positions.csv"),
                       ["t", "position"], [ts, pos])

    ilio.write_heatmap(os.path.join(out, "spacetime_u.pgm"), field,
                       sidecar={"t0": float(times[0]), "t1": float(times[-1]),
                                "x_min": float(x[0]), "x_max": float(x[-1])})
    print(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config path")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="cap on concurrent eigen-solves")
    common.add_argument("--seed", type=int, default=None,
                        help="PRNG seed override (noise init)")
    common.add_argument("--run", help="existing run directory")
    common.add_argument("--wavetrain", help="wave-train record path")
    common.add_argument("--n-k", type=int, default=64,
                        help="Floquet grid size for spectrum")

    parser = argparse.ArgumentParser(
        prog="invasionlab",
        description="Pushed pattern-forming invasion fronts: simulation "
                    "and spectral analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("simulate", cmd_simulate), ("analyze", cmd_analyze),
                     ("wavetrain", cmd_wavetrain), ("front", cmd_front),
                     ("dispersion", cmd_dispersion),
                     ("spectrum", cmd_spectrum), ("eikonal", cmd_eikonal),
                     ("report", cmd_report)):
        p = sub.add_parser(name, parents=[common])
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    needs_config = args.func in (cmd_simulate, cmd_wavetrain, cmd_dispersion,
                                 cmd_spectrum, cmd_eikonal)
    needs_run = args.func in (cmd_analyze, cmd_front, cmd_report)
    try:
        if needs_config and not args.config:
            raise ilio.ConfigError("config", "--config is required")
        if needs_run and not args.run:
            raise ilio.MissingData("--run is required for this command")
        return args.func(args)
    except ilio.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationBlowup as exc:
        print(f"integration blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except ilio.MissingData as exc:
        print(f"missing data: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except _SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
