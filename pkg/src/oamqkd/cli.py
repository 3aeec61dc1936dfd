"""Command-line front end: simulate, keyrate, turbulence, sweep.

Parameters come from an optional flat key=value config file (section-prefixed
keys such as ``source.mu``) with command-line flags taking precedence.  Data
goes to files in the output directory; diagnostics go to stderr.  Exit codes:
0 success, 1 usage/config error, 2 runtime/domain error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import link_budget as lb
from . import simulator as sim
from . import turbulence as turb
from .errors import (
    BoundUndefinedError,
    DegenerateInputError,
    DomainError,
    EstimationError,
    ThresholdUndefinedError,
    ValidationError,
)
from .fileio import FULL_FLOAT_FORMAT, ConfigMap, write_csv, write_key_values
from .keyrate import (
    DecoyObservables,
    ECModel,
    binary_entropy,
    secret_key_rate,
    single_photon_rate,
)
from .optics import Encoding

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

OBSERVABLE_FIELDS = ("mu", "nu", "q_mu", "e_mu", "q_nu", "e_nu", "y0")


class UsageError(Exception):
    """Bad invocation, bad config, or a malformed/missing input file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _pick(flag_value, cfg: ConfigMap, key: str, default, getter="get_float"):
    if flag_value is not None:
        return flag_value
    return getattr(cfg, getter)(key, default)


def _load_config(args) -> ConfigMap:
    if args.config is None:
        return ConfigMap.empty()
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    return ConfigMap.load(path)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="key=value config file")
    common.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
    common.add_argument("--out", type=str, default=".", help="output directory")

    parser = _Parser(prog="oamqkd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo BB84+decoy session")
    p.add_argument("--pulses", type=int, default=None, help="pulses to send (default 1000000)")
    p.add_argument("--block-size", type=int, default=None, help="pulses per block (default 2880)")
    p.add_argument("--encoding", choices=[e.value for e in Encoding], default=None)
    p.add_argument("--theta", type=float, default=None, help="frame misalignment angle (rad)")

    p = sub.add_parser("keyrate", parents=[common], help="decoy key-rate analysis")
    src_group = p.add_mutually_exclusive_group()
    src_group.add_argument("--observables", type=str, default=None,
                           help="key=value observables file (as written by simulate)")
    src_group.add_argument("--csv", type=str, default=None,
                           help="CSV of observables, one breakdown per row")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--q-mu", type=float, default=None)
    p.add_argument("--e-mu", type=float, default=None)
    p.add_argument("--q-nu", type=float, default=None)
    p.add_argument("--e-nu", type=float, default=None)
    p.add_argument("--y0", type=float, default=None)
    p.add_argument("--f", type=float, default=None, help="error-correction efficiency")
    p.add_argument("--e0", type=float, default=None, help="vacuum error rate")
    p.add_argument("--single-photon", action="store_true",
                   help="rate for an ideal single-photon source instead of decoy bounds")

    p = sub.add_parser("turbulence", parents=[common], help="beam-wander turbulence estimate")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--frames", type=str, default=None, help="directory of frame files")
    mode.add_argument("--synthetic", action="store_true", help="generate synthetic frames")
    mode.add_argument("--sigma-m-mm", type=float, default=None,
                      help="skip frames; use this wander sigma (mm) directly")
    p.add_argument("--n-frames", type=int, default=None, help="synthetic frame count (default 177)")
    p.add_argument("--wander-std-mm", type=float, default=None,
                   help="synthetic per-axis wander std (mm, default 0.33)")
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--pitch-mm", type=float, default=None)
    p.add_argument("--waist-mm", type=float, default=None)
    p.add_argument("--profile", choices=turb.SPOT_PROFILES, default=None)
    p.add_argument("--length-m", type=float, default=None, help="path length (default 210)")
    p.add_argument("--wavelength-nm", type=float, default=None, help="wavelength (default 850)")
    p.add_argument("--beam-radius-m", type=float, default=None,
                   help="beam radius for the weak-turbulence flag (default 0.015)")

    p = sub.add_parser("sweep", parents=[common], help="rate-vs-gain sweep and threshold")
    p.add_argument("--q-mu-min", type=float, default=None)
    p.add_argument("--q-mu-max", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--measured-gain", type=float, default=None,
                   help="operating gain for the loss-margin report (default 1.2e-2)")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--e-ch", type=float, default=None)
    p.add_argument("--dark-rate-hz", type=float, default=None)
    p.add_argument("--gate-s", type=float, default=None)
    p.add_argument("--y0", type=float, default=None)
    p.add_argument("--f", type=float, default=None)
    return parser


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    src = sim.SourceParams(
        mu=cfg.get_float("source.mu", 0.623),
        nu=cfg.get_float("source.nu", 0.165),
        p_mu=cfg.get_float("source.p_mu", 0.7),
        p_nu=cfg.get_float("source.p_nu", 0.2),
        p_vac=cfg.get_float("source.p_vac", 0.1),
        pulse_rate=cfg.get_float("source.pulse_rate", 2.5e6),
        effective_bitrate=cfg.get_float("source.effective_bitrate", 3.0e4),
    )
    ch = sim.ChannelParams(
        eta_ch=cfg.get_float("channel.eta_ch", 0.10),
        eta_c=cfg.get_float("channel.eta_c", 0.30),
        eta_d=cfg.get_float("channel.eta_d", 0.60),
        e_ch=cfg.get_float("channel.e_ch", 0.0),
        y0=cfg.get_float("channel.y0", 0.0),
        theta=_pick(args.theta, cfg, "channel.theta", 0.0),
        encoding=Encoding(_pick(args.encoding, cfg, "channel.encoding", "hybrid", "get_str")),
        block_scintillation_sigma=cfg.get_float("channel.scintillation_sigma", 0.0),
    )
    n_pulses = int(_pick(args.pulses, cfg, "run.pulses", 1_000_000, "get_int"))
    block_size = int(_pick(args.block_size, cfg, "run.block_size", 2880, "get_int"))

    session = sim.run_session(
        src, ch, n_pulses, block_size=block_size, master_seed=args.seed, stream="simulate"
    )

    out = Path(args.out)
    rows = []
    for tally in session.blocks:
        gains, qbers = tally.gains, tally.qbers
        for cls in sim.IntensityClass:
            i = int(cls)
            rows.append(
                (tally.block_index, cls.name.lower(), int(tally.sent[i]), int(tally.detected[i]),
                 int(tally.sifted[i]), int(tally.errors[i]), float(gains[i]), float(qbers[i]))
            )
    write_csv(
        out / "blocks.csv",
        ("block_index", "class", "sent", "detected", "sifted", "errors", "gain", "qber"),
        rows,
    )

    obs = session.observables
    sp = session.single_photon
    write_key_values(
        out / "observables.txt",
        {
            "mu": obs.mu,
            "nu": obs.nu,
            "q_mu": obs.q_mu,
            "e_mu": obs.e_mu,
            "q_nu": obs.q_nu,
            "e_nu": obs.e_nu,
            "y0": obs.y0,
            "n_blocks": len(session.blocks),
            "block_size": block_size,
            "encoding": ch.encoding.value,
            "theta": ch.theta,
            "seed": args.seed,
            "single_photon_gain": sp.gain,
            "single_photon_error_rate": math.nan if sp.error_rate is None else sp.error_rate,
            "single_photon_sifted": sp.sifted,
        },
    )
    print(f"wrote {out / 'blocks.csv'} and {out / 'observables.txt'}", file=sys.stderr)
    return EXIT_OK


def _observables_from_map(values: dict, source: str, mu: float, nu: float) -> DecoyObservables:
    missing = [k for k in OBSERVABLE_FIELDS[2:] if k not in values]
    if missing:
        raise UsageError(f"{source}: missing observable field(s): {', '.join(missing)}")
    try:
        fields = {k: float(values[k]) for k in OBSERVABLE_FIELDS[2:]}
        mu = float(values.get("mu", mu))
        nu = float(values.get("nu", nu))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{source}: non-numeric observable value ({exc})") from None
    return DecoyObservables(mu=mu, nu=nu, **fields)


def _collect_observables(args, cfg: ConfigMap) -> list[tuple[str, DecoyObservables]]:
    mu_default = _pick(args.mu, cfg, "source.mu", 0.623)
    nu_default = _pick(args.nu, cfg, "source.nu", 0.165)
    if args.csv is not None:
        path = Path(args.csv)
        if not path.is_file():
            raise UsageError(f"observables CSV not found: {path}")
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise UsageError(f"{path}: empty CSV")
            for lineno, row in enumerate(reader, start=2):
                source = f"{path}:{lineno}"
                rows.append((source, _observables_from_map(row, source, mu_default, nu_default)))
        if not rows:
            raise UsageError(f"{path}: no data rows")
        return rows
    if args.observables is not None:
        path = Path(args.observables)
        if not path.is_file():
            raise UsageError(f"observables file not found: {path}")
        cfg_obs = ConfigMap.load(path)
        return [(str(path), _observables_from_map(cfg_obs.values, str(path), mu_default, nu_default))]
    inline = {
        "q_mu": args.q_mu,
        "e_mu": args.e_mu,
        "q_nu": args.q_nu,
        "e_nu": args.e_nu,
        "y0": args.y0,
    }
    if any(v is None for v in inline.values()):
        missing = [k for k, v in inline.items() if v is None]
        raise UsageError(
            "provide --observables, --csv, or all inline observable flags "
            f"(missing: {', '.join('--' + k.replace('_', '-') for k in missing)})"
        )
    return [("<flags>", DecoyObservables(mu=mu_default, nu=nu_default, **inline))]


def cmd_keyrate(args) -> int:
    cfg = _load_config(args)
    ec = ECModel(
        f=_pick(args.f, cfg, "ec.f", 1.05),
        e0=_pick(args.e0, cfg, "ec.e0", 0.5),
    )
    out = Path(args.out)
    if args.single_photon:
        rows = []
        for source, obs in _collect_observables(args, cfg):
            leak = ec.f * binary_entropy(obs.e_mu)
            rate = single_photon_rate(obs.e_mu, ec)
            rows.append((obs.e_mu, leak, rate, rate > 0.0))
        write_csv(out / "keyrate.csv", ("e_mu", "leak_ec", "rate", "secure"), rows,
                  float_format=FULL_FLOAT_FORMAT)
    else:
        rows = []
        for source, obs in _collect_observables(args, cfg):
            b = secret_key_rate(obs, ec)
            rows.append((b.q1_lower, b.e1_upper, b.q0, b.leak_ec, b.rate, b.secure))
        write_csv(
            out / "keyrate.csv",
            ("q1_lower", "e1_upper", "q0", "leak_ec", "rate", "secure"),
            rows,
            float_format=FULL_FLOAT_FORMAT,
        )
    print(f"wrote {out / 'keyrate.csv'}", file=sys.stderr)
    return EXIT_OK


def cmd_turbulence(args) -> int:
    cfg = _load_config(args)
    wavelength_nm = _pick(args.wavelength_nm, cfg, "geometry.wavelength_nm", 850.0)
    geom = turb.LinkGeometry(
        length_m=_pick(args.length_m, cfg, "geometry.length_m", 210.0),
        wavelength_m=wavelength_nm * 1e-9,
    )
    beam_radius_m = _pick(args.beam_radius_m, cfg, "geometry.beam_radius_m", 0.015)
    out = Path(args.out)

    centroids: list[turb.CentroidSample] | None = None
    if args.sigma_m_mm is not None:
        if args.sigma_m_mm <= 0.0:
            raise UsageError("--sigma-m-mm must be positive")
        estimate = turb.estimate_from_sigma(args.sigma_m_mm / turb.MM_PER_M, geom)
    else:
        if args.frames is not None:
            frame_dir = Path(args.frames)
            if not frame_dir.is_dir():
                raise UsageError(f"frame directory not found: {frame_dir}")
            paths = sorted(p for p in frame_dir.iterdir() if p.is_file())
            if len(paths) < 2:
                raise UsageError(f"{frame_dir}: need at least 2 frame files, found {len(paths)}")
            frames = []
            for path in paths:
                try:
                    frames.append(turb.read_frame(path))
                except (ValidationError, ValueError) as exc:
                    raise UsageError(f"malformed frame file {path}: {exc}") from None
        elif args.synthetic:
            spot = turb.SpotModel(
                rows=int(_pick(args.rows, cfg, "spot.rows", 256, "get_int")),
                cols=int(_pick(args.cols, cfg, "spot.cols", 256, "get_int")),
                pitch_mm=_pick(args.pitch_mm, cfg, "spot.pitch_mm", 0.05),
                waist_mm=_pick(args.waist_mm, cfg, "spot.waist_mm", 1.0),
                profile=_pick(args.profile, cfg, "spot.profile", "annular", "get_str"),
            )
            wander_mm = _pick(args.wander_std_mm, cfg, "spot.wander_std_mm", 0.33)
            n_frames = int(_pick(args.n_frames, cfg, "spot.n_frames", 177, "get_int"))
            frames = turb.synthesize_frames(
                n_frames, spot, wander_mm / turb.MM_PER_M, rng_seed=args.seed
            )
        else:
            raise UsageError("choose one of --frames, --synthetic, or --sigma-m-mm")
        centroids = [turb.centroid(f) for f in frames]
        estimate = turb.estimate_turbulence(centroids, geom)

    if centroids is not None:
        write_csv(
            out / "centroids.csv",
            ("frame_index", "x_mm", "y_mm"),
            [(i, c.x_mm, c.y_mm) for i, c in enumerate(centroids)],
        )
    write_key_values(
        out / "estimate.txt",
        {
            "sigma_m_m": estimate.sigma_m,
            "r0_m": estimate.r0,
            "cn2_si": estimate.cn2,
            "weak_turbulence_flag": turb.is_weak_turbulence(beam_radius_m, estimate.r0),
            "beam_radius_m": beam_radius_m,
            "length_m": geom.length_m,
            "wavelength_m": geom.wavelength_m,
            "wander_relation_note": (
                "per-axis beam-wander relation applied unchanged to annular OAM spots"
            ),
        },
    )
    print(f"wrote {out / 'estimate.txt'}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    y0_flag = args.y0 if args.y0 is not None else cfg.get_float("budget.y0", None)
    params = lb.LinkBudgetParams(
        mu=_pick(args.mu, cfg, "budget.mu", 0.623),
        nu=_pick(args.nu, cfg, "budget.nu", 0.165),
        e_ch=_pick(args.e_ch, cfg, "budget.e_ch", 0.02),
        f=_pick(args.f, cfg, "budget.f", 1.05),
        dark_rate=_pick(args.dark_rate_hz, cfg, "budget.dark_rate", 100.0),
        gate=_pick(args.gate_s, cfg, "budget.gate", 50e-9),
        y0=y0_flag,
    )
    q_min = _pick(args.q_mu_min, cfg, "sweep.q_mu_min", 1e-5)
    q_max = _pick(args.q_mu_max, cfg, "sweep.q_mu_max", 1.0)
    points = int(_pick(args.points, cfg, "sweep.points", 51, "get_int"))
    measured_gain = _pick(args.measured_gain, cfg, "sweep.measured_gain", 1.2e-2)
    if points <= 0:
        raise UsageError(f"sweep needs a non-empty grid, got points={points}")
    if not 0.0 < q_min <= q_max:
        raise UsageError(f"need 0 < q_mu_min <= q_mu_max, got {q_min}, {q_max}")

    grid = np.logspace(math.log10(q_min), math.log10(q_max), points)
    curve = lb.rate_vs_gain(grid, params)
    out = Path(args.out)
    write_csv(
        out / "sweep.csv",
        ("q_mu", "e_mu_star", "e_nu_star", "q1_lower", "e1_upper", "rate", "secure"),
        [
            (pt.q_mu, pt.e_mu_star, pt.e_nu_star, pt.breakdown.q1_lower,
             pt.breakdown.e1_upper, pt.breakdown.rate, pt.breakdown.secure)
            for pt in curve
        ],
    )

    try:
        g_star = lb.gain_threshold(params)
        margin = lb.loss_margin_db(measured_gain, g_star)
    except ThresholdUndefinedError as exc:
        print(f"warning: gain threshold undefined: {exc}", file=sys.stderr)
        g_star = math.nan
        margin = math.nan
    write_key_values(
        out / "threshold.txt",
        {"g_star": g_star, "measured_gain": measured_gain, "loss_margin_db": margin},
    )
    print(f"wrote {out / 'sweep.csv'} and {out / 'threshold.txt'}", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "keyrate": cmd_keyrate,
    "turbulence": cmd_turbulence,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not 0 <= args.seed < 2**64:
            raise UsageError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, BoundUndefinedError, EstimationError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
