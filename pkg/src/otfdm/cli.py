"""Command-line front end.

Subcommands: numerology, papr, linklevel, linkbudget, selftest. Every run
writes its CSVs plus a manifest (full resolved parameters, seed, and a
sha256 per output) into --out. All randomness derives from --seed;
--threads changes wall time only, never output bytes.
"""

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .link_budget import LinkBudgetParams, link_budget_sweep
from .montecarlo import ChannelSpec, make_setup, run_link_level, run_papr_ccdf
from .numerology import derive_numerology
from .symbol_builder import ModulationScheme

_DIRECTION_PRESETS = {
    # tx_power_dbm, tx_gain_db, rx_gain_db, noise_figure_db (non-standard
    # conventional receiver NF defaults: 9 dB UE, 5 dB BS)
    "dl": (52.0, 18.0, 0.0, 9.0),
    "ul": (23.0, 0.0, 18.0, 5.0),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_manifest(out_dir: Path, subcommand: str, params: dict,
                    outputs: list[Path]) -> None:
    lines = [f"tool = otfdm {__version__}", f"subcommand = {subcommand}"]
    for key in sorted(params):
        lines.append(f"{key} = {params[key]}")
    for p in outputs:
        digest = hashlib.sha256(p.read_bytes()).hexdigest()
        lines.append(f"sha256 {p.name} = {digest}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def emit_plot(csv_path, kind: str):
    """Render a CSV of a known schema into a PNG next to it.

    kind: 'ccdf' (log-y CCDF), 'linklevel' (log-y SER vs SNR),
    'linkbudget' (SNR vs distance). The plot is derived purely from the
    CSV contents.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    csv_path = Path(csv_path)
    header = csv_path.read_text().splitlines()[0].split(",")
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    expected = {
        "ccdf": ["papr_db", "ccdf"],
        "linklevel": ["snr_db", "trials", "symbol_errors", "ser",
                      "mean_evm_db", "mean_chest_nmse_db", "flagged_trials"],
        "linkbudget": ["distance_m", "path_loss_db", "rx_power_dbm",
                       "noise_floor_dbm", "snr_db"],
    }
    if kind not in expected:
        raise ValueError(f"unknown plot kind {kind!r}")
    if header != expected[kind]:
        raise ValueError(f"CSV schema {header} does not match kind {kind!r}")

    fig, ax = plt.subplots(figsize=(6, 4))
    if kind == "ccdf":
        mask = data["ccdf"] > 0
        ax.semilogy(data["papr_db"][mask], data["ccdf"][mask])
        ax.set_xlabel("PAPR [dB]")
        ax.set_ylabel("CCDF")
    elif kind == "linklevel":
        mask = data["ser"] > 0
        ax.semilogy(np.atleast_1d(data["snr_db"])[np.atleast_1d(mask)],
                    np.atleast_1d(data["ser"])[np.atleast_1d(mask)], marker="o")
        ax.set_xlabel("Es/N0 [dB]")
        ax.set_ylabel("SER")
    else:
        ax.plot(data["distance_m"], data["snr_db"])
        ax.set_xlabel("distance [m]")
        ax.set_ylabel("SNR [dB]")
    ax.grid(True, which="both", alpha=0.4)
    out = csv_path.with_suffix(".png")
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def _add_waveform_flags(p: _Parser) -> None:
    p.add_argument("--mod", required=True,
                   help="pi2_bpsk | qpsk | qam16 | qam64 | qam256")
    p.add_argument("--prbs", type=int, default=200, help="number of PRBs (M = 12*prbs)")
    p.add_argument("--ext", type=float, default=0.05, help="excess-bandwidth fraction")
    p.add_argument("--rs-len", type=int, default=139, help="RS length L")
    p.add_argument("--rs-guard", type=int, default=67, help="RS CP/CS guard W")
    p.add_argument("--rs-root", type=int, default=1, help="Zadoff-Chu root")
    p.add_argument("--scs-khz", type=float, default=120.0)
    p.add_argument("--fft", type=int, default=4096)
    p.add_argument("--cp-samples", type=int, default=None)


def _build_parser() -> _Parser:
    parser = _Parser(prog="otfdm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"otfdm {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="plain-text 'key = value' defaults; flags override")
    common.add_argument("--out", type=str, default="otfdm_out")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--plot", action="store_true")

    p = sub.add_parser("numerology", parents=[common],
                       help="symbol timing table for one or more SCS values")
    p.add_argument("--scs-khz", type=str, default="30,60,120,240",
                   help="comma-separated subcarrier spacings in kHz")
    p.add_argument("--fft", type=int, default=4096)
    p.add_argument("--cp-samples", type=int, default=None)

    p = sub.add_parser("papr", parents=[common], help="PAPR CCDF Monte Carlo")
    _add_waveform_flags(p)
    p.add_argument("--symbols", type=int, default=10000)
    p.add_argument("--oversample", type=int, default=4)
    p.add_argument("--baseline", action="store_true",
                   help="v=0 DFT-s-OFDM reference instead of the shaped waveform")

    p = sub.add_parser("linklevel", parents=[common],
                       help="SER/EVM/NMSE sweep over SNR")
    _add_waveform_flags(p)
    p.add_argument("--channel", type=str, default="tdl-d", help="ideal | tdl-d")
    p.add_argument("--ds-ns", type=float, default=10.0)
    p.add_argument("--snr", type=str, default="0,10,20,30,40",
                   help="comma-separated Es/N0 points in dB")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--eq", type=str, default="mmse", choices=["mmse", "zf"])
    p.add_argument("--known-channel", action="store_true",
                   help="equalize with the true response (oracle mode)")

    p = sub.add_parser("linkbudget", parents=[common],
                       help="deterministic SNR vs distance")
    p.add_argument("--scenario", type=str, default="uma", choices=["uma", "rma"])
    p.add_argument("--direction", type=str, default="dl", choices=["dl", "ul"])
    p.add_argument("--fc-ghz", type=float, default=7.075)
    p.add_argument("--bw-mhz", type=float, default=250.0)
    p.add_argument("--tx-dbm", type=float, default=None)
    p.add_argument("--tx-gain-db", type=float, default=None)
    p.add_argument("--rx-gain-db", type=float, default=None)
    p.add_argument("--nf-db", type=float, default=None)
    p.add_argument("--noise-density", type=float, default=-174.0)
    p.add_argument("--bs-height", type=float, default=25.0)
    p.add_argument("--ue-height", type=float, default=1.5)
    p.add_argument("--los", action="store_true")
    p.add_argument("--indoor", type=str, default="none",
                   choices=["none", "fixed", "o2i-low", "o2i-high"])
    p.add_argument("--indoor-loss-db", type=float, default=0.0)
    p.add_argument("--indoor-depth-m", type=float, default=0.0)
    p.add_argument("--distances", type=str, default="50:5000:50",
                   help="start:stop:step in meters, or a comma-separated list")

    sub.add_parser("selftest", parents=[common],
                   help="run the built-in invariant suite")
    return parser


def _apply_config_file(parser: _Parser, argv: list[str]) -> None:
    if "--config" not in argv:
        return
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return  # argparse will report the missing value
    path = Path(argv[idx + 1])
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    defaults = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        defaults[key.strip().replace("-", "_")] = value.strip()
    for subparser in parser._subparsers._group_actions[0].choices.values():
        coerced = {}
        for action in subparser._actions:
            if action.dest not in defaults:
                continue
            raw = defaults[action.dest]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                coerced[action.dest] = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                coerced[action.dest] = action.type(raw)
            else:
                coerced[action.dest] = raw
        subparser.set_defaults(**coerced)


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(" ", "").split(",") if tok]


def _parse_distances(text: str) -> np.ndarray:
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        return np.arange(start, stop + step / 2, step)
    return np.asarray(_parse_float_list(text))


def _cmd_numerology(args, out_dir: Path) -> list[Path]:
    rows = []
    for scs_khz in _parse_float_list(args.scs_khz):
        row = derive_numerology(scs_khz * 1e3, args.fft, args.cp_samples)
        rows.append([
            f"{row.scs_hz:.6g}", row.n_fft, f"{row.sampling_time_s * 1e9:.6g}",
            f"{row.symbol_duration_s * 1e6:.6g}", f"{row.cp_duration_s * 1e6:.6g}",
            f"{row.tti_s * 1e6:.6g}",
        ])
    path = out_dir / "numerology.csv"
    _write_csv(path, ["scs_hz", "n_fft", "sampling_time_ns", "symbol_us",
                      "cp_us", "tti_us"], rows)
    return [path]


def _make_setup_from_args(args):
    return make_setup(n_prb=args.prbs, extension_fraction=args.ext,
                      rs_len=args.rs_len, rs_guard=args.rs_guard,
                      scs_hz=args.scs_khz * 1e3, n_fft=args.fft,
                      cp_samples=args.cp_samples, rs_root=args.rs_root)


def _cmd_papr(args, out_dir: Path) -> list[Path]:
    setup = _make_setup_from_args(args)
    curve = run_papr_ccdf(setup.cfg, ModulationScheme.parse(args.mod),
                          baseline=args.baseline, n_symbols=args.symbols,
                          seed=args.seed, oversample=args.oversample,
                          rs_root=args.rs_root, threads=args.threads)
    path = out_dir / "papr_ccdf.csv"
    _write_csv(path, ["papr_db", "ccdf"],
               [[float(t), float(p)] for t, p in zip(curve.thresholds_db, curve.prob)])
    if args.plot:
        emit_plot(path, "ccdf")
    return [path]


def _cmd_linklevel(args, out_dir: Path) -> list[Path]:
    setup = _make_setup_from_args(args)
    kind = "ideal" if args.channel == "ideal" else "tdl"
    chan = ChannelSpec(kind=kind, profile=args.channel if kind == "tdl" else "tdl-d",
                       ds_ns=args.ds_ns, known_channel=args.known_channel)
    result = run_link_level(setup, ModulationScheme.parse(args.mod), chan,
                            _parse_float_list(args.snr), args.trials,
                            seed=args.seed, equalizer=args.eq, threads=args.threads)
    path = out_dir / "linklevel.csv"
    _write_csv(path, ["snr_db", "trials", "symbol_errors", "ser", "mean_evm_db",
                      "mean_chest_nmse_db", "flagged_trials"],
               [[p.snr_db, p.trials, p.symbol_errors, p.ser, p.mean_evm_db,
                 p.mean_chest_nmse_db, p.flagged_trials] for p in result.points])
    if args.plot:
        emit_plot(path, "linklevel")
    return [path]


def _cmd_linkbudget(args, out_dir: Path) -> list[Path]:
    preset = _DIRECTION_PRESETS[args.direction]
    tx = preset[0] if args.tx_dbm is None else args.tx_dbm
    txg = preset[1] if args.tx_gain_db is None else args.tx_gain_db
    rxg = preset[2] if args.rx_gain_db is None else args.rx_gain_db
    nf = preset[3] if args.nf_db is None else args.nf_db
    # record the resolved preset values in the manifest
    args.tx_dbm, args.tx_gain_db, args.rx_gain_db, args.nf_db = tx, txg, rxg, nf
    params = LinkBudgetParams(
        fc_hz=args.fc_ghz * 1e9, tx_power_dbm=tx, tx_gain_db=txg, rx_gain_db=rxg,
        bandwidth_hz=args.bw_mhz * 1e6, noise_figure_db=nf,
        noise_density_dbm_hz=args.noise_density, bs_height_m=args.bs_height,
        ue_height_m=args.ue_height, scenario=args.scenario, los=args.los,
        link_direction=args.direction, indoor_model=args.indoor,
        indoor_loss_db=args.indoor_loss_db, indoor_depth_m=args.indoor_depth_m)
    rows = link_budget_sweep(params, _parse_distances(args.distances))
    path = out_dir / "linkbudget.csv"
    _write_csv(path, ["distance_m", "path_loss_db", "rx_power_dbm",
                      "noise_floor_dbm", "snr_db"],
               [[r.distance_m, r.path_loss_db, r.rx_power_dbm, r.noise_floor_dbm,
                 r.snr_db] for r in rows])
    if args.plot:
        emit_plot(path, "linkbudget")
    return [path]


def _cmd_selftest(args, out_dir: Path) -> list[Path]:
    from .selftest import run_selftest
    ok = run_selftest(seed=args.seed, threads=args.threads)
    if not ok:
        raise RuntimeError("selftest failed")
    return []


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        _apply_config_file(parser, argv)
    except FileNotFoundError as exc:
        print(f"otfdm: error: {exc}", file=sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    handlers = {
        "numerology": _cmd_numerology,
        "papr": _cmd_papr,
        "linklevel": _cmd_linklevel,
        "linkbudget": _cmd_linkbudget,
        "selftest": _cmd_selftest,
    }
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = handlers[args.subcommand](args, out_dir)
        params = {k: v for k, v in vars(args).items()
                  if k not in ("subcommand", "config", "plot")}
        _write_manifest(out_dir, args.subcommand, params, outputs)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"otfdm: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
