"""``diffinject`` command line. Every subcommand prints a JSON report or CSV.

Exit status is 0 on success and 2 on any validation error.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import campaign as cp
from .attacker import FlipPair, optimal_pair
from .can_codec import (
    FIG8_FRAME, CanFrame, attack_schedule, dominant_census, encode_frame, parse_hex_bytes,
)
from .errors import DiffInjectError
from .receiver import flip_probability
from .reports import (
    GridRow, SusceptibilityGrid, dumps_report, format_grid, grid_to_feasible, load_grid,
    load_profile, make_report,
)
from .signal_core import DifferentialPair, Waveform, decompose, sinad, subtractor_response

# arguments that change how a result is computed but never what it is
_NOT_CONFIG = {"func", "out", "workers", "command"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _int(text: str) -> int:
    return int(text, 0)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _freq_range(text: str) -> list[float]:
    """``start:stop:step`` in MHz (stop inclusive) or a comma list in MHz."""
    if ":" in text:
        try:
            a, b, s = (float(x) for x in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
        if s <= 0 or b < a:
            raise argparse.ArgumentTypeError("need step > 0 and stop >= start")
        n = int(round((b - a) / s)) + 1
        return [round(a + i * s, 9) * 1e6 for i in range(n)]
    return [f * 1e6 for f in _floats(text)]


def _bits(text: str) -> list[int]:
    text = text.replace(" ", "").replace(",", "")
    if not text or set(text) - {"0", "1"}:
        raise argparse.ArgumentTypeError(f"expected a 0/1 string, got {text!r}")
    return [int(c) for c in text]


def _config(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in _NOT_CONFIG:
            continue
        out[k] = v
    return out


def _emit(args, text: str):
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _report(args, result: dict, seed=None):
    _emit(args, dumps_report(make_report(args.command, _config(args), result, seed)))


def _frame_from_args(args) -> CanFrame | None:
    if getattr(args, "frame", None) == "fig8":
        return FIG8_FRAME
    if getattr(args, "id", None) is not None:
        data = parse_hex_bytes(args.data) if args.data else b""
        dlc = args.dlc if args.dlc is not None else len(data)
        return CanFrame(args.id, dlc, data)
    return None


def _message_bits(args) -> list[int]:
    if getattr(args, "bits", None):
        return args.bits
    frame = _frame_from_args(args)
    if frame is None:
        raise DiffInjectError("give --frame fig8, --id/--dlc/--data, or --bits")
    return list(encode_frame(frame, ack_dominant=not args.ack_recessive).bits)


def _add_frame_args(p, with_bits=True):
    p.add_argument("--frame", choices=["fig8"], help="use a predefined frame")
    p.add_argument("--id", type=_int, help="11-bit identifier, e.g. 0x001")
    p.add_argument("--dlc", type=int)
    p.add_argument("--data", default="", help="data bytes as hex")
    p.add_argument("--ack-recessive", action="store_true",
                   help="leave the ACK slot recessive (default: dominant)")
    if with_bits:
        p.add_argument("--bits", type=_bits, help="raw 0/1 bit string instead of a frame")


# -- subcommands -----------------------------------------------------------

def cmd_decompose(args):
    with open(args.input, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        dp = np.array([float(r["d_plus"]) for r in rows])
        dm = np.array([float(r["d_minus"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise DiffInjectError(f"{args.input}: need numeric d_plus,d_minus columns ({exc})") from None
    modes = decompose(DifferentialPair(Waveform(dp, args.sample_rate), Waveform(dm, args.sample_rate)))
    buf = io.StringIO()
    buf.write("v_dm,v_cm\n")
    for a, b in zip(modes.v_dm.samples, modes.v_cm.samples):
        buf.write(f"{float(a)!r},{float(b)!r}\n")
    _emit(args, buf.getvalue())


def cmd_simulate_physics(args):
    prof = load_profile(args.profile)
    rows, sinad_rows = [], []
    for amp in args.amplitudes:
        for k, f in enumerate(args.freqs):
            seed = args.seed + k
            u = flip_probability(1, amp, f, prof.subtractor, prof.receiver, args.trials, seed,
                                 transfer=prof.transfer, sample_rate=args.sample_rate)
            v = flip_probability(0, amp, f, prof.subtractor, prof.receiver, args.trials, seed,
                                 transfer=prof.transfer, sample_rate=args.sample_rate)
            rows.append(GridRow(f, amp, u, v, args.trials))
            if args.sinad_out:
                sinad_rows.append((f, amp) + _bypass_quality(prof, f, amp, args))
    grid = SusceptibilityGrid(tuple(rows), (f"simulated with profile {prof.name}, seed {args.seed}",))
    _emit(args, format_grid(grid))
    if args.sinad_out:
        buf = io.StringIO()
        buf.write("freq_hz,amplitude_vpp,sinad_db,bypass_vpp\n")
        for f, a, s, pp in sinad_rows:
            buf.write(f"{f!r},{a!r},{s:.6f},{pp:.6f}\n")
        Path(args.sinad_out).write_text(buf.getvalue())


def _bypass_quality(prof, f, amp, args):
    """SINAD and peak-to-peak of the bypassed tone with the line held at 0."""
    fs = args.sample_rate
    n = int(round(4e-6 * fs))
    t = np.arange(n) / fs
    v_cm = amp / 2 * np.sin(2 * np.pi * f * t)
    o = subtractor_response(np.zeros(n), v_cm, prof.subtractor, f)
    if prof.subtractor.noise_sigma > 0:
        o = o + np.random.default_rng(args.seed).normal(0, prof.subtractor.noise_sigma, n)
    w = Waveform(o, fs)
    return sinad(w, f), w.peak_to_peak()


def _read_numbers(path) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for i, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            field = line.split(",")[-1]
            try:
                vals.append(float(field))
            except ValueError:
                if not vals and i == 1:
                    continue  # header
                raise DiffInjectError(f"{path}: line {i}: not a number: {field!r}") from None
    if not vals:
        raise DiffInjectError(f"{path}: no samples")
    return np.array(vals)


def cmd_sinad(args):
    w = Waveform(_read_numbers(args.wave), args.sample_rate)
    _report(args, {"sinad_db": sinad(w, args.fundamental)})


def cmd_optimize(args):
    grid = load_grid(args.grid)
    best = optimal_pair(grid_to_feasible(grid), args.g, args.target)
    _report(args, {"pair": best.to_dict(), "candidates": len(grid) + 1})


def cmd_inject_bit(args):
    cfg = cp.CampaignConfig(args.trials, args.seed, FlipPair(args.u, args.v), args.g)
    res = cp.simulate_bit(args.intended, args.actual, cfg)
    out = res.to_dict()
    out["analytic"] = cp.analytic_rate(cp.MessageSpec([args.intended], [args.actual]), args.g, cfg.pair)
    _report(args, out, args.seed)


def cmd_inject_message(args):
    intended = _message_bits(args)
    line = args.line_bits if args.line_bits else [1] * len(intended)
    spec = cp.MessageSpec(intended, line)
    cfg = cp.CampaignConfig(args.trials, args.seed, FlipPair(args.u, args.v), args.g, args.mode)
    res = cp.simulate_message(spec, cfg, workers=args.workers)
    out = res.to_dict()
    out["analytic"] = cp.analytic_rate(spec, args.g, cfg.pair, args.mode)
    if args.line_bits is None:
        lo, hi = cp.message_bounds(intended, args.u)
        out["bounds"] = {"lower": lo, "upper": hi}
    _report(args, out, args.seed)


def cmd_can_encode(args):
    frame = _frame_from_args(args)
    if frame is None:
        raise DiffInjectError("give --frame fig8 or --id")
    bs = encode_frame(frame, ack_dominant=not args.ack_recessive)
    dom, groups = dominant_census(bs)
    out = bs.to_dict()
    out.update({
        "crc": f"0x{frame.crc:04X}",
        "dominant": dom,
        "groups": groups,
        "length": len(bs),
        "schedule": attack_schedule(bs, args.bit_time).to_dict(),
    })
    _report(args, out)


def cmd_bounds(args):
    bits = _message_bits(args)
    lo, hi = cp.message_bounds(bits, args.u)
    dom, groups = cp.count_dominant_groups(bits)
    _report(args, {"lower": lo, "upper": hi, "dominant": dom, "groups": groups})


def cmd_sample_rates(args):
    s = cp.success_rate_samples(FlipPair(args.u, args.v), args.g, args.samples, args.bits,
                                args.seed, args.target)
    _emit(args, "".join(f"{float(x)!r}\n" for x in s))


def cmd_compare(args):
    a, b = _read_numbers(args.a), _read_numbers(args.b)
    verdict = cp.compare_pairs(a, b, args.alpha)
    _report(args, {
        "verdict": verdict,
        "p_value": cp.welch_pvalue(a, b),
        "mean_a": float(a.mean()),
        "mean_b": float(b.mean()),
    })


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="diffinject", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--out", help="write here instead of stdout")
        return p

    p = add("decompose", cmd_decompose, "split a d_plus,d_minus CSV into v_dm,v_cm")
    p.add_argument("input")
    p.add_argument("--sample-rate", type=float, required=True)

    p = add("simulate-physics", cmd_simulate_physics, "sweep the physics model into a (u, v) grid")
    p.add_argument("--profile", default="nrf52833", help="profile name or JSON path")
    p.add_argument("--freqs", type=_freq_range, default=_freq_range("10:100:10"), help="MHz")
    p.add_argument("--amplitudes", type=_floats, default=[1.0, 2.0, 4.0], help="Vpp")
    p.add_argument("--trials", type=int, default=256)
    p.add_argument("--sample-rate", type=float, default=1e9)
    p.add_argument("--sinad-out", help="also write SINAD and bypass p-p per point")
    p.add_argument("--seed", type=_int, required=True)

    p = add("sinad", cmd_sinad, "SINAD of a sampled waveform")
    p.add_argument("wave", help="one sample per line (last CSV column)")
    p.add_argument("--sample-rate", type=float, required=True)
    p.add_argument("--fundamental", type=float, required=True)

    p = add("optimize", cmd_optimize, "pick the best flip pair from a grid")
    p.add_argument("--grid", default="nrf52833.csv")
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--target", type=int, choices=[0, 1], default=1)

    p = add("inject-bit", cmd_inject_bit, "Monte Carlo single-bit injection")
    p.add_argument("--intended", type=int, choices=[0, 1], required=True)
    p.add_argument("--actual", type=int, choices=[0, 1], required=True)
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=_int, required=True)

    p = add("inject-message", cmd_inject_message, "Monte Carlo message injection")
    _add_frame_args(p)
    p.add_argument("--line-bits", type=_bits, help="actual line bits (default: idle recessive)")
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--v", type=float, default=0.0)
    p.add_argument("--mode", choices=list(cp.MODES), default=cp.INDEPENDENT)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=_int, required=True)

    p = add("can-encode", cmd_can_encode, "encode a CAN 2.0A data frame")
    _add_frame_args(p, with_bits=False)
    p.add_argument("--bit-time", type=float, default=2e-6, help="seconds per bit")

    p = add("bounds", cmd_bounds, "lower/upper message success bounds")
    _add_frame_args(p)
    p.add_argument("--u", type=float, required=True)

    p = add("sample-rates", cmd_sample_rates, "success-rate samples for a t-test")
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--g", type=float, default=0.5)
    p.add_argument("--target", type=int, choices=[0, 1], default=1)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--bits", type=int, default=100, help="injections per line state per sample")
    p.add_argument("--seed", type=_int, required=True)

    p = add("compare", cmd_compare, "one-sided Welch t-test, A better than B")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--alpha", type=float, default=0.05)
    return ap


def run_cli(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except _UsageError as exc:
        print(f"diffinject: error: {exc}", file=sys.stderr)
        return 2
    except (DiffInjectError, ValueError, OSError) as exc:
        print(f"diffinject: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
