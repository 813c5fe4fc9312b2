"""Command-line entry point ``urasparc``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .codebook import CodebookKind, generate
from .decoders import DECODERS, DecoderConfig, decode, select_top
from .errors import URAError
from .fileio import read_block, read_codebook, write_codebook
from .harness import ExperimentConfig, min_ebn0_for_target, read_table, run_experiment, summarize
from .presets import PRESET_NAMES, preset_dict


def _cmd_gen_codebook(args):
    cb = generate(CodebookKind.parse(args.kind), args.rows, args.cols, args.seed)
    write_codebook(args.out, cb)
    print(f"wrote {cb.kind.label} codebook {cb.num_rows}x{cb.num_cols} to {args.out}")


def _cmd_run(args):
    if (args.config is None) == (args.preset is None):
        raise URAError("give exactly one of --config and --preset")
    if args.config:
        with open(args.config) as f:
            d = json.load(f)
    else:
        d = preset_dict(args.preset)
    d["output"] = args.out
    if args.trials is not None:
        d["trials"] = args.trials
    if args.workers is not None:
        d["workers"] = args.workers
    cfg = ExperimentConfig.from_dict(d)
    rows = run_experiment(cfg)
    print(f"wrote {len(rows)} rows to {args.out}")


def _cmd_decode(args):
    cb = read_codebook(args.codebook)
    blk = read_block(args.block)
    cfg = DecoderConfig(rho=args.rho, k_hat=args.khat, max_sweeps=args.sweeps, seed=args.seed)
    est = decode(args.decoder, cb, blk, blk.sigma2, cfg)
    top = select_top(est, min(args.top or args.khat or len(est.active_set) or 1, cb.num_cols))
    out = {
        "decoder": args.decoder,
        "active_set": [int(i) for i in est.active_set],
        "top": top,
        "gamma_top": [float(est.gamma_hat[i]) for i in top],
        "sweeps": est.sweeps_used,
    }
    for key in ("screen_size", "rebuilds"):
        if key in est.diagnostics:
            out[key] = est.diagnostics[key]
    print(json.dumps(out, indent=2))


def _cmd_plot(args):
    from .plots import emit_plots
    for p in emit_plots(args.inp, args.outdir):
        print(p)


def _cmd_summarize(args):
    rows = read_table(args.inp)
    print("decoder,rho,J,K,M,ebn0_db,snr_db,trials,p_md,p_fa,p_e")
    for r in summarize(rows):
        print(",".join(f"{r[k]:.6g}" if isinstance(r[k], float) else str(r[k])
                       for k in ("decoder", "rho", "J", "K", "M", "ebn0_db", "snr_db",
                                 "trials", "p_md", "p_fa", "p_e")))
    print()
    print(f"minimal Eb/N0 for PUPE <= {args.target_pe:g}")
    for (dec, rho, J, K, M), v in min_ebn0_for_target(rows, args.target_pe).items():
        shown = "not-achieved" if v is None else f"{v:.4g} dB"
        print(f"  {dec} rho={rho:g} J={J} K={K} M={M}: {shown}")


def _cmd_presets(args):
    if args.name is None:
        print("\n".join(PRESET_NAMES))
    else:
        print(json.dumps(preset_dict(args.name), indent=2))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="urasparc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-codebook", help="generate a codebook file")
    g.add_argument("--kind", required=True, choices=["fourier", "sphere", "bernoulli"])
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--cols", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen_codebook)

    r = sub.add_parser("run", help="run a Monte Carlo experiment")
    r.add_argument("--config")
    r.add_argument("--preset", choices=PRESET_NAMES)
    r.add_argument("--out", required=True)
    r.add_argument("--trials", type=int)
    r.add_argument("--workers", type=int)
    r.set_defaults(func=_cmd_run)

    d = sub.add_parser("decode", help="decode one received block")
    d.add_argument("--codebook", required=True)
    d.add_argument("--block", required=True)
    d.add_argument("--decoder", required=True, choices=DECODERS)
    d.add_argument("--rho", type=float, default=1.0)
    d.add_argument("--khat", type=int)
    d.add_argument("--sweeps", type=int, default=15)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--top", type=int, help="length of the reported candidate list")
    d.set_defaults(func=_cmd_decode)

    pl = sub.add_parser("plot", help="render SVG figures from a result table")
    pl.add_argument("--in", dest="inp", required=True)
    pl.add_argument("--outdir", required=True)
    pl.set_defaults(func=_cmd_plot)

    s = sub.add_parser("summarize", help="mean PUPE per grid point and minimal Eb/N0")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--target-pe", type=float, default=0.05)
    s.set_defaults(func=_cmd_summarize)

    ps = sub.add_parser("presets", help="list presets or print one as JSON")
    ps.add_argument("name", nargs="?", choices=PRESET_NAMES)
    ps.set_defaults(func=_cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        args.func(args)
    except (URAError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
