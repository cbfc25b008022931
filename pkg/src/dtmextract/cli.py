"""Command-line driver: ``dtmextract {extract,synth,eval}``.

Exit codes: 0 success, 1 input/processing error, 2 extraction did not
converge and ``--strict`` was given, 64 usage error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from typing import Optional, Sequence

from . import evaluation, synth
from .core import ExtractionConfig, extract_dtm
from .errors import DtmError
from .raster import load_grid, save_grid

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_USAGE = 64

log = logging.getLogger("dtmextract")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"range needs LO < HI, got {text!r}")
    return lo, hi


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dtmextract", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ex = sub.add_parser("extract", help="extract a DTM from a DSM (.asc)")
    ex.add_argument("--input", required=True, help="DSM raster (.asc)")
    ex.add_argument("--output", required=True, help="DTM raster to write (.asc)")
    ex.add_argument("--lambda", dest="lam", type=_positive_float, default=5.0)
    ex.add_argument("--lambda-p", dest="lam_p", type=_nonneg_float, default=None,
                    help="penalty multiplier (default: 0.5 * lambda)")
    ex.add_argument("--tng", type=_positive_float, default=0.5, help="terrain threshold, m")
    ex.add_argument("--epsilon", type=_positive_float, default=0.1)
    ex.add_argument("--max-iter", type=_positive_int, default=10_000)
    ex.add_argument("--tolerance", type=_positive_float, default=1e-3,
                    help="outer stopping threshold on max |f - f_prev|, m")
    ex.add_argument("--pcg-tol", type=_positive_float, default=1e-3)
    ex.add_argument("--pcg-max-iter", type=_positive_int, default=1000)
    ex.add_argument("--paper-literal-a", action="store_true",
                    help="leave lambda_p*H out of the system matrix")
    ex.add_argument("--terrain-map", help="also write the final terrain map t (.asc)")
    ex.add_argument("--report", help="write a JSON run report")
    ex.add_argument("--decimals", type=_positive_int, default=6)
    ex.add_argument("--strict", action="store_true",
                    help="exit 2 if the outer loop hits --max-iter without converging")
    ex.set_defaults(func=cmd_extract)

    sy = sub.add_parser("synth", help="generate a synthetic DSM from a scene file")
    sy.add_argument("--spec", required=True)
    sy.add_argument("--out-dsm", required=True)
    sy.add_argument("--out-truth", required=True)
    sy.add_argument("--out-mask", required=True)
    sy.add_argument("--decimals", type=_positive_int, default=9)
    sy.set_defaults(func=cmd_synth)

    ev = sub.add_parser("eval", help="residual statistics and histogram")
    ev.add_argument("--reference", required=True)
    ev.add_argument("--estimate", required=True)
    ev.add_argument("--hist-csv", required=True)
    ev.add_argument("--stats-json", required=True)
    ev.add_argument("--bin-width", type=_positive_float, default=evaluation.DEFAULT_BIN_WIDTH)
    ev.add_argument("--range", dest="value_range", type=_range,
                    default=evaluation.DEFAULT_RANGE, metavar="LO,HI")
    ev.set_defaults(func=cmd_eval)
    return parser


def cmd_extract(args) -> int:
    cfg = ExtractionConfig(
        lam=args.lam,
        lam_p=args.lam_p,
        t_ng=args.tng,
        epsilon=args.epsilon,
        n_max=args.max_iter,
        c_tolerance=args.tolerance,
        pcg_tol=args.pcg_tol,
        pcg_max_iter=args.pcg_max_iter,
        paper_literal_a=args.paper_literal_a,
    )
    dsm = load_grid(args.input)
    start = time.perf_counter()
    result = extract_dtm(dsm, cfg)
    elapsed = time.perf_counter() - start
    save_grid(result.dtm, args.output, args.decimals)
    outputs = {"dtm": args.output}
    if args.terrain_map:
        save_grid(dsm.with_values(result.terrain), args.terrain_map, args.decimals)
        outputs["terrain_map"] = args.terrain_map
    log.info(
        "%s after %d iteration(s), %.2fs",
        "converged" if result.converged else "NOT converged",
        result.iterations_run,
        elapsed,
    )
    if args.report:
        report = {
            "config": cfg.as_dict(),
            "decimals": args.decimals,
            "iterations_run": result.iterations_run,
            "converged": result.converged,
            "wall_time_seconds": elapsed,
            "step_norms": result.step_norms,
            "pcg_iterations": [r.iterations for r in result.solve_reports],
            "pcg_relative_residuals": [r.final_relative_residual for r in result.solve_reports],
            "ic_shifts": [r.shift_used for r in result.solve_reports],
            "inputs": {"dsm": {"path": args.input, "sha256": sha256_file(args.input)}},
            "outputs": {k: {"path": p, "sha256": sha256_file(p)} for k, p in outputs.items()},
        }
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    if not result.converged and args.strict:
        print(
            f"dtmextract: not converged after {result.iterations_run} iterations "
            f"(last step {result.step_norms[-1]:.3e} m)",
            file=sys.stderr,
        )
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        with open(args.spec) as fh:
            spec = synth.parse_scene(fh.read())
    except OSError as exc:
        raise DtmError(f"cannot read scene file: {exc}") from exc
    dsm, truth, mask = synth.generate(spec)
    save_grid(dsm, args.out_dsm, args.decimals)
    save_grid(truth, args.out_truth, args.decimals)
    save_grid(dsm.with_values(mask), args.out_mask, 1)
    return EXIT_OK


def cmd_eval(args) -> int:
    reference = load_grid(args.reference)
    estimate = load_grid(args.estimate)
    stats = evaluation.compute_stats(
        evaluation.residuals(reference, estimate), args.bin_width, args.value_range
    )
    with open(args.hist_csv, "w", newline="") as fh:
        fh.write(evaluation.histogram_csv(stats))
    with open(args.stats_json, "w") as fh:
        fh.write(evaluation.stats_json(stats))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except DtmError as exc:
        print(f"dtmextract: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        print(f"dtmextract: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"dtmextract: I/O error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
