"""Command-line interface.

Subcommands::

    spiketest test-spikes DATA.csv --m0 6 --split 5:1
    spiketest estimate-m DATA.csv --m-max 10
    spiketest estimate-noise DATA.csv --m 6 --split 3:3
    spiketest test-smallest DATA.csv --m 3 --sigma2 auto --stat TL
    spiketest simulate size --model model2 --grid 50x100,100x200 --out results/

Reports are JSON with sorted keys and no timestamps, so identical inputs
give byte-identical files. A separate ``manifest.json`` records the
command, flags, input digest, library version and time of the run. With
``--out`` both go into that directory; otherwise the report goes to
standard output and the manifest to standard error.

Exit status is 0 on success, 2 for invalid input or flags and 1 for
numerical failures. Errors are printed as a single line
``error: <code>: <message>``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import smallest_roots_report
from .exceptions import ConvergenceError, CSVParseError, DomainError, SpikeTestError
from .noise import NoiseModelSpec, estimate_unit_spikes, sigma_hat_corrected
from .rmt.lsd import DiscreteLSD, ModelMoments, SpikeSpec
from .simulation import (
    SamplerKind,
    run_noise_mc,
    run_size_power,
    run_smallest_roots_size,
)
from .spectral import SpikeRankSet, ingest_csv, spectrum_from_data
from .spikes import SpikeTestConfig, estimate_spike_count, test_spikes

SCHEMA_VERSION = 1
STAT_NAMES = {"TL": "T_L", "Tx": "T_x", "TPLR": "T_PLR"}


class UsageError(DomainError):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(value):
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load(args):
    data = ingest_csv(args.csv, has_header=args.header, standardize=args.standardize)
    spec = spectrum_from_data(data, center=args.center)
    info = {
        "path": str(args.csv),
        "sha256": _digest(args.csv),
        "n": data.n,
        "p": data.p,
        "dropped_rows": data.dropped_rows,
        "standardized": args.standardize,
        "centered": args.center,
    }
    return spec, info


def _moments(args):
    return ModelMoments(args.q, args.beta)


def _bulk(args):
    return DiscreteLSD.parse(args.bulk, args.sigma2)


def _split(text, total):
    if text is None:
        return SpikeRankSet(total, 0)
    ranks = SpikeRankSet.parse(text)
    if ranks.total != total:
        raise UsageError(
            f"--split {text} covers {ranks.total} ranks but the spike count is {total}"
        )
    return ranks


def _spikes(text):
    return None if text is None else SpikeSpec.parse(text)


def cmd_test_spikes(args):
    spec, info = _load(args)
    ranks = _split(args.split, args.m0)
    cfg = SpikeTestConfig(
        large_count=ranks.large_count,
        small_count=ranks.small_count,
        f_tag=args.f,
        H=_bulk(args),
        spikes=_spikes(args.spikes),
        moments=_moments(args),
        alpha_level=args.alpha,
    )
    report = test_spikes(spec, cfg)
    return {"input": info, "result": report.to_dict()}, {}


def cmd_estimate_m(args):
    spec, info = _load(args)
    template = SpikeTestConfig(
        f_tag=args.f, H=_bulk(args), moments=_moments(args), alpha_level=args.alpha
    )
    result = estimate_spike_count(spec, template, args.m_max, args.split_policy)
    out = result.to_dict()
    chosen = result.reports[result.m_hat - 1]
    if chosen is not None:
        out["spike_estimates"] = chosen.details.get("spike_estimates")
    table = "M0," + ",".join(str(m) for m in result.m0_values) + "\n"
    table += (
        "p_value," + ",".join("" if math.isnan(v) else f"{v:.6g}" for v in result.p_values) + "\n"
    )
    table += f"estimated_number,{result.m_hat}\n"
    if chosen is not None:
        values = chosen.details["spike_estimates"]["values"]
        table += "estimated_spikes," + ",".join(f"{v:.6g}" for v in values) + "\n"
    return {"input": info, "result": out}, {"scan.csv": table}


def cmd_estimate_noise(args):
    spec, info = _load(args)
    ranks = _split(args.split, args.m)
    bulk = DiscreteLSD.parse(args.bulk)
    spikes = _spikes(args.spikes)
    model = (
        estimate_unit_spikes(spec, ranks, bulk) if spikes is None else NoiseModelSpec(spikes, bulk)
    )
    est = sigma_hat_corrected(spec, model, ranks, _moments(args), level=args.level)
    return {"input": info, "result": est.to_dict()}, {}


def cmd_test_smallest(args):
    spec, info = _load(args)
    ranks = _split(args.split, args.m)
    sigma2 = args.sigma2 if args.sigma2 == "auto" else float(args.sigma2)
    report = smallest_roots_report(
        spec, ranks, STAT_NAMES[args.stat], sigma2, _spikes(args.spikes), _moments(args), args.alpha
    )
    return {"input": info, "result": report.to_dict()}, {}


def _grid(text):
    cells = []
    try:
        for item in text.split(","):
            p, n = item.lower().split("x")
            cells.append((int(p), int(n)))
    except ValueError:
        raise UsageError(f"--grid must look like '50x100,100x200', got {text!r}") from None
    return cells


def _range(text):
    try:
        if "-" in text:
            lo, hi = text.split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--m0 must look like '1-7' or '3,6', got {text!r}") from None


def cmd_simulate(args):
    grid = _grid(args.grid)
    beta = "auto" if args.beta == "auto" else float(args.beta)
    if args.kind == "size":
        res = run_size_power(
            args.model,
            args.sampler,
            grid,
            _range(args.m0),
            args.reps,
            args.seed,
            beta,
            args.workers,
        )
    elif args.kind == "noise":
        res = run_noise_mc(args.model, args.sampler, grid, args.reps, args.seed, beta, args.workers)
    else:
        res = run_smallest_roots_size(
            args.model,
            args.sampler,
            STAT_NAMES[args.stat],
            grid,
            args.reps,
            args.seed,
            beta,
            args.workers,
        )
    extra = {"cells.csv": res.to_csv(), "long.csv": res.to_long_csv()}
    return {"result": res.to_dict()}, extra


def _data_parser(sub, name, help_text):
    p = sub.add_parser(name, help=help_text)
    p.add_argument("csv", type=Path, help="numeric CSV, one observation per row")
    p.add_argument("--header", action="store_true", help="first row holds column names")
    p.add_argument("--standardize", action="store_true", help="scale columns to unit variance")
    p.add_argument(
        "--no-center",
        dest="center",
        action="store_false",
        help="use X'X/n without removing column means",
    )
    p.add_argument("--bulk", default="1:1", help="bulk atoms 'r1:w1,r2:w2' (default 1:1)")
    p.add_argument("--sigma2", default=1.0, type=float, help="bulk scale (default 1)")
    p.add_argument("--beta", default=0.0, type=float, help="fourth-cumulant coefficient")
    p.add_argument("--q", default=1, type=int, choices=(0, 1), help="1 real, 0 complex")
    p.add_argument("--alpha", default=0.05, type=float, help="test level")
    p.add_argument("--out", type=Path, help="directory for report and manifest")
    return p


def build_parser():
    parser = _Parser(prog="spiketest", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = _data_parser(sub, "test-spikes", "test a hypothesised spike count")
    p.add_argument("--m0", type=int, required=True, help="hypothesised number of spikes")
    p.add_argument("--split", help="top:bottom ranks, e.g. 5:1 (default all top)")
    p.add_argument("--f", choices=("x", "log"), default="x")
    p.add_argument("--spikes", help="known spike values 'a1xm1,a2xm2'")
    p.set_defaults(func=cmd_test_spikes)

    p = _data_parser(sub, "estimate-m", "estimate the spike count by a sequential scan")
    p.add_argument("--m-max", type=int, default=10)
    p.add_argument("--f", choices=("x", "log"), default="x")
    p.add_argument("--split-policy", choices=("edge", "large"), default="edge")
    p.set_defaults(func=cmd_estimate_m)

    p = _data_parser(sub, "estimate-noise", "bias-corrected noise variance")
    p.add_argument("--m", type=int, required=True, help="number of spikes")
    p.add_argument("--split", help="top:bottom ranks (default all top)")
    p.add_argument("--spikes", help="spike values in noise units 'a1xm1,...'")
    p.add_argument("--level", type=float, default=0.95, help="confidence level")
    p.set_defaults(func=cmd_estimate_noise)

    p = _data_parser(sub, "test-smallest", "test equality of the smallest population roots")
    p._option_string_actions["--sigma2"].type = str
    p._option_string_actions["--sigma2"].default = "auto"
    p._option_string_actions["--sigma2"].help = "noise variance or 'auto' (default)"
    p.add_argument("--m", type=int, required=True, help="number of spikes")
    p.add_argument("--split", help="top:bottom ranks (default all top)")
    p.add_argument("--spikes", help="spike values in noise units 'a1xm1,...'")
    p.add_argument("--stat", choices=tuple(STAT_NAMES), default="TL")
    p.set_defaults(func=cmd_test_smallest)

    p = sub.add_parser("simulate", help="Monte Carlo tables")
    p.add_argument("kind", choices=("size", "noise", "roots"))
    p.add_argument("--model", default="model2", choices=("model1", "model2", "model3", "model4"))
    p.add_argument("--sampler", default="gaussian", choices=[s.value for s in SamplerKind])
    p.add_argument("--grid", default="50x100,100x200,200x400", help="cells 'pxn,pxn'")
    p.add_argument("--m0", default="1-7", help="hypothesised counts, '1-7' or '3,6'")
    p.add_argument("--stat", choices=tuple(STAT_NAMES), default="TL")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", default="auto", help="'auto' or a number")
    p.add_argument(
        "--workers", type=int, help="processes (default: SPIKETEST_NUM_WORKERS or all cores)"
    )
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)
    return parser


def _manifest(args, argv, payload):
    flags = {
        k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "argv": list(argv),
        "flags": flags,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "input_sha256": payload.get("input", {}).get("sha256"),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    if args.command == "test-smallest" and args.sigma2 != "auto":
        try:
            float(args.sigma2)
        except ValueError:
            raise UsageError(f"--sigma2 must be a number or 'auto', got {args.sigma2!r}") from None
    payload, extra = args.func(args)
    report = {"schema_version": SCHEMA_VERSION, "command": args.command, **payload}
    manifest = _manifest(args, argv, payload)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(dumps(report))
        (args.out / "manifest.json").write_text(dumps(manifest))
        for name, text in extra.items():
            (args.out / name).write_text(text)
    else:
        sys.stdout.write(dumps(report))
        sys.stderr.write(json.dumps(_clean(manifest), sort_keys=True) + "\n")
    return report


def main(argv=None):
    try:
        run(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    except (DomainError, CSVParseError, OSError) as exc:
        code = getattr(exc, "code", "io") if isinstance(exc, SpikeTestError) else "io"
        print(f"error: {code}: {_one_line(exc)}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc.code}: {_one_line(exc)}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: runtime: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 1
    return 0


def _one_line(exc):
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
