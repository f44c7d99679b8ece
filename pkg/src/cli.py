"""
python -m src.cli <subcommand> [flags]

  gen-instances      cache the seeded K=14 instance bundle with ground truths
  iid-bench          BF / BP / MCMC failure probabilities on i.i.d. noise
  hybrid-landscape   MCMC vs MCMC-BF success over the (beta, gamma) grid
  error-matrix       averaged error matrices at the landscape optima A and B
  decode-one         decode one state and write per-iteration snapshots
  sampler-validate   K=4 chains against the exact Boltzmann table
  dump-code          generator and check matrices as 0/1 rows
"""
from __future__ import annotations
import argparse
from pathlib import Path

from .errors import PECodeError
from .log import configure, get
from .parity_code import build_code
from .pipeline import decode_one, gen_instances, hybrid_landscape, iid_bench, sampler_validate
from .storage import dump_code

log = get("error")


def _dump_code(args: argparse.Namespace) -> Path:
    out = dump_code(build_code(args.k), args.out)
    get("code").info("Saved K={} code -> {}", args.k, out)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="src.cli", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    for name, module, runner in (
        ("gen-instances", gen_instances, gen_instances.run),
        ("iid-bench", iid_bench, iid_bench.run),
        ("hybrid-landscape", hybrid_landscape, hybrid_landscape.run),
        ("error-matrix", hybrid_landscape, hybrid_landscape.run_report),
        ("decode-one", decode_one, decode_one.run),
        ("sampler-validate", sampler_validate, sampler_validate.run),
    ):
        p = sub.add_parser(name, help=(module.__doc__ or "").strip().splitlines()[0])
        module.add_arguments(p)
        p.set_defaults(_run=runner)

    p = sub.add_parser("dump-code", help="write the code matrices for one K")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", type=Path, default=Path("data/runs/code.txt"))
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(_run=_dump_code)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure(args.verbose)
    try:
        args._run(args)
    except PECodeError as e:
        log.error("{}: {}", e.category, e)
        raise SystemExit(e.exit_code) from e


if __name__ == "__main__":
    main()
