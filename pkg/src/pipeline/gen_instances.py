# src/pipeline/gen_instances.py
"""Seeded logical instances with brute-force ground truth, cached as YAML."""
from __future__ import annotations
import argparse
import os
from pathlib import Path

from ..channels import Instance, gen_instance, trial_rng
from ..config import ExperimentConfig, add_common_arguments, config_from_args
from ..log import configure, get
from ..storage import load_instance, save_instance

log = get("instances")

# stream key that separates instance generation from every other use of the master seed
STREAM = 7


def instance_path(instance_dir: Path, k: int, index: int) -> Path:
    return Path(instance_dir) / f"instance_k{k}_{index:02d}.yaml"


def make_instance(cfg: ExperimentConfig, index: int) -> Instance:
    rng = trial_rng(cfg.seed, STREAM, cfg.instance_k, index)
    return gen_instance(cfg.instance_k, cfg.coupling_bound, rng, with_ground_truth=True, seed=cfg.seed)


def ensure_instances(cfg: ExperimentConfig, refresh: bool = False) -> list[Instance]:
    """Generate missing instance files (or all of them with refresh) and load the bundle."""
    os.makedirs(cfg.instance_dir, exist_ok=True)
    bundle = []
    for index in range(cfg.n_instances):
        fp = instance_path(cfg.instance_dir, cfg.instance_k, index)
        if fp.exists() and not refresh:
            log.debug("{} exists -> {} (skip)", index, fp)
            inst = load_instance(fp)
        else:
            inst = make_instance(cfg, index)
            save_instance(inst, fp, index)
            log.info("K={} #{} degenerate={} -> {}", inst.k, index, inst.degenerate, fp)
        bundle.append(inst)
    return bundle


def add_arguments(ap: argparse.ArgumentParser) -> None:
    add_common_arguments(ap)
    ap.add_argument("--k", dest="instance_k", type=int, default=None, help="logical size (default 14)")
    ap.add_argument("--count", dest="n_instances", type=int, default=None, help="number of instances (default 12)")
    ap.add_argument("--bound", dest="coupling_bound", type=float, default=None, help="couplings uniform on [-b, b]")
    ap.add_argument("--instance-dir", dest="instance_dir", type=Path, default=None)
    ap.add_argument("--refresh", action="store_true", help="regenerate even if a file exists")


def run(args: argparse.Namespace) -> list[Instance]:
    cfg = config_from_args("gen_instances", args)
    bundle = ensure_instances(cfg, refresh=args.refresh)
    log.info("Saved {} instances -> {}", len(bundle), cfg.instance_dir)
    return bundle


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    add_arguments(ap)
    args = ap.parse_args(argv)
    configure(args.verbose)
    run(args)


if __name__ == "__main__":
    main()
