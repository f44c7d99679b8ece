# src/pipeline/decode_one.py
"""
Decode a single received state and write its per-iteration snapshots.

The state comes from a +/-1 CSV (--input), from i.i.d. noise on the all-one
code-state (--sample-iid K EPS) or from an MCMC sample of a bundled instance
(--instance FILE --sample-mcmc BETA GAMMA).
"""
from __future__ import annotations
import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from ..channels import IidNoise, Instance, crosstalk_weights, hard_decision_error_prob, sample_iid_error, trial_rng
from ..config import ExperimentConfig, add_common_arguments, config_from_args
from ..decoders import (
    DecodeOutcome, GreedyConfig, bf_decode, bp_decode, gdbf_decode, mvd_decode, mwd_decode, wbf_decode,
)
from ..errors import ConfigError
from ..log import configure, get
from ..parity_code import SpinMatrix, build_code, hamming, matrix_view
from ..sampler import McmcConfig, run_chains
from ..storage import load_instance, read_spin_matrix, write_frames, write_table

log = get("decode")

DECODERS = ("bf", "bp", "mwd", "mvd", "wbf", "gdbf")
NEEDS_COUPLINGS = ("wbf", "gdbf")
SAMPLE_STREAM = 20


# ---------- inputs ----------
def sample_iid_state(cfg: ExperimentConfig, k: int, eps: float) -> tuple[SpinMatrix, SpinMatrix]:
    params = build_code(k).params
    r = sample_iid_error(params, IidNoise(eps), trial_rng(cfg.seed, SAMPLE_STREAM, k))
    return r, SpinMatrix.ones(k)


def sample_mcmc_state(cfg: ExperimentConfig, inst: Instance, beta: float, gamma: float) -> SpinMatrix:
    """Last state of one hybrid-mode chain on the instance."""
    mc = McmcConfig.hybrid_mode(inst.n_v, kernel=cfg.kernel)
    out = run_chains(inst.k, inst.couplings, [beta], gamma, mc,
                     trial_rng(cfg.seed, SAMPLE_STREAM, inst.k, 1), cfg.penalty_weight)
    return matrix_view(out.samples[0, out.n_recorded[0] - 1], inst.k)


def load_received(cfg: ExperimentConfig, args: argparse.Namespace) -> tuple[SpinMatrix, SpinMatrix | None, Instance | None]:
    """Returns (received state, ground truth if known, instance if given)."""
    inst = load_instance(args.instance) if args.instance else None
    truth = inst.ground_truth() if inst is not None and inst.ground_state is not None else None
    if args.input:
        return read_spin_matrix(args.input, args.k), truth, inst
    if args.sample_iid:
        k, eps = int(args.sample_iid[0]), float(args.sample_iid[1])
        r, ones = sample_iid_state(cfg, k, eps)
        return r, ones, inst
    if args.sample_mcmc:
        if inst is None:
            raise ConfigError("--sample-mcmc needs --instance")
        beta, gamma = args.sample_mcmc
        return sample_mcmc_state(cfg, inst, beta, gamma), truth, inst
    raise ConfigError("give one of --input, --sample-iid or --sample-mcmc")


# ---------- decoding ----------
def run_decoder(
    name: str,
    r: SpinMatrix,
    cfg: ExperimentConfig,
    inst: Instance | None = None,
    wbf_beta: float = 1.0,
    rng: np.random.Generator | None = None,
) -> DecodeOutcome:
    if name not in DECODERS:
        raise ConfigError(f"unknown decoder {name!r}; choose from {DECODERS}")
    if name in NEEDS_COUPLINGS and inst is None:
        raise ConfigError(f"decoder {name} needs couplings; pass --instance")
    if inst is not None and inst.k != r.k:
        raise ConfigError(f"instance has K={inst.k} but the received state has K={r.k}")
    greedy = GreedyConfig(record_trajectory=True)
    if name == "bf":
        return bf_decode(r, replace(cfg.bf, record_trajectory=True), rng)
    if name == "bp":
        return bp_decode(r, replace(cfg.bp, record_trajectory=True))
    if name == "mwd":
        out = mwd_decode(r, inst)
        out.trajectory = [r, out.final]
        return out
    if name == "mvd":
        out = mvd_decode(r)
        out.trajectory = [r, out.final]
        return out
    if name == "wbf":
        gammas = hard_decision_error_prob(wbf_beta, inst.couplings)
        _, wk = crosstalk_weights(gammas, r.k)
        return wbf_decode(r, inst.couplings, wbf_beta, wk, greedy)
    return gdbf_decode(r, inst.couplings, greedy)


def report_rows(name: str, out: DecodeOutcome, truth: SpinMatrix | None) -> pd.DataFrame:
    row = {"decoder": name, "k": out.final.k, **out.to_row(truth)}
    frames = out.trajectory or [out.final]
    if truth is not None:
        row["errors_per_iteration"] = ";".join(str(hamming(x, truth)) for x in frames)
    else:
        row["errors_per_iteration"] = ""
    return pd.DataFrame([row])


def add_arguments(ap: argparse.ArgumentParser) -> None:
    add_common_arguments(ap)
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--input", type=Path, default=None, help="CSV of K rows of +/-1 entries")
    src.add_argument("--sample-iid", dest="sample_iid", nargs=2, metavar=("K", "EPS"), default=None)
    src.add_argument("--sample-mcmc", dest="sample_mcmc", nargs=2, type=float, metavar=("BETA", "GAMMA"), default=None)
    ap.add_argument("--k", type=int, default=None, help="declared K of --input")
    ap.add_argument("--instance", type=Path, default=None, help="instance YAML (couplings, ground truth)")
    ap.add_argument("--decoder", choices=DECODERS, nargs="+", default=["bf"])
    ap.add_argument("--name", default="decode_one", help="output file stem")
    ap.add_argument("--wbf-beta", dest="wbf_beta", type=float, default=1.0)
    ap.add_argument("--bf-iterations", dest="bf_max_iterations", type=int, default=None)
    ap.add_argument("--tie-policy", dest="bf_tie_policy", choices=["fail", "coin_flip", "keep"], default=None)
    ap.add_argument("--bp-iterations", dest="bp_iterations", type=int, default=None)
    ap.add_argument("--bp-prior", dest="bp_prior_epsilon", type=float, default=None)
    ap.add_argument("--kernel", choices=["metropolis", "rejection_free"], default=None)
    ap.add_argument("--penalty-weight", dest="penalty_weight", type=int, choices=[3, 4], default=None)


def run(args: argparse.Namespace) -> Path:
    cfg = config_from_args("decode_one", args)
    r, truth, inst = load_received(cfg, args)
    reports = []
    for name in args.decoder:
        out = run_decoder(name, r, cfg, inst, args.wbf_beta, trial_rng(cfg.seed, SAMPLE_STREAM, r.k, 2))
        meta = {"experiment": "decode_one", "seed": cfg.seed, "decoder": name, "k": r.k, "status": out.status}
        fp = write_frames(out.trajectory or [out.final], cfg.out_dir / f"{args.name}_{name}_frames.csv", meta)
        log.info("{}: {} after {} iterations -> {}", name, out.status, out.iterations_used, fp)
        reports.append(report_rows(name, out, truth))
    report = pd.concat(reports, ignore_index=True)
    out_fp = write_table(report, cfg.out_dir / f"{args.name}_report.csv", {"experiment": "decode_one", "seed": cfg.seed})
    log.info("Saved decode report -> {} rows={}", out_fp, len(report))
    return out_fp


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    add_arguments(ap)
    args = ap.parse_args(argv)
    configure(args.verbose)
    run(args)


if __name__ == "__main__":
    main()
