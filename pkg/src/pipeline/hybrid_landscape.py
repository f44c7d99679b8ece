# src/pipeline/hybrid_landscape.py
"""
Success landscapes over the (beta, gamma) grid for the bundled instances:
MCMC decoding (1200 C(K,2) states per chain) against MCMC-BF hybrid decoding
(4 C(K,2) states per chain, each BF-decoded), plus the averaged error
matrices at each instance's best raw (A) and best hybrid (B) parameters.
"""
from __future__ import annotations
import argparse
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..channels import Instance, trial_rng
from ..config import ExperimentConfig, add_common_arguments, config_from_args
from ..errors import MissingArtifactError
from ..log import configure, get
from ..parity_code import vector_view
from ..sampler import McmcConfig, average_error_matrix, decode_recorded, run_chains
from ..storage import read_table, write_grid, write_table
from .gen_instances import ensure_instances

log = get("landscape")

RAW_STREAM, HYBRID_STREAM, REPORT_STREAM = 10, 11, 12
LANDSCAPE_FILE = "landscape.csv"
OPTIMA_FILE = "landscape_optima.csv"


# ---------- helpers ----------
def _grid(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    """Every (beta, gamma) point repeated once per chain, beta-major."""
    bb, gg = np.meshgrid(cfg.beta_values(), cfg.gamma_values(), indexing="ij")
    return np.repeat(bb.ravel(), cfg.chains), np.repeat(gg.ravel(), cfg.chains)


def _require_truth(inst: Instance, index: int) -> np.ndarray:
    if inst.ground_state is None:
        raise MissingArtifactError(f"instance #{index} has no ground truth; run gen-instances first")
    return vector_view(inst.ground_truth())


def landscape_for_instance(cfg: ExperimentConfig, inst: Instance, index: int) -> pd.DataFrame:
    target = _require_truth(inst, index)
    beta, gamma = _grid(cfg)
    n_v = inst.n_v

    raw_cfg = McmcConfig.decoding_mode(n_v, kernel=cfg.kernel, record_samples=False)
    raw = run_chains(inst.k, inst.couplings, beta, gamma, raw_cfg,
                     trial_rng(cfg.seed, RAW_STREAM, index), cfg.penalty_weight, target=target)

    hyb_cfg = McmcConfig.hybrid_mode(n_v, kernel=cfg.kernel)
    rng = trial_rng(cfg.seed, HYBRID_STREAM, index)
    hyb = run_chains(inst.k, inst.couplings, beta, gamma, hyb_cfg, rng, cfg.penalty_weight, target=target)
    hyb = decode_recorded(hyb, cfg.bf, target, rng)

    df = pd.DataFrame({
        "instance": index, "beta": beta, "gamma": gamma,
        "exact_raw": raw.hit_target, "any_raw": raw.hit_code_state,
        "exact_hybrid_raw": hyb.hit_target, "any_hybrid_raw": hyb.hit_code_state,
        "exact_decoded": hyb.decoded_target, "any_decoded": hyb.decoded_code_state,
    })
    log.info("instance #{} raw-best={:.2f} decoded-best={:.2f}", index,
             df.groupby(["beta", "gamma"])["exact_raw"].mean().max(),
             df.groupby(["beta", "gamma"])["exact_decoded"].mean().max())
    return df


def summarize_landscape(chains: pd.DataFrame, seed: int) -> pd.DataFrame:
    keys = ["instance", "beta", "gamma"]
    g = chains.groupby(keys, as_index=False)
    out = g.agg(
        p_success_exact_raw=("exact_raw", "mean"),
        p_success_any_raw=("any_raw", "mean"),
        p_success_exact_decoded=("exact_decoded", "mean"),
        p_success_any_decoded=("any_decoded", "mean"),
        p_hybrid_exact_raw=("exact_hybrid_raw", "mean"),
        p_hybrid_any_raw=("any_hybrid_raw", "mean"),
        n_chains=("exact_raw", "size"),
    )
    out["seed"] = seed
    return out.sort_values(keys, kind="mergesort").reset_index(drop=True)


def _argmax_point(df: pd.DataFrame, col: str) -> tuple[float, float, float]:
    best = df[col].max()
    if best <= 0:
        # no chain succeeded anywhere: there is no optimum to report
        return np.nan, np.nan, float(best)
    row = df.loc[df[col].idxmax()]
    return float(row["beta"]), float(row["gamma"]), float(best)


def landscape_optima(table: pd.DataFrame) -> pd.DataFrame:
    """
    Per instance: set A maximizes raw exact success, set B maximizes decoded exact
    success. Ties go to the first grid point (beta ascending, then gamma ascending).
    A set whose best success is 0 is undefined: its beta/gamma are NaN and
    defined_A / defined_B is False.
    """
    rows = []
    for inst, df in table.sort_values(["instance", "beta", "gamma"], kind="mergesort").groupby("instance"):
        beta_a, gamma_a, p_a = _argmax_point(df, "p_success_exact_raw")
        beta_b, gamma_b, p_b = _argmax_point(df, "p_success_exact_decoded")
        at_b = df[(df["beta"] == beta_b) & (df["gamma"] == gamma_b)]["p_success_any_raw"]
        rows.append({
            "instance": inst,
            "beta_A": beta_a, "gamma_A": gamma_a, "p_exact_A": p_a, "defined_A": bool(p_a > 0),
            "beta_B": beta_b, "gamma_B": gamma_b, "p_exact_B": p_b, "defined_B": bool(p_b > 0),
            "p_any_raw_at_B": float(at_b.iloc[0]) if len(at_b) else np.nan,
        })
    return pd.DataFrame(rows)


def run_hybrid_landscape(cfg: ExperimentConfig) -> tuple[pd.DataFrame, pd.DataFrame]:
    bundle = ensure_instances(cfg)
    log.info("grid {}x{} chains={} instances={}", cfg.grid_n, cfg.grid_n, cfg.chains, len(bundle))
    parts = Parallel(n_jobs=cfg.n_jobs)(
        delayed(landscape_for_instance)(cfg, inst, i) for i, inst in enumerate(bundle)
    )
    table = summarize_landscape(pd.concat(parts, ignore_index=True), cfg.seed)
    return table, landscape_optima(table)


def landscape_meta(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": "hybrid_landscape",
        "seed": cfg.seed,
        "instance_k": cfg.instance_k,
        "n_instances": cfg.n_instances,
        "kernel": cfg.kernel,
        "penalty_weight": cfg.penalty_weight,
        "beta_range": f"{cfg.beta_min} {cfg.beta_max}",
        "gamma_range": f"{cfg.gamma_min} {cfg.gamma_max}",
        "grid_n": cfg.grid_n,
        "chains": cfg.chains,
        "bf_max_iterations": cfg.bf.max_iterations,
    }


# ---------- error matrices ----------
def error_matrices_for_instance(cfg: ExperimentConfig, inst: Instance, index: int, opt: pd.Series) -> dict:
    target = _require_truth(inst, index)
    truth = inst.ground_truth()
    out = {}
    for s, label in enumerate(("A", "B")):
        beta, gamma = float(opt[f"beta_{label}"]), float(opt[f"gamma_{label}"])
        if np.isnan(beta) or np.isnan(gamma):
            log.warning("instance #{} set {} undefined (no exact success on the grid); skipped", index, label)
            continue
        mc = McmcConfig.hybrid_mode(inst.n_v, kernel=cfg.kernel)
        res = run_chains(inst.k, inst.couplings, np.full(cfg.chains, beta), gamma, mc,
                         trial_rng(cfg.seed, REPORT_STREAM, index, s), cfg.penalty_weight, target=target)
        samples = np.concatenate([res.samples[c, : res.n_recorded[c]] for c in range(len(res))])
        out[label] = (beta, gamma, average_error_matrix(samples, truth))
    return out


def run_error_matrix_report(cfg: ExperimentConfig) -> list[Path]:
    optima_path = cfg.out_dir / OPTIMA_FILE
    if not optima_path.exists():
        raise MissingArtifactError(f"{optima_path} not found; run hybrid-landscape first")
    _, optima = read_table(optima_path)
    bundle = ensure_instances(cfg)
    written = []
    for opt in optima.itertuples(index=False):
        index = int(opt.instance)
        mats = error_matrices_for_instance(cfg, bundle[index], index, pd.Series(opt._asdict()))
        for label, (beta, gamma, m) in mats.items():
            meta = {"experiment": "error_matrix", "seed": cfg.seed, "instance": index,
                    "set": label, "beta": beta, "gamma": gamma}
            fp = write_grid(m, cfg.out_dir / f"error_matrix_{index:02d}_{label}.csv", meta)
            written.append(fp)
    log.info("Saved {} error matrices -> {}", len(written), cfg.out_dir)
    return written


def add_arguments(ap: argparse.ArgumentParser) -> None:
    add_common_arguments(ap)
    ap.add_argument("--instance-dir", dest="instance_dir", type=Path, default=None)
    ap.add_argument("--count", dest="n_instances", type=int, default=None)
    ap.add_argument("--k", dest="instance_k", type=int, default=None)
    ap.add_argument("--grid", dest="grid_n", type=int, default=None, help="grid points per axis (default 8)")
    ap.add_argument("--beta-max", dest="beta_max", type=float, default=None, help="top of the beta axis (default 35)")
    ap.add_argument("--gamma-max", dest="gamma_max", type=float, default=None, help="top of the gamma axis (default 3.5)")
    ap.add_argument("--chains", type=int, default=None, help="chains per grid point (default 4)")
    ap.add_argument("--kernel", choices=["metropolis", "rejection_free"], default=None)
    ap.add_argument("--penalty-weight", dest="penalty_weight", type=int, choices=[3, 4], default=None)


def run(args: argparse.Namespace) -> Path:
    cfg = config_from_args("hybrid_landscape", args)
    table, optima = run_hybrid_landscape(cfg)
    out = write_table(table, cfg.out_dir / LANDSCAPE_FILE, landscape_meta(cfg))
    write_table(optima, cfg.out_dir / OPTIMA_FILE, landscape_meta(cfg))
    log.info("Saved landscape -> {} rows={}", out, len(table))
    return out


def run_report(args: argparse.Namespace) -> list[Path]:
    return run_error_matrix_report(config_from_args("error_matrix", args))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    add_arguments(ap)
    ap.add_argument("--report", action="store_true", help="also write error matrices at sets A and B")
    args = ap.parse_args(argv)
    configure(args.verbose)
    run(args)
    if args.report:
        run_report(args)


if __name__ == "__main__":
    main()
