"""Desk-scale reproductions of the headline results; run with `pytest -m slow`."""
from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from src.channels import trial_rng
from src.config import build_config
from src.pipeline.hybrid_landscape import run_hybrid_landscape
from src.pipeline.iid_bench import run_iid_bench
from src.pipeline.sampler_validate import CHAIN_STREAM, TV_LIMIT, validate_point, validation_instance
from src.sampler import KERNELS

pytestmark = pytest.mark.slow


def _bench(**values) -> pd.DataFrame:
    table, _ = run_iid_bench(build_config("iid_bench", values))
    return table.set_index(["k", "epsilon", "decoder"])


def _sigma(p: float, n: int) -> float:
    return float(np.sqrt(max(p * (1 - p), 1e-12) / n))


def test_bf_corrects_most_k40_errors_at_eps_03() -> None:
    row = _bench(sizes=[40], epsilons=[0.3], decoders=["bf"], trials=2000).iloc[0]
    success = row["success"] / row["trials"]
    assert success >= 0.70 - 2 * _sigma(0.70, int(row["trials"]))


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.15])
def test_bf_failure_falls_with_k(eps: float) -> None:
    df = _bench(sizes=[10, 20, 30, 40], epsilons=[eps], decoders=["bf"], trials=2000)
    p = df["p_fail"].to_numpy()
    se = df["p_fail_se"].to_numpy()
    for a in range(len(p) - 1):
        assert p[a + 1] <= p[a] + 2 * np.hypot(se[a], se[a + 1])


def test_bf_and_bp_are_comparable() -> None:
    df = _bench(sizes=[10, 20, 40], epsilons=[0.05, 0.15, 0.3], decoders=["bf", "bp"], trials=1000)
    for k in (10, 20, 40):
        for eps in (0.05, 0.15, 0.3):
            bf = df.loc[(k, eps, "bf"), "p_fail"]
            bp = df.loc[(k, eps, "bp"), "p_fail"]
            lo, hi = sorted((bf, bp))
            assert hi - lo <= 0.05 or hi <= 3 * lo


def test_mcmc_decoding_is_weaker_than_bf() -> None:
    df = _bench(sizes=[10, 20], epsilons=[0.1, 0.2], decoders=["bf", "mcmc"], trials=1000)
    for k in (10, 20):
        for eps in (0.1, 0.2):
            bf, mc = df.loc[(k, eps, "bf")], df.loc[(k, eps, "mcmc")]
            assert mc["p_fail"] >= bf["p_fail"] - 2 * np.hypot(bf["p_fail_se"], mc["p_fail_se"])


@pytest.mark.parametrize("kernel", KERNELS)
def test_sampler_matches_exact_boltzmann(kernel: str) -> None:
    cfg = build_config("sampler_validate")
    inst = validation_instance(cfg)
    for n, (beta, gamma) in enumerate(cfg.validate_points):
        row = validate_point(inst, beta, gamma, kernel, 1_000_000, 64, trial_rng(cfg.seed, CHAIN_STREAM, n, KERNELS.index(kernel)))
        assert row["tv"] < TV_LIMIT, row


def test_hybrid_prefers_weaker_penalty_and_keeps_up_with_raw(tmp_path) -> None:
    cfg = build_config("hybrid_landscape", {
        "instance_dir": tmp_path / "instances", "out_dir": tmp_path / "runs", "n_jobs": -1,
    })
    _, optima = run_hybrid_landscape(cfg)
    assert len(optima) == 12
    assert optima["defined_B"].all()
    both = optima[optima["defined_A"]]
    # an instance whose raw chains never hit the truth has no raw optimum to compare against
    assert int((both["gamma_B"] >= both["gamma_A"]).sum()) <= 2, optima
    assert (optima["p_exact_B"] >= 0.5 * optima["p_exact_A"]).all(), optima
