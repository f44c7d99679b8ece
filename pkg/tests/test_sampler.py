from __future__ import annotations

import numpy as np
import pytest

from src.channels import Instance, gen_instance
from src.decoders import BfConfig
from src.errors import InvalidParameterError
from src.parity_code import SpinMatrix, build_code, encode, matrix_view, vector_view
from src.pipeline.sampler_validate import validate_point
from src.sampler import (
    ChainBatch,
    LinearSchedule,
    McmcConfig,
    SlhzHamiltonian,
    average_error_matrix,
    boltzmann_histogram,
    correctness_probability,
    decode_recorded,
    delta_energy,
    energy,
    hybrid_decode,
    metropolis_step,
    rejection_free_step,
    run_chain,
    run_chains,
    total_variation,
)


def _random_state(k: int, rng: np.random.Generator) -> SpinMatrix:
    return matrix_view(np.where(rng.random(k * (k - 1) // 2) < 0.5, -1, 1).astype(np.int8), k)


def _flip_pair(x: SpinMatrix, p: int) -> SpinMatrix:
    i, j = build_code(x.k).pairs[p]
    a = x.entries.copy()
    a[i, j] = a[j, i] = -a[i, j]
    return SpinMatrix(a)


def _instance(k: int, seed: int = 0, truth: bool = False) -> Instance:
    return gen_instance(k, 0.25, np.random.default_rng(seed), with_ground_truth=truth)


def test_code_state_energy_is_the_correlation_term() -> None:
    inst = _instance(7)
    z = encode(np.array([1, -1, 1, 1, -1, -1, 1]))
    for w in (3, 4):
        h = SlhzHamiltonian(inst, 0.8, 3.0, w)
        assert energy(h, z) == pytest.approx(-0.8 * inst.couplings @ vector_view(z))


def test_single_flip_penalty() -> None:
    k = 7
    h = SlhzHamiltonian(_instance(k), 0.0, 1.5, 3)
    x = _flip_pair(SpinMatrix.ones(k), 4)
    assert energy(h, x) == pytest.approx(1.5 * (k - 2))


def test_energy_lower_bound() -> None:
    inst = _instance(6, 1)
    h = SlhzHamiltonian(inst, 1.0, 0.5)
    bound = -np.abs(inst.couplings).sum()
    rng = np.random.default_rng(2)
    for _ in range(200):
        assert energy(h, _random_state(6, rng)) >= bound - 1e-12


def test_parameter_validation() -> None:
    with pytest.raises(InvalidParameterError):
        SlhzHamiltonian(_instance(4), -1.0, 0.0)
    with pytest.raises(InvalidParameterError):
        SlhzHamiltonian(_instance(4), 1.0, 1.0, penalty_weight=5)
    with pytest.raises(InvalidParameterError):
        McmcConfig(kernel="gibbs")
    with pytest.raises(InvalidParameterError):
        McmcConfig(stride=0)


def test_incremental_delta_matches_recomputation() -> None:
    rng = np.random.default_rng(3)
    for n in range(300):
        k = 4 + n % 5
        h = SlhzHamiltonian(_instance(k, n), float(rng.uniform(0, 2)), float(rng.uniform(0, 2)), 3 + n % 2)
        x = _random_state(k, rng)
        p = int(rng.integers(k * (k - 1) // 2))
        y = _flip_pair(x, p)
        assert abs(delta_energy(h, x, p) - (energy(h, y) - energy(h, x))) <= 1e-9
        assert energy(h, _flip_pair(y, p)) == pytest.approx(energy(h, x))


def test_delta_accepts_pairs_and_refuses_bad_ones() -> None:
    h = SlhzHamiltonian(_instance(5), 0.7, 1.4)
    x = _random_state(5, np.random.default_rng(12))
    assert delta_energy(h, x, (1, 3)) == delta_energy(h, x, build_code(5).pair_index[1, 3])
    assert delta_energy(h, x, (3, 1)) == delta_energy(h, x, (1, 3))
    for bad in [(2, 2), (0, 5), 10, -1]:
        with pytest.raises(InvalidParameterError):
            delta_energy(h, x, bad)


def test_code_state_delta_counts_adjacent_checks() -> None:
    k = 6
    code = build_code(k)
    z = encode(np.array([1, 1, -1, 1, -1, 1]))
    h4 = SlhzHamiltonian(_instance(k), 0.0, 2.0, 4)
    h3 = SlhzHamiltonian(_instance(k), 0.0, 2.0, 3)
    for p in range(code.params.n_v):
        assert delta_energy(h4, z, p) == pytest.approx(2.0 * len(code.vn_adjacency4[p]))
        assert delta_energy(h3, z, p) == pytest.approx(2.0 * (k - 2))


def test_tracked_state_does_not_drift() -> None:
    k, n = 6, 8
    rng = np.random.default_rng(4)
    j = rng.uniform(-0.25, 0.25, 15)
    x0 = np.where(rng.random((n, 15)) < 0.5, -1, 1).astype(np.int8)
    beta, gamma = np.full(n, 0.7), np.full(n, 1.3)
    for w in (3, 4):
        batch = ChainBatch(k, j, w, x0.copy())
        rows = np.arange(n)
        for _ in range(20_000):
            batch.flip(rows, rng.integers(0, 15, size=n))
        assert np.allclose(batch.energies(beta, gamma), batch.full_energies(beta, gamma, w), atol=1e-6)
        fresh = ChainBatch(k, j, w, batch.x.copy())
        # column n_v collects the padding slots of three-corner plaquettes
        assert np.array_equal(fresh.adj[:, :15], batch.adj[:, :15])
        assert np.array_equal(fresh.viol, batch.viol)


def test_metropolis_accepts_downhill_moves() -> None:
    h = SlhzHamiltonian(_instance(5), 0.0, 0.0)
    rng = np.random.default_rng(5)
    x = SpinMatrix.ones(5)
    for _ in range(50):
        y = metropolis_step(h, x, rng)
        assert int((y.entries != x.entries).sum()) == 2
        x = y


def test_metropolis_refuses_penalty_moves_at_huge_gamma() -> None:
    h = SlhzHamiltonian(_instance(5), 0.0, 1e4)
    rng = np.random.default_rng(6)
    z = encode(np.array([1, -1, 1, 1, -1]))
    for _ in range(50):
        assert metropolis_step(h, z, rng) == z


def test_rejection_free_always_moves() -> None:
    h = SlhzHamiltonian(_instance(5, 2), 0.6, 0.8)
    rng = np.random.default_rng(7)
    x = _random_state(5, rng)
    for _ in range(50):
        y, w = rejection_free_step(h, x, rng)
        assert int((y.entries != x.entries).sum()) == 2
        assert w >= 1.0
        x = y


def test_uniform_rates_give_unit_holding_time() -> None:
    h = SlhzHamiltonian(_instance(5), 0.0, 0.0)
    _, w = rejection_free_step(h, SpinMatrix.ones(5), np.random.default_rng(0))
    assert w == pytest.approx(1.0)


def test_frozen_state() -> None:
    h = SlhzHamiltonian(Instance(5, np.zeros(10)), 0.0, 1e4)
    z = encode(np.array([1, 1, -1, 1, 1]))
    y, w = rejection_free_step(h, z, np.random.default_rng(0))
    assert y == z
    assert w == np.inf
    res = run_chain(h, McmcConfig(samples_per_chain=10), np.random.default_rng(0), initial=z)
    assert res.frozen
    assert res.n_recorded == 1


def test_chain_started_at_truth_finds_it() -> None:
    inst = _instance(6, 3, truth=True)
    truth = inst.ground_truth()
    h = SlhzHamiltonian(inst, 5.0, 5.0)
    for kernel in ("metropolis", "rejection_free"):
        res = run_chain(h, McmcConfig(kernel=kernel, samples_per_chain=30, init="given"), np.random.default_rng(1), initial=truth)
        assert res.contains_target
        assert res.contains_code_state
        assert res.sample(0) == truth


def test_recorded_energies_are_consistent() -> None:
    inst = _instance(6, 4)
    h = SlhzHamiltonian(inst, 0.9, 1.1)
    res = run_chain(h, McmcConfig(samples_per_chain=40, stride=3, burn_in=5), np.random.default_rng(2))
    assert res.n_recorded == 40
    assert res.steps == 5 + 3 * 39
    for n in range(res.n_recorded):
        assert res.energies[n] == pytest.approx(energy(h, res.sample(n)))
    assert res.holding_weights.shape == (40,)


def test_budget_modes() -> None:
    mc = McmcConfig.decoding_mode(91)
    assert mc.samples_per_chain == 1200 * 91
    assert mc.total_steps == 1200 * 91 - 1
    hy = McmcConfig.hybrid_mode(91)
    assert hy.samples_per_chain == 4 * 91
    assert hy.burn_in == 91
    assert hy.sweeps(91) == pytest.approx((91 + 4 * 91 - 1) / 91)


def test_summary_only_chains() -> None:
    inst = _instance(5, 5, truth=True)
    target = vector_view(inst.ground_truth())
    cfg = McmcConfig(samples_per_chain=200, record_samples=False)
    out = run_chains(5, inst.couplings, np.full(6, 1.0), 1.0, cfg, np.random.default_rng(3), target=target)
    assert out.samples is None
    assert out.n_recorded.tolist() == [200] * 6
    assert np.isfinite(out.min_energy).all()
    assert (out.min_energy <= out.last_energy).all()


def test_schedule_endpoints() -> None:
    s = LinearSchedule(0.0, 2.0, 1.0, 0.0)
    assert s.at(0, 10) == (0.0, 1.0)
    assert s.at(10, 10) == (2.0, 0.0)
    inst = _instance(5)
    cfg = McmcConfig(samples_per_chain=20, schedule=s)
    out = run_chains(5, inst.couplings, [0.0], 0.0, cfg, np.random.default_rng(0))
    assert out.n_recorded[0] == 20


def test_hybrid_success_is_monotone() -> None:
    inst = _instance(6, 6, truth=True)
    target = vector_view(inst.ground_truth())
    cfg = McmcConfig.hybrid_mode(inst.n_v)
    out = run_chains(6, inst.couplings, np.full(16, 0.5), 0.3, cfg, np.random.default_rng(4), target=target)
    out = decode_recorded(out, BfConfig(), target)
    assert (out.decoded_target | ~out.hit_target).all()
    assert (out.decoded_code_state | ~out.hit_code_state).all()


def test_hybrid_decode_sample_at_truth() -> None:
    inst = _instance(6, 7, truth=True)
    h = SlhzHamiltonian(inst, 5.0, 5.0)
    res = hybrid_decode(h, McmcConfig(samples_per_chain=12, burn_in=0), initial=inst.ground_truth())
    assert res.decoded_target
    assert res.decoded_code_state


def test_average_error_matrix() -> None:
    truth = encode(np.array([1, -1, 1, 1, -1]))
    same = np.tile(vector_view(truth), (30, 1))
    m = average_error_matrix(same, truth)
    assert np.array_equal(m, np.ones((5, 5)))
    assert np.array_equal(correctness_probability(m), np.ones((5, 5)))

    rng = np.random.default_rng(8)
    noise = np.where(rng.random((20_000, 10)) < 0.5, -1, 1)
    m = average_error_matrix(noise, truth)
    assert np.array_equal(np.diagonal(m), np.ones(5))
    assert np.abs(m - np.eye(5)).max() < 0.05
    pc = correctness_probability(m)
    assert ((pc >= 0) & (pc <= 1)).all()
    with pytest.raises(InvalidParameterError):
        average_error_matrix(np.empty((0, 10)), truth)


def test_histogram_and_total_variation() -> None:
    inst = _instance(4, 9)
    h = SlhzHamiltonian(inst, 0.4, 0.4)
    res = run_chain(h, McmcConfig(kernel="metropolis", samples_per_chain=500), np.random.default_rng(9))
    hist = boltzmann_histogram(res)
    assert hist.shape == (64,)
    assert hist.sum() == pytest.approx(1.0)
    assert total_variation(hist, hist) == 0.0
    assert total_variation(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0


@pytest.mark.parametrize("kernel", ["metropolis", "rejection_free"])
def test_k4_chains_approach_boltzmann(kernel: str) -> None:
    inst = gen_instance(4, 1.0, np.random.default_rng(10))
    row = validate_point(inst, 0.5, 0.5, kernel, 400_000, 64, np.random.default_rng(11))
    assert row["tv"] < 0.03
