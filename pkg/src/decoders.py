"""
Hard- and soft-decision decoders for the parity-encoding code.

  bf_*    parallel majority-vote bit flipping in matrix form: x <- sign[x (x - I)]
  wbf/gdbf inversion functions, their Hamiltonians and greedy flip loops
  bp_*    sum-product on the weight-3 Tanner graph, flooding schedule
  mwd_*   minimum-weight decoding by exhaustive gauge search
  mvd_*   majority-vote decoding of the logical spins

All decoders work on weight-3 syndromes except MWD, which matches the
weight-4 syndrome of the received state.
"""
from __future__ import annotations
from dataclasses import dataclass, field

import numpy as np

from .channels import CrosstalkParams, Instance
from .errors import CapacityError, InvalidParameterError
from .log import get
from .oracle import MAX_K, gauge_spins, scan_ising
from .parity_code import (
    SpinMatrix, build_code, encode, hamming, is_code_state, is_code_state_array, resolve_pair, vector_view,
)

log = get("decode")

CONVERGED_CODE_STATE = "converged_code_state"
CONVERGED_FIXED_POINT = "converged_fixed_point"
TIE = "tie"
MAX_ITER_REACHED = "max_iter_reached"
STATUSES = (CONVERGED_CODE_STATE, CONVERGED_FIXED_POINT, TIE, MAX_ITER_REACHED)

TIE_POLICIES = ("fail", "coin_flip", "keep")
GREEDY_STRATEGIES = ("single", "multi")


# ---------- configs / outcomes ----------
@dataclass(frozen=True)
class BfConfig:
    max_iterations: int = 5
    tie_policy: str = "fail"
    early_stop: bool = True
    record_trajectory: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.tie_policy not in TIE_POLICIES:
            raise InvalidParameterError(f"tie_policy must be one of {TIE_POLICIES}, got {self.tie_policy!r}")


@dataclass(frozen=True)
class BpConfig:
    prior_epsilon: float = 0.25
    iterations: int = 5
    clamp: float = 30.0
    schedule: str = "flooding"
    record_trajectory: bool = False

    def __post_init__(self):
        if not (0.0 < self.prior_epsilon < 0.5):
            raise InvalidParameterError(f"prior_epsilon must be in (0, 0.5), got {self.prior_epsilon}")
        if self.iterations < 1:
            raise InvalidParameterError(f"iterations must be >= 1, got {self.iterations}")
        if self.clamp <= 0:
            raise InvalidParameterError("clamp must be positive")
        if np.tanh(self.clamp / 2.0) == 1.0:
            raise InvalidParameterError(f"clamp {self.clamp} saturates tanh; check messages would become infinite")
        if self.schedule != "flooding":
            raise InvalidParameterError(f"only the flooding schedule is supported, got {self.schedule!r}")


@dataclass(frozen=True)
class GreedyConfig:
    max_iterations: int = 50
    strategy: str = "single"
    record_trajectory: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.strategy not in GREEDY_STRATEGIES:
            raise InvalidParameterError(f"strategy must be one of {GREEDY_STRATEGIES}, got {self.strategy!r}")


@dataclass(eq=False)
class DecodeOutcome:
    final: SpinMatrix
    iterations_used: int
    status: str
    flips_per_iteration: list[int] = field(default_factory=list)
    ties: int = 0
    trajectory: list[SpinMatrix] | None = None
    posterior: np.ndarray | None = None
    error_pattern: SpinMatrix | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise InvalidParameterError(f"unknown decode status {self.status!r}")
        if self.status == CONVERGED_CODE_STATE and not is_code_state(self.final):
            raise InvalidParameterError("status converged_code_state on a state that is not a code-state")

    @property
    def succeeded(self) -> bool:
        return self.status == CONVERGED_CODE_STATE

    def to_row(self, ground_truth: SpinMatrix | None = None) -> dict:
        return {
            "status": self.status,
            "iterations_used": self.iterations_used,
            "flips_per_iteration": ";".join(str(f) for f in self.flips_per_iteration),
            "ties": self.ties,
            "hamming_to_truth": None if ground_truth is None else hamming(self.final, ground_truth),
        }


@dataclass(eq=False)
class BatchOutcome:
    finals: np.ndarray       # (n, K, K) int8
    status: np.ndarray       # (n,) str
    iterations: np.ndarray   # (n,) int
    ties: np.ndarray         # (n,) int

    def all_one(self) -> np.ndarray:
        return (self.finals == 1).all(axis=(1, 2))


# ---------- helpers ----------
def triple_syndromes(x: SpinMatrix) -> np.ndarray:
    code = build_code(x.k)
    return vector_view(x)[code.cn_adjacency3].prod(axis=1)


def _vote(stack: np.ndarray) -> np.ndarray:
    """Majority-vote argument x_ij + sum_{k != i,j} x_ik x_kj, i.e. x (x - I)."""
    a = stack.astype(np.float64)
    return np.rint(a @ a - a).astype(np.int64)


def syndrome_sums(x: SpinMatrix) -> np.ndarray:
    """Per pair, in canonical order: sum of the K-2 weight-3 syndromes containing it."""
    i, j = np.triu_indices(x.k, 1)
    a = x.entries
    return a[i, j] * _vote(a)[i, j] - 1


def _edge_weights(code, weights) -> np.ndarray:
    """Per-check weights (n_c3,), a (n_v, K-2) table or a scalar -> (n_v, K-2) table."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim == 0:
        return np.full(code.vn_adjacency3.shape, float(w))
    if w.shape == (code.params.n_c3,):
        return w[code.vn_adjacency3]
    if w.shape == code.vn_adjacency3.shape:
        return w
    raise InvalidParameterError(f"weights shape {w.shape} matches neither checks nor pair table")


def _check_weights(code, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim == 0:
        return np.full(code.params.n_c3, float(w))
    if w.shape != (code.params.n_c3,):
        raise InvalidParameterError(f"Hamiltonian weights need one entry per weight-3 check, got {w.shape}")
    return w


def _couplings(code, J) -> np.ndarray:
    j = J.couplings if isinstance(J, Instance) else np.asarray(J, dtype=np.float64)
    if j.shape != (code.params.n_v,):
        raise InvalidParameterError(f"expected {code.params.n_v} couplings, got shape {j.shape}")
    return j


# ---------- inversion functions ----------
def inversion_bf(x: SpinMatrix, pair) -> int:
    code = build_code(x.k)
    return int(1 + syndrome_sums(x)[resolve_pair(code, pair)])


def inversion_bf_all(x: SpinMatrix) -> np.ndarray:
    return 1 + syndrome_sums(x)


def inversion_wbf(x: SpinMatrix, J, beta: float, weights, pair) -> float:
    """
    beta |J_p| + sum_i w_i s_i over the weight-3 checks i containing p.
    `weights` is a CrosstalkParams for this pair or any form `_edge_weights` accepts.
    """
    code = build_code(x.k)
    p = resolve_pair(code, pair)
    j = _couplings(code, J)
    s = triple_syndromes(x)[code.vn_adjacency3[p]]
    if isinstance(weights, CrosstalkParams):
        if tuple(code.pairs[p]) != weights.pair:
            raise InvalidParameterError(f"crosstalk weights are for pair {weights.pair}, not {tuple(code.pairs[p])}")
        w = weights.wk
    else:
        w = _edge_weights(code, weights)[p]
    return float(beta * abs(j[p]) + np.dot(w, s))


def inversion_wbf_all(x: SpinMatrix, J, beta: float, weights) -> np.ndarray:
    code = build_code(x.k)
    s = triple_syndromes(x)[code.vn_adjacency3]
    return beta * np.abs(_couplings(code, J)) + (_edge_weights(code, weights) * s).sum(axis=1)


def inversion_gdbf(x: SpinMatrix, J, pair) -> float:
    code = build_code(x.k)
    p = resolve_pair(code, pair)
    j = _couplings(code, J)
    return float(j[p] * x.entries[tuple(code.pairs[p])] + syndrome_sums(x)[p])


def inversion_gdbf_all(x: SpinMatrix, J) -> np.ndarray:
    code = build_code(x.k)
    return _couplings(code, J) * vector_view(x) + syndrome_sums(x)


# ---------- Hamiltonians ----------
def energy_bf(x: SpinMatrix) -> float:
    return float(-vector_view(x).sum() - triple_syndromes(x).sum())


def energy_wbf(x: SpinMatrix, J, beta: float, weights) -> float:
    code = build_code(x.k)
    corr = np.abs(_couplings(code, J)) @ vector_view(x)
    return float(-beta * corr - _check_weights(code, weights) @ triple_syndromes(x))


def energy_gdbf(x: SpinMatrix, J) -> float:
    """
    H = -sum_i J_i x_i - sum_i s_i, with no 1/2 on the correlation term: the normalization
    under which flipping spin p changes H by exactly 2 * inversion_gdbf(x, J, p).
    """
    code = build_code(x.k)
    return float(-(_couplings(code, J) @ vector_view(x)) - triple_syndromes(x).sum())


# ---------- bit flipping ----------
def _bf_update(stack: np.ndarray, tie_policy: str, rng) -> tuple[np.ndarray, np.ndarray]:
    """One parallel BF step on an (n, K, K) stack. Returns (new stack, ties per item)."""
    arg = _vote(stack)
    new = np.sign(arg).astype(np.int8)
    k = stack.shape[-1]
    d = np.arange(k)
    new[:, d, d] = 1
    tie = new == 0
    n_ties = tie.sum(axis=(1, 2)) // 2
    if tie_policy == "coin_flip" and n_ties.any():
        if rng is None:
            raise InvalidParameterError("coin_flip tie policy needs an rng")
        draw = np.triu(np.where(rng.random(stack.shape) < 0.5, 1, -1).astype(np.int8), 1)
        draw = draw + np.swapaxes(draw, 1, 2)
        new = np.where(tie, draw, new)
    else:
        new = np.where(tie, stack, new)
    return new, n_ties


def bf_step(x: SpinMatrix, tie_policy: str = "keep", rng: np.random.Generator | None = None) -> SpinMatrix:
    """
    sign[x (x - I)] with the diagonal reset to +1. Zero arguments keep the current
    entry, or draw +/-1 under coin_flip; `bf_ties` counts them.
    """
    new, _ = _bf_update(x.entries[None], "coin_flip" if tie_policy == "coin_flip" else "keep", rng)
    return SpinMatrix._wrap(new[0])


def bf_ties(x: SpinMatrix) -> int:
    i, j = np.triu_indices(x.k, 1)
    return int((_vote(x.entries)[i, j] == 0).sum())


def _flip_count(a: np.ndarray, b: np.ndarray) -> int:
    return int((a != b).sum()) // 2


def bf_decode(r: SpinMatrix, cfg: BfConfig = BfConfig(), rng: np.random.Generator | None = None) -> DecodeOutcome:
    a = r.entries
    trajectory = [r] if cfg.record_trajectory else None
    if is_code_state_array(a):
        return DecodeOutcome(r, 0, CONVERGED_CODE_STATE, [], 0, trajectory)
    flips: list[int] = []
    ties = 0
    for it in range(1, cfg.max_iterations + 1):
        new, n_ties = _bf_update(a[None], cfg.tie_policy, rng)
        new, n_ties = new[0], int(n_ties[0])
        ties += n_ties
        flips.append(_flip_count(a, new))
        a = new
        if trajectory is not None:
            trajectory.append(SpinMatrix._wrap(a))
        if n_ties and cfg.tie_policy == "fail":
            return DecodeOutcome(SpinMatrix._wrap(a), it, TIE, flips, ties, trajectory)
        if is_code_state_array(a):
            return DecodeOutcome(SpinMatrix._wrap(a), it, CONVERGED_CODE_STATE, flips, ties, trajectory)
        if cfg.early_stop and flips[-1] == 0:
            return DecodeOutcome(SpinMatrix._wrap(a), it, CONVERGED_FIXED_POINT, flips, ties, trajectory)
    return DecodeOutcome(SpinMatrix._wrap(a), cfg.max_iterations, MAX_ITER_REACHED, flips, ties, trajectory)


def bf_decode_batch(stack: np.ndarray, cfg: BfConfig = BfConfig(), rng: np.random.Generator | None = None) -> BatchOutcome:
    """
    bf_decode over an (n, K, K) stack. Per-item results equal bf_decode for the
    fail and keep policies; coin_flip draws from one shared stream.
    """
    a = np.array(stack, dtype=np.int8, copy=True)
    n = a.shape[0]
    status = np.full(n, MAX_ITER_REACHED, dtype=object)
    iterations = np.full(n, cfg.max_iterations, dtype=np.int64)
    ties = np.zeros(n, dtype=np.int64)
    done = is_code_state_array(a)
    status[done] = CONVERGED_CODE_STATE
    iterations[done] = 0
    for it in range(1, cfg.max_iterations + 1):
        active = np.flatnonzero(~done)
        if active.size == 0:
            break
        new, n_ties = _bf_update(a[active], cfg.tie_policy, rng)
        moved = (new != a[active]).any(axis=(1, 2))
        a[active] = new
        ties[active] += n_ties
        tied = n_ties > 0 if cfg.tie_policy == "fail" else np.zeros(active.size, dtype=bool)
        code = ~tied & is_code_state_array(new)
        fixed = ~tied & ~code & ~moved if cfg.early_stop else np.zeros(active.size, dtype=bool)
        for mask, label in ((tied, TIE), (code, CONVERGED_CODE_STATE), (fixed, CONVERGED_FIXED_POINT)):
            idx = active[mask]
            status[idx] = label
            iterations[idx] = it
            done[idx] = True
    return BatchOutcome(a, status.astype(str), iterations, ties)


# ---------- greedy WBF / GDBF loops ----------
def _greedy(r: SpinMatrix, scores, cfg: GreedyConfig) -> DecodeOutcome:
    code = build_code(r.k)
    x = r
    trajectory = [r] if cfg.record_trajectory else None
    flips: list[int] = []
    if is_code_state(x):
        return DecodeOutcome(x, 0, CONVERGED_CODE_STATE, flips, 0, trajectory)
    for it in range(1, cfg.max_iterations + 1):
        delta = scores(x)
        neg = np.flatnonzero(delta < 0)
        if neg.size == 0:
            return DecodeOutcome(x, it - 1, CONVERGED_FIXED_POINT, flips, 0, trajectory)
        chosen = neg if cfg.strategy == "multi" else np.array([int(np.argmin(delta))])
        a = x.entries.copy()
        i, j = code.pairs[chosen, 0], code.pairs[chosen, 1]
        a[i, j] *= -1
        a[j, i] *= -1
        x = SpinMatrix._wrap(a)
        flips.append(int(chosen.size))
        if trajectory is not None:
            trajectory.append(x)
        if is_code_state(x):
            return DecodeOutcome(x, it, CONVERGED_CODE_STATE, flips, 0, trajectory)
    return DecodeOutcome(x, cfg.max_iterations, MAX_ITER_REACHED, flips, 0, trajectory)


def wbf_decode(r: SpinMatrix, J, beta: float, weights, cfg: GreedyConfig = GreedyConfig()) -> DecodeOutcome:
    """
    Greedy weighted BF. The prior term is measured against sign(J): beta J_p x_p,
    which equals beta |J_p| while x agrees with the hard decision of J.
    """
    code = build_code(r.k)
    j = _couplings(code, J)
    w = _edge_weights(code, weights)

    def scores(x: SpinMatrix) -> np.ndarray:
        s = triple_syndromes(x)[code.vn_adjacency3]
        return beta * j * vector_view(x) + (w * s).sum(axis=1)

    return _greedy(r, scores, cfg)


def gdbf_decode(r: SpinMatrix, J, cfg: GreedyConfig = GreedyConfig()) -> DecodeOutcome:
    return _greedy(r, lambda x: inversion_gdbf_all(x, J), cfg)


# ---------- belief propagation ----------
def bp_decode(r: SpinMatrix, cfg: BpConfig = BpConfig()) -> DecodeOutcome:
    code = build_code(r.k)
    rv = vector_view(r).astype(np.float64)
    trajectory = [r] if cfg.record_trajectory else None
    l0 = rv * np.log((1.0 - cfg.prior_epsilon) / cfg.prior_epsilon)
    if is_code_state(r):
        return DecodeOutcome(r, 0, CONVERGED_CODE_STATE, [], 0, trajectory, posterior=l0)

    # edges are laid out check-major: edge 3c+m joins check c to its m-th pair
    edge_var = code.cn_adjacency3.ravel()
    var_edges = np.argsort(edge_var, kind="stable").reshape(code.params.n_v, code.k - 2)
    bound = np.tanh(cfg.clamp / 2.0)
    c2v = np.zeros(edge_var.shape[0])
    decision = rv.copy()
    flips: list[int] = []
    post = l0
    for it in range(1, cfg.iterations + 1):
        v2c = (l0 + c2v[var_edges].sum(axis=1))[edge_var] - c2v
        t = np.tanh(v2c / 2.0).reshape(-1, 3)
        others = np.stack([t[:, 1] * t[:, 2], t[:, 0] * t[:, 2], t[:, 0] * t[:, 1]], axis=1)
        c2v = 2.0 * np.arctanh(np.clip(others, -bound, bound)).ravel()
        post = l0 + c2v[var_edges].sum(axis=1)
        new = np.where(post > 0, 1.0, np.where(post < 0, -1.0, rv))
        flips.append(int((new != decision).sum()))
        decision = new
        x = _from_vector(decision, r.k)
        if trajectory is not None:
            trajectory.append(x)
        if is_code_state(x):
            return DecodeOutcome(x, it, CONVERGED_CODE_STATE, flips, 0, trajectory, posterior=post)
    return DecodeOutcome(x, cfg.iterations, MAX_ITER_REACHED, flips, 0, trajectory, posterior=post)


def _from_vector(v: np.ndarray, k: int) -> SpinMatrix:
    a = np.ones((k, k), dtype=np.int8)
    i, j = np.triu_indices(k, 1)
    a[i, j] = v
    a[j, i] = v
    return SpinMatrix._wrap(a)


# ---------- minimum-weight / majority-vote ----------
def mwd_decode(r: SpinMatrix, instance: Instance | None = None, max_k: int = MAX_K) -> DecodeOutcome:
    """
    Fewest flips e* with syndrome4(e*) = syndrome4(r): maximize sum_{i<j} r_ij Z_i Z_j
    over gauge states Z (Z_1 = +1); then z* = Z Z^T and e* = r o z*.
    """
    if r.k > max_k:
        raise CapacityError(f"minimum-weight decoding refused for K={r.k} (limit {max_k})")
    if is_code_state(r):
        return DecodeOutcome(r, 0, CONVERGED_CODE_STATE, [0], 0, error_pattern=SpinMatrix.ones(r.k))
    scan = scan_ising(r.entries.astype(np.float64) - np.eye(r.k), fix_first=True)
    zs = gauge_spins(np.array(scan.indices), r.k)
    pick = 0
    if scan.count > 1 and instance is not None:
        energies = [instance.source_energy(z) for z in zs]
        pick = int(np.argmin(energies))
    z_star = encode(zs[pick])
    e_star = r * z_star
    weight = hamming(r, z_star)
    log.debug("mwd K={} weight={} minimizers={}", r.k, weight, scan.count)
    status = TIE if scan.count > 1 else CONVERGED_CODE_STATE
    return DecodeOutcome(z_star, 1, status, [weight], scan.count - 1, error_pattern=e_star)


def mvd_decode(r: SpinMatrix) -> DecodeOutcome:
    """
    Majority vote over the K readings of the logical state: reading a is row a of r.
    Readings are aligned to reading 1 by the sign of their overlap (0 counts as +1).
    """
    if is_code_state(r):
        return DecodeOutcome(r, 0, CONVERGED_CODE_STATE, [0])
    rows = r.entries.astype(np.int64)
    overlap = rows @ rows[0]
    aligned = rows * np.where(overlap >= 0, 1, -1)[:, None]
    z = np.where(aligned.sum(axis=0) >= 0, 1, -1)
    x = encode(z)
    return DecodeOutcome(x, 1, CONVERGED_CODE_STATE, [hamming(r, x)])
