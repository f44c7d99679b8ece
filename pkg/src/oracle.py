"""
Exact, exponential-cost references.

The gauge enumeration below is shared by the logical ground-state search and
by minimum-weight decoding: state index b maps to Z with Z_1 = +1 and
Z_{t+2} = -1 iff bit t of b is set. Chunks are scanned in index order and the
reduction keeps the lowest index among minimizers, so results do not depend
on chunk size.
"""
from __future__ import annotations
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidParameterError
from .log import get
from .parity_code import (
    LogicalState, SpinMatrix, all_vectors, build_code, from_binary, k_from_length, matrix_view, syndrome4,
    vector_view,
)

log = get("oracle")

MAX_K = 28
MAX_FULL_SCAN_K = 20
MAX_COSET_K = 6
CHUNK = 1 << 16
TIE_ATOL = 1e-12
MAX_LISTED = 1024


@dataclass(frozen=True, eq=False)
class ExactSolution:
    minimizer: LogicalState
    min_energy: float
    degenerate: bool
    all_minimizers: list[LogicalState] | None = None
    n_minimizers: int = 1
    n_evaluated: int = 0


@dataclass(frozen=True)
class ScanResult:
    best: float
    indices: list[int]   # lowest-index minimizers, at most MAX_LISTED
    count: int           # total number of minimizers
    n_evaluated: int


def gauge_spins(idx: np.ndarray, k: int, fix_first: bool = True) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    free = k - 1 if fix_first else k
    z = from_binary((idx[:, None] >> np.arange(free, dtype=np.int64)) & 1)
    if fix_first:
        z = np.concatenate([np.ones((idx.shape[0], 1), dtype=np.int8), z], axis=1)
    return z


def scan_ising(coupling_matrix: np.ndarray, fix_first: bool = True, chunk: int = CHUNK) -> ScanResult:
    """Minimize -sum_{i<j} M_ij Z_i Z_j over every Z (or every Z with Z_1 = +1)."""
    m = np.asarray(coupling_matrix, dtype=np.float64)
    k = m.shape[0]
    total = 1 << (k - 1 if fix_first else k)
    best = np.inf
    hits: list[int] = []
    count = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        z = gauge_spins(idx, k, fix_first).astype(np.float64)
        e = -0.5 * np.einsum("ni,ni->n", z @ m, z)
        lo = float(e.min())
        if lo < best - TIE_ATOL:
            best, hits, count = lo, [], 0
        elif lo > best + TIE_ATOL:
            continue
        sel = idx[np.abs(e - best) <= TIE_ATOL]
        count += int(sel.shape[0])
        room = MAX_LISTED - len(hits)
        if room > 0:
            hits.extend(sel[:room].tolist())
    return ScanResult(best, hits, count, total)


# ---------- logical ground states ----------
def _solution(instance, scan: ScanResult, fix_first: bool) -> ExactSolution:
    zs = gauge_spins(np.array(scan.indices), instance.k, fix_first)
    if not fix_first:
        # gauge-fix so the result is comparable with the halved scan
        zs = zs * zs[:, :1]
        _, keep = np.unique(zs, axis=0, return_index=True)
        zs = zs[np.sort(keep)]
    states = [LogicalState(z) for z in zs]
    n_min = scan.count if fix_first else scan.count // 2
    return ExactSolution(
        minimizer=states[0],
        min_energy=instance.source_energy(states[0]),
        degenerate=n_min > 1,
        all_minimizers=states,
        n_minimizers=n_min,
        n_evaluated=scan.n_evaluated,
    )


def brute_force_ground_state(instance, max_k: int = MAX_K) -> ExactSolution:
    if instance.k > max_k:
        raise CapacityError(f"brute-force ground state refused for K={instance.k} (limit {max_k})")
    scan = scan_ising(instance.coupling_matrix(), fix_first=True)
    log.debug("ground state K={} evaluated={} minimizers={}", instance.k, scan.n_evaluated, scan.count)
    return _solution(instance, scan, fix_first=True)


def exhaustive_ground_state(instance) -> ExactSolution:
    """Scan all 2^K states without using the global-flip symmetry."""
    if instance.k > MAX_FULL_SCAN_K:
        raise CapacityError(f"full 2^K scan refused for K={instance.k} (limit {MAX_FULL_SCAN_K})")
    return _solution(instance, scan_ising(instance.coupling_matrix(), fix_first=False), fix_first=False)


# ---------- K=4 distributions ----------
def _require_k4(k: int, what: str) -> None:
    if k != 4:
        raise CapacityError(f"{what} is only available for K=4, got K={k}")


def code_energies(beta: float, gamma: float, penalty_weight: int, couplings: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """SLHZ energies for a batch of spin vectors, evaluated from scratch."""
    k = k_from_length(vecs.shape[1])
    checks, _ = build_code(k).padded_adjacency(penalty_weight)
    padded = np.concatenate([vecs, np.ones((vecs.shape[0], 1), dtype=vecs.dtype)], axis=1)
    s = padded[:, checks].prod(axis=2)
    corr = vecs.astype(np.float64) @ np.asarray(couplings, dtype=np.float64)
    return -beta * corr + gamma * ((1 - s) // 2).sum(axis=1)


def exact_boltzmann(h) -> np.ndarray:
    """
    exp(-H)/Z over all 64 states of K=4; entry b is the state with x_p = -1
    exactly where bit p of b is set (pairs in canonical order).
    """
    _require_k4(h.instance.k, "exact Boltzmann table")
    vecs = all_vectors(6)
    e = code_energies(h.beta, h.gamma, h.penalty_weight, h.instance.couplings, vecs)
    w = np.exp(-(e - e.min()))
    return w / w.sum()


def code_states(k: int) -> np.ndarray:
    """The 2^(K-1) code-states as (2^(K-1), C(K,2)) spin vectors."""
    z = gauge_spins(np.arange(1 << (k - 1)), k, fix_first=True)
    i, j = np.triu_indices(k, 1)
    return (z[:, i] * z[:, j]).astype(np.int8)


def exact_marginals(r: SpinMatrix, epsilon: float) -> np.ndarray:
    """Per-pair posterior LLR log P(x_p=+1|r) - log P(x_p=-1|r) over the code-states."""
    _require_k4(r.k, "exact marginals")
    if not (0.0 < epsilon <= 0.5):
        raise InvalidParameterError(f"epsilon must be in (0, 0.5], got {epsilon}")
    xs = code_states(4)
    rv = vector_view(r)
    d = (xs != rv).sum(axis=1)
    logw = d * np.log(epsilon) + (xs.shape[1] - d) * np.log1p(-epsilon)
    out = np.empty(xs.shape[1])
    for p in range(xs.shape[1]):
        plus = logw[xs[:, p] == 1]
        minus = logw[xs[:, p] == -1]
        out[p] = np.logaddexp.reduce(plus) - np.logaddexp.reduce(minus)
    return out


# ---------- coset leaders ----------
def min_weight_coset_exhaustive(r: SpinMatrix) -> tuple[SpinMatrix, int, int]:
    """
    Reference minimum-weight decoding by scanning every error pattern with the
    weight-4 syndrome of r. Returns (leader, weight, number of leaders).
    """
    if r.k > MAX_COSET_K:
        raise CapacityError(f"coset scan refused for K={r.k} (limit {MAX_COSET_K})")
    code = build_code(r.k)
    checks, _ = code.padded_adjacency(4)
    target = syndrome4(r).values
    vecs = all_vectors(code.params.n_v)
    padded = np.concatenate([vecs, np.ones((vecs.shape[0], 1), dtype=np.int8)], axis=1)
    match = (padded[:, checks].prod(axis=2) == target).all(axis=1)
    weights = (vecs == -1).sum(axis=1)
    weights = np.where(match, weights, np.iinfo(np.int64).max)
    best = int(weights.min())
    n_best = int((weights == best).sum())
    return matrix_view(vecs[int(np.argmin(weights))], r.k), best, n_best
