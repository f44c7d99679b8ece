"""
Noise sources, problem instances and the channel-derived quantities the
decoders consume (LLRs, crosstalk weights).

Every random draw goes through an explicit numpy Generator; `trial_rng`
derives one independent stream per (master seed, coordinates) key.
"""
from __future__ import annotations
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .oracle import brute_force_ground_state
from .parity_code import (
    CodeParams, LogicalState, SpinMatrix, build_code, encode, k_from_length, matrices_from_vectors,
    matrix_view, vector_view,
)

# probabilities handed to log-weights are kept inside the open interval (0, 1/2)
PROB_EPS = 1e-12


def trial_rng(master_seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    )


# ---------- types ----------
@dataclass(frozen=True)
class IidNoise:
    epsilon: float

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 0.5):
            raise InvalidParameterError(f"epsilon must be in [0, 0.5), got {self.epsilon}")


@dataclass(frozen=True)
class AwgnChannel:
    amplitude: float
    sigma: float

    def __post_init__(self):
        if self.amplitude == 0 or self.sigma <= 0:
            raise InvalidParameterError(
                f"AWGN channel needs |v| > 0 and sigma > 0, got v={self.amplitude} sigma={self.sigma}"
            )

    @property
    def beta(self) -> float:
        """Channel reliability factor 2|v|/sigma^2."""
        return 2.0 * abs(self.amplitude) / self.sigma ** 2


@dataclass(frozen=True, eq=False)
class Instance:
    k: int
    couplings: np.ndarray
    ground_state: LogicalState | None = None
    seed: int | None = None
    coupling_bound: float | None = None
    degenerate: bool | None = None

    def __post_init__(self):
        j = np.asarray(self.couplings, dtype=np.float64).copy()
        n_v = self.k * (self.k - 1) // 2
        if j.ndim != 1 or j.shape[0] != n_v:
            raise InvalidParameterError(f"instance K={self.k} needs {n_v} couplings, got shape {j.shape}")
        if self.ground_state is not None and self.ground_state.k != self.k:
            raise InvalidParameterError("ground state size does not match K")
        j.setflags(write=False)
        object.__setattr__(self, "couplings", j)

    @property
    def n_v(self) -> int:
        return self.couplings.shape[0]

    def coupling_matrix(self) -> np.ndarray:
        m = np.zeros((self.k, self.k))
        i, j = np.triu_indices(self.k, 1)
        m[i, j] = self.couplings
        m[j, i] = self.couplings
        return m

    def source_energy(self, z) -> float:
        """H(Z) = -sum_{i<j} J_ij Z_i Z_j, summed in canonical pair order."""
        s = z.spins if isinstance(z, LogicalState) else np.asarray(z)
        i, j = np.triu_indices(self.k, 1)
        return float(-np.sum(self.couplings * s[i] * s[j]))

    def ground_truth(self) -> SpinMatrix:
        if self.ground_state is None:
            raise InvalidParameterError("instance carries no ground state")
        return encode(self.ground_state)

    def with_ground_state(self, z: LogicalState, degenerate: bool) -> "Instance":
        return Instance(self.k, self.couplings, z, self.seed, self.coupling_bound, degenerate)


@dataclass(frozen=True, eq=False)
class CrosstalkParams:
    """
    Weights for one variable node {i,j}: one entry per third index k (ascending),
    which is also the order of the weight-3 checks containing the pair.
    """

    pair: tuple[int, int]
    gamma_ij: float
    others: np.ndarray
    p: np.ndarray
    w0: float
    wk: np.ndarray
    approximate: bool = False


# ---------- noise ----------
def sample_iid_errors(params: CodeParams, noise: IidNoise, n: int, rng: np.random.Generator) -> np.ndarray:
    flips = rng.random((n, params.n_v)) < noise.epsilon
    return matrices_from_vectors(np.where(flips, -1, 1), params.k)


def sample_iid_error(params: CodeParams, noise: IidNoise, rng: np.random.Generator) -> SpinMatrix:
    return SpinMatrix._wrap(sample_iid_errors(params, noise, 1, rng)[0])


def gen_instance(
    k: int,
    coupling_bound: float,
    rng: np.random.Generator,
    with_ground_truth: bool = False,
    seed: int | None = None,
) -> Instance:
    if coupling_bound < 0:
        raise InvalidParameterError(f"coupling bound must be >= 0, got {coupling_bound}")
    params = build_code(k).params
    if coupling_bound > 0:
        couplings = rng.uniform(-coupling_bound, coupling_bound, size=params.n_v)
    else:
        couplings = np.zeros(params.n_v)
    inst = Instance(k, couplings, seed=seed, coupling_bound=coupling_bound)
    if with_ground_truth:
        sol = brute_force_ground_state(inst)
        inst = inst.with_ground_state(sol.minimizer, sol.degenerate)
    return inst


def llr(channel: AwgnChannel, y):
    return channel.beta * np.asarray(y, dtype=np.float64) / 2.0


def transmit_awgn(channel: AwgnChannel, z: SpinMatrix, rng: np.random.Generator) -> np.ndarray:
    """Observation y = |v| z + sigma n over the C(K,2) physical spins."""
    v = vector_view(z).astype(np.float64)
    return abs(channel.amplitude) * v + channel.sigma * rng.standard_normal(v.shape[0])


def hard_decision(y, k: int | None = None) -> SpinMatrix:
    y = np.asarray(y)
    return matrix_view(np.where(y >= 0, 1, -1).astype(np.int8), k)


def hard_decision_error_prob(beta: float, couplings) -> np.ndarray:
    """Probability that sign(J) is wrong when the half-LLR is beta*J: 1 / (1 + exp(beta |J|))."""
    g = 1.0 / (1.0 + np.exp(beta * np.abs(np.asarray(couplings, dtype=np.float64))))
    return np.clip(g, PROB_EPS, 0.5 - PROB_EPS)


# ---------- crosstalk weights ----------
def _gamma_matrix(gammas, k: int | None) -> np.ndarray:
    g = np.asarray(gammas, dtype=np.float64)
    if g.ndim == 2:
        return g
    if k is None:
        k = k_from_length(g.shape[0])
    m = np.full((k, k), np.nan)
    i, j = np.triu_indices(k, 1)
    m[i, j] = g
    m[j, i] = g
    return m


def _check_gammas(g: np.ndarray) -> None:
    off = g[~np.eye(g.shape[0], dtype=bool)]
    if not ((off > 0) & (off < 0.5)).all():
        raise InvalidParameterError("all gamma must lie in (0, 0.5)")


def violation_prob(gamma_jk, gamma_ik):
    """Probability of an odd number of flips among the two other edges of a triangle."""
    return 0.5 * (1.0 - (1.0 - 2.0 * np.asarray(gamma_jk)) * (1.0 - 2.0 * np.asarray(gamma_ik)))


def crosstalk(gammas, pair: tuple[int, int], approximate: bool = False, k: int | None = None) -> CrosstalkParams:
    g = _gamma_matrix(gammas, k)
    _check_gammas(g)
    i, j = sorted(pair)
    others = np.array([t for t in range(g.shape[0]) if t not in (i, j)], dtype=np.int64)
    p = violation_prob(g[j, others], g[i, others])
    w0 = float(np.log((1.0 - g[i, j]) / g[i, j]))
    wk = np.full(others.shape[0], w0) if approximate else np.log((1.0 - p) / p)
    return CrosstalkParams((i, j), float(g[i, j]), others, p, w0, wk, approximate)


def crosstalk_weights(gammas, k: int, approximate: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """
    All-pairs form of `crosstalk`. Returns (w0, wk) with w0 of shape (n_v,) and
    wk of shape (n_v, K-2), rows aligned with the code's vn_adjacency3.
    """
    code = build_code(k)
    g = _gamma_matrix(gammas, k)
    _check_gammas(g)
    a, b = code.pairs[:, 0], code.pairs[:, 1]
    third = third_vertices(code)
    gij = g[a, b]
    w0 = np.log((1.0 - gij) / gij)
    if approximate:
        return w0, np.repeat(w0[:, None], k - 2, axis=1)
    p = violation_prob(g[b[:, None], third], g[a[:, None], third])
    return w0, np.log((1.0 - p) / p)


def third_vertices(code) -> np.ndarray:
    """(n_v, K-2): for pair p and its m-th weight-3 check, the logical index not in the pair."""
    tri = code.triples[code.vn_adjacency3]
    a = code.pairs[:, 0][:, None, None]
    b = code.pairs[:, 1][:, None, None]
    mask = (tri != a) & (tri != b)
    return tri[mask].reshape(code.params.n_v, code.k - 2)
