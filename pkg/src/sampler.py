"""
MCMC sampling of the SLHZ code Hamiltonian

    H(x) = -beta sum_p J_p x_p + gamma sum_c (1 - s_c(x)) / 2

with s_c the weight-4 plaquette syndromes (or the weight-3 triangle syndromes
when penalty_weight = 3).

`ChainBatch` keeps n independent chains in lockstep. Per chain it tracks the
correlation sum, the violated-check count and, for every pair p, the sum of
the syndromes of the checks containing p, so a flip costs O(checks per pair)
and the flip energy is  dH_p = 2 beta J_p x_p + gamma * adj_p.
"""
from __future__ import annotations
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from .channels import Instance
from .decoders import BfConfig, bf_decode_batch
from .errors import InvalidParameterError
from .log import get
from .parity_code import (
    SpinMatrix, build_code, is_code_state_array, k_from_length, matrices_from_vectors, matrix_view, syndrome3,
    resolve_pair, syndrome4, vector_view,
)

log = get("sampler")

KERNELS = ("metropolis", "rejection_free")
INITS = ("random", "given")
MCMC_BUDGET_FACTOR = 1200
HYBRID_BUDGET_FACTOR = 4


# ---------- types ----------
@dataclass(frozen=True, eq=False)
class SlhzHamiltonian:
    instance: Instance
    beta: float
    gamma: float
    penalty_weight: int = 4

    def __post_init__(self):
        if self.beta < 0 or self.gamma < 0:
            raise InvalidParameterError(f"beta and gamma must be >= 0, got beta={self.beta} gamma={self.gamma}")
        if self.penalty_weight not in (3, 4):
            raise InvalidParameterError(f"penalty_weight must be 3 or 4, got {self.penalty_weight}")

    @property
    def k(self) -> int:
        return self.instance.k


@dataclass(frozen=True)
class LinearSchedule:
    beta_start: float
    beta_end: float
    gamma_start: float
    gamma_end: float

    def at(self, step: int, total: int) -> tuple[float, float]:
        f = step / total if total > 0 else 1.0
        return (
            self.beta_start + f * (self.beta_end - self.beta_start),
            self.gamma_start + f * (self.gamma_end - self.gamma_start),
        )


@dataclass(frozen=True)
class McmcConfig:
    kernel: str = "rejection_free"
    samples_per_chain: int = 1
    stride: int = 1
    burn_in: int = 0
    init: str = "random"
    seed: int = 0
    record_samples: bool = True
    schedule: LinearSchedule | None = None

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise InvalidParameterError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.init not in INITS:
            raise InvalidParameterError(f"init must be one of {INITS}, got {self.init!r}")
        if self.samples_per_chain < 1 or self.stride < 1 or self.burn_in < 0:
            raise InvalidParameterError("need samples_per_chain >= 1, stride >= 1, burn_in >= 0")

    @property
    def total_steps(self) -> int:
        return self.burn_in + self.stride * (self.samples_per_chain - 1)

    def sweeps(self, n_v: int) -> float:
        return self.total_steps / n_v

    @classmethod
    def decoding_mode(cls, n_v: int, **kw) -> "McmcConfig":
        """1200 C(K,2) recorded states, stride 1, starting state included."""
        return cls(samples_per_chain=MCMC_BUDGET_FACTOR * n_v, stride=1, burn_in=0, **kw)

    @classmethod
    def hybrid_mode(cls, n_v: int, **kw) -> "McmcConfig":
        """4 C(K,2) recorded states after a burn-in of one sweep."""
        return cls(samples_per_chain=HYBRID_BUDGET_FACTOR * n_v, stride=1, burn_in=n_v, **kw)


@dataclass(eq=False)
class ChainResult:
    k: int
    samples: np.ndarray | None            # (n_recorded, n_v) int8
    energies: np.ndarray | None           # (n_recorded,)
    holding_weights: np.ndarray | None    # rejection-free only
    contains_target: bool
    contains_code_state: bool
    decoded_target: bool | None = None
    decoded_code_state: bool | None = None
    acceptance_rate: float = 0.0
    frozen: bool = False
    steps: int = 0
    min_energy: float = np.inf
    last_energy: float = np.nan

    @property
    def n_recorded(self) -> int:
        return 0 if self.samples is None else self.samples.shape[0]

    def sample(self, i: int) -> SpinMatrix:
        return matrix_view(self.samples[i], self.k)

    @property
    def sweeps(self) -> float:
        return self.steps / (self.k * (self.k - 1) // 2)


@dataclass(eq=False)
class ChainBatchResult:
    k: int
    samples: np.ndarray | None            # (n, samples_per_chain, n_v)
    energies: np.ndarray | None           # (n, samples_per_chain)
    holding_weights: np.ndarray | None
    n_recorded: np.ndarray
    hit_target: np.ndarray
    hit_code_state: np.ndarray
    moves: np.ndarray
    frozen: np.ndarray
    steps: int
    min_energy: np.ndarray
    last_energy: np.ndarray
    decoded_target: np.ndarray | None = None
    decoded_code_state: np.ndarray | None = None

    def __len__(self) -> int:
        return self.hit_target.shape[0]

    def chain(self, i: int) -> ChainResult:
        m = int(self.n_recorded[i])
        return ChainResult(
            k=self.k,
            samples=None if self.samples is None else self.samples[i, :m],
            energies=None if self.energies is None else self.energies[i, :m],
            holding_weights=None if self.holding_weights is None else self.holding_weights[i, :m],
            contains_target=bool(self.hit_target[i]),
            contains_code_state=bool(self.hit_code_state[i]),
            decoded_target=None if self.decoded_target is None else bool(self.decoded_target[i]),
            decoded_code_state=None if self.decoded_code_state is None else bool(self.decoded_code_state[i]),
            acceptance_rate=float(self.moves[i]) / max(self.steps, 1),
            frozen=bool(self.frozen[i]),
            steps=self.steps,
            min_energy=float(self.min_energy[i]),
            last_energy=float(self.last_energy[i]),
        )


# ---------- incremental bookkeeping ----------
class ChainBatch:
    def __init__(self, k: int, couplings, penalty_weight: int, x0: np.ndarray, target=None):
        code = build_code(k)
        self.n_v = code.params.n_v
        checks, var_checks = code.padded_adjacency(penalty_weight)
        n_c = checks.shape[0]
        # row n_c is an empty check: every slot points at the padding column n_v
        self.checks = np.vstack([checks, np.full((1, checks.shape[1]), self.n_v, dtype=np.int64)])
        self.var_checks = var_checks
        self.x = np.array(x0, dtype=np.int8)
        n = self.x.shape[0]
        self.rows = np.arange(n)
        self.j = np.broadcast_to(np.asarray(couplings, dtype=np.float64), self.x.shape)
        padded = np.concatenate([self.x, np.ones((n, 1), dtype=np.int8)], axis=1)
        s = padded[:, checks].prod(axis=2).astype(np.int8)
        # syndromes carry a trailing 0 column so padded check slots add nothing
        self.s = np.concatenate([s, np.zeros((n, 1), dtype=np.int8)], axis=1)
        self.adj = np.zeros((n, self.n_v + 1), dtype=np.int64)
        self.adj[:, : self.n_v] = self.s[:, var_checks].sum(axis=2)
        self.corr = (self.j * self.x).sum(axis=1)
        self.viol = (s == -1).sum(axis=1).astype(np.int64)
        self.n_c = n_c
        if target is None:
            self.target = None
            self.mismatch = None
        else:
            self.target = np.broadcast_to(np.asarray(target, dtype=np.int8), self.x.shape)
            self.mismatch = (self.x != self.target).sum(axis=1)

    def deltas(self, beta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
        return 2.0 * beta[:, None] * self.j * self.x + gamma[:, None] * self.adj[:, : self.n_v]

    def delta_at(self, beta: np.ndarray, gamma: np.ndarray, rows: np.ndarray, p: np.ndarray) -> np.ndarray:
        return 2.0 * beta * self.j[rows, p] * self.x[rows, p] + gamma * self.adj[rows, p]

    def energies(self, beta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
        return -beta * self.corr + gamma * self.viol

    def flip(self, rows: np.ndarray, p: np.ndarray) -> None:
        if rows.size == 0:
            return
        new_x = -self.x[rows, p]
        self.x[rows, p] = new_x
        self.corr[rows] += 2.0 * self.j[rows, p] * new_x
        if self.mismatch is not None:
            self.mismatch[rows] += np.where(new_x != self.target[rows, p], 1, -1)
        cs = self.var_checks[p]
        r2 = rows[:, None]
        old = self.s[r2, cs]
        new = -old
        self.s[r2, cs] = new
        self.viol[rows] += (new == -1).sum(axis=1) - (old == -1).sum(axis=1)
        members = self.checks[cs]
        vals = np.broadcast_to(2 * new[:, :, None].astype(np.int64), members.shape)
        np.add.at(self.adj, (np.broadcast_to(r2[:, :, None], members.shape), members), vals)

    def full_energies(self, beta: np.ndarray, gamma: np.ndarray, penalty_weight: int) -> np.ndarray:
        """Recompute from scratch (drift checks)."""
        k = k_from_length(self.n_v)
        checks, _ = build_code(k).padded_adjacency(penalty_weight)
        padded = np.concatenate([self.x, np.ones((self.x.shape[0], 1), dtype=np.int8)], axis=1)
        s = padded[:, checks].prod(axis=2)
        return -beta * (self.j * self.x).sum(axis=1) + gamma * (s == -1).sum(axis=1)


# ---------- single-state operations ----------
def energy(h: SlhzHamiltonian, x: SpinMatrix) -> float:
    s = syndrome4(x) if h.penalty_weight == 4 else syndrome3(x)
    return float(-h.beta * (h.instance.couplings @ vector_view(x)) + h.gamma * s.violated)


def delta_energy(h: SlhzHamiltonian, x: SpinMatrix, pair) -> float:
    code = build_code(x.k)
    p = resolve_pair(code, pair)
    checks, var_checks = code.padded_adjacency(h.penalty_weight)
    cs = var_checks[p]
    cs = cs[cs < checks.shape[0]]
    padded = np.append(vector_view(x), np.int8(1))
    s = padded[checks[cs]].prod(axis=1)
    xp = x.entries[tuple(code.pairs[p])]
    return float(2.0 * h.beta * h.instance.couplings[p] * xp + h.gamma * s.sum())


def _flip(x: SpinMatrix, p: int) -> SpinMatrix:
    code = build_code(x.k)
    i, j = code.pairs[p]
    a = x.entries.copy()
    a[i, j] = a[j, i] = -a[i, j]
    return SpinMatrix._wrap(a)


def metropolis_step(h: SlhzHamiltonian, x: SpinMatrix, rng: np.random.Generator) -> SpinMatrix:
    """Uniform single-pair proposal accepted with min(1, exp(-dH)); returns a new state."""
    n_v = x.k * (x.k - 1) // 2
    p = int(rng.integers(n_v))
    d = delta_energy(h, x, p)
    if rng.random() < np.exp(-max(d, 0.0)):
        return _flip(x, p)
    return x


def rejection_free_step(h: SlhzHamiltonian, x: SpinMatrix, rng: np.random.Generator) -> tuple[SpinMatrix, float]:
    """
    Chooses a flip with probability proportional to min(1, exp(-dH_p)). The weight
    returned is the expected holding time n_v / sum of rates of the current state;
    a state with every rate 0 is frozen and comes back unchanged with weight inf.
    """
    batch = ChainBatch(x.k, h.instance.couplings, h.penalty_weight, vector_view(x)[None])
    rates = np.exp(-np.maximum(batch.deltas(np.array([h.beta]), np.array([h.gamma]))[0], 0.0))
    total = rates.sum()
    if total == 0:
        return x, np.inf
    u = rng.random() * total
    p = min(int(np.searchsorted(np.cumsum(rates), u, side="right")), rates.shape[0] - 1)
    return _flip(x, p), batch.n_v / total


# ---------- chains ----------
def run_chains(
    k: int,
    couplings,
    beta,
    gamma,
    cfg: McmcConfig,
    rng: np.random.Generator,
    penalty_weight: int = 4,
    x0: np.ndarray | None = None,
    target=None,
    progress: bool = False,
) -> ChainBatchResult:
    """
    Run len(beta) chains in lockstep. `couplings` is (n_v,) or (n, n_v); `target`
    (n_v,) or (n, n_v) is the exact state whose appearance is flagged.
    """
    n_v = k * (k - 1) // 2
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    gamma = np.broadcast_to(np.asarray(gamma, dtype=np.float64), beta.shape).copy()
    n = beta.shape[0]
    if x0 is None:
        if cfg.init == "given":
            raise InvalidParameterError("init='given' needs an initial state")
        x0 = np.where(rng.random((n, n_v)) < 0.5, -1, 1).astype(np.int8)
    x0 = np.broadcast_to(np.asarray(x0, dtype=np.int8), (n, n_v))
    batch = ChainBatch(k, couplings, penalty_weight, x0, target)

    m = cfg.samples_per_chain
    last = cfg.total_steps
    rf = cfg.kernel == "rejection_free"
    samples = np.empty((n, m, n_v), dtype=np.int8) if cfg.record_samples else None
    energies = np.empty((n, m)) if cfg.record_samples else None
    holding = np.empty((n, m)) if (rf and cfg.record_samples) else None
    n_recorded = np.zeros(n, dtype=np.int64)
    hit_target = np.zeros(n, dtype=bool)
    hit_any = np.zeros(n, dtype=bool)
    moves = np.zeros(n, dtype=np.int64)
    frozen = np.zeros(n, dtype=bool)
    min_energy = np.full(n, np.inf)
    last_energy = np.full(n, np.nan)
    b, g = beta, gamma

    steps = range(last + 1)
    for t in tqdm(steps, disable=not progress, desc="chains", leave=False):
        if cfg.schedule is not None:
            sb, sg = cfg.schedule.at(t, last)
            b, g = np.full(n, sb), np.full(n, sg)
        if rf:
            rates = np.exp(-np.maximum(batch.deltas(b, g), 0.0))
            total = rates.sum(axis=1)
        live = ~frozen
        if t >= cfg.burn_in and (t - cfg.burn_in) % cfg.stride == 0:
            slot = (t - cfg.burn_in) // cfg.stride
            rec = np.flatnonzero(live)
            e = batch.energies(b, g)
            if samples is not None:
                samples[rec, slot] = batch.x[rec]
                energies[rec, slot] = e[rec]
                if holding is not None:
                    with np.errstate(divide="ignore"):
                        holding[rec, slot] = np.where(total[rec] > 0, n_v / total[rec], np.inf)
            n_recorded[rec] += 1
            min_energy[rec] = np.minimum(min_energy[rec], e[rec])
            last_energy[rec] = e[rec]
            hit_any[rec] |= batch.viol[rec] == 0
            if batch.mismatch is not None:
                hit_target[rec] |= batch.mismatch[rec] == 0
        if t == last:
            break
        if rf:
            frozen |= live & (total == 0)
            u = rng.random(n) * total
            movers = np.flatnonzero(~frozen)
            cum = np.cumsum(rates[movers], axis=1)
            p = np.minimum((cum <= u[movers, None]).sum(axis=1), n_v - 1)
            batch.flip(movers, p)
            moves[movers] += 1
        else:
            p = rng.integers(0, n_v, size=n)
            u = rng.random(n)
            d = batch.delta_at(b, g, batch.rows, p)
            movers = np.flatnonzero(u < np.exp(-np.maximum(d, 0.0)))
            batch.flip(movers, p[movers])
            moves[movers] += 1

    log.debug("chains n={} K={} steps={} frozen={}", n, k, last, int(frozen.sum()))
    return ChainBatchResult(
        k=k, samples=samples, energies=energies, holding_weights=holding, n_recorded=n_recorded,
        hit_target=hit_target, hit_code_state=hit_any, moves=moves, frozen=frozen, steps=last,
        min_energy=min_energy, last_energy=last_energy,
    )


def _target_vector(instance: Instance) -> np.ndarray | None:
    if instance.ground_state is None:
        return None
    return vector_view(instance.ground_truth())


def run_chain(
    h: SlhzHamiltonian,
    cfg: McmcConfig,
    rng: np.random.Generator | None = None,
    initial: SpinMatrix | None = None,
    target: SpinMatrix | None = None,
) -> ChainResult:
    """One chain; the flagged target defaults to the instance's ground-truth code-state."""
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    x0 = None if initial is None else vector_view(initial)[None]
    tv = vector_view(target) if target is not None else _target_vector(h.instance)
    out = run_chains(h.k, h.instance.couplings, [h.beta], h.gamma, cfg, rng, h.penalty_weight, x0, tv)
    return out.chain(0)


def decode_recorded(result: ChainBatchResult, bf: BfConfig, target=None, rng=None) -> ChainBatchResult:
    """BF-decode every recorded sample; sets decoded_target / decoded_code_state per chain."""
    if result.samples is None:
        raise InvalidParameterError("hybrid decoding needs recorded samples")
    n = len(result)
    decoded_target = np.zeros(n, dtype=bool)
    decoded_any = np.zeros(n, dtype=bool)
    i, j = np.triu_indices(result.k, 1)
    tv = None if target is None else np.broadcast_to(np.asarray(target, dtype=np.int8), (n, i.shape[0]))
    for c in range(n):
        stack = matrices_from_vectors(result.samples[c, : result.n_recorded[c]], result.k)
        out = bf_decode_batch(stack, bf, rng)
        ok = is_code_state_array(out.finals)
        decoded_any[c] = bool(ok.any())
        if tv is not None:
            decoded_target[c] = bool((out.finals[:, i, j] == tv[c]).all(axis=1).any())
    result.decoded_target = decoded_target
    result.decoded_code_state = decoded_any
    return result


def hybrid_decode(
    h: SlhzHamiltonian,
    cfg: McmcConfig,
    bf: BfConfig = BfConfig(),
    rng: np.random.Generator | None = None,
    initial: SpinMatrix | None = None,
) -> ChainResult:
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    x0 = None if initial is None else vector_view(initial)[None]
    tv = _target_vector(h.instance)
    out = run_chains(h.k, h.instance.couplings, [h.beta], h.gamma, cfg, rng, h.penalty_weight, x0, tv)
    return decode_recorded(out, bf, tv, rng).chain(0)


# ---------- estimators ----------
def average_error_matrix(samples, ground_truth: SpinMatrix) -> np.ndarray:
    """<x o z> over samples given as (n, n_v) vectors, SpinMatrix list or a ChainResult."""
    if isinstance(samples, ChainResult):
        samples = samples.samples
    if isinstance(samples, (list, tuple)):
        samples = np.stack([vector_view(s) for s in samples])
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise InvalidParameterError("average_error_matrix needs a non-empty (n, n_v) sample set")
    k = ground_truth.k
    mean = (samples * vector_view(ground_truth)).mean(axis=0)
    out = np.ones((k, k))
    i, j = np.triu_indices(k, 1)
    out[i, j] = mean
    out[j, i] = mean
    return out


def correctness_probability(avg: np.ndarray) -> np.ndarray:
    return (1.0 + avg) / 2.0


def state_index(samples: np.ndarray) -> np.ndarray:
    """Bit p of the index is set exactly where x_p = -1."""
    bits = (np.asarray(samples) == -1).astype(np.int64)
    return (bits << np.arange(bits.shape[1], dtype=np.int64)).sum(axis=1)


def boltzmann_histogram(result: ChainResult) -> np.ndarray:
    """Empirical distribution over the 2^C(K,2) states, holding-time weighted when available."""
    n_states = 1 << (result.k * (result.k - 1) // 2)
    w = result.holding_weights if result.holding_weights is not None else np.ones(result.n_recorded)
    hist = np.bincount(state_index(result.samples), weights=w, minlength=n_states)
    return hist / hist.sum()


def total_variation(p, q) -> float:
    return float(0.5 * np.abs(np.asarray(p) - np.asarray(q)).sum())
