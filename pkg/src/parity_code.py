"""
Parity-encoding code for K logical spins, in the spin (+1/-1) representation.

Canonical orderings used everywhere in the toolkit:
  pairs       {i,j}, i<j, lexicographic            -> variable nodes (physical spins)
  triples     {i,j,k}, i<j<k, lexicographic        -> weight-3 checks
  plaquettes  (i,j), 0<=i<=K-3, i+1<=j<=K-2, row-major
              corners (i,j) (i,j+1) (i+1,j) (i+1,j+1), with x_ii fixed to +1
                                                    -> weight-4 checks
Indices are 0-based in code; the plaquette (i,j) is the check s_klmn with
k=i, l=i+1, m=j, n=j+1 in 1-based labels.
"""
from __future__ import annotations
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import InvalidParameterError

MIN_K = 4


@dataclass(frozen=True)
class CodeParams:
    k: int

    @property
    def n_v(self) -> int:
        return self.k * (self.k - 1) // 2

    @property
    def n_c3(self) -> int:
        return self.k * (self.k - 1) * (self.k - 2) // 6

    @property
    def n_c4(self) -> int:
        return (self.k - 1) * (self.k - 2) // 2

    @property
    def d_v3(self) -> int:
        return self.k - 2


# ---------- value types ----------
@dataclass(frozen=True, eq=False)
class SpinMatrix:
    """K x K symmetric +/-1 matrix with unit diagonal (read-only int8 storage)."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidParameterError(f"spin matrix must be square, got shape {a.shape}")
        if not np.isin(a, (-1, 1)).all():
            raise InvalidParameterError("spin matrix entries must be +1 or -1")
        a = a.astype(np.int8)
        if not np.array_equal(a, a.T):
            raise InvalidParameterError("spin matrix must be symmetric")
        if not (np.diagonal(a) == 1).all():
            raise InvalidParameterError("spin matrix must have unit diagonal")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def _wrap(cls, a: np.ndarray) -> "SpinMatrix":
        # internal fast path for arrays already known to satisfy the invariants
        out = object.__new__(cls)
        a = np.ascontiguousarray(a, dtype=np.int8)
        a.setflags(write=False)
        object.__setattr__(out, "entries", a)
        return out

    @classmethod
    def ones(cls, k: int) -> "SpinMatrix":
        return cls._wrap(np.ones((k, k), dtype=np.int8))

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    def __mul__(self, other: "SpinMatrix") -> "SpinMatrix":
        if not isinstance(other, SpinMatrix):
            return NotImplemented
        _same_k(self, other)
        return SpinMatrix._wrap(self.entries * other.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpinMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())

    def __repr__(self) -> str:
        return f"SpinMatrix(k={self.k}, errors={int((self.entries == -1).sum()) // 2})"


@dataclass(frozen=True, eq=False)
class LogicalState:
    spins: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.spins)
        if s.ndim != 1 or not np.isin(s, (-1, 1)).all():
            raise InvalidParameterError("logical state must be a vector of +1/-1")
        s = s.astype(np.int8)
        s.setflags(write=False)
        object.__setattr__(self, "spins", s)

    @property
    def k(self) -> int:
        return self.spins.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, LogicalState) and np.array_equal(self.spins, other.spins)

    def __hash__(self) -> int:
        return hash(self.spins.tobytes())


@dataclass(frozen=True, eq=False)
class SyndromeVector:
    weight: int
    values: np.ndarray

    @property
    def violated(self) -> int:
        return int((self.values == -1).sum())

    def all_satisfied(self) -> bool:
        return bool((self.values == 1).all())


# ---------- code construction ----------
@dataclass(frozen=True, eq=False)
class PECode:
    params: CodeParams
    generator: np.ndarray      # K x n_v
    check4: np.ndarray         # n_c4 x n_v
    check3: np.ndarray         # n_c3 x n_v
    pairs: np.ndarray          # n_v x 2, canonical pair order
    pair_index: np.ndarray     # K x K, -1 on the diagonal
    triples: np.ndarray        # n_c3 x 3
    plaquettes: np.ndarray     # n_c4 x 2, top-left corner (i, j)
    cn_adjacency3: np.ndarray  # n_c3 x 3 variable nodes N(i)
    vn_adjacency3: np.ndarray  # n_v x (K-2) weight-3 checks M(j)
    cn_adjacency4: tuple       # per plaquette: variable nodes (3 or 4)
    vn_adjacency4: tuple       # per variable node: plaquettes (at most 4)

    @property
    def k(self) -> int:
        return self.params.k

    def padded_adjacency(self, weight: int) -> tuple[np.ndarray, np.ndarray]:
        """
        Rectangular adjacency for vectorized updates.
        Returns (checks, var_checks): checks[c] lists the variable nodes of check c,
        padded with n_v; var_checks[p] lists the checks of variable p, padded with n_c.
        """
        if weight == 3:
            return self.cn_adjacency3, self.vn_adjacency3
        if weight == 4:
            return _pad(self.cn_adjacency4, self.params.n_v), _pad(self.vn_adjacency4, self.params.n_c4)
        raise InvalidParameterError(f"syndrome weight must be 3 or 4, got {weight}")


def _pad(rows: tuple, fill: int) -> np.ndarray:
    width = max(len(r) for r in rows)
    out = np.full((len(rows), width), fill, dtype=np.int64)
    for n, r in enumerate(rows):
        out[n, : len(r)] = r
    return out


def pair_order(k: int) -> np.ndarray:
    i, j = np.triu_indices(k, 1)
    return np.stack([i, j], axis=1)


@lru_cache(maxsize=64)
def build_code(k: int) -> PECode:
    if k < MIN_K:
        raise InvalidParameterError(f"K must be >= {MIN_K} (weight-4 checks need it), got {k}")
    params = CodeParams(k)
    pairs = pair_order(k)
    lookup = np.full((k, k), -1, dtype=np.int64)
    lookup[pairs[:, 0], pairs[:, 1]] = np.arange(params.n_v)
    lookup[pairs[:, 1], pairs[:, 0]] = np.arange(params.n_v)

    generator = np.zeros((k, params.n_v), dtype=np.uint8)
    generator[pairs[:, 0], np.arange(params.n_v)] = 1
    generator[pairs[:, 1], np.arange(params.n_v)] = 1

    triples = np.array(list(combinations(range(k), 3)), dtype=np.int64)
    cn3 = np.stack(
        [lookup[triples[:, 0], triples[:, 1]],
         lookup[triples[:, 0], triples[:, 2]],
         lookup[triples[:, 1], triples[:, 2]]],
        axis=1,
    )
    check3 = np.zeros((params.n_c3, params.n_v), dtype=np.uint8)
    check3[np.repeat(np.arange(params.n_c3), 3), cn3.ravel()] = 1
    # every pair sits in exactly K-2 triples, so M(j) is rectangular
    vn3 = np.argsort(cn3.ravel(), kind="stable").reshape(params.n_v, k - 2) // 3

    plaquettes = np.array([(i, j) for i in range(k - 2) for j in range(i + 1, k - 1)], dtype=np.int64)
    cn4 = []
    for i, j in plaquettes:
        corners = [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)]
        cn4.append(np.array(sorted(lookup[a, b] for a, b in corners if a != b), dtype=np.int64))
    check4 = np.zeros((params.n_c4, params.n_v), dtype=np.uint8)
    vn4 = [[] for _ in range(params.n_v)]
    for c, members in enumerate(cn4):
        check4[c, members] = 1
        for p in members:
            vn4[p].append(c)

    for arr in (generator, check3, check4, pairs, lookup, triples, plaquettes, cn3, vn3):
        arr.setflags(write=False)
    return PECode(
        params=params,
        generator=generator,
        check4=check4,
        check3=check3,
        pairs=pairs,
        pair_index=lookup,
        triples=triples,
        plaquettes=plaquettes,
        cn_adjacency3=cn3,
        vn_adjacency3=vn3,
        cn_adjacency4=tuple(cn4),
        vn_adjacency4=tuple(np.array(v, dtype=np.int64) for v in vn4),
    )


def parity_checks_ok(code: PECode) -> bool:
    """generator . check^T == 0 (mod 2) for both check families."""
    g = code.generator.astype(np.int64)
    return bool(
        ((g @ code.check3.T.astype(np.int64)) % 2 == 0).all()
        and ((g @ code.check4.T.astype(np.int64)) % 2 == 0).all()
    )


def resolve_pair(code: PECode, pair) -> int:
    """Canonical index of a pair given as an index or as (i, j) with i != j."""
    if isinstance(pair, (int, np.integer)):
        if not 0 <= pair < code.params.n_v:
            raise InvalidParameterError(f"pair index {pair} out of range")
        return int(pair)
    i, j = pair
    if i == j or not (0 <= i < code.k and 0 <= j < code.k):
        raise InvalidParameterError(f"invalid pair {pair} for K={code.k}")
    return int(code.pair_index[i, j])


# ---------- state algebra ----------
def _same_k(x: SpinMatrix, y: SpinMatrix) -> None:
    if x.k != y.k:
        raise InvalidParameterError(f"size mismatch: K={x.k} vs K={y.k}")


def _spins(z) -> np.ndarray:
    if isinstance(z, LogicalState):
        return z.spins
    return LogicalState(np.asarray(z)).spins


def encode(z) -> SpinMatrix:
    s = _spins(z).astype(np.int8)
    return SpinMatrix._wrap(np.outer(s, s))


def vector_view(x: SpinMatrix) -> np.ndarray:
    i, j = np.triu_indices(x.k, 1)
    return x.entries[i, j].copy()


def k_from_length(n: int) -> int:
    k = int(round((1 + np.sqrt(1 + 8 * n)) / 2))
    if k * (k - 1) // 2 != n:
        raise InvalidParameterError(f"vector length {n} is not C(K,2) for any K")
    return k


def matrix_view(v, k: int | None = None) -> SpinMatrix:
    v = np.asarray(v)
    if v.ndim != 1:
        raise InvalidParameterError("expected a 1-d spin vector")
    if k is None:
        k = k_from_length(v.shape[0])
    elif v.shape[0] != k * (k - 1) // 2:
        raise InvalidParameterError(f"vector length {v.shape[0]} != C({k},2)")
    if not np.isin(v, (-1, 1)).all():
        raise InvalidParameterError("spin vector entries must be +1 or -1")
    a = np.ones((k, k), dtype=np.int8)
    i, j = np.triu_indices(k, 1)
    a[i, j] = v
    a[j, i] = v
    return SpinMatrix._wrap(a)


def matrices_from_vectors(vecs: np.ndarray, k: int) -> np.ndarray:
    """(n, C(K,2)) spin vectors -> (n, K, K) int8 stack with unit diagonal."""
    vecs = np.asarray(vecs, dtype=np.int8)
    out = np.ones((vecs.shape[0], k, k), dtype=np.int8)
    i, j = np.triu_indices(k, 1)
    out[:, i, j] = vecs
    out[:, j, i] = vecs
    return out


def syndrome3(x: SpinMatrix) -> SyndromeVector:
    code = build_code(x.k)
    vec = vector_view(x)
    return SyndromeVector(3, vec[code.cn_adjacency3].prod(axis=1).astype(np.int8))


def syndrome4(x: SpinMatrix) -> SyndromeVector:
    code = build_code(x.k)
    checks, _ = code.padded_adjacency(4)
    vec = np.append(vector_view(x), np.int8(1))
    return SyndromeVector(4, vec[checks].prod(axis=1).astype(np.int8))


def syndrome_composition(x: SpinMatrix) -> np.ndarray:
    """
    Each plaquette (i,j) rebuilt from weight-3 syndromes sharing the rung (i,i+1):
    s3(i,i+1,j) * s3(i,i+1,j+1), where the triple (i,i+1,i+1) degenerates to +1.
    """
    code = build_code(x.k)
    a = x.entries.astype(np.int64)
    out = np.empty(code.params.n_c4, dtype=np.int8)
    for c, (i, j) in enumerate(code.plaquettes):
        left = 1 if j == i + 1 else a[i, i + 1] * a[i + 1, j] * a[i, j]
        right = a[i, i + 1] * a[i + 1, j + 1] * a[i, j + 1]
        out[c] = left * right
    return out


def is_code_state_array(a: np.ndarray) -> np.ndarray | bool:
    """Code-state test on raw arrays: x == outer(x[0], x[0]). Accepts (K,K) or (n,K,K)."""
    if a.ndim == 2:
        return bool(np.array_equal(a, np.outer(a[0], a[0])))
    row = a[:, 0, :]
    return (a == row[:, :, None] * row[:, None, :]).all(axis=(1, 2))


def is_code_state(x: SpinMatrix) -> bool:
    return bool(is_code_state_array(x.entries))


def decode_logical(x: SpinMatrix) -> LogicalState:
    """Gauge-fixed source-state (Z_1 = +1) of a code-state."""
    if not is_code_state(x):
        raise InvalidParameterError("not a code-state; decode it first")
    return LogicalState(x.entries[0].copy())


def hamming(x: SpinMatrix, y: SpinMatrix) -> int:
    _same_k(x, y)
    return int((x.entries != y.entries).sum()) // 2


def to_binary(spins) -> np.ndarray:
    return ((1 - np.asarray(spins)) // 2).astype(np.uint8)


def from_binary(bits) -> np.ndarray:
    return (1 - 2 * np.asarray(bits, dtype=np.int8)).astype(np.int8)


def all_vectors(n_v: int) -> np.ndarray:
    """Every +/-1 vector of length n_v; row b has x_p = -1 where bit p of b is set."""
    b = np.arange(2 ** n_v, dtype=np.int64)[:, None]
    bits = (b >> np.arange(n_v, dtype=np.int64)[None, :]) & 1
    return from_binary(bits)


def count_code_states(k: int) -> int:
    """Exhaustive count over all 2^C(K,2) symmetric matrices (small K only)."""
    code = build_code(k)
    if code.params.n_v > 20:
        raise InvalidParameterError(f"exhaustive count is limited to C(K,2) <= 20, got {code.params.n_v}")
    vecs = all_vectors(code.params.n_v)
    s3 = vecs[:, code.cn_adjacency3].prod(axis=2)
    return int((s3 == 1).all(axis=1).sum())
