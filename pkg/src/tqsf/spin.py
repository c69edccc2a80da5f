"""Spin operators as symbolic transposition sums, plus the dense oracle.

The total-spin operator of n spin-1/2 particles obeys the permutation-group
identity

    S^2 = n(4-n)/4 * I + sum_{i<j} P_ij,

where P_ij is the SWAP (transposition) of qubits i and j.  All operators in
this module are stored in that symbolic form and densified on demand; the
dense eigendecomposition doubles as an independent oracle for validating
the filtering circuits.

Spin quantum numbers are carried as integers 2S and 2M to keep half-integer
arithmetic exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DecodeError
from .statevector import StateVector

ORACLE_MAX_QUBITS = 12
CLUSTER_TOL = 1e-8
EMPTY_COMPONENT_TOL = 1e-12


@dataclass(frozen=True)
class TranspositionSum:
    """Hermitian operator (c_I * I + sum_p c_p * P_{i_p j_p}) / denominator."""

    num_qubits: int
    identity_coefficient: float = 0.0
    pairs: tuple[tuple[int, int], ...] = ()
    pair_coefficients: tuple[float, ...] = ()
    denominator: float = 1.0

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        coeffs = tuple(float(c) for c in self.pair_coefficients)
        if not coeffs:
            coeffs = (1.0,) * len(pairs)
        if len(coeffs) != len(pairs):
            raise ValueError("pair_coefficients length must match pairs")
        for i, j in pairs:
            if not 0 <= i < j < self.num_qubits:
                raise ValueError(f"invalid pair ({i}, {j}) for {self.num_qubits} qubits")
        if len(set(pairs)) != len(pairs):
            raise ValueError("pairs must be distinct")
        if self.denominator == 0:
            raise ValueError("denominator must be nonzero")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "pair_coefficients", coeffs)

    @property
    def support(self) -> tuple[int, ...]:
        """Qubits the non-identity part acts on."""
        return tuple(sorted({q for pair in self.pairs for q in pair}))

    def to_dense(self, num_qubits: int | None = None) -> np.ndarray:
        """Dense matrix on `num_qubits` qubits (defaults to self.num_qubits)."""
        n = self.num_qubits if num_qubits is None else num_qubits
        if n > ORACLE_MAX_QUBITS:
            raise CapacityError(f"dense form of a {n}-qubit operator exceeds 2^{ORACLE_MAX_QUBITS}")
        dim = 1 << n
        out = np.zeros((dim, dim), dtype=np.complex128)
        np.fill_diagonal(out, self.identity_coefficient)
        idx = np.arange(dim)
        for (i, j), c in zip(self.pairs, self.pair_coefficients):
            swapped = _swap_indices(idx, i, j)
            out[swapped, idx] += c
        out /= self.denominator
        return out

    def dense_on_support(self) -> tuple[np.ndarray, tuple[int, ...]]:
        """Dense matrix over the support qubits only, with the support map."""
        support = self.support
        if not support:
            return (
                np.array([[self.identity_coefficient / self.denominator]], dtype=np.complex128),
                (),
            )
        rank = {q: r for r, q in enumerate(support)}
        remapped = TranspositionSum(
            num_qubits=len(support),
            identity_coefficient=self.identity_coefficient,
            pairs=tuple((rank[i], rank[j]) for i, j in self.pairs),
            pair_coefficients=self.pair_coefficients,
            denominator=self.denominator,
        )
        return remapped.to_dense(), support


def _swap_indices(idx: np.ndarray, i: int, j: int) -> np.ndarray:
    bi = (idx >> i) & 1
    bj = (idx >> j) & 1
    return np.where(bi != bj, idx ^ ((1 << i) | (1 << j)), idx)


@dataclass(frozen=True)
class HammingWeightOperator:
    """Diagonal operator whose eigenvalue on a basis state is its 1-count."""

    num_qubits: int

    def diagonal(self) -> np.ndarray:
        idx = np.arange(1 << self.num_qubits, dtype=np.uint64)
        return _popcount(idx).astype(np.float64)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diagonal()).astype(np.complex128)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(range(self.num_qubits))


def _popcount(idx: np.ndarray) -> np.ndarray:
    idx = idx.astype(np.uint64)
    count = np.zeros_like(idx)
    while idx.any():
        count += idx & 1
        idx >>= np.uint64(1)
    return count


@dataclass(frozen=True)
class SpinLabel:
    """(2S, 2M) pair identifying a simultaneous total-spin / S_z eigenspace."""

    two_S: int
    two_M: int

    def __post_init__(self):
        if self.two_S < 0 or abs(self.two_M) > self.two_S:
            raise ValueError(f"invalid spin label (2S={self.two_S}, 2M={self.two_M})")
        if (self.two_S - self.two_M) % 2:
            raise ValueError("2S and 2M must have equal parity")

    def validate_for(self, n: int) -> None:
        if self.two_S > n or (n - self.two_S) % 2:
            raise ValueError(f"label 2S={self.two_S} invalid for {n} qubits")

    @property
    def S(self) -> float:
        return self.two_S / 2

    @property
    def M(self) -> float:
        return self.two_M / 2


@dataclass(frozen=True)
class ProjectorSet:
    """Spectral decomposition of a Hermitian operator: one projector per eigenvalue."""

    operator: object
    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]

    def projector_for(self, eigenvalue: float, atol: float = 1e-6) -> np.ndarray:
        for lam, proj in zip(self.eigenvalues, self.projectors):
            if abs(lam - eigenvalue) <= atol:
                return proj
        raise KeyError(f"no eigenvalue near {eigenvalue} in {self.eigenvalues}")


def build_total_spin_squared(n: int) -> TranspositionSum:
    """S^2 for n spin-1/2 qubits; eigenvalues S(S+1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pairs = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    return TranspositionSum(
        num_qubits=n,
        identity_coefficient=n * (4 - n) / 4,
        pairs=pairs,
    )


def build_prefix_spin_squared(j: int, n: int) -> TranspositionSum:
    """S^2 restricted to qubits 0..j-1, embedded in the n-qubit space."""
    if not 2 <= j <= n:
        raise ValueError(f"prefix length {j} must satisfy 2 <= j <= n ({n})")
    pairs = tuple((a, b) for a in range(j) for b in range(a + 1, j))
    return TranspositionSum(
        num_qubits=n,
        identity_coefficient=j * (4 - j) / 4,
        pairs=pairs,
    )


def build_coupling_sum(j: int, n: int) -> TranspositionSum:
    """Sum of the j-1 transpositions exchanging qubit j-1 with each earlier qubit.

    Equals S^2_[j] - S^2_[j-1] - (5-2j)/4 * I; integer spectrum in [-1, j-1].
    """
    if not 2 <= j <= n:
        raise ValueError(f"prefix length {j} must satisfy 2 <= j <= n ({n})")
    pairs = tuple((i, j - 1) for i in range(j - 1))
    return TranspositionSum(num_qubits=n, pairs=pairs)


def _step_sum(j: int, n: int, two_S_prev: int) -> TranspositionSum:
    # ((2S' + 3 - j)/2 * I + sum_{i<j-1} P_{i,j-1}) / (2S' + 1)
    pairs = tuple((i, j - 1) for i in range(j - 1))
    return TranspositionSum(
        num_qubits=n,
        identity_coefficient=(two_S_prev + 3 - j) / 2,
        pairs=pairs,
        denominator=two_S_prev + 1,
    )


def build_step_operator(j: int, n: int, two_S_prev: int) -> TranspositionSum:
    """Spin-step indicator when coupling qubit j-1 to a prefix of known spin.

    On the subspace where qubits 0..j-2 carry total spin S' = two_S_prev/2,
    the eigenvalue is 1 for the spin-increase branch (S' + 1/2) and 0 for the
    spin-decrease branch (S' - 1/2).
    """
    if not 2 <= j <= n:
        raise ValueError(f"prefix length {j} must satisfy 2 <= j <= n ({n})")
    if two_S_prev < 1:
        raise ValueError("two_S_prev must be >= 1; a zero-spin prefix forces an increase")
    if two_S_prev > j - 1 or (two_S_prev - (j - 1)) % 2:
        raise ValueError(f"two_S_prev={two_S_prev} is not a valid spin of {j - 1} qubits")
    return _step_sum(j, n, two_S_prev)


def build_hamming_weight(n: int) -> HammingWeightOperator:
    """Diagonal 1-count operator; decodes S_z as M = n/2 - weight."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return HammingWeightOperator(num_qubits=n)


@lru_cache(maxsize=None)
def eigen_oracle(op) -> ProjectorSet:
    """Full dense eigendecomposition with eigenvalues clustered at 1e-8.

    The brute-force reference every circuit in the package is checked
    against; capped at 2^12 dimensions.
    """
    if op.num_qubits > ORACLE_MAX_QUBITS:
        raise CapacityError(
            f"oracle limited to {ORACLE_MAX_QUBITS} qubits, got {op.num_qubits}"
        )
    if isinstance(op, HammingWeightOperator):
        diag = op.diagonal()
        eigenvalues = []
        projectors = []
        for k in range(op.num_qubits + 1):
            mask = (diag == k).astype(np.complex128)
            eigenvalues.append(float(k))
            projectors.append(np.diag(mask))
        return ProjectorSet(op, tuple(eigenvalues), tuple(projectors))
    dense = op.to_dense()
    w, v = np.linalg.eigh(dense)
    eigenvalues = []
    projectors = []
    i = 0
    while i < len(w):
        k = i
        while k + 1 < len(w) and w[k + 1] - w[i] < CLUSTER_TOL:
            k += 1
        block = v[:, i : k + 1]
        eigenvalues.append(float(np.mean(w[i : k + 1])))
        projectors.append(block @ block.conj().T)
        i = k + 1
    return ProjectorSet(op, tuple(eigenvalues), tuple(projectors))


@lru_cache(maxsize=None)
def spectrum(op) -> tuple[float, ...]:
    """Distinct eigenvalues of the operator (computed on its support)."""
    if isinstance(op, HammingWeightOperator):
        return tuple(float(k) for k in range(op.num_qubits + 1))
    dense, support = op.dense_on_support()
    if not support:
        return (float(np.real(dense[0, 0])),)
    w = np.linalg.eigvalsh(dense)
    values: list[float] = []
    for lam in w:
        if not values or lam - values[-1] >= CLUSTER_TOL:
            values.append(float(lam))
    return tuple(values)


@lru_cache(maxsize=None)
def _joint_projectors(n: int) -> dict[SpinLabel, np.ndarray]:
    """Projectors onto every simultaneous (S, M) eigenspace of n qubits."""
    s2 = eigen_oracle(build_total_spin_squared(n))
    weight_diag = build_hamming_weight(n).diagonal()
    out: dict[SpinLabel, np.ndarray] = {}
    for two_S in range(n % 2, n + 1, 2):
        s_val = (two_S / 2) * (two_S / 2 + 1)
        p_s = s2.projector_for(s_val)
        for two_M in range(-two_S, two_S + 1, 2):
            k = (n - two_M) // 2
            mask = (weight_diag == k).astype(np.float64)
            # S^2 and the 1-count commute, so masking rows and columns of
            # P_S yields the joint projector
            out[SpinLabel(two_S, two_M)] = p_s * np.outer(mask, mask)
    return out


def project_SM(state: StateVector, label: SpinLabel) -> tuple[float, StateVector | None]:
    """Weight of `state` on the (S, M) eigenspace and the normalized projection.

    Returns (weight, None) when the component is empty (weight <= 1e-12).
    """
    n = state.num_qubits
    label.validate_for(n)
    proj = _joint_projectors(n)[label]
    projected = proj @ state.amplitudes
    amplitude = float(np.real(np.vdot(state.amplitudes, projected)))
    if amplitude <= EMPTY_COMPONENT_TOL:
        return max(amplitude, 0.0), None
    return amplitude, StateVector(projected / np.sqrt(amplitude), copy=False)


def degeneracy(n: int, two_S: int) -> int:
    """Dimension of each (S, M) eigenspace: C(n, n/2-S) - C(n, n/2-S-1)."""
    if two_S < 0 or two_S > n or (n - two_S) % 2:
        raise ValueError(f"2S={two_S} is not a valid total spin for {n} qubits")
    k = (n - two_S) // 2
    lower = math.comb(n, k - 1) if k >= 1 else 0
    return math.comb(n, k) - lower


def min_ancillas(kind: str, count: int) -> int:
    """Smallest register size giving every eigenphase a distinct binary fraction.

    kind 'z': 1-count register for `count` qubits (integers 0..n).
    kind 's_even'/'s_odd': total-spin register for an even/odd number of
    qubits; the register reads S(S+1)/2 resp. (S-1/2)(S+3/2).
    kind 'hj': pairwise-coupling register for prefix length j; sized
    ceil(log2(j+1)) so the shifted eigenvalues 0..j stay distinct (the
    looser bound log2(j-1) aliases the extreme eigenvalues, e.g. j=4).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if kind == "z":
        needed = count + 1
    elif kind == "s_even":
        if count % 2:
            raise ValueError(f"kind 's_even' requires an even count, got {count}")
        k = count // 2
        needed = k * (k + 1) // 2 + 1
    elif kind == "s_odd":
        if count % 2 == 0:
            raise ValueError(f"kind 's_odd' requires an odd count, got {count}")
        k = (count - 1) // 2
        needed = k * (k + 2) + 1
    elif kind == "hj":
        if count < 2:
            raise ValueError("kind 'hj' requires count >= 2")
        needed = count + 1
    else:
        raise ValueError(f"unknown register kind {kind!r}")
    return max(1, math.ceil(math.log2(needed)))


def spin_register_size(j: int) -> int:
    """Register size for a total-spin readout of j qubits (parity-dispatched)."""
    return min_ancillas("s_even" if j % 2 == 0 else "s_odd", j)


def encode_total_spin(two_S: int, num_spins: int) -> int:
    """Register integer produced by an exact spin readout of `two_S`."""
    if num_spins % 2 == 0:
        s = two_S // 2
        return s * (s + 1) // 2
    jj = (two_S - 1) // 2
    return jj * (jj + 2)


def decode_total_spin(m: int, num_spins: int) -> int:
    """Invert the spin-register phase map; raises DecodeError off the curve.

    Even qubit counts store m = S(S+1)/2, odd counts m = (S-1/2)(S+3/2).
    """
    if m < 0:
        raise DecodeError(f"register integer {m} is negative")
    if num_spins % 2 == 0:
        s = int((math.isqrt(1 + 8 * m) - 1) // 2)
        if s * (s + 1) // 2 != m:
            raise DecodeError(f"{m} is not a triangular number")
        two_S = 2 * s
    else:
        jj = math.isqrt(m + 1) - 1
        if jj * (jj + 2) != m:
            raise DecodeError(f"{m} does not encode a half-integer spin")
        two_S = 2 * jj + 1
    if two_S > num_spins:
        raise DecodeError(f"decoded 2S={two_S} exceeds {num_spins} qubits")
    return two_S
