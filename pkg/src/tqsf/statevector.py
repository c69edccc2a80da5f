"""Dense statevector simulation kernel.

Conventions used throughout the package:

* qubit 0 is the least-significant bit of the basis-state index;
* bitstrings exchanged with the outside world (inputs and printed output)
  are written most-significant qubit first;
* a register is an ordered list of qubit indices, ``register[k]`` holding
  bit ``k`` (the least-significant bit) of the register integer.

Gates are applied by reshaping the amplitude array into a rank-q tensor and
contracting the gate matrix over the target axes; the full 2^q x 2^q
embedded matrix is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError

MAX_QUBITS = 20
NORM_ATOL = 1e-9
UNITARY_ATOL = 1e-12
PRUNE_TOL = 1e-12

_SQRT2_INV = 1.0 / np.sqrt(2.0)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT2_INV
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
    dtype=np.complex128,
)


class StateVector:
    """Normalized complex amplitudes over 2^num_qubits basis states."""

    __slots__ = ("amplitudes", "num_qubits")

    def __init__(self, amplitudes, *, copy: bool = True):
        amps = np.array(amplitudes, dtype=np.complex128, copy=copy)
        if amps.ndim != 1 or amps.size == 0 or amps.size & (amps.size - 1):
            raise ValueError("amplitude array length must be a power of two")
        q = int(amps.size).bit_length() - 1
        if q > MAX_QUBITS:
            raise CapacityError(f"{q} qubits exceeds the {MAX_QUBITS}-qubit exact-mode limit")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond {NORM_ATOL}")
        self.amplitudes = amps
        self.num_qubits = q

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes, copy=True)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


@dataclass(frozen=True)
class Gate:
    """Unitary matrix acting on an ordered list of target qubits.

    ``targets[i]`` carries bit i (the least-significant bit) of the gate
    matrix index, mirroring the global qubit-0-is-LSB convention.
    """

    matrix: np.ndarray
    targets: tuple[int, ...]

    def __init__(self, matrix, targets):
        matrix = np.asarray(matrix, dtype=np.complex128)
        targets = tuple(int(t) for t in targets)
        k = len(targets)
        if matrix.shape != (1 << k, 1 << k):
            raise ValueError(f"matrix shape {matrix.shape} does not match {k} targets")
        if len(set(targets)) != k:
            raise ValueError("gate targets must be distinct")
        dev = np.max(np.abs(matrix.conj().T @ matrix - np.eye(1 << k)))
        if dev > UNITARY_ATOL:
            raise ValueError(f"matrix is not unitary (deviation {dev:.3e})")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "targets", targets)

    def dagger(self) -> "Gate":
        return Gate(self.matrix.conj().T, self.targets)


@dataclass
class MeasurementResult:
    """Outcome of a projective measurement on a subset of qubits."""

    bits: dict[int, int]
    probability: float
    post_state: StateVector = field(repr=False)


def format_bits(value: int, width: int) -> str:
    """Render an integer as a width-bit string, most-significant bit first."""
    return format(value, f"0{width}b")


def new_basis_state(num_qubits: int, bitstring: str) -> StateVector:
    """Computational basis state from a bitstring (most-significant qubit first)."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    if len(bitstring) != num_qubits or any(c not in "01" for c in bitstring):
        raise ValueError(f"bitstring {bitstring!r} does not describe {num_qubits} qubits")
    index = int(bitstring, 2)
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps, copy=False)


def _check_qubits(state: StateVector, qubits) -> None:
    for q in qubits:
        if not 0 <= q < state.num_qubits:
            raise ValueError(f"qubit index {q} out of range for {state.num_qubits} qubits")


def _apply_matrix(amps, num_qubits, matrix, targets, controls=(), control_values=()):
    """Contract `matrix` over the target axes, optionally on a control slice.

    Operates in place on `amps` (flat view of the state).
    """
    q = num_qubits
    k = len(targets)
    t = amps.reshape((2,) * q)
    sel = [slice(None)] * q
    for cq, cv in zip(controls, control_values):
        sel[q - 1 - cq] = int(cv)
    sel = tuple(sel)
    sub = t[sel]
    control_axes = {q - 1 - cq for cq in controls}
    remaining = [ax for ax in range(q) if ax not in control_axes]
    # axis of target bit i must land at front position k-1-i so that the
    # flattened leading index reads the targets little-endian
    src = [remaining.index(q - 1 - targets[k - 1 - i]) for i in range(k)]
    moved = np.moveaxis(sub, src, range(k))
    shape = moved.shape
    flat = moved.reshape(1 << k, -1)
    out = matrix @ flat
    t[sel] = np.moveaxis(out.reshape(shape), range(k), src)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply `gate` to `state` in place; returns the same object."""
    _check_qubits(state, gate.targets)
    _apply_matrix(state.amplitudes, state.num_qubits, gate.matrix, gate.targets)
    return state


def apply_controlled(
    state: StateVector,
    control_qubits,
    control_values,
    gate: Gate,
) -> StateVector:
    """Apply `gate` on the subspace where every control qubit matches its value.

    Control values 0 select open controls, 1 filled controls.
    """
    controls = tuple(int(c) for c in control_qubits)
    values = tuple(int(v) for v in control_values)
    if len(controls) != len(values):
        raise ValueError("control_qubits and control_values must have equal length")
    if any(v not in (0, 1) for v in values):
        raise ValueError("control values must be 0 or 1")
    if len(set(controls)) != len(controls):
        raise ValueError("control qubits must be distinct")
    if set(controls) & set(gate.targets):
        raise ValueError("control qubits must be disjoint from gate targets")
    _check_qubits(state, controls)
    _check_qubits(state, gate.targets)
    _apply_matrix(
        state.amplitudes, state.num_qubits, gate.matrix, gate.targets, controls, values
    )
    return state


def _marginal(state: StateVector, qubits) -> np.ndarray:
    """Probability vector over the listed qubits, qubits[0] = LSB of the index."""
    q = state.num_qubits
    p = state.probabilities().reshape((2,) * q)
    keep = [q - 1 - qb for qb in qubits]
    other = tuple(ax for ax in range(q) if ax not in set(keep))
    if other:
        p = p.sum(axis=other)
    remaining = sorted(keep)
    order = [remaining.index(q - 1 - qb) for qb in reversed(qubits)]
    return np.transpose(p, order).reshape(-1)


def _collapse(state: StateVector, qubits, outcome: int, probability: float) -> StateVector:
    """Project onto `qubits` reading `outcome` and renormalize, in place."""
    q = state.num_qubits
    t = state.amplitudes.reshape((2,) * q)
    sel = [slice(None)] * q
    for i, qb in enumerate(qubits):
        sel[q - 1 - qb] = (outcome >> i) & 1
    kept = np.array(t[tuple(sel)], copy=True)
    t[...] = 0.0
    t[tuple(sel)] = kept / np.sqrt(probability)
    return state


def measure(state: StateVector, qubits, rng: np.random.Generator) -> MeasurementResult:
    """Born-rule measurement of `qubits`; collapses `state` in place."""
    qubits = [int(q) for q in qubits]
    if len(set(qubits)) != len(qubits):
        raise ValueError("measured qubits must be distinct")
    _check_qubits(state, qubits)
    p = _marginal(state, qubits)
    total = p.sum()
    if total < 1e-12:
        raise RuntimeError("state norm degenerated; cannot measure")
    candidates = np.flatnonzero(p > 0.0)
    weights = p[candidates] / p[candidates].sum()
    outcome = int(candidates[rng.choice(len(candidates), p=weights)])
    prob = float(p[outcome])
    _collapse(state, qubits, outcome, prob)
    bits = {qb: (outcome >> i) & 1 for i, qb in enumerate(qubits)}
    return MeasurementResult(bits=bits, probability=prob, post_state=state)


def outcome_distribution(state: StateVector, qubits) -> dict[str, float]:
    """Exact Born distribution over the listed qubits.

    Keys are bitstrings, most-significant qubit (qubits[-1]) first; entries
    with probability <= 1e-12 are pruned.
    """
    qubits = [int(q) for q in qubits]
    if len(set(qubits)) != len(qubits):
        raise ValueError("qubits must be distinct")
    _check_qubits(state, qubits)
    p = _marginal(state, qubits)
    width = len(qubits)
    return {
        format_bits(i, width): float(p[i]) for i in np.flatnonzero(p > PRUNE_TOL)
    }


def sample_counts(state: StateVector, qubits, shots: int, seed: int) -> dict[str, int]:
    """Sample `shots` independent measurements of `qubits` (state untouched)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    qubits = [int(q) for q in qubits]
    _check_qubits(state, qubits)
    p = _marginal(state, qubits)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, p)
    width = len(qubits)
    return {
        format_bits(i, width): int(counts[i]) for i in np.flatnonzero(counts)
    }
