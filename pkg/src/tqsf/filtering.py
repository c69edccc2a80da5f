"""Total-spin filtering circuits: QFT, phase estimation, and the filter methods.

Three filters are provided, named after the CLI's method tokens:

* method A — joint phase estimation of the total spin and of the 1-count
  (S_z register); collapses the input onto a single (S, M) eigenstate.
* method B — one phase-estimation register per prefix length j = 2..n,
  reading either the prefix total spins (variant "s2j") or the pairwise
  coupling sums (variant "hj"); resolves the degenerate (S, M) sectors
  into individual spin-coupling paths.
* method C — sequential single-ancilla tests with classical feedback:
  one spin-increase/decrease bit per added qubit; minimal quantum
  resources, one sampled path per shot.  Its deferred variant replaces
  the feedback with multi-controlled gates and recovers the exact path
  distribution from one coherent circuit.

Joint states place the n system qubits at indices 0..n-1 followed by the
ancilla registers in the layout's declared order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingError, CapacityError, DecodeError
from .evolution import (
    PhaseUnitary,
    apply_controlled_phase_unitary,
    controlled_step_gate,
    coupling_phase_unitary,
    prefix_spin_phase_unitary,
    step_phase_unitary,
    total_spin_phase_unitary,
    z_phase_unitary,
)
from .spin import (
    SpinLabel,
    decode_total_spin,
    min_ancillas,
    spectrum,
    spin_register_size,
)
from .statevector import (
    HADAMARD,
    MAX_QUBITS,
    PRUNE_TOL,
    Gate,
    StateVector,
    _marginal,
    apply_controlled,
    apply_gate,
    format_bits,
)

METHODS = ("a", "b-s2j", "b-hj", "c", "c-deferred")
DEFAULT_TROTTER_STEPS = 64


@dataclass(frozen=True)
class RegisterLayout:
    """Disjoint qubit index sets: the system plus named ancilla registers."""

    num_system: int
    registers: tuple[tuple[str, tuple[int, ...]], ...]

    @property
    def system(self) -> tuple[int, ...]:
        return tuple(range(self.num_system))

    @property
    def total_qubits(self) -> int:
        return self.num_system + sum(len(qs) for _, qs in self.registers)

    def register(self, name: str) -> tuple[int, ...]:
        for reg_name, qubits in self.registers:
            if reg_name == name:
                return qubits
        raise KeyError(f"no register named {name!r}")

    def register_sizes(self) -> dict[str, int]:
        return {name: len(qubits) for name, qubits in self.registers}

    def ancilla_qubits(self) -> tuple[int, ...]:
        return tuple(q for _, qs in self.registers for q in qs)


@dataclass(frozen=True)
class PathLabel:
    """Spin-coupling path: prefix spins 2*S_[j] for j = 1..n plus step bits.

    step_bits[i] is 1 when adding qubit i+1 increased the running total
    spin; the leftmost bit is the first coupling step.
    """

    two_S_sequence: tuple[int, ...]
    step_bits: tuple[int, ...]

    def __post_init__(self):
        seq = tuple(int(s) for s in self.two_S_sequence)
        bits = tuple(int(b) for b in self.step_bits)
        if not seq or seq[0] != 1 or len(bits) != len(seq) - 1:
            raise ValueError("path must start at 2S=1 with one bit per coupling step")
        for prev, cur, bit in zip(seq, seq[1:], bits):
            if cur < 0 or abs(cur - prev) != 1 or bit != int(cur > prev):
                raise ValueError(f"inconsistent path {seq} / bits {bits}")
        object.__setattr__(self, "two_S_sequence", seq)
        object.__setattr__(self, "step_bits", bits)

    @classmethod
    def from_bits(cls, bits) -> "PathLabel":
        seq = [1]
        for b in bits:
            seq.append(seq[-1] + (1 if b else -1))
        return cls(tuple(seq), tuple(int(b) for b in bits))

    @property
    def two_S_final(self) -> int:
        return self.two_S_sequence[-1]

    def bits_string(self) -> str:
        """Canonical rendering: leftmost = first step, 1 = increase."""
        return "".join(str(b) for b in self.step_bits)

    def reversed_bits_string(self) -> str:
        """Alternate rendering: 0 = increase, last step leftmost."""
        return "".join(str(1 - b) for b in reversed(self.step_bits))


@dataclass
class FilterOutcome:
    """One filtered branch: decoded label, Born weight, collapsed system state."""

    label: SpinLabel | PathLabel | None
    probability: float
    post_state: StateVector | None = field(repr=False, default=None)
    raw_bits: dict[str, str] = field(default_factory=dict)
    two_M: int | None = None


@dataclass
class ShotRecord:
    """Result of one sequential-filter shot."""

    path: PathLabel
    post_state: StateVector = field(repr=False)

    @property
    def two_S_final(self) -> int:
        return self.path.two_S_final


def layout_for(n: int, method: str, hj_paper_bound: bool = False) -> RegisterLayout:
    """Register layout for the given method, sized by min_ancillas.

    `hj_paper_bound` shrinks the coupling registers to the loose
    log2(j-1) bound; useful only to demonstrate the resulting aliasing.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if method != "a" and n < 2:
        raise ValueError(f"method {method!r} requires n >= 2")
    registers: list[tuple[str, tuple[int, ...]]] = []
    cursor = n

    def add(name: str, size: int):
        nonlocal cursor
        registers.append((name, tuple(range(cursor, cursor + size))))
        cursor += size

    if method == "a":
        add("z", min_ancillas("z", n))
        add("S", spin_register_size(n))
    elif method in ("b-s2j", "b-hj"):
        add("z", min_ancillas("z", n))
        for j in range(2, n + 1):
            if method == "b-s2j":
                size = spin_register_size(j)
            elif hj_paper_bound:
                size = max(1, int(np.floor(np.log2(j - 1))) + 1)
            else:
                size = min_ancillas("hj", j)
            add(f"path{j}", size)
    elif method == "c":
        add("test", 1)
    else:  # c-deferred
        for j in range(2, n + 1):
            add(f"step{j}", 1)
    layout = RegisterLayout(num_system=n, registers=tuple(registers))
    if layout.total_qubits > MAX_QUBITS:
        raise CapacityError(
            f"{layout.total_qubits} total qubits exceed the {MAX_QUBITS}-qubit exact-mode limit"
        )
    return layout


def _embed(state: StateVector, layout: RegisterLayout) -> StateVector:
    """System state tensored with |0...0> ancillas (system = low bits)."""
    if state.num_qubits != layout.num_system:
        raise ValueError("state size does not match layout system size")
    amps = np.zeros(1 << layout.total_qubits, dtype=np.complex128)
    amps[: state.amplitudes.size] = state.amplitudes
    return StateVector(amps, copy=False)


def _extract_system(joint: StateVector, layout: RegisterLayout, outcome_bits: dict[int, int]) -> StateVector:
    """System amplitudes once every ancilla qubit has a definite bit."""
    q = joint.num_qubits
    t = joint.amplitudes.reshape((2,) * q)
    sel = [slice(None)] * q
    for qb, bit in outcome_bits.items():
        sel[q - 1 - qb] = bit
    sub = np.ascontiguousarray(t[tuple(sel)]).reshape(-1)
    norm = np.linalg.norm(sub)
    return StateVector(sub / norm, copy=False)


def qft(state: StateVector, register, inverse: bool = False) -> StateVector:
    """Quantum Fourier transform on a register (register[0] = LSB); in place."""
    register = tuple(int(q) for q in register)
    dim = 1 << len(register)
    x = np.arange(dim)
    omega = np.exp((-2j if inverse else 2j) * np.pi / dim)
    matrix = omega ** np.outer(x, x) / np.sqrt(dim)
    return apply_gate(state, Gate(matrix, register))


def _check_register(spec: PhaseUnitary, register_size: int, exact_phases: bool) -> None:
    """Reject registers that alias the spectrum or break exact binary phases."""
    scale = (1 << register_size) * spec.alpha
    seen: dict[int, float] = {}
    for lam in spectrum(spec.operator):
        value = scale * lam
        m = int(round(value))
        if exact_phases and abs(value - m) > 1e-9:
            raise AliasingError(
                f"eigenvalue {lam} maps to non-integer register value {value}"
            )
        cell = m % (1 << register_size)
        if cell in seen and abs(seen[cell] - lam) > 1e-9:
            raise AliasingError(
                f"eigenvalues {seen[cell]} and {lam} collide on register integer {cell} "
                f"with {register_size} ancillas"
            )
        seen[cell] = lam
        if exact_phases and not 0 <= m < (1 << register_size):
            raise AliasingError(
                f"phase {spec.alpha * lam} of eigenvalue {lam} lies outside [0, 1)"
            )


def run_qpe(state: StateVector, register, spec: PhaseUnitary, check: bool = True) -> StateVector:
    """Standard phase-estimation block: H wall, controlled powers, inverse QFT.

    After the block the register amplitudes encode the eigenphase integers;
    with `check` enabled the operator spectrum is verified to fit the
    register without aliasing (exact binary fractions in exact mode).
    """
    register = tuple(int(q) for q in register)
    if check:
        _check_register(spec, len(register), exact_phases=spec.mode == "exact")
    for q in register:
        apply_gate(state, Gate(HADAMARD, (q,)))
    for k, control in enumerate(register):
        apply_controlled_phase_unitary(spec, state, control, power=1 << k)
    qft(state, register, inverse=True)
    return state


def _enumerate_register_outcomes(joint: StateVector, layout: RegisterLayout):
    """Yield (per-register integers, probability, collapsed system state)."""
    ancillas = layout.ancilla_qubits()
    probs = _marginal(joint, ancillas)
    widths = [(name, len(qubits)) for name, qubits in layout.registers]
    for outcome in np.flatnonzero(probs > PRUNE_TOL):
        outcome = int(outcome)
        bits = {qb: (outcome >> i) & 1 for i, qb in enumerate(ancillas)}
        system_state = _extract_system(joint, layout, bits)
        integers = {}
        shift = 0
        for name, width in widths:
            integers[name] = (outcome >> shift) & ((1 << width) - 1)
            shift += width
        yield integers, float(probs[outcome]), system_state


def _raw_bits(integers: dict[str, int], layout: RegisterLayout) -> dict[str, str]:
    return {
        name: format_bits(integers[name], len(qubits))
        for name, qubits in layout.registers
    }


def _spin_unitaries(n: int, layout: RegisterLayout, mode: str, trotter_steps: int):
    n_z = len(layout.register("z"))
    n_s = len(layout.register("S"))
    return (
        z_phase_unitary(n, n_z),
        total_spin_phase_unitary(n, n_s, mode=mode, trotter_steps=trotter_steps),
    )


def method_a_final_state(
    state: StateVector,
    n: int,
    mode: str = "exact",
    trotter_steps: int = DEFAULT_TROTTER_STEPS,
) -> tuple[StateVector, RegisterLayout]:
    """Run the joint (S^2, S_z) filter circuit; returns the pre-measurement state."""
    layout = layout_for(n, "a")
    uz, us = _spin_unitaries(n, layout, mode, trotter_steps)
    joint = _embed(state, layout)
    run_qpe(joint, layout.register("z"), uz)
    run_qpe(joint, layout.register("S"), us)
    return joint, layout


def method_a(
    state: StateVector,
    n: int,
    mode: str = "exact",
    trotter_steps: int = DEFAULT_TROTTER_STEPS,
) -> list[FilterOutcome]:
    """Filter on total spin and its z projection; one outcome per (S, M).

    Enumerates the exact joint register distribution.  In exact mode every
    register integer decodes; in trotter mode the small weight leaked onto
    undecodable integers is returned under a None label.
    """
    joint, layout = method_a_final_state(state, n, mode, trotter_steps)
    outcomes = []
    for integers, prob, system_state in _enumerate_register_outcomes(joint, layout):
        raw = _raw_bits(integers, layout)
        try:
            label = decode_outcome(raw, layout, "a")
        except DecodeError:
            if mode == "exact":
                raise
            label = None
        outcomes.append(
            FilterOutcome(label=label, probability=prob, post_state=system_state, raw_bits=raw)
        )
    return outcomes


def _path_unitary(j: int, n: int, layout: RegisterLayout, variant: str,
                  mode: str, trotter_steps: int) -> PhaseUnitary:
    size = len(layout.register(f"path{j}"))
    if variant == "s2j":
        return prefix_spin_phase_unitary(j, n, size, mode=mode, trotter_steps=trotter_steps)
    return coupling_phase_unitary(j, n, size, mode=mode, trotter_steps=trotter_steps)


def method_b_final_state(
    state: StateVector,
    n: int,
    variant: str,
    mode: str = "exact",
    trotter_steps: int = DEFAULT_TROTTER_STEPS,
    layout: RegisterLayout | None = None,
) -> tuple[StateVector, RegisterLayout]:
    if variant not in ("s2j", "hj"):
        raise ValueError(f"unknown variant {variant!r}; expected 's2j' or 'hj'")
    if layout is None:
        layout = layout_for(n, f"b-{variant}")
    joint = _embed(state, layout)
    run_qpe(joint, layout.register("z"), z_phase_unitary(n, len(layout.register("z"))))
    for j in range(2, n + 1):
        spec = _path_unitary(j, n, layout, variant, mode, trotter_steps)
        run_qpe(joint, layout.register(f"path{j}"), spec)
    return joint, layout


def method_b(
    state: StateVector,
    n: int,
    variant: str,
    mode: str = "exact",
    trotter_steps: int = DEFAULT_TROTTER_STEPS,
    layout: RegisterLayout | None = None,
) -> list[FilterOutcome]:
    """Path-resolved filter: one outcome per (coupling path, M).

    The post state of each outcome is a simultaneous eigenstate of every
    prefix total spin, i.e. a single state of the degenerate (S, M) sector.
    """
    joint, layout = method_b_final_state(state, n, variant, mode, trotter_steps, layout)
    outcomes = []
    for integers, prob, system_state in _enumerate_register_outcomes(joint, layout):
        raw = _raw_bits(integers, layout)
        try:
            label, two_M = _decode_b(raw, layout, variant)
        except DecodeError:
            if mode == "exact":
                raise
            label, two_M = None, None
        outcomes.append(
            FilterOutcome(
                label=label,
                probability=prob,
                post_state=system_state,
                raw_bits=raw,
                two_M=two_M,
            )
        )
    return outcomes


def _decode_b(raw_bits: dict[str, str], layout: RegisterLayout, variant: str):
    n = layout.num_system
    k = int(raw_bits["z"], 2)
    if k > n:
        raise DecodeError(f"1-count register read {k} > n = {n}")
    two_M = n - 2 * k
    seq = [1]
    bits = []
    for j in range(2, n + 1):
        m = int(raw_bits[f"path{j}"], 2)
        prev = seq[-1]
        if variant == "s2j":
            two_S = decode_total_spin(m, j)
            if abs(two_S - prev) != 1:
                raise DecodeError(
                    f"prefix spins 2S={prev} -> 2S={two_S} differ by more than one half step"
                )
        else:
            h = m - 1
            if 2 * h == prev + j - 1:
                two_S = prev + 1
            elif 2 * h == -prev + j - 3:
                two_S = prev - 1
            else:
                raise DecodeError(
                    f"coupling eigenvalue {h} impossible after prefix spin 2S={prev}"
                )
        seq.append(two_S)
        bits.append(int(two_S > prev))
    label = PathLabel(tuple(seq), tuple(bits))
    if abs(two_M) > label.two_S_final:
        raise DecodeError(f"|2M|={abs(two_M)} exceeds final 2S={label.two_S_final}")
    return label, two_M


def decode_outcome(raw_bits: dict[str, str], layout: RegisterLayout, method: str):
    """Decode measured register bitstrings into a spin or path label."""
    if method == "a":
        n = layout.num_system
        k = int(raw_bits["z"], 2)
        if k > n:
            raise DecodeError(f"1-count register read {k} > n = {n}")
        two_M = n - 2 * k
        two_S = decode_total_spin(int(raw_bits["S"], 2), n)
        if abs(two_M) > two_S:
            raise DecodeError(f"|2M|={abs(two_M)} exceeds 2S={two_S}")
        return SpinLabel(two_S, two_M)
    if method in ("b-s2j", "b-hj"):
        label, _ = _decode_b(raw_bits, layout, method[2:])
        return label
    if method in ("c", "c-deferred"):
        bits = [int(raw_bits[f"step{j}"]) for j in range(2, layout.num_system + 1)]
        return PathLabel.from_bits(bits)
    raise ValueError(f"unknown method {method!r}")


class SequentialPathSampler:
    """Sequential spin-path filter with classical feedback, shot by shot.

    Each shot walks j = 2..n: if the running spin is nonzero, a one-ancilla
    test of the step unitary is simulated and measured (collapsing the
    system); a zero running spin forces an increase with no quantum
    operation.  Branches are memoized per path prefix, so repeated shots
    reuse the collapsed states; the sampled statistics are identical to
    independent full simulations.
    """

    def __init__(self, state: StateVector, n: int):
        if state.num_qubits != n:
            raise ValueError("state size does not match n")
        if n < 2:
            raise ValueError("sequential filtering needs n >= 2")
        self.n = n
        self._root = (state.copy(), 1)  # (system state, two_S)
        self._children: dict[tuple[int, ...], tuple[float, dict]] = {}

    def _branch(self, prefix: tuple[int, ...], node):
        """Probability of the increase outcome and both collapsed children."""
        cached = self._children.get(prefix)
        if cached is not None:
            return cached
        system, two_S = node
        j = len(prefix) + 2
        spec = step_phase_unitary(j, self.n, two_S)
        joint_amps = np.zeros(system.amplitudes.size * 2, dtype=np.complex128)
        joint_amps[: system.amplitudes.size] = system.amplitudes
        joint = StateVector(joint_amps, copy=False)
        ancilla = self.n
        apply_gate(joint, Gate(HADAMARD, (ancilla,)))
        apply_controlled_phase_unitary(spec, joint, ancilla)
        apply_gate(joint, Gate(HADAMARD, (ancilla,)))
        probs = _marginal(joint, [ancilla])
        children = {}
        for bit in (0, 1):
            if probs[bit] > PRUNE_TOL:
                collapsed = _extract_system_half(joint, bit)
                children[bit] = (collapsed, two_S + (1 if bit else -1))
        result = (float(probs[1]), children)
        self._children[prefix] = result
        return result

    def sample(self, rng: np.random.Generator) -> ShotRecord:
        prefix: tuple[int, ...] = ()
        node = self._root
        bits = []
        for j in range(2, self.n + 1):
            system, two_S = node
            if two_S == 0:
                # zero prefix spin: the increase is forced, no circuit is run
                bits.append(1)
                node = (system, 1)
                prefix = prefix + (1,)
                continue
            p_increase, children = self._branch(prefix, node)
            bit = 1 if rng.random() < p_increase else 0
            if bit not in children:
                bit = 1 - bit  # the drawn branch carries no weight
            bits.append(bit)
            node = children[bit]
            prefix = prefix + (bit,)
        return ShotRecord(path=PathLabel.from_bits(bits), post_state=node[0])


def _extract_system_half(joint: StateVector, ancilla_bit: int) -> StateVector:
    half = joint.amplitudes.size // 2
    block = joint.amplitudes[half:] if ancilla_bit else joint.amplitudes[:half]
    block = np.array(block, copy=True)
    return StateVector(block / np.linalg.norm(block), copy=False)


def method_c(state: StateVector, n: int, rng) -> ShotRecord:
    """One shot of the sequential filter; `rng` is a seed or Generator."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return SequentialPathSampler(state, n).sample(rng)


def method_c_counts(state: StateVector, n: int, shots: int, seed: int) -> dict[PathLabel, int]:
    """Aggregate `shots` sequential-filter shots into per-path counts."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    sampler = SequentialPathSampler(state, n)
    rng = np.random.default_rng(seed)
    counts: dict[PathLabel, int] = {}
    for _ in range(shots):
        record = sampler.sample(rng)
        counts[record.path] = counts.get(record.path, 0) + 1
    return counts


def _reachable_histories(j: int):
    """Step-bit prefixes (steps 2..j-1) with their resulting prefix spin."""
    histories = [((), 1)]
    for _ in range(2, j):
        nxt = []
        for bits, two_S in histories:
            nxt.append((bits + (1,), two_S + 1))
            if two_S >= 1:
                nxt.append((bits + (0,), two_S - 1))
        histories = nxt
    return histories


def method_c_deferred_final_state(state: StateVector, n: int) -> tuple[StateVector, RegisterLayout]:
    """Pre-measurement state of the deferred sequential filter circuit."""
    if n < 2:
        raise ValueError("deferred sequential filtering needs n >= 2")
    layout = layout_for(n, "c-deferred")
    joint = _embed(state, layout)

    def step_ancilla(j: int) -> int:
        return layout.register(f"step{j}")[0]

    for j in range(2, n + 1):
        anc = step_ancilla(j)
        apply_gate(joint, Gate(HADAMARD, (anc,)))
        for bits, two_S_prev in _reachable_histories(j):
            gate = controlled_step_gate(j, n, two_S_prev)
            controls = [step_ancilla(2 + i) for i in range(len(bits))] + [anc]
            values = list(bits) + [1]
            apply_controlled(joint, controls, values, gate)
        apply_gate(joint, Gate(HADAMARD, (anc,)))
    return joint, layout


def method_c_deferred(state: StateVector, n: int) -> list[FilterOutcome]:
    """Coherent version of the sequential filter (deferred measurement).

    One ancilla per coupling step; every step's test unitary appears once
    per reachable spin history, selected by open/filled controls on the
    earlier ancillas.  All ancillas are measured at the end, so the exact
    path distribution comes from a single circuit.
    """
    joint, layout = method_c_deferred_final_state(state, n)
    outcomes = []
    for integers, prob, system_state in _enumerate_register_outcomes(joint, layout):
        raw = _raw_bits(integers, layout)
        label = decode_outcome(raw, layout, "c-deferred")
        outcomes.append(
            FilterOutcome(label=label, probability=prob, post_state=system_state, raw_bits=raw)
        )
    return outcomes
