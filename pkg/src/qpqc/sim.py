"""Dense state-vector simulator.

Qubit ordering is big-endian: qubit 0 is the MOST significant bit of the
amplitude index. A gate on the two least-significant qubits therefore
mixes groups of four consecutive amplitudes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import gates

MAX_QUBITS = 26


class CapacityError(ValueError):
    pass


class ShapeError(ValueError):
    pass


@dataclass
class GateOp:
    """One gate application.

    angle = param_coeff * params[param_slot] when param_slot is set,
    otherwise a literal value (or None for fixed gates). input_grads
    lists (feature_index, d_angle/d_feature) pairs for encoding gates.
    Gates with an explicit matrix use name "custom" and cannot be
    parameterized.
    """
    name: str
    targets: tuple[int, ...]
    angle: float | None = None
    param_slot: int | None = None
    param_coeff: float = 1.0
    input_grads: tuple[tuple[int, float], ...] = ()
    custom: np.ndarray | None = None

    def __post_init__(self):
        self.targets = tuple(self.targets)
        if len(set(self.targets)) != len(self.targets):
            raise ShapeError(f"duplicate targets {self.targets}")
        if self.custom is not None:
            self.custom = np.asarray(self.custom, dtype=np.complex128)
            if self.param_slot is not None:
                raise ValueError("custom-matrix gates cannot be parameterized")
        m = self.matrix()
        if not gates.is_unitary(m):
            raise ValueError(f"gate {self.name!r} matrix is not unitary")
        if m.shape[0] != 2 ** len(self.targets):
            raise ShapeError("matrix size does not match target count")

    def matrix(self) -> np.ndarray:
        if self.custom is not None:
            return self.custom
        return gates.gate_matrix(self.name, self.angle)

    @property
    def parameterized(self) -> bool:
        return self.param_slot is not None

    def with_angle(self, angle: float) -> "GateOp":
        return replace(self, angle=angle)


@dataclass
class GateSequence:
    n_qubits: int
    gates: list[GateOp] = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            _check_targets(g, self.n_qubits)

    def append(self, gate: GateOp) -> None:
        _check_targets(gate, self.n_qubits)
        self.gates.append(gate)

    def extend(self, other: "GateSequence") -> None:
        if other.n_qubits != self.n_qubits:
            raise ShapeError("qubit counts differ")
        for g in other.gates:
            self.append(g)

    def __len__(self) -> int:
        return len(self.gates)

    def param_slots(self) -> list[int]:
        return sorted({g.param_slot for g in self.gates if g.parameterized})


def _check_targets(gate: GateOp, n_qubits: int) -> None:
    for t in gate.targets:
        if not 0 <= t < n_qubits:
            raise ShapeError(f"target {t} out of range for {n_qubits} qubits")


@dataclass
class StateVector:
    n_qubits: int
    amps: np.ndarray

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)


def new_zero_state(n_qubits: int) -> StateVector:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def state_from_amplitudes(amps: np.ndarray) -> StateVector:
    amps = np.asarray(amps, dtype=np.complex128)
    n = int(amps.size).bit_length() - 1
    if 1 << n != amps.size:
        raise ShapeError("amplitude count must be a power of two")
    return StateVector(n, amps)


def _bit_of(n_qubits: int, qubit: int) -> int:
    """Significance of a qubit's amplitude-index bit (big-endian)."""
    return n_qubits - 1 - qubit


def apply_gate_inplace(amps: np.ndarray, n_qubits: int, gate: GateOp) -> None:
    _check_targets(gate, n_qubits)
    matrix = gate.matrix()
    if len(gate.targets) == 1:
        _apply_1q(amps, n_qubits, gate.targets[0], matrix)
    else:
        _apply_2q(amps, n_qubits, gate.targets, matrix)


def _apply_1q(amps: np.ndarray, n_qubits: int, qubit: int, u: np.ndarray) -> None:
    b = _bit_of(n_qubits, qubit)
    view = amps.reshape(1 << (n_qubits - 1 - b), 2, 1 << b)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    view[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1


def _apply_2q(amps: np.ndarray, n_qubits: int, targets: tuple[int, int],
              u: np.ndarray) -> None:
    ba = _bit_of(n_qubits, targets[0])
    bb = _bit_of(n_qubits, targets[1])
    idx = np.arange(amps.size)
    base = idx[((idx >> ba) & 1 == 0) & ((idx >> bb) & 1 == 0)]
    rows = np.stack([base,
                     base | (1 << bb),
                     base | (1 << ba),
                     base | (1 << ba) | (1 << bb)])
    amps[rows] = u @ amps[rows]


def apply_matrix_inplace(amps: np.ndarray, n_qubits: int,
                         targets: tuple[int, ...], matrix: np.ndarray) -> None:
    """Apply an arbitrary (possibly non-unitary) matrix on target qubits."""
    if len(targets) == 1:
        _apply_1q(amps, n_qubits, targets[0], matrix)
    else:
        _apply_2q(amps, n_qubits, targets, matrix)


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    out = state.copy()
    apply_gate_inplace(out.amps, out.n_qubits, gate)
    return out


def apply_sequence(state: StateVector, seq: GateSequence) -> StateVector:
    if seq.n_qubits != state.n_qubits:
        raise ShapeError("qubit counts differ")
    out = state.copy()
    for g in seq.gates:
        apply_gate_inplace(out.amps, out.n_qubits, g)
    return out


def basis_probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amps) ** 2


def apply_pauli_string(amps: np.ndarray, n_qubits: int, letters: str) -> np.ndarray:
    """Return O|psi> for O a tensor product of Paulis (big-endian letters)."""
    if len(letters) != n_qubits:
        raise ShapeError(f"pauli length {len(letters)} != {n_qubits} qubits")
    out = amps.copy()
    for q, letter in enumerate(letters):
        if letter == "I":
            continue
        if letter not in "XYZ":
            raise ShapeError(f"invalid pauli letter {letter!r}")
        _apply_1q(out, n_qubits, q, gates.PAULIS[letter])
    return out


def expectation_pauli(state: StateVector, pauli: str) -> float:
    return float(np.vdot(state.amps, apply_pauli_string(
        state.amps, state.n_qubits, pauli)).real)
