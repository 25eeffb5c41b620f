"""Classical readout protocols: per-qubit Pauli bases, full-outcome
histograms, and Pauli-string class observables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gates
from .sim import (CapacityError, GateOp, ShapeError, StateVector,
                  apply_gate, apply_pauli_string, basis_probabilities,
                  _bit_of)

MEASUREMENT_KINDS = ("pauli_x", "pauli_y", "pauli_z", "histogram", "paulis")


@dataclass
class MeasurementSpec:
    kind: str
    measured_qubits: tuple[int, ...]
    class_count: int
    pauli_strings: tuple[str, ...] = ()
    pauli_seed: int | None = None

    def __post_init__(self):
        if self.kind not in MEASUREMENT_KINDS:
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        self.measured_qubits = tuple(self.measured_qubits)
        if self.class_count < 1:
            raise ValueError("class_count must be >= 1")
        m = len(self.measured_qubits)
        if self.kind == "histogram" and (1 << m) < self.class_count:
            raise ShapeError("histogram needs 2^measured >= class_count")
        if self.kind in ("pauli_x", "pauli_y", "pauli_z") \
                and m < self.class_count:
            raise ShapeError("per-qubit bases need measured >= class_count")
        if self.kind == "paulis":
            if len(self.pauli_strings) != self.class_count:
                raise ShapeError("paulis needs one string per class")
            for s in self.pauli_strings:
                if set(s) == {"I"}:
                    raise ValueError("class observable must not be identity")

    @property
    def output_size(self) -> int:
        if self.kind == "histogram":
            return 1 << len(self.measured_qubits)
        if self.kind == "paulis":
            return len(self.pauli_strings)
        return len(self.measured_qubits)


def draw_pauli_strings(k: int, n_qubits: int, seed: int) -> tuple[str, ...]:
    """K distinct non-identity Pauli strings, uniform over that set."""
    total = 4 ** n_qubits - 1
    if k > total:
        raise CapacityError(f"only {total} non-identity strings exist")
    rng = np.random.default_rng(seed)
    letters = "IXYZ"
    chosen: list[str] = []
    seen: set[str] = set()
    while len(chosen) < k:
        # rejection keeps the draw uniform over non-identity strings
        code = rng.integers(0, 4, size=n_qubits)
        s = "".join(letters[c] for c in code)
        if set(s) == {"I"} or s in seen:
            continue
        seen.add(s)
        chosen.append(s)
    return tuple(chosen)


def _basis_changed(state: StateVector, spec: MeasurementSpec) -> StateVector:
    """Rotate measured qubits so a Z readout realizes the X/Y basis."""
    out = state
    for q in spec.measured_qubits:
        if spec.kind == "pauli_y":
            out = apply_gate(out, GateOp("sdg", (q,)))
            out = apply_gate(out, GateOp("h", (q,)))
        elif spec.kind == "pauli_x":
            out = apply_gate(out, GateOp("h", (q,)))
    return out


def _z_expectations(state: StateVector, qubits: tuple[int, ...]) -> np.ndarray:
    probs = basis_probabilities(state)
    idx = np.arange(probs.size)
    out = np.empty(len(qubits))
    for i, q in enumerate(qubits):
        bit = (idx >> _bit_of(state.n_qubits, q)) & 1
        out[i] = float(probs[bit == 0].sum() - probs[bit == 1].sum())
    return out


def _marginal_probabilities(state: StateVector,
                            qubits: tuple[int, ...]) -> np.ndarray:
    probs = basis_probabilities(state)
    idx = np.arange(probs.size)
    outcome = np.zeros(probs.size, dtype=np.int64)
    for q in qubits:
        outcome = (outcome << 1) | ((idx >> _bit_of(state.n_qubits, q)) & 1)
    return np.bincount(outcome, weights=probs,
                       minlength=1 << len(qubits))


def measure(state: StateVector, spec: MeasurementSpec) -> np.ndarray:
    for q in spec.measured_qubits:
        if not 0 <= q < state.n_qubits:
            raise ShapeError(f"measured qubit {q} out of range")
    if spec.kind in ("pauli_x", "pauli_y", "pauli_z"):
        return _z_expectations(_basis_changed(state, spec),
                               spec.measured_qubits)
    if spec.kind == "histogram":
        return _marginal_probabilities(state, spec.measured_qubits)
    if spec.kind == "paulis":
        out = np.empty(len(spec.pauli_strings))
        for i, s in enumerate(spec.pauli_strings):
            if len(s) != state.n_qubits:
                raise ShapeError("pauli string length mismatch")
            out[i] = float(np.vdot(state.amps, apply_pauli_string(
                state.amps, state.n_qubits, s)).real)
        return out
    raise AssertionError(spec.kind)


def class_scores(meas_output: np.ndarray, spec: MeasurementSpec) -> np.ndarray:
    k = spec.class_count
    if meas_output.size < k:
        raise ShapeError(f"{k} classes but only {meas_output.size} outputs")
    return np.asarray(meas_output[:k], dtype=np.float64)


def predict_class(scores: np.ndarray) -> int:
    return int(np.argmax(scores))   # argmax takes the lowest index on ties


def observable_cotangent(state: StateVector, spec: MeasurementSpec,
                         d_outputs: np.ndarray) -> np.ndarray:
    """Return sum_m d_outputs[m] * O_m |psi> for the adjoint backward pass.

    Every measurement output is <psi|O_m|psi> with O_m Hermitian: Pauli
    operators for the basis/string kinds, diagonal projectors onto
    measured-qubit outcomes for the histogram kind.
    """
    n = state.n_qubits
    d_outputs = np.asarray(d_outputs, dtype=np.float64)
    if d_outputs.size != spec.output_size:
        raise ShapeError("cotangent length mismatch")
    if spec.kind in ("pauli_x", "pauli_y", "pauli_z"):
        letter = spec.kind[-1].upper()
        out = np.zeros_like(state.amps)
        for w, q in zip(d_outputs, spec.measured_qubits):
            if w == 0.0:
                continue
            pauli = "".join(letter if i == q else "I" for i in range(n))
            out += w * apply_pauli_string(state.amps, n, pauli)
        return out
    if spec.kind == "paulis":
        out = np.zeros_like(state.amps)
        for w, s in zip(d_outputs, spec.pauli_strings):
            if w == 0.0:
                continue
            out += w * apply_pauli_string(state.amps, n, s)
        return out
    if spec.kind == "histogram":
        idx = np.arange(state.amps.size)
        outcome = np.zeros(state.amps.size, dtype=np.int64)
        for q in spec.measured_qubits:
            outcome = (outcome << 1) | ((idx >> _bit_of(n, q)) & 1)
        return d_outputs[outcome] * state.amps
    raise AssertionError(spec.kind)
