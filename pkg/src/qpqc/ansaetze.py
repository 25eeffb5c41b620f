"""Trainable variational circuit families.

Controlled rotations (QCNN/SEQNN pooling) are emitted decomposed into
plain rotations and CNOTs so every parameterized gate is a single-axis
rotation; a pooling angle therefore appears in two gates with
coefficients +1/2 and -1/2 on the same parameter slot.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sim import GateOp, GateSequence, ShapeError

ANSATZ_KINDS = ("no_entanglement", "full_entanglement", "ring", "nq",
                "qcnn", "simplified_two_design")

FC_DEPTHS = {"shallow": 1, "deep": 3}


@dataclass
class AnsatzSpec:
    kind: str
    layers: int = 1
    seed: int | None = None
    qcnn_conv_pool_layers: int = 2
    qcnn_fc_depth: str = "shallow"

    def __post_init__(self):
        if self.kind not in ANSATZ_KINDS:
            raise ValueError(f"unknown ansatz kind {self.kind!r}")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.kind == "no_entanglement" and self.seed is None:
            raise ValueError("no_entanglement requires a seed")
        if self.qcnn_fc_depth not in FC_DEPTHS:
            raise ValueError(f"unknown fc depth {self.qcnn_fc_depth!r}")


@dataclass
class ParamStore:
    values: np.ndarray
    layout: dict[str, tuple[int, int]]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    @property
    def size(self) -> int:
        return self.values.size


def init_params(count: int, seed: int,
                layout: dict[str, tuple[int, int]] | None = None) -> ParamStore:
    rng = np.random.default_rng(seed)
    values = rng.uniform(-np.pi, np.pi, size=count)
    return ParamStore(values, layout or {"all": (0, count)})


def _values(params) -> np.ndarray:
    if isinstance(params, ParamStore):
        return params.values
    return np.asarray(params, dtype=np.float64)


def param_gate(name: str, targets: tuple[int, ...], values: np.ndarray,
               slot: int, coeff: float = 1.0) -> GateOp:
    return GateOp(name, targets, angle=coeff * float(values[slot]),
                  param_slot=slot, param_coeff=coeff)


def append_rot(seq: GateSequence, q: int, values: np.ndarray,
               offset: int) -> int:
    """General rotation Rot(a, b, c) = RZ(a) RY(b) RZ(c); 3 slots."""
    seq.append(param_gate("rz", (q,), values, offset))
    seq.append(param_gate("ry", (q,), values, offset + 1))
    seq.append(param_gate("rz", (q,), values, offset + 2))
    return offset + 3


def append_controlled_rotation(seq: GateSequence, name: str, control: int,
                               target: int, values: np.ndarray,
                               slot: int) -> None:
    """CR_a(theta) as R_a(theta/2), CNOT, R_a(-theta/2), CNOT."""
    seq.append(param_gate(name, (target,), values, slot, coeff=0.5))
    seq.append(GateOp("cnot", (control, target)))
    seq.append(param_gate(name, (target,), values, slot, coeff=-0.5))
    seq.append(GateOp("cnot", (control, target)))


def append_pooling(seq: GateSequence, control: int, target: int,
                   values: np.ndarray, offset: int) -> int:
    """Controlled Rot from control onto target; 3 slots."""
    for i, name in enumerate(("rz", "ry", "rz")):
        append_controlled_rotation(seq, name, control, target, values,
                                   offset + i)
    return offset + 3


def append_conv_block(seq: GateSequence, q0: int, q1: int,
                      values: np.ndarray, offset: int) -> int:
    """Two-qubit convolution block: Rot x Rot, CNOT, Rot x Rot; 12 slots."""
    offset = append_rot(seq, q0, values, offset)
    offset = append_rot(seq, q1, values, offset)
    seq.append(GateOp("cnot", (q0, q1)))
    offset = append_rot(seq, q0, values, offset)
    offset = append_rot(seq, q1, values, offset)
    return offset


def append_arbitrary_two_qubit(seq: GateSequence, q0: int, q1: int,
                               values: np.ndarray, offset: int) -> int:
    """Universal two-qubit block: 3 CNOTs, 15 rotation slots."""
    offset = append_rot(seq, q0, values, offset)
    offset = append_rot(seq, q1, values, offset)
    seq.append(GateOp("cnot", (q1, q0)))
    seq.append(param_gate("rz", (q0,), values, offset))
    seq.append(param_gate("ry", (q1,), values, offset + 1))
    offset += 2
    seq.append(GateOp("cnot", (q0, q1)))
    seq.append(param_gate("ry", (q1,), values, offset))
    offset += 1
    seq.append(GateOp("cnot", (q1, q0)))
    offset = append_rot(seq, q0, values, offset)
    offset = append_rot(seq, q1, values, offset)
    return offset


def append_simplified_two_design(seq: GateSequence, qubits: list[int],
                                 values: np.ndarray, offset: int,
                                 layers: int) -> int:
    """Initial RY layer, then L blocks of CZ+RY pairs on alternating
    even- and odd-aligned neighbor pairs."""
    m = len(qubits)
    for q in qubits:
        seq.append(param_gate("ry", (q,), values, offset))
        offset += 1
    for _ in range(layers):
        for start in (0, 1):
            for i in range(start, m - 1, 2):
                a, b = qubits[i], qubits[i + 1]
                seq.append(GateOp("cz", (a, b)))
                seq.append(param_gate("ry", (a,), values, offset))
                seq.append(param_gate("ry", (b,), values, offset + 1))
                offset += 2
    return offset


def simplified_two_design_count(n_qubits: int, layers: int) -> int:
    return n_qubits + 2 * layers * (n_qubits - 1)


def _no_entanglement_mask(spec: AnsatzSpec, n_qubits: int) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    return rng.integers(0, 2, size=(spec.layers, n_qubits)) == 1


def qcnn_active_trace(n_qubits: int, n_conv_pool_layers: int) -> list[int]:
    trace = [n_qubits]
    active = n_qubits
    for _ in range(n_conv_pool_layers):
        if active < 2:
            raise ShapeError("too many conv-pool layers: fewer than 2 "
                             "active qubits remain")
        active = active - active // 2
        trace.append(active)
    return trace


def build_qcnn(n_qubits: int, n_conv_pool_layers: int, fc_depth: str,
               params) -> tuple[GateSequence, list[int]]:
    if n_qubits < 4:
        raise ShapeError("QCNN needs at least 4 qubits")
    values = _values(params)
    expected = qcnn_parameter_count(n_qubits, n_conv_pool_layers, fc_depth)
    if values.size != expected:
        raise ShapeError(f"expected {expected} parameters, got {values.size}")
    seq = GateSequence(n_qubits)
    active = list(range(n_qubits))
    trace = [len(active)]
    offset = 0
    for _ in range(n_conv_pool_layers):
        if len(active) < 2:
            raise ShapeError("too many conv-pool layers")
        for start in (0, 1):
            for i in range(start, len(active) - 1, 2):
                offset = append_conv_block(seq, active[i], active[i + 1],
                                           values, offset)
        survivors = []
        for i in range(0, len(active) - 1, 2):
            offset = append_pooling(seq, active[i + 1], active[i],
                                    values, offset)
            survivors.append(active[i])
        if len(active) % 2 == 1:
            survivors.append(active[-1])
        active = survivors
        trace.append(len(active))
    offset = append_simplified_two_design(seq, list(range(n_qubits)),
                                          values, offset,
                                          FC_DEPTHS[fc_depth])
    assert offset == expected
    return seq, trace


def qcnn_parameter_count(n_qubits: int, n_conv_pool_layers: int,
                         fc_depth: str) -> int:
    count = 0
    for m in qcnn_active_trace(n_qubits, n_conv_pool_layers)[:-1]:
        count += 12 * (m - 1)      # brick-wall conv blocks
        count += 3 * (m // 2)      # pooling controlled rotations
    count += simplified_two_design_count(n_qubits, FC_DEPTHS[fc_depth])
    return count


def build_ansatz(spec: AnsatzSpec, n_qubits: int, params) -> GateSequence:
    values = _values(params)
    expected = parameter_count(spec, n_qubits)
    if values.size != expected:
        raise ShapeError(f"expected {expected} parameters, got {values.size}")
    if spec.kind == "qcnn":
        seq, _ = build_qcnn(n_qubits, spec.qcnn_conv_pool_layers,
                            spec.qcnn_fc_depth, values)
        return seq

    seq = GateSequence(n_qubits)
    offset = 0
    if spec.kind == "no_entanglement":
        mask = _no_entanglement_mask(spec, n_qubits)
        for layer in range(spec.layers):
            for q in range(n_qubits):
                if mask[layer, q]:
                    seq.append(param_gate("rz", (q,), values, offset))
                    offset += 1
        return seq

    if spec.kind == "full_entanglement":
        for layer in range(spec.layers):
            for q in range(n_qubits):
                offset = append_rot(seq, q, values, offset)
            r = (layer % (n_qubits - 1)) + 1
            for q in range(n_qubits):
                seq.append(GateOp("cnot", (q, (q + r) % n_qubits)))
        return seq

    if spec.kind in ("ring", "nq"):
        for _ in range(spec.layers):
            for q in range(n_qubits):
                seq.append(param_gate("ry", (q,), values, offset))
                seq.append(param_gate("rz", (q,), values, offset + 1))
                offset += 2
            if spec.kind == "ring":
                for q in range(n_qubits):
                    seq.append(GateOp("cz", (q, (q + 1) % n_qubits)))
            else:
                for q in range(n_qubits - 1):
                    seq.append(GateOp("cnot", (q, q + 1)))
        return seq

    if spec.kind == "simplified_two_design":
        append_simplified_two_design(seq, list(range(n_qubits)), values, 0,
                                     spec.layers)
        return seq

    raise AssertionError(spec.kind)


def parameter_count(spec: AnsatzSpec, n_qubits: int) -> int:
    if spec.kind == "no_entanglement":
        return int(_no_entanglement_mask(spec, n_qubits).sum())
    if spec.kind == "full_entanglement":
        return 3 * spec.layers * n_qubits
    if spec.kind in ("ring", "nq"):
        return 2 * spec.layers * n_qubits
    if spec.kind == "simplified_two_design":
        return simplified_two_design_count(n_qubits, spec.layers)
    if spec.kind == "qcnn":
        return qcnn_parameter_count(n_qubits, spec.qcnn_conv_pool_layers,
                                    spec.qcnn_fc_depth)
    raise AssertionError(spec.kind)
