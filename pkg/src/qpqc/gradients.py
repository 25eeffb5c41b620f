"""Circuit evaluation and differentiation.

Two gradient routes: the parameter-shift rule (one pair of shifted
circuit evaluations per rotation gate) and adjoint differentiation (one
forward pass plus one backward sweep over the gates). Both return
gradients contracted with an output cotangent, so multi-output
measurements cost a single backward pass during training.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import gates
from .ansaetze import AnsatzSpec, ParamStore, build_ansatz, parameter_count
from .encodings import (EncodingSpec, Ordering, amplitude_prepare, encode,
                        qaoa_param_count)
from .measurements import MeasurementSpec, measure, observable_cotangent
from .sim import (GateSequence, ShapeError, StateVector,
                  apply_gate_inplace, apply_matrix_inplace, apply_sequence,
                  new_zero_state)


class UnsupportedGateError(ValueError):
    pass


@dataclass
class CircuitSpec:
    n_qubits: int
    encoding: EncodingSpec
    ansatz: AnsatzSpec | None
    measurement: MeasurementSpec
    ordering: Ordering | None = None


@dataclass
class CircuitGradient:
    d_params: np.ndarray
    d_inputs: np.ndarray


def ansatz_param_count(circuit: CircuitSpec) -> int:
    if circuit.ansatz is None:
        return 0
    return parameter_count(circuit.ansatz, circuit.n_qubits)


def total_param_count(circuit: CircuitSpec) -> int:
    return ansatz_param_count(circuit) + qaoa_param_count(
        circuit.encoding.kind, circuit.encoding.layers, circuit.n_qubits)


def _values(params) -> np.ndarray:
    if isinstance(params, ParamStore):
        return params.values
    return np.asarray(params, dtype=np.float64)


def _prepare(circuit: CircuitSpec, params, features
             ) -> tuple[StateVector, GateSequence, int]:
    """Initial state, the full gate list (encoding then ansatz), and the
    number of encoding gates.

    Parameter slots: ansatz parameters first, then any trainable QAOA
    encoding angles.
    """
    values = _values(params)
    if values.size != total_param_count(circuit):
        raise ShapeError(f"expected {total_param_count(circuit)} parameters, "
                         f"got {values.size}")
    n = circuit.n_qubits
    n_ansatz = ansatz_param_count(circuit)
    if circuit.encoding.kind == "amplitude":
        state0 = amplitude_prepare(features, circuit.ordering, n)
        seq = GateSequence(n)
    else:
        state0 = new_zero_state(n)
        espec = replace(circuit.encoding, qaoa_params=values[n_ansatz:])
        seq = encode(espec, features, n, param_offset=n_ansatz)
    n_encoding = len(seq.gates)
    if circuit.ansatz is not None:
        seq.extend(build_ansatz(circuit.ansatz, n, values[:n_ansatz]))
    return state0, seq, n_encoding


def circuit_forward(circuit: CircuitSpec, params, features) -> np.ndarray:
    state0, seq, _ = _prepare(circuit, params, features)
    return measure(apply_sequence(state0, seq), circuit.measurement)


def _contracted_output(circuit: CircuitSpec, state0: StateVector,
                       seq: GateSequence, d_outputs: np.ndarray) -> float:
    out = measure(apply_sequence(state0, seq), circuit.measurement)
    return float(np.dot(out, d_outputs))


def _default_cotangent(circuit: CircuitSpec, d_outputs) -> np.ndarray:
    size = circuit.measurement.output_size
    if d_outputs is None:
        if size != 1:
            raise ShapeError("multi-output circuit requires an explicit "
                             "output cotangent")
        return np.ones(1)
    d = np.asarray(d_outputs, dtype=np.float64)
    if d.size != size:
        raise ShapeError("cotangent length mismatch")
    return d


def _amplitude_input_grad(circuit: CircuitSpec, state0: StateVector,
                          seq: GateSequence, features: np.ndarray,
                          d_outputs: np.ndarray) -> np.ndarray:
    """Analytic input gradient through normalization and ordering.

    The state is linear in the normalized feature vector, so the
    gradient is the back-propagated cotangent read through the inverse
    permutation and projected through the normalization map.
    """
    psi = apply_sequence(state0, seq)
    lam = observable_cotangent(psi, circuit.measurement, d_outputs)
    for gate in reversed(seq.gates):
        apply_matrix_inplace(lam, circuit.n_qubits, gate.targets,
                             gate.matrix().conj().T)
    return normalized_load_input_grad(lam, features, circuit.ordering)


def grad_parameter_shift(circuit: CircuitSpec, params, features,
                         d_outputs=None) -> CircuitGradient:
    d_outputs = _default_cotangent(circuit, d_outputs)
    state0, seq, _ = _prepare(circuit, params, features)
    x = np.asarray(features, dtype=np.float64)
    d_params = np.zeros(total_param_count(circuit))
    d_inputs = np.zeros(x.size)
    for i, gate in enumerate(seq.gates):
        if gate.param_slot is None and not gate.input_grads:
            continue
        if gate.name not in gates.SHIFT_GATES:
            raise UnsupportedGateError(
                f"parameter-shift needs rotation gates, got {gate.name!r}")
        original = seq.gates[i]
        seq.gates[i] = original.with_angle(original.angle + np.pi / 2)
        f_plus = _contracted_output(circuit, state0, seq, d_outputs)
        seq.gates[i] = original.with_angle(original.angle - np.pi / 2)
        f_minus = _contracted_output(circuit, state0, seq, d_outputs)
        seq.gates[i] = original
        g = (f_plus - f_minus) / 2.0
        if gate.param_slot is not None:
            d_params[gate.param_slot] += gate.param_coeff * g
        for j, w in gate.input_grads:
            d_inputs[j] += w * g
    if circuit.encoding.kind == "amplitude" and x.size:
        d_inputs = _amplitude_input_grad(circuit, state0, seq, x, d_outputs)
    return CircuitGradient(d_params, d_inputs)


def adjoint_sequence_grad(state0: StateVector, seq: GateSequence,
                          mspec: MeasurementSpec, d_outputs: np.ndarray,
                          n_params: int, n_inputs: int = 0,
                          anchor: int = 0
                          ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Adjoint sweep over an explicit gate sequence.

    Returns (d_params, d_inputs, lam) where lam is the output cotangent
    back-propagated to the initial state (used for amplitude-encoded
    input gradients).

    For gate indices below `anchor` (typically the encoding prefix),
    the bra-side state is taken from forward-computed prefix states
    instead of being rebuilt by un-applying later gates. This keeps
    structurally zero gradients (diagonal encodings on the zero state)
    exactly zero rather than rounding-noise small.
    """
    n = state0.n_qubits
    d_params = np.zeros(n_params)
    d_inputs = np.zeros(n_inputs)
    psi = state0.amps.copy()
    prefix = []
    for i, gate in enumerate(seq.gates):
        if i < anchor:
            prefix.append(psi.copy())
        apply_gate_inplace(psi, n, gate)
    lam = observable_cotangent(StateVector(n, psi), mspec, d_outputs)
    for i in range(len(seq.gates) - 1, -1, -1):
        gate = seq.gates[i]
        u_dag = gate.matrix().conj().T
        if i < anchor:
            psi = prefix[i]
        else:
            apply_matrix_inplace(psi, n, gate.targets, u_dag)
        if gate.param_slot is not None or gate.input_grads:
            if gate.name not in gates.SHIFT_GATES:
                raise UnsupportedGateError(
                    f"adjoint needs rotation gates, got {gate.name!r}")
            t = psi.copy()
            apply_matrix_inplace(
                t, n, gate.targets,
                gates.gate_matrix_derivative(gate.name, gate.angle))
            g = 2.0 * float(np.vdot(lam, t).real)
            if gate.param_slot is not None:
                d_params[gate.param_slot] += gate.param_coeff * g
            for j, w in gate.input_grads:
                d_inputs[j] += w * g
        apply_matrix_inplace(lam, n, gate.targets, u_dag)
    return d_params, d_inputs, lam


def normalized_load_input_grad(lam: np.ndarray, features: np.ndarray,
                               ordering: Ordering | None) -> np.ndarray:
    """Input gradient through amplitude loading: read the back-propagated
    cotangent through the permutation and project through normalization."""
    x = np.asarray(features, dtype=np.float64)
    norm = np.linalg.norm(x)
    if ordering is None:
        g = 2.0 * lam[:x.size].real
    else:
        g = 2.0 * lam[ordering.permutation[:x.size]].real
    unit = x / norm
    return (g - np.dot(g, unit) * unit) / norm


def grad_adjoint(circuit: CircuitSpec, params, features,
                 d_outputs=None) -> CircuitGradient:
    d_outputs = _default_cotangent(circuit, d_outputs)
    state0, seq, n_encoding = _prepare(circuit, params, features)
    x = np.asarray(features, dtype=np.float64)
    d_params, d_inputs, lam = adjoint_sequence_grad(
        state0, seq, circuit.measurement, d_outputs,
        total_param_count(circuit), x.size, anchor=n_encoding)

    if circuit.encoding.kind == "amplitude" and x.size:
        d_inputs = normalized_load_input_grad(lam, x, circuit.ordering)
    return CircuitGradient(d_params, d_inputs)


def cross_entropy(scores: np.ndarray, label: int,
                  probabilities: bool = False) -> tuple[float, np.ndarray]:
    """Softmax negative log-likelihood and its gradient.

    With probabilities=True the scores are treated as unnormalized class
    probabilities (histogram readout): they are renormalized and the NLL
    is taken directly, without a softmax.
    """
    s = np.asarray(scores, dtype=np.float64)
    k = s.size
    if k < 2:
        raise ShapeError("need at least 2 classes")
    if not 0 <= label < k:
        raise ShapeError(f"label {label} out of range for {k} classes")
    if probabilities:
        eps = 1e-12
        total = float(s.sum()) + k * eps
        p = (s + eps) / total
        loss = -float(np.log(p[label]))
        d = np.full(k, 1.0 / total)
        d[label] -= 1.0 / (s[label] + eps)
        return loss, d
    shifted = s - s.max()
    logz = float(np.log(np.exp(shifted).sum()))
    loss = logz - float(shifted[label])
    d = np.exp(shifted - logz)
    d[label] -= 1.0
    return loss, d


@dataclass
class AdamConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must be in [0, 1)")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState,
              cfg: AdamConfig) -> tuple[np.ndarray, AdamState]:
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    if p.shape != g.shape or p.shape != state.m.shape:
        raise ShapeError("parameter/gradient/state shape mismatch")
    t = state.t + 1
    m = cfg.beta1 * state.m + (1 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1 - cfg.beta2) * g * g
    m_hat = m / (1 - cfg.beta1 ** t)
    v_hat = v / (1 - cfg.beta2 ** t)
    new = p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    return new, AdamState(m, v, t)
