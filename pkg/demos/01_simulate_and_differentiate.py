"""Build a small variational circuit, run it, and differentiate it.

Shows the three gradient paths agreeing: parameter shift, adjoint, and
plain finite differences.
"""
import numpy as np

from qpqc.ansaetze import AnsatzSpec
from qpqc.encodings import EncodingSpec
from qpqc.gradients import (CircuitSpec, circuit_forward, grad_adjoint,
                            grad_parameter_shift, total_param_count)
from qpqc.measurements import MeasurementSpec


def main():
    circuit = CircuitSpec(
        n_qubits=4,
        encoding=EncodingSpec("angle_y"),
        ansatz=AnsatzSpec("ring", layers=2),
        measurement=MeasurementSpec("pauli_z", (0, 1), 2),
    )
    rng = np.random.default_rng(7)
    params = rng.uniform(-np.pi, np.pi, total_param_count(circuit))
    features = rng.uniform(0, np.pi, 4)

    outputs = circuit_forward(circuit, params, features)
    print("outputs:", outputs)

    cotangent = np.array([1.0, -0.5])
    shift = grad_parameter_shift(circuit, params, features, cotangent)
    adj = grad_adjoint(circuit, params, features, cotangent)

    h = 1e-6
    fd = np.empty_like(params)
    for i in range(params.size):
        plus, minus = params.copy(), params.copy()
        plus[i] += h
        minus[i] -= h
        fd[i] = (np.dot(circuit_forward(circuit, plus, features), cotangent)
                 - np.dot(circuit_forward(circuit, minus, features),
                          cotangent)) / (2 * h)

    print("max |shift - adjoint|:", np.abs(shift.d_params
                                           - adj.d_params).max())
    print("max |shift - fd|     :", np.abs(shift.d_params - fd).max())
    print("input gradients      :", adj.d_inputs)


if __name__ == "__main__":
    main()
