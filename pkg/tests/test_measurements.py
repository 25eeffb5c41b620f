import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpqc.measurements import (MeasurementSpec, class_scores,
                               draw_pauli_strings, measure,
                               observable_cotangent, predict_class)
from qpqc.sim import (CapacityError, GateOp, ShapeError, StateVector,
                      apply_gate, new_zero_state)


def _plus_state():
    return apply_gate(new_zero_state(1), GateOp("h", (0,)))


def _random_state(n, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, amps / np.linalg.norm(amps))


def test_plus_state_expectations():
    plus = _plus_state()
    x = measure(plus, MeasurementSpec("pauli_x", (0,), 1))
    z = measure(plus, MeasurementSpec("pauli_z", (0,), 1))
    assert x == pytest.approx([1.0], abs=1e-12)
    assert z == pytest.approx([0.0], abs=1e-12)


def test_histogram_of_basis_state():
    amps = np.zeros(16, dtype=complex)
    amps[2] = 1.0      # |0010>
    probs = measure(StateVector(4, amps),
                    MeasurementSpec("histogram", (0, 1, 2, 3), 4))
    want = np.zeros(16)
    want[2] = 1.0
    assert np.allclose(probs, want)


def test_paulis_match_kron_oracle():
    state = _random_state(3, 42)
    spec = MeasurementSpec("paulis", (0, 1, 2), 3,
                           pauli_strings=("ZZI", "XIX", "IYY"))
    got = measure(state, spec)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    table = {"I": eye, "X": x, "Y": y, "Z": z}
    for i, s in enumerate(spec.pauli_strings):
        full = np.eye(1, dtype=complex)
        for letter in s:
            full = np.kron(full, table[letter])
        want = np.vdot(state.amps, full @ state.amps).real
        assert got[i] == pytest.approx(want, abs=1e-12)


def test_basis_change_identity():
    # <X> of psi equals <Z> of H psi; <Y> equals <Z> of H Sdg psi
    for seed in range(5):
        state = _random_state(2, seed)
        for q in (0, 1):
            x = measure(state, MeasurementSpec("pauli_x", (q,), 1))[0]
            y = measure(state, MeasurementSpec("pauli_y", (q,), 1))[0]
            h_psi = apply_gate(state, GateOp("h", (q,)))
            sdg_psi = apply_gate(apply_gate(state, GateOp("sdg", (q,))),
                                 GateOp("h", (q,)))
            zspec = MeasurementSpec("pauli_z", (q,), 1)
            assert abs(x - measure(h_psi, zspec)[0]) < 1e-12
            assert abs(y - measure(sdg_psi, zspec)[0]) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_histogram_is_a_distribution(seed, n):
    state = _random_state(n, seed)
    probs = measure(state, MeasurementSpec("histogram", tuple(range(n)), 2))
    assert probs.min() >= 0.0
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_global_phase_invariance():
    state = _random_state(3, 9)
    rotated = StateVector(3, state.amps * np.exp(0.71j))
    for spec in (MeasurementSpec("pauli_y", (0, 1, 2), 3),
                 MeasurementSpec("histogram", (0, 1), 3),
                 MeasurementSpec("paulis", (0, 1, 2), 2,
                                 pauli_strings=("XYZ", "ZIZ"))):
        a = class_scores(measure(state, spec), spec)
        b = class_scores(measure(rotated, spec), spec)
        assert np.allclose(a, b, atol=1e-12)


def test_class_scores_and_prediction_examples():
    hist = MeasurementSpec("histogram", (0, 1), 4)
    scores = class_scores(np.array([0.5, 0.3, 0.2, 0.0]), hist)
    assert predict_class(scores) == 0

    amps = np.zeros(4, dtype=complex)
    amps[1] = 1.0      # |01>
    z = MeasurementSpec("pauli_z", (0, 1), 2)
    scores = class_scores(measure(StateVector(2, amps), z), z)
    assert np.allclose(scores, [1.0, -1.0])
    assert predict_class(scores) == 0

    assert predict_class(np.array([0.4, 0.4])) == 0   # tie -> lowest index


def test_class_scores_capacity():
    spec = MeasurementSpec("pauli_z", (0, 1, 2), 3)
    with pytest.raises(ShapeError):
        class_scores(np.array([1.0, 0.0]), spec)


def test_draw_pauli_strings_determinism():
    a = draw_pauli_strings(10, 10, seed=5)
    b = draw_pauli_strings(10, 10, seed=5)
    assert a == b
    assert len(set(a)) == 10


def test_draw_pauli_strings_single_qubit_exhaustive():
    assert sorted(draw_pauli_strings(3, 1, seed=0)) == ["X", "Y", "Z"]


def test_draw_pauli_strings_capacity():
    with pytest.raises(CapacityError):
        draw_pauli_strings(16, 2, seed=0)


def test_spec_validation():
    with pytest.raises(ShapeError):
        MeasurementSpec("histogram", (0,), 3)       # 2 outcomes < 3 classes
    with pytest.raises(ShapeError):
        MeasurementSpec("pauli_z", (0, 1), 3)       # 2 qubits < 3 classes
    with pytest.raises(ShapeError):
        MeasurementSpec("paulis", (0,), 2, pauli_strings=("Z",))
    with pytest.raises(ValueError):
        MeasurementSpec("paulis", (0,), 1, pauli_strings=("I",))
    with pytest.raises(ValueError):
        MeasurementSpec("parity", (0,), 1)


def test_measure_qubit_out_of_range():
    with pytest.raises(ShapeError):
        measure(new_zero_state(2), MeasurementSpec("pauli_z", (2,), 1))


def test_observable_cotangent_consistency():
    # <psi | sum_m w_m O_m | psi> must equal w . measure(psi)
    state = _random_state(3, 17)
    rng = np.random.default_rng(2)
    for spec in (MeasurementSpec("pauli_x", (0, 1, 2), 3),
                 MeasurementSpec("histogram", (1, 2), 4),
                 MeasurementSpec("paulis", (0, 1, 2), 2,
                                 pauli_strings=("ZZZ", "XIY"))):
        w = rng.normal(size=spec.output_size)
        cot = observable_cotangent(state, spec, w)
        got = np.vdot(state.amps, cot).real
        assert got == pytest.approx(float(np.dot(w, measure(state, spec))),
                                    abs=1e-12)
