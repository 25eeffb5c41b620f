"""Gate matrices and rotation generators.

All matrices are complex128. Two-qubit matrices use the big-endian
subspace convention: row/column index = 2*bit(target0) + bit(target1).
"""
from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
SDG = S.conj().T

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    dtype=np.complex128,
)
CZ = np.diag([1, 1, 1, -1]).astype(np.complex128)
ZZ = np.kron(Z, Z)

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}

# generator G of each rotation family: U(angle) = exp(-i * angle/2 * G)
GENERATORS = {"rx": X, "ry": Y, "rz": Z, "rzz": ZZ}

# gates whose expectation is degree-1 trigonometric in the angle, so the
# two-term +-pi/2 shift rule is exact ("p" = RZ up to global phase)
SHIFT_GATES = frozenset(GENERATORS) | {"p"}

_FIXED = {"x": X, "y": Y, "z": Z, "h": H, "s": S, "sdg": SDG,
          "cnot": CNOT, "cz": CZ}


def rx(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz(angle: float) -> np.ndarray:
    p = np.exp(-0.5j * angle)
    return np.array([[p, 0], [0, p.conjugate()]], dtype=np.complex128)


def rzz(angle: float) -> np.ndarray:
    p = np.exp(-0.5j * angle)
    return np.diag([p, p.conjugate(), p.conjugate(), p]).astype(np.complex128)


def phase(angle: float) -> np.ndarray:
    """P(angle) = diag(1, e^{i angle}); RZ up to global phase, but it
    fixes |0> exactly so basis-state derivatives vanish identically."""
    return np.array([[1, 0], [0, np.exp(1j * angle)]], dtype=np.complex128)


_ROTATIONS = {"rx": rx, "ry": ry, "rz": rz, "rzz": rzz, "p": phase}


def gate_matrix(name: str, angle: float | None = None) -> np.ndarray:
    """Matrix for a named gate; rotations require an angle."""
    if name in _FIXED:
        return _FIXED[name]
    if name in _ROTATIONS:
        if angle is None:
            raise ValueError(f"gate {name!r} requires an angle")
        return _ROTATIONS[name](angle)
    raise ValueError(f"unknown gate {name!r}")


def gate_matrix_derivative(name: str, angle: float) -> np.ndarray:
    """d/d(angle) of a rotation matrix: (-i/2) G U(angle)."""
    if name == "p":
        return np.array([[0, 0], [0, 1j * np.exp(1j * angle)]],
                        dtype=np.complex128)
    return -0.5j * GENERATORS[name] @ gate_matrix(name, angle)


def is_unitary(matrix: np.ndarray, atol: float = 1e-10) -> bool:
    d = matrix.shape[0]
    return (matrix.shape == (d, d)
            and np.allclose(matrix.conj().T @ matrix, np.eye(d), atol=atol))
