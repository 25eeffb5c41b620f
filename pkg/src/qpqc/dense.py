"""Dense full-unitary expansion.

Independent of the kernel path in sim.py: matrices are built by explicit
index arithmetic, never by calling apply_gate. Used as a correctness
oracle and by the kernel-locality verifier.
"""
from __future__ import annotations

import numpy as np

from .sim import GateOp, GateSequence, _bit_of


def expand_unitary(gate: GateOp, n_qubits: int) -> np.ndarray:
    """Embed a 1- or 2-qubit gate into the full 2^n x 2^n matrix."""
    return expand_matrix(gate.matrix(), gate.targets, n_qubits)


def expand_matrix(u: np.ndarray, targets: tuple[int, ...],
                  n_qubits: int) -> np.ndarray:
    dim = 1 << n_qubits
    bits = [_bit_of(n_qubits, t) for t in targets]
    idx = np.arange(dim)
    # sub-index of each full index within the gate's subspace (big-endian)
    sub = np.zeros(dim, dtype=np.int64)
    rest = idx.copy()
    for b in bits:
        sub = (sub << 1) | ((idx >> b) & 1)
        rest = rest & ~(1 << b)
    full = np.zeros((dim, dim), dtype=np.complex128)
    same_rest = rest[:, None] == rest[None, :]
    full[same_rest] = u[sub[:, None], sub[None, :]][same_rest]
    return full


def sequence_unitary(seq: GateSequence) -> np.ndarray:
    """Product unitary of a whole sequence (small n only)."""
    dim = 1 << seq.n_qubits
    total = np.eye(dim, dtype=np.complex128)
    for g in seq.gates:
        total = expand_unitary(g, seq.n_qubits) @ total
    return total


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))
