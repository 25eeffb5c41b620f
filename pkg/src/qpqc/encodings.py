"""Feature-vector to quantum-state encodings.

Six families: per-qubit angle rotations (X/Y/Z), amplitude loading with
pixel-ordering permutations, IQP, QAOA-inspired (X/Y/Z local field),
ring, and waterfall. Entangler counts per layer: IQP and waterfall
N(N-1)/2, ring and QAOA N.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import expand_matrix, random_unitary
from .sim import (CapacityError, GateOp, GateSequence, ShapeError,
                  StateVector)

ANGLE_KINDS = ("angle_x", "angle_y", "angle_z")
QAOA_KINDS = ("qaoa_x", "qaoa_y", "qaoa_z")
ENCODING_KINDS = ANGLE_KINDS + QAOA_KINDS + ("amplitude", "iqp", "ring",
                                             "waterfall")
ORDERING_KINDS = ("flatten", "squared", "vhlines", "random")


class DegenerateInputError(ValueError):
    pass


@dataclass
class EncodingSpec:
    kind: str
    layers: int = 1
    ordering: str = "flatten"
    ordering_seed: int | None = None
    qaoa_params: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ENCODING_KINDS:
            raise ValueError(f"unknown encoding kind {self.kind!r}")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.ordering not in ORDERING_KINDS:
            raise ValueError(f"unknown ordering {self.ordering!r}")
        if self.ordering == "random" and self.ordering_seed is None:
            raise ValueError("random ordering requires ordering_seed")


@dataclass
class Ordering:
    """Bijection from flattened-pixel index to amplitude index."""
    permutation: np.ndarray

    def __post_init__(self):
        self.permutation = np.asarray(self.permutation, dtype=np.int64)
        n = self.permutation.size
        if n & (n - 1) or not np.array_equal(
                np.sort(self.permutation), np.arange(n)):
            raise ValueError("permutation must be a bijection on a "
                             "power-of-two range")

    @property
    def size(self) -> int:
        return self.permutation.size

    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.permutation)
        inv[self.permutation] = np.arange(self.permutation.size)
        return inv


def qaoa_param_count(kind: str, layers: int, n_qubits: int) -> int:
    if kind not in QAOA_KINDS:
        return 0
    return layers * 2 * n_qubits


def init_qaoa_params(kind: str, layers: int, n_qubits: int,
                     seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-np.pi, np.pi,
                       size=qaoa_param_count(kind, layers, n_qubits))


def encode(spec: EncodingSpec, features: np.ndarray, n_qubits: int,
           param_offset: int | None = None) -> GateSequence:
    """Build the encoding gate sequence for one feature vector.

    When param_offset is given, QAOA trainable angles are tagged with
    parameter slots starting there; otherwise qaoa_params values are
    baked in as literals.
    """
    if spec.kind == "amplitude":
        raise ValueError("amplitude encoding is handled by amplitude_prepare")
    x = np.asarray(features, dtype=np.float64)
    if x.size != n_qubits:
        raise ShapeError(f"expected {n_qubits} features, got {x.size}")
    seq = GateSequence(n_qubits)

    if spec.kind in ANGLE_KINDS:
        # angle_z uses the phase gate (RZ up to global phase): identical
        # physics, but it keeps |0...0> bit-exact so the well-known AngleZ
        # degeneracy yields input gradients that are exactly zero
        axis = "p" if spec.kind == "angle_z" else "r" + spec.kind[-1]
        for q in range(n_qubits):
            seq.append(GateOp(axis, (q,), angle=x[q],
                              input_grads=((q, 1.0),)))
        return seq

    if spec.kind == "iqp":
        for _ in range(spec.layers):
            for q in range(n_qubits):
                seq.append(GateOp("h", (q,)))
            for q in range(n_qubits):
                seq.append(GateOp("rz", (q,), angle=x[q],
                                  input_grads=((q, 1.0),)))
            for j in range(n_qubits):
                for k in range(j + 1, n_qubits):
                    seq.append(GateOp("rzz", (j, k), angle=x[j] * x[k],
                                      input_grads=((j, x[k]), (k, x[j]))))
        return seq

    if spec.kind in QAOA_KINDS:
        axis = "r" + spec.kind[-1]
        theta = spec.qaoa_params
        if theta is None:
            theta = np.zeros(qaoa_param_count(spec.kind, spec.layers,
                                              n_qubits))
        theta = np.asarray(theta, dtype=np.float64)
        if theta.size != qaoa_param_count(spec.kind, spec.layers, n_qubits):
            raise ShapeError("qaoa_params has wrong length")
        slot = 0
        for _ in range(spec.layers):
            for q in range(n_qubits):
                seq.append(GateOp("rx", (q,), angle=x[q],
                                  input_grads=((q, 1.0),)))
            for q in range(n_qubits):
                seq.append(_maybe_param(
                    "rzz", (q, (q + 1) % n_qubits), theta, slot,
                    param_offset))
                slot += 1
            for q in range(n_qubits):
                seq.append(_maybe_param(axis, (q,), theta, slot,
                                        param_offset))
                slot += 1
        return seq

    if spec.kind == "ring":
        for _ in range(spec.layers):
            for q in range(n_qubits):
                seq.append(GateOp("ry", (q,), angle=x[q],
                                  input_grads=((q, 1.0),)))
            for q in range(n_qubits):
                seq.append(GateOp("cnot", (q, (q + 1) % n_qubits)))
        return seq

    if spec.kind == "waterfall":
        for _ in range(spec.layers):
            for q in range(n_qubits):
                seq.append(GateOp("ry", (q,), angle=x[q],
                                  input_grads=((q, 1.0),)))
            for j in range(n_qubits):
                for k in range(j + 1, n_qubits):
                    seq.append(GateOp("cnot", (j, k)))
        return seq

    raise AssertionError(spec.kind)


def _maybe_param(name: str, targets: tuple[int, ...], theta: np.ndarray,
                 slot: int, offset: int | None) -> GateOp:
    if offset is None:
        return GateOp(name, targets, angle=float(theta[slot]))
    return GateOp(name, targets, angle=float(theta[slot]),
                  param_slot=offset + slot)


def two_qubit_gate_count(seq: GateSequence) -> int:
    return sum(1 for g in seq.gates if len(g.targets) == 2)


def amplitude_prepare(features: np.ndarray, ordering: Ordering | None,
                      n_qubits: int) -> StateVector:
    x = np.asarray(features, dtype=np.float64)
    dim = 1 << n_qubits
    if x.size > dim:
        raise ShapeError(f"{x.size} features exceed {dim} amplitudes")
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise DegenerateInputError("all-zero feature vector")
    amps = np.zeros(dim, dtype=np.complex128)
    if ordering is None:
        amps[:x.size] = x
    else:
        if ordering.size > dim:
            raise ShapeError("ordering larger than state")
        amps[ordering.permutation[:x.size]] = x
    amps /= norm
    return StateVector(n_qubits, amps)


def read_back_features(state: StateVector, ordering: Ordering | None,
                       n_features: int) -> np.ndarray:
    """Inverse of amplitude_prepare up to overall scale."""
    if ordering is None:
        return state.amps[:n_features].real.copy()
    return state.amps[ordering.permutation[:n_features]].real.copy()


def _next_pow2(v: int) -> int:
    return 1 << max(0, (v - 1).bit_length())


def _morton_index(r: int, c: int, bits_r: int, bits_c: int) -> int:
    """Interleave row/column bits, least-significant pair innermost."""
    out = 0
    pos = 0
    for i in range(max(bits_r, bits_c)):
        if i < bits_c:
            out |= ((c >> i) & 1) << pos
            pos += 1
        if i < bits_r:
            out |= ((r >> i) & 1) << pos
            pos += 1
    return out


def _spatial_permutation(kind: str, h: int, w: int,
                         rng: np.random.Generator | None) -> np.ndarray:
    """Map row-major pixel index -> slot within one channel plane."""
    size = h * w
    if kind == "flatten":
        return np.arange(size)
    if kind == "random":
        return rng.permutation(size)
    if h & (h - 1) or w & (w - 1):
        raise ShapeError(f"{kind} ordering requires power-of-two H and W")
    if kind == "squared":
        bits_r, bits_c = h.bit_length() - 1, w.bit_length() - 1
        perm = np.empty(size, dtype=np.int64)
        for r in range(h):
            for c in range(w):
                perm[r * w + c] = _morton_index(r, c, bits_r, bits_c)
        return perm
    if kind == "vhlines":
        if h < 8 or w < 4:
            # the bottom half is tiled in 4x2 blocks, so it needs >= 4 rows
            raise ShapeError("vhlines ordering requires H >= 8, W >= 4")
        # Top half row-major: position-0 groups are horizontal 4-runs.
        # Bottom half in 4x2 tiles with slot = 2*row_offset + col_offset:
        # position-1 groups there are vertical 4-runs.
        perm = np.empty(size, dtype=np.int64)
        half = h // 2
        slot = 0
        for r in range(half):
            for c in range(w):
                perm[r * w + c] = slot
                slot += 1
        for r0 in range(half, h, 4):
            for c0 in range(0, w, 2):
                for t in range(4):
                    for b in range(2):
                        r, c = r0 + t, c0 + b
                        if r < h:
                            perm[r * w + c] = slot + 2 * t + b
                slot += 8
        return perm
    raise ValueError(f"unknown ordering kind {kind!r}")


def build_ordering(kind: str, image_shape: tuple[int, int, int],
                   seed: int | None = None) -> Ordering:
    """Per-channel spatial permutation; channels are contiguous planes."""
    if kind not in ORDERING_KINDS:
        raise ValueError(f"unknown ordering kind {kind!r}")
    h, w, c = image_shape
    if h * w * c > 1 << 26:
        raise CapacityError("image too large")
    if kind == "random" and seed is None:
        raise ValueError("random ordering requires a seed")
    rng = np.random.default_rng(seed) if kind == "random" else None
    plane = _next_pow2(h * w)
    total = _next_pow2(c * plane)
    perm = np.empty(total, dtype=np.int64)
    spatial = _spatial_permutation(kind, h, w, rng)
    used = np.zeros(total, dtype=bool)
    for ch in range(c):
        block = ch * plane + spatial
        perm[ch * h * w:(ch + 1) * h * w] = block
        used[block] = True
    leftovers = np.flatnonzero(~used)
    perm[c * h * w:] = leftovers
    return Ordering(perm)


def mixing_groups(p: int, n_total_qubits: int) -> list[tuple[int, int, int, int]]:
    """4-index groups mixed by an adjacent two-qubit gate at position p.

    Group members vary the bits of significance 2^p and 2^(p+1) while all
    other bits stay fixed.
    """
    n = n_total_qubits
    if not 0 <= p <= n - 2:
        raise ShapeError(f"position {p} invalid for {n} qubits")
    idx = np.arange(1 << n)
    bases = idx[((idx >> p) & 1 == 0) & ((idx >> (p + 1)) & 1 == 0)]
    lo, hi = 1 << p, 1 << (p + 1)
    return [(int(b), int(b + lo), int(b + hi), int(b + lo + hi))
            for b in bases]


@dataclass
class LocalityReport:
    position: int
    n_qubits: int
    trials: int
    passed: bool
    max_off_group: float


def verify_kernel_locality(p: int, n: int, trials: int = 10,
                           seed: int = 0,
                           groups: list[tuple[int, ...]] | None = None
                           ) -> LocalityReport:
    """Check that a gate at position p only couples amplitudes within
    the same mixing group, via the dense full-unitary expansion.

    A custom `groups` table supports negative-control self-tests.
    """
    if n > 8:
        raise CapacityError("verifier limited to n <= 8")
    if groups is None:
        groups = mixing_groups(p, n)
    group_of = np.full(1 << n, -1, dtype=np.int64)
    for gid, members in enumerate(groups):
        for m in members:
            group_of[m] = gid
    off_mask = group_of[:, None] != group_of[None, :]
    targets = (n - 2 - p, n - 1 - p)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        full = expand_matrix(random_unitary(4, rng), targets, n)
        worst = max(worst, float(np.abs(full[off_mask]).max()))
    return LocalityReport(p, n, trials, worst < 1e-10, worst)
