"""Frame-potential expressibility estimator for encoding circuits.

The t-th frame potential is the t-th moment of squared overlaps between
independently sampled states from an ensemble. Dividing by the Haar
value gives an expressibility proxy: ratio 1 means Haar-like, larger
ratios mean the ensemble explores less of state space.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, exp

import numpy as np

from .encodings import (QAOA_KINDS, EncodingSpec, amplitude_prepare, encode,
                        qaoa_param_count)
from .sim import CapacityError, apply_sequence, new_zero_state

SUPPORTED_T = (1, 2)

# Sampling distributions: features at pixel scale (the ingestion contract
# maps pixels to [0,1]); trainable angles at a moderate spread around the
# initialization point.
INPUT_LOW, INPUT_HIGH = 0.0, 1.0
THETA_SPREAD = np.pi / 4


@dataclass
class FramePotentialEstimate:
    t: int
    mean: float
    std_error: float
    samples: int
    haar_ref: float

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("need at least 2 samples")
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")

    @property
    def ratio(self) -> float:
        return self.mean / self.haar_ref


def haar_frame_potential(dimension: int, t: int) -> float:
    """t! (d-1)! / (d+t-1)! via log-gamma to stay finite for large d."""
    if dimension < 2:
        raise ValueError("dimension must be >= 2")
    if t not in SUPPORTED_T:
        raise ValueError(f"unsupported moment order t={t}")
    return exp(lgamma(t + 1) + lgamma(dimension) - lgamma(dimension + t))


def _sample_state(spec: EncodingSpec | None, n_qubits: int,
                  rng: np.random.Generator) -> np.ndarray:
    if spec is None:
        # Haar reference ensemble
        dim = 1 << n_qubits
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return v / np.linalg.norm(v)
    if spec.kind == "amplitude":
        feats = rng.uniform(INPUT_LOW, INPUT_HIGH, 1 << n_qubits)
        return amplitude_prepare(feats, None, n_qubits).amps
    feats = rng.uniform(INPUT_LOW, INPUT_HIGH, n_qubits)
    if spec.kind in QAOA_KINDS:
        theta = rng.uniform(-THETA_SPREAD, THETA_SPREAD,
                            qaoa_param_count(spec.kind, spec.layers,
                                             n_qubits))
        spec = EncodingSpec(spec.kind, spec.layers, spec.ordering,
                            spec.ordering_seed, qaoa_params=theta)
    seq = encode(spec, feats, n_qubits)
    return apply_sequence(new_zero_state(n_qubits), seq).amps


def jackknife_std_error(samples: np.ndarray) -> float:
    """Leave-one-out standard error of the sample mean."""
    m = samples.size
    total = samples.sum()
    loo = (total - samples) / (m - 1)
    return float(np.sqrt((m - 1) / m * np.sum((loo - loo.mean()) ** 2)))


def estimate_frame_potential(spec: EncodingSpec | None, n_qubits: int,
                             t: int, n_pairs: int,
                             input_sampler_seed: int
                             ) -> FramePotentialEstimate:
    """Monte-Carlo frame potential over independently drawn state pairs.

    spec=None samples Haar-random states instead of encoded ones
    (self-consistency check: ratio should be 1).
    """
    if n_qubits > 12:
        raise CapacityError("expressibility estimator capped at 12 qubits")
    if t not in SUPPORTED_T:
        raise ValueError(f"unsupported moment order t={t}")
    if n_pairs < 100:
        raise ValueError("need at least 100 pairs")
    rng = np.random.default_rng(input_sampler_seed)
    overlaps = np.empty(n_pairs)
    for i in range(n_pairs):
        psi = _sample_state(spec, n_qubits, rng)
        phi = _sample_state(spec, n_qubits, rng)
        overlaps[i] = abs(np.vdot(psi, phi)) ** 2
    moments = overlaps ** t
    return FramePotentialEstimate(
        t=t,
        mean=float(moments.mean()),
        std_error=jackknife_std_error(moments),
        samples=n_pairs,
        haar_ref=haar_frame_potential(1 << n_qubits, t))
