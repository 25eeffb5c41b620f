"""End-to-end trainable models: two hybrids, three pure-quantum
architectures, and their classical structural twins.

Every model is a chain of blocks sharing one interface: forward caches,
backward accumulates gradients into a flat per-block buffer. Quantum
blocks differentiate with the adjoint sweep.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .ansaetze import (AnsatzSpec, append_arbitrary_two_qubit,
                       append_pooling, append_simplified_two_design,
                       build_ansatz, build_qcnn, parameter_count,
                       qcnn_parameter_count, simplified_two_design_count)
from .encodings import (EncodingSpec, Ordering, amplitude_prepare,
                        build_ordering, encode, qaoa_param_count)
from .gradients import adjoint_sequence_grad, normalized_load_input_grad
from .measurements import MeasurementSpec, draw_pauli_strings, measure
from .nn import LayerSpec, he_init, layer_backward, layer_forward
from .sim import GateSequence, ShapeError, StateVector, apply_sequence, \
    new_zero_state

ARCHS = ("hqnn_parallel", "hqnn_quanv", "qcnn", "seqnn_two_kernel",
         "seqnn_fc", "classical_parallel", "classical_quanv")

AMPLITUDE_OFFSET = 1e-8   # dodges all-zero chunks/patches


@dataclass
class ModelConfig:
    arch: str
    image_shape: tuple[int, int, int]
    class_count: int
    seed: int
    encoding: EncodingSpec | None = None
    ansatz: AnsatzSpec | None = None
    measurement_kind: str = "pauli_z"
    qubits_per_circuit: int = 8
    qks: int = 2
    fc_depth: str = "shallow"

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ValueError(f"unknown architecture {self.arch!r}")
        self.image_shape = tuple(self.image_shape)
        if self.arch in ("qcnn", "seqnn_two_kernel", "seqnn_fc"):
            if self.encoding is not None and self.encoding.kind != "amplitude":
                raise ValueError(f"{self.arch} requires amplitude encoding")
        if self.arch == "hqnn_quanv":
            if self.qks not in (2, 3):
                raise ValueError("qks must be 2 or 3")
        if self.arch in ("hqnn_parallel", "hqnn_quanv") \
                and self.measurement_kind not in ("pauli_x", "pauli_y",
                                                  "pauli_z"):
            raise ValueError("hybrid models use per-qubit Pauli readout")


def config_digest(config: ModelConfig) -> bytes:
    return hashlib.sha256(repr(config).encode()).digest()


class Block:
    """Chain element with a flat trainable-parameter buffer."""

    def __init__(self):
        self.params = np.zeros(0)
        self.grads = np.zeros(0)

    @property
    def n_params(self) -> int:
        return self.params.size

    def zero_grads(self) -> None:
        self.grads[:] = 0.0

    def forward(self, x):
        raise NotImplementedError

    def backward(self, d_out):
        raise NotImplementedError


class ClassicalBlock(Block):
    def __init__(self, spec: LayerSpec, seed: int):
        super().__init__()
        self.spec = spec
        self.weights = he_init(spec, seed)
        self.keys = sorted(self.weights)
        self.params = np.concatenate(
            [self.weights[k].ravel() for k in self.keys]) \
            if self.keys else np.zeros(0)
        self.grads = np.zeros_like(self.params)
        self._cache = None
        self._sync_views()

    def _sync_views(self) -> None:
        # weights are views into the flat buffer so set_params is a copy
        pos = 0
        for k in self.keys:
            shape = self.weights[k].shape
            size = self.weights[k].size
            self.weights[k] = self.params[pos:pos + size].reshape(shape)
            pos += size

    def forward(self, x):
        out, self._cache = layer_forward(self.spec, self.weights, x)
        return out

    def backward(self, d_out):
        d_in, d_w = layer_backward(self.spec, self.weights, self._cache,
                                   d_out)
        pos = 0
        for k in self.keys:
            size = self.weights[k].size
            self.grads[pos:pos + size] += d_w[k].ravel()
            pos += size
        return d_in


class QuantumLinearBlock(Block):
    """Bank of independent PQCs over contiguous input chunks."""

    def __init__(self, input_size: int, encoding: EncodingSpec,
                 ansatz: AnsatzSpec, measurement_kind: str,
                 qubits_per_circuit: int, seed: int):
        super().__init__()
        self.encoding = encoding
        self.ansatz = ansatz
        self.n_qubits = qubits_per_circuit
        self.measurement_kind = measurement_kind
        self.amplitude = encoding.kind == "amplitude"
        self.chunk = (1 << self.n_qubits) if self.amplitude else self.n_qubits
        if input_size % self.chunk:
            raise ShapeError(f"input size {input_size} not divisible by "
                             f"chunk size {self.chunk}")
        self.n_circuits = input_size // self.chunk
        self.input_size = input_size
        self.output_size = self.n_circuits * self.n_qubits
        self.mspec = MeasurementSpec(measurement_kind,
                                     tuple(range(self.n_qubits)), 1)
        self.per_circuit = (parameter_count(ansatz, self.n_qubits)
                            + qaoa_param_count(encoding.kind,
                                               encoding.layers,
                                               self.n_qubits))
        rng = np.random.default_rng(seed)
        self.params = rng.uniform(-np.pi, np.pi,
                                  self.n_circuits * self.per_circuit)
        self.grads = np.zeros_like(self.params)
        self._cache = None

    def _build(self, features: np.ndarray, values: np.ndarray
               ) -> tuple[StateVector, GateSequence, int]:
        n_a = parameter_count(self.ansatz, self.n_qubits)
        if self.amplitude:
            state0 = amplitude_prepare(features + AMPLITUDE_OFFSET, None,
                                       self.n_qubits)
            seq = GateSequence(self.n_qubits)
        else:
            state0 = new_zero_state(self.n_qubits)
            espec = EncodingSpec(self.encoding.kind, self.encoding.layers,
                                 qaoa_params=values[n_a:])
            seq = encode(espec, features, self.n_qubits, param_offset=n_a)
        anchor = len(seq.gates)
        seq.extend(build_ansatz(self.ansatz, self.n_qubits, values[:n_a]))
        return state0, seq, anchor

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != self.input_size:
            raise ShapeError(f"expected {self.input_size} inputs")
        out = np.empty(self.output_size)
        self._cache = x
        for i in range(self.n_circuits):
            values = self.params[i * self.per_circuit:
                                 (i + 1) * self.per_circuit]
            state0, seq, _ = self._build(
                x[i * self.chunk:(i + 1) * self.chunk], values)
            out[i * self.n_qubits:(i + 1) * self.n_qubits] = measure(
                apply_sequence(state0, seq), self.mspec)
        return out

    def backward(self, d_out):
        x = self._cache
        d_in = np.zeros(self.input_size)
        for i in range(self.n_circuits):
            cot = d_out[i * self.n_qubits:(i + 1) * self.n_qubits]
            if not np.any(cot):
                continue
            values = self.params[i * self.per_circuit:
                                 (i + 1) * self.per_circuit]
            feats = x[i * self.chunk:(i + 1) * self.chunk]
            state0, seq, anchor = self._build(feats, values)
            d_p, d_x, lam = adjoint_sequence_grad(
                state0, seq, self.mspec, cot, self.per_circuit, self.chunk,
                anchor=anchor)
            if self.amplitude:
                d_x = normalized_load_input_grad(
                    lam, feats + AMPLITUDE_OFFSET, None)
            self.grads[i * self.per_circuit:
                       (i + 1) * self.per_circuit] += d_p
            d_in[i * self.chunk:(i + 1) * self.chunk] += d_x
        return d_in


class QuanvolutionBlock(Block):
    """Patch-wise quantum kernel with parameters shared across all
    spatial positions and channels. Applies two identical ansatz blocks
    (same parameter slots) after the encoding."""

    def __init__(self, image_shape: tuple[int, int, int],
                 encoding: EncodingSpec, ansatz: AnsatzSpec,
                 measurement_kind: str, qks: int, seed: int):
        super().__init__()
        h, w, c = image_shape
        self.qks = qks
        self.n_qubits = qks * qks
        self.channels = c
        self.out_h = h - qks + 1
        self.out_w = w - qks + 1
        self.encoding = encoding
        self.ansatz = ansatz
        self.amplitude = encoding.kind == "amplitude"
        self.mspec = MeasurementSpec(measurement_kind,
                                     tuple(range(self.n_qubits)), 1)
        self.n_ansatz = parameter_count(ansatz, self.n_qubits)
        self.per = (self.n_ansatz
                    + qaoa_param_count(encoding.kind, encoding.layers,
                                       self.n_qubits))
        rng = np.random.default_rng(seed)
        self.params = rng.uniform(-np.pi, np.pi, self.per)
        self.grads = np.zeros_like(self.params)
        self._cache = None

    @property
    def out_channels(self) -> int:
        return self.channels * self.n_qubits

    def _patch_features(self, patch: np.ndarray) -> np.ndarray:
        flat = patch.ravel()
        if self.amplitude:
            return flat + AMPLITUDE_OFFSET
        lo, hi = flat.min(), flat.max()
        if hi - lo < 1e-12:
            return np.zeros_like(flat)
        return (flat - lo) / (hi - lo) * np.pi

    def _build(self, features: np.ndarray):
        if self.amplitude:
            state0 = amplitude_prepare(features, None, self.n_qubits)
            seq = GateSequence(self.n_qubits)
        else:
            state0 = new_zero_state(self.n_qubits)
            espec = EncodingSpec(self.encoding.kind, self.encoding.layers,
                                 qaoa_params=self.params[self.n_ansatz:])
            seq = encode(espec, features, self.n_qubits,
                         param_offset=self.n_ansatz)
        anchor = len(seq.gates)
        ansatz_values = self.params[:self.n_ansatz]
        seq.extend(build_ansatz(self.ansatz, self.n_qubits, ansatz_values))
        seq.extend(build_ansatz(self.ansatz, self.n_qubits, ansatz_values))
        return state0, seq, anchor

    def forward(self, x):
        c, h, w = x.shape
        out = np.empty((self.out_channels, self.out_h, self.out_w))
        feats = np.empty((c, self.out_h, self.out_w, self.n_qubits))
        for ch in range(c):
            for i in range(self.out_h):
                for j in range(self.out_w):
                    f = self._patch_features(
                        x[ch, i:i + self.qks, j:j + self.qks])
                    feats[ch, i, j] = f
                    state0, seq, _ = self._build(f)
                    out[ch * self.n_qubits:(ch + 1) * self.n_qubits, i, j] \
                        = measure(apply_sequence(state0, seq), self.mspec)
        self._cache = (x.shape, feats)
        return out

    def backward(self, d_out):
        # first layer of its models: no input gradient needed
        shape, feats = self._cache
        c = shape[0]
        for ch in range(c):
            for i in range(self.out_h):
                for j in range(self.out_w):
                    cot = d_out[ch * self.n_qubits:
                                (ch + 1) * self.n_qubits, i, j]
                    if not np.any(cot):
                        continue
                    state0, seq, anchor = self._build(feats[ch, i, j])
                    d_p, _, _ = adjoint_sequence_grad(
                        state0, seq, self.mspec, cot, self.per,
                        feats[ch, i, j].size, anchor=anchor)
                    self.grads += d_p
        return np.zeros(shape)


class PureQuantumBlock(Block):
    """Amplitude-loaded circuit evaluated as a single quantum model.

    builder(values) must return the full trainable gate sequence.
    """

    def __init__(self, n_qubits: int, ordering: Ordering | None,
                 builder, n_params: int, mspec: MeasurementSpec, seed: int):
        super().__init__()
        self.n_qubits = n_qubits
        self.ordering = ordering
        self.builder = builder
        self.mspec = mspec
        rng = np.random.default_rng(seed)
        self.params = rng.uniform(-np.pi, np.pi, n_params)
        self.grads = np.zeros_like(self.params)
        self._cache = None

    def forward(self, x):
        feats = np.asarray(x, dtype=np.float64).ravel() + AMPLITUDE_OFFSET
        self._cache = feats
        state0 = amplitude_prepare(feats, self.ordering, self.n_qubits)
        seq = self.builder(self.params)
        return measure(apply_sequence(state0, seq), self.mspec)

    def backward(self, d_out):
        feats = self._cache
        state0 = amplitude_prepare(feats, self.ordering, self.n_qubits)
        seq = self.builder(self.params)
        d_p, _, lam = adjoint_sequence_grad(
            state0, seq, self.mspec, d_out, self.params.size)
        self.grads += d_p
        d_in = normalized_load_input_grad(lam, feats, self.ordering)
        return d_in


class FlattenImage(Block):
    """(C, H, W) image to channel-major flat feature vector."""

    def forward(self, x):
        self._shape = x.shape
        return x.ravel().copy()

    def backward(self, d_out):
        return d_out.reshape(self._shape)


@dataclass
class Model:
    config: ModelConfig
    blocks: list[Block]
    scores_are_probabilities: bool = False
    measured_output_size: int | None = None

    @property
    def parameter_count(self) -> int:
        return sum(b.n_params for b in self.blocks)

    def forward(self, x: np.ndarray) -> np.ndarray:
        out = x
        for b in self.blocks:
            out = b.forward(out)
        if self.measured_output_size is not None:
            out = out[:self.config.class_count]
        return out

    def backward(self, d_scores: np.ndarray) -> np.ndarray:
        d = d_scores
        if self.measured_output_size is not None:
            full = np.zeros(self.measured_output_size)
            full[:self.config.class_count] = d_scores
            d = full
        for b in reversed(self.blocks):
            d = b.backward(d)
        return d

    def zero_grads(self) -> None:
        for b in self.blocks:
            b.zero_grads()

    def get_params(self) -> np.ndarray:
        return np.concatenate([b.params for b in self.blocks]) \
            if self.blocks else np.zeros(0)

    def set_params(self, flat: np.ndarray) -> None:
        if flat.size != self.parameter_count:
            raise ShapeError("parameter vector length mismatch")
        pos = 0
        for b in self.blocks:
            b.params[:] = flat[pos:pos + b.n_params]
            pos += b.n_params
            if isinstance(b, ClassicalBlock):
                b._sync_views()

    def get_grads(self) -> np.ndarray:
        return np.concatenate([b.grads for b in self.blocks]) \
            if self.blocks else np.zeros(0)


def _seeds(seed: int, count: int) -> list[int]:
    rng = np.random.default_rng(seed)
    return [int(s) for s in rng.integers(0, 2 ** 31 - 1, size=count)]


def _feature_extractor(image_shape: tuple[int, int, int],
                       seeds: list[int]) -> list[Block]:
    """Conv stack flattening to exactly 768 features for 16x16 and
    32x32 inputs."""
    h, w, c = image_shape
    blocks: list[Block] = []
    if (h, w) == (16, 16):
        widths = [(c, 12, 2), (12, 12, 1)]
    elif (h, w) == (32, 32):
        widths = [(c, 12, 2), (12, 24, 2), (24, 48, 2), (48, 48, 1)]
    else:
        raise ShapeError("extractor supports 16x16 and 32x32 images")
    for i, (cin, cout, stride) in enumerate(widths):
        blocks.append(ClassicalBlock(
            LayerSpec("conv2d", in_channels=cin, out_channels=cout,
                      kernel=3, stride=stride, padding=1), seeds[i]))
        blocks.append(ClassicalBlock(LayerSpec("relu"), 0))
    blocks.append(ClassicalBlock(LayerSpec("flatten"), 0))
    return blocks


def _dense(in_features: int, units: int, seed: int) -> ClassicalBlock:
    return ClassicalBlock(LayerSpec("dense", in_features=in_features,
                                    units=units), seed)


def _measured_qubits(kind: str, active: list[int], k: int
                     ) -> tuple[int, ...]:
    if kind == "histogram":
        m = max(1, (k - 1).bit_length())
        if m > len(active):
            raise ShapeError("not enough qubits for histogram classes")
        return tuple(active[:m])
    if kind in ("pauli_x", "pauli_y", "pauli_z"):
        if k > len(active):
            raise ShapeError("not enough qubits for per-qubit classes")
        return tuple(active[:k])
    return tuple(active)


def _pure_measurement(config: ModelConfig, n_qubits: int,
                      active: list[int], seed: int) -> MeasurementSpec:
    kind = config.measurement_kind
    k = config.class_count
    if kind == "paulis":
        strings = draw_pauli_strings(k, n_qubits, seed)
        return MeasurementSpec(kind, tuple(range(n_qubits)), k,
                               pauli_strings=strings)
    return MeasurementSpec(kind, _measured_qubits(kind, active, k), k)


def build_model(config: ModelConfig) -> Model:
    seeds = _seeds(config.seed, 16)
    k = config.class_count
    h, w, c = config.image_shape

    if config.arch in ("classical_parallel", "hqnn_parallel"):
        blocks = _feature_extractor(config.image_shape, seeds[:4])
        if config.arch == "classical_parallel":
            blocks += [_dense(768, 256, seeds[4]),
                       ClassicalBlock(LayerSpec("leaky_relu"), 0),
                       _dense(256, 64, seeds[5]),
                       ClassicalBlock(LayerSpec("leaky_relu"), 0),
                       _dense(64, k, seeds[6])]
            return Model(config, blocks)
        qlayer = QuantumLinearBlock(768, config.encoding, config.ansatz,
                                    config.measurement_kind,
                                    config.qubits_per_circuit, seeds[7])
        blocks += [qlayer,
                   _dense(qlayer.output_size, 128, seeds[8]),
                   ClassicalBlock(LayerSpec("leaky_relu"), 0),
                   _dense(128, k, seeds[9])]
        return Model(config, blocks)

    if config.arch in ("classical_quanv", "hqnn_quanv"):
        if config.arch == "hqnn_quanv":
            first: Block = QuanvolutionBlock(
                config.image_shape, config.encoding, config.ansatz,
                config.measurement_kind, config.qks, seeds[7])
            ch0 = first.out_channels
        else:
            ch0 = c * config.qks * config.qks
            first = ClassicalBlock(
                LayerSpec("conv2d", in_channels=c, out_channels=ch0,
                          kernel=3, stride=2, padding=1), seeds[7])
        blocks = [first, ClassicalBlock(LayerSpec("relu"), 0)]
        blocks.append(ClassicalBlock(
            LayerSpec("conv2d", in_channels=ch0, out_channels=16,
                      kernel=3, stride=1, padding=1), seeds[0]))
        blocks.append(ClassicalBlock(LayerSpec("relu"), 0))
        blocks.append(ClassicalBlock(
            LayerSpec("conv2d", in_channels=16, out_channels=32,
                      kernel=3, stride=2, padding=1), seeds[1]))
        blocks.append(ClassicalBlock(LayerSpec("relu"), 0))
        blocks.append(ClassicalBlock(LayerSpec("global_avg_pool"), 0))
        blocks += [_dense(32, 64, seeds[2]),
                   ClassicalBlock(LayerSpec("leaky_relu"), 0),
                   _dense(64, k, seeds[3])]
        return Model(config, blocks)

    # pure quantum models
    encoding = config.encoding or EncodingSpec("amplitude")
    ordering = build_ordering(encoding.ordering, config.image_shape,
                              encoding.ordering_seed)
    n = ordering.size.bit_length() - 1

    if config.arch == "qcnn":
        ansatz = config.ansatz or AnsatzSpec(
            "qcnn", qcnn_conv_pool_layers=3, qcnn_fc_depth=config.fc_depth)
        layers = ansatz.qcnn_conv_pool_layers
        depth = ansatz.qcnn_fc_depth
        n_params = qcnn_parameter_count(n, layers, depth)

        def builder(values):
            seq, _ = build_qcnn(n, layers, depth, values)
            return seq

        mspec = _pure_measurement(config, n, list(range(n)), seeds[10])
        block = PureQuantumBlock(n, ordering, builder, n_params, mspec,
                                 seeds[11])
        return Model(config, [FlattenImage(), block],
                     scores_are_probabilities=(config.measurement_kind
                                               == "histogram"),
                     measured_output_size=mspec.output_size)

    if config.arch in ("seqnn_two_kernel", "seqnn_fc"):
        depth = 1 if config.fc_depth == "shallow" else 3
        if config.arch == "seqnn_fc":
            active = list(range(n))
            n_params = simplified_two_design_count(n, depth)

            def builder(values):
                seq = GateSequence(n)
                append_simplified_two_design(seq, active, values, 0, depth)
                return seq
        else:
            # kernels sit on the least-significant qubit pairs so the
            # amplitude ordering's spatial structure reaches them
            pair_a = (n - 2, n - 1)      # position 0
            pair_b = (n - 4, n - 3)      # position 2
            active = [q for q in range(n) if q not in (pair_a[1],
                                                       pair_b[1])]
            n_params = (2 * 15 + 2 * 3
                        + simplified_two_design_count(len(active), depth))

            def builder(values):
                seq = GateSequence(n)
                off = append_arbitrary_two_qubit(seq, *pair_a, values, 0)
                off = append_arbitrary_two_qubit(seq, *pair_b, values, off)
                off = append_pooling(seq, pair_a[1], pair_a[0], values, off)
                off = append_pooling(seq, pair_b[1], pair_b[0], values, off)
                append_simplified_two_design(seq, active, values, off,
                                             depth)
                return seq

        mspec = _pure_measurement(config, n, active, seeds[10])
        block = PureQuantumBlock(n, ordering, builder, n_params, mspec,
                                 seeds[11])
        return Model(config, [FlattenImage(), block],
                     scores_are_probabilities=(config.measurement_kind
                                               == "histogram"),
                     measured_output_size=mspec.output_size)

    raise AssertionError(config.arch)


CHECKPOINT_MAGIC = b"QPQC"


def save_checkpoint(path: str, config: ModelConfig,
                    params: np.ndarray) -> None:
    data = np.asarray(params, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(config_digest(config))
        fh.write(struct.pack("<Q", data.size))
        fh.write(data.tobytes())


def load_checkpoint(path: str, config: ModelConfig) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError("not a checkpoint file")
        digest = fh.read(32)
        if digest != config_digest(config):
            raise ValueError("checkpoint was written for a different config")
        (size,) = struct.unpack("<Q", fh.read(8))
        return np.frombuffer(fh.read(size * 8), dtype="<f8").copy()
