import numpy as np
import pytest

from qpqc.ansaetze import AnsatzSpec
from qpqc.encodings import EncodingSpec
from qpqc.measurements import predict_class
from qpqc.models import (ModelConfig, QuantumLinearBlock, QuanvolutionBlock,
                         build_model, config_digest, load_checkpoint,
                         save_checkpoint)
from qpqc.sim import ShapeError

RING = AnsatzSpec("ring")


def test_quantum_linear_angle_shape_contract():
    block = QuantumLinearBlock(768, EncodingSpec("angle_x"), RING,
                               "pauli_z", 8, seed=0)
    assert block.n_circuits == 96
    assert block.output_size == 768


def test_quantum_linear_amplitude_shape_contract():
    block = QuantumLinearBlock(768, EncodingSpec("amplitude"), RING,
                               "pauli_z", 8, seed=0)
    assert block.n_circuits == 3
    assert block.output_size == 24


def test_quantum_linear_two_circuit_scheme():
    block = QuantumLinearBlock(8, EncodingSpec("angle_y"), RING,
                               "pauli_z", 4, seed=0)
    assert block.n_circuits == 2
    out = block.forward(np.linspace(0, np.pi, 8))
    assert out.shape == (8,)


def test_quantum_linear_divisibility():
    with pytest.raises(ShapeError):
        QuantumLinearBlock(10, EncodingSpec("angle_x"), RING, "pauli_z", 4,
                           seed=0)


def test_parallel_circuit_independence():
    # changing the input chunk of circuit j only moves circuit j's outputs
    block = QuantumLinearBlock(12, EncodingSpec("angle_x"), RING,
                               "pauli_z", 4, seed=1)
    rng = np.random.default_rng(0)
    x = rng.uniform(0, np.pi, 12)
    base = block.forward(x)
    for j in range(3):
        y = x.copy()
        y[j * 4:(j + 1) * 4] = rng.uniform(0, np.pi, 4)
        out = block.forward(y)
        moved = np.flatnonzero(~np.isclose(out, base, atol=1e-12))
        assert set(moved) <= set(range(j * 4, (j + 1) * 4))


def test_quanvolution_shape_contracts():
    block = QuanvolutionBlock((16, 16, 3), EncodingSpec("angle_x"), RING,
                              "pauli_z", qks=2, seed=0)
    assert block.out_channels == 12
    assert (block.out_h, block.out_w) == (15, 15)
    block = QuanvolutionBlock((32, 32, 3), EncodingSpec("angle_x"), RING,
                              "pauli_z", qks=3, seed=0)
    assert block.out_channels == 27
    assert (block.out_h, block.out_w) == (30, 30)


def test_quanvolution_weight_tying():
    block = QuanvolutionBlock((4, 4, 1), EncodingSpec("angle_x"), RING,
                              "pauli_z", qks=2, seed=3)
    rng = np.random.default_rng(1)
    tile = rng.uniform(0.1, 0.9, (2, 2))
    img = np.tile(tile, (2, 2))[None]      # identical 2x2 patches at (0,0)
    out = block.forward(img)
    assert np.allclose(out[:, 0, 0], out[:, 2, 0], atol=1e-12)
    assert np.allclose(out[:, 0, 0], out[:, 0, 2], atol=1e-12)
    # perturbing the shared parameters changes every patch output
    base = out.copy()
    block.params[0] += 0.3
    moved = block.forward(img)
    assert np.all(np.any(np.abs(moved - base) > 1e-9, axis=0))


def test_hybrid_feature_extractor_gives_768_features():
    for shape in ((16, 16, 3), (32, 32, 3)):
        model = build_model(ModelConfig("classical_parallel", shape, 4, 0))
        x = np.random.default_rng(0).uniform(size=(shape[2],) + shape[:2])
        out = model.blocks[0].forward(x)
        for block in model.blocks[1:-5]:
            out = block.forward(out)
        assert out.shape == (768,)


def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig("qcnn", (16, 16, 3), 4, 0,
                    encoding=EncodingSpec("angle_x"))
    with pytest.raises(ValueError):
        ModelConfig("hqnn_quanv", (16, 16, 3), 4, 0,
                    encoding=EncodingSpec("angle_x"), ansatz=RING, qks=4)
    with pytest.raises(ValueError):
        ModelConfig("hqnn_parallel", (16, 16, 3), 4, 0,
                    encoding=EncodingSpec("angle_x"), ansatz=RING,
                    measurement_kind="histogram")
    with pytest.raises(ValueError):
        ModelConfig("vit", (16, 16, 3), 4, 0)


def test_qcnn_flagship_parameter_budget():
    config = ModelConfig("qcnn", (16, 16, 3), 4, 0,
                         encoding=EncodingSpec("amplitude"), fc_depth="deep")
    model = build_model(config)
    assert model.parameter_count == 268     # ~300, under the 400 budget
    assert model.parameter_count <= 400


def test_qcnn_ordering_permutation_consistency():
    rng = np.random.default_rng(4)
    img = rng.uniform(0.05, 1.0, (3, 16, 16))
    outs = []
    counts = []
    for enc in (EncodingSpec("amplitude", ordering="flatten"),
                EncodingSpec("amplitude", ordering="random",
                             ordering_seed=5)):
        model = build_model(ModelConfig("qcnn", (16, 16, 3), 4, 0,
                                        encoding=enc))
        counts.append(model.parameter_count)
        outs.append(model.forward(img))
    assert counts[0] == counts[1]
    assert outs[0].shape == outs[1].shape


def test_logit_shift_invariance_of_prediction():
    scores = np.array([0.1, 0.9, -0.3, 0.4])
    assert predict_class(scores) == predict_class(scores + 5.0)


def test_pure_model_histogram_head():
    config = ModelConfig("seqnn_fc", (16, 16, 3), 4, 0,
                         encoding=EncodingSpec("amplitude"),
                         measurement_kind="histogram")
    model = build_model(config)
    assert model.scores_are_probabilities
    rng = np.random.default_rng(2)
    out = model.forward(rng.uniform(0.1, 1.0, (3, 16, 16)))
    assert out.shape == (4,)
    assert np.all(out >= 0.0)


def test_pure_model_paulis_head():
    config = ModelConfig("qcnn", (16, 16, 3), 4, 0,
                         encoding=EncodingSpec("amplitude"),
                         measurement_kind="paulis")
    model = build_model(config)
    rng = np.random.default_rng(3)
    out = model.forward(rng.uniform(0.1, 1.0, (3, 16, 16)))
    assert out.shape == (4,)
    assert np.all(np.abs(out) <= 1.0 + 1e-12)


def test_identical_samples_give_identical_gradients():
    config = ModelConfig("seqnn_two_kernel", (16, 16, 3), 4, 0,
                         encoding=EncodingSpec("amplitude",
                                               ordering="squared"))
    model = build_model(config)
    rng = np.random.default_rng(6)
    img = rng.uniform(0.05, 1.0, (3, 16, 16))
    cot = rng.normal(size=4)
    model.zero_grads()
    model.forward(img)
    model.backward(cot)
    first = model.get_grads().copy()
    model.zero_grads()
    model.forward(img)
    model.backward(cot)
    assert np.array_equal(first, model.get_grads())


def test_get_set_params_round_trip():
    model = build_model(ModelConfig("classical_parallel", (16, 16, 3), 4, 0))
    params = model.get_params()
    rng = np.random.default_rng(8)
    new = rng.normal(size=params.size)
    model.set_params(new)
    assert np.array_equal(model.get_params(), new)
    with pytest.raises(ShapeError):
        model.set_params(new[:-1])
    # dense weight views must track the flat buffer
    x = rng.uniform(size=(3, 16, 16))
    a = model.forward(x)
    model.set_params(new * 0.5)
    b = model.forward(x)
    assert not np.allclose(a, b)


def test_checkpoint_round_trip(tmp_path):
    config = ModelConfig("classical_parallel", (16, 16, 3), 4, 0)
    model = build_model(config)
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, config, model.get_params())
    loaded = load_checkpoint(path, config)
    assert np.array_equal(loaded, model.get_params())


def test_checkpoint_rejects_config_mismatch(tmp_path):
    config = ModelConfig("classical_parallel", (16, 16, 3), 4, 0)
    other = ModelConfig("classical_parallel", (16, 16, 3), 4, 1)
    assert config_digest(config) != config_digest(other)
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, config, np.zeros(4))
    with pytest.raises(ValueError):
        load_checkpoint(path, other)


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 44)
    with pytest.raises(ValueError):
        load_checkpoint(str(path), ModelConfig("classical_parallel",
                                               (16, 16, 3), 4, 0))
