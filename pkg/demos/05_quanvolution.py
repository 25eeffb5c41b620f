"""Quanvolutional feature maps.

A single weight-tied 4-qubit circuit slides over the image like a 2x2
convolution kernel and emits one feature map per measured qubit per
input channel: 3 channels x 4 qubits = 12 maps of 15x15.
"""
import numpy as np

from qpqc.ansaetze import AnsatzSpec
from qpqc.encodings import EncodingSpec
from qpqc.models import ModelConfig, build_model


def main():
    config = ModelConfig(
        "hqnn_quanv", (16, 16, 3), 4, seed=0,
        encoding=EncodingSpec("angle_y"),
        ansatz=AnsatzSpec("ring", layers=1), qks=2)
    model = build_model(config)
    quanv = model.blocks[0]
    print(f"kernel {config.qks}x{config.qks} -> {quanv.out_channels} "
          f"maps of {quanv.out_h}x{quanv.out_w}")

    rng = np.random.default_rng(0)
    image = rng.uniform(0, 1, (3, 16, 16))
    maps = quanv.forward(image)
    print("output tensor:", maps.shape, "range",
          f"[{maps.min():.2f}, {maps.max():.2f}]")

    scores = model.forward(image)
    print("class scores:", np.round(scores, 3))


if __name__ == "__main__":
    main()
