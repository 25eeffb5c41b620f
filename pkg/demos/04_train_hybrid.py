"""Generate a small synthetic dataset and train a hybrid model on it.

Uses the parallel hybrid architecture: a classical convolutional
extractor feeding amplitude-encoded quantum linear circuits. Writes a
metrics CSV next to the dataset.
"""
import tempfile
from pathlib import Path

from qpqc.ansaetze import AnsatzSpec
from qpqc.data import synth_dataset
from qpqc.encodings import EncodingSpec
from qpqc.models import ModelConfig, build_model
from qpqc.train import ExperimentConfig, train


def main():
    root = Path(tempfile.mkdtemp(prefix="qpqc_demo_"))
    data = root / "data"
    synth_dataset(str(data), (16, 16, 3), class_count=4, per_class=25,
                  seed=0)

    config = ModelConfig(
        "hqnn_parallel", (16, 16, 3), 4, seed=0,
        encoding=EncodingSpec("amplitude"),
        ansatz=AnsatzSpec("no_entanglement", layers=2, seed=0))
    print("trainable parameters:", build_model(config).parameter_count)

    run = ExperimentConfig(model=config, dataset_path=str(data),
                           batch_size=16, epochs=5, patience=5, seed=0,
                           metrics_out_path=str(root / "metrics.csv"))
    for record in train(run):
        print(f"epoch {record.epoch}: train_acc {record.train_acc:.2f} "
              f"val_acc {record.val_acc:.2f}")
    print("metrics written to", root / "metrics.csv")


if __name__ == "__main__":
    main()
