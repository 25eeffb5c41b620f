"""Amplitude-encoding orderings and kernel locality.

A two-qubit gate at position 0 only mixes amplitudes within groups of
four consecutive indices. Under the "squared" ordering those groups are
2x2 pixel blocks, so such a gate is a local 2x2 image kernel; under the
plain "flatten" ordering the same gate mixes pixels from one image row.
"""
import numpy as np

from qpqc.encodings import (build_ordering, mixing_groups,
                            verify_kernel_locality)


def main():
    shape = (8, 8, 1)
    n = 6  # 2^6 = 64 amplitudes

    for kind in ("flatten", "squared", "vhlines"):
        ordering = build_ordering(kind, shape)
        perm = ordering.permutation
        # pixels feeding the first position-0 amplitude group
        group = mixing_groups(0, n)[0]
        pixels = [divmod(int(np.where(perm == g)[0][0]), 8) for g in group]
        print(f"{kind:8s} first group covers pixels {pixels}")

    report = verify_kernel_locality(p=0, n=n, trials=10, seed=0)
    print("locality check:", "ok" if report.passed else "violated",
          f"(worst off-group magnitude {report.max_off_group:.2e})")


if __name__ == "__main__":
    main()
