"""Frame-potential expressibility of the three QAOA-style encodings.

Lower ratio to the Haar value means more expressible. The Z variant is
consistently the least expressible of the three.
"""
from qpqc.encodings import EncodingSpec
from qpqc.expressibility import estimate_frame_potential


def main():
    n, t, pairs = 4, 1, 2000
    for kind in ("qaoa_x", "qaoa_y", "qaoa_z"):
        est = estimate_frame_potential(EncodingSpec(kind), n, t, pairs,
                                       input_sampler_seed=0)
        print(f"{kind}: F = {est.mean:.5f} +- {est.std_error:.5f}, "
              f"ratio to Haar = {est.ratio:.2f}")

    haar = estimate_frame_potential(None, n, t, pairs,
                                    input_sampler_seed=0)
    print(f"haar self-test: ratio = {haar.ratio:.3f} (should be ~1)")


if __name__ == "__main__":
    main()
