"""Tour of the linear observation operators and the wavelet split.

Builds pooling, blur, and composed degradations; verifies the adjoint
and pseudo-inverse identities numerically; and shows how the orthonormal
wavelet transform separates an image into a coarse approximation and
detail bands that the forward guidance loss works on.
"""

import numpy as np

from mcslab import (
    adjoint_mismatch,
    avgpool_op,
    compose,
    detail_energy,
    gaussian_blur_op,
    haar_decompose,
    haar_reconstruct,
)


def main():
    rng = np.random.default_rng(0)

    print("average pooling 16x16 -> 2x2 (s = 8):")
    A = avgpool_op(16, 16, 8)
    x = rng.random((16, 16))
    y = A.apply(x)
    print(f"  measurement        : {y.ravel().round(4)}")
    print(f"  adjoint mismatch   : {adjoint_mismatch(A, rng):.2e}")
    lift = A.pseudo_apply(y)
    print(f"  lift A^+ y         : block replication, consistency "
          f"|A A^+ y - y| = {np.max(np.abs(A.apply(lift) - y)):.2e}")

    print("\nGaussian blur 16x16 (sigma = 1.5):")
    B = gaussian_blur_op(16, 16, 1.5, 9)
    print(f"  adjoint mismatch   : {adjoint_mismatch(B, rng):.2e}")
    print(f"  constant invariance: blur(1) deviates by "
          f"{np.max(np.abs(B.apply(np.ones((16, 16))) - 1.0)):.2e}")

    print("\ncomposed degradation blur -> pool:")
    C = compose(B, A)
    print(f"  shapes             : {C.in_shape} -> {C.out_shape}")
    print(f"  adjoint mismatch   : {adjoint_mismatch(C, rng):.2e}")
    P = C.project(x)
    print(f"  projection idempotency |P(Px) - Px| = "
          f"{np.max(np.abs(C.project(P) - P)):.2e}")

    print("\northonormal wavelet split of a striped image:")
    stripes = np.tile(np.array([1.0, 0.0]), (16, 8))
    bands = haar_decompose(stripes)
    total = float(np.sum(stripes**2))
    print(f"  total energy       : {total:.3f}")
    print(f"  approximation part : {float(np.sum(bands.low**2)):.3f}")
    print(f"  detail part        : {detail_energy(stripes):.3f}")
    print(f"  round-trip error   : "
          f"{np.max(np.abs(haar_reconstruct(bands) - stripes)):.2e}")
    print("  (vertical stripes put half their energy into detail bands;")
    print("   a constant image would put all of it into the approximation)")


if __name__ == "__main__":
    main()
