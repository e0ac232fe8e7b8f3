"""Linear degradation operators on 2-d image grids.

Every operator maps a float64 array of shape ``in_shape`` to one of shape
``out_shape`` and exposes

  * ``apply`` / ``apply_transpose`` -- the map and its exact adjoint under
    the flat Euclidean inner product,
  * ``as_matrix`` -- dense materialisation (column by column through
    ``apply``), guarded by a size cap,
  * ``pseudo_apply`` -- Moore-Penrose pseudo-inverse action, by default
    through a truncated SVD of the dense matrix,
  * ``project`` -- the range-space projector applied to a domain vector,
    P x = A^+ A x.

Average pooling overrides ``pseudo_apply`` with its closed form
(A^+ = s^2 A^T, i.e. block replication), so it works at any size.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

__all__ = [
    "LinearOperator",
    "AvgPoolOperator",
    "GaussianBlurOperator",
    "CompositeOperator",
    "DenseOperator",
    "OperatorTooLarge",
    "avgpool_op",
    "gaussian_blur_op",
    "compose",
    "pseudo_apply",
    "projection_apply",
    "adjoint_mismatch",
]

# Largest dense matrix (in entries) we are willing to materialise / SVD.
DENSE_ENTRY_CAP = 4096 * 4096


class OperatorTooLarge(ValueError):
    """Raised when a dense materialisation would exceed the size cap."""


class LinearOperator:
    """Base class: shape bookkeeping plus dense/SVD fallbacks."""

    def __init__(self, in_shape: tuple[int, int], out_shape: tuple[int, int]):
        self.in_shape = tuple(int(v) for v in in_shape)
        self.out_shape = tuple(int(v) for v in out_shape)
        self._matrix: np.ndarray | None = None
        self._svd: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    # -- required interface -------------------------------------------------
    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_transpose(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- dense route --------------------------------------------------------
    def as_matrix(self) -> np.ndarray:
        """Materialise the operator as an (m, n) matrix, columns via apply."""
        if self._matrix is None:
            n = int(np.prod(self.in_shape))
            m = int(np.prod(self.out_shape))
            if m * n > DENSE_ENTRY_CAP:
                raise OperatorTooLarge(
                    f"dense matrix would hold {m * n} entries "
                    f"(cap {DENSE_ENTRY_CAP}); operator too large for the SVD route"
                )
            cols = np.empty((m, n))
            basis = np.zeros(self.in_shape)
            flat = basis.ravel()
            for j in range(n):
                flat[j] = 1.0
                cols[:, j] = self.apply(basis).ravel()
                flat[j] = 0.0
            self._matrix = cols
        return self._matrix

    def _svd_factors(self):
        if self._svd is None:
            self._svd = np.linalg.svd(self.as_matrix(), full_matrices=False)
        return self._svd

    def pseudo_apply(self, y: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        """Moore-Penrose action A^+ y via truncated SVD.

        Singular values below ``tol * s_max`` are treated as zero.
        """
        self._check_shape(y, self.out_shape, "pseudo_apply input")
        u, s, vt = self._svd_factors()
        cut = tol * (s[0] if s.size else 0.0)
        inv = np.where(s > cut, 1.0 / np.where(s > cut, s, 1.0), 0.0)
        z = vt.T @ (inv * (u.T @ y.ravel()))
        return z.reshape(self.in_shape)

    def project(self, x: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        """Orthogonal projection onto the row space: A^+ A x."""
        self._check_shape(x, self.in_shape, "project input")
        return self.pseudo_apply(self.apply(x), tol=tol)

    # -- helpers ------------------------------------------------------------
    def _check_shape(self, arr: np.ndarray, shape: tuple[int, int], what: str) -> None:
        if arr.shape != shape:
            raise ValueError(f"{what} has shape {arr.shape}, expected {shape}")


class AvgPoolOperator(LinearOperator):
    """Non-overlapping s x s block averaging (downsampling by s)."""

    def __init__(self, h: int, w: int, s: int):
        if s < 1:
            raise ValueError("pool factor must be >= 1")
        if h % s or w % s:
            raise ValueError(f"image {h}x{w} not divisible by pool factor {s}")
        super().__init__((h, w), (h // s, w // s))
        self.s = int(s)

    def apply(self, x: np.ndarray) -> np.ndarray:
        self._check_shape(x, self.in_shape, "apply input")
        s = self.s
        h2, w2 = self.out_shape
        return x.reshape(h2, s, w2, s).mean(axis=(1, 3))

    def apply_transpose(self, y: np.ndarray) -> np.ndarray:
        self._check_shape(y, self.out_shape, "apply_transpose input")
        return np.kron(y, np.full((self.s, self.s), 1.0 / self.s**2))

    def pseudo_apply(self, y: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        """Closed form: rows are orthogonal with norm 1/s, so A^+ = s^2 A^T.

        This is plain block replication of the low-resolution pixels and
        needs no dense matrix, so it has no size cap.
        """
        self._check_shape(y, self.out_shape, "pseudo_apply input")
        return np.kron(y, np.ones((self.s, self.s)))


def _reflect_indices(n: int, pad: int) -> np.ndarray:
    """Source index for each position of a symmetrically padded axis.

    Matches ``np.pad(..., mode="symmetric")``: the edge sample is repeated
    (half-sample reflection), period 2n.
    """
    if pad >= n:
        raise ValueError("padding must be smaller than the axis length")
    m = np.arange(-pad, n + pad)
    q = np.mod(m, 2 * n)
    return np.where(q >= n, 2 * n - 1 - q, q)


class GaussianBlurOperator(LinearOperator):
    """Truncated, normalised Gaussian convolution with symmetric padding.

    ``apply`` pads by k // 2 (edge-replicating reflection) and correlates
    with the kernel, so shapes are preserved.  The adjoint is the exact
    transpose of that composition: full convolution followed by folding
    the padded border back with accumulation.
    """

    def __init__(self, h: int, w: int, sigma: float, k: int):
        if sigma <= 0.0:
            raise ValueError("blur sigma must be positive")
        if k < 1 or k % 2 == 0:
            raise ValueError("kernel size must be odd and >= 1")
        if k > min(h, w):
            raise ValueError(f"kernel size {k} exceeds image extent {min(h, w)}")
        super().__init__((h, w), (h, w))
        self.sigma = float(sigma)
        self.k = int(k)
        r = np.arange(k, dtype=np.float64) - (k - 1) / 2.0
        g = np.exp(-0.5 * (r / sigma) ** 2)
        kern = np.outer(g, g)
        self.kernel = kern / kern.sum()
        p = k // 2
        self._pad = p
        self._rows = _reflect_indices(h, p)
        self._cols = _reflect_indices(w, p)

    def apply(self, x: np.ndarray) -> np.ndarray:
        self._check_shape(x, self.in_shape, "apply input")
        p = self._pad
        if p == 0:
            return x * self.kernel[0, 0]
        xp = np.pad(x, p, mode="symmetric")
        # The kernel is symmetric, so correlation equals convolution.
        return convolve2d(xp, self.kernel, mode="valid")

    def apply_transpose(self, y: np.ndarray) -> np.ndarray:
        self._check_shape(y, self.out_shape, "apply_transpose input")
        p = self._pad
        if p == 0:
            return y * self.kernel[0, 0]
        full = convolve2d(y, self.kernel, mode="full")
        out = np.zeros(self.in_shape)
        np.add.at(out, (self._rows[:, None], self._cols[None, :]), full)
        return out


class CompositeOperator(LinearOperator):
    """Chain of operators applied left to right: compose([A, B]) is B(A(x))."""

    def __init__(self, ops: list[LinearOperator]):
        if not ops:
            raise ValueError("composition needs at least one operator")
        for a, b in zip(ops, ops[1:]):
            if a.out_shape != b.in_shape:
                raise ValueError(
                    f"cannot chain {a.out_shape} output into {b.in_shape} input"
                )
        super().__init__(ops[0].in_shape, ops[-1].out_shape)
        self.ops = list(ops)

    def apply(self, x: np.ndarray) -> np.ndarray:
        self._check_shape(x, self.in_shape, "apply input")
        for op in self.ops:
            x = op.apply(x)
        return x

    def apply_transpose(self, y: np.ndarray) -> np.ndarray:
        self._check_shape(y, self.out_shape, "apply_transpose input")
        for op in reversed(self.ops):
            y = op.apply_transpose(y)
        return y


class DenseOperator(LinearOperator):
    """Arbitrary matrix acting between two grids (mainly for tests)."""

    def __init__(self, matrix: np.ndarray, in_shape: tuple[int, int], out_shape: tuple[int, int]):
        matrix = np.asarray(matrix, dtype=np.float64)
        m = int(np.prod(out_shape))
        n = int(np.prod(in_shape))
        if matrix.shape != (m, n):
            raise ValueError(f"matrix shape {matrix.shape} incompatible with {(m, n)}")
        super().__init__(in_shape, out_shape)
        self._matrix = matrix

    def apply(self, x: np.ndarray) -> np.ndarray:
        self._check_shape(x, self.in_shape, "apply input")
        return (self._matrix @ x.ravel()).reshape(self.out_shape)

    def apply_transpose(self, y: np.ndarray) -> np.ndarray:
        self._check_shape(y, self.out_shape, "apply_transpose input")
        return (self._matrix.T @ y.ravel()).reshape(self.in_shape)


# -- module-level conveniences ---------------------------------------------

def avgpool_op(h: int, w: int, s: int) -> AvgPoolOperator:
    return AvgPoolOperator(h, w, s)


def gaussian_blur_op(h: int, w: int, sigma: float, k: int) -> GaussianBlurOperator:
    return GaussianBlurOperator(h, w, sigma, k)


def compose(*ops: LinearOperator) -> CompositeOperator:
    return CompositeOperator(list(ops))


def pseudo_apply(A: LinearOperator, y: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    return A.pseudo_apply(y, tol=tol)


def projection_apply(A: LinearOperator, x: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    return A.project(x, tol=tol)


def adjoint_mismatch(A: LinearOperator, rng: np.random.Generator, trials: int = 10) -> float:
    """Max relative defect of <A x, y> == <x, A^T y> over random probes."""
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(A.in_shape)
        y = rng.standard_normal(A.out_shape)
        lhs = float(np.vdot(A.apply(x), y))
        rhs = float(np.vdot(x, A.apply_transpose(y)))
        scale = max(abs(lhs), abs(rhs), 1e-30)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst
