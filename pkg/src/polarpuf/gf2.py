"""Dense GF(2) bit-matrix arithmetic: Kronecker powers, products, rank.

Provides just enough linear algebra to materialize the polar generator
matrix, slice its columns, and run the rank-based leakage audit.  Public
index sets are 1-based throughout; storage is byte-packed (MSB-first)
and immutable after construction.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "BitVector",
    "BitMatrix",
    "kernel_matrix",
    "kronecker_power",
    "generator_matrix",
    "mat_vec_mul",
    "rank_gf2",
    "select_columns",
]


def _as_bit_array(values, ndim: int) -> np.ndarray:
    a = np.asarray(values)
    if a.ndim != ndim:
        raise ValueError(f"expected {ndim}-dimensional bit data, got shape {a.shape}")
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError("entries must be 0 or 1")
    return a.astype(np.uint8)


class BitVector:
    """Immutable vector over GF(2), packed 8 bits per byte (MSB first)."""

    __slots__ = ("_len", "_packed")

    def __init__(self, bits):
        a = _as_bit_array(bits, 1)
        self._len = int(a.size)
        self._packed = np.packbits(a)
        self._packed.flags.writeable = False

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls(np.zeros(n, dtype=np.uint8))

    def __len__(self) -> int:
        return self._len

    def to_array(self) -> np.ndarray:
        return np.unpackbits(self._packed, count=self._len)

    def packed_bytes(self) -> bytes:
        return self._packed.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self._len == other._len and self._packed.tobytes() == other._packed.tobytes()

    def __hash__(self) -> int:
        return hash((self._len, self._packed.tobytes()))

    def __xor__(self, other: "BitVector") -> "BitVector":
        if len(self) != len(other):
            raise ValueError("length mismatch")
        return BitVector(self.to_array() ^ other.to_array())

    def __repr__(self) -> str:
        return f"BitVector(len={self._len})"


class BitMatrix:
    """Immutable row-major bit matrix; storage is ceil(rows*cols/8) bytes."""

    __slots__ = ("_rows", "_cols", "_packed")

    def __init__(self, array2d):
        a = _as_bit_array(array2d, 2)
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("matrix must have at least one row and one column")
        self._rows, self._cols = (int(d) for d in a.shape)
        self._packed = np.packbits(a.ravel())
        self._packed.flags.writeable = False

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    def to_array(self) -> np.ndarray:
        bits = np.unpackbits(self._packed, count=self._rows * self._cols)
        return bits.reshape(self._rows, self._cols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return (
            self._rows == other._rows
            and self._cols == other._cols
            and self._packed.tobytes() == other._packed.tobytes()
        )

    def __hash__(self) -> int:
        return hash((self._rows, self._cols, self._packed.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self._rows}x{self._cols})"


def kernel_matrix() -> BitMatrix:
    """The 2x2 polarization kernel [[1,0],[1,1]]."""
    return BitMatrix([[1, 0], [1, 1]])


def kronecker_power(base: BitMatrix, n: int) -> BitMatrix:
    """n-fold Kronecker power of a 2x2 base; n=0 yields the 1x1 identity."""
    if base.rows != 2 or base.cols != 2:
        raise ValueError(f"base must be 2x2, got {base.rows}x{base.cols}")
    if n < 0:
        raise ValueError("exponent must be non-negative")
    out = np.ones((1, 1), dtype=np.uint8)
    b = base.to_array()
    for _ in range(n):
        out = np.kron(out, b)
    return BitMatrix(out)


def generator_matrix(n: int) -> BitMatrix:
    """G_N = kernel^{kron n}, the natural-order polar generator for N = 2^n."""
    return kronecker_power(kernel_matrix(), n)


def mat_vec_mul(v: BitVector, m: BitMatrix) -> BitVector:
    """Row-vector product v*m over GF(2)."""
    if len(v) != m.rows:
        raise ValueError(f"dimension mismatch: vector length {len(v)} vs {m.rows} rows")
    prod = v.to_array().astype(np.int64) @ m.to_array().astype(np.int64)
    return BitVector((prod & 1).astype(np.uint8))


def rank_gf2(m: BitMatrix) -> int:
    """GF(2) rank via Gaussian elimination (first nonzero pivot per column)."""
    a = m.to_array().copy()
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        below = np.nonzero(a[r + 1 :, c])[0]
        if below.size:
            a[r + 1 + below] ^= a[r]
        r += 1
    return r


def select_columns(m: BitMatrix, indices) -> BitMatrix:
    """Submatrix of the listed columns; indices are 1-based, strictly increasing."""
    idx = np.asarray(list(indices), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("index set must be non-empty")
    if idx.min() < 1 or idx.max() > m.cols:
        raise ValueError(f"column index out of range 1..{m.cols}")
    if not (np.diff(idx) > 0).all():
        raise ValueError("indices must be strictly increasing (no duplicates)")
    return BitMatrix(m.to_array()[:, idx - 1])
