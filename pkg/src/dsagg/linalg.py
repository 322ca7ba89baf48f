"""Dense exact linear algebra over a prime field.

Matrices wrap read-only numpy int64 arrays with entries in [0, q). All
reductions use Gaussian elimination with first-nonzero pivot selection:
arithmetic is exact, so no pivoting heuristics are needed. Random matrices
are drawn from numpy's PCG64 generator seeded explicitly, which keeps every
construction reproducible across runs and platforms.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .gf import FieldMismatchError, PrimeField


class DimensionMismatchError(ValueError):
    """Raised when operand shapes are not conformal."""


def _safe_dot(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """a @ b mod q, accumulating in chunks so int64 never overflows."""
    inner = a.shape[1]
    if inner == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    step = max(1, (2**62) // max(1, (q - 1) ** 2))
    if inner <= step:
        return (a @ b) % q
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for i in range(0, inner, step):
        out = (out + a[:, i : i + step] @ b[i : i + step, :]) % q
    return out


def _row_reduce(arr: np.ndarray, q: int, full: bool) -> tuple[np.ndarray, list[int]]:
    """Row-reduce ``arr`` in place (it must be a fresh writable copy).

    Returns the reduced array and the list of pivot columns. With ``full``
    the result is the unique reduced row-echelon form; otherwise only rows
    below each pivot are cleared, which is enough for rank.
    """
    rows, cols = arr.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(arr[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            arr[[r, p]] = arr[[p, r]]
        inv = pow(int(arr[r, c]), -1, q)
        arr[r] = (arr[r] * inv) % q
        if full:
            targets = np.nonzero(arr[:, c])[0]
            targets = targets[targets != r]
        else:
            targets = r + 1 + np.nonzero(arr[r + 1 :, c])[0]
        if targets.size:
            arr[targets] = (arr[targets] - np.outer(arr[targets, c], arr[r])) % q
        pivots.append(c)
        r += 1
    return arr, pivots


class Matrix:
    """An immutable rows x cols matrix over a prime field."""

    __slots__ = ("field", "data")

    def __init__(self, field: PrimeField, data) -> None:
        arr = np.array(data, dtype=np.int64)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"matrix data must be 2-D, got {arr.ndim}-D")
        arr %= field.q
        arr.setflags(write=False)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("Matrix is immutable")

    # -- construction --------------------------------------------------

    @classmethod
    def zeros(cls, field: PrimeField, rows: int, cols: int) -> "Matrix":
        return cls(field, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, field: PrimeField, n: int) -> "Matrix":
        return cls(field, np.eye(n, dtype=np.int64))

    # -- shape ----------------------------------------------------------

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    # -- arithmetic ------------------------------------------------------

    def _check_field(self, other: "Matrix") -> None:
        if self.field != other.field:
            raise FieldMismatchError(
                f"mixed fields F_{self.field.q} and F_{other.field.q}"
            )

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check_field(other)
        if self.shape != other.shape:
            raise DimensionMismatchError(f"{self.shape} + {other.shape}")
        return Matrix(self.field, self.data + other.data)

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._check_field(other)
        if self.shape != other.shape:
            raise DimensionMismatchError(f"{self.shape} - {other.shape}")
        return Matrix(self.field, self.data - other.data)

    def __neg__(self) -> "Matrix":
        return Matrix(self.field, -self.data)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        self._check_field(other)
        if self.cols != other.rows:
            raise DimensionMismatchError(f"{self.shape} @ {other.shape}")
        return Matrix(self.field, _safe_dot(self.data, other.data, self.field.q))

    def matvec(self, vec) -> np.ndarray:
        """Matrix-vector product; returns a 1-D int64 array in [0, q)."""
        v = self.field.reduce(vec)
        if v.ndim != 1 or v.shape[0] != self.cols:
            raise DimensionMismatchError(
                f"matvec: {self.shape} with vector of length {v.shape}"
            )
        return _safe_dot(self.data, v[:, None], self.field.q)[:, 0]

    def transpose(self) -> "Matrix":
        return Matrix(self.field, self.data.T)

    # -- reductions --------------------------------------------------------

    def rank(self) -> int:
        _, pivots = _row_reduce(self.data.copy(), self.field.q, full=False)
        return len(pivots)

    def rref(self) -> "Matrix":
        """The unique reduced row-echelon form."""
        reduced, _ = _row_reduce(self.data.copy(), self.field.q, full=True)
        return Matrix(self.field, reduced)

    def kernel(self) -> "Matrix":
        """A basis of the right null space, one basis vector per column.

        Satisfies self @ kernel == 0 exactly; the number of columns equals
        cols - rank.
        """
        reduced, pivots = _row_reduce(self.data.copy(), self.field.q, full=True)
        free = [c for c in range(self.cols) if c not in pivots]
        basis = np.zeros((self.cols, len(free)), dtype=np.int64)
        for j, fc in enumerate(free):
            basis[fc, j] = 1
            for i, pc in enumerate(pivots):
                basis[pc, j] = (-reduced[i, fc]) % self.field.q
        return Matrix(self.field, basis)

    # -- comparison / display ------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.field, self.data.tobytes(), self.shape))

    def __repr__(self) -> str:
        return f"Matrix(F_{self.field.q}, {self.rows}x{self.cols})"

    # -- text round trip ---------------------------------------------------

    def to_text(self) -> str:
        """Serialize as a 'rows cols' header plus row-major decimal entries."""
        lines = [f"{self.rows} {self.cols}"]
        for row in self.data:
            lines.append(" ".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, field: PrimeField, text: str) -> "Matrix":
        tokens = text.split()
        if len(tokens) < 2:
            raise ValueError("matrix text needs a 'rows cols' header")
        try:
            rows, cols = int(tokens[0]), int(tokens[1])
        except ValueError as exc:
            raise ValueError(f"bad matrix header {tokens[:2]}") from exc
        body = tokens[2:]
        if rows < 0 or cols < 0 or len(body) != rows * cols:
            raise ValueError(
                f"expected {rows * cols} entries for {rows}x{cols}, got {len(body)}"
            )
        try:
            values = [int(t) for t in body]
        except ValueError as exc:
            raise ValueError("non-integer matrix entry") from exc
        for v in values:
            if not 0 <= v < field.q:
                raise ValueError(f"entry {v} outside [0, {field.q})")
        data = np.array(values, dtype=np.int64).reshape(rows, cols)
        return cls(field, data)


# -- block assembly ----------------------------------------------------------


def vstack(mats: Sequence[Matrix]) -> Matrix:
    """Stack matrices vertically; all must share field and column count."""
    mats = list(mats)
    if not mats:
        raise DimensionMismatchError("vstack of nothing")
    field = mats[0].field
    cols = mats[0].cols
    for m in mats[1:]:
        if m.field != field:
            raise FieldMismatchError("vstack across fields")
        if m.cols != cols:
            raise DimensionMismatchError(f"vstack: {cols} vs {m.cols} columns")
    return Matrix(field, np.vstack([m.data for m in mats]))


def hstack(mats: Sequence[Matrix]) -> Matrix:
    """Concatenate matrices horizontally; all must share field and row count."""
    mats = list(mats)
    if not mats:
        raise DimensionMismatchError("hstack of nothing")
    field = mats[0].field
    rows = mats[0].rows
    for m in mats[1:]:
        if m.field != field:
            raise FieldMismatchError("hstack across fields")
        if m.rows != rows:
            raise DimensionMismatchError(f"hstack: {rows} vs {m.rows} rows")
    return Matrix(field, np.hstack([m.data for m in mats]))


def block(grid: Iterable[Sequence[Matrix]]) -> Matrix:
    """Assemble a matrix from a 2-D grid of conformal blocks."""
    rows = [hstack(row) for row in grid]
    return vstack(rows)


# -- randomness ---------------------------------------------------------------


def random_matrix(
    rows: int,
    cols: int,
    field: PrimeField,
    seed=None,
    rng: np.random.Generator | None = None,
) -> Matrix:
    """A matrix with i.i.d. uniform entries from a seeded PCG64 stream.

    The same seed always yields the same matrix. Pass ``rng`` instead of
    ``seed`` to draw several matrices from one stream.
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(seed))
    data = rng.integers(0, field.q, size=(rows, cols), dtype=np.int64)
    return Matrix(field, data)
