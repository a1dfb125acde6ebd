"""Small dense matrices with :class:`ScalarPoly` entries."""
from __future__ import annotations

from typing import Sequence

from .symscalar import ScalarPoly


class Matrix:
    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence]):
        self.rows = tuple(tuple(ScalarPoly.lift(v) for v in row) for row in rows)
        n = len(self.rows[0]) if self.rows else 0
        if any(len(r) != n for r in self.rows):
            raise ValueError("ragged matrix")

    @classmethod
    def zeros(cls, n: int, m: int | None = None) -> "Matrix":
        m = n if m is None else m
        return cls([[0] * m for _ in range(n)])

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), (len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij) -> ScalarPoly:
        i, j = ij
        return self.rows[i][j]

    def entries(self):
        for i, row in enumerate(self.rows):
            for j, v in enumerate(row):
                yield i, j, v

    def is_zero(self) -> bool:
        return all(not v for row in self.rows for v in row)

    def __add__(self, other: "Matrix") -> "Matrix":
        return Matrix([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other: "Matrix") -> "Matrix":
        return Matrix([[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self.rows])

    def __matmul__(self, other: "Matrix") -> "Matrix":
        n, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise ValueError("shape mismatch")
        out = []
        for i in range(n):
            row = []
            for j in range(m):
                s = ScalarPoly()
                for l in range(k):
                    a = self.rows[i][l]
                    if a:
                        b = other.rows[l][j]
                        if b:
                            s = s + a * b
                row.append(s)
            out.append(row)
        return Matrix(out)

    def scale(self, k) -> "Matrix":
        k = ScalarPoly.lift(k)
        return Matrix([[a * k for a in r] for r in self.rows])

    __mul__ = scale
    __rmul__ = scale

    def __truediv__(self, k) -> "Matrix":
        return Matrix([[a / k for a in r] for r in self.rows])

    def map(self, fn) -> "Matrix":
        return Matrix([[fn(a) for a in r] for r in self.rows])

    def diff(self, c) -> "Matrix":
        return self.map(lambda a: a.diff(c))

    def subs(self, bindings) -> "Matrix":
        return self.map(lambda a: a.subs(bindings))

    def transpose(self) -> "Matrix":
        return Matrix(list(zip(*self.rows)))

    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def to_json(self) -> list[list[str]]:
        return [[v.to_text() for v in r] for r in self.rows]

    def to_text(self) -> str:
        return "[" + ", ".join("[" + ", ".join(v.to_text() for v in r) + "]" for r in self.rows) + "]"

    __str__ = to_text

    def __repr__(self):
        return f"Matrix({self.to_text()})"


def commutator(a: Matrix, b: Matrix) -> Matrix:
    return a @ b - b @ a


def inverse(a: Matrix) -> Matrix:
    """Gauss-Jordan inverse for matrices with constant entries."""
    n, m = a.shape
    if n != m:
        raise ValueError("not square")
    aug = [[a[i, j].constant_value() for j in range(n)] + [1 if i == j else 0 for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return Matrix([row[n:] for row in aug])
