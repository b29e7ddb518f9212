"""Integer lattice quotients of Z^n x (finite cyclic coordinates).

The Smith normal form comes from sympy; everything here is bookkeeping
around its transform matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_decomp


def _as_int_rows(m: Matrix) -> list[list[int]]:
    return [[int(m[i, j]) for j in range(m.cols)] for i in range(m.rows)]


@dataclass(frozen=True)
class LatticeQuotient:
    """The quotient of an abelian coordinate group by a subgroup.

    The ambient group is Z^k x prod Z/m_j, described by ``moduli`` with 0
    marking an infinite coordinate. ``rows`` generate the subgroup.
    Quotient coordinates list the infinite ones first, then the torsion
    ones, whose orders are ``torsion``.
    """

    moduli: tuple[int, ...]
    rows: tuple[tuple[int, ...], ...]
    _v: np.ndarray = field(repr=False, compare=False, default=None)
    _vinv: np.ndarray = field(repr=False, compare=False, default=None)
    _u: tuple = field(repr=False, compare=False, default=())
    _diag: tuple[int, ...] = field(repr=False, compare=False, default=())

    @classmethod
    def build(cls, moduli: Sequence[int], rows: Sequence[Sequence[int]]) -> "LatticeQuotient":
        n = len(moduli)
        rows = tuple(tuple(int(x) for x in r) for r in rows)
        for r in rows:
            if len(r) != n:
                raise ValueError(f"row {r} has length {len(r)}, expected {n}")
        full = [list(r) for r in rows]
        for j, m in enumerate(moduli):
            if m:
                e = [0] * n
                e[j] = m
                full.append(e)
        full = [r for r in full if any(r)]
        if n == 0 or not full:
            v = np.eye(n, dtype=np.int64)
            obj = cls(tuple(moduli), rows, v, v.copy(), (), ())
            object.__setattr__(obj, "_full", ())
            return obj
        s, u, vmat = smith_normal_decomp(Matrix(full), domain=ZZ)
        diag = []
        for i in range(min(s.rows, s.cols)):
            d = int(s[i, i])
            if d == 0:
                break
            diag.append(abs(d))
            if d < 0:
                # keep the diagonal positive by flipping the matching column
                vmat[:, i] = -vmat[:, i]
        v = np.array(_as_int_rows(vmat), dtype=np.int64)
        vinv = np.array(_as_int_rows(vmat.inv()), dtype=np.int64)
        obj = cls(tuple(moduli), rows, v, vinv, tuple(map(tuple, _as_int_rows(u))), tuple(diag))
        object.__setattr__(obj, "_full", tuple(tuple(r) for r in full))
        return obj

    @property
    def rank(self) -> int:
        return len(self._diag)

    @property
    def torsion(self) -> tuple[int, ...]:
        return tuple(d for d in self._diag if d > 1)

    @property
    def free_rank(self) -> int:
        return len(self.moduli) - self.rank

    def _transform(self, vecs: np.ndarray) -> np.ndarray:
        return np.asarray(vecs, dtype=np.int64) @ self._v

    def contains_many(self, vecs: np.ndarray) -> np.ndarray:
        vecs = np.atleast_2d(np.asarray(vecs, dtype=np.int64))
        if vecs.shape[1] == 0:
            return np.ones(len(vecs), dtype=bool)
        y = self._transform(vecs)
        ok = np.ones(len(vecs), dtype=bool)
        for j, d in enumerate(self._diag):
            ok &= y[:, j] % d == 0
        if self.rank < y.shape[1]:
            ok &= np.all(y[:, self.rank:] == 0, axis=1)
        return ok

    def contains(self, vec: Sequence[int]) -> bool:
        return bool(self.contains_many(np.array([vec], dtype=np.int64))[0])

    def coefficients(self, vec: Sequence[int]) -> tuple[int, ...] | None:
        """Integers c with sum c_i rows_i = vec modulo the moduli, or None."""
        if not self.contains(vec):
            return None
        if not self.rows or not any(any(r) for r in self.rows):
            return tuple(0 for _ in self.rows)
        y = [int(t) for t in self._transform(np.array([vec]))[0]]
        sol = [y[j] // d for j, d in enumerate(self._diag)]
        sol += [0] * (len(self._u) - len(sol))
        x = [sum(sol[i] * self._u[i][k] for i in range(len(sol))) for k in range(len(self._u))]
        # columns of U index the nonzero rows of the full relation matrix
        coeffs = [0] * len(self.rows)
        live = [i for i, r in enumerate(self.rows) if any(r)]
        for pos, i in enumerate(live):
            coeffs[i] = x[pos]
        return tuple(coeffs)

    def coords_many(self, vecs: np.ndarray) -> np.ndarray:
        """Quotient coordinates: free part first, then torsion residues."""
        vecs = np.atleast_2d(np.asarray(vecs, dtype=np.int64))
        y = self._transform(vecs) if vecs.shape[1] else vecs
        free = y[:, self.rank:]
        tors = [y[:, j] % d for j, d in enumerate(self._diag) if d > 1]
        parts = [free] + [t[:, None] for t in tors]
        return np.concatenate(parts, axis=1) if parts else np.zeros((len(vecs), 0), np.int64)

    def section_many(self, coords: np.ndarray) -> np.ndarray:
        """Ambient representatives of quotient coordinates (a homomorphic lift on the free part)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=np.int64))
        n = len(self.moduli)
        y = np.zeros((len(coords), n), dtype=np.int64)
        nfree = self.free_rank
        y[:, self.rank:] = coords[:, :nfree]
        t = nfree
        for j, d in enumerate(self._diag):
            if d > 1:
                y[:, j] = coords[:, t]
                t += 1
        out = y @ self._vinv if n else y
        for j, m in enumerate(self.moduli):
            if m:
                out[:, j] %= m
        return out


def kernel_basis(rows: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """A Z-basis of {c : sum c_i rows_i = 0}."""
    rows = [list(map(int, r)) for r in rows]
    if not rows:
        return []
    if not rows[0] or not any(any(r) for r in rows):
        return [tuple(1 if i == j else 0 for j in range(len(rows))) for i in range(len(rows))]
    s, u, _ = smith_normal_decomp(Matrix(rows), domain=ZZ)
    rank = sum(1 for i in range(min(s.rows, s.cols)) if s[i, i] != 0)
    return [tuple(int(u[i, j]) for j in range(u.cols)) for i in range(rank, u.rows)]
