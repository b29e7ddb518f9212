"""A closed catalog of finitely generated nilpotent groups with exact arithmetic.

Elements are plain tuples of Python ints laid out in Mal'cev coordinates.
Heisenberg elements are triples (a, b, c) multiplied by

    (a, b, c)(a', b', c') = (a + a', b + b', c + c' - a' b)

so that with a = (1,0,0), b = (0,1,0), c = (0,0,1) the commutator
a^-1 b^-1 a b equals c. Every group also has a numpy path that works on
arrays of elements, optionally reduced modulo a period N.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import GroupMismatchError, ParseError
from .intlin import LatticeQuotient

Element = tuple[int, ...]


@dataclass(frozen=True)
class Block:
    kind: str  # "Z", "C" or "H"
    offset: int
    order: int = 0  # cyclic order for "C"


@dataclass(frozen=True)
class GroupSpec:
    kind: str  # "free", "cyclic", "heisenberg", "product", "sum"
    n: int = 0
    factors: tuple["GroupSpec", ...] = ()

    def __post_init__(self):
        if self.kind == "free" and self.n < 0:
            raise ValueError("free-abelian rank must be >= 0")
        if self.kind == "cyclic" and self.n < 1:
            raise ValueError("cyclic order must be >= 1")
        if self.kind == "product" and not self.factors:
            raise ValueError("direct products need at least one factor")
        if self.kind == "sum" and (self.n < 1 or len(self.factors) != 1):
            raise ValueError("truncated sums need one base and count >= 1")

    # -- structure -------------------------------------------------------

    @cached_property
    def blocks(self) -> tuple[Block, ...]:
        out: list[Block] = []

        def walk(spec: GroupSpec, offset: int) -> int:
            if spec.kind == "free":
                for j in range(spec.n):
                    out.append(Block("Z", offset + j))
                return offset + spec.n
            if spec.kind == "cyclic":
                out.append(Block("C", offset, spec.n))
                return offset + 1
            if spec.kind == "heisenberg":
                out.append(Block("H", offset))
                return offset + 3
            parts = spec.factors if spec.kind == "product" else spec.factors * spec.n
            for f in parts:
                offset = walk(f, offset)
            return offset

        walk(self, 0)
        return tuple(out)

    @cached_property
    def dim(self) -> int:
        return sum(3 if b.kind == "H" else 1 for b in self.blocks)

    @cached_property
    def moduli(self) -> tuple[int, ...]:
        """Per-coordinate modulus: the cyclic order, or 0 for an infinite coordinate."""
        mods = [0] * self.dim
        for b in self.blocks:
            if b.kind == "C":
                mods[b.offset] = b.order
        return tuple(mods)

    @cached_property
    def heis_offsets(self) -> tuple[int, ...]:
        return tuple(b.offset for b in self.blocks if b.kind == "H")

    @property
    def is_abelian(self) -> bool:
        return not self.heis_offsets

    @property
    def nilpotency_class(self) -> int:
        if self.heis_offsets:
            return 2
        return 1 if any(b.kind == "Z" or b.order > 1 for b in self.blocks) else 0

    @property
    def identity(self) -> Element:
        return (0,) * self.dim

    # -- scalar arithmetic -----------------------------------------------

    def check(self, g: Sequence[int]) -> Element:
        if len(g) != self.dim:
            raise GroupMismatchError(f"{tuple(g)} is not an element of {self} (dimension {self.dim})")
        return self.reduce(g)

    def reduce(self, g: Sequence[int]) -> Element:
        return tuple(int(x) % m if m else int(x) for x, m in zip(g, self.moduli))

    def mul(self, g: Sequence[int], h: Sequence[int]) -> Element:
        g, h = self.check(g), self.check(h)
        out = [x + y for x, y in zip(g, h)]
        for o in self.heis_offsets:
            out[o + 2] -= h[o] * g[o + 1]
        return self.reduce(out)

    def inv(self, g: Sequence[int]) -> Element:
        g = self.check(g)
        out = [-x for x in g]
        for o in self.heis_offsets:
            out[o + 2] = -g[o + 2] - g[o] * g[o + 1]
        return self.reduce(out)

    def pow(self, g: Sequence[int], n: int) -> Element:
        g = self.check(g)
        out = [n * x for x in g]
        for o in self.heis_offsets:
            out[o + 2] = n * g[o + 2] - g[o] * g[o + 1] * (n * (n - 1) // 2)
        return self.reduce(out)

    def conj(self, g: Sequence[int], h: Sequence[int]) -> Element:
        """g h g^-1."""
        return self.mul(self.mul(g, h), self.inv(g))

    def commutator(self, g: Sequence[int], h: Sequence[int]) -> Element:
        """g^-1 h^-1 g h."""
        return self.mul(self.mul(self.inv(g), self.inv(h)), self.mul(g, h))

    def product(self, elems: Iterable[Sequence[int]]) -> Element:
        out = self.identity
        for e in elems:
            out = self.mul(out, e)
        return out

    # -- vectorized arithmetic -------------------------------------------

    def reduce_arr(self, x: np.ndarray, period: int | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        mods = np.array([m if m else (period or 0) for m in self.moduli], dtype=np.int64)
        if mods.size and np.any(mods):
            safe = np.where(mods == 0, 1, mods)
            x = np.where(mods == 0, x, x % safe)
        return x

    def mul_arr(self, g: np.ndarray, h: np.ndarray, period: int | None = None) -> np.ndarray:
        g = np.asarray(g, dtype=np.int64)
        h = np.asarray(h, dtype=np.int64)
        out = g + h
        for o in self.heis_offsets:
            out[..., o + 2] -= h[..., o] * g[..., o + 1]
        return self.reduce_arr(out, period)

    def inv_arr(self, g: np.ndarray, period: int | None = None) -> np.ndarray:
        g = np.asarray(g, dtype=np.int64)
        out = -g
        for o in self.heis_offsets:
            out[..., o + 2] = -g[..., o + 2] - g[..., o] * g[..., o + 1]
        return self.reduce_arr(out, period)

    def pow_arr(self, g: Sequence[int], n: np.ndarray, period: int | None = None) -> np.ndarray:
        """Powers g^n for an integer array n; returns shape n.shape + (dim,)."""
        g = np.asarray(self.check(g), dtype=np.int64)
        n = np.asarray(n, dtype=np.int64)
        out = n[..., None] * g
        for o in self.heis_offsets:
            out[..., o + 2] = n * g[o + 2] - g[o] * g[o + 1] * (n * (n - 1) // 2)
        return self.reduce_arr(out, period)

    # -- text form -------------------------------------------------------

    def __str__(self) -> str:
        return format_group(self)


def free_abelian(n: int) -> GroupSpec:
    return GroupSpec("free", n)


def cyclic(m: int) -> GroupSpec:
    return GroupSpec("cyclic", m)


def heisenberg() -> GroupSpec:
    return GroupSpec("heisenberg")


def direct_product(*factors: GroupSpec) -> GroupSpec:
    flat: list[GroupSpec] = []
    for f in factors:
        flat.extend(f.factors if f.kind == "product" else (f,))
    return flat[0] if len(flat) == 1 else GroupSpec("product", factors=tuple(flat))


def truncated_sum(base: GroupSpec, count: int) -> GroupSpec:
    return GroupSpec("sum", count, (base,))


def hirsch_length(G: GroupSpec) -> int:
    if G.kind == "free":
        return G.n
    if G.kind == "cyclic":
        return 0
    if G.kind == "heisenberg":
        return 3
    if G.kind == "product":
        return sum(hirsch_length(f) for f in G.factors)
    return G.n * hirsch_length(G.factors[0])


def format_group(G: GroupSpec) -> str:
    if G.kind == "free":
        return "Z" if G.n == 1 else f"Z^{G.n}"
    if G.kind == "cyclic":
        return f"C{G.n}"
    if G.kind == "heisenberg":
        return "heisenberg"
    if G.kind == "sum":
        return f"sum({format_group(G.factors[0])}, {G.n})"
    return " x ".join(format_group(f) for f in G.factors)


def _split_top(text: str) -> list[str]:
    parts, depth, start, i = [], 0, 0, 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError(f"unbalanced parentheses in {text!r}")
        elif depth == 0:
            m = re.match(r"\s+x\s+", text[i:])
            if m:
                parts.append(text[start:i])
                i += m.end()
                start = i
                continue
        i += 1
    if depth:
        raise ParseError(f"unbalanced parentheses in {text!r}")
    parts.append(text[start:])
    return [p.strip() for p in parts]


def parse_group(text: str) -> GroupSpec:
    text = text.strip()
    if not text:
        raise ParseError("empty group text")
    parts = _split_top(text)
    if len(parts) > 1:
        return direct_product(*(parse_group(p) for p in parts))
    if text == "heisenberg":
        return heisenberg()
    if text == "Z":
        return free_abelian(1)
    if m := re.fullmatch(r"Z\^(\d+)", text):
        return free_abelian(int(m.group(1)))
    if m := re.fullmatch(r"C(\d+)", text):
        if int(m.group(1)) < 1:
            raise ParseError("cyclic order must be >= 1")
        return cyclic(int(m.group(1)))
    if m := re.fullmatch(r"sum\((.*),\s*(\d+)\)", text):
        if int(m.group(2)) < 1:
            raise ParseError("sum count must be >= 1")
        return truncated_sum(parse_group(m.group(1)), int(m.group(2)))
    if text.startswith("(") and text.endswith(")"):
        return parse_group(text[1:-1])
    raise ParseError(f"unknown group {text!r}")


def parse_element(text: str) -> Element:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise ParseError(f"element must be a parenthesized tuple: {text!r}")
    body = text[1:-1].strip()
    if not body:
        return ()
    try:
        return tuple(int(t) for t in body.split(","))
    except ValueError as exc:
        raise ParseError(f"bad element {text!r}") from exc


def format_element(g: Sequence[int]) -> str:
    return "(" + ",".join(str(int(x)) for x in g) + ")"


# -- center and central quotient -----------------------------------------


@dataclass(frozen=True)
class CenterDecomposition:
    """zeta(G) as an abelian coordinate group, G/zeta(G), and maps between them.

    The center's coordinates list, block by block, each Z coordinate, each
    cyclic coordinate and the c coordinate of each Heisenberg factor. The
    quotient keeps (a, b) of each Heisenberg factor. ``lift`` picks the
    representative whose central coordinates are all zero.
    """

    group: GroupSpec
    center: GroupSpec
    quotient: GroupSpec
    center_coords: tuple[int, ...]  # positions in G of the center's coordinates
    quotient_coords: tuple[int, ...]

    def iso(self, v: Sequence[int]) -> Element:
        v = self.center.check(v)
        out = [0] * self.group.dim
        for pos, x in zip(self.center_coords, v):
            out[pos] = x
        return self.group.reduce(out)

    def iso_inv(self, g: Sequence[int]) -> Element:
        g = self.group.check(g)
        if any(g[p] for p in self.quotient_coords):
            raise GroupMismatchError(f"{g} is not central")
        return tuple(g[p] for p in self.center_coords)

    def project(self, g: Sequence[int]) -> Element:
        g = self.group.check(g)
        return tuple(g[p] for p in self.quotient_coords)

    def lift(self, q: Sequence[int]) -> Element:
        q = self.quotient.check(q)
        out = [0] * self.group.dim
        for pos, x in zip(self.quotient_coords, q):
            out[pos] = x
        return tuple(out)

    def iso_arr(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64)
        out = np.zeros(v.shape[:-1] + (self.group.dim,), dtype=np.int64)
        out[..., list(self.center_coords)] = v
        return out

    def project_arr(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g, dtype=np.int64)[..., list(self.quotient_coords)]

    def lift_arr(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=np.int64)
        out = np.zeros(q.shape[:-1] + (self.group.dim,), dtype=np.int64)
        out[..., list(self.quotient_coords)] = q
        return out

    def central_part_arr(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g, dtype=np.int64)[..., list(self.center_coords)]


def center_decomposition(G: GroupSpec) -> CenterDecomposition:
    center_factors: list[GroupSpec] = []
    ccoords: list[int] = []
    qcoords: list[int] = []
    for b in G.blocks:
        if b.kind == "Z":
            center_factors.append(free_abelian(1))
            ccoords.append(b.offset)
        elif b.kind == "C":
            center_factors.append(cyclic(b.order))
            ccoords.append(b.offset)
        else:
            center_factors.append(free_abelian(1))
            ccoords.append(b.offset + 2)
            qcoords.extend((b.offset, b.offset + 1))
    center = _merge_free(center_factors) if center_factors else free_abelian(0)
    quotient = free_abelian(len(qcoords))
    return CenterDecomposition(G, center, quotient, tuple(ccoords), tuple(qcoords))


def _merge_free(factors: list[GroupSpec]) -> GroupSpec:
    merged: list[GroupSpec] = []
    for f in factors:
        if f.kind == "free" and merged and merged[-1].kind == "free":
            merged[-1] = free_abelian(merged[-1].n + f.n)
        else:
            merged.append(f)
    return direct_product(*merged)


# -- subgroups ------------------------------------------------------------


@dataclass(frozen=True)
class Subgroup:
    """The subgroup of ``ambient`` generated by ``generators``.

    Membership is three-valued: True, False, or None when the bounded
    search could not decide. Subgroups whose generators all sit in one
    additive slice (inside each Heisenberg factor either every generator
    has b = 0 or every generator has a = 0) are decided exactly by lattice
    arithmetic.
    """

    ambient: GroupSpec
    generators: tuple[Element, ...] = ()

    def __post_init__(self):
        gens = tuple(self.ambient.check(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)

    @cached_property
    def _slice(self) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
        """(kept coordinates, coordinates forced to zero) or None."""
        keep: list[int] = []
        zero: list[int] = []
        for b in self.ambient.blocks:
            if b.kind != "H":
                keep.append(b.offset)
                continue
            o = b.offset
            if all(g[o + 1] == 0 for g in self.generators):
                keep.extend((o, o + 2))
                zero.append(o + 1)
            elif all(g[o] == 0 for g in self.generators):
                keep.extend((o + 1, o + 2))
                zero.append(o)
            else:
                return None
        return tuple(keep), tuple(zero)

    @cached_property
    def _lattice(self) -> LatticeQuotient | None:
        if self._slice is None:
            return None
        keep, _ = self._slice
        mods = [self.ambient.moduli[k] for k in keep]
        rows = [[g[k] for k in keep] for g in self.generators]
        return LatticeQuotient.build(mods, rows)

    @cached_property
    def _abelianization(self) -> tuple[tuple[int, ...], LatticeQuotient]:
        coords = [p for p in range(self.ambient.dim)
                  if not any(p == o + 2 for o in self.ambient.heis_offsets)]
        mods = [self.ambient.moduli[k] for k in coords]
        rows = [[g[k] for k in coords] for g in self.generators]
        return tuple(coords), LatticeQuotient.build(mods, rows)

    @property
    def is_exact(self) -> bool:
        return self._lattice is not None

    def member_many(self, elems: np.ndarray) -> np.ndarray:
        """Vectorized exact membership; only for slice subgroups."""
        if self._lattice is None:
            raise ValueError("vectorized membership needs a slice subgroup")
        elems = np.atleast_2d(np.asarray(elems, dtype=np.int64))
        keep, zero = self._slice
        ok = np.all(elems[:, list(zero)] == 0, axis=1) if zero else np.ones(len(elems), bool)
        if keep:
            ok &= self._lattice.contains_many(elems[:, list(keep)])
        return ok

    def contains(self, g: Sequence[int], bound: int | None = None) -> bool | None:
        g = self.ambient.check(g)
        if self._lattice is not None:
            return bool(self.member_many(np.array([g], dtype=np.int64))[0])
        coords, ab = self._abelianization
        if not ab.contains([g[k] for k in coords]):
            return False
        if bound is None:
            return None
        return True if self._ball_search(g, bound) else None

    def _ball_search(self, target: Element, bound: int) -> bool:
        G = self.ambient
        steps = list(self.generators) + [G.inv(h) for h in self.generators]
        seen = {G.identity}
        queue = deque([G.identity])
        while queue:
            cur = queue.popleft()
            if cur == target:
                return True
            for s in steps:
                nxt = G.mul(cur, s)
                if nxt not in seen and all(abs(x) <= bound for x in nxt):
                    seen.add(nxt)
                    queue.append(nxt)
        return False

    def conjugate(self, g: Sequence[int]) -> "Subgroup":
        return Subgroup(self.ambient, tuple(self.ambient.conj(g, h) for h in self.generators))

    def contains_subgroup(self, other: "Subgroup", bound: int | None = None) -> bool | None:
        verdicts = [self.contains(h, bound) for h in other.generators]
        if any(v is False for v in verdicts):
            return False
        return None if any(v is None for v in verdicts) else True

    def equals(self, other: "Subgroup", bound: int | None = None) -> bool | None:
        a = self.contains_subgroup(other, bound)
        b = other.contains_subgroup(self, bound)
        if a is False or b is False:
            return False
        return None if a is None or b is None else True


def trivial_subgroup(G: GroupSpec) -> Subgroup:
    return Subgroup(G, ())


# -- the conjugacy demo ----------------------------------------------------


def hx_subgroup(x: Sequence[int]) -> Subgroup:
    """H_x inside sum(heisenberg, N): generated by a_i^-1 c_i^x(i) for i < N."""
    n = len(x)
    if n < 1:
        raise ValueError("word length must be >= 1")
    G = truncated_sum(heisenberg(), n)
    gens = []
    for i, bit in enumerate(x):
        g = [0] * G.dim
        g[3 * i] = -1
        g[3 * i + 2] = int(bit)
        gens.append(tuple(g))
    return Subgroup(G, tuple(gens))


def hx_word(H: Subgroup) -> tuple[int, ...]:
    """Recover x from a subgroup produced by hx_subgroup."""
    G = H.ambient
    if G.kind != "sum" or G.factors[0].kind != "heisenberg" or len(H.generators) != G.n:
        raise GroupMismatchError("not an H_x subgroup")
    word = []
    for i, g in enumerate(H.generators):
        expect = [0] * G.dim
        expect[3 * i] = -1
        expect[3 * i + 2] = g[3 * i + 2]
        if tuple(expect) != g:
            raise GroupMismatchError(f"generator {i} is not of the form a_i^-1 c_i^x(i)")
        word.append(g[3 * i + 2])
    return tuple(word)


@dataclass(frozen=True)
class ConjugatorResult:
    status: str  # "found", "none" or "inconclusive"
    element: Element | None = None
    reason: str = ""
    checks: tuple[tuple[str, bool | None], ...] = field(default=())


def conjugator_search(Hx: Subgroup, Hy: Subgroup, bound: int,
                      support: Iterable[int] | None = None) -> ConjugatorResult:
    """Find g with g H_x g^-1 = H_y, searching over g whose coordinates are within ``bound``.

    Conjugating a_i^-1 c_i^x by g adds the b_i coordinate of g to the
    exponent of c_i, and the factors commute, so g works exactly when its
    b_i coordinate is y(i) - x(i) for every i. With ``support`` given, g
    must be the identity outside those factors.
    """
    x, y = hx_word(Hx), hx_word(Hy)
    if len(x) != len(y):
        raise GroupMismatchError("H_x and H_y live over different word lengths")
    G = Hx.ambient
    allowed = set(range(len(x))) if support is None else set(support)
    g = [0] * G.dim
    for i, (xi, yi) in enumerate(zip(x, y)):
        shift = yi - xi
        if shift and i not in allowed:
            return ConjugatorResult("none", reason=f"x and y differ at {i}, outside the support")
        if abs(shift) > bound:
            return ConjugatorResult("inconclusive", reason=f"needs |b_{i}| = {abs(shift)} > bound {bound}")
        g[3 * i + 1] = shift
    g = tuple(g)
    ginv = G.inv(g)
    checks = []
    for k, h in enumerate(Hx.generators):
        checks.append((f"g h{k} g^-1 in H_y", Hy.contains(G.conj(g, h), bound)))
    for k, h in enumerate(Hy.generators):
        checks.append((f"g^-1 h'{k} g in H_x", Hx.contains(G.conj(ginv, h), bound)))
    if all(v is True for _, v in checks):
        return ConjugatorResult("found", g, checks=tuple(checks))
    if any(v is False for _, v in checks):
        return ConjugatorResult("none", reason="certification refuted", checks=tuple(checks))
    return ConjugatorResult("inconclusive", reason="membership undecided within bound", checks=tuple(checks))
