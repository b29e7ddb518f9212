"""Rectangles in Z^l x Gamma with floor scaling about a genuine center.

A Rect is a center in Z^l plus a radius vector; its torsion coordinate is
unrestricted, so the point set is a box times all of Gamma. Axis indices in
the public API run from 1 to l.
"""

from __future__ import annotations

import itertools
import math
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, ParseError, ShapeError

DEFAULT_BUDGET = 5_000_000


def as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Rect:
    center: tuple[int, ...]
    radius: tuple[int, ...]
    gamma: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(int(c) for c in self.center))
        object.__setattr__(self, "radius", tuple(int(r) for r in self.radius))
        object.__setattr__(self, "gamma", tuple(int(m) for m in self.gamma))
        if len(self.center) != len(self.radius):
            raise ShapeError("center and radius lengths differ")
        if any(r < 0 for r in self.radius):
            raise ShapeError(f"negative radius {self.radius}")
        if any(m < 1 for m in self.gamma):
            raise ShapeError(f"torsion orders must be >= 1: {self.gamma}")

    @property
    def ell(self) -> int:
        return len(self.radius)

    @property
    def is_centered(self) -> bool:
        return not any(self.center)

    @property
    def lo(self) -> tuple[int, ...]:
        return tuple(c - r for c, r in zip(self.center, self.radius))

    @property
    def hi(self) -> tuple[int, ...]:
        return tuple(c + r for c, r in zip(self.center, self.radius))

    @property
    def gamma_order(self) -> int:
        return math.prod(self.gamma)

    def __str__(self) -> str:
        return format_rect(self)


def rec(radius: Sequence[int], gamma: Sequence[int] = ()) -> Rect:
    """The centered rectangle Rec(a)."""
    return Rect((0,) * len(radius), tuple(radius), tuple(gamma))


def _same_shape(A: Rect, B: Rect) -> None:
    if A.ell != B.ell or A.gamma != B.gamma:
        raise ShapeError(f"shape mismatch: l={A.ell}, Gamma={A.gamma} vs l={B.ell}, Gamma={B.gamma}")


def scale(lam, A: Rect) -> Rect:
    lam = as_fraction(lam)
    if lam <= 0:
        raise ValueError(f"scale factor must be positive, got {lam}")
    return Rect(A.center, tuple(math.floor(lam * r) for r in A.radius), A.gamma)


def neg_scale(lam, A: Rect) -> Rect:
    """(-lam) . A: negate the center, then scale by lam."""
    return scale(lam, negate(A))


def face(A: Rect, i: int) -> Rect:
    if not 1 <= i <= A.ell:
        raise IndexError(f"axis {i} out of range 1..{A.ell}")
    radius = list(A.radius)
    radius[i - 1] = 0
    return Rect(A.center, tuple(radius), A.gamma)


def fits_in(A: Rect, B: Rect) -> bool:
    """A is below B in every radius (translation invariant)."""
    _same_shape(A, B)
    return all(a <= b for a, b in zip(A.radius, B.radius))


def cardinality(A: Rect) -> int:
    return A.gamma_order * math.prod(2 * r + 1 for r in A.radius)


def enumerate_rect(A: Rect, budget: int = DEFAULT_BUDGET) -> Iterator[tuple[int, ...]]:
    size = cardinality(A)
    if size > budget:
        raise BudgetExceeded(f"rectangle has {size} points, budget is {budget}", needed=size)
    axes = [range(c - r, c + r + 1) for c, r in zip(A.center, A.radius)]
    tors = [range(m) for m in A.gamma]
    for v in itertools.product(*axes, *tors):
        yield v


def rect_array(A: Rect, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """All points of A as an int64 array of shape (|A|, l + len(Gamma)), in enumerate order."""
    size = cardinality(A)
    if size > budget:
        raise BudgetExceeded(f"rectangle has {size} points, budget is {budget}", needed=size)
    axes = [np.arange(c - r, c + r + 1, dtype=np.int64) for c, r in zip(A.center, A.radius)]
    axes += [np.arange(m, dtype=np.int64) for m in A.gamma]
    if not axes:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def member(v: Sequence[int], A: Rect) -> bool:
    if len(v) != A.ell + len(A.gamma):
        raise ShapeError(f"vector {tuple(v)} does not match rectangle shape")
    if any(not 0 <= t < m for t, m in zip(v[A.ell:], A.gamma)):
        return False
    return all(abs(x - c) <= r for x, c, r in zip(v, A.center, A.radius))


def member_many(vs: np.ndarray, A: Rect) -> np.ndarray:
    vs = np.atleast_2d(np.asarray(vs, dtype=np.int64))
    if A.ell == 0:
        return np.ones(len(vs), dtype=bool)
    c = np.array(A.center, dtype=np.int64)
    r = np.array(A.radius, dtype=np.int64)
    return np.all(np.abs(vs[:, : A.ell] - c) <= r, axis=1)


def translate(t: Sequence[int], A: Rect) -> Rect:
    """t + A; the torsion part of t is absorbed because Gamma is unrestricted."""
    if len(t) < A.ell:
        raise ShapeError("translation vector too short")
    return Rect(tuple(c + x for c, x in zip(A.center, t)), A.radius, A.gamma)


def minkowski_sum(A: Rect, B: Rect) -> Rect:
    _same_shape(A, B)
    return Rect(tuple(a + b for a, b in zip(A.center, B.center)),
                tuple(a + b for a, b in zip(A.radius, B.radius)), A.gamma)


def negate(A: Rect) -> Rect:
    return Rect(tuple(-c for c in A.center), A.radius, A.gamma)


def contains(A: Rect, B: Rect) -> bool:
    """B is a subset of A as point sets."""
    _same_shape(A, B)
    return all(alo <= blo and bhi <= ahi for alo, ahi, blo, bhi in zip(A.lo, A.hi, B.lo, B.hi))


def meets(A: Rect, B: Rect) -> bool:
    _same_shape(A, B)
    return all(a + b >= abs(c - d) for a, b, c, d in zip(A.radius, B.radius, A.center, B.center))


def with_radius(A: Rect, radius: Sequence[int]) -> Rect:
    return Rect(A.center, tuple(radius), A.gamma)


def unit_vector(ell: int, i: int, length: int = 1) -> tuple[int, ...]:
    """length * e_i for axis i in 1..l."""
    v = [0] * ell
    v[i - 1] = length
    return tuple(v)


# -- text form -------------------------------------------------------------

_RECT_RE = re.compile(r"rect\(center=\[(.*?)\];\s*radius=\[(.*?)\];\s*gamma=\[(.*?)\]\)")


def _ints(body: str) -> tuple[int, ...]:
    body = body.strip()
    return tuple(int(t) for t in body.split(",")) if body else ()


def format_rect(A: Rect) -> str:
    j = lambda xs: ",".join(str(x) for x in xs)
    return f"rect(center=[{j(A.center)}]; radius=[{j(A.radius)}]; gamma=[{j(A.gamma)}])"


def parse_rect(text: str) -> Rect:
    m = _RECT_RE.fullmatch(text.strip())
    if not m:
        raise ParseError(f"not a rectangle: {text!r}")
    try:
        return Rect(_ints(m.group(1)), _ints(m.group(2)), _ints(m.group(3)))
    except (ValueError, ShapeError) as exc:
        raise ParseError(f"bad rectangle {text!r}: {exc}") from exc


# -- law verification --------------------------------------------------------

LAW_CLAUSES = ("scale-compose", "scale-monotone", "fits-scale", "fits-transfer", "sum-absorb", "sum-cover", "sum-centered",
               "meet-stable", "shift-exists")


@dataclass
class LawReport:
    trials: int
    seed: int
    instances: dict[str, int] = field(default_factory=dict)
    counterexamples: dict[str, list] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(not v for v in self.counterexamples.values())

    def lines(self) -> list[str]:
        out = [f"trials={self.trials} seed={self.seed}"]
        for name in LAW_CLAUSES:
            bad = self.counterexamples.get(name, [])
            out.append(f"{name} instances={self.instances.get(name, 0)} counterexamples={len(bad)}")
            out.extend(f"  {item}" for item in bad[:5])
        return out


class _Sampler:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def frac(self, lo: Fraction, hi: Fraction, den: int = 24) -> Fraction:
        """A rational in [lo, hi] with denominator up to ``den``."""
        d = self.rng.randint(1, den)
        a, b = math.ceil(lo * d), math.floor(hi * d)
        if a > b:
            return lo
        return Fraction(self.rng.randint(a, b), d)

    def rect(self, ell: int, gamma: tuple[int, ...], rmax: int, centered: bool = False,
             rmin: int = 0) -> Rect:
        radius = tuple(self.rng.randint(rmin, rmax) for _ in range(ell))
        center = (0,) * ell if centered else tuple(self.rng.randint(-30, 30) for _ in range(ell))
        return Rect(center, radius, gamma)

    def shape(self) -> tuple[int, tuple[int, ...]]:
        ell = self.rng.randint(1, 3)
        gamma = self.rng.choice([(), (2,), (3,), (2, 2)])
        return ell, gamma


def _delta_b(s: _Sampler, ell, gamma) -> tuple[Fraction, Rect]:
    """delta in (0, 1) and B with Rec(1) fitting in delta.B."""
    delta = s.frac(Fraction(1, 12), Fraction(11, 12))
    radius = []
    for _ in range(ell):
        least = math.ceil(1 / delta)
        radius.append(s.rng.randint(least, least + 60))
    return delta, Rect(tuple(s.rng.randint(-30, 30) for _ in range(ell)), tuple(radius), gamma)


def _law_instance(name: str, s: _Sampler):
    """Return (hypothesis-satisfying instance description, conclusion holds)."""
    ell, gamma = s.shape()
    rng = s.rng
    if name == "scale-compose":
        A = s.rect(ell, gamma, 80)
        lam, eta = s.frac(Fraction(1, 10), Fraction(4)), s.frac(Fraction(1, 10), Fraction(4))
        return (A, lam, eta), contains(scale(lam * eta, A), scale(lam, scale(eta, A)))
    if name == "scale-monotone":
        A = s.rect(ell, gamma, 80)
        lam = s.frac(Fraction(1, 10), Fraction(4))
        eta = lam + s.frac(Fraction(0), Fraction(3))
        return (A, lam, eta), contains(scale(eta, A), scale(lam, A))
    if name == "fits-scale":
        A = s.rect(ell, gamma, 60)
        B = Rect(tuple(rng.randint(-30, 30) for _ in range(ell)),
                 tuple(a + rng.randint(0, 30) for a in A.radius), gamma)
        lam = s.frac(Fraction(1, 10), Fraction(5))
        return (A, B, lam), fits_in(scale(lam, A), scale(lam, B))
    if name == "fits-transfer":
        delta, B = _delta_b(s, ell, gamma)
        eps = s.frac(Fraction(1, 12), Fraction(2))
        # A's radii must satisfy floor(2 delta b_i) <= floor(eps a_i)
        radius = []
        for b in B.radius:
            need = math.floor(2 * delta * b)
            a = math.ceil(Fraction(need) / eps)
            radius.append(a + rng.randint(0, 20))
        A = Rect(tuple(rng.randint(-30, 30) for _ in range(ell)), tuple(radius), gamma)
        lam = s.frac(Fraction(1, 10), Fraction(5))
        ok_hyp = fits_in(scale(2 * delta, B), scale(eps, A))
        if not ok_hyp:
            return None, True
        return (A, B, delta, eps, lam), fits_in(scale(lam * delta, B), scale(lam * eps, A))
    if name == "sum-absorb":
        B = s.rect(ell, gamma, 60, rmin=1)
        eps = s.frac(Fraction(1, 12), Fraction(2))
        A = rec(tuple(rng.randint(0, math.floor(eps * b)) for b in B.radius), gamma)
        lam = s.frac(Fraction(1, 10), Fraction(5))
        return (A, B, eps, lam), contains(scale(lam + eps, B), minkowski_sum(scale(lam, B), A))
    if name == "sum-cover":
        delta, B = _delta_b(s, ell, gamma)
        A = rec(tuple(math.floor(2 * delta * b) + rng.randint(0, 20) for b in B.radius), gamma)
        lam = s.frac(Fraction(1, 10), Fraction(5))
        return (A, B, delta, lam), contains(minkowski_sum(scale(lam, B), A), scale(lam + delta, B))
    if name == "sum-centered":
        A = s.rect(ell, gamma, 80, centered=True)
        lam, eta = s.frac(Fraction(1, 10), Fraction(4)), s.frac(Fraction(1, 10), Fraction(4))
        return (A, lam, eta), contains(scale(lam + eta, A), minkowski_sum(scale(lam, A), scale(eta, A)))
    if name == "meet-stable":
        delta, B = _delta_b(s, ell, gamma)
        eps = s.frac(Fraction(1, 12), Fraction(2))
        radius = [math.ceil(Fraction(math.floor(2 * delta * b)) / eps) + rng.randint(0, 20)
                  for b in B.radius]
        # place A so that it meets B
        center = []
        for a, b, c in zip(radius, B.radius, B.center):
            off = rng.randint(-(a + b), a + b)
            center.append(c + off)
        A = Rect(tuple(center), tuple(radius), gamma)
        if not (meets(A, B) and fits_in(scale(2 * delta, B), scale(eps, A))):
            return None, True
        return (A, B, delta, eps), meets(scale(1 + eps, A), scale(1 - delta, B))
    if name == "shift-exists":
        delta, B = _delta_b(s, ell, gamma)
        eps = s.frac(Fraction(1, 12), Fraction(2))
        eta = s.frac(Fraction(1, 20), Fraction(2))
        radius = []
        for b in B.radius:
            lo = math.ceil(Fraction(math.floor(4 * delta * b)) / eps)
            hi = math.floor(math.floor((1 - delta) * b) / eta) if eta else lo
            if lo > hi:
                return None, True
            radius.append(rng.randint(lo, hi))
        A = rec(tuple(radius), gamma)
        outer = scale(1 + delta, B)
        w = tuple(c + rng.randint(-r, r) for c, r in zip(outer.center, outer.radius))
        inner = scale(1 - delta, B)
        if not (fits_in(scale(eta, A), inner) and fits_in(scale(4 * delta, B), scale(eps, A))):
            return None, True
        return (A, B, delta, eps, eta, w), _exists_shift(A, inner, eta, eps, w)
    raise KeyError(name)


def _exists_shift(A: Rect, inner: Rect, eta: Fraction, eps: Fraction, w) -> bool:
    """Is there s in (eta+eps).A with w + s + eta.A inside ``inner``? Solved per axis."""
    reach = scale(eta + eps, A).radius
    body = scale(eta, A).radius
    for wi, ri, hi_, c, r in zip(w, reach, body, inner.center, inner.radius):
        lo_s = c - r + hi_ - wi
        hi_s = c + r - hi_ - wi
        if max(lo_s, -ri) > min(hi_s, ri):
            return False
    return True


def verify_rect_laws(trials: int = 10_000, seed: int = 0) -> LawReport:
    rng = random.Random(seed)
    sampler = _Sampler(rng)
    report = LawReport(trials, seed)
    for name in LAW_CLAUSES:
        got, bad, attempts = 0, [], 0
        while got < trials:
            attempts += 1
            if attempts > 50 * trials:
                raise RuntimeError(f"could not sample hypotheses for {name}")
            inst, ok = _law_instance(name, sampler)
            if inst is None:
                continue
            got += 1
            if not ok:
                bad.append(inst)
        report.instances[name] = got
        report.counterexamples[name] = bad
    return report
