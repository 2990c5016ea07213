"""Integer geometry of Z^2: slices along a direction p, their minimal-norm
representatives, and the count of lattice points inside the disk of radius |p|.

Everything here is exact integer arithmetic; floats never enter.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt
from typing import Iterable, NamedTuple, Optional, Tuple


class LatticeVector(NamedTuple):
    x: int
    y: int

    def __add__(self, other):  # type: ignore[override]
        return LatticeVector(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return LatticeVector(self.x - other[0], self.y - other[1])

    def __neg__(self):
        return LatticeVector(-self.x, -self.y)

    def scale(self, n: int) -> "LatticeVector":
        return LatticeVector(n * self.x, n * self.y)

    def dot(self, other) -> int:
        return self.x * other[0] + self.y * other[1]

    def norm_sq(self) -> int:
        return self.x * self.x + self.y * self.y

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0


def as_vector(v) -> LatticeVector:
    if isinstance(v, LatticeVector):
        return v
    x, y = v
    if int(x) != x or int(y) != y:
        raise ValueError(f"lattice vector needs integer coordinates, got {v!r}")
    return LatticeVector(int(x), int(y))


def _nonzero(p) -> LatticeVector:
    p = as_vector(p)
    if p.is_zero():
        raise ValueError("p must be nonzero")
    return p


@dataclass(frozen=True)
class SliceDescriptor:
    """The slice {qhat + n p : n in Z} with its minimal-norm point qhat.

    ``window`` is the inclusive index range of points strictly inside the
    disk of radius |p|, or None when the slice misses the disk.
    """

    qhat: LatticeVector
    p: LatticeVector
    window: Optional[Tuple[int, int]] = None

    def point(self, n: int) -> LatticeVector:
        return self.qhat + self.p.scale(n)

    @property
    def rank(self) -> int:
        """Number of in-disk indices (positive squares of the slice signature)."""
        if self.window is None:
            return 0
        return self.window[1] - self.window[0] + 1

    @property
    def collinear(self) -> bool:
        return det2(self.qhat, self.p) == 0


def det2(a, b) -> int:
    return a[0] * b[1] - a[1] * b[0]


def is_collinear(q, p) -> bool:
    p = _nonzero(p)
    return det2(q, p) == 0


def slice_representative(q, p) -> LatticeVector:
    """Minimal-norm point of q + Z p; ties go to the larger shift index."""
    q, p = as_vector(q), _nonzero(p)
    pp = p.norm_sq()
    # |q + n p|^2 is convex in n with real minimizer -(q.p)/|p|^2
    n0 = -q.dot(p) // pp
    best_n, best = None, None
    for n in range(n0 - 1, n0 + 3):
        v = (q + p.scale(n)).norm_sq()
        if best is None or v < best or (v == best and n > best_n):
            best_n, best = n, v
    return q + p.scale(best_n)


def in_disk_window(qhat, p) -> Optional[Tuple[int, int]]:
    """Index range {n : |qhat + n p| < |p|} for a representative qhat.

    The set is an interval because |qhat + n p|^2 is convex in n, and it
    contains 0 whenever it is nonempty since qhat minimizes the norm.
    """
    qhat, p = as_vector(qhat), _nonzero(p)
    pp = p.norm_sq()
    if qhat.norm_sq() >= pp:
        return None
    lo = 0
    while (qhat + p.scale(lo - 1)).norm_sq() < pp:
        lo -= 1
    hi = 0
    while (qhat + p.scale(hi + 1)).norm_sq() < pp:
        hi += 1
    return lo, hi


def disk_points(radius_sq: int, strict: bool = True) -> Iterable[LatticeVector]:
    r = isqrt(radius_sq)
    for x in range(-r, r + 1):
        for y in range(-r, r + 1):
            s = x * x + y * y
            if s < radius_sq or (not strict and s == radius_sq):
                yield LatticeVector(x, y)


def enumerate_inner_points(p) -> set:
    """Lattice points in the open disk of radius |p| that are not multiples of p."""
    p = _nonzero(p)
    return {v for v in disk_points(p.norm_sq()) if det2(v, p) != 0}


def kappa(p) -> int:
    return len(enumerate_inner_points(p))


def _sort_key(v: LatticeVector):
    return (v.norm_sq(), v.x, v.y)


def contributing_slices(p) -> list:
    """Slices carrying in-disk points, one descriptor per slice, sorted by |qhat|."""
    p = _nonzero(p)
    reps = {slice_representative(v, p) for v in enumerate_inner_points(p)}
    return [SliceDescriptor(q, p, in_disk_window(q, p)) for q in sorted(reps, key=_sort_key)]


def enumerate_representatives(p, radius: float) -> list:
    """Distinct non-collinear representatives with 0 < |qhat| <= radius."""
    p = _nonzero(p)
    if radius < 1:
        return []
    # norms are integers; absorb rounding in radius**2 (e.g. radius = sqrt(2))
    r_sq = int(radius * radius + 1e-9)
    out = set()
    for v in disk_points(r_sq, strict=False):
        if v.is_zero() or det2(v, p) == 0:
            continue
        if slice_representative(v, p) == v:
            out.add(v)
    return [SliceDescriptor(q, p, in_disk_window(q, p)) for q in sorted(out, key=_sort_key)]
