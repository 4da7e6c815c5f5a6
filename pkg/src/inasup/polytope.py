"""Constraint-vector representation of convex polytopes.

A polytope in dimension D is stored as strict lower/upper bounds on every
contiguous coordinate sum x_i + ... + x_j, one pair per index (i, j) with
1 <= i <= j <= D.  The representation is deliberately overdetermined: all
D(D+1)/2 pairs are always present, and canonicalization (making every
constraint active) is the optimizer's job.  All bounds are exact rationals
and all inequalities are strict, so polytope facets are excluded from
membership everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .rationals import Rational, format_rational, parse_rational, rational


class BoundsError(ValueError):
    """Raised when a constraint vector has lower >= upper at some index."""


@lru_cache(maxsize=None)
def index_pairs(dim: int) -> tuple[tuple[int, int], ...]:
    """All contiguous-sum index pairs (i, j), 1-based, in lexicographic order."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    return tuple((i, j) for i in range(1, dim + 1) for j in range(i, dim + 1))


@lru_cache(maxsize=None)
def pair_position(dim: int) -> dict[tuple[int, int], int]:
    """Position of each index pair inside the canonical bound tuples."""
    return {pair: pos for pos, pair in enumerate(index_pairs(dim))}


def pair_count(dim: int) -> int:
    return dim * (dim + 1) // 2


def pair_sums(x):
    """Contiguous sums of a coordinate vector, in canonical pair order."""
    dim = len(x)
    prefix = [rational(0)]
    for v in x:
        prefix.append(prefix[-1] + rational(v))
    return tuple(prefix[j] - prefix[i - 1] for i, j in index_pairs(dim))


@dataclass(frozen=True, slots=True)
class ConstraintVector:
    """Bounds (lower, upper) on every contiguous coordinate sum.

    Invariant: lower < upper at every index (a violation means the empty
    polytope, which is represented by None wherever it can arise).

    Float images of the bounds are cached at construction; they serve as a
    conservative prefilter for pairwise set tests (correctly rounded, so a
    comparison holding with a margin above 1e-9 is certain), with exact
    arithmetic deciding every inconclusive case.
    """

    dim: int
    lowers: tuple
    uppers: tuple
    flowers: tuple = field(default=(), compare=False, repr=False)
    fuppers: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        n = pair_count(self.dim)
        if len(self.lowers) != n or len(self.uppers) != n:
            raise ValueError(f"expected {n} bound pairs for dimension {self.dim}")
        for lo, up in zip(self.lowers, self.uppers):
            if not lo < up:
                raise BoundsError(f"empty bounds: {lo} >= {up}")
        object.__setattr__(self, "flowers", tuple(map(float, self.lowers)))
        object.__setattr__(self, "fuppers", tuple(map(float, self.uppers)))

    def lower(self, i: int, j: int):
        return self.lowers[pair_position(self.dim)[(i, j)]]

    def upper(self, i: int, j: int):
        return self.uppers[pair_position(self.dim)[(i, j)]]

    def __repr__(self):  # pragma: no cover - debugging aid
        parts = ", ".join(
            f"({i},{j}):({lo},{up})"
            for (i, j), lo, up in zip(index_pairs(self.dim), self.lowers, self.uppers)
        )
        return f"ConstraintVector(dim={self.dim}, {parts})"


def from_pairs(dim: int, bounds: dict) -> ConstraintVector:
    """Build a vector from a full {(i, j): (lower, upper)} mapping."""
    pairs = index_pairs(dim)
    missing = [p for p in pairs if p not in bounds]
    if missing:
        raise ValueError(f"missing bounds for pairs {missing}")
    lowers = tuple(rational(bounds[p][0]) for p in pairs)
    uppers = tuple(rational(bounds[p][1]) for p in pairs)
    return ConstraintVector(dim, lowers, uppers)


def box(dim: int, coord_lowers, coord_uppers) -> ConstraintVector:
    """Axis-aligned open box; sum bounds are the implied (already tight) sums."""
    coord_lowers = [rational(v) for v in coord_lowers]
    coord_uppers = [rational(v) for v in coord_uppers]
    lowers = []
    uppers = []
    for i, j in index_pairs(dim):
        lowers.append(sum(coord_lowers[i - 1 : j], rational(0)))
        uppers.append(sum(coord_uppers[i - 1 : j], rational(0)))
    return ConstraintVector(dim, tuple(lowers), tuple(uppers))


def contains_point(m: ConstraintVector, x) -> bool:
    """Strict membership of an exact point."""
    if len(x) != m.dim:
        raise ValueError(f"point dimension {len(x)} != polytope dimension {m.dim}")
    for s, lo, up in zip(pair_sums(x), m.lowers, m.uppers):
        if not (lo < s < up):
            return False
    return True


def on_facet(m: ConstraintVector, x) -> bool:
    """True iff some constraint holds with equality at x."""
    if len(x) != m.dim:
        raise ValueError(f"point dimension {len(x)} != polytope dimension {m.dim}")
    return any(s == lo or s == up for s, lo, up in zip(pair_sums(x), m.lowers, m.uppers))


def includes(m: ConstraintVector, other: ConstraintVector) -> bool:
    """True iff P_other is a subset of P_m.

    Exact only when both vectors are optimized; on raw vectors the
    componentwise comparison is merely sufficient.
    """
    if m.dim != other.dim:
        raise ValueError("dimension mismatch")
    for mlo, mup, olo, oup in zip(m.lowers, m.uppers, other.lowers, other.uppers):
        if olo < mlo or mup < oup:
            return False
    return True


def meet_bounds(m: ConstraintVector, other: ConstraintVector):
    """Componentwise intersection bounds, or None when some pair crosses.

    A None result certifies emptiness; a non-None result still needs the
    optimizer's existence test before it can be trusted as nonempty.
    """
    if m.dim != other.dim:
        raise ValueError("dimension mismatch")
    lowers = []
    uppers = []
    for mlo, mup, olo, oup in zip(m.lowers, m.uppers, other.lowers, other.uppers):
        lo = mlo if mlo >= olo else olo
        up = mup if mup <= oup else oup
        if not lo < up:
            return None
        lowers.append(lo)
        uppers.append(up)
    return tuple(lowers), tuple(uppers)


def dilate(m: ConstraintVector, a) -> ConstraintVector:
    """Scale about the origin by a > 0."""
    a = rational(a)
    if not a > 0:
        raise ValueError(f"dilation factor must be positive, got {a}")
    return ConstraintVector(m.dim, tuple(a * lo for lo in m.lowers), tuple(a * up for up in m.uppers))


def translate(m: ConstraintVector, x) -> ConstraintVector:
    """Shift by a vector; the bound at (i, j) moves by x_i + ... + x_j."""
    if len(x) != m.dim:
        raise ValueError(f"translation dimension {len(x)} != polytope dimension {m.dim}")
    shifts = pair_sums(x)
    return ConstraintVector(
        m.dim,
        tuple(lo + s for lo, s in zip(m.lowers, shifts)),
        tuple(up + s for up, s in zip(m.uppers, shifts)),
    )


def sign_flip(m: ConstraintVector) -> ConstraintVector:
    """The image of P_m under x -> -x."""
    return ConstraintVector(m.dim, tuple(-up for up in m.uppers), tuple(-lo for lo in m.lowers))


def serialize(m: ConstraintVector) -> str:
    """Line-oriented text form: 'i j lower_num/lower_den upper_num/upper_den'."""
    lines = []
    for (i, j), lo, up in zip(index_pairs(m.dim), m.lowers, m.uppers):
        lines.append(f"{i} {j} {format_rational(lo)} {format_rational(up)}")
    return "\n".join(lines)


def deserialize(dim: int, lines) -> ConstraintVector:
    """Inverse of serialize; `lines` is an iterable of text lines."""
    bounds = {}
    for line in lines:
        line = line.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ValueError(f"malformed constraint line: {line!r}")
        i, j = int(fields[0]), int(fields[1])
        bounds[(i, j)] = (parse_rational(fields[2]), parse_rational(fields[3]))
    return from_pairs(dim, bounds)
