"""Canonicalization of constraint vectors via multiplier enumeration.

A bound at row i of a constraint system is redundant when some signed
combination of the other rows implies a tighter value.  Following the
KKT/linear-programming picture, the exact extremes of every row functional
over the polytope are attained on finitely many candidate multiplier
vectors: solutions of sum_k lambda_k alpha_k = alpha_i supported on at
most D rows.  Enumerating those candidates once per constraint system
yields an exact projection operator ("optimize") that tightens every bound
until it is active, decides emptiness, and classifies which bounds define
true facets.

The fast variant ("semi-optimize") restricts to multipliers with support
of size at most two; its bounds may be looser, so polytopes it reports
nonempty can be spurious, but emptiness reports remain sound.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

from .polytope import ConstraintVector, index_pairs, meet_bounds, pair_position
from .rationals import ZERO, rational


@dataclass(frozen=True, slots=True)
class ConstraintSystem:
    """A collection of E distinct non-negative row vectors over D coordinates."""

    dim: int
    rows: tuple

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if len(self.rows) < self.dim:
            raise ValueError("need at least D rows")
        seen = set()
        for row in self.rows:
            if len(row) != self.dim:
                raise ValueError("row length != dimension")
            if any(v < 0 for v in row):
                raise ValueError("row coefficients must be non-negative")
            if row in seen:
                raise ValueError(f"duplicate row {row}")
            seen.add(row)

    @property
    def row_count(self) -> int:
        return len(self.rows)


@lru_cache(maxsize=None)
def standard_system(dim: int) -> ConstraintSystem:
    """The contiguous-coordinate-sum system matching ConstraintVector's pairs."""
    rows = []
    for i, j in index_pairs(dim):
        rows.append(tuple(rational(1 if i <= c <= j else 0) for c in range(1, dim + 1)))
    return ConstraintSystem(dim, tuple(rows))


@dataclass(frozen=True, slots=True)
class MultiplierVector:
    """One candidate multiplier: entries over all E rows, mostly zero.

    `items` holds the nonzero (row, value) pairs; when every nonzero value
    is +-1 the `unit_plus`/`unit_minus` index tuples enable an add-only
    evaluation path.
    """

    entries: tuple
    support: tuple
    items: tuple
    unit_plus: tuple | None
    unit_minus: tuple | None
    is_canonical: bool

    @classmethod
    def from_entries(cls, entries, canonical_row: int):
        items = tuple((k, v) for k, v in enumerate(entries) if v != 0)
        support = tuple(k for k, _ in items)
        if all(v == 1 or v == -1 for _, v in items):
            unit_plus = tuple(k for k, v in items if v == 1)
            unit_minus = tuple(k for k, v in items if v == -1)
        else:
            unit_plus = unit_minus = None
        is_canonical = support == (canonical_row,) and entries[canonical_row] == 1
        return cls(tuple(entries), support, items, unit_plus, unit_minus, is_canonical)


@dataclass(frozen=True, slots=True)
class MultiplierFamily:
    """Per-row candidate multiplier sets for one constraint system."""

    dim: int
    row_count: int
    per_row: tuple
    semi_per_row: tuple

    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(r) for r in self.per_row)

    def semi_cardinalities(self) -> tuple[int, ...]:
        return tuple(len(r) for r in self.semi_per_row)


def enumerate_multipliers(system: ConstraintSystem) -> MultiplierFamily:
    """List, per row i, every uniquely-solvable multiplier vector.

    Subsets of rows are visited by increasing size then lexicographically;
    each subset whose restricted linear system has full column rank
    contributes its unique solution for every consistent target row.
    Duplicate solutions arising from different subsets are removed.
    """
    dim, rows = system.dim, system.rows
    n_rows = len(rows)
    found = [dict() for _ in range(n_rows)]  # entries tuple -> insertion order

    for size in range(1, min(dim, n_rows) + 1):
        for subset in combinations(range(n_rows), size):
            # Augmented matrix: subset columns, then every row as a target column.
            mat = [
                [rows[k][r] for k in subset] + [rows[t][r] for t in range(n_rows)]
                for r in range(dim)
            ]
            width = size + n_rows
            used = [False] * dim
            pivot_row = []
            rank_ok = True
            for col in range(size):
                piv = None
                for r in range(dim):
                    if not used[r] and mat[r][col] != 0:
                        piv = r
                        break
                if piv is None:
                    rank_ok = False
                    break
                used[piv] = True
                pivot_row.append(piv)
                inv = 1 / mat[piv][col]
                prow = mat[piv]
                for c in range(col, width):
                    prow[c] = prow[c] * inv
                for r in range(dim):
                    if r != piv and mat[r][col] != 0:
                        f = mat[r][col]
                        row = mat[r]
                        for c in range(col, width):
                            row[c] = row[c] - f * prow[c]
            if not rank_ok:
                continue
            free_rows = [r for r in range(dim) if not used[r]]
            for target in range(n_rows):
                tcol = size + target
                if any(mat[r][tcol] != 0 for r in free_rows):
                    continue  # inconsistent: alpha_target not in the span
                entries = [ZERO] * n_rows
                for c in range(size):
                    entries[subset[c]] = mat[pivot_row[c]][tcol]
                key = tuple(entries)
                if key not in found[target]:
                    found[target][key] = MultiplierVector.from_entries(key, target)

    per_row = tuple(tuple(d.values()) for d in found)
    for i, mults in enumerate(per_row):
        if not any(mv.is_canonical for mv in mults):
            raise AssertionError(f"canonical multiplier missing for row {i}")
    semi = tuple(tuple(mv for mv in mults if len(mv.support) <= 2) for mults in per_row)
    return MultiplierFamily(dim, n_rows, per_row, semi)


@lru_cache(maxsize=None)
def standard_family(dim: int) -> MultiplierFamily:
    """Multiplier family for the contiguous-sum system, cached per dimension."""
    return enumerate_multipliers(standard_system(dim))


def _eval_multiplier(mv: MultiplierVector, lowers, uppers):
    """(max-candidate for the lower bound, min-candidate for the upper bound)."""
    s_lo = ZERO
    s_up = ZERO
    if mv.unit_plus is not None:
        for k in mv.unit_plus:
            s_lo += lowers[k]
            s_up += uppers[k]
        for k in mv.unit_minus:
            s_lo -= uppers[k]
            s_up -= lowers[k]
    else:
        for k, lam in mv.items:
            if lam > 0:
                s_lo += lam * lowers[k]
                s_up += lam * uppers[k]
            else:
                s_lo += lam * uppers[k]
                s_up += lam * lowers[k]
    return s_lo, s_up


def optimize_bounds(lowers, uppers, family: MultiplierFamily, semi: bool = False):
    """Tighten raw bound arrays; returns ((lowers, uppers), empty_flag).

    The bound arrays must be componentwise valid (lower < upper).  When the
    existence test fails the first crossing index stops the computation and
    (None, True) is returned.
    """
    per_row = family.semi_per_row if semi else family.per_row
    new_lo = []
    new_up = []
    for mults in per_row:
        best_lo = None
        best_up = None
        for mv in mults:
            s_lo, s_up = _eval_multiplier(mv, lowers, uppers)
            if best_lo is None or s_lo > best_lo:
                best_lo = s_lo
            if best_up is None or s_up < best_up:
                best_up = s_up
        if not best_lo < best_up:
            return None, True
        new_lo.append(best_lo)
        new_up.append(best_up)
    return (tuple(new_lo), tuple(new_up)), False


def optimize(m: ConstraintVector, family: MultiplierFamily, semi: bool = False):
    """Canonical form of m; returns (optimized vector or None, is_empty)."""
    res, empty = optimize_bounds(m.lowers, m.uppers, family, semi)
    if empty:
        return None, True
    return ConstraintVector(m.dim, res[0], res[1]), False


def semi_optimize(m: ConstraintVector, family: MultiplierFamily):
    """optimize() restricted to multipliers with support of size <= 2."""
    return optimize(m, family, semi=True)


def intersect(m: ConstraintVector, other: ConstraintVector, family: MultiplierFamily, semi: bool = False):
    """Optimized intersection of two polytopes, or None when empty."""
    mb = meet_bounds(m, other)
    if mb is None:
        return None
    res, empty = optimize_bounds(mb[0], mb[1], family, semi)
    if empty:
        return None
    return ConstraintVector(m.dim, res[0], res[1])


def is_empty(m: ConstraintVector, family: MultiplierFamily, semi: bool = False) -> bool:
    """Exact emptiness of P_m (sound and complete with the full family)."""
    _, empty = optimize_bounds(m.lowers, m.uppers, family, semi)
    return empty


def facet_is_active(
    m: ConstraintVector,
    pair: tuple[int, int],
    side: str,
    family: MultiplierFamily,
    semi: bool = False,
) -> bool:
    """Whether the bound at `pair` defines a true facet of P_m.

    Contract: m must already be optimized (m == optimize(m)); the test
    compares the bound against the best non-canonical multiplier value,
    with strict inequality meaning a genuine face.
    """
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    pos = pair_position(m.dim)[pair]
    per_row = family.semi_per_row if semi else family.per_row
    best = None
    if side == "lower":
        for mv in per_row[pos]:
            if mv.is_canonical:
                continue
            s_lo, _ = _eval_multiplier(mv, m.lowers, m.uppers)
            if best is None or s_lo > best:
                best = s_lo
        return best is None or best < m.lowers[pos]
    for mv in per_row[pos]:
        if mv.is_canonical:
            continue
        _, s_up = _eval_multiplier(mv, m.lowers, m.uppers)
        if best is None or s_up < best:
            best = s_up
    return best is None or m.uppers[pos] < best
