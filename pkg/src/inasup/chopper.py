"""Decomposition of a polytope into pieces complementary to an overlap.

When two optimized polytopes P_m and P_mp overlap without inclusion, and
the intersection tightens m on exactly one lower bound (and/or exactly one
upper bound) that is both binding in the optimized intersection and a true
facet of P_mp, then P_m splits mod 0 into the intersection plus one or two
complementary pieces obtained by flipping that single bound.  The engine
uses this to discard parts of new pieces already covered by stored ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .optimizer import MultiplierFamily, facet_is_active, intersect, optimize_bounds
from .polytope import ConstraintVector, includes, index_pairs


class ChopKind(Enum):
    NO_CHOP = "no_chop"
    TWO_PIECE = "two_piece"
    THREE_PIECE = "three_piece"


@dataclass(frozen=True, slots=True)
class ChopResult:
    """Outcome of a chop test.

    When kind is not NO_CHOP, P_m equals the union of `inner` and the
    `outers` mod 0.  `outers` may have fewer members than the identified
    indices when the semi-optimizer reports a complementary piece empty
    (sound: such a piece really is empty).
    """

    kind: ChopKind
    inner: ConstraintVector
    outers: tuple
    minus_pair: tuple | None
    plus_pair: tuple | None


def try_chop(
    m: ConstraintVector,
    mp: ConstraintVector,
    family: MultiplierFamily,
    semi: bool = False,
    inter: ConstraintVector | None = None,
) -> ChopResult:
    """Attempt to split P_m against an overlapping stored polytope P_mp.

    Both vectors must be optimized, the intersection nonempty, and neither
    polytope contained in the other.  `inter` may pass in the already
    computed optimized intersection.  Ambiguity (several candidate bounds
    on one side) yields NO_CHOP: the mod-0 decomposition is only certified
    for a unique binding index per side.
    """
    if m.dim != mp.dim:
        raise ValueError("dimension mismatch")
    if includes(mp, m) or includes(m, mp):
        raise ValueError("chop requires overlap without inclusion")
    if inter is None:
        inter = intersect(m, mp, family, semi)
    if inter is None:
        raise ValueError("chop requires a nonempty intersection")

    minus_candidates = []
    plus_candidates = []
    pairs = index_pairs(m.dim)
    for k, pair in enumerate(pairs):
        if m.lowers[k] < mp.lowers[k] and inter.lowers[k] == mp.lowers[k]:
            if facet_is_active(mp, pair, "lower", family, semi):
                minus_candidates.append(k)
        if mp.uppers[k] < m.uppers[k] and inter.uppers[k] == mp.uppers[k]:
            if facet_is_active(mp, pair, "upper", family, semi):
                plus_candidates.append(k)

    k_minus = minus_candidates[0] if len(minus_candidates) == 1 else None
    k_plus = plus_candidates[0] if len(plus_candidates) == 1 else None
    if len(minus_candidates) > 1 or len(plus_candidates) > 1:
        # Ambiguous tightening: decomposition not certified, keep m whole.
        return ChopResult(ChopKind.NO_CHOP, inter, (), None, None)
    if k_minus is None and k_plus is None:
        return ChopResult(ChopKind.NO_CHOP, inter, (), None, None)

    outers = []
    if k_minus is not None:
        lowers = m.lowers
        uppers = tuple(
            mp.lowers[k_minus] if k == k_minus else up for k, up in enumerate(m.uppers)
        )
        res, empty = optimize_bounds(lowers, uppers, family, semi)
        if not empty:
            outers.append(ConstraintVector(m.dim, res[0], res[1]))
    if k_plus is not None:
        lowers = tuple(
            mp.uppers[k_plus] if k == k_plus else lo for k, lo in enumerate(m.lowers)
        )
        uppers = m.uppers
        res, empty = optimize_bounds(lowers, uppers, family, semi)
        if not empty:
            outers.append(ConstraintVector(m.dim, res[0], res[1]))

    kind = ChopKind.THREE_PIECE if (k_minus is not None and k_plus is not None) else ChopKind.TWO_PIECE
    return ChopResult(
        kind,
        inter,
        tuple(outers),
        pairs[k_minus] if k_minus is not None else None,
        pairs[k_plus] if k_plus is not None else None,
    )
