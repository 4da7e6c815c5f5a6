"""The coupled torus maps, their atom partition, and the induced vector maps.

The reduced map acts on the fundamental domain S_D = (-1/2, 1/2)^D as
x -> 2(1-eps) x + (2 eps / (D+1)) B(x)  mod 1, where B is an integer
vector constant on each atom of a finite partition.  Atoms are the maximal
polytopes on which the map is affine; they are indexed by the integer
signature of rounded contiguous coordinate sums.  Restricted to one atom,
the map induces an affine map on constraint vectors (scale 2(1-eps) plus a
per-index rational shift), which is how all polytope dynamics is computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from . import polytope
from .optimizer import MultiplierFamily, intersect, optimize, optimize_bounds, standard_family
from .polytope import ConstraintVector, index_pairs, pair_position
from .rationals import HALF, Rational, fold_half, fold_unit, format_rational, rat_ceil, rat_floor, rational


class DiscontinuityError(ValueError):
    """A point lies on a discontinuity plane (some sum in 1/2 + Z)."""


@dataclass(frozen=True, slots=True)
class MapParams:
    """Dimension and coupling strength; eps < 1/2 keeps the map expanding."""

    dim: int
    epsilon: Rational

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        eps = rational(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if not (0 <= eps < HALF):
            raise ValueError(f"epsilon must lie in [0, 1/2), got {eps}")

    @property
    def scale(self):
        """Derivative factor 2(1-eps) > 1."""
        return 2 * (1 - self.epsilon)

    @property
    def coupling(self):
        """Constant-part prefactor 2 eps / (D+1)."""
        return 2 * self.epsilon / (self.dim + 1)


def params(dim: int, epsilon) -> MapParams:
    return MapParams(dim, rational(epsilon))


def h(u) -> int:
    """Round-to-nearest with ties (arguments in 1/2 + Z) sent to 0."""
    v = rational(u) + HALF
    if v.denominator == 1:
        return 0
    return rat_floor(v)


def g(u):
    """Sawtooth u - h(u): pairwise interaction on the circle."""
    return rational(u) - h(u)


def signature_of_point(x):
    """Integer signature (h of every contiguous sum) or None on a plane."""
    sums = polytope.pair_sums(x)
    sig = []
    for s in sums:
        if (s + HALF).denominator == 1:
            return None
        sig.append(rat_floor(s + HALF))
    return tuple(sig)


def constant_vector_from_signature(dim: int, sig) -> tuple[int, ...]:
    """The affine constant B on the atom with the given signature."""
    pos = pair_position(dim)
    s = {pair: sig[p] for pair, p in pos.items()}
    out = []
    for i in range(1, dim + 1):
        total = 2 * s[(i, i)]
        for j in range(1, i):
            total += s[(j, i)] - (s[(j, i - 1)] if j <= i - 1 else 0)
        for j in range(i + 1, dim + 1):
            total += s[(i, j)] - s[(i + 1, j)]
        out.append(total)
    return tuple(out)


def constant_vector(x) -> tuple[int, ...]:
    """B evaluated at an exact point (error on discontinuity planes)."""
    sig = signature_of_point(x)
    if sig is None:
        raise DiscontinuityError(f"point {x} lies on a discontinuity plane")
    return constant_vector_from_signature(len(x), sig)


def apply_reduced(p: MapParams, x):
    """One exact step of the reduced map, folded into S_D."""
    if len(x) != p.dim:
        raise ValueError("point dimension mismatch")
    x = [rational(v) for v in x]
    b = constant_vector(x)
    s, c = p.scale, p.coupling
    return tuple(fold_half(s * xi + c * bi) for xi, bi in zip(x, b))


def apply_coupled(n_units: int, epsilon, u):
    """One exact step of the N-unit mean-field map, folded into [0, 1)^N."""
    if len(u) != n_units:
        raise ValueError("point dimension mismatch")
    eps = rational(epsilon)
    u = [rational(v) for v in u]
    factor = 2 * eps / n_units
    out = []
    for i in range(n_units):
        acc = 2 * u[i]
        for j in range(n_units):
            if j != i:
                acc += factor * g(u[j] - u[i])
        out.append(fold_unit(acc))
    return tuple(out)


def reduce_coordinates(u):
    """Consecutive differences plus the total, each folded mod 1.

    Semi-conjugates the N-unit map to (reduced map on differences) x
    (doubling on the sum).
    """
    n = len(u)
    u = [rational(v) for v in u]
    diffs = tuple(fold_half(u[i] - u[i + 1]) for i in range(n - 1))
    total = fold_unit(sum(u, rational(0)))
    return diffs, total


# ---------------------------------------------------------------------------
# Atom partition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Atom:
    """One affine piece of the reduced map.

    `m_a` is the defining half-integer slab vector (signature +- 1/2 at
    every index); `m_opt` its optimized form used in all set computations;
    `constant` the integer vector B on the atom; `gamma_constant` the
    per-index shift (2 eps / (D+1)) * sum of B over the index range.
    """

    label: int
    signature: tuple
    m_a: ConstraintVector
    m_opt: ConstraintVector
    constant: tuple
    gamma_constant: tuple


class AtomTable:
    """All atoms for one (dimension, epsilon), labeled in enumeration order."""

    def __init__(self, p: MapParams, atoms):
        self.params = p
        self.atoms = tuple(atoms)
        self._by_signature = {a.signature: a.label for a in self.atoms}
        flip = {}
        for a in self.atoms:
            neg = tuple(-k for k in a.signature)
            flip[a.label] = self._by_signature[neg]
        self._flip = flip

    def __len__(self):
        return len(self.atoms)

    def atom(self, label: int) -> Atom:
        return self.atoms[label - 1]

    def label_of_signature(self, sig):
        return self._by_signature.get(tuple(sig))

    def flip_label(self, label: int) -> int:
        """Label of the atom carrying the sign-flipped signature."""
        return self._flip[label]

    def label_of_point(self, x):
        """Atom containing an exact point, or None on a discontinuity plane."""
        sig = signature_of_point(x)
        if sig is None:
            return None
        return self._by_signature.get(sig)

    def dump_lines(self):
        lines = []
        pairs = index_pairs(self.params.dim)
        for a in self.atoms:
            sig = " ".join(f"({i},{j}):{k}" for (i, j), k in zip(pairs, a.signature))
            b = " ".join(str(v) for v in a.constant)
            lines.append(f"{a.label} | {sig} | {b}")
        return lines


def _slab_feasible_order(dim: int):
    """Positions ordered by interval length then start; DFS assigns in this order."""
    pairs = index_pairs(dim)
    order = sorted(range(len(pairs)), key=lambda p: (pairs[p][1] - pairs[p][0], pairs[p][0]))
    return pairs, order


def _feasible_signatures(dim: int):
    """Depth-first enumeration of all integer signatures with nonempty slabs.

    Feasibility of a partial assignment is an exact difference-constraint
    test on prefix sums: with doubled (integer) bounds, the strict system
    is solvable iff every directed cycle of the bound graph has positive
    weight.  An all-pairs shortest-path matrix (diagonal 0) is maintained
    incrementally; adding the two arcs of a new slab creates a nonpositive
    cycle iff one of the arcs closes one against the existing closure.
    """
    pairs, order = _slab_feasible_order(dim)
    n = dim + 1  # prefix-sum nodes 0..D

    # Trivial doubled bounds |2 sum| < 2*(length/2): arc weight |b - a| both
    # ways.  This matrix is already its own min-plus closure.
    base = [[abs(b - a) for b in range(n)] for a in range(n)]

    results = []
    sig = [0] * len(pairs)

    def assign(depth, dist):
        if depth == len(order):
            results.append(tuple(sig))
            return
        pos = order[depth]
        i, j = pairs[pos]
        a, b = i - 1, j
        half_span = (j - i + 1) // 2
        for k in range(-half_span, half_span + 1):
            w_ab = 2 * k + 1  # doubled upper bound on y_b - y_a
            w_ba = 1 - 2 * k  # doubled negation of the lower bound
            if w_ab + dist[b][a] <= 0 or w_ba + dist[a][b] <= 0:
                continue  # the slab contradicts the partial system
            if w_ab >= dist[a][b] and w_ba >= dist[b][a]:
                new = dist  # both arcs already implied; closure unchanged
            else:
                new = [row[:] for row in dist]
                for u in range(n):
                    du_a, du_b = dist[u][a], dist[u][b]
                    row = new[u]
                    for v in range(n):
                        best = row[v]
                        cand = du_a + w_ab + dist[b][v]
                        if cand < best:
                            best = cand
                        cand = du_b + w_ba + dist[a][v]
                        if cand < best:
                            best = cand
                        row[v] = best
            sig[pos] = k
            assign(depth + 1, new)
        sig[pos] = 0

    assign(0, base)
    results.sort()
    return results


def slab_vector(dim: int, sig) -> ConstraintVector:
    """Half-integer slab vector with bounds signature -+ 1/2 at every index."""
    lowers = tuple(rational(2 * k - 1, 2) for k in sig)
    uppers = tuple(rational(2 * k + 1, 2) for k in sig)
    return ConstraintVector(dim, lowers, uppers)


def enumerate_atoms(p: MapParams, family: MultiplierFamily | None = None) -> AtomTable:
    """Build the full atom table, each atom validated nonempty by the optimizer."""
    if family is None:
        family = standard_family(p.dim)
    coupling = p.coupling
    pairs = index_pairs(p.dim)
    atoms = []
    for label, sig in enumerate(_feasible_signatures(p.dim), start=1):
        slab = slab_vector(p.dim, sig)
        opt, empty = optimize(slab, family)
        if empty:
            raise AssertionError(f"feasibility check admitted an empty signature {sig}")
        const = constant_vector_from_signature(p.dim, sig)
        shift = tuple(coupling * sum(const[i - 1 : j]) for i, j in pairs)
        atoms.append(Atom(label, sig, slab, opt, const, shift))
    return AtomTable(p, atoms)


@lru_cache(maxsize=8)
def _atom_table_cached(dim: int, epsilon_text: str) -> AtomTable:
    return enumerate_atoms(params(dim, rational(epsilon_text)))


def atom_table(dim: int, epsilon) -> AtomTable:
    """Cached atom table for one (dimension, epsilon)."""
    return _atom_table_cached(dim, format_rational(rational(epsilon)))


# ---------------------------------------------------------------------------
# Induced vector dynamics
# ---------------------------------------------------------------------------


def gamma(p: MapParams, atom: Atom, m: ConstraintVector) -> ConstraintVector:
    """Image vector of a polytope contained in the atom's closure."""
    for slo, sup, lo, up in zip(atom.m_a.lowers, atom.m_a.uppers, m.lowers, m.uppers):
        if lo < slo or up > sup:
            raise ValueError("polytope is not contained in the atom closure")
    s = p.scale
    return ConstraintVector(
        m.dim,
        tuple(s * lo + c for lo, c in zip(m.lowers, atom.gamma_constant)),
        tuple(s * up + c for up, c in zip(m.uppers, atom.gamma_constant)),
    )


def gamma_inverse(p: MapParams, atom: Atom, m: ConstraintVector) -> ConstraintVector:
    """Exact affine inverse of gamma (no containment requirement)."""
    s = p.scale
    return ConstraintVector(
        m.dim,
        tuple((lo - c) / s for lo, c in zip(m.lowers, atom.gamma_constant)),
        tuple((up - c) / s for up, c in zip(m.uppers, atom.gamma_constant)),
    )


def project_to_fundamental(
    p: MapParams,
    m: ConstraintVector,
    family: MultiplierFamily,
    semi: bool = False,
):
    """Split m along the planes x_c in 1/2 + Z and translate pieces into S_D.

    Only single-coordinate planes are cut here; discontinuities of sum
    constraints are handled by the subsequent atom intersections.  The
    returned pieces are optimized and their union is the mod-1 reduction
    of P_m (mod 0).
    """
    dim = p.dim
    pos = pair_position(dim)
    coord_intervals = []
    for c in range(1, dim + 1):
        lo = m.lowers[pos[(c, c)]]
        up = m.uppers[pos[(c, c)]]
        cuts = []
        n0 = rat_floor(lo - HALF) + 1
        n1 = rat_ceil(up - HALF) - 1
        for k in range(n0, n1 + 1):
            cuts.append(k + HALF)
        edges = [lo] + cuts + [up]
        cells = []
        for a, b in zip(edges, edges[1:]):
            cell = rat_floor((a + b) / 2 + HALF)
            cells.append((a, b, cell))
        coord_intervals.append(cells)

    pieces = []
    for choice in product(*coord_intervals):
        tight_lo = list(m.lowers)
        tight_up = list(m.uppers)
        shift = []
        for c, (a, b, cell) in enumerate(choice, start=1):
            tight_lo[pos[(c, c)]] = a
            tight_up[pos[(c, c)]] = b
            shift.append(rational(-cell))
        res, empty = optimize_bounds(tuple(tight_lo), tuple(tight_up), family, semi)
        if empty:
            continue
        piece = ConstraintVector(dim, res[0], res[1])
        if any(s != 0 for s in shift):
            piece = polytope.translate(piece, shift)
        pieces.append(piece)
    return pieces


def build_cylinder(
    p: MapParams,
    table: AtomTable,
    word,
    family: MultiplierFamily,
    semi: bool = False,
):
    """Exact cylinder of an atom-label word, as a list of polytope pieces.

    Backward recursion through the word: the preimage of the tail cylinder
    inside the head atom is an intersection with gamma_inverse, taken over
    every integer translate of the tail that meets the atom's image (the
    map wraps around the torus, so several translates can contribute).
    Empty words are rejected; an empty result means the word is infeasible.
    """
    word = tuple(int(a) for a in word)
    if not word:
        raise ValueError("empty word")
    for a in word:
        if not 1 <= a <= len(table):
            raise ValueError(f"letter {a} outside 1..{len(table)}")

    pieces = [table.atom(word[-1]).m_opt]
    pos = pair_position(p.dim)
    for letter in reversed(word[:-1]):
        atom = table.atom(letter)
        image = gamma(p, atom, atom.m_opt)
        nxt = []
        for piece in pieces:
            ranges = []
            for c in range(1, p.dim + 1):
                k = pos[(c, c)]
                n0 = rat_floor(image.lowers[k] - piece.uppers[k]) + 1
                n1 = rat_ceil(image.uppers[k] - piece.lowers[k]) - 1
                ranges.append(range(n0, n1 + 1))
            for shift in product(*ranges):
                cand = piece if all(s == 0 for s in shift) else polytope.translate(piece, shift)
                pre = gamma_inverse(p, atom, cand)
                q = intersect(atom.m_opt, pre, family, semi)
                if q is not None:
                    nxt.append(q)
        pieces = nxt
        if not pieces:
            break
    return pieces


# ---------------------------------------------------------------------------
# Symmetry representations (dimensions 2 and 3)
# ---------------------------------------------------------------------------


def _fold_point(x):
    return tuple(fold_half(v) for v in x)


_SYMMETRIES_2 = {
    "neg_id": lambda x: (-x[0], -x[1]),
    "sigma_213": lambda x: (-x[0], x[0] + x[1]),
    "sigma_132": lambda x: (x[0] + x[1], -x[1]),
    "sigma_321": lambda x: (-x[1], -x[0]),
}

_SYMMETRIES_3 = {
    "neg_id": lambda x: (-x[0], -x[1], -x[2]),
    "sigma_2134": lambda x: (-x[0], x[0] + x[1], x[2]),
    "sigma_3214": lambda x: (-x[1], -x[0], x[0] + x[1] + x[2]),
    "sigma_4231": lambda x: (-x[1] - x[2], x[1], -x[0] - x[1]),
    "sigma_1324": lambda x: (x[0] + x[1], -x[1], x[1] + x[2]),
    "sigma_1432": lambda x: (x[0] + x[1] + x[2], -x[2], -x[1]),
    "sigma_1243": lambda x: (x[0], x[1] + x[2], -x[2]),
}


def symmetry_names(dim: int):
    if dim == 2:
        return tuple(_SYMMETRIES_2)
    if dim == 3:
        return tuple(_SYMMETRIES_3)
    raise ValueError("named symmetries are provided for dimensions 2 and 3 only")


def apply_named_symmetry(name: str, x):
    """Apply one of the listed torus symmetries, folding back into S_D."""
    table = {2: _SYMMETRIES_2, 3: _SYMMETRIES_3}.get(len(x))
    if table is None:
        raise ValueError("named symmetries are provided for dimensions 2 and 3 only")
    if name not in table:
        raise ValueError(f"unknown symmetry {name!r} for dimension {len(x)}")
    x = tuple(rational(v) for v in x)
    return _fold_point(table[name](x))
