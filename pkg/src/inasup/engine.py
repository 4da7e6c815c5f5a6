"""Invariant asymmetric union construction, certificates, and verification.

Starting from one folding-pattern branch of the cylinder of an atom-label
word, the engine repeatedly maps every new polytope forward, folds the
images into the fundamental domain, intersects them with atoms, discards
parts already covered by stored polytopes (chopping off complementary
pieces where certified), and stores the remainder.  It stops with Success
when a generation produces nothing new (the accumulated union is forward
invariant), or aborts as soon as any piece touches the sign-flip image of
the stored union, or when the piece budget is exhausted.

A Success result is written as a certificate: dimension, exact epsilon,
seed word, and the stored constraint vectors.  An independent verifier
re-establishes, with full optimization throughout, that the union maps
into itself mod 0 and is disjoint from its sign-flip image; together these
two set conditions are what the certificate claims (the "InAsUP"
conditions: Invariant Asymmetric Union of Polytopes).

All pairwise set tests run a conservative floating-point prefilter over
per-atom piece buckets (a pair can only be declared disjoint when the
float comparison holds with margin); exact rational arithmetic decides
every surviving case, so no decision ever rests on floats alone.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .chopper import ChopKind, try_chop
from .dynamics import AtomTable, MapParams, build_cylinder, enumerate_atoms, gamma, project_to_fundamental
from .optimizer import MultiplierFamily, intersect, optimize, standard_family
from .polytope import ConstraintVector, deserialize, includes, pair_count, pair_position, serialize, sign_flip
from .rationals import HALF, format_rational, parse_rational, rational

CERTIFICATE_HEADER = "INASUP v1"
DEFAULT_MAX_CARDINALITY = 10_000_000
FLOAT_MARGIN = 1e-9


class CertificateError(ValueError):
    """Raised on malformed certificate text."""


class Outcome(Enum):
    SUCCESS = "Success"
    ASYMMETRY_FAIL = "AsymmetryFail"
    BUDGET_EXCEEDED = "BudgetExceeded"


@dataclass(frozen=True, slots=True)
class Certificate:
    """A finished invariant asymmetric union of polytopes."""

    dim: int
    epsilon: object
    word: tuple
    polytopes: tuple

    def to_text(self) -> str:
        lines = [CERTIFICATE_HEADER]
        word = ",".join(str(a) for a in self.word)
        lines.append(f"D={self.dim} eps={format_rational(self.epsilon)} word={word}")
        lines.append(f"count={len(self.polytopes)}")
        for m in self.polytopes:
            lines.append(serialize(m))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Certificate":
        lines = text.splitlines()
        if not lines or lines[0].strip() != CERTIFICATE_HEADER:
            raise CertificateError(f"missing '{CERTIFICATE_HEADER}' header")
        try:
            fields = dict(part.split("=", 1) for part in lines[1].split())
            dim = int(fields["D"])
            eps = parse_rational(fields["eps"])
            word = tuple(int(a) for a in fields["word"].split(",")) if fields["word"] else ()
            count = int(lines[2].split("=", 1)[1])
        except (KeyError, IndexError, ValueError) as exc:
            raise CertificateError(f"malformed certificate header: {exc}") from exc
        rows = pair_count(dim)
        body = [ln for ln in lines[3:] if ln.strip()]
        if len(body) != count * rows:
            raise CertificateError(
                f"expected {count * rows} constraint lines, found {len(body)}"
            )
        polys = []
        for k in range(count):
            polys.append(deserialize(dim, body[k * rows : (k + 1) * rows]))
        return cls(dim, eps, word, tuple(polys))


@dataclass(frozen=True, slots=True)
class ConstructionReport:
    outcome: Outcome
    steps: int
    final_cardinality: int
    cpu_time: float
    certificate: Certificate | None


class _Bucket:
    """Stored pieces of one atom, with float bound arrays for prefiltering."""

    __slots__ = ("vecs", "_flo", "_fup", "n")

    def __init__(self, dim: int, capacity: int = 16):
        e = pair_count(dim)
        self.vecs: list = []
        self._flo = np.empty((capacity, e))
        self._fup = np.empty((capacity, e))
        self.n = 0

    def add(self, vec: ConstraintVector):
        if self.n == self._flo.shape[0]:
            self._flo = np.concatenate([self._flo, np.empty_like(self._flo)])
            self._fup = np.concatenate([self._fup, np.empty_like(self._fup)])
        self._flo[self.n] = vec.flowers
        self._fup[self.n] = vec.fuppers
        self.vecs.append(vec)
        self.n += 1

    def overlap_candidates(self, vec: ConstraintVector):
        """Stored indices not certainly disjoint from vec, in insertion order."""
        if self.n == 0:
            return ()
        flo = self._flo[: self.n]
        fup = self._fup[: self.n]
        qlo = np.asarray(vec.flowers)
        qup = np.asarray(vec.fuppers)
        disjoint = ((flo > qup + FLOAT_MARGIN) | (qlo > fup + FLOAT_MARGIN)).any(axis=1)
        return np.nonzero(~disjoint)[0]


def _atom_filter(table: AtomTable):
    """Float bound arrays of the optimized atom vectors, for candidate atoms."""
    flo = np.array([a.m_opt.flowers for a in table.atoms])
    fup = np.array([a.m_opt.fuppers for a in table.atoms])
    return flo, fup


def _candidate_atoms(atom_bounds, piece: ConstraintVector):
    flo, fup = atom_bounds
    qlo = np.asarray(piece.flowers)
    qup = np.asarray(piece.fuppers)
    disjoint = ((flo > qup + FLOAT_MARGIN) | (qlo > fup + FLOAT_MARGIN)).any(axis=1)
    return np.nonzero(~disjoint)[0]


def _reduce_piece(q: ConstraintVector, buckets, family, semi):
    """Parts of q not covered by the bucket contents, per the chop rules.

    Scans each bucket in insertion order; a piece included in a stored
    polytope is dropped, a certified chop replaces it by its complementary
    pieces (which resume scanning right after the chopping polytope), and
    everything else is kept.  Candidate lists computed from q stay valid
    for every descendant piece (descendants are subsets of q).
    """
    cand_lists = [b.overlap_candidates(q) for b in buckets]
    out = []
    stack = [(q, 0, 0)]
    while stack:
        w, bi, pos = stack.pop()
        consumed = False
        while bi < len(buckets):
            vecs = buckets[bi].vecs
            cands = cand_lists[bi]
            for k in range(pos, len(cands)):
                s = vecs[cands[k]]
                if includes(s, w):
                    consumed = True
                    break
                inter = intersect(w, s, family, semi)
                if inter is None or includes(w, s):
                    continue
                res = try_chop(w, s, family, semi, inter)
                if res.kind is ChopKind.NO_CHOP:
                    continue
                for o in reversed(res.outers):
                    stack.append((o, bi, k + 1))
                consumed = True
                break
            if consumed:
                break
            bi += 1
            pos = 0
        if not consumed:
            out.append(w)
    return out


def _meets_flip(fq: ConstraintVector, bucket: _Bucket | None, family, semi) -> bool:
    if bucket is None:
        return False
    for k in bucket.overlap_candidates(fq):
        if intersect(fq, bucket.vecs[k], family, semi) is not None:
            return True
    return False


def build_inasup(
    p: MapParams,
    word,
    max_cardinality: int = DEFAULT_MAX_CARDINALITY,
    use_semi_opt: bool = False,
    table: AtomTable | None = None,
    family: MultiplierFamily | None = None,
    branch: int = 0,
) -> ConstructionReport:
    """Run the invariant-union construction from one cylinder word.

    The exact cylinder of a word splits into one polytope per folding
    pattern of the wrapped map; distinct pieces generally belong to
    distinct ergodic components, so the construction seeds from a single
    piece (`branch` indexes the deterministic enumeration, default the
    first).  Returns a report whose certificate is set only on Success.
    With use_semi_opt the cheaper two-support optimizer runs everywhere,
    which can store spurious (empty) pieces and inflate the union but
    never compromises a verified certificate.
    """
    t0 = time.perf_counter()
    semi = use_semi_opt
    if family is None:
        family = standard_family(p.dim)
    if table is None:
        table = enumerate_atoms(p, family)

    word = tuple(int(a) for a in word)
    seed_pieces = build_cylinder(p, table, word, family, semi)
    if not seed_pieces:
        raise ValueError(f"word {word} defines an empty cylinder")
    if not 0 <= branch < len(seed_pieces):
        raise ValueError(f"cylinder of {word} has {len(seed_pieces)} pieces, no branch {branch}")
    seed = seed_pieces[branch]
    seed_label = word[0]

    def report(outcome, steps, cardinality, cert=None):
        return ConstructionReport(outcome, steps, cardinality, time.perf_counter() - t0, cert)

    if table.flip_label(seed_label) == seed_label:
        if intersect(sign_flip(seed), seed, family, semi) is not None:
            return report(Outcome.ASYMMETRY_FAIL, 0, 1)

    atom_bounds = _atom_filter(table)
    up_buckets: dict[int, _Bucket] = {seed_label: _Bucket(p.dim)}
    up_buckets[seed_label].add(seed)
    up_list = [(seed, seed_label)]
    np_list = list(up_list)
    steps = 0

    while np_list:
        ep_list: list = []
        ep_buckets: dict[int, _Bucket] = {}
        for vec, label in np_list:
            image = gamma(p, table.atom(label), vec)
            for piece in project_to_fundamental(p, image, family, semi):
                for ai in _candidate_atoms(atom_bounds, piece):
                    atom = table.atoms[ai]
                    q = intersect(piece, atom.m_opt, family, semi)
                    if q is None:
                        continue
                    b = atom.label
                    fb = table.flip_label(b)
                    fq = sign_flip(q)
                    if _meets_flip(fq, up_buckets.get(fb), family, semi) or _meets_flip(
                        fq, ep_buckets.get(fb), family, semi
                    ):
                        return report(Outcome.ASYMMETRY_FAIL, steps, len(up_list) + len(ep_list))
                    if fb == b and intersect(fq, q, family, semi) is not None:
                        return report(Outcome.ASYMMETRY_FAIL, steps, len(up_list) + len(ep_list))
                    scan = [bk for bk in (up_buckets.get(b), ep_buckets.get(b)) if bk is not None]
                    for w in _reduce_piece(q, scan, family, semi):
                        ep_list.append((w, b))
                        ep_buckets.setdefault(b, _Bucket(p.dim)).add(w)
                    if len(up_list) + len(ep_list) >= max_cardinality:
                        return report(Outcome.BUDGET_EXCEEDED, steps, len(up_list) + len(ep_list))
        up_list.extend(ep_list)
        for b, bucket in ep_buckets.items():
            target = up_buckets.setdefault(b, _Bucket(p.dim))
            for w in bucket.vecs:
                target.add(w)
        np_list = ep_list
        steps += 1

    cert = Certificate(p.dim, p.epsilon, word, tuple(m for m, _ in up_list))
    return report(Outcome.SUCCESS, steps, len(up_list), cert)


def verify_certificate(
    cert: Certificate,
    table: AtomTable | None = None,
    family: MultiplierFamily | None = None,
) -> bool:
    """Independent check of the two invariant-asymmetric-union conditions.

    Uses full optimization throughout regardless of how the certificate
    was built.  Coverage of every image piece is certified mod 0 by
    exhaustively chopping residuals against the stored polytopes; a piece
    that cannot be reduced to nothing fails the certificate.
    """
    p = MapParams(cert.dim, rational(cert.epsilon))
    if family is None:
        family = standard_family(p.dim)
    if table is None:
        table = enumerate_atoms(p, family)

    pos = pair_position(p.dim)
    polys = []
    for m in cert.polytopes:
        opt, empty = optimize(m, family)
        if empty:
            return False
        for c in range(1, p.dim + 1):
            k = pos[(c, c)]
            if opt.lowers[k] < -HALF or opt.uppers[k] > HALF:
                return False  # escapes the fundamental domain
        polys.append(opt)

    # Stored pieces bucketed by every atom they meet, in insertion order.
    atom_bounds = _atom_filter(table)
    buckets: dict[int, _Bucket] = {a.label: _Bucket(p.dim) for a in table.atoms}
    meets: list[list[int]] = []
    for m in polys:
        labels = []
        for ai in _candidate_atoms(atom_bounds, m):
            atom = table.atoms[ai]
            if intersect(m, atom.m_opt, family) is not None:
                buckets[atom.label].add(m)
                labels.append(atom.label)
        if not labels:
            return False
        meets.append(labels)

    # Asymmetry: no stored piece intersects the flip of any stored piece.
    for m, labels in zip(polys, meets):
        fm = sign_flip(m)
        for b in labels:
            if _meets_flip(fm, buckets[table.flip_label(b)], family, False):
                return False

    # Invariance: every image piece reduces to nothing against the union.
    for m, labels in zip(polys, meets):
        for b in labels:
            atom = table.atom(b)
            q = intersect(m, atom.m_opt, family)
            image = gamma(p, atom, q)
            for piece in project_to_fundamental(p, image, family):
                for ti in _candidate_atoms(atom_bounds, piece):
                    target = table.atoms[ti]
                    r = intersect(piece, target.m_opt, family)
                    if r is None:
                        continue
                    if _reduce_piece(r, [buckets[target.label]], family, False):
                        return False
    return True


def seed_words(
    p: MapParams,
    labels,
    length: int,
    table: AtomTable,
    family: MultiplierFamily | None = None,
    count: int | None = None,
    semi: bool = False,
):
    """Distinct nonempty cylinder words of a given length from a label record.

    Sliding windows over the recorded atom labels, skipping windows that
    contain a discontinuity flag (-1), deduplicated in first-seen order and
    validated as nonempty exact cylinders.
    """
    if family is None:
        family = standard_family(p.dim)
    labels = list(labels)
    if length < 1:
        raise ValueError("window length must be >= 1")
    if length > len(labels):
        raise ValueError(f"window length {length} exceeds record length {len(labels)}")
    seen = set()
    words = []
    for start in range(len(labels) - length + 1):
        window = tuple(labels[start : start + length])
        if window in seen or any(a < 1 for a in window):
            continue
        seen.add(window)
        if build_cylinder(p, table, window, family, semi):
            words.append(window)
            if count is not None and len(words) >= count:
                break
    return words
