"""Floating-point trajectory simulation and order-parameter estimation.

Simulation is evidence, not proof: double-precision orbits supply the
atom-label words that seed the exact construction, and order-parameter
scans locate the coupling range where sign-flip symmetry breaks.  The
order parameter of an orbit is |time average of the central coordinate
(projected to (0, 1)) - 1/2|; it vanishes for ergodic dynamics and stays
positive on an asymmetric component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import AtomTable, MapParams

PLANE_GUARD = 1e-12  # distance to a discontinuity plane that flags a label


@dataclass(frozen=True)
class OrbitRecord:
    """A simulated orbit: projected points, atom-label word, provenance."""

    points: np.ndarray  # (n1, D) floats in (0, 1)
    word: tuple  # one label per recorded point; -1 flags near-plane points
    params: MapParams
    seed: object
    n_discard: int
    n_keep: int


def _h_float(v: float) -> float:
    return math.floor(v + 0.5)


def _step_single(x, scale, coupling):
    """One double-precision step of the reduced map on a tuple in S_D."""
    d = len(x)
    prefix = [0.0] * (d + 1)
    for i, v in enumerate(x):
        prefix[i + 1] = prefix[i] + v
    hmat = [[_h_float(prefix[b] - prefix[a]) for a in range(d + 1)] for b in range(d + 1)]
    out = []
    for i in range(1, d + 1):
        b = 2.0 * hmat[i][i - 1]
        for a in range(i - 1):
            b += hmat[i][a] - hmat[i - 1][a]
        for j in range(i + 1, d + 1):
            b += hmat[j][i - 1] - hmat[j][i]
        v = scale * x[i - 1] + coupling * b
        out.append(v - math.floor(v + 0.5))
    return tuple(out)


def _label_single(x, table: AtomTable):
    """Atom label of a float point, or -1 within the guard band of a plane."""
    d = len(x)
    prefix = [0.0] * (d + 1)
    for i, v in enumerate(x):
        prefix[i + 1] = prefix[i] + v
    sig = []
    for i in range(1, d + 1):
        for j in range(i, d + 1):
            v = prefix[j] - prefix[i - 1] + 0.5
            if abs(v - round(v)) < PLANE_GUARD:
                return -1
            sig.append(int(math.floor(v)))
    # rebuild in canonical (i, j) order: the loop above already emits it
    label = table.label_of_signature(tuple(sig))
    return label if label is not None else -1


def simulate_orbit(
    p: MapParams,
    x0,
    n_discard: int,
    n_keep: int,
    table: AtomTable | None = None,
    seed=None,
) -> OrbitRecord:
    """Iterate the float map from x0 in (0, 1)^D; record after the transient."""
    if len(x0) != p.dim:
        raise ValueError("initial condition dimension mismatch")
    scale = float(2 * (1 - float(p.epsilon)))
    coupling = 2.0 * float(p.epsilon) / (p.dim + 1)
    x = tuple(v - math.floor(v + 0.5) for v in map(float, x0))
    for _ in range(n_discard):
        x = _step_single(x, scale, coupling)
    points = np.empty((n_keep, p.dim))
    word = []
    for t in range(n_keep):
        points[t] = [v + 1.0 if v < 0 else v for v in x]
        word.append(_label_single(x, table) if table is not None else -1)
        x = _step_single(x, scale, coupling)
    return OrbitRecord(points, tuple(word), p, seed, n_discard, n_keep)


@dataclass(frozen=True)
class OPEstimate:
    value: float
    horizon: int
    initial_condition: tuple
    epsilon: float


def central_coordinate(dim: int) -> int:
    """0-based index of the coordinate used by the order parameter."""
    return (dim + 1) // 2 - 1


def order_parameter(orbit: OrbitRecord, horizon: int) -> OPEstimate:
    """|mean of the central projected coordinate over `horizon` points - 1/2|."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if horizon > len(orbit.points):
        raise ValueError("horizon exceeds recorded orbit length")
    c = central_coordinate(orbit.params.dim)
    value = abs(float(np.mean(orbit.points[:horizon, c])) - 0.5)
    return OPEstimate(value, horizon, tuple(orbit.points[0]), float(orbit.params.epsilon))


# ---------------------------------------------------------------------------
# Vectorized order-parameter scan
# ---------------------------------------------------------------------------


def _h_batch(v):
    return np.floor(v + 0.5)


def _step_batch(x, scale, coupling, dim):
    """One float step for a batch of orbits, shape (n, D)."""
    n = x.shape[0]
    prefix = np.zeros((n, dim + 1))
    np.cumsum(x, axis=1, out=prefix[:, 1:])
    hmat = _h_batch(prefix[:, :, None] - prefix[:, None, :])  # [n, b, a]
    b = np.empty_like(x)
    for i in range(1, dim + 1):
        acc = 2.0 * hmat[:, i, i - 1]
        if i > 1:
            acc = acc + hmat[:, i, : i - 1].sum(axis=1) - hmat[:, i - 1, : i - 1].sum(axis=1)
        if i < dim:
            acc = acc + hmat[:, i + 1 :, i - 1].sum(axis=1) - hmat[:, i + 1 :, i].sum(axis=1)
        b[:, i - 1] = acc
    y = scale * x + coupling * b
    return y - np.floor(y + 0.5)


def scan_one_epsilon(dim, eps, n_initial, horizons, seed, eps_index):
    """OP estimates at one coupling value for n_initial random starts.

    Returns rows (eps, init_index, horizon, op_value).  Seeding depends
    only on (seed, eps_index), so scans are reproducible and independent
    of how work is distributed.
    """
    rng = np.random.default_rng([int(seed), int(eps_index)])
    x0 = rng.uniform(0.0, 1.0, size=(n_initial, dim))
    scale = 2.0 * (1.0 - eps)
    coupling = 2.0 * eps / (dim + 1)
    x = x0 - np.floor(x0 + 0.5)
    horizons = sorted(int(t) for t in horizons)
    c = central_coordinate(dim)
    sums = np.zeros(n_initial)
    rows = []
    t = 0
    for horizon in horizons:
        while t < horizon:
            x = _step_batch(x, scale, coupling, dim)
            proj = x[:, c]
            sums += np.where(proj < 0, proj + 1.0, proj)
            t += 1
        ops = np.abs(sums / t - 0.5)
        rows.extend((float(eps), k, t, float(ops[k])) for k in range(n_initial))
    return rows


def op_scan(dim, eps_values, n_initial, horizons, seed, threads: int = 1):
    """Order-parameter table over a coupling grid.

    Rows are (epsilon, init_index, horizon, op_value) in grid order; byte
    identical output for a fixed seed regardless of thread count.
    """
    eps_values = [float(e) for e in eps_values]
    tasks = [
        (dim, eps, n_initial, tuple(horizons), seed, idx)
        for idx, eps in enumerate(eps_values)
    ]
    if threads > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_scan_task, tasks))
    else:
        chunks = [_scan_task(t) for t in tasks]
    rows = []
    for chunk in chunks:
        rows.extend(chunk)
    return rows


def _scan_task(args):
    return scan_one_epsilon(*args)


def rows_to_csv(rows) -> str:
    """CSV text for scan rows, floats at 17 significant digits."""
    lines = ["epsilon,init_index,T,op_value"]
    for eps, k, t, op in rows:
        lines.append(f"{eps:.17g},{k},{t},{op:.17g}")
    return "\n".join(lines) + "\n"


def orbit_to_csv(orbit: OrbitRecord) -> str:
    """CSV dump of an orbit: t, coordinates in (0,1), atom label."""
    dim = orbit.params.dim
    header = "t," + ",".join(f"x_{i}" for i in range(1, dim + 1)) + ",atom_label"
    lines = [header]
    for t, (pt, label) in enumerate(zip(orbit.points, orbit.word)):
        coords = ",".join(f"{v:.17g}" for v in pt)
        lines.append(f"{t},{coords},{label}")
    return "\n".join(lines) + "\n"


def detect_onset(rows, fraction: float = 0.05, factor: float = 3.0, noise_window: int = 10):
    """Smallest grid epsilon whose largest-horizon OP values exceed noise.

    The noise level is the maximum OP over the `noise_window` smallest grid
    values (assumed ergodic); onset requires at least `fraction` of the
    initial conditions above `factor` times that level.
    """
    horizon = max(t for _, _, t, _ in rows)
    by_eps: dict[float, list[float]] = {}
    for eps, _, t, op in rows:
        if t == horizon:
            by_eps.setdefault(eps, []).append(op)
    grid = sorted(by_eps)
    if len(grid) <= noise_window:
        raise ValueError("grid too small for onset detection")
    noise = max(max(by_eps[e]) for e in grid[:noise_window])
    threshold = factor * noise
    for eps in grid:
        ops = by_eps[eps]
        exceed = sum(1 for v in ops if v > threshold)
        if exceed >= fraction * len(ops):
            return eps
    return None


def max_op_summary(rows):
    """Per-epsilon maximum OP at the largest horizon (scaling-law table)."""
    horizon = max(t for _, _, t, _ in rows)
    by_eps: dict[float, float] = {}
    for eps, _, t, op in rows:
        if t == horizon:
            by_eps[eps] = max(by_eps.get(eps, 0.0), op)
    return sorted(by_eps.items())


# ---------------------------------------------------------------------------
# Semi-conjugacy residuals
# ---------------------------------------------------------------------------


def _dist_mod1(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def _near_half_integer(v: float, guard: float) -> bool:
    return abs(v + 0.5 - round(v + 0.5)) < guard


def semiconjugacy_residual(n_units: int, epsilon, n_samples: int, seed=0, guard: float = 1e-9) -> float:
    """Max float distance mod 1 between the two sides of the reduction identity.

    Samples within `guard` of any discontinuity plane are skipped; the
    identity only holds off those planes.
    """
    eps = float(epsilon)
    dim = n_units - 1
    rng = np.random.default_rng(seed)
    worst = 0.0
    accepted = 0
    while accepted < n_samples:
        u = rng.uniform(0.0, 1.0, size=n_units)
        diffs = [u[i] - u[i + 1] for i in range(dim)]
        args = [u[j] - u[i] for i in range(n_units) for j in range(n_units) if i != j]
        x = [d - math.floor(d + 0.5) for d in diffs]
        prefix = [0.0]
        for v in x:
            prefix.append(prefix[-1] + v)
        args += [prefix[j] - prefix[i] for i in range(dim + 1) for j in range(i + 1, dim + 1)]
        if any(_near_half_integer(v, guard) for v in args):
            continue
        accepted += 1
        # coupled side
        fu = []
        for i in range(n_units):
            acc = 2.0 * u[i]
            for j in range(n_units):
                if j != i:
                    d = u[j] - u[i]
                    acc += (2.0 * eps / n_units) * (d - _h_float(d))
            fu.append(acc)
        lhs_diffs = [fu[i] - fu[i + 1] for i in range(dim)]
        lhs_sum = sum(fu)
        # reduced side
        scale = 2.0 * (1.0 - eps)
        coupling = 2.0 * eps / n_units
        gx = _step_single(tuple(x), scale, coupling)
        rhs_sum = 2.0 * sum(u)
        res = max(_dist_mod1(a, b) for a, b in zip(lhs_diffs, gx))
        res = max(res, _dist_mod1(lhs_sum, rhs_sum))
        worst = max(worst, res)
    return worst


def semiconjugacy_residual_exact(n_units: int, epsilon, n_samples: int, seed=0):
    """Exact-rational residual of the reduction identity; 0 when it holds."""
    from .dynamics import apply_coupled, apply_reduced, params, reduce_coordinates, signature_of_point
    from .rationals import ZERO, fold_half, fold_unit, rational

    eps = rational(epsilon)
    dim = n_units - 1
    p = params(dim, eps)
    rng = np.random.default_rng(seed)
    worst = ZERO
    accepted = 0
    while accepted < n_samples:
        u = tuple(rational(int(v), 999983) for v in rng.integers(0, 999983, size=n_units))
        x, _total = reduce_coordinates(u)
        if signature_of_point(x) is None:
            continue
        if any((rational(a) - rational(b) + rational(1, 2)).denominator == 1 for a in u for b in u if a is not b):
            continue
        accepted += 1
        fu = apply_coupled(n_units, eps, u)
        lhs_diffs, lhs_sum = reduce_coordinates(fu)
        gx = apply_reduced(p, x)
        rhs_sum = fold_unit(2 * sum(u, ZERO))
        for a, b in zip(lhs_diffs, gx):
            d = fold_half(a - b)
            worst = max(worst, abs(d))
        d = fold_half(lhs_sum - rhs_sum)
        worst = max(worst, abs(d))
    return worst
