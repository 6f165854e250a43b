"""Lattice box grids, hitting records, and polygonal path approximations.

The plane (or R^N) is tiled by closed cubes of side eps - eps^exponent
centered at the lattice points eps*z, separated by tunnels of width
eps^exponent.  A hitting record lists the successive first-entry times into
boxes different from the one last visited; the polygonal approximation joins
the scaled lattice words at those times and then holds the last value.

Boundary convention: boxes are closed, so a sample exactly on a face counts
as inside.  Corner geometry is left square; nothing numeric here depends on
rounding the corners.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentRecords, InvalidInput
from .integrals import SamplePath

BISECTION_DIVISOR = 100.0   # hitting times refined to eps^exponent / 100


@dataclass(frozen=True)
class BoxGrid:
    """Cubes of side eps - eps^exponent around lattice points eps * z."""

    eps: float
    exponent: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise InvalidInput("eps must lie in (0, 1)")
        if self.eps - self.eps**self.exponent <= 0.0:
            raise InvalidInput("box side eps - eps^exponent must be positive")

    @property
    def half_side(self) -> float:
        return 0.5 * (self.eps - self.eps**self.exponent)

    @property
    def gap(self) -> float:
        """Tunnel width between adjacent boxes along an axis."""
        return self.eps**self.exponent

    def contains(self, z, x) -> bool:
        z = np.asarray(z, dtype=float)
        x = np.asarray(x, dtype=float)
        return bool(np.all(np.abs(x - self.eps * z) <= self.half_side))

    def classify(self, points):
        """(candidate lattice words, inside mask) for an (n, N) sample array."""
        pts = np.asarray(points, dtype=float)
        z = np.rint(pts / self.eps).astype(np.int64)
        inside = np.all(np.abs(pts - self.eps * z) <= self.half_side, axis=1)
        return z, inside

    def box_bounds(self, z):
        z = np.asarray(z, dtype=float)
        return self.eps * z - self.half_side, self.eps * z + self.half_side


def box_contains(grid: BoxGrid, z, x) -> bool:
    return grid.contains(z, x)


@dataclass(frozen=True)
class HittingRecord:
    """Entry times and lattice word of the successive box visits on [0, 1]."""

    eps: float
    exponent: float
    taus: np.ndarray   # (M+1,), taus[0] = 0
    word: np.ndarray   # (M+1, N) integer lattice points, word[0] = 0

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        word = np.asarray(self.word, dtype=np.int64)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "word", word)
        if taus.shape[0] != word.shape[0] or taus.shape[0] < 1:
            raise InvalidInput("times and word must have equal positive length")
        if taus[0] != 0.0 or np.any(np.diff(taus) <= 0):
            raise InvalidInput("visit times must start at 0 and increase strictly")
        if np.any(word[0] != 0):
            raise InvalidInput("the word must start at the origin")
        if np.any(np.all(word[1:] == word[:-1], axis=1)):
            raise InvalidInput("consecutive word entries must differ")

    @property
    def count(self) -> int:
        """Number of boxes visited after leaving the initial one."""
        return self.taus.shape[0] - 1

    def to_json(self) -> str:
        return json.dumps(
            {
                "eps": self.eps,
                "exponent": self.exponent,
                "taus": self.taus.tolist(),
                "word": self.word.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "HittingRecord":
        obj = json.loads(text)
        return cls(obj["eps"], obj["exponent"], np.array(obj["taus"]), np.array(obj["word"]))


def _bisect_entry(grid: BoxGrid, target_z, t_lo, x_lo, t_hi, x_hi, tol):
    """Earliest time in (t_lo, t_hi] at which the segment lies in the target
    box; the bracket keeps x_lo outside and x_hi inside, and membership along
    a segment into a convex box is a single interval."""
    center = grid.eps * np.asarray(target_z, dtype=float)
    lo_t, hi_t = t_lo, t_hi
    while hi_t - lo_t > tol:
        mid_t = 0.5 * (lo_t + hi_t)
        mid_x = x_lo + (mid_t - t_lo) / (t_hi - t_lo) * (x_hi - x_lo)
        if np.all(np.abs(mid_x - center) <= grid.half_side):
            hi_t = mid_t
        else:
            lo_t = mid_t
    return hi_t


def extract_hitting(path: SamplePath, grid: BoxGrid) -> HittingRecord:
    """Scan the samples for entries into boxes other than the current one.

    Detection is sample-based: an event fires when a sample lies in a
    non-current box, and the bracketing segment is then bisected against that
    box to time tolerance eps^exponent / 100.  Boxes crossed entirely between
    two samples are invisible (the simulator's step-resolution rule keeps
    that risk small), so every recorded visit is backed by at least one
    sample inside its box.  Revisits of the current box never count.
    """
    tol = grid.eps**grid.exponent / BISECTION_DIVISOR
    times, pts = path.times, path.points
    z_all, inside_all = grid.classify(pts)
    current = np.zeros(path.dim, dtype=np.int64)
    taus = [0.0]
    word = [current.copy()]

    # Only the first sample of each same-box run can start an event: samples
    # deeper in a run match the then-current box and are skipped anyway.
    # Packing assumes lattice coordinates below 4096 in magnitude.
    keys = np.where(inside_all, z_all[:, 0].astype(np.int64), np.iinfo(np.int64).min)
    for j in range(1, path.dim):
        keys = np.where(inside_all, keys * 8192 + z_all[:, j], keys)
    run_start = np.concatenate([[True], keys[1:] != keys[:-1]])
    candidates = np.flatnonzero(inside_all & run_start)

    def pack(z):
        key = int(z[0])
        for j in range(1, path.dim):
            key = key * 8192 + int(z[j])
        return key

    current_key = pack(current)
    for i in candidates:
        if i == 0 or keys[i] == current_key:
            continue
        hit_z = z_all[i]
        hit_t = _bisect_entry(grid, hit_z, times[i - 1], pts[i - 1], times[i], pts[i], tol)
        if hit_t >= 1.0:
            hit_t = 1.0 - tol
        if hit_t <= taus[-1]:
            hit_t = taus[-1] + 0.5 * (times[i] - taus[-1])
        taus.append(float(hit_t))
        word.append(hit_z.copy())
        current = hit_z
        current_key = pack(current)
    return HittingRecord(grid.eps, grid.exponent, np.array(taus), np.array(word))


@dataclass(frozen=True)
class PolygonalApprox:
    """A polygonal approximation: the interpolating path, its trajectory
    (vertex sequence, final point repeated for the constant tail), and the
    vertex times (ending at 1)."""

    path: SamplePath
    trajectory: np.ndarray   # (m, N) float vertices
    vertex_times: np.ndarray  # (m,) strictly increasing, [0] = 0, [-1] = 1
    word: np.ndarray          # (m, N) integer lattice word behind the vertices


def polygonal_approx(record: HittingRecord, eps: float | None = None) -> PolygonalApprox:
    """Join eps * word linearly at the visit times, hold the last point to 1.

    With no visits at all the approximation is the constant origin path; the
    trajectory still repeats the origin so it stays a valid two-point
    trajectory.
    """
    eps = record.eps if eps is None else eps
    taus = record.taus
    word = record.word
    verts = eps * word.astype(float)
    if taus[-1] >= 1.0:
        raise InvalidInput("final visit time must be strictly below 1")
    plt_points = np.vstack([verts, verts[-1]])
    plt_times = np.concatenate([taus, [1.0]])
    lattice = np.vstack([word, word[-1]])
    path = SamplePath(plt_times, plt_points)
    return PolygonalApprox(path, plt_points, plt_times, lattice)


def modified_approx(record_v: HittingRecord, record_h: HittingRecord, eps: float | None = None) -> PolygonalApprox:
    """The large-grid polygonal path, reshaped to hold still until the small
    box inside the current large box is hit.

    Between consecutive large-grid times containing a small-grid visit, the
    path waits at its position until that visit time and then moves linearly;
    a small-grid visit after the final large-grid time only duplicates the
    final vertex.  The resulting vertex times contain every small-grid visit
    time, which is what the squeeze construction needs.
    """
    eps = record_v.eps if eps is None else eps
    zetas, n_word = record_v.taus, record_v.word
    taus, m_word = record_h.taus, record_h.word
    if record_v.eps != record_h.eps:
        raise InconsistentRecords("records come from different grid scales")
    if record_v.exponent <= record_h.exponent:
        raise InconsistentRecords("first record must be the larger-box (higher-exponent) one")
    if zetas[-1] >= 1.0:
        raise InvalidInput("final visit time must be strictly below 1")

    m_v = zetas.shape[0] - 1
    verts = [eps * n_word[0].astype(float)]
    v_times = [0.0]
    lattice = [n_word[0]]
    used = np.zeros(taus.shape[0], dtype=bool)
    used[0] = True
    for k in range(m_v + 1):
        lo = zetas[k]
        hi = zetas[k + 1] if k < m_v else np.inf
        if k > 0:
            verts.append(eps * n_word[k].astype(float))
            v_times.append(float(lo))
            lattice.append(n_word[k])
        l_lo = int(np.searchsorted(taus, lo, side="right"))
        l_hi = int(np.searchsorted(taus, min(hi, 1.0), side="left"))
        if l_hi <= l_lo:
            continue
        if l_hi - l_lo > 1:
            raise InconsistentRecords(
                f"{l_hi - l_lo} small-grid visits inside one large-grid interval "
                f"({lo:.6g}, {hi:.6g}); records cannot come from one path"
            )
        l = l_lo
        if not np.array_equal(m_word[l], n_word[k]):
            raise InconsistentRecords(
                f"small-grid visit of {m_word[l].tolist()} at t={taus[l]:.6g} inside the "
                f"large-grid interval of {n_word[k].tolist()}"
            )
        used[l] = True
        verts.append(eps * n_word[k].astype(float))
        v_times.append(float(taus[l]))
        lattice.append(n_word[k])
    if np.any(~used):
        first = int(np.flatnonzero(~used)[0])
        raise InconsistentRecords(
            f"small-grid visit at t={taus[first]:.6g} falls outside every large-grid interval"
        )
    verts.append(verts[-1])
    v_times.append(1.0)
    lattice.append(lattice[-1])
    verts = np.array(verts)
    v_times = np.array(v_times)
    path = SamplePath(v_times, verts)
    return PolygonalApprox(path, verts, v_times, np.array(lattice))


def reconcile_records(record_v: HittingRecord, record_h: HittingRecord, slack: float | None = None) -> HittingRecord:
    """Nudge small-grid visit times strictly inside their large-grid intervals.

    Both records are refined to finite bisection tolerance, so a small-box
    entry can come out at or even slightly before the enclosing large-box
    entry, though never by more than the combined tolerance.  This returns a
    copy of the small-grid record whose times are moved (by at most `slack`
    plus an interior margin) so that every visit lies strictly inside the
    large-grid interval whose word matches.  Genuinely incompatible records
    still raise.
    """
    if slack is None:
        slack = (
            record_v.eps**record_v.exponent + record_h.eps**record_h.exponent
        ) / BISECTION_DIVISOR
    zetas, n_word = record_v.taus, record_v.word
    taus, m_word = record_h.taus, record_h.word
    m_v = zetas.shape[0] - 1
    new_taus = taus.copy()
    used = set()
    last_chosen = 0
    for l in range(1, taus.shape[0]):
        tau = taus[l]
        # candidate intervals: the one containing tau - slack and every one
        # whose start lies within slack of tau (interval lengths can be far
        # below the slack in rapidly revisited regions); assignments advance
        # monotonically since visits come one per interval, in order
        k_hi = int(np.searchsorted(zetas, tau + slack, side="right") - 1)
        k_lo = max(int(np.searchsorted(zetas, tau - slack, side="right") - 1), 0, last_chosen + 1 if l > 1 else 0)
        chosen = None
        for cand in range(min(k_hi, m_v), k_lo - 1, -1):
            if cand in used or not np.array_equal(n_word[cand], m_word[l]):
                continue
            upper = zetas[cand + 1] if cand < m_v else 1.0
            if tau >= upper + slack:
                continue
            if zetas[cand] <= tau < upper:
                chosen = cand          # containing interval wins outright
                break
            if chosen is None:
                chosen = cand
        if chosen is None:
            raise InconsistentRecords(
                f"no large-grid interval matches the visit of {m_word[l].tolist()} at t={tau:.6g}"
            )
        used.add(chosen)
        last_chosen = chosen
        lo = zetas[chosen]
        hi = zetas[chosen + 1] if chosen < m_v else 1.0
        margin = min(slack, 0.25 * (hi - lo))
        new_taus[l] = min(max(tau, lo + margin), hi - margin)
    if np.any(np.diff(new_taus) <= 0):
        raise InconsistentRecords("reconciled visit times are not increasing")
    return HittingRecord(record_h.eps, record_h.exponent, new_taus, m_word)


def evaluate_polygonal(approx: PolygonalApprox, times) -> np.ndarray:
    """Values of the polygonal path at arbitrary times in [0, 1]."""
    times = np.asarray(times, dtype=float)
    out = np.column_stack(
        [np.interp(times, approx.vertex_times, approx.trajectory[:, j]) for j in range(approx.trajectory.shape[1])]
    )
    return out


def visit_count_tail_bound(n_dim: int, n_drivers: int, c: float, eps: float, mu: float, k: int) -> float:
    """Upper bound 4*N*k*exp(-eps^(2 mu) k / (8 N d C^2)) on P(count = k).

    Only valid for k strictly above 2*C/eps^mu; smaller k are rejected.  The
    value may exceed 1; display code clamps it.
    """
    threshold = 2.0 * c / eps**mu
    if not k > threshold:
        raise InvalidInput(f"bound needs k > 2C/eps^mu = {threshold:.6g}, got k = {k}")
    return 4.0 * n_dim * k * np.exp(-(eps ** (2.0 * mu)) * k / (8.0 * n_dim * n_drivers * c**2))
