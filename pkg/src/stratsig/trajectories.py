"""Piecewise linear trajectories, parametrizations, and a squeeze construction.

A trajectory is an ordered point sequence with no time attached; a
parametrization assigns strictly increasing times (0 first, 1 last) to the
points, and linear interpolation between them produces a path.  The distance
to a sampled path is the infimum over parametrizations of the sup-norm gap,
approximated from above by an endpoint-pinned discrete Fréchet computation on
a subdivided copy of the trajectory.  Monotone matching is built into the
recursion, which is exactly what running time forward in both arguments
demands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import InvalidInput, SqueezeHypothesisError
from .integrals import SamplePath


@dataclass(frozen=True)
class PLT:
    """An ordered finite point sequence; a single point is doubled so every
    trajectory has at least two entries."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] == 1:
            pts = np.vstack([pts, pts])
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def to_json(self) -> str:
        import json

        return json.dumps(self.points.tolist())

    @classmethod
    def from_json(cls, text: str) -> "PLT":
        import json

        return cls(np.asarray(json.loads(text), dtype=float))


@dataclass(frozen=True)
class Parametrization:
    """Times 0 = t_1 < ... < t_n = 1 for a trajectory of n points."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if t.ndim != 1 or t.shape[0] < 2:
            raise InvalidInput("need at least two partition times")
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise InvalidInput("times must increase strictly from 0 to 1")

    @property
    def order(self):
        return self.times.shape[0]


def evaluate(traj: PLT, sigma: Parametrization, t) -> np.ndarray:
    """The interpolated path value at time(s) t."""
    if len(traj) != sigma.order:
        raise InvalidInput(f"trajectory has {len(traj)} points but parametrization order {sigma.order}")
    t = np.asarray(t, dtype=float)
    single = t.ndim == 0
    tt = np.atleast_1d(t)
    if np.any(tt < 0.0) or np.any(tt > 1.0):
        raise InvalidInput("evaluation times must lie in [0, 1]")
    out = np.column_stack(
        [np.interp(tt, sigma.times, traj.points[:, j]) for j in range(traj.dim)]
    )
    return out[0] if single else out


def drop_last(traj: PLT) -> PLT:
    """The trajectory without its final point; needs at least 3 points so the
    result is still a trajectory."""
    if len(traj) < 3:
        raise InvalidInput("cannot drop the last point of a two-point trajectory")
    return PLT(traj.points[:-1].copy())


def is_sub_plt(t1: PLT, t2: PLT, atol: float = 0.0) -> bool:
    """Order-preserving (not necessarily contiguous) subsequence test, greedy."""
    return _greedy_embedding(t1.points, t2.points, atol) is not None


def _greedy_embedding(points, host, atol=0.0):
    """Indices embedding `points` into `host` as a subsequence, or None."""
    idx = []
    j = 0
    for p in points:
        while j < len(host) and not np.all(np.abs(host[j] - p) <= atol):
            j += 1
        if j >= len(host):
            return None
        idx.append(j)
        j += 1
    return idx


def _anchored_embedding(points, host, anchors, atol=0.0):
    """Increasing indices e with host[e[i]] matching points[i] whose image
    contains every index in `anchors` (given increasing), or None.

    Depth-first with failed states memoized.  At each position the only
    genuine choice is to take the earliest match before the next pending
    anchor or to bind that anchor itself: any later non-anchor match can be
    exchanged for the earliest one without hurting feasibility, so the two
    branches are exhaustive.
    """
    n, m = len(points), len(host)

    def match(j, i):
        return bool(np.all(np.abs(host[j] - points[i]) <= atol))

    failed = set()
    chosen = []
    # frame: [i, pos, a, stage]; stage 0 unexpanded, 1 early branch active,
    # 2 anchor branch active (final)
    stack = [[0, 0, 0, 0]]
    while stack:
        frame = stack[-1]
        i, pos, a, stage = frame
        if i == n:
            if a == len(anchors):
                return chosen[:]
            stack.pop()
            continue
        if stage == 0:
            if (i, pos, a) in failed:
                stack.pop()
                continue
            limit = anchors[a] if a < len(anchors) else m - 1
            j = pos
            while j <= limit and not match(j, i):
                j += 1
            if j > limit:
                failed.add((i, pos, a))
                stack.pop()
                continue
            if j == limit and a < len(anchors):
                frame[3] = 2
                chosen.append(j)
                stack.append([i + 1, j + 1, a + 1, 0])
            else:
                frame[3] = 1
                chosen.append(j)
                stack.append([i + 1, j + 1, a, 0])
        elif stage == 1:
            chosen.pop()
            b = anchors[a] if a < len(anchors) else None
            if b is not None and match(b, i):
                frame[3] = 2
                chosen.append(b)
                stack.append([i + 1, b + 1, a + 1, 0])
            else:
                failed.add((i, pos, a))
                stack.pop()
        else:
            chosen.pop()
            failed.add((i, pos, a))
            stack.pop()
    return None


@numba.njit(cache=True)
def _discrete_frechet(p, q):
    n, m = p.shape[0], q.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for j in range(m):
        d = 0.0
        for k in range(p.shape[1]):
            d += (p[0, k] - q[j, k]) ** 2
        d = np.sqrt(d)
        prev[j] = d if j == 0 else max(prev[j - 1], d)
    for i in range(1, n):
        for j in range(m):
            d = 0.0
            for k in range(p.shape[1]):
                d += (p[i, k] - q[j, k]) ** 2
            d = np.sqrt(d)
            if j == 0:
                best = prev[0]
            else:
                best = min(prev[j], prev[j - 1], cur[j - 1])
            cur[j] = max(best, d)
        prev, cur = cur, prev
    return prev[m - 1]


def _subdivide(points, mesh):
    out = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        seg = np.linalg.norm(b - a)
        pieces = max(1, int(np.ceil(seg / mesh)))
        for k in range(1, pieces + 1):
            out.append(a + (b - a) * k / pieces)
    return np.array(out)


def trajectory_distance(
    traj: PLT,
    path: SamplePath,
    mesh: float | None = None,
    max_path_samples: int = 2048,
    max_subdivision: int = 4000,
) -> float:
    """Distance from the trajectory to the path, infimum over parametrizations.

    Computed as the endpoint-pinned discrete Fréchet distance between the
    path samples and the trajectory subdivided to `mesh`, so the result
    over-approximates the true infimum by at most the subdivision mesh plus
    the path's local oscillation.  Long paths are strided down to
    `max_path_samples` and the induced oscillation is added to the result,
    keeping the approximation one-sided (never below the true infimum beyond
    discretization of the path itself).

    The default mesh, the path's largest spatial step times the longest
    trajectory edge, is clamped so the subdivision stays tractable.
    """
    pts = path.points
    oscillation = 0.0
    if pts.shape[0] > max_path_samples:
        stride = int(np.ceil(pts.shape[0] / max_path_samples))
        sub_idx = np.arange(0, pts.shape[0], stride)
        if sub_idx[-1] != pts.shape[0] - 1:
            sub_idx = np.append(sub_idx, pts.shape[0] - 1)
        coarse_t = path.times[sub_idx]
        coarse_x = pts[sub_idx]
        interp = np.column_stack(
            [np.interp(path.times, coarse_t, coarse_x[:, j]) for j in range(path.dim)]
        )
        oscillation = float(np.max(np.linalg.norm(pts - interp, axis=1)))
        pts = coarse_x

    edges = np.linalg.norm(np.diff(traj.points, axis=0), axis=1)
    longest = float(np.max(edges)) if edges.size and np.max(edges) > 0 else 0.0
    if mesh is None:
        spatial_step = float(np.max(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
        mesh = spatial_step * max(longest, 1.0)
    if longest > 0:
        total = float(np.sum(edges))
        mesh = max(mesh, total / max_subdivision)   # cap the subdivision size
        mesh = min(mesh, longest)
        q = _subdivide(traj.points, mesh)
    else:
        q = traj.points
    return float(_discrete_frechet(np.ascontiguousarray(pts), np.ascontiguousarray(q))) + oscillation


def sup_distance(traj: PLT, sigma: Parametrization, path: SamplePath) -> float:
    """sup over the path's sample times of |path - interpolated trajectory|."""
    vals = evaluate(traj, sigma, path.times)
    return float(np.max(np.linalg.norm(vals - path.points, axis=1)))


def build_squeeze_parametrization(
    t1: PLT,
    sigma1: Parametrization,
    traj: PLT,
    t2: PLT,
    sigma2: Parametrization,
    atol: float = 0.0,
) -> Parametrization:
    """A parametrization of `traj` nested between the flanking pairs.

    Hypotheses checked here: the flanking trajectories share their first
    point (and `traj` starts there too); each flanking trajectory repeats its
    last point; sigma1's times all occur among sigma2's with equal
    interpolated values below time 1; and traj sits between the two
    trajectories with their last points dropped, in the subsequence order.

    The construction embeds traj (final point excluded, which is sent to
    time 1) into t2's points so that the embedding passes through the host
    positions carrying sigma1's interior times; each embedded point takes its
    sigma2 time.  The result then interpolates t1 exactly at sigma1's times
    below 1 and agrees with t2's path at every one of its own times below 1.

    One counting exception is unavoidable: when the final anchor could only
    be carried by traj's last point (for instance traj equals t1 minus its
    repeated tail), that anchor is released.  t1 is constant from that time
    onward, so the flanking sup-distance bound is unaffected; the returned
    parametrization then satisfies the interpolation clause at all sigma1
    times except the final interior one.
    """
    if len(t1) != sigma1.order or len(t2) != sigma2.order:
        raise InvalidInput("parametrization orders must match their trajectories")

    def close(a, b):
        return np.all(np.abs(a - b) <= atol)

    if not close(t1.points[0], t2.points[0]):
        raise SqueezeHypothesisError("first points", "flanking trajectories start differently")
    if not close(traj.points[0], t1.points[0]):
        raise SqueezeHypothesisError("first points", "middle trajectory starts elsewhere")
    for name, t in (("lower", t1), ("upper", t2)):
        if not close(t.points[-1], t.points[-2]):
            raise SqueezeHypothesisError("repeated tail", f"{name} trajectory must repeat its last point")

    # sigma1's times must occur among sigma2's with matching values below 1
    anchors = []
    for k, t in enumerate(sigma1.times[:-1]):
        hits = np.flatnonzero(sigma2.times == t)
        if hits.size != 1:
            raise SqueezeHypothesisError("time embedding", f"time {t} of the finer partition not in the coarser")
        j = int(hits[0])
        if not close(t1.points[k], t2.points[j]):
            raise SqueezeHypothesisError("value agreement", f"paths disagree at shared time {t}")
        anchors.append(j)

    if _greedy_embedding(t1.points[:-1], traj.points, atol) is None:
        raise SqueezeHypothesisError("nesting", "lower trajectory (tail dropped) not inside the middle one")

    host = t2.points[:-1]
    embedding = _anchored_embedding(traj.points[:-1], host, anchors, atol)
    if embedding is None and len(anchors) > 1:
        embedding = _anchored_embedding(traj.points[:-1], host, anchors[:-1], atol)
    if embedding is None:
        raise SqueezeHypothesisError(
            "nesting", "middle trajectory cannot be embedded in the upper one through the shared times"
        )
    times = np.concatenate([sigma2.times[embedding], [1.0]])
    if np.any(np.diff(times) <= 0):
        raise SqueezeHypothesisError("time embedding", "constructed times are not strictly increasing")
    return Parametrization(times)


def verify_squeeze(t1, sigma1, traj, sigma, t2, sigma2, atol: float = 0.0):
    """Check the two clauses the squeeze construction promises.

    Required: every sigma time below 1 occurs among sigma2's times with the
    two interpolations equal there, and every sigma1 time below 1 except
    possibly the final interior one occurs among sigma's times with the two
    interpolations equal.  Returns (required_ok, final_anchor_ok); the second
    flag reports whether even the final interior sigma1 time was honored.
    """

    def contains_with_equal_values(times_sub, inner, sigma_sub, outer, sigma_outer):
        for t in times_sub:
            if not np.any(sigma_outer.times == t):
                return False
            a = evaluate(inner, sigma_sub, t)
            b = evaluate(outer, sigma_outer, t)
            if not np.all(np.abs(a - b) <= max(atol, 1e-12)):
                return False
        return True

    clause2 = contains_with_equal_values(sigma.times[:-1], traj, sigma, t2, sigma2)
    interior = sigma1.times[:-1]
    clause1_body = contains_with_equal_values(interior[:-1], t1, sigma1, traj, sigma)
    clause1_final = contains_with_equal_values(interior[-1:], t1, sigma1, traj, sigma)
    return clause2 and clause1_body, clause1_final
