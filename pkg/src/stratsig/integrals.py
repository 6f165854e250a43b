"""Iterated and extended Stratonovich integrals along sampled paths.

Each integral is discretized with the trapezoidal (midpoint) rule: the
increment over [t_i, t_{i+1}] is the average of the integrand at the two
endpoints times the path increment.  That rule converges to the Stratonovich
integral for the integrands in scope and matches the simulator's Heun scheme.

All integrals are exposed as running series (value at every sample time,
starting at 0) so that extending a word by one letter or one form reuses the
prefix series.  What counts as "nonzero" is always the caller's decision;
nothing here hard-codes a tolerance.

A differential 1-form is any object with a method

    covector_values(points) -> array of shape (n, N)

returning the coefficient of dx^i at each sample point.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class SamplePath:
    """A path sampled on [0, 1]: strictly increasing times and points in R^N."""

    times: np.ndarray   # shape (n,)
    points: np.ndarray  # shape (n, N)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", x)
        if t.ndim != 1 or x.ndim != 2 or t.shape[0] != x.shape[0]:
            raise InvalidInput("times must be (n,), points (n, N) with matching n")
        if t.shape[0] < 2:
            raise InvalidInput("need at least 2 samples")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise InvalidInput("times must start at 0 and end at 1")
        if np.any(np.diff(t) <= 0):
            raise InvalidInput("times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise InvalidInput("non-finite sample data")

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self, comment: str | None = None) -> str:
        buf = io.StringIO()
        if comment:
            buf.write(f"# {comment}\n")
        buf.write("t," + ",".join(f"x{i + 1}" for i in range(self.dim)) + "\n")
        for t, row in zip(self.times, self.points):
            buf.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SamplePath":
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        header = rows[0].split(",")
        if header[0] != "t" or len(header) < 2:
            raise InvalidInput("path CSV must have header t,x1,...,xN")
        data = np.array([[float(v) for v in ln.split(",")] for ln in rows[1:]])
        return cls(data[:, 0], data[:, 1:])

    def save_binary(self, fname) -> None:
        np.savez(fname, times=self.times, points=self.points)

    @classmethod
    def load_binary(cls, fname) -> "SamplePath":
        with np.load(fname) as data:
            return cls(data["times"], data["points"])


def constant_path(point, n_samples: int = 2) -> SamplePath:
    point = np.asarray(point, dtype=float)
    times = np.linspace(0.0, 1.0, n_samples)
    return SamplePath(times, np.tile(point, (n_samples, 1)))


class ConstantOneForm:
    """The form c_1 dx^1 + ... + c_N dx^N with constant coefficients."""

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)

    def covector_values(self, points):
        return np.broadcast_to(self.coeffs, points.shape).copy()


def _restrict(path: SamplePath, s: float, t: float):
    """Sample times/points on [s, t], linearly interpolating the endpoints."""
    if not (0.0 <= s < t <= 1.0):
        raise InvalidInput(f"need 0 <= s < t <= 1, got s={s}, t={t}")
    if s == 0.0 and t == 1.0:
        return path.times, path.points
    times, pts = path.times, path.points
    lo = np.searchsorted(times, s, side="right")
    hi = np.searchsorted(times, t, side="left")

    def interp_point(u):
        return np.array([np.interp(u, times, pts[:, j]) for j in range(path.dim)])

    new_t = np.concatenate([[s], times[lo:hi], [t]])
    new_x = np.vstack([interp_point(s)[None, :], pts[lo:hi], interp_point(t)[None, :]])
    return new_t, new_x


def _extend_word_series(points, series, letter):
    dx = np.diff(points[:, letter - 1])
    inc = 0.5 * (series[:-1] + series[1:]) * dx
    return np.concatenate([[0.0], np.cumsum(inc)])


def extend_series_with_values(points, series, covector_values):
    """One more level of the extended-signature recurrence, with the form's
    covector already evaluated at the samples."""
    g = series[:, None] * covector_values
    inc = 0.5 * ((g[:-1] + g[1:]) * np.diff(points, axis=0)).sum(axis=1)
    return np.concatenate([[0.0], np.cumsum(inc)])


def strat_iterated_integral(path: SamplePath, word, s: float = 0.0, t: float = 1.0) -> float:
    """Iterated Stratonovich integral of coordinate differentials for one word.

    Defined by the inductive recurrence: the order-n value integrates the
    order-(n-1) running series against dX^{j_n}; the empty word is 1.
    """
    word = tuple(int(j) for j in word)
    if any(j < 1 or j > path.dim for j in word):
        raise InvalidInput(f"word {word} has letters outside 1..{path.dim}")
    if not word:
        return 1.0
    _, pts = _restrict(path, s, t)
    if len(word) == 1:
        return float(pts[-1, word[0] - 1] - pts[0, word[0] - 1])
    series = np.ones(pts.shape[0])
    for letter in word:
        series = _extend_word_series(pts, series, letter)
    return float(series[-1])


def strat_line_integral(path: SamplePath, form, s: float = 0.0, t: float = 1.0):
    """Line integral of a 1-form along the path; returns (value, running series)."""
    _, pts = _restrict(path, s, t)
    series = extend_series_with_values(pts, np.ones(pts.shape[0]), form.covector_values(pts))
    return float(series[-1]), series


def extended_signature(path: SamplePath, forms, s: float = 0.0, t: float = 1.0) -> float:
    """Nested Stratonovich integral of a sequence of 1-forms along the path.

    A single form reduces to the plain line integral; each further form
    integrates the previous running series against its pullback.
    """
    forms = list(forms)
    if not forms:
        raise InvalidInput("need at least one 1-form")
    _, pts = _restrict(path, s, t)
    series = np.ones(pts.shape[0])
    for form in forms:
        series = extend_series_with_values(pts, series, form.covector_values(pts))
    return float(series[-1])
