"""Truncated tensor algebra over R^d and closed-form signatures of polylines.

A truncated tensor holds one dense coefficient array per level n = 0..L,
flattened in C order: the word (j_1, ..., j_n) with letters in 1..d sits at
index sum_k (j_k - 1) * d^(n-k).  Level 0 is the scalar slot.  Signatures of
piecewise linear trajectories are exact: a straight segment contributes the
tensor exponential of its increment and segments multiply together in path
order.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidInput

MAX_LEVEL = 6


@dataclass(frozen=True)
class TruncatedTensor:
    """Graded coefficients of a tensor-algebra element, levels 0..L over R^d."""

    d: int
    L: int
    levels: tuple  # tuple of 1-D float arrays, levels[n] has d**n entries

    def __post_init__(self):
        if self.d < 1 or self.L < 1:
            raise InvalidInput(f"need d >= 1 and L >= 1, got d={self.d}, L={self.L}")
        if self.L > MAX_LEVEL:
            raise InvalidInput(f"truncation level {self.L} exceeds cap {MAX_LEVEL}")
        if len(self.levels) != self.L + 1:
            raise InvalidInput("levels must hold exactly L+1 arrays")
        for n, arr in enumerate(self.levels):
            if arr.shape != (self.d**n,):
                raise InvalidInput(f"level {n} must have {self.d**n} entries, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise InvalidInput(f"non-finite coefficient at level {n}")

    @property
    def scalar(self) -> float:
        return float(self.levels[0][0])

    def get(self, word) -> float:
        """Coefficient of a word (tuple of letters in 1..d)."""
        word = tuple(int(j) for j in word)
        if len(word) > self.L:
            raise InvalidInput(f"word {word} longer than truncation level {self.L}")
        if any(j < 1 or j > self.d for j in word):
            raise InvalidInput(f"word {word} has letters outside 1..{self.d}")
        return float(self.levels[len(word)][word_index(self.d, word)])

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(a))) if a.size else 0.0 for a in self.levels)

    def to_json(self) -> str:
        return json.dumps({"d": self.d, "L": self.L, "levels": [a.tolist() for a in self.levels]})

    @classmethod
    def from_json(cls, text: str) -> "TruncatedTensor":
        obj = json.loads(text)
        levels = tuple(np.asarray(a, dtype=float) for a in obj["levels"])
        return cls(int(obj["d"]), int(obj["L"]), levels)


def word_index(d: int, word) -> int:
    idx = 0
    for j in word:
        idx = idx * d + (j - 1)
    return idx


def identity_tensor(d: int, L: int) -> TruncatedTensor:
    """The unit element (1, 0, 0, ...)."""
    levels = [np.zeros(d**n) for n in range(L + 1)]
    levels[0][0] = 1.0
    return TruncatedTensor(d, L, tuple(levels))


def tensor_mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Truncated tensor product: level n of a*b is sum_{i+j=n} a_i (x) b_j.

    np.kron on the flat level arrays is exactly the C-order flattening of the
    outer product, so the graded convolution reduces to kron + add.
    """
    if a.d != b.d or a.L != b.L:
        raise DimensionMismatch(f"operands disagree: d={a.d}/{b.d}, L={a.L}/{b.L}")
    levels = [np.zeros(a.d**n) for n in range(a.L + 1)]
    for i in range(a.L + 1):
        ai = a.levels[i]
        if not ai.any():
            continue
        for j in range(a.L + 1 - i):
            bj = b.levels[j]
            if not bj.any():
                continue
            levels[i + j] += np.kron(ai, bj)
    return TruncatedTensor(a.d, a.L, tuple(levels))


def segment_signature(x, y, L: int) -> TruncatedTensor:
    """Signature of the straight segment x -> y: level n equals (y-x)^(x)n / n!.

    Built Horner-style: each level is kron(previous, v) / n, so no tensor power
    is allocated twice.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInput("segment endpoints must be 1-D points of equal dimension")
    d = x.shape[0]
    v = y - x
    levels = [np.zeros(d**n) for n in range(L + 1)]
    levels[0][0] = 1.0
    power = np.array([1.0])
    for n in range(1, L + 1):
        power = np.kron(power, v) / n
        levels[n] = power
    return TruncatedTensor(d, L, tuple(levels))


def plt_signature(points, L: int) -> TruncatedTensor:
    """Signature of the polyline through `points`, via the product of segment
    signatures in path order."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise InvalidInput("need at least 2 points of equal dimension")
    sig = identity_tensor(pts.shape[1], L)
    for k in range(pts.shape[0] - 1):
        sig = tensor_mul(sig, segment_signature(pts[k], pts[k + 1], L))
    return sig


def shuffles(u, v):
    """All interleavings of u and v preserving internal order (with multiplicity)."""
    u, v = tuple(u), tuple(v)
    n, m = len(u), len(v)
    out = []
    for positions in itertools.combinations(range(n + m), n):
        poss = set(positions)
        w, iu, iv = [], 0, 0
        for k in range(n + m):
            if k in poss:
                w.append(u[iu])
                iu += 1
            else:
                w.append(v[iv])
                iv += 1
        out.append(tuple(w))
    return out


def shuffle_residual(s: TruncatedTensor, u, v) -> float:
    """S^u * S^v minus the sum of S^w over shuffles w of (u, v).

    Vanishes (up to rounding) exactly on group-like elements, so it doubles as
    a signature test; for arbitrary tensors it just returns the number.
    """
    u, v = tuple(u), tuple(v)
    if len(u) + len(v) > s.L:
        raise InvalidInput(f"|u|+|v| = {len(u) + len(v)} exceeds truncation level {s.L}")
    total = sum(s.get(w) for w in shuffles(u, v))
    return s.get(u) * s.get(v) - total


def tensor_inverse(a: TruncatedTensor) -> TruncatedTensor:
    """Group inverse of a tensor with nonzero scalar part: the truncated
    Neumann series of 1 / (a0 + x)."""
    a0 = a.scalar
    if a0 == 0.0:
        raise InvalidInput("tensor with zero scalar part has no inverse")
    x = TruncatedTensor(a.d, a.L, (np.zeros(1),) + a.levels[1:])
    out = identity_tensor(a.d, a.L)
    term = identity_tensor(a.d, a.L)
    for _ in range(a.L):
        term = tensor_mul(term, x)
        term = TruncatedTensor(a.d, a.L, tuple(lvl * (-1.0 / a0) for lvl in term.levels))
        out = TruncatedTensor(a.d, a.L, tuple(p + q for p, q in zip(out.levels, term.levels)))
    return TruncatedTensor(a.d, a.L, tuple(lvl / a0 for lvl in out.levels))
