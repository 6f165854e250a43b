"""Exact vector-field calculus on the polynomial-times-Gaussian class.

Every scalar function handled here has the shape p(x) * exp(-|x_g - xi_g|^2/2)
where p is a sparse multivariate polynomial and the Gaussian factor (optional)
is centered at xi over a subset of the coordinates.  The class is closed under
partial differentiation and under multiplication as long as at most one factor
carries a Gaussian, which is all the lifted-field recursion ever needs; a
product of two Gaussian-carrying factors raises ClosureError instead of
silently leaving the class.

Lie brackets are computed symbolically (no finite differences), which keeps
rank decisions about iterated brackets exact up to float rounding.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ClosureError, DimensionMismatch, InvalidInput, LambdaSearchError

RANK_SV_THRESHOLD = 1e-10   # relative singular-value cutoff for rank decisions
PERP_THRESHOLD = 1e-12      # dot-product floor for the non-perpendicularity check


# ---------------------------------------------------------------------------
# sparse polynomials


class Poly:
    """Sparse multivariate polynomial: {exponent tuple: coefficient}."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        clean = {}
        for mono, coeff in (terms or {}).items():
            if coeff != 0.0:
                clean[tuple(mono)] = float(coeff)
        self.terms = clean

    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars, i):
        """x_i, with i in 1..nvars."""
        mono = [0] * nvars
        mono[i - 1] = 1
        return cls(nvars, {tuple(mono): 1.0})

    def is_zero(self):
        return not self.terms

    def degree(self):
        return max((sum(m) for m in self.terms), default=0)

    def __add__(self, other):
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) + c
        return Poly(self.nvars, out)

    def __sub__(self, other):
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) - c
        return Poly(self.nvars, out)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Poly(self.nvars, {m: c * other for m, c in self.terms.items()})
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0.0) + c1 * c2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def diff(self, i: int):
        """Partial derivative with respect to x_i (i in 1..nvars)."""
        out = {}
        for m, c in self.terms.items():
            e = m[i - 1]
            if e > 0:
                dm = list(m)
                dm[i - 1] = e - 1
                dm = tuple(dm)
                out[dm] = out.get(dm, 0.0) + c * e
        return Poly(self.nvars, out)

    def __call__(self, points):
        """Evaluate at points of shape (m, nvars) or a single point (nvars,)."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        out = np.zeros(pts.shape[0])
        for mono, coeff in self.terms.items():
            term = np.full(pts.shape[0], coeff)
            for j, e in enumerate(mono):
                if e:
                    term = term * pts[:, j] ** e
            out += term
        return float(out[0]) if single else out

    def sup_bound_on_box(self, lo, hi):
        """Certified upper bound of |p| on the box: sum of |c| * max|x^mono|."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        bound = 0.0
        for mono, coeff in self.terms.items():
            t = abs(coeff)
            for j, e in enumerate(mono):
                if e:
                    t *= max(abs(lo[j]), abs(hi[j])) ** e
            bound += t
        return bound

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for mono, coeff in sorted(self.terms.items()):
            vars_ = "*".join(
                f"x{j + 1}" + (f"^{e}" if e > 1 else "") for j, e in enumerate(mono) if e
            )
            bits.append(f"{coeff:g}" + (f"*{vars_}" if vars_ else ""))
        return " + ".join(bits)


_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?)|x(\d+)|(\^)|(\*)|(\+)|(-))")


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise InvalidInput(f"cannot parse polynomial near '{text[pos:].strip()}'")
            break
        pos = m.end()
        num, var, caret, star, plus, minus = m.groups()
        if num is not None:
            out.append(("num", float(num)))
        elif var is not None:
            out.append(("var", int(var)))
        elif caret:
            out.append(("op", "^"))
        elif star:
            out.append(("op", "*"))
        elif plus:
            out.append(("op", "+"))
        elif minus:
            out.append(("op", "-"))
    return out


def parse_poly(text: str, nvars: int) -> Poly:
    """Parse 'c*x1^2*x3 + x2 - 4' style polynomial strings: terms joined by
    + or -, each term a *-product of numeric coefficients and powers x<k>^<e>."""
    toks = _tokenize(text)
    out = Poly(nvars, {})
    i = 0

    def parse_factor(i, mono):
        kind, val = toks[i]
        if kind == "num":
            return val, i + 1
        if kind == "var":
            if val < 1 or val > nvars:
                raise InvalidInput(f"variable x{val} outside 1..{nvars}")
            power = 1
            i += 1
            if i + 1 < len(toks) and toks[i] == ("op", "^") and toks[i + 1][0] == "num":
                power = int(toks[i + 1][1])
                i += 2
            mono[val - 1] += power
            return 1.0, i
        raise InvalidInput(f"unexpected token {toks[i]} in polynomial '{text}'")

    while i < len(toks):
        sign = 1.0
        while i < len(toks) and toks[i][0] == "op" and toks[i][1] in "+-":
            if toks[i][1] == "-":
                sign = -sign
            i += 1
        if i >= len(toks):
            raise InvalidInput(f"dangling sign in polynomial '{text}'")
        mono = [0] * nvars
        coeff, i = parse_factor(i, mono)
        while i < len(toks) and toks[i] == ("op", "*"):
            c, i = parse_factor(i + 1, mono)
            coeff *= c
        out = out + Poly(nvars, {tuple(mono): sign * coeff})
    return out


# ---------------------------------------------------------------------------
# polynomial x Gaussian scalars


@dataclass(frozen=True)
class PolyGauss:
    """p(x) * exp(-|x_g - xi_g|^2 / 2) with the Gaussian over masked coords.

    center is None for plain polynomials.  gauss_mask marks which coordinates
    participate in the Gaussian (lifted fields never involve the appended
    coordinate there).
    """

    poly: Poly
    center: np.ndarray | None = None
    gauss_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.center is not None and self.poly.is_zero():
            # Canonical form: the zero function is a plain polynomial.
            object.__setattr__(self, "center", None)
            object.__setattr__(self, "gauss_mask", None)
        if self.center is not None:
            c = np.asarray(self.center, dtype=float)
            object.__setattr__(self, "center", c)
            mask = self.gauss_mask
            if mask is None:
                mask = np.ones(self.poly.nvars, dtype=bool)
            object.__setattr__(self, "gauss_mask", np.asarray(mask, dtype=bool))
            if c.shape != (self.poly.nvars,) or self.gauss_mask.shape != (self.poly.nvars,):
                raise InvalidInput("center and mask must match the variable count")

    @property
    def nvars(self):
        return self.poly.nvars

    @property
    def has_gaussian(self):
        return self.center is not None

    def is_zero(self):
        return self.poly.is_zero()

    def diff(self, i: int) -> "PolyGauss":
        dp = self.poly.diff(i)
        if self.center is None or not self.gauss_mask[i - 1]:
            return PolyGauss(dp, self.center, self.gauss_mask)
        shift = Poly.variable(self.nvars, i) - Poly.constant(self.nvars, self.center[i - 1])
        return PolyGauss(dp - self.poly * shift, self.center, self.gauss_mask)

    def __add__(self, other):
        self._check_compatible(other)
        if self.has_gaussian != other.has_gaussian and not (self.is_zero() or other.is_zero()):
            raise ClosureError("cannot add a Gaussian-carrying term to a plain polynomial")
        center = self.center if self.has_gaussian else other.center
        mask = self.gauss_mask if self.has_gaussian else other.gauss_mask
        return PolyGauss(self.poly + other.poly, center, mask)

    def __sub__(self, other):
        return self + (other * -1.0)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return PolyGauss(self.poly * other, self.center, self.gauss_mask)
        if self.has_gaussian and other.has_gaussian:
            if self.is_zero() or other.is_zero():
                return PolyGauss(Poly(self.nvars, {}), None, None)
            raise ClosureError("product of two Gaussian-carrying factors leaves the class")
        center = self.center if self.has_gaussian else other.center
        mask = self.gauss_mask if self.has_gaussian else other.gauss_mask
        return PolyGauss(self.poly * other.poly, center, mask)

    __rmul__ = __mul__

    def _check_compatible(self, other):
        if self.nvars != other.nvars:
            raise DimensionMismatch("variable counts differ")
        if self.has_gaussian and other.has_gaussian:
            if not np.array_equal(self.center, other.center) or not np.array_equal(
                self.gauss_mask, other.gauss_mask
            ):
                raise ClosureError("mixing different Gaussian centers leaves the class")

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        vals = self.poly(pts)
        if not np.ndim(vals):
            vals = np.array([vals])
        if self.center is not None:
            diff = pts[:, self.gauss_mask] - self.center[self.gauss_mask]
            vals = vals * np.exp(-0.5 * np.sum(diff**2, axis=1))
        return float(vals[0]) if single else vals


def zero_scalar(nvars):
    return PolyGauss(Poly(nvars, {}))


# ---------------------------------------------------------------------------
# vector fields


@dataclass(frozen=True)
class VectorField:
    """A vector field on R^dim with PolyGauss components."""

    components: tuple
    name: str = ""

    def __post_init__(self):
        comps = tuple(
            c if isinstance(c, PolyGauss) else PolyGauss(c) for c in self.components
        )
        object.__setattr__(self, "components", comps)
        dims = {c.nvars for c in comps}
        if dims != {len(comps)}:
            raise DimensionMismatch("component variable count must equal the field dimension")

    @property
    def dim(self):
        return len(self.components)

    def is_zero(self):
        return all(c.is_zero() for c in self.components)

    def value(self, points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        out = np.column_stack([np.broadcast_to(c(pts), pts.shape[0]) for c in self.components])
        return out[0] if single else out

    @classmethod
    def from_polys(cls, polys, name=""):
        return cls(tuple(PolyGauss(p) for p in polys), name)

    @classmethod
    def constant(cls, vec, name=""):
        vec = np.asarray(vec, dtype=float)
        n = len(vec)
        return cls(tuple(PolyGauss(Poly.constant(n, v)) for v in vec), name)

    @classmethod
    def zero(cls, dim, name=""):
        return cls(tuple(zero_scalar(dim) for _ in range(dim)), name)


def lie_bracket(v: VectorField, w: VectorField) -> VectorField:
    """[v, w] = Dw.v - Dv.w, exactly."""
    if v.dim != w.dim:
        raise DimensionMismatch(f"field dimensions differ: {v.dim} vs {w.dim}")
    n = v.dim
    comps = []
    for i in range(n):
        acc = zero_scalar(n)
        for j in range(1, n + 1):
            wj_term = w.components[i].diff(j) * v.components[j - 1]
            vj_term = v.components[i].diff(j) * w.components[j - 1]
            acc = acc + wj_term - vj_term
        comps.append(acc)
    return VectorField(tuple(comps), name=f"[{v.name},{w.name}]" if v.name or w.name else "")


def bracket_words(d: int, max_len: int):
    """All bracket words up to max_len: singletons over 1..d, longer words
    over 0..d."""
    words = [(a,) for a in range(1, d + 1)]
    for n in range(2, max_len + 1):
        words.extend(itertools.product(range(d + 1), repeat=n))
    return words


class BracketFamily:
    """Right-nested iterated brackets of a driver family, cached by word.

    Word letters index the family as 0 -> drift, 1..d -> drivers; length-1
    words are restricted to 1..d.
    """

    def __init__(self, drift: VectorField, drivers):
        self.fields = [drift] + list(drivers)
        self.d = len(self.fields) - 1
        self._cache = {}

    def field(self, alpha: int) -> VectorField:
        return self.fields[alpha]

    def bracket(self, word) -> VectorField:
        word = tuple(int(a) for a in word)
        if not word:
            raise InvalidInput("empty bracket word")
        if any(a < 0 or a > self.d for a in word):
            raise InvalidInput(f"letters must lie in 0..{self.d}, got {word}")
        if len(word) == 1 and word[0] == 0:
            # The drift alone is not an admissible word; it only appears
            # inside longer brackets.
            raise InvalidInput("length-1 bracket words must name a driver (1..d)")
        return self._bracket(word)

    def _bracket(self, word) -> VectorField:
        if word in self._cache:
            return self._cache[word]
        if len(word) == 1:
            out = self.fields[word[0]]
        else:
            out = lie_bracket(self.fields[word[0]], self._bracket(word[1:]))
        self._cache[word] = out
        return out


def bracket_from_word(drift: VectorField, drivers, word) -> VectorField:
    return BracketFamily(drift, drivers).bracket(word)


# ---------------------------------------------------------------------------
# rank checks and assumption reports


@dataclass
class RankResult:
    rank: int
    certificate: list          # greedy spanning bracket words
    singular_values: np.ndarray


def _numerical_rank(matrix, threshold=RANK_SV_THRESHOLD):
    if matrix.size == 0:
        return 0, np.array([])
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0, sv
    return int(np.sum(sv > threshold * sv[0])), sv


def hormander_rank(family: BracketFamily, x, depth: int, threshold=RANK_SV_THRESHOLD) -> RankResult:
    """Rank of span{ bracket values at x : |word| <= depth }, with a greedy
    certificate of spanning words."""
    if depth < 1:
        raise InvalidInput("depth must be at least 1")
    x = np.asarray(x, dtype=float)
    words = bracket_words(family.d, depth)
    vectors = [family.bracket(w).value(x) for w in words]
    matrix = np.array(vectors)
    rank, sv = _numerical_rank(matrix, threshold)

    certificate = []
    chosen = []
    for w, vec in zip(words, vectors):
        if len(chosen) == rank:
            break
        trial = np.array(chosen + [vec])
        r, _ = _numerical_rank(trial, threshold)
        if r > len(chosen):
            chosen.append(vec)
            certificate.append(w)
    return RankResult(rank, certificate, sv)


@dataclass
class AssumptionReport:
    passed: bool
    details: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def __str__(self):
        lines = ["PASS" if self.passed else "FAIL"]
        lines += [f"  {d}" for d in self.details]
        lines += [f"  warning: {w}" for w in self.warnings]
        return "\n".join(lines)


def check_smooth_bounded(family: BracketFamily, box_lo, box_hi) -> AssumptionReport:
    """Smoothness plus boundedness on the experiment box.

    Polynomial components are smooth everywhere; boundedness holds only on the
    box unless the field is constant, which the report flags as a warning
    rather than a failure.
    """
    report = AssumptionReport(passed=True)
    names = ["V0"] + [f"V{i}" for i in range(1, family.d + 1)]
    for name, fld in zip(names, family.fields):
        comp_bounds = [c.poly.sup_bound_on_box(box_lo, box_hi) for c in fld.components]
        sup = float(np.sqrt(np.sum(np.square(comp_bounds))))
        report.details.append(f"{name}: sup-norm bound {sup:.6g} on the box")
        if any(c.poly.degree() >= 1 for c in fld.components):
            report.warnings.append(f"{name} grows unboundedly outside the box")
    return report


def check_hormander(family: BracketFamily, samples, depth: int) -> AssumptionReport:
    """Full tangent-space rank from iterated brackets at each sample point."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = family.fields[0].dim
    report = AssumptionReport(passed=True)
    for x in samples:
        res = hormander_rank(family, x, depth)
        if res.rank < n:
            report.passed = False
            report.details.append(
                f"rank {res.rank} < {n} at x={np.array2string(x, precision=4)} (depth {depth})"
            )
            return report
    report.details.append(f"rank {n} at all {len(samples)} sample points (depth {depth})")
    return report


def check_non_perpendicular(family: BracketFamily, samples, basis=None) -> AssumptionReport:
    """For each sample x and basis vector e_i, some driver must have a
    component along e_i; reports the first violation."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise InvalidInput("need at least one sample point")
    n = family.fields[0].dim
    basis = np.eye(n) if basis is None else np.asarray(basis, dtype=float)
    report = AssumptionReport(passed=True)
    for x in samples:
        values = np.array([f.value(x) for f in family.fields[1:]])  # drivers only
        dots = values @ basis.T   # (d, n)
        dead = np.all(np.abs(dots) <= PERP_THRESHOLD, axis=0)
        if np.any(dead):
            i = int(np.argmax(dead))
            report.passed = False
            report.details.append(
                f"all drivers perpendicular to e{i + 1} at x={np.array2string(x, precision=4)}"
            )
            return report
    report.details.append(f"non-perpendicularity holds at all {len(samples)} sample points")
    return report


# ---------------------------------------------------------------------------
# bump 1-forms and the lifted family


def _smoothstep(u):
    """Quintic smoothstep: 0 at u<=0, 1 at u>=1, C^2 at the joints."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


@dataclass(frozen=True)
class OneForm:
    """eta(x) * exp(-|x - xi|^2/2) * (dx^1 + ... + dx^N).

    eta is a tensor-product quintic bump: identically 1 on the inner box,
    identically 0 outside the outer box, monotone in between.  Values outside
    the outer box are exact zeros, so line integrals of paths that stay clear
    of the support vanish exactly.
    """

    xi: np.ndarray
    box_center: np.ndarray
    inner_half: np.ndarray
    outer_half: np.ndarray

    def __post_init__(self):
        for attr in ("xi", "box_center", "inner_half", "outer_half"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=float))
        if not np.all(self.inner_half < self.outer_half):
            raise InvalidInput("inner box must be strictly inside the outer box")

    @property
    def dim(self):
        return self.xi.shape[0]

    def eta(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.abs(pts - self.box_center)
        u = (self.outer_half - r) / (self.outer_half - self.inner_half)
        factors = np.where(r >= self.outer_half, 0.0, np.where(r <= self.inner_half, 1.0, _smoothstep(u)))
        return np.prod(factors, axis=1)

    def gaussian(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.exp(-0.5 * np.sum((pts - self.xi) ** 2, axis=1))

    def scalar_values(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        e = self.eta(pts)
        out = np.zeros(pts.shape[0])
        live = e != 0.0
        if np.any(live):
            out[live] = e[live] * np.exp(-0.5 * np.sum((pts[live] - self.xi) ** 2, axis=1))
        return out

    def covector_values(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = self.scalar_values(pts)
        return np.repeat(vals[:, None], pts.shape[1], axis=1)

    def gauss_scalar(self) -> PolyGauss:
        """The exact scalar Gaussian factor, valid where eta is identically 1."""
        n = self.dim
        return PolyGauss(Poly.constant(n, 1.0), center=self.xi.copy())


def lift_fields(family: BracketFamily, form: OneForm) -> BracketFamily:
    """Append the coordinate x^{N+1} with dx^{N+1} = phi(dX) to each field.

    The appended component is the scalar phi . V_alpha.  Symbolically this
    uses the eta == 1 restriction of the form, so brackets and ranks of the
    lifted family are exact on the form's inner box and meaningless outside
    it; numeric evaluation along paths goes through the cutoff instead.
    """
    n = form.dim
    lifted = []
    for fld in family.fields:
        if fld.dim != n:
            raise DimensionMismatch("form and fields have different ambient dimensions")
        base = []
        total = Poly(n + 1, {})
        for i, comp in enumerate(fld.components):
            if comp.has_gaussian:
                raise ClosureError("base fields must be plain polynomials")
            p = _embed_poly(comp.poly, n + 1)
            base.append(PolyGauss(p))
            total = total + p
        mask = np.zeros(n + 1, dtype=bool)
        mask[:n] = True
        center = np.concatenate([form.xi, [0.0]])
        last = PolyGauss(total, center=center, gauss_mask=mask)
        lifted.append(VectorField(tuple(base + [last]), name=f"lift({fld.name})"))
    return BracketFamily(lifted[0], lifted[1:])


def _embed_poly(p: Poly, nvars: int) -> Poly:
    if p.nvars > nvars:
        raise DimensionMismatch("cannot embed into fewer variables")
    return Poly(nvars, {m + (0,) * (nvars - p.nvars): c for m, c in p.terms.items()})


@dataclass
class LambdaResult:
    lam: float
    certificate: list            # bracket words spanning at the worst grid point
    min_singular_values: np.ndarray   # smallest singular value per grid point
    grid: np.ndarray
    tested: list                 # all |xi| candidates tried


def _box_grid(lo, hi, resolution):
    axes = [np.linspace(a, b, resolution) for a, b in zip(lo, hi)]
    return np.array(list(itertools.product(*axes)))


def find_lambda(
    family: BracketFamily,
    inner_lo,
    inner_hi,
    outer_lo,
    outer_hi,
    direction=None,
    depth: int = 3,
    grid_resolution: int = 3,
    threshold: float = RANK_SV_THRESHOLD,
    max_doublings: int = 20,
    lam0: float | None = None,
) -> LambdaResult:
    """Smallest tested Gaussian-center distance making the lifted family full
    rank on the inner box.

    Sweeps |xi - box_center| through a geometric doubling ladder starting at
    the outer-box diameter (or `lam0` when given).  At each candidate the
    form's center is placed at that distance along `direction` and the lifted
    brackets up to `depth` must span R^{N+1} at every inner grid point (the
    appended coordinate is immaterial since the fields do not depend on it).
    """
    inner_lo = np.asarray(inner_lo, dtype=float)
    inner_hi = np.asarray(inner_hi, dtype=float)
    outer_lo = np.asarray(outer_lo, dtype=float)
    outer_hi = np.asarray(outer_hi, dtype=float)
    if not (np.all(outer_lo < inner_lo) and np.all(inner_hi < outer_hi)):
        raise InvalidInput("inner box must be strictly inside the outer box")
    n = inner_lo.shape[0]
    if direction is None:
        direction = np.eye(n)[0]
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    center = 0.5 * (inner_lo + inner_hi)

    grid = _box_grid(inner_lo, inner_hi, grid_resolution)
    base_check = check_hormander(family, grid, depth)
    if not base_check.passed:
        raise LambdaSearchError(f"base fields fail the full-rank precondition: {base_check.details}")

    if lam0 is None:
        lam0 = float(np.linalg.norm(outer_hi - outer_lo))
    tested = []
    for k in range(max_doublings + 1):
        lam = lam0 * 2**k
        tested.append(lam)
        xi = center + lam * direction
        form = OneForm(
            xi=xi,
            box_center=center,
            inner_half=0.5 * (inner_hi - inner_lo),
            outer_half=0.5 * (outer_hi - outer_lo),
        )
        lifted = lift_fields(family, form)
        min_svs = np.empty(len(grid))
        ok = True
        worst_idx = 0
        for idx, x in enumerate(grid):
            res = hormander_rank(lifted, np.concatenate([x, [0.0]]), depth, threshold)
            if res.rank < n + 1:
                ok = False
                break
            min_svs[idx] = res.singular_values[n]
            if min_svs[idx] < min_svs[worst_idx]:
                worst_idx = idx
        if ok:
            worst = hormander_rank(lifted, np.concatenate([grid[worst_idx], [0.0]]), depth, threshold)
            return LambdaResult(lam, worst.certificate, min_svs, grid, tested)
    raise LambdaSearchError(
        f"no Gaussian-center distance below {tested[-1]:.3g} reached rank {n + 1} "
        f"(tried {len(tested)} doublings from {lam0:.3g})"
    )


# ---------------------------------------------------------------------------
# JSON field families


def family_from_dict(obj) -> tuple[int, int, BracketFamily]:
    """Load {N, d, fields: [{name, components: [poly strings]}]} into a
    bracket family; the entry named V0 is the drift, V1..Vd the drivers."""
    try:
        n = int(obj["N"])
        d = int(obj["d"])
        entries = obj["fields"]
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"field spec missing key: {exc}") from exc
    by_name = {}
    for entry in entries:
        if "name" not in entry:
            raise InvalidInput("field spec entry missing 'name'")
        if "components" not in entry:
            raise InvalidInput(f"field '{entry['name']}' missing 'components'")
        comps = entry["components"]
        if len(comps) != n:
            raise InvalidInput(f"field '{entry['name']}' must have {n} components")
        polys = [parse_poly(c, n) for c in comps]
        by_name[entry["name"]] = VectorField.from_polys(polys, name=entry["name"])
    expected = {f"V{i}" for i in range(d + 1)}
    if set(by_name) != expected:
        raise InvalidInput(f"field spec must define exactly {sorted(expected)}, got {sorted(by_name)}")
    return n, d, BracketFamily(by_name["V0"], [by_name[f"V{i}"] for i in range(1, d + 1)])


def family_from_json(text: str):
    return family_from_dict(json.loads(text))
