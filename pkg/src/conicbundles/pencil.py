"""Conic bundles over the projective line with split degenerate fibres.

The data model is a finite set of pairwise distinct rational points e_i
together with a nontrivial square class a_i attached to each: the fibre
over e_i degenerates into a pair of lines conjugate over Q(sqrt(a_i)).
The map delta sends an F_2 vector (n_1, ..., n_r) to the square class of
prod a_i^{n_i}; vectors in Ker(delta) correspond to quaternion classes
sum n_i (a_i, t - e_i) on the bundle, and the quotient of Ker(delta) by
the all-ones vector measures the Brauer classes not coming from the base
field.  Reciprocity for the residues along the t-line forces prod a_i to
be a square whenever the bundle extends smoothly over infinity; data
violating it is accepted with a warning since several constructions here
deliberately work with an extra class at infinity.

Norm-form systems x_i^2 - a_i y_i^2 = f_i(u_1, ..., u_s) with integer
linear forms f_i are the arithmetic face of the same data: torsor_system
produces the s = 2 system f_i = (u - e_i v) / lambda_i cleared to integer
coefficients, and quadric_intersection_system assembles the pencil data
of a fibred product of two-fibre bundles (u - e v)(u - e' v) = c N(x, y).
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .exactnum import (
    ExactNumError,
    SquareClass,
    TRIVIAL_CLASS,
    squarefree_class,
)


class PencilError(ExactNumError):
    pass


def _as_fraction(x) -> Fraction:
    try:
        return Fraction(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise PencilError("not a rational number: %r" % (x,)) from exc


def _as_class(x) -> SquareClass:
    if isinstance(x, SquareClass):
        return x
    return squarefree_class(_as_fraction(x))


@dataclass(frozen=True)
class ConicBundleData:
    """Degenerate-fibre data (e_i, a_i), optionally with torsor scalings."""

    e: Tuple[Fraction, ...]
    a: Tuple[SquareClass, ...]
    lam: Optional[Tuple[Fraction, ...]] = None

    def __post_init__(self):
        e = tuple(_as_fraction(x) for x in self.e)
        a = tuple(_as_class(x) for x in self.a)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "a", a)
        if not e:
            raise PencilError("at least one degenerate fibre is required")
        if len(a) != len(e):
            raise PencilError("e and a must have the same length")
        if len(set(e)) != len(e):
            raise PencilError("the points e_i must be pairwise distinct")
        for cls in a:
            if cls.is_trivial:
                raise PencilError("each a_i must be a nontrivial square class")
        if self.lam is not None:
            lam = tuple(_as_fraction(x) for x in self.lam)
            object.__setattr__(self, "lam", lam)
            if len(lam) != len(e):
                raise PencilError("lambda must have one entry per fibre")
            if any(x == 0 for x in lam):
                raise PencilError("lambda entries must be nonzero")

    @property
    def r(self) -> int:
        return len(self.e)

    def faddeev_class(self) -> SquareClass:
        cls = TRIVIAL_CLASS
        for x in self.a:
            cls = cls * x
        return cls

    @property
    def faddeev_holds(self) -> bool:
        return self.faddeev_class().is_trivial


@dataclass(frozen=True)
class ValidationReport:
    e_distinct: bool
    a_nontrivial: bool
    faddeev_holds: bool
    faddeev_class: SquareClass
    warnings: Tuple[str, ...]


def validate(data: ConicBundleData) -> ValidationReport:
    """Check the bundle data and report the reciprocity flag.

    Structural defects (repeated e_i, trivial a_i, zero lambda) already
    fail at construction; a nontrivial product of the a_i is legitimate
    for bundles with an extra class at infinity, so it only warns.
    """
    cls = data.faddeev_class()
    warnings = ()
    if not cls.is_trivial:
        warnings = (
            "product of the a_i is the nontrivial class %s; the bundle "
            "carries a class at infinity" % (cls,),
        )
    return ValidationReport(
        e_distinct=True,
        a_nontrivial=True,
        faddeev_holds=cls.is_trivial,
        faddeev_class=cls,
        warnings=warnings,
    )


def _check_bits(data: ConicBundleData, n: Sequence[int]) -> Tuple[int, ...]:
    bits = tuple(int(x) for x in n)
    if len(bits) != data.r:
        raise PencilError("vector length %d does not match r = %d"
                          % (len(bits), data.r))
    if any(b not in (0, 1) for b in bits):
        raise PencilError("vector entries must be 0 or 1")
    return bits


def delta(data: ConicBundleData, n: Sequence[int]) -> SquareClass:
    """The square class of prod a_i^{n_i}."""
    bits = _check_bits(data, n)
    cls = TRIVIAL_CLASS
    for b, x in zip(bits, data.a):
        if b:
            cls = cls * x
    return cls


@dataclass(frozen=True)
class BrauerElement:
    """An F_2 vector n in Ker(delta), read modulo the all-ones vector.

    The associated quaternion class is sum n_i (a_i, t - e_i).
    """

    n: Tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(x) for x in self.n)
        object.__setattr__(self, "n", bits)
        if not bits:
            raise PencilError("empty coefficient vector")
        if any(b not in (0, 1) for b in bits):
            raise PencilError("coefficients must be 0 or 1")

    def canonical(self) -> Tuple[int, ...]:
        """The representative of {n, n + (1,...,1)} with leading entry 0."""
        if self.n[0] == 0:
            return self.n
        return tuple(1 - b for b in self.n)

    @property
    def is_constant_class(self) -> bool:
        return len(set(self.n)) == 1


def brauer_element(data: ConicBundleData, n: Sequence[int]) -> BrauerElement:
    """Construct an element, checking membership in Ker(delta)."""
    bits = _check_bits(data, n)
    if not delta(data, bits).is_trivial:
        raise PencilError(
            "the vector %s is not in Ker(delta): class %s"
            % (bits, delta(data, bits)))
    return BrauerElement(bits)


@dataclass(frozen=True)
class BrauerGroupDescription:
    """Ker(delta) and its quotient by the all-ones class."""

    kernel_basis: Tuple[Tuple[int, ...], ...]
    quotient_rank: int

    @property
    def weak_approximation(self) -> bool:
        return self.quotient_rank == 0

    def kernel_dim(self) -> int:
        return len(self.kernel_basis)


def _class_mask(cls: SquareClass, dims: dict) -> int:
    mask = cls.sign
    for p in cls.primes:
        mask |= 1 << dims.setdefault(p, len(dims) + 1)
    return mask


def _rref(rows):
    # reduced echelon form over F_2; rows are bitmasks with pivot = lowest bit
    pivots: dict = {}
    for row in rows:
        while row:
            p = row & -row
            other = pivots.get(p)
            if other is None:
                pivots[p] = row
                break
            row ^= other
    order = sorted(pivots, reverse=True)
    for p in order:
        for q in pivots:
            if q != p and pivots[q] & p:
                pivots[q] ^= pivots[p]
    return [pivots[p] for p in order]


def brauer_group(data: ConicBundleData) -> BrauerGroupDescription:
    """Basis of Ker(delta) and the rank of Ker(delta)/<(1,...,1)>.

    Requires the product of the a_i to be a square, so that the all-ones
    vector lies in the kernel and the quotient is well defined.
    """
    cls = data.faddeev_class()
    if not cls.is_trivial:
        raise PencilError(
            "product of the a_i is the nontrivial class %s; the Brauer "
            "description needs it to be a square" % (cls,))
    r = data.r
    dims: dict = {}
    masks = [_class_mask(x, dims) for x in data.a]
    # incremental nullspace of delta: combo records which inputs were folded in
    pivots: dict = {}
    kernel = []
    for idx, m in enumerate(masks):
        cur, combo = m, 1 << idx
        while cur:
            row = pivots.get(cur.bit_length())
            if row is None:
                break
            cur ^= row[0]
            combo ^= row[1]
        if cur == 0:
            kernel.append(combo)
        else:
            pivots[cur.bit_length()] = (cur, combo)
    # combos use bit idx for coordinate n_{idx+1}; re-pack so bit (r-1-i) is n_i,
    # echelonize for a unique basis, then unpack to 0/1 tuples
    packed = [sum(1 << (r - 1 - i) for i in range(r) if combo >> i & 1)
              for combo in kernel]
    basis = _rref(packed)
    vectors = tuple(tuple(row >> (r - 1 - i) & 1 for i in range(r))
                    for row in basis)
    return BrauerGroupDescription(
        kernel_basis=vectors,
        quotient_rank=max(len(vectors) - 1, 0),
    )


@dataclass(frozen=True)
class NormFormSystem:
    """Simultaneous norm equations x_i^2 - a_i y_i^2 = f_i(u_1, ..., u_s)."""

    r: int
    s: int
    a: Tuple[int, ...]
    forms: Tuple[Tuple[int, ...], ...]
    clearing: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.r < 1:
            raise PencilError("r must be positive")
        if self.s < 2:
            raise PencilError("at least two parameters are required")
        a = tuple(int(x) for x in self.a)
        forms = tuple(tuple(int(c) for c in f) for f in self.forms)
        clearing = tuple(int(c) for c in self.clearing) or (1,) * self.r
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "forms", forms)
        object.__setattr__(self, "clearing", clearing)
        if len(a) != self.r or len(forms) != self.r or len(clearing) != self.r:
            raise PencilError("a, forms and clearing must have length r")
        from .exactnum import _isqrt_exact
        for x in a:
            if x == 0 or (x > 0 and _isqrt_exact(x) is not None):
                raise PencilError("each a_i must be a nonzero nonsquare")
        for f in forms:
            if len(f) != self.s:
                raise PencilError("each form needs %d coefficients" % self.s)
            if not any(f):
                raise PencilError("forms must be nonzero")
        for i in range(self.r):
            for j in range(i + 1, self.r):
                if not _independent_pair(forms[i], forms[j]):
                    raise PencilError(
                        "forms %d and %d are proportional" % (i + 1, j + 1))

    @property
    def i_minus(self) -> Tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.a) if x < 0)

    @property
    def i_plus(self) -> Tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.a) if x > 0)


def _independent_pair(f, g) -> bool:
    for i in range(len(f)):
        for j in range(i + 1, len(f)):
            if f[i] * g[j] - f[j] * g[i] != 0:
                return True
    return False


def torsor_system(data: ConicBundleData) -> NormFormSystem:
    """The s = 2 system x_i^2 - a_i y_i^2 = (u - e_i v) / lambda_i.

    Coefficients are cleared to integers by the least positive multiple;
    the multipliers are recorded so downstream densities refer to the
    integral model rather than the original scaling.
    """
    lam = data.lam if data.lam is not None else (Fraction(1),) * data.r
    a = []
    forms = []
    clearing = []
    for i in range(data.r):
        mu = 1 / lam[i]
        cu, cv = mu, -mu * data.e[i]
        d = cu.denominator
        d *= cv.denominator // _gcd(d, cv.denominator)
        forms.append((int(cu * d), int(cv * d)))
        clearing.append(d)
        a.append(data.a[i].representative())
    return NormFormSystem(r=data.r, s=2, a=tuple(a), forms=tuple(forms),
                          clearing=tuple(clearing))


def _gcd(x: int, y: int) -> int:
    while y:
        x, y = y, x % y
    return x


@dataclass(frozen=True)
class QuadricIntersectionData:
    """Pencil data of a fibred product of two-fibre conic bundles.

    Factor i is (u - e_{2i-1} v)(u - e_{2i} v) = c_i (x_i^2 - a_i y_i^2);
    `combined` collects the degenerate points of the product, merging a
    point shared by several factors (legal only when their square classes
    agree).  Each factor is itself valid bundle data with trivial product
    of classes.
    """

    n: int
    e: Tuple[Fraction, ...]
    a: Tuple[SquareClass, ...]
    c: Tuple[Fraction, ...]
    factors: Tuple[ConicBundleData, ...]
    combined: ConicBundleData
    shared_points: Tuple[Fraction, ...]


def quadric_intersection_system(e: Sequence, a: Sequence,
                                c: Sequence) -> QuadricIntersectionData:
    """Assemble the pencil data for (u - e_{2i-1} v)(u - e_{2i} v) = c_i N_i.

    A degenerate point shared across factors is allowed only when the
    factors' fibre components live over the same quadratic field; a shared
    point with mismatched classes is an error.
    """
    aa = tuple(_as_class(x) for x in a)
    cc = tuple(_as_fraction(x) for x in c)
    ee = tuple(_as_fraction(x) for x in e)
    n = len(aa)
    if n < 1:
        raise PencilError("at least one factor is required")
    if len(ee) != 2 * n:
        raise PencilError("expected %d points, got %d" % (2 * n, len(ee)))
    if len(cc) != n or any(x == 0 for x in cc):
        raise PencilError("each c_i must be a nonzero rational")
    factors = []
    for i in range(n):
        if ee[2 * i] == ee[2 * i + 1]:
            raise PencilError("factor %d has a repeated point" % (i + 1))
        factors.append(ConicBundleData(e=(ee[2 * i], ee[2 * i + 1]),
                                       a=(aa[i], aa[i])))
    seen: dict = {}
    order = []
    shared = []
    for i in range(n):
        for j in (2 * i, 2 * i + 1):
            prev = seen.get(ee[j])
            if prev is None:
                seen[ee[j]] = aa[i]
                order.append(ee[j])
            elif prev != aa[i]:
                raise PencilError(
                    "point %s is shared by factors with different classes "
                    "%s and %s" % (ee[j], prev, aa[i]))
            else:
                shared.append(ee[j])
    combined = ConicBundleData(e=tuple(order),
                               a=tuple(seen[x] for x in order))
    return QuadricIntersectionData(
        n=n, e=ee, a=aa, c=cc,
        factors=tuple(factors),
        combined=combined,
        shared_points=tuple(shared),
    )
