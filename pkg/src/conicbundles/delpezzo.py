"""Conic bundles built from split polynomials and del Pezzo checks.

A triple (f, g, h) of rational polynomials that split into distinct
rational roots defines the conic bundle f(t) x^2 + g(t) y^2 + h(t) z^2
over the t-line.  The fibre over a root e of f degenerates into a pair
of lines conjugate over Q(sqrt(-g(e) h(e))), and cyclically, so the
triple induces degenerate-fibre data (e_i, a_i) with one entry per root;
matching degree parities let the bundle close up smoothly over t =
infinity, where the fibre is the conic of leading coefficients.

For three quadratics the total space is a degree-2 del Pezzo surface:
the anticanonical map is a double plane cover branched in the quartic
(f_1 x^2 + g_1 y^2 + h_1 z^2)^2 - 4 (f_0 x^2 + ...) (f_2 x^2 + ...)
whose smoothness is certified here by direct elimination: the curve is
a conic in the squared coordinates, and it is smooth exactly when that
conic is smooth, misses the coordinate vertices, and is nowhere tangent
to a coordinate line.  Minimality of the surface reduces to the classes
-1, a, b, c and the root differences being independent in Q*/Q*^2.

The degree-1 construction takes eight distinct points e_1..e_8 and two
scalars and forms the pencil r p(t) + s q(t) of quartics with
p = c1^2 prod_{i<=4} (t - e_i)/(e_8 - e_i) and
q = c2^2 prod_{j>=5} (t - e_j).  The construction needs the pencil to
contain exactly six members with a repeated root, each with a single
double root.  Both parts are certified exactly: the discriminant of the
pencil member is a degree-6 form whose squarefreeness is a gcd
computation, and "no member has a repeated factor of degree >= 2" is
the nonvanishing of the resultant of that form with the first principal
subresultant coefficient of (P, dP/dt).

The quartic discriminant uses the degree-6 invariant of the binary form
p_4 T^4 + ... + p_0 U^4, normalized so t^4 + a maps to -256 a^3; it
vanishes exactly when the form has a repeated root, a root at infinity
(a degree drop of two or more) included.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .exactnum import (
    ExactNumError,
    SquareClass,
    f2_independent,
    squarefree_class,
)
from .pencil import ConicBundleData


class DelPezzoError(ExactNumError):
    pass


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        raise DelPezzoError("float is not exact: %r" % (x,))
    try:
        return Fraction(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise DelPezzoError("not a rational number: %r" % (x,)) from exc


# -- dense polynomials over Fraction, ascending coefficients -----------------

def _trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def _padd(a, b):
    out = [Fraction(0)] * max(len(a), len(b))
    for i, x in enumerate(a):
        out[i] += x
    for i, x in enumerate(b):
        out[i] += x
    return _trim(out)


def _pscale(a, s):
    return _trim([x * s for x in a])


def _pmul(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _trim(out)


def _pderiv(a):
    return _trim([i * a[i] for i in range(1, len(a))])


def _peval(a, t):
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * t + c
    return acc


def _pdivmod(a, b):
    if not b:
        raise DelPezzoError("polynomial division by zero")
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    while a and len(a) >= len(b):
        s = a[-1] / b[-1]
        d = len(a) - len(b)
        q[d] = s
        for i, x in enumerate(b):
            a[d + i] -= s * x
        a.pop()  # the top coefficient cancels exactly
        a = _trim(a)
    return _trim(q), _trim(a)


def _pgcd(a, b):
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _pdivmod(a, b)[1]
    if a:
        a = _pscale(a, 1 / a[-1])
    return a


def _det_fractions(m):
    # Gaussian elimination with exact pivots
    n = len(m)
    m = [row[:] for row in m]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            if m[r][col] == 0:
                continue
            s = m[r][col] * inv
            for c in range(col, n):
                m[r][c] -= s * m[col][c]
    return det


def _resultant(a, b):
    # Sylvester determinant at the actual degrees; Res(a, b) = 0 exactly
    # when the polynomials share a root (both assumed nonzero)
    a, b = _trim(a), _trim(b)
    if not a or not b:
        raise DelPezzoError("resultant needs nonzero polynomials")
    m, n = len(a) - 1, len(b) - 1
    if m == 0:
        return a[0] ** n
    if n == 0:
        return b[0] ** m
    size = m + n
    rows = []
    for i in range(n):
        row = [Fraction(0)] * size
        for j, c in enumerate(reversed(a)):
            row[i + j] = c
        rows.append(row)
    for i in range(m):
        row = [Fraction(0)] * size
        for j, c in enumerate(reversed(b)):
            row[i + j] = c
        rows.append(row)
    return _det_fractions(rows)


def _det_poly(m):
    # cofactor expansion; entries are polynomials over Fraction
    n = len(m)
    if n == 1:
        return m[0][0]
    total = []
    for r in range(n):
        if not m[r][0]:
            continue
        minor = [[m[i][j] for j in range(1, n)] for i in range(n) if i != r]
        term = _pmul(m[r][0], _det_poly(minor))
        if r % 2:
            term = _pscale(term, -1)
        total = _padd(total, term)
    return total


# -- split polynomials and the induced bundle --------------------------------

@dataclass(frozen=True)
class SplitPolynomial:
    """leading * prod (t - root) with rational leading and roots."""

    leading: Fraction
    roots: Tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "leading", _as_fraction(self.leading))
        object.__setattr__(
            self, "roots", tuple(_as_fraction(x) for x in self.roots))
        if self.leading == 0:
            raise DelPezzoError("leading coefficient must be nonzero")

    @property
    def degree(self) -> int:
        return len(self.roots)

    def coefficients(self) -> Tuple[Fraction, ...]:
        poly = [self.leading]
        for e in self.roots:
            poly = _pmul(poly, [-e, Fraction(1)])
        return tuple(poly)

    def evaluate(self, t) -> Fraction:
        t = _as_fraction(t)
        acc = self.leading
        for e in self.roots:
            acc *= t - e
        return acc


@dataclass(frozen=True)
class BundleReport:
    data: ConicBundleData
    degrees: Tuple[int, int, int]
    parity: int
    infinity_form: Tuple[Fraction, Fraction, Fraction]
    smooth_at_infinity: bool


def bundle_from_fgh(f: SplitPolynomial, g: SplitPolynomial,
                    h: SplitPolynomial) -> BundleReport:
    """Degenerate-fibre data of the bundle f x^2 + g y^2 + h z^2.

    Fibres are listed in root order of f, then g, then h; the class over
    a root of f is the squarefree part of -g(e) h(e), and cyclically.
    """
    degs = (f.degree, g.degree, h.degree)
    if len({d % 2 for d in degs}) != 1:
        raise DelPezzoError(
            "degrees %d, %d, %d do not share a parity" % degs)
    roots = f.roots + g.roots + h.roots
    if len(set(roots)) != len(roots):
        raise DelPezzoError("the roots of f, g, h must be pairwise distinct")
    classes = []
    for poly, left, right in ((f, g, h), (g, h, f), (h, f, g)):
        for e in poly.roots:
            value = -left.evaluate(e) * right.evaluate(e)
            cls = squarefree_class(value)
            if cls.is_trivial:
                raise DelPezzoError(
                    "the fibre at t = %s is split: %s is a square"
                    % (e, value))
            classes.append(cls)
    data = ConicBundleData(e=roots, a=tuple(classes))
    if not data.faddeev_holds:
        raise DelPezzoError("fibre classes violate reciprocity")
    lead = (f.leading, g.leading, h.leading)
    return BundleReport(
        data=data,
        degrees=degs,
        parity=degs[0] % 2,
        infinity_form=lead,
        smooth_at_infinity=lead[0] * lead[1] * lead[2] != 0,
    )


# -- degree 2 -----------------------------------------------------------------

@dataclass(frozen=True)
class DP2Data:
    """Three quadratics with six distinct roots, independent over Q."""

    f: SplitPolynomial
    g: SplitPolynomial
    h: SplitPolynomial

    def __post_init__(self):
        for poly in (self.f, self.g, self.h):
            if poly.degree != 2:
                raise DelPezzoError("f, g, h must each have degree 2")
        roots = self.f.roots + self.g.roots + self.h.roots
        if len(set(roots)) != 6:
            raise DelPezzoError("the six roots must be pairwise distinct")
        if self.coefficient_determinant() == 0:
            raise DelPezzoError("f, g, h must be linearly independent")

    @property
    def roots(self) -> Tuple[Fraction, ...]:
        return self.f.roots + self.g.roots + self.h.roots

    def coefficient_determinant(self) -> Fraction:
        rows = [list(p.coefficients()) for p in (self.f, self.g, self.h)]
        return _det_fractions(rows)


@dataclass(frozen=True)
class RamificationQuartic:
    """A x^4 + B y^4 + C z^4 + D x^2 y^2 + E x^2 z^2 + F y^2 z^2."""

    x4: Fraction
    y4: Fraction
    z4: Fraction
    x2y2: Fraction
    x2z2: Fraction
    y2z2: Fraction
    smooth: bool
    singular_reasons: Tuple[str, ...]


def _quartic_surface_smooth(A, B, C, D, E, F):
    # the quartic is q(x^2, y^2, z^2) for the conic q = A X^2 + B Y^2 +
    # C Z^2 + D XY + E XZ + F YZ; checking each coordinate stratum of a
    # would-be singular point reduces smoothness to these five conditions
    reasons = []
    for val, name in ((A, "x"), (B, "y"), (C, "z")):
        if val == 0:
            reasons.append("the %s-vertex lies on the quartic" % name)
    gram = [[2 * A, D, E], [D, 2 * B, F], [E, F, 2 * C]]
    if _det_fractions(gram) == 0:
        reasons.append("the conic in the squared coordinates is singular")
    for disc, name in ((D * D - 4 * A * B, "z"),
                       (E * E - 4 * A * C, "y"),
                       (F * F - 4 * B * C, "x")):
        if disc == 0:
            reasons.append("tangent to the coordinate line %s = 0" % name)
    return not reasons, tuple(reasons)


def dp2_ramification_quartic(data: DP2Data) -> RamificationQuartic:
    """Branch quartic of the double plane cover, with a smoothness check."""
    cf = data.f.coefficients()
    cg = data.g.coefficients()
    ch = data.h.coefficients()
    A = cf[1] ** 2 - 4 * cf[0] * cf[2]
    B = cg[1] ** 2 - 4 * cg[0] * cg[2]
    C = ch[1] ** 2 - 4 * ch[0] * ch[2]
    D = 2 * cf[1] * cg[1] - 4 * (cf[0] * cg[2] + cf[2] * cg[0])
    E = 2 * cf[1] * ch[1] - 4 * (cf[0] * ch[2] + cf[2] * ch[0])
    F = 2 * cg[1] * ch[1] - 4 * (cg[0] * ch[2] + cg[2] * ch[0])
    smooth, reasons = _quartic_surface_smooth(A, B, C, D, E, F)
    return RamificationQuartic(A, B, C, D, E, F, smooth, reasons)


@dataclass(frozen=True)
class IndependenceReport:
    independent: bool
    classes: Tuple[Tuple[str, SquareClass], ...]
    certificate: Optional[Tuple[str, ...]]


def _independence(labeled) -> IndependenceReport:
    ok, cert = f2_independent([cls for _, cls in labeled])
    names = None if cert is None else tuple(labeled[i][0] for i in cert)
    return IndependenceReport(ok, tuple(labeled), names)


def dp2_minimality(data: DP2Data) -> IndependenceReport:
    """Independence of -1, the leading coefficients, and the root
    differences in Q*/Q*^2; independence certifies minimality."""
    labeled = [("-1", squarefree_class(-1)),
               ("a", squarefree_class(data.f.leading)),
               ("b", squarefree_class(data.g.leading)),
               ("c", squarefree_class(data.h.leading))]
    roots = data.roots
    for i in range(6):
        for j in range(i + 1, 6):
            labeled.append(("e%d-e%d" % (i + 1, j + 1),
                            squarefree_class(roots[i] - roots[j])))
    return _independence(labeled)


# -- quartic discriminant -----------------------------------------------------

@dataclass(frozen=True)
class Quartic:
    """p0 + p1 t + p2 t^2 + p3 t^3 + p4 t^4, degree <= 4 allowed."""

    coefficients: Tuple[Fraction, Fraction, Fraction, Fraction, Fraction]

    def __post_init__(self):
        coeffs = tuple(_as_fraction(x) for x in self.coefficients)
        if len(coeffs) != 5:
            raise DelPezzoError("a quartic takes five coefficients p0..p4")
        object.__setattr__(self, "coefficients", coeffs)


def _disc_from_invariants(p0, p1, p2, p3, p4):
    i_inv = 12 * p4 * p0 - 3 * p3 * p1 + p2 * p2
    j_inv = (72 * p4 * p2 * p0 + 9 * p3 * p2 * p1 - 27 * p4 * p1 * p1
             - 27 * p0 * p3 * p3 - 2 * p2 ** 3)
    return (j_inv * j_inv - 4 * i_inv ** 3) / 27


def quartic_discriminant(q: Quartic) -> Fraction:
    """Degree-6 discriminant form of the homogenized quartic, normalized
    by t^4 + a -> -256 a^3; zero exactly at repeated roots, a double
    root at infinity (degree drop by two) included."""
    return _disc_from_invariants(*q.coefficients)


# -- degree 1 -----------------------------------------------------------------

@dataclass(frozen=True)
class DP1Data:
    """Eight distinct points and two nonzero scalars; the induced pencil
    is r p(t) + s q(t) with p = c1^2 prod_{i<=4} (t-e_i)/(e_8-e_i) and
    q = c2^2 prod_{j>=5} (t-e_j)."""

    e: Tuple[Fraction, ...]
    c1: Fraction
    c2: Fraction

    def __post_init__(self):
        e = tuple(_as_fraction(x) for x in self.e)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "c1", _as_fraction(self.c1))
        object.__setattr__(self, "c2", _as_fraction(self.c2))
        if len(e) != 8 or len(set(e)) != 8:
            raise DelPezzoError("e must hold eight pairwise distinct points")
        if self.c1 == 0 or self.c2 == 0:
            raise DelPezzoError("c1 and c2 must be nonzero")

    def p_coefficients(self) -> Tuple[Fraction, ...]:
        scale = self.c1 ** 2
        for i in range(4):
            scale /= self.e[7] - self.e[i]
        poly = [scale]
        for i in range(4):
            poly = _pmul(poly, [-self.e[i], Fraction(1)])
        return tuple(poly)

    def q_coefficients(self) -> Tuple[Fraction, ...]:
        poly = [self.c2 ** 2]
        for j in range(4, 8):
            poly = _pmul(poly, [-self.e[j], Fraction(1)])
        return tuple(poly)


@dataclass(frozen=True)
class DP1ConditionReport:
    holds: bool
    full_degree: bool
    discriminant_squarefree: bool
    double_roots_simple: bool
    failed: Tuple[str, ...]
    discriminant: Tuple[Fraction, ...]  # D(r, 1), ascending in r


def _first_subresultant(p_coeffs):
    # first principal subresultant coefficient of (P, dP/dt) where the
    # t-coefficients of P live in Q[r]: the 5x5 determinant whose rows
    # are t*P, P, t^2*P', t*P', P' read off degrees 5 down to 1
    a = list(p_coeffs)  # index = t-degree, entries are polys in r
    b = [_pscale(c, i) for i, c in enumerate(a)][1:]  # dP/dt

    def row(poly, shift, top):
        # coefficients of t^shift * poly at degrees top..1
        out = []
        for d in range(top, 0, -1):
            k = d - shift
            out.append(poly[k] if 0 <= k < len(poly) else [])
        return out

    m = [row(a, 1, 5), row(a, 0, 5), row(b, 2, 5), row(b, 1, 5), row(b, 0, 5)]
    return _det_poly(m)


def dp1_condition(data: DP1Data) -> DP1ConditionReport:
    """Whether the pencil has exactly six members with a repeated root,
    each a single double root.

    Three exact clauses: the member discriminant D(r, s) has full degree
    six (nonzero on both charts), D is squarefree, and Res(D, S1) is
    nonzero for the first subresultant coefficient S1 of (P, dP/dt), so
    no member carries a repeated factor of degree two or more.
    """
    p = data.p_coefficients()
    q = data.q_coefficients()
    # t-coefficients of P = r p + q as polynomials in r
    coeffs = [[q[i], p[i]] for i in range(5)]
    i_inv = _padd(_padd(_pscale(_pmul(coeffs[4], coeffs[0]), 12),
                        _pscale(_pmul(coeffs[3], coeffs[1]), -3)),
                  _pmul(coeffs[2], coeffs[2]))
    j_inv = _padd(
        _padd(_pscale(_pmul(_pmul(coeffs[4], coeffs[2]), coeffs[0]), 72),
              _pscale(_pmul(_pmul(coeffs[3], coeffs[2]), coeffs[1]), 9)),
        _padd(_padd(_pscale(_pmul(coeffs[4], _pmul(coeffs[1], coeffs[1])),
                            -27),
                    _pscale(_pmul(coeffs[0], _pmul(coeffs[3], coeffs[3])),
                            -27)),
              _pscale(_pmul(_pmul(coeffs[2], coeffs[2]), coeffs[2]), -2)))
    disc = _pscale(_padd(_pmul(j_inv, j_inv),
                         _pscale(_pmul(_pmul(i_inv, i_inv), i_inv), -4)),
                   Fraction(1, 27))
    d_p = _disc_from_invariants(*p)
    d_q = _disc_from_invariants(*q)
    full_degree = d_p != 0 and d_q != 0 and len(disc) == 7
    if full_degree and disc[6] != d_p:
        raise DelPezzoError("discriminant charts disagree")
    squarefree = bool(disc) and len(_pgcd(disc, _pderiv(disc))) == 1
    s1 = _first_subresultant(coeffs)
    if disc and s1:
        simple = _resultant(disc, s1) != 0
    else:
        simple = False
    failed = tuple(name for name, ok in (
        ("full degree", full_degree),
        ("discriminant squarefree", squarefree),
        ("double roots simple", simple)) if not ok)
    return DP1ConditionReport(
        holds=not failed,
        full_degree=full_degree,
        discriminant_squarefree=squarefree,
        double_roots_simple=simple,
        failed=failed,
        discriminant=tuple(disc),
    )


@dataclass(frozen=True)
class DP1MinimalityReport:
    independent: bool
    classes: Tuple[Tuple[str, SquareClass], ...]
    certificate: Optional[Tuple[str, ...]]
    fibre_classes: Tuple[SquareClass, ...]
    contracted_bundle: Optional[ConicBundleData]


def dp1_minimality(data: DP1Data) -> DP1MinimalityReport:
    """Independence of the sixteen cross differences e_i - e_j with
    i <= 4 < j, and the fibre data of the contracted bundle.

    The contracted bundle has the seven fibres a_i = prod_j (e_i - e_j)
    for i <= 4 and a_j = prod_i (e_j - e_i)/(e_8 - e_i) for j = 5, 6, 7;
    it is reported whenever every class is nontrivial.
    """
    e = data.e
    labeled = [("e%d-e%d" % (i + 1, j + 1), squarefree_class(e[i] - e[j]))
               for i in range(4) for j in range(4, 8)]
    rep = _independence(labeled)
    fibre = []
    for i in range(4):
        prod = Fraction(1)
        for j in range(4, 8):
            prod *= e[i] - e[j]
        fibre.append(squarefree_class(prod))
    for j in range(4, 7):
        prod = Fraction(1)
        for i in range(4):
            prod *= (e[j] - e[i]) / (e[7] - e[i])
        fibre.append(squarefree_class(prod))
    bundle = None
    if all(not cls.is_trivial for cls in fibre):
        bundle = ConicBundleData(e=e[:7], a=tuple(fibre))
    return DP1MinimalityReport(
        independent=rep.independent,
        classes=rep.classes,
        certificate=rep.certificate,
        fibre_classes=tuple(fibre),
        contracted_bundle=bundle,
    )
