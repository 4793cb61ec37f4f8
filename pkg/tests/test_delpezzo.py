import random
from fractions import Fraction

import pytest

from conicbundles.delpezzo import (
    BundleReport,
    DP1Data,
    DP2Data,
    DelPezzoError,
    Quartic,
    SplitPolynomial,
    bundle_from_fgh,
    dp1_condition,
    dp1_minimality,
    dp2_minimality,
    dp2_ramification_quartic,
    quartic_discriminant,
)
from conicbundles.delpezzo import _first_subresultant, _quartic_surface_smooth
from conicbundles.pencil import validate

F = Fraction


# -- local exact-polynomial oracle helpers (ascending coefficients) ----------

def pmul(a, b):
    out = [F(0)] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    while out and out[-1] == 0:
        out.pop()
    return out


def pfromroots(lead, roots):
    out = [F(lead)]
    for r in roots:
        out = pmul(out, [F(-r), F(1)])
    return out


def pderiv(a):
    return [i * a[i] for i in range(1, len(a))]


def ptrim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def pgcd(a, b):
    a, b = ptrim(a), ptrim(b)
    while b:
        while len(a) >= len(b):
            s = a[-1] / b[-1]
            d = len(a) - len(b)
            for i, x in enumerate(b):
                a[d + i] -= s * x
            a = ptrim(a)
            if not a:
                break
        a, b = b, a
    return [x / a[-1] for x in a] if a else []


def det(m):
    m = [row[:] for row in m]
    n = len(m)
    sign = F(1)
    out = F(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return F(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            sign = -sign
        out *= m[c][c]
        for r in range(c + 1, n):
            if m[r][c]:
                s = m[r][c] / m[c][c]
                for k in range(c, n):
                    m[r][k] -= s * m[c][k]
    return sign * out


def sylvester_resultant(a, b):
    a, b = ptrim(a), ptrim(b)
    m, n = len(a) - 1, len(b) - 1
    size = m + n
    rows = []
    for i in range(n):
        row = [F(0)] * size
        for j, c in enumerate(reversed(a)):
            row[i + j] = c
        rows.append(row)
    for i in range(m):
        row = [F(0)] * size
        for j, c in enumerate(reversed(b)):
            row[i + j] = c
        rows.append(row)
    return det(rows)


def tri_mul(d1, d2):
    out = {}
    for k1, v1 in d1.items():
        for k2, v2 in d2.items():
            k = tuple(x + y for x, y in zip(k1, k2))
            out[k] = out.get(k, F(0)) + v1 * v2
    return {k: v for k, v in out.items() if v != 0}


# -- split polynomials and bundles --------------------------------------------

def test_split_polynomial():
    p = SplitPolynomial(2, (1, -3))
    assert p.coefficients() == (F(-6), F(4), F(2))
    assert p.evaluate(F(1, 2)) == 2 * F(-1, 2) * F(7, 2)
    assert p.degree == 2
    with pytest.raises(DelPezzoError, match="nonzero"):
        SplitPolynomial(0, (1,))
    with pytest.raises(DelPezzoError, match="float"):
        SplitPolynomial(1, (0.5,))


def test_bundle_example():
    rep = bundle_from_fgh(SplitPolynomial(1, (0, 1)),
                          SplitPolynomial(1, (2, 3)),
                          SplitPolynomial(1, (4, 5)))
    assert isinstance(rep, BundleReport)
    assert rep.data.e == tuple(F(i) for i in range(6))
    assert [str(c) for c in rep.data.a] == \
        ["-30", "-6", "-3", "-3", "-6", "-30"]
    assert rep.degrees == (2, 2, 2)
    assert rep.parity == 0
    assert rep.smooth_at_infinity
    assert rep.infinity_form == (1, 1, 1)
    assert validate(rep.data).faddeev_holds


def test_bundle_odd_parity():
    rep = bundle_from_fgh(SplitPolynomial(1, (0,)),
                          SplitPolynomial(1, (1,)),
                          SplitPolynomial(1, (3,)))
    assert rep.parity == 1
    assert [str(c) for c in rep.data.a] == ["-3", "2", "-6"]
    assert rep.data.faddeev_holds


def test_bundle_errors():
    with pytest.raises(DelPezzoError, match="parity"):
        bundle_from_fgh(SplitPolynomial(1, (0,)), SplitPolynomial(1, (1,)),
                        SplitPolynomial(1, (2, 3)))
    with pytest.raises(DelPezzoError, match="pairwise distinct"):
        bundle_from_fgh(SplitPolynomial(1, (0, 1)),
                        SplitPolynomial(1, (1, 2)),
                        SplitPolynomial(1, (4, 5)))
    with pytest.raises(DelPezzoError, match="split"):
        bundle_from_fgh(SplitPolynomial(1, (0,)), SplitPolynomial(1, (1,)),
                        SplitPolynomial(1, (-1,)))


def test_bundle_random_reciprocity():
    rng = random.Random(4)
    done = 0
    while done < 50:
        deg = rng.choice((1, 2))
        roots = rng.sample(range(-25, 25), 3 * deg)
        leads = [rng.choice((1, -1, 2, 3, 5, -2)) for _ in range(3)]
        try:
            rep = bundle_from_fgh(
                SplitPolynomial(leads[0], tuple(roots[:deg])),
                SplitPolynomial(leads[1], tuple(roots[deg:2 * deg])),
                SplitPolynomial(leads[2], tuple(roots[2 * deg:])))
        except DelPezzoError:
            continue  # split fibre; resample
        assert rep.data.r == 3 * deg
        assert validate(rep.data).faddeev_holds
        done += 1


# -- degree 2 ------------------------------------------------------------------

DP2_EXAMPLE = DP2Data(SplitPolynomial(1, (0, 1)), SplitPolynomial(1, (2, 3)),
                      SplitPolynomial(1, (4, 5)))


def test_dp2_data_validation():
    with pytest.raises(DelPezzoError, match="degree 2"):
        DP2Data(SplitPolynomial(1, (0,)), SplitPolynomial(1, (2, 3)),
                SplitPolynomial(1, (4, 5)))
    with pytest.raises(DelPezzoError, match="distinct"):
        DP2Data(SplitPolynomial(1, (0, 1)), SplitPolynomial(2, (1, 3)),
                SplitPolynomial(1, (4, 5)))
    # -5(t + 1)(t - 6/5) = -6 f + g for f = t(t-1), g = (t-2)(t-3)
    with pytest.raises(DelPezzoError, match="independent"):
        DP2Data(SplitPolynomial(1, (0, 1)), SplitPolynomial(1, (2, 3)),
                SplitPolynomial(-5, (-1, F(6, 5))))


def test_dp2_quartic_example():
    quartic = dp2_ramification_quartic(DP2_EXAMPLE)
    got = (quartic.x4, quartic.y4, quartic.z4,
           quartic.x2y2, quartic.x2z2, quartic.y2z2)
    assert got == (1, 1, 1, -14, -62, -14)
    assert quartic.smooth and quartic.singular_reasons == ()
    # oracle: expand (f1 x^2 + g1 y^2 + h1 z^2)^2 - 4 (f0 ...)(f2 ...)
    cs = [p.coefficients() for p in (DP2_EXAMPLE.f, DP2_EXAMPLE.g,
                                     DP2_EXAMPLE.h)]
    level = lambda k: {(2, 0, 0): cs[0][k], (0, 2, 0): cs[1][k],
                       (0, 0, 2): cs[2][k]}
    mid, lo, hi = level(1), level(0), level(2)
    expanded = tri_mul(mid, mid)
    for key, val in tri_mul(lo, hi).items():
        expanded[key] = expanded.get(key, F(0)) - 4 * val
    assert {k: v for k, v in expanded.items() if v} == {
        (4, 0, 0): F(1), (0, 4, 0): F(1), (0, 0, 4): F(1),
        (2, 2, 0): F(-14), (2, 0, 2): F(-62), (0, 2, 2): F(-14)}


def test_dp2_quartic_scaling():
    doubled = DP2Data(SplitPolynomial(2, (0, 1)), SplitPolynomial(2, (2, 3)),
                      SplitPolynomial(2, (4, 5)))
    q1 = dp2_ramification_quartic(DP2_EXAMPLE)
    q2 = dp2_ramification_quartic(doubled)
    assert (q2.x4, q2.y4, q2.z4, q2.x2y2, q2.x2z2, q2.y2z2) == \
        tuple(4 * v for v in (q1.x4, q1.y4, q1.z4, q1.x2y2, q1.x2z2, q1.y2z2))
    assert q1.smooth == q2.smooth


def test_quartic_smooth_helper_failure_modes():
    ok, reasons = _quartic_surface_smooth(*(F(x) for x in (1, 1, 1, -14, -62, -14)))
    assert ok and reasons == ()
    ok, reasons = _quartic_surface_smooth(*(F(x) for x in (0, 1, 1, 1, 1, 1)))
    assert not ok and any("vertex" in r for r in reasons)
    ok, reasons = _quartic_surface_smooth(*(F(x) for x in (1, 1, 1, 2, 2, 2)))
    assert not ok and any("singular" in r for r in reasons)
    ok, reasons = _quartic_surface_smooth(*(F(x) for x in (1, 1, 1, 2, 0, 0)))
    assert not ok and any("line z = 0" in r for r in reasons)


def test_dp2_minimality_trivial_leads():
    rep = dp2_minimality(DP2_EXAMPLE)
    assert not rep.independent
    assert rep.certificate == ("a",)  # the class of 1 is already trivial
    assert len(rep.classes) == 19


def test_dp2_minimality_duplicate_class():
    data = DP2Data(SplitPolynomial(2, (2, 0)), SplitPolynomial(3, (5, 7)),
                   SplitPolynomial(5, (13, 19)))
    rep = dp2_minimality(data)
    assert not rep.independent
    assert rep.certificate == ("a", "e1-e2")  # both are the class of 2
    by_label = dict(rep.classes)
    prod = by_label["a"] * by_label["e1-e2"]
    assert prod.is_trivial


def test_dp2_minimality_prime_separated_instance():
    data = DP2Data(SplitPolynomial(101, (19, -63)),
                   SplitPolynomial(103, (-3, -74)),
                   SplitPolynomial(107, (66, 71)))
    rep = dp2_minimality(data)
    assert rep.independent and rep.certificate is None


def test_dp2_minimality_square_lead_never_independent():
    rng = random.Random(9)
    done = 0
    while done < 10:
        roots = rng.sample(range(-40, 40), 6)
        square = rng.choice((1, 4, 9, F(4, 9)))
        try:
            data = DP2Data(SplitPolynomial(square, tuple(roots[0:2])),
                           SplitPolynomial(3, tuple(roots[2:4])),
                           SplitPolynomial(5, tuple(roots[4:6])))
        except DelPezzoError:
            continue
        assert not dp2_minimality(data).independent
        done += 1


# -- quartic discriminant ------------------------------------------------------

def test_quartic_discriminant_pins():
    assert quartic_discriminant(Quartic((-1, 0, 0, 0, 1))) == 256
    assert quartic_discriminant(Quartic((0, 0, 0, 0, 1))) == 0
    assert quartic_discriminant(Quartic((1, 0, -2, 0, 1))) == 0
    assert quartic_discriminant(Quartic((3, 0, 0, 0, 1))) == -6912
    assert quartic_discriminant(Quartic((0, -1, 0, 1, 0))) == -4
    # degree drop by two: double root at infinity
    assert quartic_discriminant(Quartic((1, 0, 1, 0, 0))) == 0
    coeffs = pfromroots(1, (1, 2, 3, 4))
    assert quartic_discriminant(Quartic(tuple(coeffs))) == -144
    with pytest.raises(DelPezzoError, match="five"):
        Quartic((1, 2, 3))
    with pytest.raises(DelPezzoError, match="float"):
        Quartic((0.5, 0, 0, 0, 1))


def random_quartic(rng):
    kind = rng.randrange(3)
    if kind == 0:
        coeffs = [F(rng.randint(-9, 9)) for _ in range(5)]
    elif kind == 1:
        alpha = F(rng.randint(-4, 4))
        rest = [F(rng.randint(-4, 4)) for _ in range(3)]
        coeffs = pmul(pmul([-alpha, F(1)], [-alpha, F(1)]), rest) or [F(0)]
        coeffs = (coeffs + [F(0)] * 5)[:5]
    else:
        coeffs = [F(rng.randint(-9, 9)) for _ in range(3)] + [F(0), F(0)]
    return coeffs


def form_has_repeated_root(coeffs):
    # chart-aware: a finite repeated root shows in gcd(q, q'); a repeated
    # root at infinity shows after reversing the homogenized coefficients
    affine = ptrim(coeffs)
    rev = ptrim(list(reversed(list(coeffs))))
    for poly in (affine, rev):
        if len(pgcd(poly, pderiv(poly))) > 1:
            return True
    return False


def test_quartic_discriminant_gcd_oracle():
    rng = random.Random(12)
    checked = 0
    while checked < 200:
        coeffs = random_quartic(rng)
        if not any(coeffs):
            continue
        d4 = quartic_discriminant(Quartic(tuple(coeffs)))
        assert (d4 == 0) == form_has_repeated_root(coeffs), coeffs
        checked += 1


def test_quartic_discriminant_resultant_oracle():
    rng = random.Random(13)
    checked = 0
    while checked < 40:
        coeffs = [F(rng.randint(-9, 9)) for _ in range(5)]
        if coeffs[4] == 0:
            continue
        d4 = quartic_discriminant(Quartic(tuple(coeffs)))
        res = sylvester_resultant(coeffs, pderiv(coeffs))
        assert d4 == -res / coeffs[4]
        checked += 1


# -- degree 1 ------------------------------------------------------------------

DP1_REFERENCE = DP1Data(tuple(range(8)), 1, 1)


def test_dp1_data_validation():
    with pytest.raises(DelPezzoError, match="eight"):
        DP1Data(tuple(range(7)), 1, 1)
    with pytest.raises(DelPezzoError, match="eight"):
        DP1Data((0, 0, 1, 2, 3, 4, 5, 6), 1, 1)
    with pytest.raises(DelPezzoError, match="nonzero"):
        DP1Data(tuple(range(8)), 0, 1)
    with pytest.raises(DelPezzoError, match="float"):
        DP1Data((0.5, 1, 2, 3, 4, 5, 6, 7), 1, 1)


def test_dp1_pencil_coefficients():
    p = DP1_REFERENCE.p_coefficients()
    q = DP1_REFERENCE.q_coefficients()
    assert p == tuple(F(c, 840) for c in pfromroots(1, (0, 1, 2, 3)))
    assert q == tuple(pfromroots(1, (4, 5, 6, 7)))


def test_dp1_condition_reference():
    rep = dp1_condition(DP1_REFERENCE)
    assert rep.holds
    assert rep.full_degree and rep.discriminant_squarefree \
        and rep.double_roots_simple
    assert rep.failed == ()
    assert len(rep.discriminant) == 7
    assert rep.discriminant[0] == -144  # disc of (t-4)(t-5)(t-6)(t-7)
    assert rep.discriminant[6] == F(-144, 840 ** 6)  # disc of p


def test_dp1_condition_two_double_roots():
    # the pencil of even quartics through (t^2-1)(t^2-4) and
    # (t^2-1/4)(t^2-16) contains a member c (t^2-v)^2 at a rational
    # parameter, so the member discriminant acquires a repeated root
    e = (1, -1, 2, -2, F(1, 2), F(-1, 2), 4, -4)
    rep = dp1_condition(DP1Data(e, 1, 1))
    assert not rep.holds
    assert not rep.discriminant_squarefree
    assert not rep.double_roots_simple
    assert "discriminant squarefree" in rep.failed
    assert rep.full_degree  # p and q themselves are squarefree


def test_dp1_condition_affine_invariance():
    for e in (tuple(range(8)), (1, -1, 2, -2, F(1, 2), F(-1, 2), 4, -4)):
        base = dp1_condition(DP1Data(e, 1, 1))
        moved = dp1_condition(
            DP1Data(tuple(3 * F(x) - 5 for x in e), 1, 1))
        assert (base.holds, base.full_degree, base.discriminant_squarefree,
                base.double_roots_simple) == \
            (moved.holds, moved.full_degree, moved.discriminant_squarefree,
             moved.double_roots_simple)


def test_dp1_condition_scale_invariance():
    scaled = dp1_condition(DP1Data(tuple(range(8)), 3, 5))
    base = dp1_condition(DP1_REFERENCE)
    assert scaled.holds == base.holds
    assert scaled.failed == base.failed


def test_dp1_minimality_reference():
    rep = dp1_minimality(DP1_REFERENCE)
    assert not rep.independent
    assert rep.certificate == ("e1-e5", "e2-e6")  # -4 and -4
    assert [str(c) for c in rep.fibre_classes] == \
        ["210", "10", "30", "6", "35", "7", "21"]
    assert rep.contracted_bundle is not None
    assert rep.contracted_bundle.r == 7
    assert rep.contracted_bundle.faddeev_holds
    assert rep.contracted_bundle.e == tuple(F(i) for i in range(7))


def test_dp1_minimality_independent_instance():
    e = (42, 130, 142, 161, 208, 282, 362, 388)
    rep = dp1_minimality(DP1Data(e, 1, 1))
    assert rep.independent and rep.certificate is None
    assert len(rep.classes) == 16
    shifted = dp1_minimality(DP1Data(tuple(x + 17 for x in e), 1, 1))
    assert shifted.independent
    assert [c for _, c in shifted.classes] == [c for _, c in rep.classes]


def test_dp1_minimality_constructed_dependent():
    # e1 - e5 = 8 and e2 - e6 = 2 share the square class 2
    e = (8, 3, 11, 13, 0, 1, 101, 103)
    rep = dp1_minimality(DP1Data(e, 1, 1))
    assert not rep.independent
    by_label = dict(rep.classes)
    prod = by_label[rep.certificate[0]]
    for label in rep.certificate[1:]:
        prod = prod * by_label[label]
    assert prod.is_trivial


def test_first_subresultant_detects_gcd_degree():
    def wrap(coeffs):
        return [[c] if c else [] for c in coeffs]

    def psc01(roots):
        coeffs = pfromroots(1, roots)
        s1 = _first_subresultant(wrap(coeffs))
        res = sylvester_resultant(coeffs, pderiv(coeffs))
        return res, (s1[0] if s1 else F(0))

    res, s1 = psc01((1, 1, 2, 2))
    assert res == 0 and s1 == 0
    res, s1 = psc01((1, 1, 2, 3))
    assert res == 0 and s1 != 0
    res, s1 = psc01((1, 2, 3, 4))
    assert res != 0
