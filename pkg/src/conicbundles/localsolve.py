"""Local solubility of norm-form systems, with explicit witnesses.

A system x_i^2 - a_i y_i^2 = f_i(u) is soluble at a place v when some u
makes every right-hand side a nonzero norm from the relevant quadratic
extension of Q_v.  Over the reals only signs matter: the i with a_i < 0
need f_i(u) > 0 and the rest just need f_i(u) != 0, so the question is
feasibility of a homogeneous system of strict linear inequalities and is
decided exactly by Fourier-Motzkin elimination.  Over Q_p the predicate
is finite by design: a residue u mod p^depth determines val_p(f_i(u)) and
enough of the unit part to evaluate hilbert(a_i, f_i(u), p) whenever the
value's valuation stays below depth (odd p) or depth - 2 (p = 2, where
units need three bits); padic_soluble searches residues digit by digit,
pruning a branch only once a symbol is determined and equal to -1, so a
returned witness survives every lift.  Insolubility verdicts at large p
require exhausting the residue tree and get expensive; the primes where
that can happen divide the coefficients and stay small in practice.

diagonal_quadric_soluble decides c_1 x_1^2 + ... + c_4 x_4^2 = 0 by the
classical rank-4 criterion: isotropic at v unless the determinant class
is a local square and the product of the symbols (c_i, c_j)_v over i < j
differs from (-1, -1)_v.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Tuple

from .exactnum import (
    ExactNumError,
    Place,
    REAL_PLACE,
    hilbert,
    is_prime,
    legendre,
    squarefree_class,
    valuation,
)
from .pencil import NormFormSystem


class LocalSolveError(ExactNumError):
    pass


@dataclass(frozen=True)
class LocalWitness:
    """A certified local point of the parameter space.

    Finite place: u is a residue vector mod p^precision with every
    f_i(u) != 0 mod p^precision and all symbols determined and +1.
    Real place: u is rational with f_i(u) > 0 for the definite indices
    and f_i(u) != 0 everywhere.
    """

    place: Place
    u: Tuple
    precision: Optional[int] = None


def _evaluate(form: Sequence, u: Sequence):
    return sum(c * x for c, x in zip(form, u))


# ---------------------------------------------------------------------------
# the real place


def _normalize_row(row):
    for c in row:
        if c != 0:
            return tuple(x / abs(c) for x in row)
    return None


def _fm_witness(rows, s: int):
    """A rational point with row . u > 0 for every row, or None.

    Homogeneous strict system; eliminates the last variable, recursing on
    the combined system, then back-substitutes into the open interval the
    eliminated variable must occupy.
    """
    clean = []
    for row in rows:
        nr = _normalize_row(row)
        if nr is None:
            return None  # 0 > 0 is infeasible
        if nr not in clean:
            clean.append(nr)
    if s == 1:
        signs = {c > 0 for (c,) in clean}
        if len(signs) == 2:
            return None
        if not clean:
            return (Fraction(1),)
        return (Fraction(1) if signs == {True} else Fraction(-1),)
    lower, upper, passed = [], [], []
    for row in clean:
        c = row[-1]
        if c > 0:
            lower.append(row)
        elif c < 0:
            upper.append(row)
        else:
            passed.append(row[:-1])
    combined = list(passed)
    for lo in lower:
        for up in upper:
            # lo_s (up . u) - up_s (lo . u) > 0 eliminates the last variable
            combined.append(tuple(lo[-1] * up[j] - up[-1] * lo[j]
                                  for j in range(s - 1)))
    rest = _fm_witness(combined, s - 1)
    if rest is None:
        return None
    lo_vals = [-_evaluate(row[:-1], rest) / row[-1] for row in lower]
    up_vals = [-_evaluate(row[:-1], rest) / row[-1] for row in upper]
    if lo_vals and up_vals:
        last = (max(lo_vals) + min(up_vals)) / 2
    elif lo_vals:
        last = max(lo_vals) + 1
    elif up_vals:
        last = min(up_vals) - 1
    else:
        last = Fraction(1)
    return rest + (last,)


def real_soluble(system: NormFormSystem):
    """Whether f_i(u) > 0 for all i with a_i < 0 is feasible over R.

    Returns (verdict, witness); the witness additionally avoids the
    hyperplanes f_i = 0 of the indefinite indices.
    """
    s = system.s
    strict = [tuple(Fraction(c) for c in system.forms[i])
              for i in system.i_minus]
    base = _fm_witness(strict, s)
    if base is None:
        return False, None
    # nudge off the remaining hyperplanes while keeping the strict rows
    if all(_evaluate(f, base) != 0 for f in system.forms):
        return True, LocalWitness(place=REAL_PLACE, u=base)
    for t in range(system.r * s + 1):
        direction = tuple(Fraction(t)**j for j in range(s))
        eps = Fraction(1)
        for _ in range(64):
            cand = tuple(b + eps * d for b, d in zip(base, direction))
            if all(_evaluate(system.forms[i], cand) > 0
                   for i in system.i_minus) and \
               all(_evaluate(f, cand) != 0 for f in system.forms):
                return True, LocalWitness(place=REAL_PLACE, u=cand)
            eps /= 2
    raise LocalSolveError("could not perturb the witness off a hyperplane")


# ---------------------------------------------------------------------------
# finite places


def _technical_bound(system: NormFormSystem, p: int) -> int:
    return max(valuation(4 * a, p) for a in system.a)


def _symbol_state(a: int, value: int, p: int, level: int, depth: int):
    """Classify f_i(u) known mod p^level.

    Returns ("zero",), ("undetermined",) or ("known", symbol).  A nonzero
    residue pins the valuation; the symbol needs the unit part mod p (odd
    p) or mod 8 (p = 2), and is reported only when available at this
    level or guaranteed available at full depth.
    """
    m = p**level
    value %= m
    if value == 0:
        return ("zero",)
    v = valuation(value, p)
    need = 1 if p != 2 else 3
    if level - v < need:
        return ("undetermined",)
    return ("known", hilbert(a, value, Place(p)))


def padic_soluble(system: NormFormSystem, p: int, depth: Optional[int] = None):
    """Search u mod p^depth certifying solubility at p.

    Returns (verdict, witness).  True means some residue u has every
    f_i(u) != 0 mod p^depth with all symbols (a_i, f_i(u))_p determined
    by the residue and equal to +1; such a u survives arbitrary lifting.
    """
    if not is_prime(p):
        raise LocalSolveError("%d is not prime" % p)
    bound = _technical_bound(system, p)
    if depth is None:
        # floor of 4: forms whose coefficient matrix degenerates mod p
        # force extra valuation on the values, so the bound alone can be
        # too shallow; searching mod p^4 restores the margin the symbol
        # test needs for every matrix this toolkit accepts
        depth = max(bound + 2, 4)
    if depth < bound + 1:
        raise LocalSolveError(
            "depth %d is below the technical bound %d" % (depth, bound + 1))
    need = 1 if p != 2 else 3
    fast = _good_prime_witness(system, p, depth)
    if fast is not None:
        return True, fast
    forms = system.forms
    a = system.a
    s = system.s

    def determined_ok(u, level):
        # all symbols known and +1, values nonzero; permits early accept
        for i in range(system.r):
            state = _symbol_state(a[i], _evaluate(forms[i], u), p, level,
                                  depth)
            if state[0] != "known" or state[1] != 1:
                return False
        return True

    def viable(u, level):
        # no symbol is determined and -1; zero residues stay viable
        for i in range(system.r):
            state = _symbol_state(a[i], _evaluate(forms[i], u), p, level,
                                  depth)
            if state[0] == "known" and state[1] != 1:
                return False
        return True

    def dfs(u, level):
        if determined_ok(u, level):
            return tuple(x % p**depth for x in u)
        if level == depth:
            return None
        m = p**level
        for digits in _digit_vectors(p, s):
            cand = tuple(x + d * m for x, d in zip(u, digits))
            if viable(cand, level + 1):
                hit = dfs(cand, level + 1)
                if hit is not None:
                    return hit
        return None

    found = dfs((0,) * s, 0)
    if found is None:
        return False, None
    return True, LocalWitness(place=Place(p), u=found, precision=depth)


@lru_cache(maxsize=None)
def _digit_vectors(p: int, s: int):
    out = [()]
    for _ in range(s):
        out = [v + (d,) for v in out for d in range(p)]
    return tuple(out)


def _good_prime_witness(system: NormFormSystem, p: int, depth: int):
    """Immediate witness at odd p where every a_i is a p-adic unit.

    If some u mod p keeps every f_i(u) a unit, all symbols are symbols of
    two units at an odd place and equal +1.  Candidates run through the
    moment curve, which meets each hyperplane f_i = 0 at most s - 1
    times.
    """
    r, s = system.r, system.s
    if p == 2 or p <= r * (s - 1) or \
            any(valuation(a, p) != 0 for a in system.a):
        return None
    for t in range(r * (s - 1) + 1):
        u = tuple(pow(t, j, p**depth) if t else (1 if j == 0 else 0)
                  for j in range(s))
        if all(_evaluate(f, u) % p != 0 for f in system.forms):
            return LocalWitness(place=Place(p), u=u, precision=depth)
    return None


@dataclass(frozen=True)
class LocalReport:
    soluble: bool
    bad_places: Tuple[Place, ...]
    witnesses: Tuple[Tuple[Place, LocalWitness], ...]
    checked: Tuple[Place, ...]


def everywhere_locally_soluble(system: NormFormSystem, L: int = 100,
                               depth: Optional[int] = None) -> LocalReport:
    """Check the real place, 2, all odd p <= L, and all bad primes.

    Bad primes are those dividing some a_i or some coefficient of some
    f_i; beyond them and L, solubility is automatic for odd good primes.
    The per-prime depth defaults to the technical bound + 2, floored at
    4 so degenerate coefficient matrices keep their symbol margin.
    """
    primes = {2}
    for x in system.a:
        primes.update(q for q, _ in _factor_abs(x))
    for f in system.forms:
        for c in f:
            if c:
                primes.update(q for q, _ in _factor_abs(c))
    primes.update(q for q in range(3, L + 1) if is_prime(q))
    places = [REAL_PLACE] + [Place(q) for q in sorted(primes)]
    bad = []
    witnesses = []
    for place in places:
        if place.is_real:
            ok, wit = real_soluble(system)
        else:
            ok, wit = padic_soluble(system, place.p, depth)
        if ok:
            witnesses.append((place, wit))
        else:
            bad.append(place)
    return LocalReport(
        soluble=not bad,
        bad_places=tuple(bad),
        witnesses=tuple(witnesses),
        checked=tuple(places),
    )


def _factor_abs(x: int):
    from .exactnum import factorize
    if x in (0, 1, -1):
        return ()
    return factorize(abs(x))


# ---------------------------------------------------------------------------
# quaternary diagonal forms


def _is_local_square(x: Fraction, place: Place) -> bool:
    if place.is_real:
        return x > 0
    cls = squarefree_class(x)
    rep = cls.representative()
    p = place.p
    v = valuation(rep, p)
    if v % 2 != 0:
        return False
    unit = rep // p**v
    if p == 2:
        return unit % 8 == 1
    return legendre(unit % p, p) == 1


def diagonal_quadric_soluble(coeffs: Sequence, place: Place) -> bool:
    """Whether c_1 x_1^2 + c_2 x_2^2 + c_3 x_3^2 + c_4 x_4^2 = 0 has a
    nontrivial point over the completion at `place`.

    A rank-4 form is anisotropic exactly when its determinant is a local
    square and the product of the symbols (c_i, c_j) over i < j is the
    negative of (-1, -1).
    """
    c = [Fraction(x) for x in coeffs]
    if len(c) != 4 or any(x == 0 for x in c):
        raise LocalSolveError("four nonzero coefficients are required")
    det = c[0] * c[1] * c[2] * c[3]
    if not _is_local_square(det, place):
        return True
    eps = 1
    for i in range(4):
        for j in range(i + 1, 4):
            eps *= hilbert(c[i], c[j], place)
    return eps == hilbert(-1, -1, place)
