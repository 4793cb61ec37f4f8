"""Exact arithmetic substrate: places, square classes, Hilbert symbols.

Everything in this module is plain integer arithmetic.  Rationals are
`fractions.Fraction` values (normalized, positive denominator), square
classes are elements of Q*/Q*^2 stored as a sign bit plus the set of primes
with odd exponent, and Hilbert symbols (a, b)_v in {+1, -1} are computed
from the classical valuation/unit-part formulas: at an odd prime p, with
a = p^alpha * u and b = p^beta * w,

    (a, b)_p = (-1)^(alpha*beta*(p-1)/2) * (u|p)^beta * (w|p)^alpha,

and at p = 2, with odd parts u, w,

    (a, b)_2 = (-1)^(eps(u)eps(w) + alpha*omega(w) + beta*omega(u)),

where eps(u) = (u-1)/2 and omega(u) = (u^2-1)/8 mod 2.  At the real place
the symbol is -1 exactly when both arguments are negative.  The formulas
are anchored in the test suite by brute-force residue searches (mod p^3 at
odd p, mod 2^6 at p = 2), not trusted as transcriptions.

Factorization is trial division with a configurable bound plus a
deterministic Miller-Rabin primality check; inputs at desk scale are small.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Union

Rational = Fraction
IntLike = Union[int, Fraction]

TRIAL_DIVISION_BOUND = 1_000_000


class ExactNumError(ValueError):
    pass


class FactorizationError(ExactNumError):
    """An integer resisted factorization at desk scale."""


# Deterministic for n < 3,317,044,064,679,887,385,961,981.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@lru_cache(maxsize=None)
def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for base in _MR_BASES:
        x = pow(base, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=None)
def factorize(n: int, bound: int = TRIAL_DIVISION_BOUND) -> tuple:
    """Prime factorization of n >= 1 as a tuple of (p, exponent) pairs.

    Trial division up to `bound`; a surviving cofactor must be prime or a
    prime square, otherwise FactorizationError.
    """
    if n < 1:
        raise ExactNumError("factorize expects a positive integer, got %r" % (n,))
    out = []
    for p in (2, 3):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    q = 5
    while q * q <= n and q <= bound:
        for p in (q, q + 2):
            if n % p == 0:
                e = 0
                while n % p == 0:
                    n //= p
                    e += 1
                out.append((p, e))
        q += 6
    if n > 1:
        if is_prime(n):
            out.append((n, 1))
        else:
            s = _isqrt_exact(n)
            if s is not None and is_prime(s):
                out.append((s, 2))
            else:
                raise FactorizationError(
                    "cofactor %d has no prime factor below %d" % (n, bound))
    out.sort()
    return tuple(out)


def _isqrt_exact(n: int) -> Optional[int]:
    import math
    s = math.isqrt(n)
    return s if s * s == n else None


def valuation(x: IntLike, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    if not is_prime(p):
        raise ExactNumError("valuation needs a prime, got %r" % (p,))
    x = Fraction(x)
    if x == 0:
        raise ExactNumError("valuation of 0 is undefined")
    v = 0
    n = x.numerator
    while n % p == 0:
        n //= p
        v += 1
    d = x.denominator
    while d % p == 0:
        d //= p
        v -= 1
    return v


@dataclass(frozen=True)
class Place:
    """A place of Q: the real place (p is None) or a finite prime p."""

    p: Optional[int] = None

    def __post_init__(self):
        if self.p is not None and not is_prime(self.p):
            raise ExactNumError("finite place needs a prime, got %r" % (self.p,))

    @property
    def is_real(self) -> bool:
        return self.p is None

    @property
    def is_finite(self) -> bool:
        return self.p is not None

    def __str__(self):
        return "oo" if self.p is None else str(self.p)


REAL_PLACE = Place(None)


@dataclass(frozen=True)
class SquareClass:
    """An element of Q*/Q*^2: sign bit and the primes with odd exponent."""

    sign: int = 0
    primes: frozenset = frozenset()

    def __post_init__(self):
        if self.sign not in (0, 1):
            raise ExactNumError("sign bit must be 0 or 1")
        for q in self.primes:
            if not is_prime(q):
                raise ExactNumError("square class support must be prime, got %r" % (q,))

    def __mul__(self, other: "SquareClass") -> "SquareClass":
        if not isinstance(other, SquareClass):
            return NotImplemented
        return SquareClass(self.sign ^ other.sign,
                           self.primes.symmetric_difference(other.primes))

    @property
    def is_trivial(self) -> bool:
        return self.sign == 0 and not self.primes

    def representative(self) -> int:
        """The squarefree integer representing this class."""
        n = -1 if self.sign else 1
        for q in self.primes:
            n *= q
        return n

    def __str__(self):
        return str(self.representative())


TRIVIAL_CLASS = SquareClass()


def squarefree_class(x: IntLike, bound: int = TRIAL_DIVISION_BOUND) -> SquareClass:
    """Image of a nonzero rational in Q*/Q*^2."""
    x = Fraction(x)
    if x == 0:
        raise ExactNumError("0 has no square class")
    sign = 1 if x < 0 else 0
    primes = set()
    for n in (abs(x.numerator), x.denominator):
        for p, e in factorize(n, bound):
            if e % 2:
                primes.symmetric_difference_update({p})
    return SquareClass(sign, frozenset(primes))


def squarefree_part(x: IntLike, bound: int = TRIAL_DIVISION_BOUND) -> int:
    return squarefree_class(x, bound).representative()


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a|p) for odd prime p, via Euler's criterion."""
    if p == 2 or not is_prime(p):
        raise ExactNumError("legendre needs an odd prime, got %r" % (p,))
    a = a % p
    if a == 0:
        return 0
    t = pow(a, (p - 1) // 2, p)
    return 1 if t == 1 else -1


def hilbert(a: IntLike, b: IntLike, place: Place) -> int:
    """Hilbert symbol (a, b)_v: +1 iff z^2 = a x^2 + b y^2 has a nontrivial
    Q_v-point.  Depends only on the square classes of a and b."""
    a = Fraction(a)
    b = Fraction(b)
    if a == 0 or b == 0:
        raise ExactNumError("hilbert symbol needs nonzero arguments")
    if place.is_real:
        return -1 if (a < 0 and b < 0) else 1
    p = place.p
    A = squarefree_class(a).representative()
    B = squarefree_class(b).representative()
    if p == 2:
        alpha = valuation(A, 2)
        beta = valuation(B, 2)
        u = A >> alpha
        w = B >> beta
        eps_u = (u - 1) // 2 % 2
        eps_w = (w - 1) // 2 % 2
        om_u = (u * u - 1) // 8 % 2
        om_w = (w * w - 1) // 8 % 2
        e = eps_u * eps_w + alpha * om_w + beta * om_u
        return -1 if e % 2 else 1
    alpha = valuation(A, p)
    beta = valuation(B, p)
    u = A // p**alpha
    w = B // p**beta
    s = 1
    if alpha * beta % 2 and p % 4 == 3:
        s = -s
    if beta % 2:
        s *= legendre(u, p)
    if alpha % 2:
        s *= legendre(w, p)
    return s


def hilbert_support(a: IntLike, b: IntLike) -> list:
    """Places where (a, b)_v can be nontrivial: the real place, 2, and odd
    primes dividing the squarefree parts."""
    out = [REAL_PLACE, Place(2)]
    for x in (a, b):
        for q in squarefree_class(x).primes:
            if q != 2:
                pl = Place(q)
                if pl not in out:
                    out.append(pl)
    return out


def _class_masks(classes: Sequence[SquareClass]):
    keys = sorted({q for c in classes for q in c.primes})
    pos = {q: i + 1 for i, q in enumerate(keys)}
    masks = []
    for c in classes:
        m = c.sign
        for q in c.primes:
            m |= 1 << pos[q]
        masks.append(m)
    return masks


def f2_independent(classes: Sequence[SquareClass]):
    """Whether the classes are independent in the F2-vector space Q*/Q*^2.

    Returns (True, None) or (False, certificate) where the certificate is a
    nonempty tuple of indices whose classes multiply to the trivial class,
    of minimal support, ties broken by lowest index order.
    """
    classes = list(classes)
    masks = _class_masks(classes)
    pivots = {}  # pivot bit position -> (mask, combo over input indices)
    dep_combo = None
    for idx, m in enumerate(masks):
        cur, combo = m, 1 << idx
        while cur:
            row = pivots.get(cur.bit_length())
            if row is None:
                break
            cur ^= row[0]
            combo ^= row[1]
        if cur == 0:
            dep_combo = combo
            break
        pivots[cur.bit_length()] = (cur, combo)
    if dep_combo is None:
        return True, None
    # minimal-support certificate: smallest subset, then lexicographically
    # first index tuple, found by direct enumeration at desk scale
    n = len(classes)
    if n <= 22:
        search = list(range(n))
    else:
        search = sorted(i for i in range(n) if (dep_combo >> i) & 1)
    for size in range(1, len(search) + 1):
        for subset in itertools.combinations(search, size):
            acc = 0
            for i in subset:
                acc ^= masks[i]
            if acc == 0:
                return False, tuple(subset)
    raise AssertionError("elimination found a dependency but enumeration did not")
