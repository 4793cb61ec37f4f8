"""Local invariants of vertical quaternion classes and the adelic pairing.

A class on a bundle with degenerate-fibre data (e_i, a_i) is an F_2
vector n in Ker(delta); at a fibre parameter t distinct from every e_i
and a place v its local invariant is

    inv_v(n, t) = sum_i n_i iota((a_i, t - e_i)_v)  in F_2,

with iota(+1) = 0 and iota(-1) = 1.  The all-ones vector represents a
class from the ground field (its residues cancel), and ground-field
classes pair to 0 with every adelic point by reciprocity, so the pairing
is well defined on the quotient modulo (1, ..., 1) and is evaluated on
the canonical representative with leading entry 0.

An adelic fibre point carries explicit parameters on a finite support.
Everywhere else it means the unramified default: an integral parameter
whose invariant vanishes.  Away from 2, infinity, the primes in the a_i
and in the denominators of the e_i, and the primes up to r, every
residue avoiding the e_i gives symbols with unit arguments and unit
first entry, which all vanish, so the default is automatic; at the
finitely many remaining places the pairing searches the residue cells
mod p^resolution for a vanishing one and reports an error naming the
place when none is found, since the declared support then omits a place
that can carry the invariant.

Constancy on cells is decided analytically, not by sampling: a symbol
(a, t - e)_p is determined by t mod p^K when the valuation j of the
known difference is below K and the unit part is pinned down far enough
for what the symbol actually reads (nothing beyond the valuation parity
for unit a prime to 2 with a = 1 mod 4; the unit mod 4 when a = 3 mod 4;
mod 8 when a is even), so cells too close to a pole are rejected rather
than mis-evaluated.  A scan cell that is not yet determined splits into
its p children until it is, so scans may list cells finer than the
stated resolution; the scan additionally re-verifies each reported cell
value by subdividing the cell once and comparing.

Evaluation at t = e_i and t = infinity is excluded throughout: the
chosen representatives have their polar locus there and no alternative
representative is provided.  Default searches cover integral residues
only; a place whose only trivializing parameters are non-integral ends
in the enlarge-the-support error.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Tuple

from .exactnum import (
    ExactNumError,
    Place,
    REAL_PLACE,
    factorize,
    hilbert,
    is_prime,
    valuation,
)
from .pencil import BrauerElement, ConicBundleData, brauer_group, delta

DEFAULT_RESOLUTION_ODD = 3
DEFAULT_RESOLUTION_TWO = 4


class BrauerManinError(ExactNumError):
    pass


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        raise BrauerManinError(
            "rational data must not pass through floats: %r" % x)
    return Fraction(x)


def _place_key(v: Place):
    return (0, 0) if v.is_real else (1, v.p)


def _bits(data: ConicBundleData, n) -> Tuple[int, ...]:
    bits = n.n if isinstance(n, BrauerElement) else tuple(int(b) for b in n)
    if len(bits) != data.r:
        raise BrauerManinError("coefficient vector length %d does not match "
                               "r = %d" % (len(bits), data.r))
    if any(b not in (0, 1) for b in bits):
        raise BrauerManinError("coefficients must be 0 or 1")
    return bits


def _canonical(bits: Tuple[int, ...]) -> Tuple[int, ...]:
    return BrauerElement(bits).canonical()


def _check_pole(data: ConicBundleData, t: Fraction):
    for i, e in enumerate(data.e):
        if t == e:
            raise BrauerManinError(
                "the invariant has a pole at t = e_%d = %s" % (i + 1, e))


def local_invariant(data: ConicBundleData, n, t, v: Place) -> int:
    """sum_i n_i iota((a_i, t - e_i)_v) in F_2, for t distinct from all e_i.

    Evaluates the vector as given; the pairing, which works modulo the
    all-ones class, canonicalizes before calling this."""
    bits = _bits(data, n)
    t = _as_fraction(t)
    _check_pole(data, t)
    total = 0
    for b, a, e in zip(bits, data.a, data.e):
        if b and hilbert(a.representative(), t - e, v) == -1:
            total ^= 1
    return total


@dataclass(frozen=True)
class LocalParameter:
    """A fibre parameter at one place.

    precision m on a finite place p means t is only trusted mod p^m; the
    pairing refuses the component unless every symbol it needs is
    already determined at that precision.  None means exact."""

    place: Place
    t: Fraction
    precision: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "t", _as_fraction(self.t))
        if self.precision is not None:
            if self.place.is_real:
                raise BrauerManinError(
                    "precision tags apply to finite places only")
            if int(self.precision) < 1:
                raise BrauerManinError("precision must be >= 1")
            object.__setattr__(self, "precision", int(self.precision))


@dataclass(frozen=True)
class AdelicFiberPoint:
    """Fibre parameters on a finite set of places, unramified elsewhere."""

    components: Tuple[LocalParameter, ...]

    def __post_init__(self):
        comps = tuple(sorted(self.components,
                             key=lambda c: _place_key(c.place)))
        object.__setattr__(self, "components", comps)
        places = [c.place for c in comps]
        if len(set(places)) != len(places):
            raise BrauerManinError("one component per place")

    @classmethod
    def from_pairs(cls, pairs) -> "AdelicFiberPoint":
        items = pairs.items() if hasattr(pairs, "items") else pairs
        return cls(tuple(LocalParameter(v, t) for v, t in items))

    @property
    def support(self) -> Tuple[Place, ...]:
        return tuple(c.place for c in self.components)

    def component(self, v: Place) -> Optional[LocalParameter]:
        for c in self.components:
            if c.place == v:
                return c
        return None


@dataclass(frozen=True)
class InvariantVector:
    """Local invariants of one class at one point, place by place."""

    entries: Tuple[Tuple[Place, int], ...]

    def total(self) -> int:
        s = 0
        for _, val in self.entries:
            s ^= val
        return s

    def nonzero_places(self) -> Tuple[Place, ...]:
        return tuple(v for v, val in self.entries if val)


def _cell_symbol(a_rep: int, e: Fraction, p: int, c: Fraction,
                 K: int) -> Optional[int]:
    """(a_rep, t - e)_p for every t = c mod p^K, or None if not constant.

    The difference d = c - e is known exactly; t - e = d + O(p^K), so the
    valuation j = val_p(d) is certain once j < K and the unit part is
    known mod p^(K - j).  The symbol reads the valuation parity always,
    the unit mod p for odd p, and at p = 2 the unit mod 4 or 8 depending
    on the square class of a."""
    d = c - e
    if d == 0:
        return None
    j = valuation(d, p)
    if j >= K:
        return None
    if p == 2:
        alpha = valuation(a_rep, 2) % 2
        u_a = a_rep // (2 ** valuation(a_rep, 2))
        eps_a = (u_a - 1) // 2 % 2
        need = 1
        if eps_a:
            need = 2
        if alpha:
            need = 3
        if K - j < need:
            return None
    return hilbert(a_rep, d, Place(p))


def _cell_invariant(data: ConicBundleData, bits: Tuple[int, ...], p: int,
                    c: Fraction, K: int) -> Optional[int]:
    total = 0
    for b, a, e in zip(bits, data.a, data.e):
        if not b:
            continue
        sym = _cell_symbol(a.representative(), e, p, c, K)
        if sym is None:
            return None
        if sym == -1:
            total ^= 1
    return total


def _interval_invariant(data: ConicBundleData, bits: Tuple[int, ...],
                        lo: Optional[Fraction],
                        hi: Optional[Fraction]) -> int:
    # (a, t - e) at the real place is -1 exactly when a < 0 and t < e; the
    # interval must lie on one side of every pole it reads
    total = 0
    for b, a, e in zip(bits, data.a, data.e):
        if not b or a.representative() > 0:
            continue
        if hi is not None and hi <= e:
            total ^= 1  # t < e throughout
        elif lo is None or lo < e:
            raise BrauerManinError(
                "interval (%s, %s) straddles the pole at %s" % (lo, hi, e))
    return total


def _default_resolution(p: int) -> int:
    return DEFAULT_RESOLUTION_TWO if p == 2 else DEFAULT_RESOLUTION_ODD


def _mandatory_places(data: ConicBundleData,
                      bits: Tuple[int, ...]) -> Tuple[Place, ...]:
    # places where an unramified integral residue is not automatically
    # invariant-free: 2 and infinity, primes carried by the a_i or by the
    # denominators of the e_i, and small primes whose residues the e_i
    # might exhaust
    odd = set()
    for b, a, e in zip(bits, data.a, data.e):
        if not b:
            continue
        odd.update(q for q in a.primes if q != 2)
        odd.update(q for q, _ in factorize(e.denominator) if q != 2)
    odd.update(q for q in range(3, data.r + 1) if is_prime(q))
    return (REAL_PLACE, Place(2)) + tuple(Place(q) for q in sorted(odd))


def _default_trivial_parameter(data: ConicBundleData, bits: Tuple[int, ...],
                               v: Place,
                               resolution: Optional[int]) -> Optional[Fraction]:
    """An unramified-default parameter at v with invariant 0, or None."""
    if v.is_real:
        return max(data.e) + 1  # every t - e_i > 0, all symbols +1
    p = v.p
    K = resolution if resolution is not None else _default_resolution(p)
    for c in range(p ** K):
        if _cell_invariant(data, bits, p, Fraction(c), K) == 0:
            return Fraction(c)
    return None


def _validate_components(data: ConicBundleData, bits: Tuple[int, ...],
                         point: AdelicFiberPoint):
    for comp in point.components:
        _check_pole(data, comp.t)
        if comp.precision is None:
            continue
        for i, b in enumerate(bits):
            if not b:
                continue
            sym = _cell_symbol(data.a[i].representative(), data.e[i],
                               comp.place.p, comp.t, comp.precision)
            if sym is None:
                raise BrauerManinError(
                    "precision %d at place %s does not determine the symbol "
                    "(a_%d, t - e_%d)" % (comp.precision, comp.place,
                                          i + 1, i + 1))


def invariant_vector(data: ConicBundleData, point: AdelicFiberPoint,
                     n) -> InvariantVector:
    """Per-place invariants of the canonical representative on the support."""
    bits = _canonical(_bits(data, n))
    _validate_components(data, bits, point)
    entries = tuple((comp.place,
                     local_invariant(data, bits, comp.t, comp.place))
                    for comp in point.components)
    return InvariantVector(entries)


def pairing(data: ConicBundleData, point: AdelicFiberPoint, n,
            resolution: Optional[int] = None) -> int:
    """Sum of local invariants of the class at the point, in F_2.

    The class must lie in Ker(delta); it is evaluated through its
    canonical representative, so the all-ones class pairs to 0.  Places
    outside the support contribute 0 through the unramified default; at
    the finitely many places where that is not automatic, a vanishing
    residue cell is searched for, and its absence is an error asking for
    an explicit component there."""
    raw = _bits(data, n)
    if not delta(data, raw).is_trivial:
        raise BrauerManinError(
            "the vector %s is not in Ker(delta); the pairing is defined "
            "on kernel classes only" % (raw,))
    bits = _canonical(raw)
    vec = invariant_vector(data, point, bits)
    support = set(point.support)
    for v in _mandatory_places(data, bits):
        if v in support:
            continue
        if _default_trivial_parameter(data, bits, v, resolution) is None:
            raise BrauerManinError(
                "the class can carry a nonzero invariant at %s outside the "
                "declared support; add a component there or raise the "
                "resolution" % v)
    return vec.total()


def global_point(data: ConicBundleData, t) -> AdelicFiberPoint:
    """The diagonal adelic point with the same rational t everywhere.

    The support collects every place where any (a_i, t - e_i) can be
    nontrivial, plus the places the pairing always wants declared, so
    pairing against any kernel class reproduces the full reciprocity sum."""
    t = _as_fraction(t)
    _check_pole(data, t)
    odd = set()
    for a, e in zip(data.a, data.e):
        odd.update(q for q in a.primes if q != 2)
        odd.update(q for q, _ in factorize(e.denominator) if q != 2)
        d = t - e
        for part in (abs(d.numerator), d.denominator):
            odd.update(q for q, _ in factorize(part) if q != 2)
    odd.update(q for q in range(3, data.r + 1) if is_prime(q))
    places = (REAL_PLACE, Place(2)) + tuple(Place(q) for q in sorted(odd))
    return AdelicFiberPoint(tuple(LocalParameter(v, t) for v in places))


def quotient_generators(data: ConicBundleData) -> Tuple[BrauerElement, ...]:
    """A basis of Ker(delta) modulo the all-ones class, canonical form."""
    rows = []  # (pivot index, reduced vector)
    for vec in brauer_group(data).kernel_basis:
        cur = list(_canonical(tuple(vec)))
        for piv, row in rows:
            if cur[piv]:
                cur = [x ^ y for x, y in zip(cur, row)]
        if any(cur):
            rows.append((cur.index(1), cur))
    expected = brauer_group(data).quotient_rank
    if len(rows) != expected:
        raise BrauerManinError(
            "internal rank mismatch: reduced %d generators, group rank %d"
            % (len(rows), expected))
    return tuple(BrauerElement(tuple(row)) for _, row in rows)


@dataclass(frozen=True)
class ScanCell:
    """One cell of the parameter space at one place, with the invariant of
    every generator on it."""

    place: Place
    label: str
    representative: Fraction
    values: Tuple[int, ...]


@dataclass(frozen=True)
class ScanTable:
    """Cell partition per supported place and the generator invariants.

    A combination picks one cell per place; it is allowed when the
    F_2 sums over the picked cells vanish for every generator, i.e. when
    a point with those local residues clears the obstruction."""

    generators: Tuple[Tuple[int, ...], ...]
    places: Tuple[Place, ...]
    resolution: Tuple[Tuple[Place, Optional[int]], ...]
    cells: Tuple[ScanCell, ...]

    def cells_at(self, v: Place) -> Tuple[ScanCell, ...]:
        return tuple(c for c in self.cells if c.place == v)

    def _masks(self):
        per_place = []
        for v in self.places:
            masks = []
            for cell in self.cells_at(v):
                m = 0
                for g, val in enumerate(cell.values):
                    m |= val << g
                masks.append(m)
            per_place.append(masks)
        return per_place

    def allowed_count(self) -> int:
        counts = {0: 1}
        for masks in self._masks():
            nxt: Dict[int, int] = {}
            for m in masks:
                for vec, cnt in counts.items():
                    key = vec ^ m
                    nxt[key] = nxt.get(key, 0) + cnt
            counts = nxt
        return counts.get(0, 0)

    def allowed_combinations(self, limit: Optional[int] = None):
        """Tuples of cell labels, one per place, pairing to 0 with every
        generator; at most `limit` of them in tabulation order."""
        out = []
        groups = [self.cells_at(v) for v in self.places]
        masks = self._masks()

        def walk(idx, acc, labels):
            if limit is not None and len(out) >= limit:
                return
            if idx == len(groups):
                if acc == 0:
                    out.append(tuple(labels))
                return
            for cell, m in zip(groups[idx], masks[idx]):
                walk(idx + 1, acc ^ m, labels + [cell.label])

        walk(0, 0, [])
        return tuple(out)

    def as_json_dict(self) -> dict:
        return {
            "generators": [list(g) for g in self.generators],
            "places": [str(v) for v in self.places],
            "resolution": {str(v): k for v, k in self.resolution
                           if k is not None},
            "cells": [
                {"place": str(c.place), "cell": c.label,
                 "representative": "%d/%d" % (c.representative.numerator,
                                              c.representative.denominator),
                 "values": list(c.values)}
                for c in self.cells
            ],
            "allowed_count": self.allowed_count(),
        }


_MAX_EXTRA_LEVELS = 4  # a 2-adic symbol never needs more than 3 digits


def _finite_cells(data: ConicBundleData, gens, p: int, K: int):
    # start from the residues mod p^K; a cell on which some symbol is not
    # yet forced (at p = 2 the unit part of t - e_i may need pinning mod 4
    # or 8) splits into its p children, at any starting resolution such
    # cells exist whenever val_2(c - e_i) reaches K - 1, so refinement is
    # part of the partition rather than an error
    queue = [(c, K) for c in range(p ** K)]
    found = []
    idx = 0
    while idx < len(queue):
        c, k = queue[idx]
        idx += 1
        m = p ** k
        cf = Fraction(c)
        if k == K and any(cf == e or valuation(cf - e, p) >= K
                          for e in data.e):
            continue  # the cell hugs a pole; not part of the partition
        values = []
        for g in gens:
            val = _cell_invariant(data, g.n, p, cf, k)
            if val is None:
                if k - K >= _MAX_EXTRA_LEVELS:
                    raise BrauerManinError(
                        "the cell %d mod %d^%d resisted %d refinements"
                        % (c, p, k, _MAX_EXTRA_LEVELS))
                queue.extend((c + j * m, k + 1) for j in range(p))
                values = None
                break
            # verify by subdividing once: every child must agree
            for j in range(p):
                child = _cell_invariant(data, g.n, p, cf + j * m, k + 1)
                if child != val:
                    raise BrauerManinError(
                        "local constancy failed under subdivision at the "
                        "cell %d mod %d^%d" % (c, p, k))
            values.append(val)
        if values is not None:
            found.append((k, c, tuple(values)))
    found.sort(key=lambda item: (item[0], item[1]))
    return [ScanCell(Place(p), "%d mod %d^%d" % (c, p, k), Fraction(c), vals)
            for k, c, vals in found]


def _real_cells(data: ConicBundleData, gens):
    es = sorted(data.e)
    bounds = [(None, es[0])]
    bounds += [(es[i], es[i + 1]) for i in range(len(es) - 1)]
    bounds.append((es[-1], None))
    cells = []
    for lo, hi in bounds:
        if lo is None:
            rep = hi - 1
        elif hi is None:
            rep = lo + 1
        else:
            rep = (lo + hi) / 2
        values = []
        for g in gens:
            val = _interval_invariant(data, g.n, lo, hi)
            # verify with a second interior sample
            second = lo + Fraction(3, 4) * (hi - lo) if lo is not None \
                and hi is not None else rep + (1 if lo is not None else -1)
            if local_invariant(data, g.n, second, REAL_PLACE) != val:
                raise BrauerManinError(
                    "interval (%s, %s) is not invariant-constant" % (lo, hi))
            values.append(val)
        label = "(%s, %s)" % ("-oo" if lo is None else lo,
                              "+oo" if hi is None else hi)
        cells.append(ScanCell(REAL_PLACE, label, rep, tuple(values)))
    return cells


def obstruction_scan(data: ConicBundleData, support: Iterable[Place],
                     resolution: Optional[int] = None) -> ScanTable:
    """Partition the parameter space at each supported place into cells of
    constant invariant and tabulate every generator on every cell.

    Finite cells start as residues mod p^resolution away from the poles
    and refine as needed; real cells are the pole-cut open intervals."""
    places = tuple(sorted(set(support), key=_place_key))
    if resolution is not None and int(resolution) < 1:
        raise BrauerManinError("resolution must be >= 1")
    gens = quotient_generators(data)
    cells = []
    res = []
    for v in places:
        if v.is_real:
            cells.extend(_real_cells(data, gens))
            res.append((v, None))
        else:
            K = resolution if resolution is not None \
                else _default_resolution(v.p)
            cells.extend(_finite_cells(data, gens, v.p, K))
            res.append((v, K))
    return ScanTable(generators=tuple(g.n for g in gens), places=places,
                     resolution=tuple(res), cells=tuple(cells))
