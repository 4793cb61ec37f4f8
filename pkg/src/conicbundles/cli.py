"""Batch front end: declarative problem files in, JSON reports out.

PROBLEM FILES (the compatibility contract)
    Line-oriented text.  Blank lines and lines starting with `#` are
    ignored; every other line is `key = value` and keys may not repeat.
    Rationals are written `num/den` (a bare integer is allowed), list
    entries are separated by commas or whitespace, and rows of a table
    by `;`.  Every file names its `kind`:

    kind = pencil                 degenerate-fibre data of a conic bundle
        e = 0, 1, 2, 3            pairwise distinct rationals
        a = 5, 5, 5, 5            fibre square classes (integers)
        lam = 1, 1, 1, 1          optional torsor scalings (nonzero)
        support = oo, 2, 5        places for the `bm` command (`oo` real)
    kind = system                 simultaneous norm equations
                                  x_i^2 - a_i y_i^2 = f_i(u)
        a = -1, 2                 nonzero nonsquare integers, one per row
        forms = 1 0; 0 1          integer linear forms, one row per a_i
        clearing = 1, 1           optional denominator-clearing constants
    kind = count-job              the `system` keys, plus
        M = 1                     congruence modulus for u = uM mod M
        uM = 0, 0                 residue vector mod M
        uInf = 1, 1               real direction spanning the search cone
        epsilon = 1/2             cone half-width
        B_schedule = 4, 9, 100    heights to count at (each C^2, C=1 mod M)
    kind = dp2                    three split conics, each written as
        f = 1 : 0, 1              leading coefficient : roots
        g = 1 : 2, 3
        h = 1 : 4, 5
    kind = dp1                    a pencil of quartics fixed by
        e = 0, 1, 2, 3, 4, 5, 6, 7   eight pairwise distinct rationals
        c1 = 1                    nonzero scaling constants
        c2 = 1
    kind = quadric-intersection   fibre product of two-fibre bundles
        e = 0, 1, 2, 3            2n pairwise distinct rationals
        a = 5, 5                  n square classes
        c = 1, 1                  n nonzero constants

    Option keys, all optional and overridden by the same-named flags:
    `prime_cutoff`, `L`, `depth`, `resolution`, `threads`, `seed`.

COMMANDS
    validate   build the kind's objects, report the structural checks
    brauer     pencil: vertical classes, kernel basis, quotient rank
    local      system, count-job, pencil (via its torsor system) or
               quadric-intersection (per factor): solubility over the
               reals and all relevant p-adic fields, with witnesses
    count      count-job: exact N(B) and the box measure per scheduled B
    predict    count-job: N(B) against the product of local densities
    bm         pencil: adelic obstruction scan over the named support
    dp2        dp2: induced fibre data, ramification quartic, minimality
    dp1        dp1: pencil condition report and minimality
    selftest   no file: the built-in oracle suite

REPORTS
    JSON with sorted keys on stdout, or at --out PATH.  Exact numbers are
    serialized as integers or `num/den` strings, never floats; the only
    floats are `{"value": v, "precision_bits": b}` pairs and the
    segregated `timings` field.  Reports are byte-identical across runs
    with the same inputs, options, and version, except for `timings`.

        {"schema": 1, "version": ..., "command": ...,
         "inputs": {"file": {...}, "options": {...}},
         "results": {...}, "timings": {"total_seconds": ...}}

EXIT CODES
    0 success, 1 computational failure (including a failed selftest),
    2 input error (bad flags, unparsable file, invalid payload).
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from fractions import Fraction
from typing import Dict, Optional, Tuple

from . import __version__
from .exactnum import (ExactNumError, Place, REAL_PLACE, hilbert,
                       hilbert_support, is_prime, valuation)
from .pencil import (ConicBundleData, NormFormSystem, brauer_group,
                     quadric_intersection_system, torsor_system, validate)
from .localsolve import everywhere_locally_soluble
from .quadform import BinaryForm, rho
from .counting import (CountJob, DEFAULT_PRIME_CUTOFF, G, beta_p,
                       enumerate_N, predict_and_compare, region_measure)
from .brauermanin import obstruction_scan, quotient_generators
from .delpezzo import (DP1Data, DP2Data, Quartic, SplitPolynomial,
                       bundle_from_fgh, dp1_condition, dp1_minimality,
                       dp2_minimality, dp2_ramification_quartic,
                       quartic_discriminant, _pderiv, _resultant)

SCHEMA = 1


class CLIInputError(ExactNumError):
    """A problem the caller can fix: flags, file syntax, payload."""


# ---------------------------------------------------------------- parsing

_KINDS = ("pencil", "system", "count-job", "dp2", "dp1",
          "quadric-intersection")

_OPTION_KEYS = frozenset(
    ("prime_cutoff", "L", "depth", "resolution", "threads", "seed"))

_PAYLOAD_KEYS = {
    "pencil": frozenset(("e", "a", "lam", "support")),
    "system": frozenset(("a", "forms", "clearing")),
    "count-job": frozenset(("a", "forms", "clearing", "M", "uM", "uInf",
                            "epsilon", "B_schedule")),
    "dp2": frozenset(("f", "g", "h")),
    "dp1": frozenset(("e", "c1", "c2")),
    "quadric-intersection": frozenset(("e", "a", "c")),
}

_REQUIRED_KEYS = {
    "pencil": ("e", "a"),
    "system": ("a", "forms"),
    "count-job": ("a", "forms", "B_schedule"),
    "dp2": ("f", "g", "h"),
    "dp1": ("e", "c1", "c2"),
    "quadric-intersection": ("e", "a", "c"),
}


class ProblemFile:
    """Parsed `key = value` lines: the kind, the raw values, the lines."""

    def __init__(self, kind: str, fields: Dict[str, str],
                 lines: Dict[str, int]):
        self.kind = kind
        self.fields = fields
        self.lines = lines

    def raw(self, key: str) -> Optional[str]:
        return self.fields.get(key)

    def where(self, key: str) -> str:
        return "line %d" % self.lines[key]


def parse_problem(text: str) -> ProblemFile:
    fields: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    for no, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not eq or not key:
            raise CLIInputError(
                "line %d: expected `key = value`, got %r" % (no, raw_line))
        if not value:
            raise CLIInputError("line %d: key %r has no value" % (no, key))
        if key in fields:
            raise CLIInputError(
                "line %d: key %r already set on line %d"
                % (no, key, lines[key]))
        fields[key] = value
        lines[key] = no
    if "kind" not in fields:
        raise CLIInputError("the file never sets `kind`")
    kind = fields.pop("kind")
    if kind not in _KINDS:
        raise CLIInputError(
            "line %d: unknown kind %r; expected one of %s"
            % (lines["kind"], kind, ", ".join(_KINDS)))
    allowed = _PAYLOAD_KEYS[kind] | _OPTION_KEYS
    for key in fields:
        if key not in allowed:
            raise CLIInputError(
                "line %d: key %r is not used by kind %r"
                % (lines[key], key, kind))
    for key in _REQUIRED_KEYS[kind]:
        if key not in fields:
            raise CLIInputError("kind %r requires the key %r" % (kind, key))
    return ProblemFile(kind, fields, lines)


def load_problem(path: str) -> ProblemFile:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise CLIInputError("cannot read %s: %s" % (path, exc))
    return parse_problem(text)


def _tokens(value: str):
    return [t for t in value.replace(",", " ").split() if t]


def _fraction_token(tok: str, where: str) -> Fraction:
    num, slash, den = tok.partition("/")
    try:
        if slash:
            return Fraction(int(num), int(den))
        return Fraction(int(num))
    except (ValueError, ZeroDivisionError):
        raise CLIInputError("%s: %r is not a rational num/den" % (where, tok))


def _int_token(tok: str, where: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise CLIInputError("%s: %r is not an integer" % (where, tok))


def _fraction_list(problem: ProblemFile, key: str) -> Tuple[Fraction, ...]:
    where = "%s (%s)" % (problem.where(key), key)
    return tuple(_fraction_token(t, where) for t in _tokens(problem.raw(key)))


def _int_list(problem: ProblemFile, key: str) -> Tuple[int, ...]:
    where = "%s (%s)" % (problem.where(key), key)
    return tuple(_int_token(t, where) for t in _tokens(problem.raw(key)))


def _int_rows(problem: ProblemFile, key: str) -> Tuple[Tuple[int, ...], ...]:
    where = "%s (%s)" % (problem.where(key), key)
    rows = []
    for chunk in problem.raw(key).split(";"):
        row = tuple(_int_token(t, where) for t in _tokens(chunk))
        if not row:
            raise CLIInputError("%s: empty row" % where)
        rows.append(row)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise CLIInputError("%s: rows must share a length" % where)
    return tuple(rows)


def _split_poly(problem: ProblemFile, key: str) -> SplitPolynomial:
    where = "%s (%s)" % (problem.where(key), key)
    value = problem.raw(key)
    head, colon, tail = value.partition(":")
    if not colon:
        raise CLIInputError(
            "%s: expected `leading : roots`, got %r" % (where, value))
    lead = _fraction_token(head.strip(), where)
    roots = tuple(_fraction_token(t, where) for t in _tokens(tail))
    try:
        return SplitPolynomial(lead, roots)
    except ExactNumError as exc:
        raise CLIInputError("%s: %s" % (where, exc))


def _place_list(problem: ProblemFile, key: str) -> Tuple[Place, ...]:
    where = "%s (%s)" % (problem.where(key), key)
    places = []
    for tok in _tokens(problem.raw(key)):
        if tok == "oo":
            places.append(REAL_PLACE)
        else:
            p = _int_token(tok, where)
            if not is_prime(p):
                raise CLIInputError("%s: %r is not a prime or `oo`"
                                    % (where, tok))
            places.append(Place(p))
    return tuple(places)


# ---------------------------------------------------------------- options

_OPTION_SPECS = {
    # key: (parse, minimum, default)
    "prime_cutoff": (int, 2, DEFAULT_PRIME_CUTOFF),
    "L": (int, 2, 100),
    "depth": (int, 1, None),
    "resolution": (int, 1, None),
    "threads": (int, 1, 1),
    "seed": (int, 0, 0),
}


def effective_options(problem: Optional[ProblemFile],
                      args: argparse.Namespace) -> Dict[str, object]:
    """File options overridden by flags, with defaults filled in."""
    out: Dict[str, object] = {}
    for key, (parse, minimum, default) in _OPTION_SPECS.items():
        value = default
        if problem is not None and problem.raw(key) is not None:
            where = "%s (%s)" % (problem.where(key), key)
            value = parse(_int_token(problem.raw(key), where))
        flag = getattr(args, key, None)
        if flag is not None:
            value = parse(flag)
        if value is not None and value < minimum:
            raise CLIInputError("option %s must be >= %d, got %r"
                                % (key, minimum, value))
        out[key] = value
    if getattr(args, "quick", False):
        out["quick"] = True
    return out


# ------------------------------------------------------------- builders

def _built(fn, *args, **kwargs):
    """Payload construction errors are the caller's to fix: exit code 2."""
    try:
        return fn(*args, **kwargs)
    except CLIInputError:
        raise
    except ExactNumError as exc:
        raise CLIInputError(str(exc))


def _build_pencil(problem: ProblemFile) -> ConicBundleData:
    lam = _fraction_list(problem, "lam") if problem.raw("lam") else None
    return _built(ConicBundleData, e=_fraction_list(problem, "e"),
                  a=_int_list(problem, "a"), lam=lam)


def _build_system(problem: ProblemFile) -> NormFormSystem:
    forms = _int_rows(problem, "forms")
    clearing = _int_list(problem, "clearing") \
        if problem.raw("clearing") else ()
    return _built(NormFormSystem, r=len(forms), s=len(forms[0]),
                  a=_int_list(problem, "a"), forms=forms,
                  clearing=clearing)


def _build_job(problem: ProblemFile) -> CountJob:
    system = _build_system(problem)
    where = problem.where
    M = 1
    if problem.raw("M"):
        M = _int_token(problem.raw("M"), "%s (M)" % where("M"))
    uM = _int_list(problem, "uM") if problem.raw("uM") else ()
    uInf = _fraction_list(problem, "uInf") if problem.raw("uInf") \
        else (Fraction(1),) * system.s
    epsilon = Fraction(1, 2)
    if problem.raw("epsilon"):
        epsilon = _fraction_token(problem.raw("epsilon"),
                                  "%s (epsilon)" % where("epsilon"))
    return _built(CountJob, system=system, M=M, uM=uM, uInf=uInf,
                  epsilon=epsilon,
                  B_schedule=_int_list(problem, "B_schedule"))


def _build_dp2(problem: ProblemFile) -> DP2Data:
    return _built(DP2Data, f=_split_poly(problem, "f"),
                  g=_split_poly(problem, "g"), h=_split_poly(problem, "h"))


def _build_dp1(problem: ProblemFile) -> DP1Data:
    c1 = _fraction_token(problem.raw("c1"), "%s (c1)" % problem.where("c1"))
    c2 = _fraction_token(problem.raw("c2"), "%s (c2)" % problem.where("c2"))
    return _built(DP1Data, e=_fraction_list(problem, "e"), c1=c1, c2=c2)


def _build_quadric_intersection(problem: ProblemFile):
    return _built(quadric_intersection_system,
                  e=_fraction_list(problem, "e"),
                  a=_int_list(problem, "a"),
                  c=_fraction_list(problem, "c"))


# ------------------------------------------------------------ serializing

def _frac(x) -> str:
    f = Fraction(x)
    return "%d/%d" % (f.numerator, f.denominator)


def _frac_list(xs):
    return [_frac(x) for x in xs]


def _tagged(x) -> dict:
    return {"value": float(x), "precision_bits": 53}


def _bundle_dict(data: ConicBundleData) -> dict:
    out = {"e": _frac_list(data.e), "a": [str(c) for c in data.a]}
    if data.lam is not None:
        out["lam"] = _frac_list(data.lam)
    return out


def _system_dict(system: NormFormSystem) -> dict:
    return {"r": system.r, "s": system.s, "a": list(system.a),
            "forms": [list(f) for f in system.forms],
            "clearing": list(system.clearing)}


def _job_dict(job: CountJob) -> dict:
    return {"system": _system_dict(job.system), "M": job.M,
            "uM": list(job.uM), "uInf": _frac_list(job.uInf),
            "epsilon": _frac(job.epsilon),
            "B_schedule": list(job.B_schedule)}


def _independence_dict(report) -> dict:
    return {"independent": report.independent,
            "classes": {label: str(cls) for label, cls in report.classes},
            "certificate": None if report.certificate is None
            else list(report.certificate)}


def _local_report_dict(report) -> dict:
    witnesses = []
    for place, wit in report.witnesses:
        entry = {"place": str(place),
                 "u": [x if isinstance(x, int) else _frac(x)
                       for x in wit.u]}
        if wit.precision is not None:
            entry["precision"] = wit.precision
        witnesses.append(entry)
    return {"soluble": report.soluble,
            "bad_places": [str(v) for v in report.bad_places],
            "checked": [str(v) for v in report.checked],
            "witnesses": witnesses}


# -------------------------------------------------------------- commands

def _cmd_validate(problem: ProblemFile, options: dict) -> dict:
    kind = problem.kind
    out: dict = {"kind": kind, "valid": True}
    if kind == "pencil":
        data = _build_pencil(problem)
        report = validate(data)
        out["pencil"] = _bundle_dict(data)
        out["e_distinct"] = report.e_distinct
        out["a_nontrivial"] = report.a_nontrivial
        out["faddeev_holds"] = report.faddeev_holds
        out["faddeev_class"] = str(report.faddeev_class)
        out["warnings"] = list(report.warnings)
    elif kind == "system":
        out["system"] = _system_dict(_build_system(problem))
    elif kind == "count-job":
        out["job"] = _job_dict(_build_job(problem))
    elif kind == "dp2":
        data = _build_dp2(problem)
        out["coefficient_determinant"] = _frac(data.coefficient_determinant())
    elif kind == "dp1":
        data = _build_dp1(problem)
        out["p"] = _frac_list(data.p_coefficients())
        out["q"] = _frac_list(data.q_coefficients())
    else:
        data = _build_quadric_intersection(problem)
        report = validate(data.combined)
        out["n"] = data.n
        out["combined"] = _bundle_dict(data.combined)
        out["factors"] = [_bundle_dict(f) for f in data.factors]
        out["shared_points"] = _frac_list(data.shared_points)
        out["faddeev_holds"] = report.faddeev_holds
        out["warnings"] = list(report.warnings)
    return out


def _want_kind(problem: ProblemFile, command: str, kinds) -> None:
    if problem.kind not in kinds:
        raise CLIInputError(
            "command %r needs kind %s, got %r"
            % (command, " or ".join(repr(k) for k in kinds), problem.kind))


def _cmd_brauer(problem: ProblemFile, options: dict) -> dict:
    _want_kind(problem, "brauer", ("pencil",))
    data = _build_pencil(problem)
    description = brauer_group(data)
    generators = quotient_generators(data)
    return {"pencil": _bundle_dict(data),
            "faddeev_class": str(data.faddeev_class()),
            "kernel_dim": description.kernel_dim(),
            "kernel_basis": [list(n) for n in description.kernel_basis],
            "quotient_rank": description.quotient_rank,
            "weak_approximation": description.weak_approximation,
            "generators": [list(g.n) for g in generators]}


def _cmd_local(problem: ProblemFile, options: dict) -> dict:
    _want_kind(problem, "local",
               ("system", "count-job", "pencil", "quadric-intersection"))
    L = options["L"]
    depth = options["depth"]
    if problem.kind == "system":
        system = _build_system(problem)
        return {"system": _system_dict(system),
                "report": _local_report_dict(
                    everywhere_locally_soluble(system, L=L, depth=depth))}
    if problem.kind == "count-job":
        system = _build_job(problem).system
        return {"system": _system_dict(system),
                "report": _local_report_dict(
                    everywhere_locally_soluble(system, L=L, depth=depth))}
    if problem.kind == "pencil":
        data = _build_pencil(problem)
        system = torsor_system(data)
        return {"pencil": _bundle_dict(data),
                "system": _system_dict(system),
                "report": _local_report_dict(
                    everywhere_locally_soluble(system, L=L, depth=depth))}
    data = _build_quadric_intersection(problem)
    factors = []
    for bundle in data.factors:
        system = torsor_system(bundle)
        factors.append({"pencil": _bundle_dict(bundle),
                        "system": _system_dict(system),
                        "report": _local_report_dict(
                            everywhere_locally_soluble(system, L=L,
                                                       depth=depth))})
    return {"n": data.n, "factors": factors,
            "soluble_factors": all(f["report"]["soluble"] for f in factors)}


def _cmd_count(problem: ProblemFile, options: dict) -> dict:
    _want_kind(problem, "count", ("count-job",))
    job = _build_job(problem)
    rows = []
    for B in job.B_schedule:
        N = enumerate_N(job, B, threads=options["threads"])
        measure = region_measure(job, B)
        row = {"B": B, "N": N, "box_measure": _frac(measure)}
        if measure:
            row["N_per_measure"] = _tagged(Fraction(N) / measure)
        rows.append(row)
    return {"job": _job_dict(job), "per_B": rows}


def _cmd_predict(problem: ProblemFile, options: dict) -> dict:
    _want_kind(problem, "predict", ("count-job",))
    job = _build_job(problem)
    reports = predict_and_compare(job, prime_cutoff=options["prime_cutoff"],
                                  threads=options["threads"])
    return {"job": _job_dict(job),
            "prime_cutoff": options["prime_cutoff"],
            "per_B": [r.as_json_dict() for r in reports]}


def _cmd_bm(problem: ProblemFile, options: dict) -> dict:
    _want_kind(problem, "bm", ("pencil",))
    data = _build_pencil(problem)
    if problem.raw("support") is None:
        raise CLIInputError(
            "the `bm` command needs a `support` key listing places, "
            "e.g. `support = oo, 2, 5`")
    support = _place_list(problem, "support")
    table = obstruction_scan(data, support, resolution=options["resolution"])
    return {"pencil": _bundle_dict(data), "scan": table.as_json_dict()}


def _cmd_dp2(problem: ProblemFile, options: dict) -> dict:
    _want_kind(problem, "dp2", ("dp2",))
    data = _build_dp2(problem)
    bundle = bundle_from_fgh(data.f, data.g, data.h)
    quartic = dp2_ramification_quartic(data)
    minimality = dp2_minimality(data)
    return {
        "bundle": {
            "data": _bundle_dict(bundle.data),
            "degrees": list(bundle.degrees),
            "parity": bundle.parity,
            "infinity_form": _frac_list(bundle.infinity_form),
            "smooth_at_infinity": bundle.smooth_at_infinity,
        },
        "ramification_quartic": {
            "x4": _frac(quartic.x4), "y4": _frac(quartic.y4),
            "z4": _frac(quartic.z4), "x2y2": _frac(quartic.x2y2),
            "x2z2": _frac(quartic.x2z2), "y2z2": _frac(quartic.y2z2),
            "smooth": quartic.smooth,
            "singular_reasons": list(quartic.singular_reasons),
        },
        "minimality": _independence_dict(minimality),
    }


def _cmd_dp1(problem: ProblemFile, options: dict) -> dict:
    _want_kind(problem, "dp1", ("dp1",))
    data = _build_dp1(problem)
    condition = dp1_condition(data)
    minimality = dp1_minimality(data)
    contracted = minimality.contracted_bundle
    return {
        "pencil_members": {"p": _frac_list(data.p_coefficients()),
                           "q": _frac_list(data.q_coefficients())},
        "condition": {
            "holds": condition.holds,
            "full_degree": condition.full_degree,
            "discriminant_squarefree": condition.discriminant_squarefree,
            "double_roots_simple": condition.double_roots_simple,
            "failed": list(condition.failed),
            "discriminant": _frac_list(condition.discriminant),
        },
        "minimality": dict(
            _independence_dict(minimality),
            fibre_classes=[str(cls) for cls in minimality.fibre_classes],
            contracted_bundle=None if contracted is None
            else _bundle_dict(contracted),
        ),
    }


_COMMANDS = {
    "validate": _cmd_validate,
    "brauer": _cmd_brauer,
    "local": _cmd_local,
    "count": _cmd_count,
    "predict": _cmd_predict,
    "bm": _cmd_bm,
    "dp2": _cmd_dp2,
    "dp1": _cmd_dp1,
}


# -------------------------------------------------------------- selftest

# Frozen expected values the oracle suite checks against recomputation.
# Tests inject faults by replacing entries here; the suite must notice.
_SELFTEST_PINS = (
    ("hilbert", (-1, -1, "oo"), -1),
    ("hilbert", (-1, -1, "2"), -1),
    ("hilbert", (2, 5, "5"), -1),
    ("rho_sum", (-1, 9), 81),
    ("disc", (1,), -256),
    ("disc", (2,), -2048),
    ("disc", (-3,), 6912),
)


def _pins(kind: str):
    return [(args, expect) for k, args, expect in _SELFTEST_PINS
            if k == kind]


def _suite_reciprocity(rng: random.Random, quick: bool):
    cases = failures = 0
    detail = []
    for (a, b, v), expect in _pins("hilbert"):
        cases += 1
        place = REAL_PLACE if v == "oo" else Place(int(v))
        got = hilbert(a, b, place)
        if got != expect:
            failures += 1
            detail.append("hilbert(%d, %d, %s) = %d, pinned %d"
                          % (a, b, v, got, expect))
    trials = 60 if quick else 300
    for _ in range(trials):
        cases += 1
        a = b = 0
        while a == 0:
            a = rng.randint(-1000, 1000)
        while b == 0:
            b = rng.randint(-1000, 1000)
        product = 1
        for place in hilbert_support(a, b):
            product *= hilbert(a, b, place)
        if product != 1:
            failures += 1
            detail.append("reciprocity product %d for (%d, %d)"
                          % (product, a, b))
    return cases, failures, detail


def _suite_crt(rng: random.Random, quick: bool):
    cases = failures = 0
    detail = []
    for (a, q), expect in _pins("rho_sum"):
        cases += 1
        form = BinaryForm(a)
        total = sum(rho(form, q, A) for A in range(q))
        if total != expect:
            failures += 1
            detail.append("sum of rho(x^2 - %d y^2; A mod %d) = %d, "
                          "pinned %d" % (a, q, total, expect))
    trials = 15 if quick else 60
    nonsquares = (-1, -2, -5, 2, 3, 5)
    prime_powers = (2, 4, 8, 3, 9, 5, 25, 7, 11, 13)
    for _ in range(trials):
        cases += 1
        form = BinaryForm(rng.choice(nonsquares))
        q1 = rng.choice(prime_powers)
        q2 = rng.choice(prime_powers)
        while _share_prime(q1, q2):
            q2 = rng.choice(prime_powers)
        A = rng.randrange(q1 * q2)
        left = rho(form, q1 * q2, A)
        right = rho(form, q1, A % q1) * rho(form, q2, A % q2)
        if left != right:
            failures += 1
            detail.append("rho(a=%d; %d, %d) = %d but the coprime parts "
                          "give %d" % (form.a, q1 * q2, A, left, right))
    return cases, failures, detail


def _share_prime(m: int, n: int) -> bool:
    while n:
        m, n = n, m % n
    return m != 1


_SELFTEST_JOBS = (
    ("one norm form", CountJob(
        system=NormFormSystem(r=1, s=2, a=(-1,), forms=((1, 0),)),
        uInf=(1, 1), B_schedule=())),
    ("two norm forms", CountJob(
        system=NormFormSystem(r=2, s=2, a=(-1, 2), forms=((1, 0), (0, 1))),
        uInf=(1, 1), B_schedule=())),
)


def _suite_stabilization(rng: random.Random, quick: bool):
    cases = failures = 0
    detail = []
    primes = (2, 3) if quick else (2, 3, 5)
    for name, job in _SELFTEST_JOBS:
        s, r = job.system.s, job.system.r
        for p in primes:
            cases += 1
            bound = max(valuation(4 * a, p) for a in job.system.a)
            k0 = max(1, bound + 1)
            lower = G(job, p, k0)
            upper = G(job, p, k0 + 1)
            if upper != p ** (s + r) * lower:
                failures += 1
                detail.append("%s at p = %d: G(%d^%d) = %d is not %d^%d "
                              "times G(%d^%d) = %d"
                              % (name, p, p, k0 + 1, upper, p, s + r,
                                 p, k0, lower))
                continue
            expected = Fraction(lower, p ** ((s + r) * k0))
            got = beta_p(job, p)
            if got != expected:
                failures += 1
                detail.append("%s at p = %d: beta_p = %s but the scaled "
                              "count is %s" % (name, p, got, expected))
    for p in (3, 5, 7, 11) if not quick else (3, 5):
        cases += 1
        got = beta_p(_SELFTEST_JOBS[0][1], p)
        if got != 1:
            failures += 1
            detail.append("good odd p = %d should give beta_p = 1, got %s"
                          % (p, got))
    return cases, failures, detail


def _suite_discriminant(rng: random.Random, quick: bool):
    cases = failures = 0
    detail = []
    for (a,), expect in _pins("disc"):
        cases += 1
        got = quartic_discriminant(Quartic((a, 0, 0, 0, 1)))
        if got != expect:
            failures += 1
            detail.append("disc(t^4 + %d) = %s, pinned %d"
                          % (a, got, expect))
    trials = 40 if quick else 200
    for _ in range(trials):
        cases += 1
        coeffs = [Fraction(rng.randint(-9, 9)) for _ in range(4)]
        lead = Fraction(0)
        while lead == 0:
            lead = Fraction(rng.randint(-9, 9))
        coeffs.append(lead)
        got = quartic_discriminant(Quartic(tuple(coeffs)))
        via_resultant = -_resultant(coeffs, _pderiv(coeffs)) / lead
        if got != via_resultant:
            failures += 1
            detail.append("disc%r = %s disagrees with the resultant "
                          "route %s" % (tuple(coeffs), got, via_resultant))
    return cases, failures, detail


_SELFTEST_SUITES = (
    ("reciprocity", _suite_reciprocity),
    ("crt", _suite_crt),
    ("stabilization", _suite_stabilization),
    ("discriminant", _suite_discriminant),
)


def run_selftest(quick: bool = False, seed: int = 0) -> dict:
    suites = []
    total_cases = total_failures = 0
    for name, suite in _SELFTEST_SUITES:
        rng = random.Random("%d:%s" % (seed, name))
        cases, failures, detail = suite(rng, quick)
        total_cases += cases
        total_failures += failures
        entry = {"name": name, "cases": cases, "failures": failures}
        if detail:
            entry["detail"] = detail[:5]
        suites.append(entry)
    return {"quick": quick, "seed": seed, "suites": suites,
            "total_cases": total_cases, "total_failures": total_failures,
            "passed": total_failures == 0}


# ------------------------------------------------------------------ main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conicbundles",
        description="Exact arithmetic of conic bundles, batch interface.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, *, file=True, flags=()):
        p = sub.add_parser(name, help=help_text)
        if file:
            p.add_argument("file", help="problem file (key = value lines)")
        p.add_argument("--out", help="write the JSON report to this path")
        for flag in flags:
            if flag == "quick":
                p.add_argument("--quick", action="store_true",
                               help="reduced case counts")
            else:
                p.add_argument("--" + flag.replace("_", "-"), type=int,
                               dest=flag)
        return p

    add("validate", "build the objects and report the structural checks")
    add("brauer", "vertical Brauer classes of a pencil")
    add("local", "real and p-adic solubility with witnesses",
        flags=("L", "depth"))
    add("count", "exact point counts over the B schedule",
        flags=("threads",))
    add("predict", "compare counts with the product of local densities",
        flags=("threads", "prime_cutoff"))
    add("bm", "adelic obstruction scan over the declared support",
        flags=("resolution",))
    add("dp2", "ramification quartic and minimality of a dp2 instance")
    add("dp1", "pencil condition and minimality of a dp1 instance")
    add("selftest", "run the built-in oracle suite", file=False,
        flags=("quick", "seed"))
    return parser


def _emit(report: dict, out: Optional[str]) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _report(command: str, inputs: dict, results: dict, started: float) -> dict:
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "inputs": inputs,
        "results": results,
        "timings": {"total_seconds": round(time.perf_counter() - started, 6)},
    }


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    started = time.perf_counter()
    try:
        if args.command == "selftest":
            options = effective_options(None, args)
            results = run_selftest(quick=bool(options.get("quick")),
                                   seed=options["seed"])
            inputs = {"options": {"quick": bool(options.get("quick")),
                                  "seed": options["seed"]}}
            _emit(_report("selftest", inputs, results, started), args.out)
            return 0 if results["passed"] else 1
        problem = load_problem(args.file)
        options = effective_options(problem, args)
    except CLIInputError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2
    inputs = {"file": dict(sorted(problem.fields.items())),
              "kind": problem.kind,
              "options": {k: v for k, v in sorted(options.items())
                          if v is not None}}
    try:
        results = _COMMANDS[args.command](problem, options)
    except CLIInputError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2
    except ExactNumError as exc:
        print("computational failure: %s" % exc, file=sys.stderr)
        return 1
    _emit(_report(args.command, inputs, results, started), args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
