"""Term-by-term evaluation of the H2 pairing of the Hall term.

The pairing ``int Lap curl(j x b) . Lap b dx`` splits into two families of
trilinear integrals (``I`` and ``II``), each split further into labelled
pieces.  Every label here is evaluated independently with exact quadrature,
so relations between labels can be checked at roundoff level.

Term notation
-------------
A term is ``(coefficient, (factor, factor, factor))``.  A factor such as
``"kl2:b3"`` reads ``d_k d_l d_2 b_3``; the letters ``k`` and ``l`` are summed
over ``1..dim`` and digits are fixed axes.  ``":j1"`` is ``j_1`` itself.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fields import VectorField, curl_coeffs, divergence, ik3, split_hv, vec_to_physical
from .nonlinear import _cross, _Padded, hall_coeffs
from .spectral import Grid, padded_size, sobolev_seminorm

__all__ = [
    "TermLedger",
    "Check",
    "CancellationReport",
    "TERMS",
    "pairing_h2",
    "pairing_h2_forms",
    "pairing_h1",
    "build_ledger",
    "check_cancellations",
    "check_master_identity",
    "check_25d_vi_cancellations",
    "check_25d_single_terms",
    "check_ledger_consistency",
    "bound_functional_25d",
    "bound_functional_3d",
    "tensor_magnitude",
    "field_hash",
    "NotSolenoidalError",
]

TOL_TRILINEAR = 1e-12
TOL_FOURTH = 1e-11
DIVFREE_TOL = 1e-10
# Fraction of the Cauchy-Schwarz size of the pairing added to check scales.
# Every label is cubic in b with six derivatives, like that size, so labels
# that vanish up to roundoff are not compared against a roundoff-sized scale.
PAIRING_FLOOR = 1e-3

Factor = str
Term = tuple[float, tuple[Factor, Factor, Factor]]


# (coefficient, middle factor, last factor) with the axis digit leading.
_I13 = [(-2, "1:b3", "2:b3"), (2, "1:b3", "3:b2"), (2, "3:b1", "2:b3"), (-2, "3:b1", "3:b2"),
        (2, "2:b3", "1:b3"), (-2, "2:b3", "3:b1"), (-2, "3:b2", "1:b3"), (2, "3:b2", "3:b1")]
_I25 = [(-2, "1:b2", "2:b3"), (2, "1:b2", "3:b2"), (2, "2:b1", "2:b3"), (-2, "2:b1", "3:b2"),
        (2, "2:b3", "1:b2"), (-2, "2:b3", "2:b1"), (-2, "3:b2", "1:b2"), (2, "3:b2", "2:b1")]
_I46 = [(-2, "1:b2", "1:b3"), (2, "1:b2", "3:b1"), (2, "2:b1", "1:b3"), (-2, "2:b1", "3:b1"),
        (2, "1:b3", "1:b2"), (-2, "1:b3", "2:b1"), (-2, "3:b1", "1:b2"), (2, "3:b1", "2:b1")]


TERMS: dict[str, list[Term]] = {
    "I1": [(2, ("k:j2", "k:b3", "ll:j1"))],
    "I2": [(-2, ("k:j3", "k:b2", "ll:j1"))],
    "I3": [(-2, ("k:j1", "k:b3", "ll:j2"))],
    "I4": [(2, ("k:j3", "k:b1", "ll:j2"))],
    "I5": [(2, ("k:j1", "k:b2", "ll:j3"))],
    "I6": [(-2, ("k:j2", "k:b1", "ll:j3"))],
    "II1": [(1, (":j2", "kk:b3", "ll:j1"))],
    "II2": [(-1, (":j3", "kk:b2", "ll:j1"))],
    "II3": [(-1, (":j1", "kk:b3", "ll:j2"))],
    "II4": [(1, (":j3", "kk:b1", "ll:j2"))],
    "II5": [(1, (":j1", "kk:b2", "ll:j3"))],
    "II6": [(-1, (":j2", "kk:b1", "ll:j3"))],
}


# Each I_{g,l} is 2 sum_{k,l} int d_k B d_k d_m X d_l^2 d_n Y with B the
# group's base component; II_{g,l} is sum_{k,l} int d_k^2 d_l B d_m X d_l d_n Y
# with coefficient -1/2 of the matching I row.
for _g, _base, _rows in (("1,3", "b3", _I13), ("2,5", "b2", _I25), ("4,6", "b1", _I46)):
    for _i, (_c, _mid, _last) in enumerate(_rows, start=1):
        _ma, _mf = _mid.split(":")
        _la, _lf = _last.split(":")
        TERMS[f"I_{{{_g},{_i}}}"] = [(float(_c), (f"k:{_base}", f"k{_ma}:{_mf}", f"ll{_la}:{_lf}"))]
        TERMS[f"II_{{{_g},{_i}}}"] = [(-0.5 * _c, (f"kkl:{_base}", f"{_ma}:{_mf}", f"l{_la}:{_lf}"))]

# 2.5-D pieces of the two remaining II groups, one term per (k, l) pair.
_V = [(-1, "111:b2", "2:b3", "11:b2"), (1, "111:b2", "2:b3", "12:b1"),
      (-1, "112:b2", "2:b3", "21:b2"), (1, "112:b2", "2:b3", "22:b1"),
      (-1, "221:b2", "2:b3", "11:b2"), (1, "221:b2", "2:b3", "12:b1"),
      (-1, "222:b2", "2:b3", "21:b2"), (1, "222:b2", "2:b3", "22:b1")]
for _i, (_c, _a, _m, _z) in enumerate(_V, start=1):
    TERMS[f"V{_i}"] = [(float(_c), (_a, _m, _z))]
    TERMS[f"VI{_i}"] = [(float(_c), (_a.replace("b2", "b1"), "1:b3", _z))]

SURVIVORS = {"1,3": (2, 3, 4, 6, 7, 8), "2,5": (1, 3, 4, 5, 6, 8), "4,6": (1, 2, 3, 5, 6, 7)}
PAIRS = {"1,3": (1, 5), "2,5": (2, 7), "4,6": (4, 8)}
GROUP_SOURCES = {"1,3": (1, 3), "2,5": (2, 5), "4,6": (4, 6)}


def ledger_labels(dim: int) -> list[str]:
    out = ["I", "II"] + [f"I{i}" for i in range(1, 7)] + [f"II{i}" for i in range(1, 7)]
    for fam in ("I", "II"):
        for g in ("1,3", "2,5", "4,6"):
            out += [f"{fam}_{{{g},{i}}}" for i in range(1, 9)]
    if dim == 2:
        out += [f"V{i}" for i in range(1, 9)] + [f"VI{i}" for i in range(1, 9)]
    return out


class NotSolenoidalError(ValueError):
    """Raised when an identity that needs a divergence-free field gets another one."""


def field_hash(b: VectorField) -> str:
    h = hashlib.sha256()
    h.update(str(b.grid.n).encode())
    h.update(np.ascontiguousarray(b.coeffs).tobytes())
    return h.hexdigest()[:16]


class _Derivs:
    """Cache of physical-space derivatives of ``b`` and ``j`` on one padded grid."""

    def __init__(self, b: VectorField, factor: int = 3):
        self.grid = b.grid
        self.b = b.coeffs
        self.j = curl_coeffs(b.coeffs, b.grid)
        band = np.array(b.band())
        self.shape = tuple(padded_size(int(factor * k), 0) if k > 0 else 4 for k in band)
        self.volume = b.grid.volume
        self.ik = ik3(b.grid)
        self._cache: dict[tuple, np.ndarray] = {}

    def get(self, axes: tuple[int, ...], name: str) -> np.ndarray | None:
        """Samples of ``d_axes name``; None when an x3-derivative kills it on a 2-D grid."""
        if self.grid.dim == 2 and 3 in axes:
            return None
        key = (tuple(sorted(axes)), name)
        if key not in self._cache:
            src = self.b if name[0] == "b" else self.j
            c = src[int(name[1]) - 1]
            for a in axes:
                c = c * self.ik[a - 1]
            self._cache[key] = vec_to_physical(np.asarray(c)[None], self.grid, self.shape)[0]
        return self._cache[key]

    def integral(self, arrays: Iterable[np.ndarray | None]) -> float:
        prod = None
        for a in arrays:
            if a is None:
                return 0.0
            prod = a if prod is None else prod * a
        return self.volume * float(np.mean(prod))


def _parse(factor: str) -> tuple[str, str]:
    ders, name = factor.split(":")
    return ders, name


def evaluate_term(d: _Derivs, terms: Sequence[Term]) -> float:
    """Sum over ``k, l`` of the trilinear integrals making up one label."""
    dim = d.grid.dim
    total = 0.0
    for coef, factors in terms:
        parsed = [_parse(f) for f in factors]
        symbols = sorted({ch for ders, _ in parsed for ch in ders if ch in "kl"})
        acc = 0.0
        for values in itertools.product(range(1, dim + 1), repeat=len(symbols)):
            env = dict(zip(symbols, values))
            arrays = []
            for ders, name in parsed:
                axes = tuple(env[ch] if ch in env else int(ch) for ch in ders)
                arrays.append(d.get(axes, name))
            acc += d.integral(arrays)
        total += coef * acc
    return total


def _direct_I(d: _Derivs) -> float:
    """``2 sum_{k,l} int (d_k j x d_k b) . d_l^2 j`` assembled as a cross product."""
    return 2.0 * _cross_sum(d, "k", "k", "ll")


def _direct_II(d: _Derivs) -> float:
    """``sum_{k,l} int (j x d_k^2 b) . d_l^2 j`` assembled as a cross product."""
    return _cross_sum(d, "", "kk", "ll")


def _cross_sum(d: _Derivs, dj: str, db: str, dl: str) -> float:
    dim = d.grid.dim
    total = 0.0
    for k, l in itertools.product(range(1, dim + 1), repeat=2):
        env = {"k": k, "l": l}

        def arr(ders, name):
            a = d.get(tuple(env[c] for c in ders), name)
            return np.zeros(d.shape) if a is None else a

        J = [arr(dj, f"j{i}") for i in (1, 2, 3)]
        B = [arr(db, f"b{i}") for i in (1, 2, 3)]
        L = [arr(dl, f"j{i}") for i in (1, 2, 3)]
        cx = (J[1] * B[2] - J[2] * B[1], J[2] * B[0] - J[0] * B[2], J[0] * B[1] - J[1] * B[0])
        total += d.volume * float(np.mean(cx[0] * L[0] + cx[1] * L[1] + cx[2] * L[2]))
    return total


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    expected: float
    abs_residual: float
    scale: float
    tol: float
    passed: bool

    @classmethod
    def make(cls, name: str, lhs: float, expected: float, parts: Iterable[float], tol: float) -> "Check":
        parts = [abs(float(p)) for p in parts] + [abs(lhs), abs(expected)]
        scale = max(parts) if parts else 0.0
        res = abs(lhs - expected)
        return cls(name, float(lhs), float(expected), res, scale, tol,
                   bool(np.isfinite(res) and res <= tol * scale))

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "expected": self.expected,
                "abs_residual": self.abs_residual, "scale": self.scale, "tol": self.tol,
                "pass": self.passed}


@dataclass(frozen=True)
class CancellationReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.passed), None)

    def __add__(self, other: "CancellationReport") -> "CancellationReport":
        return CancellationReport(self.checks + other.checks)

    def __iter__(self):
        return iter(self.checks)

    def __len__(self) -> int:
        return len(self.checks)


@dataclass(frozen=True)
class TermLedger:
    """Label to value map for one field, plus provenance."""

    entries: dict[str, float]
    dim: int
    field_hash: str
    pairing: float = math.nan
    pairing_ref: float = 0.0
    consistency: CancellationReport = field(default_factory=lambda: CancellationReport(()))

    def __getitem__(self, label: str) -> float:
        return self.entries[label]

    def get(self, label: str, default: float = 0.0) -> float:
        return self.entries.get(label, default)

    def labels(self) -> list[str]:
        return list(self.entries)


def pairing_h2_forms(b: VectorField) -> tuple[float, float, float]:
    """Two spectral evaluations of ``int Lap curl(j x b) . Lap b`` and a size reference.

    The first pairs ``Lap curl(j x b)`` with ``Lap b``; the second pairs
    ``Lap (j x b)`` with ``Lap j``.  Both use the exact coefficients of
    ``j x b`` up to the band of ``b``.  The reference is
    ``||j x b||_{H2} ||j||_{H2}``, which bounds either form.
    """
    g = b.grid
    j = curl_coeffs(b.coeffs, g)
    pad = _Padded(g, [j, b.coeffs])
    jxb = pad.back(_cross(pad.phys(j), pad.phys(b.coeffs)))
    k4 = g.k2 ** 2
    h = curl_coeffs(jxb, g)
    first = g.volume * float(np.sum(k4 * np.real(np.conj(h) * b.coeffs)))
    second = g.volume * float(np.sum(k4 * np.real(np.conj(jxb) * j)))
    ref = g.volume * math.sqrt(float(np.sum(k4 * np.abs(jxb) ** 2)) * float(np.sum(k4 * np.abs(j) ** 2)))
    return first, second, ref


def pairing_h2(b: VectorField) -> float:
    """``int Lap curl(j x b) . Lap b dx``; the two forms must agree to 1e-11."""
    first, second, ref = pairing_h2_forms(b)
    if abs(first - second) > 1e-11 * max(abs(first), abs(second), ref * PAIRING_FLOOR):
        raise ArithmeticError(f"pairing forms disagree: {first!r} vs {second!r}")
    return second


def build_ledger(b: VectorField, fault: Mapping[str, float] | None = None) -> TermLedger:
    """Evaluate every label for ``b``.

    Parameters
    ----------
    b:
        Any band-limited field; solenoidality is not needed here.
    fault:
        Test hook.  Each listed label's value is multiplied by the given
        factor after evaluation, e.g. ``{"I_{1,3,5}": -1.0}``.
    """
    d = _Derivs(b)
    entries: dict[str, float] = {}
    for label in ledger_labels(b.grid.dim):
        if label == "I":
            entries[label] = _direct_I(d)
        elif label == "II":
            entries[label] = _direct_II(d)
        else:
            entries[label] = evaluate_term(d, TERMS[label])
    if fault:
        for label, factor in fault.items():
            if label not in entries:
                raise KeyError(f"unknown ledger label {label!r}")
            entries[label] = entries[label] * float(factor)
    first, second, ref = pairing_h2_forms(b)
    led = TermLedger(entries, b.grid.dim, field_hash(b), second, ref)
    return TermLedger(entries, b.grid.dim, led.field_hash, second, ref,
                      check_ledger_consistency(led, first))


def _fam(led: TermLedger, fam: str, group: str, ls: Iterable[int]) -> list[float]:
    return [led[f"{fam}_{{{group},{i}}}"] for i in ls]


def check_ledger_consistency(led: TermLedger, pairing_first_form: float | None = None) -> CancellationReport:
    """Additivity and regrouping relations between labels of one ledger."""
    floor = PAIRING_FLOOR * led.pairing_ref
    checks = []
    I_parts = [led[f"I{i}"] for i in range(1, 7)]
    II_parts = [led[f"II{i}"] for i in range(1, 7)]
    checks.append(Check.make("sum I_i = I", sum(I_parts), led["I"], I_parts + [floor], TOL_FOURTH))
    checks.append(Check.make("sum II_i = II", sum(II_parts), led["II"], II_parts + [floor], TOL_FOURTH))
    checks.append(Check.make("I + II = pairing", led["I"] + led["II"], led.pairing,
                             [led["I"], led["II"], floor], TOL_FOURTH))
    if pairing_first_form is not None:
        checks.append(Check.make("pairing forms agree", pairing_first_form, led.pairing, [floor], TOL_FOURTH))
    for fam, parts in (("I", I_parts), ("II", II_parts)):
        for g, (a, c) in GROUP_SOURCES.items():
            fam_vals = _fam(led, fam, g, range(1, 9))
            lhs = parts[a - 1] + parts[c - 1]
            checks.append(Check.make(f"{fam}{a} + {fam}{c} = sum_l {fam}_{{{g},l}}", sum(fam_vals), lhs,
                                     fam_vals + [parts[a - 1], parts[c - 1], floor], TOL_FOURTH))
    return CancellationReport(tuple(checks))


def check_cancellations(ledger: TermLedger, b: VectorField | None = None) -> CancellationReport:
    """The six pair cancellations; no divergence condition is needed."""
    floor = PAIRING_FLOOR * ledger.pairing_ref
    checks = []
    for fam in ("I", "II"):
        for g, (p, q) in PAIRS.items():
            a, c = _fam(ledger, fam, g, (p, q))
            checks.append(Check.make(f"{fam}_{{{g},{p}}} + {fam}_{{{g},{q}}} = 0", a + c, 0.0, [a, c, floor],
                                     TOL_TRILINEAR))
    return CancellationReport(tuple(checks))


def surviving_sum(ledger: TermLedger) -> tuple[float, list[float]]:
    parts = []
    for fam in ("I", "II"):
        for g, ls in SURVIVORS.items():
            parts += _fam(ledger, fam, g, ls)
    return float(sum(parts)), parts


def check_master_identity(b: VectorField, ledger: TermLedger | None = None) -> CancellationReport:
    """Pairing equals the sum over the surviving labels of all six families."""
    ledger = build_ledger(b) if ledger is None else ledger
    total, parts = surviving_sum(ledger)
    parts.append(PAIRING_FLOOR * ledger.pairing_ref)
    return CancellationReport((Check.make("pairing = surviving-term sum", ledger.pairing, total,
                                          parts, TOL_FOURTH),))


def relative_divergence(b: VectorField) -> float:
    g = b.hs(1.0)
    return 0.0 if g == 0 else sobolev_seminorm(divergence(b), 0.0) / g


def _rhs_integrals(d: _Derivs) -> dict[str, float]:
    def I(*fs):
        return d.integral([d.get(tuple(int(c) for c in ders), name) for ders, name in (_parse(f) for f in fs)])

    return {
        "V2+V5": I("22:b2", "12:b3", "11:b2"),
        "V4+V7": -I("22:b1", "12:b3", "12:b2"),
        "VI2+VI5": I("11:b2", "12:b3", "12:b1"),
        "VI4+VI7": I("12:b2", "12:b3", "22:b1"),
    }


def check_25d_vi_cancellations(b: VectorField, ledger: TermLedger | None = None,
                               require_divfree: bool = True) -> CancellationReport:
    """The four combined V/VI rewrites (they use ``d1 b1 = -d2 b2``) and the V/VI split.

    Raises
    ------
    NotSolenoidalError
        If ``require_divfree`` and the horizontal divergence is not at roundoff.
    """
    if b.grid.dim != 2:
        raise ValueError("the V/VI identities are defined for x3-independent fields on 2-D grids")
    if require_divfree and relative_divergence(b) > DIVFREE_TOL:
        raise NotSolenoidalError(f"field is not divergence-free (relative {relative_divergence(b):.2e})")
    ledger = build_ledger(b) if ledger is None else ledger
    d = _Derivs(b)
    rhs = _rhs_integrals(d)
    checks = []
    for key, value in rhs.items():
        fam = "VI" if key.startswith("VI") else "V"
        a, c = (int(s.replace("VI", "").replace("V", "")) for s in key.split("+"))
        pa, pc = ledger[f"{fam}{a}"], ledger[f"{fam}{c}"]
        checks.append(Check.make(f"{key} rewrite", pa + pc, value, [pa, pc, value], TOL_TRILINEAR))
    II_parts = _fam(ledger, "II", "2,5", (5, 6)) + _fam(ledger, "II", "4,6", (5, 6))
    vs = [ledger[f"V{i}"] for i in range(1, 9)] + [ledger[f"VI{i}"] for i in range(1, 9)]
    checks.append(Check.make("sum_{l=5,6} II_{2,5,l} + II_{4,6,l} = sum V + sum VI", sum(II_parts), sum(vs),
                             II_parts + vs, TOL_FOURTH))
    return CancellationReport(tuple(checks))


def check_25d_single_terms(b: VectorField, ledger: TermLedger | None = None) -> CancellationReport:
    """Single-label rewrites ``X = c/2 int d1 d2 b3 (second derivative)^2``.

    ``V1, V3, VI6, VI8`` only need integration by parts; ``V6, V8, VI1, VI3``
    also use ``d1 b1 = -d2 b2`` and are skipped for non-solenoidal input.
    """
    if b.grid.dim != 2:
        raise ValueError("defined for 2-D grids only")
    ledger = build_ledger(b) if ledger is None else ledger
    d = _Derivs(b)
    w = d.get((1, 2), "b3")

    def half(ders: str, name: str) -> float:
        a = d.get(tuple(int(c) for c in ders), name)
        return 0.5 * d.integral([w, a, a])

    table = [("V1", 1, "11", "b2", False), ("V3", 1, "12", "b2", False),
             ("VI6", -1, "12", "b1", False), ("VI8", -1, "22", "b1", False),
             ("V6", 1, "12", "b1", True), ("V8", 1, "22", "b1", True),
             ("VI1", -1, "11", "b2", True), ("VI3", -1, "12", "b2", True)]
    solenoidal = relative_divergence(b) <= DIVFREE_TOL
    checks = []
    for label, sign, ders, name, needs_div in table:
        if needs_div and not solenoidal:
            continue
        val = sign * half(ders, name)
        checks.append(Check.make(f"{label} single-term rewrite", ledger[label], val, [ledger[label], val],
                                 TOL_TRILINEAR))
    return CancellationReport(tuple(checks))


def _deriv_tensor(b: VectorField, comps: Sequence[int], order: int, shape) -> np.ndarray:
    """All ordered ``order``-th derivatives of the listed components, stacked."""
    g = b.grid
    ik = ik3(g)[: g.dim]
    out = []
    for i in comps:
        for axes in itertools.product(range(g.dim), repeat=order):
            c = b.coeffs[i]
            for a in axes:
                c = c * ik[a]
            out.append(np.asarray(c))
    return vec_to_physical(np.stack(out), g, shape)


def tensor_magnitude(b: VectorField, comps: Sequence[int], order: int, shape=None) -> np.ndarray:
    """Pointwise Frobenius norm of the ``order``-th derivative tensor of chosen components."""
    shape = shape or _bound_shape(b)
    if not comps:
        return np.zeros(shape)
    t = _deriv_tensor(b, comps, order, shape)
    return np.sqrt(np.sum(t * t, axis=0))


def _bound_shape(b: VectorField) -> tuple[int, ...]:
    band = b.band()
    return tuple(padded_size(6 * max(k, 1), 0) for k in band)


H = (0, 1)
VERT = (2,)
ALL = (0, 1, 2)


def bound_functional_25d(b: VectorField) -> float:
    """``int (|D b_h| |D^3 b_h| + |D^2 b_h|^2) |D^2 b_v| dx`` by quadrature."""
    s = _bound_shape(b)
    m = lambda comps, k: tensor_magnitude(b, comps, k, s)  # noqa: E731
    f = (m(H, 1) * m(H, 3) + m(H, 2) ** 2) * m(VERT, 2)
    return b.grid.volume * float(np.mean(f))


def bound_functional_3d(b: VectorField, variant: str = "eq58") -> float:
    """Right-hand functionals for the 3-D pairing bounds.

    The variant names are fixed identifiers of the two functionals.

    ``variant="eq58"``: ``int |D^2 b_h| (|D b| |D^3 b| + |D^2 b_v| |D^2 b|)``.
    ``variant="eq100"``: ``int |D b| |D^2 b_h| |D^3 b_h| + |D^2 b_v| (|D^2 b_h|^2 + |D b_h| |D^3 b_h|)``.
    """
    s = _bound_shape(b)
    m = lambda comps, k: tensor_magnitude(b, comps, k, s)  # noqa: E731
    if variant == "eq58":
        f = m(H, 2) * (m(ALL, 1) * m(ALL, 3) + m(VERT, 2) * m(ALL, 2))
    elif variant == "eq100":
        h1, h2, h3 = m(H, 1), m(H, 2), m(H, 3)
        f = m(ALL, 1) * h2 * h3 + m(VERT, 2) * (h2 ** 2 + h1 * h3)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return b.grid.volume * float(np.mean(f))


def pairing_h1(b: VectorField) -> tuple[float, float]:
    """``(int curl(j x b) . Lap b dx, int |D b| |D b_h| |D^2 b_h| dx)``."""
    g = b.grid
    h = hall_coeffs(b.coeffs, g)
    value = -g.volume * float(np.sum(g.k2 * np.real(np.conj(h) * b.coeffs)))
    s = _bound_shape(b)
    bound = g.volume * float(np.mean(tensor_magnitude(b, ALL, 1, s) * tensor_magnitude(b, H, 1, s)
                                     * tensor_magnitude(b, H, 2, s)))
    return value, bound
