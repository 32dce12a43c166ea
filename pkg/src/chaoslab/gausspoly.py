"""Polynomials in independent standard Gaussian coordinates ``N_1, N_2, ...``.

A :class:`GaussPoly` stores a sparse map ``Monomial -> coefficient`` together
with a basis tag.  In the ``monomial`` basis a monomial ``((i, k), ...)`` means
``prod N_i**k``; in the ``wick`` basis it means ``prod H_k(N_i)`` with ``H_k``
the probabilists' Hermite polynomials.  Coordinates are 1-based.

The Wick form makes Gaussian expectations and chaos projections trivial:
``E[prod H_{k_i}(N_i) prod H_{l_i}(N_i)] = prod k_i! [k = l]``.
"""
from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

MONOMIAL = "monomial"
WICK = "wick"
_BASES = (MONOMIAL, WICK)

DEFAULT_TERM_BUDGET = 10**7

# relative cancellation floor used when an accumulated coefficient is the sum
# of several floating contributions
_CANCEL_RTOL = 64 * np.finfo(float).eps

Monomial = tuple  # tuple of (index, exponent) pairs, sorted by index, exponents >= 1


class SymbolicBudgetExceeded(RuntimeError):
    """Raised when an exact expansion would exceed the term budget.

    Callers are expected to fall back to Monte Carlo estimation.
    """

    fallback = "monte-carlo"

    def __init__(self, needed: int, budget: int):
        super().__init__(
            f"symbolic expansion needs ~{needed} intermediate terms "
            f"(budget {budget}); fallback-to-Monte-Carlo"
        )
        self.needed = needed
        self.budget = budget


def make_monomial(exponents: Mapping[int, int] | Iterable[tuple[int, int]]) -> Monomial:
    items = exponents.items() if isinstance(exponents, Mapping) else exponents
    out = {}
    for i, k in items:
        i, k = int(i), int(k)
        if i < 1:
            raise ValueError(f"coordinate indices are 1-based, got {i}")
        if k < 0:
            raise ValueError(f"negative exponent {k} for N{i}")
        if k:
            out[i] = out.get(i, 0) + k
    return tuple(sorted(out.items()))


def monomial_degree(mono: Monomial) -> int:
    return sum(k for _, k in mono)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for i, k in b:
        d[i] = d.get(i, 0) + k
    return tuple(sorted(d.items()))


def _sort_key(mono: Monomial):
    # graded lexicographic by coordinate index
    return (monomial_degree(mono), mono)


# --------------------------------------------------------------------------
# Hermite polynomials
# --------------------------------------------------------------------------

def hermite_eval(k: int, x):
    """Probabilists' Hermite polynomial ``H_k(x)`` by the three-term recurrence.

    Works elementwise on arrays.
    """
    if k < 0:
        raise ValueError("Hermite degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if k == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for j in range(1, k):
        h_prev, h = h, x * h - j * h_prev
    return h if h.ndim else float(h)


@lru_cache(maxsize=None)
def _power_in_hermite(k: int) -> tuple[tuple[int, float], ...]:
    # x^k = sum_j k! / (2^j j! (k-2j)!) H_{k-2j}(x)
    return tuple(
        (k - 2 * j, float(math.factorial(k) // (2**j * math.factorial(j) * math.factorial(k - 2 * j))))
        for j in range(k // 2 + 1)
    )


@lru_cache(maxsize=None)
def _hermite_in_power(k: int) -> tuple[tuple[int, float], ...]:
    # H_k(x) = sum_j (-1)^j k! / (2^j j! (k-2j)!) x^{k-2j}
    return tuple(
        (k - 2 * j, float((-1) ** j * (math.factorial(k) // (2**j * math.factorial(j) * math.factorial(k - 2 * j)))))
        for j in range(k // 2 + 1)
    )


class _Accumulator:
    """Sum of float contributions that prunes values lost to cancellation."""

    __slots__ = ("val", "mag")

    def __init__(self):
        self.val = defaultdict(float)
        self.mag = defaultdict(float)

    def add(self, mono, c):
        self.val[mono] += c
        self.mag[mono] += abs(c)

    def result(self) -> dict:
        out = {}
        for mono, v in self.val.items():
            if v != 0.0 and abs(v) > _CANCEL_RTOL * self.mag[mono]:
                out[mono] = v
        return out


def _change_basis(terms: Mapping[Monomial, float], table) -> dict:
    acc = _Accumulator()
    for mono, c in terms.items():
        # expand the product over coordinates
        partial = [((), c)]
        for i, k in mono:
            expansion = table(k)
            partial = [
                (m + ((i, j),) if j else m, cc * a)
                for m, cc in partial
                for j, a in expansion
            ]
        for m, cc in partial:
            acc.add(m, cc)
    return acc.result()


# --------------------------------------------------------------------------
# GaussPoly
# --------------------------------------------------------------------------

class GaussPoly:
    """Immutable sparse polynomial in the Gaussian coordinates.

    Arithmetic is carried out in the monomial basis; a Wick-tagged operand is
    converted first.  Results of arithmetic are monomial-tagged.
    """

    __slots__ = ("_terms", "_basis", "_hash")

    def __init__(self, terms: Mapping | None = None, basis: str = MONOMIAL):
        if basis not in _BASES:
            raise ValueError(f"unknown basis tag {basis!r}")
        clean = {}
        for mono, c in (terms or {}).items():
            mono = make_monomial(mono)
            c = float(c)
            if c != 0.0:
                clean[mono] = clean.get(mono, 0.0) + c
        self._terms = {m: clean[m] for m in sorted(clean, key=_sort_key) if clean[m] != 0.0}
        self._basis = basis
        self._hash = None

    # constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "GaussPoly":
        return cls({(): c})

    @classmethod
    def coordinate(cls, i: int, coeff: float = 1.0) -> "GaussPoly":
        return cls({make_monomial({i: 1}): coeff})

    @classmethod
    def hermite(cls, k: int, i: int, coeff: float = 1.0) -> "GaussPoly":
        """``coeff * H_k(N_i)`` in the Wick basis."""
        return cls({make_monomial({i: k}): coeff}, basis=WICK)

    @classmethod
    def zero(cls, basis: str = MONOMIAL) -> "GaussPoly":
        return cls({}, basis=basis)

    @classmethod
    def _raw(cls, terms: dict, basis: str) -> "GaussPoly":
        obj = cls.__new__(cls)
        obj._terms = {m: terms[m] for m in sorted(terms, key=_sort_key)}
        obj._basis = basis
        obj._hash = None
        return obj

    # introspection ------------------------------------------------------
    @property
    def terms(self) -> Mapping[Monomial, float]:
        return dict(self._terms)

    @property
    def basis(self) -> str:
        return self._basis

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    @property
    def degree(self) -> int:
        return max((monomial_degree(m) for m in self._terms), default=0)

    @property
    def coordinates(self) -> tuple[int, ...]:
        return tuple(sorted({i for m in self._terms for i, _ in m}))

    @property
    def max_index(self) -> int:
        return max(self.coordinates, default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    def coefficient(self, mono) -> float:
        return self._terms.get(make_monomial(mono), 0.0)

    # basis change --------------------------------------------------------
    def to_wick(self) -> "GaussPoly":
        if self._basis == WICK:
            return self
        return GaussPoly._raw(_change_basis(self._terms, _power_in_hermite), WICK)

    def from_wick(self) -> "GaussPoly":
        if self._basis == MONOMIAL:
            return self
        return GaussPoly._raw(_change_basis(self._terms, _hermite_in_power), MONOMIAL)

    def _mono(self) -> dict:
        return self.from_wick()._terms

    # arithmetic ------------------------------------------------------
    def _coerce(self, other) -> "GaussPoly":
        if isinstance(other, GaussPoly):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return GaussPoly.constant(float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self._basis == other._basis == WICK:
            a, b, basis = self._terms, other._terms, WICK
        else:
            a, b, basis = self._mono(), other._mono(), MONOMIAL
        acc = _Accumulator()
        for m, c in a.items():
            acc.add(m, c)
        for m, c in b.items():
            acc.add(m, c)
        return GaussPoly._raw(acc.result(), basis)

    __radd__ = __add__

    def __neg__(self):
        return GaussPoly._raw({m: -c for m, c in self._terms.items()}, self._basis)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s: float) -> "GaussPoly":
        s = float(s)
        if s == 0.0:
            return GaussPoly.zero(self._basis)
        return GaussPoly._raw({m: c * s for m, c in self._terms.items()}, self._basis)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.scale(other)
        if not isinstance(other, GaussPoly):
            return NotImplemented
        a, b = self._mono(), other._mono()
        acc = _Accumulator()
        for ma, ca in a.items():
            for mb, cb in b.items():
                acc.add(_mono_mul(ma, mb), ca * cb)
        return GaussPoly._raw(acc.result(), MONOMIAL)

    __rmul__ = __mul__

    def __truediv__(self, s):
        if isinstance(s, (int, float, np.floating, np.integer)):
            return self.scale(1.0 / float(s))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = GaussPoly.constant(1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    # calculus --------------------------------------------------------
    def derivative(self, i: int) -> "GaussPoly":
        """Partial derivative in ``N_i`` (monomial basis)."""
        out = {}
        for mono, c in self._mono().items():
            for pos, (j, k) in enumerate(mono):
                if j == i:
                    new = mono[:pos] + (((j, k - 1),) if k > 1 else ()) + mono[pos + 1:]
                    out[new] = out.get(new, 0.0) + c * k
                    break
        return GaussPoly._raw({m: c for m, c in out.items() if c != 0.0}, MONOMIAL)

    def gradient(self, dim: int | None = None) -> list["GaussPoly"]:
        dim = self.max_index if dim is None else dim
        return [self.derivative(i) for i in range(1, dim + 1)]

    def substitute_shift(self, offset: int) -> "GaussPoly":
        """Relabel every coordinate ``N_i`` as ``N_{i+offset}``."""
        return GaussPoly._raw(
            {tuple((i + offset, k) for i, k in m): c for m, c in self._terms.items()}, self._basis
        )

    # comparison --------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, GaussPoly):
            return NotImplemented
        return self._basis == other._basis and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._basis, frozenset(self._terms.items())))
        return self._hash

    def allclose(self, other: "GaussPoly", rtol: float = 1e-12, atol: float = 1e-14) -> bool:
        """Coefficient-wise comparison in a common basis."""
        a = self._terms if self._basis == other._basis else self._mono()
        b = other._terms if self._basis == other._basis else other._mono()
        for m in set(a) | set(b):
            x, y = a.get(m, 0.0), b.get(m, 0.0)
            if abs(x - y) > atol + rtol * max(abs(x), abs(y)):
                return False
        return True

    def __repr__(self):
        if not self._terms:
            return f"GaussPoly(0, basis={self._basis!r})"
        sym = "H" if self._basis == WICK else "N"
        parts = []
        for m, c in self._terms.items():
            if self._basis == WICK:
                body = "*".join(f"H{k}(N{i})" for i, k in m)
            else:
                body = "*".join(f"N{i}" + (f"^{k}" if k > 1 else "") for i, k in m)
            parts.append(f"{c!r}" + (f"*{body}" if body else ""))
        return f"GaussPoly[{sym}](" + " + ".join(parts) + ")"

    def __call__(self, point):
        return evaluate(self, point)


@dataclass(frozen=True)
class ChaosVector:
    """Vector of GaussPolys with declared chaos orders."""

    components: tuple
    degrees: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        degs = tuple(int(m) for m in self.degrees)
        if len(comps) != len(degs):
            raise ValueError("components and degrees must have equal length")
        for F, m in zip(comps, degs):
            if m < 0:
                raise ValueError("chaos degrees are nonnegative")
            wick = F.to_wick()
            if any(monomial_degree(mono) > m for mono in wick._terms):
                raise ValueError(f"component has chaos components above declared degree {m}")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "degrees", degs)

    @classmethod
    def of(cls, components: Sequence[GaussPoly], degrees: Sequence[int] | None = None) -> "ChaosVector":
        if degrees is None:
            degrees = [F.to_wick().degree for F in components]
        return cls(tuple(components), tuple(degrees))

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]

    @property
    def max_index(self) -> int:
        return max((F.max_index for F in self.components), default=0)


# --------------------------------------------------------------------------
# module-level operations
# --------------------------------------------------------------------------

def to_wick(F: GaussPoly) -> GaussPoly:
    if F.basis != MONOMIAL:
        raise ValueError("to_wick expects a monomial-basis polynomial")
    return F.to_wick()


def from_wick(F: GaussPoly) -> GaussPoly:
    if F.basis != WICK:
        raise ValueError("from_wick expects a wick-basis polynomial")
    return F.from_wick()


def expectation(F: GaussPoly) -> float:
    """``E[F]``: the constant coefficient of the Wick form."""
    return F.to_wick().coefficient(())


def _wick_norm(mono: Monomial) -> float:
    out = 1.0
    for _, k in mono:
        out *= math.factorial(k)
    return out


def inner_product(F: GaussPoly, G: GaussPoly) -> float:
    """``E[F G]`` via Wick-basis orthogonality."""
    a = F.to_wick()._terms
    b = G.to_wick()._terms
    if len(b) < len(a):
        a, b = b, a
    return math.fsum(c * b[m] * _wick_norm(m) for m, c in a.items() if m in b)


def variance(F: GaussPoly) -> float:
    w = F.to_wick()._terms
    return math.fsum(c * c * _wick_norm(m) for m, c in w.items() if m)


def chaos_project(F: GaussPoly, k: int) -> GaussPoly:
    """Projection on the ``k``-th Wiener chaos (returned in the monomial basis)."""
    w = F.to_wick()
    kept = {m: c for m, c in w.items() if monomial_degree(m) == k}
    return GaussPoly._raw(kept, WICK).from_wick()


def chaos_degrees(F: GaussPoly) -> tuple[int, ...]:
    """Chaos orders carrying a nonzero Wick coefficient."""
    return tuple(sorted({monomial_degree(m) for m in F.to_wick()._terms}))


def evaluate(F: GaussPoly, point) -> float | np.ndarray:
    """Plain evaluation.  ``point[i-1]`` is the value of ``N_i``.

    ``point`` may also be an array of shape ``(rows, dim)``.
    """
    x = np.asarray(point, dtype=float)
    width = x.shape[-1] if x.ndim else 1
    if x.ndim == 0:
        x = x.reshape(1)
    need = F.max_index
    if need > width:
        missing = [i for i in F.coordinates if i > width]
        raise IndexError(f"point does not cover coordinate N{missing[0]} (length {width})")
    terms = F.from_wick()._terms
    if x.ndim == 1:
        total = 0.0
        for mono, c in terms.items():
            v = c
            for i, k in mono:
                v *= x[i - 1] ** k
            total += v
        return float(total)
    out = np.zeros(x.shape[0])
    for mono, c in terms.items():
        v = np.full(x.shape[0], c)
        for i, k in mono:
            v = v * x[:, i - 1] ** k
        out += v
    return out


@lru_cache(maxsize=None)
def _hermite_linearization(a: int, b: int) -> tuple[tuple[int, float], ...]:
    """``H_a H_b = sum_k k! C(a,k) C(b,k) H_{a+b-2k}``."""
    return tuple(
        (a + b - 2 * k, float(math.factorial(k) * math.comb(a, k) * math.comb(b, k)))
        for k in range(min(a, b) + 1)
    )


def _wick_mono_mul(ma: Monomial, mb: Monomial):
    partial = [((), 1.0)]
    da, db = dict(ma), dict(mb)
    for i in sorted(set(da) | set(db)):
        a, b = da.get(i, 0), db.get(i, 0)
        if a == 0 or b == 0:
            factor = ((a + b, 1.0),)
        else:
            factor = _hermite_linearization(a, b)
        partial = [(m + ((i, j),) if j else m, c * f) for m, c in partial for j, f in factor]
    return partial


def wick_product(F: GaussPoly, G: GaussPoly) -> GaussPoly:
    """``F G`` computed in the Wick basis (Hermite linearization per coordinate).

    Avoids the cancellation that the monomial route suffers when the factors
    are centered but carry large constants in the monomial basis.
    """
    a, b = F.to_wick()._terms, G.to_wick()._terms
    acc = _Accumulator()
    for ma, ca in a.items():
        for mb, cb in b.items():
            for m, c in _wick_mono_mul(ma, mb):
                acc.add(m, ca * cb * c)
    return GaussPoly._raw(acc.result(), WICK)


def poly_sum(polys: Iterable[GaussPoly]) -> GaussPoly:
    """Sum of many polynomials in one pass (monomial basis)."""
    acc = _Accumulator()
    for F in polys:
        for m, c in F._mono().items():
            acc.add(m, c)
    return GaussPoly._raw(acc.result(), MONOMIAL)


def product_expectation(factors: Sequence[GaussPoly], budget: int = DEFAULT_TERM_BUDGET) -> float:
    """Exact ``E[F_1 ... F_k]`` guarded by an intermediate term budget.

    The product is split in two halves which are multiplied out in the Wick
    basis and paired with :func:`inner_product`.
    """
    factors = list(factors)
    if not factors:
        return 1.0
    if len(factors) == 1:
        return expectation(factors[0])
    half = len(factors) // 2
    left, right = factors[:half], factors[half:]
    est = 1
    for F in left:
        est *= max(len(F), 1)
    est_r = 1
    for F in right:
        est_r *= max(len(F), 1)
    if max(est, est_r) > budget:
        raise SymbolicBudgetExceeded(max(est, est_r), budget)
    L = left[0].to_wick()
    for F in left[1:]:
        L = wick_product(L, F)
    R = right[0].to_wick()
    for F in right[1:]:
        R = wick_product(R, F)
    return inner_product(L, R)


def moment(F: GaussPoly, k: int, budget: int = DEFAULT_TERM_BUDGET) -> float:
    return product_expectation([F] * k, budget=budget)


def fourth_moment_delta(F: GaussPoly, budget: int = DEFAULT_TERM_BUDGET) -> float:
    """Exact ``E[(F-EF)^4] - 3 Var(F)^2``."""
    w = F.to_wick()._terms
    Fc = GaussPoly._raw({m: c for m, c in w.items() if m}, WICK)
    v = variance(F)
    return moment(Fc, 4, budget=budget) - 3.0 * v * v


# --------------------------------------------------------------------------
# text serialization
# --------------------------------------------------------------------------

_HEADER = re.compile(r"^\s*basis\s*:\s*(\w+)\s*$")
_FACTOR = re.compile(r"^N(\d+)\^(\d+)$")


def dumps(F: GaussPoly) -> str:
    """One term per line: ``coeff * N<i>^<k> N<j>^<l>`` after a ``basis:`` header."""
    lines = [f"basis: {F.basis}"]
    for mono, c in F.items():
        if mono:
            lines.append(f"{c!r} * " + " ".join(f"N{i}^{k}" for i, k in mono))
        else:
            lines.append(f"{c!r}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> GaussPoly:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty GaussPoly text")
    m = _HEADER.match(lines[0])
    if not m or m.group(1) not in _BASES:
        raise ValueError(f"line 1: expected 'basis: monomial|wick', got {lines[0]!r}")
    basis = m.group(1)
    terms = {}
    for lineno, ln in enumerate(lines[1:], start=2):
        coeff_txt, _, rest = ln.partition("*")
        try:
            c = float(coeff_txt)
        except ValueError:
            raise ValueError(f"line {lineno}: bad coefficient {coeff_txt.strip()!r}") from None
        exps = {}
        for tok in rest.split():
            fm = _FACTOR.match(tok)
            if not fm:
                raise ValueError(f"line {lineno}: bad factor {tok!r}")
            i, k = int(fm.group(1)), int(fm.group(2))
            exps[i] = exps.get(i, 0) + k
        mono = make_monomial(exps)
        if mono in terms:
            raise ValueError(f"line {lineno}: duplicate monomial")
        terms[mono] = c
    return GaussPoly(terms, basis=basis)
