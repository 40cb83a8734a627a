"""Normal-ordered two-mode bosonic polynomials with harmonic coefficients.

A term is ``coeff(t) * a†^m a^n c†^p c^q`` where ``coeff(t)`` is a finite sum
of complex amplitudes multiplying ``exp(i * nu * t)``.  Each frequency ``nu``
is stored as an exact integer tuple ``(d_q, d_c, d_d)`` meaning
``d_q*omega_q + d_c*omega_c + d_d*omega_d``, so equality of frequencies is an
integer comparison and never depends on round-off.

The algebra is exact up to floating point in the amplitudes.  Numbers only
enter through :class:`Frequencies` when a polynomial is evaluated at a time.
"""

from __future__ import annotations

import math
from typing import Dict, Iterable, Iterator, NamedTuple, Optional, Tuple

import numpy as np

from .errors import DegreeOverflow, TruncationTooSmall

MAX_DEGREE = 6

Label = Tuple[int, int, int]
STATIC: Label = (0, 0, 0)


class Monomial(NamedTuple):
    """Exponents of a†^m a^n c†^p c^q."""

    m: int
    n: int
    p: int = 0
    q: int = 0

    @property
    def degree(self) -> int:
        return self.m + self.n + self.p + self.q

    @property
    def conserving(self) -> bool:
        return self.m == self.n and self.p == self.q

    @property
    def photon_change(self) -> Tuple[int, int]:
        """Net photons added to (qubit, cavity) by the monomial."""
        return (self.m - self.n, self.p - self.q)

    def dagger(self) -> "Monomial":
        return Monomial(self.n, self.m, self.q, self.p)

    def __str__(self) -> str:
        parts = []
        for sym, e in (("a†", self.m), ("a", self.n), ("c†", self.p), ("c", self.q)):
            if e == 1:
                parts.append(sym)
            elif e > 1:
                parts.append(f"{sym}^{e}")
        return " ".join(parts) if parts else "1"


IDENTITY = Monomial(0, 0, 0, 0)


class Frequencies(NamedTuple):
    """Numerical values used to evaluate integer frequency labels."""

    omega_q: float
    omega_c: float = 0.0
    omega_d: float = 0.0

    def value(self, label: Label) -> float:
        return label[0] * self.omega_q + label[1] * self.omega_c + label[2] * self.omega_d


def add_labels(x: Label, y: Label) -> Label:
    return (x[0] + y[0], x[1] + y[1], x[2] + y[2])


def neg_label(x: Label) -> Label:
    return (-x[0], -x[1], -x[2])


class HarmonicCoeff:
    """Finite sum of amplitudes times exp(i * frequency * t)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Dict[Label, complex]] = None):
        self._terms: Dict[Label, complex] = {}
        if terms:
            for lab, amp in terms.items():
                amp = complex(amp)
                if amp != 0:
                    self._terms[tuple(int(v) for v in lab)] = amp

    @classmethod
    def constant(cls, value: complex) -> "HarmonicCoeff":
        return cls({STATIC: value})

    def items(self):
        return self._terms.items()

    def labels(self):
        return self._terms.keys()

    def __getitem__(self, label: Label) -> complex:
        return self._terms.get(tuple(label), 0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}: {v:.6g}" for k, v in sorted(self._terms.items()))
        return f"HarmonicCoeff({{{inner}}})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, HarmonicCoeff):
            return NotImplemented
        return self._terms == other._terms

    def __add__(self, other: "HarmonicCoeff") -> "HarmonicCoeff":
        out = dict(self._terms)
        for lab, amp in other._terms.items():
            out[lab] = out.get(lab, 0j) + amp
        return HarmonicCoeff(out)

    def __neg__(self) -> "HarmonicCoeff":
        return HarmonicCoeff({k: -v for k, v in self._terms.items()})

    def __sub__(self, other: "HarmonicCoeff") -> "HarmonicCoeff":
        return self + (-other)

    def scale(self, s: complex) -> "HarmonicCoeff":
        return HarmonicCoeff({k: s * v for k, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, HarmonicCoeff):
            out: Dict[Label, complex] = {}
            for l1, a1 in self._terms.items():
                for l2, a2 in other._terms.items():
                    lab = add_labels(l1, l2)
                    out[lab] = out.get(lab, 0j) + a1 * a2
            return HarmonicCoeff(out)
        return self.scale(other)

    __rmul__ = __mul__

    def conj(self) -> "HarmonicCoeff":
        return HarmonicCoeff({neg_label(k): v.conjugate() for k, v in self._terms.items()})

    def shift(self, label: Label) -> "HarmonicCoeff":
        """Multiply by exp(i * label * t)."""
        return HarmonicCoeff({add_labels(k, label): v for k, v in self._terms.items()})

    def evaluate(self, t: float, freqs: Optional[Frequencies]) -> complex:
        total = 0j
        for lab, amp in self._terms.items():
            if lab == STATIC:
                total += amp
            else:
                if freqs is None:
                    raise ValueError("oscillating coefficient needs Frequencies to evaluate")
                total += amp * np.exp(1j * freqs.value(lab) * t)
        return complex(total)

    def map_amplitudes(self, fn) -> "HarmonicCoeff":
        """Apply ``fn(label, amplitude)`` to each term."""
        return HarmonicCoeff({k: fn(k, v) for k, v in self._terms.items()})

    def chop(self, tol: float) -> "HarmonicCoeff":
        return HarmonicCoeff({k: v for k, v in self._terms.items() if abs(v) > tol})

    def max_abs(self) -> float:
        return max((abs(v) for v in self._terms.values()), default=0.0)


def _single_mode_product(n: int, k: int) -> Iterator[Tuple[int, int]]:
    """Contractions in a^n a†^k: yields (j, C(n,j) C(k,j) j!)."""
    for j in range(min(n, k) + 1):
        yield j, math.comb(n, j) * math.comb(k, j) * math.factorial(j)


def _monomial_product(x: Monomial, y: Monomial, skip_free: bool = False):
    """Normal-ordered expansion of x*y as (Monomial, integer weight) pairs."""
    for ja, wa in _single_mode_product(x.n, y.m):
        for jc, wc in _single_mode_product(x.q, y.p):
            if skip_free and ja == 0 and jc == 0:
                continue
            yield Monomial(x.m + y.m - ja, x.n + y.n - ja, x.p + y.p - jc, x.q + y.q - jc), wa * wc


class OperatorPoly:
    """Map from :class:`Monomial` to :class:`HarmonicCoeff`.

    Instances are treated as immutable values; every operation returns a new
    polynomial.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Dict[Monomial, HarmonicCoeff]] = None):
        self._terms: Dict[Monomial, HarmonicCoeff] = {}
        if terms:
            for mono, coeff in terms.items():
                if not isinstance(coeff, HarmonicCoeff):
                    coeff = HarmonicCoeff.constant(coeff)
                if coeff:
                    mono = Monomial(*mono)
                    if mono.degree > MAX_DEGREE:
                        raise DegreeOverflow(
                            f"monomial {mono} has degree {mono.degree} > {MAX_DEGREE}",
                            monomial=tuple(mono),
                        )
                    self._terms[mono] = coeff

    # construction helpers
    @classmethod
    def from_terms(cls, pairs: Iterable[Tuple[Tuple[int, int, int, int], complex]]) -> "OperatorPoly":
        acc: Dict[Monomial, HarmonicCoeff] = {}
        for mono, amp in pairs:
            mono = Monomial(*mono)
            coeff = amp if isinstance(amp, HarmonicCoeff) else HarmonicCoeff.constant(amp)
            acc[mono] = acc[mono] + coeff if mono in acc else coeff
        return cls(acc)

    @classmethod
    def scalar(cls, value) -> "OperatorPoly":
        return cls({IDENTITY: value})

    # mapping interface
    def items(self):
        return self._terms.items()

    def monomials(self):
        return self._terms.keys()

    def __getitem__(self, mono) -> HarmonicCoeff:
        return self._terms.get(Monomial(*mono), HarmonicCoeff())

    def __contains__(self, mono) -> bool:
        return Monomial(*mono) in self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __repr__(self) -> str:
        return f"OperatorPoly({len(self._terms)} terms)"

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        return self._terms == other._terms

    @property
    def degree(self) -> int:
        return max((m.degree for m in self._terms), default=0)

    def labels(self) -> set:
        out = set()
        for coeff in self._terms.values():
            out.update(coeff.labels())
        return out

    # linear structure
    def __add__(self, other) -> "OperatorPoly":
        if not isinstance(other, OperatorPoly):
            other = OperatorPoly.scalar(other)
        out = dict(self._terms)
        for mono, coeff in other._terms.items():
            out[mono] = out[mono] + coeff if mono in out else coeff
        return OperatorPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "OperatorPoly":
        return OperatorPoly({k: -v for k, v in self._terms.items()})

    def __sub__(self, other) -> "OperatorPoly":
        if not isinstance(other, OperatorPoly):
            other = OperatorPoly.scalar(other)
        return self + (-other)

    def __rsub__(self, other) -> "OperatorPoly":
        return (-self) + other

    def scale(self, s) -> "OperatorPoly":
        if isinstance(s, HarmonicCoeff):
            return OperatorPoly({k: v * s for k, v in self._terms.items()})
        return OperatorPoly({k: v.scale(s) for k, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, OperatorPoly):
            return normal_order_product(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __matmul__(self, other: "OperatorPoly") -> "OperatorPoly":
        return normal_order_product(self, other)

    def __pow__(self, k: int) -> "OperatorPoly":
        out = OperatorPoly.scalar(1.0)
        for _ in range(k):
            out = normal_order_product(out, self)
        return out

    def dagger(self) -> "OperatorPoly":
        return dagger(self)

    def filter(self, pred) -> "OperatorPoly":
        """Keep terms for which ``pred(monomial)`` is true."""
        return OperatorPoly({k: v for k, v in self._terms.items() if pred(k)})

    def map_coeffs(self, fn) -> "OperatorPoly":
        """Apply ``fn(monomial, coeff) -> HarmonicCoeff`` to each term."""
        return OperatorPoly({k: fn(k, v) for k, v in self._terms.items()})

    def chop(self, tol: float = 1e-14) -> "OperatorPoly":
        return OperatorPoly({k: v.chop(tol) for k, v in self._terms.items()})

    def evaluate_coeffs(self, t: float, freqs: Optional[Frequencies]) -> Dict[Monomial, complex]:
        return {k: v.evaluate(t, freqs) for k, v in self._terms.items()}

    def max_abs(self) -> float:
        return max((v.max_abs() for v in self._terms.values()), default=0.0)

    def to_matrix(self, t: float = 0.0, trunc=(8, 1), freqs: Optional[Frequencies] = None) -> np.ndarray:
        return to_matrix(self, t, trunc, freqs)

    def to_text(self) -> str:
        return to_text(self)


def normal_order_product(A: OperatorPoly, B: OperatorPoly) -> OperatorPoly:
    """Exact normal-ordered product A*B."""
    acc: Dict[Monomial, Dict[Label, complex]] = {}
    for x, cx in A.items():
        for y, cy in B.items():
            cxy = cx * cy
            if not cxy:
                continue
            for mono, w in _monomial_product(x, y):
                _accumulate(acc, mono, cxy, w)
    return _finish(acc)


def commutator(A: OperatorPoly, B: OperatorPoly) -> OperatorPoly:
    """Normal-ordered [A, B].

    The fully uncontracted terms of AB and BA coincide and are skipped, so
    the degree of the result is at most deg A + deg B - 2.
    """
    acc: Dict[Monomial, Dict[Label, complex]] = {}
    for x, cx in A.items():
        for y, cy in B.items():
            cxy = cx * cy
            if not cxy:
                continue
            for mono, w in _monomial_product(x, y, skip_free=True):
                _accumulate(acc, mono, cxy, w)
            for mono, w in _monomial_product(y, x, skip_free=True):
                _accumulate(acc, mono, cxy, -w)
    return _finish(acc)


def _accumulate(acc, mono, coeff: HarmonicCoeff, w: int) -> None:
    slot = acc.setdefault(mono, {})
    for lab, amp in coeff.items():
        slot[lab] = slot.get(lab, 0j) + w * amp


def _finish(acc) -> OperatorPoly:
    terms = {}
    for mono, d in acc.items():
        coeff = HarmonicCoeff(d)
        if coeff:
            terms[mono] = coeff
    return OperatorPoly(terms)


def dagger(P: OperatorPoly) -> OperatorPoly:
    return OperatorPoly({mono.dagger(): coeff.conj() for mono, coeff in P.items()})


def split_number_conserving(P: OperatorPoly) -> Tuple[OperatorPoly, OperatorPoly]:
    """Return (S, N) with S the m=n, p=q monomials and N the rest."""
    S = P.filter(lambda m: m.conserving)
    N = P.filter(lambda m: not m.conserving)
    return S, N


def time_derivative(P: OperatorPoly, freqs: Frequencies) -> OperatorPoly:
    """d/dt of the harmonic coefficients."""
    return P.map_coeffs(lambda _m, c: c.map_amplitudes(lambda lab, amp: 1j * freqs.value(lab) * amp))


# ---------------------------------------------------------------- builders

def ladder(mode: str, dag: bool = False) -> OperatorPoly:
    if mode == "q":
        mono = Monomial(1, 0, 0, 0) if dag else Monomial(0, 1, 0, 0)
    elif mode == "c":
        mono = Monomial(0, 0, 1, 0) if dag else Monomial(0, 0, 0, 1)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return OperatorPoly({mono: 1.0})


def number(mode: str) -> OperatorPoly:
    return ladder(mode, True) * ladder(mode)


def quadrature_x(mode: str) -> OperatorPoly:
    """X = b + b†."""
    return ladder(mode) + ladder(mode, True)


def quadrature_y(mode: str) -> OperatorPoly:
    """Y = -i (b - b†)."""
    return (ladder(mode) - ladder(mode, True)).scale(-1j)


def identity() -> OperatorPoly:
    return OperatorPoly.scalar(1.0)


# ---------------------------------------------------------------- matrices

def _power_matrices(dim: int, maxpow: int):
    lower = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    raise_ = lower.conj().T
    lp = [np.eye(dim, dtype=complex)]
    rp = [np.eye(dim, dtype=complex)]
    for _ in range(maxpow):
        lp.append(lp[-1] @ lower)
        rp.append(rp[-1] @ raise_)
    return lp, rp


def to_matrix(P: OperatorPoly, t: float = 0.0, trunc=(8, 1), freqs: Optional[Frequencies] = None) -> np.ndarray:
    """Dense matrix of P(t) on the truncated basis |n_q> (x) |n_c>."""
    dq, dc = int(trunc[0]), int(trunc[1])
    if dq < 1 or dc < 1:
        raise ValueError("truncation dimensions must be >= 1")
    for mono in P.monomials():
        if max(mono.m, mono.n) >= dq or max(mono.p, mono.q) >= dc:
            raise TruncationTooSmall(
                f"monomial {mono} does not fit in truncation {(dq, dc)}",
                monomial=tuple(mono),
                trunc=(dq, dc),
            )
    lq, rq = _power_matrices(dq, max([0] + [max(m.m, m.n) for m in P.monomials()]))
    lc, rc = _power_matrices(dc, max([0] + [max(m.p, m.q) for m in P.monomials()]))
    out = np.zeros((dq * dc, dq * dc), dtype=complex)
    for mono, coeff in P.items():
        val = coeff.evaluate(t, freqs)
        if val == 0:
            continue
        out += val * np.kron(rq[mono.m] @ lq[mono.n], rc[mono.p] @ lc[mono.q])
    return out


def monomial_matrix(mono: Monomial, trunc) -> np.ndarray:
    return to_matrix(OperatorPoly({mono: 1.0}), 0.0, trunc)


# ---------------------------------------------------------------- text form

def to_text(P: OperatorPoly) -> str:
    """Stable sorted text form, one line per (monomial, frequency label)."""
    lines = []
    for mono in sorted(P.monomials()):
        for lab in sorted(P[mono].labels()):
            amp = P[mono][lab]
            lines.append(
                f"{mono.m} {mono.n} {mono.p} {mono.q} | {lab[0]} {lab[1]} {lab[2]} | "
                f"{amp.real:.17e} {amp.imag:.17e}"
            )
    return "\n".join(lines)


def from_text(text: str) -> OperatorPoly:
    acc: Dict[Monomial, Dict[Label, complex]] = {}
    for line in text.strip().splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        mono_s, lab_s, amp_s = line.split("|")
        mono = Monomial(*(int(v) for v in mono_s.split()))
        lab = tuple(int(v) for v in lab_s.split())
        re_, im_ = (float(v) for v in amp_s.split())
        acc.setdefault(mono, {})[lab] = complex(re_, im_)
    return OperatorPoly({k: HarmonicCoeff(v) for k, v in acc.items()})
