"""First-order Schrieffer-Wolff generator for the displaced quartic Hamiltonian.

After the displacement the system Hamiltonian is

    H_s(t) = H2 - eps * H4(t),
    H4(t)  = (w_a/48) * (u_q X_q + u_c X_c + x(t))^4,
    x(t)   = eta_x exp(-i wd t) + c.c.,

and H4 = S4 + N4 splits into number-conserving and non-conserving parts.
The generator G4 solves  -i dG4/dt + [H2, G4] = N4  with the initial
condition [H2, G4(0)] = N4(0).  Since [H2, M] = Omega_M M for every
normal-ordered monomial M, each coefficient obeys a scalar ODE solved
harmonic by harmonic: a harmonic n_nu exp(i nu t) gives the particular
amplitude n_nu / (Omega_M + nu), and the initial condition fixes a free
term  sum_nu n_nu (1/Omega_M - 1/(Omega_M + nu)) * exp(-i Omega_M t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .circuit_model import CircuitParams, NormalModeData
from .displacement import DisplacementData
from .errors import ResonantDenominator
from .operator_algebra import (
    STATIC,
    Frequencies,
    HarmonicCoeff,
    Monomial,
    OperatorPoly,
    commutator,
    identity,
    neg_label,
    number,
    quadrature_x,
    quadrature_y,
    split_number_conserving,
    time_derivative,
)

RESONANCE_TOL = 1e-9


@dataclass(frozen=True)
class QuarticExpansion:
    """H_s(t) = H2 - epsilon * (S4 + N4); S4 and N4 include the w_a/48 prefactor."""

    H2: OperatorPoly
    S4: OperatorPoly
    N4: OperatorPoly
    prefactor: float
    epsilon: float
    freqs: Frequencies
    eta_x: complex
    two_mode: bool = True

    @property
    def S4_raw(self) -> OperatorPoly:
        return self.S4.scale(1.0 / self.prefactor)

    @property
    def N4_raw(self) -> OperatorPoly:
        return self.N4.scale(1.0 / self.prefactor)

    @property
    def H4(self) -> OperatorPoly:
        return self.S4 + self.N4

    def hamiltonian(self) -> OperatorPoly:
        return self.H2 - self.H4.scale(self.epsilon)


@dataclass(frozen=True)
class Generator:
    G4: OperatorPoly
    particular: OperatorPoly
    homogeneous: OperatorPoly
    freqs: Frequencies


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """Kerr-form effective Hamiltonian.

    H_eff(t) = (w_q - lambda_q(t)) n_q + (w_c - lambda_c(t)) n_c
               - chi_ac n_q n_c - alpha_q n_q^2 - alpha_c n_c^2,
    lambda_j(t) = lambda_j_static + lambda_j_osc exp(-2i wd t) + c.c.
    All shifts include the factor epsilon.
    """

    omega_q: float
    omega_c: float
    lambda_q_static: float
    lambda_c_static: float
    chi_ac: float
    alpha_q: float
    alpha_c: float
    lambda_q_osc: complex
    lambda_c_osc: complex
    omega_d: float
    full: OperatorPoly
    secular: OperatorPoly

    def lambda_q(self, t: float) -> float:
        return self.lambda_q_static + 2 * (self.lambda_q_osc * np.exp(-2j * self.omega_d * t)).real

    def lambda_c(self, t: float) -> float:
        return self.lambda_c_static + 2 * (self.lambda_c_osc * np.exp(-2j * self.omega_d * t)).real

    def to_dict(self) -> dict:
        return {
            "lambda_q_static": self.lambda_q_static,
            "lambda_c_static": self.lambda_c_static,
            "chi_ac": self.chi_ac,
            "alpha_q": self.alpha_q,
            "alpha_c": self.alpha_c,
            "lambda_q_osc": [self.lambda_q_osc.real, self.lambda_q_osc.imag],
            "lambda_c_osc": [self.lambda_c_osc.real, self.lambda_c_osc.imag],
        }


def drive_poly(eta_x: complex) -> OperatorPoly:
    """x(t) = eta_x exp(-i wd t) + conj(eta_x) exp(i wd t) as a c-number polynomial."""
    coeff = HarmonicCoeff({(0, 0, -1): eta_x, (0, 0, 1): np.conj(eta_x)})
    return OperatorPoly.scalar(coeff) if coeff else OperatorPoly()


def harmonic_hamiltonian(omega_q: float, omega_c: float = 0.0, two_mode: bool = True) -> OperatorPoly:
    H2 = number("q").scale(omega_q) + identity().scale(omega_q / 2)
    if two_mode:
        H2 = H2 + number("c").scale(omega_c) + identity().scale(omega_c / 2)
    return H2


def _expand(omega_q, omega_c, prefactor, u_q, u_c, eta_x, omega_d, epsilon, two_mode) -> QuarticExpansion:
    phase = quadrature_x("q").scale(u_q)
    if two_mode and u_c != 0:
        phase = phase + quadrature_x("c").scale(u_c)
    phase = phase + drive_poly(eta_x)
    quartic = phase**4
    S, N = split_number_conserving(quartic)
    return QuarticExpansion(
        H2=harmonic_hamiltonian(omega_q, omega_c, two_mode),
        S4=S.scale(prefactor),
        N4=N.scale(prefactor),
        prefactor=prefactor,
        epsilon=epsilon,
        freqs=Frequencies(omega_q, omega_c, omega_d),
        eta_x=complex(eta_x),
        two_mode=two_mode,
    )


def expand_displaced_hamiltonian(
    nm: NormalModeData, disp: DisplacementData, params: CircuitParams
) -> QuarticExpansion:
    """Quartic part of the displaced two-mode Hamiltonian."""
    return _expand(
        nm.omega_q,
        nm.omega_c,
        params.omega_a_bar / 48.0,
        nm.u_aa,
        nm.u_ac,
        disp.eta_x,
        params.drive_freq,
        params.epsilon,
        True,
    )


def expand_one_mode(omega_q: float, eta: complex, omega_d: float, epsilon: float) -> QuarticExpansion:
    """Quartic part of the displaced single driven transmon mode."""
    return _expand(omega_q, 0.0, omega_q / 48.0, 1.0, 0.0, eta, omega_d, epsilon, False)


def free_label(mono: Monomial) -> tuple:
    """Integer label of Omega_M = (m-n) w_q + (p-q) w_c."""
    dq, dc = mono.photon_change
    return (dq, dc, 0)


def solve_generator(qe: QuarticExpansion, params: Optional[CircuitParams] = None) -> Generator:
    freqs = qe.freqs
    scale = max(abs(freqs.omega_q), abs(freqs.omega_c), abs(freqs.omega_d), 1.0)
    particular: Dict[Monomial, HarmonicCoeff] = {}
    homogeneous: Dict[Monomial, HarmonicCoeff] = {}
    for mono, coeff in qe.N4.items():
        om_label = free_label(mono)
        om = freqs.value(om_label)
        if abs(om) < RESONANCE_TOL * scale:
            raise ResonantDenominator(
                f"free frequency of {mono} vanishes", monomial=tuple(mono), label=om_label
            )
        part: Dict[tuple, complex] = {}
        h = 0j
        for lab, amp in coeff.items():
            den = om + freqs.value(lab)
            if abs(den) < RESONANCE_TOL * scale:
                raise ResonantDenominator(
                    f"monomial {mono} is resonant with harmonic {lab}; detune the drive",
                    monomial=tuple(mono),
                    harmonic=lab,
                )
            part[lab] = amp / den
            if lab != STATIC:
                h += amp * (1.0 / om - 1.0 / den)
        particular[mono] = HarmonicCoeff(part)
        if h != 0:
            homogeneous[mono] = HarmonicCoeff({neg_label(om_label): h})
    P = OperatorPoly(particular)
    H = OperatorPoly(homogeneous)
    return Generator(G4=P + H, particular=P, homogeneous=H, freqs=freqs)


def ode_residual(qe: QuarticExpansion, gen: Generator) -> OperatorPoly:
    """-i dG4/dt + [H2, G4] - N4, symbolically."""
    return time_derivative(gen.G4, qe.freqs).scale(-1j) + commutator(qe.H2, gen.G4) - qe.N4


def integrated_drive_terms(qe: QuarticExpansion) -> OperatorPoly:
    """I4(t) = i * int_0^t S4_d(t') dt' where S4_d holds the oscillating part of S4."""
    freqs = qe.freqs

    def integrate(_mono, coeff: HarmonicCoeff) -> HarmonicCoeff:
        out: Dict[tuple, complex] = {}
        for lab, amp in coeff.items():
            if lab == STATIC:
                continue
            nu = freqs.value(lab)
            # i * amp * (exp(i nu t) - 1) / (i nu)
            out[lab] = out.get(lab, 0j) + amp / nu
            out[STATIC] = out.get(STATIC, 0j) - amp / nu
        return HarmonicCoeff(out)

    return qe.S4.map_coeffs(integrate)


def effective_hamiltonian(
    qe: QuarticExpansion,
    nm: Optional[NormalModeData] = None,
    disp: Optional[DisplacementData] = None,
    params: Optional[CircuitParams] = None,
) -> EffectiveHamiltonian:
    """Read the Kerr coefficients off epsilon * S4."""
    eps = qe.epsilon
    S = qe.S4
    osc_label = (0, 0, -2)

    def static(mono):
        return (eps * S[mono][STATIC]).real

    alpha_q = static((2, 2, 0, 0))
    alpha_c = static((0, 0, 2, 2))
    chi = static((1, 1, 1, 1))
    lam_q = static((1, 1, 0, 0)) - alpha_q
    lam_c = static((0, 0, 1, 1)) - alpha_c
    osc_q = complex(eps * S[(1, 1, 0, 0)][osc_label])
    osc_c = complex(eps * S[(0, 0, 1, 1)][osc_label])
    full = qe.H2 - S.scale(eps)
    secular = full.map_coeffs(lambda _m, c: HarmonicCoeff({STATIC: c[STATIC]}))
    return EffectiveHamiltonian(
        omega_q=qe.freqs.omega_q,
        omega_c=qe.freqs.omega_c,
        lambda_q_static=lam_q,
        lambda_c_static=lam_c,
        chi_ac=chi,
        alpha_q=alpha_q,
        alpha_c=alpha_c,
        lambda_q_osc=osc_q,
        lambda_c_osc=osc_c,
        omega_d=qe.freqs.omega_d,
        full=full,
        secular=secular,
    )


def kerr_coefficients(nm: NormalModeData, params: CircuitParams) -> dict:
    """Closed-form Kerr coefficients at zero drive (epsilon included)."""
    e, wa = params.epsilon, params.omega_a_bar
    uaa, uac = nm.u_aa, nm.u_ac
    return {
        "lambda_q0": e * wa / 8 * uaa**2 * (uaa**2 + 2 * uac**2),
        "lambda_c0": e * wa / 8 * uac**2 * (uac**2 + 2 * uaa**2),
        "chi_ac": e * wa / 2 * uaa**2 * uac**2,
        "alpha_q": e * wa / 8 * uaa**4,
        "alpha_c": e * wa / 8 * uac**4,
    }


def bath_quadrature(nm: Optional[NormalModeData], kind: str = "y") -> OperatorPoly:
    """System operator coupled to the bath.

    Two-mode: the bare cavity charge v_ca Y_q + v_cc Y_c.  Without normal
    mode data the single-mode quadrature Y_q (``kind='y'``) or X_q
    (``kind='x'``) is returned.
    """
    if nm is None:
        return quadrature_y("q") if kind == "y" else quadrature_x("q")
    if kind == "y":
        return quadrature_y("q").scale(nm.v_ca) + quadrature_y("c").scale(nm.v_cc)
    return quadrature_x("q").scale(nm.u_ca) + quadrature_x("c").scale(nm.u_cc)


def dressed_quadrature(
    Y: OperatorPoly, gen: Generator, I4: Optional[OperatorPoly], epsilon: float
) -> OperatorPoly:
    """Y + epsilon [Y, G4 + I4]."""
    total = gen.G4 if I4 is None else gen.G4 + I4
    return Y + commutator(Y, total).scale(epsilon)


def floquet_transform_matrix(
    qe: QuarticExpansion, gen: Generator, epsilon: float, t: float, trunc, order: int = 3
) -> np.ndarray:
    """Matrix of exp(-eps G)(H_s - i d/dt)exp(eps G) at time t via truncated BCH.

    Test tool: H_s is rebuilt with the given epsilon while G4 is kept fixed.
    """
    freqs = qe.freqs
    Hs = (qe.H2 - qe.H4.scale(epsilon)).to_matrix(t, trunc, freqs)
    X = gen.G4.to_matrix(t, trunc, freqs) * epsilon
    Xdot = time_derivative(gen.G4, freqs).to_matrix(t, trunc, freqs) * epsilon

    def comm(A, B):
        return A @ B - B @ A

    out = Hs.copy()
    term = Hs
    for k in range(1, order + 1):
        term = comm(term, X) / k
        out = out + term
    # -i exp(-X) d/dt exp(X) = -i (Xdot - [X, Xdot]/2 + [X,[X,Xdot]]/6 - ...)
    term = Xdot
    sign = 1.0
    acc = Xdot.copy()
    for k in range(2, order + 1):
        term = comm(X, term) / k
        sign = -sign
        acc = acc + sign * term
    return out - 1j * acc
