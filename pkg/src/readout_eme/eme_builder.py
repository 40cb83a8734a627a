"""Frequency binning of dressed bath couplings and master-equation assembly.

Binning convention: in the interaction picture with respect to H2 a term
``amp * exp(i nu t) * M`` of the dressed quadrature oscillates as
``exp(i (nu + Omega_M) t)``.  We write the interaction-picture operator as
``sum_j C(w_j) exp(-i w_j t)`` so that lowering operators sit at positive
frequency: ``a`` belongs to the bin ``+w_q`` and is damped with the bath
spectrum at ``+w_q``.  Hermiticity gives C(-w) = C(w)^dagger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .circuit_model import CircuitParams, NormalModeData
from .displacement import (
    DisplacementData,
    linear_rates,
    one_mode_displacement,
    steady_state_displacement,
)
from .errors import AccidentalDegeneracy, ConfigError
from .operator_algebra import (
    STATIC,
    Frequencies,
    HarmonicCoeff,
    Monomial,
    OperatorPoly,
    dagger,
    identity,
    ladder,
    neg_label,
    number,
    quadrature_y,
)
from .sw_generator import (
    EffectiveHamiltonian,
    Generator,
    QuarticExpansion,
    bath_quadrature,
    dressed_quadrature,
    effective_hamiltonian,
    expand_displaced_hamiltonian,
    expand_one_mode,
    integrated_drive_terms,
    kerr_coefficients,
    solve_generator,
)

DEGENERACY_TOL = 1e-9

FAMILIES = ("single_photon", "correlated", "dephasing", "multi_photon")

MASKS: Dict[str, Tuple[str, ...]] = {
    "full": FAMILIES,
    "no-correlated-ac": ("single_photon", "dephasing", "multi_photon"),
    "no-dephasing": ("single_photon", "correlated", "multi_photon"),
    "single-photon-only": ("single_photon",),
}


def family(mono: Monomial) -> str:
    """Classify a monomial by its net photon change (qubit, cavity)."""
    dq, dc = mono.photon_change
    if dq == 0 and dc == 0:
        return "dephasing"
    if abs(dq) + abs(dc) == 1:
        return "single_photon"
    if abs(dq) == 1 and abs(dc) == 1:
        return "correlated"
    return "multi_photon"


# ---------------------------------------------------------------- spectra

@dataclass(frozen=True)
class SpectralDensity:
    """Flat bath spectrum.

    ``flat_zero_T``: S(w) = 2 kappa_flat for w > 0 and 0 otherwise.
    ``flat_all``: S(w) = 2 kappa_flat at every frequency.
    """

    kappa_flat: float
    kind: str = "flat_zero_T"

    def __post_init__(self):
        if self.kind not in ("flat_zero_T", "flat_all"):
            raise ConfigError(f"unknown spectral density {self.kind!r}", field="spectral.kind")
        if self.kappa_flat < 0:
            raise ConfigError("kappa_flat must be non-negative", field="spectral.kappa_flat")

    def __call__(self, omega: float) -> float:
        if self.kind == "flat_all":
            return 2.0 * self.kappa_flat
        return 2.0 * self.kappa_flat if omega > 0 else 0.0


# ---------------------------------------------------------------- binning

@dataclass(frozen=True)
class CollapseBin:
    label: Tuple[int, int, int]
    omega: float
    op: OperatorPoly
    rate: float = 0.0

    def to_dict(self, top: int = 8) -> dict:
        terms = sorted(self.op.items(), key=lambda kv: -abs(kv[1][STATIC]))[:top]
        return {
            "label": list(self.label),
            "omega": self.omega,
            "rate": self.rate,
            "terms": [
                {"monomial": str(m), "exponents": list(m), "re": c[STATIC].real, "im": c[STATIC].imag}
                for m, c in terms
            ],
        }


@dataclass(frozen=True)
class CollapseSet:
    bins: Tuple[CollapseBin, ...]
    freqs: Frequencies
    heff: Optional[EffectiveHamiltonian] = None

    def by_label(self) -> Dict[Tuple[int, int, int], CollapseBin]:
        return {b.label: b for b in self.bins}

    def get(self, label) -> Optional[CollapseBin]:
        return self.by_label().get(tuple(label))

    def reconstruct_matrix(self, t: float, trunc) -> np.ndarray:
        """sum_j C(w_j) exp(-i w_j t)."""
        out = 0
        for b in self.bins:
            out = out + b.op.to_matrix(0.0, trunc) * np.exp(-1j * b.omega * t)
        return out


def interaction_label(mono: Monomial, lab) -> Tuple[int, int, int]:
    dq, dc = mono.photon_change
    return (lab[0] + dq, lab[1] + dc, lab[2])


def bin_by_frequency(
    dressed: OperatorPoly,
    freqs: Frequencies,
    heff: Optional[EffectiveHamiltonian] = None,
    spectral: Optional[SpectralDensity] = None,
    check_degeneracy: bool = True,
) -> CollapseSet:
    """Group the terms of ``dressed`` by interaction-picture frequency."""
    acc: Dict[Tuple[int, int, int], Dict[Monomial, complex]] = {}
    for mono, coeff in dressed.items():
        for lab, amp in coeff.items():
            blab = neg_label(interaction_label(mono, lab))
            slot = acc.setdefault(blab, {})
            slot[mono] = slot.get(mono, 0j) + amp
    if check_degeneracy:
        _check_degeneracy(acc.keys(), freqs)
    bins = []
    for blab in sorted(acc):
        op = OperatorPoly({m: a for m, a in acc[blab].items() if a != 0})
        if not op:
            continue
        omega = freqs.value(blab)
        rate = spectral(omega) if spectral is not None else 0.0
        bins.append(CollapseBin(blab, omega, op, rate))
    return CollapseSet(tuple(bins), freqs, heff)


def _check_degeneracy(labels: Iterable, freqs: Frequencies) -> None:
    scale = max(abs(freqs.omega_q), abs(freqs.omega_c), abs(freqs.omega_d), 1e-300)
    tol = DEGENERACY_TOL * scale
    items = sorted({tuple(l) for l in labels} | {STATIC}, key=freqs.value)
    for x, y in zip(items, items[1:]):
        if abs(freqs.value(x) - freqs.value(y)) < tol:
            raise AccidentalDegeneracy(
                f"frequency labels {x} and {y} coincide numerically; "
                "choose a drive frequency that is not commensurate with the mode frequencies",
                labels=[x, y],
            )


def normalize_phase(op: OperatorPoly) -> OperatorPoly:
    """Rotate a static operator so its leading single-photon coefficient is real positive."""
    if not op:
        return op
    items = list(op.items())
    single = [(m, c[STATIC]) for m, c in items if family(m) == "single_photon"]
    pool = single if single else [(m, c[STATIC]) for m, c in items]
    _, lead = max(pool, key=lambda mc: abs(mc[1]))
    if lead == 0:
        return op
    return op.scale(abs(lead) / lead)


def apply_mask(op: OperatorPoly, keep: Sequence[str]) -> OperatorPoly:
    """Keep only monomials of the listed families.

    The identity monomial is always removed: a c-number in the system-bath
    coupling multiplies a pure bath operator and does not act on the system.
    """
    return op.filter(lambda m: m.degree > 0 and family(m) in keep)


# ---------------------------------------------------------------- generators

@dataclass(frozen=True)
class FockJump:
    """Jump operator |bra><ket| on a single mode (qubit)."""

    bra: int
    ket: int

    def to_matrix(self, t: float = 0.0, trunc=(8, 1), freqs=None) -> np.ndarray:
        dq, dc = int(trunc[0]), int(trunc[1])
        m = np.zeros((dq, dq), dtype=complex)
        if self.bra < dq and self.ket < dq:
            m[self.bra, self.ket] = 1.0
        return np.kron(m, np.eye(dc))


@dataclass(frozen=True)
class Dissipator:
    name: str
    rate: float
    op: object  # OperatorPoly or FockJump
    label: Optional[Tuple[int, int, int]] = None
    omega: Optional[float] = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "rate": self.rate, "label": list(self.label) if self.label else None,
               "omega": self.omega}
        if isinstance(self.op, OperatorPoly):
            out["terms"] = [
                {"monomial": str(m), "re": c[STATIC].real, "im": c[STATIC].imag}
                for m, c in sorted(self.op.items(), key=lambda kv: -abs(kv[1][STATIC]))
            ]
        else:
            out["fock"] = [self.op.bra, self.op.ket]
        return out


@dataclass(frozen=True)
class MEGenerator:
    variant: str
    hamiltonian: OperatorPoly
    dissipators: Tuple[Dissipator, ...]
    freqs: Frequencies
    two_mode: bool = True
    frame: str = "displaced"
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "frame": self.frame,
            "two_mode": self.two_mode,
            "freqs": list(self.freqs),
            "hamiltonian_terms": len(self.hamiltonian),
            "dissipators": [d.to_dict() for d in self.dissipators],
            "info": self.info,
        }


PRINCIPAL_TWO_MODE = ((1, 0, 0), (0, 1, 0))


@dataclass(frozen=True)
class EMEBuild:
    """Intermediate objects of a two-mode build, kept for reports and tests."""

    nm: NormalModeData
    disp: DisplacementData
    qe: QuarticExpansion
    gen: Generator
    heff: EffectiveHamiltonian
    dressed: OperatorPoly
    collapse: CollapseSet
    spectral: SpectralDensity


def build_two_mode(
    params: CircuitParams,
    nm: Optional[NormalModeData] = None,
    spectral: Optional[SpectralDensity] = None,
    include_I4: bool = True,
) -> EMEBuild:
    """Displacement, generator, dressed bath coupling and bins for the readout circuit."""
    from .circuit_model import normal_modes

    nm = nm or normal_modes(params)
    spectral = spectral or SpectralDensity(params.kappa_flat)
    disp = steady_state_displacement(nm, params)
    qe = expand_displaced_hamiltonian(nm, disp, params)
    gen = solve_generator(qe, params)
    heff = effective_hamiltonian(qe, nm, disp, params)
    I4 = integrated_drive_terms(qe) if include_I4 else None
    dressed = dressed_quadrature(bath_quadrature(nm, "y"), gen, I4, params.epsilon)
    collapse = bin_by_frequency(dressed, qe.freqs, heff, spectral)
    return EMEBuild(nm, disp, qe, gen, heff, dressed, collapse, spectral)


def assemble_eme(
    collapse: CollapseSet,
    spectral: SpectralDensity,
    heff: EffectiveHamiltonian,
    bins: str = "principal",
    mask: str = "full",
    two_mode: bool = True,
    info: Optional[dict] = None,
) -> MEGenerator:
    """Lindblad generator with H_eff(t) and dissipators S(w_j) D[C(w_j)]."""
    if mask not in MASKS:
        raise ConfigError(f"unknown term mask {mask!r}", field="mask")
    keep = MASKS[mask]
    if bins == "principal":
        wanted = set(PRINCIPAL_TWO_MODE) if two_mode else {(1, 0, 0)}
        chosen = [b for b in collapse.bins if b.label in wanted]
    elif bins == "all":
        chosen = list(collapse.bins)
    elif bins == "all_positive":
        chosen = [b for b in collapse.bins if b.omega > 0]
    else:
        raise ConfigError(f"unknown bin selection {bins!r}", field="bins")
    diss = []
    for b in chosen:
        rate = spectral(b.omega)
        if rate <= 0:
            continue
        op = normalize_phase(apply_mask(b.op, keep))
        if not op:
            continue
        diss.append(Dissipator(f"C{b.label}", rate, op, b.label, b.omega))
    variant = "EME_full" if mask == "full" else f"EME_subset({mask})"
    if not two_mode:
        variant = "OneMode_EME"
    return MEGenerator(variant, heff.full, tuple(diss), collapse.freqs, two_mode, "displaced", info or {})


def eme_for_params(
    params: CircuitParams,
    mask: str = "full",
    bins: str = "principal",
    spectral: Optional[SpectralDensity] = None,
    include_I4: bool = True,
) -> MEGenerator:
    build = build_two_mode(params, spectral=spectral, include_I4=include_I4)
    info = {"nbar_c": build.disp.nbar_c, "abs_eta_x": abs(build.disp.eta_x), "mask": mask, "bins": bins}
    return assemble_eme(build.collapse, build.spectral, build.heff, bins, mask, True, info)


def kerr_hamiltonian(nm: NormalModeData, params: CircuitParams, with_drive: bool = True) -> OperatorPoly:
    """Kerr Hamiltonian with the undisplaced drive in the lab frame."""
    k = kerr_coefficients(nm, params)
    nq, nc = number("q"), number("c")
    H = (
        nq.scale(nm.omega_q - k["lambda_q0"])
        + nc.scale(nm.omega_c - k["lambda_c0"])
        - (nq * nc).scale(k["chi_ac"])
        - (nq * nq).scale(k["alpha_q"])
        - (nc * nc).scale(k["alpha_c"])
    )
    if with_drive and params.drive_amp != 0:
        # eps_d * sin(wd t) = eps_d (exp(i wd t) - exp(-i wd t)) / (2i)
        sine = HarmonicCoeff({(0, 0, 1): params.drive_amp / 2j, (0, 0, -1): -params.drive_amp / 2j})
        drive = quadrature_y("q").scale(nm.v_ca) + quadrature_y("c").scale(nm.v_cc)
        H = H + drive.scale(sine)
    return H


def assemble_kerr_me(
    nm: NormalModeData,
    disp: Optional[DisplacementData],
    params: CircuitParams,
    spectral: Optional[SpectralDensity] = None,
) -> MEGenerator:
    """Kerr-only control: Kerr Hamiltonian plus drive, bare dissipators D[a], D[c]."""
    spectral = spectral or SpectralDensity(params.kappa_flat)
    kq, kc = linear_rates(nm, params.kappa_flat)
    H = kerr_hamiltonian(nm, params)
    diss = []
    if kq > 0:
        diss.append(Dissipator("D[a]", 2 * kq, ladder("q"), (1, 0, 0), nm.omega_q))
    if kc > 0:
        diss.append(Dissipator("D[c]", 2 * kc, ladder("c"), (0, 1, 0), nm.omega_c))
    freqs = Frequencies(nm.omega_q, nm.omega_c, params.drive_freq)
    info = {"nbar_c": disp.nbar_c if disp else None}
    return MEGenerator("Kerr_only", H, tuple(diss), freqs, True, "lab", info)


# ---------------------------------------------------------------- one mode

@dataclass(frozen=True)
class OneModeBuild:
    eta: complex
    nbar: float
    qe: QuarticExpansion
    gen: Generator
    heff: EffectiveHamiltonian
    dressed: OperatorPoly
    collapse: CollapseSet


def build_one_mode(
    omega_q: float,
    epsilon: float,
    omega_d: float,
    kappa: float,
    drive_amp: float,
    coupling: str = "x",
    spectral: Optional[SpectralDensity] = None,
    include_I4: bool = True,
) -> OneModeBuild:
    if coupling not in ("x", "y"):
        raise ConfigError("coupling must be 'x' or 'y'", field="coupling")
    eta, _, nbar = one_mode_displacement(omega_q, omega_d, kappa, drive_amp)
    qe = expand_one_mode(omega_q, eta, omega_d, epsilon)
    gen = solve_generator(qe)
    heff = effective_hamiltonian(qe)
    I4 = integrated_drive_terms(qe) if include_I4 else None
    dressed = dressed_quadrature(bath_quadrature(None, coupling), gen, I4, epsilon)
    collapse = bin_by_frequency(dressed, qe.freqs, heff, spectral)
    return OneModeBuild(eta, nbar, qe, gen, heff, dressed, collapse)


def assemble_one_mode(
    omega_q: float,
    epsilon: float,
    omega_d: float,
    kappa: float,
    drive_amp: float,
    coupling: str = "x",
    spectral: Optional[SpectralDensity] = None,
    families: Sequence[str] = FAMILIES,
    bins: str = "all",
    include_I4: bool = True,
) -> MEGenerator:
    """One-mode EME with every dissipator family, each one switchable.

    ``kappa`` is the linear single-photon rate; the flat spectrum is
    S(w) = 2 kappa.
    """
    spectral = spectral or SpectralDensity(kappa)
    build = build_one_mode(omega_q, epsilon, omega_d, kappa, drive_amp, coupling, spectral, include_I4)
    if bins == "principal":
        chosen = [b for b in build.collapse.bins if b.label == (1, 0, 0)]
    else:
        chosen = list(build.collapse.bins)
    diss = []
    for b in chosen:
        rate = spectral(b.omega)
        if rate <= 0:
            continue
        op = normalize_phase(apply_mask(b.op, families))
        if not op:
            continue
        diss.append(Dissipator(f"C{b.label}", rate, op, b.label, b.omega))
    info = {"nbar": build.nbar, "abs_eta": abs(build.eta), "coupling": coupling}
    return MEGenerator("OneMode_EME", build.heff.full, tuple(diss), build.qe.freqs, False, "displaced", info)


def one_mode_fock_rates(
    n: int, omega_q: float, epsilon: float, omega_d: float, eta: complex, spectral: Callable[[float], float]
) -> Dict[str, float]:
    """Fock-resolved rates 2 kappa_{n,down}, 2 kappa_{n,up}, 2 kappa_{n,phi}."""
    e2 = abs(eta) ** 2
    shift = epsilon / 4 * (n + 2 * e2)
    down = n * (1 + shift) * spectral((1 - shift) * omega_q) if n >= 1 else 0.0
    up = 0.0
    if n >= 1:
        up = epsilon**2 * n * e2**2 / 64 * (
            spectral(-omega_q + 2 * omega_d) * abs(omega_q / (omega_d - omega_q)) ** 2
            + spectral(omega_q) * abs(2 * omega_d**2 / (omega_d**2 - omega_q**2)) ** 2
        )
    phi = epsilon**2 * e2 * n**2 / (omega_d**2 - omega_q**2) ** 2 * (
        omega_d**4 * spectral(omega_q) + omega_q**4 * spectral(omega_d)
    )
    return {"down": down, "up": up, "phi": phi}


def assemble_one_mode_fock(
    omega_q: float,
    epsilon: float,
    omega_d: float,
    kappa: float,
    drive_amp: float,
    dim: int,
    spectral: Optional[SpectralDensity] = None,
) -> MEGenerator:
    """Fock-resolved one-mode EME with period-averaged effective Hamiltonian."""
    spectral = spectral or SpectralDensity(kappa)
    eta, _, nbar = one_mode_displacement(omega_q, omega_d, kappa, drive_amp)
    qe = expand_one_mode(omega_q, eta, omega_d, epsilon)
    heff = effective_hamiltonian(qe)
    diss = []
    for n in range(dim):
        r = one_mode_fock_rates(n, omega_q, epsilon, omega_d, eta, spectral)
        if n >= 1 and r["down"] > 0:
            diss.append(Dissipator(f"down{n}", r["down"], FockJump(n - 1, n)))
        if n >= 1 and n < dim and r["up"] > 0:
            diss.append(Dissipator(f"up{n}", r["up"], FockJump(n, n - 1)))
        if r["phi"] > 0:
            diss.append(Dissipator(f"phi{n}", r["phi"], FockJump(n, n)))
    info = {"nbar": nbar, "abs_eta": abs(eta)}
    return MEGenerator("OneMode_Fock", heff.secular, tuple(diss), qe.freqs, False, "displaced", info)
