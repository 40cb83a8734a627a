"""Circuit parameters and exact normal modes of the quadratic transmon-cavity circuit.

The quadratic part of the circuit Hamiltonian reads

    H2 = Xb^T A Xb + Yb^T B Yb,   A = diag(wa, wc)/4,
                                  B = [[wa/4, g/2], [g/2, wc/4]],

in bare quadratures with [Xb_i, Yb_j] = 2i delta_ij.  Writing Xb = U X and
Yb = V Y with V = U^{-T} keeps the commutators, and the choice
U = A^{-1/2} O Lambda^{1/4} (O Lambda O^T the eigendecomposition of
A^{1/2} B A^{1/2}) makes both blocks equal to diag(omega_j)/4.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError, DegenerateDetuning, NonPositiveDefinite


@dataclass(frozen=True)
class CircuitParams:
    omega_a_bar: float
    omega_c_bar: float
    g: float
    epsilon: float
    drive_amp: float = 0.0
    drive_freq: float = 0.0
    kappa_flat: float = 0.0

    def __post_init__(self):
        for name, val in asdict(self).items():
            if not math.isfinite(val):
                raise ConfigError(f"{name} must be finite", field=name)
        if self.omega_a_bar <= 0:
            raise ConfigError("omega_a_bar must be positive", field="omega_a_bar")
        if self.omega_c_bar <= 0:
            raise ConfigError("omega_c_bar must be positive", field="omega_c_bar")
        if not 0 <= self.epsilon < 1:
            raise ConfigError("epsilon must lie in [0, 1)", field="epsilon")
        if self.g < 0:
            raise ConfigError("g must be non-negative", field="g")
        if self.kappa_flat < 0:
            raise ConfigError("kappa_flat must be non-negative", field="kappa_flat")
        if self.drive_freq < 0:
            raise ConfigError("drive_freq must be non-negative", field="drive_freq")
        detuning = abs(self.omega_c_bar - self.omega_a_bar)
        if self.g > 0 and (detuning == 0 or self.g / detuning > 0.3):
            warnings.warn("coupling is outside the dispersive regime (g/|Delta| > 0.3)", stacklevel=3)

    def with_(self, **changes) -> "CircuitParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NormalModeData:
    omega_q: float
    omega_c: float
    u: np.ndarray  # [[u_aa, u_ac], [u_ca, u_cc]]
    v: np.ndarray  # [[v_aa, v_ac], [v_ca, v_cc]]

    @property
    def u_aa(self) -> float:
        return float(self.u[0, 0])

    @property
    def u_ac(self) -> float:
        return float(self.u[0, 1])

    @property
    def u_ca(self) -> float:
        return float(self.u[1, 0])

    @property
    def u_cc(self) -> float:
        return float(self.u[1, 1])

    @property
    def v_aa(self) -> float:
        return float(self.v[0, 0])

    @property
    def v_ac(self) -> float:
        return float(self.v[0, 1])

    @property
    def v_ca(self) -> float:
        return float(self.v[1, 0])

    @property
    def v_cc(self) -> float:
        return float(self.v[1, 1])

    def to_dict(self) -> dict:
        return {
            "omega_q": self.omega_q,
            "omega_c": self.omega_c,
            "u": self.u.tolist(),
            "v": self.v.tolist(),
        }


def quadratic_blocks(params: CircuitParams):
    A = np.diag([params.omega_a_bar, params.omega_c_bar]) / 4.0
    B = np.array(
        [[params.omega_a_bar / 4.0, params.g / 2.0], [params.g / 2.0, params.omega_c_bar / 4.0]]
    )
    return A, B


def normal_modes(params: CircuitParams) -> NormalModeData:
    A, B = quadratic_blocks(params)
    if np.linalg.eigvalsh(B)[0] <= 0:
        raise NonPositiveDefinite(
            "charge block of the quadratic form is not positive definite; g is too large",
            g=params.g,
        )
    sa = np.sqrt(np.diag(A))
    M = (sa[:, None] * B) * sa[None, :]
    lam, O = np.linalg.eigh(M)
    # label by overlap with the bare qubit, not by frequency order
    if abs(O[0, 0]) < abs(O[0, 1]):
        O = O[:, ::-1]
        lam = lam[::-1]
    U = (O / sa[:, None]) * lam[None, :] ** 0.25
    # sign convention: u_aa > 0, u_cc > 0
    for j in range(2):
        if U[j, j] < 0:
            U[:, j] = -U[:, j]
    V = np.linalg.inv(U).T
    omegas = 4.0 * np.sqrt(lam)
    return NormalModeData(float(omegas[0]), float(omegas[1]), U, V)


def critical_photon_number(params: CircuitParams) -> float:
    delta = params.omega_c_bar - params.omega_a_bar
    if delta == 0:
        raise DegenerateDetuning("omega_a_bar equals omega_c_bar")
    if params.g == 0:
        return math.inf
    return (delta / (2.0 * params.g)) ** 2


def readout_params(**changes) -> CircuitParams:
    """Parameters of the readout configuration used in the power sweeps."""
    base = CircuitParams(omega_a_bar=0.77 * math.pi, omega_c_bar=math.pi, g=0.025 * math.pi, epsilon=0.1)
    return replace(base, **changes) if changes else base
