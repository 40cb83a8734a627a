"""Classical steady-state displacement of the driven, damped normal modes.

For a mode of frequency w, damping k and drive amplitude f (drive term
f * Y * sin(wd t)), the phase quadrature follows
x(t) = eta_x exp(-i wd t) + c.c. with

    eta_x = f (wd + i k) / (w^2 - (wd + i k)^2),
    eta_y = -i w / (wd + i k) * eta_x.

The drive reaches the qubit-like and cavity-like modes with weights v_ca and
v_cc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .circuit_model import CircuitParams, NormalModeData
from .errors import ResonanceWithoutDamping

RESONANCE_TOL = 1e-9


@dataclass(frozen=True)
class DisplacementData:
    eta_qx: complex
    eta_cx: complex
    eta_cy: complex
    eta_x: complex
    nbar_c: float
    kappa_q: float
    kappa_c: float
    eta_qy: complex = 0j

    def to_dict(self) -> dict:
        def c(z):
            return [z.real, z.imag]

        return {
            "eta_qx": c(self.eta_qx),
            "eta_qy": c(self.eta_qy),
            "eta_cx": c(self.eta_cx),
            "eta_cy": c(self.eta_cy),
            "eta_x": c(self.eta_x),
            "abs_eta_x": abs(self.eta_x),
            "nbar_c": self.nbar_c,
            "kappa_q": self.kappa_q,
            "kappa_c": self.kappa_c,
        }


def mode_amplitudes(force: float, omega: float, omega_d: float, kappa: float):
    """(eta_x, eta_y) for one mode driven through its charge quadrature."""
    if kappa == 0 and abs(omega_d - omega) < RESONANCE_TOL:
        raise ResonanceWithoutDamping(
            "drive is resonant with an undamped mode", omega=omega, omega_d=omega_d
        )
    z = complex(omega_d, kappa)
    eta_x = force * z / (omega**2 - z**2)
    eta_y = -1j * omega / z * eta_x if force != 0 else 0j
    return complex(eta_x), complex(eta_y)


def linear_rates(nm: NormalModeData, kappa_flat: float):
    """Single-photon rates of the normal modes at zero anharmonicity."""
    return kappa_flat * nm.v_ca**2, kappa_flat * nm.v_cc**2


def steady_state_displacement(
    nm: NormalModeData,
    params: CircuitParams,
    kappa_q: Optional[float] = None,
    kappa_c: Optional[float] = None,
) -> DisplacementData:
    if kappa_q is None or kappa_c is None:
        kq, kc = linear_rates(nm, params.kappa_flat)
        kappa_q = kq if kappa_q is None else kappa_q
        kappa_c = kc if kappa_c is None else kappa_c
    eps_d, wd = params.drive_amp, params.drive_freq
    eta_qx, eta_qy = mode_amplitudes(nm.v_ca * eps_d, nm.omega_q, wd, kappa_q)
    eta_cx, eta_cy = mode_amplitudes(nm.v_cc * eps_d, nm.omega_c, wd, kappa_c)
    eta_x = nm.u_aa * eta_qx + nm.u_ac * eta_cx
    nbar_c = abs((eta_cx + 1j * eta_cy) / 2) ** 2
    return DisplacementData(eta_qx, eta_cx, eta_cy, eta_x, float(nbar_c), kappa_q, kappa_c, eta_qy)


def drive_amp_for_target_nbar(
    target_nbar: float,
    nm: NormalModeData,
    params: CircuitParams,
    kappa_q: Optional[float] = None,
    kappa_c: Optional[float] = None,
) -> float:
    """Drive amplitude giving a cavity population ``target_nbar`` in the linear theory."""
    if target_nbar < 0:
        raise ValueError("target_nbar must be non-negative")
    if target_nbar == 0:
        return 0.0
    unit = steady_state_displacement(nm, params.with_(drive_amp=1.0), kappa_q, kappa_c)
    return math.sqrt(target_nbar / unit.nbar_c)


# ---------------------------------------------------------------- one mode

def one_mode_displacement(omega_q: float, omega_d: float, kappa: float, drive_amp: float):
    """Return (eta_x, eta_y, nbar) for a single driven, damped oscillator."""
    eta_x, eta_y = mode_amplitudes(drive_amp, omega_q, omega_d, kappa)
    nbar = abs((eta_x + 1j * eta_y) / 2) ** 2
    return eta_x, eta_y, float(nbar)


def one_mode_drive_for_nbar(target_nbar: float, omega_q: float, omega_d: float, kappa: float) -> float:
    if target_nbar < 0:
        raise ValueError("target_nbar must be non-negative")
    if target_nbar == 0:
        return 0.0
    _, _, unit = one_mode_displacement(omega_q, omega_d, kappa, 1.0)
    return math.sqrt(target_nbar / unit)
