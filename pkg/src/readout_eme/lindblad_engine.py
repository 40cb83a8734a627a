"""Dense density-matrix propagation of time-dependent Lindblad generators.

The generator is lowered once to matrices: the Hamiltonian is split by
frequency label, H(t) = sum_L exp(i nu_L t) H_L, and the dissipators become
fixed jump matrices.  Integration uses an embedded Dormand-Prince 5(4) pair
with per-step re-Hermitization.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .eme_builder import FockJump, MEGenerator
from .errors import AdaptiveFailure, ConfigError, DimensionMismatch
from .operator_algebra import STATIC, Frequencies, HarmonicCoeff, OperatorPoly, to_matrix

DEFAULT_CAP = 64

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


@dataclass(frozen=True)
class Truncation:
    dim_q: int
    dim_c: int = 1
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.dim_q < 1 or self.dim_c < 1:
            raise ConfigError("truncation dimensions must be positive", field="truncation")
        if self.dim_q * self.dim_c > self.cap:
            raise ConfigError(
                f"total dimension {self.dim_q * self.dim_c} exceeds cap {self.cap}", field="truncation"
            )

    @property
    def dims(self) -> Tuple[int, int]:
        return (self.dim_q, self.dim_c)

    @property
    def size(self) -> int:
        return self.dim_q * self.dim_c


def fock_state(trunc: Truncation, n_q: int, n_c: int = 0) -> np.ndarray:
    if n_q >= trunc.dim_q or n_c >= trunc.dim_c:
        raise DimensionMismatch("Fock state outside truncation", state=(n_q, n_c), trunc=trunc.dims)
    psi = np.zeros(trunc.size, dtype=complex)
    psi[n_q * trunc.dim_c + n_c] = 1.0
    return np.outer(psi, psi.conj())


@dataclass
class Trajectory:
    times: np.ndarray
    observables: Dict[str, np.ndarray]
    rho_final: np.ndarray
    max_hermiticity_drift: float
    truncation_leak: bool
    leak_population: float
    steps: int
    rejected: int
    variant: str = ""
    warnings: List[str] = field(default_factory=list)

    def diagnostics(self) -> dict:
        tr = self.observables["trace"]
        return {
            "max_trace_error": float(np.max(np.abs(tr - 1))),
            "max_hermiticity_drift": self.max_hermiticity_drift,
            "min_eigenvalue": float(np.min(self.observables["min_eig"])),
            "truncation_leak": self.truncation_leak,
            "leak_population": self.leak_population,
            "steps": self.steps,
            "rejected": self.rejected,
        }

    def to_csv(self, path) -> None:
        names = [k for k in self.observables if k not in ("trace", "min_eig")]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            header = ["time"]
            for k in names:
                header += [f"re_{k}", f"im_{k}"]
            w.writerow(header + ["trace_error", "min_eig"])
            for i, t in enumerate(self.times):
                row = [f"{t:.12e}"]
                for k in names:
                    z = complex(self.observables[k][i])
                    row += [f"{z.real:.12e}", f"{z.imag:.12e}"]
                row += [f"{abs(self.observables['trace'][i] - 1):.12e}", f"{self.observables['min_eig'][i].real:.12e}"]
                w.writerow(row)


def label_matrices(P: OperatorPoly, trunc: Truncation) -> Dict[tuple, np.ndarray]:
    """Split P(t) = sum_L exp(i nu_L t) M_L into static matrices M_L."""
    by_label: Dict[tuple, Dict] = {}
    for mono, coeff in P.items():
        for lab, amp in coeff.items():
            by_label.setdefault(lab, {})[mono] = HarmonicCoeff.constant(amp)
    return {lab: to_matrix(OperatorPoly(terms), 0.0, trunc.dims) for lab, terms in by_label.items()}


def number_matrices(trunc: Truncation):
    iq, ic = np.eye(trunc.dim_q), np.eye(trunc.dim_c)
    nq = np.kron(np.diag(np.arange(trunc.dim_q, dtype=float)), ic).astype(complex)
    nc = np.kron(iq, np.diag(np.arange(trunc.dim_c, dtype=float))).astype(complex)
    return nq, nc


def _jump_matrix(op, trunc: Truncation) -> np.ndarray:
    if isinstance(op, FockJump):
        return op.to_matrix(0.0, trunc.dims)
    if op.labels() - {STATIC}:
        raise ConfigError("collapse operators must be time independent")
    return to_matrix(op, 0.0, trunc.dims)


class LoweredGenerator:
    """Matrix form of an MEGenerator on a fixed truncation."""

    def __init__(self, gen: MEGenerator, trunc: Truncation):
        self.trunc = trunc
        self.freqs = gen.freqs
        mats = label_matrices(gen.hamiltonian, trunc)
        n = trunc.size
        h0 = mats.pop(STATIC, np.zeros((n, n), dtype=complex))
        self.jumps = []
        loss = np.zeros((n, n), dtype=complex)
        for d in gen.dissipators:
            if d.rate <= 0:
                continue
            L = _jump_matrix(d.op, trunc)
            self.jumps.append((d.rate, L, L.conj().T))
            loss += d.rate * (L.conj().T @ L)
        self.k0 = h0 - 0.5j * loss
        self.osc = [(gen.freqs.value(lab), M) for lab, M in mats.items()]

    def kernel(self, t: float) -> np.ndarray:
        K = self.k0
        if self.osc:
            K = K.copy()
            for nu, M in self.osc:
                K += np.exp(1j * nu * t) * M
        return K

    def rhs(self, t: float, rho: np.ndarray) -> np.ndarray:
        A = self.kernel(t) @ rho
        out = -1j * (A - A.conj().T)
        for rate, L, Ld in self.jumps:
            out += rate * (L @ rho @ Ld)
        return out


def _err_norm(err, y0, y1, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _top_population(rho: np.ndarray, trunc: Truncation) -> float:
    dq, dc = trunc.dims
    p = np.real(np.diag(rho)).reshape(dq, dc)
    worst = 0.0
    if dq > 2:
        worst = max(worst, float(p[-2:, :].sum()))
    if dc > 2:
        worst = max(worst, float(p[:, -2:].sum()))
    return worst


def propagate(
    gen: MEGenerator,
    rho0: np.ndarray,
    trunc: Truncation,
    t_end: float,
    dt_out: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_steps: int = 5_000_000,
    h_init: Optional[float] = None,
    leak_tol: float = 1e-4,
) -> Trajectory:
    """Integrate d rho/dt = L(t) rho from 0 to t_end, sampling every dt_out."""
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (trunc.size, trunc.size):
        raise DimensionMismatch("rho0 does not match truncation", shape=rho0.shape, trunc=trunc.dims)
    if t_end <= 0 or dt_out <= 0:
        raise ConfigError("t_end and dt_out must be positive", field="time")
    if np.linalg.norm(rho0 - rho0.conj().T) > 1e-12:
        raise ConfigError("rho0 must be Hermitian", field="rho0")
    if abs(np.trace(rho0) - 1) > 1e-10:
        raise ConfigError("rho0 must have unit trace", field="rho0")
    if np.linalg.eigvalsh(rho0)[0] < -1e-10:
        raise ConfigError("rho0 must be positive semidefinite", field="rho0")

    low = LoweredGenerator(gen, trunc)
    nq, nc = number_matrices(trunc)

    n_out = int(math.floor(t_end / dt_out + 1e-9)) + 1
    t_grid = np.arange(n_out) * dt_out
    obs = {k: np.zeros(n_out, dtype=complex if k in ("n_q", "n_c") else float)
           for k in ("n_q", "n_c", "trace", "min_eig", "purity")}

    def record(i, r):
        obs["n_q"][i] = np.trace(nq @ r)
        obs["n_c"][i] = np.trace(nc @ r)
        obs["trace"][i] = np.trace(r).real
        obs["min_eig"][i] = np.linalg.eigvalsh(r)[0]
        obs["purity"][i] = np.real(np.vdot(r, r))

    rho = rho0.copy()
    record(0, rho)
    t = 0.0
    h = h_init or min(dt_out, 0.05)
    steps = rejected = 0
    drift = 0.0
    leak = _top_population(rho, trunc)
    k1 = low.rhs(t, rho)
    for i in range(1, n_out):
        target = t_grid[i]
        while t < target - 1e-12 * max(1.0, target):
            if steps + rejected > max_steps:
                raise AdaptiveFailure("step budget exhausted", t=t, h=h, steps=steps, rejected=rejected)
            h = min(h, target - t)
            ks = [k1]
            for s in range(1, 7):
                y = rho
                for a, k in zip(_A[s], ks):
                    if a:
                        y = y + (h * a) * k
                ks.append(low.rhs(t + _C[s] * h, y))
            y_new = y  # stage 7 argument equals the 5th-order solution (FSAL)
            err = sum((h * e) * k for e, k in zip(_E, ks) if e)
            en = _err_norm(err, rho, y_new, rtol, atol)
            if not np.isfinite(en):
                raise AdaptiveFailure("non-finite error estimate", t=t, h=h)
            if en <= 1.0:
                t += h
                drift = max(drift, float(np.linalg.norm(y_new - y_new.conj().T)))
                rho = 0.5 * (y_new + y_new.conj().T)
                # the generator preserves Hermiticity, so the FSAL stage is symmetrized too
                k1 = 0.5 * (ks[6] + ks[6].conj().T)
                steps += 1
                fac = 0.9 * en ** -0.2 if en > 0 else 5.0
                h = h * min(5.0, max(0.2, fac))
            else:
                rejected += 1
                h = h * max(0.1, 0.9 * en ** -0.25)
                if h < 1e-14 * max(1.0, t):
                    raise AdaptiveFailure("step size underflow", t=t, h=h, error_norm=en)
        record(i, rho)
        leak = max(leak, _top_population(rho, trunc))
    warnings = []
    flagged = leak > leak_tol
    if flagged:
        warnings.append(f"TruncationLeak: top-level population {leak:.3e} exceeds {leak_tol:.0e}")
    return Trajectory(t_grid, obs, rho, drift, flagged, leak, steps, rejected, gen.variant, warnings)


def expectation(rho: np.ndarray, op, t: float = 0.0, trunc=None, freqs: Optional[Frequencies] = None) -> complex:
    """Tr[rho op(t)] for an OperatorPoly or a dense matrix."""
    rho = np.asarray(rho)
    if isinstance(op, OperatorPoly):
        if trunc is None:
            raise DimensionMismatch("a truncation is needed to lower an OperatorPoly")
        dims = trunc.dims if isinstance(trunc, Truncation) else tuple(trunc)
        if dims[0] * dims[1] != rho.shape[0]:
            raise DimensionMismatch("rho does not match truncation", shape=rho.shape, trunc=dims)
        mat = to_matrix(op, t, dims, freqs)
    else:
        mat = np.asarray(op)
    if mat.shape != rho.shape:
        raise DimensionMismatch("operator and rho shapes differ", op=mat.shape, rho=rho.shape)
    return complex(np.sum(rho * mat.T))
