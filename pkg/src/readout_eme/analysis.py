"""Rate extraction and the three numerical experiments.

Each sweep point is an independent propagation, so sweeps fan out over a
process pool and gather results in input order.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .circuit_model import CircuitParams, NormalModeData, critical_photon_number, normal_modes
from .displacement import (
    drive_amp_for_target_nbar,
    linear_rates,
    one_mode_displacement,
    one_mode_drive_for_nbar,
    steady_state_displacement,
)
from .eme_builder import (
    MASKS,
    FAMILIES,
    SpectralDensity,
    assemble_eme,
    assemble_kerr_me,
    assemble_one_mode,
    build_two_mode,
)
from .errors import ConfigError, NonMonotoneData
from .lindblad_engine import Trajectory, Truncation, fock_state, propagate
from .operator_algebra import STATIC, Monomial
from .sw_generator import kerr_coefficients

POWER_VARIANTS = ("EME_full", "Kerr_only", "no-correlated-ac", "no-dephasing", "single-photon-only")


# ---------------------------------------------------------------- fitting

@dataclass(frozen=True)
class RateFit:
    kappa: float
    kappa_err: float
    frequency_residual: float
    rms_residual: float
    fit_window: Tuple[float, float]
    points: int


def fit_rate(
    traj: Trajectory,
    observable: str = "n_q",
    window: Optional[Tuple[float, float]] = None,
    kappa_c: Optional[float] = None,
) -> RateFit:
    """Fit <n>(t) = A exp(-2 kappa t) by least squares on ln<n>.

    The window defaults to [5/kappa_c, t_end] so the cavity has rung up.
    """
    t = np.asarray(traj.times, dtype=float)
    y = np.real(np.asarray(traj.observables[observable]))
    if window is None:
        t0 = 5.0 / kappa_c if kappa_c else 0.0
        window = (t0, float(t[-1]))
    return fit_series(t, y, window)


def fit_series(t: np.ndarray, y: np.ndarray, window: Tuple[float, float]) -> RateFit:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if sel.sum() < 3:
        raise ConfigError("fit window holds fewer than three samples", window=list(window))
    ts, ys = t[sel], y[sel]
    if np.any(ys <= 0):
        raise NonMonotoneData("observable is not positive inside the fit window", window=list(window))
    ly = np.log(ys)
    X = np.vstack([ts, np.ones_like(ts)]).T
    coef, _, _, _ = np.linalg.lstsq(X, ly, rcond=None)
    resid = ly - X @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    dof = max(len(ts) - 2, 1)
    sxx = float(np.sum((ts - ts.mean()) ** 2))
    slope_err = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if sxx > 0 else math.inf
    running_min = np.minimum.accumulate(ly)
    rise = float(np.max(ly - running_min))
    if rise > max(3.0 * rms, 1e-9):
        raise NonMonotoneData(
            "log-population rises inside the fit window", rise=rise, rms_residual=rms, window=list(window)
        )
    freq = 0.0
    if len(resid) >= 8 and rms > 0:
        power = np.abs(np.fft.rfft(resid - resid.mean()))
        dt = float(ts[1] - ts[0])
        k = int(np.argmax(power[1:]) + 1)
        freq = 2 * math.pi * k / (len(resid) * dt)
    return RateFit(-coef[0] / 2, slope_err / 2, freq, rms, (float(window[0]), float(window[1])), int(sel.sum()))


# ---------------------------------------------------------------- results

@dataclass
class SweepRow:
    variant: str
    axis_value: float
    kappa: float
    kappa_err: float
    delta_kappa_norm: float = 0.0
    diagnostics: dict = field(default_factory=dict)


@dataclass
class SweepResult:
    kind: str
    axis: str
    rows: List[SweepRow]
    extra: Dict[str, list] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def variants(self) -> List[str]:
        seen = []
        for r in self.rows:
            if r.variant not in seen:
                seen.append(r.variant)
        return seen

    def series(self, variant: str) -> Tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rows if r.variant == variant]
        return np.array([r.axis_value for r in rows]), np.array([r.kappa for r in rows])

    def normalized(self, variant: str) -> Tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rows if r.variant == variant]
        return np.array([r.axis_value for r in rows]), np.array([r.delta_kappa_norm for r in rows])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["variant", "axis_value", "kappa", "kappa_err", "delta_kappa_norm"])
            for r in self.rows:
                w.writerow([r.variant, f"{r.axis_value:.12e}", f"{r.kappa:.12e}", f"{r.kappa_err:.12e}",
                            f"{r.delta_kappa_norm:.12e}"])

    def write_extra_csv(self, name: str, path) -> None:
        table = self.extra[name]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(table[0])
            for row in table[1:]:
                w.writerow([f"{v:.12e}" if isinstance(v, float) else v for v in row])


def _normalize(rows: List[SweepRow]) -> None:
    """delta kappa / kappa relative to the zero-axis point of each variant."""
    base: Dict[str, float] = {}
    for r in rows:
        if r.axis_value == 0.0:
            base[r.variant] = r.kappa
    for r in rows:
        if r.variant in base:
            r.delta_kappa_norm = 0.0 if r.axis_value == 0.0 else r.kappa / base[r.variant] - 1.0


def _run_parallel(fn, jobs: Sequence, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# ---------------------------------------------------------------- two-mode

@dataclass(frozen=True)
class ReadoutConfig:
    """Circuit, bath and numerics for the two-mode experiments."""

    omega_a_bar: float = 0.77 * math.pi
    omega_c_bar: float = math.pi
    g: float = 0.025 * math.pi
    epsilon: float = 0.1
    kappa_c_target: float = 0.01 * math.pi
    spectral_kind: str = "flat_zero_T"
    dims: Tuple[int, int] = (5, 8)
    kerr_dims: Tuple[int, int] = (5, 8)
    t_end: float = 600.0
    dt_out: float = 5.0
    fit_start: Optional[float] = None
    rtol: float = 1e-8
    atol: float = 1e-10
    bins: str = "principal"
    include_I4: bool = True

    def circuit(self) -> CircuitParams:
        return CircuitParams(self.omega_a_bar, self.omega_c_bar, self.g, self.epsilon)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = list(self.dims)
        d["kerr_dims"] = list(self.kerr_dims)
        return d


@dataclass(frozen=True)
class ReadoutSetup:
    params: CircuitParams
    nm: NormalModeData
    kappa_q: float
    kappa_c: float
    chi_ac: float

    @property
    def q_ratio(self) -> float:
        if self.kappa_q == 0:
            return math.inf
        return (self.nm.omega_q / self.nm.omega_c) * (self.kappa_c / self.kappa_q)


def readout_setup(cfg: ReadoutConfig, detuning: Optional[float] = None) -> ReadoutSetup:
    """Normal modes, flat bath strength and drive frequency.

    The bath strength is fixed so that kappa_c equals ``kappa_c_target``; the
    drive sits at w_c - chi_ac/2 unless ``detuning`` (w_c - w_d) is given.
    """
    base = cfg.circuit()
    nm = normal_modes(base)
    kappa_flat = cfg.kappa_c_target / nm.v_cc**2
    kq, kc = linear_rates(nm, kappa_flat)
    chi = kerr_coefficients(nm, base)["chi_ac"]
    delta = chi / 2 if detuning is None else detuning
    params = base.with_(kappa_flat=kappa_flat, drive_freq=nm.omega_c - delta)
    return ReadoutSetup(params, nm, kq, kc, chi)


def _trunc(dims) -> Truncation:
    return Truncation(int(dims[0]), int(dims[1]))


def _variant_generator(variant: str, setup: ReadoutSetup, params: CircuitParams, cfg: ReadoutConfig):
    spectral = SpectralDensity(params.kappa_flat, cfg.spectral_kind)
    if variant == "Kerr_only":
        return assemble_kerr_me(setup.nm, None, params, spectral), cfg.kerr_dims
    mask = "full" if variant == "EME_full" else variant
    if mask not in MASKS:
        raise ConfigError(f"unknown variant {variant!r}", field="variants")
    build = build_two_mode(params, setup.nm, spectral, cfg.include_I4)
    info = {"nbar_c": build.disp.nbar_c, "abs_eta_x": abs(build.disp.eta_x)}
    return assemble_eme(build.collapse, spectral, build.heff, cfg.bins, mask, True, info), cfg.dims


def _two_mode_point(job) -> SweepRow:
    cfg, variant, nbar, detuning, axis_value = job
    setup = readout_setup(cfg, detuning)
    params = setup.params.with_(drive_amp=drive_amp_for_target_nbar(nbar, setup.nm, setup.params))
    gen, dims = _variant_generator(variant, setup, params, cfg)
    tr = _trunc(dims)
    traj = propagate(gen, fock_state(tr, 1, 0), tr, cfg.t_end, cfg.dt_out, cfg.rtol, cfg.atol)
    t0 = cfg.fit_start if cfg.fit_start is not None else 5.0 / setup.kappa_c
    fit = fit_rate(traj, "n_q", (t0, cfg.t_end))
    diag = traj.diagnostics()
    diag.update(rms_residual=fit.rms_residual, frequency_residual=fit.frequency_residual, nbar_c=nbar)
    return SweepRow(variant, axis_value, fit.kappa, fit.kappa_err, 0.0, diag)


def power_sweep(
    cfg: ReadoutConfig,
    nbars: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5),
    variants: Sequence[str] = POWER_VARIANTS,
    workers: int = 1,
) -> SweepResult:
    jobs = [(cfg, v, float(nb), None, float(nb)) for v in variants for nb in nbars]
    rows = _run_parallel(_two_mode_point, jobs, workers)
    _normalize(rows)
    setup = readout_setup(cfg)
    meta = {
        "kappa_q": setup.kappa_q,
        "kappa_c": setup.kappa_c,
        "q_ratio": setup.q_ratio,
        "chi_ac": setup.chi_ac,
        "omega_d": setup.params.drive_freq,
        "n_crit": critical_photon_number(setup.params),
    }
    return SweepResult("power", "nbar_c", rows, {}, meta)


def near_resonant_coefficients(cfg: ReadoutConfig, nbar: float, detuning: float) -> Dict[str, float]:
    """Magnitudes of the drive-enhanced correlated terms of C(w_q) and the dephasing term of C(w_c)."""
    setup = readout_setup(cfg, detuning)
    params = setup.params.with_(drive_amp=drive_amp_for_target_nbar(nbar, setup.nm, setup.params))
    build = build_two_mode(params, setup.nm, SpectralDensity(params.kappa_flat, cfg.spectral_kind), cfg.include_I4)
    cq = build.collapse.get((1, 0, 0)).op
    cc = build.collapse.get((0, 1, 0)).op
    return {
        "a c": abs(cq[Monomial(0, 1, 0, 1)][STATIC]),
        "a c_dag": abs(cq[Monomial(0, 1, 1, 0)][STATIC]),
        "a_dag a in C(w_c)": abs(cc[Monomial(1, 1, 0, 0)][STATIC]),
    }


def power_law_exponent(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)[0])


def detuning_sweep(
    cfg: ReadoutConfig,
    nbar: float = 0.5,
    detunings_in_chi: Sequence[float] = (0.5, 1.0, 2.0, 4.0, 7.0, 10.0),
    workers: int = 1,
) -> SweepResult:
    """kappa_q of the full EME versus w_c - w_d at fixed cavity population."""
    setup = readout_setup(cfg)
    chi = setup.chi_ac
    jobs = [(cfg, "EME_full", nbar, x * chi, x * chi) for x in detunings_in_chi]
    jobs.append((cfg, "EME_full", 0.0, 10.0 * chi, 0.0))
    out = _run_parallel(_two_mode_point, jobs, workers)
    rows, baseline = out[:-1], out[-1]
    baseline.variant = "EME_undriven"
    for r in rows:
        r.delta_kappa_norm = r.kappa / baseline.kappa - 1.0
    rows.append(baseline)
    bare = SweepRow("bare_linear", 0.0, setup.kappa_q, 0.0, setup.kappa_q / baseline.kappa - 1.0)
    rows.append(bare)
    coeff_rows = [["detuning", "detuning_over_chi", "term", "magnitude"]]
    for x in detunings_in_chi:
        for term, mag in near_resonant_coefficients(cfg, nbar, x * chi).items():
            coeff_rows.append([x * chi, float(x), term, mag])
    meta = {"chi_ac": chi, "kappa_q": setup.kappa_q, "kappa_c": setup.kappa_c, "nbar_c": nbar}
    return SweepResult("detuning", "omega_c_minus_omega_d", rows, {"coefficients": coeff_rows}, meta)


# ---------------------------------------------------------------- one mode

@dataclass(frozen=True)
class OneModeConfig:
    omega_q: float = 1.0
    quality: float = 100.0
    drive_ratio: float = 1.66
    coupling: str = "x"
    spectral_kind: str = "flat_zero_T"
    dim: int = 8
    t_end: float = 100.0
    dt_out: float = 1.0
    fit_start: float = 10.0
    rtol: float = 1e-8
    atol: float = 1e-10
    bins: str = "all"
    families: Tuple[str, ...] = FAMILIES

    @property
    def kappa(self) -> float:
        return self.omega_q / (2 * self.quality)

    @property
    def omega_d(self) -> float:
        return self.drive_ratio * self.omega_q

    def to_dict(self) -> dict:
        d = asdict(self)
        d["families"] = list(self.families)
        return d


def down_rate_estimate(epsilon: float, nbar: float, cfg: OneModeConfig) -> float:
    """Single-photon estimate kappa_{1,down}/kappa = 1 + (eps/4)(1 + 2|eta|^2) for a flat bath."""
    ed = one_mode_drive_for_nbar(nbar, cfg.omega_q, cfg.omega_d, cfg.kappa)
    eta, _, _ = one_mode_displacement(cfg.omega_q, cfg.omega_d, cfg.kappa, ed)
    return 1.0 + epsilon / 4.0 * (1.0 + 2.0 * abs(eta) ** 2)


def _one_mode_point(job) -> SweepRow:
    cfg, epsilon, nbar = job
    ed = one_mode_drive_for_nbar(nbar, cfg.omega_q, cfg.omega_d, cfg.kappa)
    spectral = SpectralDensity(cfg.kappa, cfg.spectral_kind)
    gen = assemble_one_mode(cfg.omega_q, epsilon, cfg.omega_d, cfg.kappa, ed, cfg.coupling, spectral,
                            cfg.families, cfg.bins)
    tr = Truncation(cfg.dim, 1)
    traj = propagate(gen, fock_state(tr, 1, 0), tr, cfg.t_end, cfg.dt_out, cfg.rtol, cfg.atol)
    fit = fit_rate(traj, "n_q", (cfg.fit_start, cfg.t_end))
    diag = traj.diagnostics()
    diag.update(rms_residual=fit.rms_residual, ratio=fit.kappa / cfg.kappa)
    return SweepRow(f"OneMode_EME(eps={epsilon:g})", nbar, fit.kappa, fit.kappa_err, 0.0, diag)


def one_mode_sweep(
    cfg: OneModeConfig,
    epsilons: Sequence[float] = (0.0, 0.15, 0.2),
    nbars: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
    workers: int = 1,
) -> SweepResult:
    jobs = [(cfg, float(e), float(nb)) for e in epsilons for nb in nbars]
    rows = _run_parallel(_one_mode_point, jobs, workers)
    _normalize(rows)
    ratio_rows = [["epsilon", "nbar", "ratio", "analytic_estimate"]]
    for (c, e, nb), r in zip(jobs, rows):
        ratio_rows.append([e, nb, r.kappa / cfg.kappa, down_rate_estimate(e, nb, cfg)])
    meta = {"kappa_linear": cfg.kappa, "omega_d": cfg.omega_d}
    return SweepResult("one-mode", "nbar", rows, {"ratios": ratio_rows}, meta)


def slope(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)[0])


def r_squared(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    c = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - np.polyval(c, x)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
