"""Command-line front end.

    readout-eme normal-modes  [--config PATH] [--preset NAME] [--out DIR]
    readout-eme build-eme     [...]
    readout-eme simulate      [...]
    readout-eme sweep {power,detuning,one-mode} [...] [--workers N]

Every run writes into a fresh timestamped directory below ``--out`` and
finishes with a ``manifest.json`` whose ``config`` entry can be fed back
through ``--config`` to repeat the run.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from . import __version__
from .analysis import (
    POWER_VARIANTS,
    OneModeConfig,
    ReadoutConfig,
    _variant_generator,
    detuning_sweep,
    fit_rate,
    one_mode_sweep,
    power_sweep,
    readout_setup,
)
from .circuit_model import critical_photon_number, normal_modes
from .displacement import drive_amp_for_target_nbar, steady_state_displacement
from .eme_builder import MASKS, SpectralDensity, assemble_eme, build_two_mode
from .errors import ConfigError, EMEError
from .lindblad_engine import Truncation, fock_state, propagate
from .sw_generator import kerr_coefficients

PRESETS = ("fig2", "fig4", "fig5")

# schema: section -> {key: kind}; kinds: num, int, str, bool, numlist, strlist, opt_num
SCHEMA: Dict[str, Dict[str, str]] = {
    "circuit": {"omega_a_bar": "num", "omega_c_bar": "num", "g": "num", "epsilon": "num"},
    "bath": {"kappa_c_target": "num", "spectral": "str"},
    "drive": {"nbar_c": "num", "detuning": "opt_num"},
    "model": {"variant": "str", "bins": "str", "include_I4": "bool"},
    "truncation": {"dim_q": "int", "dim_c": "int", "kerr_dim_q": "int", "kerr_dim_c": "int"},
    "time": {"t_end": "num", "dt_out": "num", "fit_start": "opt_num", "rtol": "num", "atol": "num"},
    "sweep": {"nbars": "numlist", "variants": "strlist", "detunings_in_chi": "numlist", "nbar_c": "num"},
    "one_mode": {
        "omega_q": "num", "quality": "num", "drive_ratio": "num", "coupling": "str", "spectral": "str",
        "dim": "int", "t_end": "num", "dt_out": "num", "fit_start": "num", "epsilons": "numlist",
        "nbars": "numlist", "bins": "str",
    },
}
TOP_LEVEL = {"experiment": "str", "workers": "int"}

DEFAULTS: Dict[str, Any] = {
    "experiment": "power",
    "workers": 1,
    "circuit": {"omega_a_bar": 0.77 * math.pi, "omega_c_bar": math.pi, "g": 0.025 * math.pi, "epsilon": 0.1},
    "bath": {"kappa_c_target": 0.01 * math.pi, "spectral": "flat_zero_T"},
    "drive": {"nbar_c": 1.0, "detuning": None},
    "model": {"variant": "EME_full", "bins": "principal", "include_I4": True},
    "truncation": {"dim_q": 5, "dim_c": 8, "kerr_dim_q": 5, "kerr_dim_c": 8},
    "time": {"t_end": 600.0, "dt_out": 5.0, "fit_start": None, "rtol": 1e-8, "atol": 1e-10},
    "sweep": {
        "nbars": [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5],
        "variants": list(POWER_VARIANTS),
        "detunings_in_chi": [0.5, 1.0, 2.0, 4.0, 7.0, 10.0],
        "nbar_c": 0.5,
    },
    "one_mode": {
        "omega_q": 1.0, "quality": 100.0, "drive_ratio": 1.66, "coupling": "x", "spectral": "flat_zero_T",
        "dim": 8, "t_end": 100.0, "dt_out": 1.0, "fit_start": 10.0, "epsilons": [0.0, 0.15, 0.2],
        "nbars": [0.0, 0.25, 0.5, 0.75, 1.0], "bins": "all",
    },
}

CHOICES = {
    "experiment": ("power", "detuning", "one-mode"),
    "bath.spectral": ("flat_zero_T", "flat_all"),
    "one_mode.spectral": ("flat_zero_T", "flat_all"),
    "model.variant": ("EME_full", "Kerr_only") + tuple(m for m in MASKS if m != "full"),
    "model.bins": ("principal", "all_positive", "all"),
    "one_mode.bins": ("principal", "all"),
    "one_mode.coupling": ("x", "y"),
}


# ---------------------------------------------------------------- config

def _check_value(path: str, kind: str, val):
    def bad(msg):
        raise ConfigError(f"{path}: {msg}", field=path)

    if kind == "opt_num" and val is None:
        return None
    if kind in ("num", "opt_num"):
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            bad("expected a number")
        if not math.isfinite(val):
            bad("must be finite")
        return float(val)
    if kind == "int":
        if isinstance(val, bool) or not isinstance(val, int):
            bad("expected an integer")
        if val < 1:
            bad("must be positive")
        return val
    if kind == "bool":
        if not isinstance(val, bool):
            bad("expected true or false")
        return val
    if kind == "str":
        if not isinstance(val, str):
            bad("expected a string")
        if path in CHOICES and val not in CHOICES[path]:
            bad(f"must be one of {list(CHOICES[path])}")
        return val
    if kind == "numlist":
        if not isinstance(val, list) or not val:
            bad("expected a non-empty list of numbers")
        return [_check_value(f"{path}[{i}]", "num", v) for i, v in enumerate(val)]
    if kind == "strlist":
        if not isinstance(val, list) or not val or not all(isinstance(v, str) for v in val):
            bad("expected a non-empty list of strings")
        allowed = CHOICES["model.variant"]
        for v in val:
            if v not in allowed:
                bad(f"unknown variant {v!r}")
        return list(val)
    raise AssertionError(kind)


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(raw: dict) -> dict:
    """Reject unknown keys and ill-typed or non-finite values; fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object", field="<root>")
    for k in raw:
        if k not in SCHEMA and k not in TOP_LEVEL:
            raise ConfigError(f"unknown key {k!r}", field=k)
    for sec, keys in SCHEMA.items():
        if sec in raw:
            if not isinstance(raw[sec], dict):
                raise ConfigError(f"{sec}: expected an object", field=sec)
            for k in raw[sec]:
                if k not in keys:
                    raise ConfigError(f"unknown key {sec}.{k}", field=f"{sec}.{k}")
    cfg = merge(DEFAULTS, raw)
    for k, kind in TOP_LEVEL.items():
        cfg[k] = _check_value(k, kind, cfg[k])
    for sec, keys in SCHEMA.items():
        for k, kind in keys.items():
            cfg[sec][k] = _check_value(f"{sec}.{k}", kind, cfg[sec][k])
    c = cfg["circuit"]
    if not 0 <= c["epsilon"] < 1:
        raise ConfigError("circuit.epsilon: must lie in [0, 1)", field="circuit.epsilon")
    for k in ("omega_a_bar", "omega_c_bar"):
        if c[k] <= 0:
            raise ConfigError(f"circuit.{k}: must be positive", field=f"circuit.{k}")
    if c["g"] < 0:
        raise ConfigError("circuit.g: must be non-negative", field="circuit.g")
    if cfg["bath"]["kappa_c_target"] <= 0:
        raise ConfigError("bath.kappa_c_target: must be positive", field="bath.kappa_c_target")
    if cfg["drive"]["nbar_c"] < 0:
        raise ConfigError("drive.nbar_c: must be non-negative", field="drive.nbar_c")
    for k in ("t_end", "dt_out", "rtol", "atol"):
        if cfg["time"][k] <= 0:
            raise ConfigError(f"time.{k}: must be positive", field=f"time.{k}")
    for i, nb in enumerate(cfg["sweep"]["nbars"]):
        if nb < 0:
            raise ConfigError(f"sweep.nbars[{i}]: must be non-negative", field=f"sweep.nbars[{i}]")
    for i, x in enumerate(cfg["sweep"]["detunings_in_chi"]):
        if x <= 0:
            raise ConfigError(f"sweep.detunings_in_chi[{i}]: must be positive", field=f"sweep.detunings_in_chi[{i}]")
    om = cfg["one_mode"]
    for k in ("omega_q", "quality", "drive_ratio", "t_end", "dt_out"):
        if om[k] <= 0:
            raise ConfigError(f"one_mode.{k}: must be positive", field=f"one_mode.{k}")
    for i, e in enumerate(om["epsilons"]):
        if not 0 <= e < 1:
            raise ConfigError(f"one_mode.epsilons[{i}]: must lie in [0, 1)", field=f"one_mode.epsilons[{i}]")
    return cfg


def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}", field="--preset")
    text = resources.files("readout_eme").joinpath("presets", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_config(path: Optional[str], preset: Optional[str]) -> dict:
    raw: dict = load_preset(preset) if preset else {}
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", field="--config") from None
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None
        if not isinstance(user, dict):
            raise ConfigError("configuration must be a JSON object", field="<root>")
        raw = merge(raw, user)
    return validate(raw)


def readout_config(cfg: dict) -> ReadoutConfig:
    c, tr, tm, m = cfg["circuit"], cfg["truncation"], cfg["time"], cfg["model"]
    return ReadoutConfig(
        omega_a_bar=c["omega_a_bar"], omega_c_bar=c["omega_c_bar"], g=c["g"], epsilon=c["epsilon"],
        kappa_c_target=cfg["bath"]["kappa_c_target"], spectral_kind=cfg["bath"]["spectral"],
        dims=(tr["dim_q"], tr["dim_c"]), kerr_dims=(tr["kerr_dim_q"], tr["kerr_dim_c"]),
        t_end=tm["t_end"], dt_out=tm["dt_out"], fit_start=tm["fit_start"], rtol=tm["rtol"], atol=tm["atol"],
        bins=m["bins"], include_I4=m["include_I4"],
    )


def one_mode_config(cfg: dict) -> OneModeConfig:
    om = cfg["one_mode"]
    return OneModeConfig(
        omega_q=om["omega_q"], quality=om["quality"], drive_ratio=om["drive_ratio"], coupling=om["coupling"],
        spectral_kind=om["spectral"], dim=om["dim"], t_end=om["t_end"], dt_out=om["dt_out"],
        fit_start=om["fit_start"], rtol=cfg["time"]["rtol"], atol=cfg["time"]["atol"], bins=om["bins"],
    )


# ---------------------------------------------------------------- runs

@dataclass
class RunContext:
    cfg: dict
    out: Path
    command: str
    outputs: list

    def write_json(self, name: str, data) -> Path:
        p = self.out / name
        p.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
        self.outputs.append(name)
        return p

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    if isinstance(v, complex):
        return [_jsonable(v.real), _jsonable(v.imag)]
    if isinstance(v, float) and not math.isfinite(v):
        return None  # strict JSON has no inf; g = 0 gives n_crit = inf
    return v


def make_run_dir(base: str, command: str) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    run = Path(base) / f"{stamp}-{command.replace(' ', '-')}"
    run.mkdir(parents=True, exist_ok=False)
    return run


def cmd_normal_modes(ctx: RunContext) -> dict:
    setup = readout_setup(readout_config(ctx.cfg))
    nm = setup.nm
    k = kerr_coefficients(nm, setup.params)
    report = {
        "omega_q": nm.omega_q,
        "omega_c": nm.omega_c,
        "u": nm.u,
        "v": nm.v,
        "n_crit": critical_photon_number(setup.params),
        "chi_ac": k["chi_ac"],
        "chi_ac_over_omega_c_bar": k["chi_ac"] / setup.params.omega_c_bar,
        "alpha_q": k["alpha_q"],
        "alpha_c": k["alpha_c"],
        "kappa_flat": setup.params.kappa_flat,
        "kappa_q": setup.kappa_q,
        "kappa_c": setup.kappa_c,
        "q_ratio": setup.q_ratio,
        "omega_d": setup.params.drive_freq,
    }
    ctx.write_json("normal_modes.json", report)
    return report


def _driven_params(ctx: RunContext):
    rc = readout_config(ctx.cfg)
    setup = readout_setup(rc, ctx.cfg["drive"]["detuning"])
    nb = ctx.cfg["drive"]["nbar_c"]
    params = setup.params.with_(drive_amp=drive_amp_for_target_nbar(nb, setup.nm, setup.params))
    return rc, setup, params


def cmd_build_eme(ctx: RunContext) -> dict:
    rc, setup, params = _driven_params(ctx)
    spectral = SpectralDensity(params.kappa_flat, rc.spectral_kind)
    build = build_two_mode(params, setup.nm, spectral, rc.include_I4)
    variant = ctx.cfg["model"]["variant"]
    mask = "full" if variant in ("EME_full", "Kerr_only") else variant
    gen = assemble_eme(build.collapse, spectral, build.heff, rc.bins, mask, True)
    report = {
        "params": params.to_dict(),
        "normal_modes": setup.nm.to_dict(),
        "displacement": build.disp.to_dict(),
        "effective_hamiltonian": build.heff.to_dict(),
        "bins": [b.to_dict() for b in build.collapse.bins],
        "generator": gen.to_dict(),
    }
    ctx.write_json("eme.json", report)
    return {"bins": len(build.collapse.bins), "abs_eta_x": abs(build.disp.eta_x), "nbar_c": build.disp.nbar_c,
            "dissipators": len(gen.dissipators)}


def cmd_simulate(ctx: RunContext) -> dict:
    rc, setup, params = _driven_params(ctx)
    variant = ctx.cfg["model"]["variant"]
    gen, dims = _variant_generator(variant, setup, params, rc)
    tr = Truncation(*dims)
    traj = propagate(gen, fock_state(tr, 1, 0), tr, rc.t_end, rc.dt_out, rc.rtol, rc.atol)
    traj.to_csv(ctx.path("trajectory.csv"))
    t0 = rc.fit_start if rc.fit_start is not None else 5.0 / setup.kappa_c
    fit = fit_rate(traj, "n_q", (t0, rc.t_end))
    summary = {
        "variant": variant,
        "kappa": fit.kappa,
        "kappa_err": fit.kappa_err,
        "kappa_over_bare": fit.kappa / setup.kappa_q,
        "fit_window": list(fit.fit_window),
        "rms_residual": fit.rms_residual,
        "diagnostics": traj.diagnostics(),
        "warnings": traj.warnings,
    }
    ctx.write_json("fit.json", summary)
    return summary


def cmd_sweep(ctx: RunContext, kind: str) -> dict:
    workers = ctx.cfg["workers"]
    sw = ctx.cfg["sweep"]
    if kind == "power":
        res = power_sweep(readout_config(ctx.cfg), sw["nbars"], sw["variants"], workers)
    elif kind == "detuning":
        res = detuning_sweep(readout_config(ctx.cfg), sw["nbar_c"], sw["detunings_in_chi"], workers)
        res.write_extra_csv("coefficients", ctx.path("coefficients.csv"))
    elif kind == "one-mode":
        om = ctx.cfg["one_mode"]
        res = one_mode_sweep(one_mode_config(ctx.cfg), om["epsilons"], om["nbars"], workers)
        res.write_extra_csv("ratios", ctx.path("ratios.csv"))
    else:
        raise ConfigError(f"unknown sweep {kind!r}", field="sweep")
    res.write_csv(ctx.path(f"sweep_{kind.replace('-', '_')}.csv"))
    diag = [{"variant": r.variant, "axis_value": r.axis_value, **r.diagnostics} for r in res.rows]
    ctx.write_json("diagnostics.json", diag)
    return {"rows": len(res.rows), "meta": res.meta}


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--preset", choices=PRESETS, help="start from a shipped preset")
    common.add_argument("--out", metavar="DIR", default="runs", help="base directory for run outputs")
    common.add_argument("--workers", type=int, metavar="N", help="parallel sweep workers")
    p = argparse.ArgumentParser(prog="readout-eme", description="Effective master equations for driven readout.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("normal-modes", parents=[common], help="normal modes, n_crit, chi and Q-ratio")
    sub.add_parser("build-eme", parents=[common], help="dump the effective master equation as JSON")
    sub.add_parser("simulate", parents=[common], help="propagate one master equation and fit kappa_q")
    sw = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    sw.add_argument("kind", choices=("power", "detuning", "one-mode"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command + (f" {args.kind}" if args.command == "sweep" else "")
    try:
        cfg = load_config(args.config, args.preset)
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers must be positive", field="--workers")
            cfg["workers"] = args.workers
        out = make_run_dir(args.out, command)
        ctx = RunContext(cfg, out, command, [])
        started = datetime.now(timezone.utc).isoformat()
        if args.command == "normal-modes":
            summary = cmd_normal_modes(ctx)
        elif args.command == "build-eme":
            summary = cmd_build_eme(ctx)
        elif args.command == "simulate":
            summary = cmd_simulate(ctx)
        else:
            summary = cmd_sweep(ctx, args.kind)
        manifest = {
            "command": command,
            "version": __version__,
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "config": cfg,
            "outputs": sorted(ctx.outputs),
            "summary": summary,
        }
        ctx.write_json("manifest.json", manifest)
        print(json.dumps(_jsonable({"run_dir": str(out), "summary": summary}), indent=2))
        return 0
    except EMEError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
