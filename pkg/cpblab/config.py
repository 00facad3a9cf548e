from __future__ import annotations

import copy
import json
import math
import os
from pathlib import Path
from typing import List, Optional

from .bose_hubbard import CpbParams
from .errors import ConfigError

# ---------------------------------------------------------------------------
# Default configuration (energies in units of E_C unless overridden)
# ---------------------------------------------------------------------------

DEFAULT_CONFIG = {
    "output_dir": None,   # --out > output_dir > $CPBLAB_OUTPUT_DIR > cwd
    "seed": 0,
    "workers": None,      # None = min(32, cpu_count)

    "box": {
        "E_C": 1.0,
        "E_J": 50.0,
        "N": 2000,
        "n_bar": 1000.0,
    },

    "spectrum": {
        "model": "bose-hubbard",     # bose-hubbard | two-mode | oscillator | phase
        "count": 5,
        "cutoff": None,              # Fock cutoff for the oscillator model
        "literal_hopping": False,    # two-mode: printed hopping rule
        "M": 60,                     # charge cutoff for the phase model
        "match_convention": True,
        "output": "spectrum.csv",
    },

    "band": {
        "M": 60,
        "count": 4,
        "points": 101,
        "match_convention": True,
        "output": "band.csv",
    },

    "dynamics": {
        "model": "pendulum",         # pendulum | gp
        "theta0": 0.1,
        "xi0": 0.0,
        "t_end": 10.0,
        "dt": 1e-3,
        "stride": 10,
        "order": 6,
        "control": {
            "kind": "constant",      # constant | gaussian_pulse | harmonic
            "amplitude": 0.0,
            "center": 0.0,
            "width": 1.0,
            "frequency": 0.0,
            "phase": 0.0,
        },
        "output": "dynamics.csv",
    },

    "coupled": {
        "model": "pendulum",         # pendulum | gp
        "box2": {"E_C": 1.0, "E_J": 50.0, "N": 2000, "n_bar": 1000.0},
        "G": 0.5,
        "theta0": 0.05,
        "xi0": 0.0,
        "theta0_2": 0.0,
        "xi0_2": 0.0,
        "t_end": 20.0,
        "dt": 1e-3,
        "stride": 10,
        "order": 6,
        "output": "coupled.csv",
    },

    "lindblad": {
        "gamma": 0.1,
        "delta": 0.01,
        "state": "coherent",         # coherent | fock
        "alpha2": 4.0,
        "fock": 4,
        "cutoff": None,
        "hamiltonian": False,        # evolve under H_b as well
        "E_C": 0.05,
        "E_J": 0.2,
        "n_bar": 4.0,
        "t_end": 5.0,
        "dt": 1e-3,
        "stride": 50,
        "output": "lindblad.csv",
    },

    "gibbs": {
        "kT": [0.1, 0.25, 0.3333333333333333, 0.5, 1.0],
        "cutoff": None,
        "output": "gibbs.csv",
    },

    "witness": {
        "paper_instance": True,
        "A": None,
        "B": None,
        "state": [0.391, 0.920],
        "tolerance": 5e-3,
        "samples": 10000,
        "dimensions": [2, 3, 4, 5, 6],
        "output": "witness.json",
    },

    "compare": {
        "models": ["bose-hubbard", "phase"],
        "count": 5,
        "match_convention": True,
        "M": 60,
        "plasma": True,
        "output": "compare.csv",
    },
}

# CLI dest -> (section, key); section None means top level
OVERRIDES = {
    "out": (None, "output_dir"),
    "seed": (None, "seed"),
    "workers": (None, "workers"),
    "ec": ("box", "E_C"),
    "ej": ("box", "E_J"),
    "N": ("box", "N"),
    "n_bar": ("box", "n_bar"),
}

COMMAND_OVERRIDES = {
    "spectrum": {"model": "model", "count": "count", "cutoff": "cutoff", "literal": "literal_hopping",
                 "M": "M", "match_convention": "match_convention"},
    "band": {"M": "M", "count": "count", "points": "points", "match_convention": "match_convention"},
    "dynamics": {"model": "model", "theta0": "theta0", "xi0": "xi0", "t_end": "t_end", "dt": "dt",
                 "stride": "stride", "order": "order"},
    "coupled": {"model": "model", "G": "G", "theta0": "theta0", "xi0": "xi0", "theta0_2": "theta0_2", "xi0_2": "xi0_2",
                "t_end": "t_end", "dt": "dt", "stride": "stride", "order": "order"},
    "lindblad": {"gamma": "gamma", "delta": "delta", "state": "state", "alpha2": "alpha2", "fock": "fock",
                 "cutoff": "cutoff", "hamiltonian": "hamiltonian", "t_end": "t_end", "dt": "dt", "stride": "stride"},
    "gibbs": {"kT": "kT", "cutoff": "cutoff"},
    "witness": {"paper_instance": "paper_instance", "tolerance": "tolerance", "samples": "samples"},
    "compare": {"models": "models", "count": "count", "match_convention": "match_convention", "M": "M"},
}


def _debug() -> bool:
    return os.getenv("CPBLAB_DEBUG") == "1"


# ---------------------------------------------------------------------------
# Loader: deep-merge user config over defaults
# ---------------------------------------------------------------------------

def merge(a: dict, b: dict) -> dict:
    for k, v in b.items():
        if isinstance(v, dict) and isinstance(a.get(k), dict):
            merge(a[k], v)
        else:
            a[k] = v
    return a


def load_config(path: Optional[Path]) -> dict:
    """Load config from JSON file and deep-merge into DEFAULT_CONFIG."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)

    if not path:
        if _debug():
            print("[debug] using DEFAULT_CONFIG (no --config provided)")
        return cfg

    path = Path(path)
    if not path.exists():
        print(f"[warn] config not found at {path}; using defaults")
        return cfg

    try:
        with path.open("r", encoding="utf-8") as f:
            user = json.load(f)
    except Exception as e:
        print(f"[warn] failed to read config {path}: {e}; using defaults")
        return cfg

    merge(cfg, user)

    print(f"[info] loaded config: {path}")
    if _debug():
        print(f"[debug] merged config: {json.dumps(cfg, sort_keys=True)}")

    return cfg


# ---------------------------------------------------------------------------
# CLI overrides and validation
# ---------------------------------------------------------------------------

def resolve(args, cfg: dict, command: str) -> dict:
    """Copy of cfg with the command's CLI flags applied, validated as a whole.

    A flag wins whenever it is not None, otherwise the config value stands.
    """
    out = copy.deepcopy(cfg)
    for dest, (section, key) in OVERRIDES.items():
        v = getattr(args, dest, None)
        if v is not None:
            (out if section is None else out.setdefault(section, {}))[key] = str(v) if isinstance(v, Path) else v
    section = out.setdefault(command, {})
    for dest, key in COMMAND_OVERRIDES.get(command, {}).items():
        v = getattr(args, dest, None)
        if v is not None:
            section[key] = v
    validate_config(out, command)
    if _debug():
        print(f"[debug] resolved {command} config: {json.dumps(out, sort_keys=True)}")
    return out


def box_params(box: dict) -> CpbParams:
    return CpbParams.from_josephson(float(box["E_C"]), float(box["E_J"]), int(box["N"]), float(box["n_bar"]))


def _num(problems: List[str], where: str, v, *, low=None, strict=False, integer=False):
    ok = isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
    if ok and integer:
        ok = float(v).is_integer()
    if ok and low is not None:
        ok = v > low if strict else v >= low
    if not ok:
        bound = "" if low is None else f" {'>' if strict else '>='} {low}"
        kind = "an integer" if integer else "a number"
        problems.append(f"{where} must be {kind}{bound} (got {v!r})")
    return ok


def _box(problems: List[str], where: str, box: dict):
    try:
        issues = CpbParams.check(float(box["E_C"]), float(box["E_J"]), box["N"], float(box["n_bar"]))
    except (KeyError, TypeError, ValueError) as e:
        problems.append(f"{where}: incomplete box parameters ({e})")
        return
    problems.extend(f"{where}.{p}" for p in issues)


def _run(problems: List[str], where: str, sec: dict):
    _num(problems, f"{where}.t_end", sec.get("t_end"), low=0, strict=True)
    _num(problems, f"{where}.dt", sec.get("dt"), low=0, strict=True)
    _num(problems, f"{where}.stride", sec.get("stride"), low=1, integer=True)


def validate_config(cfg: dict, command: str) -> None:
    """Raise ConfigError listing every violated precondition of `command`."""
    from .compare import MODELS
    from .meanfield import COMPOSITIONS, ControlPulse
    from .quantum_phase import suggested_cutoff

    problems: List[str] = []
    sec = cfg.get(command, {})
    box = cfg.get("box", {})

    if cfg.get("workers") is not None:
        _num(problems, "workers", cfg["workers"], low=1, integer=True)
    if command in ("spectrum", "band", "dynamics", "coupled", "gibbs", "compare"):
        _box(problems, "box", box)
    box_ok = not any(p.startswith("box") for p in problems)

    if command == "spectrum":
        model = sec.get("model")
        if model not in MODELS:
            problems.append(f"spectrum.model must be one of {', '.join(MODELS)} (got {model!r})")
        _num(problems, "spectrum.count", sec.get("count"), low=1, integer=True)
        if model == "phase" and box_ok and _num(problems, "spectrum.M", sec.get("M"), low=1, integer=True):
            need = suggested_cutoff(float(box["E_C"]), float(box["E_J"]))
            if sec["M"] < need:
                problems.append(f"spectrum.M={sec['M']} below 4 sqrt(E_J/E_C) + 10; use M >= {need}")
        if model == "oscillator" and box_ok:
            n = float(box["n_bar"])
            if n <= 0:
                problems.append("box.n_bar must be > 0 for the oscillator model")
            elif sec.get("cutoff") is not None and _num(problems, "spectrum.cutoff", sec["cutoff"], integer=True):
                if sec["cutoff"] <= n + 10 * math.sqrt(n):
                    problems.append(f"spectrum.cutoff must exceed n_bar + 10 sqrt(n_bar) = {n + 10 * math.sqrt(n):.1f}")

    elif command == "band":
        _num(problems, "band.count", sec.get("count"), low=1, integer=True)
        _num(problems, "band.points", sec.get("points"), low=1, integer=True)
        if box_ok and _num(problems, "band.M", sec.get("M"), low=1, integer=True):
            need = suggested_cutoff(float(box["E_C"]), float(box["E_J"]))
            if sec["M"] < need:
                problems.append(f"band.M={sec['M']} below 4 sqrt(E_J/E_C) + 10; use M >= {need}")

    elif command in ("dynamics", "coupled"):
        _run(problems, command, sec)
        if sec.get("order") not in COMPOSITIONS:
            problems.append(f"{command}.order must be one of {sorted(COMPOSITIONS)} (got {sec.get('order')!r})")
        if sec.get("model") not in ("pendulum", "gp"):
            problems.append(f"{command}.model must be 'pendulum' or 'gp' (got {sec.get('model')!r})")
        if command == "dynamics":
            try:
                ControlPulse.from_config(sec.get("control"))
            except (TypeError, ValueError) as e:
                problems.append(f"dynamics.control: {e}")
            boxes = [("box", box)]
        else:
            _box(problems, "coupled.box2", sec.get("box2", {}))
            _num(problems, "coupled.G", sec.get("G"))
            boxes = [("box", box), ("coupled.box2", sec.get("box2", {}))]
        dt = sec.get("dt")
        for where, b in boxes:
            try:
                omega = math.sqrt(2.0 * float(b["E_C"]) * float(b["E_J"]))
            except (KeyError, TypeError, ValueError):
                continue
            if isinstance(dt, (int, float)) and omega > 0 and dt >= 0.05 / omega:
                problems.append(f"{command}.dt={dt} must stay below 0.05 / omega0 = {0.05 / omega:.3g} ({where})")
        for key in ("theta0", "xi0") + (("theta0_2", "xi0_2") if command == "coupled" else ()):
            _num(problems, f"{command}.{key}", sec.get(key))

    elif command == "lindblad":
        _num(problems, "lindblad.gamma", sec.get("gamma"), low=0)
        _num(problems, "lindblad.delta", sec.get("delta"), low=0)
        _run(problems, "lindblad", sec)
        if sec.get("state") not in ("coherent", "fock"):
            problems.append(f"lindblad.state must be 'coherent' or 'fock' (got {sec.get('state')!r})")
        elif sec["state"] == "coherent":
            _num(problems, "lindblad.alpha2", sec.get("alpha2"), low=0, strict=True)
        else:
            _num(problems, "lindblad.fock", sec.get("fock"), low=0, integer=True)
        if sec.get("cutoff") is not None:
            if (_num(problems, "lindblad.cutoff", sec["cutoff"], low=2, integer=True)
                    and sec.get("state") == "fock" and isinstance(sec.get("fock"), int) and sec["fock"] >= sec["cutoff"]):
                problems.append(f"lindblad.fock={sec['fock']} must lie below the cutoff {sec['cutoff']}")
        if sec.get("hamiltonian"):
            _num(problems, "lindblad.E_C", sec.get("E_C"), low=0, strict=True)
            _num(problems, "lindblad.E_J", sec.get("E_J"), low=0)
            _num(problems, "lindblad.n_bar", sec.get("n_bar"), low=0, strict=True)

    elif command == "gibbs":
        kts = sec.get("kT")
        if not isinstance(kts, list) or not kts:
            problems.append(f"gibbs.kT must be a non-empty list (got {kts!r})")
        else:
            for i, kt in enumerate(kts):
                _num(problems, f"gibbs.kT[{i}]", kt, low=0, strict=True)
        if sec.get("cutoff") is not None:
            _num(problems, "gibbs.cutoff", sec["cutoff"], low=1, integer=True)

    elif command == "witness":
        _num(problems, "witness.tolerance", sec.get("tolerance"), low=0)
        _num(problems, "witness.samples", sec.get("samples"), low=0, integer=True)
        dims = sec.get("dimensions")
        if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 2 for d in dims):
            problems.append(f"witness.dimensions must be a list of integers >= 2 (got {dims!r})")
        if not sec.get("paper_instance"):
            A, B = sec.get("A"), sec.get("B")
            if not (isinstance(A, list) and isinstance(B, list) and A and len(A) == len(B)
                    and all(isinstance(r, list) and len(r) == len(A) for r in A + B)):
                problems.append("witness.A and witness.B must be square matrices of equal size when paper_instance is false")

    elif command == "compare":
        models = sec.get("models")
        if not isinstance(models, list) or len(models) < 2:
            problems.append(f"compare.models must list at least two models (got {models!r})")
        else:
            for m in models:
                if m not in MODELS:
                    problems.append(f"compare.models: unknown model {m!r}; choose from {', '.join(MODELS)}")
        _num(problems, "compare.count", sec.get("count"), low=1, integer=True)
        if box_ok and _num(problems, "compare.M", sec.get("M"), low=1, integer=True):
            need = suggested_cutoff(float(box["E_C"]), float(box["E_J"]))
            if sec["M"] < need:
                problems.append(f"compare.M={sec['M']} below 4 sqrt(E_J/E_C) + 10; use M >= {need}")

    if problems:
        raise ConfigError(problems)
