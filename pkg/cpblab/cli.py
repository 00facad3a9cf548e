from __future__ import annotations

import argparse
import json
import os
import warnings
from pathlib import Path

from .config import load_config
from .errors import CpbLabError, UsageError
from .commands import spectrum, band, dynamics, coupled, lindblad, gibbs, witness, compare

COMMANDS = {
    "spectrum": spectrum,
    "band": band,
    "dynamics": dynamics,
    "coupled": coupled,
    "lindblad": lindblad,
    "gibbs": gibbs,
    "witness": witness,
    "compare": compare,
}


class _Parser(argparse.ArgumentParser):
    # subparsers inherit this class, so every usage error ends up in main's [error] line
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _model_list(text: str) -> list:
    return [m.strip() for m in text.split(",") if m.strip()]


def _box_flags(sp: argparse.ArgumentParser):
    # defaults = None so config can supply values
    sp.add_argument("--ec", type=float, default=None, help="Charging energy E_C.")
    sp.add_argument("--ej", type=float, default=None, help="Josephson energy E_J.")
    sp.add_argument("--N", type=int, default=None, help="Total number of condensed pairs.")
    sp.add_argument("--n-bar", dest="n_bar", type=float, default=None, help="Stationary occupation of the box.")


def _run_flags(sp: argparse.ArgumentParser):
    sp.add_argument("--t-end", dest="t_end", type=float, default=None)
    sp.add_argument("--dt", type=float, default=None)
    sp.add_argument("--stride", type=int, default=None, help="Keep every stride-th step.")


def _convention(sp: argparse.ArgumentParser):
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--match-convention", dest="match_convention", action="store_const", const=True, default=None,
                   help="Phase-model hopping matched to the number-basis models (default).")
    g.add_argument("--literal-convention", dest="match_convention", action="store_false", default=None,
                   help="Use E_J/2 hopping in the phase model instead of matching the oscillator.")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="cpblab",
        description="Spectra, mean-field dynamics and stability of a Cooper-pair box built from a condensate.",
    )
    p.add_argument("-c", "--config", type=Path, help="Path to JSON config.")
    p.add_argument("--out", type=Path, default=None, help="Output directory (default: config, $CPBLAB_OUTPUT_DIR, cwd).")
    p.add_argument("--seed", type=int, default=None, help="Seed for randomized checks.")
    p.add_argument("--workers", type=int, default=None, help="Thread pool size for sweeps.")

    sub = p.add_subparsers(dest="cmd", required=True)

    # --- spectrum ---
    sp = sub.add_parser("spectrum", help="Lowest levels of one model of the box.")
    _box_flags(sp)
    sp.add_argument("--model", choices=["bose-hubbard", "two-mode", "oscillator", "phase"], default=None)
    sp.add_argument("--count", type=int, default=None, help="Number of levels.")
    sp.add_argument("--cutoff", type=int, default=None, help="Fock cutoff for the oscillator model.")
    sp.add_argument("--literal", action="store_true", default=None, help="Two-mode: printed hopping rule.")
    sp.add_argument("--M", type=int, default=None, help="Charge cutoff for the phase model.")
    _convention(sp)

    # --- band ---
    bd = sub.add_parser("band", help="Phase-model levels across the offset a in [0, 1).")
    _box_flags(bd)
    bd.add_argument("--M", type=int, default=None)
    bd.add_argument("--count", type=int, default=None)
    bd.add_argument("--points", type=int, default=None, help="Offsets in the sweep.")
    _convention(bd)

    # --- dynamics ---
    dy = sub.add_parser("dynamics", help="Pendulum or GP trajectory of one box.")
    _box_flags(dy)
    dy.add_argument("--model", choices=["pendulum", "gp"], default=None)
    dy.add_argument("--theta0", type=float, default=None)
    dy.add_argument("--xi0", type=float, default=None)
    dy.add_argument("--order", type=int, choices=[2, 4, 6], default=None, help="Symplectic integrator order.")
    _run_flags(dy)

    # --- coupled ---
    co = sub.add_parser("coupled", help="Two capacitively coupled boxes.")
    _box_flags(co)
    co.add_argument("--model", choices=["pendulum", "gp"], default=None)
    co.add_argument("--G", type=float, default=None, help="Coupling constant.")
    co.add_argument("--theta0", type=float, default=None)
    co.add_argument("--xi0", type=float, default=None)
    co.add_argument("--theta0-2", dest="theta0_2", type=float, default=None)
    co.add_argument("--xi0-2", dest="xi0_2", type=float, default=None)
    co.add_argument("--order", type=int, choices=[2, 4, 6], default=None)
    _run_flags(co)

    # --- lindblad ---
    li = sub.add_parser("lindblad", help="Fidelity decay under pair loss and return.")
    li.add_argument("--gamma", type=float, default=None, help="Loss rate.")
    li.add_argument("--delta", type=float, default=None, help="Return rate.")
    li.add_argument("--state", choices=["coherent", "fock"], default=None)
    li.add_argument("--alpha2", type=float, default=None, help="|alpha|^2 of the coherent state.")
    li.add_argument("--fock", type=int, default=None, help="Occupation of the Fock state.")
    li.add_argument("--cutoff", type=int, default=None)
    li.add_argument("--hamiltonian", action="store_true", default=None, help="Evolve under H_b as well.")
    _run_flags(li)

    # --- gibbs ---
    gi = sub.add_parser("gibbs", help="Thermal number fluctuations of the box.")
    _box_flags(gi)
    gi.add_argument("--kT", type=float, action="append", default=None, help="Temperature (repeatable).")
    gi.add_argument("--cutoff", type=int, default=None)

    # --- witness ---
    wi = sub.add_parser("witness", help="Dominated-observable quantumness test.")
    wi.add_argument("--tolerance", type=float, default=None)
    wi.add_argument("--samples", type=int, default=None, help="Random classical pairs to check.")
    pair = wi.add_mutually_exclusive_group()
    pair.add_argument("--paper-instance", dest="paper_instance", action="store_true", default=None,
                      help="Use the published 2x2 pair (default).")
    pair.add_argument("--custom", dest="paper_instance", action="store_false", default=None,
                      help="Use witness.A and witness.B from the config file.")

    # --- compare ---
    cm = sub.add_parser("compare", help="Low-lying gaps of several models against the first.")
    _box_flags(cm)
    cm.add_argument("--models", dest="models", type=_model_list, action="extend", default=None,
                    help="Comma-separated model list; first is the reference.")
    cm.add_argument("--model", dest="models", action="append", default=None,
                    help="Repeatable single-model form of --models.")
    cm.add_argument("--count", type=int, default=None)
    cm.add_argument("--M", type=int, default=None)
    _convention(cm)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"[error] {json.dumps(e.to_dict(), sort_keys=True)}")
        return 2

    if os.getenv("CPBLAB_DEBUG") == "1":
        print(f"[debug] parsed args: {args}")

    cfg = load_config(getattr(args, "config", None))

    command = COMMANDS.get(args.cmd)
    if command is None:
        parser.print_help()
        return 1

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            rc = command.run(args, cfg)
        except CpbLabError as e:
            print(f"[error] {json.dumps(e.to_dict(), sort_keys=True)}")
            rc = 2
    for w in caught:
        print(f"[warn] {w.category.__name__}: {w.message}")
    return rc
