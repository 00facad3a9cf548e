from __future__ import annotations

import math

import numpy as np

from ..bose_hubbard import Basis, CpbParams, StateVector, build_oscillator_hamiltonian, coherent_vector
from ..config import resolve
from ..fs import output_dir, write_csv
from ..stability import DensityMatrix, LindbladParams, evolve_master, fidelity_decay_rate, fidelity_slope, lifetime_ratio
from ..utils import default_cutoff, fmt


def initial_state(sec: dict) -> StateVector:
    if sec["state"] == "coherent":
        n = float(sec["alpha2"])
        cutoff = sec["cutoff"] if sec["cutoff"] is not None else default_cutoff(n)
        return coherent_vector(n, 0.0, cutoff=int(cutoff))
    k = int(sec["fock"])
    cutoff = int(sec["cutoff"]) if sec["cutoff"] is not None else default_cutoff(k)
    amps = np.zeros(cutoff + 1, dtype=complex)
    amps[k] = 1.0
    return StateVector(amps, Basis.fock(cutoff))


def run(args, cfg):
    cfg = resolve(args, cfg, "lindblad")
    sec = cfg["lindblad"]
    L = LindbladParams(float(sec["gamma"]), float(sec["delta"]))
    phi = initial_state(sec)
    cutoff = phi.basis.cutoff

    H = None
    if sec["hamiltonian"]:
        n_bar = float(sec["n_bar"])
        box = CpbParams.from_josephson(float(sec["E_C"]), float(sec["E_J"]), cutoff + 1, n_bar)
        H = build_oscillator_hamiltonian(box, cutoff=cutoff)

    rate = fidelity_decay_rate(phi, L)
    slope = fidelity_slope(phi, L)
    mean = float(np.dot(phi.labels, phi.probabilities))
    print(f"[lindblad] state={sec['state']} cutoff={cutoff} gamma={fmt(L.gamma)} delta={fmt(L.delta)} "
          f"H={'H_b' if H is not None else 'none'}")
    print(f"  decay rate {fmt(rate)} (finite difference {fmt(-slope)})")
    ratio = lifetime_ratio(mean, L)
    if math.isfinite(ratio):
        print(f"  Fock/coherent decay ratio at n={fmt(mean)}: {fmt(ratio)}")

    traj = evolve_master(DensityMatrix.from_state(phi), H, L, float(sec["t_end"]), float(sec["dt"]),
                         int(sec["stride"]), reference=phi)
    header, rows = traj.to_columns()
    extra = {"decay_rate": rate, "finite_difference_rate": -slope,
             "lifetime_ratio": ratio if math.isfinite(ratio) else None}
    path = write_csv(output_dir(args, cfg) / sec["output"], "lindblad", header, rows, cfg, extra)
    print(f"[done] wrote {len(rows)} samples to {path} (final fidelity {fmt(float(traj.fidelity[-1]))})")
    return 0
