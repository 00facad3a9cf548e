from __future__ import annotations

from ..bose_hubbard import build_bose_hubbard, build_oscillator_hamiltonian, build_two_mode_restricted, eigensolve, number_moments
from ..config import box_params, resolve
from ..fs import output_dir, write_csv
from ..quantum_phase import CONVERGENCE_RTOL, ConventionFlag, PhaseModelParams, build_phase_operator, is_converged
from ..utils import fmt


def run(args, cfg):
    cfg = resolve(args, cfg, "spectrum")
    sec = cfg["spectrum"]
    params = box_params(cfg["box"])
    model = sec["model"]
    count = int(sec["count"])

    if model == "bose-hubbard":
        H = build_bose_hubbard(params)
    elif model == "two-mode":
        H = build_two_mode_restricted(params, literal=bool(sec["literal_hopping"]))
    elif model == "oscillator":
        H = build_oscillator_hamiltonian(params, cutoff=sec["cutoff"])
    else:
        p = PhaseModelParams.from_reference_occupation(params.E_C, params.E_J, params.n_bar, int(sec["M"]))
        conv = ConventionFlag(hopping_match=bool(sec["match_convention"]))
        H = build_phase_operator(p, conv)
        if not is_converged(p, conv, min(count, H.dimension)):
            print(f"[warn] phase levels still move by more than {CONVERGENCE_RTOL:g} when M grows past {p.M}")

    count = min(count, H.dimension)
    print(f"[spectrum] model={model} basis={H.basis} dim={H.dimension} levels={count}")
    energies, vectors = eigensolve(H, count)

    header = ["level", "energy", "gap"]
    number_like = H.basis.kind in ("number", "fock")
    if number_like:
        header += ["number_mean", "number_variance"]
    rows = []
    for j, (e, v) in enumerate(zip(energies, vectors)):
        row = [j, float(e), float(e - energies[0])]
        if number_like:
            row += list(number_moments(v))
        rows.append(row)
        print(f"  E{j} = {fmt(float(e))}  gap = {fmt(float(e - energies[0]))}")

    path = write_csv(output_dir(args, cfg) / sec["output"], "spectrum", header, rows, cfg,
                     {"basis": str(H.basis), "params": params.as_dict()})
    print(f"[done] wrote {len(rows)} levels to {path}")
    return 0
