from __future__ import annotations

import numpy as np

from ..config import resolve
from ..fs import output_dir, write_csv
from ..quantum_phase import ConventionFlag, PhaseModelParams, band_sweep
from ..utils import fmt


def run(args, cfg):
    cfg = resolve(args, cfg, "band")
    sec = cfg["band"]
    box = cfg["box"]
    p = PhaseModelParams(float(box["E_C"]), float(box["E_J"]), 0.0, int(sec["M"]))
    conv = ConventionFlag(hopping_match=bool(sec["match_convention"]))
    grid = np.linspace(0.0, 1.0, int(sec["points"]), endpoint=False)

    print(f"[band] E_J/E_C={fmt(p.E_J / p.E_C)} M={p.M} offsets={grid.size} levels={sec['count']}")
    table = band_sweep(p, conv, grid, int(sec["count"]), cfg.get("workers"))

    widths = table.energies.max(axis=0) - table.energies.min(axis=0)
    for j, w in enumerate(widths):
        print(f"  band {j}: width {fmt(float(w))}")

    header, rows = table.to_columns()
    path = write_csv(output_dir(args, cfg) / sec["output"], "band", header, rows, cfg,
                     {"band_widths": [float(w) for w in widths]})
    print(f"[done] wrote {len(rows)} offsets to {path}")
    return 0
