from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from ..config import resolve
from ..fs import output_dir, write_csv
from ..stability import gibbs_number_stats
from ..utils import fmt


def run(args, cfg):
    cfg = resolve(args, cfg, "gibbs")
    sec = cfg["gibbs"]
    E_C, n_bar = float(cfg["box"]["E_C"]), float(cfg["box"]["n_bar"])
    temps = [float(kt) for kt in sec["kT"]]
    workers = cfg.get("workers") or min(32, os.cpu_count() or 8)

    print(f"[gibbs] E_C={fmt(E_C)} n_bar={fmt(n_bar)} temperatures={len(temps)}")
    with ThreadPoolExecutor(max_workers=workers) as ex:
        stats = list(ex.map(lambda kt: gibbs_number_stats(E_C, n_bar, kt, sec["cutoff"]), temps))

    rows = []
    for kt, (mean, var) in zip(temps, stats):
        rows.append([kt, kt / E_C, mean, var])
        print(f"  kT/E_C={fmt(kt / E_C)}  <n>={fmt(mean)}  Var={fmt(var)}")

    path = write_csv(output_dir(args, cfg) / sec["output"], "gibbs",
                     ["kT", "kT_over_E_C", "mean", "variance"], rows, cfg)
    print(f"[done] wrote {len(rows)} temperatures to {path}")
    return 0
