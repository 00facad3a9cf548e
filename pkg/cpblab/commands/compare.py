from __future__ import annotations

from ..compare import compare_models
from ..config import box_params, resolve
from ..fs import output_dir, write_csv
from ..utils import fmt


def run(args, cfg):
    cfg = resolve(args, cfg, "compare")
    sec = cfg["compare"]
    params = box_params(cfg["box"])
    models = list(sec["models"])

    print(f"[compare] reference={models[0]} against {', '.join(models[1:])} levels={sec['count']}")
    report = compare_models(params, models, int(sec["count"]), bool(sec["match_convention"]),
                            int(sec["M"]), bool(sec["plasma"]))
    for m in models[1:]:
        print(f"  {m}: max relative gap error {fmt(float(report.relative_errors(m).max()))}")
    if report.plasma:
        print("  plasma frequency: " + ", ".join(f"{k}={fmt(v)}" for k, v in sorted(report.plasma.items())))

    header, rows = report.to_columns()
    path = write_csv(output_dir(args, cfg) / sec["output"], "compare", header, rows, cfg,
                     {"plasma": report.plasma, "max_relative_deviation": report.max_relative_deviation})
    print(f"[done] wrote {len(rows)} levels to {path}")
    return 0
