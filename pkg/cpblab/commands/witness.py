from __future__ import annotations

import numpy as np

from ..config import resolve
from ..fs import output_dir, write_json
from ..witness import ObservablePair, classical_no_go_property, paper_instance, witness_report
from ..utils import fmt


def _matrix(rows) -> np.ndarray:
    # entries are numbers or [re, im] pairs
    return np.array([[complex(*v) if isinstance(v, list) else complex(v) for v in r] for r in rows])


def run(args, cfg):
    cfg = resolve(args, cfg, "witness")
    sec = cfg["witness"]
    pair = paper_instance() if sec["paper_instance"] else ObservablePair(_matrix(sec["A"]), _matrix(sec["B"]))
    state = sec.get("state")
    phi = None
    if state is not None and len(state) == pair.dimension:
        phi = np.array([complex(*v) if isinstance(v, list) else complex(v) for v in state])

    print(f"[witness] dimension={pair.dimension} tolerance={fmt(float(sec['tolerance']))}")
    report = witness_report(pair, phi, float(sec["tolerance"]))
    print(f"  margins: A {report['margins']['A']:.3e}, B-A {report['margins']['B_minus_A']:.3e} "
          f"(certified={report['certified']})")
    print(f"  witness value {report['witness_value']:.5f}")
    if report["violating_state"] is not None:
        print(f"  strongest violation {report['violation_value']:.5f}")
    else:
        print("  no violating state: B^2 - A^2 is positive semidefinite")

    samples = int(sec["samples"])
    if samples:
        nogo = classical_no_go_property(samples, sec["dimensions"], seed=cfg.get("seed"))
        report["classical_check"] = {"samples": nogo.samples, "failures": nogo.failures,
                                     "worst": nogo.worst, "passed": nogo.passed}
        print(f"  classical pairs: {nogo.failures}/{nogo.samples} violations (worst min eig {nogo.worst:.2e})")

    path = write_json(output_dir(args, cfg) / sec["output"], "witness", report, cfg)
    print(f"[done] wrote report to {path}")
    return 0
