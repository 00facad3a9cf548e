from __future__ import annotations

from ..config import box_params, resolve
from ..errors import ParameterError
from ..fs import output_dir, write_csv
from ..meanfield import ControlPulse, PhasePoint, amplitudes_from_phase_point, integrate_gp, integrate_pendulum
from ..utils import fmt, oscillation_frequency


def run(args, cfg):
    cfg = resolve(args, cfg, "dynamics")
    sec = cfg["dynamics"]
    params = box_params(cfg["box"])
    control = ControlPulse.from_config(sec["control"])
    x0 = PhasePoint(float(sec["theta0"]), float(sec["xi0"]))
    t_end, dt, stride = float(sec["t_end"]), float(sec["dt"]), int(sec["stride"])

    print(f"[dynamics] model={sec['model']} theta0={fmt(x0.theta)} xi0={fmt(x0.xi)} "
          f"t_end={fmt(t_end)} dt={fmt(dt)} control={control.kind}")
    extra = {"params": params.as_dict()}
    if sec["model"] == "pendulum":
        traj = integrate_pendulum(x0, params, control, t_end, dt, stride, int(sec["order"]))
    else:
        phi0 = amplitudes_from_phase_point(x0, params)
        traj = integrate_gp(phi0, params, control, t_end, dt, stride)
        extra["norm_drift"] = traj.norm_drift
        print(f"  norm drift {traj.norm_drift:.2e}")

    drift = float(abs(traj.energy[-1] - traj.energy[0])) if control.is_constant else None
    if drift is not None:
        print(f"  energy drift {drift:.2e}")
    try:
        omega = oscillation_frequency(traj.t, traj.xi)
        extra["frequency"] = omega
        print(f"  oscillation frequency {fmt(omega)} (small-amplitude {fmt(params.plasma_frequency)})")
    except ParameterError:
        print("  fewer than 3 oscillations; no frequency estimate")

    header, rows = traj.to_columns()
    path = write_csv(output_dir(args, cfg) / sec["output"], "dynamics", header, rows, cfg, extra)
    print(f"[done] wrote {len(rows)} samples to {path}")
    return 0
