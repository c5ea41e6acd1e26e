"""Cross-checking surrogate predictions against the vortex-lattice truth.

evaluate_design runs the trained networks and a fresh VLM/stability
analysis on the same design and reports percentage coefficient
differences (relative to the VLM values), the lift shortfall against
the 600 kg target, and both label sets side by side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..geometry import DesignVector
from ..stability import (CLASS_NAMES, FixedAirframe, StabilityReport,
                         TESTED_DERIVATIVES, analyze_design)
from .objective import LIFT_TARGET


@dataclass
class EvaluationReport:
    """Side-by-side surrogate and VLM numbers for one design."""

    design: DesignVector
    nn_lift: float
    nn_drag: float
    nn_c_lift: float
    nn_c_drag: float
    vlm_lift: float
    vlm_drag: float
    vlm_c_lift: float
    vlm_c_drag: float
    pct_dc_lift: float
    pct_dc_drag: float
    delta_lift: float
    delta_lift_nn: float
    extrapolated: bool
    nn_labels: Optional[StabilityReport] = None
    eom_labels: Optional[StabilityReport] = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "design": {k: float(v) for k, v in self.design.as_dict().items()},
            "nn": {"lift": self.nn_lift, "drag": self.nn_drag,
                   "c_lift": self.nn_c_lift, "c_drag": self.nn_c_drag},
            "vlm": {"lift": self.vlm_lift, "drag": self.vlm_drag,
                    "c_lift": self.vlm_c_lift, "c_drag": self.vlm_c_drag},
            "pct_dc_lift": self.pct_dc_lift,
            "pct_dc_drag": self.pct_dc_drag,
            "delta_lift": self.delta_lift,
            "delta_lift_nn": self.delta_lift_nn,
            "extrapolated": self.extrapolated,
            "meta": self.meta,
        }
        if self.nn_labels is not None:
            out["nn_labels"] = {name: CLASS_NAMES[v] for name, v
                                in zip(TESTED_DERIVATIVES, self.nn_labels.labels)}
        if self.eom_labels is not None:
            out["eom_labels"] = {name: CLASS_NAMES[v] for name, v
                                 in zip(TESTED_DERIVATIVES, self.eom_labels.labels)}
        return out


def percent_difference(nn_value: float, vlm_value: float) -> float:
    """100 (NN - VLM) / VLM."""
    return 100.0 * (nn_value - vlm_value) / vlm_value


def evaluate_design(x, aero_model, stab_model=None,
                    airframe: Optional[FixedAirframe] = None,
                    n_chord: int = 20, n_span: int = 40,
                    altitude: float = 1200.0) -> EvaluationReport:
    """Surrogate predictions vs VLM recomputation at one design point."""
    dv = x if isinstance(x, DesignVector) else DesignVector.from_array(x)

    pred = aero_model.predict_aero(dv)
    analysis = analyze_design(dv, airframe=airframe, n_chord=n_chord,
                              n_span=n_span, altitude=altitude)
    sol = analysis.trim_solution

    nn_labels = stab_model.predict_stability(dv) if stab_model is not None else None

    return EvaluationReport(
        design=dv,
        nn_lift=pred.lift, nn_drag=pred.drag,
        nn_c_lift=pred.c_lift, nn_c_drag=pred.c_drag,
        vlm_lift=sol.lift, vlm_drag=sol.drag,
        vlm_c_lift=sol.c_lift, vlm_c_drag=sol.c_drag,
        pct_dc_lift=percent_difference(pred.c_lift, sol.c_lift),
        pct_dc_drag=percent_difference(pred.c_drag, sol.c_drag),
        delta_lift=sol.lift - LIFT_TARGET,
        delta_lift_nn=pred.lift - LIFT_TARGET,
        extrapolated=pred.extrapolated,
        nn_labels=nn_labels,
        eom_labels=analysis.report,
        meta={"n_chord": n_chord, "n_span": n_span, "altitude": altitude},
    )
