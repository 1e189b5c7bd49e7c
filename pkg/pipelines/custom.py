"""
Recipe: custom
Purpose:
  Accuracy curve for any one- or two-qubit state given with --state
  (named label or custom:<s0>,<s1>,...). The exact weighted average is used
  while the number of partition patterns stays under TOMO_PATTERN_CAP,
  Monte Carlo otherwise.

Outputs:
  - custom_{method}.csv: (N, d_avg, std_error, method, state, normalized)
  - custom_fit.json: power-law fit over the fit range, when it holds at
    least three points
"""

import os

import config
from blueprints.recipe_blueprint import Pipeline as RecipeBlueprint
from utils.pipelines.main import curve_to_frame, write_csv, write_json
from utils.pipelines.misc import parse_state
from utils.tomography.accuracy import (
    FitError,
    asymptote_reference,
    exact_curve,
    fit_power_law,
    mc_curve,
    pattern_count,
)
from utils.tomography.povm import default_instrument


class Pipeline(RecipeBlueprint):
    id = "custom"

    class Valves(RecipeBlueprint.Valves):
        runs: int = 40
        events: int = 150

    def __init__(self) -> None:
        super().__init__()
        self.name = "Custom state accuracy"

    def run(self, cfg, out_dir):
        if cfg.state is None:
            raise ValueError("recipe custom needs --state")
        state = parse_state(cfg.state)
        B = default_instrument(state.qubit_count, cfg.tetrahedron)

        if pattern_count(cfg.events, B.outcomes) <= config.PATTERN_CAP:
            curve = exact_curve(
                state, B, range(1, cfg.events + 1, cfg.n_step), project=cfg.project
            )
        else:
            reference = (
                asymptote_reference(state, B, cfg.asymptote_events, cfg.seed)
                if cfg.asymptote
                else None
            )
            curve = mc_curve(
                state, B, cfg.events, cfg.runs, cfg.seed, reference, cfg.project, cfg.workers
            )

        files = [write_csv(curve_to_frame(curve), os.path.join(out_dir, f"custom_{curve.method}.csv"))]
        notes = {"state": state.name, "method": curve.method}
        try:
            fitted = fit_power_law(curve, cfg.n_min, cfg.n_max)
        except FitError as e:
            notes["fit"] = str(e)
        else:
            files.append(write_json(fitted.model_dump(), os.path.join(out_dir, "custom_fit.json")))
        return files, notes
