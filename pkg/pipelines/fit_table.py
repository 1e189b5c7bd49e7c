"""
Recipe: fit_table
Purpose:
  Power-law fits D = a / N^c of the exact accuracy curves for the four
  one-qubit test states over the fit range.

Defaults:
  - states: unpolarized, horizontal, b1r, minus_b1r (or --state)
  - fit range: TOMO_FIT_NMIN..TOMO_FIT_NMAX (10..150), every --nstep-th N

Outputs:
  - fit_table_{state}.csv: the exact curve that was fitted
  - fit_table.json: {state: {a, c, residual_rms, n_min, n_max, state}}
"""

import os
from concurrent.futures import ThreadPoolExecutor

from blueprints.recipe_blueprint import Pipeline as RecipeBlueprint
from utils.pipelines.main import curve_to_frame, write_csv, write_json
from utils.pipelines.misc import parse_state
from utils.tomography.accuracy import exact_curve, fit_power_law
from utils.tomography.povm import default_instrument

STATES = ("unpolarized", "horizontal", "b1r", "minus_b1r")


class Pipeline(RecipeBlueprint):
    id = "fit_table"

    def __init__(self) -> None:
        super().__init__()
        self.name = "Power-law fit table"

    def run(self, cfg, out_dir):
        B = default_instrument(1, cfg.tetrahedron)
        states = [parse_state(label) for label in ([cfg.state] if cfg.state else STATES)]
        n_values = list(range(cfg.n_min, cfg.n_max + 1, cfg.n_step))

        def fit(state):
            curve = exact_curve(state, B, n_values, project=cfg.project)
            return curve, fit_power_law(curve, cfg.n_min, cfg.n_max)

        with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            results = list(executor.map(fit, states))

        files, table = [], {}
        for curve, fitted in results:
            files.append(
                write_csv(curve_to_frame(curve), os.path.join(out_dir, f"fit_table_{curve.state}.csv"))
            )
            table[curve.state] = fitted.model_dump()
        files.append(write_json(table, os.path.join(out_dir, "fit_table.json")))

        notes = {state: {"a": fit["a"], "c": fit["c"]} for state, fit in table.items()}
        return files, notes
