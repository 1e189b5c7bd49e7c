"""
Recipe: accuracy_2q
Purpose:
  Two-qubit accuracy with the tensor-product tetrahedron measurement. A Bell
  state is measured in runs x events cumulative streams, every prefix is
  reconstructed and compared to the asymptote state, and the curve is
  normalized by the 15 free parameters. A one-qubit horizontal curve from
  the same procedure, normalized by 3, is the overlay reference.

Defaults:
  - state: bell_psi_plus
  - runs: 5 (ACCURACY_2Q_RUNS), events: 5000 (ACCURACY_2Q_EVENTS)
  - fit and ratio range: 100..5000
  - asymptote: on

Outputs:
  - accuracy_2q_mc_{state}.csv: normalized two-qubit curve
  - accuracy_2q_mc_horizontal.csv: normalized one-qubit reference curve
  - accuracy_2q_fit.json: power-law fit of the two-qubit curve and the
    min/max ratio of the two normalized curves over the range
"""

import os

from blueprints.recipe_blueprint import Pipeline as RecipeBlueprint
from utils.pipelines.main import curve_to_frame, write_csv, write_json
from utils.pipelines.misc import parse_state
from utils.tomography.accuracy import (
    asymptote_reference,
    curve_ratio,
    fit_power_law,
    mc_curve,
    normalize_curve,
)
from utils.tomography.povm import default_instrument

ONE_QUBIT_REFERENCE = "horizontal"


class Pipeline(RecipeBlueprint):
    id = "accuracy_2q"

    class Valves(RecipeBlueprint.Valves):
        state: str = "bell_psi_plus"
        runs: int = int(os.getenv("ACCURACY_2Q_RUNS", "5"))
        events: int = int(os.getenv("ACCURACY_2Q_EVENTS", "5000"))
        n_min: int = 100
        n_max: int = 5000
        asymptote: bool = True

    def __init__(self) -> None:
        super().__init__()
        self.name = "Two-qubit accuracy curve"

    def _normalized_curve(self, state, cfg):
        B = default_instrument(state.qubit_count, cfg.tetrahedron)
        reference = (
            asymptote_reference(state, B, cfg.asymptote_events, cfg.seed)
            if cfg.asymptote
            else None
        )
        curve = mc_curve(
            state, B, cfg.events, cfg.runs, cfg.seed, reference, cfg.project, cfg.workers
        )
        return normalize_curve(curve)

    def run(self, cfg, out_dir):
        two_qubit = self._normalized_curve(parse_state(cfg.state), cfg)
        one_qubit = self._normalized_curve(parse_state(ONE_QUBIT_REFERENCE), cfg)

        n_max = min(cfg.n_max, cfg.events)
        fitted = fit_power_law(two_qubit, cfg.n_min, n_max)
        _, ratio = curve_ratio(two_qubit, one_qubit, cfg.n_min, n_max)
        summary = {
            "fit": fitted.model_dump(),
            "ratio_min": float(ratio.min()),
            "ratio_max": float(ratio.max()),
            "reference_state": ONE_QUBIT_REFERENCE,
        }

        files = [
            write_csv(
                curve_to_frame(two_qubit),
                os.path.join(out_dir, f"accuracy_2q_mc_{two_qubit.state}.csv"),
            ),
            write_csv(
                curve_to_frame(one_qubit),
                os.path.join(out_dir, f"accuracy_2q_mc_{ONE_QUBIT_REFERENCE}.csv"),
            ),
            write_json(summary, os.path.join(out_dir, "accuracy_2q_fit.json")),
        ]
        notes = {"c": fitted.c, "ratio_min": summary["ratio_min"], "ratio_max": summary["ratio_max"]}
        return files, notes
