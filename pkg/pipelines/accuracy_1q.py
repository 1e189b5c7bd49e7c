"""
Recipe: accuracy_1q
Purpose:
  One-qubit accuracy versus ensemble size. For each state, the exact model
  curve (weighted average over every partition pattern, true state as
  reference) and the simulated experiment (runs x events, one cumulative
  stream per run, asymptote state as reference) side by side.

Defaults:
  - states: b1r, minus_b1r, unpolarized (or --state)
  - runs: 40 (ACCURACY_1Q_RUNS), events: 150 (ACCURACY_1Q_EVENTS)
  - asymptote: on, reference built from TOMO_ASYMPTOTE_EVENTS simulated events

Outputs:
  - accuracy_1q_exact_{state}.csv, accuracy_1q_mc_{state}.csv
    (N, d_avg, std_error, method, state, normalized)
"""

import os
from concurrent.futures import ThreadPoolExecutor

from blueprints.recipe_blueprint import Pipeline as RecipeBlueprint
from utils.pipelines.main import curve_to_frame, write_csv
from utils.pipelines.misc import parse_state
from utils.tomography.accuracy import asymptote_reference, exact_curve, mc_curve
from utils.tomography.povm import default_instrument

STATES = ("b1r", "minus_b1r", "unpolarized")


class Pipeline(RecipeBlueprint):
    id = "accuracy_1q"

    class Valves(RecipeBlueprint.Valves):
        runs: int = int(os.getenv("ACCURACY_1Q_RUNS", "40"))
        events: int = int(os.getenv("ACCURACY_1Q_EVENTS", "150"))
        asymptote: bool = True

    def __init__(self) -> None:
        super().__init__()
        self.name = "One-qubit accuracy curves"

    def run(self, cfg, out_dir):
        B = default_instrument(1, cfg.tetrahedron)
        states = [parse_state(label) for label in ([cfg.state] if cfg.state else STATES)]

        def curves(state):
            reference = (
                asymptote_reference(state, B, cfg.asymptote_events, cfg.seed)
                if cfg.asymptote
                else None
            )
            exact = exact_curve(
                state, B, range(1, cfg.events + 1, cfg.n_step), project=cfg.project
            )
            simulated = mc_curve(
                state, B, cfg.events, cfg.runs, cfg.seed, reference, cfg.project
            )
            return state, exact, simulated

        with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            results = list(executor.map(curves, states))

        files, notes = [], {}
        for state, exact, simulated in results:
            files.append(
                write_csv(
                    curve_to_frame(exact),
                    os.path.join(out_dir, f"accuracy_1q_exact_{state.name}.csv"),
                )
            )
            files.append(
                write_csv(
                    curve_to_frame(simulated),
                    os.path.join(out_dir, f"accuracy_1q_mc_{state.name}.csv"),
                )
            )
            notes[state.name] = {
                "exact_final": exact.points[-1].d_avg,
                "mc_final": simulated.points[-1].d_avg,
            }
        return files, notes
