"""
Recipe: converge
Purpose:
  Cumulative-event convergence for one prepared state. A single stream of
  detection events is replayed copy by copy; after every event the counts so
  far are inverted under the nearest-physical-state constraint and the
  likelihood region on the Poincare sphere is sized.

Defaults:
  - state: b1r
  - events: 200 (CONVERGE_EVENTS)

Outputs:
  - converge.csv: event_index, S1, S2, S3, trace_distance, member_count
  - events.csv: event_index, outcome
  - region_N{n}.csv at n = 1, 2, 5, 10, 20, 50, 100, 200 and the last event:
    longitude, latitude, log_likelihood, member
"""

import os

import pandas as pd

from blueprints.recipe_blueprint import Pipeline as RecipeBlueprint
from utils.pipelines.main import write_csv
from utils.pipelines.misc import parse_state
from utils.tomography.estimate import converge_trace
from utils.tomography.povm import default_instrument

CHECKPOINTS = (1, 2, 5, 10, 20, 50, 100, 200)


def checkpoints(events: int) -> list[int]:
    return sorted({n for n in CHECKPOINTS if n <= events} | {events})


class Pipeline(RecipeBlueprint):
    id = "converge"

    class Valves(RecipeBlueprint.Valves):
        state: str = "b1r"
        events: int = int(os.getenv("CONVERGE_EVENTS", "200"))

    def __init__(self) -> None:
        super().__init__()
        self.name = "Cumulative convergence"

    def run(self, cfg, out_dir):
        state = parse_state(cfg.state)
        B = default_instrument(1, cfg.tetrahedron)
        trace = converge_trace(
            state, B, cfg.events, cfg.seed, cfg.grid_resolution, cfg.threshold_delta
        )

        files = [
            write_csv(
                pd.DataFrame(
                    {
                        "event_index": range(1, len(trace) + 1),
                        "S1": trace.estimates[:, 1],
                        "S2": trace.estimates[:, 2],
                        "S3": trace.estimates[:, 3],
                        "trace_distance": trace.distances,
                        "member_count": trace.member_counts,
                    }
                ),
                os.path.join(out_dir, "converge.csv"),
            ),
            write_csv(
                pd.DataFrame(
                    {
                        "event_index": range(1, len(trace) + 1),
                        "outcome": trace.stream.outcomes,
                    }
                ),
                os.path.join(out_dir, "events.csv"),
            ),
        ]
        for n in checkpoints(cfg.events):
            region = trace.region(n, B)
            frame = pd.DataFrame(
                {
                    "longitude": region.longitudes,
                    "latitude": region.latitudes,
                    "log_likelihood": region.log_likelihood,
                    "member": region.members,
                }
            )
            files.append(write_csv(frame, os.path.join(out_dir, f"region_N{n}.csv")))

        notes = {
            "state": state.name,
            "final_trace_distance": float(trace.distances[-1]),
            "final_member_count": int(trace.member_counts[-1]),
        }
        return files, notes
