import logging
import os
import time
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel

import config
from schemas import ExperimentConfig
from utils.pipelines.main import write_manifest

logger = logging.getLogger("tetratomo.recipes")


class Pipeline:
    id = "recipe_blueprint"

    class Valves(BaseModel):
        # Defaults for every ExperimentConfig field the caller leaves unset.
        # Recipes extend this with their own env-driven values.
        state: Optional[str] = None
        events: Optional[int] = None
        runs: Optional[int] = None
        seed: int = config.DEFAULT_SEED
        n_min: int = config.FIT_NMIN
        n_max: int = config.FIT_NMAX
        asymptote: bool = False
        asymptote_events: int = config.ASYMPTOTE_EVENTS
        grid_resolution: int = config.GRID_RESOLUTION
        threshold_delta: float = config.THRESHOLD_DELTA
        tetrahedron: str = config.TETRAHEDRON
        workers: int = config.WORKERS

    def __init__(self) -> None:
        # id is inferred from the filename when a recipe does not set one
        self.type = "recipe"
        self.name = "Recipe Blueprint"
        self.valves = self.Valves()

    def defaults(self) -> Dict[str, Any]:
        return self.valves.model_dump()

    def run(self, cfg: ExperimentConfig, out_dir: str) -> Tuple[List[str], Dict[str, Any]]:
        """Writes the data files, returns their paths and manifest notes."""
        raise NotImplementedError

    def pipe(self, body: ExperimentConfig) -> Dict[str, Any]:
        cfg = body.with_defaults(self.defaults())
        out_dir = cfg.output_path or config.OUTPUT_DIR
        os.makedirs(out_dir, exist_ok=True)

        logger.info("recipe %s started, output in %s", self.id, out_dir)
        started = time.perf_counter()
        files, notes = self.run(cfg, out_dir)
        manifest = write_manifest(
            out_dir,
            self.id,
            cfg.model_dump(mode="json"),
            files,
            started,
            notes,
        )
        logger.info(
            "recipe %s finished in %.1fs, %d file(s) written",
            self.id,
            time.perf_counter() - started,
            len(files),
        )
        return {"files": sorted(files), "manifest": manifest, "notes": notes}
