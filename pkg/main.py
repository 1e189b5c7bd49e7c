"""
tetratomo - main.py

Command line entrypoint for tetrahedron-measurement qubit tomography.

- Single-shot subcommands: povm show, simulate, reconstruct, region,
  accuracy exact|mc, fit.
- Recipes: every pipelines/*.py exposing class Pipeline with pipe(cfg) is
  discovered from RECIPES_DIR and run with `recipe <name>`.

Exit codes: 0 success, 2 usage error, 1 runtime error.
"""

import argparse
import importlib.util as _imp_util
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import ValidationError

import config
from schemas import ExperimentConfig, Recipe
from utils.pipelines.main import CSV_OPTIONS, curve_to_frame, read_curve, to_json
from utils.pipelines.misc import parse_counts, parse_state
from utils.tomography.accuracy import (
    asymptote_reference,
    exact_curve,
    fit_power_law,
    mc_curve,
)
from utils.tomography.estimate import likelihood_region, linear_reconstruct, project_to_physical
from utils.tomography.povm import default_instrument, outcome_probabilities, tetrahedron
from utils.tomography.sim import CountVector, stream_events

logger = logging.getLogger("tetratomo")
logging.basicConfig(
    level=config.LOG_LEVELS[config.LOG_LEVEL],
    format="%(asctime)s - %(levelname)s - %(message)s",
)

DEFAULT_EVENTS = 150
DEFAULT_RUNS = 40
DEFAULT_NMIN = 1
DEFAULT_NMAX = 150


# -------------------------------------------------------------------
# Recipe discovery
# -------------------------------------------------------------------

_RECIPES_REGISTRY: Dict[str, Dict[str, Any]] = {}


def _discover_recipes(base_dir: str) -> None:
    """Populate _RECIPES_REGISTRY with modules exposing class Pipeline().pipe()."""
    _RECIPES_REGISTRY.clear()
    if base_dir and not os.path.isabs(base_dir):
        base_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), base_dir)
    if not base_dir or not os.path.isdir(base_dir):
        logger.info("RECIPES_DIR not present or not a directory: %s", base_dir)
        return
    for fname in sorted(os.listdir(base_dir)):
        if not fname.endswith(".py"):
            continue
        fpath = os.path.join(base_dir, fname)
        mod_name = f"pipelines.{fname[:-3]}"
        try:
            spec = _imp_util.spec_from_file_location(mod_name, fpath)
            if not spec or not spec.loader:
                continue
            mod = _imp_util.module_from_spec(spec)
            spec.loader.exec_module(mod)
            PipelineCls = getattr(mod, "Pipeline", None)
            if PipelineCls is None:
                continue
            obj = PipelineCls()
            pipe_fn = getattr(obj, "pipe", None)
            if not callable(pipe_fn):
                continue
            rid = getattr(obj, "id", None) or fname[:-3]
            _RECIPES_REGISTRY[str(rid)] = {
                "module": mod_name,
                "file": fpath,
                "callable": pipe_fn,
            }
        except Exception as e:
            logger.warning("Skipping recipe %s due to load error: %s", fpath, e)
    logger.debug("Discovered %d recipe(s): %s", len(_RECIPES_REGISTRY), sorted(_RECIPES_REGISTRY))


def run_recipe(cfg: ExperimentConfig) -> Dict[str, Any]:
    if not _RECIPES_REGISTRY:
        _discover_recipes(config.RECIPES_DIR)
    entry = _RECIPES_REGISTRY.get(cfg.recipe.value)
    if entry is None:
        raise LookupError(f"recipe '{cfg.recipe.value}' not found in {config.RECIPES_DIR}")
    return entry["callable"](cfg)


# -------------------------------------------------------------------
# Argument parsing
# -------------------------------------------------------------------


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--state", help="named state or custom:<s0>,<s1>,...")
    common.add_argument("--events", type=int)
    common.add_argument("--runs", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--nmin", dest="n_min", type=int)
    common.add_argument("--nmax", dest="n_max", type=int)
    common.add_argument("--nstep", dest="n_step", type=int, default=1)
    common.add_argument("--project", action="store_true", help="project estimates to the nearest physical state")
    common.add_argument("--asymptote", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--asymptote-events", dest="asymptote_events", type=int)
    common.add_argument("--grid", dest="grid_resolution", type=int)
    common.add_argument("--delta", dest="threshold_delta", type=float)
    common.add_argument("--tetrahedron", choices=["aligned", "canonical"])
    common.add_argument("--qubits", type=int, choices=[1, 2], default=1)
    common.add_argument("--counts", type=parse_counts, help="comma separated detector tallies")
    common.add_argument("--input", dest="input_path")
    common.add_argument("--out", dest="output_path")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--workers", type=int)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="tetratomo", description=__doc__.strip().splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    povm = commands.add_parser("povm", parents=[common], help="measurement geometry")
    povm.add_argument("mode", choices=["show"])
    commands.add_parser("simulate", parents=[common], help="event stream as CSV")
    commands.add_parser("reconstruct", parents=[common], help="counts to Stokes vector (JSON)")
    commands.add_parser("region", parents=[common], help="likelihood region grid as CSV")
    accuracy = commands.add_parser("accuracy", parents=[common], help="average trace distance curve")
    accuracy.add_argument("mode", choices=["exact", "mc"])
    commands.add_parser("fit", parents=[common], help="power-law fit of a curve CSV")
    recipe = commands.add_parser("recipe", parents=[common], help="run a named recipe")
    recipe.add_argument("recipe", choices=[r.value for r in Recipe])
    return parser


def cli_parse(argv: Optional[List[str]] = None) -> ExperimentConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return ExperimentConfig(**{k: v for k, v in vars(args).items() if v is not None})
    except ValidationError as e:
        parser.error(str(e))


# -------------------------------------------------------------------
# Commands
# -------------------------------------------------------------------


def _emit_frame(frame: pd.DataFrame, cfg: ExperimentConfig) -> None:
    text = to_json(frame.to_dict(orient="records")) if cfg.format == "json" else frame.to_csv(**CSV_OPTIONS)
    _emit(text, cfg)


def _emit(text: str, cfg: ExperimentConfig) -> None:
    if cfg.output_path:
        os.makedirs(os.path.dirname(os.path.abspath(cfg.output_path)), exist_ok=True)
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        logger.info("wrote %s", cfg.output_path)
    else:
        sys.stdout.write(text)


def _require(value, flag: str):
    if value is None:
        raise ValueError(f"{flag} is required for this command")
    return value


def _show_povm(cfg: ExperimentConfig) -> None:
    t = tetrahedron(cfg.tetrahedron)
    B = default_instrument(cfg.qubits, cfg.tetrahedron)
    vertices = pd.DataFrame(t.vertices, columns=["b1", "b2", "b3"])
    vertices.insert(0, "vertex", range(1, 5))
    instrument = pd.DataFrame(B.entries, columns=[f"S{k}" for k in range(B.outcomes)])
    instrument.insert(0, "outcome", range(B.outcomes))
    if cfg.format == "json":
        _emit(to_json({"vertices": t.vertices.tolist(), "instrument": B.entries.tolist()}), cfg)
    else:
        _emit(vertices.to_csv(**CSV_OPTIONS) + "\n" + instrument.to_csv(**CSV_OPTIONS), cfg)


def _simulate(cfg: ExperimentConfig) -> None:
    state = parse_state(_require(cfg.state, "--state"))
    B = default_instrument(state.qubit_count, cfg.tetrahedron)
    events = DEFAULT_EVENTS if cfg.events is None else cfg.events
    seed = config.DEFAULT_SEED if cfg.seed is None else cfg.seed
    stream = stream_events(outcome_probabilities(B, state.stokes), events, seed, source_state=state)
    _emit_frame(pd.DataFrame({"event_index": range(1, len(stream) + 1), "outcome": stream.outcomes}), cfg)


def _reconstruct(cfg: ExperimentConfig) -> None:
    counts = CountVector.of(_require(cfg.counts, "--counts"))
    B = default_instrument(1 if counts.outcomes == 4 else 2, cfg.tetrahedron)
    estimate = linear_reconstruct(counts, B)
    payload = {"counts": counts.counts.tolist(), "stokes": estimate.components.tolist(), "physical": estimate.is_physical}
    if cfg.project:
        payload["projected"] = project_to_physical(estimate).components.tolist()
    _emit(to_json(payload), cfg)


def _region(cfg: ExperimentConfig) -> None:
    counts = CountVector.of(_require(cfg.counts, "--counts"))
    B = default_instrument(1, cfg.tetrahedron)
    region = likelihood_region(counts, B, cfg.grid_resolution, cfg.threshold_delta)
    frame = pd.DataFrame(
        {
            "longitude": region.longitudes,
            "latitude": region.latitudes,
            "log_likelihood": region.log_likelihood,
            "member": region.members,
        }
    )
    _emit_frame(frame, cfg)


def _accuracy(cfg: ExperimentConfig) -> None:
    state = parse_state(_require(cfg.state, "--state"))
    B = default_instrument(state.qubit_count, cfg.tetrahedron)
    n_min = DEFAULT_NMIN if cfg.n_min is None else cfg.n_min
    n_max = DEFAULT_NMAX if cfg.n_max is None else cfg.n_max

    if cfg.mode == "exact":
        if cfg.seed is not None:
            logger.warning("--seed is ignored for exact curves")
        curve = exact_curve(state, B, range(n_min, n_max + 1, cfg.n_step), project=cfg.project)
    else:
        seed = config.DEFAULT_SEED if cfg.seed is None else cfg.seed
        reference = (
            asymptote_reference(state, B, cfg.asymptote_events or config.ASYMPTOTE_EVENTS, seed)
            if cfg.asymptote
            else None
        )
        curve = mc_curve(
            state,
            B,
            n_max,
            cfg.runs or DEFAULT_RUNS,
            seed,
            reference,
            cfg.project,
            cfg.workers or config.WORKERS,
        )
        curve = curve.model_copy(update={"points": [p for p in curve.points if p.N >= n_min]})

    if cfg.format == "json":
        _emit(to_json(curve.model_dump(mode="json")), cfg)
    else:
        _emit(curve_to_frame(curve).to_csv(**CSV_OPTIONS), cfg)


def _fit(cfg: ExperimentConfig) -> None:
    curve = read_curve(_require(cfg.input_path, "--input"))
    fitted = fit_power_law(curve, cfg.n_min, cfg.n_max)
    _emit(to_json(fitted.model_dump()), cfg)


COMMANDS = {
    "povm": _show_povm,
    "simulate": _simulate,
    "reconstruct": _reconstruct,
    "region": _region,
    "accuracy": _accuracy,
    "fit": _fit,
    "recipe": run_recipe,
}


def run_command(cfg: ExperimentConfig):
    return COMMANDS[cfg.command](cfg)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cfg = cli_parse(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        run_command(cfg)
    except Exception as e:
        logger.exception("%s failed: %s", cfg.command, e)
        return 1
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
