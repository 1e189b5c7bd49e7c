from enum import Enum
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class AccuracyPoint(BaseModel):
    N: int = Field(ge=1)
    d_avg: float = Field(ge=0.0)
    std_error: float = Field(default=0.0, ge=0.0)


class AccuracyCurve(BaseModel):
    points: List[AccuracyPoint]
    method: Literal["exact", "monte_carlo"]
    state: str
    qubit_count: int = 1
    normalized: bool = False

    @model_validator(mode="after")
    def _check_points(self):
        n_values = [point.N for point in self.points]
        if any(b <= a for a, b in zip(n_values, n_values[1:])):
            raise ValueError("curve N values must be strictly increasing")
        if self.method == "exact" and any(point.std_error != 0.0 for point in self.points):
            raise ValueError("exact curve points carry no standard error")
        return self

    @property
    def n_values(self) -> np.ndarray:
        return np.array([point.N for point in self.points], dtype=np.int64)

    @property
    def d_values(self) -> np.ndarray:
        return np.array([point.d_avg for point in self.points])

    @property
    def std_errors(self) -> np.ndarray:
        return np.array([point.std_error for point in self.points])


class PowerLawFit(BaseModel):
    a: float = Field(gt=0.0)
    c: float
    residual_rms: float
    n_min: int
    n_max: int
    state: Optional[str] = None


class Recipe(str, Enum):
    converge = "converge"
    accuracy_1q = "accuracy_1q"
    fit_table = "fit_table"
    accuracy_2q = "accuracy_2q"
    custom = "custom"


ONE_QUBIT_RECIPES = {Recipe.converge, Recipe.accuracy_1q, Recipe.fit_table}


class ExperimentConfig(BaseModel):
    command: Literal["povm", "simulate", "reconstruct", "region", "accuracy", "fit", "recipe"] = "recipe"
    recipe: Optional[Recipe] = None
    mode: Optional[Literal["exact", "mc", "show"]] = None
    qubits: int = Field(default=1, ge=1, le=2)

    # Unset fields are filled from the recipe valves
    state: Optional[str] = None
    events: Optional[int] = Field(default=None, ge=0)
    runs: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)
    n_min: Optional[int] = Field(default=None, ge=1)
    n_max: Optional[int] = Field(default=None, ge=1)
    n_step: int = Field(default=1, ge=1)

    project: bool = False
    asymptote: Optional[bool] = None
    asymptote_events: Optional[int] = Field(default=None, ge=1)
    grid_resolution: Optional[int] = Field(default=None, ge=16)
    threshold_delta: Optional[float] = Field(default=None, gt=0.0)
    tetrahedron: Optional[Literal["aligned", "canonical"]] = None

    counts: Optional[List[int]] = None
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    workers: Optional[int] = Field(default=None, ge=1)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check_combination(self):
        if self.command == "recipe" and self.recipe is None:
            raise ValueError("recipe command needs a recipe name")
        if self.command == "accuracy" and self.mode not in ("exact", "mc"):
            raise ValueError("accuracy command needs a mode (exact or mc)")
        if self.command == "povm" and self.mode != "show":
            raise ValueError("povm command only supports show")
        if self.n_min is not None and self.n_max is not None and self.n_min > self.n_max:
            raise ValueError(f"n_min {self.n_min} is larger than n_max {self.n_max}")
        if self.recipe in ONE_QUBIT_RECIPES and self.state is not None:
            # local import, misc pulls in the numerics
            from utils.pipelines.misc import parse_state

            if parse_state(self.state).qubit_count != 1:
                raise ValueError(f"recipe {self.recipe.value} only takes one-qubit states")
        if self.recipe is Recipe.accuracy_2q and self.state is not None:
            from utils.pipelines.misc import parse_state

            if parse_state(self.state).qubit_count != 2:
                raise ValueError("recipe accuracy_2q only takes two-qubit states")
        return self

    def with_defaults(self, defaults: Dict[str, Any]) -> "ExperimentConfig":
        """Copy with every unset (None) field taken from defaults."""
        update = {
            key: value
            for key, value in defaults.items()
            if key in type(self).model_fields and getattr(self, key) is None
        }
        return self.model_validate({**self.model_dump(), **update})


class ManifestFile(BaseModel):
    path: str
    sha256: str
    bytes: int


class Manifest(BaseModel):
    recipe: str
    config: Dict[str, Any]
    seed: Optional[int] = None
    versions: Dict[str, str]
    created: str
    wall_time_s: float
    files: List[ManifestFile]
    notes: Dict[str, Any] = {}
