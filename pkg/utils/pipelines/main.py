import hashlib
import json
import os
import time
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from typing import Any, Dict, List

import pandas as pd

from schemas import AccuracyCurve, AccuracyPoint, Manifest, ManifestFile

CSV_OPTIONS = {"index": False, "float_format": "%.17g", "lineterminator": "\n"}
CURVE_COLUMNS = ["N", "d_avg", "std_error", "method", "state", "normalized"]
VERSIONED_PACKAGES = ["numpy", "scipy", "pandas", "pydantic"]


def curve_to_frame(curve: AccuracyCurve) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "N": curve.n_values,
            "d_avg": curve.d_values,
            "std_error": curve.std_errors,
            "method": curve.method,
            "state": curve.state,
            "normalized": curve.normalized,
        },
        columns=CURVE_COLUMNS,
    )


def frame_to_curve(frame: pd.DataFrame, qubit_count: int | None = None) -> AccuracyCurve:
    missing = set(CURVE_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"curve table is missing columns {sorted(missing)}")
    if frame.empty:
        raise ValueError("curve table has no rows")

    first = frame.iloc[0]
    points = [
        AccuracyPoint(N=int(row.N), d_avg=float(row.d_avg), std_error=float(row.std_error))
        for row in frame.itertuples(index=False)
    ]
    if qubit_count is None:
        qubit_count = 2 if str(first["state"]) == "bell_psi_plus" else 1
    return AccuracyCurve(
        points=points,
        method=str(first["method"]),
        state=str(first["state"]),
        qubit_count=qubit_count,
        normalized=str(first["normalized"]).strip().lower() == "true",
    )


def read_curve(path: str, qubit_count: int | None = None) -> AccuracyCurve:
    return frame_to_curve(pd.read_csv(path), qubit_count)


def write_csv(frame: pd.DataFrame, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, **CSV_OPTIONS)
    return path


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_json(payload: Any, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(to_json(payload))
    return path


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def package_versions() -> Dict[str, str]:
    versions = {}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_manifest(
    out_dir: str,
    recipe: str,
    config: Dict[str, Any],
    files: List[str],
    started: float,
    notes: Dict[str, Any] | None = None,
) -> str:
    """manifest.json next to the data files; paths are relative to out_dir."""
    manifest = Manifest(
        recipe=recipe,
        config=config,
        seed=config.get("seed"),
        versions=package_versions(),
        created=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        wall_time_s=round(time.perf_counter() - started, 3),
        files=[
            ManifestFile(
                path=os.path.relpath(path, out_dir),
                sha256=file_sha256(path),
                bytes=os.path.getsize(path),
            )
            for path in sorted(files)
        ],
        notes=notes or {},
    )
    return write_json(manifest.model_dump(mode="json"), os.path.join(out_dir, "manifest.json"))
