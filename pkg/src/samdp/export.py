"""Self-contained export document for the trajectory explorer UI.

One JSON document carries everything the explorer needs: per-record
metadata with 2-D embedding coordinates, cluster centroids and summaries,
the SAMDP matrices, the greedy policy, and the grid report. Field names
and nesting are frozen by the schema shipped at schemas/export-ui.schema.json;
exports are validated against it before writing and after loading.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .cluster import Clustering
from .errors import ValidationError
from .evaluate import GreedyPolicy
from .model import SamdpModel
from .trajectory import TrajectoryDataset

EXPORT_FORMAT = "samdp-export-ui"
EXPORT_VERSION = 1


def _schema() -> dict:
    ref = resources.files("samdp").joinpath("schemas/export-ui.schema.json")
    return json.loads(ref.read_text())


def build_export_document(
    ds: TrajectoryDataset,
    embedding: np.ndarray,
    clustering: Clustering,
    model: SamdpModel,
    policy: GreedyPolicy,
    grid_rows: list[dict] | None = None,
) -> dict:
    """Assemble the export document from pipeline artifacts."""
    embedding = np.asarray(embedding, dtype=np.float64)
    if embedding.shape != (ds.n, 2):
        raise ValidationError(f"display embedding must be n x 2, got {embedding.shape}")
    if clustering.assignment.shape[0] != ds.n:
        raise ValidationError("clustering does not cover the dataset")
    if model.K != clustering.K:
        raise ValidationError("model and clustering disagree on K")

    K = clustering.K
    labels = clustering.assignment
    sizes = np.bincount(labels, minlength=K)
    mean_xy = np.zeros((K, 2))
    mean_value = np.zeros(K)
    mean_reward = np.zeros(K)
    for i in range(K):
        members = labels == i
        if sizes[i]:
            mean_xy[i] = embedding[members].mean(axis=0)
            mean_value[i] = ds.values[members].mean()
            mean_reward[i] = ds.rewards[members].mean()

    grid = []
    for row in grid_rows or []:
        ok = row.get("status", "ok") == "ok"
        grid.append(
            {
                "k": int(row["K"]),
                "w": int(row["w"]),
                "seed": int(row["seed"]),
                "vmse": float(row["vmse"]) if ok else None,
                "inertia": float(row["inertia"]) if ok else None,
                "intensity": float(row["intensity"]) if ok else None,
                "entropy": float(row["entropy"]) if ok else None,
                "selected": bool(row["selected"]),
                "status": str(row["status"]),
            }
        )

    return {
        "format": EXPORT_FORMAT,
        "version": EXPORT_VERSION,
        "meta": {
            "n": int(ds.n),
            "n_trajectories": int(ds.n_trajectories),
            "k": int(K),
            "w": int(clustering.w),
            "gamma": float(ds.gamma),
        },
        "records": {
            "traj_id": ds.traj_ids.tolist(),
            "t": ds.ts.tolist(),
            "reward": ds.rewards.tolist(),
            "value": ds.values.tolist(),
            "cluster": labels.tolist(),
            "x": embedding[:, 0].tolist(),
            "y": embedding[:, 1].tolist(),
        },
        "clusters": {
            "centroids": [c.tolist() for c in clustering.centroids],
            "x": mean_xy[:, 0].tolist(),
            "y": mean_xy[:, 1].tolist(),
            "size": sizes.tolist(),
            "mean_value": mean_value.tolist(),
            "mean_reward": mean_reward.tolist(),
        },
        "model": {
            "p": [row.tolist() for row in model.P],
            "r": [row.tolist() for row in model.R],
            "l": [row.tolist() for row in model.L],
            "v": model.v.tolist(),
            "counts": [[int(x) for x in row] for row in model.counts],
            "absorbing": [int(i) for i in np.flatnonzero(model.absorbing)],
        },
        "greedy": {
            "choice": policy.choice.tolist(),
        },
        "grid": grid,
    }


def validate_export_document(doc) -> None:
    """Check a document against the frozen schema; raises ValidationError."""
    errors: list[str] = []
    _check(doc, _schema(), "$", errors)
    if errors:
        raise ValidationError("export document invalid: " + "; ".join(errors[:10]))


def _check(value, schema: dict, path: str, errors: list[str]) -> None:
    types = schema.get("type")
    if types is not None:
        if isinstance(types, str):
            types = [types]
        if not any(_is_type(value, t) for t in types):
            errors.append(f"{path}: expected {'/'.join(types)}")
            return
    if "const" in schema and value != schema["const"]:
        errors.append(f"{path}: must equal {schema['const']!r}")
    if isinstance(value, dict):
        for key in schema.get("required", []):
            if key not in value:
                errors.append(f"{path}.{key}: missing required field")
        for key, sub in schema.get("properties", {}).items():
            if key in value:
                _check(value[key], sub, f"{path}.{key}", errors)
    if isinstance(value, list) and "items" in schema:
        for i, item in enumerate(value):
            _check(item, schema["items"], f"{path}[{i}]", errors)


def _is_type(value, t: str) -> bool:
    if t == "object":
        return isinstance(value, dict)
    if t == "array":
        return isinstance(value, list)
    if t == "string":
        return isinstance(value, str)
    if t == "boolean":
        return isinstance(value, bool)
    if t == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if t == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if t == "null":
        return value is None
    return False


def write_export_ui(doc: dict, path) -> None:
    """Validate then write the document (compact JSON, newline-terminated)."""
    validate_export_document(doc)
    Path(path).write_text(
        json.dumps(doc, allow_nan=False, separators=(",", ":")) + "\n"
    )


def load_export_ui(path) -> dict:
    doc = json.loads(Path(path).read_text())
    validate_export_document(doc)
    return doc
