"""File formats: CSV datasets, JSON model documents, report exports.

Dataset files are plain CSV with a `y` response column first and one column
per grid point, headers giving the numeric grid locations.  Model files are
versioned JSON documents that embed every array needed for prediction;
floats are serialized with full round-trip precision, so a loaded model
reproduces the original predictions exactly.
"""

from __future__ import annotations

import csv
import json
import numpy as np

from .fpca import PCBasis
from .grids import Curve, Grid, Sample, resample
from .linmodel import LinearFit
from .selection import CVResult, Pipeline
from .varmodel import VarianceModel
from .wls import WeightedFit

__all__ = [
    "load_dataset",
    "write_dataset",
    "load_curves",
    "save_model",
    "load_model",
    "write_report_json",
    "write_report_csv",
]

MODEL_FORMAT = "fdareg-model"
MODEL_VERSION = 1


class DatasetFormatError(ValueError):
    """A dataset file violates the expected layout."""


def _parse_cell(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DatasetFormatError(
            f"line {line}, column {column!r}: not a number: {text!r}"
        ) from None
    if not np.isfinite(value):
        raise DatasetFormatError(
            f"line {line}, column {column!r}: non-finite value {text!r}"
        )
    return value


def _read_table(path, expect_response: bool):
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        has_response = header and header[0] == "y"
        if expect_response and not has_response:
            raise DatasetFormatError(
                f"{path}: first column must be named 'y', got {header[0]!r}"
            )
        grid_labels = header[1:] if has_response else header
        if len(grid_labels) < 2:
            raise DatasetFormatError(f"{path}: need at least two grid columns")
        points = [
            _parse_cell(label, 1, f"header[{i}]") for i, label in enumerate(grid_labels)
        ]
        if any(b <= a for a, b in zip(points, points[1:])):
            raise DatasetFormatError(
                f"{path}: header grid points must be strictly increasing"
            )

        responses: list[float] = []
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetFormatError(
                    f"{path}: line {line_no}: expected {len(header)} fields, "
                    f"got {len(row)}"
                )
            values = [
                _parse_cell(cell, line_no, header[i]) for i, cell in enumerate(row)
            ]
            if has_response:
                responses.append(values[0])
                rows.append(values[1:])
            else:
                rows.append(values)
        if not rows:
            raise DatasetFormatError(f"{path}: no data rows")
    grid = Grid(points)
    curve_values = np.array(rows)
    return grid, curve_values, (np.array(responses) if has_response else None)


def load_dataset(path, resample_to: Grid | None = None) -> Sample:
    """Read a response-plus-curves CSV file; optionally resample every curve
    onto the given grid (piecewise-linear, no extrapolation)."""
    grid, curve_values, responses = _read_table(path, expect_response=True)
    if resample_to is not None:
        curve_values = np.vstack(
            [resample(grid.points, row, resample_to).values for row in curve_values]
        )
        grid = resample_to
    return Sample(grid, curve_values, responses)


def load_curves(path, resample_to: Grid | None = None):
    """Read curves (with or without a leading `y` column) for prediction.

    Returns (grid, curve_values, responses-or-None).
    """
    grid, curve_values, responses = _read_table(path, expect_response=False)
    if resample_to is not None:
        curve_values = np.vstack(
            [resample(grid.points, row, resample_to).values for row in curve_values]
        )
        grid = resample_to
    return grid, curve_values, responses


def write_dataset(sample: Sample, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["y"] + [repr(float(t)) for t in sample.grid.points])
        for y_i, row in zip(sample.responses, sample.curve_values):
            writer.writerow([repr(float(y_i))] + [repr(float(v)) for v in row])


def _array(values) -> list:
    return np.asarray(values, dtype=float).tolist()


def _basis_doc(basis: PCBasis) -> dict:
    return {
        "flavor": basis.flavor,
        "mean": _array(basis.mean),
        "eigenvalues": _array(basis.eigenvalues),
        "eigenfunctions": [_array(row) for row in basis.eigenfunctions],
    }


def _basis_from_doc(doc: dict, grid: Grid) -> PCBasis:
    return PCBasis(
        grid=grid,
        mean=np.array(doc["mean"]),
        eigenvalues=np.array(doc["eigenvalues"]),
        eigenfunctions=np.array(doc["eigenfunctions"]).reshape(
            len(doc["eigenvalues"]), len(grid)
        ),
        flavor=doc["flavor"],
    )


def _grid_doc(w_grid: np.ndarray) -> list:
    # JSON has no +inf; failed cells are stored as null.
    return [
        [float(v) if np.isfinite(v) else None for v in row] for row in w_grid
    ]


def save_model(pipeline: Pipeline, path) -> None:
    """Serialize a fitted pipeline to a versioned JSON document."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "variant": pipeline.variant,
        "grid": _array(pipeline.pilot.basis.grid.points),
        "pilot": {
            "r": pipeline.pilot.r,
            "coeffs": _array(pipeline.pilot.coeffs),
            "y_mean": pipeline.pilot.y_mean,
            "score_means": _array(pipeline.pilot.score_means),
            "basis": _basis_doc(pipeline.pilot.basis),
        },
        "variance": {
            "c2": pipeline.variance.c2,
            "a": pipeline.variance.a,
            "mean_floor": pipeline.variance.mean_floor,
            "weight_cap_ratio": pipeline.variance.weight_cap_ratio,
            "median_weight": pipeline.variance.median_weight,
            "status": pipeline.variance.status,
        },
        "weights": _array(pipeline.weights),
        "weighted": {
            "variant": pipeline.weighted.variant,
            "truncation": pipeline.weighted.truncation,
            "coeffs": _array(pipeline.weighted.coeffs),
            "y_bar_w": pipeline.weighted.y_bar_w,
            "score_means_w": _array(pipeline.weighted.score_means_w),
            "weights_used": _array(pipeline.weighted.weights_used),
            "basis": _basis_doc(pipeline.weighted.basis),
        },
        "selection": None
        if pipeline.selection is None
        else {
            "variant": pipeline.selection.variant,
            "w_grid": _grid_doc(pipeline.selection.w_grid),
            "chosen": list(pipeline.selection.chosen),
            "ties_broken": pipeline.selection.ties_broken,
        },
    }
    with open(path, "w") as handle:
        json.dump(doc, handle, allow_nan=False)
        handle.write("\n")


def load_model(path) -> Pipeline:
    """Load a pipeline saved by :func:`save_model`."""
    with open(path) as handle:
        doc = json.load(handle)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported version {doc.get('version')!r}")
    grid = Grid(doc["grid"])
    pilot_doc = doc["pilot"]
    pilot = LinearFit(
        basis=_basis_from_doc(pilot_doc["basis"], grid),
        r=int(pilot_doc["r"]),
        coeffs=np.array(pilot_doc["coeffs"]),
        y_mean=float(pilot_doc["y_mean"]),
        score_means=np.array(pilot_doc["score_means"]),
    )
    var_doc = doc["variance"]
    variance = VarianceModel(
        c2=float(var_doc["c2"]),
        a=float(var_doc["a"]),
        mean_floor=float(var_doc["mean_floor"]),
        weight_cap_ratio=float(var_doc["weight_cap_ratio"]),
        median_weight=float(var_doc["median_weight"]),
        status=var_doc["status"],
    )
    weighted_doc = doc["weighted"]
    weighted = WeightedFit(
        variant=weighted_doc["variant"],
        basis=_basis_from_doc(weighted_doc["basis"], grid),
        truncation=int(weighted_doc["truncation"]),
        coeffs=np.array(weighted_doc["coeffs"]),
        y_bar_w=float(weighted_doc["y_bar_w"]),
        score_means_w=np.array(weighted_doc["score_means_w"]),
        weights_used=np.array(weighted_doc["weights_used"]),
    )
    selection = None
    if doc["selection"] is not None:
        sel = doc["selection"]
        w_grid = np.array(
            [[np.inf if v is None else v for v in row] for row in sel["w_grid"]]
        )
        selection = CVResult(
            variant=sel["variant"],
            w_grid=w_grid,
            chosen=tuple(sel["chosen"]),
            ties_broken=bool(sel["ties_broken"]),
        )
    return Pipeline(
        variant=doc["variant"],
        pilot=pilot,
        variance=variance,
        weights=np.array(doc["weights"]),
        weighted=weighted,
        selection=selection,
    )


def write_report_json(report, path) -> None:
    with open(path, "w") as handle:
        json.dump(report.to_json_dict(), handle, indent=2)
        handle.write("\n")


def write_report_csv(report, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        for row in report.csv_rows():
            writer.writerow(row)


def write_predictions_csv(predictions, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["index", "prediction"])
        for i, value in enumerate(predictions):
            writer.writerow([i, repr(float(value))])


def write_truth_csv(generated, path) -> None:
    """Companion file for synthetic datasets: the noiseless target values
    and the slope function used to generate them."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["index", "mu"])
        for i, value in enumerate(generated.signal):
            writer.writerow([i, repr(float(value))])


def write_slope_csv(beta: Curve, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "beta"])
        for t, v in zip(beta.grid.points, beta.values):
            writer.writerow([repr(float(t)), repr(float(v))])
