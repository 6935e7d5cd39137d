"""k-nearest-neighbour imputation of missing tabular cells.

Neighbours are found with a partial Euclidean distance over the jointly
observed numeric coordinates, scale-normalized per column and rescaled by
sqrt(D/d) for d of D coordinates observed.  Categorical columns do not
enter the distance; their missing cells take the majority label among the
same numeric-space neighbours.

The model is immutable after fit and imputation is pure per row, so rows
may be processed in parallel without changing the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import DatasetSchema, categorical_codes, numeric_matrix, replace_tabular
from .errors import NoComparableRow, TooFewRows


@dataclass(frozen=True)
class ImputerModel:
    k: int
    reference_numeric: np.ndarray  # (n_ref, D) with NaN for missing
    reference_categorical: np.ndarray  # (n_ref, Q) int codes, -1 missing
    numeric_scale: np.ndarray  # (D,) strictly positive
    column_mean: np.ndarray  # observed train mean per column (NaN if none)
    column_mode: np.ndarray  # observed train mode code per variable (-1 if none)
    schema: DatasetSchema


def fit_imputer(train, schema: DatasetSchema, k: int = 5) -> ImputerModel:
    """Store scaled reference rows; no imputation happens at fit time."""
    if k < 1:
        raise TooFewRows(f"k must be >= 1, got {k}")
    ref_num = numeric_matrix(train, schema)
    ref_cat = categorical_codes(train, schema)
    usable = np.isfinite(ref_num).any(axis=1).sum()
    if usable < k:
        raise TooFewRows(f"k={k} exceeds the {usable} usable reference rows")
    observed_counts = np.isfinite(ref_num).sum(axis=0)
    denom = np.maximum(observed_counts, 1)
    col_mean_raw = np.nansum(ref_num, axis=0) / denom
    centered = np.where(np.isfinite(ref_num), ref_num - col_mean_raw, 0.0)
    scale = np.sqrt(np.sum(centered * centered, axis=0) / denom)
    scale = np.where(np.isfinite(scale) & (scale > 0.0), scale, 1.0)
    col_mean = np.where(observed_counts > 0, col_mean_raw, np.nan)
    modes = np.full(schema.n_categorical, -1, dtype=np.int64)
    for v in range(schema.n_categorical):
        observed = ref_cat[:, v][ref_cat[:, v] >= 0]
        if observed.size:
            counts = np.bincount(observed, minlength=len(schema.categorical_levels[v]))
            modes[v] = int(np.argmax(counts))
    return ImputerModel(
        k=k,
        reference_numeric=ref_num,
        reference_categorical=ref_cat,
        numeric_scale=scale,
        column_mean=col_mean,
        column_mode=modes,
        schema=schema,
    )


def _neighbour_indices(model: ImputerModel, query_num: np.ndarray, rows) -> np.ndarray:
    """k nearest reference indices per query row, ties broken by row index."""
    qm = np.isfinite(query_num)
    rm = np.isfinite(model.reference_numeric)
    qv = np.where(qm, query_num, 0.0)
    rv = np.where(rm, model.reference_numeric, 0.0)
    inv_scale = 1.0 / model.numeric_scale
    d2 = kernels.masked_sqdist(qv, qm, rv, rm, inv_scale, query_num.shape[1])
    no_overlap = ~np.isfinite(d2).any(axis=1)
    if no_overlap.any():
        bad = rows[int(np.flatnonzero(no_overlap)[0])]
        raise NoComparableRow(
            f"deal {bad.deal_id} shares no observed numeric coordinate with any reference"
        )
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, : model.k]


def impute(model: ImputerModel, deals) -> list:
    """Fill missing cells from the k nearest references; observed cells unchanged."""
    schema = model.schema
    query_num = numeric_matrix(deals, schema)
    query_cat = categorical_codes(deals, schema)
    incomplete = np.flatnonzero(
        ~np.isfinite(query_num).all(axis=1) | (query_cat < 0).any(axis=1)
    )
    if incomplete.size == 0:
        return list(deals)

    sub = [deals[i] for i in incomplete]
    nbrs = _neighbour_indices(model, query_num[incomplete], sub)

    out_num = query_num.copy()
    out_cat = query_cat.copy()
    for row, i in enumerate(incomplete):
        nb_num = model.reference_numeric[nbrs[row]]
        nb_cat = model.reference_categorical[nbrs[row]]
        for j in np.flatnonzero(~np.isfinite(query_num[i])):
            vals = nb_num[:, j]
            vals = vals[np.isfinite(vals)]
            if vals.size:
                out_num[i, j] = vals.mean()
            elif np.isfinite(model.column_mean[j]):
                out_num[i, j] = model.column_mean[j]
            else:
                out_num[i, j] = 0.0
        for v in np.flatnonzero(query_cat[i] < 0):
            votes = nb_cat[:, v][nb_cat[:, v] >= 0]
            if votes.size:
                counts = np.bincount(votes, minlength=len(schema.categorical_levels[v]))
                out_cat[i, v] = int(np.argmax(counts))
            else:
                out_cat[i, v] = max(model.column_mode[v], 0)

    result = list(deals)
    for i in incomplete:
        result[i] = replace_tabular(deals[i], out_num[i], out_cat[i], schema)
    return result
