"""Deal data model: records, schema, CSV I/O, temporal split, synthetic generator."""

from __future__ import annotations

import csv
import datetime as dt
import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BadConfig,
    BadSentiment,
    DuplicateId,
    EmptySide,
    MalformedRow,
    MissingSentiment,
    UnknownCategory,
)

SENTIMENT_LENGTH = 121
# index of the announcement day inside the sentiment window (90 prior, day 0,
# 30 after); only the generator uses it, the models treat the window as opaque
ANNOUNCE_INDEX = 90


@dataclass(frozen=True)
class DealRecord:
    """One deal: tabular features, optional sentiment path, binary outcome.

    label 0 = completed, 1 = cancelled.  Missing numeric/categorical cells
    are None; sentiment is either a full fixed-length tuple or None.
    """

    deal_id: str
    announce_date: dt.date
    numeric: tuple
    categorical: tuple
    sentiment: tuple | None
    label: int


@dataclass(frozen=True)
class DatasetSchema:
    numeric_names: tuple
    categorical_names: tuple
    categorical_levels: tuple  # tuple of level tuples, aligned with names
    sentiment_length: int = SENTIMENT_LENGTH

    def __post_init__(self):
        names = list(self.numeric_names) + list(self.categorical_names)
        if len(set(names)) != len(names):
            raise BadConfig("schema names must be unique across numeric and categorical lists")
        if len(self.categorical_levels) != len(self.categorical_names):
            raise BadConfig("categorical_levels must align with categorical_names")
        for name, levels in zip(self.categorical_names, self.categorical_levels):
            if not levels:
                raise BadConfig(f"categorical variable {name!r} has no levels")
        if self.sentiment_length < 0:
            raise BadConfig("sentiment_length must be >= 0")

    @property
    def n_numeric(self) -> int:
        return len(self.numeric_names)

    @property
    def n_categorical(self) -> int:
        return len(self.categorical_names)

    def level_index(self, var: int, label: str) -> int:
        try:
            return self.categorical_levels[var].index(label)
        except ValueError:
            raise UnknownCategory(
                f"label {label!r} not admissible for {self.categorical_names[var]!r}"
            ) from None

    def to_json(self) -> dict:
        return {
            "numeric_names": list(self.numeric_names),
            "categorical_names": list(self.categorical_names),
            "categorical_levels": [list(l) for l in self.categorical_levels],
            "sentiment_length": self.sentiment_length,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DatasetSchema":
        return cls(
            numeric_names=tuple(doc["numeric_names"]),
            categorical_names=tuple(doc["categorical_names"]),
            categorical_levels=tuple(tuple(l) for l in doc["categorical_levels"]),
            sentiment_length=int(doc.get("sentiment_length", SENTIMENT_LENGTH)),
        )


@dataclass(frozen=True)
class SplitSpec:
    """Temporal split rule: exactly one of cutoff_date / train_fraction_override."""

    cutoff_date: dt.date | None = None
    train_fraction_override: float | None = None

    def __post_init__(self):
        if (self.cutoff_date is None) == (self.train_fraction_override is None):
            raise BadConfig("exactly one of cutoff_date / train_fraction_override must be set")
        if self.train_fraction_override is not None and not (
            0.0 < self.train_fraction_override < 1.0
        ):
            raise BadConfig("train_fraction_override must lie in (0, 1)")


def _sentiment_cols(n: int) -> list:
    return [f"s{i:03d}" for i in range(n)]


def csv_header(schema: DatasetSchema) -> list:
    return (
        ["deal_id", "announce_date"]
        + list(schema.numeric_names)
        + list(schema.categorical_names)
        + _sentiment_cols(schema.sentiment_length)
        + ["label"]
    )


def _check_sentiment(values, deal_id: str) -> tuple | None:
    if values is None:
        return None
    vals = tuple(float(v) for v in values)
    if any(not (-1.0 <= v <= 1.0) for v in vals):
        raise BadSentiment(f"deal {deal_id}: sentiment value outside [-1, 1]")
    return vals


def load_deals_csv(path, schema: DatasetSchema) -> list:
    """Parse a deals CSV; empty cells denote missing values."""
    expected = csv_header(schema)
    records = []
    seen = set()
    n_num = schema.n_numeric
    n_cat = schema.n_categorical
    s_len = schema.sentiment_length
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise MalformedRow(f"{path}: header does not match schema")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise MalformedRow(f"{path}:{lineno}: expected {len(expected)} cells, got {len(row)}")
            deal_id = row[0]
            if deal_id in seen:
                raise DuplicateId(f"{path}:{lineno}: duplicate deal_id {deal_id!r}")
            seen.add(deal_id)
            date = dt.date.fromisoformat(row[1])
            pos = 2
            numeric = tuple(
                None if cell == "" else float(cell) for cell in row[pos : pos + n_num]
            )
            pos += n_num
            categorical = []
            for var, cell in enumerate(row[pos : pos + n_cat]):
                if cell == "":
                    categorical.append(None)
                else:
                    schema.level_index(var, cell)  # validates
                    categorical.append(cell)
            pos += n_cat
            sent_cells = row[pos : pos + s_len]
            pos += s_len
            if all(c == "" for c in sent_cells):
                sentiment = None
            elif any(c == "" for c in sent_cells):
                raise BadSentiment(f"{path}:{lineno}: partial sentiment sequence")
            else:
                sentiment = _check_sentiment([float(c) for c in sent_cells], deal_id)
            label = int(row[pos])
            if label not in (0, 1):
                raise MalformedRow(f"{path}:{lineno}: label must be 0 or 1")
            records.append(
                DealRecord(deal_id, date, numeric, tuple(categorical), sentiment, label)
            )
    return records


def write_deals_csv(path, deals, schema: DatasetSchema) -> None:
    def cell(v):
        return "" if v is None else repr(float(v))

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(csv_header(schema))
        for r in deals:
            sent = [""] * schema.sentiment_length if r.sentiment is None else [
                repr(float(v)) for v in r.sentiment
            ]
            writer.writerow(
                [r.deal_id, r.announce_date.isoformat()]
                + [cell(v) for v in r.numeric]
                + ["" if v is None else v for v in r.categorical]
                + sent
                + [str(r.label)]
            )


def temporal_split(deals, spec: SplitSpec):
    """Partition by announce date; input order preserved within each side."""
    if spec.cutoff_date is not None:
        in_train = [r.announce_date < spec.cutoff_date for r in deals]
    else:
        n_train = int(round(spec.train_fraction_override * len(deals)))
        order = sorted(range(len(deals)), key=lambda i: (deals[i].announce_date, i))
        in_train = [False] * len(deals)
        for i in order[:n_train]:
            in_train[i] = True
    train = [r for r, keep in zip(deals, in_train) if keep]
    test = [r for r, keep in zip(deals, in_train) if not keep]
    if not train or not test:
        raise EmptySide(f"split produced sizes ({len(train)}, {len(test)})")
    return train, test


# -- synthetic generator -----------------------------------------------------


@dataclass(frozen=True)
class GeneratorConfig:
    """Ground-truth-controlled deal universe.

    signal_strength separates the label-conditional numeric means (0 means
    labels carry no tabular information); sentiment_signal adds a
    label-dependent post-announcement drift to the sentiment path.
    numeric_rank, when set, draws the numeric block from an exactly
    rank-limited factor model.  n_before_cutoff pins how many deals get
    dates before cutoff_date, so split sizes are exactly controllable.
    """

    n_deals: int = 1000
    cancel_rate: float = 0.2
    n_numeric: int = 8
    n_categorical: int = 4
    levels_per_categorical: tuple | int = 2
    sentiment_length: int = SENTIMENT_LENGTH
    missing_rate: float = 0.0
    signal_strength: float = 1.0
    sentiment_signal: float = 0.0
    numeric_rank: int | None = None
    date_start: dt.date = dt.date(2001, 1, 1)
    date_end: dt.date = dt.date(2020, 10, 30)
    cutoff_date: dt.date | None = None
    n_before_cutoff: int | None = None

    def __post_init__(self):
        if self.n_deals < 1:
            raise BadConfig("n_deals must be >= 1")
        if not (0.0 < self.cancel_rate < 1.0):
            raise BadConfig("cancel_rate must lie in (0, 1)")
        if not (0.0 <= self.missing_rate < 1.0):
            raise BadConfig("missing_rate must lie in [0, 1)")
        if self.signal_strength < 0 or self.sentiment_signal < 0:
            raise BadConfig("signal strengths must be >= 0")
        if self.n_numeric < 1:
            raise BadConfig("n_numeric must be >= 1")
        if self.numeric_rank is not None and not (1 <= self.numeric_rank <= self.n_numeric):
            raise BadConfig("numeric_rank must lie in [1, n_numeric]")
        if (self.n_before_cutoff is None) != (self.cutoff_date is None):
            raise BadConfig("cutoff_date and n_before_cutoff must be set together")
        if self.n_before_cutoff is not None and not (0 < self.n_before_cutoff < self.n_deals):
            raise BadConfig("n_before_cutoff must lie strictly inside (0, n_deals)")
        if self.date_end <= self.date_start:
            raise BadConfig("date_end must be after date_start")

    def levels(self) -> tuple:
        if isinstance(self.levels_per_categorical, int):
            counts = [self.levels_per_categorical] * self.n_categorical
        else:
            counts = list(self.levels_per_categorical)
            if len(counts) != self.n_categorical:
                raise BadConfig("levels_per_categorical list must match n_categorical")
        if any(c < 2 for c in counts):
            raise BadConfig("every categorical variable needs >= 2 levels")
        return tuple(tuple(f"L{j}" for j in range(c)) for c in counts)

    def schema(self) -> DatasetSchema:
        return DatasetSchema(
            numeric_names=tuple(f"num_{i:02d}" for i in range(self.n_numeric)),
            categorical_names=tuple(f"cat_{i:02d}" for i in range(self.n_categorical)),
            categorical_levels=self.levels(),
            sentiment_length=self.sentiment_length,
        )

    def to_json(self) -> dict:
        doc = {
            "n_deals": self.n_deals,
            "cancel_rate": self.cancel_rate,
            "n_numeric": self.n_numeric,
            "n_categorical": self.n_categorical,
            "levels_per_categorical": (
                self.levels_per_categorical
                if isinstance(self.levels_per_categorical, int)
                else list(self.levels_per_categorical)
            ),
            "sentiment_length": self.sentiment_length,
            "missing_rate": self.missing_rate,
            "signal_strength": self.signal_strength,
            "sentiment_signal": self.sentiment_signal,
            "numeric_rank": self.numeric_rank,
            "date_start": self.date_start.isoformat(),
            "date_end": self.date_end.isoformat(),
            "cutoff_date": None if self.cutoff_date is None else self.cutoff_date.isoformat(),
            "n_before_cutoff": self.n_before_cutoff,
        }
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "GeneratorConfig":
        kwargs = dict(doc)
        for key in ("date_start", "date_end", "cutoff_date"):
            if kwargs.get(key) is not None:
                kwargs[key] = dt.date.fromisoformat(kwargs[key])
        if isinstance(kwargs.get("levels_per_categorical"), list):
            kwargs["levels_per_categorical"] = tuple(kwargs["levels_per_categorical"])
        unknown = set(kwargs) - {f.name for f in cls.__dataclass_fields__.values()}
        if unknown:
            raise BadConfig(f"unknown generator config fields: {sorted(unknown)}")
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise BadConfig(str(exc)) from None


def _ar1_paths(rng, n, length, rho=0.9, sigma=0.12):
    paths = np.empty((n, length))
    paths[:, 0] = rng.normal(0.0, sigma, size=n)
    innov_scale = sigma * np.sqrt(1.0 - rho * rho)
    for t in range(1, length):
        paths[:, t] = rho * paths[:, t - 1] + rng.normal(0.0, innov_scale, size=n)
    return paths


def generate_synthetic(config: GeneratorConfig, seed: int) -> list:
    """Deterministic label-conditional deal universe; see GeneratorConfig."""
    rng = np.random.default_rng(seed)
    n = config.n_deals
    labels = (rng.random(n) < config.cancel_rate).astype(np.int64)

    # numeric block: class means mu0 = 0, mu1 = signal_strength * unit vector
    direction = rng.normal(size=config.n_numeric)
    direction /= np.linalg.norm(direction)
    shift = config.signal_strength * direction
    if config.numeric_rank is None:
        numeric = rng.normal(size=(n, config.n_numeric))
    else:
        loadings = rng.normal(size=(config.numeric_rank, config.n_numeric))
        latent = rng.normal(size=(n, config.numeric_rank))
        numeric = latent @ loadings / np.sqrt(config.numeric_rank)
    numeric = numeric + labels[:, None] * shift[None, :]

    # categorical block: label-1 level probabilities are a tilted copy of the
    # label-0 ones; the tilt magnitude follows signal_strength
    levels = config.levels()
    cat_probs = []
    for lev in levels:
        base = 0.35 + rng.random(len(lev))
        base /= base.sum()
        tilt = rng.normal(size=len(lev))
        tilted = base * np.exp(np.clip(config.signal_strength, 0.0, 3.0) * 0.5 * tilt)
        tilted /= tilted.sum()
        cat_probs.append((base, tilted))
    cat_draws = np.empty((n, config.n_categorical), dtype=np.int64)
    for v, (p0, p1) in enumerate(cat_probs):
        u = rng.random(n)
        cum0 = np.cumsum(p0)
        cum1 = np.cumsum(p1)
        cat_draws[:, v] = np.where(
            labels == 1, np.searchsorted(cum1, u), np.searchsorted(cum0, u)
        )
        np.clip(cat_draws[:, v], 0, len(levels[v]) - 1, out=cat_draws[:, v])

    # sentiment: smooth AR(1) path with a label-dependent drift after the
    # announcement day, clipped to [-1, 1]
    if config.sentiment_length > 0:
        length = config.sentiment_length
        # announcement sits 90/120 of the way through the default window;
        # shorter windows keep that proportion
        announce = min(ANNOUNCE_INDEX, int(round(0.75 * (length - 1))))
        paths = _ar1_paths(rng, n, length)
        tail = length - announce
        if tail > 1 and config.sentiment_signal > 0:
            ramp = np.arange(tail) / (tail - 1)
            drift = np.where(labels == 1, -1.0, 1.0)[:, None] * config.sentiment_signal * ramp
            paths[:, announce:] += drift
        paths = np.clip(paths, -1.0, 1.0)
    else:
        paths = None

    # dates: uniform over the configured range; when a cutoff is pinned, the
    # first n_before_cutoff deals (by index) fall strictly before it
    start = config.date_start.toordinal()
    end = config.date_end.toordinal()
    if config.cutoff_date is None:
        ordinals = rng.integers(start, end + 1, size=n)
    else:
        cut = config.cutoff_date.toordinal()
        if not (start < cut <= end):
            raise BadConfig("cutoff_date must lie inside the date range")
        k = config.n_before_cutoff
        ordinals = np.empty(n, dtype=np.int64)
        ordinals[:k] = rng.integers(start, cut, size=k)
        ordinals[k:] = rng.integers(cut, end + 1, size=n - k)

    # blank a fraction of tabular cells uniformly at random
    miss_num = rng.random((n, config.n_numeric)) < config.missing_rate
    miss_cat = rng.random((n, config.n_categorical)) < config.missing_rate

    records = []
    for i in range(n):
        num = tuple(
            None if miss_num[i, j] else float(numeric[i, j]) for j in range(config.n_numeric)
        )
        cat = tuple(
            None if miss_cat[i, v] else levels[v][cat_draws[i, v]]
            for v in range(config.n_categorical)
        )
        sent = None if paths is None else tuple(float(x) for x in paths[i])
        records.append(
            DealRecord(
                deal_id=f"deal_{i:06d}",
                announce_date=dt.date.fromordinal(int(ordinals[i])),
                numeric=num,
                categorical=cat,
                sentiment=sent,
                label=int(labels[i]),
            )
        )
    return records


# -- array views ---------------------------------------------------------------


def numeric_matrix(deals, schema: DatasetSchema) -> np.ndarray:
    """(n, n_numeric) float matrix with NaN for missing cells."""
    out = np.full((len(deals), schema.n_numeric), np.nan)
    for i, r in enumerate(deals):
        for j, v in enumerate(r.numeric):
            if v is not None:
                out[i, j] = v
    return out


def categorical_codes(deals, schema: DatasetSchema) -> np.ndarray:
    """(n, n_categorical) int codes; -1 for missing."""
    out = np.full((len(deals), schema.n_categorical), -1, dtype=np.int64)
    for i, r in enumerate(deals):
        for v, label in enumerate(r.categorical):
            if label is not None:
                out[i, v] = schema.level_index(v, label)
    return out


def sentiment_matrix(deals, schema: DatasetSchema) -> np.ndarray:
    """(n, sentiment_length) matrix; raises if any deal lacks a sequence."""
    out = np.empty((len(deals), schema.sentiment_length))
    for i, r in enumerate(deals):
        if r.sentiment is None:
            raise MissingSentiment(f"deal {r.deal_id} has no sentiment sequence")
        out[i] = r.sentiment
    return out


def labels_vector(deals) -> np.ndarray:
    return np.array([r.label for r in deals], dtype=np.float64)


def replace_tabular(deal: DealRecord, numeric_row, cat_row, schema: DatasetSchema) -> DealRecord:
    numeric = tuple(float(v) for v in numeric_row)
    categorical = tuple(
        None if code < 0 else schema.categorical_levels[v][int(code)]
        for v, code in enumerate(cat_row)
    )
    return replace(deal, numeric=numeric, categorical=categorical)


def write_schema_json(path, schema: DatasetSchema) -> None:
    with open(path, "w") as fh:
        json.dump(schema.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_schema_json(path) -> DatasetSchema:
    with open(path) as fh:
        return DatasetSchema.from_json(json.load(fh))
