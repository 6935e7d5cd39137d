import datetime as dt

import numpy as np
import pytest

from mergepipe.dataset import (
    DatasetSchema,
    DealRecord,
    GeneratorConfig,
    SplitSpec,
    generate_synthetic,
    load_deals_csv,
    temporal_split,
    write_deals_csv,
)
from mergepipe.errors import (
    BadConfig,
    BadSentiment,
    DuplicateId,
    EmptySide,
    MalformedRow,
    UnknownCategory,
)


def tiny_schema(sent_len=4):
    return DatasetSchema(
        numeric_names=("tic_ebitda", "premium"),
        categorical_names=("region",),
        categorical_levels=(("US", "EU"),),
        sentiment_length=sent_len,
    )


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n")


HEADER = "deal_id,announce_date,tic_ebitda,premium,region,s000,s001,s002,s003,label"


class TestLoadCsv:
    def test_well_formed_rows(self, tmp_path):
        f = tmp_path / "deals.csv"
        write_csv(
            f,
            [
                HEADER,
                "a,2015-01-02,1.5,0.2,US,0.1,0.2,0.3,0.4,0",
                "b,2016-03-04,2.5,0.1,EU,0.0,0.0,0.0,0.1,1",
                "c,2017-05-06,3.5,0.3,US,-0.5,0.5,-0.5,0.5,0",
            ],
        )
        deals = load_deals_csv(f, tiny_schema())
        assert [d.deal_id for d in deals] == ["a", "b", "c"]
        assert deals[0].numeric == (1.5, 0.2)
        assert deals[1].label == 1

    def test_empty_cell_is_missing(self, tmp_path):
        f = tmp_path / "deals.csv"
        write_csv(f, [HEADER, "a,2015-01-02,,0.2,US,0.1,0.2,0.3,0.4,0"])
        deals = load_deals_csv(f, tiny_schema())
        assert deals[0].numeric == (None, 0.2)

    def test_sentiment_out_of_range(self, tmp_path):
        f = tmp_path / "deals.csv"
        write_csv(f, [HEADER, "a,2015-01-02,1.0,0.2,US,0.1,1.5,0.3,0.4,0"])
        with pytest.raises(BadSentiment):
            load_deals_csv(f, tiny_schema())

    def test_all_empty_sentiment_is_absent(self, tmp_path):
        f = tmp_path / "deals.csv"
        write_csv(f, [HEADER, "a,2015-01-02,1.0,0.2,US,,,,,0"])
        deals = load_deals_csv(f, tiny_schema())
        assert deals[0].sentiment is None

    def test_partial_sentiment_rejected(self, tmp_path):
        f = tmp_path / "deals.csv"
        write_csv(f, [HEADER, "a,2015-01-02,1.0,0.2,US,0.1,,0.3,0.4,0"])
        with pytest.raises(BadSentiment):
            load_deals_csv(f, tiny_schema())

    def test_column_count_mismatch(self, tmp_path):
        f = tmp_path / "deals.csv"
        write_csv(f, [HEADER, "a,2015-01-02,1.0,0.2,US,0.1,0.2,0.3,0"])
        with pytest.raises(MalformedRow):
            load_deals_csv(f, tiny_schema())

    def test_unknown_category(self, tmp_path):
        f = tmp_path / "deals.csv"
        write_csv(f, [HEADER, "a,2015-01-02,1.0,0.2,ASIA,0.1,0.2,0.3,0.4,0"])
        with pytest.raises(UnknownCategory):
            load_deals_csv(f, tiny_schema())

    def test_duplicate_id(self, tmp_path):
        f = tmp_path / "deals.csv"
        write_csv(
            f,
            [
                HEADER,
                "a,2015-01-02,1.0,0.2,US,0.1,0.2,0.3,0.4,0",
                "a,2016-01-02,1.0,0.2,US,0.1,0.2,0.3,0.4,0",
            ],
        )
        with pytest.raises(DuplicateId):
            load_deals_csv(f, tiny_schema())

    def test_round_trip(self, tmp_path):
        cfg = GeneratorConfig(n_deals=30, missing_rate=0.2, sentiment_length=6)
        deals = generate_synthetic(cfg, seed=3)
        schema = cfg.schema()
        f = tmp_path / "out.csv"
        write_deals_csv(f, deals, schema)
        again = load_deals_csv(f, schema)
        assert again == deals
        f2 = tmp_path / "out2.csv"
        write_deals_csv(f2, again, schema)
        assert f.read_bytes() == f2.read_bytes()


def rec(deal_id, date, label=0):
    return DealRecord(deal_id, date, (1.0,), (), None, label)


class TestTemporalSplit:
    def test_cutoff(self):
        deals = [rec("a", dt.date(2018, 5, 1)), rec("b", dt.date(2019, 3, 2))]
        train, test = temporal_split(deals, SplitSpec(cutoff_date=dt.date(2019, 1, 1)))
        assert [r.deal_id for r in train] == ["a"]
        assert [r.deal_id for r in test] == ["b"]

    def test_all_before_cutoff_raises(self):
        deals = [rec("a", dt.date(2018, 5, 1)), rec("b", dt.date(2018, 6, 1))]
        with pytest.raises(EmptySide):
            temporal_split(deals, SplitSpec(cutoff_date=dt.date(2019, 1, 1)))

    def test_partition_property(self):
        cfg = GeneratorConfig(n_deals=200, sentiment_length=0)
        deals = generate_synthetic(cfg, seed=11)
        train, test = temporal_split(deals, SplitSpec(cutoff_date=dt.date(2015, 1, 1)))
        ids = sorted(r.deal_id for r in train) + sorted(r.deal_id for r in test)
        assert sorted(ids) == sorted(r.deal_id for r in deals)
        assert all(r.announce_date < dt.date(2015, 1, 1) for r in train)
        assert all(r.announce_date >= dt.date(2015, 1, 1) for r in test)

    def test_fraction_override(self):
        deals = [rec(str(i), dt.date(2010 + i, 1, 1)) for i in range(10)]
        train, test = temporal_split(deals, SplitSpec(train_fraction_override=0.7))
        assert len(train) == 7 and len(test) == 3

    def test_spec_exclusivity(self):
        with pytest.raises(BadConfig):
            SplitSpec()
        with pytest.raises(BadConfig):
            SplitSpec(cutoff_date=dt.date(2019, 1, 1), train_fraction_override=0.5)

    def test_paper_counts(self):
        cfg = GeneratorConfig(
            n_deals=17_440,
            cancel_rate=0.1984,
            n_numeric=4,
            n_categorical=2,
            sentiment_length=0,
            cutoff_date=dt.date(2019, 1, 1),
            n_before_cutoff=16_525,
        )
        deals = generate_synthetic(cfg, seed=5)
        train, test = temporal_split(deals, SplitSpec(cutoff_date=dt.date(2019, 1, 1)))
        assert (len(train), len(test)) == (16_525, 915)


class TestGenerator:
    def test_deterministic(self):
        cfg = GeneratorConfig(n_deals=1000, cancel_rate=0.2, sentiment_length=8)
        a = generate_synthetic(cfg, seed=7)
        b = generate_synthetic(cfg, seed=7)
        assert a == b

    def test_seed_changes_output(self):
        cfg = GeneratorConfig(n_deals=100, sentiment_length=0)
        assert generate_synthetic(cfg, seed=1) != generate_synthetic(cfg, seed=2)

    def test_cancel_count_within_3_sigma(self):
        n, rate = 17_440, 0.1984
        cfg = GeneratorConfig(n_deals=n, cancel_rate=rate, n_numeric=2, sentiment_length=0)
        deals = generate_synthetic(cfg, seed=13)
        cancelled = sum(r.label for r in deals)
        sigma = np.sqrt(n * rate * (1 - rate))
        assert abs(cancelled - n * rate) <= 3 * sigma

    def test_sentiment_bounds(self):
        cfg = GeneratorConfig(
            n_deals=300, sentiment_length=30, sentiment_signal=1.5, signal_strength=0.0
        )
        deals = generate_synthetic(cfg, seed=2)
        for r in deals:
            assert all(-1.0 <= v <= 1.0 for v in r.sentiment)

    def test_zero_signal_means_coincide(self):
        cfg = GeneratorConfig(n_deals=4000, signal_strength=0.0, sentiment_length=0)
        deals = generate_synthetic(cfg, seed=9)
        X = np.array([r.numeric for r in deals], dtype=float)
        y = np.array([r.label for r in deals])
        gap = np.abs(X[y == 1].mean(axis=0) - X[y == 0].mean(axis=0))
        assert gap.max() < 0.25  # ~4.5 sigma of the mean-difference estimator

    def test_missing_rate_applied(self):
        cfg = GeneratorConfig(n_deals=500, missing_rate=0.3, sentiment_length=0)
        deals = generate_synthetic(cfg, seed=4)
        cells = [v for r in deals for v in r.numeric]
        frac = sum(v is None for v in cells) / len(cells)
        assert 0.25 < frac < 0.35

    def test_bad_config(self):
        with pytest.raises(BadConfig):
            GeneratorConfig(cancel_rate=0.0)
        with pytest.raises(BadConfig):
            GeneratorConfig(missing_rate=1.0)
        with pytest.raises(BadConfig):
            GeneratorConfig(signal_strength=-1.0)

    def test_config_json_round_trip(self):
        cfg = GeneratorConfig(
            n_deals=50,
            numeric_rank=3,
            cutoff_date=dt.date(2019, 1, 1),
            n_before_cutoff=40,
            levels_per_categorical=(2, 3, 2, 4),
        )
        assert GeneratorConfig.from_json(cfg.to_json()) == cfg
