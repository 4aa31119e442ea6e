"""Harness tests: config parsing, run accounting, CSV format, comparison
protocol, and the summary SVG."""

import math
import xml.etree.ElementTree as ET
from dataclasses import replace
from pathlib import Path

import pytest

from zetaopt.config import (
    ConfigError,
    DataSpec,
    ExperimentConfig,
    build_experiment_config,
    parse_kv_text,
)
from zetaopt.harness import (
    CSV_HEADER,
    MetricsRecord,
    run_comparison,
    run_experiment,
    write_metrics_csv,
    write_summary_csv,
)
from zetaopt.report import render_comparison_curves, render_summary_svg


def tiny_config(**overrides) -> ExperimentConfig:
    """Small, fast experiment with enough steps to move off the init."""
    data = DataSpec(n=600, dim=8, classes=3, spread=0.7, test_fraction=0.25)
    base = dict(data=data, hidden_dim=8, epochs=4, batch_size=16, seed=3)
    base.update(overrides)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def comparison():
    return run_comparison(tiny_config(), noise_rates=(0.0, 0.1))


class TestConfigParsing:
    def test_round_trip_values(self):
        kv = parse_kv_text(
            """
            # comment
            seed = 9
            data.kind = blobs
            data.n = 300
            zeta.eta = 0.002   # trailing comment
            adam.eta = 0.0005
            """
        )
        cfg = build_experiment_config(kv)
        assert cfg.seed == 9
        assert cfg.data.n == 300
        assert cfg.zeta.eta == 0.002
        assert cfg.adam.eta == 0.0005

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="zeta.ETA"):
            build_experiment_config(parse_kv_text("zeta.ETA = 1"))

    def test_malformed_line_reports_number(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_kv_text("seed = 1\nnot a kv line\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_kv_text("seed = 1\nseed = 2\n")

    def test_bad_value_type(self):
        with pytest.raises(ConfigError, match="data.n"):
            build_experiment_config(parse_kv_text("data.n = many"))

    def test_noise_rates_list(self):
        cfg = build_experiment_config(parse_kv_text("data.noise_rates = 0.0, 0.2"))
        assert cfg.noise_rates == (0.0, 0.2)

    def test_invalid_hyperparams_surface_as_config_error(self):
        with pytest.raises(ConfigError):
            build_experiment_config(parse_kv_text("zeta.s_min = 0.5"))

    def test_csv_kind_requires_path(self):
        with pytest.raises(ConfigError, match="csv_path"):
            build_experiment_config(parse_kv_text("data.kind = csv"))

    def test_env_seed_override(self, monkeypatch):
        monkeypatch.setenv("ZETA_OPT_SEED", "1234")
        cfg = build_experiment_config(parse_kv_text("seed = 1"), seed=77)
        assert cfg.seed == 1234

    def test_cli_seed_override(self):
        cfg = build_experiment_config(parse_kv_text("seed = 1"), seed=77)
        assert cfg.seed == 77


class TestRunExperiment:
    def test_step_accounting(self):
        cfg = tiny_config()
        records, summary = run_experiment(cfg)
        n_train = summary.n_train
        expect = cfg.epochs * math.ceil(n_train / cfg.batch_size)
        train_rows = [r for r in records if r.split == "train"]
        assert len(train_rows) == expect == summary.steps
        test_rows = [r for r in records if r.split == "test"]
        assert len(test_rows) == cfg.epochs

    def test_steps_monotone(self):
        records, _ = run_experiment(tiny_config())
        steps = [r.step for r in records]
        assert all(b >= a for a, b in zip(steps, steps[1:]))

    def test_deterministic_records(self):
        cfg = tiny_config()
        ra, sa = run_experiment(cfg)
        rb, sb = run_experiment(cfg)
        assert sa.final_test_accuracy == sb.final_test_accuracy
        assert [r.loss for r in ra] == [r.loss for r in rb]

    def test_separable_limit_reaches_full_accuracy(self):
        cfg = tiny_config(
            data=DataSpec(n=1200, dim=6, classes=3, spread=1e-6, test_fraction=0.25),
            epochs=5,
        )
        for optimizer in ("zeta", "adam"):
            _, summary = run_experiment(replace(cfg, optimizer=optimizer))
            assert summary.final_test_accuracy == 1.0

    def test_zeta_rows_respect_schedule_bounds(self):
        cfg = tiny_config(optimizer="zeta")
        records, _ = run_experiment(cfg)
        for r in records:
            if r.split == "train":
                assert cfg.zeta.s_min <= r.s_t <= cfg.zeta.s_max
                assert r.boost >= 1.0
                assert r.zeta_s > 1.0

    def test_adam_rows_leave_zeta_fields_empty(self):
        cfg = tiny_config(optimizer="adam")
        records, _ = run_experiment(cfg)
        train = [r for r in records if r.split == "train"]
        for r in train:
            assert r.s_t is None and r.zeta_s is None and r.delta_t is None
            assert r.rho_t is None and r.boost is None
            assert r.lr == cfg.adam.eta
            assert r.grad_norm is not None and r.update_norm is not None

    def test_csv_written_when_out_dir_set(self, tmp_path):
        cfg = tiny_config(out_dir=str(tmp_path))
        _, summary = run_experiment(cfg)
        assert summary.csv_path is not None
        text = Path(summary.csv_path).read_text().splitlines()
        assert text[0] == CSV_HEADER
        assert len(text) == 1 + summary.steps + cfg.epochs

    def test_csv_level_replay_of_optimizer_invariants(self, tmp_path):
        # re-derive the schedule bounds from the written file itself
        cfg = tiny_config(out_dir=str(tmp_path))
        _, summary = run_experiment(cfg)
        header = CSV_HEADER.split(",")
        i_split = header.index("split")
        i_s = header.index("s_t")
        i_boost = header.index("boost")
        rows = Path(summary.csv_path).read_text().splitlines()[1:]
        train_rows = [r.split(",") for r in rows if r.split(",")[i_split] == "train"]
        assert len(train_rows) == summary.steps
        for row in train_rows:
            assert cfg.zeta.s_min <= float(row[i_s]) <= cfg.zeta.s_max
            assert float(row[i_boost]) >= 1.0


class TestMetricsCsv:
    def test_empty_records_header_only(self, tmp_path):
        path = tmp_path / "m.csv"
        write_metrics_csv([], path)
        assert path.read_text() == CSV_HEADER + "\n"

    def test_nine_significant_digits_round_trip(self, tmp_path):
        rec = MetricsRecord(
            "r", "zeta", 1, 1, "train", 1.0 / 3.0, 0.5,
            lr=0.0015, s_t=1.23456789123, zeta_s=2.612375348685488,
            delta_t=54.5454545454, rho_t=0.1, boost=1.02,
            grad_norm=3.0, update_norm=0.25,
        )
        path = tmp_path / "m.csv"
        write_metrics_csv([rec], path)
        row = path.read_text().splitlines()[1].split(",")
        assert row[5] == "0.333333333"
        assert row[8] == "1.23456789"
        assert row[9] == "2.61237535"
        # every float field parses back to the rendered precision
        assert float(row[10]) == pytest.approx(54.5454545454, rel=1e-8)

    def test_adam_inapplicable_fields_empty(self, tmp_path):
        rec = MetricsRecord(
            "r", "adam", 1, 1, "train", 0.5, 0.5,
            lr=0.001, grad_norm=1.0, update_norm=0.1,
        )
        path = tmp_path / "m.csv"
        write_metrics_csv([rec], path)
        row = path.read_text().splitlines()[1].split(",")
        header = CSV_HEADER.split(",")
        for col in ("s_t", "zeta_s", "delta_t", "rho_t", "boost"):
            assert row[header.index(col)] == ""
        assert row[header.index("lr")] == "0.001"


class TestComparison:
    def test_shared_initialization(self, comparison):
        for cond in comparison.conditions:
            assert cond.zeta.init_checksum == cond.adam.init_checksum

    def test_accuracies_in_range(self, comparison):
        for cond in comparison.conditions:
            for run in (cond.zeta, cond.adam):
                assert 0.0 <= run.final_test_accuracy <= 1.0

    def test_beats_majority_baseline(self, comparison):
        for cond in comparison.conditions:
            for run in (cond.zeta, cond.adam):
                assert run.final_test_accuracy > run.majority_baseline

    def test_summary_csv(self, comparison, tmp_path):
        path = tmp_path / "summary.csv"
        write_summary_csv(comparison, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1 + 2 * len(comparison.conditions)
        assert lines[0].startswith("condition,optimizer,")


class TestSummarySvg:
    def test_wellformed_xml_with_four_bars(self, comparison, tmp_path):
        path = tmp_path / "summary.svg"
        render_summary_svg(comparison, path)
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")
        ns = {"s": "http://www.w3.org/2000/svg"}
        bars = [
            r
            for r in root.iter("{http://www.w3.org/2000/svg}rect")
            if "bar" in (r.get("class") or "").split()
        ]
        assert len(bars) == 4

    def test_bar_heights_proportional_to_accuracy(self, comparison, tmp_path):
        path = tmp_path / "summary.svg"
        render_summary_svg(comparison, path)
        root = ET.parse(path).getroot()
        bars = [
            r
            for r in root.iter("{http://www.w3.org/2000/svg}rect")
            if "bar" in (r.get("class") or "").split()
        ]
        accs = []
        for cond in comparison.conditions:
            accs += [cond.zeta.final_test_accuracy, cond.adam.final_test_accuracy]
        heights = [float(b.get("height")) for b in bars]
        scale = heights[0] / accs[0]
        for h, a in zip(heights, accs):
            assert h / scale == pytest.approx(a, abs=0.005 * max(accs))

    def test_empty_summary_rejected(self, tmp_path):
        from zetaopt.harness import ComparisonSummary

        with pytest.raises(ValueError):
            render_summary_svg(ComparisonSummary(conditions=[]), tmp_path / "x.svg")

    def test_curves_figure_written(self, comparison, tmp_path):
        path = tmp_path / "curves.png"
        render_comparison_curves(comparison, path)
        assert path.stat().st_size > 1000
