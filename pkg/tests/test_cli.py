import json

import numpy as np
import pytest

from rare_event.cli import ExperimentConfig, apply_override, main, to_ticks
from rare_event.csvio import format_csv, ingest_csv, parse_csv, write_csv
from rare_event.errors import (
    BadEventValue,
    ConfigError,
    NoEvents,
    NonUniformTicks,
    ParseError,
)
from rare_event.evaluation import ExperimentReport
from rare_event.synth import generate, preset
from rare_event.timeseries import TimeSeries


@pytest.fixture
def data_csv(tmp_path):
    path = tmp_path / "data.csv"
    write_csv(generate(preset("ad_like_small", seed=2)), path)
    return path


class TestCsv:
    def test_three_rows(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("tick,a,b,event\n1,0.5,1,0\n2,0.25,,1\n3,1e3,2,0\n")
        s = ingest_csv(path)
        assert s.n_ticks == 3 and s.n_features == 2
        assert np.isnan(s.features[1, 1])
        assert s.events.tolist() == [0, 1, 0]

    def test_bad_event_value_line(self):
        with pytest.raises(BadEventValue) as exc:
            parse_csv("tick,a,event\n1,0.5,0\n2,0.1,2\n")
        assert exc.value.line == 3 and "line 3" in str(exc.value)

    def test_non_uniform_ticks(self):
        with pytest.raises(NonUniformTicks) as exc:
            parse_csv("tick,a,event\n1,0,0\n2,0,0\n4,0,0\n")
        assert exc.value.line == 4

    @pytest.mark.parametrize(
        "text,line",
        [
            ("tick,a\n1,0\n", 1),
            ("time,a,event\n1,0,0\n", 1),
            ("tick,a,event\n1,0\n", 2),
            ("tick,a,event\nx,0,0\n", 2),
            ("tick,a,event\n1,abc,0\n", 2),
            ("tick,a,event\n1,inf,0\n", 2),
            ("", 1),
            ("tick,a,event\n", 2),
        ],
    )
    def test_parse_errors(self, text, line):
        with pytest.raises(ParseError) as exc:
            parse_csv(text)
        assert exc.value.line == line

    def test_round_trip_keeps_tick_numbers(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((6, 2))
        x[2, 1] = np.nan
        s = TimeSeries(x, [0, 0, 1, 0, 0, 1], first_tick=100)
        text = format_csv(s, ["p", "q"])
        again, names = parse_csv(text)
        assert names == ["p", "q"] and again.first_tick == 100
        assert np.array_equal(again.features, s.features, equal_nan=True)
        assert format_csv(again, names) == text


class TestConfig:
    @pytest.mark.parametrize(
        "value,minutes,ticks",
        [(24, 60, 24), ("24", 60, 24), ("24h", 60, 24), ("24h", 180, 8), ("1.5h", 30, 3)],
    )
    def test_to_ticks(self, value, minutes, ticks):
        assert to_ticks(value, minutes, "omega") == ticks

    @pytest.mark.parametrize("value", ["7h", "abc", 0, True])
    def test_to_ticks_errors(self, value):
        with pytest.raises(ConfigError):
            to_ticks(value, 180, "omega")

    def test_needs_exactly_one_source(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_mapping({})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_mapping({"input": "a.csv", "synth": {"preset": "ad_like"}})

    @pytest.mark.parametrize(
        "bad",
        [{"resample": "smote"}, {"tau": -1}, {"unknown": 1}, {"classifiers": []},
         {"classifiers": [{"family": "mlp"}]}, {"synth": {"preset": "ad_like", "bogus": 1}},
         {"metric": "f1"}, {"fold_strategy": "random"}],
    )
    def test_rejects_bad_config(self, bad):
        data = {"synth": {"preset": "ad_like_small"}, **bad}
        with pytest.raises(Exception) as exc:
            ExperimentConfig.from_mapping(data)
        assert getattr(exc.value, "exit_code", 0) > 0

    def test_runtime_keys_ignored(self):
        cfg = ExperimentConfig.from_mapping({"synth": {"preset": "ad_like_small"}, "workers": 4})
        assert "workers" not in cfg.to_dict()

    def test_override(self):
        data = {"synth": {"preset": "ad_like"}}
        apply_override(data, "synth.seed=3")
        apply_override(data, "omega=[12, 24h]")
        assert data == {"synth": {"preset": "ad_like", "seed": 3}, "omega": [12, "24h"]}
        with pytest.raises(ConfigError):
            apply_override(data, "novalue")


class TestCommands:
    def run(self, tmp_path, *args):
        return main([*args, "-o", str(tmp_path / "out")])

    def test_synth_writes_csv(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["synth", "--preset", "ad_like_small", "--output", str(out)]) == 0
        s = ingest_csv(out)
        assert s.n_ticks == 1462 and s.n_features == 9

    def test_label(self, tmp_path, data_csv):
        assert self.run(tmp_path, "label", "--input", str(data_csv), "--omega", "24h") == 0
        lines = (tmp_path / "out" / "labels-w24.csv").read_text().splitlines()
        assert lines[0] == "tick,event,warning_label"
        assert lines[1].startswith("5,")  # tau=4 drops ticks 1..4

    def test_blocks(self, tmp_path, data_csv):
        assert self.run(tmp_path, "blocks", "--input", str(data_csv), "--beta", "150") == 0
        doc = json.loads((tmp_path / "out" / "folds-blocks.json").read_text())
        assert doc["k"] == 5 and doc["beta"] == 150

    def test_cv_on_preset(self, tmp_path):
        code = self.run(tmp_path, "cv", "--preset", "ad_like_small", "--classifier", "gnb",
                        "--omega", "24", "--beta", "150", "--set", "traces=true")
        assert code == 0
        out = tmp_path / "out"
        report = ExperimentReport.from_jsonl((out / "cv-gnb-w24.jsonl").read_text())
        assert len(report.folds) == 5
        scores = [f["score"] for f in report.folds]
        assert report.mean == pytest.approx(sum(scores) / 5, abs=1e-12)
        assert report.config["experiment"]["synth"] == {"preset": "ad_like_small"}
        svg = (out / "cv-gnb-w24.fold0.trace.svg").read_text()
        assert svg.startswith("<svg") and 'stroke="blue"' in svg and 'stroke="red"' in svg
        trace = (out / "cv-gnb-w24.fold0.trace.csv").read_text().splitlines()
        assert trace[0] == "tick,probability,warning_label"
        assert json.loads((out / "cv-gnb-w24.timings.json").read_text())["workers"] == 1

    def test_rerun_from_report_is_byte_identical(self, tmp_path, data_csv, capsys):
        assert self.run(tmp_path, "cv", "--input", str(data_csv), "--classifier", "lr",
                        "--beta", "150", "--resample", "oversample") == 0
        report = tmp_path / "out" / "cv-lr-w24.jsonl"
        code = main(["report", str(report), "--rerun", "-o", str(tmp_path / "again")])
        assert code == 0
        assert (tmp_path / "again" / "cv-lr-w24.jsonl").read_bytes() == report.read_bytes()
        assert "byte for byte" in capsys.readouterr().out

    def test_config_file_and_gridsearch(self, tmp_path):
        cfg = tmp_path / "exp.yaml"
        cfg.write_text(
            "synth: {preset: ad_like_small, seed: 1}\n"
            "omega: [24h]\nbeta: 150\n"
            "classifiers:\n  - family: knn\n    grid: {k: [1, 5, 5]}\n"
        )
        assert self.run(tmp_path, "gridsearch", "-c", str(cfg)) == 0
        report = ExperimentReport.from_jsonl(
            (tmp_path / "out" / "gridsearch-knn-w24.jsonl").read_text()
        )
        assert report.summary["grid_size"] == 3
        assert all(f["chosen_index"] in (0, 2) for f in report.folds if not f["skipped"])

    def test_compare_folds_table(self, tmp_path):
        code = self.run(tmp_path, "compare-folds", "--preset", "ad_like_small", "--beta", "150",
                        "--classifier", "gnb", "--classifier", "lr")
        assert code == 0
        table = (tmp_path / "out" / "compare-folds-w24.table.csv").read_text().splitlines()
        assert table[0] == "strategy,variant,gnb,lr,average"
        assert [r.split(",")[:2] for r in table[1:]] == [
            ["partition", "EE"], ["partition", "EI"], ["blocks", "EE"], ["blocks", "EI"]
        ]

    def test_output_dir_from_environment(self, tmp_path, monkeypatch, data_csv):
        monkeypatch.setenv("RARE_EVENT_OUTPUT_DIR", str(tmp_path / "env"))
        assert main(["label", "--input", str(data_csv)]) == 0
        assert (tmp_path / "env" / "labels-w24.csv").exists()

    def test_exit_codes(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("tick,a,event\n1,0.5,0\n2,0.1,2\n")
        assert self.run(tmp_path, "cv", "--input", str(bad)) == BadEventValue.exit_code
        bad.write_text("tick,a,event\n1,0,0\n3,0,0\n")
        assert self.run(tmp_path, "cv", "--input", str(bad)) == NonUniformTicks.exit_code
        assert self.run(tmp_path, "cv", "--preset", "ad_like_small",
                        "--omega", "7h", "--set", "tick_minutes=180") == ConfigError.exit_code
        assert self.run(tmp_path, "cv", "--input", str(tmp_path / "missing.csv")) == 74
        err = capsys.readouterr().err
        assert "BadEventValue" in err and "line 3" in err

    def test_no_events_exit_code(self, tmp_path):
        path = tmp_path / "quiet.csv"
        path.write_text("tick,a,event\n" + "".join(f"{t},{t % 3},0\n" for t in range(1, 40)))
        assert self.run(tmp_path, "blocks", "--input", str(path)) == NoEvents.exit_code
