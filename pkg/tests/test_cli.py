import json
import subprocess
import sys

import numpy as np
import pytest

from proxmatch import io
from proxmatch.cli import main
from proxmatch.edge import Activity, Advertisement, DistanceReport
from proxmatch.matcher import MatchResult, Trust, TruthRecord
from proxmatch.pathloss import DEFAULT_MODEL, RangeSample


def run(*argv):
    return main([str(a) for a in argv])


class TestFit:
    def test_noiseless_samples_recover_the_model(self, tmp_path, capsys):
        samples_path = tmp_path / "samples.csv"
        io.write_samples(
            samples_path,
            [RangeSample(d, DEFAULT_MODEL.forward(d)) for d in (0.5, 1.0, 2.0, 4.0, 8.0)],
        )
        out = tmp_path / "model.json"
        assert run("fit", samples_path, "-o", out) == 0
        m = io.read_model(out)
        assert m.n == pytest.approx(1.011, rel=1e-9)
        assert m.rssi0 == pytest.approx(-45.6, rel=1e-9)
        assert "n=" in capsys.readouterr().out

    def test_noisy_samples_land_close(self, tmp_path):
        rng = np.random.default_rng(123)
        d = rng.uniform(0.1, 6.0, size=20000)
        z = [DEFAULT_MODEL.forward(x) + e for x, e in zip(d, rng.normal(0.0, 6.99, size=20000))]
        samples_path = tmp_path / "samples.csv"
        io.write_samples(samples_path, [RangeSample(a, b) for a, b in zip(d, z)])
        out = tmp_path / "model.json"
        assert run("fit", samples_path, "-o", out) == 0
        m = io.read_model(out)
        assert abs(m.n - 1.011) < 0.05
        assert abs(m.rssi0 + 45.6) < 0.3

    def test_empty_samples_exit_2(self, tmp_path, capsys):
        p = tmp_path / "samples.csv"
        p.write_text("distance_m,rssi_db\n")
        assert run("fit", p) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_file_exits_2(self, tmp_path, capsys):
        assert run("fit", tmp_path / "nope.csv") == 2
        assert "error:" in capsys.readouterr().err

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as e:
            run("fit", "--frobnicate")
        assert e.value.code == 2


class TestStagedChain:
    def test_full_chain(self, tmp_path, capsys):
        scen = tmp_path / "scen.json"
        out = tmp_path / "run"
        assert run("scenario", "static", "-n", 3, "--spacing", 2.0,
                   "--duration", 120, "-o", scen) == 0
        assert run("simulate", scen, "--out-dir", out, "--seed", 7) == 0
        assert run("estimate", out / "advertisements.jsonl", "-o", out / "reports.jsonl") == 0
        assert run("match", out / "reports.jsonl", "-o", out / "matches.jsonl") == 0
        assert run("evaluate", out / "matches.jsonl", out / "truth.jsonl",
                   "-o", out / "metrics.json") == 0
        doc = json.loads((out / "metrics.json").read_text())
        assert doc["total"] == 3
        assert "accuracy" in capsys.readouterr().out

    def test_pipeline_is_byte_identical_to_the_staged_run(self, tmp_path):
        scen = tmp_path / "scen.json"
        run("scenario", "static", "-n", 3, "--spacing", 2.0, "--duration", 120, "-o", scen)
        a, b = tmp_path / "staged", tmp_path / "piped"
        assert run("simulate", scen, "--out-dir", a, "--seed", 5) == 0
        assert run("estimate", a / "advertisements.jsonl", "-o", a / "reports.jsonl") == 0
        assert run("match", a / "reports.jsonl", "-o", a / "matches.jsonl") == 0
        assert run("evaluate", a / "matches.jsonl", a / "truth.jsonl",
                   "-o", a / "metrics.json") == 0
        assert run("pipeline", scen, "--out-dir", b, "--seed", 5) == 0
        for name in ("advertisements.jsonl", "truth.jsonl", "reports.jsonl",
                     "matches.jsonl", "metrics.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_same_seed_same_bytes_different_seed_different_bytes(self, tmp_path):
        scen = tmp_path / "scen.json"
        run("scenario", "static", "-n", 2, "--spacing", 2.0, "--duration", 60, "-o", scen)
        for d, seed in (("r1", 3), ("r2", 3), ("r3", 4)):
            assert run("pipeline", scen, "--out-dir", tmp_path / d, "--seed", seed) == 0
        ads = [(tmp_path / d / "advertisements.jsonl").read_bytes() for d in ("r1", "r2", "r3")]
        assert ads[0] == ads[1]
        assert ads[0] != ads[2]

    def test_swap_scenario_command(self, tmp_path):
        scen = tmp_path / "swap.json"
        assert run("scenario", "swap", "-n", 3, "--spacing", 2.0,
                   "--swap-times", "120,240", "--duration", 360, "-o", scen) == 0
        out = tmp_path / "run"
        assert run("pipeline", scen, "--out-dir", out, "--seed", 1) == 0
        doc = json.loads((out / "metrics.json").read_text())
        assert doc["total"] == 9

    def test_zero_duration_pipeline_is_empty_but_ok(self, tmp_path):
        scen = tmp_path / "scen.json"
        run("scenario", "static", "-n", 1, "--spacing", 1.0, "--duration", 0, "-o", scen)
        out = tmp_path / "run"
        assert run("pipeline", scen, "--out-dir", out) == 0
        assert (out / "advertisements.jsonl").read_text() == ""
        assert (out / "matches.jsonl").read_text() == ""
        doc = json.loads((out / "metrics.json").read_text())
        assert doc["total"] == 0 and doc["accuracy"] is None
        assert (out / "errors.csv").read_text().startswith("wearable,tag,")


class TestEvaluateCommand:
    def test_reproduces_the_reference_percentages(self, tmp_path):
        matches, truth = [], []
        spec = [(347, "W1", Trust.SURE), (143, "W1", Trust.UNSURE),
                (5, "W2", Trust.SURE), (51, "W2", Trust.UNSURE)]
        k = 0
        for n, wearable, trust in spec:
            for _ in range(n):
                tag = f"T{k}"
                k += 1
                truth.append(TruthRecord(tag=tag, start=0.0, stop=60.0, wearable="W1"))
                matches.append(MatchResult(tag=tag, start=0.0, stop=60.0,
                                           wearable=wearable, trust=trust, margin=1.0))
        io.write_matches(tmp_path / "matches.jsonl", matches)
        io.write_truth(tmp_path / "truth.jsonl", truth)
        out = tmp_path / "metrics.json"
        assert run("evaluate", tmp_path / "matches.jsonl", tmp_path / "truth.jsonl",
                   "-o", out) == 0
        doc = json.loads(out.read_text())
        assert doc["accuracy"] == {"ratio": "490/546", "percent": 89.7}
        assert doc["recall"] == {"ratio": "347/490", "percent": 70.8}
        assert doc["precision"] == {"ratio": "347/352", "percent": 98.6}

    def test_orphan_match_exits_2(self, tmp_path, capsys):
        io.write_matches(
            tmp_path / "matches.jsonl",
            [MatchResult(tag="T1", start=0.0, stop=10.0, wearable="W1",
                         trust=Trust.SURE, margin=1.0)],
        )
        io.write_truth(
            tmp_path / "truth.jsonl",
            [TruthRecord(tag="T1", start=500.0, stop=600.0, wearable="W1")],
        )
        assert run("evaluate", tmp_path / "matches.jsonl", tmp_path / "truth.jsonl") == 2
        assert "no ground-truth" in capsys.readouterr().err


def write_two_session_stream(path):
    """One tag, two activity runs separated by a 15 s pause."""
    ads = [
        Advertisement(ts=float(t), wearable="W1", tag="T1", rssi=-45.6, activity=Activity.USAGE)
        for t in (0.0, 7.0, 14.0, 29.0, 36.0)
    ]
    io.write_advertisements(path, ads)


class TestEstimateFlags:
    def test_gap_flag_splits_sessions(self, tmp_path):
        ads = tmp_path / "ads.jsonl"
        write_two_session_stream(ads)
        out = tmp_path / "reports.jsonl"
        assert run("estimate", ads, "-o", out) == 0
        assert len(io.read_reports(out)) == 1  # 15 s < default 21 s
        assert run("estimate", ads, "-o", out, "--gap-s", "10") == 0
        assert len(io.read_reports(out)) == 2

    def test_active_classes_flag(self, tmp_path):
        ads_path = tmp_path / "ads.jsonl"
        io.write_advertisements(
            ads_path,
            [Advertisement(ts=7.0 * k, wearable="W1", tag="T1", rssi=-45.6,
                           activity=Activity.TRANSPORT) for k in range(5)],
        )
        out = tmp_path / "reports.jsonl"
        assert run("estimate", ads_path, "-o", out) == 0
        assert io.read_reports(out) == []
        assert run("estimate", ads_path, "-o", out, "--active-classes", "usage,transport") == 0
        assert len(io.read_reports(out)) == 1

    def test_bad_active_class_exits_2(self, tmp_path, capsys):
        ads = tmp_path / "ads.jsonl"
        write_two_session_stream(ads)
        assert run("estimate", ads, "-o", tmp_path / "r.jsonl",
                   "--active-classes", "inactive") == 2
        assert "active" in capsys.readouterr().err

    def test_r_and_dt_mode_change_the_estimates(self, tmp_path):
        rng = np.random.default_rng(31)
        ads_path = tmp_path / "ads.jsonl"
        io.write_advertisements(
            ads_path,
            [Advertisement(ts=7.0 * k, wearable="W1", tag="T1",
                           rssi=float(np.clip(-50.0 + rng.normal(0, 6), -127, 20)),
                           activity=Activity.USAGE) for k in range(20)],
        )
        outs = {}
        for name, flags in {
            "base": [],
            "r": ["--r", "48.92"],
            "dt": ["--dt-mode", "dt_linear"],
        }.items():
            out = tmp_path / f"{name}.jsonl"
            assert run("estimate", ads_path, "-o", out, *flags) == 0
            outs[name] = io.read_reports(out)[0].distance
        assert outs["base"] != outs["r"]
        assert outs["base"] != outs["dt"]

    def test_bare_model_json_is_a_valid_config(self, tmp_path):
        model_path = tmp_path / "model.json"
        io.write_model(model_path, DEFAULT_MODEL)
        ads = tmp_path / "ads.jsonl"
        write_two_session_stream(ads)
        assert run("estimate", ads, "-o", tmp_path / "r.jsonl", "--config", model_path) == 0

    def test_skipped_lines_are_reported_with_numbers(self, tmp_path, capsys):
        ads = tmp_path / "ads.jsonl"
        good = {"ts": 0.0, "wearable": "W1", "tag": "T1", "rssi_db": -45.6, "activity": "usage"}
        ads.write_text(json.dumps(good) + "\nnot json at all\n")
        assert run("estimate", ads, "-o", tmp_path / "r.jsonl") == 0
        assert ":2: skipped" in capsys.readouterr().err


class TestMatchFlags:
    def test_margin_flag(self, tmp_path):
        reports = tmp_path / "reports.jsonl"
        io.write_reports(
            reports,
            [
                DistanceReport(wearable="W1", tag="T1", start=0.0, stop=60.0,
                               distance=1.0, n_obs=5),
                DistanceReport(wearable="W2", tag="T1", start=0.0, stop=60.0,
                               distance=3.0, n_obs=5),
            ],
        )
        out = tmp_path / "matches.jsonl"
        assert run("match", reports, "-o", out) == 0
        assert io.read_matches(out)[0].trust is Trust.SURE
        assert run("match", reports, "-o", out, "--margin-m", "10") == 0
        assert io.read_matches(out)[0].trust is Trust.UNSURE


class TestEntryPoints:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "proxmatch", "--help"],
            capture_output=True, text=True, timeout=60,
        )
        assert proc.returncode == 0
        assert "pipeline" in proc.stdout

    def test_bad_scenario_json_exits_2(self, tmp_path, capsys):
        p = tmp_path / "scen.json"
        p.write_text('{"seed": 0}')
        assert run("pipeline", p, "--out-dir", tmp_path / "out") == 2
        assert "error:" in capsys.readouterr().err
