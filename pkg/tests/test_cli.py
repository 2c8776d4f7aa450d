import json
import math

import pytest

from nestisac.experiments.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main


class TestBeamCommands:
    def test_metrics_json(self, capsys):
        assert main(["beam-metrics", "--n1", "8", "--n2", "8"]) == EXIT_OK
        rec = json.loads(capsys.readouterr().out)
        assert rec["regime"] == "mid_N2"
        assert len(rec["grating_lobes"]) == 8

    def test_metrics_json_infinite_plmr(self, capsys):
        assert main(["beam-metrics", "--n1", "0", "--n2", "6", "--json"]) == EXIT_OK
        rec = json.loads(capsys.readouterr().out)
        assert math.isinf(rec["plmr_numeric"])

    def test_metrics_csv(self, capsys):
        assert main(["beam-metrics", "--n1", "32", "--n2", "5", "--csv"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("n1,n2,m,regime")
        assert lines[1].startswith("32,5,37,mid_N2")
        assert lines[-1].startswith("# config_hash=")

    def test_metrics_bad_args(self, capsys):
        assert main(["beam-metrics", "--n1", "0", "--n2", "0"]) == EXIT_CONFIG
        assert main(["beam-metrics", "--n1", "2"]) == EXIT_CONFIG
        assert main(["beam-metrics", "--n1", "2", "--n2", "2", "--csv", "--json"]) == EXIT_CONFIG

    def test_pattern(self, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["beam-pattern", "--n1", "2", "--n2", "2", "--samples", "5", "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "delta,gain"
        assert lines[3] == "0.0,1.0"
        assert len(lines) == 7

    def test_pattern_bad_samples(self):
        assert main(["beam-pattern", "--n1", "2", "--n2", "2", "--samples", "0"]) == EXIT_CONFIG


class TestSimulate:
    def test_rate(self, tmp_path):
        out, plot = tmp_path / "r.csv", tmp_path / "r.svg"
        code = main(["simulate-rate", "--geometry", "nested:3,3", "--trials", "3", "--k", "3", "--k-c", "2",
                     "--out", str(out), "--plot", str(plot)])
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0].startswith("arch,geometry,mean_rate")
        assert lines[1].startswith('test,"nested:3,3"')
        assert plot.read_text().startswith("<?xml")

    def test_rate_config_errors(self):
        assert main(["simulate-rate", "--trials", "0"]) == EXIT_CONFIG
        assert main(["simulate-rate", "--geometry", "hex:3"]) == EXIT_CONFIG
        assert main(["simulate-rate", "--channel", "rayleigh"]) == EXIT_CONFIG

    def test_doa(self, tmp_path):
        out = tmp_path / "d.csv"
        code = main(["simulate-doa", "--geometry", "nested:2,2", "--sources=10,-20", "--trials", "2",
                     "--snapshots", "500", "--out", str(out)])
        assert code == EXIT_OK
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "trial,source_idx,true_deg,est_deg"
        assert len(lines) == 5
        assert lines[1].startswith("0,0,-20.0,")
        assert abs(float(lines[1].split(",")[3]) + 20.0) < 1.0

    def test_doa_under_resolution_exits_3(self, capsys):
        code = main(["simulate-doa", "--geometry", "ula:4", "--sources=-30,-10,10,30"])
        assert code == EXIT_NUMERICAL
        assert "numerical failure" in capsys.readouterr().err

    @pytest.mark.parametrize("sources", ["", "a,b", "95"])
    def test_doa_bad_sources(self, sources):
        assert main(["simulate-doa", "--geometry", "ula:4", f"--sources={sources}"]) == EXIT_CONFIG


class TestSweep:
    def test_sweep_to_config_output(self, tmp_path):
        out = tmp_path / "s.csv"
        cfg = tmp_path / "s.cfg"
        cfg.write_text(f"experiment = fig4_m_sweep\nm_values = 4\ntheta_max_values = 5\ntrials = 2\n"
                       f"output = {out}\n")
        assert main(["sweep", "--config", str(cfg)]) == EXIT_OK
        text = out.read_text()
        assert "m,theta_max,arch,mean_rate,sum_rate" in text
        assert text.splitlines()[-1].startswith("# config_hash=")

    def test_sweep_overrides_change_hash(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("experiment = custom\ngeometry = nested:2,2\ntrials = 3\n")
        assert main(["sweep", "--config", str(cfg)]) == EXIT_OK
        first = capsys.readouterr().out
        assert main(["sweep", "--config", str(cfg), "--trials", "2", "--seed", "4"]) == EXIT_OK
        second = capsys.readouterr().out
        assert first.splitlines()[-1] != second.splitlines()[-1]

    def test_sweep_bad_config(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("experiment = custom\ntrials = -1\n")
        assert main(["sweep", "--config", str(cfg)]) == EXIT_CONFIG
        assert main(["sweep", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_no_command():
    assert main([]) == EXIT_CONFIG
