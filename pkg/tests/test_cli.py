import csv
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from nlcs import cli
from nlcs.sweep import (
    CRITERIA,
    PRESETS,
    ConfigError,
    Grid,
    SweepConfig,
    compute_sweep,
    rows_to_csv,
    run_figure_sweep,
    verify,
)

SMALL = {
    "name": "small",
    "model": "hydrogen",
    "kinds": ["nlcs", "dual"],
    "criteria": ["g2", "I1"],
    "amplitude_grid": {"min": 0.1, "max": 0.8, "steps": 5},
}


def _read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_roundtrip(self):
        for cfg in PRESETS.values():
            assert SweepConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize("patch", [
        {"amplitude_grid": {"min": 0.1, "max": 0.2, "steps": 1}},
        {"amplitude_grid": {"min": 0.3, "max": 0.2, "steps": 4}},
        {"kinds": ["bogus"]},
        {"kinds": []},
        {"criteria": ["g3"]},
        {"model": "helium"},
        {"kinds": ["gk"]},
        {"kinds": ["gk"], "gamma": 0.0},
        {"output": {"format": "xlsx"}},
    ])
    def test_invalid(self, patch):
        with pytest.raises(ConfigError):
            SweepConfig.from_dict({**SMALL, **patch})

    def test_missing_field(self):
        with pytest.raises(ConfigError):
            SweepConfig.from_dict({"model": "hydrogen"})

    def test_presets_cover_figures(self):
        assert sorted(PRESETS) == [f"fig{i}" for i in range(1, 7)]
        assert {c for p in ("fig1", "fig2", "fig3") for c in PRESETS[p].criteria} == set(CRITERIA)
        assert {c for p in ("fig4", "fig5", "fig6") for c in PRESETS[p].criteria} == set(CRITERIA)
        assert PRESETS["fig5"].gamma_grid.steps == 80 and PRESETS["fig1"].amplitude_grid.steps == 200


class TestSweep:
    def test_two_step_grid(self, tmp_path):
        cfg = SweepConfig.from_dict({**SMALL, "amplitude_grid": {"min": 0.1, "max": 0.5, "steps": 2}})
        paths = run_figure_sweep(cfg, tmp_path)
        assert len(paths) == 2 * 2 + 1
        rows = _read(tmp_path / "dual_g2.csv")
        assert [float(r["amplitude"]) for r in rows] == [0.1, 0.5]
        assert json.loads((tmp_path / "config.json").read_text())["kinds"] == ["nlcs", "dual"]

    def test_worker_count_does_not_change_output(self, tmp_path):
        cfg = SweepConfig.from_dict({
            "name": "gk", "model": "poschl-teller", "kinds": ["gk", "gk-combination-s1"],
            "criteria": ["I2"], "amplitude_grid": {"min": 0.1, "max": 0.9, "steps": 4},
            "gamma_grid": {"min": 0.5, "max": 3.0, "steps": 3},
        })
        run_figure_sweep(cfg, tmp_path / "a", workers=1)
        run_figure_sweep(cfg, tmp_path / "b", workers=3)
        for name in ("gk_I2.csv", "gk-combination-s1_I2.csv", "config.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        rows = _read(tmp_path / "a" / "gk_I2.csv")
        assert len(rows) == 12 and rows[1]["gamma"] != rows[0]["gamma"]

    def test_domain_violation_is_missing_cell(self):
        cfg = SweepConfig.from_dict({**SMALL, "kinds": ["nlcs"],
                                     "amplitude_grid": {"min": 0.5, "max": 1.5, "steps": 3}})
        rows = compute_sweep(cfg)["nlcs"]
        assert [r["source"] for r in rows] == ["oracle", "missing", "missing"]
        text = rows_to_csv(rows)
        assert text.splitlines()[2].startswith("1.0,,,")

    def test_json_output(self, tmp_path):
        cfg = SweepConfig.from_dict({**SMALL, "output": {"format": "json"}})
        run_figure_sweep(cfg, tmp_path)
        data = json.loads((tmp_path / "nlcs_g2.json").read_text())
        assert data["criterion"] == "g2" and len(data["rows"]) == 5

    @given(st.floats(0.01, 0.5), st.floats(0.51, 0.95), st.integers(2, 6))
    @settings(max_examples=10, deadline=None)
    def test_grid_rows(self, lo, hi, steps):
        cfg = SweepConfig("p", "hydrogen", ("dual",), Grid(lo, hi, steps), ("g2",))
        rows = compute_sweep(cfg)["dual"]
        assert len(rows) == steps
        assert all(r["g2"] < 1 for r in rows)


class TestVerify:
    def test_all_pass(self):
        report = verify()
        assert report["passed"], [c for c in report["checks"] if not c["passed"]]
        names = " ".join(c["name"] for c in report["checks"])
        for fam in ("canonical", "reordering", "Heisenberg", "commutator", "overlap"):
            assert fam in names

    def test_unknown_model(self):
        with pytest.raises(ConfigError):
            verify("helium")


class TestCommandLine:
    def test_sweep_preset(self, tmp_path, capsys):
        assert cli.main(["sweep", "--config", json.dumps(SMALL), "--out", str(tmp_path)]) == 0
        assert "dual_I1.csv" in capsys.readouterr().out

    def test_config_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(SMALL))
        assert cli.main(["sweep", "--config", str(p), "--out", str(tmp_path / "o"), "--format", "json"]) == 0
        assert (tmp_path / "o" / "nlcs_g2.json").exists()

    def test_bad_config_exit_2(self, capsys):
        bad = {**SMALL, "amplitude_grid": {"min": 0, "max": 1, "steps": 1}}
        assert cli.main(["sweep", "--config", json.dumps(bad)]) == 2
        assert "error" in capsys.readouterr().err

    def test_verify_exit_codes(self, monkeypatch, capsys):
        assert cli.main(["verify", "--model", "identity"]) == 0
        monkeypatch.setattr(cli, "verify", lambda model: {"passed": False, "checks": []})
        assert cli.main(["verify"]) == 1

    def test_state(self, capsys):
        spec = '{"kind": "dual", "model": "hydrogen", "alpha": 0.5}'
        assert cli.main(["state", "--spec", spec, "--dump-coeffs"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["report"]["statistics"] == "sub-Poissonian"
        assert len(out["coeffs"]) == out["dim"]
        assert math.isclose(sum(a * a + b * b for a, b in out["coeffs"]), 1.0, rel_tol=1e-12)

    def test_state_outside_domain(self, capsys):
        assert cli.main(["state", "--spec", '{"kind": "nlcs", "model": "hydrogen", "alpha": 2}']) == 2

    def test_spectrum(self, capsys):
        assert cli.main(["spectrum", "--model", "poschl-teller", "--n-max", "3"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "n,f_re,f_im,e_n"
        assert float(lines[2].split(",")[3]) == pytest.approx(9.0)

    def test_spectrum_gk_needs_gamma(self):
        assert cli.main(["spectrum", "--transform", "gk-s1", "--model", "poschl-teller"]) == 2
