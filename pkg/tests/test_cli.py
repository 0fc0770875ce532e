import json

import numpy as np
import pytest

from phmix import cli
from phmix.config import config_from_dict, config_to_dict, default_config, \
    load_config
from phmix.dirac import VerificationReport
from phmix.errors import ConfigurationError
from phmix.simulate import LEDGER_HEADER

TINY = {
    "geometry": {"n_ax": 4, "n_az": 3, "n_th": 2, "n_fluid": 4},
    "sim": {"dt": 5e-4, "t_end": 2.5e-3},
}


def write_cfg(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


class TestConfig:
    def test_defaults_are_valid(self):
        cfg = default_config()
        assert cfg.scenario == "hot-wall-cooldown"
        assert cfg.geometry.n_ax == cfg.geometry.n_fluid

    def test_lambda_key_maps_to_conductivity(self):
        cfg = config_from_dict({"heat": {"lambda": 7.5}})
        assert cfg.heat.conductivity == 7.5
        assert config_to_dict(cfg)["heat"]["lambda"] == 7.5

    def test_unknown_keys_are_located(self):
        with pytest.raises(ConfigurationError, match="geometry.depht"):
            config_from_dict({"geometry": {"depht": 1.0}})
        with pytest.raises(ConfigurationError, match="top-level"):
            config_from_dict({"geomtry": {}})

    def test_bad_material_value_reported_with_section(self):
        with pytest.raises(ConfigurationError, match="heat"):
            config_from_dict({"heat": {"rho": -2.0}})

    def test_mismatched_axial_meshes_rejected(self):
        with pytest.raises(ConfigurationError, match="n_fluid"):
            config_from_dict({"geometry": {"n_ax": 8, "n_fluid": 6}})

    def test_unknown_scenario_rejected(self):
        with pytest.raises(ConfigurationError, match="acoustic-pulse"):
            config_from_dict({"scenario": "nonsense"})

    def test_json_parse_error_carries_location(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"geometry": {,}}')
        with pytest.raises(ConfigurationError, match="line 1"):
            load_config(path)

    def test_roundtrip(self, tmp_path):
        cfg = default_config(seed=42, coupling_scale=2.0)
        path = write_cfg(tmp_path, config_to_dict(cfg))
        again = load_config(path)
        assert again == cfg


class TestVerifyCommand:
    def test_default_config_passes(self, capsys, tmp_path):
        code = cli.main(["verify", "--trials", "25",
                         "--config", write_cfg(tmp_path, TINY)])
        out = capsys.readouterr().out
        assert code == 0
        assert out.count("status: PASS") == 5
        assert "verify: PASS" in out

    def test_reproducible_output(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path, TINY)
        cli.main(["verify", "--trials", "40", "--seed", "7", "--config", cfg])
        first = capsys.readouterr().out
        cli.main(["verify", "--trials", "40", "--seed", "7", "--config", cfg])
        second = capsys.readouterr().out
        assert first == second

    def test_mismatched_meshes_exit_2(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path, {"geometry": {"n_ax": 4, "n_fluid": 5}})
        code = cli.main(["verify", "--config", cfg])
        assert code == 2
        assert "n_fluid" in capsys.readouterr().err

    def test_failed_check_exit_1(self, capsys, monkeypatch, tmp_path):
        broken = VerificationReport(name="adjointness", passed=False,
                                    max_residual=1.0, tolerance=1e-11,
                                    trials=1)
        monkeypatch.setattr(cli, "check_adjointness",
                            lambda *a, **k: broken)
        code = cli.main(["verify", "--trials", "5",
                         "--config", write_cfg(tmp_path, TINY)])
        assert code == 1
        assert "verify: FAIL" in capsys.readouterr().out


class TestSimulateCommand:
    def test_writes_ledger_with_exact_header(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path, dict(TINY, scenario="equilibrium"))
        out_dir = tmp_path / "out"
        code = cli.main(["simulate", "--config", cfg,
                         "--output", str(out_dir)])
        assert code == 0
        ledger = out_dir / "equilibrium_ledger.csv"
        lines = ledger.read_text().splitlines()
        assert lines[0] == LEDGER_HEADER
        total = np.array([float(l.split(",")[3]) for l in lines[1:]])
        assert np.abs(total - total[0]).max() <= 1e-10 * abs(total[0])

    def test_cooldown_moves_heat_monotonically(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, dict(TINY, scenario="hot-wall-cooldown"))
        out_dir = tmp_path / "out"
        code = cli.main(["simulate", "--config", cfg,
                        "--output", str(out_dir)])
        assert code == 0
        lines = (out_dir / "hot-wall-cooldown_ledger.csv").read_text().splitlines()
        q = np.array([float(l.split(",")[1]) for l in lines[1:]])
        h = np.array([float(l.split(",")[2]) for l in lines[1:]])
        assert np.all(np.diff(q) < 0)
        assert np.all(np.diff(h) > 0)

    def test_unknown_scenario_exit_2_lists_names(self, capsys, tmp_path):
        data = dict(TINY)
        data["scenario"] = "no-such-thing"
        cfg = write_cfg(tmp_path, data)
        code = cli.main(["simulate", "--config", cfg])
        err = capsys.readouterr().err
        assert code == 2
        assert "equilibrium" in err and "acoustic-pulse" in err

    def test_parse_error_exit_2(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        code = cli.main(["simulate", "--config", str(path)])
        assert code == 2
        assert "line" in capsys.readouterr().err

    def test_step_failure_exit_1_with_last_row(self, capsys, tmp_path):
        data = dict(TINY, scenario="hot-wall-cooldown")
        data["sim"] = {"dt": 50.0, "t_end": 50.0, "newton_tol": 1e-30,
                       "newton_max_iters": 2}
        cfg = write_cfg(tmp_path, data)
        code = cli.main(["simulate", "--config", cfg,
                         "--output", str(tmp_path / "out")])
        err = capsys.readouterr().err
        assert code == 1
        assert "did not converge" in err
        assert "last ledger row" in err


class TestConvergenceCommand:
    def test_report_parses_and_orders_are_second(self, capsys, tmp_path):
        data = dict(TINY)
        data["sim"] = {"dt": 5e-4, "t_end": 5e-3}
        cfg = write_cfg(tmp_path, data)
        out_dir = tmp_path / "conv"
        code = cli.main(["convergence", "--config", cfg,
                         "--output", str(out_dir)])
        assert code == 0
        lines = (out_dir / "convergence.csv").read_text().splitlines()
        assert lines[0] == "dt,steps,drift_per_time,observed_order"
        rows = [l.split(",") for l in lines[1:]]
        assert len(rows) == 3
        assert rows[0][3] == ""
        orders = [float(r[3]) for r in rows[1:]]
        assert all(1.5 <= o <= 2.5 for o in orders)
        out = capsys.readouterr().out
        assert "azimuthal_refinement_gap" in out
        assert "PASS" in out
