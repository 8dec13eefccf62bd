"""Config parsing and validation tests."""

import pytest

from airtune.config import (
    ConfigError,
    ControllerSettings,
    MatrixSpec,
    ScenarioConfig,
    Seeds,
    build_scenario,
    expand_matrix,
    load_config,
    log_grid,
    scenario_slug,
)

FULL_CONFIG = """
[traffic]
model = weibull
k = 0.8
load_mbps = 180

[channel]
snr_db = 10
rate_table = 0:65, 5:130, 10:195, 15:260, 20:390
ber_table = 3:2e-5, 10:1e-6, 20:1e-8

[mac]
num_sta = 4
retry_limit = 4
fifo_max_mpdus = 64
duration_s = 5

[controller]
rounds = 8
frm_min = 65536
frm_max = 4194304
samples_per_round = 50
sample_window_s = 1.0

[sweep]
grid = log:65536:4194304:8

[seeds]
traffic = 11
channel = 12
init = 13
shuffle = 14
"""


def write(tmp_path, text):
    path = tmp_path / "scenario.ini"
    path.write_text(text)
    return path


class TestLoadConfig:
    def test_full_roundtrip(self, tmp_path):
        scenario, matrix = load_config(write(tmp_path, FULL_CONFIG))
        assert matrix is None
        assert scenario.traffic.kind == "weibull"
        assert scenario.traffic.shape == 0.8
        assert scenario.traffic.load_mbps == 180.0
        assert scenario.channel.snr_db == 10.0
        assert scenario.num_sta == 4
        assert scenario.duration_s == 5.0
        assert scenario.controller.rounds == 8
        assert len(scenario.sweep_grid) == 8
        assert scenario.seeds == Seeds(11, 12, 13, 14)
        assert scenario.name == "weibull_10db_4sta"

    def test_defaults_fill_in(self, tmp_path):
        scenario, _ = load_config(
            write(tmp_path, "[traffic]\nmodel = pareto\nload_mbps = 100\n")
        )
        assert scenario.traffic.shape == 1.5  # default alpha
        assert scenario.channel.snr_db == 10.0
        assert scenario.num_sta == 4
        assert len(scenario.sweep_grid) == 32

    def test_model_none_disables_traffic(self, tmp_path):
        scenario, _ = load_config(write(tmp_path, "[traffic]\nmodel = none\n"))
        assert scenario.traffic is None

    def test_traffic_section_seed_alias(self, tmp_path):
        scenario, _ = load_config(
            write(tmp_path, "[traffic]\nmodel = pareto\nload_mbps = 50\nseed = 77\n")
        )
        assert scenario.seeds.traffic == 77

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.ini")

    def test_invalid_model(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write(tmp_path, "[traffic]\nmodel = bursty\nload_mbps = 1\n"))

    def test_missing_load(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write(tmp_path, "[traffic]\nmodel = pareto\n"))

    def test_invalid_shape_propagates(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(
                write(tmp_path, "[traffic]\nmodel = pareto\nalpha = 0.5\nload_mbps = 1\n")
            )

    def test_ber_exp_selects_exponential_model(self, tmp_path):
        scenario, _ = load_config(
            write(
                tmp_path,
                "[traffic]\nmodel = none\n[channel]\nsnr_db = 3\nber_exp = 0.5, 0.25\n",
            )
        )
        assert scenario.channel.ber_exp == (0.5, 0.25)
        assert scenario.channel.ber_table is None

    def test_explicit_grid_list(self, tmp_path):
        scenario, _ = load_config(
            write(
                tmp_path,
                "[traffic]\nmodel = none\n[sweep]\ngrid = 100000, 200000, 400000\n",
            )
        )
        assert scenario.sweep_grid == (100000.0, 200000.0, 400000.0)

    def test_matrix_section(self, tmp_path):
        text = FULL_CONFIG + "\n[matrix]\nmodels = pareto, weibull\nsnrs = 3, 10\nstas = 4\nseeds_per_cell = 2\n"
        scenario, matrix = load_config(write(tmp_path, text))
        assert matrix == MatrixSpec(("pareto", "weibull"), (3.0, 10.0), (4,), 2, None)
        cells = expand_matrix(scenario, matrix)
        assert len(cells) == 4
        assert {c.name for c in cells} == {
            "pareto_3db_4sta",
            "pareto_10db_4sta",
            "weibull_3db_4sta",
            "weibull_10db_4sta",
        }
        # Base absolute load is reused in every cell.
        assert all(c.traffic.load_mbps == 180.0 for c in cells)

    def test_matrix_load_per_rate_scales_with_cell(self, tmp_path):
        text = """
[traffic]
model = weibull
load_per_rate = 0.92
[matrix]
models = weibull
snrs = 3, 20
stas = 4
"""
        scenario, matrix = load_config(write(tmp_path, text))
        cells = expand_matrix(scenario, matrix)
        loads = {c.channel.snr_db: c.traffic.load_mbps for c in cells}
        assert loads[3.0] == pytest.approx(0.92 * 65)
        assert loads[20.0] == pytest.approx(0.92 * 390)


class TestScenarioValidation:
    def test_sweep_grid_must_increase(self):
        with pytest.raises(ConfigError):
            build_scenario("weibull", 10, 4, load_mbps=100, sweep_grid=(2e5, 1e5))

    def test_sweep_grid_within_bounds(self):
        with pytest.raises(ConfigError):
            build_scenario("weibull", 10, 4, load_mbps=100, sweep_grid=(1.0, 2.0))

    def test_exactly_one_load_spec(self):
        with pytest.raises(ConfigError):
            build_scenario("weibull", 10, 4, load_mbps=100, load_per_rate=0.9)
        with pytest.raises(ConfigError):
            build_scenario("weibull", 10, 4)

    def test_controller_settings_validation(self):
        with pytest.raises(ConfigError):
            ControllerSettings(rounds=0)
        with pytest.raises(ConfigError):
            ControllerSettings(frm_min=100, frm_max=50)
        with pytest.raises(ConfigError):
            ControllerSettings(sample_window_s=0)

    def test_reseeded_replicates(self):
        sc = build_scenario("weibull", 10, 4, load_mbps=100)
        assert sc.reseeded(0) is sc
        r1 = sc.reseeded(1)
        assert r1.seeds != sc.seeds
        assert r1.reseeded(0) is r1

    def test_aggregate_phy(self):
        sc = build_scenario("weibull", 10, 4, load_mbps=100)
        assert sc.aggregate_phy_mbps == 4 * 195.0


class TestLogGrid:
    def test_endpoints_and_monotone(self):
        grid = log_grid(65536, 4194304, 32)
        assert grid[0] == 65536
        assert grid[-1] == 4194304
        assert len(grid) == 32
        assert all(b > a for a, b in zip(grid, grid[1:]))

    def test_single_point(self):
        assert log_grid(1000, 2000, 1) == (1000.0,)

    def test_rejects_bad_ranges(self):
        with pytest.raises(ConfigError):
            log_grid(0, 100, 4)
        with pytest.raises(ConfigError):
            log_grid(200, 100, 4)


def test_scenario_slug_formats():
    assert scenario_slug("pareto", 10.0, 4) == "pareto_10db_4sta"
    assert scenario_slug("fbm", 3.5, 2) == "fbm_3p5db_2sta"
    assert scenario_slug(None, 10.0, 4) == "none_10db_4sta"
