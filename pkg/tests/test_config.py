from datetime import date
from pathlib import Path

import pytest

from stigspot.config import ConfigError, RunConfig, load_config, parse_config


def test_defaults_match_reference_parameters():
    cfg = parse_config("")
    assert (cfg.cell_size_m, cfg.time_step_s, cfg.eps_cells, cfg.intensity) == (100, 1200, 10, 1)
    assert (cfg.top_radius_frac, cfg.delta_permanent, cfg.delta_intermittent) == (0.5, 0.01, 0.15)
    assert cfg.min_area == 1 and not cfg.wants_sweep


def test_full_config(tmp_path):
    text = """
    # comment
    events = data/ev.csv
    profiles = data/pr.csv
    column.customer_id = cust   # inline comment
    delimiter = \\t
    tau_permanent = 0.2
    tau_intermittent = 0.35
    bbox = 40.8, 28.6, 41.3, 29.4
    period = 2014-09-01/2014-10-01
    timezone_offset = 3
    tau_permanent_candidates = 0.1,0.5
    tau_intermittent_candidates = 0.2;0.4;0.6
    min_area = 30
    seed = 7
    export_pgm = yes
    """
    p = tmp_path / "run.cfg"
    p.write_text(text)
    cfg = load_config(p)
    assert cfg.events == tmp_path / "data/ev.csv"
    assert cfg.columns == {"customer_id": "cust"}
    assert cfg.delimiter == "\t"
    assert cfg.bbox == (40.8, 28.6, 41.3, 29.4)
    assert cfg.period == (date(2014, 9, 1), date(2014, 10, 1))
    assert len(cfg.candidates) == 6 and cfg.wants_sweep
    assert (cfg.seed, cfg.export_pgm, cfg.min_area) == (7, True, 30)
    d = cfg.as_dict()
    assert d["period"] == ["2014-09-01", "2014-10-01"] and d["events"] == "ev.csv"


@pytest.mark.parametrize("text", [
    "tau_permanent = 1.2",
    "tau_intermittent = 0",
    "tau_permanent_candidates = 0.5,1.0",
    "objective = best",
    "min_area = 0",
    "bbox = 41,29,40,30",
    "bbox = 1,2,3",
    "period = 2014-09-02/2014-09-02",
    "eps_cells = -1",
    "delta_permanent = 2",
    "unknown_key = 1",
    "cell_size_m = many",
    "no equals sign here",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_pad_defaults_to_eps():
    assert RunConfig(eps_cells=7).pad_cells == 7
    assert RunConfig(grid_pad_cells=2).pad_cells == 2
