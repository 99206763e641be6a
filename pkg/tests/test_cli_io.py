import csv
import os
from pathlib import Path

import numpy as np
import pytest
import yaml

from hipvp.calibration import CalibrationDataset
from hipvp.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from hipvp.fileio import (mccp_from_dict, mccp_to_dict, read_dataset, read_mccp, read_tables,
                          schedule_from_dict, schedule_to_dict, tables_from_dict,
                          write_dataset, write_mccp, write_tables)
from hipvp.integrator import (HydrostaticHip, IntegratorOptions, LoadingProgram, integrate,
                              read_trajectory_csv)
from hipvp.synthetic import calibration_schedule, synthetic_mccp, synthetic_tables

DATA = Path(__file__).resolve().parents[1] / "data"


def write_cfg(path, cfg):
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def sim_cfg(**over):
    cfg = {"model": "both", "name": "hip", "tables": str(DATA / "tables.yaml"),
           "mccp": str(DATA / "mccp.yaml"), "rho0": 0.69,
           "loading": {"type": "hip", "schedule_file": str(DATA / "dataset/schedule.yaml")},
           "integrator": {"dt_max_s": 60.0}}
    cfg.update(over)
    return cfg


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_simulate_both_models(tmp_path):
    out = tmp_path / "out"
    code = main(["simulate", "--config", write_cfg(tmp_path / "c.yaml", sim_cfg()),
                 "--out", str(out)])
    assert code == EXIT_OK
    assert sorted(os.listdir(out)) == ["hip_abouaf.csv", "hip_mccp.csv", "summary.csv"]
    rows = read_csv(out / "summary.csv")
    assert rows[0] == ["scenario", "model", "rho0", "final_rho", "time_to_rho_0.99_s", "steps"]
    assert [r[1] for r in rows[1:]] == ["abouaf", "mccp"]
    traj = read_trajectory_csv(out / "hip_abouaf.csv")
    assert float(rows[1][3]) == traj["rho"][-1]


def test_missing_table_file_writes_nothing(tmp_path):
    out = tmp_path / "out"
    cfg = sim_cfg(tables=str(tmp_path / "nope.yaml"))
    code = main(["simulate", "--config", write_cfg(tmp_path / "c.yaml", cfg), "--out", str(out)])
    assert code == EXIT_CONFIG
    assert not out.exists()


def test_dt_bounds_validated(tmp_path, capsys):
    cfg = sim_cfg(integrator={"dt_min_s": 10.0, "dt_max_s": 1.0})
    code = main(["simulate", "--config", write_cfg(tmp_path / "c.yaml", cfg),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "dt_min" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path):
    cfg = sim_cfg(integrater={})
    code = main(["simulate", "--config", write_cfg(tmp_path / "c.yaml", cfg),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "x.yaml"),
                 "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = sim_cfg(model="abouaf", integrator={"dt_min_s": 1.0, "dt_max_s": 1.0,
                                              "dt_initial_s": 1.0, "max_newton": 1},
                  loading={"type": "uniaxial", "strain_rate_per_s": 1e-2,
                           "temperature_C": 1100.0, "duration_s": 20.0}, rho0=0.8)
    out = tmp_path / "o"
    code = main(["simulate", "--config", write_cfg(tmp_path / "c.yaml", cfg), "--out", str(out)])
    assert code == EXIT_NUMERIC
    assert "t = " in capsys.readouterr().err
    assert not out.exists()


def test_bad_seed_rejected(tmp_path):
    with pytest.raises(SystemExit):
        main(["simulate", "--config", "x", "--seed", "-1"])


def compare_cfg(scenarios, **over):
    cfg = sim_cfg(scenarios=scenarios)
    cfg.pop("model"), cfg.pop("name"), cfg.pop("rho0")
    cfg.update(over)
    return cfg


def test_compare_identical_scenarios_zero_difference(tmp_path):
    scen = [{"name": "a", "model": "abouaf", "rho0": 0.69},
            {"name": "b", "model": "abouaf", "rho0": 0.69}]
    out = tmp_path / "o"
    code = main(["compare", "--config", write_cfg(tmp_path / "c.yaml", compare_cfg(scen)),
                 "--out", str(out)])
    assert code == EXIT_OK
    rows = read_csv(out / "comparison.csv")
    assert float(rows[2][5]) == 0.0 and float(rows[2][6]) == 0.0 and float(rows[2][7]) == 1.0
    mean = read_csv(out / "mean_series.csv")
    assert mean[0] == ["t", "rho_a", "rho_b", "rho_mean"]
    assert all(r[1] == r[2] == r[3] for r in mean[1:])


def test_compare_mccp_initial_density_ratio(tmp_path):
    out = tmp_path / "o"
    code = main(["compare", "--config", str(DATA / "compare_mccp_rho0.yaml"), "--out", str(out)])
    assert code == EXIT_OK
    rows = read_csv(out / "comparison.csv")
    assert abs(float(rows[2][7]) - 0.60 / 0.69) < 1e-6


def test_compare_mismatched_schedules(tmp_path):
    other = schedule_to_dict(calibration_schedule().scaled_pressure(0.8))
    scen = [{"name": "a", "model": "abouaf", "rho0": 0.69},
            {"name": "b", "model": "abouaf", "rho0": 0.69,
             "loading": {"type": "hip", "schedule": other}}]
    out = tmp_path / "o"
    code = main(["compare", "--config", write_cfg(tmp_path / "c.yaml", compare_cfg(scen)),
                 "--out", str(out)])
    assert code == EXIT_CONFIG and not out.exists()


def test_compare_needs_two_scenarios(tmp_path):
    scen = [{"name": "a", "model": "abouaf", "rho0": 0.69}]
    code = main(["compare", "--config", write_cfg(tmp_path / "c.yaml", compare_cfg(scen)),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG


def test_simulate_rerun_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", sim_cfg())
    for d in ("a", "b"):
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / d)]) == EXIT_OK
    for name in os.listdir(tmp_path / "a"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# -- calibrate --------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_dataset_dir(tmp_path_factory):
    """A reduced copy of the shipped dataset (two temperatures) for quick runs."""
    full = read_dataset(DATA / "dataset/dense_yield.csv", DATA / "dataset/porous_yield.csv",
                        DATA / "dataset/densification.csv",
                        schedule_from_dict(yaml.safe_load(
                            (DATA / "dataset/schedule.yaml").read_text())))
    ds = CalibrationDataset(dense_yield=[r for r in full.dense_yield if r[0] >= 1100],
                            porous_yield=full.porous_yield[-2:],
                            densification=full.densification[::20], schedule=full.schedule)
    d = tmp_path_factory.mktemp("small")
    write_dataset(d, ds)
    return d


def cal_cfg(d, **cal):
    return {"base_tables": str(DATA / "tables.yaml"),
            "dataset": {"dense_yield": str(d / "dense_yield.csv"),
                        "porous_yield": str(d / "porous_yield.csv"),
                        "densification": str(d / "densification.csv"),
                        "schedule_file": str(d / "schedule.yaml")},
            "calibration": cal}


def test_calibrate_rerun_byte_identical_and_closed_loop(tmp_path, small_dataset_dir):
    cfg = write_cfg(tmp_path / "c.yaml", cal_cfg(small_dataset_dir))
    for d in ("a", "b"):
        assert main(["calibrate", "--config", cfg, "--out", str(tmp_path / d)]) == EXIT_OK
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == ["calibrated_tables.yaml", "calibration_report.json",
                     "calibration_report.txt"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    # the written tables drive a simulation directly
    sim = sim_cfg(model="abouaf", tables=str(tmp_path / "a" / "calibrated_tables.yaml"))
    assert main(["simulate", "--config", write_cfg(tmp_path / "s.yaml", sim),
                 "--out", str(tmp_path / "s")]) == EXIT_OK


def test_calibrate_failure_writes_partial(tmp_path, small_dataset_dir):
    cfg = write_cfg(tmp_path / "c.yaml", cal_cfg(small_dataset_dir, tol_c=1e-300, max_sweeps=1))
    out = tmp_path / "o"
    assert main(["calibrate", "--config", cfg, "--out", str(out)]) == EXIT_NUMERIC
    assert (out / "calibrated_tables.PARTIAL.yaml").exists()
    part = yaml.safe_load((out / "calibrated_tables.PARTIAL.yaml").read_text())
    assert part["label"].startswith("PARTIAL")
    assert "PARTIAL" in (out / "calibration_report.txt").read_text()


def test_calibrate_empty_dataset(tmp_path):
    d = tmp_path / "empty"
    write_dataset(d, CalibrationDataset())
    cfg = write_cfg(tmp_path / "c.yaml", cal_cfg(d))
    out = tmp_path / "o"
    assert main(["calibrate", "--config", cfg, "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_calibrate_bad_csv_header(tmp_path, small_dataset_dir):
    bad = tmp_path / "dense.csv"
    bad.write_text("T,rate,sigma\n1100,0.001,35\n")
    cfg = cal_cfg(small_dataset_dir)
    cfg["dataset"]["dense_yield"] = str(bad)
    assert main(["calibrate", "--config", write_cfg(tmp_path / "c.yaml", cfg),
                 "--out", str(tmp_path / "o")]) == EXIT_CONFIG


# -- file round trips -------------------------------------------------------------

def test_tables_yaml_round_trip(tmp_path):
    t = synthetic_tables()
    write_tables(tmp_path / "t.yaml", t)
    assert read_tables(tmp_path / "t.yaml") == t


def test_tables_without_flow_get_placeholders():
    d = yaml.safe_load((DATA / "tables.yaml").read_text())
    for k in ("A", "N", "c", "f"):
        d.pop(k)
    with pytest.raises(Exception):
        tables_from_dict(d)
    assert tables_from_dict(d, require_flow=False).E == synthetic_tables().E


def test_mccp_yaml_round_trip(tmp_path):
    p = synthetic_mccp()
    write_mccp(tmp_path / "m.yaml", p)
    assert read_mccp(tmp_path / "m.yaml") == p
    assert mccp_from_dict(mccp_to_dict(p)) == p


def test_schedule_round_trip():
    s = calibration_schedule()
    assert schedule_from_dict(schedule_to_dict(s)) == s


def test_dataset_csv_round_trip(tmp_path, clean_dataset):
    paths = write_dataset(tmp_path, clean_dataset)
    back = read_dataset(paths["dense_yield"], paths["porous_yield"], paths["densification"],
                        clean_dataset.schedule, clean_dataset.rho0)
    assert back == clean_dataset


def test_trajectory_csv_bit_identical(tmp_path):
    out = tmp_path / "o"
    main(["simulate", "--config", write_cfg(tmp_path / "c.yaml", sim_cfg(model="abouaf")),
          "--out", str(out)])
    traj = integrate(LoadingProgram(HydrostaticHip(calibration_schedule()), 0.69), "abouaf",
                     read_tables(DATA / "tables.yaml"), IntegratorOptions(dt_max=60.0))
    back = read_trajectory_csv(out / "hip.csv")
    assert np.array_equal(back["rho"], traj.rho) and np.array_equal(back["t"], traj.t)
    assert np.array_equal(back["sigma_eqv"], traj.sigma_eqv)
