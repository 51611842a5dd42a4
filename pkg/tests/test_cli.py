"""Config validation, task runners, exit codes, determinism."""

import json

import pytest

import gl2local.cli as cli
from gl2local.cli import ConfigError, ExperimentConfig, main


def write_config(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_config_minimal_defaults():
    cfg = ExperimentConfig.from_dict({"task": "decay"})
    assert (cfg.p, cfg.n, cfg.family) == (3, 6, "ps")
    assert cfg.units_per_class == 2 and cfg.threads == 1


@pytest.mark.parametrize("raw,path", [
    ({"task": "no-such-task"}, "config.task"),
    ({"task": "decay", "p": 4}, "config.p"),
    ({"task": "decay", "p": 2}, "config.p"),
    ({"task": "decay", "family": "weird"}, "config.family"),
    ({"task": "decay", "n": 5}, "config.n"),
    ({"task": "decay", "family": "sc-ramified", "n": 6}, "config.n"),
    ({"task": "decay", "family": "sc-unramified", "n": 2}, "config.n"),
    ({"task": "decay", "i_values": [99]}, "config.i_values"),
    ({"task": "decay", "units_per_class": 0}, "config.units_per_class"),
    ({"task": "decay", "bogus_key": 1}, "config.bogus_key"),
    ({"task": "exponent", "eta1": "1/2", "eta2": "1/4"}, "config.eta1"),
    ({"task": "exponent", "eta1": "zebra"}, "config.eta1"),
    ({"task": "counting", "L": 0}, "config.L"),
    ({"task": "counting", "delta": "-1"}, "config.delta"),
    ({"task": "counting", "plans": [17]}, "config.plans[0]"),
    ({"task": "sweep"}, "config.configs"),
    ({"task": "decay", "threads": 0}, "config.threads"),
    ({"task": "decay", "seed": "nope"}, "config.seed"),
])
def test_config_rejections_carry_field_paths(raw, path):
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict(raw)
    assert err.value.path == path


def test_verify_support_example_exits_zero(tmp_path):
    out = tmp_path / "sup.csv"
    code = main(["--config", write_config(tmp_path, {
        "task": "verify-support", "p": 3, "n": 6, "family": "ps",
        "i_values": [4], "seed": 1, "out": str(out)})])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ("p,n,family,i,v_a,a_unit,v_m,m_unit,re,im,abs,"
                        "ratio_normalized,expected_zero,exact_zero,violation")
    assert len(lines) > 1
    assert all(line.endswith(",0") for line in lines[1:])  # violation column
    assert "status: PASS" in (tmp_path / "sup.csv.report.txt").read_text()


def test_exponent_example_report_line(tmp_path):
    out = tmp_path / "exp.csv"
    code = main(["--config", write_config(tmp_path, {
        "task": "exponent", "eta1": "0", "delta": "1", "eta2": "1/2",
        "out": str(out)})])
    assert code == 0
    report = (out.parent / "exp.csv.report.txt").read_text()
    assert "C₁-exponent = 5/12, depth exponent = 5/24" in report
    rows = out.read_text().splitlines()
    assert rows[0] == "eta1,delta,eta2,supnorm_exponent,depth_exponent"
    assert rows[1] == "0,1,1/2,5/12,5/24"


def test_malformed_config_exits_two(tmp_path, capsys):
    code = main(["--config", write_config(tmp_path, {
        "task": "verify-support", "p": 3, "n": 5, "family": "ps"})])
    assert code == 2
    assert "config.n" in capsys.readouterr().err


def test_missing_config_file_exits_two(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "absent.json")]) == 2
    assert main(["--config", write_config(tmp_path, ["not", "an", "object"])]) == 2


def test_broken_json_exits_two(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{nope")
    assert main(["--config", str(path)]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    cfg = write_config(tmp_path, {"task": "verify-support", "p": 3, "n": 6,
                                  "family": "ps", "i_values": [4],
                                  "seed": 7, "out": str(out_a)})
    assert main(["--config", cfg, "--out", str(out_b), "--seed", "7"]) == 0
    assert out_b.exists() and not out_a.exists()


def test_same_seed_byte_identical_rerun(tmp_path):
    out = tmp_path / "d.csv"
    cfg = write_config(tmp_path, {"task": "decay", "p": 3, "n": 6,
                                  "family": "ps", "seed": 3, "out": str(out)})
    assert main(["--config", cfg]) == 0
    first = out.read_bytes(), (tmp_path / "d.csv.report.txt").read_bytes()
    assert main(["--config", cfg]) == 0
    second = out.read_bytes(), (tmp_path / "d.csv.report.txt").read_bytes()
    assert first == second


def test_different_seed_changes_grid(tmp_path):
    outs = []
    for seed in (1, 2):
        out = tmp_path / f"s{seed}.csv"
        cfg = write_config(tmp_path, {"task": "decay", "p": 3, "n": 6,
                                      "family": "ps", "seed": seed,
                                      "out": str(out)})
        assert main(["--config", cfg]) == 0
        outs.append(out.read_text())
    assert outs[0] != outs[1]


def test_sweep_merges_in_config_order(tmp_path):
    out = tmp_path / "sweep.csv"
    cfg = write_config(tmp_path, {
        "task": "sweep", "threads": 2, "seed": 5, "out": str(out),
        "configs": [
            {"task": "decay", "p": 3, "n": 8, "family": "ps"},
            {"task": "decay", "p": 3, "n": 6, "family": "ps"},
        ]})
    assert main(["--config", cfg]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("p,n,family,i")
    n_col = [line.split(",")[1] for line in lines[1:]]
    assert n_col == sorted(n_col, reverse=True)  # n=8 rows before n=6 rows
    summary = (tmp_path / "sweep.csv.summary.csv").read_text().splitlines()
    assert summary[0] == ("p,n,family,i,points,max_ratio_normalized,bound,ok")
    # one summary row per (p, n, i): n=8 has i in {5, 6}, n=6 has i=4
    assert len(summary) == 4


def test_sweep_rejects_mixed_tasks(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "task": "sweep", "out": str(tmp_path / "x.csv"),
        "configs": [{"task": "decay"}, {"task": "exponent"}]})
    assert main(["--config", cfg]) == 2
    assert "config.configs" in capsys.readouterr().err


def test_sweep_rejects_nesting(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "task": "sweep", "out": str(tmp_path / "x.csv"),
        "configs": [{"task": "sweep", "configs": []}]})
    assert main(["--config", cfg]) == 2
    assert "configs[0].task" in capsys.readouterr().err


def test_empty_sweep_writes_header_only(tmp_path):
    out = tmp_path / "empty.csv"
    cfg = write_config(tmp_path, {"task": "sweep", "configs": [],
                                  "out": str(out)})
    assert main(["--config", cfg]) == 0
    assert out.read_text().count("\n") == 1


def test_counting_task_schema_and_checks(tmp_path):
    out = tmp_path / "count.csv"
    cfg = write_config(tmp_path, {
        "task": "counting", "algebra": "disc14", "plans": [{}, {"3": 1}],
        "L": 6, "delta": "1", "z": {"x": "1/10", "y": "6/5"},
        "verify_box_max_norm": 3, "out": str(out)})
    assert main(["--config", cfg]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "p_plan,N,L,m,count,ratio_bd1,ratio_bd2"
    assert len(lines) == 1 + 2 * 6
    report = (tmp_path / "count.csv.report.txt").read_text()
    assert "box-oracle agreement" in report and "FAIL" not in report


def test_counting_rejects_bad_plan(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "task": "counting", "algebra": "disc6", "plans": [{"3": 1}],
        "out": str(tmp_path / "c.csv")})
    assert main(["--config", cfg]) == 2
    assert "config.plans[0]" in capsys.readouterr().err


def test_speedup_task_isolates_timings(tmp_path):
    out = tmp_path / "speed.csv"
    cfg = write_config(tmp_path, {
        "task": "speedup", "p": 3, "n": 6, "family": "ps", "i_values": [4],
        "units_per_class": 1, "seed": 2, "out": str(out)})
    assert main(["--config", cfg]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ("p,n,family,i,v_a,a_unit,v_m,m_unit,"
                        "naive_terms,fast_pairs,deviation")
    body = out.read_text()
    assert "naive_s" not in body  # timings only in the sidecar
    timings = (tmp_path / "speed.csv.timings.txt").read_text()
    assert "speedup=" in timings and "naive_s=" in timings


def test_assertion_failure_exits_one(tmp_path, monkeypatch):
    # shrink the decay bound so the honest values trip the check
    monkeypatch.setattr(cli, "decay_bound", lambda spec: 0)
    out = tmp_path / "fail.csv"
    cfg = write_config(tmp_path, {"task": "decay", "p": 3, "n": 6,
                                  "family": "ps", "seed": 1, "out": str(out)})
    assert main(["--config", cfg]) == 1
    assert "FAIL" in (tmp_path / "fail.csv.report.txt").read_text()
