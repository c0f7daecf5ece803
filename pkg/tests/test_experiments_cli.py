import json

import pytest

from nmlandscapes.cli import main
from nmlandscapes.errors import BudgetExceededError, InvalidParameterError
from nmlandscapes.experiments import (
    EXPERIMENTS,
    ExperimentSpec,
    compute_experiment,
    nk_support_terms,
    run_experiment,
    table_to_csv,
)
from nmlandscapes.nk import generate_nk
from nmlandscapes.search import GAConfig

# result panel -> experiment id producing its data
PANEL_DATA = {
    "NK peak counts (black dots)": "fig1_nk_peaks",
    "fitness histograms, exp-normal coefficients": "fig2_histograms",
    "fitness histograms, uniform coefficients": "fig3_uniform_histograms",
    "peaks and autocorrelation along schedules": "fig4_ruggedness_schedule",
    "Type II peak spread over sigma at N=15": "fig13_sigma_spread",
    "Type I fitness-distance profiles": "fig5_6_profiles",
    "Type II fitness-distance profiles": "fig5_6_profiles",
    "basin of the global maximum": "fig7_basins",
    "GA best fitness over P": "fig8_9_p_sweep",
    "GA distance histograms over P": "fig8_9_p_sweep",
    "GA best fitness over M": "fig10_11_m_sweep",
    "GA success and failed distance over M": "fig10_11_m_sweep",
    "normalisation comparison": "fig12_norm_compare",
}

TINY_GA = GAConfig(population_size=16, generations=4)

TINY = {
    "fig1_nk_peaks": dict(n=6, orders=(1, 3), replicates=2, walks=1, steps=50),
    "fig2_histograms": dict(n=6, sigmas=(1.0, 10.0), replicates=1),
    "fig3_uniform_histograms": dict(n=6, replicates=2),
    "fig4_ruggedness_schedule": dict(n=5, replicates=2, walks=1, steps=50),
    "fig5_6_profiles": dict(n=5, orders=(1, 2, 5)),
    "fig7_basins": dict(n=6, orders=(1, 2, 6), replicates=2),
    "fig8_9_p_sweep": dict(n=10, proportions=(0.0, 0.5), replicates=2, ga=TINY_GA),
    "fig10_11_m_sweep": dict(n=10, orders=(1, 3), replicates=2, ga=TINY_GA),
    "fig12_norm_compare": dict(n=10, replicates=2, ga=TINY_GA),
    "fig13_sigma_spread": dict(n=6, orders=(1, 2, 6), replicates=3, walks=0),
}


def test_ids_cover_every_panel():
    assert set(PANEL_DATA.values()) == set(EXPERIMENTS)
    assert set(TINY) == set(EXPERIMENTS)


@pytest.mark.parametrize("eid", sorted(TINY))
def test_outputs_are_reproducible(eid, tmp_path):
    spec = ExperimentSpec(eid, output_dir=str(tmp_path / "a"), **TINY[eid])
    first = run_experiment(spec)
    again = run_experiment(ExperimentSpec(eid, output_dir=str(tmp_path / "b"), **TINY[eid]))
    data = [p for p in first if p.suffix == ".csv"]
    assert data
    for p, q in zip(first, again):
        if p.suffix == ".csv":
            assert p.read_bytes() == q.read_bytes()
    meta = json.loads((tmp_path / "a" / f"{eid}.meta.json").read_text())
    assert meta["spec"]["experiment_id"] == eid and "created" in meta
    assert set(meta["files"]) == {p.name for p in data}
    head = data[0].read_text().splitlines()[0]
    assert head.startswith("# spec: ") and json.loads(head[len("# spec: "):])["seed"] == 0


def test_worker_pool_gives_same_rows(monkeypatch):
    spec = ExperimentSpec("fig7_basins", **TINY["fig7_basins"])
    serial = table_to_csv(compute_experiment(spec)["basins"], "")
    monkeypatch.setenv("NMLAND_WORKERS", "2")
    pooled = table_to_csv(compute_experiment(spec)["basins"], "")
    assert serial == pooled


def test_schedule_rows_per_step():
    t = compute_experiment(ExperimentSpec("fig4_ruggedness_schedule", n=4, replicates=2, walks=1, steps=20))
    rows = t["schedule"].where(kind="TypeI", replicate=0)
    assert rows.column("m").tolist() == [4, 10, 14, 15]
    assert rows.column("peaks_strict")[0] == 1


def test_histogram_tables():
    t = compute_experiment(ExperimentSpec("fig2_histograms", n=10, sigmas=(10.0,)))
    assert len(t["fitness"].rows) == 1024
    assert t["histogram"].column("count").sum() == 1024
    assert abs(t["summary"].column("mean")[0]) < 1e-9


def test_budget_refusal():
    with pytest.raises(BudgetExceededError) as info:
        run_experiment(ExperimentSpec("fig4_ruggedness_schedule", n=10, budget=512))
    assert info.value.required == 1024


def test_spec_validation():
    with pytest.raises(InvalidParameterError):
        ExperimentSpec("fig99").resolved()
    with pytest.raises(InvalidParameterError):
        ExperimentSpec("fig7_basins", n=5, orders=(6,)).resolved()
    with pytest.raises(InvalidParameterError):
        ExperimentSpec("fig2_histograms", sigmas=(0.0,)).resolved()


def test_nk_support_terms():
    assert nk_support_terms(generate_nk(5, 0, 0)) == 5
    assert nk_support_terms(generate_nk(5, 4, 0)) == 31


# --- command line -------------------------------------------------------------------------


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_kv(text):
    return dict(line.split(" = ", 1) for line in text.splitlines() if " = " in line)


def test_type3_extremes_are_opposite(tmp_path, capsys):
    f = tmp_path / "t3.json"
    code, _, _ = run_cli(capsys, "gen", "--type", "3", "--n", "32", "--m-order", "5", "--sigma", "32",
                         "--seed", "7", "-o", str(f))
    assert code == 0
    code, out, _ = run_cli(capsys, "analyze", str(f), "--extremes")
    kv = parse_kv(out)
    assert code == 0 and kv["m"] == "206368"
    assert float(kv["f_max"]) == -float(kv["f_min"])


def test_analyze_unimodal(tmp_path, capsys):
    f = tmp_path / "m1.json"
    assert run_cli(capsys, "gen", "--type", "1", "--n", "8", "--m-order", "1", "--sigma", "8",
                   "-o", str(f))[0] == 0
    code, out, _ = run_cli(capsys, "analyze", str(f), "--steps", "200")
    kv = parse_kv(out)
    assert code == 0 and kv["peak_count"] == "1" and kv["basin_fraction"] == "1.0"
    csv_path = tmp_path / "stats.csv"
    run_cli(capsys, "analyze", str(f), "--steps", "200", "--csv", str(csv_path))
    header, row = csv_path.read_text().splitlines()
    assert header.split(",")[-3:] == ["peak_count", "lag1_autocorr", "basin_fraction"]
    assert row.startswith("TypeI,8,8,1,8.0,0,1,")


@pytest.mark.parametrize("gen", [("--type", "1", "--n", "10", "--m-order", "4", "--constant"),
                                 ("--type", "2", "--n", "12", "--m-order", "5"),
                                 ("--type", "3", "--n", "9", "--m-order", "9")])
def test_walsh_roundtrip_is_exact(tmp_path, capsys, gen):
    f = tmp_path / "w.json"
    run_cli(capsys, "gen", *gen, "--sigma", "3", "-o", str(f))
    code, out, _ = run_cli(capsys, "walsh", str(f), "--roundtrip")
    kv = parse_kv(out)
    assert code == 0 and kv["max_pointwise_deviation"] == "0.0" and kv["terms_preserved"] == "true"
    wf = tmp_path / "walsh.json"
    assert run_cli(capsys, "walsh", str(f), "-o", str(wf))[0] == 0
    assert json.loads(wf.read_text())["kind"] == "Walsh"
    back = tmp_path / "back.json"
    assert run_cli(capsys, "walsh", str(wf), "-o", str(back))[0] == 0
    assert json.loads(back.read_text())["kind"] == "General"


def test_usage_errors_exit_one(tmp_path, capsys):
    assert run_cli(capsys, "gen", "--bogus")[0] == 1
    code, _, err = run_cli(capsys, "gen", "--type", "3", "--n", "5", "--m-order", "2", "--sigma", "1")
    assert code == 1 and "odd" in err
    code, _, err = run_cli(capsys, "analyze", str(tmp_path / "missing.json"))
    assert code == 1 and "cannot read" in err
    bad = tmp_path / "bad.json"
    bad.write_text('{"format_version": 1, "kind": "TypeI", "n": 2, "alphabet": {"a": 1, "b": 1}, '
                   '"terms": [{"indices": [1], "coeff": -1.0}]}')
    code, _, err = run_cli(capsys, "analyze", str(bad))
    assert code == 1 and "positive" in err
    assert run_cli(capsys, "gen", "--type", "2", "--n", "4", "--sigma", "1", "--alphabet", "0.5,1,2")[0] == 1


def test_budget_refusal_exits_two(tmp_path, capsys):
    f = tmp_path / "big.json"
    run_cli(capsys, "gen", "--type", "1", "--n", "14", "--m-order", "1", "--sigma", "1", "-o", str(f))
    code, _, err = run_cli(capsys, "analyze", str(f), "--budget", "1000")
    assert code == 2 and "16384" in err
    code, _, err = run_cli(capsys, "experiment", "fig2_histograms", "--budget", "100",
                           "--out-dir", str(tmp_path))
    assert code == 2 and "1024" in err


def test_nk_and_ga_commands(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "nk", "--n", "6", "--k", "2", "--analyze", "--steps", "100")
    assert code == 0 and int(parse_kv(out)["peak_count"]) >= 1
    model = tmp_path / "g.json"
    run_cli(capsys, "gen", "--type", "3", "--n", "12", "--m-order", "1", "--sigma", "12", "-o", str(model))
    cfg = tmp_path / "ga.cfg"
    cfg.write_text("population_size = 32\ngenerations = 10\nruns = 3\n")
    trace = tmp_path / "trace.csv"
    code, out, _ = run_cli(capsys, "ga", str(model), "--config", str(cfg), "--trace-csv", str(trace))
    assert code == 0 and "success_proportion" in out
    assert len(trace.read_text().splitlines()) == 1 + 3 * 11


def test_experiment_command(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "experiment", "--list")
    assert code == 0 and all(e in out for e in EXPERIMENTS)
    code, out, _ = run_cli(capsys, "experiment", "fig3_uniform_histograms", "--n", "5",
                           "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "fig3_uniform_histograms.meta.json").exists()
    assert (tmp_path / "fig3_uniform_histograms_summary.csv").exists()
