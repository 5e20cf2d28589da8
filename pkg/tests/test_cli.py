"""Command-line contract: subcommands, file outputs, exit codes,
determinism, and format consistency."""
import csv
import json
import math
import re

import pytest

import meadjust.cli as cli
from meadjust import CohortConfig, read_cohort, simulate_cohort, write_cohort
from meadjust.cli import main


def _read_table_csv(path):
    with open(path, encoding="utf-8") as f:
        lines = [ln for ln in f.read().strip().split("\n") if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return list(reader)


def _write_cohort_file(tmp_path, n=400, seed=1, **kwargs):
    path = tmp_path / "cohort.csv"
    write_cohort(simulate_cohort(CohortConfig(n=n, seed=seed, **kwargs)), path)
    return path


def test_simulate_row_count_and_provenance(tmp_path):
    out = tmp_path / "c.csv"
    rc = main(["simulate", "--n", "2000", "--seed", "5", "--out", str(out)])
    assert rc == 0
    cohort = read_cohort(out)
    assert len(cohort) == 2000
    assert cohort.config.n == 2000
    assert cohort.config.seed == 5
    # defaults mirror the generation protocol
    assert cohort.config.tau_e == 1.0
    assert cohort.config.pi == 0.05


def test_simulate_default_is_full_scale(tmp_path):
    out = tmp_path / "c.csv"
    rc = main(["simulate", "--seed", "1", "--out", str(out)])
    assert rc == 0
    assert len(read_cohort(out)) == 100_000


def test_simulate_invalid_pi_names_parameter(tmp_path, capsys):
    rc = main(["simulate", "--pi", "1.5", "--out", str(tmp_path / "c.csv")])
    assert rc == 2
    assert "pi" in capsys.readouterr().err


def test_simulate_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--n", "500", "--seed", "7", "--out", str(a)]) == 0
    assert main(["simulate", "--n", "500", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_naive_linear_outputs(tmp_path, capsys):
    cohort_file = _write_cohort_file(tmp_path, n=20_000, seed=2)
    out_dir = tmp_path / "out"
    rc = main(["naive", str(cohort_file), "--kind", "linear", "--out-dir", str(out_dir)])
    assert rc == 0
    rows = _read_table_csv(out_dir / "naive_linear.csv")
    assert len(rows) == 1
    row = rows[0]
    assert float(row["ci95_lo"]) <= 0.0 <= float(row["ci95_hi"])
    assert (out_dir / "naive_linear.json").exists()
    assert (out_dir / "naive_linear.md").exists()


def test_naive_logistic_or_columns(tmp_path):
    cohort_file = _write_cohort_file(tmp_path, n=20_000, seed=3)
    out_dir = tmp_path / "out"
    rc = main(["naive", str(cohort_file), "--kind", "logistic", "--out-dir", str(out_dir)])
    assert rc == 0
    row = _read_table_csv(out_dir / "naive_logistic.csv")[0]
    assert float(row["or_ci95_lo"]) <= 1.0 <= float(row["or_ci95_hi"])
    assert float(row["odds_ratio"]) == pytest.approx(math.exp(float(row["slope"])), rel=1e-12)


def test_naive_log_exposure_attenuation(tmp_path):
    cohort_file = _write_cohort_file(tmp_path, n=100_000, seed=31, beta_true=0.5)
    out_dir = tmp_path / "out"
    rc = main(["naive", str(cohort_file), "--kind", "linear", "--log-exposure", "--out-dir", str(out_dir)])
    assert rc == 0
    row = _read_table_csv(out_dir / "naive_linear.csv")[0]
    assert abs(float(row["slope"]) - 0.25) < 0.025


def test_naive_missing_file_exit_code(tmp_path, capsys):
    assert main(["naive", str(tmp_path / "nope.csv"), "--kind", "linear"]) == 2


def test_adjust_outputs_and_determinism(tmp_path):
    cohort_file = _write_cohort_file(tmp_path, n=300, seed=4)
    args = [
        "adjust", str(cohort_file), "--kind", "linear", "--prior", "uninformative",
        "--chains", "2", "--burn-in", "300", "--keep", "800", "--thin", "4",
        "--seed", "10", "--emit-traces",
    ]
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    rc_a = main(args + ["--out-dir", str(out_a)])
    rc_b = main(args + ["--out-dir", str(out_b)])
    assert rc_a == rc_b
    assert rc_a in (0, 3)
    rhat_a = (out_a / "rhat_linear_uninformative.csv").read_bytes()
    rhat_b = (out_b / "rhat_linear_uninformative.csv").read_bytes()
    assert rhat_a == rhat_b
    assert (out_a / "trace_linear_uninformative_chain0.csv").exists()
    if rc_a == 0:
        sa = (out_a / "summary_linear_uninformative.csv").read_bytes()
        sb = (out_b / "summary_linear_uninformative.csv").read_bytes()
        assert sa == sb
        rows = _read_table_csv(out_a / "summary_linear_uninformative.csv")
        assert {r["parameter"] for r in rows} >= {"beta0", "beta", "tau_e", "tau_x", "mu_x"}


def test_adjust_gate_failure_withholds_summaries(tmp_path, monkeypatch, capsys):
    cohort_file = _write_cohort_file(tmp_path, n=100, seed=5)
    out_dir = tmp_path / "out"

    real_adjust_cell = cli.adjust_cell

    def unconverged_cell(*args, **kwargs):
        cell = real_adjust_cell(*args, **kwargs)
        cell.rhats = [
            type(r)(parameter=r.parameter, rhat=2.0, chain_means=r.chain_means,
                    chain_variances=r.chain_variances)
            for r in cell.rhats
        ]
        return cell

    monkeypatch.setattr(cli, "adjust_cell", unconverged_cell)
    rc = main([
        "adjust", str(cohort_file), "--kind", "linear", "--prior", "typeA",
        "--chains", "2", "--burn-in", "50", "--keep", "200", "--thin", "2",
        "--seed", "1", "--out-dir", str(out_dir),
    ])
    assert rc == 3
    assert (out_dir / "rhat_linear_typeA.csv").exists()
    assert not (out_dir / "summary_linear_typeA.csv").exists()
    assert "gate" in capsys.readouterr().err


def test_adjust_initialization_failure_exit_code(tmp_path, monkeypatch, capsys):
    cohort_file = _write_cohort_file(tmp_path, n=100, seed=6)
    from meadjust.errors import InitializationError

    def broken(*args, **kwargs):
        raise InitializationError("alpha", "synthetic")

    monkeypatch.setattr(cli, "adjust_cell", broken)
    rc = main(["adjust", str(cohort_file), "--kind", "logistic", "--out-dir", str(tmp_path / "o")])
    assert rc == 4
    assert "alpha" in capsys.readouterr().err


def _tiny_replicate_config(tmp_path, out_dir, variants=("uninformative",), kinds=("linear",)):
    cfg = {
        "cohort": {"n": 300, "seed": 9},
        "mcmc": {"n_chains": 2, "burn_in": 200, "keep": 600, "thin": 3, "seed": 9},
        "prior_variants": list(variants),
        "model_kinds": list(kinds),
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_replicate_single_variant_table(tmp_path):
    out_dir = tmp_path / "rep"
    cfg = _tiny_replicate_config(tmp_path, out_dir)
    rc = main(["replicate", "--config", str(cfg), "--out-dir", str(out_dir)])
    assert rc in (0, 3)
    rows = _read_table_csv(out_dir / "table_linear.csv")
    assert len(rows) == 1
    assert rows[0]["prior"] == "uninformative"
    assert rows[0]["parameter"] == "beta"
    assert rows[0]["cri_contains_null"] in ("true", "false")
    assert (out_dir / "cohort.csv").exists()


def test_replicate_markdown_matches_csv_precision(tmp_path):
    out_dir = tmp_path / "rep"
    cfg = _tiny_replicate_config(tmp_path, out_dir)
    rc = main(["replicate", "--config", str(cfg), "--out-dir", str(out_dir)])
    assert rc in (0, 3)
    rows = _read_table_csv(out_dir / "table_linear.csv")
    md = (out_dir / "table_linear.md").read_text()
    md_rows = [ln for ln in md.split("\n") if ln.startswith("|") and "---" not in ln]
    header = [h.strip() for h in md_rows[0].strip("|").split("|")]
    cells = [cell.strip() for cell in md_rows[1].strip("|").split("|")]
    md_row = dict(zip(header, cells))
    for field in ("mean", "p2_5", "p97_5", "rhat"):
        assert md_row[field] == f"{float(rows[0][field]):.4g}"


def test_replicate_flag_overrides(tmp_path):
    out_dir = tmp_path / "rep"
    cfg = _tiny_replicate_config(tmp_path, out_dir)
    rc = main([
        "replicate", "--config", str(cfg), "--out-dir", str(out_dir),
        "--n", "200", "--kinds", "linear", "--variants", "typeC",
    ])
    assert rc in (0, 3)
    rows = _read_table_csv(out_dir / "table_linear.csv")
    assert rows[0]["prior"] == "typeC"
    assert len(read_cohort(out_dir / "cohort.csv")) == 200


def test_replicate_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"cohort": {"n": 100}, "mystery": 1}))
    rc = main(["replicate", "--config", str(path), "--out-dir", str(tmp_path / "o")])
    assert rc == 2
    assert "mystery" in capsys.readouterr().err


def test_evidence_table(tmp_path, capsys):
    out_dir = tmp_path / "ev"
    rc = main([
        "evidence", "--seed", "1", "--n", "1000", "--prefixes", "10,1000",
        "--p-null", "0.5,0.01", "--out-dir", str(out_dir),
    ])
    assert rc == 0
    rows = _read_table_csv(out_dir / "evidence.csv")
    assert len(rows) == 4
    by_key = {(int(r["n"]), float(r["p_null"])): float(r["delta"]) for r in rows}
    assert by_key[(1000, 0.5)] > 5.0
    assert by_key[(1000, 0.5)] > by_key[(10, 0.5)]
    assert by_key[(1000, 0.01)] < 1.0


def test_evidence_json_provenance(tmp_path):
    out_dir = tmp_path / "ev"
    rc = main(["evidence", "--seed", "3", "--prefixes", "10", "--p-null", "0.5", "--out-dir", str(out_dir)])
    assert rc == 0
    payload = json.loads((out_dir / "evidence.json").read_text())
    assert payload["provenance"]["seed"] == 3
    assert payload["rows"]


def test_format_subset(tmp_path):
    out_dir = tmp_path / "ev"
    rc = main(["evidence", "--prefixes", "10", "--p-null", "0.5", "--format", "csv", "--out-dir", str(out_dir)])
    assert rc == 0
    assert (out_dir / "evidence.csv").exists()
    assert not (out_dir / "evidence.json").exists()
    assert not (out_dir / "evidence.md").exists()
