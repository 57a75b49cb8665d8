"""Command-line behavior: validation vs numerical exit codes, file I/O,
determinism, JSON round-trips."""

import json

import numpy as np
import pytest

import scalefisher as sf
from scalefisher.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fisher_all_agreement(capsys, tmp_path):
    out_path = tmp_path / "report.json"
    code, _, _ = run_cli(capsys, "fisher", "--preset", "fbm-wn", "--H", "0.5",
                         "--sigma", "1", "--tau", "1", "--n", "512",
                         "--method", "all", "--output", str(out_path))
    assert code == 0
    payload = json.loads(out_path.read_text())
    assert payload["exact"] is not None and payload["integral"] is not None
    rel = abs(payload["exact"] - payload["integral"]) / payload["exact"]
    assert rel < 0.10
    assert payload["relative_differences"]["exact_vs_integral"] < 0.10


def test_fisher_closed_form_h_half(capsys):
    code, out, _ = run_cli(capsys, "fisher", "--preset", "fbm-wn", "--H", "0.5",
                           "--n", "1000000", "--method", "closed-form")
    assert code == 0
    payload = json.loads(out)
    assert payload["closed_form"] == pytest.approx(1000000.0 ** 0.5 * 0.125, rel=1e-12)
    assert payload["exact"] is None and payload["integral"] is None


def test_fisher_domain_error_exit_code(capsys):
    code, _, err = run_cli(capsys, "fisher", "--preset", "fbm-wn", "--H", "1.5",
                           "--n", "100")
    assert code == 2
    assert "Hurst" in err


def test_estimate_end_to_end(capsys, tmp_path):
    spec = sf.fbm_wn_spec(512, 0.5)
    z = sf.sample_z(spec, seed=31, rep_index=0)
    data = tmp_path / "z.txt"
    data.write_text("".join(f"{v:.17g}\n" for v in z))
    code, out, _ = run_cli(capsys, "estimate", "--preset", "fbm-wn", "--H", "0.5",
                           "--n", "512", "--input", str(data))
    assert code == 0
    payload = json.loads(out)
    assert np.isfinite(payload["sigma2_hat"])
    assert payload["plugin_fisher"] > 0
    assert payload["split"]["split_size"] >= 1


def test_estimate_empty_file(capsys, tmp_path):
    data = tmp_path / "empty.txt"
    data.write_text("")
    code, _, err = run_cli(capsys, "estimate", "--preset", "fbm-wn", "--H", "0.5",
                           "--n", "512", "--input", str(data))
    assert code == 2
    assert "no data" in err


def test_estimate_bad_token_cites_line(capsys, tmp_path):
    lines = ["0.1"] * 6 + ["not-a-number"] + ["0.2"] * 5
    data = tmp_path / "bad.txt"
    data.write_text("\n".join(lines) + "\n")
    code, _, err = run_cli(capsys, "estimate", "--preset", "fbm-wn", "--H", "0.5",
                           "--n", "12", "--input", str(data))
    assert code == 2
    assert "line 7" in err


def test_estimate_length_mismatch(capsys, tmp_path):
    data = tmp_path / "short.txt"
    data.write_text("1.0\n2.0\n")
    code, _, err = run_cli(capsys, "estimate", "--preset", "fbm-wn", "--H", "0.5",
                           "--n", "512", "--input", str(data))
    assert code == 2
    assert "2 values" in err


def test_estimate_numerical_exit_code(capsys, tmp_path):
    # n too small for the split: numerical failure, distinct exit code
    data = tmp_path / "tiny.txt"
    data.write_text("".join(f"{v}\n" for v in np.zeros(16)))
    code, _, err = run_cli(capsys, "estimate", "--preset", "fbm-wn", "--H", "0.5",
                           "--n", "16", "--input", str(data))
    assert code == 3
    assert "information" in err.lower()


def test_simulate_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run_cli(capsys, "simulate", "--preset", "fbm-wn", "--H", "0.5",
                             "--n", "64", "--seed", "42", "--reps", "2",
                             "--output", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    header, first = a.read_text().splitlines()[:2]
    assert header == "rep,index,z"
    assert first.startswith("0,0,")


def test_mc_study_zero_reps_rejected(capsys):
    code, _, err = run_cli(capsys, "mc-study", "--preset", "fbm-wn", "--H", "0.5",
                           "--n", "64", "--seed", "1", "--reps", "0")
    assert code == 2


def test_mc_study_with_per_rep_csv(capsys, tmp_path):
    per_rep = tmp_path / "reps.csv"
    out = tmp_path / "study.json"
    code, _, _ = run_cli(capsys, "mc-study", "--preset", "fbm-wn", "--H", "0.5",
                         "--n", "512", "--seed", "8", "--reps", "4",
                         "--per-rep", str(per_rep), "--output", str(out))
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["reps"] == 4
    rows = per_rep.read_text().splitlines()
    assert rows[0] == "rep,V,sigma2_tilde,sigma2_hat"
    assert len(rows) == 5


def test_rate_scan_csv_and_slope(capsys, tmp_path):
    out = tmp_path / "scan.csv"
    code, stdout, _ = run_cli(capsys, "rate-scan", "--preset", "fbm-wn", "--H", "0.5",
                              "--n-grid", "1e4:1e6:logsteps=3",
                              "--output", str(out))
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "n,fisher_integral,fisher_closed_form"
    assert len(rows) == 4
    summary = json.loads(stdout)
    assert summary["slope_integral"] == pytest.approx(0.5, abs=0.02)
    assert summary["slope_closed_form"] == pytest.approx(0.5, abs=1e-9)


def test_rate_scan_bad_grid(capsys):
    code, _, err = run_cli(capsys, "rate-scan", "--preset", "fbm-wn", "--H", "0.5",
                           "--n-grid", "10:5:logsteps=3")
    assert code == 2


def test_user_preset_requires_flags(capsys):
    code, _, err = run_cli(capsys, "fisher", "--preset", "user", "--n", "100")
    assert code == 2
    assert "--gamma" in err


def test_user_preset_full(capsys):
    code, out, _ = run_cli(capsys, "fisher", "--preset", "user", "--n", "100",
                           "--beta", "0.25", "--K", "0", "--alpha", "-0.25",
                           "--gamma", "1.0", "--ell", "constant:1",
                           "--method", "closed-form")
    assert code == 0
    payload = json.loads(out)
    assert payload["regime"] == "critical"
    assert payload["log_factor"] is True


def test_json_output_roundtrip(capsys):
    code, out, _ = run_cli(capsys, "fisher", "--preset", "large-error", "--H", "0.6",
                           "--beta", "0.05", "--n", "10000", "--method", "closed-form")
    assert code == 0
    parsed = json.loads(out)
    assert json.loads(json.dumps(parsed)) == parsed
    assert parsed["regime"] == "supercritical"


def test_unknown_subcommand_exit(capsys):
    assert main(["definitely-not-a-command"]) == 2


def test_thread_env_does_not_change_results(capsys, tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("SCALEFISHER_THREADS", threads)
        out = tmp_path / f"study-{threads}.json"
        code, _, _ = run_cli(capsys, "mc-study", "--preset", "fbm-wn", "--H", "0.5",
                             "--n", "512", "--seed", "21", "--reps", "6",
                             "--output", str(out))
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
