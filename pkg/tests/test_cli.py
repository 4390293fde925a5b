"""CLI commands, exit codes, and output reproducibility."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from uptake.cli import main
from uptake.survey import parse_responses, score_constructs
from uptake.synthetic import FIXTURE_TRUTH, generate_responses, responses_to_csv


@pytest.fixture(scope="module")
def data_file(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("cli") / "wave1.csv"
    path.write_text(responses_to_csv(generate_responses(truth=FIXTURE_TRUTH, n=60, seed=17)), "utf-8")
    return path


@pytest.fixture(scope="module")
def fitted(data_file, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-fit") / "posterior.json"
    code = main(
        [
            "fit",
            "--data",
            str(data_file),
            "--seed",
            "3",
            "--chains",
            "2",
            "--warmup",
            "500",
            "--draws",
            "500",
            "--out",
            str(out),
        ]
    )
    assert code in (0, 3)
    return data_file, out


def run(capsys, argv) -> tuple[int, str]:
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out


def test_fit_writes_posterior(fitted):
    _, out = fitted
    doc = json.loads(out.read_text())
    assert doc["v"] == 1
    assert len(doc["parameterNames"]) == 17
    assert doc["diagnosticsSummary"] is not None


def test_fit_missing_data_file(tmp_path, capsys):
    out = tmp_path / "nope.json"
    code, _ = run(capsys, ["fit", "--data", str(tmp_path / "missing.csv"), "--out", str(out), "--seed", "1"])
    assert code == 2
    assert not out.exists()


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["fit"]) == 1  # missing required flags
    assert main(["frobnicate"]) == 1


def test_fit_json_reproducible(data_file, tmp_path, capsys):
    out1, out2 = tmp_path / "p1.json", tmp_path / "p2.json"
    argv = ["fit", "--data", str(data_file), "--seed", "8", "--chains", "2", "--warmup", "150", "--draws", "150"]
    main(argv + ["--out", str(out1), "--json"])
    first = capsys.readouterr().out
    main(argv + ["--out", str(out2), "--json"])
    second = capsys.readouterr().out
    assert out1.read_bytes() == out2.read_bytes()
    j1, j2 = json.loads(first), json.loads(second)
    j1.pop("out"), j2.pop("out")
    assert j1 == j2


def test_diagnose(fitted, capsys):
    _, posterior = fitted
    code, out = run(capsys, ["diagnose", "--posterior", str(posterior)])
    assert code == 0
    assert "alpha[BI]" in out
    code, out = run(capsys, ["diagnose", "--posterior", str(posterior), "--json"])
    assert json.loads(out)["diagnostics"]["perParameter"]["alpha[BI]"]["rhat"] > 0


def test_simulate_empty_scenario_equals_baseline(fitted, tmp_path, capsys):
    data_file, posterior = fitted
    empty = tmp_path / "empty.json"
    empty.write_text('{"name": "baseline", "set": {}}')
    code, out = run(
        capsys,
        ["simulate", "--posterior", str(posterior), "--data", str(data_file), "--scenario", str(empty), "--seed", "5", "--json"],
    )
    assert code == 0
    doc = json.loads(out)

    from uptake.inference import posterior_from_json
    from uptake.whatif import baseline

    samples = posterior_from_json(Path(posterior).read_text())
    data = score_constructs(parse_responses(Path(data_file).read_text(), "csv"))
    expected = baseline(samples, data, 1, 5)
    assert doc["targets"]["USE"]["mean"] == expected["USE"].mean
    assert doc["targets"]["BI"]["ci90"] == [expected["BI"].ci_low, expected["BI"].ci_high]


def test_compare_and_rank(fitted, tmp_path, capsys):
    data_file, posterior = fitted
    tc = tmp_path / "tc.json"
    fc = tmp_path / "fc.json"
    tc.write_text('{"name": "tc-up", "set": {"TC": {"value": 6, "scale": "raw"}}}')
    fc.write_text('{"name": "fc-up", "set": {"FC": {"value": 6, "scale": "raw"}}}')
    code, out = run(
        capsys,
        ["compare", "--posterior", str(posterior), "--data", str(data_file), "--scenarios", str(tc), str(fc), "--seed", "2", "--json"],
    )
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["scenario"] for r in rows] == ["tc-up", "fc-up"]

    code, out = run(
        capsys,
        ["rank", "--posterior", str(posterior), "--data", str(data_file), "--scenarios", str(tc), str(fc), "--seed", "2", "--json"],
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["ranking"][0]["scenario"] == "tc-up"  # fixture truth: TC dominates
    assert doc["ranking"][0]["gain"] > doc["ranking"][1]["gain"]


def test_report_means_match_scoring(fitted, capsys):
    data_file, posterior = fitted
    code, out = run(capsys, ["report", "--posterior", str(posterior), "--data", str(data_file), "--json"])
    assert code == 0
    doc = json.loads(out)
    data = score_constructs(parse_responses(Path(data_file).read_text(), "csv"))
    for c in data.constructs:
        assert doc["constructMeans"][c] == data.stats[c].mean
    assert len(doc["parameters"]) == 17


def test_report_wrong_dataset_exits_2(fitted, tmp_path, capsys):
    _, posterior = fitted
    other = tmp_path / "other.csv"
    other.write_text(responses_to_csv(generate_responses(n=20, seed=55)), "utf-8")
    code, _ = run(capsys, ["report", "--posterior", str(posterior), "--data", str(other)])
    assert code == 2


def test_compress_round_trip(fitted, tmp_path, capsys):
    _, posterior = fitted
    out = tmp_path / "prior.json"
    code, _ = run(capsys, ["compress", "--posterior", str(posterior), "--out", str(out)])
    if code == 0:
        doc = json.loads(out.read_text())
        assert doc["provenance"].startswith("chained:")
        assert "block" in doc
    else:
        assert code == 3  # unconverged small fit refuses compression


def test_compress_unconverged_exits_3(tmp_path, capsys):
    # hand-built two-level posterior fails R-hat
    from uptake.inference import PosteriorSamples, posterior_to_json

    rng = np.random.default_rng(0)
    draws = np.concatenate([rng.normal(0, 0.1, (1, 200, 1)), rng.normal(9, 0.1, (1, 200, 1))])
    samples = PosteriorSamples(names=("a",), draws=draws, seed=0, acceptance=(0.3, 0.3), positive=(False,))
    bad = tmp_path / "bad.json"
    bad.write_text(posterior_to_json(samples))
    code, _ = run(capsys, ["compress", "--posterior", str(bad), "--out", str(tmp_path / "prior.json")])
    assert code == 3


def test_fit_bundled_fixture_converges(tmp_path, capsys):
    from importlib import resources

    bundled = resources.files("uptake.data").joinpath("synthetic_wave1.csv")
    out = tmp_path / "bundled-posterior.json"
    code, text = run(
        capsys,
        [
            "fit",
            "--data",
            str(bundled),
            "--seed",
            "42",
            "--chains",
            "2",
            "--warmup",
            "600",
            "--draws",
            "900",
            "--out",
            str(out),
            "--json",
        ],
    )
    assert code == 0
    doc = json.loads(out.read_text())
    per_parameter = doc["diagnosticsSummary"]["perParameter"]
    assert all(stats["rhat"] <= 1.05 for stats in per_parameter.values())


def test_chained_prior_instrument_mismatch_exits_2(fitted, tmp_path, capsys):
    data_file, posterior = fitted
    doc = json.loads(Path(posterior).read_text())
    # force a converged summary so compression proceeds, then tamper the
    # instrument binding: the refit must refuse
    from uptake.inference import posterior_from_json
    from uptake.priors import compress_posterior, prior_to_json

    samples = posterior_from_json(Path(posterior).read_text())
    prior = compress_posterior(samples, rhat_threshold=10.0)
    tampered = json.loads(prior_to_json(prior))
    tampered["instrumentHash"] = "not-the-same-instrument"
    prior_path = tmp_path / "tampered-prior.json"
    prior_path.write_text(json.dumps(tampered))
    code, _ = run(
        capsys,
        ["fit", "--data", str(data_file), "--prior", str(prior_path), "--seed", "1", "--out", str(tmp_path / "x.json")],
    )
    assert code == 2


def test_malformed_scenario_exits_2(fitted, tmp_path, capsys):
    data_file, posterior = fitted
    bad = tmp_path / "bad-scenario.json"
    bad.write_text("{nope")
    code, _ = run(capsys, ["simulate", "--posterior", str(posterior), "--data", str(data_file), "--scenario", str(bad)])
    assert code == 2
