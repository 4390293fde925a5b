"""Counterfactual simulation: do-semantics, ranking, determinism."""

from __future__ import annotations

import numpy as np
import pytest

from uptake.errors import DataFormatError, HashMismatchError
from uptake.inference import PosteriorSamples, structural_parameter_names
from uptake.model import default_graph
from uptake.survey import dataset_from_json, dataset_to_json
from uptake.synthetic import FIXTURE_TRUTH, synthetic_dataset
from uptake.whatif import (
    BASELINE,
    Intervention,
    Scenario,
    baseline,
    compare,
    comparison_table,
    point_mass_posterior,
    rank,
    scenario_from_json,
    scenario_to_json,
    simulate,
)


@pytest.fixture(scope="module")
def dataset():
    ds, _ = synthetic_dataset(FIXTURE_TRUTH, n=40, seed=33)
    return ds


def pm(dataset, **values):
    return point_mass_posterior(values, data=dataset)


def spread_posterior(dataset, center: dict, sd: float, draws: int = 30, seed: int = 0) -> PosteriorSamples:
    """Posterior with Gaussian scatter around ``center`` (sigmas kept fixed)."""
    names = structural_parameter_names(default_graph())
    rng = np.random.default_rng(seed)
    base = np.array([center.get(n, 0.0) for n in names])
    mat = np.tile(base, (draws, 1))
    for i, n in enumerate(names):
        if not n.startswith("sigma["):
            mat[:, i] += sd * rng.standard_normal(draws)
    from uptake.model import graph_hash
    from uptake.survey import dataset_hash

    return PosteriorSamples(
        names=names,
        draws=mat.reshape(1, draws, -1),
        seed=0,
        acceptance=(1.0,),
        positive=tuple(n.startswith("sigma[") for n in names),
        graph_hash=graph_hash(default_graph()),
        dataset_hash=dataset_hash(dataset),
        instrument_hash=dataset.instrument_id,
    )


def test_empty_scenario_equals_baseline(dataset):
    post = pm(dataset, **{"beta[TC->BI]": 0.5, "beta[BI->USE]": 0.8, "sigma[BI]": 0.3, "sigma[USE]": 0.3})
    a = simulate(post, dataset, Scenario(name="noop"), draws_per_sample=2, seed=5)
    b = baseline(post, dataset, draws_per_sample=2, seed=5)
    for target in ("BI", "USE"):
        assert a[target].mean == b[target].mean
        assert a[target].sd == b[target].sd
        assert (a[target].ci_low, a[target].ci_high) == (b[target].ci_low, b[target].ci_high)


def test_zero_effect_posterior_ignores_interventions(dataset):
    post = pm(dataset, **{"alpha[USE]": 0.7})  # all betas zero, sigmas zero
    scenario = Scenario(name="tc", interventions=(Intervention("TC", 6.0, "raw"),))
    out = simulate(post, dataset, scenario, seed=1)
    assert out["USE"].mean == pytest.approx(0.7, abs=1e-12)
    assert out["USE"].sd == 0.0


def test_counterfactual_chain_rule(dataset):
    post = pm(dataset, **{"beta[TC->BI]": 0.5, "beta[BI->USE]": 0.8})
    up = simulate(post, dataset, Scenario(name="up", interventions=(Intervention("TC", 1.0, "z"),)), seed=3)
    zero = simulate(post, dataset, Scenario(name="zero", interventions=(Intervention("TC", 0.0, "z"),)), seed=3)
    delta = up["USE"].mean - zero["USE"].mean
    assert delta == pytest.approx(0.4, abs=0.01)


def test_draw_count_bookkeeping(dataset):
    post = spread_posterior(dataset, {"sigma[BI]": 0.2, "sigma[USE]": 0.2}, sd=0.1, draws=12)
    out = baseline(post, dataset, draws_per_sample=3, seed=0)
    assert out["USE"].draw_count == 12 * dataset.n * 3
    assert out["BI"].draw_count == 12 * dataset.n * 3


def test_baseline_mean_is_intercept_under_symmetric_posterior(dataset):
    # coefficient draws paired +/-c with zero intercepts and no noise: the
    # predictive mean collapses to the USE intercept exactly
    names = structural_parameter_names(default_graph())
    base = np.zeros(len(names))
    idx = {n: i for i, n in enumerate(names)}
    plus = base.copy()
    minus = base.copy()
    for n in names:
        if n.startswith("beta["):
            plus[idx[n]] = 0.4
            minus[idx[n]] = -0.4
    alpha_use = 0.25
    plus[idx["alpha[USE]"]] = alpha_use
    minus[idx["alpha[USE]"]] = alpha_use
    from uptake.model import graph_hash
    from uptake.survey import dataset_hash

    post = PosteriorSamples(
        names=names,
        draws=np.stack([plus, minus]).reshape(1, 2, -1),
        seed=0,
        acceptance=(1.0,),
        positive=tuple(n.startswith("sigma[") for n in names),
        graph_hash=graph_hash(default_graph()),
        dataset_hash=dataset_hash(dataset),
        instrument_hash=dataset.instrument_id,
    )
    out = baseline(post, dataset, seed=2)
    assert out["USE"].mean == pytest.approx(alpha_use, abs=1e-10)


def test_compare_single_matches_simulate(dataset):
    post = pm(dataset, **{"beta[TC->BI]": 0.5, "beta[BI->USE]": 0.8, "sigma[BI]": 0.2, "sigma[USE]": 0.2})
    scenario = Scenario(name="a", interventions=(Intervention("TC", 6.0, "raw"),))
    row = compare(post, dataset, [scenario], draws_per_sample=2, seed=9)[0]
    direct = simulate(post, dataset, scenario, draws_per_sample=2, seed=9)
    assert row["USE"].mean == direct["USE"].mean
    assert row["BI"].sd == direct["BI"].sd


def test_compare_duplicate_names_rejected(dataset):
    post = pm(dataset)
    s = Scenario(name="same", interventions=(Intervention("TC", 5.0, "raw"),))
    with pytest.raises(DataFormatError, match="duplicate"):
        compare(post, dataset, [s, s])


def test_strong_tc_story_shape(dataset):
    # strong compatibility effect, weak facilitating-conditions effect:
    # the TC intervention beats FC, and adding FC on top of TC adds little
    post = pm(
        dataset,
        **{
            "beta[TC->BI]": 0.6,
            "beta[FC->BI]": 0.05,
            "beta[BI->USE]": 0.8,
            "beta[FC->USE]": 0.05,
        },
    )
    tc = Scenario(name="ide-integration", interventions=(Intervention("TC", 1.0, "z"),))
    fc = Scenario(name="training", interventions=(Intervention("FC", 1.0, "z"),))
    both = Scenario(
        name="both", interventions=(Intervention("TC", 1.0, "z"), Intervention("FC", 1.0, "z"))
    )
    rows = compare(post, dataset, [tc, fc, both], seed=4)
    use_means = {r["USE"].scenario: r["USE"].mean for r in rows}
    assert use_means["ide-integration"] > use_means["training"]
    assert use_means["both"] - use_means["ide-integration"] < 0.15


def test_rank_matches_enumeration_oracle(dataset):
    post = spread_posterior(
        dataset,
        {
            "beta[TC->BI]": 0.5,
            "beta[FC->BI]": 0.2,
            "beta[HB->BI]": 0.1,
            "beta[BI->USE]": 0.7,
            "beta[FC->USE]": 0.15,
            "beta[HB->USE]": 0.1,
            "sigma[BI]": 0.3,
            "sigma[USE]": 0.3,
        },
        sd=0.05,
        draws=40,
        seed=6,
    )
    scenarios = [
        Scenario(name="tc", interventions=(Intervention("TC", 6.0, "raw"),)),
        Scenario(name="fc", interventions=(Intervention("FC", 6.0, "raw"),)),
        Scenario(name="hb", interventions=(Intervention("HB", 6.0, "raw"),)),
        Scenario(name="mix", interventions=(Intervention("TC", 5.0, "raw"), Intervention("FC", 5.0, "raw"))),
        Scenario(name="low-tc", interventions=(Intervention("TC", 2.0, "raw"),)),
    ]
    result = rank(post, dataset, scenarios, draws_per_sample=2, seed=11)

    # oracle: exact expected gains by direct enumeration over every
    # posterior draw and respondent, no sampling
    g = default_graph()
    pooled = post.pooled()
    names = post.names
    idx = {n: i for i, n in enumerate(names)}

    def expected_use(draw, overrides):
        total = 0.0
        for i in range(dataset.n):
            zrow = {c: dataset.z[i, dataset.column(c)] for c in dataset.constructs}
            zrow.update(overrides)
            bi = draw[idx["alpha[BI]"]]
            for p in g.parents("BI"):
                bi += draw[idx[f"beta[{p}->BI]"]] * zrow[p]
            use = draw[idx["alpha[USE]"]] + draw[idx["beta[BI->USE]"]] * bi
            use += draw[idx["beta[FC->USE]"]] * zrow["FC"]
            use += draw[idx["beta[HB->USE]"]] * zrow["HB"]
            total += use
        return total / dataset.n

    oracle_gains = {}
    for s in scenarios:
        overrides = {
            iv.construct_id: (iv.value - dataset.stats[iv.construct_id].mean) / dataset.stats[iv.construct_id].sd
            for iv in s.interventions
        }
        gains = [expected_use(pooled[t], overrides) - expected_use(pooled[t], {}) for t in range(pooled.shape[0])]
        oracle_gains[s.name] = float(np.mean(gains))

    oracle_order = sorted(oracle_gains, key=lambda n: (-oracle_gains[n], n))
    assert [e.name for e in result.entries] == oracle_order
    for e in result.entries:
        assert e.expected_gain == pytest.approx(oracle_gains[e.name], abs=1e-10)


def test_rank_single_scenario(dataset):
    post = pm(dataset, **{"beta[TC->BI]": 0.5, "beta[BI->USE]": 0.8})
    result = rank(post, dataset, [Scenario(name="only", interventions=(Intervention("TC", 6.0, "raw"),))], seed=1)
    assert result.entries[0].name == "only"
    assert len(result.entries) == 1


def test_rank_ties_broken_by_name(dataset):
    post = pm(dataset, **{"beta[TC->BI]": 0.5, "beta[BI->USE]": 0.8, "sigma[BI]": 0.2, "sigma[USE]": 0.2})
    a = Scenario(name="zeta", interventions=(Intervention("TC", 6.0, "raw"),))
    b = Scenario(name="alpha", interventions=(Intervention("TC", 6.0, "raw"),))
    result = rank(post, dataset, [a, b], seed=2)
    assert [e.name for e in result.entries] == ["alpha", "zeta"]
    assert result.entries[0].expected_gain == pytest.approx(result.entries[1].expected_gain, abs=1e-12)


def test_rank_needs_scenarios(dataset):
    with pytest.raises(DataFormatError):
        rank(pm(dataset), dataset, [])


def test_probability_of_improvement_all_positive(dataset):
    post = pm(dataset, **{"beta[TC->BI]": 0.5, "beta[BI->USE]": 0.8})
    high = Scenario(name="high", interventions=(Intervention("TC", 7.0, "raw"),))
    result = rank(post, dataset, [high], seed=3)
    assert result.entries[0].prob_improvement == 1.0


def test_monotonicity_in_intervention_level(dataset):
    post = spread_posterior(
        dataset,
        {"beta[TC->BI]": 0.5, "beta[BI->USE]": 0.8, "sigma[BI]": 0.3, "sigma[USE]": 0.3},
        sd=0.03,
        draws=25,
        seed=8,
    )
    means = []
    for level in (2.0, 4.0, 6.0):
        s = Scenario(name=f"tc{level}", interventions=(Intervention("TC", level, "raw"),))
        means.append(simulate(post, dataset, s, draws_per_sample=2, seed=7)["BI"].mean)
    assert means[0] < means[1] < means[2]


def test_no_confounding_identity(dataset):
    # BI does not depend on PI here, so intervening on PI is a no-op
    post = pm(dataset, **{"beta[TC->BI]": 0.5, "beta[BI->USE]": 0.8, "sigma[BI]": 0.2, "sigma[USE]": 0.2})
    s = Scenario(name="pi", interventions=(Intervention("PI", 7.0, "raw"),))
    a = simulate(post, dataset, s, seed=6)
    b = baseline(post, dataset, seed=6)
    for t in ("BI", "USE"):
        assert a[t].mean == b[t].mean
        assert a[t].sd == b[t].sd


def test_raw_z_coherence(dataset):
    post = pm(dataset, **{"beta[TC->BI]": 0.5, "beta[BI->USE]": 0.8, "sigma[BI]": 0.2, "sigma[USE]": 0.2})
    st = dataset.stats["TC"]
    raw_value = 6.0
    z_value = (raw_value - st.mean) / st.sd
    via_raw = simulate(post, dataset, Scenario(name="r", interventions=(Intervention("TC", raw_value, "raw"),)), seed=5)
    via_z = simulate(post, dataset, Scenario(name="z", interventions=(Intervention("TC", z_value, "z"),)), seed=5)
    assert via_raw["USE"].mean == via_z["USE"].mean
    assert via_raw["BI"].sd == via_z["BI"].sd


def test_hash_mismatch_rejected(dataset):
    other, _ = synthetic_dataset(FIXTURE_TRUTH, n=12, seed=99)
    post = pm(other)
    with pytest.raises(HashMismatchError):
        simulate(post, dataset, BASELINE, seed=0)


def test_intervention_validation(dataset):
    post = pm(dataset)
    with pytest.raises(DataFormatError, match="non-predictor"):
        simulate(post, dataset, Scenario(name="x", interventions=(Intervention("BI", 5.0, "raw"),)), seed=0)
    with pytest.raises(DataFormatError, match="outside scale"):
        simulate(post, dataset, Scenario(name="x", interventions=(Intervention("TC", 9.0, "raw"),)), seed=0)
    with pytest.raises(DataFormatError, match="unknown construct"):
        simulate(post, dataset, Scenario(name="x", interventions=(Intervention("ZZ", 5.0, "raw"),)), seed=0)


def test_scenario_duplicate_construct_rejected():
    with pytest.raises(DataFormatError, match="twice"):
        Scenario(name="bad", interventions=(Intervention("TC", 5.0, "raw"), Intervention("TC", 6.0, "raw")))


def test_scenario_json_round_trip():
    s = Scenario(name="ide-integration", interventions=(Intervention("TC", 6.0, "raw"),))
    text = scenario_to_json(s)
    assert scenario_from_json(text) == s
    doc = scenario_from_json('{"name":"n","set":{"TC":{"value":6,"scale":"raw"}}}')
    assert doc.interventions[0].value == 6.0


def test_scenario_bad_documents():
    with pytest.raises(DataFormatError):
        scenario_from_json("{")
    with pytest.raises(DataFormatError):
        scenario_from_json('{"set": {}}')
    with pytest.raises(DataFormatError):
        scenario_from_json('{"name": "x", "set": {"TC": {}}}')


def test_determinism_same_seed(dataset):
    post = spread_posterior(dataset, {"beta[TC->BI]": 0.4, "sigma[BI]": 0.3, "sigma[USE]": 0.3}, sd=0.1, draws=15)
    s = Scenario(name="s", interventions=(Intervention("TC", 6.0, "raw"),))
    a = simulate(post, dataset, s, draws_per_sample=2, seed=42)
    b = simulate(post, dataset, s, draws_per_sample=2, seed=42)
    assert a["USE"].mean == b["USE"].mean
    assert a["USE"].ci_low == b["USE"].ci_low


def test_comparison_table_renders(dataset):
    post = pm(dataset, **{"beta[TC->BI]": 0.5, "beta[BI->USE]": 0.8})
    rows = compare(post, dataset, [Scenario(name="tc", interventions=(Intervention("TC", 6.0, "raw"),))], seed=1)
    table = comparison_table(rows)
    assert "tc" in table and "USE" in table


def test_dataset_serialization_preserves_hash_binding(dataset):
    post = pm(dataset, **{"beta[TC->BI]": 0.5})
    round_tripped = dataset_from_json(dataset_to_json(dataset))
    out = simulate(post, round_tripped, BASELINE, seed=0)
    assert "USE" in out
