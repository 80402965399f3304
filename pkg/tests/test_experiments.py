import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracle import pattern_probability_oracle, witness_count
from randcubical import lattice
from randcubical.cubes import ElementaryCube, Window, faces_all
from randcubical.errors import NonProductModelError, PlanError
from randcubical.experiments import (
    ExperimentPlan,
    check_lemma_bounds,
    check_resampling_bound,
    check_stabilization,
    continuity_modulus,
    continuity_violations,
    count_positivity_witnesses,
    emit,
    estimate_positivity,
    pattern_probability,
    render,
    run_clt,
    run_clt_suite,
    run_lifetime_lln,
    run_lln,
    stabilization_frequency,
)
from randcubical.filtration import Configuration, betti_curves, build_filtration
from randcubical.models import ModelSpec, SampleSeed, marginal_cdf, sample_configuration

C = ElementaryCube.from_intervals
UNIFORM2 = ModelSpec.uniform(2)
DET2 = ModelSpec.costafarber(2, (1, 1, 1))


def hollow_square_config(n=3):
    region = Window(n, 2)
    vals = np.ones(region.grid_shape)
    top = C((0, 1), (0, 1))
    for f in faces_all(top):
        if f != top:
            vals[lattice.cube_index(region, f)] = 0.0
    return Configuration(region, vals, UNIFORM2)


# --------------------------------------------------------------------------- plans


@pytest.mark.parametrize("kwargs", [
    dict(q=2), dict(q=-1), dict(n_list=(8, 4)), dict(n_list=()), dict(t_grid=(0.5, 1.5)),
    dict(t_grid=(0.6, 0.2)), dict(samples_per_n=0), dict(format="xml"),
])
def test_invalid_plans(kwargs):
    base = dict(model=UNIFORM2, q=0)
    base.update(kwargs)
    with pytest.raises(PlanError):
        ExperimentPlan(**base).validate()


def test_default_n_list():
    assert ExperimentPlan(UNIFORM2, 0).n_list == (8, 16, 32, 64)
    assert ExperimentPlan(ModelSpec.uniform(3), 0).n_list == (4, 8, 12, 16)
    assert len(ExperimentPlan(UNIFORM2, 0).t_grid) == 101


def test_lln_refuses_discontinuous_marginals():
    plan = ExperimentPlan(ModelSpec.costafarber(2, (1, 0.5, 0.5)), 0, n_list=(2,))
    with pytest.raises(PlanError):
        run_lln(plan)
    with pytest.raises(PlanError):
        run_lifetime_lln(plan)


# --------------------------------------------------------------------------- LLN


def test_degenerate_lln_plan():
    res = run_lln(ExperimentPlan(UNIFORM2, 1, n_list=(1,), samples_per_n=1))
    assert len(res.mean) == 1 and res.sup_diff == []
    assert np.all(res.std[0] == 0)
    assert len(list(res.rows())) == 101


def test_lln_statistics_match_direct_computation():
    plan = ExperimentPlan(UNIFORM2, 0, t_grid=(0.0, 0.25, 0.5, 1.0), n_list=(2, 4), samples_per_n=3, seed=5)
    res = run_lln(plan)
    for n, mean in zip(plan.n_list, res.mean):
        w = Window(n, 2)
        vals = []
        for i in range(3):
            omega = sample_configuration(UNIFORM2, w.grow(1), SampleSeed(5, (n, i)))
            vals.append(betti_curves(build_filtration(omega, w), [0])[0](np.array(plan.t_grid)) / w.volume)
        assert np.allclose(mean, np.mean(vals, axis=0))
    assert res.sup_diff[0] >= res.grid_sup_diff[0] - 1e-15
    assert all(v <= 9 for m in res.mean for v in m)


def test_lln_workers_give_identical_output():
    plan = ExperimentPlan(UNIFORM2, 1, n_list=(2, 3), samples_per_n=4, seed=2)
    a = render(run_lln(plan))
    b = render(run_lln(ExperimentPlan(UNIFORM2, 1, n_list=(2, 3), samples_per_n=4, seed=2, workers=2)))
    assert a == b


def test_lifetime_lln_deterministic_model():
    res = run_lifetime_lln(ExperimentPlan(DET2, 0, n_list=(2, 4), samples_per_n=2))
    assert res.mean == [1 / 16, 1 / 64]
    assert res.std == [0.0, 0.0]


def test_lifetime_lln_consistency():
    res = run_lifetime_lln(ExperimentPlan(ModelSpec.bernoulli(2, 1), 1, n_list=(4, 8), samples_per_n=6, seed=3))
    for a, b, s in zip(res.mean, res.integral_of_mean_curve, res.std):
        assert abs(a - b) <= 1e-12 + 3 * s / np.sqrt(6)


def test_continuity_modulus_bounds_mean_jumps():
    res = run_lln(ExperimentPlan(UNIFORM2, 1, t_grid=tuple(np.linspace(0, 1, 21)), n_list=(4, 8), samples_per_n=3))
    assert continuity_violations(res, UNIFORM2) == []
    assert continuity_modulus(UNIFORM2, 4, 0.3, 0.3) == 0.0
    assert continuity_modulus(UNIFORM2, 4, 0.0, 0.1) > continuity_modulus(UNIFORM2, 4, 0.0, 0.05)


# --------------------------------------------------------------------------- CLT


def test_clt_deterministic_model_has_zero_variance():
    res = run_clt(ExperimentPlan(DET2, 0, n_list=(3,), samples_per_n=4), 0.5)
    row = res.by_n(3)
    assert row.var_over_volume == 0.0 and row.ks_distance is None
    assert np.all(row.standardized == 0)


def test_clt_rejects_non_product():
    with pytest.raises(NonProductModelError):
        run_clt(ExperimentPlan(ModelSpec.costafarber(2, (1, 0.5, 0.5)), 0, n_list=(2,)), 0.5)


def test_clt_standardized_samples():
    res = run_clt(ExperimentPlan(ModelSpec.bernoulli(2, 1), 1, n_list=(4,), samples_per_n=50, seed=1), "lifetime")
    z = res.by_n(4).standardized
    assert abs(z.mean()) < 1e-12 and abs(z.std(ddof=1) - 1) < 1e-12
    assert 0 < res.by_n(4).ks_distance < 1


def test_clt_disjoint_seed_streams_agree():
    m = ModelSpec.bernoulli(2, 1)
    est = []
    for seed in (10, 20):
        row = run_clt(ExperimentPlan(m, 1, n_list=(8,), samples_per_n=300, seed=seed), 0.5).by_n(8)
        se = row.var_over_volume * np.sqrt(np.var(row.standardized ** 2) / row.samples)
        est.append((row.var_over_volume, se))
    (a, sa), (b, sb) = est
    assert abs(a - b) <= 4 * np.hypot(sa, sb)


# --------------------------------------------------------------------------- resampling and stabilization


def test_resampling_bound_small():
    rep = check_resampling_bound(UNIFORM2, Window(2, 2), 40, 0)
    assert rep.passed and rep.bound == 8
    assert max(rep.max_abs.values()) <= 8


def test_resampling_top_dimension_bernoulli():
    rep = check_resampling_bound(ModelSpec.bernoulli(2, 2), Window(2, 2), 60, 1)
    assert max(rep.max_abs.values()) <= 2


def test_resampling_deterministic_model():
    rep = check_resampling_bound(DET2, Window(2, 2), 5, 1)
    assert set(rep.max_abs.values()) == {0}


def test_stabilization_identical_pair():
    omega = sample_configuration(UNIFORM2, Window(6, 2), SampleSeed(0))
    rep = check_stabilization(omega, omega, (2, 3, 4, 5), 1, 0.5)
    assert rep.differences == [0, 0, 0, 0] and rep.tail_constant and rep.stable_from == 2


def test_stabilization_single_top_cube_difference():
    region = Window(7, 2)
    top = C((0, 1), (0, 1))
    for seed in range(5):
        base = np.array(sample_configuration(UNIFORM2, region, SampleSeed(seed)).values)
        for f in faces_all(top):
            base[lattice.cube_index(region, f)] = 0.0
        a, b = base.copy(), base.copy()
        a[lattice.cube_index(region, top)] = 0.2
        b[lattice.cube_index(region, top)] = 0.8
        wa, wb = Configuration(region, a, UNIFORM2), Configuration(region, b, UNIFORM2)
        assert check_stabilization(wa, wb, range(1, 7), 1, 0.5).differences == [-1] * 6
        assert check_stabilization(wa, wb, range(1, 7), 0, 0.5).differences == [0] * 6


def test_stabilization_frequency_runs():
    freq, reports = stabilization_frequency(UNIFORM2, (2, 3, 4, 5), 5, 0, 0, 0.5)
    assert 0 <= freq <= 1 and len(reports) == 5


# --------------------------------------------------------------------------- positivity


def test_hand_built_hollow_square_is_one_witness():
    omega = hollow_square_config()
    w = count_positivity_witnesses(omega, 1, 0.5, 2)
    assert w.counts == [1] and w.origin_hits == 1
    assert w.lower_bound > 0
    F = build_filtration(omega, Window(2, 2))
    assert betti_curves(F, [1])[1](0.5) == 1


def test_full_complex_has_no_witness():
    omega = Configuration(Window(3, 2), np.zeros(Window(3, 2).grid_shape), UNIFORM2)
    w = count_positivity_witnesses(omega, 1, 0.5, 2)
    assert w.counts == [0] and w.lower_bound == 0


def test_pattern_window_mismatch():
    with pytest.raises(PlanError):
        count_positivity_witnesses(hollow_square_config(), 1, 0.5, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([(2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]),
       st.sampled_from([0.3, 0.5, 0.8]))
def test_witness_scan_matches_brute_force(seed, dq, t):
    d, q = dq
    # bias values toward the pattern so matches actually occur
    rng = np.random.default_rng(seed)
    region = Window(2, d)
    dims = lattice.dim_grid(region)
    vals = np.where(dims == q, rng.random(region.grid_shape) * 0.6, 0.4 + 0.6 * rng.random(region.grid_shape))
    omega = Configuration(region, vals)
    got = count_positivity_witnesses(omega, q, t, 2).counts[0]
    mapping = {qq.intervals(): v for qq, v in omega.items()}
    assert got == witness_count(mapping, 2, q, t, d)


@pytest.mark.parametrize("model,q,t", [
    (UNIFORM2, 1, 0.5), (UNIFORM2, 0, 0.3), (ModelSpec.uniform(3), 1, 0.4),
    (ModelSpec.bernoulli(2, 1), 0, 0.6), (ModelSpec.bernoulli(3, 2), 1, 0.5),
])
def test_pattern_probability_closed_form(model, q, t):
    cdf = lambda k, s: marginal_cdf(model, k)(s)
    assert pattern_probability(model, q, t) == pytest.approx(pattern_probability_oracle(cdf, q, t, model.ambient_dim),
                                                             rel=1e-12)
    if model == UNIFORM2 and q == 1:
        assert pattern_probability(model, q, t) == 2.0 ** -21


def test_positivity_estimate_matches_closed_form():
    w = estimate_positivity(UNIFORM2, 0, 0.2, 2, 60, 12, 4)
    assert w.p_exact == pytest.approx(0.04 * 0.8 ** 13)
    assert abs(w.p_hat - w.p_exact) <= 4 * w.se
    assert w.lower_bound == pytest.approx(w.p_hat / 6 ** 2)


# --------------------------------------------------------------------------- lemma bounds


def test_lemma_bounds_pass():
    rep = check_lemma_bounds(60, 3)
    assert rep.passed
    assert rep.max_ratio_diff <= 1 and rep.max_ratio_cover <= 1


# --------------------------------------------------------------------------- output


def test_emit_csv_and_json(tmp_path):
    plan = ExperimentPlan(UNIFORM2, 0, t_grid=(0.0, 0.5), n_list=(2, 3), samples_per_n=2, seed=1)
    res = run_lln(plan)
    text = emit(res, "csv", str(tmp_path / "a.csv"))
    assert text.splitlines()[0] == "model,q,n,t,mean_norm_betti,std,samples"
    assert (tmp_path / "a.csv").read_text() == text
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 4 and rows[0]["model"] == "uniform:d=2"
    doc = json.loads(render(res, "json"))
    assert doc["header"] == list(res.header)
    assert [r["mean_norm_betti"] for r in doc["rows"]] == [float(r["mean_norm_betti"]) for r in rows]
    clt = run_clt(ExperimentPlan(UNIFORM2, 0, n_list=(2,), samples_per_n=5), 0.5)
    assert render(clt).splitlines()[0] == "model,q,n,t,var_over_volume,ks_distance,samples"
    assert json.loads(render(clt, "json"))["rows"][0]["n"] == 2


def test_outputs_are_byte_identical():
    plan = ExperimentPlan(ModelSpec.bernoulli(2, 1), 1, n_list=(2, 4), samples_per_n=3, seed=8)
    assert render(run_lln(plan), "json") == render(run_lln(plan), "json")
    assert render(run_clt(plan, "lifetime")) == render(run_clt(plan, "lifetime"))


def test_clt_suite_matches_single_runs():
    plan = ExperimentPlan(ModelSpec.bernoulli(2, 1), 0, n_list=(3, 4), samples_per_n=20, seed=6)
    suite = run_clt_suite(plan, [(0, 0.5), (1, 0.5), (1, "lifetime")])
    singles = [run_clt(plan, 0.5), run_clt(ExperimentPlan(plan.model, 1, n_list=(3, 4), samples_per_n=20, seed=6), 0.5),
               run_clt(ExperimentPlan(plan.model, 1, n_list=(3, 4), samples_per_n=20, seed=6), "lifetime")]
    for a, b in zip(suite, singles):
        assert render(a) == render(b)
