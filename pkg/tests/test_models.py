import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randcubical import lattice
from randcubical.cubes import CubicalSet, ElementaryCube, Window, faces_all
from randcubical.errors import InvalidModelError, NonProductModelError, OutOfRegionError
from randcubical.filtration import Configuration
from randcubical.models import (
    ModelSpec,
    SampleSeed,
    marginal_cdf,
    presence_probability,
    resample_origin,
    sample_configuration,
    translate_configuration,
    uniforms,
)

C = ElementaryCube.from_intervals


@pytest.mark.parametrize("text", ["bernoulli:d=3,k=2", "uniform:d=2", "costafarber:d=2,p=1.0,0.5,0.25"])
def test_model_string_round_trip(text):
    m = ModelSpec.parse(text)
    assert str(m) == text
    assert ModelSpec.parse(str(m)) == m


@pytest.mark.parametrize("text", [
    "bernoulli:d=2,k=3", "bernoulli:d=2", "uniform:d=0", "costafarber:d=2,p=1,0.5",
    "costafarber:d=1,p=1.5,0.5", "gauss:d=2", "uniform", "uniform:d=2,x=1",
])
def test_invalid_models(text):
    with pytest.raises(InvalidModelError):
        ModelSpec.parse(text)


def test_continuity_flags():
    assert ModelSpec.uniform(2).has_continuous_marginals()
    assert ModelSpec.bernoulli(3, 2).has_continuous_marginals()
    assert not ModelSpec.costafarber(2, (1, 0.5, 0.5)).has_continuous_marginals()
    det = ModelSpec.costafarber(2, (1, 1, 0))
    assert det.is_deterministic and det.is_product and det.has_continuous_marginals()


def test_reproducible_and_seed_sensitive():
    m, w = ModelSpec.uniform(2), Window(3, 2)
    a = sample_configuration(m, w, SampleSeed(7, (1, 2)))
    b = sample_configuration(m, w, SampleSeed(7, (1, 2)))
    c = sample_configuration(m, w, SampleSeed(7, (1, 3)))
    assert a == b
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_values_independent_of_region():
    m, s = ModelSpec.uniform(3), SampleSeed(11)
    small = sample_configuration(m, Window(1, 3), s)
    big = sample_configuration(m, Window(3, 3), s)
    for q, v in small.items():
        assert big[q] == v


def test_uniforms_are_dyadic_and_in_range():
    u = uniforms(SampleSeed(3), [np.arange(-50, 50)[:, None], np.arange(-50, 50)[None, :]])
    assert u.min() >= 0 and u.max() < 1
    assert np.all(u * 2.0 ** 53 == np.floor(u * 2.0 ** 53))
    assert abs(u.mean() - 0.5) < 0.01


def test_bernoulli_values_by_dimension():
    m = ModelSpec.bernoulli(3, 2)
    omega = sample_configuration(m, Window(2, 3), SampleSeed(0))
    for q, v in omega.items():
        if q.dim < 2:
            assert v == 0.0
        elif q.dim > 2:
            assert v == 1.0
        else:
            assert 0.0 <= v < 1.0


@pytest.mark.parametrize("model", [ModelSpec.uniform(2), ModelSpec.bernoulli(2, 1),
                                   ModelSpec.costafarber(2, (0.8, 0.6, 0.7))])
def test_empirical_marginals_match_cdf(model):
    # pool over many cubes of one large sample plus a few seeds
    w = Window(20, 2)
    vals = {k: [] for k in range(3)}
    for s in range(3):
        omega = sample_configuration(model, w, SampleSeed(s))
        dims = lattice.dim_grid(w)
        for k in range(3):
            vals[k].append(omega.values[dims == k])
    for k in range(3):
        x = np.concatenate(vals[k])
        for t in (0.0, 0.3, 0.7, 0.999):
            p = marginal_cdf(model, k)(t)
            se = np.sqrt(max(p * (1 - p), 1e-12) / len(x))
            assert abs(np.mean(x <= t) - p) <= 5 * se + 1e-12


def test_costafarber_present_set_is_face_closed():
    m = ModelSpec.costafarber(3, (0.9, 0.7, 0.6, 0.5))
    omega = sample_configuration(m, Window(2, 3), SampleSeed(4))
    present = CubicalSet([q for q, v in omega.items() if v == 0.0], 3)
    assert present.is_face_closed()
    assert set(np.unique(omega.values)) <= {0.0, 1.0}


def test_presence_probability_formula():
    m = ModelSpec.costafarber(2, (0.5, 0.25, 0.75))
    assert presence_probability(m, 0) == 0.5
    assert presence_probability(m, 1) == 0.5 ** 2 * 0.25
    assert presence_probability(m, 2) == 0.5 ** 4 * 0.25 ** 4 * 0.75


def test_translation_coherence():
    m = ModelSpec.uniform(2)
    omega = sample_configuration(m, Window(4, 2), SampleSeed(9))
    x = (1, -2)
    moved = translate_configuration(omega, x)
    assert moved.region == Window(2, 2)
    for q, v in moved.items():
        assert v == omega[q.translate(tuple(-c for c in x))]
    with pytest.raises(OutOfRegionError):
        translate_configuration(omega, (4, 0))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([ModelSpec.uniform(2), ModelSpec.bernoulli(3, 1)]))
def test_resample_origin_only_touches_origin_cubes(seed, m):
    w = Window(2, m.ambient_dim)
    omega = sample_configuration(m, w, SampleSeed(seed, (0,)))
    star = resample_origin(omega, SampleSeed(seed, (1,)))
    origin = {q for q in faces_all(C(*[(0, 1)] * m.ambient_dim)) if all(a == 0 for a in q.anchor)}
    assert len(origin) == 2 ** m.ambient_dim
    for q, v in omega.items():
        if q not in origin:
            assert star[q] == v
    if m.variant == "uniform":
        assert any(star[q] != omega[q] for q in origin)


def test_resample_origin_refuses_non_product():
    m = ModelSpec.costafarber(2, (1, 0.5, 0.5))
    omega = sample_configuration(m, Window(2, 2), SampleSeed(0))
    with pytest.raises(NonProductModelError):
        resample_origin(omega, SampleSeed(1))
    with pytest.raises(InvalidModelError):
        resample_origin(Configuration(Window(1, 1), np.zeros(5)), SampleSeed(1))


def test_region_dimension_mismatch():
    with pytest.raises(InvalidModelError):
        sample_configuration(ModelSpec.uniform(2), Window(1, 3), SampleSeed(0))


def test_per_cube_independence():
    m, w = ModelSpec.uniform(2), Window(1, 2)
    N = 10_000
    vals = np.stack([sample_configuration(m, w, SampleSeed(31, (i,))).values.ravel() for i in range(N)])
    ind = vals <= 0.5
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.choice(ind.shape[1], size=2, replace=False)
        r = np.corrcoef(ind[:, a], ind[:, b])[0, 1]
        assert abs(r) <= 4 / np.sqrt(N)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_resample_changes_exactly_origin_values(d):
    m = ModelSpec.uniform(d)
    omega = sample_configuration(m, Window(2, d), SampleSeed(1))
    star = resample_origin(omega, SampleSeed(2))
    assert int(np.sum(omega.values != star.values)) == 2 ** d
