import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy import stats
from scipy.special import log_expit

from src.exceptions import DomainError
from src.inference.config import OptimizerConfig
from src.inference.objective import (
    Minibatch,
    TripSample,
    evaluate_f,
    exact_bound_objective,
    full_minibatch,
    likelihood_bound,
    one_vs_each_step_bound,
    sample_minibatch,
    step_alternatives,
    trip_bound,
    validation_bound,
)
from src.inference.variational import init_variational_state, sample_latents
from src.model.latent import GAMMA_LATENTS, active_latents, trip_features
from src.model.utility import choice_distribution, full_utility
from tests.factories import make_catalog, make_trip, random_state, small_config


def _make_problem(think_ahead=False, seed=0):
    catalog = make_catalog(n_items=3, mean_price=[1.2, 0.8, 1.1, 1.0])
    config = small_config(think_ahead=think_ahead)
    trips = [
        make_trip(catalog, [0, 2], user=0, absolute_week=3, prices=[1.0, 1.0, 1.3, 1.0]),
        make_trip(catalog, [1], user=1, absolute_week=10, prices=[1.4, 0.7, 1.0, 1.0], trip_id=1),
    ]
    rng = np.random.default_rng(seed)
    v = init_variational_state(config, catalog, OptimizerConfig(init_std=0.5), rng)
    state, _ = sample_latents(v, rng)
    features = [trip_features(catalog, t) for t in trips]
    return catalog, config, trips, features, v, state


def _independent_objective(v, state, config, catalog, trips):
    prior_std = {"mu": config.prior_std_season, "delta": config.prior_std_season}
    value = 0.0
    for latent in active_latents(config):
        x = getattr(state, latent)
        if latent in GAMMA_LATENTS:
            value += stats.gamma.logpdf(x, a=config.gamma_prior_shape, scale=1.0 / config.gamma_prior_rate).sum()
            shape, mean = v.get(latent, "shape"), v.get(latent, "mean")
            value -= stats.gamma.logpdf(x, a=shape, scale=mean / shape).sum()
        else:
            value += stats.norm.logpdf(x, 0.0, prior_std.get(latent, config.prior_std)).sum()
            value -= stats.norm.logpdf(x, v.get(latent, "mean"), v.get(latent, "std")).sum()

    for trip in trips:
        orderings = list(itertools.permutations(trip.purchases))
        for perm in orderings:
            order = list(perm) + [catalog.checkout]
            for i, target in enumerate(order):
                prefix = order[:i]
                u_target = full_utility(state, config, catalog, trip, target, prefix)
                for other in range(catalog.n_items):
                    if other in prefix or other == target:
                        continue
                    u_other = full_utility(state, config, catalog, trip, other, prefix)
                    value += log_expit(u_target - u_other) / len(orderings)
    return value


def test_bound_is_exact_for_two_candidates():
    catalog = make_catalog(n_items=1)
    config = small_config()
    state = random_state(config, catalog, seed=1)
    trip = make_trip(catalog, [0])

    bound = one_vs_each_step_bound(state, config, catalog, trip, 0, [catalog.checkout])

    exact = math.log(choice_distribution(state, config, catalog, trip, [])[0])
    assert bound == pytest.approx(exact, abs=1e-12)


def test_bound_at_equal_utilities_is_minus_log_two():
    catalog = make_catalog(n_items=1)
    config = small_config(use_preferences=False, use_price=False, use_season=False)
    state = random_state(config, catalog).replace(lam=np.zeros(2))
    trip = make_trip(catalog, [0])

    assert one_vs_each_step_bound(state, config, catalog, trip, 0, [catalog.checkout]) == pytest.approx(-math.log(2.0))


@pytest.mark.parametrize("think_ahead", [False, True])
@pytest.mark.parametrize("seed", range(50))
def test_full_bound_lies_below_exact_log_probability(seed, think_ahead):
    catalog = make_catalog(n_items=5)
    config = small_config(think_ahead=think_ahead)
    state = random_state(config, catalog, seed=seed, scale=1.5)
    rng = np.random.default_rng(seed)
    purchases = [int(c) for c in rng.choice(5, size=3, replace=False)]
    trip = make_trip(catalog, purchases, user=seed % 2)
    features = trip_features(catalog, trip)

    for position in range(len(trip.items)):
        negatives = step_alternatives(features, trip.items, position)
        bound = one_vs_each_step_bound(state, config, catalog, trip, position, negatives)
        prefix = list(trip.items[:position])
        exact = math.log(choice_distribution(state, config, catalog, trip, prefix)[trip.items[position]])
        assert bound <= exact + 1e-12


def test_empty_negatives_with_alternatives_is_an_error():
    catalog = make_catalog()
    config = small_config()
    state = random_state(config, catalog)
    trip = make_trip(catalog, [0])

    with pytest.raises(DomainError):
        one_vs_each_step_bound(state, config, catalog, trip, 0, [])
    with pytest.raises(DomainError):
        one_vs_each_step_bound(state, config, catalog, trip, 1, [0])


@pytest.mark.parametrize("think_ahead", [False, True])
def test_exact_objective_matches_independent_recomputation(think_ahead):
    catalog, config, trips, features, v, state = _make_problem(think_ahead=think_ahead)

    value, _ = exact_bound_objective(v, state, config, features)

    expected = _independent_objective(v, state, config, catalog, trips)
    assert value == pytest.approx(expected, abs=1e-10)


def test_empty_minibatch_leaves_prior_minus_entropy_term():
    catalog, config, trips, features, v, state = _make_problem()

    value, grads = evaluate_f(v, state, config, [], Minibatch(samples=[]))

    expected = _independent_objective(v, state, config, catalog, [])
    assert value == pytest.approx(expected, abs=1e-10)
    assert set(grads) == set(active_latents(config))


@pytest.mark.parametrize("think_ahead", [False, True])
def test_latent_gradient_matches_finite_differences(think_ahead):
    catalog, config, trips, features, v, state = _make_problem(think_ahead=think_ahead, seed=3)
    # keep the positive latents away from zero so central differences stay accurate
    state = state.replace(gamma=state.gamma + 0.3, beta=state.beta + 0.3)
    opt = OptimizerConfig(batch_trips=2, batch_negatives=2)
    minibatch = sample_minibatch(features, opt, np.random.default_rng(5))

    _, grads = evaluate_f(v, state, config, features, minibatch)

    h = 1e-6
    for latent in active_latents(config):
        base = getattr(state, latent)
        numeric = np.zeros_like(base)
        for index in np.ndindex(base.shape):
            up, down = base.copy(), base.copy()
            up[index] += h
            down[index] -= h
            f_up, _ = evaluate_f(v, state.replace(**{latent: up}), config, features, minibatch)
            f_down, _ = evaluate_f(v, state.replace(**{latent: down}), config, features, minibatch)
            numeric[index] = (f_up - f_down) / (2 * h)
        np.testing.assert_allclose(grads[latent], numeric, rtol=1e-4, atol=1e-5, err_msg=latent)


def _trip_expectation(state, config, feat, weight):
    """Mean bound of one trip over every ordering and every single-negative choice per step."""
    trip = feat.trip
    orders = [perm + (trip.items[-1],) for perm in itertools.permutations(trip.purchases)]
    total, count = 0.0, 0
    for order in orders:
        per_step = [step_alternatives(feat, order, p) for p in range(len(order))]
        for picks in itertools.product(*[list(alts) for alts in per_step]):
            negatives = [np.array([c]) for c in picks]
            total += trip_bound(state, config, feat, TripSample(0, order, negatives, weight))
            count += 1
    return total / count


def test_subsampled_bound_is_unbiased():
    catalog = make_catalog(n_items=4)
    config = small_config(think_ahead=True)
    state = random_state(config, catalog, seed=4)
    trips = [
        make_trip(catalog, [0, 3], user=0),
        make_trip(catalog, [2], user=1, trip_id=1),
        make_trip(catalog, [1, 2], user=1, trip_id=2),
    ]
    features = [trip_features(catalog, t) for t in trips]
    batch = 2
    weight = len(trips) / batch

    expectations = [_trip_expectation(state, config, feat, weight) for feat in features]
    subsets = list(itertools.combinations(range(len(trips)), batch))
    averaged = np.mean([sum(expectations[t] for t in subset) for subset in subsets])

    full, _ = likelihood_bound(state, config, features, full_minibatch(features, cap=8))
    assert averaged == pytest.approx(full, abs=1e-8)


def test_sample_minibatch_respects_the_basket():
    catalog = make_catalog(n_items=6)
    trips = [make_trip(catalog, [0, 1, 2], trip_id=t) for t in range(5)]
    features = [trip_features(catalog, t) for t in trips]
    opt = OptimizerConfig(batch_trips=3, batch_negatives=2, permutations_per_trip=2)

    minibatch = sample_minibatch(features, opt, np.random.default_rng(0))

    assert len(minibatch.samples) == 6
    for sample in minibatch.samples:
        assert sample.weight == pytest.approx(5 / 3 / 2)
        assert sample.order[-1] == catalog.checkout
        assert sorted(sample.order[:-1]) == [0, 1, 2]
        for position, negatives in enumerate(sample.negatives):
            assert len(negatives) == min(2, catalog.n_items - position - 1)
            assert not set(negatives.tolist()) & set(sample.order[:position + 1])


def test_likelihood_bound_does_not_depend_on_threads():
    catalog = make_catalog(n_items=5)
    config = small_config(think_ahead=True)
    state = random_state(config, catalog, seed=6)
    rng = np.random.default_rng(1)
    trips = [
        make_trip(catalog, [int(c) for c in rng.choice(5, size=2, replace=False)], user=t % 2, trip_id=t)
        for t in range(40)
    ]
    features = [trip_features(catalog, t) for t in trips]
    minibatch = sample_minibatch(features, OptimizerConfig(batch_trips=40, batch_negatives=3), rng)

    value, grads = likelihood_bound(state, config, features, minibatch)
    with ThreadPoolExecutor(max_workers=4) as executor:
        threaded_value, threaded_grads = likelihood_bound(state, config, features, minibatch, executor)

    assert threaded_value == value
    for name in grads:
        np.testing.assert_array_equal(threaded_grads[name], grads[name])


def test_validation_bound_of_no_trips_is_nan():
    catalog = make_catalog()
    config = small_config()
    state = random_state(config, catalog)

    assert math.isnan(validation_bound(state, config, []))
