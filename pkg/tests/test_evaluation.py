import math

import numpy as np
import pytest

from src.exceptions import DegenerateVectorError, DomainError
from src.evaluation.heldout import (
    basket_logliks,
    bootstrap,
    conditional_logliks,
    heldout_basket_loglik,
    heldout_conditional_loglik,
)
from src.evaluation.metrics import (
    complementarity,
    complementarity_matrix,
    conditional_item_distribution,
    exchangeability,
    rank_complements,
    rank_exchangeable,
    similar_items,
)
from src.evaluation.summary import PosteriorSummary, summarize
from src.inference.config import OptimizerConfig
from src.inference.variational import init_variational_state
from src.model.utility import choice_distribution
from tests.factories import make_catalog, make_trip, random_state, small_config


def _make_summary(state):
    return PosteriorSummary(
        state=state,
        theta_bar=state.theta.mean(axis=0),
        gamma_bar=state.gamma.mean(axis=0),
        delta_bar=state.delta.mean(axis=0),
    )


def _flat_state(config, catalog):
    state = random_state(config, catalog)
    n = catalog.n_items
    return state.replace(lam=np.zeros(n), rho=np.zeros_like(state.rho), alpha=np.zeros_like(state.alpha))


def test_summarize_uses_variational_means():
    catalog = make_catalog()
    config = small_config()
    v = init_variational_state(config, catalog, OptimizerConfig(), np.random.default_rng(0))

    summary = summarize(v)

    np.testing.assert_array_equal(summary.state.rho, v.get("rho", "mean"))
    np.testing.assert_array_equal(summary.state.beta, v.get("beta", "mean"))
    np.testing.assert_allclose(summary.theta_bar, v.get("theta", "mean").mean(axis=0))
    average = summary.average_state()
    assert average.theta.shape == (1, config.k_items)
    assert average.delta.shape == (52, config.k_season)
    assert np.all(summary.gamma_bar >= 0)


def test_conditional_loglik_of_uniform_model_is_minus_log_m():
    catalog = make_catalog(n_items=3)
    config = small_config(use_preferences=False, use_price=False, use_season=False)
    summary = _make_summary(_flat_state(config, catalog))
    trip = make_trip(catalog, [0, 1])

    values = conditional_logliks(summary, config, catalog, [(trip, 0), (trip, 1)])

    # one other purchase in the basket leaves three candidates
    np.testing.assert_allclose(values, -math.log(3.0))


def test_conditional_loglik_conditions_on_the_rest_of_the_basket():
    catalog = make_catalog(n_items=4)
    config = small_config(think_ahead=True)
    state = random_state(config, catalog, seed=2)
    summary = _make_summary(state)
    trip = make_trip(catalog, [2, 0, 3], user=1, absolute_week=60)

    value = conditional_logliks(summary, config, catalog, [(trip, 0)])[0]

    expected = math.log(choice_distribution(state, config, catalog, trip, [2, 3])[0])
    assert value == pytest.approx(expected)


def test_conditional_loglik_rejects_foreign_target():
    catalog = make_catalog(n_items=3)
    config = small_config()
    summary = _make_summary(random_state(config, catalog))
    trip = make_trip(catalog, [0])

    with pytest.raises(DomainError):
        heldout_conditional_loglik(summary, config, catalog, [(trip, 2)])


def test_bootstrap_is_seeded_and_handles_empty_input():
    values = np.random.default_rng(0).normal(size=50)

    assert bootstrap(values, seed=3) == bootstrap(values, seed=3)
    assert bootstrap(values, seed=3)[0] == pytest.approx(values.mean())
    mean, std = bootstrap([], seed=3)
    assert math.isnan(mean) and math.isnan(std)

    catalog = make_catalog()
    config = small_config()
    empty = heldout_conditional_loglik(_make_summary(random_state(config, catalog)), config, catalog, [])
    assert empty.count == 0 and math.isnan(empty.mean)


def test_single_item_basket_score_equals_empty_context_conditional():
    catalog = make_catalog(n_items=3)
    config = small_config()
    summary = _make_summary(random_state(config, catalog, seed=4))
    trip = make_trip(catalog, [1])

    basket = heldout_basket_loglik(summary, config, catalog, [trip], "basket")
    conditional = heldout_conditional_loglik(summary, config, catalog, [(trip, 1)])

    assert basket.mean == pytest.approx(conditional.mean)


def test_basket_modes_score_and_skip():
    catalog = make_catalog(n_items=5)
    config = small_config(think_ahead=True)
    summary = _make_summary(random_state(config, catalog, seed=5))
    trips = [
        make_trip(catalog, [0, 1, 2, 3], trip_id=0),
        make_trip(catalog, [4, 2], trip_id=1),
        make_trip(catalog, [], trip_id=2),
    ]

    triplets = heldout_basket_loglik(summary, config, catalog, trips, "triplets")
    whole = heldout_basket_loglik(summary, config, catalog, trips, "basket")

    assert (triplets.count, triplets.skipped) == (1, 2)
    assert (whole.count, whole.skipped) == (2, 1)
    assert whole.mean <= 0.0
    with pytest.raises(DomainError):
        heldout_basket_loglik(summary, config, catalog, trips, "pairs")


def test_trip_mode_sums_the_whole_sequence_with_checkout():
    catalog = make_catalog(n_items=3)
    config = small_config(use_preferences=False, use_price=False, use_season=False)
    summary = _make_summary(_flat_state(config, catalog))
    trips = [make_trip(catalog, [0, 1], trip_id=0), make_trip(catalog, [], trip_id=1)]

    values, skipped = basket_logliks(summary, config, catalog, trips, "trip")

    # four then three then two candidates; an empty basket only chooses checkout among four
    np.testing.assert_allclose(values, [-math.log(24.0), -math.log(4.0)])
    assert skipped == 0
    per_item = heldout_basket_loglik(summary, config, catalog, trips[:1], "basket")
    assert per_item.mean == pytest.approx(-math.log(12.0) / 2)


def test_complementarity_is_symmetric_and_matches_matrix():
    catalog = make_catalog(n_items=4)
    config = small_config()
    summary = _make_summary(random_state(config, catalog, seed=6))
    matrix = complementarity_matrix(summary)

    for c in range(4):
        for c2 in range(4):
            if c != c2:
                assert complementarity(summary, catalog, c, c2) == pytest.approx(
                    complementarity(summary, catalog, c2, c)
                )
                assert matrix[c, c2] == pytest.approx(complementarity(summary, catalog, c, c2))
    with pytest.raises(DomainError):
        complementarity(summary, catalog, 0, catalog.checkout)
    with pytest.raises(DomainError):
        complementarity(summary, catalog, 1, 1)


def test_complementarity_of_zero_vectors_is_zero():
    catalog = make_catalog()
    config = small_config()
    summary = _make_summary(_flat_state(config, catalog))

    assert complementarity(summary, catalog, 0, 1) == 0.0


def test_conditional_item_distribution_is_normalized_and_excludes_the_query():
    catalog = make_catalog(n_items=4)
    config = small_config(think_ahead=True)
    summary = _make_summary(random_state(config, catalog, seed=7))

    p = conditional_item_distribution(summary, config, catalog, 2)

    assert p.sum() == pytest.approx(1.0, abs=1e-10)
    assert p[2] == 0.0


def test_without_interactions_conditionals_do_not_depend_on_the_query():
    catalog = make_catalog(n_items=4)
    config = small_config()
    state = random_state(config, catalog, seed=8)
    summary = _make_summary(state.replace(rho=np.zeros_like(state.rho)))

    assert exchangeability(summary, config, catalog, 0, 1) == pytest.approx(0.0, abs=1e-12)


def test_exchangeability_is_symmetric_and_nonnegative():
    catalog = make_catalog(n_items=5)
    config = small_config()
    summary = _make_summary(random_state(config, catalog, seed=9))

    for c, c2 in [(0, 1), (1, 3), (2, 4)]:
        forward = exchangeability(summary, config, catalog, c, c2)
        assert forward >= 0.0
        assert forward == pytest.approx(exchangeability(summary, config, catalog, c2, c))


def test_identical_items_are_fully_exchangeable_and_rank_first():
    catalog = make_catalog(n_items=5)
    config = small_config()
    state = random_state(config, catalog, seed=10)
    for name in ("rho", "alpha", "lam", "beta", "mu"):
        array = getattr(state, name).copy()
        array[1] = array[0]
        state = state.replace(**{name: array})
    summary = _make_summary(state)

    assert exchangeability(summary, config, catalog, 0, 1) == pytest.approx(0.0, abs=1e-9)
    ranked = rank_exchangeable(summary, config, catalog, 0, top_n=2)
    assert ranked[0][0] == 1
    assert len(ranked) == 2
    assert ranked[0][1] <= ranked[1][1]


def test_similar_items_by_cosine_distance():
    catalog = make_catalog(n_items=5)
    config = small_config()
    state = random_state(config, catalog, seed=11)
    alpha = state.alpha.copy()
    alpha[3] = 2.5 * alpha[0]
    summary = _make_summary(state.replace(alpha=alpha))

    ranked = similar_items(summary, catalog, 0, top_n=10)

    assert ranked[0][0] == 3
    assert ranked[0][1] == pytest.approx(0.0, abs=1e-12)
    assert len(ranked) == catalog.n_items - 2
    assert catalog.checkout not in [item for item, _ in ranked]

    rescaled = _make_summary(state.replace(alpha=3.0 * alpha))
    assert [i for i, _ in similar_items(rescaled, catalog, 0, 3)] == [i for i, _ in ranked[:3]]


def test_similar_items_of_zero_vector_is_degenerate():
    catalog = make_catalog()
    config = small_config()
    summary = _make_summary(_flat_state(config, catalog))

    with pytest.raises(DegenerateVectorError):
        similar_items(summary, catalog, 0, 2)


def test_rank_complements_descending():
    catalog = make_catalog(n_items=5)
    config = small_config()
    summary = _make_summary(random_state(config, catalog, seed=12))

    ranked = rank_complements(summary, catalog, 2, top_n=3)

    scores = [score for _, score in ranked]
    assert scores == sorted(scores, reverse=True)
    assert 2 not in [item for item, _ in ranked]
