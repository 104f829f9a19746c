"""
End-to-end fits on the toy world. Slow: run with `pytest -m slow`.
"""
import numpy as np
import pytest

from src.evaluation.heldout import heldout_basket_loglik
from src.evaluation.metrics import rank_complements, rank_exchangeable
from src.evaluation.summary import summarize
from src.inference.config import OptimizerConfig
from src.inference.trainer import fit
from src.ingestion.splits import split_dataset
from src.model.config import ModelConfig
from src.model.utility import choice_distribution
from src.simulation.toy_world import (
    PREFERENCE_ITEMS,
    SEGMENT_ITEMS,
    ToyWorldConfig,
    generate_toy_dataset,
    scenario_trip,
)

pytestmark = pytest.mark.slow

PARTNERS = {
    "hot_dogs": "hot_dog_buns",
    "hot_dog_buns": "hot_dogs",
    "taco_shells": "taco_seasoning",
    "taco_seasoning": "taco_shells",
}


@pytest.fixture(scope="module")
def fitted():
    world = ToyWorldConfig(rng_seed=0)
    catalog, train, test = generate_toy_dataset(world)
    split = split_dataset(train, seed=0, test_weeks=0)
    opt = OptimizerConfig(batch_trips=100, batch_negatives=8, max_iterations=8000, check_every=500,
                          validation_trips=500, threads=4, rng_seed=0)
    results = {}
    for think_ahead in (False, True):
        config = ModelConfig(k_items=8, k_price=2, use_season=False, think_ahead=think_ahead)
        v, _ = fit(catalog, split.train, split.validation, config, opt)
        results[think_ahead] = (config, summarize(v))
    return world, catalog, test, results


def _segment_partner(item_id):
    for items in SEGMENT_ITEMS.values():
        if item_id in items:
            return next(other for other in items if other != item_id)
    raise AssertionError(f"{item_id} belongs to no segment")


def test_think_ahead_scores_better_on_intervention_trips(fitted):
    _, catalog, test, results = fitted

    scores = {
        think_ahead: heldout_basket_loglik(summary, config, catalog, test, "trip").mean
        for think_ahead, (config, summary) in results.items()
    }

    assert scores[True] - scores[False] >= 0.2
    for score in scores.values():
        assert -3.5 <= score <= -1.5


def test_new_parent_first_choice(fitted):
    world, catalog, _, results = fitted
    trip = scenario_trip(catalog, world, "new_parent_000", ["coffee", "taco_shells"])
    seasoning = catalog.item_index("taco_seasoning")

    probs = {
        think_ahead: choice_distribution(summary.state, config, catalog, trip, [])
        for think_ahead, (config, summary) in results.items()
    }

    for p in probs.values():
        assert catalog.items[int(np.argmax(p[:-1]))] == "diapers"
        assert p[catalog.item_index("ramen")] + p[catalog.item_index("candy")] < 0.01
    assert probs[True][seasoning] < 0.12 < probs[False][seasoning]


def test_pair_items_are_each_others_top_complement(fitted):
    _, catalog, _, results = fitted
    _, summary = results[True]

    for item_id, partner in PARTNERS.items():
        top = rank_complements(summary, catalog, catalog.item_index(item_id), 1)
        assert catalog.items[top[0][0]] == partner


def test_segment_items_are_most_exchangeable(fitted):
    _, catalog, _, results = fitted
    config, summary = results[True]

    for item_id in PREFERENCE_ITEMS:
        top = rank_exchangeable(summary, config, catalog, catalog.item_index(item_id), 1)
        assert catalog.items[top[0][0]] == _segment_partner(item_id)
