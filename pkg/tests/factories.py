"""
Small hand-built catalogs, trips and latent states shared by the tests.
"""
import numpy as np

from src.config import CHECKOUT_ID
from src.ingestion.catalog import Catalog, Trip, calendar_week
from src.model.config import ModelConfig
from src.model.latent import LatentState, latent_shapes, resolve_item_groups


def make_catalog(n_items=3, n_users=2, mean_price=None):
    """Catalog of items i0, i1, ... plus checkout with unit mean prices."""
    items = tuple(f"i{c}" for c in range(n_items)) + (CHECKOUT_ID,)
    users = tuple(f"u{u}" for u in range(n_users))
    if mean_price is None:
        mean_price = np.ones(n_items + 1)
    mean_price = np.asarray(mean_price, dtype=float).copy()
    return Catalog(
        items=items,
        users=users,
        mean_price=mean_price,
        monthly_mean_price=mean_price[:, None].copy(),
    )


def make_trip(catalog, purchases, user=0, absolute_week=1, prices=None, trip_id=0):
    """Trip with the given purchases (checkout appended) and unit prices unless given."""
    if prices is None:
        prices = np.ones(catalog.n_items)
    prices = np.asarray(prices, dtype=float).copy()
    prices[catalog.checkout] = 1.0
    return Trip(
        trip_id=trip_id,
        user=user,
        week=calendar_week(absolute_week),
        absolute_week=absolute_week,
        prices=prices,
        items=tuple(purchases) + (catalog.checkout,),
    )


def small_config(**overrides):
    settings = dict(k_items=2, k_price=2, k_season=2, use_season=True)
    settings.update(overrides)
    return ModelConfig(**settings).validate()


def random_state(config, catalog, seed=0, scale=0.7):
    """LatentState with Gaussian latents ~ N(0, scale^2) and gamma latents ~ Exp(0.5)."""
    rng = np.random.default_rng(seed)
    item_group, n_groups = resolve_item_groups(config, catalog)
    shapes = latent_shapes(config, catalog.n_items, catalog.n_users, n_groups)
    values = {}
    for name, shape in shapes.items():
        if name in ("gamma", "beta"):
            values[name] = rng.exponential(0.5, size=shape)
        else:
            values[name] = rng.normal(0.0, scale, size=shape)
    return LatentState(item_group=item_group, **values)
