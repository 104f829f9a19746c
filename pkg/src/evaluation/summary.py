"""
Point summary of a fitted posterior.
"""
from dataclasses import dataclass

import numpy as np

from ..config import WEEKS_PER_YEAR
from ..inference.variational import VariationalState
from ..model.latent import LatentState, TripFeatures
from ..ingestion.catalog import Catalog, Trip


@dataclass(frozen=True)
class PosteriorSummary:
    """
    Variational means of every latent plus the average customer and week.

    Attributes:
        state: Latents at their variational means (gamma latents at their mean parameter)
        theta_bar: Average user preference vector
        gamma_bar: Average user price sensitivity vector
        delta_bar: Average week vector
    """
    state: LatentState
    theta_bar: np.ndarray
    gamma_bar: np.ndarray
    delta_bar: np.ndarray

    def average_state(self) -> LatentState:
        """Latents with a single average user (row 0) and the average week in every week row."""
        return self.state.replace(
            theta=self.theta_bar[None, :],
            gamma=self.gamma_bar[None, :],
            delta=np.tile(self.delta_bar, (WEEKS_PER_YEAR, 1)),
        )


def summarize(v: VariationalState) -> PosteriorSummary:
    state = v.mean_latents()
    return PosteriorSummary(
        state=state,
        theta_bar=state.theta.mean(axis=0),
        gamma_bar=state.gamma.mean(axis=0),
        delta_bar=state.delta.mean(axis=0),
    )


def average_features(catalog: Catalog) -> TripFeatures:
    """Features of a trip by the average user at mean prices with every item offered."""
    trip = Trip(
        trip_id=-1,
        user=0,
        week=1,
        absolute_week=1,
        prices=np.asarray(catalog.mean_price, dtype=float),
        items=(catalog.checkout,),
    )
    return TripFeatures(
        trip=trip,
        user=0,
        week_row=0,
        log_price=np.zeros(catalog.n_items),
        available=np.ones(catalog.n_items, dtype=bool),
    )
