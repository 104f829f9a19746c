"""
Item-pair metrics: complementarity, exchangeability and embedding similarity.
"""
import logging
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import rel_entr

from ..exceptions import DegenerateVectorError, DomainError
from ..ingestion.catalog import Catalog
from ..model.config import ModelConfig
from ..model.utility import log_choice_probabilities
from .summary import PosteriorSummary, average_features

logger = logging.getLogger(__name__)


def _check_items(catalog: Catalog, *items: int) -> None:
    for item in items:
        if item == catalog.checkout:
            raise DomainError("the checkout item has no pair metrics")
        if not 0 <= item < catalog.n_items:
            raise DomainError(f"item index {item} out of range")
    if len(items) == 2 and items[0] == items[1]:
        raise DomainError("pair metrics need two distinct items")


def complementarity(summary: PosteriorSummary, catalog: Catalog, c: int, c2: int) -> float:
    """(rho_c . alpha_c2 + rho_c2 . alpha_c) / 2"""
    _check_items(catalog, c, c2)
    rho, alpha = summary.state.rho, summary.state.alpha
    return 0.5 * float(rho[c] @ alpha[c2] + rho[c2] @ alpha[c])


def complementarity_matrix(summary: PosteriorSummary) -> np.ndarray:
    """Complementarity of every item pair, checkout row and column included."""
    products = summary.state.rho @ summary.state.alpha.T
    return 0.5 * (products + products.T)


def conditional_item_distribution(
    summary: PosteriorSummary,
    config: ModelConfig,
    catalog: Catalog,
    c: int,
) -> np.ndarray:
    """
    Next-item distribution when `c` is the only item in the basket.

    Uses the average customer, the average week and mean prices (so the price
    term vanishes). The entry of `c` is 0.
    """
    _check_items(catalog, c)
    features = average_features(catalog)
    log_probs = log_choice_probabilities(summary.average_state(), config, features, [c])
    return np.exp(log_probs)


def _support_distribution(p: np.ndarray, excluded: Sequence[int]) -> np.ndarray:
    p = p.copy()
    p[list(excluded)] = 0.0
    total = p.sum()
    return p / total if total > 0 else p


def exchangeability(
    summary: PosteriorSummary,
    config: ModelConfig,
    catalog: Catalog,
    c: int,
    c2: int,
) -> float:
    """
    Symmetrized KL divergence between the next-item distributions given c and given c2.

    Both distributions are restricted to items other than c, c2 and checkout
    and renormalized. Small values suggest substitutes.
    """
    _check_items(catalog, c, c2)
    excluded = (c, c2, catalog.checkout)
    p = _support_distribution(conditional_item_distribution(summary, config, catalog, c), excluded)
    q = _support_distribution(conditional_item_distribution(summary, config, catalog, c2), excluded)
    return 0.5 * float(np.sum(rel_entr(p, q) + rel_entr(q, p)))


def similar_items(summary: PosteriorSummary, catalog: Catalog, c: int, top_n: int) -> List[Tuple[int, float]]:
    """
    Items nearest to `c` by cosine distance of the item attributes.

    Returns:
        Up to top_n (item, distance) pairs, ascending distance, ties by index;
        `c` and checkout excluded. Items with a zero attribute vector are at distance 1.
    """
    _check_items(catalog, c)
    alpha = summary.state.alpha
    norm_c = np.linalg.norm(alpha[c])
    if norm_c == 0:
        raise DegenerateVectorError(f"item {catalog.items[c]} has a zero attribute vector")
    norms = np.linalg.norm(alpha, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosine = (alpha @ alpha[c]) / (norms * norm_c)
    distance = 1.0 - np.where(norms > 0, cosine, 0.0)
    candidates = np.array([i for i in range(catalog.n_items) if i not in (c, catalog.checkout)], dtype=np.int64)
    ranked = candidates[np.argsort(distance[candidates], kind="stable")][:top_n]
    return [(int(i), float(distance[i])) for i in ranked]


def rank_complements(summary: PosteriorSummary, catalog: Catalog, c: int, top_n: int) -> List[Tuple[int, float]]:
    """Top-n partners of `c` by descending complementarity."""
    _check_items(catalog, c)
    scores = complementarity_matrix(summary)[c]
    candidates = np.array([i for i in range(catalog.n_items) if i not in (c, catalog.checkout)], dtype=np.int64)
    ranked = candidates[np.argsort(-scores[candidates], kind="stable")][:top_n]
    return [(int(i), float(scores[i])) for i in ranked]


def rank_exchangeable(
    summary: PosteriorSummary,
    config: ModelConfig,
    catalog: Catalog,
    c: int,
    top_n: int,
) -> List[Tuple[int, float]]:
    """Top-n partners of `c` by ascending exchangeability."""
    _check_items(catalog, c)
    partners = [i for i in range(catalog.n_items) if i not in (c, catalog.checkout)]
    base = conditional_item_distribution(summary, config, catalog, c)
    scores = []
    for partner in partners:
        excluded = (c, partner, catalog.checkout)
        p = _support_distribution(base, excluded)
        q = _support_distribution(conditional_item_distribution(summary, config, catalog, partner), excluded)
        scores.append(0.5 * float(np.sum(rel_entr(p, q) + rel_entr(q, p))))
    order = np.argsort(scores, kind="stable")[:top_n]
    return [(partners[k], scores[k]) for k in order]
