"""
Evaluation module - held-out likelihoods, item-pair metrics and reports.
"""

__all__ = [
    "PosteriorSummary",
    "summarize",
    "EvaluationResult",
    "heldout_conditional_loglik",
    "heldout_basket_loglik",
    "complementarity",
    "conditional_item_distribution",
    "exchangeability",
    "similar_items",
    "rank_complements",
    "rank_exchangeable",
    "evaluation_table",
    "export_item_vectors",
]


def __getattr__(name):
    if name in {"PosteriorSummary", "summarize"}:
        from . import summary
        return getattr(summary, name)
    if name in {"EvaluationResult", "heldout_conditional_loglik", "heldout_basket_loglik"}:
        from . import heldout
        return getattr(heldout, name)
    if name in {"complementarity", "conditional_item_distribution", "exchangeability",
                "similar_items", "rank_complements", "rank_exchangeable"}:
        from . import metrics
        return getattr(metrics, name)
    if name in {"evaluation_table", "export_item_vectors"}:
        from . import reports
        return getattr(reports, name)
    raise AttributeError(f"module 'src.evaluation' has no attribute {name}")
