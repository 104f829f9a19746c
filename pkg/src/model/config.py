"""
Model configuration: latent dimensions, priors and feature flags.
"""
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Optional

import pandas as pd

from ..config import EXACT_BASKET_CAP
from ..exceptions import ConfigError, ParseError


@dataclass
class ModelConfig:
    """
    Settings that define the model family.

    Attributes:
        k_items: Dimension of item attributes, interaction coefficients and user preferences
        k_price: Dimension of the price sensitivity factors
        k_season: Dimension of the seasonal factors
        use_preferences: Include the user preference term theta_u . alpha_c
        use_price: Include the price term (gamma_u . beta_c) * log normalized price
        use_season: Include the seasonal term delta_w . mu_c
        think_ahead: Add the one-step look-ahead term to every utility
        prior_std: Prior standard deviation of rho, alpha, lambda and theta
        prior_std_season: Prior standard deviation of mu and delta
        gamma_prior_shape: Shape of the gamma prior on gamma and beta
        gamma_prior_rate: Rate of the gamma prior on gamma and beta
        tie_groups: Optional item id -> group name map; tied items share beta and mu
        lookahead_top_m: Cap the non-checkout look-ahead items to the M largest by psi
        exact_basket_cap: Largest basket (checkout excluded) scored by full enumeration
    """
    k_items: int = 100
    k_price: int = 10
    k_season: int = 10
    use_preferences: bool = True
    use_price: bool = True
    use_season: bool = True
    think_ahead: bool = False
    prior_std: float = 1.0
    prior_std_season: float = 0.1
    gamma_prior_shape: float = 1.0
    gamma_prior_rate: float = 10.0
    tie_groups: Optional[Dict[str, str]] = None
    lookahead_top_m: Optional[int] = None
    exact_basket_cap: int = EXACT_BASKET_CAP

    def validate(self) -> "ModelConfig":
        for name in ("k_items", "k_price", "k_season", "exact_basket_cap"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("prior_std", "prior_std_season", "gamma_prior_shape", "gamma_prior_rate"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lookahead_top_m is not None and self.lookahead_top_m < 1:
            raise ConfigError(f"lookahead_top_m must be >= 1, got {self.lookahead_top_m}")
        return self

    def label(self) -> str:
        """Short model name, e.g. 'I+U+P+S' or 'I+U+P (think-ahead)'."""
        parts = ["I"]
        if self.use_preferences:
            parts.append("U")
        if self.use_price:
            parts.append("P")
        if self.use_season:
            parts.append("S")
        label = "+".join(parts)
        return f"{label} (think-ahead)" if self.think_ahead else label

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "ModelConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown model settings: {sorted(unknown)}")
        return cls(**data).validate()


def load_tie_groups(path: Path) -> Dict[str, str]:
    """
    Read an `item_id,group` CSV used to tie price and seasonal factors.

    Returns:
        Mapping item id -> group name
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(df.columns) != ["item_id", "group"]:
        raise ParseError(path, 1, f"bad header {list(df.columns)}: expected ['item_id', 'group']")
    duplicated = df["item_id"].duplicated()
    if duplicated.any():
        line = int(duplicated.to_numpy().argmax()) + 2
        raise ParseError(path, line, f"item {df['item_id'][duplicated].iloc[0]!r} listed twice")
    return dict(zip(df["item_id"], df["group"]))
