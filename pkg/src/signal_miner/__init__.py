"""Mine stock buy/hold/sell signals from social-media posts and backtest them."""

__version__ = "0.1.0"
