"""Rare-event prediction from multivariate time series.

Lag patterns and warning labels, event-block cross-validation folds,
resampling, a native classifier suite and nested cross-validation.
"""

__version__ = "0.1.0"
