"""Power-law fitting by log-log least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ContractViolation


@dataclass(frozen=True)
class DecayFit:
    """Fitted law ``y = amplitude * x**exponent`` over ``window``.

    ``residual`` is the largest absolute deviation of ``log y`` from the fit.
    """

    exponent: float
    amplitude: float
    window: tuple
    residual: float

    def __post_init__(self):
        lo, hi = self.window
        if not lo < hi:
            raise ContractViolation(f"fit window must satisfy lo < hi, got {self.window}")
        if not self.amplitude > 0:
            raise ContractViolation("amplitude must be positive")
        if not np.isfinite(self.residual) or self.residual < 0:
            raise ContractViolation("residual must be finite and nonnegative")

    def predict(self, x):
        return self.amplitude * np.asarray(x, dtype=float) ** self.exponent

    def describe(self):
        return (f"exponent={self.exponent:.6g} amplitude={self.amplitude:.6g} "
                f"window=[{self.window[0]:.6g},{self.window[1]:.6g}] residual={self.residual:.3g}")


class PowerLawFit(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``log y = log C + p log x``.

    Parameters
    ----------
    x_range : tuple or None
        If given, only samples with ``x_range[0] <= x <= x_range[1]`` are used.

    Attributes
    ----------
    exponent_, amplitude_, residual_ : float
    window_ : tuple
        Smallest and largest abscissa actually used.
    """

    def __init__(self, x_range=None):
        self.x_range = x_range

    def fit(self, X, y):
        x = np.asarray(X, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise ContractViolation("x and y must have the same length")
        mask = np.ones_like(x, dtype=bool)
        if self.x_range is not None:
            lo, hi = self.x_range
            mask = (x >= lo) & (x <= hi)
        x, y = x[mask], y[mask]
        if x.size < 2:
            raise ContractViolation("need at least two samples in the fit window")
        if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
            raise ContractViolation("power-law fit needs strictly positive, finite samples")
        lx, ly = np.log(x), np.log(y)
        slope, intercept = np.polyfit(lx, ly, 1)
        self.exponent_ = float(slope)
        self.amplitude_ = float(np.exp(intercept))
        self.residual_ = float(np.max(np.abs(ly - (intercept + slope * lx))))
        self.window_ = (float(x.min()), float(x.max()))
        self.n_samples_ = int(x.size)
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        return self.amplitude_ * np.asarray(X, dtype=float) ** self.exponent_

    def score(self, X, y, sample_weight=None):
        """R^2 in log-log coordinates."""
        check_is_fitted(self, "exponent_")
        lx = np.log(np.asarray(X, dtype=float).reshape(-1))
        ly = np.log(np.asarray(y, dtype=float).reshape(-1))
        pred = np.log(self.amplitude_) + self.exponent_ * lx
        ss_res = np.sum((ly - pred) ** 2)
        ss_tot = np.sum((ly - ly.mean()) ** 2)
        return float(1.0 - ss_res / ss_tot) if ss_tot > 0 else 1.0

    def to_decay_fit(self) -> DecayFit:
        check_is_fitted(self, "exponent_")
        return DecayFit(self.exponent_, self.amplitude_, self.window_, self.residual_)


def power_law_fit(x, y, x_range=None) -> DecayFit:
    return PowerLawFit(x_range=x_range).fit(x, y).to_decay_fit()
