"""Bernoulli sampling with a beta prior: exact bias curves by finite summation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln, xlog1py, xlogy
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import _validation as v
from .evidence import Verdict

DEFAULT_GRID = 2001


@dataclass(frozen=True)
class BiasCurve:
    """A bias curve over a theta grid, with its maximum and prior average."""

    theta: np.ndarray
    values: np.ndarray
    theta_max: float
    max: float
    average: float
    one_sided: np.ndarray | None = None  # grid points using only one of theta +/- delta


def _descending_sum(terms: np.ndarray) -> np.ndarray:
    """Row sums with terms added largest first."""
    return np.sort(terms, axis=-1)[..., ::-1].sum(axis=-1)


class BetaBinomial(BaseEstimator):
    """Evidence about a success probability theta ~ beta(alpha0, beta0).

    The count of successes in ``n`` trials is sufficient, so every bias is a
    sum over k = 0..n of binomial probabilities.
    """

    def __init__(self, n=10, alpha0=1.0, beta0=1.0):
        self.n = n
        self.alpha0 = alpha0
        self.beta0 = beta0

    def _params(self, n=None):
        return v.count(self.n if n is None else n, "n"), v.positive(self.alpha0, "alpha0"), v.positive(self.beta0, "beta0")

    def fit(self, X, y=None):
        x = check_array(X, ensure_2d=False, dtype=float).ravel()
        if x.size == 0 or np.any((x != 0) & (x != 1)):
            raise ValueError("expected a non-empty sequence of 0/1 outcomes")
        self.k_ = int(x.sum())
        self.n_obs_ = int(x.size)
        self.estimate_ = self.k_ / self.n_obs_
        return self

    def log_rb(self, k, theta, n=None):
        """log RB(theta | k successes); -inf at theta in {0, 1} unless k sits there."""
        n, a, b = self._params(n)
        k = np.asarray(k, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if np.any((k < 0) | (k > n)):
            raise ValueError(f"k must lie in 0..{n}")
        if np.any((theta < 0) | (theta > 1)):
            raise ValueError("theta must lie in [0, 1]")
        const = gammaln(a + b + n) - gammaln(a + k) - gammaln(b + n - k) + gammaln(a) + gammaln(b) - gammaln(a + b)
        return const + xlogy(k, theta) + xlog1py(n - k, -theta)

    def relative_belief(self, theta, k=None):
        if k is None:
            check_is_fitted(self, "k_")
            return np.exp(self.log_rb(self.k_, theta, self.n_obs_))
        return np.exp(self.log_rb(k, theta))

    def predict(self, theta):
        check_is_fitted(self, "k_")
        lrb = np.atleast_1d(self.log_rb(self.k_, theta, self.n_obs_))
        return np.where(lrb > 0, Verdict.IN_FAVOR.value, np.where(lrb < 0, Verdict.AGAINST.value, Verdict.NO_EVIDENCE.value)).astype(object)

    def _event_prob(self, theta, true_theta, favor: bool, n=None):
        """P_{true_theta}(RB(theta | K) <= 1), or >= 1 when ``favor``."""
        n, _, _ = self._params(n)
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        true_theta = np.broadcast_to(np.asarray(true_theta, dtype=float), theta.shape)
        k = np.arange(n + 1)
        lrb = self.log_rb(k[None, :], theta[:, None], n)
        event = lrb >= 0 if favor else lrb <= 0
        pmf = np.exp(stats.binom.logpmf(k[None, :], n, true_theta[:, None]))
        return _descending_sum(np.where(event, pmf, 0.0))

    def bias_against(self, theta, n=None):
        """M(RB(theta | K) <= 1 | theta), exact."""
        theta = np.asarray(theta, dtype=float)
        out = self._event_prob(theta, theta, favor=False, n=n)
        return out if theta.ndim else float(out[0])

    def bias_favor(self, theta, delta, n=None):
        """max over theta +/- delta of M(RB(theta | K) >= 1 | .).

        Where theta - delta < 0 or theta + delta > 1 only the side inside
        [0, 1] is used; see ``bias_favor_curve`` for the flag.
        """
        values, _ = self._bias_favor(theta, delta, n)
        return values if np.ndim(theta) else float(values[0])

    def _bias_favor(self, theta, delta, n=None):
        delta = v.open_unit(delta, "delta")
        if delta >= 0.5:
            raise ValueError("delta must be < 0.5")
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        low_ok = theta - delta >= -1e-12
        high_ok = theta + delta <= 1 + 1e-12
        lo = np.where(low_ok, self._event_prob(theta, np.clip(theta - delta, 0, 1), True, n), 0.0)
        hi = np.where(high_ok, self._event_prob(theta, np.clip(theta + delta, 0, 1), True, n), 0.0)
        return np.maximum(lo, hi), ~(low_ok & high_ok)

    @staticmethod
    def interior_grid(size: int = DEFAULT_GRID) -> np.ndarray:
        return np.linspace(0.0, 1.0, size + 2)[1:-1]

    def _prior_pdf(self, theta):
        _, a, b = self._params()
        return stats.beta.pdf(theta, a, b)

    def bias_against_curve(self, grid: int = DEFAULT_GRID, n=None) -> BiasCurve:
        """Bias against on the interior grid, its maximum, and its prior average."""
        theta = self.interior_grid(grid)
        vals = self.bias_against(theta, n)
        w = self._prior_pdf(theta)
        i = int(np.argmax(vals))
        avg = np.trapezoid(vals * w, theta) / np.trapezoid(w, theta)
        return BiasCurve(theta, vals, float(theta[i]), float(vals[i]), float(avg))

    def bias_against_summary(self, grid: int = DEFAULT_GRID, n=None):
        c = self.bias_against_curve(grid, n)
        return c.max, c.average

    def bias_favor_curve(self, delta, grid: int = DEFAULT_GRID, n=None) -> BiasCurve:
        """Bias in favor on the interior grid.

        The maximum is taken over grid points in [delta, 1 - delta], where both
        theta +/- delta are parameter values. The average is the prior integral
        over that same range, with the tails contributing nothing.
        """
        theta = self.interior_grid(grid)
        vals, one_sided = self._bias_favor(theta, delta, n)
        ok = ~one_sided
        if not ok.any():
            raise ValueError("no grid point lies in [delta, 1 - delta]")
        w = self._prior_pdf(theta)
        t_ok = theta[ok]
        i = int(np.argmax(vals[ok]))
        # prior integral over [delta, 1 - delta], scaled to the grid's total prior mass
        avg = np.trapezoid(vals[ok] * w[ok], t_ok) / np.trapezoid(w, theta)
        return BiasCurve(theta, vals, float(t_ok[i]), float(vals[ok][i]), float(avg), one_sided)

    def bias_favor_summary(self, delta, grid: int = DEFAULT_GRID, n=None):
        c = self.bias_favor_curve(delta, grid, n)
        return c.max, c.average

    def plausible_set(self, k=None, grid: int = 10_000):
        """Grid points with RB(theta | k) > 1."""
        theta = self.interior_grid(grid)
        return theta[self.relative_belief(theta, k) > 1]
