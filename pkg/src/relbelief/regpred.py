"""Evidence about a future response y_new ~ N(w'beta, sigma^2) in normal linear regression.

The prior is conjugate: beta | nu ~ N_k(beta0, Sigma0 / nu), nu = 1/sigma^2 ~
gamma(alpha0, rate eta0). Both predictive laws of y_new are scaled Student t,
so the relative belief ratio is a ratio of two t densities; the biases are
Monte Carlo probabilities over the minimal sufficient statistic (b, s^2)
drawn given y_new.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import _validation as v
from .mc import BiasReport, MCEstimate, estimate_probability, stream

SM_TOL = 1e-10
AGAINST_KEY = 1
FAVOR_KEY = 2


class NumericError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RegressionMSS:
    """Least-squares coefficients and residual sum of squares."""

    b: np.ndarray
    s_sq: float

    def __post_init__(self):
        if not self.s_sq >= 0:
            raise ValueError(f"s_sq must be >= 0, got {self.s_sq}")


@dataclass(frozen=True)
class StudentT:
    loc: float
    scale: float
    df: float

    def logpdf(self, y):
        return stats.t.logpdf(y, self.df, self.loc, self.scale)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        return stats.t.cdf(y, self.df, self.loc, self.scale)


def sherman_morrison_inverse(Sigma0, w) -> np.ndarray:
    """(Sigma0^{-1} + w w')^{-1} = Sigma0 - Sigma0 w w' Sigma0 / (1 + w' Sigma0 w)."""
    s = Sigma0 @ w
    return Sigma0 - np.outer(s, s) / (1.0 + w @ s)


def direct_inverse(Sigma0, w) -> np.ndarray:
    """(Sigma0^{-1} + w w')^{-1} by two Cholesky solves."""
    k = len(w)
    prec = linalg.cho_solve(linalg.cho_factor(Sigma0), np.eye(k)) + np.outer(w, w)
    return linalg.cho_solve(linalg.cho_factor(prec), np.eye(k))


class RegressionPredictor(BaseEstimator):
    """Relative belief for a new response at covariates ``w``.

    ``fit(X, y=None)`` fixes the design; passing ``y`` also stores the
    observed sufficient statistic so that ``relative_belief`` and ``predict``
    can be used on data.
    """

    def __init__(self, beta0=None, Sigma0=None, alpha0=2.0, eta0=1.0, w=None):
        self.beta0 = beta0
        self.Sigma0 = Sigma0
        self.alpha0 = alpha0
        self.eta0 = eta0
        self.w = w

    # ---- set-up -----------------------------------------------------------
    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        n, k = X.shape
        if n <= k:
            raise ValueError(f"need more rows than columns, got {n}x{k}")
        beta0 = np.zeros(k) if self.beta0 is None else np.asarray(self.beta0, dtype=float).ravel()
        Sigma0 = np.eye(k) if self.Sigma0 is None else np.atleast_2d(np.asarray(self.Sigma0, dtype=float))
        w = np.ones(k) if self.w is None else np.asarray(self.w, dtype=float).ravel()
        if beta0.shape != (k,) or w.shape != (k,) or Sigma0.shape != (k, k):
            raise ValueError(f"beta0, w need length {k} and Sigma0 shape ({k}, {k})")
        if not np.allclose(Sigma0, Sigma0.T):
            raise ValueError("Sigma0 must be symmetric")
        try:
            self._sigma0_chol = linalg.cho_factor(Sigma0)
        except linalg.LinAlgError as exc:
            raise ValueError("Sigma0 must be positive definite") from exc
        _, r = np.linalg.qr(X)
        if np.min(np.abs(np.diag(r))) <= 1e-12 * np.max(np.abs(np.diag(r))):
            raise ValueError("design matrix must have full column rank")
        self.alpha0_ = v.positive(self.alpha0, "alpha0")
        self.eta0_ = v.positive(self.eta0, "eta0")
        self.X_ = X
        self.n_, self.k_ = n, k
        self.beta0_, self.Sigma0_, self.w_ = beta0, Sigma0, w
        self.xtx_ = X.T @ X
        self._r = r  # X'X = R'R
        self._prior_prec_beta0 = linalg.cho_solve(self._sigma0_chol, beta0)  # Sigma0^{-1} beta0
        self._post_chol = linalg.cho_factor(linalg.cho_solve(self._sigma0_chol, np.eye(k)) + self.xtx_)
        self._q = float(w @ Sigma0 @ w)
        self._post_q = float(w @ linalg.cho_solve(self._post_chol, w))
        if y is not None:
            self.mss_ = self.mss_from_data(y)
        return self

    def mss_from_data(self, y) -> RegressionMSS:
        check_is_fitted(self, "X_")
        y = np.asarray(y, dtype=float).ravel()
        if y.shape != (self.n_,):
            raise ValueError(f"y needs length {self.n_}")
        b, *_ = np.linalg.lstsq(self.X_, y, rcond=None)
        resid = y - self.X_ @ b
        return RegressionMSS(b, float(resid @ resid))

    def sherman_morrison_check(self) -> float:
        """Largest absolute difference between the two routes to (Sigma0^{-1} + ww')^{-1}."""
        check_is_fitted(self, "X_")
        return float(np.max(np.abs(sherman_morrison_inverse(self.Sigma0_, self.w_) - direct_inverse(self.Sigma0_, self.w_))))

    # ---- conditional prior given y_new ------------------------------------
    def eta0_given_ynew(self, y_new):
        check_is_fitted(self, "X_")
        return self.eta0_ + (self.w_ @ self.beta0_ - np.asarray(y_new, dtype=float)) ** 2 / (2 * (1 + self._q))

    def _cond_moments(self, y_new):
        s = self.Sigma0_ @ self.w_
        base = self.beta0_ + y_new * s
        mean = base - s * (self.w_ @ base) / (1 + self._q)
        cov = sherman_morrison_inverse(self.Sigma0_, self.w_)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"conditional covariance is not positive definite (condition number {np.linalg.cond(cov):.3g})") from exc
        return mean, chol

    def cond_prior_sample(self, y_new, rng, size=1):
        """Draws of (beta, nu) from their prior given y_new; beta has shape (size, k)."""
        check_is_fitted(self, "X_")
        nu = rng.gamma(self.alpha0_ + 0.5, 1 / self.eta0_given_ynew(y_new), size)
        mean, chol = self._cond_moments(float(y_new))
        beta = mean + (rng.standard_normal((size, self.k_)) @ chol.T) / np.sqrt(nu)[:, None]
        return beta, nu

    def _mss_given(self, beta, nu, rng):
        size = nu.shape[0]
        # R^{-1} z has covariance (X'X)^{-1}
        noise = linalg.solve_triangular(self._r, rng.standard_normal((self.k_, size))).T
        b = beta + noise / np.sqrt(nu)[:, None]
        s_sq = rng.chisquare(self.n_ - self.k_, size) / nu
        return b, s_sq

    def sample_mss_given_ynew(self, y_new, rng, size=1):
        """(b, s^2) drawn from the prior predictive given y_new."""
        beta, nu = self.cond_prior_sample(y_new, rng, size)
        return self._mss_given(beta, nu, rng)

    def sample_prior_ynew(self, rng, size=1):
        return self.prior_predictive().loc + self.prior_predictive().scale * rng.standard_t(2 * self.alpha0_, size)

    def sample_prior_mss(self, rng, size=1):
        """(b, s^2) from the unconditional prior predictive, straight from the prior."""
        check_is_fitted(self, "X_")
        nu = rng.gamma(self.alpha0_, 1 / self.eta0_, size)
        chol = np.linalg.cholesky(self.Sigma0_)
        beta = self.beta0_ + (rng.standard_normal((size, self.k_)) @ chol.T) / np.sqrt(nu)[:, None]
        return self._mss_given(beta, nu, rng)

    def sample_ynew_then_mss(self, rng, size=1):
        """(b, s^2) by drawing y_new from its prior predictive first."""
        y = self.sample_prior_ynew(rng, size)
        bs, ss = np.empty((size, self.k_)), np.empty(size)
        for i in range(size):
            b, s = self.sample_mss_given_ynew(y[i], rng, 1)
            bs[i], ss[i] = b[0], s[0]
        return bs, ss

    # ---- predictive densities ---------------------------------------------
    def prior_predictive(self) -> StudentT:
        check_is_fitted(self, "X_")
        scale = np.sqrt(self.eta0_ * (1 + self._q) / self.alpha0_)
        return StudentT(float(self.w_ @ self.beta0_), float(scale), 2 * self.alpha0_)

    def _posterior_parts(self, b, s_sq):
        """Vectorized posterior location and scale; b is (m, k), s_sq is (m,)."""
        b = np.atleast_2d(b)
        s_sq = np.atleast_1d(s_sq)
        xtxb = b @ self.xtx_
        rhs = self._prior_prec_beta0[None, :] + xtxb
        beta_post = linalg.cho_solve(self._post_chol, rhs.T).T
        eta = self.eta0_ + 0.5 * (
            s_sq + np.einsum("ij,ij->i", xtxb, b) + self.beta0_ @ self._prior_prec_beta0 - np.einsum("ij,ij->i", beta_post, rhs)
        )
        if np.any(eta <= 0):
            raise NumericError("posterior rate is not positive")
        loc = beta_post @ self.w_
        scale = np.sqrt(eta * (1 + self._post_q) / (self.alpha0_ + self.n_ / 2))
        return loc, scale

    def posterior_predictive(self, mss: RegressionMSS | None = None) -> StudentT:
        mss = self._mss(mss)
        loc, scale = self._posterior_parts(mss.b, mss.s_sq)
        return StudentT(float(loc[0]), float(scale[0]), 2 * self.alpha0_ + self.n_)

    def predictive_densities(self, mss: RegressionMSS | None = None):
        """(prior, posterior) predictive laws of y_new; the posterior is None without data."""
        prior = self.prior_predictive()
        if mss is None and not hasattr(self, "mss_"):
            return prior, None
        return prior, self.posterior_predictive(mss)

    def _mss(self, mss):
        if mss is None:
            check_is_fitted(self, "mss_")
            return self.mss_
        return mss

    def _log_rb(self, y_new, b, s_sq):
        loc, scale = self._posterior_parts(b, s_sq)
        prior = self.prior_predictive()
        return stats.t.logpdf(y_new, 2 * self.alpha0_ + self.n_, loc, scale) - prior.logpdf(y_new)

    def rb_pred(self, y_new, mss: RegressionMSS | None = None) -> float:
        mss = self._mss(mss)
        return float(np.exp(self._log_rb(y_new, mss.b, mss.s_sq))[0])

    def relative_belief(self, y_new, mss=None):
        mss = self._mss(mss)
        prior, post = self.prior_predictive(), self.posterior_predictive(mss)
        return np.exp(post.logpdf(y_new) - prior.logpdf(y_new))

    def predict(self, y_new, mss=None):
        rb = np.atleast_1d(self.relative_belief(y_new, mss))
        return np.where(rb > 1, "in_favor", np.where(rb < 1, "against", "no_evidence")).astype(object)

    # ---- biases -----------------------------------------------------------
    def _event_mc(self, y_event, y_true, favor, reps, seed, chunks, key, n_jobs):
        def sampler(rng, size):
            b, s = self.sample_mss_given_ynew(y_true, rng, size)
            return np.column_stack([b, s])

        def indicator(draws):
            lrb = self._log_rb(y_event, draws[:, :-1], draws[:, -1])
            return lrb >= 0 if favor else lrb <= 0

        return estimate_probability(indicator, sampler, reps, seed, chunks=chunks, n_jobs=n_jobs, key=key)

    def bias_against_pred_mc(self, y_new, *, reps=10**4, seed=0, chunks=1, n_jobs=1) -> BiasReport:
        """M(RB(y_new | b, s^2) <= 1 | y_new) by simulation."""
        check_is_fitted(self, "X_")
        est = self._event_mc(y_new, y_new, False, v.count(reps, "reps"), seed, chunks, (AGAINST_KEY,), n_jobs)
        return BiasReport(est.mean, "monte-carlo", est.stderr, reps, {"y_new": float(y_new)})

    def bias_favor_pred_mc(self, y_new, delta, *, reps=10**4, seed=0, chunks=1, n_jobs=1) -> BiasReport:
        """Larger over y_new -/+ delta of M(RB(y_new | b, s^2) >= 1 | .)."""
        check_is_fitted(self, "X_")
        delta = v.positive(delta, "delta")
        results: list[tuple[MCEstimate, float]] = []
        for side, shift in enumerate((-delta, delta)):
            est = self._event_mc(y_new, y_new + shift, True, v.count(reps, "reps"), seed, chunks, (FAVOR_KEY, side), n_jobs)
            results.append((est, shift))
        est, shift = max(results, key=lambda t: t[0].mean)
        return BiasReport(est.mean, "monte-carlo", est.stderr, reps, {"y_new": float(y_new), "shift": shift})


def default_design(n=20, k=3, seed=0) -> np.ndarray:
    """Seeded design with an intercept-free set of unit-norm columns."""
    X = stream(seed, 99).standard_normal((n, k))
    return X / np.linalg.norm(X, axis=0)
