"""The gamma-quantile psi = mu + sigma z_gamma of a normal model with a normal-gamma prior.

With nu = 1/sigma^2, the prior is mu | nu ~ N(mu0, tau0_sq / nu) and
nu ~ gamma(alpha0, rate beta0). The posterior of psi has no closed form, so
psi's range is cut into bins of width ``delta`` and every relative belief
ratio is a ratio of binned Monte Carlo masses.

Random streams are keyed so that each replicate can be regenerated on its
own: ``(seed, PRIOR_KEY)`` for the prior bin table, ``(seed, kind, psi_index,
replicate)`` for simulated data sets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_array, check_is_fitted

from . import _validation as v
from .evidence import EvidenceGrid
from .mc import BiasReport, MCEstimate, SamplerError, ordered_map, stream

MAX_ITERATIONS = 10**6
PRIOR_DRAWS = 10**6
POSTERIOR_DRAWS = 10**4
DEFAULT_REPS = 10**3

# stream namespaces
PRIOR_KEY = 0
AGAINST_KEY = 1
FAVOR_KEY = 2
JOINT_KEY = 3
GRID_CHECK_KEY = 4


@dataclass(frozen=True, eq=False)
class DiscretizationGrid:
    """2k+1 bins of width delta centred on the prior mean of psi."""

    delta: float
    c: float
    k: int
    psi_mean: float
    psi_sd: float
    edges: np.ndarray
    inside_fraction: float | None = None

    @property
    def n_bins(self) -> int:
        return self.edges.size - 1

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def bin_index(self, psi) -> tuple[np.ndarray, np.ndarray]:
        """Bin of each value (bins are ``(lo, hi]``) and a mask of values clipped to an end bin."""
        psi = np.asarray(psi, dtype=float)
        raw = np.searchsorted(self.edges, psi, side="left") - 1
        outside = (raw < 0) | (raw >= self.n_bins)
        return np.clip(raw, 0, self.n_bins - 1), outside


@dataclass(frozen=True)
class SufficientStat:
    xbar: float
    ss: float

    def __post_init__(self):
        if not self.ss >= 0:
            raise ValueError(f"ss must be >= 0, got {self.ss}")


class NormalGammaQuantile(BaseEstimator):
    """Evidence about psi = mu + sigma z_gamma; ``beta0`` is a rate."""

    def __init__(self, mu0=0.0, tau0_sq=1.0, alpha0=2.0, beta0=1.0, n=10, gamma=0.95):
        self.mu0 = mu0
        self.tau0_sq = tau0_sq
        self.alpha0 = alpha0
        self.beta0 = beta0
        self.n = n
        self.gamma = gamma

    # ---- parameters -------------------------------------------------------
    def _p(self):
        return (
            v.real(self.mu0, "mu0"),
            v.positive(self.tau0_sq, "tau0_sq"),
            v.positive(self.alpha0, "alpha0"),
            v.positive(self.beta0, "beta0"),
            v.count(self.n, "n", min_val=2),
            v.open_unit(self.gamma, "gamma"),
        )

    @property
    def z(self) -> float:
        return float(stats.norm.ppf(v.open_unit(self.gamma, "gamma")))

    # ---- prior ------------------------------------------------------------
    def psi_moments(self) -> tuple[float, float]:
        """Prior mean and variance of psi."""
        mu0, t2, a0, b0, _, _ = self._p()
        if a0 <= 1:
            raise v.DomainError("the prior variance of psi needs alpha0 > 1")
        z = self.z
        mean = mu0 + np.sqrt(b0) * np.exp(gammaln(a0 - 0.5) - gammaln(a0)) * z
        # E(psi^2) = mu0^2 + 2 mu0 z E(sigma) + (z^2 + tau0^2) E(sigma^2)
        second = mu0**2 + 2 * mu0 * (mean - mu0) + (z * z + t2) * b0 / (a0 - 1)
        return float(mean), float(second - mean**2)

    def sample_prior(self, rng, size):
        """Joint prior draws of (mu, nu)."""
        mu0, t2, a0, b0, _, _ = self._p()
        nu = rng.gamma(a0, 1 / b0, size)
        mu = rng.normal(mu0, np.sqrt(t2 / nu))
        return mu, nu

    def sample_prior_psi(self, rng, size):
        mu, nu = self.sample_prior(rng, size)
        return mu + self.z / np.sqrt(nu)

    def build_grid(self, delta=0.1, c=5.0, *, n_check=10**5, seed=0) -> DiscretizationGrid:
        """Bins of width ``delta`` out to about ``c`` prior SDs of psi on each side.

        ``n_check`` prior draws (0 to skip) estimate the share of prior
        probability that the bins cover.
        """
        delta = v.positive(delta, "delta")
        c = v.positive(c, "c")
        mean, var = self.psi_moments()
        sd = np.sqrt(var)
        k = int(np.ceil(c * sd / delta - 1e-9))
        edges = mean + delta * np.arange(-k - 1, k + 1)
        inside = None
        if n_check:
            psi = self.sample_prior_psi(stream(seed, GRID_CHECK_KEY), int(n_check))
            inside = float(np.mean((psi > edges[0]) & (psi <= edges[-1])))
        edges.setflags(write=False)
        return DiscretizationGrid(delta, c, k, mean, float(sd), edges, inside)

    def prior_bin_probs(self, grid: DiscretizationGrid, *, n_draws=PRIOR_DRAWS, seed=0) -> np.ndarray:
        """Prior mass of each bin by simulation; draws beyond the ends count in the end bins."""
        psi = self.sample_prior_psi(stream(seed, PRIOR_KEY), int(n_draws))
        idx, outside = grid.bin_index(psi)
        if outside.any():
            warnings.warn(f"{int(outside.sum())} of {psi.size} prior draws fell outside the grid and were assigned to an end bin", stacklevel=2)
        return np.bincount(idx, minlength=grid.n_bins) / psi.size

    # ---- conditional prior given psi --------------------------------------
    def sample_nu_given_psi(self, psi, rng, size=None, *, batch=256, max_iterations=MAX_ITERATIONS):
        """Rejection draws of nu given psi; returns ``(nu, iterations)``.

        Proposals are nu ~ gamma(alpha0 + 1/2, rate beta0), accepted with
        probability exp(-nu (psi - mu0 - z / sqrt(nu))^2 / (2 tau0_sq)).
        ``iterations`` counts proposals up to and including each acceptance.
        Proposals are generated in batches but consumed in order, so the
        result matches a one-at-a-time loop over the same random numbers.
        """
        mu0, t2, a0, b0, _, _ = self._p()
        z = self.z
        m = 1 if size is None else int(size)
        out = np.empty(m)
        iters = np.empty(m, dtype=np.int64)
        filled = 0
        used = 0  # proposals consumed since the last acceptance
        while filled < m:
            prop = rng.gamma(a0 + 0.5, 1 / b0, batch)
            u = rng.uniform(size=batch)
            ok = np.flatnonzero(np.log(u) <= -prop * (psi - mu0 - z / np.sqrt(prop)) ** 2 / (2 * t2))
            ok = ok[: m - filled]
            if ok.size:
                gaps = np.diff(np.concatenate(([-1], ok)))
                gaps[0] += used
                if np.any(gaps > max_iterations):
                    raise SamplerError(f"rejection sampler for psi={psi} needed more than {max_iterations} proposals; use an importance-sampling fallback")
                out[filled : filled + ok.size] = prop[ok]
                iters[filled : filled + ok.size] = gaps
                filled += ok.size
                used = batch - 1 - ok[-1]
            else:
                used += batch
                if used > max_iterations:
                    raise SamplerError(f"rejection sampler for psi={psi} needed more than {max_iterations} proposals; use an importance-sampling fallback")
            batch = min(batch * 2, 1 << 20)
        if size is None:
            return float(out[0]), int(iters[0])
        return out, iters

    def nu_given_psi_density(self, psi):
        """Unnormalized conditional prior density of nu given psi."""
        mu0, t2, a0, b0, _, _ = self._p()
        z = self.z

        def f(nu):
            nu = np.asarray(nu, dtype=float)
            return nu ** (a0 - 0.5) * np.exp(-b0 * nu - nu * (psi - mu0 - z / np.sqrt(nu)) ** 2 / (2 * t2))

        return f

    def sample_T_given_psi(self, psi, rng, size=None):
        """Sufficient statistics (xbar, ss) drawn from the prior predictive given psi."""
        *_, n, _ = self._p()
        nu, _ = self.sample_nu_given_psi(psi, rng, 1 if size is None else size)
        ss = rng.chisquare(n - 1, nu.shape) / nu
        xbar = rng.normal(psi - self.z / np.sqrt(nu), 1 / np.sqrt(n * nu))
        if size is None:
            return SufficientStat(float(xbar[0]), float(ss[0]))
        return xbar, ss

    # ---- posterior --------------------------------------------------------
    def _posterior_hyper(self, xbar, ss):
        mu0, t2, a0, b0, n, _ = self._p()
        kappa = n + 1 / t2
        m0x = (n * xbar + mu0 / t2) / kappa
        b0x = b0 + ss / 2 + n * (xbar - mu0) ** 2 / (2 * (n * t2 + 1))
        return m0x, kappa, a0 + n / 2, b0x

    def sample_posterior_psi(self, xbar, ss, rng, size=POSTERIOR_DRAWS):
        m0x, kappa, shape, rate = self._posterior_hyper(xbar, ss)
        nu = rng.gamma(shape, 1 / rate, size)
        mu = rng.normal(m0x, 1 / np.sqrt(kappa * nu))
        return mu + self.z / np.sqrt(nu)

    def _posterior_counts(self, grid, prior_probs, xbar, ss, rng, posterior_draws):
        psi = self.sample_posterior_psi(xbar, ss, rng, posterior_draws)
        idx, _ = grid.bin_index(psi)
        counts = np.bincount(idx, minlength=grid.n_bins).astype(float)
        null = prior_probs <= 0
        dropped = counts[null].sum()
        counts[null] = 0.0
        return counts, dropped

    def rb_grid_given_T(self, grid, T: SufficientStat, prior_probs, *, posterior_draws=POSTERIOR_DRAWS, rng=None, seed=0) -> EvidenceGrid:
        """Binned prior and posterior masses of psi given the statistic ``T``.

        Posterior draws landing in bins with no prior mass are dropped, with a
        warning, and the remaining masses renormalized.
        """
        rng = stream(seed) if rng is None else rng
        prior_probs = np.asarray(prior_probs, dtype=float)
        counts, dropped = self._posterior_counts(grid, prior_probs, T.xbar, T.ss, rng, int(posterior_draws))
        if dropped:
            warnings.warn(f"{int(dropped)} posterior draws fell in bins without prior mass and were excluded", stacklevel=2)
        return EvidenceGrid(grid.edges, prior_probs / prior_probs.sum(), counts / counts.sum())

    def _rb_at_bin(self, grid, prior_probs, j, xbar, ss, rng, posterior_draws):
        counts, _ = self._posterior_counts(grid, prior_probs, xbar, ss, rng, posterior_draws)
        return (counts[j] / counts.sum()) / prior_probs[j]

    # ---- bias by simulation -----------------------------------------------
    def _event_fraction(self, grid, prior_probs, j, psi_true, reps, seed, key, favor, posterior_draws):
        hits = 0
        for r in range(reps):
            rng = stream(seed, *key, r)
            nu, _ = self.sample_nu_given_psi(psi_true, rng, 1)
            *_, n, _ = self._p()
            ss = rng.chisquare(n - 1) / nu[0]
            xbar = rng.normal(psi_true - self.z / np.sqrt(nu[0]), 1 / np.sqrt(n * nu[0]))
            rb = self._rb_at_bin(grid, prior_probs, j, xbar, ss, rng, posterior_draws)
            hits += (rb >= 1) if favor else (rb <= 1)
        return hits

    def _check_bin(self, grid, prior_probs, j):
        if not 0 <= j < grid.n_bins:
            raise IndexError(f"bin {j} outside 0..{grid.n_bins - 1}")
        if prior_probs[j] <= 0:
            raise v.DomainError("RB undefined on prior-null value")

    def bias_against_mc(self, grid, prior_probs, j, *, reps=DEFAULT_REPS, seed=0, posterior_draws=POSTERIOR_DRAWS) -> BiasReport:
        """Share of data sets drawn given psi = centre of bin ``j`` whose RB for bin ``j`` is <= 1."""
        self._check_bin(grid, prior_probs, j)
        if reps < 1:
            raise ValueError("reps must be >= 1")
        hits = self._event_fraction(grid, prior_probs, j, grid.centers[j], reps, seed, (AGAINST_KEY, j), False, posterior_draws)
        est = MCEstimate.from_counts(hits, reps, seed, 1)
        return BiasReport(est.mean, "monte-carlo", est.stderr, reps, {"bin": j, "psi": float(grid.centers[j])})

    def bias_favor_mc(self, grid, prior_probs, j, delta, *, reps=DEFAULT_REPS, seed=0, posterior_draws=POSTERIOR_DRAWS) -> BiasReport:
        """Larger, over psi = centre -/+ delta, of the share of data sets whose RB for bin ``j`` is >= 1."""
        self._check_bin(grid, prior_probs, j)
        delta = v.positive(delta, "delta")
        best = None
        for side, shift in enumerate((-delta, delta)):
            hits = self._event_fraction(grid, prior_probs, j, grid.centers[j] + shift, reps, seed, (FAVOR_KEY, j, side), True, posterior_draws)
            est = MCEstimate.from_counts(hits, reps, seed, 1)
            if best is None or est.mean > best[0].mean:
                best = (est, shift)
        est, shift = best
        return BiasReport(est.mean, "monte-carlo", est.stderr, reps, {"bin": j, "psi": float(grid.centers[j]), "shift": shift})

    def frequentist_bins(self, grid, *, stride=5, width=3.0) -> np.ndarray:
        """Every ``stride``-th bin whose centre is within ``width`` prior SDs of the prior mean."""
        near = np.flatnonzero(np.abs(grid.centers - grid.psi_mean) <= width * grid.psi_sd)
        return near[::stride]

    def _curve(self, kind, grid, prior_probs, bins, reps, seed, posterior_draws, n_jobs, delta=None):
        def one(i):
            j = int(bins[i])
            if kind == "against":
                return self.bias_against_mc(grid, prior_probs, j, reps=reps, seed=seed, posterior_draws=posterior_draws)
            return self.bias_favor_mc(grid, prior_probs, j, delta, reps=reps, seed=seed, posterior_draws=posterior_draws)

        return ordered_map(one, len(bins), n_jobs)

    def bayes_bias_against_mc(self, grid, prior_probs, *, reps=5000, seed=0, posterior_draws=POSTERIOR_DRAWS) -> BiasReport:
        """Prior-average bias against, from joint prior draws of (mu, nu, data)."""
        *_, n, _ = self._p()
        prior_probs = np.asarray(prior_probs, dtype=float)
        hits = 0
        for r in range(reps):
            rng = stream(seed, JOINT_KEY, r)
            mu, nu = self.sample_prior(rng, 1)
            j = int(grid.bin_index(mu + self.z / np.sqrt(nu))[0][0])
            x = rng.normal(mu[0], 1 / np.sqrt(nu[0]), n)
            xbar = x.mean()
            ss = float(((x - xbar) ** 2).sum())
            hits += self._rb_at_bin(grid, prior_probs, j, xbar, ss, rng, posterior_draws) <= 1
        est = MCEstimate.from_counts(hits, reps, seed, 1)
        return BiasReport(est.mean, "monte-carlo", est.stderr, reps, {"average": "prior"})

    def coverage(self, *, delta=0.1, c=5.0, reps=DEFAULT_REPS, bayes_reps=5000, seed=0, posterior_draws=POSTERIOR_DRAWS, prior_draws=PRIOR_DRAWS, n_jobs=1):
        """(frequentist, Bayesian) coverage of the plausible region for psi.

        Frequentist coverage is one minus the largest bias against over the
        bins from ``frequentist_bins``; Bayesian coverage is one minus the
        prior-average bias against.
        """
        grid = self.build_grid(delta, c, n_check=0)
        prior_probs = self.prior_bin_probs(grid, n_draws=prior_draws, seed=seed)
        bins = self.frequentist_bins(grid)
        curve = self._curve("against", grid, prior_probs, bins, reps, seed, posterior_draws, n_jobs)
        worst = max(curve, key=lambda b: b.value)
        avg = self.bayes_bias_against_mc(grid, prior_probs, reps=bayes_reps, seed=seed, posterior_draws=posterior_draws)
        return CoverageReport(1 - worst.value, 1 - avg.value, worst, avg, tuple(curve))

    def avg_bias_favor_mc(self, delta, *, grid_delta=0.1, c=5.0, reps=200, seed=0, posterior_draws=POSTERIOR_DRAWS, prior_draws=PRIOR_DRAWS, n_jobs=1, bins=None) -> BiasReport:
        """Prior-weighted average of the bias in favor over the grid bins.

        Every bin with prior mass is evaluated unless ``bins`` restricts them;
        weights are the simulated prior bin masses.
        """
        grid = self.build_grid(grid_delta, c, n_check=0)
        prior_probs = self.prior_bin_probs(grid, n_draws=prior_draws, seed=seed)
        if bins is None:
            bins = np.flatnonzero(prior_probs > 0)
        bins = np.asarray(bins)
        curve = self._curve("favor", grid, prior_probs, bins, reps, seed, posterior_draws, n_jobs, delta)
        vals = np.array([b.value for b in curve])
        w = prior_probs[bins] / prior_probs[bins].sum()
        se = float(np.sqrt(np.sum(w**2 * np.array([b.stderr for b in curve]) ** 2)))
        return BiasReport(float(w @ vals), "monte-carlo", se, reps * len(bins), {"bins": len(bins), "curve": vals})

    # ---- data -------------------------------------------------------------
    def fit(self, X, y=None):
        x = check_array(X, ensure_2d=False, dtype=float).ravel()
        if x.size < 2:
            raise ValueError("need at least two observations")
        self.n_obs_ = int(x.size)
        self.T_ = SufficientStat(float(x.mean()), float(((x - x.mean()) ** 2).sum()))
        return self

    def evidence_grid(self, *, delta=0.1, c=5.0, seed=0, posterior_draws=POSTERIOR_DRAWS, prior_draws=PRIOR_DRAWS) -> EvidenceGrid:
        """Binned evidence about psi for the fitted data."""
        check_is_fitted(self, "T_")
        model = clone(self).set_params(n=self.n_obs_)
        grid = model.build_grid(delta, c, n_check=0)
        prior_probs = model.prior_bin_probs(grid, n_draws=prior_draws, seed=seed)
        return model.rb_grid_given_T(grid, self.T_, prior_probs, posterior_draws=posterior_draws, seed=seed)


@dataclass(frozen=True)
class CoverageReport:
    frequentist: float
    bayesian: float
    worst: BiasReport
    average: BiasReport
    curve: tuple

    def __iter__(self):
        return iter((self.frequentist, self.bayesian))
