"""Relative belief ratios, verdicts and plausible regions on discretized grids.

A grid holds prior and posterior probabilities for a partition of the range of
a parameter of interest into bins. Bins with zero prior mass carry no relative
belief ratio and are left out of every region and of the argmax.
"""

from __future__ import annotations

import csv
import enum
import io
import os
from dataclasses import dataclass

import numpy as np

from ._validation import DomainError, probability_vector

CSV_HEADER = ("bin_lo", "bin_hi", "prior_mass", "posterior_mass")


class Verdict(str, enum.Enum):
    IN_FAVOR = "in_favor"
    AGAINST = "against"
    NO_EVIDENCE = "no_evidence"


@dataclass(frozen=True)
class EvidenceVerdict:
    rb: float
    verdict: Verdict


def rb_from_masses(prior_mass: float, posterior_mass: float) -> float:
    """Ratio of posterior to prior probability of a single value."""
    if prior_mass <= 0:
        raise DomainError("RB undefined on prior-null value")
    return posterior_mass / prior_mass


def classify_evidence(rb: float, cutoff: float = 1.0) -> EvidenceVerdict:
    """Apply the principle of evidence with a sharp cutoff (no tolerance band)."""
    if rb < 0:
        raise ValueError(f"relative belief ratio must be >= 0, got {rb}")
    if rb > cutoff:
        verdict = Verdict.IN_FAVOR
    elif rb < cutoff:
        verdict = Verdict.AGAINST
    else:
        verdict = Verdict.NO_EVIDENCE
    return EvidenceVerdict(float(rb), verdict)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EvidenceGrid:
    """Prior and posterior masses over ``len(bin_edges) - 1`` bins."""

    bin_edges: np.ndarray
    prior_mass: np.ndarray
    posterior_mass: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("bin_edges needs at least two values")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin_edges must be strictly increasing")
        prior = probability_vector(self.prior_mass, "prior_mass")
        post = probability_vector(self.posterior_mass, "posterior_mass")
        if prior.size != edges.size - 1 or post.size != edges.size - 1:
            raise ValueError(f"{edges.size - 1} bins but {prior.size} prior and {post.size} posterior masses")
        if np.any(post[prior == 0] > 0):
            raise DomainError("posterior mass on a bin with zero prior mass")
        object.__setattr__(self, "bin_edges", _frozen(edges))
        object.__setattr__(self, "prior_mass", _frozen(prior))
        object.__setattr__(self, "posterior_mass", _frozen(post))

    @classmethod
    def from_counts(cls, bin_edges, prior_counts, posterior_counts) -> "EvidenceGrid":
        prior = np.asarray(prior_counts, dtype=float)
        post = np.asarray(posterior_counts, dtype=float)
        return cls(bin_edges, prior / prior.sum(), post / post.sum())

    @property
    def n_bins(self) -> int:
        return self.prior_mass.size

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def supported(self) -> np.ndarray:
        """Mask of bins with positive prior mass."""
        return self.prior_mass > 0

    @property
    def rb(self) -> np.ndarray:
        """Relative belief ratio per bin; NaN on prior-null bins."""
        out = np.full(self.n_bins, np.nan)
        s = self.supported
        out[s] = self.posterior_mass[s] / self.prior_mass[s]
        return out

    def bin_of(self, value: float) -> int:
        """Index of the bin ``(lo, hi]`` containing ``value``."""
        i = int(np.searchsorted(self.bin_edges, value, side="left")) - 1
        if i < 0 or i >= self.n_bins:
            raise ValueError(f"{value} lies outside the grid")
        return i

    def to_csv(self, path_or_buf=None) -> str | None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for lo, hi, p, q in zip(self.bin_edges[:-1], self.bin_edges[1:], self.prior_mass, self.posterior_mass):
            w.writerow([repr(float(lo)), repr(float(hi)), repr(float(p)), repr(float(q))])
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if isinstance(path_or_buf, (str, os.PathLike)):
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        else:
            path_or_buf.write(text)
        return None

    @classmethod
    def from_csv(cls, path_or_buf) -> "EvidenceGrid":
        if isinstance(path_or_buf, (str, os.PathLike)):
            with open(path_or_buf, newline="") as fh:
                rows = list(csv.reader(fh))
        else:
            rows = list(csv.reader(path_or_buf))
        if not rows or tuple(h.strip() for h in rows[0]) != CSV_HEADER:
            raise ValueError(f"expected header {','.join(CSV_HEADER)}")
        body = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        if body.ndim != 2 or body.shape[1] != 4:
            raise ValueError("each row needs four numeric fields")
        if np.any(body[1:, 0] != body[:-1, 1]):
            raise ValueError("bins must be contiguous")
        edges = np.append(body[:, 0], body[-1, 1])
        return cls(edges, body[:, 2], body[:, 3])


@dataclass(frozen=True)
class PlausibleRegion:
    member_bins: tuple[int, ...]
    posterior_content: float
    volume: float
    implausible_bins: tuple[int, ...]


def plausible_region(grid: EvidenceGrid) -> PlausibleRegion:
    """Bins with evidence in their favor, plus the implausible complement."""
    if not grid.supported.any():
        raise DomainError("all prior masses are zero")
    rb = grid.rb
    with np.errstate(invalid="ignore"):
        members = np.flatnonzero(rb > 1)
        against = np.flatnonzero(rb < 1)
    return PlausibleRegion(
        member_bins=tuple(int(i) for i in members),
        posterior_content=float(grid.posterior_mass[members].sum()),
        volume=float(grid.widths[members].sum()),
        implausible_bins=tuple(int(i) for i in against),
    )


def relative_belief_estimate(grid: EvidenceGrid) -> int:
    """Bin maximizing the relative belief ratio; ties go to the smallest index."""
    rb = grid.rb
    if not grid.supported.any():
        raise DomainError("no bin has positive prior mass")
    return int(np.nanargmax(rb))


def strength(grid: EvidenceGrid, target_bin: int) -> float:
    """Posterior probability that the true bin has RB no greater than the target's."""
    if grid.prior_mass[target_bin] <= 0:
        raise DomainError("target bin has zero prior mass")
    rb = grid.rb
    target = rb[target_bin]
    with np.errstate(invalid="ignore"):
        mask = rb <= target
    return float(grid.posterior_mass[mask].sum())
