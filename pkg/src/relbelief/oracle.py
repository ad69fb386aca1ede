"""Exact evidence calculations on finite models, and brute-force checks of the
optimality properties of evidence-based rules.

A finite model is a likelihood matrix ``f[theta, x]``, a prior over ``theta``
and a surjective map from ``theta`` to labels ``psi``. Everything here is a
finite sum, so results are exact up to floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import DomainError
from .mc import stream

MAX_ENUMERATION_X = 16
ROUTE_TOL = 1e-10
# slack for float comparisons of sums of at most 2**16 terms
CMP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteModel:
    likelihood: np.ndarray
    prior: np.ndarray
    psi_map: np.ndarray

    def __post_init__(self):
        f = np.array(self.likelihood, dtype=float)
        pi = np.array(self.prior, dtype=float)
        psi = np.array(self.psi_map, dtype=int)
        if f.ndim != 2:
            raise ValueError("likelihood must be a theta_count x x_count matrix")
        if np.any(f < 0) or not np.allclose(f.sum(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("likelihood rows must be probability vectors")
        if pi.shape != (f.shape[0],) or np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("prior must be a probability vector over theta")
        if psi.shape != (f.shape[0],):
            raise ValueError("psi_map needs one label per theta")
        labels = np.unique(psi)
        if labels[0] != 0 or labels[-1] != labels.size - 1:
            raise ValueError("psi_map must be onto the labels 0..L-1")
        for name, a in (("likelihood", f), ("prior", pi), ("psi_map", psi)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def theta_count(self) -> int:
        return self.likelihood.shape[0]

    @property
    def x_count(self) -> int:
        return self.likelihood.shape[1]

    @property
    def psi_count(self) -> int:
        return int(self.psi_map.max()) + 1

    @property
    def psi_prior(self) -> np.ndarray:
        """Marginal prior probability of each label."""
        return np.bincount(self.psi_map, weights=self.prior, minlength=self.psi_count)

    @classmethod
    def random(cls, rng: np.random.Generator, theta_range=(2, 6), x_range=(2, 10)) -> "FiniteModel":
        """Dirichlet-uniform rows and prior with dimensions drawn from the ranges."""
        t = int(rng.integers(theta_range[0], theta_range[1] + 1))
        x = int(rng.integers(x_range[0], x_range[1] + 1))
        f = rng.dirichlet(np.ones(x), size=t)
        pi = rng.dirichlet(np.ones(t))
        n_labels = int(rng.integers(1, t + 1))
        labels = np.concatenate([np.arange(n_labels), rng.integers(0, n_labels, size=t - n_labels)])
        return cls(f, pi, rng.permutation(labels))


def prior_predictive(model: FiniteModel) -> np.ndarray:
    return model.prior @ model.likelihood


def conditional_prior_predictive(model: FiniteModel, psi: int) -> np.ndarray:
    mass = model.psi_prior[psi]
    if mass <= 0:
        raise DomainError(f"psi={psi} has zero prior probability")
    sel = model.psi_map == psi
    return model.prior[sel] @ model.likelihood[sel] / mass


def conditional_predictives(model: FiniteModel) -> np.ndarray:
    """Matrix ``m[psi, x]`` of conditional prior predictives."""
    return np.vstack([conditional_prior_predictive(model, p) for p in range(model.psi_count)])


def posterior_psi(model: FiniteModel, x: int) -> np.ndarray:
    joint = model.prior * model.likelihood[:, x]
    total = joint.sum()
    if total <= 0:
        raise DomainError(f"impossible data x={x}")
    return np.bincount(model.psi_map, weights=joint, minlength=model.psi_count) / total


def rb_exact(model: FiniteModel, psi: int, x: int) -> float:
    """RB(psi | x), computed as posterior/prior and as m(x|psi)/m(x).

    Raises ``RuntimeError`` if the two routes disagree.
    """
    m = prior_predictive(model)[x]
    if m <= 0:
        raise DomainError(f"impossible data x={x}")
    prior = model.psi_prior[psi]
    if prior <= 0:
        raise DomainError(f"psi={psi} has zero prior probability")
    by_posterior = posterior_psi(model, x)[psi] / prior
    by_predictive = conditional_prior_predictive(model, psi)[x] / m
    if not np.isclose(by_posterior, by_predictive, rtol=ROUTE_TOL, atol=ROUTE_TOL):
        raise RuntimeError(f"RB routes disagree: {by_posterior!r} vs {by_predictive!r}")
    return float(by_predictive)


def rb_matrix(model: FiniteModel) -> np.ndarray:
    """``RB[psi, x]`` for every label and every possible data value."""
    m = prior_predictive(model)
    if np.any(m <= 0):
        raise DomainError("model has impossible data values")
    return conditional_predictives(model) / m


def bias_against_exact(model: FiniteModel, psi_star: int) -> float:
    """Prior probability, given psi_star is true, of not getting evidence in its favor."""
    rb = rb_matrix(model)[psi_star]
    return float(conditional_prior_predictive(model, psi_star)[rb <= 1].sum())


def bias_favor_exact(model: FiniteModel, psi_star: int) -> float:
    """Prior probability of not getting evidence against psi_star when it is false."""
    rb = rb_matrix(model)[psi_star]
    a = rb >= 1
    m = prior_predictive(model)
    m_star = conditional_prior_predictive(model, psi_star)
    return float(m[a].sum() - m_star[a].sum() * model.psi_prior[psi_star])


def coverage_identity(model: FiniteModel) -> tuple[float, float]:
    """Both sides of E_prior[M(psi not in Pl | psi)] = 1 - E_M[posterior content of Pl].

    The left side is a double sum over labels and data; the right goes through
    the posterior of each data value.
    """
    rb = rb_matrix(model)
    mc = conditional_predictives(model)
    lhs = float(np.sum(model.psi_prior[:, None] * mc * (rb <= 1)))
    m = prior_predictive(model)
    content = np.array([posterior_psi(model, x)[rb[:, x] > 1].sum() for x in range(model.x_count)])
    rhs = float(1.0 - np.dot(m, content))
    return lhs, rhs


@dataclass(frozen=True)
class EvidenceRule:
    """Per label, the data values that do not give evidence in its favor.

    ``weights`` may be fractional (a randomized rule); 1 means the value is in
    the set.
    """

    weights: np.ndarray  # [psi, x] in [0, 1]

    @classmethod
    def principle_of_evidence(cls, model: FiniteModel) -> "EvidenceRule":
        return cls((rb_matrix(model) <= 1).astype(float))

    def region(self, psi: int) -> frozenset:
        return frozenset(int(i) for i in np.flatnonzero(self.weights[psi] == 1))

    def covers(self, x: int) -> frozenset:
        """Labels judged to have evidence in their favor at data value x."""
        return frozenset(int(p) for p in np.flatnonzero(self.weights[:, x] == 0))


@dataclass
class TheoremReport:
    theorem: str
    instances: int = 0
    violations: int = 0
    counterexamples: list = field(default_factory=list)

    def record(self, ok: bool, detail=None, keep: int = 5):
        self.instances += 1
        if not ok:
            self.violations += 1
            if len(self.counterexamples) < keep:
                self.counterexamples.append(detail)

    def merge(self, other: "TheoremReport") -> None:
        self.instances += other.instances
        self.violations += other.violations
        room = 5 - len(self.counterexamples)
        self.counterexamples.extend(other.counterexamples[: max(room, 0)])

    def as_dict(self) -> dict:
        return {"instances": self.instances, "violations": self.violations, "counterexamples": self.counterexamples}


def _all_subsets(x_count: int) -> np.ndarray:
    codes = np.arange(2**x_count)[:, None]
    return ((codes >> np.arange(x_count)) & 1).astype(bool)


def verify_theorem_1_and_4(model: FiniteModel) -> dict[str, TheoremReport]:
    """Check every subset of the sample space against the evidence sets.

    For each label: among sets D with M(D|psi) <= M(R|psi), none has larger
    prior probability than R = {RB <= 1}; among sets E with
    M(E|psi) >= M(A|psi), none has smaller prior probability than
    A = {RB >= 1}. Part (ii) of each is checked on the sets that meet the
    constraint with equality, using the probability under false labels.
    """
    if model.x_count > MAX_ENUMERATION_X:
        raise ValueError(f"x_count={model.x_count} exceeds the enumeration limit of {MAX_ENUMERATION_X}")
    subsets = _all_subsets(model.x_count).astype(float)
    m = prior_predictive(model)
    rb = rb_matrix(model)
    mc = conditional_predictives(model)
    pp = model.psi_prior
    reports = {k: TheoremReport(k) for k in ("1(i)", "1(ii)", "4(i)", "4(ii)")}
    m_d = subsets @ m
    for psi in range(model.psi_count):
        m_d_given = subsets @ mc[psi]
        false_d = m_d - pp[psi] * m_d_given
        r = rb[psi] <= 1
        a = rb[psi] >= 1
        mr, mr_given = m[r].sum(), mc[psi][r].sum()
        ma, ma_given = m[a].sum(), mc[psi][a].sum()

        ok = m_d_given <= mr_given + CMP_TOL
        worst = float(np.max(m_d[ok] - mr))
        reports["1(i)"].record(worst <= CMP_TOL, {"psi": psi, "excess": worst})
        eq = np.abs(m_d_given - mr_given) <= CMP_TOL
        worst = float(np.max(false_d[eq] - (mr - pp[psi] * mr_given)))
        reports["1(ii)"].record(worst <= CMP_TOL, {"psi": psi, "excess": worst})

        ok = m_d_given >= ma_given - CMP_TOL
        worst = float(np.max(ma - m_d[ok]))
        reports["4(i)"].record(worst <= CMP_TOL, {"psi": psi, "deficit": worst})
        eq = np.abs(m_d_given - ma_given) <= CMP_TOL
        worst = float(np.max((ma - pp[psi] * ma_given) - false_d[eq]))
        reports["4(ii)"].record(worst <= CMP_TOL, {"psi": psi, "deficit": worst})
    return reports


def random_rule(model: FiniteModel, rng: np.random.Generator, *, exact: bool = False) -> EvidenceRule:
    """Draw a rule D with M(D(psi)|psi) <= M(R(psi)|psi) for every label.

    Data values are offered in random order and kept while the constraint
    still holds. With ``exact=True`` the first value that would break the
    constraint is added fractionally so the constraint holds with equality.
    """
    mc = conditional_predictives(model)
    rb = rb_matrix(model)
    w = np.zeros((model.psi_count, model.x_count))
    for psi in range(model.psi_count):
        budget = mc[psi][rb[psi] <= 1].sum()
        used = 0.0
        for x in rng.permutation(model.x_count):
            p = mc[psi][x]
            if used + p <= budget + CMP_TOL:
                w[psi, x] = 1.0
                used += p
            elif exact and used < budget:
                w[psi, x] = (budget - used) / p
                used = budget
    return EvidenceRule(w)


def _rule_probabilities(model: FiniteModel, rule: EvidenceRule):
    """M(D(psi*)) and M(D(psi*)|psi*) for every psi*."""
    m = prior_predictive(model)
    mc = conditional_predictives(model)
    return rule.weights @ m, np.einsum("px,px->p", rule.weights, mc)


def verify_theorem_2_3_5(model: FiniteModel, trials: int, seed: int, *, model_index: int = 0) -> dict[str, TheoremReport]:
    """Theorem 3 exactly; Theorems 2 and 5 against ``trials`` random rules.

    Each rule set uses ``stream(seed, model_index, trial)``.
    """
    reports = {k: TheoremReport(k) for k in ("2(i)", "2(ii)", "3(i)", "3(ii)", "5(i)", "5(ii)")}
    pp = model.psi_prior
    mc = conditional_predictives(model)
    rb = rb_matrix(model)

    if model.psi_count > 1:
        for psi in range(model.psi_count):
            rest = 1.0 - pp[psi]
            for name, sel in (("RB>=1", rb[psi] >= 1), ("RB>1", rb[psi] > 1)):
                true_p = mc[psi][sel].sum()
                others = np.delete(np.arange(model.psi_count), psi)
                false_p = sum(pp[o] * mc[o][sel].sum() for o in others) / rest
                reports["3(i)"].record(true_p >= false_p - CMP_TOL, {"psi": psi, "set": name, "true": true_p, "false": false_p})
        # coverage of the true value vs a false value, averaged over the prior
        cover = (rb > 1).astype(float)
        true_cov = float(np.sum(pp * np.einsum("px,px->p", cover, mc)))
        false_cov = 0.0
        for s in range(model.psi_count):
            for o in range(model.psi_count):
                if o != s:
                    false_cov += pp[s] * pp[o] * (cover[s] @ mc[o]) / (1.0 - pp[s])
        reports["3(ii)"].record(true_cov >= false_cov - CMP_TOL, {"true": true_cov, "false": false_cov})

    principle = EvidenceRule.principle_of_evidence(model)
    md_r, mdg_r = _rule_probabilities(model, principle)
    miss_r = float(pp @ md_r)  # E_prior M(psi* not in Pl)
    false_miss_r = float(pp @ (md_r - pp * mdg_r))
    for t in range(trials):
        rng = stream(seed, model_index, t)
        rule = random_rule(model, rng)
        md, _ = _rule_probabilities(model, rule)
        miss = float(pp @ md)
        reports["2(i)"].record(miss <= miss_r + CMP_TOL, {"trial": t, "excess": miss - miss_r})
        reports["5(i)"].record(1.0 - miss >= 1.0 - miss_r - CMP_TOL, {"trial": t, "deficit": miss - miss_r})

        rule = random_rule(model, rng, exact=True)
        md, mdg = _rule_probabilities(model, rule)
        false_miss = float(pp @ (md - pp * mdg))
        reports["2(ii)"].record(false_miss <= false_miss_r + CMP_TOL, {"trial": t, "excess": false_miss - false_miss_r})
        # covering a false value: prior probability of the false labels minus missing them
        false_total = float(pp @ (1.0 - pp))
        reports["5(ii)"].record(
            false_total - false_miss >= false_total - false_miss_r - CMP_TOL,
            {"trial": t, "deficit": false_miss - false_miss_r},
        )
    return reports


def verify_suite(n_models: int, seed: int, theorems=(1, 2, 3, 4, 5), trials: int = 200) -> dict:
    """Run the theorem checks on ``n_models`` random models.

    Model ``i`` is drawn from ``stream(seed, i)``; reports merge in model order.
    """
    wanted = {int(t) for t in theorems}
    merged: dict[str, TheoremReport] = {}
    identity = TheoremReport("coverage-identity")
    routes = TheoremReport("savage-dickey")
    for i in range(n_models):
        model = FiniteModel.random(stream(seed, i))
        parts: dict[str, TheoremReport] = {}
        if wanted & {1, 4}:
            parts.update(verify_theorem_1_and_4(model))
        if wanted & {2, 3, 5}:
            parts.update(verify_theorem_2_3_5(model, trials, seed + 1, model_index=i))
        for key, rep in parts.items():
            if int(key[0]) in wanted:
                merged.setdefault(key, TheoremReport(key)).merge(rep)
        lhs, rhs = coverage_identity(model)
        identity.record(abs(lhs - rhs) <= ROUTE_TOL, {"model": i, "lhs": lhs, "rhs": rhs})
        for psi in range(model.psi_count):
            for x in range(model.x_count):
                try:
                    rb_exact(model, psi, x)
                    routes.record(True)
                except RuntimeError as exc:
                    routes.record(False, {"model": i, "psi": psi, "x": x, "error": str(exc)})
    out = {k: merged[k].as_dict() for k in sorted(merged)}
    out["coverage-identity"] = identity.as_dict()
    out["savage-dickey"] = routes.as_dict()
    return {"models": n_models, "seed": seed, "trials": trials, "theorems": sorted(wanted), "results": out}
