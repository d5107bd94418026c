"""Analytical score engine.

Everything here is an expectation over one observation drawn from a fixed
data-generating class: the per-sample log evidence an agent's Bayes posterior
accumulates for one class over another.  From those scores come source and
support sets, the global-identifiability check, and the network's best
rejection rate per false class.

Scores are in nats and are computed from the world's ground-truth likelihoods
plus the agent's exact Bayes posterior — never from empirical sampling (see
:func:`empirical_score` for the sampling estimator).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import AgentScope, _bayes_per_symbol
from .errors import ClassOutOfScope, NoRejector, TrueClassInScope, UnknownClass
from .world import World


def _check_class(world: World, theta: int, name: str) -> int:
    theta = int(theta)
    if not 0 <= theta < world.m:
        raise UnknownClass(f"{name} index {theta} out of range")
    return theta


def _log_evidence_terms(
    world: World, scope: AgentScope, theta_p: int, theta_q: int
) -> np.ndarray:
    """Per-symbol log evidence for θ_p over θ_q:
    ln[(p_i(θ_p|x)/p_i(θ_p)) / (p_i(θ_q|x)/p_i(θ_q))] for each x."""
    post = _bayes_per_symbol(world, scope)       # (|X|, k_i)
    pp = scope.position(theta_p)
    qq = scope.position(theta_q)
    prior = scope.prior
    return (np.log(post[:, pp]) - np.log(prior[pp])) - (
        np.log(post[:, qq]) - np.log(prior[qq])
    )


def _expected_log_evidence(
    world: World, scope: AgentScope, weight_class: int, theta_p: int, theta_q: int
) -> float:
    """Expectation of the per-sample log evidence for θ_p over θ_q when the
    data is generated by ``weight_class``.

    The expectation weights are the world's ground-truth likelihood row for
    the generating class — the actual distribution of the observations — so
    the score equals the mean drift of the belief log-ratio under those
    observations.  Swapping θ_p and θ_q negates every term, so antisymmetry
    holds exactly.
    """
    if not scope.contains(theta_p) or not scope.contains(theta_q):
        raise ClassOutOfScope(
            f"classes ({theta_p}, {theta_q}) not both in agent "
            f"{scope.agent_id}'s scope {scope.theta_i}"
        )
    weights = world.likelihoods.rows[weight_class]
    terms = _log_evidence_terms(world, scope, theta_p, theta_q)
    return float(np.dot(weights, terms))


def discriminative_score(
    world: World, scope: AgentScope, theta_p: int, theta_q: int
) -> float:
    """Expected per-sample log evidence for θ_p over θ_q under data from the
    world's true class.  Positive means the agent separates the pair in the
    direction of θ_p; antisymmetric in (θ_p, θ_q)."""
    theta_p = _check_class(world, theta_p, "theta_p")
    theta_q = _check_class(world, theta_q, "theta_q")
    return _expected_log_evidence(world, scope, world.true_class, theta_p, theta_q)


def confusion_score(
    world: World, scope: AgentScope, theta_star: int, theta_p: int, theta_q: int
) -> float:
    """Expected per-sample log evidence for θ_p over θ_q when the data comes
    from a class θ* the agent cannot identify (θ* ∉ Θ_i).

    Positive means the agent still rejects θ_q relative to θ_p despite never
    considering the generating class."""
    theta_star = _check_class(world, theta_star, "theta_star")
    theta_p = _check_class(world, theta_p, "theta_p")
    theta_q = _check_class(world, theta_q, "theta_q")
    if scope.contains(theta_star):
        raise TrueClassInScope(
            f"class {theta_star} is inside agent {scope.agent_id}'s scope; "
            "use discriminative_score"
        )
    return _expected_log_evidence(world, scope, theta_star, theta_p, theta_q)


def empirical_score(
    world: World,
    scope: AgentScope,
    theta_p: int,
    theta_q: int,
    n_samples: int,
    rng: np.random.Generator,
    weight_class: int | None = None,
) -> float:
    """Monte Carlo estimate of the expected log evidence (approximate).

    Draws ``n_samples`` observations from the generating class (default: the
    world's true class) and averages the per-sample log evidence terms.
    """
    theta_p = _check_class(world, theta_p, "theta_p")
    theta_q = _check_class(world, theta_q, "theta_q")
    if weight_class is None:
        weight_class = world.true_class
    if not scope.contains(theta_p) or not scope.contains(theta_q):
        raise ClassOutOfScope(
            f"classes ({theta_p}, {theta_q}) not both in agent "
            f"{scope.agent_id}'s scope {scope.theta_i}"
        )
    row = world.likelihoods.rows[weight_class]
    draws = rng.choice(row.size, size=int(n_samples), p=row)
    terms = _log_evidence_terms(world, scope, theta_p, theta_q)
    return float(terms[draws].mean())


# -- sets and identifiability --------------------------------------------

def source_set(
    world: World, scopes: list[AgentScope], theta_p: int, theta_q: int
) -> tuple[int, ...]:
    """Agents holding both classes with strictly positive score for the pair."""
    theta_p = _check_class(world, theta_p, "theta_p")
    theta_q = _check_class(world, theta_q, "theta_q")
    out = []
    for scope in sorted(scopes, key=lambda s: s.agent_id):
        if scope.contains(theta_p) and scope.contains(theta_q):
            if discriminative_score(world, scope, theta_p, theta_q) > 0.0:
                out.append(scope.agent_id)
    return tuple(out)


def support_set(
    world: World, scopes: list[AgentScope], theta_star: int, theta: int
) -> tuple[int, ...]:
    """Agents that cannot identify θ* but still reject θ: some other class in
    their scope carries a strictly positive confusion score against θ."""
    theta_star = _check_class(world, theta_star, "theta_star")
    theta = _check_class(world, theta, "theta")
    out = []
    for scope in sorted(scopes, key=lambda s: s.agent_id):
        if scope.contains(theta_star) or not scope.contains(theta):
            continue
        for theta_hat in scope.theta_i:
            if theta_hat == theta:
                continue
            if confusion_score(world, scope, theta_star, theta_hat, theta) > 0.0:
                out.append(scope.agent_id)
                break
    return tuple(out)


def check_global_identifiability(
    world: World, scopes: list[AgentScope]
) -> tuple[bool, list[tuple[int, int]]]:
    """Every unordered class pair must have a nonempty source set.

    A pair {θ_p, θ_q} is covered when some agent holds both classes and
    scores them apart in either direction.  Returns (ok, uncovered pairs).
    """
    witness: list[tuple[int, int]] = []
    for p in range(world.m):
        for q in range(p + 1, world.m):
            if not source_set(world, scopes, p, q) and not source_set(
                world, scopes, q, p
            ):
                witness.append((p, q))
    return (len(witness) == 0, witness)


def best_rejection_rate(
    world: World, scopes: list[AgentScope], theta_star: int, theta: int
) -> tuple[float, int]:
    """Best asymptotic rejection rate for false class θ under data from θ*.

    The maximum, over source agents for (θ*, θ) and support agents for θ, of
    the agent's relevant score: its discriminative score D_i(θ*, θ) or its
    best confusion score against θ.  Ties go to the lowest agent id.
    """
    theta_star = _check_class(world, theta_star, "theta_star")
    theta = _check_class(world, theta, "theta")
    sources = set(source_set(world, scopes, theta_star, theta))
    supports = set(support_set(world, scopes, theta_star, theta))
    best: tuple[float, int] | None = None
    for scope in sorted(scopes, key=lambda s: s.agent_id):
        aid = scope.agent_id
        if aid in sources:
            value = discriminative_score(world, scope, theta_star, theta)
        elif aid in supports:
            value = max(
                confusion_score(world, scope, theta_star, theta_hat, theta)
                for theta_hat in scope.theta_i
                if theta_hat != theta
            )
        else:
            continue
        if best is None or value > best[0]:
            best = (value, aid)
    if best is None:
        raise NoRejector(
            f"no source or support agent rejects class {theta} under "
            f"generating class {theta_star}"
        )
    return best


# -- full report ----------------------------------------------------------

@dataclass(eq=False)
class ScoreReport:
    """All scores, sets, identifiability, and best rejection rates at once."""

    world: World
    scopes: list[AgentScope]
    discriminative: dict[tuple[int, int, int], float] = field(default_factory=dict)
    confusion: dict[tuple[int, int, int], float] = field(default_factory=dict)
    source_sets: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)
    support_sets: dict[int, tuple[int, ...]] = field(default_factory=dict)
    best_rate: dict[int, tuple[float, int] | None] = field(default_factory=dict)
    identifiable: bool = False
    witness: list[tuple[int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        labels = self.world.classes.labels
        return {
            "classes": list(labels),
            "true_class": labels[self.world.true_class],
            "agents": [
                {
                    "id": s.agent_id,
                    "scope": [labels[t] for t in s.theta_i],
                    "prior": [float(p) for p in s.prior],
                }
                for s in self.scopes
            ],
            "discriminative": [
                {
                    "agent": a,
                    "theta_p": labels[p],
                    "theta_q": labels[q],
                    "nats": v,
                }
                for (a, p, q), v in sorted(self.discriminative.items())
            ],
            "confusion": [
                {
                    "agent": a,
                    "theta_p": labels[p],
                    "theta_q": labels[q],
                    "nats": v,
                }
                for (a, p, q), v in sorted(self.confusion.items())
            ],
            "source_sets": [
                {"theta_p": labels[p], "theta_q": labels[q], "agents": list(agents)}
                for (p, q), agents in sorted(self.source_sets.items())
            ],
            "support_sets": [
                {"theta": labels[t], "agents": list(agents)}
                for t, agents in sorted(self.support_sets.items())
            ],
            "best_rate": [
                {
                    "theta": labels[t],
                    "R": None if entry is None else entry[0],
                    "agent": None if entry is None else entry[1],
                }
                for t, entry in sorted(self.best_rate.items())
            ],
            "identifiable": self.identifiable,
            "witness": [[labels[p], labels[q]] for p, q in self.witness],
        }


def score_report(world: World, scopes: list[AgentScope]) -> ScoreReport:
    """Compute the complete analytical report for a world and agent set."""
    report = ScoreReport(world=world, scopes=sorted(scopes, key=lambda s: s.agent_id))
    star = world.true_class
    for scope in report.scopes:
        aid = scope.agent_id
        for p in scope.theta_i:
            for q in scope.theta_i:
                if p == q:
                    continue
                if scope.contains(star):
                    report.discriminative[(aid, p, q)] = discriminative_score(
                        world, scope, p, q
                    )
                else:
                    report.confusion[(aid, p, q)] = confusion_score(
                        world, scope, star, p, q
                    )
    for p in range(world.m):
        for q in range(world.m):
            if p != q:
                report.source_sets[(p, q)] = source_set(world, scopes, p, q)
    for theta in range(world.m):
        if theta == star:
            continue
        report.support_sets[theta] = support_set(world, scopes, star, theta)
        try:
            report.best_rate[theta] = best_rejection_rate(world, scopes, star, theta)
        except NoRejector:
            report.best_rate[theta] = None
    report.identifiable, report.witness = check_global_identifiability(world, scopes)
    return report
