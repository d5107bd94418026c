"""Posterior sources: per-agent classifiers over an identifiable subset of classes.

Each agent owns a scope Θ_i ⊆ Θ plus a prior over it.  A source maps an input
symbol (and round index) to a posterior vector over Θ_i.  Three kinds exist:
an exact Bayes oracle driven by the likelihood table, a noisy variant that
mixes the oracle with the uniform distribution, and a replay source that
streams pre-recorded posterior vectors from a CSV file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    ParseError,
    ReplayExhausted,
    RowNotStochastic,
    ScopeMismatch,
    UnknownClass,
)
from .world import EPS, ROW_TOL, LikelihoodTable, World, _readonly, floor_probs


@dataclass(frozen=True, eq=False)
class AgentScope:
    """An agent's identifiable class subset Θ_i, its prior, and an optional
    private likelihood table overriding the shared world's."""

    agent_id: int
    theta_i: tuple[int, ...]
    prior: np.ndarray
    likelihoods: LikelihoodTable | None = None

    def __post_init__(self) -> None:
        theta = tuple(int(t) for t in self.theta_i)
        if len(theta) == 0:
            raise ScopeMismatch("agent scope must contain at least one class")
        if len(set(theta)) != len(theta) or min(theta) < 0:
            raise ScopeMismatch(f"invalid class indices in scope: {theta}")
        object.__setattr__(self, "theta_i", theta)
        prior = np.asarray(self.prior, dtype=float)
        if prior.shape != (len(theta),):
            raise DimensionMismatch(
                f"prior has {prior.size} entries for {len(theta)} scope classes"
            )
        if not np.all(np.isfinite(prior)) or np.any(prior < 0):
            raise RowNotStochastic("prior entries must be finite and >= 0")
        if abs(prior.sum() - 1.0) > ROW_TOL:
            raise RowNotStochastic(f"prior sums to {prior.sum()!r}, expected 1")
        object.__setattr__(self, "prior", _readonly(floor_probs(prior)))
        object.__setattr__(self, "_pos", {t: j for j, t in enumerate(theta)})

    @property
    def size(self) -> int:
        return len(self.theta_i)

    def contains(self, theta: int) -> bool:
        return theta in self._pos

    def position(self, theta: int) -> int:
        """Position of a class index within the scope ordering."""
        try:
            return self._pos[theta]
        except KeyError:
            raise ScopeMismatch(
                f"class {theta} not in agent {self.agent_id}'s scope"
            ) from None

    def effective_likelihoods(self, world: World) -> LikelihoodTable:
        """This agent's likelihood table: its override, else the world's."""
        return self.likelihoods if self.likelihoods is not None else world.likelihoods


def make_scope(
    world: World,
    agent_id: int,
    classes,
    prior=None,
    likelihoods=None,
) -> AgentScope:
    """Build a validated scope against a world.

    ``classes`` may contain labels or indices; ``prior`` defaults to uniform
    over the scope; ``likelihoods`` optionally overrides the world table and
    must have the world's full dimensions.
    """
    theta = tuple(
        world.classes.index(c) if isinstance(c, str) else int(c) for c in classes
    )
    for t in theta:
        if not 0 <= t < world.m:
            raise UnknownClass(f"class index {t} out of range for agent {agent_id}")
    if prior is None:
        prior = np.full(len(theta), 1.0 / len(theta))
    if likelihoods is not None and not isinstance(likelihoods, LikelihoodTable):
        likelihoods = LikelihoodTable(np.asarray(likelihoods, dtype=float))
    if likelihoods is not None and (
        likelihoods.m != world.m or likelihoods.n_symbols != world.inputs.size
    ):
        raise DimensionMismatch(
            f"agent {agent_id} likelihood override must match the world's "
            f"{world.m} x {world.inputs.size} table"
        )
    return AgentScope(int(agent_id), theta, np.asarray(prior, dtype=float), likelihoods)


@dataclass(frozen=True, eq=False)
class PosteriorVector:
    """A posterior over one agent's scope; strictly positive and normalized."""

    scope: AgentScope
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (self.scope.size,):
            raise ScopeMismatch(
                f"posterior has {probs.size} entries for scope of size {self.scope.size}"
            )
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise RowNotStochastic("posterior entries must be finite and >= 0")
        if abs(probs.sum() - 1.0) > ROW_TOL:
            raise RowNotStochastic(f"posterior sums to {probs.sum()!r}, expected 1")
        object.__setattr__(self, "probs", _readonly(floor_probs(probs)))


def _bayes_per_symbol(world: World, scope: AgentScope) -> np.ndarray:
    """Posterior table of shape (|X|, |Θ_i|): row x is the Bayes posterior
    p_i(θ|x) ∝ p_i(x|θ)·p_i(θ), floored and normalized."""
    table = scope.effective_likelihoods(world).rows
    lik = table[list(scope.theta_i), :]          # (k_i, |X|)
    unnorm = lik * scope.prior[:, None]
    post = (unnorm / unnorm.sum(axis=0, keepdims=True)).T
    post = np.maximum(post, EPS)
    post = post / post.sum(axis=1, keepdims=True)
    return post


class BayesOracle:
    """Exact Bayes posterior source: p_i(θ|x) ∝ p_i(x|θ)·p_i(θ) over Θ_i."""

    kind = "bayes"

    def __init__(self, world: World, scope: AgentScope):
        self.world = world
        self.scope = scope
        self.per_symbol = _readonly(_bayes_per_symbol(world, scope))

    def posterior(self, x: str, t: int = 0) -> PosteriorVector:
        j = self.world.inputs.index(x)
        return PosteriorVector(self.scope, self.per_symbol[j])


class NoisySource:
    """Bayes oracle mixed with uniform: (1−γ)·p + γ·uniform, γ ∈ [0, 1)."""

    kind = "noisy"

    def __init__(self, world: World, scope: AgentScope, gamma: float):
        gamma = float(gamma)
        if not 0.0 <= gamma < 1.0:
            raise ConfigError(f"noise level gamma must be in [0, 1), got {gamma}")
        self.world = world
        self.scope = scope
        self.gamma = gamma
        base = _bayes_per_symbol(world, scope)
        mixed = (1.0 - gamma) * base + gamma / scope.size
        mixed = mixed / mixed.sum(axis=1, keepdims=True)
        self.per_symbol = _readonly(mixed)

    def posterior(self, x: str, t: int = 0) -> PosteriorVector:
        j = self.world.inputs.index(x)
        return PosteriorVector(self.scope, self.per_symbol[j])


class ReplaySource:
    """Streams recorded posterior vectors, one per round, starting at round 1.

    Unlike the oracle sources a replay source ignores the observed symbol: the
    vector for round t is whatever the recorded classifier emitted then.
    """

    kind = "replay"

    def __init__(self, scope: AgentScope, vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] != scope.size:
            raise DimensionMismatch(
                f"replay vectors must be (rounds, {scope.size}), got {vectors.shape}"
            )
        if not np.all(np.isfinite(vectors)) or np.any(vectors < 0):
            raise RowNotStochastic("replay entries must be finite and >= 0")
        sums = vectors.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > ROW_TOL)[0]
        if bad.size:
            raise RowNotStochastic(
                f"replay vector for round {bad[0] + 1} sums to {sums[bad[0]]!r}"
            )
        # Floor only rows that need it so clean recorded streams replay
        # bit-identically.
        low = np.any(vectors < EPS, axis=1)
        if np.any(low):
            vectors = vectors.copy()
            patched = np.maximum(vectors[low], EPS)
            vectors[low] = patched / patched.sum(axis=1, keepdims=True)
        self.scope = scope
        self.vectors = _readonly(vectors)

    @property
    def length(self) -> int:
        return self.vectors.shape[0]

    def posterior(self, x: str, t: int = 0) -> PosteriorVector:
        if not 1 <= t <= self.length:
            raise ReplayExhausted(
                f"replay stream for agent {self.scope.agent_id} has "
                f"{self.length} rounds, round {t} requested"
            )
        return PosteriorVector(self.scope, self.vectors[t - 1])


PosteriorSource = BayesOracle | NoisySource | ReplaySource


def posterior(source, scope: AgentScope, x: str, t: int = 0) -> PosteriorVector:
    """Evaluate a source for one round, checking it belongs to the scope."""
    own = source.scope
    if own.agent_id != scope.agent_id or own.theta_i != scope.theta_i:
        raise ScopeMismatch(
            f"source belongs to agent {own.agent_id} with scope {own.theta_i}, "
            f"not agent {scope.agent_id} with scope {scope.theta_i}"
        )
    return source.posterior(x, t)


# -- replay CSV -----------------------------------------------------------
#
# Format: header `round,agent_id,<class label>...` with one column per class
# label used by any agent; each data row fills only the labels in that
# agent's scope and leaves other cells empty.

def write_replay_csv(path, world: World, rows) -> None:
    """Write replay rows: an iterable of (round, agent_id, {label: prob})."""
    labels = list(world.classes.labels)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["round", "agent_id", *labels])
        for rnd, agent_id, probs in rows:
            cells = [repr(float(probs[lab])) if lab in probs else "" for lab in labels]
            writer.writerow([rnd, agent_id, *cells])


def load_replay_csv(path, world: World) -> dict[int, "_LabeledMatrix"]:
    """Parse a replay CSV into {agent_id: labeled (rounds × labels) matrix}.

    Cells outside an agent's scope are NaN; use
    :func:`replay_source_from_csv` to project onto a scope.
    """
    path = Path(path)
    per_agent: dict[int, dict[int, list[float]]] = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"replay file {path} is empty") from None
        if len(header) < 3 or header[0] != "round" or header[1] != "agent_id":
            raise ParseError(
                f"replay file {path} must start with header 'round,agent_id,<labels>'"
            )
        labels = header[2:]
        unknown = [lab for lab in labels if lab not in world.classes.labels]
        if unknown:
            raise ParseError(f"replay file {path} has unknown class columns {unknown}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} cells")
            try:
                rnd = int(row[0])
                agent_id = int(row[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad round or agent_id") from None
            if rnd < 1:
                raise ParseError(f"{path}:{lineno}: rounds are 1-based")
            cells = []
            for lab, cell in zip(labels, row[2:]):
                cell = cell.strip()
                if cell == "":
                    cells.append(float("nan"))
                else:
                    try:
                        cells.append(float(cell))
                    except ValueError:
                        raise ParseError(
                            f"{path}:{lineno}: bad probability {cell!r} for {lab}"
                        ) from None
            rounds = per_agent.setdefault(agent_id, {})
            if rnd in rounds:
                raise ParseError(f"{path}:{lineno}: duplicate round {rnd}")
            rounds[rnd] = cells
    out: dict[int, _LabeledMatrix] = {}
    for agent_id, rounds in per_agent.items():
        expected = set(range(1, len(rounds) + 1))
        if set(rounds) != expected:
            raise ParseError(
                f"replay file {path}: agent {agent_id} rounds are not "
                f"contiguous from 1"
            )
        mat = np.array([rounds[r] for r in range(1, len(rounds) + 1)], dtype=float)
        out[agent_id] = _LabeledMatrix(labels, mat)
    return out


class _LabeledMatrix:
    """A (rounds × labels) cell matrix with its header label order."""

    def __init__(self, labels, values):
        self.labels = list(labels)
        self.values = values


def replay_source_from_csv(path, world: World, scope: AgentScope) -> ReplaySource:
    """Build one agent's replay source from a recorded CSV stream."""
    table = load_replay_csv(path, world)
    if scope.agent_id not in table:
        raise ParseError(f"replay file {path} has no rows for agent {scope.agent_id}")
    mat = table[scope.agent_id]
    cols = []
    for t in scope.theta_i:
        lab = world.classes.labels[t]
        if lab not in mat.labels:
            raise ParseError(f"replay file {path} lacks a column for class {lab!r}")
        cols.append(mat.labels.index(lab))
    vectors = mat.values[:, cols]
    if np.any(np.isnan(vectors)):
        raise ParseError(
            f"replay file {path}: empty cells inside agent "
            f"{scope.agent_id}'s scope"
        )
    return ReplaySource(scope, vectors)
