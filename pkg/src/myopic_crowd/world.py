"""Ground-truth generative model: classes, finite input space, likelihood table.

The world defines the class set Θ, a finite input alphabet X, and one
row-stochastic likelihood table p(x|θ).  Observations are i.i.d. draws from
the row of the true class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    RowNotStochastic,
    SymbolUnknown,
    UnknownClass,
)

#: Probability floor: entries below this are raised to it and the vector
#: renormalized, so log-domain arithmetic stays total.
EPS = 1e-12

#: Tolerance for "sums to 1" checks on probability vectors.
ROW_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


def floor_probs(v: np.ndarray) -> np.ndarray:
    """Raise entries below EPS to EPS and renormalize.

    Vectors already above the floor are returned bit-unchanged, which keeps
    recorded streams replayable exactly.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < EPS):
        v = np.maximum(v, EPS)
        v = v / v.sum()
    return v


@dataclass(frozen=True)
class ClassSet:
    """Ordered collection of class labels; position k names hypothesis θ_k."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if len(self.labels) < 2:
            raise DimensionMismatch(
                f"need at least 2 classes, got {len(self.labels)}"
            )
        if len(set(self.labels)) != len(self.labels):
            raise DimensionMismatch("class labels must be unique")

    @property
    def m(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownClass(f"unknown class label {label!r}") from None


@dataclass(frozen=True)
class InputSpace:
    """Ordered finite alphabet of observation symbols."""

    symbols: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(str(x) for x in self.symbols))
        if len(self.symbols) < 1:
            raise DimensionMismatch("input space must contain at least 1 symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise DimensionMismatch("input symbols must be unique")

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise SymbolUnknown(f"unknown input symbol {symbol!r}") from None


@dataclass(frozen=True, eq=False)
class LikelihoodTable:
    """Row-stochastic m × |X| matrix with rows[k][x] = p(x | θ_k).

    Rows must sum to 1 within ROW_TOL; entries below EPS are floored and the
    row renormalized so every stored probability is strictly positive.
    """

    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise DimensionMismatch(
                f"likelihood table must be 2-d and nonempty, got shape {rows.shape}"
            )
        if not np.all(np.isfinite(rows)) or np.any(rows < 0):
            raise RowNotStochastic("likelihood entries must be finite and >= 0")
        sums = rows.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > ROW_TOL)[0]
        if bad.size:
            raise RowNotStochastic(
                f"likelihood row {bad[0]} sums to {sums[bad[0]]!r}, expected 1"
            )
        rows = np.maximum(rows, EPS)
        rows = rows / rows.sum(axis=1, keepdims=True)
        object.__setattr__(self, "rows", _readonly(rows))

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.rows.shape[1]

    def row(self, k: int) -> np.ndarray:
        return self.rows[k]


@dataclass(frozen=True, eq=False)
class World:
    """Classes, input alphabet, likelihoods, and the data-generating class."""

    classes: ClassSet
    inputs: InputSpace
    likelihoods: LikelihoodTable
    true_class: int

    def __post_init__(self) -> None:
        if self.likelihoods.m != self.classes.m:
            raise DimensionMismatch(
                f"{self.likelihoods.m} likelihood rows for {self.classes.m} classes"
            )
        if self.likelihoods.n_symbols != self.inputs.size:
            raise DimensionMismatch(
                f"{self.likelihoods.n_symbols} likelihood columns for "
                f"{self.inputs.size} input symbols"
            )
        if not 0 <= self.true_class < self.classes.m:
            raise UnknownClass(f"true_class index {self.true_class} out of range")

    @property
    def m(self) -> int:
        return self.classes.m

    def true_row(self) -> np.ndarray:
        """Likelihood row of the data-generating class."""
        return self.likelihoods.rows[self.true_class]


def build_world(classes, inputs, likelihoods, true_class) -> World:
    """Validate and assemble a World.

    Accepts raw label/symbol sequences and raw row data in addition to the
    constructed types; ``true_class`` may be a label or an index.
    """
    if not isinstance(classes, ClassSet):
        classes = ClassSet(tuple(classes))
    if not isinstance(inputs, InputSpace):
        inputs = InputSpace(tuple(inputs))
    if not isinstance(likelihoods, LikelihoodTable):
        likelihoods = LikelihoodTable(np.asarray(likelihoods, dtype=float))
    if isinstance(true_class, str):
        true_class = classes.index(true_class)
    else:
        true_class = int(true_class)
        if not 0 <= true_class < classes.m:
            raise UnknownClass(f"true_class index {true_class} out of range")
    return World(classes, inputs, likelihoods, true_class)


def sample_observation(world: World, rng: np.random.Generator) -> str:
    """Draw one symbol from p(x | θ*); consecutive calls are independent."""
    row = world.true_row()
    idx = int(rng.choice(row.size, p=row))
    return world.inputs.symbols[idx]


# -- serialization --------------------------------------------------------

def world_to_dict(world: World) -> dict:
    return {
        "classes": list(world.classes.labels),
        "inputs": list(world.inputs.symbols),
        "likelihoods": [[float(v) for v in row] for row in world.likelihoods.rows],
        "true_class": world.classes.labels[world.true_class],
    }


def world_from_dict(doc: dict) -> World:
    if not isinstance(doc, dict):
        raise ConfigError("world definition must be a JSON object")
    missing = {"classes", "inputs", "likelihoods", "true_class"} - set(doc)
    if missing:
        raise ConfigError(f"world definition missing keys: {sorted(missing)}")
    return build_world(
        doc["classes"], doc["inputs"], doc["likelihoods"], doc["true_class"]
    )


def load_world(path) -> World:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed world file {path}: {e}") from None
    return world_from_dict(doc)


def save_world(world: World, path) -> None:
    Path(path).write_text(json.dumps(world_to_dict(world), indent=2, sort_keys=True) + "\n")
