"""Structural causal model simulator with intervention support.

Each node is assigned a mechanism over its graph parents plus additive
exogenous noise. Sampling walks the graph in topological order, and the
noise stream of every node is derived from (seed, node index), so
intervening on one node leaves the exogenous draws of all others
untouched and aligned with the observational run.

Mechanism catalog (value = intercept + f(parents) + noise):

* ``linear``       f = sum_p coef[p] * x_p
* ``quadratic``    f = sum_p coef[p] * x_p ** 2
* ``exp_linear``   f = exp(sum_p coef[p] * x_p)

Noise is ``gaussian`` (mean 0, sd = scale) or ``uniform`` (on
[-scale, +scale]).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping

import numpy as np
import yaml

from netcausal.dataset import Dataset, VariableMeta
from netcausal.graph import Dag

MECHANISM_FORMS = ("linear", "quadratic", "exp_linear")
NOISE_DISTS = ("gaussian", "uniform")


@dataclass(frozen=True)
class Noise:
    """Exogenous noise distribution of one node."""

    dist: str = "gaussian"
    scale: float = 1.0

    def __post_init__(self):
        if self.dist not in NOISE_DISTS:
            raise ValueError(f"unknown noise distribution {self.dist!r}")
        if self.scale < 0:
            raise ValueError("noise scale must be nonnegative")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.scale == 0.0:
            return np.zeros(n)
        if self.dist == "gaussian":
            return rng.normal(0.0, self.scale, size=n)
        return rng.uniform(-self.scale, self.scale, size=n)


@dataclass(frozen=True)
class Mechanism:
    """How a node is computed from its parents."""

    form: str = "linear"
    intercept: float = 0.0
    coefficients: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.form not in MECHANISM_FORMS:
            raise ValueError(f"unknown mechanism form {self.form!r}")

    def evaluate(self, parent_columns: Mapping[str, np.ndarray], n: int) -> np.ndarray:
        combo = np.zeros(n)
        for name, coef in self.coefficients.items():
            col = parent_columns[name]
            if self.form == "quadratic":
                combo = combo + coef * col**2
            else:
                combo = combo + coef * col
        if self.form == "exp_linear":
            combo = np.exp(combo)
        return self.intercept + combo


@dataclass(frozen=True)
class ScmSpec:
    """Graph, mechanisms, noise, and seed of one simulated system."""

    graph: Dag
    mechanisms: Mapping[str, Mechanism]
    noise: Mapping[str, Noise]
    seed: int = 0

    def __post_init__(self):
        for v in self.graph.nodes:
            if v not in self.mechanisms:
                raise ValueError(f"node {v!r} has no mechanism")
            if v not in self.noise:
                raise ValueError(f"node {v!r} has no noise distribution")
            extra = set(self.mechanisms[v].coefficients) - self.graph.parents(v)
            if extra:
                raise ValueError(
                    f"mechanism of {v!r} references non-parents {sorted(extra)}")


def _node_rng(spec: ScmSpec, node: str, noise_seeds: Mapping[str, int] | None):
    """Generator for one node's noise stream, derived from (seed, index)."""
    if noise_seeds is not None and node in noise_seeds:
        return np.random.default_rng(np.random.SeedSequence(noise_seeds[node]))
    idx = spec.graph.index(node)
    return np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(idx,)))


def _sample(spec: ScmSpec, n: int, interventions: Mapping[str, float],
            noise_seeds: Mapping[str, int] | None) -> Dataset:
    if n < 1:
        raise ValueError("sample count must be >= 1")
    columns: dict[str, np.ndarray] = {}
    for node in spec.graph.topological_order():
        if node in interventions:
            columns[node] = np.full(n, float(interventions[node]))
            continue
        rng = _node_rng(spec, node, noise_seeds)
        parent_cols = {p: columns[p] for p in spec.graph.parents(node)}
        value = spec.mechanisms[node].evaluate(parent_cols, n)
        columns[node] = value + spec.noise[node].sample(rng, n)
    schema = tuple(VariableMeta(name=v) for v in spec.graph.nodes)
    return Dataset(schema, columns)


def generate_scm(spec: ScmSpec, n: int,
                 noise_seeds: Mapping[str, int] | None = None) -> Dataset:
    """Draw ``n`` observational samples; deterministic given the seed.

    ``noise_seeds`` reseeds the exogenous stream of individual nodes,
    leaving all other streams untouched (used to probe which columns a
    node's draw can influence).
    """
    return _sample(spec, n, interventions={}, noise_seeds=noise_seeds)


def intervene_scm(spec: ScmSpec, target: str, value: float, n: int) -> Dataset:
    """Sample from the mutilated model where ``target`` is held fixed.

    The target's mechanism is replaced by the constant and its incoming
    edges are irrelevant; every downstream mechanism and noise stream is
    unchanged.
    """
    if target not in spec.graph.nodes:
        raise KeyError(f"unknown intervention target {target!r}")
    return _sample(spec, n, interventions={target: value}, noise_seeds=None)


# ---------------------------------------------------------------------------
# Declarative spec files
# ---------------------------------------------------------------------------
#
# YAML layout (node order in the file fixes the node index used for the
# per-node noise streams):
#
#   seed: 7
#   nodes:
#     - name: X
#       parents: [Z]
#       mechanism: linear          # linear | quadratic | exp_linear
#       intercept: 0.0
#       coefficients: {Z: 1.0}
#       noise: {dist: gaussian, scale: 0.5}


def scm_spec_from_dict(doc: dict) -> ScmSpec:
    """Build a spec from a parsed key/value tree (see module docstring)."""
    if "nodes" not in doc:
        raise ValueError("spec document has no 'nodes' list")
    seed = int(doc.get("seed", 0))
    names = []
    edges = []
    mechanisms = {}
    noise = {}
    for entry in doc["nodes"]:
        name = entry["name"]
        names.append(name)
        parents = entry.get("parents", []) or []
        for p in parents:
            edges.append((p, name))
        coeffs = entry.get("coefficients", {}) or {}
        mechanisms[name] = Mechanism(
            form=entry.get("mechanism", "linear"),
            intercept=float(entry.get("intercept", 0.0)),
            coefficients={k: float(v) for k, v in coeffs.items()},
        )
        noise_doc = entry.get("noise", {}) or {}
        noise[name] = Noise(
            dist=noise_doc.get("dist", "gaussian"),
            scale=float(noise_doc.get("scale", 1.0)),
        )
    graph = Dag(names, edges)
    return ScmSpec(graph=graph, mechanisms=mechanisms, noise=noise, seed=seed)


def load_scm_spec(path) -> ScmSpec:
    """Load a spec from a YAML (or JSON) document."""
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")
    return scm_spec_from_dict(doc)


def bundled_spec_path(name: str):
    """Filesystem path of a spec shipped with the package (e.g. 'ftp_like')."""
    ref = resources.files("netcausal").joinpath("specs", f"{name}.yaml")
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled spec named {name!r}")
    return ref
