"""Discrete Bayesian-network representation: variables, DAG, CPTs.

A :class:`Network` is immutable after construction and is the single source
of truth for every query, learning and analysis operation in the package.

Conventions fixed here and relied on everywhere else:

* Canonical variable order is schema declaration order.
* A node's CPT parents are listed in canonical order.
* CPT rows enumerate parent configurations in row-major order with the
  LAST parent's state index varying fastest.
* Probabilities are double precision; every CPT row must sum to 1 within
  ``ROW_SUM_TOL``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CycleDetected,
    MissingCpt,
    ModelSyntaxError,
    RowNotNormalized,
    ShapeMismatch,
    UnknownState,
    UnknownVariable,
)

ROW_SUM_TOL = 1e-9

VARIABLE_KINDS = ("demographic", "psychological", "game", "outcome", "meta")

#: Partial assignment of variables to state labels, used for conditioning.
Evidence = Mapping[str, str]


@dataclass(frozen=True)
class VariableSpec:
    """A categorical variable: name, ordered state labels and a kind tag."""

    name: str
    states: tuple[str, ...]
    kind: str = "demographic"

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.name:
            raise ShapeMismatch("variable name must be non-empty")
        if self.kind not in VARIABLE_KINDS:
            raise ShapeMismatch(f"unknown kind {self.kind!r} for variable '{self.name}'")
        if len(self.states) < 2:
            raise ShapeMismatch(f"variable '{self.name}' needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise ShapeMismatch(f"duplicate state labels in variable '{self.name}'")

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def state_index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise UnknownState(f"'{state}' is not a state of '{self.name}' "
                               f"(states: {', '.join(self.states)})") from None


@dataclass(frozen=True)
class DagStructure:
    """Directed acyclic graph over variable names.

    ``nodes`` keeps declaration order; ``edges`` are (parent, child) pairs.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple((p, c) for p, c in self.edges))
        declared = set(self.nodes)
        if len(declared) != len(self.nodes):
            raise ShapeMismatch("duplicate node names in DAG")
        seen = set()
        for parent, child in self.edges:
            if parent not in declared:
                raise UnknownVariable(f"edge references undeclared node '{parent}'")
            if child not in declared:
                raise UnknownVariable(f"edge references undeclared node '{child}'")
            if parent == child:
                raise ShapeMismatch(f"self-loop on '{parent}'")
            if (parent, child) in seen:
                raise ShapeMismatch(f"duplicate edge {parent} -> {child}")
            seen.add((parent, child))
        cycle = _find_cycle(self.nodes, self.edges)
        if cycle:
            raise CycleDetected(cycle)

    def parents_of(self, node: str) -> list[str]:
        return [p for p, c in self.edges if c == node]

    def children_of(self, node: str) -> list[str]:
        return [c for p, c in self.edges if p == node]


def _find_cycle(nodes: Sequence[str], edges: Iterable[tuple[str, str]]) -> list[str] | None:
    """Return one directed cycle as a node list, or None if acyclic."""
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    for p, c in edges:
        succ[p].append(c)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in nodes}
    stack: list[str] = []

    def visit(n: str) -> list[str] | None:
        color[n] = GREY
        stack.append(n)
        for m in succ[n]:
            if color[m] == GREY:
                return stack[stack.index(m):]
            if color[m] == WHITE:
                found = visit(m)
                if found:
                    return found
        stack.pop()
        color[n] = BLACK
        return None

    for n in nodes:
        if color[n] == WHITE:
            found = visit(n)
            if found:
                return found
    return None


class Cpt:
    """Conditional probability table for one variable.

    ``rows`` has one distribution over the variable's states per parent
    configuration; configurations are enumerated row-major with the last
    parent's state varying fastest.
    """

    __slots__ = ("variable", "parents", "rows")

    def __init__(self, variable: str, parents: Sequence[str], rows):
        self.variable = variable
        self.parents = tuple(parents)
        arr = np.asarray(rows, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeMismatch(f"CPT rows of '{variable}' must be a 2-D table")
        arr = arr.copy()
        arr.setflags(write=False)
        self.rows = arr

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Cpt)
            and self.variable == other.variable
            and self.parents == other.parents
            and self.rows.shape == other.rows.shape
            and np.array_equal(self.rows, other.rows)
        )

    def __repr__(self) -> str:
        return f"Cpt({self.variable!r}, parents={self.parents!r}, rows={self.rows.shape})"


@dataclass(frozen=True)
class Distribution:
    """Probability distribution over one variable's states, canonical order."""

    variable: str
    states: tuple[str, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if len(self.states) != len(self.probabilities):
            raise ShapeMismatch(f"distribution over '{self.variable}' has mismatched lengths")
        total = sum(self.probabilities)
        if not abs(total - 1.0) <= ROW_SUM_TOL:  # also rejects NaN
            raise RowNotNormalized(self.variable, 0, total)
        if not all(-ROW_SUM_TOL <= p <= 1 + ROW_SUM_TOL for p in self.probabilities):
            raise ShapeMismatch(f"distribution over '{self.variable}' has entries outside [0, 1]")

    def __getitem__(self, state: str) -> float:
        try:
            return self.probabilities[self.states.index(state)]
        except ValueError:
            raise UnknownState(f"'{state}' is not a state of '{self.variable}'") from None

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probabilities, dtype=np.float64)


class Network:
    """Validated immutable Bayesian network; build via :func:`build_network`."""

    __slots__ = ("schema", "dag", "cpts", "_index", "_spec", "_parents", "_children", "_topo")

    def __init__(self, schema: Sequence[VariableSpec], dag: DagStructure,
                 cpts: Mapping[str, Cpt], _topo: tuple[str, ...]):
        self.schema = tuple(schema)
        self.dag = dag
        self.cpts = dict(cpts)
        self._index = {v.name: i for i, v in enumerate(self.schema)}
        self._spec = {v.name: v for v in self.schema}
        self._parents = {v.name: self.cpts[v.name].parents for v in self.schema}
        children: dict[str, list[str]] = {v.name: [] for v in self.schema}
        for p, c in dag.edges:
            children[p].append(c)
        self._children = {n: tuple(sorted(cs, key=self._index.__getitem__))
                          for n, cs in children.items()}
        self._topo = _topo

    # -- lookups -------------------------------------------------------------

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.schema)

    def spec(self, name: str) -> VariableSpec:
        try:
            return self._spec[name]
        except KeyError:
            raise UnknownVariable(f"'{name}' is not a network variable") from None

    def index(self, name: str) -> int:
        self.spec(name)
        return self._index[name]

    def cardinality(self, name: str) -> int:
        return self.spec(name).cardinality

    def parents(self, name: str) -> tuple[str, ...]:
        self.spec(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self.spec(name)
        return self._children[name]

    def state_index(self, name: str, state: str) -> int:
        return self.spec(name).state_index(state)

    def row_index(self, name: str, parent_states: Mapping[str, str]) -> int:
        """Row of ``name``'s CPT selected by a full parent assignment."""
        idx = 0
        for parent in self.parents(name):
            idx = idx * self.cardinality(parent) + self.state_index(parent, parent_states[parent])
        return idx

    def check_evidence(self, evidence: Evidence) -> dict[str, int]:
        """Validate an evidence mapping, returning {variable: state index}."""
        out: dict[str, int] = {}
        for name, state in evidence.items():
            out[name] = self.state_index(name, state)
        return out

    # -- equality ------------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Network)
            and self.schema == other.schema
            and self.dag == other.dag
            and self.cpts == other.cpts
        )

    def __repr__(self) -> str:
        return f"Network({len(self.schema)} variables, {len(self.dag.edges)} edges)"


def build_network(schema: Sequence[VariableSpec], dag: DagStructure,
                  cpts: Iterable[Cpt] | Mapping[str, Cpt]) -> Network:
    """Validate and assemble a :class:`Network`.

    Checks: schema/DAG name agreement, one CPT per node, canonical parent
    order, row counts, normalization and entry bounds. Raises the relevant
    :mod:`riskbn.errors` class on the first violation found.
    """
    schema = tuple(schema)
    names = [v.name for v in schema]
    if len(set(names)) != len(names):
        raise ShapeMismatch("duplicate variable names in schema")
    for v in schema:
        if v.kind == "meta":
            raise ShapeMismatch(f"meta variable '{v.name}' cannot join the network")
    if set(dag.nodes) != set(names):
        missing = set(names) - set(dag.nodes)
        extra = set(dag.nodes) - set(names)
        raise ShapeMismatch(
            f"DAG nodes do not match schema (missing: {sorted(missing)}, extra: {sorted(extra)})"
        )

    if isinstance(cpts, Mapping):
        cpt_map = dict(cpts)
    else:
        cpt_map = {}
        for cpt in cpts:
            if cpt.variable in cpt_map:
                raise ShapeMismatch(f"two CPTs supplied for '{cpt.variable}'")
            cpt_map[cpt.variable] = cpt

    order = {n: i for i, n in enumerate(names)}
    spec_map = {v.name: v for v in schema}
    for name in names:
        cpt = cpt_map.get(name)
        if cpt is None:
            raise MissingCpt(f"no CPT for variable '{name}'")
        canonical = tuple(sorted(dag.parents_of(name), key=order.__getitem__))
        if cpt.parents != canonical:
            raise ShapeMismatch(
                f"CPT parents of '{name}' are {list(cpt.parents)}, "
                f"expected canonical order {list(canonical)}"
            )
        expected_rows = 1
        for p in canonical:
            expected_rows *= spec_map[p].cardinality
        rows = cpt.rows
        if rows.shape != (expected_rows, spec_map[name].cardinality):
            raise ShapeMismatch(
                f"CPT of '{name}' has shape {rows.shape}, "
                f"expected ({expected_rows}, {spec_map[name].cardinality})"
            )
        if not np.all((rows >= 0.0) & (rows <= 1.0)):  # also rejects NaN
            raise ShapeMismatch(f"CPT of '{name}' has entries outside [0, 1]")
        sums = rows.sum(axis=1)
        bad = np.nonzero(~(np.abs(sums - 1.0) <= ROW_SUM_TOL))[0]
        if bad.size:
            raise RowNotNormalized(name, int(bad[0]), float(sums[bad[0]]))
    extra_cpts = set(cpt_map) - set(names)
    if extra_cpts:
        raise ShapeMismatch(f"CPTs for unknown variables: {sorted(extra_cpts)}")

    topo = _topological(names, dag)
    return Network(schema, dag, cpt_map, tuple(topo))


def _topological(names: Sequence[str], dag: DagStructure) -> list[str]:
    """Kahn's algorithm; ties broken by schema declaration order."""
    order = {n: i for i, n in enumerate(names)}
    indegree = {n: 0 for n in names}
    succ: dict[str, list[str]] = {n: [] for n in names}
    for p, c in dag.edges:
        indegree[c] += 1
        succ[p].append(c)
    ready = sorted((n for n in names if indegree[n] == 0), key=order.__getitem__)
    out: list[str] = []
    while ready:
        n = ready.pop(0)
        out.append(n)
        changed = False
        for m in succ[n]:
            indegree[m] -= 1
            if indegree[m] == 0:
                ready.append(m)
                changed = True
        if changed:
            ready.sort(key=order.__getitem__)
    return out


def topological_order(network: Network) -> tuple[str, ...]:
    """Parents before children; deterministic (declaration-order tie-break)."""
    return network._topo


# --- model file format -------------------------------------------------------

def serialize_model(network: Network) -> str:
    """Render a network as the JSON model format (bit-exact probabilities)."""
    doc = {
        "variables": [
            {"name": v.name, "states": list(v.states), "kind": v.kind}
            for v in network.schema
        ],
        "edges": [[p, c] for p, c in network.dag.edges],
        "cpts": {
            name: {
                "parents": list(network.cpts[name].parents),
                "rows": [[float(x) for x in row] for row in network.cpts[name].rows],
            }
            for name in network.variables
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_model(text: str) -> Network:
    """Parse the JSON model format back into a validated :class:`Network`."""
    schema, dag, cpt_map = parse_model_parts(text)
    for name in dag.nodes:
        if name not in cpt_map:
            raise MissingCpt(f"model file has no CPT for variable '{name}'")
    return build_network(schema, dag, cpt_map)


def parse_model_parts(
    text: str,
) -> tuple[tuple[VariableSpec, ...], DagStructure, dict[str, Cpt]]:
    """Parse a model document into (schema, dag, cpts).

    CPTs may be absent or partial: callers that only need structure (e.g.
    ``fit`` with a schema/DAG override) use the parts directly.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ModelSyntaxError("model document must be a JSON object")
    for key in ("variables", "edges"):
        if key not in doc:
            raise ModelSyntaxError(f"model document missing '{key}'")

    variables = doc["variables"]
    if not isinstance(variables, list):
        raise ModelSyntaxError("'variables' must be an array")
    schema = []
    for i, entry in enumerate(variables):
        if not isinstance(entry, dict) or "name" not in entry or "states" not in entry:
            raise ModelSyntaxError(f"variable entry {i} must carry 'name' and 'states'")
        states = entry["states"]
        if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
            raise ModelSyntaxError(f"states of variable entry {i} must be an array of strings")
        schema.append(VariableSpec(str(entry["name"]), tuple(states),
                                   str(entry.get("kind", "demographic"))))
    schema = tuple(schema)

    edges = doc["edges"]
    if not isinstance(edges, list):
        raise ModelSyntaxError("'edges' must be an array")
    pairs = []
    for i, e in enumerate(edges):
        if not isinstance(e, list) or len(e) != 2:
            raise ModelSyntaxError(f"edge entry {i} must be a [parent, child] pair")
        pairs.append((str(e[0]), str(e[1])))
    dag = DagStructure(tuple(v.name for v in schema), tuple(pairs))

    cpt_map: dict[str, Cpt] = {}
    raw_cpts = doc.get("cpts", {})
    if not isinstance(raw_cpts, dict):
        raise ModelSyntaxError("'cpts' must be an object keyed by variable name")
    known = {v.name for v in schema}
    for name, entry in raw_cpts.items():
        if name not in known:
            raise ModelSyntaxError(f"CPT given for unknown variable '{name}'")
        if not isinstance(entry, dict) or "rows" not in entry:
            raise ModelSyntaxError(f"CPT of '{name}' must carry 'rows'")
        parents = entry.get("parents", [])
        if not isinstance(parents, list) or not all(isinstance(p, str) for p in parents):
            raise ModelSyntaxError(f"parents of '{name}' must be an array of names")
        for p in parents:
            if p not in known:
                raise ModelSyntaxError(f"CPT of '{name}' references unknown parent '{p}'")
        rows = entry["rows"]
        if (not isinstance(rows, list) or not rows
                or not all(isinstance(r, list) for r in rows)):
            raise ModelSyntaxError(f"rows of '{name}' must be a non-empty array of arrays")
        try:
            cpt_map[name] = Cpt(name, tuple(parents), rows)
        except (ValueError, TypeError):
            raise ModelSyntaxError(f"rows of '{name}' are not numeric") from None
    return schema, dag, cpt_map
