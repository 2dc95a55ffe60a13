"""Shared test fixtures: hand-built networks, a random-network generator and
an independent full-joint enumeration oracle.

The oracle builds the complete joint tensor directly from CPT lookups over
index grids; it shares no code with the variable-elimination engine, so
agreement between the two is a real cross-check.
"""

from __future__ import annotations

import numpy as np

from riskbn.core import Cpt, DagStructure, Network, VariableSpec, build_network


def chain_network() -> Network:
    """A -> B with P(A=1)=0.3, P(B=1|A=0)=0.2, P(B=1|A=1)=0.9."""
    schema = [VariableSpec("A", ("0", "1")), VariableSpec("B", ("0", "1"))]
    dag = DagStructure(("A", "B"), (("A", "B"),))
    cpts = [
        Cpt("A", (), [[0.7, 0.3]]),
        Cpt("B", ("A",), [[0.8, 0.2], [0.1, 0.9]]),
    ]
    return build_network(schema, dag, cpts)


def copy_network(n_states: int = 2) -> Network:
    """S -> T where T deterministically copies S; S uniform."""
    states = tuple(f"s{i}" for i in range(n_states))
    schema = [VariableSpec("S", states), VariableSpec("T", states)]
    dag = DagStructure(("S", "T"), (("S", "T"),))
    cpts = [
        Cpt("S", (), [[1.0 / n_states] * n_states]),
        Cpt("T", ("S",), np.eye(n_states)),
    ]
    return build_network(schema, dag, cpts)


def random_network(rng: np.random.Generator, max_vars: int = 10,
                   max_states: int = 4, allow_zeros: bool = False) -> Network:
    n_vars = int(rng.integers(3, max_vars + 1))
    names = [f"V{i}" for i in range(n_vars)]
    cards = rng.integers(2, max_states + 1, size=n_vars)
    schema = [
        VariableSpec(names[i], tuple(f"s{j}" for j in range(cards[i])))
        for i in range(n_vars)
    ]
    edges = []
    for j in range(1, n_vars):
        k = int(rng.integers(0, min(j, 3) + 1))
        parents = rng.choice(j, size=k, replace=False)
        for p in sorted(parents):
            edges.append((names[p], names[j]))
    dag = DagStructure(tuple(names), tuple(edges))

    parent_map = {c: [] for c in names}
    for p, c in edges:
        parent_map[c].append(p)
    cpts = []
    for j, name in enumerate(names):
        n_rows = int(np.prod([cards[names.index(p)] for p in parent_map[name]])) \
            if parent_map[name] else 1
        rows = rng.dirichlet(np.full(cards[j], 0.8), size=n_rows)
        if allow_zeros and rng.random() < 0.5:
            for r in range(n_rows):
                if rng.random() < 0.3 and cards[j] > 2:
                    rows[r, int(rng.integers(cards[j]))] = 0.0
                    rows[r] /= rows[r].sum()
        cpts.append(Cpt(name, tuple(parent_map[name]), rows))
    return build_network(schema, dag, cpts)


class JointOracle:
    """Brute-force joint tensor over every variable, for cross-checking."""

    def __init__(self, network: Network):
        self.network = network
        self.variables = network.variables
        self.axis = {v: i for i, v in enumerate(self.variables)}
        cards = [network.cardinality(v) for v in self.variables]
        grids = np.indices(cards, dtype=np.int32)
        joint = np.ones(cards)
        for name in self.variables:
            parents = network.parents(name)
            row = np.zeros(cards, dtype=np.int64)
            stride = 1
            for p in reversed(parents):
                row += grids[self.axis[p]] * stride
                stride *= network.cardinality(p)
            joint = joint * network.cpts[name].rows[row, grids[self.axis[name]]]
        self.joint = joint

    def _slice(self, evidence: dict[str, str]):
        idx = [slice(None)] * len(self.variables)
        for name, state in evidence.items():
            idx[self.axis[name]] = self.network.state_index(name, state)
        return self.joint[tuple(idx)]

    def evidence_probability(self, evidence: dict[str, str]) -> float:
        return float(self._slice(evidence).sum())

    def posterior(self, target: str, evidence: dict[str, str]) -> np.ndarray | None:
        """Normalized conditional, or None when the evidence is impossible."""
        sub = self._slice(evidence)
        remaining = [v for v in self.variables if v not in evidence]
        t_axis = remaining.index(target)
        other = tuple(i for i in range(len(remaining)) if i != t_axis)
        vector = sub.sum(axis=other) if other else sub
        total = vector.sum()
        if total <= 0:
            return None
        return vector / total

    def joint_probability(self, assignment: dict[str, str]) -> float:
        return float(self._slice(assignment))


def random_evidence(rng: np.random.Generator, network: Network,
                    exclude: tuple[str, ...] = (), max_vars: int = 3) -> dict[str, str]:
    pool = [v for v in network.variables if v not in exclude]
    k = int(rng.integers(0, min(len(pool), max_vars) + 1))
    chosen = rng.choice(len(pool), size=k, replace=False)
    out = {}
    for i in chosen:
        spec = network.spec(pool[i])
        out[pool[i]] = spec.states[int(rng.integers(spec.cardinality))]
    return out
