"""CPT estimation: closed-form Dirichlet posterior means for observed data,
and EM for networks with declared latent (unobserved) variables.

The estimator throughout is the Dirichlet posterior MEAN,
``(alpha_s + n_s) / (ess + n)`` with ``alpha_s = ess * prior_mean_s``: it is
defined for empty rows (returning exactly the prior mean) and matches the
soft-prior behaviour the analyses rely on.

EM monitors the penalized objective ``log P(data | theta) + sum alpha_s *
log theta_s``. The posterior-mean M-step is the exact maximizer of the
penalized expected complete-data objective, so this quantity never
decreases across iterations; the raw likelihood alone carries no such
guarantee under a mean (rather than mode) update.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .core import Cpt, DagStructure, Network, VariableSpec, build_network
from .data import DEFAULT_OUTCOME, Dataset
from .errors import SchemaMismatch
from .inference import evidence_probability, marginal, posterior_joint

DEFAULT_PRIOR_P = 0.1
DEFAULT_ESS = 2.0


# --- priors -------------------------------------------------------------------

@dataclass(frozen=True)
class DirichletPrior:
    """Per-variable prior mean distributions and one equivalent sample size.

    ``means[name]`` is either a 1-D distribution shared by every parent
    configuration or a full (rows, states) table. Variables without an
    entry use a uniform mean.
    """

    means: dict[str, np.ndarray] = field(default_factory=dict)
    ess: float = DEFAULT_ESS

    def __post_init__(self):
        if not self.ess > 0:
            raise SchemaMismatch("equivalent sample size must be positive")
        clean: dict[str, np.ndarray] = {}
        for name, mean in self.means.items():
            arr = np.asarray(mean, dtype=np.float64)
            if arr.ndim not in (1, 2):
                raise SchemaMismatch(f"prior mean for '{name}' must be 1-D or 2-D")
            sums = arr.sum(axis=-1)
            if np.any(np.abs(sums - 1.0) > 1e-9) or np.any(arr < 0) or np.any(arr > 1):
                raise SchemaMismatch(f"prior mean for '{name}' is not a distribution")
            arr = arr.copy()
            arr.setflags(write=False)
            clean[name] = arr
        object.__setattr__(self, "means", clean)

    def mean_rows(self, name: str, n_rows: int, n_states: int) -> np.ndarray:
        mean = self.means.get(name)
        if mean is None:
            return np.full((n_rows, n_states), 1.0 / n_states)
        if mean.ndim == 1:
            if mean.shape[0] != n_states:
                raise SchemaMismatch(f"prior mean for '{name}' has wrong state count")
            return np.broadcast_to(mean, (n_rows, n_states)).copy()
        if mean.shape != (n_rows, n_states):
            raise SchemaMismatch(f"prior mean for '{name}' has shape {mean.shape}, "
                                 f"expected ({n_rows}, {n_states})")
        return mean.copy()


def default_prior(schema: Sequence[VariableSpec], outcome: str = DEFAULT_OUTCOME,
                  outcome_p: float = DEFAULT_PRIOR_P, ess: float = DEFAULT_ESS) -> DirichletPrior:
    """Uniform means everywhere except the outcome variable, which gets
    probability ``outcome_p`` on its first state (Yes)."""
    means: dict[str, np.ndarray] = {}
    for v in schema:
        if v.name == outcome:
            rest = (1.0 - outcome_p) / (v.cardinality - 1)
            means[v.name] = np.array([outcome_p] + [rest] * (v.cardinality - 1))
    return DirichletPrior(means, ess)


# --- dataset encoding ----------------------------------------------------------

def _codes_matrix(schema: Sequence[VariableSpec], dataset: Dataset) -> np.ndarray:
    """(n, len(schema)) int32 state codes, -1 missing; validates columns."""
    names = {v.name for v in schema}
    for col_name in dataset.columns:
        spec = dataset.schema.get(col_name)
        if spec is not None and spec.kind == "meta":
            continue
        if col_name not in names:
            raise SchemaMismatch(f"dataset column '{col_name}' is not a network variable")
    codes = np.full((dataset.n, len(schema)), -1, dtype=np.int32)
    for j, v in enumerate(schema):
        col = dataset.columns.get(v.name)
        if col is None:
            continue
        ds_spec = dataset.schema.get(v.name)
        if ds_spec is not None and ds_spec.states != v.states:
            raise SchemaMismatch(
                f"states of '{v.name}' differ between dataset and network schema"
            )
        codes[:, j] = col
    return codes


def _strides(cards: Sequence[int]) -> list[int]:
    strides = [1] * len(cards)
    for i in range(len(cards) - 2, -1, -1):
        strides[i] = strides[i + 1] * cards[i + 1]
    return strides


def _family_counts(codes: np.ndarray, child: int, parents: Sequence[int],
                   parent_cards: Sequence[int], n_states: int,
                   weights: np.ndarray | None = None) -> np.ndarray:
    """Row/state counts for one family, listwise-deleting incomplete records."""
    n_rows = int(np.prod(parent_cards)) if parents else 1
    counts = np.zeros((n_rows, n_states))
    mask = codes[:, child] >= 0
    for p in parents:
        mask &= codes[:, p] >= 0
    if not mask.any():
        return counts
    child_codes = codes[mask, child]
    rows = np.zeros(int(mask.sum()), dtype=np.int64)
    for p, s in zip(parents, _strides(parent_cards)):
        rows += codes[mask, p].astype(np.int64) * s
    w = np.ones(rows.shape[0]) if weights is None else weights[mask]
    np.add.at(counts, (rows, child_codes), w)
    return counts


def _posterior_mean(counts: np.ndarray, mean_rows: np.ndarray, ess: float) -> np.ndarray:
    alpha = ess * mean_rows
    return (alpha + counts) / (ess + counts.sum(axis=1, keepdims=True))


# --- closed-form fitting ---------------------------------------------------------

def fit_cpts(schema: Sequence[VariableSpec], dag: DagStructure, dataset: Dataset,
             prior: DirichletPrior | None = None) -> Network:
    """Dirichlet posterior-mean CPTs from (possibly partially) observed data.

    A family row with no complete records returns the prior mean; records
    missing the child or any parent are excluded from that family only.
    """
    schema = tuple(schema)
    prior = prior if prior is not None else default_prior(schema)
    order = {v.name: i for i, v in enumerate(schema)}
    codes = _codes_matrix(schema, dataset)
    cpts = []
    for j, v in enumerate(schema):
        parents = sorted(dag.parents_of(v.name), key=order.__getitem__)
        parent_idx = [order[p] for p in parents]
        parent_cards = [schema[i].cardinality for i in parent_idx]
        counts = _family_counts(codes, j, parent_idx, parent_cards, v.cardinality)
        mean = prior.mean_rows(v.name, counts.shape[0], v.cardinality)
        cpts.append(Cpt(v.name, parents, _posterior_mean(counts, mean, prior.ess)))
    return build_network(schema, dag, cpts)


def log_likelihood(network: Network, dataset: Dataset) -> float:
    """Sum over records of log P(observed assignment).

    Unobserved cells are marginalized by exact inference. Records with zero
    probability contribute -inf; their count is reported via a warning
    rather than being clamped away.
    """
    schema = network.schema
    codes = _codes_matrix(schema, dataset)
    if dataset.n == 0:
        return 0.0
    full = (codes >= 0).all(axis=1)
    logp = np.zeros(dataset.n)
    if full.any():
        sub = codes[full]
        acc = np.zeros(sub.shape[0])
        order = {v.name: i for i, v in enumerate(schema)}
        for j, v in enumerate(schema):
            parents = network.parents(v.name)
            parent_idx = [order[p] for p in parents]
            parent_cards = [schema[i].cardinality for i in parent_idx]
            rows = np.zeros(sub.shape[0], dtype=np.int64)
            for p, s in zip(parent_idx, _strides(parent_cards)):
                rows += sub[:, p].astype(np.int64) * s
            probs = network.cpts[v.name].rows[rows, sub[:, j]]
            with np.errstate(divide="ignore"):
                acc += np.log(probs)
        logp[full] = acc
    for i in np.nonzero(~full)[0]:
        observed = {
            schema[j].name: schema[j].states[codes[i, j]]
            for j in range(len(schema)) if codes[i, j] >= 0
        }
        p = evidence_probability(network, observed)
        logp[i] = np.log(p) if p > 0 else -np.inf
    zero = int(np.isneginf(logp).sum())
    if zero:
        warnings.warn(f"{zero} record(s) have probability zero under the network")
    return float(logp.sum())


# --- EM ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmConfig:
    """EM hyper-parameters; defaults follow the package conventions."""

    max_iterations: int = 500
    tolerance: float = 1e-6
    restarts: int = 10
    jitter: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1 or self.restarts < 1:
            raise SchemaMismatch("max_iterations and restarts must be >= 1")
        if not self.tolerance > 0:
            raise SchemaMismatch("tolerance must be positive")
        if self.jitter < 0:
            raise SchemaMismatch("jitter must be >= 0")


@dataclass(frozen=True)
class EmTrace:
    """Per-restart convergence record.

    ``log_likelihoods`` holds, per restart, the penalized objective after
    each update: observed-data log-likelihood plus the Dirichlet log-prior
    term. The posterior-mean M-step never decreases this quantity, so each
    inner tuple is non-decreasing (within numerical slack). ``converged``
    flags restarts that met the tolerance before the iteration cap
    (a False entry is a flagged success, not a failure)."""

    log_likelihoods: tuple[tuple[float, ...], ...]
    converged: tuple[bool, ...]
    selected: int


class _EmProblem:
    """Precomputed indexing shared by all restarts of one em_fit call."""

    def __init__(self, schema: Sequence[VariableSpec], dag: DagStructure,
                 dataset: Dataset, latents: Sequence[str], prior: DirichletPrior):
        self.schema = tuple(schema)
        self.dag = dag
        self.prior = prior
        order = {v.name: i for i, v in enumerate(self.schema)}
        self.order = order

        for name in latents:
            if name not in order:
                raise SchemaMismatch(f"latent variable '{name}' is not in the schema")
            col = dataset.columns.get(name)
            if col is not None and (col >= 0).any():
                raise SchemaMismatch(
                    f"latent variable '{name}' has observed data; drop the column first"
                )
        self.latents = tuple(sorted(set(latents), key=order.__getitem__))
        if not self.latents:
            raise SchemaMismatch("em_fit needs at least one latent variable")
        latent_set = set(self.latents)

        self.codes = _codes_matrix(self.schema, dataset)
        observed_cols = [j for j, v in enumerate(self.schema) if v.name not in latent_set]
        self.fast = (self.codes[:, observed_cols] >= 0).all(axis=1)
        self.slow_rows = np.nonzero(~self.fast)[0]

        latent_cards = [self.schema[order[l]].cardinality for l in self.latents]
        self.n_configs = int(np.prod(latent_cards))
        self.config_states = np.stack(
            np.unravel_index(np.arange(self.n_configs), latent_cards), axis=1
        )
        self.latent_col = {l: k for k, l in enumerate(self.latents)}

        # Family layout: (name, child col, parent cols, parent cards, rows)
        self.families = []
        for j, v in enumerate(self.schema):
            parents = sorted(dag.parents_of(v.name), key=order.__getitem__)
            parent_idx = [order[p] for p in parents]
            parent_cards = [self.schema[i].cardinality for i in parent_idx]
            touches = v.name in latent_set or any(
                self.schema[i].name in latent_set for i in parent_idx
            )
            self.families.append({
                "name": v.name, "child": j, "parents": parents,
                "parent_idx": parent_idx, "parent_cards": parent_cards,
                "strides": _strides(parent_cards),
                "n_rows": int(np.prod(parent_cards)) if parents else 1,
                "n_states": v.cardinality, "latent": touches,
            })

        # Static families never change after the first M-step.
        self.static_cpts: dict[str, np.ndarray] = {}
        for f in self.families:
            if not f["latent"]:
                counts = _family_counts(self.codes, f["child"], f["parent_idx"],
                                        f["parent_cards"], f["n_states"])
                mean = prior.mean_rows(f["name"], f["n_rows"], f["n_states"])
                self.static_cpts[f["name"]] = _posterior_mean(counts, mean, prior.ess)

        # Fast-row row indices split into an observed part (fixed) and a
        # per-config latent offset.
        fast_codes = self.codes[self.fast]
        self.n_fast = fast_codes.shape[0]
        for f in self.families:
            if not f["latent"]:
                continue
            base = np.zeros(self.n_fast, dtype=np.int64)
            offsets = np.zeros(self.n_configs, dtype=np.int64)
            for i, stride in zip(f["parent_idx"], f["strides"]):
                pname = self.schema[i].name
                if pname in latent_set:
                    offsets += self.config_states[:, self.latent_col[pname]] * stride
                else:
                    base += fast_codes[:, i].astype(np.int64) * stride
            f["row_base"] = base
            f["row_offsets"] = offsets
            child_name = f["name"]
            if child_name in latent_set:
                f["child_config"] = self.config_states[:, self.latent_col[child_name]]
            else:
                f["child_codes"] = fast_codes[:, f["child"]]

    def init_theta(self, rng: np.random.Generator, jitter: float) -> dict[str, np.ndarray]:
        theta = {}
        for f in self.families:
            mean = self.prior.mean_rows(f["name"], f["n_rows"], f["n_states"])
            if jitter > 0:
                mean = mean * (1.0 + jitter * (2.0 * rng.random(mean.shape) - 1.0))
                mean /= mean.sum(axis=1, keepdims=True)
            theta[f["name"]] = mean
        return theta

    def network(self, theta: Mapping[str, np.ndarray]) -> Network:
        cpts = [Cpt(f["name"], tuple(f["parents"]), theta[f["name"]])
                for f in self.families]
        return build_network(self.schema, self.dag, cpts)

    def latent_log_table(self, theta: Mapping[str, np.ndarray]) -> np.ndarray:
        """(n_fast, n_configs) log of the latent-family product per record."""
        table = np.zeros((self.n_fast, self.n_configs))
        for f in self.families:
            if not f["latent"]:
                continue
            with np.errstate(divide="ignore"):
                log_rows = np.log(theta[f["name"]])
            for c in range(self.n_configs):
                ridx = f["row_base"] + f["row_offsets"][c]
                if "child_config" in f:
                    table[:, c] += log_rows[ridx, f["child_config"][c]]
                else:
                    table[:, c] += log_rows[ridx, f["child_codes"]]
        return table

    def static_log_sum(self, theta: Mapping[str, np.ndarray]) -> float:
        """Sum over fast records of the static families' log-probabilities."""
        fast_codes = self.codes[self.fast]
        total = 0.0
        for f in self.families:
            if f["latent"]:
                continue
            rows = np.zeros(self.n_fast, dtype=np.int64)
            for i, stride in zip(f["parent_idx"], f["strides"]):
                rows += fast_codes[:, i].astype(np.int64) * stride
            probs = theta[f["name"]][rows, fast_codes[:, f["child"]]]
            with np.errstate(divide="ignore"):
                total += float(np.log(probs).sum())
        return total

    def prior_term(self, theta: Mapping[str, np.ndarray]) -> float:
        total = 0.0
        for f in self.families:
            mean = self.prior.mean_rows(f["name"], f["n_rows"], f["n_states"])
            alpha = self.prior.ess * mean
            t = theta[f["name"]]
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(alpha > 0, alpha * np.log(t), 0.0)
            total += float(terms.sum())
        return total

    def slow_responsibilities(self, theta: Mapping[str, np.ndarray]
                              ) -> tuple[np.ndarray, float]:
        """Per slow record: latent posterior (flattened) and the record's
        log-probability; exact inference on the assembled network."""
        if self.slow_rows.size == 0:
            return np.zeros((0, self.n_configs)), 0.0
        net = self.network(theta)
        resp = np.zeros((self.slow_rows.size, self.n_configs))
        total = 0.0
        for k, r in enumerate(self.slow_rows):
            observed = {
                self.schema[j].name: self.schema[j].states[self.codes[r, j]]
                for j in range(len(self.schema)) if self.codes[r, j] >= 0
            }
            joint = posterior_joint(net, list(self.latents), observed)
            resp[k] = joint.reshape(-1)
            p = evidence_probability(net, observed)
            total += float(np.log(p)) if p > 0 else -np.inf
        return resp, total

    def m_step(self, resp_fast: np.ndarray, resp_slow: np.ndarray
               ) -> dict[str, np.ndarray]:
        theta: dict[str, np.ndarray] = dict(self.static_cpts)
        fast_codes = self.codes[self.fast]
        for f in self.families:
            if not f["latent"]:
                continue
            counts = np.zeros((f["n_rows"], f["n_states"]))
            for c in range(self.n_configs):
                ridx = f["row_base"] + f["row_offsets"][c]
                if "child_config" in f:
                    np.add.at(counts[:, f["child_config"][c]], ridx, resp_fast[:, c])
                else:
                    np.add.at(counts, (ridx, f["child_codes"]), resp_fast[:, c])
            for k, r in enumerate(self.slow_rows):
                ok = self.codes[r, f["child"]] >= 0 or f["name"] in self.latents
                for i in f["parent_idx"]:
                    pname = self.schema[i].name
                    ok = ok and (pname in self.latents or self.codes[r, i] >= 0)
                if not ok:
                    continue
                for c in range(self.n_configs):
                    row = 0
                    for i, stride in zip(f["parent_idx"], f["strides"]):
                        pname = self.schema[i].name
                        val = (self.config_states[c, self.latent_col[pname]]
                               if pname in self.latents else self.codes[r, i])
                        row += int(val) * stride
                    if f["name"] in self.latents:
                        state = int(self.config_states[c, self.latent_col[f["name"]]])
                    else:
                        state = int(self.codes[r, f["child"]])
                    counts[row, state] += resp_slow[k, c]
            mean = self.prior.mean_rows(f["name"], f["n_rows"], f["n_states"])
            theta[f["name"]] = _posterior_mean(counts, mean, self.prior.ess)
        return theta


def em_fit(schema: Sequence[VariableSpec], dag: DagStructure, dataset: Dataset,
           latent_variables: Sequence[str], prior: DirichletPrior | None = None,
           config: EmConfig | None = None) -> tuple[Network, EmTrace]:
    """Fit CPTs with the named variables unobserved.

    Runs ``config.restarts`` independently initialized EM runs and returns
    the one with the best final objective; the trace records every run.
    Binary latent states are relabeled afterwards so the state whose fitted
    marginal is closer to its prior mean keeps the first (affirmative) slot.
    """
    schema = tuple(schema)
    prior = prior if prior is not None else default_prior(schema)
    config = config if config is not None else EmConfig()
    problem = _EmProblem(schema, dag, dataset, latent_variables, prior)

    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    traces: list[tuple[float, ...]] = []
    converged_flags: list[bool] = []
    finals: list[dict[str, np.ndarray]] = []

    for r in range(config.restarts):
        rng = np.random.default_rng(seeds[r])
        theta = problem.init_theta(rng, config.jitter)
        objectives: list[float] = []
        converged = False
        prev = None
        for t in range(config.max_iterations + 1):
            latent_logs = problem.latent_log_table(theta)
            log_marg = logsumexp(latent_logs, axis=1)
            resp_slow, slow_ll = problem.slow_responsibilities(theta)
            objective = (problem.static_log_sum(theta) + float(log_marg.sum())
                         + slow_ll + problem.prior_term(theta))
            objectives.append(objective)
            if prev is not None and abs(objective - prev) <= config.tolerance * max(1.0, abs(prev)):
                converged = True
                break
            prev = objective
            if t == config.max_iterations:
                break
            resp_fast = np.exp(latent_logs - log_marg[:, None])
            theta = problem.m_step(resp_fast, resp_slow)
        traces.append(tuple(objectives))
        converged_flags.append(converged)
        finals.append(theta)

    best = int(np.argmax([t[-1] for t in traces]))
    theta = _align_binary_latents(problem, finals[best])
    network = problem.network(theta)
    trace = EmTrace(tuple(traces), tuple(converged_flags), best)
    return network, trace


def _align_binary_latents(problem: _EmProblem,
                          theta: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Swap a binary latent's states when the second state's fitted marginal
    is closer to the first state's prior mean (EM is label-symmetric)."""
    theta = dict(theta)
    for latent in problem.latents:
        spec = problem.schema[problem.order[latent]]
        if spec.cardinality != 2:
            continue
        net = problem.network(theta)
        m = marginal(net, latent).probabilities
        fam = next(f for f in problem.families if f["name"] == latent)
        anchor = float(problem.prior.mean_rows(latent, fam["n_rows"], 2).mean(axis=0)[0])
        if abs(m[0] - anchor) <= abs(m[1] - anchor):
            continue
        theta[latent] = theta[latent][:, ::-1].copy()
        for f in problem.families:
            if latent not in f["parents"]:
                continue
            axis = f["parents"].index(latent)
            shape = tuple(f["parent_cards"]) + (f["n_states"],)
            table = theta[f["name"]].reshape(shape)
            table = np.flip(table, axis=axis)
            theta[f["name"]] = table.reshape(f["n_rows"], f["n_states"]).copy()
    return theta
