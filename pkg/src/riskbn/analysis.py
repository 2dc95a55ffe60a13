"""The three analyses: strength-of-influence ranking, multi-factor risk
search with Bayes-factor thresholds, and rank comparison.

Strength of influence scores how much conditioning on one variable shifts
the target's conditional distribution: the square root of the generalized,
marginal-weighted Jensen-Shannon divergence of the per-state conditionals,
base-2 logarithms. For a binary target this lies in [0, 1] as is; when both
the source and target spaces exceed two states the divergence is divided by
its information-theoretic bound so the score stays in [0, 1].

The multi-factor search scores every evidence combination of a given size
exactly. Rather than one elimination per state combination, it builds the
joint table of each variable subset with the target (one elimination per
subset, or a single cached pool-wide joint when small enough) and reads all
state combinations from it; results are identical to per-combination
posteriors and are tested against full joint enumeration.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .core import Network
from .errors import (
    DegenerateSourceWarning,
    DomainError,
    LengthMismatch,
    PoolTooLarge,
)
from .inference import joint_table, marginal, posterior

DEFAULT_MAX_EVALS = 100_000_000
JOINT_CACHE_LIMIT = 4_000_000


# --- strength of influence -----------------------------------------------------

def _entropy_bits(p: np.ndarray) -> float:
    """Shannon entropy, base 2, with 0 log 0 = 0."""
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _d_connected_unconditionally(network: Network, a: str, b: str) -> bool:
    """With empty conditioning, two nodes are dependent only if they share
    an ancestor (a trail without colliders runs through a common ancestor)."""
    def ancestors(name: str) -> set[str]:
        out, stack = set(), [name]
        while stack:
            n = stack.pop()
            if n in out:
                continue
            out.add(n)
            stack.extend(network.parents(n))
        return out

    return bool(ancestors(a) & ancestors(b))


def influence_strength(network: Network, source: str, target: str,
                       aggregation: str = "weighted") -> float:
    """Jensen-Shannon strength of ``source`` on ``target``, in [0, 1].

    ``aggregation="weighted"`` (default) is the generalized divergence of
    the conditionals P(target | source = v) weighted by the source marginal;
    ``"pairwise-max"`` instead takes the largest pairwise JS distance
    between any two conditionals.
    """
    if source == target:
        raise DomainError("source and target must differ")
    if aggregation not in ("weighted", "pairwise-max"):
        raise DomainError(f"unknown aggregation {aggregation!r}")
    network.spec(source)
    network.spec(target)
    if not _d_connected_unconditionally(network, source, target):
        return 0.0

    weights = np.asarray(marginal(network, source).probabilities)
    positive = np.nonzero(weights > 0)[0]
    if positive.size < 2:
        warnings.warn(
            f"source '{source}' has fewer than two states with positive "
            "probability; strength is 0",
            DegenerateSourceWarning,
        )
        return 0.0

    states = network.spec(source).states
    conditionals = [
        posterior(network, target, {source: states[v]}).as_array() for v in positive
    ]
    w = weights[positive]

    if aggregation == "pairwise-max":
        best = 0.0
        for i in range(len(conditionals)):
            for j in range(i + 1, len(conditionals)):
                best = max(best, _js_divergence(
                    [conditionals[i], conditionals[j]], np.array([0.5, 0.5])))
        jsd, bound_card = best, 2
    else:
        jsd = _js_divergence(conditionals, w)
        bound_card = min(int(positive.size), network.cardinality(target))

    bound = math.log2(bound_card)
    if bound > 1.0:
        jsd /= bound
    return math.sqrt(max(jsd, 0.0))


def _js_divergence(distributions: Sequence[np.ndarray], weights: np.ndarray) -> float:
    """Generalized JS divergence, base 2, in cancellation-free KL form."""
    mixture = np.zeros_like(distributions[0])
    for w, d in zip(weights, distributions):
        mixture = mixture + w * d
    total = 0.0
    for w, d in zip(weights, distributions):
        nz = d > 0
        total += float(w * (d[nz] * np.log2(d[nz] / mixture[nz])).sum())
    return max(total, 0.0)


@dataclass(frozen=True)
class StrengthReport:
    """Descending influence ranking against one target variable."""

    target: str
    entries: tuple[tuple[str, float], ...]
    control: str | None = None
    control_score: float | None = None

    def score(self, variable: str) -> float:
        for name, s in self.entries:
            if name == variable:
                return s
        raise DomainError(f"'{variable}' is not in the ranking")


def strength_ranking(network: Network, target: str,
                     candidates: Sequence[str] | None = None,
                     control: str | None = None,
                     aggregation: str = "weighted") -> StrengthReport:
    """Rank candidate variables by influence on the target.

    Ties break alphabetically. The control's score is recorded so reports
    can draw the irrelevance line under it.
    """
    if candidates is None:
        names = [v for v in network.variables if v != target]
    else:
        names = list(dict.fromkeys(candidates))
        if target in names:
            raise DomainError("candidates must exclude the target")
    if control is not None:
        network.spec(control)
        if control not in names and control != target:
            names.append(control)
    scores = [(name, influence_strength(network, name, target, aggregation))
              for name in names]
    scores.sort(key=lambda e: (-e[1], e[0]))
    control_score = None
    if control is not None:
        control_score = next(s for name, s in scores if name == control)
    return StrengthReport(target, tuple(scores), control, control_score)


def conditional_profile(network: Network, target: str, source: str,
                        target_state: str | None = None) -> tuple[tuple[str, float], ...]:
    """Per-source-state posterior of the target's affirmative state.

    ``target_state`` defaults to ``Yes`` when the target has such a state,
    otherwise to its last state. Source states with zero marginal
    probability are omitted (their conditional is undefined).
    """
    if source == target:
        raise DomainError("source and target must differ")
    t_states = network.spec(target).states
    if target_state is None:
        target_state = "Yes" if "Yes" in t_states else t_states[-1]
    t_idx = network.state_index(target, target_state)
    weights = marginal(network, source).probabilities
    out = []
    for v, state in enumerate(network.spec(source).states):
        if weights[v] <= 0:
            continue
        dist = posterior(network, target, {source: state})
        out.append((state, dist.probabilities[t_idx]))
    return tuple(out)


# --- Bayes factors ----------------------------------------------------------------

def bayes_factor(prior_p: float, posterior_p: float) -> float:
    """Ratio of prior odds to posterior odds."""
    for name, p in (("prior", prior_p), ("posterior", posterior_p)):
        if not 0.0 < p < 1.0:
            raise DomainError(f"{name} probability must lie strictly in (0, 1)")
    return ((1.0 - prior_p) / prior_p) / ((1.0 - posterior_p) / posterior_p)


def bf_threshold_posterior(prior_p: float, bf: float) -> float:
    """Posterior probability at which the Bayes factor reaches ``bf``."""
    if not 0.0 < prior_p < 1.0:
        raise DomainError("prior probability must lie strictly in (0, 1)")
    if not bf > 0.0:
        raise DomainError("Bayes factor must be positive")
    return 1.0 / (1.0 + (1.0 - prior_p) / (prior_p * bf))


# --- multi-factor search ------------------------------------------------------------

@dataclass(frozen=True)
class MultiFactorEntry:
    """Best posterior over all evidence sets of exactly ``k`` assignments."""

    k: int
    max_posterior: float | None
    argmax: tuple[tuple[tuple[str, str], ...], ...]
    evaluated: int
    skipped: int


@dataclass(frozen=True)
class MultiFactorResult:
    target: str
    target_state: str
    entries: tuple[MultiFactorEntry, ...]

    def entry(self, k: int) -> MultiFactorEntry:
        for e in self.entries:
            if e.k == k:
                return e
        raise DomainError(f"no entry for k={k}")


def estimate_evaluations(cards: Sequence[int], k_values: Iterable[int]) -> int:
    """Number of evidence combinations: sum over k of the k-th elementary
    symmetric polynomial of the pool cardinalities."""
    poly = [1]
    for c in cards:
        poly = [poly[i] + (poly[i - 1] * c if i else 0) for i in range(len(poly))] + \
               [poly[-1] * c]
    return sum(poly[k] for k in k_values if k < len(poly))


def _validate_pool(network: Network, target: str,
                   candidate_pool: Sequence[str]) -> list[str]:
    pool = list(dict.fromkeys(candidate_pool))
    if not pool:
        raise DomainError("candidate pool is empty")
    for name in pool:
        network.spec(name)
    if target in pool:
        raise DomainError("candidate pool must exclude the target")
    pool.sort(key=network.index)
    return pool


def _subset_tables(network: Network, target: str, pool: list[str], k_values: list[int],
                   joint_cache_limit: int):
    """Yield (variable subset, joint table over subset + target).

    The table's axes follow the subset order with the target last. Uses one
    cached pool-wide joint when it fits the memory cap, else one
    elimination per subset.
    """
    cards = [network.cardinality(v) for v in pool]
    full_size = int(np.prod(cards)) * network.cardinality(target)
    cached = None
    if full_size <= joint_cache_limit:
        cached = joint_table(network, pool + [target])
    for k in k_values:
        for combo in itertools.combinations(range(len(pool)), k):
            subset = [pool[i] for i in combo]
            if cached is not None:
                drop = tuple(i for i in range(len(pool)) if i not in combo)
                table = cached.sum(axis=drop) if drop else cached
            else:
                table = joint_table(network, subset + [target])
            yield k, subset, table


def multifactor_search(network: Network, target: str, target_state: str,
                       candidate_pool: Sequence[str], k_range: Iterable[int],
                       max_evals: int = DEFAULT_MAX_EVALS,
                       joint_cache_limit: int = JOINT_CACHE_LIMIT) -> MultiFactorResult:
    """Exhaustively score every evidence set of each size in ``k_range``.

    For each k, every subset of k distinct pool variables and every state
    combination is evaluated; zero-probability combinations are skipped and
    counted. Deterministic: ties on the maximum keep every achieving set,
    in enumeration order (canonical variable order, row-major states).
    """
    pool = _validate_pool(network, target, candidate_pool)
    t_idx = network.state_index(target, target_state)
    k_values = sorted(set(int(k) for k in k_range))
    if not k_values:
        raise DomainError("k range is empty")
    if k_values[0] < 1 or k_values[-1] > len(pool):
        raise DomainError(f"k range must lie within [1, {len(pool)}]")

    cards = [network.cardinality(v) for v in pool]
    estimated = estimate_evaluations(cards, k_values)
    if estimated > max_evals:
        raise PoolTooLarge(estimated, max_evals)

    best: dict[int, tuple[float | None, list, int, int]] = {
        k: (None, [], 0, 0) for k in k_values
    }
    for k, subset, table in _subset_tables(network, target, pool, k_values,
                                           joint_cache_limit):
        denom = table.sum(axis=-1)
        valid = denom > 0
        post = np.full(denom.shape, -1.0)
        np.divide(table[..., t_idx], denom, out=post, where=valid)
        max_p, argmax, evaluated, skipped = best[k]
        evaluated += int(valid.sum())
        skipped += int(valid.size - valid.sum())
        if valid.any():
            local_max = float(post.max())
            if max_p is None or local_max > max_p:
                max_p, argmax = local_max, []
            if local_max == max_p:
                for idx in np.argwhere(post == max_p):
                    assignment = tuple(
                        (v, network.spec(v).states[i]) for v, i in zip(subset, idx)
                    )
                    argmax.append(assignment)
        best[k] = (max_p, argmax, evaluated, skipped)

    entries = tuple(
        MultiFactorEntry(k, best[k][0], tuple(best[k][1]), best[k][2], best[k][3])
        for k in k_values
    )
    return MultiFactorResult(target, target_state, entries)


# --- risk profiles ------------------------------------------------------------------

@dataclass(frozen=True)
class RiskProfile:
    evidence: tuple[tuple[str, str], ...]
    posterior: float


@dataclass(frozen=True)
class RiskProfileSet:
    """All size-k evidence sets meeting the posterior threshold, plus the
    per-assignment frequency table across those profiles."""

    threshold: float
    k: int
    profiles: tuple[RiskProfile, ...]
    frequency: tuple[tuple[tuple[str, str], int], ...]


def risk_profiles(network: Network, target: str, target_state: str,
                  candidate_pool: Sequence[str], k: int, threshold: float,
                  max_evals: int = DEFAULT_MAX_EVALS,
                  joint_cache_limit: int = JOINT_CACHE_LIMIT) -> RiskProfileSet:
    """Collect every evidence set of exactly ``k`` assignments whose target
    posterior is at least ``threshold``; profiles sort by posterior
    (descending, then lexicographically)."""
    if not 0.0 <= threshold <= 1.0:
        raise DomainError("threshold must lie in [0, 1]")
    pool = _validate_pool(network, target, candidate_pool)
    if not 1 <= k <= len(pool):
        raise DomainError(f"k must lie within [1, {len(pool)}]")
    t_idx = network.state_index(target, target_state)

    cards = [network.cardinality(v) for v in pool]
    estimated = estimate_evaluations(cards, [k])
    if estimated > max_evals:
        raise PoolTooLarge(estimated, max_evals)

    profiles: list[RiskProfile] = []
    counts: dict[tuple[str, str], int] = {}
    for _, subset, table in _subset_tables(network, target, pool, [k],
                                           joint_cache_limit):
        denom = table.sum(axis=-1)
        valid = denom > 0
        post = np.full(denom.shape, -1.0)
        np.divide(table[..., t_idx], denom, out=post, where=valid)
        for idx in np.argwhere(post >= threshold):
            assignment = tuple(
                (v, network.spec(v).states[i]) for v, i in zip(subset, idx)
            )
            profiles.append(RiskProfile(assignment, float(post[tuple(idx)])))
            for pair in assignment:
                counts[pair] = counts.get(pair, 0) + 1

    profiles.sort(key=lambda p: (-p.posterior, p.evidence))
    frequency = tuple(sorted(counts.items(), key=lambda e: (-e[1], e[0])))
    return RiskProfileSet(float(threshold), int(k), tuple(profiles), frequency)


# --- rank comparison -----------------------------------------------------------------

@dataclass(frozen=True)
class RankComparison:
    """Spearman correlation between two paired score lists."""

    rho: float
    p_value: float
    n: int
    exact_extreme: bool = False


def spearman(scores_a: Sequence[float], scores_b: Sequence[float]) -> RankComparison:
    """Spearman rho with average ranks for ties; two-sided p-value from the
    t approximation with n - 2 degrees of freedom. |rho| = 1 reports the
    limiting tail p = 0 and flags the exact case."""
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"paired score lists differ: {a.shape} vs {b.shape}")
    n = a.shape[0]
    if n < 2:
        raise DomainError("need at least two paired scores")
    ra = stats.rankdata(a)
    rb = stats.rankdata(b)
    if np.ptp(ra) == 0 or np.ptp(rb) == 0:
        raise DomainError("constant ranks: correlation undefined")
    if np.array_equal(ra, rb):
        rho = 1.0
    elif np.array_equal(ra + rb, np.full(n, n + 1.0)):
        rho = -1.0
    else:
        rho = float(np.corrcoef(ra, rb)[0, 1])
        rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0 or n == 2:
        return RankComparison(rho, 0.0, n, exact_extreme=True)
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = float(2.0 * stats.t.sf(abs(t), n - 2))
    return RankComparison(rho, p, n)
