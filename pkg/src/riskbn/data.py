"""Variable schema, dataset ingestion, calibration filters and the synthetic
player generator.

The default schema covers nine profiling variables (demographics plus
questionnaire scores), two Yes/No outcome variables, the ten cyberbullying
game questions (two adventures) and the meta columns recorded alongside
answers (per-question response times, post-game honesty answer).

The synthetic generator replaces the private study data: its root marginals
reproduce the published survey marginals exactly (see ``CALIBRATION_NOTES``
for the two columns that needed rounding repairs), the outcome variable is
driven by planted risk factors, and one game question is generated
independently of everything else to act as the ranking control.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Cpt, DagStructure, Network, VariableSpec, build_network
from .errors import (
    IllegalState,
    MissingMetaColumn,
    RaggedRow,
    SchemaMismatch,
    UnknownColumn,
)
from .inference import SampleBatch, ancestral_sample

DEFAULT_OUTCOME = "Previous_CB_Offending"
DEFAULT_CONTROL = "A1Q1_PhotoSharing"
MISSING_TOKENS = ("", "?")

#: Published survey marginals (percent). Two columns do not sum to 100:
#: Gender totals 99.0 and Daily_Hours_Internet totals 97.6; the generator
#: spreads the missing mass evenly over the states of the affected variable.
#: Sexual orientation totals 60.7; the remaining 39.3 is carried by an
#: explicit Undisclosed state so that distributions are well formed without
#: silently rescaling the published numbers.
PUBLISHED_MARGINALS: dict[str, dict[str, float]] = {
    "Gender": {"Male": 62.9, "Female": 35.1, "NonBinary": 1.0},
    "Age": {"12": 18.8, "13": 4.4, "14": 26.8, "15": 33.0, "16": 17.0},
    "Sexual_Orientation": {"Heterosexual": 55.3, "NonHeterosexual": 5.4},
    "Migratory_Background": {"No": 71.4, "ParentsBornAbroad": 8.6, "BornAbroad": 20.0},
    "Self_Esteem": {"Low": 37.5, "Medium": 41.5, "High": 21.0},
    "Social_Support": {"Low": 3.6, "Medium": 33.5, "High": 62.9},
    "Family_Support": {"Low": 7.6, "Medium": 24.5, "High": 67.9},
    "Daily_Hours_Internet": {
        "LessThan1h": 8.9, "1to2h": 18.7, "2to3h": 21.4, "3to4h": 33.0, "MoreThan4h": 15.6,
    },
    "Empathy": {"Low": 45.8, "High": 54.2},
}

CALIBRATION_NOTES = (
    "Gender percentages total 99.0: the missing 1.0 is split evenly over its "
    "3 states. Daily_Hours_Internet totals 97.6: the missing 2.4 is split "
    "evenly over its 5 states. Sexual_Orientation totals 60.7: an "
    "Undisclosed state carries the remaining 39.3."
)


def calibration_targets() -> dict[str, dict[str, float]]:
    """Exact root-marginal targets (probabilities) used by the generator.

    Derived from ``PUBLISHED_MARGINALS`` with the repairs described in
    ``CALIBRATION_NOTES``; every target column sums to 1 exactly.
    """
    targets: dict[str, dict[str, float]] = {}
    for var, column in PUBLISHED_MARGINALS.items():
        probs = {state: pct / 100.0 for state, pct in column.items()}
        if var == "Sexual_Orientation":
            probs["Undisclosed"] = 1.0 - sum(probs.values())
        else:
            deficit = 1.0 - sum(probs.values())
            if abs(deficit) > 1e-12:
                share = deficit / len(probs)
                probs = {s: p + share for s, p in probs.items()}
        targets[var] = probs
    return targets


# --- schema -------------------------------------------------------------------

@dataclass(frozen=True)
class Schema:
    """Ordered variable list, including the honesty meta column.

    Response-time columns are numeric rather than categorical: any network
    variable ``v`` may carry an ``rt_v`` column of integer milliseconds.
    """

    variables: tuple[VariableSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise SchemaMismatch("duplicate variable names in schema")

    @property
    def network_variables(self) -> tuple[VariableSpec, ...]:
        return tuple(v for v in self.variables if v.kind != "meta")

    @property
    def meta_variables(self) -> tuple[VariableSpec, ...]:
        return tuple(v for v in self.variables if v.kind == "meta")

    @property
    def response_time_columns(self) -> tuple[str, ...]:
        return tuple(f"rt_{v.name}" for v in self.variables if v.kind == "game")

    def get(self, name: str) -> VariableSpec | None:
        for v in self.variables:
            if v.name == name:
                return v
        return None


_GAME_QUESTIONS = (
    # (name, number of answers)
    ("A1Q1_PhotoSharing", 2),
    ("A1Q2_Sociable", 2),
    ("A1Q3_MatthewMeme", 3),
    ("A3Q1_PiratedContent", 2),
    ("A3Q2_PolOrPaula", 3),
    ("A3Q3_TimeOverrun", 2),
    ("A3Q4_PolBullied", 3),
    ("A3Q5_RemindMatthew", 3),
    ("A3Q6_TalkToPol", 2),
    ("A3Q7_HowToHelpPol", 4),
)


def default_schema() -> Schema:
    """The fixed default schema: profiling, outcome, game and meta variables."""
    targets = calibration_targets()
    kinds = {
        "Gender": "demographic", "Age": "demographic",
        "Sexual_Orientation": "demographic", "Migratory_Background": "demographic",
        "Self_Esteem": "psychological", "Social_Support": "psychological",
        "Family_Support": "psychological", "Daily_Hours_Internet": "demographic",
        "Empathy": "psychological",
    }
    specs = [VariableSpec(name, tuple(targets[name]), kinds[name]) for name in kinds]
    specs.append(VariableSpec("Previous_CB_Victimization", ("Yes", "No"), "outcome"))
    specs.append(VariableSpec("Previous_CB_Offending", ("Yes", "No"), "outcome"))
    for name, n_answers in _GAME_QUESTIONS:
        states = tuple(f"Answer{i + 1}" for i in range(n_answers))
        specs.append(VariableSpec(name, states, "game"))
    specs.append(VariableSpec("honesty", ("Yes", "No"), "meta"))
    return Schema(tuple(specs))


# --- datasets -----------------------------------------------------------------

@dataclass(frozen=True)
class Dataset:
    """Typed records over a schema.

    ``columns`` maps present variable names to int16 state-index arrays
    (-1 marks a missing cell); ``response_times`` maps ``rt_*`` columns to
    int32 millisecond arrays (-1 missing). Datasets are immutable.
    """

    schema: Schema
    n: int
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    response_times: dict[str, np.ndarray] = field(default_factory=dict)
    provenance: str = "ingest"

    def __post_init__(self):
        for arr in self.columns.values():
            arr.setflags(write=False)
        for arr in self.response_times.values():
            arr.setflags(write=False)

    def column(self, name: str) -> np.ndarray | None:
        return self.columns.get(name)

    def observed_count(self, name: str) -> int:
        col = self.columns.get(name)
        return 0 if col is None else int((col >= 0).sum())

    def record(self, i: int) -> dict[str, str]:
        """Observed cells of record ``i`` as {variable: state label}."""
        out: dict[str, str] = {}
        for v in self.schema.variables:
            col = self.columns.get(v.name)
            if col is not None and col[i] >= 0:
                out[v.name] = v.states[col[i]]
        return out

    def without_columns(self, names: Iterable[str]) -> "Dataset":
        dropped = set(names)
        return replace(
            self,
            columns={k: v for k, v in self.columns.items() if k not in dropped},
        )


def dataset_from_batch(batch: SampleBatch, schema: Schema,
                       provenance: str = "synthetic") -> Dataset:
    """Wrap sampled assignments as a fully observed dataset."""
    columns: dict[str, np.ndarray] = {}
    for j, name in enumerate(batch.variables):
        if schema.get(name) is None:
            raise SchemaMismatch(f"sampled variable '{name}' is not in the schema")
        columns[name] = batch.states[:, j].astype(np.int16)
    return Dataset(schema, len(batch), columns, {}, provenance)


def load_dataset(text: str, schema: Schema) -> Dataset:
    """Parse the dataset CSV format.

    First row holds column headers; cells that are empty or ``?`` are
    missing. Errors carry 1-based data-row numbers and column names.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise RaggedRow(0, 1, 0) from None
    header = [h.strip() for h in header]

    spec_by_name = {v.name: v for v in schema.variables}
    rt_allowed = set(schema.response_time_columns)
    for name in header:
        if name in spec_by_name or name in rt_allowed:
            continue
        raise UnknownColumn(f"column '{name}' is not declared in the schema")
    if len(set(header)) != len(header):
        raise UnknownColumn("duplicate column names in header")

    rows = list(reader)
    n = len(rows)
    cat_cols = {name: np.full(n, -1, dtype=np.int16)
                for name in header if name in spec_by_name}
    rt_cols = {name: np.full(n, -1, dtype=np.int32)
               for name in header if name in rt_allowed}

    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise RaggedRow(i + 1, len(header), len(row))
        for name, cell in zip(header, row):
            cell = cell.strip()
            if cell in MISSING_TOKENS:
                continue
            if name in cat_cols:
                spec = spec_by_name[name]
                if cell not in spec.states:
                    raise IllegalState(cell, i + 1, name)
                cat_cols[name][i] = spec.states.index(cell)
            else:
                try:
                    value = int(cell)
                except ValueError:
                    raise IllegalState(cell, i + 1, name) from None
                if value < 0:
                    raise IllegalState(cell, i + 1, name)
                rt_cols[name][i] = value
    return Dataset(schema, n, cat_cols, rt_cols, "ingest")


def save_dataset(dataset: Dataset) -> str:
    """Render a dataset back to CSV; inverse of :func:`load_dataset`."""
    header: list[str] = []
    for v in dataset.schema.variables:
        if v.name in dataset.columns:
            header.append(v.name)
    for name in dataset.schema.response_time_columns:
        if name in dataset.response_times:
            header.append(name)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    spec_by_name = {v.name: v for v in dataset.schema.variables}
    for i in range(dataset.n):
        row = []
        for name in header:
            if name in dataset.columns:
                code = dataset.columns[name][i]
                row.append("" if code < 0 else spec_by_name[name].states[code])
            else:
                value = dataset.response_times[name][i]
                row.append("" if value < 0 else str(int(value)))
        writer.writerow(row)
    return buf.getvalue()


# --- calibration filters --------------------------------------------------------

@dataclass(frozen=True)
class FilterConfig:
    """Calibration filtering rules.

    ``min_response_time_ms`` flags records with any answered question faster
    than the threshold (None disables the rule); ``require_honesty`` flags
    records whose honesty answer is No. ``action`` is ``drop`` (remove the
    record) or ``blank`` (clear the outcome columns, keep the record).
    """

    min_response_time_ms: int | None = 800
    require_honesty: bool = False
    action: str = "drop"

    def __post_init__(self):
        if self.min_response_time_ms is not None and self.min_response_time_ms < 0:
            raise SchemaMismatch("response-time threshold must be >= 0")
        if self.action not in ("drop", "blank"):
            raise SchemaMismatch("filter action must be 'drop' or 'blank'")


@dataclass(frozen=True)
class FilterReport:
    n_input: int
    n_output: int
    flagged_response_time: int
    flagged_honesty: int
    action: str


def apply_filters(dataset: Dataset, config: FilterConfig) -> tuple[Dataset, FilterReport]:
    """Apply calibration filters; surviving records are never altered
    beyond membership (drop) or outcome blanking (blank)."""
    n = dataset.n
    rt_bad = np.zeros(n, dtype=bool)
    honesty_bad = np.zeros(n, dtype=bool)

    if config.min_response_time_ms is not None:
        if not dataset.response_times:
            raise MissingMetaColumn(
                "response-time filter is on but the dataset has no rt_* columns"
            )
        for col in dataset.response_times.values():
            rt_bad |= (col >= 0) & (col < config.min_response_time_ms)

    if config.require_honesty:
        honesty_col = dataset.columns.get("honesty")
        if honesty_col is None:
            raise MissingMetaColumn(
                "honesty filter is on but the dataset has no honesty column"
            )
        spec = dataset.schema.get("honesty")
        no_idx = spec.states.index("No")
        honesty_bad = honesty_col == no_idx

    flagged = rt_bad | honesty_bad
    if config.action == "drop":
        keep = ~flagged
        columns = {k: v[keep].copy() for k, v in dataset.columns.items()}
        rts = {k: v[keep].copy() for k, v in dataset.response_times.items()}
        out = Dataset(dataset.schema, int(keep.sum()), columns, rts, dataset.provenance)
    else:
        outcome_names = {v.name for v in dataset.schema.variables if v.kind == "outcome"}
        columns = {}
        for k, v in dataset.columns.items():
            if k in outcome_names:
                v = v.copy()
                v[flagged] = -1
            else:
                v = v.copy()
            columns[k] = v
        rts = {k: v.copy() for k, v in dataset.response_times.items()}
        out = Dataset(dataset.schema, n, columns, rts, dataset.provenance)
    report = FilterReport(
        n_input=n,
        n_output=out.n,
        flagged_response_time=int(rt_bad.sum()),
        flagged_honesty=int(honesty_bad.sum()),
        action=config.action,
    )
    return out, report


# --- summaries ------------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    variable: str
    state: str
    count: int
    percent: float | None  # None when the variable has no observed cells


def summarize(dataset: Dataset) -> tuple[SummaryRow, ...]:
    """Marginal frequency table: per state, count and percent among the
    variable's observed cells (percent absent when nothing observed)."""
    out: list[SummaryRow] = []
    for v in dataset.schema.variables:
        if v.kind == "meta":
            continue
        col = dataset.columns.get(v.name)
        if col is None:
            counts = np.zeros(len(v.states), dtype=np.int64)
        else:
            counts = np.bincount(col[col >= 0], minlength=len(v.states)).astype(np.int64)
        observed = int(counts.sum())
        for s, state in enumerate(v.states):
            pct = (100.0 * counts[s] / observed) if observed else None
            out.append(SummaryRow(v.name, state, int(counts[s]), pct))
    return tuple(out)


# --- synthetic generator ----------------------------------------------------------

# Additive risk scores for the two outcome variables: probability of "Yes"
# is base + sum of per-state loadings, clipped to [0.005, 0.95].
_VICTIMIZATION_BASE = 0.16
_VICTIMIZATION_LOADINGS: dict[str, tuple[float, ...]] = {
    "Gender": (0.02, 0.0, 0.03),
    "Age": (0.0, 0.005, 0.01, 0.015, 0.02),
    "Sexual_Orientation": (0.0, 0.05, 0.01),
    "Migratory_Background": (0.0, 0.02, 0.03),
    "Self_Esteem": (0.05, 0.02, 0.0),
    "Social_Support": (0.06, 0.03, 0.0),
    "Family_Support": (0.05, 0.02, 0.0),
    "Daily_Hours_Internet": (0.0, 0.01, 0.02, 0.03, 0.05),
    "Empathy": (0.0, 0.0),
}

_OFFENDING_BASE = 0.008
_OFFENDING_VICTIMIZATION_LOADING = (0.19, 0.0)  # (Yes, No)
_OFFENDING_LOADINGS: dict[str, tuple[float, ...]] = {
    "Gender": (0.024, 0.0, 0.008),
    "Age": (0.0, 0.002, 0.006, 0.009, 0.013),
    "Sexual_Orientation": (0.0, 0.006, 0.003),
    "Migratory_Background": (0.0, 0.005, 0.010),
    "Self_Esteem": (0.0, 0.006, 0.022),
    "Social_Support": (0.019, 0.008, 0.0),
    "Family_Support": (0.018, 0.007, 0.0),
    "Daily_Hours_Internet": (0.0, 0.003, 0.007, 0.013, 0.021),
    "Empathy": (0.019, 0.0),
}

# Answer distributions per offending state, (Yes row, No row). Separation
# between the two rows sets each question's influence on the outcome; the
# control question is sampled independently of everything.
_GAME_CPTS: dict[str, tuple[tuple[float, ...], tuple[float, ...]]] = {
    "A1Q2_Sociable": ((0.62, 0.38), (0.45, 0.55)),
    "A1Q3_MatthewMeme": ((0.55, 0.30, 0.15), (0.22, 0.42, 0.36)),
    "A3Q1_PiratedContent": ((0.60, 0.40), (0.48, 0.52)),
    "A3Q2_PolOrPaula": ((0.18, 0.50, 0.32), (0.42, 0.22, 0.36)),
    "A3Q3_TimeOverrun": ((0.70, 0.30), (0.45, 0.55)),
    "A3Q4_PolBullied": ((0.48, 0.34, 0.18), (0.11, 0.32, 0.57)),
    "A3Q5_RemindMatthew": ((0.20, 0.17, 0.63), (0.53, 0.33, 0.14)),
    "A3Q6_TalkToPol": ((0.62, 0.38), (0.33, 0.67)),
    "A3Q7_HowToHelpPol": ((0.06, 0.13, 0.25, 0.56), (0.41, 0.31, 0.20, 0.08)),
}

_PROFILING_ORDER = (
    "Gender", "Age", "Sexual_Orientation", "Migratory_Background",
    "Self_Esteem", "Social_Support", "Family_Support",
    "Daily_Hours_Internet", "Empathy",
)


@dataclass(frozen=True)
class GeneratorSpec:
    """A sampling network plus the calibration and planting it encodes."""

    network: Network
    calibration: dict[str, dict[str, float]]
    outcome: str
    planted_profiling: tuple[str, str]   # (variable, risky state)
    strongest_game: str
    control: str
    seed: int


def _score_rows(parents: Sequence[VariableSpec], base: float,
                loadings: Mapping[str, tuple[float, ...]]) -> np.ndarray:
    """Yes/No CPT rows for an additive risk score over all parent configs."""
    cards = [p.cardinality for p in parents]
    n_rows = int(np.prod(cards))
    config = np.stack(np.unravel_index(np.arange(n_rows), cards), axis=1)
    score = np.full(n_rows, base, dtype=np.float64)
    for j, p in enumerate(parents):
        score += np.asarray(loadings[p.name], dtype=np.float64)[config[:, j]]
    p_yes = np.clip(score, 0.005, 0.95)
    return np.stack([p_yes, 1.0 - p_yes], axis=1)


def default_dag(schema: Schema | None = None) -> DagStructure:
    """Illustrative placeholder structure (the published expert graph is not
    machine-readable): profiling variables feed both outcomes, victimization
    feeds offending, offending drives every game answer except the control,
    and the control is isolated. Override with any model file."""
    schema = schema or default_schema()
    names = tuple(v.name for v in schema.network_variables)
    edges: list[tuple[str, str]] = []
    for p in _PROFILING_ORDER:
        edges.append((p, "Previous_CB_Victimization"))
        edges.append((p, DEFAULT_OUTCOME))
    edges.append(("Previous_CB_Victimization", DEFAULT_OUTCOME))
    for name, _ in _GAME_QUESTIONS:
        if name != DEFAULT_CONTROL:
            edges.append((DEFAULT_OUTCOME, name))
    return DagStructure(names, tuple(edges))


def build_default_generator(seed: int = 0) -> GeneratorSpec:
    """Construct the calibrated synthetic generator network."""
    schema = default_schema()
    specs = {v.name: v for v in schema.network_variables}
    targets = calibration_targets()
    dag = default_dag(schema)

    cpts: list[Cpt] = []
    for name in _PROFILING_ORDER:
        spec = specs[name]
        row = [targets[name][s] for s in spec.states]
        cpts.append(Cpt(name, (), [row]))

    profiling_specs = [specs[p] for p in _PROFILING_ORDER]
    cpts.append(Cpt(
        "Previous_CB_Victimization", tuple(_PROFILING_ORDER),
        _score_rows(profiling_specs, _VICTIMIZATION_BASE, _VICTIMIZATION_LOADINGS),
    ))

    offending_parents = tuple(_PROFILING_ORDER) + ("Previous_CB_Victimization",)
    offending_parent_specs = profiling_specs + [specs["Previous_CB_Victimization"]]
    loadings = dict(_OFFENDING_LOADINGS)
    loadings["Previous_CB_Victimization"] = _OFFENDING_VICTIMIZATION_LOADING
    cpts.append(Cpt(
        DEFAULT_OUTCOME, offending_parents,
        _score_rows(offending_parent_specs, _OFFENDING_BASE, loadings),
    ))

    n_control = specs[DEFAULT_CONTROL].cardinality
    cpts.append(Cpt(DEFAULT_CONTROL, (), [[1.0 / n_control] * n_control]))
    for name, rows in _GAME_CPTS.items():
        cpts.append(Cpt(name, (DEFAULT_OUTCOME,), list(rows)))

    network = build_network(schema.network_variables, dag, cpts)
    return GeneratorSpec(
        network=network,
        calibration=targets,
        outcome=DEFAULT_OUTCOME,
        planted_profiling=("Previous_CB_Victimization", "Yes"),
        strongest_game="A3Q7_HowToHelpPol",
        control=DEFAULT_CONTROL,
        seed=int(seed),
    )


def simulate_dataset(n: int, seed: int, network: Network | None = None,
                     schema: Schema | None = None) -> Dataset:
    """Ancestral-sample a dataset from the default (or given) generator."""
    if network is None:
        network = build_default_generator(seed).network
    schema = schema or default_schema()
    batch = ancestral_sample(network, n, seed)
    return dataset_from_batch(batch, schema)
