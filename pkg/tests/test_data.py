import numpy as np
import pytest

from riskbn.analysis import influence_strength, risk_profiles
from riskbn.data import (
    CALIBRATION_NOTES,
    PUBLISHED_MARGINALS,
    Dataset,
    FilterConfig,
    Schema,
    apply_filters,
    build_default_generator,
    calibration_targets,
    dataset_from_batch,
    default_dag,
    default_schema,
    load_dataset,
    save_dataset,
    simulate_dataset,
    summarize,
)
from riskbn.errors import (
    IllegalState,
    MissingMetaColumn,
    RaggedRow,
    UnknownColumn,
)
from riskbn.inference import marginal

EXPECTED_GAME_STATES = {
    "A1Q1_PhotoSharing": 2, "A1Q2_Sociable": 2, "A1Q3_MatthewMeme": 3,
    "A3Q1_PiratedContent": 2, "A3Q2_PolOrPaula": 3, "A3Q3_TimeOverrun": 2,
    "A3Q4_PolBullied": 3, "A3Q5_RemindMatthew": 3, "A3Q6_TalkToPol": 2,
    "A3Q7_HowToHelpPol": 4,
}


# --- schema ---------------------------------------------------------------------

def test_default_schema_game_question_states_golden():
    schema = default_schema()
    game = {v.name: v.cardinality for v in schema.variables if v.kind == "game"}
    assert game == EXPECTED_GAME_STATES


def test_default_schema_gender_states():
    spec = default_schema().get("Gender")
    assert spec.states == ("Male", "Female", "NonBinary")


def test_default_schema_profiling_cardinalities():
    schema = default_schema()
    cards = {v.name: v.cardinality for v in schema.variables
             if v.kind in ("demographic", "psychological")}
    assert cards == {
        "Gender": 3, "Age": 5, "Sexual_Orientation": 3, "Migratory_Background": 3,
        "Self_Esteem": 3, "Social_Support": 3, "Family_Support": 3,
        "Daily_Hours_Internet": 5, "Empathy": 2,
    }


def test_default_schema_single_offending_outcome():
    schema = default_schema()
    outcomes = [v.name for v in schema.variables if v.kind == "outcome"]
    assert outcomes == ["Previous_CB_Victimization", "Previous_CB_Offending"]
    for v in schema.variables:
        if v.kind == "outcome":
            assert v.states == ("Yes", "No")


def test_default_schema_meta_and_rt_columns():
    schema = default_schema()
    assert [v.name for v in schema.meta_variables] == ["honesty"]
    assert "rt_A3Q7_HowToHelpPol" in schema.response_time_columns
    assert len(schema.response_time_columns) == 10


def test_calibration_targets_are_distributions_near_published():
    targets = calibration_targets()
    for var, probs in targets.items():
        assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
        for state, p in probs.items():
            pub = PUBLISHED_MARGINALS[var].get(state)
            if pub is not None:
                assert abs(p - pub / 100.0) <= 0.005
    assert "Undisclosed" in targets["Sexual_Orientation"]
    assert "Gender" in CALIBRATION_NOTES


# --- ingestion -------------------------------------------------------------------

def test_header_only_file_is_empty_dataset():
    ds = load_dataset("Gender,Age\n", default_schema())
    assert ds.n == 0
    assert set(ds.columns) == {"Gender", "Age"}


def test_illegal_state_names_row_and_column():
    with pytest.raises(IllegalState) as exc:
        load_dataset("Gender\nMale\nBlue\n", default_schema())
    assert exc.value.row == 2
    assert exc.value.column == "Gender"


def test_question_mark_and_empty_are_missing():
    ds = load_dataset("Gender,Age\n?,12\nMale,\n", default_schema())
    assert ds.n == 2
    assert ds.columns["Gender"][0] == -1
    assert ds.columns["Age"][1] == -1
    assert ds.record(0) == {"Age": "12"}


def test_unknown_column_rejected():
    with pytest.raises(UnknownColumn):
        load_dataset("WrongName\nx\n", default_schema())


def test_ragged_row_rejected():
    with pytest.raises(RaggedRow) as exc:
        load_dataset("Gender,Age\nMale\n", default_schema())
    assert exc.value.row == 1


def test_rt_and_honesty_columns_parse():
    text = "A1Q1_PhotoSharing,rt_A1Q1_PhotoSharing,honesty\nAnswer1,950,Yes\nAnswer2,?,No\n"
    ds = load_dataset(text, default_schema())
    assert ds.response_times["rt_A1Q1_PhotoSharing"][0] == 950
    assert ds.response_times["rt_A1Q1_PhotoSharing"][1] == -1
    assert ds.columns["honesty"][1] == 1


def test_rt_must_be_nonnegative_integer():
    with pytest.raises(IllegalState):
        load_dataset("rt_A1Q1_PhotoSharing\nfast\n", default_schema())
    with pytest.raises(IllegalState):
        load_dataset("rt_A1Q1_PhotoSharing\n-5\n", default_schema())


def test_save_load_round_trip_preserves_missingness():
    text = ("Gender,Age,rt_A1Q1_PhotoSharing,honesty\n"
            "Male,12,900,Yes\n"
            ",14,?,\n"
            "NonBinary,?,400,No\n")
    schema = default_schema()
    ds = load_dataset(text, schema)
    again = load_dataset(save_dataset(ds), schema)
    assert again.n == ds.n
    for name, col in ds.columns.items():
        assert np.array_equal(again.columns[name], col)
    for name, col in ds.response_times.items():
        assert np.array_equal(again.response_times[name], col)


# --- filters ----------------------------------------------------------------------

def _meta_dataset():
    text = ("Previous_CB_Offending,rt_A1Q1_PhotoSharing,rt_A1Q2_Sociable,honesty\n"
            "Yes,900,1200,Yes\n"
            "No,100,1500,Yes\n"
            "Yes,踏,1000,No\n").replace("踏", "1600")
    return load_dataset(text, default_schema())


def test_filters_noop_when_all_pass():
    ds = _meta_dataset()
    out, report = apply_filters(ds, FilterConfig(min_response_time_ms=50))
    assert out.n == 3
    assert report.flagged_response_time == 0


def test_fast_answer_dropped_and_reported():
    ds = _meta_dataset()
    out, report = apply_filters(ds, FilterConfig(min_response_time_ms=800))
    assert report.flagged_response_time == 1
    assert out.n == 2
    # surviving records keep their values untouched
    assert out.record(0)["Previous_CB_Offending"] == "Yes"


def test_honesty_filter_drop_and_blank():
    ds = _meta_dataset()
    config = FilterConfig(min_response_time_ms=None, require_honesty=True)
    out, report = apply_filters(ds, config)
    assert report.flagged_honesty == 1
    assert out.n == 2

    blank = FilterConfig(min_response_time_ms=None, require_honesty=True, action="blank")
    out2, report2 = apply_filters(ds, blank)
    assert out2.n == 3
    assert out2.columns["Previous_CB_Offending"][2] == -1
    assert out2.columns["honesty"][2] == 1  # non-outcome cells untouched
    assert report2.flagged_honesty == 1


def test_missing_meta_column_raises():
    ds = load_dataset("Gender\nMale\n", default_schema())
    with pytest.raises(MissingMetaColumn):
        apply_filters(ds, FilterConfig(min_response_time_ms=800))
    with pytest.raises(MissingMetaColumn):
        apply_filters(ds, FilterConfig(min_response_time_ms=None, require_honesty=True))


# --- generator ----------------------------------------------------------------------

def test_generator_root_marginals_exact():
    gen = build_default_generator(0)
    targets = calibration_targets()
    for var, probs in targets.items():
        dist = marginal(gen.network, var)
        for state, p in probs.items():
            assert dist[state] == pytest.approx(p, abs=1e-9)


def test_generator_control_strength_is_zero():
    gen = build_default_generator(0)
    assert influence_strength(gen.network, gen.control, gen.outcome) == 0.0


def test_generator_strongest_game_beats_age():
    gen = build_default_generator(0)
    strong = influence_strength(gen.network, "A3Q7_HowToHelpPol", gen.outcome)
    weak = influence_strength(gen.network, "Age", gen.outcome)
    assert strong > weak


def test_generator_outcome_marginal_near_soft_prior():
    gen = build_default_generator(0)
    p = marginal(gen.network, gen.outcome)["Yes"]
    assert 0.08 <= p <= 0.14


def test_generator_planted_driver_tops_risk_profiles():
    gen = build_default_generator(0)
    net = gen.network
    pool = [v.name for v in net.schema
            if v.kind in ("demographic", "psychological", "outcome")
            and v.name != gen.outcome]
    rp = risk_profiles(net, gen.outcome, "Yes", pool, 5, 0.26)
    assert rp.profiles
    assert rp.frequency[0][0] == gen.planted_profiling
    share = rp.frequency[0][1] / len(rp.profiles)
    assert share > 0.8


# --- summaries ----------------------------------------------------------------------

def test_summarize_empty_dataset_reports_absent_percent():
    ds = load_dataset("Gender\n", default_schema())
    rows = [r for r in summarize(ds) if r.variable == "Gender"]
    assert all(r.count == 0 and r.percent is None for r in rows)


def test_summarize_single_record():
    ds = load_dataset("Gender,Age\nFemale,13\n", default_schema())
    rows = {(r.variable, r.state): r for r in summarize(ds)}
    assert rows[("Gender", "Female")].count == 1
    assert rows[("Gender", "Female")].percent == 100.0
    assert rows[("Gender", "Male")].percent == 0.0


def test_summarize_synthetic_matches_published_gender():
    ds = simulate_dataset(100_000, 42)
    rows = {(r.variable, r.state): r for r in summarize(ds)}
    assert rows[("Gender", "Male")].percent == pytest.approx(62.9, abs=1.0)


def test_simulate_dataset_fully_observed():
    ds = simulate_dataset(100, 3)
    assert ds.n == 100
    assert ds.provenance == "synthetic"
    for v in default_schema().network_variables:
        assert (ds.columns[v.name] >= 0).all()


def test_default_dag_rejects_foreign_schema():
    # placeholder structure only fits schemas that declare its variables
    schema = Schema((default_schema().variables[0],))
    with pytest.raises(Exception):
        default_dag(schema)
