"""Detector tests: row views, exact recovery, arbitration, novelty gate."""

import pytest

from structprop.detect import (
    DEFAULT_REGISTRY,
    DetectConfig,
    FamilyDescriptor,
    ModelView,
    NoveltyVerdict,
    detect_all,
    detect_family,
    novelty_gate,
    one_sided_facet,
    row_fingerprint,
)
from structprop.model import INF, Integrality, LinearRow, MipModel, Variable
from structprop.records import (
    CardinalityParams,
    Confidence,
    Family,
    SemanticRecord,
    records_equal,
)
from structprop.synth import ObfuscationConfig, obfuscate, reverse_sample

ALL_FAMILIES = list(Family)
RECOVERY_SEEDS = [0, 1, 2, 3, 4, 5, 6, 7]


def binary(vid, name):
    return Variable(vid, name, 0.0, 1.0, Integrality.BINARY)


def make_model(variables, row_specs):
    rows = [
        LinearRow(rid, f"r{rid}", tuple(terms), lhs, rhs)
        for rid, (terms, lhs, rhs) in enumerate(row_specs)
    ]
    return MipModel(variables, rows)


# ---------------------------------------------------------------------------
# row views


def test_vacuous_rows_are_filtered():
    model = make_model(
        [binary(0, "a"), binary(1, "b")],
        [
            ([(0, 1.0), (1, 1.0)], -INF, 5.0),  # max activity 2, never binds
            ([(0, 1.0), (1, 1.0)], -INF, 1.0),
        ],
    )
    view = ModelView(model)
    assert view.vacuous == {0}
    assert [r.id for r in view.active_rows] == [1]


def test_unit_view_rescales_and_swaps_bounds():
    model = make_model(
        [binary(0, "a"), binary(1, "b")],
        [
            ([(0, 2.0), (1, 2.0)], 2.0, 4.0),
            ([(0, -3.0), (1, -3.0)], -3.0, INF),
        ],
    )
    view = ModelView(model)
    scaled = view.unit_view(model.rows[0])
    assert scaled.support == (0, 1)
    assert (scaled.lower, scaled.upper) == (1.0, 2.0)

    flipped = view.unit_view(model.rows[1])
    assert (flipped.lower, flipped.upper) == (-INF, 1.0)
    assert not flipped.is_equality


def test_exact_one_and_at_most_one_helpers():
    model = make_model(
        [binary(0, "a"), binary(1, "b"), binary(2, "c")],
        [
            ([(0, 1.0), (1, 1.0), (2, 1.0)], 1.0, 1.0),
            ([(0, -2.0), (1, -2.0)], -2.0, INF),  # a + b <= 1 in disguise
            ([(0, 1.0), (1, 1.0)], 0.0, 2.0),  # two-sided, not a packing row
        ],
    )
    view = ModelView(model)
    assert [u.row for u in view.exact_one_rows()] == [0]
    assert [u.row for u in view.at_most_one_facets()] == [1]


def test_one_sided_facet_orientation():
    upper = LinearRow(0, "u", ((0, 2.0),), -INF, 6.0)
    lower = LinearRow(1, "l", ((0, 2.0),), 4.0, INF)
    ranged = LinearRow(2, "r", ((0, 2.0),), 0.0, 6.0)

    up = one_sided_facet(upper)
    assert up.terms == ((0, 2.0),) and up.bound == 6.0

    low = one_sided_facet(lower)
    assert low.terms == ((0, -2.0),) and low.bound == -4.0

    assert one_sided_facet(ranged) is None


# ---------------------------------------------------------------------------
# row fingerprints and the novelty gate

FINGERPRINT_VARS = [
    binary(0, "a"),
    binary(1, "b"),
    binary(2, "c"),
    Variable(3, "x", 0.0, 9.0, Integrality.INTEGER),
    Variable(4, "y", 0.0, 5.0),
]

FINGERPRINT_ROWS = [
    (([(0, 1.0), (1, 1.0), (2, 1.0)], 1.0, 1.0), "exact_one"),
    (([(0, -1.0), (1, -1.0), (2, -1.0)], -1.0, -1.0), "exact_one"),
    (([(0, 1.0), (1, 1.0)], -INF, 1.0), "at_most_one"),
    (([(0, 1.0), (1, 1.0), (2, 1.0)], 1.0, 2.0), "cardinality"),
    (([(0, 2.0), (1, 3.0), (2, 4.0)], -INF, 5.0), "knapsack"),
    (([(0, -2.0), (1, -3.0)], -5.0, INF), "knapsack"),
    (([(0, 2.0), (1, 3.0)], 2.0, INF), "mixed_inequality"),
    (([(3, 1.0), (4, 1.0)], 3.0, 3.0), "mixed_equality"),
    (([(3, 1.0), (4, 1.0)], 0.0, 4.0), "range"),
    (([(3, 1.0), (4, 1.0)], -INF, 4.0), "mixed_inequality"),
]

FINGERPRINT_MODEL = make_model(
    FINGERPRINT_VARS, [spec for spec, _ in FINGERPRINT_ROWS]
)


@pytest.mark.parametrize(
    "rid,expected",
    [(rid, label) for rid, (_, label) in enumerate(FINGERPRINT_ROWS)],
    ids=[f"{label}-{rid}" for rid, (_, label) in enumerate(FINGERPRINT_ROWS)],
)
def test_row_fingerprint_labels(rid, expected):
    assert row_fingerprint(FINGERPRINT_MODEL, FINGERPRINT_MODEL.rows[rid]) == expected


def gate_candidate(evidence):
    support = (0, 1, 2)
    return SemanticRecord(
        Family.CARDINALITY,
        support,
        CardinalityParams(support, 0.0, 2.0),
        tuple(evidence),
    )


def test_gate_single_knapsack_row_is_duplicate():
    verdict = novelty_gate(gate_candidate([4]), DEFAULT_REGISTRY, FINGERPRINT_MODEL)
    assert verdict is NoveltyVerdict.DUPLICATE


def test_gate_uniform_shape_multiset_is_duplicate():
    # two exact-one rows are both explained by set partitioning
    verdict = novelty_gate(gate_candidate([0, 1]), DEFAULT_REGISTRY, FINGERPRINT_MODEL)
    assert verdict is NoveltyVerdict.DUPLICATE


def test_gate_mixed_shapes_are_novel_against_single_row_registry():
    verdict = novelty_gate(gate_candidate([0, 4]), DEFAULT_REGISTRY, FINGERPRINT_MODEL)
    assert verdict is NoveltyVerdict.NOVEL


def test_gate_multi_row_descriptor_equal_and_strict_superset():
    assign_plus_budget = FamilyDescriptor(
        "assignment-with-budget", ("exact_one", "knapsack")
    )
    registry = (assign_plus_budget,)

    same = novelty_gate(gate_candidate([0, 4]), registry, FINGERPRINT_MODEL)
    assert same is NoveltyVerdict.DUPLICATE

    wider = novelty_gate(gate_candidate([0, 1, 4]), registry, FINGERPRINT_MODEL)
    assert wider is NoveltyVerdict.EXTENSION

    unrelated = novelty_gate(gate_candidate([8]), registry, FINGERPRINT_MODEL)
    assert unrelated is NoveltyVerdict.NOVEL


def test_gate_flags_composite_detection_as_novel():
    inst = reverse_sample(Family.ONE_HOT_RESOURCE, seed=5)
    report = detect_all(inst.model)
    assert len(report.records) == 1
    verdict = novelty_gate(report.records[0], DEFAULT_REGISTRY, inst.model)
    assert verdict is NoveltyVerdict.NOVEL


# ---------------------------------------------------------------------------
# exact recovery on planted instances


@pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.value)
@pytest.mark.parametrize("seed", RECOVERY_SEEDS)
def test_recovers_planted_record_clean(family, seed):
    inst = reverse_sample(family, seed=seed)
    report = detect_all(inst.model)
    assert len(report.records) == 1
    assert records_equal(report.records[0], inst.ground_truth)
    assert report.records[0].confidence is Confidence.EXACT
    assert not report.warnings


@pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.value)
@pytest.mark.parametrize("seed", RECOVERY_SEEDS)
def test_recovers_planted_record_obfuscated(family, seed):
    inst = reverse_sample(family, seed=seed)
    noisy = obfuscate(
        inst, ObfuscationConfig(noise_rows=10, sign_flip_prob=0.3, seed=seed)
    )
    report = detect_all(noisy.model)
    assert len(report.records) == 1
    assert records_equal(report.records[0], noisy.ground_truth)


@pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.value)
def test_noise_rows_never_reach_detectors(family):
    inst = reverse_sample(family, seed=13)
    noisy = obfuscate(inst, ObfuscationConfig(noise_rows=12, seed=13))
    view = ModelView(noisy.model)
    assert len(view.vacuous) >= 12
    assert view.vacuous.isdisjoint(noisy.ground_truth.evidence)


def test_family_counts_summarize_report():
    inst = reverse_sample(Family.CUMULATIVE, seed=3)
    report = detect_all(inst.model)
    assert report.family_counts == {Family.CUMULATIVE.value: 1}


# ---------------------------------------------------------------------------
# arbitration across detectors


def test_priority_drops_row_level_reinterpretations():
    inst = reverse_sample(Family.ALL_DIFFERENT, {"n": 3}, seed=7)

    # every structural row also reads as a bare counting constraint
    counting = detect_family(inst.model, Family.CARDINALITY)
    assert len(counting) == len(inst.model.rows)

    report = detect_all(inst.model)
    assert [r.family for r in report.records] == [Family.ALL_DIFFERENT]
    assert len(report.dropped) == len(inst.model.rows)
    assert {r.family for r in report.dropped} == {Family.CARDINALITY}


def test_failing_detector_becomes_warning(monkeypatch):
    from structprop.detect import engine

    def boom(view, config):
        raise RuntimeError("synthetic failure")

    monkeypatch.setitem(engine.DETECTORS, Family.STRETCH, boom)
    inst = reverse_sample(Family.STRETCH, seed=2)
    report = detect_all(inst.model)
    assert Family.STRETCH not in {r.family for r in report.records}
    assert any("Stretch detector failed" in w for w in report.warnings)


def test_row_scan_cap_reports_truncation():
    inst = reverse_sample(Family.CARDINALITY, seed=0)
    config = DetectConfig(row_scan_cap=0)
    report = detect_all(inst.model, config)
    assert report.truncated
    assert any("capped" in w for w in report.warnings)
