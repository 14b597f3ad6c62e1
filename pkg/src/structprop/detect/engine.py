"""Detection driver: runs every family detector and arbitrates row claims.

Families are tried in a fixed priority order.  A record accepted with exact
confidence claims its evidence rows; later records overlapping those rows are
dropped, which keeps the surviving set disjoint on evidence.  Heuristic
records never claim rows, so they cannot shadow an exact match ranked lower.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

from ..model import FEAS_TOL, INF, LinearRow, MipModel
from ..records import PRIORITY_ORDER, Confidence, Family, SemanticRecord
from .cp import (
    detect_alldifferent,
    detect_cardinality,
    detect_channel,
    detect_cumulative,
    detect_nvalue,
    detect_stretch,
)
from .rowview import ModelView, uniform_coefficient
from .zeroshot import (
    detect_bottleneck_exact_one,
    detect_disj_polyhedral,
    detect_one_hot_resource,
    detect_rostering_window,
    detect_unit_commitment_ramp,
)

DEFAULT_ROW_SCAN_CAP = 200_000


@dataclass(frozen=True)
class DetectConfig:
    tolerance: float = FEAS_TOL
    link_coverage_min: float = 0.8
    row_scan_cap: int = DEFAULT_ROW_SCAN_CAP


DETECTORS: dict[Family, Callable[[ModelView, DetectConfig], list[SemanticRecord]]] = {
    Family.DISJ_POLYHEDRAL: detect_disj_polyhedral,
    Family.UNIT_COMMITMENT_RAMP: detect_unit_commitment_ramp,
    Family.ROSTERING_WINDOW: detect_rostering_window,
    Family.BOTTLENECK_EXACT_ONE: detect_bottleneck_exact_one,
    Family.ONE_HOT_RESOURCE: detect_one_hot_resource,
    Family.CUMULATIVE: detect_cumulative,
    Family.CHANNEL: detect_channel,
    Family.ALL_DIFFERENT: detect_alldifferent,
    Family.NVALUE: detect_nvalue,
    Family.STRETCH: detect_stretch,
    Family.CARDINALITY: detect_cardinality,
}


@dataclass(frozen=True)
class DetectionReport:
    records: tuple[SemanticRecord, ...]
    family_counts: dict[str, int] = field(default_factory=dict)
    dropped: tuple[SemanticRecord, ...] = ()
    warnings: tuple[str, ...] = ()
    truncated: bool = False


def detect_family(
    model: MipModel, family: Family, config: DetectConfig | None = None
) -> list[SemanticRecord]:
    """Run a single family detector, without cross-family arbitration."""
    config = config or DetectConfig()
    view = ModelView(model, tolerance=config.tolerance, row_scan_cap=config.row_scan_cap)
    return DETECTORS[family](view, config)


def detect_all(model: MipModel, config: DetectConfig | None = None) -> DetectionReport:
    """Run every detector and keep at most one claimant per evidence row."""
    config = config or DetectConfig()
    view = ModelView(model, tolerance=config.tolerance, row_scan_cap=config.row_scan_cap)
    kept: list[SemanticRecord] = []
    dropped: list[SemanticRecord] = []
    claimed: set[int] = set()
    warnings: list[str] = []
    for family in PRIORITY_ORDER:
        try:
            found = DETECTORS[family](view, config)
        except Exception as exc:  # a detector must never sink the whole scan
            warnings.append(f"{family.value} detector failed: {exc}")
            continue
        found = sorted(found, key=lambda rec: tuple(sorted(rec.evidence)))
        for rec in found:
            evidence = set(rec.evidence)
            if evidence & claimed:
                dropped.append(rec)
                continue
            kept.append(rec)
            if rec.confidence is Confidence.EXACT:
                claimed |= evidence
    if view.truncated:
        warnings.append(
            f"row scan capped at {config.row_scan_cap} of {len(model.rows)} rows"
        )
    counts = Counter(rec.family.value for rec in kept)
    return DetectionReport(
        records=tuple(kept),
        family_counts=dict(sorted(counts.items())),
        dropped=tuple(dropped),
        warnings=tuple(warnings),
        truncated=view.truncated,
    )


# ---------------------------------------------------------------------------
# novelty gate: is a candidate already explained by known row patterns?
# ---------------------------------------------------------------------------


class NoveltyVerdict(Enum):
    DUPLICATE = "duplicate"
    EXTENSION = "extension"
    NOVEL = "novel"


@dataclass(frozen=True)
class FamilyDescriptor:
    """A known constraint family summarized by its row fingerprint multiset."""

    name: str
    patterns: tuple[str, ...]
    single_row: bool = False


def row_fingerprint(model: MipModel, row: LinearRow) -> str:
    """Coarse shape label for one row, ignoring names and term order."""
    variables = model.variables
    support = [(v, c) for v, c in row.terms if c != 0.0]
    binary = all(
        variables[v].is_integer
        and variables[v].lower >= 0.0
        and variables[v].upper <= 1.0
        for v, _ in support
    )
    is_equality = row.is_equality
    lower_finite = row.lhs > -INF
    upper_finite = row.rhs < INF
    shared = uniform_coefficient(support)
    if binary and support and shared is not None:
        lower, upper = row.lhs / shared, row.rhs / shared
        if shared < 0:
            lower, upper = upper, lower
        if is_equality and upper == 1.0:
            return "exact_one"
        if not is_equality and upper == 1.0 and lower <= 0.0:
            return "at_most_one"
        return "cardinality"
    if binary and support and lower_finite != upper_finite:
        oriented = (
            support if upper_finite else [(v, -c) for v, c in support]
        )
        if all(c > 0 for _, c in oriented):
            return "knapsack"
    if is_equality:
        return "mixed_equality"
    if lower_finite and upper_finite:
        return "range"
    return "mixed_inequality"


DEFAULT_REGISTRY: tuple[FamilyDescriptor, ...] = (
    FamilyDescriptor("set-partitioning", ("exact_one",), single_row=True),
    FamilyDescriptor("set-packing", ("at_most_one",), single_row=True),
    FamilyDescriptor("knapsack-cover", ("knapsack",), single_row=True),
    FamilyDescriptor("bound-counting", ("cardinality",), single_row=True),
)


def novelty_gate(
    candidate: SemanticRecord,
    registry: Iterable[FamilyDescriptor],
    model: MipModel,
) -> NoveltyVerdict:
    """Compare a record's evidence-row shapes against known descriptors.

    Duplicate: one single-row descriptor explains every evidence row, or a
    multi-row descriptor matches the shape multiset exactly.  Extension: a
    multi-row descriptor's shapes form a strict sub-multiset of the
    candidate's.  Anything else is novel.
    """
    descriptors = list(registry)
    shapes = Counter(
        row_fingerprint(model, model.rows[rid]) for rid in candidate.evidence
    )
    for desc in descriptors:
        if desc.single_row:
            pattern = desc.patterns[0]
            if shapes and set(shapes) == {pattern}:
                return NoveltyVerdict.DUPLICATE
        elif Counter(desc.patterns) == shapes:
            return NoveltyVerdict.DUPLICATE
    for desc in descriptors:
        if desc.single_row:
            continue
        known = Counter(desc.patterns)
        if known != shapes and all(shapes[k] >= n for k, n in known.items()):
            return NoveltyVerdict.EXTENSION
    return NoveltyVerdict.NOVEL
