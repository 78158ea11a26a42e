"""Feature schemas and the 12-class rating scale.

A schema is an ordered list of features, each tagged with the accounting
section (fundamental data) or ratio category (ratio data) it belongs to.
Section-aware encodings rely on the features of one section being stored
contiguously and the sections appearing in their fixed statement order.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

FUNDAMENTAL_SECTIONS = (
    "balance_sheet",
    "balance_sheet_supplemental",
    "income_statement",
    "income_statement_supplemental",
    "special_items",
    "core_earnings",
)

RATIO_CATEGORIES = (
    "valuation",
    "profitability",
    "capitalization",
    "financial_soundness",
    "solvency",
    "liquidity",
    "efficiency",
    "other",
)

# The published per-section counts add to 330 while the feature total is
# 332 everywhere else; core_earnings absorbs the 2-feature difference.
CANONICAL_FUNDAMENTAL_COUNTS = (78, 45, 75, 33, 49, 52)
CANONICAL_RATIO_COUNTS = (13, 15, 4, 16, 6, 4, 7, 4)

_SECTION_PREFIX = {
    "balance_sheet": "bs",
    "balance_sheet_supplemental": "bss",
    "income_statement": "is",
    "income_statement_supplemental": "iss",
    "special_items": "spi",
    "core_earnings": "ce",
    "valuation": "val",
    "profitability": "prof",
    "capitalization": "cap",
    "financial_soundness": "fs",
    "solvency": "solv",
    "liquidity": "liq",
    "efficiency": "eff",
    "other": "oth",
}


class SchemaError(ValueError):
    """Raised when a feature schema violates its structural rules."""


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names with section labels, for one dataset kind."""

    features: tuple[tuple[str, str], ...]
    dataset_kind: str

    def __post_init__(self):
        if self.dataset_kind == "fundamental":
            labels = FUNDAMENTAL_SECTIONS
        elif self.dataset_kind == "ratio":
            labels = RATIO_CATEGORIES
        else:
            raise SchemaError(f"unknown dataset kind {self.dataset_kind!r}")
        if not self.features:
            raise SchemaError("schema has no features")
        names = [name for name, _ in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names are not unique")
        seen = []
        for name, section in self.features:
            if section not in labels:
                raise SchemaError(
                    f"feature {name!r} has unknown section {section!r} for "
                    f"{self.dataset_kind} data"
                )
            if not seen or seen[-1] != section:
                seen.append(section)
        if len(set(seen)) != len(seen):
            raise SchemaError("features of one section must be contiguous")
        # Sections may be a subset of the canonical list (feature reduction
        # can empty one out) but must keep the canonical statement order.
        canonical_pos = {label: i for i, label in enumerate(labels)}
        positions = [canonical_pos[s] for s in seen]
        if positions != sorted(positions):
            raise SchemaError(
                f"sections must follow the canonical order {labels}, got {tuple(seen)}"
            )

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.features)

    @property
    def sections(self) -> tuple[str, ...]:
        """Section labels in feature order (one entry per feature)."""
        return tuple(section for _, section in self.features)

    @property
    def section_order(self) -> tuple[str, ...]:
        """Sections present in this schema, in canonical statement order."""
        labels = FUNDAMENTAL_SECTIONS if self.dataset_kind == "fundamental" else RATIO_CATEGORIES
        present = {section for _, section in self.features}
        return tuple(label for label in labels if label in present)

    def section_counts(self) -> dict[str, int]:
        counts = {label: 0 for label in self.section_order}
        for _, section in self.features:
            counts[section] += 1
        return counts

    def section_slices(self) -> dict[str, slice]:
        """Index range of each section within the feature order."""
        out = {}
        start = 0
        sections = self.sections
        for label in self.section_order:
            count = sections.count(label)
            out[label] = slice(start, start + count)
            start += count
        return out


def build_schema(kind: str, counts: dict[str, int] | None = None) -> FeatureSchema:
    """Build a schema with generated feature names.

    counts maps section label to feature count; defaults to the canonical
    332-feature fundamental or 69-feature ratio layout.
    """
    order = FUNDAMENTAL_SECTIONS if kind == "fundamental" else RATIO_CATEGORIES
    if counts is None:
        canonical = (
            CANONICAL_FUNDAMENTAL_COUNTS
            if kind == "fundamental"
            else CANONICAL_RATIO_COUNTS
        )
        counts = dict(zip(order, canonical))
    features = []
    for label in order:
        prefix = _SECTION_PREFIX[label]
        for i in range(counts[label]):
            features.append((f"{prefix}_{i + 1:03d}", label))
    return FeatureSchema(tuple(features), kind)


def fundamental_schema() -> FeatureSchema:
    """The canonical 332-feature fundamental schema (78/45/75/33/49/50)."""
    return build_schema("fundamental")


def ratio_schema() -> FeatureSchema:
    """The canonical 69-feature ratio schema (13/15/4/16/6/4/7/4)."""
    return build_schema("ratio")


def save_schema(schema: FeatureSchema, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["name", "section"])
        for name, section in schema.features:
            writer.writerow([name, section])


def load_schema(path: str | Path) -> FeatureSchema:
    """Load a schema CSV (header ``name,section``), inferring the kind."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["name", "section"]:
            raise SchemaError(f"{path}: expected header 'name,section'")
        features = tuple((row[0], row[1]) for row in reader if row)
    sections = {section for _, section in features}
    if sections <= set(FUNDAMENTAL_SECTIONS):
        kind = "fundamental"
    elif sections <= set(RATIO_CATEGORIES):
        kind = "ratio"
    else:
        raise SchemaError(f"{path}: section labels match no known dataset kind")
    return FeatureSchema(features, kind)


class UnknownRatingError(ValueError):
    """Raised for rating strings outside the 24-entry mapping."""


@dataclass(frozen=True)
class RatingScale:
    """Mapping from agency rating strings to the 12 risk classes."""

    mapping: dict[str, int] = field(default_factory=lambda: dict(_RATING_MAPPING))
    descriptions: dict[int, str] = field(default_factory=lambda: dict(_DESCRIPTIONS))

    def n_classes(self) -> int:
        return max(self.mapping.values()) + 1


_RATING_MAPPING = {
    "AAA": 0,
    "AA+": 0,
    "AA": 1,
    "AA-": 1,
    "A+": 2,
    "A": 3,
    "A-": 4,
    "BBB+": 5,
    "BBB": 6,
    "BBB-": 7,
    "BB+": 8,
    "BB": 9,
    "BB-": 9,
    "B+": 10,
    "B": 10,
    "B-": 10,
    "CCC+": 11,
    "CCC": 11,
    "CCC-": 11,
    "CC": 11,
    "C": 11,
    "D": 11,
    "SD": 11,
    "N.M.": 11,
}

_DESCRIPTIONS = {
    0: "Prime",
    1: "High grade",
    2: "Upper medium grade",
    3: "Upper medium grade",
    4: "Upper medium grade",
    5: "Lower medium grade",
    6: "Lower medium grade",
    7: "Lower medium grade",
    8: "Non-investment grade speculative",
    9: "Non-investment grade speculative",
    10: "Highly speculative",
    11: "Substantial risks or in default",
}

# One representative rating string per class, used when writing CSV files.
CLASS_TO_RATING = {
    0: "AAA",
    1: "AA",
    2: "A+",
    3: "A",
    4: "A-",
    5: "BBB+",
    6: "BBB",
    7: "BBB-",
    8: "BB+",
    9: "BB",
    10: "B",
    11: "CCC",
}

N_CLASSES = 12


def map_rating(raw: str, scale: RatingScale | None = None) -> int:
    """Map a rating string to its class index (0 best .. 11 worst)."""
    scale = scale or RatingScale()
    key = raw.strip()
    try:
        return scale.mapping[key]
    except KeyError:
        raise UnknownRatingError(f"unknown rating {raw!r}") from None
