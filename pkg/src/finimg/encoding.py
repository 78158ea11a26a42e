"""Arrangements of a 1D feature vector into a 2D image grid.

Seven methods: sequential (SA), category chunks (CCA), Hilbert curve (HVA),
and their randomized controls (RA, WCR, BCR, HVR). Every grid carries a
provenance map from each cell back to its source feature index, with
ZERO_PAD marking padding cells; padded cells hold exactly 0.

Randomized methods draw all randomness from an explicit seed through
numpy's default PCG64 generator, so a published seed reproduces a grid.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset
from .hilbert import hilbert_d2xy, min_order
from .schema import FeatureSchema

ZERO_PAD = -1

RANDOMIZED_METHODS = ("ra", "wcr", "bcr", "hvr")
DETERMINISTIC_METHODS = ("sa", "cca", "hva")


class CapacityError(ValueError):
    """Raised when a vector does not fit the requested grid."""


class ChunkOverflowError(CapacityError):
    """Raised when a section has more features than its chunk holds."""


@dataclass(frozen=True)
class ImageGrid:
    cells: np.ndarray
    provenance: np.ndarray

    def __post_init__(self):
        if self.cells.shape != self.provenance.shape or self.cells.ndim != 2:
            raise ValueError("cells and provenance must be equal 2D shapes")

    @property
    def rows(self) -> int:
        return self.cells.shape[0]

    @property
    def cols(self) -> int:
        return self.cells.shape[1]

    def pad_count(self) -> int:
        return int((self.provenance == ZERO_PAD).sum())


def _grid_from_provenance(v: np.ndarray, provenance: np.ndarray) -> ImageGrid:
    if v.size == 0:
        cells = np.zeros(provenance.shape)
    else:
        cells = np.where(provenance >= 0, v[np.clip(provenance, 0, None)], 0.0)
    return ImageGrid(cells=cells.astype(float), provenance=provenance)


def sequential_arrange(v: np.ndarray, rows: int, cols: int) -> ImageGrid:
    """Row-major packing of v into rows x cols, zero-padded at the end."""
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    if d > rows * cols:
        raise CapacityError(f"{d} features exceed {rows}x{cols} grid")
    prov = np.full(rows * cols, ZERO_PAD, dtype=int)
    prov[:d] = np.arange(d)
    return _grid_from_provenance(v, prov.reshape(rows, cols))


def category_chunk_arrange(
    v: np.ndarray,
    schema: FeatureSchema,
    chunk_dims: tuple[int, int],
    chunk_layout: tuple[int, int],
) -> ImageGrid:
    """One zero-padded chunk per section, chunks tiled row-major."""
    v = np.asarray(v, dtype=float)
    h, w = chunk_dims
    grid_rows, grid_cols = chunk_layout
    sections = schema.section_order
    if len(sections) > grid_rows * grid_cols:
        raise CapacityError(
            f"{len(sections)} sections exceed the {grid_rows}x{grid_cols} chunk layout"
        )
    slices = schema.section_slices()
    prov = np.full((grid_rows * h, grid_cols * w), ZERO_PAD, dtype=int)
    for k, label in enumerate(sections):
        sl = slices[label]
        count = sl.stop - sl.start
        if count > h * w:
            raise ChunkOverflowError(
                f"section {label!r} has {count} features, chunk holds {h * w}"
            )
        chunk = np.full(h * w, ZERO_PAD, dtype=int)
        chunk[:count] = np.arange(sl.start, sl.stop)
        r0 = (k // grid_cols) * h
        c0 = (k % grid_cols) * w
        prov[r0 : r0 + h, c0 : c0 + w] = chunk.reshape(h, w)
    return _grid_from_provenance(v, prov)


def hilbert_arrange(v: np.ndarray) -> ImageGrid:
    """Place v along the minimal-order Hilbert curve, padding the tail."""
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    order = min_order(d)
    side = order.side
    prov = np.full((side, side), ZERO_PAD, dtype=int)
    for i in range(d):
        x, y = hilbert_d2xy(order, i)
        prov[side - 1 - y, x] = i
    return _grid_from_provenance(v, prov)


@dataclass(frozen=True)
class ArrangementSpec:
    """How to image a vector: method plus shape parameters.

    rows/cols apply to sa and ra; chunk_dims/chunk_layout to the chunked
    methods; Hilbert methods take their side from the feature count.
    Deterministic methods ignore the seed.
    """

    method: str
    rows: int = 0
    cols: int = 0
    chunk_dims: tuple[int, int] = (0, 0)
    chunk_layout: tuple[int, int] = (0, 0)
    seed: int = 0

    def __post_init__(self):
        if self.method not in DETERMINISTIC_METHODS + RANDOMIZED_METHODS:
            raise ValueError(f"unknown arrangement method {self.method!r}")


def default_spec(method: str, schema: FeatureSchema, seed: int = 0) -> ArrangementSpec:
    """Canvas defaults: chunk side covers the largest section, the chunk
    layout is two rows, and sa/ra reuse the chunked canvas so rectangular
    methods share one image size (18x27 for the 332-feature schema,
    8x16 for the 69-ratio schema)."""
    counts = schema.section_counts()
    side = max(4, math.isqrt(max(counts.values()) - 1) + 1)
    n_sections = len(schema.section_order)
    layout = (2, (n_sections + 1) // 2) if n_sections > 1 else (1, 1)
    return ArrangementSpec(
        method=method,
        rows=layout[0] * side,
        cols=layout[1] * side,
        chunk_dims=(side, side),
        chunk_layout=layout,
        seed=seed,
    )


def arrange(v: np.ndarray, schema: FeatureSchema, spec: ArrangementSpec) -> ImageGrid:
    """Dispatch on spec.method; randomized methods use spec.seed."""
    if spec.method == "sa":
        return sequential_arrange(v, spec.rows, spec.cols)
    if spec.method == "cca":
        return category_chunk_arrange(v, schema, spec.chunk_dims, spec.chunk_layout)
    if spec.method == "hva":
        return hilbert_arrange(v)
    return randomize_arrangement(v, schema, spec, spec.seed)


def randomize_arrangement(
    v: np.ndarray, schema: FeatureSchema, spec: ArrangementSpec, seed: int
) -> ImageGrid:
    """Seeded randomized controls of the deterministic arrangements.

    ra:  one uniform permutation of all features, then sequential packing.
    wcr: an independent uniform permutation inside each section chunk.
    bcr: a uniform permutation of the chunk positions, contents fixed.
    hvr: one uniform permutation of all features, then Hilbert packing.
    """
    v = np.asarray(v, dtype=float)
    rng = np.random.default_rng(seed)
    d = v.shape[0]
    if spec.method == "ra":
        grid = sequential_arrange(v, spec.rows, spec.cols)
        return _apply_position_map(grid, v, rng.permutation(d))
    if spec.method == "hvr":
        grid = hilbert_arrange(v)
        return _apply_position_map(grid, v, rng.permutation(d))
    if spec.method == "wcr":
        perm = np.arange(d)
        for label, sl in schema.section_slices().items():
            idx = np.arange(sl.start, sl.stop)
            perm[sl] = rng.permutation(idx)
        grid = category_chunk_arrange(v, schema, spec.chunk_dims, spec.chunk_layout)
        return _apply_position_map(grid, v, perm)
    if spec.method == "bcr":
        base = category_chunk_arrange(v, schema, spec.chunk_dims, spec.chunk_layout)
        n_sections = len(schema.section_order)
        slot_of_section = rng.permutation(n_sections)
        h, w = spec.chunk_dims
        grid_cols = spec.chunk_layout[1]
        prov = np.full_like(base.provenance, ZERO_PAD)
        for k in range(n_sections):
            r0, c0 = (k // grid_cols) * h, (k % grid_cols) * w
            s = int(slot_of_section[k])
            r1, c1 = (s // grid_cols) * h, (s % grid_cols) * w
            prov[r1 : r1 + h, c1 : c1 + w] = base.provenance[r0 : r0 + h, c0 : c0 + w]
        return _grid_from_provenance(v, prov)
    raise ValueError(f"{spec.method!r} is not a randomized method")


def _apply_position_map(grid: ImageGrid, v: np.ndarray, perm: np.ndarray) -> ImageGrid:
    """Placement slot that held feature i now holds feature perm[i]."""
    prov = grid.provenance.copy()
    occupied = prov >= 0
    prov[occupied] = perm[prov[occupied]]
    return _grid_from_provenance(v, prov)


def reduce_features(ds: Dataset, target: int) -> tuple[Dataset, FeatureSchema]:
    """Drop the features with the most missing values down to target.

    Ties keep the earlier feature; survivors keep their relative order.
    """
    count = len(ds.schema)
    if target > count:
        raise CapacityError(f"target {target} exceeds feature count {count}")
    missing = np.isnan(ds.values).sum(axis=0)
    # Drop candidates ordered by (missing desc, schema position desc).
    order = np.lexsort((-np.arange(count), -missing))
    drop = set(order[: count - target].tolist())
    keep = [i for i in range(count) if i not in drop]
    new_schema = FeatureSchema(
        tuple(ds.schema.features[i] for i in keep), ds.schema.dataset_kind
    )
    reduced = Dataset(
        schema=new_schema,
        entity_ids=ds.entity_ids,
        years=ds.years,
        quarters=ds.quarters,
        values=ds.values[:, keep],
        labels=ds.labels,
    )
    return reduced, new_schema


def save_grid(grid: ImageGrid, cells_path: str | Path, provenance_path: str | Path) -> None:
    """Write cell values and the provenance sidecar as CSV."""
    with open(cells_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in grid.cells:
            writer.writerow([repr(float(x)) for x in row])
    with open(provenance_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in grid.provenance:
            writer.writerow([int(x) for x in row])


def load_grid(cells_path: str | Path, provenance_path: str | Path) -> ImageGrid:
    with open(cells_path, newline="", encoding="utf-8") as fh:
        cells = np.array([[float(x) for x in row] for row in csv.reader(fh)])
    with open(provenance_path, newline="", encoding="utf-8") as fh:
        prov = np.array([[int(x) for x in row] for row in csv.reader(fh)], dtype=int)
    return ImageGrid(cells=cells, provenance=prov)


def render_pgm(grid: ImageGrid, path: str | Path) -> None:
    """Render cell values as an ASCII PGM image (min-max scaled to 0..255)."""
    lo = float(grid.cells.min())
    hi = float(grid.cells.max())
    if hi > lo:
        scaled = np.rint((grid.cells - lo) / (hi - lo) * 255).astype(int)
    else:
        scaled = np.zeros_like(grid.cells, dtype=int)
    lines = ["P2", f"{grid.cols} {grid.rows}", "255"]
    for row in scaled:
        lines.append(" ".join(str(int(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
