"""Hotspot extraction and comparison.

A hotspot is the part of a trail snapshot above a fraction ``tau`` of that
snapshot's maximum, split into 8-connected regions. Hotspot masks are
compared with the Jaccard index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, sparse

from .geo_grid import GridSpec
from .trail import TrailField

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class ThresholdSpec:
    tau: float
    min_area: int = 1

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.min_area < 1:
            raise ValueError(f"min_area must be >= 1, got {self.min_area}")


@dataclass(frozen=True)
class Region:
    label: int
    cells: np.ndarray  # (n, 2) int array of (row, col), row-major sorted

    @property
    def area(self) -> int:
        return len(self.cells)


@dataclass(frozen=True, eq=False)
class HotspotSet:
    spec: GridSpec
    mask: np.ndarray
    regions: list[Region] = field(default_factory=list)

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __len__(self) -> int:
        return len(self.regions)

    @classmethod
    def empty(cls, spec: GridSpec) -> "HotspotSet":
        return cls(spec, np.zeros(spec.shape, dtype=bool), [])


def label_regions(mask: np.ndarray, min_area: int = 1) -> tuple[np.ndarray, list[Region]]:
    """8-connected components of ``mask`` with at least ``min_area`` cells.

    Returns the filtered mask and its regions, labelled 1..n in order of
    their first cell in row-major order.
    """
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return np.zeros(mask.shape, dtype=bool), []
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    keep = areas >= min_area
    keep[0] = False
    out_mask = keep[labels]
    # ndimage.label numbers components by first appearance in a row-major scan
    flat = np.flatnonzero(out_mask)
    lab = labels.ravel()[flat]
    order = np.argsort(lab, kind="stable")
    flat, lab = flat[order], lab[order]
    splits = np.flatnonzero(np.diff(lab)) + 1
    n_cols = mask.shape[1]
    regions = [Region(i, np.column_stack(np.divmod(chunk, n_cols)))
               for i, chunk in enumerate(np.split(flat, splits), start=1) if chunk.size]
    return out_mask, regions


def drop_small(mask: np.ndarray, min_area: int) -> np.ndarray:
    """``mask`` without its 8-connected components smaller than ``min_area``."""
    if min_area <= 1:
        return mask
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return mask
    keep = np.bincount(labels.ravel(), minlength=n + 1) >= min_area
    keep[0] = False
    return keep[labels]


def hotspot_set(mask: np.ndarray, spec: GridSpec, min_area: int = 1) -> HotspotSet:
    m, regions = label_regions(np.asarray(mask, dtype=bool), min_area)
    return HotspotSet(spec, m, regions)


def threshold_mask(values: np.ndarray, tau: float) -> np.ndarray:
    """Cells strictly above ``tau`` times the field maximum (empty if max is 0)."""
    peak = values.max()
    if peak <= 0:
        return np.zeros(values.shape, dtype=bool)
    return values > tau * peak


def extract(trail: TrailField, th: ThresholdSpec) -> HotspotSet:
    return hotspot_set(threshold_mask(trail.values, th.tau), trail.spec, th.min_area)


def _mask_of(x) -> np.ndarray:
    return x.mask if isinstance(x, HotspotSet) else np.asarray(x, dtype=bool)


def jaccard(a, b) -> float:
    """|A & B| / |A | B| over mask cells; 1.0 when both are empty."""
    if isinstance(a, HotspotSet) and isinstance(b, HotspotSet) and a.spec != b.spec:
        raise ValueError("hotspot sets live on different grids")
    ma, mb = _mask_of(a), _mask_of(b)
    if ma.shape != mb.shape:
        raise ValueError(f"mask shapes differ: {ma.shape} vs {mb.shape}")
    union = np.count_nonzero(ma | mb)
    if union == 0:
        return 1.0
    return np.count_nonzero(ma & mb) / union


def jaccard_matrix(masks) -> np.ndarray:
    """All-pairs Jaccard for a sequence of equally shaped masks.

    Entries are exact ratios of integer counts; empty-vs-empty pairs are 1.
    """
    masks = [_mask_of(m) for m in masks]
    if not masks:
        return np.zeros((0, 0))
    shape = masks[0].shape
    if any(m.shape != shape for m in masks):
        raise ValueError("mask shapes differ")
    return jaccard_matrix_from_cells([np.flatnonzero(m) for m in masks], int(np.prod(shape)))


def jaccard_matrix_from_cells(cells, n_cells: int) -> np.ndarray:
    """:func:`jaccard_matrix` for masks given as flat indices of their true cells."""
    n = len(cells)
    if n == 0:
        return np.zeros((0, 0))
    lengths = np.array([len(c) for c in cells])
    indptr = np.concatenate([[0], np.cumsum(lengths)])
    indices = np.concatenate(cells).astype(np.int64) if indptr[-1] else np.empty(0, np.int64)
    m = sparse.csr_matrix((np.ones(indptr[-1], dtype=np.int64), indices, indptr),
                          shape=(n, n_cells))
    inter = (m @ m.T).toarray()
    union = lengths[:, None] + lengths[None, :] - inter
    out = np.ones((n, n))
    nz = union > 0
    out[nz] = inter[nz] / union[nz]
    np.fill_diagonal(out, 1.0)
    return out


def intersect_masks(masks) -> np.ndarray:
    """Cell-wise AND of one or more masks."""
    masks = [_mask_of(m) for m in masks]
    if not masks:
        raise ValueError("intersect_masks needs at least one mask")
    shape = masks[0].shape
    out = masks[0].copy()
    for m in masks[1:]:
        if m.shape != shape:
            raise ValueError(f"mask shapes differ: {shape} vs {m.shape}")
        out &= m
    return out
