"""Activity hotspots from geotagged event streams via computational stigmergy.

Each event drops a truncated-cone mark on a metric grid. Marks evaporate
linearly and add up into a trail. Thresholding the trail gives hotspot
masks. Permanent hotspots persist every day; intermittent ones recur in
specific (day type, 2-hour slot) windows once permanent areas are removed.
"""

from .geo_grid import CellIndex, GridSpec, OutOfBounds, haversine_m, project, to_cell, unproject
from .hotspots import (HotspotSet, Region, ThresholdSpec, extract, intersect_masks, jaccard,
                       jaccard_matrix, label_regions)
from .pipeline import (AnalysisConfig, TemporalTuple, analyze, classify_day, detect_intermittent,
                       detect_permanent, index_events, similarity_matrix, tune_thresholds)
from .trail import EvaporationSpec, MarkSpec, TrailField, mark_footprint, run, step

__all__ = [
    "AnalysisConfig", "CellIndex", "EvaporationSpec", "GridSpec", "HotspotSet", "MarkSpec",
    "OutOfBounds", "Region", "TemporalTuple", "ThresholdSpec", "TrailField", "analyze",
    "classify_day", "detect_intermittent", "detect_permanent", "extract", "haversine_m",
    "index_events", "intersect_masks", "jaccard", "jaccard_matrix", "label_regions",
    "mark_footprint", "project", "run", "similarity_matrix", "step", "to_cell",
    "tune_thresholds", "unproject",
]

__version__ = "0.1.0"
